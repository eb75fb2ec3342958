//! Simulation specifications and their canonical, hashable byte form.
//!
//! The canonical form is a whitespace-free JSON subset:
//!
//! * the top-level object and every parameter map list keys in ascending
//!   byte order;
//! * strings are quoted, with `"` and `\` backslash-escaped and control
//!   characters below U+0020 written as `\u00xx` (lowercase hex);
//! * integers are plain decimal, reals use [`render_real`] (shortest
//!   round-trip digits, positional, always with a `.`);
//! * booleans are `true` / `false`, lists are `[a,b,...]`.
//!
//! `schema_version` is part of the hashed bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::params::{render_real, ParamMap, ParamValue};

pub const SCHEMA_VERSION: u32 = 1;

/// Complete description of one episode run; the unit of caching.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationSpec {
    pub environment_id: String,
    pub environment_params: ParamMap,
    pub policy_id: String,
    pub policy_params: ParamMap,
    pub belief_id: String,
    pub belief_params: ParamMap,
    pub seed: u64,
    pub num_steps: u32,
    pub episode_index: u64,
    pub schema_version: u32,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SerializationError {
    #[error("parameter `{path}` is not finite ({value})")]
    NonFinite { path: String, value: f64 },
}

fn write_str(out: &mut String, s: &str) {
    out.push('"');
    for ch in s.chars() {
        match ch {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            c if (c as u32) < 0x20 => {
                let _ = write!(out, "\\u{:04x}", c as u32);
            }
            c => out.push(c),
        }
    }
    out.push('"');
}

fn write_value(out: &mut String, path: &str, v: &ParamValue) -> Result<(), SerializationError> {
    match v {
        ParamValue::Bool(b) => out.push_str(if *b { "true" } else { "false" }),
        ParamValue::Int(i) => {
            let _ = write!(out, "{i}");
        }
        ParamValue::Real(x) => {
            if !x.is_finite() {
                return Err(SerializationError::NonFinite {
                    path: path.to_string(),
                    value: *x,
                });
            }
            out.push_str(&render_real(*x));
        }
        ParamValue::Str(s) => write_str(out, s),
        ParamValue::List(items) => {
            out.push('[');
            for (i, item) in items.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                write_value(out, &format!("{path}[{i}]"), item)?;
            }
            out.push(']');
        }
    }
    Ok(())
}

fn write_map(out: &mut String, path: &str, map: &ParamMap) -> Result<(), SerializationError> {
    out.push('{');
    // BTreeMap<String, _> iterates in ascending byte order of the keys.
    for (i, (k, v)) in map.iter().enumerate() {
        if i > 0 {
            out.push(',');
        }
        write_str(out, k);
        out.push(':');
        write_value(out, &format!("{path}.{k}"), v)?;
    }
    out.push('}');
    Ok(())
}

impl SimulationSpec {
    pub fn canonical_bytes(&self) -> Result<Vec<u8>, SerializationError> {
        let mut out = String::with_capacity(256);
        out.push('{');
        out.push_str("\"belief_id\":");
        write_str(&mut out, &self.belief_id);
        out.push_str(",\"belief_params\":");
        write_map(&mut out, "belief_params", &self.belief_params)?;
        out.push_str(",\"environment_id\":");
        write_str(&mut out, &self.environment_id);
        out.push_str(",\"environment_params\":");
        write_map(&mut out, "environment_params", &self.environment_params)?;
        let _ = write!(out, ",\"episode_index\":{}", self.episode_index);
        let _ = write!(out, ",\"num_steps\":{}", self.num_steps);
        out.push_str(",\"policy_id\":");
        write_str(&mut out, &self.policy_id);
        out.push_str(",\"policy_params\":");
        write_map(&mut out, "policy_params", &self.policy_params)?;
        let _ = write!(out, ",\"schema_version\":{}", self.schema_version);
        let _ = write!(out, ",\"seed\":{}", self.seed);
        out.push('}');
        Ok(out.into_bytes())
    }

    /// Lowercase hex SHA-256 of [`Self::canonical_bytes`].
    pub fn hash(&self) -> Result<String, SerializationError> {
        Ok(sha256_hex(&self.canonical_bytes()?))
    }

    /// Digest of everything except the seed and episode index: specs that
    /// differ only in which episode they run share a cohort.
    pub fn cohort_digest(&self) -> Result<String, SerializationError> {
        let mut probe = self.clone();
        probe.seed = 0;
        probe.episode_index = 0;
        probe.hash()
    }
}

pub fn canonical_serialize(spec: &SimulationSpec) -> Result<Vec<u8>, SerializationError> {
    spec.canonical_bytes()
}

pub fn spec_hash(spec: &SimulationSpec) -> Result<String, SerializationError> {
    spec.hash()
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SimulationSpec {
        let mut env = ParamMap::new();
        env.insert("discount".into(), ParamValue::Real(0.95));
        env.insert("obs_accuracy".into(), ParamValue::Real(0.85));
        let mut pol = ParamMap::new();
        pol.insert("depth".into(), ParamValue::Int(10));
        SimulationSpec {
            environment_id: "tiger".into(),
            environment_params: env,
            policy_id: "pomcp".into(),
            policy_params: pol,
            belief_id: "weighted_pf".into(),
            belief_params: ParamMap::new(),
            seed: 42,
            num_steps: 30,
            episode_index: 0,
            schema_version: SCHEMA_VERSION,
        }
    }

    #[test]
    fn sha256_of_empty_input_matches_published_digest() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn canonical_bytes_are_exact() {
        let bytes = spec().canonical_bytes().unwrap();
        assert_eq!(
            String::from_utf8(bytes).unwrap(),
            "{\"belief_id\":\"weighted_pf\",\"belief_params\":{},\"environment_id\":\"tiger\",\
             \"environment_params\":{\"discount\":0.95,\"obs_accuracy\":0.85},\"episode_index\":0,\
             \"num_steps\":30,\"policy_id\":\"pomcp\",\"policy_params\":{\"depth\":10},\
             \"schema_version\":1,\"seed\":42}"
        );
    }

    #[test]
    fn insertion_order_does_not_matter() {
        let a = spec();
        let mut b = spec();
        let mut env = ParamMap::new();
        env.insert("obs_accuracy".into(), ParamValue::Real(0.85));
        env.insert("discount".into(), ParamValue::Real(0.95));
        b.environment_params = env;
        assert_eq!(a.canonical_bytes().unwrap(), b.canonical_bytes().unwrap());
    }

    #[test]
    fn differing_seed_changes_bytes() {
        let a = spec();
        let mut b = spec();
        b.seed += 1;
        assert_ne!(a.canonical_bytes().unwrap(), b.canonical_bytes().unwrap());
    }

    #[test]
    fn episode_index_changes_hash() {
        let a = spec();
        let mut b = spec();
        b.episode_index = 1;
        let (ha, hb) = (a.hash().unwrap(), b.hash().unwrap());
        assert_eq!(ha.len(), 64);
        assert!(ha.chars().all(|c| c.is_ascii_hexdigit() && !c.is_ascii_uppercase()));
        assert_ne!(ha, hb);
        assert_eq!(a.cohort_digest().unwrap(), b.cohort_digest().unwrap());
    }

    #[test]
    fn nan_parameter_is_rejected() {
        let mut s = spec();
        s.policy_params
            .insert("exploration_constant".into(), ParamValue::Real(f64::NAN));
        let err = s.canonical_bytes().unwrap_err();
        assert!(matches!(err, SerializationError::NonFinite { ref path, .. }
            if path == "policy_params.exploration_constant"));
        assert!(s.hash().is_err());
    }

    #[test]
    fn int_and_real_are_distinguished() {
        let mut a = spec();
        let mut b = spec();
        a.policy_params.insert("x".into(), ParamValue::Int(3));
        b.policy_params.insert("x".into(), ParamValue::Real(3.0));
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }

    #[test]
    fn strings_are_escaped() {
        let mut a = spec();
        a.environment_id = "a\"b\\c\nd".into();
        let text = String::from_utf8(a.canonical_bytes().unwrap()).unwrap();
        assert!(text.contains(r#""environment_id":"a\"b\\c\u000ad""#));
    }
}
