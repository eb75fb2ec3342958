//! Content-addressed episode cache.
//!
//! Entry `<root>/<key[0..2]>/<key>` holds a text header followed by the JSON
//! payload:
//!
//! ```text
//! POMDPCACHE 1
//! key <64 hex>
//! created_at <RFC 3339 UTC>
//! sha256 <64 hex of payload>
//! length <payload bytes>
//!
//! <payload>
//! ```
//!
//! Entries are written to a temporary file in the same directory, fsynced and
//! renamed into place, so a visible entry is always complete. Reads verify
//! the header, checksum, length and embedded spec hash; anything that fails
//! is moved to `<root>/quarantine/` and reported as a miss.

use std::fs::{self, File, OpenOptions};
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::{Duration, SystemTime};

use chrono::{DateTime, SecondsFormat, Utc};

use crate::evaluation::EpisodeRecord;
use crate::model::sha256_hex;

const MAGIC: &str = "POMDPCACHE 1";
const QUARANTINE: &str = "quarantine";
const TEMP_PREFIX: &str = ".tmp-";

static TEMP_COUNTER: AtomicU64 = AtomicU64::new(0);

/// Point in a cache write at which an injected fault may fire.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WritePoint {
    /// The temporary file is complete and synced but not yet renamed.
    BeforeRename,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("cache I/O error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("cannot serialize record: {0}")]
    Serialize(String),
    #[error("invalid cache key `{0}`")]
    InvalidKey(String),
    #[error("write interrupted")]
    Interrupted,
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> CacheError + '_ {
    move |source| CacheError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PutOutcome {
    Written,
    /// A valid entry already existed; nothing was written.
    AlreadyPresent,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct CacheStats {
    pub entries: u64,
    pub bytes: u64,
    pub quarantined: u64,
    /// Leftover temporary files from interrupted writes.
    pub temporary: u64,
}

#[derive(Clone, Debug)]
pub struct Cache {
    root: PathBuf,
}

fn valid_key(key: &str) -> bool {
    key.len() == 64 && key.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}

struct Header {
    key: String,
    created_at: DateTime<Utc>,
    sha256: String,
    length: usize,
}

/// Splits an entry into its header and payload, checking the framing only.
fn parse_entry(bytes: &[u8]) -> Option<(Header, &[u8])> {
    let mut lines = Vec::with_capacity(6);
    let mut offset = 0;
    while lines.len() < 6 {
        let rest = &bytes[offset..];
        let nl = rest.iter().position(|&b| b == b'\n')?;
        lines.push(std::str::from_utf8(&rest[..nl]).ok()?);
        offset += nl + 1;
    }
    if lines[0] != MAGIC || !lines[5].is_empty() {
        return None;
    }
    let field = |line: &str, name: &str| line.strip_prefix(name)?.strip_prefix(' ').map(str::to_string);
    let header = Header {
        key: field(lines[1], "key")?,
        created_at: DateTime::parse_from_rfc3339(&field(lines[2], "created_at")?)
            .ok()?
            .with_timezone(&Utc),
        sha256: field(lines[3], "sha256")?,
        length: field(lines[4], "length")?.parse().ok()?,
    };
    Some((header, &bytes[offset..]))
}

impl Cache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn entry_path(&self, key: &str) -> PathBuf {
        self.root.join(&key[..2]).join(key)
    }

    fn quarantine_dir(&self) -> PathBuf {
        self.root.join(QUARANTINE)
    }

    fn quarantine(&self, path: &Path, key: &str) {
        let dir = self.quarantine_dir();
        if fs::create_dir_all(&dir).is_err() {
            return;
        }
        let stamp = Utc::now().format("%Y%m%dT%H%M%S%.9fZ");
        let target = dir.join(format!("{key}.{stamp}"));
        if fs::rename(path, &target).is_err() {
            let _ = fs::remove_file(path);
        }
    }

    /// Verifies an entry's bytes and decodes the record.
    fn decode(key: &str, bytes: &[u8]) -> Option<EpisodeRecord> {
        let (header, payload) = parse_entry(bytes)?;
        if header.key != key || header.length != payload.len() || sha256_hex(payload) != header.sha256
        {
            return None;
        }
        let record: EpisodeRecord = serde_json::from_slice(payload).ok()?;
        (record.spec_hash == key).then_some(record)
    }

    /// Returns the record for `key` if a complete, verified entry exists.
    /// Corrupt entries are quarantined and reported as a miss.
    pub fn get(&self, key: &str) -> Result<Option<EpisodeRecord>, CacheError> {
        if !valid_key(key) {
            return Err(CacheError::InvalidKey(key.to_string()));
        }
        let path = self.entry_path(key);
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(io_err(&path)(e)),
        };
        match Self::decode(key, &bytes) {
            Some(r) => Ok(Some(r)),
            None => {
                self.quarantine(&path, key);
                Ok(None)
            }
        }
    }

    pub fn contains(&self, key: &str) -> bool {
        matches!(self.get(key), Ok(Some(_)))
    }

    pub fn put(&self, key: &str, record: &EpisodeRecord) -> Result<PutOutcome, CacheError> {
        self.put_with(key, record, |_| Ok(()))
    }

    /// Like [`Cache::put`], calling `hook` at each [`WritePoint`]; an error
    /// from the hook abandons the write at that point.
    pub fn put_with(
        &self,
        key: &str,
        record: &EpisodeRecord,
        mut hook: impl FnMut(WritePoint) -> Result<(), CacheError>,
    ) -> Result<PutOutcome, CacheError> {
        if !valid_key(key) || record.spec_hash != key {
            return Err(CacheError::InvalidKey(key.to_string()));
        }
        if self.contains(key) {
            return Ok(PutOutcome::AlreadyPresent);
        }
        let payload =
            serde_json::to_vec(record).map_err(|e| CacheError::Serialize(e.to_string()))?;
        let created = Utc::now().to_rfc3339_opts(SecondsFormat::Nanos, true);
        let mut bytes = format!(
            "{MAGIC}\nkey {key}\ncreated_at {created}\nsha256 {}\nlength {}\n\n",
            sha256_hex(&payload),
            payload.len()
        )
        .into_bytes();
        bytes.extend_from_slice(&payload);

        let dir = self.root.join(&key[..2]);
        fs::create_dir_all(&dir).map_err(io_err(&dir))?;
        let tmp = dir.join(format!(
            "{TEMP_PREFIX}{key}-{}-{}",
            std::process::id(),
            TEMP_COUNTER.fetch_add(1, Ordering::Relaxed)
        ));
        {
            let mut f = OpenOptions::new()
                .write(true)
                .create_new(true)
                .open(&tmp)
                .map_err(io_err(&tmp))?;
            f.write_all(&bytes).map_err(io_err(&tmp))?;
            f.sync_all().map_err(io_err(&tmp))?;
        }
        if let Err(e) = hook(WritePoint::BeforeRename) {
            // A real crash would leave the temporary file behind; so do we.
            return Err(e);
        }
        let target = self.entry_path(key);
        if let Err(e) = fs::rename(&tmp, &target) {
            let _ = fs::remove_file(&tmp);
            return Err(io_err(&target)(e));
        }
        if let Ok(d) = File::open(&dir) {
            let _ = d.sync_all();
        }
        Ok(PutOutcome::Written)
    }

    fn shard_dirs(&self) -> Vec<PathBuf> {
        let Ok(rd) = fs::read_dir(&self.root) else {
            return Vec::new();
        };
        let mut dirs: Vec<PathBuf> = rd
            .filter_map(Result::ok)
            .filter(|e| {
                let name = e.file_name();
                let name = name.to_string_lossy();
                name.len() == 2 && e.path().is_dir()
            })
            .map(|e| e.path())
            .collect();
        dirs.sort();
        dirs
    }

    pub fn stats(&self) -> CacheStats {
        let mut s = CacheStats::default();
        for dir in self.shard_dirs() {
            for e in fs::read_dir(&dir).into_iter().flatten().flatten() {
                let name = e.file_name().to_string_lossy().into_owned();
                let len = e.metadata().map(|m| m.len()).unwrap_or(0);
                if name.starts_with(TEMP_PREFIX) {
                    s.temporary += 1;
                } else if valid_key(&name) {
                    s.entries += 1;
                    s.bytes += len;
                }
            }
        }
        if let Ok(rd) = fs::read_dir(self.quarantine_dir()) {
            s.quarantined = rd.filter_map(Result::ok).count() as u64;
        }
        s
    }

    /// Deletes entries (and leftover temporary files) older than `age`.
    /// Returns the number of entries deleted.
    pub fn gc(&self, age: Duration) -> Result<u64, CacheError> {
        let now = SystemTime::now();
        let cutoff = Utc::now() - chrono::Duration::from_std(age).unwrap_or(chrono::Duration::MAX);
        let mut deleted = 0;
        for dir in self.shard_dirs() {
            for e in fs::read_dir(&dir).map_err(io_err(&dir))?.flatten() {
                let path = e.path();
                let name = e.file_name().to_string_lossy().into_owned();
                if name.starts_with(TEMP_PREFIX) {
                    let old = e
                        .metadata()
                        .and_then(|m| m.modified())
                        .ok()
                        .and_then(|t| now.duration_since(t).ok())
                        .is_some_and(|d| d >= age);
                    if old {
                        let _ = fs::remove_file(&path);
                    }
                    continue;
                }
                if !valid_key(&name) {
                    continue;
                }
                let created = fs::read(&path)
                    .ok()
                    .and_then(|b| parse_entry(&b).map(|(h, _)| h.created_at));
                if created.is_none_or(|c| c <= cutoff) {
                    fs::remove_file(&path).map_err(io_err(&path))?;
                    deleted += 1;
                }
            }
        }
        Ok(deleted)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(key: &str) -> EpisodeRecord {
        EpisodeRecord {
            spec_hash: key.to_string(),
            discounted_return: 1.5,
            undiscounted_return: 2.0,
            steps_taken: 0,
            goal_reached: true,
            safety_event_count: 0,
            belief_resets: 0,
            per_step: Vec::new(),
            wall_time: 0.25,
        }
    }

    fn key(i: u8) -> String {
        sha256_hex(&[i])
    }

    #[test]
    fn miss_put_get_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        let k = key(1);
        assert_eq!(c.get(&k).unwrap(), None);
        assert_eq!(c.put(&k, &record(&k)).unwrap(), PutOutcome::Written);
        assert_eq!(c.get(&k).unwrap(), Some(record(&k)));
        assert_eq!(c.put(&k, &record(&k)).unwrap(), PutOutcome::AlreadyPresent);
        assert_eq!(c.stats().entries, 1);
    }

    #[test]
    fn interrupted_write_is_a_miss() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        let k = key(2);
        let r = c.put_with(&k, &record(&k), |_| Err(CacheError::Interrupted));
        assert!(matches!(r, Err(CacheError::Interrupted)));
        assert_eq!(c.get(&k).unwrap(), None);
        let s = c.stats();
        assert_eq!((s.entries, s.temporary), (0, 1));
        // The next writer succeeds regardless of the leftover.
        assert_eq!(c.put(&k, &record(&k)).unwrap(), PutOutcome::Written);
    }

    #[test]
    fn truncated_entry_is_quarantined() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        let k = key(3);
        c.put(&k, &record(&k)).unwrap();
        let path = c.entry_path(&k);
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() - 5]).unwrap();
        assert_eq!(c.get(&k).unwrap(), None);
        assert!(!path.exists());
        assert_eq!(c.stats().quarantined, 1);
    }

    #[test]
    fn entry_under_the_wrong_key_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        let (a, b) = (key(4), key(5));
        c.put(&a, &record(&a)).unwrap();
        fs::create_dir_all(c.entry_path(&b).parent().unwrap()).unwrap();
        fs::copy(c.entry_path(&a), c.entry_path(&b)).unwrap();
        assert_eq!(c.get(&b).unwrap(), None);
    }

    #[test]
    fn gc_with_zero_age_deletes_everything() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        for i in 0..5 {
            let k = key(i);
            c.put(&k, &record(&k)).unwrap();
        }
        assert_eq!(c.gc(Duration::from_secs(3600)).unwrap(), 0);
        assert_eq!(c.gc(Duration::ZERO).unwrap(), 5);
        assert_eq!(c.stats().entries, 0);
    }

    #[test]
    fn invalid_keys() {
        let dir = tempfile::tempdir().unwrap();
        let c = Cache::new(dir.path());
        assert!(c.get("../etc/passwd").is_err());
        let k = key(6);
        assert!(c.put(&key(7), &record(&k)).is_err());
    }
}
