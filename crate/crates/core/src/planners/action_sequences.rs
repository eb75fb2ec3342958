//! Open-loop planning over fixed action sequences.
//!
//! Each sequence of `depth` actions is scored by the mean discounted return of
//! `n_rollouts` simulations from belief samples, applied regardless of the
//! observations. When there are more than `max_sequences` sequences, that many
//! are drawn uniformly instead. Ties go to the lexicographically first
//! sequence.

use super::{PlanError, PlannerConfig};
use crate::beliefs::WeightedParticleBelief;
use crate::model::{ActionStat, Environment, PolicyRunData};
use crate::rng::SimRng;

fn candidate_sequences(
    n_actions: usize,
    depth: usize,
    max_sequences: usize,
    rng: &mut SimRng,
) -> Vec<Vec<usize>> {
    let total = (n_actions as f64).powi(depth as i32);
    if total <= max_sequences as f64 {
        let mut out = Vec::with_capacity(total as usize);
        let mut seq = vec![0; depth];
        loop {
            out.push(seq.clone());
            let mut i = depth;
            loop {
                if i == 0 {
                    return out;
                }
                i -= 1;
                seq[i] += 1;
                if seq[i] < n_actions {
                    break;
                }
                seq[i] = 0;
            }
        }
    }
    let mut out: Vec<Vec<usize>> = (0..max_sequences)
        .map(|_| (0..depth).map(|_| rng.index(n_actions)).collect())
        .collect();
    out.sort();
    out.dedup();
    out
}

pub(crate) fn plan<E: Environment>(
    env: &E,
    belief: &WeightedParticleBelief<E::State>,
    cfg: &PlannerConfig,
    rng: &mut SimRng,
) -> Result<(usize, PolicyRunData), PlanError> {
    let actions = env.actions();
    let depth = cfg.horizon();
    let gamma = env.discount();
    let sequences = candidate_sequences(actions.len(), depth, cfg.max_sequences, rng);
    let mut best: Option<(usize, f64)> = None;
    let mut head_best: Vec<Option<f64>> = vec![None; actions.len()];
    for (si, seq) in sequences.iter().enumerate() {
        let mut sum = 0.0;
        for _ in 0..cfg.n_rollouts {
            let mut s = belief.sample(rng).clone();
            let mut scale = 1.0;
            for &a in seq {
                if env.is_terminal(&s) {
                    break;
                }
                let out = env.step(&s, &actions[a], rng)?;
                sum += scale * out.reward;
                scale *= gamma;
                s = out.next_state;
            }
        }
        let value = sum / cfg.n_rollouts as f64;
        if best.is_none_or(|(_, v)| value > v) {
            best = Some((si, value));
        }
        let h = &mut head_best[seq[0]];
        if h.is_none_or(|v| value > v) {
            *h = Some(value);
        }
    }
    let (si, _) = best.expect("at least one sequence");
    let data = PolicyRunData {
        nodes_expanded: sequences.len() as u64,
        root_actions: actions
            .iter()
            .zip(&head_best)
            .filter_map(|(a, v)| {
                v.map(|value| ActionStat {
                    action: a.to_string(),
                    visits: cfg.n_rollouts as u64,
                    value,
                })
            })
            .collect(),
        planning_time: 0.0,
        max_depth_reached: depth as u32,
    };
    Ok((sequences[si][0], data))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn enumeration_is_lexicographic() {
        let mut rng = SimRng::seed_from_u64(0);
        let s = candidate_sequences(3, 2, 100, &mut rng);
        assert_eq!(s.len(), 9);
        assert_eq!(s[0], vec![0, 0]);
        assert_eq!(s[1], vec![0, 1]);
        assert_eq!(s[8], vec![2, 2]);
        let sampled = candidate_sequences(3, 5, 10, &mut rng);
        assert!(sampled.len() <= 10);
        assert!(sampled.windows(2).all(|w| w[0] < w[1]));
    }
}
