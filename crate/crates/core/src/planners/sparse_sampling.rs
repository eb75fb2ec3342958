//! Sparse sampling over particle beliefs.
//!
//! `V(b, 0) = 0` and `V(b, d) = max_a Q(b, a, d)`. For each action every
//! particle is propagated once; the belief reward is the weighted mean
//! particle reward. In sampled mode `width` observations are drawn from the
//! propagated particles and each yields a child belief; the child returns are
//! combined by the risk operator. In exhaustive mode every outcome of every
//! particle is enumerated and child beliefs are exact posteriors.

use super::{PlanError, PlannerConfig, RiskOperator};
use crate::beliefs::{propagate, WeightedParticleBelief};
use crate::model::{ActionStat, Environment, PolicyRunData};
use crate::rng::SimRng;

struct Search<'a, E: Environment> {
    env: &'a E,
    actions: Vec<E::Action>,
    width: usize,
    exhaustive: bool,
    risk: RiskOperator,
    gamma: f64,
    nodes: u64,
}

impl<E: Environment> Search<'_, E> {
    fn value(
        &mut self,
        b: &WeightedParticleBelief<E::State>,
        depth: usize,
        rng: &mut SimRng,
    ) -> Result<f64, PlanError> {
        if depth == 0 || b.particles().iter().all(|s| self.env.is_terminal(s)) {
            return Ok(0.0);
        }
        let q = self.q_values(b, depth, rng)?;
        Ok(q.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    fn q_values(
        &mut self,
        b: &WeightedParticleBelief<E::State>,
        depth: usize,
        rng: &mut SimRng,
    ) -> Result<Vec<f64>, PlanError> {
        (0..self.actions.len())
            .map(|a| {
                if self.exhaustive {
                    self.q_exhaustive(b, a, depth, rng)
                } else {
                    self.q_sampled(b, a, depth, rng)
                }
            })
            .collect()
    }

    fn q_sampled(
        &mut self,
        b: &WeightedParticleBelief<E::State>,
        a: usize,
        depth: usize,
        rng: &mut SimRng,
    ) -> Result<f64, PlanError> {
        self.nodes += 1;
        let action = self.actions[a].clone();
        let prop = propagate(b, self.env, &action, rng)?;
        let rho = prop.expected_reward();
        if prop.all_terminal() {
            return Ok(rho);
        }
        let mut returns = Vec::with_capacity(self.width);
        for _ in 0..self.width {
            let i = b.sample_index(rng);
            let obs = prop.outcomes()[i].observation.clone();
            let child = prop.condition(self.env, &action, &obs, rng)?;
            returns.push(rho + self.gamma * self.value(&child, depth - 1, rng)?);
        }
        Ok(self.risk.apply(&returns))
    }

    fn q_exhaustive(
        &mut self,
        b: &WeightedParticleBelief<E::State>,
        a: usize,
        depth: usize,
        rng: &mut SimRng,
    ) -> Result<f64, PlanError> {
        self.nodes += 1;
        let action = &self.actions[a];
        // Per distinct observation: probability, reward mass, weighted states.
        #[allow(clippy::type_complexity)]
        let mut groups: Vec<(E::Observation, f64, f64, Vec<E::State>, Vec<f64>)> = Vec::new();
        for (s, w) in b.iter() {
            let outcomes = self.env.outcomes(s, action).ok_or_else(|| {
                PlanError::InvalidConfig(format!(
                    "exhaustive sparse sampling needs enumerable outcomes, which `{}` does not provide",
                    self.env.id()
                ))
            })?;
            for o in outcomes {
                let p = w * o.probability;
                if p == 0.0 {
                    continue;
                }
                let out = o.outcome;
                match groups.iter_mut().find(|g| g.0 == out.observation) {
                    Some(g) => {
                        g.1 += p;
                        g.2 += p * out.reward;
                        g.3.push(out.next_state);
                        g.4.push(p);
                    }
                    None => groups.push((out.observation, p, p * out.reward, vec![out.next_state], vec![p])),
                }
            }
        }
        let mut branches = Vec::with_capacity(groups.len());
        for (_, p, reward_mass, states, weights) in groups {
            let child = WeightedParticleBelief::new(states, weights)?;
            let v = self.value(&child, depth - 1, rng)?;
            branches.push((p, reward_mass / p + self.gamma * v));
        }
        Ok(self.risk.apply_weighted(&branches))
    }
}

/// Root action values; the planner picks the first maximizer.
pub(crate) fn root_q_values<E: Environment>(
    env: &E,
    belief: &WeightedParticleBelief<E::State>,
    cfg: &PlannerConfig,
    rng: &mut SimRng,
) -> Result<(Vec<f64>, u64), PlanError> {
    let actions = env.actions();
    let depth = cfg.horizon();
    if !cfg.exhaustive {
        let needed = ((actions.len() * cfg.width) as f64).powi(depth as i32);
        if needed > cfg.max_nodes as f64 {
            return Err(PlanError::Budget {
                needed,
                cap: cfg.max_nodes,
            });
        }
    }
    let mut search = Search {
        env,
        actions,
        width: cfg.width,
        exhaustive: cfg.exhaustive,
        risk: cfg.risk,
        gamma: env.discount(),
        nodes: 0,
    };
    let q = search.q_values(belief, depth, rng)?;
    Ok((q, search.nodes))
}

pub(crate) fn plan<E: Environment>(
    env: &E,
    belief: &WeightedParticleBelief<E::State>,
    cfg: &PlannerConfig,
    rng: &mut SimRng,
) -> Result<(usize, PolicyRunData), PlanError> {
    let (q, nodes) = root_q_values(env, belief, cfg, rng)?;
    let mut best = 0;
    for (i, v) in q.iter().enumerate() {
        if *v > q[best] {
            best = i;
        }
    }
    let visits = if cfg.exhaustive { 1 } else { cfg.width as u64 };
    let data = PolicyRunData {
        nodes_expanded: nodes,
        root_actions: env
            .actions()
            .iter()
            .zip(&q)
            .map(|(a, v)| ActionStat {
                action: a.to_string(),
                visits,
                value: *v,
            })
            .collect(),
        planning_time: 0.0,
        max_depth_reached: cfg.horizon() as u32,
    };
    Ok((best, data))
}
