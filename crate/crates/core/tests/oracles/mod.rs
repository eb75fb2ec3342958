//! Independent reference computations for the Tiger problem, written against
//! the problem definition only (no library code).
//!
//! Belief is `b = P(tiger behind the left door)`. Opening a door ends the
//! episode. Listening reports the tiger's side with probability `accuracy`.

#![allow(dead_code)]

use std::collections::HashMap;

#[derive(Clone, Copy, Debug)]
pub struct TigerOracle {
    pub accuracy: f64,
    pub listen: f64,
    pub wrong: f64,
    pub correct: f64,
    pub gamma: f64,
}

/// Actions in library order.
pub const LISTEN: usize = 0;
pub const OPEN_LEFT: usize = 1;
pub const OPEN_RIGHT: usize = 2;

impl Default for TigerOracle {
    fn default() -> Self {
        Self {
            accuracy: 0.85,
            listen: -1.0,
            wrong: -100.0,
            correct: 10.0,
            gamma: 0.95,
        }
    }
}

impl TigerOracle {
    pub fn open_reward(&self, b: f64, action: usize) -> f64 {
        match action {
            OPEN_LEFT => b * self.wrong + (1.0 - b) * self.correct,
            OPEN_RIGHT => b * self.correct + (1.0 - b) * self.wrong,
            _ => unreachable!(),
        }
    }

    /// `(P(o | b), posterior)` for hearing left (`true`) or right.
    pub fn listen_branch(&self, b: f64, hear_left: bool) -> (f64, f64) {
        let q = self.accuracy;
        let (l, r) = if hear_left {
            (q * b, (1.0 - q) * (1.0 - b))
        } else {
            ((1.0 - q) * b, q * (1.0 - b))
        };
        let p = l + r;
        (p, l / p)
    }

    /// Depth-limited expectimax action values, `V_0 = 0`.
    pub fn expectimax_q(&self, b: f64, depth: usize) -> [f64; 3] {
        assert!(depth >= 1);
        let mut listen = self.listen;
        if depth > 1 {
            for hear_left in [true, false] {
                let (p, b2) = self.listen_branch(b, hear_left);
                listen += self.gamma * p * self.expectimax_v(b2, depth - 1);
            }
        }
        [listen, self.open_reward(b, OPEN_LEFT), self.open_reward(b, OPEN_RIGHT)]
    }

    pub fn expectimax_v(&self, b: f64, depth: usize) -> f64 {
        if depth == 0 {
            return 0.0;
        }
        self.expectimax_q(b, depth)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Posterior after a net count `d` of hear-left minus hear-right from
    /// the uniform prior.
    pub fn belief_at(&self, d: i64) -> f64 {
        let ratio = ((1.0 - self.accuracy) / self.accuracy).powi(d as i32);
        1.0 / (1.0 + ratio)
    }

    /// Exact optimal value of the `horizon`-step problem from the uniform
    /// belief, by dynamic programming over the net count.
    pub fn finite_horizon_value(&self, horizon: usize) -> f64 {
        let mut memo = HashMap::new();
        self.count_value(0, horizon, &mut memo)
    }

    fn count_value(&self, d: i64, h: usize, memo: &mut HashMap<(i64, usize), f64>) -> f64 {
        if h == 0 {
            return 0.0;
        }
        if let Some(&v) = memo.get(&(d, h)) {
            return v;
        }
        let b = self.belief_at(d);
        let (pl, _) = self.listen_branch(b, true);
        let listen = self.listen
            + self.gamma
                * (pl * self.count_value(d + 1, h - 1, memo)
                    + (1.0 - pl) * self.count_value(d - 1, h - 1, memo));
        let v = listen
            .max(self.open_reward(b, OPEN_LEFT))
            .max(self.open_reward(b, OPEN_RIGHT));
        memo.insert((d, h), v);
        v
    }

    /// Expected discounted return over `horizon` steps of the policy that
    /// acts greedily on depth-`depth` expectimax values (first maximizer).
    pub fn expectimax_policy_value(&self, depth: usize, horizon: usize) -> f64 {
        let mut memo = HashMap::new();
        self.policy_value(0, depth, horizon, &mut memo)
    }

    fn policy_value(
        &self,
        d: i64,
        depth: usize,
        h: usize,
        memo: &mut HashMap<(i64, usize), f64>,
    ) -> f64 {
        if h == 0 {
            return 0.0;
        }
        if let Some(&v) = memo.get(&(d, h)) {
            return v;
        }
        let b = self.belief_at(d);
        let q = self.expectimax_q(b, depth);
        let mut a = 0;
        for i in 1..3 {
            if q[i] > q[a] {
                a = i;
            }
        }
        let v = if a == LISTEN {
            let (pl, _) = self.listen_branch(b, true);
            self.listen
                + self.gamma
                    * (pl * self.policy_value(d + 1, depth, h - 1, memo)
                        + (1.0 - pl) * self.policy_value(d - 1, depth, h - 1, memo))
        } else {
            self.open_reward(b, a)
        };
        memo.insert((d, h), v);
        v
    }
}

/// Infinite-horizon value function on a uniform belief grid, by value
/// iteration with linear interpolation between grid points.
pub struct GridValue {
    values: Vec<f64>,
}

impl GridValue {
    pub fn solve(m: &TigerOracle, n_points: usize, tol: f64) -> Self {
        let step = 1.0 / (n_points - 1) as f64;
        let beliefs: Vec<f64> = (0..n_points).map(|i| i as f64 * step).collect();
        let mut values = vec![0.0; n_points];
        loop {
            let current = GridValue { values };
            let next: Vec<f64> = beliefs
                .iter()
                .map(|&b| {
                    let mut listen = m.listen;
                    for hear_left in [true, false] {
                        let (p, b2) = m.listen_branch(b, hear_left);
                        if p > 0.0 {
                            listen += m.gamma * p * current.value_at(b2);
                        }
                    }
                    listen
                        .max(m.open_reward(b, OPEN_LEFT))
                        .max(m.open_reward(b, OPEN_RIGHT))
                })
                .collect();
            let delta = next
                .iter()
                .zip(&current.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            values = next;
            if delta < tol {
                return GridValue { values };
            }
        }
    }

    pub fn value_at(&self, b: f64) -> f64 {
        let n = self.values.len() - 1;
        let x = b.clamp(0.0, 1.0) * n as f64;
        let i = (x.floor() as usize).min(n - 1);
        let t = x - i as f64;
        self.values[i] * (1.0 - t) + self.values[i + 1] * t
    }
}

/// Exact filter over `(tiger_left, done)` for a history of actions and
/// observations. Returns `[P(L, open), P(R, open), P(L, done), P(R, done)]`.
pub fn bayes_posterior(m: &TigerOracle, history: &[(usize, bool)]) -> [f64; 4] {
    let mut p = [0.5, 0.5, 0.0, 0.0];
    for &(action, hear_left) in history {
        let mut next = [0.0; 4];
        // Transition: opening moves mass to the done states.
        if action == LISTEN {
            next[0] = p[0];
            next[1] = p[1];
        } else {
            next[2] += p[0];
            next[3] += p[1];
        }
        next[2] += p[2];
        next[3] += p[3];
        // Observation: informative only when listening before the end.
        let q = m.accuracy;
        let like = |left: bool, informative: bool| {
            if !informative {
                0.5
            } else if left == hear_left {
                q
            } else {
                1.0 - q
            }
        };
        let informative = action == LISTEN;
        next[0] *= like(true, informative);
        next[1] *= like(false, informative);
        next[2] *= 0.5;
        next[3] *= 0.5;
        let z: f64 = next.iter().sum();
        p = next.map(|x| x / z);
    }
    p
}
