//! POMCP and POMCP-DPW over a history tree.
//!
//! Without widening every action is expanded at node creation and every
//! sampled observation gets its own child. With double progressive widening
//! new actions and observations are admitted only while the widening limit
//! allows; once observation widening closes, an existing child is picked in
//! proportion to its visit count and the simulation continues from a state
//! drawn from that child's particle bag.

use super::{
    best_root_edge, propose_action, pw_allows_new_child, random_rollout, root_stats, select_ucb,
    PlanError, PlannerConfig, RolloutKind, RootEdge, ValueStats,
};
use crate::beliefs::WeightedParticleBelief;
use crate::model::{Environment, PolicyRunData};
use crate::rng::SimRng;

struct ObsNode<E: Environment> {
    visits: u64,
    actions: Vec<ActionEdge<E>>,
}

struct ActionEdge<E: Environment> {
    action: usize,
    stats: ValueStats,
    children: Vec<ObsChild<E>>,
}

struct ObsChild<E: Environment> {
    observation: E::Observation,
    node: usize,
    /// `(next state, reward, terminal)` samples that reached this child.
    bag: Vec<(E::State, f64, bool)>,
}

pub(crate) struct Tree<E: Environment> {
    nodes: Vec<ObsNode<E>>,
    max_depth: u32,
}

struct Search<'a, E: Environment> {
    env: &'a E,
    cfg: &'a PlannerConfig,
    dpw: bool,
    actions: Vec<E::Action>,
    n_actions: usize,
    gamma: f64,
    tree: Tree<E>,
}

impl<E: Environment> Search<'_, E> {
    fn new_node(&mut self) -> usize {
        let mut actions = Vec::new();
        if !self.dpw {
            actions = (0..self.n_actions)
                .map(|a| ActionEdge {
                    action: a,
                    stats: ValueStats::default(),
                    children: Vec::new(),
                })
                .collect();
        }
        self.tree.nodes.push(ObsNode { visits: 0, actions });
        self.tree.nodes.len() - 1
    }

    fn leaf_value(&self, s: &E::State, depth: usize, rng: &mut SimRng) -> Result<f64, PlanError> {
        Ok(match self.cfg.rollout {
            RolloutKind::Random => random_rollout(self.env, s, depth, rng)?,
            RolloutKind::None => 0.0,
        })
    }

    fn choose_action(&mut self, h: usize, rng: &mut SimRng) -> usize {
        let node = &self.tree.nodes[h];
        if self.dpw
            && node.actions.len() < self.n_actions
            && pw_allows_new_child(node.visits, node.actions.len(), self.cfg.k_a, self.cfg.alpha_a)
        {
            let expanded: Vec<usize> = node.actions.iter().map(|e| e.action).collect();
            let a = propose_action(&expanded, self.n_actions, rng);
            self.tree.nodes[h].actions.push(ActionEdge {
                action: a,
                stats: ValueStats::default(),
                children: Vec::new(),
            });
        }
        let node = &self.tree.nodes[h];
        select_ucb(
            node.actions.iter().map(|e| &e.stats),
            node.visits,
            self.cfg.exploration_constant,
        )
    }

    fn simulate(
        &mut self,
        h: usize,
        s: &E::State,
        remaining: usize,
        level: u32,
        rng: &mut SimRng,
    ) -> Result<f64, PlanError> {
        if remaining == 0 || self.env.is_terminal(s) {
            return Ok(0.0);
        }
        self.tree.max_depth = self.tree.max_depth.max(level);
        let ai = self.choose_action(h, rng);
        let action = self.tree.nodes[h].actions[ai].action;
        let edge_visits = self.tree.nodes[h].actions[ai].stats.visits;
        let n_children = self.tree.nodes[h].actions[ai].children.len();
        let open = !self.dpw
            || pw_allows_new_child(edge_visits, n_children, self.cfg.k_o, self.cfg.alpha_o)
            || n_children == 0;

        let actions = &self.actions;
        let (child_node, next, reward, terminal, is_new) = if open {
            let out = self.env.step(s, &actions[action], rng)?;
            let existing = self.tree.nodes[h].actions[ai]
                .children
                .iter()
                .position(|c| c.observation == out.observation);
            let (ci, is_new) = match existing {
                Some(ci) => (ci, false),
                None => {
                    let node = self.new_node();
                    self.tree.nodes[h].actions[ai].children.push(ObsChild {
                        observation: out.observation.clone(),
                        node,
                        bag: Vec::new(),
                    });
                    (n_children, true)
                }
            };
            let child = &mut self.tree.nodes[h].actions[ai].children[ci];
            if self.dpw {
                child.bag.push((out.next_state.clone(), out.reward, out.terminal));
            }
            (child.node, out.next_state, out.reward, out.terminal, is_new)
        } else {
            let children = &self.tree.nodes[h].actions[ai].children;
            let weights: Vec<f64> = children
                .iter()
                .map(|c| self.tree.nodes[c.node].visits.max(1) as f64)
                .collect();
            let ci = weighted_index(&weights, rng);
            let child = &children[ci];
            let (s2, r, t) = child.bag[rng.index(child.bag.len())].clone();
            (child.node, s2, r, t, false)
        };

        let future = if terminal {
            0.0
        } else if is_new {
            self.leaf_value(&next, remaining - 1, rng)?
        } else {
            self.simulate(child_node, &next, remaining - 1, level + 1, rng)?
        };
        if is_new {
            self.tree.nodes[child_node].visits += 1;
        }
        let total = reward + self.gamma * future;
        let node = &mut self.tree.nodes[h];
        node.visits += 1;
        node.actions[ai].stats.record(total, self.cfg.risk);
        Ok(total)
    }
}

pub(crate) fn weighted_index(weights: &[f64], rng: &mut SimRng) -> usize {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return rng.index(weights.len());
    }
    let u = rng.uniform() * total;
    let mut acc = 0.0;
    for (i, w) in weights.iter().enumerate() {
        acc += w;
        if u < acc {
            return i;
        }
    }
    weights.len() - 1
}

/// Runs the search and returns the tree for inspection.
pub(crate) fn search<E: Environment>(
    env: &E,
    belief: &WeightedParticleBelief<E::State>,
    cfg: &PlannerConfig,
    dpw: bool,
    rng: &mut SimRng,
) -> Result<(Tree<E>, usize), PlanError> {
    let mut search = Search {
        env,
        cfg,
        dpw,
        actions: env.actions(),
        n_actions: env.actions().len(),
        gamma: env.discount(),
        tree: Tree {
            nodes: Vec::new(),
            max_depth: 0,
        },
    };
    let root = search.new_node();
    for _ in 0..cfg.n_simulations {
        let s = belief.sample(rng).clone();
        search.simulate(root, &s, cfg.horizon(), 1, rng)?;
    }
    Ok((search.tree, root))
}

pub(crate) fn plan<E: Environment>(
    env: &E,
    belief: &WeightedParticleBelief<E::State>,
    cfg: &PlannerConfig,
    dpw: bool,
    rng: &mut SimRng,
) -> Result<(usize, PolicyRunData), PlanError> {
    let (tree, root) = search(env, belief, cfg, dpw, rng)?;
    let edges: Vec<RootEdge> = tree.nodes[root]
        .actions
        .iter()
        .map(|e| RootEdge {
            action: e.action,
            stats: e.stats.clone(),
        })
        .collect();
    let data = PolicyRunData {
        nodes_expanded: tree.nodes.len() as u64,
        root_actions: root_stats::<E>(&env.actions(), &edges),
        planning_time: 0.0,
        max_depth_reached: tree.max_depth,
    };
    Ok((best_root_edge(&edges), data))
}

impl<E: Environment> Tree<E> {
    pub(crate) fn best_action(&self, root: usize) -> usize {
        let edges: Vec<RootEdge> = self.nodes[root]
            .actions
            .iter()
            .map(|e| RootEdge {
                action: e.action,
                stats: e.stats.clone(),
            })
            .collect();
        best_root_edge(&edges)
    }

    /// Calls `f(visits, children)` for every node and every action edge.
    pub(crate) fn for_each_branching(&self, mut f: impl FnMut(usize, BranchKind, u64, usize)) {
        for (i, node) in self.nodes.iter().enumerate() {
            f(i, BranchKind::Action, node.visits, node.actions.len());
            for e in &node.actions {
                f(i, BranchKind::Observation, e.stats.visits, e.children.len());
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchKind {
    Action,
    Observation,
}
