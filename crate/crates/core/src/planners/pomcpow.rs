//! POMCPOW: progressive widening with weighted particle bags at observation
//! nodes.
//!
//! Every simulated transition inserts its next state into the selected
//! observation child's bag, weighted by the likelihood of that child's
//! observation. Descending through an existing child continues from a state
//! drawn from the bag by weight, with the immediate reward recomputed for it.

use super::pomcp::{weighted_index, BranchKind};
use super::{
    best_root_edge, propose_action, pw_allows_new_child, random_rollout, root_stats, select_ucb,
    PlanError, PlannerConfig, RolloutKind, RootEdge, ValueStats,
};
use crate::beliefs::WeightedParticleBelief;
use crate::model::{Environment, PolicyRunData};
use crate::rng::SimRng;

struct BeliefNode {
    visits: u64,
    actions: Vec<ActionEdge>,
}

struct ActionEdge {
    action: usize,
    stats: ValueStats,
    /// Indices into the search's observation-child arena.
    children: Vec<usize>,
}

struct ObsChild<E: Environment> {
    observation: E::Observation,
    /// Times this child was selected from its action edge.
    count: u64,
    node: usize,
    states: Vec<E::State>,
    weights: Vec<f64>,
}

pub(crate) struct Tree<E: Environment> {
    nodes: Vec<BeliefNode>,
    children: Vec<ObsChild<E>>,
    max_depth: u32,
}

struct Search<'a, E: Environment> {
    env: &'a E,
    actions: Vec<E::Action>,
    cfg: &'a PlannerConfig,
    gamma: f64,
    tree: Tree<E>,
}

impl<E: Environment> Search<'_, E> {
    fn new_node(&mut self) -> usize {
        self.tree.nodes.push(BeliefNode {
            visits: 0,
            actions: Vec::new(),
        });
        self.tree.nodes.len() - 1
    }

    fn choose_action(&mut self, h: usize, rng: &mut SimRng) -> usize {
        let n_actions = self.actions.len();
        let node = &self.tree.nodes[h];
        if node.actions.len() < n_actions
            && pw_allows_new_child(node.visits, node.actions.len(), self.cfg.k_a, self.cfg.alpha_a)
        {
            let expanded: Vec<usize> = node.actions.iter().map(|e| e.action).collect();
            let a = propose_action(&expanded, n_actions, rng);
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
        let action_index = self.tree.nodes[h].actions[ai].action;
        let action = self.actions[action_index].clone();
        let out = self.env.step(s, &action, rng)?;

        let edge = &self.tree.nodes[h].actions[ai];
        let open = pw_allows_new_child(
            edge.stats.visits,
            edge.children.len(),
            self.cfg.k_o,
            self.cfg.alpha_o,
        ) || edge.children.is_empty();
        let existing = if open {
            edge.children
                .iter()
                .copied()
                .find(|&c| self.tree.children[c].observation == out.observation)
        } else {
            let weights: Vec<f64> = edge
                .children
                .iter()
                .map(|&c| self.tree.children[c].count as f64)
                .collect();
            Some(edge.children[weighted_index(&weights, rng)])
        };
        let (ci, is_new) = match existing {
            Some(ci) => (ci, false),
            None => {
                let node = self.new_node();
                self.tree.children.push(ObsChild {
                    observation: out.observation.clone(),
                    count: 0,
                    node,
                    states: Vec::new(),
                    weights: Vec::new(),
                });
                let ci = self.tree.children.len() - 1;
                self.tree.nodes[h].actions[ai].children.push(ci);
                (ci, true)
            }
        };

        let child = &mut self.tree.children[ci];
        let w = self
            .env
            .observation_loglik(&child.observation, &out.next_state, &action)
            .exp();
        child.states.push(out.next_state.clone());
        child.weights.push(if w.is_finite() { w } else { 0.0 });
        child.count += 1;
        let child_node = child.node;

        let total = if is_new {
            let future = if out.terminal {
                0.0
            } else {
                match self.cfg.rollout {
                    RolloutKind::Random => {
                        random_rollout(self.env, &out.next_state, remaining - 1, rng)?
                    }
                    RolloutKind::None => 0.0,
                }
            };
            self.tree.nodes[child_node].visits += 1;
            out.reward + self.gamma * future
        } else {
            let child = &self.tree.children[ci];
            let j = weighted_index(&child.weights, rng);
            let next = child.states[j].clone();
            let reward = self.env.reward(s, &action, &next);
            let future = self.simulate(child_node, &next, remaining - 1, level + 1, rng)?;
            reward + self.gamma * future
        };
        let node = &mut self.tree.nodes[h];
        node.visits += 1;
        node.actions[ai].stats.record(total, self.cfg.risk);
        Ok(total)
    }
}

pub(crate) fn search<E: Environment>(
    env: &E,
    belief: &WeightedParticleBelief<E::State>,
    cfg: &PlannerConfig,
    rng: &mut SimRng,
) -> Result<(Tree<E>, usize), PlanError> {
    let mut search = Search {
        env,
        actions: env.actions(),
        cfg,
        gamma: env.discount(),
        tree: Tree {
            nodes: Vec::new(),
            children: Vec::new(),
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
    rng: &mut SimRng,
) -> Result<(usize, PolicyRunData), PlanError> {
    let (tree, root) = search(env, belief, cfg, rng)?;
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

    pub(crate) fn for_each_branching(&self, mut f: impl FnMut(usize, BranchKind, u64, usize)) {
        for (i, node) in self.nodes.iter().enumerate() {
            f(i, BranchKind::Action, node.visits, node.actions.len());
            for e in &node.actions {
                f(i, BranchKind::Observation, e.stats.visits, e.children.len());
            }
        }
    }

    /// Every bag weight in the tree.
    pub(crate) fn bag_weights(&self) -> impl Iterator<Item = f64> + '_ {
        self.children.iter().flat_map(|c| c.weights.iter().copied())
    }
}
