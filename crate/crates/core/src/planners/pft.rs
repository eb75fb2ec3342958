//! Particle filter trees: MCTS over belief nodes holding small weighted
//! particle beliefs.
//!
//! Expanding a `(belief, action)` edge samples one state from the node belief,
//! takes one generative step to obtain an observation, and then runs a full
//! particle filter update of every particle under that observation. The edge
//! reward is the belief-weighted mean of the per-particle rewards.

use super::pomcp::{weighted_index, BranchKind};
use super::{
    best_root_edge, propose_action, pw_allows_new_child, random_rollout, root_stats, select_ucb,
    PlanError, PlannerConfig, RolloutKind, RootEdge, ValueStats,
};
use crate::beliefs::{propagate, BeliefError, WeightedParticleBelief};
use crate::model::{Environment, PolicyRunData};
use crate::rng::SimRng;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PftVariant {
    /// At most `width` belief children per action edge.
    Sparse,
    /// Progressive widening on both actions and belief children.
    Dpw,
}

struct BeliefNode<E: Environment> {
    belief: WeightedParticleBelief<E::State>,
    terminal: bool,
    visits: u64,
    actions: Vec<ActionEdge<E>>,
}

struct ActionEdge<E: Environment> {
    action: usize,
    stats: ValueStats,
    children: Vec<Child<E>>,
}

struct Child<E: Environment> {
    observation: E::Observation,
    reward: f64,
    node: usize,
    count: u64,
}

pub(crate) struct Tree<E: Environment> {
    nodes: Vec<BeliefNode<E>>,
    max_depth: u32,
}

struct Search<'a, E: Environment> {
    env: &'a E,
    actions: Vec<E::Action>,
    cfg: &'a PlannerConfig,
    variant: PftVariant,
    gamma: f64,
    tree: Tree<E>,
}

impl<E: Environment> Search<'_, E> {
    fn new_node(&mut self, belief: WeightedParticleBelief<E::State>) -> usize {
        let terminal = belief.particles().iter().all(|s| self.env.is_terminal(s));
        let actions = match self.variant {
            PftVariant::Sparse => (0..self.actions.len())
                .map(|a| ActionEdge {
                    action: a,
                    stats: ValueStats::default(),
                    children: Vec::new(),
                })
                .collect(),
            PftVariant::Dpw => Vec::new(),
        };
        self.tree.nodes.push(BeliefNode {
            belief,
            terminal,
            visits: 0,
            actions,
        });
        self.tree.nodes.len() - 1
    }

    fn choose_action(&mut self, b: usize, rng: &mut SimRng) -> usize {
        let n_actions = self.actions.len();
        let node = &self.tree.nodes[b];
        if self.variant == PftVariant::Dpw
            && node.actions.len() < n_actions
            && pw_allows_new_child(node.visits, node.actions.len(), self.cfg.k_a, self.cfg.alpha_a)
        {
            let expanded: Vec<usize> = node.actions.iter().map(|e| e.action).collect();
            let a = propose_action(&expanded, n_actions, rng);
            self.tree.nodes[b].actions.push(ActionEdge {
                action: a,
                stats: ValueStats::default(),
                children: Vec::new(),
            });
        }
        let node = &self.tree.nodes[b];
        select_ucb(
            node.actions.iter().map(|e| &e.stats),
            node.visits,
            self.cfg.exploration_constant,
        )
    }

    /// Builds a child belief for `(b, action)`. Retries once on particle
    /// depletion; `None` means the edge is abandoned for this simulation.
    #[allow(clippy::type_complexity)]
    fn expand(
        &self,
        b: usize,
        action: usize,
        rng: &mut SimRng,
    ) -> Result<Option<(E::Observation, f64, WeightedParticleBelief<E::State>)>, PlanError> {
        let belief = &self.tree.nodes[b].belief;
        let a = &self.actions[action];
        for _ in 0..2 {
            let s = belief.sample(rng).clone();
            let out = self.env.step(&s, a, rng)?;
            let prop = propagate(belief, self.env, a, rng)?;
            match prop.condition(self.env, a, &out.observation, rng) {
                Ok(child) => return Ok(Some((out.observation, prop.expected_reward(), child))),
                Err(BeliefError::Depleted) => continue,
                Err(e) => return Err(e.into()),
            }
        }
        Ok(None)
    }

    fn leaf_value(&self, node: usize, remaining: usize, rng: &mut SimRng) -> Result<f64, PlanError> {
        let n = &self.tree.nodes[node];
        if n.terminal || self.cfg.rollout == RolloutKind::None {
            return Ok(0.0);
        }
        let s = n.belief.sample(rng).clone();
        Ok(random_rollout(self.env, &s, remaining, rng)?)
    }

    fn simulate(
        &mut self,
        b: usize,
        remaining: usize,
        level: u32,
        rng: &mut SimRng,
    ) -> Result<Option<f64>, PlanError> {
        if remaining == 0 || self.tree.nodes[b].terminal {
            return Ok(Some(0.0));
        }
        self.tree.max_depth = self.tree.max_depth.max(level);
        let ai = self.choose_action(b, rng);
        let edge = &self.tree.nodes[b].actions[ai];
        let action = edge.action;
        let open = match self.variant {
            PftVariant::Sparse => edge.children.len() < self.cfg.width,
            PftVariant::Dpw => {
                pw_allows_new_child(
                    edge.stats.visits,
                    edge.children.len(),
                    self.cfg.k_o,
                    self.cfg.alpha_o,
                ) || edge.children.is_empty()
            }
        };

        let total = if open {
            let Some((obs, reward, belief)) = self.expand(b, action, rng)? else {
                return Ok(None);
            };
            let existing = self.tree.nodes[b].actions[ai]
                .children
                .iter()
                .position(|c| c.observation == obs);
            match existing {
                Some(ci) => {
                    let child = &mut self.tree.nodes[b].actions[ai].children[ci];
                    child.count += 1;
                    let (node, r) = (child.node, child.reward);
                    match self.simulate(node, remaining - 1, level + 1, rng)? {
                        Some(v) => r + self.gamma * v,
                        None => return Ok(None),
                    }
                }
                None => {
                    let node = self.new_node(belief);
                    self.tree.nodes[b].actions[ai].children.push(Child {
                        observation: obs,
                        reward,
                        node,
                        count: 1,
                    });
                    let v = self.leaf_value(node, remaining - 1, rng)?;
                    self.tree.nodes[node].visits += 1;
                    reward + self.gamma * v
                }
            }
        } else {
            let children = &self.tree.nodes[b].actions[ai].children;
            let ci = match self.variant {
                PftVariant::Sparse => rng.index(children.len()),
                PftVariant::Dpw => {
                    let w: Vec<f64> = children.iter().map(|c| c.count as f64).collect();
                    weighted_index(&w, rng)
                }
            };
            let child = &mut self.tree.nodes[b].actions[ai].children[ci];
            child.count += 1;
            let (node, r) = (child.node, child.reward);
            match self.simulate(node, remaining - 1, level + 1, rng)? {
                Some(v) => r + self.gamma * v,
                None => return Ok(None),
            }
        };
        let node = &mut self.tree.nodes[b];
        node.visits += 1;
        node.actions[ai].stats.record(total, self.cfg.risk);
        Ok(Some(total))
    }
}

pub(crate) fn search<E: Environment>(
    env: &E,
    belief: &WeightedParticleBelief<E::State>,
    cfg: &PlannerConfig,
    variant: PftVariant,
    rng: &mut SimRng,
) -> Result<(Tree<E>, usize), PlanError> {
    let mut search = Search {
        env,
        actions: env.actions(),
        cfg,
        variant,
        gamma: env.discount(),
        tree: Tree {
            nodes: Vec::new(),
            max_depth: 0,
        },
    };
    let root_belief = belief.resample_to(cfg.m_particles, rng);
    let root = search.new_node(root_belief);
    for _ in 0..cfg.n_simulations {
        search.simulate(root, cfg.horizon(), 1, rng)?;
    }
    Ok((search.tree, root))
}

pub(crate) fn plan<E: Environment>(
    env: &E,
    belief: &WeightedParticleBelief<E::State>,
    cfg: &PlannerConfig,
    variant: PftVariant,
    rng: &mut SimRng,
) -> Result<(usize, PolicyRunData), PlanError> {
    let (tree, root) = search(env, belief, cfg, variant, rng)?;
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
}
