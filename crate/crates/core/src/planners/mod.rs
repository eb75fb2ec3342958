//! Online planners sharing UCT selection, progressive widening, a random
//! rollout and a pluggable backup risk operator.

mod action_sequences;
mod pft;
mod pomcp;
mod pomcpow;
mod sparse_sampling;

use std::time::Instant;

use crate::beliefs::{BeliefError, WeightedParticleBelief};
use crate::evaluation::stats::tail_count;
use crate::hyperopt::{Domain, SearchSpace};
use crate::model::{
    check_compatibility, ActionStat, ContractViolation, Environment, Incompatibility, KindSet,
    ParamError, ParamMap, ParamReader, ParamValue, Policy, PolicyRunData,
    SpaceRequirements,
};
use crate::rng::SimRng;

pub use pft::PftVariant;
pub use pomcp::BranchKind;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlanError {
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Incompatible(#[from] Incompatibility),
    #[error(transparent)]
    Contract(#[from] ContractViolation),
    #[error(transparent)]
    Belief(#[from] BeliefError),
    #[error("search would need about {needed:.3e} nodes, above the cap of {cap}")]
    Budget { needed: f64, cap: u64 },
}

/// UCB1 score. Unvisited children get `+inf` so they are tried first.
pub fn ucb_score(q: f64, n_parent: u64, n_child: u64, c: f64) -> f64 {
    if n_child == 0 {
        return f64::INFINITY;
    }
    if c == 0.0 {
        return q;
    }
    q + c * ((n_parent.max(1) as f64).ln() / n_child as f64).sqrt()
}

/// Widening limit `⌈k · max(n, 1)^α⌉`.
pub fn pw_limit(n: u64, k: f64, alpha: f64) -> u64 {
    (k * (n.max(1) as f64).powf(alpha)).ceil() as u64
}

pub fn pw_allows_new_child(n: u64, num_children: usize, k: f64, alpha: f64) -> bool {
    (num_children as u64) < pw_limit(n, k, alpha)
}

/// Discounted return of uniformly random actions until a terminal state or
/// `depth` steps.
pub fn random_rollout<E: Environment>(
    env: &E,
    state: &E::State,
    depth: usize,
    rng: &mut SimRng,
) -> Result<f64, ContractViolation> {
    let actions = env.actions();
    let gamma = env.discount();
    let mut s = state.clone();
    let mut total = 0.0;
    let mut scale = 1.0;
    for _ in 0..depth {
        if env.is_terminal(&s) {
            break;
        }
        let a = &actions[rng.index(actions.len())];
        let out = env.step(&s, a, rng)?;
        total += scale * out.reward;
        scale *= gamma;
        s = out.next_state;
    }
    Ok(total)
}

/// How returns are combined at a node.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RiskOperator {
    Expectation,
    /// Lower-tail conditional value at risk at the given level.
    Cvar(f64),
}

impl RiskOperator {
    /// Combines a sample of returns. `Cvar(α)` with `⌈αn⌉ = n` is computed
    /// exactly as the plain mean.
    pub fn apply(&self, values: &[f64]) -> f64 {
        let n = values.len();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        match *self {
            RiskOperator::Expectation => mean(values),
            RiskOperator::Cvar(alpha) => {
                let k = tail_count(n, alpha);
                if k == n {
                    return mean(values);
                }
                let mut sorted = values.to_vec();
                sorted.sort_by(f64::total_cmp);
                mean(&sorted[..k])
            }
        }
    }

    /// Combines weighted values: the weighted mean, or the mean of the
    /// lowest `α` probability mass.
    pub fn apply_weighted(&self, values: &[(f64, f64)]) -> f64 {
        let total: f64 = values.iter().map(|(p, _)| p).sum();
        let mean = values.iter().map(|(p, v)| p * v).sum::<f64>() / total;
        match *self {
            RiskOperator::Expectation => mean,
            RiskOperator::Cvar(alpha) if alpha >= 1.0 => mean,
            RiskOperator::Cvar(alpha) => {
                let mut sorted = values.to_vec();
                sorted.sort_by(|a, b| a.1.total_cmp(&b.1));
                let budget = alpha * total;
                let mut mass = 0.0;
                let mut acc = 0.0;
                for (p, v) in sorted {
                    let take = p.min(budget - mass);
                    if take <= 0.0 {
                        break;
                    }
                    acc += take * v;
                    mass += take;
                }
                acc / mass
            }
        }
    }
}

/// Visit count and running value of a tree edge.
#[derive(Clone, Debug, Default)]
pub(crate) struct ValueStats {
    pub visits: u64,
    pub value: f64,
    /// Ascending per-visit returns; kept only under a CVaR backup.
    sorted_returns: Vec<f64>,
}

impl ValueStats {
    pub fn record(&mut self, ret: f64, risk: RiskOperator) {
        self.visits += 1;
        match risk {
            RiskOperator::Expectation => {
                self.value += (ret - self.value) / self.visits as f64;
            }
            RiskOperator::Cvar(alpha) => {
                let pos = self.sorted_returns.partition_point(|x| *x < ret);
                self.sorted_returns.insert(pos, ret);
                let k = tail_count(self.sorted_returns.len(), alpha);
                self.value = self.sorted_returns[..k].iter().sum::<f64>() / k as f64;
            }
        }
    }
}

/// Index of the child with the highest UCB score; ties to the lowest index.
pub(crate) fn select_ucb<'a>(
    children: impl Iterator<Item = &'a ValueStats>,
    n_parent: u64,
    c: f64,
) -> usize {
    let mut best = 0;
    let mut best_score = f64::NEG_INFINITY;
    for (i, s) in children.enumerate() {
        let score = ucb_score(s.value, n_parent, s.visits, c);
        if score > best_score {
            best = i;
            best_score = score;
        }
    }
    best
}

/// Uniform proposal without replacement over a discrete action list.
pub(crate) fn propose_action(expanded: &[usize], n_actions: usize, rng: &mut SimRng) -> usize {
    let remaining: Vec<usize> = (0..n_actions).filter(|a| !expanded.contains(a)).collect();
    remaining[rng.index(remaining.len())]
}

/// Root edge summary shared by the tree planners.
pub(crate) struct RootEdge {
    pub action: usize,
    pub stats: ValueStats,
}

/// Highest-value visited edge, ties to the first expanded; falls back to the
/// first action when nothing was visited.
pub(crate) fn best_root_edge(edges: &[RootEdge]) -> usize {
    let mut best: Option<(usize, f64)> = None;
    for e in edges.iter().filter(|e| e.stats.visits > 0) {
        if best.is_none_or(|(_, v)| e.stats.value > v) {
            best = Some((e.action, e.stats.value));
        }
    }
    best.map(|(a, _)| a).unwrap_or(0)
}

pub(crate) fn root_stats<E: Environment>(
    env_actions: &[E::Action],
    edges: &[RootEdge],
) -> Vec<ActionStat> {
    edges
        .iter()
        .map(|e| ActionStat {
            action: env_actions[e.action].to_string(),
            visits: e.stats.visits,
            value: e.stats.value,
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RolloutKind {
    Random,
    /// Leaves are valued at zero.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PlannerKind {
    Pomcp,
    PomcpDpw,
    Pomcpow,
    SparseSampling,
    SparsePft,
    PftDpw,
    ActionSequences,
    Random,
    FixedSequence,
}

impl PlannerKind {
    pub const ALL: [PlannerKind; 9] = [
        PlannerKind::Pomcp,
        PlannerKind::PomcpDpw,
        PlannerKind::Pomcpow,
        PlannerKind::SparseSampling,
        PlannerKind::SparsePft,
        PlannerKind::PftDpw,
        PlannerKind::ActionSequences,
        PlannerKind::Random,
        PlannerKind::FixedSequence,
    ];

    pub fn id(self) -> &'static str {
        match self {
            PlannerKind::Pomcp => "pomcp",
            PlannerKind::PomcpDpw => "pomcp_dpw",
            PlannerKind::Pomcpow => "pomcpow",
            PlannerKind::SparseSampling => "sparse_sampling",
            PlannerKind::SparsePft => "sparse_pft",
            PlannerKind::PftDpw => "pft_dpw",
            PlannerKind::ActionSequences => "action_sequences",
            PlannerKind::Random => "random",
            PlannerKind::FixedSequence => "fixed_sequence",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|k| k.id() == id)
    }

    fn is_mcts(self) -> bool {
        matches!(
            self,
            PlannerKind::Pomcp
                | PlannerKind::PomcpDpw
                | PlannerKind::Pomcpow
                | PlannerKind::SparsePft
                | PlannerKind::PftDpw
        )
    }

    fn uses_action_widening(self) -> bool {
        matches!(
            self,
            PlannerKind::PomcpDpw | PlannerKind::Pomcpow | PlannerKind::PftDpw
        )
    }

    fn uses_risk(self) -> bool {
        self.is_mcts() || self == PlannerKind::SparseSampling
    }
}

/// Every tunable planner setting. Each planner reads only its own subset.
#[derive(Clone, Debug, PartialEq)]
pub struct PlannerConfig {
    pub depth: usize,
    pub exploration_constant: f64,
    pub n_simulations: usize,
    pub k_a: f64,
    pub alpha_a: f64,
    pub k_o: f64,
    pub alpha_o: f64,
    pub m_particles: usize,
    /// Fixed observation branching (sparse sampling, sparse PFT).
    pub width: usize,
    /// Sparse sampling: enumerate outcomes exactly instead of sampling.
    pub exhaustive: bool,
    pub max_nodes: u64,
    pub n_rollouts: usize,
    pub max_sequences: usize,
    pub risk: RiskOperator,
    pub rollout: RolloutKind,
    pub discount: f64,
    /// Scripted action indices for `fixed_sequence`; the last one repeats.
    pub actions: Vec<usize>,
}

impl PlannerConfig {
    pub fn defaults(kind: PlannerKind, discount: f64) -> Self {
        let (depth, width) = match kind {
            PlannerKind::SparseSampling | PlannerKind::ActionSequences => (3, 4),
            _ => (10, 4),
        };
        Self {
            depth,
            exploration_constant: 10.0,
            n_simulations: 500,
            k_a: 2.0,
            alpha_a: 0.5,
            k_o: 2.0,
            alpha_o: 0.5,
            m_particles: 20,
            width,
            exhaustive: false,
            max_nodes: 10_000_000,
            n_rollouts: 20,
            max_sequences: 10_000,
            risk: RiskOperator::Expectation,
            rollout: RolloutKind::Random,
            discount,
            actions: vec![0],
        }
    }

    /// Planning horizon in steps; depth 0 plans one step ahead.
    pub fn horizon(&self) -> usize {
        self.depth.max(1)
    }
}

fn read_widening(
    r: &mut ParamReader<'_>,
    k_key: &'static str,
    a_key: &'static str,
    k_default: f64,
    a_default: f64,
) -> Result<(f64, f64), ParamError> {
    let k = r.real(k_key, k_default)?;
    let a = r.real(a_key, a_default)?;
    if k <= 0.0 {
        return Err(r.invalid(k_key, "must be positive"));
    }
    if !(0.0..=1.0).contains(&a) {
        return Err(r.invalid(a_key, "must lie in [0, 1]"));
    }
    Ok((k, a))
}

/// A registered planner with validated, fully populated settings.
#[derive(Clone, Debug, PartialEq)]
pub struct Planner {
    kind: PlannerKind,
    config: PlannerConfig,
    name: String,
}

impl Planner {
    pub fn new(kind: PlannerKind, config: PlannerConfig) -> Self {
        Self {
            kind,
            config,
            name: kind.id().to_string(),
        }
    }

    /// Parses planner parameters, filling defaults. `env_discount` is the
    /// environment's discount; a `discount_factor` parameter must match it.
    pub fn from_params(id: &str, params: &ParamMap, env_discount: f64) -> Result<Self, PlanError> {
        let kind = PlannerKind::from_id(id).ok_or_else(|| {
            PlanError::InvalidConfig(format!(
                "unknown planner `{id}` (valid: {})",
                PlannerKind::ALL.map(|k| k.id()).join(", ")
            ))
        })?;
        let d = PlannerConfig::defaults(kind, env_discount);
        let mut c = d.clone();
        let mut r = ParamReader::new(kind.id(), params);
        if kind.uses_risk() || kind == PlannerKind::ActionSequences {
            c.depth = r.usize_at_least("depth", d.depth, 0)?;
        }
        if kind.is_mcts() {
            c.exploration_constant = r.real("exploration_constant", d.exploration_constant)?;
            if c.exploration_constant < 0.0 {
                return Err(r.invalid("exploration_constant", "must be nonnegative").into());
            }
            c.n_simulations = r.usize_at_least("n_simulations", d.n_simulations, 1)?;
            c.rollout = match r.string("rollout", "random")?.as_str() {
                "random" => RolloutKind::Random,
                "none" => RolloutKind::None,
                other => {
                    return Err(r
                        .invalid("rollout", format!("expected `random` or `none`, got `{other}`"))
                        .into())
                }
            };
        }
        if kind.uses_action_widening() {
            (c.k_a, c.alpha_a) = read_widening(&mut r, "k_a", "alpha_a", d.k_a, d.alpha_a)?;
            (c.k_o, c.alpha_o) = read_widening(&mut r, "k_o", "alpha_o", d.k_o, d.alpha_o)?;
        }
        if matches!(kind, PlannerKind::SparsePft | PlannerKind::PftDpw) {
            c.m_particles = r.usize_at_least("m_particles", d.m_particles, 1)?;
        }
        if matches!(kind, PlannerKind::SparseSampling | PlannerKind::SparsePft) {
            c.width = r.usize_at_least("width", d.width, 1)?;
        }
        if kind == PlannerKind::SparseSampling {
            c.exhaustive = r.boolean("exhaustive", d.exhaustive)?;
            c.max_nodes = r.usize_at_least("max_nodes", d.max_nodes as usize, 1)? as u64;
        }
        if kind == PlannerKind::ActionSequences {
            c.n_rollouts = r.usize_at_least("n_rollouts", d.n_rollouts, 1)?;
            c.max_sequences = r.usize_at_least("max_sequences", d.max_sequences, 1)?;
        }
        if kind.uses_risk() {
            let op = r.string("risk_operator", "expectation")?;
            c.risk = match op.as_str() {
                "expectation" => RiskOperator::Expectation,
                "cvar" => {
                    let a = r.real("risk_alpha", 1.0)?;
                    if !(a > 0.0 && a <= 1.0) {
                        return Err(r.invalid("risk_alpha", "must lie in (0, 1]").into());
                    }
                    RiskOperator::Cvar(a)
                }
                other => {
                    return Err(r
                        .invalid(
                            "risk_operator",
                            format!("expected `expectation` or `cvar`, got `{other}`"),
                        )
                        .into())
                }
            };
        }
        if kind == PlannerKind::FixedSequence {
            let list = r.int_list("actions")?.unwrap_or_else(|| vec![0]);
            if list.is_empty() || list.iter().any(|&i| i < 0) {
                return Err(r
                    .invalid("actions", "expected a non-empty list of action indices")
                    .into());
            }
            c.actions = list.into_iter().map(|i| i as usize).collect();
        }
        if kind != PlannerKind::Random && kind != PlannerKind::FixedSequence {
            if let Some(g) = r.opt_real("discount_factor")? {
                if (g - env_discount).abs() > 1e-12 {
                    return Err(r
                        .invalid(
                            "discount_factor",
                            format!("{g} differs from the environment discount {env_discount}"),
                        )
                        .into());
                }
            }
        }
        r.finish()?;
        Ok(Self::new(kind, c))
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn kind(&self) -> PlannerKind {
        self.kind
    }

    pub fn id(&self) -> &'static str {
        self.kind.id()
    }

    pub fn config(&self) -> &PlannerConfig {
        &self.config
    }

    /// Full parameter map, suitable for hashing.
    pub fn params(&self) -> ParamMap {
        let c = &self.config;
        let kind = self.kind;
        let mut m = ParamMap::new();
        let mut put = |k: &str, v: ParamValue| {
            m.insert(k.to_string(), v);
        };
        if kind.uses_risk() || kind == PlannerKind::ActionSequences {
            put("depth", c.depth.into());
            put("discount_factor", c.discount.into());
        }
        if kind.is_mcts() {
            put("exploration_constant", c.exploration_constant.into());
            put("n_simulations", c.n_simulations.into());
            put(
                "rollout",
                match c.rollout {
                    RolloutKind::Random => "random",
                    RolloutKind::None => "none",
                }
                .into(),
            );
        }
        if kind.uses_action_widening() {
            put("k_a", c.k_a.into());
            put("alpha_a", c.alpha_a.into());
            put("k_o", c.k_o.into());
            put("alpha_o", c.alpha_o.into());
        }
        if matches!(kind, PlannerKind::SparsePft | PlannerKind::PftDpw) {
            put("m_particles", c.m_particles.into());
        }
        if matches!(kind, PlannerKind::SparseSampling | PlannerKind::SparsePft) {
            put("width", c.width.into());
        }
        if kind == PlannerKind::SparseSampling {
            put("exhaustive", c.exhaustive.into());
            put("max_nodes", ParamValue::Int(c.max_nodes as i64));
        }
        if kind == PlannerKind::ActionSequences {
            put("n_rollouts", c.n_rollouts.into());
            put("max_sequences", c.max_sequences.into());
        }
        if kind.uses_risk() {
            match c.risk {
                RiskOperator::Expectation => put("risk_operator", "expectation".into()),
                RiskOperator::Cvar(a) => {
                    put("risk_operator", "cvar".into());
                    put("risk_alpha", a.into());
                }
            }
        }
        if kind == PlannerKind::FixedSequence {
            put(
                "actions",
                ParamValue::List(c.actions.iter().map(|&a| a.into()).collect()),
            );
        }
        m
    }

    fn plan_index<E: Environment>(
        &self,
        env: &E,
        belief: &WeightedParticleBelief<E::State>,
        rng: &mut SimRng,
    ) -> Result<(usize, PolicyRunData), PlanError> {
        let n_actions = env.actions().len();
        match self.kind {
            PlannerKind::Pomcp => pomcp::plan(env, belief, &self.config, false, rng),
            PlannerKind::PomcpDpw => pomcp::plan(env, belief, &self.config, true, rng),
            PlannerKind::Pomcpow => pomcpow::plan(env, belief, &self.config, rng),
            PlannerKind::SparseSampling => sparse_sampling::plan(env, belief, &self.config, rng),
            PlannerKind::SparsePft => pft::plan(env, belief, &self.config, PftVariant::Sparse, rng),
            PlannerKind::PftDpw => pft::plan(env, belief, &self.config, PftVariant::Dpw, rng),
            PlannerKind::ActionSequences => action_sequences::plan(env, belief, &self.config, rng),
            PlannerKind::Random => Ok((rng.index(n_actions), PolicyRunData::default())),
            PlannerKind::FixedSequence => Err(PlanError::InvalidConfig(
                "fixed_sequence is driven by the episode runner through `scripted_action`".into(),
            )),
        }
    }

    pub fn space_requirements(&self) -> SpaceRequirements {
        let observation = if self.kind == PlannerKind::Pomcp {
            KindSet::DISCRETE
        } else {
            KindSet::ANY
        };
        SpaceRequirements {
            state: KindSet::ANY,
            action: KindSet::DISCRETE,
            observation,
        }
    }

    /// Scripted action for step `t` of a `fixed_sequence` planner.
    pub fn scripted_action(&self, t: usize) -> Option<usize> {
        (self.kind == PlannerKind::FixedSequence)
            .then(|| self.config.actions[t.min(self.config.actions.len() - 1)])
    }
}

impl<E: Environment> Policy<E> for Planner {
    fn name(&self) -> &str {
        &self.name
    }

    fn action(
        &self,
        env: &E,
        belief: &WeightedParticleBelief<E::State>,
        rng: &mut SimRng,
    ) -> Result<(E::Action, PolicyRunData), PlanError> {
        check_compatibility(&env.space_info(), &self.space_requirements())?;
        if self.kind.uses_risk() || self.kind == PlannerKind::ActionSequences {
            let g = env.discount();
            if (g - self.config.discount).abs() > 1e-12 {
                return Err(PlanError::InvalidConfig(format!(
                    "planner discount {} differs from the environment discount {g}",
                    self.config.discount
                )));
            }
        }
        let actions = env.actions();
        let start = Instant::now();
        let (index, mut data) = self.plan_index(env, belief, rng)?;
        data.planning_time = start.elapsed().as_secs_f64();
        let action = actions.get(index).cloned().ok_or_else(|| {
            PlanError::InvalidConfig(format!("action index {index} out of range"))
        })?;
        Ok((action, data))
    }

    fn requirements(&self) -> SpaceRequirements {
        self.space_requirements()
    }

    fn hyperparameter_space(&self) -> SearchSpace {
        default_search_space(self.kind)
    }
}

/// Published hyperparameter ranges of each planner.
pub fn default_search_space(kind: PlannerKind) -> SearchSpace {
    let mut s = SearchSpace::new();
    if kind.is_mcts() {
        s.insert("depth", Domain::int(1, 30));
        s.insert("exploration_constant", Domain::log_real(0.1, 100.0));
    }
    if kind.uses_action_widening() {
        s.insert("k_a", Domain::real(1.0, 20.0));
        s.insert("alpha_a", Domain::real(0.05, 1.0));
        s.insert("k_o", Domain::real(1.0, 20.0));
        s.insert("alpha_o", Domain::real(0.05, 1.0));
    }
    if matches!(kind, PlannerKind::SparsePft | PlannerKind::PftDpw) {
        s.insert("m_particles", Domain::int(5, 100));
    }
    match kind {
        PlannerKind::SparseSampling => {
            s.insert("depth", Domain::int(1, 4));
            s.insert("width", Domain::int(1, 8));
        }
        PlannerKind::SparsePft => {
            s.insert("width", Domain::int(1, 8));
        }
        PlannerKind::ActionSequences => {
            s.insert("depth", Domain::int(1, 5));
            s.insert("n_rollouts", Domain::int(5, 100));
        }
        _ => {}
    }
    s
}

/// One branching point of a search tree after a planning call.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Branching {
    /// Arena index of the belief node; 0 is the root.
    pub node: usize,
    pub kind: BranchKind,
    pub visits: u64,
    pub children: usize,
}

/// Shape of the tree built by one planning call of a tree planner.
#[derive(Clone, Debug, PartialEq)]
pub struct TreeSummary {
    pub action: usize,
    pub branching: Vec<Branching>,
    /// Weights of every particle-bag entry (POMCPOW only).
    pub bag_weights: Vec<f64>,
}

impl TreeSummary {
    /// Children per root action edge, in expansion order.
    pub fn root_observation_children(&self) -> Vec<usize> {
        self.branching
            .iter()
            .filter(|b| b.node == 0 && b.kind == BranchKind::Observation)
            .map(|b| b.children)
            .collect()
    }
}

impl Planner {
    /// Runs one planning call of a tree planner and reports the tree shape.
    pub fn inspect<E: Environment>(
        &self,
        env: &E,
        belief: &WeightedParticleBelief<E::State>,
        rng: &mut SimRng,
    ) -> Result<TreeSummary, PlanError> {
        let mut branching = Vec::new();
        let mut record = |node, kind, visits, children| {
            branching.push(Branching {
                node,
                kind,
                visits,
                children,
            })
        };
        let cfg = &self.config;
        let mut bag_weights = Vec::new();
        let action = match self.kind {
            PlannerKind::Pomcp | PlannerKind::PomcpDpw => {
                let (tree, root) =
                    pomcp::search(env, belief, cfg, self.kind == PlannerKind::PomcpDpw, rng)?;
                tree.for_each_branching(&mut record);
                tree.best_action(root)
            }
            PlannerKind::Pomcpow => {
                let (tree, root) = pomcpow::search(env, belief, cfg, rng)?;
                tree.for_each_branching(&mut record);
                bag_weights = tree.bag_weights().collect();
                tree.best_action(root)
            }
            PlannerKind::SparsePft | PlannerKind::PftDpw => {
                let variant = if self.kind == PlannerKind::PftDpw {
                    PftVariant::Dpw
                } else {
                    PftVariant::Sparse
                };
                let (tree, root) = pft::search(env, belief, cfg, variant, rng)?;
                tree.for_each_branching(&mut record);
                tree.best_action(root)
            }
            _ => {
                return Err(PlanError::InvalidConfig(format!(
                    "`{}` does not build a search tree",
                    self.id()
                )))
            }
        };
        Ok(TreeSummary {
            action,
            branching,
            bag_weights,
        })
    }

    /// Widening constants `(k, α)` governing a branching kind, if any.
    pub fn widening(&self, kind: BranchKind) -> Option<(f64, f64)> {
        if !self.kind.uses_action_widening() {
            return None;
        }
        Some(match kind {
            BranchKind::Action => (self.config.k_a, self.config.alpha_a),
            BranchKind::Observation => (self.config.k_o, self.config.alpha_o),
        })
    }
}
