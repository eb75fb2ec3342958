//! Contracts shared by every environment, belief and policy, plus canonical
//! serialization and hashing of simulation specifications.

mod contract;
pub mod params;
pub mod space;
pub mod spec;

pub use contract::{
    ActionStat, ContractViolation, Environment, Policy, PolicyRunData, StepOutcome,
    WeightedOutcome,
};
pub use params::{render_real, ParamError, ParamMap, ParamReader, ParamValue};
pub use space::{
    check_compatibility, Axis, AxisMismatch, Incompatibility, KindSet, SpaceInfo, SpaceInfoError,
    SpaceKind, SpaceRequirements,
};
pub use spec::{
    canonical_serialize, sha256_hex, spec_hash, SerializationError, SimulationSpec,
    SCHEMA_VERSION,
};
