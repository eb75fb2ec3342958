//! Benchmark POMDPs.

pub mod lightdark;
pub mod mountaincar;
pub mod rocksample;
pub mod tiger;

pub use lightdark::{
    LightDark, LightDarkAction, LightDarkConfig, LightDarkObservation, LightDarkState,
    LightDarkVariant,
};
pub use mountaincar::{
    MountainCar, MountainCarAction, MountainCarConfig, MountainCarObservation, MountainCarState,
};
pub use rocksample::{
    DangerousArea, RockSample, RockSampleAction, RockSampleConfig, RockSampleObservation,
    RockSampleState,
};
pub use tiger::{Tiger, TigerAction, TigerConfig, TigerObservation, TigerPosition, TigerState};

use crate::evaluation::{EpisodeRecord, StatsError};
use crate::model::{ParamError, ParamReader};

pub const ENVIRONMENT_IDS: [&str; 4] = ["tiger", "lightdark", "rocksample", "mountaincar"];

fn check_discount(r: &ParamReader<'_>, discount: f64) -> Result<(), ParamError> {
    if discount > 0.0 && discount <= 1.0 {
        Ok(())
    } else {
        Err(r.invalid("discount", "must lie in (0, 1]"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SafetyMetrics {
    /// Fraction of episodes with at least one safety event.
    pub violation_rate: f64,
    pub total_violations: u64,
}

pub fn safety_metrics(records: &[EpisodeRecord]) -> Result<SafetyMetrics, StatsError> {
    if records.is_empty() {
        return Err(StatsError::Empty);
    }
    let violating = records.iter().filter(|r| r.safety_event_count > 0).count();
    Ok(SafetyMetrics {
        violation_rate: violating as f64 / records.len() as f64,
        total_violations: records.iter().map(|r| r.safety_event_count).sum(),
    })
}
