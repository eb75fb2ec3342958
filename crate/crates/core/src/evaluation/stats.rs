//! Lower-tail risk statistics and cohort aggregation.
//!
//! Risk means low return: `var(r, α)` is the `⌈αn⌉`-th smallest return and
//! `cvar(r, α)` the mean of the `⌈αn⌉` smallest.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::EpisodeRecord;
use crate::environments::safety_metrics;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("statistics need at least one value")]
    Empty,
    #[error("alpha must lie in {range}, got {alpha}")]
    Alpha { alpha: f64, range: &'static str },
}

/// `⌈αn⌉` clamped to `1..=n`, robust to representation error in `α·n`.
pub fn tail_count(n: usize, alpha: f64) -> usize {
    let x = alpha * n as f64;
    let k = (x - 1e-9 * x.abs().max(1.0)).ceil();
    (k.max(1.0) as usize).min(n)
}

fn check_level(alpha: f64) -> Result<(), StatsError> {
    if alpha > 0.0 && alpha <= 1.0 {
        Ok(())
    } else {
        Err(StatsError::Alpha {
            alpha,
            range: "(0, 1]",
        })
    }
}

fn sorted(returns: &[f64]) -> Vec<f64> {
    let mut v = returns.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

pub fn mean(values: &[f64]) -> Result<f64, StatsError> {
    if values.is_empty() {
        return Err(StatsError::Empty);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Sample standard deviation (`n − 1` denominator); zero for one value.
pub fn sample_std(values: &[f64]) -> Result<f64, StatsError> {
    let m = mean(values)?;
    if values.len() < 2 {
        return Ok(0.0);
    }
    let ss: f64 = values.iter().map(|x| (x - m).powi(2)).sum();
    Ok((ss / (values.len() - 1) as f64).sqrt())
}

/// Lower-tail value at risk: element `⌈αn⌉ − 1` of the ascending sort.
pub fn var(returns: &[f64], alpha: f64) -> Result<f64, StatsError> {
    if returns.is_empty() {
        return Err(StatsError::Empty);
    }
    check_level(alpha)?;
    let k = tail_count(returns.len(), alpha);
    Ok(sorted(returns)[k - 1])
}

/// Lower-tail conditional value at risk: mean of the `⌈αn⌉` smallest.
/// At `⌈αn⌉ = n` this is the plain mean in input order.
pub fn cvar(returns: &[f64], alpha: f64) -> Result<f64, StatsError> {
    if returns.is_empty() {
        return Err(StatsError::Empty);
    }
    check_level(alpha)?;
    let k = tail_count(returns.len(), alpha);
    if k == returns.len() {
        return mean(returns);
    }
    let s = sorted(returns);
    Ok(s[..k].iter().sum::<f64>() / k as f64)
}

/// Two-sided normal quantile `z_{1−α/2}`.
pub fn normal_critical_value(alpha: f64) -> f64 {
    Normal::new(0.0, 1.0)
        .expect("standard normal")
        .inverse_cdf(1.0 - alpha / 2.0)
}

/// Normal-approximation confidence interval at confidence `1 − α`.
pub fn confidence_interval(values: &[f64], alpha: f64) -> Result<(f64, f64), StatsError> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(StatsError::Alpha {
            alpha,
            range: "(0, 1)",
        });
    }
    let m = mean(values)?;
    let half = normal_critical_value(alpha) * sample_std(values)? / (values.len() as f64).sqrt();
    Ok((m - half, m + half))
}

/// Summary of one `(environment, policy)` cohort over discounted returns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AggregateStats {
    pub n_episodes: usize,
    pub mean_return: f64,
    pub std_return: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub var_alpha: f64,
    pub cvar_alpha: f64,
    pub alpha: f64,
    pub goal_rate: f64,
    pub violation_rate: f64,
    pub total_violations: u64,
    /// Set when `n_episodes = 1`: the interval collapses to the mean.
    pub degenerate_ci: bool,
}

impl AggregateStats {
    pub fn from_returns(returns: &[f64], alpha: f64) -> Result<Self, StatsError> {
        let (ci_low, ci_high) = confidence_interval(returns, alpha)?;
        Ok(Self {
            n_episodes: returns.len(),
            mean_return: mean(returns)?,
            std_return: sample_std(returns)?,
            ci_low,
            ci_high,
            var_alpha: var(returns, alpha)?,
            cvar_alpha: cvar(returns, alpha)?,
            alpha,
            goal_rate: 0.0,
            violation_rate: 0.0,
            total_violations: 0,
            degenerate_ci: returns.len() == 1,
        })
    }
}

/// Aggregates one cohort; `alpha` sets both the CI confidence `1 − α` and the
/// VaR/CVaR level.
pub fn aggregate(records: &[EpisodeRecord], alpha: f64) -> Result<AggregateStats, StatsError> {
    let returns: Vec<f64> = records.iter().map(|r| r.discounted_return).collect();
    let mut stats = AggregateStats::from_returns(&returns, alpha)?;
    let safety = safety_metrics(records)?;
    stats.goal_rate =
        records.iter().filter(|r| r.goal_reached).count() as f64 / records.len() as f64;
    stats.violation_rate = safety.violation_rate;
    stats.total_violations = safety.total_violations;
    Ok(stats)
}
