//! Net energy, repetition aggregation, the project-vs-methods check and the
//! statistical tests run over measurement records.
//!
//! Net energy of a window is the rectangle-rule gross energy minus the
//! calibrated idle power times the window length. It may be negative: a
//! component can draw less than its idle baseline while another component
//! does the work.

mod correlation;
pub mod special;
mod sweep;
mod wilcoxon;

use serde::{Deserialize, Serialize};

use crate::component::{Component, PerComponent};
use crate::sampler::{integrate_power, PowerSample, SamplerError};
use crate::stability::StableState;

pub use correlation::pearson;
pub use sweep::{data_size_sweep, fraction_of, sweep_correlation, SweepObservation, SweepRow, SweepTable, FRACTION_STEPS};
pub use wilcoxon::{wilcoxon_signed_rank, EXACT_MAX_N};

#[derive(Debug, thiserror::Error)]
pub enum AnalysisError {
    #[error("invalid window: end {t_end} precedes start {t_start}")]
    InvalidWindow { t_start: i64, t_end: i64 },
    #[error("nothing to aggregate")]
    Empty,
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least {need} observations, got {have}")]
    TooFewObservations { have: usize, need: usize },
    #[error("correlation undefined: {0}")]
    UndefinedCorrelation(&'static str),
    #[error("degenerate test: all paired differences are zero")]
    DegenerateTest,
    #[error(transparent)]
    Sampler(#[from] SamplerError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComponentEnergy {
    pub gross_j: f64,
    pub net_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetEnergyResult {
    #[serde(flatten)]
    pub components: PerComponent<ComponentEnergy>,
    pub duration_s: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub repetition: Option<usize>,
}

impl NetEnergyResult {
    pub fn net(&self) -> PerComponent<f64> {
        self.components.map(|_, e| e.net_j)
    }
}

/// Net energy of one component's samples over `[t_start, t_end)`.
pub fn net_energy(
    samples: &[PowerSample],
    baseline_mean_power_w: f64,
    t_start: i64,
    t_end: i64,
    interval_ms: u64,
) -> Result<ComponentEnergy, AnalysisError> {
    if t_end < t_start {
        return Err(AnalysisError::InvalidWindow { t_start, t_end });
    }
    let gross_j = integrate_power(samples, t_start, t_end, interval_ms)?;
    let duration_s = (t_end - t_start) as f64 / 1000.0;
    Ok(ComponentEnergy { gross_j, net_j: gross_j - baseline_mean_power_w * duration_s })
}

/// Net energy for all components of a mixed sample list.
pub fn net_energy_all(
    samples: &[PowerSample],
    baseline: &StableState,
    t_start: i64,
    t_end: i64,
    interval_ms: u64,
) -> Result<NetEnergyResult, AnalysisError> {
    let components = PerComponent::try_from_fn(|c| {
        let series: Vec<PowerSample> = samples.iter().filter(|s| s.component == c).cloned().collect();
        net_energy(&series, baseline.components.get(c).mean_power_w, t_start, t_end, interval_ms)
    })?;
    Ok(NetEnergyResult { components, duration_s: (t_end - t_start) as f64 / 1000.0, repetition: None })
}

/// Arithmetic mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> Result<(f64, f64), AnalysisError> {
    if values.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    Ok((mean, var.sqrt()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateResult {
    pub mean: PerComponent<f64>,
    pub std: PerComponent<f64>,
    pub mean_duration_s: f64,
    pub repetitions: usize,
}

pub fn aggregate_repetitions(results: &[NetEnergyResult]) -> Result<AggregateResult, AnalysisError> {
    if results.is_empty() {
        return Err(AnalysisError::Empty);
    }
    let mut mean = PerComponent::default();
    let mut std = PerComponent::default();
    for c in Component::ALL {
        let values: Vec<f64> = results.iter().map(|r| r.components.get(c).net_j).collect();
        let (m, s) = mean_std(&values)?;
        *mean.get_mut(c) = m;
        *std.get_mut(c) = s;
    }
    let durations: Vec<f64> = results.iter().map(|r| r.duration_s).collect();
    Ok(AggregateResult {
        mean,
        std,
        mean_duration_s: mean_std(&durations)?.0,
        repetitions: results.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Fail,
}

/// Project energy against the sum of its in-scope methods, per component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eq1Report {
    pub project_j: PerComponent<f64>,
    pub methods_j: PerComponent<f64>,
    /// Implied out-of-scope energy, project minus methods.
    pub out_of_scope_j: PerComponent<f64>,
    /// Out-of-scope share of the project energy; absent when the project energy is zero.
    pub out_of_scope_share: PerComponent<Option<f64>>,
    pub verdict: PerComponent<Verdict>,
}

impl Eq1Report {
    pub fn passed(&self) -> bool {
        self.verdict.iter().all(|(_, v)| *v == Verdict::Pass)
    }
}

pub fn compare_project_vs_methods(project: &AggregateResult, methods: &[AggregateResult]) -> Eq1Report {
    let methods_j = PerComponent::from_fn(|c| methods.iter().map(|m| m.mean.get(c)).sum::<f64>());
    let project_j = project.mean;
    let out_of_scope_j = PerComponent::from_fn(|c| project_j.get(c) - methods_j.get(c));
    let out_of_scope_share = PerComponent::from_fn(|c| {
        let p = *project_j.get(c);
        (p != 0.0).then(|| out_of_scope_j.get(c) / p)
    });
    let verdict = PerComponent::from_fn(|c| {
        if methods_j.get(c) <= project_j.get(c) {
            Verdict::Pass
        } else {
            Verdict::Fail
        }
    });
    Eq1Report { project_j, methods_j, out_of_scope_j, out_of_scope_share, verdict }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    Pearson,
    WilcoxonExact,
    WilcoxonNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Alternative {
    Greater,
    Less,
    #[default]
    TwoSided,
}

impl std::str::FromStr for Alternative {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "greater" => Ok(Alternative::Greater),
            "less" => Ok(Alternative::Less),
            "two-sided" => Ok(Alternative::TwoSided),
            _ => Err(format!("unknown alternative `{s}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub alternative: Alternative,
    pub n: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    fn constant(component: Component, power: f64, t0: i64, t1: i64, step: i64) -> Vec<PowerSample> {
        (t0..t1).step_by(step as usize).map(|t| PowerSample::new(t, component, power)).collect()
    }

    #[test]
    fn net_of_thirty_watts_over_idle_eighteen() {
        let s = constant(Component::Gpu, 30.0, 0, 2000, 500);
        let e = net_energy(&s, 18.0, 0, 2000, 500).unwrap();
        assert_eq!(e.gross_j, 60.0);
        assert_eq!(e.net_j, 24.0);
    }

    #[test]
    fn net_at_baseline_is_zero() {
        let s = constant(Component::Cpu, 18.0, 0, 2000, 500);
        assert_eq!(net_energy(&s, 18.0, 0, 2000, 500).unwrap().net_j, 0.0);
    }

    #[test]
    fn net_below_baseline_is_negative() {
        let s = constant(Component::Ram, 10.0, 0, 1000, 500);
        assert_eq!(net_energy(&s, 18.0, 0, 1000, 500).unwrap().net_j, -8.0);
    }

    #[test]
    fn reversed_window_is_invalid() {
        assert!(matches!(net_energy(&[], 1.0, 10, 0, 500), Err(AnalysisError::InvalidWindow { .. })));
    }

    fn result(net: f64) -> NetEnergyResult {
        NetEnergyResult {
            components: PerComponent::from_fn(|_| ComponentEnergy { gross_j: net, net_j: net }),
            duration_s: 1.0,
            repetition: None,
        }
    }

    #[test]
    fn aggregate_examples() {
        let same: Vec<_> = (0..10).map(|_| result(24.0)).collect();
        let a = aggregate_repetitions(&same).unwrap();
        assert_eq!((a.mean.gpu, a.std.gpu, a.repetitions), (24.0, 0.0, 10));

        let a = aggregate_repetitions(&[result(10.0), result(20.0)]).unwrap();
        assert_eq!(a.mean.cpu, 15.0);

        let seq: Vec<_> = (1..=10).map(|i| result(i as f64)).collect();
        let a = aggregate_repetitions(&seq).unwrap();
        assert_eq!(a.mean.ram, 5.5);
        // population variance of 1..10 is 8.25
        assert!((a.std.ram - 8.25f64.sqrt()).abs() < 1e-12);
        assert!((a.std.ram - 2.8723).abs() < 1e-4);

        assert!(matches!(aggregate_repetitions(&[]), Err(AnalysisError::Empty)));
    }

    fn agg(v: f64) -> AggregateResult {
        AggregateResult {
            mean: PerComponent::new(v, v, v),
            std: PerComponent::default(),
            mean_duration_s: 1.0,
            repetitions: 10,
        }
    }

    #[test]
    fn eq1_examples() {
        let r = compare_project_vs_methods(&agg(100.0), &[agg(50.0), agg(30.0)]);
        assert!(r.passed());
        assert!((r.out_of_scope_share.cpu.unwrap() - 0.20).abs() < 1e-12);

        let r = compare_project_vs_methods(&agg(80.0), &[agg(80.0)]);
        assert!(r.passed());
        assert_eq!(r.out_of_scope_j.gpu, 0.0);

        let r = compare_project_vs_methods(&agg(80.0), &[agg(50.0), agg(40.0)]);
        assert!(!r.passed());
        assert_eq!(r.verdict.ram, Verdict::Fail);
    }

    #[test]
    fn net_result_json_shape() {
        let v = serde_json::to_value(result(1.5)).unwrap();
        assert_eq!(v["gpu"]["net_j"], 1.5);
        assert_eq!(v["duration_s"], 1.0);
        assert!(v.get("repetition").is_none());
    }
}
