//! Input-size sweeps: each method runs on k/10 of its data for k = 1..=10.

use serde::{Deserialize, Serialize};

use super::{mean_std, pearson, AnalysisError, TestResult};
use crate::component::{Component, PerComponent};

pub const FRACTION_STEPS: u32 = 10;

pub fn fraction_of(step: u32) -> f64 {
    step as f64 / FRACTION_STEPS as f64
}

/// Nearest sweep step for a fraction, if it lies on the grid.
fn step_of(fraction: f64) -> Option<u32> {
    let k = (fraction * FRACTION_STEPS as f64).round();
    ((1.0..=FRACTION_STEPS as f64).contains(&k) && (fraction - k / FRACTION_STEPS as f64).abs() < 1e-9)
        .then_some(k as u32)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepObservation {
    pub fraction: f64,
    pub net_j: PerComponent<f64>,
    pub duration_s: f64,
    pub args_bytes: Option<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub fraction: f64,
    pub mean_net_j: PerComponent<f64>,
    pub mean_duration_s: f64,
    pub args_total_bytes: Option<f64>,
    pub observations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Fractions with no observations.
    pub gaps: Vec<f64>,
    /// Observations whose fraction is off the k/10 grid.
    pub rejected: usize,
}

pub fn data_size_sweep(observations: &[SweepObservation]) -> SweepTable {
    let mut groups: Vec<Vec<&SweepObservation>> = vec![Vec::new(); FRACTION_STEPS as usize];
    let mut rejected = 0;
    for o in observations {
        match step_of(o.fraction) {
            Some(k) => groups[k as usize - 1].push(o),
            None => rejected += 1,
        }
    }
    let mut rows = Vec::new();
    let mut gaps = Vec::new();
    for (i, group) in groups.iter().enumerate() {
        let fraction = fraction_of(i as u32 + 1);
        if group.is_empty() {
            log::warn!("no observations at fraction {fraction}");
            gaps.push(fraction);
            continue;
        }
        let mean_of = |f: &dyn Fn(&SweepObservation) -> f64| {
            let v: Vec<f64> = group.iter().map(|o| f(o)).collect();
            mean_std(&v).map(|(m, _)| m).unwrap_or(f64::NAN)
        };
        let mean_net_j = PerComponent::from_fn(|c| mean_of(&|o| *o.net_j.get(c)));
        let sizes: Option<Vec<f64>> = group.iter().map(|o| o.args_bytes.map(|b| b as f64)).collect();
        rows.push(SweepRow {
            fraction,
            mean_net_j,
            mean_duration_s: mean_of(&|o| o.duration_s),
            args_total_bytes: sizes.and_then(|s| mean_std(&s).ok().map(|(m, _)| m)),
            observations: group.len(),
        });
    }
    SweepTable { rows, gaps, rejected }
}

/// Correlation of mean net energy with input size. Size is the mean argument
/// byte count when every row has one and it varies, otherwise the fraction.
pub fn sweep_correlation(table: &SweepTable, component: Component) -> Result<TestResult, AnalysisError> {
    let bytes: Option<Vec<f64>> = table.rows.iter().map(|r| r.args_total_bytes).collect();
    let x = match bytes {
        Some(b) if b.iter().any(|v| *v != b[0]) => b,
        _ => table.rows.iter().map(|r| r.fraction).collect(),
    };
    let y: Vec<f64> = table.rows.iter().map(|r| *r.mean_net_j.get(component)).collect();
    pearson(&x, &y)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(fraction: f64, energy: f64) -> SweepObservation {
        SweepObservation {
            fraction,
            net_j: PerComponent::new(energy, energy / 2.0, energy * 3.0),
            duration_s: fraction,
            args_bytes: Some((fraction * 8000.0).round() as u64),
        }
    }

    fn full_sweep(c: f64) -> Vec<SweepObservation> {
        (1..=10).flat_map(|k| (0..10).map(move |_| obs(fraction_of(k), c * k as f64))).collect()
    }

    #[test]
    fn ten_by_ten_gives_ten_rows() {
        let o = full_sweep(2.0);
        assert_eq!(o.len(), 100);
        let t = data_size_sweep(&o);
        assert_eq!(t.rows.len(), 10);
        assert!(t.gaps.is_empty());
        assert!(t.rows.iter().all(|r| r.observations == 10));
        assert_eq!(t.rows[2].fraction, 0.3);
    }

    #[test]
    fn linear_energy_correlates_perfectly() {
        let t = data_size_sweep(&full_sweep(3.5));
        for c in Component::ALL {
            assert!((sweep_correlation(&t, c).unwrap().statistic - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn missing_fraction_is_a_gap() {
        let o: Vec<_> = full_sweep(1.0).into_iter().filter(|o| (o.fraction - 0.7).abs() > 1e-9).collect();
        let t = data_size_sweep(&o);
        assert_eq!(t.rows.len(), 9);
        assert_eq!(t.gaps, vec![0.7]);
        assert!(sweep_correlation(&t, Component::Gpu).is_ok());
    }

    #[test]
    fn off_grid_fractions_are_rejected() {
        let t = data_size_sweep(&[obs(0.25, 1.0), obs(0.3, 1.0)]);
        assert_eq!(t.rejected, 1);
        assert_eq!(t.rows.len(), 1);
    }
}
