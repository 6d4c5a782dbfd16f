use super::special::student_t_two_sided;
use super::{AnalysisError, Alternative, TestMethod, TestResult};

/// Pearson product-moment correlation with a two-sided p-value from the
/// t-transform `t = r * sqrt((n - 2) / (1 - r^2))`.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<TestResult, AnalysisError> {
    if x.len() != y.len() {
        return Err(AnalysisError::LengthMismatch(x.len(), y.len()));
    }
    let n = x.len();
    if n < 3 {
        return Err(AnalysisError::TooFewObservations { have: n, need: 3 });
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(AnalysisError::UndefinedCorrelation("zero variance"));
    }
    let r = (sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0);
    let df = nf - 2.0;
    let p_value = if r.abs() == 1.0 {
        0.0
    } else {
        let t = r * (df / (1.0 - r * r)).sqrt();
        student_t_two_sided(t, df).clamp(0.0, 1.0)
    };
    Ok(TestResult {
        statistic: r,
        p_value,
        method: TestMethod::Pearson,
        alternative: Alternative::TwoSided,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn identity_and_negation() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        assert_eq!(pearson(&x, &x).unwrap().statistic, 1.0);
        assert_eq!(pearson(&x, &neg).unwrap().statistic, -1.0);
        assert_eq!(pearson(&x, &x).unwrap().p_value, 0.0);
    }

    #[test]
    fn three_point_example() {
        // Σdxdy = 3, Σdx² = 2, Σdy² = 14/3
        let r = pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
        let expected = 3.0 / (2.0f64 * 14.0 / 3.0).sqrt();
        assert!((r.statistic - expected).abs() < 1e-15);
        assert!((r.statistic - 0.98198).abs() < 1e-5);
        // df = 1: the t tail reduces to 1 - 2/π·atan(|t|)
        let t = expected * (1.0 / (1.0 - expected * expected)).sqrt();
        let p = 1.0 - 2.0 / std::f64::consts::PI * t.atan();
        assert!((r.p_value - p).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs() {
        assert!(matches!(pearson(&[1.0, 1.0, 1.0], &[1.0, 2.0, 3.0]), Err(AnalysisError::UndefinedCorrelation(_))));
        assert!(matches!(pearson(&[1.0, 2.0], &[1.0, 2.0]), Err(AnalysisError::TooFewObservations { .. })));
        assert!(matches!(pearson(&[1.0, 2.0, 3.0], &[1.0, 2.0]), Err(AnalysisError::LengthMismatch(3, 2))));
    }

    proptest! {
        #[test]
        fn invariant_under_positive_affine_maps(
            pts in prop::collection::vec((-100.0f64..100.0, -100.0f64..100.0), 3..30),
            alpha in 0.01f64..50.0,
            beta in -100.0f64..100.0,
        ) {
            let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
            let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
            if let Ok(base) = pearson(&x, &y) {
                let xs: Vec<f64> = x.iter().map(|v| alpha * v + beta).collect();
                let scaled = pearson(&xs, &y).unwrap();
                prop_assert!((base.statistic - scaled.statistic).abs() < 1e-9);
                prop_assert!((-1.0..=1.0).contains(&scaled.statistic));
                prop_assert!((0.0..=1.0).contains(&scaled.p_value));
            }
        }
    }
}
