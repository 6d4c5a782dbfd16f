use super::special::{normal_cdf, normal_sf};
use super::{AnalysisError, Alternative, TestMethod, TestResult};

/// Largest number of non-zero differences handled by the exact distribution.
pub const EXACT_MAX_N: usize = 20;

/// Average ranks of `values` (1-based), plus the tie group sizes.
fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| values[i].total_cmp(&values[j]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        // positions i..j share ranks i+1..=j
        let avg = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = avg;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

/// Wilcoxon signed-rank test on paired samples, statistic W⁺.
pub fn wilcoxon_signed_rank(a: &[f64], b: &[f64], alternative: Alternative) -> Result<TestResult, AnalysisError> {
    if a.len() != b.len() {
        return Err(AnalysisError::LengthMismatch(a.len(), b.len()));
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).filter(|d| *d != 0.0).collect();
    if d.is_empty() {
        return Err(AnalysisError::DegenerateTest);
    }
    let n = d.len();
    let abs: Vec<f64> = d.iter().map(|v| v.abs()).collect();
    let (ranks, ties) = average_ranks(&abs);
    let w_plus: f64 = d.iter().zip(&ranks).filter(|(v, _)| **v > 0.0).map(|(_, r)| r).sum();

    let (p_greater, p_less, method) = if n <= EXACT_MAX_N {
        let (g, l) = exact_tails(&ranks, w_plus);
        (g, l, TestMethod::WilcoxonExact)
    } else {
        let nf = n as f64;
        let mean = nf * (nf + 1.0) / 4.0;
        let tie_term: f64 = ties.iter().map(|&t| (t * t * t - t) as f64).sum::<f64>() / 48.0;
        let sd = (nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term).sqrt();
        let g = normal_sf((w_plus - mean - 0.5) / sd);
        let l = normal_cdf((w_plus - mean + 0.5) / sd);
        (g, l, TestMethod::WilcoxonNormal)
    };
    let p_value = match alternative {
        Alternative::Greater => p_greater,
        Alternative::Less => p_less,
        Alternative::TwoSided => 2.0 * p_greater.min(p_less),
    }
    .clamp(0.0, 1.0);
    Ok(TestResult { statistic: w_plus, p_value, method, alternative, n })
}

/// P(W⁺ ≥ w) and P(W⁺ ≤ w) under the null, counting sign assignments.
///
/// Average ranks are multiples of 1/2, so doubling them gives integer
/// weights and the subset-sum counts are exact.
fn exact_tails(ranks: &[f64], w_plus: f64) -> (f64, f64) {
    let weights: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let total: usize = weights.iter().sum();
    let mut counts = vec![0u64; total + 1];
    counts[0] = 1;
    for &w in &weights {
        for s in (w..=total).rev() {
            counts[s] += counts[s - w];
        }
    }
    let target = (2.0 * w_plus).round() as usize;
    let all = (1u64 << ranks.len()) as f64;
    let ge: u64 = counts[target..].iter().sum();
    let le: u64 = counts[..=target].iter().sum();
    (ge as f64 / all, le as f64 / all)
}
