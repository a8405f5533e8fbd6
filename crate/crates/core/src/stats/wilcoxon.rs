//! Wilcoxon signed-rank (paired) and rank-sum / Mann-Whitney U (unpaired)
//! tests with exact null distributions for small samples.
//!
//! Exact p-values come from the permutation distribution of the rank
//! statistic computed by counting (a subset-sum recursion over doubled
//! midranks, so ties are handled exactly). Two-sided p is
//! `min(1, 2 * min(P(S <= s), P(S >= s)))`.

use serde::{Deserialize, Serialize};

use super::ranks::{midranks, normal_sf, tie_term};
use crate::error::{Error, Result};

/// Largest number of non-zero differences tested exactly.
pub const SIGNED_RANK_EXACT_MAX: usize = 25;
/// Largest combined sample size tested exactly.
pub const RANK_SUM_EXACT_MAX: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestMethod {
    SignedRankExact,
    SignedRankNormal,
    RankSumExact,
    RankSumNormal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: TestMethod,
    pub n_effective: usize,
}

/// Paired observations aligned by index.
#[derive(Debug, Clone, PartialEq)]
pub struct PairedSample {
    pub labels: Vec<String>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl PairedSample {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<PairedSample> {
        let labels = (0..a.len()).map(|i| i.to_string()).collect();
        PairedSample::labelled(labels, a, b)
    }

    pub fn labelled(labels: Vec<String>, a: Vec<f64>, b: Vec<f64>) -> Result<PairedSample> {
        if a.len() != b.len() || a.len() != labels.len() {
            return Err(Error::Input(format!(
                "paired sample lengths differ: {} labels, {} vs {} values",
                labels.len(),
                a.len(),
                b.len()
            )));
        }
        if a.is_empty() {
            return Err(Error::Input("paired sample is empty".into()));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::Input("paired sample contains non-finite values".into()));
        }
        Ok(PairedSample { labels, a, b })
    }
}

fn two_sided(cdf: f64, sf: f64) -> f64 {
    (2.0 * cdf.min(sf)).min(1.0)
}

/// Clamp into (0, 1]; the normal tail can underflow for extreme z.
fn clamp_p(p: f64) -> f64 {
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

/// Midranks are multiples of 1/2; doubling them gives exact integers.
fn doubled(ranks: &[f64]) -> Vec<usize> {
    ranks.iter().map(|r| (2.0 * r).round() as usize).collect()
}

/// Number of sign assignments reaching each doubled positive-rank sum.
fn signed_rank_counts(weights: &[usize]) -> Vec<f64> {
    let total: usize = weights.iter().sum();
    let mut counts = vec![0.0; total + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &w in weights {
        for s in (0..=reach).rev() {
            if counts[s] != 0.0 {
                counts[s + w] += counts[s];
            }
        }
        reach += w;
    }
    counts
}

pub fn wilcoxon_signed_rank(sample: &PairedSample) -> Result<TestResult> {
    if sample.a.len() != sample.b.len() {
        return Err(Error::Input("paired sample lengths differ".into()));
    }
    let diffs: Vec<f64> = sample
        .a
        .iter()
        .zip(&sample.b)
        .map(|(a, b)| a - b)
        .filter(|d| *d != 0.0)
        .collect();
    let n = diffs.len();
    if n == 0 {
        return Ok(TestResult {
            statistic: 0.0,
            p_value: 1.0,
            method: TestMethod::SignedRankExact,
            n_effective: 0,
        });
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = midranks(&abs);
    let w_plus: f64 = ranks
        .iter()
        .zip(&diffs)
        .filter(|(_, d)| **d > 0.0)
        .map(|(r, _)| r)
        .sum();
    let total = n as f64 * (n as f64 + 1.0) / 2.0;
    let statistic = w_plus.min(total - w_plus);

    if n <= SIGNED_RANK_EXACT_MAX {
        let weights = doubled(&ranks);
        let counts = signed_rank_counts(&weights);
        let observed = (2.0 * w_plus).round() as usize;
        let all = 2f64.powi(n as i32);
        let cdf: f64 = counts[..=observed].iter().sum::<f64>() / all;
        let sf: f64 = counts[observed..].iter().sum::<f64>() / all;
        return Ok(TestResult {
            statistic,
            p_value: clamp_p(two_sided(cdf, sf)),
            method: TestMethod::SignedRankExact,
            n_effective: n,
        });
    }

    let nf = n as f64;
    let mean = total / 2.0;
    let var = nf * (nf + 1.0) * (2.0 * nf + 1.0) / 24.0 - tie_term(&ties) / 48.0;
    let z = ((w_plus - mean).abs() - 0.5).max(0.0) / var.sqrt();
    Ok(TestResult {
        statistic,
        p_value: clamp_p((2.0 * normal_sf(z)).min(1.0)),
        method: TestMethod::SignedRankNormal,
        n_effective: n,
    })
}

/// Number of size-`k` subsets reaching each doubled rank sum, for `k = take`.
fn rank_sum_counts(weights: &[usize], take: usize) -> Vec<f64> {
    let total: usize = weights.iter().sum();
    // counts[k][s]: subsets of size k with doubled rank sum s
    let mut counts = vec![vec![0.0; total + 1]; take + 1];
    counts[0][0] = 1.0;
    let mut reach = 0;
    for (used, &w) in weights.iter().enumerate() {
        for k in (1..=take.min(used + 1)).rev() {
            let (lower, upper) = counts.split_at_mut(k);
            let prev = &lower[k - 1];
            let cur = &mut upper[0];
            for s in (0..=reach).rev() {
                if prev[s] != 0.0 {
                    cur[s + w] += prev[s];
                }
            }
        }
        reach += w;
    }
    counts.swap_remove(take)
}

pub fn wilcoxon_rank_sum(x: &[f64], y: &[f64]) -> Result<TestResult> {
    if x.is_empty() || y.is_empty() {
        return Err(Error::Input("rank-sum test needs two non-empty groups".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Input("rank-sum sample contains non-finite values".into()));
    }
    let (n, m) = (x.len(), y.len());
    let pooled: Vec<f64> = x.iter().chain(y).copied().collect();
    let (ranks, ties) = midranks(&pooled);
    let r_x: f64 = ranks[..n].iter().sum();
    let nf = n as f64;
    let mf = m as f64;
    let u_x = r_x - nf * (nf + 1.0) / 2.0;
    let statistic = u_x.min(nf * mf - u_x);

    if n + m <= RANK_SUM_EXACT_MAX {
        let weights = doubled(&ranks);
        let counts = rank_sum_counts(&weights, n);
        let observed = (2.0 * r_x).round() as usize;
        let all: f64 = counts.iter().sum();
        let cdf = counts[..=observed].iter().sum::<f64>() / all;
        let sf = counts[observed..].iter().sum::<f64>() / all;
        return Ok(TestResult {
            statistic,
            p_value: clamp_p(two_sided(cdf, sf)),
            method: TestMethod::RankSumExact,
            n_effective: n + m,
        });
    }

    let total = nf + mf;
    let mean = nf * mf / 2.0;
    let var = nf * mf / 12.0 * ((total + 1.0) - tie_term(&ties) / (total * (total - 1.0)));
    let p = if var <= 0.0 {
        1.0
    } else {
        let z = ((u_x - mean).abs() - 0.5).max(0.0) / var.sqrt();
        (2.0 * normal_sf(z)).min(1.0)
    };
    Ok(TestResult {
        statistic,
        p_value: clamp_p(p),
        method: TestMethod::RankSumNormal,
        n_effective: n + m,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn uniform_shift_of_five() {
        let s = PairedSample::new(vec![1.0, 2.0, 3.0, 4.0, 5.0], vec![2.0, 3.0, 4.0, 5.0, 6.0]).unwrap();
        let r = wilcoxon_signed_rank(&s).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 0.0625);
        assert_eq!(r.method, TestMethod::SignedRankExact);
        assert_eq!(r.n_effective, 5);
    }

    #[test]
    fn identical_pairs_give_p_one() {
        let s = PairedSample::new(vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]).unwrap();
        let r = wilcoxon_signed_rank(&s).unwrap();
        assert_eq!((r.p_value, r.statistic, r.n_effective), (1.0, 0.0, 0));
    }

    #[test]
    fn length_mismatch_is_input_error() {
        assert!(PairedSample::new(vec![1.0], vec![1.0, 2.0]).is_err());
        let s = PairedSample {
            labels: vec!["a".into()],
            a: vec![1.0],
            b: vec![],
        };
        assert!(wilcoxon_signed_rank(&s).is_err());
    }

    #[test]
    fn separated_triples() {
        let r = wilcoxon_rank_sum(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert!((r.p_value - 0.1).abs() < 1e-15);
        assert_eq!(r.method, TestMethod::RankSumExact);
    }

    #[test]
    fn tied_singletons() {
        let r = wilcoxon_rank_sum(&[3.0], &[3.0]).unwrap();
        assert_eq!(r.p_value, 1.0);
        assert!(wilcoxon_rank_sum(&[], &[1.0]).is_err());
    }

    #[test]
    fn large_samples_use_normal_approximation() {
        let a: Vec<f64> = (0..40).map(|i| i as f64).collect();
        let b: Vec<f64> = (0..40)
            .map(|i| i as f64 + if i % 3 == 0 { 0.5 } else { -1.5 })
            .collect();
        let r = wilcoxon_signed_rank(&PairedSample::new(a.clone(), b).unwrap()).unwrap();
        assert_eq!(r.method, TestMethod::SignedRankNormal);
        assert!(r.p_value > 0.0 && r.p_value <= 1.0);

        let y: Vec<f64> = a.iter().map(|v| v + 30.0).collect();
        let r = wilcoxon_rank_sum(&a, &y).unwrap();
        assert_eq!(r.method, TestMethod::RankSumNormal);
        assert!(r.p_value < 1e-6);

        // all values tied: zero variance
        let r = wilcoxon_rank_sum(&[1.0; 15], &[1.0; 15]).unwrap();
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn normal_approximation_reference_values() {
        // Hand-computed: n = 30 differences 1..=30 with the first 10 negative.
        // W+ = sum(11..=30) = 410, mean = 232.5, var = 30*31*61/24 = 2363.75,
        // z = (177.5 - 0.5) / sqrt(2363.75).
        let a: Vec<f64> = (1..=30).map(|i| if i <= 10 { -(i as f64) } else { i as f64 }).collect();
        let r = wilcoxon_signed_rank(&PairedSample::new(a, vec![0.0; 30]).unwrap()).unwrap();
        let z = 177.0 / 2363.75f64.sqrt();
        assert!((r.p_value - libm::erfc(z / std::f64::consts::SQRT_2)).abs() < 1e-15);
        assert_eq!(r.statistic, 55.0);
    }
}
