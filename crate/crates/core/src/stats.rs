//! Exact binomial test, Mann-Whitney U, Spearman correlation, and bootstrap intervals.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub n: Vec<usize>,
}

/// ln(n!) for 0..=n, by running sum.
fn ln_factorials(n: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(n + 1);
    let mut acc = 0.0f64;
    out.push(0.0);
    for i in 1..=n {
        acc += (i as f64).ln();
        out.push(acc);
    }
    out
}

/// Two-sided exact binomial test: sums every outcome no more likely than `k`.
pub fn binom_test_two_sided(k: u64, n: u64, p0: f64) -> Result<TestResult> {
    if k > n || !(p0 > 0.0 && p0 < 1.0) {
        return Err(Error::Parameter(format!(
            "binomial test needs 0 <= k <= n and 0 < p0 < 1, got k={k} n={n} p0={p0}"
        )));
    }
    let n_us = n as usize;
    let lf = ln_factorials(n_us);
    let (lp, lq) = (p0.ln(), (1.0 - p0).ln());
    let ln_pmf = |j: usize| lf[n_us] - lf[j] - lf[n_us - j] + j as f64 * lp + (n_us - j) as f64 * lq;
    let ln_pk = ln_pmf(k as usize);
    let cutoff = ln_pk + (1e-12f64).ln_1p();
    let p: f64 = (0..=n_us)
        .map(ln_pmf)
        .filter(|&l| l <= cutoff)
        .map(f64::exp)
        .sum();
    Ok(TestResult {
        statistic: k as f64,
        p_value: p.min(1.0),
        n: vec![n_us],
    })
}

/// Midranks (1-based) of `values`; ties share the mean of their positions.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j + 1) as f64 / 2.0;
        for &idx in &order[i..j] {
            ranks[idx] = rank;
        }
        i = j;
    }
    ranks
}

fn normal_sf(z: f64) -> f64 {
    0.5 * libm::erfc(z / std::f64::consts::SQRT_2)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MannWhitney {
    pub u_a: f64,
    pub u_b: f64,
    pub z: f64,
    pub p_value: f64,
}

impl MannWhitney {
    pub fn to_result(&self, n_a: usize, n_b: usize) -> TestResult {
        TestResult {
            statistic: self.u_a,
            p_value: self.p_value,
            n: vec![n_a, n_b],
        }
    }
}

/// Pooled sizes up to this use the exact permutation distribution of U.
pub const MWU_EXACT_MAX_TOTAL: usize = 20;

/// Two-sided exact p under random assignment of the pooled midranks to the
/// first sample. Midranks are doubled so every rank sum is an integer.
fn mwu_exact_p(ranks: &[f64], na: usize) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (2.0 * r).round() as usize).collect();
    let max_sum: usize = doubled.iter().sum();
    // ways[j][s]: subsets of size j with doubled rank sum s
    let mut ways = vec![vec![0u64; max_sum + 1]; na + 1];
    ways[0][0] = 1;
    for &r in &doubled {
        for j in (1..=na).rev() {
            for s in (r..=max_sum).rev() {
                ways[j][s] += ways[j - 1][s - r];
            }
        }
    }
    let nb = ranks.len() - na;
    // doubled U is s - na(na+1), centred at na*nb
    let centre = (na * nb) as i64;
    let offset = (na * (na + 1)) as i64;
    let observed: i64 = doubled[..na].iter().sum::<usize>() as i64 - offset;
    let threshold = (observed - centre).abs();
    let (mut extreme, mut total) = (0u64, 0u64);
    for (s, &w) in ways[na].iter().enumerate() {
        total += w;
        if (s as i64 - offset - centre).abs() >= threshold {
            extreme += w;
        }
    }
    extreme as f64 / total as f64
}

/// Two-sided Mann-Whitney U with midranks. Small pooled samples get the exact
/// permutation p-value; larger ones the normal approximation with
/// tie-corrected variance and continuity correction.
pub fn mann_whitney_u(a: &[f64], b: &[f64]) -> Result<MannWhitney> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Parameter("Mann-Whitney U needs two non-empty samples".into()));
    }
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let joined: Vec<f64> = a.iter().chain(b).copied().collect();
    let ranks = midranks(&joined);
    let rank_sum_a: f64 = ranks[..a.len()].iter().sum();
    let u_a = rank_sum_a - na * (na + 1.0) / 2.0;
    let u_b = na * nb - u_a;

    let n = na + nb;
    let mut sorted = joined;
    sorted.sort_by(f64::total_cmp);
    let tie_term: f64 = sorted
        .chunk_by(|x, y| x == y)
        .map(|g| {
            let t = g.len() as f64;
            t * t * t - t
        })
        .sum();
    let mean = na * nb / 2.0;
    let var = if n > 1.0 {
        na * nb / 12.0 * ((n + 1.0) - tie_term / (n * (n - 1.0)))
    } else {
        0.0
    };
    let (z, p_value) = if var <= 0.0 {
        (0.0, 1.0)
    } else {
        let z = ((u_a - mean).abs() - 0.5).max(0.0) / var.sqrt();
        let p = if a.len() + b.len() <= MWU_EXACT_MAX_TOTAL {
            mwu_exact_p(&ranks, a.len())
        } else {
            2.0 * normal_sf(z)
        };
        (z, p.min(1.0))
    };
    Ok(MannWhitney { u_a, u_b, z, p_value })
}

/// Spearman's rho as the Pearson correlation of midranks.
///
/// `Ok(None)` when either input has constant ranks (rho undefined).
pub fn spearman(x: &[f64], y: &[f64]) -> Result<Option<f64>> {
    if x.len() != y.len() || x.len() < 3 {
        return Err(Error::Parameter(format!(
            "spearman needs equal lengths >= 3, got {} and {}",
            x.len(),
            y.len()
        )));
    }
    Ok(pearson(&midranks(x), &midranks(y)))
}

fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    debug_assert!(!sorted.is_empty());
    let pos = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Median with the mean-of-middle-two convention.
pub fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { (v[m - 1] + v[m]) / 2.0 })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn overlaps(&self, other: &Interval) -> bool {
        self.lo <= other.hi && other.lo <= self.hi
    }
}

/// Percentile bootstrap interval for the mean.
pub fn bootstrap_mean_ci<R: Rng + ?Sized>(
    values: &[f64],
    n_resamples: usize,
    level: f64,
    rng: &mut R,
) -> Result<Interval> {
    if values.is_empty() || n_resamples == 0 || !(level > 0.0 && level < 1.0) {
        return Err(Error::Parameter("bootstrap needs values, resamples, and 0 < level < 1".into()));
    }
    let n = values.len();
    let mut means: Vec<f64> = (0..n_resamples)
        .map(|_| (0..n).map(|_| values[rng.gen_range(0..n)]).sum::<f64>() / n as f64)
        .collect();
    means.sort_by(f64::total_cmp);
    let alpha = (1.0 - level) / 2.0;
    Ok(Interval {
        lo: quantile_sorted(&means, alpha),
        hi: quantile_sorted(&means, 1.0 - alpha),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::substream;
    use proptest::prelude::*;

    #[test]
    fn binomial_examples() {
        assert_eq!(binom_test_two_sided(5, 10, 0.5).unwrap().p_value, 1.0);
        let p = binom_test_two_sided(10, 10, 0.5).unwrap().p_value;
        assert!((p - 2.0 / 1024.0).abs() < 1e-15, "{p}");
        assert!(binom_test_two_sided(0, 0, 0.5).unwrap().p_value == 1.0);
        assert!(binom_test_two_sided(11, 10, 0.5).is_err());
        assert!(binom_test_two_sided(1, 10, 1.0).is_err());
    }

    #[test]
    fn mwu_separation_and_identity() {
        let r = mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap();
        assert_eq!(r.u_a, 0.0);
        assert_eq!(r.u_b, 9.0);
        let a = [1.0, 2.0, 2.0, 5.0];
        let r = mann_whitney_u(&a, &a).unwrap();
        assert_eq!(r.u_a, 8.0);
        assert!(r.p_value > 0.99);
        // exact: two of the twenty equally likely splits are this extreme
        assert!((r_sep_p() - 0.1).abs() < 1e-12);
        let flat = mann_whitney_u(&[0.5, 0.5], &[0.5, 0.5, 0.5]).unwrap();
        assert_eq!(flat.p_value, 1.0);
        assert!(mann_whitney_u(&[], &[1.0]).is_err());
    }

    fn r_sep_p() -> f64 {
        mann_whitney_u(&[1.0, 2.0, 3.0], &[4.0, 5.0, 6.0]).unwrap().p_value
    }

    #[test]
    fn mwu_large_samples_use_normal_approximation() {
        // 11 vs 11, no ties: U = 0, z = (60.5 - 0.5) / sqrt(11*11*23/12)
        let a: Vec<f64> = (0..11).map(f64::from).collect();
        let b: Vec<f64> = (11..22).map(f64::from).collect();
        let r = mann_whitney_u(&a, &b).unwrap();
        let z = 60.0 / (11.0 * 11.0 * 23.0 / 12.0f64).sqrt();
        assert!((r.z - z).abs() < 1e-12);
        assert!((r.p_value - libm::erfc(z / std::f64::consts::SQRT_2)).abs() < 1e-15);
    }

    #[test]
    fn mwu_exact_with_ties() {
        // pooled [1, 2, 2, 3]; a = [1, 2] has U = 0.5. Splits of midranks
        // {1, 2.5, 2.5, 4}: U values 0.5, 0.5, 2, 2, 3.5, 3.5 around mean 2.
        let r = mann_whitney_u(&[1.0, 2.0], &[2.0, 3.0]).unwrap();
        assert_eq!(r.u_a, 0.5);
        assert!((r.p_value - 4.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn midranks_share_ties() {
        assert_eq!(midranks(&[1., 2., 2., 4., 5.]), vec![1., 2.5, 2.5, 4., 5.]);
        assert_eq!(midranks(&[3., 3., 3.]), vec![2., 2., 2.]);
    }

    #[test]
    fn spearman_monotone() {
        let x = [1.0, 2.0, 3.0, 4.0, 5.0];
        let up = spearman(&x, &[2.0, 4.0, 8.0, 16.0, 32.0]).unwrap().unwrap();
        let down = spearman(&x, &[5.0, 3.0, 1.0, 0.0, -9.0]).unwrap().unwrap();
        assert!((up - 1.0).abs() < 1e-12 && (down + 1.0).abs() < 1e-12);
        assert_eq!(spearman(&x, &[1.0; 5]).unwrap(), None);
        assert!(spearman(&x[..2], &x[..2]).is_err());
    }

    #[test]
    fn median_conventions() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), Some(2.0));
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), Some(2.5));
        assert_eq!(median(&[]), None);
    }

    #[test]
    fn bootstrap_degenerate_and_containing() {
        let mut rng = substream(3, &[]);
        let ci = bootstrap_mean_ci(&[2.5; 10], 1000, 0.95, &mut rng).unwrap();
        assert_eq!((ci.lo, ci.hi), (2.5, 2.5));
        let values: Vec<f64> = (0..40).map(|i| (i as f64 * 0.37).sin()).collect();
        let mean = values.iter().sum::<f64>() / 40.0;
        let ci = bootstrap_mean_ci(&values, 1000, 0.95, &mut rng).unwrap();
        assert!(ci.contains(mean));
        let again = bootstrap_mean_ci(&values, 1000, 0.95, &mut substream(3, &[])).unwrap();
        let first = bootstrap_mean_ci(&values, 1000, 0.95, &mut substream(3, &[])).unwrap();
        assert_eq!(again, first);
    }

    proptest! {
        #[test]
        fn binomial_symmetric_at_half(n in 0u64..300, frac in 0.0f64..=1.0) {
            let k = (n as f64 * frac).round() as u64;
            let a = binom_test_two_sided(k, n, 0.5).unwrap().p_value;
            let b = binom_test_two_sided(n - k, n, 0.5).unwrap().p_value;
            prop_assert!((a - b).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&a));
        }

        #[test]
        fn mwu_u_sum(a in prop::collection::vec(0i32..10, 1..20), b in prop::collection::vec(0i32..10, 1..20)) {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let r = mann_whitney_u(&a, &b).unwrap();
            prop_assert!((r.u_a + r.u_b - (a.len() * b.len()) as f64).abs() < 1e-9);
            prop_assert!((0.0..=1.0).contains(&r.p_value));
        }

        #[test]
        fn spearman_symmetric_and_transform_invariant(
            pairs in prop::collection::vec((-100i32..100, -100i32..100), 3..40)
        ) {
            let x: Vec<f64> = pairs.iter().map(|p| f64::from(p.0)).collect();
            let y: Vec<f64> = pairs.iter().map(|p| f64::from(p.1)).collect();
            let xy = spearman(&x, &y).unwrap();
            let yx = spearman(&y, &x).unwrap();
            let xt: Vec<f64> = x.iter().map(|v| (v / 50.0).exp() * 3.0 + 1.0).collect();
            let t = spearman(&xt, &y).unwrap();
            match (xy, yx, t) {
                (Some(a), Some(b), Some(c)) => {
                    prop_assert!((a - b).abs() < 1e-12);
                    prop_assert!((a - c).abs() < 1e-12);
                }
                (None, None, None) => {}
                other => prop_assert!(false, "inconsistent {:?}", other),
            }
        }
    }
}
