//! Exact small-instance distributions for the aggregation limit.
//!
//! The sum of independent Bernoulli(q_i) variables has the Poisson-binomial
//! law, computed exactly by iterative convolution. Its total-variation
//! distance to the matched Poisson(Σq) obeys the Le Cam bound
//! TV ≤ Σ q_i², which the diagnostics use as an external sanity check.

use crate::error::{GabError, Result};

/// Truncation budget for the Poisson tail in TV computations.
pub const POISSON_TAIL: f64 = 1e-12;

/// Exact PMF of Σ_i Bernoulli(q_i) over 0..=N by iterative convolution.
pub fn bernoulli_sum_pmf(q: &[f64]) -> Result<Vec<f64>> {
    if q.iter().any(|&v| !(0.0..=1.0).contains(&v)) {
        return Err(GabError::Domain("probabilities must lie in [0,1]".into()));
    }
    let mut pmf = Vec::with_capacity(q.len() + 1);
    pmf.push(1.0);
    for (k, &qi) in q.iter().enumerate() {
        pmf.push(0.0);
        // convolve in place, highest index first
        for j in (0..=k).rev() {
            let stay = pmf[j] * (1.0 - qi);
            pmf[j + 1] += pmf[j] * qi;
            pmf[j] = stay;
        }
    }
    Ok(pmf)
}

/// Poisson(λ) PMF from 0 up to cumulative mass 1 − `POISSON_TAIL`.
pub fn poisson_pmf_truncated(lambda: f64) -> Vec<f64> {
    if lambda <= 0.0 {
        return vec![1.0];
    }
    let mut pmf = Vec::with_capacity(16);
    let mut term = (-lambda).exp();
    let mut cum = term;
    pmf.push(term);
    let mut k = 0u32;
    while cum < 1.0 - POISSON_TAIL {
        k += 1;
        term *= lambda / k as f64;
        cum += term;
        pmf.push(term);
        if k > 10_000_000 {
            break;
        }
    }
    pmf
}

/// TV(PoissonBinomial(q), Poisson(Σq)) = ½ Σ_k |pmf_PB(k) − pmf_Pois(k)|,
/// with the Poisson tail truncated at cumulative 1 − 1e-12 (the truncated
/// mass enters the sum as unmatched Poisson weight, so the error budget is
/// below the tail tolerance).
pub fn poisson_tv_distance(q: &[f64]) -> Result<f64> {
    let pb = bernoulli_sum_pmf(q)?;
    let lambda: f64 = q.iter().sum();
    let pois = poisson_pmf_truncated(lambda);
    Ok(tv_between(&pb, &pois))
}

/// ½ L1 distance between two PMFs of possibly different support lengths.
pub fn tv_between(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let mut acc = 0.0;
    for k in 0..len {
        let pa = a.get(k).copied().unwrap_or(0.0);
        let pb = b.get(k).copied().unwrap_or(0.0);
        acc += (pa - pb).abs();
    }
    0.5 * acc
}

/// Σ q_i², the Le Cam upper bound on the TV distance.
pub fn le_cam_bound(q: &[f64]) -> f64 {
    q.iter().map(|&v| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn fair_coins_pmf() {
        let pmf = bernoulli_sum_pmf(&[0.5, 0.5]).unwrap();
        assert_eq!(pmf.len(), 3);
        assert!((pmf[0] - 0.25).abs() < 1e-15);
        assert!((pmf[1] - 0.5).abs() < 1e-15);
        assert!((pmf[2] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn product_expansion_pmf() {
        let pmf = bernoulli_sum_pmf(&[0.1, 0.2]).unwrap();
        assert!((pmf[0] - 0.72).abs() < 1e-15);
        assert!((pmf[1] - 0.26).abs() < 1e-15);
        assert!((pmf[2] - 0.02).abs() < 1e-15);
    }

    #[test]
    fn zero_probabilities_are_a_point_mass() {
        let pmf = bernoulli_sum_pmf(&[0.0; 7]).unwrap();
        assert_eq!(pmf[0], 1.0);
        assert!(pmf[1..].iter().all(|&v| v == 0.0));
        assert_eq!(poisson_tv_distance(&[0.0; 7]).unwrap(), 0.0);
    }

    #[test]
    fn single_certain_success_tv() {
        // PB = point mass at 1; Pois(1): TV = ½(e⁻¹ + (1−e⁻¹) + tail) = 1 − e⁻¹
        let tv = poisson_tv_distance(&[1.0]).unwrap();
        assert!((tv - (1.0 - (-1.0f64).exp())).abs() < 1e-12, "tv {tv}");
    }

    #[test]
    fn le_cam_reference_case() {
        let q = vec![1.25e-3; 1000];
        let tv = poisson_tv_distance(&q).unwrap();
        let bound = le_cam_bound(&q);
        assert!((bound - 1.5625e-3).abs() < 1e-12);
        assert!(tv <= bound, "tv {tv} vs bound {bound}");
        assert!(tv > 0.0);
    }

    proptest! {
        #[test]
        fn pmf_identities(q in proptest::collection::vec(0.0f64..1.0, 1..40)) {
            let pmf = bernoulli_sum_pmf(&q).unwrap();
            let total: f64 = pmf.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
            let mean: f64 = pmf.iter().enumerate().map(|(k, &p)| k as f64 * p).sum();
            let expect_mean: f64 = q.iter().sum();
            prop_assert!((mean - expect_mean).abs() < 1e-12);
            let second: f64 = pmf.iter().enumerate().map(|(k, &p)| (k * k) as f64 * p).sum();
            let var = second - mean * mean;
            let expect_var: f64 = q.iter().map(|&v| v * (1.0 - v)).sum();
            prop_assert!((var - expect_var).abs() < 1e-10);
        }

        #[test]
        fn le_cam_bound_holds(q in proptest::collection::vec(0.0f64..0.5, 1..30)) {
            let tv = poisson_tv_distance(&q).unwrap();
            prop_assert!(tv <= le_cam_bound(&q) + 1e-12);
        }
    }
}
