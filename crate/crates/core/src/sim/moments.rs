//! Stationary moments of the aggregate probability Σ_i p_{i,t} for the
//! interactive family.
//!
//! Writing y_t = p_t + v_t with conditionally independent noise, the
//! stationary covariance Ω = V(p_t) solves
//!
//! ```text
//!   Ω = Φ Ω Φᵀ + Π diag(μ_i(1−μ_i) − Ω_ii) Πᵀ,
//!   Π_ij = α_i δ_ij + γ_i/N,   Φ = Π + diag(β_i),
//! ```
//!
//! and V(Σ_i p_{i,t}) = 1ᵀΩ1. Under the rare-events scaling this converges
//! to c̄ γ̄² / ((1 − (β+γ̄)²)(1 − β − γ̄)) as N → ∞.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{GabError, Result};
use crate::model::mean::unconditional_mean;
use crate::model::{Family, InteractiveParams, ModelSpec};
use crate::sim::{simulate_replicate, SimConfig};

/// N → ∞ limit of V(Σ_i p_{i,t}) under the rare-events scaling.
pub fn sum_p_variance_limit(c_bar: f64, gamma_bar: f64, beta: f64) -> f64 {
    let persist = beta + gamma_bar;
    c_bar * gamma_bar * gamma_bar / ((1.0 - persist * persist) * (1.0 - beta - gamma_bar))
}

fn interactive_params(spec: &ModelSpec) -> Result<&[InteractiveParams]> {
    match &spec.family {
        Family::Interactive(ps) => Ok(ps),
        _ => Err(GabError::Unsupported {
            family: spec.family_name(),
            what: "stationary moments are defined for the Interactive family",
        }),
    }
}

/// A Ω Aᵀ for A = diag(d) + g·1ᵀ/N, in O(N²).
fn structured_sandwich(d: &[f64], g: &[f64], omega: &DMatrix<f64>) -> DMatrix<f64> {
    let n = d.len();
    let inv_n = 1.0 / n as f64;
    // M = A Ω: row i is d_i Ω_i· + g_i (colsum Ω)/N
    let mut colsum = vec![0.0; n];
    for j in 0..n {
        let mut acc = 0.0;
        for i in 0..n {
            acc += omega[(i, j)];
        }
        colsum[j] = acc;
    }
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            m[(i, j)] = d[i] * omega[(i, j)] + g[i] * colsum[j] * inv_n;
        }
    }
    // out = M Aᵀ: column j is M·j d_j + (rowsum M) g_j / N
    let mut rowsum = vec![0.0; n];
    for i in 0..n {
        rowsum[i] = m.row(i).iter().sum();
    }
    let mut out = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = m[(i, j)] * d[j] + rowsum[i] * g[j] * inv_n;
        }
    }
    out
}

/// Exact stationary covariance of p_t by fixed-point iteration on the
/// covariance equation; converges under the contraction condition.
pub fn stationary_covariance(spec: &ModelSpec) -> Result<DMatrix<f64>> {
    let ps = interactive_params(spec)?;
    let mu = unconditional_mean(spec)?.per_series_mean;
    let n = ps.len();
    let alpha: Vec<f64> = ps.iter().map(|p| p.alpha).collect();
    let gamma: Vec<f64> = ps.iter().map(|p| p.gamma).collect();
    let phi_diag: Vec<f64> = ps.iter().map(|p| p.alpha + p.beta).collect();
    let m: Vec<f64> = mu.iter().map(|&u| u * (1.0 - u)).collect();

    let mut omega = DMatrix::<f64>::zeros(n, n);
    let cap = 20_000;
    for it in 0..cap {
        // noise-injection term Π diag(m − Ω_ii) Πᵀ
        let mut d = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            d[(i, i)] = m[i] - omega[(i, i)];
        }
        let inject = structured_sandwich(&alpha, &gamma, &d);
        let next = structured_sandwich(&phi_diag, &gamma, &omega) + inject;
        let delta = (&next - &omega).abs().max();
        let scale = next.abs().max().max(1e-300);
        omega = next;
        if delta <= 1e-15 * scale.max(1.0) {
            return Ok(omega);
        }
        if it == cap - 1 {
            return Err(GabError::NonConvergence { iterations: cap });
        }
    }
    unreachable!()
}

/// Exact stationary covariance by a direct dense solve of the N²-unknown
/// linear system; the independent cross-check for the fixed-point route.
/// Capped at N ≤ 40.
pub fn stationary_covariance_dense(spec: &ModelSpec) -> Result<DMatrix<f64>> {
    let ps = interactive_params(spec)?;
    let n = ps.len();
    if n > 40 {
        return Err(GabError::Config(format!("dense covariance solve capped at N = 40, got {n}")));
    }
    let mu = unconditional_mean(spec)?.per_series_mean;
    let inv_n = 1.0 / n as f64;
    let pi = DMatrix::from_fn(n, n, |i, j| {
        ps[i].gamma * inv_n + if i == j { ps[i].alpha } else { 0.0 }
    });
    let phi = DMatrix::from_fn(n, n, |i, j| pi[(i, j)] + if i == j { ps[i].beta } else { 0.0 });

    // vec(Ω) system: (I − Φ⊗Φ + (Π⊗Π)·S) vec(Ω) = vec(Π diag(μ(1−μ)) Πᵀ)
    let dim = n * n;
    let mut a = DMatrix::<f64>::identity(dim, dim);
    // subtract Φ⊗Φ
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                for l in 0..n {
                    // vec index (col-major): (row, col) -> col * n + row
                    let r = j * n + i;
                    let c = l * n + k;
                    a[(r, c)] -= phi[(i, k)] * phi[(j, l)];
                }
            }
        }
    }
    // add (Π⊗Π)·S, acting only on diagonal unknowns Ω_kk
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let r = j * n + i;
                let c = k * n + k;
                a[(r, c)] += pi[(i, k)] * pi[(j, k)];
            }
        }
    }
    let mut rhs = DVector::zeros(dim);
    for i in 0..n {
        for j in 0..n {
            let mut acc = 0.0;
            for k in 0..n {
                acc += pi[(i, k)] * mu[k] * (1.0 - mu[k]) * pi[(j, k)];
            }
            rhs[j * n + i] = acc;
        }
    }
    let sol = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| GabError::DegenerateMean("singular covariance system".into()))?;
    Ok(DMatrix::from_fn(n, n, |i, j| sol[j * n + i]))
}

#[derive(Debug, Clone, Serialize)]
pub struct StationaryMoments {
    /// Monte Carlo estimates over the stationary run.
    pub mc_mean_sum_p: f64,
    pub mc_var_sum_p: f64,
    pub mc_max_p: f64,
    /// Closed-form Σ_i μ_i.
    pub exact_mean_sum_p: f64,
    /// 1ᵀΩ1 from the finite-N covariance equation.
    pub exact_var_sum_p: f64,
}

/// Monte Carlo plus exact stationary moments of Σ_i p_{i,t}.
pub fn stationary_moments(
    spec: &ModelSpec,
    cfg: &SimConfig,
    reps: usize,
) -> Result<StationaryMoments> {
    let ps = interactive_params(spec)?;
    if ps.iter().any(|p| p.beta + p.gamma >= 1.0) {
        return Err(GabError::DegenerateMean("needs β_i + γ_i < 1 for every series".into()));
    }
    let mean_report = unconditional_mean(spec)?;
    let omega = stationary_covariance(spec)?;
    let exact_var = omega.iter().sum::<f64>();

    let mut count = 0u64;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    let mut max_p = 0.0f64;
    for rep in 0..reps.max(1) {
        let traj = simulate_replicate(spec, cfg, rep as u64)?;
        for t in 0..traj.horizon() {
            let sp = traj.sum_p(t);
            sum += sp;
            sum_sq += sp * sp;
            count += 1;
            for &p in traj.p_column(t) {
                max_p = max_p.max(p);
            }
        }
    }
    let mc_mean = sum / count as f64;
    let mc_var = sum_sq / count as f64 - mc_mean * mc_mean;

    Ok(StationaryMoments {
        mc_mean_sum_p: mc_mean,
        mc_var_sum_p: mc_var,
        mc_max_p: max_p,
        exact_mean_sum_p: mean_report.total_mean,
        exact_var_sum_p: exact_var,
    })
}
