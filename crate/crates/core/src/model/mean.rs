//! Unconditional means E y_{i,t} = E p_{i,t}.
//!
//! Linear families admit closed forms; the network system is solved
//! directly:
//!
//! ```text
//!   linear        μ = ω / (1 − Σ_j α_j − Σ_j β_j)
//!   exchangeable  μ = ω / (1 − γ − β)
//!   interactive   Σ_i μ_i = Σ_i ω_i/(1−α_i−β_i) / (1 − (1/N) Σ_i γ_i/(1−α_i−β_i))
//!   network       (I − A − ΓW) μ = ω,  A = diag(α_i+β_i), Γ = diag(γ_i)
//! ```

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{GabError, Result};
use crate::model::{Family, ModelSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MeanMethod {
    ClosedForm,
    LinearSolve,
}

#[derive(Debug, Clone, Serialize)]
pub struct MeanReport {
    pub per_series_mean: Vec<f64>,
    pub total_mean: f64,
    pub method: MeanMethod,
}

impl MeanReport {
    fn closed_form(mu: Vec<f64>) -> Self {
        let total = mu.iter().sum();
        MeanReport { per_series_mean: mu, total_mean: total, method: MeanMethod::ClosedForm }
    }
}

fn stationary_denominator(label: &str, denom: f64) -> Result<f64> {
    if denom > 0.0 {
        Ok(denom)
    } else {
        Err(GabError::DegenerateMean(format!("{label}: denominator {denom} ≤ 0")))
    }
}

/// Unconditional mean of a validated spec.
///
/// Fails with `DegenerateMean` when a stationarity denominator is ≤ 0 and
/// `Unsupported` for families without a mean formula (logit, nonlinear).
pub fn unconditional_mean(spec: &ModelSpec) -> Result<MeanReport> {
    spec.ensure_valid()?;
    match &spec.family {
        Family::LinearUnivariate(ps) => {
            let mu = ps
                .iter()
                .map(|p| {
                    let d = stationary_denominator("linear", 1.0 - p.alpha - p.beta)?;
                    Ok(p.omega / d)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MeanReport::closed_form(mu))
        }
        Family::LinearMultiLag(ps) => {
            let mu = ps
                .iter()
                .map(|p| {
                    let coef: f64 = p.alpha.iter().sum::<f64>() + p.beta.iter().sum::<f64>();
                    let d = stationary_denominator("linear multi-lag", 1.0 - coef)?;
                    Ok(p.omega / d)
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(MeanReport::closed_form(mu))
        }
        Family::Exchangeable(p) => {
            let d = stationary_denominator("exchangeable", 1.0 - p.gamma - p.beta)?;
            Ok(MeanReport::closed_form(vec![p.omega / d; spec.n_series]))
        }
        Family::Interactive(ps) => {
            let n = spec.n_series as f64;
            let mut own = Vec::with_capacity(ps.len());
            let mut gamma_load = 0.0;
            for p in ps {
                let d = stationary_denominator("interactive", 1.0 - p.alpha - p.beta)?;
                own.push(p.omega / d);
                gamma_load += p.gamma / d;
            }
            gamma_load /= n;
            let outer = stationary_denominator("interactive aggregate", 1.0 - gamma_load)?;
            let total: f64 = own.iter().sum::<f64>() / outer;
            let mu: Vec<f64> = ps
                .iter()
                .zip(&own)
                .map(|(p, &o)| o + p.gamma / (n * (1.0 - p.alpha - p.beta)) * total)
                .collect();
            Ok(MeanReport::closed_form(mu))
        }
        Family::Network(ps) => {
            let w = spec
                .network
                .as_ref()
                .ok_or_else(|| GabError::InvalidSpec("Network family needs W".into()))?;
            if ps.iter().any(|p| p.omega <= 0.0) {
                return Err(GabError::DegenerateMean(
                    "network solve needs ω_i > 0 for strict diagonal dominance".into(),
                ));
            }
            let n = spec.n_series;
            // I − A − ΓW with A = diag(α_i + β_i), Γ = diag(γ_i)
            let sys = DMatrix::from_fn(n, n, |i, j| {
                let diag = if i == j { 1.0 - ps[i].alpha - ps[i].beta } else { 0.0 };
                diag - ps[i].gamma * w[i][j]
            });
            let rhs = DVector::from_fn(n, |i, _| ps[i].omega);
            let mu = sys
                .clone()
                .lu()
                .solve(&rhs)
                .ok_or_else(|| GabError::DegenerateMean("singular network mean system".into()))?;
            let total = mu.iter().sum();
            Ok(MeanReport {
                per_series_mean: mu.iter().copied().collect(),
                total_mean: total,
                method: MeanMethod::LinearSolve,
            })
        }
        Family::Logit11(_) | Family::NonlinearScalar(_) | Family::NonlinearInteractive(_) => {
            Err(GabError::Unsupported {
                family: spec.family_name(),
                what: "no closed-form unconditional mean",
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InteractiveParams;

    #[test]
    fn linear_closed_form() {
        let report = unconditional_mean(&ModelSpec::linear11(0.1, 0.2, 0.3)).unwrap();
        assert_eq!(report.method, MeanMethod::ClosedForm);
        assert!((report.per_series_mean[0] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn degenerate_denominator_is_an_error() {
        let err = unconditional_mean(&ModelSpec::linear11(0.0, 0.5, 0.5)).unwrap_err();
        assert!(matches!(err, GabError::DegenerateMean(_)));
    }

    #[test]
    fn interactive_homogeneous_solves_fixed_point() {
        // μ = ω / (1 − α − β − γ) for identical series
        let spec = ModelSpec::interactive_homogeneous(5, 0.05, 0.1, 0.2, 0.6);
        let report = unconditional_mean(&spec).unwrap();
        for &m in &report.per_series_mean {
            assert!((m - 0.5).abs() < 1e-12, "got {m}");
        }
        assert!((report.total_mean - 2.5).abs() < 1e-12);
    }

    #[test]
    fn network_identity_reduces_to_univariate() {
        let n = 3;
        let w: Vec<Vec<f64>> =
            (0..n).map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
        let spec = ModelSpec::network(
            vec![InteractiveParams { omega: 0.1, alpha: 0.1, gamma: 0.1, beta: 0.2 }; n],
            w,
        );
        let report = unconditional_mean(&spec).unwrap();
        assert_eq!(report.method, MeanMethod::LinearSolve);
        for &m in &report.per_series_mean {
            assert!((m - 0.1 / 0.6).abs() < 1e-12);
        }
    }

    #[test]
    fn network_solve_residual_is_tiny() {
        // heterogeneous ring network; check ‖(I−A−ΓW)μ − ω‖∞ < 1e-10
        let n = 6;
        let mut w = vec![vec![0.0; n]; n];
        for i in 0..n {
            w[i][(i + 1) % n] = 0.5;
            w[i][(i + n - 1) % n] = 0.5;
        }
        let params: Vec<InteractiveParams> = (0..n)
            .map(|i| InteractiveParams {
                omega: 0.02 + 0.01 * i as f64,
                alpha: 0.05 + 0.02 * i as f64,
                gamma: 0.3 - 0.02 * i as f64,
                beta: 0.4,
            })
            .collect();
        let spec = ModelSpec::network(params.clone(), w.clone());
        let report = unconditional_mean(&spec).unwrap();
        for i in 0..n {
            let wy: f64 = (0..n).map(|j| w[i][j] * report.per_series_mean[j]).sum();
            let lhs = (1.0 - params[i].alpha - params[i].beta) * report.per_series_mean[i]
                - params[i].gamma * wy;
            assert!((lhs - params[i].omega).abs() < 1e-10);
        }
    }

    #[test]
    fn interactive_mean_respects_aggregate_condition() {
        // per-series denominators fine but aggregate loading ≥ 1
        let spec = ModelSpec::interactive_homogeneous(4, 0.0, 0.0, 0.6, 0.4);
        let err = unconditional_mean(&spec).unwrap_err();
        assert!(matches!(err, GabError::DegenerateMean(_)));
    }
}
