//! Fixed catalogs of nonlinear components.
//!
//! Keeping the nonlinearities in a closed catalog (rather than accepting
//! user-supplied closures) lets validation certify the [0,1] range and the
//! contraction checks use analytic Lipschitz bounds.

use serde::{Deserialize, Serialize};

use crate::error::{GabError, Result};

/// Scalar curves f(p) for the nonlinear single-series model
/// `p_t = ω + α y_{t-1} + f(p_{t-1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ScalarCurve {
    /// f(p) = 2p(p − 0.5)², a mild hump vanishing at p ∈ {0, 0.5}.
    #[serde(rename = "2p(p-0.5)^2")]
    CubicHalf,
    /// f(p) = (p + 0.7)(p − 5/6)², a strong pull away from p = 5/6.
    #[serde(rename = "(p+0.7)(p-5/6)^2")]
    CubicFiveSixths,
}

impl ScalarCurve {
    #[inline]
    pub fn eval(self, p: f64) -> f64 {
        match self {
            ScalarCurve::CubicHalf => 2.0 * p * (p - 0.5) * (p - 0.5),
            ScalarCurve::CubicFiveSixths => {
                let d = p - 5.0 / 6.0;
                (p + 0.7) * d * d
            }
        }
    }

    /// Range of f over [0, 1]; both curves are nonnegative there.
    pub fn range(self) -> (f64, f64) {
        match self {
            // max at p = 1: 2·(0.5)² = 0.5
            ScalarCurve::CubicHalf => (0.0, 0.5),
            // decreasing to p = 5/6 then rising; max at p = 0: 0.7·(5/6)²
            ScalarCurve::CubicFiveSixths => (0.0, 0.7 * (5.0 / 6.0) * (5.0 / 6.0)),
        }
    }

    /// Analytic Lipschitz constant max_{p∈[0,1]} |f′(p)|.
    pub fn lipschitz(self) -> f64 {
        match self {
            // f′ = 2(p−0.5)(3p−0.5), |f′| maximal at p = 1: 2·0.5·2.5 = 2.5
            ScalarCurve::CubicHalf => 2.5,
            // f′ = (p−5/6)(3p+17/30), |f′| maximal at the interior root of
            // f″ = 6p − 58/30: p* = 29/90, giving |f′(p*)| = 2116/2700
            ScalarCurve::CubicFiveSixths => 2116.0 / 2700.0,
        }
    }
}

/// Aggregate-level nonlinearity f_γ shared by the nonlinear interactive
/// model and the limiting intensity recursion. All catalog entries are
/// scalar-valued (k = 1) with nonnegative output; arguments are the `s`
/// lagged count totals followed by the `s` lagged probability/intensity
/// totals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id")]
pub enum AggNonlinearity {
    /// f ≡ 0: the interaction enters through other terms only.
    Zero,
    /// f(x, λ) = x₁, the linear one-lag count feedback.
    /// Continuously differentiable with bounded Jacobian.
    Identity,
    /// f(x, λ) = x₁ / (1 + x₁), continuous and bounded by 1.
    Saturating,
    /// f(x, λ) = Σ_τ (dy_τ x_τ + dp_τ λ_τ), the multi-lag linear feedback.
    LinearLags { dy: Vec<f64>, dp: Vec<f64> },
}

impl AggNonlinearity {
    /// Evaluate on `s` count lags and `s` intensity lags, newest first.
    pub fn eval(&self, x_lags: &[f64], lam_lags: &[f64]) -> f64 {
        match self {
            AggNonlinearity::Zero => 0.0,
            AggNonlinearity::Identity => x_lags[0],
            AggNonlinearity::Saturating => x_lags[0] / (1.0 + x_lags[0]),
            AggNonlinearity::LinearLags { dy, dp } => {
                let mut v = 0.0;
                for (tau, &d) in dy.iter().enumerate() {
                    v += d * x_lags[tau];
                }
                for (tau, &d) in dp.iter().enumerate() {
                    v += d * lam_lags[tau];
                }
                v
            }
        }
    }

    /// Upper bound of f when every argument lies in [0, cap]; used by the
    /// range certification of generated specs.
    pub fn upper_bound(&self, s: usize, cap: f64) -> f64 {
        match self {
            AggNonlinearity::Zero => 0.0,
            AggNonlinearity::Identity => cap,
            AggNonlinearity::Saturating => 1.0_f64.min(cap / (1.0 + cap)),
            AggNonlinearity::LinearLags { dy, dp } => {
                let _ = s;
                let sum: f64 = dy.iter().chain(dp.iter()).sum();
                sum * cap
            }
        }
    }

    pub fn validate(&self, s: usize) -> Result<()> {
        if let AggNonlinearity::LinearLags { dy, dp } = self {
            if dy.len() != s || dp.len() != s {
                return Err(GabError::DimensionMismatch(format!(
                    "LinearLags needs {s} dy and {s} dp coefficients"
                )));
            }
            if dy.iter().chain(dp.iter()).any(|&d| d < 0.0) {
                return Err(GabError::Domain("LinearLags coefficients must be ≥ 0".into()));
            }
        }
        Ok(())
    }
}

/// Per-series mean-field nonlinearity f_{γ,i} of the nonlinear interactive
/// model. Arguments are the `s` lagged cross-sectional outcome means then
/// the `s` lagged probability means, all in [0, 1]. Entries satisfy
/// f(0) = 0 with nonnegative gradient at 0 and bounded curvature.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id")]
pub enum MicroNonlinearity {
    /// f(v) = v₁: plain first-lag outcome-mean feedback (gradient e₁ at 0).
    LinearMean,
    /// f(v) = (v₁ + v₁²)/2: smooth convex feedback (gradient e₁/2 at 0).
    SmoothQuadratic,
}

impl MicroNonlinearity {
    pub fn eval(self, means: &[f64]) -> f64 {
        match self {
            MicroNonlinearity::LinearMean => means[0],
            MicroNonlinearity::SmoothQuadratic => 0.5 * (means[0] + means[0] * means[0]),
        }
    }

    /// Gradient at the origin over the 2s mean arguments.
    pub fn gradient_at_zero(self, s: usize) -> Vec<f64> {
        let mut g = vec![0.0; 2 * s];
        g[0] = match self {
            MicroNonlinearity::LinearMean => 1.0,
            MicroNonlinearity::SmoothQuadratic => 0.5,
        };
        g
    }

    /// Maximum over the unit cube, for range certification.
    pub fn upper_bound(self) -> f64 {
        match self {
            MicroNonlinearity::LinearMean => 1.0,
            MicroNonlinearity::SmoothQuadratic => 1.0,
        }
    }
}

/// Own-outcome nonlinearity f_α of the nonlinear interactive model,
/// evaluated on the series' own `s` lagged outcomes (newest first); must
/// satisfy |f_α(y)| ≤ A Σ_τ y_τ.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "id")]
pub enum OwnOutcomeNonlinearity {
    /// f(y) = Σ_τ a_τ y_τ.
    LagSum { a: Vec<f64> },
    /// f(y) = a · y₁ y₂, an across-time interaction (needs s ≥ 2).
    LagProduct { a: f64 },
}

impl OwnOutcomeNonlinearity {
    pub fn eval(&self, y_lags: &[f64]) -> f64 {
        match self {
            OwnOutcomeNonlinearity::LagSum { a } => {
                a.iter().zip(y_lags).map(|(ai, yi)| ai * yi).sum()
            }
            OwnOutcomeNonlinearity::LagProduct { a } => a * y_lags[0] * y_lags[1],
        }
    }

    pub fn upper_bound(&self) -> f64 {
        match self {
            OwnOutcomeNonlinearity::LagSum { a } => a.iter().sum(),
            OwnOutcomeNonlinearity::LagProduct { a } => *a,
        }
    }

    pub fn validate(&self, s: usize) -> Result<()> {
        match self {
            OwnOutcomeNonlinearity::LagSum { a } => {
                if a.len() != s {
                    return Err(GabError::DimensionMismatch(format!(
                        "LagSum needs {s} coefficients, got {}",
                        a.len()
                    )));
                }
                if a.iter().any(|&x| x < 0.0) {
                    return Err(GabError::Domain("LagSum coefficients must be ≥ 0".into()));
                }
            }
            OwnOutcomeNonlinearity::LagProduct { a } => {
                if s < 2 {
                    return Err(GabError::DimensionMismatch("LagProduct needs s ≥ 2".into()));
                }
                if *a < 0.0 {
                    return Err(GabError::Domain("LagProduct coefficient must be ≥ 0".into()));
                }
            }
        }
        Ok(())
    }
}
