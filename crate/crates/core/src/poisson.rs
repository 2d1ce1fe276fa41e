//! The limiting Poisson autoregression.
//!
//! Under the rare-events scaling the aggregate count X_t = Σ_i y_{i,t} is
//! conditionally Poisson with intensity
//!
//! ```text
//!   λ_t = c̄ + γ̄ X_{t-1} + β λ_{t-1},
//! ```
//!
//! and more generally (multi-lag, nonlinear feedback)
//!
//! ```text
//!   λ_t = c̄ + Σ_τ β_τ λ_{t-τ} + (X_{t-1..t-s}, λ_{t-1..t-s})·f̄
//!         + γ̄ᵀ f_γ(X_{t-1..t-s}, λ_{t-1..t-s}).
//! ```
//!
//! This module filters intensities, evaluates the Poisson likelihood, fits
//! (c̄, γ̄, β) by quasi-Newton with an analytic λ-sensitivity gradient, and
//! maps Poisson estimates back to a homogeneous interactive binary spec.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{GabError, Result};
use crate::mle::optimizer::{maximize, OptimOptions};
use crate::mle::transform;
use crate::model::catalog::AggNonlinearity;
use crate::model::ModelSpec;
use crate::rng::{CounterRng, Domain};

/// Nonlinear block of the general intensity recursion (k = 1 catalog).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearIntensity {
    /// Lag order s shared by counts and intensities.
    pub s: usize,
    /// β_τ, τ = 1..s.
    pub beta: Vec<f64>,
    /// Gradient weights f̄ over (X lags, λ lags): length 2s.
    pub fbar: Vec<f64>,
    /// Weight γ̄ on the aggregate nonlinearity.
    pub gamma_bar: f64,
    pub f_gamma: AggNonlinearity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoissonParams {
    pub c_bar: f64,
    pub gamma_bar: f64,
    pub beta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinear: Option<NonlinearIntensity>,
}

impl PoissonParams {
    pub fn linear(c_bar: f64, gamma_bar: f64, beta: f64) -> Self {
        PoissonParams { c_bar, gamma_bar, beta, nonlinear: None }
    }

    pub fn validate(&self) -> Result<()> {
        if self.c_bar < 0.0 || self.gamma_bar < 0.0 || !(0.0..1.0).contains(&self.beta) {
            return Err(GabError::Domain(
                "need c̄ ≥ 0, γ̄ ≥ 0, β ∈ [0,1)".into(),
            ));
        }
        if let Some(nl) = &self.nonlinear {
            if nl.beta.len() != nl.s || nl.fbar.len() != 2 * nl.s {
                return Err(GabError::DimensionMismatch(
                    "nonlinear block needs s β lags and 2s gradient weights".into(),
                ));
            }
            nl.f_gamma.validate(nl.s)?;
        }
        Ok(())
    }

    /// Stationary mean c̄/(1 − γ̄ − β) of the linear recursion.
    pub fn stationary_mean(&self) -> Result<f64> {
        let d = 1.0 - self.gamma_bar - self.beta;
        if d <= 0.0 {
            return Err(GabError::DegenerateMean(format!("γ̄ + β = {} ≥ 1", 1.0 - d)));
        }
        Ok(self.c_bar / d)
    }
}

/// Aggregate counts with an optional attached intensity path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CountSeries {
    pub x: Vec<u32>,
    /// Conditional intensity λ_t paired with x[t], when filtered.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda0: Option<f64>,
}

impl CountSeries {
    pub fn new(x: Vec<u32>) -> Self {
        CountSeries { x, lambda: None, lambda0: None }
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.x.is_empty() {
            return 0.0;
        }
        self.x.iter().map(|&v| v as f64).sum::<f64>() / self.x.len() as f64
    }

    /// Attach the conditional intensity path implied by `params`.
    pub fn with_lambda(mut self, params: &PoissonParams, lambda0: f64) -> Self {
        self.lambda = Some(conditional_intensities(params, &self.x, lambda0));
        self.lambda0 = Some(lambda0);
        self
    }

    /// CSV `t,X[,lambda]`.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        match &self.lambda {
            Some(lam) => {
                writeln!(w, "t,X,lambda")?;
                for (t, (&x, &l)) in self.x.iter().zip(lam).enumerate() {
                    writeln!(w, "{t},{x},{l}")?;
                }
            }
            None => {
                writeln!(w, "t,X")?;
                for (t, &x) in self.x.iter().enumerate() {
                    writeln!(w, "{t},{x}")?;
                }
            }
        }
        Ok(())
    }
}

/// Post-observation filter: out[j] = c̄ + γ̄ x[j] + β·(previous), starting
/// from λ0. Entry j is the intensity for period j+1.
pub fn filter_lambda(params: &PoissonParams, x: &[u32], lambda0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut prev = lambda0;
    for &xt in x {
        let lam = params.c_bar + params.gamma_bar * xt as f64 + params.beta * prev;
        out.push(lam);
        prev = lam;
    }
    out
}

/// Intensity λ_t paired with x[t]: λ_0 = λ0, λ_t = c̄ + γ̄ x[t-1] + β λ_{t-1}.
pub fn conditional_intensities(params: &PoissonParams, x: &[u32], lambda0: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(x.len());
    let mut lam = lambda0;
    for (t, _) in x.iter().enumerate() {
        if t > 0 {
            lam = params.c_bar + params.gamma_bar * x[t - 1] as f64 + params.beta * lam;
        }
        out.push(lam);
    }
    out
}

/// General nonlinear recursion, post-observation aligned like
/// [`filter_lambda`]: entry j is the intensity after observing `x[j]`.
///
/// The presample supplies the remaining lag history: `lambda_pre` holds the
/// `s` intensity lags (newest first) and `x_pre` the `s − 1` count lags
/// older than `x[0]` (newest first; empty when s = 1).
pub fn filter_lambda_general(
    c_bar: f64,
    nl: &NonlinearIntensity,
    x: &[u32],
    x_pre: &[f64],
    lambda_pre: &[f64],
) -> Result<Vec<f64>> {
    if lambda_pre.len() != nl.s || x_pre.len() + 1 != nl.s {
        return Err(GabError::DimensionMismatch(format!(
            "need {} intensity lags and {} presample counts, got {} and {}",
            nl.s,
            nl.s - 1,
            lambda_pre.len(),
            x_pre.len()
        )));
    }
    nl.f_gamma.validate(nl.s)?;
    let s = nl.s;
    // rolling lag windows, newest first
    let mut lam_lags: Vec<f64> = lambda_pre.to_vec();
    let mut x_lags: Vec<f64> = vec![0.0; s];
    x_lags[1..].copy_from_slice(x_pre);
    let mut out = Vec::with_capacity(x.len());
    for &xt in x {
        // shift in the newly observed count
        for k in (1..s).rev() {
            x_lags[k] = x_lags[k - 1];
        }
        x_lags[0] = xt as f64;
        let mut lam = c_bar;
        for tau in 0..s {
            lam += nl.beta[tau] * lam_lags[tau];
            lam += nl.fbar[tau] * x_lags[tau];
            lam += nl.fbar[s + tau] * lam_lags[tau];
        }
        lam += nl.gamma_bar * nl.f_gamma.eval(&x_lags, &lam_lags);
        out.push(lam);
        for k in (1..s).rev() {
            lam_lags[k] = lam_lags[k - 1];
        }
        lam_lags[0] = lam;
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct PoissonLoglik {
    pub value: f64,
    /// True when some λ_t = 0 met X_t > 0 (value is −∞).
    pub degenerate: bool,
}

/// log X! via the log-gamma function; exact to double precision for the
/// count magnitudes in scope (X ≤ 10⁶).
#[inline]
pub fn ln_factorial(x: u32) -> f64 {
    ln_gamma(x as f64 + 1.0)
}

/// Σ_t [−λ_t + X_t log λ_t − log X_t!] with λ_t from
/// [`conditional_intensities`].
pub fn poisson_loglik(params: &PoissonParams, x: &[u32], lambda0: f64) -> PoissonLoglik {
    let lam = conditional_intensities(params, x, lambda0);
    let mut value = 0.0;
    let mut degenerate = false;
    for (&xt, &lt) in x.iter().zip(&lam) {
        if lt <= 0.0 {
            if xt > 0 {
                degenerate = true;
                value = f64::NEG_INFINITY;
                break;
            }
            // X = 0 with λ = 0 contributes exactly 0
            continue;
        }
        value += -lt + xt as f64 * lt.ln() - ln_factorial(xt);
    }
    PoissonLoglik { value, degenerate }
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PoissonFitConfig {
    /// Fit γ̄ and β (true) or pin them at zero (i.i.d. Poisson).
    pub include_dynamics: bool,
    pub starts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub grad_tol: f64,
    pub min_len: usize,
}

impl Default for PoissonFitConfig {
    fn default() -> Self {
        PoissonFitConfig {
            include_dynamics: true,
            starts: 5,
            seed: 0x90a,
            max_iters: 400,
            grad_tol: 1e-8,
            min_len: 20,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PoissonFit {
    pub params: PoissonParams,
    /// Standard errors for (c̄, γ̄, β) from numerically differentiated
    /// observed information.
    pub std_errors: [f64; 3],
    pub loglik: f64,
    pub lambda0: f64,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
}

/// Analytic gradient of the Poisson log-likelihood in (c̄, γ̄, β).
///
/// `lambda0 = Some(v)` fixes the first-period intensity at v with
/// ∂λ0/∂θ = 0 (the dynamic case, where the presample is unknown);
/// `None` sets λ_0 = c̄ exactly, the correct closed form when γ̄ = β = 0.
fn loglik_and_grad(theta: &[f64; 3], x: &[u32], lambda0: Option<f64>) -> (f64, [f64; 3]) {
    let (c, g, b) = (theta[0], theta[1], theta[2]);
    let (mut lam, mut dlam) = match lambda0 {
        Some(v) => (v, [0.0f64; 3]),
        None => (c, [1.0, 0.0, 0.0]),
    };
    let mut ll = 0.0;
    let mut grad = [0.0f64; 3];
    for (t, &xt) in x.iter().enumerate() {
        if t > 0 {
            let xprev = x[t - 1] as f64;
            let lam_prev = lam;
            lam = c + g * xprev + b * lam_prev;
            let d0 = 1.0 + b * dlam[0];
            let d1 = xprev + b * dlam[1];
            let d2 = lam_prev + b * dlam[2];
            dlam = [d0, d1, d2];
        }
        if lam <= 0.0 {
            return (f64::NEG_INFINITY, [0.0; 3]);
        }
        let w = xt as f64 / lam - 1.0;
        ll += -lam + xt as f64 * lam.ln() - ln_factorial(xt);
        for k in 0..3 {
            grad[k] += w * dlam[k];
        }
    }
    (ll, grad)
}

/// Poisson MLE for the aggregate count, λ0 = sample mean of X.
pub fn fit_poisson_mle(x: &CountSeries, cfg: &PoissonFitConfig) -> Result<PoissonFit> {
    let t_len = x.len();
    if t_len < cfg.min_len {
        return Err(GabError::Config(format!(
            "count series length {t_len} below minimum {}",
            cfg.min_len
        )));
    }
    if x.x.iter().all(|&v| v == 0) {
        return Err(GabError::Config("count series is identically zero".into()));
    }
    let lambda0 = x.mean();
    let lam_init = if cfg.include_dynamics { Some(lambda0) } else { None };
    let xs = &x.x;
    let scale = t_len as f64;

    // unconstrained coordinates: c̄ = exp(z₀), (γ̄, β) by stick-breaking
    let to_theta = |z: &[f64], include_dyn: bool| -> [f64; 3] {
        let c = z[0].exp();
        if include_dyn {
            let mut gb = [0.0; 2];
            transform::simplex_from_unconstrained(&z[1..3], &mut gb);
            [c, gb[0], gb[1]]
        } else {
            [c, 0.0, 0.0]
        }
    };

    let dim = if cfg.include_dynamics { 3 } else { 1 };
    let mut starts: Vec<nalgebra::DVector<f64>> = Vec::new();
    {
        // moment start: mean match with mild dynamics
        let mut z = vec![(lambda0 * 0.35).max(1e-6).ln()];
        if cfg.include_dynamics {
            let mut gb_z = [0.0; 2];
            transform::simplex_to_unconstrained(&[0.25, 0.45], &mut gb_z).unwrap();
            z.extend_from_slice(&gb_z);
        } else {
            z[0] = lambda0.max(1e-12).ln();
        }
        starts.push(nalgebra::DVector::from_vec(z));
    }
    let rng = CounterRng::new(cfg.seed, Domain::FitStart, 0);
    for srt in 1..cfg.starts.max(1) {
        let z: Vec<f64> = (0..dim)
            .map(|k| {
                let u = rng.uniform(k as u64, srt as u64);
                if k == 0 {
                    // intercept scale around the sample mean
                    (lambda0.max(1e-6) * (0.05 + 0.9 * u)).ln()
                } else {
                    4.0 * (u - 0.5)
                }
            })
            .collect();
        starts.push(nalgebra::DVector::from_vec(z));
    }

    let opts = OptimOptions { max_iters: cfg.max_iters, grad_tol: cfg.grad_tol };
    let mut best: Option<(crate::mle::optimizer::OptimOutcome, [f64; 3])> = None;
    let mut best_any_grad = f64::INFINITY;
    for z0 in starts {
        let outcome = maximize(
            |z: &nalgebra::DVector<f64>| {
                let theta = to_theta(z.as_slice(), cfg.include_dynamics);
                let (ll, g_theta) = loglik_and_grad(&theta, xs, lam_init);
                if !ll.is_finite() {
                    return (f64::NEG_INFINITY, nalgebra::DVector::zeros(dim));
                }
                let mut gz = vec![g_theta[0] * theta[0]]; // chain through exp
                if cfg.include_dynamics {
                    let mut tail = [0.0; 2];
                    transform::simplex_chain_gradient(
                        &z.as_slice()[1..3],
                        &[theta[1], theta[2]],
                        &g_theta[1..3],
                        &mut tail,
                    );
                    gz.extend_from_slice(&tail);
                }
                (ll / scale, nalgebra::DVector::from_vec(gz) / scale)
            },
            z0,
            &opts,
        );
        best_any_grad = best_any_grad.min(outcome.grad_norm);
        if outcome.converged && best.as_ref().is_none_or(|(cur, _)| outcome.value > cur.value) {
            let theta = to_theta(outcome.z.as_slice(), cfg.include_dynamics);
            best = Some((outcome, theta));
        }
    }
    let Some((win, theta)) = best else {
        return Err(GabError::NoConvergence {
            starts: cfg.starts.max(1),
            best_grad_norm: best_any_grad,
        });
    };

    // observed information by central differences of the analytic gradient
    let h_step = 1e-5;
    let mut info = nalgebra::DMatrix::<f64>::zeros(3, 3);
    for j in 0..3 {
        let mut tp = theta;
        let mut tm = theta;
        let hj = h_step * theta[j].abs().max(1e-3);
        tp[j] += hj;
        tm[j] -= hj;
        let (_, gp) = loglik_and_grad(&tp, xs, lam_init);
        let (_, gm) = loglik_and_grad(&tm, xs, lam_init);
        for i in 0..3 {
            info[(i, j)] -= (gp[i] - gm[i]) / (2.0 * hj);
        }
    }
    // symmetrize and invert for the covariance
    let info = (&info + info.transpose()) * 0.5;
    let mut std_errors = [f64::NAN; 3];
    if let Some(cov) = info.try_inverse() {
        for k in 0..3 {
            std_errors[k] = if cov[(k, k)] > 0.0 { cov[(k, k)].sqrt() } else { f64::NAN };
        }
    }

    let params = PoissonParams::linear(theta[0], theta[1], theta[2]);
    let ll = poisson_loglik(&params, xs, lam_init.unwrap_or(params.c_bar));
    Ok(PoissonFit {
        params,
        std_errors,
        loglik: ll.value,
        lambda0,
        iterations: win.iterations,
        grad_norm: win.grad_norm,
        converged: true,
    })
}

/// Calibrate a homogeneous interactive binary spec from Poisson
/// estimates: ω_i = c̄/N, α_i = 0, γ_i = γ̄, β_i = β.
pub fn calibrate_binary_from_poisson(params: &PoissonParams, n: usize) -> Result<ModelSpec> {
    if n == 0 {
        return Err(GabError::Config("need N ≥ 1".into()));
    }
    params.validate()?;
    let spec =
        ModelSpec::interactive_homogeneous(n, params.c_bar / n as f64, 0.0, params.gamma_bar, params.beta);
    spec.ensure_valid()?;
    Ok(spec)
}

/// Simulate a Poisson autoregression by exact inverse-CDF draws from the
/// counter stream.
pub fn simulate_poisson_ar(
    params: &PoissonParams,
    horizon: usize,
    burn_in: usize,
    seed: u64,
    replicate: u64,
    lambda0: f64,
) -> Result<CountSeries> {
    params.validate()?;
    if horizon == 0 {
        return Err(GabError::Config("horizon must be ≥ 1".into()));
    }
    let rng = CounterRng::new(seed, Domain::PoissonDraw, replicate);
    let mut lam = lambda0;
    let mut xs = Vec::with_capacity(horizon);
    let mut lams = Vec::with_capacity(horizon);
    let mut prev_x = 0u32;
    for t in 0..burn_in + horizon {
        if t > 0 {
            lam = params.c_bar + params.gamma_bar * prev_x as f64 + params.beta * lam;
        }
        let u = rng.uniform(0, t as u64);
        let x = poisson_inverse_cdf(lam, u);
        if t >= burn_in {
            xs.push(x);
            lams.push(lam);
        }
        prev_x = x;
    }
    Ok(CountSeries { x: xs, lambda: Some(lams), lambda0: Some(lambda0) })
}

/// Smallest k with P(X ≤ k) ≥ u for X ~ Pois(λ); exact sequential search.
fn poisson_inverse_cdf(lambda: f64, u: f64) -> u32 {
    if lambda <= 0.0 {
        return 0;
    }
    let mut k = 0u32;
    let mut pmf = (-lambda).exp();
    let mut cdf = pmf;
    let cap = (lambda + 30.0 * lambda.sqrt() + 60.0) as u32;
    while cdf < u && k < cap {
        k += 1;
        pmf *= lambda / k as f64;
        cdf += pmf;
    }
    k
}
