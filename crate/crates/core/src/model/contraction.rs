//! Contraction diagnostics.
//!
//! Uniqueness of the stationary solution holds under either of two
//! conditions on the Lipschitz coefficients of g:
//!
//! - the companion matrix Φ built from {α_ij^τ, β_ij^τ} has spectral radius
//!   ρ(Φ) < 1 (coefficient form), or
//! - an aggregate Lipschitz constant satisfies K < 1/(s+q) (aggregate form).
//!
//! Neither implies the other. Linear families supply their own parameters
//! as Lipschitz coefficients; the scalar nonlinear catalog supplies analytic
//! |f′| bounds; logit and nonlinear-interactive dynamics are reported as
//! unsupported rather than guessed.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{GabError, Result};
use crate::model::{Family, ModelSpec, NonlinearityConfig};

/// Lipschitz coefficient layout: `alpha[τ-1][(i,j)]` bounds the sensitivity
/// of g_i to y_{j,t-τ} (τ = 1..q) and `beta[τ-1][(i,j)]` the sensitivity to
/// p_{j,t-τ} (τ = 1..s).
#[derive(Debug, Clone)]
pub struct LipschitzCoeffs {
    pub n: usize,
    pub alpha: Vec<DMatrix<f64>>,
    pub beta: Vec<DMatrix<f64>>,
}

impl LipschitzCoeffs {
    pub fn new(alpha: Vec<DMatrix<f64>>, beta: Vec<DMatrix<f64>>) -> Result<Self> {
        let n = alpha
            .first()
            .or(beta.first())
            .map(|m| m.nrows())
            .ok_or_else(|| GabError::DimensionMismatch("no coefficient blocks".into()))?;
        for m in alpha.iter().chain(beta.iter()) {
            if m.nrows() != n || m.ncols() != n {
                return Err(GabError::DimensionMismatch(format!(
                    "coefficient block {}×{} does not match N = {n}",
                    m.nrows(),
                    m.ncols()
                )));
            }
            if m.iter().any(|&v| v < 0.0 || !v.is_finite()) {
                return Err(GabError::Domain("Lipschitz coefficients must be finite and ≥ 0".into()));
            }
        }
        Ok(LipschitzCoeffs { n, alpha, beta })
    }

    pub fn max_lag(&self) -> usize {
        self.alpha.len().max(self.beta.len())
    }
}

/// Assemble the N·max(s,q) companion matrix: the first N rows stack the
/// per-lag blocks α^τ + β^τ, the bottom-left block is an identity, and the
/// bottom-right block is zero.
pub fn companion_matrix(coeffs: &LipschitzCoeffs) -> Result<DMatrix<f64>> {
    let n = coeffs.n;
    let m = coeffs.max_lag();
    if m == 0 {
        return Err(GabError::DimensionMismatch("companion needs at least one lag".into()));
    }
    let dim = n * m;
    let mut phi = DMatrix::zeros(dim, dim);
    for tau in 0..m {
        for i in 0..n {
            for j in 0..n {
                let a = coeffs.alpha.get(tau).map_or(0.0, |blk| blk[(i, j)]);
                let b = coeffs.beta.get(tau).map_or(0.0, |blk| blk[(i, j)]);
                phi[(i, tau * n + j)] = a + b;
            }
        }
    }
    for r in 0..n * (m - 1) {
        phi[(n + r, r)] = 1.0;
    }
    Ok(phi)
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectralRadius {
    pub value: f64,
    pub iterations: usize,
}

const POWER_RESID_TOL: f64 = 1e-12;
const POWER_CAP: usize = 60_000;

/// Power iteration accepting only certified eigenpairs: convergence means
/// ‖Mx − λx‖∞ ≤ tol·‖M‖∞ for the Rayleigh value λ. A spurious stabilized
/// Rayleigh quotient (e.g. under a ±λ dominant pair) never certifies.
fn power_iterate(m: &DMatrix<f64>, start: DVector<f64>, cap: usize) -> Option<(f64, usize)> {
    let mut x = start;
    let nrm = x.norm();
    if nrm == 0.0 {
        return None;
    }
    x /= nrm;
    let scale = m
        .row_iter()
        .map(|r| r.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0f64, f64::max)
        .max(1.0);
    for it in 1..=cap {
        let y = m * &x;
        let lambda = x.dot(&y); // Rayleigh quotient, ‖x‖ = 1
        let mut resid: f64 = 0.0;
        for k in 0..x.len() {
            resid = resid.max((y[k] - lambda * x[k]).abs());
        }
        if resid <= POWER_RESID_TOL * scale {
            return Some((lambda, it));
        }
        let ynorm = y.norm();
        if ynorm == 0.0 {
            // x annihilated: the reachable subspace is nilpotent
            return Some((0.0, it));
        }
        x = y / ynorm;
    }
    None
}

fn deterministic_start(dim: usize, salt: u64) -> DVector<f64> {
    // reproducible pseudo-random direction; quality is irrelevant here
    let mut state = salt.wrapping_mul(0x9e37_79b9_7f4a_7c15) | 1;
    DVector::from_fn(dim, |_, _| {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state >> 11) as f64 / (1u64 << 53) as f64 - 0.5
    })
}

/// Largest eigenvalue modulus by power iteration.
///
/// Nonnegative matrices are iterated with a +I shift so the Perron root is
/// strictly dominant in modulus. Matrices with negative entries fall back to
/// plain iteration with random restarts, then to the squared matrix (which
/// merges ±-symmetric dominant pairs).
pub fn spectral_radius(m: &DMatrix<f64>) -> Result<SpectralRadius> {
    if m.nrows() != m.ncols() {
        return Err(GabError::DimensionMismatch(format!("{}×{} not square", m.nrows(), m.ncols())));
    }
    if m.iter().any(|v| !v.is_finite()) {
        return Err(GabError::Domain("matrix entries must be finite".into()));
    }
    let dim = m.nrows();
    if dim == 0 {
        return Err(GabError::DimensionMismatch("empty matrix".into()));
    }
    if m.iter().all(|&v| v == 0.0) {
        return Ok(SpectralRadius { value: 0.0, iterations: 0 });
    }

    if m.iter().all(|&v| v >= 0.0) {
        // Perron–Frobenius: ρ(M) is an eigenvalue; M + I makes it strictly
        // dominant since |λ + 1| ≤ |λ| + 1 ≤ ρ + 1 with equality only at ρ.
        let shifted = m + DMatrix::<f64>::identity(dim, dim);
        let start = DVector::from_element(dim, 1.0);
        if let Some((lam, it)) = power_iterate(&shifted, start, POWER_CAP) {
            return Ok(SpectralRadius { value: (lam - 1.0).max(0.0), iterations: it });
        }
        return Err(GabError::NonConvergence { iterations: POWER_CAP });
    }

    let mut spent = 0;
    for salt in 1..=3u64 {
        if let Some((lam, it)) = power_iterate(m, deterministic_start(dim, salt), POWER_CAP / 6) {
            return Ok(SpectralRadius { value: lam.abs(), iterations: spent + it });
        }
        spent += POWER_CAP / 6;
    }
    // ±λ dominant pairs defeat plain iteration; ρ(M²) = ρ(M)² does not.
    let squared = m * m;
    if let Some((lam, it)) = power_iterate(&squared, deterministic_start(dim, 7), POWER_CAP / 6) {
        if lam >= 0.0 {
            return Ok(SpectralRadius { value: lam.sqrt(), iterations: spent + it });
        }
    }
    Err(GabError::NonConvergence { iterations: spent + POWER_CAP / 6 })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Holds,
    Fails,
    Unsupported,
}

/// Aggregate-form verdict: K < 1/(s+q).
pub fn assumption2_verdict(k: f64, s: usize, q: usize) -> bool {
    k < 1.0 / (s + q) as f64
}

#[derive(Debug, Clone, Serialize)]
pub struct Assumption2Report {
    /// Derived (or supplied) aggregate Lipschitz constant.
    pub k: Option<f64>,
    /// The threshold 1/(s+q).
    pub bound: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, Serialize)]
pub struct ContractionReport {
    #[serde(skip)]
    pub companion: Option<DMatrix<f64>>,
    pub rho: Option<f64>,
    pub power_iterations: usize,
    pub assumption1: Verdict,
    pub assumption2: Assumption2Report,
}

impl ContractionReport {
    pub fn assumption1_holds(&self) -> bool {
        self.assumption1 == Verdict::Holds
    }
}

fn diag(n: usize, f: impl Fn(usize) -> f64) -> DMatrix<f64> {
    DMatrix::from_fn(n, n, |i, j| if i == j { f(i) } else { 0.0 })
}

/// Lipschitz coefficient layout implied by a validated spec, or `None` for
/// families without certified bounds (logit, nonlinear interactive).
pub fn lipschitz_coeffs(spec: &ModelSpec) -> Option<LipschitzCoeffs> {
    let n = spec.n_series;
    let blocks = match &spec.family {
        Family::LinearUnivariate(ps) => Some((
            vec![diag(n, |i| ps[i].alpha)],
            vec![diag(n, |i| ps[i].beta)],
        )),
        Family::LinearMultiLag(ps) => {
            let alpha = (0..spec.lags.q).map(|t| diag(n, |i| ps[i].alpha[t])).collect();
            let beta = (0..spec.lags.s).map(|t| diag(n, |i| ps[i].beta[t])).collect();
            Some((alpha, beta))
        }
        Family::NonlinearScalar(ps) => {
            let Some(NonlinearityConfig::Scalar(curve)) = &spec.nonlinearity else {
                return None;
            };
            let lip = curve.lipschitz();
            Some((vec![diag(n, |i| ps[i].alpha)], vec![diag(n, |_| lip)]))
        }
        Family::Exchangeable(p) => Some((
            vec![DMatrix::from_element(n, n, p.gamma / n as f64)],
            vec![diag(n, |_| p.beta)],
        )),
        Family::Interactive(ps) => {
            let alpha = DMatrix::from_fn(n, n, |i, j| {
                ps[i].gamma / n as f64 + if i == j { ps[i].alpha } else { 0.0 }
            });
            Some((vec![alpha], vec![diag(n, |i| ps[i].beta)]))
        }
        Family::Network(ps) => {
            let w = spec.network.as_ref()?;
            let alpha = DMatrix::from_fn(n, n, |i, j| {
                ps[i].gamma * w[i][j] + if i == j { ps[i].alpha } else { 0.0 }
            });
            Some((vec![alpha], vec![diag(n, |i| ps[i].beta)]))
        }
        Family::Logit11(_) | Family::NonlinearInteractive(_) => None,
    };
    blocks.and_then(|(alpha, beta)| LipschitzCoeffs::new(alpha, beta).ok())
}

/// Derived aggregate Lipschitz constant K, where available. These are
/// sufficient (row/column-sum) bounds, not tight constants.
fn aggregate_k(spec: &ModelSpec) -> Option<f64> {
    let n = spec.n_series as f64;
    match &spec.family {
        Family::LinearUnivariate(ps) => {
            Some(ps.iter().map(|p| p.alpha.max(p.beta)).fold(0.0, f64::max))
        }
        Family::LinearMultiLag(ps) => Some(
            ps.iter()
                .flat_map(|p| p.alpha.iter().chain(p.beta.iter()).copied())
                .fold(0.0, f64::max),
        ),
        Family::NonlinearScalar(ps) => {
            let Some(NonlinearityConfig::Scalar(curve)) = &spec.nonlinearity else {
                return None;
            };
            let lip = curve.lipschitz();
            Some(ps.iter().map(|p| p.alpha.max(lip)).fold(0.0, f64::max))
        }
        Family::Exchangeable(p) => Some(p.gamma.max(p.beta)),
        Family::Interactive(ps) => {
            let gamma_mean: f64 = ps.iter().map(|p| p.gamma).sum::<f64>() / n;
            let beta_max = ps.iter().map(|p| p.beta).fold(0.0, f64::max);
            let y_max = ps.iter().map(|p| p.alpha + gamma_mean).fold(0.0, f64::max);
            Some(beta_max.max(y_max))
        }
        Family::Network(ps) => {
            let w = spec.network.as_ref()?;
            let nn = spec.n_series;
            let beta_max = ps.iter().map(|p| p.beta).fold(0.0, f64::max);
            let mut y_max: f64 = 0.0;
            for j in 0..nn {
                let col: f64 = (0..nn).map(|i| ps[i].gamma * w[i][j]).sum();
                y_max = y_max.max(ps[j].alpha + col);
            }
            Some(beta_max.max(y_max))
        }
        Family::Logit11(_) | Family::NonlinearInteractive(_) => None,
    }
}

/// Evaluate both contraction assumptions for a validated spec.
pub fn check_contraction(spec: &ModelSpec) -> Result<ContractionReport> {
    spec.ensure_valid()?;
    let bound = 1.0 / (spec.lags.s + spec.lags.q) as f64;
    let a2 = match aggregate_k(spec) {
        Some(k) => Assumption2Report {
            k: Some(k),
            bound,
            verdict: if assumption2_verdict(k, spec.lags.s, spec.lags.q) {
                Verdict::Holds
            } else {
                Verdict::Fails
            },
        },
        None => Assumption2Report { k: None, bound, verdict: Verdict::Unsupported },
    };

    match lipschitz_coeffs(spec) {
        Some(coeffs) => {
            let phi = companion_matrix(&coeffs)?;
            let sr = spectral_radius(&phi)?;
            // ρ is certified to 1e-10; anything inside that band of the unit
            // circle cannot satisfy the strict inequality
            let holds = sr.value < 1.0 - 1e-10;
            Ok(ContractionReport {
                companion: Some(phi),
                rho: Some(sr.value),
                power_iterations: sr.iterations,
                assumption1: if holds { Verdict::Holds } else { Verdict::Fails },
                assumption2: a2,
            })
        }
        None => Ok(ContractionReport {
            companion: None,
            rho: None,
            power_iterations: 0,
            assumption1: Verdict::Unsupported,
            assumption2: a2,
        }),
    }
}
