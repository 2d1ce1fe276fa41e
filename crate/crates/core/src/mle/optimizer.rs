//! Dense BFGS maximizer with backtracking line search.
//!
//! Parameter counts here are a handful per series, so the full
//! inverse-Hessian update is maintained. The objective is evaluated
//! jointly with its gradient.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone, Copy)]
pub struct OptimOptions {
    pub max_iters: usize,
    /// Convergence threshold on ‖∇f‖∞.
    pub grad_tol: f64,
}

impl Default for OptimOptions {
    fn default() -> Self {
        OptimOptions { max_iters: 400, grad_tol: 1e-8 }
    }
}

#[derive(Debug, Clone)]
pub struct OptimOutcome {
    pub z: DVector<f64>,
    pub value: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

const ARMIJO_C1: f64 = 1e-4;
const BACKTRACK: f64 = 0.5;
const MAX_BACKTRACKS: usize = 45;

/// Maximize `f`, which returns `(value, gradient)`; non-finite values are
/// treated as rejected points.
pub fn maximize<F>(mut f: F, z0: DVector<f64>, opts: &OptimOptions) -> OptimOutcome
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
{
    let m = z0.len();
    let mut z = z0;
    let (mut val, mut grad) = f(&z);
    if !val.is_finite() {
        return OptimOutcome { grad_norm: f64::INFINITY, z, value: val, iterations: 0, converged: false };
    }
    let mut h = DMatrix::<f64>::identity(m, m); // inverse-Hessian approximation
    let mut reset_used = false;
    let mut iterations = 0;

    for it in 1..=opts.max_iters {
        iterations = it;
        let gnorm = grad.amax();
        if gnorm <= opts.grad_tol {
            return OptimOutcome { z, value: val, grad_norm: gnorm, iterations: it - 1, converged: true };
        }

        let mut dir = &h * &grad; // ascent direction
        let mut slope = dir.dot(&grad);
        if !slope.is_finite() || slope <= 0.0 {
            h = DMatrix::identity(m, m);
            dir = grad.clone();
            slope = dir.dot(&grad);
        }

        // backtracking Armijo search
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..MAX_BACKTRACKS {
            let cand = &z + &dir * step;
            let (cval, cgrad) = f(&cand);
            if cval.is_finite() && cval >= val + ARMIJO_C1 * step * slope {
                accepted = Some((cand, cval, cgrad));
                break;
            }
            step *= BACKTRACK;
        }

        let Some((z_new, val_new, grad_new)) = accepted else {
            if reset_used {
                let gnorm = grad.amax();
                return OptimOutcome { z, value: val, grad_norm: gnorm, iterations: it, converged: false };
            }
            // one restart from a fresh curvature model before giving up
            h = DMatrix::identity(m, m);
            reset_used = true;
            continue;
        };

        let s = &z_new - &z;
        let yv = &grad - &grad_new; // gradient of −f increases along s
        let sy = s.dot(&yv);
        if sy > 1e-12 * s.norm() * yv.norm() {
            // inverse BFGS update on the minimization form
            let rho = 1.0 / sy;
            let hy = &h * &yv;
            let yhy = yv.dot(&hy);
            // H ← H + (1 + yᵀHy·ρ)ρ ssᵀ − ρ(Hy sᵀ + s (Hy)ᵀ)
            for a in 0..m {
                for b in 0..m {
                    h[(a, b)] += (1.0 + yhy * rho) * rho * s[a] * s[b]
                        - rho * (hy[a] * s[b] + s[a] * hy[b]);
                }
            }
        }
        z = z_new;
        val = val_new;
        grad = grad_new;
    }

    let gnorm = grad.amax();
    OptimOutcome { converged: gnorm <= opts.grad_tol, z, value: val, grad_norm: gnorm, iterations }
}
