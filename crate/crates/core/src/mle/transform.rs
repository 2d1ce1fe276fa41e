//! Smooth reparameterizations between unconstrained optimizer coordinates
//! and the constrained parameter region.
//!
//! Nonnegativity plus a per-series sum-≤-1 budget is the simplex with an
//! implicit slack component; the stick-breaking map
//!
//! ```text
//!   θ_k = σ(z_k) · (1 − θ_1 − … − θ_{k-1})
//! ```
//!
//! is a bijection from R^m onto its strict interior, which keeps the
//! quasi-Newton iteration unconstrained and the likelihood maximizer away
//! from the boundary.

#[inline]
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

#[inline]
pub fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Stick-breaking: unconstrained z → θ with θ_k > 0 and Σθ < 1.
pub fn simplex_from_unconstrained(z: &[f64], theta: &mut [f64]) {
    debug_assert_eq!(z.len(), theta.len());
    let mut remaining = 1.0;
    for (k, &zk) in z.iter().enumerate() {
        let t = sigmoid(zk) * remaining;
        theta[k] = t;
        remaining -= t;
    }
}

/// Inverse stick-breaking; requires a strictly interior θ.
pub fn simplex_to_unconstrained(theta: &[f64], z: &mut [f64]) -> crate::Result<()> {
    debug_assert_eq!(z.len(), theta.len());
    let mut remaining = 1.0;
    for (k, &t) in theta.iter().enumerate() {
        if t <= 0.0 || t >= remaining {
            return Err(crate::GabError::Domain(format!(
                "component {k} = {t} is not interior to the remaining budget {remaining}"
            )));
        }
        z[k] = logit(t / remaining);
        remaining -= t;
    }
    Ok(())
}

/// Chain rule grad_z = Jᵀ grad_θ for the stick-breaking map, using
/// ∂θ_k/∂z_k = θ_k (1 − σ_k) and ∂θ_k/∂z_j = −θ_k σ_j for j < k.
pub fn simplex_chain_gradient(z: &[f64], theta: &[f64], grad_theta: &[f64], grad_z: &mut [f64]) {
    let m = z.len();
    // suffix sums of θ_k gθ_k make the triangular product linear time
    let mut suffix = 0.0;
    let mut suffixes = vec![0.0; m + 1];
    for k in (0..m).rev() {
        suffix += theta[k] * grad_theta[k];
        suffixes[k] = suffix;
    }
    for j in 0..m {
        let sj = sigmoid(z[j]);
        grad_z[j] = theta[j] * (1.0 - sj) * grad_theta[j] - sj * suffixes[j + 1];
    }
}
