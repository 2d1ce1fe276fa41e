//! Doubly stochastic network builders.
//!
//! The circulant d-regular graph puts weight 1/d on the next d cyclic
//! neighbors (including the wrap back to itself at d = N). Rows and
//! columns both sum to one, every vertex has in- and out-degree d, and
//! d = N recovers the complete graph W_ij = 1/N of the interactive model.

use crate::error::{GabError, Result};

/// Circulant d-regular doubly stochastic matrix: W[i][(i+k) mod N] = 1/d
/// for k = 1..=d.
pub fn build_regular_network(n: usize, d: usize) -> Result<Vec<Vec<f64>>> {
    if n == 0 || d == 0 || d > n {
        return Err(GabError::Config(format!("need 1 ≤ d ≤ N, got d = {d}, N = {n}")));
    }
    let w = 1.0 / d as f64;
    let mut rows = vec![vec![0.0; n]; n];
    for (i, row) in rows.iter_mut().enumerate() {
        for k in 1..=d {
            row[(i + k) % n] += w;
        }
    }
    Ok(rows)
}

/// Out-degree rule d(N) = ⌈factor · ln N⌉ clamped into [1, N].
pub fn log_degree(n: usize, factor: f64) -> usize {
    let d = (factor * (n as f64).ln()).ceil() as usize;
    d.clamp(1, n)
}
