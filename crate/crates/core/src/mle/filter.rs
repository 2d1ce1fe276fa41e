//! Recursive probability filtering with forward parameter sensitivities.
//!
//! Every differentiable family reduces to the same block recursion
//!
//! ```text
//!   v_t = Σ_k φ_k r_k(t) + Σ_τ β_τ v_{t-τ},
//! ```
//!
//! where v is the success probability (or the log-odds for the logit
//! family) and r(t) are observed regressors: an intercept, own outcome
//! lags, and the cross-sectional aggregate. Differentiating once gives the
//! sensitivity recursion
//!
//! ```text
//!   ∂v_t/∂θ = base(t) + Σ_τ β_τ ∂v_{t-τ}/∂θ,   base = [r(t), v_{t-1}, …, v_{t-s}],
//! ```
//!
//! run forward alongside the filter. Likelihood, score, Fisher information,
//! and outer-product-of-score accumulators all visit the same per-period
//! observation groups.

use crate::error::{GabError, Result};
use crate::mle::FitFamily;
use crate::panel::BinaryMatrix;

/// Probability floor for likelihood evaluation only: g is clipped into
/// [ε, 1−ε] before logs and every clip is counted.
pub const DEFAULT_PROB_FLOOR: f64 = 1e-10;

/// Initial value policy for the unobserved probability lags.
#[derive(Debug, Clone, PartialEq)]
pub enum FilterInit {
    /// Per-series sample mean of the outcomes (the practical default).
    SampleMean,
    /// One fixed value per series.
    Fixed(Vec<f64>),
}

/// One per-period observation group: for per-series blocks a single
/// Bernoulli cell, for shared-probability blocks the whole cross-section.
pub(crate) struct ObsGroup<'a> {
    pub g: f64,
    pub dg: &'a [f64],
    pub successes: f64,
    pub trials: f64,
}

#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct WalkStats {
    pub clip_count: u64,
    /// Number of time periods visited.
    pub n_periods: usize,
    /// Total Bernoulli cells visited (Σ trials).
    pub n_cells: f64,
}

/// Precomputed panel aggregates shared across blocks and optimizer steps.
pub(crate) struct PanelAux {
    pub counts: Vec<f64>,
    pub ybar: Vec<f64>,
    /// Network-weighted outcome aggregates, time-major, when needed.
    pub wy: Option<Vec<f64>>,
    pub series_means: Vec<f64>,
    pub grand_mean: f64,
}

impl PanelAux {
    pub(crate) fn new(family: &FitFamily, panel: &BinaryMatrix) -> Result<Self> {
        let n = panel.n_series();
        let t_len = panel.horizon();
        let counts: Vec<f64> = (0..t_len).map(|t| panel.count_at(t) as f64).collect();
        let mut ybar = vec![0.0; t_len];
        for (t, item) in ybar.iter_mut().enumerate() {
            *item = counts[t] / n as f64;
        }
        let wy = if let FitFamily::Network { weights, .. } = family {
            if weights.len() != n || weights.iter().any(|r| r.len() != n) {
                return Err(GabError::DimensionMismatch("W shape vs panel".into()));
            }
            let mut wy = vec![0.0; n * t_len];
            for t in 0..t_len {
                let col = panel.column(t);
                for i in 0..n {
                    let mut acc = 0.0;
                    for (j, &w) in weights[i].iter().enumerate() {
                        if w != 0.0 {
                            acc += w * col[j] as f64;
                        }
                    }
                    wy[t * n + i] = acc;
                }
            }
            Some(wy)
        } else {
            None
        };
        Ok(PanelAux {
            counts,
            ybar,
            wy,
            series_means: panel.series_means(),
            grand_mean: panel.grand_mean(),
        })
    }
}

/// Filter state for one block: the current value, its parameter
/// sensitivities, and the history rings. Block coordinates are `n_reg`
/// regressor coefficients followed by `n_lag` autoregressive coefficients.
struct FilterState {
    n_lag: usize,
    m: usize,
    v: Vec<f64>,
    dv: Vec<f64>,
    head: usize,
}

impl FilterState {
    fn new(n_lag: usize, m: usize, v_init: f64) -> Self {
        let slots = n_lag.max(1);
        FilterState { n_lag, m, v: vec![v_init; slots], dv: vec![0.0; slots * m], head: 0 }
    }

    #[inline]
    fn v_lag(&self, tau: usize) -> f64 {
        self.v[(self.head + tau - 1) % self.n_lag.max(1)]
    }

    #[inline]
    fn dv_lag(&self, tau: usize) -> &[f64] {
        let slot = (self.head + tau - 1) % self.n_lag.max(1);
        &self.dv[slot * self.m..(slot + 1) * self.m]
    }

    /// Advance: regressors `r` pair with coefficients `phi`, lags with `beta`.
    fn step(&mut self, r: &[f64], phi: &[f64], beta: &[f64], v_out: &mut f64, dv_out: &mut [f64]) {
        debug_assert_eq!(r.len(), phi.len());
        debug_assert_eq!(beta.len(), self.n_lag);
        debug_assert_eq!(dv_out.len(), self.m);
        let mut v = 0.0;
        for (rk, pk) in r.iter().zip(phi) {
            v += rk * pk;
        }
        dv_out[..r.len()].copy_from_slice(r);
        dv_out[r.len()..].fill(0.0);
        for tau in 1..=self.n_lag {
            let vl = self.v_lag(tau);
            v += beta[tau - 1] * vl;
            dv_out[r.len() + tau - 1] += vl;
            let dvl = self.dv_lag(tau);
            let b = beta[tau - 1];
            for k in 0..self.m {
                dv_out[k] += b * dvl[k];
            }
        }
        *v_out = v;
        // push
        if self.n_lag > 0 {
            self.head = (self.head + self.n_lag - 1) % self.n_lag;
            self.v[self.head] = v;
            self.dv[self.head * self.m..(self.head + 1) * self.m].copy_from_slice(dv_out);
        }
    }
}

#[inline]
fn clip(g: f64, eps: f64, clip_count: &mut u64) -> f64 {
    if g < eps {
        *clip_count += 1;
        eps
    } else if g > 1.0 - eps {
        *clip_count += 1;
        1.0 - eps
    } else {
        g
    }
}

fn init_value(init: &FilterInit, aux: &PanelAux, series: Option<usize>) -> f64 {
    match init {
        FilterInit::SampleMean => match series {
            Some(i) => aux.series_means[i],
            None => aux.grand_mean,
        },
        FilterInit::Fixed(v) => match series {
            Some(i) => v[i],
            None => v[0],
        },
    }
}

/// Walk one parameter block over the panel, visiting each period's
/// observation group with its filtered probability and sensitivities.
///
/// `theta` is the block in constrained coordinates; the first `q` panel
/// columns (family outcome lags) are consumed as presample.
pub(crate) fn walk_block<F: FnMut(usize, &ObsGroup)>(
    family: &FitFamily,
    block_series: usize,
    theta: &[f64],
    panel: &BinaryMatrix,
    aux: &PanelAux,
    init: &FilterInit,
    eps: f64,
    visit: &mut F,
) -> Result<WalkStats> {
    let n = panel.n_series();
    let t_len = panel.horizon();
    let mut stats = WalkStats::default();
    let mut clips = 0u64;

    match family {
        FitFamily::Constant => {
            let g = clip(theta[0], eps, &mut clips);
            let dg = [1.0];
            for t in 0..t_len {
                let k = aux.counts[t];
                visit(t, &ObsGroup { g, dg: &dg, successes: k, trials: n as f64 });
                stats.n_periods += 1;
                stats.n_cells += n as f64;
            }
        }
        FitFamily::Exchangeable => {
            // θ = [ω, γ, β]; shared probability driven by ȳ_{t-1}
            let mut ring = FilterState::new(1, 3, init_value(init, aux, None));
            let mut v = 0.0;
            let mut dv = [0.0; 3];
            for t in 1..t_len {
                let r = [1.0, aux.ybar[t - 1]];
                ring.step(&r, &theta[..2], &theta[2..3], &mut v, &mut dv);
                let g = clip(v, eps, &mut clips);
                let k = aux.counts[t];
                visit(t, &ObsGroup { g, dg: &dv, successes: k, trials: n as f64 });
                stats.n_periods += 1;
                stats.n_cells += n as f64;
            }
        }
        FitFamily::Linear { s, q } => {
            let i = block_series;
            let m = 1 + q + s;
            let mut ring = FilterState::new(*s, m, init_value(init, aux, Some(i)));
            let mut v = 0.0;
            let mut dv = vec![0.0; m];
            let mut r = vec![0.0; 1 + q];
            for t in *q..t_len {
                r[0] = 1.0;
                for tau in 1..=*q {
                    r[tau] = panel.get(i, t - tau) as f64;
                }
                ring.step(&r, &theta[..1 + q], &theta[1 + q..], &mut v, &mut dv);
                let g = clip(v, eps, &mut clips);
                let y = panel.get(i, t) as f64;
                visit(t, &ObsGroup { g, dg: &dv, successes: y, trials: 1.0 });
                stats.n_periods += 1;
                stats.n_cells += 1.0;
            }
        }
        FitFamily::Logit11 => {
            // log-odds recursion x_t = ω + α y_{t-1} + β x_{t-1}, p = σ(x)
            let i = block_series;
            let mean0 = init_value(init, aux, Some(i));
            let floor = (0.5 / t_len.max(2) as f64).min(1e-3);
            let x0 = super::transform::logit(mean0.clamp(floor, 1.0 - floor));
            let mut ring = FilterState::new(1, 3, x0);
            let mut x = 0.0;
            let mut dx = [0.0; 3];
            let mut dg = [0.0; 3];
            for t in 1..t_len {
                let r = [1.0, panel.get(i, t - 1) as f64];
                ring.step(&r, &theta[..2], &theta[2..3], &mut x, &mut dx);
                let p = super::transform::sigmoid(x);
                let g = clip(p, eps, &mut clips);
                let pq = p * (1.0 - p);
                for k in 0..3 {
                    dg[k] = pq * dx[k];
                }
                let y = panel.get(i, t) as f64;
                visit(t, &ObsGroup { g, dg: &dg, successes: y, trials: 1.0 });
                stats.n_periods += 1;
                stats.n_cells += 1.0;
            }
        }
        FitFamily::Interactive { include_alpha } | FitFamily::Network { include_alpha, .. } => {
            let i = block_series;
            let n_reg = if *include_alpha { 3 } else { 2 };
            let m = n_reg + 1;
            let mut ring = FilterState::new(1, m, init_value(init, aux, Some(i)));
            let mut v = 0.0;
            let mut dv = vec![0.0; m];
            let mut r = vec![0.0; n_reg];
            let agg = |t: usize| -> f64 {
                match aux.wy {
                    Some(ref wy) => wy[t * n + i],
                    None => aux.ybar[t],
                }
            };
            for t in 1..t_len {
                r[0] = 1.0;
                if *include_alpha {
                    r[1] = panel.get(i, t - 1) as f64;
                    r[2] = agg(t - 1);
                } else {
                    r[1] = agg(t - 1);
                }
                ring.step(&r, &theta[..n_reg], &theta[n_reg..], &mut v, &mut dv);
                let g = clip(v, eps, &mut clips);
                let y = panel.get(i, t) as f64;
                visit(t, &ObsGroup { g, dg: &dv, successes: y, trials: 1.0 });
                stats.n_periods += 1;
                stats.n_cells += 1.0;
            }
        }
    }
    stats.clip_count = clips;
    Ok(stats)
}

/// Filtered probability path for one block at `theta` (no sensitivities).
#[cfg(test)]
pub(crate) fn filtered_path(
    family: &FitFamily,
    block_series: usize,
    theta: &[f64],
    panel: &BinaryMatrix,
    aux: &PanelAux,
    init: &FilterInit,
) -> Result<Vec<(usize, f64)>> {
    let mut path = Vec::new();
    walk_block(family, block_series, theta, panel, aux, init, 0.0, &mut |t, obs| {
        path.push((t, obs.g));
    })?;
    Ok(path)
}
