//! Coupled trajectories for ergodicity diagnostics.
//!
//! Two copies of the process start from different initial conditions but
//! share every uniform shock. The conditional coupling identity
//! E_{t-1}|y_{i,t} − y'_{i,t}| = |p_{i,t} − p'_{i,t}| turns the contraction
//! bound η_t ≤ Φ η_{t-1} into geometric decay of the expected L1 distance
//! Σ_i |p_{i,t} − p'_{i,t}|, at rate ρ(Φ). The fitted log-linear slope of
//! the replication-averaged distance is the empirical decay rate.

use serde::Serialize;

use crate::error::{GabError, Result};
use crate::model::contraction::{check_contraction, Verdict};
use crate::model::{ModelSpec, PanelState};
use crate::rng::{CounterRng, Domain};
use crate::sim::{SimConfig, Stepper};

/// Distances below this are treated as numerically extinct when fitting the
/// log-linear decay slope.
pub const DISTANCE_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Serialize)]
pub struct CouplingTrace {
    /// Replication-averaged Σ_i |p_{i,t} − p'_{i,t}|; index 0 is the
    /// initial-condition distance.
    pub mean_l1: Vec<f64>,
    /// OLS slope of log distance over the leading window above the floor;
    /// `None` when fewer than two points survive (e.g. identical inits).
    pub decay_slope: Option<f64>,
    /// Number of leading points used in the fit.
    pub fit_window: usize,
    /// Whether either contraction assumption certifies uniqueness
    /// (`None` when the family has no certified Lipschitz layout).
    pub contraction_satisfied: Option<bool>,
}

fn fit_log_slope(trace: &[f64]) -> (Option<f64>, usize) {
    let window: Vec<(f64, f64)> = trace
        .iter()
        .enumerate()
        .take_while(|(_, &d)| d > DISTANCE_FLOOR)
        .map(|(t, &d)| (t as f64, d.ln()))
        .collect();
    if window.len() < 2 {
        return (None, window.len());
    }
    let n = window.len() as f64;
    let mean_t = window.iter().map(|(t, _)| t).sum::<f64>() / n;
    let mean_l = window.iter().map(|(_, l)| l).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for (t, l) in &window {
        sxx += (t - mean_t) * (t - mean_t);
        sxy += (t - mean_t) * (l - mean_l);
    }
    (Some(sxy / sxx), window.len())
}

/// Run `reps` coupled pairs from initial probability lags `init_a`/`init_b`
/// (each newest-first, exactly `s` vectors) over `cfg.horizon` steps.
///
/// `cfg.burn_in` and `cfg.init` are ignored: coupling starts exactly at the
/// supplied initial conditions.
pub fn coupled_simulate(
    spec: &ModelSpec,
    init_a: &[Vec<f64>],
    init_b: &[Vec<f64>],
    cfg: &SimConfig,
    reps: usize,
) -> Result<CouplingTrace> {
    spec.ensure_valid()?;
    if reps == 0 {
        return Err(GabError::Config("coupling needs at least one replication".into()));
    }
    let n = spec.n_series;
    let s = spec.lags.s;
    let q = spec.lags.q;
    for init in [init_a, init_b] {
        if init.len() != s || init.iter().any(|v| v.len() != n) {
            return Err(GabError::DimensionMismatch(format!(
                "coupling inits need exactly s = {s} vectors of length {n}"
            )));
        }
    }

    let contraction_satisfied = match check_contraction(spec) {
        Ok(report)
            if report.assumption1 != Verdict::Unsupported
                || report.assumption2.verdict != Verdict::Unsupported =>
        {
            Some(
                report.assumption1 == Verdict::Holds
                    || report.assumption2.verdict == Verdict::Holds,
            )
        }
        _ => None,
    };

    let stepper = Stepper::new(spec);
    let mut mean_l1 = vec![0.0; cfg.horizon + 1];

    let mut pa = vec![0.0; n];
    let mut pb = vec![0.0; n];
    let mut ya = vec![0.0; n];
    let mut yb = vec![0.0; n];
    for rep in 0..reps {
        let rng = CounterRng::new(cfg.seed, Domain::Shock, rep as u64);
        // shared supplemental outcome draws, one per (lag, series)
        let draw_lags = |init: &[Vec<f64>]| -> Result<PanelState> {
            let mut y_lags = Vec::with_capacity(q);
            for tau in 1..=q {
                let p_ref = &init[(tau - 1).min(s - 1)];
                let row = rng.row((q - tau) as u64);
                let y: Vec<f64> = (0..n)
                    .map(|i| if row.uniform(i as u64) <= p_ref[i] { 1.0 } else { 0.0 })
                    .collect();
                y_lags.push(y);
            }
            PanelState::new_full(init, &y_lags)
        };
        let mut state_a = draw_lags(init_a)?;
        let mut state_b = draw_lags(init_b)?;

        mean_l1[0] += init_a[0]
            .iter()
            .zip(&init_b[0])
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>();

        for t in 0..cfg.horizon {
            stepper.probabilities(&state_a, &mut pa)?;
            stepper.probabilities(&state_b, &mut pb)?;
            let row = rng.row((q + t) as u64);
            let mut dist = 0.0;
            for i in 0..n {
                let u = row.uniform(i as u64);
                ya[i] = if u <= pa[i] { 1.0 } else { 0.0 };
                yb[i] = if u <= pb[i] { 1.0 } else { 0.0 };
                dist += (pa[i] - pb[i]).abs();
            }
            mean_l1[t + 1] += dist;
            state_a.push(&pa, &ya);
            state_b.push(&pb, &yb);
        }
    }
    for d in &mut mean_l1 {
        *d /= reps as f64;
    }

    let (decay_slope, fit_window) = fit_log_slope(&mean_l1);
    Ok(CouplingTrace { mean_l1, decay_slope, fit_window, contraction_satisfied })
}
