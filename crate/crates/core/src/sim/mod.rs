//! Trajectory simulation.
//!
//! Outcomes are generated as y_{i,t} = I(u_{i,t} ≤ p_{i,t}) with u_{i,t}
//! i.i.d. uniform, and probabilities advance through the family update g.
//! Every uniform is a counter-stream draw keyed by (seed, replicate, series,
//! time), so a trajectory is a pure function of `(spec, config, replicate)`
//! and parallel schedules cannot reorder randomness.

pub mod coupling;
pub mod moments;

use serde::{Deserialize, Serialize};

use crate::error::{GabError, Result};
use crate::model::{eval_g_into, interactive_step, Family, ModelSpec, PanelState};
use crate::panel::BinaryMatrix;
use crate::poisson::CountSeries;
use crate::rng::{CounterRng, Domain};

/// Default warmup when the caller asks for a stationary start.
pub const DEFAULT_BURN_IN: usize = 1_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum InitPolicy {
    /// Exactly `s` probability vectors, newest first (`p[0]` is p_0, the
    /// most recent pre-sample vector). Supplemental outcome lags are drawn
    /// as y = I(u ≤ p) from the same shock stream.
    Fixed { p: Vec<Vec<f64>> },
    /// Start from p ≡ 1/2 and discard `extra_burn_in` additional steps.
    StationaryWarmup { extra_burn_in: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub seed: u64,
    /// Recorded horizon T ≥ 1.
    pub horizon: usize,
    /// Steps discarded before recording starts.
    pub burn_in: usize,
    pub init: InitPolicy,
}

impl SimConfig {
    pub fn fixed(seed: u64, horizon: usize, burn_in: usize, p_lags: Vec<Vec<f64>>) -> Self {
        SimConfig { seed, horizon, burn_in, init: InitPolicy::Fixed { p: p_lags } }
    }

    pub fn stationary(seed: u64, horizon: usize) -> Self {
        SimConfig {
            seed,
            horizon,
            burn_in: DEFAULT_BURN_IN,
            init: InitPolicy::StationaryWarmup { extra_burn_in: 0 },
        }
    }
}

/// Paired probability/outcome panels with their provenance.
#[derive(Debug, Clone)]
pub struct Trajectory {
    n_series: usize,
    horizon: usize,
    /// time-major probabilities: p(i, t) at `p[t * n + i]`
    p: Vec<f64>,
    y: BinaryMatrix,
    pub seed: u64,
    pub replicate: u64,
    pub spec_fingerprint: u64,
}

impl Trajectory {
    #[inline]
    pub fn n_series(&self) -> usize {
        self.n_series
    }

    #[inline]
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    pub fn p(&self, series: usize, t: usize) -> f64 {
        self.p[t * self.n_series + series]
    }

    #[inline]
    pub fn p_column(&self, t: usize) -> &[f64] {
        &self.p[t * self.n_series..(t + 1) * self.n_series]
    }

    #[inline]
    pub fn y(&self, series: usize, t: usize) -> u8 {
        self.y.get(series, t)
    }

    pub fn outcomes(&self) -> &BinaryMatrix {
        &self.y
    }

    pub fn into_outcomes(self) -> BinaryMatrix {
        self.y
    }

    pub fn sum_p(&self, t: usize) -> f64 {
        self.p_column(t).iter().sum()
    }

    pub fn mean_y(&self) -> f64 {
        self.y.grand_mean()
    }

    /// Wide CSV of probabilities: `t,p_1..p_N,sum_p`.
    pub fn write_probability_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for i in 1..=self.n_series {
            write!(w, ",p_{i}")?;
        }
        writeln!(w, ",sum_p")?;
        for t in 0..self.horizon {
            write!(w, "{t}")?;
            for i in 0..self.n_series {
                write!(w, ",{}", self.p(i, t))?;
            }
            writeln!(w, ",{}", self.sum_p(t))?;
        }
        Ok(())
    }

    /// Wide CSV of outcomes: `t,y_1..y_N,X`.
    pub fn write_outcome_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for i in 1..=self.n_series {
            write!(w, ",y_{i}")?;
        }
        writeln!(w, ",X")?;
        for t in 0..self.horizon {
            write!(w, "{t}")?;
            for i in 0..self.n_series {
                write!(w, ",{}", self.y(i, t))?;
            }
            writeln!(w, ",{}", self.y.count_at(t))?;
        }
        Ok(())
    }
}

/// Aggregate count series X_t = Σ_i y_{i,t}.
pub fn aggregate_counts(traj: &Trajectory) -> CountSeries {
    let x = (0..traj.horizon()).map(|t| traj.outcomes().count_at(t)).collect();
    CountSeries::new(x)
}

/// Sparse row view of a network weight matrix for O(nnz) aggregation.
pub(crate) struct SparseRows {
    offsets: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseRows {
    pub(crate) fn from_dense(w: &[Vec<f64>]) -> Self {
        let n = w.len();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        offsets.push(0);
        for row in w {
            for (j, &v) in row.iter().enumerate() {
                if v != 0.0 {
                    cols.push(j as u32);
                    vals.push(v);
                }
            }
            offsets.push(cols.len());
        }
        SparseRows { offsets, cols, vals }
    }

    #[inline]
    pub(crate) fn dot_row(&self, i: usize, x: &[f64]) -> f64 {
        let mut acc = 0.0;
        for k in self.offsets[i]..self.offsets[i + 1] {
            acc += self.vals[k] * x[self.cols[k] as usize];
        }
        acc
    }
}

/// One-step advance shared by the simulator and the coupling runner.
pub(crate) struct Stepper<'a> {
    spec: &'a ModelSpec,
    net: Option<SparseRows>,
}

impl<'a> Stepper<'a> {
    pub(crate) fn new(spec: &'a ModelSpec) -> Self {
        let net = match (&spec.family, &spec.network) {
            (Family::Network(_), Some(w)) => Some(SparseRows::from_dense(w)),
            _ => None,
        };
        Stepper { spec, net }
    }

    /// Compute p_t from the state into `out`.
    pub(crate) fn probabilities(&self, state: &PanelState, out: &mut [f64]) -> Result<()> {
        if let (Family::Network(ps), Some(net)) = (&self.spec.family, &self.net) {
            let p1 = state.p_lag(1);
            let y1 = state.y_lag(1);
            for i in 0..self.spec.n_series {
                let wy = net.dot_row(i, y1);
                let v = interactive_step(&ps[i], y1[i], wy, p1[i]);
                // validated specs keep this in [0,1] up to floating dust
                out[i] = v.clamp(0.0, 1.0);
            }
            Ok(())
        } else {
            eval_g_into(self.spec, state, out)
        }
    }
}

fn initial_state(spec: &ModelSpec, cfg: &SimConfig, rng: &CounterRng) -> Result<(PanelState, usize)> {
    let n = spec.n_series;
    let (p_lags, extra) = match &cfg.init {
        InitPolicy::Fixed { p } => {
            if p.len() != spec.lags.s {
                return Err(GabError::DimensionMismatch(format!(
                    "Fixed init needs exactly s = {} probability vectors, got {}",
                    spec.lags.s,
                    p.len()
                )));
            }
            if p.iter().any(|v| v.len() != n) {
                return Err(GabError::DimensionMismatch("init vector length vs N".into()));
            }
            (p.clone(), 0usize)
        }
        InitPolicy::StationaryWarmup { extra_burn_in } => {
            (vec![vec![0.5; n]; spec.lags.s], *extra_burn_in)
        }
    };
    // Supplemental outcome lags y_{-τ+1} = I(u ≤ p_{-τ+1}); lags deeper than
    // the provided probability history reuse its oldest vector. Presample
    // draws occupy times 0..q of the shock stream.
    let q = spec.lags.q;
    let mut y_lags = Vec::with_capacity(q);
    for tau in 1..=q {
        let p_ref = &p_lags[(tau - 1).min(spec.lags.s - 1)];
        let row = rng.row((q - tau) as u64);
        let y: Vec<f64> =
            (0..n).map(|i| if row.uniform(i as u64) <= p_ref[i] { 1.0 } else { 0.0 }).collect();
        y_lags.push(y);
    }
    Ok((PanelState::new_full(&p_lags, &y_lags)?, extra))
}

/// Simulate replicate `replicate` of `(spec, cfg)`.
pub fn simulate_replicate(spec: &ModelSpec, cfg: &SimConfig, replicate: u64) -> Result<Trajectory> {
    spec.ensure_valid()?;
    if cfg.horizon == 0 {
        return Err(GabError::Config("horizon must be ≥ 1".into()));
    }
    let n = spec.n_series;
    let rng = CounterRng::new(cfg.seed, Domain::Shock, replicate);
    let (mut state, extra_burn) = initial_state(spec, cfg, &rng)?;
    let stepper = Stepper::new(spec);

    let burn = cfg.burn_in + extra_burn;
    let total = burn + cfg.horizon;
    let mut p_panel = vec![0.0; n * cfg.horizon];
    let mut y_panel = BinaryMatrix::zeros(n, cfg.horizon);
    let mut p_now = vec![0.0; n];
    let mut y_now = vec![0.0; n];

    let t0 = spec.lags.q as u64; // presample draws used times 0..q
    for step in 0..total {
        stepper.probabilities(&state, &mut p_now)?;
        let row = rng.row(t0 + step as u64);
        for i in 0..n {
            y_now[i] = if row.uniform(i as u64) <= p_now[i] { 1.0 } else { 0.0 };
        }
        if step >= burn {
            let t = step - burn;
            p_panel[t * n..(t + 1) * n].copy_from_slice(&p_now);
            for i in 0..n {
                y_panel.set(i, t, y_now[i] as u8);
            }
        }
        state.push(&p_now, &y_now);
    }

    Ok(Trajectory {
        n_series: n,
        horizon: cfg.horizon,
        p: p_panel,
        y: y_panel,
        seed: cfg.seed,
        replicate,
        spec_fingerprint: spec.fingerprint(),
    })
}

/// Simulate replicate 0.
pub fn simulate(spec: &ModelSpec, cfg: &SimConfig) -> Result<Trajectory> {
    simulate_replicate(spec, cfg, 0)
}
