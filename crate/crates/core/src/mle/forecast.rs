//! Recursive one-step-ahead forecasts and MSE evaluation.
//!
//! A model forecaster filters probabilities through the whole panel with
//! the fitted (or calibrated) spec, rolling forward on *realized* outcomes,
//! and records p̂_{i,t} over the holdout window. Two degenerate benchmarks
//! complete the comparison set: a constant probability and pure
//! persistence ŷ_{i,t} = y_{i,t-1}.

use serde::Serialize;

use crate::error::{GabError, Result};
use crate::model::{eval_g_into, ModelSpec, PanelState};
use crate::panel::BinaryMatrix;

#[derive(Debug, Clone)]
pub enum BenchmarkForecaster {
    /// Filter a validated model spec on realized history.
    Model(ModelSpec),
    /// p̂ ≡ c.
    Constant(f64),
    /// p̂_{i,t} = y_{i,t-1}.
    Persistence,
}

/// Time-major p̂ panel over the holdout `est_len..T`.
#[derive(Debug, Clone)]
pub struct ForecastPanel {
    pub n_series: usize,
    pub est_len: usize,
    /// p̂(i, t) at `values[(t − est_len) * n_series + i]`.
    pub values: Vec<f64>,
}

impl ForecastPanel {
    #[inline]
    pub fn horizon(&self) -> usize {
        self.values.len() / self.n_series
    }

    #[inline]
    pub fn get(&self, series: usize, holdout_t: usize) -> f64 {
        self.values[holdout_t * self.n_series + series]
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        write!(w, "t")?;
        for i in 1..=self.n_series {
            write!(w, ",p_hat_{i}")?;
        }
        writeln!(w)?;
        for t in 0..self.horizon() {
            write!(w, "{}", self.est_len + t)?;
            for i in 0..self.n_series {
                write!(w, ",{}", self.get(i, t))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}

/// One-step-ahead probability forecasts for `t = est_len..T`.
///
/// For model forecasters the probability filter initializes at the
/// per-series sample means of the estimation window and consumes the first
/// `q` observations as outcome lags, so no holdout information leaks into
/// the filter state ahead of time.
pub fn forecast_one_step(
    fc: &BenchmarkForecaster,
    panel: &BinaryMatrix,
    est_len: usize,
) -> Result<ForecastPanel> {
    let n = panel.n_series();
    let t_len = panel.horizon();
    if est_len == 0 || est_len >= t_len {
        return Err(GabError::Config(format!(
            "holdout window must be non-empty: est_len {est_len}, T {t_len}"
        )));
    }
    let h = t_len - est_len;
    let mut values = vec![0.0; h * n];
    match fc {
        BenchmarkForecaster::Constant(c) => {
            if !(0.0..=1.0).contains(c) {
                return Err(GabError::Domain(format!("constant forecast {c} outside [0,1]")));
            }
            values.fill(*c);
        }
        BenchmarkForecaster::Persistence => {
            for t in est_len..t_len {
                for i in 0..n {
                    values[(t - est_len) * n + i] = panel.get(i, t - 1) as f64;
                }
            }
        }
        BenchmarkForecaster::Model(spec) => {
            spec.ensure_valid()?;
            if spec.n_series != n {
                return Err(GabError::DimensionMismatch("spec N vs panel".into()));
            }
            let s = spec.lags.s;
            let q = spec.lags.q;
            if est_len <= q {
                return Err(GabError::Config("estimation window shorter than outcome lags".into()));
            }
            let est_means = panel.window(0, est_len).series_means();
            let p_lags = vec![est_means; s];
            let y_lags: Vec<Vec<f64>> = (0..q)
                .map(|tau| (0..n).map(|i| panel.get(i, q - 1 - tau) as f64).collect())
                .collect();
            let mut state = PanelState::new_full(&p_lags, &y_lags)?;
            let mut p_now = vec![0.0; n];
            let mut y_now = vec![0.0; n];
            for t in q..t_len {
                eval_g_into(spec, &state, &mut p_now)?;
                if t >= est_len {
                    values[(t - est_len) * n..(t - est_len + 1) * n].copy_from_slice(&p_now);
                }
                for i in 0..n {
                    y_now[i] = panel.get(i, t) as f64;
                }
                state.push(&p_now, &y_now);
            }
        }
    }
    Ok(ForecastPanel { n_series: n, est_len, values })
}

#[derive(Debug, Clone, Serialize)]
pub struct MseReport {
    pub per_series: Vec<f64>,
    pub pooled: f64,
    pub n_cells: usize,
}

/// Mean of (p̂ − y)² over the holdout, per series and pooled.
pub fn mse_eval(forecast: &ForecastPanel, panel: &BinaryMatrix) -> Result<MseReport> {
    let n = forecast.n_series;
    let h = forecast.horizon();
    if panel.n_series() != n || forecast.est_len + h != panel.horizon() {
        return Err(GabError::DimensionMismatch("forecast window vs panel".into()));
    }
    if h == 0 {
        return Err(GabError::Config("empty holdout".into()));
    }
    let mut per_series = vec![0.0; n];
    for t in 0..h {
        for i in 0..n {
            let e = forecast.get(i, t) - panel.get(i, forecast.est_len + t) as f64;
            per_series[i] += e * e;
        }
    }
    for v in &mut per_series {
        *v /= h as f64;
    }
    let pooled = per_series.iter().sum::<f64>() / n as f64;
    Ok(MseReport { per_series, pooled, n_cells: n * h })
}
