//! Binary outcome panels shared by the simulator, estimators, and pipeline.

use crate::error::{GabError, Result};

/// An N × T panel of binary outcomes, stored time-major: cell `(i, t)` lives
/// at `data[t * n_series + i]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMatrix {
    n_series: usize,
    horizon: usize,
    data: Vec<u8>,
}

impl BinaryMatrix {
    pub fn zeros(n_series: usize, horizon: usize) -> Self {
        BinaryMatrix { n_series, horizon, data: vec![0; n_series * horizon] }
    }

    /// Build from per-series rows `rows[i][t]`.
    pub fn from_rows(rows: &[Vec<u8>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(GabError::DimensionMismatch("empty panel".into()));
        }
        let t_len = rows[0].len();
        if rows.iter().any(|r| r.len() != t_len) {
            return Err(GabError::DimensionMismatch("ragged panel rows".into()));
        }
        let mut m = BinaryMatrix::zeros(n, t_len);
        for (i, row) in rows.iter().enumerate() {
            for (t, &v) in row.iter().enumerate() {
                if v > 1 {
                    return Err(GabError::Domain(format!("outcome {v} is not binary")));
                }
                m.set(i, t, v);
            }
        }
        Ok(m)
    }

    #[inline]
    pub fn n_series(&self) -> usize {
        self.n_series
    }

    #[inline]
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    #[inline]
    pub fn get(&self, series: usize, t: usize) -> u8 {
        self.data[t * self.n_series + series]
    }

    #[inline]
    pub fn set(&mut self, series: usize, t: usize, v: u8) {
        debug_assert!(v <= 1);
        self.data[t * self.n_series + series] = v;
    }

    /// The cross-section at time `t`.
    #[inline]
    pub fn column(&self, t: usize) -> &[u8] {
        &self.data[t * self.n_series..(t + 1) * self.n_series]
    }

    /// Total successes at time `t`.
    pub fn count_at(&self, t: usize) -> u32 {
        self.column(t).iter().map(|&v| v as u32).sum()
    }

    /// Per-series sample means, the standard probability-filter initializer.
    pub fn series_means(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.n_series];
        for t in 0..self.horizon {
            for (i, &v) in self.column(t).iter().enumerate() {
                m[i] += v as f64;
            }
        }
        let t = self.horizon.max(1) as f64;
        m.iter_mut().for_each(|x| *x /= t);
        m
    }

    /// Grand mean over all cells.
    pub fn grand_mean(&self) -> f64 {
        let total: u64 = self.data.iter().map(|&v| v as u64).sum();
        total as f64 / (self.data.len().max(1)) as f64
    }

    /// Restrict to the time window `[start, end)`.
    pub fn window(&self, start: usize, end: usize) -> BinaryMatrix {
        assert!(start <= end && end <= self.horizon);
        BinaryMatrix {
            n_series: self.n_series,
            horizon: end - start,
            data: self.data[start * self.n_series..end * self.n_series].to_vec(),
        }
    }
}
