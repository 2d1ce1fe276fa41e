//! Empirical pipeline from raw return panels to binary tail-event panels.
//!
//! Steps: load aligned returns and factor files, regress excess returns on
//! the factors per series over the estimation window, compute residuals
//! for the full span with those coefficients, threshold each series at its
//! estimation-window empirical quantile, and flag y_{i,t} = 1 when the
//! residual falls strictly below the threshold. Thresholds and factor
//! loadings never see holdout data.
//!
//! Dates are ISO `YYYY-MM-DD` strings; lexicographic order is date order.
//! The window convention is strict on both sides: rows dated before the
//! split belong to estimation, rows after it to the holdout, and a row
//! dated exactly at the split boundary (a non-trading date in daily data)
//! to neither.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use std::path::Path;

use crate::error::{GabError, Result};
use crate::panel::BinaryMatrix;

#[derive(Debug, Clone)]
pub struct ReturnsPanel {
    pub dates: Vec<String>,
    pub ids: Vec<String>,
    /// time-major: value(i, t) at `values[t * ids.len() + i]`, decimal returns
    pub values: Vec<f64>,
    pub risk_free: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct FactorSeries {
    pub dates: Vec<String>,
    pub names: Vec<String>,
    /// time-major: factor(j, t) at `values[t * names.len() + j]`
    pub values: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct ResidualPanel {
    pub dates: Vec<String>,
    pub ids: Vec<String>,
    pub values: Vec<f64>,
}

impl ResidualPanel {
    #[inline]
    pub fn get(&self, series: usize, t: usize) -> f64 {
        self.values[t * self.ids.len() + series]
    }
}

/// Binary tail-event panel with its thresholds and split point.
#[derive(Debug, Clone)]
pub struct BinaryPanel {
    pub dates: Vec<String>,
    pub ids: Vec<String>,
    pub matrix: BinaryMatrix,
    /// Per-series estimation-window quantile thresholds.
    pub thresholds: Vec<f64>,
    /// Number of leading estimation rows (dates strictly before the split).
    pub split_idx: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RejectedSeries {
    pub id: String,
    /// 1-based data row of the first gap.
    pub first_gap_row: usize,
}

#[derive(Debug, Clone, Default, Serialize)]
pub struct LoadReport {
    pub rejected_series: Vec<RejectedSeries>,
    /// Rows dropped from either file by the date intersection.
    pub dropped_return_dates: usize,
    pub dropped_factor_dates: usize,
}

fn parse_cell(raw: &str, row: usize, col: usize) -> Result<Option<f64>> {
    let t = raw.trim();
    if t.is_empty() {
        return Ok(None);
    }
    t.parse::<f64>().map(Some).map_err(|e| GabError::Parse {
        row,
        col,
        msg: format!("{e}: {t:?}"),
    })
}

struct RawTable {
    header: Vec<String>,
    dates: Vec<String>,
    /// row-major cells (one row per date), None marks a gap
    cells: Vec<Vec<Option<f64>>>,
}

fn read_table(path: &Path) -> Result<RawTable> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).flexible(false).from_path(path)?;
    let header: Vec<String> =
        reader.headers()?.iter().skip(1).map(|s| s.trim().to_string()).collect();
    let mut dates = Vec::new();
    let mut cells = Vec::new();
    for (r, record) in reader.records().enumerate() {
        let record = record?;
        let mut row = Vec::with_capacity(header.len());
        let date = record
            .get(0)
            .ok_or(GabError::Parse { row: r + 2, col: 1, msg: "missing date".into() })?
            .trim()
            .to_string();
        for c in 1..record.len() {
            row.push(parse_cell(&record[c], r + 2, c + 1)?);
        }
        if row.len() != header.len() {
            return Err(GabError::Parse {
                row: r + 2,
                col: row.len() + 1,
                msg: format!("expected {} value columns", header.len()),
            });
        }
        dates.push(date);
        cells.push(row);
    }
    Ok(RawTable { header, dates, cells })
}

/// Load and align the returns and factor files.
///
/// Series with any missing cell over the joined span are rejected and
/// listed in the report; dates outside the intersection of the two files
/// are dropped and counted.
pub fn load_panels(
    returns_path: &Path,
    factors_path: &Path,
) -> Result<(ReturnsPanel, FactorSeries, LoadReport)> {
    let raw_ret = read_table(returns_path)?;
    let raw_fac = read_table(factors_path)?;
    if raw_fac.header.first().map(|s| s.as_str()) != Some("rf") {
        return Err(GabError::Config("factors file must start with an `rf` column".into()));
    }

    let fac_index: std::collections::HashMap<&str, usize> =
        raw_fac.dates.iter().enumerate().map(|(k, d)| (d.as_str(), k)).collect();
    let mut joined: Vec<(usize, usize)> = Vec::new();
    for (r, d) in raw_ret.dates.iter().enumerate() {
        if let Some(&f) = fac_index.get(d.as_str()) {
            joined.push((r, f));
        }
    }
    if joined.is_empty() {
        return Err(GabError::Config("no overlapping dates between returns and factors".into()));
    }
    let mut report = LoadReport {
        rejected_series: Vec::new(),
        dropped_return_dates: raw_ret.dates.len() - joined.len(),
        dropped_factor_dates: raw_fac.dates.len() - joined.len(),
    };
    // factor rows must be complete
    for &(_, f) in &joined {
        for (j, cell) in raw_fac.cells[f].iter().enumerate() {
            if cell.is_none() {
                return Err(GabError::Parse {
                    row: f + 2,
                    col: j + 2,
                    msg: "missing factor value".into(),
                });
            }
        }
    }
    // keep return series that are complete over the joined span
    let mut kept: Vec<usize> = Vec::new();
    'series: for i in 0..raw_ret.header.len() {
        for &(r, _) in &joined {
            if raw_ret.cells[r][i].is_none() {
                report
                    .rejected_series
                    .push(RejectedSeries { id: raw_ret.header[i].clone(), first_gap_row: r + 2 });
                continue 'series;
            }
        }
        kept.push(i);
    }
    if kept.is_empty() {
        return Err(GabError::Config("every return series has gaps".into()));
    }

    let dates: Vec<String> = joined.iter().map(|&(r, _)| raw_ret.dates[r].clone()).collect();
    let n = kept.len();
    let mut values = Vec::with_capacity(n * joined.len());
    let mut risk_free = Vec::with_capacity(joined.len());
    let k_factors = raw_fac.header.len() - 1;
    let mut fvalues = Vec::with_capacity(k_factors * joined.len());
    for &(r, f) in &joined {
        for &i in &kept {
            values.push(raw_ret.cells[r][i].unwrap());
        }
        risk_free.push(raw_fac.cells[f][0].unwrap());
        for j in 0..k_factors {
            fvalues.push(raw_fac.cells[f][j + 1].unwrap());
        }
    }
    let returns = ReturnsPanel {
        dates: dates.clone(),
        ids: kept.iter().map(|&i| raw_ret.header[i].clone()).collect(),
        values,
        risk_free,
    };
    let factors = FactorSeries {
        dates,
        names: raw_fac.header[1..].to_vec(),
        values: fvalues,
    };
    Ok((returns, factors, report))
}

fn estimation_len(dates: &[String], est_end_date: &str) -> usize {
    dates.iter().take_while(|d| d.as_str() < est_end_date).count()
}

/// Per-series OLS of excess returns on an intercept plus the factors,
/// estimated over dates strictly before `est_end_date`; residuals for the
/// whole span use the estimation-window coefficients.
pub fn ols_residuals(
    returns: &ReturnsPanel,
    factors: &FactorSeries,
    est_end_date: &str,
) -> Result<ResidualPanel> {
    if returns.dates != factors.dates {
        return Err(GabError::DimensionMismatch("panels must share aligned dates".into()));
    }
    let t_len = returns.dates.len();
    let n = returns.ids.len();
    let k = factors.names.len();
    let t_est = estimation_len(&returns.dates, est_end_date);
    if t_est <= k + 1 {
        return Err(GabError::Config(format!(
            "estimation window {t_est} too short for {k} factors"
        )));
    }

    // design matrix [1, f_1..f_K] over the estimation window
    let design = DMatrix::from_fn(t_est, k + 1, |t, j| {
        if j == 0 { 1.0 } else { factors.values[t * k + (j - 1)] }
    });
    let xtx = design.transpose() * &design;
    let xtx_lu = xtx.clone().lu();
    // rank check via the pivoted determinant scale
    if xtx_lu.determinant().abs() < 1e-12 * xtx.diagonal().iter().product::<f64>().abs().max(1e-300)
    {
        return Err(GabError::Domain("rank-deficient factor design".into()));
    }

    let mut residuals = vec![0.0; n * t_len];
    for i in 0..n {
        let y = DVector::from_fn(t_est, |t, _| {
            returns.values[t * n + i] - returns.risk_free[t]
        });
        let xty = design.transpose() * y;
        let beta = xtx_lu
            .solve(&xty)
            .ok_or_else(|| GabError::Domain("rank-deficient factor design".into()))?;
        for t in 0..t_len {
            let mut fit = beta[0];
            for j in 0..k {
                fit += beta[j + 1] * factors.values[t * k + j];
            }
            let excess = returns.values[t * n + i] - returns.risk_free[t];
            residuals[t * n + i] = excess - fit;
        }
    }
    Ok(ResidualPanel { dates: returns.dates.clone(), ids: returns.ids.clone(), values: residuals })
}

/// k-th smallest with k = ⌈level · T_est⌉ (1-based order statistic).
fn lower_quantile(sorted: &[f64], level: f64) -> f64 {
    let k = ((level * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[k - 1]
}

/// Flag tail events: y_{i,t} = 1 iff the residual falls strictly below the
/// series' estimation-window quantile at `level`. The same threshold
/// applies over the holdout.
pub fn threshold_binary(
    residuals: &ResidualPanel,
    level: f64,
    split_date: &str,
) -> Result<BinaryPanel> {
    if !(0.0..1.0).contains(&level) || level == 0.0 {
        return Err(GabError::Config(format!("quantile level {level} outside (0,1)")));
    }
    let n = residuals.ids.len();
    let t_len = residuals.dates.len();
    let t_est = estimation_len(&residuals.dates, split_date);
    if t_est == 0 {
        return Err(GabError::Config("empty estimation window".into()));
    }
    let mut thresholds = vec![0.0; n];
    let mut matrix = BinaryMatrix::zeros(n, t_len);
    let mut buf = vec![0.0; t_est];
    for i in 0..n {
        for t in 0..t_est {
            buf[t] = residuals.get(i, t);
        }
        buf.sort_by(f64::total_cmp);
        thresholds[i] = lower_quantile(&buf, level);
        for t in 0..t_len {
            matrix.set(i, t, u8::from(residuals.get(i, t) < thresholds[i]));
        }
    }
    Ok(BinaryPanel {
        dates: residuals.dates.clone(),
        ids: residuals.ids.clone(),
        matrix,
        thresholds,
        split_idx: t_est,
    })
}

/// Order-preserving split: estimation strictly before `date`, holdout
/// strictly after. Errors when estimation comes out empty.
pub fn split(panel: &BinaryPanel, date: &str) -> Result<(BinaryPanel, BinaryPanel)> {
    let t_est = estimation_len(&panel.dates, date);
    if t_est == 0 {
        return Err(GabError::Config(format!("split at {date} leaves an empty estimation window")));
    }
    let hold_start = panel.dates.iter().take_while(|d| d.as_str() <= date).count();
    let est = BinaryPanel {
        dates: panel.dates[..t_est].to_vec(),
        ids: panel.ids.clone(),
        matrix: panel.matrix.window(0, t_est),
        thresholds: panel.thresholds.clone(),
        split_idx: t_est,
    };
    let hold = BinaryPanel {
        dates: panel.dates[hold_start..].to_vec(),
        ids: panel.ids.clone(),
        matrix: panel.matrix.window(hold_start, panel.dates.len()),
        thresholds: panel.thresholds.clone(),
        split_idx: 0,
    };
    Ok((est, hold))
}

impl BinaryPanel {
    /// `date,<id>...` with 0/1 cells.
    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        write!(w, "date")?;
        for id in &self.ids {
            write!(w, ",{id}")?;
        }
        writeln!(w)?;
        for (t, d) in self.dates.iter().enumerate() {
            write!(w, "{d}")?;
            for i in 0..self.ids.len() {
                write!(w, ",{}", self.matrix.get(i, t))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_thresholds_csv<W: std::io::Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "id,threshold")?;
        for (id, th) in self.ids.iter().zip(&self.thresholds) {
            writeln!(w, "{id},{th}")?;
        }
        Ok(())
    }
}

/// Read a `date,<id>...` 0/1 panel back into memory. Aggregate columns
/// named `X` or `sum_p` (as written by the simulator exports) are skipped.
pub fn read_binary_panel_csv(path: &Path) -> Result<(Vec<String>, Vec<String>, BinaryMatrix)> {
    let table = read_table(path)?;
    let keep: Vec<usize> = (0..table.header.len())
        .filter(|&i| table.header[i] != "X" && table.header[i] != "sum_p")
        .collect();
    let n = keep.len();
    if n == 0 {
        return Err(GabError::Config("panel has no series columns".into()));
    }
    let mut matrix = BinaryMatrix::zeros(n, table.dates.len());
    for (t, row) in table.cells.iter().enumerate() {
        for (slot, &i) in keep.iter().enumerate() {
            let v = row[i].ok_or(GabError::Parse {
                row: t + 2,
                col: i + 2,
                msg: "missing binary cell".into(),
            })?;
            if v != 0.0 && v != 1.0 {
                return Err(GabError::Parse {
                    row: t + 2,
                    col: i + 2,
                    msg: format!("cell {v} is not binary"),
                });
            }
            matrix.set(slot, t, v as u8);
        }
    }
    let ids = keep.into_iter().map(|i| table.header[i].clone()).collect();
    Ok((table.dates, ids, matrix))
}

/// Read a count series from CSV with a column named `X`.
pub fn read_count_series_csv(path: &Path) -> Result<Vec<u32>> {
    let table = read_table(path)?;
    let col = table
        .header
        .iter()
        .position(|h| h == "X")
        .ok_or_else(|| GabError::Config("counts file needs a column named `X`".into()))?;
    let mut xs = Vec::with_capacity(table.dates.len());
    for (t, row) in table.cells.iter().enumerate() {
        let v = row[col].ok_or(GabError::Parse {
            row: t + 2,
            col: col + 2,
            msg: "missing count".into(),
        })?;
        if v < 0.0 || v.fract() != 0.0 {
            return Err(GabError::Parse {
                row: t + 2,
                col: col + 2,
                msg: format!("count {v} is not a nonnegative integer"),
            });
        }
        xs.push(v as u32);
    }
    Ok(xs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_tmp(name: &str, content: &str) -> std::path::PathBuf {
        let dir = std::env::temp_dir().join("gab_pipeline_tests");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join(format!("{name}_{}", std::process::id()));
        let mut f = std::fs::File::create(&path).unwrap();
        f.write_all(content.as_bytes()).unwrap();
        path
    }

    fn toy_files() -> (std::path::PathBuf, std::path::PathBuf) {
        let r = write_tmp(
            "returns.csv",
            "date,AAA,BBB\n2020-01-01,0.01,0.02\n2020-01-02,-0.01,0.00\n2020-01-03,0.03,-0.02\n",
        );
        let f = write_tmp(
            "factors.csv",
            "date,rf,mkt\n2020-01-01,0.001,0.005\n2020-01-02,0.001,-0.004\n2020-01-03,0.001,0.02\n",
        );
        (r, f)
    }

    #[test]
    fn complete_panel_loads() {
        let (r, f) = toy_files();
        let (ret, fac, report) = load_panels(&r, &f).unwrap();
        assert_eq!(ret.ids, vec!["AAA", "BBB"]);
        assert_eq!(ret.dates.len(), 3);
        assert_eq!(fac.names, vec!["mkt"]);
        assert!(report.rejected_series.is_empty());
        assert_eq!(report.dropped_return_dates, 0);
    }

    #[test]
    fn gappy_series_is_rejected_and_reported() {
        let r = write_tmp(
            "returns_gap.csv",
            "date,AAA,BBB\n2020-01-01,0.01,0.02\n2020-01-02,,0.00\n2020-01-03,0.03,-0.02\n",
        );
        let (_, f) = toy_files();
        let (ret, _, report) = load_panels(&r, &f).unwrap();
        assert_eq!(ret.ids, vec!["BBB"]);
        assert_eq!(report.rejected_series.len(), 1);
        assert_eq!(report.rejected_series[0].id, "AAA");
        assert_eq!(report.rejected_series[0].first_gap_row, 3);
    }

    #[test]
    fn date_mismatch_joins_to_intersection() {
        let r = write_tmp(
            "returns_dates.csv",
            "date,AAA\n2020-01-01,0.01\n2020-01-02,0.02\n2020-01-04,0.03\n",
        );
        let f = write_tmp(
            "factors_dates.csv",
            "date,rf,mkt\n2020-01-01,0.0,0.01\n2020-01-02,0.0,0.01\n2020-01-03,0.0,0.01\n",
        );
        let (ret, _, report) = load_panels(&r, &f).unwrap();
        assert_eq!(ret.dates, vec!["2020-01-01", "2020-01-02"]);
        assert_eq!(report.dropped_return_dates, 1);
        assert_eq!(report.dropped_factor_dates, 1);
    }

    fn synthetic_panels(t_len: usize, slope: f64, noise: impl Fn(usize) -> f64) -> (ReturnsPanel, FactorSeries) {
        let dates: Vec<String> = (0..t_len).map(|t| format!("2020-{:02}-{:02}", 1 + t / 28, 1 + t % 28)).collect();
        let factor: Vec<f64> = (0..t_len).map(|t| ((t * 37 % 19) as f64 - 9.0) / 19.0).collect();
        let rf = vec![0.0005; t_len];
        let values: Vec<f64> =
            (0..t_len).map(|t| slope * factor[t] + rf[t] + noise(t)).collect();
        (
            ReturnsPanel { dates: dates.clone(), ids: vec!["S".into()], values, risk_free: rf },
            FactorSeries { dates, names: vec!["f1".into()], values: factor },
        )
    }

    #[test]
    fn perfect_fit_gives_zero_residuals() {
        let (ret, fac) = synthetic_panels(40, 2.0, |_| 0.0);
        let res = ols_residuals(&ret, &fac, "2020-02-03").unwrap();
        assert!(res.values.iter().all(|&v| v.abs() < 1e-12));
    }

    #[test]
    fn no_factors_demean_excess_returns() {
        // K = 0 factor columns: the regression is intercept-only, so
        // residuals are demeaned excess returns
        let (mut ret, mut fac) = synthetic_panels(30, 0.0, |t| (t as f64) / 30.0);
        fac.names.clear();
        fac.values.clear();
        ret.values = (0..30).map(|t| 0.0005 + t as f64 / 30.0).collect();
        let res = ols_residuals(&ret, &fac, "9999-12-31").unwrap();
        let mean = (0..30).map(|t| t as f64 / 30.0).sum::<f64>() / 30.0;
        for t in 0..30 {
            assert!((res.get(0, t) - (t as f64 / 30.0 - mean)).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_factor_column_is_rank_deficient() {
        let (ret, mut fac) = synthetic_panels(30, 0.5, |_| 0.01);
        fac.values.iter_mut().for_each(|v| *v = 0.0);
        let err = ols_residuals(&ret, &fac, "9999-12-31").unwrap_err();
        assert!(matches!(err, GabError::Domain(_)));
    }

    #[test]
    fn residuals_are_orthogonal_to_design_in_window() {
        let (ret, fac) = synthetic_panels(60, 1.3, |t| ((t * 29 % 13) as f64 - 6.0) / 40.0);
        let res = ols_residuals(&ret, &fac, "2020-02-15").unwrap();
        let t_est = estimation_len(&ret.dates, "2020-02-15");
        assert!(t_est > 10);
        let mut dot_one = 0.0;
        let mut dot_f = 0.0;
        for t in 0..t_est {
            dot_one += res.get(0, t);
            dot_f += res.get(0, t) * fac.values[t];
        }
        assert!(dot_one.abs() < 1e-10, "intercept residual {dot_one}");
        assert!(dot_f.abs() < 1e-10, "factor residual {dot_f}");
    }

    #[test]
    fn order_statistic_threshold_flags_minimum_only() {
        // 20 estimation points at level 0.05 → k = 1, only the minimum flags
        let dates: Vec<String> = (0..25).map(|t| format!("2020-01-{:02}", t + 1)).collect();
        let values: Vec<f64> = (0..25).map(|t| ((t * 7 + 3) % 25) as f64).collect();
        let res = ResidualPanel { dates, ids: vec!["S".into()], values };
        let panel = threshold_binary(&res, 0.05, "2020-01-21").unwrap();
        assert_eq!(panel.split_idx, 20);
        let est_flags: u32 = (0..20).map(|t| panel.matrix.get(0, t) as u32).sum();
        // strict inequality: the minimum itself is not below the threshold
        assert_eq!(est_flags, 0);
        let min_pos = (0..20).min_by(|&a, &b| res.get(0, a).total_cmp(&res.get(0, b))).unwrap();
        assert_eq!(res.get(0, min_pos), panel.thresholds[0]);
        // holdout cells below the estimation threshold do flag
        let hold_flags: u32 = (20..25).map(|t| panel.matrix.get(0, t) as u32).sum();
        let expect: u32 =
            (20..25).map(|t| u32::from(res.get(0, t) < panel.thresholds[0])).sum();
        assert_eq!(hold_flags, expect);
    }

    #[test]
    fn in_sample_flag_rate_stays_at_or_below_level() {
        let t_len = 400;
        let dates: Vec<String> =
            (0..t_len).map(|t| format!("2020-{:02}-{:02}", 1 + t / 28, 1 + t % 28)).collect();
        let values: Vec<f64> =
            (0..t_len).map(|t| (((t * 97 + 11) % 401) as f64) / 401.0 - 0.5).collect();
        let res = ResidualPanel { dates: dates.clone(), ids: vec!["S".into()], values };
        let split_date = dates[300].clone();
        let panel = threshold_binary(&res, 0.05, &split_date).unwrap();
        let t_est = panel.split_idx;
        let rate: f64 =
            (0..t_est).map(|t| panel.matrix.get(0, t) as u32 as f64).sum::<f64>() / t_est as f64;
        assert!(rate <= 0.05);
        assert!(rate >= 0.05 - 1.5 / t_est as f64);
    }

    #[test]
    fn split_boundaries() {
        let dates: Vec<String> = (1..=5).map(|d| format!("2020-01-0{d}")).collect();
        let res = ResidualPanel {
            dates,
            ids: vec!["S".into()],
            values: vec![5.0, 1.0, 4.0, 2.0, 3.0],
        };
        let panel = threshold_binary(&res, 0.4, "2020-01-04").unwrap();
        // split at the last date: holdout empty
        let (est, hold) = split(&panel, "2020-01-05").unwrap();
        assert_eq!(est.dates.len(), 4);
        assert_eq!(hold.dates.len(), 0);
        // split at the first date: empty estimation is an error
        assert!(split(&panel, "2020-01-01").is_err());
        // interior split drops the boundary row from both windows
        let (est, hold) = split(&panel, "2020-01-03").unwrap();
        assert_eq!(est.dates.len(), 2);
        assert_eq!(hold.dates, vec!["2020-01-04", "2020-01-05"]);
    }

    #[test]
    fn thresholds_ignore_holdout_extension() {
        let dates: Vec<String> = (0..30).map(|t| format!("2021-01-{:02}", t + 1)).collect();
        let values: Vec<f64> = (0..30).map(|t| ((t * 13 + 5) % 29) as f64 / 29.0).collect();
        let res = ResidualPanel { dates: dates.clone(), ids: vec!["S".into()], values: values.clone() };
        let full = threshold_binary(&res, 0.1, "2021-01-21").unwrap();
        // extend the holdout with more rows; thresholds must not move
        let mut dates2 = dates;
        let mut values2 = values;
        for t in 30..40 {
            dates2.push(format!("2021-02-{:02}", t - 29));
            values2.push(-10.0); // extreme values that would shift any leaky quantile
        }
        let res2 = ResidualPanel { dates: dates2, ids: vec!["S".into()], values: values2 };
        let extended = threshold_binary(&res2, 0.1, "2021-01-21").unwrap();
        assert_eq!(full.thresholds, extended.thresholds);
        for t in 0..30 {
            assert_eq!(full.matrix.get(0, t), extended.matrix.get(0, t));
        }
    }

    #[test]
    fn binary_panel_invariant_under_monotone_transforms() {
        let dates: Vec<String> =
            (0..50).map(|t| format!("2022-{:02}-{:02}", 1 + t / 28, 1 + t % 28)).collect();
        let values: Vec<f64> =
            (0..50).map(|t| (((t * 31 + 7) % 53) as f64 - 26.0) / 10.0).collect();
        let res = ResidualPanel { dates: dates.clone(), ids: vec!["S".into()], values: values.clone() };
        let base = threshold_binary(&res, 0.1, &dates[40]).unwrap();
        let transforms: [fn(f64) -> f64; 3] =
            [|x| x.exp(), |x| 2.0 * x + 1.0, |x| x.powi(3)];
        for transform in transforms {
            let res_t = ResidualPanel {
                dates: dates.clone(),
                ids: vec!["S".into()],
                values: values.iter().map(|&v| transform(v)).collect(),
            };
            let tr = threshold_binary(&res_t, 0.1, &dates[40]).unwrap();
            for t in 0..50 {
                assert_eq!(base.matrix.get(0, t), tr.matrix.get(0, t));
            }
        }
    }

    #[test]
    fn csv_output_is_deterministic_and_round_trips() {
        let dates: Vec<String> = (1..=6).map(|d| format!("2020-02-0{d}")).collect();
        let res = ResidualPanel {
            dates,
            ids: vec!["A".into(), "B".into()],
            values: vec![1.0, -3.0, 2.0, 0.5, -1.0, 4.0, 0.0, -2.0, 3.0, 1.5, -0.5, 2.5],
        };
        let panel = threshold_binary(&res, 0.34, "2020-02-05").unwrap();
        let mut buf1 = Vec::new();
        panel.write_csv(&mut buf1).unwrap();
        let mut buf2 = Vec::new();
        panel.write_csv(&mut buf2).unwrap();
        assert_eq!(buf1, buf2);
        let path = write_tmp("panel_rt.csv", std::str::from_utf8(&buf1).unwrap());
        let (dates, ids, matrix) = read_binary_panel_csv(&path).unwrap();
        assert_eq!(dates, panel.dates);
        assert_eq!(ids, panel.ids);
        assert_eq!(matrix, panel.matrix);
    }
}
