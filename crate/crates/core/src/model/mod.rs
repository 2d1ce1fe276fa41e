//! Model families, probability updates, and state.
//!
//! A spec pins down the probability-update map g for one of the catalog
//! families:
//!
//! ```text
//!   LinearUnivariate      p_{i,t} = ω_i + α_i y_{i,t-1} + β_i p_{i,t-1}
//!   LinearMultiLag        p_{i,t} = ω_i + Σ_τ α_{i,τ} y_{i,t-τ} + Σ_τ β_{i,τ} p_{i,t-τ}
//!   Logit11               logit(p_{i,t}) = ω_i + α_i y_{i,t-1} + β_i logit(p_{i,t-1})
//!   NonlinearScalar       p_{i,t} = ω_i + α_i y_{i,t-1} + f(p_{i,t-1}),  f from the catalog
//!   Exchangeable          p_t = ω + γ ȳ_{t-1} + β p_{t-1}            (shared across i)
//!   Interactive           p_{i,t} = ω_i + α_i y_{i,t-1} + γ_i ȳ_{t-1} + β_i p_{i,t-1}
//!   Network               p_{i,t} = ω_i + α_i y_{i,t-1} + γ_i (W y_{t-1})_i + β_i p_{i,t-1}
//!   NonlinearInteractive  per-series nonlinear feedback in own lags, cross-sectional
//!                         means, and cross-sectional totals (catalog components)
//! ```
//!
//! where ȳ is the cross-sectional average (the complete graph W_ij = 1/N).
//! Outcome lags run to q, probability lags to s.

pub mod catalog;
pub mod contraction;
pub mod mean;

use serde::{Deserialize, Serialize};

use crate::error::{GabError, Result};
use crate::rng::fnv1a;
use catalog::{AggNonlinearity, MicroNonlinearity, OwnOutcomeNonlinearity, ScalarCurve};

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version_default() -> u32 {
    SCHEMA_VERSION
}

/// Memory of the process: `s` probability lags and `q` outcome lags.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Lags {
    pub s: usize,
    pub q: usize,
}

impl Lags {
    pub fn max(&self) -> usize {
        self.s.max(self.q)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiLagParams {
    pub omega: f64,
    /// Outcome-lag coefficients α_{i,1..q}.
    pub alpha: Vec<f64>,
    /// Probability-lag coefficients β_{i,1..s}.
    pub beta: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogitParams {
    pub omega: f64,
    pub alpha: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NonlinearScalarParams {
    pub omega: f64,
    pub alpha: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExchangeableParams {
    pub omega: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InteractiveParams {
    pub omega: f64,
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
}

/// Coefficients of the nonlinear interactive family. Catalog shapes live in
/// [`NonlinearityConfig::Interactive`]; every coefficient here is already in
/// final (post-scaling) form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonlinearInteractiveParams {
    /// Per-series intercepts (c_i/N under the rare-events scaling).
    pub omega: Vec<f64>,
    /// Per-series multipliers on f_α (a_i/N^κ under the scaling).
    pub alpha_scale: Vec<f64>,
    /// Shared probability-lag coefficients β_τ, τ = 1..s.
    pub beta: Vec<f64>,
    /// Per-series coefficients on the mean-field term f_{γ,i}.
    pub micro_coef: Vec<f64>,
    /// Per-series weights on the aggregate term f_γ (γ_i/N under the scaling).
    pub agg_weight: Vec<f64>,
}

/// Family tag plus its parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", content = "params")]
pub enum Family {
    LinearUnivariate(Vec<LinearParams>),
    LinearMultiLag(Vec<MultiLagParams>),
    Logit11(Vec<LogitParams>),
    NonlinearScalar(Vec<NonlinearScalarParams>),
    Exchangeable(ExchangeableParams),
    Interactive(Vec<InteractiveParams>),
    Network(Vec<InteractiveParams>),
    NonlinearInteractive(NonlinearInteractiveParams),
}

impl Family {
    pub fn name(&self) -> &'static str {
        match self {
            Family::LinearUnivariate(_) => "LinearUnivariate",
            Family::LinearMultiLag(_) => "LinearMultiLag",
            Family::Logit11(_) => "Logit11",
            Family::NonlinearScalar(_) => "NonlinearScalar",
            Family::Exchangeable(_) => "Exchangeable",
            Family::Interactive(_) => "Interactive",
            Family::Network(_) => "Network",
            Family::NonlinearInteractive(_) => "NonlinearInteractive",
        }
    }
}

/// Catalog selection for the nonlinear families.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NonlinearityConfig {
    Scalar(ScalarCurve),
    Interactive {
        f_alpha: OwnOutcomeNonlinearity,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        micro: Option<MicroNonlinearity>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        agg: Option<AggNonlinearity>,
    },
}

/// A fully specified GAB model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    #[serde(default = "schema_version_default")]
    pub schema_version: u32,
    pub n_series: usize,
    pub lags: Lags,
    #[serde(flatten)]
    pub family: Family,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub nonlinearity: Option<NonlinearityConfig>,
    /// Row-stochastic interaction weights, required by the Network family.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub network: Option<Vec<Vec<f64>>>,
}

impl ModelSpec {
    fn base(n_series: usize, lags: Lags, family: Family) -> Self {
        ModelSpec {
            schema_version: SCHEMA_VERSION,
            n_series,
            lags,
            family,
            nonlinearity: None,
            network: None,
        }
    }

    /// Single-series linear model p_t = ω + α y_{t-1} + β p_{t-1}.
    pub fn linear11(omega: f64, alpha: f64, beta: f64) -> Self {
        Self::base(
            1,
            Lags { s: 1, q: 1 },
            Family::LinearUnivariate(vec![LinearParams { omega, alpha, beta }]),
        )
    }

    pub fn exchangeable(n_series: usize, omega: f64, gamma: f64, beta: f64) -> Self {
        Self::base(
            n_series,
            Lags { s: 1, q: 1 },
            Family::Exchangeable(ExchangeableParams { omega, beta, gamma }),
        )
    }

    pub fn interactive(params: Vec<InteractiveParams>) -> Self {
        Self::base(params.len(), Lags { s: 1, q: 1 }, Family::Interactive(params))
    }

    pub fn interactive_homogeneous(
        n_series: usize,
        omega: f64,
        alpha: f64,
        gamma: f64,
        beta: f64,
    ) -> Self {
        Self::interactive(vec![InteractiveParams { omega, alpha, gamma, beta }; n_series])
    }

    pub fn network(params: Vec<InteractiveParams>, weights: Vec<Vec<f64>>) -> Self {
        let mut spec =
            Self::base(params.len(), Lags { s: 1, q: 1 }, Family::Network(params));
        spec.network = Some(weights);
        spec
    }

    pub fn nonlinear_scalar(params: Vec<NonlinearScalarParams>, curve: ScalarCurve) -> Self {
        let n = params.len();
        let mut spec = Self::base(n, Lags { s: 1, q: 1 }, Family::NonlinearScalar(params));
        spec.nonlinearity = Some(NonlinearityConfig::Scalar(curve));
        spec
    }

    pub fn logit11(params: Vec<LogitParams>) -> Self {
        let n = params.len();
        Self::base(n, Lags { s: 1, q: 1 }, Family::Logit11(params))
    }

    pub fn family_name(&self) -> &'static str {
        self.family.name()
    }

    pub fn max_lag(&self) -> usize {
        self.lags.max()
    }

    /// Canonical JSON encoding; the basis for provenance hashes.
    pub fn canonical_json(&self) -> String {
        serde_json::to_string(self).expect("spec serialization cannot fail")
    }

    /// Stable fingerprint of the spec, recorded on simulated trajectories.
    pub fn fingerprint(&self) -> u64 {
        fnv1a(self.canonical_json().as_bytes())
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("spec serialization cannot fail")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Validate and convert into an error if any invariant fails.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = validate_spec(self);
        if report.passed() {
            Ok(())
        } else {
            Err(GabError::InvalidSpec(report.failure_summary()))
        }
    }
}

/// Load an N × N weight matrix from CSV: N rows of N comma-separated values.
pub fn read_weight_matrix_csv(path: &std::path::Path) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (r, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut row = Vec::new();
        for (c, field) in line.split(',').enumerate() {
            let v: f64 = field.trim().parse().map_err(|e| GabError::Parse {
                row: r + 1,
                col: c + 1,
                msg: format!("{e}"),
            })?;
            row.push(v);
        }
        rows.push(row);
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Serialize)]
pub struct InvariantCheck {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Per-invariant pass/fail report. A spec with any failed check is rejected
/// by every downstream operation.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub checks: Vec<InvariantCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failure_summary(&self) -> String {
        self.checks
            .iter()
            .filter(|c| !c.passed)
            .map(|c| format!("{}: {}", c.name, c.detail))
            .collect::<Vec<_>>()
            .join("; ")
    }
}

struct Checker {
    checks: Vec<InvariantCheck>,
}

impl Checker {
    fn new() -> Self {
        Checker { checks: Vec::new() }
    }

    fn push(&mut self, name: &str, passed: bool, detail: String) {
        self.checks.push(InvariantCheck { name: name.to_string(), passed, detail });
    }

    fn simplex(&mut self, name: &str, coeffs: &[(f64, &str)]) {
        let neg: Vec<&str> =
            coeffs.iter().filter(|(v, _)| *v < 0.0).map(|(_, l)| *l).collect();
        let sum: f64 = coeffs.iter().map(|(v, _)| v).sum();
        if !neg.is_empty() {
            self.push(name, false, format!("negative coefficients: {}", neg.join(", ")));
        } else if sum > 1.0 + 1e-12 {
            self.push(name, false, format!("coefficient sum {sum} > 1"));
        } else {
            self.push(name, true, format!("sum {sum} ≤ 1"));
        }
    }
}

const ROW_SUM_TOL: f64 = 1e-12;

/// Check every structural invariant of a spec. Report-based: never errors.
pub fn validate_spec(spec: &ModelSpec) -> ValidationReport {
    let mut ck = Checker::new();
    let n = spec.n_series;
    ck.push("n_series", n >= 1, format!("N = {n}"));
    ck.push(
        "lags",
        spec.lags.s >= 1 && spec.lags.q >= 1,
        format!("s = {}, q = {}", spec.lags.s, spec.lags.q),
    );

    let need_unit_lags = matches!(
        spec.family,
        Family::LinearUnivariate(_)
            | Family::Logit11(_)
            | Family::NonlinearScalar(_)
            | Family::Exchangeable(_)
            | Family::Interactive(_)
            | Family::Network(_)
    );
    if need_unit_lags {
        ck.push(
            "family_lags",
            spec.lags.s == 1 && spec.lags.q == 1,
            format!("{} requires s = q = 1", spec.family_name()),
        );
    }

    match &spec.family {
        Family::LinearUnivariate(ps) => {
            ck.push("param_block", ps.len() == n, format!("{} blocks for N = {n}", ps.len()));
            for (i, p) in ps.iter().enumerate() {
                ck.simplex(
                    &format!("series_{i}_constraint"),
                    &[(p.omega, "omega"), (p.alpha, "alpha"), (p.beta, "beta")],
                );
            }
        }
        Family::LinearMultiLag(ps) => {
            ck.push("param_block", ps.len() == n, format!("{} blocks for N = {n}", ps.len()));
            for (i, p) in ps.iter().enumerate() {
                let lag_ok = p.alpha.len() == spec.lags.q && p.beta.len() == spec.lags.s;
                ck.push(
                    &format!("series_{i}_lag_counts"),
                    lag_ok,
                    format!(
                        "alpha lags {} (need q = {}), beta lags {} (need s = {})",
                        p.alpha.len(),
                        spec.lags.q,
                        p.beta.len(),
                        spec.lags.s
                    ),
                );
                let mut coeffs: Vec<(f64, &str)> = vec![(p.omega, "omega")];
                coeffs.extend(p.alpha.iter().map(|&a| (a, "alpha_j")));
                coeffs.extend(p.beta.iter().map(|&b| (b, "beta_j")));
                ck.simplex(&format!("series_{i}_constraint"), &coeffs);
            }
        }
        Family::Logit11(ps) => {
            // Any real parameters keep logit dynamics in [0,1]; only shape checks.
            ck.push("param_block", ps.len() == n, format!("{} blocks for N = {n}", ps.len()));
            for (i, p) in ps.iter().enumerate() {
                ck.push(
                    &format!("series_{i}_finite"),
                    p.omega.is_finite() && p.alpha.is_finite() && p.beta.is_finite(),
                    "parameters must be finite".into(),
                );
            }
        }
        Family::NonlinearScalar(ps) => {
            ck.push("param_block", ps.len() == n, format!("{} blocks for N = {n}", ps.len()));
            match &spec.nonlinearity {
                Some(NonlinearityConfig::Scalar(curve)) => {
                    for (i, p) in ps.iter().enumerate() {
                        ck.push(
                            &format!("series_{i}_nonneg"),
                            p.omega >= 0.0 && p.alpha >= 0.0,
                            format!("omega {}, alpha {}", p.omega, p.alpha),
                        );
                        // dense grid certification of g ∈ [0,1] over (p, y)
                        let mut ok = true;
                        let mut worst = 0.0f64;
                        for y in [0.0, 1.0] {
                            for j in 0..=2000 {
                                let pp = j as f64 / 2000.0;
                                let g = p.omega + p.alpha * y + curve.eval(pp);
                                if !(-1e-12..=1.0 + 1e-12).contains(&g) {
                                    ok = false;
                                    worst = if g > 1.0 { worst.max(g) } else { worst.min(g) };
                                }
                            }
                        }
                        ck.push(
                            &format!("series_{i}_range_grid"),
                            ok,
                            if ok { "g ∈ [0,1] on grid".into() } else { format!("worst g = {worst}") },
                        );
                    }
                }
                _ => ck.push("nonlinearity", false, "NonlinearScalar needs a scalar curve".into()),
            }
        }
        Family::Exchangeable(p) => {
            ck.simplex(
                "exchangeable_constraint",
                &[(p.omega, "omega"), (p.beta, "beta"), (p.gamma, "gamma")],
            );
        }
        Family::Interactive(ps) | Family::Network(ps) => {
            ck.push("param_block", ps.len() == n, format!("{} blocks for N = {n}", ps.len()));
            for (i, p) in ps.iter().enumerate() {
                ck.simplex(
                    &format!("series_{i}_constraint"),
                    &[(p.omega, "omega"), (p.alpha, "alpha"), (p.gamma, "gamma"), (p.beta, "beta")],
                );
            }
            if matches!(spec.family, Family::Network(_)) {
                match &spec.network {
                    Some(w) => {
                        let square = w.len() == n && w.iter().all(|r| r.len() == n);
                        ck.push("network_shape", square, format!("{}×? for N = {n}", w.len()));
                        if square {
                            let nonneg = w.iter().flatten().all(|&v| v >= 0.0);
                            ck.push("network_nonneg", nonneg, "entries must be ≥ 0".into());
                            let mut worst: f64 = 0.0;
                            for row in w {
                                let sum: f64 = row.iter().sum();
                                worst = worst.max((sum - 1.0).abs());
                            }
                            ck.push(
                                "network_row_stochastic",
                                worst <= ROW_SUM_TOL,
                                format!("max |row sum − 1| = {worst:.3e}"),
                            );
                        }
                    }
                    None => ck.push("network_shape", false, "Network family needs W".into()),
                }
            }
        }
        Family::NonlinearInteractive(p) => {
            let s = spec.lags.s;
            ck.push(
                "family_lags",
                spec.lags.q == s,
                format!("NonlinearInteractive requires q = s, got q = {}", spec.lags.q),
            );
            let lens_ok = p.omega.len() == n
                && p.alpha_scale.len() == n
                && p.micro_coef.len() == n
                && p.agg_weight.len() == n
                && p.beta.len() == s;
            ck.push("param_block", lens_ok, "per-series blocks and β lags must match N, s".into());
            let nonneg = p
                .omega
                .iter()
                .chain(&p.alpha_scale)
                .chain(&p.beta)
                .chain(&p.micro_coef)
                .chain(&p.agg_weight)
                .all(|&v| v >= 0.0);
            ck.push("nonneg", nonneg, "all coefficients must be ≥ 0".into());
            match &spec.nonlinearity {
                Some(NonlinearityConfig::Interactive { f_alpha, micro, agg }) => {
                    ck.push(
                        "f_alpha",
                        f_alpha.validate(s).is_ok(),
                        "own-outcome catalog shape".into(),
                    );
                    if let Some(a) = agg {
                        ck.push("f_agg", a.validate(s).is_ok(), "aggregate catalog shape".into());
                    }
                    if lens_ok && nonneg {
                        let beta_sum: f64 = p.beta.iter().sum();
                        let fa_max = f_alpha.upper_bound();
                        let micro_max = micro.map_or(0.0, |m| m.upper_bound());
                        let agg_cap = n as f64; // each total argument is at most N
                        let agg_max = agg.as_ref().map_or(0.0, |a| a.upper_bound(s, agg_cap));
                        let mut worst = f64::NEG_INFINITY;
                        for i in 0..n {
                            let bound = p.omega[i]
                                + p.alpha_scale[i] * fa_max
                                + beta_sum
                                + p.micro_coef[i] * micro_max
                                + p.agg_weight[i] * agg_max;
                            worst = worst.max(bound);
                        }
                        ck.push(
                            "range_bound",
                            worst <= 1.0 + 1e-12,
                            format!("worst-case p bound {worst}"),
                        );
                    }
                }
                _ => ck.push(
                    "nonlinearity",
                    false,
                    "NonlinearInteractive needs interactive catalog components".into(),
                ),
            }
        }
    }

    // Nonlinearity/network fields must not appear on families that ignore them.
    let expects_nonlinearity =
        matches!(spec.family, Family::NonlinearScalar(_) | Family::NonlinearInteractive(_));
    if spec.nonlinearity.is_some() && !expects_nonlinearity {
        ck.push("nonlinearity", false, format!("{} takes no nonlinearity", spec.family_name()));
    }
    if spec.network.is_some() && !matches!(spec.family, Family::Network(_)) {
        ck.push("network", false, format!("{} takes no W", spec.family_name()));
    }

    ValidationReport { checks: ck.checks }
}

// ---------------------------------------------------------------------------
// Panel state
// ---------------------------------------------------------------------------

/// Ring buffers holding exactly the last `s` probability vectors and last
/// `q` outcome vectors, newest first.
#[derive(Debug, Clone)]
pub struct PanelState {
    n: usize,
    s: usize,
    q: usize,
    p: Vec<f64>,
    y: Vec<f64>,
    head_p: usize,
    head_q: usize,
}

impl PanelState {
    /// Build a full state from lag vectors ordered newest first
    /// (`p_lags[0]` is p_{t-1}).
    pub fn new_full(p_lags: &[Vec<f64>], y_lags: &[Vec<f64>]) -> Result<Self> {
        let s = p_lags.len();
        let q = y_lags.len();
        if s == 0 || q == 0 {
            return Err(GabError::DimensionMismatch("state rings must be full".into()));
        }
        let n = p_lags[0].len();
        if p_lags.iter().any(|v| v.len() != n) || y_lags.iter().any(|v| v.len() != n) {
            return Err(GabError::DimensionMismatch("ragged state vectors".into()));
        }
        for v in p_lags {
            if v.iter().any(|&x| !(0.0..=1.0).contains(&x)) {
                return Err(GabError::Domain("probability lag outside [0,1]".into()));
            }
        }
        for v in y_lags {
            if v.iter().any(|&x| x != 0.0 && x != 1.0) {
                return Err(GabError::Domain("outcome lag not in {0,1}".into()));
            }
        }
        let mut p = Vec::with_capacity(s * n);
        for v in p_lags {
            p.extend_from_slice(v);
        }
        let mut y = Vec::with_capacity(q * n);
        for v in y_lags {
            y.extend_from_slice(v);
        }
        Ok(PanelState { n, s, q, p, y, head_p: 0, head_q: 0 })
    }

    #[inline]
    pub fn n_series(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn s(&self) -> usize {
        self.s
    }

    #[inline]
    pub fn q(&self) -> usize {
        self.q
    }

    /// Probability vector at lag `tau` ∈ 1..=s.
    #[inline]
    pub fn p_lag(&self, tau: usize) -> &[f64] {
        debug_assert!(1 <= tau && tau <= self.s);
        let slot = (self.head_p + tau - 1) % self.s;
        &self.p[slot * self.n..(slot + 1) * self.n]
    }

    /// Outcome vector at lag `tau` ∈ 1..=q (entries are 0.0 or 1.0).
    #[inline]
    pub fn y_lag(&self, tau: usize) -> &[f64] {
        debug_assert!(1 <= tau && tau <= self.q);
        let slot = (self.head_q + tau - 1) % self.q;
        &self.y[slot * self.n..(slot + 1) * self.n]
    }

    /// Advance one period: the pushed vectors become lag 1.
    pub fn push(&mut self, p_new: &[f64], y_new: &[f64]) {
        debug_assert_eq!(p_new.len(), self.n);
        debug_assert_eq!(y_new.len(), self.n);
        self.head_p = (self.head_p + self.s - 1) % self.s;
        self.p[self.head_p * self.n..(self.head_p + 1) * self.n].copy_from_slice(p_new);
        self.head_q = (self.head_q + self.q - 1) % self.q;
        self.y[self.head_q * self.n..(self.head_q + 1) * self.n].copy_from_slice(y_new);
    }
}

// ---------------------------------------------------------------------------
// Probability update
// ---------------------------------------------------------------------------

#[inline]
pub(crate) fn interactive_step(p: &InteractiveParams, y_own: f64, agg: f64, p_own: f64) -> f64 {
    p.omega + p.alpha * y_own + p.gamma * agg + p.beta * p_own
}

#[inline]
pub(crate) fn logit_step(p: &LogitParams, y_own: f64, p_own: f64) -> f64 {
    // Direct form 1/(1 + e^{-ω-αy}((1-p)/p)^β). IEEE arithmetic extends it
    // continuously to the boundary: for β > 0, p ∈ {0,1} is absorbing.
    let odds = (1.0 - p_own) / p_own;
    1.0 / (1.0 + (-p.omega - p.alpha * y_own).exp() * odds.powf(p.beta))
}

/// Floating-point dust tolerance: valid specs keep p in [0,1] exactly in
/// real arithmetic; excursions beyond this are treated as domain errors.
const RANGE_DUST: f64 = 1e-9;

fn clamp_unit(name: &str, v: f64) -> Result<f64> {
    if (-RANGE_DUST..=1.0 + RANGE_DUST).contains(&v) {
        Ok(v.clamp(0.0, 1.0))
    } else {
        Err(GabError::Domain(format!("{name} produced probability {v} outside [0,1]")))
    }
}

/// Evaluate the probability-update map g for a validated spec on a full
/// state, writing the next probability vector into `out`.
pub fn eval_g_into(spec: &ModelSpec, state: &PanelState, out: &mut [f64]) -> Result<()> {
    let n = spec.n_series;
    if state.n_series() != n || out.len() != n {
        return Err(GabError::DimensionMismatch("state/output size vs spec".into()));
    }
    if state.s() != spec.lags.s || state.q() != spec.lags.q {
        return Err(GabError::DimensionMismatch("state rings must match spec lags".into()));
    }
    match &spec.family {
        Family::LinearUnivariate(ps) => {
            let p1 = state.p_lag(1);
            let y1 = state.y_lag(1);
            for i in 0..n {
                out[i] = clamp_unit(
                    "LinearUnivariate",
                    ps[i].omega + ps[i].alpha * y1[i] + ps[i].beta * p1[i],
                )?;
            }
        }
        Family::LinearMultiLag(ps) => {
            for i in 0..n {
                let mut v = ps[i].omega;
                for (tau, &a) in ps[i].alpha.iter().enumerate() {
                    v += a * state.y_lag(tau + 1)[i];
                }
                for (tau, &b) in ps[i].beta.iter().enumerate() {
                    v += b * state.p_lag(tau + 1)[i];
                }
                out[i] = clamp_unit("LinearMultiLag", v)?;
            }
        }
        Family::Logit11(ps) => {
            let p1 = state.p_lag(1);
            let y1 = state.y_lag(1);
            for i in 0..n {
                out[i] = logit_step(&ps[i], y1[i], p1[i]);
            }
        }
        Family::NonlinearScalar(ps) => {
            let Some(NonlinearityConfig::Scalar(curve)) = &spec.nonlinearity else {
                return Err(GabError::InvalidSpec("missing scalar curve".into()));
            };
            let p1 = state.p_lag(1);
            let y1 = state.y_lag(1);
            for i in 0..n {
                let v = ps[i].omega + ps[i].alpha * y1[i] + curve.eval(p1[i]);
                out[i] = clamp_unit("NonlinearScalar", v)?;
            }
        }
        Family::Exchangeable(p) => {
            let ybar = mean(state.y_lag(1));
            let shared =
                clamp_unit("Exchangeable", p.omega + p.gamma * ybar + p.beta * state.p_lag(1)[0])?;
            out.fill(shared);
        }
        Family::Interactive(ps) => {
            let ybar = mean(state.y_lag(1));
            let p1 = state.p_lag(1);
            let y1 = state.y_lag(1);
            for i in 0..n {
                out[i] = clamp_unit("Interactive", interactive_step(&ps[i], y1[i], ybar, p1[i]))?;
            }
        }
        Family::Network(ps) => {
            let w = spec
                .network
                .as_ref()
                .ok_or_else(|| GabError::InvalidSpec("Network family needs W".into()))?;
            let p1 = state.p_lag(1);
            let y1 = state.y_lag(1);
            for i in 0..n {
                let mut wy = 0.0;
                for (j, &wij) in w[i].iter().enumerate() {
                    if wij != 0.0 {
                        wy += wij * y1[j];
                    }
                }
                out[i] = clamp_unit("Network", interactive_step(&ps[i], y1[i], wy, p1[i]))?;
            }
        }
        Family::NonlinearInteractive(p) => {
            let Some(NonlinearityConfig::Interactive { f_alpha, micro, agg }) = &spec.nonlinearity
            else {
                return Err(GabError::InvalidSpec("missing interactive catalog".into()));
            };
            let s = spec.lags.s;
            let mut y_sums = vec![0.0; s];
            let mut p_sums = vec![0.0; s];
            for tau in 1..=s {
                y_sums[tau - 1] = state.y_lag(tau).iter().sum();
                p_sums[tau - 1] = state.p_lag(tau).iter().sum();
            }
            let mut means = Vec::with_capacity(2 * s);
            means.extend(y_sums.iter().map(|v| v / n as f64));
            means.extend(p_sums.iter().map(|v| v / n as f64));
            let micro_val = micro.map_or(0.0, |m| m.eval(&means));
            let agg_val = agg.as_ref().map_or(0.0, |a| a.eval(&y_sums, &p_sums));
            let mut own = vec![0.0; s];
            for i in 0..n {
                for tau in 1..=s {
                    own[tau - 1] = state.y_lag(tau)[i];
                }
                let mut v = p.omega[i] + p.alpha_scale[i] * f_alpha.eval(&own);
                for (tau, &b) in p.beta.iter().enumerate() {
                    v += b * state.p_lag(tau + 1)[i];
                }
                v += p.micro_coef[i] * micro_val + p.agg_weight[i] * agg_val;
                out[i] = clamp_unit("NonlinearInteractive", v)?;
            }
        }
    }
    Ok(())
}

/// Allocating wrapper around [`eval_g_into`].
pub fn eval_g(spec: &ModelSpec, state: &PanelState) -> Result<Vec<f64>> {
    let mut out = vec![0.0; spec.n_series];
    eval_g_into(spec, state, &mut out)?;
    Ok(out)
}

#[inline]
pub(crate) fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
