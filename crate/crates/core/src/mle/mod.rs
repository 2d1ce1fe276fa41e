//! Binary maximum likelihood.
//!
//! The conditional log-likelihood of a panel under a parameterized update
//! map g is
//!
//! ```text
//!   Q_T(θ) = Σ_t Σ_i [ y_{i,t} log g_{i,t,θ} + (1−y_{i,t}) log(1−g_{i,t,θ}) ],
//! ```
//!
//! with p_t filtered recursively under θ. The analytic score propagates
//! ∂g/∂θ through the filter, and the Fisher information is
//!
//! ```text
//!   H = (1/T) Σ_t Σ_i (∂g/∂θ)(∂g/∂θ)ᵀ / (g(1−g)),
//! ```
//!
//! whose inverse (over T) gives Wald standard errors. Fitting runs BFGS in
//! unconstrained stick-breaking coordinates with multiple starts; families
//! whose likelihood separates across series (everything driven by observed
//! aggregates) are fit block by block.

pub mod filter;
pub mod forecast;
pub mod optimizer;
pub mod transform;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{GabError, Result};
use crate::model::{
    Family, InteractiveParams, Lags, LinearParams, LogitParams,
    ModelSpec, MultiLagParams,
};
use crate::panel::BinaryMatrix;
use crate::rng::{CounterRng, Domain};
use filter::{walk_block, FilterInit, PanelAux, DEFAULT_PROB_FLOOR};
use optimizer::{maximize, OptimOptions};

/// Estimable families. The model lag convention carries over: `s`
/// probability lags, `q` outcome lags.
#[derive(Debug, Clone, PartialEq)]
pub enum FitFamily {
    /// Single pooled success probability ω.
    Constant,
    /// Per-series linear GAB(s, q).
    Linear { s: usize, q: usize },
    /// Per-series logit GAB(1,1) (unconstrained parameters).
    Logit11,
    /// One shared probability driven by the cross-sectional mean.
    Exchangeable,
    /// Per-series dynamics with the equal-weight aggregate; `include_alpha`
    /// false drops the own-lag term (the aggregation-consistent variant).
    Interactive { include_alpha: bool },
    /// Per-series dynamics with a network-weighted aggregate.
    Network { weights: Vec<Vec<f64>>, include_alpha: bool },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TransformKind {
    StickBreaking,
    Identity,
}

impl TransformKind {
    fn constrain(self, z: &[f64], theta: &mut [f64]) {
        match self {
            TransformKind::StickBreaking => transform::simplex_from_unconstrained(z, theta),
            TransformKind::Identity => theta.copy_from_slice(z),
        }
    }

    fn unconstrain(self, theta: &[f64], z: &mut [f64]) -> Result<()> {
        match self {
            TransformKind::StickBreaking => transform::simplex_to_unconstrained(theta, z),
            TransformKind::Identity => {
                z.copy_from_slice(theta);
                Ok(())
            }
        }
    }

    fn chain_gradient(self, z: &[f64], theta: &[f64], g_theta: &[f64], g_z: &mut [f64]) {
        match self {
            TransformKind::StickBreaking => {
                transform::simplex_chain_gradient(z, theta, g_theta, g_z)
            }
            TransformKind::Identity => g_z.copy_from_slice(g_theta),
        }
    }
}

impl FitFamily {
    pub fn name(&self) -> String {
        match self {
            FitFamily::Constant => "Constant".into(),
            FitFamily::Linear { s, q } => format!("Linear({s},{q})"),
            FitFamily::Logit11 => "Logit11".into(),
            FitFamily::Exchangeable => "Exchangeable".into(),
            FitFamily::Interactive { include_alpha } => {
                if *include_alpha { "Interactive".into() } else { "InteractiveNoAlpha".into() }
            }
            FitFamily::Network { include_alpha, .. } => {
                if *include_alpha { "Network".into() } else { "NetworkNoAlpha".into() }
            }
        }
    }

    fn shared_probability(&self) -> bool {
        matches!(self, FitFamily::Constant | FitFamily::Exchangeable)
    }

    pub fn n_blocks(&self, n_series: usize) -> usize {
        if self.shared_probability() { 1 } else { n_series }
    }

    pub fn block_len(&self) -> usize {
        match self {
            FitFamily::Constant => 1,
            FitFamily::Linear { s, q } => 1 + q + s,
            FitFamily::Logit11 | FitFamily::Exchangeable => 3,
            FitFamily::Interactive { include_alpha }
            | FitFamily::Network { include_alpha, .. } => 3 + usize::from(*include_alpha),
        }
    }

    pub fn param_len(&self, n_series: usize) -> usize {
        self.n_blocks(n_series) * self.block_len()
    }

    /// Outcome lags consumed as presample.
    fn presample(&self) -> usize {
        match self {
            FitFamily::Constant => 0,
            FitFamily::Linear { q, .. } => *q,
            _ => 1,
        }
    }

    fn transform(&self) -> TransformKind {
        if matches!(self, FitFamily::Logit11) {
            TransformKind::Identity
        } else {
            TransformKind::StickBreaking
        }
    }

    fn block_labels(&self, series: Option<usize>) -> Vec<String> {
        let tag = |base: &str| match series {
            Some(i) => format!("{base}_{i}"),
            None => base.to_string(),
        };
        match self {
            FitFamily::Constant => vec![tag("omega")],
            FitFamily::Linear { s, q } => {
                let mut v = vec![tag("omega")];
                v.extend((1..=*q).map(|j| format!("{}[{j}]", tag("alpha"))));
                v.extend((1..=*s).map(|j| format!("{}[{j}]", tag("beta"))));
                v
            }
            FitFamily::Logit11 => vec![tag("omega"), tag("alpha"), tag("beta")],
            FitFamily::Exchangeable => vec![tag("omega"), tag("gamma"), tag("beta")],
            FitFamily::Interactive { include_alpha }
            | FitFamily::Network { include_alpha, .. } => {
                let mut v = vec![tag("omega")];
                if *include_alpha {
                    v.push(tag("alpha"));
                }
                v.push(tag("gamma"));
                v.push(tag("beta"));
                v
            }
        }
    }

    pub fn labels(&self, n_series: usize) -> Vec<String> {
        if self.shared_probability() {
            self.block_labels(None)
        } else {
            (0..n_series).flat_map(|i| self.block_labels(Some(i))).collect()
        }
    }

    /// Moment-based starting point for one block, strictly interior.
    fn moment_start(&self, aux: &PanelAux, series: usize) -> Vec<f64> {
        let clampi = |p: f64| p.clamp(1e-4, 1.0 - 1e-4);
        match self {
            FitFamily::Constant => vec![clampi(aux.grand_mean)],
            FitFamily::Linear { s, q } => {
                let mu = clampi(aux.series_means[series]);
                let a = 0.10 / *q as f64;
                let b = 0.50 / *s as f64;
                let mut v = vec![mu * 0.4];
                v.extend(std::iter::repeat_n(a, *q));
                v.extend(std::iter::repeat_n(b, *s));
                v
            }
            FitFamily::Logit11 => {
                let mu = clampi(aux.series_means[series]);
                vec![0.5 * transform::logit(mu), 0.2, 0.5]
            }
            FitFamily::Exchangeable => {
                let mu = clampi(aux.grand_mean);
                vec![mu * 0.3, 0.2, 0.5]
            }
            FitFamily::Interactive { include_alpha }
            | FitFamily::Network { include_alpha, .. } => {
                let mu = clampi(aux.series_means[series]);
                if *include_alpha {
                    vec![mu * 0.2, 0.1, 0.2, 0.5]
                } else {
                    vec![mu * 0.25, 0.25, 0.5]
                }
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Point evaluation ops
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, Serialize)]
pub struct LoglikReport {
    pub value: f64,
    /// Number of probability evaluations clipped to [ε, 1−ε].
    pub clip_count: u64,
    /// Time periods entering the likelihood (presample excluded).
    pub n_periods: usize,
    /// Bernoulli cells entering the likelihood.
    pub n_cells: f64,
}

fn check_inputs(family: &FitFamily, theta: &[f64], panel: &BinaryMatrix) -> Result<()> {
    let expect = family.param_len(panel.n_series());
    if theta.len() != expect {
        return Err(GabError::DimensionMismatch(format!(
            "{} needs {expect} parameters for N = {}, got {}",
            family.name(),
            panel.n_series(),
            theta.len()
        )));
    }
    if panel.horizon() <= family.presample() {
        return Err(GabError::Config("panel shorter than the required presample".into()));
    }
    Ok(())
}

/// Conditional log-likelihood at θ (constrained coordinates).
pub fn loglik(
    family: &FitFamily,
    theta: &[f64],
    panel: &BinaryMatrix,
    init: &FilterInit,
) -> Result<LoglikReport> {
    check_inputs(family, theta, panel)?;
    let aux = PanelAux::new(family, panel)?;
    loglik_with_aux(family, theta, panel, &aux, init, DEFAULT_PROB_FLOOR)
}

fn loglik_with_aux(
    family: &FitFamily,
    theta: &[f64],
    panel: &BinaryMatrix,
    aux: &PanelAux,
    init: &FilterInit,
    eps: f64,
) -> Result<LoglikReport> {
    let bl = family.block_len();
    let mut value = 0.0;
    let mut clip_count = 0;
    let mut n_periods = 0;
    let mut n_cells = 0.0;
    for b in 0..family.n_blocks(panel.n_series()) {
        let th = &theta[b * bl..(b + 1) * bl];
        let stats = walk_block(family, b, th, panel, aux, init, eps, &mut |_, o| {
            value += o.successes * o.g.ln() + (o.trials - o.successes) * (1.0 - o.g).ln();
        })?;
        clip_count += stats.clip_count;
        n_periods = stats.n_periods;
        n_cells += stats.n_cells;
    }
    Ok(LoglikReport { value, clip_count, n_periods, n_cells })
}

/// Analytic score ∂Q/∂θ (constrained coordinates).
pub fn score(
    family: &FitFamily,
    theta: &[f64],
    panel: &BinaryMatrix,
    init: &FilterInit,
) -> Result<Vec<f64>> {
    check_inputs(family, theta, panel)?;
    let aux = PanelAux::new(family, panel)?;
    let bl = family.block_len();
    let mut grad = vec![0.0; theta.len()];
    for b in 0..family.n_blocks(panel.n_series()) {
        let th = &theta[b * bl..(b + 1) * bl];
        let gslice = &mut grad[b * bl..(b + 1) * bl];
        walk_block(family, b, th, panel, &aux, init, DEFAULT_PROB_FLOOR, &mut |_, o| {
            let w = o.successes / o.g - (o.trials - o.successes) / (1.0 - o.g);
            for (gk, dk) in gslice.iter_mut().zip(o.dg) {
                *gk += w * dk;
            }
        })?;
    }
    Ok(grad)
}

/// Per-period-averaged Fisher information H; errors with
/// `SingularInformation` when the smallest eigenvalue drops below 1e-12.
pub fn fisher_info(
    family: &FitFamily,
    theta: &[f64],
    panel: &BinaryMatrix,
    init: &FilterInit,
) -> Result<DMatrix<f64>> {
    let (h, _) = fisher_blocks(family, theta, panel, init)?;
    let eig = h.clone().symmetric_eigen();
    let min_eig = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig < 1e-12 {
        return Err(GabError::SingularInformation { min_eigenvalue: min_eig });
    }
    Ok(h)
}

fn fisher_blocks(
    family: &FitFamily,
    theta: &[f64],
    panel: &BinaryMatrix,
    init: &FilterInit,
) -> Result<(DMatrix<f64>, usize)> {
    check_inputs(family, theta, panel)?;
    let aux = PanelAux::new(family, panel)?;
    let bl = family.block_len();
    let m = theta.len();
    let mut h = DMatrix::<f64>::zeros(m, m);
    let mut n_periods = 0;
    for b in 0..family.n_blocks(panel.n_series()) {
        let th = &theta[b * bl..(b + 1) * bl];
        let off = b * bl;
        let stats = walk_block(family, b, th, panel, &aux, init, DEFAULT_PROB_FLOOR, &mut |_, o| {
            let w = o.trials / (o.g * (1.0 - o.g));
            for a in 0..bl {
                for c in a..bl {
                    let v = w * o.dg[a] * o.dg[c];
                    h[(off + a, off + c)] += v;
                    if a != c {
                        h[(off + c, off + a)] += v;
                    }
                }
            }
        })?;
        n_periods = stats.n_periods;
    }
    if n_periods == 0 {
        return Err(GabError::Config("no observations after presample".into()));
    }
    h /= n_periods as f64;
    Ok((h, n_periods))
}

/// Cross-sectional sums Σ_i g_{i,t} of the filtered probabilities, one
/// entry per likelihood period (presample excluded): the in-sample overlay
/// series that pairs with the aggregate intensity filter.
pub fn filtered_sum_path(
    family: &FitFamily,
    theta: &[f64],
    panel: &BinaryMatrix,
    init: &FilterInit,
) -> Result<Vec<(usize, f64)>> {
    check_inputs(family, theta, panel)?;
    let aux = PanelAux::new(family, panel)?;
    let bl = family.block_len();
    let mut sums: std::collections::BTreeMap<usize, f64> = std::collections::BTreeMap::new();
    for b in 0..family.n_blocks(panel.n_series()) {
        let th = &theta[b * bl..(b + 1) * bl];
        walk_block(family, b, th, panel, &aux, init, DEFAULT_PROB_FLOOR, &mut |t, o| {
            *sums.entry(t).or_insert(0.0) += o.g * o.trials;
        })?;
    }
    Ok(sums.into_iter().collect())
}

/// Per-period-averaged outer product of per-period scores, block by block;
/// equals the Fisher information at θ₀ by the martingale property.
pub fn opg_matrix(
    family: &FitFamily,
    theta: &[f64],
    panel: &BinaryMatrix,
    init: &FilterInit,
) -> Result<DMatrix<f64>> {
    check_inputs(family, theta, panel)?;
    let aux = PanelAux::new(family, panel)?;
    let bl = family.block_len();
    let m = theta.len();
    let mut o_mat = DMatrix::<f64>::zeros(m, m);
    let mut n_periods = 0;
    for b in 0..family.n_blocks(panel.n_series()) {
        let th = &theta[b * bl..(b + 1) * bl];
        let off = b * bl;
        let mut st = vec![0.0; bl];
        let stats = walk_block(family, b, th, panel, &aux, init, DEFAULT_PROB_FLOOR, &mut |_, o| {
            let w = o.successes / o.g - (o.trials - o.successes) / (1.0 - o.g);
            for (sk, dk) in st.iter_mut().zip(o.dg) {
                *sk = w * dk;
            }
            for a in 0..bl {
                for c in 0..bl {
                    o_mat[(off + a, off + c)] += st[a] * st[c];
                }
            }
        })?;
        n_periods = stats.n_periods;
    }
    o_mat /= n_periods.max(1) as f64;
    Ok(o_mat)
}

// ---------------------------------------------------------------------------
// Fitting
// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct FitConfig {
    pub starts: usize,
    pub seed: u64,
    pub max_iters: usize,
    pub grad_tol: f64,
    /// Minimum admissible panel length.
    pub min_horizon: usize,
    pub init: FilterInit,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            starts: 5,
            seed: 0x5eed,
            max_iters: 400,
            grad_tol: 1e-8,
            min_horizon: 20,
            init: FilterInit::SampleMean,
        }
    }
}

/// Flat estimate with its layout labels.
#[derive(Debug, Clone, Serialize)]
pub struct ParamVector {
    pub values: Vec<f64>,
    pub labels: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub family: String,
    pub n_series: usize,
    pub params: ParamVector,
    pub loglik: f64,
    #[serde(skip)]
    pub fisher: DMatrix<f64>,
    /// √(diag(H⁻¹)/T); NaN where the block information is singular.
    pub std_errors: Vec<f64>,
    pub iterations: usize,
    pub grad_norm: f64,
    pub converged: bool,
    pub clip_count: u64,
    pub n_periods: usize,
    pub starts: usize,
    #[serde(skip)]
    fit_family: Option<FitFamily>,
}

impl FitResult {
    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("fit result serialization cannot fail")
    }

    /// Rebuild a simulation-ready spec from the fitted parameters.
    pub fn to_model_spec(&self) -> Result<ModelSpec> {
        let family = self
            .fit_family
            .as_ref()
            .ok_or_else(|| GabError::Config("fit family not retained".into()))?;
        let v = &self.params.values;
        let n = self.n_series;
        let bl = family.block_len();
        let spec = match family {
            FitFamily::Constant => ModelSpec {
                schema_version: crate::model::SCHEMA_VERSION,
                n_series: n,
                lags: Lags { s: 1, q: 1 },
                family: Family::LinearUnivariate(vec![
                    LinearParams { omega: v[0], alpha: 0.0, beta: 0.0 };
                    n
                ]),
                nonlinearity: None,
                network: None,
            },
            FitFamily::Linear { s, q } => {
                if *s == 1 && *q == 1 {
                    let ps = (0..n)
                        .map(|i| LinearParams {
                            omega: v[i * bl],
                            alpha: v[i * bl + 1],
                            beta: v[i * bl + 2],
                        })
                        .collect();
                    ModelSpec {
                        schema_version: crate::model::SCHEMA_VERSION,
                        n_series: n,
                        lags: Lags { s: 1, q: 1 },
                        family: Family::LinearUnivariate(ps),
                        nonlinearity: None,
                        network: None,
                    }
                } else {
                    let ps = (0..n)
                        .map(|i| MultiLagParams {
                            omega: v[i * bl],
                            alpha: v[i * bl + 1..i * bl + 1 + q].to_vec(),
                            beta: v[i * bl + 1 + q..(i + 1) * bl].to_vec(),
                        })
                        .collect();
                    ModelSpec {
                        schema_version: crate::model::SCHEMA_VERSION,
                        n_series: n,
                        lags: Lags { s: *s, q: *q },
                        family: Family::LinearMultiLag(ps),
                        nonlinearity: None,
                        network: None,
                    }
                }
            }
            FitFamily::Logit11 => {
                let ps = (0..n)
                    .map(|i| LogitParams {
                        omega: v[i * bl],
                        alpha: v[i * bl + 1],
                        beta: v[i * bl + 2],
                    })
                    .collect();
                ModelSpec {
                    schema_version: crate::model::SCHEMA_VERSION,
                    n_series: n,
                    lags: Lags { s: 1, q: 1 },
                    family: Family::Logit11(ps),
                    nonlinearity: None,
                    network: None,
                }
            }
            FitFamily::Exchangeable => ModelSpec::exchangeable(n, v[0], v[1], v[2]),
            FitFamily::Interactive { include_alpha } => {
                let ps = (0..n)
                    .map(|i| interactive_from_block(&v[i * bl..(i + 1) * bl], *include_alpha))
                    .collect();
                ModelSpec::interactive(ps)
            }
            FitFamily::Network { weights, include_alpha } => {
                let ps = (0..n)
                    .map(|i| interactive_from_block(&v[i * bl..(i + 1) * bl], *include_alpha))
                    .collect();
                ModelSpec::network(ps, weights.clone())
            }
        };
        spec.ensure_valid()?;
        Ok(spec)
    }
}

fn interactive_from_block(block: &[f64], include_alpha: bool) -> InteractiveParams {
    if include_alpha {
        InteractiveParams { omega: block[0], alpha: block[1], gamma: block[2], beta: block[3] }
    } else {
        InteractiveParams { omega: block[0], alpha: 0.0, gamma: block[1], beta: block[2] }
    }
}

/// Fit by constrained quasi-Newton with multi-start, exploiting per-series
/// separability where the family allows it.
pub fn fit_mle(family: &FitFamily, panel: &BinaryMatrix, cfg: &FitConfig) -> Result<FitResult> {
    if panel.horizon() < cfg.min_horizon {
        return Err(GabError::Config(format!(
            "panel horizon {} below the configured minimum {}",
            panel.horizon(),
            cfg.min_horizon
        )));
    }
    let n = panel.n_series();
    let bl = family.block_len();
    let n_blocks = family.n_blocks(n);
    if panel.horizon() <= family.presample() {
        return Err(GabError::Config("panel shorter than the required presample".into()));
    }
    let aux = PanelAux::new(family, panel)?;
    let kind = family.transform();
    let opts = OptimOptions { max_iters: cfg.max_iters, grad_tol: cfg.grad_tol };

    let mut theta_full = vec![0.0; family.param_len(n)];
    let mut iterations = 0usize;
    let mut grad_norm: f64 = 0.0;
    let mut total_starts = 0usize;

    for b in 0..n_blocks {
        // start list: moment-based, then seeded random interior points
        let mut starts: Vec<DVector<f64>> = Vec::with_capacity(cfg.starts.max(1));
        let moment = family.moment_start(&aux, b);
        let mut z0 = vec![0.0; bl];
        kind.unconstrain(&moment, &mut z0)
            .map_err(|e| GabError::Config(format!("moment start not interior: {e}")))?;
        starts.push(DVector::from_vec(z0));
        let rng = CounterRng::new(cfg.seed, Domain::FitStart, b as u64);
        for srt in 1..cfg.starts.max(1) {
            let z: Vec<f64> = (0..bl)
                .map(|k| {
                    let u = rng.uniform(k as u64, srt as u64);
                    let span = if kind == TransformKind::Identity && k == bl - 1 { 1.6 } else { 4.0 };
                    span * (u - 0.5)
                })
                .collect();
            starts.push(DVector::from_vec(z));
        }

        let mut theta_buf = vec![0.0; bl];
        let mut gtheta = vec![0.0; bl];
        let mut gz = vec![0.0; bl];
        let mut best: Option<optimizer::OptimOutcome> = None;
        let mut best_any_grad = f64::INFINITY;
        for z0 in starts {
            total_starts += 1;
            let outcome = maximize(
                |z: &DVector<f64>| {
                    kind.constrain(z.as_slice(), &mut theta_buf);
                    let mut ll = 0.0;
                    gtheta.fill(0.0);
                    let walk = walk_block(
                        family,
                        b,
                        &theta_buf,
                        panel,
                        &aux,
                        &cfg.init,
                        DEFAULT_PROB_FLOOR,
                        &mut |_, o| {
                            ll += o.successes * o.g.ln()
                                + (o.trials - o.successes) * (1.0 - o.g).ln();
                            let w = o.successes / o.g - (o.trials - o.successes) / (1.0 - o.g);
                            for (gk, dk) in gtheta.iter_mut().zip(o.dg) {
                                *gk += w * dk;
                            }
                        },
                    );
                    let scale = match &walk {
                        Ok(st) => st.n_cells.max(1.0),
                        Err(_) => 1.0,
                    };
                    if walk.is_err() {
                        return (f64::NEG_INFINITY, DVector::zeros(bl));
                    }
                    kind.chain_gradient(z.as_slice(), &theta_buf, &gtheta, &mut gz);
                    (ll / scale, DVector::from_column_slice(&gz) / scale)
                },
                z0,
                &opts,
            );
            best_any_grad = best_any_grad.min(outcome.grad_norm);
            if outcome.converged
                && best.as_ref().is_none_or(|cur| outcome.value > cur.value)
            {
                best = Some(outcome);
            }
        }
        let Some(win) = best else {
            return Err(GabError::NoConvergence {
                starts: cfg.starts.max(1),
                best_grad_norm: best_any_grad,
            });
        };
        kind.constrain(win.z.as_slice(), &mut theta_buf);
        theta_full[b * bl..(b + 1) * bl].copy_from_slice(&theta_buf);
        iterations = iterations.max(win.iterations);
        grad_norm = grad_norm.max(win.grad_norm);
    }

    // final evaluation at θ̂: likelihood, clip count, information, SEs
    let report = loglik_with_aux(family, &theta_full, panel, &aux, &cfg.init, DEFAULT_PROB_FLOOR)?;
    let (fisher, n_periods) = fisher_blocks(family, &theta_full, panel, &cfg.init)?;
    let mut std_errors = vec![f64::NAN; theta_full.len()];
    for b in 0..n_blocks {
        let block = fisher.view((b * bl, b * bl), (bl, bl)).into_owned();
        if let Some(inv) = block.try_inverse() {
            for k in 0..bl {
                let v = inv[(k, k)] / n_periods as f64;
                std_errors[b * bl + k] = if v >= 0.0 { v.sqrt() } else { f64::NAN };
            }
        }
    }

    Ok(FitResult {
        family: family.name(),
        n_series: n,
        params: ParamVector { values: theta_full, labels: family.labels(n) },
        loglik: report.value,
        fisher,
        std_errors,
        iterations,
        grad_norm,
        converged: true,
        clip_count: report.clip_count,
        n_periods,
        starts: total_starts,
        fit_family: Some(family.clone()),
    })
}
