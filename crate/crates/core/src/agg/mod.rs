//! Rare-events scaling experiments.
//!
//! Intercepts scale as ω_i = c_i/N and own-outcome feedback as
//! α_i = a_i/N^κ, so individual success probabilities vanish while the
//! aggregate count X_t stays O(1). Along an N grid the experiments track
//! how closely the panel's aggregate matches its Poisson-autoregression
//! limit: exact conditional TV distances to the matched Poisson,
//! mean/variance targets for Σ_i p_{i,t}, conditional dispersion, PIT
//! uniformity, and the gap between Σ_i p_{i,t} and the limiting intensity
//! filter λ_t.

pub mod network;
pub mod pmf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{GabError, Result};
use crate::model::{InteractiveParams, ModelSpec};
use crate::rng::{CounterRng, Domain};
use crate::sim::{simulate_replicate, InitPolicy, SimConfig};
use network::{build_regular_network, log_degree};
use pmf::poisson_tv_distance;

/// Per-series coefficient rules with a well-defined N → ∞ average.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CoefRule {
    Constant(f64),
    /// c_i = lo + (hi − lo)·i/(N−1); limit mean (lo + hi)/2.
    LinearRange { lo: f64, hi: f64 },
}

impl CoefRule {
    pub fn value(&self, i: usize, n: usize) -> f64 {
        match self {
            CoefRule::Constant(v) => *v,
            CoefRule::LinearRange { lo, hi } => {
                if n <= 1 {
                    0.5 * (lo + hi)
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            }
        }
    }

    pub fn limit_mean(&self) -> f64 {
        match self {
            CoefRule::Constant(v) => *v,
            CoefRule::LinearRange { lo, hi } => 0.5 * (lo + hi),
        }
    }

    pub fn max(&self) -> f64 {
        match self {
            CoefRule::Constant(v) => *v,
            CoefRule::LinearRange { lo, hi } => lo.max(*hi),
        }
    }
}

/// Initial probability rules satisfying the vanishing-maximum condition.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum InitRule {
    /// p_{i,0} = r/N for all i.
    ConstantOverN { r: f64 },
    /// p_{i,0} = r_i/N with r_i i.i.d. uniform on [lo, hi].
    UniformOverN { lo: f64, hi: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RareEventScaling {
    pub n_grid: Vec<usize>,
    pub kappa: f64,
    pub c: CoefRule,
    pub a: CoefRule,
    pub beta: f64,
    pub gamma: CoefRule,
    pub init: InitRule,
}

impl RareEventScaling {
    /// The benchmark configuration: c_i = 0.25, a_i = 0.5 (κ = 1), β = 0.6,
    /// γ = 0.2, initialized at the stationary per-series mean (25/19)/N.
    pub fn benchmark(n_grid: Vec<usize>) -> Self {
        RareEventScaling {
            n_grid,
            kappa: 1.0,
            c: CoefRule::Constant(0.25),
            a: CoefRule::Constant(0.5),
            beta: 0.6,
            gamma: CoefRule::Constant(0.2),
            init: InitRule::ConstantOverN { r: 50.0 / 38.0 },
        }
    }

    pub fn limit_params(&self) -> (f64, f64, f64) {
        (self.c.limit_mean(), self.gamma.limit_mean(), self.beta)
    }
}

fn scaled_params(scaling: &RareEventScaling, n: usize) -> Vec<InteractiveParams> {
    let nf = n as f64;
    let a_scale = nf.powf(scaling.kappa);
    (0..n)
        .map(|i| InteractiveParams {
            omega: scaling.c.value(i, n) / nf,
            alpha: scaling.a.value(i, n) / a_scale,
            gamma: scaling.gamma.value(i, n),
            beta: scaling.beta,
        })
        .collect()
}

/// Interactive spec at cross-section size `n` under the scaling; errors
/// when the per-series constraint fails, reporting which grid sizes are
/// feasible.
pub fn make_rare_event_spec(scaling: &RareEventScaling, n: usize) -> Result<ModelSpec> {
    let spec = ModelSpec::interactive(scaled_params(scaling, n));
    let report = crate::model::validate_spec(&spec);
    if report.passed() {
        return Ok(spec);
    }
    let feasible: Vec<usize> = scaling
        .n_grid
        .iter()
        .copied()
        .filter(|&m| crate::model::validate_spec(&ModelSpec::interactive(scaled_params(scaling, m))).passed())
        .collect();
    Err(GabError::InvalidSpec(format!(
        "scaling infeasible at N = {n} ({}); feasible grid sizes: {feasible:?}",
        report.failure_summary()
    )))
}

/// Network variant of the scaled spec (homogeneous γ required).
pub fn make_rare_event_network_spec(
    scaling: &RareEventScaling,
    n: usize,
    weights: Vec<Vec<f64>>,
) -> Result<ModelSpec> {
    let CoefRule::Constant(_) = scaling.gamma else {
        return Err(GabError::Config("network limit experiments need homogeneous γ".into()));
    };
    let spec = ModelSpec::network(scaled_params(scaling, n), weights);
    spec.ensure_valid()?;
    Ok(spec)
}

fn initial_probabilities(init: &InitRule, n: usize, seed: u64, rep: u64) -> Vec<f64> {
    match init {
        InitRule::ConstantOverN { r } => vec![r / n as f64; n],
        InitRule::UniformOverN { lo, hi } => {
            let rng = CounterRng::new(seed, Domain::InitProb, rep);
            (0..n)
                .map(|i| {
                    let u = rng.uniform(i as u64, 0);
                    (lo + (hi - lo) * u) / n as f64
                })
                .collect()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitExperimentConfig {
    pub horizon: usize,
    pub reps: usize,
    pub burn_in: usize,
    /// TV/PIT sampling points per replication (evenly strided in t).
    pub tv_samples_per_rep: usize,
    pub seed: u64,
}

impl Default for LimitExperimentConfig {
    fn default() -> Self {
        LimitExperimentConfig {
            horizon: 2_000,
            reps: 200,
            burn_in: 1_000,
            tv_samples_per_rep: 10,
            seed: 0xa66,
        }
    }
}

/// Per-N convergence diagnostics toward the Poisson-autoregression limit.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct LimitDiagnostics {
    pub n: usize,
    pub e_x: f64,
    pub var_x: f64,
    pub e_sum_p: f64,
    pub var_sum_p: f64,
    /// Largest individual probability seen in any replication.
    pub max_p: f64,
    /// Mean exact TV(PoissonBinomial(p_t), Poisson(Σp_t)) over sampled t.
    pub tv_to_poisson: f64,
    /// Pooled E[(X_t − Σp_t)²] / E[Σp_t]; → 1 under the Poisson limit.
    pub cond_dispersion: f64,
    /// Kolmogorov distance of the randomized PIT sample from uniform.
    pub pit_ks: f64,
    /// Mean |λ_t − Σ_i p_{i,t}| for the limiting filter run with the true
    /// limit parameters.
    pub lambda_gap: f64,
}

/// Long-format CSV: one row per N per statistic.
pub fn write_diagnostics_csv<W: std::io::Write>(
    rows: &[LimitDiagnostics],
    mut w: W,
) -> Result<()> {
    writeln!(w, "n,statistic,value")?;
    for d in rows {
        for (name, value) in [
            ("e_x", d.e_x),
            ("var_x", d.var_x),
            ("e_sum_p", d.e_sum_p),
            ("var_sum_p", d.var_sum_p),
            ("max_p", d.max_p),
            ("tv_to_poisson", d.tv_to_poisson),
            ("cond_dispersion", d.cond_dispersion),
            ("pit_ks", d.pit_ks),
            ("lambda_gap", d.lambda_gap),
        ] {
            writeln!(w, "{},{name},{value}", d.n)?;
        }
    }
    Ok(())
}

#[derive(Default, Clone)]
struct RepAccum {
    n_t: u64,
    sum_x: f64,
    sum_x2: f64,
    sum_sp: f64,
    sum_sp2: f64,
    max_p: f64,
    sum_sq_resid: f64,
    tv_sum: f64,
    tv_count: u64,
    lambda_gap_sum: f64,
    lambda_gap_count: u64,
    pit: Vec<f64>,
}

impl RepAccum {
    fn merge(mut self, other: RepAccum) -> RepAccum {
        self.n_t += other.n_t;
        self.sum_x += other.sum_x;
        self.sum_x2 += other.sum_x2;
        self.sum_sp += other.sum_sp;
        self.sum_sp2 += other.sum_sp2;
        self.max_p = self.max_p.max(other.max_p);
        self.sum_sq_resid += other.sum_sq_resid;
        self.tv_sum += other.tv_sum;
        self.tv_count += other.tv_count;
        self.lambda_gap_sum += other.lambda_gap_sum;
        self.lambda_gap_count += other.lambda_gap_count;
        self.pit.extend(other.pit);
        self
    }
}

/// Randomized PIT of a count x against Poisson(λ): F(x−1) + v·f(x).
fn poisson_pit(x: u32, lambda: f64, v: f64) -> f64 {
    if lambda <= 0.0 {
        return v; // degenerate at 0: uniform by construction
    }
    let mut term = (-lambda).exp();
    let mut cdf_below = 0.0;
    for k in 0..x {
        cdf_below += term;
        term *= lambda / (k + 1) as f64;
    }
    (cdf_below + v * term).min(1.0)
}

fn kolmogorov_distance(mut u: Vec<f64>) -> f64 {
    if u.is_empty() {
        return 0.0;
    }
    u.sort_by(f64::total_cmp);
    let n = u.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &v) in u.iter().enumerate() {
        d = d.max((v - i as f64 / n).abs());
        d = d.max((v - (i + 1) as f64 / n).abs());
    }
    d
}

fn diagnostics_for_spec(
    spec: &ModelSpec,
    scaling: &RareEventScaling,
    n: usize,
    cfg: &LimitExperimentConfig,
) -> Result<LimitDiagnostics> {
    let (c_bar, gamma_bar, beta) = scaling.limit_params();
    let stride = (cfg.horizon / cfg.tv_samples_per_rep.max(1)).max(1);
    let accums: Vec<Result<RepAccum>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let sim_cfg = SimConfig {
                seed: cfg.seed,
                horizon: cfg.horizon,
                burn_in: cfg.burn_in,
                init: InitPolicy::Fixed {
                    p: vec![initial_probabilities(&scaling.init, n, cfg.seed, rep as u64)],
                },
            };
            let traj = simulate_replicate(spec, &sim_cfg, rep as u64)?;
            let pit_rng = CounterRng::new(cfg.seed, Domain::Pit, rep as u64);
            let mut acc = RepAccum::default();
            let mut lambda = traj.sum_p(0);
            let mut prev_x = 0u32;
            for t in 0..traj.horizon() {
                let x = traj.outcomes().count_at(t);
                let sp = traj.sum_p(t);
                acc.n_t += 1;
                acc.sum_x += x as f64;
                acc.sum_x2 += (x as f64) * (x as f64);
                acc.sum_sp += sp;
                acc.sum_sp2 += sp * sp;
                acc.sum_sq_resid += (x as f64 - sp) * (x as f64 - sp);
                for &p in traj.p_column(t) {
                    if p > acc.max_p {
                        acc.max_p = p;
                    }
                }
                if t > 0 {
                    lambda = c_bar + gamma_bar * prev_x as f64 + beta * lambda;
                    acc.lambda_gap_sum += (lambda - sp).abs();
                    acc.lambda_gap_count += 1;
                }
                prev_x = x;
                if (t + 1) % stride == 0 {
                    acc.tv_sum += poisson_tv_distance(traj.p_column(t))?;
                    acc.tv_count += 1;
                    let v = pit_rng.uniform(0, t as u64);
                    acc.pit.push(poisson_pit(x, sp, v));
                }
            }
            Ok(acc)
        })
        .collect();

    let mut total = RepAccum::default();
    for a in accums {
        total = total.merge(a?);
    }
    let nt = total.n_t as f64;
    let e_x = total.sum_x / nt;
    let e_sp = total.sum_sp / nt;
    Ok(LimitDiagnostics {
        n,
        e_x,
        var_x: total.sum_x2 / nt - e_x * e_x,
        e_sum_p: e_sp,
        var_sum_p: total.sum_sp2 / nt - e_sp * e_sp,
        max_p: total.max_p,
        tv_to_poisson: total.tv_sum / total.tv_count.max(1) as f64,
        cond_dispersion: total.sum_sq_resid / total.sum_sp.max(1e-300),
        pit_ks: kolmogorov_distance(total.pit),
        lambda_gap: total.lambda_gap_sum / total.lambda_gap_count.max(1) as f64,
    })
}

/// Simulate the scaled interactive panel along the N grid and report the
/// limit diagnostics per N.
pub fn run_limit_experiment(
    scaling: &RareEventScaling,
    cfg: &LimitExperimentConfig,
) -> Result<Vec<LimitDiagnostics>> {
    scaling
        .n_grid
        .iter()
        .map(|&n| {
            let spec = make_rare_event_spec(scaling, n)?;
            diagnostics_for_spec(&spec, scaling, n, cfg)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DegreeRule {
    /// d(N) = ⌈factor · ln N⌉.
    LogFactor(f64),
    Fixed(usize),
    Complete,
}

impl DegreeRule {
    pub fn degree(&self, n: usize) -> usize {
        match self {
            DegreeRule::LogFactor(f) => log_degree(n, *f),
            DegreeRule::Fixed(d) => (*d).clamp(1, n),
            DegreeRule::Complete => n,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NetworkComparison {
    pub n: usize,
    pub degree: usize,
    pub network: LimitDiagnostics,
    pub complete: LimitDiagnostics,
}

/// Long-format CSV with a `graph` discriminator column.
pub fn write_network_comparison_csv<W: std::io::Write>(
    rows: &[NetworkComparison],
    mut w: W,
) -> Result<()> {
    writeln!(w, "n,degree,graph,statistic,value")?;
    for row in rows {
        for (tag, d) in [("regular", &row.network), ("complete", &row.complete)] {
            for (name, value) in [
                ("e_x", d.e_x),
                ("var_x", d.var_x),
                ("e_sum_p", d.e_sum_p),
                ("var_sum_p", d.var_sum_p),
                ("max_p", d.max_p),
                ("tv_to_poisson", d.tv_to_poisson),
                ("cond_dispersion", d.cond_dispersion),
                ("pit_ks", d.pit_ks),
                ("lambda_gap", d.lambda_gap),
            ] {
                writeln!(w, "{},{},{tag},{name},{value}", row.n, row.degree)?;
            }
        }
    }
    Ok(())
}

/// Run the scaled panel on a d(N)-regular circulant and on the complete
/// graph at each N; for dense doubly stochastic networks the two
/// diagnostics converge toward each other.
pub fn run_network_limit_experiment(
    scaling: &RareEventScaling,
    rule: DegreeRule,
    cfg: &LimitExperimentConfig,
) -> Result<Vec<NetworkComparison>> {
    scaling
        .n_grid
        .iter()
        .map(|&n| {
            let d = rule.degree(n);
            let w = build_regular_network(n, d)?;
            let net_spec = make_rare_event_network_spec(scaling, n, w)?;
            let complete_spec = make_rare_event_spec(scaling, n)?;
            Ok(NetworkComparison {
                n,
                degree: d,
                network: diagnostics_for_spec(&net_spec, scaling, n, cfg)?,
                complete: diagnostics_for_spec(&complete_spec, scaling, n, cfg)?,
            })
        })
        .collect()
}
