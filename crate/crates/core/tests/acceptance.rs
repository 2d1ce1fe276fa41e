//! Acceptance suite: every release-gating criterion at its stated
//! tolerance, one test per criterion, each printing a PASS line with the
//! measured values. Run with `cargo test --test acceptance -- --nocapture`
//! to see the numbers.

use std::time::Instant;

use gab_core::agg::pmf::{bernoulli_sum_pmf, le_cam_bound, poisson_tv_distance};
use gab_core::agg::{
    run_limit_experiment, run_network_limit_experiment, DegreeRule, LimitExperimentConfig,
    RareEventScaling,
};
use gab_core::mle::filter::FilterInit;
use gab_core::mle::forecast::{forecast_one_step, mse_eval, BenchmarkForecaster};
use gab_core::mle::{
    fisher_info, fit_mle, loglik, opg_matrix, score, transform, FitConfig, FitFamily,
};
use gab_core::model::mean::unconditional_mean;
use gab_core::model::{InteractiveParams, LinearParams, LogitParams, ModelSpec};
use gab_core::pipeline::{threshold_binary, ResidualPanel};
use gab_core::poisson::{
    calibrate_binary_from_poisson, fit_poisson_mle, simulate_poisson_ar, CountSeries,
    PoissonFitConfig, PoissonParams,
};
use gab_core::rng::{CounterRng, Domain};
use gab_core::sim::coupling::coupled_simulate;
use gab_core::sim::{aggregate_counts, simulate, simulate_replicate, SimConfig};

fn pass(criterion: u32, detail: String, started: Instant, budget_secs: Option<f64>) {
    let elapsed = started.elapsed().as_secs_f64();
    println!("ACCEPTANCE {criterion}: PASS: {detail} [{elapsed:.1}s]");
    if let Some(budget) = budget_secs {
        assert!(elapsed < budget, "criterion {criterion} exceeded its {budget}s budget: {elapsed:.1}s");
    }
}

/// 1. Simulated long-run means match the closed-form unconditional means.
#[test]
fn acceptance_01_mean_formulas() {
    let started = Instant::now();

    let linear = ModelSpec::linear11(0.1, 0.2, 0.3);
    let mu_lin = unconditional_mean(&linear).unwrap().per_series_mean[0];
    assert!((mu_lin - 0.2).abs() < 1e-15);
    let traj = simulate(&linear, &SimConfig::stationary(2024, 1_600_000)).unwrap();
    let sim_lin = traj.mean_y();
    assert!(
        (sim_lin - mu_lin).abs() < 0.01 * mu_lin,
        "linear: simulated {sim_lin} vs exact {mu_lin}"
    );

    // reference interactive configuration: N = 5, ω = 0.05, α = 0.1,
    // β = 0.6, γ = 0.2 → μ = 0.5 per series
    let inter = ModelSpec::interactive_homogeneous(5, 0.05, 0.1, 0.2, 0.6);
    let mu_int = unconditional_mean(&inter).unwrap().per_series_mean[0];
    assert!((mu_int - 0.5).abs() < 1e-12);
    let traj = simulate(&inter, &SimConfig::stationary(77, 400_000)).unwrap();
    let sim_int = traj.mean_y();
    assert!(
        (sim_int - mu_int).abs() < 0.01 * mu_int,
        "interactive: simulated {sim_int} vs exact {mu_int}"
    );

    pass(
        1,
        format!("linear mean {sim_lin:.5} vs 0.2; interactive mean {sim_int:.5} vs 0.5"),
        started,
        Some(30.0),
    );
}

/// 2. Coupled trajectories decay at least at the contraction rate; the
///    identical-initialization trace is exactly zero.
#[test]
fn acceptance_02_coupling_ergodicity() {
    let started = Instant::now();
    let spec = ModelSpec::linear11(0.1, 0.2, 0.3);
    let cfg = SimConfig::fixed(99, 60, 0, vec![]);

    let zero = coupled_simulate(&spec, &[vec![0.25]], &[vec![0.25]], &cfg, 200).unwrap();
    assert!(zero.mean_l1.iter().all(|&d| d == 0.0), "identity coupling must be exact");

    let trace = coupled_simulate(&spec, &[vec![0.0]], &[vec![1.0]], &cfg, 200).unwrap();
    let slope = trace.decay_slope.expect("nonzero trace must fit a slope");
    let bound = 0.5f64.ln() + 0.05;
    assert!(slope <= bound, "decay rate {slope} vs bound {bound} (ρ(Φ) = 0.5)");
    pass(
        2,
        format!("fitted decay rate {slope:.3} ≤ log(0.5)+0.05 = {bound:.3}; zero case exact"),
        started,
        Some(60.0),
    );
}

/// 3. Poisson-binomial oracle: Le Cam bound and exact moment identities.
#[test]
fn acceptance_03_poisson_binomial_oracle() {
    let started = Instant::now();
    let q = vec![1.25e-3; 1000];
    let tv = poisson_tv_distance(&q).unwrap();
    assert!(tv <= 1.5625e-3, "TV {tv} vs Le Cam bound 1.5625e-3");
    assert!((le_cam_bound(&q) - 1.5625e-3).abs() < 1e-12);

    // moment identities on a heterogeneous vector
    let q2: Vec<f64> = (0..400).map(|i| 0.5 * ((i * 37 + 11) % 97) as f64 / 97.0).collect();
    let pmf = bernoulli_sum_pmf(&q2).unwrap();
    let total: f64 = pmf.iter().sum();
    let mean: f64 = pmf.iter().enumerate().map(|(k, &p)| k as f64 * p).sum();
    let second: f64 = pmf.iter().enumerate().map(|(k, &p)| (k * k) as f64 * p).sum();
    let var = second - mean * mean;
    let expect_mean: f64 = q2.iter().sum();
    let expect_var: f64 = q2.iter().map(|&v| v * (1.0 - v)).sum();
    assert!((total - 1.0).abs() < 1e-12, "pmf mass {total}");
    assert!((mean - expect_mean).abs() < 1e-10, "mean {mean} vs {expect_mean}");
    assert!((var - expect_var).abs() < 1e-10, "var {var} vs {expect_var}");
    pass(
        3,
        format!("TV {tv:.3e} ≤ 1.5625e-3; pmf mass/mean/var exact to 1e-10"),
        started,
        None,
    );
}

fn benchmark_experiment() -> (RareEventScaling, LimitExperimentConfig) {
    (
        RareEventScaling::benchmark(vec![50, 200, 800]),
        LimitExperimentConfig {
            horizon: 2_000,
            reps: 200,
            burn_in: 1_000,
            tv_samples_per_rep: 10,
            seed: 0xf16,
        },
    )
}

/// 4. Rare-events aggregation at desk scale: E[X] and Var(Σp) approach the
///    limiting Poisson-autoregression values and the conditional TV distance
///    to the matched Poisson shrinks along the N grid.
#[test]
fn acceptance_04_aggregation_limit() {
    let started = Instant::now();
    let (scaling, cfg) = benchmark_experiment();
    let rows = run_limit_experiment(&scaling, &cfg).unwrap();
    for d in &rows {
        println!(
            "  N={:>4}: E[X]={:.4} Var(Σp)={:.4} TV={:.5} disp={:.4} max_p={:.4} λgap={:.5}",
            d.n, d.e_x, d.var_sum_p, d.tv_to_poisson, d.cond_dispersion, d.max_p, d.lambda_gap
        );
    }
    let last = rows.last().unwrap();
    assert!((last.e_x - 1.25).abs() < 0.05 * 1.25, "E[X] {} vs 1.25 ± 5%", last.e_x);
    let var_limit = 0.25 * 0.2 * 0.2 / ((1.0 - 0.64) * 0.2);
    assert!(
        (last.var_sum_p - var_limit).abs() < 0.10 * var_limit,
        "Var(Σp) {} vs {var_limit} ± 10%",
        last.var_sum_p
    );
    // strictly decreasing TV with at most one Monte Carlo inversion
    let inversions = rows.windows(2).filter(|w| w[1].tv_to_poisson >= w[0].tv_to_poisson).count();
    assert!(inversions <= 1, "TV sequence not decreasing: {rows:?}");
    // the vanishing-maximum condition shows up as shrinking max_i p
    let max_p_inversions = rows.windows(2).filter(|w| w[1].max_p >= w[0].max_p).count();
    assert!(max_p_inversions <= 1, "max_p not shrinking along the grid");
    pass(
        4,
        format!(
            "at N=800: E[X] {:.4} (target 1.25), Var(Σp) {:.4} (target {var_limit:.4}), TV {:?}",
            last.e_x,
            last.var_sum_p,
            rows.iter().map(|d| (d.n, d.tv_to_poisson)).collect::<Vec<_>>()
        ),
        started,
        Some(600.0),
    );
}

/// 5. Network aggregation: a d-regular circulant with d = ⌈4 ln N⌉ matches
///    the complete-graph diagnostics at N = 800.
#[test]
fn acceptance_05_network_limit() {
    let started = Instant::now();
    let (scaling, cfg) = benchmark_experiment();
    let rows = run_network_limit_experiment(&scaling, DegreeRule::LogFactor(4.0), &cfg).unwrap();
    for row in &rows {
        println!(
            "  N={:>4} d={:>2}: E[X] net {:.4} / complete {:.4}; Var(Σp) {:.4}/{:.4}; TV {:.5}/{:.5}",
            row.n,
            row.degree,
            row.network.e_x,
            row.complete.e_x,
            row.network.var_sum_p,
            row.complete.var_sum_p,
            row.network.tv_to_poisson,
            row.complete.tv_to_poisson,
        );
    }
    let last = rows.last().unwrap();
    assert_eq!(last.degree, 27, "⌈4 ln 800⌉");
    let rel = |a: f64, b: f64| (a - b).abs() / b.abs();
    assert!(
        rel(last.network.e_x, last.complete.e_x) < 0.05,
        "E[X]: network {} vs complete {}",
        last.network.e_x,
        last.complete.e_x
    );
    assert!(
        rel(last.network.var_sum_p, last.complete.var_sum_p) < 0.05,
        "Var(Σp): network {} vs complete {}",
        last.network.var_sum_p,
        last.complete.var_sum_p
    );
    assert!(
        rel(last.network.cond_dispersion, last.complete.cond_dispersion) < 0.05,
        "dispersion: network {} vs complete {}",
        last.network.cond_dispersion,
        last.complete.cond_dispersion
    );
    // both conditional TV distances vanish in N; the network one decays at
    // the slower 1/d(N) = 1/⌈4 ln N⌉ rate, so compare absolutely at N = 800
    let gaps: Vec<f64> = rows
        .iter()
        .map(|r| (r.network.tv_to_poisson - r.complete.tv_to_poisson).abs())
        .collect();
    assert!(gaps.last().unwrap() < &2e-3, "TV gap at N=800: {gaps:?}");
    let net_tv_inversions = rows
        .windows(2)
        .filter(|w| w[1].network.tv_to_poisson >= w[0].network.tv_to_poisson)
        .count();
    assert!(net_tv_inversions <= 1, "network TV not shrinking along the grid");
    pass(
        5,
        format!(
            "at N=800, d=27: E[X] {:.4} vs {:.4}, Var(Σp) {:.4} vs {:.4}, TV gaps {gaps:?}",
            last.network.e_x, last.complete.e_x, last.network.var_sum_p, last.complete.var_sum_p
        ),
        started,
        Some(600.0),
    );
}

fn random_interior_theta(family: &FitFamily, n_series: usize, rng: &CounterRng, point: u64) -> Vec<f64> {
    let bl = family.block_len();
    let mut theta = vec![0.0; family.param_len(n_series)];
    for b in 0..family.n_blocks(n_series) {
        for k in 0..bl {
            let u = rng.uniform((b * bl + k) as u64, point);
            theta[b * bl + k] = 3.0 * (u - 0.5);
        }
        if matches!(family, FitFamily::Logit11) {
            // raw coordinates; keep the log-odds recursion non-explosive
            theta[b * bl + 2] *= 0.6; // β ∈ (−0.9, 0.9)
        } else {
            let z: Vec<f64> = theta[b * bl..(b + 1) * bl].to_vec();
            let mut block = vec![0.0; bl];
            transform::simplex_from_unconstrained(&z, &mut block);
            theta[b * bl..(b + 1) * bl].copy_from_slice(&block);
        }
    }
    theta
}

/// 6. Analytic score vs central finite differences at 20 random interior
///    points per differentiable family, relative error ≤ 1e-6.
#[test]
fn acceptance_06_score_correctness() {
    let started = Instant::now();
    let ring = gab_core::agg::network::build_regular_network(3, 2).unwrap();
    let cases: Vec<(FitFamily, ModelSpec)> = vec![
        (FitFamily::Linear { s: 1, q: 1 }, ModelSpec::linear11(0.15, 0.25, 0.3)),
        (FitFamily::Linear { s: 2, q: 2 }, ModelSpec::linear11(0.15, 0.25, 0.3)),
        (FitFamily::Logit11, ModelSpec::logit11(vec![LogitParams { omega: -1.5, alpha: 1.0, beta: 0.6 }])),
        (FitFamily::Exchangeable, ModelSpec::exchangeable(3, 0.1, 0.3, 0.4)),
        (
            FitFamily::Interactive { include_alpha: true },
            ModelSpec::interactive_homogeneous(3, 0.1, 0.15, 0.2, 0.35),
        ),
        (
            FitFamily::Network { weights: ring.clone(), include_alpha: true },
            ModelSpec::network(
                vec![InteractiveParams { omega: 0.1, alpha: 0.15, gamma: 0.2, beta: 0.35 }; 3],
                ring,
            ),
        ),
    ];
    let mut worst: f64 = 0.0;
    for (case_idx, (family, dgp)) in cases.iter().enumerate() {
        let traj = simulate(dgp, &SimConfig::stationary(40 + case_idx as u64, 400)).unwrap();
        let panel = traj.outcomes();
        let rng = CounterRng::new(0xacc6 + case_idx as u64, Domain::FitStart, 0);
        for point in 0..20u64 {
            let theta = random_interior_theta(family, panel.n_series(), &rng, point);
            let analytic = score(family, &theta, panel, &FilterInit::SampleMean).unwrap();
            let h = 1e-6;
            let mut fd = vec![0.0; theta.len()];
            for k in 0..theta.len() {
                let mut tp = theta.clone();
                let mut tm = theta.clone();
                tp[k] += h;
                tm[k] -= h;
                let lp = loglik(family, &tp, panel, &FilterInit::SampleMean).unwrap().value;
                let lm = loglik(family, &tm, panel, &FilterInit::SampleMean).unwrap().value;
                fd[k] = (lp - lm) / (2.0 * h);
            }
            let num: f64 =
                analytic.iter().zip(&fd).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
            let den: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt();
            let rel = num / den.max(1.0);
            worst = worst.max(rel);
            assert!(
                rel <= 1e-6,
                "{}: point {point} relative error {rel:.2e}",
                family.name()
            );
        }
    }
    pass(6, format!("6 families × 20 points, worst relative error {worst:.2e}"), started, None);
}

/// 7. Information-matrix equality at θ₀: Fisher H vs outer product of
///    per-period scores within 5% at T = 5·10⁴.
#[test]
fn acceptance_07_information_equality() {
    let started = Instant::now();
    let theta0 = [0.1, 0.3, 0.4];
    let spec = ModelSpec::exchangeable(10, theta0[0], theta0[1], theta0[2]);
    let traj = simulate(&spec, &SimConfig::stationary(314, 50_000)).unwrap();
    let family = FitFamily::Exchangeable;
    let h = fisher_info(&family, &theta0, traj.outcomes(), &FilterInit::SampleMean).unwrap();
    let o = opg_matrix(&family, &theta0, traj.outcomes(), &FilterInit::SampleMean).unwrap();
    let num = (&h - &o).iter().map(|v| v * v).sum::<f64>().sqrt();
    let den = h.iter().map(|v| v * v).sum::<f64>().sqrt();
    let rel = num / den;
    assert!(rel <= 0.05, "‖H − OPG‖/‖H‖ = {rel:.4}");
    pass(7, format!("‖H − OPG‖/‖H‖ = {rel:.4} ≤ 0.05 at T = 5e4"), started, None);
}

/// 8. Consistency and asymptotic normality at desk scale: median error
///    halves as T quadruples, and 95% Wald intervals cover θ₀.
#[test]
fn acceptance_08_consistency_and_coverage() {
    let started = Instant::now();
    let theta0 = [0.1, 0.3, 0.4];
    let spec = ModelSpec::exchangeable(10, theta0[0], theta0[1], theta0[2]);
    let family = FitFamily::Exchangeable;
    let fit_cfg = FitConfig { starts: 3, ..FitConfig::default() };

    let median_err = |t_len: usize, reps: u64, seed: u64| -> f64 {
        let mut errs: Vec<f64> = (0..reps)
            .map(|rep| {
                let cfg = SimConfig {
                    seed,
                    horizon: t_len,
                    burn_in: 500,
                    init: gab_core::sim::InitPolicy::StationaryWarmup { extra_burn_in: 0 },
                };
                let traj = simulate_replicate(&spec, &cfg, rep).unwrap();
                let fit = fit_mle(&family, traj.outcomes(), &fit_cfg).unwrap();
                fit.params
                    .values
                    .iter()
                    .zip(&theta0)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        errs.sort_by(f64::total_cmp);
        0.5 * (errs[errs.len() / 2] + errs[(errs.len() - 1) / 2])
    };

    let reps = 60;
    let m1 = median_err(2_000, reps, 0xc0);
    let m2 = median_err(8_000, reps, 0xc1);
    let m3 = median_err(32_000, reps, 0xc2);
    let r21 = m2 / m1;
    let r32 = m3 / m2;
    println!("  median ‖θ̂−θ₀‖: T=2e3 {m1:.5}, T=8e3 {m2:.5}, T=3.2e4 {m3:.5}; ratios {r21:.3}, {r32:.3}");
    assert!((0.4..=0.6).contains(&r21), "halving ratio {r21} outside [0.4, 0.6]");
    assert!((0.4..=0.6).contains(&r32), "halving ratio {r32} outside [0.4, 0.6]");

    // coverage of nominal 95% Wald intervals at T = 2e4
    let reps = 200u64;
    let mut covered = [0u32; 3];
    for rep in 0..reps {
        let cfg = SimConfig {
            seed: 0xc3,
            horizon: 20_000,
            burn_in: 500,
            init: gab_core::sim::InitPolicy::StationaryWarmup { extra_burn_in: 0 },
        };
        let traj = simulate_replicate(&spec, &cfg, rep).unwrap();
        let fit = fit_mle(&family, traj.outcomes(), &fit_cfg).unwrap();
        for k in 0..3 {
            let half = 1.959963984540054 * fit.std_errors[k];
            if (fit.params.values[k] - theta0[k]).abs() <= half {
                covered[k] += 1;
            }
        }
    }
    let rates: Vec<f64> = covered.iter().map(|&c| c as f64 / reps as f64).collect();
    println!("  95% Wald coverage over {reps} reps: {rates:?}");
    for (k, &rate) in rates.iter().enumerate() {
        assert!(
            (0.90..=0.99).contains(&rate),
            "coverage of θ[{k}] = {rate} outside [0.90, 0.99]"
        );
    }
    pass(
        8,
        format!("halving ratios {r21:.3}/{r32:.3} in [0.4,0.6]; coverage {rates:?}"),
        started,
        Some(900.0),
    );
}

/// 9. Poisson MLE recovery: ≥ 90% of replications put every parameter
///    within 3 reported standard errors of the truth.
#[test]
fn acceptance_09_poisson_mle_recovery() {
    let started = Instant::now();
    let truth = PoissonParams::linear(0.25, 0.2, 0.6);
    let reps = 100;
    let mut ok = 0;
    for rep in 0..reps {
        let xs =
            simulate_poisson_ar(&truth, 10_000, 500, 0x90a + 7, rep, 1.25).unwrap();
        let fit = fit_poisson_mle(&xs, &PoissonFitConfig::default()).unwrap();
        let est = [fit.params.c_bar, fit.params.gamma_bar, fit.params.beta];
        let tru = [0.25, 0.2, 0.6];
        let within = (0..3).all(|k| (est[k] - tru[k]).abs() <= 3.0 * fit.std_errors[k]);
        ok += u32::from(within);
    }
    let rate = ok as f64 / reps as f64;
    assert!(rate >= 0.90, "3-SE recovery rate {rate} < 0.90");
    pass(9, format!("{ok}/{reps} replications within 3 SEs"), started, None);
}

/// 10. Forecast benchmarks: exact constant/persistence MSE values on
///     i.i.d. Bernoulli(0.2) data, and the four-model ordering on synthetic
///     interactive data.
#[test]
fn acceptance_10_forecast_benchmarks() {
    let started = Instant::now();

    // i.i.d. Bernoulli(0.2) panel via a degenerate linear spec
    let iid = ModelSpec {
        schema_version: gab_core::model::SCHEMA_VERSION,
        n_series: 50,
        lags: gab_core::model::Lags { s: 1, q: 1 },
        family: gab_core::model::Family::LinearUnivariate(vec![
            LinearParams { omega: 0.2, alpha: 0.0, beta: 0.0 };
            50
        ]),
        nonlinearity: None,
        network: None,
    };
    let traj = simulate(&iid, &SimConfig::fixed(0xbe2, 4_500, 0, vec![vec![0.2; 50]])).unwrap();
    let panel = traj.into_outcomes();
    let est_len = 500;
    let m3 = mse_eval(
        &forecast_one_step(&BenchmarkForecaster::Constant(0.05), &panel, est_len).unwrap(),
        &panel,
    )
    .unwrap()
    .pooled;
    let m4 = mse_eval(
        &forecast_one_step(&BenchmarkForecaster::Persistence, &panel, est_len).unwrap(),
        &panel,
    )
    .unwrap()
    .pooled;
    // E(0.05 − y)² = 0.2·0.95² + 0.8·0.05² = 0.1825;
    // P(y_t ≠ y_{t-1}) = 2·0.2·0.8 = 0.32
    assert!((m3 - 0.1825).abs() < 0.02 * 0.1825, "Model 3 MSE {m3} vs 0.1825 ± 2%");
    assert!((m4 - 0.32).abs() < 0.02 * 0.32, "Model 4 MSE {m4} vs 0.32 ± 2%");

    // heterogeneous interactive DGP with α = 0: strongly dispersed memory
    // (β from 0.50 to 0.85) that a homogeneous calibration cannot match
    let n = 50;
    let dgp = ModelSpec::interactive(
        (0..n)
            .map(|i| {
                let u = i as f64 / (n - 1) as f64;
                InteractiveParams {
                    omega: 0.004 + 0.006 * u,
                    alpha: 0.0,
                    gamma: 0.30 - 0.16 * u,
                    beta: 0.50 + 0.35 * u,
                }
            })
            .collect(),
    );
    let traj = simulate(&dgp, &SimConfig::stationary(0x0d4, 6_500)).unwrap();
    let panel = traj.into_outcomes();
    let est_len = 4_000;
    let est_panel = panel.window(0, est_len);

    let m1_fit = fit_mle(
        &FitFamily::Interactive { include_alpha: false },
        &est_panel,
        &FitConfig::default(),
    )
    .unwrap();
    let m1_spec = m1_fit.to_model_spec().unwrap();
    let counts = CountSeries::new((0..est_len).map(|t| est_panel.count_at(t)).collect());
    let pfit = fit_poisson_mle(&counts, &PoissonFitConfig::default()).unwrap();
    let m2_spec = calibrate_binary_from_poisson(&pfit.params, n).unwrap();

    let mse_of = |fc: &BenchmarkForecaster| -> f64 {
        mse_eval(&forecast_one_step(fc, &panel, est_len).unwrap(), &panel).unwrap().pooled
    };
    let mse1 = mse_of(&BenchmarkForecaster::Model(m1_spec));
    let mse2 = mse_of(&BenchmarkForecaster::Model(m2_spec));
    let mse3 = mse_of(&BenchmarkForecaster::Constant(0.05));
    let mse4 = mse_of(&BenchmarkForecaster::Persistence);
    println!("  interactive holdout MSEs: {mse1:.4} ≤ {mse2:.4} ≤ {mse3:.4} < {mse4:.4}");
    assert!(mse1 <= mse2, "Model 1 {mse1} > Model 2 {mse2}");
    assert!(mse2 <= mse3, "Model 2 {mse2} > Model 3 {mse3}");
    assert!(mse3 < mse4, "Model 3 {mse3} ≥ Model 4 {mse4}");
    pass(
        10,
        format!(
            "iid: Model3 {m3:.4} (0.1825), Model4 {m4:.4} (0.32); ordering {mse1:.4} ≤ {mse2:.4} ≤ {mse3:.4} < {mse4:.4}"
        ),
        started,
        None,
    );
}

/// 11. Calibration round trip: the reported Poisson estimates calibrate a
///     valid binary spec whose simulated aggregate refits to the same
///     parameters within 3 SEs at T = 10⁴.
#[test]
fn acceptance_11_calibration_round_trip() {
    let started = Instant::now();
    let reported = PoissonParams::linear(0.049, 0.24, 0.75);
    let spec = calibrate_binary_from_poisson(&reported, 87).unwrap();
    match &spec.family {
        gab_core::model::Family::Interactive(ps) => {
            assert!((ps[0].omega - 0.049 / 87.0).abs() < 1e-15);
            assert_eq!(ps[0].alpha, 0.0);
        }
        _ => panic!("expected interactive"),
    }
    let cfg = SimConfig {
        seed: 0xca1,
        horizon: 10_000,
        burn_in: 2_000,
        init: gab_core::sim::InitPolicy::StationaryWarmup { extra_burn_in: 0 },
    };
    let traj = simulate(&spec, &cfg).unwrap();
    let counts = aggregate_counts(&traj);
    let fit = fit_poisson_mle(&counts, &PoissonFitConfig::default()).unwrap();
    let est = [fit.params.c_bar, fit.params.gamma_bar, fit.params.beta];
    let tru = [0.049, 0.24, 0.75];
    for k in 0..3 {
        assert!(
            (est[k] - tru[k]).abs() <= 3.0 * fit.std_errors[k],
            "param {k}: {} vs {} (se {})",
            est[k],
            tru[k],
            fit.std_errors[k]
        );
    }
    pass(
        11,
        format!(
            "refit (ĉ, γ̂, β̂) = ({:.4}, {:.4}, {:.4}) within 3 SEs of (0.049, 0.24, 0.75)",
            est[0], est[1], est[2]
        ),
        started,
        None,
    );
}

/// 12. Pipeline determinism and no-lookahead.
#[test]
fn acceptance_12_pipeline_no_lookahead() {
    let started = Instant::now();
    let t_len = 260;
    let dates: Vec<String> =
        (0..t_len + 40).map(|t| format!("2023-{:02}-{:02}", 1 + t / 28, 1 + t % 28)).collect();
    let raw: Vec<f64> =
        (0..t_len).map(|t| (((t * 61 + 17) % 257) as f64 - 128.0) / 300.0).collect();
    let res = ResidualPanel {
        dates: dates[..t_len].to_vec(),
        ids: vec!["S1".into()],
        values: raw.clone(),
    };
    let split_date = dates[200].clone();
    let base = threshold_binary(&res, 0.05, &split_date).unwrap();

    // byte-identical thresholds under holdout extension
    let mut ext_values = raw.clone();
    ext_values.extend((0..40).map(|k| -5.0 - k as f64));
    let res_ext = ResidualPanel {
        dates: dates.clone(),
        ids: vec!["S1".into()],
        values: ext_values,
    };
    let ext = threshold_binary(&res_ext, 0.05, &split_date).unwrap();
    let mut csv_a = Vec::new();
    base.write_thresholds_csv(&mut csv_a).unwrap();
    let mut csv_b = Vec::new();
    ext.write_thresholds_csv(&mut csv_b).unwrap();
    assert_eq!(csv_a, csv_b, "thresholds changed under holdout extension");
    for t in 0..t_len {
        assert_eq!(base.matrix.get(0, t), ext.matrix.get(0, t));
    }

    // invariance under strictly increasing transforms
    let transforms: [fn(f64) -> f64; 3] = [|x| x.exp(), |x| 3.0 * x - 7.0, |x| x.powi(3)];
    for f in transforms {
        let res_t = ResidualPanel {
            dates: dates[..t_len].to_vec(),
            ids: vec!["S1".into()],
            values: raw.iter().map(|&v| f(v)).collect(),
        };
        let tr = threshold_binary(&res_t, 0.05, &split_date).unwrap();
        for t in 0..t_len {
            assert_eq!(base.matrix.get(0, t), tr.matrix.get(0, t));
        }
    }

    // byte-identical CSV on repeated runs
    let mut run_a = Vec::new();
    base.write_csv(&mut run_a).unwrap();
    let again = threshold_binary(&res, 0.05, &split_date).unwrap();
    let mut run_b = Vec::new();
    again.write_csv(&mut run_b).unwrap();
    assert_eq!(run_a, run_b);
    pass(
        12,
        "thresholds byte-identical under holdout extension; panel invariant under monotone transforms".into(),
        started,
        None,
    );
}
