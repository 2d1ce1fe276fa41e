//! Cross-module invariants: range preservation, schedule-independent
//! determinism, conditional distributional identities, and likelihood
//! initialization robustness.

use gab_core::agg::pmf::bernoulli_sum_pmf;
use gab_core::agg::{
    run_limit_experiment, CoefRule, InitRule, LimitExperimentConfig, RareEventScaling,
};
use gab_core::mle::filter::FilterInit;
use gab_core::mle::{loglik, FitFamily};
use gab_core::model::catalog::ScalarCurve;
use gab_core::model::{
    eval_g, validate_spec, InteractiveParams, LogitParams, ModelSpec,
    NonlinearScalarParams, PanelState,
};
use gab_core::rng::{CounterRng, Domain};
use gab_core::sim::{simulate, simulate_replicate, SimConfig};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn unit_grid(k: usize) -> impl Iterator<Item = f64> {
    (0..=k).map(move |j| j as f64 / k as f64)
}

#[test]
fn eval_g_stays_in_unit_interval_on_random_states() {
    let rng = CounterRng::new(0xfeed, Domain::InitProb, 0);
    let specs = [
        ModelSpec::linear11(0.1, 0.35, 0.5),
        ModelSpec::logit11(vec![LogitParams { omega: -1.2, alpha: 2.0, beta: 0.9 }]),
        ModelSpec::nonlinear_scalar(
            vec![NonlinearScalarParams { omega: 0.05, alpha: 0.4 }],
            ScalarCurve::CubicHalf,
        ),
        ModelSpec::nonlinear_scalar(
            vec![NonlinearScalarParams { omega: 0.05, alpha: 0.4 }],
            ScalarCurve::CubicFiveSixths,
        ),
        ModelSpec::exchangeable(4, 0.2, 0.35, 0.4),
        ModelSpec::interactive_homogeneous(4, 0.05, 0.3, 0.25, 0.35),
        ModelSpec::network(
            vec![InteractiveParams { omega: 0.1, alpha: 0.2, gamma: 0.3, beta: 0.3 }; 4],
            gab_core::agg::network::build_regular_network(4, 2).unwrap(),
        ),
    ];
    for (sidx, spec) in specs.iter().enumerate() {
        assert!(validate_spec(spec).passed(), "{} invalid", spec.family_name());
        let n = spec.n_series;
        for draw in 0..500u64 {
            let p0: Vec<f64> =
                (0..n).map(|i| rng.uniform(sidx as u64 * 1000 + i as u64, draw)).collect();
            let y0: Vec<f64> = (0..n)
                .map(|i| {
                    f64::from(rng.uniform(sidx as u64 * 1000 + 500 + i as u64, draw) < 0.5)
                })
                .collect();
            let state = PanelState::new_full(&[p0], &[y0]).unwrap();
            let p = eval_g(spec, &state).unwrap();
            assert!(
                p.iter().all(|&v| (0.0..=1.0).contains(&v)),
                "{} left [0,1]: {p:?}",
                spec.family_name()
            );
        }
        // boundary grid states
        for pb in unit_grid(20) {
            for y in [0.0, 1.0] {
                let state =
                    PanelState::new_full(&[vec![pb; n]], &[vec![y; n]]).unwrap();
                let p = eval_g(spec, &state).unwrap();
                assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
            }
        }
    }
}

#[test]
fn experiment_output_is_identical_across_thread_counts() {
    let scaling = RareEventScaling {
        n_grid: vec![30],
        kappa: 1.0,
        c: CoefRule::Constant(0.25),
        a: CoefRule::Constant(0.5),
        beta: 0.6,
        gamma: CoefRule::Constant(0.2),
        init: InitRule::UniformOverN { lo: 0.5, hi: 2.0 },
    };
    let cfg = LimitExperimentConfig {
        horizon: 120,
        reps: 12,
        burn_in: 40,
        tv_samples_per_rep: 4,
        seed: 31,
    };
    let run_with = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| run_limit_experiment(&scaling, &cfg).unwrap())
    };
    let a = run_with(1);
    let b = run_with(3);
    assert_eq!(a.len(), b.len());
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x.e_x.to_bits(), y.e_x.to_bits());
        assert_eq!(x.var_sum_p.to_bits(), y.var_sum_p.to_bits());
        assert_eq!(x.tv_to_poisson.to_bits(), y.tv_to_poisson.to_bits());
        assert_eq!(x.pit_ks.to_bits(), y.pit_ks.to_bits());
    }
}

#[test]
fn frozen_history_counts_follow_the_exact_bernoulli_sum_law() {
    // conditional on a frozen state, X_t over replications is distributed as
    // PoissonBinomial(p_t): chi-square goodness of fit against the exact pmf
    let spec = ModelSpec::interactive(vec![
        InteractiveParams { omega: 0.15, alpha: 0.2, gamma: 0.2, beta: 0.3 },
        InteractiveParams { omega: 0.25, alpha: 0.1, gamma: 0.1, beta: 0.4 },
        InteractiveParams { omega: 0.05, alpha: 0.3, gamma: 0.3, beta: 0.2 },
        InteractiveParams { omega: 0.30, alpha: 0.05, gamma: 0.15, beta: 0.45 },
    ]);
    // boundary initial probabilities make the supplemental outcome draws
    // deterministic, freezing the history exactly across replications
    let p0 = vec![1.0, 1.0, 0.0, 0.0];
    let reps = 60_000u64;
    let mut counts = vec![0u64; 5];
    let mut q = Vec::new();
    for rep in 0..reps {
        let cfg = SimConfig::fixed(12345, 1, 0, vec![p0.clone()]);
        let traj = simulate_replicate(&spec, &cfg, rep).unwrap();
        let x = traj.outcomes().count_at(0) as usize;
        counts[x.min(4)] += 1;
        if rep == 0 {
            q = traj.p_column(0).to_vec();
        } else {
            assert_eq!(q, traj.p_column(0).to_vec(), "history must be frozen");
        }
    }
    let pmf = bernoulli_sum_pmf(&q).unwrap();
    let mut chi2 = 0.0;
    for (k, &pk) in pmf.iter().enumerate() {
        let expect = pk * reps as f64;
        let obs = counts[k] as f64;
        chi2 += (obs - expect) * (obs - expect) / expect.max(1e-12);
    }
    let crit = ChiSquared::new(pmf.len() as f64 - 1.0).unwrap().inverse_cdf(0.999);
    assert!(chi2 < crit, "chi2 {chi2} vs crit {crit} (counts {counts:?}, pmf {pmf:?})");
}

#[test]
fn likelihood_initialization_bias_vanishes() {
    // same panel, different probability initializations: the per-cell
    // log-likelihood gap shrinks at the contraction rate of the filter
    let spec = ModelSpec::linear11(0.1, 0.2, 0.3);
    let family = FitFamily::Linear { s: 1, q: 1 };
    let theta = [0.1, 0.2, 0.3];
    let horizons = [1_000usize, 10_000, 100_000];
    let mut gaps = Vec::new();
    for &t_len in &horizons {
        let traj = simulate(&spec, &SimConfig::stationary(808, t_len)).unwrap();
        let a = loglik(&family, &theta, traj.outcomes(), &FilterInit::SampleMean).unwrap();
        let b =
            loglik(&family, &theta, traj.outcomes(), &FilterInit::Fixed(vec![0.9])).unwrap();
        let per_cell = (a.value - b.value).abs() / a.n_cells;
        gaps.push(per_cell);
    }
    // absolute gap is fixed by the init difference, so per-cell bias decays
    // like 1/T
    assert!(gaps[1] < gaps[0] / 5.0, "gaps {gaps:?}");
    assert!(gaps[2] < gaps[1] / 5.0, "gaps {gaps:?}");
    // at T = 1e5 even a gross 0.9-vs-mean init is below 1e-6 per cell
    assert!(gaps[2] < 1e-6, "gaps {gaps:?}");
}

#[test]
fn loglik_at_truth_matches_path_entropy() {
    // per-cell conditional log-likelihood at θ₀ has expectation
    // E[p log p + (1−p) log(1−p)]; the gap to the path entropy is a
    // martingale-difference average with estimable Monte Carlo error
    let n = 8usize;
    let spec = ModelSpec::exchangeable(n, 0.1, 0.3, 0.4);
    let t_len = 40_000;
    let traj = simulate(&spec, &SimConfig::stationary(515, t_len)).unwrap();
    let report = loglik(
        &FitFamily::Exchangeable,
        &[0.1, 0.3, 0.4],
        traj.outcomes(),
        &FilterInit::SampleMean,
    )
    .unwrap();
    let per_cell = report.value / report.n_cells;

    // from the simulator's own p path: cell-averaged loglik and entropy
    let mut d_sum = 0.0;
    let mut d_sq = 0.0;
    let mut ent = 0.0;
    let mut ll_sim = 0.0;
    let m = (t_len - 1) as f64;
    for t in 1..traj.horizon() {
        let p: f64 = traj.p(0, t); // shared across series
        let k = traj.outcomes().count_at(t) as f64;
        let cell = (k * p.ln() + (n as f64 - k) * (1.0 - p).ln()) / n as f64;
        let h = p * p.ln() + (1.0 - p) * (1.0 - p).ln();
        ll_sim += cell;
        ent += h;
        let d = cell - h;
        d_sum += d;
        d_sq += d * d;
    }
    let _mean_entropy = ent / m;
    let mean_d = d_sum / m;
    let sd_d = (d_sq / m - mean_d * mean_d).sqrt();
    let se = sd_d / m.sqrt();
    // martingale identity: cell loglik centers on the entropy
    assert!(mean_d.abs() < 2.0 * se, "mean gap {mean_d} vs 2se {}", 2.0 * se);
    // the op's filtered path differs from the simulator's only through the
    // vanishing initialization transient
    assert!(
        (per_cell - ll_sim / m).abs() < 2e-4,
        "op {per_cell} vs sim path {}",
        ll_sim / m
    );
}

#[test]
fn nonlinear_interactive_linear_catalog_reduces_to_interactive() {
    // with f_α = LagSum, f_γ = Identity, and no mean-field term, the
    // nonlinear interactive family is the plain interactive model written
    // through the catalog; trajectories must coincide
    use gab_core::model::catalog::{AggNonlinearity, OwnOutcomeNonlinearity};
    use gab_core::model::{
        Family, Lags, NonlinearInteractiveParams, NonlinearityConfig, SCHEMA_VERSION,
    };
    let n = 6usize;
    let (omega, alpha, gamma, beta) = (0.03, 0.12, 0.2, 0.5);
    let linear = ModelSpec::interactive_homogeneous(n, omega, alpha, gamma, beta);
    let nonlinear = ModelSpec {
        schema_version: SCHEMA_VERSION,
        n_series: n,
        lags: Lags { s: 1, q: 1 },
        family: Family::NonlinearInteractive(NonlinearInteractiveParams {
            omega: vec![omega; n],
            alpha_scale: vec![alpha; n],
            beta: vec![beta],
            micro_coef: vec![0.0; n],
            agg_weight: vec![gamma / n as f64; n],
        }),
        nonlinearity: Some(NonlinearityConfig::Interactive {
            f_alpha: OwnOutcomeNonlinearity::LagSum { a: vec![1.0] },
            micro: None,
            agg: Some(AggNonlinearity::Identity),
        }),
        network: None,
    };
    assert!(validate_spec(&nonlinear).passed(), "{}", validate_spec(&nonlinear).failure_summary());
    let cfg = SimConfig::fixed(606, 600, 50, vec![vec![0.4; n]]);
    let a = simulate(&linear, &cfg).unwrap();
    let b = simulate(&nonlinear, &cfg).unwrap();
    for t in 0..600 {
        for i in 0..n {
            assert!((a.p(i, t) - b.p(i, t)).abs() < 1e-12, "p mismatch at ({i},{t})");
            assert_eq!(a.y(i, t), b.y(i, t), "outcome mismatch at ({i},{t})");
        }
    }
}

#[test]
fn general_intensity_filter_tracks_nonlinear_micro_aggregate_exactly() {
    // homogeneous nonlinear interactive panel with a saturating aggregate
    // feedback: Σ_i p_{i,t} satisfies the general intensity recursion
    // λ_t = c̄ + β λ_{t-1} + γ̄ X_{t-1}/(1+X_{t-1}) exactly at finite N
    use gab_core::model::catalog::{AggNonlinearity, OwnOutcomeNonlinearity};
    use gab_core::model::{
        Family, Lags, NonlinearInteractiveParams, NonlinearityConfig, SCHEMA_VERSION,
    };
    use gab_core::poisson::{filter_lambda_general, NonlinearIntensity};
    let n = 400usize;
    let (c, gamma, beta) = (0.25, 0.2, 0.6);
    let spec = ModelSpec {
        schema_version: SCHEMA_VERSION,
        n_series: n,
        lags: Lags { s: 1, q: 1 },
        family: Family::NonlinearInteractive(NonlinearInteractiveParams {
            omega: vec![c / n as f64; n],
            alpha_scale: vec![0.0; n],
            beta: vec![beta],
            micro_coef: vec![0.0; n],
            agg_weight: vec![gamma / n as f64; n],
        }),
        nonlinearity: Some(NonlinearityConfig::Interactive {
            f_alpha: OwnOutcomeNonlinearity::LagSum { a: vec![0.0] },
            micro: None,
            agg: Some(AggNonlinearity::Saturating),
        }),
        network: None,
    };
    assert!(validate_spec(&spec).passed());
    let t_len = 400;
    let traj = simulate(
        &spec,
        &SimConfig::fixed(909, t_len, 200, vec![vec![1.25 / n as f64; n]]),
    )
    .unwrap();
    let xs: Vec<u32> = (0..t_len).map(|t| traj.outcomes().count_at(t)).collect();
    let nl = NonlinearIntensity {
        s: 1,
        beta: vec![beta],
        fbar: vec![0.0, 0.0],
        gamma_bar: gamma,
        f_gamma: AggNonlinearity::Saturating,
    };
    let lam = filter_lambda_general(c, &nl, &xs, &[], &[traj.sum_p(0)]).unwrap();
    for t in 1..t_len {
        assert!(
            (lam[t - 1] - traj.sum_p(t)).abs() < 1e-10,
            "t = {t}: filter {} vs Σp {}",
            lam[t - 1],
            traj.sum_p(t)
        );
    }
}

#[test]
fn exchangeable_counts_are_binomial_given_history() {
    // shared probability: conditional on a frozen history, X_t over
    // replications follows Binomial(N, p_t) exactly
    let n = 6usize;
    let (omega, gamma, beta) = (0.1, 0.25, 0.3);
    let spec = ModelSpec::exchangeable(n, omega, gamma, beta);
    // boundary initial probabilities freeze the supplemental outcomes
    let p0 = vec![1.0; n];
    let p1 = omega + gamma + beta; // deterministic next-step probability
    let reps = 60_000u64;
    let mut counts = vec![0u64; n + 1];
    for rep in 0..reps {
        let cfg = SimConfig::fixed(777, 1, 0, vec![p0.clone()]);
        let traj = simulate_replicate(&spec, &cfg, rep).unwrap();
        assert!((traj.p(0, 0) - p1).abs() < 1e-15);
        counts[traj.outcomes().count_at(0) as usize] += 1;
    }
    let pmf = bernoulli_sum_pmf(&vec![p1; n]).unwrap();
    let mut chi2 = 0.0;
    for (k, &pk) in pmf.iter().enumerate() {
        let expect = pk * reps as f64;
        chi2 += (counts[k] as f64 - expect).powi(2) / expect.max(1e-12);
    }
    let crit = ChiSquared::new(n as f64).unwrap().inverse_cdf(0.999);
    assert!(chi2 < crit, "chi2 {chi2} vs crit {crit}; counts {counts:?}");
}

#[test]
fn poisson_mle_recovers_limit_params_from_aggregated_binary_panel() {
    // aggregate a rare-events binary panel at N = 500 and fit the Poisson
    // autoregression to the counts: estimates recover the limit parameters
    // (c̄, γ̄, β) = (0.25, 0.2, 0.6) of the scaled interactive system
    use gab_core::agg::{make_rare_event_spec, RareEventScaling};
    use gab_core::poisson::{fit_poisson_mle, PoissonFitConfig};
    use gab_core::sim::aggregate_counts;
    let scaling = RareEventScaling::benchmark(vec![500]);
    let spec = make_rare_event_spec(&scaling, 500).unwrap();
    let traj = simulate(&spec, &SimConfig::stationary(0xa99, 10_000)).unwrap();
    let counts = aggregate_counts(&traj);
    let fit = fit_poisson_mle(&counts, &PoissonFitConfig::default()).unwrap();
    let est = [fit.params.c_bar, fit.params.gamma_bar, fit.params.beta];
    let tru = [0.25, 0.2, 0.6];
    for k in 0..3 {
        assert!(
            (est[k] - tru[k]).abs() <= 3.0 * fit.std_errors[k],
            "param {k}: {} vs {} (se {})",
            est[k],
            tru[k],
            fit.std_errors[k]
        );
    }
}

#[test]
fn complete_graph_network_experiment_reproduces_interactive_experiment() {
    // d = N puts weight 1/N everywhere, which is the interactive model;
    // the two experiment paths agree to floating-point dust
    use gab_core::agg::{
        run_limit_experiment, run_network_limit_experiment, CoefRule, DegreeRule, InitRule,
        LimitExperimentConfig, RareEventScaling,
    };
    let scaling = RareEventScaling {
        n_grid: vec![25],
        kappa: 1.0,
        c: CoefRule::Constant(0.25),
        a: CoefRule::Constant(0.5),
        beta: 0.6,
        gamma: CoefRule::Constant(0.2),
        init: InitRule::ConstantOverN { r: 1.25 },
    };
    let cfg = LimitExperimentConfig {
        horizon: 300,
        reps: 10,
        burn_in: 100,
        tv_samples_per_rep: 5,
        seed: 50,
    };
    let direct = run_limit_experiment(&scaling, &cfg).unwrap();
    let net = run_network_limit_experiment(&scaling, DegreeRule::Complete, &cfg).unwrap();
    let a = &direct[0];
    let b = &net[0].network;
    assert_eq!(net[0].degree, 25);
    let close = |x: f64, y: f64| (x - y).abs() <= 1e-9 * y.abs().max(1.0);
    assert!(close(a.e_x, b.e_x), "{} vs {}", a.e_x, b.e_x);
    assert!(close(a.var_sum_p, b.var_sum_p), "{} vs {}", a.var_sum_p, b.var_sum_p);
    assert!(close(a.tv_to_poisson, b.tv_to_poisson), "{} vs {}", a.tv_to_poisson, b.tv_to_poisson);
    assert!(close(a.max_p, b.max_p));
    // and the complete-graph side of the comparison is bit-identical to the
    // direct interactive run by construction
    assert_eq!(net[0].complete.e_x.to_bits(), a.e_x.to_bits());
}
