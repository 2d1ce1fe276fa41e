//! Shared fixtures for the criterion benches.

use gab_core::model::{InteractiveParams, ModelSpec};
use gab_core::panel::BinaryMatrix;
use gab_core::sim::{simulate, SimConfig};

/// Benchmark rare-event interactive spec at cross-section size `n`.
pub fn rare_event_spec(n: usize) -> ModelSpec {
    let nf = n as f64;
    ModelSpec::interactive(vec![
        InteractiveParams {
            omega: 0.25 / nf,
            alpha: 0.5 / nf,
            gamma: 0.2,
            beta: 0.6,
        };
        n
    ])
}

/// A simulated exchangeable panel for likelihood benchmarks.
pub fn exchangeable_panel(n: usize, horizon: usize) -> BinaryMatrix {
    let spec = ModelSpec::exchangeable(n, 0.1, 0.3, 0.4);
    simulate(&spec, &SimConfig::stationary(7, horizon)).unwrap().into_outcomes()
}
