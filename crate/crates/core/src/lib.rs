//! Generalized autoregressive binary (GAB) processes.
//!
//! A GAB panel is an N-vector of Bernoulli outcomes whose success
//! probabilities follow a GARCH-style recursion in past outcomes and past
//! probabilities,
//!
//! ```text
//!   y_{i,t} = I(u_{i,t} ≤ p_{i,t}),   u_{i,t} ~ i.i.d. U[0,1],
//!   p_t     = g(p_{t-1},…,p_{t-s}, y_{t-1},…,y_{t-q}),
//! ```
//!
//! with `g` drawn from a fixed catalog of linear, logit, nonlinear,
//! interactive, and network families. The crate provides:
//!
//! - [`model`]: model families, probability updates, unconditional means,
//!   and contraction (spectral-radius / aggregate-Lipschitz) diagnostics;
//! - [`sim`]: deterministic counter-seeded simulation, coupled trajectories
//!   for ergodicity diagnostics, and stationary moments of Σᵢ pᵢ;
//! - [`mle`]: binary likelihood with recursive probability filtering,
//!   analytic score, Fisher information, constrained quasi-Newton fitting,
//!   and one-step-ahead forecast benchmarks;
//! - [`poisson`]: the limiting Poisson autoregression (intensity filters,
//!   likelihood, MLE, and the Poisson → binary calibration map);
//! - [`agg`]: rare-events scaling experiments: exact Poisson-binomial
//!   PMFs, total-variation distances to the matched Poisson, regular
//!   network builders, and desk-scale limit diagnostics;
//! - [`pipeline`]: the empirical pipeline from raw return panels to binary
//!   tail-event panels (factor OLS residuals, quantile thresholds, splits).
//!
//! All types are immutable after construction and every operation is a pure
//! function of its inputs; panels regenerate bit-exactly from `(spec, seed)`
//! for any worker count.

pub mod agg;
pub mod error;
pub mod mle;
pub mod model;
pub mod panel;
pub mod pipeline;
pub mod poisson;
pub mod rng;
pub mod sim;

pub use error::{GabError, Result};
pub use model::{eval_g, validate_spec, ModelSpec, PanelState};
pub use panel::BinaryMatrix;
pub use poisson::{CountSeries, PoissonParams};
pub use sim::{SimConfig, Trajectory};
