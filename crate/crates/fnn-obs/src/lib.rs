//! Local observability analysis for two-layer ReLU feedforward networks.
//!
//! The weights of a two-layer ReLU network are treated as the state of a
//! static dynamical system observed through the network output. This crate
//! decides whether a weight state is locally observable under a given input
//! sequence, constructs persistently exciting input sequences for it, and
//! generates verified neighborhoods of states excited by the same sequence:
//!
//! - [`fnn`] — the forward map, ReLU derivative, and activation indicators;
//! - [`observability`] — the Jacobian of the observability mapping, its
//!   `T_u(T_χ⊗I_m)` factorization, and the numerical rank condition;
//! - [`input_design`] — design templates `(T, B)` and the exciting sequence
//!   `U = BW⁻¹` for square, non-singular weight matrices;
//! - [`neighborhood`] — gain-driven sampling of perturbed states `W + δ`
//!   that remain distinguishable under the same sequence;
//! - [`oracle`] — brute-force grid sweeps, activation-pattern censuses, and
//!   the indistinguishable-witness construction for single-input networks;
//! - [`config`], [`experiment`], [`report`] — the configuration, workflow,
//!   and emission layer shared by the `fnn-obs` binary.
//!
//! Each major capability has a runnable example under `examples/`; the
//! built-in numerical experiment is `examples/reproduce_experiment.rs`.
//!
//! ```
//! use fnn_obs::config::ExperimentConfig;
//! use fnn_obs::input_design::design_input;
//! use fnn_obs::observability::rank_condition;
//!
//! let cfg = ExperimentConfig::default();
//! let state = cfg.weight_state().unwrap();
//! let inputs = design_input(&state, &cfg.template().unwrap()).unwrap();
//! let check = rank_condition(&state, &inputs).unwrap();
//! assert!(check.holds);
//! ```

pub mod config;
pub mod error;
pub mod experiment;
pub mod fnn;
pub mod input_design;
pub mod neighborhood;
pub mod observability;
pub mod oracle;
pub mod report;

pub use config::{ExperimentConfig, OutputFormat};
pub use error::{Error, Result};
pub use fnn::{forward, output_sequence, InputSequence, WeightState};
pub use input_design::{canonical_template, design_input, validate_template, DesignTemplate};
pub use neighborhood::{generate_neighborhood, NeighborSample, Neighborhood};
pub use observability::{jacobian, rank_condition, JacobianBundle, RankCheck};
pub use oracle::{example1_oracle, pattern_census, sweep_distinguish, SweepGrid};
