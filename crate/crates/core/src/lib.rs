//! Compressed-sensing quantum state tomography.
//!
//! The crate simulates Pauli-basis count data from `n`-qubit states,
//! reconstructs low-rank density matrices by trace minimization inside a
//! data-fit ball, selects the ball radius from multinomial noise statistics
//! or cross-validation, and quantifies results by parametric bootstrap and
//! direct fidelity estimation.
//!
//! ```
//! use cstomo::{ghz_state, fidelity, sample_counts, reconstruct, epsilon_hat};
//! use cstomo::{RandomSource, SettingsPlan, SolverConfig};
//!
//! let truth = ghz_state(2).unwrap();
//! let plan = SettingsPlan::complete(2, 1000).unwrap();
//! let data = sample_counts(&truth, &plan, RandomSource::new(1)).unwrap();
//! let result = reconstruct(&data, epsilon_hat(&data).unwrap(), &SolverConfig::default()).unwrap();
//! assert!(fidelity(&result.estimate, &truth).unwrap() > 0.95);
//! ```

// `!(x > 0.0)` guards reject NaN along with nonpositive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod data;
pub mod dfe;
pub mod error;
pub mod linalg;
pub mod measurement;
pub mod pauli;
pub mod rng;
pub mod selection;
pub mod solver;
pub mod state;

pub use analysis::{
    bootstrap_fidelity, surrogate_state, sweep_grid, sweep_settings, BootstrapReport, EpsilonRule,
    SweepCell, SweepOptions, SweepReport, SURROGATE_DEPHASING,
};
pub use data::{draw_settings, restrict_dataset, sample_counts, split_folds, Dataset, Record};
pub use dfe::{
    direct_fidelity, direct_fidelity_with, estimable_labels, ghz_pauli_decomposition,
    pauli_coefficients, required_settings, FidelityEstimate, PauliCoefficients, SettingSelection,
};
pub use error::{Result, TomoError};
pub use measurement::{
    apply_sensing, apply_sensing_adjoint, born_probabilities, eigenprojectors, enumerate_settings,
    ProjectorSet, SensingOperator, SettingsPlan,
};
pub use pauli::{Pauli, PauliLabel, PauliWord};
pub use rng::RandomSource;
pub use selection::{
    cross_validate, epsilon_hat, expected_noise, prediction_error, test_error, CrossValCell,
    CrossValConfig, CrossValReport, Prediction,
};
pub use solver::{
    check_feasible, mle_estimate, reconstruct, FeasibilityReport, MleConfig, MleResult,
    ReconstructionResult, SolverConfig, SolverStatus,
};
pub use state::{
    dephased_ghz, fidelity, ghz_state, project_psd, purity, DensityMatrix, HermitianMatrix,
    Tolerances,
};
