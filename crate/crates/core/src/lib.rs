//! Discrete-time networked SIR/SEIR models: simulation, spectral
//! convergence diagnostics and least-squares parameter identification.

pub mod dynamics;
pub mod error;
pub mod estimation;
pub mod graph;
pub mod linalg;
pub mod spectral;
pub mod state;

pub use dynamics::{
    check_assumption_seir, check_assumption_sir, seir_step, seir_step_matrix, seir_step_multilayer, simulate,
    sir_step, sir_step_matrix, AssumptionReport, Condition, ModelParams, SeirParams, SimOptions, SirParams,
    Violation,
};
pub use error::{Error, Result};
pub use nalgebra::{DMatrix, DVector};
pub use estimation::{
    apply_noise, build_regression_seir, build_regression_sir_hetero, build_regression_sir_homog,
    check_identifiability_seir, check_identifiability_sir_hetero, check_identifiability_sir_homog,
    estimate_pipeline, g_value, solve_least_squares, EstimateReport, EstimateTarget, ErrorMetric, Field,
    IdentifiabilityVerdict, LeastSquaresFit, MeasuredTrajectory, NoiseModel, NoiseScale, PipelineOptions,
    RegressionSystem, Scope, Site, SystemKind, Witnesses,
};
pub use graph::{is_irreducible, load_labels, load_matrix, load_network, strongly_connected_components, Network};
pub use linalg::{min_norm_least_squares, LeastSquares};
pub use spectral::{
    build_spreading_matrix, convergence_diagnostics, convergence_diagnostics_with, dominant_eigenvalue,
    dominant_eigenvalue_from, ConvergenceReport, DiagnosticsConfig, PerronEigen, SpreadingMatrix,
};
pub use state::{EpidemicState, ModelKind, Trajectory, SIMPLEX_TOLERANCE};
