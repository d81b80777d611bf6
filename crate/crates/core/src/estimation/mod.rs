//! Parameter identification from trajectories.
//!
//! Regression assembly, identifiability predicates, measurement noise and
//! the end-to-end estimate pipeline. Transportation layers are not part of
//! the regression model; only the base adjacency enters `g`.

mod identifiability;
mod noise;
mod pipeline;
mod regression;

pub use identifiability::{
    check_identifiability_seir, check_identifiability_sir_hetero, check_identifiability_sir_homog,
    IdentifiabilityVerdict, Site, Witnesses, BILINEAR_TOLERANCE, NONZERO_TOLERANCE,
};
pub use noise::{apply_noise, MeasuredTrajectory, NoiseModel, NoiseScale};
pub use pipeline::{
    estimate_pipeline, trajectory_errors, ErrorMetric, EstimateReport, EstimateTarget, NodeVerdict, ParameterSet, PipelineOptions,
    TrajectoryErrors,
};
pub use regression::{
    build_regression_seir, build_regression_sir_hetero, build_regression_sir_homog, RegressionSystem, SystemKind,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{weighted_row_sum, Network};
use crate::linalg::min_norm_least_squares;
use crate::state::Trajectory;

/// Relative pivot threshold used by [`solve_least_squares`].
pub const RANK_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scope {
    Global,
    Node(usize),
}

/// Compartment fed into the network term.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Field {
    Exposed,
    Infected,
}

/// `s_i^k * sum_j a_ij x_j^k`, with `k` indexing the stored states.
pub fn g_value(traj: &Trajectory, net: &Network, i: usize, k: usize, field: Field) -> Result<f64> {
    let state = traj.states().get(k).ok_or(Error::StepOutOfRange { k, len: traj.len() })?;
    if i >= net.n() || i >= state.n() {
        return Err(Error::IndexOutOfRange { index: i, n: net.n().min(state.n()) });
    }
    let x = match field {
        Field::Exposed => state.exposed()?,
        Field::Infected => &state.p,
    };
    Ok(state.s[i] * weighted_row_sum(net.adjacency(), i, x))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeastSquaresFit {
    pub estimates: Vec<f64>,
    pub rank: usize,
    pub columns: usize,
    pub residual_norm: f64,
}

impl LeastSquaresFit {
    pub fn is_unique(&self) -> bool {
        self.rank == self.columns
    }
}

/// Minimum-norm least-squares solution of a regression system.
pub fn solve_least_squares(system: &RegressionSystem) -> Result<LeastSquaresFit> {
    let ls = min_norm_least_squares(&system.q, &system.delta, RANK_TOLERANCE)?;
    Ok(LeastSquaresFit {
        estimates: ls.solution.iter().copied().collect(),
        rank: ls.rank,
        columns: system.columns(),
        residual_norm: ls.residual_norm,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::state::EpidemicState;
    use nalgebra::{DMatrix, DVector};

    #[test]
    fn g_uses_row_orientation() {
        // node 0 is influenced by node 1 only
        let net = Network::new(DMatrix::from_row_slice(2, 2, &[0.0, 2.0, 0.0, 0.0])).unwrap();
        let st = EpidemicState::sir(vec![0.5, 0.9], vec![0.1, 0.1], vec![0.4, 0.0]).unwrap();
        let traj = Trajectory::new(vec![st], 0.1).unwrap();
        assert!((g_value(&traj, &net, 0, 0, Field::Infected).unwrap() - 0.1).abs() < 1e-16);
        assert_eq!(g_value(&traj, &net, 1, 0, Field::Infected).unwrap(), 0.0);
        assert!(g_value(&traj, &net, 0, 0, Field::Exposed).is_err());
        assert!(g_value(&traj, &net, 0, 1, Field::Infected).is_err());
    }

    #[test]
    fn solve_reports_rank() {
        let system = RegressionSystem {
            q: DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]),
            delta: DVector::from_vec(vec![1.0, 2.0, 3.0]),
            kind: SystemKind::SirHomogeneous,
            t: 1,
        };
        let fit = solve_least_squares(&system).unwrap();
        assert!(fit.is_unique());
        assert!((fit.estimates[0] - 1.0).abs() < 1e-14);
        assert!((fit.estimates[1] - 2.0).abs() < 1e-14);
        assert!(fit.residual_norm < 1e-14);
    }
}
