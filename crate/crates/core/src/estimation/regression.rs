//! Linear regression systems `Q theta = Delta` built from a trajectory.
//!
//! Rows are stacked step-major then node-major within each block. SIR
//! systems have columns `(beta, gamma)`; SEIR systems `(beta_e, beta,
//! sigma, gamma)`.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::state::{ModelKind, Trajectory};

use super::{g_value, Field, Scope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "node", rename_all = "snake_case")]
pub enum SystemKind {
    SirHomogeneous,
    SirHeterogeneous(usize),
    SeirHomogeneous,
    SeirHeterogeneous(usize),
}

impl SystemKind {
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            SystemKind::SirHomogeneous | SystemKind::SirHeterogeneous(_) => &["beta", "gamma"],
            SystemKind::SeirHomogeneous | SystemKind::SeirHeterogeneous(_) => {
                &["beta_e", "beta", "sigma", "gamma"]
            }
        }
    }

    pub fn node(self) -> Option<usize> {
        match self {
            SystemKind::SirHeterogeneous(i) | SystemKind::SeirHeterogeneous(i) => Some(i),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSystem {
    pub q: DMatrix<f64>,
    pub delta: DVector<f64>,
    pub kind: SystemKind,
    /// Transitions used.
    pub t: usize,
}

impl RegressionSystem {
    pub fn columns(&self) -> usize {
        self.q.ncols()
    }

    /// `Q theta - Delta`.
    pub fn residual(&self, theta: &DVector<f64>) -> DVector<f64> {
        &self.q * theta - &self.delta
    }
}

pub(crate) fn require_kind(traj: &Trajectory, kind: ModelKind) -> Result<()> {
    if traj.kind() != kind {
        return Err(Error::WrongModel {
            expected: kind.name(),
            found: traj.kind().name(),
        });
    }
    Ok(())
}

pub(crate) fn require_node(net: &Network, node: usize) -> Result<()> {
    if node >= net.n() {
        return Err(Error::IndexOutOfRange { index: node, n: net.n() });
    }
    Ok(())
}

fn require_transition(traj: &Trajectory, net: &Network) -> Result<usize> {
    if traj.len() < 2 {
        return Err(Error::TrajectoryTooShort {
            len: traj.len(),
            required: 2,
        });
    }
    if traj.n() != net.n() {
        return Err(Error::DimensionMismatch {
            what: "trajectory",
            expected: net.n(),
            found: traj.n(),
        });
    }
    Ok(traj.transitions())
}

fn sir_system(traj: &Trajectory, net: &Network, nodes: &[usize], kind: SystemKind) -> Result<RegressionSystem> {
    require_kind(traj, ModelKind::Sir)?;
    let t = require_transition(traj, net)?;
    let h = traj.h();
    let states = traj.states();
    let block = nodes.len() * t;
    let mut q = DMatrix::zeros(2 * block, 2);
    let mut delta = DVector::zeros(2 * block);
    let mut row = 0;
    for k in 0..t {
        for &i in nodes {
            let (now, next) = (&states[k], &states[k + 1]);
            q[(row, 0)] = h * g_value(traj, net, i, k, Field::Infected)?;
            q[(row, 1)] = -h * now.p[i];
            q[(block + row, 1)] = h * now.p[i];
            delta[row] = next.p[i] - now.p[i];
            delta[block + row] = next.r[i] - now.r[i];
            row += 1;
        }
    }
    Ok(RegressionSystem { q, delta, kind, t })
}

/// Shared-rate SIR system (`2nT x 2`).
pub fn build_regression_sir_homog(traj: &Trajectory, net: &Network) -> Result<RegressionSystem> {
    let nodes: Vec<usize> = (0..net.n()).collect();
    sir_system(traj, net, &nodes, SystemKind::SirHomogeneous)
}

/// Per-node SIR system for node `i` (`2T x 2`).
pub fn build_regression_sir_hetero(traj: &Trajectory, net: &Network, i: usize) -> Result<RegressionSystem> {
    require_node(net, i)?;
    sir_system(traj, net, &[i], SystemKind::SirHeterogeneous(i))
}

/// SEIR system: `3nT x 4` for [`Scope::Global`], `3T x 4` for a node.
pub fn build_regression_seir(traj: &Trajectory, net: &Network, scope: Scope) -> Result<RegressionSystem> {
    require_kind(traj, ModelKind::Seir)?;
    let (nodes, kind): (Vec<usize>, _) = match scope {
        Scope::Global => ((0..net.n()).collect(), SystemKind::SeirHomogeneous),
        Scope::Node(i) => {
            require_node(net, i)?;
            (vec![i], SystemKind::SeirHeterogeneous(i))
        }
    };
    let t = require_transition(traj, net)?;
    let h = traj.h();
    let states = traj.states();
    let block = nodes.len() * t;
    let mut q = DMatrix::zeros(3 * block, 4);
    let mut delta = DVector::zeros(3 * block);
    let mut row = 0;
    for k in 0..t {
        for &i in &nodes {
            let (now, next) = (&states[k], &states[k + 1]);
            let (e_now, e_next) = (now.exposed()?[i], next.exposed()?[i]);
            // exposed rows
            q[(row, 0)] = h * g_value(traj, net, i, k, Field::Exposed)?;
            q[(row, 1)] = h * g_value(traj, net, i, k, Field::Infected)?;
            q[(row, 2)] = -h * e_now;
            delta[row] = e_next - e_now;
            // infected rows
            q[(block + row, 2)] = h * e_now;
            q[(block + row, 3)] = -h * now.p[i];
            delta[block + row] = next.p[i] - now.p[i];
            // removed rows
            q[(2 * block + row, 3)] = h * now.p[i];
            delta[2 * block + row] = next.r[i] - now.r[i];
            row += 1;
        }
    }
    Ok(RegressionSystem { q, delta, kind, t })
}
