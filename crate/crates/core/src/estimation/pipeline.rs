//! Identification pipeline: verdict, least squares, optional re-simulation.

use log::{debug, warn};
use serde::{Deserialize, Serialize};

use crate::dynamics::{simulate, ModelParams, SeirParams, SimOptions, SirParams};
use crate::error::{Error, Result};
use crate::graph::Network;
use crate::state::Trajectory;

use super::identifiability::{
    check_identifiability_seir, check_identifiability_sir_hetero, check_identifiability_sir_homog,
    IdentifiabilityVerdict, Witnesses,
};
use super::regression::{build_regression_seir, build_regression_sir_hetero, build_regression_sir_homog};
use super::{solve_least_squares, LeastSquaresFit, Scope};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimateTarget {
    SirHomogeneous,
    SirHeterogeneous,
    SeirHomogeneous,
    SeirHeterogeneous,
}

impl EstimateTarget {
    pub fn is_heterogeneous(self) -> bool {
        matches!(self, EstimateTarget::SirHeterogeneous | EstimateTarget::SeirHeterogeneous)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorMetric {
    #[default]
    Mae,
    Rmse,
}

#[derive(Debug, Clone, Copy)]
pub struct PipelineOptions<'a> {
    pub resimulate: bool,
    pub metric: ErrorMetric,
    /// Compared against the re-simulated trajectory; defaults to the input.
    pub reference: Option<&'a Trajectory>,
}

impl Default for PipelineOptions<'_> {
    fn default() -> Self {
        Self {
            resimulate: true,
            metric: ErrorMetric::Mae,
            reference: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParameterSet {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta_e: Option<f64>,
    pub beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub gamma: f64,
    pub rank: usize,
    pub residual_norm: f64,
}

impl ParameterSet {
    fn from_fit(node: Option<usize>, seir: bool, fit: &LeastSquaresFit) -> Self {
        let x = &fit.estimates;
        let (beta_e, beta, sigma, gamma) = if seir {
            (Some(x[0]), x[1], Some(x[2]), x[3])
        } else {
            (None, x[0], None, x[1])
        };
        Self {
            node,
            beta_e,
            beta,
            sigma,
            gamma,
            rank: fit.rank,
            residual_norm: fit.residual_norm,
        }
    }

    /// Estimates in column order.
    pub fn values(&self) -> Vec<f64> {
        match (self.beta_e, self.sigma) {
            (Some(be), Some(s)) => vec![be, self.beta, s, self.gamma],
            _ => vec![self.beta, self.gamma],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeVerdict {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub node: Option<usize>,
    pub identifiable: bool,
    pub witnesses: Witnesses,
    pub failed_conditions: Vec<String>,
    pub derived_condition: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryErrors {
    pub metric: ErrorMetric,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub e: Option<f64>,
    pub p: f64,
    pub r: f64,
}

impl TrajectoryErrors {
    pub fn max(&self) -> f64 {
        self.e.unwrap_or(0.0).max(self.p).max(self.r)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub kind: EstimateTarget,
    pub estimates: Vec<ParameterSet>,
    /// Euclidean norm over all systems.
    pub residual_norm: f64,
    /// Smallest rank over all systems.
    pub rank: usize,
    pub columns: usize,
    pub identifiable: bool,
    pub witnesses: Vec<NodeVerdict>,
    pub failed_conditions: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub trajectory_errors: Option<TrajectoryErrors>,
}

impl EstimateReport {
    /// Parameters for re-simulating `n` nodes with step `h`.
    pub fn model_params(&self, n: usize, h: f64) -> Result<ModelParams> {
        let per_node = |f: &dyn Fn(&ParameterSet) -> f64| -> Result<Vec<f64>> {
            if self.kind.is_heterogeneous() {
                if self.estimates.len() != n {
                    return Err(Error::DimensionMismatch {
                        what: "per-node estimates",
                        expected: n,
                        found: self.estimates.len(),
                    });
                }
                Ok(self.estimates.iter().map(f).collect())
            } else {
                Ok(vec![f(&self.estimates[0]); n])
            }
        };
        Ok(match self.kind {
            EstimateTarget::SirHomogeneous | EstimateTarget::SirHeterogeneous => ModelParams::Sir(SirParams {
                beta: per_node(&|p| p.beta)?,
                gamma: per_node(&|p| p.gamma)?,
                h,
            }),
            EstimateTarget::SeirHomogeneous | EstimateTarget::SeirHeterogeneous => {
                ModelParams::Seir(SeirParams {
                    beta_e: per_node(&|p| p.beta_e.unwrap_or(0.0))?,
                    beta: per_node(&|p| p.beta)?,
                    sigma: per_node(&|p| p.sigma.unwrap_or(0.0))?,
                    gamma: per_node(&|p| p.gamma)?,
                    h,
                    layer_beta_e: Vec::new(),
                    layer_beta: Vec::new(),
                })
            }
        })
    }
}

fn node_verdict(node: Option<usize>, v: IdentifiabilityVerdict) -> NodeVerdict {
    NodeVerdict {
        node,
        identifiable: v.identifiable,
        witnesses: v.witnesses,
        failed_conditions: v.failed_conditions,
        derived_condition: v.derived_condition,
    }
}

fn compartment_error(metric: ErrorMetric, pairs: impl Iterator<Item = (f64, f64)>) -> f64 {
    let (mut acc, mut count) = (0.0, 0usize);
    for (a, b) in pairs {
        let d = a - b;
        acc += match metric {
            ErrorMetric::Mae => d.abs(),
            ErrorMetric::Rmse => d * d,
        };
        count += 1;
    }
    if count == 0 {
        return 0.0;
    }
    match metric {
        ErrorMetric::Mae => acc / count as f64,
        ErrorMetric::Rmse => (acc / count as f64).sqrt(),
    }
}

/// Per-compartment error between two trajectories of equal shape.
pub fn trajectory_errors(a: &Trajectory, b: &Trajectory, metric: ErrorMetric) -> Result<TrajectoryErrors> {
    if a.len() != b.len() || a.n() != b.n() || a.kind() != b.kind() {
        return Err(Error::DimensionMismatch {
            what: "compared trajectory",
            expected: a.len() * a.n(),
            found: b.len() * b.n(),
        });
    }
    let pairs = |f: fn(&crate::state::EpidemicState) -> &[f64]| {
        a.states()
            .iter()
            .zip(b.states())
            .flat_map(move |(x, y)| f(x).iter().copied().zip(f(y).iter().copied()))
    };
    let e = match a.kind() {
        crate::state::ModelKind::Seir => Some(compartment_error(
            metric,
            pairs(|s| s.e.as_deref().unwrap_or(&[])),
        )),
        crate::state::ModelKind::Sir => None,
    };
    Ok(TrajectoryErrors {
        metric,
        e,
        p: compartment_error(metric, pairs(|s| &s.p)),
        r: compartment_error(metric, pairs(|s| &s.r)),
    })
}

/// Checks identifiability, solves the least-squares problem(s) and, when the
/// data are identifiable, re-simulates from the first measured state.
pub fn estimate_pipeline(
    traj: &Trajectory,
    net: &Network,
    target: EstimateTarget,
    opts: &PipelineOptions<'_>,
) -> Result<EstimateReport> {
    let seir = matches!(target, EstimateTarget::SeirHomogeneous | EstimateTarget::SeirHeterogeneous);
    let mut estimates = Vec::new();
    let mut witnesses = Vec::new();
    let mut failed = Vec::new();
    let nodes: Vec<Option<usize>> = if target.is_heterogeneous() {
        (0..net.n()).map(Some).collect()
    } else {
        vec![None]
    };
    for node in nodes {
        let (verdict, system) = match (target, node) {
            (EstimateTarget::SirHomogeneous, _) => (
                check_identifiability_sir_homog(traj, net)?,
                build_regression_sir_homog(traj, net)?,
            ),
            (EstimateTarget::SirHeterogeneous, Some(i)) => (
                check_identifiability_sir_hetero(traj, net, i)?,
                build_regression_sir_hetero(traj, net, i)?,
            ),
            (EstimateTarget::SeirHomogeneous, _) => (
                check_identifiability_seir(traj, net, Scope::Global)?,
                build_regression_seir(traj, net, Scope::Global)?,
            ),
            (EstimateTarget::SeirHeterogeneous, Some(i)) => (
                check_identifiability_seir(traj, net, Scope::Node(i))?,
                build_regression_seir(traj, net, Scope::Node(i))?,
            ),
            _ => unreachable!("heterogeneous targets iterate over nodes"),
        };
        let fit = solve_least_squares(&system)?;
        if verdict.identifiable != fit.is_unique() {
            debug!(
                "verdict {} but rank {} of {} (node {:?})",
                verdict.identifiable, fit.rank, fit.columns, node
            );
        }
        match node {
            Some(i) => failed.extend(verdict.failed_conditions.iter().map(|c| format!("node {i}: {c}"))),
            None => failed.extend(verdict.failed_conditions.iter().cloned()),
        }
        estimates.push(ParameterSet::from_fit(node, seir, &fit));
        witnesses.push(node_verdict(node, verdict));
    }

    let identifiable = witnesses.iter().all(|w| w.identifiable);
    let mut report = EstimateReport {
        kind: target,
        residual_norm: estimates.iter().map(|e| e.residual_norm.powi(2)).sum::<f64>().sqrt(),
        rank: estimates.iter().map(|e| e.rank).min().unwrap_or(0),
        columns: if seir { 4 } else { 2 },
        estimates,
        identifiable,
        witnesses,
        failed_conditions: failed,
        trajectory_errors: None,
    };

    if opts.resimulate && identifiable {
        let params = report.model_params(net.n(), traj.h())?;
        let base = Network::new(net.adjacency().clone())?;
        match simulate(&traj.states()[0], &params, &base, traj.transitions(), &SimOptions::lenient()) {
            Ok(sim) => {
                let reference = opts.reference.unwrap_or(traj);
                report.trajectory_errors = Some(trajectory_errors(&sim, reference, opts.metric)?);
            }
            Err(err) => warn!("re-simulation failed: {err}"),
        }
    }
    Ok(report)
}
