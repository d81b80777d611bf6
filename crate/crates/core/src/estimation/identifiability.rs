//! Data conditions under which the regression matrix has full column rank.
//!
//! Each check searches the stored steps `k = 0..T-1` step-major, then by
//! node, and reports the first site satisfying each condition.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Network;
use crate::state::{ModelKind, Trajectory};

use super::regression::{require_kind, require_node};
use super::{g_value, Field, Scope};

/// Entries with magnitude at most this count as zero.
pub const NONZERO_TOLERANCE: f64 = 1e-12;
/// A 2x2 determinant counts as nonzero above this times `max(1, scale)`.
pub const BILINEAR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Site {
    pub node: usize,
    pub k: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Witnesses {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub infected: Option<Site>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub network_term: Option<Site>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exposed: Option<Site>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bilinear: Option<(Site, Site)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentifiabilityVerdict {
    pub identifiable: bool,
    pub scope: Scope,
    pub witnesses: Witnesses,
    pub failed_conditions: Vec<String>,
    /// Set for the per-node SIR checks, derived by analogy with the
    /// shared-rate case.
    pub derived_condition: bool,
}

fn nonzero(x: f64) -> bool {
    x.abs() > NONZERO_TOLERANCE
}

fn sites(scope: Scope, n: usize, t: usize) -> Vec<Site> {
    let nodes: Vec<usize> = match scope {
        Scope::Global => (0..n).collect(),
        Scope::Node(i) => vec![i],
    };
    (0..t)
        .flat_map(|k| nodes.iter().map(move |&node| Site { node, k }))
        .collect()
}

fn first_site(sites: &[Site], mut pred: impl FnMut(Site) -> Result<bool>) -> Result<Option<Site>> {
    for &site in sites {
        if pred(site)? {
            return Ok(Some(site));
        }
    }
    Ok(None)
}

fn check_sizes(traj: &Trajectory, net: &Network) -> Result<()> {
    if traj.n() != net.n() {
        return Err(Error::DimensionMismatch {
            what: "trajectory",
            expected: net.n(),
            found: traj.n(),
        });
    }
    Ok(())
}

fn sir_verdict(traj: &Trajectory, net: &Network, scope: Scope, derived: bool) -> Result<IdentifiabilityVerdict> {
    require_kind(traj, ModelKind::Sir)?;
    check_sizes(traj, net)?;
    let t = traj.transitions();
    let sites = sites(scope, net.n(), t);
    let states = traj.states();
    let mut failed = Vec::new();
    if t == 0 {
        failed.push("horizon".to_string());
    }
    let infected = first_site(&sites, |s| Ok(nonzero(states[s.k].p[s.node])))?;
    if infected.is_none() {
        failed.push("infected_nonzero".to_string());
    }
    let network_term = first_site(&sites, |s| Ok(nonzero(g_value(traj, net, s.node, s.k, Field::Infected)?)))?;
    if network_term.is_none() {
        failed.push("network_term_nonzero".to_string());
    }
    Ok(IdentifiabilityVerdict {
        identifiable: failed.is_empty(),
        scope,
        witnesses: Witnesses {
            infected,
            network_term,
            ..Witnesses::default()
        },
        failed_conditions: failed,
        derived_condition: derived,
    })
}

/// Shared-rate SIR: some `p_i^k != 0` and some `s_i^k (A p^k)_i != 0`.
pub fn check_identifiability_sir_homog(traj: &Trajectory, net: &Network) -> Result<IdentifiabilityVerdict> {
    sir_verdict(traj, net, Scope::Global, false)
}

/// Per-node SIR at node `i`: the shared-rate conditions restricted to `i`.
/// This is a derived condition (the rank argument for a `2T x 2` system).
pub fn check_identifiability_sir_hetero(traj: &Trajectory, net: &Network, i: usize) -> Result<IdentifiabilityVerdict> {
    require_node(net, i)?;
    sir_verdict(traj, net, Scope::Node(i), true)
}

/// SEIR conditions. Global scope needs `n > 1`; node scope needs `T > 1`,
/// which is reported as the `horizon` condition.
pub fn check_identifiability_seir(traj: &Trajectory, net: &Network, scope: Scope) -> Result<IdentifiabilityVerdict> {
    require_kind(traj, ModelKind::Seir)?;
    check_sizes(traj, net)?;
    let t = traj.transitions();
    let mut failed = Vec::new();
    match scope {
        Scope::Global => {
            if net.n() < 2 {
                return Err(Error::Precondition(
                    "shared-rate SEIR identifiability needs at least two nodes".into(),
                ));
            }
            if t == 0 {
                failed.push("horizon".to_string());
            }
        }
        Scope::Node(i) => {
            require_node(net, i)?;
            if t < 2 {
                failed.push("horizon".to_string());
            }
        }
    }
    let sites = sites(scope, net.n(), t);
    let states = traj.states();

    let infected = first_site(&sites, |s| Ok(nonzero(states[s.k].p[s.node])))?;
    if infected.is_none() {
        failed.push("infected_nonzero".to_string());
    }
    let exposed = first_site(&sites, |s| Ok(nonzero(states[s.k].exposed()?[s.node])))?;
    if exposed.is_none() {
        failed.push("exposed_nonzero".to_string());
    }

    let g: Vec<(f64, f64)> = sites
        .iter()
        .map(|s| {
            Ok((
                g_value(traj, net, s.node, s.k, Field::Exposed)?,
                g_value(traj, net, s.node, s.k, Field::Infected)?,
            ))
        })
        .collect::<Result<_>>()?;
    let mut bilinear = None;
    'outer: for a in 0..g.len() {
        let (ea, pa) = g[a];
        if ea == 0.0 && pa == 0.0 {
            continue;
        }
        for b in a + 1..g.len() {
            let (eb, pb) = g[b];
            let (left, right) = (ea * pb, eb * pa);
            let scale = left.abs().max(right.abs());
            if (left - right).abs() > BILINEAR_TOLERANCE * scale.max(1.0) {
                bilinear = Some((sites[a], sites[b]));
                break 'outer;
            }
        }
    }
    if bilinear.is_none() {
        failed.push("bilinear_independence".to_string());
    }

    Ok(IdentifiabilityVerdict {
        identifiable: failed.is_empty(),
        scope,
        witnesses: Witnesses {
            infected,
            exposed,
            bilinear,
            ..Witnesses::default()
        },
        failed_conditions: failed,
        derived_condition: false,
    })
}
