//! Discrete-time networked SIR and SEIR dynamics.
//!
//! SIR, per node `i`:
//!
//! ```text
//! s' = s - h s beta_i sum_j a_ij p_j
//! p' = p + h (s beta_i sum_j a_ij p_j - gamma_i p)
//! r' = r + h gamma_i p
//! ```
//!
//! SEIR replaces the infection pressure with
//! `iota_i = beta_e_i sum_j a_ij e_j + beta_i sum_j a_ij p_j` and routes new
//! infections through the exposed compartment, which empties into `p` at
//! rate `sigma_i`. Transportation layers add their own pressure terms to
//! `iota_i`.
//!
//! Each model also has a matrix-form stepper; the two forms are kept as
//! independent code paths so they can check each other.

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{weighted_row_sum, Network};
use crate::state::{EpidemicState, ModelKind, Trajectory, SIMPLEX_TOLERANCE};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SirParams {
    pub beta: Vec<f64>,
    pub gamma: Vec<f64>,
    pub h: f64,
}

impl SirParams {
    pub fn homogeneous(n: usize, beta: f64, gamma: f64, h: f64) -> Self {
        Self {
            beta: vec![beta; n],
            gamma: vec![gamma; n],
            h,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeirParams {
    pub beta_e: Vec<f64>,
    pub beta: Vec<f64>,
    pub sigma: Vec<f64>,
    pub gamma: Vec<f64>,
    pub h: f64,
    /// Per-layer exposed-driven rates, one n-vector per transportation layer.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layer_beta_e: Vec<Vec<f64>>,
    /// Per-layer infected-driven rates.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub layer_beta: Vec<Vec<f64>>,
}

impl SeirParams {
    pub fn homogeneous(n: usize, beta_e: f64, beta: f64, sigma: f64, gamma: f64, h: f64) -> Self {
        Self {
            beta_e: vec![beta_e; n],
            beta: vec![beta; n],
            sigma: vec![sigma; n],
            gamma: vec![gamma; n],
            h,
            layer_beta_e: Vec::new(),
            layer_beta: Vec::new(),
        }
    }

    pub fn with_layer(mut self, beta_e: Vec<f64>, beta: Vec<f64>) -> Self {
        self.layer_beta_e.push(beta_e);
        self.layer_beta.push(beta);
        self
    }

    pub fn layer_count(&self) -> usize {
        self.layer_beta_e.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "lowercase")]
pub enum ModelParams {
    Sir(SirParams),
    Seir(SeirParams),
}

impl ModelParams {
    pub fn kind(&self) -> ModelKind {
        match self {
            ModelParams::Sir(_) => ModelKind::Sir,
            ModelParams::Seir(_) => ModelKind::Seir,
        }
    }

    pub fn h(&self) -> f64 {
        match self {
            ModelParams::Sir(p) => p.h,
            ModelParams::Seir(p) => p.h,
        }
    }

    pub fn check(&self, net: &Network) -> Result<AssumptionReport> {
        match self {
            ModelParams::Sir(p) => check_assumption_sir(p, net),
            ModelParams::Seir(p) => check_assumption_seir(p, net),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    /// `0 < h gamma_i < 1`
    Recovery,
    /// `0 < h sigma_i <= 1`
    Incubation,
    /// `h * (rates) * sum_j a_ij < 1`
    Transmission,
    /// rates must be nonnegative and finite
    Sign,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Violation {
    pub node: usize,
    pub condition: Condition,
    pub quantity: String,
    pub value: f64,
    /// Signed distance to the admissible region; negative when violated.
    pub margin: f64,
    pub requirement: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "node {}: {} = {} violates {} (margin {:.3e})",
            self.node, self.quantity, self.value, self.requirement, self.margin
        )
    }
}

/// Every violated well-posedness inequality; empty means well-posed.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub violations: Vec<Violation>,
}

impl AssumptionReport {
    pub fn is_well_posed(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn into_result(self) -> Result<()> {
        if self.is_well_posed() {
            Ok(())
        } else {
            Err(Error::Assumption(self))
        }
    }

    fn open_unit(&mut self, node: usize, condition: Condition, quantity: &str, value: f64) {
        // 0 < value < 1
        let margin = value.min(1.0 - value);
        if !(value > 0.0 && value < 1.0) {
            self.violations.push(Violation {
                node,
                condition,
                quantity: quantity.to_string(),
                value,
                margin: if margin.is_nan() { f64::NEG_INFINITY } else { margin },
                requirement: "0 < x < 1".into(),
            });
        }
    }

    fn half_open_unit(&mut self, node: usize, condition: Condition, quantity: &str, value: f64) {
        // 0 < value <= 1
        let margin = value.min(1.0 - value);
        if !(value > 0.0 && value <= 1.0) {
            self.violations.push(Violation {
                node,
                condition,
                quantity: quantity.to_string(),
                value,
                margin: if margin.is_nan() { f64::NEG_INFINITY } else { margin },
                requirement: "0 < x <= 1".into(),
            });
        }
    }

    fn below_one(&mut self, node: usize, quantity: &str, value: f64) {
        // NaN counts as a violation
        if value.partial_cmp(&1.0) != Some(std::cmp::Ordering::Less) {
            self.violations.push(Violation {
                node,
                condition: Condition::Transmission,
                quantity: quantity.to_string(),
                value,
                margin: if value.is_nan() { f64::NEG_INFINITY } else { 1.0 - value },
                requirement: "x < 1".into(),
            });
        }
    }

    fn nonnegative(&mut self, node: usize, quantity: &str, value: f64) {
        if !(value >= 0.0 && value.is_finite()) {
            self.violations.push(Violation {
                node,
                condition: Condition::Sign,
                quantity: quantity.to_string(),
                value,
                margin: if value.is_nan() { f64::NEG_INFINITY } else { value },
                requirement: "x >= 0".into(),
            });
        }
    }
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  {v}")?;
        }
        Ok(())
    }
}

fn check_param_len(what: &'static str, n: usize, v: &[f64]) -> Result<()> {
    if v.len() != n {
        return Err(Error::DimensionMismatch {
            what,
            expected: n,
            found: v.len(),
        });
    }
    Ok(())
}

pub fn check_assumption_sir(params: &SirParams, net: &Network) -> Result<AssumptionReport> {
    let n = net.n();
    check_param_len("beta", n, &params.beta)?;
    check_param_len("gamma", n, &params.gamma)?;
    let h = params.h;
    let mut report = AssumptionReport::default();
    for i in 0..n {
        report.nonnegative(i, "beta", params.beta[i]);
        report.nonnegative(i, "gamma", params.gamma[i]);
        report.open_unit(i, Condition::Recovery, "h*gamma", h * params.gamma[i]);
        report.below_one(i, "h*beta*sum(a)", h * params.beta[i] * net.row_sum(i));
    }
    Ok(report)
}

fn check_layers(params: &SeirParams, net: &Network) -> Result<()> {
    let n = net.n();
    if params.layer_beta.len() != params.layer_beta_e.len() {
        return Err(Error::DimensionMismatch {
            what: "layer rate sets",
            expected: params.layer_beta_e.len(),
            found: params.layer_beta.len(),
        });
    }
    for (be, b) in params.layer_beta_e.iter().zip(&params.layer_beta) {
        check_param_len("layer beta_e", n, be)?;
        check_param_len("layer beta", n, b)?;
    }
    Ok(())
}

/// SEIR well-posedness. When both the network and the parameters carry
/// transportation layers, the transmission bound covers the summed pressure
/// of the base network and every layer.
pub fn check_assumption_seir(params: &SeirParams, net: &Network) -> Result<AssumptionReport> {
    let n = net.n();
    check_param_len("beta_e", n, &params.beta_e)?;
    check_param_len("beta", n, &params.beta)?;
    check_param_len("sigma", n, &params.sigma)?;
    check_param_len("gamma", n, &params.gamma)?;
    check_layers(params, net)?;
    let use_layers = params.layer_count() > 0 && !net.layers().is_empty();
    if use_layers && params.layer_count() != net.layers().len() {
        return Err(Error::DimensionMismatch {
            what: "transportation layers",
            expected: net.layers().len(),
            found: params.layer_count(),
        });
    }

    let h = params.h;
    let mut report = AssumptionReport::default();
    for i in 0..n {
        report.nonnegative(i, "beta_e", params.beta_e[i]);
        report.nonnegative(i, "beta", params.beta[i]);
        report.nonnegative(i, "sigma", params.sigma[i]);
        report.nonnegative(i, "gamma", params.gamma[i]);
        report.open_unit(i, Condition::Recovery, "h*gamma", h * params.gamma[i]);
        report.half_open_unit(i, Condition::Incubation, "h*sigma", h * params.sigma[i]);
        let mut pressure = (params.beta_e[i] + params.beta[i]) * net.row_sum(i);
        if use_layers {
            for (l, layer) in net.layers().iter().enumerate() {
                report.nonnegative(i, "layer beta_e", params.layer_beta_e[l][i]);
                report.nonnegative(i, "layer beta", params.layer_beta[l][i]);
                pressure +=
                    (params.layer_beta_e[l][i] + params.layer_beta[l][i]) * layer.row(i).sum();
            }
        }
        report.below_one(i, "h*(beta_e+beta)*sum(a)", h * pressure);
    }
    Ok(report)
}

fn expect_kind(state: &EpidemicState, kind: ModelKind) -> Result<()> {
    if state.kind() != kind {
        return Err(Error::WrongModel {
            expected: kind.name(),
            found: state.kind().name(),
        });
    }
    Ok(())
}

fn check_state(state: &EpidemicState, net: &Network, kind: ModelKind) -> Result<()> {
    expect_kind(state, kind)?;
    if state.n() != net.n() {
        return Err(Error::DimensionMismatch {
            what: "state",
            expected: net.n(),
            found: state.n(),
        });
    }
    state.validate(0, SIMPLEX_TOLERANCE)
}

pub(crate) fn sir_step_raw(state: &EpidemicState, params: &SirParams, net: &Network) -> EpidemicState {
    let n = state.n();
    let h = params.h;
    let mut next = EpidemicState {
        s: vec![0.0; n],
        e: None,
        p: vec![0.0; n],
        r: vec![0.0; n],
    };
    for i in 0..n {
        let (s, p, r) = (state.s[i], state.p[i], state.r[i]);
        let infection = params.beta[i] * net.weighted_sum(i, &state.p);
        next.s[i] = s - h * s * infection;
        next.p[i] = p + h * (s * infection - params.gamma[i] * p);
        next.r[i] = r + h * params.gamma[i] * p;
    }
    next
}

/// One SIR step, node by node.
pub fn sir_step(state: &EpidemicState, params: &SirParams, net: &Network) -> Result<EpidemicState> {
    check_assumption_sir(params, net)?.into_result()?;
    check_state(state, net, ModelKind::Sir)?;
    Ok(sir_step_raw(state, params, net))
}

/// One SIR step in matrix form:
/// `p' = p + h((I - P - R) B A - gamma) p`, `r' = r + h gamma p`,
/// `s' = 1 - p' - r'`.
pub fn sir_step_matrix(
    state: &EpidemicState,
    params: &SirParams,
    net: &Network,
) -> Result<EpidemicState> {
    check_assumption_sir(params, net)?.into_result()?;
    check_state(state, net, ModelKind::Sir)?;
    let n = state.n();
    let h = params.h;
    let p = DVector::from_column_slice(&state.p);
    let r = DVector::from_column_slice(&state.r);
    let susceptible = DMatrix::from_diagonal(&DVector::from_fn(n, |i, _| 1.0 - state.p[i] - state.r[i]));
    let b = DMatrix::from_diagonal(&DVector::from_column_slice(&params.beta));
    let gamma = DMatrix::from_diagonal(&DVector::from_column_slice(&params.gamma));
    let next_p = &p + (susceptible * b * net.adjacency() - &gamma) * &p * h;
    let next_r = &r + &gamma * &p * h;
    let s = (0..n).map(|i| 1.0 - next_p[i] - next_r[i]).collect();
    EpidemicState::sir(s, next_p.as_slice().to_vec(), next_r.as_slice().to_vec())
}

/// Base-network infection pressure `iota_i`.
fn pressure(params: &SeirParams, net: &Network, e: &[f64], p: &[f64], i: usize) -> f64 {
    params.beta_e[i] * net.weighted_sum(i, e) + params.beta[i] * net.weighted_sum(i, p)
}

fn seir_update(state: &EpidemicState, params: &SeirParams, iota: &[f64]) -> EpidemicState {
    let n = state.n();
    let h = params.h;
    let e = state.e.as_deref().expect("SEIR state");
    let mut next = EpidemicState {
        s: vec![0.0; n],
        e: Some(vec![0.0; n]),
        p: vec![0.0; n],
        r: vec![0.0; n],
    };
    let next_e = next.e.as_mut().expect("SEIR state");
    for i in 0..n {
        let s = state.s[i];
        next.s[i] = s - h * s * iota[i];
        next_e[i] = e[i] + h * s * iota[i] - h * params.sigma[i] * e[i];
        next.p[i] = state.p[i] + h * (params.sigma[i] * e[i] - params.gamma[i] * state.p[i]);
        next.r[i] = state.r[i] + h * (params.gamma[i] * state.p[i]);
    }
    next
}

pub(crate) fn seir_step_raw(state: &EpidemicState, params: &SeirParams, net: &Network) -> EpidemicState {
    let e = state.e.as_deref().expect("SEIR state");
    let iota: Vec<f64> = (0..state.n())
        .map(|i| pressure(params, net, e, &state.p, i))
        .collect();
    seir_update(state, params, &iota)
}

pub(crate) fn seir_step_multilayer_raw(
    state: &EpidemicState,
    params: &SeirParams,
    net: &Network,
) -> EpidemicState {
    let e = state.e.as_deref().expect("SEIR state");
    let iota: Vec<f64> = (0..state.n())
        .map(|i| {
            let mut iota = pressure(params, net, e, &state.p, i);
            for (l, layer) in net.layers().iter().enumerate() {
                iota += params.layer_beta_e[l][i] * weighted_row_sum(layer, i, e)
                    + params.layer_beta[l][i] * weighted_row_sum(layer, i, &state.p);
            }
            iota
        })
        .collect();
    seir_update(state, params, &iota)
}

/// One SEIR step on the base network, node by node. Transportation layers,
/// if any, are ignored; see [`seir_step_multilayer`].
pub fn seir_step(state: &EpidemicState, params: &SeirParams, net: &Network) -> Result<EpidemicState> {
    let mut base = params.clone();
    base.layer_beta_e.clear();
    base.layer_beta.clear();
    check_assumption_seir(&base, net)?.into_result()?;
    check_state(state, net, ModelKind::Seir)?;
    Ok(seir_step_raw(state, params, net))
}

/// One SEIR step with the extra pressure of every transportation layer.
pub fn seir_step_multilayer(
    state: &EpidemicState,
    params: &SeirParams,
    net: &Network,
) -> Result<EpidemicState> {
    if params.layer_count() != net.layers().len() {
        return Err(Error::DimensionMismatch {
            what: "transportation layers",
            expected: net.layers().len(),
            found: params.layer_count(),
        });
    }
    check_assumption_seir(params, net)?.into_result()?;
    check_state(state, net, ModelKind::Seir)?;
    Ok(seir_step_multilayer_raw(state, params, net))
}

/// One SEIR step in matrix form:
/// `e' = e + h(S(B^E A e + B A p) - sigma e)`, `p' = p + h(sigma e - gamma p)`,
/// `r' = r + h gamma p`, `s' = 1 - e' - p' - r'`.
pub fn seir_step_matrix(
    state: &EpidemicState,
    params: &SeirParams,
    net: &Network,
) -> Result<EpidemicState> {
    let mut base = params.clone();
    base.layer_beta_e.clear();
    base.layer_beta.clear();
    check_assumption_seir(&base, net)?.into_result()?;
    check_state(state, net, ModelKind::Seir)?;
    let h = params.h;
    let diag = |v: &[f64]| DMatrix::from_diagonal(&DVector::from_column_slice(v));
    let e = DVector::from_column_slice(state.exposed()?);
    let p = DVector::from_column_slice(&state.p);
    let r = DVector::from_column_slice(&state.r);
    let s = diag(&state.s);
    let a = net.adjacency();
    let sigma = diag(&params.sigma);
    let gamma = diag(&params.gamma);
    let next_e = &e + (s * (diag(&params.beta_e) * a * &e + diag(&params.beta) * a * &p) - &sigma * &e) * h;
    let next_p = &p + (&sigma * &e - &gamma * &p) * h;
    let next_r = &r + &gamma * &p * h;
    let n = state.n();
    let next_s = (0..n)
        .map(|i| 1.0 - next_e[i] - next_p[i] - next_r[i])
        .collect();
    EpidemicState::seir(
        next_s,
        next_e.as_slice().to_vec(),
        next_p.as_slice().to_vec(),
        next_r.as_slice().to_vec(),
    )
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// Gate on the well-posedness assumptions and re-validate every state.
    pub strict: bool,
    pub tolerance: f64,
    /// Stop early once `max(e, p)` falls below this level.
    pub stop_below: Option<f64>,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            strict: true,
            tolerance: SIMPLEX_TOLERANCE,
            stop_below: None,
        }
    }
}

impl SimOptions {
    pub fn lenient() -> Self {
        Self {
            strict: false,
            ..Self::default()
        }
    }
}

/// Steps the model `steps` times from `initial`. SEIR runs use the
/// multi-layer pressure whenever the network has transportation layers.
pub fn simulate(
    initial: &EpidemicState,
    params: &ModelParams,
    net: &Network,
    steps: usize,
    opts: &SimOptions,
) -> Result<Trajectory> {
    if initial.kind() != params.kind() {
        return Err(Error::WrongModel {
            expected: params.kind().name(),
            found: initial.kind().name(),
        });
    }
    if initial.n() != net.n() {
        return Err(Error::DimensionMismatch {
            what: "initial state",
            expected: net.n(),
            found: initial.n(),
        });
    }
    let multilayer = match params {
        ModelParams::Seir(p) if !net.layers().is_empty() => {
            if p.layer_count() != net.layers().len() {
                return Err(Error::DimensionMismatch {
                    what: "transportation layers",
                    expected: net.layers().len(),
                    found: p.layer_count(),
                });
            }
            true
        }
        _ => false,
    };
    // Dimension errors surface even in lenient mode.
    let report = params.check(net)?;
    if opts.strict {
        report.into_result()?;
        initial.validate(0, opts.tolerance)?;
    }

    let mut states = Vec::with_capacity(steps + 1);
    states.push(initial.clone());
    for k in 0..steps {
        let current = &states[k];
        if opts.stop_below.is_some_and(|floor| current.max_active() < floor) {
            break;
        }
        let next = match params {
            ModelParams::Sir(p) => sir_step_raw(current, p, net),
            ModelParams::Seir(p) if multilayer => seir_step_multilayer_raw(current, p, net),
            ModelParams::Seir(p) => seir_step_raw(current, p, net),
        };
        if opts.strict {
            next.validate(k + 1, opts.tolerance)?;
        }
        states.push(next);
    }
    Trajectory::new_unchecked(states, params.h())
}
