//! Spreading matrices, Perron roots and convergence diagnostics.
//!
//! For SEIR the state-dependent map `z' = M_k z` on `z = (e, p)` is
//!
//! ```text
//! M_k = [ I + h S B^E A - h sigma    h S B A     ]
//!       [ h sigma                    I - h gamma ]
//! ```
//!
//! with `S = diag(s^k)`; for SIR it is `I + h S B A - h gamma` acting on `p`.
//! Along a well-posed trajectory `s^k` is nonincreasing, so every entry of
//! `M_k` is too, and so is its Perron root.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dynamics::ModelParams;
use crate::error::{Error, Result};
use crate::graph::{is_irreducible, strongly_connected_components, Network};
use crate::state::{EpidemicState, Trajectory};

/// Relative gap between the Collatz-Wielandt bounds at which power
/// iteration stops.
pub const EIGEN_TOLERANCE: f64 = 1e-12;
/// Power-iteration budget before switching to shifted inverse iteration.
pub const EIGEN_MAX_ITERATIONS: usize = 500;
/// Budget for the shifted inverse iteration, which converges quadratically.
pub const EIGEN_INVERSE_ITERATIONS: usize = 60;
/// Diagonal shift applied during power iteration.
pub const EIGEN_SHIFT: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq)]
pub struct SpreadingMatrix {
    pub matrix: DMatrix<f64>,
    pub k: usize,
}

pub fn build_spreading_matrix(
    state: &EpidemicState,
    params: &ModelParams,
    net: &Network,
    k: usize,
) -> Result<SpreadingMatrix> {
    let n = net.n();
    if state.n() != n {
        return Err(Error::DimensionMismatch {
            what: "state",
            expected: n,
            found: state.n(),
        });
    }
    if state.kind() != params.kind() {
        return Err(Error::WrongModel {
            expected: params.kind().name(),
            found: state.kind().name(),
        });
    }
    let a = net.adjacency();
    let matrix = match params {
        ModelParams::Sir(p) => {
            let h = p.h;
            DMatrix::from_fn(n, n, |i, j| {
                let identity = if i == j { 1.0 - h * p.gamma[i] } else { 0.0 };
                identity + h * state.s[i] * p.beta[i] * a[(i, j)]
            })
        }
        ModelParams::Seir(p) => {
            let h = p.h;
            let layered = p.layer_count() > 0 && p.layer_count() == net.layers().len();
            let mut m = DMatrix::zeros(2 * n, 2 * n);
            for i in 0..n {
                let s = state.s[i];
                for j in 0..n {
                    let mut from_e = p.beta_e[i] * a[(i, j)];
                    let mut from_p = p.beta[i] * a[(i, j)];
                    if layered {
                        for (l, layer) in net.layers().iter().enumerate() {
                            from_e += p.layer_beta_e[l][i] * layer[(i, j)];
                            from_p += p.layer_beta[l][i] * layer[(i, j)];
                        }
                    }
                    m[(i, j)] = h * s * from_e;
                    m[(i, n + j)] = h * s * from_p;
                }
                m[(i, i)] += 1.0 - h * p.sigma[i];
                m[(n + i, i)] = h * p.sigma[i];
                m[(n + i, n + i)] = 1.0 - h * p.gamma[i];
            }
            m
        }
    };
    Ok(SpreadingMatrix { matrix, k })
}

/// Perron root of a nonnegative matrix together with a nonnegative left
/// eigenvector of unit 1-norm.
#[derive(Debug, Clone, PartialEq)]
pub struct PerronEigen {
    pub value: f64,
    pub left_vector: DVector<f64>,
    pub iterations: usize,
}

fn validate_nonnegative(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    if m.nrows() == 0 {
        return Err(Error::Precondition("empty matrix".into()));
    }
    for col in 0..m.ncols() {
        for row in 0..m.nrows() {
            let value = m[(row, col)];
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::InvalidEntry { row, col, value });
            }
        }
    }
    Ok(())
}

/// Power iteration for the right Perron pair of an irreducible nonnegative
/// matrix. Stops when the Collatz-Wielandt bounds `min (Bx)_i / x_i` and
/// `max (Bx)_i / x_i` agree to [`EIGEN_TOLERANCE`] relative. When another
/// eigenvalue sits close to the Perron circle, power iteration stalls; after
/// [`EIGEN_MAX_ITERATIONS`] steps it hands over to [`noda_perron`].
fn irreducible_perron(b: &DMatrix<f64>, start: Option<&DVector<f64>>) -> Result<(f64, DVector<f64>, usize)> {
    let n = b.nrows();
    if n == 1 {
        return Ok((b[(0, 0)], DVector::from_element(1, 1.0), 0));
    }
    // A zero diagonal leaves room for a nontrivial period, which a tiny shift
    // cannot break in reasonable time.
    let shift = if (0..n).any(|i| b[(i, i)] > 0.0) {
        EIGEN_SHIFT
    } else {
        (b.sum() / n as f64).max(EIGEN_SHIFT)
    };

    let mut x = match start {
        Some(v) if v.len() == n && v.iter().all(|x| *x > 0.0 && x.is_finite()) => v / v.sum(),
        _ => DVector::from_element(n, 1.0 / n as f64),
    };
    for iteration in 1..=EIGEN_MAX_ITERATIONS {
        let y = b * &x;
        let (lo, hi) = collatz_wielandt(&x, &y);
        let next = &y + &x * shift;
        let next = &next / next.sum();
        if hi <= 0.0 || (hi - lo) / hi <= EIGEN_TOLERANCE {
            return Ok((0.5 * (lo + hi), next, iteration));
        }
        x = next;
    }
    noda_perron(b, x, EIGEN_MAX_ITERATIONS)
}

fn collatz_wielandt(x: &DVector<f64>, y: &DVector<f64>) -> (f64, f64) {
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..x.len() {
        let ratio = y[i] / x[i];
        lo = lo.min(ratio);
        hi = hi.max(ratio);
    }
    (lo, hi)
}

/// Inverse iteration shifted to the current Collatz-Wielandt upper bound
/// (Noda iteration). For irreducible `b` and a shift above the Perron root,
/// `(shift I - b)^{-1}` is positive, so iterates stay positive and the
/// bracket stays rigorous. `x` must have unit 1-norm.
///
/// Tiny components of `x` are only accurate normwise, which can keep the
/// bracket from closing; the root is then read off the growth of the solve,
/// `shift - 1 / ||(shift I - b)^{-1} x||_1`, and clamped into the bracket.
fn noda_perron(b: &DMatrix<f64>, mut x: DVector<f64>, done: usize) -> Result<(f64, DVector<f64>, usize)> {
    let n = b.nrows();
    let (mut lo, mut hi) = collatz_wielandt(&x, &(b * &x));
    let mut value = 0.5 * (lo + hi);
    let mut iterations = done;
    for _ in 0..EIGEN_INVERSE_ITERATIONS {
        if hi <= 0.0 || (hi - lo) / hi <= EIGEN_TOLERANCE {
            break;
        }
        iterations += 1;
        let shifted = DMatrix::identity(n, n) * hi - b;
        let Some(solved) = shifted.lu().solve(&x) else { break };
        // a shift that rounds just below the root flips the sign of the solve
        let total = solved.sum();
        if !(total.is_finite() && total != 0.0) {
            break;
        }
        let candidate = solved / total;
        if candidate.iter().any(|v| *v <= 0.0) {
            break;
        }
        let estimate = hi - 1.0 / total;
        x = candidate;
        let (next_lo, next_hi) = collatz_wielandt(&x, &(b * &x));
        lo = lo.max(next_lo);
        hi = hi.min(next_hi);
        if (estimate - value).abs() <= EIGEN_TOLERANCE * hi {
            value = estimate;
            break;
        }
        value = estimate;
    }
    let gap = if hi > 0.0 { (hi - lo) / hi } else { 0.0 };
    if gap > EIGEN_TOLERANCE.sqrt() {
        return Err(Error::NonConvergence {
            iterations,
            residual: gap,
        });
    }
    Ok((value.clamp(lo, hi.max(lo)), x, iterations))
}

fn submatrix(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), cols.len(), |i, j| m[(rows[i], cols[j])])
}

/// Reducible case, on `B = M'`: the spectral radius is the largest Perron
/// root among the irreducible diagonal blocks. The eigenvector lives on a
/// class `C` attaining it whose ancestors all have smaller roots, extended to
/// those ancestors `D` by solving `(rho I - B_DD) x_D = B_DC x_C`.
fn reducible_perron(b: &DMatrix<f64>) -> Result<(f64, DVector<f64>, usize)> {
    let n = b.nrows();
    let classes = strongly_connected_components(b);
    let mut roots = Vec::with_capacity(classes.len());
    let mut iterations = 0;
    for class in &classes {
        let block = submatrix(b, class, class);
        let (value, vector, its) = irreducible_perron(&block, None)?;
        iterations += its;
        roots.push((value, vector));
    }
    let rho = roots.iter().map(|(v, _)| *v).fold(0.0, f64::max);
    let chosen = roots
        .iter()
        .rposition(|(v, _)| *v >= rho * (1.0 - EIGEN_TOLERANCE))
        .expect("at least one class");
    let class = &classes[chosen];

    let mut in_class = vec![false; n];
    for &c in class {
        in_class[c] = true;
    }
    // Ancestors: vertices with a path into the chosen class.
    let mut reaches = in_class.clone();
    let mut stack = class.clone();
    while let Some(j) = stack.pop() {
        for i in 0..n {
            if !reaches[i] && b[(i, j)] > 0.0 {
                reaches[i] = true;
                stack.push(i);
            }
        }
    }
    let ancestors: Vec<usize> = (0..n).filter(|&i| reaches[i] && !in_class[i]).collect();

    let mut x = DVector::zeros(n);
    let class_vector = &roots[chosen].1;
    for (offset, &c) in class.iter().enumerate() {
        x[c] = class_vector[offset];
    }
    if !ancestors.is_empty() {
        let b_dd = submatrix(b, &ancestors, &ancestors);
        let system = DMatrix::identity(ancestors.len(), ancestors.len()) * rho - b_dd;
        let rhs = submatrix(b, &ancestors, class) * class_vector;
        let solved = system
            .lu()
            .solve(&rhs)
            .ok_or_else(|| Error::Precondition("singular ancestor system in Perron vector".into()))?;
        for (offset, &d) in ancestors.iter().enumerate() {
            x[d] = solved[offset].max(0.0);
        }
    }
    let total = x.sum();
    Ok((rho, x / total, iterations))
}

/// Spectral radius and left Perron vector of a nonnegative square matrix.
pub fn dominant_eigenvalue(m: &DMatrix<f64>) -> Result<PerronEigen> {
    dominant_eigenvalue_from(m, None)
}

/// As [`dominant_eigenvalue`], warm-starting power iteration from a previous
/// left vector when one is supplied (used along trajectories).
pub fn dominant_eigenvalue_from(m: &DMatrix<f64>, start: Option<&DVector<f64>>) -> Result<PerronEigen> {
    validate_nonnegative(m)?;
    let b = m.transpose();
    let (value, left_vector, iterations) = if is_irreducible(&b)? {
        irreducible_perron(&b, start)?
    } else {
        reducible_perron(&b)?
    };
    Ok(PerronEigen {
        value,
        left_vector,
        iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticsConfig {
    pub monotone_tolerance: f64,
    pub extinction_threshold: f64,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        Self {
            monotone_tolerance: 1e-10,
            extinction_threshold: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    /// Step index of `lambda_seq[0]`.
    pub start_k: usize,
    pub lambda_seq: Vec<f64>,
    /// `||p^k||_2` for every state.
    pub p_norms: Vec<f64>,
    /// First index into `lambda_seq` with a root below one.
    pub k_bar: Option<usize>,
    pub monotone: bool,
    /// `exp(slope)` of the least-squares line through `(k, ln ||p^k||)` on
    /// `[k_bar, extinction_step]`; `None` when nothing decays.
    pub linear_rate_estimate: Option<f64>,
    /// First index with `max(e, p)` below the extinction threshold.
    pub extinction_step: Option<usize>,
    /// Largest `||p^{k+1}|| / ||p^k|| - lambda_k` over `k >= k_bar`.
    pub max_ratio_excess: Option<f64>,
}

#[derive(Serialize)]
struct Summary<'a> {
    k_bar: Option<usize>,
    monotone: bool,
    linear_rate_estimate: Option<f64>,
    linear_rate_defined: bool,
    extinction_step: Option<usize>,
    max_ratio_excess: Option<f64>,
    lambda_first: Option<&'a f64>,
    lambda_last: Option<&'a f64>,
}

impl ConvergenceReport {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["k", "lambda_max", "p_norm"])?;
        for (idx, (lambda, norm)) in self.lambda_seq.iter().zip(&self.p_norms).enumerate() {
            writer.write_record([
                (self.start_k + idx).to_string(),
                format!("{lambda:.16e}"),
                format!("{norm:.16e}"),
            ])?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::to_value(Summary {
            k_bar: self.k_bar,
            monotone: self.monotone,
            linear_rate_estimate: self.linear_rate_estimate,
            linear_rate_defined: self.linear_rate_estimate.is_some(),
            extinction_step: self.extinction_step,
            max_ratio_excess: self.max_ratio_excess,
            lambda_first: self.lambda_seq.first(),
            lambda_last: self.lambda_seq.last(),
        })
        .expect("summary serializes")
    }
}

/// Ordinary least-squares slope of `ys` against `xs`.
fn ols_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let count = points.len() as f64;
    let mean_x = points.iter().map(|p| p.0).sum::<f64>() / count;
    let mean_y = points.iter().map(|p| p.1).sum::<f64>() / count;
    let sxx: f64 = points.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn convergence_diagnostics(traj: &Trajectory, params: &ModelParams, net: &Network) -> Result<ConvergenceReport> {
    convergence_diagnostics_with(traj, params, net, &DiagnosticsConfig::default())
}

pub fn convergence_diagnostics_with(
    traj: &Trajectory,
    params: &ModelParams,
    net: &Network,
    config: &DiagnosticsConfig,
) -> Result<ConvergenceReport> {
    if traj.len() < 2 {
        return Err(Error::TrajectoryTooShort {
            len: traj.len(),
            required: 2,
        });
    }
    let mut lambda_seq = Vec::with_capacity(traj.len());
    let mut previous: Option<DVector<f64>> = None;
    for (idx, state) in traj.states().iter().enumerate() {
        let m = build_spreading_matrix(state, params, net, traj.start_k() + idx)?;
        let eig = dominant_eigenvalue_from(&m.matrix, previous.as_ref())?;
        lambda_seq.push(eig.value);
        previous = Some(eig.left_vector);
    }
    let p_norms: Vec<f64> = traj
        .states()
        .iter()
        .map(|st| st.p.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();

    let k_bar = lambda_seq.iter().position(|&l| l < 1.0);
    let monotone = lambda_seq
        .windows(2)
        .all(|w| w[1] <= w[0] + config.monotone_tolerance);
    let extinction_step = traj
        .states()
        .iter()
        .position(|st| st.max_active() < config.extinction_threshold);

    let (linear_rate_estimate, max_ratio_excess) = match k_bar {
        Some(start) => {
            let end = extinction_step.unwrap_or(traj.len() - 1).max(start);
            let points: Vec<(f64, f64)> = (start..=end)
                .filter(|&k| p_norms[k] > 0.0)
                .map(|k| (k as f64, p_norms[k].ln()))
                .collect();
            let rate = ols_slope(&points).map(f64::exp);
            let excess = (start..traj.len() - 1)
                .filter(|&k| p_norms[k] > 0.0)
                .map(|k| p_norms[k + 1] / p_norms[k] - lambda_seq[k])
                .fold(None, |acc: Option<f64>, x| Some(acc.map_or(x, |a| a.max(x))));
            (rate, excess)
        }
        None => (None, None),
    };

    Ok(ConvergenceReport {
        start_k: traj.start_k(),
        lambda_seq,
        p_norms,
        k_bar,
        monotone,
        linear_rate_estimate,
        extinction_step,
        max_ratio_excess,
    })
}
