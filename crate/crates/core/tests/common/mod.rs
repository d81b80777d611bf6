//! Shared generators and oracles for the integration tests.
#![allow(dead_code)]

use nalgebra::DMatrix;
use netepi_core::{EpidemicState, Network, SeirParams, SirParams};
use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::Rng;

/// Strongly connected random digraph: a random Hamiltonian cycle plus extra
/// edges with probability `density`, weights in `[0.1, 1)`.
pub fn random_irreducible(rng: &mut impl Rng, n: usize, density: f64) -> Network {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let mut a = DMatrix::zeros(n, n);
    if n > 1 {
        for w in 0..n {
            let (i, j) = (order[w], order[(w + 1) % n]);
            a[(i, j)] = rng.random_range(0.1..1.0);
        }
    } else {
        a[(0, 0)] = rng.random_range(0.1..1.0);
    }
    for i in 0..n {
        for j in 0..n {
            if a[(i, j)] == 0.0 && rng.random_bool(density) {
                a[(i, j)] = rng.random_range(0.1..1.0);
            }
        }
    }
    Network::new(a).unwrap()
}

/// Any nonnegative matrix, possibly reducible, with some zero rows.
pub fn random_network(rng: &mut impl Rng, n: usize, density: f64) -> Network {
    let a = DMatrix::from_fn(n, n, |_, _| {
        if rng.random_bool(density) {
            rng.random_range(0.0..2.0)
        } else {
            0.0
        }
    });
    Network::new(a).unwrap()
}

/// Symmetric nearest-neighbour graph on random points in the unit square,
/// with self-loops and unit weights. `k` grows until the graph is
/// connected.
pub fn nearest_neighbor(rng: &mut impl Rng, n: usize, k: usize) -> Network {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.random(), rng.random())).collect();
    let mut k = k;
    loop {
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 1.0;
            let mut d: Vec<(f64, usize)> = (0..n)
                .filter(|&j| j != i)
                .map(|j| ((pts[i].0 - pts[j].0).powi(2) + (pts[i].1 - pts[j].1).powi(2), j))
                .collect();
            d.sort_by(|x, y| x.0.total_cmp(&y.0));
            for &(_, j) in d.iter().take(k) {
                a[(i, j)] = 1.0;
                a[(j, i)] = 1.0;
            }
        }
        if netepi_core::is_irreducible(&a).unwrap() {
            return Network::new(a).unwrap();
        }
        k += 1;
    }
}

fn max_row_sum(net: &Network) -> f64 {
    (0..net.n()).map(|i| net.row_sum(i)).fold(0.0, f64::max)
}

/// Per-node SIR rates satisfying the well-posedness assumption.
pub fn random_sir_params(rng: &mut impl Rng, net: &Network, h: f64) -> SirParams {
    let n = net.n();
    let bound = max_row_sum(net).max(1e-12);
    SirParams {
        beta: (0..n).map(|_| rng.random_range(0.05..0.95) / (h * bound)).collect(),
        gamma: (0..n).map(|_| rng.random_range(0.05..0.9) / h).collect(),
        h,
    }
}

/// Per-node SEIR rates satisfying the well-posedness assumption.
pub fn random_seir_params(rng: &mut impl Rng, net: &Network, h: f64) -> SeirParams {
    let n = net.n();
    let bound = max_row_sum(net).max(1e-12);
    let mut p = SeirParams::homogeneous(n, 0.0, 0.0, 0.0, 0.0, h);
    for i in 0..n {
        let total = rng.random_range(0.05..0.95) / (h * bound);
        let split: f64 = rng.random();
        p.beta_e[i] = split * total;
        p.beta[i] = (1.0 - split) * total;
        p.sigma[i] = rng.random_range(0.05..=1.0) / h;
        p.gamma[i] = rng.random_range(0.05..0.9) / h;
    }
    p
}

fn simplex_point(rng: &mut impl Rng, parts: usize) -> Vec<f64> {
    // exponential spacings give a uniform point on the simplex
    let raw: Vec<f64> = (0..parts).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|v| v / total).collect()
}

/// Uniform random points on each node's simplex.
pub fn random_state(rng: &mut impl Rng, n: usize, seir: bool) -> EpidemicState {
    let parts = if seir { 4 } else { 3 };
    let pts: Vec<Vec<f64>> = (0..n).map(|_| simplex_point(rng, parts)).collect();
    let col = |c: usize| pts.iter().map(|p| p[c]).collect::<Vec<f64>>();
    if seir {
        EpidemicState::seir(col(0), col(1), col(2), col(3)).unwrap()
    } else {
        EpidemicState::sir(col(0), col(1), col(2)).unwrap()
    }
}

/// Mostly susceptible population with a small random outbreak.
pub fn random_outbreak(rng: &mut impl Rng, n: usize, seir: bool) -> EpidemicState {
    let mut e = vec![0.0; n];
    let mut p = vec![0.0; n];
    for i in 0..n {
        if i == 0 || rng.random_bool(0.2) {
            p[i] = rng.random_range(0.0..0.05);
            e[i] = if seir { rng.random_range(0.0..0.05) } else { 0.0 };
        }
    }
    if seir {
        EpidemicState::seir_from(e, p, vec![0.0; n]).unwrap()
    } else {
        EpidemicState::sir_from(p, vec![0.0; n]).unwrap()
    }
}

/// Characteristic polynomial coefficients `c[0] .. c[n]` of `det(xI - M)`,
/// leading coefficient first, by the Faddeev-LeVerrier recursion.
pub fn characteristic_polynomial(m: &DMatrix<f64>) -> Vec<f64> {
    let n = m.nrows();
    let mut coeffs = vec![1.0];
    let mut mk = DMatrix::<f64>::zeros(n, n);
    for k in 1..=n {
        mk = m * (&mk + DMatrix::identity(n, n) * coeffs[k - 1]);
        let c = -mk.trace() / k as f64;
        coeffs.push(c);
    }
    coeffs
}

/// All complex roots of a monic polynomial by Aberth iteration, polished
/// with Newton steps.
pub fn polynomial_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let degree = coeffs.len() - 1;
    if degree == 0 {
        return Vec::new();
    }
    let eval = |z: Complex64| {
        let mut value = Complex64::new(0.0, 0.0);
        let mut deriv = Complex64::new(0.0, 0.0);
        for &c in coeffs {
            deriv = deriv * z + value;
            value = value * z + c;
        }
        (value, deriv)
    };
    let radius = 1.0 + coeffs[1..].iter().map(|c| c.abs()).fold(0.0, f64::max);
    let mut roots: Vec<Complex64> = (0..degree)
        .map(|k| Complex64::from_polar(radius * 0.5, 0.4 + std::f64::consts::TAU * k as f64 / degree as f64))
        .collect();
    for _ in 0..500 {
        let mut biggest = 0.0f64;
        for k in 0..degree {
            let (value, deriv) = eval(roots[k]);
            if value.norm() == 0.0 {
                continue;
            }
            let ratio = value / deriv;
            let repulsion: Complex64 = (0..degree)
                .filter(|&j| j != k)
                .map(|j| Complex64::new(1.0, 0.0) / (roots[k] - roots[j]))
                .sum();
            let step = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if step.is_finite() {
                roots[k] -= step;
                biggest = biggest.max(step.norm());
            }
        }
        if biggest < 1e-15 {
            break;
        }
    }
    roots
}

/// Spectral radius through the characteristic polynomial.
pub fn spectral_radius_oracle(m: &DMatrix<f64>) -> f64 {
    polynomial_roots(&characteristic_polynomial(m))
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

pub fn assert_close(got: f64, want: f64, tol: f64, what: &str) {
    assert!((got - want).abs() <= tol, "{what}: got {got:e}, want {want:e}, tol {tol:e}");
}
