//! Minimum-norm least squares through a complete orthogonal decomposition.
//!
//! `A P = Q R` with Householder reflections and column pivoting reveals the
//! numerical rank `r`. When `r` is short of the column count, the leading
//! `r` rows `[R11 R12]` are factored again from the right,
//! `[R11 R12] = T' Z'`, so the pseudoinverse solution is `P Z T'^-1 Q' b`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct LeastSquares {
    pub solution: DVector<f64>,
    pub rank: usize,
    pub residual_norm: f64,
    /// Absolute threshold below which a pivot counted as zero.
    pub tolerance: f64,
}

impl LeastSquares {
    pub fn is_unique(&self) -> bool {
        self.rank == self.solution.len()
    }
}

struct Reflector {
    v: Vec<f64>,
    beta: f64,
}

impl Reflector {
    /// Reflector mapping `x` onto a multiple of the first unit vector.
    fn new(x: &[f64]) -> Self {
        let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
        let mut v = x.to_vec();
        if norm == 0.0 {
            return Self { v, beta: 0.0 };
        }
        let alpha = if x[0] >= 0.0 { -norm } else { norm };
        v[0] -= alpha;
        let vtv: f64 = v.iter().map(|a| a * a).sum();
        Self {
            v,
            beta: if vtv > 0.0 { 2.0 / vtv } else { 0.0 },
        }
    }

    /// Applies `I - beta v v'` to `y` in place.
    fn apply(&self, y: &mut [f64]) {
        if self.beta == 0.0 {
            return;
        }
        let dot: f64 = self.v.iter().zip(y.iter()).map(|(a, b)| a * b).sum();
        let scale = self.beta * dot;
        for (yi, vi) in y.iter_mut().zip(&self.v) {
            *yi -= scale * vi;
        }
    }
}

fn column_tail(m: &DMatrix<f64>, col: usize, from: usize) -> Vec<f64> {
    (from..m.nrows()).map(|i| m[(i, col)]).collect()
}

fn set_column_tail(m: &mut DMatrix<f64>, col: usize, from: usize, values: &[f64]) {
    for (offset, v) in values.iter().enumerate() {
        m[(from + offset, col)] = *v;
    }
}

/// Solves `min ||A x - b||` and, among minimizers, returns the one of least
/// norm. Pivots below `rel_tol` times the largest column norm of `A` count as
/// zero.
pub fn min_norm_least_squares(a: &DMatrix<f64>, b: &DVector<f64>, rel_tol: f64) -> Result<LeastSquares> {
    let (m, n) = a.shape();
    if m == 0 || n == 0 {
        return Err(Error::EmptySystem);
    }
    if b.len() != m {
        return Err(Error::DimensionMismatch {
            what: "right-hand side",
            expected: m,
            found: b.len(),
        });
    }

    let mut r = a.clone();
    let mut qtb = b.as_slice().to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let largest = (0..n).map(|j| a.column(j).norm()).fold(0.0, f64::max);
    let tolerance = rel_tol * largest;

    let mut rank = 0;
    for j in 0..m.min(n) {
        // Trailing norms are recomputed outright; the systems here have at
        // most four columns.
        let (pivot, pivot_norm) = (j..n)
            .map(|c| (c, (j..m).map(|i| r[(i, c)] * r[(i, c)]).sum::<f64>().sqrt()))
            .fold((j, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if pivot_norm <= tolerance {
            break;
        }
        r.swap_columns(j, pivot);
        perm.swap(j, pivot);

        let reflector = Reflector::new(&column_tail(&r, j, j));
        for c in j..n {
            let mut col = column_tail(&r, c, j);
            reflector.apply(&mut col);
            set_column_tail(&mut r, c, j, &col);
        }
        reflector.apply(&mut qtb[j..]);
        for i in j + 1..m {
            r[(i, j)] = 0.0;
        }
        rank += 1;
    }

    let mut y = vec![0.0; n];
    if rank == n {
        for i in (0..n).rev() {
            let mut acc = qtb[i];
            for c in i + 1..n {
                acc -= r[(i, c)] * y[c];
            }
            y[i] = acc / r[(i, i)];
        }
    } else if rank > 0 {
        // W = [R11 R12]' is n x rank; factor W = Z [T; 0].
        let mut w = DMatrix::from_fn(n, rank, |i, j| r[(j, i)]);
        let mut reflectors = Vec::with_capacity(rank);
        for j in 0..rank {
            let reflector = Reflector::new(&column_tail(&w, j, j));
            for c in j..rank {
                let mut col = column_tail(&w, c, j);
                reflector.apply(&mut col);
                set_column_tail(&mut w, c, j, &col);
            }
            reflectors.push(reflector);
        }
        // T' u = c, with T' lower triangular.
        let mut u = vec![0.0; rank];
        for i in 0..rank {
            let mut acc = qtb[i];
            for c in 0..i {
                acc -= w[(c, i)] * u[c];
            }
            u[i] = acc / w[(i, i)];
        }
        y[..rank].copy_from_slice(&u);
        for (j, reflector) in reflectors.iter().enumerate().rev() {
            reflector.apply(&mut y[j..]);
        }
    }

    let mut solution = DVector::zeros(n);
    for (i, &col) in perm.iter().enumerate() {
        solution[col] = y[i];
    }
    let residual_norm = (a * &solution - b).norm();
    Ok(LeastSquares {
        solution,
        rank,
        residual_norm,
        tolerance,
    })
}
