//! Spreading networks.
//!
//! Orientation: row `i` of the adjacency matrix holds the weights of the
//! nodes that influence node `i`, so `a[(i, j)] > 0` means node `j` feeds
//! infection pressure into node `i`. Edge-list records `i,j,w` follow the
//! same convention ("j influences i").

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;
use std::io::BufRead;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Weighted directed network with optional transportation layers.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    adjacency: DMatrix<f64>,
    layers: Vec<DMatrix<f64>>,
    labels: Option<Vec<String>>,
}

fn check_nonnegative(m: &DMatrix<f64>) -> Result<()> {
    if !m.is_square() {
        return Err(Error::NotSquare {
            rows: m.nrows(),
            cols: m.ncols(),
        });
    }
    for col in 0..m.ncols() {
        for row in 0..m.nrows() {
            let value = m[(row, col)];
            if !(value.is_finite() && value >= 0.0) {
                return Err(Error::InvalidEntry { row, col, value });
            }
        }
    }
    Ok(())
}

impl Network {
    pub fn new(adjacency: DMatrix<f64>) -> Result<Self> {
        check_nonnegative(&adjacency)?;
        Ok(Self {
            adjacency,
            layers: Vec::new(),
            labels: None,
        })
    }

    /// Attaches transportation layers; each must be `n x n` and nonnegative.
    pub fn with_layers(mut self, layers: Vec<DMatrix<f64>>) -> Result<Self> {
        for layer in &layers {
            check_nonnegative(layer)?;
            if layer.nrows() != self.n() {
                return Err(Error::DimensionMismatch {
                    what: "transportation layer",
                    expected: self.n(),
                    found: layer.nrows(),
                });
            }
        }
        self.layers = layers;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::DimensionMismatch {
                what: "node labels",
                expected: self.n(),
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.adjacency.nrows()
    }

    pub fn adjacency(&self) -> &DMatrix<f64> {
        &self.adjacency
    }

    pub fn layers(&self) -> &[DMatrix<f64>] {
        &self.layers
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    fn check_index(&self, i: usize) -> Result<()> {
        if i >= self.n() {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: self.n(),
            });
        }
        Ok(())
    }

    /// In-influence set `{ j : a_ij > 0 }`.
    pub fn neighbors(&self, i: usize) -> Result<BTreeSet<usize>> {
        self.check_index(i)?;
        Ok((0..self.n())
            .filter(|&j| self.adjacency[(i, j)] > 0.0)
            .collect())
    }

    /// `sum_j a_ij` for the base network.
    pub fn row_sum(&self, i: usize) -> f64 {
        self.adjacency.row(i).sum()
    }

    /// `sum_j a_ij x_j`, the network term used throughout the dynamics.
    pub fn weighted_sum(&self, i: usize, x: &[f64]) -> f64 {
        weighted_row_sum(&self.adjacency, i, x)
    }

    /// Serializes the base adjacency as an edge list that [`load_network`]
    /// reads back bit-exactly.
    pub fn to_edge_list(&self) -> String {
        matrix_to_edge_list(&self.adjacency)
    }

    /// Bidirectional ring `i <-> i+1 (mod n)` with uniform weight.
    pub fn ring(n: usize, weight: f64) -> Result<Self> {
        let mut a = DMatrix::zeros(n, n);
        if n > 1 {
            for i in 0..n {
                let next = (i + 1) % n;
                a[(i, next)] = weight;
                a[(next, i)] = weight;
            }
        }
        Self::new(a)
    }

    /// Complete graph without self-loops.
    pub fn complete(n: usize, weight: f64) -> Result<Self> {
        let a = DMatrix::from_fn(n, n, |i, j| if i == j { 0.0 } else { weight });
        Self::new(a)
    }

    /// Four-neighbor lattice, optionally with unit self-loops.
    pub fn grid(rows: usize, cols: usize, self_loops: bool) -> Result<Self> {
        let n = rows * cols;
        let mut a = DMatrix::zeros(n, n);
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                if self_loops {
                    a[(i, i)] = 1.0;
                }
                if r + 1 < rows {
                    let j = (r + 1) * cols + c;
                    a[(i, j)] = 1.0;
                    a[(j, i)] = 1.0;
                }
                if c + 1 < cols {
                    let j = i + 1;
                    a[(i, j)] = 1.0;
                    a[(j, i)] = 1.0;
                }
            }
        }
        Self::new(a)
    }
}

pub(crate) fn weighted_row_sum(m: &DMatrix<f64>, i: usize, x: &[f64]) -> f64 {
    m.row(i)
        .iter()
        .zip(x)
        .filter(|(a, _)| **a > 0.0)
        .map(|(a, xj)| a * xj)
        .sum()
}

pub fn matrix_to_edge_list(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            let w = m[(i, j)];
            if w > 0.0 {
                let _ = writeln!(out, "{i},{j},{w:?}");
            }
        }
    }
    out
}

/// Reads an `i,j,weight` edge list into an `n x n` matrix. Lines starting
/// with `#` are comments; unlisted entries are zero.
pub fn load_matrix<R: BufRead>(source: R, n: usize) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(source);

    let mut a = DMatrix::zeros(n, n);
    let mut seen = HashSet::new();
    for record in reader.records() {
        let record = record?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != 3 {
            return Err(Error::Malformed {
                line,
                reason: format!("expected 3 fields, found {}", record.len()),
            });
        }
        let index = |field: &str| {
            field.parse::<usize>().map_err(|e| Error::Malformed {
                line,
                reason: format!("bad node index {field:?}: {e}"),
            })
        };
        let i = index(&record[0])?;
        let j = index(&record[1])?;
        let weight: f64 = record[2].parse().map_err(|e| Error::Malformed {
            line,
            reason: format!("bad weight {:?}: {e}", &record[2]),
        })?;
        for idx in [i, j] {
            if idx >= n {
                return Err(Error::IndexOutOfRange { index: idx, n });
            }
        }
        if !(weight.is_finite() && weight > 0.0) {
            return Err(Error::InvalidWeight { line, weight });
        }
        if !seen.insert((i, j)) {
            return Err(Error::DuplicateEdge { line, i, j });
        }
        a[(i, j)] = weight;
    }
    Ok(a)
}

pub fn load_network<R: BufRead>(source: R, n: usize) -> Result<Network> {
    Network::new(load_matrix(source, n)?)
}

/// One label per line; blank lines are skipped.
pub fn load_labels<R: BufRead>(source: R, n: usize) -> Result<Vec<String>> {
    let mut labels = Vec::with_capacity(n);
    for line in source.lines() {
        let line = line?;
        let label = line.trim();
        if !label.is_empty() {
            labels.push(label.to_string());
        }
    }
    if labels.len() != n {
        return Err(Error::DimensionMismatch {
            what: "node labels",
            expected: n,
            found: labels.len(),
        });
    }
    Ok(labels)
}

fn reaches_all(n: usize, edge: impl Fn(usize, usize) -> bool) -> bool {
    let mut visited = vec![false; n];
    let mut stack = vec![0];
    visited[0] = true;
    let mut count = 1;
    while let Some(u) = stack.pop() {
        for (v, seen) in visited.iter_mut().enumerate() {
            if !*seen && edge(u, v) {
                *seen = true;
                count += 1;
                stack.push(v);
            }
        }
    }
    count == n
}

/// True iff the digraph of nonzero entries is strongly connected.
pub fn is_irreducible(m: &DMatrix<f64>) -> Result<bool> {
    check_nonnegative(m)?;
    let n = m.nrows();
    if n == 0 {
        return Err(Error::Precondition("empty matrix".into()));
    }
    Ok(reaches_all(n, |u, v| m[(u, v)] > 0.0) && reaches_all(n, |u, v| m[(v, u)] > 0.0))
}

/// Strongly connected components of the pattern `i -> j` iff `m[(i, j)] > 0`,
/// in reverse topological order: every component is emitted after all the
/// components it can reach.
pub fn strongly_connected_components(m: &DMatrix<f64>) -> Vec<Vec<usize>> {
    let n = m.nrows();
    let successors: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| m[(i, j)] > 0.0).collect())
        .collect();

    const UNVISITED: usize = usize::MAX;
    let mut index = vec![UNVISITED; n];
    let mut low = vec![0; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut components = Vec::new();
    let mut next_index = 0;

    // Iterative Tarjan: call frames hold (node, position in its successor list).
    for root in 0..n {
        if index[root] != UNVISITED {
            continue;
        }
        let mut frames = vec![(root, 0usize)];
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;

        while let Some(&mut (v, ref mut pos)) = frames.last_mut() {
            if let Some(&w) = successors[v].get(*pos) {
                *pos += 1;
                if index[w] == UNVISITED {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    frames.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
                continue;
            }
            frames.pop();
            if let Some(&(parent, _)) = frames.last() {
                low[parent] = low[parent].min(low[v]);
            }
            if low[v] == index[v] {
                let mut component = Vec::new();
                while let Some(w) = stack.pop() {
                    on_stack[w] = false;
                    component.push(w);
                    if w == v {
                        break;
                    }
                }
                component.sort_unstable();
                components.push(component);
            }
        }
    }
    components
}
