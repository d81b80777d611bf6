//! Compartment levels and trajectories, plus their CSV form.
//!
//! CSV layout: header `k,node,s,e,p,r`, one row per (step, node), step-major.
//! The `e` column is blank for SIR data. Values are written with 17
//! significant digits so a write/read cycle is bit-exact.

use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sum-to-one tolerance for the per-node simplex check.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Sir,
    Seir,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Sir => "SIR",
            ModelKind::Seir => "SEIR",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-node compartment levels at one step. `e` is `None` for SIR.
#[derive(Debug, Clone, PartialEq)]
pub struct EpidemicState {
    pub s: Vec<f64>,
    pub e: Option<Vec<f64>>,
    pub p: Vec<f64>,
    pub r: Vec<f64>,
}

fn check_len(what: &'static str, expected: usize, v: &[f64]) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            what,
            expected,
            found: v.len(),
        });
    }
    Ok(())
}

impl EpidemicState {
    pub fn sir(s: Vec<f64>, p: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        check_len("p", s.len(), &p)?;
        check_len("r", s.len(), &r)?;
        Ok(Self { s, e: None, p, r })
    }

    pub fn seir(s: Vec<f64>, e: Vec<f64>, p: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        check_len("e", s.len(), &e)?;
        check_len("p", s.len(), &p)?;
        check_len("r", s.len(), &r)?;
        Ok(Self {
            s,
            e: Some(e),
            p,
            r,
        })
    }

    /// SIR state with `s = 1 - p - r` per node.
    pub fn sir_from(p: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        check_len("r", p.len(), &r)?;
        let s = p.iter().zip(&r).map(|(p, r)| 1.0 - p - r).collect();
        Self::sir(s, p, r)
    }

    /// SEIR state with `s = 1 - e - p - r` per node.
    pub fn seir_from(e: Vec<f64>, p: Vec<f64>, r: Vec<f64>) -> Result<Self> {
        check_len("p", e.len(), &p)?;
        check_len("r", e.len(), &r)?;
        let s = (0..e.len()).map(|i| 1.0 - e[i] - p[i] - r[i]).collect();
        Self::seir(s, e, p, r)
    }

    pub fn n(&self) -> usize {
        self.s.len()
    }

    pub fn kind(&self) -> ModelKind {
        if self.e.is_some() {
            ModelKind::Seir
        } else {
            ModelKind::Sir
        }
    }

    /// Exposed levels, or an error for SIR states.
    pub fn exposed(&self) -> Result<&[f64]> {
        self.e.as_deref().ok_or(Error::WrongModel {
            expected: "SEIR",
            found: "SIR",
        })
    }

    pub fn node_sum(&self, i: usize) -> f64 {
        self.s[i] + self.e.as_ref().map_or(0.0, |e| e[i]) + self.p[i] + self.r[i]
    }

    /// Largest infected or exposed level across nodes.
    pub fn max_active(&self) -> f64 {
        let p = self.p.iter().copied().fold(0.0, f64::max);
        let e = self
            .e
            .as_ref()
            .map_or(0.0, |e| e.iter().copied().fold(0.0, f64::max));
        p.max(e)
    }

    /// Checks every entry lies in `[0, 1]` and each node sums to one within
    /// `tolerance`. `k` only labels the error.
    pub fn validate(&self, k: usize, tolerance: f64) -> Result<()> {
        let mut columns: Vec<(&str, &[f64])> = vec![("s", &self.s)];
        if let Some(e) = &self.e {
            columns.push(("e", e));
        }
        columns.push(("p", &self.p));
        columns.push(("r", &self.r));
        for (name, values) in &columns {
            check_len("compartment", self.n(), values)?;
            if let Some((node, v)) = values
                .iter()
                .enumerate()
                .find(|(_, v)| !(**v >= 0.0 && **v <= 1.0))
            {
                return Err(Error::Invariant {
                    k,
                    node,
                    detail: format!("{name} = {v} outside [0, 1]"),
                });
            }
        }
        for node in 0..self.n() {
            let sum = self.node_sum(node);
            if (sum - 1.0).abs() > tolerance {
                return Err(Error::Invariant {
                    k,
                    node,
                    detail: format!("compartments sum to {sum}"),
                });
            }
        }
        Ok(())
    }
}

/// Ordered states for steps `start_k ..= start_k + len - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    kind: ModelKind,
    states: Vec<EpidemicState>,
    h: f64,
    start_k: usize,
}

impl Trajectory {
    /// Builds a trajectory and validates every state against the simplex
    /// invariants.
    pub fn new(states: Vec<EpidemicState>, h: f64) -> Result<Self> {
        let traj = Self::new_unchecked(states, h)?;
        traj.validate(SIMPLEX_TOLERANCE)?;
        Ok(traj)
    }

    /// Checks only structure (shared kind and node count). Used for measured
    /// data that may sit slightly off the simplex.
    pub fn new_unchecked(states: Vec<EpidemicState>, h: f64) -> Result<Self> {
        let first = states
            .first()
            .ok_or(Error::TrajectoryTooShort { len: 0, required: 1 })?;
        let kind = first.kind();
        let n = first.n();
        for st in &states {
            if st.kind() != kind {
                return Err(Error::WrongModel {
                    expected: kind.name(),
                    found: st.kind().name(),
                });
            }
            check_len("state", n, &st.s)?;
        }
        Ok(Self {
            kind,
            states,
            h,
            start_k: 0,
        })
    }

    pub fn with_start_k(mut self, start_k: usize) -> Self {
        self.start_k = start_k;
        self
    }

    pub fn validate(&self, tolerance: f64) -> Result<()> {
        for (offset, st) in self.states.iter().enumerate() {
            st.validate(self.start_k + offset, tolerance)?;
        }
        Ok(())
    }

    pub fn kind(&self) -> ModelKind {
        self.kind
    }

    pub fn states(&self) -> &[EpidemicState] {
        &self.states
    }

    pub fn into_states(self) -> Vec<EpidemicState> {
        self.states
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Step index of the first stored state.
    pub fn start_k(&self) -> usize {
        self.start_k
    }

    pub fn n(&self) -> usize {
        self.states[0].n()
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    /// Number of transitions `T` (states minus one).
    pub fn transitions(&self) -> usize {
        self.states.len() - 1
    }

    /// Keeps states `0..=t` (relative to the first stored state).
    pub fn truncated(&self, transitions: usize) -> Self {
        let keep = (transitions + 1).min(self.states.len());
        Self {
            kind: self.kind,
            states: self.states[..keep].to_vec(),
            h: self.h,
            start_k: self.start_k,
        }
    }

    /// Drops the first `offset` states.
    pub fn skip(&self, offset: usize) -> Result<Self> {
        if offset >= self.states.len() {
            return Err(Error::StepOutOfRange {
                k: self.start_k + offset,
                len: self.states.len(),
            });
        }
        Ok(Self {
            kind: self.kind,
            states: self.states[offset..].to_vec(),
            h: self.h,
            start_k: self.start_k + offset,
        })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        writer.write_record(["k", "node", "s", "e", "p", "r"])?;
        let fmt = |v: f64| format!("{v:.16e}");
        for (offset, st) in self.states.iter().enumerate() {
            let k = (self.start_k + offset).to_string();
            for i in 0..st.n() {
                let e = st.e.as_ref().map_or(String::new(), |e| fmt(e[i]));
                writer.write_record([
                    k.as_str(),
                    &i.to_string(),
                    &fmt(st.s[i]),
                    &e,
                    &fmt(st.p[i]),
                    &fmt(st.r[i]),
                ])?;
            }
        }
        writer.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv output is ASCII")
    }

    /// Reads the CSV layout written by [`Trajectory::write_csv`]. No simplex
    /// validation is applied; call [`Trajectory::validate`] when required.
    pub fn read_csv<R: BufRead>(source: R, h: f64) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_reader(source);
        let headers = reader.headers()?.clone();
        let expected = ["k", "node", "s", "e", "p", "r"];
        if headers.iter().ne(expected.iter().copied()) {
            return Err(Error::Malformed {
                line: 1,
                reason: format!("expected header {}, found {:?}", expected.join(","), headers),
            });
        }

        struct Row {
            k: usize,
            node: usize,
            s: f64,
            e: Option<f64>,
            p: f64,
            r: f64,
        }
        let mut rows = Vec::new();
        for record in reader.records() {
            let record = record?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            let malformed = |reason: String| Error::Malformed { line, reason };
            let int = |idx: usize| -> Result<usize> {
                record[idx]
                    .parse()
                    .map_err(|e| malformed(format!("column {}: {e}", expected[idx])))
            };
            let real = |idx: usize| -> Result<f64> {
                record[idx]
                    .parse()
                    .map_err(|e| malformed(format!("column {}: {e}", expected[idx])))
            };
            rows.push(Row {
                k: int(0)?,
                node: int(1)?,
                s: real(2)?,
                e: if record[3].is_empty() { None } else { Some(real(3)?) },
                p: real(4)?,
                r: real(5)?,
            });
        }
        let first = rows.first().ok_or(Error::TrajectoryTooShort { len: 0, required: 1 })?;
        let start_k = first.k;
        let seir = first.e.is_some();
        let n = rows.iter().take_while(|row| row.k == start_k).count();
        if rows.len() % n != 0 {
            return Err(Error::Malformed {
                line: rows.len() + 1,
                reason: format!("{} rows is not a multiple of {n} nodes", rows.len()),
            });
        }

        let mut states = Vec::with_capacity(rows.len() / n);
        for (step, chunk) in rows.chunks(n).enumerate() {
            let mut s = Vec::with_capacity(n);
            let mut e = Vec::with_capacity(n);
            let mut p = Vec::with_capacity(n);
            let mut r = Vec::with_capacity(n);
            for (i, row) in chunk.iter().enumerate() {
                let line = step * n + i + 2;
                if row.k != start_k + step || row.node != i {
                    return Err(Error::Malformed {
                        line,
                        reason: format!(
                            "expected k={} node={i}, found k={} node={}",
                            start_k + step,
                            row.k,
                            row.node
                        ),
                    });
                }
                match (seir, row.e) {
                    (true, Some(v)) => e.push(v),
                    (false, None) => {}
                    _ => {
                        return Err(Error::Malformed {
                            line,
                            reason: "e column must be filled for every row or for none".into(),
                        })
                    }
                }
                s.push(row.s);
                p.push(row.p);
                r.push(row.r);
            }
            states.push(if seir {
                EpidemicState::seir(s, e, p, r)?
            } else {
                EpidemicState::sir(s, p, r)?
            });
        }
        Ok(Self::new_unchecked(states, h)?.with_start_k(start_k))
    }
}
