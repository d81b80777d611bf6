//! Level-dependent Gaussian measurement noise.
//!
//! For steps `k >= start_k` each compartment value `x` gets zero-mean noise
//! whose spread is `slope * x + floor` (exposed and infected/removed have
//! separate coefficients). Perturbed values are clamped to `[0, 1]` and `s`
//! is recomputed from the other three. Earlier steps are dropped.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::{EpidemicState, Trajectory};

/// How `slope * x + floor` is read.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScale {
    #[default]
    Variance,
    StdDev,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub e_slope: f64,
    pub e_floor: f64,
    /// Shared by the infected and removed compartments.
    pub x_slope: f64,
    pub x_floor: f64,
    pub seed: u64,
    pub start_k: usize,
    #[serde(default)]
    pub scale: NoiseScale,
}

impl NoiseModel {
    /// Coefficients used for the noisy identification experiments.
    pub fn standard(seed: u64) -> Self {
        Self {
            e_slope: 0.015,
            e_floor: 0.0001,
            x_slope: 0.008,
            x_floor: 0.00001,
            seed,
            start_k: 14,
            scale: NoiseScale::Variance,
        }
    }

    pub fn noiseless(start_k: usize) -> Self {
        Self {
            e_slope: 0.0,
            e_floor: 0.0,
            x_slope: 0.0,
            x_floor: 0.0,
            seed: 0,
            start_k,
            scale: NoiseScale::Variance,
        }
    }

    pub fn with_scale(mut self, scale: NoiseScale) -> Self {
        self.scale = scale;
        self
    }

    fn spread(&self, slope: f64, floor: f64, x: f64) -> f64 {
        let level = (slope * x + floor).max(0.0);
        match self.scale {
            NoiseScale::Variance => level.sqrt(),
            NoiseScale::StdDev => level,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasuredTrajectory {
    /// Starts at `start_k`; not validated against the simplex.
    pub trajectory: Trajectory,
    /// Number of values moved onto a bound of `[0, 1]`.
    pub clamped: usize,
}

fn clamp_unit(x: f64, clamped: &mut usize) -> f64 {
    if x < 0.0 {
        *clamped += 1;
        0.0
    } else if x > 1.0 {
        *clamped += 1;
        1.0
    } else {
        x
    }
}

/// Perturbs `traj` from step `model.start_k` on. Draw order is step, node,
/// then `e`, `p`, `r`, so a seed fixes the output.
pub fn apply_noise(traj: &Trajectory, model: &NoiseModel) -> Result<MeasuredTrajectory> {
    let offset = model
        .start_k
        .checked_sub(traj.start_k())
        .ok_or(Error::StepOutOfRange {
            k: model.start_k,
            len: traj.len(),
        })?;
    let kept = traj.skip(offset)?;
    let mut rng = ChaCha8Rng::seed_from_u64(model.seed);
    let mut clamped = 0;
    let mut draw = |slope: f64, floor: f64, x: f64, clamped: &mut usize| {
        let z: f64 = StandardNormal.sample(&mut rng);
        clamp_unit(x + model.spread(slope, floor, x) * z, clamped)
    };

    let mut states = Vec::with_capacity(kept.len());
    for st in kept.states() {
        let n = st.n();
        let mut e = st.e.as_ref().map(|_| Vec::with_capacity(n));
        let mut p = Vec::with_capacity(n);
        let mut r = Vec::with_capacity(n);
        let mut s = Vec::with_capacity(n);
        for i in 0..n {
            let ei = match (&st.e, e.as_mut()) {
                (Some(src), Some(dst)) => {
                    let v = draw(model.e_slope, model.e_floor, src[i], &mut clamped);
                    dst.push(v);
                    v
                }
                _ => 0.0,
            };
            let pi = draw(model.x_slope, model.x_floor, st.p[i], &mut clamped);
            let ri = draw(model.x_slope, model.x_floor, st.r[i], &mut clamped);
            p.push(pi);
            r.push(ri);
            let si = 1.0 - ei - pi - ri;
            s.push(if si < 0.0 {
                clamped += 1;
                0.0
            } else {
                si
            });
        }
        states.push(EpidemicState { s, e, p, r });
    }
    let trajectory = Trajectory::new_unchecked(states, traj.h())?.with_start_k(model.start_k);
    Ok(MeasuredTrajectory { trajectory, clamped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::{simulate, ModelParams, SeirParams, SimOptions};
    use crate::graph::Network;

    fn truth() -> Trajectory {
        let net = Network::ring(5, 0.5).unwrap();
        let mut e = vec![0.0; 5];
        e[0] = 0.05;
        let st = EpidemicState::seir_from(e, vec![0.0; 5], vec![0.0; 5]).unwrap();
        let params = ModelParams::Seir(SeirParams::homogeneous(5, 0.2, 0.3, 0.4, 0.3, 1.0));
        simulate(&st, &params, &net, 40, &SimOptions::default()).unwrap()
    }

    #[test]
    fn zero_noise_is_identity_after_start() {
        let traj = truth();
        let out = apply_noise(&traj, &NoiseModel::noiseless(14)).unwrap();
        assert_eq!(out.clamped, 0);
        assert_eq!(out.trajectory.start_k(), 14);
        assert_eq!(out.trajectory.len(), traj.len() - 14);
        for (got, want) in out.trajectory.states().iter().zip(&traj.states()[14..]) {
            assert_eq!(got.e, want.e);
            assert_eq!(got.p, want.p);
            assert_eq!(got.r, want.r);
            for (a, b) in got.s.iter().zip(&want.s) {
                assert!((a - b).abs() <= 1e-15);
            }
        }
    }

    #[test]
    fn seeded_noise_is_deterministic() {
        let traj = truth();
        let a = apply_noise(&traj, &NoiseModel::standard(7)).unwrap();
        let b = apply_noise(&traj, &NoiseModel::standard(7)).unwrap();
        let c = apply_noise(&traj, &NoiseModel::standard(8)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.trajectory, c.trajectory);
    }

    #[test]
    fn values_stay_in_unit_interval() {
        let traj = truth();
        let model = NoiseModel {
            e_slope: 1.0,
            e_floor: 0.1,
            ..NoiseModel::standard(3)
        };
        let out = apply_noise(&traj, &model).unwrap();
        assert!(out.clamped > 0);
        for st in out.trajectory.states() {
            for v in st.s.iter().chain(st.e.as_ref().unwrap()).chain(&st.p).chain(&st.r) {
                assert!((0.0..=1.0).contains(v));
            }
        }
    }

    #[test]
    fn start_beyond_horizon_is_an_error() {
        assert!(apply_noise(&truth(), &NoiseModel::noiseless(41)).is_err());
        assert!(apply_noise(&truth().skip(5).unwrap(), &NoiseModel::noiseless(2)).is_err());
    }
}
