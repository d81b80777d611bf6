//! Fixtures shared by the benchmarks.

use netepi_core::{simulate, EpidemicState, ModelParams, Network, SeirParams, SimOptions, Trajectory};

pub struct Outbreak {
    pub network: Network,
    pub params: SeirParams,
    pub initial: EpidemicState,
}

/// Grid network with self-loops and two seeded corner nodes.
pub fn grid_outbreak(rows: usize, cols: usize) -> Outbreak {
    let network = Network::grid(rows, cols, true).expect("grid dimensions are positive");
    let n = network.n();
    let mut e = vec![0.0; n];
    let mut p = vec![0.0; n];
    e[0] = 0.02;
    p[0] = 0.01;
    e[1.min(n - 1)] += 0.03;
    Outbreak {
        params: SeirParams::homogeneous(n, 0.04, 0.06, 0.4, 0.3, 1.0),
        initial: EpidemicState::seir_from(e, p, vec![0.0; n]).expect("seed values are valid"),
        network,
    }
}

impl Outbreak {
    pub fn model(&self) -> ModelParams {
        ModelParams::Seir(self.params.clone())
    }

    pub fn run(&self, steps: usize) -> Trajectory {
        simulate(&self.initial, &self.model(), &self.network, steps, &SimOptions::default())
            .expect("fixture parameters are well posed")
    }
}
