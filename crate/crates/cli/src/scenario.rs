//! Scenario documents. Every path inside a scenario is resolved against the
//! directory holding the scenario file.

use std::fs::{self, File};
use std::io::BufReader;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use netepi_core::estimation::{ErrorMetric, EstimateTarget, NoiseModel, NoiseScale};
use netepi_core::{
    load_labels, load_matrix, DMatrix, EpidemicState, ModelKind, ModelParams, Network, SeirParams, SirParams,
};
use serde::Deserialize;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ScenarioFile {
    model: ModelName,
    network: NetworkSpec,
    params: ParamSpec,
    initial: InitialSpec,
    steps: usize,
    h: f64,
    #[serde(default)]
    noise: Option<NoiseSpec>,
    #[serde(default)]
    estimate: EstimateSpec,
    #[serde(default = "default_output")]
    output: PathBuf,
    #[serde(default)]
    seed: u64,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(rename_all = "lowercase")]
enum ModelName {
    Sir,
    Seir,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkSpec {
    nodes: usize,
    /// `i,j,weight` edge list; row `i` lists the nodes influencing `i`.
    edges: PathBuf,
    #[serde(default)]
    layers: Vec<PathBuf>,
    #[serde(default)]
    labels: Option<PathBuf>,
}

/// A rate given once for every node, inline per node, or as a file with one
/// value per line.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Rate {
    Scalar(f64),
    PerNode(Vec<f64>),
    File(PathBuf),
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LayerRates {
    beta_e: Rate,
    beta: Rate,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ParamSpec {
    #[serde(default)]
    beta_e: Option<Rate>,
    beta: Rate,
    #[serde(default)]
    sigma: Option<Rate>,
    gamma: Rate,
    #[serde(default)]
    layers: Vec<LayerRates>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct Seed {
    node: usize,
    #[serde(default)]
    e: f64,
    #[serde(default)]
    p: f64,
    #[serde(default)]
    r: f64,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum InitialSpec {
    /// Listed nodes get the given values, every other node is fully
    /// susceptible.
    Seeds { seeds: Vec<Seed> },
    /// Explicit per-node values; `s` defaults to `1 - e - p - r`.
    Explicit {
        #[serde(default)]
        s: Option<Vec<f64>>,
        #[serde(default)]
        e: Option<Vec<f64>>,
        p: Vec<f64>,
        r: Vec<f64>,
    },
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NoiseSpec {
    e_slope: Option<f64>,
    e_floor: Option<f64>,
    x_slope: Option<f64>,
    x_floor: Option<f64>,
    start_k: Option<usize>,
    #[serde(default)]
    scale: NoiseScale,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Reference {
    /// Compare the re-simulation against the estimator input.
    #[default]
    Input,
    /// Compare against the noiseless trajectory over the measured window.
    Truth,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimateSpec {
    #[serde(default)]
    pub kind: Option<EstimateTarget>,
    #[serde(default)]
    pub metric: ErrorMetric,
    #[serde(default)]
    pub reference: Reference,
    #[serde(default = "yes")]
    pub resimulate: bool,
}

fn yes() -> bool {
    true
}

impl Default for EstimateSpec {
    fn default() -> Self {
        Self {
            kind: None,
            metric: ErrorMetric::default(),
            reference: Reference::default(),
            resimulate: true,
        }
    }
}

/// A scenario with every file loaded and every value checked for shape.
#[derive(Debug)]
pub struct Scenario {
    pub model: ModelKind,
    pub network: Network,
    pub params: ModelParams,
    pub initial: EpidemicState,
    pub steps: usize,
    pub h: f64,
    pub noise: Option<NoiseModel>,
    pub estimate: EstimateSpec,
    pub output: PathBuf,
    pub seed: u64,
}

fn read_matrix(path: &Path, n: usize) -> Result<DMatrix<f64>> {
    let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
    load_matrix(BufReader::new(file), n).with_context(|| format!("reading {}", path.display()))
}

fn read_values(path: &Path) -> Result<Vec<f64>> {
    let text = fs::read_to_string(path).with_context(|| format!("opening {}", path.display()))?;
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .enumerate()
        .map(|(i, l)| {
            l.parse::<f64>()
                .with_context(|| format!("{}: value {} is not a number: {l:?}", path.display(), i + 1))
        })
        .collect()
}

impl Rate {
    fn resolve(&self, base: &Path, n: usize, name: &str) -> Result<Vec<f64>> {
        let values = match self {
            Rate::Scalar(v) => vec![*v; n],
            Rate::PerNode(v) => v.clone(),
            Rate::File(path) => read_values(&base.join(path))?,
        };
        ensure!(values.len() == n, "{name}: expected {n} values, found {}", values.len());
        Ok(values)
    }
}

fn required<'a>(rate: &'a Option<Rate>, name: &str) -> Result<&'a Rate> {
    rate.as_ref().with_context(|| format!("SEIR scenarios need params.{name}"))
}

impl Scenario {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading scenario {}", path.display()))?;
        let file: ScenarioFile =
            serde_json::from_str(&text).with_context(|| format!("parsing scenario {}", path.display()))?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::resolve(file, base)
    }

    fn resolve(file: ScenarioFile, base: &Path) -> Result<Self> {
        let n = file.network.nodes;
        ensure!(n > 0, "network.nodes must be positive");
        ensure!(file.h.is_finite() && file.h > 0.0, "h must be positive, got {}", file.h);

        let mut network = Network::new(read_matrix(&base.join(&file.network.edges), n)?)?;
        if !file.network.layers.is_empty() {
            let layers = file
                .network
                .layers
                .iter()
                .map(|p| read_matrix(&base.join(p), n))
                .collect::<Result<Vec<_>>>()?;
            network = network.with_layers(layers)?;
        }
        if let Some(labels) = &file.network.labels {
            let path = base.join(labels);
            let f = File::open(&path).with_context(|| format!("opening {}", path.display()))?;
            network = network.with_labels(load_labels(BufReader::new(f), n)?)?;
        }

        let spec = &file.params;
        let (model, params) = match file.model {
            ModelName::Sir => {
                ensure!(
                    spec.beta_e.is_none() && spec.sigma.is_none() && spec.layers.is_empty(),
                    "SIR scenarios take only params.beta and params.gamma"
                );
                let params = SirParams {
                    beta: spec.beta.resolve(base, n, "beta")?,
                    gamma: spec.gamma.resolve(base, n, "gamma")?,
                    h: file.h,
                };
                (ModelKind::Sir, ModelParams::Sir(params))
            }
            ModelName::Seir => {
                ensure!(
                    spec.layers.len() == network.layers().len(),
                    "{} layer rate sets for {} network layers",
                    spec.layers.len(),
                    network.layers().len()
                );
                let mut params = SeirParams {
                    beta_e: required(&spec.beta_e, "beta_e")?.resolve(base, n, "beta_e")?,
                    beta: spec.beta.resolve(base, n, "beta")?,
                    sigma: required(&spec.sigma, "sigma")?.resolve(base, n, "sigma")?,
                    gamma: spec.gamma.resolve(base, n, "gamma")?,
                    h: file.h,
                    layer_beta_e: Vec::new(),
                    layer_beta: Vec::new(),
                };
                for layer in &spec.layers {
                    params = params.with_layer(
                        layer.beta_e.resolve(base, n, "layer beta_e")?,
                        layer.beta.resolve(base, n, "layer beta")?,
                    );
                }
                (ModelKind::Seir, ModelParams::Seir(params))
            }
        };

        let initial = initial_state(&file.initial, model, n)?;
        let noise = file.noise.map(|spec| {
            let standard = NoiseModel::standard(file.seed);
            NoiseModel {
                e_slope: spec.e_slope.unwrap_or(standard.e_slope),
                e_floor: spec.e_floor.unwrap_or(standard.e_floor),
                x_slope: spec.x_slope.unwrap_or(standard.x_slope),
                x_floor: spec.x_floor.unwrap_or(standard.x_floor),
                seed: file.seed,
                start_k: spec.start_k.unwrap_or(standard.start_k),
                scale: spec.scale,
            }
        });

        Ok(Self {
            model,
            network,
            params,
            initial,
            steps: file.steps,
            h: file.h,
            noise,
            estimate: file.estimate,
            output: base.join(file.output),
            seed: file.seed,
        })
    }

    /// Replaces the scenario seed, including the one inside the noise model.
    pub fn reseed(&mut self, seed: u64) {
        self.seed = seed;
        if let Some(noise) = self.noise.as_mut() {
            noise.seed = seed;
        }
    }

    pub fn estimate_target(&self) -> EstimateTarget {
        self.estimate.kind.unwrap_or(match self.model {
            ModelKind::Sir => EstimateTarget::SirHomogeneous,
            ModelKind::Seir => EstimateTarget::SeirHomogeneous,
        })
    }
}

fn initial_state(spec: &InitialSpec, model: ModelKind, n: usize) -> Result<EpidemicState> {
    let seir = model == ModelKind::Seir;
    let state = match spec {
        InitialSpec::Seeds { seeds } => {
            let (mut e, mut p, mut r) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
            for seed in seeds {
                ensure!(seed.node < n, "seed node {} out of range for {n} nodes", seed.node);
                ensure!(seir || seed.e == 0.0, "SIR seeds cannot set e");
                e[seed.node] = seed.e;
                p[seed.node] = seed.p;
                r[seed.node] = seed.r;
            }
            if seir {
                EpidemicState::seir_from(e, p, r)?
            } else {
                EpidemicState::sir_from(p, r)?
            }
        }
        InitialSpec::Explicit { s, e, p, r } => match (seir, e, s) {
            (true, Some(e), Some(s)) => EpidemicState::seir(s.clone(), e.clone(), p.clone(), r.clone())?,
            (true, Some(e), None) => EpidemicState::seir_from(e.clone(), p.clone(), r.clone())?,
            (true, None, _) => bail!("SEIR initial state needs e"),
            (false, Some(_), _) => bail!("SIR initial state cannot set e"),
            (false, None, Some(s)) => EpidemicState::sir(s.clone(), p.clone(), r.clone())?,
            (false, None, None) => EpidemicState::sir_from(p.clone(), r.clone())?,
        },
    };
    ensure!(state.n() == n, "initial state has {} nodes, network has {n}", state.n());
    Ok(state)
}
