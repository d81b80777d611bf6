use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context as _, Result};
use log::{info, warn};
use netepi_core::estimation::{apply_noise, estimate_pipeline, EstimateTarget, PipelineOptions};
use netepi_core::{convergence_diagnostics, simulate as run_model, SimOptions, Trajectory, SIMPLEX_TOLERANCE};
use serde::Serialize;

use crate::scenario::{Reference, Scenario};

pub struct Context {
    pub scenario: Scenario,
    pub strict: bool,
}

impl Context {
    fn out_file(&self, name: &str) -> Result<PathBuf> {
        let dir = &self.scenario.output;
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(dir.join(name))
    }

    fn read_trajectory(&self, path: &Path) -> Result<Trajectory> {
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let traj = Trajectory::read_csv(BufReader::new(file), self.scenario.h)
            .with_context(|| format!("reading {}", path.display()))?;
        if traj.n() != self.scenario.network.n() {
            bail!(
                "{} has {} nodes, the scenario network has {}",
                path.display(),
                traj.n(),
                self.scenario.network.n()
            );
        }
        Ok(traj)
    }

    fn default_input(&self, input: Option<PathBuf>, name: &str) -> PathBuf {
        input.unwrap_or_else(|| self.scenario.output.join(name))
    }
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut out = BufWriter::new(File::create(path).with_context(|| format!("creating {}", path.display()))?);
    serde_json::to_writer_pretty(&mut out, value)?;
    out.write_all(b"\n")?;
    out.flush()?;
    Ok(())
}

fn write_trajectory(path: &Path, traj: &Trajectory) -> Result<()> {
    let file = File::create(path).with_context(|| format!("creating {}", path.display()))?;
    traj.write_csv(BufWriter::new(file))?;
    Ok(())
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map_or_else(|| path.display().to_string(), |n| n.to_string_lossy().into_owned())
}

#[derive(Serialize)]
struct SimulateSummary<'a> {
    model: &'static str,
    nodes: usize,
    steps: usize,
    h: f64,
    well_posed: bool,
    violations: Vec<String>,
    max_sum_error: f64,
    min_value: f64,
    max_value: f64,
    final_max_active: f64,
    trajectory: &'a str,
}

pub fn simulate(ctx: &Context) -> Result<ExitCode> {
    let sc = &ctx.scenario;
    let report = sc.params.check(&sc.network)?;
    for v in &report.violations {
        warn!("assumption violated: {v}");
    }
    if ctx.strict && !report.is_well_posed() {
        let list: Vec<String> = report.violations.iter().map(ToString::to_string).collect();
        bail!("assumption violated:\n  {}", list.join("\n  "));
    }
    let opts = if ctx.strict { SimOptions::default() } else { SimOptions::lenient() };
    let traj = run_model(&sc.initial, &sc.params, &sc.network, sc.steps, &opts)?;

    let mut max_sum_error = 0.0f64;
    let mut min_value = f64::INFINITY;
    let mut max_value = f64::NEG_INFINITY;
    for st in traj.states() {
        for i in 0..st.n() {
            max_sum_error = max_sum_error.max((st.node_sum(i) - 1.0).abs());
        }
        let e = st.e.as_deref().unwrap_or(&[]);
        for v in st.s.iter().chain(e).chain(&st.p).chain(&st.r) {
            min_value = min_value.min(*v);
            max_value = max_value.max(*v);
        }
    }
    if max_sum_error > SIMPLEX_TOLERANCE {
        warn!("states drift off the simplex by {max_sum_error:e}");
    }

    let path = ctx.out_file("trajectory.csv")?;
    write_trajectory(&path, &traj)?;
    let summary = SimulateSummary {
        model: sc.model.name(),
        nodes: sc.network.n(),
        steps: traj.transitions(),
        h: sc.h,
        well_posed: report.is_well_posed(),
        violations: report.violations.iter().map(ToString::to_string).collect(),
        max_sum_error,
        min_value,
        max_value,
        final_max_active: traj.states().last().map_or(0.0, |st| st.max_active()),
        trajectory: "trajectory.csv",
    };
    write_json(&ctx.out_file("simulate.json")?, &summary)?;
    info!("wrote {} states to {}", traj.len(), path.display());
    println!(
        "simulated {} steps on {} nodes, max |sum-1| {:.3e}",
        summary.steps, summary.nodes, summary.max_sum_error
    );
    Ok(ExitCode::SUCCESS)
}

pub fn diagnose(ctx: &Context, input: Option<PathBuf>) -> Result<ExitCode> {
    let sc = &ctx.scenario;
    let path = ctx.default_input(input, "trajectory.csv");
    let traj = ctx.read_trajectory(&path)?;
    if ctx.strict {
        traj.validate(SIMPLEX_TOLERANCE)
            .with_context(|| format!("validating {}", path.display()))?;
    }
    let report = convergence_diagnostics(&traj, &sc.params, &sc.network)?;
    let csv = ctx.out_file("convergence.csv")?;
    report.write_csv(BufWriter::new(File::create(&csv)?))?;
    write_json(&ctx.out_file("convergence.json")?, &report.summary_json())?;
    match (report.k_bar, report.linear_rate_estimate) {
        (Some(k), Some(rate)) => println!("k_bar {k}, monotone {}, rate {rate:.6}", report.monotone),
        (Some(k), None) => println!("k_bar {k}, monotone {}, rate undefined", report.monotone),
        (None, _) => println!("lambda stays at or above 1, monotone {}", report.monotone),
    }
    Ok(ExitCode::SUCCESS)
}

#[derive(Serialize)]
struct PerturbSidecar<'a> {
    source: String,
    seed: u64,
    model: &'a netepi_core::estimation::NoiseModel,
    clamped: usize,
    start_k: usize,
    states: usize,
}

pub fn perturb(ctx: &Context, input: Option<PathBuf>) -> Result<ExitCode> {
    let sc = &ctx.scenario;
    let Some(model) = sc.noise.as_ref() else {
        bail!("the scenario has no noise section");
    };
    let path = ctx.default_input(input, "trajectory.csv");
    let traj = ctx.read_trajectory(&path)?;
    let measured = apply_noise(&traj, model)?;
    if measured.clamped > 0 {
        warn!("{} values clamped to [0, 1]", measured.clamped);
    }
    write_trajectory(&ctx.out_file("measured.csv")?, &measured.trajectory)?;
    let sidecar = PerturbSidecar {
        source: file_name(&path),
        seed: model.seed,
        model,
        clamped: measured.clamped,
        start_k: measured.trajectory.start_k(),
        states: measured.trajectory.len(),
    };
    write_json(&ctx.out_file("measured.json")?, &sidecar)?;
    println!(
        "perturbed {} states from k = {}, {} values clamped",
        sidecar.states, sidecar.start_k, sidecar.clamped
    );
    Ok(ExitCode::SUCCESS)
}

pub fn estimate(ctx: &Context, input: Option<PathBuf>, kind: Option<EstimateTarget>) -> Result<ExitCode> {
    let sc = &ctx.scenario;
    let default = if sc.noise.is_some() { "measured.csv" } else { "trajectory.csv" };
    let path = ctx.default_input(input, default);
    let traj = ctx.read_trajectory(&path)?;
    let target = kind.unwrap_or_else(|| sc.estimate_target());

    let truth = match sc.estimate.reference {
        Reference::Input => None,
        Reference::Truth => {
            let full = ctx.read_trajectory(&sc.output.join("trajectory.csv"))?;
            let offset = traj
                .start_k()
                .checked_sub(full.start_k())
                .context("measured data start before the noiseless trajectory")?;
            Some(full.skip(offset)?.truncated(traj.transitions()))
        }
    };
    let opts = PipelineOptions {
        resimulate: sc.estimate.resimulate,
        metric: sc.estimate.metric,
        reference: truth.as_ref(),
    };
    let report = estimate_pipeline(&traj, &sc.network, target, &opts)?;
    write_json(&ctx.out_file("estimate.json")?, &report)?;

    for set in &report.estimates {
        let values: Vec<String> = set.values().iter().map(|v| format!("{v:.6}")).collect();
        match set.node {
            Some(i) => println!("node {i}: ({})", values.join(", ")),
            None => println!("({})", values.join(", ")),
        }
    }
    if report.identifiable {
        Ok(ExitCode::SUCCESS)
    } else {
        println!("not identifiable: {}", report.failed_conditions.join("; "));
        Ok(ExitCode::from(2))
    }
}
