use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use latentnn::estimator::{complete_matrix, EstimatorConfig, Fallback, Provenance, Target, Variant};
use latentnn::evalbound::{
    matrix_mse_bound, matrix_tail_bound, mse, mse_test, rse, tensor_mse_bound, BoundParams, Scope, TensorBoundParams,
};
use latentnn::obsdata::{
    load_observations, load_tensor, split_holdout, write_observations, write_tensor, DenseMatrix, MatrixFormat,
    ObservationMatrix, ObservationTensor,
};
use latentnn::synthgen::{sample_instance, LatentFn, LatentMeasure, LatentModelSpec, NoiseModel};
use latentnn::tensorize::{optimal_partition, tensor_complete, FlatteningPlan, PartitionMode};
use latentnn::{Error, Result};

#[derive(Parser)]
#[command(name = "latentnn", version, about = "Nearest-neighbor matrix and tensor completion")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a synthetic instance from a latent model spec (JSON).
    Synth(SynthArgs),
    /// Complete a partially observed matrix.
    Complete(CompleteArgs),
    /// Complete a partially observed tensor through a flattening.
    TensorComplete(TensorCompleteArgs),
    /// Compare an estimate with the truth or a held-out set.
    Evaluate(EvaluateArgs),
    /// Evaluate a closed-form error bound.
    Bound(BoundArgs),
    /// MSE over a grid of square sizes and seeds.
    Sweep(SweepArgs),
    /// Split observations into train and test sets.
    Split(SplitArgs),
}

#[derive(Args, Serialize)]
struct SynthArgs {
    #[arg(long)]
    spec: PathBuf,
    /// Overrides the seed stored in the spec.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    #[serde(skip)]
    out_dir: PathBuf,
}

#[derive(Args, Serialize, Clone)]
struct EstimatorArgs {
    #[arg(long, default_value = "user-user")]
    variant: Variant,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 2)]
    beta: usize,
    #[arg(long)]
    beta_high: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long)]
    include_self: bool,
    #[arg(long, default_value = "zero")]
    fallback: Fallback,
}

impl EstimatorArgs {
    fn config(&self) -> EstimatorConfig {
        EstimatorConfig {
            variant: self.variant,
            k: self.k,
            beta_low: self.beta,
            beta_high: self.beta_high,
            lambda: self.lambda,
            include_self: self.include_self,
            fallback: self.fallback,
        }
    }
}

#[derive(Args, Serialize)]
struct RunArgs {
    /// Worker threads; 0 uses all cores. Does not affect results.
    #[arg(long, default_value_t = 0)]
    #[serde(skip)]
    threads: usize,
    /// Add wall-clock duration to the report.
    #[arg(long)]
    #[serde(skip)]
    record_timing: bool,
}

#[derive(Args, Serialize)]
struct CompleteArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "triplet-csv")]
    format: MatrixFormat,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, default_value = "missing-only")]
    target: Target,
    /// Dense CSV of estimates.
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
    /// JSON run report.
    #[arg(long)]
    #[serde(skip)]
    report: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Serialize)]
struct TensorCompleteArgs {
    #[arg(long)]
    input: PathBuf,
    /// `auto-user`, `auto-item` or `explicit:<rows>/<cols>` with 1-based
    /// comma-separated modes, e.g. `explicit:1/2,3`.
    #[arg(long, default_value = "auto-user")]
    partition: String,
    #[arg(long)]
    exact_exclusion: bool,
    #[command(flatten)]
    estimator: EstimatorArgs,
    #[arg(long, default_value = "missing-only")]
    target: Target,
    /// Tensor file with every cell.
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    report: Option<PathBuf>,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Serialize)]
struct EvaluateArgs {
    /// Dense CSV of estimates.
    #[arg(long)]
    estimate: PathBuf,
    /// Dense CSV of true values.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Triplet CSV of held-out cells. Scored against `--truth` at those
    /// cells when given, otherwise against the stored values.
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long, default_value = "mse,rmse,rse", value_delimiter = ',')]
    metrics: Vec<Metric>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Metric {
    Mse,
    Rmse,
    Rse,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum BoundKind {
    Matrix,
    Tail,
    Tensor,
}

#[derive(Args, Serialize)]
struct BoundArgs {
    #[arg(long)]
    kind: BoundKind,
    /// JSON parameter file; flags below override its fields.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    k: Option<f64>,
    #[arg(long)]
    zeta: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    lipschitz: f64,
    /// Latent dimension used for default `zeta` and `phi`.
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value_t = 0.0)]
    b_e: f64,
    #[arg(long = "b0")]
    b0: Option<f64>,
    #[arg(long)]
    gamma_sq: Option<f64>,
    #[arg(long)]
    c_phi: Option<f64>,
    #[arg(long)]
    c_k: Option<f64>,
    #[arg(long)]
    c_beta: Option<f64>,
    #[arg(long)]
    phi_at: Option<f64>,
    #[arg(long)]
    delta_prime: Option<f64>,
    /// Deviation threshold for `--kind tail`.
    #[arg(long)]
    eps: Option<f64>,
    /// Tensor shape, e.g. `100,100,100`.
    #[arg(long, value_delimiter = ',')]
    shape: Option<Vec<usize>>,
    /// 1-based row modes of the flattening; defaults to the user-optimal one.
    #[arg(long, value_delimiter = ',')]
    row_modes: Option<Vec<usize>>,
    #[arg(long)]
    beta_low: Option<f64>,
    #[arg(long)]
    beta_high: Option<f64>,
    #[arg(long)]
    diameter: Option<f64>,
    #[arg(long)]
    c_l: Option<f64>,
    #[arg(long)]
    c_h: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    c_q: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum NoiseKind {
    None,
    Uniform,
    TruncatedGaussian,
}

#[derive(Args, Serialize)]
struct SweepArgs {
    #[arg(long, value_delimiter = ',', default_value = "100,200,400")]
    sizes: Vec<usize>,
    /// Number of seeds per size.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    #[arg(long, default_value = "logistic-of-sum")]
    latent_fn: String,
    #[arg(long, default_value_t = 1)]
    d: usize,
    #[arg(long, default_value = "uniform")]
    noise: NoiseKind,
    #[arg(long, default_value_t = 0.1)]
    b_e: f64,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 0.5)]
    p: f64,
    #[arg(long, default_value = "user-user")]
    variant: Variant,
    /// Neighbor count, or `auto` for ceil((mp)^(1/3) / 8).
    #[arg(long, default_value = "auto")]
    k: String,
    /// Overlap threshold, or `auto` for ceil(np^2 / 2).
    #[arg(long, default_value = "auto")]
    beta: String,
    #[arg(long)]
    beta_high: Option<usize>,
    #[arg(long, default_value_t = 0.0)]
    lambda: f64,
    #[arg(long, default_value = "zero")]
    fallback: Fallback,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
    #[command(flatten)]
    run: RunArgs,
}

#[derive(Args, Serialize)]
struct SplitArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value = "triplet-csv")]
    format: MatrixFormat,
    #[arg(long, default_value_t = 0.2)]
    fraction: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    #[serde(skip)]
    train: PathBuf,
    #[arg(long)]
    #[serde(skip)]
    test: PathBuf,
}

/// Provenance of a run, embedded in every JSON report.
#[derive(Serialize)]
struct RunManifest {
    command: &'static str,
    config: Value,
    inputs: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    version: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration_secs: Option<f64>,
}

impl RunManifest {
    fn new<C: Serialize>(command: &'static str, config: &C, inputs: &[&Path]) -> Result<Self> {
        let mut digests = BTreeMap::new();
        for path in inputs {
            let bytes = fs::read(path)?;
            digests.insert(path.display().to_string(), format!("{:x}", Sha256::digest(&bytes)));
        }
        Ok(RunManifest {
            command,
            config: serde_json::to_value(config)?,
            inputs: digests,
            seed: None,
            version: env!("CARGO_PKG_VERSION"),
            duration_secs: None,
        })
    }

    fn finish(mut self, started: Instant, record: bool) -> Self {
        if record {
            self.duration_secs = Some(started.elapsed().as_secs_f64());
        }
        self
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json(path: Option<&Path>, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value)? + "\n";
    match path {
        Some(p) => create(p)?.write_all(text.as_bytes())?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(File::open(path)?))
}

fn with_threads<T: Send>(threads: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidParameter(format!("thread pool: {e}")))?;
    pool.install(f)
}

fn provenance_counts(prov: impl Fn(Provenance) -> usize) -> Value {
    json!({
        "estimated": prov(Provenance::Estimated),
        "fallback": prov(Provenance::Fallback),
        "observed_passthrough": prov(Provenance::ObservedPassthrough),
    })
}

fn run_synth(args: &SynthArgs) -> Result<()> {
    let started = Instant::now();
    let mut spec: LatentModelSpec = serde_json::from_reader(open(&args.spec)?)?;
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    let inst = sample_instance(&spec)?;
    fs::create_dir_all(&args.out_dir)?;
    let (observed_name, truth_name) = if spec.shape.len() == 2 {
        let obs = inst.observed_matrix()?;
        let mut out = create(&args.out_dir.join("observed.csv"))?;
        write_observations(&obs, &mut out, MatrixFormat::TripletCsv)?;
        out.flush()?;
        let mut out = create(&args.out_dir.join("truth.csv"))?;
        inst.truth_matrix()?.write_csv(&mut out)?;
        out.flush()?;
        ("observed.csv", "truth.csv")
    } else {
        let mut out = create(&args.out_dir.join("observed.tensor.csv"))?;
        write_tensor(&inst.observed, &mut out)?;
        out.flush()?;
        let shape = spec.shape.clone();
        let total: usize = shape.iter().product();
        let cells = (0..total)
            .map(|flat| {
                let mut coords = vec![0; shape.len()];
                let mut rest = flat;
                for (c, &d) in coords.iter_mut().zip(&shape).rev() {
                    *c = rest % d;
                    rest /= d;
                }
                (coords, inst.truth[flat])
            })
            .collect();
        let mut out = create(&args.out_dir.join("truth.tensor.csv"))?;
        write_tensor(&ObservationTensor::new(shape, cells)?, &mut out)?;
        out.flush()?;
        ("observed.tensor.csv", "truth.tensor.csv")
    };
    let mut manifest = RunManifest::new("synth", args, &[&args.spec])?;
    manifest.seed = Some(spec.seed);
    let echo = json!({
        "manifest": manifest.finish(started, false),
        "spec": spec,
        "observed_file": observed_name,
        "truth_file": truth_name,
        "observed_entries": inst.observed.len(),
        "lipschitz": inst.lipschitz,
        "value_bound": inst.value_bound,
        "B0": inst.b0,
        "gamma_sq_declared": inst.gamma_sq_declared,
        "gamma_sq_realized": inst.gamma_sq_realized,
    });
    write_json(Some(&args.out_dir.join("spec.json")), &echo)
}

fn run_complete(args: &CompleteArgs) -> Result<()> {
    let started = Instant::now();
    let cfg = args.estimator.config();
    cfg.validate()?;
    let obs = load_observations(open(&args.input)?, args.format)?;
    let est = with_threads(args.run.threads, || complete_matrix(&obs, &cfg, args.target))?;
    let mut out = create(&args.out)?;
    est.values().write_csv(&mut out)?;
    out.flush()?;
    if let Some(report) = &args.report {
        let manifest = RunManifest::new("complete", args, &[&args.input])?.finish(started, args.run.record_timing);
        let value = json!({
            "manifest": manifest,
            "rows": obs.nrows(),
            "cols": obs.ncols(),
            "observed_entries": obs.len(),
            "cells": provenance_counts(|p| est.count(p)),
        });
        write_json(Some(report), &value)?;
    }
    Ok(())
}

fn parse_modes(text: &str, t: usize) -> Result<Vec<usize>> {
    text.split(',')
        .map(|s| match s.trim().parse::<usize>() {
            Ok(q) if q >= 1 && q <= t => Ok(q - 1),
            _ => Err(Error::InvalidParameter(format!("invalid mode `{s}` for order {t}"))),
        })
        .collect()
}

fn parse_partition(text: &str, shape: &[usize]) -> Result<FlatteningPlan> {
    match text {
        "auto-user" => optimal_partition(shape, PartitionMode::User),
        "auto-item" => optimal_partition(shape, PartitionMode::Item),
        other => {
            let body = other
                .strip_prefix("explicit:")
                .ok_or_else(|| Error::InvalidParameter(format!("unknown partition `{other}`")))?;
            let (rows, cols) = body
                .split_once('/')
                .ok_or_else(|| Error::InvalidParameter(format!("explicit partition `{body}` needs rows/cols")))?;
            let t = shape.len();
            let rows = parse_modes(rows, t)?;
            let mut pi = rows.clone();
            pi.extend(parse_modes(cols, t)?);
            FlatteningPlan::new(shape.to_vec(), pi, rows.len())
        }
    }
}

fn run_tensor_complete(args: &TensorCompleteArgs) -> Result<()> {
    let started = Instant::now();
    let cfg = args.estimator.config();
    cfg.validate()?;
    let tobs = load_tensor(open(&args.input)?)?;
    let plan = parse_partition(&args.partition, tobs.shape())?;
    let est = with_threads(args.run.threads, || {
        tensor_complete(&tobs, &plan, &cfg, args.exact_exclusion, args.target)
    })?;
    let mut out = create(&args.out)?;
    write_tensor(&est.to_tensor(), &mut out)?;
    out.flush()?;
    if let Some(report) = &args.report {
        let manifest =
            RunManifest::new("tensor-complete", args, &[&args.input])?.finish(started, args.run.record_timing);
        let one_based = |modes: &[usize]| modes.iter().map(|q| q + 1).collect::<Vec<_>>();
        let value = json!({
            "manifest": manifest,
            "shape": tobs.shape(),
            "row_modes": one_based(plan.row_modes()),
            "col_modes": one_based(plan.col_modes()),
            "rows": plan.nrows(),
            "cols": plan.ncols(),
            "n_prime": plan.n_prime(),
            "observed_entries": tobs.len(),
            "cells": provenance_counts(|p| est.matrix.count(p)),
        });
        write_json(Some(report), &value)?;
    }
    Ok(())
}

fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let estimate = DenseMatrix::read_csv(open(&args.estimate)?)?;
    let truth = args.truth.as_ref().map(|p| DenseMatrix::read_csv(open(p)?)).transpose()?;
    let test = args
        .test
        .as_ref()
        .map(|p| load_observations(open(p)?, MatrixFormat::TripletCsv))
        .transpose()?;

    // Reference values: the test cells (scored against the truth if given)
    // or every cell of the truth.
    let reference: ObservationMatrix = match (&truth, test) {
        (Some(t), Some(test)) => {
            if (t.nrows(), t.ncols()) != (test.nrows(), test.ncols()) {
                return Err(Error::ShapeMismatch("truth and test sets differ in shape".into()));
            }
            ObservationMatrix::new(t.nrows(), t.ncols(), test.entries().map(|(u, i, _)| (u, i, t.get(u, i))))?
        }
        (None, Some(test)) => test,
        (Some(t), None) => t.to_observations(),
        (None, None) => {
            return Err(Error::InvalidParameter("evaluate needs --truth, --test or both".into()));
        }
    };

    let mut metrics = serde_json::Map::new();
    for metric in &args.metrics {
        let (name, value) = match metric {
            Metric::Mse => ("mse", mse_test(&estimate, &reference)?),
            Metric::Rmse => ("rmse", mse_test(&estimate, &reference)?.sqrt()),
            Metric::Rse => ("rse", rse(&estimate, &reference)?),
        };
        metrics.insert(name.into(), json!(value));
    }
    let mut inputs: Vec<&Path> = vec![&args.estimate];
    inputs.extend(args.truth.as_deref());
    inputs.extend(args.test.as_deref());
    let value = json!({
        "manifest": RunManifest::new("evaluate", args, &inputs)?,
        "cells": reference.len(),
        "metrics": metrics,
    });
    write_json(args.out.as_deref(), &value)
}

fn missing(name: &str) -> Error {
    Error::InvalidParameter(format!("--{name} is required"))
}

fn matrix_params(args: &BoundArgs) -> Result<BoundParams> {
    let mut params = match &args.params {
        Some(path) => serde_json::from_reader(open(path)?)?,
        None => {
            let m = args.m.ok_or_else(|| missing("m"))?;
            let n = args.n.ok_or_else(|| missing("n"))?;
            let p = args.p.ok_or_else(|| missing("p"))?;
            BoundParams::uniform_cube(m, n, p, args.lipschitz, args.d, args.b_e)
        }
    };
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = args.$field { params.$field = v; } )* };
    }
    set!(m, n, p, beta, k, zeta, b0, gamma_sq, c_phi, c_k, c_beta);
    if args.phi_at.is_some() {
        params.phi_at = args.phi_at;
    }
    if args.delta_prime.is_some() {
        params.delta_prime = args.delta_prime;
    }
    Ok(params)
}

fn tensor_params(args: &BoundArgs) -> Result<TensorBoundParams> {
    let mut params = match &args.params {
        Some(path) => serde_json::from_reader(open(path)?)?,
        None => {
            let shape = args.shape.clone().ok_or_else(|| missing("shape"))?;
            let p = args.p.ok_or_else(|| missing("p"))?;
            let rows = match &args.row_modes {
                Some(r) => r.iter().map(|q| q.wrapping_sub(1)).collect(),
                None => optimal_partition(&shape, PartitionMode::User)?.row_modes().to_vec(),
            };
            TensorBoundParams::uniform_cube(shape, rows, p, args.lipschitz, args.d, args.b_e)
        }
    };
    if let Some(rows) = &args.row_modes {
        params.row_modes = rows.iter().map(|q| q.wrapping_sub(1)).collect();
    }
    macro_rules! set {
        ($($field:ident),*) => { $( if let Some(v) = args.$field { params.$field = v; } )* };
    }
    set!(p, beta_low, beta_high, k, zeta, diameter, gamma_sq, c_l, c_h);
    if let Some(c_q) = &args.c_q {
        params.c_q = c_q.clone();
    }
    Ok(params)
}

fn run_bound(args: &BoundArgs) -> Result<()> {
    let value = match args.kind {
        BoundKind::Matrix => {
            let params = matrix_params(args)?;
            json!({ "params": params, "report": matrix_mse_bound(&params)? })
        }
        BoundKind::Tail => {
            let params = matrix_params(args)?;
            let eps = args.eps.ok_or_else(|| missing("eps"))?;
            json!({ "params": params, "report": matrix_tail_bound(&params, eps)? })
        }
        BoundKind::Tensor => {
            let params = tensor_params(args)?;
            json!({ "params": params, "report": tensor_mse_bound(&params)? })
        }
    };
    let mut inputs: Vec<&Path> = Vec::new();
    inputs.extend(args.params.as_deref());
    let mut value = value;
    value["manifest"] = serde_json::to_value(RunManifest::new("bound", args, &inputs)?)?;
    write_json(args.out.as_deref(), &value)
}

fn parse_auto(text: &str, auto: usize, name: &str) -> Result<usize> {
    if text == "auto" {
        Ok(auto)
    } else {
        text.parse()
            .map_err(|_| Error::InvalidParameter(format!("--{name} must be an integer or `auto`, got `{text}`")))
    }
}

fn parse_latent_fn(name: &str) -> Result<LatentFn> {
    serde_json::from_value(json!({ "kind": name }))
        .map_err(|_| Error::InvalidParameter(format!("unknown or table-based latent function `{name}`")))
}

fn run_sweep(args: &SweepArgs) -> Result<()> {
    let latent_fn = parse_latent_fn(&args.latent_fn)?;
    let noise = match args.noise {
        NoiseKind::None => NoiseModel::None,
        NoiseKind::Uniform => NoiseModel::Uniform { b_e: args.b_e },
        NoiseKind::TruncatedGaussian => NoiseModel::TruncatedGaussian {
            b_e: args.b_e,
            sigma: args.sigma,
        },
    };
    if args.sizes.is_empty() || args.sizes.contains(&0) {
        return Err(Error::InvalidParameter("sizes must be positive".into()));
    }
    let mut lines = vec!["size,seed,beta,k,observed,estimated,fallback,mse".to_string()];
    with_threads(args.run.threads, || {
        for &size in &args.sizes {
            let s = size as f64;
            let beta = parse_auto(&args.beta, ((s * args.p * args.p / 2.0).ceil() as usize).max(2), "beta")?;
            let k = parse_auto(&args.k, ((s * args.p).cbrt() / 8.0).ceil().max(1.0) as usize, "k")?;
            let cfg = EstimatorConfig {
                variant: args.variant,
                k,
                beta_low: beta,
                beta_high: args.beta_high,
                lambda: args.lambda,
                include_self: false,
                fallback: args.fallback,
            };
            cfg.validate()?;
            for r in 0..args.seeds {
                let seed = args.seed_base + r;
                let spec = LatentModelSpec::matrix(
                    size,
                    size,
                    LatentMeasure::UniformCube { d: args.d },
                    latent_fn.clone(),
                    noise.clone(),
                    args.p,
                    seed,
                );
                let inst = sample_instance(&spec)?;
                let obs = inst.observed_matrix()?;
                let est = complete_matrix(&obs, &cfg, Target::AllEntries)?;
                let err = mse(est.values(), &inst.truth_matrix()?, Scope::All)?;
                lines.push(format!(
                    "{size},{seed},{beta},{k},{},{},{},{err}",
                    obs.len(),
                    est.count(Provenance::Estimated),
                    est.count(Provenance::Fallback)
                ));
            }
        }
        Ok(())
    })?;
    let mut out = create(&args.out)?;
    for line in lines {
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

fn run_split(args: &SplitArgs) -> Result<()> {
    let obs = load_observations(open(&args.input)?, args.format)?;
    let split = split_holdout(&obs, args.fraction, args.seed)?;
    for (path, part) in [(&args.train, &split.train), (&args.test, &split.test)] {
        let mut out = create(path)?;
        write_observations(part, &mut out, MatrixFormat::TripletCsv)?;
        out.flush()?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Synth(a) => run_synth(a),
        Command::Complete(a) => run_complete(a),
        Command::TensorComplete(a) => run_tensor_complete(a),
        Command::Evaluate(a) => run_evaluate(a),
        Command::Bound(a) => run_bound(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Split(a) => run_split(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
