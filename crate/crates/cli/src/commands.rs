use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::Args;
use serde_json::json;

use grnn_delay::dataset::{self, Dataset};
use grnn_delay::ga::{self, FitnessProtocol, GaConfig, SigmaMode};
use grnn_delay::grnn::{GrnnModel, Sigma};
use grnn_delay::metrics::{self, EvalReport};
use grnn_delay::numfmt::f64_17sig;
use grnn_delay::trace::{self, GenConfig};

use crate::manifest::RunManifest;
use crate::util::atomic_write;

fn parse_sigma_mode(s: &str) -> Result<SigmaMode, String> {
    s.parse()
}

fn parse_protocol(s: &str) -> Result<FitnessProtocol, String> {
    s.parse()
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct GenerateArgs {
    /// Number of rows to generate.
    #[arg(long)]
    n: Option<usize>,
    /// RNG seed for condition sampling and noise.
    #[arg(long)]
    seed: Option<u64>,
    /// Output dataset CSV.
    #[arg(long)]
    out: PathBuf,
    /// `key = value` config file; explicit flags override its entries.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Fixed delay floor, ms.
    #[arg(long)]
    base_delay: Option<f64>,
    /// Propagation cost, ms per meter of cable.
    #[arg(long)]
    propagation: Option<f64>,
    /// Exponent of the loading/(1-loading) queuing term.
    #[arg(long)]
    load_exponent: Option<f64>,
    /// Delay per unit of contention ratio above 1, ms.
    #[arg(long)]
    contention_gain: Option<f64>,
    /// Delay per connected device, ms.
    #[arg(long)]
    device_gain: Option<f64>,
    /// Delay per PLC ladder rung, ms.
    #[arg(long)]
    rung_gain: Option<f64>,
    /// Coefficient of variation of the multiplicative noise, in [0, 1).
    #[arg(long)]
    noise_cv: Option<f64>,
    #[arg(long)]
    loading_min: Option<f64>,
    #[arg(long)]
    loading_max: Option<f64>,
    #[arg(long)]
    length_min: Option<f64>,
    #[arg(long)]
    length_max: Option<f64>,
    #[arg(long)]
    contention_min: Option<f64>,
    #[arg(long)]
    contention_max: Option<f64>,
    #[arg(long)]
    devices_min: Option<u32>,
    #[arg(long)]
    devices_max: Option<u32>,
    #[arg(long)]
    rungs_min: Option<u32>,
    #[arg(long)]
    rungs_max: Option<u32>,
}

impl GenerateArgs {
    fn resolve(&self) -> Result<GenConfig> {
        let mut cfg = GenConfig::new(0, 0);
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path)
                .with_context(|| format!("reading config {}", path.display()))?;
            cfg.apply_kv_str(&text)?;
        }
        macro_rules! flag {
            ($field:expr, $value:expr) => {
                if let Some(v) = $value {
                    $field = v;
                }
            };
        }
        flag!(cfg.n_samples, self.n);
        flag!(cfg.seed, self.seed);
        flag!(cfg.base_delay_ms, self.base_delay);
        flag!(cfg.propagation_ms_per_m, self.propagation);
        flag!(cfg.load_exponent, self.load_exponent);
        flag!(cfg.contention_gain_ms, self.contention_gain);
        flag!(cfg.device_gain_ms, self.device_gain);
        flag!(cfg.rung_gain_ms, self.rung_gain);
        flag!(cfg.noise_cv, self.noise_cv);
        flag!(cfg.ranges.loading.0, self.loading_min);
        flag!(cfg.ranges.loading.1, self.loading_max);
        flag!(cfg.ranges.length_m.0, self.length_min);
        flag!(cfg.ranges.length_m.1, self.length_max);
        flag!(cfg.ranges.contention.0, self.contention_min);
        flag!(cfg.ranges.contention.1, self.contention_max);
        flag!(cfg.ranges.devices.0, self.devices_min);
        flag!(cfg.ranges.devices.1, self.devices_max);
        flag!(cfg.ranges.plc_rungs.0, self.rungs_min);
        flag!(cfg.ranges.plc_rungs.1, self.rungs_max);
        Ok(cfg)
    }
}

pub fn generate(args: GenerateArgs) -> Result<()> {
    let cfg = args.resolve()?;
    let ds = trace::generate(&cfg)?;
    let csv = ds.to_csv_string(&[&trace::csv_comment(&cfg)]);
    atomic_write(&args.out, csv.as_bytes())?;

    let mut manifest =
        RunManifest::new("generate", serde_json::to_value(&cfg)?).output("dataset", &args.out);
    if let Some(config) = &args.config {
        manifest = manifest.input("config", config);
    }
    manifest.write_beside(&args.out)?;
    println!("wrote {} rows to {}", ds.len(), args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// train
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct TrainArgs {
    /// Labeled training CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output model JSON.
    #[arg(long)]
    out: PathBuf,
    /// Smoothing value, or five comma-separated values for per-feature mode.
    #[arg(long, value_delimiter = ',', required = true)]
    sigma: Vec<f64>,
    #[arg(long, default_value_t = SigmaMode::Isotropic, value_parser = parse_sigma_mode)]
    sigma_mode: SigmaMode,
}

fn sigma_from_values(values: &[f64], mode: SigmaMode) -> Result<Sigma> {
    if values.len() != mode.gene_len() {
        bail!(
            "--sigma-mode {mode} expects {} value(s), got {}",
            mode.gene_len(),
            values.len()
        );
    }
    Ok(Sigma::from_values(values.to_vec())?)
}

pub fn train(args: TrainArgs) -> Result<()> {
    let sigma = sigma_from_values(&args.sigma, args.sigma_mode)?;
    let ds = Dataset::load_csv(&args.input)?;
    let model = GrnnModel::fit(&ds, sigma);
    atomic_write(&args.out, model.to_json().as_bytes())?;

    RunManifest::new(
        "train",
        json!({
            "sigma": model.sigma().values(),
            "sigma_mode": args.sigma_mode,
            "training_rows": ds.len(),
        }),
    )
    .input("dataset", &args.input)
    .output("model", &args.out)
    .write_beside(&args.out)?;
    println!(
        "fitted {} patterns, sigma=[{}]",
        model.len(),
        join_floats(model.sigma().values())
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// tune
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct TuneArgs {
    /// Labeled training CSV.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output model JSON.
    #[arg(long)]
    out: PathBuf,
    /// GA convergence history CSV (default: `<out>.history.csv`).
    #[arg(long)]
    history: Option<PathBuf>,
    #[arg(long, default_value_t = GaConfig::default().population_size)]
    population: usize,
    #[arg(long, default_value_t = GaConfig::default().generations)]
    generations: usize,
    #[arg(long, default_value_t = GaConfig::default().crossover_rate)]
    crossover_rate: f64,
    #[arg(long, default_value_t = GaConfig::default().mutation_rate)]
    mutation_rate: f64,
    #[arg(long, default_value_t = GaConfig::default().mutation_scale)]
    mutation_scale: f64,
    #[arg(long, default_value_t = GaConfig::default().tournament_size)]
    tournament: usize,
    #[arg(long, default_value_t = GaConfig::default().elitism_count)]
    elitism: usize,
    #[arg(long, default_value_t = GaConfig::default().seed)]
    seed: u64,
    #[arg(long, default_value_t = GaConfig::default().sigma_mode, value_parser = parse_sigma_mode)]
    sigma_mode: SigmaMode,
    #[arg(long, default_value_t = GaConfig::default().fitness_protocol, value_parser = parse_protocol)]
    fitness_protocol: FitnessProtocol,
    /// Fraction fitted on under the holdout protocol; the rest validates.
    #[arg(long, default_value_t = GaConfig::default().holdout_fraction)]
    train_fraction: f64,
    /// Stop after 20 generations without fitness improvement.
    #[arg(long)]
    early_stop: bool,
}

pub fn tune(args: TuneArgs) -> Result<()> {
    let cfg = GaConfig {
        population_size: args.population,
        generations: args.generations,
        crossover_rate: args.crossover_rate,
        mutation_rate: args.mutation_rate,
        mutation_scale: args.mutation_scale,
        tournament_size: args.tournament,
        elitism_count: args.elitism,
        seed: args.seed,
        sigma_mode: args.sigma_mode,
        fitness_protocol: args.fitness_protocol,
        holdout_fraction: args.train_fraction,
        early_stop: args.early_stop,
    };
    let ds = Dataset::load_csv(&args.input)?;
    let result = ga::run(&ds, &cfg)?;

    // The final model trains on exactly the rows the GA treated as training
    // data: everything for leave-one-out, the fit side of the (seeded,
    // deterministic) split for holdout.
    let train_side = match cfg.fitness_protocol {
        FitnessProtocol::LeaveOneOut => ds,
        FitnessProtocol::Holdout => ds.split(cfg.holdout_fraction, cfg.seed)?.0,
    };
    let model = GrnnModel::fit(&train_side, result.best_sigma.clone());
    atomic_write(&args.out, model.to_json().as_bytes())?;

    let history_path = args
        .history
        .clone()
        .unwrap_or_else(|| sidecar_path(&args.out, ".history.csv"));
    let mut history = Vec::new();
    result.write_history_csv(&mut history)?;
    atomic_write(&history_path, &history)?;

    RunManifest::new(
        "tune",
        json!({
            "ga": cfg,
            "best_sigma": result.best_sigma.values(),
            "best_mape_percent": result.best_mape,
            "generations_run": result.history.len(),
            "training_rows": model.len(),
        }),
    )
    .input("dataset", &args.input)
    .output("model", &args.out)
    .output("history", &history_path)
    .write_beside(&args.out)?;

    println!(
        "best_mape={:.4}% sigma=[{}]",
        result.best_mape,
        join_floats(result.best_sigma.values())
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// estimate
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct EstimateArgs {
    /// Saved model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Conditions CSV (the labeled schema without `delay_ms`).
    #[arg(long = "in")]
    input: PathBuf,
    /// Output predictions CSV (`row,predicted_ms`).
    #[arg(long)]
    out: PathBuf,
}

pub fn estimate(args: EstimateArgs) -> Result<()> {
    let model = GrnnModel::load(&args.model)?;
    let conds = dataset::load_conditions_csv(&args.input)?;
    let predicted = model.estimate_batch(&conds);

    let mut csv = String::from("row,predicted_ms\n");
    for (i, p) in predicted.iter().enumerate() {
        let _ = writeln!(csv, "{},{}", i + 1, f64_17sig(*p));
    }
    atomic_write(&args.out, csv.as_bytes())?;

    RunManifest::new("estimate", json!({ "rows": predicted.len() }))
        .input("model", &args.model)
        .input("conditions", &args.input)
        .output("predictions", &args.out)
        .write_beside(&args.out)?;
    println!("estimated {} rows to {}", predicted.len(), args.out.display());
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[derive(Args)]
pub struct EvaluateArgs {
    /// Saved model JSON.
    #[arg(long)]
    model: PathBuf,
    /// Labeled delay CSV to score against.
    #[arg(long = "in")]
    input: PathBuf,
    /// Output report CSV.
    #[arg(long)]
    out: PathBuf,
    /// Optional per-row file (`row,actual_ms,predicted_ms,ape_percent`).
    #[arg(long)]
    predictions: Option<PathBuf>,
}

pub fn evaluate(args: EvaluateArgs) -> Result<()> {
    let model = GrnnModel::load(&args.model)?;
    let test = Dataset::load_csv(&args.input)?;

    let conds: Vec<_> = test.samples().iter().map(|s| s.condition).collect();
    let actual: Vec<f64> = test.samples().iter().map(|s| s.delay_ms).collect();
    let predicted = model.estimate_batch(&conds);
    let report = EvalReport::from_pairs(&actual, &predicted)?;

    let mut buf = Vec::new();
    report.write_csv(&mut buf)?;
    atomic_write(&args.out, &buf)?;

    if let Some(path) = &args.predictions {
        let mut rows = Vec::new();
        metrics::write_predictions_csv(&actual, &predicted, &mut rows)?;
        atomic_write(path, &rows)?;
    }

    let mut manifest = RunManifest::new("evaluate", serde_json::to_value(report)?)
        .input("model", &args.model)
        .input("dataset", &args.input)
        .output("report", &args.out);
    if let Some(path) = &args.predictions {
        manifest = manifest.output("predictions", path);
    }
    manifest.write_beside(&args.out)?;

    println!("{report}");
    Ok(())
}

// ---------------------------------------------------------------------------

fn join_floats(values: &[f64]) -> String {
    values
        .iter()
        .map(f64::to_string)
        .collect::<Vec<_>>()
        .join(", ")
}

/// `<out><suffix>` next to the primary output.
fn sidecar_path(out: &std::path::Path, suffix: &str) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(suffix);
    PathBuf::from(name)
}
