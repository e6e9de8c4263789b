//! Command-line orchestration: generation, comparison, clustering, mixing,
//! side models, and parameter sweeps. Every run writes a manifest first
//! (command, config echo, input hashes, output names), then its outputs, all
//! under the `--out` directory.
//!
//! Exit codes: 0 success, 2 usage error, 3 aborted computation, 4 I/O error.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::analysis::{
    self, adjacency_profile, classify_not_found, cluster_scales, found_flags, mix_rearrange,
    p_any, p_min, tritone_fraction, IntervalDensity, PMinMethod, PopulationSet,
};
use crate::costs::{CostFamily, HarmonicityTemplate, Rounding};
use crate::dataio::{
    load_database, read_population_csv, write_database_csv, write_distribution_csv,
    write_population_csv, write_rows_csv, write_template_csv,
};
use crate::error::{Error, Result};
use crate::exec::Parallelism;
use crate::generator::{
    generate_population, FifCostVariant, Generator, HarCostVariant, Model, ModelConfig,
};
use crate::params::paper_params;
use crate::scale::{GeneratedScale, ScaleRecord, SimilarityTolerance, OCTAVE_CENTS};
use crate::sidemodels::{
    analytic_acceptance, beta_for_selectivity, min_interval_size, prominence_counts,
    ProminenceQuery,
};
use crate::stats::{
    bootstrap_ci, cvm_two_sample, histogram, jsd, kde, uniform_grid, DistributionEstimate,
};

#[derive(Parser, Debug)]
#[command(
    name = "scalegen",
    version,
    about = "Generate populations of musical scales under stochastic models and score scale databases against them"
)]
pub struct Cli {
    /// Cap the worker threads used by data-parallel sections.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate a scale population under one model configuration.
    Generate(GenerateArgs),
    /// Compare population files against a scale database.
    Compare(CompareArgs),
    /// Ward-cluster database scales on their interval sets.
    Cluster(ClusterArgs),
    /// Interval size-class adjacency analysis and biased rearrangement.
    Mixing(MixingArgs),
    /// Found/not-found taxonomy and tritone table for database scales against
    /// the three biased models.
    Taxonomy(TaxonomyArgs),
    /// Appendix sub-models.
    #[command(subcommand)]
    Sidemodel(SidemodelCommand),
    /// Parameter grid sweep with per-point bias optimization.
    Sweep(SweepArgs),
    /// Dump the harmonicity template for a window width.
    Template(TemplateArgs),
    /// Parse, normalize and dedupe a database CSV; re-export canonically.
    Ingest(IngestArgs),
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ModelArg {
    Ran,
    Min,
    Har,
    Fif,
    Trans,
}

impl From<ModelArg> for Model {
    fn from(m: ModelArg) -> Model {
        match m {
            ModelArg::Ran => Model::Ran,
            ModelArg::Min => Model::Min,
            ModelArg::Har => Model::Har,
            ModelArg::Fif => Model::Fif,
            ModelArg::Trans => Model::Trans,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FamilyArg {
    C1,
    C2,
    C3,
    C4,
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    #[arg(long, value_enum)]
    pub model: Option<ModelArg>,
    /// Notes per scale (2..=12; database comparisons use 4..=9).
    #[arg(long)]
    pub n: Option<usize>,
    #[arg(long)]
    pub imin: Option<f64>,
    #[arg(long)]
    pub w: Option<f64>,
    /// Compressibility exponent for the trans model.
    #[arg(long = "trans-n")]
    pub trans_n: Option<u32>,
    /// Harmonicity exponent for the har model.
    #[arg(long)]
    pub m: Option<f64>,
    /// Bias strength; defaults to the published value for the configuration
    /// when one exists.
    #[arg(long)]
    pub beta: Option<f64>,
    /// Accepted scales to generate.
    #[arg(long)]
    pub s: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Use the quadratic fifths cost 1-(N*Fbar)^2 instead of 1/(1+Fbar).
    #[arg(long = "fif-alt", default_value_t = false)]
    pub fif_alt: bool,
    /// Score the har model through an analytic cost family instead of the
    /// normalized cost.
    #[arg(long = "har-family", value_enum)]
    pub har_family: Option<FamilyArg>,
    #[arg(long = "family-a", requires = "har_family", allow_hyphen_values = true)]
    pub family_a: Option<f64>,
    #[arg(long = "family-m", requires = "har_family")]
    pub family_m: Option<f64>,
    /// Round compressibility deviations to the nearest template line instead
    /// of the ceiling form.
    #[arg(long = "trans-round-nearest", default_value_t = false)]
    pub trans_round_nearest: bool,
    /// Override the har normalization constants.
    #[arg(long)]
    pub hmin: Option<f64>,
    #[arg(long)]
    pub hmax: Option<f64>,
    /// Read the full configuration from JSON; explicit flags override fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Shrink the sample for smoke tests (S = 1000).
    #[arg(long, default_value_t = false)]
    pub quick: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct CompareArgs {
    #[arg(long)]
    pub database: PathBuf,
    /// Population CSV files (any number, pooled by scale size).
    #[arg(long, required = true, num_args = 1..)]
    pub pop: Vec<PathBuf>,
    /// Grid step in cents for the adjacent-interval KDE comparison.
    #[arg(long, default_value_t = 1.0)]
    pub grid_step: f64,
    /// Histogram bin width in cents for the note-distribution comparison.
    #[arg(long, default_value_t = 30.0)]
    pub bins: f64,
    /// Truncation bounds for the note histograms.
    #[arg(long, num_args = 2, default_values_t = [15.0, 1185.0])]
    pub trunc: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub resamples: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Note similarity tolerance for the found-fraction.
    #[arg(long, default_value_t = 10.0)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[arg(long)]
    pub database: PathBuf,
    #[arg(long, default_value_t = 16)]
    pub k: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct MixingArgs {
    #[arg(long)]
    pub database: PathBuf,
    /// Optional population files to profile and rearrange.
    #[arg(long, num_args = 0..)]
    pub pop: Vec<PathBuf>,
    /// Relative size-class half width.
    #[arg(long, default_value_t = 0.2)]
    pub x: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10.0)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TaxonomyArgs {
    #[arg(long)]
    pub database: PathBuf,
    /// Population CSVs for the transmittability model.
    #[arg(long = "pop-trans", required = true, num_args = 1..)]
    pub pop_trans: Vec<PathBuf>,
    #[arg(long = "pop-har", required = true, num_args = 1..)]
    pub pop_har: Vec<PathBuf>,
    #[arg(long = "pop-fif", required = true, num_args = 1..)]
    pub pop_fif: Vec<PathBuf>,
    /// MIN draws per scale size for the interval density behind P_MIN.
    #[arg(long = "density-scales", default_value_t = 1_000_000)]
    pub density_scales: usize,
    #[arg(long, default_value_t = 80.0)]
    pub imin: f64,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = 10.0)]
    pub tolerance: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum SidemodelCommand {
    /// Weighted counts of intervals in a harmonic series.
    Prominence(ProminenceArgs),
    /// Vocal-mistuning transmission model: minimum interval size.
    Vmt(VmtArgs),
    /// Analytic acceptance/selectivity curves for the cost-function family.
    Acceptance(AcceptanceArgs),
}

#[derive(Args, Debug)]
pub struct ProminenceArgs {
    #[arg(long)]
    pub n1: u32,
    #[arg(long)]
    pub n2: u32,
    #[arg(long, default_value_t = 0.0)]
    pub a: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct VmtArgs {
    #[arg(long = "sigma-prod")]
    pub sigma_prod: f64,
    #[arg(long = "sigma-per")]
    pub sigma_per: f64,
    #[arg(long, default_value_t = 0.99)]
    pub target: f64,
    /// Also sweep a sigma grid (comma-separated values applied to both axes).
    #[arg(long, value_delimiter = ',')]
    pub grid: Vec<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct AcceptanceArgs {
    /// MIN-model source of the harmonicity distribution.
    #[arg(long, default_value_t = 7)]
    pub n: usize,
    #[arg(long, default_value_t = 80.0)]
    pub imin: f64,
    #[arg(long, default_value_t = 20.0)]
    pub w: f64,
    #[arg(long, default_value_t = 10_000)]
    pub s: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, value_enum)]
    pub form: FamilyArg,
    /// A values to sweep.
    #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
    pub a: Vec<f64>,
    /// m values to sweep (C3/C4 only; ignored for C1/C2).
    #[arg(long, value_delimiter = ',', default_values_t = [1.0])]
    pub m: Vec<f64>,
    #[arg(long = "target-jsd", default_value_t = 0.5)]
    pub target_jsd: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[arg(long)]
    pub database: PathBuf,
    #[arg(long, value_enum, value_delimiter = ',', default_values_t = [ModelArg::Min, ModelArg::Har, ModelArg::Fif, ModelArg::Trans])]
    pub models: Vec<ModelArg>,
    #[arg(long, value_delimiter = ',', default_values_t = [4, 5, 6, 7, 8, 9])]
    pub n: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_values_t = [70.0, 80.0, 90.0])]
    pub imin: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [5.0, 10.0, 15.0, 20.0])]
    pub w: Vec<f64>,
    #[arg(long = "trans-n", value_delimiter = ',', default_values_t = [1, 2, 3])]
    pub trans_n: Vec<u32>,
    #[arg(long, default_value_t = 10_000)]
    pub s: usize,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = false)]
    pub quick: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct TemplateArgs {
    #[arg(long, default_value_t = 20.0)]
    pub w: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct IngestArgs {
    #[arg(long)]
    pub database: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

// ---------------------------------------------------------------------------

#[derive(Serialize)]
struct RunManifest {
    command: String,
    version: String,
    seed: Option<u64>,
    config: serde_json::Value,
    inputs: Vec<InputHash>,
    outputs: Vec<String>,
}

#[derive(Serialize)]
struct InputHash {
    path: String,
    sha256: String,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    Ok(hex)
}

/// Creates the output directory and writes the manifest before any output.
fn write_manifest(
    out_dir: &Path,
    command: &str,
    seed: Option<u64>,
    config: serde_json::Value,
    inputs: &[&Path],
    outputs: &[&str],
) -> Result<()> {
    fs::create_dir_all(out_dir)?;
    let manifest = RunManifest {
        command: command.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed,
        config,
        inputs: inputs
            .iter()
            .map(|p| {
                Ok(InputHash {
                    path: p.display().to_string(),
                    sha256: sha256_file(p)?,
                })
            })
            .collect::<Result<Vec<_>>>()?,
        outputs: outputs.iter().map(|s| s.to_string()).collect(),
    };
    let json = serde_json::to_string_pretty(&manifest)?;
    fs::write(out_dir.join("manifest.json"), json + "\n")?;
    Ok(())
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_entry() -> i32 {
    let cli = Cli::parse();
    configure_threads(cli.threads);
    match run(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Input(_) => 2,
        Error::Io(_) | Error::Csv(_) | Error::Json(_) | Error::Parse { .. } => 4,
        _ => 3,
    }
}

fn configure_threads(threads: Option<usize>) {
    #[cfg(feature = "parallel")]
    if let Some(t) = threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
        {
            eprintln!("warning: could not configure thread pool: {e}");
        }
    }
    #[cfg(not(feature = "parallel"))]
    if threads.is_some() {
        eprintln!("warning: built without the `parallel` feature; --threads ignored");
    }
}

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Generate(args) => cmd_generate(args),
        Command::Compare(args) => cmd_compare(args),
        Command::Cluster(args) => cmd_cluster(args),
        Command::Mixing(args) => cmd_mixing(args),
        Command::Taxonomy(args) => cmd_taxonomy(args),
        Command::Sidemodel(cmd) => match cmd {
            SidemodelCommand::Prominence(args) => cmd_prominence(args),
            SidemodelCommand::Vmt(args) => cmd_vmt(args),
            SidemodelCommand::Acceptance(args) => cmd_acceptance(args),
        },
        Command::Sweep(args) => cmd_sweep(args),
        Command::Template(args) => cmd_template(args),
        Command::Ingest(args) => cmd_ingest(args),
    }
}

// ---------------------------------------------------------------------------
// generate

fn build_config(args: &GenerateArgs) -> Result<ModelConfig> {
    let mut config: ModelConfig = match &args.config {
        Some(path) => serde_json::from_str(&fs::read_to_string(path)?)?,
        None => {
            let model = args
                .model
                .ok_or_else(|| Error::Input("--model is required (or use --config)".into()))?;
            let n = args
                .n
                .ok_or_else(|| Error::Input("--n is required (or use --config)".into()))?;
            ModelConfig::new(model.into(), n, 1)
        }
    };
    if let Some(m) = args.model {
        config.model = m.into();
        if config.model == Model::Ran {
            config.i_min = 0.0;
        }
    }
    if let Some(n) = args.n {
        config.n_notes = n;
    }
    if let Some(v) = args.imin {
        config.i_min = v;
    }
    if let Some(v) = args.w {
        config.w = v;
    }
    if let Some(v) = args.trans_n {
        config.trans_n = v;
    }
    if let Some(v) = args.m {
        config.m = v;
    }
    if let Some(v) = args.seed {
        config.seed = v;
    }
    if let Some(v) = args.s {
        config.target_accepted = v;
    }
    if args.quick {
        config.target_accepted = config.target_accepted.min(1000);
    }
    if args.fif_alt {
        config.fif_cost = FifCostVariant::AltQuadratic;
    }
    if args.trans_round_nearest {
        config.trans_rounding = Rounding::Nearest;
    }
    if let Some(form) = args.har_family {
        let a = args
            .family_a
            .ok_or_else(|| Error::Input("--family-a is required with --har-family".into()))?;
        let m = args.family_m.unwrap_or(1.0);
        config.har_cost = HarCostVariant::Family(family_from(form, a, m));
    }
    match (args.hmin, args.hmax) {
        (Some(lo), Some(hi)) => config.har_norm = Some((lo, hi)),
        (None, None) => {}
        _ => return Err(Error::Input("--hmin and --hmax must be given together".into())),
    }
    // Bias strength: explicit flag, else config file value, else the
    // published value for this configuration.
    if let Some(beta) = args.beta {
        config.beta = beta;
    } else if args.config.is_none() && config.model.is_biased() {
        match paper_params(config.model, config.n_notes) {
            Some(row) if row.i_min == config.i_min => {
                config.beta = row.beta;
                if config.model == Model::Fif && !args.fif_alt {
                    // The published strengths pair with the quadratic form.
                    config.fif_cost = FifCostVariant::AltQuadratic;
                }
            }
            _ => {
                return Err(Error::Input(
                    "--beta is required for biased models outside the published configurations"
                        .into(),
                ))
            }
        }
    }
    config.validate()?;
    Ok(config)
}

fn family_from(form: FamilyArg, a: f64, m: f64) -> CostFamily {
    match form {
        FamilyArg::C1 => CostFamily::C1 { a },
        FamilyArg::C2 => CostFamily::C2 { a },
        FamilyArg::C3 => CostFamily::C3 { a, m },
        FamilyArg::C4 => CostFamily::C4 { a, m },
    }
}

fn cmd_generate(args: GenerateArgs) -> Result<()> {
    let config = build_config(&args)?;
    write_manifest(
        &args.out,
        "generate",
        Some(config.seed),
        serde_json::to_value(&config)?,
        &[],
        &["config.json", "population.csv", "qreport.json"],
    )?;
    let report = generate_population(config.clone())?;
    fs::write(
        args.out.join("config.json"),
        serde_json::to_string_pretty(&config)? + "\n",
    )?;
    write_population_csv(&report.accepted, &args.out.join("population.csv"))?;
    let q = serde_json::json!({
        "attempts": report.attempts,
        "imin_passes": report.imin_passes,
        "accepted": report.accepted.len(),
        "accepted_total": report.accepted_total,
        "q": report.q,
        "q_total": report.q_total,
        "har_norm_used": report.har_norm_used,
    });
    fs::write(
        args.out.join("qreport.json"),
        serde_json::to_string_pretty(&q)? + "\n",
    )?;
    println!(
        "generated {} scales in {} proposals (q = {:.3e}, q_total = {:.3e})",
        report.accepted.len(),
        report.attempts,
        report.q,
        report.q_total
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// compare

struct GroupedSamples {
    /// Adjacent intervals pooled per scale size.
    ia: BTreeMap<usize, Vec<f64>>,
    /// All notes pooled per scale size (histogram truncation drops 0/1200).
    notes: BTreeMap<usize, Vec<f64>>,
}

fn group_db(db: &[ScaleRecord]) -> GroupedSamples {
    let mut ia: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut notes: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for r in db {
        ia.entry(r.n()).or_default().extend(&r.adjacent_intervals);
        notes.entry(r.n()).or_default().extend(&r.notes);
    }
    GroupedSamples { ia, notes }
}

fn group_population(pop: &[GeneratedScale]) -> GroupedSamples {
    let mut ia: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    let mut notes: BTreeMap<usize, Vec<f64>> = BTreeMap::new();
    for s in pop {
        ia.entry(s.n()).or_default().extend(&s.adjacent_intervals);
        notes.entry(s.n()).or_default().extend(s.notes());
    }
    GroupedSamples { ia, notes }
}

fn cmd_compare(args: CompareArgs) -> Result<()> {
    let inputs: Vec<&Path> = std::iter::once(args.database.as_path())
        .chain(args.pop.iter().map(|p| p.as_path()))
        .collect();
    write_manifest(
        &args.out,
        "compare",
        Some(args.seed),
        serde_json::json!({
            "grid_step": args.grid_step,
            "bins": args.bins,
            "trunc": args.trunc,
            "resamples": args.resamples,
            "tolerance": args.tolerance,
        }),
        &inputs,
        &["ia_compare.csv", "notes_compare.csv", "fd.csv", "summary.json"],
    )?;

    let (db, _) = load_database(&args.database)?;
    if db.is_empty() {
        return Err(Error::Input("database is empty after ingestion".into()));
    }
    let mut pop = Vec::new();
    for p in &args.pop {
        pop.extend(read_population_csv(p)?);
    }
    let tol = SimilarityTolerance::new(args.tolerance)?;

    let db_groups = group_db(&db);
    let pop_groups = group_population(&pop);
    let ia_grid = uniform_grid(0.0, OCTAVE_CENTS, args.grid_step);
    if args.trunc.len() != 2 || args.trunc[0] >= args.trunc[1] {
        return Err(Error::Input("--trunc needs two increasing bounds".into()));
    }
    let note_edges = uniform_grid(args.trunc[0], args.trunc[1], args.bins);

    // Adjacent-interval comparison: KDE JSD with bootstrap CI plus CvM.
    let mut ia_rows = Vec::new();
    let mut weighted_jsd_num = 0.0;
    let mut weighted_cvm_num = 0.0;
    let mut weight_total = 0.0;
    for (n, dat) in &db_groups.ia {
        let Some(model) = pop_groups.ia.get(n) else {
            eprintln!("warning: no population scales with N = {n}; skipped");
            continue;
        };
        let model_est = kde(model, &ia_grid)?;
        let dat_est = kde(dat, &ia_grid)?;
        let jsd_val = jsd(&dat_est, &model_est)?;
        let cvm_val = cvm_two_sample(dat, model)?;

        let jsd_stat = |resampled: &[f64]| match kde(resampled, &ia_grid) {
            Ok(est) => jsd(&est, &model_est).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        };
        let (jsd_lo, jsd_hi, _) =
            bootstrap_ci(dat, jsd_stat, args.resamples, 0.95, args.seed)?;
        let cvm_stat =
            |resampled: &[f64]| cvm_two_sample(resampled, model).unwrap_or(f64::NAN);
        let (cvm_lo, cvm_hi, _) =
            bootstrap_ci(dat, cvm_stat, args.resamples, 0.95, args.seed ^ 0xc0ffee)?;

        // Weighted by the number of database scales of this size.
        let s_n = db.iter().filter(|r| r.n() == *n).count() as f64;
        weighted_jsd_num += s_n * jsd_val;
        weighted_cvm_num += s_n * cvm_val;
        weight_total += s_n;
        ia_rows.push(format!(
            "{n},{s_n},{jsd_val:.6},{jsd_lo:.6},{jsd_hi:.6},{cvm_val:.6},{cvm_lo:.6},{cvm_hi:.6}"
        ));
        write_distribution_csv(&dat_est, &args.out.join(format!("dist_ia_dat_n{n}.csv")))?;
        write_distribution_csv(&model_est, &args.out.join(format!("dist_ia_model_n{n}.csv")))?;
    }
    write_rows_csv(
        "n,s_dat,jsd,jsd_lo,jsd_hi,cvm,cvm_lo,cvm_hi",
        &ia_rows,
        &args.out.join("ia_compare.csv"),
    )?;

    // Note-distribution comparison on truncated histograms.
    let mut note_rows = Vec::new();
    for (n, dat) in &db_groups.notes {
        let Some(model) = pop_groups.notes.get(n) else {
            continue;
        };
        let dat_est = histogram(dat, &note_edges)?;
        let model_est = histogram(model, &note_edges)?;
        let jsd_val = jsd(&dat_est, &model_est)?;
        let jsd_stat = |resampled: &[f64]| match histogram(resampled, &note_edges) {
            Ok(est) => jsd(&est, &model_est).unwrap_or(f64::NAN),
            Err(_) => f64::NAN,
        };
        let (lo, hi, _) = bootstrap_ci(dat, jsd_stat, args.resamples, 0.95, args.seed ^ 0x6e6f7465)?;
        note_rows.push(format!("{n},{jsd_val:.6},{lo:.6},{hi:.6}"));
        write_distribution_csv(&dat_est, &args.out.join(format!("dist_notes_dat_n{n}.csv")))?;
        write_distribution_csv(&model_est, &args.out.join(format!("dist_notes_model_n{n}.csv")))?;
    }
    write_rows_csv(
        "n,jsd,jsd_lo,jsd_hi",
        &note_rows,
        &args.out.join("notes_compare.csv"),
    )?;

    // Found fractions with bootstrap CIs over the database sample.
    let pop_set = PopulationSet::from_scales(pop.iter());
    let flags = found_flags(&db, &pop_set, tol, Parallelism::auto());
    let mut fd_rows = Vec::new();
    for n in db_groups.ia.keys() {
        let flags_n: Vec<f64> = db
            .iter()
            .zip(&flags)
            .filter(|(r, _)| r.n() == *n)
            .map(|(_, &f)| if f { 1.0 } else { 0.0 })
            .collect();
        let fd = flags_n.iter().sum::<f64>() / flags_n.len() as f64;
        let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
        let (lo, hi, _) = bootstrap_ci(&flags_n, mean, args.resamples, 0.95, args.seed ^ 0xfd)?;
        fd_rows.push(format!("{n},{},{fd:.6},{lo:.6},{hi:.6}", flags_n.len()));
    }
    let total_found = flags.iter().filter(|&&f| f).count();
    write_rows_csv("n,s_dat,fd,fd_lo,fd_hi", &fd_rows, &args.out.join("fd.csv"))?;

    let summary = serde_json::json!({
        "weighted_mean_jsd": weighted_jsd_num / weight_total,
        "weighted_mean_cvm": weighted_cvm_num / weight_total,
        "fd_overall": total_found as f64 / db.len() as f64,
        "db_scales": db.len(),
        "population_scales": pop.len(),
    });
    fs::write(
        args.out.join("summary.json"),
        serde_json::to_string_pretty(&summary)? + "\n",
    )?;
    println!(
        "weighted mean JSD {:.4}, overall f_D {:.3}",
        weighted_jsd_num / weight_total,
        total_found as f64 / db.len() as f64
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// cluster

fn cmd_cluster(args: ClusterArgs) -> Result<()> {
    write_manifest(
        &args.out,
        "cluster",
        None,
        serde_json::json!({ "k": args.k }),
        &[args.database.as_path()],
        &["clusters.csv", "cluster_regions.csv"],
    )?;
    let (db, _) = load_database(&args.database)?;
    let assignment = cluster_scales(&db, args.k)?;
    let rows: Vec<String> = assignment
        .labels
        .iter()
        .map(|(id, c)| format!("{},{}", id, c))
        .collect();
    write_rows_csv("scale_id,cluster", &rows, &args.out.join("clusters.csv"))?;

    // Geographic composition: cluster x region counts.
    let mut by_cluster_region: BTreeMap<(usize, String), usize> = BTreeMap::new();
    for (id, c) in &assignment.labels {
        if let Some(rec) = db.iter().find(|r| &r.id == id) {
            *by_cluster_region
                .entry((*c, rec.region.clone()))
                .or_default() += 1;
        }
    }
    let rows: Vec<String> = by_cluster_region
        .iter()
        .map(|((c, region), count)| format!("{c},{region},{count}"))
        .collect();
    write_rows_csv(
        "cluster,region,count",
        &rows,
        &args.out.join("cluster_regions.csv"),
    )?;
    println!("cut {} scales into {} clusters", db.len(), assignment.k);
    Ok(())
}

// ---------------------------------------------------------------------------
// mixing

fn cmd_mixing(args: MixingArgs) -> Result<()> {
    let inputs: Vec<&Path> = std::iter::once(args.database.as_path())
        .chain(args.pop.iter().map(|p| p.as_path()))
        .collect();
    write_manifest(
        &args.out,
        "mixing",
        Some(args.seed),
        serde_json::json!({ "x": args.x, "tolerance": args.tolerance }),
        &inputs,
        &["adjacency.csv", "mixing_fd.csv"],
    )?;
    let (db, _) = load_database(&args.database)?;
    let tol = SimilarityTolerance::new(args.tolerance)?;

    let mut adjacency_rows = Vec::new();
    let mut by_n: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
    for r in &db {
        by_n.entry(r.n()).or_default().push(r.adjacent_intervals.clone());
    }
    for (n, scales) in &by_n {
        if scales.len() < 3 {
            continue;
        }
        let p = adjacency_profile(scales, args.x)?;
        adjacency_rows.push(format_adjacency_row("dat", *n, &p));
    }

    // Rearranged populations: compare found fractions before and after.
    let mut fd_rows = Vec::new();
    for path in &args.pop {
        let pop = read_population_csv(path)?;
        let name = path
            .file_stem()
            .map(|s| s.to_string_lossy().to_string())
            .unwrap_or_else(|| "pop".into());
        let mut pop_by_n: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
        for s in &pop {
            pop_by_n.entry(s.n()).or_default().push(s.adjacent_intervals.clone());
        }
        for (n, scales) in &pop_by_n {
            if scales.len() >= 3 {
                let p = adjacency_profile(scales, args.x)?;
                adjacency_rows.push(format_adjacency_row(&name, *n, &p));
            }
        }

        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
        let mut rearranged = Vec::with_capacity(pop.len());
        for s in &pop {
            rearranged.push(GeneratedScale::new(mix_rearrange(
                &s.adjacent_intervals,
                &mut rng,
            )?));
        }
        write_population_csv(
            &rearranged,
            &args.out.join(format!("{name}_mixed.csv")),
        )?;

        let before = PopulationSet::from_scales(pop.iter());
        let after = PopulationSet::from_scales(rearranged.iter());
        let f_before = analysis::fraction_found(&db, &before, tol);
        let f_after = analysis::fraction_found(&db, &after, tol);
        for (n, fb) in &f_before {
            let fa = f_after.get(n).map(|f| f.fraction).unwrap_or(0.0);
            fd_rows.push(format!("{name},{n},{:.6},{fa:.6}", fb.fraction));
        }
    }
    write_rows_csv(
        "population,n,mm,mx,xe,xo,baseline_mm,baseline_mx,baseline_xe,baseline_xo,pairs",
        &adjacency_rows,
        &args.out.join("adjacency.csv"),
    )?;
    write_rows_csv(
        "population,n,fd_original,fd_mixed",
        &fd_rows,
        &args.out.join("mixing_fd.csv"),
    )?;
    Ok(())
}

fn format_adjacency_row(name: &str, n: usize, p: &analysis::AdjacencyProfile) -> String {
    format!(
        "{name},{n},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{:.6},{}",
        p.mm, p.mx, p.xe, p.xo, p.baseline_mm, p.baseline_mx, p.baseline_xe, p.baseline_xo, p.pairs
    )
}

// ---------------------------------------------------------------------------
// taxonomy

fn cmd_taxonomy(args: TaxonomyArgs) -> Result<()> {
    let inputs: Vec<&Path> = std::iter::once(args.database.as_path())
        .chain(args.pop_trans.iter().map(|p| p.as_path()))
        .chain(args.pop_har.iter().map(|p| p.as_path()))
        .chain(args.pop_fif.iter().map(|p| p.as_path()))
        .collect();
    write_manifest(
        &args.out,
        "taxonomy",
        Some(args.seed),
        serde_json::json!({
            "density_scales": args.density_scales,
            "imin": args.imin,
            "tolerance": args.tolerance,
        }),
        &inputs,
        &["found_report.csv", "taxonomy_summary.json", "tritone.csv"],
    )?;
    let (db, _) = load_database(&args.database)?;
    let tol = SimilarityTolerance::new(args.tolerance)?;

    type ScalesByN = BTreeMap<usize, Vec<Vec<f64>>>;
    let load_pops = |paths: &[PathBuf]| -> Result<(PopulationSet, ScalesByN)> {
        let mut set = PopulationSet::default();
        let mut by_n: ScalesByN = BTreeMap::new();
        for p in paths {
            let scales = read_population_csv(p)?;
            set.insert_population(&scales);
            for s in &scales {
                by_n.entry(s.n()).or_default().push(s.adjacent_intervals.clone());
            }
        }
        Ok((set, by_n))
    };
    let (trans_set, trans_by_n) = load_pops(&args.pop_trans)?;
    let (har_set, har_by_n) = load_pops(&args.pop_har)?;
    let (fif_set, fif_by_n) = load_pops(&args.pop_fif)?;

    let mut densities: BTreeMap<usize, IntervalDensity> = BTreeMap::new();
    let mut ns: Vec<usize> = db.iter().map(|r| r.n()).collect();
    ns.sort_unstable();
    ns.dedup();
    for &n in &ns {
        densities.insert(
            n,
            IntervalDensity::from_min_model(n, args.imin, args.density_scales, args.seed)?,
        );
    }

    let report = found_taxonomy(&db, &trans_set, &har_set, &fif_set, &densities, tol)?;
    let rows: Vec<String> = report
        .entries
        .iter()
        .map(|e| {
            format!(
                "{},{},{},{},{},{:.6e},{:.6e},{:?}",
                e.scale_id,
                e.n,
                e.found_by_trans,
                e.found_by_har,
                e.found_by_fif,
                e.p_min,
                e.p_any,
                e.category
            )
        })
        .collect();
    write_rows_csv(
        "scale_id,n,found_trans,found_har,found_fif,p_min,p_any,category",
        &rows,
        &args.out.join("found_report.csv"),
    )?;
    fs::write(
        args.out.join("taxonomy_summary.json"),
        serde_json::to_string_pretty(&serde_json::json!({
            "counts": report.counts,
            "threshold_p_min": report.threshold_p_min,
            "threshold_p_any": report.threshold_p_any,
        }))? + "\n",
    )?;

    // Tritone table: DAT plus the three model populations, per scale size.
    let mut dat_by_n: BTreeMap<usize, Vec<Vec<f64>>> = BTreeMap::new();
    for r in &db {
        dat_by_n.entry(r.n()).or_default().push(r.adjacent_intervals.clone());
    }
    let mut tritone_rows = Vec::new();
    for (name, by_n) in [
        ("dat", &dat_by_n),
        ("trans", &trans_by_n),
        ("har", &har_by_n),
        ("fif", &fif_by_n),
    ] {
        for (n, ft) in tritone_table(by_n) {
            tritone_rows.push(format!("{name},{n},{ft:.6}"));
        }
    }
    write_rows_csv("population,n,f_t", &tritone_rows, &args.out.join("tritone.csv"))?;
    let c = report.counts;
    println!(
        "found {} | prohibited {} | unlikely-constraint {} | undersampled {} | unlikely-bias {}",
        c.found, c.prohibited, c.unlikely_constraint, c.undersampled, c.unlikely_bias
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// side models

fn cmd_prominence(args: ProminenceArgs) -> Result<()> {
    write_manifest(
        &args.out,
        "sidemodel prominence",
        None,
        serde_json::json!({ "n1": args.n1, "n2": args.n2, "a": args.a }),
        &[],
        &["prominence.csv"],
    )?;
    let rows = prominence_counts(&ProminenceQuery {
        n1: args.n1,
        n2: args.n2,
        attenuation: args.a,
    })?;
    let lines: Vec<String> = rows
        .iter()
        .map(|e| format!("{},{},{:.9}", e.numerator, e.denominator, e.weight))
        .collect();
    write_rows_csv("ratio_x,ratio_y,weight", &lines, &args.out.join("prominence.csv"))?;
    for e in rows.iter().take(10) {
        println!("{}/{}\t{:.4}", e.numerator, e.denominator, e.weight);
    }
    Ok(())
}

fn cmd_vmt(args: VmtArgs) -> Result<()> {
    write_manifest(
        &args.out,
        "sidemodel vmt",
        None,
        serde_json::json!({
            "sigma_prod": args.sigma_prod,
            "sigma_per": args.sigma_per,
            "target": args.target,
            "grid": args.grid,
        }),
        &[],
        &["vmt.csv"],
    )?;
    let mut rows = Vec::new();
    let main = min_interval_size(args.sigma_prod, args.sigma_per, args.target)?;
    rows.push(format!("{},{},{main:.3}", args.sigma_prod, args.sigma_per));
    for &sp in &args.grid {
        for &se in &args.grid {
            let v = min_interval_size(sp, se, args.target)?;
            rows.push(format!("{sp},{se},{v:.3}"));
        }
    }
    write_rows_csv("sigma_prod,sigma_per,i_min", &rows, &args.out.join("vmt.csv"))?;
    println!(
        "minimum interval for sigma_prod={} sigma_per={}: {main:.1} cents",
        args.sigma_prod, args.sigma_per
    );
    Ok(())
}

/// Harmonicity-score distribution of a seeded MIN run, as a unit-mass
/// histogram on a fixed fine grid.
pub fn min_hbar_distribution(
    n: usize,
    i_min: f64,
    w: f64,
    s: usize,
    seed: u64,
) -> Result<(DistributionEstimate, f64, f64)> {
    let mut cfg = ModelConfig::new(Model::Min, n, seed);
    cfg.i_min = i_min;
    cfg.target_accepted = s;
    let tpl = HarmonicityTemplate::build(w)?;
    let report = Generator::new(cfg)?.run()?;
    let values: Vec<f64> = report
        .accepted
        .iter()
        .map(|sc| crate::costs::scale_harmonicity(&sc.adjacent_intervals, &tpl, 1.0))
        .collect();
    let lo = values.iter().cloned().fold(f64::MAX, f64::min);
    let hi = values.iter().cloned().fold(f64::MIN, f64::max);
    let edges = uniform_grid((lo - 1.0).floor(), (hi + 1.0).ceil(), 0.25);
    let est = histogram(&values, &edges)?;
    Ok((est, lo, hi))
}

fn cmd_acceptance(args: AcceptanceArgs) -> Result<()> {
    write_manifest(
        &args.out,
        "sidemodel acceptance",
        Some(args.seed),
        serde_json::json!({
            "n": args.n, "imin": args.imin, "w": args.w, "s": args.s,
            "form": format!("{:?}", args.form), "a": args.a, "m": args.m,
            "target_jsd": args.target_jsd,
        }),
        &[],
        &["acceptance.csv", "hbar_dist.csv"],
    )?;
    let (h_dist, hmin, hmax) = min_hbar_distribution(args.n, args.imin, args.w, args.s, args.seed)?;
    write_distribution_csv(&h_dist, &args.out.join("hbar_dist.csv"))?;
    println!("MIN Hbar range: [{hmin:.2}, {hmax:.2}]");

    let mut rows = Vec::new();
    for &a in &args.a {
        for &m in &args.m {
            let family = family_from(args.form, a, m);
            let cost = move |h: f64| family.cost(h).unwrap_or(f64::INFINITY);
            match beta_for_selectivity(&h_dist, cost, args.target_jsd) {
                Ok(beta) => {
                    let res = analytic_acceptance(&h_dist, cost, beta)?;
                    rows.push(format!(
                        "{:?},{a},{m},{beta:.6},{:.6e},{:.6}",
                        args.form, res.acceptance, res.selectivity
                    ));
                }
                Err(Error::NoSolution(msg)) => {
                    eprintln!("warning: A={a} m={m}: {msg}");
                    rows.push(format!("{:?},{a},{m},,,", args.form));
                }
                Err(e) => return Err(e),
            }
        }
    }
    write_rows_csv(
        "form,a,m,beta,acceptance,selectivity",
        &rows,
        &args.out.join("acceptance.csv"),
    )?;
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep

fn cmd_sweep(args: SweepArgs) -> Result<()> {
    write_manifest(
        &args.out,
        "sweep",
        Some(args.seed),
        serde_json::json!({
            "models": format!("{:?}", args.models),
            "n": args.n, "imin": args.imin, "w": args.w, "trans_n": args.trans_n,
            "s": args.s, "quick": args.quick,
        }),
        &[args.database.as_path()],
        &["sweep.csv"],
    )?;
    let (db, _) = load_database(&args.database)?;
    let s = if args.quick { 1000 } else { args.s };
    let ia_grid = uniform_grid(0.0, OCTAVE_CENTS, 1.0);
    let db_groups = group_db(&db);

    let mut rows = Vec::new();
    for &model_arg in &args.models {
        let model: Model = model_arg.into();
        for &n in &args.n {
            let Some(dat_ia) = db_groups.ia.get(&n) else {
                continue;
            };
            let dat_est = kde(dat_ia, &ia_grid)?;
            for &imin in &args.imin {
                let w_values: &[f64] = if matches!(model, Model::Har | Model::Fif) {
                    &args.w
                } else {
                    &[20.0][..]
                };
                let n_values: &[u32] = if model == Model::Trans {
                    &args.trans_n
                } else {
                    &[2][..]
                };
                for &w in w_values {
                    for &trans_n in n_values {
                        let mut cfg = ModelConfig::new(model, n, args.seed);
                        cfg.i_min = imin;
                        cfg.w = w;
                        cfg.trans_n = trans_n;
                        cfg.target_accepted = s;
                        if model == Model::Fif {
                            cfg.fif_cost = FifCostVariant::AltQuadratic;
                        }
                        match sweep_point(&cfg, model, &db, &dat_est, &ia_grid) {
                            Ok((beta, q, jsd_val, fd)) => rows.push(format!(
                                "{model},{n},{imin},{w},{trans_n},{beta:.6},{q:.6e},{jsd_val:.6},{fd:.6}"
                            )),
                            Err(e) => {
                                eprintln!(
                                    "warning: sweep point {model} n={n} imin={imin} w={w}: {e}"
                                );
                            }
                        }
                    }
                }
            }
        }
    }
    write_rows_csv(
        "model,n,imin,w,trans_n,beta,q,jsd,fd",
        &rows,
        &args.out.join("sweep.csv"),
    )?;
    Ok(())
}

/// Evaluates one parameter combination, optimizing beta for biased models:
/// maximize f_D subject to the interval JSD staying within 10% of its
/// minimum over the scanned bias strengths.
fn sweep_point(
    cfg: &ModelConfig,
    model: Model,
    db: &[ScaleRecord],
    dat_est: &DistributionEstimate,
    ia_grid: &[f64],
) -> Result<(f64, f64, f64, f64)> {
    let tol = SimilarityTolerance::default();
    // A bias strength can clear the hard abort floor yet still need an
    // absurd number of proposals for the target sample; probe first and
    // skip anything projected beyond the per-point budget.
    const SWEEP_PROPOSAL_BUDGET: f64 = 2e8;
    let evaluate = |beta: f64| -> Result<(f64, f64, f64)> {
        let mut c = cfg.clone();
        c.beta = beta;
        if beta > 0.0 {
            let probe = Generator::new(c.clone())?.measure_q(1_000_000)?;
            let q_hat = (probe.accepted.max(1)) as f64 / probe.attempts as f64;
            if c.target_accepted as f64 / q_hat > SWEEP_PROPOSAL_BUDGET {
                return Err(Error::NoSolution(format!(
                    "beta {beta}: projected proposals beyond the sweep budget"
                )));
            }
        }
        let report = generate_population(c)?;
        let ia: Vec<f64> = report
            .accepted
            .iter()
            .flat_map(|s| s.adjacent_intervals.iter().cloned())
            .collect();
        let est = kde(&ia, ia_grid)?;
        let jsd_val = jsd(dat_est, &est)?;
        let pop = PopulationSet::from_scales(report.accepted.iter());
        let flags = found_flags(db, &pop, tol, Parallelism::auto());
        let matched = db
            .iter()
            .zip(&flags)
            .filter(|(r, &f)| r.n() == cfg.n_notes && f)
            .count();
        let total = db.iter().filter(|r| r.n() == cfg.n_notes).count().max(1);
        Ok((report.q, jsd_val, matched as f64 / total as f64))
    };

    if !model.is_biased() {
        let (q, jsd_val, fd) = evaluate(0.0)?;
        return Ok((0.0, q, jsd_val, fd));
    }

    // Coarse ladder over log beta; infeasible strengths are skipped.
    let ladder: Vec<f64> = (0..9).map(|k| 0.5 * 4f64.powi(k)).collect();
    let mut evaluated: Vec<(f64, f64, f64, f64)> = Vec::new();
    for &beta in &ladder {
        match evaluate(beta) {
            Ok((q, jsd_val, fd)) => evaluated.push((beta, q, jsd_val, fd)),
            Err(Error::AbortTooSelective { .. }) | Err(Error::NoSolution(_)) => break,
            Err(e) => return Err(e),
        }
    }
    if evaluated.is_empty() {
        return Err(Error::NoSolution("no feasible bias strength".into()));
    }
    let min_jsd = evaluated
        .iter()
        .map(|e| e.2)
        .fold(f64::MAX, f64::min);
    let feasible: Vec<&(f64, f64, f64, f64)> = evaluated
        .iter()
        .filter(|e| e.2 <= 1.1 * min_jsd)
        .collect();
    let best = feasible
        .iter()
        .max_by(|a, b| a.3.total_cmp(&b.3))
        .expect("nonempty");
    let (mut best_beta, mut best_q, mut best_jsd, mut best_fd) = **best;

    // Golden-section refinement on log beta around the coarse optimum.
    let mut lo = (best_beta / 4.0).max(1e-3).ln();
    let mut hi = (best_beta * 4.0).ln();
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    for _ in 0..6 {
        let c = hi - (hi - lo) * INV_PHI;
        let d = lo + (hi - lo) * INV_PHI;
        let score = |logb: f64| -> Result<(f64, f64, f64, f64)> {
            let beta = logb.exp();
            let (q, j, f) = evaluate(beta)?;
            Ok((beta, q, j, f))
        };
        let sc = score(c);
        let sd = score(d);
        let val = |r: &Result<(f64, f64, f64, f64)>| match r {
            Ok((_, _, j, f)) if *j <= 1.1 * min_jsd => *f,
            _ => -1.0,
        };
        if val(&sc) >= val(&sd) {
            hi = d;
            if let Ok(t) = sc {
                if t.3 > best_fd && t.2 <= 1.1 * min_jsd {
                    (best_beta, best_q, best_jsd, best_fd) = t;
                }
            }
        } else {
            lo = c;
            if let Ok(t) = sd {
                if t.3 > best_fd && t.2 <= 1.1 * min_jsd {
                    (best_beta, best_q, best_jsd, best_fd) = t;
                }
            }
        }
    }
    Ok((best_beta, best_q, best_jsd, best_fd))
}

// ---------------------------------------------------------------------------
// template, ingest

fn cmd_template(args: TemplateArgs) -> Result<()> {
    write_manifest(
        &args.out,
        "template",
        None,
        serde_json::json!({ "w": args.w }),
        &[],
        &["template.csv"],
    )?;
    let tpl = HarmonicityTemplate::build(args.w)?;
    write_template_csv(&tpl, &args.out.join("template.csv"))?;
    println!("{} windows at w = {}", tpl.windows().len(), args.w);
    Ok(())
}

fn cmd_ingest(args: IngestArgs) -> Result<()> {
    write_manifest(
        &args.out,
        "ingest",
        None,
        serde_json::json!({}),
        &[args.database.as_path()],
        &["normalized.csv", "ingest_report.json"],
    )?;
    let (db, report) = load_database(&args.database)?;
    write_database_csv(&db, &args.out.join("normalized.csv"))?;
    let json = serde_json::json!({
        "summary": report.summary,
        "parse_errors": report.parse_errors.iter().map(|e| {
            serde_json::json!({ "line": e.line, "message": e.message })
        }).collect::<Vec<_>>(),
        "rejections": report.rejections,
    });
    fs::write(
        args.out.join("ingest_report.json"),
        serde_json::to_string_pretty(&json)? + "\n",
    )?;
    println!(
        "loaded {} scales ({} parse errors, {} rejected, {} duplicates)",
        report.summary.loaded,
        report.summary.parse_errors,
        report.summary.rejected,
        report.summary.deduplicated
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// found-report pipeline shared by tests and the data-dependent acceptance run

/// Builds the not-found taxonomy for a database against the three biased
/// model populations at their published bias strengths.
pub fn found_taxonomy(
    db: &[ScaleRecord],
    trans_pops: &PopulationSet,
    har_pops: &PopulationSet,
    fif_pops: &PopulationSet,
    density_by_n: &BTreeMap<usize, IntervalDensity>,
    tol: SimilarityTolerance,
) -> Result<analysis::FoundReport> {
    let ft = found_flags(db, trans_pops, tol, Parallelism::auto());
    let fh = found_flags(db, har_pops, tol, Parallelism::auto());
    let ff = found_flags(db, fif_pops, tol, Parallelism::auto());

    let tpl = HarmonicityTemplate::build(20.0)?;
    let mut p_mins = Vec::with_capacity(db.len());
    let mut p_anys = Vec::with_capacity(db.len());
    for rec in db {
        let n = rec.n();
        let density = density_by_n
            .get(&n)
            .ok_or_else(|| Error::Input(format!("no interval density for N = {n}")))?;
        let pm = p_min(&rec.notes, density, tol, PMinMethod::Auto)?.value;
        let mut model_costs = Vec::new();
        if let Some(row) = paper_params(Model::Trans, n) {
            let c = crate::costs::cost_trans(&rec.adjacent_intervals, 2, Rounding::Ceiling)?;
            model_costs.push((row.beta, c.cost));
        }
        if let Some(row) = paper_params(Model::Har, n) {
            let hbar = crate::costs::scale_harmonicity(&rec.adjacent_intervals, &tpl, 1.0);
            model_costs.push((row.beta, crate::costs::cost_har(hbar, row.hmin, row.hmax)));
        }
        if let Some(row) = paper_params(Model::Fif, n) {
            let fbar = crate::costs::fifths_fraction(&rec.adjacent_intervals, row.w);
            model_costs.push((row.beta, crate::costs::cost_fif_alt(fbar, n)));
        }
        p_mins.push(pm);
        p_anys.push(p_any(pm, &model_costs));
    }
    classify_not_found(db, &ft, &fh, &ff, &p_mins, &p_anys)
}

/// Tritone fractions per scale size for a set of populations.
pub fn tritone_table(pops: &BTreeMap<usize, Vec<Vec<f64>>>) -> Vec<(usize, f64)> {
    pops.iter()
        .map(|(&n, scales)| (n, tritone_fraction(scales)))
        .collect()
}
