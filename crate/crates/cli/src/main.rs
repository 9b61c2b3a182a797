//! `antsel`: switching-fabric tables, Monte Carlo sweeps, analytical curves,
//! rank-set probabilities and power tables.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use antsel::analysis::{rank_set_distribution, RankSetOptions, DEFAULT_EXACT_LIMIT, DEFAULT_MC_SAMPLES};
use antsel::channel::RngStream;
use antsel::connectivity::build_connectivity;
use antsel::energy::EnergyParams;
use antsel::experiments::{
    preset, run_experiment, ExperimentConfig, LossMode, Overrides, Precoder, ResultTable, ScenarioConfig, ScenarioKind, SelectionMode,
};
use antsel::fabric::{design_fabric, ArchitectureKind, SwitchCatalog};
use antsel::scalar::Exact;

#[derive(Parser)]
#[command(name = "antsel", version, about = "Antenna-selection workbench")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Switching-fabric stage sizes, switch counts and insertion losses.
    Fabric(FabricArgs),
    /// Monte Carlo sum-rate sweep.
    Sweep(SweepArgs),
    /// Analytical capacity approximations for power-based selection.
    Approx(SweepArgs),
    /// Probabilities of the rank sets picked under partial connectivity.
    Probs(ProbsArgs),
    /// Power consumption (and efficiency, for simulated scenarios).
    Energy(EnergyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "csv")]
    format: Format,
    /// Write here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScenarioArgs {
    /// Named configuration (fig4 … fig9, coherence, tableII).
    #[arg(long)]
    preset: Option<String>,
    /// JSON experiment configuration.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    /// Comma-separated M values.
    #[arg(long, value_delimiter = ',')]
    m: Option<Vec<usize>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    rho_db: Option<f64>,
    /// Comma-separated coherence-block lengths.
    #[arg(long, value_delimiter = ',')]
    eta_coh: Option<Vec<usize>>,
    #[arg(long)]
    architecture: Option<String>,
    #[arg(long)]
    selection_mode: Option<String>,
    #[arg(long)]
    precoder: Option<String>,
    #[arg(long)]
    loss_mode: Option<String>,
    /// Charge training and uplink symbols (`true`/`false`).
    #[arg(long)]
    overhead: Option<bool>,
}

impl ScenarioArgs {
    fn overrides(&self) -> Result<Overrides> {
        Ok(Overrides {
            seed: self.seed,
            trials: self.trials,
            n: self.n,
            m: self.m.clone(),
            k: self.k,
            rho_db: self.rho_db,
            eta_coh: self.eta_coh.clone(),
            architecture: self.architecture.as_deref().map(parse_architecture).transpose()?,
            selection_mode: self.selection_mode.as_deref().map(str::parse::<SelectionMode>).transpose()?,
            precoder: self.precoder.as_deref().map(str::parse::<Precoder>).transpose()?,
            loss_mode: self.loss_mode.as_deref().map(str::parse::<LossMode>).transpose()?,
            overhead: self.overhead,
        })
    }

    /// Preset or file, else a single scenario of `kind` built from flags.
    fn experiment(&self, id: &str, kind: ScenarioKind) -> Result<ExperimentConfig> {
        let mut cfg = match (&self.preset, &self.config) {
            (Some(name), _) => preset(name)?,
            (None, Some(path)) => ExperimentConfig::load(path)?,
            (None, None) => ExperimentConfig {
                id: id.into(),
                seed: antsel::experiments::DEFAULT_SEED,
                scenarios: vec![ScenarioConfig { series: id.into(), kind, ..Default::default() }],
                energy: EnergyParams::default(),
            },
        };
        cfg.apply(&self.overrides()?);
        Ok(cfg)
    }
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// Approximation form for flag-built scenarios.
    #[arg(long, default_value = "single")]
    approx: String,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct FabricArgs {
    #[arg(long, default_value_t = 128)]
    n: usize,
    /// Comma-separated M values.
    #[arg(long, value_delimiter = ',', default_value = "76")]
    m: Vec<usize>,
    /// Restrict to one architecture.
    #[arg(long)]
    architecture: Option<String>,
    /// JSON switch catalog replacing the built-in SP2T–SP4T table.
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProbsArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Largest N solved exactly; Monte Carlo above it.
    #[arg(long, default_value_t = DEFAULT_EXACT_LIMIT)]
    exact_limit: usize,
    #[arg(long, default_value_t = DEFAULT_MC_SAMPLES)]
    mc_samples: usize,
    #[arg(long, default_value_t = antsel::experiments::DEFAULT_SEED)]
    seed: u64,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EnergyArgs {
    #[command(flatten)]
    scenario: ScenarioArgs,
    /// JSON energy constants; missing fields keep their defaults.
    #[arg(long)]
    params: Option<PathBuf>,
    #[command(flatten)]
    output: OutputArgs,
}

fn parse_architecture(s: &str) -> Result<ArchitectureKind> {
    s.parse().map_err(anyhow::Error::msg)
}

fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => std::io::stdout().write_all(text.as_bytes()).context("writing stdout"),
    }
}

fn emit_table(table: &ResultTable, output: &OutputArgs) -> Result<()> {
    let text = match output.format {
        Format::Csv => table.to_csv_string(),
        Format::Json => table.to_json_string(),
    };
    emit(&text, output.out.as_deref())?;
    let failed = table.errors().count();
    if failed > 0 {
        for row in table.errors() {
            eprintln!("{} M={} eta_coh={}: {}", row.series, row.m, row.eta_coh, row.error);
        }
        bail!("{failed} of {} rows failed", table.rows.len());
    }
    Ok(())
}

fn fabric(args: &FabricArgs) -> Result<()> {
    let catalog = SwitchCatalog::<Exact>::load(args.catalog.as_deref())?;
    let kinds: Vec<ArchitectureKind> = match &args.architecture {
        Some(a) => vec![parse_architecture(a)?],
        None => ArchitectureKind::ALL.to_vec(),
    };
    let mut designs = Vec::new();
    for &m in &args.m {
        for &kind in &kinds {
            designs.push(design_fabric(args.n, m, kind, &catalog)?.to_json());
        }
    }
    emit(&(serde_json::to_string_pretty(&designs)? + "\n"), args.out.as_deref())
}

fn sweep(args: &SweepArgs, approx: bool) -> Result<()> {
    let kind = if !approx {
        ScenarioKind::Simulate
    } else if args.approx.eq_ignore_ascii_case("mixture") {
        ScenarioKind::ApproxMixture
    } else {
        ScenarioKind::ApproxSingle
    };
    let mut cfg = args.scenario.experiment(if approx { "approx" } else { "sweep" }, kind)?;
    if approx {
        cfg.scenarios.retain(|s| s.kind.is_approx());
        if cfg.scenarios.is_empty() {
            bail!("configuration has no approximation scenarios");
        }
    }
    emit_table(&run_experiment(&cfg)?, &args.output)
}

fn probs(args: &ProbsArgs) -> Result<()> {
    let map = build_connectivity(args.n, args.m)?;
    let options = RankSetOptions { exact_limit: args.exact_limit, mc_samples: args.mc_samples, stream: RngStream::new(args.seed) };
    let dist = rank_set_distribution(&map, &options)?;
    let doc = serde_json::json!({
        "N": args.n,
        "M": args.m,
        "exact": dist.is_exact(),
        "samples": dist.samples,
        "exact_probs": dist.exact.as_ref().map(|ps| ps.iter().map(|p| p.to_string()).collect::<Vec<_>>()),
        "sets": dist.to_json(),
    });
    emit(&(serde_json::to_string_pretty(&doc)? + "\n"), args.out.as_deref())
}

fn energy(args: &EnergyArgs) -> Result<()> {
    let mut cfg = args.scenario.experiment("energy", ScenarioKind::Power)?;
    cfg.energy = EnergyParams::load(args.params.as_deref())?;
    cfg.scenarios.retain(|s| s.kind == ScenarioKind::Power || (s.kind == ScenarioKind::Simulate && s.energy));
    if cfg.scenarios.is_empty() {
        bail!("configuration has no power or efficiency scenarios");
    }
    emit_table(&run_experiment(&cfg)?, &args.output)
}

fn init_threads() -> Result<()> {
    if let Ok(v) = std::env::var("ANTSEL_THREADS") {
        let n: usize = v.parse().with_context(|| format!("ANTSEL_THREADS='{v}' is not a thread count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}

fn main() -> std::process::ExitCode {
    let cli = Cli::parse();
    let result = init_threads().and_then(|()| match &cli.command {
        Command::Fabric(a) => fabric(a),
        Command::Sweep(a) => sweep(a, false),
        Command::Approx(a) => sweep(a, true),
        Command::Probs(a) => probs(a),
        Command::Energy(a) => energy(a),
    });
    match result {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
