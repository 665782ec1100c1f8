use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use monofdr::cli_io::{
    cmd_analyze, cmd_simulate, cmd_transform, AnalysisConfig, ColumnSel, ConfigError, SimulateConfig, OUT_DIR_ENV,
};

#[derive(Parser)]
#[command(name = "monofdr", version, about = "Monotone local and tail fdr estimation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Map t-statistics to z-values.
    Transform(TransformArgs),
    /// Estimate and monotonize fdr for a column of statistics.
    Analyze(AnalyzeArgs),
    /// Run the seeded simulation study.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct TransformArgs {
    /// Input CSV with a header row.
    #[arg(short, long)]
    input: PathBuf,
    /// Degrees of freedom of the t-statistics.
    #[arg(long)]
    df: f64,
    /// Column name or zero-based index.
    #[arg(long, default_value = "0")]
    column: String,
    #[arg(long, default_value_t = monofdr::stats_numerics::DEFAULT_CLAMP_Z)]
    clamp_z: f64,
    /// Output CSV; defaults to z_values.csv in the output directory.
    #[arg(short, long)]
    output: Option<PathBuf>,
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// Input CSV with a header row.
    #[arg(short, long)]
    input: PathBuf,
    /// key = value settings file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    width: Option<String>,
    /// Histogram range as `lo,hi`.
    #[arg(long, allow_hyphen_values = true)]
    range: Option<String>,
    /// Null region as `lo,hi`.
    #[arg(long, allow_hyphen_values = true)]
    null_region: Option<String>,
    /// normal or gamma.
    #[arg(long)]
    family: Option<String>,
    /// both, left, right or none.
    #[arg(long)]
    sides: Option<String>,
    /// pava or qp.
    #[arg(long)]
    method: Option<String>,
    /// local, tail or both.
    #[arg(long)]
    monotonize: Option<String>,
    /// Comma-separated levels.
    #[arg(long)]
    alpha: Option<String>,
    #[arg(long)]
    column: Option<String>,
    /// Treat inputs as t-statistics with this many degrees of freedom.
    #[arg(long)]
    df: Option<String>,
    #[arg(long)]
    clamp_z: Option<String>,
    /// joint or per-tail.
    #[arg(long)]
    decision_mode: Option<String>,
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    max_iter: Option<String>,
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SimulateArgs {
    /// normal-sec4 or chisq-sec4.
    #[arg(long)]
    preset: Option<String>,
    /// key = value scenario file.
    #[arg(short, long)]
    config: Option<PathBuf>,
    #[arg(long)]
    reps: Option<String>,
    #[arg(long)]
    n: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    p0: Option<String>,
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    alpha: Option<String>,
    /// Run replications in parallel.
    #[arg(long)]
    parallel: bool,
    #[arg(long, env = OUT_DIR_ENV)]
    out_dir: Option<PathBuf>,
}

fn apply(
    set: &mut dyn FnMut(&str, &str) -> Result<(), ConfigError>,
    pairs: &[(&str, &Option<String>)],
) -> Result<(), ConfigError> {
    for (k, v) in pairs {
        if let Some(v) = v {
            set(k, v)?;
        }
    }
    Ok(())
}

fn analyze_config(a: &AnalyzeArgs) -> Result<AnalysisConfig, ConfigError> {
    let mut cfg = match &a.config {
        Some(p) => AnalysisConfig::from_file(p)?,
        None => AnalysisConfig::default(),
    };
    apply(
        &mut |k, v| cfg.set(k, v),
        &[
            ("width", &a.width),
            ("range", &a.range),
            ("null_region", &a.null_region),
            ("family", &a.family),
            ("sides", &a.sides),
            ("method", &a.method),
            ("monotonize", &a.monotonize),
            ("alpha", &a.alpha),
            ("column", &a.column),
            ("df", &a.df),
            ("clamp_z", &a.clamp_z),
            ("decision_mode", &a.decision_mode),
            ("tol", &a.tol),
            ("max_iter", &a.max_iter),
        ],
    )?;
    if let Some(d) = &a.out_dir {
        cfg.out_dir = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn simulate_config(a: &SimulateArgs) -> Result<SimulateConfig, ConfigError> {
    let mut cfg = match &a.config {
        Some(p) => SimulateConfig::from_file(p)?,
        None => SimulateConfig::default(),
    };
    apply(
        &mut |k, v| cfg.set(k, v),
        &[
            ("preset", &a.preset),
            ("reps", &a.reps),
            ("n", &a.n),
            ("base_seed", &a.seed),
            ("p0", &a.p0),
            ("method", &a.method),
            ("alpha", &a.alpha),
        ],
    )?;
    if a.parallel {
        cfg.study.parallel = true;
    }
    if let Some(d) = &a.out_dir {
        cfg.out_dir = d.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

enum Failure {
    Usage(ConfigError),
    Run(anyhow::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Failure::Usage(e)
    }
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        match e.downcast::<ConfigError>() {
            Ok(c) => Failure::Usage(c),
            Err(e) => Failure::Run(e),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Transform(a) => {
            let column: ColumnSel = a
                .column
                .parse()
                .map_err(|msg| ConfigError::BadValue { key: "column".into(), msg })?;
            let output = match (&a.output, &a.out_dir) {
                (Some(o), _) => o.clone(),
                (None, Some(d)) => d.join("z_values.csv"),
                (None, None) => PathBuf::from("z_values.csv"),
            };
            let r = cmd_transform(&a.input, &column, a.df, a.clamp_z, &output)?;
            eprintln!("transformed {} values, {} clamped", r.z.len(), r.clamped);
            eprintln!("wrote {}", output.display());
        }
        Command::Analyze(a) => {
            let cfg = analyze_config(&a)?;
            let (analysis, written) = cmd_analyze(&a.input, &cfg)?;
            eprintln!("p0_hat = {:.4}", analysis.out.fit.p0_hat);
            for d in &analysis.decisions {
                eprintln!(
                    "alpha {}: {} rejected (local, monotone), {} (tail)",
                    d.alpha, d.local_iso.u, d.tail_iso.u
                );
            }
            for w in analysis.out.fit.warnings.iter().chain(&analysis.out.mono.warnings) {
                eprintln!("warning: {w}");
            }
            for f in written.files {
                eprintln!("wrote {}", f.display());
            }
        }
        Command::Simulate(a) => {
            let cfg = simulate_config(&a)?;
            let (summary, written) = cmd_simulate(&cfg)?;
            eprintln!(
                "{} scenario: {} of {} replications succeeded",
                summary.spec.kind,
                summary.succeeded,
                summary.spec.reps
            );
            for e in &summary.local_iso {
                eprintln!("alpha {}: mean fdp {:.4}, mean fnp {:.4}", e.alpha, e.mean_fdp, e.mean_fnp);
            }
            for f in written.files {
                eprintln!("wrote {}", f.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
