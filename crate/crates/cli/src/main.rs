use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use lie_cbf::harness::{
    preset, run, summary_text, write_summary, CsvSink, RunSummary, Scenario, ScenarioConfig, ScenarioKind, LANDING_ALPHAS,
    PRESETS, SLIT_ALPHA_ES,
};
use lie_cbf::Error;

/// Safety-filtered rigid-body simulations on SE(3).
#[derive(Parser, Debug)]
#[command(name = "lie-cbf", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one scenario and write its CSV log and summary.
    Run(RunArgs),
    /// Repeat a scenario over a list of values of one parameter.
    Sweep(SweepArgs),
    /// Run the built-in numerical checks.
    Verify,
    /// List the compiled-in presets.
    List,
}

#[derive(Args, Debug, Clone)]
struct Source {
    /// Name of a compiled-in preset (see `list`).
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// Path to a configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct Overrides {
    /// Energy weight of the energy-augmented barriers.
    #[arg(long, allow_negative_numbers = true)]
    alpha_e: Option<f64>,
    /// Linear class-K coefficient.
    #[arg(long, allow_negative_numbers = true)]
    alpha: Option<f64>,
    /// Directional energy bound [J].
    #[arg(long, allow_negative_numbers = true)]
    emax: Option<f64>,
    /// Integration and logging step [s].
    #[arg(long, allow_negative_numbers = true)]
    dt: Option<f64>,
    /// Simulated horizon [s].
    #[arg(long, allow_negative_numbers = true)]
    duration: Option<f64>,
    /// Apply the nominal controller without the safety filter.
    #[arg(long)]
    no_filter: bool,
}

#[derive(Args, Debug)]
struct RunArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    overrides: Overrides,
    /// Output directory, created if missing.
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    overrides: Overrides,
    /// Output directory, created if missing.
    #[arg(long, default_value = "results")]
    out: PathBuf,
    /// Parameter to vary. Defaults to `alpha-e` for slit scenarios and `alpha` for landing.
    #[arg(long, value_enum)]
    param: Option<SweepParam>,
    /// Comma-separated values; defaults depend on the scenario kind.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    values: Vec<f64>,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum SweepParam {
    AlphaE,
    Alpha,
    Emax,
    Dt,
    Duration,
}

impl SweepParam {
    fn file_tag(self) -> &'static str {
        match self {
            SweepParam::AlphaE => "alpha_e",
            SweepParam::Alpha => "alpha",
            SweepParam::Emax => "emax",
            SweepParam::Dt => "dt",
            SweepParam::Duration => "duration",
        }
    }
}

/// A failure with the exit code it maps to.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::Infeasible { .. } => 1,
            Error::Config { .. } | Error::InvalidParameter { .. } | Error::Trajectory(_) => 2,
            _ => 3,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

fn load(source: &Source) -> Result<ScenarioConfig, Failure> {
    match (&source.preset, &source.config) {
        (Some(name), _) => Ok(preset(name)?),
        (None, Some(path)) => Ok(ScenarioConfig::from_file(path)?),
        (None, None) => Err(usage("one of --preset or --config is required")),
    }
}

fn set_emax(config: &mut ScenarioConfig, value: f64) -> Result<(), Failure> {
    match config.directional.as_mut() {
        Some(d) => {
            d.e_max = value;
            Ok(())
        }
        None => Err(usage("--emax needs a scenario with a directional barrier")),
    }
}

fn apply(config: &mut ScenarioConfig, o: &Overrides) -> Result<(), Failure> {
    if let Some(v) = o.alpha_e {
        config.alpha_e = v;
    }
    if let Some(v) = o.alpha {
        config.alpha = v;
    }
    if let Some(v) = o.emax {
        set_emax(config, v)?;
    }
    if let Some(v) = o.dt {
        config.dt = v;
    }
    if let Some(v) = o.duration {
        config.duration = v;
    }
    if o.no_filter {
        config.filter_enabled = false;
    }
    config.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => usage(format!("invalid value for `{name}`: {reason}")),
        other => other.into(),
    })
}

fn set_param(config: &mut ScenarioConfig, param: SweepParam, value: f64) -> Result<(), Failure> {
    match param {
        SweepParam::AlphaE => config.alpha_e = value,
        SweepParam::Alpha => config.alpha = value,
        SweepParam::Emax => set_emax(config, value)?,
        SweepParam::Dt => config.dt = value,
        SweepParam::Duration => config.duration = value,
    }
    config.validate().map_err(|e| match e {
        Error::InvalidParameter { name, reason } => usage(format!("invalid sweep value for `{name}`: {reason}")),
        other => other.into(),
    })
}

/// Runs one configuration, writing `<name>.csv`, `<name>.cfg` and `<name>.summary` under `out`.
fn execute(config: &ScenarioConfig, out: &Path, name: &str) -> Result<RunSummary, Failure> {
    let scenario = Scenario::from_config(config)?;
    let io = |path: &Path, e: std::io::Error| Failure {
        code: 3,
        message: format!("{}: {e}", path.display()),
    };
    let cfg_path = out.join(format!("{name}.cfg"));
    fs::write(&cfg_path, config.to_text()).map_err(|e| io(&cfg_path, e))?;
    let csv_path = out.join(format!("{name}.csv"));
    let mut sink = CsvSink::create(&csv_path, &scenario.cbfs)?;
    let outcome = run(&scenario, &mut sink);
    sink.finish()?;
    let summary = match outcome {
        Ok(s) => s,
        Err(e) => {
            eprintln!("run `{name}` stopped; partial log in {}", csv_path.display());
            return Err(e.into());
        }
    };
    let summary_path = out.join(format!("{name}.summary"));
    write_summary(&summary_path, &summary)?;
    eprintln!("wrote {} and {}", csv_path.display(), summary_path.display());
    if summary.infeasible_steps > 0 {
        eprintln!("warning: {} steps used the least-violating input", summary.infeasible_steps);
    }
    Ok(summary)
}

fn create_dir(out: &Path) -> Result<(), Failure> {
    fs::create_dir_all(out).map_err(|e| Failure {
        code: 3,
        message: format!("{}: {e}", out.display()),
    })
}

fn cmd_run(args: &RunArgs) -> Result<(), Failure> {
    let mut config = load(&args.source)?;
    apply(&mut config, &args.overrides)?;
    create_dir(&args.out)?;
    let name = config.output_name.clone();
    let summary = execute(&config, &args.out, &name)?;
    print!("{}", summary_text(&summary));
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> Result<(), Failure> {
    let mut base = load(&args.source)?;
    apply(&mut base, &args.overrides)?;
    let param = match (args.param, base.kind) {
        (Some(p), _) => p,
        (None, ScenarioKind::SlitTraversal) => SweepParam::AlphaE,
        (None, ScenarioKind::DirectionalLanding) => SweepParam::Alpha,
        (None, ScenarioKind::Custom) => return Err(usage("--param is required for custom scenarios")),
    };
    let values = if !args.values.is_empty() {
        args.values.clone()
    } else {
        match param {
            SweepParam::AlphaE => SLIT_ALPHA_ES.to_vec(),
            SweepParam::Alpha => LANDING_ALPHAS.to_vec(),
            _ => return Err(usage("--values is required for this parameter")),
        }
    };
    let mut jobs = Vec::with_capacity(values.len());
    for &value in &values {
        let mut config = base.clone();
        set_param(&mut config, param, value)?;
        let name = format!("{}_{}_{}", base.output_name, param.file_tag(), value);
        if jobs.iter().any(|(n, _): &(String, ScenarioConfig)| *n == name) {
            return Err(usage(format!("duplicate sweep value {value}")));
        }
        jobs.push((name, config));
    }
    create_dir(&args.out)?;

    let results: Vec<Result<RunSummary, Failure>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|(name, config)| scope.spawn(move || execute(config, &args.out, name)))
            .collect();
        handles
            .into_iter()
            .map(|h| {
                h.join().unwrap_or_else(|_| {
                    Err(Failure {
                        code: 3,
                        message: "sweep worker panicked".into(),
                    })
                })
            })
            .collect()
    });

    let mut first_failure = None;
    for ((name, _), result) in jobs.iter().zip(results) {
        match result {
            Ok(summary) => print!("[{name}]\n{}\n", summary_text(&summary)),
            Err(f) => {
                eprintln!("error: {name}: {}", f.message);
                first_failure.get_or_insert(f);
            }
        }
    }
    match first_failure {
        Some(f) => Err(Failure {
            code: f.code,
            message: "sweep finished with failures".into(),
        }),
        None => Ok(()),
    }
}

fn cmd_verify() -> Result<(), Failure> {
    let outcomes = lie_cbf::verify::run_all();
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    if failed == 0 {
        Ok(())
    } else {
        Err(Failure {
            code: 3,
            message: format!("{failed} of {} checks failed", outcomes.len()),
        })
    }
}

fn cmd_list() -> Result<(), Failure> {
    for (name, text) in PRESETS {
        let blurb = text
            .lines()
            .take_while(|l| l.starts_with('#'))
            .map(|l| l.trim_start_matches('#').trim())
            .collect::<Vec<_>>()
            .join(" ");
        println!("{name:<10} {blurb}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::Sweep(args) => cmd_sweep(args),
        Command::Verify => cmd_verify(),
        Command::List => cmd_list(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
