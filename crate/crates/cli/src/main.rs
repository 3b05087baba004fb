mod config;
mod eval;
mod goldens;
mod regdata;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use iwasawa_core::cyclofield::SeedPolicy;
use iwasawa_core::suites::CharSpec;

use config::Overrides;

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, config, or input files. Exit 2.
    Config(String),
    /// A library error during computation. Exit 3.
    Compute(String),
    /// The golden store disagrees with a fresh run. Exit 1.
    Golden(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Golden(_) => 1,
            CliError::Config(_) => 2,
            CliError::Compute(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(s) => write!(f, "configuration error: {s}"),
            CliError::Compute(s) => write!(f, "computation error: {s}"),
            CliError::Golden(s) => write!(f, "{s}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "iwf", version, about = "Verify p-adic L-function and regulator identities")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run verification suites and write a JSON report.
    Verify {
        #[arg(value_enum)]
        suite: Suite,
        #[command(flatten)]
        common: Common,
        /// Depth of the cyclotomic family in the Coleman suite.
        #[arg(long)]
        depth: Option<u32>,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Report path; `-` writes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate a single object and print it.
    Eval {
        #[arg(value_enum)]
        object: Object,
        #[command(flatten)]
        common: Common,
        /// The point s for `lp`, as an integer, a/b or a decimal.
        #[arg(long, allow_hyphen_values = true)]
        s: Option<String>,
        #[arg(long, value_enum, default_value = "inf")]
        side: Side,
        /// Regulator data for `regulator` and `linv`.
        #[arg(long)]
        data: Option<PathBuf>,
        /// Also write the result as JSON.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Maintain the golden report store.
    Goldens {
        #[arg(value_enum)]
        action: GoldenAction,
        #[arg(long)]
        dir: Option<PathBuf>,
        #[arg(long)]
        jobs: Option<usize>,
    },
}

#[derive(Args, Clone, Debug, Default)]
struct Common {
    #[arg(long)]
    p: Option<u64>,
    #[arg(long)]
    precision: Option<u32>,
    #[arg(long)]
    mmax: Option<u32>,
    /// Built-in character name.
    #[arg(long = "char")]
    character: Option<String>,
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Suite {
    Ex,
    Ezc,
    Coleman,
    Leopoldt,
    All,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Object {
    Lp,
    Measure,
    Regulator,
    Linv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Side {
    P,
    Inf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum GoldenAction {
    Update,
    Check,
}

fn seed_policy() -> Result<SeedPolicy, CliError> {
    match std::env::var("IWF_SEED_POLICY") {
        Err(_) => Ok(SeedPolicy::Smallest),
        Ok(v) if v == "smallest" || v == "largest" => Ok(SeedPolicy::from_env()),
        Ok(v) => Err(CliError::Config(format!("IWF_SEED_POLICY must be smallest or largest, got {v:?}"))),
    }
}

fn default_jobs() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Config(format!("cannot write {}: {e}", path.display())))
}

fn verify(suite: Suite, common: Common, depth: Option<u32>, config: Option<PathBuf>, out: Option<PathBuf>) -> Result<bool, CliError> {
    let policy = seed_policy()?;
    if common.jobs == Some(0) {
        return Err(CliError::Config("--jobs must be at least 1".into()));
    }
    let cfg = match &config {
        Some(path) => config::load(path)?,
        None => config::RunConfig::default(),
    };
    let overrides = Overrides {
        p: common.p,
        precision: common.precision,
        m_max: common.mmax,
        character: common.character,
        depth,
        jobs: common.jobs,
    };
    let cfg = config::merge(cfg, &overrides);
    config::validate(&cfg)?;
    let selection = format!("{suite:?}").to_lowercase();
    let plans = config::plan(&cfg, &selection)?;
    let reports = run::run_plans(&plans, cfg.jobs.unwrap_or_else(default_jobs), policy)?;
    let text = run::render(&run::report(&reports, policy));
    let out = out.or(cfg.output.clone()).unwrap_or_else(|| PathBuf::from("iwf-report.json"));
    if out == Path::new("-") {
        print!("{text}");
        eprint!("{}", run::summary(&reports));
    } else {
        write_file(&out, &text)?;
        print!("{}", run::summary(&reports));
        println!("report: {}", out.display());
    }
    Ok(reports.iter().all(|r| r.pass()))
}

fn eval(object: Object, common: Common, s: Option<String>, side: Side, data: Option<PathBuf>, out: Option<PathBuf>) -> Result<bool, CliError> {
    let policy = seed_policy()?;
    if let Some(d) = &data {
        if !d.is_file() {
            return Err(CliError::Config(format!("data file {} does not exist", d.display())));
        }
    }
    let args = eval::EvalArgs {
        p: common.p.unwrap_or(5),
        precision: common.precision.unwrap_or(12),
        m_max: common.mmax.unwrap_or(match object {
            Object::Measure => 2,
            _ => 4,
        }),
        character: CharSpec::builtin(common.character.as_deref().unwrap_or("mod12_quadratic")),
        s,
    };
    if args.precision < 2 || args.m_max == 0 {
        return Err(CliError::Config("precision must be at least 2 and mmax at least 1".into()));
    }
    let outcome = match object {
        Object::Lp => eval::lp(&args, policy)?,
        Object::Measure => eval::measure(&args, policy)?,
        Object::Regulator => {
            let side = match side {
                Side::P => "p",
                Side::Inf => "inf",
            };
            eval::regulator(data.as_deref(), side, policy)?
        }
        Object::Linv => eval::linv(data.as_deref(), policy)?,
    };
    print!("{}", outcome.text);
    if let Some(path) = out {
        write_file(&path, &run::render(&outcome.json))?;
    }
    Ok(true)
}

fn goldens_cmd(action: GoldenAction, dir: Option<PathBuf>, jobs: Option<usize>) -> Result<bool, CliError> {
    let policy = seed_policy()?;
    let dir = dir.unwrap_or_else(goldens::default_dir);
    let jobs = jobs.unwrap_or_else(default_jobs).max(1);
    let log = match action {
        GoldenAction::Update => goldens::update(&dir, jobs, policy)?,
        GoldenAction::Check => goldens::check(&dir, jobs, policy)?,
    };
    print!("{log}");
    Ok(true)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Verify { suite, common, depth, config, out } => verify(suite, common, depth, config, out),
        Cmd::Eval { object, common, s, side, data, out } => eval(object, common, s, side, data, out),
        Cmd::Goldens { action, dir, jobs } => goldens_cmd(action, dir, jobs),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("iwf: {e}");
            ExitCode::from(e.code())
        }
    }
}
