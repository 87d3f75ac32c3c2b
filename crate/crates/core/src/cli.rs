//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data or model
//! error. Reports go to stdout as one JSON document (or a table with
//! `--pretty`); diagnostics go to stderr.

use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use crate::correlation::CorrelationFamily;
use crate::criteria::{evaluate_criterion, CriterionKind};
use crate::data::{CandidateModel, Dataset, DesignSource, TrueModelSpec};
use crate::error::{Error, Result};
use crate::fit::profile_reml;
use crate::io::{digest, parse_dataset, read_bytes};
use crate::report::{render_pretty, to_json, FitPayload, Payload, ReportDocument};
use crate::selection::{enumerate_candidates, select, CriterionEntry};
use crate::simulate::{run_experiment, verify_identities, with_workers, ExperimentConfig, IdentityConfig};

/// Environment variable capping the worker count.
pub const THREADS_ENV: &str = "RIC_SELECT_THREADS";

#[derive(Debug, Parser)]
#[command(name = "ric-select", version, about = "Residual-likelihood information criteria for correlated-error regression")]
struct Cli {
    /// Base seed for simulation commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Correlation family used for fitting: identity, ar1 or exchangeable.
    #[arg(long, global = true)]
    family: Option<CorrelationFamily>,
    /// Prepend an intercept column and keep it in every candidate.
    #[arg(long, global = true)]
    force_intercept: bool,
    /// Print a table instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit one model by profile REML and report all criteria.
    Fit(FitArgs),
    /// Exhaustive subset selection.
    Select(SelectArgs),
    /// Run a Monte-Carlo selection experiment from a JSON config.
    Simulate(SimulateArgs),
    /// Check the moment and distribution identities by simulation.
    Verify(VerifyArgs),
}

#[derive(Debug, Args)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Name of the response column.
    #[arg(long)]
    response: String,
}

#[derive(Debug, Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated column names or one-based indices; default all.
    #[arg(long)]
    active: Option<String>,
}

#[derive(Debug, Args)]
struct SelectArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Comma-separated criteria; default all six.
    #[arg(long)]
    criteria: Option<String>,
    /// Largest candidate size.
    #[arg(long)]
    max_k: Option<usize>,
    /// Columns present in every candidate (names or one-based indices).
    #[arg(long)]
    force: Option<String>,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    workers: Option<usize>,
}

#[derive(Debug, Args)]
struct VerifyArgs {
    #[arg(long)]
    n: usize,
    /// Columns of the fitted (and true) model.
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 100_000)]
    reps: usize,
    /// Replications used for the KS tests; default min(reps, 10000).
    #[arg(long)]
    ks_reps: Option<usize>,
    #[arg(long, default_value_t = 1.0)]
    sigma0_sq: f64,
    /// Correlation parameter of the truth when --family is not identity.
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
}

/// Maps an error to the process exit code.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config(_) | Error::InvalidArgument(_) => 1,
        _ => 2,
    }
}

/// Worker count: the explicit flag, else the environment variable, else the
/// number of available cores.
pub fn resolve_workers(flag: Option<usize>) -> Result<usize> {
    if let Some(w) = flag {
        if w == 0 {
            return Err(Error::InvalidArgument("--workers must be at least 1".into()));
        }
        return Ok(w);
    }
    match std::env::var(THREADS_ENV) {
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(w) if w >= 1 => Ok(w),
            _ => Err(Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got '{v}'"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

/// Resolves a list of column names or one-based indices against `data`.
pub fn resolve_columns(data: &Dataset, list: &str) -> Result<CandidateModel> {
    let mut idx = Vec::new();
    for token in list.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let j = match data.column_index(token) {
            Some(j) => j,
            None => match token.parse::<usize>() {
                Ok(i) if i >= 1 && i <= data.p() => i - 1,
                _ => return Err(Error::InvalidArgument(format!("unknown column '{token}'"))),
            },
        };
        idx.push(j);
    }
    Ok(CandidateModel::new(idx))
}

fn load_data(args: &DataArgs, intercept: bool) -> Result<(Dataset, String)> {
    let bytes = read_bytes(&args.data)?;
    let text = String::from_utf8(bytes.clone())
        .map_err(|_| Error::InvalidData(format!("{} is not valid UTF-8", args.data.display())))?;
    let data = parse_dataset(&text, &args.response)?;
    let data = if intercept { data.with_intercept() } else { data };
    Ok((data, digest(&bytes)))
}

fn with_intercept_column(model: CandidateModel, intercept: bool) -> CandidateModel {
    if intercept && !model.contains(0) {
        let mut idx = model.indices().to_vec();
        idx.push(0);
        CandidateModel::new(idx)
    } else {
        model
    }
}

fn run_fit(cli: &Cli, args: &FitArgs) -> Result<(Payload, String)> {
    let (data, dig) = load_data(&args.data, cli.force_intercept)?;
    let model = match &args.active {
        Some(list) => resolve_columns(&data, list)?,
        None => CandidateModel::full(data.p()),
    };
    let model = with_intercept_column(model, cli.force_intercept);
    let fit = profile_reml(&data, &model, cli.family.unwrap_or(CorrelationFamily::Identity))?;
    let criteria = CriterionKind::ALL
        .iter()
        .map(|&kind| match evaluate_criterion(&fit, kind) {
            Ok(v) => CriterionEntry { kind, value: Some(v), note: None },
            Err(e) => CriterionEntry { kind, value: None, note: Some(e.to_string()) },
        })
        .collect();
    let payload = FitPayload {
        columns: data.names().to_vec(),
        fit,
        criteria,
    };
    Ok((Payload::Fit(payload), dig))
}

fn run_select(cli: &Cli, args: &SelectArgs) -> Result<(Payload, String)> {
    let kinds = match &args.criteria {
        Some(s) => CriterionKind::parse_list(s)?,
        None => CriterionKind::ALL.to_vec(),
    };
    let workers = resolve_workers(args.workers)?;
    let (data, dig) = load_data(&args.data, cli.force_intercept)?;
    let forced = match &args.force {
        Some(list) => resolve_columns(&data, list)?,
        None => CandidateModel::empty(),
    };
    let forced = with_intercept_column(forced, cli.force_intercept);
    let max_k = args.max_k.unwrap_or(data.p());
    let candidates = enumerate_candidates(data.p(), &forced, max_k)?;
    let family = cli.family.unwrap_or(CorrelationFamily::Identity);
    let report = with_workers(workers, || select(&data, family, &candidates, &kinds))??;
    Ok((Payload::Selection(report), dig))
}

fn run_simulate(cli: &Cli, args: &SimulateArgs) -> Result<(Payload, String)> {
    let workers = resolve_workers(args.workers)?;
    let bytes = read_bytes(&args.config)?;
    let mut config: ExperimentConfig =
        serde_json::from_slice(&bytes).map_err(|e| Error::Config(format!("{}: {e}", args.config.display())))?;
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(family) = cli.family {
        config.fit_family = family;
    }
    config.validate()?;
    let summary = run_experiment(&config, workers)?;
    Ok((Payload::Experiment(summary), digest(&bytes)))
}

fn identity_config(cli: &Cli, args: &VerifyArgs) -> Result<IdentityConfig> {
    if args.k == 0 {
        return Err(Error::InvalidArgument("--k must be at least 1".into()));
    }
    let family = cli.family.unwrap_or(CorrelationFamily::Identity);
    let correlation = match (family, args.theta) {
        (CorrelationFamily::Identity, _) => family.with_theta(0.0),
        (_, Some(theta)) => family.with_theta(theta),
        (_, None) => {
            return Err(Error::InvalidArgument(format!("--family {family} needs --theta")));
        }
    };
    let seed = cli.seed.unwrap_or(0);
    let config = IdentityConfig {
        truth: TrueModelSpec {
            beta0: vec![1.0; args.k],
            sigma0_sq: args.sigma0_sq,
            correlation,
            design: DesignSource::Gaussian {
                p: args.k,
                intercept: cli.force_intercept,
                seed,
            },
        },
        n: args.n,
        model: CandidateModel::full(args.k),
        replications: args.reps,
        ks_replications: args.ks_reps.unwrap_or(args.reps.min(10_000)),
        seed,
    };
    config.validate()?;
    Ok(config)
}

fn run_verify(cli: &Cli, args: &VerifyArgs) -> Result<(Payload, String)> {
    let workers = resolve_workers(args.workers)?;
    let config = identity_config(cli, args)?;
    let dig = digest(to_json(&config)?.as_bytes());
    let summary = verify_identities(&config, workers)?;
    Ok((Payload::Identities(summary), dig))
}

/// Runs the CLI on `argv` (program name first) and returns the exit code.
pub fn run_command<I, S>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{}", e.render());
                    0
                }
                _ => {
                    let _ = write!(stderr, "{}", e.render());
                    1
                }
            };
        }
    };

    let start = Instant::now();
    let outcome = match &cli.command {
        Command::Fit(a) => run_fit(&cli, a),
        Command::Select(a) => run_select(&cli, a),
        Command::Simulate(a) => run_simulate(&cli, a),
        Command::Verify(a) => run_verify(&cli, a),
    };
    let (payload, dig) = match outcome {
        Ok(v) => v,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code(&e);
        }
    };
    let command = argv.iter().skip(1).cloned().collect();
    let doc = ReportDocument::new(command, dig, payload, start.elapsed().as_millis() as u64);
    let text = if cli.pretty {
        render_pretty(&doc)
    } else {
        match to_json(&doc) {
            Ok(mut s) => {
                s.push('\n');
                s
            }
            Err(e) => {
                let _ = writeln!(stderr, "error: {e}");
                return exit_code(&e);
            }
        }
    };
    if let Err(e) = stdout.write_all(text.as_bytes()) {
        let _ = writeln!(stderr, "error: {e}");
        return 2;
    }
    0
}
