//! `mgcluster` command-line front end.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, Context};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use sha2::{Digest, Sha256};

use mgcluster::analysis::Provenance;
use mgcluster::random::{random_network, seeded_rng, RandomOptions};
use mgcluster::spectral::DEFAULT_CLUSTER_THRESHOLD;
use mgcluster::{
    analyze, mucr_surface, network_spectrum, parse_unchecked, sweep, equivalence_check, validate, CharPoly, CheckStatus,
    Error, Network, SweepParameter, Verdict, ViolationCode,
};

const EXIT_STABLE: u8 = 0;
const EXIT_UNSTABLE: u8 = 1;
const EXIT_INPUT: u8 = 2;
const EXIT_NUMERIC: u8 = 3;

#[derive(Parser, Debug)]
#[command(name = "mgcluster", version, about = "Critical-cluster stability analysis for droop-controlled microgrids")]
struct Cli {
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Human-readable text instead of JSON.
    #[arg(long, global = true)]
    pretty: bool,

    /// Cluster membership threshold, fraction of the largest eigenvector entry.
    #[arg(long, global = true, default_value_t = DEFAULT_CLUSTER_THRESHOLD)]
    cluster_threshold: f64,

    /// Power-filter cutoff in rad/s, overriding the input document.
    #[arg(long, global = true)]
    omega_c: Option<f64>,

    /// Seed for randomized networks.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Spectrum, critical clusters and stability verdict of a network.
    Analyze {
        input: PathBuf,
    },
    /// Sweep one line length or droop gain and locate stability crossings.
    Sweep(SweepArgs),
    /// Critical eigenvalue over a (rho, k) grid, as CSV.
    Mucr(MucrArgs),
    /// Compare per-mode polynomial roots with the full state-matrix eigenvalues.
    Oracle(OracleArgs),
    /// Roots of the per-mode polynomial over a range of mu, as CSV.
    Rootlocus(RootLocusArgs),
}

#[derive(Args, Debug)]
struct SweepArgs {
    input: PathBuf,
    /// `line-length:<line-id>` (km) or `droop-m:<bus-id>` (percent).
    #[arg(long)]
    param: String,
    #[arg(long)]
    from: f64,
    #[arg(long)]
    to: f64,
    #[arg(long, default_value_t = 50)]
    count: usize,
    /// Also write the per-point table as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct MucrArgs {
    #[arg(long, default_value_t = 0.5)]
    rho_min: f64,
    #[arg(long, default_value_t = 3.0)]
    rho_max: f64,
    #[arg(long, default_value_t = 0.5)]
    k_min: f64,
    #[arg(long, default_value_t = 5.0)]
    k_max: f64,
    #[arg(long, default_value_t = 20)]
    n_rho: usize,
    #[arg(long, default_value_t = 20)]
    n_k: usize,
    /// Filter time constant in seconds; defaults to 1/omega_c.
    #[arg(long)]
    tau: Option<f64>,
    /// Nominal angular frequency, rad/s.
    #[arg(long, default_value_t = 100.0 * std::f64::consts::PI)]
    omega0: f64,
}

#[derive(Args, Debug)]
struct OracleArgs {
    /// Network document; omit when using --random.
    input: Option<PathBuf>,
    /// Random connected network, e.g. `m=6`.
    #[arg(long, conflicts_with = "input")]
    random: Option<String>,
    /// Give the random network a non-uniform droop ratio.
    #[arg(long, requires = "random")]
    nonuniform_k: bool,
}

#[derive(Args, Debug)]
struct RootLocusArgs {
    /// Network document supplying rho, k, tau and omega0.
    input: Option<PathBuf>,
    #[arg(long, required_unless_present = "input")]
    rho: Option<f64>,
    #[arg(long, required_unless_present = "input")]
    k: Option<f64>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long, default_value_t = 100.0 * std::f64::consts::PI)]
    omega0: f64,
    #[arg(long, default_value_t = 0.0)]
    mu_min: f64,
    #[arg(long, default_value_t = 400.0)]
    mu_max: f64,
    #[arg(long, default_value_t = 200)]
    count: usize,
}

/// Error wrapper carrying the exit code.
struct Failure {
    code: u8,
    error: anyhow::Error,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = if e.is_input_error() { EXIT_INPUT } else { EXIT_NUMERIC };
        Failure { code, error: e.into() }
    }
}

fn input_failure(error: anyhow::Error) -> Failure {
    Failure { code: EXIT_INPUT, error }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}

fn run(cli: &Cli) -> Result<u8, Failure> {
    if !(cli.cluster_threshold > 0.0 && cli.cluster_threshold <= 1.0) {
        return Err(input_failure(anyhow!("--cluster-threshold must lie in (0, 1]")));
    }
    if let Some(w) = cli.omega_c {
        if !(w > 0.0) {
            return Err(input_failure(anyhow!("--omega-c must be positive")));
        }
    }
    match &cli.command {
        Command::Analyze { input } => cmd_analyze(cli, input),
        Command::Sweep(args) => cmd_sweep(cli, args),
        Command::Mucr(args) => cmd_mucr(cli, args),
        Command::Oracle(args) => cmd_oracle(cli, args),
        Command::Rootlocus(args) => cmd_rootlocus(cli, args),
    }
}

fn read_input(path: &Path) -> Result<(String, String), Failure> {
    let bytes = fs::read(path)
        .with_context(|| format!("reading {}", path.display()))
        .map_err(input_failure)?;
    let hash = hex::encode(Sha256::digest(&bytes));
    let text = String::from_utf8(bytes)
        .with_context(|| format!("{} is not UTF-8", path.display()))
        .map_err(input_failure)?;
    Ok((text, hash))
}

fn apply_overrides(cli: &Cli, model: Network) -> Network {
    match cli.omega_c {
        Some(w) => model.with_omega_c(w),
        None => model,
    }
}

/// Parses and fully validates a document.
fn load(cli: &Cli, path: &Path) -> Result<(Network, String), Failure> {
    let (text, hash) = read_input(path)?;
    let model = apply_overrides(cli, parse_unchecked::<f64>(&text)?).validated()?;
    Ok((model, hash))
}

fn emit(cli: &Cli, text: &str) -> Result<(), Failure> {
    match &cli.out {
        Some(path) => fs::write(path, text)
            .with_context(|| format!("writing {}", path.display()))
            .map_err(|e| Failure { code: EXIT_NUMERIC, error: e }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| Failure { code: EXIT_NUMERIC, error: e.into() })
        }
    }
}

/// Pretty JSON with keys sorted at every level.
fn canonical_json<T: Serialize>(value: &T) -> String {
    let v = serde_json::to_value(value).expect("report serializes");
    let mut s = serde_json::to_string_pretty(&v).expect("value serializes");
    s.push('\n');
    s
}

fn provenance(hash: Option<String>) -> Provenance {
    Provenance {
        input_sha256: hash,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
    }
}

fn cmd_analyze(cli: &Cli, input: &Path) -> Result<u8, Failure> {
    let (model, hash) = load(cli, input)?;
    let mut report = analyze(&model, cli.cluster_threshold)?;
    report.provenance = provenance(Some(hash));
    if let Some(w) = &report.oracle.warning {
        eprintln!("WARNING: {w}");
    }
    let text = if cli.pretty { report.to_text() } else { canonical_json(&report) };
    emit(cli, &text)?;
    Ok(match report.verdict {
        Verdict::Stable => EXIT_STABLE,
        Verdict::Unstable => EXIT_UNSTABLE,
    })
}

fn cmd_sweep(cli: &Cli, args: &SweepArgs) -> Result<u8, Failure> {
    let param: SweepParameter = args.param.parse()?;
    let (model, _) = load(cli, &args.input)?;
    let result = sweep(&model, &param, (args.from, args.to), args.count)?;
    if let Some(path) = &args.csv {
        let file = fs::File::create(path)
            .with_context(|| format!("creating {}", path.display()))
            .map_err(|e| Failure { code: EXIT_NUMERIC, error: e })?;
        result
            .write_csv(std::io::BufWriter::new(file))
            .map_err(|e| Failure { code: EXIT_NUMERIC, error: e.into() })?;
    }
    let text = if cli.pretty {
        let mut s = format!("{} sweep, {} points, mu_cr = {:.4}\n", result.parameter, result.points.len(), result.mu_cr);
        if result.stability_crossings.is_empty() {
            s += "no stability crossing\n";
        }
        for c in &result.mode_crossings {
            s += &format!(
                "mu #{} crosses mu_cr at {:.4} {} ({} -> {})\n",
                c.rank,
                c.value,
                result.unit,
                if c.above_before { "above" } else { "below" },
                if c.above_after { "above" } else { "below" }
            );
        }
        s
    } else {
        canonical_json(&result)
    };
    emit(cli, &text)?;
    Ok(EXIT_STABLE)
}

fn cmd_mucr(cli: &Cli, args: &MucrArgs) -> Result<u8, Failure> {
    let tau = args
        .tau
        .unwrap_or_else(|| 1.0 / cli.omega_c.unwrap_or(mgcluster::netmodel::DEFAULT_OMEGA_C));
    let surface = mucr_surface(
        (args.rho_min, args.rho_max),
        (args.k_min, args.k_max),
        args.n_rho,
        args.n_k,
        tau,
        args.omega0,
    )?;
    let mut buf = Vec::new();
    surface
        .write_csv(&mut buf)
        .map_err(|e| Failure { code: EXIT_NUMERIC, error: e.into() })?;
    emit(cli, &String::from_utf8(buf).expect("CSV is UTF-8"))?;
    eprintln!("{}", surface.summary_line());
    Ok(EXIT_STABLE)
}

fn parse_random_spec(spec: &str) -> Result<usize, Failure> {
    let m = spec
        .strip_prefix("m=")
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|&m| m >= 2)
        .ok_or_else(|| input_failure(anyhow!("--random expects m=<inverters>, at least 2, got {spec}")))?;
    Ok(m)
}

fn cmd_oracle(cli: &Cli, args: &OracleArgs) -> Result<u8, Failure> {
    let (model, hash) = match (&args.input, &args.random) {
        (Some(path), None) => {
            let (text, hash) = read_input(path)?;
            (apply_overrides(cli, parse_unchecked::<f64>(&text)?), Some(hash))
        }
        (None, Some(spec)) => {
            let m = parse_random_spec(spec)?;
            let opts = RandomOptions { nonuniform_k: args.nonuniform_k, ..Default::default() };
            let net = random_network(&mut seeded_rng(cli.seed), m, &opts);
            (apply_overrides(cli, net), None)
        }
        _ => return Err(input_failure(anyhow!("oracle needs an input document or --random m=<n>"))),
    };
    // Non-uniform rho or k turns the check into a notice rather than an error.
    let blocking: Vec<_> = validate(&model)
        .into_iter()
        .filter(|v| !matches!(v.code, ViolationCode::NonuniformK | ViolationCode::NonuniformRho))
        .collect();
    if !blocking.is_empty() {
        return Err(Error::Invalid(blocking).into());
    }

    let (_, spectrum) = network_spectrum(&model)?;
    let cp = CharPoly::from_network(&model);
    let report = equivalence_check(&model, &spectrum, &cp)?;

    #[derive(Serialize)]
    struct OracleOutput<'a> {
        report: &'a mgcluster::EquivalenceReport,
        provenance: Provenance,
        seed: Option<u64>,
    }
    let text = if cli.pretty {
        let mut s = String::new();
        if let Some(n) = &report.notice {
            s += &format!("{n}\n");
        }
        for p in &report.pairs {
            s += &format!(
                "mu = {:>12.5}  quintic {:>+14.6} {:>+14.6}i   A {:>+14.6} {:>+14.6}i   |d| = {:.3e}\n",
                p.mu, p.predicted.re, p.predicted.im, p.actual.re, p.actual.im, p.distance
            );
        }
        if let Some(d) = report.max_distance {
            s += &format!("max distance {:.3e} (tolerance {:.3e})\n", d, report.tolerance);
        }
        if let Some(c) = report.max_cosine_distance {
            s += &format!("max eigenvector cosine distance {:.3e} over {} vectors\n", c, report.vectors_checked);
        }
        s += &format!("{}\n", report.status.as_str());
        s
    } else {
        canonical_json(&OracleOutput {
            report: &report,
            provenance: provenance(hash),
            seed: args.random.as_ref().map(|_| cli.seed),
        })
    };
    emit(cli, &text)?;
    Ok(match report.status {
        CheckStatus::Fail => EXIT_NUMERIC,
        CheckStatus::Pass | CheckStatus::Skipped => EXIT_STABLE,
    })
}

fn cmd_rootlocus(cli: &Cli, args: &RootLocusArgs) -> Result<u8, Failure> {
    let cp = match &args.input {
        Some(path) => CharPoly::from_network(&load(cli, path)?.0),
        None => {
            let rho = args.rho.expect("clap enforces --rho");
            let k = args.k.expect("clap enforces --k");
            let tau = args
                .tau
                .unwrap_or_else(|| 1.0 / cli.omega_c.unwrap_or(mgcluster::netmodel::DEFAULT_OMEGA_C));
            if !(rho >= 0.0 && k > 0.0 && tau > 0.0 && args.omega0 > 0.0) {
                return Err(input_failure(anyhow!("rho >= 0, k > 0, tau > 0 and omega0 > 0 are required")));
            }
            CharPoly::new(rho, k, tau, args.omega0)
        }
    };
    let locus = cp.root_locus(args.mu_min, args.mu_max, args.count)?;
    let mut buf = Vec::new();
    locus
        .write_csv(&mut buf)
        .map_err(|e| Failure { code: EXIT_NUMERIC, error: e.into() })?;
    emit(cli, &String::from_utf8(buf).expect("CSV is UTF-8"))?;
    if !locus.monotone {
        eprintln!("note: dominant real part is not monotone over the requested range");
    }
    Ok(EXIT_STABLE)
}
