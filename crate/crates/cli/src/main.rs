//! `qkrate`: statistics generation, tomography, key rates and thresholds.
//!
//! Exit codes: 0 on success (negative rates included), 2 for malformed or
//! out-of-range input, 3 when the data are incomplete or mathematically
//! infeasible.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use qkrate::attack::{simulate_stats, simulate_stats_sampled, simulate_two_way_stats};
use qkrate::protocols::{
    b92_keyrate_gram, b92_keyrate_with, b92_symmetric, optpi_keyrate, optpi_keyrate_gram, optpi_optimize,
    optpi_optimize_gram, sqkd_keyrate_with, sqkd_symmetric, threshold, Pairing, Protocol, SqkdSolver, THRESHOLD_TOL,
};
use qkrate::tables::{table1_csv, table3_csv, table5_csv};
use qkrate::textio::{
    format_value, parse_gram, parse_stats, write_gram, write_reports, write_stats, write_table, write_two_way_gram,
    write_two_way_stats, GramFile, StatsFile,
};
use qkrate::tomography::{estimate_one_way, estimate_two_way};
use qkrate::{
    AttackStats, BasisConfig, GramEstimates, KeyRateReport, OneWayAttack, OptPiParams, PsiMode, Scenario, TwoWayAttack,
    TwoWayGram,
};

#[derive(Debug, thiserror::Error)]
enum CliError {
    #[error(transparent)]
    Core(#[from] qkrate::Error),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(e) if !e.is_input_error() => 3,
            _ => 2,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(name = "qkrate", version, about = "Key-rate lower bounds from mismatched-basis statistics")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate channel statistics.
    Stats(StatsArgs),
    /// Invert a statistics file into Gram estimates.
    Estimate { file: PathBuf },
    /// Compute one key rate as a CSV row.
    Keyrate(KeyrateArgs),
    /// Find the noise level where the symmetric-channel rate crosses zero.
    Threshold(ThresholdArgs),
    /// Regenerate a reproduction table as CSV.
    Table {
        #[arg(value_parser = ["1", "3", "5"])]
        id: String,
    },
    /// Search the four encoder/decoder parameters for the best rate.
    Optimize(OptimizeArgs),
}

#[derive(Args)]
struct StatsArgs {
    /// identity | depolarizing:Q | random:SEED:D | unitary:SEED:D:EPS |
    /// two-way-identity | two-way-depolarizing:Q | two-way-random:SEED:D
    #[arg(long)]
    channel: String,
    #[arg(long, default_value_t = 4)]
    psi: u8,
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    alpha: f64,
    #[arg(long, default_value_t = std::f64::consts::FRAC_1_SQRT_2)]
    beta: f64,
    /// Sampled rounds; exact probabilities when absent.
    #[arg(long)]
    samples: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolArg {
    B92,
    Bb84,
    Optpi,
    Sqkd,
}

#[derive(Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Independent,
    Correlated,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Independent => Scenario::Independent,
            ScenarioArg::Correlated => Scenario::Correlated,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SolverArg {
    Dual,
    Grid,
}

#[derive(Args)]
struct Input {
    /// Statistics file.
    #[arg(long, conflicts_with_all = ["gram", "symmetric"])]
    stats: Option<PathBuf>,
    /// Gram file written by `estimate`.
    #[arg(long, conflicts_with = "symmetric")]
    gram: Option<PathBuf>,
    /// Depolarizing channel with error rate Q.
    #[arg(long)]
    symmetric: Option<f64>,
    /// Preparation set; 3 on a Psi4 statistics file ignores the |b> data.
    #[arg(long)]
    psi: Option<u8>,
}

#[derive(Args)]
struct KeyrateArgs {
    #[arg(value_enum)]
    protocol: ProtocolArg,
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = 0.0)]
    alpha_key: f64,
    /// alpha_s,gamma_s,alpha_r,gamma_r
    #[arg(long, value_delimiter = ',', num_args = 4, allow_negative_numbers = true)]
    params: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value = "correlated")]
    scenario: ScenarioArg,
    /// Report the best pairing of the four vectors.
    #[arg(long)]
    best_pairing: bool,
    #[arg(long, value_enum, default_value = "dual")]
    solver: SolverArg,
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(value_enum)]
    protocol: ProtocolArg,
    #[arg(long, default_value_t = 0.0)]
    alpha_key: f64,
    #[arg(long, default_value_t = 4)]
    psi: u8,
    #[arg(long, value_enum, default_value = "correlated")]
    scenario: ScenarioArg,
    #[arg(long, value_delimiter = ',', num_args = 4, allow_negative_numbers = true)]
    params: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    #[arg(long, default_value_t = 0.3)]
    hi: f64,
    #[arg(long, default_value_t = THRESHOLD_TOL)]
    tol: f64,
}

#[derive(Args)]
struct OptimizeArgs {
    #[command(flatten)]
    input: Input,
    #[arg(long, default_value_t = 4000)]
    budget: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}

fn psi_of(n: u8) -> CliResult<PsiMode> {
    Ok(PsiMode::from_number(n)?)
}

fn parse_num<T: std::str::FromStr>(what: &str, s: &str) -> CliResult<T> {
    s.parse().map_err(|_| CliError::Usage(format!("bad {what} '{s}' in channel spec")))
}

enum Channel {
    One(OneWayAttack),
    Two(TwoWayAttack),
}

fn channel(spec: &str) -> CliResult<Channel> {
    let parts: Vec<&str> = spec.split(':').collect();
    let ch = match parts.as_slice() {
        ["identity"] => Channel::One(OneWayAttack::identity(2)?),
        ["depolarizing", q] => Channel::One(OneWayAttack::depolarizing(parse_num("Q", q)?)?),
        ["random", s, d] => Channel::One(OneWayAttack::random(parse_num("seed", s)?, parse_num("dimension", d)?)?),
        ["unitary", s, d, e] => Channel::One(OneWayAttack::random_unitary_channel(
            parse_num("seed", s)?,
            parse_num("dimension", d)?,
            parse_num("strength", e)?,
        )?),
        ["two-way-identity"] => Channel::Two(TwoWayAttack::identity(2)?),
        ["two-way-depolarizing", q] => Channel::Two(TwoWayAttack::depolarizing_independent(parse_num("Q", q)?)?),
        ["two-way-random", s, d] => {
            Channel::Two(TwoWayAttack::random(parse_num("seed", s)?, parse_num("dimension", d)?)?)
        }
        _ => return Err(CliError::Usage(format!("unknown channel spec '{spec}'"))),
    };
    Ok(ch)
}

fn cmd_stats(a: &StatsArgs) -> CliResult<String> {
    let psi = psi_of(a.psi)?;
    let cfg = BasisConfig::new(a.alpha, a.beta)?;
    match channel(&a.channel)? {
        Channel::One(att) => {
            let s = match a.samples {
                Some(m) => simulate_stats_sampled(&att, &cfg, psi, m, a.seed)?,
                None => simulate_stats(&att, &cfg, psi),
            };
            Ok(write_stats(&s))
        }
        Channel::Two(att) => {
            if a.samples.is_some() {
                return Err(CliError::Usage("sampling is only supported for one-way channels".into()));
            }
            if psi != PsiMode::Psi3 {
                return Err(CliError::Usage("two-way channels use --psi 3".into()));
            }
            Ok(write_two_way_stats(&simulate_two_way_stats(&att, &cfg)?))
        }
    }
}

fn cmd_estimate(file: &Path) -> CliResult<String> {
    match parse_stats(&read(file)?)? {
        StatsFile::OneWay(s) => Ok(write_gram(&estimate_one_way(&s)?)),
        StatsFile::TwoWay(t) => Ok(write_two_way_gram(&estimate_two_way(&t)?)),
    }
}

/// Loaded key-rate input.
enum Loaded {
    OneWay { gram: GramEstimates, stats: Option<AttackStats> },
    TwoWay(TwoWayGram),
    Symmetric(f64),
}

fn load(input: &Input) -> CliResult<Loaded> {
    let want = input.psi.map(psi_of).transpose()?;
    if let Some(path) = &input.stats {
        return match parse_stats(&read(path)?)? {
            StatsFile::OneWay(s) => {
                let s = match want {
                    Some(psi) => s.restricted(psi)?,
                    None => s,
                };
                Ok(Loaded::OneWay { gram: estimate_one_way(&s)?, stats: Some(s) })
            }
            StatsFile::TwoWay(t) => Ok(Loaded::TwoWay(estimate_two_way(&t)?)),
        };
    }
    if let Some(path) = &input.gram {
        return match parse_gram(&read(path)?)? {
            GramFile::OneWay(g) => {
                if let Some(psi) = want {
                    if psi != g.psi {
                        return Err(CliError::Usage(format!(
                            "Gram file is Psi{}; re-estimate from statistics to change psi",
                            g.psi.number()
                        )));
                    }
                }
                Ok(Loaded::OneWay { gram: g, stats: None })
            }
            GramFile::TwoWay(g) => Ok(Loaded::TwoWay(g)),
        };
    }
    match input.symmetric {
        Some(q) => Ok(Loaded::Symmetric(q)),
        None => Err(CliError::Usage("one of --stats, --gram or --symmetric is required".into())),
    }
}

fn params_of(p: &Option<Vec<f64>>) -> CliResult<OptPiParams> {
    match p.as_deref() {
        None => Ok(OptPiParams::bb84()),
        Some([a, b, c, d]) => Ok(OptPiParams::new(*a, *b, *c, *d)?),
        Some(_) => Err(CliError::Usage("--params takes four values".into())),
    }
}

fn one_way_only() -> CliError {
    CliError::Usage("this protocol needs one-way statistics".into())
}

fn cmd_keyrate(a: &KeyrateArgs) -> CliResult<String> {
    let input = load(&a.input)?;
    let psi_sym = a.input.psi.map(psi_of).transpose()?.unwrap_or(PsiMode::Psi4);
    let pairing = if a.best_pairing { Pairing::Best } else { Pairing::Standard };
    let report = match a.protocol {
        ProtocolArg::B92 | ProtocolArg::Bb84 => {
            let alpha = if matches!(a.protocol, ProtocolArg::Bb84) { 0.0 } else { a.alpha_key };
            match input {
                Loaded::OneWay { gram, stats: Some(s) } => b92_keyrate_with(&gram, &s, alpha, pairing)?,
                Loaded::OneWay { gram, stats: None } => b92_keyrate_gram(&gram, alpha, pairing)?,
                Loaded::Symmetric(q) if !a.best_pairing => b92_symmetric(q, alpha, psi_sym)?,
                Loaded::Symmetric(q) => {
                    check_q(q)?;
                    b92_keyrate_gram(&GramEstimates::depolarizing(psi_sym, q)?, alpha, pairing)?
                }
                Loaded::TwoWay(_) => return Err(one_way_only()),
            }
        }
        ProtocolArg::Optpi => {
            let p = params_of(&a.params)?;
            match input {
                Loaded::OneWay { gram, stats: Some(s) } => optpi_keyrate(&gram, &s, p)?,
                Loaded::OneWay { gram, stats: None } => optpi_keyrate_gram(&gram, p)?,
                Loaded::Symmetric(q) => {
                    check_q(q)?;
                    optpi_keyrate_gram(&GramEstimates::depolarizing(psi_sym, q)?, p)?
                }
                Loaded::TwoWay(_) => return Err(one_way_only()),
            }
        }
        ProtocolArg::Sqkd => {
            let solver = match a.solver {
                SolverArg::Dual => SqkdSolver::Dual,
                SolverArg::Grid => SqkdSolver::GridSimplex,
            };
            match input {
                Loaded::TwoWay(g) => sqkd_keyrate_with(&g, solver)?,
                Loaded::Symmetric(q) if matches!(solver, SqkdSolver::Dual) => sqkd_symmetric(q, a.scenario.into())?,
                Loaded::Symmetric(q) => {
                    check_q(q)?;
                    let s: Scenario = a.scenario.into();
                    sqkd_keyrate_with(&TwoWayGram::symmetric(q, s.qa(q))?, solver)?
                }
                Loaded::OneWay { .. } => {
                    return Err(CliError::Usage("sqkd needs two-way statistics or --symmetric".into()))
                }
            }
        }
    };
    Ok(write_reports(&[report])?)
}

fn check_q(q: f64) -> CliResult<()> {
    if !q.is_finite() || !(0.0..0.5).contains(&q) {
        return Err(qkrate::Error::InvalidParameter(format!("Q = {q} outside [0, 1/2)")).into());
    }
    Ok(())
}

fn cmd_threshold(a: &ThresholdArgs) -> CliResult<String> {
    let psi = psi_of(a.psi)?;
    let scenario: Scenario = a.scenario.into();
    let (protocol, alpha, q) = match a.protocol {
        ProtocolArg::B92 | ProtocolArg::Bb84 => {
            let alpha = if matches!(a.protocol, ProtocolArg::Bb84) { 0.0 } else { a.alpha_key };
            let q = threshold(|q| b92_symmetric(q, alpha, psi), a.lo, a.hi, a.tol)?;
            (if alpha == 0.0 { Protocol::Bb84 } else { Protocol::B92 }, Some(alpha), q)
        }
        ProtocolArg::Optpi => {
            let p = params_of(&a.params)?;
            let rate = |q: f64| -> qkrate::Result<KeyRateReport> {
                optpi_keyrate_gram(&GramEstimates::depolarizing(psi, q)?, p)
            };
            (Protocol::OptPi, None, threshold(rate, a.lo, a.hi, a.tol)?)
        }
        ProtocolArg::Sqkd => (Protocol::Sqkd, None, threshold(|q| sqkd_symmetric(q, scenario), a.lo, a.hi, a.tol)?),
    };
    let psi_col = if matches!(protocol, Protocol::Sqkd) { PsiMode::Psi3 } else { psi };
    let scen = if matches!(protocol, Protocol::Sqkd) { scenario.as_str().to_string() } else { String::new() };
    let row = vec![
        protocol.as_str().to_string(),
        psi_col.number().to_string(),
        alpha.map(format_value).unwrap_or_default(),
        scen,
        format_value(q),
    ];
    Ok(write_table(&["protocol", "psi", "alpha_key", "scenario", "threshold"], &[row])?)
}

fn cmd_optimize(a: &OptimizeArgs) -> CliResult<String> {
    let psi_sym = a.input.psi.map(psi_of).transpose()?.unwrap_or(PsiMode::Psi4);
    let (_, report) = match load(&a.input)? {
        Loaded::OneWay { gram, stats: Some(s) } => optpi_optimize(&gram, &s, a.budget, a.seed)?,
        Loaded::OneWay { gram, stats: None } => optpi_optimize_gram(&gram, a.budget, a.seed)?,
        Loaded::Symmetric(q) => {
            check_q(q)?;
            optpi_optimize_gram(&GramEstimates::depolarizing(psi_sym, q)?, a.budget, a.seed)?
        }
        Loaded::TwoWay(_) => return Err(one_way_only()),
    };
    Ok(write_reports(&[report])?)
}

fn run(cli: Cli) -> CliResult<String> {
    match cli.cmd {
        Cmd::Stats(a) => cmd_stats(&a),
        Cmd::Estimate { file } => cmd_estimate(&file),
        Cmd::Keyrate(a) => cmd_keyrate(&a),
        Cmd::Threshold(a) => cmd_threshold(&a),
        Cmd::Table { id } => Ok(match id.as_str() {
            "1" => table1_csv()?,
            "3" => table3_csv()?,
            _ => table5_csv()?,
        }),
        Cmd::Optimize(a) => cmd_optimize(&a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(out) => {
            print!("{out}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("qkrate: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
