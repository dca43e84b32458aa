//! Command-line front end. Exit codes: 0 ok or private, 2 precondition
//! violated, 3 I/O, 4 not private, 5 not converged.

use std::fmt;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::augment::{build_alg1, build_alg2, plain, solve_p1d, AugmentError, AugmentedSystem, SplitChoice};
use crate::catalog::{self, CatalogOptions, WeightRegime};
use crate::exactla::{format_rational, int, parse_lenient, Rational};
use crate::netgraph::{random_reversible, to_matrix, GraphError, WeightedDigraph};
use crate::privacy::{audit, ObserverMode, Verdict};
use crate::simulate::{max_abs_diff, run_agents, run_matrix, SimulationTrace, MAX_EXPORT_ROWS};

pub const EXIT_OK: u8 = 0;
pub const EXIT_PRECONDITION: u8 = 2;
pub const EXIT_IO: u8 = 3;
pub const EXIT_NOT_PRIVATE: u8 = 4;
pub const EXIT_NOT_CONVERGED: u8 = 5;

/// Decimals in rational inputs are rounded to this denominator bound.
pub const MAX_INPUT_DENOMINATOR: u64 = 1_000_000;

#[derive(Debug, Parser)]
#[command(name = "privcon", version, about = "Privacy-preserving average consensus toolkit")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build an augmented system from an agent network.
    Augment(AugmentArgs),
    /// Check which hidden quantities an observer can reconstruct.
    Audit(AuditArgs),
    /// Run the consensus dynamics of a system.
    Simulate(SimulateArgs),
    /// Enumerate admissible gadget topologies.
    Catalog(CatalogArgs),
    /// Time the 5N construction over growing random networks.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Algorithm {
    /// No gadget; the raw network wrapped as a system.
    Plain,
    /// Two random-weight states per agent.
    Alg1,
    /// Three states per agent, row-stochastic.
    Alg2,
    /// Four states per agent on a reversible network, with the encoded initial state.
    P1d,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long, value_enum)]
    pub alg: Algorithm,
    /// Graph file: JSON `{nodes, edges}` or `src dst weight` lines.
    pub input: PathBuf,
    /// Initial values, comma separated (`1/2,1/3,0.2`).
    #[arg(long)]
    pub x0: Option<String>,
    /// Per-agent split, agents separated by `;`, parts by `,`; or `default`.
    #[arg(long, default_value = "default")]
    pub split: String,
    /// Seed for random gadget weights.
    #[arg(long, env = "PRIVCON_SEED")]
    pub seed: Option<u64>,
    /// Row-normalize the random-weight construction.
    #[arg(long)]
    pub stochastic: bool,
    /// Output path; stdout when absent.
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Minimal,
    ProofStrength,
}

impl From<ModeArg> for ObserverMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Minimal => ObserverMode::Minimal,
            ModeArg::ProofStrength => ObserverMode::ProofStrength,
        }
    }
}

#[derive(Debug, Args)]
pub struct AuditArgs {
    pub system: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub observer: usize,
    /// Extra agents pooling their outputs with the observer.
    #[arg(long, value_delimiter = ',')]
    pub coalition: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ModeArg::ProofStrength)]
    pub mode: ModeArg,
    /// Audit every agent in turn as the observer.
    #[arg(long)]
    pub all_observers: bool,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    Matrix,
    Agents,
    Both,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    pub system: PathBuf,
    #[arg(long, default_value_t = 1e-9)]
    pub tol: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_rounds: usize,
    /// CSV trace output.
    #[arg(long)]
    pub trace: Option<PathBuf>,
    /// JSON trace output.
    #[arg(long)]
    pub trace_json: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = SimMode::Matrix)]
    pub mode: SimMode,
    /// Export every round instead of striding to at most 10^4 rows.
    #[arg(long)]
    pub full: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CatalogKind {
    /// Three private states, directed.
    Three,
    /// Four private states, bidirected.
    Four,
    Both,
}

#[derive(Debug, Args)]
pub struct CatalogArgs {
    #[arg(long, value_enum, default_value_t = CatalogKind::Both)]
    pub kind: CatalogKind,
    #[arg(long, default_value_t = catalog::DEFAULT_TRIALS)]
    pub trials: usize,
    #[arg(long, env = "PRIVCON_SEED")]
    pub seed: Option<u64>,
    #[arg(long, short)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "16,32,64,128,256,512")]
    pub sizes: Vec<usize>,
    #[arg(long, env = "PRIVCON_SEED", default_value_t = 1)]
    pub seed: u64,
    /// Timed repetitions per size; the median is reported.
    #[arg(long, default_value_t = 3)]
    pub reps: usize,
}

/// A failed command, carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn precondition(message: impl fmt::Display) -> Self {
        Self { code: EXIT_PRECONDITION, message: message.to_string() }
    }

    pub fn io(message: impl fmt::Display) -> Self {
        Self { code: EXIT_IO, message: message.to_string() }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl From<AugmentError> for CliError {
    fn from(e: AugmentError) -> Self {
        Self::precondition(e)
    }
}

type CliResult = Result<u8, CliError>;

/// Runs a parsed command; `Ok` carries exit codes 0, 4 or 5.
pub fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Augment(a) => cmd_augment(&a),
        Command::Audit(a) => cmd_audit(&a),
        Command::Simulate(a) => cmd_simulate(&a),
        Command::Catalog(a) => cmd_catalog(&a),
        Command::Bench(a) => cmd_bench(&a),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::io(format!("{}: {e}", p.display()))),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(CliError::io(e)),
            _ => Ok(()),
        },
    }
}

fn load_graph(path: &Path) -> Result<WeightedDigraph, CliError> {
    WeightedDigraph::parse_any(&read(path)?).map_err(|e| match e {
        GraphError::Parse { .. } | GraphError::Json(_) => CliError::io(format!("{}: {e}", path.display())),
        other => CliError::precondition(other),
    })
}

fn load_system(path: &Path) -> Result<AugmentedSystem, CliError> {
    AugmentedSystem::from_json(&read(path)?).map_err(|e| CliError::io(format!("{}: {e}", path.display())))
}

/// Parses comma-separated rationals, noting any decimals that were rounded.
pub fn parse_values(s: &str) -> Result<(Vec<Rational>, Vec<String>), CliError> {
    let mut values = Vec::new();
    let mut notes = Vec::new();
    for (k, tok) in s.split(',').map(str::trim).enumerate() {
        let p = parse_lenient(tok, MAX_INPUT_DENOMINATOR).map_err(|e| CliError::precondition(format!("value {k}: {e}")))?;
        if p.rounded {
            notes.push(format!("value {k} ({tok}) rationalized to {}", format_rational(&p.value)));
        }
        values.push(p.value);
    }
    Ok((values, notes))
}

fn parse_split(s: &str) -> Result<Option<SplitChoice>, CliError> {
    if s.trim() == "default" {
        return Ok(None);
    }
    let parts = s
        .split(';')
        .map(|agent| parse_values(agent).map(|(v, _)| v))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Some(SplitChoice::new(parts)))
}

pub fn cmd_augment(args: &AugmentArgs) -> CliResult {
    let g = load_graph(&args.input)?;
    let (x0, notes) = match &args.x0 {
        Some(s) => {
            let (v, n) = parse_values(s)?;
            (Some(v), n)
        }
        None => (None, Vec::new()),
    };
    for n in &notes {
        eprintln!("note: {n}");
    }
    let split = parse_split(&args.split)?;
    let need_x0 = || x0.as_deref().ok_or_else(|| CliError::precondition("--x0 is required for this algorithm"));
    let system = match args.alg {
        Algorithm::Plain => plain(&g, x0.as_deref())?,
        Algorithm::Alg1 => {
            let seed = args.seed.ok_or_else(|| CliError::precondition("--seed or PRIVCON_SEED is required for alg1"))?;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            build_alg1(&g, x0.as_deref(), &mut rng, args.stochastic)?
        }
        Algorithm::Alg2 => build_alg2(&g, need_x0()?, split.as_ref())?,
        Algorithm::P1d => solve_p1d(&to_matrix(&g), need_x0()?, split.as_ref())?,
    };
    emit(args.out.as_deref(), &system.to_json())?;
    Ok(EXIT_OK)
}

pub fn cmd_audit(args: &AuditArgs) -> CliResult {
    let system = load_system(&args.system)?;
    let observers: Vec<usize> = if args.all_observers { (0..system.n_original).collect() } else { vec![args.observer] };
    let mut reports = Vec::new();
    for &o in &observers {
        let r = audit(&system, o, &args.coalition, args.mode.into()).map_err(CliError::precondition)?;
        eprintln!("{}", r.summary());
        reports.push(r);
    }
    let json = if reports.len() == 1 {
        reports[0].to_json()
    } else {
        serde_json::to_string_pretty(&reports).expect("reports serialize")
    };
    emit(args.out.as_deref(), &json)?;
    let private = reports.iter().all(|r| r.verdict == Verdict::Private);
    Ok(if private { EXIT_OK } else { EXIT_NOT_PRIVATE })
}

fn export(trace: &SimulationTrace, args: &SimulateArgs) -> Result<(), CliError> {
    let stride = if args.full { 1 } else { trace.default_stride(MAX_EXPORT_ROWS) };
    if let Some(p) = &args.trace {
        emit(Some(p), &trace.to_csv(stride))?;
    }
    if let Some(p) = &args.trace_json {
        emit(Some(p), &trace.to_json(stride))?;
    }
    Ok(())
}

/// One-line outcome of a run, as printed by `simulate`.
pub fn summary_line(trace: &SimulationTrace, tol: f64) -> String {
    let mut s = match trace.consensus_value {
        Some(v) => format!("converged: consensus {v:.9} after {} rounds, spread {:.3e}", trace.rounds, trace.final_spread),
        None => format!("not converged after {} rounds, spread {:.3e}", trace.rounds, trace.final_spread),
    };
    if trace.period_two_suspected(tol) {
        s.push_str("; period-2 oscillation suspected");
    }
    s
}

pub fn cmd_simulate(args: &SimulateArgs) -> CliResult {
    let system = load_system(&args.system)?;
    let x0 = system.x_tilde0_f64().ok_or_else(|| CliError::precondition("system has no initial state"))?;
    let matrix = || run_matrix(&system.ap, &x0, args.tol, args.max_rounds).map_err(CliError::precondition);
    let agents = || run_agents(&system, args.tol, args.max_rounds).map_err(CliError::precondition);
    let trace = match args.mode {
        SimMode::Matrix => matrix()?,
        SimMode::Agents => agents()?,
        SimMode::Both => {
            let (m, a) = (matrix()?, agents()?);
            let dev = m.states.iter().zip(&a.states).map(|(x, y)| max_abs_diff(x, y)).fold(0.0, f64::max);
            println!("max cross-mode deviation {dev:.3e}");
            m
        }
    };
    export(&trace, args)?;
    println!("{}", summary_line(&trace, args.tol));
    Ok(if trace.converged { EXIT_OK } else { EXIT_NOT_CONVERGED })
}

pub fn cmd_catalog(args: &CatalogArgs) -> CliResult {
    let seed = args.seed.unwrap_or(catalog::DEFAULT_SEED);
    let three = CatalogOptions { trials: args.trials, seed, regime: WeightRegime::Random };
    let four = CatalogOptions { trials: args.trials, seed, regime: WeightRegime::UniformWalk };
    let mut entries = Vec::new();
    if matches!(args.kind, CatalogKind::Three | CatalogKind::Both) {
        entries.extend(catalog::dedup_by_shape(catalog::enumerate_fixed(4, false, three)));
    }
    if matches!(args.kind, CatalogKind::Four | CatalogKind::Both) {
        entries.extend(catalog::dedup_by_shape(catalog::enumerate_fixed(5, true, four)));
    }
    emit(args.out.as_deref(), &catalog::catalog_json(&entries))?;
    Ok(EXIT_OK)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    /// Least-squares slope of `ln t` against `ln N`; absent for fewer than two sizes.
    pub slope: Option<f64>,
}

/// Times `solve_p1d` on a random reversible network per size (median of `reps`).
pub fn bench_p1d(sizes: &[usize], seed: u64, reps: usize) -> Result<BenchReport, CliError> {
    if let Some(&n) = sizes.iter().find(|&&n| n < 3) {
        return Err(CliError::precondition(AugmentError::FewerThanThreeAgents(n)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::new();
    for &n in sizes {
        let a = random_reversible(n, n, &mut rng);
        let x0: Vec<Rational> = (1..=n as i64).map(int).collect();
        let mut times: Vec<f64> = (0..reps.max(1))
            .map(|_| {
                let t = Instant::now();
                solve_p1d(&a, &x0, None).expect("random reversible input is valid");
                t.elapsed().as_secs_f64()
            })
            .collect();
        times.sort_by(f64::total_cmp);
        rows.push(BenchRow { n, seconds: times[times.len() / 2] });
    }
    let slope = fit_slope(&rows);
    Ok(BenchReport { rows, slope })
}

fn fit_slope(rows: &[BenchRow]) -> Option<f64> {
    if rows.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = rows.iter().map(|r| ((r.n as f64).ln(), r.seconds.max(1e-9).ln())).collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult {
    let report = bench_p1d(&args.sizes, args.seed, args.reps)?;
    println!("{:>6}  {:>12}", "N", "seconds");
    for r in &report.rows {
        println!("{:>6}  {:>12.6}", r.n, r.seconds);
    }
    match report.slope {
        Some(s) => println!("log-log slope {s:.3}"),
        None => println!("log-log slope n/a (single size)"),
    }
    Ok(EXIT_OK)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exactla::ratio;

    #[test]
    fn values_keep_fractions_and_flag_rounding() {
        let (v, notes) = parse_values("1/2, 1/3,0.2").unwrap();
        assert_eq!(v, vec![ratio(1, 2), ratio(1, 3), ratio(1, 5)]);
        assert!(notes.is_empty());
        let (v, notes) = parse_values("0.33333333333").unwrap();
        assert_eq!(v, vec![ratio(1, 3)]);
        assert_eq!(notes.len(), 1);
        assert_eq!(parse_values("x").unwrap_err().code, EXIT_PRECONDITION);
    }

    #[test]
    fn split_syntax() {
        assert_eq!(parse_split("default").unwrap(), None);
        let s = parse_split("1,2;3,4").unwrap().unwrap();
        assert_eq!(s.parts, vec![vec![int(1), int(2)], vec![int(3), int(4)]]);
    }

    #[test]
    fn slope_of_exact_square_law() {
        let rows: Vec<BenchRow> = [8usize, 16, 32].iter().map(|&n| BenchRow { n, seconds: (n * n) as f64 }).collect();
        assert!((fit_slope(&rows).unwrap() - 2.0).abs() < 1e-12);
        assert_eq!(fit_slope(&rows[..1]), None);
    }

    #[test]
    fn bench_rejects_two_agents() {
        assert_eq!(bench_p1d(&[2, 8], 1, 1).unwrap_err().code, EXIT_PRECONDITION);
    }

    #[test]
    fn parser_accepts_documented_flags() {
        let cli = Cli::try_parse_from(["privcon", "audit", "s.json", "--observer", "1", "--coalition", "2,3", "--mode", "minimal"]).unwrap();
        match cli.command {
            Command::Audit(a) => {
                assert_eq!(a.coalition, vec![2, 3]);
                assert_eq!(a.mode, ModeArg::Minimal);
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
