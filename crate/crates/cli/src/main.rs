//! `secsim`: region checks, constraint projections and protocol simulations
//! driven by JSON scenario files.
//!
//! Exit codes: 0 success, 1 assertion failed (`--assert-member`, fixture
//! expectation), 2 budget or row cap exceeded, 3 invalid input.

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use secsim::protocol::{
    build, measure, run_exact, run_monte_carlo, sweep, to_csv, SimulationReport, SweepBackend,
};
use secsim::region::Aggregation;
use secsim::scenario::{fixture, fixtures, Scenario, ScenarioError};

#[derive(Debug, Parser)]
#[command(name = "secsim", version, about = "Secure channel simulation and key agreement toolkit")]
struct Cli {
    /// Constant tolerance for region and projection checks.
    #[arg(long, global = true)]
    tol: Option<f64>,
    /// Cell budget for exact enumeration.
    #[arg(long, global = true)]
    budget_cells: Option<usize>,
    /// Binning seed (overrides the scenario's first seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SimMode {
    Exact,
    Mc,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum AggArg {
    FreeDisposal,
    Equality,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Rate-region membership verdict.
    Region {
        #[arg(long)]
        scenario: PathBuf,
        /// Exit with status 1 when the rates are not in the region.
        #[arg(long)]
        assert_member: bool,
    },
    /// Raw binning constraints, their projection and the equivalence verdict.
    Fm {
        #[arg(long)]
        scenario: PathBuf,
        /// Variables to keep (default: the theorem's total rates).
        #[arg(long, value_delimiter = ',')]
        keep: Option<Vec<String>>,
        #[arg(long, value_enum, default_value = "free-disposal")]
        aggregation: AggArg,
        #[arg(long, default_value_t = secsim::fm::DEFAULT_ROW_CAP)]
        row_cap: usize,
    },
    /// One protocol run at a single blocklength.
    Simulate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        n: Option<usize>,
        #[command(flatten)]
        sim: SimArgs,
    },
    /// One row per (n, seed).
    Sweep {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long, value_delimiter = ',')]
        n_list: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        #[command(flatten)]
        sim: SimArgs,
        /// Fall back to Monte Carlo for rows over the exact budget.
        #[arg(long)]
        mc_fallback: bool,
        /// Print monotone-trend verdicts to stderr.
        #[arg(long)]
        summary: bool,
    },
    /// The bundled scenario corpus.
    Fixtures {
        #[command(subcommand)]
        cmd: FixturesCmd,
    },
}

#[derive(Debug, Args)]
struct SimArgs {
    #[arg(long, value_enum, default_value = "exact")]
    mode: SimMode,
    #[arg(long)]
    trials: Option<u64>,
    /// Monte-Carlo stream; different streams give independent estimates
    /// under the same binnings.
    #[arg(long, default_value_t = 0)]
    stream: u64,
}

#[derive(Debug, Subcommand)]
enum FixturesCmd {
    /// Names and descriptions.
    List,
    /// Evaluate fixtures against their expectations (all by default).
    Run { names: Vec<String> },
    /// Print one fixture's scenario JSON.
    Show { name: String },
}

enum CliError {
    Assertion(String),
    Budget(String),
    Input(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            Self::Assertion(_) => 1,
            Self::Budget(_) => 2,
            Self::Input(_) => 3,
        }
    }

    fn message(&self) -> &str {
        match self {
            Self::Assertion(m) | Self::Budget(m) | Self::Input(m) => m,
        }
    }
}

impl From<ScenarioError> for CliError {
    fn from(e: ScenarioError) -> Self {
        if e.is_budget() {
            Self::Budget(e.to_string())
        } else {
            Self::Input(e.to_string())
        }
    }
}

impl From<secsim::protocol::ProtocolError> for CliError {
    fn from(e: secsim::protocol::ProtocolError) -> Self {
        ScenarioError::from(e).into()
    }
}

type Result<T> = std::result::Result<T, CliError>;

fn emit(cli: &Cli, text: &str) -> Result<()> {
    match &cli.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn json<T: serde::Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("reports always serialize");
    s.push('\n');
    s
}

fn reports_out(cli: &Cli, reports: &[SimulationReport]) -> Result<()> {
    match cli.format.unwrap_or(Format::Csv) {
        Format::Csv => emit(cli, &to_csv(reports)),
        Format::Json => emit(cli, &json(&reports)),
    }
}

fn load(path: &PathBuf) -> Result<Scenario> {
    Ok(Scenario::from_path(path)?)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 3 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

fn run(cli: &Cli) -> Result<()> {
    match &cli.cmd {
        Command::Region { scenario, assert_member } => {
            let sc = load(scenario)?;
            let out = sc.region(cli.tol)?;
            emit(cli, &json(&out))?;
            if *assert_member && !out.member() {
                return Err(CliError::Assertion("not a member of the region".into()));
            }
            Ok(())
        }
        Command::Fm {
            scenario,
            keep,
            aggregation,
            row_cap,
        } => {
            let sc = load(scenario)?;
            let agg = match aggregation {
                AggArg::FreeDisposal => Aggregation::FreeDisposal,
                AggArg::Equality => Aggregation::Equality,
            };
            let out = sc.fm(keep.as_deref(), agg, *row_cap, cli.tol)?;
            emit(cli, &json(&out))
        }
        Command::Simulate { scenario, n, sim } => {
            let sc = load(scenario)?;
            let opts = sc.sim_options();
            let n = n.unwrap_or(opts.n[0]);
            let seed = cli.seed.unwrap_or(opts.seeds[0]);
            let a = sc.aux_scheme()?;
            let rates = sc.protocol_rates()?;
            let inst = build(&a, n, &rates, seed)?;
            let report = match sim.mode {
                SimMode::Exact => {
                    let induced = run_exact(&inst, cli.budget_cells.unwrap_or(opts.budget_atoms))?;
                    measure(&inst, &induced)?
                }
                SimMode::Mc => run_monte_carlo(&inst, sim.trials.unwrap_or(opts.trials), sim.stream)?,
            };
            reports_out(cli, &[report])
        }
        Command::Sweep {
            scenario,
            n_list,
            seeds,
            sim,
            mc_fallback,
            summary,
        } => {
            let sc = load(scenario)?;
            let opts = sc.sim_options();
            let n_list = n_list.clone().unwrap_or_else(|| opts.n.clone());
            let seeds = match (seeds, cli.seed) {
                (Some(s), _) => s.clone(),
                (None, Some(s)) => vec![s],
                (None, None) => opts.seeds.clone(),
            };
            if n_list.is_empty() || seeds.is_empty() {
                return Err(CliError::Input("empty n-list or seed list".into()));
            }
            let trials = sim.trials.unwrap_or(opts.trials);
            let backend = match sim.mode {
                SimMode::Exact => SweepBackend::Exact {
                    budget: cli.budget_cells.unwrap_or(opts.budget_atoms),
                    mc_fallback: mc_fallback.then_some(trials),
                },
                SimMode::Mc => SweepBackend::MonteCarlo {
                    trials,
                    stream: sim.stream,
                },
            };
            let a = sc.aux_scheme()?;
            let rates = sc.protocol_rates()?;
            let reports = sweep(&a, &rates, &n_list, &seeds, backend)?;
            if *summary {
                eprint!("{}", trend_summary(&reports));
            }
            reports_out(cli, &reports)
        }
        Command::Fixtures { cmd } => fixtures_cmd(cli, cmd),
    }
}

/// Seed-averaged metric per blocklength, and whether it strictly decreases.
fn trend_summary(reports: &[SimulationReport]) -> String {
    let r = reports.iter().map(|x| x.sw_error.len()).max().unwrap_or(0);
    let mut metrics: Vec<(String, Box<dyn Fn(&SimulationReport) -> f64>)> = vec![
        ("tv_error".into(), Box::new(|x: &SimulationReport| x.tv_error)),
        ("leakage_per_symbol".into(), Box::new(|x: &SimulationReport| x.leakage_per_symbol)),
    ];
    for i in 0..r {
        metrics.push((
            format!("sw_error_{}", i + 1),
            Box::new(move |x: &SimulationReport| x.sw_error.get(i).copied().unwrap_or(f64::NAN)),
        ));
    }
    let mut out = String::new();
    for (name, f) in metrics {
        let mut by_n: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
        for x in reports {
            let e = by_n.entry(x.n).or_insert((0.0, 0));
            e.0 += f(x);
            e.1 += 1;
        }
        let means: Vec<(usize, f64)> = by_n.into_iter().map(|(n, (s, k))| (n, s / k as f64)).collect();
        let decreasing = means.windows(2).all(|w| w[1].1 < w[0].1);
        let values: Vec<String> = means.iter().map(|(n, v)| format!("n={n}:{v:.4e}")).collect();
        out.push_str(&format!(
            "{name}: {} [{}]\n",
            if decreasing { "strictly decreasing" } else { "not strictly decreasing" },
            values.join(" ")
        ));
    }
    out
}

fn fixtures_cmd(cli: &Cli, cmd: &FixturesCmd) -> Result<()> {
    match cmd {
        FixturesCmd::List => {
            let mut out = String::new();
            for (name, _) in fixtures() {
                let sc = fixture(name).expect("listed fixture");
                out.push_str(&format!("{name}\t{}\n", sc.description));
            }
            emit(cli, &out)
        }
        FixturesCmd::Show { name } => {
            let (_, text) = fixtures()
                .into_iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| CliError::Input(format!("no fixture named `{name}`")))?;
            emit(cli, text)
        }
        FixturesCmd::Run { names } => {
            let all: Vec<&str> = fixtures().into_iter().map(|(n, _)| n).collect();
            let selected: Vec<&str> = if names.is_empty() {
                all.clone()
            } else {
                for n in names {
                    if !all.contains(&n.as_str()) {
                        return Err(CliError::Input(format!("no fixture named `{n}`")));
                    }
                }
                names.iter().map(String::as_str).collect()
            };
            let mut out = String::new();
            let mut failed = Vec::new();
            for name in selected {
                let sc = fixture(name).expect("listed fixture");
                let outcome = sc.region(cli.tol)?;
                let expect = sc.expect.clone().unwrap_or_default();
                let member_ok = expect.member.map_or(true, |m| m == outcome.member());
                let value_ok = match (expect.value, outcome.value()) {
                    (Some(want), Some(got)) => (got - want).abs() <= expect.value_tol.unwrap_or(sc.tol),
                    (Some(_), None) => false,
                    (None, _) => true,
                };
                let ok = member_ok && value_ok;
                if !ok {
                    failed.push(name);
                }
                out.push_str(&format!(
                    "{} {name}: member={} value={}\n",
                    if ok { "ok  " } else { "FAIL" },
                    outcome.member(),
                    outcome.value().map_or("-".into(), |v| format!("{v:.6}")),
                ));
            }
            emit(cli, &out)?;
            if failed.is_empty() {
                Ok(())
            } else {
                Err(CliError::Assertion(format!("fixtures failed: {}", failed.join(", "))))
            }
        }
    }
}
