mod bench;

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use stcsp::benchgen::{gen_grid, gen_mc, Cell, GridParams, McParams, Variant};
use stcsp::oracle::{self, OracleError};
use stcsp::unroll::{fd_solve, increment_until_sat, unroll, Mode, Outcome};
use stcsp::{
    normalize, parse, BuchiAutomaton, ModelSource, SolveError, SolveOptions, StCsp, Strategy,
    StreamPrefix, VarId,
};

/// Solver for constraint satisfaction problems over infinite streams.
#[derive(Parser)]
#[command(name = "stcsp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build the solution automaton of a model.
    Solve(SolveArgs),
    /// Compare the solution automaton against the brute-force oracle.
    Verify(VerifyArgs),
    /// Generate a benchmark model.
    #[command(subcommand)]
    Gen(GenCommand),
    /// Solve bounded unrollings of a model with a finite-domain solver.
    Unroll(UnrollArgs),
    /// Run a benchmark suite and write a CSV report.
    Bench(bench::BenchArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Emit {
    Dot,
    Json,
}

#[derive(Args)]
struct SolveArgs {
    model: PathBuf,
    /// Print the automaton in this format.
    #[arg(long, value_enum)]
    emit: Option<Emit>,
    /// Write the emitted automaton to a file instead of stdout.
    #[arg(short, long, requires = "emit")]
    output: Option<PathBuf>,
    /// Emit the automaton before pruning.
    #[arg(long)]
    raw: bool,
    /// Print every prefix of this length, one per line.
    #[arg(long, value_name = "L")]
    enumerate: Option<usize>,
    /// Variables shown in prefixes and dot labels: `user`, `all` or a
    /// comma-separated list of names.
    #[arg(long, default_value = "user")]
    project: String,
    /// Print solver statistics as JSON on stderr.
    #[arg(long)]
    stats: bool,
    #[arg(long, value_name = "N")]
    node_budget: Option<u64>,
    #[arg(long, value_name = "N")]
    depth_budget: Option<usize>,
    /// Print the normal form before solving.
    #[arg(long)]
    dump_normal: bool,
}

#[derive(Args)]
struct VerifyArgs {
    model: PathBuf,
    /// Prefix length.
    #[arg(long, default_value_t = 4)]
    len: usize,
    /// Oracle search depth; defaults to a bound derived from the automaton.
    #[arg(long)]
    horizon: Option<usize>,
    /// Check this automaton (JSON) instead of solving the model.
    #[arg(long)]
    automaton: Option<PathBuf>,
    /// Largest number of prefixes either side may enumerate.
    #[arg(long, default_value_t = oracle::DEFAULT_CAP)]
    cap: u128,
}

#[derive(Subcommand)]
enum GenCommand {
    /// Missionaries and cannibals.
    Mc(McArgs),
    /// Path planning on a random directed grid.
    Grid(GridArgs),
}

#[derive(Args)]
#[group(multiple = false)]
struct VariantArgs {
    /// Reach the goal eventually (default).
    #[arg(long)]
    until: bool,
    /// Reach the goal at exactly time T, written with `@`.
    #[arg(long, value_name = "T")]
    at: Option<u32>,
    /// As `--at`, written with `first` and `next`.
    #[arg(long, value_name = "T")]
    first_next: Option<u32>,
}

impl VariantArgs {
    fn variant(&self) -> Result<Variant> {
        Ok(match (self.at, self.first_next) {
            (Some(0), _) | (_, Some(0)) => bail!("the goal time must be at least 1"),
            (Some(t), _) => Variant::At(t),
            (_, Some(t)) => Variant::FirstNext(t),
            _ => Variant::Until,
        })
    }
}

#[derive(Args)]
struct McArgs {
    #[arg(long)]
    n: u32,
    #[arg(long)]
    b: u32,
    #[command(flatten)]
    variant: VariantArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct GridArgs {
    #[arg(long)]
    n: u32,
    /// Probability of keeping each directed edge.
    #[arg(long)]
    p: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Start cell `r,c`; defaults to `1,1`.
    #[arg(long, value_parser = parse_cell)]
    start: Option<Cell>,
    /// Goal cell `r,c`; defaults to `n,n`.
    #[arg(long, value_parser = parse_cell)]
    end: Option<Cell>,
    #[command(flatten)]
    variant: VariantArgs,
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum UnrollMode {
    First,
    All,
    Count,
}

#[derive(Args)]
struct UnrollArgs {
    model: PathBuf,
    #[arg(long, required_unless_present = "increment", conflicts_with = "increment")]
    horizon: Option<usize>,
    /// Try horizons 1, 2, ... up to `--tmax` until one is satisfiable.
    #[arg(long, requires = "tmax")]
    increment: bool,
    #[arg(long)]
    tmax: Option<usize>,
    #[arg(long, value_enum, default_value = "first", conflicts_with = "increment")]
    mode: UnrollMode,
    /// Search node budget per horizon.
    #[arg(long, value_name = "N")]
    budget: Option<u64>,
}

fn parse_cell(s: &str) -> Result<Cell, String> {
    let (r, c) = s.split_once(',').ok_or("expected r,c")?;
    let r = r.trim().parse().map_err(|e| format!("{e}"))?;
    let c = c.trim().parse().map_err(|e| format!("{e}"))?;
    Ok((r, c))
}

/// Failure with an exit code; the message has already been printed.
#[derive(Debug)]
struct Exit(u8);

impl std::fmt::Display for Exit {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "exit {}", self.0)
    }
}

impl std::error::Error for Exit {}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Solve(a) => solve(a),
        Command::Verify(a) => verify(a),
        Command::Gen(g) => gen(g).map(|()| 0),
        Command::Unroll(a) => unroll_cmd(a),
        Command::Bench(a) => bench::run(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => match e.downcast_ref::<Exit>() {
            Some(Exit(code)) => ExitCode::from(*code),
            None => {
                eprintln!("error: {e:#}");
                ExitCode::from(2)
            }
        },
    }
}

fn load_model(path: &Path) -> Result<StCsp> {
    let src = ModelSource::from_file(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&src).map_err(|diags| {
        for d in diags {
            eprintln!("{}:{d}", path.display());
        }
        Exit(2).into()
    })
}

fn projection(spec: &str, a: &BuchiAutomaton) -> Result<Vec<VarId>> {
    match spec {
        "user" => Ok(a.user_vars()),
        "all" => Ok((0..a.vars.len() as u32).map(VarId).collect()),
        names => names
            .split(',')
            .map(|name| {
                let name = name.trim();
                a.vars
                    .iter()
                    .position(|d| d.name == name)
                    .map(|i| VarId(i as u32))
                    .with_context(|| format!("unknown variable `{name}`"))
            })
            .collect(),
    }
}

fn write_out(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn solve(a: SolveArgs) -> Result<u8> {
    let p = load_model(&a.model)?;
    let (nf, _) = normalize(&p, Strategy::default());
    if a.dump_normal {
        print!("{}", nf.render());
    }
    let opts = SolveOptions {
        node_budget: a.node_budget,
        depth_budget: a.depth_budget,
        ..Default::default()
    };
    let (raw, stats) = stcsp::solve(&nf, &opts).map_err(|e: SolveError| anyhow::anyhow!(e))?;
    let pruned = raw.prune();
    if a.stats {
        eprintln!("{}", serde_json::to_string(&stats)?);
    }
    let shown = if a.raw { &raw } else { &pruned };
    let project = projection(&a.project, shown)?;
    match a.emit {
        Some(Emit::Dot) => write_out(a.output.as_deref(), &shown.to_dot(Some(&project)))?,
        Some(Emit::Json) => write_out(a.output.as_deref(), &shown.to_json())?,
        None => {}
    }
    if let Some(len) = a.enumerate {
        for prefix in shown.enumerate_prefixes(len, Some(&project), u128::MAX)? {
            println!("{}", prefix.compact());
        }
    }
    let sat = !pruned.is_empty();
    if a.emit.is_none() && a.enumerate.is_none() {
        println!("{}", if sat { "satisfiable" } else { "unsatisfiable" });
        println!("states: {} ({} before pruning)", pruned.num_states(), raw.num_states());
        println!("transitions: {}", pruned.num_transitions());
        println!("accepting states: {}", pruned.accepting_count());
        if let Some(d) = pruned.discharge_time() {
            println!("shortest accepting prefix: {d}");
        }
    }
    Ok(if sat { 0 } else { 1 })
}

fn verify(a: VerifyArgs) -> Result<u8> {
    let p = load_model(&a.model)?;
    let automaton = match &a.automaton {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            // prefixes count only when they extend to an accepting run
            BuchiAutomaton::from_json(&text)?.prune()
        }
        None => stcsp::compile(&p, &SolveOptions::default())?.1,
    };
    let users: Vec<VarId> = (0..p.vars.len() as u32).map(VarId).collect();
    let project = automaton.user_vars();
    if project.len() != users.len() {
        bail!(
            "the automaton has {} user variables, the model {}",
            project.len(),
            users.len()
        );
    }
    let horizon = a.horizon.unwrap_or(a.len + 64 + automaton.num_states());
    let got = match automaton.enumerate_prefixes(a.len, Some(&project), a.cap) {
        Ok(s) => s,
        Err(e) => {
            println!("SKIPPED: {e}");
            return Ok(3);
        }
    };
    let want = match oracle::solution_prefixes(&p, a.len, horizon, Some(&users), a.cap) {
        Ok(s) => s,
        Err(e @ (OracleError::CapExceeded { .. } | OracleError::Inconclusive(_))) => {
            println!("SKIPPED: {e}");
            return Ok(3);
        }
    };
    let extra = got.difference(&want).next();
    let missing = want.difference(&got).next();
    let first = match (extra, missing) {
        (Some(x), Some(m)) => Some(if x < m { (x, true) } else { (m, false) }),
        (Some(x), None) => Some((x, true)),
        (None, Some(m)) => Some((m, false)),
        (None, None) => None,
    };
    match first {
        None => {
            println!("PASS: {} prefixes of length {} agree", want.len(), a.len);
            Ok(0)
        }
        Some((w, true)) => {
            println!("FAIL: {} is a prefix of the automaton but not of any solution", show(w));
            Ok(1)
        }
        Some((w, false)) => {
            println!("FAIL: {} is a prefix of a solution but not of the automaton", show(w));
            Ok(1)
        }
    }
}

fn show(p: &StreamPrefix) -> String {
    let s = p.compact();
    if s.is_empty() {
        "the empty prefix".into()
    } else {
        s
    }
}

fn gen(g: GenCommand) -> Result<()> {
    let (src, output) = match g {
        GenCommand::Mc(a) => {
            if a.n < 1 || a.b < 2 {
                bail!("need n >= 1 and b >= 2");
            }
            let variant = a.variant.variant()?;
            (gen_mc(&McParams { n: a.n, b: a.b, variant }), a.output)
        }
        GenCommand::Grid(a) => {
            if a.n < 1 {
                bail!("need n >= 1");
            }
            if !(0.0..=1.0).contains(&a.p) {
                bail!("p must lie in [0, 1]");
            }
            let start = a.start.unwrap_or((1, 1));
            let end = a.end.unwrap_or((a.n, a.n));
            for (r, c) in [start, end] {
                if !(1..=a.n).contains(&r) || !(1..=a.n).contains(&c) {
                    bail!("cell {r},{c} lies outside the {0}x{0} grid", a.n);
                }
            }
            let variant = a.variant.variant()?;
            let params = GridParams { n: a.n, p: a.p, seed: a.seed, start, end, variant };
            (gen_grid(&params), a.output)
        }
    };
    write_out(output.as_deref(), &src.text)
}

fn unroll_cmd(a: UnrollArgs) -> Result<u8> {
    let p = load_model(&a.model)?;
    let res = match (a.horizon, a.tmax) {
        (Some(0), _) | (_, Some(0)) => bail!("the horizon must be at least 1"),
        (Some(t), _) => {
            let mode = match a.mode {
                UnrollMode::First => Mode::First,
                UnrollMode::All => Mode::All,
                UnrollMode::Count => Mode::Count,
            };
            fd_solve(&unroll(&p, t), mode, a.budget)
        }
        (None, Some(tmax)) => increment_until_sat(&p, tmax, a.budget),
        (None, None) => unreachable!("clap requires a horizon"),
    };
    match &res.outcome {
        Outcome::Sat(first) => {
            println!("sat at horizon {} ({} nodes)", res.horizon, res.nodes);
            match a.mode {
                UnrollMode::First => println!("{}", first.compact()),
                UnrollMode::All => res.solutions.iter().for_each(|s| println!("{}", s.compact())),
                UnrollMode::Count => println!("solutions: {}", res.count),
            }
            Ok(0)
        }
        Outcome::Unsat => {
            println!("unsat up to horizon {} ({} nodes)", res.horizon, res.nodes);
            Ok(1)
        }
        Outcome::BudgetExceeded => {
            eprintln!("error: node budget exceeded at horizon {}", res.horizon);
            Ok(2)
        }
    }
}
