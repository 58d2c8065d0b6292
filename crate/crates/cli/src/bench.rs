//! Batch benchmark runs driven by a TOML suite file.
//!
//! A suite lists instance families; every field may be a scalar or a list
//! and lists are expanded as a cartesian product:
//!
//! ```toml
//! [[mc]]
//! n = [3, 4]
//! b = 2
//! variant = "until"        # or "at:11", "first-next:11"
//!
//! [[grid]]
//! n = 3
//! p = [0.5, 1.0]
//! seed = [0, 1, 2]
//! start = [1, 1]           # optional, defaults to the corners
//! end = [3, 3]
//! ```

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Deserialize;

use stcsp::benchgen::{gen_grid, gen_mc, Cell, GridParams, McParams, Variant};
use stcsp::{compile, parse, SolveError, SolveOptions};

/// First line of every report; bump when the columns change.
pub const SCHEMA: &str = "# stcsp-bench v1";

pub const COLUMNS: [&str; 16] = [
    "id",
    "family",
    "n",
    "b",
    "p",
    "seed",
    "variant",
    "outcome",
    "states_raw",
    "states",
    "transitions",
    "accepting",
    "shortest_prefix",
    "nodes",
    "dominance_hits",
    "seconds",
];

#[derive(Args)]
pub struct BenchArgs {
    suite: PathBuf,
    /// Per-instance time limit in seconds.
    #[arg(long, default_value_t = 600.0)]
    timeout: f64,
    /// Instances solved in parallel.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Node budget per instance; running out counts as an error.
    #[arg(long, value_name = "N")]
    node_budget: Option<u64>,
    /// Write the CSV here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    fn values(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

fn until() -> OneOrMany<String> {
    OneOrMany::One("until".into())
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct McFamily {
    n: OneOrMany<u32>,
    b: OneOrMany<u32>,
    #[serde(default = "until")]
    variant: OneOrMany<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct GridFamily {
    n: OneOrMany<u32>,
    p: OneOrMany<f64>,
    seed: OneOrMany<u64>,
    start: Option<[u32; 2]>,
    end: Option<[u32; 2]>,
    #[serde(default = "until")]
    variant: OneOrMany<String>,
}

#[derive(Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct Suite {
    #[serde(default)]
    mc: Vec<McFamily>,
    #[serde(default)]
    grid: Vec<GridFamily>,
}

#[derive(Clone, Debug)]
enum Instance {
    Mc(McParams),
    Grid(GridParams),
}

fn parse_variant(s: &str) -> Result<Variant> {
    let time = |t: &str| -> Result<u32> {
        let t: u32 = t.parse().with_context(|| format!("bad time in variant `{s}`"))?;
        if t == 0 {
            bail!("variant `{s}`: time must be at least 1");
        }
        Ok(t)
    };
    match s.split_once(':') {
        None if s == "until" => Ok(Variant::Until),
        Some(("at", t)) => Ok(Variant::At(time(t)?)),
        Some(("first-next", t)) => Ok(Variant::FirstNext(time(t)?)),
        _ => bail!("unknown variant `{s}`"),
    }
}

fn variant_name(v: Variant) -> String {
    match v {
        Variant::Until => "until".into(),
        Variant::At(t) => format!("at:{t}"),
        Variant::FirstNext(t) => format!("first-next:{t}"),
    }
}

fn expand(suite: &Suite) -> Result<Vec<Instance>> {
    let mut out = Vec::new();
    for f in &suite.mc {
        for n in f.n.values() {
            for b in f.b.values() {
                for v in f.variant.values() {
                    if n < 1 || b < 2 {
                        bail!("mc instance needs n >= 1 and b >= 2, got n={n} b={b}");
                    }
                    out.push(Instance::Mc(McParams { n, b, variant: parse_variant(&v)? }));
                }
            }
        }
    }
    for f in &suite.grid {
        for n in f.n.values() {
            for p in f.p.values() {
                for seed in f.seed.values() {
                    for v in f.variant.values() {
                        let start: Cell = f.start.map_or((1, 1), |[r, c]| (r, c));
                        let end: Cell = f.end.map_or((n, n), |[r, c]| (r, c));
                        let inside = |(r, c): Cell| (1..=n).contains(&r) && (1..=n).contains(&c);
                        if n < 1 || !(0.0..=1.0).contains(&p) || !inside(start) || !inside(end) {
                            bail!("invalid grid instance n={n} p={p} start={start:?} end={end:?}");
                        }
                        let variant = parse_variant(&v)?;
                        out.push(Instance::Grid(GridParams { n, p, seed, start, end, variant }));
                    }
                }
            }
        }
    }
    Ok(out)
}

/// One CSV row. Metrics of timed-out instances are `--`; those that do not
/// apply are empty.
struct Row {
    fields: Vec<String>,
    errored: bool,
}

fn run_instance(inst: &Instance, timeout: Duration, node_budget: Option<u64>) -> Row {
    let (id, family, n, b, p, seed, variant, src) = match inst {
        Instance::Mc(m) => (
            format!("mc-n{}-b{}-{}", m.n, m.b, variant_name(m.variant)),
            "mc",
            m.n.to_string(),
            m.b.to_string(),
            String::new(),
            String::new(),
            m.variant,
            gen_mc(m),
        ),
        Instance::Grid(g) => (
            format!(
                "grid-n{}-p{}-s{}-{}.{}-{}.{}-{}",
                g.n,
                g.p,
                g.seed,
                g.start.0,
                g.start.1,
                g.end.0,
                g.end.1,
                variant_name(g.variant)
            ),
            "grid",
            g.n.to_string(),
            String::new(),
            g.p.to_string(),
            g.seed.to_string(),
            g.variant,
            gen_grid(g),
        ),
    };
    let mut fields = vec![id, family.into(), n, b, p, seed, variant_name(variant)];
    let started = Instant::now();
    let opts = SolveOptions {
        node_budget,
        deadline: Some(started + timeout),
        ..Default::default()
    };
    let result = match parse(&src) {
        Ok(p) => compile(&p, &opts).map_err(|e| match e {
            SolveError::Deadline => None,
            e => Some(e.to_string()),
        }),
        Err(d) => Err(Some(format!("generated model does not parse: {}", d[0]))),
    };
    let seconds = started.elapsed().as_secs_f64();
    let errored = match result {
        Ok((raw, pruned, stats)) => {
            let outcome = if pruned.is_empty() { "unsat" } else { "sat" };
            fields.extend([
                outcome.to_string(),
                raw.num_states().to_string(),
                pruned.num_states().to_string(),
                pruned.num_transitions().to_string(),
                pruned.accepting_count().to_string(),
                pruned.discharge_time().map(|d| d.to_string()).unwrap_or_default(),
                stats.nodes_expanded.to_string(),
                stats.dominance_hits.to_string(),
                format!("{seconds:.6}"),
            ]);
            false
        }
        Err(None) => {
            fields.push("timeout".into());
            fields.extend(std::iter::repeat_n("--".to_string(), 8));
            false
        }
        Err(Some(e)) => {
            eprintln!("error: {}: {e}", fields[0]);
            fields.push("error".into());
            fields.extend(std::iter::repeat_n(String::new(), 7));
            fields.push(format!("{seconds:.6}"));
            true
        }
    };
    Row { fields, errored }
}

pub fn run(a: BenchArgs) -> Result<u8> {
    let text = fs::read_to_string(&a.suite).with_context(|| format!("reading {}", a.suite.display()))?;
    let suite: Suite = toml::from_str(&text).with_context(|| format!("parsing {}", a.suite.display()))?;
    let instances = expand(&suite)?;
    if a.timeout.is_nan() || a.timeout <= 0.0 {
        bail!("timeout must be positive");
    }
    let timeout = Duration::from_secs_f64(a.timeout);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(a.jobs.max(1)).build()?;
    let rows: Vec<Row> = pool.install(|| {
        instances
            .par_iter()
            .map(|i| run_instance(i, timeout, a.node_budget))
            .collect()
    });

    let mut buf = Vec::new();
    writeln!(buf, "{SCHEMA}")?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(COLUMNS)?;
        for r in &rows {
            w.write_record(&r.fields)?;
        }
        w.flush()?;
    }
    match &a.output {
        Some(path) => fs::write(path, &buf).with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(&buf)?,
    }
    Ok(if rows.iter().any(|r| r.errored) { 2 } else { 0 })
}
