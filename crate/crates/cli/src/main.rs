//! `catmouse` command-line runner.
//!
//! Exit status: 0 when every criterion passes, 1 when one fails, 2 for bad
//! input or configuration, 3 when a run is refused by the step budget.

use catmouse::chain::{load_matrix, FiniteChain, Kernel, LineWalk, MmInf, PlaneWalk, ReflectedWalk};
use catmouse::error::{Error, Result};
use catmouse::experiment::{self, parse_config_text, Entry, ExperimentReport};
use catmouse::kernel::{cm_step, write_trajectory, CatMouseState, CsvState};
use catmouse::mminf::CtTrajectory;
use catmouse::stationary::{nu_exact, tetali_bound_check, verify_invariance};
use catmouse::stats::oracle::{bilateral_exponential, brownian_at_local_time, half_normal};
use catmouse::stats::{SeededStream, StreamFactory};
use clap::{Parser, Subcommand, ValueEnum};
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Stream tags outside the experiment range.
const SIMULATE_TAG: u32 = 100;
const ORACLE_TAG: u32 = 101;

#[derive(Parser)]
#[command(name = "catmouse", version, about = "Cat-and-mouse Markov chains: exact analysis, simulation and experiments")]
struct Cli {
    /// Root seed for every random stream.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for replica-parallel work.
    #[arg(long, global = true)]
    workers: Option<usize>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Flat `key = value` settings file for `experiment`.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap on declared virtual chain steps.
    #[arg(long, global = true)]
    budget: Option<f64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exact invariant measure of the pair chain for a finite kernel.
    Analyze {
        /// Whitespace-separated matrix file, optionally led by its size.
        #[arg(long)]
        matrix: PathBuf,
        /// One state label per line.
        #[arg(long)]
        labels: Option<PathBuf>,
        /// Accept p(x,x) > 0.
        #[arg(long)]
        allow_loops: bool,
    },
    /// Write a cat-and-mouse trajectory.
    Simulate {
        #[arg(long, value_enum)]
        chain: ChainKind,
        /// Matrix file for `--chain matrix`.
        #[arg(long)]
        matrix: Option<PathBuf>,
        /// Up probability of the reflected walk.
        #[arg(long, default_value_t = 0.3)]
        p: f64,
        /// Arrival rate of the M/M/infinity queue.
        #[arg(long, default_value_t = 1.0)]
        rho: f64,
        /// Steps (jumps for `mminf`).
        #[arg(long, default_value_t = 1000)]
        steps: usize,
        #[arg(long, default_value_t = 0)]
        cat: i64,
        #[arg(long, default_value_t = 0)]
        mouse: i64,
    },
    /// Run one named experiment; settings follow as `--key value`.
    Experiment {
        name: String,
        #[arg(trailing_var_arg = true, allow_hyphen_values = true)]
        settings: Vec<String>,
    },
    /// Draw samples from a limit law.
    Oracle {
        #[arg(value_enum)]
        name: OracleKind,
        #[arg(long, default_value_t = 100_000)]
        samples: usize,
        #[arg(long, default_value_t = 1.0)]
        t: f64,
        /// Rate of the bilateral exponential.
        #[arg(long, default_value_t = 1.0)]
        alpha0: f64,
    },
    /// Run every experiment with its defaults.
    Suite,
    /// List experiments and their settings.
    List,
}

#[derive(Clone, Copy, ValueEnum)]
enum ChainKind {
    Matrix,
    Reflected,
    Line,
    Plane,
    Mminf,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleKind {
    HalfNormal,
    BrownianLocalTime,
    BilateralExponential,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn out_dir(cli: &Cli) -> PathBuf {
    cli.out.clone().unwrap_or_else(|| PathBuf::from("out"))
}

fn seed(cli: &Cli) -> u64 {
    cli.seed.unwrap_or(experiment::config::DEFAULT_SEED)
}

fn dispatch(cli: &Cli) -> Result<u8> {
    match &cli.command {
        Command::Analyze { matrix, labels, allow_loops } => analyze(cli, matrix, labels.as_deref(), *allow_loops),
        Command::Simulate { chain, matrix, p, rho, steps, cat, mouse } => simulate(cli, *chain, matrix.as_deref(), *p, *rho, *steps, (*cat, *mouse)),
        Command::Experiment { name, settings } => run_experiment(cli, name, settings),
        Command::Oracle { name, samples, t, alpha0 } => oracle(cli, *name, *samples, *t, *alpha0),
        Command::Suite => suite(cli),
        Command::List => {
            for e in experiment::registry() {
                println!("{:<20} {}", e.name, e.about);
                for p in e.params {
                    println!("    --{:<22} {:<14} {}", p.key.replace('_', "-"), p.default, p.help);
                }
            }
            Ok(0)
        }
    }
}

fn analyze(cli: &Cli, matrix: &Path, labels: Option<&Path>, allow_loops: bool) -> Result<u8> {
    let chain = load_matrix(matrix, labels, allow_loops)?;
    let t = nu_exact(&chain)?;
    let inv = verify_invariance(&t, &chain);
    let tet = tetali_bound_check(&chain)?;
    let dir = out_dir(cli);
    fs::create_dir_all(&dir)?;
    let n = chain.n_states();
    let header = format!("# matrix={}\n", matrix.display());

    let mut nu = BufWriter::new(fs::File::create(dir.join("nu.csv"))?);
    write!(nu, "{header}x,y,value\n")?;
    for x in 0..n {
        for y in 0..n {
            writeln!(nu, "{},{},{}", chain.label(x), chain.label(y), t.nu(x, y))?;
        }
    }
    nu.flush()?;
    let mut nu2 = BufWriter::new(fs::File::create(dir.join("nu2.csv"))?);
    write!(nu2, "{header}state,pi,nu2\n")?;
    for x in 0..n {
        writeln!(nu2, "{},{},{}", chain.label(x), t.pi[x], t.nu2[x])?;
    }
    nu2.flush()?;

    let summary = serde_json::json!({
        "matrix": matrix.display().to_string(),
        "states": n,
        "alpha": t.alpha,
        "diagonal_mass": 1.0 / t.alpha,
        "reversible": tet.reversible,
        "alpha_bound": tet.bound,
        "balance_residual": inv.max_residual,
        "labels": (0..n).map(|x| chain.label(x)).collect::<Vec<_>>(),
        "pi": t.pi,
        "nu2": t.nu2,
    });
    let text = serde_json::to_string_pretty(&summary).map_err(|e| Error::Io(e.to_string()))?;
    fs::write(dir.join("summary.json"), format!("{text}\n"))?;
    println!("states={n} alpha={} reversible={} bound={} residual={:.3e}", t.alpha, tet.reversible, tet.bound, inv.max_residual);
    Ok(0)
}

fn path<K: Kernel>(k: &K, start: (K::State, K::State), steps: usize, rng: &mut SeededStream) -> Vec<CatMouseState<K::State>> {
    let mut s = CatMouseState::new(start.0, start.1);
    let mut out = Vec::with_capacity(steps + 1);
    out.push(s);
    for _ in 0..steps {
        s = cm_step(s, k, rng);
        out.push(s);
    }
    out
}

fn nonnegative(v: i64, what: &str) -> Result<u64> {
    u64::try_from(v).map_err(|_| Error::Config(format!("--{what} must be nonnegative for this chain, got {v}")))
}

fn write_states<S: CsvState>(cli: &Cli, states: &[CatMouseState<S>], with_clock: bool, header: &str) -> Result<u8> {
    let dir = out_dir(cli);
    fs::create_dir_all(&dir)?;
    let p = dir.join("trajectory.csv");
    let mut f = BufWriter::new(fs::File::create(&p)?);
    f.write_all(header.as_bytes())?;
    write_trajectory(&mut f, states, with_clock)?;
    f.flush()?;
    println!("wrote {} states to {}", states.len(), p.display());
    Ok(0)
}

fn simulate(cli: &Cli, kind: ChainKind, matrix: Option<&Path>, p: f64, rho: f64, steps: usize, start: (i64, i64)) -> Result<u8> {
    let seed = seed(cli);
    let mut rng = StreamFactory::new(seed, SIMULATE_TAG).stream(0);
    let header = format!("# seed={seed}\n# steps={steps}\n# cat={}\n# mouse={}\n", start.0, start.1);
    match kind {
        ChainKind::Matrix => {
            let m = matrix.ok_or_else(|| Error::Config("--chain matrix needs --matrix".into()))?;
            let chain: FiniteChain = load_matrix(m, None, true)?;
            let (c, m2) = (nonnegative(start.0, "cat")? as usize, nonnegative(start.1, "mouse")? as usize);
            if c >= chain.n_states() || m2 >= chain.n_states() {
                return Err(Error::Config(format!("start states must be below {}", chain.n_states())));
            }
            write_states(cli, &path(&chain, (c, m2), steps, &mut rng), false, &format!("# matrix={}\n{header}", m.display()))
        }
        ChainKind::Reflected => {
            let w = ReflectedWalk::new(p)?;
            let s = (nonnegative(start.0, "cat")?, nonnegative(start.1, "mouse")?);
            write_states(cli, &path(&w, s, steps, &mut rng), false, &format!("# chain=reflected\n# p={p}\n{header}"))
        }
        ChainKind::Line => write_states(cli, &path(&LineWalk, start, steps, &mut rng), false, &format!("# chain=line\n{header}")),
        ChainKind::Plane => {
            let s = ((start.0, 0), (start.1, 0));
            write_states(cli, &path(&PlaneWalk, s, steps, &mut rng), false, &format!("# chain=plane\n{header}"))
        }
        ChainKind::Mminf => {
            let q = MmInf::new(rho)?;
            let s = (nonnegative(start.0, "cat")?, nonnegative(start.1, "mouse")?);
            let tr = CtTrajectory::simulate(&q, s, steps, &mut rng);
            let states: Vec<CatMouseState<u64>> = tr
                .segments
                .iter()
                .map(|g| CatMouseState { cat: g.cat, mouse: g.mouse, clock: g.start })
                .collect();
            write_states(cli, &states, true, &format!("# chain=mminf\n# rho={rho}\n{header}"))
        }
    }
}

/// `--key value` or `--key=value` pairs.
fn setting_pairs(args: &[String]) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let key = a
            .strip_prefix("--")
            .ok_or_else(|| Error::Config(format!("expected `--key value`, found {a:?}")))?;
        match key.split_once('=') {
            Some((k, v)) => out.push((k.to_string(), v.to_string())),
            None => {
                let v = it.next().ok_or_else(|| Error::Config(format!("--{key} needs a value")))?;
                out.push((key.to_string(), v.clone()));
            }
        }
    }
    Ok(out)
}

fn global_flags(cli: &Cli) -> Vec<(String, String)> {
    let mut f = Vec::new();
    if let Some(s) = cli.seed {
        f.push(("seed".into(), s.to_string()));
    }
    if let Some(w) = cli.workers {
        f.push(("workers".into(), w.to_string()));
    }
    if let Some(b) = cli.budget {
        f.push(("budget".into(), b.to_string()));
    }
    if let Some(o) = &cli.out {
        f.push(("out".into(), o.display().to_string()));
    }
    f
}

fn read_config(path: &Path) -> Result<Vec<Entry>> {
    let text = fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    parse_config_text(&text).map_err(|e| match e {
        Error::Parse { line, msg } => Error::Parse { line, msg: format!("{}: {msg}", path.display()) },
        other => other,
    })
}

fn report(r: &ExperimentReport, dir: &Path) -> Result<()> {
    r.write(dir)?;
    for c in &r.checks {
        println!("{:<10} {}", c.role.as_str(), c.verdict);
    }
    Ok(())
}

fn run_experiment(cli: &Cli, name: &str, settings: &[String]) -> Result<u8> {
    let file = match &cli.config {
        Some(p) => read_config(p)?,
        None => Vec::new(),
    };
    let mut flags = global_flags(cli);
    flags.extend(setting_pairs(settings)?);
    let cfg = experiment::configure(name, &file, &flags).map_err(|e| match (e, &cli.config) {
        (Error::Parse { line, msg }, Some(p)) => Error::Parse { line, msg: format!("{}: {msg}", p.display()) },
        (e, _) => e,
    })?;
    let dir = cfg.out.clone();
    let r = experiment::run(cfg)?;
    report(&r, &dir)?;
    println!("{}: {}", name, if r.passed() { "PASS" } else { "FAIL" });
    Ok(if r.passed() { 0 } else { 1 })
}

fn suite(cli: &Cli) -> Result<u8> {
    if cli.config.is_some() {
        return Err(Error::Config("suite runs defaults only; --config applies to `experiment`".into()));
    }
    let root = out_dir(cli);
    let mut flags = global_flags(cli);
    flags.retain(|(k, _)| k != "out");
    let mut all = true;
    for name in experiment::suite() {
        let cfg = experiment::configure(name, &[], &flags)?;
        let r = experiment::run(cfg)?;
        r.write(&root.join(name))?;
        let failed: Vec<&str> = r.criteria().filter(|v| !v.pass).map(|v| v.name.as_str()).collect();
        println!("{} {name} ({:.1} s){}", if failed.is_empty() { "PASS" } else { "FAIL" }, r.wall_seconds, if failed.is_empty() { String::new() } else { format!(": {}", failed.join("; ")) });
        all &= failed.is_empty();
    }
    Ok(if all { 0 } else { 1 })
}

fn oracle(cli: &Cli, kind: OracleKind, samples: usize, t: f64, alpha0: f64) -> Result<u8> {
    if !(t >= 0.0 && alpha0 > 0.0) {
        return Err(Error::Config(format!("need t >= 0 and alpha0 > 0, got t={t} alpha0={alpha0}")));
    }
    let seed = seed(cli);
    let mut rng = StreamFactory::new(seed, ORACLE_TAG).stream(kind as u64);
    let (name, draw): (&str, Box<dyn Fn(&mut SeededStream) -> f64>) = match kind {
        OracleKind::HalfNormal => ("half-normal", Box::new(move |r| half_normal(t, r))),
        OracleKind::BrownianLocalTime => ("brownian-local-time", Box::new(move |r| brownian_at_local_time(t, r))),
        OracleKind::BilateralExponential => ("bilateral-exponential", Box::new(move |r| bilateral_exponential(alpha0, t, r))),
    };
    let dir = out_dir(cli);
    fs::create_dir_all(&dir)?;
    let p = dir.join(format!("{name}.csv"));
    let mut f = BufWriter::new(fs::File::create(&p)?);
    writeln!(f, "# oracle={name}\n# seed={seed}\n# samples={samples}\n# t={t}\n# alpha0={alpha0}\nsample,value")?;
    for i in 0..samples {
        writeln!(f, "{i},{}", draw(&mut rng))?;
    }
    f.flush()?;
    println!("wrote {samples} samples to {}", p.display());
    Ok(0)
}
