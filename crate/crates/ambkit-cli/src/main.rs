//! `ambkit`: evaluate acts, test ambiguity attitudes, run the theorem
//! battery, solve insurance problems and emit plot data.
//!
//! Exit codes: 0 the property holds, 1 a counterexample was found,
//! 2 usage, parse or domain error.

mod output;
mod suites;

use ambkit::acts::check_symmetry;
use ambkit::attitudes::{
    sweep, test_ambiguity_prudence_unequal, AttitudeVerdict, BackgroundPolicy, StatePolicy, SweepConfig,
};
use ambkit::insurance::{comparative_static_noise, NoiseTable};
use ambkit::io::{parse_act, parse_insurance, parse_model};
use ambkit::models::{argmin_probabilities, DivergenceSpec};
use ambkit::setfn::{neo_additive, NeoAdditiveParams};
use ambkit::{Interval, Order, Preference, PreferenceModel, SimplexPoint, StateSpace};
use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use output::{emit, g12, join, RunManifest, Table};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "ambkit", version, about = "Ambiguity attitudes of finite-state preference models")]
struct Cli {
    /// Tolerance on utility differences in behavioral sweeps.
    #[arg(long, global = true, default_value_t = 1e-8)]
    tol: f64,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Directory for CSV artifacts and the run manifest.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long, global = true, env = "AMBKIT_JOBS", default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Attitude {
    Aversion,
    Prudence,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Backgrounds {
    All,
    Representative,
    Unconstrained,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Figure {
    Neo2,
    Neo3,
    OrderedArgmin,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print U(X) for a model and an act.
    Evaluate { model: PathBuf, act: PathBuf },
    /// Behavioral test of ambiguity aversion or prudence.
    Test {
        model: PathBuf,
        #[arg(long, value_enum)]
        attitude: Attitude,
        #[arg(long, value_enum, default_value = "all")]
        backgrounds: Backgrounds,
        /// Third-order sweep over unequal spacings (reported on its own).
        #[arg(long = "unequal-spacing")]
        unequal: bool,
        /// Map all sweep acts into LO,HI.
        #[arg(long, value_parser = parse_interval)]
        domain: Option<Interval>,
        /// Sample this many ordered state tuples instead of the default policy.
        #[arg(long)]
        tuples: Option<usize>,
    },
    /// Cross-check behavioral verdicts against their analytic characterizations.
    Theorems {
        #[arg(long, value_enum, default_value = "all")]
        suite: suites::Suite,
        /// Random instances per state count.
        #[arg(long, default_value_t = 200)]
        instances: usize,
    },
    /// Data behind the capacity and worst-case-prior figures.
    Plotdata {
        #[arg(long, value_enum)]
        figure: Figure,
        #[arg(long, allow_hyphen_values = true)]
        a: Option<f64>,
        #[arg(long, allow_hyphen_values = true)]
        b: Option<f64>,
        /// State count; 10 for the capacity plots, 9 for ordered-argmin.
        #[arg(long)]
        k: Option<usize>,
    },
    /// Optimal indemnity with and without loss noise.
    Insurance {
        problem: PathBuf,
        /// Comma-separated noise levels; overrides the problem file.
        #[arg(long, value_delimiter = ',')]
        noise_grid: Option<Vec<f64>>,
    },
    /// Sampled permutation-symmetry check.
    Symmetry {
        model: PathBuf,
        #[arg(long, default_value_t = 200)]
        trials: usize,
    },
}

fn parse_interval(s: &str) -> std::result::Result<Interval, String> {
    let (a, b) = s.split_once(',').ok_or("expected LO,HI")?;
    let lo: f64 = a.trim().parse().map_err(|e| format!("{e}"))?;
    let hi: f64 = b.trim().parse().map_err(|e| format!("{e}"))?;
    Interval::new(lo, hi).map_err(|e| e.to_string())
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn load_model(path: &Path) -> Result<PreferenceModel> {
    Ok(parse_model(&read(path)?)?)
}

struct Ctx {
    tol: f64,
    seed: u64,
    jobs: usize,
    out: Option<PathBuf>,
    command: String,
    inputs: Vec<String>,
}

impl Ctx {
    fn finish(&self, tables: &[Table]) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.clone(),
            inputs: self.inputs.clone(),
            seed: self.seed,
            tol: self.tol,
            jobs: self.jobs,
            out: self.out.as_ref().map(|p| p.display().to_string()),
            artifacts: Vec::new(),
            version: env!("CARGO_PKG_VERSION"),
        };
        emit(self.out.as_deref(), tables, manifest)
    }
}

fn verdict_json(v: &AttitudeVerdict) -> serde_json::Value {
    let ce = v.counterexample.as_ref().map(|c| {
        serde_json::json!({
            "states": c.triple.states,
            "levels": c.triple.levels,
            "ubar": c.triple.ubar,
            "background": c.triple.background,
            "act_a": c.act_a,
            "act_b": c.act_b,
            "u_a": c.u_a,
            "u_b": c.u_b,
            "margin": c.margin(),
        })
    });
    serde_json::json!({
        "holds": v.holds,
        "evaluated": v.evaluated,
        "failures": v.failures,
        "min_margin": v.min_margin,
        "regime": format!("{:?}", v.regime),
        "counterexample": ce,
    })
}

fn cmd_test(
    ctx: &Ctx,
    model: &PreferenceModel,
    attitude: Attitude,
    backgrounds: Backgrounds,
    unequal: bool,
    domain: Option<Interval>,
    tuples: Option<usize>,
) -> Result<bool> {
    let cfg = SweepConfig {
        tol: ctx.tol,
        jobs: ctx.jobs,
        domain: domain.or_else(|| {
            let d = model.util_domain();
            (d.lo.is_finite() || d.hi.is_finite()).then_some(d)
        }),
        backgrounds: match backgrounds {
            Backgrounds::All => BackgroundPolicy::AllSplits,
            Backgrounds::Representative => BackgroundPolicy::Representative,
            Backgrounds::Unconstrained => BackgroundPolicy::Unconstrained,
        },
        states: match tuples {
            Some(count) => StatePolicy::Random { count, seed: ctx.seed },
            None => StatePolicy::Auto,
        },
        ..SweepConfig::default()
    };
    let order = match attitude {
        Attitude::Aversion => Order::Second,
        Attitude::Prudence => Order::Third,
    };
    if unequal {
        if order != Order::Third {
            bail!("--unequal applies to prudence only");
        }
        let v = test_ambiguity_prudence_unequal(model, &cfg)?;
        println!("{}", serde_json::to_string_pretty(&verdict_json(&v))?);
        ctx.finish(&[])?;
        return Ok(v.holds);
    }
    let min_k = order.arity();
    if model.k() < min_k {
        bail!("{:?} needs k ≥ {min_k}", attitude);
    }
    let s = sweep(model, order, &cfg)?;
    println!("{}", serde_json::to_string_pretty(&verdict_json(&s.verdict))?);
    let mut t = Table::new("sweep", &["states", "levels", "ubar", "background", "act_a", "act_b", "u_a", "u_b", "margin"]);
    for r in &s.rows {
        t.push(vec![
            r.triple.states.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(";"),
            join(&r.triple.levels),
            g12(r.triple.ubar),
            join(&r.triple.background),
            join(&r.act_a),
            join(&r.act_b),
            g12(r.u_a),
            g12(r.u_b),
            g12(r.margin()),
        ]);
    }
    if ctx.out.is_some() {
        ctx.finish(&[t])?;
    } else {
        ctx.finish(&[])?;
    }
    Ok(s.verdict.holds)
}

fn cmd_plotdata(ctx: &Ctx, figure: Figure, a: Option<f64>, b: Option<f64>, k: Option<usize>) -> Result<()> {
    let k = k.unwrap_or(if matches!(figure, Figure::OrderedArgmin) { 9 } else { 10 });
    let mut t;
    match figure {
        Figure::Neo2 | Figure::Neo3 => {
            let (da, db) = if matches!(figure, Figure::Neo2) { (0.5, 0.5) } else { (0.2, -0.2) };
            let (a, b) = (a.unwrap_or(da), b.unwrap_or(db));
            let nu = neo_additive(&NeoAdditiveParams::uniform(a, b, k))?;
            t = Table::new(if matches!(figure, Figure::Neo2) { "neo2" } else { "neo3" }, &["p", "nu"]);
            for j in 0..=k {
                let mask = if j == 0 { 0u32 } else { (1u32 << j) - 1 };
                t.push(vec![g12(j as f64 / k as f64), g12(nu.value(ambkit::EventSet(mask)))]);
            }
        }
        Figure::OrderedArgmin => {
            let model = PreferenceModel::VpDivergence { divergence: DivergenceSpec::relative_entropy(), reference: SimplexPoint::uniform(k) };
            let utils: Vec<f64> = (1..=k).map(|i| i as f64).collect();
            let am = argmin_probabilities(&model, &utils)?;
            t = Table::new("ordered_argmin", &["i", "p"]);
            for (i, p) in am.ordered.iter().enumerate() {
                t.push(vec![(i + 1).to_string(), g12(*p)]);
            }
        }
    }
    ctx.finish(&[t])
}

fn noise_table(table: &NoiseTable) -> Table {
    let mut t = Table::new("insurance", &["eps", "noise", "s_star", "z_star", "value", "max_foc_residual", "boundary"]);
    let row = |eps: f64, noise: bool, s: &ambkit::insurance::InsuranceSolution| {
        vec![
            g12(eps),
            noise.to_string(),
            g12(s.s_star),
            s.z_star.map(g12).unwrap_or_default(),
            g12(s.value),
            g12(s.max_residual()),
            s.boundary.to_string(),
        ]
    };
    t.push(row(0.0, false, &table.baseline));
    for r in &table.rows {
        t.push(row(r.eps, true, &r.solution));
    }
    t
}

fn cmd_insurance(ctx: &Ctx, path: &Path, grid: Option<Vec<f64>>) -> Result<bool> {
    let doc = parse_insurance(&read(path)?)?;
    let problem = doc.build()?;
    let eps = grid.unwrap_or_else(|| if doc.eps_grid.is_empty() { vec![0.0, 0.05, 0.1, 0.2] } else { doc.eps_grid.clone() });
    if eps.iter().any(|&e| !(e >= 0.0 && e < problem.loss)) {
        bail!("noise levels must lie in [0, loss)");
    }
    let table = comparative_static_noise(&problem, &eps)?;
    let foc_ok = std::iter::once(&table.baseline)
        .chain(table.rows.iter().map(|r| &r.solution))
        .all(|s| s.boundary || s.max_residual() < 1e-6);
    eprintln!(
        "prudent={} monotone={} min_gain={} foc_ok={}",
        table.prudent,
        table.monotone(),
        g12(table.min_gain),
        foc_ok
    );
    ctx.finish(&[noise_table(&table)])?;
    Ok(table.assertion_holds() && foc_ok)
}

fn run(cli: Cli) -> Result<bool> {
    if cli.jobs == 0 {
        bail!("--jobs must be at least 1");
    }
    if !(cli.tol >= 0.0) {
        bail!("--tol must be nonnegative");
    }
    let mut ctx = Ctx { tol: cli.tol, seed: cli.seed, jobs: cli.jobs, out: cli.out.clone(), command: String::new(), inputs: Vec::new() };
    let pool = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build().map_err(|e| anyhow!("thread pool: {e}"))?;
    pool.install(|| match cli.command {
        Command::Evaluate { model, act } => {
            ctx.command = "evaluate".into();
            ctx.inputs = vec![model.display().to_string(), act.display().to_string()];
            let m = load_model(&model)?;
            let x = parse_act(&read(&act)?)?;
            let v = m.evaluate(x.utils())?;
            println!("{}", g12(v));
            ctx.finish(&[])?;
            Ok(true)
        }
        Command::Test { model, attitude, backgrounds, unequal, domain, tuples } => {
            ctx.command = format!("test --attitude {attitude:?}").to_lowercase();
            ctx.inputs = vec![model.display().to_string()];
            let m = load_model(&model)?;
            cmd_test(&ctx, &m, attitude, backgrounds, unequal, domain, tuples)
        }
        Command::Theorems { suite, instances } => {
            ctx.command = format!("theorems --suite {suite:?} --instances {instances}").to_lowercase();
            let t = suites::run(suite, &suites::Settings { seed: ctx.seed, tol: ctx.tol, instances })?;
            let total = t.rows.len();
            let agree = t.rows.iter().filter(|r| r[5] == "true").count();
            eprintln!("{agree}/{total} checks agree");
            ctx.finish(&[t])?;
            Ok(agree == total)
        }
        Command::Plotdata { figure, a, b, k } => {
            ctx.command = format!("plotdata --figure {figure:?}").to_lowercase();
            cmd_plotdata(&ctx, figure, a, b, k)?;
            Ok(true)
        }
        Command::Insurance { problem, noise_grid } => {
            ctx.command = "insurance".into();
            ctx.inputs = vec![problem.display().to_string()];
            cmd_insurance(&ctx, &problem, noise_grid)
        }
        Command::Symmetry { model, trials } => {
            ctx.command = "symmetry".into();
            ctx.inputs = vec![model.display().to_string()];
            let m = load_model(&model)?;
            let c = check_symmetry(&m, StateSpace::new(m.k())?, trials, ctx.seed)?;
            let w = c.witness.as_ref().map(|(act, (i, j), d)| serde_json::json!({"act": act.utils(), "swap": [i, j], "difference": d}));
            println!("{}", serde_json::to_string_pretty(&serde_json::json!({"holds": c.holds, "witness": w}))?);
            ctx.finish(&[])?;
            Ok(c.holds)
        }
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
