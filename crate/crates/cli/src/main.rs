mod format;
mod source;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde_json::json;

use tqf_core::bipartition::full_mask;
use tqf_core::functionals::{c_psi_with, capacity, det_bound_with, lower_local, m_theta, moment_map, upper_level};
use tqf_core::lab::{run_all, run_claim};
use tqf_core::marginal::{bipartition_entropy, flattening_rank, weighted_entropy, DEFAULT_RANK_TOL};
use tqf_core::{Bipartition, BipartitionDistribution, Error, Options, Result, Tensor};

use format::sig12;
use source::{instantiate, load_tensor, parse_cut, parse_order, parse_theta};

#[derive(Parser)]
#[command(name = "tqf", version, about = "Upper and lower quantum functionals of complex tensors")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Level for the upper functional
    #[arg(long, global = true)]
    n: Option<usize>,
    /// Projector order, comma separated, leftmost written first (e.g. "AB,BC")
    #[arg(long, global = true)]
    order: Option<String>,
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Random starts for the lower functional, besides the identity start
    #[arg(long, global = true)]
    restarts: Option<usize>,
    /// Write output here instead of stdout
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Shape, norm, flattening ranks and entropies, moment residual
    Info {
        /// Named tensor (e.g. "sp:p=0.5") or a tensor JSON file
        tensor: String,
    },
    /// Run a registered claim, or "all"; exit 0 iff every deterministic claim passes
    Verify { claim: String },
    /// Tabulate quantities over a one-parameter tensor family as CSV
    Sweep {
        /// Family with one `$` placeholder, e.g. "sp:p=$"
        template: String,
        #[arg(long, allow_hyphen_values = true)]
        start: f64,
        #[arg(long, allow_hyphen_values = true)]
        stop: f64,
        #[arg(long)]
        steps: usize,
        #[arg(long)]
        theta: Option<String>,
        /// Comma separated subset of H_theta, m_theta, upper_n, lower, detbound, c_psi, capacity
        #[arg(long)]
        quantities: String,
        /// Bipartition for detbound and c_psi (default: first half of the parties)
        #[arg(long)]
        cut: Option<String>,
    },
    /// Evaluate one functional
    Functional {
        kind: Kind,
        tensor: String,
        /// θ spec ("AB:0.5,C:0.5"); a bipartition for detbound
        theta: Option<String>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    Upper,
    Lower,
    Mtheta,
    Capacity,
    Detbound,
}

#[derive(Clone, Copy, PartialEq)]
enum Quantity {
    HTheta,
    MTheta,
    UpperN,
    Lower,
    DetBound,
    CPsi,
    Capacity,
}

impl Quantity {
    const ALL: [(&'static str, Quantity); 7] = [
        ("H_theta", Quantity::HTheta),
        ("m_theta", Quantity::MTheta),
        ("upper_n", Quantity::UpperN),
        ("lower", Quantity::Lower),
        ("detbound", Quantity::DetBound),
        ("c_psi", Quantity::CPsi),
        ("capacity", Quantity::Capacity),
    ];

    fn parse(s: &str) -> Result<Quantity> {
        Self::ALL.iter().find(|(name, _)| *name == s).map(|&(_, q)| q).ok_or_else(|| {
            let names: Vec<&str> = Self::ALL.iter().map(|(n, _)| *n).collect();
            Error::Parameter(format!("unknown quantity `{s}`; available: {}", names.join(", ")))
        })
    }

    fn needs_theta(self) -> bool {
        matches!(self, Quantity::HTheta | Quantity::MTheta | Quantity::UpperN | Quantity::Lower)
    }
}

struct Context {
    options: Options,
    order_spec: Option<String>,
    out: Option<PathBuf>,
}

impl Context {
    fn from_cli(cli: &Cli) -> Self {
        let d = Options::default();
        let options = Options {
            tol: cli.tol.unwrap_or(d.tol),
            restarts: cli.restarts.unwrap_or(d.restarts),
            seed: cli.seed.unwrap_or(d.seed),
            level_n: cli.n.unwrap_or(d.level_n),
            ..d
        };
        Context { options, order_spec: cli.order.clone(), out: cli.out.clone() }
    }

    fn order(&self, k: usize) -> Result<Option<Vec<Bipartition>>> {
        self.order_spec.as_deref().map(|s| parse_order(s, k)).transpose()
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(path) => std::fs::write(path, text)
                .map_err(|e| Error::Parameter(format!("cannot write {}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    }
}

fn require_theta(theta: Option<&str>, k: usize) -> Result<BipartitionDistribution> {
    parse_theta(theta.ok_or_else(|| Error::Parameter("a θ spec is required".into()))?, k)
}

fn default_cut(k: usize) -> Result<Bipartition> {
    Bipartition::from_mask(k, full_mask(k / 2))
}

fn cmd_info(ctx: &Context, source: &str) -> Result<()> {
    let t = load_tensor(source)?;
    let mut s = String::new();
    let _ = writeln!(s, "tensor: {source}");
    let _ = writeln!(s, "shape: {:?}", t.shape());
    let _ = writeln!(s, "norm: {}", sig12(t.norm()));
    let _ = writeln!(s, "moment_residual: {}", sig12(moment_map(&t)?.residual));
    let _ = writeln!(s, "{:<16} {:>6} {:>16}", "bipartition", "rank", "entropy_bits");
    for b in Bipartition::all(t.parties()) {
        let r = flattening_rank(&t, &b, DEFAULT_RANK_TOL)?;
        let h = bipartition_entropy(&t, &b)?;
        let _ = writeln!(s, "{:<16} {:>6} {:>16}", b.to_string(), r, sig12(h));
    }
    ctx.emit(&s)
}

fn cmd_verify(ctx: &Context, claim: &str) -> Result<bool> {
    let verdicts = if claim == "all" { run_all()? } else { vec![run_claim(claim)?] };
    let mut s = String::new();
    for v in &verdicts {
        let _ = writeln!(s, "{}", v.to_json());
        let status = if v.passed { "PASS" } else { "FAIL" };
        let kind = if v.probabilistic { " (probabilistic)" } else { "" };
        eprintln!("{status} {}{kind}", v.claim_id);
    }
    ctx.emit(&s)?;
    Ok(verdicts.iter().all(|v| v.passed || v.probabilistic))
}

struct SweepPlan<'a> {
    theta: Option<&'a str>,
    quantities: Vec<Quantity>,
    cut: Option<&'a str>,
}

fn sweep_row(ctx: &Context, plan: &SweepPlan, t: &Tensor) -> Result<Vec<f64>> {
    let k = t.parties();
    let theta = if plan.quantities.iter().any(|q| q.needs_theta()) { Some(require_theta(plan.theta, k)?) } else { None };
    let theta = || theta.as_ref().expect("θ parsed when needed");
    let cut = match plan.cut {
        Some(c) => parse_cut(c, k)?,
        None => default_cut(k)?,
    };
    let order = ctx.order(k)?;
    plan.quantities
        .iter()
        .map(|q| match q {
            Quantity::HTheta => weighted_entropy(t, theta()),
            Quantity::MTheta => m_theta(t, theta()),
            Quantity::UpperN => Ok(upper_level(t, theta(), ctx.options.level_n, order.as_deref())?.best_value),
            Quantity::Lower => Ok(lower_local(t, theta(), &ctx.options)?.achieved_entropy),
            Quantity::DetBound => det_bound_with(t, &cut, &ctx.options),
            Quantity::CPsi => c_psi_with(t, &cut, &ctx.options),
            Quantity::Capacity => Ok(capacity(t, &ctx.options)?.capacity),
        })
        .collect()
}

fn param_name(template: &str) -> &str {
    let head = &template[..template.find('$').unwrap_or(0)];
    let head = head.trim_end_matches('=');
    head.rsplit([':', ',']).next().filter(|s| !s.is_empty()).unwrap_or("param")
}

#[allow(clippy::too_many_arguments)]
fn cmd_sweep(
    ctx: &Context,
    template: &str,
    start: f64,
    stop: f64,
    steps: usize,
    theta: Option<&str>,
    quantities: &str,
    cut: Option<&str>,
) -> Result<()> {
    if steps < 2 {
        return Err(Error::Parameter(format!("steps = {steps} must be at least 2")));
    }
    if !(start.is_finite() && stop.is_finite()) {
        return Err(Error::Parameter("range endpoints must be finite".into()));
    }
    let names: Vec<&str> = quantities.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if names.is_empty() {
        return Err(Error::Parameter("at least one quantity is required".into()));
    }
    let plan = SweepPlan { theta, quantities: names.iter().map(|n| Quantity::parse(n)).collect::<Result<_>>()?, cut };
    let values: Vec<f64> =
        (0..steps).map(|i| if i + 1 == steps { stop } else { start + (stop - start) * i as f64 / (steps - 1) as f64 }).collect();
    // fail on the whole range before any solver runs
    let tensors: Vec<Tensor> = values.iter().map(|&v| instantiate(template, v)?.build()).collect::<Result<_>>()?;
    let rows: Vec<Vec<f64>> = tensors.par_iter().map(|t| sweep_row(ctx, &plan, t)).collect::<Result<_>>()?;
    let mut s = String::new();
    let _ = writeln!(s, "{},{}", param_name(template), names.join(","));
    for (v, row) in values.iter().zip(rows) {
        let cells: Vec<String> = row.into_iter().map(sig12).collect();
        let _ = writeln!(s, "{},{}", sig12(*v), cells.join(","));
    }
    ctx.emit(&s)
}

fn cmd_functional(ctx: &Context, kind: Kind, source: &str, theta: Option<&str>) -> Result<()> {
    let t = load_tensor(source)?;
    let k = t.parties();
    let (label, value, report) = match kind {
        Kind::Upper => {
            let th = require_theta(theta, k)?;
            let order = ctx.order(k)?;
            let r = upper_level(&t, &th, ctx.options.level_n, order.as_deref())?;
            ("upper", r.best_value, serde_json::to_value(&r))
        }
        Kind::Lower => {
            let th = require_theta(theta, k)?;
            let r = lower_local(&t, &th, &ctx.options)?;
            ("lower", r.achieved_entropy, serde_json::to_value(&r))
        }
        Kind::Mtheta => {
            let th = require_theta(theta, k)?;
            let v = m_theta(&t, &th)?;
            ("m_theta", v, Ok(json!({ "m_theta": v, "theta": th.to_string() })))
        }
        Kind::Capacity => {
            let r = capacity(&t, &ctx.options)?;
            ("capacity", r.capacity, serde_json::to_value(&r))
        }
        Kind::Detbound => {
            let b = match theta {
                Some(s) => parse_cut(s, k)?,
                None => default_cut(k)?,
            };
            let c = c_psi_with(&t, &b, &ctx.options)?;
            let v = det_bound_with(&t, &b, &ctx.options)?;
            ("detbound", v, Ok(json!({ "detbound": v, "c_psi": c, "bipartition": b.to_string() })))
        }
    };
    let report = report.map_err(|e| Error::Parameter(format!("report serialization failed: {e}")))?;
    let unit = if matches!(kind, Kind::Capacity) { "" } else { " bits" };
    ctx.emit(&format!("{label}: {}{unit}\n{report}\n", sig12(value)))
}

fn configure_threads() -> Result<()> {
    let Ok(raw) = std::env::var("TQF_THREADS") else { return Ok(()) };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Parameter(format!("TQF_THREADS = `{raw}` must be a positive integer")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Parameter(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<bool> {
    configure_threads()?;
    let ctx = Context::from_cli(&cli);
    match &cli.command {
        Command::Info { tensor } => cmd_info(&ctx, tensor).map(|_| true),
        Command::Verify { claim } => cmd_verify(&ctx, claim),
        Command::Sweep { template, start, stop, steps, theta, quantities, cut } => {
            cmd_sweep(&ctx, template, *start, *stop, *steps, theta.as_deref(), quantities, cut.as_deref()).map(|_| true)
        }
        Command::Functional { kind, tensor, theta } => cmd_functional(&ctx, *kind, tensor, theta.as_deref()).map(|_| true),
    }
}

fn one_line(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let msg = e.to_string();
            let head: Vec<&str> = msg
                .lines()
                .take_while(|l| !l.starts_with("Usage:") && !l.starts_with("For more information"))
                .collect();
            eprintln!("error: {}", one_line(head.join(" ").trim_start_matches("error: ")));
            return ExitCode::from(2);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {}", one_line(&e.to_string()));
            ExitCode::from(2)
        }
    }
}
