//! Command line front end.

pub mod config;
pub mod records;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::builder::{build_chain, build_two_group, build_uniform, feasibility, FeasibilityReport};
use crate::dyad::{classify, mu_star};
use crate::dynamics::{consensus_limit, equilibrium, geometric_scales, scale_sweep, variance};
use crate::error::Error;
use crate::ideal::{ideal_point, upper_bound};
use crate::pruning::{prune_search, sigma_thresholds, Policy};
use crate::reproduce::{self, Status};
use crate::types::{Network, Population, Tolerances};

pub use config::{Config, LoadedConfig};
pub use records::{Format, Record, RunRecord, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_REPRODUCE_FAILED: i32 = 1;
pub const EXIT_INFEASIBLE: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;
pub const EXIT_CONFIG: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "hmo", version, about = "Highest mean opinion networks")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Output format.
    #[arg(long, value_enum, default_value_t = Format::Records, global = true)]
    pub format: Format,

    /// Equilibrium residual tolerance (overrides the default 1e-10).
    #[arg(long, global = true)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ConfigArg {
    /// Population (and optional network) description, TOML or JSON.
    #[arg(long)]
    pub config: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Auto,
    Chain,
    Uniform,
    TwoGroup,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Best,
    Bottom,
    Top,
}

impl From<PolicyArg> for Policy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Best => Policy::Best,
            PolicyArg::Bottom => Policy::Bottom,
            PolicyArg::Top => Policy::Top,
        }
    }
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve the equilibrium on the configured (or built) network.
    Equilibrium {
        #[command(flatten)]
        config: ConfigArg,
        /// Build the network first instead of using the configured edges.
        #[arg(long, value_enum)]
        mode: Option<Mode>,
    },
    /// Construct the network realizing the highest mean opinion.
    Build {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_enum, default_value_t = Mode::Auto)]
        mode: Mode,
    },
    /// Classify a two-agent population.
    Classify {
        #[command(flatten)]
        config: ConfigArg,
    },
    /// Prune agents or strengthen links until a network exists.
    Prune {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_enum, default_value_t = PolicyArg::Best)]
        policy: PolicyArg,
    },
    /// Mean and variance of the equilibrium as the network is scaled.
    Sweep {
        #[command(flatten)]
        config: ConfigArg,
        #[arg(long, value_enum)]
        mode: Option<Mode>,
        #[arg(long, default_value_t = 1.0)]
        scale_min: f64,
        #[arg(long, default_value_t = 1e4)]
        scale_max: f64,
        #[arg(long, default_value_t = 9)]
        scale_steps: usize,
    },
    /// Stubbornness thresholds for one varying agent.
    Thresholds {
        #[command(flatten)]
        config: ConfigArg,
        /// Varying agent (1-based); defaults to the lowest conviction.
        #[arg(long)]
        agent: Option<usize>,
    },
    /// Recompute every reference example.
    Reproduce,
}

/// Result of one invocation: what to print and how to exit.
#[derive(Debug, Clone, PartialEq)]
pub struct Invocation {
    pub stdout: String,
    pub stderr: String,
    pub code: i32,
}

struct Failure {
    code: i32,
    message: String,
    outputs: Vec<Record>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = exit_code(&e);
        let outputs = match &e {
            Error::Infeasible(report) => report_records(report),
            _ => Vec::new(),
        };
        Failure { code, message: e.to_string(), outputs }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Infeasible(_) | Error::TiedIdealValues { .. } => EXIT_INFEASIBLE,
        Error::NoConvergence { .. } | Error::BranchLimit(_) => EXIT_SOLVER,
        _ => EXIT_CONFIG,
    }
}

fn idx(i: usize) -> usize {
    i + 1
}

fn join_agents(agents: &[usize]) -> String {
    agents.iter().map(|a| idx(*a).to_string()).collect::<Vec<_>>().join(",")
}

fn edge_records(net: &Network) -> Vec<Record> {
    net.edges()
        .iter()
        .map(|e| Record::new().with("edge.i", idx(e.i)).with("edge.j", idx(e.j)).with("edge.w", e.w))
        .collect()
}

fn report_records(report: &FeasibilityReport) -> Vec<Record> {
    let mut summary = Record::new()
        .with("report.feasible", report.feasible)
        .with("report.classification", report.classification.to_string())
        .with("report.order", join_agents(&report.order));
    if let Some(k) = report.first_violation {
        summary.push("report.first_violation", k);
    }
    let mut g = Record::new();
    for (k, v) in report.sorted_g.iter().enumerate() {
        g.push(format!("report.g.{}", k + 1), *v);
    }
    let mut sums = Record::new();
    for (k, v) in report.partial_sums.iter().enumerate() {
        sums.push(format!("report.partial_sum.{}", k + 1), *v);
    }
    let mut out = vec![summary, g];
    if !sums.0.is_empty() {
        out.push(sums);
    }
    out
}

struct Built {
    network: Network,
    population: Population,
    mode: Mode,
    report: Option<FeasibilityReport>,
    cross_weight: Option<f64>,
}

fn resolve_mode(mode: Mode, cfg: &Config, pop: &Population) -> Mode {
    match mode {
        Mode::Auto if cfg.groups.is_some() && cfg.agents.is_empty() => Mode::TwoGroup,
        Mode::Auto if pop.has_uniform_sigma(1e-12) => Mode::Uniform,
        Mode::Auto => Mode::Chain,
        m => m,
    }
}

fn build(mode: Mode, cfg: &Config, pop: Population, tol: &Tolerances) -> Result<Built, Failure> {
    let mode = resolve_mode(mode, cfg, &pop);
    let ideal = ideal_point(&pop);
    match mode {
        Mode::TwoGroup => {
            let g = cfg.groups.ok_or_else(|| Failure {
                code: EXIT_CONFIG,
                message: "two-group mode needs a [groups] table".into(),
                outputs: Vec::new(),
            })?;
            let d = build_two_group(g.n1, g.n2, g.kappa, g.delta, tol)?;
            let report = feasibility(&d.population, &ideal_point(&d.population), tol)?;
            Ok(Built {
                network: d.network,
                population: d.population,
                mode,
                report: Some(report),
                cross_weight: Some(d.cross_weight),
            })
        }
        Mode::Uniform => {
            let network = build_uniform(&pop)?;
            let report = feasibility(&pop, &ideal, tol).ok();
            Ok(Built { network, population: pop, mode, report, cross_weight: None })
        }
        _ => {
            let report = feasibility(&pop, &ideal, tol)?;
            let network = build_chain(&pop, &ideal, tol)?;
            Ok(Built { network, population: pop, mode, report: Some(report), cross_weight: None })
        }
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Auto => "auto",
        Mode::Chain => "chain",
        Mode::Uniform => "uniform",
        Mode::TwoGroup => "two-group",
    }
}

fn load(arg: &ConfigArg) -> Result<(LoadedConfig, Population), Failure> {
    let loaded = Config::load(&arg.config)?;
    let pop = loaded.config.population()?;
    Ok((loaded, pop))
}

fn network_for(
    mode: Option<Mode>,
    loaded: &LoadedConfig,
    pop: Population,
    tol: &Tolerances,
) -> Result<(Population, Network), Failure> {
    match mode {
        Some(m) => {
            let b = build(m, &loaded.config, pop, tol)?;
            Ok((b.population, b.network))
        }
        None => {
            let net = loaded.config.network(pop.len())?;
            Ok((pop, net))
        }
    }
}

fn cmd_equilibrium(arg: &ConfigArg, mode: Option<Mode>, tol: &Tolerances) -> Result<(String, Vec<Record>), Failure> {
    let (loaded, pop) = load(arg)?;
    let (pop, net) = network_for(mode, &loaded, pop, tol)?;
    let eq = equilibrium(&pop, &net, tol)?;
    let mut out: Vec<Record> =
        eq.x.iter()
            .enumerate()
            .map(|(i, x)| {
                let k = idx(i);
                Record::new()
                    .with(format!("agent.{k}.x"), *x)
                    .with(format!("agent.{k}.u"), pop.u()[i])
                    .with(format!("agent.{k}.sigma"), pop.sigma()[i])
            })
            .collect();
    out.push(
        Record::new()
            .with("mean", eq.mean())
            .with("variance", eq.variance())
            .with("residual", eq.residual_norm)
            .with("method", eq.method.to_string())
            .with("upper_bound", upper_bound(&pop)),
    );
    Ok((loaded.digest, out))
}

fn cmd_build(arg: &ConfigArg, mode: Mode, tol: &Tolerances) -> Result<(String, Vec<Record>), Failure> {
    let (loaded, pop) = load(arg)?;
    let b = build(mode, &loaded.config, pop, tol)?;
    let mut summary = Record::new()
        .with("mode", mode_name(b.mode))
        .with("upper_bound", upper_bound(&b.population))
        .with("edges", b.network.edge_count());
    if let Some(w) = b.cross_weight {
        summary.push("cross_weight", w);
    }
    let mut out = vec![summary];
    if let Some(r) = &b.report {
        out.extend(report_records(r));
    }
    out.extend(edge_records(&b.network));
    Ok((loaded.digest, out))
}

fn cmd_classify(arg: &ConfigArg, tol: &Tolerances) -> Result<(String, Vec<Record>), Failure> {
    let (loaded, pop) = load(arg)?;
    let o = classify(&pop)?;
    let ideal = ideal_point(&pop);
    let mut r = Record::new()
        .with("regime", o.regime.to_string())
        .with("mu", o.mu)
        .with("a_star", o.a_star.map_or(Value::Text("none".into()), Value::Float))
        .with("best_mean", o.best_mean)
        .with("attained", o.attained)
        .with("x.1", o.x_at_best[0])
        .with("x.2", o.x_at_best[1])
        .with("ideal.1", ideal.x_star[0])
        .with("ideal.2", ideal.x_star[1])
        .with("threshold.polarization", o.polarization_threshold)
        .with("threshold.squared", o.squared_threshold);
    if let Ok(m) = mu_star(pop.u()[0], pop.u()[1], tol) {
        r.push("mu_star", m);
    }
    Ok((loaded.digest, vec![r]))
}

fn cmd_prune(arg: &ConfigArg, policy: Policy, tol: &Tolerances) -> Result<(String, Vec<Record>), Failure> {
    let (loaded, pop) = load(arg)?;
    let trace = prune_search(&pop, policy, tol)?;
    let mut out = Vec::new();
    for (k, s) in trace.steps.iter().enumerate() {
        let k = k + 1;
        out.push(
            Record::new()
                .with(format!("step.{k}.action"), s.action.to_string())
                .with(format!("step.{k}.agents"), join_agents(&s.agents))
                .with(format!("step.{k}.reason"), s.reason.to_string())
                .with(format!("step.{k}.resulting_mean"), s.resulting_mean),
        );
    }
    for (i, x) in trace.x.iter().enumerate() {
        let k = idx(i);
        let state = if trace.frozen.contains_key(&i) { "frozen" } else { "active" };
        out.push(Record::new().with(format!("agent.{k}.x"), *x).with(format!("agent.{k}.state"), state));
    }
    out.extend(edge_records(&trace.final_network));
    out.push(
        Record::new()
            .with("final_mean", trace.final_mean)
            .with("attained", trace.attained)
            .with("steps", trace.steps.len())
            .with("upper_bound", upper_bound(&pop)),
    );
    Ok((loaded.digest, out))
}

fn cmd_sweep(
    arg: &ConfigArg,
    mode: Option<Mode>,
    (min, max, steps): (f64, f64, usize),
    tol: &Tolerances,
) -> Result<(String, Vec<Record>), Failure> {
    let (loaded, pop) = load(arg)?;
    let (pop, net) = network_for(mode, &loaded, pop, tol)?;
    let scales = geometric_scales(min, max, steps);
    let sweep = scale_sweep(&pop, &net, &scales, tol, Default::default())?;
    let mut out: Vec<Record> = sweep
        .points
        .iter()
        .map(|p| Record::new().with("scale", p.scale).with("mean", p.mean).with("variance", p.variance))
        .collect();
    out.push(
        Record::new()
            .with("connected", sweep.connected)
            .with("consensus_limit", consensus_limit(&pop))
            .with("variance_u", variance(pop.u())),
    );
    Ok((loaded.digest, out))
}

fn cmd_thresholds(arg: &ConfigArg, agent: Option<usize>, tol: &Tolerances) -> Result<(String, Vec<Record>), Failure> {
    let (loaded, pop) = load(arg)?;
    let agent = match agent {
        Some(0) => {
            return Err(Failure { code: EXIT_CONFIG, message: "--agent is 1-based".into(), outputs: Vec::new() })
        }
        Some(a) => a - 1,
        None => (0..pop.len()).min_by(|&a, &b| pop.u()[a].total_cmp(&pop.u()[b])).unwrap_or(0),
    };
    let t = sigma_thresholds(&pop, agent, tol)?;
    let brackets = t.f_at_sigma.iter().all(|v| *v > 0.0)
        && t.g_at_zero.iter().all(|v| *v > 0.0)
        && t.g_at_sigma.iter().all(|v| *v < 0.0);
    let mut out = vec![Record::new()
        .with("agent", idx(t.agent))
        .with("sigma", t.sigma)
        .with("mu_plus", t.mu_plus)
        .with("mu_minus", t.mu_minus)
        .with("brackets", if brackets { "ok" } else { "violated" })];
    let series = |name: &str, first: usize, values: &[f64]| {
        let mut r = Record::new();
        for (p, v) in values.iter().enumerate() {
            r.push(format!("{name}.{}", first + p), *v);
        }
        r
    };
    out.push(series("mu_k", 1, &t.mu_k));
    out.push(series("f_at_sigma", 1, &t.f_at_sigma));
    out.push(series("mu_x", 2, &t.mu_x));
    out.push(series("g_at_zero", 2, &t.g_at_zero));
    out.push(series("g_at_sigma", 2, &t.g_at_sigma));
    out.push(series("mu_u", 2, &t.mu_u));
    Ok((loaded.digest, out))
}

fn cmd_reproduce(tol: &Tolerances) -> Result<(String, Vec<Record>, bool), Failure> {
    let rows = reproduce::rows(tol)?;
    let ok = rows.iter().all(|r| r.status != Status::Fail);
    let out = rows
        .iter()
        .map(|r| {
            let mut rec = Record::new()
                .with("row", r.id)
                .with("published", r.published)
                .with("computed", r.computed)
                .with("tol", r.tol)
                .with("status", r.status.to_string());
            if let Some(c) = &r.check {
                rec.push("check", c.as_str());
            }
            rec
        })
        .collect();
    Ok((config::digest(b""), out, ok))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Equilibrium { .. } => "equilibrium",
        Command::Build { .. } => "build",
        Command::Classify { .. } => "classify",
        Command::Prune { .. } => "prune",
        Command::Sweep { .. } => "sweep",
        Command::Thresholds { .. } => "thresholds",
        Command::Reproduce => "reproduce",
    }
}

pub fn run(cli: &Cli) -> Invocation {
    let mut tol = Tolerances::default();
    if let Some(t) = cli.tol {
        tol = tol.with_eq_tol(t);
    }
    let name = command_name(&cli.command);
    if !tol.is_valid() {
        return Invocation {
            stdout: String::new(),
            stderr: format!("error: --tol must be positive, got {:?}\n", cli.tol),
            code: EXIT_CONFIG,
        };
    }

    let mut code = EXIT_OK;
    let result = match &cli.command {
        Command::Equilibrium { config, mode } => cmd_equilibrium(config, *mode, &tol),
        Command::Build { config, mode } => cmd_build(config, *mode, &tol),
        Command::Classify { config } => cmd_classify(config, &tol),
        Command::Prune { config, policy } => cmd_prune(config, (*policy).into(), &tol),
        Command::Sweep { config, mode, scale_min, scale_max, scale_steps } => {
            cmd_sweep(config, *mode, (*scale_min, *scale_max, *scale_steps), &tol)
        }
        Command::Thresholds { config, agent } => cmd_thresholds(config, *agent, &tol),
        Command::Reproduce => cmd_reproduce(&tol).map(|(d, out, ok)| {
            if !ok {
                code = EXIT_REPRODUCE_FAILED;
            }
            (d, out)
        }),
    };

    match result {
        Ok((digest, outputs)) => {
            let run = RunRecord { command: name.into(), config_digest: digest, outputs };
            Invocation { stdout: run.render(cli.format), stderr: String::new(), code }
        }
        Err(f) => {
            let stdout = if f.outputs.is_empty() {
                String::new()
            } else {
                let digest = match &cli.command {
                    Command::Reproduce => config::digest(b""),
                    Command::Equilibrium { config, .. }
                    | Command::Build { config, .. }
                    | Command::Classify { config }
                    | Command::Prune { config, .. }
                    | Command::Sweep { config, .. }
                    | Command::Thresholds { config, .. } => {
                        std::fs::read(&config.config).map(|b| config::digest(&b)).unwrap_or_default()
                    }
                };
                RunRecord { command: name.into(), config_digest: digest, outputs: f.outputs }.render(cli.format)
            };
            Invocation { stdout, stderr: format!("error: {}\n", f.message), code: f.code }
        }
    }
}
