//! The `deprec` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 validation error, 3 solver error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use deprec_core::exact::{
    brute_force_optimal, default_gamma_grid, depreciation_sweep, policy_evaluation, solve_average,
    solve_average_depreciating, solve_discounted_depreciating, tauberian_probe, value_iteration_discounted,
    DEFAULT_TAUBERIAN_GRID,
};
use deprec_core::lp::{build_dual_lp, build_primal_lp, solve_by_lp, LpVariant};
use deprec_core::mdp::DEFAULT_POLICY_CAP;
use deprec_core::qlearning::{
    exact_q_table, run_q_learning, CountingMode, ExplorationSchedule, Initialization, LearningRateSchedule,
    QLearningConfig, UpdateRule,
};
use deprec_core::scenarios::{car_dealership, periodic_chain, CarDealershipParams};
use deprec_core::{DiscountSpec, Error, Mdp, Payoff, Policy};

use crate::io::document::{describe, parse_document, parse_number, serialize_document, MdpDocument};
use crate::io::lp_text::{dual_names, primal_names, write_lp};
use crate::io::svg::{line_chart, Series};
use crate::io::table::{write_sweep_csv, write_trace_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_SOLVER: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "deprec", version, about = "Solve and learn MDPs under depreciating-asset payoffs")]
pub struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model and print any diagnostics.
    Validate(SourceArgs),
    /// Write a model as a `deprec-mdp/1` document.
    Export(ExportArgs),
    /// Optimal values and a greedy policy.
    Solve(SolveArgs),
    /// Values of a fixed policy.
    Evaluate(EvaluateArgs),
    /// Run ε-greedy Q-learning against the exact Q-table.
    Qlearn(QlearnArgs),
    /// Values as the depreciation factor varies (CSV and optional SVG).
    Sweep(SweepArgs),
    /// `(1-λ) V_λ^γ` along a discount grid next to the average depreciating value.
    Tauberian(TauberianArgs),
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// A `deprec-mdp/1` document.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Built-in model: `car`, `car:rho1,rho2,r1,r2` or `cycle:r1,r2,...`.
    #[arg(long)]
    scenario: Option<String>,
}

#[derive(Debug, Args)]
struct SourceArgs {
    #[command(flatten)]
    source: Source,
}

#[derive(Debug, Args)]
struct ExportArgs {
    #[command(flatten)]
    source: Source,
    /// Destination file; standard output if absent.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    Discounted,
    #[value(alias = "discounted-depreciating")]
    Depreciating,
    Average,
    AverageDepreciating,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Method {
    Vi,
    Lp,
    Brute,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LpVariantArg {
    Consistent,
    #[value(alias = "paper")]
    TransitionScaled,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum LpForm {
    Primal,
    Dual,
}

#[derive(Debug, Args)]
struct PayoffArgs {
    #[arg(long, value_enum, default_value = "depreciating")]
    criterion: CriterionArg,
    /// Discount factor in (0,1).
    #[arg(long)]
    lambda: Option<f64>,
    /// Depreciation factor in [0,1); (0,1) for average-depreciating.
    #[arg(long)]
    gamma: Option<f64>,
}

#[derive(Debug, Args)]
struct SolveArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    payoff: PayoffArgs,
    #[arg(long, value_enum, default_value = "vi")]
    method: Method,
    /// Transition coefficient of the LP; `transition-scaled` (alias `paper`)
    /// divides it by 1-λγ, which no longer matches the Bellman equation.
    #[arg(long, value_enum, default_value = "consistent")]
    lp_variant: LpVariantArg,
    /// Also write the LP (unit weights) in `deprec-lp/1` text to this file.
    #[arg(long)]
    lp_export: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "primal")]
    lp_form: LpForm,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Largest policy count the brute-force method will enumerate.
    #[arg(long, default_value_t = DEFAULT_POLICY_CAP)]
    cap: u128,
    /// Digits after the decimal point.
    #[arg(long, default_value_t = 9)]
    digits: usize,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[command(flatten)]
    source: Source,
    #[command(flatten)]
    payoff: PayoffArgs,
    /// `state:action` pairs, comma separated; single-action states may be omitted.
    #[arg(long)]
    policy: String,
    #[arg(long, default_value_t = 9)]
    digits: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum RateArg {
    Harmonic,
    Polynomial,
    Constant,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CountingArg {
    PerPair,
    Global,
}

#[derive(Debug, Args)]
struct QlearnArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    lambda: f64,
    #[arg(long)]
    gamma: f64,
    #[arg(long, default_value_t = 2_000_000)]
    steps: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value = "harmonic")]
    rate: RateArg,
    /// Rate numerator `c` in `c / (n + n0)^p`, or the constant rate.
    #[arg(long, default_value_t = 1.0)]
    rate_c: f64,
    #[arg(long, default_value_t = 0.0)]
    rate_n0: f64,
    /// Exponent `p` of the polynomial rate, in (0.5, 1].
    #[arg(long, default_value_t = 0.8)]
    rate_exponent: f64,
    #[arg(long, value_enum, default_value = "per-pair")]
    counting: CountingArg,
    /// Permit a constant rate, which does not satisfy the convergence conditions.
    #[arg(long)]
    allow_nonconvergent: bool,
    #[arg(long, default_value_t = 1.0)]
    eps0: f64,
    #[arg(long, default_value_t = 0.99999)]
    eps_decay: f64,
    #[arg(long, default_value_t = 0.05)]
    eps_min: f64,
    #[arg(long, default_value_t = 10_000)]
    restart_every: u64,
    #[arg(long, default_value_t = 100_000)]
    trace_every: u64,
    /// Start from the optimistic bound instead of zero.
    #[arg(long)]
    optimistic: bool,
    /// Ignore γ in the target (standard discounted Q-learning).
    #[arg(long)]
    standard: bool,
    /// Trace CSV destination.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, default_value_t = 9)]
    digits: usize,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    lambda: f64,
    /// Comma-separated depreciation factors; 0.01..0.99 by default.
    #[arg(long, value_delimiter = ',')]
    gammas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// CSV destination; standard output if absent.
    #[arg(long)]
    output: Option<PathBuf>,
    /// SVG chart destination.
    #[arg(long)]
    svg: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TauberianArgs {
    #[command(flatten)]
    source: Source,
    #[arg(long)]
    gamma: f64,
    /// Strictly increasing discount factors; 0.9,0.99,0.999,0.9999 by default.
    #[arg(long, value_delimiter = ',')]
    lambdas: Option<Vec<f64>>,
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    #[arg(long, default_value_t = 9)]
    digits: usize,
}

/// A failure with its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn validation(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_VALIDATION,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidMdp(_) => EXIT_VALIDATION,
            Error::Multichain { .. }
            | Error::IterationLimit { .. }
            | Error::Singular
            | Error::Lp(_)
            | Error::DegenerateDual { .. }
            | Error::CapExceeded { .. } => EXIT_SOLVER,
            Error::Shape(_)
            | Error::OutOfRange { .. }
            | Error::Parameter(_)
            | Error::CriterionMismatch { .. }
            | Error::Empty(_) => EXIT_USAGE,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Self::usage(e.to_string())
    }
}

type Outcome = Result<String, Failure>;

/// Parses `args` (program name first), runs the command and returns the exit
/// code. Results go to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let text = e.render().to_string();
            let _ = if e.use_stderr() { err.write_all(text.as_bytes()) } else { out.write_all(text.as_bytes()) };
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(text) => match out.write_all(text.as_bytes()) {
            Ok(()) => EXIT_OK,
            Err(e) => {
                let _ = writeln!(err, "error: {e}");
                EXIT_USAGE
            }
        },
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn dispatch(command: Command) -> Outcome {
    match command {
        Command::Validate(a) => validate(&a.source),
        Command::Export(a) => export(&a),
        Command::Solve(a) => solve(&a),
        Command::Evaluate(a) => evaluate(&a),
        Command::Qlearn(a) => qlearn(&a),
        Command::Sweep(a) => sweep(&a),
        Command::Tauberian(a) => tauberian(&a),
    }
}

fn numbers(list: &str) -> Result<Vec<f64>, Failure> {
    list.split(',')
        .map(|t| parse_number(t.trim()).map_err(Failure::usage))
        .collect()
}

/// Builds a scenario from `car`, `car:rho1,rho2,r1,r2` or `cycle:r1,...`.
pub fn scenario(spec: &str) -> Result<MdpDocument, Failure> {
    let (name, params) = spec.split_once(':').unwrap_or((spec, ""));
    let mut doc = match name {
        "car" => {
            let p = if params.is_empty() {
                CarDealershipParams::reference()
            } else {
                let v = numbers(params)?;
                let [rho1, rho2, r1, r2] = v[..] else {
                    return Err(Failure::usage(format!("car takes 4 parameters, got {}", v.len())));
                };
                CarDealershipParams::new(rho1, rho2, r1, r2)?
            };
            let mut doc = MdpDocument::new(car_dealership(&p)?);
            doc.title = Some("Used car dealership".into());
            doc.provenance = Some(format!("scenario car:{},{},{},{}", p.rho1, p.rho2, p.r1, p.r2));
            doc
        }
        "cycle" => {
            if params.is_empty() {
                return Err(Failure::usage("cycle needs at least one reward"));
            }
            let mut doc = MdpDocument::new(periodic_chain(&numbers(params)?)?);
            doc.title = Some("Deterministic reward cycle".into());
            doc.provenance = Some(format!("scenario cycle:{params}"));
            doc
        }
        other => return Err(Failure::usage(format!("unknown scenario '{other}'"))),
    };
    if doc.title.is_none() {
        doc.title = Some(spec.to_string());
    }
    Ok(doc)
}

fn read_document(path: &Path) -> Result<MdpDocument, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::usage(format!("cannot read {}: {e}", path.display())))?;
    parse_document(&text)
        .map_err(|d| Failure::validation(format!("{}:{}:{}: {}", path.display(), d.line, d.column, d.message)))
}

fn load(source: &Source) -> Result<MdpDocument, Failure> {
    match (&source.input, &source.scenario) {
        (Some(path), None) => read_document(path),
        (None, Some(spec)) => scenario(spec),
        _ => Err(Failure::usage("exactly one of --input and --scenario is required")),
    }
}

/// Loads the model and rejects invalid ones with every violation listed.
fn load_valid(source: &Source) -> Result<Mdp, Failure> {
    let mdp = load(source)?.mdp;
    let violations = mdp.validate();
    if !violations.is_empty() {
        let lines: Vec<String> = violations.iter().map(|v| describe(&mdp, v)).collect();
        return Err(Failure::validation(lines.join("\n")));
    }
    Ok(mdp)
}

fn write_file(path: &Path, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents).map_err(|e| Failure::usage(format!("cannot write {}: {e}", path.display())))
}

fn fixed(x: f64, digits: usize) -> String {
    format!("{:.*}", digits, x + 0.0)
}

fn validate(source: &Source) -> Outcome {
    let mdp = load_valid(source)?;
    Ok(format!(
        "valid: {} states, {} state-action pairs, {} stationary policies\n",
        mdp.n_states(),
        mdp.n_pairs(),
        mdp.policy_count()
    ))
}

fn export(args: &ExportArgs) -> Outcome {
    let doc = load(&args.source)?;
    let text = serialize_document(&doc);
    match &args.output {
        Some(path) => {
            write_file(path, &text)?;
            Ok(String::new())
        }
        None => Ok(text),
    }
}

fn need(value: Option<f64>, flag: &str, criterion: &str) -> Result<f64, Failure> {
    value.ok_or_else(|| Failure::usage(format!("--{flag} is required for the {criterion} criterion")))
}

/// Resolves the criterion flags into a payoff, checking every parameter.
fn payoff(args: &PayoffArgs) -> Result<Payoff, Failure> {
    Ok(match args.criterion {
        CriterionArg::Discounted => {
            let lambda = need(args.lambda, "lambda", "discounted")?;
            DiscountSpec::new(lambda, 0.0)?;
            Payoff::Discounted { lambda }
        }
        CriterionArg::Depreciating => {
            let lambda = need(args.lambda, "lambda", "depreciating")?;
            let gamma = need(args.gamma, "gamma", "depreciating")?;
            Payoff::DiscountedDepreciating(DiscountSpec::new(lambda, gamma)?)
        }
        CriterionArg::Average => Payoff::Average,
        CriterionArg::AverageDepreciating => {
            let gamma = need(args.gamma, "gamma", "average-depreciating")?;
            if !(gamma > 0.0 && gamma < 1.0) {
                return Err(Failure::usage(format!("gamma must lie in (0,1), got {gamma}")));
            }
            Payoff::AverageDepreciating { gamma }
        }
    })
}

fn describe_payoff(p: &Payoff) -> String {
    match p {
        Payoff::Discounted { lambda } => format!("criterion discounted lambda {lambda}"),
        Payoff::DiscountedDepreciating(s) => {
            format!("criterion depreciating lambda {} gamma {}", s.lambda(), s.gamma())
        }
        Payoff::Average => "criterion average".into(),
        Payoff::AverageDepreciating { gamma } => format!("criterion average-depreciating gamma {gamma}"),
    }
}

fn value_table(mdp: &Mdp, values: &[f64], policy: Option<&Policy>, digits: usize) -> String {
    let mut out = String::new();
    out.push_str(if policy.is_some() { "state value action\n" } else { "state value\n" });
    for s in 0..mdp.n_states() {
        write!(out, "{} {}", mdp.state_name(s), fixed(values[s], digits)).unwrap();
        if let Some(p) = policy {
            write!(out, " {}", mdp.action_name(s, p.action(s))).unwrap();
        }
        out.push('\n');
    }
    out
}

fn solve(args: &SolveArgs) -> Outcome {
    let payoff = payoff(&args.payoff)?;
    if !(args.tol > 0.0 && args.tol.is_finite()) {
        return Err(Failure::usage(format!("--tol must be positive, got {}", args.tol)));
    }
    let lp_spec = match payoff {
        Payoff::Discounted { lambda } => Some(DiscountSpec::new(lambda, 0.0)?),
        Payoff::DiscountedDepreciating(s) => Some(s),
        _ => None,
    };
    if (args.method == Method::Lp || args.lp_export.is_some()) && lp_spec.is_none() {
        return Err(Failure::usage("the LP formulation covers the discounted criteria only"));
    }
    let variant = match args.lp_variant {
        LpVariantArg::Consistent => LpVariant::Consistent,
        LpVariantArg::TransitionScaled => LpVariant::TransitionScaled,
    };
    let mdp = load_valid(&args.source)?;

    let mut notes = Vec::new();
    let (values, policy) = match (args.method, payoff) {
        (Method::Brute, p) => {
            let (v, policy) = brute_force_optimal(&mdp, p, args.cap)?;
            notes.push(format!("# policies enumerated {}", mdp.policy_count()));
            (v.values, policy)
        }
        (Method::Lp, _) => {
            let plan = solve_by_lp(&mdp, &lp_spec.expect("checked above"), variant)?;
            notes.push(format!("# lp-variant {} pivots {}", args.lp_variant.name(), plan.primal.pivots));
            (plan.values.values, plan.greedy_policy)
        }
        (Method::Vi, Payoff::Discounted { lambda }) => {
            let (v, r) = value_iteration_discounted(&mdp, lambda, args.tol)?;
            notes.push(iteration_note(r.iterations, r.final_residual));
            (v.values, r.greedy_policy)
        }
        (Method::Vi, Payoff::DiscountedDepreciating(spec)) => {
            let (v, r) = solve_discounted_depreciating(&mdp, &spec, args.tol)?;
            notes.push(iteration_note(r.iterations, r.final_residual));
            (v.values, r.greedy_policy)
        }
        (Method::Vi, Payoff::Average) => {
            let (gain, r) = solve_average(&mdp, args.tol)?;
            notes.push(iteration_note(r.iterations, r.final_residual));
            (vec![gain; mdp.n_states()], r.greedy_policy)
        }
        (Method::Vi, Payoff::AverageDepreciating { gamma }) => {
            let (v, r) = solve_average_depreciating(&mdp, gamma, args.tol)?;
            notes.push(iteration_note(r.iterations, r.final_residual));
            (v.values, r.greedy_policy)
        }
    };
    if let Some(path) = &args.lp_export {
        let spec = lp_spec.expect("checked above");
        let weights = vec![1.0; mdp.n_states()];
        let text = match args.lp_form {
            LpForm::Primal => {
                let (vars, rows) = primal_names(&mdp);
                write_lp(&build_primal_lp(&mdp, &spec, &weights, variant)?, &vars, &rows)
            }
            LpForm::Dual => {
                let (vars, rows) = dual_names(&mdp);
                write_lp(&build_dual_lp(&mdp, &spec, &weights, variant)?, &vars, &rows)
            }
        };
        write_file(path, &text)?;
    }
    let mut out = format!("# {} method {}\n", describe_payoff(&payoff), args.method.name());
    out.push_str(&value_table(&mdp, &values, Some(&policy), args.digits));
    for n in notes {
        out.push_str(&n);
        out.push('\n');
    }
    Ok(out)
}

fn iteration_note(iterations: usize, residual: f64) -> String {
    format!("# iterations {iterations} residual {residual:e}")
}

trait ValueName {
    fn name(&self) -> String;
}

impl<T: ValueEnum> ValueName for T {
    fn name(&self) -> String {
        self.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()
    }
}

/// Parses `state:action,...`; states with one action may be left out.
fn parse_policy(mdp: &Mdp, text: &str) -> Result<Policy, Failure> {
    let mut actions: Vec<Option<usize>> = vec![None; mdp.n_states()];
    for item in text.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (s, a) = item
            .split_once(':')
            .ok_or_else(|| Failure::usage(format!("expected state:action, got '{item}'")))?;
        let si = mdp
            .state_index(s)
            .ok_or_else(|| Failure::usage(format!("unknown state '{s}'")))?;
        let ai = mdp
            .action_index(si, a)
            .ok_or_else(|| Failure::usage(format!("state '{s}' has no action '{a}'")))?;
        if actions[si].replace(ai).is_some() {
            return Err(Failure::usage(format!("state '{s}' listed twice")));
        }
    }
    let mut chosen = Vec::with_capacity(mdp.n_states());
    for (s, a) in actions.into_iter().enumerate() {
        match a {
            Some(a) => chosen.push(a),
            None if mdp.n_actions(s) == 1 => chosen.push(0),
            None => return Err(Failure::usage(format!("no action given for state '{}'", mdp.state_name(s)))),
        }
    }
    Ok(Policy::new(mdp, chosen)?)
}

fn evaluate(args: &EvaluateArgs) -> Outcome {
    let payoff = payoff(&args.payoff)?;
    let mdp = load_valid(&args.source)?;
    let policy = parse_policy(&mdp, &args.policy)?;
    let v = policy_evaluation(&mdp, &policy, payoff)?;
    let mut out = format!("# {} policy", describe_payoff(&payoff));
    for s in 0..mdp.n_states() {
        write!(out, " {}:{}", mdp.state_name(s), mdp.action_name(s, policy.action(s))).unwrap();
    }
    out.push('\n');
    out.push_str(&value_table(&mdp, &v.values, None, args.digits));
    Ok(out)
}

fn qlearn(args: &QlearnArgs) -> Outcome {
    let spec = DiscountSpec::new(args.lambda, args.gamma)?;
    let mode = match args.counting {
        CountingArg::PerPair => CountingMode::PerPair,
        CountingArg::Global => CountingMode::Global,
    };
    let rate = match args.rate {
        RateArg::Harmonic => LearningRateSchedule::harmonic(args.rate_c, args.rate_n0, mode)?,
        RateArg::Polynomial => LearningRateSchedule::polynomial(args.rate_c, args.rate_n0, args.rate_exponent, mode)?,
        RateArg::Constant => LearningRateSchedule::constant(args.rate_c, args.allow_nonconvergent)?,
    };
    let explore = ExplorationSchedule::new(args.eps0, args.eps_decay, args.eps_min)?;
    let mut config = QLearningConfig::new(spec, rate, explore, args.steps, args.seed);
    config.restart_every = args.restart_every;
    config.trace_every = args.trace_every;
    if args.optimistic {
        config.init = Initialization::Optimistic;
    }
    if args.standard {
        config.rule = UpdateRule::Standard;
    }
    let mdp = load_valid(&args.source)?;
    let reference_spec = if args.standard {
        DiscountSpec::new(args.lambda, 0.0)?
    } else {
        spec
    };
    let (exact, _) = solve_discounted_depreciating(&mdp, &reference_spec, 1e-12)?;
    let reference = exact_q_table(&mdp, &reference_spec, &exact)?;
    let (q, report) = run_q_learning(&mdp, &config, Some(&reference))?;

    if let Some(path) = &args.output {
        let csv = write_trace_csv(&report.trace, args.digits).map_err(|e| Failure::usage(e.to_string()))?;
        write_file(path, &csv)?;
    }
    let d = args.digits;
    let mut out = format!(
        "# qlearn lambda {} gamma {} steps {} seed {}\n",
        args.lambda, args.gamma, report.steps, args.seed
    );
    for w in &report.warnings {
        writeln!(out, "# warning: {w}").unwrap();
    }
    writeln!(out, "final_gap {}", fixed(report.final_gap.unwrap_or(f64::NAN), d)).unwrap();
    writeln!(out, "episodes {}", report.episode_returns.len()).unwrap();
    out.push_str("state action q exact visits greedy\n");
    for s in 0..mdp.n_states() {
        for a in 0..mdp.n_actions(s) {
            writeln!(
                out,
                "{} {} {} {} {} {}",
                mdp.state_name(s),
                mdp.action_name(s, a),
                fixed(q.get(s, a), d),
                fixed(reference.get(s, a), d),
                q.visits(s, a),
                if report.greedy_policy.action(s) == a { "*" } else { "-" }
            )
            .unwrap();
        }
    }
    Ok(out)
}

fn sweep(args: &SweepArgs) -> Outcome {
    DiscountSpec::new(args.lambda, 0.0)?;
    let gammas = args.gammas.clone().unwrap_or_else(default_gamma_grid);
    if gammas.is_empty() {
        return Err(Failure::usage("--gammas is empty"));
    }
    for &g in &gammas {
        DiscountSpec::new(args.lambda, g)?;
    }
    let mdp = load_valid(&args.source)?;
    let rows = depreciation_sweep(&mdp, args.lambda, &gammas, args.tol)?;
    let csv = write_sweep_csv(mdp.state_names(), &rows).map_err(|e| Failure::usage(e.to_string()))?;
    if let Some(path) = &args.svg {
        let series: Vec<Series> = (0..mdp.n_states())
            .map(|s| Series {
                name: mdp.state_name(s).to_string(),
                points: rows.iter().map(|(g, v)| (*g, v[s])).collect(),
            })
            .collect();
        let title = format!("Discounted depreciating value, lambda = {}", args.lambda);
        write_file(path, &line_chart(&title, "gamma", "value", &series))?;
    }
    match &args.output {
        Some(path) => {
            write_file(path, &csv)?;
            Ok(String::new())
        }
        None => Ok(csv),
    }
}

fn tauberian(args: &TauberianArgs) -> Outcome {
    if !(args.gamma > 0.0 && args.gamma < 1.0) {
        return Err(Failure::usage(format!("gamma must lie in (0,1), got {}", args.gamma)));
    }
    let lambdas = args.lambdas.clone().unwrap_or_else(|| DEFAULT_TAUBERIAN_GRID.to_vec());
    let mdp = load_valid(&args.source)?;
    let table = tauberian_probe(&mdp, args.gamma, &lambdas, args.tol)?;
    let d = args.digits;
    let mut out = format!("# gamma {}\nlambda gap", args.gamma);
    for name in mdp.state_names() {
        write!(out, " {name}").unwrap();
    }
    out.push('\n');
    for row in &table.rows {
        write!(out, "{} {}", row.lambda, fixed(row.gap, d)).unwrap();
        for x in &row.scaled {
            write!(out, " {}", fixed(*x, d)).unwrap();
        }
        out.push('\n');
    }
    out.push_str("limit -");
    for x in &table.limit.values {
        write!(out, " {}", fixed(*x, d)).unwrap();
    }
    out.push('\n');
    Ok(out)
}
