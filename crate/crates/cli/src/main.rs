use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use critcoupling::bounds::{minimize_bound, BoundError, BoundMethod, BoundRequest};
use critcoupling::exec;
use critcoupling::kernels::{KernelError, KernelSpec, KernelVariant};
use critcoupling::nystrom::{converge, ConvergeOptions, NystromError, MAX_N};
use critcoupling::potentials::{Builtin, Potential, PotentialError, PotentialSpec};
use critcoupling::quadrature::{DomainMap, QuadratureError};
use critcoupling::specfun::SpecFunError;
use critcoupling::tables::{run_table, RowStatus, TableError, TableOptions, REFERENCE_ALPHA};

mod output;

use output::{Format, Report};

const EXIT_FAILED_ROWS: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_POTENTIAL: u8 = 3;
const EXIT_DIVERGENCE: u8 = 4;
const EXIT_NON_CONVERGENCE: u8 = 5;

/// Critical couplings of the spinless Salpeter equation: variational upper
/// limits and the zero-energy integral eigenproblem.
#[derive(Parser)]
#[command(name = "critcoupling", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Minimize a variational upper limit on the critical coupling
    Bound(BoundArgs),
    /// Solve the integral eigenproblem for the critical couplings g_1..g_k
    Exact(ExactArgs),
    /// Recompute a reference table and compare every cell
    Table(TableArgs),
    /// List the built-in potential shapes
    PotentialsList(OutputArgs),
}

#[derive(Args)]
struct ProblemArgs {
    /// Built-in name, expr:<expression in x>, table:<path> or table-linear:<path>
    #[arg(long)]
    potential: String,
    /// Orbital angular momentum
    #[arg(long)]
    ell: u32,
    /// Mass parameter; 0 selects the massless equation
    #[arg(long)]
    beta: f64,
    /// Kinetic normalization: 2 for two identical particles, 1 for one
    #[arg(long, default_value_t = 2.0)]
    alpha: f64,
}

#[derive(Args)]
struct GridArgs {
    /// Total number of grid nodes (starting size of the refinement ladder for `exact`)
    #[arg(long)]
    grid_n: Option<usize>,
    /// Map from the unit interval to (0, inf): rational[:s], exp[:s] or trunc:X
    #[arg(long, value_parser = parse_map)]
    grid_map: Option<DomainMap>,
}

#[derive(Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "human")]
    format: Format,
    /// Write to this file instead of standard output
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Defaults to variational-massless for beta = 0 and variational-massive otherwise
    #[arg(long, value_enum)]
    method: Option<BoundMethodArg>,
    /// Search range of the trial exponent p, as lo:hi
    #[arg(long, value_parser = parse_range)]
    p_range: Option<(f64, f64)>,
    /// Search range of the massive trial exponent a, as lo:hi
    #[arg(long, value_parser = parse_range)]
    a_range: Option<(f64, f64)>,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct ExactArgs {
    #[command(flatten)]
    problem: ProblemArgs,
    /// Defaults to massless-exact for beta = 0 and massive-exact otherwise
    #[arg(long, value_enum)]
    method: Option<KernelArg>,
    /// Number of characteristic numbers to report
    #[arg(long, default_value_t = 3)]
    count: usize,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct TableArgs {
    /// Table id
    #[arg(value_parser = clap::value_parser!(u32).range(1..=3))]
    id: u32,
    #[command(flatten)]
    grid: GridArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum BoundMethodArg {
    VariationalMassless,
    SimplifiedMassless,
    VariationalMassive,
}

impl From<BoundMethodArg> for BoundMethod {
    fn from(m: BoundMethodArg) -> Self {
        match m {
            BoundMethodArg::VariationalMassless => BoundMethod::VariationalMassless,
            BoundMethodArg::SimplifiedMassless => BoundMethod::SimplifiedMassless,
            BoundMethodArg::VariationalMassive => BoundMethod::VariationalMassive,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum KernelArg {
    MasslessExact,
    MasslessSimplified,
    MassiveExact,
    MassiveMinorized,
    Nonrelativistic,
}

impl From<KernelArg> for KernelVariant {
    fn from(k: KernelArg) -> Self {
        match k {
            KernelArg::MasslessExact => KernelVariant::MasslessExact,
            KernelArg::MasslessSimplified => KernelVariant::MasslessSimplified,
            KernelArg::MassiveExact => KernelVariant::MassiveExact,
            KernelArg::MassiveMinorized => KernelVariant::MassiveMinorized,
            KernelArg::Nonrelativistic => KernelVariant::Nonrelativistic,
        }
    }
}

fn parse_map(s: &str) -> Result<DomainMap, String> {
    s.parse()
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let (lo, hi) = s.split_once(':').ok_or_else(|| format!("expected lo:hi, got `{s}`"))?;
    let num = |t: &str| {
        t.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("`{t}` is not a finite number"))
    };
    let (lo, hi) = (num(lo)?, num(hi)?);
    if lo > hi {
        return Err(format!("range {lo}:{hi} is reversed"));
    }
    Ok((lo, hi))
}

/// An error with its exit status.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn config(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

fn quadrature_code(e: &QuadratureError) -> u8 {
    match e {
        QuadratureError::NonConvergence { .. } => EXIT_NON_CONVERGENCE,
        QuadratureError::NonFinite { .. } => EXIT_DIVERGENCE,
        _ => EXIT_CONFIG,
    }
}

fn kernel_code(e: &KernelError) -> u8 {
    match e {
        KernelError::Quadrature(q) => quadrature_code(q),
        KernelError::SpecFun(SpecFunError::UnsupportedEll(_)) | KernelError::InvalidSpec(_) => EXIT_CONFIG,
        _ => EXIT_DIVERGENCE,
    }
}

impl From<PotentialError> for Failure {
    fn from(e: PotentialError) -> Self {
        Self {
            code: if e.is_validation() { EXIT_POTENTIAL } else { EXIT_CONFIG },
            message: e.to_string(),
        }
    }
}

impl From<BoundError> for Failure {
    fn from(e: BoundError) -> Self {
        let code = match &e {
            BoundError::InvalidRequest(_) => EXIT_CONFIG,
            BoundError::Divergent { .. } => EXIT_DIVERGENCE,
            BoundError::Kernel(k) => kernel_code(k),
            BoundError::Quadrature(q) => quadrature_code(q),
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<NystromError> for Failure {
    fn from(e: NystromError) -> Self {
        let code = match &e {
            NystromError::InvalidRequest(_) => EXIT_CONFIG,
            NystromError::NoBoundState => EXIT_POTENTIAL,
            NystromError::Overflow { .. } => EXIT_DIVERGENCE,
            NystromError::NonConvergence { .. } | NystromError::Eigen(_) => EXIT_NON_CONVERGENCE,
            NystromError::Kernel(k) => kernel_code(k),
            NystromError::Quadrature(q) => quadrature_code(q),
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

impl From<TableError> for Failure {
    fn from(e: TableError) -> Self {
        let code = match e {
            TableError::UnknownTable(_) => EXIT_CONFIG,
            TableError::Reference(_) => EXIT_FAILED_ROWS,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

fn configure_threads() -> Result<(), Failure> {
    let Some(raw) = std::env::var_os("CRIT_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .to_str()
        .and_then(|s| s.trim().parse().ok())
        .ok_or_else(|| Failure::config(format!("CRIT_THREADS = {raw:?} is not a non-negative integer")))?;
    if n > 0 {
        exec::init_threads(n).map_err(Failure::config)?;
    }
    Ok(())
}

fn load_potential(problem: &ProblemArgs) -> Result<(PotentialSpec, Potential), Failure> {
    if !(problem.beta.is_finite() && problem.beta >= 0.0) {
        return Err(Failure::config(format!("--beta {} must be finite and >= 0", problem.beta)));
    }
    if !(problem.alpha.is_finite() && problem.alpha > 0.0) {
        return Err(Failure::config(format!("--alpha {} must be positive", problem.alpha)));
    }
    let spec: PotentialSpec = problem.potential.parse()?;
    let pot = Potential::from_spec(&spec)?;
    if pot.is_zero() {
        return Err(Failure {
            code: EXIT_POTENTIAL,
            message: format!("potential `{spec}` vanishes identically and binds nothing"),
        });
    }
    Ok((spec, pot))
}

fn problem_config(command: &str, problem: &ProblemArgs, spec: &PotentialSpec) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("command".into(), json!(command));
    m.insert("potential".into(), json!(spec.to_string()));
    m.insert("ell".into(), json!(problem.ell));
    m.insert("beta".into(), json!(problem.beta));
    m.insert("alpha".into(), json!(problem.alpha));
    m
}

fn run_bound(args: &BoundArgs) -> Result<Report, Failure> {
    let (spec, pot) = load_potential(&args.problem)?;
    let ProblemArgs { ell, beta, alpha, .. } = args.problem;
    let method: BoundMethod = match args.method {
        Some(m) => m.into(),
        None if beta == 0.0 => BoundMethod::VariationalMassless,
        None => BoundMethod::VariationalMassive,
    };
    let massive = method == BoundMethod::VariationalMassive;
    if massive != (beta > 0.0) {
        return Err(Failure::config(format!(
            "method {} needs {}",
            method.name(),
            if massive { "--beta > 0" } else { "--beta 0" }
        )));
    }
    let mut req = BoundRequest::new(pot, ell, beta, alpha, method);
    if let Some((lo, hi)) = args.p_range {
        req = req.with_p_range(lo, hi);
    }
    if let Some((lo, hi)) = args.a_range {
        req = req.with_a_range(lo, hi);
    }
    if let Some(map) = args.grid.grid_map {
        req.grid.map = map;
    }
    if let Some(n) = args.grid.grid_n {
        let panels = n / req.grid.n_per_panel;
        if panels < 2 {
            return Err(Failure::config(format!(
                "--grid-n {n} is below the minimum of {}",
                2 * req.grid.n_per_panel
            )));
        }
        req.grid = req.grid.with_panels(panels);
    }
    let r = minimize_bound(&req)?;

    let mut config = problem_config("bound", &args.problem, &spec);
    config.insert("method".into(), json!(method.name()));
    config.insert("p_range".into(), json!([req.p_range.0, req.p_range.1]));
    config.insert(
        "a_range".into(),
        if massive { json!([req.a_range.0, req.a_range.1]) } else { Value::Null },
    );
    config.insert("grid_n".into(), json!(req.grid.len()));
    config.insert("grid_map".into(), json!(req.grid.map.to_string()));

    let result = json!({
        "value": r.value,
        "p_opt": r.p_opt,
        "a_opt": r.a_opt,
        "integral_error": r.integral_error,
    });
    let diagnostics = json!({
        "evaluations": r.evaluations,
        "p_at_edge": r.boundary.p_at_edge,
        "a_at_edge": r.boundary.a_at_edge,
    });
    let row = json!({
        "potential": spec.to_string(),
        "ell": ell,
        "beta": beta,
        "alpha": alpha,
        "method": method.name(),
        "value": r.value,
        "p_opt": r.p_opt,
        "a_opt": r.a_opt,
        "integral_error": r.integral_error,
        "evaluations": r.evaluations,
        "p_at_edge": r.boundary.p_at_edge,
        "a_at_edge": r.boundary.a_at_edge,
    });
    Ok(Report {
        config: Value::Object(config),
        result,
        diagnostics,
        rows: vec![row],
        human_columns: None,
    })
}

fn converge_options(grid: &GridArgs, k: usize) -> Result<ConvergeOptions, Failure> {
    let mut opts = ConvergeOptions {
        k,
        ..ConvergeOptions::default()
    };
    if let Some(map) = grid.grid_map {
        opts.map = map;
    }
    if let Some(n) = grid.grid_n {
        if n < 16 {
            return Err(Failure::config(format!("--grid-n {n} is below the minimum of 16")));
        }
        opts.start_n = n;
        opts.max_n = MAX_N.max(4 * n);
    }
    Ok(opts)
}

fn run_exact(args: &ExactArgs) -> Result<Report, Failure> {
    let (spec, pot) = load_potential(&args.problem)?;
    let ProblemArgs { ell, beta, alpha, .. } = args.problem;
    if args.count == 0 {
        return Err(Failure::config("--count must be at least 1"));
    }
    let variant: KernelVariant = match args.method {
        Some(k) => k.into(),
        None if beta == 0.0 => KernelVariant::MasslessExact,
        None => KernelVariant::MassiveExact,
    };
    let kernel = KernelSpec::new(ell, beta, variant).map_err(|e| Failure {
        code: kernel_code(&e),
        message: e.to_string(),
    })?;
    let opts = converge_options(&args.grid, args.count)?;
    let cc = converge(&kernel, &pot, alpha, &opts)?;

    let variant_name = serde_json::to_value(variant).expect("unit variant serializes");
    let mut config = problem_config("exact", &args.problem, &spec);
    config.insert("method".into(), variant_name.clone());
    config.insert("count".into(), json!(args.count));
    config.insert("grid_n".into(), json!(opts.start_n));
    config.insert("grid_map".into(), json!(opts.map.to_string()));
    config.insert("tolerance".into(), json!(opts.tol));

    let len = cc.sequence.len();
    let last_change = (cc.sequence[len - 1].1 - cc.sequence[len - 2].1).abs() / cc.sequence[len - 1].1;
    let result = json!({
        "critical_coupling": cc.best(),
        "couplings": cc.values,
        "n": cc.n,
        "richardson_estimate": cc.richardson_estimate,
    });
    let diagnostics = json!({
        "sequence": cc.sequence.iter().map(|&(n, g)| json!({"n": n, "g1": g})).collect::<Vec<_>>(),
        "last_relative_change": last_change,
        "extrapolation_shift": cc.best() - cc.values[0],
    });
    let rows = cc
        .values
        .iter()
        .enumerate()
        .map(|(i, &g)| {
            json!({
                "potential": spec.to_string(),
                "ell": ell,
                "beta": beta,
                "alpha": alpha,
                "method": variant_name,
                "k": i + 1,
                "g": g,
                "n": cc.n,
                "richardson_estimate": if i == 0 { cc.richardson_estimate } else { None },
            })
        })
        .collect();
    Ok(Report {
        config: Value::Object(config),
        result,
        diagnostics,
        rows,
        human_columns: None,
    })
}

fn run_table_command(args: &TableArgs) -> Result<(Report, bool), Failure> {
    let opts = TableOptions {
        converge: converge_options(&args.grid, 1)?,
    };
    let report = run_table(args.id, &opts)?;
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| serde_json::to_value(r).expect("rows serialize"))
        .collect();
    let flat_rows = rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            if let Some(m) = r.as_object_mut().filter(|m| m["detail"].is_null()) {
                m.shift_remove("detail");
            }
            r
        })
        .collect();
    let config = json!({
        "command": "table",
        "table": args.id,
        "alpha": REFERENCE_ALPHA,
        "grid_n": opts.converge.start_n,
        "grid_map": opts.converge.map.to_string(),
        "tolerance": opts.converge.tol,
    });
    let result = json!({
        "table": args.id,
        "passed": report.passed(),
        "rows": rows,
    });
    let diagnostics = json!({
        "pass": report.count(RowStatus::Pass),
        "fail": report.count(RowStatus::Fail),
        "out_of_scope": report.count(RowStatus::OutOfScope),
        "error": report.count(RowStatus::Error),
    });
    Ok((
        Report {
            config,
            result,
            diagnostics,
            rows: flat_rows,
            human_columns: Some(&[
                "row",
                "column",
                "quantity",
                "reference",
                "computed",
                "relative_deviation",
                "tolerance",
                "status",
            ]),
        },
        report.passed(),
    ))
}

fn run_potentials_list() -> Report {
    let rows: Vec<Value> = Builtin::ALL
        .iter()
        .map(|b| {
            json!({
                "name": b.name(),
                "formula": b.formula(),
                "origin_exponent": b.origin_exponent(),
            })
        })
        .collect();
    Report {
        config: json!({"command": "potentials-list"}),
        result: json!({"potentials": rows}),
        diagnostics: json!({}),
        rows,
        human_columns: None,
    }
}

fn emit(report: &Report, output: &OutputArgs, tabular: bool) -> Result<(), Failure> {
    let text = match output.format {
        Format::Json => output::to_json(report),
        Format::Csv => output::to_csv(report),
        Format::Human => output::to_human(report, tabular),
    };
    match &output.out {
        Some(path) => std::fs::write(path, text).map_err(|e| Failure {
            code: EXIT_FAILED_ROWS,
            message: format!("cannot write {}: {e}", path.display()),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Failure> {
    configure_threads()?;
    match &cli.command {
        Command::Bound(args) => emit(&run_bound(args)?, &args.output, false)?,
        Command::Exact(args) => emit(&run_exact(args)?, &args.output, false)?,
        Command::Table(args) => {
            let (report, passed) = run_table_command(args)?;
            emit(&report, &args.output, true)?;
            if !passed {
                eprintln!("table {}: some rows failed", args.id);
                return Ok(ExitCode::from(EXIT_FAILED_ROWS));
            }
        }
        Command::PotentialsList(output) => emit(&run_potentials_list(), output, true)?,
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_parse_and_reject_bad_input() {
        assert_eq!(parse_range("0.5:6"), Ok((0.5, 6.0)));
        assert_eq!(parse_range(" 1 : 1 "), Ok((1.0, 1.0)));
        for bad in ["2", "2:1", "a:1", "1:inf", ""] {
            assert!(parse_range(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn every_error_maps_to_its_exit_code() {
        let stalled = QuadratureError::NonConvergence {
            best: 1.0,
            estimate: 1e-3,
            panels: 10,
        };
        let cases: Vec<(Failure, u8)> = vec![
            (BoundError::InvalidRequest("x".into()).into(), 2),
            (
                BoundError::Divergent {
                    integral: "numerator",
                    reason: "x".into(),
                }
                .into(),
                4,
            ),
            (BoundError::Quadrature(stalled.clone()).into(), 5),
            (BoundError::Kernel(KernelError::Quadrature(stalled.clone())).into(), 5),
            (BoundError::Quadrature(QuadratureError::NonFinite { x: 1.0, value: f64::NAN }).into(), 4),
            (BoundError::Kernel(KernelError::SpecFun(SpecFunError::UnsupportedEll(99))).into(), 2),
            (NystromError::NoBoundState.into(), 3),
            (NystromError::InvalidRequest("x".into()).into(), 2),
            (NystromError::Overflow { row: 0, col: 1 }.into(), 4),
            (
                NystromError::NonConvergence {
                    n: 3200,
                    best: 5.0,
                    last_change: 1e-3,
                    trend: vec![],
                }
                .into(),
                5,
            ),
            (NystromError::Quadrature(stalled).into(), 5),
            (
                PotentialError::Validation {
                    invariant: "v(x) >= 0",
                    x: 1.0,
                    value: -1.0,
                }
                .into(),
                3,
            ),
            (PotentialError::UnknownBuiltin("q".into()).into(), 2),
            (TableError::UnknownTable(9).into(), 2),
        ];
        for (failure, want) in cases {
            assert_eq!(failure.code, want, "{}", failure.message);
        }
    }

    #[test]
    fn command_line_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
