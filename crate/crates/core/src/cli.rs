//! Command-line front end.
//!
//! Four subcommands: `solve` one case at one `N`, `converge` over a list of
//! `N`, `condnum` for the operator condition numbers and `compare` for full
//! against TT. Results are written as CSV (default) or JSON, to `--out` or
//! to stdout. Exit status is 0 on success, 2 on usage errors and 1 when a
//! solve fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::maxwell::{Component, ExportFormat, Field, SolveOptions, WaveMode};
use crate::verify::{
    builtin_case, condition_study, run_convergence, solve_case, ErrorReport, ManufacturedCase, OperatorKind,
    CASE_NAMES, CSV_HEADER,
};

#[derive(Debug, Parser)]
#[command(name = "stmaxwell", version, about = "Space-time spectral Maxwell solver (full grid and tensor train)")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve one case at one N and report errors.
    Solve {
        #[command(flatten)]
        solver: SolverArgs,
        /// Polynomial degree N (at least 3).
        #[arg(long)]
        n: usize,
        /// Also export the six field components into this directory.
        #[arg(long)]
        export: Option<PathBuf>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Convergence study over several N.
    Converge {
        #[command(flatten)]
        solver: SolverArgs,
        /// Comma-separated, strictly increasing list of N.
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        /// Fill the seconds column (makes the output machine dependent).
        #[arg(long)]
        timings: bool,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Condition numbers of a space-time operator and their log-log slope.
    Condnum {
        /// Operator to probe.
        #[arg(long, value_enum)]
        op: OpArg,
        /// Comma-separated, strictly increasing list of N.
        #[arg(long, value_delimiter = ',', required = true)]
        ns: Vec<usize>,
        #[command(flatten)]
        output: OutputArgs,
    },
    /// Solve one case in both modes and report their difference.
    Compare {
        #[command(flatten)]
        solver: SolverArgs,
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        output: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
pub struct SolverArgs {
    /// Built-in manufactured solution: ex1, ex2 or ex3.
    #[arg(long, default_value = "ex1")]
    pub case: String,
    /// Storage of the solve (ignored by `compare`, which runs both).
    #[arg(long, value_enum, default_value_t = ModeArg::Full)]
    pub mode: ModeArg,
    /// Tolerance for cross interpolation, rounding and the TT solver.
    #[arg(long, default_value_t = 1e-10)]
    pub tt_tol: f64,
    /// Largest TT rank allowed in cross interpolation and in the solver.
    #[arg(long)]
    pub max_rank: Option<usize>,
    /// Sweep limit of the TT solver.
    #[arg(long)]
    pub sweeps: Option<usize>,
    /// Seed of the cross-interpolation sampler.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    pub format: FormatArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Full,
    Tt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OpArg {
    #[value(name = "a_lap")]
    ALap,
    #[value(name = "a_curl")]
    ACurl,
    #[value(name = "s_t_int")]
    StInt,
}

impl From<OpArg> for OperatorKind {
    fn from(op: OpArg) -> Self {
        match op {
            OpArg::ALap => OperatorKind::ALap,
            OpArg::ACurl => OperatorKind::ACurl,
            OpArg::StInt => OperatorKind::StInt,
        }
    }
}

/// Validated settings shared by the solving subcommands.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub case: ManufacturedCase,
    pub opts: SolveOptions,
}

impl RunConfig {
    pub fn from_args(a: &SolverArgs, mode: WaveMode) -> Result<Self> {
        let case = builtin_case(&a.case)?;
        if !(a.tt_tol > 0.0 && a.tt_tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("--tt-tol must be positive, got {}", a.tt_tol)));
        }
        let mut opts = match mode {
            WaveMode::Full => SolveOptions::full(),
            WaveMode::Tt => SolveOptions::tt(a.tt_tol),
        };
        opts.cross.seed = a.seed;
        if let Some(r) = a.max_rank {
            opts.cross.max_rank = r;
            opts.amen.max_rank = r;
            opts.cross.initial_rank = opts.cross.initial_rank.min(r);
        }
        if let Some(s) = a.sweeps {
            opts.amen.max_sweeps = s;
        }
        opts.cross.validate()?;
        opts.amen.validate()?;
        Ok(Self { case, opts })
    }
}

fn wave_mode(m: ModeArg) -> WaveMode {
    match m {
        ModeArg::Full => WaveMode::Full,
        ModeArg::Tt => WaveMode::Tt,
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidArgument(format!("N must be at least 3, got {n}")));
    }
    Ok(())
}

/// A failure with the exit code it maps to.
#[derive(Debug)]
struct Failure {
    code: i32,
    message: String,
}

impl Failure {
    fn usage(e: impl std::fmt::Display) -> Self {
        Self { code: 2, message: e.to_string() }
    }

    fn solver(e: impl std::fmt::Display) -> Self {
        Self { code: 1, message: e.to_string() }
    }
}

/// Usage errors are caught before any solve starts; everything after that is
/// a solver failure.
fn usage<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::usage)
}

fn solver<T>(r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(Failure::solver)
}

fn emit(out: &OutputArgs, body: &str) -> std::result::Result<(), Failure> {
    match &out.out {
        Some(path) => std::fs::write(path, body).map_err(|e| Failure::solver(format!("{}: {e}", path.display()))),
        None => std::io::stdout().write_all(body.as_bytes()).map_err(Failure::solver),
    }
}

fn to_json<T: Serialize>(v: &T) -> std::result::Result<String, Failure> {
    serde_json::to_string_pretty(v).map(|s| s + "\n").map_err(Failure::solver)
}

fn report_csv(r: &ErrorReport) -> String {
    format!("{CSV_HEADER}\n{}\n", r.to_csv_row())
}

#[derive(Serialize)]
struct Comparison {
    case: String,
    n: usize,
    tt_tol: f64,
    full: ErrorReport,
    tt: ErrorReport,
    /// Relative difference of the two solutions per field, `E_x .. B_z`.
    difference: [f64; 6],
    max_difference: f64,
}

const COMPARE_HEADER: &str = "field,err_full,err_tt,difference";

impl Comparison {
    fn to_csv(&self) -> String {
        let mut out = format!("{COMPARE_HEADER}\n");
        let errs = [(&self.full.err_e, &self.tt.err_e), (&self.full.err_b, &self.tt.err_b)];
        for (j, (name, (ef, et))) in ["E", "B"].into_iter().zip(errs).enumerate() {
            for c in Component::ALL {
                let k = c.index();
                let d = self.difference[3 * j + k];
                out.push_str(&format!("{name}_{},{:.6e},{:.6e},{d:.6e}\n", c.name(), ef[k], et[k]));
            }
        }
        out
    }
}

fn relative_difference(a: &Field, b: &Field) -> Result<f64> {
    let (a, b) = (a.to_full()?, b.to_full()?);
    let na = a.norm();
    let d = a.sub(&b)?.norm();
    Ok(if na > 0.0 { d / na } else { d })
}

fn run(cli: Cli) -> std::result::Result<(), Failure> {
    match cli.command {
        Command::Solve { solver: args, n, export, output } => {
            usage(check_n(n))?;
            let cfg = usage(RunConfig::from_args(&args, wave_mode(args.mode)))?;
            let (sol, report) = solver(solve_case(&cfg.case, n, &cfg.opts))?;
            if let Some(dir) = export {
                let fmt = match cfg.opts.mode {
                    WaveMode::Full => ExportFormat::Raw,
                    WaveMode::Tt => ExportFormat::Tt,
                };
                solver(sol.export(&dir, fmt))?;
            }
            let body = match output.format {
                FormatArg::Csv => report_csv(&report),
                FormatArg::Json => to_json(&report)?,
            };
            emit(&output, &body)
        }
        Command::Converge { solver: args, ns, timings, output } => {
            for &n in &ns {
                usage(check_n(n))?;
            }
            let cfg = usage(RunConfig::from_args(&args, wave_mode(args.mode)))?;
            let study = usage(run_convergence(&cfg.case, &ns, &cfg.opts, timings))?;
            let body = match output.format {
                FormatArg::Csv => study.to_csv(),
                FormatArg::Json => to_json(&study)?,
            };
            emit(&output, &body)?;
            match study.failures.first() {
                None => Ok(()),
                Some(f) => Err(Failure::solver(format!(
                    "{} of {} solves failed; first at N={}: {}",
                    study.failures.len(),
                    ns.len(),
                    f.n,
                    f.error
                ))),
            }
        }
        Command::Condnum { op, ns, output } => {
            for &n in &ns {
                usage(check_n(n))?;
            }
            if ns.len() < 2 || ns.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Failure::usage("--ns needs at least two strictly increasing values"));
            }
            let report = solver(condition_study(op.into(), &ns))?;
            let body = match output.format {
                FormatArg::Csv => report.to_csv(),
                FormatArg::Json => to_json(&report)?,
            };
            emit(&output, &body)
        }
        Command::Compare { solver: args, n, output } => {
            usage(check_n(n))?;
            let full_cfg = usage(RunConfig::from_args(&args, WaveMode::Full))?;
            let tt_cfg = usage(RunConfig::from_args(&args, WaveMode::Tt))?;
            let (fs, fr) = solver(solve_case(&full_cfg.case, n, &full_cfg.opts))?;
            let (ts, tr) = solver(solve_case(&tt_cfg.case, n, &tt_cfg.opts))?;
            let mut difference = [0.0; 6];
            for k in 0..3 {
                difference[k] = solver(relative_difference(&fs.e[k], &ts.e[k]))?;
                difference[3 + k] = solver(relative_difference(&fs.b[k], &ts.b[k]))?;
            }
            let cmp = Comparison {
                case: full_cfg.case.name.clone(),
                n,
                tt_tol: args.tt_tol,
                max_difference: difference.iter().copied().fold(0.0, f64::max),
                full: fr,
                tt: tr,
                difference,
            };
            let body = match output.format {
                FormatArg::Csv => cmp.to_csv(),
                FormatArg::Json => to_json(&cmp)?,
            };
            emit(&output, &body)?;
            eprintln!("max relative difference full vs tt: {:.3e}", cmp.max_difference);
            Ok(())
        }
    }
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code. Diagnostics go to stderr as a single line.
pub fn parse_and_run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            // --help and --version also arrive here, with exit code 0
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(f) => {
            eprintln!("error: {}", f.message);
            f.code
        }
    }
}

/// Column names of the `converge` and `solve` CSV output.
pub fn csv_header() -> &'static str {
    CSV_HEADER
}

/// Names accepted by `--case`.
pub fn case_names() -> &'static [&'static str] {
    &CASE_NAMES
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(args: &[&str]) -> i32 {
        parse_and_run(std::iter::once("stmaxwell").chain(args.iter().copied()))
    }

    #[test]
    fn usage_errors_exit_with_two() {
        assert_eq!(code(&["solve", "--case", "ex9", "--n", "4"]), 2);
        assert_eq!(code(&["solve", "--n", "2"]), 2);
        assert_eq!(code(&["solve", "--n", "4", "--bogus"]), 2);
        assert_eq!(code(&["solve", "--n", "4", "--mode", "tt", "--tt-tol", "0"]), 2);
        assert_eq!(code(&["converge", "--ns", "8,6"]), 2);
        assert_eq!(code(&["condnum", "--op", "a_lap", "--ns", "4"]), 2);
        assert_eq!(code(&["frobnicate"]), 2);
    }

    #[test]
    fn help_succeeds() {
        assert_eq!(code(&["--help"]), 0);
        assert_eq!(code(&["converge", "--help"]), 0);
    }

    #[test]
    fn help_documents_every_flag() {
        use clap::CommandFactory;
        let mut cmd = Cli::command();
        for sub in ["solve", "converge", "compare"] {
            let help = cmd.find_subcommand_mut(sub).unwrap().render_long_help().to_string();
            for flag in ["--case", "--mode", "--tt-tol", "--max-rank", "--sweeps", "--seed", "--out", "--format"] {
                assert!(help.contains(flag), "{sub} help lacks {flag}");
            }
        }
    }

    #[test]
    fn solve_writes_csv_row() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("r.csv");
        assert_eq!(code(&["solve", "--case", "ex1", "--n", "6", "--out", out.to_str().unwrap()]), 0);
        let text = std::fs::read_to_string(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some(csv_header()));
        assert!(lines.next().unwrap().starts_with("6,"));
        assert_eq!(lines.next(), None);
    }

    #[test]
    fn run_config_applies_overrides() {
        let args = SolverArgs {
            case: "ex2".into(),
            mode: ModeArg::Tt,
            tt_tol: 1e-9,
            max_rank: Some(12),
            sweeps: Some(7),
            seed: 5,
        };
        let cfg = RunConfig::from_args(&args, WaveMode::Tt).unwrap();
        assert_eq!(cfg.case.name, "ex2");
        assert_eq!((cfg.opts.cross.max_rank, cfg.opts.amen.max_rank, cfg.opts.amen.max_sweeps), (12, 12, 7));
        assert_eq!(cfg.opts.cross.seed, 5);
        assert_eq!(cfg.opts.amen.tol, 1e-9);
        assert!(case_names().contains(&"ex3"));
    }
}
