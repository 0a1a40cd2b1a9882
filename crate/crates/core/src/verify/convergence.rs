//! Error reports and convergence studies over a range of `N`.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::cases::ManufacturedCase;
use super::condition::linear_slope;
use super::metrics::{divergence_residuals, weighted_l2_error};
use crate::error::{Error, Result};
use crate::maxwell::{build_staggered_spaces, solve_fields, Component, FieldSolution, SolveOptions, WaveMode};

/// Wave speed and permittivity used by the built-in studies.
pub const DEFAULT_SPEED: f64 = 1.0;
pub const DEFAULT_EPS0: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub n: usize,
    /// Weighted L2 errors of `E_x, E_y, E_z`.
    pub err_e: [f64; 3],
    /// Weighted L2 errors of `B_x, B_y, B_z`.
    pub err_b: [f64; 3],
    pub div_e: f64,
    pub div_b: f64,
    /// Largest relative residual over all linear solves.
    pub residual: f64,
    pub e_ranks: Option<[Vec<usize>; 3]>,
    pub b_ranks: Option<[Vec<usize>; 3]>,
    pub peak_tt_bytes: u64,
    pub seconds: Option<f64>,
}

impl ErrorReport {
    /// Root-sum-square of the three electric errors.
    pub fn err_e_total(&self) -> f64 {
        self.err_e.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    /// Root-sum-square of the three magnetic errors.
    pub fn err_b_total(&self) -> f64 {
        self.err_b.iter().map(|e| e * e).sum::<f64>().sqrt()
    }

    /// One line of [`CSV_HEADER`] columns, without the trailing newline.
    pub fn to_csv_row(&self) -> String {
        let secs = self.seconds.map(|s| format!("{s:.6e}")).unwrap_or_default();
        format!(
            "{},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{:.6e},{},{}",
            self.n,
            self.err_e[0],
            self.err_e[1],
            self.err_e[2],
            self.err_b_total(),
            self.div_e,
            self.div_b,
            self.residual,
            self.ranks_column(),
            secs
        )
    }

    fn ranks_column(&self) -> String {
        let fmt = |r: &[Vec<usize>; 3]| {
            r.iter().map(|v| v.iter().map(usize::to_string).collect::<Vec<_>>().join("-")).collect::<Vec<_>>().join("/")
        };
        match (&self.e_ranks, &self.b_ranks) {
            (Some(e), Some(b)) => format!("{} {}", fmt(e), fmt(b)),
            _ => String::new(),
        }
    }
}

/// Errors, divergence residuals and solver data of a computed solution.
pub fn evaluate(sol: &FieldSolution, case: &ManufacturedCase) -> Result<ErrorReport> {
    let mut err_e = [0.0; 3];
    let mut err_b = [0.0; 3];
    for c in Component::ALL {
        let k = c.index();
        err_e[k] = weighted_l2_error(&sol.e[k].to_full()?, &case.exact_e(c), &sol.spaces.e_grids(c))?;
        err_b[k] = weighted_l2_error(&sol.b[k].to_full()?, &case.exact_b(c), &sol.spaces.b_grids(c))?;
    }
    // ρ/ε₀ is ∇·E of the exact field whatever ε₀ is
    let div = divergence_residuals(sol, &case.rho(1.0).to_scalar_field())?;
    let residual = sol.meta.e_residuals.iter().chain(sol.meta.b_residuals.iter()).fold(0.0f64, |a, &b| a.max(b));
    Ok(ErrorReport {
        n: sol.meta.n,
        err_e,
        err_b,
        div_e: div.div_e,
        div_b: div.div_b,
        residual,
        e_ranks: sol.meta.e_ranks.clone(),
        b_ranks: sol.meta.b_ranks.clone(),
        peak_tt_bytes: sol.meta.peak_tt_bytes,
        seconds: None,
    })
}

/// Solves `case` at one `N` and evaluates it.
pub fn solve_case(case: &ManufacturedCase, n: usize, opts: &SolveOptions) -> Result<(FieldSolution, ErrorReport)> {
    let s = build_staggered_spaces(n, case.domain)?;
    let sol = solve_fields(&s, &case.maxwell_data(DEFAULT_SPEED, DEFAULT_EPS0), opts)?;
    let report = evaluate(&sol, case)?;
    Ok((sol, report))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub n: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub case: String,
    pub mode: WaveMode,
    pub rows: Vec<ErrorReport>,
    pub failures: Vec<Failure>,
    /// Slope of `ln(err_E)` against `N`; negative for exponential decay.
    pub e_decay: Option<f64>,
    /// Slope of `ln(err_B)` against `N`.
    pub b_decay: Option<f64>,
}

/// Header of [`ConvergenceStudy::to_csv`].
pub const CSV_HEADER: &str = "N,err_Ex,err_Ey,err_Ez,err_B,div_E,div_B,residual,ranks,seconds";

impl ConvergenceStudy {
    /// One row per successful `N`. The `seconds` column is empty unless
    /// timings were recorded, so outputs are reproducible by default.
    pub fn to_csv(&self) -> String {
        let mut out = format!("{CSV_HEADER}\n");
        for r in &self.rows {
            out.push_str(&r.to_csv_row());
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }
}

fn decay(rows: &[ErrorReport], err: impl Fn(&ErrorReport) -> f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> =
        rows.iter().map(|r| (r.n as f64, err(r))).filter(|(_, e)| *e > 0.0).map(|(n, e)| (n, e.ln())).collect();
    if pts.len() < 2 {
        return None;
    }
    let (x, y): (Vec<f64>, Vec<f64>) = pts.into_iter().unzip();
    Some(linear_slope(&x, &y))
}

/// Runs `case` for each `N` in `ns`. Failures at one `N` are recorded and the
/// study continues.
pub fn run_convergence(
    case: &ManufacturedCase,
    ns: &[usize],
    opts: &SolveOptions,
    timings: bool,
) -> Result<ConvergenceStudy> {
    if ns.is_empty() || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument(format!("N values must be strictly increasing, got {ns:?}")));
    }
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for &n in ns {
        let start = Instant::now();
        match solve_case(case, n, opts) {
            Ok((_, mut r)) => {
                if timings {
                    r.seconds = Some(start.elapsed().as_secs_f64());
                }
                rows.push(r);
            }
            Err(e) => failures.push(Failure { n, error: e.to_string() }),
        }
    }
    Ok(ConvergenceStudy {
        case: case.name.clone(),
        mode: opts.mode,
        e_decay: decay(&rows, ErrorReport::err_e_total),
        b_decay: decay(&rows, ErrorReport::err_b_total),
        rows,
        failures,
    })
}
