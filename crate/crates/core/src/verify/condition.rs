//! Condition-number probes for the space-time operators.
//!
//! All operators are built on the reference interval `[-1, 1]` with `c = 1`.
//! `κ` is the 2-norm condition number `σ_max / σ_min`. For the space-time
//! Laplacian both singular values come from power iterations that only apply
//! the operator, its transpose and the fast solver, so no dense matrix is
//! formed. The eigenvalue spectrum is reported alongside.

use nalgebra::{Complex, DMatrix};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::chebyshev::{
    diff_matrix, make_grid, restrict, second_diff, space_interior, time_interior, GridSpec, NodeKind,
};
use crate::error::{Error, Result};
use crate::kron::{KronOp, KronTerm};
use crate::maxwell::SpaceTimeSolver;
use crate::tensor::Tensor4;
use crate::tt::linalg::svd;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OperatorKind {
    /// Space-time Laplacian `⟨S_t⟩² ⊗ I − Σ_a I ⊗ ⟨S_aa⟩`.
    ALap,
    /// Magnetic time operator; its conditioning is that of `⟨S_t⟩`.
    ACurl,
    /// Interior time derivative `⟨S_t⟩`.
    StInt,
}

impl OperatorKind {
    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::ALap => "a_lap",
            OperatorKind::ACurl => "a_curl",
            OperatorKind::StInt => "s_t_int",
        }
    }
}

impl std::str::FromStr for OperatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "a_lap" => Ok(OperatorKind::ALap),
            "a_curl" => Ok(OperatorKind::ACurl),
            "s_t_int" => Ok(OperatorKind::StInt),
            _ => Err(Error::InvalidArgument(format!("unknown operator {s:?}, expected a_lap, a_curl or s_t_int"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConditionEntry {
    pub n: usize,
    pub kappa: f64,
    /// Smallest real part over the eigenvalues of `⟨S_t⟩`.
    pub min_re_lambda: f64,
    /// `max|λ| / min|λ|` over the operator's eigenvalues.
    pub eigen_ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionReport {
    pub op: OperatorKind,
    pub entries: Vec<ConditionEntry>,
    /// Least-squares slope of `log κ` against `log N`.
    pub slope: f64,
}

impl ConditionReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("N,kappa,min_re_lambda\n");
        for e in &self.entries {
            out.push_str(&format!("{},{:.6e},{:.6e}\n", e.n, e.kappa, e.min_re_lambda));
        }
        out.push_str(&format!("slope,{:.6e},\n", self.slope));
        out
    }
}

/// 2-norm condition number of a dense matrix.
pub fn dense_condition_number(m: &DMatrix<f64>) -> Result<f64> {
    if m.is_empty() {
        return Err(Error::InvalidArgument("condition number of an empty matrix".into()));
    }
    let s = svd(m).s;
    let (hi, lo) = (s[0], s[s.len() - 1]);
    if lo == 0.0 {
        return Err(Error::Singular("matrix has a zero singular value".into()));
    }
    Ok(hi / lo)
}

fn check_n(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::InvalidGrid(format!("condition probes need N >= 3, got {n}")));
    }
    Ok(())
}

/// `⟨S_t⟩` and the interior second derivative on `[-1, 1]` with `N + 1` nodes.
fn reference_factors(n: usize) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let g = make_grid(GridSpec::new(NodeKind::Lobatto, n + 1, (-1.0, 1.0)))?;
    let d = diff_matrix(&g)?;
    let (it, is) = (time_interior(n + 1), space_interior(n + 1));
    Ok((restrict(d.entries(), &it, &it)?, restrict(&second_diff(&d), &is, &is)?))
}

fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    m.complex_eigenvalues().iter().copied().collect()
}

fn eigen_ratio(values: impl Iterator<Item = f64>) -> f64 {
    let (lo, hi) = values.fold((f64::INFINITY, 0.0f64), |(lo, hi), a| (lo.min(a), hi.max(a)));
    hi / lo
}

const POWER_TOL: f64 = 1e-10;
const POWER_MAX_ITERS: usize = 5000;

/// Largest eigenvalue of a symmetric positive semi-definite map by power iteration.
fn power_iteration(shape: [usize; 4], seed: u64, mut apply: impl FnMut(&Tensor4) -> Result<Tensor4>) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut x = Tensor4::from_fn(shape, |_| rng.random_range(-1.0..1.0));
    x = x.scaled(1.0 / x.norm());
    let mut est = 0.0;
    for _ in 0..POWER_MAX_ITERS {
        let y = apply(&x)?;
        let next = x.dot(&y)?;
        let ny = y.norm();
        if ny == 0.0 {
            return Ok(0.0);
        }
        x = y.scaled(1.0 / ny);
        if (next - est).abs() <= POWER_TOL * next.abs() {
            return Ok(next);
        }
        est = next;
    }
    Ok(est)
}

fn a_lap(n: usize) -> Result<ConditionEntry> {
    let (st, l) = reference_factors(n)?;
    let t2 = &st * &st;
    let (nt, ns) = (st.nrows(), l.nrows());
    let eye = |k: usize| DMatrix::<f64>::identity(k, k);
    let mut terms = vec![KronTerm::new(1.0, [t2.clone(), eye(ns), eye(ns), eye(ns)])];
    for a in 1..4 {
        let mut f = [eye(nt), eye(ns), eye(ns), eye(ns)];
        f[a] = l.clone();
        terms.push(KronTerm::new(-1.0, f));
    }
    let op = KronOp::new(terms)?;
    let op_t = op.transpose();
    let solver = SpaceTimeSolver::new(&t2, &[l.clone(), l.clone(), l.clone()], 1.0)?;
    let lt = l.transpose();
    let solver_t = SpaceTimeSolver::new(&t2.transpose(), &[lt.clone(), lt.clone(), lt], 1.0)?;
    let shape = op.in_shape();

    let top = power_iteration(shape, 1, |x| op_t.apply(&op.apply(x)?))?;
    let inv = power_iteration(shape, 2, |x| solver.solve(&solver_t.solve(x)?))?;
    if inv <= 0.0 {
        return Err(Error::Singular("space-time Laplacian".into()));
    }

    let lam_t = eigenvalues(&st);
    let mu: Vec<f64> = eigenvalues(&l).iter().map(|z| z.re).collect();
    let mut mags = Vec::with_capacity(nt * ns * ns * ns);
    for lt in &lam_t {
        let l2 = lt * lt;
        for &a in &mu {
            for &b in &mu {
                for &c in &mu {
                    mags.push((l2 - Complex::new(a + b + c, 0.0)).norm());
                }
            }
        }
    }
    Ok(ConditionEntry {
        n,
        kappa: (top * inv).sqrt(),
        min_re_lambda: lam_t.iter().map(|z| z.re).fold(f64::INFINITY, f64::min),
        eigen_ratio: eigen_ratio(mags.into_iter()),
    })
}

fn time_only(n: usize) -> Result<ConditionEntry> {
    let (st, _) = reference_factors(n)?;
    let lam = eigenvalues(&st);
    Ok(ConditionEntry {
        n,
        kappa: dense_condition_number(&st)?,
        min_re_lambda: lam.iter().map(|z| z.re).fold(f64::INFINITY, f64::min),
        eigen_ratio: eigen_ratio(lam.iter().map(|z| z.norm())),
    })
}

pub fn condition_number(op: OperatorKind, n: usize) -> Result<ConditionEntry> {
    check_n(n)?;
    match op {
        OperatorKind::ALap => a_lap(n),
        OperatorKind::ACurl | OperatorKind::StInt => time_only(n),
    }
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_slope(&lx, &ly)
}

pub(crate) fn linear_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

pub fn condition_study(op: OperatorKind, ns: &[usize]) -> Result<ConditionReport> {
    if ns.len() < 2 || ns.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("need at least two strictly increasing N values".into()));
    }
    let entries = ns.iter().map(|&n| condition_number(op, n)).collect::<Result<Vec<_>>>()?;
    let x: Vec<f64> = ns.iter().map(|&n| n as f64).collect();
    let y: Vec<f64> = entries.iter().map(|e| e.kappa).collect();
    Ok(ConditionReport { op, entries, slope: loglog_slope(&x, &y) })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_perfectly_conditioned() {
        assert!((dense_condition_number(&DMatrix::identity(5, 5)).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn matrix_free_kappa_matches_dense_svd() {
        let n = 5;
        let (st, l) = reference_factors(n).unwrap();
        let (nt, ns) = (st.nrows(), l.nrows());
        let eye = |k: usize| DMatrix::<f64>::identity(k, k);
        let mut terms = vec![KronTerm::new(1.0, [&st * &st, eye(ns), eye(ns), eye(ns)])];
        for a in 1..4 {
            let mut f = [eye(nt), eye(ns), eye(ns), eye(ns)];
            f[a] = l.clone();
            terms.push(KronTerm::new(-1.0, f));
        }
        let dense = KronOp::new(terms).unwrap().to_dense().unwrap();
        let want = dense_condition_number(&dense).unwrap();
        let got = condition_number(OperatorKind::ALap, n).unwrap().kappa;
        assert!((got - want).abs() < 1e-6 * want, "{got} vs {want}");
    }

    #[test]
    fn time_derivative_spectrum_is_in_right_half_plane() {
        for n in 4..=32 {
            let e = condition_number(OperatorKind::StInt, n).unwrap();
            assert!(e.min_re_lambda > 0.0, "N={n}: {}", e.min_re_lambda);
            assert!(e.kappa >= 1.0);
        }
    }

    #[test]
    fn csv_has_slope_row() {
        let r = condition_study(OperatorKind::StInt, &[4, 6, 8]).unwrap();
        let csv = r.to_csv();
        assert!(csv.starts_with("N,kappa,min_re_lambda\n"));
        assert!(csv.lines().last().unwrap().starts_with("slope,"));
        assert_eq!(csv.lines().count(), 5);
    }

    #[test]
    fn operator_names_round_trip() {
        for op in [OperatorKind::ALap, OperatorKind::ACurl, OperatorKind::StInt] {
            assert_eq!(op.name().parse::<OperatorKind>().unwrap(), op);
        }
    }
}
