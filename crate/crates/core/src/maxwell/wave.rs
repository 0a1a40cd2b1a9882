//! Space-time wave systems for one electric component.
//!
//! Unknowns live on the all-Lobatto grid with the initial time layer and the
//! spatial walls removed: `N · (N-1)³` values. Writing `T = ⟨S_t⟩` for the
//! time derivative restricted to `t > 0` and `L_a` for the interior second
//! derivative along axis `a`, the system is
//!
//! ```text
//! (T² ⊗ I − c² Σ_a I ⊗ L_a) v̂ = f − W g − S_t(I_t, 0) ⊗ v_t⁰
//! ```
//!
//! where `g` holds the known data (initial layer and wall values, zero
//! elsewhere) and `W` is the same operator with full columns, so `W g`
//! collects every coupling between unknowns and data.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::solution::Field;
use super::spaces::{point, StaggeredSpaces};
use super::{eval_checked, Component, ScalarField};
use crate::chebyshev::{diff_matrix, restrict, second_diff, space_interior, time_interior, Grid};
use crate::error::{Error, Result};
use crate::kron::{KronOp, KronTerm};
use crate::limits::check_f64_alloc;
use crate::tensor::Tensor4;
use crate::tt::linalg::svd;
use crate::tt::{amen_solve, tt_cross, AmenConfig, CrossConfig, StopReason, TtMatrix, TtTensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WaveMode {
    Full,
    Tt,
}

/// Scalar wave problem `v_tt − c² Δv = f` for one electric component.
///
/// `boundary` supplies wall values and must be defined on the whole box
/// (TT assembly samples it everywhere and masks the interior away).
/// `initial` and `initial_t` are evaluated at the initial time.
#[derive(Clone)]
pub struct WaveProblem {
    pub component: Component,
    pub c: f64,
    pub eps0: f64,
    pub source: ScalarField,
    pub boundary: ScalarField,
    pub boundary_t: ScalarField,
    pub initial: ScalarField,
    pub initial_t: ScalarField,
}

impl std::fmt::Debug for WaveProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("WaveProblem")
            .field("component", &self.component)
            .field("c", &self.c)
            .field("eps0", &self.eps0)
            .finish_non_exhaustive()
    }
}

impl WaveProblem {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::InvalidArgument(format!("wave speed must be positive, got {}", self.c)));
        }
        if !(self.eps0 > 0.0 && self.eps0.is_finite()) {
            return Err(Error::InvalidArgument(format!("permittivity must be positive, got {}", self.eps0)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct DiscreteWaveSystem {
    mode: WaveMode,
    component: Component,
    c: f64,
    grids: [Arc<Grid>; 4],
    interior: [Vec<usize>; 4],
    st: DMatrix<f64>,
    st_int: DMatrix<f64>,
    st_col0: Vec<f64>,
    spatial: [DMatrix<f64>; 3],
    operator: KronOp,
    operator_tt: Option<TtMatrix>,
    rhs: Field,
    data: Field,
    round_tol: f64,
    assembly_bytes: u64,
    cross_evaluations: usize,
}

impl DiscreteWaveSystem {
    pub fn mode(&self) -> WaveMode {
        self.mode
    }

    pub fn component(&self) -> Component {
        self.component
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    pub fn grids(&self) -> &[Arc<Grid>; 4] {
        &self.grids
    }

    /// Interior index sets `(I_t, I_x, I_y, I_z)`.
    pub fn interior(&self) -> &[Vec<usize>; 4] {
        &self.interior
    }

    pub fn interior_shape(&self) -> [usize; 4] {
        [0, 1, 2, 3].map(|a| self.interior[a].len())
    }

    pub fn full_shape(&self) -> [usize; 4] {
        self.grids.clone().map(|g| g.len())
    }

    /// The space-time operator as a Kronecker sum.
    pub fn operator(&self) -> &KronOp {
        &self.operator
    }

    pub fn operator_tt(&self) -> Option<&TtMatrix> {
        self.operator_tt.as_ref()
    }

    pub fn rhs(&self) -> &Field {
        &self.rhs
    }

    /// Known values: initial layer and walls, zero on the unknowns.
    pub fn data(&self) -> &Field {
        &self.data
    }

    /// Time derivative restricted to `t > 0`, `⟨S_t⟩`.
    pub fn time_operator(&self) -> &DMatrix<f64> {
        &self.st_int
    }

    /// Time derivative on all Lobatto nodes, `S_t`.
    pub fn time_derivative(&self) -> &DMatrix<f64> {
        &self.st
    }

    pub fn spatial_operators(&self) -> &[DMatrix<f64>; 3] {
        &self.spatial
    }

    /// Bytes held by the TT objects built during assembly (0 in full mode).
    pub fn assembly_bytes(&self) -> u64 {
        self.assembly_bytes
    }

    pub fn cross_evaluations(&self) -> usize {
        self.cross_evaluations
    }

    /// Fast solver for this system's operator.
    pub fn solver(&self) -> Result<SpaceTimeSolver> {
        SpaceTimeSolver::new(&(&self.st_int * &self.st_int), &self.spatial, self.c * self.c)
    }
}

fn interior_sets(n_plus_1: usize) -> [Vec<usize>; 4] {
    [time_interior(n_plus_1), space_interior(n_plus_1), space_interior(n_plus_1), space_interior(n_plus_1)]
}

fn sample(grids: &[Arc<Grid>; 4], keep: &[Vec<usize>; 4], f: &ScalarField, what: &str) -> Result<Tensor4> {
    let shape = [keep[0].len(), keep[1].len(), keep[2].len(), keep[3].len()];
    Tensor4::try_from_fn(shape, |[i, j, k, l]| {
        eval_checked(f, point(grids, [keep[0][i], keep[1][j], keep[2][k], keep[3][l]]), what)
    })
}

fn cross_sample(
    grids: &[Arc<Grid>; 4],
    keep: &[Vec<usize>; 4],
    f: &ScalarField,
    what: &str,
    cfg: &CrossConfig,
    evaluations: &mut usize,
) -> Result<TtTensor> {
    let modes: Vec<usize> = keep.iter().map(Vec::len).collect();
    let res = tt_cross(
        |idx: &[usize]| eval_checked(f, point(grids, [0, 1, 2, 3].map(|a| keep[a][idx[a]])), what),
        &modes,
        cfg,
    )?;
    *evaluations += res.evaluations;
    Ok(res.tt)
}

/// Builds the space-time system for `p` on the all-Lobatto grids of `s`.
///
/// In TT mode the source and data are sampled by cross interpolation with
/// `cross`, whose tolerance also drives the rounding of the right-hand side.
pub fn assemble_wave_system(
    p: &WaveProblem,
    s: &StaggeredSpaces,
    mode: WaveMode,
    cross: &CrossConfig,
) -> Result<DiscreteWaveSystem> {
    p.validate()?;
    let grids = s.wave_grids();
    let np1 = s.n() + 1;
    let interior = interior_sets(np1);
    let all: Vec<usize> = (0..np1).collect();
    let c2 = p.c * p.c;

    let st = diff_matrix(&grids[0])?.into_entries();
    let st_int = restrict(&st, &interior[0], &interior[0])?;
    let st_rows = restrict(&st, &interior[0], &all)?;
    let st_col0: Vec<f64> = interior[0].iter().map(|&i| st[(i, 0)]).collect();
    let full2: Vec<DMatrix<f64>> =
        (1..4).map(|a| diff_matrix(&grids[a]).map(|d| second_diff(&d))).collect::<Result<_>>()?;
    let spatial = [
        restrict(&full2[0], &interior[1], &interior[1])?,
        restrict(&full2[1], &interior[2], &interior[2])?,
        restrict(&full2[2], &interior[3], &interior[3])?,
    ];

    let eye = |k: usize| DMatrix::<f64>::identity(k, k);
    let (nt, ns) = (interior[0].len(), interior[1].len());
    let mut terms = vec![KronTerm::new(1.0, [&st_int * &st_int, eye(ns), eye(ns), eye(ns)])];
    for a in 0..3 {
        let mut f = [eye(nt), eye(ns), eye(ns), eye(ns)];
        f[a + 1] = spatial[a].clone();
        terms.push(KronTerm::new(-c2, f));
    }
    let operator = KronOp::new(terms)?;

    // same operator with full columns, acting on the data tensor
    let pick = |keep: &[usize]| restrict(&DMatrix::identity(np1, np1), keep, &all);
    let (pt, ps) = (pick(&interior[0])?, pick(&interior[1])?);
    let mut wterms = vec![KronTerm::new(1.0, [&st_int * &st_rows, ps.clone(), ps.clone(), ps.clone()])];
    for a in 0..3 {
        let mut f = [pt.clone(), ps.clone(), ps.clone(), ps.clone()];
        f[a + 1] = restrict(&full2[a], &interior[a + 1], &all)?;
        wterms.push(KronTerm::new(-c2, f));
    }
    let coupling = KronOp::new(wterms)?;

    let full_keep = [all.clone(), all.clone(), all.clone(), all.clone()];
    let int_space = [vec![0], interior[1].clone(), interior[2].clone(), interior[3].clone()];

    let (rhs, data, operator_tt, assembly_bytes, evals) = match mode {
        WaveMode::Full => {
            let mut g = sample(&grids, &full_keep, &p.boundary, "boundary data")?;
            let inner = Tensor4::zeros([nt, ns, ns, ns]);
            inner.scatter_into(&mut g, &interior)?;
            let g0 = sample(&grids, &[vec![0], all.clone(), all.clone(), all.clone()], &p.initial, "initial data")?;
            g0.scatter_into(&mut g, &[vec![0], all.clone(), all.clone(), all.clone()])?;

            let mut rhs = sample(&grids, &interior, &p.source, "source")?;
            rhs.axpy(-1.0, &coupling.apply(&g)?)?;
            let vt0 = sample(&grids, &int_space, &p.initial_t, "initial velocity")?;
            let col = DMatrix::from_column_slice(nt, 1, &st_col0);
            rhs.axpy(-1.0, &vt0.mode_apply(0, &col)?)?;
            (Field::Full(rhs), Field::Full(g), None, 0, 0)
        }
        WaveMode::Tt => {
            let mut evals = 0;
            let f = cross_sample(&grids, &interior, &p.source, "source", cross, &mut evals)?;
            let vbd = cross_sample(&grids, &full_keep, &p.boundary, "boundary data", cross, &mut evals)?;
            let v0 = cross_sample(
                &grids,
                &[vec![0], all.clone(), all.clone(), all.clone()],
                &p.initial,
                "initial data",
                cross,
                &mut evals,
            )?
            .pad_mode(0, &[0], np1)?;
            let vt0 = cross_sample(&grids, &int_space, &p.initial_t, "initial velocity", cross, &mut evals)?
                .select_mode(0, &vec![0; nt])?
                .mask_mode(0, &st_col0)?;

            let mut later = vec![1.0; np1];
            later[0] = 0.0;
            let inner: Vec<f64> = (0..np1).map(|i| if i == 0 || i == np1 - 1 { 0.0 } else { 1.0 }).collect();
            let walls_later = vbd.mask_mode(0, &later)?;
            let inside = walls_later.mask_mode(1, &inner)?.mask_mode(2, &inner)?.mask_mode(3, &inner)?;
            let g = v0.add(&walls_later)?.sub(&inside)?.round(cross.tol * 1e-2);

            let w = TtMatrix::from_kron(&coupling)?;
            let a = TtMatrix::from_kron(&operator)?;
            let wg = w.apply(&g)?;
            let rhs = f.sub(&wg)?.sub(&vt0)?.round(cross.tol * 1e-2);
            let bytes = [&f, &vbd, &v0, &vt0, &g, &wg, &rhs].iter().map(|t| t.storage_bytes()).sum::<u64>()
                + w.storage_bytes()
                + a.storage_bytes();
            (Field::Tt(rhs), Field::Tt(g), Some(a), bytes, evals)
        }
    };

    Ok(DiscreteWaveSystem {
        mode,
        component: p.component,
        c: p.c,
        grids,
        interior,
        st,
        st_int,
        st_col0,
        spatial,
        operator,
        operator_tt,
        rhs,
        data,
        round_tol: cross.tol * 1e-2,
        assembly_bytes,
        cross_evaluations: evals,
    })
}

/// Eigenbasis of one spatial factor.
#[derive(Debug, Clone)]
struct SpatialBasis {
    values: Vec<f64>,
    vectors: DMatrix<f64>,
    inverse: DMatrix<f64>,
    condition: f64,
}

/// Largest eigenvector-basis condition number accepted by the fast solver.
pub const MAX_BASIS_CONDITION: f64 = 1e8;

fn spatial_basis(m: &DMatrix<f64>) -> Result<SpatialBasis> {
    let n = m.nrows();
    let eig = m.complex_eigenvalues();
    let scale = eig.iter().fold(0.0f64, |s, z| s.max(z.norm()));
    if eig.iter().any(|z| z.im.abs() > 1e-8 * scale.max(1.0)) {
        return Err(Error::IllConditioned("spatial factor has a complex spectrum".into()));
    }
    let mut values: Vec<f64> = eig.iter().map(|z| z.re).collect();
    values.sort_by(f64::total_cmp);
    let mut vectors = DMatrix::zeros(n, n);
    for (j, &lam) in values.iter().enumerate() {
        let shifted = m - DMatrix::identity(n, n) * lam;
        let dec = svd(&shifted);
        let v = dec.vt.row(n - 1).transpose();
        vectors.set_column(j, &v);
    }
    let sv = svd(&vectors).s;
    let condition = sv[0] / sv[n - 1];
    if !(condition.is_finite() && condition <= MAX_BASIS_CONDITION) {
        return Err(Error::IllConditioned(format!("spatial eigenbasis condition {condition:.3e}")));
    }
    let inverse =
        vectors.clone().try_inverse().ok_or_else(|| Error::IllConditioned("spatial eigenbasis is singular".into()))?;
    Ok(SpatialBasis { values, vectors, inverse, condition })
}

/// Solver for `T2 ⊗ I − c² Σ_a I ⊗ L_a` that diagonalizes the three spatial
/// factors and solves one small dense system in time per spatial eigen-triple.
#[derive(Debug, Clone)]
pub struct SpaceTimeSolver {
    time: DMatrix<f64>,
    c2: f64,
    bases: [SpatialBasis; 3],
}

impl SpaceTimeSolver {
    pub fn new(time: &DMatrix<f64>, spatial: &[DMatrix<f64>; 3], c2: f64) -> Result<Self> {
        if !time.is_square() || spatial.iter().any(|m| !m.is_square()) {
            return Err(Error::ShapeMismatch("space-time solver needs square factors".into()));
        }
        let b0 = spatial_basis(&spatial[0])?;
        let b1 = if spatial[1] == spatial[0] { b0.clone() } else { spatial_basis(&spatial[1])? };
        let b2 = if spatial[2] == spatial[0] {
            b0.clone()
        } else if spatial[2] == spatial[1] {
            b1.clone()
        } else {
            spatial_basis(&spatial[2])?
        };
        Ok(Self { time: time.clone(), c2, bases: [b0, b1, b2] })
    }

    /// Worst condition number among the spatial eigenvector bases.
    pub fn basis_condition(&self) -> f64 {
        self.bases.iter().map(|b| b.condition).fold(0.0, f64::max)
    }

    pub fn shape(&self) -> [usize; 4] {
        [self.time.nrows(), self.bases[0].values.len(), self.bases[1].values.len(), self.bases[2].values.len()]
    }

    pub fn solve(&self, rhs: &Tensor4) -> Result<Tensor4> {
        if rhs.shape() != self.shape() {
            return Err(Error::ShapeMismatch(format!("rhs {:?} vs operator {:?}", rhs.shape(), self.shape())));
        }
        let mut r = rhs.clone();
        for a in 0..3 {
            r = r.mode_apply(a + 1, &self.bases[a].inverse)?;
        }
        let [nt, nx, ny, nz] = self.shape();
        let spatial = nx * ny * nz;
        let columns: Vec<Vec<f64>> = (0..spatial)
            .into_par_iter()
            .map(|s| {
                let (i, j, k) = (s / (ny * nz), (s / nz) % ny, s % nz);
                let mu = self.bases[0].values[i] + self.bases[1].values[j] + self.bases[2].values[k];
                let m = &self.time - DMatrix::identity(nt, nt) * (self.c2 * mu);
                let b = nalgebra::DVector::from_iterator(nt, (0..nt).map(|t| r.get([t, i, j, k])));
                m.lu()
                    .solve(&b)
                    .map(|y| y.as_slice().to_vec())
                    .ok_or_else(|| Error::Singular(format!("time system for spatial mode ({i},{j},{k})")))
            })
            .collect::<Result<_>>()?;
        let mut out = Tensor4::zeros(self.shape());
        for (s, col) in columns.iter().enumerate() {
            let (i, j, k) = (s / (ny * nz), (s / nz) % ny, s % nz);
            for (t, v) in col.iter().enumerate() {
                out.set([t, i, j, k], *v);
            }
        }
        for a in 0..3 {
            out = out.mode_apply(a + 1, &self.bases[a].vectors)?;
        }
        Ok(out)
    }
}

/// Result of a full-grid solve: interior values and relative residual.
#[derive(Debug, Clone)]
pub struct FullSolve {
    pub x: Tensor4,
    pub residual: f64,
    /// Whether the dense fallback was used.
    pub dense: bool,
}

/// Required relative residual of full-grid solves.
pub const FULL_RESIDUAL_LIMIT: f64 = 1e-8;

pub fn solve_full(sys: &DiscreteWaveSystem) -> Result<FullSolve> {
    let Field::Full(rhs) = &sys.rhs else {
        return Err(Error::InvalidArgument("solve_full needs a full-mode system".into()));
    };
    let (x, dense) = match sys.solver() {
        Ok(solver) => (solver.solve(rhs)?, false),
        Err(Error::IllConditioned(why)) => {
            let n = rhs.len();
            check_f64_alloc("dense fallback for ill-conditioned eigenbasis", (n * n) as u128)
                .map_err(|_| Error::IllConditioned(why.clone()))?;
            let a = sys.operator.to_dense()?;
            let sol = a
                .lu()
                .solve(&nalgebra::DVector::from_column_slice(rhs.data()))
                .ok_or_else(|| Error::Singular("dense space-time operator".into()))?;
            (Tensor4::from_vec(rhs.shape(), sol.as_slice().to_vec())?, true)
        }
        Err(e) => return Err(e),
    };
    let nr = rhs.norm();
    let res = sys.operator.apply(&x)?.sub(rhs)?.norm();
    let residual = if nr > 0.0 { res / nr } else { res };
    if residual > FULL_RESIDUAL_LIMIT {
        return Err(Error::IllConditioned(format!("full solve residual {residual:.3e}")));
    }
    Ok(FullSolve { x, residual, dense })
}

/// Result of a TT solve.
#[derive(Debug, Clone)]
pub struct TtSolve {
    pub x: TtTensor,
    pub residual: f64,
    pub converged: bool,
    pub stop: StopReason,
    pub sweeps: usize,
    pub peak_bytes: u64,
}

pub fn solve_tt(sys: &DiscreteWaveSystem, cfg: &AmenConfig) -> Result<TtSolve> {
    let (Field::Tt(rhs), Some(a)) = (&sys.rhs, &sys.operator_tt) else {
        return Err(Error::InvalidArgument("solve_tt needs a TT-mode system".into()));
    };
    let res = amen_solve(a, rhs, cfg, None)?;
    Ok(TtSolve {
        x: res.x,
        residual: res.residual,
        converged: res.converged,
        stop: res.stop,
        sweeps: res.sweeps,
        peak_bytes: res.peak_bytes + sys.assembly_bytes,
    })
}

/// Time derivative at the unknowns: `⟨S_t⟩ v̂ + S_t(I_t, 0) v⁰`.
pub fn recover_time_derivative(sys: &DiscreteWaveSystem, v_hat: &Field) -> Result<Field> {
    let sp = [sys.interior[1].clone(), sys.interior[2].clone(), sys.interior[3].clone()];
    match (v_hat, &sys.data) {
        (Field::Full(v), Field::Full(g)) => {
            if v.shape() != sys.interior_shape() {
                return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", v.shape(), sys.interior_shape())));
            }
            let g0 = g.gather(&[vec![0], sp[0].clone(), sp[1].clone(), sp[2].clone()])?;
            let col = DMatrix::from_column_slice(sys.st_col0.len(), 1, &sys.st_col0);
            let mut out = v.mode_apply(0, &sys.st_int)?;
            out.axpy(1.0, &g0.mode_apply(0, &col)?)?;
            Ok(Field::Full(out))
        }
        (Field::Tt(v), Field::Tt(g)) => {
            if v.mode_sizes() != sys.interior_shape() {
                return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", v.mode_sizes(), sys.interior_shape())));
            }
            let ns = sp[0].len();
            let eye = DMatrix::identity(ns, ns);
            let dt = TtMatrix::rank1(1.0, &[sys.st_int.clone(), eye.clone(), eye.clone(), eye])?;
            let g0 = g
                .select_mode(0, &vec![0; sys.st_col0.len()])?
                .mask_mode(0, &sys.st_col0)?
                .select_mode(1, &sp[0])?
                .select_mode(2, &sp[1])?
                .select_mode(3, &sp[2])?;
            Ok(Field::Tt(dt.apply(v)?.add(&g0)?.round(sys.round_tol)))
        }
        _ => Err(Error::InvalidArgument("solution and system modes differ".into())),
    }
}

/// Scatters interior values into the data tensor, giving the field on the
/// full Lobatto grid.
pub fn embed_boundary(interior: &Field, sys: &DiscreteWaveSystem) -> Result<Field> {
    match (interior, &sys.data) {
        (Field::Full(v), Field::Full(g)) => {
            let mut out = g.clone();
            v.scatter_into(&mut out, &sys.interior)?;
            Ok(Field::Full(out))
        }
        (Field::Tt(v), Field::Tt(g)) => {
            let full = sys.full_shape();
            let mut x = v.clone();
            for a in 0..4 {
                x = x.pad_mode(a, &sys.interior[a], full[a])?;
            }
            Ok(Field::Tt(x.add(g)?.round(sys.round_tol)))
        }
        _ => Err(Error::InvalidArgument("solution and system modes differ".into())),
    }
}

/// Inverse of [`embed_boundary`] on the unknowns.
pub fn extract_interior(full: &Field, sys: &DiscreteWaveSystem) -> Result<Field> {
    match full {
        Field::Full(v) => Ok(Field::Full(v.gather(&sys.interior)?)),
        Field::Tt(v) => {
            let mut x = v.clone();
            for a in 0..4 {
                x = x.select_mode(a, &sys.interior[a])?;
            }
            Ok(Field::Tt(x))
        }
    }
}

/// Time derivative on the full Lobatto grid: the recovered values at the
/// unknowns, `initial_t` on the initial layer and `boundary_t` on the walls.
pub fn embed_time_derivative(sys: &DiscreteWaveSystem, vt_hat: &Tensor4, p: &WaveProblem) -> Result<Tensor4> {
    let full = sys.full_shape();
    let all = [0, 1, 2, 3].map(|a| (0..full[a]).collect::<Vec<_>>());
    let mut out = sample(&sys.grids, &all, &p.boundary_t, "boundary velocity")?;
    let layer = [vec![0], all[1].clone(), all[2].clone(), all[3].clone()];
    sample(&sys.grids, &layer, &p.initial_t, "initial velocity")?.scatter_into(&mut out, &layer)?;
    let keep = [sys.interior[0].clone(), sys.interior[1].clone(), sys.interior[2].clone(), sys.interior[3].clone()];
    vt_hat.scatter_into(&mut out, &keep)?;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxwell::build_staggered_spaces;
    use crate::verify::builtin_case;

    fn ex1_system(n: usize, c: Component, mode: WaveMode) -> DiscreteWaveSystem {
        let case = builtin_case("ex1").unwrap();
        let s = build_staggered_spaces(n, case.domain).unwrap();
        assemble_wave_system(&case.wave_problem(c, 1.0, 1.0), &s, mode, &CrossConfig::new(1e-12)).unwrap()
    }

    #[test]
    fn unknown_count() {
        let sys = ex1_system(6, Component::X, WaveMode::Full);
        assert_eq!(sys.interior_shape(), [6, 5, 5, 5]);
        assert_eq!(sys.full_shape(), [7; 4]);
    }

    #[test]
    fn fast_solve_matches_dense_lu() {
        for n in 5..=8 {
            for c in Component::ALL {
                let sys = ex1_system(n, c, WaveMode::Full);
                let Field::Full(rhs) = sys.rhs() else { unreachable!() };
                let a = sys.operator().to_dense().unwrap();
                let want = a.lu().solve(&nalgebra::DVector::from_column_slice(rhs.data())).unwrap();
                let got = solve_full(&sys).unwrap();
                assert!(!got.dense);
                let diff = got.x.data().iter().zip(want.iter()).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
                assert!(diff <= 1e-9 * want.norm().max(1e-300), "N={n} {c:?}: {diff:e}");
            }
        }
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let sys = ex1_system(5, Component::Y, WaveMode::Full);
        let x = sys.solver().unwrap().solve(&Tensor4::zeros(sys.interior_shape())).unwrap();
        assert_eq!(x.max_abs(), 0.0);
    }

    #[test]
    fn solver_rejects_wrong_shape() {
        let sys = ex1_system(5, Component::Y, WaveMode::Full);
        assert!(matches!(sys.solver().unwrap().solve(&Tensor4::zeros([1, 2, 3, 4])), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn embed_then_extract_is_identity() {
        let sys = ex1_system(5, Component::Z, WaveMode::Full);
        let v = Tensor4::from_fn(sys.interior_shape(), |[a, b, c, d]| (a + 2 * b + 3 * c + 5 * d) as f64);
        let full = embed_boundary(&Field::Full(v.clone()), &sys).unwrap();
        assert_eq!(extract_interior(&full, &sys).unwrap(), Field::Full(v));
    }

    #[test]
    fn tt_assembly_matches_full() {
        let full = ex1_system(8, Component::Y, WaveMode::Full);
        let tt = ex1_system(8, Component::Y, WaveMode::Tt);
        assert!(tt.cross_evaluations() > 0);
        for (a, b) in [(full.rhs(), tt.rhs()), (full.data(), tt.data())] {
            let (a, b) = (a.to_full().unwrap(), b.to_full().unwrap());
            assert!(a.sub(&b).unwrap().norm() <= 1e-9 * a.norm());
        }
    }

    #[test]
    fn solve_modes_are_checked() {
        let full = ex1_system(5, Component::X, WaveMode::Full);
        assert!(solve_tt(&full, &AmenConfig::new(1e-8)).is_err());
        let tt = ex1_system(5, Component::X, WaveMode::Tt);
        assert!(solve_full(&tt).is_err());
    }

    #[test]
    fn invalid_speed_is_rejected() {
        let case = builtin_case("ex1").unwrap();
        let mut p = case.wave_problem(Component::X, 1.0, 1.0);
        p.c = 0.0;
        let s = build_staggered_spaces(4, case.domain).unwrap();
        assert!(assemble_wave_system(&p, &s, WaveMode::Full, &CrossConfig::new(1e-10)).is_err());
    }
}
