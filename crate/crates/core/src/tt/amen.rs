//! Alternating linear solver in TT format with residual enrichment.
//!
//! Each sweep runs left to right over the cores. At core `k` the operator is
//! projected onto the current left and right bases of `x` (a Galerkin
//! projection), the small dense system is solved by LU, the solution is
//! truncated to the smallest rank that keeps its local residual small, and
//! the basis is enriched with a few directions of the global residual before
//! moving on.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::linalg::{dvec, from_rows, lu_solve, norm, qr, svd, to_rows};
use super::matrix::TtMatrix;
use super::tensor::{Core3, TtTensor};
use crate::error::{Error, Result};
use crate::limits::check_f64_alloc;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmenConfig {
    pub tol: f64,
    pub max_sweeps: usize,
    pub kick_rank: usize,
    pub max_rank: usize,
}

impl AmenConfig {
    pub fn new(tol: f64) -> Self {
        Self { tol, max_sweeps: 50, kick_rank: 2, max_rank: 200 }
    }

    // negated comparisons so that NaN tolerances are rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("solver tolerance must be positive, got {}", self.tol)));
        }
        if self.max_sweeps == 0 || self.max_rank == 0 {
            return Err(Error::InvalidArgument("sweeps and max rank must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    /// Relative residual reached the tolerance.
    Converged,
    /// Updates fell below the tolerance, or the residual stopped improving.
    Stagnated,
    MaxSweeps,
}

#[derive(Debug, Clone)]
pub struct AmenResult {
    pub x: TtTensor,
    /// `‖b − A x‖ / ‖b‖` of the returned solution.
    pub residual: f64,
    pub converged: bool,
    pub stop: StopReason,
    pub sweeps: usize,
    /// Largest live storage seen during the solve: operator, right-hand
    /// side, iterate, interfaces, local system and residual train.
    pub peak_bytes: u64,
}

/// `‖b − A x‖ / ‖b‖`, or the absolute residual when `b = 0`.
pub fn relative_residual(a: &TtMatrix, b: &TtTensor, x: &TtTensor) -> Result<f64> {
    let r = b.sub(&a.apply(x)?)?.norm();
    let nb = b.norm();
    Ok(if nb > 0.0 { r / nb } else { r })
}

/// Sweeps allowed without halving the best residual before giving up.
const PATIENCE: usize = 3;

pub fn amen_solve(a: &TtMatrix, b: &TtTensor, cfg: &AmenConfig, x0: Option<&TtTensor>) -> Result<AmenResult> {
    cfg.validate()?;
    let modes = b.mode_sizes();
    if a.row_sizes() != modes.as_slice() || a.col_sizes() != modes.as_slice() {
        return Err(Error::ShapeMismatch(format!(
            "operator {:?} x {:?} vs right-hand side {:?}",
            a.row_sizes(),
            a.col_sizes(),
            modes
        )));
    }
    let d = modes.len();
    let nb = b.norm();
    let mut meter = 0u64;
    if nb == 0.0 {
        let x = TtTensor::zeros(&modes)?;
        return Ok(AmenResult {
            x,
            residual: 0.0,
            converged: true,
            stop: StopReason::Converged,
            sweeps: 0,
            peak_bytes: a.storage_bytes() + b.storage_bytes(),
        });
    }
    let mut x = match x0 {
        Some(x0) if x0.mode_sizes() == modes => x0.clone(),
        Some(_) => return Err(Error::ShapeMismatch("initial guess has wrong mode sizes".into())),
        None => b.clone(),
    };
    let fixed_bytes = a.storage_bytes() + b.storage_bytes();
    let tol_loc = cfg.tol / (d as f64).sqrt();

    let mut best = f64::INFINITY;
    let mut since_best = 0;
    let mut residual = f64::INFINITY;
    let mut stop = StopReason::MaxSweeps;
    let mut sweeps = 0;

    for sweep in 0..cfg.max_sweeps {
        sweeps = sweep + 1;
        x.orthogonalize_right();
        let mut psi_a = vec![vec![1.0]; d + 1];
        let mut psi_b = vec![vec![1.0]; d + 1];
        for k in (1..d).rev() {
            psi_a[k] = right_frame_a(&psi_a[k + 1], &x.cores()[k], a, k);
            psi_b[k] = right_frame_pair(&psi_b[k + 1], &x.cores()[k], &b.cores()[k]);
        }
        let mut phi_a = vec![vec![1.0]; d + 1];
        let mut phi_b = vec![vec![1.0]; d + 1];
        let mut max_dx: f64 = 0.0;

        for k in 0..d {
            let (p, n, q) = x.cores()[k].shape();
            let dim = p * n * q;
            check_f64_alloc("local system", (dim * dim) as u128)?;
            let local = local_matrix(&phi_a[k], &psi_a[k + 1], a, k, p, n, q);
            let f = local_rhs(&phi_b[k], &psi_b[k + 1], &b.cores()[k], p, q);
            let u = lu_solve(&local, &f).ok_or(Error::SingularLocalSystem { sweep, core: k })?;
            let old = x.cores()[k].data();
            let du = norm(&u.iter().zip(old).map(|(a, b)| a - b).collect::<Vec<_>>());
            let nu = norm(&u);
            max_dx = max_dx.max(if nu > 0.0 { du / nu } else { du });

            let frames: usize = phi_a.iter().chain(&psi_a).chain(&phi_b).chain(&psi_b).map(Vec::len).sum();
            let live = fixed_bytes + x.storage_bytes() + 8 * (frames + dim * dim + 2 * dim) as u64;
            meter = meter.max(live);

            if k == d - 1 {
                x.cores_mut()[k] = Core3::new(p, n, q, u)?;
                break;
            }

            let u_trunc = truncate_by_residual(&local, &f, &u, p * n, q, tol_loc, cfg.max_rank);
            let mut basis = u_trunc.basis;
            if cfg.kick_rank > 0 {
                let mut cur = x.clone();
                cur.cores_mut()[k] = Core3::from_left(n, &u_trunc.matrix);
                let z = b.sub(&a.apply(&cur)?)?;
                meter = meter.max(live + 2 * z.storage_bytes());
                let z = z.round_with_max_rank(1e-14, cfg.kick_rank);
                let mut frame = vec![1.0];
                for j in 0..k {
                    frame = left_frame_pair(&frame, &x.cores()[j], &z.cores()[j]);
                }
                let zk = &z.cores()[k];
                let (rz0, _, rz1) = zk.shape();
                let proj = from_rows(p, rz0, &frame) * zk.right();
                let proj = from_rows(p * n, rz1, &to_rows(&proj));
                let room = cfg.max_rank.saturating_sub(basis.ncols()).min(proj.ncols());
                if room > 0 {
                    let mut joined = DMatrix::zeros(p * n, basis.ncols() + room);
                    joined.columns_mut(0, basis.ncols()).copy_from(&basis);
                    joined.columns_mut(basis.ncols(), room).copy_from(&proj.columns(0, room));
                    basis = qr(&joined).0;
                }
            }
            let w = basis.transpose() * &u_trunc.matrix;
            x.cores_mut()[k] = Core3::from_left(n, &basis);
            let next = &x.cores()[k + 1];
            let merged = w * next.right();
            let nn = next.shape().1;
            x.cores_mut()[k + 1] = Core3::from_right(nn, &merged);
            phi_a[k + 1] = left_frame_a(&phi_a[k], &x.cores()[k], a, k);
            phi_b[k + 1] = left_frame_pair(&phi_b[k], &x.cores()[k], &b.cores()[k]);
        }

        residual = relative_residual(a, b, &x)?;
        if residual <= cfg.tol {
            stop = StopReason::Converged;
            break;
        }
        if max_dx <= cfg.tol {
            stop = StopReason::Stagnated;
            break;
        }
        if residual < 0.5 * best {
            best = residual;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= PATIENCE {
                stop = StopReason::Stagnated;
                break;
            }
        }
    }

    Ok(AmenResult { x, residual, converged: stop == StopReason::Converged, stop, sweeps, peak_bytes: meter })
}

struct Truncated {
    /// Orthonormal columns spanning the kept left factor.
    basis: DMatrix<f64>,
    /// Truncated solution as a `rows × q` matrix.
    matrix: DMatrix<f64>,
}

/// Smallest rank whose local residual stays within `max(tol·‖f‖, 2·‖B u − f‖)`.
fn truncate_by_residual(
    local: &DMatrix<f64>,
    f: &[f64],
    u: &[f64],
    rows: usize,
    q: usize,
    tol: f64,
    max_rank: usize,
) -> Truncated {
    let fv = dvec(f);
    let umat = from_rows(rows, q, u);
    let exact = (local * dvec(u) - &fv).norm();
    let bound = (tol * fv.norm()).max(2.0 * exact);
    let dec = svd(&umat);
    let full = dec.s.len().min(max_rank).max(1);
    let mut pick = full;
    for r in 1..full {
        let approx = truncated(&dec.u, &dec.s, &dec.vt, r);
        let res = (local * dvec(&to_rows(&approx)) - &fv).norm();
        if res <= bound {
            pick = r;
            break;
        }
    }
    let matrix = truncated(&dec.u, &dec.s, &dec.vt, pick);
    Truncated { basis: dec.u.columns(0, pick).into_owned(), matrix }
}

fn truncated(u: &DMatrix<f64>, s: &[f64], vt: &DMatrix<f64>, r: usize) -> DMatrix<f64> {
    let mut sv = vt.rows(0, r).into_owned();
    for (i, si) in s.iter().take(r).enumerate() {
        sv.row_mut(i).scale_mut(*si);
    }
    u.columns(0, r) * sv
}

/// Left interface of `x^T A x`, laid out `(β, b, β')`.
fn left_frame_a(phi: &[f64], x: &Core3, a: &TtMatrix, k: usize) -> Vec<f64> {
    let (p, n, q) = x.shape();
    let (s, t) = a.core_ranks(k);
    // t1[a, α', i, β] = Σ_α Φ[α, a, α'] x[α, i, β]
    let mut t1 = vec![0.0; s * p * n * q];
    for al in 0..p {
        for ra in 0..s {
            for al2 in 0..p {
                let ph = phi[(al * s + ra) * p + al2];
                if ph == 0.0 {
                    continue;
                }
                for i in 0..n {
                    let base = ((ra * p + al2) * n + i) * q;
                    for be in 0..q {
                        t1[base + be] += ph * x.at(al, i, be);
                    }
                }
            }
        }
    }
    // t2[α', j, β, b] = Σ_{a, i} t1[a, α', i, β] A[a, i, j, b]
    let mut t2 = vec![0.0; p * n * q * t];
    for ra in 0..s {
        for i in 0..n {
            for j in 0..n {
                for rb in 0..t {
                    let av = a.at(k, ra, i, j, rb);
                    if av == 0.0 {
                        continue;
                    }
                    for al2 in 0..p {
                        for be in 0..q {
                            t2[((al2 * n + j) * q + be) * t + rb] += av * t1[((ra * p + al2) * n + i) * q + be];
                        }
                    }
                }
            }
        }
    }
    // Φ'[β, b, β'] = Σ_{α', j} t2[α', j, β, b] x[α', j, β']
    let mut out = vec![0.0; q * t * q];
    for al2 in 0..p {
        for j in 0..n {
            for be in 0..q {
                for rb in 0..t {
                    let v = t2[((al2 * n + j) * q + be) * t + rb];
                    if v == 0.0 {
                        continue;
                    }
                    for be2 in 0..q {
                        out[(be * t + rb) * q + be2] += v * x.at(al2, j, be2);
                    }
                }
            }
        }
    }
    out
}

/// Right interface of `x^T A x`, laid out `(α, a, α')`.
fn right_frame_a(psi: &[f64], x: &Core3, a: &TtMatrix, k: usize) -> Vec<f64> {
    let (p, n, q) = x.shape();
    let (s, t) = a.core_ranks(k);
    // t1[α', j, b, β] = Σ_β' x[α', j, β'] Ψ[β, b, β']
    let mut t1 = vec![0.0; p * n * t * q];
    for al2 in 0..p {
        for j in 0..n {
            for rb in 0..t {
                for be in 0..q {
                    let mut acc = 0.0;
                    for be2 in 0..q {
                        acc += x.at(al2, j, be2) * psi[(be * t + rb) * q + be2];
                    }
                    t1[((al2 * n + j) * t + rb) * q + be] = acc;
                }
            }
        }
    }
    // t2[a, i, α', β] = Σ_{j, b} A[a, i, j, b] t1[α', j, b, β]
    let mut t2 = vec![0.0; s * n * p * q];
    for ra in 0..s {
        for i in 0..n {
            for j in 0..n {
                for rb in 0..t {
                    let av = a.at(k, ra, i, j, rb);
                    if av == 0.0 {
                        continue;
                    }
                    for al2 in 0..p {
                        for be in 0..q {
                            t2[((ra * n + i) * p + al2) * q + be] += av * t1[((al2 * n + j) * t + rb) * q + be];
                        }
                    }
                }
            }
        }
    }
    // Ψ'[α, a, α'] = Σ_{i, β} x[α, i, β] t2[a, i, α', β]
    let mut out = vec![0.0; p * s * p];
    for al in 0..p {
        for ra in 0..s {
            for al2 in 0..p {
                let mut acc = 0.0;
                for i in 0..n {
                    for be in 0..q {
                        acc += x.at(al, i, be) * t2[((ra * n + i) * p + al2) * q + be];
                    }
                }
                out[(al * s + ra) * p + al2] = acc;
            }
        }
    }
    out
}

/// Left interface `Σ x[α,i,β] Φ[α,c] y[c,i,e]`, laid out `(β, e)`.
fn left_frame_pair(phi: &[f64], x: &Core3, y: &Core3) -> Vec<f64> {
    let (p, n, q) = x.shape();
    let (c0, _, e1) = y.shape();
    let mut out = vec![0.0; q * e1];
    for al in 0..p {
        for c in 0..c0 {
            let ph = phi[al * c0 + c];
            if ph == 0.0 {
                continue;
            }
            for i in 0..n {
                for be in 0..q {
                    let xv = ph * x.at(al, i, be);
                    for e in 0..e1 {
                        out[be * e1 + e] += xv * y.at(c, i, e);
                    }
                }
            }
        }
    }
    out
}

/// Right interface `Σ x[α,i,β] y[c,i,e] Ψ[β,e]`, laid out `(α, c)`.
fn right_frame_pair(psi: &[f64], x: &Core3, y: &Core3) -> Vec<f64> {
    let (p, n, q) = x.shape();
    let (c0, _, e1) = y.shape();
    let mut out = vec![0.0; p * c0];
    for c in 0..c0 {
        for i in 0..n {
            for be in 0..q {
                let mut yp = 0.0;
                for e in 0..e1 {
                    yp += y.at(c, i, e) * psi[be * e1 + e];
                }
                if yp == 0.0 {
                    continue;
                }
                for al in 0..p {
                    out[al * c0 + c] += x.at(al, i, be) * yp;
                }
            }
        }
    }
    out
}

/// Projected operator `Σ_{a,b} Φ[:,a,:] ⊗ A_k[a,:,:,b] ⊗ Ψ[:,b,:]`.
fn local_matrix(phi: &[f64], psi: &[f64], a: &TtMatrix, k: usize, p: usize, n: usize, q: usize) -> DMatrix<f64> {
    let (s, t) = a.core_ranks(k);
    let dim = p * n * q;
    let mut out = DMatrix::zeros(dim, dim);
    for ra in 0..s {
        for rb in 0..t {
            for i in 0..n {
                for j in 0..n {
                    let av = a.at(k, ra, i, j, rb);
                    if av == 0.0 {
                        continue;
                    }
                    for al in 0..p {
                        for al2 in 0..p {
                            let pv = av * phi[(al * s + ra) * p + al2];
                            if pv == 0.0 {
                                continue;
                            }
                            for be in 0..q {
                                let row = (al * n + i) * q + be;
                                for be2 in 0..q {
                                    let col = (al2 * n + j) * q + be2;
                                    out[(row, col)] += pv * psi[(be * t + rb) * q + be2];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    out
}

fn local_rhs(phi: &[f64], psi: &[f64], b: &Core3, p: usize, q: usize) -> Vec<f64> {
    let (c0, n, e1) = b.shape();
    let mut out = vec![0.0; p * n * q];
    for al in 0..p {
        for c in 0..c0 {
            let ph = phi[al * c0 + c];
            if ph == 0.0 {
                continue;
            }
            for i in 0..n {
                for e in 0..e1 {
                    let v = ph * b.at(c, i, e);
                    if v == 0.0 {
                        continue;
                    }
                    for be in 0..q {
                        out[(al * n + i) * q + be] += v * psi[be * e1 + e];
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rhs() -> TtTensor {
        let x = TtTensor::rank1(&[vec![1.0, 2.0, 3.0], vec![0.5, -1.0, 2.0], vec![1.0, 1.0], vec![3.0, -2.0, 1.0]])
            .unwrap();
        let y = TtTensor::rank1(&[vec![0.0, 1.0, -1.0], vec![2.0, 0.0, 1.0], vec![1.0, -3.0], vec![1.0, 1.0, 1.0]])
            .unwrap();
        x.add(&y).unwrap()
    }

    #[test]
    fn identity_returns_rhs() {
        let b = rhs();
        let a = TtMatrix::identity(&b.mode_sizes()).unwrap();
        let res = amen_solve(&a, &b, &AmenConfig::new(1e-12), None).unwrap();
        assert!(res.converged);
        assert!(res.x.sub(&b).unwrap().norm() <= 1e-11 * b.norm());
    }

    #[test]
    fn scaled_identity_halves() {
        let b = rhs();
        let a = TtMatrix::identity(&b.mode_sizes()).unwrap().scale(2.0);
        let res = amen_solve(&a, &b, &AmenConfig::new(1e-12), None).unwrap();
        assert!(res.x.sub(&b.scale(0.5)).unwrap().norm() <= 1e-11 * b.norm());
        assert!((relative_residual(&a, &b, &res.x).unwrap() - res.residual).abs() <= 1e-14);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let b = TtTensor::zeros(&[2, 3, 2, 2]).unwrap();
        let a = TtMatrix::identity(&[2, 3, 2, 2]).unwrap();
        let res = amen_solve(&a, &b, &AmenConfig::new(1e-10), None).unwrap();
        assert_eq!(res.x.norm(), 0.0);
    }
}
