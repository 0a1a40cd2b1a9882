//! Magnetic field from the discrete Faraday law `∂_t B = −curl E`.
//!
//! For each `B_i` the two curl terms are evaluated on the `B_i` grid by
//! differentiating the neighbouring `E` components into the target nodes.
//! The time integration solves `⟨S_t⟩ B̂ = H(I_t) − S_t(I_t, 0) B⁰` at every
//! spatial node; only initial data enter, never wall values of `B`.

use std::sync::Arc;

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::solution::Field;
use super::spaces::{point, StaggeredSpaces};
use super::{eval_checked, Component, ScalarField};
use crate::chebyshev::{derivative_to, diff_matrix, interp_matrix, restrict, time_interior, Grid};
use crate::error::{Error, Result};
use crate::kron::KronOp;
use crate::tensor::Tensor4;
use crate::tt::{amen_solve, tt_cross, AmenConfig, CrossConfig, TtMatrix};

/// `(sign, E component, derivative axis)` for the two terms of `−curl E`.
pub fn curl_terms(target: Component) -> [(f64, Component, usize); 2] {
    use Component::*;
    match target {
        X => [(-1.0, Z, 2), (1.0, Y, 3)],
        Y => [(1.0, Z, 1), (-1.0, X, 3)],
        Z => [(-1.0, Y, 1), (1.0, X, 2)],
    }
}

/// Operator mapping `E_source` on its staggered grid to `∂_axis E_source` on `target` grids.
pub fn curl_term_operator(source: &[Arc<Grid>; 4], target: &[Arc<Grid>; 4], axis: usize, sign: f64) -> Result<KronOp> {
    let mut factors: Vec<DMatrix<f64>> = Vec::with_capacity(4);
    for a in 0..4 {
        factors.push(if a == axis {
            derivative_to(&source[a], &target[a])?
        } else {
            interp_matrix(&source[a], &target[a])?.into_entries()
        });
    }
    let f: [DMatrix<f64>; 4] = factors.try_into().expect("four factors");
    Ok(KronOp::single(sign, f))
}

#[derive(Debug, Clone)]
pub struct MagneticRecovery {
    pub b: [Field; 3],
    /// Relative residuals of the TT time solves (zero in full mode).
    pub residuals: [f64; 3],
    pub peak_bytes: u64,
}

/// Recovers the three `B` components from staggered `E` components.
///
/// `e` must hold fields on `s.e_grids(..)`, all in the same mode. TT mode
/// samples the initial data by cross interpolation and solves the time
/// systems with the alternating solver.
pub fn recover_magnetic(
    e: &[Field; 3],
    s: &StaggeredSpaces,
    b_initial: &[ScalarField; 3],
    cross: &CrossConfig,
    amen: &AmenConfig,
) -> Result<MagneticRecovery> {
    for c in Component::ALL {
        let want = s.e_shape(c);
        let got = e[c.index()].shape();
        if got != want {
            return Err(Error::ShapeMismatch(format!("E_{} has shape {got:?}, expected {want:?}", c.name())));
        }
    }
    let tt_mode = matches!(e[0], Field::Tt(_));
    if e.iter().any(|f| matches!(f, Field::Tt(_)) != tt_mode) {
        return Err(Error::InvalidArgument("E components mix full and TT storage".into()));
    }

    let tgrid = s.t_grid();
    let np1 = tgrid.len();
    let it = time_interior(np1);
    let st = diff_matrix(tgrid)?.into_entries();
    let st_int = restrict(&st, &it, &it)?;
    let st_col0: Vec<f64> = it.iter().map(|&i| st[(i, 0)]).collect();
    let inv = st_int.clone().lu().try_inverse().ok_or_else(|| Error::Singular("interior time derivative".into()))?;

    let outs: Vec<(Field, f64, u64)> = Component::ALL
        .par_iter()
        .map(|&c| -> Result<(Field, f64, u64)> {
            let target = s.b_grids(c);
            let shape = s.b_shape(c);
            let ops = curl_terms(c)
                .iter()
                .map(|&(sign, src, axis)| Ok((src, curl_term_operator(&s.e_grids(src), &target, axis, sign)?)))
                .collect::<Result<Vec<_>>>()?;
            let init = &b_initial[c.index()];
            let layer = [vec![0], (0..shape[1]).collect(), (0..shape[2]).collect(), (0..shape[3]).collect()];
            if !tt_mode {
                let mut h = Tensor4::zeros(shape);
                for (src, op) in &ops {
                    let Field::Full(ef) = &e[src.index()] else { unreachable!() };
                    h.axpy(1.0, &op.apply(ef)?)?;
                }
                let b0 = Tensor4::try_from_fn([1, shape[1], shape[2], shape[3]], |[_, i, j, k]| {
                    eval_checked(init, point(&target, [0, i, j, k]), "initial magnetic field")
                })?;
                let mut rhs = h.gather(&[it.clone(), layer[1].clone(), layer[2].clone(), layer[3].clone()])?;
                let col = DMatrix::from_column_slice(st_col0.len(), 1, &st_col0);
                rhs.axpy(-1.0, &b0.mode_apply(0, &col)?)?;
                let inner = rhs.mode_apply(0, &inv)?;
                let mut out = Tensor4::zeros(shape);
                b0.scatter_into(&mut out, &layer)?;
                inner.scatter_into(&mut out, &[it.clone(), layer[1].clone(), layer[2].clone(), layer[3].clone()])?;
                Ok((Field::Full(out), 0.0, 0))
            } else {
                let mut h: Option<crate::tt::TtTensor> = None;
                for (src, op) in &ops {
                    let Field::Tt(ef) = &e[src.index()] else { unreachable!() };
                    let term = TtMatrix::from_kron(op)?.apply(ef)?;
                    h = Some(match h {
                        None => term,
                        Some(acc) => acc.add(&term)?,
                    });
                }
                let h = h.expect("two curl terms").round(cross.tol * 1e-2);
                let b0 = tt_cross(
                    |idx: &[usize]| {
                        eval_checked(init, point(&target, [0, idx[1], idx[2], idx[3]]), "initial magnetic field")
                    },
                    &[1, shape[1], shape[2], shape[3]],
                    cross,
                )?
                .tt;
                let rhs = h
                    .select_mode(0, &it)?
                    .sub(&b0.select_mode(0, &vec![0; it.len()])?.mask_mode(0, &st_col0)?)?
                    .round(cross.tol * 1e-2);
                let eye = |n: usize| DMatrix::identity(n, n);
                let a = TtMatrix::rank1(1.0, &[st_int.clone(), eye(shape[1]), eye(shape[2]), eye(shape[3])])?;
                let sol = amen_solve(&a, &rhs, amen, None)?;
                let out = sol.x.pad_mode(0, &it, np1)?.add(&b0.pad_mode(0, &[0], np1)?)?.round(cross.tol * 1e-2);
                let bytes = sol.peak_bytes + h.storage_bytes() + out.storage_bytes();
                Ok((Field::Tt(out), sol.residual, bytes))
            }
        })
        .collect::<Result<_>>()?;

    let mut it_outs = outs.into_iter();
    let (b0, r0, p0) = it_outs.next().expect("x");
    let (b1, r1, p1) = it_outs.next().expect("y");
    let (b2, r2, p2) = it_outs.next().expect("z");
    Ok(MagneticRecovery { b: [b0, b1, b2], residuals: [r0, r1, r2], peak_bytes: p0.max(p1).max(p2) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::maxwell::build_staggered_spaces;
    use crate::verify::{builtin_case, weighted_l2_error};

    #[test]
    fn curl_signs() {
        // −curl E, x component: −∂_y E_z + ∂_z E_y
        assert_eq!(curl_terms(Component::X), [(-1.0, Component::Z, 2), (1.0, Component::Y, 3)]);
        for c in Component::ALL {
            for (_, src, axis) in curl_terms(c) {
                assert_ne!(src, c);
                assert_ne!(axis, src.axis());
                assert_ne!(axis, c.axis());
            }
        }
    }

    #[test]
    fn magnetic_field_from_exact_electric_field() {
        let case = builtin_case("ex1").unwrap();
        let s = build_staggered_spaces(16, case.domain).unwrap();
        let e = Component::ALL.map(|c| {
            let g = s.e_grids(c);
            let f = case.exact_e(c);
            Field::Full(Tensor4::from_fn(s.e_shape(c), |idx| f(point(&g, idx))))
        });
        let b0 = Component::ALL.map(|c| case.exact_b(c));
        let rec = recover_magnetic(&e, &s, &b0, &CrossConfig::new(1e-12), &AmenConfig::new(1e-12)).unwrap();
        for c in Component::ALL {
            let err = weighted_l2_error(&rec.b[c.index()].to_full().unwrap(), &case.exact_b(c), &s.b_grids(c)).unwrap();
            assert!(err <= 1e-7, "B_{}: {err:e}", c.name());
        }
    }

    #[test]
    fn wrong_shapes_are_rejected() {
        let s = build_staggered_spaces(4, crate::maxwell::SpaceTimeBox::unit()).unwrap();
        let e = [0, 1, 2].map(|_| Field::Full(Tensor4::zeros([5, 5, 5, 5])));
        let b0 = [0, 1, 2].map(|_| crate::maxwell::zero_field());
        let r = recover_magnetic(&e, &s, &b0, &CrossConfig::new(1e-10), &AmenConfig::new(1e-10));
        assert!(matches!(r, Err(Error::ShapeMismatch(_))));
    }
}
