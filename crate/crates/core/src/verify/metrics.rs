//! Discrete error norms and divergence residuals.

use std::sync::Arc;

use nalgebra::DMatrix;

use crate::chebyshev::{derivative_to, interp_matrix, Grid};
use crate::error::{Error, Result};
use crate::kron::KronOp;
use crate::maxwell::spaces::point;
use crate::maxwell::{eval_checked, Component, FieldSolution, ScalarField, StaggeredSpaces};
use crate::tensor::Tensor4;

/// `sqrt(Σ ω_t ω_x ω_y ω_z v²)` with the grids' quadrature weights.
pub fn weighted_norm(v: &Tensor4, grids: &[Arc<Grid>; 4]) -> Result<f64> {
    let shape = v.shape();
    for a in 0..4 {
        if grids[a].len() != shape[a] {
            return Err(Error::ShapeMismatch(format!("axis {a}: {} nodes vs {} values", grids[a].len(), shape[a])));
        }
    }
    let w = grids.clone().map(|g| g.quad_weights().to_vec());
    let mut acc = 0.0;
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for k in 0..shape[2] {
                let wijk = w[0][i] * w[1][j] * w[2][k];
                for l in 0..shape[3] {
                    let x = v.get([i, j, k, l]);
                    acc += wijk * w[3][l] * x * x;
                }
            }
        }
    }
    Ok(acc.sqrt())
}

/// Samples `f` at every node of `grids`.
pub fn sample_on(grids: &[Arc<Grid>; 4], f: &ScalarField, what: &str) -> Result<Tensor4> {
    let shape = grids.clone().map(|g| g.len());
    Tensor4::try_from_fn(shape, |idx| eval_checked(f, point(grids, idx), what))
}

/// Weighted discrete L2 distance between `numeric` and `exact` on `grids`.
pub fn weighted_l2_error(numeric: &Tensor4, exact: &ScalarField, grids: &[Arc<Grid>; 4]) -> Result<f64> {
    let diff = numeric.sub(&sample_on(grids, exact, "exact solution")?)?;
    weighted_norm(&diff, grids)
}

/// Same as [`weighted_l2_error`] but summed over the nodes in `keep` only.
pub fn weighted_l2_error_on(
    numeric: &Tensor4,
    exact: &ScalarField,
    grids: &[Arc<Grid>; 4],
    keep: &[Vec<usize>; 4],
) -> Result<f64> {
    let mut diff = numeric.sub(&sample_on(grids, exact, "exact solution")?)?;
    let shape = diff.shape();
    let mask: Vec<Vec<bool>> = (0..4)
        .map(|a| {
            let mut m = vec![false; shape[a]];
            keep[a].iter().for_each(|&i| m[i] = true);
            m
        })
        .collect();
    for i in 0..shape[0] {
        for j in 0..shape[1] {
            for k in 0..shape[2] {
                for l in 0..shape[3] {
                    if !(mask[0][i] && mask[1][j] && mask[2][k] && mask[3][l]) {
                        diff.set([i, j, k, l], 0.0);
                    }
                }
            }
        }
    }
    weighted_norm(&diff, grids)
}

/// Weighted norms of `∇·E − ρ/ε₀` and `∇·B`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DivergenceResiduals {
    pub div_e: f64,
    pub div_b: f64,
}

/// Maps a staggered component onto the common Lobatto grid, differentiated
/// along its own axis.
fn divergence_term(from: &[Arc<Grid>; 4], to: &[Arc<Grid>; 4], axis: usize) -> Result<KronOp> {
    let mut f: Vec<DMatrix<f64>> = Vec::with_capacity(4);
    for a in 0..4 {
        f.push(if a == axis {
            derivative_to(&from[a], &to[a])?
        } else {
            interp_matrix(&from[a], &to[a])?.into_entries()
        });
    }
    Ok(KronOp::single(1.0, f.try_into().expect("four factors")))
}

/// Divergence residuals of dense staggered fields, measured on the
/// all-Lobatto grid. `rho_over_eps` is the charge density divided by `ε₀`.
pub fn divergence_residuals_dense(
    s: &StaggeredSpaces,
    e: &[Tensor4; 3],
    b: &[Tensor4; 3],
    rho_over_eps: &ScalarField,
) -> Result<DivergenceResiduals> {
    let common = s.wave_grids();
    let mut div_e = sample_on(&common, rho_over_eps, "charge density")?.scaled(-1.0);
    let mut div_b = Tensor4::zeros(div_e.shape());
    for c in Component::ALL {
        let k = c.index();
        div_e.axpy(1.0, &divergence_term(&s.e_grids(c), &common, c.axis())?.apply(&e[k])?)?;
        div_b.axpy(1.0, &divergence_term(&s.b_grids(c), &common, c.axis())?.apply(&b[k])?)?;
    }
    Ok(DivergenceResiduals { div_e: weighted_norm(&div_e, &common)?, div_b: weighted_norm(&div_b, &common)? })
}

/// Divergence residuals of a computed solution.
pub fn divergence_residuals(sol: &FieldSolution, rho_over_eps: &ScalarField) -> Result<DivergenceResiduals> {
    let e = [sol.e[0].to_full()?, sol.e[1].to_full()?, sol.e[2].to_full()?];
    let b = [sol.b[0].to_full()?, sol.b[1].to_full()?, sol.b[2].to_full()?];
    divergence_residuals_dense(&sol.spaces, &e, &b, rho_over_eps)
}
