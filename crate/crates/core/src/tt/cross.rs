//! Two-site cross interpolation: builds a tensor train from entry
//! evaluations at nested fibers chosen by [`maxvol`].

use nalgebra::DMatrix;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::linalg::svd;
use super::linalg::truncation_rank;
use super::maxvol::maxvol;
use super::tensor::{Core3, TtTensor};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrossConfig {
    pub tol: f64,
    pub max_rank: usize,
    pub max_sweeps: usize,
    pub initial_rank: usize,
    pub validation_samples: usize,
    pub seed: u64,
}

impl CrossConfig {
    pub fn new(tol: f64) -> Self {
        Self { tol, max_rank: 64, max_sweeps: 20, initial_rank: 2, validation_samples: 100, seed: 0 }
    }

    // negated comparisons so that NaN tolerances are rejected too
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("cross tolerance must be positive, got {}", self.tol)));
        }
        if self.max_rank == 0 || self.max_sweeps == 0 || self.initial_rank == 0 || self.validation_samples == 0 {
            return Err(Error::InvalidArgument("cross ranks, sweeps and samples must be positive".into()));
        }
        if self.initial_rank > self.max_rank {
            return Err(Error::InvalidArgument(format!(
                "initial rank {} exceeds max rank {}",
                self.initial_rank, self.max_rank
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct CrossResult {
    pub tt: TtTensor,
    /// Half-sweeps performed (one direction each).
    pub half_sweeps: usize,
    pub converged: bool,
    /// Relative error on random entries not used to build the train.
    pub validation_error: f64,
    pub evaluations: usize,
}

type MultiIndex = Vec<usize>;

struct Sampler<'a, F> {
    oracle: &'a F,
    evaluations: usize,
}

impl<F> Sampler<'_, F>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    fn eval_many(&mut self, idx: &[MultiIndex]) -> Result<Vec<f64>> {
        self.evaluations += idx.len();
        idx.par_iter()
            .map(|i| {
                let v = (self.oracle)(i)?;
                if v.is_finite() {
                    Ok(v)
                } else {
                    let mut coords = [f64::NAN; 4];
                    for (c, &k) in coords.iter_mut().zip(i) {
                        *c = k as f64;
                    }
                    Err(Error::Oracle { coords, reason: format!("non-finite value {v} at multi-index {i:?}") })
                }
            })
            .collect()
    }

    /// `(|left| n_k) × (n_{k+1} |right|)` matrix of entries.
    fn supercore(&mut self, left: &[MultiIndex], nk: usize, nk1: usize, right: &[MultiIndex]) -> Result<DMatrix<f64>> {
        let rows = left.len() * nk;
        let cols = nk1 * right.len();
        let mut idx = Vec::with_capacity(rows * cols);
        for l in left {
            for i in 0..nk {
                for j in 0..nk1 {
                    for r in right {
                        let mut m = l.clone();
                        m.push(i);
                        m.push(j);
                        m.extend_from_slice(r);
                        idx.push(m);
                    }
                }
            }
        }
        let vals = self.eval_many(&idx)?;
        Ok(DMatrix::from_row_slice(rows, cols, &vals))
    }
}

/// Cross interpolation of `oracle` on the grid `mode_sizes`.
///
/// Alternates left-to-right and right-to-left sweeps over neighbouring core
/// pairs. Each pair is sampled on the current fibers, truncated by SVD and
/// the next fibers are chosen by maxvol. Stops when two consecutive
/// half-sweeps differ by at most `tol` relative to the current norm.
pub fn tt_cross<F>(oracle: F, mode_sizes: &[usize], cfg: &CrossConfig) -> Result<CrossResult>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    cfg.validate()?;
    if mode_sizes.is_empty() || mode_sizes.contains(&0) {
        return Err(Error::ShapeMismatch(format!("invalid mode sizes {mode_sizes:?}")));
    }
    let d = mode_sizes.len();
    let mut sampler = Sampler { oracle: &oracle, evaluations: 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    if d == 1 {
        let idx: Vec<MultiIndex> = (0..mode_sizes[0]).map(|i| vec![i]).collect();
        let vals = sampler.eval_many(&idx)?;
        let tt = TtTensor::new(vec![Core3::new(1, mode_sizes[0], 1, vals)?])?;
        return Ok(CrossResult {
            tt,
            half_sweeps: 0,
            converged: true,
            validation_error: 0.0,
            evaluations: sampler.evaluations,
        });
    }

    let mut vrng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(0x9e37_79b9_7f4a_7c15));
    let samples: Vec<MultiIndex> =
        (0..cfg.validation_samples).map(|_| mode_sizes.iter().map(|&n| vrng.random_range(0..n)).collect()).collect();
    let exact = sampler.eval_many(&samples)?;
    let largest =
        (0..samples.len()).max_by(|&a, &b| exact[a].abs().total_cmp(&exact[b].abs())).expect("validation_samples > 0");

    let mut pivot = samples[largest].clone();
    let mut best: Option<CrossResult> = None;
    for _ in 0..=RESTARTS {
        let right = initial_right_sets(&pivot, mode_sizes, cfg.initial_rank, &mut rng);
        let (tt, half_sweeps, converged) = sweep(&mut sampler, mode_sizes, cfg, right)?;
        let (validation_error, worst) = validation(&tt, &samples, &exact);
        let better = best.as_ref().is_none_or(|b| validation_error < b.validation_error);
        if better {
            best = Some(CrossResult { tt, half_sweeps, converged, validation_error, evaluations: 0 });
        }
        if validation_error <= RESTART_FACTOR * cfg.tol {
            break;
        }
        pivot = samples[worst].clone();
    }
    let mut res = best.expect("at least one pass ran");
    res.evaluations = sampler.evaluations;
    Ok(res)
}

/// Extra passes allowed when held-out samples disagree with the result.
const RESTARTS: usize = 2;
/// A pass is accepted when its validation error is within this factor of `tol`.
const RESTART_FACTOR: f64 = 1e3;

/// Right fibers for the first sweep: suffixes of `pivot` first, then random
/// distinct fibers up to `rank`.
fn initial_right_sets(
    pivot: &[usize],
    mode_sizes: &[usize],
    rank: usize,
    rng: &mut ChaCha8Rng,
) -> Vec<Vec<MultiIndex>> {
    let d = mode_sizes.len();
    let mut right: Vec<Vec<MultiIndex>> = vec![Vec::new(); d + 1];
    right[d] = vec![vec![]];
    for k in (1..d).rev() {
        let rr = right[k + 1].len();
        let pool = mode_sizes[k] * rr;
        let take = rank.min(pool);
        // the pivot suffix is always fiber 0 of right[k + 1]
        let first = pivot[k] * rr;
        let mut picks = vec![first];
        for p in sample(rng, pool, take).into_vec() {
            if picks.len() == take {
                break;
            }
            if p != first {
                picks.push(p);
            }
        }
        right[k] = picks
            .into_iter()
            .map(|p| {
                let (i, b) = (p / rr, p % rr);
                let mut m = vec![i];
                m.extend_from_slice(&right[k + 1][b]);
                m
            })
            .collect();
    }
    right
}

/// Relative error on the samples and the index of the worst one.
fn validation(tt: &TtTensor, samples: &[MultiIndex], exact: &[f64]) -> (f64, usize) {
    let (mut err2, mut ref2, mut worst, mut worst_err) = (0.0, 0.0, 0, -1.0);
    for (k, (s, e)) in samples.iter().zip(exact).enumerate() {
        let diff = tt.get(s) - e;
        err2 += diff * diff;
        ref2 += e * e;
        if diff.abs() > worst_err {
            worst_err = diff.abs();
            worst = k;
        }
    }
    let err = if ref2 > 0.0 { (err2 / ref2).sqrt() } else { err2.sqrt() };
    (err, worst)
}

fn sweep<F>(
    sampler: &mut Sampler<'_, F>,
    mode_sizes: &[usize],
    cfg: &CrossConfig,
    mut right: Vec<Vec<MultiIndex>>,
) -> Result<(TtTensor, usize, bool)>
where
    F: Fn(&[usize]) -> Result<f64> + Sync,
{
    let d = mode_sizes.len();
    let mut left: Vec<Vec<MultiIndex>> = vec![Vec::new(); d + 1];
    left[0] = vec![vec![]];
    let delta_scale = cfg.tol / ((d - 1) as f64).sqrt();
    let mut cores: Vec<Core3> = mode_sizes.iter().map(|&n| Core3::zeros(1, n, 1)).collect();
    let mut prev: Option<TtTensor> = None;
    let mut converged = false;
    let mut half_sweeps = 0;

    'outer: for _ in 0..cfg.max_sweeps {
        for forward in [true, false] {
            let order: Vec<usize> = if forward { (0..d - 1).collect() } else { (0..d - 1).rev().collect() };
            for k in order {
                let (nk, nk1) = (mode_sizes[k], mode_sizes[k + 1]);
                let phi = sampler.supercore(&left[k], nk, nk1, &right[k + 2])?;
                let dec = svd(&phi);
                let r = truncation_rank(&dec.s, delta_scale * phi.norm(), cfg.max_rank);
                if forward {
                    let u = dec.u.columns(0, r).into_owned();
                    let rows = maxvol(&u)?;
                    let inv = select_rows(&u, &rows)
                        .try_inverse()
                        .ok_or_else(|| Error::Singular("cross row block".into()))?;
                    cores[k] = Core3::from_left(nk, &(&u * inv));
                    left[k + 1] = rows
                        .iter()
                        .map(|&row| {
                            let mut m = left[k][row / nk].clone();
                            m.push(row % nk);
                            m
                        })
                        .collect();
                    if k == d - 2 {
                        cores[k + 1] = Core3::from_right(nk1, &select_rows(&phi, &rows));
                    }
                } else {
                    let v = dec.vt.rows(0, r).transpose();
                    let cols = maxvol(&v)?;
                    let inv = select_rows(&v, &cols)
                        .try_inverse()
                        .ok_or_else(|| Error::Singular("cross column block".into()))?;
                    cores[k + 1] = Core3::from_right(nk1, &(&v * inv).transpose());
                    let rr = right[k + 2].len();
                    right[k + 1] = cols
                        .iter()
                        .map(|&col| {
                            let mut m = vec![col / rr];
                            m.extend_from_slice(&right[k + 2][col % rr]);
                            m
                        })
                        .collect();
                    if k == 0 {
                        let sel = DMatrix::from_fn(phi.nrows(), cols.len(), |i, j| phi[(i, cols[j])]);
                        cores[0] = Core3::from_left(nk, &sel);
                    }
                }
            }
            half_sweeps += 1;
            let x = TtTensor::new(cores.clone())?;
            if let Some(p) = &prev {
                let diff = x.sub(p)?.norm();
                if diff <= cfg.tol * x.norm() {
                    prev = Some(x);
                    converged = true;
                    break 'outer;
                }
            }
            prev = Some(x);
        }
    }
    let tt = prev.expect("at least one half-sweep ran");
    Ok((tt, half_sweeps, converged))
}

fn select_rows(m: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)])
}
