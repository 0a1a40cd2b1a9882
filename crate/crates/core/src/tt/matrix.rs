//! TT-matrices. A core of shape `(r0, m, n, r1)` is stored exactly like an
//! order-3 core with merged mode `m·n`, so rounding and addition are
//! inherited from [`TtTensor`].

use nalgebra::DMatrix;

use super::tensor::{Core3, TtTensor};
use crate::error::{Error, Result};
use crate::kron::KronOp;
use crate::limits::check_f64_alloc;

#[derive(Debug, Clone, PartialEq)]
pub struct TtMatrix {
    merged: TtTensor,
    row_sizes: Vec<usize>,
    col_sizes: Vec<usize>,
}

impl TtMatrix {
    /// `merged` must have mode `k` of size `row_sizes[k] * col_sizes[k]`,
    /// with entry `(a, i, j, b)` at merged index `i * n + j`.
    pub fn from_merged(merged: TtTensor, row_sizes: Vec<usize>, col_sizes: Vec<usize>) -> Result<Self> {
        let modes = merged.mode_sizes();
        if row_sizes.len() != modes.len()
            || col_sizes.len() != modes.len()
            || modes.iter().zip(row_sizes.iter().zip(&col_sizes)).any(|(&q, (&m, &n))| q != m * n)
        {
            return Err(Error::ShapeMismatch(format!(
                "merged modes {modes:?} do not factor as {row_sizes:?} x {col_sizes:?}"
            )));
        }
        Ok(Self { merged, row_sizes, col_sizes })
    }

    /// Rank-1 TT-matrix `s · M_0 ⊗ M_1 ⊗ … ⊗ M_{d-1}`.
    pub fn rank1(scalar: f64, factors: &[DMatrix<f64>]) -> Result<Self> {
        let mut cores = Vec::with_capacity(factors.len());
        for (k, f) in factors.iter().enumerate() {
            let s = if k == 0 { scalar } else { 1.0 };
            let mut data = Vec::with_capacity(f.len());
            for i in 0..f.nrows() {
                for j in 0..f.ncols() {
                    data.push(s * f[(i, j)]);
                }
            }
            cores.push(Core3::new(1, f.nrows() * f.ncols(), 1, data)?);
        }
        Self::from_merged(
            TtTensor::new(cores)?,
            factors.iter().map(|f| f.nrows()).collect(),
            factors.iter().map(|f| f.ncols()).collect(),
        )
    }

    /// One rank-1 term per Kronecker term, summed; ranks are at most the term count.
    pub fn from_kron(op: &KronOp) -> Result<Self> {
        let mut acc: Option<TtMatrix> = None;
        for term in op.terms() {
            let t = Self::rank1(term.scalar(), term.factors())?;
            acc = Some(match acc {
                None => t,
                Some(a) => a.add(&t)?,
            });
        }
        acc.ok_or_else(|| Error::InvalidArgument("empty Kronecker operator".into()))
    }

    pub fn identity(sizes: &[usize]) -> Result<Self> {
        let f: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::identity(n, n)).collect();
        Self::rank1(1.0, &f)
    }

    pub fn ndim(&self) -> usize {
        self.row_sizes.len()
    }

    pub fn row_sizes(&self) -> &[usize] {
        &self.row_sizes
    }

    pub fn col_sizes(&self) -> &[usize] {
        &self.col_sizes
    }

    pub fn ranks(&self) -> Vec<usize> {
        self.merged.ranks()
    }

    pub fn merged(&self) -> &TtTensor {
        &self.merged
    }

    pub fn storage_bytes(&self) -> u64 {
        self.merged.storage_bytes()
    }

    /// Entry `(a, i, j, b)` of core `k`.
    #[inline]
    pub fn at(&self, k: usize, a: usize, i: usize, j: usize, b: usize) -> f64 {
        self.merged.cores()[k].at(a, i * self.col_sizes[k] + j, b)
    }

    /// `(r0, r1)` of core `k`.
    pub fn core_ranks(&self, k: usize) -> (usize, usize) {
        let (r0, _, r1) = self.merged.cores()[k].shape();
        (r0, r1)
    }

    pub fn add(&self, other: &TtMatrix) -> Result<Self> {
        if self.row_sizes != other.row_sizes || self.col_sizes != other.col_sizes {
            return Err(Error::ShapeMismatch("TT-matrix sizes differ".into()));
        }
        Self::from_merged(self.merged.add(&other.merged)?, self.row_sizes.clone(), self.col_sizes.clone())
    }

    pub fn scale(&self, alpha: f64) -> Self {
        Self { merged: self.merged.scale(alpha), ..self.clone() }
    }

    pub fn round(&self, tol: f64) -> Self {
        Self { merged: self.merged.round(tol), ..self.clone() }
    }

    /// Matrix-by-vector in TT form; output ranks are products of input ranks.
    pub fn apply(&self, x: &TtTensor) -> Result<TtTensor> {
        if x.mode_sizes() != self.col_sizes {
            return Err(Error::ShapeMismatch(format!(
                "TT-matrix columns {:?} vs vector modes {:?}",
                self.col_sizes,
                x.mode_sizes()
            )));
        }
        let mut cores = Vec::with_capacity(self.ndim());
        for (k, xc) in x.cores().iter().enumerate() {
            let (ra0, ra1) = self.core_ranks(k);
            let (rx0, n, rx1) = xc.shape();
            let m = self.row_sizes[k];
            let mut out = Core3::zeros(ra0 * rx0, m, ra1 * rx1);
            for a in 0..ra0 {
                for i in 0..m {
                    for j in 0..n {
                        for b in 0..ra1 {
                            let v = self.at(k, a, i, j, b);
                            if v == 0.0 {
                                continue;
                            }
                            for al in 0..rx0 {
                                for be in 0..rx1 {
                                    *out.at_mut(a * rx0 + al, i, b * rx1 + be) += v * xc.at(al, j, be);
                                }
                            }
                        }
                    }
                }
            }
            cores.push(out);
        }
        TtTensor::new(cores)
    }

    /// Dense matrix; rows and columns are row-major multi-indices.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let rows: usize = self.row_sizes.iter().product();
        let cols: usize = self.col_sizes.iter().product();
        check_f64_alloc("dense TT-matrix", rows as u128 * cols as u128)?;
        // partial[b] sums the Kronecker products of slices ending in rank index b
        let mut partial = vec![DMatrix::from_element(1, 1, 1.0)];
        for k in 0..self.ndim() {
            let (r0, r1) = self.core_ranks(k);
            let (m, n) = (self.row_sizes[k], self.col_sizes[k]);
            let mut next = Vec::with_capacity(r1);
            for b in 0..r1 {
                let mut acc: Option<DMatrix<f64>> = None;
                for (a, p) in partial.iter().enumerate().take(r0) {
                    let slice = DMatrix::from_fn(m, n, |i, j| self.at(k, a, i, j, b));
                    let term = p.kronecker(&slice);
                    acc = Some(match acc {
                        None => term,
                        Some(s) => s + term,
                    });
                }
                next.push(acc.expect("r0 >= 1"));
            }
            partial = next;
        }
        Ok(partial.swap_remove(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kron::KronTerm;

    fn mat(r: usize, c: usize, seed: f64) -> DMatrix<f64> {
        DMatrix::from_fn(r, c, |i, j| ((i * 5 + j * 3) as f64 * seed).sin())
    }

    #[test]
    fn from_kron_matches_dense_kron() {
        let op = KronOp::new(vec![
            KronTerm::new(2.0, [mat(2, 2, 0.3), mat(3, 3, 0.7), mat(2, 2, 1.1), mat(2, 2, 0.2)]),
            KronTerm::new(-1.0, [mat(2, 2, 0.9), mat(3, 3, 0.1), mat(2, 2, 0.5), mat(2, 2, 1.7)]),
        ])
        .unwrap();
        let tm = TtMatrix::from_kron(&op).unwrap();
        assert_eq!(tm.ranks(), vec![2, 2, 2]);
        let diff = tm.to_dense().unwrap() - op.to_dense().unwrap();
        assert!(diff.norm() < 1e-12);
    }

    #[test]
    fn identity_apply_is_identity() {
        let x = TtTensor::rank1(&[vec![1.0, 2.0], vec![3.0, -1.0, 0.5], vec![1.0], vec![2.0, 2.0]]).unwrap();
        let y = TtMatrix::identity(&[2, 3, 1, 2]).unwrap().apply(&x).unwrap();
        assert_eq!(y, x);
    }
}
