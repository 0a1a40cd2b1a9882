//! Sums of Kronecker products over the four axes `(t, x, y, z)`.
//!
//! A [`KronOp`] acts on vectorized 4-D tensors with `t` slowest-varying, so a
//! term `s · F_t ⊗ F_x ⊗ F_y ⊗ F_z` is applied as four successive mode
//! products and the Kronecker matrix is never formed.

use nalgebra::DMatrix;

use crate::chebyshev::DiffMatrix;
use crate::error::{Error, Result};
use crate::limits::check_f64_alloc;
use crate::tensor::{Shape4, Tensor4};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Axis {
    T,
    X,
    Y,
    Z,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::T, Axis::X, Axis::Y, Axis::Z];

    pub fn index(self) -> usize {
        match self {
            Axis::T => 0,
            Axis::X => 1,
            Axis::Y => 2,
            Axis::Z => 3,
        }
    }
}

fn is_identity(m: &DMatrix<f64>) -> bool {
    m.is_square()
        && m.iter().enumerate().all(|(k, &v)| {
            let (i, j) = (k % m.nrows(), k / m.nrows());
            if i == j {
                v == 1.0
            } else {
                v == 0.0
            }
        })
}

#[derive(Debug, Clone)]
pub struct KronTerm {
    scalar: f64,
    factors: [DMatrix<f64>; 4],
    identity: [bool; 4],
}

impl KronTerm {
    pub fn new(scalar: f64, factors: [DMatrix<f64>; 4]) -> Self {
        let identity =
            [is_identity(&factors[0]), is_identity(&factors[1]), is_identity(&factors[2]), is_identity(&factors[3])];
        Self { scalar, factors, identity }
    }

    pub fn scalar(&self) -> f64 {
        self.scalar
    }

    pub fn factors(&self) -> &[DMatrix<f64>; 4] {
        &self.factors
    }

    pub fn in_shape(&self) -> Shape4 {
        [0, 1, 2, 3].map(|a| self.factors[a].ncols())
    }

    pub fn out_shape(&self) -> Shape4 {
        [0, 1, 2, 3].map(|a| self.factors[a].nrows())
    }

    fn apply(&self, v: &Tensor4) -> Result<Tensor4> {
        let mut cur: Option<Tensor4> = None;
        // innermost axis first keeps intermediate sizes small when factors shrink
        for axis in (0..4).rev() {
            if self.identity[axis] {
                continue;
            }
            let next = cur.as_ref().unwrap_or(v).mode_apply(axis, &self.factors[axis])?;
            cur = Some(next);
        }
        let mut out = cur.unwrap_or_else(|| v.clone());
        if self.scalar != 1.0 {
            out.data_mut().iter_mut().for_each(|x| *x *= self.scalar);
        }
        Ok(out)
    }
}

/// A non-empty sum of Kronecker terms sharing input and output shapes.
#[derive(Debug, Clone)]
pub struct KronOp {
    terms: Vec<KronTerm>,
    in_shape: Shape4,
    out_shape: Shape4,
}

impl KronOp {
    pub fn new(terms: Vec<KronTerm>) -> Result<Self> {
        let first =
            terms.first().ok_or_else(|| Error::InvalidArgument("Kronecker operator needs at least one term".into()))?;
        let in_shape = first.in_shape();
        let out_shape = first.out_shape();
        for t in &terms[1..] {
            if t.in_shape() != in_shape || t.out_shape() != out_shape {
                return Err(Error::ShapeMismatch(format!(
                    "term shapes {:?}->{:?} differ from {:?}->{:?}",
                    t.in_shape(),
                    t.out_shape(),
                    in_shape,
                    out_shape
                )));
            }
        }
        Ok(Self { terms, in_shape, out_shape })
    }

    pub fn single(scalar: f64, factors: [DMatrix<f64>; 4]) -> Self {
        let term = KronTerm::new(scalar, factors);
        let (in_shape, out_shape) = (term.in_shape(), term.out_shape());
        Self { terms: vec![term], in_shape, out_shape }
    }

    pub fn identity(shape: Shape4) -> Self {
        Self::single(1.0, shape.map(|n| DMatrix::identity(n, n)))
    }

    pub fn terms(&self) -> &[KronTerm] {
        &self.terms
    }

    pub fn in_shape(&self) -> Shape4 {
        self.in_shape
    }

    pub fn out_shape(&self) -> Shape4 {
        self.out_shape
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        let terms = self.terms.iter().map(|t| KronTerm { scalar: t.scalar * alpha, ..t.clone() }).collect();
        Self { terms, ..*self }
    }

    /// Transpose, factor by factor.
    pub fn transpose(&self) -> Self {
        let terms =
            self.terms.iter().map(|t| KronTerm::new(t.scalar, t.factors.clone().map(|f| f.transpose()))).collect();
        Self { terms, in_shape: self.out_shape, out_shape: self.in_shape }
    }

    /// `self + other` as a concatenation of terms.
    pub fn plus(&self, other: &KronOp) -> Result<Self> {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(terms)
    }

    pub fn apply(&self, v: &Tensor4) -> Result<Tensor4> {
        if v.shape() != self.in_shape {
            return Err(Error::ShapeMismatch(format!("operator expects {:?}, got {:?}", self.in_shape, v.shape())));
        }
        let mut acc = Tensor4::zeros(self.out_shape);
        for term in &self.terms {
            acc.axpy(1.0, &term.apply(v)?)?;
        }
        Ok(acc)
    }

    /// Keeps only the listed rows of every factor, per axis.
    pub fn row_select(&self, keep: &[Vec<usize>; 4]) -> Result<Self> {
        self.select(Some(keep), None)
    }

    /// Row and/or column selection of every factor, per axis.
    pub fn select(&self, rows: Option<&[Vec<usize>; 4]>, cols: Option<&[Vec<usize>; 4]>) -> Result<Self> {
        let mut terms = Vec::with_capacity(self.terms.len());
        for t in &self.terms {
            let mut factors = t.factors.clone();
            for a in 0..4 {
                let all_r: Vec<usize> = (0..factors[a].nrows()).collect();
                let all_c: Vec<usize> = (0..factors[a].ncols()).collect();
                let r = rows.map(|k| k[a].as_slice()).unwrap_or(&all_r);
                let c = cols.map(|k| k[a].as_slice()).unwrap_or(&all_c);
                factors[a] = crate::chebyshev::restrict(&factors[a], r, c)?;
            }
            terms.push(KronTerm::new(t.scalar, factors));
        }
        Self::new(terms)
    }

    /// Explicit matrix, row index = linearized output multi-index.
    pub fn to_dense(&self) -> Result<DMatrix<f64>> {
        let rows: usize = self.out_shape.iter().product();
        let cols: usize = self.in_shape.iter().product();
        check_f64_alloc("dense Kronecker operator", rows as u128 * cols as u128)?;
        let mut m = DMatrix::zeros(rows, cols);
        for t in &self.terms {
            let mut k = DMatrix::from_element(1, 1, t.scalar);
            for f in &t.factors {
                k = k.kronecker(f);
            }
            m += k;
        }
        Ok(m)
    }
}

/// `I_t ⊗ S_xx ⊗ I ⊗ I + I_t ⊗ I ⊗ S_yy ⊗ I + I_t ⊗ I ⊗ I ⊗ S_zz`.
pub fn assemble_laplacian(
    sxx: &DMatrix<f64>,
    syy: &DMatrix<f64>,
    szz: &DMatrix<f64>,
    time_dim: usize,
) -> Result<KronOp> {
    for (name, m) in [("x", sxx), ("y", syy), ("z", szz)] {
        if !m.is_square() {
            return Err(Error::ShapeMismatch(format!("S_{name}{name} is not square")));
        }
    }
    let it = DMatrix::identity(time_dim, time_dim);
    let ix = DMatrix::identity(sxx.nrows(), sxx.nrows());
    let iy = DMatrix::identity(syy.nrows(), syy.nrows());
    let iz = DMatrix::identity(szz.nrows(), szz.nrows());
    KronOp::new(vec![
        KronTerm::new(1.0, [it.clone(), sxx.clone(), iy.clone(), iz.clone()]),
        KronTerm::new(1.0, [it.clone(), ix.clone(), syy.clone(), iz]),
        KronTerm::new(1.0, [it, ix, iy, szz.clone()]),
    ])
}

/// Single-term operator with `d` on `axis` and identities elsewhere.
pub fn assemble_first_derivative(axis: Axis, d: &DiffMatrix, dims: Shape4) -> Result<KronOp> {
    let m = d.entries();
    let a = axis.index();
    if !m.is_square() || m.nrows() != dims[a] {
        return Err(Error::ShapeMismatch(format!(
            "derivative of size {} on axis {:?} of size {}",
            m.nrows(),
            axis,
            dims[a]
        )));
    }
    let mut factors = dims.map(|n| DMatrix::identity(n, n));
    factors[a] = m.clone();
    Ok(KronOp::single(1.0, factors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chebyshev::{diff_matrix, make_grid, second_diff, GridSpec, NodeKind};

    fn lobatto(n: usize, a: f64, b: f64) -> crate::chebyshev::Grid {
        make_grid(GridSpec::new(NodeKind::Lobatto, n, (a, b))).unwrap()
    }

    #[test]
    fn identity_op_is_identity() {
        let v = Tensor4::from_fn([2, 3, 2, 4], |[a, b, c, d]| (a + b * c) as f64 - d as f64);
        assert_eq!(KronOp::identity([2, 3, 2, 4]).apply(&v).unwrap(), v);
    }

    #[test]
    fn acts_per_mode_on_separable_input() {
        let gx = lobatto(6, -1.0, 1.0);
        let sx = diff_matrix(&gx).unwrap();
        let dims = [3, 6, 2, 2];
        let op = assemble_first_derivative(Axis::X, &sx, dims).unwrap();
        let a = [1.0, 2.0, -1.0];
        let b: Vec<f64> = gx.nodes().iter().map(|x| x.powi(3)).collect();
        let c = [0.5, 2.0];
        let d = [1.0, -3.0];
        let v = Tensor4::from_fn(dims, |[i, j, k, l]| a[i] * b[j] * c[k] * d[l]);
        let out = op.apply(&v).unwrap();
        for i in 0..3 {
            for (j, x) in gx.nodes().iter().enumerate() {
                for k in 0..2 {
                    for l in 0..2 {
                        let want = a[i] * 3.0 * x * x * c[k] * d[l];
                        assert!((out.get([i, j, k, l]) - want).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn laplacian_of_quadratic_is_six() {
        let g = lobatto(7, -1.0, 1.0);
        let s2 = second_diff(&diff_matrix(&g).unwrap());
        let lap = assemble_laplacian(&s2, &s2, &s2, 2).unwrap();
        let x = g.nodes();
        let v = Tensor4::from_fn([2, 7, 7, 7], |[_, i, j, k]| x[i] * x[i] + x[j] * x[j] + x[k] * x[k]);
        let out = lap.apply(&v).unwrap();
        assert!(out.data().iter().all(|&o| (o - 6.0).abs() <= 1e-9));
        let ones = Tensor4::from_fn([2, 7, 7, 7], |_| 1.0);
        assert!(lap.apply(&ones).unwrap().max_abs() <= 1e-9);
    }

    #[test]
    fn row_select_keep_all_is_identical() {
        let g = lobatto(4, 0.0, 1.0);
        let d = diff_matrix(&g).unwrap();
        let op = assemble_first_derivative(Axis::T, &d, [4, 2, 2, 2]).unwrap();
        let keep = [vec![0, 1, 2, 3], vec![0, 1], vec![0, 1], vec![0, 1]];
        let sel = op.row_select(&keep).unwrap();
        assert_eq!(sel.to_dense().unwrap(), op.to_dense().unwrap());
        let empty = [vec![], vec![0, 1], vec![0, 1], vec![0, 1]];
        assert!(op.row_select(&empty).is_err());
    }

    #[test]
    fn dimension_mismatch_errors() {
        let g = lobatto(4, 0.0, 1.0);
        let d = diff_matrix(&g).unwrap();
        assert!(assemble_first_derivative(Axis::Y, &d, [4, 4, 5, 4]).is_err());
        let op = KronOp::identity([2, 2, 2, 2]);
        assert!(op.apply(&Tensor4::zeros([2, 2, 2, 3])).is_err());
    }
}
