//! Dense 4-D value tensors in `(t, x, y, z)` order, row-major with `t`
//! slowest-varying.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::limits::check_f64_alloc;

pub type Shape4 = [usize; 4];

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor4 {
    shape: Shape4,
    data: Vec<f64>,
}

fn numel(shape: &Shape4) -> usize {
    shape.iter().product()
}

impl Tensor4 {
    pub fn zeros(shape: Shape4) -> Self {
        Self { shape, data: vec![0.0; numel(&shape)] }
    }

    pub fn from_vec(shape: Shape4, data: Vec<f64>) -> Result<Self> {
        if data.len() != numel(&shape) {
            return Err(Error::ShapeMismatch(format!("{} values for shape {:?}", data.len(), shape)));
        }
        Ok(Self { shape, data })
    }

    pub fn from_fn(shape: Shape4, mut f: impl FnMut(Shape4) -> f64) -> Self {
        let mut data = Vec::with_capacity(numel(&shape));
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    for l in 0..shape[3] {
                        data.push(f([i, j, k, l]));
                    }
                }
            }
        }
        Self { shape, data }
    }

    /// Like [`Tensor4::from_fn`] but checked against the memory cap and fallible.
    pub fn try_from_fn(shape: Shape4, f: impl FnMut(Shape4) -> Result<f64>) -> Result<Self> {
        check_f64_alloc("dense tensor", numel(&shape) as u128)?;
        let mut f = f;
        let mut data = Vec::with_capacity(numel(&shape));
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    for l in 0..shape[3] {
                        data.push(f([i, j, k, l])?);
                    }
                }
            }
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> Shape4 {
        self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn offset(&self, idx: Shape4) -> usize {
        ((idx[0] * self.shape[1] + idx[1]) * self.shape[2] + idx[2]) * self.shape[3] + idx[3]
    }

    #[inline]
    pub fn get(&self, idx: Shape4) -> f64 {
        self.data[self.offset(idx)]
    }

    #[inline]
    pub fn set(&mut self, idx: Shape4, v: f64) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    pub fn norm(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn scaled(&self, alpha: f64) -> Self {
        Self { shape: self.shape, data: self.data.iter().map(|v| alpha * v).collect() }
    }

    /// `self += alpha * other`
    pub fn axpy(&mut self, alpha: f64, other: &Tensor4) -> Result<()> {
        self.check_same(other)?;
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += alpha * b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &Tensor4) -> Result<Tensor4> {
        let mut out = self.clone();
        out.axpy(-1.0, other)?;
        Ok(out)
    }

    pub fn dot(&self, other: &Tensor4) -> Result<f64> {
        self.check_same(other)?;
        Ok(self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum())
    }

    fn check_same(&self, other: &Tensor4) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::ShapeMismatch(format!("{:?} vs {:?}", self.shape, other.shape)));
        }
        Ok(())
    }

    /// Mode product along `axis`: `out[.., i, ..] = Σ_j m[i, j] self[.., j, ..]`.
    pub fn mode_apply(&self, axis: usize, m: &DMatrix<f64>) -> Result<Tensor4> {
        if m.ncols() != self.shape[axis] {
            return Err(Error::ShapeMismatch(format!(
                "mode-{axis} factor has {} columns, tensor mode has size {}",
                m.ncols(),
                self.shape[axis]
            )));
        }
        let before: usize = self.shape[..axis].iter().product();
        let after: usize = self.shape[axis + 1..].iter().product();
        let n_in = self.shape[axis];
        let n_out = m.nrows();
        let mut shape = self.shape;
        shape[axis] = n_out;
        let mut out = vec![0.0; before * n_out * after];
        for a in 0..before {
            let src = &self.data[a * n_in * after..(a + 1) * n_in * after];
            let dst = &mut out[a * n_out * after..(a + 1) * n_out * after];
            for i in 0..n_out {
                let row = &mut dst[i * after..(i + 1) * after];
                for j in 0..n_in {
                    let c = m[(i, j)];
                    if c == 0.0 {
                        continue;
                    }
                    let col = &src[j * after..(j + 1) * after];
                    for (r, s) in row.iter_mut().zip(col) {
                        *r += c * s;
                    }
                }
            }
        }
        Ok(Tensor4 { shape, data: out })
    }

    /// Sub-tensor on the Cartesian product of the index sets.
    pub fn gather(&self, keep: &[Vec<usize>; 4]) -> Result<Tensor4> {
        for (ax, k) in keep.iter().enumerate() {
            if let Some(&bad) = k.iter().find(|&&i| i >= self.shape[ax]) {
                return Err(Error::ShapeMismatch(format!("index {bad} out of range on axis {ax}")));
            }
        }
        let shape = [keep[0].len(), keep[1].len(), keep[2].len(), keep[3].len()];
        Ok(Tensor4::from_fn(shape, |[i, j, k, l]| self.get([keep[0][i], keep[1][j], keep[2][k], keep[3][l]])))
    }

    /// Writes `self` into `target` at the Cartesian product of the index sets.
    pub fn scatter_into(&self, target: &mut Tensor4, keep: &[Vec<usize>; 4]) -> Result<()> {
        let shape = [keep[0].len(), keep[1].len(), keep[2].len(), keep[3].len()];
        if shape != self.shape {
            return Err(Error::ShapeMismatch(format!(
                "scatter of {:?} into index sets of shape {:?}",
                self.shape, shape
            )));
        }
        for (ax, k) in keep.iter().enumerate() {
            if k.iter().any(|&i| i >= target.shape[ax]) {
                return Err(Error::ShapeMismatch(format!("scatter index out of range on axis {ax}")));
            }
        }
        for i in 0..shape[0] {
            for j in 0..shape[1] {
                for k in 0..shape[2] {
                    for l in 0..shape[3] {
                        target.set([keep[0][i], keep[1][j], keep[2][k], keep[3][l]], self.get([i, j, k, l]));
                    }
                }
            }
        }
        Ok(())
    }
}
