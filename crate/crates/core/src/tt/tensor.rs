//! Tensor trains of arbitrary order. The solver works with order 4, but the
//! algorithms are written for any `d ≥ 1` so TT-matrices can reuse them with
//! merged row/column modes.

use nalgebra::DMatrix;

use super::linalg::{from_rows, norm, qr, svd, to_rows, truncation_rank};
use crate::error::{Error, Result};
use crate::limits::check_f64_alloc;
use crate::tensor::Tensor4;

/// Order-3 core of shape `(r0, n, r1)`, entry `(a, i, b)` at `(a * n + i) * r1 + b`.
#[derive(Debug, Clone, PartialEq)]
pub struct Core3 {
    r0: usize,
    n: usize,
    r1: usize,
    data: Vec<f64>,
}

impl Core3 {
    pub fn new(r0: usize, n: usize, r1: usize, data: Vec<f64>) -> Result<Self> {
        if r0 == 0 || n == 0 || r1 == 0 {
            return Err(Error::ShapeMismatch(format!("core shape ({r0},{n},{r1}) has a zero extent")));
        }
        if data.len() != r0 * n * r1 {
            return Err(Error::ShapeMismatch(format!("core ({r0},{n},{r1}) given {} values", data.len())));
        }
        Ok(Self { r0, n, r1, data })
    }

    pub fn zeros(r0: usize, n: usize, r1: usize) -> Self {
        Self { r0, n, r1, data: vec![0.0; r0 * n * r1] }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.r0, self.n, self.r1)
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    #[inline]
    pub fn at(&self, a: usize, i: usize, b: usize) -> f64 {
        self.data[(a * self.n + i) * self.r1 + b]
    }

    #[inline]
    pub fn at_mut(&mut self, a: usize, i: usize, b: usize) -> &mut f64 {
        &mut self.data[(a * self.n + i) * self.r1 + b]
    }

    /// `(r0·n) × r1` unfolding.
    pub(crate) fn left(&self) -> DMatrix<f64> {
        from_rows(self.r0 * self.n, self.r1, &self.data)
    }

    /// `r0 × (n·r1)` unfolding.
    pub(crate) fn right(&self) -> DMatrix<f64> {
        from_rows(self.r0, self.n * self.r1, &self.data)
    }

    pub(crate) fn from_left(n: usize, m: &DMatrix<f64>) -> Self {
        Self { r0: m.nrows() / n, n, r1: m.ncols(), data: to_rows(m) }
    }

    pub(crate) fn from_right(n: usize, m: &DMatrix<f64>) -> Self {
        Self { r0: m.nrows(), n, r1: m.ncols() / n, data: to_rows(m) }
    }

    pub fn numel(&self) -> usize {
        self.data.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TtTensor {
    cores: Vec<Core3>,
}

impl TtTensor {
    pub fn new(cores: Vec<Core3>) -> Result<Self> {
        if cores.is_empty() {
            return Err(Error::InvalidArgument("a tensor train needs at least one core".into()));
        }
        if cores[0].r0 != 1 || cores[cores.len() - 1].r1 != 1 {
            return Err(Error::ShapeMismatch("boundary ranks must be 1".into()));
        }
        for (k, w) in cores.windows(2).enumerate() {
            if w[0].r1 != w[1].r0 {
                return Err(Error::ShapeMismatch(format!(
                    "rank mismatch between cores {k} and {}: {} vs {}",
                    k + 1,
                    w[0].r1,
                    w[1].r0
                )));
            }
        }
        Ok(Self { cores })
    }

    /// Rank-1 train from one vector per mode.
    pub fn rank1(vectors: &[Vec<f64>]) -> Result<Self> {
        let cores = vectors.iter().map(|v| Core3::new(1, v.len(), 1, v.clone())).collect::<Result<Vec<_>>>()?;
        Self::new(cores)
    }

    pub fn zeros(mode_sizes: &[usize]) -> Result<Self> {
        Self::rank1(&mode_sizes.iter().map(|&n| vec![0.0; n]).collect::<Vec<_>>())
    }

    pub fn ones(mode_sizes: &[usize]) -> Result<Self> {
        Self::rank1(&mode_sizes.iter().map(|&n| vec![1.0; n]).collect::<Vec<_>>())
    }

    pub fn ndim(&self) -> usize {
        self.cores.len()
    }

    pub fn cores(&self) -> &[Core3] {
        &self.cores
    }

    pub(crate) fn cores_mut(&mut self) -> &mut [Core3] {
        &mut self.cores
    }

    pub fn into_cores(self) -> Vec<Core3> {
        self.cores
    }

    pub fn mode_sizes(&self) -> Vec<usize> {
        self.cores.iter().map(|c| c.n).collect()
    }

    /// Interior ranks `r_1 .. r_{d-1}`.
    pub fn ranks(&self) -> Vec<usize> {
        self.cores[..self.cores.len() - 1].iter().map(|c| c.r1).collect()
    }

    pub fn numel(&self) -> usize {
        self.cores.iter().map(Core3::numel).sum()
    }

    pub fn storage_bytes(&self) -> u64 {
        8 * self.numel() as u64
    }

    /// TT-SVD of a row-major dense tensor with relative Frobenius accuracy `tol`.
    pub fn from_dense(data: &[f64], modes: &[usize], tol: f64) -> Result<Self> {
        if modes.is_empty() || modes.contains(&0) {
            return Err(Error::ShapeMismatch(format!("invalid mode sizes {modes:?}")));
        }
        if data.len() != modes.iter().product::<usize>() {
            return Err(Error::ShapeMismatch(format!("{} values for modes {modes:?}", data.len())));
        }
        if tol < 0.0 {
            return Err(Error::InvalidArgument(format!("negative tolerance {tol}")));
        }
        let d = modes.len();
        let delta = if d > 1 { tol / ((d - 1) as f64).sqrt() * norm(data) } else { 0.0 };
        let mut cores = Vec::with_capacity(d);
        let mut rest = data.to_vec();
        let mut r = 1;
        for &n in &modes[..d - 1] {
            let rows = r * n;
            let cols = rest.len() / rows;
            let dec = svd(&from_rows(rows, cols, &rest));
            let rk = truncation_rank(&dec.s, delta, usize::MAX);
            let u = dec.u.columns(0, rk).into_owned();
            cores.push(Core3::from_left(n, &u));
            let mut sv = dec.vt.rows(0, rk).into_owned();
            for (i, s) in dec.s.iter().take(rk).enumerate() {
                sv.row_mut(i).scale_mut(*s);
            }
            rest = to_rows(&sv);
            r = rk;
        }
        cores.push(Core3::new(r, modes[d - 1], 1, rest)?);
        Self::new(cores)
    }

    pub fn from_full(t: &Tensor4, tol: f64) -> Result<Self> {
        Self::from_dense(t.data(), &t.shape(), tol)
    }

    /// Row-major dense contraction, checked against the memory cap.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        let total: u128 = self.mode_sizes().iter().map(|&n| n as u128).product();
        check_f64_alloc("full tensor from TT", total)?;
        let mut cur = DMatrix::from_element(1, 1, 1.0);
        for c in &self.cores {
            let prod = &cur * c.right();
            cur = from_rows(prod.nrows() * c.n, c.r1, &to_rows(&prod));
        }
        Ok(cur.as_slice().to_vec())
    }

    pub fn full(&self) -> Result<Tensor4> {
        let m = self.mode_sizes();
        if m.len() != 4 {
            return Err(Error::ShapeMismatch(format!("full() on a {}-mode train", m.len())));
        }
        Tensor4::from_vec([m[0], m[1], m[2], m[3]], self.to_dense()?)
    }

    pub fn get(&self, idx: &[usize]) -> f64 {
        let mut v = vec![1.0];
        for (c, &i) in self.cores.iter().zip(idx) {
            let mut next = vec![0.0; c.r1];
            for (a, va) in v.iter().enumerate() {
                if *va == 0.0 {
                    continue;
                }
                let row = &c.data[(a * c.n + i) * c.r1..(a * c.n + i + 1) * c.r1];
                for (nb, rb) in next.iter_mut().zip(row) {
                    *nb += va * rb;
                }
            }
            v = next;
        }
        v[0]
    }

    fn check_modes(&self, other: &TtTensor) -> Result<()> {
        if self.mode_sizes() != other.mode_sizes() {
            return Err(Error::ShapeMismatch(format!(
                "mode sizes {:?} vs {:?}",
                self.mode_sizes(),
                other.mode_sizes()
            )));
        }
        Ok(())
    }

    pub fn scale(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.cores[0].data.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Block-diagonal concatenation; ranks add.
    pub fn add(&self, other: &TtTensor) -> Result<Self> {
        self.check_modes(other)?;
        let d = self.ndim();
        let mut cores = Vec::with_capacity(d);
        for k in 0..d {
            let (x, y) = (&self.cores[k], &other.cores[k]);
            let r0 = if k == 0 { 1 } else { x.r0 + y.r0 };
            let r1 = if k == d - 1 { 1 } else { x.r1 + y.r1 };
            let mut c = Core3::zeros(r0, x.n, r1);
            let (oy0, oy1) = (if k == 0 { 0 } else { x.r0 }, if k == d - 1 { 0 } else { x.r1 });
            for i in 0..x.n {
                for a in 0..x.r0 {
                    for b in 0..x.r1 {
                        *c.at_mut(a, i, b) = x.at(a, i, b);
                    }
                }
                for a in 0..y.r0 {
                    for b in 0..y.r1 {
                        *c.at_mut(oy0 + a, i, oy1 + b) += y.at(a, i, b);
                    }
                }
            }
            cores.push(c);
        }
        Self::new(cores)
    }

    pub fn sub(&self, other: &TtTensor) -> Result<Self> {
        self.add(&other.scale(-1.0))
    }

    /// Inner product by core-wise contraction.
    pub fn dot(&self, other: &TtTensor) -> Result<f64> {
        self.check_modes(other)?;
        let mut phi = DMatrix::from_element(1, 1, 1.0);
        for (x, y) in self.cores.iter().zip(&other.cores) {
            let mut next = DMatrix::zeros(x.r1, y.r1);
            for i in 0..x.n {
                let xi = DMatrix::from_fn(x.r0, x.r1, |a, b| x.at(a, i, b));
                let yi = DMatrix::from_fn(y.r0, y.r1, |a, b| y.at(a, i, b));
                next += xi.transpose() * &phi * yi;
            }
            phi = next;
        }
        Ok(phi[(0, 0)])
    }

    /// Frobenius norm through right-to-left orthogonalization; accurate
    /// even when the train is a difference of nearly equal terms.
    pub fn norm(&self) -> f64 {
        let mut x = self.clone();
        x.orthogonalize_right();
        norm(&x.cores[0].data)
    }

    /// Makes cores `1..d` right-orthonormal; the norm moves into core 0.
    pub fn orthogonalize_right(&mut self) {
        for k in (1..self.ndim()).rev() {
            let n = self.cores[k].n;
            let (q, r) = qr(&self.cores[k].right().transpose());
            self.cores[k] = Core3::from_right(n, &q.transpose());
            let prev = &self.cores[k - 1];
            let left = prev.left() * r.transpose();
            self.cores[k - 1] = Core3::from_left(prev.n, &left);
        }
    }

    /// Makes cores `0..d-1` left-orthonormal; the norm moves into the last core.
    pub fn orthogonalize_left(&mut self) {
        for k in 0..self.ndim() - 1 {
            let n = self.cores[k].n;
            let (q, r) = qr(&self.cores[k].left());
            self.cores[k] = Core3::from_left(n, &q);
            let next = &self.cores[k + 1];
            let right = r * next.right();
            self.cores[k + 1] = Core3::from_right(next.n, &right);
        }
    }

    /// Recompression to relative accuracy `tol`.
    pub fn round(&self, tol: f64) -> Self {
        self.round_with_max_rank(tol, usize::MAX)
    }

    pub fn round_with_max_rank(&self, tol: f64, max_rank: usize) -> Self {
        let d = self.ndim();
        let mut x = self.clone();
        x.orthogonalize_right();
        if d == 1 {
            return x;
        }
        let delta = tol / ((d - 1) as f64).sqrt() * norm(&x.cores[0].data);
        for k in 0..d - 1 {
            let n = x.cores[k].n;
            let dec = svd(&x.cores[k].left());
            let rk = truncation_rank(&dec.s, delta, max_rank);
            x.cores[k] = Core3::from_left(n, &dec.u.columns(0, rk).into_owned());
            let mut sv = dec.vt.rows(0, rk).into_owned();
            for (i, s) in dec.s.iter().take(rk).enumerate() {
                sv.row_mut(i).scale_mut(*s);
            }
            let next = &x.cores[k + 1];
            let right = sv * next.right();
            x.cores[k + 1] = Core3::from_right(next.n, &right);
        }
        x
    }

    /// Multiplies every slice `i` of mode `k` by `w[i]`; ranks are unchanged.
    pub fn mask_mode(&self, k: usize, w: &[f64]) -> Result<Self> {
        let c = self.cores.get(k).ok_or_else(|| Error::InvalidArgument(format!("mode {k} out of range")))?;
        if w.len() != c.n {
            return Err(Error::ShapeMismatch(format!("mask of length {} for mode of size {}", w.len(), c.n)));
        }
        let mut out = self.clone();
        let c = &mut out.cores[k];
        for a in 0..c.r0 {
            for (i, wi) in w.iter().enumerate() {
                for b in 0..c.r1 {
                    *c.at_mut(a, i, b) *= wi;
                }
            }
        }
        Ok(out)
    }

    /// Embeds mode `k` into a larger mode of size `new_n`: slice `i` moves to
    /// `positions[i]`, other slices are zero.
    pub fn pad_mode(&self, k: usize, positions: &[usize], new_n: usize) -> Result<Self> {
        let c = self.cores.get(k).ok_or_else(|| Error::InvalidArgument(format!("mode {k} out of range")))?;
        if positions.len() != c.n || positions.iter().any(|&p| p >= new_n) {
            return Err(Error::ShapeMismatch(format!("cannot place {} slices into a mode of size {new_n}", c.n)));
        }
        let mut nc = Core3::zeros(c.r0, new_n, c.r1);
        for a in 0..c.r0 {
            for (i, &p) in positions.iter().enumerate() {
                for b in 0..c.r1 {
                    *nc.at_mut(a, p, b) = c.at(a, i, b);
                }
            }
        }
        let mut out = self.clone();
        out.cores[k] = nc;
        Ok(out)
    }

    /// Keeps only the listed slices of mode `k`.
    pub fn select_mode(&self, k: usize, keep: &[usize]) -> Result<Self> {
        let c = self.cores.get(k).ok_or_else(|| Error::InvalidArgument(format!("mode {k} out of range")))?;
        if keep.is_empty() {
            return Err(Error::EmptySelection(format!("mode {k}")));
        }
        if keep.iter().any(|&i| i >= c.n) {
            return Err(Error::ShapeMismatch(format!("selection out of range on mode {k}")));
        }
        let mut nc = Core3::zeros(c.r0, keep.len(), c.r1);
        for a in 0..c.r0 {
            for (i, &src) in keep.iter().enumerate() {
                for b in 0..c.r1 {
                    *nc.at_mut(a, i, b) = c.at(a, src, b);
                }
            }
        }
        let mut out = self.clone();
        out.cores[k] = nc;
        Ok(out)
    }
}
