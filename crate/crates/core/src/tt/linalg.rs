//! Small dense helpers shared by the TT algorithms. Matrices here are built
//! from and flattened to row-major buffers, matching the core layouts.

use nalgebra::{DMatrix, DVector};

pub(crate) fn from_rows(rows: usize, cols: usize, data: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(rows, cols, data)
}

pub(crate) fn to_rows(m: &DMatrix<f64>) -> Vec<f64> {
    m.transpose().as_slice().to_vec()
}

/// Thin SVD with singular values in descending order.
pub(crate) struct Svd {
    pub u: DMatrix<f64>,
    pub s: Vec<f64>,
    pub vt: DMatrix<f64>,
}

// nalgebra's bidiagonal SVD can return a wrong factorization for some
// rank-deficient inputs (exact zero columns), which TT rounding hits
// routinely, so the decomposition itself is delegated to faer.
pub(crate) fn svd(m: &DMatrix<f64>) -> Svd {
    let (rows, cols) = m.shape();
    let k = rows.min(cols);
    if k == 0 {
        return Svd { u: DMatrix::zeros(rows, 0), s: vec![], vt: DMatrix::zeros(0, cols) };
    }
    let a = faer::Mat::<f64>::from_fn(rows, cols, |i, j| m[(i, j)]);
    match a.thin_svd() {
        Ok(dec) => {
            let (u, v, s) = (dec.U(), dec.V(), dec.S().column_vector());
            Svd {
                u: DMatrix::from_fn(rows, k, |i, j| u[(i, j)]),
                s: (0..k).map(|j| s[j]).collect(),
                vt: DMatrix::from_fn(k, cols, |i, j| v[(j, i)]),
            }
        }
        Err(_) => svd_via_qr(m),
    }
}

/// Solves `m x = rhs` by partially pivoted LU. Returns `None` when the
/// result is not finite.
pub(crate) fn lu_solve(m: &DMatrix<f64>, rhs: &[f64]) -> Option<Vec<f64>> {
    use faer::linalg::solvers::Solve;
    let n = m.nrows();
    let a = faer::MatRef::from_column_major_slice(m.as_slice(), n, m.ncols());
    let mut x = faer::Mat::<f64>::from_fn(n, 1, |i, _| rhs[i]);
    a.partial_piv_lu().solve_in_place(x.as_mut());
    let out: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
    out.iter().all(|v| v.is_finite()).then_some(out)
}

/// Fallback: Householder QR first, then nalgebra's SVD of the small factor.
fn svd_via_qr(m: &DMatrix<f64>) -> Svd {
    let tall = m.nrows() >= m.ncols();
    let a = if tall { m.clone() } else { m.transpose() };
    let (q, r) = qr(&a);
    let dec = r.svd(true, true);
    let (ur, vt) = (q * dec.u.expect("u requested"), dec.v_t.expect("v_t requested"));
    let k = dec.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&x, &y| dec.singular_values[y].total_cmp(&dec.singular_values[x]));
    let s = order.iter().map(|&i| dec.singular_values[i]).collect();
    let u = DMatrix::from_fn(ur.nrows(), k, |i, j| ur[(i, order[j])]);
    let vt = DMatrix::from_fn(k, vt.ncols(), |i, j| vt[(order[i], j)]);
    if tall {
        Svd { u, s, vt }
    } else {
        Svd { u: vt.transpose(), s, vt: u.transpose() }
    }
}

/// Smallest rank whose discarded tail has 2-norm at most `delta`, clamped to `[1, max_rank]`.
pub(crate) fn truncation_rank(s: &[f64], delta: f64, max_rank: usize) -> usize {
    if s.is_empty() {
        return 1;
    }
    let mut tail = 0.0;
    let mut r = s.len();
    while r > 1 {
        let next = tail + s[r - 1] * s[r - 1];
        if next.sqrt() > delta {
            break;
        }
        tail = next;
        r -= 1;
    }
    r.clamp(1, max_rank.max(1))
}

/// Thin QR: `m = q * r` with `q` having orthonormal columns.
pub(crate) fn qr(m: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let dec = m.clone().qr();
    (dec.q(), dec.r())
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dvec(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}
