//! Quasi-maximal-volume row selection for tall matrices.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Dominance threshold: the selected block `B` satisfies `max |m B⁻¹| ≤ 1 + DELTA`.
pub const MAXVOL_DELTA: f64 = 1e-2;

const MAX_SWAPS_PER_ROW: usize = 100;

/// Picks `m.ncols()` rows such that every entry of `m · B⁻¹` has modulus at
/// most `1 + MAXVOL_DELTA`, `B` being the selected square block. The start
/// comes from partially pivoted elimination and is then improved by single
/// row swaps with rank-1 updates of `m · B⁻¹`.
pub fn maxvol(m: &DMatrix<f64>) -> Result<Vec<usize>> {
    let (n, r) = m.shape();
    if r == 0 || n < r {
        return Err(Error::InvalidArgument(format!("maxvol needs a tall matrix, got {n}x{r}")));
    }
    let mut rows = initial_pivots(m)?;
    let block = DMatrix::from_fn(r, r, |i, j| m[(rows[i], j)]);
    let inv = block.try_inverse().ok_or_else(|| Error::RankDeficient("maxvol starting block is singular".into()))?;
    let mut coef = m * inv;
    for _ in 0..MAX_SWAPS_PER_ROW * n {
        let (mut bi, mut bj, mut big) = (0, 0, 0.0);
        for j in 0..r {
            for i in 0..n {
                let v = coef[(i, j)].abs();
                if v > big {
                    (bi, bj, big) = (i, j, v);
                }
            }
        }
        if big <= 1.0 + MAXVOL_DELTA {
            return Ok(rows);
        }
        // swapping row bj of the block for row bi scales the volume by |coef[bi, bj]|
        let pivot = coef[(bi, bj)];
        let col = coef.column(bj).into_owned();
        let mut row = coef.row(bi).into_owned();
        row[bj] -= 1.0;
        coef -= (col / pivot) * row;
        rows[bj] = bi;
    }
    Ok(rows)
}

fn initial_pivots(m: &DMatrix<f64>) -> Result<Vec<usize>> {
    let (n, r) = m.shape();
    let scale = m.amax();
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::RankDeficient("maxvol input is zero or non-finite".into()));
    }
    let mut work = m.clone();
    let mut used = vec![false; n];
    let mut rows = Vec::with_capacity(r);
    for c in 0..r {
        let (mut best, mut piv) = (0.0, usize::MAX);
        for i in (0..n).filter(|&i| !used[i]) {
            if work[(i, c)].abs() > best {
                best = work[(i, c)].abs();
                piv = i;
            }
        }
        if piv == usize::MAX || best <= 1e-14 * scale {
            return Err(Error::RankDeficient(format!("maxvol input has numerical rank {c} < {r}")));
        }
        used[piv] = true;
        rows.push(piv);
        let prow = work.row(piv).into_owned();
        let p = prow[c];
        for i in (0..n).filter(|&i| !used[i]) {
            let f = work[(i, c)] / p;
            if f != 0.0 {
                for j in c..r {
                    work[(i, j)] -= f * prow[j];
                }
            }
        }
    }
    Ok(rows)
}

/// `max |m · B⁻¹|` for the block selected by `rows`.
pub fn dominance(m: &DMatrix<f64>, rows: &[usize]) -> Result<f64> {
    let r = m.ncols();
    let block = DMatrix::from_fn(r, r, |i, j| m[(rows[i], j)]);
    let inv = block.try_inverse().ok_or_else(|| Error::Singular("selected block is singular".into()))?;
    Ok((m * inv).amax())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_identity_rows() {
        let m = DMatrix::from_row_slice(5, 2, &[0.3, 0.1, 1.0, 0.0, -0.2, 0.4, 0.0, 1.0, 0.5, -0.5]);
        let mut rows = maxvol(&m).unwrap();
        rows.sort();
        assert_eq!(rows, vec![1, 3]);
    }

    #[test]
    fn rank_deficient_is_rejected() {
        let m = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, -1.0, -2.0]);
        assert!(matches!(maxvol(&m), Err(Error::RankDeficient(_))));
    }
}
