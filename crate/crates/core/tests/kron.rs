//! Kronecker-sum operators against explicit dense Kronecker products.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stmaxwell::chebyshev::{diff_matrix, make_grid, GridSpec, NodeKind};
use stmaxwell::kron::{assemble_first_derivative, Axis, KronOp, KronTerm};
use stmaxwell::tensor::Tensor4;

fn random(rng: &mut ChaCha8Rng, r: usize, c: usize) -> DMatrix<f64> {
    DMatrix::from_fn(r, c, |_, _| rng.random_range(-1.0..1.0))
}

fn random_tensor(rng: &mut ChaCha8Rng, shape: [usize; 4]) -> Tensor4 {
    Tensor4::from_fn(shape, |_| rng.random_range(-1.0..1.0))
}

fn dense_apply(op: &KronOp, v: &Tensor4) -> DVector<f64> {
    op.to_dense().unwrap() * DVector::from_column_slice(v.data())
}

fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
    let scale = b.iter().fold(1.0f64, |m, x| m.max(x.abs()));
    a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * scale)
}

#[test]
fn two_by_two_term_matches_explicit_kronecker() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let a = random(&mut rng, 2, 2);
    let b = random(&mut rng, 2, 2);
    let eye = DMatrix::identity(1, 1);
    let op = KronOp::single(1.0, [a.clone(), b.clone(), eye.clone(), eye]);
    let v = random_tensor(&mut rng, [2, 2, 1, 1]);
    let want = a.kronecker(&b) * DVector::from_column_slice(v.data());
    assert!(close(op.apply(&v).unwrap().data(), want.as_slice(), 1e-13));
}

#[test]
fn selection_matches_dense_submatrix() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let terms = (0..3).map(|k| KronTerm::new(k as f64 - 0.5, [0, 1, 2, 3].map(|_| random(&mut rng, 3, 3)))).collect();
    let op = KronOp::new(terms).unwrap();
    let rows = [vec![0, 2], vec![1], vec![0, 1, 2], vec![2, 0]];
    let cols = [vec![1, 2], vec![0, 2], vec![1], vec![0, 1, 2]];
    let sub = op.select(Some(&rows), Some(&cols)).unwrap().to_dense().unwrap();
    let dense = op.to_dense().unwrap();
    let lin = |sel: &[Vec<usize>; 4]| {
        let mut out = vec![];
        for &i in &sel[0] {
            for &j in &sel[1] {
                for &k in &sel[2] {
                    for &l in &sel[3] {
                        out.push(((i * 3 + j) * 3 + k) * 3 + l);
                    }
                }
            }
        }
        out
    };
    let (r, c) = (lin(&rows), lin(&cols));
    let want = DMatrix::from_fn(r.len(), c.len(), |i, j| dense[(r[i], c[j])]);
    assert!((sub - want).amax() <= 1e-14);
}

#[test]
fn interior_rows_of_identity_extract_interior() {
    let shape = [4, 5, 5, 5];
    let keep = [vec![1, 2, 3], vec![1, 2, 3], vec![1, 2, 3], vec![1, 2, 3]];
    let g = KronOp::identity(shape).row_select(&keep).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let v = random_tensor(&mut rng, shape);
    assert_eq!(g.apply(&v).unwrap(), v.gather(&keep).unwrap());
}

#[test]
fn first_derivative_matches_dense() {
    let grid = make_grid(GridSpec::new(NodeKind::Lobatto, 4, (0.0, 2.0))).unwrap();
    let d = diff_matrix(&grid).unwrap();
    let dims = [3, 4, 2, 4];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let v = random_tensor(&mut rng, dims);
    for axis in [Axis::X, Axis::Z] {
        let op = assemble_first_derivative(axis, &d, dims).unwrap();
        assert!(close(op.apply(&v).unwrap().data(), dense_apply(&op, &v).as_slice(), 1e-12));
    }
    assert!(assemble_first_derivative(Axis::Y, &d, dims).is_err());
}

#[test]
fn transpose_matches_dense_transpose() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let f = [random(&mut rng, 2, 3), random(&mut rng, 3, 2), random(&mut rng, 4, 4), random(&mut rng, 1, 2)];
    let op = KronOp::single(1.5, f);
    assert!((op.transpose().to_dense().unwrap() - op.to_dense().unwrap().transpose()).amax() <= 1e-14);
}

fn shape() -> impl Strategy<Value = [usize; 4]> {
    [1usize..4, 1usize..4, 1usize..4, 1usize..4]
}

proptest! {
    #[test]
    fn apply_matches_dense_and_is_linear(dims in shape(), seed in any::<u64>(), alpha in -3.0f64..3.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let terms: Vec<KronTerm> =
            (0..2).map(|_| KronTerm::new(rng.random_range(-2.0..2.0), dims.map(|n| random(&mut rng, n, n)))).collect();
        let op = KronOp::new(terms).unwrap();
        let u = random_tensor(&mut rng, dims);
        let v = random_tensor(&mut rng, dims);
        prop_assert!(close(op.apply(&u).unwrap().data(), dense_apply(&op, &u).as_slice(), 1e-12));

        let mut w = u.clone();
        w.axpy(alpha, &v).unwrap();
        let mut lhs = op.apply(&u).unwrap();
        lhs.axpy(alpha, &op.apply(&v).unwrap()).unwrap();
        prop_assert!(close(op.apply(&w).unwrap().data(), lhs.data(), 1e-12));
    }
}
