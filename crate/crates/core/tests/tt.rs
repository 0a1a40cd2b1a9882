//! Tensor-train kernels against full-tensor and dense-matrix oracles.

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stmaxwell::maxwell::{assemble_wave_system, build_staggered_spaces, Component, Field, WaveMode};
use stmaxwell::tensor::Tensor4;
use stmaxwell::tt::io::{read_tt, write_tt};
use stmaxwell::tt::{
    amen_solve, dominance, maxvol, tt_cross, AmenConfig, Core3, CrossConfig, TtMatrix, TtTensor, MAXVOL_DELTA,
};
use stmaxwell::verify::builtin_case;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_dense(r: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-1.0..1.0)).collect()
}

fn random_tt(r: &mut ChaCha8Rng, modes: &[usize], rank: usize) -> TtTensor {
    let d = modes.len();
    let cores = (0..d)
        .map(|k| {
            let (r0, r1) = (if k == 0 { 1 } else { rank }, if k == d - 1 { 1 } else { rank });
            Core3::new(r0, modes[k], r1, random_dense(r, r0 * modes[k] * r1)).unwrap()
        })
        .collect();
    TtTensor::new(cores).unwrap()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn diff(a: &[f64], b: &[f64]) -> f64 {
    norm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

#[test]
fn round_trip_of_random_tensor() {
    let data = random_dense(&mut rng(1), 625);
    let tt = TtTensor::from_dense(&data, &[5, 5, 5, 5], 1e-12).unwrap();
    assert!(diff(&tt.to_dense().unwrap(), &data) <= 1e-11 * norm(&data));
}

#[test]
fn entry_matches_core_chain_product() {
    let tt = random_tt(&mut rng(2), &[3, 4, 5, 2], 3);
    let idx = [2, 1, 4, 0];
    let mut row = vec![1.0];
    for (k, c) in tt.cores().iter().enumerate() {
        let (r0, _, r1) = c.shape();
        row = (0..r1).map(|b| (0..r0).map(|a| row[a] * c.at(a, idx[k], b)).sum()).collect();
    }
    assert!((tt.get(&idx) - row[0]).abs() <= 1e-14 * row[0].abs().max(1.0));
}

#[test]
fn rounding_error_is_bounded_by_tolerance() {
    let a = random_tt(&mut rng(3), &[4, 4, 4, 4], 3);
    let b = random_tt(&mut rng(4), &[4, 4, 4, 4], 2);
    let sum = a.add(&b).unwrap().add(&a).unwrap();
    let before = sum.to_dense().unwrap();
    let rounded = sum.round(1e-8);
    assert!(rounded.ranks().iter().zip(sum.ranks()).all(|(r, s)| *r <= s));
    assert!(diff(&rounded.to_dense().unwrap(), &before) <= 1e-8 * norm(&before));
}

#[test]
fn dot_matches_full_inner_product() {
    let a = random_tt(&mut rng(5), &[4, 4, 4, 4], 3);
    let b = random_tt(&mut rng(6), &[4, 4, 4, 4], 2);
    let (fa, fb) = (a.to_dense().unwrap(), b.to_dense().unwrap());
    let want: f64 = fa.iter().zip(&fb).map(|(x, y)| x * y).sum();
    assert!((a.dot(&b).unwrap() - want).abs() <= 1e-12 * norm(&fa) * norm(&fb));
    assert!((a.norm() - norm(&fa)).abs() <= 1e-12 * norm(&fa));
}

#[test]
fn matrix_apply_matches_dense() {
    let mut r = rng(7);
    let factors: Vec<DMatrix<f64>> =
        [3, 2, 3, 2].iter().map(|&n| DMatrix::from_fn(n, n, |_, _| r.random_range(-1.0..1.0))).collect();
    let m = TtMatrix::rank1(0.5, &factors).unwrap().add(&TtMatrix::identity(&[3, 2, 3, 2]).unwrap()).unwrap();
    let x = random_tt(&mut r, &[3, 2, 3, 2], 2);
    let want = m.to_dense().unwrap() * DVector::from_vec(x.to_dense().unwrap());
    let got = m.apply(&x).unwrap().to_dense().unwrap();
    assert!(diff(&got, want.as_slice()) <= 1e-11 * want.norm());
}

#[test]
fn maxvol_small_example() {
    let m = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 0.5, 0.5, 0.1, 0.2]);
    let mut rows = maxvol(&m).unwrap();
    rows.sort();
    assert_eq!(rows, vec![0, 1]);
    assert!(dominance(&m, &rows).unwrap() <= 1.0 + 1e-12);
}

#[test]
fn cross_of_separable_function_has_unit_ranks() {
    let f = |i: &[usize]| {
        ((i[0] as f64 + 1.0) * 0.3).sin() * (1.0 + i[1] as f64) * (-(i[2] as f64) * 0.2).exp() * (i[3] as f64 + 0.5)
    };
    let res = tt_cross(|i| Ok(f(i)), &[7, 6, 8, 5], &CrossConfig::new(1e-10)).unwrap();
    assert_eq!(res.tt.ranks(), vec![1, 1, 1]);
    assert!(res.validation_error <= 1e-10);
}

#[test]
fn cross_of_three_term_sum_has_rank_at_most_three() {
    let x = |i: usize| i as f64 / 9.0;
    let f = move |i: &[usize]| {
        x(i[0]).sin() * (1.0 + x(i[1])) * x(i[2]) * x(i[3]).cos()
            + x(i[0]) * x(i[1]) * x(i[2]) * x(i[3])
            + (2.0 * x(i[3])).exp()
    };
    let res = tt_cross(|i| Ok(f(i)), &[10, 10, 10, 10], &CrossConfig::new(1e-10)).unwrap();
    assert!(res.tt.ranks().iter().all(|&r| r <= 3), "{:?}", res.tt.ranks());
    let mut r = rng(11);
    for _ in 0..50 {
        let idx: Vec<usize> = (0..4).map(|_| r.random_range(0..10)).collect();
        assert!((res.tt.get(&idx) - f(&idx)).abs() <= 1e-8);
    }
}

#[test]
fn cross_matches_svd_construction_on_smooth_tensor() {
    let tol = 1e-8;
    let f = |i: &[usize]| {
        let s: f64 = i.iter().enumerate().map(|(k, &v)| (k as f64 + 1.0) * v as f64 / 5.0).sum();
        1.0 / (1.0 + s * s)
    };
    let t = Tensor4::from_fn([6; 4], |i| f(&i));
    let svd_tt = TtTensor::from_full(&t, tol).unwrap();
    let cross = tt_cross(|i| Ok(f(i)), &[6; 4], &CrossConfig::new(tol)).unwrap();
    let full = t.data();
    assert!(diff(&cross.tt.to_dense().unwrap(), full) <= 10.0 * tol * norm(full));
    assert!(diff(&svd_tt.to_dense().unwrap(), full) <= 10.0 * tol * norm(full));
}

#[test]
fn amen_matches_dense_solve_on_wave_operator() {
    let case = builtin_case("ex1").unwrap();
    let s = build_staggered_spaces(6, case.domain).unwrap();
    let p = case.wave_problem(Component::Y, 1.0, 1.0);
    let sys = assemble_wave_system(&p, &s, WaveMode::Full, &CrossConfig::new(1e-12)).unwrap();
    let Field::Full(rhs) = sys.rhs() else { unreachable!() };
    let tol = 1e-10;
    let a = TtMatrix::from_kron(sys.operator()).unwrap();
    let b = TtTensor::from_full(rhs, 1e-14).unwrap();
    let res = amen_solve(&a, &b, &AmenConfig::new(tol), None).unwrap();
    assert!(res.converged);
    let want = sys.operator().to_dense().unwrap().lu().solve(&DVector::from_column_slice(rhs.data())).unwrap();
    assert!(diff(&res.x.to_dense().unwrap(), want.as_slice()) <= 10.0 * tol * want.norm());
}

#[test]
fn binary_dump_round_trip() {
    let tt = random_tt(&mut rng(12), &[3, 5, 2, 4], 3);
    let mut buf = Vec::new();
    write_tt(&mut buf, &tt).unwrap();
    assert_eq!(read_tt(buf.as_slice()).unwrap(), tt);
    buf[0] = b'X';
    assert!(read_tt(buf.as_slice()).is_err());
}

fn modes() -> impl Strategy<Value = Vec<usize>> {
    prop::collection::vec(1usize..6, 4)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn full_round_trip(m in modes(), seed in any::<u64>()) {
        let n: usize = m.iter().product();
        let data = random_dense(&mut rng(seed), n);
        let tt = TtTensor::from_dense(&data, &m, 1e-13).unwrap();
        prop_assert!(diff(&tt.to_dense().unwrap(), &data) <= 1e-12 * norm(&data).max(1e-300));
    }

    #[test]
    fn addition_and_scaling_are_linear(m in modes(), seed in any::<u64>(), alpha in -2.0f64..2.0) {
        let mut r = rng(seed);
        let (a, b) = (random_tt(&mut r, &m, 2), random_tt(&mut r, &m, 3));
        let got = a.add(&b.scale(alpha)).unwrap().to_dense().unwrap();
        let (fa, fb) = (a.to_dense().unwrap(), b.to_dense().unwrap());
        let want: Vec<f64> = fa.iter().zip(&fb).map(|(x, y)| x + alpha * y).collect();
        prop_assert!(diff(&got, &want) <= 1e-12 * norm(&fa).max(norm(&fb)).max(1.0));
    }

    #[test]
    fn maxvol_rows_dominate(rows in 2usize..40, cols in 1usize..8, seed in any::<u64>()) {
        prop_assume!(rows >= cols);
        let mut r = rng(seed);
        let m = DMatrix::from_fn(rows, cols, |_, _| r.random_range(-1.0..1.0));
        let sel = maxvol(&m).unwrap();
        prop_assert_eq!(sel.len(), cols);
        prop_assert!(dominance(&m, &sel).unwrap() <= 1.0 + MAXVOL_DELTA);
    }

    #[test]
    fn dump_round_trip(m in modes(), seed in any::<u64>()) {
        let tt = random_tt(&mut rng(seed), &m, 2);
        let mut buf = Vec::new();
        write_tt(&mut buf, &tt).unwrap();
        prop_assert_eq!(read_tt(buf.as_slice()).unwrap(), tt);
    }
}
