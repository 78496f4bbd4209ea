use std::sync::Arc;

use coloured_entropy::cellspace::{minimal_coloured_refinement, CellSpace, Cover, SolverConfig};
use coloured_entropy::cpapprox::*;
use coloured_entropy::symbolic::{TransferMatrix, WordSpace};
use coloured_entropy::Error;
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod oracles;
use oracles::*;

fn system_for(cells: usize, edges: &[(usize, usize)], d: usize, sets: &[Vec<usize>]) -> Option<(Cover, CpcSystem)> {
    let space = Arc::new(CellSpace::new(cells, edges, d).unwrap());
    let cover = Cover::new(&space, sets.iter().map(|s| s.iter().copied())).unwrap();
    let out = minimal_coloured_refinement(&cover, d + 1, &SolverConfig::default()).ok()?;
    Some((cover, build_pou_system(&out.refinement)))
}

#[test]
fn path_refinement_columns_sum_to_one() {
    let (_, sys) = system_for(4, &path_edges(4), 1, &[vec![0, 1], vec![1, 2], vec![2, 3]]).unwrap();
    let w = sys.dense_weights();
    for c in 0..4 {
        let column: f64 = w.iter().map(|row| row[c]).sum();
        assert!((column - 1.0).abs() < 1e-12);
    }
}

#[test]
fn lipschitz_error_is_bounded_by_piece_oscillation() {
    let n = 16;
    let sets: Vec<Vec<usize>> = (0..n).step_by(3).map(|s| (s..(s + 4).min(n)).collect()).collect();
    let (_, sys) = system_for(n, &path_edges(n), 1, &sets).unwrap();
    let f = FunctionSample::new("sine", (0..n).map(|c| (c as f64 * 0.4).sin()).collect()).unwrap();
    let oscillation = (0..sys.rank())
        .map(|j| {
            let vals: Vec<f64> = sys.support(j).iter().map(|&c| f.values[c as usize]).collect();
            vals.iter().cloned().fold(f64::MIN, f64::max) - vals.iter().cloned().fold(f64::MAX, f64::min)
        })
        .fold(0.0, f64::max);
    let err = approx_error(&sys, &[f]).unwrap();
    assert!(err <= oscillation + 1e-12, "{err} > {oscillation}");
    assert!(err > 0.0);
}

/// Trace defect recomputed from the weights alone.
fn direct_trace_defect(sys: &CpcSystem, trace: &TraceVector, fs: &[FunctionSample]) -> f64 {
    let w = sys.dense_weights();
    let sigma: Vec<f64> = w.iter().map(|row| row.iter().zip(trace.mass()).map(|(a, b)| a * b).sum()).collect();
    let total: f64 = sigma.iter().sum();
    let mut all = fs.to_vec();
    all.push(FunctionSample::constant(trace.mass().len(), 1.0));
    all.iter()
        .map(|f| {
            let tau: f64 = f.values.iter().zip(trace.mass()).map(|(a, b)| a * b).sum();
            let on_f: f64 =
                sys.sample_points().iter().zip(&sigma).map(|(&x, s)| f.values[x as usize] * s / total).sum();
            (tau - on_f).abs()
        })
        .fold(0.0, f64::max)
}

#[test]
fn golden_mean_qd_conversion() {
    let words = WordSpace::new(&TransferMatrix::golden_mean(), 4).unwrap();
    let cover = words.time_cover(4).unwrap();
    let out = minimal_coloured_refinement(&cover, 1, &SolverConfig::default()).unwrap();
    let sys = build_pou_system(&out.refinement);
    let cells = words.len();
    let cylinders: Vec<FunctionSample> = cover
        .elements()
        .enumerate()
        .map(|(i, s)| FunctionSample::indicator(format!("C{i}"), cells, s))
        .collect();
    let trace = TraceVector::uniform(cells);
    let eps = 0.05;
    let qd = qd_from_decomposable(&sys, &trace, &cylinders, eps).unwrap();
    assert_eq!(qd.rank, sys.rank());
    assert_eq!(qd.rank, 8);
    let td = direct_trace_defect(&sys, &trace, &cylinders);
    assert!((qd.trace_defect - td).abs() < 1e-12);
    assert!(qd.trace_defect < 1e-12);
    // Point evaluation is multiplicative.
    assert_eq!(qd.mult_defect, 0.0);
    let total: f64 = qd.trace_on_f.iter().sum();
    assert!((total - 1.0).abs() < 1e-12);
}

/// `kron` written out entrywise.
fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    let (ra, ca, rb, cb) = (a.nrows(), a.ncols(), b.nrows(), b.ncols());
    DMatrix::from_fn(ra * rb, ca * cb, |i, j| a[(i / rb, j / cb)] * b[(i % rb, j % cb)])
}

#[test]
fn matrix_shift_random_monomials_are_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..10 {
        let mut ops = Vec::new();
        let mut dense = Vec::new();
        for _ in 0..3 {
            let a = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            let b = DMatrix::from_fn(3, 3, |_, _| rng.random_range(-1.0..1.0));
            dense.push(kron(&a, &b));
            ops.push(TensorWord::new(vec![a, b]).unwrap());
        }
        let r = matrix_shift_qd(3, 2, &ops).unwrap();
        assert_eq!(r.rank, 9);
        // Each truncation is the full operator here, so products agree with
        // the dense products up to rounding.
        for (w, d) in ops.iter().zip(&dense) {
            assert!((w.truncate(3, 2).unwrap() - d).abs().max() < 1e-12);
        }
        assert!(r.mult_defect < 1e-12 && r.trace_defect < 1e-12, "{r:?}");
    }
}

#[test]
fn matrix_shift_rank_doubles() {
    let ranks: Vec<u128> = (1..=6).map(|n| matrix_shift_qd(2, n, &[TensorWord::identity()]).unwrap().rank).collect();
    assert_eq!(ranks, vec![2, 4, 8, 16, 32, 64]);
    assert!(matches!(matrix_shift_qd(2, 11, &[]), Err(Error::SizeCap { .. })));
}

#[test]
fn direct_sum_error_is_the_max() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..40 {
        let n1 = rng.random_range(2..8);
        let n2 = rng.random_range(2..8);
        let e1 = rng.random_range(0..3);
        let e2 = rng.random_range(0..3);
        let (_, a) = system_for(n1, &path_edges(n1), 1, &random_interval_cover(&mut rng, n1, e1)).unwrap();
        let (_, b) = system_for(n2, &path_edges(n2), 1, &random_interval_cover(&mut rng, n2, e2)).unwrap();
        let fa = FunctionSample::new("fa", (0..n1).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let fb = FunctionSample::new("fb", (0..n2).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap();
        let sum = direct_sum_systems(&a, &b).unwrap();
        sum.validate().unwrap();
        assert_eq!(sum.rank(), a.rank() + b.rank());
        let mut joined = fa.values.clone();
        joined.extend(&fb.values);
        let joined = FunctionSample::new("f", joined).unwrap();
        // Recompute the error on the union from the dense weights.
        let w = sum.dense_weights();
        let direct = (0..n1 + n2)
            .map(|c| {
                let back: f64 = (0..sum.rank()).map(|j| joined.values[sum.sample_points()[j] as usize] * w[j][c]).sum();
                (joined.values[c] - back).abs()
            })
            .fold(0.0, f64::max);
        let parts = approx_error(&a, &[fa]).unwrap().max(approx_error(&b, &[fb]).unwrap());
        assert!((direct - parts).abs() < 1e-12);
        assert!((approx_error(&sum, &[joined]).unwrap() - parts).abs() < 1e-12);
    }
}

#[test]
fn export_has_dense_rows() {
    let (_, sys) = system_for(3, &path_edges(3), 1, &[vec![0, 1, 2]]).unwrap();
    let v = sys.to_json();
    assert_eq!(v["rank"], 1);
    assert_eq!(v["weights"], serde_json::json!([[1.0, 1.0, 1.0]]));
}

fn interval_or_rectangle() -> impl Strategy<Value = (usize, Vec<(usize, usize)>, usize, Vec<Vec<usize>>)> {
    (any::<u64>(), any::<bool>()).prop_map(|(seed, grid)| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        if grid {
            let (w, h) = (rng.random_range(1..4), rng.random_range(1..4));
            let extra = rng.random_range(0..2);
            (w * h, grid_edges(w, h), 2, random_rectangle_cover(&mut rng, w, h, extra))
        } else {
            let n = rng.random_range(1..10);
            let extra = rng.random_range(0..3);
            (n, path_edges(n), 1, random_interval_cover(&mut rng, n, extra))
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn built_systems_satisfy_the_invariants((cells, edges, d, sets) in interval_or_rectangle()) {
        if let Some((cover, sys)) = system_for(cells, &edges, d, &sets) {
            sys.validate().unwrap();
            let w = sys.dense_weights();
            for c in 0..cells {
                let s: f64 = w.iter().map(|r| r[c]).sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
            for j in 0..sys.rank() {
                for c in 0..cells {
                    if sys.support(j).binary_search(&(c as u32)).is_err() {
                        prop_assert_eq!(w[j][c], 0.0);
                    }
                }
                prop_assert!(cover.elements().any(|e| sys.support(j).iter().all(|c| e.contains(c))));
                for k in 0..sys.rank() {
                    if j != k && sys.colour(j) == sys.colour(k) {
                        let overlap: f64 = (0..cells).map(|c| (w[j][c] > 0.0) as u8 as f64 * (w[k][c] > 0.0) as u8 as f64).sum();
                        prop_assert_eq!(overlap, 0.0);
                    }
                }
            }
        }
    }

    #[test]
    fn qd_conversion_meets_the_proof_constant(seed in any::<u64>(), eps in 0.01f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.random_range(2..10);
        let extra = rng.random_range(0..3);
        let sets = random_interval_cover(&mut rng, n, extra);
        let (_, sys) = system_for(n, &path_edges(n), 1, &sets).unwrap();
        let mass: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..1.0) + 1e-3).collect();
        let total: f64 = mass.iter().sum();
        let trace = TraceVector::new(mass.iter().map(|m| m / total).collect()).unwrap();
        // Functions constant on each piece plus a small perturbation.
        let base: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = FunctionSample::new("f", (0..n).map(|c| {
            let j = (0..sys.rank()).find(|&j| sys.support(j).contains(&(c as u32))).unwrap();
            base[sys.sample_points()[j] as usize] + rng.random_range(-0.1..0.1) * eps
        }).collect()).unwrap();
        match qd_from_decomposable(&sys, &trace, std::slice::from_ref(&f), eps) {
            Ok(qd) => {
                prop_assert_eq!(qd.rank, sys.rank());
                prop_assert!(qd.trace_defect <= 2.0 * eps / (3.0 - eps) + 1e-12);
                prop_assert!(qd.mult_defect <= eps + 1e-12);
                prop_assert!(qd.approx_error <= eps / 3.0);
                let s: f64 = qd.trace_on_f.iter().sum();
                prop_assert!((s - 1.0).abs() < 1e-12);
            }
            Err(Error::Precondition { measured, allowed }) => prop_assert!(measured > allowed),
            Err(e) => panic!("{e}"),
        }
    }
}
