use std::sync::Arc;

use coloured_entropy::cellspace::{Bundle, CellMap, CellSpace, Cover, Permutation, SolverConfig};
use coloured_entropy::estimator::*;
use coloured_entropy::symbolic::TransferMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod oracles;
use oracles::*;

fn golden_log() -> f64 {
    ((1.0 + 5f64.sqrt()) / 2.0).ln()
}

/// Fibonacci numbers: words of length n in the golden mean shift number F(n+2).
fn fibonacci_counts(n_max: usize) -> Vec<u128> {
    let (mut a, mut b) = (1u128, 2u128);
    (0..n_max)
        .map(|_| {
            let out = b;
            (a, b) = (b, a + b);
            out
        })
        .collect()
}

#[test]
fn golden_cylinder_counts() {
    let s = cylinder_series("gm", &TransferMatrix::golden_mean(), 20).unwrap();
    assert_eq!(s.counts(), fibonacci_counts(20));
    let r = growth_rate(&s, RateMethod::Regression).unwrap();
    assert!((r.slope - golden_log()).abs() < 1e-3, "{}", r.slope);
}

#[test]
fn golden_qd_rank_slope() {
    let model = Model::sft("gm", &TransferMatrix::golden_mean(), 14).unwrap();
    let s = entropy_experiment(&model, 14, Mode::Qd, &ExperimentOptions::default()).unwrap();
    assert_eq!(s.counts(), fibonacci_counts(14));
    let r = growth_rate(&s, RateMethod::Regression).unwrap();
    assert!((r.slope - golden_log()).abs() < 1e-3);
}

#[test]
fn rotation_matches_join_enumeration() {
    let sets = vec![vec![0usize, 1], vec![2, 3]];
    let space = Arc::new(CellSpace::cycle(4).unwrap());
    let cover = Cover::new(&space, sets.iter().map(|s| s.iter().copied())).unwrap();
    let map = CellMap::from_fn(&space, |c| (c + 1) % 4, true).unwrap();
    let model = Model::new("rot4", Bundle::new(cover, map).unwrap());
    let series = entropy_experiment(&model, 8, Mode::Coloured, &ExperimentOptions::default()).unwrap();

    let mut joined = sets.clone();
    let mut pulled = sets.clone();
    let edges = [(0, 1), (1, 2), (2, 3), (3, 0)];
    for (i, &count) in series.counts().iter().enumerate() {
        if i > 0 {
            // preimage under c -> c + 1
            pulled = pulled.iter().map(|s| s.iter().map(|&c| (c + 3) % 4).collect()).collect();
            joined = brute_join(&joined, &pulled);
        }
        let expected = brute_coloured(4, &edges, &joined, 2).unwrap();
        assert_eq!(count as usize, expected, "n = {}", i + 1);
        assert!(count <= 4);
    }
    let r = growth_rate(&series, RateMethod::Regression).unwrap();
    assert!(r.slope.abs() < 1e-12);
}

#[test]
fn sandwich_on_random_paths_and_grids() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let cfg = SolverConfig::default();
    for i in 0..30 {
        let (cells, edges, d, sets) = if i % 2 == 0 {
            let n = rng.random_range(2..9);
            let extra = rng.random_range(0..3);
            (n, path_edges(n), 1, random_interval_cover(&mut rng, n, extra))
        } else {
            let extra = rng.random_range(0..2);
            (9, grid_edges(3, 3), 2, random_rectangle_cover(&mut rng, 3, 3, extra))
        };
        if brute_atoms(cells, &sets).len() > 8 {
            continue;
        }
        let space = Arc::new(CellSpace::new(cells, &edges, d).unwrap());
        let cover = Cover::new(&space, sets.iter().map(|s| s.iter().copied())).unwrap();
        let model = Model::new("m", Bundle::new(cover, CellMap::identity(&space)).unwrap());
        let r = sandwich_verdict(&model, 1, &cfg).unwrap();
        assert_eq!(r.verdict, Verdict::Holds);
        assert_eq!(r.plain, brute_subcover(cells, &sets));
        assert_eq!(Some(r.coloured), brute_coloured(cells, &edges, &sets, d + 1));
        assert!(r.plain <= r.coloured && r.coloured <= (d + 1) * r.plain);
    }
}

#[test]
fn zero_dimensional_sandwich_collapses() {
    let model = Model::sft("gm", &TransferMatrix::golden_mean(), 6).unwrap();
    for n in 1..=6 {
        let r = sandwich_verdict(&model, n, &SolverConfig::default()).unwrap();
        assert_eq!(r.plain, r.coloured);
    }
}

#[test]
fn two_and_three_shift_union() {
    let a = TransferMatrix::full_shift(2).unwrap();
    let b = TransferMatrix::full_shift(3).unwrap();
    let sum = cylinder_series("2+3", &a.direct_sum(&b), 40).unwrap();
    let oracle: Vec<u128> = (1..=40u32).map(|n| 2u128.pow(n) + 3u128.pow(n)).collect();
    assert_eq!(sum.counts(), oracle);
    let r = growth_rate(&sum, RateMethod::TailMax).unwrap();
    assert!((r.slope - 3f64.ln()).abs() < 1e-3);

    let union = Model::sft("a", &a, 6).unwrap().bundle.disjoint_union(&Model::sft("b", &b, 6).unwrap().bundle).unwrap();
    let union = Model { label: "2+3".into(), bundle: union, depth: Some(6) };
    let s = entropy_experiment(&union, 6, Mode::Coloured, &ExperimentOptions::default()).unwrap();
    assert_eq!(s.counts(), oracle[..6]);
}

#[test]
fn relabelled_golden_mean_has_identical_counts() {
    let gm = TransferMatrix::golden_mean();
    let swapped = gm.relabel(&Permutation::new(vec![1, 0]).unwrap()).unwrap();
    let opts = ExperimentOptions::default();
    let a = entropy_experiment(&Model::sft("gm", &gm, 8).unwrap(), 8, Mode::Plain, &opts).unwrap();
    let b = entropy_experiment(&Model::sft("gm", &swapped, 8).unwrap(), 8, Mode::Plain, &opts).unwrap();
    assert_eq!(a.counts(), b.counts());
}

#[test]
fn power_law_ratio() {
    let cfg = PermanenceConfig { powers: vec![2], model_depth: 4, ..PermanenceConfig::default() };
    let r = permanence_suite(&[SftCase::new("full2", TransferMatrix::full_shift(2).unwrap())], &cfg).unwrap();
    let power = r.checks.iter().find(|c| c.law == "power").unwrap();
    assert!(power.deviation < 1e-9 && power.verdict == Verdict::Holds);
}

#[test]
fn greedy_counts_withhold_the_verdict() {
    let space = Arc::new(CellSpace::path(6).unwrap());
    let sets: Vec<Vec<usize>> = vec![vec![0, 1, 2], vec![2, 3], vec![3, 4, 5], vec![1, 2, 3, 4], vec![0, 1], vec![4, 5]];
    let cover = Cover::new(&space, sets).unwrap();
    let model = Model::new("p6", Bundle::new(cover, CellMap::identity(&space)).unwrap());
    let r = sandwich_verdict(&model, 1, &SolverConfig { exact_threshold: 1 }).unwrap();
    assert!(!r.exact);
    assert_eq!(r.verdict, Verdict::Withheld);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn methods_agree_on_pure_exponentials(base in 2u128..6, n_max in 4usize..25) {
        let counts: Vec<u128> = (1..=n_max as u32).map(|n| base.pow(n)).collect();
        let s = GrowthSeries::from_counts("x", "test", &counts).unwrap();
        let t = growth_rate(&s, RateMethod::TailMax).unwrap();
        let r = growth_rate(&s, RateMethod::Regression).unwrap();
        prop_assert!((t.slope - r.slope).abs() < 1e-9);
        prop_assert!(r.residual >= 0.0 && t.tail_window >= 2);
    }

    #[test]
    fn regression_recovers_scaled_exponentials(c in 1u128..50, base in 2u128..5, n_max in 4usize..30) {
        let counts: Vec<u128> = (1..=n_max as u32).map(|n| c * base.pow(n)).collect();
        let s = GrowthSeries::from_counts("x", "test", &counts).unwrap();
        let r = growth_rate(&s, RateMethod::Regression).unwrap();
        prop_assert!((r.slope - (base as f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn tail_max_grows_with_the_horizon(num in 1u128..8, base in 2u128..5, n_max in 4usize..24) {
        // floor(base^n / num), kept only when super-multiplicative.
        let counts: Vec<u128> = (1..=n_max as u32 + 1).map(|n| (base.pow(n) / num).max(1)).collect();
        let rate = |k: usize| {
            growth_rate(&GrowthSeries::from_counts("x", "test", &counts[..k]).unwrap(), RateMethod::TailMax).unwrap().slope
        };
        prop_assume!((1..counts.len()).all(|i| (1..=i).all(|j| counts[i] >= counts[j - 1] * counts[i - j])));
        prop_assert!(rate(n_max + 1) >= rate(n_max) - 1e-12);
    }

    #[test]
    fn inexact_points_always_flag(seed in any::<u64>(), n_max in 3usize..15) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut s = GrowthSeries::new("x", "test");
        let bad = rng.random_range(1..=n_max);
        for n in 1..=n_max {
            s.push(n, 1 + n as u128, n != bad).unwrap();
        }
        prop_assert!(growth_rate(&s, RateMethod::TailMax).unwrap().upper_bound_only);
        prop_assert!(growth_rate(&s, RateMethod::Regression).unwrap().upper_bound_only);
    }
}
