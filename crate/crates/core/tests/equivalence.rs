use coloured_entropy::lowerbound::*;
use coloured_entropy::symbolic::{TransferMatrix, WordSpace};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Whether every sign pattern is realised, up to a global sign, by some
/// cell. Then `||Σ c_i v_i|| >= Σ |c_i|` for every `c`, so `K = 1`.
fn sign_pattern_oracle(family: &VectorFamily) -> bool {
    let m = family.len();
    let cells = family.function(0).unwrap().len();
    (0..1u64 << m).all(|pattern| {
        (0..cells).any(|x| {
            (0..m).all(|i| {
                let v = family.function(i).unwrap()[x];
                let s = if pattern >> i & 1 == 1 { 1.0 } else { -1.0 };
                v == s
            }) || (0..m).all(|i| {
                let v = family.function(i).unwrap()[x];
                let s = if pattern >> i & 1 == 1 { -1.0 } else { 1.0 };
                v == s
            })
        })
    })
}

/// Grid search over the ℓ1 sphere with the given resolution.
fn grid_minimum(family: &VectorFamily, steps: usize) -> f64 {
    let m = family.len();
    let mut best = f64::INFINITY;
    let mut parts = vec![0usize; m];
    fn rec(i: usize, left: usize, parts: &mut Vec<usize>, steps: usize, family: &VectorFamily, best: &mut f64) {
        let m = parts.len();
        if i == m - 1 {
            parts[i] = left;
            for signs in 0..1u32 << m {
                let c: Vec<f64> = (0..m)
                    .map(|k| {
                        let s = if signs >> k & 1 == 1 { -1.0 } else { 1.0 };
                        s * parts[k] as f64 / steps as f64
                    })
                    .collect();
                *best = best.min(family.combination_norm(&c));
            }
            return;
        }
        for p in 0..=left {
            parts[i] = p;
            rec(i + 1, left - p, parts, steps, family, best);
        }
    }
    rec(0, steps, &mut parts, steps, family, &mut best);
    best
}

fn random_family(rng: &mut impl Rng, m: usize, cells: usize) -> VectorFamily {
    let vs = (0..m)
        .map(|_| {
            let mut v: Vec<f64> = (0..cells).map(|_| rng.random_range(-1.0..1.0)).collect();
            let peak = rng.random_range(0..cells);
            v[peak] = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            v
        })
        .collect();
    VectorFamily::functions(vs).unwrap()
}

#[test]
fn rademacher_families_match_sign_patterns() {
    for bits in 1..=8 {
        let f = VectorFamily::rademacher(bits).unwrap();
        assert!(sign_pattern_oracle(&f));
        let r = l1_equivalence_constant(&f, &L1Config::default()).unwrap();
        assert!(r.exact);
        assert!((r.k - 1.0).abs() < 1e-9, "bits {bits}: K = {}", r.k);
    }
}

#[test]
fn missing_sign_pattern_pushes_k_above_one() {
    // Drop the cells where all coordinates agree; the uniform combination
    // then has norm 1/3.
    let f = VectorFamily::rademacher(3).unwrap();
    let vs: Vec<Vec<f64>> = (0..3).map(|i| f.function(i).unwrap()[1..7].to_vec()).collect();
    let g = VectorFamily::functions(vs).unwrap();
    assert!(!sign_pattern_oracle(&g));
    let r = l1_equivalence_constant(&g, &L1Config::default()).unwrap();
    assert!((r.k - 3.0).abs() < 1e-9, "{}", r.k);
}

#[test]
fn rademacher_under_the_full_shift() {
    for m in 1..=3 {
        let words = WordSpace::new(&TransferMatrix::full_shift(1 << m).unwrap(), 3).unwrap();
        let base = VectorFamily::functions(
            (0..m)
                .map(|j| (0..words.len() as u32).map(|c| if words.word(c)[0] >> j & 1 == 1 { 1.0 } else { -1.0 }).collect())
                .collect(),
        )
        .unwrap();
        for n in 1..=3 {
            let fam = shifted_family(&base, Dynamics::Map(words.shift_map()), n).unwrap();
            assert_eq!(fam.len(), m * n);
            assert!(sign_pattern_oracle(&fam));
            let r = l1_equivalence_constant(&fam, &L1Config::default()).unwrap();
            assert!((r.k - 1.0).abs() < 1e-9);
            assert!((r.kerr_bound_factor - (m * n) as f64).abs() < 1e-6);
        }
    }
}

#[test]
fn exact_minimum_matches_grid_search() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..10 {
        let f = random_family(&mut rng, 2, 5);
        let r = l1_equivalence_constant(&f, &L1Config::default()).unwrap();
        let grid = grid_minimum(&f, 100);
        assert!(r.minimum <= grid + 1e-12);
        assert!(grid - r.minimum <= 1e-2, "{} vs {grid}", r.minimum);
    }
    for _ in 0..3 {
        let f = random_family(&mut rng, 3, 6);
        let r = l1_equivalence_constant(&f, &L1Config::default()).unwrap();
        let grid = grid_minimum(&f, 400);
        assert!(r.minimum <= grid + 1e-12);
        assert!(grid - r.minimum <= 1e-2);
    }
}

#[test]
fn dependent_families_are_flagged() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for _ in 0..20 {
        let f = random_family(&mut rng, 2, 6);
        let (a, b) = (f.function(0).unwrap(), f.function(1).unwrap());
        let mix: Vec<f64> = a.iter().zip(b).map(|(x, y)| 0.3 * x - 0.7 * y).collect();
        let peak = mix.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let mix: Vec<f64> = mix.iter().map(|x| x / peak).collect();
        let g = VectorFamily::functions(vec![a.to_vec(), b.to_vec(), mix]).unwrap();
        let r = l1_equivalence_constant(&g, &L1Config::default()).unwrap();
        assert!(r.infinite, "min {}", r.minimum);
    }
}

#[test]
fn witnesses_stay_within_two() {
    for (m, depth) in [(1, 1), (1, 4), (2, 2), (3, 2), (2, 4), (4, 3)] {
        let r = l1_equivalence_constant(&kerr_witness(m, depth).unwrap(), &L1Config::default()).unwrap();
        assert!(r.exact && r.k <= 2.0, "m {m} depth {depth}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn k_is_at_least_one_and_sign_invariant(seed in any::<u64>(), m in 1usize..5, cells in 1usize..8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_family(&mut rng, m, cells);
        let r = l1_equivalence_constant(&f, &L1Config::default()).unwrap();
        prop_assert!(r.infinite || r.k >= 1.0 - 1e-12);
        let l1: f64 = r.coefficients.iter().map(|c| c.abs()).sum();
        prop_assert!((l1 - 1.0).abs() < 1e-10);
        let flip = rng.random_range(0..m);
        let vs: Vec<Vec<f64>> = (0..m)
            .map(|i| f.function(i).unwrap().iter().map(|x| if i == flip { -x } else { *x }).collect())
            .collect();
        let g = l1_equivalence_constant(&VectorFamily::functions(vs).unwrap(), &L1Config::default()).unwrap();
        prop_assert!((g.minimum - r.minimum).abs() < 1e-9);
    }

    #[test]
    fn adding_a_vector_never_raises_the_minimum(seed in any::<u64>(), m in 1usize..4, cells in 2usize..7) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let big = random_family(&mut rng, m + 1, cells);
        let sub = VectorFamily::functions((0..m).map(|i| big.function(i).unwrap().to_vec()).collect()).unwrap();
        let rb = l1_equivalence_constant(&big, &L1Config::default()).unwrap();
        let rs = l1_equivalence_constant(&sub, &L1Config::default()).unwrap();
        // The sub-family minimiser padded by zero is feasible for the larger family.
        let mut padded = rs.coefficients.clone();
        padded.push(0.0);
        prop_assert!((big.combination_norm(&padded) - rs.minimum).abs() < 1e-9);
        prop_assert!(rb.minimum <= rs.minimum + 1e-9);
    }
}
