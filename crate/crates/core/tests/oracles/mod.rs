//! Independent brute-force oracles shared by the integration and
//! acceptance tests. Nothing here calls into the solvers under test.
#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;

/// Minimum subcover size by enumerating all subsets of elements.
pub fn brute_subcover(cells: usize, sets: &[Vec<usize>]) -> usize {
    assert!(sets.len() <= 20);
    let mut best = usize::MAX;
    for mask in 1u32..(1 << sets.len()) {
        let k = mask.count_ones() as usize;
        if k >= best {
            continue;
        }
        let mut hit = vec![false; cells];
        for (i, s) in sets.iter().enumerate() {
            if mask >> i & 1 == 1 {
                for &c in s {
                    hit[c] = true;
                }
            }
        }
        if hit.iter().all(|&h| h) {
            best = k;
        }
    }
    best
}

/// Atoms of a cover: cells grouped by the set of elements containing them.
pub fn brute_atoms(cells: usize, sets: &[Vec<usize>]) -> Vec<(Vec<usize>, Vec<usize>)> {
    let mut by_sig: BTreeMap<Vec<usize>, Vec<usize>> = BTreeMap::new();
    for c in 0..cells {
        let sig: Vec<usize> = (0..sets.len()).filter(|&i| sets[i].contains(&c)).collect();
        by_sig.entry(sig).or_default().push(c);
    }
    by_sig.into_iter().map(|(sig, cs)| (cs, sig)).collect()
}

/// Minimum piece count of a `colours`-coloured refinement whose pieces are
/// unions of atoms inside one element, by enumerating every packing of
/// candidate pieces for every colour. Colour classes may overlap each other.
/// `None` when no refinement exists.
pub fn brute_coloured(
    cells: usize,
    edges: &[(usize, usize)],
    sets: &[Vec<usize>],
    colours: usize,
) -> Option<usize> {
    let atoms = brute_atoms(cells, sets);
    let k = atoms.len();
    assert!(k <= 10, "oracle is exponential in the atom count");
    let mut atom_of = vec![0; cells];
    for (a, (cs, _)) in atoms.iter().enumerate() {
        for &c in cs {
            atom_of[c] = a;
        }
    }
    let mut atom_adj = vec![0u32; k];
    for &(x, y) in edges {
        let (a, b) = (atom_of[x], atom_of[y]);
        atom_adj[a] |= 1 << b;
        atom_adj[b] |= 1 << a;
    }
    let candidates: Vec<u32> = (1u32..(1 << k))
        .filter(|&m| {
            (0..sets.len()).any(|e| (0..k).filter(|a| m >> a & 1 == 1).all(|a| atoms[a].1.contains(&e)))
        })
        .collect();
    let reach = |m: u32| (0..k).filter(|a| m >> a & 1 == 1).fold(m, |acc, a| acc | atom_adj[a]);
    let full = (1u32 << k) - 1;
    // class_cost[u]: fewest pairwise disjoint, non-adjacent candidates with union u.
    let mut class_cost = vec![usize::MAX; 1 << k];
    class_cost[0] = 0;
    fn pack(
        start: usize,
        union: u32,
        blocked: u32,
        count: usize,
        candidates: &[u32],
        reach: &dyn Fn(u32) -> u32,
        class_cost: &mut [usize],
    ) {
        for i in start..candidates.len() {
            let p = candidates[i];
            if p & blocked != 0 {
                continue;
            }
            let u = union | p;
            if count + 1 < class_cost[u as usize] {
                class_cost[u as usize] = count + 1;
            }
            pack(i + 1, u, blocked | reach(p), count + 1, candidates, reach, class_cost);
        }
    }
    pack(0, 0, 0, 0, &candidates, &reach, &mut class_cost);
    let mut best = vec![usize::MAX; 1 << k];
    best[0] = 0;
    for _ in 0..colours {
        let mut next = best.clone();
        for m in 0..=full {
            if best[m as usize] == usize::MAX {
                continue;
            }
            for u in 1..=full {
                if class_cost[u as usize] == usize::MAX {
                    continue;
                }
                let t = best[m as usize] + class_cost[u as usize];
                let slot = &mut next[(m | u) as usize];
                if t < *slot {
                    *slot = t;
                }
            }
        }
        best = next;
    }
    (best[full as usize] != usize::MAX).then_some(best[full as usize])
}

/// All nonempty pairwise intersections, first occurrences kept.
pub fn brute_join(a: &[Vec<usize>], b: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = Vec::new();
    for u in a {
        for v in b {
            let mut w: Vec<usize> = u.iter().filter(|c| v.contains(c)).copied().collect();
            w.sort_unstable();
            if !w.is_empty() && !out.contains(&w) {
                out.push(w);
            }
        }
    }
    out
}

/// Admissible words of length `n` for a 0/1 matrix, in lexicographic order.
pub fn words(matrix: &[Vec<u8>], n: usize) -> Vec<Vec<usize>> {
    let k = matrix.len();
    let mut out: Vec<Vec<usize>> = (0..k).map(|s| vec![s]).collect();
    for _ in 1..n {
        out = out
            .into_iter()
            .flat_map(|w| {
                let last = *w.last().unwrap();
                (0..k).filter(move |&t| matrix[last][t] == 1).map(move |t| {
                    let mut v = w.clone();
                    v.push(t);
                    v
                })
            })
            .collect();
    }
    out
}

/// A random cover of the path `0..n` by intervals.
pub fn random_interval_cover(rng: &mut impl Rng, n: usize, extra: usize) -> Vec<Vec<usize>> {
    let mut sets = Vec::new();
    let mut start = 0;
    while start < n {
        let len = rng.random_range(1..=3.min(n - start));
        sets.push((start..start + len).collect::<Vec<_>>());
        // overlap the next interval with this one sometimes
        start += if len > 1 && rng.random_bool(0.5) { len - 1 } else { len };
    }
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(a..n.min(a + 4));
        sets.push((a..=b).collect());
    }
    sets
}

/// A random cover of a `w x h` grid by axis-parallel rectangles.
pub fn random_rectangle_cover(rng: &mut impl Rng, w: usize, h: usize, extra: usize) -> Vec<Vec<usize>> {
    let rect = |x0: usize, x1: usize, y0: usize, y1: usize| {
        let mut v = Vec::new();
        for y in y0..=y1 {
            for x in x0..=x1 {
                v.push(y * w + x);
            }
        }
        v
    };
    let mut sets = Vec::new();
    let mut covered = vec![false; w * h];
    while let Some(c) = covered.iter().position(|&x| !x) {
        let (x, y) = (c % w, c / w);
        let x1 = rng.random_range(x..w.min(x + 2));
        let y1 = rng.random_range(y..h.min(y + 2));
        let s = rect(x, x1, y, y1);
        for &c in &s {
            covered[c] = true;
        }
        sets.push(s);
    }
    for _ in 0..extra {
        let x0 = rng.random_range(0..w);
        let y0 = rng.random_range(0..h);
        let x1 = rng.random_range(x0..w.min(x0 + 2));
        let y1 = rng.random_range(y0..h.min(y0 + 2));
        sets.push(rect(x0, x1, y0, y1));
    }
    sets
}

pub fn path_edges(n: usize) -> Vec<(usize, usize)> {
    (1..n).map(|i| (i - 1, i)).collect()
}

pub fn grid_edges(w: usize, h: usize) -> Vec<(usize, usize)> {
    let mut e = Vec::new();
    for y in 0..h {
        for x in 0..w {
            let c = y * w + x;
            if x + 1 < w {
                e.push((c, c + 1));
            }
            if y + 1 < h {
                e.push((c, c + w));
            }
        }
    }
    e
}
