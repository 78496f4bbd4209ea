//! Minimum set cover: exact reductions, then branch and bound on the kernel
//! or a greedy fallback.
//!
//! An instance is given item by item: `items[k]` lists, sorted, the sets
//! that contain item `k`. Among optimal covers the exact path returns the
//! lexicographically smallest sorted index vector; every reduction used here
//! preserves that optimum.

/// Largest kernel the bitmask search accepts.
pub(crate) const MAX_EXACT: usize = 64;

/// Reductions that compare all pairs are skipped above this many items.
const PAIRWISE_LIMIT: usize = 4096;

#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) struct Solution {
    pub chosen: Vec<u32>,
    pub exact: bool,
}

/// Returns `None` when some item lies in no set.
pub(crate) fn solve(n_sets: usize, items: Vec<Vec<u32>>, threshold: usize) -> Option<Solution> {
    if items.iter().any(Vec::is_empty) {
        return None;
    }
    let mut forced = vec![false; n_sets];
    let mut items = items;
    loop {
        items.sort_unstable_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        items.dedup();

        let essential: Vec<u32> = items.iter().filter(|it| it.len() == 1).map(|it| it[0]).collect();
        if !essential.is_empty() {
            for s in essential {
                forced[s as usize] = true;
            }
            items.retain(|it| !it.iter().any(|&s| forced[s as usize]));
            continue;
        }

        if items.len() <= PAIRWISE_LIMIT {
            drop_dominated_items(&mut items);
        }
        if !drop_dominated_sets(n_sets, &mut items) {
            break;
        }
    }

    let mut residual: Vec<u32> = items.iter().flatten().copied().collect();
    residual.sort_unstable();
    residual.dedup();

    let (picked, exact) = if items.is_empty() {
        (Vec::new(), true)
    } else if residual.len() <= threshold.min(MAX_EXACT) {
        (branch_and_bound(&residual, &items), true)
    } else {
        (greedy(n_sets, &items), false)
    };

    let mut chosen: Vec<u32> = (0..n_sets as u32).filter(|&s| forced[s as usize]).collect();
    chosen.extend(picked);
    chosen.sort_unstable();
    Some(Solution { chosen, exact })
}

/// An item whose set list contains another item's list is covered whenever
/// the other one is. `items` must be sorted by length.
fn drop_dominated_items(items: &mut Vec<Vec<u32>>) {
    let mut kept: Vec<Vec<u32>> = Vec::with_capacity(items.len());
    for it in items.drain(..) {
        if !kept.iter().any(|k| super::family::is_subset_sorted(k, &it)) {
            kept.push(it);
        }
    }
    *items = kept;
}

/// Removes every set whose items all lie in a lower-indexed set. Swapping a
/// set for a lower-indexed superset never loses optimality and only makes the
/// sorted index vector smaller. Returns whether anything changed.
fn drop_dominated_sets(n_sets: usize, items: &mut [Vec<u32>]) -> bool {
    let mut active: Vec<u32> = items.iter().flatten().copied().collect();
    active.sort_unstable();
    active.dedup();
    if active.len() > PAIRWISE_LIMIT || active.len() * items.len() > 64 * PAIRWISE_LIMIT * PAIRWISE_LIMIT {
        return false;
    }
    let words = items.len().div_ceil(64);
    let mut slot = vec![usize::MAX; n_sets];
    for (k, &s) in active.iter().enumerate() {
        slot[s as usize] = k;
    }
    let mut bits = vec![0u64; active.len() * words];
    for (i, it) in items.iter().enumerate() {
        for &s in it {
            bits[slot[s as usize] * words + i / 64] |= 1 << (i % 64);
        }
    }
    let row = |k: usize| &bits[k * words..(k + 1) * words];
    let mut removed = vec![false; active.len()];
    for k in 0..active.len() {
        for t in 0..k {
            if removed[t] {
                continue;
            }
            if row(k).iter().zip(row(t)).all(|(a, b)| a & !b == 0) {
                removed[k] = true;
                break;
            }
        }
    }
    if !removed.iter().any(|&r| r) {
        return false;
    }
    for it in items.iter_mut() {
        it.retain(|&s| !removed[slot[s as usize]]);
    }
    true
}

/// Include-first depth-first search over sets in index order, so the first
/// cover found of each size is the lexicographically smallest.
fn branch_and_bound(residual: &[u32], items: &[Vec<u32>]) -> Vec<u32> {
    let masks: Vec<u64> = items
        .iter()
        .map(|it| {
            it.iter().fold(0u64, |m, s| {
                let k = residual.binary_search(s).expect("residual holds every listed set");
                m | (1 << k)
            })
        })
        .collect();
    let mut search = Search {
        masks,
        sets: residual.len(),
        best: greedy(residual.iter().max().map_or(0, |&m| m as usize + 1), items).len() + 1,
        best_mask: None,
        scratch: Vec::new(),
    };
    search.dfs(0, 0, 0);
    let mask = search.best_mask.expect("greedy bound guarantees a cover is found");
    (0..residual.len()).filter(|k| mask >> k & 1 == 1).map(|k| residual[k]).collect()
}

struct Search {
    masks: Vec<u64>,
    sets: usize,
    best: usize,
    best_mask: Option<u64>,
    scratch: Vec<Vec<u64>>,
}

impl Search {
    fn dfs(&mut self, next: usize, chosen: u64, count: usize) {
        let allowed = if next >= 64 { 0 } else { !0u64 << next };
        let mut open = self.scratch.pop().unwrap_or_default();
        open.clear();
        for &m in &self.masks {
            if m & chosen == 0 {
                let avail = m & allowed;
                if avail == 0 {
                    self.scratch.push(open);
                    return;
                }
                open.push(avail);
            }
        }
        if open.is_empty() {
            if count < self.best {
                self.best = count;
                self.best_mask = Some(chosen);
            }
            self.scratch.push(open);
            return;
        }
        // Items with pairwise disjoint options each need their own set.
        open.sort_unstable_by_key(|m| m.count_ones());
        let mut used = 0u64;
        let mut bound = 0;
        for &m in &open {
            if m & used == 0 {
                bound += 1;
                used |= m;
            }
        }
        let bit = 1u64 << next;
        let useful = open.iter().any(|m| m & bit != 0);
        self.scratch.push(open);
        if count + bound >= self.best || next >= self.sets {
            return;
        }
        if useful {
            self.dfs(next + 1, chosen | bit, count + 1);
        }
        self.dfs(next + 1, chosen, count);
    }
}

/// Largest-first greedy, ties to the lowest index, then redundant sets are
/// pruned from the back.
pub(crate) fn greedy(n_sets: usize, items: &[Vec<u32>]) -> Vec<u32> {
    let mut covered = vec![false; items.len()];
    let mut left = items.len();
    let mut chosen = Vec::new();
    let mut gain = vec![0usize; n_sets];
    while left > 0 {
        gain.iter_mut().for_each(|g| *g = 0);
        for (it, _) in items.iter().zip(&covered).filter(|(_, &c)| !c) {
            for &s in it {
                gain[s as usize] += 1;
            }
        }
        let best = (0..n_sets).max_by_key(|&s| (gain[s], std::cmp::Reverse(s))).expect("sets exist");
        chosen.push(best as u32);
        for (it, c) in items.iter().zip(covered.iter_mut()) {
            if !*c && it.binary_search(&(best as u32)).is_ok() {
                *c = true;
                left -= 1;
            }
        }
    }
    chosen.sort_unstable();
    let mut i = chosen.len();
    while i > 0 {
        i -= 1;
        let s = chosen[i];
        let still = items
            .iter()
            .all(|it| it.iter().any(|t| *t != s && chosen.binary_search(t).is_ok()));
        if still {
            chosen.remove(i);
        }
    }
    chosen
}
