//! Compressed storage for families of sorted cell sets.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::hash::{Hash, Hasher};

use super::Cell;

/// A family of sets stored back to back (CSR layout).
///
/// Member lists are kept exactly as pushed; callers that need canonical
/// sets push sorted, deduplicated slices. The total member count is limited
/// to `u32::MAX`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SetFamily {
    offsets: Vec<u32>,
    members: Vec<Cell>,
}

impl SetFamily {
    pub fn new() -> Self {
        Self { offsets: vec![0], members: Vec::new() }
    }

    pub fn with_capacity(sets: usize, members: usize) -> Self {
        let mut offsets = Vec::with_capacity(sets + 1);
        offsets.push(0);
        Self { offsets, members: Vec::with_capacity(members) }
    }

    pub(crate) fn from_parts(offsets: Vec<u32>, members: Vec<Cell>) -> Self {
        debug_assert_eq!(offsets.last().map(|&o| o as usize), Some(members.len()));
        Self { offsets, members }
    }

    pub(crate) fn into_parts(self) -> (Vec<u32>, Vec<Cell>) {
        (self.offsets, self.members)
    }

    #[inline]
    fn end(&self) -> u32 {
        u32::try_from(self.members.len()).expect("set family exceeds u32::MAX members")
    }

    pub fn push_slice(&mut self, set: &[Cell]) {
        self.members.extend_from_slice(set);
        self.offsets.push(self.end());
    }

    pub fn push<I: IntoIterator<Item = Cell>>(&mut self, set: I) {
        self.members.extend(set);
        self.offsets.push(self.end());
    }

    /// Appends one member to the most recently started set.
    pub(crate) fn extend_last(&mut self, cell: Cell) {
        self.members.push(cell);
        let end = self.end();
        *self.offsets.last_mut().expect("offsets never empty") = end;
    }

    /// Starts a new, empty set.
    pub(crate) fn open(&mut self) {
        let end = self.end();
        self.offsets.push(end);
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> &[Cell] {
        &self.members[self.offsets[i] as usize..self.offsets[i + 1] as usize]
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[Cell]> + '_ {
        self.offsets.windows(2).map(move |w| &self.members[w[0] as usize..w[1] as usize])
    }

    pub fn total_members(&self) -> usize {
        self.members.len()
    }

    /// Incidence transpose: set `t` of the result lists, in increasing order,
    /// the indices of the sets containing `t`.
    pub fn transpose(&self, targets: usize) -> SetFamily {
        let mut counts = vec![0u32; targets + 1];
        for &m in &self.members {
            counts[m as usize + 1] += 1;
        }
        for t in 0..targets {
            counts[t + 1] += counts[t];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut members = vec![0 as Cell; self.members.len()];
        for (i, set) in self.iter().enumerate() {
            for &m in set {
                let slot = &mut cursor[m as usize];
                members[*slot as usize] = i as Cell;
                *slot += 1;
            }
        }
        SetFamily { offsets, members }
    }

    /// Drops repeated sets, keeping first occurrences. Returns the original
    /// indices of the kept sets.
    pub fn dedup(&self) -> (SetFamily, Vec<usize>) {
        let mut seen: HashMap<u64, Vec<usize>> = HashMap::new();
        let mut out = SetFamily::with_capacity(self.len(), self.members.len());
        let mut kept = Vec::new();
        for (i, set) in self.iter().enumerate() {
            let mut h = DefaultHasher::new();
            set.hash(&mut h);
            let bucket = seen.entry(h.finish()).or_default();
            if bucket.iter().any(|&j| out.get(j) == set) {
                continue;
            }
            bucket.push(out.len());
            out.push_slice(set);
            kept.push(i);
        }
        (out, kept)
    }

    pub fn from_sets<I, S>(sets: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = Cell>,
    {
        let mut f = SetFamily::new();
        for s in sets {
            f.push(s);
        }
        f
    }

    pub fn to_vecs(&self) -> Vec<Vec<Cell>> {
        self.iter().map(<[Cell]>::to_vec).collect()
    }
}

/// Intersection of two sorted slices.
pub(crate) fn intersect_sorted(a: &[Cell], b: &[Cell], out: &mut Vec<Cell>) {
    out.clear();
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
}

/// Whether sorted `a` is a subset of sorted `b`.
pub(crate) fn is_subset_sorted(a: &[Cell], b: &[Cell]) -> bool {
    if a.len() > b.len() {
        return false;
    }
    let mut j = 0;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j == b.len() || b[j] != x {
            return false;
        }
        j += 1;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transpose_lists_containing_sets() {
        let f = SetFamily::from_sets([vec![0, 1], vec![1, 2], vec![2]]);
        let t = f.transpose(3);
        assert_eq!(t.to_vecs(), vec![vec![0], vec![0, 1], vec![1, 2]]);
    }

    #[test]
    fn dedup_keeps_first() {
        let f = SetFamily::from_sets([vec![0, 1], vec![2], vec![0, 1]]);
        let (d, kept) = f.dedup();
        assert_eq!(d.to_vecs(), vec![vec![0, 1], vec![2]]);
        assert_eq!(kept, vec![0, 1]);
    }

    #[test]
    fn incremental_building() {
        let mut f = SetFamily::new();
        f.open();
        f.extend_last(3);
        f.extend_last(5);
        f.open();
        f.extend_last(1);
        assert_eq!(f.to_vecs(), vec![vec![3, 5], vec![1]]);
    }

    #[test]
    fn sorted_helpers() {
        let mut out = Vec::new();
        intersect_sorted(&[1, 3, 5, 7], &[3, 4, 7], &mut out);
        assert_eq!(out, vec![3, 7]);
        assert!(is_subset_sorted(&[3, 7], &[1, 3, 5, 7]));
        assert!(!is_subset_sorted(&[3, 8], &[1, 3, 5, 7]));
    }
}
