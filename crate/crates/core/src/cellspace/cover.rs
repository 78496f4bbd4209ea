use std::sync::{Arc, OnceLock};

use super::family::SetFamily;
use super::map::CellMap;
use super::space::{CellSpace, Permutation};
use super::Cell;
use crate::{Error, Result};

/// Buffers recycled between steps of [`DynamicalJoins`]. Fresh buffers of
/// tens of megabytes cost more in page faults than the passes that fill them.
#[derive(Default)]
struct Storage {
    labels: Vec<Cell>,
    offsets: Vec<u32>,
    members: Vec<Cell>,
}

/// Which cover elements contain a given cell.
#[derive(Clone, Debug)]
pub(crate) enum Membership {
    /// Partition covers: exactly one element per cell.
    Labels(Vec<Cell>),
    Lists(SetFamily),
}

impl Membership {
    #[inline]
    pub(crate) fn of(&self, c: Cell) -> &[Cell] {
        match self {
            Membership::Labels(l) => std::slice::from_ref(&l[c as usize]),
            Membership::Lists(f) => f.get(c as usize),
        }
    }
}

/// A finite open cover: nonempty cell sets whose union is every cell.
///
/// Elements are sorted cell lists, duplicates removed with the first
/// occurrence kept, so element order is meaningful and stable.
///
/// Partitions built by the join machinery may hold only their cell labels;
/// the element lists are then materialised on first use.
#[derive(Clone, Debug)]
pub struct Cover {
    space: Arc<CellSpace>,
    len: usize,
    partition: bool,
    inner: Arc<Lazy>,
}

#[derive(Debug, Default)]
struct Lazy {
    sets: OnceLock<Arc<SetFamily>>,
    membership: OnceLock<Membership>,
}

impl PartialEq for Cover {
    fn eq(&self, other: &Self) -> bool {
        same_space(&self.space, &other.space) && self.family() == other.family()
    }
}

pub(crate) fn same_space(a: &Arc<CellSpace>, b: &Arc<CellSpace>) -> bool {
    Arc::ptr_eq(a, b) || **a == **b
}

pub(crate) fn check_same_space(a: &Arc<CellSpace>, b: &Arc<CellSpace>) -> Result<()> {
    if same_space(a, b) {
        Ok(())
    } else {
        Err(Error::AmbientMismatch)
    }
}

impl Cover {
    pub fn new<I, S>(space: &Arc<CellSpace>, elements: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: IntoIterator<Item = usize>,
    {
        let n = space.len();
        let mut sets = SetFamily::new();
        for (i, el) in elements.into_iter().enumerate() {
            let mut cells: Vec<usize> = el.into_iter().collect();
            if cells.is_empty() {
                return Err(Error::Structural(format!("cover element {i} is empty")));
            }
            if let Some(&bad) = cells.iter().find(|&&c| c >= n) {
                return Err(Error::Structural(format!(
                    "cover element {i} contains cell {bad} outside 0..{n}"
                )));
            }
            cells.sort_unstable();
            cells.dedup();
            sets.push(cells.into_iter().map(|c| c as Cell));
        }
        Self::from_family(space, sets, true)
    }

    /// The one-element cover `{X}`.
    pub fn trivial(space: &Arc<CellSpace>) -> Self {
        let mut sets = SetFamily::new();
        sets.push(0..space.len() as Cell);
        Self::assemble(space, sets, true)
    }

    fn assemble(space: &Arc<CellSpace>, sets: SetFamily, partition: bool) -> Self {
        let len = sets.len();
        let inner = Lazy::default();
        let _ = inner.sets.set(Arc::new(sets));
        Self { space: Arc::clone(space), len, partition, inner: Arc::new(inner) }
    }

    /// Elements must be sorted and nonempty. Checks the covering property.
    pub(crate) fn from_family(space: &Arc<CellSpace>, sets: SetFamily, dedup: bool) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::Structural("a cover needs at least one element".into()));
        }
        let sets = if dedup { sets.dedup().0 } else { sets };
        let n = space.len();
        let mut covered = vec![false; n];
        for set in sets.iter() {
            for &c in set {
                covered[c as usize] = true;
            }
        }
        if let Some(c) = covered.iter().position(|&x| !x) {
            return Err(Error::CoveringViolation { cell: c as Cell });
        }
        let partition = sets.total_members() == n;
        Ok(Self::assemble(space, sets, partition))
    }

    /// The partition with cell `c` in element `labels[c]`. Every label in
    /// `0..count` must be used.
    fn from_labels(space: &Arc<CellSpace>, labels: Vec<Cell>, count: usize) -> Self {
        let inner = Lazy::default();
        let _ = inner.membership.set(Membership::Labels(labels));
        Self { space: Arc::clone(space), len: count, partition: true, inner: Arc::new(inner) }
    }

    fn sets_from_labels(labels: &[Cell], count: usize) -> SetFamily {
        let mut offsets = vec![0u32; count + 1];
        for &l in labels {
            offsets[l as usize + 1] += 1;
        }
        for e in 0..count {
            offsets[e + 1] += offsets[e];
        }
        let mut cursor = offsets.clone();
        let mut members = vec![0 as Cell; labels.len()];
        for (c, &l) in labels.iter().enumerate() {
            members[cursor[l as usize] as usize] = c as Cell;
            cursor[l as usize] += 1;
        }
        debug_assert!(offsets.windows(2).all(|w| w[0] < w[1]));
        SetFamily::from_parts(offsets, members)
    }

    /// Storage of a cover nobody else holds, for reuse as scratch.
    fn into_storage(self) -> Storage {
        let Some(inner) = Arc::into_inner(self.inner) else { return Storage::default() };
        let labels = match inner.membership.into_inner() {
            Some(Membership::Labels(l)) => l,
            _ => Vec::new(),
        };
        let (offsets, members) = inner
            .sets
            .into_inner()
            .and_then(Arc::into_inner)
            .map(SetFamily::into_parts)
            .unwrap_or_default();
        Storage { labels, offsets, members }
    }

    fn labels(&self) -> Option<&[Cell]> {
        match self.membership() {
            Membership::Labels(l) => Some(l),
            Membership::Lists(_) => None,
        }
    }

    pub fn space(&self) -> &Arc<CellSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn element(&self, i: usize) -> &[Cell] {
        self.family().get(i)
    }

    pub fn elements(&self) -> impl ExactSizeIterator<Item = &[Cell]> + '_ {
        self.family().iter()
    }

    pub fn family(&self) -> &SetFamily {
        self.sets_arc()
    }

    fn sets_arc(&self) -> &Arc<SetFamily> {
        self.inner.sets.get_or_init(|| match self.inner.membership.get() {
            Some(Membership::Labels(l)) => Arc::new(Self::sets_from_labels(l, self.len)),
            _ => unreachable!("covers hold their sets or their labels"),
        })
    }

    pub(crate) fn shared_family(&self) -> Arc<SetFamily> {
        Arc::clone(self.sets_arc())
    }

    /// Every cell lies in exactly one element.
    pub fn is_partition(&self) -> bool {
        self.partition
    }

    pub fn to_vecs(&self) -> Vec<Vec<Cell>> {
        self.family().to_vecs()
    }

    pub(crate) fn membership(&self) -> &Membership {
        self.inner.membership.get_or_init(|| {
            if self.partition {
                let mut labels = vec![0; self.space.len()];
                for (i, set) in self.elements().enumerate() {
                    for &c in set {
                        labels[c as usize] = i as Cell;
                    }
                }
                Membership::Labels(labels)
            } else {
                Membership::Lists(self.family().transpose(self.space.len()))
            }
        })
    }

    /// Whether every element of `self` lies inside some element of `other`.
    pub fn refines(&self, other: &Cover) -> bool {
        if !same_space(&self.space, &other.space) {
            return false;
        }
        let mem = other.membership();
        self.elements().all(|set| {
            let mut candidates: Vec<Cell> = mem.of(set[0]).to_vec();
            for &c in &set[1..] {
                let here = mem.of(c);
                candidates.retain(|e| here.binary_search(e).is_ok());
                if candidates.is_empty() {
                    return false;
                }
            }
            true
        })
    }

    pub fn relabel_onto(&self, space: &Arc<CellSpace>, perm: &Permutation) -> Result<Cover> {
        perm.check_len(self.space.len())?;
        let mut sets = SetFamily::with_capacity(self.len(), self.family().total_members());
        let mut buf = Vec::new();
        for set in self.elements() {
            buf.clear();
            buf.extend(set.iter().map(|&c| perm.apply(c)));
            buf.sort_unstable();
            sets.push_slice(&buf);
        }
        Cover::from_family(space, sets, false)
    }

    pub fn relabel(&self, perm: &Permutation) -> Result<Cover> {
        let space = Arc::new(self.space.relabel(perm)?);
        self.relabel_onto(&space, perm)
    }
}

/// `{T^{-1}(U) : U in cover}` with `T^{-1}(U) = {c : images(c) meets U}`.
/// Empty preimages are dropped.
pub fn pullback(cover: &Cover, map: &CellMap) -> Result<Cover> {
    pullback_into(cover, map, Vec::new())
}

fn pullback_into(cover: &Cover, map: &CellMap, buf: Vec<Cell>) -> Result<Cover> {
    check_same_space(cover.space(), map.space())?;
    if let Some(cell) = map.first_without_preimage() {
        return Err(Error::CoveringViolation { cell });
    }
    if let Some(labels) = cover.labels() {
        if let Some(p) = pullback_partition(cover, labels, map, buf) {
            return Ok(p);
        }
    }
    let n = cover.space.len();
    let mem = cover.membership();
    let mut per_cell = SetFamily::with_capacity(n, n);
    let mut stamp = vec![Cell::MAX; cover.len()];
    let mut scratch: Vec<Cell> = Vec::new();
    for c in 0..n as Cell {
        scratch.clear();
        for t in map.images(c) {
            for &e in mem.of(t) {
                if stamp[e as usize] != c {
                    stamp[e as usize] = c;
                    scratch.push(e);
                }
            }
        }
        scratch.sort_unstable();
        per_cell.push_slice(&scratch);
    }
    let by_element = per_cell.transpose(cover.len());
    let partition = by_element.total_members() == n;
    let mut sets = SetFamily::with_capacity(by_element.len(), by_element.total_members());
    for set in by_element.iter().filter(|s| !s.is_empty()) {
        sets.push_slice(set);
    }
    Cover::from_family(cover.space(), sets, !partition)
}

/// Pullback of a partition when every cell's images lie in one element.
fn pullback_partition(cover: &Cover, labels: &[Cell], map: &CellMap, mut out: Vec<Cell>) -> Option<Cover> {
    let n = labels.len();
    out.clear();
    out.reserve(n);
    if let Some(ranges) = map.ranges() {
        for &(a, b) in ranges {
            let block = &labels[a as usize..b as usize];
            let l = block[0];
            if block.iter().any(|&x| x != l) {
                return None;
            }
            out.push(l);
        }
    }
    for c in out.len() as Cell..n as Cell {
        let mut it = map.images(c);
        let l = labels[it.next().expect("images are nonempty") as usize];
        if it.any(|t| labels[t as usize] != l) {
            return None;
        }
        out.push(l);
    }
    let mut used = vec![false; cover.len()];
    for &l in &out {
        used[l as usize] = true;
    }
    let count = used.iter().filter(|&&u| u).count();
    if count < cover.len() {
        let mut rank = vec![0 as Cell; cover.len()];
        let mut next = 0;
        for (r, &u) in rank.iter_mut().zip(&used) {
            *r = next;
            next += u as Cell;
        }
        for l in &mut out {
            *l = rank[*l as usize];
        }
    }
    Some(Cover::from_labels(cover.space(), out, count))
}

/// Join of two partitions, element order as in [`join`].
fn join_partitions(a: &Cover, b: &Cover, lb: &[Cell], mut offsets: Vec<u32>, mut members: Vec<Cell>) -> Cover {
    let n = lb.len();
    // Every slot is overwritten below.
    members.resize(n, 0);
    offsets.clear();
    offsets.reserve(a.len() + 1);
    offsets.push(0);
    // Per element of `a`: count cells per element of `b`, then place them.
    let mut count = vec![0u32; b.len()];
    let mut seen: Vec<Cell> = Vec::new();
    let mut base = 0u32;
    'sets: for set in a.elements() {
        // Labels that never decrease along the set split it into runs in
        // place, which is the common case for symbolic models.
        let mark = offsets.len();
        let mut prev = lb[set[0] as usize];
        for (i, &c) in set.iter().enumerate() {
            let j = lb[c as usize];
            if j != prev {
                if j < prev {
                    offsets.truncate(mark);
                    break;
                }
                offsets.push(base + i as u32);
                prev = j;
            }
            members[base as usize + i] = c;
            if i + 1 == set.len() {
                base += set.len() as u32;
                offsets.push(base);
                continue 'sets;
            }
        }
        seen.clear();
        for &c in set {
            let j = lb[c as usize] as usize;
            if count[j] == 0 {
                seen.push(j as Cell);
            }
            count[j] += 1;
        }
        seen.sort_unstable();
        let mut at = base;
        for &j in &seen {
            let k = std::mem::replace(&mut count[j as usize], at);
            at += k;
            offsets.push(at);
        }
        for &c in set {
            let slot = &mut count[lb[c as usize] as usize];
            members[*slot as usize] = c;
            *slot += 1;
        }
        for &j in &seen {
            count[j as usize] = 0;
        }
        base = at;
    }
    let sets = SetFamily::from_parts(offsets, members);
    Cover::assemble(a.space(), sets, true)
}

/// Least common refinement: all nonempty `U ∩ V`, ordered by `(i, j)`.
pub fn join(a: &Cover, b: &Cover) -> Result<Cover> {
    join_into(a, b, Storage::default())
}

fn join_into(a: &Cover, b: &Cover, scratch: Storage) -> Result<Cover> {
    check_same_space(a.space(), b.space())?;
    if a.partition && b.partition {
        let lb = b.labels().expect("partitions carry labels");
        return Ok(join_partitions(a, b, lb, scratch.offsets, scratch.members));
    }
    let mem = b.membership();
    let mut sets = SetFamily::with_capacity(a.len(), a.family().total_members());
    let mut pairs: Vec<(Cell, Cell)> = Vec::new();
    for set in a.elements() {
        pairs.clear();
        for &c in set {
            pairs.extend(mem.of(c).iter().map(|&j| (j, c)));
        }
        pairs.sort_unstable();
        let mut prev = None;
        for &(j, c) in &pairs {
            if prev != Some(j) {
                sets.open();
                prev = Some(j);
            }
            sets.extend_last(c);
        }
    }
    Cover::from_family(a.space(), sets, !(a.partition && b.partition))
}

/// `U_0^{n-1} = U ∨ T^{-1}U ∨ ... ∨ T^{-(n-1)}U`.
pub fn dynamical_join(cover: &Cover, map: &CellMap, n: usize) -> Result<Cover> {
    if n == 0 {
        return Err(Error::Invalid("dynamical join needs n >= 1".into()));
    }
    DynamicalJoins::new(cover, map)
        .nth(n - 1)
        .expect("the join sequence is infinite")
}

/// Successive dynamical joins `U_0^0, U_0^1, U_0^2, ...`.
pub struct DynamicalJoins<'a> {
    map: &'a CellMap,
    pulled: Cover,
    joined: Option<Cover>,
    failed: bool,
    spare: Storage,
}

impl<'a> DynamicalJoins<'a> {
    pub fn new(cover: &Cover, map: &'a CellMap) -> Self {
        Self { map, pulled: cover.clone(), joined: None, failed: false, spare: Storage::default() }
    }

    /// `T^{-(n-1)}U` for the most recently yielded `U_0^{n-1}`.
    pub fn pulled(&self) -> &Cover {
        &self.pulled
    }

    fn advance(&mut self) -> Result<Cover> {
        let Some(acc) = self.joined.take() else {
            self.joined = Some(self.pulled.clone());
            return Ok(self.pulled.clone());
        };
        let spare = std::mem::take(&mut self.spare);
        let pulled = pullback_into(&self.pulled, self.map, spare.labels)?;
        self.spare.labels = std::mem::replace(&mut self.pulled, pulled).into_storage().labels;
        let next = join_into(&acc, &self.pulled, Storage { labels: Vec::new(), ..spare })?;
        let old = acc.into_storage();
        (self.spare.offsets, self.spare.members) = (old.offsets, old.members);
        self.joined = Some(next.clone());
        Ok(next)
    }
}

impl Iterator for DynamicalJoins<'_> {
    type Item = Result<Cover>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let r = self.advance();
        self.failed = r.is_err();
        Some(r)
    }
}
