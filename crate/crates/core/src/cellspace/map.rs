use std::sync::{Arc, OnceLock};

use super::family::SetFamily;
use super::space::{CellSpace, Permutation};
use super::Cell;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
enum Images {
    /// Image of cell `c` is the half-open range `ranges[c]`.
    Ranges(Vec<(Cell, Cell)>),
    Sets(SetFamily),
}

/// Dynamics as a forward cell relation: each cell is sent to the nonempty set
/// of cells its image overlaps.
#[derive(Clone, Debug)]
pub struct CellMap {
    space: Arc<CellSpace>,
    images: Images,
    invertible: bool,
    preimage_gap: OnceLock<Option<Cell>>,
}

impl CellMap {
    /// `images[c]` lists the image cells of `c`. With `invertible` set the
    /// relation must be a bijection.
    pub fn new(space: &Arc<CellSpace>, images: Vec<Vec<usize>>, invertible: bool) -> Result<Self> {
        let n = space.len();
        if images.len() != n {
            return Err(Error::Structural(format!(
                "map lists {} cells, space has {n}",
                images.len()
            )));
        }
        let mut sets = SetFamily::with_capacity(n, n);
        for (c, mut img) in images.into_iter().enumerate() {
            if img.is_empty() {
                return Err(Error::Structural(format!("cell {c} has no image")));
            }
            if let Some(&bad) = img.iter().find(|&&t| t >= n) {
                return Err(Error::Structural(format!("cell {c} mapped to {bad} outside 0..{n}")));
            }
            img.sort_unstable();
            img.dedup();
            sets.push(img.into_iter().map(|t| t as Cell));
        }
        let map = Self {
            space: Arc::clone(space),
            images: Images::Sets(sets),
            invertible,
            preimage_gap: OnceLock::new(),
        };
        if invertible {
            map.check_bijection()?;
        }
        Ok(map)
    }

    /// The single-valued map `c -> f(c)`.
    pub fn from_fn(space: &Arc<CellSpace>, f: impl Fn(Cell) -> Cell, invertible: bool) -> Result<Self> {
        let images = (0..space.len() as Cell).map(|c| vec![f(c) as usize]).collect();
        Self::new(space, images, invertible)
    }

    pub fn identity(space: &Arc<CellSpace>) -> Self {
        let ranges = (0..space.len() as Cell).map(|c| (c, c + 1)).collect();
        Self {
            space: Arc::clone(space),
            images: Images::Ranges(ranges),
            invertible: true,
            preimage_gap: OnceLock::new(),
        }
    }

    /// Images given as contiguous ranges; used by the word-space models,
    /// which know their relation to be onto.
    pub(crate) fn from_ranges(space: &Arc<CellSpace>, ranges: Vec<(Cell, Cell)>, onto: bool) -> Self {
        debug_assert_eq!(ranges.len(), space.len());
        debug_assert!(ranges.iter().all(|&(a, b)| a < b && b as usize <= space.len()));
        let preimage_gap = OnceLock::new();
        if onto {
            let _ = preimage_gap.set(None);
        }
        let map = Self { space: Arc::clone(space), images: Images::Ranges(ranges), invertible: false, preimage_gap };
        debug_assert!(!onto || map.scan_preimages().is_none());
        map
    }

    fn check_bijection(&self) -> Result<()> {
        let n = self.space.len();
        let mut hit = vec![false; n];
        for c in 0..n as Cell {
            let mut it = self.images(c);
            let t = it.next().expect("images are nonempty");
            if it.next().is_some() {
                return Err(Error::NotBijective(format!("cell {c} has several images")));
            }
            if std::mem::replace(&mut hit[t as usize], true) {
                return Err(Error::NotBijective(format!("cell {t} hit twice")));
            }
        }
        Ok(())
    }

    pub fn space(&self) -> &Arc<CellSpace> {
        &self.space
    }

    pub fn is_invertible(&self) -> bool {
        self.invertible
    }

    pub fn images(&self, c: Cell) -> ImageIter<'_> {
        match &self.images {
            Images::Ranges(r) => {
                let (a, b) = r[c as usize];
                ImageIter::Range(a..b)
            }
            Images::Sets(s) => ImageIter::Slice(s.get(c as usize).iter()),
        }
    }

    /// Contiguous image ranges, when the map is stored that way.
    pub(crate) fn ranges(&self) -> Option<&[(Cell, Cell)]> {
        match &self.images {
            Images::Ranges(r) => Some(r),
            Images::Sets(_) => None,
        }
    }

    /// The first cell that is nobody's image, if any.
    pub fn first_without_preimage(&self) -> Option<Cell> {
        *self.preimage_gap.get_or_init(|| self.scan_preimages())
    }

    fn scan_preimages(&self) -> Option<Cell> {
        let mut hit = vec![false; self.space.len()];
        for c in 0..self.space.len() as Cell {
            for t in self.images(c) {
                hit[t as usize] = true;
            }
        }
        hit.iter().position(|h| !h).map(|c| c as Cell)
    }

    /// Image set of `c` under the `j`-th iterate, sorted.
    pub fn iterate_images(&self, c: Cell, j: usize) -> Vec<Cell> {
        let mut current = vec![c];
        let mut mark = vec![false; self.space.len()];
        for _ in 0..j {
            let mut next = Vec::new();
            for &x in &current {
                for t in self.images(x) {
                    if !std::mem::replace(&mut mark[t as usize], true) {
                        next.push(t);
                    }
                }
            }
            for &t in &next {
                mark[t as usize] = false;
            }
            next.sort_unstable();
            current = next;
        }
        current
    }

    pub fn to_lists(&self) -> Vec<Vec<Cell>> {
        (0..self.space.len() as Cell).map(|c| self.images(c).collect()).collect()
    }

    /// Same relation on the relabelled space `space`, which must be
    /// `self.space().relabel(perm)`.
    pub fn relabel_onto(&self, space: &Arc<CellSpace>, perm: &Permutation) -> Result<CellMap> {
        perm.check_len(self.space.len())?;
        let inv = perm.inverse();
        let images = (0..space.len() as Cell)
            .map(|c| self.images(inv.apply(c)).map(|t| perm.apply(t) as usize).collect())
            .collect();
        CellMap::new(space, images, self.invertible)
    }

    pub fn relabel(&self, perm: &Permutation) -> Result<CellMap> {
        let space = Arc::new(self.space.relabel(perm)?);
        self.relabel_onto(&space, perm)
    }

    /// `self` on the left copy, `other` on the right copy of `space`.
    pub(crate) fn disjoint_union_onto(&self, other: &CellMap, space: &Arc<CellSpace>) -> Result<CellMap> {
        let shift = self.space.len();
        let mut images: Vec<Vec<usize>> = (0..shift as Cell)
            .map(|c| self.images(c).map(|t| t as usize).collect())
            .collect();
        images.extend(
            (0..other.space.len() as Cell).map(|c| other.images(c).map(|t| t as usize + shift).collect()),
        );
        CellMap::new(space, images, self.invertible && other.invertible)
    }
}

pub enum ImageIter<'a> {
    Range(std::ops::Range<Cell>),
    Slice(std::slice::Iter<'a, Cell>),
}

impl Iterator for ImageIter<'_> {
    type Item = Cell;

    #[inline]
    fn next(&mut self) -> Option<Cell> {
        match self {
            ImageIter::Range(r) => r.next(),
            ImageIter::Slice(s) => s.next().copied(),
        }
    }
}
