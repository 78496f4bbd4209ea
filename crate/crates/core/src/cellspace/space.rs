use std::sync::Arc;

use super::family::SetFamily;
use super::Cell;
use crate::{Error, Result};

/// A finite combinatorial model of a compact space.
///
/// Cells are `0..len()`. Two cells are adjacent when their open thickenings
/// overlap; disjoint open sets are modelled as disjoint, non-adjacent cell
/// sets. `dimension` is the declared covering dimension `d`, so refinements
/// are allowed `d + 1` colours.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CellSpace {
    neighbours: SetFamily,
    dimension: usize,
}

impl CellSpace {
    /// Builds a space from an undirected edge list. Edges are symmetrised;
    /// self-pairs are rejected, as is any edge when `dimension == 0`.
    pub fn new(cells: usize, edges: &[(usize, usize)], dimension: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::Structural("a cell space needs at least one cell".into()));
        }
        if cells > u32::MAX as usize {
            return Err(Error::SizeCap { size: cells as u128, cap: u32::MAX as u128 });
        }
        if dimension == 0 && !edges.is_empty() {
            return Err(Error::Structural(
                "dimension 0 models are totally disconnected and take no adjacency".into(),
            ));
        }
        let mut degree = vec![0usize; cells];
        for &(a, b) in edges {
            if a >= cells || b >= cells {
                return Err(Error::Structural(format!("edge ({a}, {b}) outside 0..{cells}")));
            }
            if a == b {
                return Err(Error::Structural(format!("self-adjacency at cell {a}")));
            }
            degree[a] += 1;
            degree[b] += 1;
        }
        let mut lists: Vec<Vec<Cell>> = Vec::new();
        let neighbours = if edges.is_empty() {
            let mut f = SetFamily::with_capacity(cells, 0);
            for _ in 0..cells {
                f.open();
            }
            f
        } else {
            lists.extend(degree.iter().map(|&d| Vec::with_capacity(d)));
            for &(a, b) in edges {
                lists[a].push(b as Cell);
                lists[b].push(a as Cell);
            }
            let mut f = SetFamily::with_capacity(cells, 2 * edges.len());
            for l in &mut lists {
                l.sort_unstable();
                l.dedup();
                f.push_slice(l);
            }
            f
        };
        Ok(Self { neighbours, dimension })
    }

    /// `cells` isolated points.
    pub fn discrete(cells: usize) -> Result<Self> {
        Self::new(cells, &[], 0)
    }

    /// A path `0 - 1 - ... - (n-1)`, a model of the interval.
    pub fn path(n: usize) -> Result<Self> {
        let edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        Self::new(n, &edges, 1)
    }

    /// A cycle of `n >= 3` cells, a model of the circle.
    pub fn cycle(n: usize) -> Result<Self> {
        if n < 3 {
            return Err(Error::Structural("a cycle needs at least three cells".into()));
        }
        let mut edges: Vec<_> = (1..n).map(|i| (i - 1, i)).collect();
        edges.push((n - 1, 0));
        Self::new(n, &edges, 1)
    }

    /// A `width x height` grid with 4-neighbour adjacency, a model of the
    /// square. Cell `(x, y)` has index `y * width + x`.
    pub fn grid(width: usize, height: usize) -> Result<Self> {
        let mut edges = Vec::new();
        for y in 0..height {
            for x in 0..width {
                let c = y * width + x;
                if x + 1 < width {
                    edges.push((c, c + 1));
                }
                if y + 1 < height {
                    edges.push((c, c + width));
                }
            }
        }
        Self::new(width * height, &edges, 2)
    }

    pub fn into_shared(self) -> Arc<Self> {
        Arc::new(self)
    }

    pub fn len(&self) -> usize {
        self.neighbours.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Colours available to refinements, `d + 1`.
    pub fn colours(&self) -> usize {
        self.dimension + 1
    }

    pub fn neighbours(&self, c: Cell) -> &[Cell] {
        self.neighbours.get(c as usize)
    }

    pub fn adjacent(&self, a: Cell, b: Cell) -> bool {
        self.neighbours(a).binary_search(&b).is_ok()
    }

    pub fn has_adjacency(&self) -> bool {
        self.neighbours.total_members() > 0
    }

    /// Each undirected edge once, as `(low, high)`.
    pub fn edges(&self) -> impl Iterator<Item = (Cell, Cell)> + '_ {
        self.neighbours.iter().enumerate().flat_map(|(a, ns)| {
            ns.iter().filter(move |&&b| b as usize > a).map(move |&b| (a as Cell, b))
        })
    }

    /// Disjoint union; cells of `other` are shifted by `self.len()`.
    pub fn disjoint_union(&self, other: &CellSpace) -> Result<CellSpace> {
        let shift = self.len();
        let mut edges: Vec<(usize, usize)> =
            self.edges().map(|(a, b)| (a as usize, b as usize)).collect();
        edges.extend(other.edges().map(|(a, b)| (a as usize + shift, b as usize + shift)));
        CellSpace::new(shift + other.len(), &edges, self.dimension.max(other.dimension))
    }

    pub fn relabel(&self, perm: &Permutation) -> Result<CellSpace> {
        perm.check_len(self.len())?;
        let edges: Vec<(usize, usize)> = self
            .edges()
            .map(|(a, b)| (perm.apply(a) as usize, perm.apply(b) as usize))
            .collect();
        CellSpace::new(self.len(), &edges, self.dimension)
    }
}

/// A bijection on cells, `c -> image[c]`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Permutation {
    image: Vec<Cell>,
}

impl Permutation {
    pub fn new(image: Vec<usize>) -> Result<Self> {
        let n = image.len();
        let mut hit = vec![false; n];
        for (c, &t) in image.iter().enumerate() {
            if t >= n {
                return Err(Error::NotBijective(format!("cell {c} sent to {t} outside 0..{n}")));
            }
            if std::mem::replace(&mut hit[t], true) {
                return Err(Error::NotBijective(format!("cell {t} hit twice")));
            }
        }
        Ok(Self { image: image.into_iter().map(|t| t as Cell).collect() })
    }

    pub fn identity(n: usize) -> Self {
        Self { image: (0..n as Cell).collect() }
    }

    pub fn len(&self) -> usize {
        self.image.len()
    }

    pub fn is_empty(&self) -> bool {
        self.image.is_empty()
    }

    pub fn apply(&self, c: Cell) -> Cell {
        self.image[c as usize]
    }

    pub fn inverse(&self) -> Permutation {
        let mut inv = vec![0; self.image.len()];
        for (c, &t) in self.image.iter().enumerate() {
            inv[t as usize] = c as Cell;
        }
        Permutation { image: inv }
    }

    pub(crate) fn check_len(&self, cells: usize) -> Result<()> {
        if self.len() != cells {
            return Err(Error::NotBijective(format!(
                "permutation on {} cells applied to {} cells",
                self.len(),
                cells
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_are_symmetrised() {
        let s = CellSpace::new(3, &[(0, 1), (1, 0), (2, 1)], 1).unwrap();
        assert_eq!(s.neighbours(1), &[0, 2]);
        assert!(s.adjacent(2, 1));
        assert!(!s.adjacent(0, 2));
        assert_eq!(s.edges().collect::<Vec<_>>(), vec![(0, 1), (1, 2)]);
    }

    #[test]
    fn invalid_spaces_are_rejected() {
        assert!(CellSpace::new(0, &[], 0).is_err());
        assert!(CellSpace::new(2, &[(0, 0)], 1).is_err());
        assert!(CellSpace::new(2, &[(0, 1)], 0).is_err());
        assert!(CellSpace::new(2, &[(0, 2)], 1).is_err());
    }

    #[test]
    fn grid_adjacency() {
        let g = CellSpace::grid(3, 2).unwrap();
        assert_eq!(g.dimension(), 2);
        assert_eq!(g.neighbours(4), &[1, 3, 5]);
        assert_eq!(g.edges().count(), 7);
    }

    #[test]
    fn permutation_must_be_bijective() {
        assert!(Permutation::new(vec![0, 0]).is_err());
        assert!(Permutation::new(vec![0, 2]).is_err());
        let p = Permutation::new(vec![2, 0, 1]).unwrap();
        assert_eq!(p.inverse().apply(p.apply(1)), 1);
    }

    #[test]
    fn relabel_moves_edges() {
        let s = CellSpace::path(3).unwrap();
        let p = Permutation::new(vec![1, 0, 2]).unwrap();
        let r = s.relabel(&p).unwrap();
        assert!(r.adjacent(1, 0));
        assert!(r.adjacent(0, 2));
        assert!(!r.adjacent(1, 2));
    }

    #[test]
    fn disjoint_union_has_no_cross_edges() {
        let u = CellSpace::path(2).unwrap().disjoint_union(&CellSpace::discrete(2).unwrap()).unwrap();
        assert_eq!(u.len(), 4);
        assert_eq!(u.dimension(), 1);
        assert_eq!(u.edges().collect::<Vec<_>>(), vec![(0, 1)]);
    }
}
