//! The two optimisation kernels: minimal subcover `N(U)` and minimal
//! coloured refinement `N_c(U)`.
//!
//! Candidate refinement pieces are unions of cover atoms (cells grouped by
//! which elements contain them) lying inside a single parent element.
//! Same-colour pieces must be disjoint and non-adjacent. Pieces of one colour
//! are therefore unions of connected components of that colour's atoms, and
//! since enlarging a colour class never lowers its cost, an optimum can
//! always be taken with every atom in exactly one class. The exact search
//! enumerates those atom colourings; the cost of one class is a set cover of
//! its components by the parents that contain them.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use super::cover::Cover;
use super::family::{intersect_sorted, is_subset_sorted, SetFamily};
use super::setcover;
use super::space::CellSpace;
use super::Cell;
use crate::{Error, Result};

/// Search limits shared by both optimisers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SolverConfig {
    /// Exact search runs when the reduced set-cover kernel has at most this
    /// many elements, and the colouring search when there are at most this
    /// many atoms. Capped at 64.
    pub exact_threshold: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { exact_threshold: 24 }
    }
}

impl SolverConfig {
    fn limit(&self) -> usize {
        self.exact_threshold.min(setcover::MAX_EXACT)
    }
}

/// Cells of a cover grouped by membership pattern.
#[derive(Clone, Debug)]
pub struct Atoms {
    of_cell: Vec<Cell>,
    cells: SetFamily,
    parents: SetFamily,
}

impl Atoms {
    pub fn of(cover: &Cover) -> Self {
        let n = cover.space().len();
        if cover.is_partition() {
            let mut of_cell = vec![0; n];
            let mut parents = SetFamily::with_capacity(cover.len(), cover.len());
            for (i, set) in cover.elements().enumerate() {
                for &c in set {
                    of_cell[c as usize] = i as Cell;
                }
                parents.push([i as Cell]);
            }
            return Self { of_cell, cells: cover.family().clone(), parents };
        }
        let mem = cover.membership();
        let mut index: HashMap<&[Cell], Cell> = HashMap::new();
        let mut of_cell = Vec::with_capacity(n);
        let mut parents = SetFamily::new();
        for c in 0..n as Cell {
            let sig = mem.of(c);
            let next = index.len() as Cell;
            let a = *index.entry(sig).or_insert_with(|| {
                parents.push_slice(sig);
                next
            });
            of_cell.push(a);
        }
        let cells = SetFamily::from_sets(of_cell.iter().map(|&a| [a])).transpose(index.len());
        Self { of_cell, cells, parents }
    }

    pub fn len(&self) -> usize {
        self.cells.len()
    }

    pub fn is_empty(&self) -> bool {
        self.cells.is_empty()
    }

    pub fn atom_of(&self, c: Cell) -> Cell {
        self.of_cell[c as usize]
    }

    pub fn cells(&self, a: usize) -> &[Cell] {
        self.cells.get(a)
    }

    /// Cover elements containing atom `a`, ascending.
    pub fn parents(&self, a: usize) -> &[Cell] {
        self.parents.get(a)
    }

    /// Atom adjacency induced by cell adjacency.
    pub fn adjacency(&self, space: &CellSpace) -> Vec<Vec<Cell>> {
        let mut adj: Vec<Vec<Cell>> = vec![Vec::new(); self.len()];
        for (a, b) in space.edges() {
            let (x, y) = (self.atom_of(a), self.atom_of(b));
            if x != y {
                adj[x as usize].push(y);
                adj[y as usize].push(x);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
            l.dedup();
        }
        adj
    }
}

/// Result of [`minimal_subcover`].
#[derive(Clone, Debug)]
pub struct Subcover {
    pub count: usize,
    /// Indices of the chosen cover elements, ascending.
    pub chosen: Vec<usize>,
    pub witness: Cover,
    pub exact: bool,
}

/// Minimum-cardinality subcover. Exact when the reduced kernel has at most
/// `exact_threshold` elements, greedy (and flagged) otherwise. Among optimal
/// subcovers the lexicographically smallest index vector is returned.
pub fn minimal_subcover(cover: &Cover, config: &SolverConfig) -> Subcover {
    if cover.is_partition() {
        return Subcover {
            count: cover.len(),
            chosen: (0..cover.len()).collect(),
            witness: cover.clone(),
            exact: true,
        };
    }
    let atoms = Atoms::of(cover);
    let items = (0..atoms.len()).map(|a| atoms.parents(a).to_vec()).collect();
    let sol = setcover::solve(cover.len(), items, config.limit())
        .expect("every atom lies in some cover element");
    let chosen: Vec<usize> = sol.chosen.iter().map(|&s| s as usize).collect();
    let mut sets = SetFamily::with_capacity(chosen.len(), 0);
    for &i in &chosen {
        sets.push_slice(cover.element(i));
    }
    let witness = Cover::from_family(cover.space(), sets, false).expect("a subcover covers");
    Subcover { count: chosen.len(), chosen, witness, exact: sol.exact }
}

/// A refinement whose pieces are split into colour classes of pairwise
/// disjoint, pairwise non-adjacent sets.
#[derive(Clone, Debug)]
pub struct ColouredRefinement {
    space: Arc<CellSpace>,
    pieces: Arc<SetFamily>,
    colour_of: Vec<u32>,
    parent_of: Vec<u32>,
    colours: usize,
}

impl ColouredRefinement {
    /// Builds and validates a refinement of `cover`.
    pub fn new(
        cover: &Cover,
        pieces: Vec<Vec<usize>>,
        colour_of: Vec<usize>,
        parent_of: Vec<usize>,
        colours: usize,
    ) -> Result<Self> {
        if pieces.len() != colour_of.len() || pieces.len() != parent_of.len() {
            return Err(Error::Structural("piece, colour and parent lists differ in length".into()));
        }
        let mut family = SetFamily::new();
        for mut p in pieces {
            p.sort_unstable();
            p.dedup();
            family.push(p.into_iter().map(|c| c as Cell));
        }
        let r = Self {
            space: Arc::clone(cover.space()),
            pieces: Arc::new(family),
            colour_of: colour_of.into_iter().map(|c| c as u32).collect(),
            parent_of: parent_of.into_iter().map(|p| p as u32).collect(),
            colours,
        };
        r.validate(cover)?;
        Ok(r)
    }

    pub fn space(&self) -> &Arc<CellSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.pieces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pieces.is_empty()
    }

    pub fn colours(&self) -> usize {
        self.colours
    }

    pub fn piece(&self, j: usize) -> &[Cell] {
        self.pieces.get(j)
    }

    pub fn pieces(&self) -> &SetFamily {
        &self.pieces
    }

    pub(crate) fn shared_pieces(&self) -> Arc<SetFamily> {
        Arc::clone(&self.pieces)
    }

    pub fn colour(&self, j: usize) -> usize {
        self.colour_of[j] as usize
    }

    pub fn parent(&self, j: usize) -> usize {
        self.parent_of[j] as usize
    }

    /// Number of distinct colours actually used.
    pub fn colours_used(&self) -> usize {
        let mut seen: Vec<u32> = self.colour_of.clone();
        seen.sort_unstable();
        seen.dedup();
        seen.len()
    }

    /// The pieces as a plain cover.
    pub fn as_cover(&self) -> Cover {
        Cover::from_family(&self.space, (*self.pieces).clone(), true).expect("pieces cover the space")
    }

    /// Checks every structural invariant against the refined cover.
    pub fn validate(&self, cover: &Cover) -> Result<()> {
        if !super::cover::same_space(&self.space, cover.space()) {
            return Err(Error::AmbientMismatch);
        }
        let n = self.space.len();
        let mut covered = vec![false; n];
        for (j, piece) in self.pieces.iter().enumerate() {
            if piece.is_empty() {
                return Err(Error::Structural(format!("piece {j} is empty")));
            }
            if piece.iter().any(|&c| c as usize >= n) {
                return Err(Error::Structural(format!("piece {j} leaves the space")));
            }
            let parent = self.parent(j);
            if parent >= cover.len() || !is_subset_sorted(piece, cover.element(parent)) {
                return Err(Error::Structural(format!("piece {j} is not inside element {parent}")));
            }
            if self.colour(j) >= self.colours {
                return Err(Error::Structural(format!("piece {j} uses colour {}", self.colour(j))));
            }
            for &c in piece {
                covered[c as usize] = true;
            }
        }
        if let Some(c) = covered.iter().position(|x| !x) {
            return Err(Error::CoveringViolation { cell: c as Cell });
        }
        // Per colour: a cell may be claimed by one piece, and no neighbour of
        // it by another piece of that colour.
        let mut owner = vec![u32::MAX; n];
        for colour in 0..self.colours as u32 {
            owner.iter_mut().for_each(|o| *o = u32::MAX);
            let members: Vec<usize> = (0..self.len()).filter(|&j| self.colour_of[j] == colour).collect();
            for &j in &members {
                for &c in self.piece(j) {
                    if owner[c as usize] != u32::MAX {
                        return Err(Error::Structural(format!(
                            "pieces {} and {j} of colour {colour} overlap",
                            owner[c as usize]
                        )));
                    }
                    owner[c as usize] = j as u32;
                }
            }
            for &j in &members {
                for &c in self.piece(j) {
                    for &nb in self.space.neighbours(c) {
                        let o = owner[nb as usize];
                        if o != u32::MAX && o != j as u32 {
                            return Err(Error::Structural(format!(
                                "pieces {j} and {o} of colour {colour} are adjacent"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Result of [`minimal_coloured_refinement`].
#[derive(Clone, Debug)]
pub struct ColouredOutcome {
    pub count: usize,
    pub refinement: ColouredRefinement,
    pub exact: bool,
    /// The minimal subcover computed alongside, `N(U)`.
    pub subcover: Subcover,
}

impl ColouredOutcome {
    /// `N <= N_c <= colours * N`.
    pub fn within_bounds(&self) -> bool {
        let n = self.subcover.count;
        n <= self.count && self.count <= self.refinement.colours * n
    }
}

/// Minimum number of pieces of a refinement of `cover` using at most
/// `colours` colour classes.
pub fn minimal_coloured_refinement(
    cover: &Cover,
    colours: usize,
    config: &SolverConfig,
) -> Result<ColouredOutcome> {
    if colours == 0 {
        return Err(Error::Invalid("at least one colour is needed".into()));
    }
    let subcover = minimal_subcover(cover, config);
    let space = Arc::clone(cover.space());

    if !space.has_adjacency() {
        // No adjacency: one colour holds the disjointified subcover.
        let refinement = if cover.is_partition() {
            ColouredRefinement {
                space,
                pieces: cover.shared_family(),
                colour_of: vec![0; cover.len()],
                parent_of: (0..cover.len() as u32).collect(),
                colours,
            }
        } else {
            let atoms = Atoms::of(cover);
            let chosen: Vec<Cell> = subcover.chosen.iter().map(|&i| i as Cell).collect();
            let mut groups: Vec<Vec<Cell>> = vec![Vec::new(); chosen.len()];
            let mut common = Vec::new();
            for a in 0..atoms.len() {
                intersect_sorted(atoms.parents(a), &chosen, &mut common);
                let slot = chosen.binary_search(&common[0]).expect("chosen elements cover");
                groups[slot].extend_from_slice(atoms.cells(a));
            }
            let mut pieces = SetFamily::new();
            let mut parent_of = Vec::new();
            for (slot, mut g) in groups.into_iter().enumerate() {
                if g.is_empty() {
                    continue;
                }
                g.sort_unstable();
                pieces.push(g);
                parent_of.push(chosen[slot]);
            }
            ColouredRefinement {
                space,
                colour_of: vec![0; pieces.len()],
                pieces: Arc::new(pieces),
                parent_of,
                colours,
            }
        };
        return Ok(ColouredOutcome {
            count: refinement.len(),
            refinement,
            exact: subcover.exact,
            subcover,
        });
    }

    let ctx = AtomContext::new(cover, config.limit());
    let (assignment, search_exact) = if ctx.len() <= config.limit() {
        let floor = if subcover.exact { subcover.count } else { 0 };
        ColourSearch::run(&ctx, colours, floor)?
    } else {
        match ctx.greedy(colours) {
            Ok(a) => (a, false),
            Err(atom) => {
                return Err(Error::Infeasible { cell: ctx.atoms.cells(atom as usize)[0], colours })
            }
        }
    };
    let (refinement, plans_exact) = ctx.build(&assignment, colours);
    Ok(ColouredOutcome {
        count: refinement.len(),
        refinement,
        exact: search_exact && plans_exact,
        subcover,
    })
}

struct AtomContext<'a> {
    cover: &'a Cover,
    atoms: Atoms,
    adj: Vec<Vec<Cell>>,
    /// Atoms in breadth-first order over atom adjacency.
    order: Vec<Cell>,
    limit: usize,
}

struct ClassPlan {
    components: Vec<Vec<Cell>>,
    parent_of: Vec<Cell>,
    count: usize,
    exact: bool,
}

impl<'a> AtomContext<'a> {
    fn new(cover: &'a Cover, limit: usize) -> Self {
        let atoms = Atoms::of(cover);
        let adj = atoms.adjacency(cover.space());
        let n = atoms.len();
        let mut order = Vec::with_capacity(n);
        let mut seen = vec![false; n];
        for start in 0..n {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut queue = VecDeque::from([start as Cell]);
            while let Some(a) = queue.pop_front() {
                order.push(a);
                for &b in &adj[a as usize] {
                    if !std::mem::replace(&mut seen[b as usize], true) {
                        queue.push_back(b);
                    }
                }
            }
        }
        Self { cover, atoms, adj, order, limit }
    }

    fn len(&self) -> usize {
        self.atoms.len()
    }

    /// Components of a colour class, each with the parents containing it.
    /// `None` when some component fits in no parent.
    fn components(&self, class: &[Cell], mark: &mut [bool]) -> Option<(Vec<Vec<Cell>>, Vec<Vec<Cell>>)> {
        for &a in class {
            mark[a as usize] = true;
        }
        let mut comps = Vec::new();
        let mut parents = Vec::new();
        let mut feasible = true;
        let mut scratch = Vec::new();
        for &start in class {
            if !mark[start as usize] {
                continue;
            }
            mark[start as usize] = false;
            let mut comp = vec![start];
            let mut k = 0;
            while k < comp.len() {
                let a = comp[k] as usize;
                k += 1;
                for &b in &self.adj[a] {
                    if std::mem::replace(&mut mark[b as usize], false) {
                        comp.push(b);
                    }
                }
            }
            let mut common = self.atoms.parents(comp[0] as usize).to_vec();
            for &a in &comp[1..] {
                intersect_sorted(&common, self.atoms.parents(a as usize), &mut scratch);
                std::mem::swap(&mut common, &mut scratch);
                if common.is_empty() {
                    break;
                }
            }
            if common.is_empty() {
                feasible = false;
            }
            comp.sort_unstable();
            comps.push(comp);
            parents.push(common);
        }
        for &a in class {
            mark[a as usize] = false;
        }
        feasible.then_some((comps, parents))
    }

    fn plan(&self, class: &[Cell], mark: &mut [bool]) -> Option<ClassPlan> {
        if class.is_empty() {
            return Some(ClassPlan { components: Vec::new(), parent_of: Vec::new(), count: 0, exact: true });
        }
        let (components, parents) = self.components(class, mark)?;
        let sol = setcover::solve(self.cover.len(), parents.clone(), self.limit)?;
        let parent_of = parents
            .iter()
            .map(|ps| {
                *ps.iter()
                    .find(|p| sol.chosen.binary_search(p).is_ok())
                    .expect("the cover hits every component")
            })
            .collect();
        Some(ClassPlan { components, parent_of, count: sol.chosen.len(), exact: sol.exact })
    }

    /// First-fit colouring in breadth-first order. On failure returns the
    /// atom that fits nowhere.
    fn greedy(&self, colours: usize) -> std::result::Result<Vec<u8>, Cell> {
        let mut assign = vec![u8::MAX; self.len()];
        let mut classes: Vec<Vec<Cell>> = vec![Vec::new(); colours];
        let mut mark = vec![false; self.len()];
        for &a in &self.order {
            let mut placed = false;
            for (c, class) in classes.iter_mut().enumerate() {
                // Only the component that `a` joins can become infeasible.
                let mut comp = vec![a];
                let mut k = 0;
                mark[a as usize] = true;
                while k < comp.len() {
                    let x = comp[k] as usize;
                    k += 1;
                    for &b in &self.adj[x] {
                        if assign[b as usize] == c as u8 && !std::mem::replace(&mut mark[b as usize], true) {
                            comp.push(b);
                        }
                    }
                }
                for &x in &comp {
                    mark[x as usize] = false;
                }
                let mut common = self.atoms.parents(a as usize).to_vec();
                let mut scratch = Vec::new();
                for &x in &comp[1..] {
                    intersect_sorted(&common, self.atoms.parents(x as usize), &mut scratch);
                    std::mem::swap(&mut common, &mut scratch);
                }
                if !common.is_empty() {
                    assign[a as usize] = c as u8;
                    class.push(a);
                    placed = true;
                    break;
                }
            }
            if !placed {
                return Err(a);
            }
        }
        Ok(assign)
    }

    fn build(&self, assignment: &[u8], colours: usize) -> (ColouredRefinement, bool) {
        let mut mark = vec![false; self.len()];
        let mut raw: Vec<(Cell, Vec<Cell>, u32)> = Vec::new();
        let mut exact = true;
        for colour in 0..colours {
            let class: Vec<Cell> =
                (0..self.len() as Cell).filter(|&a| assignment[a as usize] == colour as u8).collect();
            let plan = self.plan(&class, &mut mark).expect("assignment was checked feasible");
            exact &= plan.exact;
            let mut by_parent: Vec<(Cell, Vec<Cell>)> = Vec::new();
            for (comp, &p) in plan.components.iter().zip(&plan.parent_of) {
                let cells = comp.iter().flat_map(|&a| self.atoms.cells(a as usize).iter().copied());
                match by_parent.iter_mut().find(|(q, _)| *q == p) {
                    Some((_, v)) => v.extend(cells),
                    None => by_parent.push((p, cells.collect())),
                }
            }
            for (p, mut cells) in by_parent {
                cells.sort_unstable();
                raw.push((p, cells, colour as u32));
            }
        }
        raw.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.cmp(&b.1)));
        let mut pieces = SetFamily::new();
        let mut colour_of = Vec::new();
        let mut parent_of = Vec::new();
        for (p, cells, c) in raw {
            pieces.push(cells);
            colour_of.push(c);
            parent_of.push(p);
        }
        let r = ColouredRefinement {
            space: Arc::clone(self.cover.space()),
            pieces: Arc::new(pieces),
            colour_of,
            parent_of,
            colours,
        };
        (r, exact)
    }
}

/// Exhaustive search over atom colourings with colour-symmetry breaking.
struct ColourSearch<'c, 'a> {
    ctx: &'c AtomContext<'a>,
    colours: usize,
    memo: HashMap<u64, Option<(usize, bool)>>,
    mark: Vec<bool>,
    best: usize,
    best_assign: Option<Vec<u8>>,
    floor: usize,
    inexact_cost: bool,
    deepest: (usize, Cell),
}

const MEMO_LIMIT: usize = 1 << 21;

impl<'c, 'a> ColourSearch<'c, 'a> {
    fn run(ctx: &'c AtomContext<'a>, colours: usize, floor: usize) -> Result<(Vec<u8>, bool)> {
        let greedy = ctx.greedy(colours).ok();
        let mut s = ColourSearch {
            ctx,
            colours,
            memo: HashMap::new(),
            mark: vec![false; ctx.len()],
            best: usize::MAX,
            best_assign: None,
            floor,
            inexact_cost: false,
            deepest: (0, ctx.order[0]),
        };
        if let Some(g) = &greedy {
            let (r, _) = ctx.build(g, colours);
            s.best = r.len() + 1;
        }
        let mut assign = vec![u8::MAX; ctx.len()];
        let mut masks = vec![0u64; colours];
        let mut costs = vec![0usize; colours];
        s.dfs(0, &mut assign, &mut masks, &mut costs, 0);
        match s.best_assign {
            Some(a) => Ok((a, !s.inexact_cost)),
            None => {
                let atom = s.deepest.1 as usize;
                Err(Error::Infeasible { cell: ctx.atoms.cells(atom)[0], colours })
            }
        }
    }

    fn cost(&mut self, mask: u64) -> Option<(usize, bool)> {
        if let Some(&c) = self.memo.get(&mask) {
            return c;
        }
        let class: Vec<Cell> = (0..64).filter(|b| mask >> b & 1 == 1).collect();
        let r = self.ctx.plan(&class, &mut self.mark).map(|p| (p.count, p.exact));
        if self.memo.len() >= MEMO_LIMIT {
            self.memo.clear();
        }
        self.memo.insert(mask, r);
        r
    }

    /// Returns true once no better colouring can exist.
    fn dfs(&mut self, pos: usize, assign: &mut [u8], masks: &mut [u64], costs: &mut [usize], used: usize) -> bool {
        let total: usize = costs.iter().sum();
        if total >= self.best {
            return false;
        }
        if pos == assign.len() {
            self.best = total;
            self.best_assign = Some(assign.to_vec());
            return total <= self.floor;
        }
        let atom = self.ctx.order[pos];
        let mut placed = false;
        for c in 0..self.colours.min(used + 1) {
            let mask = masks[c] | 1u64 << atom;
            let Some((k, exact)) = self.cost(mask) else { continue };
            self.inexact_cost |= !exact;
            placed = true;
            if total - costs[c] + k >= self.best {
                continue;
            }
            let (old_mask, old_cost) = (masks[c], costs[c]);
            masks[c] = mask;
            costs[c] = k;
            assign[atom as usize] = c as u8;
            let stop = self.dfs(pos + 1, assign, masks, costs, used.max(c + 1));
            masks[c] = old_mask;
            costs[c] = old_cost;
            assign[atom as usize] = u8::MAX;
            if stop {
                return true;
            }
        }
        if !placed && pos >= self.deepest.0 {
            self.deepest = (pos, atom);
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cover(space: CellSpace, sets: &[&[usize]]) -> Cover {
        Cover::new(&Arc::new(space), sets.iter().map(|s| s.iter().copied())).unwrap()
    }

    #[test]
    fn atoms_group_by_membership() {
        let c = cover(CellSpace::discrete(4).unwrap(), &[&[0, 1, 2], &[2, 3], &[0, 1]]);
        let a = Atoms::of(&c);
        assert_eq!(a.len(), 3);
        assert_eq!(a.cells(0), &[0, 1]);
        assert_eq!(a.parents(0), &[0, 2]);
        assert_eq!(a.cells(1), &[2]);
        assert_eq!(a.parents(2), &[1]);
    }

    #[test]
    fn partition_subcover_is_itself() {
        let c = cover(CellSpace::discrete(4).unwrap(), &[&[0, 1], &[2], &[3]]);
        let s = minimal_subcover(&c, &SolverConfig::default());
        assert_eq!(s.count, 3);
        assert!(s.exact);
        assert_eq!(s.witness, c);
    }

    #[test]
    fn redundant_element_dropped() {
        let c = cover(CellSpace::discrete(3).unwrap(), &[&[0, 1, 2], &[1]]);
        let s = minimal_subcover(&c, &SolverConfig::default());
        assert_eq!((s.count, s.chosen.clone()), (1, vec![0]));
    }

    #[test]
    fn discrete_coloured_count_equals_subcover() {
        let c = cover(CellSpace::discrete(4).unwrap(), &[&[0, 1], &[1, 2], &[2, 3], &[0, 3]]);
        let out = minimal_coloured_refinement(&c, 1, &SolverConfig::default()).unwrap();
        assert_eq!(out.count, 2);
        assert!(out.exact);
        out.refinement.validate(&c).unwrap();
    }

    #[test]
    fn path_example() {
        let c = cover(CellSpace::path(4).unwrap(), &[&[0, 1], &[1, 2], &[2, 3]]);
        let out = minimal_coloured_refinement(&c, 2, &SolverConfig::default()).unwrap();
        out.refinement.validate(&c).unwrap();
        assert_eq!(out.subcover.count, 2);
        assert_eq!(out.count, 2);
        assert!(out.within_bounds());
    }

    #[test]
    fn odd_cycle_of_singletons_needs_three_colours() {
        let c = cover(CellSpace::cycle(3).unwrap(), &[&[0], &[1], &[2]]);
        let err = minimal_coloured_refinement(&c, 2, &SolverConfig::default()).unwrap_err();
        assert!(matches!(err, Error::Infeasible { colours: 2, .. }));
        let out = minimal_coloured_refinement(&c, 3, &SolverConfig::default()).unwrap();
        assert_eq!(out.count, 3);
    }

    #[test]
    fn one_colour_on_a_path_merges_components() {
        // Singletons on a path cannot share a colour; with one colour the
        // only option is the single element containing everything.
        let c = cover(CellSpace::path(3).unwrap(), &[&[0, 1, 2], &[0], &[1], &[2]]);
        let out = minimal_coloured_refinement(&c, 1, &SolverConfig::default()).unwrap();
        assert_eq!(out.count, 1);
        assert_eq!(out.refinement.piece(0), &[0, 1, 2]);
    }

    #[test]
    fn validation_catches_adjacent_same_colour() {
        let c = cover(CellSpace::path(2).unwrap(), &[&[0], &[1]]);
        let bad = ColouredRefinement::new(&c, vec![vec![0], vec![1]], vec![0, 0], vec![0, 1], 2);
        assert!(bad.is_err());
        let good = ColouredRefinement::new(&c, vec![vec![0], vec![1]], vec![0, 1], vec![0, 1], 2);
        assert!(good.is_ok());
        let outside = ColouredRefinement::new(&c, vec![vec![0, 1]], vec![0], vec![0], 2);
        assert!(outside.is_err());
    }

    #[test]
    fn greedy_beyond_threshold_is_flagged() {
        let c = cover(CellSpace::path(6).unwrap(), &[&[0, 1, 2], &[2, 3], &[3, 4, 5], &[1, 2, 3, 4]]);
        let out = minimal_coloured_refinement(&c, 2, &SolverConfig { exact_threshold: 2 }).unwrap();
        assert!(!out.exact);
        out.refinement.validate(&c).unwrap();
    }
}
