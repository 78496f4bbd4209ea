//! Subshifts of finite type: transfer matrices, truncated word spaces and
//! their entropy.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::cellspace::{Bundle, Cell, CellMap, CellSpace, Cover, DynamicalJoins, Permutation, SetFamily};
use crate::{Error, Result};

/// Largest word space [`WordSpace::new`] will materialise.
pub const MAX_WORD_CELLS: u128 = 1 << 25;

/// Square 0/1 matrix with no stranded symbols.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransferMatrix {
    k: usize,
    entries: Vec<u8>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MatrixDoc {
    alphabet: usize,
    matrix: Vec<Vec<u8>>,
}

impl TransferMatrix {
    pub fn new(rows: Vec<Vec<u8>>) -> Result<Self> {
        let k = rows.len();
        if k == 0 {
            return Err(Error::InvalidMatrix("empty alphabet".into()));
        }
        let mut entries = Vec::with_capacity(k * k);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != k {
                return Err(Error::InvalidMatrix(format!("row {i} has {} entries, expected {k}", row.len())));
            }
            if let Some(&v) = row.iter().find(|&&v| v > 1) {
                return Err(Error::InvalidMatrix(format!("row {i} holds {v}; entries must be 0 or 1")));
            }
            if !row.contains(&1) {
                return Err(Error::InvalidMatrix(format!("symbol {i} has no successor")));
            }
            entries.extend(row);
        }
        if let Some(j) = (0..k).find(|&j| (0..k).all(|i| entries[i * k + j] == 0)) {
            return Err(Error::InvalidMatrix(format!("symbol {j} has no predecessor")));
        }
        Ok(Self { k, entries })
    }

    /// The all-ones matrix on `k` symbols.
    pub fn full_shift(k: usize) -> Result<Self> {
        Self::new(vec![vec![1; k]; k])
    }

    /// `[[1, 1], [1, 0]]`: binary words without `11`.
    pub fn golden_mean() -> Self {
        Self::new(vec![vec![1, 1], vec![1, 0]]).expect("valid matrix")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MatrixDoc =
            serde_json::from_str(text).map_err(|e| Error::InvalidMatrix(format!("matrix JSON: {e}")))?;
        if doc.alphabet != doc.matrix.len() {
            return Err(Error::InvalidMatrix(format!(
                "alphabet {} but {} rows",
                doc.alphabet,
                doc.matrix.len()
            )));
        }
        Self::new(doc.matrix)
    }

    pub fn to_json(&self) -> String {
        let doc = MatrixDoc { alphabet: self.k, matrix: self.rows() };
        serde_json::to_string(&doc).expect("matrices serialise")
    }

    /// Plain 0/1 rows separated by commas or whitespace.
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .trim(csv::Trim::All)
            .flexible(true)
            .from_reader(text.as_bytes());
        let mut rows = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record.map_err(|e| Error::InvalidMatrix(format!("CSV: {e}")))?;
            if record.iter().all(str::is_empty) {
                continue;
            }
            let row = record
                .iter()
                .flat_map(|f| f.split_whitespace())
                .map(|v| {
                    v.parse::<u8>()
                        .map_err(|_| Error::InvalidMatrix(format!("line {}: {v:?} is not 0 or 1", line + 1)))
                })
                .collect::<Result<Vec<_>>>()?;
            rows.push(row);
        }
        Self::new(rows)
    }

    pub fn alphabet(&self) -> usize {
        self.k
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> bool {
        self.entries[i * self.k + j] == 1
    }

    pub fn rows(&self) -> Vec<Vec<u8>> {
        self.entries.chunks(self.k).map(<[u8]>::to_vec).collect()
    }

    pub fn successors(&self, i: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.k).filter(move |&j| self.get(i, j))
    }

    pub fn is_permutation(&self) -> bool {
        (0..self.k).all(|i| self.successors(i).count() == 1)
            && (0..self.k).all(|j| (0..self.k).filter(|&i| self.get(i, j)).count() == 1)
    }

    /// Strongly connected components, each sorted, in order of their
    /// smallest symbol.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let k = self.k;
        // Kosaraju: finishing order on the graph, then sweeps on the reverse.
        let mut seen = vec![false; k];
        let mut order = Vec::with_capacity(k);
        for root in 0..k {
            if seen[root] {
                continue;
            }
            seen[root] = true;
            let mut stack = vec![(root, 0usize)];
            while let Some((v, next)) = stack.last_mut() {
                match (*next..k).find(|&w| self.get(*v, w)) {
                    Some(w) => {
                        *next = w + 1;
                        if !seen[w] {
                            seen[w] = true;
                            stack.push((w, 0));
                        }
                    }
                    None => {
                        order.push(*v);
                        stack.pop();
                    }
                }
            }
        }
        let mut comp = vec![usize::MAX; k];
        let mut comps: Vec<Vec<usize>> = Vec::new();
        for &root in order.iter().rev() {
            if comp[root] != usize::MAX {
                continue;
            }
            let id = comps.len();
            comp[root] = id;
            let mut members = vec![root];
            let mut i = 0;
            while i < members.len() {
                let v = members[i];
                i += 1;
                for u in 0..k {
                    if self.get(u, v) && comp[u] == usize::MAX {
                        comp[u] = id;
                        members.push(u);
                    }
                }
            }
            members.sort_unstable();
            comps.push(members);
        }
        comps.sort_unstable_by_key(|c| c[0]);
        comps
    }

    pub fn is_irreducible(&self) -> bool {
        self.components().len() == 1
    }

    /// Block-diagonal sum: the disjoint union of the two subshifts.
    pub fn direct_sum(&self, other: &TransferMatrix) -> TransferMatrix {
        let k = self.k + other.k;
        let mut rows = vec![vec![0u8; k]; k];
        for i in 0..self.k {
            for j in 0..self.k {
                rows[i][j] = self.entries[i * self.k + j];
            }
        }
        for i in 0..other.k {
            for j in 0..other.k {
                rows[self.k + i][self.k + j] = other.entries[i * other.k + j];
            }
        }
        TransferMatrix::new(rows).expect("block sums of valid matrices are valid")
    }

    /// Renames symbol `s` to `perm(s)`.
    pub fn relabel(&self, perm: &Permutation) -> Result<TransferMatrix> {
        if perm.len() != self.k {
            return Err(Error::NotBijective(format!(
                "permutation on {} symbols applied to {}",
                perm.len(),
                self.k
            )));
        }
        let mut rows = vec![vec![0u8; self.k]; self.k];
        for i in 0..self.k {
            for j in 0..self.k {
                rows[perm.apply(i as Cell) as usize][perm.apply(j as Cell) as usize] =
                    self.entries[i * self.k + j];
            }
        }
        TransferMatrix::new(rows)
    }

    fn sub_block(&self, symbols: &[usize]) -> Vec<f64> {
        let m = symbols.len();
        let mut b = vec![0.0; m * m];
        for (a, &i) in symbols.iter().enumerate() {
            for (c, &j) in symbols.iter().enumerate() {
                b[a * m + c] = self.entries[i * self.k + j] as f64;
            }
        }
        b
    }
}

/// Output of [`sft_entropy`].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpectralEntropy {
    /// `log` of the spectral radius.
    pub value: f64,
    pub spectral_radius: f64,
    pub irreducible: bool,
    /// Whether the eigenvalue bracket closed to the requested tolerance.
    pub converged: bool,
}

impl SpectralEntropy {
    /// Set for reducible matrices, whose Perron root may not be simple.
    pub fn warning(&self) -> bool {
        !self.irreducible
    }
}

const SPECTRAL_TOL: f64 = 1e-12;
const SPECTRAL_MAX_ITERS: usize = 200_000;

/// Entropy `log rho(A)` of the subshift.
///
/// Each strongly connected block is handled separately: for an irreducible
/// block `B`, `B + I` is primitive, and power iteration from the all-ones
/// vector squeezes `rho(B) + 1` between the min and max Collatz-Wielandt
/// ratios until they agree to relative tolerance `1e-12`. The spectral
/// radius of a reducible matrix is the maximum over its blocks.
pub fn sft_entropy(matrix: &TransferMatrix) -> SpectralEntropy {
    if matrix.is_permutation() {
        return SpectralEntropy { value: 0.0, spectral_radius: 1.0, irreducible: matrix.is_irreducible(), converged: true };
    }
    let comps = matrix.components();
    let mut rho: f64 = 0.0;
    let mut converged = true;
    for comp in &comps {
        if comp.len() == 1 {
            let s = comp[0];
            rho = rho.max(if matrix.get(s, s) { 1.0 } else { 0.0 });
            continue;
        }
        let (r, ok) = perron_root(&matrix.sub_block(comp), comp.len());
        rho = rho.max(r);
        converged &= ok;
    }
    SpectralEntropy { value: rho.ln(), spectral_radius: rho, irreducible: comps.len() == 1, converged }
}

/// Perron root of an irreducible nonnegative `m x m` matrix.
fn perron_root(a: &[f64], m: usize) -> (f64, bool) {
    let mut x = vec![1.0; m];
    let mut y = vec![0.0; m];
    let mut bracket = (0.0, f64::INFINITY);
    for _ in 0..SPECTRAL_MAX_ITERS {
        for i in 0..m {
            let row = &a[i * m..(i + 1) * m];
            y[i] = x[i] + row.iter().zip(&x).map(|(r, v)| r * v).sum::<f64>();
        }
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        for i in 0..m {
            let q = y[i] / x[i];
            lo = lo.min(q);
            hi = hi.max(q);
        }
        bracket = (lo, hi);
        if hi - lo <= SPECTRAL_TOL * hi {
            return ((lo + hi) / 2.0 - 1.0, true);
        }
        let top = y.iter().copied().fold(0.0, f64::max);
        for i in 0..m {
            x[i] = y[i] / top;
        }
    }
    ((bracket.0 + bracket.1) / 2.0 - 1.0, false)
}

/// Number of admissible words of length `n`: the entry sum of `A^(n-1)`.
pub fn cylinder_count(matrix: &TransferMatrix, n: usize) -> Result<u128> {
    if n == 0 {
        return Err(Error::Invalid("word length must be at least 1".into()));
    }
    let k = matrix.k;
    let mut v = vec![1u128; k];
    for _ in 1..n {
        let mut next = vec![0u128; k];
        for (i, slot) in next.iter_mut().enumerate() {
            for j in matrix.successors(i) {
                *slot = slot.checked_add(v[j]).ok_or(Error::Overflow { n })?;
            }
        }
        v = next;
    }
    v.into_iter()
        .try_fold(0u128, |acc, x| acc.checked_add(x))
        .ok_or(Error::Overflow { n })
}

/// The `k`-block presentation: symbols are the admissible `k`-words in
/// lexicographic order and `u -> v` whenever `last(u) -> first(v)`. This is
/// the transfer matrix of `T^k`, so its entropy is `k` times the original.
pub fn power_system(matrix: &TransferMatrix, k: usize) -> Result<TransferMatrix> {
    if k == 0 {
        return Err(Error::Invalid("power must be at least 1".into()));
    }
    let size = cylinder_count(matrix, k)?;
    if size > 4096 {
        return Err(Error::SizeCap { size, cap: 4096 });
    }
    let mut firsts = Vec::new();
    let mut lasts = Vec::new();
    let mut stack: Vec<Vec<usize>> = (0..matrix.k).rev().map(|s| vec![s]).collect();
    while let Some(w) = stack.pop() {
        if w.len() == k {
            firsts.push(w[0]);
            lasts.push(*w.last().expect("nonempty"));
            continue;
        }
        let last = *w.last().expect("nonempty");
        for t in (0..matrix.k).rev().filter(|&t| matrix.get(last, t)) {
            let mut next = w.clone();
            next.push(t);
            stack.push(next);
        }
    }
    let rows = lasts
        .iter()
        .map(|&l| firsts.iter().map(|&f| matrix.get(l, f) as u8).collect())
        .collect();
    TransferMatrix::new(rows)
}

/// Admissible words of a fixed length as cells of a zero-dimensional space,
/// in lexicographic order, with the shift as a cell relation.
#[derive(Clone, Debug)]
pub struct WordSpace {
    matrix: TransferMatrix,
    depth: usize,
    /// `paths[l][s]`: admissible words of length `l` starting with `s`.
    paths: Vec<Vec<u64>>,
    space: Arc<CellSpace>,
    shift: CellMap,
    cover: Cover,
}

impl WordSpace {
    pub fn new(matrix: &TransferMatrix, depth: usize) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Invalid("word depth must be at least 1".into()));
        }
        let size = cylinder_count(matrix, depth)?;
        if size > MAX_WORD_CELLS {
            return Err(Error::SizeCap { size, cap: MAX_WORD_CELLS });
        }
        let k = matrix.k;
        let mut paths = vec![vec![0u64; k]; depth + 1];
        paths[1] = vec![1; k];
        for l in 2..=depth {
            for s in 0..k {
                paths[l][s] = matrix.successors(s).map(|t| paths[l - 1][t]).sum();
            }
        }
        let space = Arc::new(CellSpace::discrete(size as usize)?);

        let mut firsts = SetFamily::with_capacity(k, size as usize);
        let mut start = 0u64;
        for s in 0..k {
            firsts.push(start as Cell..(start + paths[depth][s]) as Cell);
            start += paths[depth][s];
        }
        let cover = Cover::from_family(&space, firsts, false)?;

        let mut ws = Self {
            matrix: matrix.clone(),
            depth,
            paths,
            cover,
            shift: CellMap::identity(&space),
            space,
        };
        ws.shift = if depth == 1 {
            let images = (0..k).map(|s| matrix.successors(s).collect()).collect();
            CellMap::new(&ws.space, images, false)?
        } else {
            // Every word `w` has the preimage `s w[..depth-1]` for any
            // predecessor `s` of `w[0]`.
            CellMap::from_ranges(&ws.space, ws.shift_ranges(), true)
        };
        Ok(ws)
    }

    /// Image of word `w` is every word starting with `w[1..]`, a contiguous
    /// block in lexicographic order.
    fn shift_ranges(&self) -> Vec<(Cell, Cell)> {
        let k = self.matrix.k;
        let n = self.depth;
        // skip[j][p][s]: words of length `n - j` that start with a symbol
        // below `s` and may follow `p` (row `k` stands for "no predecessor").
        let mut skip = vec![vec![vec![0u64; k + 1]; k + 1]; n];
        for (j, table) in skip.iter_mut().enumerate() {
            for (p, row) in table.iter_mut().enumerate() {
                for s in 0..k {
                    let allowed = p == k || self.matrix.get(p, s);
                    row[s + 1] = row[s] + if allowed { self.paths[n - j][s] } else { 0 };
                }
            }
        }
        let mut out = Vec::with_capacity(self.space.len());
        for s in 0..k {
            self.walk(1, s, k, 0, &skip, &mut out);
        }
        out
    }

    /// `prev` is symbol `i - 1` of the current word, `pred` the symbol before
    /// it (or `k`), and `rank` the partial rank of the shifted word.
    fn walk(&self, i: usize, prev: usize, pred: usize, rank: u64, skip: &[Vec<Vec<u64>>], out: &mut Vec<(Cell, Cell)>) {
        let n = self.depth;
        // `prev` sits at position `i - 1` of the word and `i - 2` of the
        // shifted word.
        let r = match i {
            1 => rank,
            2 => rank + skip[0][self.matrix.k][prev],
            _ => rank + skip[i - 2][pred][prev],
        };
        if i == n {
            let width = self.paths[2][prev];
            out.push((r as Cell, (r + width) as Cell));
            return;
        }
        for s in self.matrix.successors(prev) {
            self.walk(i + 1, s, prev, r, skip, out);
        }
    }

    pub fn matrix(&self) -> &TransferMatrix {
        &self.matrix
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn space(&self) -> &Arc<CellSpace> {
        &self.space
    }

    pub fn shift_map(&self) -> &CellMap {
        &self.shift
    }

    /// Cylinders of the first symbol.
    pub fn first_symbol_cover(&self) -> &Cover {
        &self.cover
    }

    pub fn bundle(&self) -> Bundle {
        Bundle::new(self.cover.clone(), self.shift.clone()).expect("same space")
    }

    /// Lexicographic rank of an admissible word of length `depth`.
    pub fn rank(&self, word: &[usize]) -> Option<Cell> {
        if word.len() != self.depth || word.iter().any(|&s| s >= self.matrix.k) {
            return None;
        }
        let mut r = 0u64;
        for (i, &s) in word.iter().enumerate() {
            if i > 0 && !self.matrix.get(word[i - 1], s) {
                return None;
            }
            r += (0..s)
                .filter(|&t| i == 0 || self.matrix.get(word[i - 1], t))
                .map(|t| self.paths[self.depth - i][t])
                .sum::<u64>();
        }
        Some(r as Cell)
    }

    /// The word at cell `c`.
    pub fn word(&self, c: Cell) -> Vec<usize> {
        let mut rest = c as u64;
        let mut word = Vec::with_capacity(self.depth);
        for i in 0..self.depth {
            let len = self.depth - i;
            let mut chosen = None;
            for t in 0..self.matrix.k {
                if i > 0 && !self.matrix.get(word[i - 1], t) {
                    continue;
                }
                if rest < self.paths[len][t] {
                    chosen = Some(t);
                    break;
                }
                rest -= self.paths[len][t];
            }
            word.push(chosen.expect("cell index within range"));
        }
        word
    }

    /// `U_0^{n-1}` for the first-symbol cover; exact only up to the depth.
    pub fn time_cover(&self, n: usize) -> Result<Cover> {
        self.time_covers(n).last().expect("n >= 1 yields a cover")
    }

    /// Successive time covers for `n = 1..=n_max`. Fails at the first
    /// `n > depth`.
    pub fn time_covers(&self, n_max: usize) -> impl Iterator<Item = Result<Cover>> + '_ {
        let depth = self.depth;
        DynamicalJoins::new(&self.cover, &self.shift)
            .take(n_max.min(depth))
            .chain((depth < n_max).then_some(Err(Error::DepthExhausted { requested: depth + 1, depth })))
            .take(n_max.max(1))
    }
}

/// `(space, first-symbol cover, shift)` at the given depth.
pub fn cylinder_cover(matrix: &TransferMatrix, depth: usize) -> Result<(Arc<CellSpace>, Cover, CellMap)> {
    let ws = WordSpace::new(matrix, depth)?;
    Ok((Arc::clone(&ws.space), ws.cover.clone(), ws.shift.clone()))
}
