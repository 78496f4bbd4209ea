//! Finite completely positive approximation systems on cell models.
//!
//! A coloured refinement gives a commutative system: the finite-dimensional
//! algebra is `C^rank` (one block of size 1 per piece), the downward map
//! evaluates a function at one sample point per piece and the upward map
//! spreads those values back with a partition of unity subordinate to the
//! pieces. The quasidiagonal conversion keeps the same data and replaces the
//! upward map by a trace on the finite-dimensional side.

use std::sync::Arc;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::cellspace::{Cell, CellSpace, ColouredRefinement, SetFamily};
use crate::{Error, Result};

/// Tolerance for partition-of-unity and probability-vector checks.
pub const SUM_TOL: f64 = 1e-12;

/// A partition-of-unity system built from a coloured refinement.
#[derive(Clone, Debug)]
pub struct CpcSystem {
    space: Arc<CellSpace>,
    pieces: Arc<SetFamily>,
    /// `h[j][c]` for the cells `c` of piece `j`, aligned with `pieces`.
    weights: Vec<f64>,
    offsets: Vec<usize>,
    sample_points: Vec<Cell>,
    colour_of: Vec<u32>,
}

impl CpcSystem {
    pub fn space(&self) -> &Arc<CellSpace> {
        &self.space
    }

    /// Number of pieces, the dimension of the commutative algebra `F`.
    pub fn rank(&self) -> usize {
        self.pieces.len()
    }

    /// Block sizes of `F`; every block of the commutative model is `1 x 1`.
    pub fn blocks(&self) -> Vec<usize> {
        vec![1; self.rank()]
    }

    pub fn sample_points(&self) -> &[Cell] {
        &self.sample_points
    }

    pub fn colour(&self, j: usize) -> usize {
        self.colour_of[j] as usize
    }

    pub fn support(&self, j: usize) -> &[Cell] {
        self.pieces.get(j)
    }

    /// `(cell, weight)` pairs of row `j`.
    pub fn row(&self, j: usize) -> impl Iterator<Item = (Cell, f64)> + '_ {
        self.support(j).iter().copied().zip(self.weights[self.offsets[j]..self.offsets[j + 1]].iter().copied())
    }

    /// `h[j][c]`, zero off the support.
    pub fn weight(&self, j: usize, c: Cell) -> f64 {
        match self.support(j).binary_search(&c) {
            Ok(i) => self.weights[self.offsets[j] + i],
            Err(_) => 0.0,
        }
    }

    /// Dense row-major weight matrix, `rank x cells`.
    pub fn dense_weights(&self) -> Vec<Vec<f64>> {
        (0..self.rank())
            .map(|j| {
                let mut row = vec![0.0; self.space.len()];
                for (c, w) in self.row(j) {
                    row[c as usize] = w;
                }
                row
            })
            .collect()
    }

    /// Checks the partition of unity, subordination, sample points and the
    /// orthogonality of same-colour rows.
    pub fn validate(&self) -> Result<()> {
        let n = self.space.len();
        let mut sums = vec![0.0; n];
        for j in 0..self.rank() {
            if self.support(j).binary_search(&self.sample_points[j]).is_err() {
                return Err(Error::Structural(format!("sample point of piece {j} lies outside it")));
            }
            for (c, w) in self.row(j) {
                if !(w >= 0.0) {
                    return Err(Error::Structural(format!("negative weight h[{j}][{c}]")));
                }
                sums[c as usize] += w;
            }
        }
        if let Some(c) = sums.iter().position(|s| (s - 1.0).abs() > SUM_TOL) {
            return Err(Error::Structural(format!("weights at cell {c} sum to {}", sums[c])));
        }
        let mut owner = vec![u32::MAX; n];
        let colours = self.colour_of.iter().copied().max().map_or(0, |m| m + 1);
        for colour in 0..colours {
            owner.iter_mut().for_each(|o| *o = u32::MAX);
            let rows: Vec<usize> = (0..self.rank()).filter(|&j| self.colour_of[j] == colour).collect();
            for &j in &rows {
                for (c, w) in self.row(j) {
                    if w > 0.0 {
                        if owner[c as usize] != u32::MAX {
                            return Err(Error::Structural(format!("colour {colour} rows overlap at cell {c}")));
                        }
                        owner[c as usize] = j as u32;
                    }
                }
            }
            for &j in &rows {
                for &c in self.support(j) {
                    if self.space.neighbours(c).iter().any(|&d| owner[d as usize] != u32::MAX && owner[d as usize] != j as u32) {
                        return Err(Error::Structural(format!("colour {colour} rows touch near cell {c}")));
                    }
                }
            }
        }
        Ok(())
    }

    /// `phi(psi(f))`: sample `f` at the sample points and spread back.
    pub fn reconstruct(&self, f: &FunctionSample) -> Vec<f64> {
        let mut out = vec![0.0; self.space.len()];
        for j in 0..self.rank() {
            let v = f.values[self.sample_points[j] as usize];
            for (c, w) in self.row(j) {
                out[c as usize] += v * w;
            }
        }
        out
    }

    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "rank": self.rank(),
            "blocks": self.blocks(),
            "sample_points": self.sample_points,
            "colour_of": self.colour_of,
            "weights": self.dense_weights(),
        })
    }
}

/// Lemma-5.2 style system: sample point is the least cell of each piece and
/// `h[j][c] = 1 / #{pieces containing c}` on piece `j`.
pub fn build_pou_system(refinement: &ColouredRefinement) -> CpcSystem {
    let space = Arc::clone(refinement.space());
    let pieces = refinement.shared_pieces();
    let mut multiplicity = vec![0u32; space.len()];
    for piece in pieces.iter() {
        for &c in piece {
            multiplicity[c as usize] += 1;
        }
    }
    let mut weights = Vec::with_capacity(pieces.total_members());
    let mut offsets = Vec::with_capacity(pieces.len() + 1);
    offsets.push(0);
    for piece in pieces.iter() {
        weights.extend(piece.iter().map(|&c| 1.0 / multiplicity[c as usize] as f64));
        offsets.push(weights.len());
    }
    let sample_points = pieces.iter().map(|p| p[0]).collect();
    let colour_of = (0..pieces.len()).map(|j| refinement.colour(j) as u32).collect();
    CpcSystem { space, pieces, weights, offsets, sample_points, colour_of }
}

/// A real function on cells.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FunctionSample {
    pub name: String,
    pub values: Vec<f64>,
}

impl FunctionSample {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Invalid(format!("function value at cell {i} is not finite")));
        }
        Ok(Self { name: name.into(), values })
    }

    pub fn constant(cells: usize, v: f64) -> Self {
        Self { name: format!("const {v}"), values: vec![v; cells] }
    }

    /// Indicator of a set of cells.
    pub fn indicator(name: impl Into<String>, cells: usize, set: &[Cell]) -> Self {
        let mut values = vec![0.0; cells];
        for &c in set {
            values[c as usize] = 1.0;
        }
        Self { name: name.into(), values }
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn product(&self, other: &FunctionSample) -> FunctionSample {
        FunctionSample {
            name: format!("{}*{}", self.name, other.name),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect(),
        }
    }
}

fn check_len(system: &CpcSystem, f: &FunctionSample) -> Result<()> {
    if f.values.len() != system.space.len() {
        return Err(Error::Structural(format!(
            "function {:?} has {} values on a {}-cell space",
            f.name,
            f.values.len(),
            system.space.len()
        )));
    }
    Ok(())
}

/// `max_f sup_c |f(c) - phi(psi(f))(c)|`.
pub fn approx_error(system: &CpcSystem, functions: &[FunctionSample]) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for f in functions {
        check_len(system, f)?;
        let back = system.reconstruct(f);
        for (a, b) in f.values.iter().zip(&back) {
            worst = worst.max((a - b).abs());
        }
    }
    Ok(worst)
}

/// A probability vector on cells.
#[derive(Clone, Debug, PartialEq)]
pub struct TraceVector {
    mass: Vec<f64>,
}

impl TraceVector {
    pub fn new(mass: Vec<f64>) -> Result<Self> {
        if mass.is_empty() {
            return Err(Error::Invalid("a trace needs at least one cell".into()));
        }
        if let Some(i) = mass.iter().position(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(Error::Invalid(format!("trace mass at cell {i} is negative or not finite")));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > SUM_TOL {
            return Err(Error::Invalid(format!("trace masses sum to {total}")));
        }
        Ok(Self { mass })
    }

    pub fn uniform(cells: usize) -> Self {
        Self { mass: vec![1.0 / cells as f64; cells] }
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn eval(&self, f: &FunctionSample) -> f64 {
        self.mass.iter().zip(&f.values).map(|(m, v)| m * v).sum()
    }
}

/// Quasidiagonal data extracted from a [`CpcSystem`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct QdSystem {
    pub rank: usize,
    /// `sigma / |sigma|`, a probability vector over pieces.
    pub trace_on_f: Vec<f64>,
    pub mult_defect: f64,
    pub trace_defect: f64,
    /// Measured `approx_error` on the audited functions and the unit.
    pub approx_error: f64,
    pub epsilon: f64,
    /// `2 epsilon / (3 - epsilon)`.
    pub trace_bound: f64,
}

/// Converts a decomposable system into a quasidiagonal one of the same rank.
///
/// Refuses unless the system reproduces `functions` and the constant `1`
/// to within `epsilon / 3`. The downward map is evaluation at the sample
/// points and the trace on `F` is the pushed-forward trace `sigma` normalised.
pub fn qd_from_decomposable(
    system: &CpcSystem,
    trace: &TraceVector,
    functions: &[FunctionSample],
    epsilon: f64,
) -> Result<QdSystem> {
    if !(epsilon > 0.0 && epsilon < 3.0) {
        return Err(Error::Invalid(format!("epsilon {epsilon} must lie in (0, 3)")));
    }
    if trace.mass.len() != system.space.len() {
        return Err(Error::Structural("trace and system live on different spaces".into()));
    }
    let mut audited = functions.to_vec();
    audited.push(FunctionSample::constant(system.space.len(), 1.0));
    let measured = approx_error(system, &audited)?;
    if measured > epsilon / 3.0 {
        return Err(Error::Precondition { measured, allowed: epsilon / 3.0 });
    }

    let sigma: Vec<f64> = (0..system.rank())
        .map(|j| system.row(j).map(|(c, w)| trace.mass[c as usize] * w).sum())
        .collect();
    let norm: f64 = sigma.iter().sum();
    let trace_on_f: Vec<f64> = sigma.iter().map(|s| s / norm).collect();

    let psi = |f: &FunctionSample| -> Vec<f64> {
        system.sample_points.iter().map(|&x| f.values[x as usize]).collect()
    };
    let images: Vec<Vec<f64>> = audited.iter().map(psi).collect();

    let mut trace_defect: f64 = 0.0;
    for (f, img) in audited.iter().zip(&images) {
        let on_f: f64 = trace_on_f.iter().zip(img).map(|(t, v)| t * v).sum();
        trace_defect = trace_defect.max((trace.eval(f) - on_f).abs());
    }
    let mut mult_defect: f64 = 0.0;
    for (a, fa) in audited.iter().zip(&images) {
        for (b, fb) in audited.iter().zip(&images) {
            let prod = psi(&a.product(b));
            for ((p, x), y) in prod.iter().zip(fa).zip(fb) {
                mult_defect = mult_defect.max((p - x * y).abs());
            }
        }
    }
    Ok(QdSystem {
        rank: system.rank(),
        trace_on_f,
        mult_defect,
        trace_defect,
        approx_error: measured,
        epsilon,
        trace_bound: 2.0 * epsilon / (3.0 - epsilon),
    })
}

/// Block-diagonal sum of systems over two (necessarily disjoint) cell
/// spaces. The cells of `b` are shifted past those of `a`.
pub fn direct_sum_systems(a: &CpcSystem, b: &CpcSystem) -> Result<CpcSystem> {
    let space = Arc::new(a.space.disjoint_union(&b.space)?);
    let shift = a.space.len() as Cell;
    let mut pieces = SetFamily::with_capacity(a.rank() + b.rank(), a.pieces.total_members() + b.pieces.total_members());
    for p in a.pieces.iter() {
        pieces.push_slice(p);
    }
    for p in b.pieces.iter() {
        pieces.push(p.iter().map(|&c| c + shift));
    }
    let mut weights = a.weights.clone();
    weights.extend_from_slice(&b.weights);
    let base = a.weights.len();
    let mut offsets = a.offsets.clone();
    offsets.extend(b.offsets[1..].iter().map(|o| o + base));
    let mut sample_points = a.sample_points.clone();
    sample_points.extend(b.sample_points.iter().map(|&x| x + shift));
    let mut colour_of = a.colour_of.clone();
    colour_of.extend_from_slice(&b.colour_of);
    Ok(CpcSystem { space, pieces: Arc::new(pieces), weights, offsets, sample_points, colour_of })
}

/// One audit line of a rank experiment.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AuditRow {
    pub n: usize,
    pub rank: u128,
    /// Empty where the quantity is not measured by the experiment.
    pub approx_error: Option<f64>,
    pub mult_defect: Option<f64>,
    pub trace_defect: Option<f64>,
}

/// An elementary tensor `a_1 (x) a_2 (x) ... (x) a_m (x) 1 (x) 1 ...` in the
/// infinite tensor power of `M_k`.
#[derive(Clone, Debug, PartialEq)]
pub struct TensorWord {
    factors: Vec<DMatrix<f64>>,
}

impl TensorWord {
    pub fn new(factors: Vec<DMatrix<f64>>) -> Result<Self> {
        if let Some(k) = factors.first().map(|f| f.nrows()) {
            if factors.iter().any(|f| f.nrows() != k || f.ncols() != k) {
                return Err(Error::Structural("tensor factors must be square of one size".into()));
            }
        }
        Ok(Self { factors })
    }

    pub fn identity() -> Self {
        Self { factors: Vec::new() }
    }

    /// Number of leading factors that are written out.
    pub fn degree(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[DMatrix<f64>] {
        &self.factors
    }

    /// The one-sided shift `a -> 1 (x) a`.
    pub fn shifted(&self, k: usize) -> Self {
        let mut factors = vec![DMatrix::identity(k, k)];
        factors.extend(self.factors.iter().cloned());
        Self { factors }
    }

    /// Factorwise product, padding the shorter word with identities.
    pub fn mul(&self, other: &TensorWord, k: usize) -> TensorWord {
        let m = self.degree().max(other.degree());
        let id = DMatrix::identity(k, k);
        let factors = (0..m)
            .map(|i| self.factors.get(i).unwrap_or(&id) * other.factors.get(i).unwrap_or(&id))
            .collect();
        TensorWord { factors }
    }

    /// Normalised trace on the infinite tensor product.
    pub fn trace(&self) -> f64 {
        self.factors.iter().map(|f| f.trace() / f.nrows() as f64).product()
    }

    /// `a_1 (x) ... (x) a_m (x) 1_{k^(n-m)}` as a `k^n x k^n` matrix.
    pub fn truncate(&self, k: usize, n: usize) -> Result<DMatrix<f64>> {
        if self.degree() > n {
            return Err(Error::TruncationInvalid { degree: self.degree(), n });
        }
        let mut out = DMatrix::identity(1, 1);
        for f in &self.factors {
            out = out.kronecker(f);
        }
        let rest = k.pow((n - self.degree()) as u32);
        Ok(out.kronecker(&DMatrix::<f64>::identity(rest, rest)))
    }
}

/// `count` elementary tensors with entries uniform in `[-1, 1]`, degrees
/// drawn from `1..=max_degree`.
pub fn random_tensor_words(k: usize, max_degree: usize, count: usize, seed: u64) -> Vec<TensorWord> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let degree = rng.random_range(1..=max_degree.max(1));
            let factors = (0..degree).map(|_| DMatrix::from_fn(k, k, |_, _| rng.random_range(-1.0..=1.0))).collect();
            TensorWord { factors }
        })
        .collect()
}

/// Largest singular value by power iteration on `M^T M`.
pub fn operator_norm(m: &DMatrix<f64>) -> f64 {
    if m.iter().all(|&x| x == 0.0) {
        return 0.0;
    }
    let mtm = m.transpose() * m;
    let dim = mtm.ncols();
    // A start vector with no symmetry, so it meets the top eigenspace.
    let mut v = nalgebra::DVector::from_fn(dim, |i, _| 1.0 + (i as f64 + 1.0).sqrt().fract());
    v /= v.norm();
    let mut lambda = 0.0;
    for _ in 0..10_000 {
        let w = &mtm * &v;
        let next = w.norm();
        if next == 0.0 {
            return 0.0;
        }
        v = w / next;
        if (next - lambda).abs() <= 1e-10 * next {
            lambda = next;
            break;
        }
        lambda = next;
    }
    lambda.sqrt()
}

/// Audit of the truncation model of the one-sided matrix shift.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MatrixShiftReport {
    pub k: usize,
    pub n: usize,
    pub rank: u128,
    pub mult_defect: f64,
    pub trace_defect: f64,
}

impl MatrixShiftReport {
    pub fn audit_row(&self) -> AuditRow {
        AuditRow {
            n: self.n,
            rank: self.rank,
            approx_error: None,
            mult_defect: Some(self.mult_defect),
            trace_defect: Some(self.trace_defect),
        }
    }
}

const MAX_TRUNCATION_DIM: u128 = 1024;

/// The downward map `psi_n` truncates to the first `n` tensor factors, a
/// `k^n x k^n` matrix algebra. Defects are measured over all ordered pairs
/// of `operands` together with the unit.
pub fn matrix_shift_qd(k: usize, n: usize, operands: &[TensorWord]) -> Result<MatrixShiftReport> {
    if k < 2 || n == 0 {
        return Err(Error::Invalid(format!("need k >= 2 and n >= 1, got k = {k}, n = {n}")));
    }
    let rank = (k as u128).checked_pow(n as u32).ok_or(Error::Overflow { n })?;
    if rank > MAX_TRUNCATION_DIM {
        return Err(Error::SizeCap { size: rank, cap: MAX_TRUNCATION_DIM });
    }
    if let Some(w) = operands.iter().find(|w| w.degree() > n) {
        return Err(Error::TruncationInvalid { degree: w.degree(), n });
    }
    if let Some(w) = operands.iter().find(|w| w.factors.first().is_some_and(|f| f.nrows() != k)) {
        return Err(Error::Structural(format!("operand factors are {0}x{0}, expected {k}x{k}", w.factors[0].nrows())));
    }
    let mut audited = operands.to_vec();
    audited.push(TensorWord::identity());
    let images = audited.iter().map(|w| w.truncate(k, n)).collect::<Result<Vec<_>>>()?;
    let dim = rank as f64;
    let mut trace_defect: f64 = 0.0;
    for (w, m) in audited.iter().zip(&images) {
        trace_defect = trace_defect.max((w.trace() - m.trace() / dim).abs());
    }
    let mut mult_defect: f64 = 0.0;
    for (a, ma) in audited.iter().zip(&images) {
        for (b, mb) in audited.iter().zip(&images) {
            let joint = a.mul(b, k).truncate(k, n)?;
            mult_defect = mult_defect.max(operator_norm(&(joint - ma * mb)));
        }
    }
    Ok(MatrixShiftReport { k, n, rank, mult_defect, trace_defect })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cellspace::{minimal_coloured_refinement, Cover, SolverConfig};

    fn refinement(space: CellSpace, sets: &[&[usize]]) -> ColouredRefinement {
        let space = Arc::new(space);
        let colours = space.colours();
        let cover = Cover::new(&space, sets.iter().map(|s| s.iter().copied())).unwrap();
        minimal_coloured_refinement(&cover, colours, &SolverConfig::default()).unwrap().refinement
    }

    #[test]
    fn partition_gives_indicators() {
        let sys = build_pou_system(&refinement(CellSpace::discrete(4).unwrap(), &[&[0, 1], &[2, 3]]));
        sys.validate().unwrap();
        assert_eq!(sys.dense_weights(), vec![vec![1.0, 1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0, 1.0]]);
        assert_eq!(sys.sample_points(), &[0, 2]);
        assert_eq!(sys.blocks(), vec![1, 1]);
    }

    #[test]
    fn trivial_cover_gives_unit_weights() {
        let sys = build_pou_system(&refinement(CellSpace::path(5).unwrap(), &[&[0, 1, 2, 3, 4]]));
        assert_eq!(sys.rank(), 1);
        assert!(sys.dense_weights()[0].iter().all(|&w| w == 1.0));
    }

    #[test]
    fn overlapping_refinement_splits_weights() {
        let space = Arc::new(CellSpace::discrete(3).unwrap());
        let cover = Cover::new(&space, [vec![0usize, 1], vec![1, 2]]).unwrap();
        let r = ColouredRefinement::new(&cover, vec![vec![0, 1], vec![1, 2]], vec![0, 0], vec![0, 1], 1);
        // Overlapping pieces of one colour are not a valid refinement.
        assert!(r.is_err());
        let r = ColouredRefinement::new(&cover, vec![vec![0, 1], vec![1, 2]], vec![0, 1], vec![0, 1], 2).unwrap();
        let sys = build_pou_system(&r);
        sys.validate().unwrap();
        assert_eq!(sys.weight(0, 1), 0.5);
        assert_eq!(sys.weight(1, 0), 0.0);
    }

    #[test]
    fn approx_error_of_constants_and_step_functions() {
        let sys = build_pou_system(&refinement(CellSpace::path(6).unwrap(), &[&[0, 1, 2], &[3, 4, 5]]));
        let one = FunctionSample::constant(6, 1.0);
        assert_eq!(approx_error(&sys, &[one]).unwrap(), 0.0);
        let step = FunctionSample::new("step", vec![2.0, 2.0, 2.0, -1.0, -1.0, -1.0]).unwrap();
        assert_eq!(approx_error(&sys, &[step]).unwrap(), 0.0);
        let ramp = FunctionSample::new("ramp", (0..6).map(f64::from).collect()).unwrap();
        assert_eq!(approx_error(&sys, &[ramp]).unwrap(), 2.0);
    }

    #[test]
    fn qd_conversion_examples() {
        let sys = build_pou_system(&refinement(CellSpace::discrete(4).unwrap(), &[&[0, 1], &[2, 3]]));
        let qd = qd_from_decomposable(&sys, &TraceVector::uniform(4), &[], 0.1).unwrap();
        assert_eq!(qd.rank, 2);
        assert_eq!(qd.trace_defect, 0.0);
        assert_eq!(qd.mult_defect, 0.0);
        assert_eq!(qd.trace_on_f, vec![0.5, 0.5]);
        let ramp = FunctionSample::new("ramp", vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert!(matches!(
            qd_from_decomposable(&sys, &TraceVector::uniform(4), &[ramp], 0.1),
            Err(Error::Precondition { .. })
        ));
    }

    #[test]
    fn trace_vector_validation() {
        assert!(TraceVector::new(vec![0.5, 0.4]).is_err());
        assert!(TraceVector::new(vec![1.5, -0.5]).is_err());
        assert!(TraceVector::new(vec![0.25; 4]).is_ok());
    }

    #[test]
    fn direct_sum_adds_ranks() {
        let a = build_pou_system(&refinement(CellSpace::discrete(2).unwrap(), &[&[0, 1]]));
        let s = direct_sum_systems(&a, &a).unwrap();
        assert_eq!(s.rank(), 2);
        assert_eq!(s.sample_points(), &[0, 2]);
        s.validate().unwrap();
    }

    #[test]
    fn truncation_identity_and_degree() {
        let r = matrix_shift_qd(2, 3, &[TensorWord::identity()]).unwrap();
        assert_eq!((r.rank, r.mult_defect, r.trace_defect), (8, 0.0, 0.0));
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let w = TensorWord::new(vec![x.clone(), x.clone(), x]).unwrap();
        assert!(matches!(matrix_shift_qd(2, 2, &[w]), Err(Error::TruncationInvalid { degree: 3, n: 2 })));
    }

    #[test]
    fn operator_norm_of_known_matrices() {
        let m = DMatrix::from_row_slice(2, 2, &[3.0, 0.0, 0.0, -4.0]);
        assert!((operator_norm(&m) - 4.0).abs() < 1e-9);
        let r = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 0.0]);
        assert!((operator_norm(&r) - 2f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn shifted_word_moves_right() {
        let x = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let w = TensorWord::new(vec![x.clone()]).unwrap();
        let s = w.shifted(2);
        assert_eq!(s.degree(), 2);
        assert_eq!(s.truncate(2, 2).unwrap(), DMatrix::<f64>::identity(2, 2).kronecker(&x));
    }
}
