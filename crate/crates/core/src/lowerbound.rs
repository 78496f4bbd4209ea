//! ℓ1-equivalence constants of finite vector families.
//!
//! For unit vectors `v_1..v_m` the constant is
//! `K = 1 / min { ||Σ c_i v_i|| : Σ |c_i| = 1 }`. The sphere splits into
//! `2^m` orthants, halved by the symmetry `c -> -c`; on each orthant the
//! feasible set is a simplex and the norm is convex.

use minilp::{ComparisonOp, OptimizationDirection, Problem};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::cellspace::CellMap;
use crate::symbolic::{TransferMatrix, WordSpace};
use crate::{Error, Result};

/// Unit-norm tolerance for family members.
pub const NORM_TOL: f64 = 1e-9;
/// Minimum norms below this are treated as linear dependence.
pub const DEPENDENCE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    Sup,
    Operator,
}

#[derive(Clone, Debug, PartialEq)]
enum Vectors {
    /// Functions on cells, all of one length.
    Functions(Vec<Vec<f64>>),
    Matrices(Vec<DMatrix<f64>>),
}

/// A finite family of unit vectors, either functions under the sup norm or
/// square matrices under the operator norm.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorFamily {
    vectors: Vectors,
}

fn spectral_norm(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 0.0;
    }
    m.singular_values().max()
}

impl VectorFamily {
    pub fn functions(vectors: Vec<Vec<f64>>) -> Result<Self> {
        let len = vectors.first().map(Vec::len).ok_or_else(|| Error::Invalid("empty vector family".into()))?;
        if len == 0 || vectors.iter().any(|v| v.len() != len) {
            return Err(Error::Structural("functions must share one nonempty cell space".into()));
        }
        if vectors.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::Invalid("function values must be finite".into()));
        }
        for (index, v) in vectors.iter().enumerate() {
            let norm = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::Normalization { index, norm });
            }
        }
        Ok(Self { vectors: Vectors::Functions(vectors) })
    }

    pub fn matrices(vectors: Vec<DMatrix<f64>>) -> Result<Self> {
        let dim = vectors.first().map(|m| m.nrows()).ok_or_else(|| Error::Invalid("empty vector family".into()))?;
        if dim == 0 || vectors.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
            return Err(Error::Structural("matrices must be square of one nonzero size".into()));
        }
        for (index, m) in vectors.iter().enumerate() {
            let norm = spectral_norm(m);
            if (norm - 1.0).abs() > NORM_TOL {
                return Err(Error::Normalization { index, norm });
            }
        }
        Ok(Self { vectors: Vectors::Matrices(vectors) })
    }

    /// Coordinate functions `v_j(x) = 2 x_j - 1` on `{0,1}^bits`, with bit
    /// `j` of the cell index as coordinate `j`.
    pub fn rademacher(bits: usize) -> Result<Self> {
        if bits == 0 || bits > 25 {
            return Err(Error::SizeCap { size: 1u128 << bits.min(127), cap: 1 << 25 });
        }
        let cells = 1usize << bits;
        Self::functions(
            (0..bits)
                .map(|j| (0..cells).map(|x| if x >> j & 1 == 1 { 1.0 } else { -1.0 }).collect())
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        match &self.vectors {
            Vectors::Functions(v) => v.len(),
            Vectors::Matrices(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn norm_kind(&self) -> NormKind {
        match self.vectors {
            Vectors::Functions(_) => NormKind::Sup,
            Vectors::Matrices(_) => NormKind::Operator,
        }
    }

    pub fn function(&self, i: usize) -> Option<&[f64]> {
        match &self.vectors {
            Vectors::Functions(v) => v.get(i).map(Vec::as_slice),
            Vectors::Matrices(_) => None,
        }
    }

    pub fn matrix(&self, i: usize) -> Option<&DMatrix<f64>> {
        match &self.vectors {
            Vectors::Functions(_) => None,
            Vectors::Matrices(v) => v.get(i),
        }
    }

    /// `||Σ c_i v_i||`.
    pub fn combination_norm(&self, coefficients: &[f64]) -> f64 {
        match &self.vectors {
            Vectors::Functions(v) => (0..v[0].len())
                .map(|x| v.iter().zip(coefficients).map(|(f, c)| c * f[x]).sum::<f64>().abs())
                .fold(0.0, f64::max),
            Vectors::Matrices(v) => {
                let mut sum = DMatrix::zeros(v[0].nrows(), v[0].ncols());
                for (m, &c) in v.iter().zip(coefficients) {
                    sum += m * c;
                }
                spectral_norm(&sum)
            }
        }
    }

    /// Parses `{"vectors": [[...], ...]}`, a list of functions on cells.
    /// Other keys of the document are ignored here.
    pub fn from_json(text: &str) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct Doc {
            vectors: Vec<Vec<f64>>,
        }
        let doc: Doc = serde_json::from_str(text).map_err(|e| Error::Invalid(format!("vector family: {e}")))?;
        Self::functions(doc.vectors)
    }
}

/// The dynamics used to translate a family.
#[derive(Clone, Copy, Debug)]
pub enum Dynamics<'a> {
    /// Precomposition `f -> f ∘ T` on functions.
    Map(&'a CellMap),
    /// `a -> 1 (x) a` on `k^N x k^N` matrices, inside the truncation.
    TensorShift { k: usize },
}

/// `Υ ∪ αΥ ∪ ... ∪ α^{n-1}Υ`, listed block by block.
pub fn shifted_family(base: &VectorFamily, dynamics: Dynamics<'_>, n: usize) -> Result<VectorFamily> {
    if n == 0 {
        return Err(Error::Invalid("need n >= 1 translates".into()));
    }
    match (&base.vectors, dynamics) {
        (Vectors::Functions(fs), Dynamics::Map(map)) => {
            if map.space().len() != fs[0].len() {
                return Err(Error::AmbientMismatch);
            }
            let mut out = fs.clone();
            let mut block = fs.clone();
            for step in 1..n {
                block = block
                    .iter()
                    .map(|f| precompose(f, map, step))
                    .collect::<Result<_>>()?;
                out.extend(block.iter().cloned());
            }
            VectorFamily::functions(out)
        }
        (Vectors::Matrices(ms), Dynamics::TensorShift { k }) => {
            let mut out = ms.clone();
            let mut block = ms.clone();
            for step in 1..n {
                block = block.iter().map(|m| tensor_shift(m, k, step)).collect::<Result<_>>()?;
                out.extend(block.iter().cloned());
            }
            VectorFamily::matrices(out)
        }
        _ => Err(Error::Structural("dynamics do not act on this kind of vector".into())),
    }
}

/// `f ∘ T`, defined only where `f` is constant on every image set.
fn precompose(f: &[f64], map: &CellMap, step: usize) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(f.len());
    for c in 0..f.len() as u32 {
        let mut images = map.images(c);
        let first = images.next().ok_or_else(|| Error::Structural(format!("cell {c} has no image")))?;
        let v = f[first as usize];
        if images.any(|d| f[d as usize] != v) {
            return Err(Error::DepthExhausted { requested: step + 1, depth: step });
        }
        out.push(v);
    }
    Ok(out)
}

/// `a' (x) 1_k -> 1_k (x) a'`; fails when the last tensor factor of `m`
/// is not the identity.
fn tensor_shift(m: &DMatrix<f64>, k: usize, step: usize) -> Result<DMatrix<f64>> {
    let dim = m.nrows();
    if k < 2 || !dim.is_multiple_of(k) {
        return Err(Error::Structural(format!("{dim}x{dim} is not a tensor power of {k}x{k}")));
    }
    let inner = dim / k;
    let head = DMatrix::from_fn(inner, inner, |i, j| m[(i * k, j * k)]);
    if head.kronecker(&DMatrix::identity(k, k)) != *m {
        return Err(Error::DepthExhausted { requested: step + 1, depth: step });
    }
    Ok(DMatrix::<f64>::identity(k, k).kronecker(&head))
}

/// Coordinate functions of the full `2^m`-shift on words of length `depth`:
/// the base family reads the `m` bits of the first symbol and the result is
/// the base together with its `depth - 1` shifts.
pub fn kerr_witness(m: usize, depth: usize) -> Result<VectorFamily> {
    if m == 0 || depth == 0 {
        return Err(Error::Invalid("witness family needs m >= 1 and depth >= 1".into()));
    }
    let bits = m.saturating_mul(depth);
    let cap = crate::symbolic::MAX_WORD_CELLS;
    if bits > 64 || (1u128 << bits) > cap {
        return Err(Error::SizeCap { size: if bits >= 127 { u128::MAX } else { 1u128 << bits }, cap });
    }
    let words = WordSpace::new(&TransferMatrix::full_shift(1 << m)?, depth)?;
    let base = (0..m)
        .map(|j| {
            (0..words.len() as u32)
                .map(|c| if words.word(c)[0] >> j & 1 == 1 { 1.0 } else { -1.0 })
                .collect()
        })
        .collect();
    shifted_family(&VectorFamily::functions(base)?, Dynamics::Map(words.shift_map()), depth)
}

/// Search limits for [`l1_equivalence_constant`].
#[derive(Clone, Debug, PartialEq)]
pub struct L1Config {
    /// Largest family for full orthant enumeration.
    pub cap: usize,
    /// Above the cap, sample orthants instead of refusing.
    pub heuristic: bool,
    /// Restarts per orthant for the operator-norm descent.
    pub restarts: usize,
    pub iterations: usize,
    pub seed: u64,
}

impl Default for L1Config {
    fn default() -> Self {
        Self { cap: 16, heuristic: false, restarts: 64, iterations: 200, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EquivalenceReport {
    /// `1 / minimum`, infinite when the family is dependent.
    pub k: f64,
    pub infinite: bool,
    pub minimum: f64,
    /// A minimiser on the ℓ1 sphere.
    pub coefficients: Vec<f64>,
    /// All orthants searched by an exact method.
    pub exact: bool,
    /// `K^{-2} m`, the lower-bound factor before the universal constant.
    pub kerr_bound_factor: f64,
    /// Bound on the constant for complex coefficients.
    pub complex_k_bound: f64,
}

impl EquivalenceReport {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "K": if self.infinite { None } else { Some(self.k) },
            "infinite": self.infinite,
            "exact": self.exact,
            "coefficients": self.coefficients,
            "kerr_bound_factor": self.kerr_bound_factor,
        })
    }
}

/// Computes the ℓ1-equivalence constant of `family`.
pub fn l1_equivalence_constant(family: &VectorFamily, config: &L1Config) -> Result<EquivalenceReport> {
    let m = family.len();
    let sampled = m > config.cap;
    if sampled && !config.heuristic {
        return Err(Error::CapExceeded { m, cap: config.cap });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let orthants: Vec<u64> = if sampled {
        (0..1u64 << config.cap.min(20)).map(|_| rng.random::<u64>() & mask(m - 1)).collect()
    } else {
        (0..1u64 << (m - 1)).collect()
    };
    let rows = match &family.vectors {
        Vectors::Functions(fs) => Some(cell_rows(fs)),
        Vectors::Matrices(_) => None,
    };

    let mut best = (f64::INFINITY, Vec::new());
    for &orthant in &orthants {
        let signs: Vec<f64> =
            (0..m).map(|i| if i > 0 && orthant >> (i - 1) & 1 == 1 { -1.0 } else { 1.0 }).collect();
        let (value, magnitudes) = match (&rows, &family.vectors) {
            (Some(rows), _) => sup_orthant(rows, &signs)?,
            (None, Vectors::Matrices(ms)) => operator_orthant(ms, &signs, config, &mut rng),
            _ => unreachable!("rows exist exactly for function families"),
        };
        if value < best.0 {
            best = (value, magnitudes.iter().zip(&signs).map(|(c, s)| c * s).collect());
        }
    }
    let (minimum, coefficients) = best;
    let infinite = minimum < DEPENDENCE_TOL;
    let k = if infinite { f64::INFINITY } else { 1.0 / minimum };
    Ok(EquivalenceReport {
        k,
        infinite,
        minimum,
        coefficients,
        exact: !sampled && family.norm_kind() == NormKind::Sup,
        kerr_bound_factor: if infinite { 0.0 } else { m as f64 / (k * k) },
        complex_k_bound: 2.0 * k,
    })
}

fn mask(bits: usize) -> u64 {
    if bits >= 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

/// Distinct value rows `(v_1(x), ..., v_m(x))`, one per cell.
fn cell_rows(fs: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let mut rows: Vec<Vec<f64>> = (0..fs[0].len()).map(|x| fs.iter().map(|f| f[x]).collect()).collect();
    rows.sort_by(|a, b| a.iter().zip(b).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal));
    rows.dedup();
    rows
}

/// Row maximising `|Σ w_i r_i|`, with that value.
fn worst_row(rows: &[Vec<f64>], weights: &[f64]) -> (usize, f64) {
    let mut best = (0, -1.0);
    for (x, r) in rows.iter().enumerate() {
        let g = r.iter().zip(weights).map(|(a, b)| a * b).sum::<f64>().abs();
        if g > best.1 {
            best = (x, g);
        }
    }
    best
}

fn lp_error(e: minilp::Error) -> Error {
    Error::Invalid(format!("linear program failed: {e}"))
}

/// Exact minimum of `max_x |Σ s_i c_i v_i(x)|` over the simplex, by a
/// cutting-plane linear program: cells enter as constraints only when they
/// are the worst at the current optimum.
fn sup_orthant(rows: &[Vec<f64>], signs: &[f64]) -> Result<(f64, Vec<f64>)> {
    let m = signs.len();
    let mut p = Problem::new(OptimizationDirection::Minimize);
    let c: Vec<_> = (0..m).map(|_| p.add_var(0.0, (0.0, 1.0))).collect();
    let t = p.add_var(1.0, (0.0, f64::INFINITY));
    p.add_constraint(c.iter().map(|&v| (v, 1.0)), ComparisonOp::Eq, 1.0);
    let cut = |x: usize, sign: f64| -> Vec<(minilp::Variable, f64)> {
        let mut e: Vec<_> = c.iter().zip(&rows[x]).zip(signs).map(|((&v, a), s)| (v, sign * s * a)).collect();
        e.push((t, -1.0));
        e
    };
    let uniform: Vec<f64> = signs.iter().map(|s| s / m as f64).collect();
    let (x0, _) = worst_row(rows, &uniform);
    p.add_constraint(cut(x0, 1.0), ComparisonOp::Le, 0.0);
    p.add_constraint(cut(x0, -1.0), ComparisonOp::Le, 0.0);
    let mut sol = p.solve().map_err(lp_error)?;
    let mut added = vec![false; rows.len()];
    added[x0] = true;
    loop {
        let mut mags: Vec<f64> = c.iter().map(|&v| sol[v].max(0.0)).collect();
        let total: f64 = mags.iter().sum();
        mags.iter_mut().for_each(|x| *x /= total);
        let weights: Vec<f64> = mags.iter().zip(signs).map(|(a, s)| a * s).collect();
        let (x, value) = worst_row(rows, &weights);
        if added[x] || value <= sol.objective() + 1e-12 * value.max(1.0) {
            return Ok((value, mags));
        }
        added[x] = true;
        sol = sol.add_constraint(cut(x, 1.0), ComparisonOp::Le, 0.0).map_err(lp_error)?;
        sol = sol.add_constraint(cut(x, -1.0), ComparisonOp::Le, 0.0).map_err(lp_error)?;
    }
}

/// Euclidean projection onto the probability simplex.
fn project_simplex(v: &mut [f64]) {
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut acc = 0.0;
    let mut theta = 0.0;
    for (i, &x) in u.iter().enumerate() {
        acc += x;
        let t = (acc - 1.0) / (i + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter_mut().for_each(|x| *x = (*x - theta).max(0.0));
}

/// Projected subgradient descent with restarts; the value is an upper
/// bound on the orthant minimum.
fn operator_orthant(ms: &[DMatrix<f64>], signs: &[f64], config: &L1Config, rng: &mut ChaCha8Rng) -> (f64, Vec<f64>) {
    let m = signs.len();
    let eval = |c: &[f64]| -> (f64, Vec<f64>) {
        let mut sum = DMatrix::zeros(ms[0].nrows(), ms[0].ncols());
        for ((a, &x), s) in ms.iter().zip(c).zip(signs) {
            sum += a * (x * s);
        }
        let svd = sum.svd(true, true);
        let (k, sigma) = svd.singular_values.argmax();
        let u = svd.u.as_ref().expect("requested").column(k).into_owned();
        let vt = svd.v_t.as_ref().expect("requested").row(k).transpose();
        let grad = ms.iter().zip(signs).map(|(a, s)| s * (u.transpose() * a * &vt)[(0, 0)]).collect();
        (sigma, grad)
    };
    let mut best = (f64::INFINITY, vec![1.0 / m as f64; m]);
    for restart in 0..config.restarts.max(1) {
        let mut c: Vec<f64> = if restart == 0 {
            vec![1.0 / m as f64; m]
        } else {
            let e: Vec<f64> = (0..m).map(|_| -rng.random::<f64>().max(1e-300).ln()).collect();
            let s: f64 = e.iter().sum();
            e.into_iter().map(|x| x / s).collect()
        };
        for it in 0..config.iterations {
            let (value, grad) = eval(&c);
            if value < best.0 {
                best = (value, c.clone());
            }
            let step = 0.5 / ((it + 1) as f64).sqrt();
            c.iter_mut().zip(&grad).for_each(|(x, g)| *x -= step * g);
            project_simplex(&mut c);
        }
        let (value, _) = eval(&c);
        if value < best.0 {
            best = (value, c);
        }
    }
    best
}
