//! Growth rates of count sequences and the experiments that produce them.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::Serialize;

use crate::cellspace::{
    minimal_coloured_refinement, minimal_subcover, Bundle, Cover, DynamicalJoins, Permutation, SolverConfig,
};
use crate::cpapprox::{approx_error, build_pou_system, qd_from_decomposable, AuditRow, FunctionSample, TraceVector};
use crate::symbolic::{cylinder_count, power_system, sft_entropy, TransferMatrix, WordSpace};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct GrowthPoint {
    pub n: usize,
    pub count: u128,
    pub exact: bool,
}

/// Why a series stopped before its requested length.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Truncation {
    /// First `n` that could not be computed.
    pub at: usize,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GrowthSeries {
    pub label: String,
    pub mode: String,
    points: Vec<GrowthPoint>,
    pub truncated: Option<Truncation>,
}

impl GrowthSeries {
    pub fn new(label: impl Into<String>, mode: impl Into<String>) -> Self {
        Self { label: label.into(), mode: mode.into(), points: Vec::new(), truncated: None }
    }

    /// Exact counts `count(n)` for `n = 1..`.
    pub fn from_counts(label: impl Into<String>, mode: impl Into<String>, counts: &[u128]) -> Result<Self> {
        let mut s = Self::new(label, mode);
        for (i, &c) in counts.iter().enumerate() {
            s.push(i + 1, c, true)?;
        }
        Ok(s)
    }

    pub fn push(&mut self, n: usize, count: u128, exact: bool) -> Result<()> {
        if n == 0 || count == 0 {
            return Err(Error::Invalid(format!("growth point ({n}, {count}) must be positive")));
        }
        if self.points.last().is_some_and(|p| p.n >= n) {
            return Err(Error::Invalid(format!("n = {n} does not increase the series")));
        }
        self.points.push(GrowthPoint { n, count, exact });
        Ok(())
    }

    pub fn points(&self) -> &[GrowthPoint] {
        &self.points
    }

    pub fn counts(&self) -> Vec<u128> {
        self.points.iter().map(|p| p.count).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn all_exact(&self) -> bool {
        self.points.iter().all(|p| p.exact)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RateMethod {
    /// Largest `(1/n) log count` over the tail window.
    TailMax,
    /// Least-squares slope of `log count` against `n` over the tail window.
    Regression,
}

impl fmt::Display for RateMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RateMethod::TailMax => "tail_max",
            RateMethod::Regression => "regression",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateEstimate {
    pub slope: f64,
    pub method: RateMethod,
    pub tail_window: usize,
    /// Root mean square residual of the fit; zero for the tail max.
    pub residual: f64,
    /// Some count in the series came from a heuristic and only bounds the
    /// minimum from above.
    pub upper_bound_only: bool,
}

/// `max(2, ceil(len / 3))`.
pub fn tail_window(len: usize) -> usize {
    len.div_ceil(3).max(2)
}

/// Finite-horizon proxy for `limsup (1/n) log count(n)`.
pub fn growth_rate(series: &GrowthSeries, method: RateMethod) -> Result<RateEstimate> {
    let pts = series.points();
    if pts.len() < 3 {
        return Err(Error::TooFewPoints { needed: 3, got: pts.len() });
    }
    let window = tail_window(pts.len());
    let tail = &pts[pts.len() - window..];
    let logs: Vec<(f64, f64)> = tail.iter().map(|p| (p.n as f64, (p.count as f64).ln())).collect();
    let (slope, residual) = match method {
        RateMethod::TailMax => (logs.iter().map(|(n, l)| l / n).fold(f64::NEG_INFINITY, f64::max), 0.0),
        RateMethod::Regression => {
            let k = logs.len() as f64;
            let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
            let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
            let sxy: f64 = logs.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
            let sxx: f64 = logs.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
            let slope = sxy / sxx;
            let rss: f64 = logs.iter().map(|(x, y)| (y - my - slope * (x - mx)).powi(2)).sum();
            (slope, (rss / k).sqrt())
        }
    };
    Ok(RateEstimate { slope, method, tail_window: window, residual, upper_bound_only: !series.all_exact() })
}

/// Which count an experiment records at each time `n`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Minimal subcover `N`.
    Plain,
    /// Minimal coloured refinement `N_c`.
    Coloured,
    /// Rank of the partition-of-unity system.
    Cpc,
    /// Rank of the converted quasidiagonal system.
    Qd,
}

impl Mode {
    pub const ALL: [Mode; 4] = [Mode::Plain, Mode::Coloured, Mode::Cpc, Mode::Qd];

    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Plain => "plain",
            Mode::Coloured => "coloured",
            Mode::Cpc => "cpc",
            Mode::Qd => "qd",
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" | "N" => Ok(Mode::Plain),
            "coloured" | "colored" | "Nc" => Ok(Mode::Coloured),
            "cpc" => Ok(Mode::Cpc),
            "qd" => Ok(Mode::Qd),
            _ => Err(Error::Invalid(format!("unknown mode {s:?}"))),
        }
    }
}

/// A dynamical cell model, with the largest `n` its cells resolve.
#[derive(Clone, Debug)]
pub struct Model {
    pub label: String,
    pub bundle: Bundle,
    pub depth: Option<usize>,
}

impl Model {
    pub fn new(label: impl Into<String>, bundle: Bundle) -> Self {
        Self { label: label.into(), bundle, depth: None }
    }

    pub fn from_words(label: impl Into<String>, words: &WordSpace) -> Self {
        Self { label: label.into(), bundle: words.bundle(), depth: Some(words.depth()) }
    }

    pub fn sft(label: impl Into<String>, matrix: &TransferMatrix, depth: usize) -> Result<Self> {
        Ok(Self::from_words(label, &WordSpace::new(matrix, depth)?))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentOptions {
    pub solver: SolverConfig,
    /// Tolerance handed to the quasidiagonal conversion.
    pub epsilon: f64,
    /// Defaults to the uniform trace.
    pub trace: Option<TraceVector>,
}

impl Default for ExperimentOptions {
    fn default() -> Self {
        Self { solver: SolverConfig::default(), epsilon: 0.1, trace: None }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Experiment {
    pub series: GrowthSeries,
    /// One row per `n` for the rank modes, empty otherwise.
    pub audit: Vec<AuditRow>,
}

/// Counts for the time covers `U_0^{n-1}`, `n = 1..=n_max`.
pub fn entropy_experiment(model: &Model, n_max: usize, mode: Mode, opts: &ExperimentOptions) -> Result<GrowthSeries> {
    audited_experiment(model, n_max, mode, opts).map(|e| e.series)
}

/// [`entropy_experiment`] together with the approximation audit of the rank
/// modes. A failure at some `n` ends the series there with a marker.
pub fn audited_experiment(model: &Model, n_max: usize, mode: Mode, opts: &ExperimentOptions) -> Result<Experiment> {
    if n_max == 0 {
        return Err(Error::Invalid("n_max must be at least 1".into()));
    }
    let space = model.bundle.space();
    let trace = match &opts.trace {
        Some(t) if t.mass().len() != space.len() => {
            return Err(Error::Structural("trace and model live on different spaces".into()))
        }
        Some(t) => t.clone(),
        None => TraceVector::uniform(space.len()),
    };
    let mut out = Experiment { series: GrowthSeries::new(&model.label, mode.as_str()), audit: Vec::new() };
    let mut joins = DynamicalJoins::new(&model.bundle.cover, &model.bundle.map);
    let mut functions: Vec<FunctionSample> = Vec::new();
    for n in 1..=n_max {
        if let Some(depth) = model.depth.filter(|&d| n > d) {
            let e = Error::DepthExhausted { requested: n, depth };
            out.series.truncated = Some(Truncation { at: n, reason: e.to_string() });
            break;
        }
        let step = joins.next().expect("the join sequence is infinite").and_then(|cover| {
            if matches!(mode, Mode::Cpc | Mode::Qd) {
                let pulled = joins.pulled();
                functions.extend(pulled.elements().enumerate().map(|(i, set)| {
                    FunctionSample::indicator(format!("T^-{}U[{i}]", n - 1), space.len(), set)
                }));
            }
            count_step(&cover, n, mode, opts, &trace, &functions)
        });
        match step {
            Ok((count, exact, row)) => {
                out.series.push(n, count, exact)?;
                out.audit.extend(row);
            }
            Err(e) => {
                out.series.truncated = Some(Truncation { at: n, reason: e.to_string() });
                break;
            }
        }
    }
    Ok(out)
}

fn count_step(
    cover: &Cover,
    n: usize,
    mode: Mode,
    opts: &ExperimentOptions,
    trace: &TraceVector,
    functions: &[FunctionSample],
) -> Result<(u128, bool, Option<AuditRow>)> {
    let colours = cover.space().colours();
    match mode {
        Mode::Plain => {
            let s = minimal_subcover(cover, &opts.solver);
            Ok((s.count as u128, s.exact, None))
        }
        Mode::Coloured => {
            let o = minimal_coloured_refinement(cover, colours, &opts.solver)?;
            Ok((o.count as u128, o.exact, None))
        }
        Mode::Cpc => {
            let o = minimal_coloured_refinement(cover, colours, &opts.solver)?;
            let system = build_pou_system(&o.refinement);
            system.validate()?;
            let err = approx_error(&system, functions)?;
            let row = AuditRow { n, rank: system.rank() as u128, approx_error: Some(err), mult_defect: None, trace_defect: None };
            Ok((system.rank() as u128, o.exact, Some(row)))
        }
        Mode::Qd => {
            let o = minimal_coloured_refinement(cover, colours, &opts.solver)?;
            let system = build_pou_system(&o.refinement);
            system.validate()?;
            let qd = qd_from_decomposable(&system, trace, functions, opts.epsilon)?;
            let row = AuditRow {
                n,
                rank: qd.rank as u128,
                approx_error: Some(qd.approx_error),
                mult_defect: Some(qd.mult_defect),
                trace_defect: Some(qd.trace_defect),
            };
            Ok((qd.rank as u128, o.exact, Some(row)))
        }
    }
}

/// Exact cylinder counts of an SFT for `n = 1..=n_max`.
pub fn cylinder_series(label: impl Into<String>, matrix: &TransferMatrix, n_max: usize) -> Result<GrowthSeries> {
    let counts = (1..=n_max).map(|n| cylinder_count(matrix, n)).collect::<Result<Vec<_>>>()?;
    GrowthSeries::from_counts(label, "cylinder", &counts)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Holds,
    Violated,
    /// A heuristic count was involved, so nothing is asserted.
    Withheld,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SandwichReport {
    pub label: String,
    pub n: usize,
    pub plain: usize,
    pub coloured: usize,
    pub colours: usize,
    /// `colours * plain`.
    pub bound: usize,
    pub exact: bool,
    pub verdict: Verdict,
}

impl fmt::Display for SandwichReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = match self.verdict {
            Verdict::Holds => "OK",
            Verdict::Violated => "VIOLATED",
            Verdict::Withheld => "WITHHELD",
        };
        write!(f, "N={} Nc={} bound={} {}", self.plain, self.coloured, self.bound, tag)
    }
}

/// Checks `N <= N_c <= (d+1) N` on the time-`n` cover.
pub fn sandwich_verdict(model: &Model, n: usize, solver: &SolverConfig) -> Result<SandwichReport> {
    if n == 0 {
        return Err(Error::Invalid("n must be at least 1".into()));
    }
    if let Some(depth) = model.depth.filter(|&d| n > d) {
        return Err(Error::DepthExhausted { requested: n, depth });
    }
    let cover = DynamicalJoins::new(&model.bundle.cover, &model.bundle.map)
        .nth(n - 1)
        .expect("the join sequence is infinite")?;
    let colours = cover.space().colours();
    let o = minimal_coloured_refinement(&cover, colours, solver)?;
    let exact = o.exact && o.subcover.exact;
    let verdict = if !exact {
        Verdict::Withheld
    } else if o.within_bounds() {
        Verdict::Holds
    } else {
        Verdict::Violated
    };
    Ok(SandwichReport {
        label: model.label.clone(),
        n,
        plain: o.subcover.count,
        coloured: o.count,
        colours,
        bound: colours * o.subcover.count,
        exact,
        verdict,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PermanenceCheck {
    pub law: String,
    pub subject: String,
    pub verdict: Verdict,
    pub deviation: f64,
    pub tolerance: f64,
}

impl PermanenceCheck {
    fn judged(law: &str, subject: String, exact: bool, deviation: f64, tolerance: f64) -> Self {
        let verdict = if !exact {
            Verdict::Withheld
        } else if deviation <= tolerance {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        Self { law: law.into(), subject, verdict, deviation, tolerance }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PermanenceReport {
    pub checks: Vec<PermanenceCheck>,
}

impl PermanenceReport {
    pub fn all_hold(&self) -> bool {
        self.checks.iter().all(|c| c.verdict == Verdict::Holds)
    }
}

/// Parameters of [`permanence_suite`].
#[derive(Clone, Debug, PartialEq)]
pub struct PermanenceConfig {
    /// Powers tested by the power law.
    pub powers: Vec<usize>,
    /// Depth of the cell models compared against exact counts.
    pub model_depth: usize,
    /// Horizon of the exact block-count series used for slopes.
    pub slope_horizon: usize,
    pub solver: SolverConfig,
    /// Permutation seed for the relabelling checks.
    pub seed: u64,
}

impl Default for PermanenceConfig {
    fn default() -> Self {
        Self { powers: vec![2, 3, 4, 5], model_depth: 8, slope_horizon: 40, solver: SolverConfig::default(), seed: 0 }
    }
}

/// A named SFT for the permanence suite.
#[derive(Clone, Debug, PartialEq)]
pub struct SftCase {
    pub label: String,
    pub matrix: TransferMatrix,
}

impl SftCase {
    pub fn new(label: impl Into<String>, matrix: TransferMatrix) -> Self {
        Self { label: label.into(), matrix }
    }
}

fn shuffled(n: usize, seed: u64) -> Permutation {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    let mut image: Vec<usize> = (0..n).collect();
    image.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
    Permutation::new(image).expect("a shuffle is a permutation")
}

fn plain_counts(model: &Model, n_max: usize, solver: &SolverConfig) -> Result<GrowthSeries> {
    let opts = ExperimentOptions { solver: *solver, ..ExperimentOptions::default() };
    let s = entropy_experiment(model, n_max, Mode::Plain, &opts)?;
    match &s.truncated {
        Some(t) => Err(Error::Structural(format!("{}: series stopped at n = {}: {}", model.label, t.at, t.reason))),
        None => Ok(s),
    }
}

/// Power, direct-sum and conjugacy laws on SFT models.
pub fn permanence_suite(cases: &[SftCase], config: &PermanenceConfig) -> Result<PermanenceReport> {
    let mut checks = Vec::new();
    let horizon = config.slope_horizon;

    for case in cases {
        let base = sft_entropy(&case.matrix);
        for &k in &config.powers {
            let power = sft_entropy(&power_system(&case.matrix, k)?);
            let (deviation, exact) = if base.value > 0.0 {
                ((power.value / base.value - k as f64).abs(), base.converged && power.converged)
            } else {
                (power.value.abs(), base.converged && power.converged)
            };
            checks.push(PermanenceCheck::judged("power", format!("{}^{k}", case.label), exact, deviation, 1e-9));
        }

        let depth = config.model_depth;
        let model = Model::sft(&case.label, &case.matrix, depth)?;
        let counts = plain_counts(&model, depth, &config.solver)?;
        let perm = shuffled(case.matrix.alphabet(), config.seed);
        let relabelled = Model::sft(&case.label, &case.matrix.relabel(&perm)?, depth)?;
        let symbol_counts = plain_counts(&relabelled, depth, &config.solver)?;
        let cell_perm = shuffled(model.bundle.space().len(), config.seed ^ 0x9e37_79b9);
        let moved = Model { bundle: model.bundle.relabel(&cell_perm)?, ..model.clone() };
        let cell_counts = plain_counts(&moved, depth, &config.solver)?;
        let deviation = counts
            .counts()
            .iter()
            .zip(symbol_counts.counts())
            .chain(counts.counts().iter().zip(cell_counts.counts()))
            .map(|(a, b)| a.abs_diff(b) as f64)
            .fold(0.0, f64::max);
        let exact = counts.all_exact() && symbol_counts.all_exact() && cell_counts.all_exact();
        checks.push(PermanenceCheck::judged("conjugacy", case.label.clone(), exact, deviation, 0.0));
    }

    for (i, a) in cases.iter().enumerate() {
        for b in &cases[i + 1..] {
            let subject = format!("{} + {}", a.label, b.label);
            // The cell model of the disjoint union must reproduce the exact
            // block counts, which then carry the slope to a longer horizon.
            let depth = config.model_depth;
            let union = Model::sft(&a.label, &a.matrix, depth)?
                .bundle
                .disjoint_union(&Model::sft(&b.label, &b.matrix, depth)?.bundle)?;
            let union = Model { label: subject.clone(), bundle: union, depth: Some(depth) };
            let model_counts = plain_counts(&union, depth, &config.solver)?;
            let sum = a.matrix.direct_sum(&b.matrix);
            let exact_counts = cylinder_series(&subject, &sum, depth)?;
            let mismatch = model_counts
                .counts()
                .iter()
                .zip(exact_counts.counts())
                .map(|(x, y)| x.abs_diff(y) as f64)
                .fold(0.0, f64::max);
            checks.push(PermanenceCheck::judged(
                "union-model",
                subject.clone(),
                model_counts.all_exact(),
                mismatch,
                0.0,
            ));

            let slope = |m: &TransferMatrix| -> Result<f64> {
                Ok(growth_rate(&cylinder_series("", m, horizon)?, RateMethod::TailMax)?.slope)
            };
            let joint = slope(&sum)?;
            let max = slope(&a.matrix)?.max(slope(&b.matrix)?);
            checks.push(PermanenceCheck::judged("direct-sum", subject, true, (joint - max).abs(), 1e-3));
        }
    }
    Ok(PermanenceReport { checks })
}

/// Writes `label,n,count,upper_bound_only,mode` rows; a count from a
/// non-exact solver is only an upper bound.
pub fn write_series_csv<W: Write>(out: W, series: &[&GrowthSeries]) -> Result<()> {
    let io = |e: csv::Error| Error::Invalid(format!("csv output: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["label", "n", "count", "upper_bound_only", "mode"]).map_err(io)?;
    for s in series {
        for p in s.points() {
            w.write_record([s.label.as_str(), &p.n.to_string(), &p.count.to_string(), &(!p.exact).to_string(), &s.mode])
                .map_err(io)?;
        }
    }
    w.flush().map_err(|e| Error::Invalid(format!("csv output: {e}")))?;
    Ok(())
}

/// Writes `n,rank,approx_error,mult_defect,trace_defect` rows; unmeasured
/// fields are left empty.
pub fn write_audit_csv<W: Write>(out: W, rows: &[AuditRow]) -> Result<()> {
    let io = |e: csv::Error| Error::Invalid(format!("csv output: {e}"));
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["n", "rank", "approx_error", "mult_defect", "trace_defect"]).map_err(io)?;
    let opt = |x: Option<f64>| x.map(|v| format!("{v:e}")).unwrap_or_default();
    for r in rows {
        w.write_record([r.n.to_string(), r.rank.to_string(), opt(r.approx_error), opt(r.mult_defect), opt(r.trace_defect)])
            .map_err(io)?;
    }
    w.flush().map_err(|e| Error::Invalid(format!("csv output: {e}")))?;
    Ok(())
}
