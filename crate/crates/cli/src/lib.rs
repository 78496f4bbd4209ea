//! Config-driven runner for the `entropy` binary.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;
use serde_json::{json, Value};

use coloured_entropy::cellspace::{Bundle, SolverConfig};
use coloured_entropy::cpapprox::{matrix_shift_qd, random_tensor_words, AuditRow};
use coloured_entropy::estimator::{
    audited_experiment, growth_rate, permanence_suite, sandwich_verdict, write_audit_csv, write_series_csv,
    ExperimentOptions, GrowthSeries, Mode, Model, PermanenceConfig, RateMethod, SftCase, Verdict,
};
use coloured_entropy::lowerbound::{kerr_witness, l1_equivalence_constant, L1Config, VectorFamily};
use coloured_entropy::symbolic::{sft_entropy, TransferMatrix};

#[derive(Debug, Parser)]
#[command(name = "entropy", version, about = "Entropy experiments on finite cell models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub flags: Flags,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Count experiment on a shift of finite type.
    Sft,
    /// Minimal subcover counts on a cell model.
    Cover,
    /// Minimal coloured refinement counts.
    Coloured,
    /// Partition-of-unity system ranks with approximation audit.
    Cpc,
    /// Quasidiagonal system ranks, or the tensor shift with --tensor.
    Qd,
    /// ℓ1-equivalence constant of a vector family.
    L1,
    /// N <= N_c <= (d+1) N on one time cover.
    Sandwich,
    /// Power, direct-sum and conjugacy laws.
    Permanence,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Sft => "sft",
            Command::Cover => "cover",
            Command::Coloured => "coloured",
            Command::Cpc => "cpc",
            Command::Qd => "qd",
            Command::L1 => "l1",
            Command::Sandwich => "sandwich",
            Command::Permanence => "permanence",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Command-line flags; each overrides the matching config field.
#[derive(Debug, Default, Args)]
pub struct Flags {
    /// JSON experiment config.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Transfer matrix (JSON or CSV); repeatable.
    #[arg(long, global = true, value_name = "FILE")]
    pub matrix: Vec<PathBuf>,
    /// Cell model or transfer matrix JSON.
    #[arg(long, global = true, value_name = "FILE")]
    pub model: Option<PathBuf>,
    /// plain, coloured, cpc, qd or all.
    #[arg(long, global = true)]
    pub mode: Option<String>,
    #[arg(long = "n-max", global = true)]
    pub n_max: Option<usize>,
    #[arg(long, global = true)]
    pub epsilon: Option<f64>,
    #[arg(long = "exact-threshold", global = true)]
    pub exact_threshold: Option<usize>,
    /// Directory for CSV/JSON artifacts.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Time index for the sandwich check.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Vector family for l1: rademacher or witness.
    #[arg(long, global = true)]
    pub family: Option<String>,
    #[arg(long, global = true)]
    pub m: Option<usize>,
    /// Word length of symbolic models (defaults to n-max).
    #[arg(long, global = true)]
    pub depth: Option<usize>,
    /// Alphabet size of the tensor shift for qd.
    #[arg(long, global = true)]
    pub tensor: Option<usize>,
    /// Fail the l1 check when K exceeds this (2 for witness families).
    #[arg(long = "max-k", global = true)]
    pub max_k: Option<f64>,
}

/// One run, read from a JSON document and then overridden by flags.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    /// Inline document or path.
    pub model: Option<Value>,
    /// Inline documents or paths.
    pub matrix: Vec<Value>,
    pub mode: Option<String>,
    pub n_max: usize,
    pub epsilon: f64,
    pub exact_threshold: usize,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub format: Format,
    pub n: usize,
    pub family: Option<String>,
    pub m: usize,
    pub depth: Option<usize>,
    pub tensor: Option<usize>,
    pub max_k: Option<f64>,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            model: None,
            matrix: Vec::new(),
            mode: None,
            n_max: 10,
            epsilon: 0.1,
            exact_threshold: SolverConfig::default().exact_threshold,
            out: None,
            seed: 0,
            format: Format::Csv,
            n: 1,
            family: None,
            m: 1,
            depth: None,
            tensor: None,
            max_k: None,
            base: PathBuf::new(),
        }
    }
}

impl ExperimentConfig {
    /// Parses a config document; errors name the line, column and field.
    pub fn from_json(text: &str) -> anyhow::Result<Self> {
        serde_json::from_str(text).map_err(|e| anyhow::anyhow!("config: {e}"))
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
        let mut cfg = Self::from_json(&text).with_context(|| format!("in {}", path.display()))?;
        cfg.base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.out = cfg.out.take().map(|o| cfg.base.join(o));
        Ok(cfg)
    }

    /// Flag paths are taken relative to the working directory.
    pub fn apply(&mut self, flags: &Flags) {
        let path_value = |p: &PathBuf| Value::String(std::path::absolute(p).unwrap_or_else(|_| p.clone()).display().to_string());
        if let Some(p) = &flags.model {
            self.model = Some(path_value(p));
        }
        if !flags.matrix.is_empty() {
            self.matrix = flags.matrix.iter().map(path_value).collect();
        }
        macro_rules! set {
            ($($f:ident),*) => { $( if let Some(v) = &flags.$f { self.$f = v.clone(); } )* };
        }
        macro_rules! set_opt {
            ($($f:ident),*) => { $( if flags.$f.is_some() { self.$f = flags.$f.clone(); } )* };
        }
        set!(n_max, epsilon, exact_threshold, seed, format, n, m);
        set_opt!(mode, family, depth, tensor, max_k);
        if let Some(out) = &flags.out {
            self.out = Some(out.clone());
        }
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        if self.n_max == 0 {
            bail!("n_max must be at least 1");
        }
        if !(self.epsilon > 0.0) {
            bail!("epsilon must be positive, got {}", self.epsilon);
        }
        if let Some(out) = &self.out {
            fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
            let probe = out.join(".write-probe");
            fs::write(&probe, b"").with_context(|| format!("{} is not writable", out.display()))?;
            fs::remove_file(probe)?;
        }
        Ok(())
    }

    fn solver(&self) -> SolverConfig {
        SolverConfig { exact_threshold: self.exact_threshold }
    }

    fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base.join(p)
        }
    }

    fn modes(&self, default: Mode) -> anyhow::Result<Vec<Mode>> {
        match self.mode.as_deref() {
            None => Ok(vec![default]),
            Some("all") => Ok(Mode::ALL.to_vec()),
            Some(s) => Ok(vec![s.parse()?]),
        }
    }
}

/// A loaded model document.
pub enum Source {
    Matrix(TransferMatrix),
    Bundle(Bundle),
}

fn classify(value: &Value, label: &str) -> anyhow::Result<Source> {
    let text = value.to_string();
    if value.get("cells").is_some() {
        Ok(Source::Bundle(Bundle::from_json(&text).with_context(|| format!("model {label}"))?))
    } else {
        Ok(Source::Matrix(TransferMatrix::from_json(&text).with_context(|| format!("matrix {label}"))?))
    }
}

fn load_source(cfg: &ExperimentConfig, value: &Value, index: usize) -> anyhow::Result<(String, Source)> {
    match value {
        Value::String(p) => {
            let path = cfg.resolve(p);
            let label = path.file_stem().map_or_else(|| p.clone(), |s| s.to_string_lossy().into_owned());
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            if path.extension().is_some_and(|e| e == "csv") {
                return Ok((label, Source::Matrix(TransferMatrix::from_csv(&text)?)));
            }
            let doc: Value = serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
            let source = classify(&doc, &label)?;
            Ok((label, source))
        }
        Value::Object(_) => {
            let label = format!("inline{index}");
            let source = classify(value, &label)?;
            Ok((label, source))
        }
        _ => bail!("model entry {index} must be a path or an inline object"),
    }
}

fn sources(cfg: &ExperimentConfig) -> anyhow::Result<Vec<(String, Source)>> {
    let values: Vec<&Value> = cfg.matrix.iter().chain(cfg.model.iter()).collect();
    if values.is_empty() {
        bail!("no model given: use --matrix or --model");
    }
    values.iter().enumerate().map(|(i, v)| load_source(cfg, v, i)).collect()
}

fn to_model(cfg: &ExperimentConfig, label: String, source: Source) -> anyhow::Result<Model> {
    Ok(match source {
        Source::Matrix(m) => Model::sft(label, &m, cfg.depth.unwrap_or(cfg.n_max))?,
        Source::Bundle(b) => Model::new(label, b),
    })
}

/// Result of a run, before it becomes an exit status.
#[derive(Debug, Default)]
pub struct Outcome {
    /// Some checked inequality failed.
    pub verdict_failed: bool,
}

impl Outcome {
    pub fn exit_code(&self) -> i32 {
        if self.verdict_failed {
            2
        } else {
            0
        }
    }
}

/// Writes the artifacts of a finished experiment. Output is byte-stable for
/// a fixed config.
pub fn emit(dir: &Path, format: Format, series: &[GrowthSeries], audits: &[(String, Vec<AuditRow>)], summary: &Value) -> anyhow::Result<()> {
    let mut modes: Vec<&str> = series.iter().map(|s| s.mode.as_str()).collect();
    modes.dedup();
    for mode in modes {
        let of_mode: Vec<&GrowthSeries> = series.iter().filter(|s| s.mode == mode).collect();
        match format {
            Format::Csv => {
                let mut buf = Vec::new();
                write_series_csv(&mut buf, &of_mode)?;
                fs::write(dir.join(format!("series_{mode}.csv")), buf)?;
            }
            Format::Json => {
                let text = serde_json::to_string_pretty(&of_mode)? + "\n";
                fs::write(dir.join(format!("series_{mode}.json")), text)?;
            }
        }
    }
    for (mode, rows) in audits {
        match format {
            Format::Csv => {
                let mut buf = Vec::new();
                write_audit_csv(&mut buf, rows)?;
                fs::write(dir.join(format!("audit_{mode}.csv")), buf)?;
            }
            Format::Json => {
                fs::write(dir.join(format!("audit_{mode}.json")), serde_json::to_string_pretty(rows)? + "\n")?;
            }
        }
    }
    fs::write(dir.join("summary.json"), serde_json::to_string_pretty(summary)? + "\n")?;
    Ok(())
}

fn rate_json(series: &GrowthSeries, method: RateMethod) -> Value {
    match growth_rate(series, method) {
        Ok(r) => json!({
            "slope": r.slope,
            "tail_window": r.tail_window,
            "residual": r.residual,
            "upper_bound_only": r.upper_bound_only,
        }),
        Err(_) => Value::Null,
    }
}

fn series_line(s: &GrowthSeries) -> String {
    let mut line = format!("{} mode={} points={}", s.label, s.mode, s.len());
    match (growth_rate(s, RateMethod::TailMax), growth_rate(s, RateMethod::Regression)) {
        (Ok(t), Ok(r)) => {
            line += &format!(" slope={:.4} regression={:.4}", t.slope, r.slope);
            line += if t.upper_bound_only { " upper_bound_only" } else { " exact" };
        }
        _ => line += " slope=n/a",
    }
    if let Some(t) = &s.truncated {
        line += &format!(" truncated_at={} ({})", t.at, t.reason);
    }
    line
}

fn run_experiments(cfg: &ExperimentConfig, command: Command, default: Mode, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    if command == Command::Qd && cfg.tensor.is_some() {
        return run_tensor(cfg, out);
    }
    let modes = cfg.modes(default)?;
    let opts = ExperimentOptions { solver: cfg.solver(), epsilon: cfg.epsilon, trace: None };
    let mut all = Vec::new();
    let mut audits: Vec<(String, Vec<AuditRow>)> = Vec::new();
    let mut experiments = Vec::new();
    let mut spectral = Vec::new();
    for (label, source) in sources(cfg)? {
        if let Source::Matrix(m) = &source {
            let h = sft_entropy(m);
            writeln!(out, "{label} spectral entropy={:.6}{}", h.value, if h.warning() { " warning" } else { "" })?;
            spectral.push(json!({"label": label, "value": h.value, "spectral_radius": h.spectral_radius,
                "irreducible": h.irreducible, "converged": h.converged}));
        }
        let model = to_model(cfg, label, source)?;
        for &mode in &modes {
            let e = audited_experiment(&model, cfg.n_max, mode, &opts)?;
            writeln!(out, "{}", series_line(&e.series))?;
            experiments.push(json!({
                "label": e.series.label,
                "mode": e.series.mode,
                "n_max": cfg.n_max,
                "points": e.series.len(),
                "truncated": e.series.truncated,
                "upper_bound_only": !e.series.all_exact(),
                "tail_max": rate_json(&e.series, RateMethod::TailMax),
                "regression": rate_json(&e.series, RateMethod::Regression),
            }));
            if matches!(mode, Mode::Cpc | Mode::Qd) {
                match audits.iter_mut().find(|(m, _)| m == mode.as_str()) {
                    Some((_, rows)) => rows.extend(e.audit),
                    None => audits.push((mode.as_str().into(), e.audit)),
                }
            }
            all.push(e.series);
        }
    }
    all.sort_by(|a, b| a.mode.cmp(&b.mode));
    let summary = json!({
        "command": command.name(),
        "experiments": experiments,
        "spectral": spectral,
    });
    if let Some(dir) = &cfg.out {
        emit(dir, cfg.format, &all, &audits, &summary)?;
    }
    Ok(Outcome::default())
}

fn run_tensor(cfg: &ExperimentConfig, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    let k = cfg.tensor.expect("checked by caller");
    let label = format!("tensor{k}");
    let mut series = GrowthSeries::new(&label, "qd-tensor");
    let mut rows = Vec::new();
    let mut failed = false;
    for n in 1..=cfg.n_max {
        let operands = random_tensor_words(k, n, 4, cfg.seed.wrapping_add(n as u64));
        let r = matrix_shift_qd(k, n, &operands)?;
        if r.mult_defect > 1e-12 || r.trace_defect > 1e-12 {
            failed = true;
        }
        series.push(n, r.rank, true)?;
        rows.push(r.audit_row());
    }
    writeln!(out, "{}", series_line(&series))?;
    let summary = json!({
        "command": "qd",
        "experiments": [{
            "label": label,
            "mode": series.mode,
            "n_max": cfg.n_max,
            "points": series.len(),
            "upper_bound_only": false,
            "tail_max": rate_json(&series, RateMethod::TailMax),
            "regression": rate_json(&series, RateMethod::Regression),
            "defects_within_1e-12": !failed,
        }],
    });
    if let Some(dir) = &cfg.out {
        emit(dir, cfg.format, &[series], &[("qd-tensor".into(), rows)], &summary)?;
    }
    Ok(Outcome { verdict_failed: failed })
}

fn format_k(k: f64) -> String {
    if (k - k.round()).abs() < 1e-9 {
        format!("{:.1}", k.round())
    } else {
        format!("{k:.6}")
    }
}

fn run_l1(cfg: &ExperimentConfig, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    let depth = cfg.depth.unwrap_or(1);
    let (label, family, witness) = match (cfg.family.as_deref(), &cfg.model) {
        (Some("rademacher"), _) => {
            (format!("rademacher m={} depth={depth}", cfg.m), VectorFamily::rademacher(cfg.m * depth)?, false)
        }
        (Some("witness"), _) => (format!("witness m={} depth={depth}", cfg.m), kerr_witness(cfg.m, depth)?, true),
        (Some(other), _) => bail!("unknown family {other:?}; expected rademacher or witness"),
        (None, Some(Value::String(p))) => {
            let path = cfg.resolve(p);
            let text = fs::read_to_string(&path).with_context(|| format!("reading {}", path.display()))?;
            (p.clone(), VectorFamily::from_json(&text)?, false)
        }
        (None, Some(v)) => ("inline".into(), VectorFamily::from_json(&v.to_string())?, false),
        (None, None) => bail!("l1 needs --family or --model"),
    };
    let lcfg = L1Config { seed: cfg.seed, ..L1Config::default() };
    let report = l1_equivalence_constant(&family, &lcfg)?;
    let k = if report.infinite { "inf".to_string() } else { format_k(report.k) };
    writeln!(out, "{label} K={k} exact={} kerr_bound_factor={:.6}", report.exact, report.kerr_bound_factor)?;
    let bound = cfg.max_k.or(witness.then_some(2.0));
    let failed = bound.is_some_and(|b| report.infinite || report.k > b + 1e-9);
    if let Some(b) = bound {
        writeln!(out, "K <= {b}: {}", if failed { "VIOLATED" } else { "OK" })?;
    }
    if let Some(dir) = &cfg.out {
        let summary = json!({"command": "l1", "family": label, "report": report.to_json()});
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    }
    Ok(Outcome { verdict_failed: failed })
}

fn run_sandwich(cfg: &ExperimentConfig, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    let mut failed = false;
    let mut reports = Vec::new();
    for (label, source) in sources(cfg)? {
        let model = match source {
            Source::Matrix(m) => Model::sft(label, &m, cfg.depth.unwrap_or(cfg.n))?,
            Source::Bundle(b) => Model::new(label, b),
        };
        let r = sandwich_verdict(&model, cfg.n, &cfg.solver())?;
        writeln!(out, "{r}")?;
        failed |= r.verdict == Verdict::Violated;
        reports.push(r);
    }
    if let Some(dir) = &cfg.out {
        let summary = json!({"command": "sandwich", "reports": reports});
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    }
    Ok(Outcome { verdict_failed: failed })
}

fn run_permanence(cfg: &ExperimentConfig, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    let cases = if cfg.matrix.is_empty() && cfg.model.is_none() {
        vec![
            SftCase::new("full2", TransferMatrix::full_shift(2)?),
            SftCase::new("full3", TransferMatrix::full_shift(3)?),
            SftCase::new("golden", TransferMatrix::golden_mean()),
        ]
    } else {
        sources(cfg)?
            .into_iter()
            .map(|(label, s)| match s {
                Source::Matrix(m) => Ok(SftCase::new(label, m)),
                Source::Bundle(_) => bail!("permanence needs transfer matrices, {label} is a cell model"),
            })
            .collect::<anyhow::Result<_>>()?
    };
    let pcfg = PermanenceConfig {
        model_depth: cfg.depth.unwrap_or(PermanenceConfig::default().model_depth),
        solver: cfg.solver(),
        seed: cfg.seed,
        ..PermanenceConfig::default()
    };
    let report = permanence_suite(&cases, &pcfg)?;
    for c in &report.checks {
        let tag = match c.verdict {
            Verdict::Holds => "OK",
            Verdict::Violated => "VIOLATED",
            Verdict::Withheld => "WITHHELD",
        };
        writeln!(out, "{} {} deviation={:e} tolerance={:e} {tag}", c.law, c.subject, c.deviation, c.tolerance)?;
    }
    if let Some(dir) = &cfg.out {
        let summary = json!({"command": "permanence", "checks": report.checks});
        fs::write(dir.join("summary.json"), serde_json::to_string_pretty(&summary)? + "\n")?;
    }
    Ok(Outcome { verdict_failed: report.checks.iter().any(|c| c.verdict == Verdict::Violated) })
}

/// Executes one parsed command line.
pub fn run(cli: &Cli, out: &mut dyn Write) -> anyhow::Result<Outcome> {
    let mut cfg = match &cli.flags.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&cli.flags);
    cfg.validate()?;
    match cli.command {
        Command::Sft | Command::Coloured => run_experiments(&cfg, cli.command, Mode::Coloured, out),
        Command::Cover => run_experiments(&cfg, cli.command, Mode::Plain, out),
        Command::Cpc => run_experiments(&cfg, cli.command, Mode::Cpc, out),
        Command::Qd => run_experiments(&cfg, cli.command, Mode::Qd, out),
        Command::L1 => run_l1(&cfg, out),
        Command::Sandwich => run_sandwich(&cfg, out),
        Command::Permanence => run_permanence(&cfg, out),
    }
}

/// Parses `args`, runs, and returns the process exit code: 0 on success,
/// 2 when a checked inequality fails, 1 on usage or structural errors.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = write!(err, "{e}");
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match run(&cli, out) {
        Ok(outcome) => outcome.exit_code(),
        Err(e) => {
            let _ = writeln!(err, "error: {e:#}");
            1
        }
    }
}
