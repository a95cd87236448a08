//! Config-driven experiment runner behind the `causal-geometry` binary.

mod config;
mod plot;

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Parser, Subcommand};
use rayon::prelude::*;

pub use config::{
    load, parse_toml, Computation, CurveMethod, ExperimentConfig, GeometricGrid, Manifest, Units, SCHEMA_VERSION,
};

use crate::ei::{EIReport, Method};
use crate::error::Error;
use crate::geometry::{causal_eigenvalues, MetricField};
use crate::manifold::{crossover_scan, CrossoverScan, SweepModel, SweepVariable};
use crate::models::{self, submanifold, Model, ModelSpec};

pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    pub fn config(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_CONFIG,
            message: msg.into(),
        }
    }

    pub fn numeric(msg: impl Into<String>) -> Self {
        Self {
            code: EXIT_NUMERIC,
            message: msg.into(),
        }
    }

    pub fn context(self, path: &Path) -> Self {
        Self {
            message: format!("{}: {}", path.display(), self.message),
            ..self
        }
    }

    fn at(e: Error, var: Option<SweepVariable>, v: Option<f64>, label: &str) -> Self {
        let mut c = Self::from(e);
        let point = match (var, v) {
            (Some(var), Some(v)) => format!("{}={v}", var.column()),
            _ => "the configured point".into(),
        };
        c.message = format!("{label} failed at {point}: {}", c.message);
        c
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::InvalidConfig(_)
            | Error::InvalidDomain(_)
            | Error::InvalidNoise(_)
            | Error::DimensionMismatch { .. }
            | Error::UseMonteCarlo { .. }
            | Error::Regime(_) => EXIT_CONFIG,
            _ => EXIT_NUMERIC,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

/// One output cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

/// 17 significant digits, `.` decimal separator.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x:.16e}")
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
    /// Lines appended after the rows, without the leading `#`.
    pub comments: Vec<String>,
}

impl Table {
    pub fn to_csv(&self) -> String {
        let mut s = self.header.join(",");
        s.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = r
                .iter()
                .map(|c| match c {
                    Cell::Num(x) => format_float(*x),
                    Cell::Text(t) => t.clone(),
                })
                .collect();
            s.push_str(&cells.join(","));
            s.push('\n');
        }
        for c in &self.comments {
            s.push('#');
            s.push_str(c);
            s.push('\n');
        }
        s
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(
            self.rows
                .iter()
                .map(|r| match &r[i] {
                    Cell::Num(x) => *x,
                    Cell::Text(_) => f64::NAN,
                })
                .collect(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: Table,
    pub manifest: Manifest,
    pub plot: Option<String>,
    pub scan: Option<CrossoverScan>,
}

type EvalFn = dyn Fn(&ModelSpec) -> crate::Result<EIReport> + Send + Sync;

#[derive(Clone)]
struct Curve {
    label: String,
    spec: ModelSpec,
    eval: Arc<EvalFn>,
}

fn build(spec: &ModelSpec) -> crate::Result<Model> {
    spec.build()
}

fn full_curve(cfg: &ExperimentConfig, spec: &ModelSpec, method: CurveMethod, label: String) -> Result<Curve, CliError> {
    let q = cfg.quadrature.clone();
    let geo = cfg.geometric_grid.spec();
    let mc = cfg.mc_spec();
    let eval: Arc<EvalFn> = match (spec, method) {
        (ModelSpec::DecayConfounder(_), _) => {
            return Err(CliError::config(
                "decay-confounder has no EI computation; use computation = \"eigen\" for its metrics",
            ))
        }
        (ModelSpec::BinarySwitch(_), CurveMethod::Geometric) => {
            return Err(CliError::config("binary-switch has a discrete intervention set; EI_g needs a box"))
        }
        (ModelSpec::TwoSpecies(_), CurveMethod::Exact) => Arc::new(move |s| match build(s)? {
            Model::TwoSpecies(m) => m.ei_exact_mc(&mc),
            _ => unreachable!(),
        }),
        (_, CurveMethod::Exact) => Arc::new(move |s| match build(s)? {
            Model::Dimmer(m) => m.ei_exact(&q),
            _ => unreachable!(),
        }),
        (_, CurveMethod::Geometric) => Arc::new(move |s| match build(s)? {
            Model::Dimmer(m) => m.ei_geometric(&geo),
            Model::TwoSpecies(m) => m.ei_geometric(&geo),
            Model::DecayConfounder(..) => unreachable!(),
        }),
    };
    Ok(Curve {
        label,
        spec: spec.clone(),
        eval,
    })
}

fn sub_curve(cfg: &ExperimentConfig, spec: &ModelSpec, name: &str, prefix: &str) -> Result<Curve, CliError> {
    if !matches!(spec, ModelSpec::TwoSpecies(_)) {
        return Err(CliError::config(format!("model '{}' has no submanifolds", spec.name())));
    }
    let sub = submanifold(name)?;
    let geo = cfg.geometric_grid.spec();
    Ok(Curve {
        label: format!("{prefix}sub{}", sub.label()),
        spec: spec.clone(),
        eval: Arc::new(move |s| match build(s)? {
            Model::TwoSpecies(m) => m.coarse_ei(&sub, &geo),
            _ => unreachable!(),
        }),
    })
}

fn curves(cfg: &ExperimentConfig, method: CurveMethod) -> Result<Vec<Curve>, CliError> {
    let specs: Vec<&ModelSpec> = std::iter::once(&cfg.model).chain(&cfg.compare).collect();
    let multi = specs.len() > 1;
    let mut out: Vec<Curve> = Vec::new();
    for (i, spec) in specs.iter().enumerate() {
        let name = if specs[..i].iter().any(|s| s.name() == spec.name()) {
            format!("{}{i}", spec.name())
        } else {
            spec.name().to_string()
        };
        let prefix = if multi { format!("{name}_") } else { String::new() };
        let two = matches!(spec, ModelSpec::TwoSpecies(_));
        let subs = if i == 0 { cfg.submanifolds.as_slice() } else { &[] };
        if !two || cfg.include_full || subs.is_empty() {
            let label = match (two, multi) {
                (true, _) => format!("{prefix}2d"),
                (false, true) => name.clone(),
                (false, false) => String::new(),
            };
            out.push(full_curve(cfg, spec, method, label)?);
        }
        for s in subs {
            out.push(sub_curve(cfg, spec, s, &prefix)?);
        }
    }
    Ok(out)
}

fn ei_column(label: &str, units: Units) -> String {
    if label.is_empty() {
        format!("ei_{}", units.suffix())
    } else {
        format!("ei_{label}_{}", units.suffix())
    }
}

fn default_method(cfg: &ExperimentConfig) -> CurveMethod {
    cfg.method.unwrap_or(match cfg.model {
        ModelSpec::TwoSpecies(_) => CurveMethod::Geometric,
        _ => CurveMethod::Exact,
    })
}

fn sweep_points(cfg: &ExperimentConfig) -> Result<Option<(SweepVariable, Vec<f64>)>, CliError> {
    match &cfg.sweep {
        None => Ok(None),
        Some(s) => Ok(Some((s.variable, s.grid()?))),
    }
}

fn spec_at(spec: &ModelSpec, var: Option<SweepVariable>, v: Option<f64>) -> Result<ModelSpec, CliError> {
    match (var, v) {
        (Some(var), Some(v)) => Ok(spec.with(var, v)?),
        _ => Ok(spec.clone()),
    }
}

fn log_warnings(label: &str, at: &str, r: &EIReport) {
    for w in &r.warnings {
        log::warn!("{label} at {at}: {w:?}");
    }
}

fn ei_table(cfg: &ExperimentConfig, curves: &[Curve], exact_and_geo: bool) -> Result<Table, CliError> {
    let sweep = sweep_points(cfg)?;
    let (var, grid): (Option<SweepVariable>, Vec<Option<f64>>) = match &sweep {
        Some((var, g)) => (Some(*var), g.iter().map(|v| Some(*v)).collect()),
        None => (None, vec![None]),
    };
    let specs: Vec<Vec<ModelSpec>> = grid
        .iter()
        .map(|v| curves.iter().map(|c| spec_at(&c.spec, var, *v)).collect())
        .collect::<Result<_, _>>()?;
    let jobs: Vec<(usize, usize)> = (0..grid.len()).flat_map(|i| (0..curves.len()).map(move |c| (i, c))).collect();
    let results: Vec<Result<EIReport, CliError>> = jobs
        .par_iter()
        .map(|&(i, c)| (curves[c].eval)(&specs[i][c]).map_err(|e| CliError::at(e, var, grid[i], &curves[c].label)))
        .collect();
    let mut reports: Vec<Vec<Option<EIReport>>> = vec![vec![None; curves.len()]; grid.len()];
    for (&(i, c), r) in jobs.iter().zip(results) {
        let r = r?;
        log_warnings(&curves[c].label, &format!("{:?}", grid[i]), &r);
        reports[i][c] = Some(r);
    }
    let bits = cfg.units == Units::Bits;
    let mut header = Vec::new();
    if let Some(var) = var {
        header.push(var.column().to_string());
    }
    for (c, curve) in curves.iter().enumerate() {
        let label = if exact_and_geo {
            let kind = if reports[0][c].as_ref().is_some_and(|r| r.method == Method::Geometric) { "geom" } else { "exact" };
            if curve.label.is_empty() { kind.to_string() } else { format!("{}_{kind}", curve.label) }
        } else {
            curve.label.clone()
        };
        header.push(ei_column(&label, cfg.units));
        if reports[0][c].as_ref().is_some_and(|r| r.stderr.is_some()) {
            header.push(format!("stderr_{}{}", if label.is_empty() { String::new() } else { format!("{label}_") }, cfg.units.suffix()));
        }
    }
    let rows = grid
        .iter()
        .zip(&reports)
        .map(|(v, rs)| {
            let mut row: Vec<Cell> = v.iter().map(|v| Cell::Num(*v)).collect();
            for r in rs.iter().flatten() {
                row.push(Cell::Num(r.value(bits)));
                if let Some(se) = r.stderr {
                    row.push(Cell::Num(if bits { se / std::f64::consts::LN_2 } else { se }));
                }
            }
            row
        })
        .collect();
    Ok(Table {
        header,
        rows,
        comments: Vec::new(),
    })
}

fn scan_table(cfg: &ExperimentConfig, curves: &[Curve]) -> Result<(Table, CrossoverScan), CliError> {
    let Some(sweep) = cfg.sweep.clone() else {
        return Err(CliError::config("crossover-scan needs a [sweep] section"));
    };
    if curves.len() < 2 {
        return Err(CliError::config(
            "crossover-scan needs at least two curves (submanifolds or compare models)",
        ));
    }
    for c in curves {
        spec_at(&c.spec, Some(sweep.variable), Some(sweep.from))?;
    }
    let models: Vec<SweepModel> = curves
        .iter()
        .map(|c| {
            let c = c.clone();
            let var = sweep.variable;
            SweepModel::new(c.label.clone(), move |v| (c.eval)(&c.spec.with(var, v)?))
        })
        .collect();
    let scan = crossover_scan(&models, &sweep)?;
    for p in &scan.invalid {
        eprintln!(
            "warning: {} invalid at {}={}: {}",
            p.label,
            sweep.variable.column(),
            p.value,
            p.error
        );
    }
    let bits = cfg.units == Units::Bits;
    let mut header = vec![sweep.variable.column().to_string()];
    header.extend(scan.models.iter().map(|(l, _)| ei_column(l, cfg.units)));
    header.push("argmax".into());
    let rows = scan
        .sweep_grid
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let mut row = vec![Cell::Num(*v)];
            for (_, rs) in &scan.models {
                row.push(Cell::Num(rs[i].as_ref().map_or(f64::NAN, |r| r.value(bits))));
            }
            row.push(Cell::Text(scan.argmax[i].clone().unwrap_or_default()));
            row
        })
        .collect();
    let comments = scan
        .crossings
        .iter()
        .map(|c| {
            format!(
                "crossing,{},{},{},{},{},{}",
                c.labels.0,
                c.labels.1,
                format_float(c.location),
                format_float(c.bracket.0),
                format_float(c.bracket.1),
                if c.first_wins_above { &c.labels.0 } else { &c.labels.1 }
            )
        })
        .collect();
    Ok((Table { header, rows, comments }, scan))
}

/// `λ` of `h⁻¹g` (descending) and the mismatch at `theta`.
fn eigen_row(model: &Model, theta: &[f64]) -> Result<Vec<f64>, Error> {
    let (g, h) = match model {
        Model::TwoSpecies(m) => (m.g.eval(theta)?, m.h.eval(theta)?),
        Model::Dimmer(m) => (m.effect_metric().eval(theta)?, m.intervention_metric().eval(theta)?),
        Model::DecayConfounder(_, d) => {
            let t = theta[0];
            let series = d.h_stat_series.eval(t).unwrap_or_else(|e| {
                log::warn!("h_stat_series at theta={t}: {e}");
                f64::NAN
            });
            return Ok(vec![d.h_caus_at(t)?, d.h_stat_at(t)?, series]);
        }
    };
    let rep = causal_eigenvalues(&g, &h)?;
    let mut row = rep.eigenvalues.clone();
    row.push(rep.mismatch());
    Ok(row)
}

fn eigen_header(model: &Model) -> Vec<String> {
    match model {
        Model::DecayConfounder(..) => vec!["h_caus".into(), "h_stat".into(), "h_stat_series".into()],
        Model::TwoSpecies(_) => vec!["lambda_1".into(), "lambda_2".into(), "mismatch_nats".into()],
        Model::Dimmer(_) => vec!["lambda_1".into(), "mismatch_nats".into()],
    }
}

fn default_theta(model: &Model) -> Vec<f64> {
    match model {
        Model::TwoSpecies(_) => vec![0.5, 0.5],
        _ => vec![0.5],
    }
}

fn eigen_table(cfg: &ExperimentConfig) -> Result<Table, CliError> {
    let base = cfg.model.build()?;
    let theta = cfg.theta.clone().unwrap_or_else(|| default_theta(&base));
    let sweep = sweep_points(cfg)?;
    let mut header: Vec<String> = Vec::new();
    let jobs: Vec<(Option<f64>, ModelSpec, Vec<f64>)> = match &sweep {
        None => {
            header.extend((0..theta.len()).map(|i| format!("theta_{}", i + 1)));
            vec![(None, cfg.model.clone(), theta.clone())]
        }
        Some((SweepVariable::Theta, grid)) => {
            if default_theta(&base).len() != 1 {
                return Err(CliError::config("a theta sweep needs a one-dimensional parameter space"));
            }
            header.push("theta".into());
            grid.iter().map(|t| (Some(*t), cfg.model.clone(), vec![*t])).collect()
        }
        Some((var, grid)) => {
            header.push(var.column().into());
            grid.iter()
                .map(|v| Ok((Some(*v), cfg.model.with(*var, *v)?, theta.clone())))
                .collect::<Result<_, Error>>()?
        }
    };
    header.extend(eigen_header(&base));
    let var = sweep.as_ref().map(|s| s.0);
    let rows: Vec<Vec<Cell>> = jobs
        .par_iter()
        .map(|(v, spec, t)| {
            let r = spec.build().and_then(|m| eigen_row(&m, t)).map_err(|e| CliError::at(e, var, *v, "eigen"))?;
            let mut row: Vec<Cell> = match v {
                Some(v) => vec![Cell::Num(*v)],
                None => t.iter().map(|x| Cell::Num(*x)).collect(),
            };
            row.extend(r.into_iter().map(Cell::Num));
            Ok(row)
        })
        .collect::<Result<_, CliError>>()?;
    Ok(Table {
        header,
        rows,
        comments: Vec::new(),
    })
}

fn plot_table(cfg: &ExperimentConfig, t: &Table) -> Option<String> {
    let sweep = cfg.sweep.as_ref()?;
    let x = t.column(&t.header[0])?;
    let series: Vec<(String, Vec<(f64, f64)>)> = t.header[1..]
        .iter()
        .filter(|h| !h.starts_with("stderr") && *h != "argmax")
        .filter_map(|h| Some((h.clone(), x.iter().copied().zip(t.column(h)?).collect())))
        .collect();
    let series: Vec<plot::Series> = series
        .iter()
        .map(|(l, p)| plot::Series {
            label: l,
            points: p.clone(),
        })
        .collect();
    let y = match cfg.computation {
        Computation::Eigen => "value".to_string(),
        _ => format!("EI ({})", cfg.units.suffix()),
    };
    Some(plot::line_chart(&t.header[0], &y, sweep.log_spaced, &series))
}

/// Runs a validated config without touching the filesystem.
pub fn execute(cfg: &ExperimentConfig) -> Result<RunOutput, CliError> {
    cfg.validate()?;
    let mut scan = None;
    let table = match cfg.computation {
        Computation::EiExact => ei_table(cfg, &curves(cfg, CurveMethod::Exact)?, false)?,
        Computation::EiGeom => ei_table(cfg, &curves(cfg, CurveMethod::Geometric)?, false)?,
        Computation::EiBoth => {
            let mut cs: Vec<Curve> = curves(cfg, CurveMethod::Exact)?
                .into_iter()
                .filter(|c| !c.label.contains("sub"))
                .collect();
            cs.extend(curves(cfg, CurveMethod::Geometric)?);
            ei_table(cfg, &cs, true)?
        }
        Computation::Eigen => eigen_table(cfg)?,
        Computation::CrossoverScan => {
            let (t, s) = scan_table(cfg, &curves(cfg, default_method(cfg))?)?;
            scan = Some(s);
            t
        }
    };
    let plot = if cfg.plot { plot_table(cfg, &table) } else { None };
    let resolved = cfg.resolved();
    Ok(RunOutput {
        table,
        plot,
        scan,
        manifest: Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            seed: resolved.effective_seed(),
            config: resolved,
        },
    })
}

pub fn write_outputs(out: &RunOutput, dir: &Path) -> Result<(), CliError> {
    let io = |e: std::io::Error| CliError::config(format!("cannot write to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    std::fs::write(dir.join("results.csv"), out.table.to_csv()).map_err(io)?;
    let manifest = serde_json::to_string_pretty(&out.manifest).map_err(|e| CliError::numeric(e.to_string()))?;
    std::fs::write(dir.join("manifest.json"), manifest + "\n").map_err(io)?;
    if let Some(svg) = &out.plot {
        std::fs::write(dir.join("plot.svg"), svg).map_err(io)?;
    }
    Ok(())
}

/// Flags that override config keys.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub output: Option<PathBuf>,
    pub seed: Option<u64>,
    pub units: Option<Units>,
    pub threads: Option<usize>,
    pub plot: bool,
}

impl Overrides {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(o) = &self.output {
            cfg.output = o.clone();
        }
        if self.seed.is_some() {
            cfg.seed = self.seed;
        }
        if let Some(u) = self.units {
            cfg.units = u;
        }
        if self.threads.is_some() {
            cfg.threads = self.threads;
        }
        cfg.plot |= self.plot;
    }
}

/// Loads, runs, and writes one experiment; returns the output directory.
pub fn run(path: &Path, overrides: &Overrides) -> Result<PathBuf, CliError> {
    let mut cfg = load(path)?;
    overrides.apply(&mut cfg);
    let out = with_threads(cfg.threads, || execute(&cfg))?;
    write_outputs(&out, &cfg.output)?;
    Ok(cfg.output.clone())
}

fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> T {
    match threads.and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(f),
        None => f(),
    }
}

pub fn list_models(json: bool) -> String {
    let r = models::registry();
    if json {
        return serde_json::to_string_pretty(&r).expect("registry serializes") + "\n";
    }
    let mut s = String::new();
    for m in r {
        s.push_str(&format!("{}\n    {}\n", m.name, m.about));
        for p in m.params {
            s.push_str(&format!("    {:<10} {:<22} {}\n", p.name, p.default.to_string(), p.about));
        }
    }
    s
}

/// Model spec from a name plus `key=value` overrides (values in TOML syntax).
pub fn model_from_params(name: &str, params: &[String]) -> Result<ModelSpec, CliError> {
    let base = ModelSpec::by_name(name)?;
    let mut table = match toml::Value::try_from(&base) {
        Ok(toml::Value::Table(t)) => t,
        _ => return Err(CliError::config("model parameters do not form a table")),
    };
    for p in params {
        let Some((k, v)) = p.split_once('=') else {
            return Err(CliError::config(format!("expected KEY=VALUE, got '{p}'")));
        };
        let parsed: toml::Table = toml::from_str(&format!("v = {}", v.trim()))
            .or_else(|_| toml::from_str(&format!("v = \"{}\"", v.trim())))
            .map_err(|e| CliError::config(format!("bad value for {k}: {e}")))?;
        table.insert(k.trim().to_string(), parsed["v"].clone());
    }
    toml::Value::Table(table)
        .try_into()
        .map_err(|e: toml::de::Error| CliError::config(e.to_string()))
}

/// Eigen-query text for the `eigen` subcommand.
pub fn eigen_query(spec: &ModelSpec, theta: &[f64], json: bool) -> Result<String, CliError> {
    let model = spec.build()?;
    let header = eigen_header(&model);
    let row = eigen_row(&model, theta).map_err(|e| CliError::at(e, None, None, "eigen"))?;
    if json {
        let map: serde_json::Map<String, serde_json::Value> =
            header.iter().cloned().zip(row.iter().map(|v| serde_json::json!(v))).collect();
        return Ok(serde_json::to_string_pretty(&map).expect("finite values serialize") + "\n");
    }
    Ok(header
        .iter()
        .zip(&row)
        .map(|(h, v)| format!("{h} = {}\n", format_float(*v)))
        .collect())
}

#[derive(Debug, Parser)]
#[command(name = "causal-geometry", version, about = "Exact and geometric effective information experiments")]
pub struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true, env = "CG_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run an experiment config (TOML) or a previous manifest.json.
    Run {
        config: PathBuf,
        /// Output directory, overriding `output` in the config.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Monte Carlo seed.
        #[arg(long)]
        seed: Option<u64>,
        /// bits or nats.
        #[arg(long, value_parser = parse_units)]
        units: Option<Units>,
        /// Also write plot.svg.
        #[arg(long)]
        plot: bool,
    },
    /// List the built-in models and their parameters.
    ListModels {
        #[arg(long)]
        json: bool,
    },
    /// Eigenvalues of h⁻¹g (or the intervention metrics) at one point.
    Eigen {
        #[arg(long)]
        model: String,
        /// Comma-separated parameter point.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        theta: Vec<f64>,
        /// Model parameter override, e.g. `--param delta_t=2`.
        #[arg(long = "param", value_name = "KEY=VALUE")]
        params: Vec<String>,
        #[arg(long)]
        json: bool,
    },
}

fn parse_units(s: &str) -> Result<Units, String> {
    match s {
        "bits" => Ok(Units::Bits),
        "nats" => Ok(Units::Nats),
        _ => Err(format!("expected bits or nats, got {s}")),
    }
}

/// Entry point of the binary; returns the process exit code.
pub fn main_with(cli: Cli) -> i32 {
    let result = match cli.command {
        Command::Run {
            config,
            output,
            seed,
            units,
            plot,
        } => {
            let o = Overrides {
                output,
                seed,
                units,
                threads: cli.threads,
                plot,
            };
            run(&config, &o).map(|dir| eprintln!("wrote {}", dir.display()))
        }
        Command::ListModels { json } => {
            print!("{}", list_models(json));
            Ok(())
        }
        Command::Eigen {
            model,
            theta,
            params,
            json,
        } => with_threads(cli.threads, || {
            model_from_params(&model, &params)
                .and_then(|spec| eigen_query(&spec, &theta, json))
                .map(|s| print!("{s}"))
        }),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.code
        }
    }
}
