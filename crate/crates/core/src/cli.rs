//! Command-line front end: parameter sweeps written as CSV or JSON.
//!
//! Physical inputs are dimensionless groups only. Plasma frequencies are
//! given as `omega_P L / 2 pi c`, damping constants as `gamma L / c`, with
//! `L` the gap or center distance `d` or the sphere radius `R` as the flag
//! name says.

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::Error;
use crate::lifshitz::{pec_high_temperature_entropy, pp_entropy, PlanePlaneConfig};
use crate::mie::{mie_expansion, mie_ratios, mie_table, regime_classify, Material, RegimeThresholds};
use crate::roundtrip::GeometryConfig;
use crate::thermo::{ChannelSet, Mode, SphereSphere, ENTROPY_TOLERANCE};

/// Version of the CSV/JSON column layout.
pub const SCHEMA_VERSION: &str = "casimir-table/1";

/// Fixed leading columns of every thermodynamic table.
pub const FIXED_COLUMNS: [&str; 10] =
    ["tau", "S_total", "S_TM", "S_TE", "S_mix", "F_total", "F_TM", "F_TE", "F_mix", "err_est"];

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid run specification: {0}")]
    Spec(String),
    #[error("numerical failure at {point}: {source}")]
    Numerical { point: String, source: Error },
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
    #[error("cannot write CSV: {0}")]
    Csv(#[from] csv::Error),
    #[error("cannot write JSON: {0}")]
    Json(#[from] serde_json::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Spec(_) => 2,
            CliError::Numerical { .. } => 3,
            CliError::Io(_) | CliError::Csv(_) | CliError::Json(_) => 1,
        }
    }

    fn at(point: impl Into<String>) -> impl FnOnce(Error) -> CliError {
        let point = point.into();
        move |source| match source {
            // bad physical input surfaces as a spec error, not a numerical one
            Error::Domain(msg) | Error::Unsupported(msg) => {
                CliError::Spec(format!("{point}: {msg}"))
            }
            source => CliError::Numerical { point, source },
        }
    }
}

/// Sweep grid: `log:a:b:n`, `lin:a:b:n`, or a comma-separated list.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    text: String,
    pub values: Vec<f64>,
}

impl FromStr for Grid {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        let values = match parts.as_slice() {
            [kind @ ("log" | "lin"), a, b, n] => {
                let a: f64 = a.parse().map_err(|_| format!("bad lower bound `{a}`"))?;
                let b: f64 = b.parse().map_err(|_| format!("bad upper bound `{b}`"))?;
                let n: usize = n.parse().map_err(|_| format!("bad point count `{n}`"))?;
                if n == 0 {
                    return Err("grid needs at least one point".into());
                }
                if !(a > 0.0 && b >= a && b.is_finite()) {
                    return Err(format!("grid bounds must satisfy 0 < a <= b, got {a}, {b}"));
                }
                let step = |i: usize| if n == 1 { 0.0 } else { i as f64 / (n - 1) as f64 };
                let mut v: Vec<f64> = if *kind == "log" {
                    let (la, lb) = (a.log10(), b.log10());
                    (0..n).map(|i| 10f64.powf(la + (lb - la) * step(i))).collect()
                } else {
                    (0..n).map(|i| a + (b - a) * step(i)).collect()
                };
                // exact endpoints
                v[n - 1] = b;
                v[0] = a;
                v
            }
            [list] => {
                let v = list
                    .split(',')
                    .map(|x| x.trim().parse::<f64>().map_err(|_| format!("bad grid value `{x}`")))
                    .collect::<Result<Vec<_>, _>>()?;
                if v.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err("grid values must be positive".into());
                }
                v
            }
            _ => return Err(format!("expected log:a:b:n, lin:a:b:n or a list, got `{s}`")),
        };
        Ok(Grid { text: s.to_string(), values })
    }
}

impl fmt::Display for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Serialize for Grid {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum MaterialChoice {
    Pec,
    Drude,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GeometryChoice {
    SphereSphere,
    PlanePlane,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeChoice {
    Full,
    Srt,
    Dipole,
}

impl From<ModeChoice> for Mode {
    fn from(m: ModeChoice) -> Mode {
        match m {
            ModeChoice::Full => Mode::FullLogDet,
            ModeChoice::Srt => Mode::SingleRoundTrip,
            ModeChoice::Dipole => Mode::SingleRoundTripDipole,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    FreeEnergy,
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Csv,
    Json,
}

/// Options that shape the output but not the numbers in it.
#[derive(Debug, Clone, Args, Default)]
pub struct OutputArgs {
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads; defaults to the number of cores.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Omit the timestamp header line.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

/// Material in units of the gap or center distance `d`.
#[derive(Debug, Clone, Args, Serialize)]
pub struct DistanceMaterial {
    #[arg(long, value_enum, default_value_t = MaterialChoice::Pec)]
    pub material: MaterialChoice,
    /// `gamma d / c`.
    #[arg(long = "gamma-d")]
    pub gamma_d: Option<f64>,
    /// `omega_P d / 2 pi c`.
    #[arg(long = "wp-d")]
    pub wp_d: Option<f64>,
}

impl DistanceMaterial {
    fn build(&self) -> Result<Material, CliError> {
        build_material(self.material, self.wp_d, self.gamma_d, None, "--wp-d", "--gamma-d")
    }
}

fn build_material(
    choice: MaterialChoice,
    wp: Option<f64>,
    gamma: Option<f64>,
    sigma: Option<f64>,
    wp_flag: &str,
    gamma_flag: &str,
) -> Result<Material, CliError> {
    match choice {
        MaterialChoice::Pec => Ok(Material::perfect_conductor()),
        MaterialChoice::Drude => {
            let wp = wp.ok_or_else(|| CliError::Spec(format!("drude material needs {wp_flag}")))?;
            let plasma = 2.0 * PI * wp;
            let result = match (gamma, sigma) {
                (Some(g), None) => Material::drude(plasma, g),
                (None, Some(s)) => Material::drude_from_conductivity(s, plasma),
                (Some(_), Some(_)) => {
                    return Err(CliError::Spec(format!("give either {gamma_flag} or --sigma-R, not both")))
                }
                (None, None) => return Err(CliError::Spec(format!("drude material needs {gamma_flag}"))),
            };
            result.map_err(|e| CliError::Spec(e.to_string()))
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct TemperatureArgs {
    #[arg(long, value_enum, default_value_t = GeometryChoice::SphereSphere)]
    pub geometry: GeometryChoice,
    /// Center distance over sphere radius.
    #[arg(long = "ratio-dR", default_value_t = 20.0)]
    pub ratio_dr: f64,
    #[command(flatten)]
    pub material: DistanceMaterial,
    /// Grid in `tau = 2 pi k_B T d / hbar c`.
    #[arg(long = "tau-grid", default_value = "log:1e-1:1e2:31")]
    pub tau_grid: Grid,
    #[arg(long, value_enum, default_value_t = ModeChoice::Dipole)]
    pub mode: ModeChoice,
    /// Multipole cutoff for the `srt` and `full` modes.
    #[arg(long, default_value_t = 20)]
    pub lmax: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DistanceArgs {
    #[arg(long, value_enum, default_value_t = MaterialChoice::Pec)]
    pub material: MaterialChoice,
    /// `gamma R / c`.
    #[arg(long = "gamma-R")]
    pub gamma_r: Option<f64>,
    /// `omega_P R / 2 pi c`.
    #[arg(long = "wp-R")]
    pub wp_r: Option<f64>,
    /// `tau_R = 2 pi k_B T R / hbar c`.
    #[arg(long = "tauR", default_value_t = 1.0)]
    pub tau_r: f64,
    /// Grid in `d / R`.
    #[arg(long = "dR-grid", default_value = "lin:3:25:12")]
    pub dr_grid: Grid,
    #[arg(long, value_delimiter = ',', default_value = "dipole,srt")]
    pub modes: Vec<ModeChoice>,
    #[arg(long, default_value_t = 20)]
    pub lmax: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ChannelArgs {
    #[arg(long, value_enum, default_value_t = GeometryChoice::SphereSphere)]
    pub geometry: GeometryChoice,
    #[arg(long = "ratio-dR", default_value_t = 20.0)]
    pub ratio_dr: f64,
    #[command(flatten)]
    pub material: DistanceMaterial,
    #[arg(long = "tau-grid", default_value = "log:1e-1:1e2:31")]
    pub tau_grid: Grid,
    #[arg(long, value_enum, default_value_t = Observable::Entropy)]
    pub observable: Observable,
    /// Channels are resolved in single round-trip mode up to this order;
    /// the full-determinant total is reported alongside.
    #[arg(long, default_value_t = 1)]
    pub lmax: usize,
    /// Largest order listed in the per-pair columns.
    #[arg(long = "pair-lmax", default_value_t = 2)]
    pub pair_lmax: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct MieArgs {
    #[arg(long, value_enum, default_value_t = MaterialChoice::Drude)]
    pub material: MaterialChoice,
    /// `omega_P R / 2 pi c`.
    #[arg(long = "wp-R")]
    pub wp_r: Option<f64>,
    /// `gamma R / c`.
    #[arg(long = "gamma-R")]
    pub gamma_r: Option<f64>,
    /// `sigma0 R / c`, alternative to `--gamma-R`.
    #[arg(long = "sigma-R")]
    pub sigma_r: Option<f64>,
    /// Grid in `kR = xi R / c`.
    #[arg(long = "kR-grid", default_value = "log:1e-6:1e1:36")]
    pub kr_grid: Grid,
    #[arg(long, default_value_t = 2)]
    pub lmax: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct PlaneArgs {
    #[command(flatten)]
    pub material: DistanceMaterial,
    #[arg(long = "tau-grid", default_value = "log:1e-1:1e2:31")]
    pub tau_grid: Grid,
}

#[derive(Debug, Clone, Subcommand, Serialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Entropy and free energy against temperature at fixed geometry.
    EntropyVsTemperature(TemperatureArgs),
    /// Entropy of two identical spheres against center distance at fixed `tau_R`.
    EntropyVsDistance(DistanceArgs),
    /// Polarization and multipole channel decomposition against temperature.
    Channels(ChannelArgs),
    /// Mie coefficients and scattering regime against size parameter.
    MieTable(MieArgs),
    /// Entropy and free energy per unit area of two parallel plates.
    PlanePlane(PlaneArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::EntropyVsTemperature(_) => "entropy-vs-temperature",
            Command::EntropyVsDistance(_) => "entropy-vs-distance",
            Command::Channels(_) => "channels",
            Command::MieTable(_) => "mie-table",
            Command::PlanePlane(_) => "plane-plane",
        }
    }

    /// SHA-256 of the canonical JSON form of the run specification.
    pub fn spec_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("run spec serializes");
        hex::encode(Sha256::digest(&json))
    }
}

#[derive(Debug, Clone, Parser)]
#[command(name = "casimir", version, about = "Casimir free energy and entropy sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Int(usize),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:e}"),
            Cell::Int(v) => v.to_string(),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Num(v) => serde_json::Number::from_f64(*v).map_or(serde_json::Value::Null, Into::into),
            Cell::Int(v) => (*v).into(),
            Cell::Text(s) => s.clone().into(),
            Cell::Bool(b) => (*b).into(),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Cell {
        Cell::Num(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Cell {
        v.map_or(Cell::Empty, Cell::Num)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Cell {
        Cell::Int(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Cell {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Cell {
        Cell::Bool(v)
    }
}

/// Result of a run: metadata lines plus a rectangular table.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub metadata: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    fn new(columns: impl IntoIterator<Item = impl Into<String>>) -> Self {
        Table { columns: columns.into_iter().map(Into::into).collect(), ..Default::default() }
    }

    fn meta(&mut self, key: &str, value: impl fmt::Display) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write_csv(&self, out: &mut impl Write) -> Result<(), CliError> {
        for (k, v) in &self.metadata {
            writeln!(out, "# {k}: {v}")?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::render))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, out: &mut impl Write) -> Result<(), CliError> {
        let metadata: serde_json::Map<_, _> =
            self.metadata.iter().map(|(k, v)| (k.clone(), serde_json::Value::from(v.clone()))).collect();
        let rows: Vec<serde_json::Value> = self
            .rows
            .iter()
            .map(|row| {
                serde_json::Value::Object(self.columns.iter().cloned().zip(row.iter().map(Cell::json)).collect())
            })
            .collect();
        serde_json::to_writer_pretty(&mut *out, &serde_json::json!({ "metadata": metadata, "rows": rows }))?;
        writeln!(out)?;
        Ok(())
    }
}

fn header(command: &Command, timestamp: bool) -> Table {
    let mut t = Table::default();
    t.meta("casimir", env!("CARGO_PKG_VERSION"));
    t.meta("schema", SCHEMA_VERSION);
    t.meta("command", command.name());
    t.meta("spec", serde_json::to_string(command).expect("run spec serializes"));
    t.meta("spec-sha256", command.spec_hash());
    if timestamp {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        t.meta("timestamp-unix", secs);
    }
    t
}

/// Running maxima of truncation diagnostics.
#[derive(Default)]
struct Truncation {
    n_max: usize,
    tail: f64,
    m_max: usize,
    warnings: usize,
}

impl Truncation {
    fn record(&mut self, n_max: usize, tail: f64, m_max: usize, warning: bool) {
        self.n_max = self.n_max.max(n_max);
        self.tail = self.tail.max(tail.abs());
        self.m_max = self.m_max.max(m_max);
        self.warnings += warning as usize;
    }

    fn write(&self, t: &mut Table, l_max: Option<usize>) {
        if let Some(l) = l_max {
            t.meta("lmax", l);
        }
        t.meta("n-max-reached", self.n_max);
        t.meta("m-max-reached", self.m_max);
        t.meta("max-tail-bound", format!("{:e}", self.tail));
        t.meta("richardson-warnings", self.warnings);
    }
}

fn check_ratio(ratio: f64) -> Result<GeometryConfig, CliError> {
    GeometryConfig::symmetric(ratio).map_err(|e| CliError::Spec(format!("--ratio-dR {ratio}: {e}")))
}

fn check_lmax(l: usize) -> Result<(), CliError> {
    if l == 0 {
        return Err(CliError::Spec("--lmax must be at least 1".into()));
    }
    Ok(())
}

fn effective_lmax(mode: Mode, l_max: usize) -> usize {
    if mode == Mode::SingleRoundTripDipole {
        1
    } else {
        l_max
    }
}

fn channel_cells(c: Option<&ChannelSet>) -> [Cell; 3] {
    match c {
        Some(c) => [c.tm.into(), c.te.into(), c.mixing().into()],
        None => [Cell::Empty, Cell::Empty, Cell::Empty],
    }
}

/// High-temperature perfect-conductor entropy of the same sphere pair, the
/// usual normalization.
fn sphere_ht_reference(geometry: GeometryConfig, mode: Mode, l_max: usize) -> Result<f64, CliError> {
    let pec = Material::perfect_conductor();
    let sys = SphereSphere::new(geometry, pec, pec, mode, l_max).map_err(CliError::at("high-temperature reference"))?;
    Ok(sys.ht_asymptotics().map_err(CliError::at("high-temperature reference"))?.s_ht)
}

fn echo_columns() -> [&'static str; 9] {
    ["geometry", "material", "ratio_dR", "gamma_d", "wp_d", "mode", "lmax", "n_max", "tail_bound"]
}

fn plane_plane_table(material: &DistanceMaterial, grid: &Grid, mut t: Table) -> Result<Table, CliError> {
    let mat = material.build()?;
    let mut table = Table::new(FIXED_COLUMNS.iter().copied().chain(echo_columns()).chain(["richardson_warning"]));
    std::mem::swap(&mut table.metadata, &mut t.metadata);
    let mut trunc = Truncation::default();
    for &tau in &grid.values {
        let s = pp_entropy(&PlanePlaneConfig::new(mat, tau)).map_err(CliError::at(format!("tau = {tau:e}")))?;
        let f = &s.free_energy;
        trunc.record(f.n_max, f.tail_bound, 0, s.richardson_warning);
        table.push(vec![
            tau.into(),
            s.total.into(),
            s.tm.into(),
            s.te.into(),
            0.0.into(),
            f.total.into(),
            f.tm.into(),
            f.te.into(),
            0.0.into(),
            s.error_estimate.into(),
            "plane-plane".into(),
            material_name(material.material).into(),
            Cell::Empty,
            material.gamma_d.into(),
            material.wp_d.into(),
            "lifshitz".into(),
            Cell::Empty,
            f.n_max.into(),
            f.tail_bound.into(),
            s.richardson_warning.into(),
        ]);
    }
    trunc.write(&mut table, None);
    table.meta("units", "S in k_B/d^2 per unit area, F in hbar c/d^3 per unit area");
    table.meta("S_HT_P", format!("{:e}", pec_high_temperature_entropy()));
    Ok(table)
}

fn material_name(m: MaterialChoice) -> &'static str {
    match m {
        MaterialChoice::Pec => "pec",
        MaterialChoice::Drude => "drude",
    }
}

fn mode_name(m: ModeChoice) -> &'static str {
    Mode::from(m).name()
}

fn entropy_vs_temperature(args: &TemperatureArgs, header: Table) -> Result<Table, CliError> {
    if args.geometry == GeometryChoice::PlanePlane {
        return plane_plane_table(&args.material, &args.tau_grid, header);
    }
    check_lmax(args.lmax)?;
    let geometry = check_ratio(args.ratio_dr)?;
    let mat = args.material.build()?;
    let mode = Mode::from(args.mode);
    let l_max = effective_lmax(mode, args.lmax);
    let sys = SphereSphere::new(geometry, mat, mat, mode, l_max)
        .map_err(CliError::at("configuration"))?
        .with_tolerance(ENTROPY_TOLERANCE);
    let mut table = Table::new(FIXED_COLUMNS.iter().copied().chain(echo_columns()).chain(["richardson_warning"]));
    table.metadata = header.metadata;
    let mut trunc = Truncation::default();
    for &tau in &args.tau_grid.values {
        let s = sys.entropy(tau).map_err(CliError::at(format!("tau = {tau:e}")))?;
        let f = &s.free_energy;
        trunc.record(f.n_max, f.tail_bound, f.m_max_used, s.richardson_warning);
        let mut row = vec![tau.into(), s.total.into()];
        row.extend(channel_cells(s.channels.as_ref()));
        row.push(f.total.into());
        row.extend(channel_cells(f.channels.as_ref()));
        row.extend([
            s.error_estimate.into(),
            "sphere-sphere".into(),
            material_name(args.material.material).into(),
            args.ratio_dr.into(),
            args.material.gamma_d.into(),
            args.material.wp_d.into(),
            mode_name(args.mode).into(),
            l_max.into(),
            f.n_max.into(),
            f.tail_bound.into(),
            s.richardson_warning.into(),
        ]);
        table.push(row);
    }
    trunc.write(&mut table, Some(l_max));
    table.meta("units", "S in k_B, F in hbar c/d, tau = 2 pi k_B T d/(hbar c)");
    table.meta("S_HT_P", format!("{:e}", sphere_ht_reference(geometry, mode, l_max)?));
    table.meta("scale-dR6", format!("{:e}", args.ratio_dr.powi(6)));
    Ok(table)
}

fn entropy_vs_distance(args: &DistanceArgs, header: Table) -> Result<Table, CliError> {
    check_lmax(args.lmax)?;
    if !(args.tau_r > 0.0 && args.tau_r.is_finite()) {
        return Err(CliError::Spec(format!("--tauR must be positive, got {}", args.tau_r)));
    }
    if args.modes.is_empty() {
        return Err(CliError::Spec("--modes must not be empty".into()));
    }
    let mat = build_material(args.material, args.wp_r, args.gamma_r, None, "--wp-R", "--gamma-R")?;
    let reference = [ModeChoice::Full, ModeChoice::Srt].into_iter().find(|m| args.modes.contains(m));
    let mut table = Table::new(FIXED_COLUMNS.iter().copied().chain([
        "ratio_dR",
        "tauR",
        "material",
        "gamma_R",
        "wp_R",
        "mode",
        "lmax",
        "n_max",
        "tail_bound",
        "richardson_warning",
        "rel_diff_dipole",
        "S_HT_P_dipole",
    ]));
    table.metadata = header.metadata;
    let mut trunc = Truncation::default();
    for &ratio in &args.dr_grid.values {
        let geometry = GeometryConfig::new(1.0, 1.0, ratio).map_err(|e| CliError::Spec(format!("d/R = {ratio}: {e}")))?;
        let mut results = Vec::with_capacity(args.modes.len());
        for &choice in &args.modes {
            let mode = Mode::from(choice);
            let l_max = effective_lmax(mode, args.lmax);
            let point = format!("d/R = {ratio:e}, mode = {}", mode.name());
            let sys = SphereSphere::new(geometry, mat, mat, mode, l_max)
                .map_err(CliError::at(point.clone()))?
                .with_tolerance(ENTROPY_TOLERANCE);
            results.push((choice, l_max, sys.entropy(args.tau_r).map_err(CliError::at(point))?));
        }
        let lookup = |m: ModeChoice| results.iter().find(|r| r.0 == m).map(|r| r.2.total);
        let rel = match (lookup(ModeChoice::Dipole), reference.and_then(lookup)) {
            (Some(dip), Some(exact)) => Some((dip - exact) / exact.abs()),
            _ => None,
        };
        // dipole high-temperature PEC entropy 15/4 (R/d)^6
        let s_ht_p = 3.75 * ratio.powi(-6);
        for (choice, l_max, s) in &results {
            let f = &s.free_energy;
            trunc.record(f.n_max, f.tail_bound, f.m_max_used, s.richardson_warning);
            let mut row = vec![args.tau_r.into(), s.total.into()];
            row.extend(channel_cells(s.channels.as_ref()));
            row.push(f.total.into());
            row.extend(channel_cells(f.channels.as_ref()));
            row.extend([
                s.error_estimate.into(),
                ratio.into(),
                args.tau_r.into(),
                material_name(args.material).into(),
                args.gamma_r.into(),
                args.wp_r.into(),
                mode_name(*choice).into(),
                (*l_max).into(),
                f.n_max.into(),
                f.tail_bound.into(),
                s.richardson_warning.into(),
                rel.into(),
                s_ht_p.into(),
            ]);
            table.push(row);
        }
    }
    trunc.write(&mut table, Some(args.lmax));
    table.meta("units", "S in k_B, F in hbar c/R, tau = tau_R = 2 pi k_B T R/(hbar c)");
    table.meta("rel-diff-reference", reference.map_or("none", mode_name));
    table.meta("S_HT_P", "per row in S_HT_P_dipole = 3.75 (R/d)^6");
    Ok(table)
}

fn channels(args: &ChannelArgs, header: Table) -> Result<Table, CliError> {
    if args.geometry == GeometryChoice::PlanePlane {
        return Err(CliError::Spec("channel decomposition needs --geometry sphere-sphere".into()));
    }
    check_lmax(args.lmax)?;
    let geometry = check_ratio(args.ratio_dr)?;
    let mat = args.material.build()?;
    let srt = SphereSphere::new(geometry, mat, mat, Mode::SingleRoundTrip, args.lmax)
        .map_err(CliError::at("configuration"))?
        .with_tolerance(ENTROPY_TOLERANCE)
        .with_pairs(true);
    let full = SphereSphere::new(geometry, mat, mat, Mode::FullLogDet, args.lmax)
        .map_err(CliError::at("configuration"))?
        .with_tolerance(ENTROPY_TOLERANCE);
    let pair_max = args.pair_lmax.min(args.lmax);
    let pairs: Vec<(usize, usize)> = (1..=pair_max).flat_map(|a| (1..=pair_max).map(move |b| (a, b))).collect();
    let mut columns: Vec<String> = FIXED_COLUMNS.iter().map(|s| s.to_string()).collect();
    columns.extend(echo_columns().iter().map(|s| s.to_string()));
    columns.extend(["observable", "S_total_full", "F_total_full"].map(String::from));
    columns.extend(pairs.iter().map(|(a, b)| format!("pair_{a}_{b}")));
    let mut table = Table { columns, ..Default::default() };
    table.metadata = header.metadata;
    let mut trunc = Truncation::default();
    for &tau in &args.tau_grid.values {
        let point = format!("tau = {tau:e}");
        let (s, f, pair_values) = match args.observable {
            Observable::Entropy => {
                let s = srt.entropy(tau).map_err(CliError::at(point.clone()))?;
                let f = s.free_energy.clone();
                let p = s.pairs.clone();
                (Some(s), f, p)
            }
            Observable::FreeEnergy => {
                let f = srt.free_energy(tau).map_err(CliError::at(point.clone()))?;
                let p = f.pairs.clone();
                (None, f, p)
            }
        };
        let (s_full, f_full) = match args.observable {
            Observable::Entropy => {
                let e = full.entropy(tau).map_err(CliError::at(point))?;
                (Some(e.total), e.free_energy.total)
            }
            Observable::FreeEnergy => (None, full.free_energy(tau).map_err(CliError::at(point))?.total),
        };
        trunc.record(f.n_max, f.tail_bound, f.m_max_used, s.as_ref().is_some_and(|s| s.richardson_warning));
        let mut row = vec![tau.into(), s.as_ref().map(|s| s.total).into()];
        row.extend(channel_cells(s.as_ref().and_then(|s| s.channels.as_ref())));
        row.push(f.total.into());
        row.extend(channel_cells(f.channels.as_ref()));
        row.extend([
            s.as_ref().map(|s| s.error_estimate).into(),
            "sphere-sphere".into(),
            material_name(args.material.material).into(),
            args.ratio_dr.into(),
            args.material.gamma_d.into(),
            args.material.wp_d.into(),
            "srt".into(),
            args.lmax.into(),
            f.n_max.into(),
            f.tail_bound.into(),
            match args.observable {
                Observable::Entropy => "entropy",
                Observable::FreeEnergy => "free-energy",
            }
            .into(),
            s_full.into(),
            f_full.into(),
        ]);
        let pair_values = pair_values.unwrap_or_default();
        row.extend(pairs.iter().map(|k| Cell::from(pair_values.get(k).copied())));
        table.push(row);
    }
    trunc.write(&mut table, Some(args.lmax));
    table.meta("units", "S in k_B, F in hbar c/d, tau = 2 pi k_B T d/(hbar c)");
    table.meta("pair-columns", "pair_a_b: reflection at order a on sphere 1 and order b on sphere 2, selected observable");
    table.meta("S_HT_P", format!("{:e}", sphere_ht_reference(geometry, Mode::SingleRoundTrip, args.lmax)?));
    table.meta("scale-dR6", format!("{:e}", args.ratio_dr.powi(6)));
    Ok(table)
}

fn mie(args: &MieArgs, header: Table) -> Result<Table, CliError> {
    check_lmax(args.lmax)?;
    let mat = build_material(args.material, args.wp_r, args.gamma_r, args.sigma_r, "--wp-R", "--gamma-R")?;
    let mut columns = vec!["kR".to_string()];
    columns.extend((1..=args.lmax).map(|l| format!("a_{l}")));
    columns.extend((1..=args.lmax).map(|l| format!("b_{l}")));
    columns.extend(["minus_b1_over_a1", "a2_over_a1", "rayleigh_minus_b1_over_a1", "regime"].map(String::from));
    let mut table = Table { columns, ..Default::default() };
    table.metadata = header.metadata;
    for &kr in &args.kr_grid.values {
        let point = format!("kR = {kr:e}");
        let coeffs = mie_table(&mat, args.lmax.max(2), kr, 1.0).map_err(CliError::at(point.clone()))?;
        let ratios = mie_ratios(&mat, kr, 1.0).map_err(CliError::at(point.clone()))?;
        // the two-term series is only defined for small kR
        let series = match mie_expansion(&mat, 1, kr, 1.0) {
            Ok((a, b)) => Some(-b / a),
            Err(Error::Domain(_)) => None,
            Err(e) => return Err(CliError::at(point)(e)),
        };
        let regime = regime_classify(&mat, kr, 1.0, RegimeThresholds::default()).map_err(CliError::at(point))?;
        let mut row: Vec<Cell> = vec![kr.into()];
        row.extend(coeffs[..args.lmax].iter().map(|c| Cell::from(c.a_value())));
        row.extend(coeffs[..args.lmax].iter().map(|c| Cell::from(c.b_value())));
        row.extend([
            ratios.te_over_tm.into(),
            ratios.quadrupole_over_dipole.into(),
            series.into(),
            format!("{regime:?}").to_lowercase().as_str().into(),
        ]);
        table.push(row);
    }
    let thresholds = RegimeThresholds::default();
    table.meta("material", material_name(args.material));
    table.meta("regime-thresholds", format!("rayleigh |b1/a1| < {}, multipole |a2/a1| > {}", thresholds.rayleigh, thresholds.multipole));
    table.meta("units", "kR = xi R/c; a = TM, b = TE");
    Ok(table)
}

/// Run one command and return its table.
pub fn run(command: &Command, timestamp: bool) -> Result<Table, CliError> {
    let header = header(command, timestamp);
    match command {
        Command::EntropyVsTemperature(a) => entropy_vs_temperature(a, header),
        Command::EntropyVsDistance(a) => entropy_vs_distance(a, header),
        Command::Channels(a) => channels(a, header),
        Command::MieTable(a) => mie(a, header),
        Command::PlanePlane(a) => plane_plane_table(&a.material, &a.tau_grid, header),
    }
}

/// Parse, run and write; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("casimir: {e}");
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    if let Some(n) = cli.output.threads {
        if n == 0 {
            return Err(CliError::Spec("--threads must be at least 1".into()));
        }
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let table = run(&cli.command, !cli.output.no_timestamp)?;
    let mut buffer = Vec::new();
    match cli.output.format {
        Format::Csv => table.write_csv(&mut buffer)?,
        Format::Json => table.write_json(&mut buffer)?,
    }
    match &cli.output.output {
        Some(path) => std::fs::write(path, buffer)?,
        None => std::io::stdout().write_all(&buffer)?,
    }
    Ok(())
}
