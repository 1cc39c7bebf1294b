//! Experiment harness: builds or loads a circuit, simulates it (ideal and
//! noisy), runs tomography, scores the result and checks saved reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::{self, Circuit, PrepSpec, RouterExperiment};
use crate::linalg;
use crate::noise::{self, NoiseModel};
use crate::qasm::{self, CouplingMap, TranspileError};
use crate::qstate::{self, Bipartition, DensityMatrix, StateVector};
use crate::scalar::C;
use crate::tomography::{self, TomographyDataset};

/// Widest custom circuit the harness will simulate.
pub const MAX_EXPERIMENT_QUBITS: usize = 8;

/// Logical-to-device placement used for transpiled three-qubit runs.
pub const DEFAULT_LAYOUT: [usize; 3] = [2, 0, 1];

/// Seed offset for the second (null-path) single-qubit tomography run.
const NULL_PATH_SEED_MASK: u64 = 1 << 32;

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment: {0}")]
    InvalidSpec(String),
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Parse(String),
    #[error(transparent)]
    Unroutable(TranspileError),
    #[error("simulation failed: {0}")]
    Simulation(String),
}

impl ExperimentError {
    /// Process exit code for the CLI.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::InvalidSpec(_) | Self::Simulation(_) => 1,
            Self::Io { .. } | Self::Parse(_) => 2,
            Self::Unroutable(_) => 3,
        }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Self::Io { path: path.display().to_string(), message: err.to_string() }
    }

    fn sim(err: impl std::fmt::Display) -> Self {
        Self::Simulation(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, ExperimentError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExperimentKind {
    #[serde(rename = "router-superposition")]
    RouterSuperposition,
    #[serde(rename = "router-control0")]
    RouterControl0,
    #[serde(rename = "router-control1")]
    RouterControl1,
    #[serde(rename = "custom")]
    Custom,
}

impl ExperimentKind {
    pub fn router(self) -> Option<RouterExperiment> {
        match self {
            Self::RouterSuperposition => Some(RouterExperiment::Superposition),
            Self::RouterControl0 => Some(RouterExperiment::Control0),
            Self::RouterControl1 => Some(RouterExperiment::Control1),
            Self::Custom => None,
        }
    }

    pub fn name(self) -> &'static str {
        self.router().map_or("custom", RouterExperiment::name)
    }

    fn is_classical_control(self) -> bool {
        matches!(self, Self::RouterControl0 | Self::RouterControl1)
    }
}

impl From<RouterExperiment> for ExperimentKind {
    fn from(e: RouterExperiment) -> Self {
        match e {
            RouterExperiment::Superposition => Self::RouterSuperposition,
            RouterExperiment::Control0 => Self::RouterControl0,
            RouterExperiment::Control1 => Self::RouterControl1,
        }
    }
}

impl std::str::FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "custom" {
            return Ok(Self::Custom);
        }
        s.parse::<RouterExperiment>().map(Self::from)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CircuitSource {
    Builder,
    Qasm(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TomographyMode {
    Full,
    Routed,
    None,
}

impl std::str::FromStr for TomographyMode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "full" => Ok(Self::Full),
            "routed" | "routed-qubit" => Ok(Self::Routed),
            "none" => Ok(Self::None),
            _ => Err(format!("unknown tomography mode `{s}` (expected full, routed or none)")),
        }
    }
}

/// Everything needed to reproduce a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub name: ExperimentKind,
    pub circuit_source: CircuitSource,
    /// `none`, a preset name, or a device JSON path.
    pub noise: String,
    pub shots: u64,
    pub seed: u64,
    pub tomography: TomographyMode,
    #[serde(default)]
    pub settings_per_observable: bool,
    /// Coupling-map preset name or JSON path.
    #[serde(default)]
    pub transpile: Option<String>,
    #[serde(default)]
    pub layout: Option<Vec<usize>>,
}

impl ExperimentSpec {
    /// Builder-circuit experiment with default shots, seed 0 and no noise.
    pub fn router(e: RouterExperiment) -> Self {
        Self {
            name: e.into(),
            circuit_source: CircuitSource::Builder,
            noise: "none".into(),
            shots: 8192,
            seed: 0,
            tomography: Self::default_tomography(e.into()),
            settings_per_observable: false,
            transpile: None,
            layout: None,
        }
    }

    pub fn custom(path: impl Into<PathBuf>) -> Self {
        Self {
            name: ExperimentKind::Custom,
            circuit_source: CircuitSource::Qasm(path.into()),
            tomography: TomographyMode::Full,
            ..Self::router(RouterExperiment::Superposition)
        }
    }

    /// Single-qubit tomography for the classical-control cases, full otherwise.
    pub fn default_tomography(kind: ExperimentKind) -> TomographyMode {
        if kind.is_classical_control() {
            TomographyMode::Routed
        } else {
            TomographyMode::Full
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(ExperimentError::InvalidSpec(m.into()));
        match (&self.name, &self.circuit_source) {
            (ExperimentKind::Custom, CircuitSource::Builder) => return bad("custom experiments need a QASM circuit"),
            (k, CircuitSource::Qasm(_)) if *k != ExperimentKind::Custom => {
                return bad("named router experiments use the built-in circuit")
            }
            _ => {}
        }
        if self.tomography == TomographyMode::Routed && !self.name.is_classical_control() {
            return bad("routed tomography is only defined for router-control0 and router-control1");
        }
        if self.tomography != TomographyMode::None && self.shots == 0 {
            return bad("shots must be at least 1");
        }
        if self.settings_per_observable && self.tomography != TomographyMode::Full {
            return bad("--settings-per-observable requires full tomography");
        }
        if self.layout.is_some() && self.transpile.is_none() {
            return bad("a layout is only meaningful together with a coupling map");
        }
        Ok(())
    }
}

fn read_file(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| ExperimentError::io(path, e))
}

fn load_noise(name: &str) -> Result<NoiseModel> {
    if let Some(m) = NoiseModel::preset(name) {
        return Ok(m);
    }
    let path = Path::new(name);
    let text = read_file(path)?;
    NoiseModel::from_json(&text).map_err(|e| ExperimentError::Parse(format!("{}: {e}", path.display())))
}

fn load_coupling(name: &str) -> Result<CouplingMap> {
    if let Some(m) = CouplingMap::preset(name) {
        return Ok(m);
    }
    let path = Path::new(name);
    let text = read_file(path)?;
    CouplingMap::from_json(&text).map_err(|e| ExperimentError::Parse(format!("{}: {e}", path.display())))
}

/// The logical circuit of `spec`, without measurements.
pub fn load_circuit(spec: &ExperimentSpec) -> Result<Circuit> {
    let c = match (&spec.circuit_source, spec.name.router()) {
        (CircuitSource::Builder, Some(e)) => e.circuit(),
        (CircuitSource::Qasm(path), _) => {
            let text = read_file(path)?;
            qasm::parse(&text).map_err(|e| ExperimentError::Parse(format!("{}:{e}", path.display())))?
        }
        (CircuitSource::Builder, None) => {
            return Err(ExperimentError::InvalidSpec("custom experiments need a QASM circuit".into()))
        }
    };
    if c.n_qubits() > MAX_EXPERIMENT_QUBITS {
        return Err(ExperimentError::InvalidSpec(format!(
            "circuit has {} qubits; at most {MAX_EXPERIMENT_QUBITS} are supported",
            c.n_qubits()
        )));
    }
    Ok(c.without_measurements())
}

/// Final logical-qubit density matrix, optionally routed through a device.
fn simulate_physical(spec: &ExperimentSpec, logical: &Circuit, model: &NoiseModel) -> Result<DensityMatrix<f64>> {
    let n = logical.n_qubits();
    let Some(map_name) = &spec.transpile else {
        return run_density(logical, model);
    };
    let map = load_coupling(map_name)?;
    let layout = match &spec.layout {
        Some(l) => l.clone(),
        None if n == DEFAULT_LAYOUT.len() => DEFAULT_LAYOUT.to_vec(),
        None => (0..n).collect(),
    };
    if layout.len() != n {
        return Err(ExperimentError::InvalidSpec(format!("layout has {} entries for {n} qubits", layout.len())));
    }
    let placed = logical
        .remap(&layout, map.n_qubits())
        .map_err(|e| ExperimentError::InvalidSpec(format!("layout: {e}")))?;
    let routed = qasm::transpile(&placed, &map).map_err(|e| match e {
        TranspileError::UnroutableCnot { .. } => ExperimentError::Unroutable(e),
        other => ExperimentError::InvalidSpec(other.to_string()),
    })?;
    let full = run_density(&routed, model)?;
    let mut kept = layout.clone();
    kept.sort_unstable();
    let reduced = qstate::partial_trace(&full, &kept).map_err(ExperimentError::sim)?;
    let order: Vec<usize> = layout.iter().map(|d| kept.iter().position(|k| k == d).expect("kept")).collect();
    reduced.permute_qubits(&order).map_err(ExperimentError::sim)
}

fn run_density(c: &Circuit, model: &NoiseModel) -> Result<DensityMatrix<f64>> {
    if model.is_noiseless() {
        return Ok(qstate::to_density(&gates::simulate(c).map_err(ExperimentError::sim)?));
    }
    noise::simulate_noisy(c, model).map_err(|e| match e {
        noise::NoiseError::DeviceTooSmall { .. } => ExperimentError::InvalidSpec(e.to_string()),
        other => ExperimentError::sim(other),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timestamps {
    pub started_unix_ms: u128,
    pub finished_unix_ms: u128,
}

fn now_ms() -> u128 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis())
}

/// Machine-readable result of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub spec: ExperimentSpec,
    /// Ideal final state of the logical circuit, `[re, im]` per amplitude.
    pub ideal_state: Vec<[f64; 2]>,
    /// Logical qubits covered by `reconstructed`, ascending.
    pub reconstructed_qubits: Vec<usize>,
    pub reconstructed: DensityMatrix<f64>,
    /// Fidelity of `reconstructed` to the ideal state reduced to `reconstructed_qubits`.
    pub fidelity: f64,
    /// Routed mode only: fidelity of the empty path to `|+⟩`.
    pub null_path_fidelity: Option<f64>,
    /// Control qubit versus all other qubits.
    pub negativity: Option<f64>,
    /// `reconstructed` or `simulated` (single-qubit tomography cannot see entanglement).
    pub negativity_source: String,
    pub entropy_control_bits: f64,
    pub seed: u64,
    pub rng: String,
    pub counts_file: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamps: Option<Timestamps>,
}

impl ExperimentReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ExperimentError::Parse(format!("report: {e}")))
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::from_json(&read_file(path)?)
    }

    pub fn ideal_state(&self) -> Result<StateVector<f64>> {
        let n = self.ideal_state.len().trailing_zeros() as usize;
        let amps = self.ideal_state.iter().map(|&[re, im]| C::new(re, im)).collect();
        StateVector::new(n, amps).map_err(|e| ExperimentError::Parse(format!("ideal_state: {e}")))
    }
}

/// Report plus the tomography counts that produced it.
#[derive(Debug, Clone)]
pub struct ExperimentRun {
    pub report: ExperimentReport,
    pub dataset: Option<TomographyDataset>,
}

fn ideal_target(ideal: &StateVector<f64>, qubits: &[usize]) -> Result<DensityMatrix<f64>> {
    let full = qstate::to_density(ideal);
    if qubits.len() == ideal.n_qubits() {
        Ok(full)
    } else {
        qstate::partial_trace(&full, qubits).map_err(ExperimentError::sim)
    }
}

fn single_qubit_tomography(
    state: &DensityMatrix<f64>,
    qubit: usize,
    spec: &ExperimentSpec,
    seed: u64,
    p_readout: f64,
) -> Result<(DensityMatrix<f64>, TomographyDataset)> {
    let reduced = qstate::partial_trace(state, &[qubit]).map_err(ExperimentError::sim)?;
    let settings = tomography::settings_for(1).map_err(ExperimentError::sim)?;
    let dataset =
        tomography::collect_dataset(&reduced, &settings, spec.shots, seed, p_readout).map_err(ExperimentError::sim)?;
    let rec = tomography::reconstruct(&dataset).map_err(ExperimentError::sim)?;
    Ok((rec, dataset))
}

fn control_entropy(rho: &DensityMatrix<f64>) -> Result<f64> {
    if rho.n_qubits() == 1 {
        return Ok(qstate::von_neumann_entropy(rho));
    }
    let control = qstate::partial_trace(rho, &[0]).map_err(ExperimentError::sim)?;
    Ok(qstate::von_neumann_entropy(&control))
}

fn control_negativity(rho: &DensityMatrix<f64>) -> Result<Option<f64>> {
    if rho.n_qubits() < 2 {
        return Ok(None);
    }
    let cut = Bipartition::split_off(&[0], rho.n_qubits());
    qstate::negativity(rho, &cut).map(Some).map_err(ExperimentError::sim)
}

/// Runs the full pipeline. `timestamps` adds wall-clock times to the report.
pub fn run_experiment(spec: &ExperimentSpec, timestamps: bool) -> Result<ExperimentRun> {
    let started = now_ms();
    spec.validate()?;
    let model = load_noise(&spec.noise)?;
    let logical = load_circuit(spec)?;
    let n = logical.n_qubits();
    let ideal = gates::simulate::<f64>(&logical).map_err(ExperimentError::sim)?;
    let noisy = simulate_physical(spec, &logical, &model)?;
    log::info!("{}: simulated {n} qubits with noise `{}`", spec.name.name(), spec.noise);

    let p_readout = model.p_readout;
    let (reconstructed, qubits, dataset, null_path_fidelity) = match spec.tomography {
        TomographyMode::None => (noisy.clone(), (0..n).collect::<Vec<_>>(), None, None),
        TomographyMode::Full => {
            let settings = if spec.settings_per_observable {
                tomography::settings_per_observable(n)
            } else {
                tomography::settings_for(n)
            }
            .map_err(ExperimentError::sim)?;
            let ds = tomography::collect_dataset(&noisy, &settings, spec.shots, spec.seed, p_readout)
                .map_err(ExperimentError::sim)?;
            let rec = tomography::reconstruct(&ds).map_err(ExperimentError::sim)?;
            (rec, (0..n).collect(), Some(ds), None)
        }
        TomographyMode::Routed => {
            let e = spec.name.router().expect("validated");
            let routed = e.routed_qubit().expect("validated");
            let null = 3 - routed;
            let (rec, ds) = single_qubit_tomography(&noisy, routed, spec, spec.seed, p_readout)?;
            let (null_rec, _) = single_qubit_tomography(&noisy, null, spec, spec.seed ^ NULL_PATH_SEED_MASK, p_readout)?;
            let plus = qstate::to_density(&PrepSpec::Plus.state::<f64>());
            let null_f = tomography::fidelity(&null_rec, &plus).map_err(ExperimentError::sim)?;
            (rec, vec![routed], Some(ds), Some(null_f))
        }
    };

    let target = ideal_target(&ideal, &qubits)?;
    let fidelity = tomography::fidelity(&reconstructed, &target).map_err(ExperimentError::sim)?;
    let (entangled_state, negativity_source) = if qubits.len() == n {
        (&reconstructed, "reconstructed")
    } else {
        (&noisy, "simulated")
    };
    let negativity = control_negativity(entangled_state)?;
    let entropy_control_bits = control_entropy(entangled_state)?;

    let report = ExperimentReport {
        spec: spec.clone(),
        ideal_state: qstate::amplitudes_to_pairs(&ideal),
        reconstructed_qubits: qubits,
        reconstructed,
        fidelity,
        null_path_fidelity,
        negativity,
        negativity_source: negativity_source.into(),
        entropy_control_bits,
        seed: spec.seed,
        rng: tomography::RNG_NAME.into(),
        counts_file: None,
        timestamps: timestamps.then(|| Timestamps { started_unix_ms: started, finished_unix_ms: now_ms() }),
    };
    Ok(ExperimentRun { report, dataset })
}

/// `report.json` → `report.counts.json` in the same directory.
pub fn counts_path_for(report_path: &Path) -> PathBuf {
    let stem = report_path.file_stem().map_or_else(|| "report".into(), |s| s.to_string_lossy().into_owned());
    report_path.with_file_name(format!("{stem}.counts.json"))
}

/// Writes the counts file (if any) beside the report, then the report itself.
pub fn write_run(run: &mut ExperimentRun, report_path: &Path) -> Result<()> {
    if let Some(ds) = &run.dataset {
        let counts = counts_path_for(report_path);
        std::fs::write(&counts, ds.to_json() + "\n").map_err(|e| ExperimentError::io(&counts, e))?;
        run.report.counts_file = counts.file_name().map(|f| f.to_string_lossy().into_owned());
    }
    std::fs::write(report_path, run.report.to_json()).map_err(|e| ExperimentError::io(report_path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Part {
    Real,
    Imag,
}

impl std::str::FromStr for Part {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "real" | "re" => Ok(Self::Real),
            "imag" | "im" => Ok(Self::Imag),
            _ => Err(format!("unknown part `{s}` (expected real or imag)")),
        }
    }
}

/// `|0⟩, |1⟩` or `|000⟩ … |111⟩`.
pub fn ket_labels(n_qubits: usize) -> Vec<String> {
    (0..1usize << n_qubits).map(|i| format!("|{i:0n_qubits$b}⟩")).collect()
}

/// CSV of one part of the reconstructed matrix with ket labels on both axes.
pub fn emit_figure_data(report: &ExperimentReport, part: Part) -> String {
    let m = report.reconstructed.entries();
    let labels = ket_labels(report.reconstructed.n_qubits());
    let mut out = String::new();
    writeln!(out, ",{}", labels.join(",")).unwrap();
    for (i, label) in labels.iter().enumerate() {
        let row: Vec<String> = m
            .row(i)
            .iter()
            .map(|z| match part {
                Part::Real => z.re,
                Part::Imag => z.im,
            })
            .map(|v| (v + 0.0).to_string())
            .collect();
        writeln!(out, "{label},{}", row.join(",")).unwrap();
    }
    out
}

/// One line of `verify` output.
#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl std::fmt::Display for Check {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}: {}", if self.passed { "PASS" } else { "FAIL" }, self.name, self.detail)
    }
}

/// Accepted fidelity range for a report, by experiment and conditions.
pub fn fidelity_band(spec: &ExperimentSpec) -> (f64, f64) {
    let ideal_noise = NoiseModel::preset(&spec.noise).is_some_and(|m| m.is_noiseless());
    match (spec.name, ideal_noise, spec.tomography) {
        (ExperimentKind::Custom, _, _) => (0.0, 1.0),
        (_, true, TomographyMode::None) => (1.0 - 1e-9, 1.0),
        (_, true, TomographyMode::Routed) => (0.99, 1.0),
        (_, true, TomographyMode::Full) => (0.98, 1.0),
        (_, false, _) => (0.90, 0.995),
    }
}

/// Re-checks a saved report. Every check is reported; the run passes iff all do.
pub fn verify(report: &ExperimentReport) -> Vec<Check> {
    let mut checks = Vec::new();
    let mut push = |name: &str, passed: bool, detail: String| checks.push(Check { name: name.into(), passed, detail });

    let entries = report.reconstructed.entries().clone();
    let herm = linalg::hermiticity_error(&entries);
    push("hermitian", herm <= 1e-9, format!("max |ρ − ρ†| = {herm:.3e}"));
    let tr = linalg::trace(&entries);
    push("unit trace", (tr.re - 1.0).abs() <= 1e-9 && tr.im.abs() <= 1e-9, format!("Tr ρ = {:.12}", tr.re));
    let min_eig = linalg::hermitian_eigen(&entries).values.first().copied().unwrap_or(f64::NAN);
    push("positive semidefinite", min_eig >= -1e-7, format!("min eigenvalue {min_eig:.3e}"));
    let physical = DensityMatrix::new(entries);

    let ideal = report.ideal_state();
    push(
        "ideal state normalized",
        ideal.is_ok(),
        ideal.as_ref().map_or_else(|e| e.to_string(), |s| format!("{} qubits", s.n_qubits())),
    );

    let recomputed = match (&physical, &ideal) {
        (Ok(rho), Ok(psi)) => ideal_target(psi, &report.reconstructed_qubits)
            .ok()
            .filter(|t| t.dim() == rho.dim())
            .and_then(|t| tomography::fidelity(rho, &t).ok()),
        _ => None,
    };
    match recomputed {
        Some(f) => push(
            "fidelity consistent",
            (f - report.fidelity).abs() <= 1e-9,
            format!("reported {:.6}, recomputed {f:.6}", report.fidelity),
        ),
        None => push("fidelity consistent", false, "cannot recompute from reconstructed state".into()),
    }

    let (lo, hi) = fidelity_band(&report.spec);
    push(
        "fidelity band",
        (lo..=hi).contains(&report.fidelity),
        format!("{:.6} in [{lo}, {hi}]", report.fidelity),
    );

    if let Some(f) = report.null_path_fidelity {
        push("null path fidelity", f >= 0.9, format!("{f:.6} ≥ 0.9"));
    }

    let ideal_run = fidelity_band(&report.spec).0 > 0.99 && report.spec.tomography == TomographyMode::None;
    match (report.spec.name, report.negativity) {
        (ExperimentKind::RouterSuperposition, Some(n)) => push("entanglement", n > 0.1, format!("negativity {n:.6} > 0.1")),
        (k, Some(n)) if k.is_classical_control() => {
            let limit = if ideal_run { 1e-6 } else { 0.02 };
            push("no entanglement", n <= limit, format!("negativity {n:.3e} ≤ {limit}"))
        }
        (ExperimentKind::Custom, _) => {}
        (_, None) => push("entanglement", false, "negativity missing".into()),
        _ => {}
    }
    checks
}
