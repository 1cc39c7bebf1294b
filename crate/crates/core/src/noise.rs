//! Kraus-channel noise and the density-matrix simulator driven by a device
//! calibration table.
//!
//! After every gate the simulator applies, in order: the gate unitary, a
//! depolarizing channel on the touched qubits (`p1` or `p2`), then amplitude
//! damping and pure dephasing for the gate duration on each touched qubit,
//! using that qubit's `T1`/`T2`. Idle qubits do not decohere.

use ndarray::Array2;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::{Circuit, CircuitError};
use crate::linalg::{self, CMatrix};
use crate::qstate::DensityMatrix;
use crate::scalar::{cr, Real, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NoiseError {
    #[error("probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("{0} must be positive")]
    NonPositiveTime(&'static str),
    #[error("negative duration {0}")]
    NegativeDuration(f64),
    #[error("channel acts on {channel} qubits but {given} were given")]
    DimensionMismatch { channel: usize, given: usize },
    #[error("Kraus operators are not trace preserving (deviation {0})")]
    NotTracePreserving(f64),
    #[error("Kraus operators must be non-empty square matrices of equal power-of-two size")]
    MalformedOperators,
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),
    #[error("circuit needs {needed} qubits but the device describes {available}")]
    DeviceTooSmall { needed: usize, available: usize },
    #[error("qubit {0} out of range for the density matrix")]
    QubitOutOfRange(usize),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

pub type Result<T> = std::result::Result<T, NoiseError>;

/// One row of the device calibration table.
///
/// Only `t1_us` and `t2_us` enter the noise model; the other fields are kept
/// so a device file round-trips without loss.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QubitParams {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub resonator_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub qubit_ghz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anharmonicity_mhz: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chi_khz: Option<f64>,
    pub t1_us: f64,
    pub t2_us: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceParams {
    pub qubits: Vec<QubitParams>,
}

impl DeviceParams {
    /// Calibration of the five-qubit ibmqx4 chip.
    pub fn ibmqx4() -> Self {
        let row = |res, freq, anh, chi, t1, t2| QubitParams {
            resonator_ghz: Some(res),
            qubit_ghz: Some(freq),
            anharmonicity_mhz: Some(anh),
            chi_khz: Some(chi),
            t1_us: t1,
            t2_us: t2,
        };
        Self {
            qubits: vec![
                row(6.52396, 5.2461, -330.1, 410.0, 35.2, 38.1),
                row(6.48078, 5.3025, -329.7, 512.0, 57.5, 40.5),
                row(6.43875, 5.3025, -329.7, 408.0, 36.6, 54.8),
                row(6.58036, 5.4317, -327.9, 434.0, 43.0, 42.1),
                row(6.52698, 5.1824, -332.5, 458.0, 49.5, 19.2),
            ],
        }
    }

    fn validate(&self) -> Result<()> {
        for (i, q) in self.qubits.iter().enumerate() {
            if !(q.t1_us > 0.0) {
                return Err(NoiseError::NonPositiveTime("T1"));
            }
            if !(q.t2_us > 0.0) {
                return Err(NoiseError::NonPositiveTime("T2"));
            }
            if q.t2_us > 2.0 * q.t1_us {
                log::warn!("qubit {i}: T2 = {} µs exceeds 2·T1 = {} µs; pure dephasing clamped to zero", q.t2_us, 2.0 * q.t1_us);
            }
        }
        Ok(())
    }
}

fn default_p1() -> f64 {
    1e-3
}
fn default_p2() -> f64 {
    1e-2
}
fn default_p_readout() -> f64 {
    0.02
}
fn default_dur_1q() -> f64 {
    100.0
}
fn default_dur_2q() -> f64 {
    400.0
}

/// Device calibration plus gate and readout error parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    #[serde(flatten)]
    pub device: DeviceParams,
    #[serde(default = "default_p1")]
    pub p1: f64,
    #[serde(default = "default_p2")]
    pub p2: f64,
    #[serde(default = "default_p_readout")]
    pub p_readout: f64,
    #[serde(default = "default_dur_1q", rename = "dur_1q_ns")]
    pub dur_1q: f64,
    #[serde(default = "default_dur_2q", rename = "dur_2q_ns")]
    pub dur_2q: f64,
}

impl NoiseModel {
    /// ibmqx4 calibration with the default error rates and gate durations.
    pub fn ibmqx4() -> Self {
        Self {
            device: DeviceParams::ibmqx4(),
            p1: default_p1(),
            p2: default_p2(),
            p_readout: default_p_readout(),
            dur_1q: default_dur_1q(),
            dur_2q: default_dur_2q(),
        }
    }

    /// All error rates and durations zero.
    pub fn noiseless() -> Self {
        Self::ibmqx4().scaled(0.0).with_readout(0.0)
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "ibmqx4" => Some(Self::ibmqx4()),
            "none" | "noiseless" => Some(Self::noiseless()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> std::result::Result<Self, String> {
        let model: Self = serde_json::from_str(text).map_err(|e| e.to_string())?;
        model.validate().map_err(|e| e.to_string())?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        for p in [self.p1, self.p2, self.p_readout] {
            check_probability(p)?;
        }
        for d in [self.dur_1q, self.dur_2q] {
            if !(d >= 0.0) {
                return Err(NoiseError::NegativeDuration(d));
            }
        }
        self.device.validate()
    }

    /// Multiplies gate error probabilities (capped at 1) and durations by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            p1: (self.p1 * factor).min(1.0),
            p2: (self.p2 * factor).min(1.0),
            dur_1q: self.dur_1q * factor,
            dur_2q: self.dur_2q * factor,
            ..self.clone()
        }
    }

    pub fn with_readout(mut self, p: f64) -> Self {
        self.p_readout = p;
        self
    }

    pub fn is_noiseless(&self) -> bool {
        self.p1 == 0.0 && self.p2 == 0.0 && self.dur_1q == 0.0 && self.dur_2q == 0.0 && self.p_readout == 0.0
    }
}

fn check_probability(p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(NoiseError::InvalidProbability(p))
    }
}

/// Trace-preserving set of Kraus operators.
#[derive(Debug, Clone, PartialEq)]
pub struct KrausChannel<T: Real> {
    ops: Vec<CMatrix<T>>,
    n_qubits: usize,
}

impl<T: Real> KrausChannel<T> {
    pub fn new(ops: Vec<CMatrix<T>>) -> Result<Self> {
        let dim = ops.first().map(|k| k.nrows()).ok_or(NoiseError::MalformedOperators)?;
        if dim == 0 || !dim.is_power_of_two() || ops.iter().any(|k| k.dim() != (dim, dim)) {
            return Err(NoiseError::MalformedOperators);
        }
        let ch = Self { ops, n_qubits: dim.trailing_zeros() as usize };
        let err = ch.completeness_error();
        if err > T::invariant_tol() {
            return Err(NoiseError::NotTracePreserving(err.as_f64()));
        }
        Ok(ch)
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self { ops: vec![linalg::identity(1 << n_qubits)], n_qubits }
    }

    pub fn operators(&self) -> &[CMatrix<T>] {
        &self.ops
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    /// Largest elementwise deviation of `Σ K†K` from the identity.
    pub fn completeness_error(&self) -> T {
        let dim = 1 << self.n_qubits;
        let sum = self
            .ops
            .iter()
            .fold(Array2::from_elem((dim, dim), C::zero()), |acc, k| acc + linalg::adjoint(k).dot(k));
        linalg::max_abs_diff(&sum, &linalg::identity(dim))
    }

    fn is_identity(&self) -> bool {
        self.ops.len() == 1 && linalg::max_abs_diff(&self.ops[0], &linalg::identity(1 << self.n_qubits)) == T::zero()
    }
}

/// Energy relaxation for a duration `t_ns` on a qubit with `T1 = t1_us`.
pub fn amplitude_damping<T: Real>(t_ns: f64, t1_us: f64) -> Result<KrausChannel<T>> {
    if !(t1_us > 0.0) {
        return Err(NoiseError::NonPositiveTime("T1"));
    }
    if !(t_ns >= 0.0) {
        return Err(NoiseError::NegativeDuration(t_ns));
    }
    let gamma = T::lit(damping_gamma(t_ns, t1_us));
    let z = C::zero();
    let k0 = ndarray::array![[C::one(), z], [z, cr((T::one() - gamma).sqrt())]];
    let k1 = ndarray::array![[z, cr(gamma.sqrt())], [z, z]];
    KrausChannel::new(vec![k0, k1])
}

/// `γ = 1 − e^{−t/T1}` with `t` in ns and `T1` in µs.
pub fn damping_gamma(t_ns: f64, t1_us: f64) -> f64 {
    -(-t_ns / (t1_us * 1e3)).exp_m1()
}

/// Pure-dephasing rate `1/T2 − 1/(2·T1)` in 1/µs, clamped at zero.
pub fn dephasing_rate(t1_us: f64, t2_us: f64) -> f64 {
    (1.0 / t2_us - 1.0 / (2.0 * t1_us)).max(0.0)
}

/// Pure dephasing for a duration `t_ns`; off-diagonals decay by `e^{−t·Γφ}`.
pub fn phase_damping<T: Real>(t_ns: f64, t1_us: f64, t2_us: f64) -> Result<KrausChannel<T>> {
    if !(t1_us > 0.0) {
        return Err(NoiseError::NonPositiveTime("T1"));
    }
    if !(t2_us > 0.0) {
        return Err(NoiseError::NonPositiveTime("T2"));
    }
    if !(t_ns >= 0.0) {
        return Err(NoiseError::NegativeDuration(t_ns));
    }
    let lambda = T::lit((-t_ns * 1e-3 * dephasing_rate(t1_us, t2_us)).exp());
    let z = C::zero();
    let k0 = ndarray::array![[C::one(), z], [z, cr(lambda)]];
    let k1 = ndarray::array![[z, z], [z, cr((T::one() - lambda * lambda).max(T::zero()).sqrt())]];
    KrausChannel::new(vec![k0, k1])
}

fn pauli_matrices<T: Real>() -> [CMatrix<T>; 4] {
    let (o, z) = (C::<T>::one(), C::<T>::zero());
    let i = C::new(T::zero(), T::one());
    [
        ndarray::array![[o, z], [z, o]],
        ndarray::array![[z, o], [o, z]],
        ndarray::array![[z, -i], [i, z]],
        ndarray::array![[o, z], [z, -o]],
    ]
}

/// `ρ → (1−p)ρ + p·I/2^n` on one or two qubits, via the Pauli Kraus set.
pub fn depolarizing<T: Real>(p: f64, n_qubits: usize) -> Result<KrausChannel<T>> {
    check_probability(p)?;
    if !(1..=2).contains(&n_qubits) {
        return Err(NoiseError::DimensionMismatch { channel: n_qubits, given: n_qubits });
    }
    let paulis = pauli_matrices::<T>();
    let terms: Vec<CMatrix<T>> = if n_qubits == 1 {
        paulis.to_vec()
    } else {
        paulis.iter().flat_map(|a| paulis.iter().map(move |b| linalg::kron(a, b))).collect()
    };
    let n_terms = terms.len() as f64;
    let ops = terms
        .into_iter()
        .enumerate()
        .filter_map(|(idx, m)| {
            let w = if idx == 0 { 1.0 - p + p / n_terms } else { p / n_terms };
            (w > 0.0).then(|| m.mapv(|z| z * cr(T::lit(w.sqrt()))))
        })
        .collect();
    KrausChannel::new(ops)
}

/// `Σ K ρ K†` with the channel embedded on `qubits`.
pub fn apply_channel<T: Real>(rho: &DensityMatrix<T>, ch: &KrausChannel<T>, qubits: &[usize]) -> Result<DensityMatrix<T>> {
    if ch.n_qubits() != qubits.len() {
        return Err(NoiseError::DimensionMismatch { channel: ch.n_qubits(), given: qubits.len() });
    }
    if let Some(&q) = qubits.iter().find(|&&q| q >= rho.n_qubits()) {
        return Err(NoiseError::QubitOutOfRange(q));
    }
    let mut entries = rho.entries().clone();
    apply_channel_in_place(&mut entries, ch, qubits, rho.n_qubits());
    Ok(DensityMatrix::from_matrix_unchecked(rho.n_qubits(), entries))
}

fn apply_channel_in_place<T: Real>(rho: &mut CMatrix<T>, ch: &KrausChannel<T>, qubits: &[usize], n: usize) {
    if ch.is_identity() {
        return;
    }
    let mut acc: CMatrix<T> = Array2::from_elem(rho.dim(), C::zero());
    for k in ch.operators() {
        let mut term = rho.clone();
        linalg::conjugate_local(k, qubits, n, &mut term);
        acc.zip_mut_with(&term, |a, &b| *a = *a + b);
    }
    *rho = acc;
}

/// Per-qubit relaxation channels for one gate duration.
struct Decoherence<T: Real> {
    damping: KrausChannel<T>,
    dephasing: KrausChannel<T>,
}

impl<T: Real> Decoherence<T> {
    fn new(t_ns: f64, q: &QubitParams) -> Result<Self> {
        Ok(Self { damping: amplitude_damping(t_ns, q.t1_us)?, dephasing: phase_damping(t_ns, q.t1_us, q.t2_us)? })
    }
}

/// Density-matrix simulation of `c` from `|0…0⟩` under `model`.
pub fn simulate_noisy<T: Real>(c: &Circuit, model: &NoiseModel) -> Result<DensityMatrix<T>> {
    model.validate()?;
    let n = c.n_qubits();
    if model.device.qubits.len() < n {
        return Err(NoiseError::DeviceTooSmall { needed: n, available: model.device.qubits.len() });
    }
    let steps = c.unitary_steps::<T>()?;
    let dep1 = depolarizing::<T>(model.p1, 1)?;
    let dep2 = depolarizing::<T>(model.p2, 2)?;
    let per_qubit: Vec<(Decoherence<T>, Decoherence<T>)> = model.device.qubits[..n]
        .iter()
        .map(|q| Ok((Decoherence::new(model.dur_1q, q)?, Decoherence::new(model.dur_2q, q)?)))
        .collect::<Result<_>>()?;

    let dim = 1usize << n;
    let mut rho = Array2::from_elem((dim, dim), C::zero());
    rho[[0, 0]] = C::one();
    for (u, targets) in steps {
        linalg::conjugate_local(&u, &targets, n, &mut rho);
        let two_qubit = targets.len() == 2;
        apply_channel_in_place(&mut rho, if two_qubit { &dep2 } else { &dep1 }, &targets, n);
        for &q in &targets {
            let (one, two) = &per_qubit[q];
            let dec = if two_qubit { two } else { one };
            apply_channel_in_place(&mut rho, &dec.damping, &[q], n);
            apply_channel_in_place(&mut rho, &dec.dephasing, &[q], n);
        }
    }
    Ok(DensityMatrix::from_matrix_unchecked(n, rho))
}

/// Applies independent per-qubit assignment flips with probability `p_readout`
/// to an outcome distribution indexed by basis state (qubit 0 most significant).
pub fn readout_flip<T: Real>(dist: &[T], p_readout: f64) -> Result<Vec<T>> {
    check_probability(p_readout)?;
    let len = dist.len();
    if len < 2 || !len.is_power_of_two() {
        return Err(NoiseError::InvalidDistribution(format!("length {len} is not a power of two ≥ 2")));
    }
    if dist.iter().any(|&x| !x.is_finite() || x < -T::invariant_tol()) {
        return Err(NoiseError::InvalidDistribution("negative or non-finite entry".into()));
    }
    let total = dist.iter().fold(T::zero(), |a, &b| a + b);
    if (total - T::one()).abs() > T::invariant_tol() {
        return Err(NoiseError::InvalidDistribution(format!("sums to {total}")));
    }
    let p = T::lit(p_readout);
    let keep = T::one() - p;
    let mut cur = dist.to_vec();
    let mut mask = 1;
    while mask < len {
        cur = (0..len).map(|i| keep * cur[i] + p * cur[i ^ mask]).collect();
        mask <<= 1;
    }
    Ok(cur)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::{simulate, OneQubitGate, RouterExperiment};
    use crate::qstate::{negativity, to_density, Bipartition, StateVector};
    use std::f64::consts::FRAC_1_SQRT_2;

    fn rho_of(entries: [[f64; 2]; 2]) -> DensityMatrix<f64> {
        DensityMatrix::new(Array2::from_shape_fn((2, 2), |(i, j)| cr(entries[i][j]))).unwrap()
    }

    #[test]
    fn amplitude_damping_examples() {
        let ch = amplitude_damping::<f64>(0.0, 35.2).unwrap();
        let plus = to_density(&crate::qstate::plus_state());
        assert!(linalg::max_abs_diff(apply_channel(&plus, &ch, &[0]).unwrap().entries(), plus.entries()) < 1e-15);

        let ch = amplitude_damping::<f64>(1e12, 35.2).unwrap();
        let out = apply_channel(&plus, &ch, &[0]).unwrap();
        assert!(linalg::max_abs_diff(out.entries(), DensityMatrix::basis(1, 0).unwrap().entries()) < 1e-12);

        // One T1 of q[0].
        assert!((damping_gamma(35_200.0, 35.2) - (1.0 - (-1.0f64).exp())).abs() < 1e-15);

        assert_eq!(amplitude_damping::<f64>(1.0, 0.0), Err(NoiseError::NonPositiveTime("T1")));
        assert!(amplitude_damping::<f64>(-1.0, 1.0).is_err());
    }

    #[test]
    fn phase_damping_examples() {
        let plus = to_density(&crate::qstate::plus_state::<f64>());
        let ch = phase_damping::<f64>(0.0, 49.5, 19.2).unwrap();
        assert!(linalg::max_abs_diff(apply_channel(&plus, &ch, &[0]).unwrap().entries(), plus.entries()) < 1e-15);

        let ch = phase_damping::<f64>(5_000.0, 10.0, 20.0).unwrap();
        assert!(linalg::max_abs_diff(apply_channel(&plus, &ch, &[0]).unwrap().entries(), plus.entries()) < 1e-15);

        // q[4]: Γφ = 1/19.2 − 1/99 per µs, evaluated at t = 19.2 µs.
        let gamma_phi: f64 = 1.0 / 19.2 - 1.0 / 99.0;
        let factor = (-19.2 * gamma_phi).exp();
        let out = apply_channel(&plus, &phase_damping(19_200.0, 49.5, 19.2).unwrap(), &[0]).unwrap();
        assert!((out.entries()[[0, 1]].re - 0.5 * factor).abs() < 1e-12);
        assert!((out.entries()[[0, 0]].re - 0.5).abs() < 1e-15);

        // T2 > 2·T1 clamps rather than failing.
        assert!(phase_damping::<f64>(100.0, 10.0, 30.0).is_ok());
        assert!(phase_damping::<f64>(100.0, 10.0, 0.0).is_err());
    }

    #[test]
    fn combined_damping_gives_t2_decay() {
        let plus = to_density(&crate::qstate::plus_state::<f64>());
        let (t1, t2, t) = (36.6, 54.8, 10_000.0);
        let a = apply_channel(&plus, &amplitude_damping(t, t1).unwrap(), &[0]).unwrap();
        let b = apply_channel(&a, &phase_damping(t, t1, t2).unwrap(), &[0]).unwrap();
        let expected = 0.5 * (-(t * 1e-3) / t2).exp();
        assert!((b.entries()[[0, 1]].norm() - expected).abs() < 1e-12);
    }

    #[test]
    fn depolarizing_examples() {
        let zero = DensityMatrix::<f64>::basis(1, 0).unwrap();
        let id = depolarizing::<f64>(0.0, 1).unwrap();
        assert_eq!(apply_channel(&zero, &id, &[0]).unwrap(), zero);

        let full = depolarizing::<f64>(1.0, 1).unwrap();
        let psi = StateVector::new(1, vec![cr(0.6), C::new(0.0, 0.8)]).unwrap();
        let out = apply_channel(&to_density(&psi), &full, &[0]).unwrap();
        assert!(linalg::max_abs_diff(out.entries(), DensityMatrix::maximally_mixed(1).entries()) < 1e-15);

        let out = apply_channel(&zero, &depolarizing(0.01, 1).unwrap(), &[0]).unwrap();
        assert!(linalg::max_abs_diff(out.entries(), rho_of([[0.995, 0.0], [0.0, 0.005]]).entries()) < 1e-15);

        assert_eq!(depolarizing::<f64>(1.5, 1), Err(NoiseError::InvalidProbability(1.5)));
        assert_eq!(depolarizing::<f64>(0.1, 2).unwrap().operators().len(), 16);
        assert!(depolarizing::<f64>(0.1, 3).is_err());
    }

    #[test]
    fn two_qubit_depolarizing_fully_mixes() {
        let rho = DensityMatrix::<f64>::basis(2, 3).unwrap();
        let out = apply_channel(&rho, &depolarizing(1.0, 2).unwrap(), &[0, 1]).unwrap();
        assert!(linalg::max_abs_diff(out.entries(), DensityMatrix::maximally_mixed(2).entries()) < 1e-15);
    }

    #[test]
    fn apply_channel_embeds_on_target() {
        let rho = DensityMatrix::<f64>::basis(2, 0b11).unwrap();
        let out = apply_channel(&rho, &amplitude_damping(1e12, 1.0).unwrap(), &[1]).unwrap();
        assert!(linalg::max_abs_diff(out.entries(), DensityMatrix::basis(2, 0b10).unwrap().entries()) < 1e-12);
        let ch = depolarizing::<f64>(0.1, 1).unwrap();
        assert!(matches!(apply_channel(&rho, &ch, &[0, 1]), Err(NoiseError::DimensionMismatch { .. })));
        assert!(matches!(apply_channel(&rho, &ch, &[2]), Err(NoiseError::QubitOutOfRange(2))));
    }

    #[test]
    fn depolarizing_reduces_bell_negativity_monotonically() {
        let bell = StateVector::new(2, vec![cr(FRAC_1_SQRT_2), C::zero(), C::zero(), cr(FRAC_1_SQRT_2)]).unwrap();
        let rho = to_density(&bell);
        let cut = Bipartition::new(vec![0], vec![1]);
        let mut last = f64::INFINITY;
        for step in 0..=10 {
            let p = step as f64 / 10.0;
            let out = apply_channel(&rho, &depolarizing(p, 1).unwrap(), &[0]).unwrap();
            let n = negativity(&out, &cut).unwrap();
            assert!(n <= last + 1e-12);
            last = n;
        }
        assert!(last.abs() < 1e-12);
    }

    #[test]
    fn kraus_validation() {
        let bad = vec![linalg::identity::<f64>(2).mapv(|z| z * cr(0.5))];
        assert!(matches!(KrausChannel::new(bad), Err(NoiseError::NotTracePreserving(_))));
        assert_eq!(KrausChannel::<f64>::new(vec![]), Err(NoiseError::MalformedOperators));
        assert_eq!(KrausChannel::<f64>::new(vec![linalg::identity(3)]), Err(NoiseError::MalformedOperators));
    }

    #[test]
    fn noiseless_matches_pure_simulation() {
        for e in RouterExperiment::ALL {
            let c = e.circuit();
            let rho = simulate_noisy::<f64>(&c, &NoiseModel::noiseless()).unwrap();
            let pure = to_density(&simulate::<f64>(&c).unwrap());
            assert!(linalg::max_abs_diff(rho.entries(), pure.entries()) < 1e-9);
        }
    }

    #[test]
    fn single_x_with_depolarizing() {
        let mut c = Circuit::new(1, 0, "x");
        c.single(OneQubitGate::X, 0).unwrap();
        let model = NoiseModel { p1: 1e-3, dur_1q: 0.0, dur_2q: 0.0, ..NoiseModel::ibmqx4() };
        let rho = simulate_noisy::<f64>(&c, &model).unwrap();
        assert!((rho.entries()[[1, 1]].re - (1.0 - 1e-3 / 2.0)).abs() < 5e-4);
    }

    #[test]
    fn default_model_degrades_router_state() {
        let c = RouterExperiment::Superposition.circuit();
        let ideal = to_density(&simulate::<f64>(&c).unwrap());
        let f = |m: &NoiseModel| {
            let rho = simulate_noisy::<f64>(&c, m).unwrap();
            assert!(DensityMatrix::new(rho.entries().clone()).is_ok());
            crate::tomography::fidelity(&rho, &ideal).unwrap()
        };
        let base = NoiseModel::ibmqx4();
        let full = f(&base);
        let gates_only = f(&NoiseModel { dur_1q: 0.0, dur_2q: 0.0, ..base.clone() });
        let decay_only = f(&NoiseModel { p1: 0.0, p2: 0.0, ..base.clone() });
        assert!(full < gates_only && full < decay_only, "{full} {gates_only} {decay_only}");
        assert!(full > 0.8 && full < 1.0, "fidelity {full}");
    }

    #[test]
    fn fidelity_monotone_in_noise_scale() {
        for e in RouterExperiment::ALL {
            let c = e.circuit();
            let ideal = to_density(&simulate::<f64>(&c).unwrap());
            let mut last = f64::INFINITY;
            for factor in [0.0, 1.0, 2.0, 4.0] {
                let rho = simulate_noisy::<f64>(&c, &NoiseModel::ibmqx4().scaled(factor)).unwrap();
                let f = crate::tomography::fidelity(&rho, &ideal).unwrap();
                assert!(f <= last + 1e-12, "{} factor {factor}: {f} > {last}", e.name());
                last = f;
            }
        }
    }

    #[test]
    fn device_checks() {
        let c = Circuit::new(6, 0, "wide");
        assert!(matches!(
            simulate_noisy::<f64>(&c, &NoiseModel::ibmqx4()),
            Err(NoiseError::DeviceTooSmall { needed: 6, available: 5 })
        ));
        let mut m = NoiseModel::ibmqx4();
        m.device.qubits[0].t1_us = 0.0;
        assert!(m.validate().is_err());
        let m = NoiseModel { p2: 2.0, ..NoiseModel::ibmqx4() };
        assert!(m.validate().is_err());
    }

    #[test]
    fn device_json() {
        let text = r#"{ "qubits": [{ "t1_us": 35.2, "t2_us": 38.1 }], "p1": 0.002 }"#;
        let m = NoiseModel::from_json(text).unwrap();
        assert_eq!(m.p1, 0.002);
        assert_eq!(m.p2, 1e-2);
        assert_eq!(m.dur_2q, 400.0);
        let full = serde_json::to_value(NoiseModel::ibmqx4()).unwrap();
        assert_eq!(full["qubits"][4]["t2_us"], 19.2);
        assert_eq!(full["dur_1q_ns"], 100.0);
        let back: NoiseModel = serde_json::from_value(full).unwrap();
        assert_eq!(back, NoiseModel::ibmqx4());
        assert!(NoiseModel::from_json(r#"{ "qubits": [{ "t1_us": -1, "t2_us": 1 }] }"#).is_err());
    }

    #[test]
    fn readout_examples() {
        let d = readout_flip::<f64>(&[0.3, 0.7], 0.0).unwrap();
        assert_eq!(d, vec![0.3, 0.7]);
        let d = readout_flip::<f64>(&[1.0, 0.0], 0.02).unwrap();
        assert!((d[0] - 0.98).abs() < 1e-15 && (d[1] - 0.02).abs() < 1e-15);
        let d = readout_flip::<f64>(&[0.9, 0.1], 0.5).unwrap();
        assert!(d.iter().all(|&x| (x - 0.5).abs() < 1e-15));
        // Two qubits: |00⟩ → independent flips.
        let d = readout_flip::<f64>(&[1.0, 0.0, 0.0, 0.0], 0.1).unwrap();
        assert!((d[0] - 0.81).abs() < 1e-15 && (d[1] - 0.09).abs() < 1e-15 && (d[3] - 0.01).abs() < 1e-15);
        assert!(readout_flip::<f64>(&[0.5, 0.4], 0.1).is_err());
        assert!(readout_flip::<f64>(&[0.5, 0.25, 0.25], 0.1).is_err());
        assert!(readout_flip::<f64>(&[1.2, -0.2], 0.1).is_err());
    }
}
