//! Pauli-basis state tomography: measurement settings, seeded shot sampling,
//! expectation estimates, linear-inversion reconstruction with a physicality
//! projection, and the Uhlmann fidelity used to score reconstructions.
//!
//! Outcome indices follow the crate's big-endian convention, so formatting an
//! index as an `n`-digit binary string yields the qubit-0-first bitstring used
//! in counts files.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::gates::OneQubitGate;
use crate::linalg::{self, CMatrix};
use crate::noise::{self, NoiseError};
use crate::qstate::{DensityMatrix, StateError};
use crate::scalar::{cr, Real, C};

/// Name recorded in counts files for the sampling generator.
pub const RNG_NAME: &str = "ChaCha20";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TomographyError {
    #[error("tomography needs at least one qubit")]
    NoQubits,
    #[error("shot count must be at least 1")]
    ZeroShots,
    #[error("invalid Pauli letter `{0}`")]
    InvalidLetter(char),
    #[error("a measurement setting needs at least one non-identity letter")]
    TrivialSetting,
    #[error("expected a length-{expected} string, got length {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("no measurement setting is compatible with {0}")]
    NoCompatibleSetting(String),
    #[error("missing expectation value for {0}")]
    MissingExpectation(String),
    #[error("matrix is not Hermitian (deviation {0})")]
    NotHermitian(f64),
    #[error("matrix trace {0} differs from 1")]
    BadTrace(f64),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error(transparent)]
    Noise(#[from] NoiseError),
    #[error(transparent)]
    State(#[from] StateError),
}

pub type Result<T> = std::result::Result<T, TomographyError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    pub const ALL: [Pauli; 4] = [Pauli::I, Pauli::X, Pauli::Y, Pauli::Z];

    pub fn letter(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }

    pub fn from_letter(ch: char) -> Result<Self> {
        match ch.to_ascii_uppercase() {
            'I' => Ok(Pauli::I),
            'X' => Ok(Pauli::X),
            'Y' => Ok(Pauli::Y),
            'Z' => Ok(Pauli::Z),
            _ => Err(TomographyError::InvalidLetter(ch)),
        }
    }

    pub fn matrix<T: Real>(self) -> CMatrix<T> {
        let (o, z) = (C::<T>::one(), C::<T>::zero());
        let i = C::new(T::zero(), T::one());
        match self {
            Pauli::I => ndarray::array![[o, z], [z, o]],
            Pauli::X => ndarray::array![[z, o], [o, z]],
            Pauli::Y => ndarray::array![[z, -i], [i, z]],
            Pauli::Z => ndarray::array![[o, z], [z, -o]],
        }
    }

    /// Gates that rotate this basis onto the computational basis, in application order.
    pub fn rotation(self) -> &'static [OneQubitGate] {
        match self {
            Pauli::X => &[OneQubitGate::H],
            Pauli::Y => &[OneQubitGate::Sdg, OneQubitGate::H],
            Pauli::I | Pauli::Z => &[],
        }
    }
}

fn parse_letters(s: &str) -> Result<Vec<Pauli>> {
    s.chars().map(Pauli::from_letter).collect()
}

fn write_letters(f: &mut fmt::Formatter<'_>, letters: &[Pauli]) -> fmt::Result {
    letters.iter().try_for_each(|p| write!(f, "{}", p.letter()))
}

/// Tensor product of single-qubit Paulis; letter `k` acts on qubit `k`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PauliString(Vec<Pauli>);

impl PauliString {
    pub fn new(letters: Vec<Pauli>) -> Self {
        Self(letters)
    }

    pub fn identity(n: usize) -> Self {
        Self(vec![Pauli::I; n])
    }

    pub fn letters(&self) -> &[Pauli] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().all(|&p| p == Pauli::I)
    }

    /// Bits (big-endian outcome convention) of the non-identity positions.
    fn support_mask(&self) -> usize {
        mask_where(&self.0, |p| p != Pauli::I)
    }

    pub fn matrix<T: Real>(&self) -> CMatrix<T> {
        self.0.iter().fold(linalg::identity(1), |acc, p| linalg::kron(&acc, &p.matrix()))
    }

    /// Column action `P|j⟩ = phase(j)·|j ⊕ flip⟩`, returned as `(flip, z_mask, y_count)`.
    fn action(&self) -> (usize, usize, usize) {
        let flip = mask_where(&self.0, |p| matches!(p, Pauli::X | Pauli::Y));
        let z = mask_where(&self.0, |p| matches!(p, Pauli::Y | Pauli::Z));
        let ys = self.0.iter().filter(|&&p| p == Pauli::Y).count();
        (flip, z, ys)
    }

    fn phase<T: Real>(&self, column: usize, z_mask: usize, ys: usize) -> C<T> {
        let base = match ys % 4 {
            0 => C::new(T::one(), T::zero()),
            1 => C::new(T::zero(), T::one()),
            2 => C::new(-T::one(), T::zero()),
            _ => C::new(T::zero(), -T::one()),
        };
        if (column & z_mask).count_ones() % 2 == 1 {
            -base
        } else {
            base
        }
    }

    /// `Tr(P ρ)`.
    pub fn expectation_in<T: Real>(&self, rho: &DensityMatrix<T>) -> Result<T> {
        if self.len() != rho.n_qubits() {
            return Err(TomographyError::LengthMismatch { expected: rho.n_qubits(), got: self.len() });
        }
        let (flip, z, ys) = self.action();
        let m = rho.entries();
        let total = (0..rho.dim()).fold(C::zero(), |acc, j| acc + self.phase::<T>(j, z, ys) * m[[j, j ^ flip]]);
        Ok(total.re)
    }
}

fn mask_where(letters: &[Pauli], pred: impl Fn(Pauli) -> bool) -> usize {
    let n = letters.len();
    letters
        .iter()
        .enumerate()
        .filter(|&(_, &p)| pred(p))
        .fold(0, |acc, (k, _)| acc | linalg::qubit_mask(k, n))
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_letters(f, &self.0)
    }
}

impl FromStr for PauliString {
    type Err = TomographyError;

    fn from_str(s: &str) -> Result<Self> {
        Ok(Self(parse_letters(s)?))
    }
}

/// All `4^n` strings in lexicographic order `I < X < Y < Z`.
pub fn pauli_strings(n: usize) -> Vec<PauliString> {
    (0..n).fold(vec![Vec::new()], |acc, _| {
        acc.into_iter()
            .flat_map(|prefix| {
                Pauli::ALL.iter().map(move |&p| {
                    let mut next = prefix.clone();
                    next.push(p);
                    next
                })
            })
            .collect()
    })
    .into_iter()
    .map(PauliString)
    .collect()
}

/// The `4^n − 1` non-identity strings.
pub fn observables(n: usize) -> Vec<PauliString> {
    pauli_strings(n).into_iter().filter(|p| !p.is_identity()).collect()
}

/// Per-qubit measurement basis of one executed circuit.
///
/// Standard settings use only `X`, `Y`, `Z`. An `I` letter (per-observable
/// mode) means the qubit is read in the computational basis and its bit is
/// never part of an estimate taken from this setting alone.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MeasurementSetting(Vec<Pauli>);

impl MeasurementSetting {
    pub fn new(bases: Vec<Pauli>) -> Result<Self> {
        if bases.is_empty() {
            return Err(TomographyError::NoQubits);
        }
        if bases.iter().all(|&p| p == Pauli::I) {
            return Err(TomographyError::TrivialSetting);
        }
        Ok(Self(bases))
    }

    pub fn bases(&self) -> &[Pauli] {
        &self.0
    }

    pub fn n_qubits(&self) -> usize {
        self.0.len()
    }

    /// True when every non-identity letter of `pauli` matches this setting.
    pub fn is_compatible(&self, pauli: &PauliString) -> bool {
        self.0.len() == pauli.len() && self.0.iter().zip(pauli.letters()).all(|(&b, &p)| p == Pauli::I || p == b)
    }

    fn rotated<T: Real>(&self, rho: &DensityMatrix<T>) -> CMatrix<T> {
        let n = rho.n_qubits();
        let mut m = rho.entries().clone();
        for (q, basis) in self.0.iter().enumerate() {
            for gate in basis.rotation() {
                linalg::conjugate_local(&gate.matrix::<T>(), &[q], n, &mut m);
            }
        }
        m
    }
}

impl fmt::Display for MeasurementSetting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_letters(f, &self.0)
    }
}

impl FromStr for MeasurementSetting {
    type Err = TomographyError;

    fn from_str(s: &str) -> Result<Self> {
        Self::new(parse_letters(s)?)
    }
}

/// All `3^n` settings in lexicographic order `X < Y < Z`.
pub fn settings_for(n: usize) -> Result<Vec<MeasurementSetting>> {
    if n == 0 {
        return Err(TomographyError::NoQubits);
    }
    Ok(pauli_strings(n)
        .into_iter()
        .filter(|p| !p.letters().contains(&Pauli::I))
        .map(|p| MeasurementSetting(p.0))
        .collect())
}

/// One setting per non-identity observable (`4^n − 1` circuits).
pub fn settings_per_observable(n: usize) -> Result<Vec<MeasurementSetting>> {
    if n == 0 {
        return Err(TomographyError::NoQubits);
    }
    Ok(observables(n).into_iter().map(|p| MeasurementSetting(p.0)).collect())
}

/// Outcome histogram of `shots` draws in `setting`'s basis.
///
/// The returned vector is indexed by outcome (qubit 0 most significant).
pub fn sample_counts<T: Real>(
    rho: &DensityMatrix<T>,
    setting: &MeasurementSetting,
    shots: u64,
    seed: u64,
    p_readout: f64,
) -> Result<Vec<u64>> {
    if shots == 0 {
        return Err(TomographyError::ZeroShots);
    }
    if setting.n_qubits() != rho.n_qubits() {
        return Err(TomographyError::LengthMismatch { expected: rho.n_qubits(), got: setting.n_qubits() });
    }
    let rotated = setting.rotated(rho);
    let diag: Vec<T> = rotated.diag().iter().map(|z| z.re.max(T::zero())).collect();
    let total = diag.iter().fold(T::zero(), |a, &b| a + b);
    let diag: Vec<T> = diag.into_iter().map(|p| p / total).collect();
    let dist = noise::readout_flip(&diag, p_readout)?;

    let cdf: Vec<f64> = dist
        .iter()
        .scan(0.0, |acc, p| {
            *acc += p.as_f64();
            Some(*acc)
        })
        .collect();
    let norm = *cdf.last().expect("non-empty distribution");
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; cdf.len()];
    for _ in 0..shots {
        let u = rng.random::<f64>() * norm;
        let idx = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
        counts[idx] += 1;
    }
    Ok(counts)
}

/// Counts for each measurement setting at a fixed shot budget.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TomographyDataset {
    n_qubits: usize,
    shots: u64,
    seed: u64,
    counts: BTreeMap<MeasurementSetting, Vec<u64>>,
}

impl TomographyDataset {
    pub fn new(shots: u64, seed: u64, counts: BTreeMap<MeasurementSetting, Vec<u64>>) -> Result<Self> {
        let n_qubits = counts.keys().next().map(|s| s.n_qubits()).ok_or(TomographyError::NoQubits)?;
        if shots == 0 {
            return Err(TomographyError::ZeroShots);
        }
        for (setting, hist) in &counts {
            if setting.n_qubits() != n_qubits {
                return Err(TomographyError::LengthMismatch { expected: n_qubits, got: setting.n_qubits() });
            }
            if hist.len() != 1 << n_qubits {
                return Err(TomographyError::InvalidDataset(format!("setting {setting}: {} outcomes", hist.len())));
            }
            let sum: u64 = hist.iter().sum();
            if sum != shots {
                return Err(TomographyError::InvalidDataset(format!("setting {setting}: counts sum to {sum}, not {shots}")));
            }
        }
        Ok(Self { n_qubits, shots, seed, counts })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn shots(&self) -> u64 {
        self.shots
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn counts(&self) -> &BTreeMap<MeasurementSetting, Vec<u64>> {
        &self.counts
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("dataset serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| TomographyError::InvalidDataset(e.to_string()))
    }
}

#[derive(Serialize, Deserialize)]
struct DatasetJson {
    shots: u64,
    seed: u64,
    rng: String,
    settings: BTreeMap<String, BTreeMap<String, u64>>,
}

impl Serialize for TomographyDataset {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let n = self.n_qubits;
        let settings = self
            .counts
            .iter()
            .map(|(setting, hist)| {
                let outcomes = hist.iter().enumerate().map(|(i, &c)| (format!("{i:0n$b}"), c)).collect();
                (setting.to_string(), outcomes)
            })
            .collect();
        DatasetJson { shots: self.shots, seed: self.seed, rng: RNG_NAME.into(), settings }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for TomographyDataset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = DatasetJson::deserialize(d)?;
        if raw.rng != RNG_NAME {
            return Err(D::Error::custom(format!("unsupported generator `{}`", raw.rng)));
        }
        let mut counts = BTreeMap::new();
        for (label, outcomes) in raw.settings {
            let setting: MeasurementSetting = label.parse().map_err(D::Error::custom)?;
            let n = setting.n_qubits();
            if n > 16 {
                return Err(D::Error::custom(format!("setting `{label}` is too wide")));
            }
            let mut hist = vec![0u64; 1 << n];
            for (bits, c) in outcomes {
                if bits.len() != n {
                    return Err(D::Error::custom(format!("outcome `{bits}` does not have {n} bits")));
                }
                let idx = usize::from_str_radix(&bits, 2).map_err(|_| D::Error::custom(format!("bad outcome `{bits}`")))?;
                hist[idx] = hist[idx]
                    .checked_add(c)
                    .ok_or_else(|| D::Error::custom("count overflow"))?;
            }
            counts.insert(setting, hist);
        }
        TomographyDataset::new(raw.shots, raw.seed, counts).map_err(D::Error::custom)
    }
}

/// Samples every setting; setting `k` uses the sub-seed `seed ^ k`.
pub fn collect_dataset<T: Real>(
    rho: &DensityMatrix<T>,
    settings: &[MeasurementSetting],
    shots: u64,
    seed: u64,
    p_readout: f64,
) -> Result<TomographyDataset> {
    let counts = settings
        .par_iter()
        .enumerate()
        .map(|(k, s)| Ok((s.clone(), sample_counts(rho, s, shots, seed ^ k as u64, p_readout)?)))
        .collect::<Result<Vec<_>>>()?;
    TomographyDataset::new(shots, seed, counts.into_iter().collect())
}

/// `⟨P⟩` averaged over every compatible setting; parity over the non-I positions.
pub fn expectation(dataset: &TomographyDataset, pauli: &PauliString) -> Result<f64> {
    if pauli.len() != dataset.n_qubits {
        return Err(TomographyError::LengthMismatch { expected: dataset.n_qubits, got: pauli.len() });
    }
    let mask = pauli.support_mask();
    let (sum, used) = dataset
        .counts
        .iter()
        .filter(|(s, _)| s.is_compatible(pauli))
        .fold((0.0, 0usize), |(sum, used), (_, hist)| {
            let signed: i64 = hist
                .iter()
                .enumerate()
                .map(|(i, &c)| if (i & mask).count_ones() % 2 == 0 { c as i64 } else { -(c as i64) })
                .sum();
            (sum + signed as f64 / dataset.shots as f64, used + 1)
        });
    if used == 0 {
        return Err(TomographyError::NoCompatibleSetting(pauli.to_string()));
    }
    Ok((sum / used as f64).clamp(-1.0, 1.0))
}

/// Estimates for all non-identity strings.
pub fn estimate_expectations<T: Real>(dataset: &TomographyDataset) -> Result<BTreeMap<PauliString, T>> {
    observables(dataset.n_qubits)
        .into_iter()
        .map(|p| {
            let e = expectation(dataset, &p)?;
            Ok((p, T::lit(e)))
        })
        .collect()
}

/// `Tr(Pρ)` for all non-identity strings.
pub fn exact_expectations<T: Real>(rho: &DensityMatrix<T>) -> BTreeMap<PauliString, T> {
    observables(rho.n_qubits())
        .into_iter()
        .map(|p| {
            let e = p.expectation_in(rho).expect("length matches");
            (p, e)
        })
        .collect()
}

/// `ρ̂ = 2^{-n} Σ_P ⟨P⟩ P` with `⟨I…I⟩ = 1`. Hermitian with unit trace; may be non-PSD.
pub fn linear_inversion<T: Real>(expectations: &BTreeMap<PauliString, T>, n: usize) -> Result<CMatrix<T>> {
    if n == 0 {
        return Err(TomographyError::NoQubits);
    }
    if let Some(p) = expectations.keys().find(|p| p.len() != n) {
        return Err(TomographyError::LengthMismatch { expected: n, got: p.len() });
    }
    let dim = 1usize << n;
    let mut m = linalg::identity::<T>(dim);
    for p in observables(n) {
        let e = *expectations.get(&p).ok_or_else(|| TomographyError::MissingExpectation(p.to_string()))?;
        let (flip, z, ys) = p.action();
        for j in 0..dim {
            m[[j ^ flip, j]] = m[[j ^ flip, j]] + p.phase::<T>(j, z, ys) * cr(e);
        }
    }
    let scale = cr(T::one() / T::lit(dim as f64));
    Ok(m.mapv(|z| z * scale))
}

/// Nearest-physical correction: zero the most negative eigenvalue and spread
/// its weight evenly over the remaining ones until none are negative.
pub fn project_to_physical<T: Real>(m: &CMatrix<T>) -> Result<DensityMatrix<T>> {
    if !m.is_square() {
        return Err(TomographyError::DimensionMismatch(m.nrows(), m.ncols()));
    }
    let tol = T::lit(1e-6).max(T::invariant_tol());
    let herm = linalg::hermiticity_error(m);
    if !(herm <= tol) {
        return Err(TomographyError::NotHermitian(herm.as_f64()));
    }
    let tr = linalg::trace(m);
    if !((tr.re - T::one()).abs() <= tol && tr.im.abs() <= tol) {
        return Err(TomographyError::BadTrace(tr.re.as_f64()));
    }
    let half = cr(T::lit(0.5));
    let sym = (m + &linalg::adjoint(m)).mapv(|z| (z * half).unscale(tr.re));

    let eig = linalg::hermitian_eigen(&sym);
    if eig.values.iter().all(|&v| v >= T::zero()) {
        return Ok(DensityMatrix::new(sym)?);
    }
    let mut values = eig.values.clone();
    let mut active: Vec<usize> = (0..values.len()).collect();
    loop {
        let (pos, &idx) = active
            .iter()
            .enumerate()
            .min_by(|a, b| values[*a.1].partial_cmp(&values[*b.1]).expect("finite eigenvalues"))
            .expect("at least one active eigenvalue");
        let lowest = values[idx];
        if lowest >= T::zero() {
            break;
        }
        values[idx] = T::zero();
        active.remove(pos);
        let share = lowest / T::lit(active.len() as f64);
        for &k in &active {
            values[k] = values[k] + share;
        }
    }
    let projected = linalg::HermitianEigen { values, vectors: eig.vectors }.map(|v| v);
    Ok(DensityMatrix::new(projected)?)
}

/// Expectations → linear inversion → physicality projection.
pub fn reconstruct<T: Real>(dataset: &TomographyDataset) -> Result<DensityMatrix<T>> {
    let e = estimate_expectations::<T>(dataset)?;
    project_to_physical(&linear_inversion(&e, dataset.n_qubits)?)
}

fn pure_vector<T: Real>(rho: &DensityMatrix<T>) -> Option<Vec<C<T>>> {
    if rho.purity() < T::one() - T::lit(1e-10) {
        return None;
    }
    let eig = linalg::hermitian_eigen(rho.entries());
    let top = eig.values.len() - 1;
    Some(eig.vectors.column(top).to_vec())
}

/// Squared Uhlmann fidelity `(Tr √(√ρ σ √ρ))²`, clamped to `[0, 1]`.
pub fn fidelity<T: Real>(rho: &DensityMatrix<T>, sigma: &DensityMatrix<T>) -> Result<T> {
    if rho.dim() != sigma.dim() {
        return Err(TomographyError::DimensionMismatch(rho.dim(), sigma.dim()));
    }
    let overlap = |psi: Vec<C<T>>, m: &CMatrix<T>| -> T {
        let v = ndarray::Array1::from(psi);
        v.mapv(|z| z.conj()).dot(&m.dot(&v)).re
    };
    let f = if let Some(psi) = pure_vector(sigma) {
        overlap(psi, rho.entries())
    } else if let Some(psi) = pure_vector(rho) {
        overlap(psi, sigma.entries())
    } else {
        // Eigenvalues at rounding level are zeroed so their square roots do not leak into the sum.
        let floor = T::epsilon() * T::lit(8.0 * rho.dim() as f64);
        let clip = move |v: T| if v > floor { v.sqrt() } else { T::zero() };
        let sqrt_rho = linalg::hermitian_eigen(rho.entries()).map(clip);
        let inner = sqrt_rho.dot(sigma.entries()).dot(&sqrt_rho);
        let root_sum = linalg::hermitian_eigen(&inner).values.into_iter().fold(T::zero(), |acc, v| acc + clip(v));
        root_sum * root_sum
    };
    Ok(f.max(T::zero()).min(T::one()))
}
