//! Pure states, density operators, and the comparison/entanglement measures
//! built on them.

use std::collections::BTreeSet;

use ndarray::{Array1, Array2};
use num_traits::{One, Zero};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::linalg::{self, CMatrix};
use crate::scalar::{cr, Real, C};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateError {
    #[error("basis index {index} out of range for {n_qubits} qubits")]
    IndexOutOfRange { index: usize, n_qubits: usize },
    #[error("expected {expected} amplitudes, got {got}")]
    BadLength { expected: usize, got: usize },
    #[error("state is not normalized (norm² = {0})")]
    NotNormalized(f64),
    #[error("non-finite amplitude")]
    NonFinite,
    #[error("matrix is not Hermitian (max deviation {0})")]
    NotHermitian(f64),
    #[error("trace is {0}, expected 1")]
    BadTrace(f64),
    #[error("matrix is not positive semidefinite (min eigenvalue {0})")]
    NotPositive(f64),
    #[error("dimension mismatch: {0} vs {1} qubits")]
    DimensionMismatch(usize, usize),
    #[error("invalid qubit selection: {0}")]
    InvalidQubits(String),
}

pub type Result<T> = std::result::Result<T, StateError>;

/// Normalized `n`-qubit pure state. Qubit 0 is the most significant bit.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T: Real> {
    n_qubits: usize,
    amps: Array1<C<T>>,
}

impl<T: Real> StateVector<T> {
    pub fn new(n_qubits: usize, amps: Vec<C<T>>) -> Result<Self> {
        let expected = 1usize << n_qubits;
        if amps.len() != expected {
            return Err(StateError::BadLength { expected, got: amps.len() });
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(StateError::NonFinite);
        }
        let norm_sqr = amps.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b);
        if (norm_sqr - T::one()).abs() > T::invariant_tol() {
            return Err(StateError::NotNormalized(norm_sqr.as_f64()));
        }
        Ok(Self { n_qubits, amps: Array1::from(amps) })
    }

    /// Builds a state from possibly unnormalized amplitudes.
    pub fn normalized(n_qubits: usize, amps: Vec<C<T>>) -> Result<Self> {
        let norm = amps.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b).sqrt();
        if norm == T::zero() {
            return Err(StateError::NotNormalized(0.0));
        }
        Self::new(n_qubits, amps.into_iter().map(|z| z.unscale(norm)).collect())
    }

    pub(crate) fn from_array_unchecked(n_qubits: usize, amps: Array1<C<T>>) -> Self {
        Self { n_qubits, amps }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &Array1<C<T>> {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> C<T> {
        self.amps[index]
    }

    pub fn norm_sqr(&self) -> T {
        self.amps.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b)
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &Self) -> Result<C<T>> {
        if self.n_qubits != other.n_qubits {
            return Err(StateError::DimensionMismatch(self.n_qubits, other.n_qubits));
        }
        Ok(self.amps.iter().zip(other.amps.iter()).fold(C::zero(), |acc, (a, b)| acc + a.conj() * b))
    }

    /// Multiplies every amplitude by `e^{i·phase}`.
    pub fn with_global_phase(&self, phase: T) -> Self {
        let f = crate::scalar::cis(phase);
        Self { n_qubits: self.n_qubits, amps: self.amps.mapv(|z| z * f) }
    }

    /// Converts to a different scalar precision.
    pub fn cast<U: Real>(&self) -> StateVector<U> {
        StateVector {
            n_qubits: self.n_qubits,
            amps: self.amps.mapv(|z| C::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64()))),
        }
    }
}

pub fn basis_state<T: Real>(n_qubits: usize, index: usize) -> Result<StateVector<T>> {
    let dim = 1usize << n_qubits;
    if index >= dim {
        return Err(StateError::IndexOutOfRange { index, n_qubits });
    }
    let mut amps = Array1::from_elem(dim, C::zero());
    amps[index] = C::one();
    Ok(StateVector { n_qubits, amps })
}

/// `|+⟩ = (|0⟩ + |1⟩)/√2`.
pub fn plus_state<T: Real>() -> StateVector<T> {
    let h = cr(T::FRAC_1_SQRT_2());
    StateVector { n_qubits: 1, amps: Array1::from(vec![h, h]) }
}

/// `|a⟩ ⊗ |b⟩`; `a` occupies the leading (most significant) qubits.
pub fn tensor_product<T: Real>(a: &StateVector<T>, b: &StateVector<T>) -> StateVector<T> {
    let bd = b.dim();
    let amps = Array1::from_shape_fn(a.dim() * bd, |k| a.amps[k / bd] * b.amps[k % bd]);
    StateVector { n_qubits: a.n_qubits + b.n_qubits, amps }
}

/// `|ψ⟩⟨ψ|`.
pub fn to_density<T: Real>(psi: &StateVector<T>) -> DensityMatrix<T> {
    let amps = &psi.amps;
    let entries = Array2::from_shape_fn((psi.dim(), psi.dim()), |(i, j)| amps[i] * amps[j].conj());
    DensityMatrix { n_qubits: psi.n_qubits, entries }
}

/// True iff `a` and `b` differ only by a unit-modulus factor, via `|⟨a|b⟩| ≥ 1 − tol`.
pub fn equal_up_to_global_phase<T: Real>(a: &StateVector<T>, b: &StateVector<T>, tol: T) -> Result<bool> {
    Ok(a.inner(b)?.norm() >= T::one() - tol)
}

/// Infinity-norm distance between `a` and `b` after aligning `b`'s global phase to `a`.
pub fn phase_aligned_distance<T: Real>(a: &StateVector<T>, b: &StateVector<T>) -> Result<T> {
    let overlap = b.inner(a)?;
    let phase = if overlap.norm() > T::zero() { overlap.unscale(overlap.norm()) } else { C::one() };
    Ok(a.amps
        .iter()
        .zip(b.amps.iter())
        .map(|(x, y)| (x - y * phase).norm())
        .fold(T::zero(), T::max))
}

/// Hermitian, unit-trace, positive semidefinite operator on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix<T: Real> {
    n_qubits: usize,
    entries: CMatrix<T>,
}

impl<T: Real> DensityMatrix<T> {
    /// Validates every density-matrix invariant.
    pub fn new(entries: CMatrix<T>) -> Result<Self> {
        let n_qubits = qubits_for_dim(entries.nrows())?;
        if !entries.is_square() {
            return Err(StateError::BadLength { expected: entries.nrows(), got: entries.ncols() });
        }
        if entries.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(StateError::NonFinite);
        }
        let herm = linalg::hermiticity_error(&entries);
        if herm > T::invariant_tol() {
            return Err(StateError::NotHermitian(herm.as_f64()));
        }
        let tr = linalg::trace(&entries);
        if (tr.re - T::one()).abs() > T::invariant_tol() || tr.im.abs() > T::invariant_tol() {
            return Err(StateError::BadTrace(tr.re.as_f64()));
        }
        let min_eig = linalg::hermitian_eigen(&entries).values[0];
        if min_eig < -T::psd_slack() {
            return Err(StateError::NotPositive(min_eig.as_f64()));
        }
        Ok(Self { n_qubits, entries })
    }

    pub(crate) fn from_matrix_unchecked(n_qubits: usize, entries: CMatrix<T>) -> Self {
        Self { n_qubits, entries }
    }

    /// `|i⟩⟨i|`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        Ok(to_density(&basis_state(n_qubits, index)?))
    }

    /// `I / 2^n`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        let w = cr(T::one() / T::lit(dim as f64));
        Self { n_qubits, entries: linalg::identity::<T>(dim).mapv(|z| z * w) }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix<T> {
        &self.entries
    }

    pub fn into_entries(self) -> CMatrix<T> {
        self.entries
    }

    pub fn trace(&self) -> C<T> {
        linalg::trace(&self.entries)
    }

    /// `Tr ρ²`.
    pub fn purity(&self) -> T {
        self.entries.iter().map(|z| z.norm_sqr()).fold(T::zero(), |a, b| a + b)
    }

    pub fn eigenvalues(&self) -> Vec<T> {
        linalg::hermitian_eigen(&self.entries).values
    }

    /// Reorders qubits: output qubit `k` is input qubit `order[k]`.
    pub fn permute_qubits(&self, order: &[usize]) -> Result<Self> {
        let n = self.n_qubits;
        let distinct: BTreeSet<_> = order.iter().copied().collect();
        if order.len() != n || distinct.len() != n || order.iter().any(|&q| q >= n) {
            return Err(StateError::InvalidQubits(format!("{order:?} is not a permutation of 0..{n}")));
        }
        let map = |idx: usize| -> usize {
            order.iter().enumerate().fold(0, |acc, (k, &src)| {
                if idx & linalg::qubit_mask(src, n) != 0 {
                    acc | linalg::qubit_mask(k, n)
                } else {
                    acc
                }
            })
        };
        let mut out = Array2::from_elem((self.dim(), self.dim()), C::zero());
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                out[[map(i), map(j)]] = self.entries[[i, j]];
            }
        }
        Ok(Self { n_qubits: n, entries: out })
    }

    pub fn cast<U: Real>(&self) -> DensityMatrix<U> {
        DensityMatrix {
            n_qubits: self.n_qubits,
            entries: self.entries.mapv(|z| C::new(U::lit(z.re.as_f64()), U::lit(z.im.as_f64()))),
        }
    }
}

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if dim == 0 || !dim.is_power_of_two() {
        return Err(StateError::InvalidQubits(format!("dimension {dim} is not a power of two")));
    }
    Ok(dim.trailing_zeros() as usize)
}

fn validate_qubits(qubits: &[usize], n_qubits: usize) -> Result<BTreeSet<usize>> {
    let set: BTreeSet<usize> = qubits.iter().copied().collect();
    if set.len() != qubits.len() {
        return Err(StateError::InvalidQubits(format!("repeated index in {qubits:?}")));
    }
    if let Some(&q) = set.iter().find(|&&q| q >= n_qubits) {
        return Err(StateError::InvalidQubits(format!("qubit {q} out of range for {n_qubits} qubits")));
    }
    Ok(set)
}

/// Reduced state on `keep` (ordered ascending); all other qubits are traced out.
pub fn partial_trace<T: Real>(rho: &DensityMatrix<T>, keep: &[usize]) -> Result<DensityMatrix<T>> {
    let n = rho.n_qubits;
    if keep.is_empty() {
        return Err(StateError::InvalidQubits("keep set is empty".into()));
    }
    let kept: Vec<usize> = validate_qubits(keep, n)?.into_iter().collect();
    let traced: Vec<usize> = (0..n).filter(|q| !kept.contains(q)).collect();

    let spread = |local: usize, qubits: &[usize]| -> usize {
        let k = qubits.len();
        qubits.iter().enumerate().fold(0, |acc, (pos, &q)| {
            if local & (1 << (k - 1 - pos)) != 0 {
                acc | linalg::qubit_mask(q, n)
            } else {
                acc
            }
        })
    };
    let kd = 1usize << kept.len();
    let td = 1usize << traced.len();
    let kept_idx: Vec<usize> = (0..kd).map(|i| spread(i, &kept)).collect();
    let traced_idx: Vec<usize> = (0..td).map(|t| spread(t, &traced)).collect();

    let mut out = Array2::from_elem((kd, kd), C::zero());
    for (i, &ki) in kept_idx.iter().enumerate() {
        for (j, &kj) in kept_idx.iter().enumerate() {
            out[[i, j]] = traced_idx.iter().fold(C::zero(), |acc, &t| acc + rho.entries[[ki | t, kj | t]]);
        }
    }
    Ok(DensityMatrix { n_qubits: kept.len(), entries: out })
}

/// Von Neumann entropy in bits; eigenvalues below zero are clipped.
pub fn von_neumann_entropy<T: Real>(rho: &DensityMatrix<T>) -> T {
    rho.eigenvalues()
        .into_iter()
        .filter(|&l| l > T::zero())
        .map(|l| -l * l.log2())
        .fold(T::zero(), |a, b| a + b)
        .max(T::zero())
}

/// Split of the register into two disjoint, covering parts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bipartition {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

impl Bipartition {
    pub fn new(first: Vec<usize>, second: Vec<usize>) -> Self {
        Self { first, second }
    }

    /// `{qubits} | rest`.
    pub fn split_off(qubits: &[usize], n_qubits: usize) -> Self {
        let second = (0..n_qubits).filter(|q| !qubits.contains(q)).collect();
        Self { first: qubits.to_vec(), second }
    }

    fn validate(&self, n_qubits: usize) -> Result<()> {
        let all: Vec<usize> = self.first.iter().chain(&self.second).copied().collect();
        let set = validate_qubits(&all, n_qubits)?;
        if set.len() != n_qubits || self.first.is_empty() || self.second.is_empty() {
            return Err(StateError::InvalidQubits(format!(
                "{:?}|{:?} is not a bipartition of {n_qubits} qubits",
                self.first, self.second
            )));
        }
        Ok(())
    }
}

/// Partial transpose over the qubits in `part`.
pub fn partial_transpose<T: Real>(rho: &DensityMatrix<T>, part: &[usize]) -> Result<CMatrix<T>> {
    let n = rho.n_qubits;
    let mask = validate_qubits(part, n)?
        .into_iter()
        .fold(0usize, |acc, q| acc | linalg::qubit_mask(q, n));
    let dim = rho.dim();
    Ok(Array2::from_shape_fn((dim, dim), |(i, j)| {
        let src_i = (i & !mask) | (j & mask);
        let src_j = (j & !mask) | (i & mask);
        rho.entries[[src_i, src_j]]
    }))
}

/// Sum of the magnitudes of the negative eigenvalues of the partial transpose.
pub fn negativity<T: Real>(rho: &DensityMatrix<T>, partition: &Bipartition) -> Result<T> {
    partition.validate(rho.n_qubits)?;
    let pt = partial_transpose(rho, &partition.second)?;
    Ok(linalg::hermitian_eigen(&pt)
        .values
        .into_iter()
        .filter(|&l| l < T::zero())
        .fold(T::zero(), |acc, l| acc - l))
}

#[derive(Serialize, Deserialize)]
struct DensityMatrixJson {
    n_qubits: usize,
    entries: Vec<Vec<[f64; 2]>>,
}

impl<T: Real> Serialize for DensityMatrix<T> {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let entries = self
            .entries
            .rows()
            .into_iter()
            .map(|row| row.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect())
            .collect();
        DensityMatrixJson { n_qubits: self.n_qubits, entries }.serialize(s)
    }
}

impl<'de, T: Real> Deserialize<'de> for DensityMatrix<T> {
    /// Deserialization only checks shape; callers decide whether to run the
    /// full invariant check (a report under verification may be corrupt).
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let raw = DensityMatrixJson::deserialize(d)?;
        let dim = 1usize
            .checked_shl(raw.n_qubits as u32)
            .filter(|_| raw.n_qubits < 16)
            .ok_or_else(|| D::Error::custom("n_qubits too large"))?;
        if raw.entries.len() != dim || raw.entries.iter().any(|r| r.len() != dim) {
            return Err(D::Error::custom(format!("entries must be {dim}x{dim}")));
        }
        let entries = Array2::from_shape_fn((dim, dim), |(i, j)| {
            let [re, im] = raw.entries[i][j];
            C::new(T::lit(re), T::lit(im))
        });
        Ok(Self { n_qubits: raw.n_qubits, entries })
    }
}

/// Serializes amplitudes as `[[re, im], ...]`.
pub fn amplitudes_to_pairs<T: Real>(psi: &StateVector<T>) -> Vec<[f64; 2]> {
    psi.amps.iter().map(|z| [z.re.as_f64(), z.im.as_f64()]).collect()
}
