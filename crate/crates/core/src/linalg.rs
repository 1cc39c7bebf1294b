//! Dense complex linear algebra over [`Real`] scalars.
//!
//! Basis indices follow the big-endian convention used throughout the crate:
//! qubit 0 is the most significant bit of an `n`-qubit index.

use ndarray::{Array2, ArrayViewMut1, Axis};
use num_traits::{One, Zero};

use crate::scalar::{cr, Real, C};

/// Dense complex matrix, row-major.
pub type CMatrix<T> = Array2<C<T>>;

/// Bit mask selecting `qubit` inside an `n_qubits`-wide basis index.
#[inline]
pub fn qubit_mask(qubit: usize, n_qubits: usize) -> usize {
    1 << (n_qubits - 1 - qubit)
}

pub fn identity<T: Real>(dim: usize) -> CMatrix<T> {
    Array2::from_shape_fn((dim, dim), |(i, j)| if i == j { C::one() } else { C::zero() })
}

pub fn adjoint<T: Real>(m: &CMatrix<T>) -> CMatrix<T> {
    m.t().mapv(|z| z.conj())
}

pub fn kron<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> CMatrix<T> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    Array2::from_shape_fn((ar * br, ac * bc), |(i, j)| a[[i / br, j / bc]] * b[[i % br, j % bc]])
}

pub fn trace<T: Real>(m: &CMatrix<T>) -> C<T> {
    m.diag().iter().fold(C::zero(), |acc, z| acc + z)
}

/// Largest elementwise modulus of `a - b`.
pub fn max_abs_diff<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(T::zero(), T::max)
}

/// Largest elementwise deviation from Hermiticity.
pub fn hermiticity_error<T: Real>(m: &CMatrix<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in i..n {
            worst = worst.max((m[[i, j]] - m[[j, i]].conj()).norm());
        }
    }
    worst
}

pub fn is_unitary<T: Real>(m: &CMatrix<T>, tol: T) -> bool {
    m.is_square() && max_abs_diff(&adjoint(m).dot(m), &identity(m.nrows())) <= tol
}

/// Compares two matrices after removing the global phase of `b` relative to `a`.
///
/// The phase is taken from the entry of `a` with the largest modulus.
pub fn max_abs_diff_up_to_phase<T: Real>(a: &CMatrix<T>, b: &CMatrix<T>) -> T {
    let (idx, _) = a
        .indexed_iter()
        .fold(((0, 0), T::zero()), |best, (ij, z)| if z.norm() > best.1 { (ij, z.norm()) } else { best });
    let (ai, bi) = (a[idx], b[idx]);
    if bi.norm() == T::zero() {
        return max_abs_diff(a, b);
    }
    let rel = ai / bi;
    let phase = rel.unscale(rel.norm());
    let rotated = b.mapv(|z| z * phase);
    max_abs_diff(a, &rotated)
}

/// Applies a `2^k × 2^k` operator to the listed qubits of an `n`-qubit vector.
///
/// `targets[0]` is the most significant bit of the operator's local index.
pub fn apply_local<T: Real>(op: &CMatrix<T>, targets: &[usize], n_qubits: usize, mut amps: ArrayViewMut1<C<T>>) {
    let k = targets.len();
    let local_dim = 1usize << k;
    debug_assert_eq!(op.nrows(), local_dim);
    debug_assert_eq!(amps.len(), 1 << n_qubits);

    let masks: Vec<usize> = targets.iter().map(|&q| qubit_mask(q, n_qubits)).collect();
    let target_bits: usize = masks.iter().fold(0, |acc, m| acc | m);
    let offsets: Vec<usize> = (0..local_dim)
        .map(|local| {
            masks
                .iter()
                .enumerate()
                .filter(|(pos, _)| local & (1 << (k - 1 - pos)) != 0)
                .fold(0, |acc, (_, m)| acc | m)
        })
        .collect();

    let mut gathered = vec![C::zero(); local_dim];
    for base in 0..amps.len() {
        if base & target_bits != 0 {
            continue;
        }
        for (slot, off) in gathered.iter_mut().zip(&offsets) {
            *slot = amps[base | off];
        }
        for (row, off) in offsets.iter().enumerate() {
            let mut acc = C::zero();
            for (col, g) in gathered.iter().enumerate() {
                acc = acc + op[[row, col]] * g;
            }
            amps[base | off] = acc;
        }
    }
}

/// `rho ← U rho U†` with `U` acting on `targets`.
pub fn conjugate_local<T: Real>(op: &CMatrix<T>, targets: &[usize], n_qubits: usize, rho: &mut CMatrix<T>) {
    for col in rho.columns_mut() {
        apply_local(op, targets, n_qubits, col);
    }
    let op_conj = op.mapv(|z| z.conj());
    for row in rho.rows_mut() {
        apply_local(&op_conj, targets, n_qubits, row);
    }
}

/// Full `2^n × 2^n` matrix of a local operator.
pub fn embed<T: Real>(op: &CMatrix<T>, targets: &[usize], n_qubits: usize) -> CMatrix<T> {
    let mut full = identity::<T>(1 << n_qubits);
    for col in full.columns_mut() {
        apply_local(op, targets, n_qubits, col);
    }
    full
}

/// Eigen-decomposition of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEigen<T: Real> {
    /// Eigenvalues in ascending order.
    pub values: Vec<T>,
    /// Orthonormal eigenvectors stored as columns, aligned with `values`.
    pub vectors: CMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    /// Rebuilds `V f(Λ) V†`.
    pub fn map(&self, f: impl Fn(T) -> T) -> CMatrix<T> {
        let n = self.values.len();
        let mut scaled = self.vectors.clone();
        for (mut col, &lambda) in scaled.axis_iter_mut(Axis(1)).zip(&self.values) {
            let fl = cr(f(lambda));
            col.mapv_inplace(|z| z * fl);
        }
        let out = scaled.dot(&adjoint(&self.vectors));
        debug_assert_eq!(out.nrows(), n);
        out
    }
}

/// Cyclic complex Jacobi eigensolver for Hermitian matrices.
///
/// Each rotation first removes the phase of the pivot `a_pq`, then applies
/// the classical real Jacobi rotation to the resulting real symmetric block.
pub fn hermitian_eigen<T: Real>(m: &CMatrix<T>) -> HermitianEigen<T> {
    let n = m.nrows();
    assert!(m.is_square(), "eigen-decomposition needs a square matrix");
    // Symmetrize so that round-off asymmetry cannot stall convergence.
    let mut a = Array2::from_shape_fn((n, n), |(i, j)| (m[[i, j]] + m[[j, i]].conj()) * cr(T::lit(0.5)));
    let mut v = identity::<T>(n);

    let frob = a.iter().map(|z| z.norm_sqr()).fold(T::zero(), |x, y| x + y).sqrt();
    let threshold = T::epsilon() * frob * T::lit(1e-2);
    let two = T::lit(2.0);

    for _sweep in 0..100 {
        let off: T = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[[i, j]].norm_sqr())
            .fold(T::zero(), |x, y| x + y)
            .sqrt();
        if off <= threshold || off == T::zero() {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                let mag = apq.norm();
                if mag <= T::min_positive_value() {
                    continue;
                }
                let phase = apq.unscale(mag);
                let app = a[[p, p]].re;
                let aqq = a[[q, q]].re;
                let theta = (aqq - app) / (two * mag);
                let t = theta.signum() / (theta.abs() + (theta * theta + T::one()).sqrt());
                let cs = T::one() / (t * t + T::one()).sqrt();
                let sn = t * cs;
                // Plane rotation V = diag(1, conj(phase)) · [[c, s], [-s, c]].
                let vpp = cr(cs);
                let vpq = cr(sn);
                let vqp = -phase.conj() * cr(sn);
                let vqq = phase.conj() * cr(cs);

                for i in 0..n {
                    let (aip, aiq) = (a[[i, p]], a[[i, q]]);
                    a[[i, p]] = aip * vpp + aiq * vqp;
                    a[[i, q]] = aip * vpq + aiq * vqq;
                    let (vip, viq) = (v[[i, p]], v[[i, q]]);
                    v[[i, p]] = vip * vpp + viq * vqp;
                    v[[i, q]] = vip * vpq + viq * vqq;
                }
                for j in 0..n {
                    let (apj, aqj) = (a[[p, j]], a[[q, j]]);
                    a[[p, j]] = vpp.conj() * apj + vqp.conj() * aqj;
                    a[[q, j]] = vpq.conj() * apj + vqq.conj() * aqj;
                }
                a[[p, q]] = C::zero();
                a[[q, p]] = C::zero();
                a[[p, p]] = cr(a[[p, p]].re);
                a[[q, q]] = cr(a[[q, q]].re);
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[[i, i]].re.partial_cmp(&a[[j, j]].re).unwrap_or(std::cmp::Ordering::Equal));
    let values = order.iter().map(|&i| a[[i, i]].re).collect();
    let vectors = Array2::from_shape_fn((n, n), |(r, c)| v[[r, order[c]]]);
    HermitianEigen { values, vectors }
}
