//! Gate set, circuit IR, unitary simulation, and the router circuit builders.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use ndarray::{array, Array2};
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{self, CMatrix};
use crate::qstate::{basis_state, StateVector};
use crate::scalar::{cis, cr, Real, C};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CircuitError {
    #[error("unknown gate `{0}`")]
    UnknownGate(String),
    #[error("qubit {index} out of range for a {size}-qubit register")]
    QubitOutOfRange { index: usize, size: usize },
    #[error("classical bit {index} out of range for a {size}-bit register")]
    ClbitOutOfRange { index: usize, size: usize },
    #[error("qubit {0} used more than once in one instruction")]
    RepeatedOperand(usize),
    #[error("gate on qubit {0} after it was measured")]
    GateAfterMeasure(usize),
    #[error("measurement cannot be simulated as a unitary")]
    MeasureInUnitary,
    #[error("state has {state} qubits but circuit has {circuit}")]
    DimensionMismatch { state: usize, circuit: usize },
}

pub type Result<T> = std::result::Result<T, CircuitError>;

/// The single-qubit part of the gate set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum OneQubitGate {
    H,
    X,
    S,
    Sdg,
    T,
    Tdg,
}

impl OneQubitGate {
    pub const ALL: [OneQubitGate; 6] = [Self::H, Self::X, Self::S, Self::Sdg, Self::T, Self::Tdg];

    /// Lower-case mnemonic as used in QASM source.
    pub fn name(self) -> &'static str {
        match self {
            Self::H => "h",
            Self::X => "x",
            Self::S => "s",
            Self::Sdg => "sdg",
            Self::T => "t",
            Self::Tdg => "tdg",
        }
    }

    pub fn inverse(self) -> Self {
        match self {
            Self::H | Self::X => self,
            Self::S => Self::Sdg,
            Self::Sdg => Self::S,
            Self::T => Self::Tdg,
            Self::Tdg => Self::T,
        }
    }

    pub fn matrix<T: Real>(self) -> CMatrix<T> {
        let o = C::<T>::one();
        let z = C::<T>::zero();
        let h = cr(T::FRAC_1_SQRT_2());
        let i = C::new(T::zero(), T::one());
        match self {
            Self::H => array![[h, h], [h, -h]],
            Self::X => array![[z, o], [o, z]],
            Self::S => array![[o, z], [z, i]],
            Self::Sdg => array![[o, z], [z, -i]],
            Self::T => array![[o, z], [z, cis(T::FRAC_PI_4())]],
            Self::Tdg => array![[o, z], [z, cis(-T::FRAC_PI_4())]],
        }
    }
}

impl fmt::Display for OneQubitGate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for OneQubitGate {
    type Err = CircuitError;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|g| g.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| CircuitError::UnknownGate(s.to_string()))
    }
}

/// Gate kind without operands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GateKind {
    Single(OneQubitGate),
    Cnot,
}

/// `2×2` matrix for single-qubit kinds; `4×4` in (control, target) order for CNOT.
pub fn gate_matrix<T: Real>(kind: GateKind) -> CMatrix<T> {
    match kind {
        GateKind::Single(g) => g.matrix(),
        GateKind::Cnot => {
            let mut m = Array2::from_elem((4, 4), C::zero());
            for (row, col) in [(0, 0), (1, 1), (2, 3), (3, 2)] {
                m[[row, col]] = C::one();
            }
            m
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Instruction {
    Single { gate: OneQubitGate, qubit: usize },
    Cnot { control: usize, target: usize },
    Measure { qubit: usize, clbit: usize },
    Barrier { qubits: Vec<usize> },
}

impl Instruction {
    pub fn qubits(&self) -> Vec<usize> {
        match self {
            Self::Single { qubit, .. } | Self::Measure { qubit, .. } => vec![*qubit],
            Self::Cnot { control, target } => vec![*control, *target],
            Self::Barrier { qubits } => qubits.clone(),
        }
    }

    pub fn kind(&self) -> Option<GateKind> {
        match self {
            Self::Single { gate, .. } => Some(GateKind::Single(*gate)),
            Self::Cnot { .. } => Some(GateKind::Cnot),
            _ => None,
        }
    }
}

/// Ordered instruction list over a fixed quantum and classical register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    n_qubits: usize,
    n_clbits: usize,
    instructions: Vec<Instruction>,
    name: String,
    measured: BTreeSet<usize>,
}

impl Circuit {
    pub fn new(n_qubits: usize, n_clbits: usize, name: impl Into<String>) -> Self {
        Self { n_qubits, n_clbits, instructions: Vec::new(), name: name.into(), measured: BTreeSet::new() }
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn n_clbits(&self) -> usize {
        self.n_clbits
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn set_name(&mut self, name: impl Into<String>) {
        self.name = name.into();
    }

    pub fn instructions(&self) -> &[Instruction] {
        &self.instructions
    }

    pub fn len(&self) -> usize {
        self.instructions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instructions.is_empty()
    }

    /// Same registers and instruction sequence; the name is ignored.
    pub fn structurally_eq(&self, other: &Circuit) -> bool {
        self.n_qubits == other.n_qubits && self.n_clbits == other.n_clbits && self.instructions == other.instructions
    }

    pub fn has_measurements(&self) -> bool {
        !self.measured.is_empty()
    }

    /// Appends an instruction after checking operand bounds, distinctness, and
    /// that no gate follows a measurement on the same qubit.
    pub fn push(&mut self, inst: Instruction) -> Result<()> {
        let qubits = inst.qubits();
        let mut seen = BTreeSet::new();
        for &q in &qubits {
            if q >= self.n_qubits {
                return Err(CircuitError::QubitOutOfRange { index: q, size: self.n_qubits });
            }
            if !seen.insert(q) {
                return Err(CircuitError::RepeatedOperand(q));
            }
        }
        match &inst {
            Instruction::Single { .. } | Instruction::Cnot { .. } => {
                if let Some(&q) = qubits.iter().find(|q| self.measured.contains(q)) {
                    return Err(CircuitError::GateAfterMeasure(q));
                }
            }
            Instruction::Measure { qubit, clbit } => {
                if *clbit >= self.n_clbits {
                    return Err(CircuitError::ClbitOutOfRange { index: *clbit, size: self.n_clbits });
                }
                self.measured.insert(*qubit);
            }
            Instruction::Barrier { .. } => {}
        }
        self.instructions.push(inst);
        Ok(())
    }

    pub fn single(&mut self, gate: OneQubitGate, qubit: usize) -> Result<&mut Self> {
        self.push(Instruction::Single { gate, qubit })?;
        Ok(self)
    }

    pub fn cx(&mut self, control: usize, target: usize) -> Result<&mut Self> {
        self.push(Instruction::Cnot { control, target })?;
        Ok(self)
    }

    pub fn measure(&mut self, qubit: usize, clbit: usize) -> Result<&mut Self> {
        self.push(Instruction::Measure { qubit, clbit })?;
        Ok(self)
    }

    pub fn barrier(&mut self, qubits: Vec<usize>) -> Result<&mut Self> {
        self.push(Instruction::Barrier { qubits })?;
        Ok(self)
    }

    /// Appends every instruction of `other` (same register sizes required).
    pub fn append(&mut self, other: &Circuit) -> Result<()> {
        other.instructions.iter().try_for_each(|inst| self.push(inst.clone()))
    }

    /// Copy without measurement instructions (terminal measurements only exist
    /// in this IR, so the remaining gates are unaffected).
    pub fn without_measurements(&self) -> Circuit {
        let mut out = Circuit::new(self.n_qubits, self.n_clbits, self.name.clone());
        out.instructions = self
            .instructions
            .iter()
            .filter(|i| !matches!(i, Instruction::Measure { .. }))
            .cloned()
            .collect();
        out
    }

    /// Relabels qubit `q` as `layout[q]` in a register of `width` qubits.
    pub fn remap(&self, layout: &[usize], width: usize) -> Result<Circuit> {
        if layout.len() < self.n_qubits {
            return Err(CircuitError::QubitOutOfRange { index: layout.len(), size: self.n_qubits });
        }
        let mut seen = BTreeSet::new();
        for &q in &layout[..self.n_qubits] {
            if q >= width {
                return Err(CircuitError::QubitOutOfRange { index: q, size: width });
            }
            if !seen.insert(q) {
                return Err(CircuitError::RepeatedOperand(q));
            }
        }
        let map = |q: usize| layout[q];
        let mut out = Circuit::new(width, self.n_clbits, self.name.clone());
        for inst in &self.instructions {
            out.push(match inst {
                Instruction::Single { gate, qubit } => Instruction::Single { gate: *gate, qubit: map(*qubit) },
                Instruction::Cnot { control, target } => Instruction::Cnot { control: map(*control), target: map(*target) },
                Instruction::Measure { qubit, clbit } => Instruction::Measure { qubit: map(*qubit), clbit: *clbit },
                Instruction::Barrier { qubits } => Instruction::Barrier { qubits: qubits.iter().map(|&q| map(q)).collect() },
            })?;
        }
        Ok(out)
    }

    /// Unitary steps in order: `(matrix, targets)`. Barriers are skipped.
    pub(crate) fn unitary_steps<T: Real>(&self) -> Result<Vec<(CMatrix<T>, Vec<usize>)>> {
        let one = OneQubitGate::ALL.map(|g| (g, g.matrix::<T>()));
        let cnot = gate_matrix::<T>(GateKind::Cnot);
        let mut steps = Vec::with_capacity(self.instructions.len());
        for inst in &self.instructions {
            match inst {
                Instruction::Single { gate, qubit } => {
                    let m = one.iter().find(|(g, _)| g == gate).map(|(_, m)| m.clone()).expect("gate table");
                    steps.push((m, vec![*qubit]));
                }
                Instruction::Cnot { control, target } => steps.push((cnot.clone(), vec![*control, *target])),
                Instruction::Barrier { .. } => {}
                Instruction::Measure { .. } => return Err(CircuitError::MeasureInUnitary),
            }
        }
        Ok(steps)
    }
}

/// Runs the circuit on a pure state.
pub fn apply_circuit<T: Real>(c: &Circuit, psi: &StateVector<T>) -> Result<StateVector<T>> {
    if psi.n_qubits() != c.n_qubits() {
        return Err(CircuitError::DimensionMismatch { state: psi.n_qubits(), circuit: c.n_qubits() });
    }
    let mut amps = psi.amplitudes().clone();
    for (m, targets) in c.unitary_steps::<T>()? {
        linalg::apply_local(&m, &targets, c.n_qubits(), amps.view_mut());
    }
    Ok(StateVector::from_array_unchecked(c.n_qubits(), amps))
}

/// Runs the circuit on `|0…0⟩`.
pub fn simulate<T: Real>(c: &Circuit) -> Result<StateVector<T>> {
    let zero = basis_state(c.n_qubits(), 0).expect("index 0 is always valid");
    apply_circuit(c, &zero)
}

/// Product of the embedded gate unitaries in instruction order.
pub fn circuit_unitary<T: Real>(c: &Circuit) -> Result<CMatrix<T>> {
    let mut u = linalg::identity::<T>(1 << c.n_qubits());
    for (m, targets) in c.unitary_steps::<T>()? {
        for col in u.columns_mut() {
            linalg::apply_local(&m, &targets, c.n_qubits(), col);
        }
    }
    Ok(u)
}

/// Ideal controlled-swap permutation on `n` qubits.
pub fn cswap_permutation<T: Real>(control: usize, a: usize, b: usize, n_qubits: usize) -> CMatrix<T> {
    let dim = 1usize << n_qubits;
    let (mc, ma, mb) = (
        linalg::qubit_mask(control, n_qubits),
        linalg::qubit_mask(a, n_qubits),
        linalg::qubit_mask(b, n_qubits),
    );
    let mut m = Array2::from_elem((dim, dim), C::zero());
    for col in 0..dim {
        let swap = col & mc != 0 && ((col & ma != 0) != (col & mb != 0));
        let row = if swap { col ^ ma ^ mb } else { col };
        m[[row, col]] = C::one();
    }
    m
}

/// Appends the Toffoli network `CCX(c1, c2 → target)`: 6 CNOTs, 7 T/T†, 2 H.
fn push_toffoli(circ: &mut Circuit, c1: usize, c2: usize, target: usize) -> Result<()> {
    use OneQubitGate::*;
    circ.single(H, target)?
        .cx(c2, target)?
        .single(Tdg, target)?
        .cx(c1, target)?
        .single(T, target)?
        .cx(c2, target)?
        .single(Tdg, target)?
        .cx(c1, target)?
        .single(T, c2)?
        .single(T, target)?
        .single(H, target)?
        .cx(c1, c2)?
        .single(T, c1)?
        .single(Tdg, c2)?
        .cx(c1, c2)?;
    Ok(())
}

/// Controlled-swap as `CNOT(b→a) · CCX(control, a → b) · CNOT(b→a)`.
pub fn fredkin_circuit(control: usize, a: usize, b: usize) -> Result<Circuit> {
    for (x, y) in [(control, a), (control, b), (a, b)] {
        if x == y {
            return Err(CircuitError::RepeatedOperand(x));
        }
    }
    let width = control.max(a).max(b) + 1;
    let mut circ = Circuit::new(width, 0, "fredkin");
    circ.cx(b, a)?;
    push_toffoli(&mut circ, control, a, b)?;
    circ.cx(b, a)?;
    Ok(circ)
}

/// Single-qubit state preparation expressed as a gate list applied to `|0⟩`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PrepSpec {
    /// `H, S, T, S`: `(|0⟩ − e^{iπ/4}|1⟩)/√2`.
    SuperposedControl,
    Zero,
    One,
    /// `H, T, H, S`: `cos(π/8)|0⟩ + sin(π/8)|1⟩` up to global phase.
    Signal,
    Plus,
    Custom(Vec<OneQubitGate>),
}

impl PrepSpec {
    pub fn gates(&self) -> Vec<OneQubitGate> {
        use OneQubitGate::*;
        match self {
            Self::SuperposedControl => vec![H, S, T, S],
            Self::Zero => vec![],
            Self::One => vec![X],
            Self::Signal => vec![H, T, H, S],
            Self::Plus => vec![H],
            Self::Custom(g) => g.clone(),
        }
    }

    /// Parses a gate-name list such as `["h", "t", "h", "s"]`.
    pub fn from_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        names
            .iter()
            .map(|n| n.as_ref().parse())
            .collect::<Result<Vec<_>>>()
            .map(Self::Custom)
    }

    /// The prepared single-qubit state.
    pub fn state<T: Real>(&self) -> StateVector<T> {
        let mut c = Circuit::new(1, 0, "prep");
        for g in self.gates() {
            c.single(g, 0).expect("qubit 0 exists");
        }
        simulate(&c).expect("prep circuits are unitary")
    }
}

impl FromStr for PrepSpec {
    type Err = CircuitError;

    /// Accepts the preset names or a comma-separated gate list (`h,t,h,s`).
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "superposed-control" => Ok(Self::SuperposedControl),
            "zero" | "0" => Ok(Self::Zero),
            "one" | "1" => Ok(Self::One),
            "signal" => Ok(Self::Signal),
            "plus" | "+" => Ok(Self::Plus),
            "" => Ok(Self::Custom(vec![])),
            list => Self::from_names(&list.split(',').map(str::trim).collect::<Vec<_>>()),
        }
    }
}

/// The three router experiments.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RouterExperiment {
    #[serde(rename = "router-superposition")]
    Superposition,
    #[serde(rename = "router-control0")]
    Control0,
    #[serde(rename = "router-control1")]
    Control1,
}

impl RouterExperiment {
    pub const ALL: [RouterExperiment; 3] = [Self::Superposition, Self::Control0, Self::Control1];

    pub fn name(self) -> &'static str {
        match self {
            Self::Superposition => "router-superposition",
            Self::Control0 => "router-control0",
            Self::Control1 => "router-control1",
        }
    }

    pub fn control_prep(self) -> PrepSpec {
        match self {
            Self::Superposition => PrepSpec::SuperposedControl,
            Self::Control0 => PrepSpec::Zero,
            Self::Control1 => PrepSpec::One,
        }
    }

    pub fn circuit(self) -> Circuit {
        let mut c = router_circuit(&self.control_prep(), &PrepSpec::Signal).expect("presets are valid");
        c.set_name(self.name());
        c
    }

    /// Path qubit that carries the signal after routing, for the classical-control cases.
    pub fn routed_qubit(self) -> Option<usize> {
        match self {
            Self::Superposition => None,
            Self::Control0 => Some(1),
            Self::Control1 => Some(2),
        }
    }
}

impl FromStr for RouterExperiment {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| format!("unknown experiment `{s}`"))
    }
}

/// Control prep on qubit 0, signal prep on qubit 1, `H` on qubit 2 (the empty
/// path), then the controlled swap.
pub fn router_circuit(control_prep: &PrepSpec, signal_prep: &PrepSpec) -> Result<Circuit> {
    let mut c = Circuit::new(3, 3, "router-custom");
    for g in control_prep.gates() {
        c.single(g, 0)?;
    }
    for g in signal_prep.gates() {
        c.single(g, 1)?;
    }
    c.single(OneQubitGate::H, 2)?;
    let fredkin = fredkin_circuit(0, 1, 2)?;
    for inst in fredkin.instructions() {
        c.push(inst.clone())?;
    }
    Ok(c)
}
