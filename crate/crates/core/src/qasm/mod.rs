//! OpenQASM 2.0 subset: parser, canonical serializer, and coupling-map transpiler.
//!
//! Accepted statements: the `OPENQASM 2.0;` header, `include "...";`
//! (ignored), `qreg`/`creg` declarations, the gates `h x s sdg t tdg cx`,
//! `measure q[i] -> c[j];`, and `barrier`. `//` starts a line comment.

mod parser;
mod transpile;

use std::fmt::Write as _;

use thiserror::Error;

use crate::gates::{Circuit, Instruction};

pub use parser::MAX_QUBITS;
pub use transpile::{transpile, CouplingMap, TranspileError};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum QasmError {
    #[error("{line}:{col}: missing `OPENQASM 2.0;` header")]
    MissingHeader { line: usize, col: usize },
    #[error("{line}:{col}: unknown gate `{name}`")]
    UnknownGate { name: String, line: usize, col: usize },
    #[error("{line}:{col}: index {index} out of range for register `{register}` of size {size}")]
    IndexOutOfRange { register: String, index: usize, size: usize, line: usize, col: usize },
    #[error("{line}:{col}: qubit {qubit} repeated in one instruction")]
    RepeatedOperand { qubit: usize, line: usize, col: usize },
    #[error("{line}:{col}: register `{name}` declared twice")]
    DuplicateRegister { name: String, line: usize, col: usize },
    #[error("{line}:{col}: unknown register `{name}`")]
    UnknownRegister { name: String, line: usize, col: usize },
    #[error("{line}:{col}: {message}")]
    Syntax { message: String, line: usize, col: usize },
    #[error("{line}:{col}: {message}")]
    InvalidCircuit { message: String, line: usize, col: usize },
    #[error("cannot serialize: {0}")]
    Unsupported(String),
}

impl QasmError {
    /// `(line, column)` of the offending token, 1-based.
    pub fn position(&self) -> Option<(usize, usize)> {
        match self {
            Self::MissingHeader { line, col }
            | Self::UnknownGate { line, col, .. }
            | Self::IndexOutOfRange { line, col, .. }
            | Self::RepeatedOperand { line, col, .. }
            | Self::DuplicateRegister { line, col, .. }
            | Self::UnknownRegister { line, col, .. }
            | Self::Syntax { line, col, .. }
            | Self::InvalidCircuit { line, col, .. } => Some((*line, *col)),
            Self::Unsupported(_) => None,
        }
    }
}

/// Parses QASM source into a circuit. Registers are flattened in declaration order.
pub fn parse(src: &str) -> Result<Circuit, QasmError> {
    parser::parse(src)
}

/// Canonical text: one statement per line, a single space after commas,
/// registers named `q` and `c`.
pub fn serialize(c: &Circuit) -> Result<String, QasmError> {
    if c.n_qubits() == 0 || c.n_qubits() > MAX_QUBITS {
        return Err(QasmError::Unsupported(format!("{} qubits", c.n_qubits())));
    }
    let mut out = String::from("OPENQASM 2.0;\ninclude \"qelib1.inc\";\n");
    writeln!(out, "qreg q[{}];", c.n_qubits()).unwrap();
    if c.n_clbits() > 0 {
        writeln!(out, "creg c[{}];", c.n_clbits()).unwrap();
    }
    for inst in c.instructions() {
        match inst {
            Instruction::Single { gate, qubit } => writeln!(out, "{} q[{qubit}];", gate.name()),
            Instruction::Cnot { control, target } => writeln!(out, "cx q[{control}], q[{target}];"),
            Instruction::Measure { qubit, clbit } => writeln!(out, "measure q[{qubit}] -> c[{clbit}];"),
            Instruction::Barrier { qubits } if qubits.is_empty() => {
                return Err(QasmError::Unsupported("barrier with no operands".into()))
            }
            Instruction::Barrier { qubits } => {
                let ops: Vec<String> = qubits.iter().map(|q| format!("q[{q}]")).collect();
                writeln!(out, "barrier {};", ops.join(", "))
            }
        }
        .unwrap();
    }
    Ok(out)
}
