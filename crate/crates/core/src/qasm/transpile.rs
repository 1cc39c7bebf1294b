use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gates::{Circuit, CircuitError, Instruction, OneQubitGate};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TranspileError {
    #[error("no coupling between qubits {control} and {target} in either direction")]
    UnroutableCnot { control: usize, target: usize },
    #[error("circuit uses {circuit} qubits but the device has {device}")]
    TooWide { circuit: usize, device: usize },
    #[error("invalid coupling map: {0}")]
    InvalidMap(String),
    #[error(transparent)]
    Circuit(#[from] CircuitError),
}

/// Directed graph of native CNOT `(control, target)` pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "CouplingMapJson", into = "CouplingMapJson")]
pub struct CouplingMap {
    n_qubits: usize,
    edges: BTreeSet<(usize, usize)>,
}

#[derive(Serialize, Deserialize)]
struct CouplingMapJson {
    n_qubits: usize,
    edges: Vec<[usize; 2]>,
}

impl TryFrom<CouplingMapJson> for CouplingMap {
    type Error = TranspileError;

    fn try_from(raw: CouplingMapJson) -> Result<Self, Self::Error> {
        CouplingMap::new(raw.n_qubits, raw.edges.into_iter().map(|[c, t]| (c, t)))
    }
}

impl From<CouplingMap> for CouplingMapJson {
    fn from(m: CouplingMap) -> Self {
        CouplingMapJson { n_qubits: m.n_qubits, edges: m.edges.into_iter().map(|(c, t)| [c, t]).collect() }
    }
}

impl CouplingMap {
    pub fn new(n_qubits: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self, TranspileError> {
        let edges: BTreeSet<_> = edges.into_iter().collect();
        for &(c, t) in &edges {
            if c >= n_qubits || t >= n_qubits {
                return Err(TranspileError::InvalidMap(format!("edge {c}->{t} outside {n_qubits} qubits")));
            }
            if c == t {
                return Err(TranspileError::InvalidMap(format!("self-edge on qubit {c}")));
            }
        }
        Ok(Self { n_qubits, edges })
    }

    /// The five-qubit ibmqx4 device: `1→0, 2→0, 2→1, 2→4, 3→2, 3→4`.
    pub fn ibmqx4() -> Self {
        Self::new(5, [(1, 0), (2, 0), (2, 1), (2, 4), (3, 2), (3, 4)]).expect("preset is valid")
    }

    /// Resolves a preset name.
    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "ibmqx4" => Some(Self::ibmqx4()),
            _ => None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn has_edge(&self, control: usize, target: usize) -> bool {
        self.edges.contains(&(control, target))
    }
}

/// Legalizes CNOT directions against `map`.
///
/// Native pairs are kept; reversed pairs become `H⊗H · CNOT(t→c) · H⊗H`.
/// Pairs with no edge in either direction are rejected.
pub fn transpile(c: &Circuit, map: &CouplingMap) -> Result<Circuit, TranspileError> {
    if c.n_qubits() > map.n_qubits() {
        return Err(TranspileError::TooWide { circuit: c.n_qubits(), device: map.n_qubits() });
    }
    let mut out = Circuit::new(c.n_qubits(), c.n_clbits(), c.name());
    for inst in c.instructions() {
        match *inst {
            Instruction::Cnot { control, target } if !map.has_edge(control, target) => {
                if !map.has_edge(target, control) {
                    return Err(TranspileError::UnroutableCnot { control, target });
                }
                out.single(OneQubitGate::H, control)?.single(OneQubitGate::H, target)?;
                out.cx(target, control)?;
                out.single(OneQubitGate::H, control)?.single(OneQubitGate::H, target)?;
            }
            _ => out.push(inst.clone())?,
        }
    }
    Ok(out)
}
