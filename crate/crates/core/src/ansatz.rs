//! Layered variational blocks `U(θ)`.

use crate::circuit::{Angle, Circuit};
use crate::error::{Result, SpqcError};
use crate::statevector::Axis;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Entangler {
    None,
    /// CNOT from qubit `i` to `i + 1 mod n` for every `i`; nothing for `n = 1`.
    Ring,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnsatzLayer {
    /// Rotations applied to every qubit, in order.
    pub axes: Vec<Axis>,
    pub entangler: Entangler,
}

/// Declarative layout of a variational block. Parameters are ordered layer by
/// layer, then qubit by qubit, then by rotation axis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnsatzSpec {
    pub num_qubits: usize,
    pub layers: Vec<AnsatzLayer>,
}

impl AnsatzSpec {
    /// `depth` layers of `RY, RZ` on every qubit followed by a CNOT ring.
    pub fn hardware_efficient(num_qubits: usize, depth: usize) -> Self {
        let layer = AnsatzLayer { axes: vec![Axis::Y, Axis::Z], entangler: Entangler::Ring };
        Self { num_qubits, layers: vec![layer; depth] }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_qubits == 0 {
            return Err(SpqcError::Config("ansatz needs at least one qubit".into()));
        }
        if self.layers.is_empty() {
            return Err(SpqcError::Config("ansatz depth must be at least 1".into()));
        }
        Ok(())
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn params_in_layer(&self, layer: usize) -> usize {
        self.num_qubits * self.layers[layer].axes.len()
    }

    pub fn params_per_branch(&self) -> usize {
        (0..self.depth()).map(|l| self.params_in_layer(l)).sum()
    }

    /// Offset of `layer`'s first parameter within a branch parameter block.
    pub fn layer_offset(&self, layer: usize) -> usize {
        (0..layer).map(|l| self.params_in_layer(l)).sum()
    }

    /// Appends `layer` to `circuit`, acting on `qubits` (local ansatz qubit `q`
    /// is circuit qubit `qubits[q]`) and reading angles from parameter indices
    /// `param_base + layer_offset(layer) + …`.
    pub fn append_layer(&self, layer: usize, circuit: &mut Circuit, qubits: &[usize], param_base: usize) {
        debug_assert_eq!(qubits.len(), self.num_qubits);
        let spec = &self.layers[layer];
        let mut k = param_base + self.layer_offset(layer);
        for &q in qubits {
            for &axis in &spec.axes {
                circuit.rotation(axis, q, Angle::Param(k));
                k += 1;
            }
        }
        if spec.entangler == Entangler::Ring && self.num_qubits > 1 {
            let n = self.num_qubits;
            for i in 0..n {
                circuit.cnot(qubits[i], qubits[(i + 1) % n]);
            }
        }
    }

    /// The whole block on local qubits `0..num_qubits`.
    pub fn circuit(&self) -> Circuit {
        let mut c = Circuit::new(self.num_qubits);
        let qubits: Vec<usize> = (0..self.num_qubits).collect();
        for l in 0..self.depth() {
            self.append_layer(l, &mut c, &qubits, 0);
        }
        c
    }

    /// A single layer on local qubits, with parameter indices relative to the
    /// start of the branch block.
    pub fn layer_circuit(&self, layer: usize) -> Circuit {
        let mut c = Circuit::new(self.num_qubits);
        let qubits: Vec<usize> = (0..self.num_qubits).collect();
        self.append_layer(layer, &mut c, &qubits, 0);
        c
    }
}
