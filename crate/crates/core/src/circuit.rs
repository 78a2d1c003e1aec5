//! Gate lists with symbolic angles, plus adjoint differentiation.
//!
//! A [`Circuit`] is the single description of a gate layout. It can be run on a
//! raw amplitude slice (local qubit numbering), written onto a [`StateVector`]
//! through a qubit map and extra controls, or differentiated with respect to its
//! parameter angles in one backward sweep.

use num_complex::Complex64;

use crate::error::Result;
use crate::statevector::{
    apply_matrix, dagger, expectation_z_slice, inner_product_slice, rotation_matrix, Amplitude, Axis, ControlSpec,
    Gate, Matrix2, Polarity, StateVector,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Angle {
    Fixed(f64),
    /// Index into the parameter slice passed at run time.
    Param(usize),
}

impl Angle {
    fn resolve(self, params: &[f64]) -> f64 {
        match self {
            Angle::Fixed(t) => t,
            Angle::Param(k) => params[k],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Op {
    H { target: usize },
    Rotation { axis: Axis, target: usize, angle: Angle },
    Cnot { control: usize, target: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Circuit {
    num_qubits: usize,
    ops: Vec<Op>,
    num_params: usize,
}

impl Circuit {
    pub fn new(num_qubits: usize) -> Self {
        Self { num_qubits, ops: Vec::new(), num_params: 0 }
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// One past the largest parameter index referenced.
    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn ops(&self) -> &[Op] {
        &self.ops
    }

    pub fn push(&mut self, op: Op) {
        let touched = match op {
            Op::H { target } | Op::Rotation { target, .. } => target,
            Op::Cnot { control, target } => {
                assert_ne!(control, target, "cnot control equals target");
                control.max(target)
            }
        };
        assert!(touched < self.num_qubits, "qubit {touched} outside {}-qubit circuit", self.num_qubits);
        if let Op::Rotation { angle: Angle::Param(k), .. } = op {
            self.num_params = self.num_params.max(k + 1);
        }
        self.ops.push(op);
    }

    pub fn h(&mut self, target: usize) {
        self.push(Op::H { target });
    }

    pub fn rotation(&mut self, axis: Axis, target: usize, angle: Angle) {
        self.push(Op::Rotation { axis, target, angle });
    }

    pub fn cnot(&mut self, control: usize, target: usize) {
        self.push(Op::Cnot { control, target });
    }

    pub fn extend(&mut self, other: &Circuit) {
        assert_eq!(self.num_qubits, other.num_qubits);
        for &op in &other.ops {
            self.push(op);
        }
    }

    /// Runs the circuit on `amps` (length `2^num_qubits`, local numbering).
    pub fn run(&self, params: &[f64], amps: &mut [Amplitude]) {
        debug_assert_eq!(amps.len(), 1 << self.num_qubits);
        for op in &self.ops {
            apply_op(amps, op, params, false);
        }
    }

    /// Runs the circuit on a slice whose qubits are numbered by `qubit_map`
    /// (local qubit `q` acts on bit `qubit_map[q]` of the slice index).
    pub fn run_mapped(&self, params: &[f64], amps: &mut [Amplitude], qubit_map: &[usize]) {
        debug_assert_eq!(qubit_map.len(), self.num_qubits);
        for op in &self.ops {
            apply_op(amps, &remap(op, qubit_map), params, false);
        }
    }

    /// Runs the inverse circuit.
    pub fn run_inverse(&self, params: &[f64], amps: &mut [Amplitude]) {
        for op in self.ops.iter().rev() {
            apply_op(amps, op, params, true);
        }
    }

    /// Applies the circuit to `state`, with local qubit `q` mapped to
    /// `qubit_map[q]` and every gate additionally conditioned on `controls`.
    pub fn apply_to_state(
        &self,
        state: &mut StateVector,
        params: &[f64],
        qubit_map: &[usize],
        controls: &ControlSpec,
    ) -> Result<()> {
        debug_assert_eq!(qubit_map.len(), self.num_qubits);
        for op in &self.ops {
            match *op {
                Op::H { target } => state.apply_gate(Gate::H, qubit_map[target], controls)?,
                Op::Rotation { axis, target, angle } => {
                    state.apply_gate(Gate::rotation(axis, angle.resolve(params)), qubit_map[target], controls)?
                }
                Op::Cnot { control, target } => {
                    let ctrl = controls.clone().with(qubit_map[control], Polarity::Positive);
                    state.apply_gate(Gate::X, qubit_map[target], &ctrl)?
                }
            }
        }
        Ok(())
    }

    /// `⟨0…0| C |init⟩` and its derivative with respect to every parameter,
    /// accumulated into `grad` (which must hold at least `num_params` entries).
    pub fn amplitude_grad(&self, params: &[f64], init: &[Amplitude], grad: &mut [Amplitude]) -> Amplitude {
        let mut phi = init.to_vec();
        self.run(params, &mut phi);
        let value = phi[0];
        let mut lambda = vec![Complex64::new(0.0, 0.0); phi.len()];
        lambda[0] = Complex64::new(1.0, 0.0);
        self.backward(params, phi, lambda, |k, d| grad[k] += d);
        value
    }

    /// `⟨Z_qubit⟩` of `C|init⟩` and its gradient, accumulated into `grad`.
    pub fn expectation_z_grad(&self, params: &[f64], init: &[Amplitude], qubit: usize, grad: &mut [f64]) -> f64 {
        let mut phi = init.to_vec();
        self.run(params, &mut phi);
        let value = expectation_z_slice(&phi, qubit);
        let mut lambda = phi.clone();
        for (i, a) in lambda.iter_mut().enumerate() {
            if (i >> qubit) & 1 == 1 {
                *a = -*a;
            }
        }
        self.backward(params, phi, lambda, |k, d| grad[k] += 2.0 * d.re);
        value
    }

    /// Backward sweep. On entry `phi` is the output state and `lambda` the
    /// adjoint vector at the output; `sink(k, ⟨λ|∂G/∂θ_k|φ⟩)` is called for
    /// every parameterised gate.
    fn backward(
        &self,
        params: &[f64],
        mut phi: Vec<Amplitude>,
        mut lambda: Vec<Amplitude>,
        mut sink: impl FnMut(usize, Amplitude),
    ) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); phi.len()];
        for op in self.ops.iter().rev() {
            if let Op::Rotation { axis, target, angle: Angle::Param(k) } = *op {
                // phi currently holds G_k φ_{k-1}
                scratch.copy_from_slice(&phi);
                apply_matrix(&mut scratch, &axis.generator(), target, 0, 0);
                sink(k, inner_product_slice(&lambda, &scratch));
            }
            apply_op(&mut phi, op, params, true);
            apply_op(&mut lambda, op, params, true);
        }
    }
}

fn remap(op: &Op, qubit_map: &[usize]) -> Op {
    match *op {
        Op::H { target } => Op::H { target: qubit_map[target] },
        Op::Rotation { axis, target, angle } => Op::Rotation { axis, target: qubit_map[target], angle },
        Op::Cnot { control, target } => Op::Cnot { control: qubit_map[control], target: qubit_map[target] },
    }
}

fn op_matrix(op: &Op, params: &[f64]) -> Matrix2 {
    match *op {
        Op::H { .. } => Gate::H.matrix(),
        Op::Rotation { axis, angle, .. } => rotation_matrix(axis, angle.resolve(params)),
        Op::Cnot { .. } => Gate::X.matrix(),
    }
}

fn apply_op(amps: &mut [Amplitude], op: &Op, params: &[f64], inverse: bool) {
    let mut m = op_matrix(op, params);
    if inverse {
        m = dagger(&m);
    }
    match *op {
        Op::H { target } | Op::Rotation { target, .. } => apply_matrix(amps, &m, target, 0, 0),
        Op::Cnot { control, target } => apply_matrix(amps, &m, target, 1 << control, 1 << control),
    }
}
