//! Single-branch baseline circuit with the same encoding and readout affine
//! terms as the superposed model, deepened to match its parameter count.

use num_complex::Complex64;

use crate::ansatz::AnsatzSpec;
use crate::circuit::Circuit;
use crate::encoding::EncodingSpec;
use crate::error::{Result, SpqcError};
use crate::model::{Model, SpqcModelSpec};
use crate::statevector::{ControlSpec, StateVector};

#[derive(Debug, Clone)]
pub struct PqcModel {
    n: usize,
    ansatz: AnsatzSpec,
    encoding: EncodingSpec,
}

impl PqcModel {
    pub fn new(ansatz: AnsatzSpec, encoding: EncodingSpec) -> Result<Self> {
        ansatz.validate()?;
        encoding.validate()?;
        if ansatz.num_qubits != encoding.num_data_qubits {
            return Err(SpqcError::Config("ansatz/encoding width mismatch".into()));
        }
        if encoding.reuploads > ansatz.depth() {
            return Err(SpqcError::Config("more uploads than ansatz layers".into()));
        }
        Ok(Self { n: ansatz.num_qubits, ansatz, encoding })
    }

    /// Baseline for `spqc` whose depth is `depth_multiplier` times the branch
    /// depth. The ansatz parameter count must equal `L × params_per_branch`.
    pub fn depth_matched(spqc: &SpqcModelSpec, depth_multiplier: usize) -> Result<Self> {
        spqc.validate()?;
        let base = &spqc.ansatz;
        let depth = base.depth() * depth_multiplier;
        let layers = (0..depth).map(|l| base.layers[l % base.depth()].clone()).collect();
        let ansatz = AnsatzSpec { num_qubits: base.num_qubits, layers };
        let target = spqc.branch_count() * base.params_per_branch();
        if ansatz.params_per_branch() != target {
            return Err(SpqcError::Config(format!(
                "depth multiplier {depth_multiplier} gives {} parameters, superposed model has {target}",
                ansatz.params_per_branch()
            )));
        }
        let mut encoding = spqc.encoding.clone();
        encoding.reuploads *= depth_multiplier;
        Self::new(ansatz, encoding)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn depth(&self) -> usize {
        self.ansatz.depth()
    }

    fn circuit(&self, x: &[f64]) -> Result<Circuit> {
        let angles = self.encoding.angles(x)?;
        let qubits: Vec<usize> = (0..self.n).collect();
        let mut c = Circuit::new(self.n);
        for layer in 0..self.ansatz.depth() {
            if self.encoding.uploads_before(layer) {
                self.encoding.append_layer(&mut c, &angles, &qubits);
            }
            self.ansatz.append_layer(layer, &mut c, &qubits, 0);
        }
        Ok(c)
    }

    fn check(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.num_params() {
            return Err(SpqcError::DimensionMismatch { expected: self.num_params(), actual: theta.len() });
        }
        Ok(())
    }

    /// `scale · ⟨Z_0⟩ + bias` through the statevector.
    pub fn forward(&self, theta: &[f64], x: &[f64]) -> Result<f64> {
        self.check(theta)?;
        let mut state = StateVector::new_zero_state(self.n)?;
        let qubits: Vec<usize> = (0..self.n).collect();
        let angles = self.num_angles();
        self.circuit(x)?.apply_to_state(&mut state, &theta[..angles], &qubits, &ControlSpec::none())?;
        Ok(theta[angles] * state.expectation_z(0)? + theta[angles + 1])
    }
}

/// Forward pass of the depth-matched baseline for `spqc`.
pub fn depth_matched_pqc_forward(spqc: &SpqcModelSpec, depth_multiplier: usize, theta: &[f64], x: &[f64]) -> Result<f64> {
    PqcModel::depth_matched(spqc, depth_multiplier)?.forward(theta, x)
}

impl Model for PqcModel {
    fn num_params(&self) -> usize {
        self.ansatz.params_per_branch() + 2
    }

    fn predict(&self, params: &[f64], x: &[f64]) -> Result<f64> {
        self.check(params)?;
        let mut v = vec![Complex64::new(0.0, 0.0); 1 << self.n];
        v[0] = Complex64::new(1.0, 0.0);
        let angles = self.num_angles();
        self.circuit(x)?.run(&params[..angles], &mut v);
        let z = crate::statevector::expectation_z_slice(&v, 0);
        Ok(params[angles] * z + params[angles + 1])
    }

    fn predict_with_grad(&self, params: &[f64], x: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.check(params)?;
        let mut init = vec![Complex64::new(0.0, 0.0); 1 << self.n];
        init[0] = Complex64::new(1.0, 0.0);
        let angles = self.num_angles();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let z = self.circuit(x)?.expectation_z_grad(&params[..angles], &init, 0, &mut grad[..angles]);
        let scale = params[angles];
        for g in &mut grad[..angles] {
            *g *= scale;
        }
        grad[angles] = z;
        grad[angles + 1] = 1.0;
        Ok(scale * z + params[angles + 1])
    }
}
