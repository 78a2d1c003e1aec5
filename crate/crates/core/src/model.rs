//! The superposed parameterised circuit model `f(x; θ)`.
//!
//! Register layout for a model with `n` data qubits, `m` address qubits and
//! activation degree `r`:
//!
//! ```text
//! qubits 0 .. n          data replica 0
//! qubits n .. 2n         data replica 1
//! ...
//! qubits r·n .. r·n + m  address register (address qubit 0 is the LSB of j)
//! ```
//!
//! Every replica receives the same encoding and the same `θ^(j)` conditioned on
//! the shared address register. Post-selecting all replicas on `|0…0⟩` leaves
//! the address register in `Σ_j p_j^r |j⟩` up to normalisation, where
//! `p_j = ⟨0|U(θ^(j)) S(x)|0⟩`.
//!
//! The readout applies a small trainable ansatz to the address register and
//! returns `scale · ⟨Z⟩ + bias` on address qubit 0.
//!
//! Parameter vector layout: `[θ^(0) … θ^(L-1) | mixing angles | scale | bias]`.

use std::ops::Range;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ansatz::AnsatzSpec;
use crate::circuit::Circuit;
use crate::encoding::EncodingSpec;
use crate::error::{Result, SpqcError};
use crate::ffqram::{apply_branch_layers, prepare_address_superposition, BranchParams};
use crate::statevector::{Amplitude, ControlSpec, Gate, StateVector, MAX_QUBITS, POSTSELECT_EPS};

/// Anything the trainer can fit: a scalar prediction with an exact gradient.
pub trait Model: Sync {
    fn num_params(&self) -> usize;

    fn predict(&self, params: &[f64], x: &[f64]) -> Result<f64>;

    /// Prediction, with `∂f/∂params` written into `grad` (overwritten).
    fn predict_with_grad(&self, params: &[f64], x: &[f64], grad: &mut [f64]) -> Result<f64>;

    /// Number of leading rotation angles; the remaining two entries are the
    /// affine readout `(scale, bias)`.
    fn num_angles(&self) -> usize {
        self.num_params() - 2
    }

    /// Angles uniform in `[0, 2π)` from a seeded stream, then `scale = 1`,
    /// `bias = 0`.
    fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params: Vec<f64> = (0..self.num_angles()).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect();
        params.extend([1.0, 0.0]);
        params
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReadoutSpec {
    /// Depth of the trainable ansatz on the address register.
    pub mixing_depth: usize,
}

impl Default for ReadoutSpec {
    fn default() -> Self {
        Self { mixing_depth: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpqcModelSpec {
    /// Data qubits per replica.
    pub n: usize,
    /// Address qubits; `L = 2^m` branches.
    pub m: usize,
    /// Number of data replicas; amplitudes are raised to this power.
    pub activation_degree: usize,
    pub encoding: EncodingSpec,
    pub ansatz: AnsatzSpec,
    pub readout: ReadoutSpec,
}

/// Where each group of parameters lives in the flat vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamLayout {
    pub branches: Range<usize>,
    pub per_branch: usize,
    pub mixing: Range<usize>,
    pub scale: usize,
    pub bias: usize,
}

impl ParamLayout {
    pub fn len(&self) -> usize {
        self.bias + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn branch(&self, j: usize) -> Range<usize> {
        let start = self.branches.start + j * self.per_branch;
        start..start + self.per_branch
    }
}

impl SpqcModelSpec {
    /// Hardware-efficient ansatz of `depth` layers, inputs in `[0, 1]` mapped to
    /// `[0, π]` and re-uploaded before every layer, mixing depth 1.
    pub fn new(n: usize, m: usize, activation_degree: usize, depth: usize) -> Self {
        Self {
            n,
            m,
            activation_degree,
            encoding: EncodingSpec::new(n, (0.0, 1.0), depth),
            ansatz: AnsatzSpec::hardware_efficient(n, depth),
            readout: ReadoutSpec::default(),
        }
    }

    pub fn with_encoding(mut self, encoding: EncodingSpec) -> Self {
        self.encoding = encoding;
        self
    }

    pub fn with_readout(mut self, readout: ReadoutSpec) -> Self {
        self.readout = readout;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 {
            return Err(SpqcError::Config("model needs at least one data qubit".into()));
        }
        if self.m == 0 {
            return Err(SpqcError::Config("model needs at least one address qubit".into()));
        }
        if self.activation_degree == 0 {
            return Err(SpqcError::Config("activation degree must be at least 1".into()));
        }
        if self.total_qubits() > MAX_QUBITS {
            return Err(SpqcError::Config(format!(
                "{} qubits exceeds the {MAX_QUBITS}-qubit cap",
                self.total_qubits()
            )));
        }
        self.ansatz.validate()?;
        self.encoding.validate()?;
        if self.ansatz.num_qubits != self.n || self.encoding.num_data_qubits != self.n {
            return Err(SpqcError::Config("ansatz/encoding width differs from n".into()));
        }
        if self.encoding.reuploads > self.ansatz.depth() {
            return Err(SpqcError::Config(format!(
                "{} uploads but only {} ansatz layers",
                self.encoding.reuploads,
                self.ansatz.depth()
            )));
        }
        Ok(())
    }

    pub fn branch_count(&self) -> usize {
        1 << self.m
    }

    pub fn total_qubits(&self) -> usize {
        self.activation_degree * self.n + self.m
    }

    pub fn replica_qubits(&self, replica: usize) -> Vec<usize> {
        (replica * self.n..(replica + 1) * self.n).collect()
    }

    pub fn data_qubits(&self) -> Vec<usize> {
        (0..self.activation_degree * self.n).collect()
    }

    pub fn address_qubits(&self) -> Vec<usize> {
        let base = self.activation_degree * self.n;
        (base..base + self.m).collect()
    }

    pub fn mixing_ansatz(&self) -> AnsatzSpec {
        AnsatzSpec::hardware_efficient(self.m, self.readout.mixing_depth)
    }

    pub fn layout(&self) -> ParamLayout {
        let per_branch = self.ansatz.params_per_branch();
        let branches = 0..self.branch_count() * per_branch;
        let mixing = branches.end..branches.end + self.mixing_ansatz().params_per_branch();
        ParamLayout { per_branch, scale: mixing.end, bias: mixing.end + 1, branches, mixing }
    }

    pub fn num_params(&self) -> usize {
        self.layout().len()
    }
}

/// Diagnostics of one forward pass.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchAmplitudes {
    /// `p_j = ⟨0|U(θ^(j)) S(x)|0⟩` for every branch.
    pub p: Vec<Amplitude>,
    /// Probability that every data replica reads all-zeros.
    pub success_prob: f64,
    /// `(Σ_j |p_j^r|²)^{1/2}`.
    pub normalizer: f64,
    /// Address amplitudes of the post-selected state, before the readout.
    pub address_state: Vec<Amplitude>,
}

#[derive(Debug, Clone)]
pub struct SpqcModel {
    spec: SpqcModelSpec,
    layout: ParamLayout,
    mixing: Circuit,
}

impl SpqcModel {
    pub fn new(spec: SpqcModelSpec) -> Result<Self> {
        spec.validate()?;
        let layout = spec.layout();
        let mixing = spec.mixing_ansatz().circuit();
        Ok(Self { spec, layout, mixing })
    }

    pub fn spec(&self) -> &SpqcModelSpec {
        &self.spec
    }

    pub fn layout(&self) -> &ParamLayout {
        &self.layout
    }

    fn check_params(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.layout.len() {
            return Err(SpqcError::DimensionMismatch { expected: self.layout.len(), actual: theta.len() });
        }
        Ok(())
    }

    /// Joint data and address state on `r·n + m` qubits just before the
    /// data registers are measured.
    pub fn pre_projection_state(&self, theta: &[f64], x: &[f64]) -> Result<StateVector> {
        self.check_params(theta)?;
        let spec = &self.spec;
        let angles = spec.encoding.angles(x)?;
        let address = spec.address_qubits();
        let params = BranchParams::from_slice(spec.branch_count(), self.layout.per_branch, &theta[self.layout.branches.clone()])?;

        let mut state = StateVector::new_zero_state(spec.total_qubits())?;
        prepare_address_superposition(&mut state, &address)?;
        for layer in 0..spec.ansatz.depth() {
            for replica in 0..spec.activation_degree {
                let data = spec.replica_qubits(replica);
                if spec.encoding.uploads_before(layer) {
                    for (&q, &t) in data.iter().zip(&angles) {
                        state.apply(Gate::Ry(t), q)?;
                    }
                }
                apply_branch_layers(&mut state, &spec.ansatz, &params, layer..layer + 1, &data, &address)?;
            }
        }
        Ok(state)
    }

    /// Applies the trainable readout ansatz to the address register of `state`.
    pub fn apply_mixing(&self, state: &mut StateVector, theta: &[f64]) -> Result<()> {
        self.check_params(theta)?;
        self.mixing.apply_to_state(state, &theta[self.layout.mixing.clone()], &self.spec.address_qubits(), &ControlSpec::none())
    }

    /// Full superposed simulation on `r·n + m` qubits.
    pub fn forward(&self, theta: &[f64], x: &[f64]) -> Result<(f64, BranchAmplitudes)> {
        let state = self.pre_projection_state(theta, x)?;
        let spec = &self.spec;
        let address = spec.address_qubits();
        let data = spec.data_qubits();
        let (success_prob, mut post) = state
            .project_postselect(&data, &vec![0; data.len()])
            .map_err(|e| forward_error(x, e))?;
        let shift = data.len();
        let address_state: Vec<Amplitude> = (0..spec.branch_count()).map(|j| post.amplitude(j << shift)).collect();

        self.apply_mixing(&mut post, theta)?;
        let z = post.expectation_z(address[0])?;

        let p = (0..spec.branch_count())
            .map(|j| self.branch_amplitude(&theta[self.layout.branch(j)], x))
            .collect::<Result<Vec<_>>>()?;
        let normalizer = p.iter().map(|a| a.powu(spec.activation_degree as u32).norm_sqr()).sum::<f64>().sqrt();

        let prediction = theta[self.layout.scale] * z + theta[self.layout.bias];
        Ok((prediction, BranchAmplitudes { p, success_prob, normalizer, address_state }))
    }

    /// `⟨0|U(θ_j) S(x)|0⟩` on a standalone `n`-qubit register.
    pub fn branch_amplitude(&self, theta_j: &[f64], x: &[f64]) -> Result<Amplitude> {
        if theta_j.len() != self.layout.per_branch {
            return Err(SpqcError::DimensionMismatch { expected: self.layout.per_branch, actual: theta_j.len() });
        }
        let circuit = self.branch_circuit(x)?;
        let mut state = StateVector::new_zero_state(self.spec.n)?;
        let qubits: Vec<usize> = (0..self.spec.n).collect();
        circuit.apply_to_state(&mut state, theta_j, &qubits, &ControlSpec::none())?;
        Ok(state.amplitude(0))
    }

    /// Interleaved encoding and ansatz layers for input `x`, on local qubits,
    /// with parameter indices relative to a branch block.
    pub fn branch_circuit(&self, x: &[f64]) -> Result<Circuit> {
        let spec = &self.spec;
        let angles = spec.encoding.angles(x)?;
        let qubits: Vec<usize> = (0..spec.n).collect();
        let mut c = Circuit::new(spec.n);
        for layer in 0..spec.ansatz.depth() {
            if spec.encoding.uploads_before(layer) {
                spec.encoding.append_layer(&mut c, &angles, &qubits);
            }
            spec.ansatz.append_layer(layer, &mut c, &qubits, 0);
        }
        Ok(c)
    }

    fn zero_vector(dim_qubits: usize) -> Vec<Amplitude> {
        let mut v = vec![Complex64::new(0.0, 0.0); 1 << dim_qubits];
        v[0] = Complex64::new(1.0, 0.0);
        v
    }

    /// Normalised `p^r`, or a forward error when the joint success probability
    /// `Σ|p_j^r|² / L` is negligible.
    fn activated(&self, p: &[Amplitude], x: &[f64]) -> Result<(Vec<Amplitude>, f64)> {
        let r = self.spec.activation_degree as u32;
        let q: Vec<Amplitude> = p.iter().map(|a| a.powu(r)).collect();
        let norm_sqr: f64 = q.iter().map(|a| a.norm_sqr()).sum();
        let success = norm_sqr / p.len() as f64;
        if success < POSTSELECT_EPS {
            return Err(forward_error(x, SpqcError::PostSelectionImpossible { probability: success }));
        }
        let inv = 1.0 / norm_sqr.sqrt();
        Ok((q.into_iter().map(|a| a * inv).collect(), norm_sqr))
    }
}

fn forward_error(x: &[f64], err: SpqcError) -> SpqcError {
    SpqcError::Forward { x: x.to_vec(), reason: err.to_string() }
}

impl Model for SpqcModel {
    fn num_params(&self) -> usize {
        self.layout.len()
    }

    /// Branch-by-branch evaluation; agrees with [`SpqcModel::forward`].
    fn predict(&self, params: &[f64], x: &[f64]) -> Result<f64> {
        self.check_params(params)?;
        let circuit = self.branch_circuit(x)?;
        let zero = Self::zero_vector(self.spec.n);
        let mut buf = zero.clone();
        let p: Vec<Amplitude> = (0..self.spec.branch_count())
            .map(|j| {
                buf.copy_from_slice(&zero);
                circuit.run(&params[self.layout.branch(j)], &mut buf);
                buf[0]
            })
            .collect();
        let (mut u, _) = self.activated(&p, x)?;
        self.mixing.run(&params[self.layout.mixing.clone()], &mut u);
        let z = crate::statevector::expectation_z_slice(&u, 0);
        Ok(params[self.layout.scale] * z + params[self.layout.bias])
    }

    fn predict_with_grad(&self, params: &[f64], x: &[f64], grad: &mut [f64]) -> Result<f64> {
        self.check_params(params)?;
        let layout = &self.layout;
        let l = self.spec.branch_count();
        let per = layout.per_branch;
        let r = self.spec.activation_degree;
        let circuit = self.branch_circuit(x)?;
        let zero = Self::zero_vector(self.spec.n);

        let mut dp = vec![Complex64::new(0.0, 0.0); l * per];
        let p: Vec<Amplitude> = (0..l)
            .map(|j| circuit.amplitude_grad(&params[layout.branch(j)], &zero, &mut dp[j * per..(j + 1) * per]))
            .collect();
        let (u, norm_sqr) = self.activated(&p, x)?;

        grad.iter_mut().for_each(|g| *g = 0.0);
        let mix_params = &params[layout.mixing.clone()];
        let z = self.mixing.expectation_z_grad(mix_params, &u, 0, &mut grad[layout.mixing.clone()]);

        // M u with M = W† Z_0 W
        let mut mu = u.clone();
        self.mixing.run(mix_params, &mut mu);
        for (i, a) in mu.iter_mut().enumerate() {
            if i & 1 == 1 {
                *a = -*a;
            }
        }
        self.mixing.run_inverse(mix_params, &mut mu);

        let scale = params[layout.scale];
        let inv_norm = 1.0 / norm_sqr.sqrt();
        for j in 0..l {
            // ∂R/∂q̄_j, then chain through q_j = p_j^r
            let g = (mu[j] - u[j] * z) * inv_norm;
            let dq = p[j].powu(r as u32 - 1) * r as f64;
            let coeff = g.conj() * dq;
            for k in 0..per {
                grad[layout.branches.start + j * per + k] = 2.0 * scale * (coeff * dp[j * per + k]).re;
            }
        }
        for g in &mut grad[layout.mixing.clone()] {
            *g *= scale;
        }
        grad[layout.scale] = z;
        grad[layout.bias] = 1.0;
        Ok(scale * z + params[layout.bias])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn model(n: usize, m: usize, r: usize, depth: usize) -> SpqcModel {
        SpqcModel::new(SpqcModelSpec::new(n, m, r, depth)).unwrap()
    }

    #[test]
    fn identity_circuit() {
        let md = model(1, 2, 1, 1);
        let mut theta = vec![0.0; md.num_params()];
        theta[md.layout().scale] = 1.0;
        let (pred, diag) = md.forward(&theta, &[0.0]).unwrap();
        assert!(diag.p.iter().all(|p| (p - 1.0).norm() < 1e-15));
        assert!((diag.success_prob - 1.0).abs() < 1e-12);
        assert!(diag.address_state.iter().all(|a| (a - 0.5).norm() < 1e-12));
        // zero mixing angles followed by the CNOT ring leave a uniform state uniform
        assert!(pred.abs() < 1e-12);
    }

    #[test]
    fn closed_form_single_qubit_amplitude() {
        // one layer: RY(x) then RY(θ), RZ(φ); amplitude = e^{-iφ/2} cos((θ + x)/2)
        let md = SpqcModel::new(
            SpqcModelSpec::new(1, 1, 1, 1).with_encoding(EncodingSpec::new(1, (0.0, PI), 1).with_angle_range(0.0, PI)),
        )
        .unwrap();
        for &(x, th) in &[(0.3, 1.2), (2.0, -0.4), (PI, PI)] {
            let p = md.branch_amplitude(&[th, 0.0], &[x]).unwrap();
            assert!((p - ((th + x) / 2.0).cos()).norm() < 1e-14);
        }
    }

    #[test]
    fn layout_counts() {
        let spec = SpqcModelSpec::new(2, 2, 1, 3);
        let lay = spec.layout();
        assert_eq!(lay.per_branch, 12);
        assert_eq!(lay.branches, 0..48);
        assert_eq!(lay.mixing, 48..52);
        assert_eq!(spec.num_params(), 54);
        assert_eq!(SpqcModelSpec::new(2, 3, 2, 1).total_qubits(), 7);
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(SpqcModel::new(SpqcModelSpec::new(2, 0, 1, 1)).is_err());
        assert!(SpqcModel::new(SpqcModelSpec::new(2, 2, 0, 1)).is_err());
        assert!(SpqcModel::new(SpqcModelSpec::new(8, 10, 2, 1)).is_err());
        let md = model(1, 1, 1, 1);
        assert!(md.forward(&[0.0; 3], &[0.5]).is_err());
    }

    #[test]
    fn impossible_postselection_reports_input() {
        // RY(π) on every branch sends the data qubit to |1⟩
        let md = SpqcModel::new(
            SpqcModelSpec::new(1, 1, 1, 1).with_encoding(EncodingSpec::new(1, (0.0, 1.0), 1)),
        )
        .unwrap();
        let mut theta = vec![0.0; md.num_params()];
        theta[md.layout().scale] = 1.0;
        match md.forward(&theta, &[1.0]) {
            Err(SpqcError::Forward { x, .. }) => assert_eq!(x, vec![1.0]),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(md.predict(&theta, &[1.0]), Err(SpqcError::Forward { .. })));
    }

    #[test]
    fn fast_path_matches_forward() {
        for &(n, m, r) in &[(1, 1, 1), (2, 2, 1), (1, 3, 2), (2, 2, 2), (1, 2, 3)] {
            let md = model(n, m, r, 2);
            let theta = md.init_params(7 + n as u64 * 10 + m as u64);
            for &x in &[0.1, 0.55, 0.9] {
                let (full, _) = md.forward(&theta, &[x]).unwrap();
                let fast = md.predict(&theta, &[x]).unwrap();
                let mut g = vec![0.0; md.num_params()];
                let with_grad = md.predict_with_grad(&theta, &[x], &mut g).unwrap();
                assert!((full - fast).abs() < 1e-12, "n={n} m={m} r={r}: {full} vs {fast}");
                assert!((fast - with_grad).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn adjoint_gradient_matches_central_differences() {
        for &(n, m, r) in &[(1, 2, 1), (2, 1, 2), (1, 2, 3)] {
            let md = model(n, m, r, 2);
            let mut theta = md.init_params(42);
            theta[md.layout().scale] = 1.3;
            theta[md.layout().bias] = -0.2;
            let x = [0.37];
            let mut g = vec![0.0; md.num_params()];
            md.predict_with_grad(&theta, &x, &mut g).unwrap();
            let h = 1e-6;
            for k in 0..theta.len() {
                let mut tp = theta.clone();
                tp[k] += h;
                let mut tm = theta.clone();
                tm[k] -= h;
                let fd = (md.predict(&tp, &x).unwrap() - md.predict(&tm, &x).unwrap()) / (2.0 * h);
                assert!((fd - g[k]).abs() < 1e-7, "n={n} m={m} r={r} k={k}: fd {fd} vs adjoint {}", g[k]);
            }
        }
    }

    #[test]
    fn success_probability_identity() {
        let md = model(2, 2, 1, 2);
        let theta = md.init_params(3);
        let (_, diag) = md.forward(&theta, &[0.4]).unwrap();
        let expected = diag.p.iter().map(|p| p.norm_sqr()).sum::<f64>() / 4.0;
        assert!((diag.success_prob - expected).abs() < 1e-12);
        assert!((diag.normalizer.powi(2) / 4.0 - diag.success_prob).abs() < 1e-12);
    }

    #[test]
    fn init_is_seeded() {
        let md = model(1, 2, 1, 2);
        let a = md.init_params(5);
        assert_eq!(a, md.init_params(5));
        assert_ne!(a, md.init_params(6));
        assert_eq!(a[md.layout().scale], 1.0);
        assert_eq!(a[md.layout().bias], 0.0);
        assert!(a[..md.num_angles()].iter().all(|t| (0.0..std::f64::consts::TAU).contains(t)));
    }
}
