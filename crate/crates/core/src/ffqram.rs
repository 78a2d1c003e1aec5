//! Flip-flop QRAM layer superposition.
//!
//! The address register is put into the uniform superposition and the data
//! register then receives `U(θ^(j))` conditioned on address value `j`:
//!
//! ```text
//! |Φ⟩ = L^{-1/2} Σ_j |j⟩_a ⊗ U(θ^(j)) |ψ⟩_d
//! ```
//!
//! Two realisations are provided and must agree: a reference built from
//! multi-controlled gates (one cascade per address value, controls with the
//! polarity of `j`'s bits) and a block path that applies `U(θ^(j))` directly to
//! the contiguous slice of amplitudes whose address bits equal `j`.

use std::ops::Range;

use rayon::prelude::*;

use crate::ansatz::AnsatzSpec;
use crate::circuit::Circuit;
use crate::error::{Result, SpqcError};
use crate::statevector::{ControlSpec, Gate, StateVector};

/// Blocks are processed in parallel once the full state reaches this size.
const PAR_BLOCK_THRESHOLD: usize = 1 << 14;

/// Per-branch parameter sets `θ^(0) … θ^(L-1)`, stored branch-major.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchParams {
    branch_count: usize,
    per_branch: usize,
    theta: Vec<f64>,
}

impl BranchParams {
    pub fn new(branch_count: usize, per_branch: usize, theta: Vec<f64>) -> Result<Self> {
        if branch_count == 0 || !branch_count.is_power_of_two() {
            return Err(SpqcError::Config(format!("branch count {branch_count} is not a power of two")));
        }
        if theta.len() != branch_count * per_branch {
            return Err(SpqcError::DimensionMismatch { expected: branch_count * per_branch, actual: theta.len() });
        }
        if let Some(t) = theta.iter().find(|t| !t.is_finite()) {
            return Err(SpqcError::Config(format!("non-finite branch angle {t}")));
        }
        Ok(Self { branch_count, per_branch, theta })
    }

    pub fn from_slice(branch_count: usize, per_branch: usize, theta: &[f64]) -> Result<Self> {
        Self::new(branch_count, per_branch, theta.to_vec())
    }

    pub fn branch_count(&self) -> usize {
        self.branch_count
    }

    pub fn per_branch(&self) -> usize {
        self.per_branch
    }

    pub fn branch(&self, j: usize) -> &[f64] {
        &self.theta[j * self.per_branch..(j + 1) * self.per_branch]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.theta
    }
}

/// Hadamards on every address qubit. The address register must be in
/// `|0…0⟩` (marginal probability 1 within 1e-12).
pub fn prepare_address_superposition(state: &mut StateVector, address_qubits: &[usize]) -> Result<()> {
    let zeros = vec![0u8; address_qubits.len()];
    let p = state.probability_of(address_qubits, &zeros)?;
    if (p - 1.0).abs() > 1e-12 {
        return Err(SpqcError::State(format!(
            "address register not in |0…0⟩ (probability {p})"
        )));
    }
    for &q in address_qubits {
        state.apply(Gate::H, q)?;
    }
    Ok(())
}

/// Applies the full `U(θ^(j))` to the data register for every address value.
pub fn apply_branch_unitaries(
    state: &mut StateVector,
    ansatz: &AnsatzSpec,
    params: &BranchParams,
    data_qubits: &[usize],
    address_qubits: &[usize],
) -> Result<()> {
    apply_branch_layers(state, ansatz, params, 0..ansatz.depth(), data_qubits, address_qubits)
}

/// Applies ansatz layers `layers` of `U(θ^(j))` conditioned on address `j`.
///
/// Uses the block path when the address qubits are the topmost qubits of the
/// state in ascending order, and the multi-controlled cascade otherwise.
pub fn apply_branch_layers(
    state: &mut StateVector,
    ansatz: &AnsatzSpec,
    params: &BranchParams,
    layers: Range<usize>,
    data_qubits: &[usize],
    address_qubits: &[usize],
) -> Result<()> {
    validate(state, ansatz, params, &layers, data_qubits, address_qubits)?;
    let n = state.num_qubits();
    let m = address_qubits.len();
    let top = address_qubits.iter().enumerate().all(|(k, &q)| q == n - m + k);
    if top {
        apply_blocks(state, ansatz, params, layers, data_qubits, m);
        Ok(())
    } else {
        apply_controlled(state, ansatz, params, layers, data_qubits, address_qubits)
    }
}

/// Reference construction: one multi-controlled gate cascade per address value.
pub fn apply_branch_layers_controlled(
    state: &mut StateVector,
    ansatz: &AnsatzSpec,
    params: &BranchParams,
    layers: Range<usize>,
    data_qubits: &[usize],
    address_qubits: &[usize],
) -> Result<()> {
    validate(state, ansatz, params, &layers, data_qubits, address_qubits)?;
    apply_controlled(state, ansatz, params, layers, data_qubits, address_qubits)
}

fn layer_range_circuit(ansatz: &AnsatzSpec, layers: Range<usize>) -> Circuit {
    let mut c = Circuit::new(ansatz.num_qubits);
    let qubits: Vec<usize> = (0..ansatz.num_qubits).collect();
    for l in layers {
        ansatz.append_layer(l, &mut c, &qubits, 0);
    }
    c
}

fn apply_controlled(
    state: &mut StateVector,
    ansatz: &AnsatzSpec,
    params: &BranchParams,
    layers: Range<usize>,
    data_qubits: &[usize],
    address_qubits: &[usize],
) -> Result<()> {
    let circuit = layer_range_circuit(ansatz, layers);
    for j in 0..params.branch_count() {
        let controls = ControlSpec::for_register_value(address_qubits, j);
        circuit.apply_to_state(state, params.branch(j), data_qubits, &controls)?;
    }
    Ok(())
}

fn apply_blocks(
    state: &mut StateVector,
    ansatz: &AnsatzSpec,
    params: &BranchParams,
    layers: Range<usize>,
    data_qubits: &[usize],
    m: usize,
) {
    let circuit = layer_range_circuit(ansatz, layers);
    let block = state.dim() >> m;
    let run = |(j, slice): (usize, &mut [_])| circuit.run_mapped(params.branch(j), slice, data_qubits);
    let amps = state.amplitudes_mut();
    if amps.len() >= PAR_BLOCK_THRESHOLD {
        amps.par_chunks_mut(block).enumerate().for_each(run);
    } else {
        amps.chunks_mut(block).enumerate().for_each(run);
    }
}

fn validate(
    state: &StateVector,
    ansatz: &AnsatzSpec,
    params: &BranchParams,
    layers: &Range<usize>,
    data_qubits: &[usize],
    address_qubits: &[usize],
) -> Result<()> {
    ansatz.validate()?;
    if layers.end > ansatz.depth() || layers.start > layers.end {
        return Err(SpqcError::Config(format!("layer range {layers:?} outside ansatz depth {}", ansatz.depth())));
    }
    if data_qubits.len() != ansatz.num_qubits {
        return Err(SpqcError::DimensionMismatch { expected: ansatz.num_qubits, actual: data_qubits.len() });
    }
    if params.branch_count() != 1 << address_qubits.len() {
        return Err(SpqcError::Config(format!(
            "{} branches supplied for {} address qubits",
            params.branch_count(),
            address_qubits.len()
        )));
    }
    if params.per_branch() != ansatz.params_per_branch() {
        return Err(SpqcError::DimensionMismatch { expected: ansatz.params_per_branch(), actual: params.per_branch() });
    }
    let mut seen = 0usize;
    for &q in data_qubits.iter().chain(address_qubits) {
        state.check_qubit(q)?;
        if seen & (1 << q) != 0 {
            return Err(SpqcError::Config(format!("qubit {q} used twice across data/address registers")));
        }
        seen |= 1 << q;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{PI, TAU};

    fn random_params(rng: &mut ChaCha8Rng, l: usize, per: usize) -> BranchParams {
        BranchParams::new(l, per, (0..l * per).map(|_| rng.random_range(0.0..TAU)).collect()).unwrap()
    }

    fn encoded(n_data: usize, m: usize, x: f64) -> StateVector {
        let mut s = StateVector::new_zero_state(n_data + m).unwrap();
        for q in 0..n_data {
            s.apply(Gate::Ry(x + q as f64), q).unwrap();
        }
        s
    }

    #[test]
    fn uniform_address_amplitudes() {
        for m in [1usize, 3] {
            let mut s = StateVector::new_zero_state(m).unwrap();
            let addr: Vec<usize> = (0..m).collect();
            prepare_address_superposition(&mut s, &addr).unwrap();
            let expect = 1.0 / ((1 << m) as f64).sqrt();
            assert!(s.amplitudes().iter().all(|a| (a - expect).norm() < 1e-15));
        }
    }

    #[test]
    fn superposition_leaves_data_marginals() {
        let mut s = encoded(2, 2, 0.8);
        let before = s.marginal(&[0, 1]).unwrap();
        prepare_address_superposition(&mut s, &[2, 3]).unwrap();
        let after = s.marginal(&[0, 1]).unwrap();
        for (a, b) in before.iter().zip(&after) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn superposition_rejects_excited_address() {
        let mut s = StateVector::new_zero_state(2).unwrap();
        s.apply(Gate::Ry(PI / 3.0), 1).unwrap();
        assert!(matches!(prepare_address_superposition(&mut s, &[1]), Err(SpqcError::State(_))));
    }

    #[test]
    fn degenerate_branches_factorise() {
        let ansatz = AnsatzSpec::hardware_efficient(2, 2);
        let per = ansatz.params_per_branch();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let one: Vec<f64> = (0..per).map(|_| rng.random_range(0.0..TAU)).collect();
        let params = BranchParams::new(2, per, [one.clone(), one.clone()].concat()).unwrap();

        let mut s = encoded(2, 1, 0.4);
        prepare_address_superposition(&mut s, &[2]).unwrap();
        apply_branch_unitaries(&mut s, &ansatz, &params, &[0, 1], &[2]).unwrap();

        let mut reference = encoded(2, 1, 0.4);
        prepare_address_superposition(&mut reference, &[2]).unwrap();
        ansatz.circuit().apply_to_state(&mut reference, &one, &[0, 1], &ControlSpec::none()).unwrap();
        for (a, b) in s.amplitudes().iter().zip(reference.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn blocks_match_independent_branches() {
        let ansatz = AnsatzSpec::hardware_efficient(2, 2);
        let per = ansatz.params_per_branch();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let params = random_params(&mut rng, 4, per);

        let mut s = encoded(2, 2, 1.3);
        prepare_address_superposition(&mut s, &[2, 3]).unwrap();
        apply_branch_unitaries(&mut s, &ansatz, &params, &[0, 1], &[2, 3]).unwrap();

        let data = encoded(2, 0, 1.3);
        for j in 0..4 {
            let mut block = data.amplitudes().to_vec();
            ansatz.circuit().run(params.branch(j), &mut block);
            for (i, b) in block.iter().enumerate() {
                let got = s.amplitude(j * 4 + i);
                assert!((got - b * 0.5).norm() < 1e-12, "branch {j} index {i}");
            }
        }
    }

    #[test]
    fn block_and_controlled_paths_agree() {
        let ansatz = AnsatzSpec::hardware_efficient(2, 3);
        let per = ansatz.params_per_branch();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for m in 1..=3 {
            let l = 1 << m;
            let params = random_params(&mut rng, l, per);
            let addr: Vec<usize> = (2..2 + m).collect();
            let mut fast = encoded(2, m, 0.9);
            prepare_address_superposition(&mut fast, &addr).unwrap();
            let mut slow = fast.clone();
            apply_branch_unitaries(&mut fast, &ansatz, &params, &[0, 1], &addr).unwrap();
            apply_branch_layers_controlled(&mut slow, &ansatz, &params, 0..3, &[0, 1], &addr).unwrap();
            for (a, b) in fast.amplitudes().iter().zip(slow.amplitudes()) {
                assert!((a - b).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn unchanged_branch_is_bit_identical() {
        let ansatz = AnsatzSpec::hardware_efficient(1, 2);
        let per = ansatz.params_per_branch();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let first: Vec<f64> = (0..per).map(|_| rng.random_range(0.0..TAU)).collect();
        let second: Vec<f64> = (0..per).map(|_| rng.random_range(0.0..TAU)).collect();
        let mut altered = second.clone();
        altered[1] += 0.5;
        let a = BranchParams::new(2, per, [first.clone(), second].concat()).unwrap();
        let b = BranchParams::new(2, per, [first, altered].concat()).unwrap();

        let run = |p: &BranchParams| {
            let mut s = encoded(1, 1, 0.2);
            prepare_address_superposition(&mut s, &[1]).unwrap();
            apply_branch_unitaries(&mut s, &ansatz, p, &[0], &[1]).unwrap();
            s
        };
        let (sa, sb) = (run(&a), run(&b));
        assert_eq!(&sa.amplitudes()[..2], &sb.amplitudes()[..2]);
        assert_ne!(&sa.amplitudes()[2..], &sb.amplitudes()[2..]);
    }

    #[test]
    fn no_cross_block_leakage() {
        let ansatz = AnsatzSpec::hardware_efficient(2, 2);
        let per = ansatz.params_per_branch();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let params = random_params(&mut rng, 4, per);
        for basis in 0..16usize {
            let mut amps = vec![Complex64::new(0.0, 0.0); 16];
            amps[basis] = Complex64::new(1.0, 0.0);
            let mut s = StateVector::from_amplitudes(amps).unwrap();
            apply_branch_unitaries(&mut s, &ansatz, &params, &[0, 1], &[2, 3]).unwrap();
            let j = basis >> 2;
            for (i, a) in s.amplitudes().iter().enumerate() {
                if i >> 2 != j {
                    assert_eq!(*a, Complex64::new(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn shape_mismatches_rejected() {
        let ansatz = AnsatzSpec::hardware_efficient(2, 1);
        let per = ansatz.params_per_branch();
        let params = BranchParams::new(2, per, vec![0.0; 2 * per]).unwrap();
        let mut s = StateVector::new_zero_state(4).unwrap();
        assert!(apply_branch_unitaries(&mut s, &ansatz, &params, &[0, 1], &[2, 3]).is_err());
        assert!(apply_branch_unitaries(&mut s, &ansatz, &params, &[0], &[2]).is_err());
        assert!(apply_branch_unitaries(&mut s, &ansatz, &params, &[0, 2], &[2]).is_err());
        assert!(BranchParams::new(3, per, vec![0.0; 3 * per]).is_err());
        assert!(BranchParams::new(2, per, vec![0.0; per]).is_err());
    }
}
