//! Dense statevector simulation.
//!
//! Qubit 0 is the least-significant bit of a basis-state index, so the
//! amplitude of `|q_{n-1} ... q_1 q_0⟩` lives at `Σ q_k 2^k`. Rotations follow
//! `R_A(θ) = exp(-iθA/2)`.
//!
//! Gates are applied by masked iteration over basis indices; no operator is
//! ever materialised as a `2^n × 2^n` matrix.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Result, SpqcError};

pub type Amplitude = Complex64;

/// Largest register the simulator will allocate (2^24 amplitudes ≈ 256 MB).
pub const MAX_QUBITS: usize = 24;

/// Probabilities below this are treated as an impossible post-selection.
pub const POSTSELECT_EPS: f64 = 1e-14;

/// States at or above this size are updated in parallel.
const PAR_THRESHOLD: usize = 1 << 16;

const ZERO: Amplitude = Complex64::new(0.0, 0.0);
const ONE: Amplitude = Complex64::new(1.0, 0.0);

pub type Matrix2 = [[Amplitude; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    X,
    Y,
    Z,
}

impl Axis {
    /// The Pauli matrix for this axis.
    pub fn pauli(self) -> Matrix2 {
        let i = Complex64::i();
        match self {
            Axis::X => [[ZERO, ONE], [ONE, ZERO]],
            Axis::Y => [[ZERO, -i], [i, ZERO]],
            Axis::Z => [[ONE, ZERO], [ZERO, -ONE]],
        }
    }

    /// `d/dθ R_A(θ) = (-i/2) A R_A(θ)`; this returns `(-i/2) A`.
    pub fn generator(self) -> Matrix2 {
        let scale = Complex64::new(0.0, -0.5);
        let p = self.pauli();
        [[scale * p[0][0], scale * p[0][1]], [scale * p[1][0], scale * p[1][1]]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Gate {
    H,
    X,
    Rx(f64),
    Ry(f64),
    Rz(f64),
}

impl Gate {
    pub fn rotation(axis: Axis, angle: f64) -> Gate {
        match axis {
            Axis::X => Gate::Rx(angle),
            Axis::Y => Gate::Ry(angle),
            Axis::Z => Gate::Rz(angle),
        }
    }

    pub fn matrix(&self) -> Matrix2 {
        match *self {
            Gate::H => {
                let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                [[h, h], [h, -h]]
            }
            Gate::X => Axis::X.pauli(),
            Gate::Rx(t) => rotation_matrix(Axis::X, t),
            Gate::Ry(t) => rotation_matrix(Axis::Y, t),
            Gate::Rz(t) => rotation_matrix(Axis::Z, t),
        }
    }

    pub fn inverse(&self) -> Gate {
        match *self {
            Gate::H => Gate::H,
            Gate::X => Gate::X,
            Gate::Rx(t) => Gate::Rx(-t),
            Gate::Ry(t) => Gate::Ry(-t),
            Gate::Rz(t) => Gate::Rz(-t),
        }
    }

    fn angle(&self) -> Option<f64> {
        match *self {
            Gate::Rx(t) | Gate::Ry(t) | Gate::Rz(t) => Some(t),
            Gate::H | Gate::X => None,
        }
    }
}

/// `exp(-iθA/2)` for a Pauli axis `A`.
pub fn rotation_matrix(axis: Axis, angle: f64) -> Matrix2 {
    let (s, c) = (angle / 2.0).sin_cos();
    let c = Complex64::new(c, 0.0);
    match axis {
        Axis::X => {
            let ms = Complex64::new(0.0, -s);
            [[c, ms], [ms, c]]
        }
        Axis::Y => {
            let s = Complex64::new(s, 0.0);
            [[c, -s], [s, c]]
        }
        Axis::Z => {
            let e = Complex64::new(c.re, -s);
            [[e, ZERO], [ZERO, e.conj()]]
        }
    }
}

/// Conjugate transpose of a 2×2 matrix.
pub fn dagger(m: &Matrix2) -> Matrix2 {
    [[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Polarity {
    /// Condition on `|1⟩`.
    Positive,
    /// Condition on `|0⟩`.
    Negative,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct ControlSpec {
    pub controls: Vec<(usize, Polarity)>,
}

impl ControlSpec {
    pub fn none() -> Self {
        Self::default()
    }

    pub fn positive(qubit: usize) -> Self {
        Self::none().with(qubit, Polarity::Positive)
    }

    pub fn negative(qubit: usize) -> Self {
        Self::none().with(qubit, Polarity::Negative)
    }

    pub fn with(mut self, qubit: usize, polarity: Polarity) -> Self {
        self.controls.push((qubit, polarity));
        self
    }

    /// Controls that select the basis value `value` on `register`
    /// (bit `k` of `value` conditions `register[k]`).
    pub fn for_register_value(register: &[usize], value: usize) -> Self {
        let controls = register
            .iter()
            .enumerate()
            .map(|(k, &q)| {
                let pol = if (value >> k) & 1 == 1 { Polarity::Positive } else { Polarity::Negative };
                (q, pol)
            })
            .collect();
        Self { controls }
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    pub fn extend(mut self, other: &ControlSpec) -> Self {
        self.controls.extend_from_slice(&other.controls);
        self
    }

    /// Validates against a register and target and returns `(mask, value)`:
    /// a basis index `i` satisfies the controls iff `i & mask == value`.
    pub fn masks(&self, num_qubits: usize, target: usize) -> Result<(usize, usize)> {
        let mut mask = 0usize;
        let mut value = 0usize;
        for &(q, pol) in &self.controls {
            if q >= num_qubits {
                return Err(SpqcError::Index { index: q, num_qubits });
            }
            if q == target {
                return Err(SpqcError::Control(format!("qubit {q} is both target and control")));
            }
            let bit = 1usize << q;
            if mask & bit != 0 {
                return Err(SpqcError::Control(format!("qubit {q} listed twice")));
            }
            mask |= bit;
            if pol == Polarity::Positive {
                value |= bit;
            }
        }
        Ok((mask, value))
    }
}

/// Applies `m` to qubit `target` of a raw amplitude slice on basis states where
/// `index & ctrl_mask == ctrl_value`. The slice length must be a power of two
/// larger than `1 << target`, and `ctrl_mask` must not contain the target bit.
pub fn apply_matrix(amps: &mut [Amplitude], m: &Matrix2, target: usize, ctrl_mask: usize, ctrl_value: usize) {
    let stride = 1usize << target;
    debug_assert!(amps.len() >= 2 * stride);
    debug_assert_eq!(ctrl_mask & stride, 0);

    let kernel = |offset: usize, chunk: &mut [Amplitude]| {
        let (lo, hi) = chunk.split_at_mut(stride);
        for (k, (a, b)) in lo.iter_mut().zip(hi.iter_mut()).enumerate() {
            if (offset + k) & ctrl_mask != ctrl_value {
                continue;
            }
            let (x0, x1) = (*a, *b);
            *a = m[0][0] * x0 + m[0][1] * x1;
            *b = m[1][0] * x0 + m[1][1] * x1;
        }
    };

    if amps.len() >= PAR_THRESHOLD {
        amps.par_chunks_mut(2 * stride)
            .enumerate()
            .for_each(|(c, chunk)| kernel(c * 2 * stride, chunk));
    } else {
        amps.chunks_mut(2 * stride)
            .enumerate()
            .for_each(|(c, chunk)| kernel(c * 2 * stride, chunk));
    }
}

/// Dense complex amplitudes over `num_qubits` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    num_qubits: usize,
    amps: Vec<Amplitude>,
}

impl StateVector {
    /// `|0…0⟩` on `num_qubits` qubits.
    pub fn new_zero_state(num_qubits: usize) -> Result<Self> {
        check_size(num_qubits)?;
        let mut amps = vec![ZERO; 1 << num_qubits];
        amps[0] = ONE;
        Ok(Self { num_qubits, amps })
    }

    /// Wraps an explicit amplitude vector. The vector must have power-of-two
    /// length, finite entries and unit norm (within 1e-10).
    pub fn from_amplitudes(amps: Vec<Amplitude>) -> Result<Self> {
        let len = amps.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(SpqcError::Config(format!("amplitude vector length {len} is not a power of two ≥ 2")));
        }
        let num_qubits = len.trailing_zeros() as usize;
        check_size(num_qubits)?;
        if amps.iter().any(|a| !a.re.is_finite() || !a.im.is_finite()) {
            return Err(SpqcError::State("non-finite amplitude".into()));
        }
        let norm: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
        if (norm - 1.0).abs() > 1e-10 {
            return Err(SpqcError::State(format!("amplitudes have squared norm {norm}, expected 1")));
        }
        Ok(Self { num_qubits, amps })
    }

    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn amplitude(&self, index: usize) -> Amplitude {
        self.amps[index]
    }

    /// Mutable access for kernels that operate on sub-blocks of the vector.
    pub(crate) fn amplitudes_mut(&mut self) -> &mut [Amplitude] {
        &mut self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn check_qubit(&self, qubit: usize) -> Result<()> {
        if qubit >= self.num_qubits {
            Err(SpqcError::Index { index: qubit, num_qubits: self.num_qubits })
        } else {
            Ok(())
        }
    }

    /// Applies `gate` to `target`, conditioned on `controls`. Amplitudes of
    /// basis states that violate the control pattern are left untouched.
    pub fn apply_gate(&mut self, gate: Gate, target: usize, controls: &ControlSpec) -> Result<()> {
        self.check_qubit(target)?;
        if let Some(t) = gate.angle() {
            if !t.is_finite() {
                return Err(SpqcError::Config(format!("non-finite rotation angle {t}")));
            }
        }
        let (mask, value) = controls.masks(self.num_qubits, target)?;
        apply_matrix(&mut self.amps, &gate.matrix(), target, mask, value);
        Ok(())
    }

    /// Uncontrolled shorthand for [`StateVector::apply_gate`].
    pub fn apply(&mut self, gate: Gate, target: usize) -> Result<()> {
        self.apply_gate(gate, target, &ControlSpec::none())
    }

    pub fn cnot(&mut self, control: usize, target: usize) -> Result<()> {
        self.apply_gate(Gate::X, target, &ControlSpec::positive(control))
    }

    fn register_masks(&self, register: &[usize], bits: &[u8]) -> Result<(usize, usize)> {
        if register.len() != bits.len() {
            return Err(SpqcError::DimensionMismatch { expected: register.len(), actual: bits.len() });
        }
        let mut mask = 0usize;
        let mut value = 0usize;
        for (&q, &b) in register.iter().zip(bits) {
            self.check_qubit(q)?;
            if b > 1 {
                return Err(SpqcError::Config(format!("bit value {b} is not 0 or 1")));
            }
            if mask & (1 << q) != 0 {
                return Err(SpqcError::Config(format!("qubit {q} repeated in register")));
            }
            mask |= 1 << q;
            if b == 1 {
                value |= 1 << q;
            }
        }
        Ok((mask, value))
    }

    /// Probability that measuring `register` yields `bits`.
    pub fn probability_of(&self, register: &[usize], bits: &[u8]) -> Result<f64> {
        let (mask, value) = self.register_masks(register, bits)?;
        Ok(self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == value)
            .map(|(_, a)| a.norm_sqr())
            .sum())
    }

    /// Projects `register` onto `bits` and renormalises.
    ///
    /// Returns the success probability together with the projected state, or
    /// [`SpqcError::PostSelectionImpossible`] when the probability is below
    /// [`POSTSELECT_EPS`].
    pub fn project_postselect(&self, register: &[usize], bits: &[u8]) -> Result<(f64, StateVector)> {
        let (mask, value) = self.register_masks(register, bits)?;
        let success: f64 = self
            .amps
            .iter()
            .enumerate()
            .filter(|(i, _)| i & mask == value)
            .map(|(_, a)| a.norm_sqr())
            .sum();
        if success < POSTSELECT_EPS {
            return Err(SpqcError::PostSelectionImpossible { probability: success });
        }
        let scale = 1.0 / success.sqrt();
        let amps = self
            .amps
            .iter()
            .enumerate()
            .map(|(i, a)| if i & mask == value { a * scale } else { ZERO })
            .collect();
        Ok((success, StateVector { num_qubits: self.num_qubits, amps }))
    }

    /// `⟨Z_q⟩` for this state.
    pub fn expectation_z(&self, qubit: usize) -> Result<f64> {
        self.check_qubit(qubit)?;
        Ok(expectation_z_slice(&self.amps, qubit))
    }

    /// `⟨self|other⟩`, conjugate-linear in `self`.
    pub fn inner_product(&self, other: &StateVector) -> Result<Amplitude> {
        if self.num_qubits != other.num_qubits {
            return Err(SpqcError::DimensionMismatch { expected: self.num_qubits, actual: other.num_qubits });
        }
        Ok(inner_product_slice(&self.amps, &other.amps))
    }

    /// Marginal probabilities of every basis value of `register`, indexed so that
    /// bit `k` of the index is the outcome of `register[k]`.
    pub fn marginal(&self, register: &[usize]) -> Result<Vec<f64>> {
        for &q in register {
            self.check_qubit(q)?;
        }
        let mut out = vec![0.0; 1 << register.len()];
        for (i, a) in self.amps.iter().enumerate() {
            let key = register
                .iter()
                .enumerate()
                .fold(0usize, |acc, (k, &q)| acc | (((i >> q) & 1) << k));
            out[key] += a.norm_sqr();
        }
        Ok(out)
    }
}

pub(crate) fn expectation_z_slice(amps: &[Amplitude], qubit: usize) -> f64 {
    amps.iter()
        .enumerate()
        .map(|(i, a)| if (i >> qubit) & 1 == 0 { a.norm_sqr() } else { -a.norm_sqr() })
        .sum()
}

pub(crate) fn inner_product_slice(a: &[Amplitude], b: &[Amplitude]) -> Amplitude {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn check_size(num_qubits: usize) -> Result<()> {
    if num_qubits == 0 || num_qubits > MAX_QUBITS {
        Err(SpqcError::Config(format!("register of {num_qubits} qubits outside 1..={MAX_QUBITS}")))
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn c(re: f64, im: f64) -> Amplitude {
        Complex64::new(re, im)
    }

    fn close(a: Amplitude, b: Amplitude, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    #[test]
    fn zero_state_sizes() {
        let s = StateVector::new_zero_state(1).unwrap();
        assert_eq!(s.amplitudes(), &[c(1.0, 0.0), c(0.0, 0.0)]);
        let s = StateVector::new_zero_state(3).unwrap();
        assert_eq!(s.dim(), 8);
        assert_eq!(s.amplitude(0), c(1.0, 0.0));
        assert!(matches!(StateVector::new_zero_state(25), Err(SpqcError::Config(_))));
        assert!(matches!(StateVector::new_zero_state(0), Err(SpqcError::Config(_))));
    }

    #[test]
    fn hadamard_and_rotations() {
        let mut s = StateVector::new_zero_state(1).unwrap();
        s.apply(Gate::H, 0).unwrap();
        assert!(close(s.amplitude(0), c(FRAC_1_SQRT_2, 0.0), 1e-15));
        assert!(close(s.amplitude(1), c(FRAC_1_SQRT_2, 0.0), 1e-15));

        let mut s = StateVector::new_zero_state(1).unwrap();
        s.apply(Gate::Ry(PI), 0).unwrap();
        assert!(close(s.amplitude(0), c(0.0, 0.0), 1e-15));
        assert!(close(s.amplitude(1), c(1.0, 0.0), 1e-15));

        let mut s = StateVector::new_zero_state(1).unwrap();
        s.apply(Gate::Rx(PI), 0).unwrap();
        assert!(close(s.amplitude(1), c(0.0, -1.0), 1e-15));

        let mut s = StateVector::new_zero_state(1).unwrap();
        s.apply(Gate::Rz(PI / 2.0), 0).unwrap();
        let phase = Complex64::from_polar(1.0, -PI / 4.0);
        assert!(close(s.amplitude(0), phase, 1e-15));
    }

    #[test]
    fn unsatisfied_control_is_identity() {
        let mut s = StateVector::new_zero_state(2).unwrap();
        s.apply_gate(Gate::X, 0, &ControlSpec::positive(1)).unwrap();
        assert_eq!(s.amplitude(0), c(1.0, 0.0));
        // negative control on a |0⟩ qubit fires
        s.apply_gate(Gate::X, 0, &ControlSpec::negative(1)).unwrap();
        assert_eq!(s.amplitude(1), c(1.0, 0.0));
    }

    #[test]
    fn invalid_indices_and_controls() {
        let mut s = StateVector::new_zero_state(2).unwrap();
        assert!(matches!(s.apply(Gate::H, 2), Err(SpqcError::Index { index: 2, .. })));
        assert!(matches!(s.apply_gate(Gate::X, 0, &ControlSpec::positive(0)), Err(SpqcError::Control(_))));
        let dup = ControlSpec::positive(1).with(1, Polarity::Negative);
        assert!(matches!(s.apply_gate(Gate::X, 0, &dup), Err(SpqcError::Control(_))));
        assert!(matches!(s.apply_gate(Gate::X, 0, &ControlSpec::positive(5)), Err(SpqcError::Index { .. })));
        assert!(s.apply(Gate::Ry(f64::NAN), 0).is_err());
    }

    #[test]
    fn bell_projection() {
        let mut s = StateVector::new_zero_state(2).unwrap();
        s.apply(Gate::H, 0).unwrap();
        s.cnot(0, 1).unwrap();
        let (p, proj) = s.project_postselect(&[0], &[0]).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
        assert!(close(proj.amplitude(0), c(1.0, 0.0), 1e-15));
        assert!(proj.amplitudes()[1..].iter().all(|a| a.norm() < 1e-15));
    }

    #[test]
    fn orthogonal_projection_fails() {
        let mut s = StateVector::new_zero_state(1).unwrap();
        s.apply(Gate::X, 0).unwrap();
        match s.project_postselect(&[0], &[0]) {
            Err(SpqcError::PostSelectionImpossible { probability }) => assert_eq!(probability, 0.0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn projection_matches_direct_summation() {
        // fixed "random" 3-qubit state
        let raw = [
            c(0.3, -0.1),
            c(-0.2, 0.4),
            c(0.05, 0.25),
            c(0.6, 0.0),
            c(-0.15, -0.3),
            c(0.1, 0.1),
            c(0.2, -0.45),
            c(0.0, 0.35),
        ];
        let n: f64 = raw.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let s = StateVector::from_amplitudes(raw.iter().map(|a| a / n).collect()).unwrap();
        let direct: f64 = (0..8).filter(|k| (k >> 2) & 1 == 0).map(|k| s.amplitude(k).norm_sqr()).sum();
        let (p, proj) = s.project_postselect(&[2], &[0]).unwrap();
        assert!((p - direct).abs() < 1e-15);
        assert!((proj.norm_sqr() - 1.0).abs() < 1e-12);
        for k in 4..8 {
            assert_eq!(proj.amplitude(k), c(0.0, 0.0));
        }
    }

    #[test]
    fn z_expectations() {
        let s = StateVector::new_zero_state(1).unwrap();
        assert_eq!(s.expectation_z(0).unwrap(), 1.0);
        let mut s = StateVector::new_zero_state(1).unwrap();
        s.apply(Gate::H, 0).unwrap();
        assert!(s.expectation_z(0).unwrap().abs() < 1e-12);
        let mut s = StateVector::new_zero_state(1).unwrap();
        s.apply(Gate::Ry(0.7), 0).unwrap();
        assert!((s.expectation_z(0).unwrap() - 0.7f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn inner_products() {
        let zero = StateVector::new_zero_state(1).unwrap();
        let mut one = zero.clone();
        one.apply(Gate::X, 0).unwrap();
        assert_eq!(zero.inner_product(&zero).unwrap(), c(1.0, 0.0));
        assert_eq!(zero.inner_product(&one).unwrap(), c(0.0, 0.0));
        let mut psi = StateVector::new_zero_state(2).unwrap();
        psi.apply(Gate::Ry(1.1), 0).unwrap();
        psi.apply(Gate::Rz(0.4), 1).unwrap();
        psi.apply(Gate::H, 1).unwrap();
        assert!(close(psi.inner_product(&psi).unwrap(), c(1.0, 0.0), 1e-14));
        let two = StateVector::new_zero_state(2).unwrap();
        assert!(matches!(zero.inner_product(&two), Err(SpqcError::DimensionMismatch { .. })));
    }

    #[test]
    fn marginal_matches_probability_of() {
        let mut s = StateVector::new_zero_state(3).unwrap();
        s.apply(Gate::Ry(0.9), 0).unwrap();
        s.apply(Gate::Ry(2.1), 2).unwrap();
        s.cnot(0, 1).unwrap();
        let marg = s.marginal(&[2, 0]).unwrap();
        for (v, &m) in marg.iter().enumerate() {
            let bits = [(v & 1) as u8, ((v >> 1) & 1) as u8];
            assert!((s.probability_of(&[2, 0], &bits).unwrap() - m).abs() < 1e-15);
        }
        assert!((marg.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
