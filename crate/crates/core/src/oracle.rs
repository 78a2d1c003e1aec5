//! Brute-force reference for the superposed model.
//!
//! Each branch is simulated as its own standalone circuit and the expected
//! post-selected address state is assembled classically. Nothing here touches
//! the address-register machinery, so agreement with
//! [`crate::model::SpqcModel::forward`] certifies it.

use num_complex::Complex64;

use crate::error::{Result, SpqcError};
use crate::model::SpqcModelSpec;
use crate::statevector::{Amplitude, ControlSpec, Gate, StateVector};

/// `p_j` for every branch, each from an independent `n`-qubit run.
pub fn oracle_branch_vector(spec: &SpqcModelSpec, theta: &[f64], x: &[f64]) -> Result<Vec<Amplitude>> {
    spec.validate()?;
    let layout = spec.layout();
    if theta.len() != layout.len() {
        return Err(SpqcError::DimensionMismatch { expected: layout.len(), actual: theta.len() });
    }
    let angles = spec.encoding.angles(x)?;
    let qubits: Vec<usize> = (0..spec.n).collect();
    let reference = StateVector::new_zero_state(spec.n)?;
    (0..spec.branch_count())
        .map(|j| {
            let theta_j = &theta[layout.branch(j)];
            let mut state = StateVector::new_zero_state(spec.n)?;
            for layer in 0..spec.ansatz.depth() {
                if spec.encoding.uploads_before(layer) {
                    for (&q, &t) in qubits.iter().zip(&angles) {
                        state.apply(Gate::Ry(t), q)?;
                    }
                }
                spec.ansatz
                    .layer_circuit(layer)
                    .apply_to_state(&mut state, theta_j, &qubits, &ControlSpec::none())?;
            }
            reference.inner_product(&state)
        })
        .collect()
}

/// `(p_j^r)_j` normalised to unit length.
pub fn oracle_postselected_state(p: &[Amplitude], degree: usize) -> Result<Vec<Amplitude>> {
    let powered: Vec<Amplitude> = p.iter().map(|a| a.powu(degree as u32)).collect();
    let norm = powered.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    if norm == 0.0 || !norm.is_finite() {
        return Err(SpqcError::State("branch vector has zero norm".into()));
    }
    Ok(powered.into_iter().map(|a| a / Complex64::new(norm, 0.0)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::encoding::EncodingSpec;
    use std::f64::consts::PI;

    fn c(re: f64) -> Amplitude {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn postselected_state_examples() {
        let u = oracle_postselected_state(&[c(1.0); 4], 2).unwrap();
        assert!(u.iter().all(|a| (a - 0.5).norm() < 1e-15));

        for r in 1..4 {
            let u = oracle_postselected_state(&[c(1.0), c(0.0)], r).unwrap();
            assert_eq!(u, vec![c(1.0), c(0.0)]);
        }

        let u = oracle_postselected_state(&[c(0.8), c(0.6)], 2).unwrap();
        let n = (0.64f64 * 0.64 + 0.36 * 0.36).sqrt();
        assert!((u[0] - 0.64 / n).norm() < 1e-15);
        assert!((u[1] - 0.36 / n).norm() < 1e-15);
        assert!((u.iter().map(|a| a.norm_sqr()).sum::<f64>() - 1.0).abs() < 1e-15);

        assert!(oracle_postselected_state(&[c(0.0), c(0.0)], 1).is_err());
    }

    #[test]
    fn identical_branches_give_constant_vector() {
        let spec = SpqcModelSpec::new(2, 2, 1, 2);
        let lay = spec.layout();
        let block: Vec<f64> = (0..lay.per_branch).map(|k| 0.3 * k as f64).collect();
        let mut theta = vec![0.0; lay.len()];
        for j in 0..4 {
            theta[lay.branch(j)].copy_from_slice(&block);
        }
        let p = oracle_branch_vector(&spec, &theta, &[0.3]).unwrap();
        assert!(p.iter().all(|a| (a - p[0]).norm() == 0.0));
    }

    #[test]
    fn closed_form_at_one_qubit() {
        // depth 1, RZ angles zero: p_j = cos((θ_j + x)/2)
        let spec = SpqcModelSpec::new(1, 2, 1, 1).with_encoding(EncodingSpec::new(1, (0.0, PI), 1).with_angle_range(0.0, PI));
        let thetas = [0.2, 1.4, -2.3, 3.0];
        let mut theta = vec![0.0; spec.num_params()];
        for (j, t) in thetas.iter().enumerate() {
            theta[2 * j] = *t;
        }
        let x = 0.9;
        let p = oracle_branch_vector(&spec, &theta, &[x]).unwrap();
        for (j, t) in thetas.iter().enumerate() {
            assert!((p[j] - ((t + x) / 2.0).cos()).norm() < 1e-14);
        }
    }

    #[test]
    fn one_branch_perturbation_changes_one_component() {
        let spec = SpqcModelSpec::new(1, 2, 1, 2);
        let lay = spec.layout();
        let theta: Vec<f64> = (0..lay.len()).map(|k| 0.17 * k as f64).collect();
        let mut bumped = theta.clone();
        bumped[lay.branch(2).start] += 0.4;
        let a = oracle_branch_vector(&spec, &theta, &[0.5]).unwrap();
        let b = oracle_branch_vector(&spec, &bumped, &[0.5]).unwrap();
        for j in 0..4 {
            assert_eq!(a[j] == b[j], j != 2);
        }
    }
}
