//! Angle encoding `S(x)`: one `RY` per data qubit, re-uploaded between layers.

use std::f64::consts::PI;

use crate::circuit::{Angle, Circuit};
use crate::error::{Result, SpqcError};
use crate::statevector::Axis;

/// Inputs are checked against `input_range` with this slack.
const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct EncodingSpec {
    pub num_data_qubits: usize,
    /// Domain of every input feature.
    pub input_range: (f64, f64),
    /// The input domain is mapped linearly onto this angle interval.
    pub angle_range: (f64, f64),
    /// Number of encoding layers; layer `l` precedes ansatz layer `l`.
    pub reuploads: usize,
}

impl EncodingSpec {
    /// Features in `input_range` rescaled to `[0, π]`.
    pub fn new(num_data_qubits: usize, input_range: (f64, f64), reuploads: usize) -> Self {
        Self { num_data_qubits, input_range, angle_range: (0.0, PI), reuploads }
    }

    pub fn with_angle_range(mut self, lo: f64, hi: f64) -> Self {
        self.angle_range = (lo, hi);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let (a, b) = self.input_range;
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(SpqcError::Config(format!("invalid input range [{a}, {b}]")));
        }
        let (lo, hi) = self.angle_range;
        if !(lo.is_finite() && hi.is_finite()) {
            return Err(SpqcError::Config("non-finite angle range".into()));
        }
        if self.num_data_qubits == 0 {
            return Err(SpqcError::Config("encoding needs at least one data qubit".into()));
        }
        if self.reuploads == 0 {
            return Err(SpqcError::Config("encoding needs at least one upload".into()));
        }
        Ok(())
    }

    /// Rotation angle for every data qubit. Qubit `q` carries feature
    /// `q mod x.len()`.
    pub fn angles(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.is_empty() {
            return Err(SpqcError::Config("empty input vector".into()));
        }
        let (a, b) = self.input_range;
        let (lo, hi) = self.angle_range;
        for &v in x {
            if !v.is_finite() || v < a - RANGE_SLACK || v > b + RANGE_SLACK {
                return Err(SpqcError::Config(format!("input {v} outside encoding domain [{a}, {b}]")));
            }
        }
        Ok((0..self.num_data_qubits)
            .map(|q| {
                let t = (x[q % x.len()] - a) / (b - a);
                lo + t * (hi - lo)
            })
            .collect())
    }

    /// Appends one encoding layer (fixed angles) on `qubits`.
    pub fn append_layer(&self, circuit: &mut Circuit, angles: &[f64], qubits: &[usize]) {
        for (&q, &t) in qubits.iter().zip(angles) {
            circuit.rotation(Axis::Y, q, Angle::Fixed(t));
        }
    }

    pub fn uploads_before(&self, layer: usize) -> bool {
        layer < self.reuploads
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rescales_linearly() {
        let e = EncodingSpec::new(2, (-1.0, 1.0), 1);
        let a = e.angles(&[-1.0, 1.0]).unwrap();
        assert_eq!(a, vec![0.0, PI]);
        let a = e.angles(&[0.0]).unwrap();
        assert_eq!(a, vec![PI / 2.0, PI / 2.0]);
    }

    #[test]
    fn deterministic_and_domain_checked() {
        let e = EncodingSpec::new(1, (0.0, 1.0), 3).with_angle_range(0.0, 2.0 * PI);
        assert_eq!(e.angles(&[0.3]).unwrap(), e.angles(&[0.3]).unwrap());
        assert!(e.angles(&[1.5]).is_err());
        assert!(e.angles(&[f64::NAN]).is_err());
        assert!(e.angles(&[]).is_err());
    }
}
