//! Self-checks run by `spqc verify` and the acceptance suite.
//!
//! Each suite draws its instances from a fixed seed and returns a
//! [`CheckResult`] with the worst deviation it saw.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::datasets::{make_step_dataset, Dataset};
use crate::error::Result;
use crate::model::{Model, SpqcModel, SpqcModelSpec};
use crate::oracle::{oracle_branch_vector, oracle_postselected_state};
use crate::pqc::PqcModel;
use crate::statevector::{Amplitude, Axis, ControlSpec, Gate, Polarity, StateVector};
use crate::training::{dataset_loss, gradient_fd, loss_and_grad, GradientMethod};

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: String,
    pub passed: bool,
    /// Number of instances or comparisons made.
    pub cases: usize,
    pub worst: f64,
    pub tolerance: f64,
    pub detail: String,
}

impl CheckResult {
    fn new(name: &str, cases: usize, worst: f64, tolerance: f64, detail: String) -> Self {
        Self { name: name.into(), passed: worst <= tolerance, cases, worst, tolerance, detail }
    }
}

impl std::fmt::Display for CheckResult {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "[{}] {}: {} cases, worst {:.3e} (tolerance {:.1e}){}",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.cases,
            self.worst,
            self.tolerance,
            if self.detail.is_empty() { String::new() } else { format!("; {}", self.detail) }
        )
    }
}

fn random_theta(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.random_range(0.0..TAU)).collect()
}

fn max_component_error(a: &[Amplitude], b: &[Amplitude]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Superposed forward pass against the per-branch oracle on random instances.
/// Draws whose success probability is below `1e-8` are replaced.
pub fn oracle_equivalence(instances: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < instances {
        let n = rng.random_range(1..=2);
        let m = rng.random_range(1..=3);
        let r = rng.random_range(1..=2);
        let depth = rng.random_range(1..=3);
        let model = SpqcModel::new(SpqcModelSpec::new(n, m, r, depth))?;
        let theta = random_theta(&mut rng, model.num_params());
        let x = [rng.random_range(0.0..1.0)];
        let (_, diag) = match model.forward(&theta, &x) {
            Ok(out) => out,
            Err(_) => continue,
        };
        if diag.success_prob < 1e-8 {
            continue;
        }
        let p = oracle_branch_vector(model.spec(), &theta, &x)?;
        let expected = oracle_postselected_state(&p, r)?;
        worst = worst.max(max_component_error(&diag.address_state, &expected));
        done += 1;
    }
    Ok(CheckResult::new("oracle equivalence", done, worst, 1e-10, "n in {1,2}, m in {1,2,3}, r in {1,2}".into()))
}

/// Address amplitudes against normalised `p_j^r` computed directly from
/// standalone branch amplitudes, for `r = 2` and for `r = 3` at `n = 1`.
pub fn squaring_law(instances: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut done = 0;
    while done < instances {
        let (n, r) = if done % 2 == 0 { (rng.random_range(1..=2), 2) } else { (1, 3) };
        let m = rng.random_range(1..=3);
        let model = SpqcModel::new(SpqcModelSpec::new(n, m, r, 2))?;
        let theta = random_theta(&mut rng, model.num_params());
        let x = [rng.random_range(0.0..1.0)];
        let Ok((_, diag)) = model.forward(&theta, &x) else { continue };
        if diag.success_prob < 1e-8 {
            continue;
        }
        let p = oracle_branch_vector(model.spec(), &theta, &x)?;
        let powered: Vec<Amplitude> = p.iter().map(|a| a.powu(r as u32)).collect();
        let norm = powered.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let expected: Vec<Amplitude> = powered.iter().map(|a| a / norm).collect();
        worst = worst.max(max_component_error(&diag.address_state, &expected));
        done += 1;
    }
    Ok(CheckResult::new("squaring law", done, worst, 1e-10, "r = 2, and r = 3 at n = 1".into()))
}

/// The model variants exercised by [`gradient_checks`].
pub fn gradient_variants() -> Result<Vec<(String, Box<dyn Model>)>> {
    let mut out: Vec<(String, Box<dyn Model>)> = Vec::new();
    for (n, m, r, d) in [(1, 1, 1, 2), (2, 2, 1, 2), (1, 3, 2, 2), (2, 2, 2, 1), (1, 2, 3, 2)] {
        out.push((format!("spqc n={n} m={m} r={r} depth={d}"), Box::new(SpqcModel::new(SpqcModelSpec::new(n, m, r, d))?)));
    }
    let base = SpqcModelSpec::new(2, 2, 1, 1);
    out.push(("pqc depth-matched to n=2 m=2".into(), Box::new(PqcModel::depth_matched(&base, 4)?)));
    Ok(out)
}

/// Worst relative and absolute discrepancies of the gradient checks on one model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradientDiscrepancy {
    /// `‖g(h) − g(h/2)‖∞ / ‖g(h/2)‖∞` for finite-difference gradients.
    pub step_halving: f64,
    /// Worst `|g_fd·d − D_d|` over the random directions.
    pub fd_directional: f64,
    /// Worst `|g_adjoint·d − D_d|` over the random directions.
    pub adjoint_directional: f64,
}

/// Loss gradient checks on a small step-task batch.
///
/// `D_d = (L(θ + εd) − L(θ − εd)) / 2ε` with `ε = 1e-5` and `d` a random
/// unit vector; it is computed here without [`gradient_fd`].
pub fn gradient_discrepancy(model: &dyn Model, data: &Dataset, fd_step: f64, directions: usize, seed: u64) -> Result<GradientDiscrepancy> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let theta: Vec<f64> = {
        let mut t = model.init_params(seed);
        let a = model.num_angles();
        t[a] = rng.random_range(0.5..1.5);
        t[a + 1] = rng.random_range(-0.3..0.3);
        t
    };
    let loss = |t: &[f64]| dataset_loss(model, t, data);
    let g = gradient_fd(loss, &theta, fd_step)?;
    let g_half = gradient_fd(loss, &theta, fd_step / 2.0)?;
    let scale = g_half.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(f64::MIN_POSITIVE);
    let step_halving = g.iter().zip(&g_half).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;

    let (_, g_adj) = loss_and_grad(model, &theta, data, GradientMethod::Adjoint, fd_step)?;
    let eps = 1e-5;
    let mut fd_directional = 0.0f64;
    let mut adjoint_directional = 0.0f64;
    for _ in 0..directions {
        let mut d: Vec<f64> = (0..theta.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let len = d.iter().map(|v| v * v).sum::<f64>().sqrt();
        d.iter_mut().for_each(|v| *v /= len);
        let plus: Vec<f64> = theta.iter().zip(&d).map(|(t, v)| t + eps * v).collect();
        let minus: Vec<f64> = theta.iter().zip(&d).map(|(t, v)| t - eps * v).collect();
        let directional = (loss(&plus)? - loss(&minus)?) / (2.0 * eps);
        let dot = |g: &[f64]| g.iter().zip(&d).map(|(a, b)| a * b).sum::<f64>();
        fd_directional = fd_directional.max((dot(&g) - directional).abs());
        adjoint_directional = adjoint_directional.max((dot(&g_adj) - directional).abs());
    }
    Ok(GradientDiscrepancy { step_halving, fd_directional, adjoint_directional })
}

/// Step halving (relative `1e-4`) and 10 random directional derivatives
/// (absolute `1e-5`) for every variant in [`gradient_variants`].
pub fn gradient_checks(seed: u64) -> Result<Vec<CheckResult>> {
    let full = make_step_dataset(200, 2, (0.0, 1.0))?.to_dataset();
    let data = Dataset {
        inputs: full.inputs.iter().step_by(25).cloned().collect(),
        targets: full.targets.iter().step_by(25).cloned().collect(),
        feature_names: full.feature_names.clone(),
    };
    let variants = gradient_variants()?;
    let mut halving = (0.0f64, String::new());
    let mut fd_dir = (0.0f64, String::new());
    let mut adj_dir = (0.0f64, String::new());
    for (k, (name, model)) in variants.iter().enumerate() {
        let d = gradient_discrepancy(model.as_ref(), &data, 1e-4, 10, seed + k as u64)?;
        for (slot, value) in [(&mut halving, d.step_halving), (&mut fd_dir, d.fd_directional), (&mut adj_dir, d.adjoint_directional)] {
            if value >= slot.0 {
                *slot = (value, format!("worst on {name}"));
            }
        }
    }
    let cases = variants.len();
    Ok(vec![
        CheckResult::new("finite-difference step halving", cases, halving.0, 1e-4, halving.1),
        CheckResult::new("finite-difference vs directional derivative", cases * 10, fd_dir.0, 1e-5, fd_dir.1),
        CheckResult::new("adjoint vs directional derivative", cases * 10, adj_dir.0, 1e-5, adj_dir.1),
    ])
}

fn random_state(rng: &mut ChaCha8Rng, num_qubits: usize) -> Result<StateVector> {
    let mut amps: Vec<Amplitude> =
        (0..1usize << num_qubits).map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0))).collect();
    let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
    amps.iter_mut().for_each(|a| *a /= norm);
    StateVector::from_amplitudes(amps)
}

/// Norm drift over `gates` random (optionally controlled) gate applications.
pub fn norm_conservation(num_qubits: usize, gates: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut state = random_state(&mut rng, num_qubits)?;
    let mut worst = 0.0f64;
    for _ in 0..gates {
        let angle = rng.random_range(-TAU..TAU);
        let gate = match rng.random_range(0..5) {
            0 => Gate::H,
            1 => Gate::X,
            2 => Gate::rotation(Axis::X, angle),
            3 => Gate::rotation(Axis::Y, angle),
            _ => Gate::rotation(Axis::Z, angle),
        };
        let target = rng.random_range(0..num_qubits);
        let mut controls = ControlSpec::none();
        for q in 0..num_qubits {
            if q != target && rng.random_bool(0.25) {
                let polarity = if rng.random_bool(0.5) { Polarity::Positive } else { Polarity::Negative };
                controls = controls.with(q, polarity);
            }
        }
        state.apply_gate(gate, target, &controls)?;
        worst = worst.max((state.norm_sqr() - 1.0).abs());
    }
    Ok(CheckResult::new("norm conservation", gates, worst, 1e-12, format!("{num_qubits} qubits")))
}

/// Probabilities over every bitstring of random registers sum to one.
pub fn projection_completeness(num_qubits: usize, trials: usize, seed: u64) -> Result<CheckResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let state = random_state(&mut rng, num_qubits)?;
        let mut register: Vec<usize> = (0..num_qubits).filter(|_| rng.random_bool(0.5)).collect();
        if register.is_empty() {
            register.push(rng.random_range(0..num_qubits));
        }
        let total: f64 = (0..1usize << register.len())
            .map(|v| {
                let bits: Vec<u8> = (0..register.len()).map(|k| ((v >> k) & 1) as u8).collect();
                state.probability_of(&register, &bits)
            })
            .sum::<Result<f64>>()?;
        worst = worst.max((total - 1.0).abs());
    }
    Ok(CheckResult::new("projection completeness", trials, worst, 1e-12, format!("{num_qubits} qubits")))
}

/// Every suite at its default size.
pub fn run_all() -> Result<Vec<CheckResult>> {
    let mut out = vec![oracle_equivalence(120, 1)?, squaring_law(40, 2)?];
    out.extend(gradient_checks(3)?);
    out.push(norm_conservation(6, 10_000, 4)?);
    out.push(projection_completeness(6, 200, 5)?);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_suites_pass() {
        assert!(oracle_equivalence(10, 7).unwrap().passed);
        assert!(squaring_law(6, 7).unwrap().passed);
        assert!(norm_conservation(4, 500, 7).unwrap().passed);
        assert!(projection_completeness(4, 20, 7).unwrap().passed);
    }

    #[test]
    fn report_line_format() {
        let r = CheckResult::new("demo", 3, 2e-13, 1e-12, String::new());
        assert_eq!(r.to_string(), "[PASS] demo: 3 cases, worst 2.000e-13 (tolerance 1.0e-12)");
        assert!(!CheckResult::new("demo", 1, 1.0, 0.5, "x".into()).passed);
    }
}
