//! Experiment configuration: a sectioned `key = value` file plus flag
//! overrides of the form `section.key=value`.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use spqc_core::training::{GradientMethod, LossKind, TrainConfig};
use spqc_core::{Result, SpqcError};

/// `2π · 199/200`: spreads 200 equally spaced inputs over one full period of
/// the encoding rotation without mapping both end points to the same angle.
pub const STEP_ANGLE_SPAN: f64 = std::f64::consts::TAU * 199.0 / 200.0;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub train: TrainSection,
    pub output: OutputSection,
    pub step_compare: StepCompareSection,
    pub ancilla_scan: AncillaScanSection,
    pub star: StarSection,
    pub sample: SampleSection,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub learning_rate: f64,
    pub epochs: usize,
    /// Number of seeds; runs use `first_seed .. first_seed + seeds`.
    pub seeds: usize,
    pub first_seed: u64,
    /// `adjoint` or `finite_difference`.
    pub gradient: String,
    pub fd_step: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub svg: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepCompareSection {
    pub n: usize,
    pub m: usize,
    pub depth: usize,
    pub mixing_depth: usize,
    pub pqc_depth_multiplier: usize,
    pub num_points: usize,
    pub periods: usize,
    pub angle_lo: f64,
    pub angle_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AncillaScanSection {
    pub n: usize,
    pub ms: Vec<usize>,
    pub depth: usize,
    pub mixing_depth: usize,
    pub num_points: usize,
    pub periods: usize,
    pub angle_lo: f64,
    pub angle_hi: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StarSection {
    pub n: usize,
    pub m: usize,
    pub linear_depth: usize,
    pub quadratic_depth: usize,
    pub mixing_depth: usize,
    pub grid_side: usize,
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub arms: usize,
    pub rotation: f64,
    pub angle_lo: f64,
    pub angle_hi: f64,
    /// Resolution of the exported decision-boundary grid.
    pub decision_grid_side: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SampleSection {
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub depth: usize,
    pub shots: u64,
    pub seed: u64,
    /// Seed for the random circuit parameters.
    pub param_seed: u64,
    pub x: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        Self { learning_rate: 1e-2, epochs: 5000, seeds: 5, first_seed: 0, gradient: "adjoint".into(), fd_step: 1e-4 }
    }
}

impl Default for OutputSection {
    fn default() -> Self {
        Self { dir: PathBuf::from("results"), svg: false }
    }
}

impl Default for StepCompareSection {
    fn default() -> Self {
        Self {
            n: 2,
            m: 2,
            depth: 8,
            mixing_depth: 1,
            pqc_depth_multiplier: 4,
            num_points: 200,
            periods: 2,
            angle_lo: 0.0,
            angle_hi: STEP_ANGLE_SPAN,
        }
    }
}

impl Default for AncillaScanSection {
    fn default() -> Self {
        Self { n: 1, ms: vec![1, 2, 3, 4], depth: 8, mixing_depth: 1, num_points: 200, periods: 2, angle_lo: 0.0, angle_hi: STEP_ANGLE_SPAN }
    }
}

impl Default for StarSection {
    fn default() -> Self {
        Self {
            n: 2,
            m: 3,
            linear_depth: 3,
            quadratic_depth: 3,
            mixing_depth: 1,
            grid_side: 40,
            outer_radius: 0.9,
            inner_radius: 0.35,
            arms: 5,
            rotation: std::f64::consts::FRAC_PI_2,
            angle_lo: 0.0,
            angle_hi: std::f64::consts::PI,
            decision_grid_side: 60,
        }
    }
}

impl Default for SampleSection {
    fn default() -> Self {
        Self { n: 2, m: 2, r: 2, depth: 2, shots: 100_000, seed: 0, param_seed: 0, x: 0.5 }
    }
}

/// Short flag names accepted in place of the full `section.key`.
const ALIASES: [(&str, &str); 5] = [
    ("seeds", "train.seeds"),
    ("epochs", "train.epochs"),
    ("lr", "train.learning_rate"),
    ("out", "output.dir"),
    ("svg", "output.svg"),
];

impl ExperimentConfig {
    /// Reads `path` (if any), applies `overrides` in order and validates.
    pub fn load(path: Option<&Path>, overrides: &[(String, String)]) -> Result<Self> {
        let mut table = match path {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| SpqcError::Config(format!("cannot read {}: {e}", p.display())))?;
                text.parse::<toml::Table>().map_err(|e| SpqcError::Config(format!("{}: {e}", p.display())))?
            }
            None => toml::Table::new(),
        };
        for (key, value) in overrides {
            apply_override(&mut table, key, value)?;
        }
        let config: Self = toml::Value::Table(table).try_into().map_err(|e: toml::de::Error| SpqcError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        self.train_config(LossKind::Mse)?.validate()?;
        if self.ancilla_scan.ms.is_empty() {
            return Err(SpqcError::Config("ancilla_scan.ms must list at least one register size".into()));
        }
        Ok(())
    }

    pub fn train_config(&self, loss: LossKind) -> Result<TrainConfig> {
        let gradient = match self.train.gradient.as_str() {
            "adjoint" => GradientMethod::Adjoint,
            "finite_difference" | "fd" => GradientMethod::FiniteDifference,
            other => return Err(SpqcError::Config(format!("unknown gradient method {other:?}"))),
        };
        Ok(TrainConfig {
            learning_rate: self.train.learning_rate,
            epochs: self.train.epochs,
            seeds: (0..self.train.seeds as u64).map(|k| self.train.first_seed + k).collect(),
            loss,
            fd_step: self.train.fd_step,
            gradient,
            ..TrainConfig::default()
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serialises")
    }
}

/// Sets `key` (`section.key` or an alias) to `value`, which is read as a
/// TOML value when it parses as one and as a bare string otherwise.
pub fn apply_override(table: &mut toml::Table, key: &str, value: &str) -> Result<()> {
    let full = ALIASES.iter().find(|(a, _)| *a == key).map_or(key, |(_, f)| *f);
    let Some((section, field)) = full.split_once('.') else {
        return Err(SpqcError::Config(format!("override {key:?} must name section.key")));
    };
    let parsed = format!("v = {value}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(value.to_string()));
    let entry = table.entry(section.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
    let toml::Value::Table(section_table) = entry else {
        return Err(SpqcError::Config(format!("{section} is not a section")));
    };
    section_table.insert(field.to_string(), parsed);
    Ok(())
}

/// Splits `key=value`.
pub fn parse_assignment(text: &str) -> Result<(String, String)> {
    text.split_once('=')
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .ok_or_else(|| SpqcError::Config(format!("expected key=value, got {text:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ov(k: &str, v: &str) -> (String, String) {
        (k.to_string(), v.to_string())
    }

    #[test]
    fn defaults_round_trip() {
        let config = ExperimentConfig::default();
        let back: ExperimentConfig = toml::from_str(&config.to_toml()).unwrap();
        assert_eq!(back, config);
        assert_eq!(config.train_config(LossKind::Mse).unwrap().seeds, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn overrides_and_aliases() {
        let config = ExperimentConfig::load(
            None,
            &[ov("seeds", "3"), ov("lr", "0.05"), ov("out", "some/dir"), ov("ancilla_scan.ms", "[1, 4]"), ov("star.angle_hi", "2")],
        )
        .unwrap();
        assert_eq!(config.train.seeds, 3);
        assert_eq!(config.train.learning_rate, 0.05);
        assert_eq!(config.output.dir, PathBuf::from("some/dir"));
        assert_eq!(config.ancilla_scan.ms, vec![1, 4]);
        assert_eq!(config.star.angle_hi, 2.0);
    }

    #[test]
    fn file_then_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "[train]\nepochs = 12\nseeds = 2\n\n[step_compare]\ndepth = 3\n").unwrap();
        let config = ExperimentConfig::load(Some(&path), &[ov("epochs", "7")]).unwrap();
        assert_eq!(config.train.epochs, 7);
        assert_eq!(config.train.seeds, 2);
        assert_eq!(config.step_compare.depth, 3);
    }

    #[test]
    fn bad_input_is_a_config_error() {
        for bad in [vec![ov("train.nope", "1")], vec![ov("epochs", "0")], vec![ov("lr", "-1")], vec![ov("epochs", "abc")], vec![ov("flat", "1")]] {
            assert!(matches!(ExperimentConfig::load(None, &bad), Err(SpqcError::Config(_))), "{bad:?}");
        }
        assert!(matches!(ExperimentConfig::load(Some(Path::new("/nonexistent/x.toml")), &[]), Err(SpqcError::Config(_))));
        assert!(parse_assignment("novalue").is_err());
        assert_eq!(parse_assignment("a.b = 3").unwrap(), ov("a.b", "3"));
    }
}
