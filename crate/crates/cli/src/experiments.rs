//! The three training experiments plus `verify` and `sample`.
//!
//! Every runner trains all seeds first and writes its files afterwards from a
//! single thread, so outputs depend only on the configuration.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use spqc_core::datasets::{format_value, make_star_dataset, make_step_dataset, Dataset, StarGeometry};
use spqc_core::encoding::EncodingSpec;
use spqc_core::model::ReadoutSpec;
use spqc_core::pqc::PqcModel;
use spqc_core::sampling::{sample_forward, ShotReport};
use spqc_core::training::{mean_loss_curve, predict_all, train_seeds, LossKind, MetricsSummary, RunRecord, TrainConfig};
use spqc_core::verify::{self, CheckResult};
use spqc_core::{Model, Result, SpqcError, SpqcModel, SpqcModelSpec};

use crate::config::ExperimentConfig;
use crate::svg;

/// All seeds of one model on one task.
#[derive(Debug, Clone)]
pub struct ModelRuns {
    pub label: String,
    pub num_qubits: usize,
    pub runs: Vec<RunRecord>,
    pub summary: MetricsSummary,
    /// Seed-averaged predictions on the evaluation inputs.
    pub mean_predictions: Vec<f64>,
    pub mean_loss: Vec<f64>,
}

impl ModelRuns {
    fn fit<M: Model>(label: &str, num_qubits: usize, model: &M, data: &Dataset, eval: &[Vec<f64>], config: &TrainConfig) -> Result<Self> {
        let runs = train_seeds(model, data, config)?;
        let eval_set = Dataset { inputs: eval.to_vec(), targets: vec![0.0; eval.len()], feature_names: data.feature_names.clone() };
        let per_seed = runs.iter().map(|r| predict_all(model, &r.params, &eval_set)).collect::<Result<Vec<_>>>()?;
        let mean_predictions = (0..eval.len()).map(|i| per_seed.iter().map(|p| p[i]).sum::<f64>() / per_seed.len() as f64).collect();
        Ok(Self {
            label: label.to_string(),
            num_qubits,
            summary: MetricsSummary::from_runs(&runs),
            mean_loss: mean_loss_curve(&runs),
            mean_predictions,
            runs,
        })
    }
}

fn step_encoding(n: usize, depth: usize, lo: f64, hi: f64) -> EncodingSpec {
    EncodingSpec::new(n, (0.0, 1.0), depth).with_angle_range(lo, hi)
}

fn step_spec(n: usize, m: usize, depth: usize, mixing_depth: usize, lo: f64, hi: f64) -> SpqcModelSpec {
    SpqcModelSpec::new(n, m, 1, depth)
        .with_encoding(step_encoding(n, depth, lo, hi))
        .with_readout(ReadoutSpec { mixing_depth })
}

#[derive(Debug, Clone)]
pub struct StepCompareOutcome {
    pub xs: Vec<f64>,
    pub targets: Vec<f64>,
    pub spqc: ModelRuns,
    pub pqc: ModelRuns,
    pub files: Vec<PathBuf>,
}

/// Superposed model against its depth-matched single-branch baseline on the
/// square-wave task.
pub fn step_compare(config: &ExperimentConfig) -> Result<StepCompareOutcome> {
    let s = &config.step_compare;
    let set = make_step_dataset(s.num_points, s.periods, (0.0, 1.0))?;
    let data = set.to_dataset();
    let train = config.train_config(LossKind::Mse)?;

    let spec = step_spec(s.n, s.m, s.depth, s.mixing_depth, s.angle_lo, s.angle_hi);
    let spqc_model = SpqcModel::new(spec.clone())?;
    let pqc_model = PqcModel::depth_matched(&spec, s.pqc_depth_multiplier)?;

    let spqc = ModelRuns::fit("spqc", spec.total_qubits(), &spqc_model, &data, &data.inputs, &train)?;
    let pqc = ModelRuns::fit("pqc", pqc_model.num_qubits(), &pqc_model, &data, &data.inputs, &train)?;

    let out = prepare_dir(&config.output.dir)?;
    let mut files = vec![
        write_regression_table(&out.join("table1.csv"), "model", &[("spqc".into(), &spqc), ("pqc".into(), &pqc)])?,
        write_columns(
            &out.join("fig4.csv"),
            &["x", "target", "spqc_pred_mean", "pqc_pred_mean"],
            &[&set.xs, &set.ys, &spqc.mean_predictions, &pqc.mean_predictions],
        )?,
        write_loss_curves(&out.join("fig4_loss.csv"), &[&spqc, &pqc])?,
        write_seed_metrics(&out.join("table1_seeds.csv"), &[&spqc, &pqc])?,
    ];
    if config.output.svg {
        let chart = svg::line_chart(
            "Step task: seed-averaged predictions",
            &set.xs,
            &[("target", &set.ys), ("spqc", &spqc.mean_predictions), ("pqc", &pqc.mean_predictions)],
        );
        files.push(write_text(&out.join("fig4.svg"), &chart)?);
    }
    Ok(StepCompareOutcome { xs: set.xs, targets: set.ys, spqc, pqc, files })
}

#[derive(Debug, Clone)]
pub struct AncillaScanOutcome {
    pub xs: Vec<f64>,
    pub targets: Vec<f64>,
    /// One entry per address-register size, in configuration order.
    pub by_m: Vec<(usize, ModelRuns)>,
    pub files: Vec<PathBuf>,
}

/// Superposed models with increasing address registers on the square wave.
pub fn ancilla_scan(config: &ExperimentConfig) -> Result<AncillaScanOutcome> {
    let s = &config.ancilla_scan;
    let set = make_step_dataset(s.num_points, s.periods, (0.0, 1.0))?;
    let data = set.to_dataset();
    let train = config.train_config(LossKind::Mse)?;

    let mut by_m = Vec::with_capacity(s.ms.len());
    for &m in &s.ms {
        let spec = step_spec(s.n, m, s.depth, s.mixing_depth, s.angle_lo, s.angle_hi);
        let model = SpqcModel::new(spec.clone())?;
        by_m.push((m, ModelRuns::fit(&format!("m{m}"), spec.total_qubits(), &model, &data, &data.inputs, &train)?));
    }

    let out = prepare_dir(&config.output.dir)?;
    let rows: Vec<(String, &ModelRuns)> = by_m.iter().map(|(m, r)| (m.to_string(), r)).collect();
    let mut header = vec!["x".to_string(), "target".to_string()];
    header.extend(by_m.iter().map(|(m, _)| format!("m{m}_pred_mean")));
    let mut columns: Vec<&[f64]> = vec![&set.xs, &set.ys];
    columns.extend(by_m.iter().map(|(_, r)| r.mean_predictions.as_slice()));
    let runs: Vec<&ModelRuns> = by_m.iter().map(|(_, r)| r).collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut files = vec![
        write_regression_table(&out.join("table2.csv"), "m", &rows)?,
        write_columns(&out.join("fig5.csv"), &header_refs, &columns)?,
        write_loss_curves(&out.join("fig5_loss.csv"), &runs)?,
        write_seed_metrics(&out.join("table2_seeds.csv"), &runs)?,
    ];
    if config.output.svg {
        let mut series: Vec<(&str, &[f64])> = vec![("target", &set.ys)];
        series.extend(by_m.iter().map(|(_, r)| (r.label.as_str(), r.mean_predictions.as_slice())));
        let chart = svg::line_chart("Address register scan: seed-averaged predictions", &set.xs, &series);
        files.push(write_text(&out.join("fig5.svg"), &chart)?);
    }
    Ok(AncillaScanOutcome { xs: set.xs, targets: set.ys, by_m, files })
}

#[derive(Debug, Clone)]
pub struct StarOutcome {
    pub linear: ModelRuns,
    pub quadratic: ModelRuns,
    pub inside_fraction: f64,
    pub files: Vec<PathBuf>,
}

/// Linear (`r = 1`) against quadratic (`r = 2`) superposed classifiers on
/// the star dataset.
pub fn star(config: &ExperimentConfig) -> Result<StarOutcome> {
    let s = &config.star;
    let geometry = StarGeometry {
        grid_side: s.grid_side,
        outer_radius: s.outer_radius,
        inner_radius: s.inner_radius,
        arms: s.arms,
        center: (0.0, 0.0),
        rotation: s.rotation,
    };
    let set = make_star_dataset(&geometry)?;
    let data = set.to_dataset();
    let train = config.train_config(LossKind::MseOnLabels)?;

    let side = s.decision_grid_side.max(2);
    let coord = |k: usize| -1.0 + 2.0 * k as f64 / (side - 1) as f64;
    let grid: Vec<Vec<f64>> = (0..side).flat_map(|i| (0..side).map(move |j| vec![coord(j), coord(i)])).collect();

    let spec_for = |r: usize, depth: usize| {
        SpqcModelSpec::new(s.n, s.m, r, depth)
            .with_encoding(EncodingSpec::new(s.n, (-1.0, 1.0), depth).with_angle_range(s.angle_lo, s.angle_hi))
            .with_readout(ReadoutSpec { mixing_depth: s.mixing_depth })
    };
    let lin_spec = spec_for(1, s.linear_depth);
    let quad_spec = spec_for(2, s.quadratic_depth);
    let linear = ModelRuns::fit("linear", lin_spec.total_qubits(), &SpqcModel::new(lin_spec.clone())?, &data, &grid, &train)?;
    let quadratic = ModelRuns::fit("quadratic", quad_spec.total_qubits(), &SpqcModel::new(quad_spec.clone())?, &data, &grid, &train)?;

    let out = prepare_dir(&config.output.dir)?;
    let gx: Vec<f64> = grid.iter().map(|p| p[0]).collect();
    let gy: Vec<f64> = grid.iter().map(|p| p[1]).collect();
    let mut files = vec![
        write_classification_table(&out.join("table3.csv"), &[&linear, &quadratic])?,
        write_columns(
            &out.join("fig6_grid.csv"),
            &["x", "y", "linear_pred_mean", "quadratic_pred_mean"],
            &[&gx, &gy, &linear.mean_predictions, &quadratic.mean_predictions],
        )?,
        write_loss_curves(&out.join("fig6_loss.csv"), &[&linear, &quadratic])?,
        write_seed_metrics(&out.join("table3_seeds.csv"), &[&linear, &quadratic])?,
    ];
    data.write_csv(&out.join("star_dataset.csv"))?;
    files.push(out.join("star_dataset.csv"));
    if config.output.svg {
        for runs in [&linear, &quadratic] {
            let map = svg::heatmap(&format!("Star task, {} model", runs.label), side, &runs.mean_predictions, &set.polygon);
            files.push(write_text(&out.join(format!("fig6_{}.svg", runs.label)), &map)?);
        }
    }
    Ok(StarOutcome { linear, quadratic, inside_fraction: set.inside_fraction(), files })
}

/// Runs every self-check suite.
pub fn verify_all() -> Result<Vec<CheckResult>> {
    verify::run_all()
}

/// Shot statistics for a randomly initialised model.
pub fn sample(config: &ExperimentConfig) -> Result<ShotReport> {
    let s = &config.sample;
    let model = SpqcModel::new(SpqcModelSpec::new(s.n, s.m, s.r, s.depth))?;
    let theta = model.init_params(s.param_seed);
    sample_forward(&model, &theta, &[s.x], s.shots, s.seed)
}

fn prepare_dir(dir: &Path) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| SpqcError::Io(format!("cannot create {}: {e}", dir.display())))?;
    Ok(dir.to_path_buf())
}

fn write_text(path: &Path, text: &str) -> Result<PathBuf> {
    fs::write(path, text).map_err(|e| SpqcError::Io(format!("cannot write {}: {e}", path.display())))?;
    Ok(path.to_path_buf())
}

fn csv_rows(header: &[&str], rows: impl Iterator<Item = Vec<String>>) -> String {
    let mut text = header.join(",");
    text.push('\n');
    for row in rows {
        text.push_str(&row.join(","));
        text.push('\n');
    }
    text
}

fn write_columns(path: &Path, header: &[&str], columns: &[&[f64]]) -> Result<PathBuf> {
    let len = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != len) {
        return Err(SpqcError::DimensionMismatch { expected: len, actual: columns.iter().map(|c| c.len()).max().unwrap_or(0) });
    }
    let rows = (0..len).map(|i| columns.iter().map(|c| format_value(c[i])).collect());
    write_text(path, &csv_rows(header, rows))
}

fn write_regression_table(path: &Path, key: &str, rows: &[(String, &ModelRuns)]) -> Result<PathBuf> {
    let header = [key, "mse_mean", "mse_std", "mae_mean", "mae_std", "r2_mean", "r2_std"];
    let lines = rows.iter().map(|(name, r)| {
        let s = &r.summary;
        let mut row = vec![name.clone()];
        row.extend([s.mse.mean, s.mse.std, s.mae.mean, s.mae.std, s.r2.mean, s.r2.std].map(format_value));
        row
    });
    write_text(path, &csv_rows(&header, lines))
}

fn write_classification_table(path: &Path, rows: &[&ModelRuns]) -> Result<PathBuf> {
    let header = ["model", "qubits", "mse_mean", "mse_std", "mae_mean", "mae_std", "accuracy_mean", "accuracy_std"];
    let lines = rows.iter().map(|r| {
        let s = &r.summary;
        let acc = s.accuracy.expect("classification runs report accuracy");
        let mut row = vec![r.label.clone(), r.num_qubits.to_string()];
        row.extend([s.mse.mean, s.mse.std, s.mae.mean, s.mae.std, acc.mean, acc.std].map(format_value));
        row
    });
    write_text(path, &csv_rows(&header, lines))
}

fn write_loss_curves(path: &Path, runs: &[&ModelRuns]) -> Result<PathBuf> {
    let mut text = String::from("epoch");
    for r in runs {
        text.push_str(&format!(",{}_loss_mean", r.label));
    }
    text.push('\n');
    let epochs = runs.first().map_or(0, |r| r.mean_loss.len());
    for e in 0..epochs {
        text.push_str(&e.to_string());
        for r in runs {
            text.push(',');
            text.push_str(&format_value(r.mean_loss[e]));
        }
        text.push('\n');
    }
    write_text(path, &text)
}

fn write_seed_metrics(path: &Path, runs: &[&ModelRuns]) -> Result<PathBuf> {
    let mut out = Vec::new();
    writeln!(out, "model,seed,mse,mae,r2,accuracy")?;
    for r in runs {
        for run in &r.runs {
            let m = &run.metrics;
            let acc = m.accuracy.map_or_else(String::new, format_value);
            writeln!(out, "{},{},{},{},{},{}", r.label, run.seed, format_value(m.mse), format_value(m.mae), format_value(m.r2), acc)?;
        }
    }
    write_text(path, &String::from_utf8(out).expect("csv output is ASCII"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::apply_override;

    fn smoke(dir: &Path, extra: &[(&str, &str)]) -> ExperimentConfig {
        let mut table = toml::Table::new();
        for (k, v) in [("epochs", "3"), ("seeds", "2"), ("out", dir.to_str().unwrap())].iter().chain(extra) {
            apply_override(&mut table, k, v).unwrap();
        }
        let config: ExperimentConfig = toml::Value::Table(table).try_into().unwrap();
        config.validate().unwrap();
        config
    }

    #[test]
    fn step_compare_writes_tables() {
        let dir = tempfile::tempdir().unwrap();
        let config = smoke(dir.path(), &[("step_compare.depth", "2")]);
        let outcome = step_compare(&config).unwrap();
        let table = fs::read_to_string(dir.path().join("table1.csv")).unwrap();
        let lines: Vec<&str> = table.lines().collect();
        assert_eq!(lines[0], "model,mse_mean,mse_std,mae_mean,mae_std,r2_mean,r2_std");
        assert!(lines[1].starts_with("spqc,") && lines[2].starts_with("pqc,"));
        let fig = fs::read_to_string(dir.path().join("fig4.csv")).unwrap();
        assert_eq!(fig.lines().count(), 201);
        assert_eq!(outcome.spqc.runs.len(), 2);
        assert_eq!(outcome.spqc.mean_loss.len(), 3);
    }

    #[test]
    fn ancilla_scan_has_one_row_per_register() {
        let dir = tempfile::tempdir().unwrap();
        let config = smoke(dir.path(), &[("ancilla_scan.depth", "1"), ("svg", "true")]);
        ancilla_scan(&config).unwrap();
        let table = fs::read_to_string(dir.path().join("table2.csv")).unwrap();
        assert_eq!(table.lines().count(), 5);
        assert!(dir.path().join("fig5.svg").exists());
    }

    #[test]
    fn star_reports_accuracy() {
        let dir = tempfile::tempdir().unwrap();
        let config = smoke(
            dir.path(),
            &[("epochs", "1"), ("star.grid_side", "6"), ("star.linear_depth", "1"), ("star.quadratic_depth", "1"), ("star.decision_grid_side", "5")],
        );
        let outcome = star(&config).unwrap();
        let acc = outcome.quadratic.summary.accuracy.unwrap();
        assert!((0.0..=100.0).contains(&acc.mean));
        assert_eq!(outcome.quadratic.num_qubits, 7);
        assert_eq!(outcome.linear.num_qubits, 5);
        let grid = fs::read_to_string(dir.path().join("fig6_grid.csv")).unwrap();
        assert_eq!(grid.lines().count(), 26);
    }

    #[test]
    fn sample_uses_configured_shots() {
        let config = ExperimentConfig::default();
        let report = sample(&config).unwrap();
        assert_eq!(report.shots_total, config.sample.shots);
    }
}
