//! Deterministic task generators: a square-wave regression set and a
//! five-armed star classification set. No randomness is involved.

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use crate::error::{Result, SpqcError};

/// Generic supervised dataset; every input row has the same width.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<f64>,
    pub feature_names: Vec<String>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    /// Header `features..., label`, one row per sample.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        writeln!(out, "{},label", self.feature_names.join(","))?;
        for (x, y) in self.inputs.iter().zip(&self.targets) {
            let row: Vec<String> = x.iter().chain(std::iter::once(y)).map(|v| format_value(*v)).collect();
            writeln!(out, "{}", row.join(","))?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Seventeen significant digits, '.' decimal separator.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegressionSet {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
}

impl RegressionSet {
    pub fn to_dataset(&self) -> Dataset {
        Dataset {
            inputs: self.xs.iter().map(|&x| vec![x]).collect(),
            targets: self.ys.clone(),
            feature_names: vec!["x".into()],
        }
    }
}

/// Square wave on `num_points` equally spaced inputs over `domain`.
///
/// With `t = (x − lo)/(hi − lo)` the plateau index is
/// `min(⌊2·periods·t⌋, 2·periods − 1)`; even plateaus map to `+1`, odd ones
/// to `−1`. The right end point belongs to the last plateau.
pub fn make_step_dataset(num_points: usize, periods: usize, domain: (f64, f64)) -> Result<RegressionSet> {
    if num_points < 2 {
        return Err(SpqcError::Config("step dataset needs at least two points".into()));
    }
    if periods == 0 {
        return Err(SpqcError::Config("step dataset needs at least one period".into()));
    }
    let (lo, hi) = domain;
    if lo.is_nan() || hi.is_nan() || lo >= hi {
        return Err(SpqcError::Config(format!("empty domain [{lo}, {hi}]")));
    }
    let plateaus = 2 * periods;
    let mut xs = Vec::with_capacity(num_points);
    let mut ys = Vec::with_capacity(num_points);
    for k in 0..num_points {
        let t = k as f64 / (num_points - 1) as f64;
        let plateau = ((plateaus as f64 * t).floor() as usize).min(plateaus - 1);
        xs.push(lo + t * (hi - lo));
        ys.push(if plateau.is_multiple_of(2) { 1.0 } else { -1.0 });
    }
    Ok(RegressionSet { xs, ys })
}

pub type Point = (f64, f64);

#[derive(Debug, Clone, PartialEq)]
pub struct StarGeometry {
    pub grid_side: usize,
    pub outer_radius: f64,
    pub inner_radius: f64,
    pub arms: usize,
    pub center: Point,
    pub rotation: f64,
}

impl Default for StarGeometry {
    fn default() -> Self {
        Self { grid_side: 40, outer_radius: 0.9, inner_radius: 0.35, arms: 5, center: (0.0, 0.0), rotation: PI / 2.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StarSet {
    pub points: Vec<Point>,
    pub labels: Vec<f64>,
    pub polygon: Vec<Point>,
}

impl StarSet {
    pub fn to_dataset(&self) -> Dataset {
        Dataset {
            inputs: self.points.iter().map(|&(x, y)| vec![x, y]).collect(),
            targets: self.labels.clone(),
            feature_names: vec!["x".into(), "y".into()],
        }
    }

    pub fn inside_fraction(&self) -> f64 {
        self.labels.iter().filter(|&&l| l > 0.0).count() as f64 / self.labels.len() as f64
    }
}

/// Vertices alternate between the outer and inner radius, starting with an
/// outer tip at angle `rotation`.
pub fn star_polygon(geometry: &StarGeometry) -> Result<Vec<Point>> {
    let g = geometry;
    if !(g.inner_radius > 0.0 && g.inner_radius < g.outer_radius) {
        return Err(SpqcError::Config(format!(
            "star radii must satisfy 0 < inner < outer (got {} and {})",
            g.inner_radius, g.outer_radius
        )));
    }
    if g.arms < 2 {
        return Err(SpqcError::Config("star needs at least two arms".into()));
    }
    Ok((0..2 * g.arms)
        .map(|k| {
            let radius = if k % 2 == 0 { g.outer_radius } else { g.inner_radius };
            let angle = g.rotation + k as f64 * PI / g.arms as f64;
            (g.center.0 + radius * angle.cos(), g.center.1 + radius * angle.sin())
        })
        .collect())
}

/// Labels a `grid_side × grid_side` grid over `[-1, 1]²` by membership in the
/// star polygon (`+1` inside, `−1` outside). Rows run over `y`, columns over `x`.
pub fn make_star_dataset(geometry: &StarGeometry) -> Result<StarSet> {
    if geometry.grid_side < 2 {
        return Err(SpqcError::Config("star grid needs at least two points per side".into()));
    }
    let polygon = star_polygon(geometry)?;
    let side = geometry.grid_side;
    let coord = |k: usize| -1.0 + 2.0 * k as f64 / (side - 1) as f64;
    let mut points = Vec::with_capacity(side * side);
    let mut labels = Vec::with_capacity(side * side);
    for i in 0..side {
        for j in 0..side {
            let p = (coord(j), coord(i));
            labels.push(if point_in_star(p, &polygon) { 1.0 } else { -1.0 });
            points.push(p);
        }
    }
    Ok(StarSet { points, labels, polygon })
}

const BOUNDARY_EPS: f64 = 1e-12;

/// Even–odd ray casting; points on an edge or vertex count as inside.
pub fn point_in_star(p: Point, polygon: &[Point]) -> bool {
    let n = polygon.len();
    if n < 3 {
        return false;
    }
    let (px, py) = p;
    let mut inside = false;
    let mut j = n - 1;
    for i in 0..n {
        let (xi, yi) = polygon[i];
        let (xj, yj) = polygon[j];
        if on_segment(p, polygon[j], polygon[i]) {
            return true;
        }
        if (yi > py) != (yj > py) {
            let x_cross = xi + (py - yi) * (xj - xi) / (yj - yi);
            if px < x_cross {
                inside = !inside;
            }
        }
        j = i;
    }
    inside
}

fn on_segment(p: Point, a: Point, b: Point) -> bool {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let cross = (p.0 - a.0) * dy - (p.1 - a.1) * dx;
    let len = (dx * dx + dy * dy).sqrt();
    if cross.abs() > BOUNDARY_EPS * len.max(1.0) {
        return false;
    }
    let dot = (p.0 - a.0) * dx + (p.1 - a.1) * dy;
    dot >= -BOUNDARY_EPS && dot <= dx * dx + dy * dy + BOUNDARY_EPS
}
