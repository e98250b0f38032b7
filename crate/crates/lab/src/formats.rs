//! JSON and CSV shapes for densities, point sets and results.

use std::io::{Read, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use ktrp_core::fairness::{FairnessMix, PopulationGridDensity};
use ktrp_core::ktsp::KtspResult;
use ktrp_core::logistics::DispatchPlan;
use ktrp_core::trp::TrpResult;
use ktrp_core::tsp::TspResult;
use ktrp_core::{GridDensity, Point, PointSet, Square};
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SquareJson {
    pub origin: [f64; 2],
    pub side: f64,
}

impl Default for SquareJson {
    fn default() -> Self {
        SquareJson {
            origin: [0.0, 0.0],
            side: 1.0,
        }
    }
}

impl SquareJson {
    pub fn to_square(self) -> Result<Square> {
        Ok(Square::new(Point::new(self.origin[0], self.origin[1]), self.side)?)
    }
}

impl From<Square> for SquareJson {
    fn from(s: Square) -> Self {
        SquareJson {
            origin: [s.origin.x, s.origin.y],
            side: s.side,
        }
    }
}

/// `{"m", "cells", "square"}`, plus `"layers"` for population densities.
/// Cells are row-major starting from the bottom row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityJson {
    pub m: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub cells: Vec<f64>,
    #[serde(default)]
    pub square: SquareJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layers: Option<Vec<Vec<f64>>>,
}

impl DensityJson {
    pub fn uniform(m: usize) -> Self {
        DensityJson {
            m,
            cells: vec![1.0; m * m],
            square: SquareJson::default(),
            layers: None,
        }
    }

    /// The total density; with only `"layers"` given it is their sum.
    pub fn to_density(&self) -> Result<GridDensity> {
        if self.cells.is_empty() {
            return Ok(self.to_population()?.total().clone());
        }
        Ok(GridDensity::new(self.m, self.cells.clone(), self.square.to_square()?)?)
    }

    pub fn to_population(&self) -> Result<PopulationGridDensity> {
        let Some(layers) = &self.layers else {
            bail!("population density needs \"layers\"");
        };
        let pop = PopulationGridDensity::new(self.m, layers.clone(), self.square.to_square()?)?;
        if !self.cells.is_empty() {
            let drift: f64 = pop
                .total()
                .cells()
                .iter()
                .zip(&self.cells)
                .map(|(a, b)| (a - b).abs())
                .sum();
            if drift > 1e-9 * (self.m * self.m) as f64 {
                bail!("\"cells\" disagree with the sum of \"layers\"");
            }
        }
        Ok(pop)
    }
}

impl From<&GridDensity> for DensityJson {
    fn from(d: &GridDensity) -> Self {
        DensityJson {
            m: d.m(),
            cells: d.cells().to_vec(),
            square: d.square().into(),
            layers: None,
        }
    }
}

impl From<&PopulationGridDensity> for DensityJson {
    fn from(p: &PopulationGridDensity) -> Self {
        DensityJson {
            layers: Some(p.layers().to_vec()),
            ..DensityJson::from(p.total())
        }
    }
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

pub fn write_json<T: Serialize, W: Write>(value: &T, mut out: W) -> Result<()> {
    serde_json::to_writer_pretty(&mut out, value)?;
    writeln!(out)?;
    Ok(())
}

#[derive(Serialize, Deserialize)]
struct XY {
    x: f64,
    y: f64,
}

/// Shortest decimal form is not guaranteed by every reader, so coordinates
/// are written with 17 significant digits.
fn sig17(v: f64) -> String {
    format!("{v:.16e}")
}

/// `x,y` CSV, one point per row.
pub fn write_points_csv<W: Write>(ps: &PointSet, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["x", "y"])?;
    for p in ps.points() {
        w.write_record([sig17(p.x), sig17(p.y)])?;
    }
    w.flush()?;
    Ok(())
}

/// Reads `x,y` CSV into the given square, or into the unit square when
/// `square` is `None`.
pub fn read_points_csv<R: Read>(input: R, square: Option<Square>) -> Result<PointSet> {
    let mut r = csv::Reader::from_reader(input);
    let mut pts = Vec::new();
    for (line, rec) in r.deserialize::<XY>().enumerate() {
        let rec = rec.with_context(|| format!("point row {}", line + 1))?;
        pts.push(Point::new(rec.x, rec.y));
    }
    Ok(PointSet::new(pts, square.unwrap_or(Square::UNIT))?)
}

#[derive(Serialize, Deserialize)]
pub struct PointsJson {
    pub square: SquareJson,
    pub points: Vec<[f64; 2]>,
}

impl From<&PointSet> for PointsJson {
    fn from(ps: &PointSet) -> Self {
        PointsJson {
            square: ps.square().into(),
            points: ps.points().iter().map(|p| [p.x, p.y]).collect(),
        }
    }
}

impl PointsJson {
    pub fn to_point_set(&self) -> Result<PointSet> {
        let pts = self.points.iter().map(|&[x, y]| Point::new(x, y)).collect();
        Ok(PointSet::new(pts, self.square.to_square()?)?)
    }
}

#[derive(Debug, Serialize)]
pub struct TspJson {
    pub method: &'static str,
    pub length: f64,
    pub n: usize,
    pub order: Vec<usize>,
}

impl From<&TspResult> for TspJson {
    fn from(r: &TspResult) -> Self {
        TspJson {
            method: r.method.name(),
            length: r.length,
            n: r.route.len(),
            order: r.route.order.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct KtspJson {
    pub length: f64,
    pub k: usize,
    pub alpha_used: u32,
    pub cell_chosen: Option<usize>,
    pub grid_side: usize,
    pub region: Option<usize>,
    pub fallback: bool,
    pub order: Vec<usize>,
}

impl From<&KtspResult> for KtspJson {
    fn from(r: &KtspResult) -> Self {
        KtspJson {
            length: r.length,
            k: r.k(),
            alpha_used: r.alpha_used,
            cell_chosen: r.cell_chosen,
            grid_side: r.grid_side,
            region: r.region,
            fallback: r.fallback,
            order: r.route.order.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct TrpJson {
    pub latency: f64,
    pub n: usize,
    pub cell_order: Vec<usize>,
    pub per_cell_last_latency: Vec<f64>,
    pub order: Vec<usize>,
}

impl From<&TrpResult> for TrpJson {
    fn from(r: &TrpResult) -> Self {
        TrpJson {
            latency: r.latency,
            n: r.route.len(),
            cell_order: r.cell_order.clone(),
            per_cell_last_latency: r.per_cell_last_latency.clone(),
            order: r.route.order.clone(),
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MixJson {
    pub q: Vec<f64>,
    pub support: Vec<usize>,
    pub objective: f64,
    pub epsilon: f64,
}

impl From<&FairnessMix> for MixJson {
    fn from(m: &FairnessMix) -> Self {
        MixJson {
            q: m.q.clone(),
            support: m.support.clone(),
            objective: m.objective,
            epsilon: m.epsilon,
        }
    }
}

#[derive(Debug, Serialize)]
pub struct PlanJson {
    pub dispatch_times: Vec<f64>,
    pub loads: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub integer_loads: Option<Vec<u64>>,
    pub feasible: bool,
    pub slack: f64,
    pub failing_vehicle: Option<usize>,
}

impl PlanJson {
    pub fn new(p: &DispatchPlan, integer: bool) -> Self {
        PlanJson {
            dispatch_times: p.dispatch_times.clone(),
            loads: p.loads.clone(),
            integer_loads: integer.then(|| p.integer_loads()),
            feasible: p.feasible,
            slack: p.slack,
            failing_vehicle: p.failing_vehicle,
        }
    }
}

/// Route as CSV rows `position,index,x,y`.
pub fn write_route_csv<W: Write>(ps: &PointSet, order: &[usize], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["position", "index", "x", "y"])?;
    for (pos, &i) in order.iter().enumerate() {
        let p = ps.points()[i];
        w.write_record([pos.to_string(), i.to_string(), sig17(p.x), sig17(p.y)])?;
    }
    w.flush()?;
    Ok(())
}
