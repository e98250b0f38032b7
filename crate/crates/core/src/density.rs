//! Piecewise-constant densities on an `m x m` grid, sampling from them, and
//! the TRP density functional `g`.

use alloc::vec::Vec;

use rand::Rng;

use crate::error::{structural, Error, Result};
use crate::geom::{CellGrid, Point, PointSet, Square};
use crate::seed::RandomSeed;

/// Relative tolerance on `sum f_k = m^2` accepted by [`GridDensity::new`].
pub const NORMALIZATION_TOL: f64 = 1e-9;

/// Density `f = sum_k f_k 1_{Q_k}` over the regular partition of a square.
///
/// Cell values are expressed relative to the square, so a valid density has
/// `(1/m^2) sum_k f_k = 1` whatever the side length; the uniform density is
/// `f_k = 1`. Cells are row-major from the bottom row, see [`CellGrid`].
#[derive(Clone, Debug, PartialEq)]
pub struct GridDensity {
    m: usize,
    cells: Vec<f64>,
    square: Square,
}

impl GridDensity {
    pub fn new(m: usize, cells: Vec<f64>, square: Square) -> Result<Self> {
        Self::check_shape(m, &cells)?;
        let total: f64 = cells.iter().sum();
        let target = (m * m) as f64;
        if (total - target).abs() > NORMALIZATION_TOL * target {
            return Err(structural!("cell values sum to {total}, expected m^2 = {target}"));
        }
        Ok(GridDensity { m, cells, square })
    }

    /// Rescales arbitrary nonnegative weights into a density.
    pub fn from_weights(m: usize, weights: Vec<f64>, square: Square) -> Result<Self> {
        Self::check_shape(m, &weights)?;
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(structural!("cell weights have zero total mass"));
        }
        let scale = (m * m) as f64 / total;
        let cells = weights.into_iter().map(|w| w * scale).collect();
        Ok(GridDensity { m, cells, square })
    }

    pub fn uniform(m: usize, square: Square) -> Self {
        assert!(m >= 1);
        GridDensity {
            m,
            cells: alloc::vec![1.0; m * m],
            square,
        }
    }

    fn check_shape(m: usize, cells: &[f64]) -> Result<()> {
        if m == 0 {
            return Err(structural!("grid resolution must be at least 1"));
        }
        if cells.len() != m * m {
            return Err(structural!(
                "expected {} cell values for m = {m}, got {}",
                m * m,
                cells.len()
            ));
        }
        if let Some((k, v)) = cells.iter().enumerate().find(|(_, v)| !v.is_finite() || **v < 0.0) {
            return Err(structural!("cell {k} has invalid density {v}"));
        }
        Ok(())
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn cells(&self) -> &[f64] {
        &self.cells
    }

    pub fn square(&self) -> Square {
        self.square
    }

    pub fn grid(&self) -> CellGrid {
        CellGrid::new(self.square, self.m)
    }

    /// Probability that one sample lands in `cell`: `f_k / m^2`.
    pub fn cell_probability(&self, cell: usize) -> f64 {
        self.cells[cell] / (self.m * self.m) as f64
    }

    /// Highest cell value, ties resolved to the lowest index.
    pub fn max_cell(&self) -> (usize, f64) {
        let mut best = (0, self.cells[0]);
        for (k, &v) in self.cells.iter().enumerate().skip(1) {
            if v > best.1 {
                best = (k, v);
            }
        }
        best
    }

    /// Cells by decreasing density; equal values keep index order.
    pub fn decreasing_order(&self) -> Vec<usize> {
        let mut order: Vec<usize> = (0..self.cells.len()).collect();
        order.sort_by(|&a, &b| self.cells[b].total_cmp(&self.cells[a]));
        order
    }

    /// Same density on a `factor`-times finer grid.
    pub fn refine(&self, factor: usize) -> GridDensity {
        assert!(factor >= 1);
        let fm = self.m * factor;
        let mut cells = Vec::with_capacity(fm * fm);
        for row in 0..fm {
            for col in 0..fm {
                cells.push(self.cells[(row / factor) * self.m + col / factor]);
            }
        }
        GridDensity {
            m: fm,
            cells,
            square: self.square,
        }
    }

    /// `||f - g||_1` over the normalized square. One resolution must divide
    /// the other.
    pub fn l1_distance(&self, other: &GridDensity) -> Result<f64> {
        let (lo, hi) = if self.m <= other.m {
            (self, other)
        } else {
            (other, self)
        };
        if hi.m % lo.m != 0 {
            return Err(structural!("resolutions {} and {} are not nested", lo.m, hi.m));
        }
        let lifted = lo.refine(hi.m / lo.m);
        let n = (hi.m * hi.m) as f64;
        Ok(lifted
            .cells
            .iter()
            .zip(&hi.cells)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            / n)
    }
}

/// Number of points in each cell of the density's grid.
pub fn bucket_counts(ps: &PointSet, d: &GridDensity) -> Result<Vec<usize>> {
    let grid = d.grid();
    let mut counts = alloc::vec![0usize; grid.cell_count()];
    for cell in cell_indices(ps.points(), &grid)? {
        counts[cell] += 1;
    }
    Ok(counts)
}

/// Cell index of every point, in point order.
pub fn cell_indices(points: &[Point], grid: &CellGrid) -> Result<Vec<usize>> {
    points
        .iter()
        .enumerate()
        .map(|(i, &p)| {
            grid.cell_of(p)
                .ok_or_else(|| structural!("point {i} at ({}, {}) lies outside {:?}", p.x, p.y, grid.square))
        })
        .collect()
}

/// Point indices grouped by cell.
pub fn cell_members(points: &[Point], grid: &CellGrid) -> Result<Vec<Vec<usize>>> {
    let mut members = alloc::vec![Vec::new(); grid.cell_count()];
    for (i, cell) in cell_indices(points, grid)?.into_iter().enumerate() {
        members[cell].push(i);
    }
    Ok(members)
}

/// Draws `n` i.i.d. points: a cell with probability `f_k / m^2`, then a
/// uniform location inside it.
pub fn sample_points(d: &GridDensity, n: usize, seed: RandomSeed) -> PointSet {
    let mut rng = seed.rng();
    let pts = sample_with(d, n, &mut rng);
    PointSet::new(pts, d.square).expect("sampled points lie in the square")
}

pub(crate) fn sample_with<R: Rng + ?Sized>(d: &GridDensity, n: usize, rng: &mut R) -> Vec<Point> {
    let grid = d.grid();
    let cumulative: Vec<f64> = d
        .cells
        .iter()
        .scan(0.0, |acc, &f| {
            *acc += f;
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().expect("nonempty grid");
    let last_positive = d.cells.iter().rposition(|&f| f > 0.0).expect("density has mass");
    (0..n)
        .map(|_| {
            let u = rng.gen::<f64>() * total;
            let cell = cumulative.partition_point(|&c| c <= u).min(last_positive);
            sample_in_cell(&grid, cell, rng)
        })
        .collect()
}

pub(crate) fn sample_in_cell<R: Rng + ?Sized>(grid: &CellGrid, cell: usize, rng: &mut R) -> Point {
    let sq = grid.cell_square(cell);
    loop {
        let p = Point::new(
            sq.origin.x + rng.gen::<f64>() * sq.side,
            sq.origin.y + rng.gen::<f64>() * sq.side,
        );
        // Rounding can push a coordinate onto the next cell's lower edge.
        if grid.cell_of(p) == Some(cell) {
            return p;
        }
    }
}

/// Exact `iint g_f(x, y) dx dy` for the piecewise-constant density, with
/// `g_f(x, y) = f(y) (1{f(y) < f(x)} + 1/2 1{f(y) = f(x)}) sqrt(f(x))`.
///
/// Scales linearly with the side of the square.
pub fn g_integral(d: &GridDensity) -> f64 {
    let (tie, strict) = g_integral_parts(d);
    tie + strict
}

/// `g_integral` split into the equal-density (factor 1/2) part and the
/// strictly-lower-density part.
pub fn g_integral_parts(d: &GridDensity) -> (f64, f64) {
    let mut values: Vec<f64> = d.cells.iter().copied().filter(|&v| v > 0.0).collect();
    values.sort_by(f64::total_cmp);
    let (mut tie, mut strict) = (0.0, 0.0);
    let mut below = 0.0;
    let mut i = 0;
    while i < values.len() {
        let v = values[i];
        let mut j = i;
        while j < values.len() && values[j] == v {
            j += 1;
        }
        let c = (j - i) as f64;
        let root = libm::sqrt(v);
        tie += c * root * 0.5 * c * v;
        strict += c * root * below;
        below += c * v;
        i = j;
    }
    let m2 = (d.m * d.m) as f64;
    let scale = d.square.side / (m2 * m2);
    (tie * scale, strict * scale)
}

/// Builds a grid density from per-cell probability masses:
/// `f_k = m^2 mass(Q_k)`, rescaled so that `sum f_k = m^2`.
pub fn discretize_density<F>(mut mass: F, m: usize, square: Square) -> Result<GridDensity>
where
    F: FnMut(usize, Square) -> f64,
{
    if m == 0 {
        return Err(structural!("grid resolution must be at least 1"));
    }
    let grid = CellGrid::new(square, m);
    let m2 = (m * m) as f64;
    let mut weights = Vec::with_capacity(m * m);
    for k in 0..m * m {
        let w = mass(k, grid.cell_square(k));
        if !w.is_finite() || w < 0.0 {
            return Err(structural!("cell {k} has invalid mass {w}"));
        }
        weights.push(m2 * w);
    }
    GridDensity::from_weights(m, weights, square)
}

/// [`discretize_density`] for a density function, integrating each cell with
/// a `quad x quad` midpoint rule.
pub fn discretize_fn<F>(f: F, m: usize, square: Square, quad: usize) -> Result<GridDensity>
where
    F: Fn(Point) -> f64,
{
    if quad == 0 {
        return Err(Error::Usage("quadrature needs at least one node per axis".into()));
    }
    discretize_density(
        |_, cell| {
            let h = cell.side / quad as f64;
            let mut acc = 0.0;
            for i in 0..quad {
                for j in 0..quad {
                    let p = Point::new(
                        cell.origin.x + (i as f64 + 0.5) * h,
                        cell.origin.y + (j as f64 + 0.5) * h,
                    );
                    acc += f(p);
                }
            }
            acc * h * h
        },
        m,
        square,
    )
}
