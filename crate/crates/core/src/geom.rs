use alloc::vec::Vec;

use crate::error::{structural, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        libm::sqrt(dx * dx + dy * dy)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

/// Axis-aligned square `[origin.x, origin.x + side] x [origin.y, origin.y + side]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Square {
    pub origin: Point,
    pub side: f64,
}

impl Square {
    pub const UNIT: Square = Square {
        origin: Point::new(0.0, 0.0),
        side: 1.0,
    };

    pub fn new(origin: Point, side: f64) -> Result<Self> {
        if !origin.is_finite() || !side.is_finite() || side <= 0.0 {
            return Err(structural!(
                "square needs a finite origin and a positive side, got {origin:?}, {side}"
            ));
        }
        Ok(Square { origin, side })
    }

    pub fn area(&self) -> f64 {
        self.side * self.side
    }

    pub fn center(&self) -> Point {
        Point::new(self.origin.x + 0.5 * self.side, self.origin.y + 0.5 * self.side)
    }

    /// Closed containment.
    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.origin.x
            && p.y >= self.origin.y
            && p.x <= self.origin.x + self.side
            && p.y <= self.origin.y + self.side
    }

    /// Smallest square anchored at the lower-left corner of the bounding box.
    pub fn bounding(points: &[Point]) -> Option<Square> {
        let first = points.first()?;
        let (mut x0, mut y0, mut x1, mut y1) = (first.x, first.y, first.x, first.y);
        for p in points {
            x0 = x0.min(p.x);
            y0 = y0.min(p.y);
            x1 = x1.max(p.x);
            y1 = y1.max(p.y);
        }
        let side = (x1 - x0).max(y1 - y0);
        let side = if side > 0.0 { side } else { 1.0 };
        Some(Square {
            origin: Point::new(x0, y0),
            side,
        })
    }
}

/// Regular `m x m` partition of a square. Cells are numbered row-major from
/// the bottom row; each cell is half-open on its top and right edges except
/// along the top and right boundary of the square, so the cells partition
/// the closed square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CellGrid {
    pub square: Square,
    pub m: usize,
}

impl CellGrid {
    pub fn new(square: Square, m: usize) -> Self {
        assert!(m >= 1, "grid resolution must be positive");
        CellGrid { square, m }
    }

    pub fn cell_count(&self) -> usize {
        self.m * self.m
    }

    pub fn cell_side(&self) -> f64 {
        self.square.side / self.m as f64
    }

    fn axis_index(&self, offset: f64) -> usize {
        let raw = libm::floor(offset / self.square.side * self.m as f64);
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(self.m - 1)
        }
    }

    /// `(row, col)` of a point inside the square.
    pub fn locate(&self, p: Point) -> Option<(usize, usize)> {
        if !self.square.contains(p) {
            return None;
        }
        let col = self.axis_index(p.x - self.square.origin.x);
        let row = self.axis_index(p.y - self.square.origin.y);
        Some((row, col))
    }

    pub fn cell_of(&self, p: Point) -> Option<usize> {
        self.locate(p).map(|(r, c)| r * self.m + c)
    }

    pub fn cell_square(&self, cell: usize) -> Square {
        let h = self.cell_side();
        let (row, col) = (cell / self.m, cell % self.m);
        Square {
            origin: Point::new(
                self.square.origin.x + col as f64 * h,
                self.square.origin.y + row as f64 * h,
            ),
            side: h,
        }
    }

    pub fn cell_center(&self, cell: usize) -> Point {
        self.cell_square(cell).center()
    }
}

/// Sample of customer locations inside a bounding square.
#[derive(Clone, Debug, PartialEq)]
pub struct PointSet {
    points: Vec<Point>,
    square: Square,
}

impl PointSet {
    pub fn new(points: Vec<Point>, square: Square) -> Result<Self> {
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(structural!("point {i} has non-finite coordinates {p:?}"));
            }
            if !square.contains(*p) {
                return Err(structural!("point {i} at ({}, {}) lies outside {square:?}", p.x, p.y));
            }
        }
        Ok(PointSet { points, square })
    }

    pub fn unit(points: Vec<Point>) -> Result<Self> {
        PointSet::new(points, Square::UNIT)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn square(&self) -> Square {
        self.square
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Points at `indices`, re-anchored in `square`. The returned set's
    /// index `i` corresponds to `indices[i]` here.
    pub fn subset(&self, indices: &[usize], square: Square) -> Result<PointSet> {
        let pts = indices.iter().map(|&i| self.points[i]).collect();
        PointSet::new(pts, square)
    }
}

/// Visiting sequence over a [`PointSet`]; a closed route returns to its start.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Route {
    pub order: Vec<usize>,
    pub closed: bool,
}

impl Route {
    pub fn open(order: Vec<usize>) -> Self {
        Route { order, closed: false }
    }

    pub fn closed(order: Vec<usize>) -> Self {
        Route { order, closed: true }
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Checks that indices are in range and pairwise distinct.
    pub fn validate(&self, n: usize) -> Result<()> {
        let mut seen = alloc::vec![false; n];
        for &i in &self.order {
            if i >= n {
                return Err(structural!("route index {i} out of range for {n} points"));
            }
            if seen[i] {
                return Err(structural!("route visits index {i} twice"));
            }
            seen[i] = true;
        }
        Ok(())
    }

    pub fn is_permutation_of(&self, n: usize) -> bool {
        self.order.len() == n && self.validate(n).is_ok()
    }
}
