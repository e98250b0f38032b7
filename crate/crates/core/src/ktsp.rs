//! The k-TSP: shortest open path through some `k` of the `n` points.
//!
//! [`ktsp_grid_scheme`] partitions the square into `m_alpha^2` equal cells,
//! coarsening for `alpha = 1, 2, 3, ...` until some cell holds at least `k`
//! points, and tours `k` points of that cell. On uniform points its expected
//! length is within a constant of the optimum, which grows like
//! `(k - 1) / n^{(1/2)(1 + 1/(k-1))}` ([`ktsp_rate`]).
//!
//! Note the exponent at `k = 2` is 1 (closest-pair distance `~ 1/n`); some
//! prose treatments quote `n^{-3/4}` for `k = 2`, which is the `k = 3` value.

use alloc::vec::Vec;

use crate::density::{cell_members, GridDensity};
use crate::error::{structural, usage, Error, Result};
use crate::geom::{CellGrid, Point, PointSet, Route, Square};
use crate::metrics::order_length;
use crate::tsp::local_tour;

/// Largest `n` for which [`ktsp_exact`] runs the subset dynamic program.
pub const KTSP_EXACT_MAX: usize = 12;

#[derive(Clone, Debug, PartialEq)]
pub struct KtspResult {
    /// Open path over exactly `k` indices of the input point set.
    pub route: Route,
    pub length: f64,
    /// Coarsening step at which a full cell was found (1 for exact results).
    pub alpha_used: u32,
    /// Row-major index of the chosen cell in the `grid_side x grid_side` grid.
    pub cell_chosen: Option<usize>,
    pub grid_side: usize,
    /// Density cell the scheme was restricted to, if any.
    pub region: Option<usize>,
    /// Set when a restricted scheme had to widen its search area.
    pub fallback: bool,
}

impl KtspResult {
    pub fn k(&self) -> usize {
        self.route.len()
    }
}

fn exponent(k: usize) -> f64 {
    0.5 * (1.0 + 1.0 / (k as f64 - 1.0))
}

/// `m_alpha = floor((1/alpha) sqrt(n^{1 + 1/(k-1)} / (area (k-1))))`, the
/// number of cells per unit length, clamped to at least 1.
pub fn m_alpha(n: usize, k: usize, area: f64, alpha: u32) -> usize {
    let kk = k as f64 - 1.0;
    let v = libm::sqrt(libm::pow(n as f64, 2.0 * exponent(k)) / (area * kk)) / alpha as f64;
    (libm::floor(v) as usize).max(1)
}

/// Cells per side of the working square: `side * m_alpha`, which no longer
/// depends on the area.
pub fn grid_side_count(n: usize, k: usize, alpha: u32) -> usize {
    m_alpha(n, k, 1.0, alpha)
}

/// Rate term `(k - 1) / n^{(1/2)(1 + 1/(k-1))} * sqrt(area)`.
pub fn ktsp_rate(k: usize, n: usize, area: f64) -> Result<f64> {
    if k < 2 {
        return Err(usage!("k-TSP rate needs k >= 2, got {k}"));
    }
    if n < k {
        return Err(usage!("k-TSP rate needs n >= k, got n = {n}, k = {k}"));
    }
    Ok((k as f64 - 1.0) / libm::pow(n as f64, exponent(k)) * libm::sqrt(area))
}

/// Upper bound on `P[l_TSP(k, n) <= alpha]` for uniform points:
/// `min(1, n^k (2 pi alpha^2 / area)^{k-1} / (2k - 2)!)`, evaluated in logs.
pub fn ktsp_tail_bound(k: usize, n: usize, area: f64, alpha: f64) -> f64 {
    if alpha <= 0.0 {
        return 0.0;
    }
    let kk = k as f64;
    let log = kk * libm::log(n as f64) + (kk - 1.0) * libm::log(2.0 * core::f64::consts::PI * alpha * alpha / area)
        - libm::lgamma(2.0 * kk - 1.0);
    if log >= 0.0 {
        1.0
    } else {
        libm::exp(log)
    }
}

/// Length below which the k-TSP is exponentially unlikely once
/// `k >= M log n`: `k / (e sqrt(pi n)) * sqrt(area)`.
pub fn corollary_threshold(k: usize, n: usize, area: f64) -> f64 {
    k as f64 / (core::f64::consts::E * libm::sqrt(core::f64::consts::PI * n as f64)) * libm::sqrt(area)
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k < 2 {
        return Err(usage!("k-TSP scheme needs k >= 2, got {k}"));
    }
    if k > n {
        return Err(usage!("k = {k} exceeds the {n} available points"));
    }
    Ok(())
}

/// Grid scheme over the whole bounding square of `ps`.
pub fn ktsp_grid_scheme(ps: &PointSet, k: usize) -> Result<KtspResult> {
    check_k(k, ps.len())?;
    let pick = grid_scheme_on(ps.points(), ps.square(), k);
    Ok(pick.into_result(|i| i, None))
}

pub(crate) struct GridPick {
    order: Vec<usize>,
    length: f64,
    alpha: u32,
    cell: usize,
    side: usize,
}

impl GridPick {
    pub(crate) fn into_result(self, map: impl Fn(usize) -> usize, region: Option<usize>) -> KtspResult {
        KtspResult {
            route: Route::open(self.order.into_iter().map(map).collect()),
            length: self.length,
            alpha_used: self.alpha,
            cell_chosen: Some(self.cell),
            grid_side: self.side,
            region,
            fallback: false,
        }
    }
}

/// Runs the grid scheme on `points` inside `square`; requires `2 <= k <= len`.
pub(crate) fn grid_scheme_on(points: &[Point], square: Square, k: usize) -> GridPick {
    let n = points.len();
    debug_assert!(k >= 2 && k <= n);
    let mut keyed: Vec<(usize, usize)> = Vec::with_capacity(n);
    let mut alpha = 1u32;
    loop {
        let side = grid_side_count(n, k, alpha);
        let grid = CellGrid::new(square, side);
        keyed.clear();
        keyed.extend(
            points
                .iter()
                .enumerate()
                .map(|(i, &p)| (grid.cell_of(p).unwrap_or(0), i)),
        );
        keyed.sort_unstable();
        let mut start = 0;
        while start < n {
            let cell = keyed[start].0;
            let mut end = start;
            while end < n && keyed[end].0 == cell {
                end += 1;
            }
            if end - start >= k {
                let members: Vec<usize> = keyed[start..end].iter().map(|&(_, i)| i).collect();
                return tour_cell(points, &grid, cell, &members, k, alpha, side);
            }
            start = end;
        }
        // One cell always holds all n >= k points, so this terminates.
        debug_assert!(side > 1);
        alpha += 1;
    }
}

fn tour_cell(
    points: &[Point],
    grid: &CellGrid,
    cell: usize,
    members: &[usize],
    k: usize,
    alpha: u32,
    side: usize,
) -> GridPick {
    let center = grid.cell_center(cell);
    let chosen = nearest_to(points, members, center, k);
    let local: Vec<Point> = chosen.iter().map(|&i| points[i]).collect();
    let tour = local_tour(&local, grid.cell_square(cell));
    let path = open_at_longest_edge(&local, &tour);
    let length = order_length(&local, &path, false);
    GridPick {
        order: path.into_iter().map(|j| chosen[j]).collect(),
        length,
        alpha,
        cell,
        side,
    }
}

/// The `k` members closest to `center`, ties by index.
pub(crate) fn nearest_to(points: &[Point], members: &[usize], center: Point, k: usize) -> Vec<usize> {
    let mut by_dist: Vec<(f64, usize)> = members.iter().map(|&i| (points[i].dist(center), i)).collect();
    by_dist.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    by_dist.truncate(k);
    by_dist.into_iter().map(|(_, i)| i).collect()
}

/// Turns a closed tour into a path by deleting its longest edge.
pub(crate) fn open_at_longest_edge(points: &[Point], tour: &[usize]) -> Vec<usize> {
    let n = tour.len();
    if n < 2 {
        return tour.to_vec();
    }
    let mut cut = 0;
    let mut longest = f64::NEG_INFINITY;
    for i in 0..n {
        let e = points[tour[i]].dist(points[tour[(i + 1) % n]]);
        if e > longest {
            longest = e;
            cut = i;
        }
    }
    (1..=n).map(|s| tour[(cut + s) % n]).collect()
}

/// Restricts the grid scheme to the highest-density cell of `d` (lowest
/// index on ties), falling back to the whole square when that cell holds
/// fewer than `k` points.
pub fn ktsp_nonuniform_scheme(ps: &PointSet, d: &GridDensity, k: usize) -> Result<KtspResult> {
    check_k(k, ps.len())?;
    if ps.square() != d.square() {
        return Err(structural!(
            "density square {:?} differs from point square {:?}",
            d.square(),
            ps.square()
        ));
    }
    let grid = d.grid();
    let (cell, _) = d.max_cell();
    let members = &cell_members(ps.points(), &grid)?[cell];
    if members.len() < k {
        let mut r = ktsp_grid_scheme(ps, k)?;
        r.fallback = true;
        return Ok(r);
    }
    let local: Vec<Point> = members.iter().map(|&i| ps.points()[i]).collect();
    let pick = grid_scheme_on(&local, grid.cell_square(cell), k);
    Ok(pick.into_result(|j| members[j], Some(cell)))
}

/// Globally shortest open path through exactly `k` of the points.
///
/// `k <= 3` is solved directly for any `n` (closest pair; best middle vertex
/// with its two nearest neighbours). Larger `k` runs an open-path subset
/// dynamic program over all subsets and needs `n <= 12`.
pub fn ktsp_exact(ps: &PointSet, k: usize) -> Result<KtspResult> {
    let n = ps.len();
    if k == 0 || k > n {
        return Err(usage!("exact k-TSP needs 1 <= k <= n, got k = {k}, n = {n}"));
    }
    let pts = ps.points();
    let order = match k {
        1 => alloc::vec![0],
        2 => closest_pair(pts),
        3 => best_triple(pts),
        _ if n <= KTSP_EXACT_MAX => subset_path_dp(pts, k),
        _ => {
            return Err(Error::Capacity {
                what: "ktsp_exact",
                size: n,
                limit: KTSP_EXACT_MAX,
            })
        }
    };
    let length = order_length(pts, &order, false);
    Ok(KtspResult {
        route: Route::open(order),
        length,
        alpha_used: 1,
        cell_chosen: None,
        grid_side: 1,
        region: None,
        fallback: false,
    })
}

fn closest_pair(pts: &[Point]) -> Vec<usize> {
    let mut best = (f64::INFINITY, 0, 1);
    for i in 0..pts.len() {
        for j in i + 1..pts.len() {
            let d = pts[i].dist(pts[j]);
            if d < best.0 {
                best = (d, i, j);
            }
        }
    }
    alloc::vec![best.1, best.2]
}

fn best_triple(pts: &[Point]) -> Vec<usize> {
    let mut best = (f64::INFINITY, 0, 0, 0);
    for mid in 0..pts.len() {
        let (mut a, mut b) = ((f64::INFINITY, usize::MAX), (f64::INFINITY, usize::MAX));
        for j in 0..pts.len() {
            if j == mid {
                continue;
            }
            let d = pts[mid].dist(pts[j]);
            if d < a.0 {
                b = a;
                a = (d, j);
            } else if d < b.0 {
                b = (d, j);
            }
        }
        if a.0 + b.0 < best.0 {
            best = (a.0 + b.0, a.1, mid, b.1);
        }
    }
    alloc::vec![best.1, best.2, best.3]
}

fn subset_path_dp(pts: &[Point], k: usize) -> Vec<usize> {
    let n = pts.len();
    let full = 1usize << n;
    let mut cost = alloc::vec![f64::INFINITY; full * n];
    let mut parent = alloc::vec![u8::MAX; full * n];
    for j in 0..n {
        cost[(1 << j) * n + j] = 0.0;
    }
    let mut best = (f64::INFINITY, 0usize, 0usize);
    for mask in 1..full {
        let size = mask.count_ones() as usize;
        if size > k {
            continue;
        }
        for last in 0..n {
            let here = cost[mask * n + last];
            if !here.is_finite() {
                continue;
            }
            if size == k {
                if here < best.0 {
                    best = (here, mask, last);
                }
                continue;
            }
            for next in 0..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let m2 = mask | (1 << next);
                let c = here + pts[last].dist(pts[next]);
                if c < cost[m2 * n + next] {
                    cost[m2 * n + next] = c;
                    parent[m2 * n + next] = last as u8;
                }
            }
        }
    }
    let (_, mut mask, mut last) = best;
    let mut rev = Vec::with_capacity(k);
    loop {
        rev.push(last);
        let p = parent[mask * n + last];
        mask &= !(1 << last);
        if p == u8::MAX {
            break;
        }
        last = p as usize;
    }
    rev.reverse();
    rev
}
