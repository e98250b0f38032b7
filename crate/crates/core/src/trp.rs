//! The traveling repairman problem: serve all points, minimizing the sum of
//! arrival latencies.
//!
//! The a priori scheme visits grid cells by decreasing density, runs a local
//! TSP tour in each, and glues the tours together. Serving dense zones first
//! is what the ordering rule [`optimal_subpath_order`] formalizes.

use alloc::vec::Vec;

use crate::density::{cell_members, g_integral, GridDensity};
use crate::error::{structural, usage, Error, Result};
use crate::geom::{Point, PointSet, Route};
use crate::metrics::order_latency;
use crate::tsp::local_tour;

/// Largest instance [`trp_exact`] accepts.
pub const TRP_EXACT_MAX: usize = 13;

#[derive(Clone, Debug, PartialEq)]
pub struct TrpResult {
    /// Open route over every point.
    pub route: Route,
    pub latency: f64,
    /// Positive-density cells in visiting order (empty for exact results).
    pub cell_order: Vec<usize>,
    /// Latency at which the route leaves each cell of `cell_order`.
    pub per_cell_last_latency: Vec<f64>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct TrpOptions {
    /// Fixed depot. The route still starts at a customer, but every latency
    /// also pays the depot-to-first-customer edge.
    pub depot: Option<Point>,
}

/// Density-ordered a priori tour without a depot.
pub fn trp_apriori_scheme(ps: &PointSet, d: &GridDensity) -> Result<TrpResult> {
    trp_apriori_scheme_with(ps, d, TrpOptions::default())
}

/// Cells are taken in [`visiting_order`];
/// each nonempty cell gets a strip + 2-opt tour, entered at the vertex
/// nearest to where the route currently stands and followed once around.
/// Points in zero-density cells, if any, are served last.
pub fn trp_apriori_scheme_with(ps: &PointSet, d: &GridDensity, opts: TrpOptions) -> Result<TrpResult> {
    if ps.square() != d.square() {
        return Err(structural!(
            "density square {:?} differs from point square {:?}",
            d.square(),
            ps.square()
        ));
    }
    let grid = d.grid();
    let pts = ps.points();
    let members = cell_members(pts, &grid)?;
    let visit = visiting_order(d);

    let mut order = Vec::with_capacity(pts.len());
    let mut cell_order = Vec::new();
    let mut per_cell = Vec::new();
    let mut cursor = opts.depot.unwrap_or(grid.square.origin);
    let mut clock = 0.0;
    let mut local = Vec::new();

    for cell in visit {
        let here = &members[cell];
        if !here.is_empty() {
            local.clear();
            local.extend(here.iter().map(|&i| pts[i]));
            let tour = local_tour(&local, grid.cell_square(cell));
            let entry = (0..tour.len())
                .min_by(|&a, &b| local[tour[a]].dist(cursor).total_cmp(&local[tour[b]].dist(cursor)))
                .expect("nonempty cell");
            for s in 0..tour.len() {
                let p = local[tour[(entry + s) % tour.len()]];
                if !order.is_empty() || opts.depot.is_some() {
                    clock += cursor.dist(p);
                }
                cursor = p;
                order.push(here[tour[(entry + s) % tour.len()]]);
            }
        }
        if d.cells()[cell] > 0.0 {
            cell_order.push(cell);
            per_cell.push(clock);
        }
    }

    let mut latency = order_latency(pts, &order);
    if let (Some(depot), Some(&first)) = (opts.depot, order.first()) {
        latency += order.len() as f64 * depot.dist(pts[first]);
    }
    Ok(TrpResult {
        route: Route::open(order),
        latency,
        cell_order,
        per_cell_last_latency: per_cell,
    })
}

/// Cells by decreasing density. Equal densities are taken in serpentine
/// order: rows from the bottom, left-to-right on even rows and right-to-left
/// on odd rows, so consecutive tied cells are always neighbours.
pub fn visiting_order(d: &GridDensity) -> Vec<usize> {
    let m = d.m();
    let rank = |cell: usize| {
        let (row, col) = (cell / m, cell % m);
        row * m + if row % 2 == 0 { col } else { m - 1 - col }
    };
    let mut order: Vec<usize> = (0..m * m).collect();
    order.sort_by(|&a, &b| d.cells()[b].total_cmp(&d.cells()[a]).then(rank(a).cmp(&rank(b))));
    order
}

/// Minimum total latency over all open visiting orders with a free start,
/// by a subset dynamic program: extending a partial path of `s` points by an
/// edge `e` adds `(n - s) |e|`.
pub fn trp_exact(ps: &PointSet) -> Result<TrpResult> {
    let n = ps.len();
    if n > TRP_EXACT_MAX {
        return Err(Error::Capacity {
            what: "trp_exact",
            size: n,
            limit: TRP_EXACT_MAX,
        });
    }
    let pts = ps.points();
    let order = if n <= 1 { (0..n).collect() } else { latency_dp(pts) };
    Ok(TrpResult {
        latency: order_latency(pts, &order),
        route: Route::open(order),
        cell_order: Vec::new(),
        per_cell_last_latency: Vec::new(),
    })
}

fn latency_dp(pts: &[Point]) -> Vec<usize> {
    let n = pts.len();
    let full = 1usize << n;
    let mut cost = alloc::vec![f64::INFINITY; full * n];
    let mut parent = alloc::vec![u8::MAX; full * n];
    for j in 0..n {
        cost[(1 << j) * n + j] = 0.0;
    }
    for mask in 1..full {
        let weight = (n - mask.count_ones() as usize) as f64;
        for last in 0..n {
            let here = cost[mask * n + last];
            if !here.is_finite() {
                continue;
            }
            for next in 0..n {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let m2 = mask | (1 << next);
                let c = here + weight * pts[last].dist(pts[next]);
                if c < cost[m2 * n + next] {
                    cost[m2 * n + next] = c;
                    parent[m2 * n + next] = last as u8;
                }
            }
        }
    }
    let all = full - 1;
    let mut last = (0..n)
        .min_by(|&a, &b| cost[all * n + a].total_cmp(&cost[all * n + b]))
        .expect("n >= 2");
    let mut mask = all;
    let mut rev = Vec::with_capacity(n);
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

/// A piece of a route confined to one cell: how many points it serves and
/// the density of its cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct WeightedSubpath {
    pub n_visited: usize,
    pub density: f64,
}

impl WeightedSubpath {
    pub fn new(n_visited: usize, density: f64) -> Result<Self> {
        if n_visited == 0 {
            return Err(structural!("a subpath visits at least one point"));
        }
        if !(density > 0.0 && density.is_finite()) {
            return Err(structural!("subpath density must be positive, got {density}"));
        }
        Ok(WeightedSubpath { n_visited, density })
    }
}

/// Orders subpaths by decreasing density (stable on ties). This order
/// minimizes [`subpath_objective`]; swapping adjacent `a, b` changes the
/// objective by `n_a n_b (1/sqrt(f_b) - 1/sqrt(f_a))`.
pub fn optimal_subpath_order(subpaths: &[WeightedSubpath]) -> Result<Vec<usize>> {
    if subpaths.is_empty() {
        return Err(usage!("no subpaths to order"));
    }
    let mut order: Vec<usize> = (0..subpaths.len()).collect();
    order.sort_by(|&a, &b| subpaths[b].density.total_cmp(&subpaths[a].density));
    Ok(order)
}

/// `sum_i n_{s(i)} / sqrt(f_{s(i)}) * sum_{j > i} n_{s(j)}` for the order `perm`.
pub fn subpath_objective(subpaths: &[WeightedSubpath], perm: &[usize]) -> Result<f64> {
    let route = Route::open(perm.to_vec());
    if !route.is_permutation_of(subpaths.len()) {
        return Err(structural!(
            "{perm:?} is not a permutation of {} subpaths",
            subpaths.len()
        ));
    }
    let mut tail: usize = subpaths.iter().map(|s| s.n_visited).sum();
    let mut total = 0.0;
    for &i in perm {
        let s = subpaths[i];
        tail -= s.n_visited;
        total += s.n_visited as f64 / libm::sqrt(s.density) * tail as f64;
    }
    Ok(total)
}

/// `latency / (n sqrt(n) g_integral(d))` for the a priori scheme's route.
pub fn trp_factor_check(ps: &PointSet, d: &GridDensity) -> Result<f64> {
    let g = g_integral(d);
    if g <= 0.0 {
        return Err(usage!("density has a zero g-integral"));
    }
    if ps.is_empty() {
        return Err(usage!("factor check on an empty point set"));
    }
    let r = trp_apriori_scheme(ps, d)?;
    let n = ps.len() as f64;
    Ok(r.latency / (n * libm::sqrt(n) * g))
}
