//! TSP subroutines: the serpentine strip tour, 2-opt improvement and an
//! exact Held-Karp oracle for small instances.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{usage, Error, Result};
use crate::geom::{Point, PointSet, Route, Square};
use crate::metrics::order_length;

/// Additive slack of the strip-tour guarantee `(2 sqrt(n) + C) * side`.
pub const STRIP_SLACK: f64 = 4.0;

/// Largest instance [`tsp_exact`] accepts.
pub const TSP_EXACT_MAX: usize = 15;

/// Number of nearest neighbours scanned per city by [`two_opt`].
pub const TWO_OPT_NEIGHBORS: usize = 12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TspMethod {
    Strip,
    StripTwoOpt,
    Exact,
}

impl TspMethod {
    pub fn name(self) -> &'static str {
        match self {
            TspMethod::Strip => "strip",
            TspMethod::StripTwoOpt => "strip+2opt",
            TspMethod::Exact => "exact",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TspResult {
    pub route: Route,
    pub length: f64,
    pub method: TspMethod,
}

/// `(2 sqrt(n) + 4) * side`, the length no strip tour exceeds.
pub fn strip_bound(n: usize, side: f64) -> f64 {
    (2.0 * libm::sqrt(n as f64) + STRIP_SLACK) * side
}

/// Serpentine tour over `ceil(sqrt(n))` horizontal strips: points are
/// bucketed by strip, swept left-to-right and right-to-left on alternate
/// strips, and the sweep is closed back to its start.
pub fn strip_tour(ps: &PointSet) -> Result<TspResult> {
    if ps.is_empty() {
        return Err(usage!("strip tour of an empty point set"));
    }
    let order = strip_order(ps.points(), ps.square());
    let length = order_length(ps.points(), &order, true);
    debug_assert!(
        length <= strip_bound(ps.len(), ps.square().side) * (1.0 + 1e-12),
        "strip tour of {} points has length {length}",
        ps.len()
    );
    Ok(TspResult {
        route: Route::closed(order),
        length,
        method: TspMethod::Strip,
    })
}

fn ceil_sqrt(n: usize) -> usize {
    let mut s = libm::sqrt(n as f64) as usize;
    while s * s < n {
        s += 1;
    }
    while s > 0 && (s - 1) * (s - 1) >= n {
        s -= 1;
    }
    s
}

pub(crate) fn strip_order(points: &[Point], square: Square) -> Vec<usize> {
    let n = points.len();
    let strips = ceil_sqrt(n).max(1);
    let strip_of = |p: &Point| {
        let raw = libm::floor((p.y - square.origin.y) / square.side * strips as f64);
        if raw <= 0.0 {
            0
        } else {
            (raw as usize).min(strips - 1)
        }
    };
    let mut keyed: Vec<(usize, f64, usize)> = points
        .iter()
        .enumerate()
        .map(|(i, p)| {
            let s = strip_of(p);
            let x = if s % 2 == 0 { p.x } else { -p.x };
            (s, x, i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.cmp(&b.2)));
    keyed.into_iter().map(|(_, _, i)| i).collect()
}

/// First-improvement 2-opt over nearest-neighbour candidate lists, capped at
/// `50 n` applied exchanges. Never lengthens the tour.
pub fn two_opt(ps: &PointSet, start: &Route) -> Result<TspResult> {
    if !start.closed {
        return Err(usage!("2-opt needs a closed starting tour"));
    }
    start.validate(ps.len())?;
    if start.len() != ps.len() {
        return Err(usage!("starting tour visits {} of {} points", start.len(), ps.len()));
    }
    let mut order = start.order.clone();
    two_opt_order(ps.points(), &mut order);
    let length = order_length(ps.points(), &order, true);
    Ok(TspResult {
        route: Route::closed(order),
        length,
        method: TspMethod::StripTwoOpt,
    })
}

/// Strip tour followed by 2-opt, over the points at `order`'s indices.
pub(crate) fn local_tour(points: &[Point], square: Square) -> Vec<usize> {
    let mut order = strip_order(points, square);
    two_opt_order(points, &mut order);
    order
}

/// Convenience: [`strip_tour`] then [`two_opt`].
pub fn strip_two_opt(ps: &PointSet) -> Result<TspResult> {
    let start = strip_tour(ps)?;
    two_opt(ps, &start.route)
}

fn nearest_neighbors(points: &[Point], k: usize) -> Vec<Vec<usize>> {
    let n = points.len();
    let mut scratch: Vec<(f64, usize)> = Vec::with_capacity(n);
    (0..n)
        .map(|i| {
            scratch.clear();
            scratch.extend((0..n).filter(|&j| j != i).map(|j| (points[i].dist(points[j]), j)));
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if k < scratch.len() {
                scratch.select_nth_unstable_by(k, cmp);
                scratch.truncate(k);
            }
            scratch.sort_by(cmp);
            scratch.iter().map(|&(_, j)| j).collect()
        })
        .collect()
}

struct Tour<'a> {
    order: &'a mut [usize],
    pos: Vec<usize>,
}

impl Tour<'_> {
    fn succ(&self, c: usize) -> usize {
        let n = self.order.len();
        self.order[(self.pos[c] + 1) % n]
    }

    fn pred(&self, c: usize) -> usize {
        let n = self.order.len();
        self.order[(self.pos[c] + n - 1) % n]
    }

    /// Reverses the circular segment running forward from position `i` to
    /// position `j`, or equivalently its complement when that is shorter.
    fn reverse(&mut self, i: usize, j: usize) {
        let n = self.order.len();
        let mut len = (j + n - i) % n + 1;
        let (mut i, mut j) = (i, j);
        if 2 * len > n {
            (i, j) = ((j + 1) % n, (i + n - 1) % n);
            len = n - len;
        }
        for _ in 0..len / 2 {
            self.order.swap(i, j);
            self.pos[self.order[i]] = i;
            self.pos[self.order[j]] = j;
            i = (i + 1) % n;
            j = (j + n - 1) % n;
        }
    }
}

pub(crate) fn two_opt_order(points: &[Point], order: &mut [usize]) -> usize {
    let n = order.len();
    if n < 4 {
        return 0;
    }
    let neighbors = nearest_neighbors(points, TWO_OPT_NEIGHBORS.min(n - 1));
    let mut pos = vec![0; points.len()];
    for (i, &c) in order.iter().enumerate() {
        pos[c] = i;
    }
    let mut tour = Tour { order, pos };
    let d = |a: usize, b: usize| points[a].dist(points[b]);
    let cap = 50 * n;
    let mut moves = 0;
    loop {
        let mut improved = false;
        for a in 0..n {
            for forward in [true, false] {
                let b = if forward { tour.succ(a) } else { tour.pred(a) };
                let g1 = d(a, b);
                for &c in &neighbors[a] {
                    let g2 = d(a, c);
                    if g2 >= g1 {
                        break;
                    }
                    let e = if forward { tour.succ(c) } else { tour.pred(c) };
                    if c == b || e == a {
                        continue;
                    }
                    let removed = g1 + d(c, e);
                    let delta = g2 + d(b, e) - removed;
                    if delta < -1e-12 * removed {
                        if forward {
                            tour.reverse(tour.pos[b], tour.pos[c]);
                        } else {
                            tour.reverse(tour.pos[a], tour.pos[e]);
                        }
                        moves += 1;
                        improved = true;
                        if moves >= cap {
                            return moves;
                        }
                        break;
                    }
                }
            }
        }
        if !improved {
            return moves;
        }
    }
}

/// Optimal closed tour by the Held-Karp subset dynamic program
/// (at most [`TSP_EXACT_MAX`] points).
pub fn tsp_exact(ps: &PointSet) -> Result<TspResult> {
    let n = ps.len();
    if n == 0 {
        return Err(usage!("exact tour of an empty point set"));
    }
    if n > TSP_EXACT_MAX {
        return Err(Error::Capacity {
            what: "tsp_exact",
            size: n,
            limit: TSP_EXACT_MAX,
        });
    }
    let pts = ps.points();
    let order = if n <= 3 { (0..n).collect() } else { held_karp(pts) };
    let length = order_length(pts, &order, true);
    Ok(TspResult {
        route: Route::closed(order),
        length,
        method: TspMethod::Exact,
    })
}

fn held_karp(pts: &[Point]) -> Vec<usize> {
    // Vertex 0 is the fixed start; bit j of a mask stands for vertex j + 1.
    let n = pts.len();
    let r = n - 1;
    let full = 1usize << r;
    let mut cost = vec![f64::INFINITY; full * r];
    let mut parent = vec![u8::MAX; full * r];
    for j in 0..r {
        cost[(1 << j) * r + j] = pts[0].dist(pts[j + 1]);
    }
    for mask in 1..full {
        for last in 0..r {
            if mask & (1 << last) == 0 {
                continue;
            }
            let here = cost[mask * r + last];
            if !here.is_finite() {
                continue;
            }
            for next in 0..r {
                if mask & (1 << next) != 0 {
                    continue;
                }
                let m2 = mask | (1 << next);
                let c = here + pts[last + 1].dist(pts[next + 1]);
                if c < cost[m2 * r + next] {
                    cost[m2 * r + next] = c;
                    parent[m2 * r + next] = last as u8;
                }
            }
        }
    }
    let all = full - 1;
    let mut best = (f64::INFINITY, 0);
    for last in 0..r {
        let c = cost[all * r + last] + pts[last + 1].dist(pts[0]);
        if c < best.0 {
            best = (c, last);
        }
    }
    let mut rev = Vec::with_capacity(n);
    let (mut mask, mut last) = (all, best.1);
    loop {
        rev.push(last + 1);
        let p = parent[mask * r + last];
        mask &= !(1 << last);
        if p == u8::MAX {
            break;
        }
        last = p as usize;
    }
    rev.push(0);
    rev.reverse();
    rev
}
