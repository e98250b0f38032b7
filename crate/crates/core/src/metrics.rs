//! Tour length, path length and total latency of a visiting order.

use alloc::vec::Vec;

use crate::error::{usage, Result};
use crate::geom::{PointSet, Route};

/// Length of the route; a closed route includes the edge back to its start.
pub fn route_length(route: &Route, ps: &PointSet) -> Result<f64> {
    route.validate(ps.len())?;
    Ok(order_length(ps.points(), &route.order, route.closed))
}

pub(crate) fn order_length(points: &[crate::Point], order: &[usize], closed: bool) -> f64 {
    let mut total: f64 = order.windows(2).map(|w| points[w[0]].dist(points[w[1]])).sum();
    if closed && order.len() > 1 {
        total += points[order[order.len() - 1]].dist(points[order[0]]);
    }
    total
}

/// Sum of arrival latencies along an open route, computed as the weighted
/// edge sum `sum (n - i) |x_{i+1} - x_i|`.
pub fn total_latency(route: &Route, ps: &PointSet) -> Result<f64> {
    if route.closed {
        return Err(usage!("latency is only defined for open routes"));
    }
    route.validate(ps.len())?;
    Ok(order_latency(ps.points(), &route.order))
}

pub(crate) fn order_latency(points: &[crate::Point], order: &[usize]) -> f64 {
    let n = order.len();
    order
        .windows(2)
        .enumerate()
        .map(|(i, w)| (n - 1 - i) as f64 * points[w[0]].dist(points[w[1]]))
        .sum()
}

/// Latency of every visited point: `l_1 = 0`, `l_i = l_{i-1} + |x_i - x_{i-1}|`.
pub fn latencies(route: &Route, ps: &PointSet) -> Result<Vec<f64>> {
    if route.closed {
        return Err(usage!("latency is only defined for open routes"));
    }
    route.validate(ps.len())?;
    let pts = ps.points();
    let mut out = Vec::with_capacity(route.len());
    let mut acc = 0.0;
    for (i, &v) in route.order.iter().enumerate() {
        if i > 0 {
            acc += pts[route.order[i - 1]].dist(pts[v]);
        }
        out.push(acc);
    }
    Ok(out)
}

/// Latency of the last point served, the max-min fairness objective.
pub fn last_latency(route: &Route, ps: &PointSet) -> Result<f64> {
    if route.is_empty() {
        return Err(usage!("last latency of an empty route"));
    }
    if route.closed {
        return Err(usage!("latency is only defined for open routes"));
    }
    route_length(route, ps)
}
