//! Back-of-the-envelope fleet sizing and same-day-delivery (SDD) dispatch.
//!
//! Routing cost enters only through its scaling: a vehicle carrying `n`
//! orders drives `a sqrt(n)` (TSP surrogate) and imposes total customer wait
//! `w n sqrt(n)` (TRP surrogate). Loads are fluid, as in the continuous model.

use alloc::vec::Vec;

use crate::error::{structural, Result};

/// Fleet size minimizing `c m + b (N/m)^2 + w (N/m)^{3/2}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct FleetSize {
    /// Stationary point `(3w / 2c)^{2/5} N^{3/5}`; only meaningful for `b = 0`.
    pub m_star_real: f64,
    pub m_star_int: usize,
    pub cost: f64,
}

/// Cost of `m` vehicles under the wait-time objective.
pub fn trp_fleet_cost(c: f64, w: f64, b: f64, n_orders: usize, m: usize) -> f64 {
    let per = n_orders as f64 / m as f64;
    c * m as f64 + b * per * per + w * per * libm::sqrt(per)
}

/// Cost of `m` vehicles under the travel-time objective, `c m + d sqrt(N m)`.
pub fn tsp_fleet_cost(c: f64, d: f64, n_orders: usize, m: usize) -> f64 {
    c * m as f64 + d * libm::sqrt((n_orders * m) as f64)
}

fn check_fleet(c: f64, w: f64, n_orders: usize) -> Result<()> {
    if !(c > 0.0 && c.is_finite() && w > 0.0 && w.is_finite()) {
        return Err(structural!("fleet sizing needs c > 0 and w > 0, got c = {c}, w = {w}"));
    }
    if n_orders == 0 {
        return Err(structural!("fleet sizing needs at least one order"));
    }
    Ok(())
}

/// Closed-form optimum for the wait-time objective. The cost is convex in
/// `m`, so the integer optimum is the better of the two neighbours of the
/// real one, clamped to `[1, N]` (smaller fleet on ties).
pub fn fleet_size_trp(c: f64, w: f64, n_orders: usize) -> Result<FleetSize> {
    check_fleet(c, w, n_orders)?;
    let real = libm::pow(1.5 * w / c, 0.4) * libm::pow(n_orders as f64, 0.6);
    let lo = (libm::floor(real) as usize).clamp(1, n_orders);
    let hi = (libm::ceil(real) as usize).clamp(1, n_orders);
    let (cl, ch) = (
        trp_fleet_cost(c, w, 0.0, n_orders, lo),
        trp_fleet_cost(c, w, 0.0, n_orders, hi),
    );
    let (m, cost) = if ch < cl { (hi, ch) } else { (lo, cl) };
    Ok(FleetSize {
        m_star_real: real,
        m_star_int: m,
        cost,
    })
}

/// Wait-time objective with a batching term `b (N/m)^2`, `b >= 0`. With
/// `b > 0` there is no closed form, so every `m` in `[1, N]` is scanned.
pub fn fleet_size_trp_batched(c: f64, w: f64, b: f64, n_orders: usize) -> Result<FleetSize> {
    if b == 0.0 {
        return fleet_size_trp(c, w, n_orders);
    }
    check_fleet(c, w, n_orders)?;
    if !(b > 0.0 && b.is_finite()) {
        return Err(structural!("batching weight must be nonnegative, got {b}"));
    }
    let (m, cost) = (1..=n_orders)
        .map(|m| (m, trp_fleet_cost(c, w, b, n_orders, m)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    Ok(FleetSize {
        m_star_real: libm::pow(1.5 * w / c, 0.4) * libm::pow(n_orders as f64, 0.6),
        m_star_int: m,
        cost,
    })
}

/// Under the travel-time objective the cost grows with `m` for any `c >= 0`,
/// so one vehicle is optimal.
pub fn fleet_size_tsp(c: f64, d: f64, n_orders: usize) -> Result<FleetSize> {
    if !(c >= 0.0 && d > 0.0) || n_orders == 0 {
        return Err(structural!("fleet sizing needs c >= 0, d > 0 and N >= 1"));
    }
    Ok(FleetSize {
        m_star_real: 1.0,
        m_star_int: 1,
        cost: tsp_fleet_cost(c, d, n_orders, 1),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DispatchPlan {
    pub dispatch_times: Vec<f64>,
    /// Orders carried by each vehicle (fractional).
    pub loads: Vec<f64>,
    pub feasible: bool,
    /// TSP plan: `t_m - T_cutoff`. TRP plan: `T - (N/lambda + a sqrt(N/m))`.
    pub slack: f64,
    /// Vehicle (0-based) at which the plan is first known to fall short.
    pub failing_vehicle: Option<usize>,
}

impl DispatchPlan {
    /// Whole-order loads: each vehicle's load is floored and the remainder
    /// goes to the last vehicle.
    pub fn integer_loads(&self) -> Vec<u64> {
        let Some(last) = self.loads.len().checked_sub(1) else {
            return Vec::new();
        };
        let total = libm::round(self.loads.iter().sum::<f64>()) as u64;
        let mut out: Vec<u64> = self
            .loads
            .iter()
            .map(|&l| libm::floor(l + 1e-9).max(0.0) as u64)
            .collect();
        let head: u64 = out[..last].iter().sum();
        out[last] = total.saturating_sub(head);
        out
    }
}

fn check_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(structural!("{name} must be positive, got {v}"));
    }
    Ok(())
}

/// Deadline packing under the travel-time objective: each vehicle leaves as
/// soon as the orders revealed since the previous departure take it exactly
/// until `T`, i.e. `t_i + a sqrt(lambda (t_i - t_{i-1})) = T`. The plan is
/// feasible iff `t_m >= T_cutoff`.
///
/// Dispatch times follow the recursion for all `m` vehicles; loads only count
/// orders placed before the cutoff, `n_i = lambda (min(t_i, Tc) - min(t_{i-1}, Tc))`,
/// so a feasible plan carries exactly `N = lambda T_cutoff`.
pub fn sdd_dispatch_tsp(lambda: f64, a: f64, deadline: f64, cutoff: f64, m: usize) -> Result<DispatchPlan> {
    check_positive("lambda", lambda)?;
    check_positive("T", deadline)?;
    check_positive("T_cutoff", cutoff)?;
    if !(a >= 0.0 && a.is_finite()) {
        return Err(structural!("a must be nonnegative, got {a}"));
    }
    if cutoff > deadline {
        return Err(structural!("cutoff {cutoff} is after the deadline {deadline}"));
    }
    if m == 0 {
        return Err(structural!("at least one vehicle is required"));
    }
    let b = a * libm::sqrt(lambda);
    let mut times = Vec::with_capacity(m);
    let mut loads = Vec::with_capacity(m);
    let mut prev = 0.0;
    for _ in 0..m {
        // u = sqrt(t_i - t_{i-1}) is the nonnegative root of u^2 + b u = T - t_{i-1},
        // written to avoid cancellation when b is large.
        let rem = (deadline - prev).max(0.0);
        let u = 2.0 * rem / (b + libm::sqrt(b * b + 4.0 * rem));
        let t = if b == 0.0 { deadline } else { prev + u * u };
        loads.push(lambda * (t.min(cutoff) - prev.min(cutoff)));
        times.push(t);
        prev = t;
    }
    let slack = prev - cutoff;
    let feasible = slack >= 0.0;
    Ok(DispatchPlan {
        dispatch_times: times,
        loads,
        feasible,
        slack,
        failing_vehicle: if feasible { None } else { Some(m - 1) },
    })
}

/// Equal spacing under the wait-time objective: vehicle `i` leaves at
/// `i N / (m lambda)` with `N / m` orders. Feasible iff the last one is back
/// by the deadline, `N/lambda + a sqrt(N/m) <= T`.
pub fn sdd_dispatch_trp(lambda: f64, a: f64, n_orders: f64, m: usize, deadline: f64) -> Result<DispatchPlan> {
    check_positive("lambda", lambda)?;
    check_positive("N", n_orders)?;
    check_positive("T", deadline)?;
    if !(a >= 0.0 && a.is_finite()) {
        return Err(structural!("a must be nonnegative, got {a}"));
    }
    if m == 0 {
        return Err(structural!("at least one vehicle is required"));
    }
    let per = n_orders / m as f64;
    let times: Vec<f64> = (1..=m).map(|i| i as f64 * n_orders / (m as f64 * lambda)).collect();
    let slack = deadline - (n_orders / lambda + a * libm::sqrt(per));
    let feasible = slack >= -1e-12 * deadline;
    Ok(DispatchPlan {
        dispatch_times: times,
        loads: alloc::vec![per; m],
        feasible,
        slack,
        failing_vehicle: if feasible { None } else { Some(m - 1) },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_tsp_example() {
        let plan = sdd_dispatch_tsp(1.0, 1.0, 6.0, 6.0, 3).unwrap();
        let g = (libm::sqrt(5.0) - 1.0) / 2.0;
        let want = [4.0, 5.0, 5.0 + g * g];
        for (t, w) in plan.dispatch_times.iter().zip(want) {
            assert!((t - w).abs() < 1e-12);
        }
        assert!((plan.loads[2] - g * g).abs() < 1e-12);
        assert!(!plan.feasible);
        assert_eq!(plan.failing_vehicle, Some(2));

        let one = sdd_dispatch_tsp(1.0, 1.0, 6.0, 4.0, 1).unwrap();
        assert!(one.feasible && one.slack.abs() < 1e-12);
        assert_eq!(one.loads, [4.0]);
    }

    #[test]
    fn zero_travel_dispatches_at_deadline() {
        let plan = sdd_dispatch_tsp(2.0, 0.0, 5.0, 3.0, 3).unwrap();
        assert_eq!(plan.dispatch_times, [5.0, 5.0, 5.0]);
        assert_eq!(plan.loads, [6.0, 0.0, 0.0]);
        assert!(plan.feasible);
    }

    #[test]
    fn trp_boundary_and_unit_loads() {
        let plan = sdd_dispatch_trp(10.0, 1.0, 100.0, 4, 15.0).unwrap();
        assert_eq!(plan.dispatch_times, [2.5, 5.0, 7.5, 10.0]);
        assert!(plan.feasible && plan.slack.abs() < 1e-9);
        assert!(!sdd_dispatch_trp(10.0, 1.0, 100.0, 4, 14.0).unwrap().feasible);
        let unit = sdd_dispatch_trp(2.0, 1.0, 6.0, 6, 100.0).unwrap();
        assert_eq!(unit.loads, [1.0; 6]);
        assert!((unit.dispatch_times[2] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn fleet_example() {
        let f = fleet_size_trp(1.0, 1.0, 32).unwrap();
        assert!((f.m_star_real - libm::pow(1.5, 0.4) * 8.0).abs() < 1e-12);
        assert!((f.m_star_real - 9.41).abs() < 0.01);
        assert_eq!(fleet_size_tsp(0.0, 1.0, 50).unwrap().m_star_int, 1);
        assert!(fleet_size_trp(0.0, 1.0, 3).is_err());
    }

    #[test]
    fn integer_loads_put_remainder_last() {
        let plan = sdd_dispatch_trp(1.0, 0.0, 10.0, 3, 20.0).unwrap();
        assert_eq!(plan.integer_loads(), [3, 3, 4]);
    }
}
