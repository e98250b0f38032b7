//! Fairness of k-TSP schemes.
//!
//! Efficient k-TSP schemes serve the densest zone, so a point's chance of
//! being served depends heavily on where it lies. This module measures that
//! ([`geographic_service_map`]), estimates the price of serving several
//! populations in fixed proportions on every path
//! ([`deterministic_fairness_ratio`]), and builds the randomized alternative:
//! a mixture over cells chosen by a small LP ([`fairness_lp`]) from which
//! [`fair_ktsp_sample`] draws one path at a time.
//!
//! For reference, the deterministic lower bound on fair path length carries
//! the constant `c = 1 / (e sqrt(pi))`; nothing here depends on its value.

use alloc::vec::Vec;

use rand::Rng;

use crate::density::{cell_indices, cell_members, sample_with, GridDensity};
use crate::error::{structural, usage, Error, Result};
use crate::geom::{CellGrid, Point, PointSet, Square};
use crate::ktsp::{grid_scheme_on, ktsp_grid_scheme, ktsp_nonuniform_scheme, KtspResult};
use crate::seed::{RandomSeed, SampleRng};

/// Tolerance on LP constraints and on `sum_i p_i = 1`.
pub const LP_TOL: f64 = 1e-9;

/// Upper limit on the number of candidate vertices [`fairness_lp`] will try.
pub const LP_VERTEX_BUDGET: u128 = 200_000_000;

/// `P` population layers over a common grid; their cell-wise sum is the
/// density points are drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct PopulationGridDensity {
    layers: Vec<Vec<f64>>,
    total: GridDensity,
}

impl PopulationGridDensity {
    /// Layers use the same scale as [`GridDensity`] cells, so all layers
    /// together must sum to `m^2`.
    pub fn new(m: usize, layers: Vec<Vec<f64>>, square: Square) -> Result<Self> {
        if layers.is_empty() {
            return Err(structural!("at least one population layer is required"));
        }
        let cells = m * m;
        let mut total = alloc::vec![0.0; cells];
        for (i, layer) in layers.iter().enumerate() {
            if layer.len() != cells {
                return Err(structural!("layer {i} has {} cells, expected {cells}", layer.len()));
            }
            for (t, &v) in total.iter_mut().zip(layer) {
                if !(v >= 0.0 && v.is_finite()) {
                    return Err(structural!("layer {i} has an invalid value {v}"));
                }
                *t += v;
            }
        }
        let total = GridDensity::new(m, total, square)?;
        Ok(PopulationGridDensity { layers, total })
    }

    pub fn m(&self) -> usize {
        self.total.m()
    }

    pub fn populations(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Vec<f64>] {
        &self.layers
    }

    pub fn total(&self) -> &GridDensity {
        &self.total
    }

    /// Share of cell `j`'s density belonging to population `i`, `f_ij / f_j`.
    pub fn share(&self, i: usize, j: usize) -> f64 {
        let f = self.total.cells()[j];
        if f > 0.0 {
            self.layers[i][j] / f
        } else {
            0.0
        }
    }

    /// Draws `n` points from the total density and labels each with a
    /// population in proportion to the layers of its cell.
    pub fn sample(&self, n: usize, seed: RandomSeed) -> LabeledPoints {
        let mut rng = seed.rng();
        let grid = self.total.grid();
        let pts = sample_with(&self.total, n, &mut rng);
        let cells = cell_indices(&pts, &grid).expect("sampled points lie in the square");
        let population = cells
            .iter()
            .map(|&j| {
                let mut u = rng.gen::<f64>() * self.total.cells()[j];
                let mut label = 0;
                for (i, layer) in self.layers.iter().enumerate() {
                    if layer[j] > 0.0 {
                        label = i;
                        if u < layer[j] {
                            break;
                        }
                        u -= layer[j];
                    }
                }
                label
            })
            .collect();
        LabeledPoints {
            points: PointSet::new(pts, self.total.square()).expect("sampled points lie in the square"),
            population,
        }
    }
}

/// Points tagged with the population they belong to.
#[derive(Clone, Debug, PartialEq)]
pub struct LabeledPoints {
    pub points: PointSet,
    pub population: Vec<usize>,
}

impl LabeledPoints {
    pub fn new(points: PointSet, population: Vec<usize>) -> Result<Self> {
        if points.len() != population.len() {
            return Err(structural!("{} points but {} labels", points.len(), population.len()));
        }
        Ok(LabeledPoints { points, population })
    }
}

/// Probability of selecting each cell, from [`fairness_lp`].
#[derive(Clone, Debug, PartialEq)]
pub struct FairnessMix {
    pub q: Vec<f64>,
    /// Cells with `q_j > 0`, ascending.
    pub support: Vec<usize>,
    pub objective: f64,
    pub epsilon: f64,
}

/// Expected length coefficient of a path drawn in a cell of density `f`.
fn cell_cost(f: f64, k: usize) -> f64 {
    libm::pow(f, -0.5 * (1.0 + 1.0 / (k as f64 - 1.0)))
}

/// Minimizes `sum_j q_j f_j^{-(1/2)(1 + 1/(k-1))}` over the simplex subject
/// to `p_i - epsilon <= sum_j q_j f_ij / f_j <= p_i + epsilon` for every
/// population, by enumerating the vertices of the feasible polytope over
/// cells with `f_j > 0`.
///
/// A vertex has at most `P + 1` positive entries, and at most `P` when
/// `epsilon = 0`. Ties keep the first vertex found, which is one of smallest
/// support.
pub fn fairness_lp(pop: &PopulationGridDensity, k: usize, p: &[f64], epsilon: f64) -> Result<FairnessMix> {
    if k < 2 {
        return Err(usage!("fairness LP needs k >= 2, got {k}"));
    }
    let np = pop.populations();
    if p.len() != np {
        return Err(structural!("{} target proportions for {np} populations", p.len()));
    }
    if p.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
        return Err(structural!("target proportions must be nonnegative, got {p:?}"));
    }
    if (p.iter().sum::<f64>() - 1.0).abs() > LP_TOL {
        return Err(structural!(
            "target proportions sum to {}, expected 1",
            p.iter().sum::<f64>()
        ));
    }
    if !(epsilon >= 0.0 && epsilon.is_finite()) {
        return Err(structural!(
            "epsilon must be a finite nonnegative number, got {epsilon}"
        ));
    }

    let lp = Lp::new(pop, k, p, epsilon);
    let budget = lp.vertex_count(np);
    if budget > LP_VERTEX_BUDGET {
        return Err(Error::Capacity {
            what: "fairness_lp vertices",
            size: budget.min(usize::MAX as u128) as usize,
            limit: LP_VERTEX_BUDGET as usize,
        });
    }
    let Some((cols, values, objective)) = lp.solve(np) else {
        // Add populations one at a time to name the first one that breaks.
        let population = (1..=np).find(|&t| lp.solve(t).is_none()).unwrap_or(np) - 1;
        return Err(Error::Infeasible { population });
    };

    let mut q = alloc::vec![0.0; pop.m() * pop.m()];
    for (&c, &v) in cols.iter().zip(&values) {
        q[lp.cells[c]] = v.max(0.0);
    }
    let support = (0..q.len()).filter(|&j| q[j] > 0.0).collect();
    Ok(FairnessMix {
        q,
        support,
        objective,
        epsilon,
    })
}

struct Lp {
    /// Grid index of each LP column.
    cells: Vec<usize>,
    cost: Vec<f64>,
    /// `shares[i][c] = f_ic / f_c`.
    shares: Vec<Vec<f64>>,
    lo: Vec<f64>,
    hi: Vec<f64>,
    equality: bool,
}

impl Lp {
    fn new(pop: &PopulationGridDensity, k: usize, p: &[f64], epsilon: f64) -> Self {
        let f = pop.total().cells();
        let cells: Vec<usize> = (0..f.len()).filter(|&j| f[j] > 0.0).collect();
        Lp {
            cost: cells.iter().map(|&j| cell_cost(f[j], k)).collect(),
            shares: (0..pop.populations())
                .map(|i| cells.iter().map(|&j| pop.share(i, j)).collect())
                .collect(),
            lo: p.iter().map(|&v| v - epsilon).collect(),
            hi: p.iter().map(|&v| v + epsilon).collect(),
            equality: epsilon == 0.0,
            cells,
        }
    }

    fn vertex_count(&self, np: usize) -> u128 {
        let n = self.cells.len() as u128;
        let mut total = 0u128;
        for s in 1..=(np + 1).min(self.cells.len()) {
            let rows = if self.equality {
                1
            } else {
                binomial(np as u128, s as u128 - 1) << (s - 1)
            };
            total = total.saturating_add(binomial(n, s as u128).saturating_mul(rows));
        }
        total
    }

    /// Best vertex using only the first `np` population constraints.
    fn solve(&self, np: usize) -> Option<(Vec<usize>, Vec<f64>, f64)> {
        let n = self.cells.len();
        let mut best: Option<(Vec<usize>, Vec<f64>, f64)> = None;
        for s in 1..=(np + 1).min(n) {
            let mut cols: Vec<usize> = (0..s).collect();
            loop {
                self.try_support(np, &cols, &mut best);
                if !next_combination(&mut cols, n) {
                    break;
                }
            }
        }
        best
    }

    fn try_support(&self, np: usize, cols: &[usize], best: &mut Option<(Vec<usize>, Vec<f64>, f64)>) {
        let s = cols.len();
        if self.equality {
            let mut rows: Vec<(usize, f64)> = (0..np).map(|i| (i, self.lo[i])).collect();
            self.try_rows(np, cols, &mut rows, best);
            return;
        }
        // Pick s - 1 populations and, for each, which bound is tight.
        if s - 1 > np {
            return;
        }
        let mut pick: Vec<usize> = (0..s - 1).collect();
        loop {
            for sides in 0u32..(1 << (s - 1)) {
                let mut rows: Vec<(usize, f64)> = pick
                    .iter()
                    .enumerate()
                    .map(|(t, &i)| (i, if sides >> t & 1 == 0 { self.lo[i] } else { self.hi[i] }))
                    .collect();
                self.try_rows(np, cols, &mut rows, best);
            }
            if !next_combination(&mut pick, np) {
                break;
            }
        }
    }

    fn try_rows(
        &self,
        np: usize,
        cols: &[usize],
        rows: &mut [(usize, f64)],
        best: &mut Option<(Vec<usize>, Vec<f64>, f64)>,
    ) {
        let s = cols.len();
        let mut a: Vec<Vec<f64>> = Vec::with_capacity(rows.len() + 1);
        a.push(cols.iter().map(|_| 1.0).chain([1.0]).collect());
        for &(i, b) in rows.iter() {
            a.push(cols.iter().map(|&c| self.shares[i][c]).chain([b]).collect());
        }
        let Some(x) = solve_square(&mut a, s) else {
            return;
        };
        if x.iter().any(|&v| v < -LP_TOL) {
            return;
        }
        for i in 0..np {
            let lhs: f64 = cols.iter().zip(&x).map(|(&c, &v)| self.shares[i][c] * v).sum();
            if lhs < self.lo[i] - LP_TOL || lhs > self.hi[i] + LP_TOL {
                return;
            }
        }
        let objective: f64 = cols.iter().zip(&x).map(|(&c, &v)| self.cost[c] * v.max(0.0)).sum();
        if best
            .as_ref()
            .is_none_or(|b| objective < b.2 - 1e-12 * b.2.abs().max(1.0))
        {
            *best = Some((cols.to_vec(), x, objective));
        }
    }
}

/// Solves the (possibly overdetermined) augmented system `a` in `s` unknowns
/// by Gaussian elimination with partial pivoting. Returns `None` unless the
/// rank is `s` and the system is consistent.
fn solve_square(a: &mut [Vec<f64>], s: usize) -> Option<Vec<f64>> {
    let r = a.len();
    for col in 0..s {
        let pivot = (col..r).max_by(|&x, &y| a[x][col].abs().total_cmp(&a[y][col].abs()).then(y.cmp(&x)))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        for row in col + 1..r {
            let factor = a[row][col] / a[col][col];
            if factor != 0.0 {
                for c in col..=s {
                    a[row][c] -= factor * a[col][c];
                }
            }
        }
    }
    if a[s..].iter().any(|row| row[s].abs() > LP_TOL) {
        return None;
    }
    let mut x = alloc::vec![0.0; s];
    for col in (0..s).rev() {
        let tail: f64 = (col + 1..s).map(|c| a[col][c] * x[c]).sum();
        x[col] = (a[col][s] - tail) / a[col][col];
    }
    Some(x)
}

/// Advances `idx` to the next ascending `idx.len()`-subset of `0..n`.
fn next_combination(idx: &mut [usize], n: usize) -> bool {
    let s = idx.len();
    for t in (0..s).rev() {
        if idx[t] < n - s + t {
            idx[t] += 1;
            for u in t + 1..s {
                idx[u] = idx[u - 1] + 1;
            }
            return true;
        }
    }
    false
}

fn binomial(n: u128, k: u128) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc.saturating_mul(n - i) / (i + 1))
}

/// One path drawn from a [`FairnessMix`].
#[derive(Clone, Debug, PartialEq)]
pub struct FairSample {
    /// `region` is the drawn cell; `fallback` marks neighbour augmentation.
    pub path: KtspResult,
    /// Served points per population.
    pub served: Vec<usize>,
}

/// Draws a cell `j ~ q` and runs the grid k-TSP scheme on the points of that
/// cell. If the cell holds fewer than `k` points, whole neighbouring cells
/// are added in order of center distance (ties by index) until it does.
pub fn fair_ktsp_sample(
    pop: &PopulationGridDensity,
    mix: &FairnessMix,
    pts: &LabeledPoints,
    k: usize,
    seed: RandomSeed,
) -> Result<FairSample> {
    let n = pts.points.len();
    if k < 2 || k > n {
        return Err(usage!("need 2 <= k <= {n}, got k = {k}"));
    }
    let grid = pop.total().grid();
    if pts.points.square() != grid.square {
        return Err(structural!(
            "points live in {:?}, populations in {:?}",
            pts.points.square(),
            grid.square
        ));
    }
    if mix.q.len() != grid.cell_count() {
        return Err(structural!(
            "mix has {} cells, grid has {}",
            mix.q.len(),
            grid.cell_count()
        ));
    }
    if let Some(&bad) = pts.population.iter().find(|&&i| i >= pop.populations()) {
        return Err(structural!("population label {bad} out of range"));
    }

    let mut rng = seed.rng();
    let cell = draw_cell(&mix.q, &mut rng)?;
    let members = cell_members(pts.points.points(), &grid)?;
    let mut chosen = members[cell].clone();
    let mut cells = alloc::vec![cell];
    if chosen.len() < k {
        let center = grid.cell_center(cell);
        let mut others: Vec<usize> = (0..grid.cell_count()).filter(|&c| c != cell).collect();
        others.sort_by(|&a, &b| {
            grid.cell_center(a)
                .dist(center)
                .total_cmp(&grid.cell_center(b).dist(center))
                .then(a.cmp(&b))
        });
        for c in others {
            if chosen.len() >= k {
                break;
            }
            chosen.extend_from_slice(&members[c]);
            cells.push(c);
        }
    }
    let fallback = cells.len() > 1;
    let square = if fallback {
        covering_square(&grid, &cells)
    } else {
        grid.cell_square(cell)
    };

    let local: Vec<Point> = chosen.iter().map(|&i| pts.points.points()[i]).collect();
    let mut path = grid_scheme_on(&local, square, k).into_result(|j| chosen[j], Some(cell));
    path.fallback = fallback;
    let mut served = alloc::vec![0; pop.populations()];
    for &i in &path.route.order {
        served[pts.population[i]] += 1;
    }
    Ok(FairSample { path, served })
}

fn draw_cell(q: &[f64], rng: &mut SampleRng) -> Result<usize> {
    let total: f64 = q.iter().sum();
    if q.iter().any(|&v| !(v >= 0.0)) || (total - 1.0).abs() > 1e-6 {
        return Err(structural!("cell probabilities must be a distribution"));
    }
    let last = q.iter().rposition(|&v| v > 0.0).expect("positive total");
    let u = rng.gen::<f64>() * total;
    let mut acc = 0.0;
    for (j, &v) in q.iter().enumerate() {
        acc += v;
        if u < acc {
            return Ok(j);
        }
    }
    Ok(last)
}

fn covering_square(grid: &CellGrid, cells: &[usize]) -> Square {
    let corners: Vec<Point> = cells
        .iter()
        .flat_map(|&c| {
            let sq = grid.cell_square(c);
            [sq.origin, Point::new(sq.origin.x + sq.side, sq.origin.y + sq.side)]
        })
        .collect();
    Square::bounding(&corners).expect("at least one cell")
}

/// A k-TSP scheme seen only through the set of points it serves.
pub trait KtspScheme {
    /// Indices of exactly `k` served points.
    fn serve(&self, ps: &PointSet, k: usize, rng: &mut SampleRng) -> Result<Vec<usize>>;
}

/// [`ktsp_grid_scheme`] on the whole square.
#[derive(Clone, Copy, Debug, Default)]
pub struct GridScheme;

impl KtspScheme for GridScheme {
    fn serve(&self, ps: &PointSet, k: usize, _: &mut SampleRng) -> Result<Vec<usize>> {
        Ok(ktsp_grid_scheme(ps, k)?.route.order)
    }
}

/// [`ktsp_nonuniform_scheme`] for a fixed density.
#[derive(Clone, Debug)]
pub struct NonuniformScheme(pub GridDensity);

impl KtspScheme for NonuniformScheme {
    fn serve(&self, ps: &PointSet, k: usize, _: &mut SampleRng) -> Result<Vec<usize>> {
        Ok(ktsp_nonuniform_scheme(ps, &self.0, k)?.route.order)
    }
}

/// Serves a uniformly random `k`-subset, ignoring geometry.
#[derive(Clone, Copy, Debug, Default)]
pub struct RandomSubset;

impl KtspScheme for RandomSubset {
    fn serve(&self, ps: &PointSet, k: usize, rng: &mut SampleRng) -> Result<Vec<usize>> {
        if k > ps.len() {
            return Err(usage!("k = {k} exceeds the {} available points", ps.len()));
        }
        Ok(rand::seq::index::sample(rng, ps.len(), k).into_vec())
    }
}

/// Normal quantile used for the reported confidence half-widths.
pub const SERVICE_Z: f64 = 1.96;

/// Monte Carlo estimate of `P[served | cell] / (k / n)` for every cell.
#[derive(Clone, Debug, PartialEq)]
pub struct ServiceMap {
    /// `None` for cells that never received a point.
    pub normalized: Vec<Option<f64>>,
    /// 95% normal-approximation half-widths on the same scale.
    pub half_width: Vec<Option<f64>>,
    /// Points that fell in each cell, over all trials.
    pub observed: Vec<u64>,
    pub served: Vec<u64>,
    /// Smallest estimate over observed cells: the empirical fairness level.
    pub min_normalized: f64,
}

/// Runs `scheme` on `trials` independent samples of `n` points from `d` and
/// tallies, per density cell, how often a point there was served.
pub fn geographic_service_map<S: KtspScheme + ?Sized>(
    scheme: &S,
    d: &GridDensity,
    k: usize,
    n: usize,
    trials: usize,
    seed: RandomSeed,
) -> Result<ServiceMap> {
    if trials == 0 {
        return Err(usage!("service map needs at least one trial"));
    }
    let grid = d.grid();
    let cells = grid.cell_count();
    let mut observed = alloc::vec![0u64; cells];
    let mut served = alloc::vec![0u64; cells];
    for t in 0..trials {
        let mut rng = seed.substream(t as u64).rng();
        let ps = PointSet::new(sample_with(d, n, &mut rng), d.square())?;
        let idx = cell_indices(ps.points(), &grid)?;
        for &c in &idx {
            observed[c] += 1;
        }
        for i in scheme.serve(&ps, k, &mut rng)? {
            served[idx[i]] += 1;
        }
    }
    let rate = k as f64 / n as f64;
    let mut normalized = Vec::with_capacity(cells);
    let mut half_width = Vec::with_capacity(cells);
    for c in 0..cells {
        if observed[c] == 0 {
            normalized.push(None);
            half_width.push(None);
        } else {
            let p = served[c] as f64 / observed[c] as f64;
            normalized.push(Some(p / rate));
            half_width.push(Some(SERVICE_Z * libm::sqrt(p * (1.0 - p) / observed[c] as f64) / rate));
        }
    }
    let min_normalized = normalized.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    Ok(ServiceMap {
        normalized,
        half_width,
        observed,
        served,
        min_normalized,
    })
}

/// `sqrt(max_j f_j / max_j min_i f_ij)`: how much longer a path must be to
/// serve all populations equally on every path. Infinite when no cell hosts
/// every population.
pub fn deterministic_fairness_ratio(pop: &PopulationGridDensity) -> f64 {
    let f_max = pop.total().max_cell().1;
    let shared = (0..pop.m() * pop.m())
        .map(|j| pop.layers.iter().map(|l| l[j]).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max);
    if shared > 0.0 {
        libm::sqrt(f_max / shared)
    } else {
        f64::INFINITY
    }
}
