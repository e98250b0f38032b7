#![allow(dead_code)]

use ktrp_core::seed::SampleRng;
use ktrp_core::{Point, PointSet, RandomSeed};
use rand::Rng;

pub fn rng(stream: u64) -> SampleRng {
    RandomSeed::new(0x5eed_cafe, stream).rng()
}

pub fn uniform_points(n: usize, rng: &mut SampleRng) -> PointSet {
    PointSet::unit((0..n).map(|_| Point::new(rng.gen(), rng.gen())).collect()).unwrap()
}

pub fn dist(a: Point, b: Point) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

pub fn path_len(pts: &[Point], order: &[usize]) -> f64 {
    order.windows(2).map(|w| dist(pts[w[0]], pts[w[1]])).sum()
}

pub fn tour_len(pts: &[Point], order: &[usize]) -> f64 {
    if order.len() < 2 {
        return 0.0;
    }
    path_len(pts, order) + dist(pts[order[order.len() - 1]], pts[order[0]])
}

/// Sum of arrival times, accumulated point by point.
pub fn latency_sum(pts: &[Point], order: &[usize]) -> f64 {
    let mut clock = 0.0;
    let mut total = 0.0;
    for w in order.windows(2) {
        clock += dist(pts[w[0]], pts[w[1]]);
        total += clock;
    }
    total
}

/// Every permutation of `items`, in lexicographic order of positions.
pub fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
    if items.len() <= 1 {
        return vec![items.to_vec()];
    }
    let mut out = Vec::new();
    for i in 0..items.len() {
        let mut rest = items.to_vec();
        let head = rest.remove(i);
        for mut tail in permutations(&rest) {
            tail.insert(0, head);
            out.push(tail);
        }
    }
    out
}

pub fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    (0u32..1 << n)
        .filter(|m| m.count_ones() as usize == k)
        .map(|m| (0..n).filter(|&i| m >> i & 1 == 1).collect())
        .collect()
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub fn std_err(xs: &[f64]) -> f64 {
    let m = mean(xs);
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
    (var / xs.len() as f64).sqrt()
}
