//! Acceptance gate: one line per criterion, nonzero exit if any fails.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use ktrp_core::density::sample_points;
use ktrp_core::fairness::{fairness_lp, PopulationGridDensity};
use ktrp_core::ktsp::ktsp_exact;
use ktrp_core::logistics::{fleet_size_trp, sdd_dispatch_trp, sdd_dispatch_tsp, trp_fleet_cost};
use ktrp_core::trp::{optimal_subpath_order, subpath_objective, trp_exact, WeightedSubpath};
use ktrp_core::tsp::{strip_tour, tsp_exact};
use ktrp_core::{g_integral, GridDensity, Point, PointSet, RandomSeed, Square};
use ktrp_lab::experiment::{run_experiment, ExperimentConfig, Summary};
use rand::Rng;

type Outcome = (bool, String);

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn rng(stream: u64) -> ktrp_core::seed::SampleRng {
    RandomSeed::new(0xacce_97ed, stream).rng()
}

fn uniform_points(n: usize, rng: &mut ktrp_core::seed::SampleRng) -> PointSet {
    PointSet::unit((0..n).map(|_| Point::new(rng.r#gen(), rng.r#gen())).collect()).unwrap()
}

fn permutations(items: &[usize]) -> Vec<Vec<usize>> {
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

fn d(a: Point, b: Point) -> f64 {
    ((a.x - b.x).powi(2) + (a.y - b.y).powi(2)).sqrt()
}

fn path_len(p: &[Point], o: &[usize]) -> f64 {
    o.windows(2).map(|w| d(p[w[0]], p[w[1]])).sum()
}

fn brute_tsp(p: &[Point]) -> f64 {
    if p.len() < 2 {
        return 0.0;
    }
    let rest: Vec<usize> = (1..p.len()).collect();
    permutations(&rest)
        .into_iter()
        .map(|t| {
            let last = *t.last().unwrap();
            let o: Vec<usize> = std::iter::once(0).chain(t).collect();
            path_len(p, &o) + d(p[last], p[0])
        })
        .fold(f64::INFINITY, f64::min)
}

fn brute_ktsp(p: &[Point], k: usize) -> f64 {
    (0u32..1 << p.len())
        .filter(|m| m.count_ones() as usize == k)
        .flat_map(|m| permutations(&(0..p.len()).filter(|&i| m >> i & 1 == 1).collect::<Vec<_>>()))
        .map(|o| path_len(p, &o))
        .fold(f64::INFINITY, f64::min)
}

fn brute_trp(p: &[Point]) -> f64 {
    permutations(&(0..p.len()).collect::<Vec<_>>())
        .into_iter()
        .map(|o| {
            let mut clock = 0.0;
            o.windows(2)
                .map(|w| {
                    clock += d(p[w[0]], p[w[1]]);
                    clock
                })
                .sum::<f64>()
        })
        .fold(f64::INFINITY, f64::min)
}

fn experiment(file: &str, workers: usize, out: &Path) -> Summary {
    let cfg = ExperimentConfig::load(&configs().join(file)).unwrap();
    run_experiment(&cfg, workers, out).unwrap()
}

fn checks(s: &Summary, prefix: &str) -> Outcome {
    let picked: Vec<_> = s.checks.iter().filter(|c| c.name.starts_with(prefix)).collect();
    let ok = !picked.is_empty() && picked.iter().all(|c| c.pass);
    let detail = picked
        .iter()
        .map(|c| format!("{} = {:.4} in [{}, {}]", c.name, c.observed, c.accept[0], c.accept[1]))
        .collect::<Vec<_>>()
        .join("; ");
    (ok, detail)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = rng(1);
    let mut mismatches = 0;
    for _ in 0..200 {
        let ps = uniform_points(rng.gen_range(1..=8), &mut rng);
        mismatches += usize::from((tsp_exact(&ps).unwrap().length - brute_tsp(ps.points())).abs() > 1e-9);
        let ps = uniform_points(rng.gen_range(2..=8), &mut rng);
        let k = rng.gen_range(2..=ps.len());
        mismatches += usize::from((ktsp_exact(&ps, k).unwrap().length - brute_ktsp(ps.points(), k)).abs() > 1e-9);
        let ps = uniform_points(rng.gen_range(1..=8), &mut rng);
        mismatches += usize::from((trp_exact(&ps).unwrap().latency - brute_trp(ps.points())).abs() > 1e-9);
    }
    (
        mismatches == 0,
        format!("{mismatches} mismatches over 3 x 200 instances"),
    )
}

fn strip_bound() -> Outcome {
    let mut rng = rng(2);
    let d = GridDensity::uniform(1, Square::UNIT);
    let mut violations = 0;
    let mut worst: f64 = 0.0;
    for t in 0..1000u64 {
        let n = match t {
            0 => 1,
            1 => 10_000,
            _ => rng.gen_range(1..=10_000),
        };
        let ps = sample_points(&d, n, RandomSeed::new(7, t));
        let len = strip_tour(&ps).unwrap().length;
        let bound = 2.0 * (n as f64).sqrt() + 4.0;
        violations += usize::from(len > bound);
        worst = worst.max(len / bound);
    }
    (
        violations == 0,
        format!("{violations} violations, worst length/bound = {worst:.4}"),
    )
}

fn ordering_lemma() -> Outcome {
    let mut rng = rng(3);
    let mut failures = 0;
    for _ in 0..500 {
        let len = rng.gen_range(1..=7);
        let subs: Vec<WeightedSubpath> = (0..len)
            .map(|_| {
                WeightedSubpath::new(rng.gen_range(1..=30), [0.25, 1.0, 2.0, 4.0, 9.0][rng.gen_range(0..5)]).unwrap()
            })
            .collect();
        let best = permutations(&(0..len).collect::<Vec<_>>())
            .iter()
            .map(|p| subpath_objective(&subs, p).unwrap())
            .fold(f64::INFINITY, f64::min);
        let got = subpath_objective(&subs, &optimal_subpath_order(&subs).unwrap()).unwrap();
        failures += usize::from(got > best + 1e-9 * best.max(1.0));
    }
    (failures == 0, format!("{failures} failures over 500 lists"))
}

fn g_values() -> Outcome {
    let uniform = g_integral(&GridDensity::uniform(4, Square::UNIT));
    let two = g_integral(&GridDensity::new(2, vec![2.0, 2.0, 0.0, 0.0], Square::UNIT).unwrap());
    let ok = uniform == 0.5 && (two - 2f64.sqrt() / 4.0).abs() <= 1e-12;
    (ok, format!("uniform = {uniform}, (2,2,0,0) = {two:.15}"))
}

fn fairness_lp_checks(audit: &Summary) -> Outcome {
    let seg = PopulationGridDensity::new(
        2,
        vec![vec![2.0, 0.0, 0.0, 0.0], vec![0.0, 2.0, 0.0, 0.0]],
        Square::UNIT,
    )
    .unwrap();
    let exact = fairness_lp(&seg, 3, &[0.5, 0.5], 0.0).unwrap().q == [0.5, 0.5, 0.0, 0.0];

    let mut rng = rng(4);
    let (mut support_bad, mut monotone_bad, mut instances) = (0, 0, 0);
    while instances < 200 {
        let np = rng.gen_range(2..=3);
        let raw: Vec<Vec<f64>> = (0..np)
            .map(|_| {
                (0..9)
                    .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.r#gen::<f64>() })
                    .collect()
            })
            .collect();
        let total: f64 = raw.iter().flatten().sum();
        if total == 0.0 {
            continue;
        }
        let layers = raw
            .iter()
            .map(|l| l.iter().map(|v| v * 9.0 / total).collect())
            .collect();
        let pop = PopulationGridDensity::new(3, layers, Square::UNIT).unwrap();
        // A random mixture of cells gives feasible targets.
        let w: Vec<f64> = (0..9)
            .map(|j| {
                if pop.total().cells()[j] > 0.0 {
                    rng.r#gen::<f64>()
                } else {
                    0.0
                }
            })
            .collect();
        let ws: f64 = w.iter().sum();
        let p: Vec<f64> = (0..np)
            .map(|i| (0..9).map(|j| w[j] / ws * pop.share(i, j)).sum())
            .collect();
        let ps: f64 = p.iter().sum();
        let p: Vec<f64> = p.iter().map(|v| v / ps).collect();
        let k = rng.gen_range(2..=6);
        let mix = fairness_lp(&pop, k, &p, 0.0).unwrap();
        support_bad += usize::from(mix.support.len() > np);
        let mut prev = f64::INFINITY;
        for eps in [0.0, 0.05, 0.1, 0.5, 1.0] {
            let o = fairness_lp(&pop, k, &p, eps).unwrap().objective;
            monotone_bad += usize::from(o > prev + 1e-12);
            prev = o;
        }
        instances += 1;
    }
    let (served_ok, served) = checks(audit, "served");
    let ok = exact && support_bad == 0 && monotone_bad == 0 && served_ok;
    (
        ok,
        format!(
            "segregated q exact: {exact}; support > P: {support_bad}/200; non-monotone steps: {monotone_bad}; {served}"
        ),
    )
}

fn logistics() -> Outcome {
    let mut rng = rng(5);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let (lambda, a, t) = (
            rng.gen_range(0.1..50.0),
            rng.gen_range(0.0..5.0),
            rng.gen_range(1.0..24.0),
        );
        let plan = sdd_dispatch_tsp(lambda, a, t, t * rng.gen_range(0.05..1.0), rng.gen_range(1..12)).unwrap();
        let mut prev = 0.0;
        for &ti in &plan.dispatch_times {
            worst = worst.max((ti + a * (lambda * (ti - prev)).sqrt() - t).abs());
            prev = ti;
        }
    }
    let ex = sdd_dispatch_tsp(1.0, 1.0, 6.0, 6.0, 3).unwrap().dispatch_times;
    let example_ok = (ex[0] - 4.0).abs() <= 1e-6 && (ex[1] - 5.0).abs() <= 1e-6 && (ex[2] - 5.381966).abs() <= 1e-6;

    let mut fleet_bad = 0;
    for _ in 0..100 {
        let (c, w, n) = (
            rng.gen_range(0.01..20.0),
            rng.gen_range(0.01..20.0),
            rng.gen_range(1..2000),
        );
        let got = fleet_size_trp(c, w, n).unwrap().m_star_int;
        let scan = (1..=n)
            .min_by(|&x, &y| trp_fleet_cost(c, w, 0.0, n, x).total_cmp(&trp_fleet_cost(c, w, 0.0, n, y)))
            .unwrap();
        fleet_bad += usize::from(got != scan);
    }
    let trp = sdd_dispatch_trp(10.0, 1.0, 100.0, 4, 15.0).unwrap();
    let boundary_ok = trp.feasible && trp.slack.abs() <= 1e-9;
    let ok = worst <= 1e-9 && example_ok && fleet_bad == 0 && boundary_ok;
    (
        ok,
        format!(
            "max residual {worst:.2e}; t = ({:.7}, {:.7}, {:.7}); fleet mismatches {fleet_bad}/100; trp boundary feasible = {}, slack = {:.1e}",
            ex[0], ex[1], ex[2], trp.feasible, trp.slack
        ),
    )
}

fn reproducibility(files: &[&str], first: &Path, root: &Path) -> Outcome {
    let again = root.join("workers4");
    let mut differing = Vec::new();
    for f in files {
        let s = experiment(f, 4, &again);
        let a = std::fs::read(first.join(format!("{}.csv", s.name))).unwrap();
        let b = std::fs::read(again.join(format!("{}.csv", s.name))).unwrap();
        if a != b {
            differing.push(s.name.clone());
        }
    }
    (
        differing.is_empty(),
        format!(
            "{} experiments compared at workers 1 vs 4; differing: {differing:?}",
            files.len()
        ),
    )
}

fn main() -> ExitCode {
    let root = tempfile::tempdir().unwrap();
    let first = root.path().join("workers1");
    let files = [
        "ktsp-rate.json",
        "tail-dominance.json",
        "trp-rate.json",
        "trp-factor.json",
        "fairness-audit.json",
    ];
    let [ktsp, tail, trp, factor, audit] = files.map(|f| experiment(f, 1, &first));

    let trp_rate = {
        let (a, da) = checks(&trp, "trp slope");
        let (b, db) = checks(&factor, "factor");
        (a && b, format!("{da}; {db}"))
    };
    let criteria: Vec<(&str, Outcome)> = vec![
        ("k-TSP rate", checks(&ktsp, "ktsp slope")),
        ("k-TSP beats the naive rate", checks(&ktsp, "ktsp/naive k=5")),
        ("tail bound dominance", checks(&tail, "tail violations")),
        ("oracle equivalence", oracle_equivalence()),
        ("strip tour bound", strip_bound()),
        ("TRP rate", trp_rate),
        ("ordering lemma", ordering_lemma()),
        ("density dependence of g", g_values()),
        ("fairness LP", fairness_lp_checks(&audit)),
        ("max-min TRP", checks(&factor, "maxmin")),
        ("logistics", logistics()),
        ("reproducibility", reproducibility(&files, &first, root.path())),
    ];

    let mut failed = 0;
    for (name, (ok, detail)) in &criteria {
        println!("{} {name}: {detail}", if *ok { "PASS" } else { "FAIL" });
        failed += usize::from(!ok);
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
