//! Monte Carlo experiments: configuration, seeded parallel trials, CSV and
//! JSON reports with pass/fail checks.
//!
//! Every trial draws from its own stream, keyed by a hash of
//! `(experiment name, n, k, trial)`. Results are therefore independent of
//! the worker count and of the order in which grids are listed.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use ktrp_core::density::sample_points;
use ktrp_core::fairness::{fair_ktsp_sample, fairness_lp, FairnessMix, PopulationGridDensity};
use ktrp_core::ktsp::{ktsp_exact, ktsp_grid_scheme, ktsp_tail_bound};
use ktrp_core::metrics::last_latency;
use ktrp_core::trp::{trp_apriori_scheme, trp_factor_check};
use ktrp_core::tsp::{strip_tour, strip_two_opt};
use ktrp_core::{GridDensity, RandomSeed};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::fit::{fit_loglog_slope, RateFit};
use crate::formats::DensityJson;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Grid k-TSP scheme length vs. n, with the naive `(k-1)/n * tour` baseline.
    KtspRate,
    /// A priori TRP latency vs. n.
    TrpRate,
    /// Empirical CDF of the exact k-TSP against the tail bound.
    TailDominance,
    /// Served population fractions of the randomized fair scheme.
    FairnessAudit,
    /// TRP latency over `n sqrt(n) g`, and last latency over a tour length.
    TrpFactor,
}

impl ExperimentKind {
    fn uses_k(self) -> bool {
        matches!(self, Self::KtspRate | Self::TailDominance | Self::FairnessAudit)
    }
}

/// Acceptance thresholds; the defaults are the project's gates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    /// Allowed distance of the k-TSP slope from `-(1/2)(1 + 1/(k-1))`.
    pub slope_tolerance: f64,
    pub trp_slope: [f64; 2],
    /// Scheme mean must stay below this multiple of the naive baseline.
    pub naive_factor: f64,
    pub tail_sigmas: f64,
    pub factor_limit: f64,
    /// Share of trials that must respect `factor_limit`.
    pub factor_fraction: f64,
    pub maxmin: [f64; 2],
    pub fairness_sigmas: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            slope_tolerance: 0.10,
            trp_slope: [1.4, 1.6],
            naive_factor: 0.8,
            tail_sigmas: 3.0,
            factor_limit: 2.5,
            factor_fraction: 0.95,
            maxmin: [0.95, 1.30],
            fairness_sigmas: 3.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub kind: ExperimentKind,
    /// Sampling density. Defaults to uniform: one cell for k-TSP kinds, an
    /// 8 x 8 grid for TRP kinds (the grid the a priori scheme runs on).
    /// Fairness audits need `"layers"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub density: Option<DensityJson>,
    pub n: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub k: Vec<usize>,
    pub trials: usize,
    pub seed: u64,
    /// Tail-dominance alpha grid; by default 20 points up to 1.25 times the
    /// alpha at which the bound reaches 1.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alphas: Option<Vec<f64>>,
    /// Fairness audit target proportions `p_i`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<f64>>,
    #[serde(default)]
    pub epsilon: f64,
    #[serde(default)]
    pub thresholds: Thresholds,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let cfg: ExperimentConfig = crate::formats::read_json(path)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(!self.name.is_empty(), "experiment name is empty");
        ensure!(!self.n.is_empty(), "n grid is empty");
        ensure!(self.trials >= 1, "trials must be at least 1");
        if self.kind.uses_k() {
            ensure!(!self.k.is_empty(), "k grid is empty");
            ensure!(self.k.iter().all(|&k| k >= 2), "every k must be at least 2");
            let (kmax, nmin) = (self.k.iter().max().unwrap(), self.n.iter().min().unwrap());
            ensure!(kmax <= nmin, "k = {kmax} exceeds n = {nmin}");
        }
        if self.kind == ExperimentKind::FairnessAudit {
            ensure!(self.targets.is_some(), "fairness audit needs \"targets\"");
            ensure!(
                self.density.as_ref().is_some_and(|d| d.layers.is_some()),
                "fairness audit needs a density with \"layers\""
            );
        }
        Ok(())
    }

    /// SHA-256 of the config without its execution settings (`out`,
    /// `workers`), which never influence results.
    pub fn hash(&self) -> String {
        let mut c = self.clone();
        c.out = None;
        c.workers = None;
        let bytes = serde_json::to_vec(&c).expect("config serializes");
        hex(&Sha256::digest(&bytes))
    }

    fn density(&self) -> Result<GridDensity> {
        match &self.density {
            Some(d) => d.to_density(),
            None => {
                let m = if self.kind.uses_k() { 1 } else { 8 };
                DensityJson::uniform(m).to_density()
            }
        }
    }

    fn k_grid(&self) -> Vec<Option<usize>> {
        if self.kind.uses_k() {
            self.k.iter().map(|&k| Some(k)).collect()
        } else {
            vec![None]
        }
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Stream index of one trial: the first 8 bytes of
/// `SHA-256(name 0 n 0 k 0 trial)`, little endian.
pub fn trial_stream(name: &str, n: usize, k: Option<usize>, trial: usize) -> u64 {
    let mut h = Sha256::new();
    h.update(name.as_bytes());
    for v in [n as u64, k.map_or(u64::MAX, |k| k as u64), trial as u64] {
        h.update([0]);
        h.update(v.to_le_bytes());
    }
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("digest is 32 bytes"))
}

/// One CSV row.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialRow {
    pub experiment: String,
    pub n: usize,
    pub k: Option<usize>,
    pub trial: usize,
    pub seed: u64,
    pub value: f64,
}

struct Task {
    n: usize,
    k: Option<usize>,
    trial: usize,
}

/// Everything a trial needs that is computed once up front.
struct Prepared {
    density: GridDensity,
    fair: Option<(PopulationGridDensity, Vec<(usize, FairnessMix)>)>,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let density = cfg.density()?;
    let fair = if cfg.kind == ExperimentKind::FairnessAudit {
        let pop = cfg.density.as_ref().expect("validated").to_population()?;
        let p = cfg.targets.as_ref().expect("validated");
        let mixes = cfg
            .k
            .iter()
            .map(|&k| Ok((k, fairness_lp(&pop, k, p, cfg.epsilon)?)))
            .collect::<Result<Vec<_>>>()?;
        Some((pop, mixes))
    } else {
        None
    };
    Ok(Prepared { density, fair })
}

fn series_labels(cfg: &ExperimentConfig, prep: &Prepared) -> Vec<String> {
    match cfg.kind {
        ExperimentKind::KtspRate => vec!["ktsp".into(), "naive".into()],
        ExperimentKind::TrpRate => vec!["latency".into()],
        ExperimentKind::TailDominance => vec!["ktsp-exact".into()],
        ExperimentKind::TrpFactor => vec!["factor".into(), "maxmin".into()],
        ExperimentKind::FairnessAudit => {
            let np = prep.fair.as_ref().map_or(0, |f| f.0.populations());
            (0..np).map(|i| format!("pop{i}")).collect()
        }
    }
}

/// Values of every series for one trial, in `series_labels` order.
fn run_trial(cfg: &ExperimentConfig, prep: &Prepared, t: &Task, seed: RandomSeed) -> Result<Vec<f64>> {
    let d = &prep.density;
    Ok(match cfg.kind {
        ExperimentKind::KtspRate => {
            let k = t.k.expect("k grid");
            let ps = sample_points(d, t.n, seed);
            let scheme = ktsp_grid_scheme(&ps, k)?.length;
            let naive = (k - 1) as f64 / t.n as f64 * strip_tour(&ps)?.length;
            vec![scheme, naive]
        }
        ExperimentKind::TrpRate => {
            let ps = sample_points(d, t.n, seed);
            vec![trp_apriori_scheme(&ps, d)?.latency]
        }
        ExperimentKind::TailDominance => {
            let ps = sample_points(d, t.n, seed);
            vec![ktsp_exact(&ps, t.k.expect("k grid"))?.length]
        }
        ExperimentKind::TrpFactor => {
            let ps = sample_points(d, t.n, seed);
            let factor = trp_factor_check(&ps, d)?;
            let route = trp_apriori_scheme(&ps, d)?.route;
            let maxmin = last_latency(&route, &ps)? / strip_two_opt(&ps)?.length;
            vec![factor, maxmin]
        }
        ExperimentKind::FairnessAudit => {
            let (pop, mixes) = prep.fair.as_ref().expect("prepared");
            let k = t.k.expect("k grid");
            let mix = &mixes.iter().find(|m| m.0 == k).expect("mix per k").1;
            let pts = pop.sample(t.n, seed);
            let s = fair_ktsp_sample(pop, mix, &pts, k, seed.substream(1))?;
            s.served.iter().map(|&c| c as f64 / k as f64).collect()
        }
    })
}

/// Runs every trial on a pool of `workers` threads. Rows come back ordered
/// by `(n, k, trial)` within each series, whatever the schedule.
pub fn run_trials(cfg: &ExperimentConfig, workers: usize) -> Result<Vec<TrialRow>> {
    cfg.validate()?;
    let prep = prepare(cfg)?;
    let labels = series_labels(cfg, &prep);
    let mut tasks = Vec::new();
    for &n in &cfg.n {
        for k in cfg.k_grid() {
            for trial in 0..cfg.trials {
                tasks.push(Task { n, k, trial });
            }
        }
    }
    let pool = rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build()?;
    let values: Vec<(u64, Vec<f64>)> = pool.install(|| {
        tasks
            .par_iter()
            .map(|t| {
                let stream = trial_stream(&cfg.name, t.n, t.k, t.trial);
                let v = run_trial(cfg, &prep, t, RandomSeed::new(cfg.seed, stream))
                    .with_context(|| format!("trial {} at n = {}, k = {:?}", t.trial, t.n, t.k))?;
                Ok((stream, v))
            })
            .collect::<Result<Vec<_>>>()
    })?;
    let mut rows = Vec::with_capacity(values.len() * labels.len());
    for (s, label) in labels.iter().enumerate() {
        for (t, (stream, v)) in tasks.iter().zip(&values) {
            rows.push(TrialRow {
                experiment: format!("{}/{label}", cfg.name),
                n: t.n,
                k: t.k,
                trial: t.trial,
                seed: *stream,
                value: v[s],
            });
        }
    }
    Ok(rows)
}

pub fn write_csv<W: std::io::Write>(rows: &[TrialRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PointStat {
    pub n: usize,
    pub mean: f64,
    pub std_err: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SeriesSummary {
    pub label: String,
    pub k: Option<usize>,
    pub points: Vec<PointStat>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit: Option<RateFit>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub observed: f64,
    /// Accepted interval for `observed`.
    pub accept: [f64; 2],
    pub pass: bool,
}

impl Check {
    fn new(name: String, observed: f64, accept: [f64; 2]) -> Self {
        Check {
            pass: observed >= accept[0] && observed <= accept[1],
            name,
            observed,
            accept,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TailRow {
    pub k: usize,
    pub n: usize,
    pub alpha: f64,
    pub empirical: f64,
    pub bound: f64,
    pub std_err: f64,
    pub ok: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub name: String,
    pub kind: ExperimentKind,
    pub config_hash: String,
    pub master_seed: u64,
    pub trials: usize,
    pub series: Vec<SeriesSummary>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub tail: Vec<TailRow>,
    pub checks: Vec<Check>,
    pub pass: bool,
}

fn stats(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn ktsp_exponent(k: usize) -> f64 {
    0.5 * (1.0 + 1.0 / (k as f64 - 1.0))
}

/// Alpha at which the tail bound reaches 1 on a unit-area square.
pub fn tail_alpha_star(k: usize, n: usize) -> f64 {
    let kk = k as f64;
    let log_fact: f64 = (1..=2 * k - 2).map(|i| (i as f64).ln()).sum();
    let log_inner = (log_fact - kk * (n as f64).ln()) / (kk - 1.0);
    (log_inner.exp() / (2.0 * std::f64::consts::PI)).sqrt()
}

pub fn summarize(cfg: &ExperimentConfig, rows: &[TrialRow]) -> Result<Summary> {
    let th = &cfg.thresholds;
    let mut series = Vec::new();
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        let label = r.experiment.rsplit('/').next().unwrap_or("");
        if !labels.contains(&label) {
            labels.push(label);
        }
    }
    let values = |label: &str, n: usize, k: Option<usize>| -> Vec<f64> {
        rows.iter()
            .filter(|r| r.n == n && r.k == k && r.experiment.rsplit('/').next() == Some(label))
            .map(|r| r.value)
            .collect()
    };
    for &label in &labels {
        for k in cfg.k_grid() {
            let points: Vec<PointStat> = cfg
                .n
                .iter()
                .map(|&n| {
                    let v = values(label, n, k);
                    let (mean, std_err) = stats(&v);
                    PointStat {
                        n,
                        mean,
                        std_err,
                        trials: v.len(),
                    }
                })
                .collect();
            let rate_series = matches!(cfg.kind, ExperimentKind::KtspRate | ExperimentKind::TrpRate)
                && (label == "ktsp" || label == "latency");
            let fit = if rate_series && cfg.n.len() >= 2 {
                Some(fit_loglog_slope(
                    &points.iter().map(|p| (p.n as f64, p.mean)).collect::<Vec<_>>(),
                )?)
            } else {
                None
            };
            series.push(SeriesSummary {
                label: label.to_string(),
                k,
                points,
                fit,
            });
        }
    }

    let mut checks = Vec::new();
    let mut tail = Vec::new();
    let n_max = *cfg.n.iter().max().expect("validated");
    match cfg.kind {
        ExperimentKind::KtspRate => {
            for s in series.iter().filter(|s| s.label == "ktsp") {
                let k = s.k.expect("k series");
                if let Some(fit) = &s.fit {
                    let target = -ktsp_exponent(k);
                    checks.push(Check::new(
                        format!("ktsp slope k={k}"),
                        fit.slope,
                        [target - th.slope_tolerance, target + th.slope_tolerance],
                    ));
                }
                let scheme = stats(&values("ktsp", n_max, Some(k))).0;
                let naive = stats(&values("naive", n_max, Some(k))).0;
                checks.push(Check::new(
                    format!("ktsp/naive k={k} n={n_max}"),
                    scheme / naive,
                    [0.0, th.naive_factor],
                ));
            }
        }
        ExperimentKind::TrpRate => {
            if let Some(fit) = &series[0].fit {
                checks.push(Check::new("trp slope".into(), fit.slope, th.trp_slope));
            }
        }
        ExperimentKind::TrpFactor => {
            for &n in &cfg.n {
                let f = values("factor", n, None);
                let within = f.iter().filter(|&&v| v <= th.factor_limit).count() as f64 / f.len() as f64;
                checks.push(Check::new(
                    format!("factor <= {} share n={n}", th.factor_limit),
                    within,
                    [th.factor_fraction, 1.0],
                ));
                checks.push(Check::new(
                    format!("maxmin mean n={n}"),
                    stats(&values("maxmin", n, None)).0,
                    th.maxmin,
                ));
            }
        }
        ExperimentKind::TailDominance => {
            let area = cfg.density()?.square().area();
            for k in cfg.k_grid().into_iter().flatten() {
                for &n in &cfg.n {
                    let v = values("ktsp-exact", n, Some(k));
                    let alphas = match &cfg.alphas {
                        Some(a) => a.clone(),
                        None => {
                            let top = 1.25 * tail_alpha_star(k, n) * area.sqrt();
                            (1..=20).map(|i| top * i as f64 / 20.0).collect()
                        }
                    };
                    let mut violations = 0;
                    for alpha in alphas {
                        let empirical = v.iter().filter(|&&l| l <= alpha).count() as f64 / v.len() as f64;
                        let bound = ktsp_tail_bound(k, n, area, alpha);
                        let std_err = (bound * (1.0 - bound) / v.len() as f64).sqrt();
                        let ok = empirical <= bound + th.tail_sigmas * std_err;
                        violations += usize::from(!ok);
                        tail.push(TailRow {
                            k,
                            n,
                            alpha,
                            empirical,
                            bound,
                            std_err,
                            ok,
                        });
                    }
                    checks.push(Check::new(
                        format!("tail violations k={k} n={n}"),
                        violations as f64,
                        [0.0, 0.0],
                    ));
                }
            }
        }
        ExperimentKind::FairnessAudit => {
            let prep = prepare(cfg)?;
            let (pop, mixes) = prep.fair.as_ref().expect("prepared");
            for (k, mix) in mixes {
                for &n in &cfg.n {
                    for i in 0..pop.populations() {
                        let target: f64 = (0..mix.q.len()).map(|j| mix.q[j] * pop.share(i, j)).sum();
                        let (mean, se) = stats(&values(&format!("pop{i}"), n, Some(*k)));
                        let slack = th.fairness_sigmas * se.max(1e-12);
                        checks.push(Check::new(
                            format!("served pop{i} k={k} n={n} (target {target:.6})"),
                            mean,
                            [target - slack, target + slack],
                        ));
                    }
                }
            }
        }
    }
    let pass = checks.iter().all(|c| c.pass);
    Ok(Summary {
        name: cfg.name.clone(),
        kind: cfg.kind,
        config_hash: cfg.hash(),
        master_seed: cfg.seed,
        trials: cfg.trials,
        series,
        tail,
        checks,
        pass,
    })
}

/// Runs the experiment and writes `<out>/<name>.csv` (raw trials) and
/// `<out>/<name>.json` (summary).
pub fn run_experiment(cfg: &ExperimentConfig, workers: usize, out: &Path) -> Result<Summary> {
    if cfg.name.contains(['/', '\\']) {
        bail!("experiment name {:?} must not contain path separators", cfg.name);
    }
    let rows = run_trials(cfg, workers)?;
    let summary = summarize(cfg, &rows)?;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let csv_path = out.join(format!("{}.csv", cfg.name));
    write_csv(
        &rows,
        fs::File::create(&csv_path).with_context(|| format!("creating {}", csv_path.display()))?,
    )?;
    let json_path = out.join(format!("{}.json", cfg.name));
    crate::formats::write_json(&summary, fs::File::create(&json_path)?)?;
    Ok(summary)
}
