//! Imputation baselines and a Monte Carlo harness that compares them with
//! Hit & Run sampling on synthetic two-input, one-output technologies.

use std::io::Write;

use nalgebra::{DMatrix, DVector};
use rand::seq::IndexedRandom;
use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{DataError, DataSet, Dims, Direction};
use crate::dea::{interval_dea_bounds, DeaError};
use crate::geometry::{GeometryError, UncertaintySet};
use crate::pipeline::{evaluate_all, run_hr_dea, PipelineConfig, PipelineError, MIN_SAMPLED_VALUE};
use crate::sampler::RngStream;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Dea(#[from] DeaError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Pipeline(#[from] PipelineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scenario {
    /// Cobb-Douglas with multiplicative uniform noise.
    I,
    /// Linear with interaction, half-normal noise.
    II,
    /// Translog with log-uniform noise.
    III,
}

impl Scenario {
    pub const ALL: [Scenario; 3] = [Scenario::I, Scenario::II, Scenario::III];
}

impl std::fmt::Display for Scenario {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Scenario::I => "I",
            Scenario::II => "II",
            Scenario::III => "III",
        })
    }
}

impl std::str::FromStr for Scenario {
    type Err = BenchError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim() {
            "I" | "1" => Ok(Scenario::I),
            "II" | "2" => Ok(Scenario::II),
            "III" | "3" => Ok(Scenario::III),
            other => Err(BenchError::Invalid(format!("unknown scenario '{other}'"))),
        }
    }
}

fn open_unit<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    loop {
        let u: f64 = rng.random();
        if u > 0.0 {
            return u;
        }
    }
}

fn half_normal<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    let law = Normal::new(0.0, sd).expect("positive standard deviation");
    loop {
        let v: f64 = law.sample(rng);
        if v != 0.0 {
            return v.abs();
        }
    }
}

/// `n` DMUs with inputs `x₁ = 10 + 5U`, `x₂ = 20 + 10|N(0,1)|` and one output.
pub fn generate_scenario<R: Rng + ?Sized>(
    scenario: Scenario,
    n: usize,
    rng: &mut R,
) -> Result<DataSet, BenchError> {
    if n == 0 {
        return Err(BenchError::Invalid("n must be at least 1".into()));
    }
    let mut points = Vec::with_capacity(n);
    for _ in 0..n {
        let x1 = 10.0 + 5.0 * rng.random::<f64>();
        let x2 = 20.0 + 10.0 * half_normal(rng, 1.0);
        let y = match scenario {
            Scenario::I => 5.0 * x1.powf(0.5) * x2.powf(0.7) * open_unit(rng),
            Scenario::II => (2.0 * x1 + 4.0 * x2 + x1 * x2) * half_normal(rng, 1.0 / 3.0),
            Scenario::III => {
                let (l1, l2) = (x1.ln(), x2.ln());
                let log_y = 0.25 + 0.2 * l1 + l2 + 0.4 * l1 * l1 + 0.1 * l2 * l2
                    + 0.3 * l1 * l2
                    + open_unit(rng).ln();
                log_y.exp()
            }
        };
        points.push(vec![x1, x2, y]);
    }
    let data = DataSet::from_points(Dims::new(2, 1, 0), points)?
        .with_var_names(vec!["x1".into(), "x2".into(), "y1".into()])?;
    Ok(data)
}

/// Number of integer digits of `v`; 1 below 1.
pub fn magnitude(v: f64) -> i32 {
    if v >= 1.0 {
        v.log10().floor() as i32 + 1
    } else {
        1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gap {
    pub dmu: usize,
    pub var: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct GapSpec {
    pub gaps: Vec<Gap>,
}

impl GapSpec {
    /// Per-cell bounds over the whole dataset; observed cells are exact.
    pub fn bounds(&self, reference: &DataSet) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let mut lower = reference.points().to_vec();
        let mut upper = lower.clone();
        for g in &self.gaps {
            lower[g.dmu][g.var] = g.lower;
            upper[g.dmu][g.var] = g.upper;
        }
        (lower, upper)
    }
}

/// Masks `count` distinct cells chosen uniformly and gives each an interval
/// `[v − 10^(O−1)ρ', v + 10^(O−1)ρ]` clipped at 0, with `O = magnitude(v)`.
pub fn introduce_gaps<R: Rng + ?Sized>(
    data: &DataSet,
    count: usize,
    rng: &mut R,
) -> Result<(DataSet, GapSpec), BenchError> {
    let z = data.dims().total();
    let cells = data.n() * z;
    if count > cells {
        return Err(BenchError::Invalid(format!(
            "{count} gaps requested but the dataset has only {cells} cells"
        )));
    }
    if data.has_missing() {
        return Err(BenchError::Invalid("dataset already has gaps".into()));
    }
    let chosen = rand::seq::index::sample(rng, cells, count);
    let mut picked: Vec<usize> = chosen.into_iter().collect();
    picked.sort_unstable();
    let mut masked = data.clone();
    let mut gaps = Vec::with_capacity(count);
    for c in picked {
        let (dmu, var) = (c / z, c % z);
        let v = data.value(dmu, var);
        let scale = 10f64.powi(magnitude(v) - 1);
        let below: f64 = rng.random();
        let above: f64 = rng.random();
        gaps.push(Gap {
            dmu,
            var,
            lower: (v - scale * below).max(0.0),
            upper: v + scale * above,
        });
        masked = masked.with_masked(dmu, var);
    }
    Ok((masked, GapSpec { gaps }))
}

fn observed_column(data: &DataSet, var: usize) -> Vec<f64> {
    (0..data.n())
        .filter(|&j| !data.is_missing(j, var))
        .map(|j| data.value(j, var))
        .collect()
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn column_means(data: &DataSet) -> Result<Vec<f64>, BenchError> {
    (0..data.dims().total())
        .map(|var| {
            let col = observed_column(data, var);
            if col.is_empty() {
                Err(BenchError::Invalid(format!(
                    "variable '{}' has no observed values",
                    data.var_names()[var]
                )))
            } else {
                Ok(mean(&col))
            }
        })
        .collect()
}

fn fill(data: &DataSet, value: impl Fn(usize, usize) -> Result<f64, BenchError>) -> Result<DataSet, BenchError> {
    let mut points = data.points().to_vec();
    for (j, row) in points.iter_mut().enumerate() {
        for (var, cell) in row.iter_mut().enumerate() {
            if data.is_missing(j, var) {
                *cell = value(j, var)?;
            }
        }
    }
    Ok(data.with_points(points)?)
}

/// Each gap takes the mean of the observed values of its variable.
pub fn impute_mean(masked: &DataSet) -> Result<DataSet, BenchError> {
    let means = column_means(masked)?;
    fill(masked, |_, var| Ok(means[var]))
}

/// Each incomplete DMU copies its gaps from the nearest complete DMU, by
/// Euclidean distance on standardized variables it observes. Ties are
/// broken uniformly at random.
pub fn impute_hotdeck<R: Rng + ?Sized>(masked: &DataSet, rng: &mut R) -> Result<DataSet, BenchError> {
    let z = masked.dims().total();
    let n = masked.n();
    column_means(masked)?;
    let donors: Vec<usize> = (0..n)
        .filter(|&j| (0..z).all(|v| !masked.is_missing(j, v)))
        .collect();
    if donors.is_empty() && masked.has_missing() {
        return Err(BenchError::Invalid("hot-deck needs at least one complete DMU".into()));
    }
    let scale: Vec<f64> = (0..z)
        .map(|v| {
            let col = observed_column(masked, v);
            let m = mean(&col);
            let sd = (col.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / col.len() as f64).sqrt();
            if sd > 0.0 { sd } else { 1.0 }
        })
        .collect();
    let mut points = masked.points().to_vec();
    for j in 0..n {
        if (0..z).all(|v| !masked.is_missing(j, v)) {
            continue;
        }
        let dist = |d: usize| -> f64 {
            (0..z)
                .filter(|&v| !masked.is_missing(j, v))
                .map(|v| ((masked.value(j, v) - masked.value(d, v)) / scale[v]).powi(2))
                .sum()
        };
        let best = donors.iter().map(|&d| dist(d)).fold(f64::INFINITY, f64::min);
        let nearest: Vec<usize> = donors.iter().copied().filter(|&d| dist(d) == best).collect();
        let donor = *nearest.choose(rng).expect("non-empty donor list");
        for v in 0..z {
            if masked.is_missing(j, v) {
                points[j][v] = masked.value(donor, v);
            }
        }
    }
    Ok(masked.with_points(points)?)
}

/// Least-squares fit with intercept; `None` when the design is rank deficient.
fn ols(x: &DMatrix<f64>, y: &DVector<f64>) -> Option<DVector<f64>> {
    let qr = x.clone().qr();
    let r = qr.r();
    let diag_max = r.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if r.diagonal().iter().any(|v| v.abs() <= 1e-10 * diag_max.max(1.0)) {
        return None;
    }
    let qty = qr.q().transpose() * y;
    r.solve_upper_triangular(&qty)
}

/// Regression imputation that also reports how many cells fell back to the
/// column mean because the design was singular.
pub fn impute_regression_counted(masked: &DataSet) -> Result<(DataSet, usize), BenchError> {
    let z = masked.dims().total();
    let n = masked.n();
    let means = column_means(masked)?;
    let complete: Vec<usize> = (0..n)
        .filter(|&j| (0..z).all(|v| !masked.is_missing(j, v)))
        .collect();
    let mut fallbacks = 0;
    let mut points = masked.points().to_vec();
    for j in 0..n {
        for v in 0..z {
            if !masked.is_missing(j, v) {
                continue;
            }
            let predictors: Vec<usize> = (0..z).filter(|&p| p != v && !masked.is_missing(j, p)).collect();
            let cols = predictors.len() + 1;
            if complete.len() < cols + 1 {
                return Err(BenchError::Invalid(format!(
                    "regression needs at least {} complete DMUs, found {}",
                    cols + 1,
                    complete.len()
                )));
            }
            let x = DMatrix::from_fn(complete.len(), cols, |r, c| {
                if c == 0 { 1.0 } else { masked.value(complete[r], predictors[c - 1]) }
            });
            let y = DVector::from_iterator(complete.len(), complete.iter().map(|&r| masked.value(r, v)));
            points[j][v] = match ols(&x, &y) {
                Some(b) => {
                    let fit = b[0]
                        + predictors
                            .iter()
                            .enumerate()
                            .map(|(i, &p)| b[i + 1] * masked.value(j, p))
                            .sum::<f64>();
                    fit.max(0.0)
                }
                None => {
                    log::warn!(
                        "singular regression design for variable '{}'; using the column mean",
                        masked.var_names()[v]
                    );
                    fallbacks += 1;
                    means[v]
                }
            };
        }
    }
    Ok((masked.with_points(points)?, fallbacks))
}

/// Each gap takes the OLS prediction from the DMU's observed variables,
/// fitted on complete DMUs and clipped at 0.
pub fn impute_regression(masked: &DataSet) -> Result<DataSet, BenchError> {
    impute_regression_counted(masked).map(|(d, _)| d)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComparisonMetrics {
    /// `None` when either vector is constant.
    pub pearson: Option<f64>,
    /// Tau-b; `None` when either vector is constant.
    pub kendall: Option<f64>,
    pub mae: f64,
    /// Mean of `est − base`.
    pub msd: f64,
}

pub fn pearson(a: &[f64], b: &[f64]) -> Option<f64> {
    let (ma, mb) = (mean(a), mean(b));
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return None;
    }
    Some((sab / (saa * sbb).sqrt()).clamp(-1.0, 1.0))
}

pub fn kendall_tau_b(a: &[f64], b: &[f64]) -> Option<f64> {
    let n = a.len();
    let (mut concordant, mut discordant, mut ties_a, mut ties_b) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            let da = a[i] - a[j];
            let db = b[i] - b[j];
            if da == 0.0 && db == 0.0 {
                ties_a += 1;
                ties_b += 1;
            } else if da == 0.0 {
                ties_a += 1;
            } else if db == 0.0 {
                ties_b += 1;
            } else if (da > 0.0) == (db > 0.0) {
                concordant += 1;
            } else {
                discordant += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as i64;
    let denom = (((pairs - ties_a) * (pairs - ties_b)) as f64).sqrt();
    if denom == 0.0 {
        return None;
    }
    Some(((concordant - discordant) as f64 / denom).clamp(-1.0, 1.0))
}

pub fn compare_metrics(base: &[f64], est: &[f64]) -> Result<ComparisonMetrics, BenchError> {
    if base.len() != est.len() || base.len() < 2 {
        return Err(BenchError::Invalid(format!(
            "need two vectors of equal length ≥ 2, got {} and {}",
            base.len(),
            est.len()
        )));
    }
    let n = base.len() as f64;
    Ok(ComparisonMetrics {
        pearson: pearson(base, est),
        kendall: kendall_tau_b(base, est),
        mae: base.iter().zip(est).map(|(b, e)| (e - b).abs()).sum::<f64>() / n,
        msd: base.iter().zip(est).map(|(b, e)| e - b).sum::<f64>() / n,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Alternative {
    Mean,
    HotDeck,
    IntervalDea,
    Regression,
    HrBox,
    HrEllipsoid,
    HrRhombus,
}

impl Alternative {
    pub const ALL: [Alternative; 7] = [
        Alternative::Mean,
        Alternative::HotDeck,
        Alternative::IntervalDea,
        Alternative::Regression,
        Alternative::HrBox,
        Alternative::HrEllipsoid,
        Alternative::HrRhombus,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Alternative::Mean => "mean",
            Alternative::HotDeck => "hot-deck",
            Alternative::IntervalDea => "interval-dea",
            Alternative::Regression => "regression",
            Alternative::HrBox => "hr-box",
            Alternative::HrEllipsoid => "hr-ellipsoid",
            Alternative::HrRhombus => "hr-rhombus",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    Pearson,
    Kendall,
    Mae,
    Msd,
}

impl Metric {
    pub const ALL: [Metric; 4] = [Metric::Pearson, Metric::Kendall, Metric::Mae, Metric::Msd];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Pearson => "pearson",
            Metric::Kendall => "kendall",
            Metric::Mae => "mae",
            Metric::Msd => "msd",
        }
    }

    fn of(&self, m: &ComparisonMetrics) -> Option<f64> {
        match self {
            Metric::Pearson => m.pearson,
            Metric::Kendall => m.kendall,
            Metric::Mae => Some(m.mae),
            Metric::Msd => Some(m.msd),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchConfig {
    pub scenarios: Vec<Scenario>,
    pub n: usize,
    pub reps: usize,
    pub gaps: usize,
    /// Hit & Run iterations per alternative.
    pub t: usize,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            scenarios: Scenario::ALL.to_vec(),
            n: 300,
            reps: 150,
            gaps: 80,
            t: 100,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn describe(&self) -> Vec<(String, String)> {
        let names: Vec<String> = self.scenarios.iter().map(|s| s.to_string()).collect();
        vec![
            ("seed".into(), self.seed.to_string()),
            ("scenarios".into(), names.join(";")),
            ("n".into(), self.n.to_string()),
            ("reps".into(), self.reps.to_string()),
            ("gaps".into(), self.gaps.to_string()),
            ("t".into(), self.t.to_string()),
            ("orientation".into(), "output".into()),
        ]
    }
}

/// Metrics of every alternative for one generated dataset.
pub fn run_replication(
    scenario: Scenario,
    n: usize,
    gaps: usize,
    t: usize,
    rng: &mut RngStream,
) -> Result<Vec<ComparisonMetrics>, BenchError> {
    let data = generate_scenario(scenario, n, rng)?;
    let dir = Direction::Output;
    let cfg = PipelineConfig {
        direction: dir.clone(),
        t,
        ..PipelineConfig::default()
    };
    // Imputed values may be 0; every alternative sees the pipeline's floor.
    let distances = |d: &DataSet| evaluate_all(d.points(), d, &cfg);
    let base = distances(&data)?;
    let (masked, spec) = introduce_gaps(&data, gaps, rng)?;
    let (lower, upper) = spec.bounds(&data);
    let floor = |m: &[Vec<f64>]| -> Vec<Vec<f64>> {
        m.iter()
            .map(|r| r.iter().map(|v| v.max(MIN_SAMPLED_VALUE)).collect())
            .collect()
    };
    let (lower_f, upper_f) = (floor(&lower), floor(&upper));

    let mut out = Vec::with_capacity(Alternative::ALL.len());
    let pipeline_seed = rng.next_u64();
    for alt in Alternative::ALL {
        let est = match alt {
            Alternative::Mean => distances(&impute_mean(&masked)?)?,
            Alternative::HotDeck => distances(&impute_hotdeck(&masked, rng)?)?,
            Alternative::Regression => distances(&impute_regression(&masked)?)?,
            Alternative::IntervalDea => (0..n)
                .map(|k| {
                    interval_dea_bounds(data.dims(), &lower_f, &upper_f, k, &dir, &cfg.dea)
                        .map(|b| 0.5 * (b.low + b.high))
                })
                .collect::<Result<_, _>>()?,
            Alternative::HrBox | Alternative::HrEllipsoid | Alternative::HrRhombus => {
                let sets = (0..n)
                    .map(|j| {
                        let center: Vec<f64> =
                            lower[j].iter().zip(&upper[j]).map(|(l, u)| 0.5 * (l + u)).collect();
                        let half: Vec<f64> =
                            lower[j].iter().zip(&upper[j]).map(|(l, u)| 0.5 * (u - l)).collect();
                        match alt {
                            Alternative::HrBox => UncertaintySet::hyper_box(center, half),
                            Alternative::HrEllipsoid => UncertaintySet::ellipsoid(center, half),
                            _ => UncertaintySet::rhombus(center, half),
                        }
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                let cfg = PipelineConfig {
                    seed: pipeline_seed,
                    ..cfg.clone()
                };
                let m = run_hr_dea(&masked, &sets, &cfg)?;
                m.e.iter().map(|row| mean(row)).collect()
            }
        };
        out.push(compare_metrics(&base, &est)?);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BenchReport {
    pub scenarios: Vec<Scenario>,
    /// `values[metric][alternative][scenario]`: mean over replications that
    /// produced the metric.
    pub values: Vec<Vec<Vec<Option<f64>>>>,
    pub metadata: Vec<(String, String)>,
}

impl BenchReport {
    pub fn get(&self, metric: Metric, alt: Alternative, scenario: Scenario) -> Option<f64> {
        let mi = Metric::ALL.iter().position(|m| *m == metric)?;
        let ai = Alternative::ALL.iter().position(|a| *a == alt)?;
        let si = self.scenarios.iter().position(|s| *s == scenario)?;
        self.values[mi][ai][si]
    }

    /// Mean across scenarios; `None` if any scenario lacks the metric.
    pub fn overall(&self, metric: Metric, alt: Alternative) -> Option<f64> {
        let vals: Option<Vec<f64>> = self.scenarios.iter().map(|s| self.get(metric, alt, *s)).collect();
        vals.map(|v| mean(&v))
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}={v}")?;
        }
        let fmt = |v: Option<f64>| v.map_or_else(|| "NA".to_string(), |x| x.to_string());
        let mut header = vec!["metric".to_string(), "alternative".to_string()];
        header.extend(self.scenarios.iter().map(|s| s.to_string()));
        header.push("mean".into());
        writeln!(w, "{}", header.join(","))?;
        for metric in Metric::ALL {
            for alt in Alternative::ALL {
                let mut row = vec![metric.name().to_string(), alt.name().to_string()];
                row.extend(self.scenarios.iter().map(|s| fmt(self.get(metric, alt, *s))));
                row.push(fmt(self.overall(metric, alt)));
                writeln!(w, "{}", row.join(","))?;
            }
        }
        Ok(())
    }
}

/// Replications run in parallel; replication `r` of scenario `s` always
/// draws from the same stream, so results do not depend on scheduling.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchReport, BenchError> {
    if cfg.reps == 0 {
        return Err(BenchError::Invalid("reps must be at least 1".into()));
    }
    if cfg.scenarios.is_empty() {
        return Err(BenchError::Invalid("no scenarios selected".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.scenarios.len())
        .flat_map(|s| (0..cfg.reps).map(move |r| (s, r)))
        .collect();
    let results: Vec<Vec<ComparisonMetrics>> = jobs
        .par_iter()
        .map(|&(s, r)| {
            let scenario = cfg.scenarios[s];
            let stream = ((scenario as u64) << 32) | r as u64;
            let mut rng = RngStream::new(cfg.seed, stream);
            run_replication(scenario, cfg.n, cfg.gaps, cfg.t, &mut rng)
        })
        .collect::<Result<_, _>>()?;

    let mut values = vec![vec![vec![None; cfg.scenarios.len()]; Alternative::ALL.len()]; Metric::ALL.len()];
    for (mi, metric) in Metric::ALL.iter().enumerate() {
        for ai in 0..Alternative::ALL.len() {
            for s in 0..cfg.scenarios.len() {
                let got: Vec<f64> = jobs
                    .iter()
                    .zip(&results)
                    .filter(|((js, _), _)| *js == s)
                    .filter_map(|(_, res)| metric.of(&res[ai]))
                    .collect();
                if !got.is_empty() {
                    values[mi][ai][s] = Some(mean(&got));
                }
            }
        }
    }
    Ok(BenchReport {
        scenarios: cfg.scenarios.clone(),
        values,
        metadata: cfg.describe(),
    })
}
