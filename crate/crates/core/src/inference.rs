//! Statistics on sampled distance distributions.
//!
//! Distances are grouped in buckets: `b₀ = {0}` collects efficient draws
//! (`|D| < 1e-9`) and `b_g = ](g−1)w, g·w]` for `g ≥ 1`. The robustness
//! index of bucket `g` is the share of draws that land in it.

use std::io::Write;

use statrs::function::beta::{beta_reg, ln_beta};
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::pipeline::DistanceMatrix;

/// Distances below this are counted as exactly efficient.
pub const ZERO_TOL: f64 = 1e-9;
/// Bucket width used when none is given.
pub const DEFAULT_WIDTH: f64 = 0.01;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum InferenceError {
    #[error("no samples")]
    Empty,
    #[error("invalid argument: {0}")]
    Invalid(String),
    #[error("{t} samples are too few for level {tau}; at least {min_t} are needed")]
    TooFewSamples { t: usize, tau: f64, min_t: usize },
    #[error("degenerate Beta fit: {0}")]
    DegenerateFit(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BucketScheme {
    pub width: f64,
    /// Number of non-zero buckets `G`.
    pub buckets: usize,
}

impl BucketScheme {
    /// Buckets of `width` covering `[0, max]`.
    pub fn covering(width: f64, max: f64) -> Result<Self, InferenceError> {
        if !(width.is_finite() && width > 0.0) {
            return Err(InferenceError::Invalid(format!(
                "bucket width must be positive, got {width}"
            )));
        }
        if !(max.is_finite() && max >= 0.0) {
            return Err(InferenceError::Invalid(format!("invalid maximum {max}")));
        }
        let buckets = if max < ZERO_TOL { 0 } else { bucket_of(max, width) };
        Ok(Self { width, buckets })
    }

    /// Bucket index of a distance; values above the covered range get
    /// indices beyond `buckets`.
    pub fn index(&self, d: f64) -> usize {
        if d.abs() < ZERO_TOL {
            0
        } else {
            bucket_of(d, self.width)
        }
    }

    /// `(lower, upper]` of bucket `g ≥ 1`.
    pub fn bounds(&self, g: usize) -> (f64, f64) {
        ((g - 1) as f64 * self.width, g as f64 * self.width)
    }

    pub fn midpoint(&self, g: usize) -> f64 {
        if g == 0 {
            0.0
        } else {
            (g as f64 - 0.5) * self.width
        }
    }
}

/// Smallest `g ≥ 1` with `d ≤ g·w`, checked against the same products the
/// bounds use so that bucket membership is consistent with `bounds`.
fn bucket_of(d: f64, w: f64) -> usize {
    let mut g = ((d / w).ceil() as usize).max(1);
    while g > 1 && d <= (g - 1) as f64 * w {
        g -= 1;
    }
    while d > g as f64 * w {
        g += 1;
    }
    g
}

/// Bucket counts for one DMU.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Erii {
    pub counts: Vec<u64>,
    pub total: u64,
}

impl Erii {
    pub fn probabilities(&self) -> Vec<f64> {
        self.counts
            .iter()
            .map(|c| *c as f64 / self.total as f64)
            .collect()
    }

    /// `ERII₀`.
    pub fn zero(&self) -> f64 {
        self.counts[0] as f64 / self.total as f64
    }
}

pub fn erii(samples: &[f64], scheme: &BucketScheme) -> Result<Erii, InferenceError> {
    if samples.is_empty() {
        return Err(InferenceError::Empty);
    }
    let mut counts = vec![0u64; scheme.buckets + 1];
    for &d in samples {
        if !d.is_finite() || d < -ZERO_TOL {
            return Err(InferenceError::Invalid(format!("distance {d} is not ≥ 0")));
        }
        let g = scheme.index(d);
        if g >= counts.len() {
            counts.resize(g + 1, 0);
        }
        counts[g] += 1;
    }
    Ok(Erii {
        counts,
        total: samples.len() as u64,
    })
}

/// Bucketed expectation `Σ_g midpoint(b_g)·ERII_g`.
pub fn expected_distance(erii: &Erii, scheme: &BucketScheme) -> f64 {
    erii.counts
        .iter()
        .enumerate()
        .map(|(g, c)| scheme.midpoint(g) * *c as f64)
        .sum::<f64>()
        / erii.total as f64
}

/// `(bucket midpoint, ERII_g)` pairs, ready to plot as a histogram.
pub fn histogram(erii: &Erii, scheme: &BucketScheme) -> Vec<(f64, f64)> {
    erii.probabilities()
        .into_iter()
        .enumerate()
        .map(|(g, p)| (scheme.midpoint(g), p))
        .collect()
}

/// `θ = (1 − D)/(1 + D)`, exact when the direction is `(xᵏ, yᵏ, uᵏ)`.
pub fn efficiency_score_proportional(d: f64) -> f64 {
    (1.0 - d) / (1.0 + d)
}

/// Geometric mean of input target ratios over the geometric mean of output
/// target ratios.
pub fn efficiency_from_targets(
    x: &[f64],
    x_target: &[f64],
    y: &[f64],
    y_target: &[f64],
) -> Result<f64, InferenceError> {
    if x.is_empty() || y.is_empty() || x.len() != x_target.len() || y.len() != y_target.len() {
        return Err(InferenceError::Invalid(
            "input and output targets must match their observations".into(),
        ));
    }
    let gm = |obs: &[f64], tgt: &[f64]| -> Result<f64, InferenceError> {
        let mut log_sum = 0.0;
        for (o, t) in obs.iter().zip(tgt) {
            if *o <= 0.0 || *t < 0.0 {
                return Err(InferenceError::Invalid(format!(
                    "target ratio {t}/{o} is undefined"
                )));
            }
            log_sum += (t / o).ln();
        }
        Ok((log_sum / obs.len() as f64).exp())
    };
    Ok(gm(x, x_target)? / gm(y, y_target)?)
}

/// Score for distance `d` along `delta` from an observation with inputs
/// `x` and outputs `y`; `delta_x`, `delta_y` are the matching direction parts.
pub fn efficiency_score(
    d: f64,
    x: &[f64],
    y: &[f64],
    delta_x: &[f64],
    delta_y: &[f64],
) -> Result<f64, InferenceError> {
    let xt: Vec<f64> = x.iter().zip(delta_x).map(|(v, dl)| v - dl * d).collect();
    let yt: Vec<f64> = y.iter().zip(delta_y).map(|(v, dl)| v + dl * d).collect();
    efficiency_from_targets(x, &xt, y, &yt)
}

/// Second-order expansion of `E[(1 − D)/(1 + D)]` around the mean `rho`.
pub fn expected_efficiency(rho: f64, sigma: f64) -> f64 {
    let a = 1.0 + rho;
    (1.0 - rho) / a + (1.0 / (a * a) + (1.0 - rho) / (a * a * a)) * sigma * sigma
}

/// 1-based order-statistic indices of the `tau` interval for `t` samples.
pub fn ci_indices(t: usize, tau: f64) -> Result<(usize, usize), InferenceError> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(InferenceError::Invalid(format!("level must be in (0, 1), got {tau}")));
    }
    let tf = t as f64;
    // The small offsets absorb rounding in (1 ± τ)·t/2 at integer values.
    let lo = ((1.0 - tau) * tf / 2.0 - 1e-9).ceil();
    let hi = ((1.0 + tau) * tf / 2.0 + 1e-9).floor();
    if (1.0 - tau) * tf / 2.0 < 1.0 - 1e-9 {
        let min_t = (2.0 / (1.0 - tau) - 1e-9).ceil() as usize;
        return Err(InferenceError::TooFewSamples { t, tau, min_t });
    }
    Ok((lo as usize, (hi as usize).min(t)))
}

pub fn confidence_interval(samples: &[f64], tau: f64) -> Result<(f64, f64), InferenceError> {
    if samples.is_empty() {
        return Err(InferenceError::Empty);
    }
    let (lo, hi) = ci_indices(samples.len(), tau)?;
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok((sorted[lo - 1], sorted[hi - 1]))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Category {
    /// Efficient in every draw.
    C1,
    /// Efficient in at least a `τ` share of draws.
    C2,
    /// Confidence interval touches zero but is not reduced to it.
    C3,
    /// Confidence interval excludes zero.
    C4,
}

impl std::fmt::Display for Category {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Category::C1 => "C1",
            Category::C2 => "C2",
            Category::C3 => "C3",
            Category::C4 => "C4",
        })
    }
}

impl std::str::FromStr for Category {
    type Err = InferenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "C1" => Ok(Category::C1),
            "C2" => Ok(Category::C2),
            "C3" => Ok(Category::C3),
            "C4" => Ok(Category::C4),
            _ => Err(InferenceError::Invalid(format!("unknown category '{s}'"))),
        }
    }
}

/// Rules checked in order: C1 if `erii0 = 1`; C2 if `tau ≤ erii0 < 1`;
/// C3 if `erii0 < tau` and `lb ≤ 0 < ub`; C4 if `lb > 0` and `e_d > 0`.
///
/// Zero means below [`ZERO_TOL`]. When the interval is `[0, 0]` but fewer
/// than a `tau` share of draws is zero (possible only through index
/// rounding for small `t`), no rule fires and the row is placed in C3.
pub fn classify(erii0: f64, e_d: f64, lb: f64, ub: f64, tau: f64) -> Category {
    if erii0 >= 1.0 {
        Category::C1
    } else if erii0 >= tau {
        Category::C2
    } else if lb < ZERO_TOL && ub >= ZERO_TOL {
        Category::C3
    } else if lb >= ZERO_TOL && e_d > 0.0 {
        Category::C4
    } else {
        log::debug!("no category rule fired (ERII0={erii0}, LB={lb}, UB={ub}); using C3");
        Category::C3
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Population standard deviation.
pub fn std_dev(v: &[f64]) -> f64 {
    let m = mean(v);
    (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt()
}

fn std_normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutperformanceMethod {
    Empirical,
    Gaussian,
}

/// Probability that `D_j ≤ D_k` under independent Gaussian laws.
pub fn gaussian_outperformance(rho_j: f64, sigma_j: f64, rho_k: f64, sigma_k: f64) -> f64 {
    let s = (sigma_j * sigma_j + sigma_k * sigma_k).sqrt();
    if s == 0.0 {
        return if rho_j == rho_k {
            0.5
        } else if rho_j < rho_k {
            1.0
        } else {
            0.0
        };
    }
    std_normal_cdf(-(rho_j - rho_k) / s)
}

/// Probability that DMU j is at least as close to the frontier as DMU k.
pub fn outperformance_probability(
    samples_j: &[f64],
    samples_k: &[f64],
    method: OutperformanceMethod,
) -> Result<f64, InferenceError> {
    if samples_j.is_empty() || samples_k.is_empty() {
        return Err(InferenceError::Empty);
    }
    match method {
        OutperformanceMethod::Empirical => {
            if samples_j.len() != samples_k.len() {
                return Err(InferenceError::Invalid(
                    "empirical comparison needs paired samples of equal length".into(),
                ));
            }
            let hits = samples_j
                .iter()
                .zip(samples_k)
                .filter(|(a, b)| *a - *b <= 0.0)
                .count();
            Ok(hits as f64 / samples_j.len() as f64)
        }
        OutperformanceMethod::Gaussian => Ok(gaussian_outperformance(
            mean(samples_j),
            std_dev(samples_j),
            mean(samples_k),
            std_dev(samples_k),
        )),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HoelderOrder {
    One,
    Two,
    Max,
}

impl std::str::FromStr for HoelderOrder {
    type Err = InferenceError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" => Ok(HoelderOrder::One),
            "2" => Ok(HoelderOrder::Two),
            "inf" | "max" | "∞" => Ok(HoelderOrder::Max),
            other => Err(InferenceError::Invalid(format!(
                "unknown Hölder order '{other}' (expected 1, 2, or inf)"
            ))),
        }
    }
}

pub fn hoelder_mean(v: &[f64], order: HoelderOrder) -> f64 {
    match order {
        HoelderOrder::One => mean(v),
        HoelderOrder::Two => (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt(),
        HoelderOrder::Max => v.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    }
}

/// Two-sided test that two distance matrices come from the same law.
/// Each iteration's statistic is the ratio of the column means; the
/// p-value is `min(1, 2/t · min(#{T ≤ 1}, #{T ≥ 1}))`.
pub fn scenario_p_value(
    a: &DistanceMatrix,
    b: &DistanceMatrix,
    order: HoelderOrder,
) -> Result<f64, InferenceError> {
    if a.n() != b.n() || a.t() != b.t() {
        return Err(InferenceError::Invalid(format!(
            "matrices differ in shape: {}×{} vs {}×{}",
            a.n(),
            a.t(),
            b.n(),
            b.t()
        )));
    }
    if a.t() == 0 || a.n() == 0 {
        return Err(InferenceError::Empty);
    }
    let (mut le, mut ge) = (0usize, 0usize);
    for l in 0..a.t() {
        let num = hoelder_mean(&a.column(l), order);
        let den = hoelder_mean(&b.column(l), order);
        // Comparing num with den is exact, unlike comparing num/den with 1.
        if num <= den {
            le += 1;
        }
        if num >= den {
            ge += 1;
        }
    }
    Ok((2.0 * le.min(ge) as f64 / a.t() as f64).min(1.0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BetaSupport {
    /// `[min sample, max sample]`.
    SampleRange,
    Fixed(f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaFit {
    pub alpha: f64,
    pub beta: f64,
    pub q1: f64,
    pub q2: f64,
}

impl BetaFit {
    pub fn pdf(&self, x: f64) -> f64 {
        if x < self.q1 || x > self.q2 {
            return 0.0;
        }
        let span = self.q2 - self.q1;
        let z = (x - self.q1) / span;
        let log = (self.alpha - 1.0) * z.ln() + (self.beta - 1.0) * (1.0 - z).ln()
            - ln_beta(self.alpha, self.beta)
            - span.ln();
        log.exp()
    }

    pub fn cdf(&self, x: f64) -> f64 {
        if x <= self.q1 {
            0.0
        } else if x >= self.q2 {
            1.0
        } else {
            beta_reg(self.alpha, self.beta, (x - self.q1) / (self.q2 - self.q1))
        }
    }

    /// `n` evenly spaced `(x, pdf(x))` pairs across the support.
    pub fn density_curve(&self, n: usize) -> Vec<(f64, f64)> {
        let n = n.max(2);
        (0..n)
            .map(|i| {
                let x = self.q1 + (self.q2 - self.q1) * i as f64 / (n - 1) as f64;
                (x, self.pdf(x))
            })
            .collect()
    }
}

/// Method-of-moments Beta fit on data rescaled to the support.
pub fn fit_beta(samples: &[f64], support: BetaSupport) -> Result<BetaFit, InferenceError> {
    let mut distinct = samples.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    if distinct.len() < 10 {
        return Err(InferenceError::DegenerateFit(format!(
            "{} distinct values; at least 10 are needed (report the constant instead)",
            distinct.len()
        )));
    }
    let (q1, q2) = match support {
        BetaSupport::SampleRange => (distinct[0], distinct[distinct.len() - 1]),
        BetaSupport::Fixed(a, b) => {
            if !(a < b) || samples.iter().any(|x| *x < a || *x > b) {
                return Err(InferenceError::Invalid(format!(
                    "support [{a}, {b}] does not contain every sample"
                )));
            }
            (a, b)
        }
    };
    let z: Vec<f64> = samples.iter().map(|x| (x - q1) / (q2 - q1)).collect();
    let m = mean(&z);
    let v = std_dev(&z).powi(2);
    if v <= 0.0 {
        return Err(InferenceError::DegenerateFit("zero variance".into()));
    }
    let common = m * (1.0 - m) / v - 1.0;
    let (alpha, beta) = (m * common, (1.0 - m) * common);
    if !(alpha > 0.0 && beta > 0.0) {
        return Err(InferenceError::DegenerateFit(format!(
            "moments give non-positive shapes ({alpha}, {beta})"
        )));
    }
    Ok(BetaFit {
        alpha,
        beta,
        q1,
        q2,
    })
}

/// `(β q₁ + α q₂)/(α + β)`.
pub fn beta_expected_distance(fit: &BetaFit) -> f64 {
    (fit.beta * fit.q1 + fit.alpha * fit.q2) / (fit.alpha + fit.beta)
}

/// Kolmogorov–Smirnov distance between the samples and the fitted law.
pub fn ks_statistic(samples: &[f64], fit: &BetaFit) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, x)| {
            let f = fit.cdf(*x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// Mean and standard deviation of a Beta(α, β) law on [0, 1].
pub fn beta_to_gaussian(alpha: f64, beta: f64) -> (f64, f64) {
    if alpha < 10.0 || beta < 10.0 {
        log::warn!("Gaussian approximation of Beta({alpha}, {beta}) is poor below 10");
    }
    let s = alpha + beta;
    (alpha / s, (alpha * beta / (s * s * (s + 1.0))).sqrt())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub dmu: String,
    pub erii0: f64,
    pub e_d: f64,
    pub lb: f64,
    pub ub: f64,
    pub sd: f64,
    pub e_theta: f64,
    pub category: Category,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub tau: f64,
    pub scheme: BucketScheme,
    pub rows: Vec<ReportRow>,
    pub erii: Vec<Erii>,
    pub metadata: Vec<(String, String)>,
}

pub const REPORT_HEADER: [&str; 8] = [
    "dmu",
    "ERII0",
    "E(D)",
    "LB",
    "UB",
    "sqrt(Var(D))",
    "E(Theta)",
    "Category",
];

/// Per-DMU robustness summary. `E(Θ)` uses the bucketed mean and the
/// sample standard deviation, capped at 1.
pub fn analyze(matrix: &DistanceMatrix, tau: f64, width: f64) -> Result<RobustnessReport, InferenceError> {
    if matrix.n() == 0 || matrix.t() == 0 {
        return Err(InferenceError::Empty);
    }
    let scheme = BucketScheme::covering(width, matrix.max_value())?;
    ci_indices(matrix.t(), tau)?;
    let mut rows = Vec::with_capacity(matrix.n());
    let mut all = Vec::with_capacity(matrix.n());
    for j in 0..matrix.n() {
        let samples = matrix.row(j);
        let e = erii(samples, &scheme)?;
        let e_d = expected_distance(&e, &scheme);
        let (lb, ub) = confidence_interval(samples, tau)?;
        let sd = std_dev(samples);
        let erii0 = e.zero();
        rows.push(ReportRow {
            dmu: matrix.ids[j].clone(),
            erii0,
            e_d,
            lb,
            ub,
            sd,
            e_theta: expected_efficiency(e_d, sd).min(1.0),
            category: classify(erii0, e_d, lb, ub, tau),
        });
        all.push(e);
    }
    let mut metadata = matrix.metadata.clone();
    metadata.push(("tau".into(), tau.to_string()));
    metadata.push(("bucket_width".into(), width.to_string()));
    Ok(RobustnessReport {
        tau,
        scheme,
        rows,
        erii: all,
        metadata,
    })
}

impl RobustnessReport {
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        for (k, v) in &self.metadata {
            writeln!(w, "# {k}={v}")?;
        }
        let mut out = csv::Writer::from_writer(w);
        let to_io = |e: csv::Error| std::io::Error::other(e.to_string());
        out.write_record(REPORT_HEADER).map_err(to_io)?;
        for r in &self.rows {
            out.write_record([
                r.dmu.clone(),
                r.erii0.to_string(),
                r.e_d.to_string(),
                r.lb.to_string(),
                r.ub.to_string(),
                r.sd.to_string(),
                r.e_theta.to_string(),
                r.category.to_string(),
            ])
            .map_err(to_io)?;
        }
        out.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Beta, Distribution, Normal};

    fn scheme(width: f64, max: f64) -> BucketScheme {
        BucketScheme::covering(width, max).unwrap()
    }

    #[test]
    fn erii_examples() {
        let s = scheme(0.01, 0.0);
        let e = erii(&[0.0; 5], &s).unwrap();
        assert_eq!(e.probabilities(), vec![1.0]);

        let samples = [0.0, 0.005, 0.015, 0.025];
        let s = scheme(0.01, 0.025);
        let e = erii(&samples, &s).unwrap();
        assert_eq!(e.probabilities(), vec![0.25; 4]);
        assert_abs_diff_eq!(expected_distance(&e, &s), 0.01125, epsilon = 1e-15);

        assert!(matches!(erii(&[], &s), Err(InferenceError::Empty)));
    }

    #[test]
    fn bucket_edges_are_half_open() {
        let s = scheme(0.01, 0.05);
        assert_eq!(s.index(0.0), 0);
        assert_eq!(s.index(5e-10), 0);
        assert_eq!(s.index(0.01), 1);
        assert_eq!(s.index(0.02), 2);
        assert_eq!(s.index(0.03), 3);
        assert_eq!(s.index(0.0300001), 4);
        for g in 1..6 {
            let (lo, hi) = s.bounds(g);
            assert_eq!(s.index(hi), g);
            assert_eq!(s.index((lo + 1e-12).max(2e-9)), g);
        }
    }

    #[test]
    fn expected_distance_examples() {
        let s = scheme(0.01, 0.01);
        let e = Erii { counts: vec![7, 0], total: 7 };
        assert_eq!(expected_distance(&e, &s), 0.0);
        let e = Erii { counts: vec![0, 3], total: 3 };
        assert_abs_diff_eq!(expected_distance(&e, &s), 0.005, epsilon = 1e-15);
    }

    #[test]
    fn efficiency_scores() {
        assert_eq!(efficiency_score_proportional(0.0), 1.0);
        assert_abs_diff_eq!(efficiency_score_proportional(0.2550), 0.59363, epsilon = 5e-6);
        let x = [2.0, 3.0];
        let y = [4.0];
        assert_eq!(efficiency_from_targets(&x, &x, &y, &y).unwrap(), 1.0);
        // With δ = observation the geometric form collapses to (1−D)/(1+D).
        let th = efficiency_score(0.3, &x, &y, &x, &y).unwrap();
        assert_abs_diff_eq!(th, efficiency_score_proportional(0.3), epsilon = 1e-12);
    }

    #[test]
    fn expected_efficiency_values() {
        assert_eq!(expected_efficiency(0.0, 0.0), 1.0);
        assert_abs_diff_eq!(expected_efficiency(0.2550, 0.0066), 0.5937, epsilon = 5e-4);
        assert_abs_diff_eq!(expected_efficiency(0.2916, 0.0086), 0.5485, epsilon = 5e-4);
    }

    #[test]
    fn confidence_indices() {
        assert_eq!(ci_indices(5000, 0.95).unwrap(), (125, 4875));
        assert_eq!(ci_indices(100, 0.9).unwrap(), (5, 95));
        assert_eq!(confidence_interval(&[0.3; 40], 0.95).unwrap(), (0.3, 0.3));
        match ci_indices(10, 0.95) {
            Err(InferenceError::TooFewSamples { min_t, .. }) => assert_eq!(min_t, 40),
            other => panic!("{other:?}"),
        }
        let samples: Vec<f64> = (1..=100).rev().map(|i| i as f64).collect();
        assert_eq!(confidence_interval(&samples, 0.9).unwrap(), (5.0, 95.0));
    }

    #[test]
    fn categories() {
        assert_eq!(classify(1.0, 0.0, 0.0, 0.0, 0.95), Category::C1);
        assert_eq!(classify(0.97, 0.0002, 0.0, 0.0, 0.95), Category::C2);
        assert_eq!(classify(0.57, 0.01, 0.0, 0.0463, 0.95), Category::C3);
        assert_eq!(classify(0.0, 0.255, 0.2425, 0.2680, 0.95), Category::C4);
    }

    #[test]
    fn gaussian_outperformance_values() {
        assert_abs_diff_eq!(gaussian_outperformance(0.3, 0.02, 0.3, 0.02), 0.5);
        assert_abs_diff_eq!(
            gaussian_outperformance(0.2550, 0.0066, 0.2916, 0.0086),
            0.9996,
            epsilon = 5e-4
        );
        assert!(gaussian_outperformance(0.5, 0.01, 0.1, 0.01) < 1e-6);
        assert_eq!(gaussian_outperformance(0.2, 0.0, 0.2, 0.0), 0.5);
        assert_eq!(gaussian_outperformance(0.1, 0.0, 0.2, 0.0), 1.0);
    }

    #[test]
    fn empirical_and_gaussian_outperformance_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let nj = Normal::new(0.25, 0.02).unwrap();
        let nk = Normal::new(0.26, 0.03).unwrap();
        let t = 50_000;
        let sj: Vec<f64> = (0..t).map(|_| nj.sample(&mut rng)).collect();
        let sk: Vec<f64> = (0..t).map(|_| nk.sample(&mut rng)).collect();
        let emp = outperformance_probability(&sj, &sk, OutperformanceMethod::Empirical).unwrap();
        let gau = outperformance_probability(&sj, &sk, OutperformanceMethod::Gaussian).unwrap();
        assert!((emp - gau).abs() < 0.01, "{emp} vs {gau}");
    }

    fn matrix(e: Vec<Vec<f64>>) -> DistanceMatrix {
        let n = e.len();
        DistanceMatrix {
            ids: (0..n).map(|j| j.to_string()).collect(),
            d0: vec![0.0; n],
            e,
            metadata: vec![],
        }
    }

    #[test]
    fn p_value_examples() {
        let a = matrix(vec![vec![0.1, 0.2, 0.3, 0.4], vec![0.0, 0.5, 0.1, 0.2]]);
        for order in [HoelderOrder::One, HoelderOrder::Two, HoelderOrder::Max] {
            assert_eq!(scenario_p_value(&a, &a, order).unwrap(), 1.0);
        }
        let b = matrix(vec![vec![0.2, 0.3, 0.4, 0.5], vec![0.1, 0.6, 0.2, 0.3]]);
        assert_eq!(scenario_p_value(&b, &a, HoelderOrder::One).unwrap(), 0.0);
        // Column ratios 1.1, 0.9, 1.2, 1.3.
        let num = matrix(vec![vec![1.1, 0.9, 1.2, 1.3]]);
        let den = matrix(vec![vec![1.0; 4]]);
        assert_eq!(scenario_p_value(&num, &den, HoelderOrder::One).unwrap(), 0.5);
        // Zero denominators.
        let z = matrix(vec![vec![0.0, 0.0]]);
        let nz = matrix(vec![vec![0.1, 0.0]]);
        assert_eq!(scenario_p_value(&nz, &z, HoelderOrder::One).unwrap(), 1.0);
        let shape = matrix(vec![vec![0.1; 3]]);
        assert!(scenario_p_value(&shape, &a, HoelderOrder::One).is_err());
    }

    #[test]
    fn beta_fit_examples() {
        let f = BetaFit { alpha: 2.0, beta: 2.0, q1: 0.0, q2: 1.0 };
        assert_eq!(beta_expected_distance(&f), 0.5);
        let f = BetaFit { alpha: 3.0, beta: 7.0, q1: 0.0, q2: 1.0 };
        assert_abs_diff_eq!(beta_expected_distance(&f), 0.3, epsilon = 1e-15);

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let law = Beta::new(5.0, 10.0).unwrap();
        let samples: Vec<f64> = (0..10_000).map(|_| law.sample(&mut rng)).collect();
        let fit = fit_beta(&samples, BetaSupport::Fixed(0.0, 1.0)).unwrap();
        assert!((fit.alpha - 5.0).abs() < 0.5, "alpha {}", fit.alpha);
        assert!((fit.beta - 10.0).abs() < 1.0, "beta {}", fit.beta);
        assert!(ks_statistic(&samples, &fit) < 0.02);

        let ranged = fit_beta(&samples, BetaSupport::SampleRange).unwrap();
        assert_eq!(ranged.q1, samples.iter().cloned().fold(f64::INFINITY, f64::min));
        assert!(fit_beta(&[0.2; 50], BetaSupport::SampleRange).is_err());
    }

    #[test]
    fn beta_density_integrates_to_one() {
        let f = BetaFit { alpha: 3.0, beta: 5.0, q1: 0.1, q2: 0.6 };
        let curve = f.density_curve(20_001);
        let h = curve[1].0 - curve[0].0;
        let area: f64 = curve.windows(2).map(|w| 0.5 * (w[0].1 + w[1].1) * h).sum();
        assert_abs_diff_eq!(area, 1.0, epsilon = 1e-6);
        assert_abs_diff_eq!(f.cdf(0.6), 1.0);
    }

    #[test]
    fn beta_to_gaussian_values() {
        let (rho, sigma) = beta_to_gaussian(1095.5, 3201.2);
        assert_abs_diff_eq!(rho, 0.2550, epsilon = 5e-5);
        assert_abs_diff_eq!(sigma, 0.0066, epsilon = 2e-4);
        assert_eq!(beta_to_gaussian(4.0, 4.0).0, 0.5);
        assert_abs_diff_eq!(beta_to_gaussian(807.4, 1961.5).0, 0.2916, epsilon = 5e-5);
    }

    #[test]
    fn report_row_for_zero_row_is_c1() {
        let m = matrix(vec![vec![0.0; 100], (0..100).map(|i| 0.1 + i as f64 * 1e-3).collect()]);
        let r = analyze(&m, 0.95, DEFAULT_WIDTH).unwrap();
        assert_eq!(r.rows[0].erii0, 1.0);
        assert_eq!(r.rows[0].category, Category::C1);
        assert_eq!(r.rows[0].e_theta, 1.0);
        assert_eq!(r.rows[1].category, Category::C4);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.contains("dmu,ERII0,E(D),LB,UB,sqrt(Var(D)),E(Theta),Category\n"));
    }

    fn sample_rows() -> impl Strategy<Value = Vec<f64>> {
        let value = prop_oneof![
            3 => Just(0.0),
            1 => 1e-10f64..1e-9,
            6 => 0.0f64..0.8,
        ];
        prop::collection::vec(value, 40..300)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(200))]

        #[test]
        fn erii_sums_to_total(samples in sample_rows(), width in 0.001f64..0.2) {
            let max = samples.iter().cloned().fold(0.0, f64::max);
            let s = scheme(width, max);
            let e = erii(&samples, &s).unwrap();
            prop_assert_eq!(e.counts.iter().sum::<u64>(), e.total);
            prop_assert_eq!(e.counts.len(), s.buckets + 1);
            let mean = samples.iter().sum::<f64>() / samples.len() as f64;
            prop_assert!((expected_distance(&e, &s) - mean).abs() <= width / 2.0 + 1e-12);
        }

        #[test]
        fn every_row_gets_one_category(
            rows in prop::collection::vec(sample_rows(), 1..6),
            tau in 0.5f64..0.99,
        ) {
            let t = rows.iter().map(Vec::len).min().unwrap();
            let rows: Vec<Vec<f64>> = rows.into_iter().map(|r| r[..t].to_vec()).collect();
            prop_assume!(ci_indices(t, tau).is_ok());
            let report = analyze(&matrix(rows), tau, 0.01).unwrap();
            for r in &report.rows {
                let fired = [
                    r.erii0 >= 1.0,
                    r.erii0 >= tau && r.erii0 < 1.0,
                    r.erii0 < tau && r.lb < ZERO_TOL && r.ub >= ZERO_TOL,
                    r.erii0 < tau && r.lb >= ZERO_TOL && r.e_d > 0.0,
                ];
                prop_assert!(fired.iter().filter(|f| **f).count() <= 1);
                prop_assert!(r.lb <= r.ub);
                prop_assert!(r.e_theta > 0.0 && r.e_theta <= 1.0);
                prop_assert!((0.0..=1.0).contains(&r.erii0));
            }
        }

        #[test]
        fn p_value_symmetric(
            a in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 20), 3),
            b in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 20), 3),
        ) {
            let (ma, mb) = (matrix(a), matrix(b));
            for order in [HoelderOrder::One, HoelderOrder::Two, HoelderOrder::Max] {
                let p1 = scenario_p_value(&ma, &mb, order).unwrap();
                let p2 = scenario_p_value(&mb, &ma, order).unwrap();
                prop_assert_eq!(p1, p2);
                prop_assert!((0.0..=1.0).contains(&p1));
                prop_assert_eq!(scenario_p_value(&ma, &ma, order).unwrap(), 1.0);
            }
        }

        #[test]
        fn expected_efficiency_matches_score_without_spread(rho in 0.0f64..1.0) {
            prop_assert_eq!(expected_efficiency(rho, 0.0), efficiency_score_proportional(rho));
        }

        #[test]
        fn bucket_index_matches_bounds(d in 1e-9f64..5.0, width in 0.001f64..0.5) {
            let s = scheme(width, d);
            let g = s.index(d);
            let (lo, hi) = s.bounds(g);
            prop_assert!(d > lo && d <= hi);
            prop_assert!(g <= s.buckets);
        }
    }

    #[test]
    fn scheme_rejects_bad_width() {
        assert!(BucketScheme::covering(0.0, 1.0).is_err());
        assert!(BucketScheme::covering(-0.1, 1.0).is_err());
    }
}
