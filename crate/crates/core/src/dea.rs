//! Directional DEA programs under variable returns to scale.
//!
//! Two technologies are supported:
//!
//! * [`DeaModel::Directional`]: all variables freely disposable. Undesirable
//!   outputs, when present, are treated like inputs.
//! * [`DeaModel::WeakDisposability`]: undesirable outputs can only be reduced
//!   together with desirable outputs. Intensities split into `α` (units
//!   operated at full activity) and `β` (units whose outputs are abated).
//!
//! The distance `D` is maximized first. Slacks are maximized afterwards over
//! the `D`-optimal face, so the reported `D` never depends on `ε`.

use thiserror::Error;

use crate::dataset::{DataError, DataSet, Dims, Direction};
use crate::lp::{lp_solve_lexicographic, LpError, LpProblem, Relation};

#[derive(Debug, Error)]
pub enum DeaError {
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("LP failure for DMU {dmu}: {source}")]
    Lp { dmu: usize, source: LpError },
    #[error(
        "dataset has {0} masked cells; use the Hit & Run pipeline or impute the gaps first"
    )]
    Masked(usize),
    #[error("{0}")]
    Usage(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeaModel {
    Directional,
    WeakDisposability,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeaOptions {
    /// Weight of the slack sum in the reported objective.
    pub epsilon: f64,
    /// Run the second (slack) stage. Without it `D` is unchanged but the
    /// slacks are those of whichever `D`-optimal vertex the solver found.
    pub maximize_slacks: bool,
}

impl Default for DeaOptions {
    fn default() -> Self {
        Self {
            epsilon: 1e-6,
            maximize_slacks: true,
        }
    }
}

impl DeaOptions {
    pub fn distance_only() -> Self {
        Self {
            maximize_slacks: false,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeaSolution {
    /// Radial distance `D ≥ 0`, excluding the slack term.
    pub distance: f64,
    /// Intensities `μ` (directional model) or `α` (weak disposability).
    pub mu: Vec<f64>,
    /// Abatement intensities `β`; empty for the directional model.
    pub beta: Vec<f64>,
    pub slacks_x: Vec<f64>,
    pub slacks_y: Vec<f64>,
    /// Slacks on undesirable outputs; only the directional model has them.
    pub slacks_u: Vec<f64>,
    pub targets_x: Vec<f64>,
    pub targets_y: Vec<f64>,
    pub targets_u: Vec<f64>,
    /// `D + ε·Σ slacks`.
    pub objective: f64,
}

impl DeaSolution {
    pub fn slack_sum(&self) -> f64 {
        self.slacks_x.iter().chain(&self.slacks_y).chain(&self.slacks_u).sum()
    }
}

fn require_complete(data: &DataSet) -> Result<(), DeaError> {
    match data.missing_count() {
        0 => Ok(()),
        c => Err(DeaError::Masked(c)),
    }
}

pub fn solve_directional(
    data: &DataSet,
    k: usize,
    dir: &Direction,
    opts: &DeaOptions,
) -> Result<DeaSolution, DeaError> {
    solve_dataset(data, k, dir, DeaModel::Directional, opts)
}

pub fn solve_weak_disposability(
    data: &DataSet,
    k: usize,
    dir: &Direction,
    opts: &DeaOptions,
) -> Result<DeaSolution, DeaError> {
    solve_dataset(data, k, dir, DeaModel::WeakDisposability, opts)
}

pub fn solve_dataset(
    data: &DataSet,
    k: usize,
    dir: &Direction,
    model: DeaModel,
    opts: &DeaOptions,
) -> Result<DeaSolution, DeaError> {
    require_complete(data)?;
    if k >= data.n() {
        return Err(DeaError::Usage(format!(
            "DMU index {k} out of range for {} DMUs",
            data.n()
        )));
    }
    let delta = dir.resolve(data.point(k), data.dims())?;
    solve_points(data.points(), data.dims(), k, &delta, model, opts)
}

/// Distances of every DMU against the full sample.
pub fn solve_all(
    data: &DataSet,
    dir: &Direction,
    model: DeaModel,
    opts: &DeaOptions,
) -> Result<Vec<f64>, DeaError> {
    (0..data.n())
        .map(|k| solve_dataset(data, k, dir, model, opts).map(|s| s.distance))
        .collect()
}

/// Evaluates `points[k]` along `delta` against the frontier spanned by all
/// of `points` (including `points[k]` itself).
pub fn solve_points(
    points: &[Vec<f64>],
    dims: Dims,
    k: usize,
    delta: &[f64],
    model: DeaModel,
    opts: &DeaOptions,
) -> Result<DeaSolution, DeaError> {
    let z = dims.total();
    if delta.len() != z || points.iter().any(|p| p.len() != z) {
        return Err(DeaError::Usage(format!(
            "dimension mismatch: expected {z} variables per point and direction"
        )));
    }
    if model == DeaModel::WeakDisposability && dims.undesirables == 0 {
        return Err(DeaError::Usage(
            "weak disposability needs at least one undesirable output; use the directional model"
                .into(),
        ));
    }
    // D scales inversely with δ; a unit-norm direction keeps tiny
    // components clear of the pivot tolerance.
    let scale = delta.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(DeaError::Usage("direction must have a non-zero finite component".into()));
    }
    let unit: Vec<f64> = delta.iter().map(|v| v / scale).collect();
    let mut sol = match model {
        DeaModel::Directional => directional(points, dims, k, &unit, opts),
        DeaModel::WeakDisposability => weak(points, dims, k, &unit, opts),
    }?;
    sol.distance /= scale;
    sol.objective = sol.distance + opts.epsilon * sol.slack_sum();
    Ok(sol)
}

fn directional(
    points: &[Vec<f64>],
    dims: Dims,
    k: usize,
    delta: &[f64],
    opts: &DeaOptions,
) -> Result<DeaSolution, DeaError> {
    let n = points.len();
    let z = dims.total();
    let m = dims.inputs;
    let s = dims.outputs;
    // Columns: μ (n), D, one slack per variable (z).
    let d_col = n;
    let nv = n + 1 + z;
    let mut objective = vec![0.0; nv];
    objective[d_col] = 1.0;
    let mut lp = LpProblem::new(objective);
    let xk = &points[k];
    for l in 0..z {
        let mut row = vec![0.0; nv];
        for (j, p) in points.iter().enumerate() {
            row[j] = p[l];
        }
        let is_output = (m..m + s).contains(&l);
        if is_output {
            // Σμy − Dδy − γy = yᵏ
            row[d_col] = -delta[l];
            row[n + 1 + l] = -1.0;
        } else {
            // Σμx + Dδx + γx = xᵏ
            row[d_col] = delta[l];
            row[n + 1 + l] = 1.0;
        }
        lp.add_constraint(row, Relation::Eq, xk[l]);
    }
    let mut conv = vec![0.0; nv];
    conv[..n].fill(1.0);
    lp.add_constraint(conv, Relation::Eq, 1.0);

    let x = run(&lp, n + 1..nv, k, opts)?;
    let distance = x[d_col].max(0.0);
    let slack = |r: std::ops::Range<usize>| -> Vec<f64> {
        r.map(|l| x[n + 1 + l].max(0.0)).collect()
    };
    let slacks_x = slack(dims.input_range());
    let slacks_y = slack(dims.output_range());
    let slacks_u = slack(dims.undesirable_range());
    let targets_x = dims
        .input_range()
        .map(|l| xk[l] - distance * delta[l] - x[n + 1 + l])
        .collect();
    let targets_y = dims
        .output_range()
        .map(|l| xk[l] + distance * delta[l] + x[n + 1 + l])
        .collect();
    let targets_u = dims
        .undesirable_range()
        .map(|l| xk[l] - distance * delta[l] - x[n + 1 + l])
        .collect();
    let mut sol = DeaSolution {
        distance,
        mu: x[..n].to_vec(),
        beta: Vec::new(),
        slacks_x,
        slacks_y,
        slacks_u,
        targets_x,
        targets_y,
        targets_u,
        objective: 0.0,
    };
    sol.objective = sol.distance + opts.epsilon * sol.slack_sum();
    Ok(sol)
}

fn weak(
    points: &[Vec<f64>],
    dims: Dims,
    k: usize,
    delta: &[f64],
    opts: &DeaOptions,
) -> Result<DeaSolution, DeaError> {
    let n = points.len();
    let m = dims.inputs;
    let s = dims.outputs;
    // Columns: α (n), β (n), D, γx (m), γy (s).
    let d_col = 2 * n;
    let nv = 2 * n + 1 + m + s;
    let mut objective = vec![0.0; nv];
    objective[d_col] = 1.0;
    let mut lp = LpProblem::new(objective);
    let xk = &points[k];
    for l in dims.input_range() {
        let mut row = vec![0.0; nv];
        for (j, p) in points.iter().enumerate() {
            row[j] = p[l];
            row[n + j] = p[l];
        }
        row[d_col] = delta[l];
        row[d_col + 1 + l] = 1.0;
        lp.add_constraint(row, Relation::Eq, xk[l]);
    }
    for l in dims.output_range() {
        let mut row = vec![0.0; nv];
        for (j, p) in points.iter().enumerate() {
            row[j] = p[l];
        }
        row[d_col] = -delta[l];
        row[d_col + 1 + l] = -1.0;
        lp.add_constraint(row, Relation::Eq, xk[l]);
    }
    for l in dims.undesirable_range() {
        let mut row = vec![0.0; nv];
        for (j, p) in points.iter().enumerate() {
            row[j] = p[l];
        }
        row[d_col] = delta[l];
        lp.add_constraint(row, Relation::Eq, xk[l]);
    }
    let mut conv = vec![0.0; nv];
    conv[..2 * n].fill(1.0);
    lp.add_constraint(conv, Relation::Eq, 1.0);

    let x = run(&lp, d_col + 1..nv, k, opts)?;
    let distance = x[d_col].max(0.0);
    let gx: Vec<f64> = (0..m).map(|i| x[d_col + 1 + i].max(0.0)).collect();
    let gy: Vec<f64> = (0..s).map(|r| x[d_col + 1 + m + r].max(0.0)).collect();
    let targets_x = dims
        .input_range()
        .map(|l| xk[l] - distance * delta[l] - gx[l])
        .collect();
    let targets_y = dims
        .output_range()
        .map(|l| xk[l] + distance * delta[l] + gy[l - m])
        .collect();
    let targets_u = dims
        .undesirable_range()
        .map(|l| xk[l] - distance * delta[l])
        .collect();
    let mut sol = DeaSolution {
        distance,
        mu: x[..n].to_vec(),
        beta: x[n..2 * n].to_vec(),
        slacks_x: gx,
        slacks_y: gy,
        slacks_u: Vec::new(),
        targets_x,
        targets_y,
        targets_u,
        objective: 0.0,
    };
    sol.objective = sol.distance + opts.epsilon * sol.slack_sum();
    Ok(sol)
}

fn run(
    lp: &LpProblem,
    slack_cols: std::ops::Range<usize>,
    k: usize,
    opts: &DeaOptions,
) -> Result<Vec<f64>, DeaError> {
    let secondary = if opts.maximize_slacks {
        let mut obj = vec![0.0; lp.num_vars()];
        obj[slack_cols].fill(1.0);
        vec![obj]
    } else {
        Vec::new()
    };
    lp_solve_lexicographic(lp, &secondary)
        .map(|(sol, _)| sol.x)
        .map_err(|source| DeaError::Lp { dmu: k, source })
}

/// Bounds of the distance of one DMU when every cell may vary in its interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalBounds {
    pub low: f64,
    pub high: f64,
}

/// Best- and worst-case distances under interval data.
///
/// `high` evaluates the DMU at its worst (largest inputs, smallest outputs)
/// against every other DMU at its best; `low` is the mirror case. The
/// evaluated observation always belongs to its own reference set, exactly
/// as in the sampling pipeline, so every sampled distance lies in
/// `[low, high]`. Only technologies without undesirable outputs are
/// supported.
pub fn interval_dea_bounds(
    dims: Dims,
    lower: &[Vec<f64>],
    upper: &[Vec<f64>],
    k: usize,
    dir: &Direction,
    opts: &DeaOptions,
) -> Result<IntervalBounds, DeaError> {
    if dims.undesirables > 0 {
        return Err(DeaError::Usage(
            "interval bounds are only defined for inputs and desirable outputs".into(),
        ));
    }
    let n = lower.len();
    let z = dims.total();
    if upper.len() != n || k >= n {
        return Err(DeaError::Usage(format!(
            "interval matrices have {} and {} rows; DMU index {k}",
            lower.len(),
            upper.len()
        )));
    }
    for j in 0..n {
        if lower[j].len() != z || upper[j].len() != z {
            return Err(DeaError::Usage(format!("DMU {j}: expected {z} values")));
        }
        for l in 0..z {
            let (lo, hi) = (lower[j][l], upper[j][l]);
            if !(lo.is_finite() && hi.is_finite()) || lo > hi || lo < 0.0 {
                return Err(DataError::Validation(format!(
                    "DMU {j}, variable {l}: invalid interval [{lo}, {hi}]"
                ))
                .into());
            }
        }
    }
    let best = |j: usize| -> Vec<f64> {
        (0..z)
            .map(|l| match dims.role(l) {
                crate::dataset::Role::Output => upper[j][l],
                _ => lower[j][l],
            })
            .collect()
    };
    let worst = |j: usize| -> Vec<f64> {
        (0..z)
            .map(|l| match dims.role(l) {
                crate::dataset::Role::Output => lower[j][l],
                _ => upper[j][l],
            })
            .collect()
    };
    let scenario = |others: &dyn Fn(usize) -> Vec<f64>, own: Vec<f64>| -> Result<f64, DeaError> {
        let mut pts: Vec<Vec<f64>> = (0..n).map(others).collect();
        pts[k] = own;
        let delta = dir.resolve(&pts[k], dims)?;
        solve_points(&pts, dims, k, &delta, DeaModel::Directional, opts).map(|s| s.distance)
    };
    let low = scenario(&worst, best(k))?;
    let high = scenario(&best, worst(k))?;
    Ok(IntervalBounds { low, high })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn pair(points: Vec<Vec<f64>>, dims: Dims) -> DataSet {
        DataSet::from_points(dims, points).unwrap()
    }

    /// Brute force over μ_A on a 0.01 grid for two single-input,
    /// single-output DMUs: largest D with μx + Dδx ≤ xᵏ and μy ≥ yᵏ.
    fn grid_two_dmu_input(a: (f64, f64), b: (f64, f64), k: usize) -> f64 {
        let (xk, yk) = if k == 0 { a } else { b };
        let mut best = f64::NEG_INFINITY;
        for i in 0..=100 {
            let ma = i as f64 / 100.0;
            let mb = 1.0 - ma;
            let x = ma * a.0 + mb * b.0;
            let y = ma * a.1 + mb * b.1;
            if y + 1e-12 >= yk {
                best = best.max((xk - x) / xk);
            }
        }
        best
    }

    /// Brute force over (α_A, α_B, β_A, β_B) on a 0.05 simplex grid.
    fn grid_weak(pts: &[[f64; 3]; 2], k: usize) -> f64 {
        let [xk, yk, uk] = pts[k];
        let steps = 20;
        let mut best = f64::NEG_INFINITY;
        for a0 in 0..=steps {
            for a1 in 0..=steps - a0 {
                for b0 in 0..=steps - a0 - a1 {
                    let b1 = steps - a0 - a1 - b0;
                    let w = |c: usize| c as f64 / steps as f64;
                    let (a0, a1, b0, b1) = (w(a0), w(a1), w(b0), w(b1));
                    let x = (a0 + b0) * pts[0][0] + (a1 + b1) * pts[1][0];
                    let y = a0 * pts[0][1] + a1 * pts[1][1];
                    let u = a0 * pts[0][2] + a1 * pts[1][2];
                    // δ = (0, 0, uᵏ): the equality on u fixes D.
                    let d = (uk - u) / uk;
                    if x <= xk + 1e-12 && y + 1e-12 >= yk && d >= -1e-12 {
                        best = best.max(d);
                    }
                }
            }
        }
        best
    }

    #[test]
    fn single_dmu_is_efficient() {
        let data = pair(vec![vec![3.0, 2.0]], Dims::new(1, 1, 0));
        let sol = solve_directional(&data, 0, &Direction::Proportional, &DeaOptions::default())
            .unwrap();
        assert_abs_diff_eq!(sol.distance, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.mu[0], 1.0, epsilon = 1e-12);

        let data = pair(vec![vec![3.0, 2.0, 1.0]], Dims::new(1, 1, 1));
        let sol =
            solve_weak_disposability(&data, 0, &Direction::Proportional, &DeaOptions::default())
                .unwrap();
        assert_abs_diff_eq!(sol.distance, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.mu[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(sol.beta[0], 0.0, epsilon = 1e-12);
    }

    #[test]
    fn two_dmu_input_orientation_matches_grid() {
        let a = (1.0, 1.0);
        let b = (2.0, 1.0);
        let oracle = [grid_two_dmu_input(a, b, 0), grid_two_dmu_input(a, b, 1)];
        assert_abs_diff_eq!(oracle[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle[1], 0.5, epsilon = 1e-12);

        let data = pair(vec![vec![a.0, a.1], vec![b.0, b.1]], Dims::new(1, 1, 0));
        let opts = DeaOptions::default();
        let sa = solve_directional(&data, 0, &Direction::Input, &opts).unwrap();
        let sb = solve_directional(&data, 1, &Direction::Input, &opts).unwrap();
        assert_abs_diff_eq!(sa.distance, oracle[0], epsilon = 1e-9);
        assert_abs_diff_eq!(sb.distance, oracle[1], epsilon = 1e-9);
        assert_abs_diff_eq!(sb.mu[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sb.slacks_x[0], 0.0, epsilon = 1e-9);
    }

    #[test]
    fn weak_disposability_matches_grid() {
        let pts = [[1.0, 1.0, 1.0], [1.0, 1.0, 2.0]];
        let oracle = [grid_weak(&pts, 0), grid_weak(&pts, 1)];
        assert_abs_diff_eq!(oracle[0], 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(oracle[1], 0.5, epsilon = 1e-12);

        let data = pair(pts.iter().map(|p| p.to_vec()).collect(), Dims::new(1, 1, 1));
        let opts = DeaOptions::default();
        for k in 0..2 {
            let sol = solve_weak_disposability(&data, k, &Direction::Undesirable, &opts).unwrap();
            assert_abs_diff_eq!(sol.distance, oracle[k], epsilon = 1e-9);
            let total: f64 = sol.mu.iter().chain(&sol.beta).sum();
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn weak_model_rejects_missing_undesirables() {
        let data = pair(vec![vec![1.0, 1.0]], Dims::new(1, 1, 0));
        let err = solve_weak_disposability(&data, 0, &Direction::Input, &DeaOptions::default());
        assert!(matches!(err, Err(DeaError::Usage(_))));
    }

    #[test]
    fn masked_data_is_rejected() {
        let data = pair(vec![vec![1.0, 1.0], vec![2.0, 1.0]], Dims::new(1, 1, 0)).with_masked(1, 0);
        let err = solve_directional(&data, 0, &Direction::Input, &DeaOptions::default());
        assert!(matches!(err, Err(DeaError::Masked(1))));
    }

    #[test]
    fn interval_bounds_fixture() {
        let dims = Dims::new(1, 1, 0);
        let lower = vec![vec![1.0, 1.0], vec![1.5, 1.0]];
        let upper = vec![vec![1.0, 1.0], vec![2.5, 1.0]];
        let opts = DeaOptions::default();
        let b = interval_dea_bounds(dims, &lower, &upper, 1, &Direction::Input, &opts).unwrap();
        assert_abs_diff_eq!(b.low, 1.0 - 1.0 / 1.5, epsilon = 1e-9);
        assert_abs_diff_eq!(b.high, 0.6, epsilon = 1e-9);
        let a = interval_dea_bounds(dims, &lower, &upper, 0, &Direction::Input, &opts).unwrap();
        assert_abs_diff_eq!(a.low, 0.0, epsilon = 1e-9);
        assert_abs_diff_eq!(a.high, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn degenerate_intervals_match_plain_dea() {
        let dims = Dims::new(2, 1, 0);
        let pts = vec![
            vec![2.0, 3.0, 1.0],
            vec![4.0, 1.0, 1.5],
            vec![3.0, 3.0, 1.2],
            vec![5.0, 5.0, 2.0],
        ];
        let data = DataSet::from_points(dims, pts.clone()).unwrap();
        let opts = DeaOptions::default();
        for k in 0..pts.len() {
            let plain = solve_directional(&data, k, &Direction::Proportional, &opts).unwrap();
            let b = interval_dea_bounds(dims, &pts, &pts, k, &Direction::Proportional, &opts)
                .unwrap();
            assert_abs_diff_eq!(b.low, plain.distance, epsilon = 1e-12);
            assert_abs_diff_eq!(b.high, plain.distance, epsilon = 1e-12);
        }
    }

    #[test]
    fn crossed_interval_is_rejected() {
        let dims = Dims::new(1, 1, 0);
        let lower = vec![vec![2.0, 1.0]];
        let upper = vec![vec![1.0, 1.0]];
        let err = interval_dea_bounds(dims, &lower, &upper, 0, &Direction::Input, &Default::default());
        assert!(matches!(err, Err(DeaError::Data(DataError::Validation(_)))));
    }

    #[test]
    fn slack_stage_keeps_distance() {
        // B is radially projected onto A's input level but keeps an output slack.
        let data = pair(
            vec![vec![1.0, 2.0], vec![2.0, 1.0]],
            Dims::new(1, 1, 0),
        );
        let sol = solve_directional(&data, 1, &Direction::Input, &DeaOptions::default()).unwrap();
        assert_abs_diff_eq!(sol.distance, 0.5, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.slacks_y[0], 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(sol.objective, 0.5 + 1e-6, epsilon = 1e-12);
        let fast = solve_directional(&data, 1, &Direction::Input, &DeaOptions::distance_only())
            .unwrap();
        assert_abs_diff_eq!(fast.distance, sol.distance, epsilon = 1e-12);
    }

    fn instance() -> impl Strategy<Value = (Dims, Vec<Vec<f64>>)> {
        (1usize..=3, 1usize..=2, 0usize..=1, 2usize..=12).prop_flat_map(|(m, s, v, n)| {
            let dims = Dims::new(m, s, v);
            prop::collection::vec(prop::collection::vec(0.5f64..20.0, dims.total()), n)
                .prop_map(move |pts| (dims, pts))
        })
    }

    fn check_solution(sol: &DeaSolution, pts: &[Vec<f64>], dims: Dims, k: usize, delta: &[f64]) {
        let weak = !sol.beta.is_empty();
        let total: f64 = sol.mu.iter().chain(&sol.beta).sum();
        assert!((total - 1.0).abs() < 1e-9, "intensities sum to {total}");
        for v in sol.mu.iter().chain(&sol.beta).chain(&sol.slacks_x).chain(&sol.slacks_y) {
            assert!(*v >= -1e-9);
        }
        assert!(sol.distance >= 0.0);
        for (i, l) in dims.input_range().enumerate() {
            let used: f64 = (0..pts.len())
                .map(|j| (sol.mu[j] + if weak { sol.beta[j] } else { 0.0 }) * pts[j][l])
                .sum();
            assert!((used - sol.targets_x[i]).abs() < 1e-7);
            assert!(sol.targets_x[i] <= pts[k][l] - sol.distance * delta[l] + 1e-7);
        }
        for (r, l) in dims.output_range().enumerate() {
            let made: f64 = (0..pts.len()).map(|j| sol.mu[j] * pts[j][l]).sum();
            assert!((made - sol.targets_y[r]).abs() < 1e-7);
        }
        for (h, l) in dims.undesirable_range().enumerate() {
            let emitted: f64 = (0..pts.len()).map(|j| sol.mu[j] * pts[j][l]).sum();
            assert!((emitted - sol.targets_u[h]).abs() < 1e-7);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn solutions_satisfy_constraints((dims, pts) in instance(), k in 0usize..12) {
            let k = k % pts.len();
            let delta = Direction::Proportional.resolve(&pts[k], dims).unwrap();
            let opts = DeaOptions::default();
            let sol = solve_points(&pts, dims, k, &delta, DeaModel::Directional, &opts).unwrap();
            check_solution(&sol, &pts, dims, k, &delta);
            if dims.undesirables > 0 {
                let sol = solve_points(&pts, dims, k, &delta, DeaModel::WeakDisposability, &opts)
                    .unwrap();
                check_solution(&sol, &pts, dims, k, &delta);
            }
        }

        #[test]
        fn proportional_direction_is_units_invariant(
            (dims, pts) in instance(),
            var in 0usize..4,
            scale in 0.01f64..100.0,
        ) {
            let var = var % dims.total();
            let scaled: Vec<Vec<f64>> = pts
                .iter()
                .map(|p| {
                    let mut q = p.clone();
                    q[var] *= scale;
                    q
                })
                .collect();
            let opts = DeaOptions::distance_only();
            for model in [DeaModel::Directional, DeaModel::WeakDisposability] {
                if model == DeaModel::WeakDisposability && dims.undesirables == 0 {
                    continue;
                }
                for k in 0..pts.len() {
                    let d0 = Direction::Proportional.resolve(&pts[k], dims).unwrap();
                    let d1 = Direction::Proportional.resolve(&scaled[k], dims).unwrap();
                    let a = solve_points(&pts, dims, k, &d0, model, &opts).unwrap().distance;
                    let b = solve_points(&scaled, dims, k, &d1, model, &opts).unwrap().distance;
                    prop_assert!((a - b).abs() < 1e-9, "{model:?} k={k}: {a} vs {b}");
                }
            }
        }

        #[test]
        fn dominated_dmu_has_positive_distance(
            (dims, pts) in instance(),
            shrink in 0.5f64..0.95,
        ) {
            // Append a copy of DMU 0 with every input and undesirable larger
            // and every output smaller.
            let mut pts = pts;
            let worse: Vec<f64> = (0..dims.total())
                .map(|l| match dims.role(l) {
                    crate::dataset::Role::Output => pts[0][l] * shrink,
                    _ => pts[0][l] / shrink,
                })
                .collect();
            pts.push(worse);
            let k = pts.len() - 1;
            let delta = Direction::Proportional.resolve(&pts[k], dims).unwrap();
            let d = solve_points(&pts, dims, k, &delta, DeaModel::Directional, &DeaOptions::default())
                .unwrap()
                .distance;
            prop_assert!(d > 1e-6, "dominated DMU got D = {d}");
        }

        #[test]
        fn epsilon_does_not_move_distance(
            (dims, pts) in instance(),
            eps in 1e-8f64..1e-5,
        ) {
            for k in 0..pts.len() {
                let delta = Direction::Proportional.resolve(&pts[k], dims).unwrap();
                let base = solve_points(&pts, dims, k, &delta, DeaModel::Directional, &DeaOptions::default())
                    .unwrap();
                let opts = DeaOptions { epsilon: eps, maximize_slacks: true };
                let other = solve_points(&pts, dims, k, &delta, DeaModel::Directional, &opts).unwrap();
                prop_assert!((base.distance - other.distance).abs() < 1e-9);
            }
        }
    }
}
