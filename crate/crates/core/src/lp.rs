//! Dense two-phase primal simplex.
//!
//! Problems are stated as maximization over variables with finite lower
//! bounds. Entering and leaving variables follow Bland's rule, so the
//! method terminates on degenerate instances. The DEA programs built in
//! [`crate::dea`] have a handful of rows and at most a few hundred columns,
//! which is the regime a dense tableau handles well.
//!
//! [`lp_solve_lexicographic`] optimizes a sequence of objectives, each one
//! restricted to the optimal face of the previous ones.

use thiserror::Error;

const PIVOT_TOL: f64 = 1e-11;
const COST_TOL: f64 = 1e-10;
const FEAS_TOL: f64 = 1e-8;
const MAX_PIVOTS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("malformed linear program: {0}")]
    Malformed(String),
    #[error("simplex exceeded {0} pivots")]
    PivotLimit(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub coeffs: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// `maximize objective·x` subject to `constraints`, `x ≥ lower_bounds`.
#[derive(Debug, Clone, PartialEq)]
pub struct LpProblem {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub lower_bounds: Vec<f64>,
}

impl LpProblem {
    /// A problem over `num_vars` variables, all bounded below by zero.
    pub fn new(objective: Vec<f64>) -> Self {
        let n = objective.len();
        Self {
            objective,
            constraints: Vec::new(),
            lower_bounds: vec![0.0; n],
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn add_constraint(&mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) {
        self.constraints.push(Constraint {
            coeffs,
            relation,
            rhs,
        });
    }

    pub fn with_constraint(mut self, coeffs: Vec<f64>, relation: Relation, rhs: f64) -> Self {
        self.add_constraint(coeffs, relation, rhs);
        self
    }

    fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if n == 0 {
            return Err(LpError::Malformed("no variables".into()));
        }
        if self.lower_bounds.len() != n {
            return Err(LpError::Malformed(format!(
                "{} lower bounds for {} variables",
                self.lower_bounds.len(),
                n
            )));
        }
        if self.objective.iter().any(|c| !c.is_finite())
            || self.lower_bounds.iter().any(|l| !l.is_finite())
        {
            return Err(LpError::Malformed("non-finite objective or bound".into()));
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coeffs.len() != n {
                return Err(LpError::Malformed(format!(
                    "constraint {i} has {} coefficients, expected {n}",
                    c.coeffs.len()
                )));
            }
            if !c.rhs.is_finite() || c.coeffs.iter().any(|a| !a.is_finite()) {
                return Err(LpError::Malformed(format!("constraint {i} is not finite")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    /// Optimal value of the primary objective.
    pub objective: f64,
}

pub fn lp_solve(problem: &LpProblem) -> Result<LpSolution, LpError> {
    lp_solve_lexicographic(problem, &[]).map(|(sol, _)| sol)
}

/// Optimizes `problem.objective`, then each of `secondary` in turn over the
/// optimal face of everything before it. Returns the solution and the value
/// reached by each secondary objective.
pub fn lp_solve_lexicographic(
    problem: &LpProblem,
    secondary: &[Vec<f64>],
) -> Result<(LpSolution, Vec<f64>), LpError> {
    problem.validate()?;
    let n = problem.num_vars();
    for (i, obj) in secondary.iter().enumerate() {
        if obj.len() != n {
            return Err(LpError::Malformed(format!(
                "secondary objective {i} has {} coefficients, expected {n}",
                obj.len()
            )));
        }
    }

    let mut tableau = Tableau::build(problem);
    tableau.phase_one()?;

    let mut objectives = Vec::with_capacity(1 + secondary.len());
    objectives.push(problem.objective.clone());
    objectives.extend(secondary.iter().cloned());

    // Columns priced out by an earlier objective may not re-enter later.
    let mut barred = vec![false; tableau.cols];
    let mut values = Vec::with_capacity(objectives.len());
    for obj in &objectives {
        let mut costs = vec![0.0; tableau.cols];
        costs[..n].copy_from_slice(obj);
        tableau.optimize(&costs, &barred)?;
        let reduced = tableau.reduced_costs(&costs);
        for (j, r) in reduced.iter().enumerate() {
            if *r < -COST_TOL {
                barred[j] = true;
            }
        }
        values.push(tableau.objective_value(&costs));
    }

    let shifted = tableau.primal(n);
    let x: Vec<f64> = shifted
        .iter()
        .zip(&problem.lower_bounds)
        .map(|(v, lb)| v + lb)
        .collect();
    let objective = dot(&problem.objective, &x);
    let secondary_values = secondary.iter().map(|obj| dot(obj, &x)).collect();
    Ok((LpSolution { x, objective }, secondary_values))
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Row-major tableau `[A | b]` over structural, slack, and artificial
/// columns, with an explicit basis.
struct Tableau {
    rows: usize,
    cols: usize,
    /// Columns `first_artificial..cols` are artificial.
    first_artificial: usize,
    data: Vec<f64>,
    basis: Vec<usize>,
    active: Vec<bool>,
}

impl Tableau {
    fn build(problem: &LpProblem) -> Self {
        let n = problem.num_vars();
        let m = problem.constraints.len();

        // Shift to zero lower bounds and flip rows to non-negative rhs.
        let mut rows: Vec<(Vec<f64>, Relation, f64)> = problem
            .constraints
            .iter()
            .map(|c| {
                let shift: f64 = dot(&c.coeffs, &problem.lower_bounds);
                let mut coeffs = c.coeffs.clone();
                let mut rhs = c.rhs - shift;
                let mut rel = c.relation;
                if rhs < 0.0 {
                    coeffs.iter_mut().for_each(|a| *a = -*a);
                    rhs = -rhs;
                    rel = match rel {
                        Relation::Le => Relation::Ge,
                        Relation::Ge => Relation::Le,
                        Relation::Eq => Relation::Eq,
                    };
                }
                // Row equilibration; leaves the solution set unchanged.
                let scale = coeffs.iter().fold(rhs.abs(), |acc, a| acc.max(a.abs()));
                if scale > 0.0 {
                    coeffs.iter_mut().for_each(|a| *a /= scale);
                    rhs /= scale;
                }
                (coeffs, rel, rhs)
            })
            .collect();

        let n_slack = rows.iter().filter(|r| r.1 != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.1 != Relation::Le).count();
        let first_artificial = n + n_slack;
        let cols = first_artificial + n_art;
        let width = cols + 1;
        let mut data = vec![0.0; m * width];
        let mut basis = vec![0; m];
        let mut next_slack = n;
        let mut next_art = first_artificial;
        for (i, (coeffs, rel, rhs)) in rows.drain(..).enumerate() {
            let row = &mut data[i * width..(i + 1) * width];
            row[..n].copy_from_slice(&coeffs);
            row[cols] = rhs;
            match rel {
                Relation::Le => {
                    row[next_slack] = 1.0;
                    basis[i] = next_slack;
                    next_slack += 1;
                }
                Relation::Ge => {
                    row[next_slack] = -1.0;
                    next_slack += 1;
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
                Relation::Eq => {
                    row[next_art] = 1.0;
                    basis[i] = next_art;
                    next_art += 1;
                }
            }
        }
        Self {
            rows: m,
            cols,
            first_artificial,
            data,
            basis,
            active: vec![true; m],
        }
    }

    #[inline]
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * (self.cols + 1) + c]
    }

    #[inline]
    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.cols)
    }

    fn pivot(&mut self, pr: usize, pc: usize) {
        let width = self.cols + 1;
        let p = self.at(pr, pc);
        {
            let row = &mut self.data[pr * width..(pr + 1) * width];
            row.iter_mut().for_each(|v| *v /= p);
        }
        let pivot_row: Vec<f64> = self.data[pr * width..(pr + 1) * width].to_vec();
        for r in 0..self.rows {
            if r == pr || !self.active[r] {
                continue;
            }
            let f = self.at(r, pc);
            if f == 0.0 {
                continue;
            }
            let row = &mut self.data[r * width..(r + 1) * width];
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[pc] = 0.0;
        }
        self.basis[pr] = pc;
    }

    /// `c_j - c_B B^{-1} A_j` for every column.
    fn reduced_costs(&self, costs: &[f64]) -> Vec<f64> {
        let mut reduced = costs.to_vec();
        for r in 0..self.rows {
            if !self.active[r] {
                continue;
            }
            let cb = costs[self.basis[r]];
            if cb == 0.0 {
                continue;
            }
            for (j, red) in reduced.iter_mut().enumerate() {
                *red -= cb * self.at(r, j);
            }
        }
        reduced
    }

    fn objective_value(&self, costs: &[f64]) -> f64 {
        (0..self.rows)
            .filter(|&r| self.active[r])
            .map(|r| costs[self.basis[r]] * self.rhs(r))
            .sum()
    }

    /// Primal simplex with Bland's rule, maximizing `costs`.
    fn optimize(&mut self, costs: &[f64], barred: &[bool]) -> Result<(), LpError> {
        let mut is_basic = vec![false; self.cols];
        for r in 0..self.rows {
            if self.active[r] {
                is_basic[self.basis[r]] = true;
            }
        }
        for _ in 0..MAX_PIVOTS {
            let reduced = self.reduced_costs(costs);
            let entering = (0..self.cols)
                .find(|&j| !barred[j] && !is_basic[j] && reduced[j] > COST_TOL);
            let Some(pc) = entering else {
                return Ok(());
            };
            let mut leaving: Option<(usize, f64)> = None;
            for r in 0..self.rows {
                if !self.active[r] {
                    continue;
                }
                let a = self.at(r, pc);
                if a <= PIVOT_TOL {
                    continue;
                }
                let ratio = self.rhs(r).max(0.0) / a;
                leaving = match leaving {
                    None => Some((r, ratio)),
                    Some((br, bratio)) => {
                        let tie = (ratio - bratio).abs() <= 1e-12 * (1.0 + bratio.abs());
                        if ratio < bratio && !tie
                            || tie && self.basis[r] < self.basis[br]
                        {
                            Some((r, ratio))
                        } else {
                            Some((br, bratio))
                        }
                    }
                };
            }
            let Some((pr, _)) = leaving else {
                return Err(LpError::Unbounded);
            };
            is_basic[self.basis[pr]] = false;
            is_basic[pc] = true;
            self.pivot(pr, pc);
        }
        Err(LpError::PivotLimit(MAX_PIVOTS))
    }

    fn phase_one(&mut self) -> Result<(), LpError> {
        if self.first_artificial == self.cols {
            return Ok(());
        }
        let mut costs = vec![0.0; self.cols];
        costs[self.first_artificial..].iter_mut().for_each(|c| *c = -1.0);
        let none = vec![false; self.cols];
        self.optimize(&costs, &none)?;
        if self.objective_value(&costs) < -FEAS_TOL {
            return Err(LpError::Infeasible);
        }
        // Drive remaining (zero-valued) artificials out of the basis.
        for r in 0..self.rows {
            if !self.active[r] || self.basis[r] < self.first_artificial {
                continue;
            }
            let replacement = (0..self.first_artificial)
                .filter(|&j| !self.basis.contains(&j))
                .find(|&j| self.at(r, j).abs() > 1e-9);
            match replacement {
                Some(pc) => self.pivot(r, pc),
                // Redundant row.
                None => self.active[r] = false,
            }
        }
        // Artificial columns never re-enter.
        let width = self.cols + 1;
        for r in 0..self.rows {
            for c in self.first_artificial..self.cols {
                self.data[r * width + c] = 0.0;
            }
        }
        self.cols_limit_artificial();
        Ok(())
    }

    fn cols_limit_artificial(&mut self) {
        // Rebuild without artificial columns so later pricing ignores them.
        let old_width = self.cols + 1;
        let new_cols = self.first_artificial;
        let new_width = new_cols + 1;
        let mut data = vec![0.0; self.rows * new_width];
        for r in 0..self.rows {
            data[r * new_width..r * new_width + new_cols]
                .copy_from_slice(&self.data[r * old_width..r * old_width + new_cols]);
            data[r * new_width + new_cols] = self.data[r * old_width + self.cols];
        }
        self.data = data;
        self.cols = new_cols;
    }

    fn primal(&self, n: usize) -> Vec<f64> {
        let mut x = vec![0.0; n];
        for r in 0..self.rows {
            if self.active[r] && self.basis[r] < n {
                x[self.basis[r]] = self.rhs(r).max(0.0);
            }
        }
        x
    }
}
