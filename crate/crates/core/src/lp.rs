//! Dense bounded-variable primal simplex.
//!
//! Programs here are small (tens of rows and columns), so the solver keeps a
//! full tableau `B⁻¹[A | b]` and recomputes basic values from the right-hand
//! side column after every step. Nonbasic variables sit at either bound;
//! a variable whose own bound is the tightest limit in the ratio test flips
//! bounds without a pivot. Dantzig pricing is used until a run of degenerate
//! steps is detected, after which Bland's rule takes over for the rest of the
//! solve.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {what} has length {got}, expected {expected}")]
    DimensionMismatch {
        what: String,
        expected: usize,
        got: usize,
    },
    #[error("variable {var}: invalid bounds [{lower}, {upper}]")]
    InvalidBounds { var: usize, lower: f64, upper: f64 },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("numerical breakdown: {0}")]
    NumericalBreakdown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constraint {
    pub coefficients: Vec<f64>,
    pub relation: Relation,
    pub rhs: f64,
}

/// Box on one variable. `upper` may be `f64::INFINITY`; `lower` must be finite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bound {
    pub lower: f64,
    pub upper: f64,
}

impl Bound {
    pub const NONNEGATIVE: Bound = Bound {
        lower: 0.0,
        upper: f64::INFINITY,
    };

    pub fn at_least(lower: f64) -> Self {
        Bound {
            lower,
            upper: f64::INFINITY,
        }
    }
}

/// `maximize objective·x` subject to the constraints and per-variable bounds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub constraints: Vec<Constraint>,
    pub bounds: Vec<Bound>,
}

impl LinearProgram {
    /// A program over `objective.len()` nonnegative variables and no constraints.
    pub fn maximize(objective: Vec<f64>) -> Self {
        let bounds = vec![Bound::NONNEGATIVE; objective.len()];
        Self {
            objective,
            constraints: Vec::new(),
            bounds,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.objective.len()
    }

    pub fn constrain(&mut self, coefficients: Vec<f64>, relation: Relation, rhs: f64) -> &mut Self {
        self.constraints.push(Constraint {
            coefficients,
            relation,
            rhs,
        });
        self
    }

    pub fn set_bound(&mut self, var: usize, bound: Bound) -> &mut Self {
        self.bounds[var] = bound;
        self
    }

    fn check(&self) -> Result<(), LpError> {
        let n = self.objective.len();
        if self.bounds.len() != n {
            return Err(LpError::DimensionMismatch {
                what: "bounds".into(),
                expected: n,
                got: self.bounds.len(),
            });
        }
        for (i, c) in self.constraints.iter().enumerate() {
            if c.coefficients.len() != n {
                return Err(LpError::DimensionMismatch {
                    what: format!("constraint {i}"),
                    expected: n,
                    got: c.coefficients.len(),
                });
            }
        }
        for (var, b) in self.bounds.iter().enumerate() {
            if !b.lower.is_finite() || b.upper.is_nan() || b.lower > b.upper {
                return Err(LpError::InvalidBounds {
                    var,
                    lower: b.lower,
                    upper: b.upper,
                });
            }
        }
        Ok(())
    }
}

/// How DEA weight bounds relate to data units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColumnScaling {
    /// Each variable is divided by its maximum over the reference sample
    /// before solving; the ε lower bound applies to weights in those units.
    ColumnMax,
    /// Raw data; ε applies to weights in the data's own units.
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Lower bound on every DEA weight.
    pub epsilon: f64,
    pub feasibility_tol: f64,
    pub pivot_tol: f64,
    pub max_pivots: usize,
    pub column_scaling: ColumnScaling,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            epsilon: 1e-5,
            feasibility_tol: 1e-9,
            pivot_tol: 1e-10,
            max_pivots: 50_000,
            column_scaling: ColumnScaling::ColumnMax,
        }
    }
}

impl SolverConfig {
    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = epsilon;
        self
    }

    pub fn validate(&self) -> Result<(), LpError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.epsilon) {
            return Err(LpError::InvalidConfig(format!("epsilon {}", self.epsilon)));
        }
        if !positive(self.feasibility_tol) {
            return Err(LpError::InvalidConfig(format!(
                "feasibility_tol {}",
                self.feasibility_tol
            )));
        }
        if !positive(self.pivot_tol) {
            return Err(LpError::InvalidConfig(format!("pivot_tol {}", self.pivot_tol)));
        }
        if self.max_pivots == 0 {
            return Err(LpError::InvalidConfig("max_pivots 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Empty unless `status` is `Optimal`.
    pub values: Vec<f64>,
    pub objective: f64,
}

impl LpSolution {
    fn without_point(status: LpStatus) -> Self {
        Self {
            status,
            values: Vec::new(),
            objective: f64::NAN,
        }
    }

    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }
}

pub fn solve_lp(lp: &LinearProgram, config: &SolverConfig) -> Result<LpSolution, LpError> {
    config.validate()?;
    lp.check()?;
    let mut tab = Tableau::build(lp, config);

    if tab.artificial_start < tab.cols {
        let phase_one: Vec<f64> = (0..tab.cols)
            .map(|j| if j >= tab.artificial_start { -1.0 } else { 0.0 })
            .collect();
        tab.run(&phase_one)?;
        let infeasibility: f64 = (tab.artificial_start..tab.cols).map(|j| tab.x[j]).sum();
        let b_max = lp.constraints.iter().map(|c| c.rhs.abs()).fold(1.0, f64::max);
        if infeasibility > config.feasibility_tol * b_max {
            return Ok(LpSolution::without_point(LpStatus::Infeasible));
        }
        tab.retire_artificials();
    }

    let mut cost = vec![0.0; tab.cols];
    cost[..lp.num_vars()].copy_from_slice(&lp.objective);
    if tab.run(&cost)? == Outcome::Unbounded {
        return Ok(LpSolution::without_point(LpStatus::Unbounded));
    }

    let values: Vec<f64> = (0..lp.num_vars())
        .map(|j| tab.x[j].clamp(lp.bounds[j].lower, lp.bounds[j].upper))
        .collect();
    verify(lp, &values, config)?;
    let objective = lp.objective.iter().zip(&values).map(|(c, x)| c * x).sum();
    Ok(LpSolution {
        status: LpStatus::Optimal,
        values,
        objective,
    })
}

/// Headroom over the feasibility tolerance before a reported optimum counts
/// as a breakdown. The Harris ratio test lets basic variables drift by a
/// fraction of the tolerance per step, so this only catches gross failures.
const VERIFY_SLACK: f64 = 1e3;

fn verify(lp: &LinearProgram, values: &[f64], config: &SolverConfig) -> Result<(), LpError> {
    for (i, c) in lp.constraints.iter().enumerate() {
        let terms = c.coefficients.iter().zip(values).map(|(a, x)| a * x);
        let magnitude = terms.clone().map(f64::abs).fold(c.rhs.abs().max(1.0), f64::max);
        let lhs: f64 = terms.sum();
        let tol = VERIFY_SLACK * config.feasibility_tol * magnitude;
        let violated = match c.relation {
            Relation::Le => lhs > c.rhs + tol,
            Relation::Ge => lhs < c.rhs - tol,
            Relation::Eq => (lhs - c.rhs).abs() > tol,
        };
        if violated {
            return Err(LpError::NumericalBreakdown(format!(
                "constraint {i} violated at the reported optimum (lhs {lhs}, rhs {})",
                c.rhs
            )));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum VarState {
    Basic,
    AtLower,
    AtUpper,
}

#[derive(Debug, PartialEq, Eq)]
enum Outcome {
    Optimal,
    Unbounded,
}

/// Consecutive degenerate steps tolerated before switching to Bland's rule.
const STALL_LIMIT: usize = 32;
/// Pivots between full recomputations of basic values and reduced costs.
const REFRESH_EVERY: usize = 32;

/// Pivot entries smaller than this fraction of the column maximum are ignored.
const HARRIS_RELATIVE_PIVOT: f64 = 1e-9;

struct Tableau<'c> {
    rows: usize,
    cols: usize,
    /// Row-major `rows × (cols + 1)`; the last column is `B⁻¹b`.
    t: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    basis: Vec<usize>,
    state: Vec<VarState>,
    x: Vec<f64>,
    artificial_start: usize,
    pivots: usize,
    bland: bool,
    config: &'c SolverConfig,
}

impl<'c> Tableau<'c> {
    fn build(lp: &LinearProgram, config: &'c SolverConfig) -> Self {
        let n = lp.num_vars();
        let rows = lp.constraints.len();
        let slack_of: Vec<Option<usize>> = {
            let mut next = n;
            lp.constraints
                .iter()
                .map(|c| {
                    (c.relation != Relation::Eq).then(|| {
                        next += 1;
                        next - 1
                    })
                })
                .collect()
        };
        let artificial_start = n + slack_of.iter().flatten().count();

        // Start every structural variable at its lower bound and decide, row by
        // row, whether the slack can be basic or an artificial is needed.
        let x_struct: Vec<f64> = lp.bounds.iter().map(|b| b.lower).collect();
        let mut needs_artificial = Vec::with_capacity(rows);
        let mut residuals = Vec::with_capacity(rows);
        for c in &lp.constraints {
            let r = c.rhs
                - c.coefficients
                    .iter()
                    .zip(&x_struct)
                    .map(|(a, x)| a * x)
                    .sum::<f64>();
            residuals.push(r);
            needs_artificial.push(match c.relation {
                Relation::Le => r < 0.0,
                Relation::Ge => r > 0.0,
                Relation::Eq => true,
            });
        }
        let cols = artificial_start + needs_artificial.iter().filter(|&&a| a).count();
        let width = cols + 1;

        let mut t = vec![0.0; rows * width];
        let mut basis = vec![0; rows];
        let mut next_art = artificial_start;
        for (i, c) in lp.constraints.iter().enumerate() {
            let row = &mut t[i * width..(i + 1) * width];
            row[..n].copy_from_slice(&c.coefficients);
            row[cols] = c.rhs;
            if let Some(s) = slack_of[i] {
                row[s] = if c.relation == Relation::Le { 1.0 } else { -1.0 };
            }
            let (basic, coef) = if needs_artificial[i] {
                let a = next_art;
                next_art += 1;
                let sign = if residuals[i] >= 0.0 { 1.0 } else { -1.0 };
                row[a] = sign;
                (a, sign)
            } else {
                let s = slack_of[i].expect("inequality row has a slack");
                (s, row[s])
            };
            if coef < 0.0 {
                row.iter_mut().for_each(|v| *v = -*v);
            }
            basis[i] = basic;
        }

        let mut lower = vec![0.0; cols];
        let mut upper = vec![f64::INFINITY; cols];
        for (j, b) in lp.bounds.iter().enumerate() {
            lower[j] = b.lower;
            upper[j] = b.upper;
        }
        let mut state = vec![VarState::AtLower; cols];
        for &b in &basis {
            state[b] = VarState::Basic;
        }
        let mut x = lower.clone();
        for (j, s) in state.iter().enumerate() {
            if *s == VarState::Basic {
                x[j] = 0.0;
            }
        }

        let mut tab = Self {
            rows,
            cols,
            t,
            lower,
            upper,
            basis,
            state,
            x,
            artificial_start,
            pivots: 0,
            bland: false,
            config,
        };
        tab.refresh_basic_values();
        tab
    }

    fn width(&self) -> usize {
        self.cols + 1
    }

    fn at(&self, i: usize, j: usize) -> f64 {
        self.t[i * self.width() + j]
    }

    fn refresh_basic_values(&mut self) {
        let width = self.width();
        for i in 0..self.rows {
            let row = &self.t[i * width..(i + 1) * width];
            let mut v = row[self.cols];
            for j in 0..self.cols {
                if self.state[j] != VarState::Basic && self.x[j] != 0.0 {
                    v -= row[j] * self.x[j];
                }
            }
            self.x[self.basis[i]] = v;
        }
    }

    fn pivot(&mut self, r: usize, j: usize) {
        let width = self.width();
        let p = self.at(r, j);
        for v in &mut self.t[r * width..(r + 1) * width] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.t[r * width..(r + 1) * width].to_vec();
        for i in 0..self.rows {
            if i == r {
                continue;
            }
            let f = self.t[i * width + j];
            if f == 0.0 {
                continue;
            }
            let row = &mut self.t[i * width..(i + 1) * width];
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                *v -= f * pv;
            }
            row[j] = 0.0;
        }
        self.pivots += 1;
    }

    /// Moves nonbasic `j` by `delta`, shifting the basic variables along its column.
    fn advance(&mut self, j: usize, delta: f64) {
        if delta == 0.0 {
            return;
        }
        self.x[j] += delta;
        let width = self.width();
        for i in 0..self.rows {
            let a = self.t[i * width + j];
            if a != 0.0 {
                self.x[self.basis[i]] -= a * delta;
            }
        }
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let mut d = cost.to_vec();
        for i in 0..self.rows {
            let cb = cost[self.basis[i]];
            if cb == 0.0 {
                continue;
            }
            let row = &self.t[i * self.width()..i * self.width() + self.cols];
            for (dj, a) in d.iter_mut().zip(row) {
                *dj -= cb * a;
            }
        }
        d
    }

    fn choose_entering(&self, d: &[f64], tol: f64) -> Option<(usize, f64)> {
        let mut best: Option<(usize, f64)> = None;
        for j in 0..self.cols {
            if self.upper[j] <= self.lower[j] {
                continue;
            }
            let dir = match self.state[j] {
                VarState::Basic => continue,
                VarState::AtLower if d[j] > tol => 1.0,
                VarState::AtUpper if d[j] < -tol => -1.0,
                _ => continue,
            };
            if self.bland {
                return Some((j, dir));
            }
            if best.map_or(true, |(b, _)| d[j].abs() > d[b].abs()) {
                best = Some((j, dir));
            }
        }
        best
    }

    fn run(&mut self, cost: &[f64]) -> Result<Outcome, LpError> {
        let c_max = cost.iter().map(|c| c.abs()).fold(1.0, f64::max);
        let opt_tol = self.config.feasibility_tol * c_max;
        let piv_tol = self.config.pivot_tol;
        let mut degenerate_run = 0;
        let mut d = self.reduced_costs(cost);
        let mut since_refresh = 0;
        self.refresh_basic_values();

        loop {
            if self.pivots >= self.config.max_pivots {
                return Err(LpError::NumericalBreakdown(format!(
                    "pivot limit {} reached",
                    self.config.max_pivots
                )));
            }
            if since_refresh >= REFRESH_EVERY {
                self.refresh_basic_values();
                d = self.reduced_costs(cost);
                since_refresh = 0;
            }
            let Some((j, dir)) = self.choose_entering(&d, opt_tol) else {
                if since_refresh == 0 {
                    return Ok(Outcome::Optimal);
                }
                // confirm optimality against freshly computed values
                since_refresh = REFRESH_EVERY;
                continue;
            };

            let (step, leave) = self.ratio_test(j, dir);
            if step.is_infinite() {
                return Ok(Outcome::Unbounded);
            }

            self.advance(j, dir * step);
            match leave {
                None => {
                    // bound flip
                    self.state[j] = if dir > 0.0 {
                        VarState::AtUpper
                    } else {
                        VarState::AtLower
                    };
                    self.x[j] = if dir > 0.0 { self.upper[j] } else { self.lower[j] };
                    self.pivots += 1;
                }
                Some((r, alpha)) => {
                    if self.at(r, j).abs() < piv_tol {
                        return Err(LpError::NumericalBreakdown(format!(
                            "pivot {} below tolerance",
                            self.at(r, j)
                        )));
                    }
                    let out = self.basis[r];
                    if alpha > 0.0 {
                        self.state[out] = VarState::AtLower;
                        self.x[out] = self.lower[out];
                    } else {
                        self.state[out] = VarState::AtUpper;
                        self.x[out] = self.upper[out];
                    }
                    self.pivot(r, j);
                    self.basis[r] = j;
                    self.state[j] = VarState::Basic;
                    let dj = d[j];
                    let row = &self.t[r * self.width()..r * self.width() + self.cols];
                    for (dk, a) in d.iter_mut().zip(row) {
                        *dk -= dj * a;
                    }
                    d[j] = 0.0;
                }
            }
            since_refresh += 1;

            if step <= self.config.feasibility_tol {
                degenerate_run += 1;
                if degenerate_run > STALL_LIMIT {
                    self.bland = true;
                }
            } else {
                degenerate_run = 0;
            }
        }
    }

    /// Harris two-pass ratio test. Entries below a threshold relative to the
    /// column's largest entry are treated as zero; among rows whose ratio lies
    /// within the tolerance-relaxed minimum, the largest pivot wins.
    fn ratio_test(&self, j: usize, dir: f64) -> (f64, Option<(usize, f64)>) {
        let col_max = (0..self.rows).map(|i| self.at(i, j).abs()).fold(0.0, f64::max);
        let piv_tol = self.config.pivot_tol.max(HARRIS_RELATIVE_PIVOT * col_max);
        let delta = 0.5 * self.config.feasibility_tol;
        let slack = |i: usize, alpha: f64| -> Option<f64> {
            let b = self.basis[i];
            if alpha > piv_tol {
                Some((self.x[b] - self.lower[b]).max(0.0))
            } else if alpha < -piv_tol && self.upper[b].is_finite() {
                Some((self.upper[b] - self.x[b]).max(0.0))
            } else {
                None
            }
        };

        let mut relaxed = f64::INFINITY;
        for i in 0..self.rows {
            let alpha = self.at(i, j) * dir;
            if let Some(room) = slack(i, alpha) {
                relaxed = relaxed.min((room + delta) / alpha.abs());
            }
        }
        let flip = self.upper[j] - self.lower[j];
        if flip <= relaxed {
            return (flip, None);
        }

        let mut leave: Option<(usize, f64)> = None;
        let mut step = f64::INFINITY;
        for i in 0..self.rows {
            let alpha = self.at(i, j) * dir;
            let Some(room) = slack(i, alpha) else { continue };
            let ratio = room / alpha.abs();
            if ratio > relaxed {
                continue;
            }
            let better = match leave {
                None => true,
                Some((r, _)) if self.bland => self.basis[i] < self.basis[r],
                Some((_, a)) => alpha.abs() > a.abs(),
            };
            if better {
                leave = Some((i, alpha));
                step = ratio;
            }
        }
        (step, leave)
    }

    /// Pins artificials at zero and pivots the basic ones out where possible.
    fn retire_artificials(&mut self) {
        for j in self.artificial_start..self.cols {
            self.upper[j] = 0.0;
            if self.state[j] != VarState::Basic {
                self.state[j] = VarState::AtLower;
                self.x[j] = 0.0;
            }
        }
        for r in 0..self.rows {
            if self.basis[r] < self.artificial_start {
                continue;
            }
            let candidate = (0..self.artificial_start)
                .filter(|&j| self.state[j] != VarState::Basic)
                .map(|j| (j, self.at(r, j).abs()))
                .filter(|&(_, a)| a > self.config.pivot_tol)
                .max_by(|a, b| a.1.total_cmp(&b.1));
            if let Some((j, _)) = candidate {
                let out = self.basis[r];
                self.pivot(r, j);
                self.basis[r] = j;
                self.state[j] = VarState::Basic;
                self.state[out] = VarState::AtLower;
                self.x[out] = 0.0;
            }
        }
        self.refresh_basic_values();
        self.bland = false;
    }
}
