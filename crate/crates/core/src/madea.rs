//! Two-activity DEA with shared resources.
//!
//! Each DMU runs a teaching and a research process. Shared inputs are split
//! by a per-input share `λ` (teaching gets `λ`, research `1 - λ`), split
//! outputs by a share `β`, and the other inputs and outputs belong to one
//! activity. For the evaluated unit `k` the model maximizes
//! `α·θᵀ + (1 - α)·θᴿ` while every unit's teaching and research ratios stay
//! at most one under the same weights and shares.
//!
//! Substituting `w = λ·v` and `z = β·u` makes every ratio constraint linear
//! in `(u, v, w, z)`, and the share boxes become `lo·v ≤ w ≤ hi·v`. With the
//! normalization `v·x_k = 1`:
//!
//! * **Endogenous α** (`α` = teaching share of `k`'s weighted input): the
//!   objective collapses to `u·q_k`, a single linear program.
//! * **Fixed α**: fixing the teaching input share `t = Iᵀ_k` makes the
//!   objective `α/t·Oᵀ_k + (1-α)/(1-t)·Oᴿ_k` linear, so the problem is a
//!   one-parameter family of linear programs. `t` is searched by a seeded
//!   stratified scan followed by golden-section refinement around the best
//!   scan points.
//!
//! Reported values are always re-derived by [`evaluate_allocation`] from the
//! recovered `(λ, β, u, v)`, not taken from the solver's objective.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ccr::ColumnScales;
use crate::data::Dataset;
use crate::lp::{solve_lp, Bound, LinearProgram, LpError, LpStatus, Relation, SolverConfig};
use crate::stats::{descriptive_stats, StatsError, VariableStats};

/// Activity scores at or above `1 - MADEA_EFFICIENT_TOL` count as efficient.
pub const MADEA_EFFICIENT_TOL: f64 = 1e-6;

#[derive(Debug, Error, PartialEq)]
pub enum MadeaError {
    #[error("invalid activity structure: {0}")]
    InvalidStructure(String),
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("DMU index {index} out of range for {len} DMUs")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("no feasible allocation for DMU `{id}`: {detail}")]
    SolverFailure { id: String, detail: String },
    #[error("oracle limited to S <= 4, m <= 2, n <= 3 (got S={s}, m={m}, n={n})")]
    IntractableSize { s: usize, m: usize, n: usize },
    #[error("grid resolution must be at least 5, got {0}")]
    InvalidResolution(usize),
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Inputs and outputs owned by one activity alone.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityIo {
    pub name: String,
    #[serde(default)]
    pub inputs: Vec<usize>,
    #[serde(default)]
    pub outputs: Vec<usize>,
}

/// Wiring of dataset variables onto the teaching and research activities.
/// Indices refer to the dataset's input and output positions.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActivityStructure {
    pub teaching: ActivityIo,
    pub research: ActivityIo,
    /// Inputs divided between the activities by a share `λ`.
    pub shared_inputs: Vec<usize>,
    /// Outputs divided between the activities by a share `β`.
    pub split_outputs: Vec<usize>,
}

impl ActivityStructure {
    pub fn validate(&self, m: usize, n: usize) -> Result<(), MadeaError> {
        let check = |kind: &str, count: usize, groups: [&[usize]; 3]| -> Result<(), MadeaError> {
            let mut owner = vec![0usize; count];
            for group in groups {
                for &i in group {
                    if i >= count {
                        return Err(MadeaError::DimensionMismatch(format!(
                            "{kind} index {i} out of range ({count} {kind}s)"
                        )));
                    }
                    owner[i] += 1;
                }
            }
            if let Some(i) = owner.iter().position(|&c| c != 1) {
                return Err(MadeaError::InvalidStructure(format!(
                    "{kind} {i} must belong to exactly one category"
                )));
            }
            Ok(())
        };
        check(
            "input",
            m,
            [&self.teaching.inputs, &self.research.inputs, &self.shared_inputs],
        )?;
        check(
            "output",
            n,
            [&self.teaching.outputs, &self.research.outputs, &self.split_outputs],
        )?;
        for act in [&self.teaching, &self.research] {
            if act.inputs.is_empty() && self.shared_inputs.is_empty() {
                return Err(MadeaError::InvalidStructure(format!("activity `{}` has no inputs", act.name)));
            }
            if act.outputs.is_empty() && self.split_outputs.is_empty() {
                return Err(MadeaError::InvalidStructure(format!(
                    "activity `{}` has no outputs",
                    act.name
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum AlphaMode {
    /// Teaching priority held at the given value; research gets the rest.
    Fixed(f64),
    /// Teaching priority equals the teaching share of the unit's weighted input.
    Endogenous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub alpha: AlphaMode,
    /// Box for every `λ`.
    pub lambda_box: (f64, f64),
    /// Box for every `β`.
    pub beta_box: (f64, f64),
    pub solver: SolverConfig,
    /// Scan points for the teaching input share under fixed α.
    pub starts: usize,
    pub seed: u64,
}

impl ScenarioSpec {
    /// Equal priorities, shares in `[0.01, 0.99]`.
    pub fn fixed_priorities() -> Self {
        Self {
            alpha: AlphaMode::Fixed(0.5),
            lambda_box: (0.01, 0.99),
            beta_box: (0.01, 0.99),
            solver: SolverConfig::default(),
            starts: 32,
            seed: 0,
        }
    }

    /// Priorities chosen by the model, shares in `[0.30, 0.90]`.
    pub fn endogenous_priorities() -> Self {
        Self {
            alpha: AlphaMode::Endogenous,
            lambda_box: (0.30, 0.90),
            beta_box: (0.30, 0.90),
            ..Self::fixed_priorities()
        }
    }

    pub fn validate(&self) -> Result<(), MadeaError> {
        if let AlphaMode::Fixed(a) = self.alpha {
            if !(0.0..=1.0).contains(&a) {
                return Err(MadeaError::InvalidScenario(format!("alpha {a} outside [0, 1]")));
            }
        }
        for (name, (lo, hi)) in [("lambda", self.lambda_box), ("beta", self.beta_box)] {
            if !(lo > 0.0 && lo <= hi && hi < 1.0) {
                return Err(MadeaError::InvalidScenario(format!(
                    "{name} box [{lo}, {hi}] must satisfy 0 < lo <= hi < 1"
                )));
            }
        }
        if self.starts == 0 {
            return Err(MadeaError::InvalidScenario("starts must be positive".into()));
        }
        self.solver
            .validate()
            .map_err(|e| MadeaError::InvalidScenario(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MadeaResult {
    pub id: String,
    pub total: f64,
    pub teaching: f64,
    pub research: f64,
    pub alpha_teaching: f64,
    pub alpha_research: f64,
    /// One per shared input, in `structure.shared_inputs` order.
    pub lambdas: Vec<f64>,
    /// One per split output, in `structure.split_outputs` order.
    pub betas: Vec<f64>,
    /// In data units.
    pub input_weights: Vec<f64>,
    pub output_weights: Vec<f64>,
}

/// Activity ratios of every DMU under one allocation and weight vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AllocationEvaluation {
    pub teaching: Vec<f64>,
    pub research: Vec<f64>,
    /// Teaching share of each unit's weighted input.
    pub teaching_input_share: Vec<f64>,
}

/// Direct evaluation of every unit's teaching and research ratios.
pub fn evaluate_allocation(
    dataset: &Dataset,
    structure: &ActivityStructure,
    lambdas: &[f64],
    betas: &[f64],
    input_weights: &[f64],
    output_weights: &[f64],
) -> AllocationEvaluation {
    let mut eval = AllocationEvaluation {
        teaching: Vec::with_capacity(dataset.len()),
        research: Vec::with_capacity(dataset.len()),
        teaching_input_share: Vec::with_capacity(dataset.len()),
    };
    for rec in dataset.records() {
        let (mut in_t, mut in_r, mut out_t, mut out_r) = (0.0, 0.0, 0.0, 0.0);
        for &j in &structure.teaching.inputs {
            in_t += input_weights[j] * rec.inputs[j];
        }
        for &j in &structure.research.inputs {
            in_r += input_weights[j] * rec.inputs[j];
        }
        for (&j, &lambda) in structure.shared_inputs.iter().zip(lambdas) {
            let weighted = input_weights[j] * rec.inputs[j];
            in_t += lambda * weighted;
            in_r += (1.0 - lambda) * weighted;
        }
        for &i in &structure.teaching.outputs {
            out_t += output_weights[i] * rec.outputs[i];
        }
        for &i in &structure.research.outputs {
            out_r += output_weights[i] * rec.outputs[i];
        }
        for (&i, &beta) in structure.split_outputs.iter().zip(betas) {
            let weighted = output_weights[i] * rec.outputs[i];
            out_t += beta * weighted;
            out_r += (1.0 - beta) * weighted;
        }
        eval.teaching.push(out_t / in_t);
        eval.research.push(out_r / in_r);
        eval.teaching_input_share.push(in_t / (in_t + in_r));
    }
    eval
}

/// Column layout of the linearized program.
struct Layout {
    n: usize,
    m: usize,
    shared: usize,
    split: usize,
}

impl Layout {
    fn u(&self, i: usize) -> usize {
        i
    }
    fn v(&self, j: usize) -> usize {
        self.n + j
    }
    fn w(&self, s: usize) -> usize {
        self.n + self.m + s
    }
    fn z(&self, s: usize) -> usize {
        self.n + self.m + self.shared + s
    }
    fn width(&self) -> usize {
        self.n + self.m + self.shared + self.split
    }
}

/// Linear forms of `k`'s activity inputs and outputs, plus the base program.
struct Linearized {
    layout: Layout,
    base: LinearProgram,
    teaching_in: Vec<f64>,
    teaching_out: Vec<f64>,
    research_out: Vec<f64>,
}

fn linearize(
    dataset: &Dataset,
    structure: &ActivityStructure,
    scenario: &ScenarioSpec,
    scales: &ColumnScales,
    k: usize,
) -> Linearized {
    let layout = Layout {
        n: dataset.n(),
        m: dataset.m(),
        shared: structure.shared_inputs.len(),
        split: structure.split_outputs.len(),
    };
    let width = layout.width();
    let forms = |x: &[f64], q: &[f64]| {
        let x: Vec<f64> = x.iter().zip(&scales.inputs).map(|(a, s)| a / s).collect();
        let q: Vec<f64> = q.iter().zip(&scales.outputs).map(|(a, s)| a / s).collect();
        let mut in_t = vec![0.0; width];
        let mut in_r = vec![0.0; width];
        let mut out_t = vec![0.0; width];
        let mut out_r = vec![0.0; width];
        for &j in &structure.teaching.inputs {
            in_t[layout.v(j)] += x[j];
        }
        for &j in &structure.research.inputs {
            in_r[layout.v(j)] += x[j];
        }
        for (s, &j) in structure.shared_inputs.iter().enumerate() {
            in_t[layout.w(s)] += x[j];
            in_r[layout.v(j)] += x[j];
            in_r[layout.w(s)] -= x[j];
        }
        for &i in &structure.teaching.outputs {
            out_t[layout.u(i)] += q[i];
        }
        for &i in &structure.research.outputs {
            out_r[layout.u(i)] += q[i];
        }
        for (s, &i) in structure.split_outputs.iter().enumerate() {
            out_t[layout.z(s)] += q[i];
            out_r[layout.u(i)] += q[i];
            out_r[layout.z(s)] -= q[i];
        }
        (in_t, in_r, out_t, out_r)
    };

    let mut base = LinearProgram::maximize(vec![0.0; width]);
    for rec in dataset.records() {
        let (in_t, in_r, out_t, out_r) = forms(&rec.inputs, &rec.outputs);
        base.constrain(out_t.iter().zip(&in_t).map(|(o, i)| o - i).collect(), Relation::Le, 0.0);
        base.constrain(out_r.iter().zip(&in_r).map(|(o, i)| o - i).collect(), Relation::Le, 0.0);
    }
    let (lo, hi) = scenario.lambda_box;
    for (s, &j) in structure.shared_inputs.iter().enumerate() {
        let mut row = vec![0.0; width];
        row[layout.w(s)] = 1.0;
        row[layout.v(j)] = -lo;
        base.constrain(row.clone(), Relation::Ge, 0.0);
        row[layout.v(j)] = -hi;
        base.constrain(row, Relation::Le, 0.0);
    }
    let (lo, hi) = scenario.beta_box;
    for (s, &i) in structure.split_outputs.iter().enumerate() {
        let mut row = vec![0.0; width];
        row[layout.z(s)] = 1.0;
        row[layout.u(i)] = -lo;
        base.constrain(row.clone(), Relation::Ge, 0.0);
        row[layout.u(i)] = -hi;
        base.constrain(row, Relation::Le, 0.0);
    }
    let rec = dataset.record(k);
    let (teaching_in, in_r, teaching_out, research_out) = forms(&rec.inputs, &rec.outputs);
    let normalization: Vec<f64> = teaching_in.iter().zip(&in_r).map(|(a, b)| a + b).collect();
    base.constrain(normalization, Relation::Eq, 1.0);
    for i in 0..layout.n {
        base.set_bound(layout.u(i), Bound::at_least(scenario.solver.epsilon));
    }
    for j in 0..layout.m {
        base.set_bound(layout.v(j), Bound::at_least(scenario.solver.epsilon));
    }
    Linearized {
        layout,
        base,
        teaching_in,
        teaching_out,
        research_out,
    }
}

/// Maximizes `objective` over the base program, optionally with `Iᵀ_k = t`.
fn solve_with(
    lin: &Linearized,
    objective: Vec<f64>,
    teaching_share: Option<f64>,
    config: &SolverConfig,
) -> Result<Option<Vec<f64>>, LpError> {
    let mut lp = lin.base.clone();
    lp.objective = objective;
    if let Some(t) = teaching_share {
        lp.constrain(lin.teaching_in.clone(), Relation::Eq, t);
    }
    let sol = solve_lp(&lp, config)?;
    match sol.status {
        LpStatus::Optimal => Ok(Some(sol.values)),
        LpStatus::Infeasible => Ok(None),
        LpStatus::Unbounded => Err(LpError::NumericalBreakdown("activity program unbounded".into())),
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fixed-α objective value at teaching input share `t`, with its solution.
fn fixed_alpha_value(
    lin: &Linearized,
    alpha: f64,
    t: f64,
    config: &SolverConfig,
) -> Result<(f64, Option<Vec<f64>>), LpError> {
    let objective: Vec<f64> = lin
        .teaching_out
        .iter()
        .zip(&lin.research_out)
        .map(|(ot, or)| alpha / t * ot + (1.0 - alpha) / (1.0 - t) * or)
        .collect();
    let sol = solve_with(lin, objective.clone(), Some(t), config)?;
    Ok(match sol {
        Some(x) => (dot(&objective, &x), Some(x)),
        None => (f64::NEG_INFINITY, None),
    })
}

fn start_rng(seed: u64, k: usize, start: usize) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&(k as u64).to_le_bytes());
    key[16..24].copy_from_slice(&(start as u64).to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

const GOLDEN_ITERATIONS: usize = 60;
/// Refinement stops once the bracket is this fraction of the feasible share range.
const GOLDEN_RELATIVE_WIDTH: f64 = 1e-6;
const REFINED_CANDIDATES: usize = 3;

fn search_fixed_alpha(
    lin: &Linearized,
    alpha: f64,
    scenario: &ScenarioSpec,
    k: usize,
) -> Result<Option<Vec<f64>>, LpError> {
    let config = &scenario.solver;
    let neg = lin.teaching_in.iter().map(|c| -c).collect();
    let (Some(lo_x), Some(hi_x)) = (
        solve_with(lin, neg, None, config)?,
        solve_with(lin, lin.teaching_in.clone(), None, config)?,
    ) else {
        return Ok(None);
    };
    let t_lo = dot(&lin.teaching_in, &lo_x).max(f64::MIN_POSITIVE);
    let t_hi = dot(&lin.teaching_in, &hi_x).min(1.0 - f64::EPSILON);
    let span = t_hi - t_lo;

    let mut points: Vec<f64> = vec![t_lo, t_hi];
    if span > 0.0 {
        for i in 0..scenario.starts {
            let jitter: f64 = start_rng(scenario.seed, k, i).gen();
            points.push(t_lo + span * (i as f64 + jitter) / scenario.starts as f64);
        }
    }
    points.sort_by(f64::total_cmp);
    points.dedup();

    let mut evaluated = Vec::with_capacity(points.len());
    for &t in &points {
        evaluated.push((t, fixed_alpha_value(lin, alpha, t, config)?));
    }
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut consider = |value: f64, x: Option<Vec<f64>>| {
        if let Some(x) = x {
            if best.as_ref().map_or(true, |(b, _)| value > *b) {
                best = Some((value, x));
            }
        }
    };

    let mut order: Vec<usize> = (0..evaluated.len()).collect();
    order.sort_by(|&a, &b| evaluated[b].1 .0.total_cmp(&evaluated[a].1 .0));
    for &idx in order.iter().take(REFINED_CANDIDATES) {
        if evaluated[idx].1 .0 == f64::NEG_INFINITY {
            continue;
        }
        let a = evaluated[idx.saturating_sub(1)].0;
        let b = evaluated[(idx + 1).min(evaluated.len() - 1)].0;
        let (value, x) = golden_section(lin, alpha, a, b, GOLDEN_RELATIVE_WIDTH * span, config)?;
        consider(value, x);
    }
    for (_, (value, x)) in evaluated {
        consider(value, x);
    }
    Ok(best.map(|(_, x)| x))
}

fn golden_section(
    lin: &Linearized,
    alpha: f64,
    mut a: f64,
    mut b: f64,
    width: f64,
    config: &SolverConfig,
) -> Result<(f64, Option<Vec<f64>>), LpError> {
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = fixed_alpha_value(lin, alpha, c, config)?;
    let mut fd = fixed_alpha_value(lin, alpha, d, config)?;
    for _ in 0..GOLDEN_ITERATIONS {
        if b - a <= width.max(1e-12 * (1.0 + a.abs())) {
            break;
        }
        if fc.0 >= fd.0 {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = fixed_alpha_value(lin, alpha, c, config)?;
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = fixed_alpha_value(lin, alpha, d, config)?;
        }
    }
    Ok(if fc.0 >= fd.0 { fc } else { fd })
}

/// Multi-activity efficiency of DMU `k` (0-based).
pub fn madea_score(
    dataset: &Dataset,
    structure: &ActivityStructure,
    scenario: &ScenarioSpec,
    k: usize,
) -> Result<MadeaResult, MadeaError> {
    structure.validate(dataset.m(), dataset.n())?;
    scenario.validate()?;
    let scales = ColumnScales::for_dataset(dataset, scenario.solver.column_scaling);
    score_with_scales(dataset, structure, scenario, &scales, k)
}

fn score_with_scales(
    dataset: &Dataset,
    structure: &ActivityStructure,
    scenario: &ScenarioSpec,
    scales: &ColumnScales,
    k: usize,
) -> Result<MadeaResult, MadeaError> {
    if k >= dataset.len() {
        return Err(MadeaError::IndexOutOfRange {
            index: k,
            len: dataset.len(),
        });
    }
    let id = dataset.record(k).id.clone();
    let failure = |detail: String| MadeaError::SolverFailure {
        id: id.clone(),
        detail,
    };
    let lin = linearize(dataset, structure, scenario, scales, k);
    let solution = match scenario.alpha {
        AlphaMode::Endogenous => {
            let objective: Vec<f64> = lin
                .teaching_out
                .iter()
                .zip(&lin.research_out)
                .map(|(a, b)| a + b)
                .collect();
            solve_with(&lin, objective, None, &scenario.solver)
        }
        AlphaMode::Fixed(alpha) => search_fixed_alpha(&lin, alpha, scenario, k),
    }
    .map_err(|e| failure(e.to_string()))?
    .ok_or_else(|| failure("epsilon and share bounds admit no weights".into()))?;

    let layout = &lin.layout;
    let clamp = |v: f64, (lo, hi): (f64, f64)| v.clamp(lo, hi);
    let lambdas: Vec<f64> = structure
        .shared_inputs
        .iter()
        .enumerate()
        .map(|(s, &j)| clamp(solution[layout.w(s)] / solution[layout.v(j)], scenario.lambda_box))
        .collect();
    let betas: Vec<f64> = structure
        .split_outputs
        .iter()
        .enumerate()
        .map(|(s, &i)| clamp(solution[layout.z(s)] / solution[layout.u(i)], scenario.beta_box))
        .collect();
    let output_weights: Vec<f64> = (0..layout.n)
        .map(|i| solution[layout.u(i)] / scales.outputs[i])
        .collect();
    let mut input_weights: Vec<f64> = (0..layout.m)
        .map(|j| solution[layout.v(j)] / scales.inputs[j])
        .collect();

    let mut eval = evaluate_allocation(dataset, structure, &lambdas, &betas, &input_weights, &output_weights);
    let worst = eval
        .teaching
        .iter()
        .chain(&eval.research)
        .copied()
        .fold(0.0, f64::max);
    if worst > 1.0 {
        input_weights.iter_mut().for_each(|v| *v *= worst);
        eval = evaluate_allocation(dataset, structure, &lambdas, &betas, &input_weights, &output_weights);
    }

    let alpha_teaching = match scenario.alpha {
        AlphaMode::Fixed(a) => a,
        AlphaMode::Endogenous => eval.teaching_input_share[k],
    };
    let alpha_research = 1.0 - alpha_teaching;
    let teaching = eval.teaching[k];
    let research = eval.research[k];
    Ok(MadeaResult {
        id,
        total: alpha_teaching * teaching + alpha_research * research,
        teaching,
        research,
        alpha_teaching,
        alpha_research,
        lambdas,
        betas,
        input_weights,
        output_weights,
    })
}

/// Score columns of one unit, as used by [`summarize`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityScores {
    pub total: f64,
    pub teaching: f64,
    pub research: f64,
    pub alpha_teaching: f64,
}

impl From<&MadeaResult> for ActivityScores {
    fn from(r: &MadeaResult) -> Self {
        Self {
            total: r.total,
            teaching: r.teaching,
            research: r.research,
            alpha_teaching: r.alpha_teaching,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MadeaSummary {
    pub total: VariableStats,
    pub teaching: VariableStats,
    pub research: VariableStats,
    pub alpha_teaching: VariableStats,
    pub efficient_total: usize,
    pub efficient_teaching: usize,
    pub efficient_research: usize,
}

/// Means, standard deviations and efficient counts over score rows.
pub fn summarize(rows: &[ActivityScores]) -> Result<MadeaSummary, MadeaError> {
    let column = |f: fn(&ActivityScores) -> f64| rows.iter().map(f).collect::<Vec<_>>();
    let efficient = |f: fn(&ActivityScores) -> f64| {
        rows.iter()
            .filter(|r| f(r) >= 1.0 - MADEA_EFFICIENT_TOL)
            .count()
    };
    Ok(MadeaSummary {
        total: descriptive_stats(&column(|r| r.total))?,
        teaching: descriptive_stats(&column(|r| r.teaching))?,
        research: descriptive_stats(&column(|r| r.research))?,
        alpha_teaching: descriptive_stats(&column(|r| r.alpha_teaching))?,
        efficient_total: efficient(|r| r.total),
        efficient_teaching: efficient(|r| r.teaching),
        efficient_research: efficient(|r| r.research),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MadeaRun {
    pub results: Vec<MadeaResult>,
    pub summary: MadeaSummary,
}

pub fn madea_all(
    dataset: &Dataset,
    structure: &ActivityStructure,
    scenario: &ScenarioSpec,
) -> Result<MadeaRun, MadeaError> {
    structure.validate(dataset.m(), dataset.n())?;
    scenario.validate()?;
    let scales = ColumnScales::for_dataset(dataset, scenario.solver.column_scaling);
    let results = (0..dataset.len())
        .map(|k| score_with_scales(dataset, structure, scenario, &scales, k))
        .collect::<Result<Vec<_>, _>>()?;
    let rows: Vec<ActivityScores> = results.iter().map(ActivityScores::from).collect();
    let summary = summarize(&rows)?;
    Ok(MadeaRun { results, summary })
}

/// Grid lower bound on the multi-activity objective of DMU `k`.
///
/// Shares `λ` and `β` range over `grid_resolution` evenly spaced values of
/// their box; input and output weight directions over the interior points of
/// a simplex grid with `grid_resolution` points per axis. For each pair of
/// directions the output scale is set to the largest value keeping every
/// activity ratio at most one, and the point is kept only if the resulting
/// weights (normalized so `v·x_k = 1`) clear ε. Every kept point is feasible
/// for the model, so the maximum is a lower bound on its optimum. Returns
/// `-inf` when no grid point is feasible.
///
/// Doubling the number of grid intervals (resolution `r` to `2r - 1`) yields
/// a superset of points, so the bound never decreases.
pub fn madea_oracle(
    dataset: &Dataset,
    structure: &ActivityStructure,
    scenario: &ScenarioSpec,
    k: usize,
    grid_resolution: usize,
) -> Result<f64, MadeaError> {
    let (s_count, m, n) = (dataset.len(), dataset.m(), dataset.n());
    if s_count > 4 || m > 2 || n > 3 {
        return Err(MadeaError::IntractableSize { s: s_count, m, n });
    }
    if grid_resolution < 5 {
        return Err(MadeaError::InvalidResolution(grid_resolution));
    }
    if k >= s_count {
        return Err(MadeaError::IndexOutOfRange { index: k, len: s_count });
    }
    structure.validate(m, n)?;
    scenario.validate()?;

    let scales = ColumnScales::for_dataset(dataset, scenario.solver.column_scaling);
    let xs: Vec<Vec<f64>> = dataset
        .records()
        .iter()
        .map(|r| r.inputs.iter().zip(&scales.inputs).map(|(a, s)| a / s).collect())
        .collect();
    let qs: Vec<Vec<f64>> = dataset
        .records()
        .iter()
        .map(|r| r.outputs.iter().zip(&scales.outputs).map(|(a, s)| a / s).collect())
        .collect();
    let eps = scenario.solver.epsilon;
    let steps = grid_resolution - 1;
    let axis = |(lo, hi): (f64, f64)| -> Vec<f64> {
        (0..=steps)
            .map(|i| lo + (hi - lo) * (i as f64 / steps as f64))
            .collect()
    };
    let lambda_axis = axis(scenario.lambda_box);
    let beta_axis = axis(scenario.beta_box);
    let u_dirs = simplex_interior(n, steps);
    let v_dirs = simplex_interior(m, steps);

    let mut best = f64::NEG_INFINITY;
    for lambdas in cartesian(&lambda_axis, structure.shared_inputs.len()) {
        // per v-direction: (teaching input, research input) for every unit
        let v_side: Vec<Vec<(f64, f64)>> = v_dirs
            .iter()
            .map(|v| {
                xs.iter()
                    .map(|x| {
                        let (mut t, mut r) = (0.0, 0.0);
                        for &j in &structure.teaching.inputs {
                            t += v[j] * x[j];
                        }
                        for &j in &structure.research.inputs {
                            r += v[j] * x[j];
                        }
                        for (&j, l) in structure.shared_inputs.iter().zip(&lambdas) {
                            t += l * v[j] * x[j];
                            r += (1.0 - l) * v[j] * x[j];
                        }
                        (t, r)
                    })
                    .collect()
            })
            .collect();
        for betas in cartesian(&beta_axis, structure.split_outputs.len()) {
            for u in &u_dirs {
                let u_side: Vec<(f64, f64)> = qs
                    .iter()
                    .map(|q| {
                        let (mut t, mut r) = (0.0, 0.0);
                        for &i in &structure.teaching.outputs {
                            t += u[i] * q[i];
                        }
                        for &i in &structure.research.outputs {
                            r += u[i] * q[i];
                        }
                        for (&i, b) in structure.split_outputs.iter().zip(&betas) {
                            t += b * u[i] * q[i];
                            r += (1.0 - b) * u[i] * q[i];
                        }
                        (t, r)
                    })
                    .collect();
                let u_min = u.iter().copied().fold(f64::INFINITY, f64::min);
                for (v, inputs) in v_dirs.iter().zip(&v_side) {
                    let mut scale = f64::INFINITY;
                    for ((ot, or), (it, ir)) in u_side.iter().zip(inputs) {
                        if *ot > 0.0 {
                            scale = scale.min(it / ot);
                        }
                        if *or > 0.0 {
                            scale = scale.min(ir / or);
                        }
                    }
                    if !scale.is_finite() {
                        continue;
                    }
                    let (it_k, ir_k) = inputs[k];
                    let norm = it_k + ir_k;
                    let v_min = v.iter().copied().fold(f64::INFINITY, f64::min);
                    if v_min / norm < eps || scale * u_min / norm < eps {
                        continue;
                    }
                    let (ot_k, or_k) = u_side[k];
                    let teaching = scale * ot_k / it_k;
                    let research = scale * or_k / ir_k;
                    let alpha = match scenario.alpha {
                        AlphaMode::Fixed(a) => a,
                        AlphaMode::Endogenous => it_k / norm,
                    };
                    best = best.max(alpha * teaching + (1.0 - alpha) * research);
                }
            }
        }
    }
    Ok(best)
}

/// Points `a / steps` with positive integer `a` summing to `steps`.
fn simplex_interior(dim: usize, steps: usize) -> Vec<Vec<f64>> {
    fn fill(dim: usize, left: usize, prefix: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if dim == 1 {
            if left >= 1 {
                prefix.push(left);
                out.push(prefix.clone());
                prefix.pop();
            }
            return;
        }
        for a in 1..left {
            prefix.push(a);
            fill(dim - 1, left - a, prefix, out);
            prefix.pop();
        }
    }
    let mut raw = Vec::new();
    fill(dim, steps, &mut Vec::new(), &mut raw);
    raw.into_iter()
        .map(|a| a.into_iter().map(|c| c as f64 / steps as f64).collect())
        .collect()
}

fn cartesian(axis: &[f64], dims: usize) -> Vec<Vec<f64>> {
    let mut out = vec![Vec::new()];
    for _ in 0..dims {
        out = out
            .into_iter()
            .flat_map(|p| {
                axis.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DmuRecord;

    /// Two shared inputs; outputs: teaching-only, research-only, split.
    pub(crate) fn toy_structure() -> ActivityStructure {
        ActivityStructure {
            teaching: ActivityIo {
                name: "teaching".into(),
                inputs: vec![],
                outputs: vec![0],
            },
            research: ActivityIo {
                name: "research".into(),
                inputs: vec![],
                outputs: vec![1],
            },
            shared_inputs: vec![0, 1],
            split_outputs: vec![2],
        }
    }

    fn dataset(rows: &[(&[f64], &[f64])]) -> Dataset {
        let records = rows
            .iter()
            .enumerate()
            .map(|(i, (x, q))| DmuRecord {
                id: format!("D{i}"),
                inputs: x.to_vec(),
                outputs: q.to_vec(),
            })
            .collect();
        Dataset::new(
            vec!["GE".into(), "IE".into()],
            vec!["UGS".into(), "PUB".into(), "DrS".into()],
            records,
        )
        .unwrap()
    }

    #[test]
    fn lone_unit_is_efficient_in_both_activities() {
        let ds = dataset(&[(&[4.0, 2.0], &[3.0, 1.0, 2.0])]);
        for scenario in [ScenarioSpec::fixed_priorities(), ScenarioSpec::endogenous_priorities()] {
            let r = madea_score(&ds, &toy_structure(), &scenario, 0).unwrap();
            assert!((r.teaching - 1.0).abs() < 1e-6, "{r:?}");
            assert!((r.research - 1.0).abs() < 1e-6, "{r:?}");
            assert!((r.total - 1.0).abs() < 1e-6, "{r:?}");
        }
    }

    #[test]
    fn weighted_average_arithmetic() {
        let row = ActivityScores {
            total: 0.5 * 1.0 + 0.5 * 0.5,
            teaching: 1.0,
            research: 0.5,
            alpha_teaching: 0.5,
        };
        assert_eq!(row.total, 0.75);
    }

    #[test]
    fn structure_must_partition_variables() {
        let mut s = toy_structure();
        s.research.outputs = vec![1, 2];
        assert!(matches!(s.validate(2, 3), Err(MadeaError::InvalidStructure(_))));
        let mut s = toy_structure();
        s.shared_inputs = vec![0];
        assert!(matches!(s.validate(2, 3), Err(MadeaError::InvalidStructure(_))));
        let mut s = toy_structure();
        s.split_outputs = vec![5];
        assert!(matches!(s.validate(2, 3), Err(MadeaError::DimensionMismatch(_))));
    }

    #[test]
    fn scenario_bounds_checked() {
        let mut sc = ScenarioSpec::fixed_priorities();
        sc.lambda_box = (0.0, 0.5);
        assert!(sc.validate().is_err());
        sc.lambda_box = (0.6, 0.5);
        assert!(sc.validate().is_err());
        let mut sc = ScenarioSpec::fixed_priorities();
        sc.alpha = AlphaMode::Fixed(1.5);
        assert!(sc.validate().is_err());
    }

    #[test]
    fn oracle_refuses_large_instances() {
        let rows: Vec<(&[f64], &[f64])> = vec![(&[1.0, 1.0], &[1.0, 1.0, 1.0]); 5];
        let mut ds_rows = Vec::new();
        for (i, (x, q)) in rows.iter().enumerate() {
            ds_rows.push(DmuRecord {
                id: format!("D{i}"),
                inputs: x.to_vec(),
                outputs: q.to_vec(),
            });
        }
        let ds = Dataset::new(
            vec!["a".into(), "b".into()],
            vec!["c".into(), "d".into(), "e".into()],
            ds_rows,
        )
        .unwrap();
        assert!(matches!(
            madea_oracle(&ds, &toy_structure(), &ScenarioSpec::fixed_priorities(), 0, 9),
            Err(MadeaError::IntractableSize { .. })
        ));
        let small = dataset(&[(&[1.0, 1.0], &[1.0, 1.0, 1.0])]);
        assert_eq!(
            madea_oracle(&small, &toy_structure(), &ScenarioSpec::fixed_priorities(), 0, 4),
            Err(MadeaError::InvalidResolution(4))
        );
    }

    #[test]
    fn oracle_lone_unit_reaches_one() {
        let ds = dataset(&[(&[4.0, 2.0], &[3.0, 1.0, 2.0])]);
        let v = madea_oracle(&ds, &toy_structure(), &ScenarioSpec::endogenous_priorities(), 0, 9).unwrap();
        assert!(v <= 1.0 + 1e-12);
        assert!(v > 0.9, "{v}");
    }

    #[test]
    fn simplex_grid_is_interior() {
        let pts = simplex_interior(3, 8);
        assert_eq!(pts.len(), 21);
        for p in &pts {
            assert!(p.iter().all(|&c| c > 0.0));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
