//! Constant-returns-to-scale DEA.
//!
//! The ratio program `max u·q_k / v·x_k` subject to `u·q_s / v·x_s ≤ 1` for
//! every unit and `u, v ≥ ε` is solved through the normalization
//! `v·x_k = 1`, which turns it into a linear program in `(u, v)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;
use crate::lp::{solve_lp, Bound, ColumnScaling, LinearProgram, LpError, LpStatus, Relation, SolverConfig};

#[derive(Debug, Error, PartialEq)]
pub enum CcrError {
    #[error("DMU index {index} out of range for {len} DMUs")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("epsilon {epsilon} leaves no feasible weights for DMU `{id}`")]
    InfeasibleEpsilon { id: String, epsilon: f64 },
    #[error("solver failure for DMU `{id}`: {source}")]
    SolverFailure { id: String, source: LpError },
}

/// Per-variable divisors applied to the data before solving.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnScales {
    pub inputs: Vec<f64>,
    pub outputs: Vec<f64>,
}

impl ColumnScales {
    pub fn unit(m: usize, n: usize) -> Self {
        Self {
            inputs: vec![1.0; m],
            outputs: vec![1.0; n],
        }
    }

    /// Column maxima over `points` (all-zero columns keep scale 1).
    pub fn from_points<'a, I>(points: I, m: usize, n: usize, scaling: ColumnScaling) -> Self
    where
        I: IntoIterator<Item = (&'a [f64], &'a [f64])>,
    {
        let mut scales = Self {
            inputs: vec![0.0; m],
            outputs: vec![0.0; n],
        };
        if scaling == ColumnScaling::None {
            return Self::unit(m, n);
        }
        for (x, q) in points {
            for (s, v) in scales.inputs.iter_mut().zip(x) {
                *s = f64::max(*s, *v);
            }
            for (s, v) in scales.outputs.iter_mut().zip(q) {
                *s = f64::max(*s, *v);
            }
        }
        for s in scales.inputs.iter_mut().chain(scales.outputs.iter_mut()) {
            if *s <= 0.0 {
                *s = 1.0;
            }
        }
        scales
    }

    pub fn for_dataset(dataset: &Dataset, scaling: ColumnScaling) -> Self {
        Self::from_points(
            dataset
                .records()
                .iter()
                .map(|r| (r.inputs.as_slice(), r.outputs.as_slice())),
            dataset.m(),
            dataset.n(),
            scaling,
        )
    }
}

/// Score and weights for one DMU. Weights are in the data's own units, so
/// `score == u·q_k / v·x_k`; the ε bound holds for `v_j · scale_j` and
/// `u_i · scale_i` under the configured [`ColumnScaling`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CcrResult {
    pub id: String,
    pub score: f64,
    pub input_weights: Vec<f64>,
    pub output_weights: Vec<f64>,
}

pub(crate) struct Weights {
    pub score: f64,
    pub input_weights: Vec<f64>,
    pub output_weights: Vec<f64>,
}

pub(crate) fn ratio(u: &[f64], v: &[f64], x: &[f64], q: &[f64]) -> f64 {
    let out: f64 = u.iter().zip(q).map(|(a, b)| a * b).sum();
    let inp: f64 = v.iter().zip(x).map(|(a, b)| a * b).sum();
    out / inp
}

/// Best ratio of `target` against `reference`. `Ok(None)` when ε admits no
/// feasible weights.
pub(crate) fn solve_against(
    target: (&[f64], &[f64]),
    reference: &[(&[f64], &[f64])],
    scales: &ColumnScales,
    config: &SolverConfig,
) -> Result<Option<Weights>, LpError> {
    let (x_k, q_k) = target;
    let m = x_k.len();
    let n = q_k.len();
    let norm_out = |q: &[f64]| -> Vec<f64> { q.iter().zip(&scales.outputs).map(|(v, s)| v / s).collect() };
    let norm_in = |x: &[f64]| -> Vec<f64> { x.iter().zip(&scales.inputs).map(|(v, s)| v / s).collect() };

    // variables: u_0..u_{n-1}, v_0..v_{m-1}
    let mut objective = norm_out(q_k);
    objective.extend(std::iter::repeat(0.0).take(m));
    let mut lp = LinearProgram::maximize(objective);
    let mut normalization = vec![0.0; n];
    normalization.extend(norm_in(x_k));
    lp.constrain(normalization, Relation::Eq, 1.0);
    for (x, q) in reference {
        let mut row = norm_out(q);
        row.extend(norm_in(x).into_iter().map(|v| -v));
        lp.constrain(row, Relation::Le, 0.0);
    }
    for var in 0..(n + m) {
        lp.set_bound(var, Bound::at_least(config.epsilon));
    }

    let sol = solve_lp(&lp, config)?;
    match sol.status {
        LpStatus::Infeasible => return Ok(None),
        LpStatus::Unbounded => {
            return Err(LpError::NumericalBreakdown(
                "ratio program reported unbounded".into(),
            ))
        }
        LpStatus::Optimal => {}
    }
    let u: Vec<f64> = sol.values[..n]
        .iter()
        .zip(&scales.outputs)
        .map(|(w, s)| w / s)
        .collect();
    let mut v: Vec<f64> = sol.values[n..]
        .iter()
        .zip(&scales.inputs)
        .map(|(w, s)| w / s)
        .collect();

    // Absorb solver tolerance: inflating v keeps v ≥ ε and brings every
    // reference ratio to at most one.
    let worst = reference
        .iter()
        .map(|(x, q)| ratio(&u, &v, x, q))
        .fold(0.0, f64::max);
    if worst > 1.0 {
        v.iter_mut().for_each(|w| *w *= worst);
    }
    Ok(Some(Weights {
        score: ratio(&u, &v, x_k, q_k),
        input_weights: v,
        output_weights: u,
    }))
}

/// Efficiency of DMU `k` (0-based) against the whole dataset.
pub fn ccr_score(dataset: &Dataset, k: usize, config: &SolverConfig) -> Result<CcrResult, CcrError> {
    let scales = ColumnScales::for_dataset(dataset, config.column_scaling);
    score_with_scales(dataset, k, &scales, config)
}

fn score_with_scales(
    dataset: &Dataset,
    k: usize,
    scales: &ColumnScales,
    config: &SolverConfig,
) -> Result<CcrResult, CcrError> {
    if k >= dataset.len() {
        return Err(CcrError::IndexOutOfRange {
            index: k,
            len: dataset.len(),
        });
    }
    let reference: Vec<(&[f64], &[f64])> = dataset
        .records()
        .iter()
        .map(|r| (r.inputs.as_slice(), r.outputs.as_slice()))
        .collect();
    let rec = dataset.record(k);
    let weights = solve_against(reference[k], &reference, scales, config)
        .map_err(|source| CcrError::SolverFailure {
            id: rec.id.clone(),
            source,
        })?
        .ok_or_else(|| CcrError::InfeasibleEpsilon {
            id: rec.id.clone(),
            epsilon: config.epsilon,
        })?;
    Ok(CcrResult {
        id: rec.id.clone(),
        score: weights.score,
        input_weights: weights.input_weights,
        output_weights: weights.output_weights,
    })
}

/// Scores every DMU, in dataset order.
pub fn ccr_all(dataset: &Dataset, config: &SolverConfig) -> Result<Vec<CcrResult>, CcrError> {
    let scales = ColumnScales::for_dataset(dataset, config.column_scaling);
    (0..dataset.len())
        .map(|k| score_with_scales(dataset, k, &scales, config))
        .collect()
}
