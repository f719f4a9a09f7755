//! DEA by sequential exclusion.
//!
//! Each round scores the active units with standard DEA, moves every
//! efficient unit toward the barycenter of the active set
//! (`G = μ·B + (1 - μ)·F`), and re-scores the inefficient units against the
//! moved frontier. Units still below one are excluded with that score; the
//! rest start the next round from their original coordinates.
//!
//! The move relaxes the frontier: every original weight vector that keeps
//! all active units at or below one also keeps the barycenter there, hence
//! every generator. A re-scored unit therefore never loses efficiency
//! relative to its standard score in the same round.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ccr::{solve_against, ColumnScales};
use crate::data::Dataset;
use crate::lp::{LpError, SolverConfig};
use crate::EFFICIENCY_TOL;

#[derive(Debug, Error, PartialEq)]
pub enum SeqexError {
    #[error("active set is empty")]
    EmptyActiveSet,
    #[error("cannot compute heterogeneity: {0}")]
    DegenerateSample(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("mu must lie in [0, 1], got {0}")]
    InvalidMu(f64),
    #[error("DMU index {index} out of range for {len} DMUs")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("epsilon {epsilon} admits no feasible weights for DMU `{id}`")]
    InfeasibleEpsilon { id: String, epsilon: f64 },
    #[error("solver failed on DMU `{id}`: {source}")]
    SolverFailure { id: String, source: LpError },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum MuSource {
    Computed,
    Supplied,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeterogeneityIndex {
    pub mu: f64,
    pub source: MuSource,
    /// Mean and maximum distance to the barycenter, when computed.
    pub mean_distance: Option<f64>,
    pub max_distance: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum MuChoice {
    /// Recomputed on each round's active set.
    Computed,
    /// Held fixed across rounds. Zero is accepted (it reproduces standard DEA).
    Supplied(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeqexConfig {
    pub mu: MuChoice,
    /// Divide each coordinate by its active-set maximum before measuring
    /// distances for the computed μ.
    pub scale_distances: bool,
    pub solver: SolverConfig,
}

impl Default for SeqexConfig {
    fn default() -> Self {
        Self {
            mu: MuChoice::Computed,
            scale_distances: true,
            solver: SolverConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqexRound {
    pub active: Vec<String>,
    pub heterogeneity: Option<HeterogeneityIndex>,
    /// Inputs then outputs.
    pub barycenter: Vec<f64>,
    pub standard_scores: Vec<(String, f64)>,
    /// Generators of the round-efficient units, inputs then outputs.
    pub generators: Vec<(String, Vec<f64>)>,
    /// Scores of the round-inefficient units against the moved frontier.
    pub rescored: Vec<(String, f64)>,
    pub excluded: Vec<(String, f64)>,
    /// Set when nobody was excluded at the first μ and the move was retried.
    pub escalated_mu: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SeqexTrace {
    pub rounds: Vec<SeqexRound>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqexScore {
    pub id: String,
    pub score: f64,
    /// 1-based round in which the score was fixed.
    pub round: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SeqexResult {
    /// In dataset order.
    pub scores: Vec<SeqexScore>,
    pub trace: SeqexTrace,
}

fn point(dataset: &Dataset, k: usize) -> Vec<f64> {
    dataset.record(k).point()
}

fn check_active(dataset: &Dataset, active: &[usize]) -> Result<(), SeqexError> {
    if active.is_empty() {
        return Err(SeqexError::EmptyActiveSet);
    }
    if let Some(&k) = active.iter().find(|&&k| k >= dataset.len()) {
        return Err(SeqexError::IndexOutOfRange {
            index: k,
            len: dataset.len(),
        });
    }
    Ok(())
}

fn mean_point(points: &[Vec<f64>]) -> Vec<f64> {
    let dim = points[0].len();
    let mut sum = vec![0.0; dim];
    for p in points {
        for (s, v) in sum.iter_mut().zip(p) {
            *s += v;
        }
    }
    sum.iter().map(|s| s / points.len() as f64).collect()
}

/// Componentwise mean of the active units' (inputs, outputs) points.
pub fn barycenter(dataset: &Dataset, active: &[usize]) -> Result<Vec<f64>, SeqexError> {
    check_active(dataset, active)?;
    let points: Vec<Vec<f64>> = active.iter().map(|&k| point(dataset, k)).collect();
    Ok(mean_point(&points))
}

/// `mean(d) / max(d)` for the distances `d` of `points` from their barycenter.
pub fn heterogeneity_of_points(points: &[Vec<f64>], scaled: bool) -> Result<HeterogeneityIndex, SeqexError> {
    if points.len() < 2 {
        return Err(SeqexError::DegenerateSample(format!(
            "need at least two units, got {}",
            points.len()
        )));
    }
    let dim = points[0].len();
    if let Some(p) = points.iter().find(|p| p.len() != dim) {
        return Err(SeqexError::DimensionMismatch {
            expected: dim,
            got: p.len(),
        });
    }
    let scaled_points: Vec<Vec<f64>> = if scaled {
        let mut maxima = vec![0.0f64; dim];
        for p in points {
            for (m, v) in maxima.iter_mut().zip(p) {
                *m = m.max(v.abs());
            }
        }
        points
            .iter()
            .map(|p| {
                p.iter()
                    .zip(&maxima)
                    .map(|(v, m)| if *m > 0.0 { v / m } else { *v })
                    .collect()
            })
            .collect()
    } else {
        points.to_vec()
    };
    let center = mean_point(&scaled_points);
    let d: Vec<f64> = scaled_points
        .iter()
        .map(|p| p.iter().zip(&center).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .collect();
    let max = d.iter().copied().fold(0.0, f64::max);
    if max == 0.0 {
        return Err(SeqexError::DegenerateSample("all units coincide".into()));
    }
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    Ok(HeterogeneityIndex {
        mu: (mean / max).min(1.0),
        source: MuSource::Computed,
        mean_distance: Some(mean),
        max_distance: Some(max),
    })
}

pub fn heterogeneity_mu(dataset: &Dataset, active: &[usize], scaled: bool) -> Result<HeterogeneityIndex, SeqexError> {
    check_active(dataset, active)?;
    let points: Vec<Vec<f64>> = active.iter().map(|&k| point(dataset, k)).collect();
    heterogeneity_of_points(&points, scaled)
}

/// `μ·B + (1 - μ)·F`.
pub fn generator(f: &[f64], b: &[f64], mu: f64) -> Result<Vec<f64>, SeqexError> {
    if f.len() != b.len() {
        return Err(SeqexError::DimensionMismatch {
            expected: f.len(),
            got: b.len(),
        });
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(SeqexError::InvalidMu(mu));
    }
    Ok(f.iter().zip(b).map(|(f, b)| mu * b + (1.0 - mu) * f).collect())
}

struct RoundContext<'a> {
    dataset: &'a Dataset,
    active: &'a [usize],
    scales: ColumnScales,
    solver: &'a SolverConfig,
}

impl RoundContext<'_> {
    fn score(&self, k: usize, reference: &[(&[f64], &[f64])]) -> Result<f64, SeqexError> {
        let rec = self.dataset.record(k);
        let weights = solve_against((&rec.inputs, &rec.outputs), reference, &self.scales, self.solver)
            .map_err(|source| SeqexError::SolverFailure {
                id: rec.id.clone(),
                source,
            })?
            .ok_or_else(|| SeqexError::InfeasibleEpsilon {
                id: rec.id.clone(),
                epsilon: self.solver.epsilon,
            })?;
        Ok(weights.score)
    }

    /// Generators and re-scores of the inefficient units for one μ.
    #[allow(clippy::type_complexity)]
    fn moved(
        &self,
        efficient: &[bool],
        center: &[f64],
        mu: f64,
    ) -> Result<(Vec<(String, Vec<f64>)>, Vec<(usize, f64)>), SeqexError> {
        let m = self.dataset.m();
        let mut generators = Vec::new();
        let mut points: Vec<Vec<f64>> = Vec::with_capacity(self.active.len());
        for (pos, &k) in self.active.iter().enumerate() {
            let p = point(self.dataset, k);
            if efficient[pos] {
                let g = generator(&p, center, mu)?;
                generators.push((self.dataset.record(k).id.clone(), g.clone()));
                points.push(g);
            } else {
                points.push(p);
            }
        }
        let reference: Vec<(&[f64], &[f64])> = points.iter().map(|p| p.split_at(m)).collect();
        let mut rescored = Vec::new();
        for (pos, &k) in self.active.iter().enumerate() {
            if !efficient[pos] {
                rescored.push((k, self.score(k, &reference)?));
            }
        }
        Ok((generators, rescored))
    }
}

fn is_efficient(score: f64) -> bool {
    score >= 1.0 - EFFICIENCY_TOL
}

pub fn seqex_run(dataset: &Dataset, config: &SeqexConfig) -> Result<SeqexResult, SeqexError> {
    if let MuChoice::Supplied(mu) = config.mu {
        if !(0.0..=1.0).contains(&mu) {
            return Err(SeqexError::InvalidMu(mu));
        }
    }
    let ids = dataset.ids();
    let mut final_scores: Vec<Option<(f64, usize)>> = vec![None; dataset.len()];
    let mut active: Vec<usize> = (0..dataset.len()).collect();
    let mut trace = SeqexTrace::default();

    loop {
        let round_no = trace.rounds.len() + 1;
        let ctx = RoundContext {
            dataset,
            active: &active,
            scales: ColumnScales::from_points(
                active.iter().map(|&k| {
                    let r = dataset.record(k);
                    (r.inputs.as_slice(), r.outputs.as_slice())
                }),
                dataset.m(),
                dataset.n(),
                config.solver.column_scaling,
            ),
            solver: &config.solver,
        };
        let reference: Vec<(&[f64], &[f64])> = active
            .iter()
            .map(|&k| {
                let r = dataset.record(k);
                (r.inputs.as_slice(), r.outputs.as_slice())
            })
            .collect();
        let standard: Vec<f64> = active
            .iter()
            .map(|&k| ctx.score(k, &reference))
            .collect::<Result<_, _>>()?;
        let efficient: Vec<bool> = standard.iter().map(|&s| is_efficient(s)).collect();
        let center = barycenter(dataset, &active)?;
        let mut round = SeqexRound {
            active: active.iter().map(|&k| ids[k].clone()).collect(),
            heterogeneity: None,
            barycenter: center.clone(),
            standard_scores: active.iter().zip(&standard).map(|(&k, &s)| (ids[k].clone(), s)).collect(),
            generators: Vec::new(),
            rescored: Vec::new(),
            excluded: Vec::new(),
            escalated_mu: None,
        };

        let mut finished = efficient.iter().all(|&e| e);
        if !finished {
            let index = match config.mu {
                MuChoice::Supplied(mu) => HeterogeneityIndex {
                    mu,
                    source: MuSource::Supplied,
                    mean_distance: None,
                    max_distance: None,
                },
                MuChoice::Computed => heterogeneity_mu(dataset, &active, config.scale_distances)?,
            };
            round.heterogeneity = Some(index);
            let (mut generators, mut rescored) = ctx.moved(&efficient, &center, index.mu)?;
            if rescored.iter().all(|&(_, s)| is_efficient(s)) {
                let escalated = (1.5 * index.mu).min(1.0);
                round.escalated_mu = Some(escalated);
                (generators, rescored) = ctx.moved(&efficient, &center, escalated)?;
            }
            round.generators = generators;
            round.rescored = rescored.iter().map(|&(k, s)| (ids[k].clone(), s)).collect();
            for &(k, s) in &rescored {
                if !is_efficient(s) {
                    final_scores[k] = Some((s, round_no));
                    round.excluded.push((ids[k].clone(), s));
                }
            }
            if round.excluded.is_empty() {
                finished = true;
            } else {
                active.retain(|&k| final_scores[k].is_none());
            }
        }
        trace.rounds.push(round);
        if finished {
            for &k in &active {
                final_scores[k] = Some((1.0, round_no));
            }
            break;
        }
    }

    let scores = final_scores
        .into_iter()
        .zip(ids)
        .map(|(s, id)| {
            let (score, round) = s.expect("every unit is resolved");
            SeqexScore { id, score, round }
        })
        .collect();
    Ok(SeqexResult { scores, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DmuRecord;

    fn line_dataset(points: &[(&str, f64, f64)]) -> Dataset {
        let records = points
            .iter()
            .map(|(id, x, q)| DmuRecord {
                id: id.to_string(),
                inputs: vec![*x],
                outputs: vec![*q],
            })
            .collect();
        Dataset::new(vec!["x".into()], vec!["y".into()], records).unwrap()
    }

    #[test]
    fn generator_endpoints_and_midpoint() {
        assert_eq!(generator(&[2.0, 4.0], &[4.0, 8.0], 0.0).unwrap(), vec![2.0, 4.0]);
        assert_eq!(generator(&[2.0, 4.0], &[4.0, 8.0], 1.0).unwrap(), vec![4.0, 8.0]);
        assert_eq!(generator(&[2.0, 4.0], &[4.0, 8.0], 0.5).unwrap(), vec![3.0, 6.0]);
        assert!(matches!(
            generator(&[1.0], &[1.0, 2.0], 0.5),
            Err(SeqexError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn barycenter_small_cases() {
        let ds = line_dataset(&[("A", 1.0, 1.0), ("B", 3.0, 3.0)]);
        assert_eq!(barycenter(&ds, &[0]).unwrap(), vec![1.0, 1.0]);
        assert_eq!(barycenter(&ds, &[0, 1]).unwrap(), vec![2.0, 2.0]);
        assert_eq!(barycenter(&ds, &[]), Err(SeqexError::EmptyActiveSet));
    }

    #[test]
    fn mu_examples() {
        let pair = vec![vec![1.0, 1.0], vec![3.0, 5.0]];
        assert_eq!(heterogeneity_of_points(&pair, false).unwrap().mu, 1.0);
        let line = vec![vec![0.0], vec![0.0], vec![0.0], vec![10.0]];
        let h = heterogeneity_of_points(&line, false).unwrap();
        assert!((h.mu - 0.5).abs() < 1e-15);
        assert_eq!(h.max_distance, Some(7.5));
        let same = vec![vec![2.0, 2.0]; 3];
        assert!(matches!(
            heterogeneity_of_points(&same, true),
            Err(SeqexError::DegenerateSample(_))
        ));
    }

    #[test]
    fn single_unit_one_round() {
        let ds = line_dataset(&[("A", 2.0, 3.0)]);
        let r = seqex_run(&ds, &SeqexConfig::default()).unwrap();
        assert_eq!(r.scores[0].score, 1.0);
        assert_eq!(r.trace.rounds.len(), 1);
        assert!(r.trace.rounds[0].excluded.is_empty());
    }

    #[test]
    fn supplied_mu_out_of_range() {
        let ds = line_dataset(&[("A", 2.0, 3.0)]);
        let cfg = SeqexConfig {
            mu: MuChoice::Supplied(1.5),
            ..SeqexConfig::default()
        };
        assert_eq!(seqex_run(&ds, &cfg), Err(SeqexError::InvalidMu(1.5)));
    }
}
