//! Descriptive statistics and Pearson correlations over dataset columns.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::Dataset;

#[derive(Debug, Error, PartialEq)]
pub enum StatsError {
    #[error("cannot summarize an empty vector")]
    EmptyVector,
    #[error("correlations need at least two DMUs, got {0}")]
    TooFewRecords(usize),
    #[error("variable `{0}` is constant")]
    ZeroVariance(String),
}

/// Summary of one variable. `std_dev` is the sample standard deviation
/// (divisor `len - 1`), zero for a single observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VariableStats {
    pub mean: f64,
    pub std_dev: f64,
    pub max: f64,
    pub min: f64,
}

pub fn descriptive_stats(values: &[f64]) -> Result<VariableStats, StatsError> {
    if values.is_empty() {
        return Err(StatsError::EmptyVector);
    }
    let len = values.len() as f64;
    let mean = values.iter().sum::<f64>() / len;
    let std_dev = if values.len() > 1 {
        let ss: f64 = values.iter().map(|v| (v - mean).powi(2)).sum();
        (ss / (len - 1.0)).sqrt()
    } else {
        0.0
    };
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    // rounding in the mean can push it a hair outside [min, max] on constant input
    let mean = mean.clamp(min, max);
    Ok(VariableStats {
        mean,
        std_dev,
        max,
        min,
    })
}

/// Symmetric matrix of Pearson coefficients, inputs first then outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub names: Vec<String>,
    pub values: Vec<Vec<f64>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.values[a][b]
    }
}

pub fn correlation_matrix(dataset: &Dataset) -> Result<CorrelationMatrix, StatsError> {
    if dataset.len() < 2 {
        return Err(StatsError::TooFewRecords(dataset.len()));
    }
    let names = dataset.variable_names();
    let centered: Vec<Vec<f64>> = (0..names.len())
        .map(|var| {
            let col = dataset.column(var);
            let mean = col.iter().sum::<f64>() / col.len() as f64;
            col.into_iter().map(|v| v - mean).collect()
        })
        .collect();
    let norms: Vec<f64> = centered
        .iter()
        .map(|c| c.iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    for (name, norm) in names.iter().zip(&norms) {
        if *norm == 0.0 {
            return Err(StatsError::ZeroVariance(name.clone()));
        }
    }

    let p = names.len();
    let mut values = vec![vec![0.0; p]; p];
    for a in 0..p {
        values[a][a] = 1.0;
        for b in (a + 1)..p {
            let dot: f64 = centered[a].iter().zip(&centered[b]).map(|(x, y)| x * y).sum();
            let r = (dot / (norms[a] * norms[b])).clamp(-1.0, 1.0);
            values[a][b] = r;
            values[b][a] = r;
        }
    }
    Ok(CorrelationMatrix { names, values })
}
