//! Rankings built from score tables and the normalized Kendall distance.

use std::collections::{HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RankError {
    #[error("score for `{0}` is not finite")]
    NonFiniteScore(String),
    #[error("duplicate id `{0}` in score table")]
    DuplicateId(String),
    #[error("rankings cover different ids")]
    IdSetMismatch,
}

/// 1-based ranks, best first. Tied scores share the mean rank of their block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ranking {
    entries: Vec<(String, f64)>,
}

impl Ranking {
    pub fn entries(&self) -> &[(String, f64)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn rank_of(&self, id: &str) -> Option<f64> {
        self.entries.iter().find(|(i, _)| i == id).map(|(_, r)| *r)
    }

    /// A tie-free ranking in the given order.
    pub fn from_order<S: AsRef<str>>(ids: &[S]) -> Self {
        Self {
            entries: ids
                .iter()
                .enumerate()
                .map(|(i, id)| (id.as_ref().to_string(), (i + 1) as f64))
                .collect(),
        }
    }
}

/// Ranks `scores`. With `descending`, the highest score gets rank 1.
pub fn rank_from_scores(scores: &[(String, f64)], descending: bool) -> Result<Ranking, RankError> {
    let mut seen = HashSet::new();
    for (id, s) in scores {
        if !s.is_finite() {
            return Err(RankError::NonFiniteScore(id.clone()));
        }
        if !seen.insert(id.as_str()) {
            return Err(RankError::DuplicateId(id.clone()));
        }
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| {
        let cmp = scores[a].1.total_cmp(&scores[b].1);
        if descending {
            cmp.reverse()
        } else {
            cmp
        }
    });

    let mut entries = Vec::with_capacity(scores.len());
    let mut start = 0;
    while start < order.len() {
        let value = scores[order[start]].1;
        let mut end = start + 1;
        while end < order.len() && scores[order[end]].1 == value {
            end += 1;
        }
        // positions start+1 ..= end share their mean
        let rank = (start + 1 + end) as f64 / 2.0;
        entries.extend(order[start..end].iter().map(|&i| (scores[i].0.clone(), rank)));
        start = end;
    }
    Ok(Ranking { entries })
}

/// Fraction of unit pairs ordered oppositely by the two rankings.
///
/// Pairs tied in either ranking count as neither concordant nor discordant,
/// and the denominator stays `S(S-1)/2`, so identical rankings give 0 and a
/// tie-free reversal gives 1.
pub fn kendall_distance(a: &Ranking, b: &Ranking) -> Result<f64, RankError> {
    if a.len() != b.len() {
        return Err(RankError::IdSetMismatch);
    }
    let lookup: HashMap<&str, f64> = b.entries.iter().map(|(id, r)| (id.as_str(), *r)).collect();
    let pairs: Vec<(f64, f64)> = a
        .entries
        .iter()
        .map(|(id, r)| lookup.get(id.as_str()).map(|r2| (*r, *r2)))
        .collect::<Option<_>>()
        .ok_or(RankError::IdSetMismatch)?;
    let s = pairs.len();
    if s < 2 {
        return Ok(0.0);
    }
    let mut discordant = 0usize;
    for i in 0..s {
        for j in (i + 1)..s {
            let da = pairs[i].0 - pairs[j].0;
            let db = pairs[i].1 - pairs[j].1;
            if da * db < 0.0 {
                discordant += 1;
            }
        }
    }
    Ok(discordant as f64 / (s * (s - 1) / 2) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scores(pairs: &[(&str, f64)]) -> Vec<(String, f64)> {
        pairs.iter().map(|(i, s)| (i.to_string(), *s)).collect()
    }

    #[test]
    fn higher_score_ranks_first() {
        let r = rank_from_scores(&scores(&[("B", 0.5), ("A", 1.0)]), true).unwrap();
        assert_eq!(r.rank_of("A"), Some(1.0));
        assert_eq!(r.rank_of("B"), Some(2.0));
    }

    #[test]
    fn tie_block_mean_rank() {
        let r = rank_from_scores(&scores(&[("A", 1.0), ("B", 1.0), ("C", 0.5)]), true).unwrap();
        assert_eq!(r.rank_of("A"), Some(1.5));
        assert_eq!(r.rank_of("B"), Some(1.5));
        assert_eq!(r.rank_of("C"), Some(3.0));
        let ranks: Vec<f64> = r.entries().iter().map(|e| e.1).collect();
        assert!(ranks.windows(2).all(|w| w[0] <= w[1]));
    }

    #[test]
    fn ascending_order() {
        let r = rank_from_scores(&scores(&[("A", 1.0), ("B", 0.5)]), false).unwrap();
        assert_eq!(r.rank_of("B"), Some(1.0));
    }

    #[test]
    fn non_finite_rejected() {
        assert_eq!(
            rank_from_scores(&scores(&[("A", f64::NAN)]), true),
            Err(RankError::NonFiniteScore("A".into()))
        );
    }

    #[test]
    fn identity_reversal_and_single_swap() {
        let r = Ranking::from_order(&["A", "B", "C", "D"]);
        assert_eq!(kendall_distance(&r, &r).unwrap(), 0.0);
        let rev = Ranking::from_order(&["D", "C", "B", "A"]);
        assert_eq!(kendall_distance(&r, &rev).unwrap(), 1.0);

        let a = Ranking::from_order(&["A", "B", "C"]);
        let b = Ranking::from_order(&["B", "A", "C"]);
        assert!((kendall_distance(&a, &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn ties_contribute_nothing() {
        let tied = rank_from_scores(&scores(&[("A", 1.0), ("B", 1.0), ("C", 0.5)]), true).unwrap();
        let strict = Ranking::from_order(&["B", "A", "C"]);
        assert_eq!(kendall_distance(&tied, &strict).unwrap(), 0.0);
        assert_eq!(kendall_distance(&tied, &tied).unwrap(), 0.0);
    }

    #[test]
    fn mismatched_ids() {
        let a = Ranking::from_order(&["A", "B"]);
        let b = Ranking::from_order(&["A", "C"]);
        assert_eq!(kendall_distance(&a, &b), Err(RankError::IdSetMismatch));
        let c = Ranking::from_order(&["A"]);
        assert_eq!(kendall_distance(&a, &c), Err(RankError::IdSetMismatch));
    }
}
