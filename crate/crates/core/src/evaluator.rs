//! Link-prediction evaluation: raw and filtered ranks, MRR and HITS@n.
//!
//! Every test triple yields two predictions, one with the head replaced by
//! each entity and one with the tail replaced. Ties are resolved
//! optimistically: the rank is one plus the number of strictly better
//! competitors.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg_data::{Dataset, Position, Triple};
use crate::model::EmbeddingModel;

pub const DEFAULT_HITS: [usize; 3] = [1, 3, 10];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankResult {
    pub triple: Triple,
    pub position: Position,
    pub raw_rank: usize,
    pub filtered_rank: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelationMrr {
    pub mrr_filtered: f64,
    pub predictions: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub predictions: usize,
    pub mrr_raw: f64,
    pub mrr_filtered: f64,
    /// HITS@n on filtered ranks, keyed by n.
    pub hits_filtered: BTreeMap<usize, f64>,
    /// Filtered MRR per relation name.
    pub per_relation: BTreeMap<String, RelationMrr>,
}

/// Rank of `target` among all entities not in `mask`.
pub fn rank_entity(scores: &[f64], target: usize, mask: Option<&HashSet<usize>>) -> Result<usize> {
    if target >= scores.len() {
        return Err(Error::IdOutOfRange {
            what: "entity",
            id: target,
            count: scores.len(),
        });
    }
    if mask.is_some_and(|m| m.contains(&target)) {
        return Err(Error::InvalidArgument(format!("target {target} is masked")));
    }
    let s = scores[target];
    let better = scores
        .iter()
        .enumerate()
        .filter(|&(e, &v)| e != target && v < s && !mask.is_some_and(|m| m.contains(&e)))
        .count();
    Ok(better + 1)
}

/// Raw and filtered rank of one prediction given the full score vector.
fn rank_prediction(scores: &[f64], dataset: &Dataset, triple: &Triple, position: Position) -> RankResult {
    let target = triple.entity(position);
    let s = scores[target];
    let raw_better = scores.iter().filter(|&&v| v < s).count();
    let known_better = dataset
        .known_completions(triple, position)
        .iter()
        .filter(|&&e| e != target && scores[e] < s)
        .count();
    RankResult {
        triple: *triple,
        position,
        raw_rank: raw_better + 1,
        filtered_rank: raw_better - known_better + 1,
    }
}

fn check_shapes(model: &EmbeddingModel, dataset: &Dataset) -> Result<()> {
    if model.num_entities() != dataset.num_entities() {
        return Err(Error::DimensionMismatch {
            expected: dataset.num_entities(),
            found: model.num_entities(),
        });
    }
    if model.num_relations() != dataset.num_relations() {
        return Err(Error::DimensionMismatch {
            expected: dataset.num_relations(),
            found: model.num_relations(),
        });
    }
    Ok(())
}

/// Ranks head and tail predictions for every triple, in input order.
///
/// `threads == 1` runs inline; `0` uses all available cores.
pub fn rank_triples(
    model: &EmbeddingModel,
    dataset: &Dataset,
    triples: &[Triple],
    threads: usize,
) -> Result<Vec<RankResult>> {
    check_shapes(model, dataset)?;
    for t in triples {
        model.check(t)?;
    }
    let jobs: Vec<(Triple, Position)> = triples
        .iter()
        .flat_map(|&t| [(t, Position::Head), (t, Position::Tail)])
        .collect();
    let run = |&(t, pos): &(Triple, Position), buf: &mut Vec<f64>| {
        model.score_all_into(&t, pos, buf);
        rank_prediction(buf, dataset, &t, pos)
    };
    if threads == 1 {
        let mut buf = Vec::with_capacity(model.num_entities());
        return Ok(jobs.iter().map(|j| run(j, &mut buf)).collect());
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::InvalidState(format!("thread pool: {e}")))?;
    Ok(pool.install(|| {
        jobs.par_iter()
            .map_init(|| Vec::with_capacity(model.num_entities()), |buf, j| run(j, buf))
            .collect()
    }))
}

/// Aggregates ranks into a report. Sums run in input order, so results do
/// not depend on how the ranks were computed.
pub fn summarize(results: &[RankResult], dataset: &Dataset, cutoffs: &[usize]) -> RankReport {
    let n = results.len();
    let mean = |sum: f64, count: usize| if count == 0 { 0.0 } else { sum / count as f64 };

    let mrr_raw = mean(results.iter().map(|r| 1.0 / r.raw_rank as f64).sum(), n);
    let mrr_filtered = mean(results.iter().map(|r| 1.0 / r.filtered_rank as f64).sum(), n);
    let hits_filtered = cutoffs
        .iter()
        .map(|&k| (k, mean(results.iter().filter(|r| r.filtered_rank <= k).count() as f64, n)))
        .collect();

    let mut per: BTreeMap<usize, (f64, usize)> = BTreeMap::new();
    for r in results {
        let entry = per.entry(r.triple.relation).or_default();
        entry.0 += 1.0 / r.filtered_rank as f64;
        entry.1 += 1;
    }
    let per_relation = per
        .into_iter()
        .map(|(rel, (sum, count))| {
            let name = dataset
                .vocab()
                .relation_name(rel)
                .map_or_else(|| rel.to_string(), str::to_owned);
            (
                name,
                RelationMrr {
                    mrr_filtered: mean(sum, count),
                    predictions: count,
                },
            )
        })
        .collect();

    RankReport {
        predictions: n,
        mrr_raw,
        mrr_filtered,
        hits_filtered,
        per_relation,
    }
}

/// Evaluates the test split single-threaded.
pub fn evaluate(model: &EmbeddingModel, dataset: &Dataset, cutoffs: &[usize]) -> Result<RankReport> {
    evaluate_triples(model, dataset, &dataset.test, cutoffs, 1)
}

pub fn evaluate_triples(
    model: &EmbeddingModel,
    dataset: &Dataset,
    triples: &[Triple],
    cutoffs: &[usize],
    threads: usize,
) -> Result<RankReport> {
    let ranks = rank_triples(model, dataset, triples, threads)?;
    Ok(summarize(&ranks, dataset, cutoffs))
}

/// Expected MRR of a uniformly random ranking over `num_entities`.
pub fn random_mrr(num_entities: usize) -> f64 {
    if num_entities == 0 {
        return 0.0;
    }
    (1..=num_entities).map(|k| 1.0 / k as f64).sum::<f64>() / num_entities as f64
}

impl RankReport {
    /// Aligned plain-text rendering; the per-relation table is optional.
    pub fn to_text(&self, per_relation: bool) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{:<20} {:>10}", "predictions", self.predictions);
        let _ = writeln!(out, "{:<20} {:>10.4}", "MRR (filtered)", self.mrr_filtered);
        let _ = writeln!(out, "{:<20} {:>10.4}", "MRR (raw)", self.mrr_raw);
        for (k, v) in &self.hits_filtered {
            let _ = writeln!(out, "{:<20} {:>10.4}", format!("HITS@{k} (filtered)"), v);
        }
        if per_relation && !self.per_relation.is_empty() {
            let width = self
                .per_relation
                .keys()
                .map(|k| k.chars().count())
                .max()
                .unwrap_or(0)
                .max("relation".len());
            let _ = writeln!(out);
            let _ = writeln!(out, "{:<width$}  {:>8}  {:>11}", "relation", "MRR", "predictions");
            for (name, r) in &self.per_relation {
                let _ = writeln!(out, "{:<width$}  {:>8.4}  {:>11}", name, r.mrr_filtered, r.predictions);
            }
        }
        out
    }
}
