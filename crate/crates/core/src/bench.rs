//! Per-epoch timing across embedding dimensions.

use std::io;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg_data::Dataset;
use crate::model::{ModelKind, Scoring};
use crate::trainer::{train, TrainConfig};

/// One CSV row: wall-clock seconds of one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub model: ModelKind,
    pub score_kind: String,
    pub dim: usize,
    pub epoch: usize,
    pub seconds: f64,
}

/// Trains each scoring at each dimension for `epochs` epochs and records
/// the epoch times. Models are interleaved within a dimension so that
/// machine drift affects both alike.
pub fn run_bench(
    dataset: &Dataset,
    scorings: &[Scoring],
    dims: &[usize],
    epochs: usize,
    base: &TrainConfig,
) -> Result<Vec<BenchRow>> {
    if dims.is_empty() {
        return Err(Error::InvalidArgument("dimension list is empty".into()));
    }
    let mut rows = Vec::with_capacity(scorings.len() * dims.len() * epochs);
    for &dim in dims {
        for &scoring in scorings {
            let config = TrainConfig {
                scoring,
                dim,
                epochs,
                ..base.clone()
            };
            let (_, history) = train(dataset, &config)?;
            rows.extend(history.into_iter().map(|e| BenchRow {
                model: scoring.model_kind(),
                score_kind: scoring.score_name().to_string(),
                dim,
                epoch: e.epoch,
                seconds: e.seconds,
            }));
        }
    }
    Ok(rows)
}

pub fn write_csv<W: io::Write>(writer: W, rows: &[BenchRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

pub fn read_csv<R: io::Read>(reader: R) -> Result<Vec<BenchRow>> {
    let mut r = csv::Reader::from_reader(reader);
    Ok(r.deserialize().collect::<std::result::Result<_, _>>()?)
}

/// Median seconds per epoch for each dimension, ascending by dimension.
pub fn median_seconds_by_dim(rows: &[BenchRow], model: ModelKind) -> Vec<(usize, f64)> {
    let mut dims: Vec<usize> = rows.iter().filter(|r| r.model == model).map(|r| r.dim).collect();
    dims.sort_unstable();
    dims.dedup();
    dims.into_iter()
        .map(|dim| {
            let mut secs: Vec<f64> = rows
                .iter()
                .filter(|r| r.model == model && r.dim == dim)
                .map(|r| r.seconds)
                .collect();
            secs.sort_by(f64::total_cmp);
            let mid = secs.len() / 2;
            let median = if secs.len() % 2 == 1 {
                secs[mid]
            } else {
                (secs[mid - 1] + secs[mid]) / 2.0
            };
            (dim, median)
        })
        .collect()
}

/// Least-squares line `y = slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn linear_fit(points: &[(f64, f64)]) -> Result<LinearFit> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("a line fit needs at least two points".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = points.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("all x values are equal".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = points.iter().map(|p| (p.1 - slope * p.0 - intercept).powi(2)).sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LinearFit {
        slope,
        intercept,
        r_squared,
    })
}
