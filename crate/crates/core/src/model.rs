//! Embedding tables and triple scoring for TorusE and the TransE baseline.
//!
//! Both tables are dense, row-major `f64`. A TorusE table holds canonical
//! torus coordinates in `[0, 1)`; a TransE table holds plain vectors whose
//! entity rows are kept on the unit sphere.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kg_data::{check_triple, Position, Triple};
use crate::torus_math::{self, frac, ScoreKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    TorusE,
    TransE,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::TorusE => "toruse",
            ModelKind::TransE => "transe",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "toruse" => Ok(ModelKind::TorusE),
            "transe" => Ok(ModelKind::TransE),
            other => Err(Error::InvalidArgument(format!(
                "unknown model {other:?} (expected toruse or transe)"
            ))),
        }
    }
}

/// Norm used by the TransE baseline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TransENorm {
    #[serde(rename = "l1")]
    L1,
    #[serde(rename = "l2sq")]
    L2Squared,
}

impl TransENorm {
    pub fn as_str(self) -> &'static str {
        match self {
            TransENorm::L1 => "l1",
            TransENorm::L2Squared => "l2sq",
        }
    }

    #[inline]
    fn kernel(self, d: f64) -> f64 {
        match self {
            TransENorm::L1 => d.abs(),
            TransENorm::L2Squared => d * d,
        }
    }

    #[inline]
    fn kernel_derivative(self, d: f64) -> f64 {
        match self {
            TransENorm::L1 => {
                if d > 0.0 {
                    1.0
                } else if d < 0.0 {
                    -1.0
                } else {
                    0.0
                }
            }
            TransENorm::L2Squared => 2.0 * d,
        }
    }
}

impl FromStr for TransENorm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(TransENorm::L1),
            "l2sq" => Ok(TransENorm::L2Squared),
            other => Err(Error::InvalidArgument(format!(
                "unknown TransE score {other:?} (expected l1 or l2sq)"
            ))),
        }
    }
}

/// Model family together with its scoring function.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "model", content = "score", rename_all = "lowercase")]
pub enum Scoring {
    #[serde(rename = "toruse")]
    Torus(ScoreKind),
    #[serde(rename = "transe")]
    TransE(TransENorm),
}

impl Scoring {
    /// Resolves a `(model, score)` pair of flag values. A missing score picks
    /// L1 for TorusE and squared L2 for TransE.
    pub fn parse(model: &str, score: Option<&str>) -> Result<Self> {
        match model.parse::<ModelKind>()? {
            ModelKind::TorusE => Ok(Scoring::Torus(score.unwrap_or("l1").parse()?)),
            ModelKind::TransE => Ok(Scoring::TransE(score.unwrap_or("l2sq").parse()?)),
        }
    }

    pub fn model_kind(self) -> ModelKind {
        match self {
            Scoring::Torus(_) => ModelKind::TorusE,
            Scoring::TransE(_) => ModelKind::TransE,
        }
    }

    pub fn score_name(self) -> &'static str {
        match self {
            Scoring::Torus(k) => k.as_str(),
            Scoring::TransE(n) => n.as_str(),
        }
    }

    /// `(model kind byte, score kind byte)` as stored in model files.
    pub fn to_codes(self) -> (u8, u8) {
        match self {
            Scoring::Torus(ScoreKind::L1) => (0, 0),
            Scoring::Torus(ScoreKind::L2) => (0, 1),
            Scoring::Torus(ScoreKind::EL2) => (0, 2),
            Scoring::TransE(TransENorm::L1) => (1, 0),
            Scoring::TransE(TransENorm::L2Squared) => (1, 1),
        }
    }

    pub fn from_codes(model: u8, score: u8) -> Result<Self> {
        Ok(match (model, score) {
            (0, 0) => Scoring::Torus(ScoreKind::L1),
            (0, 1) => Scoring::Torus(ScoreKind::L2),
            (0, 2) => Scoring::Torus(ScoreKind::EL2),
            (1, 0) => Scoring::TransE(TransENorm::L1),
            (1, 1) => Scoring::TransE(TransENorm::L2Squared),
            _ => {
                return Err(Error::Format(format!(
                    "unknown model/score code pair ({model}, {score})"
                )))
            }
        })
    }
}

impl fmt::Display for Scoring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.model_kind(), self.score_name())
    }
}

/// Entity and relation embedding tables.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingModel {
    scoring: Scoring,
    dim: usize,
    num_entities: usize,
    num_relations: usize,
    entities: Vec<f64>,
    relations: Vec<f64>,
}

impl EmbeddingModel {
    /// Random initialization.
    ///
    /// TorusE draws every coordinate uniformly from `[0, 1)`. TransE draws
    /// uniformly from `[-6/sqrt(n), 6/sqrt(n)]` and then puts entity rows on
    /// the unit sphere.
    pub fn init<R: Rng + ?Sized>(
        scoring: Scoring,
        num_entities: usize,
        num_relations: usize,
        dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
        }
        if num_entities == 0 {
            return Err(Error::InvalidArgument("model needs at least one entity".into()));
        }
        let mut draw = |len: usize| -> Vec<f64> {
            match scoring {
                Scoring::Torus(_) => (0..len).map(|_| rng.gen::<f64>()).collect(),
                Scoring::TransE(_) => {
                    let bound = 6.0 / (dim as f64).sqrt();
                    (0..len).map(|_| rng.gen_range(-bound..=bound)).collect()
                }
            }
        };
        let entities = draw(num_entities * dim);
        let relations = draw(num_relations * dim);
        let mut model = EmbeddingModel {
            scoring,
            dim,
            num_entities,
            num_relations,
            entities,
            relations,
        };
        if let Scoring::TransE(_) = scoring {
            model.normalize_entities()?;
        }
        Ok(model)
    }

    /// Wraps existing tables, validating their shape and contents.
    pub fn from_tables(
        scoring: Scoring,
        dim: usize,
        num_entities: usize,
        num_relations: usize,
        entities: Vec<f64>,
        relations: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidArgument("embedding dimension must be at least 1".into()));
        }
        if entities.len() != num_entities * dim {
            return Err(Error::DimensionMismatch {
                expected: num_entities * dim,
                found: entities.len(),
            });
        }
        if relations.len() != num_relations * dim {
            return Err(Error::DimensionMismatch {
                expected: num_relations * dim,
                found: relations.len(),
            });
        }
        let all = entities.iter().chain(&relations);
        match scoring {
            Scoring::Torus(_) => {
                if let Some(x) = all.clone().find(|x| !(0.0..1.0).contains(*x)) {
                    return Err(Error::InvalidArgument(format!(
                        "torus coordinate {x} outside [0, 1)"
                    )));
                }
            }
            Scoring::TransE(_) => {
                if let Some(x) = all.clone().find(|x| !x.is_finite()) {
                    return Err(Error::InvalidArgument(format!("non-finite coordinate {x}")));
                }
            }
        }
        Ok(EmbeddingModel {
            scoring,
            dim,
            num_entities,
            num_relations,
            entities,
            relations,
        })
    }

    pub fn scoring(&self) -> Scoring {
        self.scoring
    }

    pub fn kind(&self) -> ModelKind {
        self.scoring.model_kind()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_entities(&self) -> usize {
        self.num_entities
    }

    pub fn num_relations(&self) -> usize {
        self.num_relations
    }

    pub fn entity_table(&self) -> &[f64] {
        &self.entities
    }

    pub fn relation_table(&self) -> &[f64] {
        &self.relations
    }

    pub fn entity(&self, id: usize) -> &[f64] {
        &self.entities[id * self.dim..(id + 1) * self.dim]
    }

    pub fn relation(&self, id: usize) -> &[f64] {
        &self.relations[id * self.dim..(id + 1) * self.dim]
    }

    pub(crate) fn check(&self, triple: &Triple) -> Result<()> {
        check_triple(triple, self.num_entities, self.num_relations)
    }

    /// Score of `(h, r, t)` given by rows. Lower means more plausible.
    #[inline]
    pub(crate) fn score_rows(&self, h: &[f64], r: &[f64], t: &[f64]) -> f64 {
        match self.scoring {
            Scoring::Torus(kind) => torus_math::score_slices(kind, h, r, t),
            Scoring::TransE(norm) => h
                .iter()
                .zip(r)
                .zip(t)
                .map(|((&h, &r), &t)| norm.kernel(h + r - t))
                .sum(),
        }
    }

    #[inline]
    pub(crate) fn score_ids(&self, triple: &Triple) -> f64 {
        self.score_rows(
            self.entity(triple.head),
            self.relation(triple.relation),
            self.entity(triple.tail),
        )
    }

    pub fn score_triple(&self, triple: &Triple) -> Result<f64> {
        self.check(triple)?;
        Ok(self.score_ids(triple))
    }

    /// Scores of `triple` with every entity substituted at `position`.
    pub fn score_all_replacements(&self, triple: &Triple, position: Position) -> Result<Vec<f64>> {
        self.check(triple)?;
        let mut out = Vec::with_capacity(self.num_entities);
        self.score_all_into(triple, position, &mut out);
        Ok(out)
    }

    pub(crate) fn score_all_into(&self, triple: &Triple, position: Position, out: &mut Vec<f64>) {
        out.clear();
        let r = self.relation(triple.relation);
        match position {
            Position::Head => {
                let t = self.entity(triple.tail);
                out.extend((0..self.num_entities).map(|e| self.score_rows(self.entity(e), r, t)));
            }
            Position::Tail => {
                let h = self.entity(triple.head);
                out.extend((0..self.num_entities).map(|e| self.score_rows(h, r, self.entity(e))));
            }
        }
    }

    /// Writes `d score / d residual` for `(h, r, t)` into `out`, where the
    /// residual is `h + r - t` (wrapped on the torus). The gradient with
    /// respect to `h` and `r` equals `out`; with respect to `t` it is `-out`.
    pub(crate) fn residual_gradient(&self, triple: &Triple, out: &mut [f64]) {
        let h = self.entity(triple.head);
        let r = self.relation(triple.relation);
        let t = self.entity(triple.tail);
        match self.scoring {
            Scoring::Torus(kind) => {
                for (o, ((&h, &r), &t)) in out.iter_mut().zip(h.iter().zip(r).zip(t)) {
                    *o = kind.kernel_derivative(torus_math::translation_residual(h, r, t));
                }
            }
            Scoring::TransE(norm) => {
                for (o, ((&h, &r), &t)) in out.iter_mut().zip(h.iter().zip(r).zip(t)) {
                    *o = norm.kernel_derivative(h + r - t);
                }
            }
        }
    }

    /// `row += scale * direction` on an entity row, re-canonicalizing for TorusE.
    pub(crate) fn axpy_entity(&mut self, id: usize, scale: f64, direction: &[f64]) {
        let torus = matches!(self.scoring, Scoring::Torus(_));
        let row = &mut self.entities[id * self.dim..(id + 1) * self.dim];
        axpy(row, scale, direction, torus);
    }

    pub(crate) fn axpy_relation(&mut self, id: usize, scale: f64, direction: &[f64]) {
        let torus = matches!(self.scoring, Scoring::Torus(_));
        let row = &mut self.relations[id * self.dim..(id + 1) * self.dim];
        axpy(row, scale, direction, torus);
    }

    /// Rescales every entity row to unit Euclidean norm. TransE only.
    pub fn normalize_entities(&mut self) -> Result<()> {
        if self.kind() != ModelKind::TransE {
            return Err(Error::InvalidOperation(
                "entity normalization applies to TransE only; torus embeddings are unregularized".into(),
            ));
        }
        let dim = self.dim;
        if let Some(i) = self
            .entities
            .chunks_exact(dim)
            .position(|row| row.iter().all(|&x| x == 0.0))
        {
            return Err(Error::InvalidState(format!("entity {i} has zero norm")));
        }
        for row in self.entities.chunks_exact_mut(dim) {
            let norm = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            for x in row.iter_mut() {
                *x /= norm;
            }
        }
        Ok(())
    }
}

#[inline]
fn axpy(row: &mut [f64], scale: f64, direction: &[f64], torus: bool) {
    if torus {
        for (x, d) in row.iter_mut().zip(direction) {
            *x = frac(*x + scale * d);
        }
    } else {
        for (x, d) in row.iter_mut().zip(direction) {
            *x += scale * d;
        }
    }
}
