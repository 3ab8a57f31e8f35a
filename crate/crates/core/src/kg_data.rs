//! Triple files, vocabularies, the true-triple index and Bernoulli negative
//! sampling.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A fact `(head, relation, tail)` over dense integer ids.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Triple {
    pub head: usize,
    pub relation: usize,
    pub tail: usize,
}

impl Triple {
    pub fn new(head: usize, relation: usize, tail: usize) -> Self {
        Triple {
            head,
            relation,
            tail,
        }
    }

    /// Entity at `position`.
    pub fn entity(&self, position: Position) -> usize {
        match position {
            Position::Head => self.head,
            Position::Tail => self.tail,
        }
    }

    /// Copy of this triple with the entity at `position` replaced.
    pub fn with_entity(&self, position: Position, entity: usize) -> Triple {
        match position {
            Position::Head => Triple { head: entity, ..*self },
            Position::Tail => Triple { tail: entity, ..*self },
        }
    }
}

/// Which end of a triple is being corrupted or predicted.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Position {
    Head,
    Tail,
}

/// Bijection between entity/relation names and dense ids `0..count`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Vocabulary {
    entities: Vec<String>,
    relations: Vec<String>,
    entity_ids: HashMap<String, usize>,
    relation_ids: HashMap<String, usize>,
}

impl Vocabulary {
    pub fn new() -> Self {
        Self::default()
    }

    /// Builds a vocabulary from ordered name lists; names must be unique.
    pub fn from_names(entities: Vec<String>, relations: Vec<String>) -> Result<Self> {
        let mut vocab = Vocabulary::new();
        for name in entities {
            if vocab.entity_ids.contains_key(&name) {
                return Err(Error::InvalidArgument(format!("duplicate entity name {name:?}")));
            }
            vocab.intern_entity(&name);
        }
        for name in relations {
            if vocab.relation_ids.contains_key(&name) {
                return Err(Error::InvalidArgument(format!("duplicate relation name {name:?}")));
            }
            vocab.intern_relation(&name);
        }
        Ok(vocab)
    }

    pub fn intern_entity(&mut self, name: &str) -> usize {
        intern(&mut self.entities, &mut self.entity_ids, name)
    }

    pub fn intern_relation(&mut self, name: &str) -> usize {
        intern(&mut self.relations, &mut self.relation_ids, name)
    }

    pub fn entity_id(&self, name: &str) -> Option<usize> {
        self.entity_ids.get(name).copied()
    }

    pub fn relation_id(&self, name: &str) -> Option<usize> {
        self.relation_ids.get(name).copied()
    }

    pub fn entity_name(&self, id: usize) -> Option<&str> {
        self.entities.get(id).map(String::as_str)
    }

    pub fn relation_name(&self, id: usize) -> Option<&str> {
        self.relations.get(id).map(String::as_str)
    }

    pub fn entities(&self) -> &[String] {
        &self.entities
    }

    pub fn relations(&self) -> &[String] {
        &self.relations
    }

    pub fn num_entities(&self) -> usize {
        self.entities.len()
    }

    pub fn num_relations(&self) -> usize {
        self.relations.len()
    }
}

fn intern(names: &mut Vec<String>, ids: &mut HashMap<String, usize>, name: &str) -> usize {
    if let Some(&id) = ids.get(name) {
        return id;
    }
    let id = names.len();
    names.push(name.to_owned());
    ids.insert(name.to_owned(), id);
    id
}

/// A raw `(head, relation, tail)` line.
pub type NamedTriple = (String, String, String);

/// Reads a tab-separated triple file. Duplicates are kept.
pub fn read_triples(path: &Path) -> Result<Vec<NamedTriple>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_triples(&text, path)
}

fn parse_triples(text: &str, path: &Path) -> Result<Vec<NamedTriple>> {
    let mut out = Vec::new();
    for (i, line) in text.split_terminator('\n').enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        }
        out.push((fields[0].to_owned(), fields[1].to_owned(), fields[2].to_owned()));
    }
    Ok(out)
}

/// Vocabulary plus the three splits, with an index over every known true triple.
#[derive(Debug, Clone)]
pub struct Dataset {
    vocab: Vocabulary,
    pub train: Vec<Triple>,
    pub valid: Vec<Triple>,
    pub test: Vec<Triple>,
    true_set: HashSet<Triple>,
    tails: HashMap<(usize, usize), Vec<usize>>,
    heads: HashMap<(usize, usize), Vec<usize>>,
}

impl Dataset {
    /// Loads the three split files. The vocabulary is assigned in order of
    /// first appearance across train, valid, test.
    pub fn load(train: &Path, valid: &Path, test: &Path) -> Result<Self> {
        let train_raw = read_triples(train)?;
        if train_raw.is_empty() {
            return Err(Error::EmptySplit(train.to_path_buf()));
        }
        let valid_raw = read_triples(valid)?;
        let test_raw = read_triples(test)?;
        Self::from_named(&train_raw, &valid_raw, &test_raw)
    }

    /// Loads `train.txt`, `valid.txt` and `test.txt` from a directory.
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let [train, valid, test] = split_paths(dir);
        Self::load(&train, &valid, &test)
    }

    pub fn from_named(train: &[NamedTriple], valid: &[NamedTriple], test: &[NamedTriple]) -> Result<Self> {
        let mut vocab = Vocabulary::new();
        let mut convert = |raw: &[NamedTriple]| -> Vec<Triple> {
            raw.iter()
                .map(|(h, r, t)| {
                    let head = vocab.intern_entity(h);
                    let relation = vocab.intern_relation(r);
                    let tail = vocab.intern_entity(t);
                    Triple::new(head, relation, tail)
                })
                .collect()
        };
        let train = convert(train);
        let valid = convert(valid);
        let test = convert(test);
        Self::from_splits(vocab, train, valid, test)
    }

    /// Assembles a dataset from id triples, checking every id against `vocab`.
    pub fn from_splits(vocab: Vocabulary, train: Vec<Triple>, valid: Vec<Triple>, test: Vec<Triple>) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::EmptySplit(PathBuf::from("<train>")));
        }
        let (ne, nr) = (vocab.num_entities(), vocab.num_relations());
        for t in train.iter().chain(&valid).chain(&test) {
            check_triple(t, ne, nr)?;
        }
        let mut true_set = HashSet::new();
        let mut tails: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        let mut heads: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for &t in train.iter().chain(&valid).chain(&test) {
            if true_set.insert(t) {
                tails.entry((t.head, t.relation)).or_default().push(t.tail);
                heads.entry((t.relation, t.tail)).or_default().push(t.head);
            }
        }
        Ok(Dataset {
            vocab,
            train,
            valid,
            test,
            true_set,
            tails,
            heads,
        })
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn num_entities(&self) -> usize {
        self.vocab.num_entities()
    }

    pub fn num_relations(&self) -> usize {
        self.vocab.num_relations()
    }

    /// Membership in the union of train, valid and test.
    pub fn is_true(&self, triple: &Triple) -> bool {
        self.true_set.contains(triple)
    }

    pub fn num_true(&self) -> usize {
        self.true_set.len()
    }

    /// Every entity `e` such that `(e, relation, tail)` is a known triple.
    pub fn known_heads(&self, relation: usize, tail: usize) -> &[usize] {
        self.heads.get(&(relation, tail)).map_or(&[], Vec::as_slice)
    }

    /// Every entity `e` such that `(head, relation, e)` is a known triple.
    pub fn known_tails(&self, head: usize, relation: usize) -> &[usize] {
        self.tails.get(&(head, relation)).map_or(&[], Vec::as_slice)
    }

    /// Known entities completing `triple` at `position`, the target included.
    pub fn known_completions(&self, triple: &Triple, position: Position) -> &[usize] {
        match position {
            Position::Head => self.known_heads(triple.relation, triple.tail),
            Position::Tail => self.known_tails(triple.head, triple.relation),
        }
    }
}

/// The conventional split file names inside a dataset directory.
pub fn split_paths(dir: &Path) -> [PathBuf; 3] {
    [dir.join("train.txt"), dir.join("valid.txt"), dir.join("test.txt")]
}

pub(crate) fn check_triple(t: &Triple, num_entities: usize, num_relations: usize) -> Result<()> {
    for id in [t.head, t.tail] {
        if id >= num_entities {
            return Err(Error::IdOutOfRange {
                what: "entity",
                id,
                count: num_entities,
            });
        }
    }
    if t.relation >= num_relations {
        return Err(Error::IdOutOfRange {
            what: "relation",
            id: t.relation,
            count: num_relations,
        });
    }
    Ok(())
}

/// Mean tails per head and heads per tail for one relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelationStats {
    pub tph: f64,
    pub hpt: f64,
}

impl RelationStats {
    /// Probability of corrupting the head rather than the tail.
    pub fn head_probability(&self) -> f64 {
        self.tph / (self.tph + self.hpt)
    }
}

/// Per-relation statistics for "Bern" negative sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct BernStats {
    per_relation: Vec<Option<RelationStats>>,
}

impl BernStats {
    /// Statistics over the training split only.
    pub fn compute(dataset: &Dataset) -> Self {
        Self::from_triples(&dataset.train, dataset.num_relations())
    }

    pub fn from_triples(triples: &[Triple], num_relations: usize) -> Self {
        let mut pairs: Vec<HashSet<(usize, usize)>> = vec![HashSet::new(); num_relations];
        for t in triples {
            pairs[t.relation].insert((t.head, t.tail));
        }
        let per_relation = pairs
            .into_iter()
            .map(|set| {
                if set.is_empty() {
                    return None;
                }
                let heads: HashSet<usize> = set.iter().map(|&(h, _)| h).collect();
                let tails: HashSet<usize> = set.iter().map(|&(_, t)| t).collect();
                let n = set.len() as f64;
                Some(RelationStats {
                    tph: n / heads.len() as f64,
                    hpt: n / tails.len() as f64,
                })
            })
            .collect();
        BernStats { per_relation }
    }

    pub fn get(&self, relation: usize) -> Option<RelationStats> {
        self.per_relation.get(relation).copied().flatten()
    }

    /// Head-replacement probability; 0.5 for relations unseen in training.
    pub fn head_probability(&self, relation: usize) -> f64 {
        self.get(relation).map_or(0.5, |s| s.head_probability())
    }
}

/// Corrupts either the head or the tail of `triple` with a uniformly drawn
/// different entity. The side is chosen by the relation's Bern probability.
pub fn sample_negative<R: Rng + ?Sized>(
    triple: &Triple,
    stats: &BernStats,
    num_entities: usize,
    rng: &mut R,
) -> Result<Triple> {
    if num_entities < 2 {
        return Err(Error::InvalidState(format!(
            "negative sampling needs at least 2 entities, have {num_entities}"
        )));
    }
    let position = if rng.gen::<f64>() < stats.head_probability(triple.relation) {
        Position::Head
    } else {
        Position::Tail
    };
    let original = triple.entity(position);
    let mut replacement = rng.gen_range(0..num_entities - 1);
    if replacement >= original {
        replacement += 1;
    }
    Ok(triple.with_entity(position, replacement))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::io::Write;

    fn named(rows: &[(&str, &str, &str)]) -> Vec<NamedTriple> {
        rows.iter()
            .map(|(h, r, t)| (h.to_string(), r.to_string(), t.to_string()))
            .collect()
    }

    fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
        let p = dir.join(name);
        fs::File::create(&p).unwrap().write_all(body.as_bytes()).unwrap();
        p
    }

    #[test]
    fn load_builds_vocab_in_first_seen_order() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "train.txt", "a\tr\tb\nb\tr\tc\na\tr\tb\n");
        write(dir.path(), "valid.txt", "c\ts\ta\n");
        write(dir.path(), "test.txt", "d\tr\ta\n");
        let ds = Dataset::load_dir(dir.path()).unwrap();
        assert_eq!(ds.vocab().entities(), &["a", "b", "c", "d"]);
        assert_eq!(ds.vocab().relations(), &["r", "s"]);
        // duplicates kept verbatim
        assert_eq!((ds.train.len(), ds.valid.len(), ds.test.len()), (3, 1, 1));
        assert_eq!(ds.num_true(), 4);
        assert!(ds.is_true(&Triple::new(3, 0, 0)));
        assert!(!ds.is_true(&Triple::new(0, 0, 3)));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "train.txt", "a\tr\tb\na r b\n");
        write(dir.path(), "valid.txt", "");
        write(dir.path(), "test.txt", "");
        match Dataset::load_dir(dir.path()) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_train_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        write(dir.path(), "train.txt", "");
        write(dir.path(), "valid.txt", "a\tr\tb\n");
        write(dir.path(), "test.txt", "");
        let err = Dataset::load_dir(dir.path()).unwrap_err();
        assert!(matches!(err, Error::EmptySplit(_)));
        assert!(err.to_string().contains("empty split"));
    }

    #[test]
    fn missing_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(Dataset::load_dir(dir.path()), Err(Error::Io { .. })));
    }

    #[test]
    fn crlf_and_missing_final_newline() {
        let rows = parse_triples("a\tr\tb\r\nc\tr\td", Path::new("x")).unwrap();
        assert_eq!(rows, named(&[("a", "r", "b"), ("c", "r", "d")]));
    }

    #[test]
    fn unseen_test_entities_join_vocab() {
        let ds = Dataset::from_named(&named(&[("a", "r", "b")]), &[], &named(&[("z", "r", "a")])).unwrap();
        assert_eq!(ds.num_entities(), 3);
        assert_eq!(ds.vocab().entity_id("z"), Some(2));
    }

    #[test]
    fn from_splits_checks_ids() {
        let vocab = Vocabulary::from_names(vec!["a".into(), "b".into()], vec!["r".into()]).unwrap();
        let err = Dataset::from_splits(vocab, vec![Triple::new(0, 0, 2)], vec![], vec![]).unwrap_err();
        assert!(matches!(err, Error::IdOutOfRange { what: "entity", id: 2, .. }));
    }

    #[test]
    fn duplicate_vocab_names_rejected() {
        assert!(Vocabulary::from_names(vec!["a".into(), "a".into()], vec![]).is_err());
    }

    #[test]
    fn known_completions() {
        let ds = Dataset::from_named(
            &named(&[("a", "r", "b"), ("a", "r", "c"), ("d", "r", "c")]),
            &[],
            &[],
        )
        .unwrap();
        let t = Triple::new(0, 0, 1);
        let mut tails = ds.known_completions(&t, Position::Tail).to_vec();
        tails.sort();
        assert_eq!(tails, vec![1, 2]);
        let mut heads = ds.known_heads(0, 2).to_vec();
        heads.sort();
        assert_eq!(heads, vec![0, 3]);
        assert!(ds.known_tails(1, 0).is_empty());
    }

    #[test]
    fn bern_stats_examples() {
        // {(a,r,b),(a,r,c)} -> tph = 2/1, hpt = 2/2
        let s = BernStats::from_triples(&[Triple::new(0, 0, 1), Triple::new(0, 0, 2)], 1);
        assert_eq!(s.get(0), Some(RelationStats { tph: 2.0, hpt: 1.0 }));

        let s = BernStats::from_triples(&[Triple::new(4, 0, 7)], 1);
        assert_eq!(s.get(0), Some(RelationStats { tph: 1.0, hpt: 1.0 }));

        // bijection over 5 pairs
        let pairs: Vec<Triple> = (0..5).map(|i| Triple::new(i, 0, 10 + i)).collect();
        let s = BernStats::from_triples(&pairs, 2);
        assert_eq!(s.get(0), Some(RelationStats { tph: 1.0, hpt: 1.0 }));
        assert_eq!(s.get(1), None);
        assert_eq!(s.head_probability(1), 0.5);
    }

    #[test]
    fn bern_stats_ignore_duplicates() {
        let s = BernStats::from_triples(
            &[Triple::new(0, 0, 1), Triple::new(0, 0, 1), Triple::new(0, 0, 2)],
            1,
        );
        assert_eq!(s.get(0), Some(RelationStats { tph: 2.0, hpt: 1.0 }));
    }

    #[test]
    fn negative_needs_two_entities() {
        let stats = BernStats::from_triples(&[Triple::new(0, 0, 0)], 1);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!(matches!(
            sample_negative(&Triple::new(0, 0, 0), &stats, 1, &mut rng),
            Err(Error::InvalidState(_))
        ));
    }

    fn head_rate(stats: &BernStats, draws: usize, seed: u64) -> (usize, usize) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pos = Triple::new(3, 0, 5);
        let mut heads = 0;
        for _ in 0..draws {
            let neg = sample_negative(&pos, stats, 10, &mut rng).unwrap();
            assert_ne!(neg, pos);
            let head_changed = neg.head != pos.head;
            let tail_changed = neg.tail != pos.tail;
            assert!(head_changed ^ tail_changed);
            assert_eq!(neg.relation, pos.relation);
            assert!(neg.head < 10 && neg.tail < 10);
            if head_changed {
                heads += 1;
            }
        }
        (heads, draws - heads)
    }

    #[test]
    fn symmetric_relation_corrupts_each_side_half_the_time() {
        let stats = BernStats::from_triples(&[Triple::new(0, 0, 1)], 1);
        let (heads, tails) = head_rate(&stats, 10_000, 7);
        // chi-square with one degree of freedom; 6.635 is the p = 0.01 critical value
        let expected = 5_000.0;
        let chi2 = (heads as f64 - expected).powi(2) / expected + (tails as f64 - expected).powi(2) / expected;
        assert!(chi2 < 6.635, "chi2 = {chi2}");
    }

    #[test]
    fn one_to_many_relation_prefers_head_corruption() {
        let stats = BernStats::from_triples(&[Triple::new(0, 0, 1), Triple::new(0, 0, 2)], 1);
        let (heads, _) = head_rate(&stats, 10_000, 11);
        let rate = heads as f64 / 10_000.0;
        assert!((rate - 2.0 / 3.0).abs() < 0.02, "rate = {rate}");
    }

    #[test]
    fn replacement_is_uniform_over_other_entities() {
        let stats = BernStats::from_triples(&[Triple::new(0, 0, 1)], 1);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let pos = Triple::new(0, 0, 1);
        let mut seen = [0usize; 4];
        for _ in 0..4_000 {
            let neg = sample_negative(&pos, &stats, 4, &mut rng).unwrap();
            if neg.head != pos.head {
                seen[neg.head] += 1;
            }
        }
        assert_eq!(seen[0], 0);
        for &c in &seen[1..] {
            assert!(c > 500, "{seen:?}");
        }
    }
}
