//! A small generated knowledge graph with known relational structure.
//!
//! Entities are laid out on disjoint chains. Three relations are generated:
//! `next` links each entity to its successor, `prev` is its exact inverse and
//! `next2` is the two-step composition `next . next`. A random share of all
//! triples is held out for validation and test.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::kg_data::{split_paths, Dataset, NamedTriple};

#[derive(Debug, Clone, PartialEq)]
pub struct ToyConfig {
    pub entities: usize,
    pub chain_len: usize,
    pub test_fraction: f64,
    pub valid_fraction: f64,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig {
            entities: 200,
            chain_len: 10,
            test_fraction: 0.10,
            valid_fraction: 0.05,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ToySplits {
    pub train: Vec<NamedTriple>,
    pub valid: Vec<NamedTriple>,
    pub test: Vec<NamedTriple>,
}

impl ToySplits {
    pub fn to_dataset(&self) -> Result<Dataset> {
        Dataset::from_named(&self.train, &self.valid, &self.test)
    }

    /// Writes `train.txt`, `valid.txt` and `test.txt` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let [train, valid, test] = split_paths(dir);
        for (path, rows) in [(train, &self.train), (valid, &self.valid), (test, &self.test)] {
            let mut f = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
            let mut body = String::new();
            for (h, r, t) in rows {
                body.push_str(&format!("{h}\t{r}\t{t}\n"));
            }
            f.write_all(body.as_bytes()).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }
}

pub fn chain_kg(config: &ToyConfig) -> Result<ToySplits> {
    if config.chain_len < 3 {
        return Err(Error::InvalidArgument("chains need at least 3 entities".into()));
    }
    if config.entities < config.chain_len {
        return Err(Error::InvalidArgument(format!(
            "{} entities cannot fill a chain of length {}",
            config.entities, config.chain_len
        )));
    }
    let held = config.test_fraction + config.valid_fraction;
    if !(config.test_fraction >= 0.0 && config.valid_fraction >= 0.0 && held < 1.0) {
        return Err(Error::InvalidArgument("held-out fractions must be non-negative and sum below 1".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut names: Vec<String> = (0..config.entities).map(|i| format!("e{i:04}")).collect();
    names.shuffle(&mut rng);

    let mut triples = Vec::new();
    for chain in names.chunks(config.chain_len).filter(|c| c.len() >= 3) {
        for i in 0..chain.len() - 1 {
            triples.push((chain[i].clone(), "next".to_string(), chain[i + 1].clone()));
            triples.push((chain[i + 1].clone(), "prev".to_string(), chain[i].clone()));
        }
        for i in 0..chain.len() - 2 {
            triples.push((chain[i].clone(), "next2".to_string(), chain[i + 2].clone()));
        }
    }
    triples.shuffle(&mut rng);

    let n_test = (triples.len() as f64 * config.test_fraction).round() as usize;
    let n_valid = (triples.len() as f64 * config.valid_fraction).round() as usize;
    let test = triples.drain(..n_test).collect();
    let valid = triples.drain(..n_valid).collect();
    Ok(ToySplits {
        train: triples,
        valid,
        test,
    })
}
