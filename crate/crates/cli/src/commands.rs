use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use toruse::bench::{self, BenchRow, LinearFit};
use toruse::evaluator::{evaluate_triples, RankReport};
use toruse::persist;
use toruse::synthetic::{chain_kg, ToyConfig};
use toruse::trainer::train_with;
use toruse::{Dataset, ModelKind, Scoring, TrainConfig};

use crate::args::{BenchArgs, EvalArgs, InspectArgs, ToyArgs, TrainArgs};
use crate::error::{CliError, CliResult};
use crate::manifest::{checksum_splits, verify_checksums, Artifacts, DatasetCounts, RunManifest};

pub const MODEL_FILE: &str = "model.tkge";
pub const VOCAB_FILE: &str = "vocab.json";
pub const METRICS_FILE: &str = "metrics.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

/// Hyperparameters accepted from a TOML config file.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub model: Option<String>,
    pub score: Option<String>,
    pub dim: Option<usize>,
    pub margin: Option<f64>,
    pub lr: Option<f64>,
    pub epochs: Option<usize>,
    pub groups: Option<usize>,
    pub seed: Option<u64>,
    pub filter_negatives: Option<bool>,
}

impl ConfigFile {
    pub fn read(path: &Path) -> CliResult<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        toml::from_str(&text).map_err(|e| CliError::Config {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

/// Merges flags over the config file over the defaults.
pub fn resolve_config(args: &TrainArgs, file: &ConfigFile) -> CliResult<TrainConfig> {
    let defaults = TrainConfig::default();
    let model = args.model.clone().or_else(|| file.model.clone()).unwrap_or_else(|| "toruse".into());
    let score = args.score.clone().or_else(|| file.score.clone());
    let scoring = Scoring::parse(&model, score.as_deref()).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(TrainConfig {
        scoring,
        dim: args.dim.or(file.dim).unwrap_or(defaults.dim),
        margin: args.margin.or(file.margin).unwrap_or(defaults.margin),
        learning_rate: args.lr.or(file.lr).unwrap_or(defaults.learning_rate),
        epochs: args.epochs.or(file.epochs).unwrap_or(defaults.epochs),
        groups: args.groups.or(file.groups).unwrap_or(defaults.groups),
        seed: args.seed.or(file.seed).unwrap_or(defaults.seed),
        filter_negatives: args.filter_negatives || file.filter_negatives.unwrap_or(false),
    })
}

fn unix_now() -> f64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs_f64())
        .unwrap_or(0.0)
}

fn create_file(path: &Path) -> CliResult<BufWriter<fs::File>> {
    fs::File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::io(path, e))
}

pub fn cmd_train(args: &TrainArgs) -> CliResult<RunManifest> {
    let (config, data_dir, recorded) = match &args.replay {
        Some(path) => {
            let manifest = RunManifest::read(path)?;
            verify_checksums(&manifest.data_files)?;
            (manifest.config, manifest.data_dir, Some(manifest.data_files))
        }
        None => {
            let file = match &args.config {
                Some(p) => ConfigFile::read(p)?,
                None => ConfigFile::default(),
            };
            let dir = args
                .data_dir
                .clone()
                .ok_or_else(|| CliError::Usage("--data-dir is required".into()))?;
            (resolve_config(args, &file)?, dir, None)
        }
    };

    let data_files = match recorded {
        Some(files) => files,
        None => checksum_splits(&data_dir)?,
    };
    let dataset = Dataset::load_dir(&data_dir)?;
    config.validate(dataset.train.len())?;

    fs::create_dir_all(&args.out).map_err(|e| CliError::io(&args.out, e))?;
    let artifacts = Artifacts {
        model: args.out.join(MODEL_FILE),
        vocab: args.out.join(VOCAB_FILE),
        metrics: args.out.join(METRICS_FILE),
    };

    let started_unix = unix_now();
    let clock = Instant::now();
    let mut metrics = create_file(&artifacts.metrics)?;
    let mut write_error = None;
    let (model, history) = train_with(&dataset, &config, |stats| {
        if write_error.is_some() {
            return;
        }
        let line = serde_json::to_string(stats).expect("epoch stats serialize");
        if let Err(e) = writeln!(metrics, "{line}").and_then(|_| metrics.flush()) {
            write_error = Some(e);
        }
    })?;
    if let Some(e) = write_error {
        return Err(CliError::io(&artifacts.metrics, e));
    }

    persist::write_model(&artifacts.model, &model)?;
    persist::write_vocab(&artifacts.vocab, dataset.vocab())?;

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        config,
        data_dir,
        data_files,
        counts: DatasetCounts {
            entities: dataset.num_entities(),
            relations: dataset.num_relations(),
            train: dataset.train.len(),
            valid: dataset.valid.len(),
            test: dataset.test.len(),
        },
        started_unix,
        finished_unix: unix_now(),
        wall_seconds: clock.elapsed().as_secs_f64(),
        artifacts,
    };
    manifest.write(&args.out.join(MANIFEST_FILE))?;

    if let Some(last) = history.last() {
        eprintln!(
            "trained {} (n = {}) for {} epochs: final loss {:.4}, {} violations, {:.3}s/epoch",
            manifest.config.scoring,
            manifest.config.dim,
            history.len(),
            last.loss,
            last.violations,
            history.iter().map(|e| e.seconds).sum::<f64>() / history.len() as f64
        );
    }
    Ok(manifest)
}

pub fn cmd_eval(args: &EvalArgs) -> CliResult<RankReport> {
    let dataset = Dataset::load_dir(&args.data_dir)?;
    let header = persist::read_header(&args.model_file)?;
    if header.num_entities != dataset.num_entities() || header.num_relations != dataset.num_relations() {
        return Err(toruse::Error::Consistency(format!(
            "model header has {} entities / {} relations, dataset vocabulary has {} / {}",
            header.num_entities,
            header.num_relations,
            dataset.num_entities(),
            dataset.num_relations()
        ))
        .into());
    }
    let vocab_path = args
        .vocab
        .clone()
        .unwrap_or_else(|| args.model_file.with_file_name(VOCAB_FILE));
    if args.vocab.is_some() || vocab_path.exists() {
        let vocab = persist::read_vocab(&vocab_path)?;
        if vocab.entities() != dataset.vocab().entities() || vocab.relations() != dataset.vocab().relations() {
            return Err(toruse::Error::Consistency(format!(
                "{} does not match the dataset vocabulary",
                vocab_path.display()
            ))
            .into());
        }
    }
    let model = persist::read_model(&args.model_file)?;

    let triples = match args.split.as_str() {
        "test" => &dataset.test,
        "valid" => &dataset.valid,
        other => return Err(CliError::Usage(format!("unknown split {other:?} (expected test or valid)"))),
    };
    let report = evaluate_triples(&model, &dataset, triples, &args.hits, args.threads)?;
    let text = report.to_text(args.per_relation);
    print!("{text}");

    if let Some(path) = &args.report {
        let mut json = serde_json::to_value(&report)?;
        if !args.per_relation {
            json.as_object_mut().map(|o| o.remove("per_relation"));
        }
        let body = serde_json::to_string_pretty(&json)?;
        fs::write(path, body).map_err(|e| CliError::io(path, e))?;
        let txt = path.with_extension("txt");
        fs::write(&txt, &text).map_err(|e| CliError::io(&txt, e))?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct ModelFit {
    pub model: ModelKind,
    pub score_kind: String,
    pub fit: LinearFit,
    /// Median seconds per epoch by dimension.
    pub medians: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchOutcome {
    pub rows: Vec<BenchRow>,
    pub fits: Vec<ModelFit>,
}

pub fn cmd_bench(args: &BenchArgs) -> CliResult<BenchOutcome> {
    if args.dims.is_empty() {
        return Err(CliError::Usage("--dims needs at least one dimension".into()));
    }
    let dataset = match &args.data_dir {
        Some(dir) => Dataset::load_dir(dir)?,
        None => chain_kg(&ToyConfig::default())?.to_dataset()?,
    };
    let torus = Scoring::parse("toruse", Some(&args.score)).map_err(|e| CliError::Usage(e.to_string()))?;
    let transe = Scoring::parse("transe", Some(&args.transe_score)).map_err(|e| CliError::Usage(e.to_string()))?;
    let base = TrainConfig {
        margin: args.margin,
        learning_rate: args.lr,
        groups: args.groups,
        seed: args.seed,
        ..TrainConfig::default()
    };
    let rows = bench::run_bench(&dataset, &[torus, transe], &args.dims, args.bench_epochs, &base)?;

    match &args.out {
        Some(path) => bench::write_csv(create_file(path)?, &rows)?,
        None => bench::write_csv(io::stdout().lock(), &rows)?,
    }

    let mut fits = Vec::new();
    for scoring in [torus, transe] {
        let medians = bench::median_seconds_by_dim(&rows, scoring.model_kind());
        if medians.len() < 2 {
            continue;
        }
        let points: Vec<(f64, f64)> = medians.iter().map(|&(d, s)| (d as f64, s)).collect();
        let fit = bench::linear_fit(&points)?;
        eprintln!(
            "{:<7} {:<5} seconds/epoch = {:.3e} * n + {:.3e}  (R^2 = {:.4})",
            scoring.model_kind().as_str(),
            scoring.score_name(),
            fit.slope,
            fit.intercept,
            fit.r_squared
        );
        fits.push(ModelFit {
            model: scoring.model_kind(),
            score_kind: scoring.score_name().to_string(),
            fit,
            medians,
        });
    }
    Ok(BenchOutcome { rows, fits })
}

#[derive(Debug, Clone, Serialize)]
pub struct TableStats {
    pub min: f64,
    pub max: f64,
    pub mean_row_norm: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Inspection {
    pub header: persist::ModelHeader,
    pub model: String,
    pub score_kind: String,
    pub file_bytes: u64,
    pub entities: Option<TableStats>,
    pub relations: Option<TableStats>,
}

fn table_stats(table: &[f64], dim: usize) -> Option<TableStats> {
    if table.is_empty() {
        return None;
    }
    let rows = table.len() / dim;
    Some(TableStats {
        min: table.iter().copied().fold(f64::INFINITY, f64::min),
        max: table.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        mean_row_norm: table
            .chunks_exact(dim)
            .map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt())
            .sum::<f64>()
            / rows as f64,
    })
}

pub fn cmd_inspect(args: &InspectArgs) -> CliResult<Inspection> {
    let bytes = fs::read(&args.model_file).map_err(|e| CliError::io(&args.model_file, e))?;
    let header = persist::decode_header(&bytes)?;
    let model = persist::decode_model(&bytes)?;
    let inspection = Inspection {
        header,
        model: header.scoring.model_kind().to_string(),
        score_kind: header.scoring.score_name().to_string(),
        file_bytes: bytes.len() as u64,
        entities: table_stats(model.entity_table(), model.dim()),
        relations: table_stats(model.relation_table(), model.dim()),
    };
    println!("{}", serde_json::to_string_pretty(&inspection)?);
    Ok(inspection)
}

pub fn cmd_toy(args: &ToyArgs) -> CliResult<PathBuf> {
    let splits = chain_kg(&ToyConfig {
        entities: args.entities,
        chain_len: args.chain_len,
        seed: args.seed,
        ..ToyConfig::default()
    })
    .map_err(|e| CliError::Usage(e.to_string()))?;
    splits.write_dir(&args.out)?;
    eprintln!(
        "wrote {} train / {} valid / {} test triples to {}",
        splits.train.len(),
        splits.valid.len(),
        splits.test.len(),
        args.out.display()
    );
    Ok(args.out.clone())
}
