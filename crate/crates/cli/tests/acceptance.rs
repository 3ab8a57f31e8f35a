//! Acceptance criteria 1-11, run in sequence inside one test so the timing
//! criterion is not disturbed by sibling tests. Each criterion prints one
//! `PASS`, `FAIL` or `SKIP` line straight to stdout (not captured by the
//! harness); the test fails if any criterion fails.

use std::collections::HashSet;
use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tempfile::TempDir;
use toruse::evaluator::{evaluate, evaluate_triples, random_mrr, DEFAULT_HITS};
use toruse::synthetic::{chain_kg, ToyConfig};
use toruse::torus_math::{distance, score, score_gradient, score_of_diff, ScoreKind, TorusPoint, WrappedDiff};
use toruse::{train, Dataset, EmbeddingModel, ModelKind, Position, Scoring, TrainConfig, TransENorm, Triple, Vocabulary};
use toruse_cli::args::BenchArgs;
use toruse_cli::commands::cmd_bench;

enum Verdict {
    Pass(String),
    Fail(String),
    Skip(String),
}

type Criterion = (&'static str, fn() -> Verdict);

fn check(ok: bool, detail: String) -> Verdict {
    if ok {
        Verdict::Pass(detail)
    } else {
        Verdict::Fail(detail)
    }
}

fn pt(x: &[f64]) -> TorusPoint {
    TorusPoint::canonicalize(x).unwrap()
}

fn c1_worked_distance() -> Verdict {
    let d = distance(ScoreKind::L1, &pt(&[3.01]), &pt(&[0.99])).unwrap();
    check((d - 0.02).abs() <= 1e-12, format!("d_L1([3.01],[0.99]) = {d:.15}"))
}

fn c2_score_normalization() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for kind in ScoreKind::ALL {
        for n in [1usize, 7, 100] {
            for _ in 0..10_000 {
                let mut draw = || pt(&(0..n).map(|_| rng.gen_range(-50.0..50.0)).collect::<Vec<_>>());
                let (h, r, t) = (draw(), draw(), draw());
                let f = score(kind, &h, &r, &t).unwrap();
                if !(0.0..=n as f64).contains(&f) {
                    return Verdict::Fail(format!("{kind} n={n}: f = {f}"));
                }
            }
            // h + r - t = 0.5 in every coordinate
            let f = score(kind, &pt(&vec![0.25; n]), &pt(&vec![0.5; n]), &pt(&vec![0.25; n])).unwrap();
            let g = score_of_diff(kind, &WrappedDiff::from_deltas(vec![0.5; n]).unwrap());
            if f != n as f64 || g != n as f64 {
                return Verdict::Fail(format!("{kind} n={n}: antipodal score {f} / {g}"));
            }
        }
    }
    Verdict::Pass("3 kinds x n in {1,7,100} x 10000 triples in [0,n]; antipode scores exactly n".into())
}

fn c3_complex_identity() -> Verdict {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 50;
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let mut draw = || pt(&(0..n).map(|_| rng.gen_range(-10.0..10.0)).collect::<Vec<_>>());
        let (h, r, t) = (draw(), draw(), draw());
        let f = score(ScoreKind::EL2, &h, &r, &t).unwrap();
        let cos: f64 = (0..n)
            .map(|i| (2.0 * PI * (h.coords()[i] + r.coords()[i] - t.coords()[i])).cos())
            .sum();
        worst = worst.max((n as f64 - 2.0 * f - cos).abs());
    }
    check(worst < 1e-9, format!("max |n - 2 f_eL2 - sum cos| = {worst:.2e} over 1000 triples, n=50"))
}

fn c4_gradient_fidelity() -> Verdict {
    const H: f64 = 1e-6;
    const KINK: f64 = 1e-3;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let f = |kind: ScoreKind, d: f64| score_of_diff(kind, &WrappedDiff::from_deltas(vec![d]).unwrap());
    let mut worst: f64 = 0.0;
    for kind in ScoreKind::ALL {
        let mut checked = 0;
        while checked < 1000 {
            let d: f64 = rng.gen_range(-0.5..0.5);
            if d.abs() < KINK || d.abs() > 0.5 - KINK {
                continue;
            }
            let analytic = score_gradient(kind, &WrappedDiff::from_deltas(vec![d]).unwrap())[0];
            let numeric = (f(kind, d + H) - f(kind, d - H)) / (2.0 * H);
            let rel = (analytic - numeric).abs() / analytic.abs();
            worst = worst.max(rel);
            checked += 1;
        }
        let at_zero = score_gradient(kind, &WrappedDiff::from_deltas(vec![0.0]).unwrap())[0];
        if at_zero != 0.0 {
            return Verdict::Fail(format!("{kind}: gradient at 0 is {at_zero}"));
        }
    }
    let at_half = score_gradient(ScoreKind::EL2, &WrappedDiff::from_deltas(vec![0.5]).unwrap())[0];
    check(
        worst <= 1e-5 && at_half.abs() < 1e-12,
        format!("max relative error {worst:.2e} over 3000 deltas; eL2 gradient at 0.5 = {at_half:.1e}"),
    )
}

/// Every candidate scored and sorted, target first among equals; filtering
/// by a linear scan over all splits.
fn oracle_metrics(model: &EmbeddingModel, ds: &Dataset) -> (f64, f64, Vec<f64>) {
    let all: Vec<Triple> = ds.train.iter().chain(&ds.valid).chain(&ds.test).copied().collect();
    let (mut raw, mut filt) = (Vec::new(), Vec::new());
    for t in &ds.test {
        for pos in [Position::Head, Position::Tail] {
            let target = t.entity(pos);
            let mut cands: Vec<(f64, bool, bool)> = (0..ds.num_entities())
                .map(|e| {
                    let c = t.with_entity(pos, e);
                    (model.score_triple(&c).unwrap(), e == target, e != target && all.contains(&c))
                })
                .collect();
            cands.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(b.1.cmp(&a.1)));
            raw.push(cands.iter().position(|c| c.1).unwrap() + 1);
            filt.push(cands.iter().filter(|c| !c.2).position(|c| c.1).unwrap() + 1);
        }
    }
    let n = raw.len() as f64;
    let mrr = |v: &[usize]| v.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
    let hits = DEFAULT_HITS
        .iter()
        .map(|&k| filt.iter().filter(|&&r| r <= k).count() as f64 / n)
        .collect();
    (mrr(&raw), mrr(&filt), hits)
}

fn random_fixture(seed: u64) -> (Dataset, EmbeddingModel) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ne = rng.gen_range(2..=10);
    let nr = rng.gen_range(1..=3);
    let vocab = Vocabulary::from_names(
        (0..ne).map(|i| format!("e{i}")).collect(),
        (0..nr).map(|i| format!("r{i}")).collect(),
    )
    .unwrap();
    let mut draw = |k: usize| -> Vec<Triple> {
        (0..k)
            .map(|_| Triple::new(rng.gen_range(0..ne), rng.gen_range(0..nr), rng.gen_range(0..ne)))
            .collect()
    };
    let (train, valid, test) = (draw(15), draw(4), draw(6));
    let ds = Dataset::from_splits(vocab, train, valid, test).unwrap();
    let scoring = [
        Scoring::Torus(ScoreKind::L1),
        Scoring::Torus(ScoreKind::L2),
        Scoring::Torus(ScoreKind::EL2),
        Scoring::TransE(TransENorm::L1),
        Scoring::TransE(TransENorm::L2Squared),
    ][seed as usize % 5];
    let model = EmbeddingModel::init(scoring, ne, nr, 4, &mut rng).unwrap();
    (ds, model)
}

fn c5_metric_oracle() -> Verdict {
    for seed in 0..50 {
        let (ds, model) = random_fixture(seed);
        let report = evaluate(&model, &ds, &DEFAULT_HITS).unwrap();
        let (raw, filt, hits) = oracle_metrics(&model, &ds);
        let hits_ok = DEFAULT_HITS
            .iter()
            .zip(&hits)
            .all(|(k, h)| (report.hits_filtered[k] - h).abs() < 1e-12);
        if (report.mrr_raw - raw).abs() >= 1e-12 || (report.mrr_filtered - filt).abs() >= 1e-12 || !hits_ok {
            return Verdict::Fail(format!("fixture {seed}: evaluator {report:?} vs oracle {raw} {filt} {hits:?}"));
        }
    }
    Verdict::Pass("50 random fixtures (<=10 entities, <=3 relations) agree on raw/filtered MRR and HITS@1/3/10".into())
}

fn find_split(dir: &Path, name: &str) -> Option<PathBuf> {
    let exact = dir.join(format!("{name}.txt"));
    if exact.exists() {
        return Some(exact);
    }
    fs::read_dir(dir)
        .ok()?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .find(|p| {
            p.file_name()
                .and_then(|f| f.to_str())
                .is_some_and(|f| f.ends_with(&format!("{name}.txt")))
        })
}

fn dataset_dir(var: &str, name: &str) -> Option<PathBuf> {
    let dir = std::env::var_os(var)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data").join(name));
    dir.is_dir().then_some(dir)
}

fn c6_dataset_counts() -> Verdict {
    let expected = [
        ("WN18", "TORUSE_WN18_DIR", [40_943, 18, 141_442, 5_000, 5_000]),
        ("FB15K", "TORUSE_FB15K_DIR", [14_951, 1_345, 483_142, 50_000, 59_071]),
    ];
    let mut found = Vec::new();
    let mut missing = Vec::new();
    for (name, var, counts) in expected {
        let splits = dataset_dir(var, name).and_then(|d| {
            Some((find_split(&d, "train")?, find_split(&d, "valid")?, find_split(&d, "test")?))
        });
        let Some((train, valid, test)) = splits else {
            missing.push(format!("{name} (set {var} or place files under data/{name})"));
            continue;
        };
        let ds = match Dataset::load(&train, &valid, &test) {
            Ok(ds) => ds,
            Err(e) => return Verdict::Fail(format!("{name}: {e}")),
        };
        let got = [ds.num_entities(), ds.num_relations(), ds.train.len(), ds.valid.len(), ds.test.len()];
        if got != counts {
            return Verdict::Fail(format!("{name}: counts {got:?}, expected {counts:?}"));
        }
        found.push(format!("{name} {got:?}"));
    }
    match (found.is_empty(), missing.is_empty()) {
        (true, _) => Verdict::Skip(format!("dataset files absent: {}", missing.join(", "))),
        (false, true) => Verdict::Pass(found.join("; ")),
        (false, false) => Verdict::Pass(format!("{}; absent: {}", found.join("; "), missing.join(", "))),
    }
}

fn toy() -> Dataset {
    chain_kg(&ToyConfig::default()).unwrap().to_dataset().unwrap()
}

fn toy_config(scoring: Scoring, margin: f64, learning_rate: f64) -> TrainConfig {
    TrainConfig {
        scoring,
        dim: 50,
        margin,
        learning_rate,
        epochs: 300,
        groups: 100,
        seed: 1,
        filter_negatives: false,
    }
}

fn c7_toy_learning() -> Verdict {
    let ds = toy();
    let (model, _) = train(&ds, &toy_config(Scoring::Torus(ScoreKind::L1), 25.0, 0.005)).unwrap();
    let report = evaluate(&model, &ds, &DEFAULT_HITS).unwrap();
    let (_, filt, hits) = oracle_metrics(&model, &ds);
    let baseline = random_mrr(ds.num_entities());
    let agree = (report.mrr_filtered - filt).abs() < 1e-12 && (report.hits_filtered[&3] - hits[1]).abs() < 1e-12;
    check(
        report.hits_filtered[&3] >= 0.8 && report.mrr_filtered >= 10.0 * baseline && agree,
        format!(
            "TorusE f_L1 n=50, 300 epochs: HITS@3 {:.3}, filtered MRR {:.3} vs random {:.4} ({:.0}x); oracle agrees: {agree}",
            report.hits_filtered[&3],
            report.mrr_filtered,
            baseline,
            report.mrr_filtered / baseline
        ),
    )
}

/// Grid-tuned by validation filtered MRR; returns (test MRR, mean positive
/// score divided by n, chosen margin, chosen rate).
fn tuned(ds: &Dataset, scoring: Scoring) -> (f64, f64, f64, f64) {
    let mut best: Option<(f64, EmbeddingModel, f64, f64)> = None;
    for margin in [2.0, 5.0, 25.0] {
        for lr in [0.001, 0.005, 0.02] {
            let (model, _) = train(ds, &toy_config(scoring, margin, lr)).unwrap();
            let valid = evaluate_triples(&model, ds, &ds.valid, &DEFAULT_HITS, 1).unwrap().mrr_filtered;
            if best.as_ref().is_none_or(|b| valid > b.0) {
                best = Some((valid, model, margin, lr));
            }
        }
    }
    let (_, model, margin, lr) = best.unwrap();
    let test = evaluate(&model, ds, &DEFAULT_HITS).unwrap().mrr_filtered;
    let mean = ds.train.iter().map(|t| model.score_triple(t).unwrap()).sum::<f64>() / ds.train.len() as f64;
    (test, mean / model.dim() as f64, margin, lr)
}

fn c8_regularization_flaw() -> Verdict {
    let ds = toy();
    let (torus_mrr, torus_pos, tg, ta) = tuned(&ds, Scoring::Torus(ScoreKind::L1));
    let (transe_mrr, transe_pos, eg, ea) = tuned(&ds, Scoring::TransE(TransENorm::L1));
    check(
        torus_mrr >= transe_mrr && transe_pos > torus_pos,
        format!(
            "n=50, L1 scores: filtered MRR TorusE {torus_mrr:.3} (g={tg}, a={ta}) vs TransE {transe_mrr:.3} (g={eg}, a={ea}); \
             mean positive score / n TransE {transe_pos:.4} > TorusE {torus_pos:.4}"
        ),
    )
}

fn c9_scalability() -> Verdict {
    let dir = TempDir::new().unwrap();
    let args = BenchArgs {
        data_dir: None,
        toy: true,
        dims: vec![128, 1024, 8192],
        bench_epochs: 3,
        score: "l1".into(),
        transe_score: "l2sq".into(),
        margin: 2000.0,
        lr: 0.0005,
        groups: 100,
        seed: 42,
        threads: None,
        out: Some(dir.path().join("bench.csv")),
    };
    let outcome = match cmd_bench(&args) {
        Ok(o) => o,
        Err(e) => return Verdict::Fail(format!("bench failed: {e}")),
    };
    let fit = |kind: ModelKind| outcome.fits.iter().find(|f| f.model == kind).unwrap();
    let (torus, transe) = (fit(ModelKind::TorusE), fit(ModelKind::TransE));
    let faster = torus.medians.iter().zip(&transe.medians).all(|(a, b)| a.0 == b.0 && a.1 < b.1);
    let per_dim: Vec<String> = torus
        .medians
        .iter()
        .zip(&transe.medians)
        .map(|(a, b)| format!("n={}: {:.4}s vs {:.4}s", a.0, a.1, b.1))
        .collect();
    check(
        torus.fit.r_squared >= 0.95 && transe.fit.r_squared >= 0.95 && faster,
        format!(
            "R^2 TorusE {:.4}, TransE {:.4}; TorusE vs TransE s/epoch {}",
            torus.fit.r_squared,
            transe.fit.r_squared,
            per_dim.join(", ")
        ),
    )
}

fn c10_determinism() -> Verdict {
    let dir = TempDir::new().unwrap();
    let data = dir.path().join("toy");
    chain_kg(&ToyConfig::default()).unwrap().write_dir(&data).unwrap();
    let mut models = Vec::new();
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let status = Command::new(env!("CARGO_BIN_EXE_toruse"))
            .args(["train", "--data-dir"])
            .arg(&data)
            .args(["--dim", "50", "--epochs", "30", "--margin", "25", "--lr", "0.005", "--seed", "9", "--out"])
            .arg(&out)
            .output()
            .unwrap();
        if !status.status.success() {
            return Verdict::Fail(String::from_utf8_lossy(&status.stderr).into_owned());
        }
        models.push(fs::read(out.join("model.tkge")).unwrap());
    }
    check(
        models[0] == models[1],
        format!("two train runs, seed 9: {} bytes each, identical: {}", models[0].len(), models[0] == models[1]),
    )
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 10] = [
        ("worked distance example", c1_worked_distance),
        ("score normalization", c2_score_normalization),
        ("ComplEx equivalence", c3_complex_identity),
        ("gradient fidelity", c4_gradient_fidelity),
        ("metric oracle equivalence", c5_metric_oracle),
        ("dataset loader counts", c6_dataset_counts),
        ("desk-scale learning", c7_toy_learning),
        ("regularization-flaw comparison", c8_regularization_flaw),
        ("scalability shape", c9_scalability),
        ("determinism", c10_determinism),
    ];
    let mut out = std::io::stdout();
    let mut failed = Vec::new();
    for (i, (name, run)) in criteria.iter().enumerate() {
        let clock = Instant::now();
        let verdict = run();
        let secs = clock.elapsed().as_secs_f64();
        let (tag, detail) = match verdict {
            Verdict::Pass(d) => ("PASS", d),
            Verdict::Skip(d) => ("SKIP", d),
            Verdict::Fail(d) => {
                failed.push(i + 1);
                ("FAIL", d)
            }
        };
        writeln!(out, "acceptance {:>2} {tag} {name} [{secs:.1}s]: {detail}", i + 1).unwrap();
    }
    writeln!(
        out,
        "acceptance 11 SKIP published WN18/FB15K scores: declared not reproducible at desk scale (n=10000, 500 epochs)"
    )
    .unwrap();
    out.flush().unwrap();
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}

#[test]
fn score_all_replacements_is_pure() {
    let ds = toy();
    let (model, _) = train(&ds, &TrainConfig { epochs: 2, ..toy_config(Scoring::Torus(ScoreKind::EL2), 5.0, 0.01) }).unwrap();
    let t = ds.test[0];
    for pos in [Position::Head, Position::Tail] {
        let a = model.score_all_replacements(&t, pos).unwrap();
        let b = model.score_all_replacements(&t, pos).unwrap();
        assert_eq!(a.iter().map(|x| x.to_bits()).collect::<Vec<_>>(), b.iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        let distinct: HashSet<u64> = a.iter().map(|x| x.to_bits()).collect();
        assert!(distinct.len() > 1);
        assert_eq!(a[t.entity(pos)], model.score_triple(&t).unwrap());
    }
}
