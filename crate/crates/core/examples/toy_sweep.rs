//! Grid sweep over margin and learning rate on the generated chain graph.
//!
//! `cargo run --release -p toruse --example toy_sweep -- <model> <score> <dim> <epochs>`

use toruse::evaluator::{evaluate_triples, random_mrr, DEFAULT_HITS};
use toruse::synthetic::{chain_kg, ToyConfig};
use toruse::{train, Scoring, TrainConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let model = args.first().map_or("toruse", String::as_str);
    let scoring = Scoring::parse(model, args.get(1).map(String::as_str))?;
    let dim: usize = args.get(2).map_or(Ok(50), |s| s.parse())?;
    let epochs: usize = args.get(3).map_or(Ok(300), |s| s.parse())?;

    let ds = chain_kg(&ToyConfig::default())?.to_dataset()?;
    println!("random-ranking MRR {:.4}", random_mrr(ds.num_entities()));
    println!("margin      lr   mrr_f  mrr_raw  hits@1  hits@3 hits@10  mean_pos/n");
    for margin in [0.5, 1.0, 2.0, 5.0, 10.0, 25.0, 100.0] {
        for lr in [0.0005, 0.001, 0.002, 0.005, 0.01, 0.02] {
            let config = TrainConfig { scoring, dim, margin, learning_rate: lr, epochs, groups: 100, seed: 1, filter_negatives: false };
            let (m, _) = train(&ds, &config)?;
            let r = evaluate_triples(&m, &ds, &ds.test, &DEFAULT_HITS, 0)?;
            let pos: f64 = ds.train.iter().map(|t| m.score_triple(t).unwrap()).sum::<f64>() / ds.train.len() as f64;
            println!(
                "{margin:>6} {lr:>8} {:>7.4} {:>8.4} {:>7.3} {:>7.3} {:>7.3} {:>10.5}",
                r.mrr_filtered, r.mrr_raw, r.hits_filtered[&1], r.hits_filtered[&3], r.hits_filtered[&10], pos / dim as f64
            );
        }
    }
    Ok(())
}
