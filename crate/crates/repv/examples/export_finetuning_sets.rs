//! Export supervised and preference fine-tuning datasets from verified
//! candidate plans, and show how the confidence threshold filters them.
//!
//! Run with: `cargo run --example export_finetuning_sets`

use repv::pipeline::{candidate_tasks, train_from_config, RunConfig, TrainConfig};
use repv::calibration::calibrate;
use repv::pipeline::assemble_records;
use repv::refine::{build_dpo, build_sft, export_dpo_jsonl, export_sft_jsonl, VerifiedPlan};

fn main() {
    let cfg = RunConfig {
        seed: 7,
        embedding_dim: 256,
        train: TrainConfig {
            corpus_size: 150,
            epochs: 20,
            hidden1: 64,
            hidden2: 32,
            ..TrainConfig::default()
        },
        ..RunConfig::default()
    };
    let outcome = train_from_config(&cfg).expect("training succeeds");
    let (records, _) = assemble_records(&cfg).expect("corpus assembles");
    let table = calibrate(&records, &outcome.params).expect("calibration succeeds");

    let tasks = candidate_tasks(&cfg, &outcome.params, &table).expect("candidates verify");
    let all: Vec<VerifiedPlan> = tasks.iter().flat_map(|t| t.candidates.clone()).collect();
    println!("{} tasks, {} candidate plans", tasks.len(), all.len());

    for tau in [0.6, 0.8, 0.95] {
        let sft = build_sft(&all, tau);
        println!("tau = {tau:>4}: {} supervised records", sft.len());
    }

    let sft = build_sft(&all, cfg.tau);
    let (dpo, dropped) = build_dpo(&tasks).expect("every task has two candidates");
    println!(
        "\nat tau = {}: {} supervised records, {} preference pairs, {} pairs dropped",
        cfg.tau,
        sft.len(),
        dpo.len(),
        dropped.len()
    );

    println!("\n--- first supervised line ---");
    print!("{}", export_sft_jsonl(&sft).lines().next().unwrap_or(""));
    println!("\n--- first preference line ---");
    print!("{}", export_dpo_jsonl(&dpo).lines().next().unwrap_or(""));
    println!();
}
