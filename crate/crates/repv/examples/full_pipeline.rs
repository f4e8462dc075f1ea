//! The whole pipeline in one pass: synthesize a corpus, train the projector,
//! calibrate, stream per-sample verdicts, and print the metrics report that
//! compares the calibrated verifier against the raw interpreter.
//!
//! Run with: `cargo run --example full_pipeline`

use repv::calibration::calibrate;
use repv::metrics::report;
use repv::pipeline::{assemble_records, sample_stream, train_from_config, RunConfig, TrainConfig};

fn main() {
    let cfg = RunConfig {
        seed: 42,
        embedding_dim: 256,
        train: TrainConfig {
            corpus_size: 300,
            epochs: 20,
            hidden1: 64,
            hidden2: 32,
            ..TrainConfig::default()
        },
        ..RunConfig::default()
    };

    let outcome = train_from_config(&cfg).expect("training succeeds");
    println!(
        "trained on {} records (fit {:.3}), {} skipped",
        outcome.n_records,
        outcome.fit_accuracy,
        outcome.skipped.len()
    );

    let (records, _) = assemble_records(&cfg).expect("corpus assembles");
    let table = calibrate(&records, &outcome.params).expect("calibration succeeds");
    let stream = sample_stream(&records, &outcome.params, &table).expect("stream builds");
    let rep = report(&stream).expect("non-empty stream");

    println!("\n--- overall ---");
    println!("samples:              {}", rep.overall.n);
    println!("interpreter accuracy: {:.3}", rep.overall.interpreter_accuracy);
    println!("verifier accuracy:    {:.3}", rep.overall.verifier_accuracy);
    println!("compliance rate:      {:.3}", rep.overall.compliance_rate);

    println!("\n--- guarantee histogram (p_hat in tenths) ---");
    for (i, count) in rep.guarantee_histogram.iter().enumerate() {
        println!(
            "[{:.1}, {:.1}{} {:>4}",
            i as f64 / 10.0,
            (i + 1) as f64 / 10.0,
            if i == 9 { "]" } else { ")" },
            count
        );
    }
}
