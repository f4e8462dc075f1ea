//! Assemble a labeled corpus (interpreter judgment × model-checker ground
//! truth), train the latent projector, and report how well the reliability
//! classifier fits.
//!
//! Run with: `cargo run --example train_projector`

use repv::fixtures::{driving, synth_corpus, training_rules, universal_env};
use repv::oracle::{MockEmbedder, MockInterpreter};
use repv::projector::{classify, collect_training_set, project, train, Hyperparams};

fn main() {
    let dom = driving();
    let ts = universal_env(&dom.mapping).expect("environment model");
    let rules = training_rules();
    let plans = synth_corpus(7, 200);
    let dim = 256;

    let interpreter = MockInterpreter::new(7, 0.2);
    let embedder = MockEmbedder::new(7, dim);
    let (records, skipped) =
        collect_training_set(&plans, &rules, &ts, &dom.mapping, &interpreter, &embedder);
    println!("collected {} records ({} skipped)", records.len(), skipped.len());
    let unreliable = records.iter().filter(|r| r.y_safe == 0).count();
    println!("interpreter wrong on {unreliable} of them");

    let hp = Hyperparams {
        input_dim: dim,
        hidden1: 64,
        hidden2: 32,
        latent_dim: 10,
        epochs: 20,
        learning_rate: 0.5,
        ..Hyperparams::default()
    };
    let params = train(&records, hp).expect("training succeeds");
    println!("trained {} parameters", params.param_count());

    let correct = records
        .iter()
        .filter(|r| {
            let z = project(&params, &r.embedding).unwrap();
            classify(&params, &z) == r.y_safe
        })
        .count();
    println!(
        "reliability classification fit: {}/{} ({:.1}%)",
        correct,
        records.len(),
        100.0 * correct as f64 / records.len() as f64
    );
}
