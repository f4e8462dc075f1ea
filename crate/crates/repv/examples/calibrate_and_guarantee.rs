//! Build the distance-calibration table and attach probabilistic guarantees
//! to individual verdicts, including catching an interpreter mistake.
//!
//! Run with: `cargo run --example calibrate_and_guarantee`

use repv::calibration::{calibrate, verify};
use repv::fixtures::{driving, synth_corpus, training_rules, universal_env};
use repv::oracle::{Interpreter, MockEmbedder, MockInterpreter};
use repv::projector::{collect_training_set, train, Hyperparams};

fn main() {
    let dom = driving();
    let ts = universal_env(&dom.mapping).expect("environment model");
    let rules = training_rules();
    let dim = 256;
    let interpreter = MockInterpreter::new(7, 0.2);
    let embedder = MockEmbedder::new(7, dim);
    let (records, _) = collect_training_set(
        &synth_corpus(7, 200),
        &rules,
        &ts,
        &dom.mapping,
        &interpreter,
        &embedder,
    );
    let hp = Hyperparams {
        input_dim: dim,
        hidden1: 64,
        hidden2: 32,
        epochs: 20,
        learning_rate: 0.5,
        ..Hyperparams::default()
    };
    let params = train(&records, hp).expect("training succeeds");
    let table = calibrate(&records, &params).expect("both classes populated");
    println!(
        "calibration over {} samples; opposite-class mass: safe table {:.2}, unsafe table {:.2}",
        table.n, table.safe.prior, table.unsafe_.prior
    );

    // Find a (plan, rule) pair the interpreter gets wrong, then show the
    // verifier overruling it with a calibrated guarantee.
    let plan = "if pedestrian_observed():\n    stop()\nelse:\n    velocity_publisher(10, 0)";
    let rule = "Let pedestrians pass first.";
    for seed in 0..200u64 {
        let flaky = MockInterpreter::new(seed, 0.2);
        if flaky.interpret(plan, rule).unwrap().y == 0 {
            let v = verify(plan, rule, &params, &table, &flaky, &embedder)
                .expect("verification runs");
            println!("\ninterpreter (seed {seed}) says y = {} — wrong", v.y);
            println!("classifier trusts it: {}", v.y_hat_safe == 1);
            println!("final compliance: {}", v.complies);
            println!(
                "guarantee: p_hat = {:.3} over {} supporting samples{}",
                v.guarantee.p_hat,
                v.guarantee.support,
                if v.guarantee.low_support { " (low support)" } else { "" }
            );
            return;
        }
    }
    println!("no flip found in 200 seeds (unexpected at a 20% error rate)");
}
