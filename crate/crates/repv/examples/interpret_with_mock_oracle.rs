//! Judge a plan with the offline language-model stand-ins: the keyword
//! interpreter with its seeded error channel, and the hashing embedder.
//!
//! Run with: `cargo run --example interpret_with_mock_oracle`

use repv::oracle::{Embedder, Interpreter, MockEmbedder, MockInterpreter};

fn main() {
    let plan = "if pedestrian_observed():\n    stop()\nelse:\n    velocity_publisher(10, 0)";
    let rule = "Let pedestrians pass first.";

    let interpreter = MockInterpreter::new(0, 0.2);
    let out = interpreter.interpret(plan, rule).expect("mock never fails");
    println!("y = {} (1 = complies)", out.y);
    println!("rationale: {}\n", out.rationale);

    // The same (plan, rule) under different seeds shows the flip channel.
    let flips = (0..100)
        .filter(|&seed| {
            MockInterpreter::new(seed, 0.2)
                .interpret(plan, rule)
                .unwrap()
                .y
                == 0
        })
        .count();
    println!("flipped on {flips}/100 seeds at a nominal 20% error rate\n");

    let embedder = MockEmbedder::new(0, 1536);
    let e = embedder
        .embed(&format!("{plan}\n{}", out.rationale))
        .expect("mock never fails");
    println!("embedding: dim = {}, norm = {:.3}", e.dim(), e.norm());
    let other = embedder.embed("a completely different text").unwrap();
    println!("cosine to unrelated text = {:.3}", e.cosine(&other));
}
