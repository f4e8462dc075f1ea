//! Model-check plans from the built-in specification corpus, printing the
//! verdict and — for a violating plan — the lasso counterexample.
//!
//! Run with: `cargo run --example model_check`

use repv::fixtures::{domain, spec_case, universal_env};
use repv::l2a::l2a;
use repv::ltl::{model_check, parse_ltl};
use repv::plan_lang::parse_plan;

fn main() {
    let case = spec_case("pedestrian-yield").expect("built-in case");
    let dom = domain(case.domain).expect("built-in domain");
    let ts = universal_env(&dom.mapping).expect("environment model");
    let phi = parse_ltl(case.variants[0].source).expect("formula parses");

    println!("rule:    {}", case.rule_text);
    println!("formula: {}\n", case.variants[0].source);

    for (tag, plan) in [
        ("compliant", case.compliant[0]),
        ("violating", case.violating[0]),
    ] {
        let ast = parse_plan(plan).expect("plan parses");
        let fsa = l2a(&ast, &dom.mapping).expect("plan compiles");
        let verdict = model_check(&fsa, &ts, &phi).expect("model check runs");
        println!("--- {tag} plan ---\n{plan}\nholds: {}", verdict.holds);
        if let Some(lasso) = verdict.counterexample {
            println!("counterexample prefix: {:?}", lasso.prefix_states);
            println!("counterexample cycle:  {:?}", lasso.cycle_states);
        }
        println!();
    }
}
