//! Compile a plan to its finite-state automaton and print the call-site
//! proposition mapping plus the Graphviz rendering.
//!
//! Run with: `cargo run --example compile_to_automaton`

use repv::fixtures::driving;
use repv::l2a::{explain_mapping, l2a};
use repv::plan_lang::parse_plan;

fn main() {
    let dom = driving();
    let source = "\
while not stop_sign_detected():
    velocity_publisher(10, 0)
stop()
";
    let ast = parse_plan(source).expect("plan parses");

    println!("--- call sites and emitted propositions ---");
    for (site, props) in explain_mapping(&ast, &dom.mapping) {
        let props: Vec<&str> = props.iter().map(String::as_str).collect();
        println!("{site:<30} -> {{{}}}", props.join(", "));
    }

    let fsa = l2a(&ast, &dom.mapping).expect("plan compiles");
    println!("\n--- automaton ({} states) ---", fsa.state_names.len());
    print!("{}", fsa.to_dot());
}
