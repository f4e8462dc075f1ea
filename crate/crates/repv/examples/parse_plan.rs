//! Parse a plan, validate it against a domain API table, and print the
//! canonical form plus the diagnostics a broken plan produces.
//!
//! Run with: `cargo run --example parse_plan`

use repv::fixtures::driving;
use repv::plan_lang::{parse_plan, pretty_print, validate_plan};

fn main() {
    let dom = driving();

    let source = "\
def cruise(v):
    velocity_publisher(v, 0)
if pedestrian_observed():
    stop()
else:
    cruise(10)   # helper call, inlined during compilation
";
    let ast = parse_plan(source).expect("well-formed plan");
    println!("--- canonical form ---");
    print!("{}", pretty_print(&ast));

    let diags = validate_plan(&ast, &dom.api);
    println!("--- diagnostics: {} ---", diags.len());

    let broken = "if pedestrian_observed(1):\n    honk()";
    let ast = parse_plan(broken).expect("syntactically fine, semantically broken");
    println!("--- diagnostics for a broken plan ---");
    for d in validate_plan(&ast, &dom.api) {
        println!("{:?} on `{}`: {}", d.kind, d.subject, d.message);
    }

    let err = parse_plan("if pedestrian_observed()\n    stop()").unwrap_err();
    println!("--- syntax error ---\n{err}");
}
