//! Ready-made verification domains and test corpora.
//!
//! Three embodied domains ship with the crate — an urban **driving** stack, a
//! **quadruped** walker, and a **drone** flight controller — each as an API
//! table (which calls a plan may make) plus a proposition mapping (what those
//! calls mean). On top of them sit:
//!
//! * [`spec_corpus`]: ten natural-language rules, each formalized in
//!   temporal logic (with both scoping variants where the English is
//!   ambiguous) and paired with hand-written compliant and violating plans;
//! * [`training_rules`]: fifteen paraphrased driving rules for exercising
//!   the learned pipeline;
//! * [`synth_corpus`]: a seeded generator of plans matched to those rules,
//!   balanced between compliant and violating behaviour.
//!
//! The corpora are co-designed with the offline interpreter heuristics in
//! [`crate::oracle`]: for every generated template, the heuristic's base
//! label agrees with the model checker, so the mock pipeline is learnable by
//! construction and every observed disagreement is attributable to the
//! seeded error channel.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::automata::{universal_ts, AutomataError, PropSet, TransitionSystem};
use crate::l2a::{ArgPattern, MappingRule, PropositionMapping, RuleKind};
use crate::ltl::parse_ltl;
use crate::plan_lang::{ApiDecl, ApiKind, ApiTable};
use crate::projector::{PlanSample, RuleSpec};

// ---------------------------------------------------------------------------
// Domains
// ---------------------------------------------------------------------------

/// A named pairing of API surface and proposition mapping.
#[derive(Debug, Clone)]
pub struct Domain {
    pub name: &'static str,
    pub api: ApiTable,
    pub mapping: PropositionMapping,
}

fn api(decls: &[(&str, Option<usize>, ApiKind)]) -> ApiTable {
    ApiTable {
        apis: decls
            .iter()
            .map(|(name, arity, kind)| ApiDecl {
                name: (*name).into(),
                arity: *arity,
                kind: *kind,
            })
            .collect(),
    }
}

fn rule(api: &str, kind: RuleKind, args: &[&str], props: &[&str]) -> MappingRule {
    MappingRule {
        api: api.into(),
        kind,
        args: args
            .iter()
            .map(|a| ArgPattern::parse(a).expect("fixture argument pattern"))
            .collect(),
        props: props.iter().map(|p| (*p).to_string()).collect(),
    }
}

/// Urban driving: boolean perception queries plus a velocity command whose
/// argument signs determine the manoeuvre.
pub fn driving() -> Domain {
    Domain {
        name: "driving",
        api: api(&[
            ("pedestrian_observed", Some(0), ApiKind::Boolean),
            ("car_detected", Some(0), ApiKind::Boolean),
            ("red_light_detected", Some(0), ApiKind::Boolean),
            ("stop_sign_detected", Some(0), ApiKind::Boolean),
            ("stop", Some(0), ApiKind::Action),
            ("velocity_publisher", Some(2), ApiKind::Action),
        ]),
        mapping: PropositionMapping {
            rules: vec![
                rule("pedestrian_observed", RuleKind::Sensor, &[], &["pedestrian"]),
                rule("car_detected", RuleKind::Sensor, &[], &["car"]),
                rule("red_light_detected", RuleKind::Sensor, &[], &["red light"]),
                rule("stop_sign_detected", RuleKind::Sensor, &[], &["stop sign"]),
                rule("stop", RuleKind::Action, &[], &["stop"]),
                rule("velocity_publisher", RuleKind::Action, &["0", "0"], &["stop"]),
                rule(
                    "velocity_publisher",
                    RuleKind::Action,
                    &["+", "0"],
                    &["move forward", "publish velocity"],
                ),
                rule(
                    "velocity_publisher",
                    RuleKind::Action,
                    &["*", "+"],
                    &["turn left", "publish velocity"],
                ),
                rule(
                    "velocity_publisher",
                    RuleKind::Action,
                    &["*", "-"],
                    &["turn right", "publish velocity"],
                ),
                rule(
                    "velocity_publisher",
                    RuleKind::Action,
                    &["*", "*"],
                    &["publish velocity"],
                ),
            ],
            permissive: false,
        },
    }
}

/// Quadruped walker: an obstacle sensor plus body-frame motion commands.
pub fn quadruped() -> Domain {
    Domain {
        name: "quadruped",
        api: api(&[
            ("obstacle_detected", Some(0), ApiKind::Boolean),
            ("Move", Some(3), ApiKind::Action),
            ("StandDown", Some(0), ApiKind::Action),
            ("StandUp", Some(0), ApiKind::Action),
        ]),
        mapping: PropositionMapping {
            rules: vec![
                rule("obstacle_detected", RuleKind::Sensor, &[], &["obstacle"]),
                rule("Move", RuleKind::Action, &["+", "0", "0"], &["move forward"]),
                rule("Move", RuleKind::Action, &["0", "+", "0"], &["step left"]),
                rule("Move", RuleKind::Action, &["0", "-", "0"], &["step right"]),
                rule("Move", RuleKind::Action, &["0", "0", "0"], &["stop"]),
                rule("StandDown", RuleKind::Action, &[], &["stop"]),
                rule("StandUp", RuleKind::Action, &[], &["stand"]),
            ],
            permissive: false,
        },
    }
}

/// Drone flight controller: NED velocity commands and an altitude limiter.
pub fn drone() -> Domain {
    Domain {
        name: "drone",
        api: api(&[
            ("obstacle_in_front", Some(0), ApiKind::Boolean),
            ("set_velocity_ned", Some(4), ApiKind::Action),
            ("attitude_limit", Some(1), ApiKind::Action),
        ]),
        mapping: PropositionMapping {
            rules: vec![
                rule("obstacle_in_front", RuleKind::Sensor, &[], &["obstacle ahead"]),
                rule(
                    "set_velocity_ned",
                    RuleKind::Action,
                    &["*", "*", "=2.0", "*"],
                    &["landing overspeed", "descend"],
                ),
                rule(
                    "set_velocity_ned",
                    RuleKind::Action,
                    &["*", "*", "=0.5", "*"],
                    &["descend"],
                ),
                rule("set_velocity_ned", RuleKind::Action, &["*", "*", "*", "*"], &["fly"]),
                rule("attitude_limit", RuleKind::Action, &["=200"], &["over altitude"]),
                rule("attitude_limit", RuleKind::Action, &["*"], &["altitude set"]),
            ],
            permissive: false,
        },
    }
}

pub fn domains() -> Vec<Domain> {
    vec![driving(), quadruped(), drone()]
}

pub fn domain(name: &str) -> Option<Domain> {
    domains().into_iter().find(|d| d.name == name)
}

/// Environment model for a mapping: every sensor proposition evolves freely,
/// action propositions are automaton-controlled, over the mapping's full
/// alphabet.
pub fn universal_env(map: &PropositionMapping) -> Result<TransitionSystem, AutomataError> {
    let ap = PropSet::new(map.all_props())?;
    universal_ts(&ap, &map.sensor_props())
}

// ---------------------------------------------------------------------------
// Specification corpus
// ---------------------------------------------------------------------------

/// One formalization of a rule. Where the English admits more than one
/// operator scoping, the corpus carries each reading as its own variant.
#[derive(Debug, Clone)]
pub struct SpecVariant {
    pub name: &'static str,
    /// Temporal-logic surface syntax; parse with [`crate::ltl::parse_ltl`].
    pub source: &'static str,
}

/// A natural-language rule with its formalizations and hand-written plans.
/// Every variant must hold on every compliant plan and fail on every
/// violating plan.
#[derive(Debug, Clone)]
pub struct SpecCase {
    pub id: &'static str,
    /// Name of the [`Domain`] whose mapping the plans compile under.
    pub domain: &'static str,
    pub rule_text: &'static str,
    pub variants: Vec<SpecVariant>,
    pub compliant: Vec<&'static str>,
    pub violating: Vec<&'static str>,
}

fn variant(name: &'static str, source: &'static str) -> SpecVariant {
    SpecVariant { name, source }
}

/// Ten rules across the three domains. The `lifted`/`wrapped` variant pair
/// records the two readings of "when σ, do ψ": the trigger lifted out as an
/// antecedent versus the whole implication under `G`. `next`/`eventual`
/// record the two readings of how soon the response is due.
pub fn spec_corpus() -> Vec<SpecCase> {
    vec![
        SpecCase {
            id: "pedestrian-yield",
            domain: "driving",
            rule_text: "Do not publish velocity commands while a pedestrian is crossing.",
            variants: vec![
                variant("wrapped", "G (pedestrian -> X !\"publish velocity\")"),
                variant(
                    "lifted",
                    "(F pedestrian) -> G (pedestrian -> X !\"publish velocity\")",
                ),
            ],
            compliant: vec![
                "if pedestrian_observed():\n    stop()\nelse:\n    velocity_publisher(10, 0)",
            ],
            violating: vec![
                "if pedestrian_observed():\n    velocity_publisher(10, 0)\nelse:\n    stop()",
            ],
        },
        SpecCase {
            id: "clear-road-go",
            domain: "driving",
            rule_text: "Publish velocity when the road is clear.",
            variants: vec![
                variant(
                    "wrapped",
                    "G (!(pedestrian | car | \"red light\") -> X \"publish velocity\")",
                ),
                variant(
                    "lifted",
                    "(F !(pedestrian | car | \"red light\")) -> X \"publish velocity\"",
                ),
            ],
            compliant: vec!["while True:\n    velocity_publisher(10, 0)"],
            violating: vec!["while True:\n    stop()", "stop()"],
        },
        SpecCase {
            id: "stop-sign-car",
            domain: "driving",
            rule_text: "Stop and wait when there is a stop sign and a car at the intersection.",
            variants: vec![
                variant(
                    "wrapped",
                    "G ((\"stop sign\" & car) -> X !\"publish velocity\")",
                ),
                variant(
                    "lifted",
                    "(F (\"stop sign\" & car)) -> G ((\"stop sign\" & car) -> X !\"publish velocity\")",
                ),
            ],
            compliant: vec![
                "if stop_sign_detected() and car_detected():\n    stop()\nelse:\n    velocity_publisher(10, 0)",
            ],
            violating: vec![
                "if stop_sign_detected() and car_detected():\n    velocity_publisher(10, 0)\nelse:\n    stop()",
            ],
        },
        SpecCase {
            id: "stop-sign-halt",
            domain: "driving",
            rule_text: "Come to a stop at every stop sign.",
            variants: vec![
                variant("wrapped", "G (\"stop sign\" -> F stop)"),
                variant("lifted", "(F \"stop sign\") -> F stop"),
            ],
            compliant: vec![
                "while not stop_sign_detected():\n    velocity_publisher(10, 0)\nstop()",
                "for _ in range(3):\n    velocity_publisher(10, 0)\nstop()",
            ],
            violating: vec!["while True:\n    velocity_publisher(10, 0)"],
        },
        SpecCase {
            id: "red-light-stop",
            domain: "driving",
            rule_text: "Stop at a red light.",
            variants: vec![
                variant("wrapped", "G (\"red light\" -> X !\"publish velocity\")"),
                variant(
                    "lifted",
                    "(F \"red light\") -> G (\"red light\" -> X !\"publish velocity\")",
                ),
            ],
            compliant: vec![
                "if red_light_detected():\n    stop()\nelse:\n    velocity_publisher(10, 0)",
            ],
            violating: vec![
                "if red_light_detected():\n    velocity_publisher(0, 5)\nelse:\n    velocity_publisher(10, 0)",
            ],
        },
        SpecCase {
            id: "obstacle-no-forward",
            domain: "quadruped",
            rule_text: "Do not move forward when an obstacle is detected.",
            variants: vec![
                variant("wrapped", "G (obstacle -> X !\"move forward\")"),
                variant(
                    "lifted",
                    "(F obstacle) -> G (obstacle -> X !\"move forward\")",
                ),
            ],
            compliant: vec![
                "if obstacle_detected():\n    Move(0, 0.3, 0)\nelse:\n    Move(0.5, 0, 0)",
            ],
            violating: vec![
                "if obstacle_detected():\n    Move(0.5, 0, 0)\nelse:\n    Move(0, 0.3, 0)",
            ],
        },
        SpecCase {
            id: "obstacle-sidestep",
            domain: "quadruped",
            rule_text: "Step left or step right to avoid an obstacle.",
            variants: vec![
                variant("next", "G (obstacle -> X (\"step left\" | \"step right\"))"),
                variant(
                    "eventual",
                    "G (obstacle -> F (\"step left\" | \"step right\"))",
                ),
            ],
            compliant: vec!["while True:\n    Move(0, 0.3, 0)"],
            violating: vec!["while True:\n    Move(0.5, 0, 0)"],
        },
        SpecCase {
            id: "no-idle-stop",
            domain: "quadruped",
            rule_text: "Do not stop when no obstacle is present.",
            variants: vec![
                variant("wrapped", "G (!obstacle -> X !stop)"),
                variant("lifted", "(F !obstacle) -> G (!obstacle -> X !stop)"),
            ],
            compliant: vec![
                "if obstacle_detected():\n    StandDown()\nelse:\n    Move(0.5, 0, 0)",
            ],
            violating: vec![
                "if obstacle_detected():\n    Move(0.5, 0, 0)\nelse:\n    StandDown()",
            ],
        },
        SpecCase {
            id: "landing-speed-cap",
            domain: "drone",
            rule_text: "Keep the landing descent speed below the safe limit.",
            variants: vec![variant("only", "G !\"landing overspeed\"")],
            compliant: vec!["attitude_limit(20)\nset_velocity_ned(0, 0, 0.5, 0)"],
            violating: vec!["attitude_limit(20)\nset_velocity_ned(0, 0, 2.0, 0)"],
        },
        SpecCase {
            id: "altitude-cap",
            domain: "drone",
            rule_text: "Never exceed the maximum altitude limit.",
            variants: vec![variant("only", "G !\"over altitude\"")],
            compliant: vec!["attitude_limit(20)\nset_velocity_ned(0, 0, 0.5, 0)"],
            violating: vec!["attitude_limit(200)\nset_velocity_ned(0, 0, 0.5, 0)"],
        },
    ]
}

pub fn spec_case(id: &str) -> Option<SpecCase> {
    spec_corpus().into_iter().find(|c| c.id == id)
}

// ---------------------------------------------------------------------------
// Training rules and synthetic plan corpus
// ---------------------------------------------------------------------------

/// Fifteen driving rules — three paraphrases of each of the five driving
/// specifications — with the `wrapped` formalization. The paraphrases are
/// worded so the offline interpreter's keyword table categorizes each one
/// the same way the formula does.
pub fn training_rules() -> Vec<RuleSpec> {
    let corpus = spec_corpus();
    let phi_of = |id: &str| {
        let case = corpus.iter().find(|c| c.id == id).expect("fixture spec id");
        parse_ltl(case.variants[0].source).expect("fixture formula parses")
    };
    let texts: [(&str, [&str; 3]); 5] = [
        (
            "pedestrian-yield",
            [
                "Let pedestrians pass first.",
                "Do not publish velocity commands while a pedestrian is crossing.",
                "Yield to any pedestrian in the roadway.",
            ],
        ),
        (
            "clear-road-go",
            [
                "Publish velocity when the road is clear.",
                "Keep driving while the way ahead is clear.",
                "Proceed and publish velocity whenever the lane is clear.",
            ],
        ),
        (
            "stop-sign-car",
            [
                "Stop and wait when there is a stop sign and a car at the intersection.",
                "When a car is present at a stop sign, do not publish velocity.",
                "Give way to the car already waiting at the stop sign.",
            ],
        ),
        (
            "stop-sign-halt",
            [
                "Come to a stop at every stop sign.",
                "Always halt the vehicle at a stop sign.",
                "A stop sign requires the vehicle to stop.",
            ],
        ),
        (
            "red-light-stop",
            [
                "Stop at a red light.",
                "Do not publish velocity while the red light is on.",
                "Remain stationary as long as the red light is on.",
            ],
        ),
    ];
    let mut rules = Vec::new();
    for (spec_id, paraphrases) in texts {
        let phi = phi_of(spec_id);
        for text in paraphrases {
            rules.push(RuleSpec {
                id: format!("rule-{:02}", rules.len() + 1),
                text: text.to_string(),
                phi: phi.clone(),
            });
        }
    }
    rules
}

/// Seeded generator of driving plans. Plan `i` targets the category of
/// training rule `i mod 15` (matching the round-robin pairing used when
/// collecting a training set) and is compliant or violating with equal
/// probability. For every template the model-check verdict against the
/// rule's formula equals the offline interpreter's base label.
pub fn synth_corpus(seed: u64, n: usize) -> Vec<PlanSample> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let speeds = [5, 8, 10, 12];
    let mut plans = Vec::with_capacity(n);
    for i in 0..n {
        let category = (i % 15) / 3;
        let violating = rng.gen_bool(0.5);
        let v = speeds[rng.gen_range(0..speeds.len())];
        let mut text = match category {
            // Branch on a sensor; the offending arm publishes velocity.
            0 | 2 | 4 => {
                let cond = match category {
                    0 => "pedestrian_observed()",
                    2 => "stop_sign_detected() and car_detected()",
                    _ => "red_light_detected()",
                };
                let go = if category == 4 && rng.gen_bool(0.5) {
                    // Turning through the junction still publishes velocity.
                    format!("velocity_publisher(0, {})", [3, 5][rng.gen_range(0..2)])
                } else {
                    format!("velocity_publisher({v}, 0)")
                };
                let (then_arm, else_arm) = if violating {
                    (go, "stop()".to_string())
                } else {
                    ("stop()".to_string(), go)
                };
                format!("if {cond}:\n    {then_arm}\nelse:\n    {else_arm}")
            }
            // Keep publishing forever, or wrongly park.
            1 => {
                if violating {
                    if rng.gen_bool(0.5) {
                        "while True:\n    stop()".to_string()
                    } else {
                        "stop()".to_string()
                    }
                } else {
                    let body = "    velocity_publisher".to_string();
                    let lines = rng.gen_range(1..=2);
                    let mut t = "while True:".to_string();
                    for _ in 0..lines {
                        t.push_str(&format!("\n{body}({v}, 0)"));
                    }
                    t
                }
            }
            // Drive until the sign (or for a fixed leg), then halt — or never halt.
            _ => {
                if violating {
                    format!("while True:\n    velocity_publisher({v}, 0)")
                } else if rng.gen_bool(0.5) {
                    format!(
                        "while not stop_sign_detected():\n    velocity_publisher({v}, 0)\nstop()"
                    )
                } else {
                    let k = rng.gen_range(2..=4);
                    format!("for _ in range({k}):\n    velocity_publisher({v}, 0)\nstop()")
                }
            }
        };
        if matches!(category, 0 | 2 | 4) && rng.gen_bool(0.5) {
            text.push_str("\nsleep(1)");
        }
        plans.push(PlanSample {
            id: format!("plan-{i:03}"),
            text,
        });
    }
    plans
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::l2a::l2a;
    use crate::ltl::model_check;
    use crate::oracle::heuristic_label;
    use crate::plan_lang::{parse_plan, validate_plan};

    fn check(case: &SpecCase, plan: &str, source: &str) -> bool {
        let dom = domain(case.domain).expect("fixture domain");
        let ast = parse_plan(plan).expect("fixture plan parses");
        assert!(
            validate_plan(&ast, &dom.api).is_empty(),
            "fixture plan validates against its API table"
        );
        let fsa = l2a(&ast, &dom.mapping).expect("fixture plan compiles");
        let ts = universal_env(&dom.mapping).expect("environment model");
        let phi = parse_ltl(source).expect("fixture formula parses");
        model_check(&fsa, &ts, &phi).expect("model check runs").holds
    }

    #[test]
    fn every_domain_builds_a_small_environment() {
        for dom in domains() {
            let ts = universal_env(&dom.mapping).unwrap();
            let env = dom.mapping.sensor_props().len();
            assert_eq!(ts.state_names.len(), 1 << env, "{}", dom.name);
            assert!(dom
                .mapping
                .sensor_props()
                .is_subset(&dom.mapping.all_props()));
        }
    }

    #[test]
    fn corpus_plans_satisfy_exactly_the_intended_variants() {
        for case in spec_corpus() {
            for v in &case.variants {
                for plan in &case.compliant {
                    assert!(
                        check(&case, plan, v.source),
                        "{} [{}] should hold on compliant plan:\n{plan}",
                        case.id,
                        v.name
                    );
                }
                for plan in &case.violating {
                    assert!(
                        !check(&case, plan, v.source),
                        "{} [{}] should fail on violating plan:\n{plan}",
                        case.id,
                        v.name
                    );
                }
            }
        }
    }

    #[test]
    fn corpus_formula_atoms_stay_inside_the_domain_alphabet() {
        for case in spec_corpus() {
            let dom = domain(case.domain).unwrap();
            let props = dom.mapping.all_props();
            for v in &case.variants {
                let phi = parse_ltl(v.source).unwrap();
                assert!(
                    phi.atoms().is_subset(&props),
                    "{} [{}] uses atoms outside the mapping",
                    case.id,
                    v.name
                );
            }
        }
    }

    #[test]
    fn interpreter_heuristic_agrees_with_model_checker_on_corpus() {
        for case in spec_corpus() {
            for plan in &case.compliant {
                assert!(
                    heuristic_label(plan, case.rule_text),
                    "{}: heuristic should accept\n{plan}",
                    case.id
                );
            }
            for plan in &case.violating {
                assert!(
                    !heuristic_label(plan, case.rule_text),
                    "{}: heuristic should reject\n{plan}",
                    case.id
                );
            }
        }
    }

    #[test]
    fn training_rules_are_fifteen_and_route_to_their_own_category() {
        let rules = training_rules();
        assert_eq!(rules.len(), 15);
        let corpus = spec_corpus();
        for (i, r) in rules.iter().enumerate() {
            assert_eq!(r.id, format!("rule-{:02}", i + 1));
            let case = &corpus[i / 3];
            let phi = parse_ltl(case.variants[0].source).unwrap();
            assert_eq!(r.phi, phi, "{} formalizes {}", r.id, case.id);
        }
    }

    #[test]
    fn synthetic_plans_agree_with_both_judges() {
        let dom = driving();
        let ts = universal_env(&dom.mapping).unwrap();
        let rules = training_rules();
        let plans = synth_corpus(7, 60);
        let mut holds = 0usize;
        for (i, plan) in plans.iter().enumerate() {
            let rule = &rules[i % rules.len()];
            let ast = parse_plan(&plan.text).expect("generated plan parses");
            assert!(validate_plan(&ast, &dom.api).is_empty(), "{}", plan.id);
            let fsa = l2a(&ast, &dom.mapping).expect("generated plan compiles");
            let verdict = model_check(&fsa, &ts, &rule.phi).unwrap();
            assert_eq!(
                heuristic_label(&plan.text, &rule.text),
                verdict.holds,
                "{} × {}:\n{}",
                plan.id,
                rule.id,
                plan.text
            );
            holds += verdict.holds as usize;
        }
        // Both outcomes are well represented.
        assert!(holds >= 15 && holds <= 45, "holds = {holds}");
    }

    #[test]
    fn synthesis_is_deterministic_and_seed_sensitive() {
        let a = synth_corpus(3, 30);
        let b = synth_corpus(3, 30);
        assert_eq!(
            a.iter().map(|p| &p.text).collect::<Vec<_>>(),
            b.iter().map(|p| &p.text).collect::<Vec<_>>()
        );
        let c = synth_corpus(4, 30);
        assert_ne!(
            a.iter().map(|p| &p.text).collect::<Vec<_>>(),
            c.iter().map(|p| &p.text).collect::<Vec<_>>()
        );
    }

    #[test]
    fn domain_lookup_by_name() {
        assert!(domain("driving").is_some());
        assert!(domain("quadruped").is_some());
        assert!(domain("drone").is_some());
        assert!(domain("submarine").is_none());
    }
}
