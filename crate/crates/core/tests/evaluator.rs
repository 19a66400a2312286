use ivy_core::eval::{evaluate, evaluate_spec, substitute, visible_params, Bindings, EvalError, EvalOutcome};
use ivy_core::json::JsonValue;
use ivy_core::model::{ArgumentValue, Expression, Parameter, ParamType, Settings, Symbol, Template};
use ivy_core::parser::{parse_expression, settings_from_json};
use ivy_core::predicate::Predicate;
use ivy_oracles::evaluator::{self as reference, Shape};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn symbols() -> Vec<Symbol> {
    reference::SYMBOLS
        .iter()
        .map(|s| Symbol {
            name: s.to_string(),
            description: String::new(),
        })
        .collect()
}

fn body(v: &str) -> Expression {
    parse_expression(&JsonValue::parse(v).unwrap()).unwrap()
}

fn run(body_json: &str, settings: &Settings) -> Result<String, EvalError> {
    let syms = symbols();
    evaluate_spec(&body(body_json), &Bindings::new(settings, &syms)).map(|v| v.to_compact_string())
}

/// One randomized trial: production and reference agree on the raw body
/// and on its substitution.
fn agree(seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let shape = Shape {
        max_depth: 5,
        max_branching: 4,
    };
    let tree = reference::expression(&mut rng, &shape);
    let (depth, width) = reference::measure(&tree);
    assert!(depth <= 5 && width <= 4);
    let doc = reference::to_document(&tree, &mut rng);
    let raw_settings = reference::settings(&mut rng);

    let expr = parse_expression(&JsonValue::parse(&doc.to_string()).unwrap())
        .map_err(|e| format!("seed {seed}: parse failed: {e}\n{doc}"))?;
    let settings_doc = reference::settings_document(&raw_settings).to_string();
    let settings = settings_from_json(&JsonValue::parse(&settings_doc).unwrap()).unwrap();
    let syms = symbols();
    let b = Bindings::new(&settings, &syms);

    let expected = reference::eval(&tree, &raw_settings);
    let direct = evaluate_spec(&expr, &b);
    let staged = evaluate_spec(&substitute(&expr, &settings, &syms), &b);
    for (label, got) in [("direct", direct), ("substituted", staged)] {
        let got = match got {
            Ok(v) => Some(serde_json::from_str::<serde_json::Value>(&v.to_compact_string()).unwrap()),
            Err(EvalError::TopLevelBottom) => None,
            Err(e) => return Err(format!("seed {seed}: unexpected error {e}")),
        };
        if got != expected {
            return Err(format!(
                "seed {seed} ({label}):\nbody {doc}\nsettings {settings_doc}\nexpected {expected:?}\ngot {got:?}"
            ));
        }
    }
    Ok(())
}

#[test]
fn agrees_with_reference_evaluator() {
    for seed in 0..2_000 {
        agree(seed).unwrap();
    }
}

#[test]
fn false_conditional_without_else_deletes_field() {
    let s = Settings::new().with("sort", false);
    let b = r#"{"a":1,"sort":{"$cond":{"query":"sort == true","true":"-x"}}}"#;
    assert_eq!(run(b, &s).unwrap(), r#"{"a":1}"#);
}

#[test]
fn false_conditional_without_else_deletes_list_element() {
    let b = r#"["a",{"$cond":{"query":"false","true":"x"}},"b"]"#;
    assert_eq!(run(b, &Settings::new()).unwrap(), r#"["a","b"]"#);
}

#[test]
fn true_conditional_keeps_then_branch() {
    let s = Settings::new().with("sort", true);
    let b = r#"{"sort":{"$cond":{"query":"sort == true","true":"-x"}}}"#;
    assert_eq!(run(b, &s).unwrap(), r#"{"sort":"-x"}"#);
}

#[test]
fn false_conditional_with_else_takes_else() {
    let b = r#"{"mark":{"$cond":{"query":"color == null","true":"bar","false":{"type":"bar"}}}}"#;
    let s = Settings::new().with("color", "red");
    assert_eq!(run(b, &s).unwrap(), r#"{"mark":{"type":"bar"}}"#);
}

#[test]
fn deletion_is_local_to_the_enclosing_record() {
    let b = r#"{"z":1,"a":{"$cond":{"query":"false","true":2}},"m":[3,{"$cond":{"query":"false","true":4}},5],"b":6}"#;
    assert_eq!(run(b, &Settings::new()).unwrap(), r#"{"z":1,"m":[3,5],"b":6}"#);
}

#[test]
fn nested_bottom_propagates_only_one_level() {
    // The inner conditional deletes a field; the outer object survives.
    let b = r#"{"o":{"$cond":{"query":"true","true":{"k":{"$cond":{"query":"false","true":1}}}}}}"#;
    assert_eq!(run(b, &Settings::new()).unwrap(), r#"{"o":{}}"#);
}

#[test]
fn top_level_bottom_is_an_error() {
    let b = r#"{"$cond":{"query":"false","true":{}}}"#;
    assert_eq!(run(b, &Settings::new()), Err(EvalError::TopLevelBottom));
    let syms = symbols();
    let s = Settings::new();
    assert_eq!(evaluate(&body(b), &Bindings::new(&s, &syms)), EvalOutcome::Bottom);
}

#[test]
fn atomics_pass_through() {
    assert_eq!(run("42", &Settings::new()).unwrap(), "42");
    assert_eq!(run("null", &Settings::new()).unwrap(), "null");
}

#[test]
fn typed_and_spliced_substitution() {
    let s = Settings::new().with("w", 300).with("h", 200).with("yDim", "age");
    assert_eq!(run(r#""[w]x[h]""#, &s).unwrap(), r#""300x200""#);
    assert_eq!(run(r#"{"w":"[w]"}"#, &s).unwrap(), r#"{"w":300}"#);
    assert_eq!(
        run(r#"{"y":{"field":"[yDim]"}}"#, &s).unwrap(),
        r#"{"y":{"field":"age"}}"#
    );
}

#[test]
fn predicates_from_examples() {
    let syms = symbols();
    let check = |src: &str, s: &Settings| ivy_core::eval::eval_predicate(&Predicate::parse(src).unwrap(), s, &syms);
    assert!(check("sort == true", &Settings::new().with("sort", true)));
    assert!(check("true", &Settings::new()));
    assert!(check("year in [1990, 2000]", &Settings::new().with("year", 2000)));
    assert!(!check("x == 1", &Settings::new()));
    assert!(!check("x < 1", &Settings::new()));
    assert!(check("x == null", &Settings::new()));
}

#[test]
fn visible_params_follow_display_predicates() {
    let mut t = Template::new("t", "vega-lite", Expression::literal(&JsonValue::parse("{}").unwrap()));
    t.params = vec![
        Parameter::new("sort", ParamType::Boolean),
        Parameter::new(
            "sortDirection",
            ParamType::Enum {
                allowed_values: vec!["ascending".into(), "descending".into()],
            },
        )
        .with_display_predicate(Predicate::parse("sort == true").unwrap()),
    ];
    assert_eq!(visible_params(&t, &Settings::new()), vec!["sort"]);
    assert_eq!(
        visible_params(&t, &Settings::new().with("sort", true)),
        vec!["sort", "sortDirection"]
    );
}

fn settings_strategy() -> impl Strategy<Value = Vec<(String, i32)>> {
    proptest::collection::btree_map("[a-e]", -5i32..5, 0..5).prop_map(|m| m.into_iter().collect())
}

proptest! {
    #[test]
    fn settings_key_order_does_not_matter(pairs in settings_strategy(), seed in 0u64..500) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = reference::expression(&mut rng, &Shape { max_depth: 3, max_branching: 3 });
        let doc = reference::to_document(&tree, &mut rng).to_string();
        let e = parse_expression(&JsonValue::parse(&doc).unwrap()).unwrap();
        let forward: Settings = pairs.iter().map(|(k, v)| (k.clone(), ArgumentValue::from(*v))).collect();
        let backward: Settings = pairs.iter().rev().map(|(k, v)| (k.clone(), ArgumentValue::from(*v))).collect();
        let syms = symbols();
        let a = evaluate(&e, &Bindings::new(&forward, &syms));
        let b = evaluate(&e, &Bindings::new(&backward, &syms));
        prop_assert_eq!(a, b);
    }

    #[test]
    fn output_has_no_conditionals_or_declared_references(seed in 0u64..5_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = reference::expression(&mut rng, &Shape { max_depth: 4, max_branching: 3 });
        let doc = reference::to_document(&tree, &mut rng).to_string();
        let e = parse_expression(&JsonValue::parse(&doc).unwrap()).unwrap();
        let syms = symbols();
        let s = Settings::new();
        if let EvalOutcome::Value(v) = evaluate(&e, &Bindings::new(&s, &syms)) {
            let text = v.to_compact_string();
            prop_assert!(!text.contains("\"$cond\""));
        }
    }
}
