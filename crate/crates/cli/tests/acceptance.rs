//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use axum::body::Body;
use axum::http::{Request, StatusCode};
use axum::Router;
use http_body_util::BodyExt;
use ivy_core::eval::{apply_template, apply_template_with, evaluate_spec, substitute, ApplyOptions, Bindings, EvalError};
use ivy_core::explore::{fan_out_with, match_template, role_query, search_catalog, FanOutOptions, FanOutRequest};
use ivy_core::fixtures::{self, DocumentKind};
use ivy_core::json::{JsonValue, Map};
use ivy_core::languages;
use ivy_core::metrics::{compression_ratio, concatenation_ratio, verify_coverage_path, Coverage, CorpusManifest, SizeMeasure};
use ivy_core::model::{ArgumentValue, DataRole, Expression, MatchResult, ParamType, Parameter, Settings, Symbol, Template};
use ivy_core::parser::{parse_expression, parse_settings, parse_template, serialize_settings, serialize_template, settings_from_json};
use ivy_core::rewrite::{apply_suggestion, suggest};
use ivy_oracles::evaluator::{self as reference, Shape};
use ivy_oracles::matching::{brute_force, random_instance, witness_ok, Slot, Verdict};
use ivy_oracles::{counting, odometer};
use ivy_registry::{router, AppState, Store};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tower::ServiceExt;

type Outcome = Result<String, String>;

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn plain(text: &str) -> serde_json::Value {
    serde_json::from_str(text).unwrap()
}

// 1. Production evaluator against the reference evaluator.

fn evaluator_agrees() -> Outcome {
    let symbols: Vec<Symbol> = reference::SYMBOLS
        .iter()
        .map(|s| Symbol {
            name: s.to_string(),
            description: String::new(),
        })
        .collect();
    let shape = Shape {
        max_depth: 5,
        max_branching: 4,
    };
    let start = Instant::now();
    for seed in 0..10_000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tree = reference::expression(&mut rng, &shape);
        let (depth, width) = reference::measure(&tree);
        ensure(depth <= 5 && width <= 4, || format!("seed {seed}: generator exceeded shape"))?;
        let doc = reference::to_document(&tree, &mut rng);
        let raw = reference::settings(&mut rng);
        let expr = parse_expression(&JsonValue::parse(&doc.to_string()).unwrap()).map_err(|e| format!("seed {seed}: {e}"))?;
        let settings = settings_from_json(&JsonValue::parse(&reference::settings_document(&raw).to_string()).unwrap()).unwrap();
        let b = Bindings::new(&settings, &symbols);
        let expected = reference::eval(&tree, &raw);
        for got in [evaluate_spec(&expr, &b), evaluate_spec(&substitute(&expr, &settings, &symbols), &b)] {
            let got = match got {
                Ok(v) => Some(plain(&v.to_compact_string())),
                Err(EvalError::TopLevelBottom) => None,
                Err(e) => return Err(format!("seed {seed}: {e}")),
            };
            ensure(got == expected, || format!("seed {seed}: {doc}"))?;
        }
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(10), || format!("took {elapsed:?}"))?;
    Ok(format!("10000/10000 agree in {elapsed:.2?}"))
}

// 2. Bottom deletion.

fn bottom_deletion() -> Outcome {
    let run = |body: &str, s: &Settings| {
        let e = parse_expression(&JsonValue::parse(body).unwrap()).unwrap();
        evaluate_spec(&e, &Bindings::new(s, &[])).map(|v| v.to_compact_string())
    };
    let none = Settings::new();
    let cases: [(&str, Settings, Result<String, EvalError>); 4] = [
        (
            r#"{"a":1,"sort":{"$cond":{"query":"sort == true","true":"-x"}}}"#,
            Settings::new().with("sort", false),
            Ok(r#"{"a":1}"#.into()),
        ),
        (
            r#"{"sort":{"$cond":{"query":"sort == true","true":"-x"}}}"#,
            Settings::new().with("sort", true),
            Ok(r#"{"sort":"-x"}"#.into()),
        ),
        (r#"{"$cond":{"query":"false","true":{}}}"#, none.clone(), Err(EvalError::TopLevelBottom)),
        (r#"["a",{"$cond":{"query":"false","true":"x"}},"b"]"#, none, Ok(r#"["a","b"]"#.into())),
    ];
    for (body, s, want) in &cases {
        let got = run(body, s);
        ensure(&got == want, || format!("{body}: got {got:?}"))?;
    }
    Ok(format!("{} cases", cases.len()))
}

// 3. Bar chart reproduction.

fn bar_chart() -> Outcome {
    let start = Instant::now();
    let t = fixtures::bar_template();
    let mut s = fixtures::settings(fixtures::BAR_SETTINGS);
    let out = apply_template(&t, &s, None).map_err(|e| e.to_string())?;
    let want = fixtures::read(fixtures::BAR_SPEC);
    ensure(out.to_canonical_string() == want, || "plain output differs".into())?;
    s.set("sort", true);
    let mut sorted = apply_template(&t, &s, None).map_err(|e| e.to_string())?;
    ensure(sorted.to_canonical_string() == fixtures::read(fixtures::BAR_SPEC_SORTED), || "sorted output differs".into())?;
    ensure(sorted.remove_pointer("/encoding/x/sort") == Some(JsonValue::from("-x")), || "no sort key".into())?;
    ensure(sorted.to_canonical_string() == want, || "sort changed more than one key".into())?;
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(1), || format!("took {elapsed:?}"))?;
    Ok(format!("byte-identical, sort adds one key, {elapsed:.2?}"))
}

// 4. Compression and concatenation ratios.

fn metrics() -> Outcome {
    let a = compression_ratio(166, 14, 43).map_err(|e| e.to_string())?;
    ensure((a - 3.53).abs() <= 0.01, || format!("compression {a}"))?;
    let b = compression_ratio(32, 3, 16).map_err(|e| e.to_string())?;
    ensure(b == 1.8125, || format!("compression {b}"))?;

    let manifest = CorpusManifest::load(&fixtures::path(fixtures::COVERAGE_MANIFEST)).map_err(|e| e.to_string())?;
    let mut checked = 0;
    for tpath in &manifest.templates {
        let text = std::fs::read_to_string(manifest.base_dir.join(tpath)).unwrap();
        let t = parse_template(&text).unwrap();
        let body = plain(&text)["body"].clone();
        let examples: Vec<String> = manifest
            .examples
            .iter()
            .filter(|e| matches!(&e.coverage, Coverage::CoveredBy { template, .. } if *template == t.name))
            .map(|e| std::fs::read_to_string(manifest.base_dir.join(&e.spec)).unwrap())
            .collect();
        let parsed: Vec<JsonValue> = examples.iter().map(|e| JsonValue::parse(e).unwrap()).collect();
        let untyped: Vec<serde_json::Value> = examples.iter().map(|e| plain(e)).collect();
        for (measure, count) in [(SizeMeasure::Ast, counting::ast_nodes as fn(&serde_json::Value) -> usize), (SizeMeasure::Loc, counting::lines)] {
            let got = concatenation_ratio(&parsed, &t.body, measure).map_err(|e| e.to_string())?;
            let want = counting::ratio(&untyped, &body, count);
            ensure(got == want, || format!("{} {measure:?}: {got} vs {want}", t.name))?;
            checked += 1;
        }
    }
    ensure(checked > 0, || "no templates in manifest".into())?;
    Ok(format!("3.53 -> {a:.4}, 1.8125 exact, {checked} ratios equal"))
}

// 5. Matching against brute force.

const ROLES: [DataRole; 3] = [DataRole::Measure, DataRole::Dimension, DataRole::Time];

fn slot_template(name: &str, slots: &[Slot]) -> Template {
    let mut t = Template::new(name, "vega-lite", Expression::literal(&JsonValue::Null));
    t.params = slots
        .iter()
        .enumerate()
        .map(|(i, s)| {
            Parameter::new(
                format!("p{i}"),
                ParamType::DataTarget {
                    allowed_roles: s.roles.iter().map(|&r| ROLES[r]).collect(),
                    required: s.required,
                },
            )
        })
        .collect();
    t
}

fn matching() -> Outcome {
    for seed in 0..1_000u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (slots, roles) = random_instance(&mut rng, 5, 5);
        let q: Vec<(String, DataRole)> = roles.iter().enumerate().map(|(i, &r)| (format!("c{i}"), ROLES[r])).collect();
        let got = match_template(&slot_template("t", &slots), &q);
        let verdict = match &got {
            MatchResult::Complete(_) => Verdict::Complete,
            MatchResult::Partial(_) => Verdict::Partial,
            MatchResult::NoMatch => Verdict::NoMatch,
        };
        ensure(verdict == brute_force(&slots, &roles), || format!("seed {seed}: {verdict:?}"))?;
        if let Some(m) = got.mapping() {
            let idx: Vec<usize> = (0..roles.len()).map(|i| m[format!("c{i}").as_str()][1..].parse().unwrap()).collect();
            ensure(witness_ok(&slots, &roles, &idx, verdict), || format!("seed {seed}: bad witness"))?;
            if verdict == Verdict::Complete {
                let relaxed: Vec<Slot> = slots.iter().map(|s| Slot { required: false, ..s.clone() }).collect();
                // The same map must stand as a partial match: valid and injective once no slot is required.
                ensure(witness_ok(&relaxed, &roles, &idx, Verdict::Complete), || format!("seed {seed}: complete but not partial"))?;
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let catalog: Vec<Template> = (0..1_000)
        .map(|i| slot_template(&format!("t{i:04}"), &random_instance(&mut rng, 0, 5).0))
        .collect();
    let q = role_query(&[DataRole::Measure, DataRole::Dimension, DataRole::Measure]);
    let start = Instant::now();
    let hits = search_catalog(&catalog, &q);
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_millis(100), || format!("search took {elapsed:?}"))?;
    Ok(format!("1000/1000 agree, catalog search {elapsed:.2?} ({} hits)", hits.len()))
}

// 6. Fan-out.

fn options_for(rng: &mut ChaCha8Rng, p: &ParamType, columns: &[String]) -> Vec<ArgumentValue> {
    (0..rng.gen_range(1..=3))
        .map(|_| match p {
            ParamType::DataTarget { .. } => ArgumentValue::string(columns.choose(rng).unwrap().as_str()),
            ParamType::MultiDataTarget { .. } => {
                let k = rng.gen_range(1..=3.min(columns.len()));
                ArgumentValue::StringList(columns.choose_multiple(rng, k).cloned().collect())
            }
            ParamType::Enum { allowed_values } => ArgumentValue::string(allowed_values.choose(rng).unwrap().as_str()),
            ParamType::Boolean => ArgumentValue::boolean(rng.gen()),
            ParamType::Number { min, max, step } => {
                let steps = ((max - min) / step).floor() as i64;
                ArgumentValue::number(min + step * rng.gen_range(0..=steps.min(50)) as f64)
            }
            ParamType::String => ArgumentValue::string(["A", "B title"].choose(rng).unwrap().to_string()),
            ParamType::Text { .. } | ParamType::Section { .. } => unreachable!("display-only"),
        })
        .collect()
}

fn fan_out() -> Outcome {
    let catalog = fixtures::catalog();
    let datasets = [fixtures::dataset("cars.json"), fixtures::dataset("population.json")];
    let mut cells = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let t = catalog.choose(&mut rng).unwrap();
        let data = datasets.choose(&mut rng).unwrap();
        let columns: Vec<String> = data.columns().iter().map(|c| c.name.clone()).collect();
        let candidates: Vec<&Parameter> = t.params.iter().filter(|p| !p.param_type.is_display_only()).collect();
        let k = rng.gen_range(1..=3);
        let mut option_sets = Map::new();
        for p in candidates.choose_multiple(&mut rng, k) {
            option_sets.insert(p.name.clone(), options_for(&mut rng, &p.param_type, &columns));
        }
        let mut base = Settings::new();
        for p in t.data_params() {
            if rng.gen_bool(0.7) {
                base.set(p.name.clone(), options_for(&mut rng, &p.param_type, &columns).remove(0));
            }
        }
        let request = FanOutRequest {
            template: t.name.clone(),
            base,
            option_sets,
        };
        let opts = FanOutOptions {
            apply: ApplyOptions {
                dataset: rng.gen_bool(0.5).then_some(data),
                ..ApplyOptions::default()
            },
            jobs: None,
        };
        let parallel = fan_out_with(t, &request, &opts).map_err(|e| format!("seed {seed}: {e}"))?;
        let names: Vec<&String> = t.params.iter().map(|p| &p.name).filter(|n| request.option_sets.contains_key(n.as_str())).collect();
        let sizes: Vec<usize> = names.iter().map(|n| request.option_sets[n.as_str()].len()).collect();
        let combos = odometer(&sizes);
        ensure(parallel.cells.len() == sizes.iter().product::<usize>(), || format!("seed {seed}: cell count"))?;
        for (cell, combo) in parallel.cells.iter().zip(&combos) {
            let mut s = request.base.clone();
            for (name, &i) in names.iter().zip(combo) {
                s.set(name.to_string(), request.option_sets[name.as_str()][i].clone());
            }
            ensure(cell.result == apply_template_with(t, &s, &opts.apply), || format!("seed {seed} cell {}", cell.index))?;
        }
        let serial = fan_out_with(t, &request, &FanOutOptions { jobs: Some(1), ..opts }).unwrap();
        ensure(serial.to_json().to_canonical_string() == parallel.to_json().to_canonical_string(), || {
            format!("seed {seed}: serial and parallel differ")
        })?;
        cells += parallel.cells.len();
    }
    Ok(format!("200 requests, {cells} cells"))
}

// 7. Suggestion round trip.

fn suggestions() -> Outcome {
    let corpus = fixtures::corpus();
    ensure(corpus.len() >= 20, || format!("corpus has {} specs", corpus.len()))?;
    let mut total = 0;
    for (name, spec) in &corpus {
        let data = fixtures::corpus_dataset(spec);
        let original = Template::new(name.as_str(), "vega-lite", Expression::literal(spec));
        let list = suggest(&original.body, "vega-lite", data.as_ref()).map_err(|e| format!("{name}: {e}"))?;
        for sg in &list {
            let t = apply_suggestion(&original, sg).map_err(|e| format!("{name} {}: {e}", sg.id))?;
            let p = t.params.last().unwrap();
            let s = Settings::new().with(p.name.clone(), ArgumentValue::Atomic(sg.original.clone()));
            let out = apply_template(&t, &s, None).map_err(|e| format!("{name} {}: {e}", sg.id))?;
            ensure(out.to_canonical_string() == spec.to_canonical_string(), || format!("{name} {}", sg.id))?;
            total += 1;
        }
    }
    Ok(format!("{} specs, {total} suggestions", corpus.len()))
}

// 8. Formats, registry and schema validation.

async fn call(app: &Router, method: &str, uri: &str, headers: &[(&str, &str)], body: String) -> (StatusCode, String) {
    let mut req = Request::builder().method(method).uri(uri);
    for (k, v) in headers {
        req = req.header(*k, *v);
    }
    let resp = app.clone().oneshot(req.body(Body::from(body)).unwrap()).await.unwrap();
    let status = resp.status();
    let bytes = resp.into_body().collect().await.unwrap().to_bytes();
    (status, String::from_utf8(bytes.to_vec()).unwrap())
}

fn formats_and_service() -> Outcome {
    let docs = fixtures::all_documents();
    for (kind, rel) in &docs {
        let text = fixtures::read(rel);
        let again = match kind {
            DocumentKind::Template => serialize_template(&parse_template(&text).map_err(|e| format!("{rel}: {e}"))?),
            DocumentKind::Settings => serialize_settings(&parse_settings(&text).map_err(|e| format!("{rel}: {e}"))?),
            DocumentKind::Spec => JsonValue::parse(&text).map_err(|e| format!("{rel}: {e}"))?.to_canonical_string(),
        };
        ensure(again == text, || format!("{rel} does not round-trip"))?;
    }

    let dir = tempfile::tempdir().unwrap();
    let app = router(AppState::new(Store::open(dir.path()).map_err(|e| e.to_string())?, 1 << 20));
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap();
    let templates = [fixtures::BAR_TEMPLATE, fixtures::SCATTER_TEMPLATE, fixtures::TABLE_TEMPLATE];
    rt.block_on(async {
        for rel in templates {
            let text = fixtures::read(rel);
            let (status, body) = call(&app, "POST", "/templates", &[], text.clone()).await;
            ensure(status == StatusCode::CREATED && body == text, || format!("publish {rel}: {status}"))?;
            let name = parse_template(&text).unwrap().name;
            let (status, fetched) = call(&app, "GET", &format!("/templates/{name}"), &[], String::new()).await;
            ensure(status == StatusCode::OK && fetched == text, || format!("fetch {name}: {status}"))?;
        }
        let bar = fixtures::read(fixtures::BAR_TEMPLATE);
        let (status, _) = call(&app, "POST", "/templates", &[("if-match", "1")], bar.clone()).await;
        ensure(status == StatusCode::CREATED, || format!("fresh publish: {status}"))?;
        let (status, _) = call(&app, "POST", "/templates", &[("if-match", "1")], bar).await;
        ensure(status == StatusCode::CONFLICT, || format!("stale publish: {status}"))
    })?;

    let reg = languages::builtin();
    let mut validated = 0;
    let bar = fixtures::bar_template();
    for rel in [fixtures::BAR_SETTINGS, fixtures::BAR_SETTINGS_SORTED] {
        let spec = apply_template(&bar, &fixtures::settings(rel), None).map_err(|e| e.to_string())?;
        let errs = reg.validate_spec("vega-lite", &spec).map_err(|e| e.to_string())?;
        ensure(errs.is_empty(), || format!("{rel}: {errs:?}"))?;
        validated += 1;
    }
    for (kind, rel) in &docs {
        if *kind == DocumentKind::Spec && rel.ends_with(".vl.json") {
            let errs = reg.validate_spec("vega-lite", &fixtures::json(rel)).map_err(|e| e.to_string())?;
            ensure(errs.is_empty(), || format!("{rel}: {errs:?}"))?;
            validated += 1;
        }
    }
    let report = verify_coverage_path(&fixtures::path(fixtures::COVERAGE_MANIFEST)).map_err(|e| e.to_string())?;
    ensure(report.all_passed(), || "coverage manifest has failures".into())?;
    Ok(format!("{} documents round-trip, publish/fetch/409 ok, {validated} specs valid", docs.len()))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 8] = [
        ("evaluator agrees with reference", evaluator_agrees),
        ("bottom deletion", bottom_deletion),
        ("bar chart reproduction", bar_chart),
        ("compression and concatenation ratios", metrics),
        ("template matching", matching),
        ("fan-out", fan_out),
        ("suggestion round trip", suggestions),
        ("formats, registry, schema", formats_and_service),
    ];
    let mut failed = 0;
    for (i, (label, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(detail) => println!("PASS criterion {}: {label}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {}: {label}: {why}", i + 1);
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
