//! Turns a plain Vega-Lite spec into a template by accepting every
//! suggested abstraction, then re-applies it to a different pair of fields.

use ivy_core::eval::apply_template;
use ivy_core::fixtures;
use ivy_core::model::Settings;
use ivy_core::parser::serialize_template;
use ivy_core::rewrite::suggest;

fn main() {
    let spec = fixtures::json("corpus/scatter_hp_mpg.vl.json");
    let data = fixtures::corpus_dataset(&spec).expect("bundled data");

    let body = ivy_core::model::Expression::literal(&spec);
    for s in suggest(&body, "vega-lite", Some(&data)).expect("known language") {
        println!("{:<28} {:<22} -> [{}]", s.path, s.description, s.proposed_param.name);
    }

    let template = ivy_core::rewrite::templatize("cars-scatter", &spec, "vega-lite", Some(&data)).expect("templatize");
    println!("\n{}", serialize_template(&template));

    let settings = Settings::new().with("x", "Weight_in_lbs").with("y", "Acceleration");
    let out = apply_template(&template, &settings, Some(&data)).expect("applies");
    println!("\nre-applied x = {}", out.pointer("/encoding/x/field").expect("x").to_compact_string());
}
