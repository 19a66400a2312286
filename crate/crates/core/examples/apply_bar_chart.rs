//! Instantiates the aggregate bar chart template and prints the resulting
//! Vega-Lite spec, then flips `sort` and shows what changed.

use ivy_core::eval::apply_template;
use ivy_core::fixtures;
use ivy_core::metrics::first_difference;
use ivy_core::model::ArgumentValue;

fn main() {
    let template = fixtures::bar_template();
    let settings = fixtures::settings(fixtures::BAR_SETTINGS);
    let spec = apply_template(&template, &settings, None).expect("fixture settings are valid");
    println!("{}", spec.to_canonical_string());
    assert_eq!(spec, fixtures::json(fixtures::BAR_SPEC));

    let sorted = settings.clone().with("sort", ArgumentValue::boolean(true));
    let spec2 = apply_template(&template, &sorted, None).expect("valid");
    if let Some(diff) = first_difference(&spec, &spec2) {
        println!("\nwith sort = true, first change at {diff}");
    }
}
