//! Renders one chart per combination of years and bar colors.

use ivy_core::explore::{fan_out, FanOutRequest};
use ivy_core::fixtures;
use ivy_core::json::Map;

fn main() {
    let template = fixtures::bar_template();
    let mut option_sets = Map::new();
    option_sets.insert("year".to_string(), vec!["1900".into(), "1950".into(), "2000".into()]);
    option_sets.insert("color".to_string(), vec!["#4c78a8".into(), "#e45756".into()]);
    let request = FanOutRequest {
        template: template.name.clone(),
        base: fixtures::settings(fixtures::BAR_SETTINGS),
        option_sets,
    };
    let grid = fan_out(&template, &request, None).expect("valid request");
    for cell in &grid.cells {
        let year = cell.settings.get("year").map(|v| v.splice_text()).unwrap_or_default();
        let color = cell.settings.get("color").map(|v| v.splice_text()).unwrap_or_default();
        let spec = cell.result.as_ref().expect("every cell renders");
        let mark = spec.pointer("/mark").map(|m| m.to_compact_string()).unwrap_or_default();
        println!("#{:<2} year={year} color={color} mark={mark}", cell.index);
    }
}
