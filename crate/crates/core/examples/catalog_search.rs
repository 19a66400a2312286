//! Ranks the bundled templates against the columns of the cars dataset,
//! then drops columns onto the best template's shelves one at a time.

use ivy_core::explore::{add_to_shelf, role_query, search_catalog};
use ivy_core::fixtures;
use ivy_core::model::{DataRole, Settings};

fn main() {
    let catalog = fixtures::catalog();
    let cars = fixtures::dataset("cars.json");

    let query = role_query(&[DataRole::Measure, DataRole::Measure, DataRole::Dimension]);
    println!("query: two measures and a dimension");
    for hit in search_catalog(&catalog, &query) {
        println!(
            "  {:<16} {:<8} uncovered required: {:?}",
            hit.template.name,
            hit.details.result.kind(),
            hit.details.uncovered_required
        );
    }

    let scatter = catalog.iter().find(|t| t.name == "scatterplot").expect("bundled");
    let mut settings = Settings::new();
    for column in ["Horsepower", "Miles_per_Gallon", "Origin"] {
        let role = cars.role_of(column).expect("column exists");
        settings = add_to_shelf(scatter, column, role, &settings);
        println!("after {column:<16} -> {}", ivy_core::parser::serialize_settings(&settings).replace('\n', " "));
    }
}
