//! Loads a CSV file, shows the inferred role of each column and applies
//! a couple of filters.

use ivy_core::data::apply_filters;
use ivy_core::fixtures;
use ivy_core::model::{DataRole, Filter};

fn main() {
    let mut weather = fixtures::dataset("weather.csv");
    for c in weather.columns() {
        println!("{:<14} {:?}", c.name, c.role);
    }

    weather.set_role("wind", DataRole::Dimension).expect("column exists");
    println!("wind overridden to {:?}", weather.role_of("wind").expect("column exists"));

    let rainy = apply_filters(
        &weather,
        &[
            Filter::one_of("weather", vec!["rain".into(), "drizzle".into()]),
            Filter::range("temp_max", 10.0, 25.0),
        ],
    )
    .expect("known columns");
    println!("{} of {} rows are mild and wet", rainy.len(), weather.len());
}
