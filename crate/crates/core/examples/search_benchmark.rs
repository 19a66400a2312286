//! Compares exact catalog matching with a greedy first-fit check on a
//! synthetic catalog of 1,000 templates.
//!
//! The greedy check walks the query once and gives each column the first
//! free compatible parameter, which is O(|columns| * |params|) per template.
//! It never invents a match, but it misses some that exist.

use std::time::Instant;

use ivy_core::explore::match_template;
use ivy_core::json::JsonValue;
use ivy_core::model::{DataRole, Expression, Parameter, ParamType, Template};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ROLES: [DataRole; 3] = [DataRole::Measure, DataRole::Dimension, DataRole::Time];

fn random_template(rng: &mut ChaCha8Rng, i: usize) -> Template {
    let mut t = Template::new(format!("t{i:04}"), "vega-lite", Expression::literal(&JsonValue::Null));
    t.params = (0..rng.gen_range(0..=5))
        .map(|j| {
            let mut roles: Vec<DataRole> = ROLES.iter().copied().filter(|_| rng.gen_bool(0.45)).collect();
            if roles.is_empty() {
                roles.push(*ROLES.choose(rng).unwrap());
            }
            Parameter::new(
                format!("p{j}"),
                ParamType::DataTarget {
                    allowed_roles: roles,
                    required: rng.gen_bool(0.5),
                },
            )
        })
        .collect();
    t
}

fn greedy(t: &Template, query: &[(String, DataRole)]) -> &'static str {
    let params: Vec<&Parameter> = t.data_params().collect();
    let mut used = vec![false; params.len()];
    for (_, role) in query {
        match (0..params.len()).find(|&p| !used[p] && params[p].param_type.accepts_role(*role)) {
            Some(p) => used[p] = true,
            None => return "none",
        }
    }
    if params.iter().zip(&used).all(|(p, u)| *u || !p.param_type.is_required()) {
        "complete"
    } else {
        "partial"
    }
}

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let catalog: Vec<Template> = (0..1_000).map(|i| random_template(&mut rng, i)).collect();
    let queries: Vec<Vec<(String, DataRole)>> = (0..50)
        .map(|_| {
            (0..rng.gen_range(1..=5))
                .map(|c| (format!("c{c}"), *ROLES.choose(&mut rng).unwrap()))
                .collect()
        })
        .collect();

    let start = Instant::now();
    let exact: Vec<Vec<&str>> = queries
        .iter()
        .map(|q| catalog.iter().map(|t| match_template(t, q).kind()).collect())
        .collect();
    let exact_time = start.elapsed() / queries.len() as u32;

    let start = Instant::now();
    let fast: Vec<Vec<&str>> = queries
        .iter()
        .map(|q| catalog.iter().map(|t| greedy(t, q)).collect())
        .collect();
    let greedy_time = start.elapsed() / queries.len() as u32;

    let mut disagree = 0;
    let mut total = 0;
    for (e, g) in exact.iter().flatten().zip(fast.iter().flatten()) {
        total += 1;
        if e != g {
            disagree += 1;
            // Greedy can only be more pessimistic.
            assert!(matches!((*e, *g), ("complete", "partial") | ("complete", "none") | ("partial", "none")));
        }
    }
    println!("catalog 1000 templates, {} queries", queries.len());
    println!("exact  matching: {exact_time:?} per catalog search");
    println!("greedy first-fit: {greedy_time:?} per catalog search");
    println!("greedy verdict differs on {disagree} of {total} template/query pairs");
}
