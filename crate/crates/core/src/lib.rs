pub mod json;
pub mod model;
pub mod predicate;
pub mod parser;
pub mod data;
pub mod languages;
pub mod eval;
pub mod explore;
pub mod rewrite;
pub mod metrics;
pub mod fixtures;
