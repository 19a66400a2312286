//! Bundled fixture files: the aggregate bar chart walkthrough, a small
//! template catalog, a corpus of raw Vega-Lite specs and sample datasets.
//!
//! Everything lives under `fixtures/` next to this crate's manifest.

use std::path::{Path, PathBuf};

use crate::data::{load_dataset_path, Dataset, LoadOptions};
use crate::json::JsonValue;
use crate::model::{Settings, Template};
use crate::parser::{parse_settings, parse_template};

pub const BAR_TEMPLATE: &str = "templates/aggregate-bar.ivy.json";
pub const SCATTER_TEMPLATE: &str = "templates/scatterplot.ivy.json";
pub const TABLE_TEMPLATE: &str = "templates/data-table.ivy.json";
pub const BAR_SETTINGS: &str = "settings/fig3.settings.json";
pub const BAR_SETTINGS_SORTED: &str = "settings/fig3-sorted.settings.json";
pub const BAR_SPEC: &str = "specs/fig3b.vl.json";
pub const BAR_SPEC_SORTED: &str = "specs/fig3b-sorted.vl.json";
pub const COVERAGE_MANIFEST: &str = "coverage.json";

pub fn dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures")
}

pub fn path(relative: &str) -> PathBuf {
    dir().join(relative)
}

/// Reads a fixture file. Panics with the path when it is missing, since a
/// missing fixture is a broken checkout rather than a runtime condition.
pub fn read(relative: &str) -> String {
    let p = path(relative);
    std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn json(relative: &str) -> JsonValue {
    JsonValue::parse(&read(relative)).unwrap_or_else(|e| panic!("{relative}: {e}"))
}

pub fn template(relative: &str) -> Template {
    parse_template(&read(relative)).unwrap_or_else(|e| panic!("{relative}: {e}"))
}

pub fn settings(relative: &str) -> Settings {
    parse_settings(&read(relative)).unwrap_or_else(|e| panic!("{relative}: {e}"))
}

pub fn dataset(name: &str) -> Dataset {
    let p = path(&format!("data/{name}"));
    load_dataset_path(&p, &LoadOptions::default()).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

pub fn bar_template() -> Template {
    template(BAR_TEMPLATE)
}

/// The three bundled templates in a fixed order.
pub fn catalog() -> Vec<Template> {
    [BAR_TEMPLATE, SCATTER_TEMPLATE, TABLE_TEMPLATE].into_iter().map(template).collect()
}

fn sorted_files(sub: &str, suffix: &str) -> Vec<PathBuf> {
    let mut out: Vec<PathBuf> = std::fs::read_dir(dir().join(sub))
        .unwrap_or_else(|e| panic!("fixtures/{sub}: {e}"))
        .map(|e| e.expect("directory entry").path())
        .filter(|p| p.to_string_lossy().ends_with(suffix))
        .collect();
    out.sort();
    out
}

/// Raw Vega-Lite specs as `(file stem, spec)`, sorted by file name.
pub fn corpus() -> Vec<(String, JsonValue)> {
    sorted_files("corpus", ".vl.json")
        .into_iter()
        .map(|p| {
            let name = p.file_name().unwrap().to_string_lossy().trim_end_matches(".vl.json").to_string();
            let text = std::fs::read_to_string(&p).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            let spec = JsonValue::parse(&text).unwrap_or_else(|e| panic!("{}: {e}", p.display()));
            (name, spec)
        })
        .collect()
}

/// The dataset a corpus spec points at through `data.url`, if bundled.
pub fn corpus_dataset(spec: &JsonValue) -> Option<Dataset> {
    let url = spec.pointer("/data/url")?.as_str()?;
    let name = url.strip_prefix("data/")?;
    path(&format!("data/{name}")).exists().then(|| dataset(name))
}

/// Every fixture document path (relative), grouped by kind, for format checks.
pub fn all_documents() -> Vec<(DocumentKind, String)> {
    let rel = |p: PathBuf| p.strip_prefix(dir()).expect("under fixtures").to_string_lossy().replace('\\', "/");
    let mut out = Vec::new();
    out.extend(sorted_files("templates", ".ivy.json").into_iter().map(|p| (DocumentKind::Template, rel(p))));
    out.extend(sorted_files("settings", ".settings.json").into_iter().map(|p| (DocumentKind::Settings, rel(p))));
    out.extend(sorted_files("specs", ".json").into_iter().map(|p| (DocumentKind::Spec, rel(p))));
    out.extend(sorted_files("corpus", ".json").into_iter().map(|p| (DocumentKind::Spec, rel(p))));
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DocumentKind {
    Template,
    Settings,
    Spec,
}
