//! The `ivy` command line. Each subcommand is a thin adapter over
//! `ivy-core` (or `ivy-registry` for `serve`); outputs are canonical JSON.
//!
//! Exit codes: 0 on success, 1 when validation, linting, evaluation or a
//! coverage check fails, 2 on usage errors (bad flags, unreadable or
//! malformed input files).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use ivy_core::data::{load_dataset_path, Dataset, LoadOptions};
use ivy_core::eval::{apply_template_with, ApplyOptions, EvalError};
use ivy_core::explore::{fan_out_with, role_query, search_catalog, FanOutOptions, FanOutRequest};
use ivy_core::json::{JsonValue, Map};
use ivy_core::languages::{self, sha256_hex};
use ivy_core::metrics::verify_coverage_path;
use ivy_core::model::{lint_template, ArgumentValue, DataRole, Diagnostic, Expression, ParamType, Settings, Template};
use ivy_core::parser::{
    parse_expression, parse_settings, parse_template, serialize_settings, serialize_template, settings_to_json,
};
use ivy_core::rewrite::{suggest, templatize};

#[derive(Parser, Debug)]
#[command(name = "ivy", version, about = "Parameterized templates for JSON visualization grammars")]
pub struct Cli {
    /// Print errors on stderr as JSON objects.
    #[arg(long, global = true)]
    pub json_errors: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Instantiate a template with settings.
    Apply(ApplyArgs),
    /// Instantiate every combination of the given option sets.
    Fanout(FanoutArgs),
    /// Rank the templates in a directory against a set of data roles.
    Search(SearchArgs),
    /// List templatization suggestions for a raw spec.
    Suggest(SuggestArgs),
    /// Turn a raw spec into a template.
    Templatize(TemplatizeArgs),
    /// Lint a template, and optionally check settings against it.
    Validate(ValidateArgs),
    /// Verify a coverage manifest and report compression.
    Stats(StatsArgs),
    /// Run the registry server.
    Serve(ServeArgs),
}

#[derive(Args, Debug)]
pub struct ApplyArgs {
    #[arg(short, long)]
    pub template: PathBuf,
    #[arg(short, long)]
    pub settings: Option<PathBuf>,
    /// CSV or JSON rows to inject into the output chart.
    #[arg(short, long)]
    pub data: Option<PathBuf>,
    /// Check the output against the language's JSON Schema.
    #[arg(long)]
    pub validate: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct FanoutArgs {
    #[arg(short, long)]
    pub template: PathBuf,
    #[arg(short, long)]
    pub settings: Option<PathBuf>,
    /// `param=v1,v2,...`; repeat for more parameters. List values for
    /// multi-column parameters separate their columns with `|`.
    #[arg(long = "set", value_name = "PARAM=VALUES", required = true)]
    pub sets: Vec<String>,
    #[arg(short, long)]
    pub data: Option<PathBuf>,
    #[arg(short, long)]
    pub output: PathBuf,
    /// Worker threads; defaults to the number of logical cores.
    #[arg(long)]
    pub jobs: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SearchArgs {
    /// Directory of `*.ivy.json` templates.
    #[arg(long)]
    pub catalog: PathBuf,
    /// Comma-separated roles, e.g. `Measure,Dimension`.
    #[arg(long, required_unless_present = "data")]
    pub roles: Option<String>,
    /// Use the columns of a dataset as the query.
    #[arg(short, long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct SuggestArgs {
    /// A raw spec or template body.
    #[arg(short, long)]
    pub body: PathBuf,
    #[arg(short, long, default_value = "vega-lite")]
    pub language: String,
    #[arg(short, long)]
    pub data: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TemplatizeArgs {
    #[arg(short, long)]
    pub body: PathBuf,
    #[arg(short, long, default_value = "vega-lite")]
    pub language: String,
    /// Accept every suggestion; otherwise the template has no parameters.
    #[arg(long)]
    pub apply_all: bool,
    #[arg(short, long)]
    pub data: Option<PathBuf>,
    /// Template name; defaults to the file stem of the body.
    #[arg(long)]
    pub name: Option<String>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ValidateArgs {
    #[arg(short, long)]
    pub template: PathBuf,
    #[arg(short, long)]
    pub settings: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[arg(long)]
    pub manifest: PathBuf,
    #[arg(long)]
    pub json: bool,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    /// TOML config; falls back to `IVY_CONFIG`, then built-in defaults.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

/// A failed command: exit code, stable machine-readable code, message.
#[derive(Debug, Clone, PartialEq)]
pub struct Failure {
    pub exit: i32,
    pub code: &'static str,
    pub message: String,
}

impl Failure {
    fn usage(code: &'static str, message: impl Into<String>) -> Self {
        Failure {
            exit: 2,
            code,
            message: message.into(),
        }
    }

    fn invalid(code: &'static str, message: impl Into<String>) -> Self {
        Failure {
            exit: 1,
            code,
            message: message.into(),
        }
    }
}

impl From<EvalError> for Failure {
    fn from(e: EvalError) -> Self {
        let code = match &e {
            EvalError::InvalidSettings(_) => "invalid_settings",
            EvalError::SchemaViolation { .. } => "schema_violation",
            EvalError::Data(_) => return Failure::usage("data", e.to_string()),
            _ => "evaluation",
        };
        let mut message = e.to_string();
        if let EvalError::SchemaViolation { errors, .. } = &e {
            for err in errors {
                message.push_str(&format!("\n  {err}"));
            }
        }
        Failure::invalid(code, message)
    }
}

type Out<'a> = &'a mut dyn Write;

/// Parses `args` (program name first) and runs the command. Returns the
/// process exit code.
pub fn main_with_args<I, T>(args: I, stdout: Out, stderr: Out) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let json_errors = args.iter().any(|a| a == "--json-errors");
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{e}");
            return 0;
        }
        Err(e) => {
            let f = Failure::usage("usage", e.to_string().trim_end());
            report(&f, json_errors, stderr);
            return f.exit;
        }
    };
    match run(&cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            report(&f, cli.json_errors, stderr);
            f.exit
        }
    }
}

fn report(f: &Failure, json: bool, stderr: Out) {
    let _ = if json {
        let mut m = Map::new();
        m.insert("code".into(), JsonValue::from(f.code));
        m.insert("message".into(), JsonValue::String(f.message.clone()));
        m.insert("exit".into(), JsonValue::from(f.exit));
        let mut outer = Map::new();
        outer.insert("error".into(), JsonValue::Object(m));
        writeln!(stderr, "{}", JsonValue::Object(outer).to_compact_string())
    } else if f.code == "usage" && f.message.starts_with("error:") {
        writeln!(stderr, "{}", f.message)
    } else {
        writeln!(stderr, "error: {}", f.message)
    };
}

pub fn run(command: &Command, stdout: Out, stderr: Out) -> Result<i32, Failure> {
    match command {
        Command::Apply(a) => cmd_apply(a, stdout),
        Command::Fanout(a) => cmd_fanout(a, stdout, stderr),
        Command::Search(a) => cmd_search(a, stdout),
        Command::Suggest(a) => cmd_suggest(a, stdout),
        Command::Templatize(a) => cmd_templatize(a, stdout),
        Command::Validate(a) => cmd_validate(a, stdout),
        Command::Stats(a) => cmd_stats(a, stdout),
        Command::Serve(a) => cmd_serve(a, stderr),
    }
}

// ---------------------------------------------------------------------------
// Input helpers

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::usage("io", format!("{}: {e}", path.display())))
}

fn load_template(path: &Path) -> Result<Template, Failure> {
    parse_template(&read(path)?).map_err(|e| Failure::usage("parse", format!("{}: {e}", path.display())))
}

fn load_settings(path: Option<&Path>) -> Result<Settings, Failure> {
    match path {
        None => Ok(Settings::new()),
        Some(p) => parse_settings(&read(p)?).map_err(|e| Failure::usage("parse", format!("{}: {e}", p.display()))),
    }
}

fn load_json(path: &Path) -> Result<JsonValue, Failure> {
    JsonValue::parse(&read(path)?).map_err(|e| Failure::usage("parse", format!("{}: {e}", path.display())))
}

fn load_data(path: Option<&Path>) -> Result<Option<Dataset>, Failure> {
    path.map(|p| {
        load_dataset_path(p, &LoadOptions::default()).map_err(|e| Failure::usage("data", format!("{}: {e}", p.display())))
    })
    .transpose()
}

fn write_out(path: Option<&Path>, text: &str, stdout: Out) -> Result<(), Failure> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| Failure::usage("io", format!("{}: {e}", p.display()))),
        None => writeln!(stdout, "{text}").map_err(|e| Failure::usage("io", e.to_string())),
    }
}

fn parse_roles(text: &str) -> Result<Vec<DataRole>, Failure> {
    text.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<DataRole>().map_err(|e| Failure::usage("usage", e.to_string())))
        .collect()
}

/// Reads one option according to the declared parameter type.
pub fn coerce_option(param: &ParamType, name: &str, raw: &str) -> Result<ArgumentValue, Failure> {
    let bad = |expected: &str| Failure::usage("usage", format!("--set {name}: `{raw}` is not {expected}"));
    match param {
        ParamType::Number { .. } => raw
            .trim()
            .parse::<f64>()
            .ok()
            .filter(|n| n.is_finite())
            .map(ArgumentValue::number)
            .ok_or_else(|| bad("a number")),
        ParamType::Boolean => match raw.trim() {
            "true" => Ok(ArgumentValue::boolean(true)),
            "false" => Ok(ArgumentValue::boolean(false)),
            _ => Err(bad("true or false")),
        },
        ParamType::MultiDataTarget { .. } => Ok(ArgumentValue::StringList(
            raw.split('|').filter(|s| !s.is_empty()).map(str::to_string).collect(),
        )),
        ParamType::Enum { .. } | ParamType::String | ParamType::DataTarget { .. } => Ok(ArgumentValue::string(raw)),
        ParamType::Text { .. } | ParamType::Section { .. } => Err(Failure::usage(
            "usage",
            format!("--set {name}: display-only parameters take no values"),
        )),
    }
}

/// Builds the option sets of a fan-out from `param=v1,v2` strings.
pub fn parse_sets(t: &Template, sets: &[String]) -> Result<Map<Vec<ArgumentValue>>, Failure> {
    let mut out = Map::new();
    for s in sets {
        let (name, values) = s
            .split_once('=')
            .ok_or_else(|| Failure::usage("usage", format!("--set `{s}` must look like param=v1,v2")))?;
        let name = name.trim();
        let param = t
            .param(name)
            .ok_or_else(|| Failure::usage("usage", format!("--set: template has no parameter `{name}`")))?;
        if out.contains_key(name) {
            return Err(Failure::usage("usage", format!("--set {name} given twice")));
        }
        let values = values
            .split(',')
            .map(|v| coerce_option(&param.param_type, name, v))
            .collect::<Result<Vec<_>, _>>()?;
        out.insert(name.to_string(), values);
    }
    Ok(out)
}

/// `NNN-<12 hex digits>.json`: the combination index and a digest of the
/// canonical settings, so names do not depend on scheduling.
pub fn cell_file_name(index: usize, settings: &Settings, width: usize) -> String {
    let digest = sha256_hex(serialize_settings(settings).as_bytes());
    format!("{index:0width$}-{}.json", &digest[..12])
}

// ---------------------------------------------------------------------------
// Commands

fn cmd_apply(a: &ApplyArgs, stdout: Out) -> Result<i32, Failure> {
    let t = load_template(&a.template)?;
    let s = load_settings(a.settings.as_deref())?;
    let data = load_data(a.data.as_deref())?;
    let opts = ApplyOptions {
        dataset: data.as_ref(),
        validate: a.validate,
        registry: languages::builtin(),
    };
    let spec = apply_template_with(&t, &s, &opts)?;
    write_out(a.output.as_deref(), &spec.to_canonical_string(), stdout)?;
    Ok(0)
}

fn cmd_fanout(a: &FanoutArgs, stdout: Out, stderr: Out) -> Result<i32, Failure> {
    let t = load_template(&a.template)?;
    let base = load_settings(a.settings.as_deref())?;
    let data = load_data(a.data.as_deref())?;
    let request = FanOutRequest {
        template: t.name.clone(),
        base,
        option_sets: parse_sets(&t, &a.sets)?,
    };
    if a.jobs == Some(0) {
        return Err(Failure::usage("usage", "--jobs must be at least 1"));
    }
    let opts = FanOutOptions {
        apply: ApplyOptions {
            dataset: data.as_ref(),
            ..ApplyOptions::default()
        },
        jobs: a.jobs,
    };
    let result = fan_out_with(&t, &request, &opts).map_err(|e| Failure::invalid("fanout", e.to_string()))?;
    std::fs::create_dir_all(&a.output).map_err(|e| Failure::usage("io", format!("{}: {e}", a.output.display())))?;
    let width = result.cells.len().saturating_sub(1).to_string().len().max(3);
    let mut failed = 0;
    let mut index = Vec::new();
    for cell in &result.cells {
        let file = cell_file_name(cell.index, &cell.settings, width);
        let mut entry = Map::new();
        entry.insert("index".into(), JsonValue::from(cell.index as i32));
        entry.insert("settings".into(), settings_to_json(&cell.settings));
        match &cell.result {
            Ok(spec) => {
                let path = a.output.join(&file);
                std::fs::write(&path, spec.to_canonical_string())
                    .map_err(|e| Failure::usage("io", format!("{}: {e}", path.display())))?;
                writeln!(stdout, "{}", path.display()).map_err(|e| Failure::usage("io", e.to_string()))?;
                entry.insert("file".into(), JsonValue::String(file));
            }
            Err(e) => {
                failed += 1;
                let _ = writeln!(stderr, "cell {}: {e}", cell.index);
                entry.insert("error".into(), JsonValue::String(e.to_string()));
            }
        }
        index.push(JsonValue::Object(entry));
    }
    let manifest = a.output.join("index.json");
    std::fs::write(&manifest, JsonValue::Array(index).to_canonical_string())
        .map_err(|e| Failure::usage("io", format!("{}: {e}", manifest.display())))?;
    Ok(if failed == 0 { 0 } else { 1 })
}

fn load_catalog(dir: &Path) -> Result<Vec<Template>, Failure> {
    let entries = std::fs::read_dir(dir).map_err(|e| Failure::usage("io", format!("{}: {e}", dir.display())))?;
    let mut paths: Vec<PathBuf> = entries
        .filter_map(Result::ok)
        .map(|e| e.path())
        .filter(|p| p.to_string_lossy().ends_with(".ivy.json"))
        .collect();
    paths.sort();
    paths.iter().map(|p| load_template(p)).collect()
}

fn cmd_search(a: &SearchArgs, stdout: Out) -> Result<i32, Failure> {
    let catalog = load_catalog(&a.catalog)?;
    let mut query = match &a.roles {
        Some(r) => role_query(&parse_roles(r)?),
        None => Vec::new(),
    };
    if let Some(d) = load_data(a.data.as_deref())? {
        query.extend(d.role_query());
    }
    let hits = search_catalog(&catalog, &query);
    let text = if a.json {
        let items = hits
            .iter()
            .map(|h| {
                let mut m = Map::new();
                m.insert("name".into(), JsonValue::from(h.template.name.as_str()));
                m.insert("match".into(), h.details.result.to_json());
                m.insert("uncoveredRequired".into(), JsonValue::from(h.details.uncovered_required as i32));
                JsonValue::Object(m)
            })
            .collect();
        JsonValue::Array(items).to_canonical_string()
    } else {
        let mut out = format!("{:<4} {:<32} {:<9} {}\n", "rank", "template", "match", "mapping");
        for (i, h) in hits.iter().enumerate() {
            let mapping = h
                .details
                .result
                .mapping()
                .map(|m| m.iter().map(|(c, p)| format!("{c}->{p}")).collect::<Vec<_>>().join(" "))
                .unwrap_or_default();
            out.push_str(&format!("{:<4} {:<32} {:<9} {}\n", i + 1, h.template.name, h.details.result.kind(), mapping));
        }
        out.trim_end().to_string()
    };
    write_out(None, &text, stdout)?;
    Ok(0)
}

fn cmd_suggest(a: &SuggestArgs, stdout: Out) -> Result<i32, Failure> {
    let body = parse_expression(&load_json(&a.body)?).map_err(|e| Failure::usage("parse", e.to_string()))?;
    let data = load_data(a.data.as_deref())?;
    let list = suggest(&body, &a.language, data.as_ref()).map_err(|e| Failure::usage("usage", e.to_string()))?;
    let doc = JsonValue::Array(list.iter().map(|s| s.to_json()).collect());
    write_out(None, &doc.to_canonical_string(), stdout)?;
    Ok(0)
}

fn cmd_templatize(a: &TemplatizeArgs, stdout: Out) -> Result<i32, Failure> {
    let spec = load_json(&a.body)?;
    let data = load_data(a.data.as_deref())?;
    let name = match &a.name {
        Some(n) => n.clone(),
        None => {
            let stem = a.body.file_name().and_then(|s| s.to_str()).unwrap_or("template");
            stem.split('.').next().unwrap_or(stem).to_string()
        }
    };
    let t = if a.apply_all {
        templatize(&name, &spec, &a.language, data.as_ref()).map_err(|e| Failure::usage("usage", e.to_string()))?
    } else {
        if languages::builtin().get(&a.language).is_none() {
            return Err(Failure::usage("usage", format!("unknown language `{}`", a.language)));
        }
        let mut t = Template::new(name.as_str(), a.language.as_str(), Expression::literal(&spec));
        t.version = 1;
        t
    };
    write_out(a.output.as_deref(), &serialize_template(&t), stdout)?;
    Ok(0)
}

fn cmd_validate(a: &ValidateArgs, stdout: Out) -> Result<i32, Failure> {
    let t = load_template(&a.template)?;
    let mut problems: Vec<String> = lint_template(&t)
        .iter()
        .map(|d| match d {
            Diagnostic::UnusedParameter(_) => format!("warning: {d}"),
            _ => format!("error: {d}"),
        })
        .collect();
    if languages::builtin().get(&t.language).is_none() {
        problems.push(format!("error: unknown language `{}`", t.language));
    }
    if let Some(p) = &a.settings {
        let s = load_settings(Some(p))?;
        problems.extend(t.validate_settings(&s).iter().map(|v| format!("error: {v}")));
    }
    for p in &problems {
        writeln!(stdout, "{p}").map_err(|e| Failure::usage("io", e.to_string()))?;
    }
    let errors = problems.iter().filter(|p| p.starts_with("error")).count();
    if errors == 0 {
        writeln!(stdout, "ok: {}", t.name).map_err(|e| Failure::usage("io", e.to_string()))?;
        Ok(0)
    } else {
        Ok(1)
    }
}

fn cmd_stats(a: &StatsArgs, stdout: Out) -> Result<i32, Failure> {
    let report = verify_coverage_path(&a.manifest).map_err(|e| Failure::usage("manifest", e.to_string()))?;
    let text = if a.json {
        report.to_json().to_canonical_string()
    } else {
        report.to_table().trim_end().to_string()
    };
    write_out(None, &text, stdout)?;
    Ok(if report.all_passed() { 0 } else { 1 })
}

fn cmd_serve(a: &ServeArgs, stderr: Out) -> Result<i32, Failure> {
    let path = a
        .config
        .clone()
        .or_else(|| std::env::var_os("IVY_CONFIG").map(PathBuf::from));
    let config = ivy_registry::Config::load(path.as_deref()).map_err(|e| Failure::usage("config", e.to_string()))?;
    let _ = writeln!(
        stderr,
        "serving {} on http://{}",
        config.store_dir.display(),
        config.bind
    );
    let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::usage("runtime", e.to_string()))?;
    runtime
        .block_on(ivy_registry::serve(config))
        .map_err(|e| Failure::usage("serve", e.to_string()))?;
    Ok(0)
}
