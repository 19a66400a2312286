//! A standalone size counter for specs and template bodies, working on
//! plain `serde_json` documents with its own bracket scanner.

use serde_json::Value;

/// Splits a string into text and variable segments. `[[` is a literal `[`.
/// Returns `(segments, variables)`.
pub fn scan(s: &str) -> (usize, usize) {
    let chars: Vec<char> = s.chars().collect();
    let mut segments = 0;
    let mut variables = 0;
    let mut in_text = false;
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '[' && chars.get(i + 1) == Some(&'[') {
            if !in_text {
                segments += 1;
                in_text = true;
            }
            i += 2;
            continue;
        }
        if chars[i] == '[' {
            let mut j = i + 1;
            while j < chars.len() && (chars[j] == '_' || chars[j].is_ascii_alphanumeric()) {
                j += 1;
            }
            let ident_ok = j > i + 1 && !chars[i + 1].is_ascii_digit();
            if ident_ok && chars.get(j) == Some(&']') {
                segments += 1;
                variables += 1;
                in_text = false;
                i = j + 1;
                continue;
            }
        }
        if !in_text {
            segments += 1;
            in_text = true;
        }
        i += 1;
    }
    (segments, variables)
}

/// Node count: atomics, objects, lists and fields count one each; a
/// variable counts one; an interpolated string counts its segments; a
/// conditional counts one plus its branches.
pub fn ast_nodes(v: &Value) -> usize {
    match v {
        Value::String(s) => {
            let (segments, variables) = scan(s);
            if variables == 0 {
                1
            } else {
                segments
            }
        }
        Value::Object(m) => {
            if m.len() == 1 {
                if let Some(Value::Object(c)) = m.get("$cond") {
                    return 1 + c.get("true").map_or(0, ast_nodes) + c.get("false").map_or(0, ast_nodes);
                }
            }
            1 + m.values().map(|c| 1 + ast_nodes(c)).sum::<usize>()
        }
        Value::Array(items) => 1 + items.iter().map(ast_nodes).sum::<usize>(),
        _ => 1,
    }
}

pub fn lines(v: &Value) -> usize {
    serde_json::to_string_pretty(v).expect("serializable").lines().count()
}

pub fn ratio(examples: &[Value], body: &Value, count: fn(&Value) -> usize) -> f64 {
    examples.iter().map(count).sum::<usize>() as f64 / count(body) as f64
}
