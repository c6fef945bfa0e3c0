//! Reading and writing set families: dictionary and grouping files, JSON.
//!
//! A family file is either brace sets (`{A, B}` per line, `#` comments) or a
//! JSON array of arrays of variable names. Either form may start with a
//! `vars:` line declaring the universe.

use serde_json::{json, Value};

use crate::dsl::{parse_set_list, resolve_universe, split_preamble};
use crate::error::{Error, ParseError, Result, SourceSpan};
use crate::grouping::{CongruenceReport, OglReport};
use crate::model::{Dictionary, Universe, VarSet};

/// Universe and sets read from a family file, in file order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FamilyFile {
    pub universe: Universe,
    pub sets: Vec<VarSet>,
}

/// Parses family-file text; `given` takes precedence over a `vars:` line.
pub fn parse_family(text: &str, given: Option<&Universe>) -> Result<FamilyFile> {
    let (declared, body) = split_preamble(text);
    let universe = resolve_universe(declared, given)?;
    let sets = if body.trim_start().starts_with('[') {
        let names: Vec<Vec<String>> = serde_json::from_str(&body)?;
        names
            .iter()
            .map(|set| universe.set(set.iter().map(String::as_str)))
            .collect::<Result<_>>()?
    } else {
        parse_set_list(&body, &universe)?
    };
    Ok(FamilyFile { universe, sets })
}

/// Parses a single set written `{A,B}` or `A,B`.
pub fn parse_set(text: &str, u: &Universe) -> Result<VarSet> {
    let trimmed = text.trim();
    let braced = if trimmed.starts_with('{') {
        trimmed.to_string()
    } else {
        format!("{{{trimmed}}}")
    };
    match parse_set_list(&braced, u)?.as_slice() {
        [one] => Ok(*one),
        _ => Err(Error::Parse(ParseError {
            span: SourceSpan::new(0, text.len()),
            message: format!("expected exactly one set, got `{text}`"),
            expected: vec!["a single `{...}` set".into()],
        })),
    }
}

pub fn set_json(u: &Universe, s: VarSet) -> Value {
    json!(u.names_of(s))
}

/// A dictionary as an array of arrays of names, in canonical order.
pub fn dictionary_json(u: &Universe, d: &Dictionary) -> Value {
    Value::Array(d.iter().map(|s| set_json(u, s)).collect())
}

pub fn sets_json(u: &Universe, sets: &[VarSet]) -> Value {
    Value::Array(sets.iter().map(|&s| set_json(u, s)).collect())
}

/// One brace set per line; the empty set is `{}`.
pub fn dictionary_text(u: &Universe, d: &Dictionary) -> String {
    d.iter().map(|s| u.display_set(s) + "\n").collect()
}

pub fn congruence_json(u: &Universe, r: &CongruenceReport) -> Value {
    json!({
        "congruent": r.congruent,
        "missing": dictionary_json(u, &r.missing),
        "extra": dictionary_json(u, &r.extra),
    })
}

pub fn ogl_json(u: &Universe, r: &OglReport) -> Value {
    json!({
        "congruent": r.report.congruent,
        "missing": dictionary_json(u, &r.report.missing),
        "extra": dictionary_json(u, &r.report.extra),
        "reduced_rule": dictionary_json(u, &r.reduced_rule),
        "complement_family": dictionary_json(u, &r.complement_family),
    })
}

pub fn congruence_text(u: &Universe, r: &CongruenceReport) -> String {
    let mut out = format!("congruent: {}\n", r.congruent);
    for (label, d) in [("missing", &r.missing), ("extra", &r.extra)] {
        out.push_str(label);
        out.push_str(":\n");
        for s in d.iter() {
            out.push_str("  ");
            out.push_str(&u.display_set(s));
            out.push('\n');
        }
    }
    out
}

/// Pretty JSON with a trailing newline.
pub fn to_json_string(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}
