//! Canonical JSON lines: sorted keys, shortest round-trip floats.
//!
//! Values are routed through `serde_json::Value`, whose object map is
//! ordered by key, so two equal records always serialize to the same bytes.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};

/// Serializes `value` as one canonical JSON document without a newline.
pub fn to_canonical_string<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string(&v)?)
}

pub fn to_canonical_pretty<T: Serialize>(value: &T) -> Result<String> {
    let v = serde_json::to_value(value)?;
    Ok(serde_json::to_string_pretty(&v)?)
}

pub fn write_lines<T: Serialize, W: Write>(mut out: W, items: &[T]) -> Result<()> {
    for item in items {
        out.write_all(to_canonical_string(item)?.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn to_jsonl<T: Serialize>(items: &[T]) -> Result<String> {
    let mut buf = Vec::new();
    write_lines(&mut buf, items)?;
    Ok(String::from_utf8(buf).expect("serde_json emits utf-8"))
}

/// Parses JSON lines, skipping blank lines. Every malformed line is
/// reported with its 1-based line number; the first one is returned.
pub fn read_lines<T: DeserializeOwned, R: BufRead>(input: R) -> Result<Vec<T>> {
    let (items, errors) = read_lines_lenient(input)?;
    match errors.into_iter().next() {
        Some(e) => Err(e),
        None => Ok(items),
    }
}

/// Like [`read_lines`] but collects every schema error instead of stopping.
pub fn read_lines_lenient<T: DeserializeOwned, R: BufRead>(
    input: R,
) -> Result<(Vec<T>, Vec<Error>)> {
    let mut items = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        match serde_json::from_str(&line) {
            Ok(v) => items.push(v),
            Err(e) => errors.push(Error::Schema {
                line: i + 1,
                message: e.to_string(),
            }),
        }
    }
    Ok((items, errors))
}

pub fn from_jsonl<T: DeserializeOwned>(text: &str) -> Result<Vec<T>> {
    read_lines(text.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Serialize, Deserialize, PartialEq, Debug)]
    struct Rec {
        zeta: f64,
        alpha: u32,
        mid: Vec<f64>,
    }

    #[test]
    fn keys_are_sorted_and_floats_shortest() {
        let r = Rec {
            zeta: 0.1,
            alpha: 3,
            mid: vec![1.0, 1e-20, 0.30000000000000004],
        };
        let s = to_canonical_string(&r).unwrap();
        assert_eq!(s, r#"{"alpha":3,"mid":[1.0,1e-20,0.30000000000000004],"zeta":0.1}"#);
        let back: Rec = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
    }

    #[test]
    fn schema_errors_carry_line_numbers() {
        let text = "{\"zeta\":1.0,\"alpha\":1,\"mid\":[]}\n\nnot json\n";
        let (ok, errs) = read_lines_lenient::<Rec, _>(text.as_bytes()).unwrap();
        assert_eq!(ok.len(), 1);
        assert_eq!(errs.len(), 1);
        assert!(matches!(errs[0], Error::Schema { line: 3, .. }));
    }
}
