use std::fmt;
use std::path::Path;

use lpfraisse::numeric::parse_rational;
use lpfraisse::spaces::PIndex;
use num_rational::BigRational;
use serde::de::DeserializeOwned;
use serde_path_to_error::Segment;

/// Malformed input: bad file, bad JSON, or a value rejected at a JSON pointer.
#[derive(Debug)]
pub struct InputError {
    pub file: String,
    pub pointer: String,
    pub message: String,
}

impl fmt::Display for InputError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.pointer.is_empty() {
            write!(f, "{}: {}", self.file, self.message)
        } else {
            write!(f, "{}: at {}: {}", self.file, self.pointer, self.message)
        }
    }
}

impl std::error::Error for InputError {}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

/// RFC 6901 pointer for a serde path.
fn pointer(path: &serde_path_to_error::Path) -> String {
    path.iter()
        .filter_map(|s| match s {
            Segment::Seq { index } => Some(format!("/{index}")),
            Segment::Map { key } => Some(format!("/{}", escape(key))),
            Segment::Enum { .. } | Segment::Unknown => None,
        })
        .collect()
}

pub fn parse_json<T: DeserializeOwned>(text: &str, file: &str) -> Result<T, InputError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(de).map_err(|e| InputError {
        file: file.into(),
        pointer: pointer(e.path()),
        message: e.inner().to_string(),
    })?;
    Ok(value)
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, InputError> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path).map_err(|e| InputError {
        file: file.clone(),
        pointer: String::new(),
        message: e.to_string(),
    })?;
    parse_json(&text, &file)
}

pub fn p_index(s: &str) -> Result<PIndex, String> {
    PIndex::parse(s).map_err(|e| e.to_string())
}

pub fn rational(s: &str) -> Result<BigRational, String> {
    parse_rational(s).map_err(|e| e.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, Deserialize)]
    #[allow(dead_code)]
    struct Doc {
        items: Vec<Item>,
    }

    #[derive(Debug, Deserialize)]
    #[allow(dead_code)]
    struct Item {
        #[serde(rename = "a/b")]
        value: f64,
    }

    #[test]
    fn errors_carry_json_pointers() {
        let e =
            parse_json::<Doc>(r#"{"items": [{"a/b": 1}, {"a/b": "x"}]}"#, "in.json").unwrap_err();
        assert_eq!(e.pointer, "/items/1/a~1b");
        assert!(e.to_string().starts_with("in.json: at /items/1/a~1b: "));
    }
}
