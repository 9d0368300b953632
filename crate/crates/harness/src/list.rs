//! Comma-separated numeric lists as accepted on the command line.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Parses `"0.6, 0.7,0.8"` into finite floats. Empty items and non-finite values are
/// rejected; surrounding whitespace and one trailing comma are tolerated.
pub fn parse_list(s: &str) -> Result<Vec<f64>, String> {
    let body = s.trim();
    let body = body.strip_suffix(',').unwrap_or(body);
    if body.trim().is_empty() {
        return Err("empty list".into());
    }
    body.split(',')
        .enumerate()
        .map(|(i, item)| {
            let item = item.trim();
            if item.is_empty() {
                return Err(format!("item {} is empty", i + 1));
            }
            let v: f64 = item
                .parse()
                .map_err(|_| format!("item {} ({item:?}) is not a number", i + 1))?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(format!("item {} ({item:?}) is not finite", i + 1))
            }
        })
        .collect()
}

/// A list of floats that reads from a comma-separated flag and serializes as a JSON array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FloatList(pub Vec<f64>);

impl FromStr for FloatList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        parse_list(s).map(FloatList)
    }
}

impl fmt::Display for FloatList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&items.join(","))
    }
}
