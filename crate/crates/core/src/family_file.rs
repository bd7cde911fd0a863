//! Line-oriented family files.
//!
//! ```text
//! # bit-flip channel on [0.2, 0.8]
//! family = bitflip
//! box = [[0.2, 0.8]]
//! t = [0.4142]
//! ```
//!
//! Each non-blank line is `key = value`; `#` starts a comment. Values are
//! JSON, except that `family` also accepts a bare word. Keys:
//!
//! | key            | meaning                                                  |
//! |----------------|----------------------------------------------------------|
//! | `family`       | `bitflip`, `depolarizing`, `pauli`, `rotation`, `constant_pure` |
//! | `box`          | `[[a, b], ...]`, one interval per parameter              |
//! | `p0`           | `pauli` only: offset probability vector                  |
//! | `coefficients` | `pauli` only: one 4-vector per parameter                 |
//! | `t`            | evaluation point (defaults to the box center)            |
//! | `t_ref`        | reference point for divergences                          |
//!
//! A `pauli` family without `p0`/`coefficients` uses the parameters as the
//! `X, Y, Z` probabilities directly (`v ≤ 3`).

use std::collections::BTreeMap;

use serde::Serialize;
use serde_json::Value;

use crate::channels::{bitflip, constant_pure, depolarizing, pauli_affine, pauli_simplex, rotation, ChannelFamily};
use crate::error::{Error, Result};

const KEYS: [&str; 6] = ["family", "box", "p0", "coefficients", "t", "t_ref"];
const FAMILIES: [&str; 5] = ["bitflip", "depolarizing", "pauli", "rotation", "constant_pure"];

/// A parsed family file; values keep the line they came from.
#[derive(Clone, Debug, Serialize)]
pub struct FamilyFile {
    pub family: String,
    pub bounds: Vec<(f64, f64)>,
    pub p0: Option<[f64; 4]>,
    pub coefficients: Option<Vec<[f64; 4]>>,
    pub t: Option<Vec<f64>>,
    pub t_ref: Option<Vec<f64>>,
    #[serde(skip)]
    lines: BTreeMap<&'static str, usize>,
}

fn spec_err(line: usize, message: impl Into<String>) -> Error {
    Error::FamilyFile { line, message: message.into() }
}

fn as_vector(v: &Value, line: usize, key: &str) -> Result<Vec<f64>> {
    v.as_array()
        .and_then(|a| a.iter().map(Value::as_f64).collect::<Option<Vec<f64>>>())
        .ok_or_else(|| spec_err(line, format!("`{key}` must be an array of numbers")))
}

fn as_four(v: &Value, line: usize, key: &str) -> Result<[f64; 4]> {
    let x = as_vector(v, line, key)?;
    x.try_into().map_err(|x: Vec<f64>| spec_err(line, format!("`{key}` needs 4 entries, got {}", x.len())))
}

impl FamilyFile {
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw: BTreeMap<&'static str, (usize, Value)> = BTreeMap::new();
        for (idx, full) in text.lines().enumerate() {
            let line = idx + 1;
            let content = full.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| spec_err(line, format!("expected `key = value`, got `{content}`")))?;
            let key = key.trim();
            let key = *KEYS
                .iter()
                .find(|k| **k == key)
                .ok_or_else(|| spec_err(line, format!("unknown key `{key}` (expected one of {})", KEYS.join(", "))))?;
            let value = value.trim();
            let parsed = match serde_json::from_str::<Value>(value) {
                Ok(v) => v,
                Err(_) if key == "family" && !value.is_empty() => Value::String(value.to_string()),
                Err(e) => {
                    let msg = e.to_string();
                    let msg = msg.rsplit_once(" at line ").map_or(msg.as_str(), |(m, _)| m).to_string();
                    return Err(spec_err(line, format!("invalid value for `{key}`: {msg}")));
                }
            };
            if let Some((first, _)) = raw.insert(key, (line, parsed)) {
                return Err(spec_err(line, format!("duplicate key `{key}` (first set on line {first})")));
            }
        }
        let last = text.lines().count().max(1);
        let (family_line, family) =
            raw.get("family").ok_or_else(|| spec_err(last, "missing required key `family`"))?;
        let family = family
            .as_str()
            .filter(|f| FAMILIES.contains(f))
            .ok_or_else(|| spec_err(*family_line, format!("unknown family {family} (expected one of {})", FAMILIES.join(", "))))?
            .to_string();
        let (box_line, bounds) = raw.get("box").ok_or_else(|| spec_err(last, "missing required key `box`"))?;
        let bounds: Vec<(f64, f64)> = bounds
            .as_array()
            .filter(|a| !a.is_empty())
            .ok_or_else(|| spec_err(*box_line, "`box` must be a non-empty array of [a, b] pairs"))?
            .iter()
            .map(|pair| match as_vector(pair, *box_line, "box")?.as_slice() {
                &[a, b] if a <= b => Ok((a, b)),
                other => Err(spec_err(*box_line, format!("box interval {other:?} is not [a, b] with a <= b"))),
            })
            .collect::<Result<_>>()?;
        let p0 = raw.get("p0").map(|(l, v)| as_four(v, *l, "p0")).transpose()?;
        let coefficients = raw
            .get("coefficients")
            .map(|(l, v)| {
                v.as_array()
                    .ok_or_else(|| spec_err(*l, "`coefficients` must be an array of 4-vectors"))?
                    .iter()
                    .map(|row| as_four(row, *l, "coefficients"))
                    .collect::<Result<Vec<_>>>()
            })
            .transpose()?;
        let point = |key: &str| -> Result<Option<Vec<f64>>> {
            raw.get(key)
                .map(|(l, v)| {
                    let x = as_vector(v, *l, key)?;
                    if x.len() != bounds.len() {
                        return Err(spec_err(*l, format!("`{key}` has {} coordinates for {} parameters", x.len(), bounds.len())));
                    }
                    Ok(x)
                })
                .transpose()
        };
        let (t, t_ref) = (point("t")?, point("t_ref")?);
        let lines = raw.iter().map(|(k, (l, _))| (*k, *l)).collect();
        Ok(Self { family, bounds, p0, coefficients, t, t_ref, lines })
    }

    pub fn line_of(&self, key: &str) -> usize {
        self.lines.get(key).copied().unwrap_or(0)
    }

    fn single_interval(&self) -> Result<(f64, f64)> {
        match self.bounds.as_slice() {
            &[ab] => Ok(ab),
            _ => Err(spec_err(self.line_of("box"), format!("family `{}` has one parameter, box has {}", self.family, self.bounds.len()))),
        }
    }

    /// Constructs the family; construction failures are reported against the
    /// line of the offending key.
    pub fn build(&self) -> Result<ChannelFamily> {
        let located = |e: Error| match e {
            Error::FamilyFile { .. } => e,
            other => spec_err(self.line_of("box").max(self.line_of("family")), other.to_string()),
        };
        let fam = match self.family.as_str() {
            "bitflip" => self.single_interval().and_then(|(a, b)| bitflip(a, b)),
            "depolarizing" => self.single_interval().and_then(|(a, b)| depolarizing(a, b)),
            "rotation" => self.single_interval().and_then(|(a, b)| rotation(a, b)),
            "constant_pure" => self.single_interval().and_then(|(a, b)| constant_pure(a, b)),
            "pauli" => match (&self.p0, &self.coefficients) {
                (Some(p0), Some(c)) => pauli_affine("pauli", *p0, c.clone(), self.bounds.clone()),
                (None, None) => pauli_simplex(self.bounds.clone()),
                _ => Err(spec_err(
                    self.line_of("p0").max(self.line_of("coefficients")),
                    "`p0` and `coefficients` must be given together",
                )),
            },
            other => Err(spec_err(self.line_of("family"), format!("unknown family `{other}`"))),
        }
        .map_err(located)?;
        for (key, point) in [("t", &self.t), ("t_ref", &self.t_ref)] {
            if let Some(p) = point {
                if !fam.contains(p) {
                    return Err(spec_err(self.line_of(key), format!("`{key}` = {p:?} lies outside the box")));
                }
            }
        }
        Ok(fam)
    }

    /// `t` if given, else the box center.
    pub fn point(&self) -> Vec<f64> {
        self.t.clone().unwrap_or_else(|| self.bounds.iter().map(|(a, b)| 0.5 * (a + b)).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_builds() {
        let f = FamilyFile::parse("# demo\nfamily = bitflip\nbox = [[0.2, 0.8]]  # interval\n\nt = [0.3]\n").unwrap();
        assert_eq!(f.family, "bitflip");
        assert_eq!(f.point(), vec![0.3]);
        assert_eq!(f.line_of("t"), 5);
        assert_eq!(f.build().unwrap().v(), 1);
    }

    #[test]
    fn affine_pauli() {
        let text = "family = \"pauli\"\nbox = [[0, 0.1]]\np0 = [0.9, 0.05, 0.05, 0]\ncoefficients = [[-1, 0, 0, 1]]\n";
        let fam = FamilyFile::parse(text).unwrap().build().unwrap();
        let p = fam.pauli_vector(&[0.1]).unwrap();
        assert!((p[0] - 0.8).abs() < 1e-15 && (p[3] - 0.1).abs() < 1e-15);
    }

    #[test]
    fn errors_carry_lines() {
        let cases = [
            ("family = bitflip\nbox [[0, 1]]\n", 2),
            ("family = bitflip\nbox = [[0, 1]]\nwidth = 3\n", 3),
            ("family = bitflip\nbox = [[0, 1]]\nbox = [[0, 1]]\n", 3),
            ("family = teleporter\nbox = [[0, 1]]\n", 1),
            ("family = bitflip\nbox = [[1, 0]]\n", 2),
            ("family = bitflip\nbox = [[0.2, 0.8]]\nt = [0.9]\n", 3),
            ("family = bitflip\nbox = [[0.2, 0.8]]\nt = [0.3, 0.4]\n", 3),
            ("family = pauli\nbox = [[0.5, 0.6], [0.5, 0.6]]\n", 2),
        ];
        for (text, line) in cases {
            let err = FamilyFile::parse(text).and_then(|f| f.build().map(|_| ())).unwrap_err();
            assert!(matches!(err, Error::FamilyFile { line: l, .. } if l == line), "{text:?}: {err}");
        }
    }
}
