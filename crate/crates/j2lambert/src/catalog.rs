//! Body catalog: a text table mapping names to gravity parameters.
//!
//! One body per line, `name mu radius j2` in km^3/s^2, km and
//! dimensionless units. `#` starts a comment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use j2lambert_core::BodyParams;

use crate::error::{Error, Result};

const BUILTIN: &str = include_str!("../data/bodies.txt");

#[derive(Debug, Clone, PartialEq)]
pub struct BodyCatalog {
    bodies: BTreeMap<String, BodyParams>,
}

impl BodyCatalog {
    /// Jupiter with and without its J2 term.
    pub fn builtin() -> Self {
        Self::parse(BUILTIN, Path::new("<builtin>")).expect("builtin catalog is valid")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// `origin` only labels errors.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut bodies = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i as u64 + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::format(
                    origin,
                    line_no,
                    "expected `name mu radius j2`",
                ));
            }
            let mut nums = [0.0; 3];
            for (slot, f) in nums.iter_mut().zip(&fields[1..]) {
                *slot = f
                    .parse()
                    .map_err(|_| Error::format(origin, line_no, format!("not a number: {f}")))?;
            }
            let body = BodyParams::new(nums[0], nums[1], nums[2])
                .map_err(|e| Error::format(origin, line_no, e.to_string()))?;
            if bodies.insert(fields[0].to_string(), body).is_some() {
                return Err(Error::format(
                    origin,
                    line_no,
                    format!("duplicate body {}", fields[0]),
                ));
            }
        }
        Ok(BodyCatalog { bodies })
    }

    pub fn get(&self, name: &str) -> Option<&BodyParams> {
        self.bodies.get(name)
    }

    /// Looks `name` up, reporting the known names on failure.
    pub fn resolve(&self, name: &str) -> Result<BodyParams> {
        self.get(name).copied().ok_or_else(|| {
            let known: Vec<&str> = self.names().collect();
            Error::Usage(format!(
                "unknown body `{name}` (known: {})",
                known.join(", ")
            ))
        })
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.bodies.keys().map(String::as_str)
    }

    pub fn insert(&mut self, name: &str, body: BodyParams) {
        self.bodies.insert(name.to_string(), body);
    }

    pub fn to_text(&self) -> String {
        let mut out = String::from("# name  mu (km^3/s^2)  radius (km)  j2\n");
        for (name, b) in &self.bodies {
            let _ = writeln!(out, "{name} {} {} {}", b.mu, b.radius, b.j2);
        }
        out
    }
}
