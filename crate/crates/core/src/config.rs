//! Plain-text configuration files.
//!
//! The mapping files (object map, expected-emotion map, vendor adapter) share
//! one syntax: one `left -> right` pair per line, `#` comments, blank lines
//! ignored.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::au::AuCode;

/// Environment variable naming the default configuration directory.
pub const CONFIG_DIR_ENV: &str = "DRILLSCOPE_CONFIG_DIR";

pub const RULES_FILE: &str = "rules.txt";
pub const OBJECTS_FILE: &str = "objects.txt";
pub const EXPECTED_FILE: &str = "expected.txt";
pub const VENDOR_FILE: &str = "vendor.txt";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {detail}")]
pub struct ConfigError {
    pub line: usize,
    pub detail: String,
}

impl ConfigError {
    pub fn new(line: usize, detail: impl Into<String>) -> ConfigError {
        ConfigError {
            line,
            detail: detail.into(),
        }
    }
}

/// Splits a `left -> right` file into `(line, left, right)` triples.
pub fn arrow_entries(text: &str) -> Result<Vec<(usize, &str, &str)>, ConfigError> {
    let mut out = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let content = raw.split('#').next().unwrap().trim();
        if content.is_empty() {
            continue;
        }
        let (left, right) = content
            .split_once("->")
            .ok_or_else(|| ConfigError::new(line, format!("expected `left -> right`, found `{content}`")))?;
        let (left, right) = (left.trim(), right.trim());
        if left.is_empty() || right.is_empty() {
            return Err(ConfigError::new(line, "empty side in mapping"));
        }
        out.push((line, left, right));
    }
    Ok(out)
}

/// Renames vendor blendshape channels to canonical AU codes in `.drl` text.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct VendorAdapter {
    map: BTreeMap<String, AuCode>,
}

impl VendorAdapter {
    pub fn parse(text: &str) -> Result<VendorAdapter, ConfigError> {
        let mut map = BTreeMap::new();
        for (line, vendor, code) in arrow_entries(text)? {
            let au: AuCode = code
                .parse()
                .map_err(|e: crate::au::UnknownAu| ConfigError::new(line, e.to_string()))?;
            if map.insert(vendor.to_string(), au).is_some() {
                return Err(ConfigError::new(line, format!("`{vendor}` mapped twice")));
            }
        }
        Ok(VendorAdapter { map })
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Rewrites `name=weight` fields on sample lines. Unknown names pass
    /// through untouched so the parser reports them.
    pub fn apply(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        for line in text.split_inclusive('\n') {
            if !line.starts_with("S ") {
                out.push_str(line);
                continue;
            }
            let (body, newline) = match line.strip_suffix('\n') {
                Some(b) => (b, "\n"),
                None => (line, ""),
            };
            let rewritten: Vec<String> = body
                .split(' ')
                .map(|field| match field.split_once('=') {
                    Some((name, value)) => match self.map.get(name) {
                        Some(au) => format!("{au}={value}"),
                        None => field.to_string(),
                    },
                    None => field.to_string(),
                })
                .collect();
            out.push_str(&rewritten.join(" "));
            out.push_str(newline);
        }
        out
    }
}

/// Resolves a config path: the explicit flag wins, then the file of that name
/// inside `$DRILLSCOPE_CONFIG_DIR`, if it exists.
pub fn resolve(explicit: Option<&Path>, file_name: &str) -> Option<PathBuf> {
    if let Some(p) = explicit {
        return Some(p.to_path_buf());
    }
    let dir = std::env::var_os(CONFIG_DIR_ENV)?;
    let candidate = Path::new(&dir).join(file_name);
    candidate.is_file().then_some(candidate)
}
