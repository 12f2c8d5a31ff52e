//! Flat key=value experiment configs.
//!
//! Format: `key = value` lines, `[section]` headers prefixing subsequent keys
//! with `section.`, `#` comments, blank lines ignored. No nesting, no quoting.
//! `kind` and `seed` are required at top level.

use std::collections::BTreeMap;
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use super::HarnessError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExperimentKind {
    CountConverge,
    Overcount,
    MeasureChain,
    CollapseCompare,
    Lattice,
    Sample,
    GaugeRoundtrip,
}

impl ExperimentKind {
    pub const ALL: [ExperimentKind; 7] = [
        ExperimentKind::CountConverge,
        ExperimentKind::Overcount,
        ExperimentKind::MeasureChain,
        ExperimentKind::CollapseCompare,
        ExperimentKind::Lattice,
        ExperimentKind::Sample,
        ExperimentKind::GaugeRoundtrip,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentKind::CountConverge => "count-converge",
            ExperimentKind::Overcount => "overcount",
            ExperimentKind::MeasureChain => "measure-chain",
            ExperimentKind::CollapseCompare => "collapse-compare",
            ExperimentKind::Lattice => "lattice",
            ExperimentKind::Sample => "sample",
            ExperimentKind::GaugeRoundtrip => "gauge-roundtrip",
        }
    }
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExperimentKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ExperimentKind::ALL
            .iter()
            .find(|k| k.as_str() == s)
            .copied()
            .ok_or_else(|| format!("unknown experiment kind `{s}`"))
    }
}

/// Parsed experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub kind: ExperimentKind,
    pub seed: u64,
    pub out_dir: Option<PathBuf>,
    entries: BTreeMap<String, String>,
    raw: String,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, HarnessError> {
        let mut entries = BTreeMap::new();
        let mut section = String::new();
        for (lineno, line) in text.lines().enumerate() {
            let lineno = lineno + 1;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| config_err(lineno, "unterminated section header"))?
                    .trim();
                if name.is_empty() || name.contains(char::is_whitespace) {
                    return Err(config_err(lineno, "invalid section name"));
                }
                section = format!("{name}.");
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| config_err(lineno, "expected `key = value`"))?;
            let key = format!("{section}{}", key.trim());
            let value = value.trim().to_string();
            if entries.insert(key.clone(), value).is_some() {
                return Err(config_err(lineno, format!("duplicate key `{key}`")));
            }
        }
        let kind_str = entries
            .get("kind")
            .ok_or_else(|| HarnessError::config("missing required key `kind`"))?;
        let kind = kind_str
            .parse::<ExperimentKind>()
            .map_err(HarnessError::config)?;
        let seed = entries
            .get("seed")
            .ok_or_else(|| HarnessError::config("missing required key `seed`"))?
            .parse::<u64>()
            .map_err(|_| HarnessError::config("`seed` must be an unsigned 64-bit integer"))?;
        let out_dir = entries.get("out").map(PathBuf::from);
        Ok(ExperimentConfig {
            kind,
            seed,
            out_dir,
            entries,
            raw: text.to_string(),
        })
    }

    /// The config text as given, for the manifest echo.
    pub fn raw(&self) -> &str {
        &self.raw
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(String::as_str)
    }

    pub fn require(&self, key: &str) -> Result<&str, HarnessError> {
        self.get(key)
            .ok_or_else(|| HarnessError::config(format!("missing required key `{key}`")))
    }

    pub fn get_u64(&self, key: &str) -> Result<Option<u64>, HarnessError> {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|_| {
                    HarnessError::config(format!("`{key}` must be an unsigned integer"))
                })
            })
            .transpose()
    }

    pub fn require_u64(&self, key: &str) -> Result<u64, HarnessError> {
        self.get_u64(key)?
            .ok_or_else(|| HarnessError::config(format!("missing required key `{key}`")))
    }

    pub fn require_usize(&self, key: &str) -> Result<usize, HarnessError> {
        Ok(self.require_u64(key)? as usize)
    }

    pub fn require_f64(&self, key: &str) -> Result<f64, HarnessError> {
        self.require(key)?
            .parse()
            .map_err(|_| HarnessError::config(format!("`{key}` must be a number")))
    }

    pub fn get_bool(&self, key: &str, default: bool) -> Result<bool, HarnessError> {
        match self.get(key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(other) => Err(HarnessError::config(format!(
                "`{key}` must be true or false, got `{other}`"
            ))),
        }
    }

    /// Comma-separated float list.
    pub fn get_f64_list(&self, key: &str) -> Result<Option<Vec<f64>>, HarnessError> {
        self.get(key)
            .map(|v| {
                v.split(',')
                    .map(|x| {
                        x.trim().parse().map_err(|_| {
                            HarnessError::config(format!("`{key}` contains a non-number `{x}`"))
                        })
                    })
                    .collect()
            })
            .transpose()
    }

    /// Comma-separated unsigned list.
    pub fn require_usize_list(&self, key: &str) -> Result<Vec<usize>, HarnessError> {
        self.require(key)?
            .split(',')
            .map(|x| {
                x.trim().parse().map_err(|_| {
                    HarnessError::config(format!("`{key}` contains a non-integer `{x}`"))
                })
            })
            .collect()
    }

    /// Comma-separated strings.
    pub fn get_str_list(&self, key: &str) -> Option<Vec<String>> {
        self.get(key)
            .map(|v| v.split(',').map(|x| x.trim().to_string()).collect())
    }

    /// Levels: inclusive range `lo..hi` or a comma list.
    pub fn require_levels(&self, key: &str) -> Result<Vec<u32>, HarnessError> {
        let raw = self.require(key)?;
        if let Some((lo, hi)) = raw.split_once("..") {
            let lo: u32 = lo.trim().parse().map_err(|_| bad_levels(key))?;
            let hi: u32 = hi.trim().parse().map_err(|_| bad_levels(key))?;
            if hi < lo {
                return Err(bad_levels(key));
            }
            return Ok((lo..=hi).collect());
        }
        raw.split(',')
            .map(|x| x.trim().parse().map_err(|_| bad_levels(key)))
            .collect()
    }

    /// `re,im;re,im;...` complex list.
    pub fn get_complex_list(
        &self,
        key: &str,
    ) -> Result<Option<Vec<num_complex::Complex64>>, HarnessError> {
        let Some(raw) = self.get(key) else {
            return Ok(None);
        };
        let mut out = Vec::new();
        for pair in raw.split(';') {
            let (re, im) = pair.split_once(',').ok_or_else(|| {
                HarnessError::config(format!("`{key}` entries must be `re,im` pairs"))
            })?;
            let parse = |s: &str| {
                s.trim().parse::<f64>().map_err(|_| {
                    HarnessError::config(format!("`{key}` contains a non-number `{s}`"))
                })
            };
            out.push(num_complex::Complex64::new(parse(re)?, parse(im)?));
        }
        Ok(Some(out))
    }
}

fn bad_levels(key: &str) -> HarnessError {
    HarnessError::config(format!(
        "`{key}` must be an inclusive range `lo..hi` or a comma list of levels"
    ))
}

fn config_err(line: usize, message: impl fmt::Display) -> HarnessError {
    HarnessError::config(format!("line {line}: {message}"))
}
