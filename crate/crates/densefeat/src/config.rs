//! Plain-text configuration files: "key = value" lines grouped under
//! "[section]" headers, full-line '#' comments, every key checked against a
//! fixed schema so typos fail instead of silently using defaults.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::keypoint::DetectorId;

/// Every (section, key) the toolkit understands. Sections named after a
/// detector token hold that detector's parameters; [pipeline] and [codebook]
/// drive evaluation; [sweep] is only meaningful in sweep spec files.
const SCHEMA: &[(&str, &[&str])] = &[
    (
        "pipeline",
        &[
            "detector",
            "patch_size",
            "norm_filter",
            "pca",
            "power_beta",
            "downsample_area",
        ],
    ),
    ("codebook", &["file", "images", "k", "seed"]),
    ("dense", &["delta_xy", "n_scales"]),
    ("dense-ip", &["cell", "search_scales", "response"]),
    ("dense-l2norm", &["tau", "n_scales", "stride"]),
    ("harris", &["tau", "alpha", "sigma_d", "sigma_i", "relaxed"]),
    ("frobenius", &["tau", "alpha", "sigma_d", "sigma_i", "relaxed"]),
    ("hessian", &["tau", "sigma_d"]),
    ("dog", &["tau", "scales_per_octave", "octaves"]),
    ("zernike", &["n_z", "order", "filter_size", "n_scales"]),
    ("mser", &["delta", "min_area", "max_area", "max_variation"]),
    ("ssr", &["k", "min_size"]),
    (
        "mser-edge",
        &["delta", "min_area", "max_area", "max_variation", "n_scales", "tau"],
    ),
    ("ssr-edge", &["k", "min_size", "n_scales", "tau"]),
    ("fast-edge", &["edges", "n_scales", "tau"]),
    ("sweep", &["config", "detector", "param", "values"]),
];

fn schema_keys(section: &str) -> Option<&'static [&'static str]> {
    SCHEMA.iter().find(|(s, _)| *s == section).map(|(_, k)| *k)
}

#[derive(Debug, Clone, Default)]
pub struct Config {
    // section -> key -> (value, source line)
    sections: BTreeMap<String, BTreeMap<String, (String, usize)>>,
}

impl Config {
    pub fn parse(text: &str, path: &Path) -> Result<Config> {
        let mut cfg = Config::default();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let lineno = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name
                    .strip_suffix(']')
                    .ok_or_else(|| Error::text(path, lineno, "unterminated section header"))?
                    .trim();
                if schema_keys(name).is_none() {
                    return Err(Error::config(format!(
                        "{}:{lineno}: unknown section [{name}]",
                        path.display()
                    )));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::text(path, lineno, "expected 'key = value'"))?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(Error::text(path, lineno, "empty key or value"));
            }
            let Some(section) = &section else {
                return Err(Error::text(path, lineno, "key outside any [section]"));
            };
            if !schema_keys(section).unwrap().contains(&key) {
                return Err(Error::config(format!(
                    "{}:{lineno}: unknown key '{key}' in [{section}]",
                    path.display()
                )));
            }
            let entry = cfg.sections.entry(section.clone()).or_default();
            if entry.insert(key.to_string(), (value.to_string(), lineno)).is_some() {
                return Err(Error::config(format!(
                    "{}:{lineno}: duplicate key '{key}' in [{section}]",
                    path.display()
                )));
            }
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Config> {
        let bytes = crate::io::read_file(path)?;
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| Error::text(path, 1, "config is not valid UTF-8"))?;
        Config::parse(text, path)
    }

    /// Inserts or replaces a value, same schema check as the parser. Sweeps
    /// use this to vary one key between runs.
    pub fn set(&mut self, section: &str, key: &str, value: impl Into<String>) {
        let known = schema_keys(section).is_some_and(|keys| keys.contains(&key));
        assert!(known, "[{section}] {key} is not in the schema");
        self.sections
            .entry(section.to_string())
            .or_default()
            .insert(key.to_string(), (value.into(), 0));
    }

    pub fn get(&self, section: &str, key: &str) -> Option<&str> {
        self.sections
            .get(section)
            .and_then(|s| s.get(key))
            .map(|(v, _)| v.as_str())
    }

    fn parsed<T: std::str::FromStr>(&self, section: &str, key: &str, what: &str) -> Result<Option<T>> {
        match self.get(section, key) {
            None => Ok(None),
            Some(v) => v.parse::<T>().map(Some).map_err(|_| {
                Error::config(format!("[{section}] {key}: expected {what}, got '{v}'"))
            }),
        }
    }

    pub fn f32_or(&self, section: &str, key: &str, default: f32) -> Result<f32> {
        Ok(self.parsed(section, key, "a number")?.unwrap_or(default))
    }

    pub fn f64_or(&self, section: &str, key: &str, default: f64) -> Result<f64> {
        Ok(self.parsed(section, key, "a number")?.unwrap_or(default))
    }

    pub fn usize_or(&self, section: &str, key: &str, default: usize) -> Result<usize> {
        Ok(self
            .parsed(section, key, "a non-negative integer")?
            .unwrap_or(default))
    }

    pub fn u32_or(&self, section: &str, key: &str, default: u32) -> Result<u32> {
        Ok(self
            .parsed(section, key, "a non-negative integer")?
            .unwrap_or(default))
    }

    pub fn u64_or(&self, section: &str, key: &str, default: u64) -> Result<u64> {
        Ok(self
            .parsed(section, key, "a non-negative integer")?
            .unwrap_or(default))
    }

    pub fn bool_or(&self, section: &str, key: &str, default: bool) -> Result<bool> {
        match self.get(section, key) {
            None => Ok(default),
            Some("true") => Ok(true),
            Some("false") => Ok(false),
            Some(v) => Err(Error::config(format!(
                "[{section}] {key}: expected true or false, got '{v}'"
            ))),
        }
    }

    /// Path values resolve relative to the config file's own directory.
    pub fn path_opt(&self, section: &str, key: &str, base: &Path) -> Option<PathBuf> {
        self.get(section, key).map(|v| base.join(v))
    }
}

/// The [pipeline] block as a typed view. `detector` may instead arrive from
/// the command line, in which case it overrides the file.
#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub detector: DetectorId,
    pub patch_size: usize,
    pub norm_filter: f32,
    pub pca: bool,
    pub power_beta: f32,
    pub downsample_area: usize,
}

pub const DEFAULT_PATCH_SIZE: usize = 41;
pub const DEFAULT_DOWNSAMPLE_AREA: usize = 150_000;

impl PipelineConfig {
    pub fn from_config(cfg: &Config, detector_override: Option<DetectorId>) -> Result<PipelineConfig> {
        let detector = match detector_override {
            Some(d) => d,
            None => {
                let token = cfg.get("pipeline", "detector").ok_or_else(|| {
                    Error::config("[pipeline] detector is required".to_string())
                })?;
                DetectorId::from_token(token).ok_or_else(|| {
                    Error::config(format!("[pipeline] detector: unknown detector '{token}'"))
                })?
            }
        };
        let patch_size = cfg.usize_or("pipeline", "patch_size", DEFAULT_PATCH_SIZE)?;
        if patch_size < 5 {
            return Err(Error::config(format!(
                "[pipeline] patch_size: {patch_size} is below the minimum of 5"
            )));
        }
        let power_beta = cfg.f32_or("pipeline", "power_beta", 0.5)?;
        if !(power_beta > 0.0 && power_beta <= 1.0) {
            return Err(Error::config(format!(
                "[pipeline] power_beta: {power_beta} is outside (0, 1]"
            )));
        }
        Ok(PipelineConfig {
            detector,
            patch_size,
            norm_filter: cfg.f32_or(
                "pipeline",
                "norm_filter",
                crate::descriptor::NORM_FILTER_THRESHOLD,
            )?,
            pca: cfg.bool_or("pipeline", "pca", false)?,
            power_beta,
            downsample_area: cfg.usize_or(
                "pipeline",
                "downsample_area",
                DEFAULT_DOWNSAMPLE_AREA,
            )?,
        })
    }
}
