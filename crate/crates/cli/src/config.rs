//! Run configuration: a flat key=value text file plus flag overrides.

use hodgefem::mesh::Domain;
use hodgefem::report::ReportFormat;
use hodgefem::{Error, Result};
use std::path::PathBuf;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Timing {
    /// Report zero seconds; output is byte-reproducible.
    None,
    /// Report wall-clock seconds.
    Wall,
}

impl FromStr for Timing {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Timing::None),
            "wall" => Ok(Timing::Wall),
            other => Err(Error::Config(format!("unknown timing mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub domain: Option<Domain>,
    pub levels: (usize, usize),
    pub quad: usize,
    pub tol: Option<f64>,
    pub out: Option<PathBuf>,
    pub format: ReportFormat,
    pub timing: Timing,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            domain: None,
            levels: (1, 2),
            quad: 6,
            tol: None,
            out: None,
            format: ReportFormat::Csv,
            timing: Timing::None,
        }
    }
}

pub fn parse_levels(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s
        .split_once("..")
        .ok_or_else(|| Error::Config(format!("levels must be `A..B`, got `{s}`")))?;
    let a: usize = a
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad level `{a}`")))?;
    let b: usize = b
        .trim()
        .parse()
        .map_err(|_| Error::Config(format!("bad level `{b}`")))?;
    if a == 0 || b < a {
        return Err(Error::Config(format!("invalid level range {a}..{b}")));
    }
    Ok((a, b))
}

impl RunConfig {
    /// Read `key=value` lines; `#` starts a comment.
    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let mut config = RunConfig::default();
        let text = std::fs::read_to_string(path)?;
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::Config(format!("line {}: expected key=value", lineno + 1))
            })?;
            let (key, value) = (key.trim(), value.trim());
            match key {
                "domain" => config.domain = Some(value.parse()?),
                "levels" => config.levels = parse_levels(value)?,
                "quad" => {
                    config.quad = value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad quad `{value}`")))?
                }
                "tol" => {
                    let t: f64 = value
                        .parse()
                        .map_err(|_| Error::Config(format!("bad tol `{value}`")))?;
                    if t <= 0.0 {
                        return Err(Error::Config("tol must be positive".into()));
                    }
                    config.tol = Some(t);
                }
                "out" => config.out = Some(PathBuf::from(value)),
                "format" => config.format = value.parse()?,
                "timing" => config.timing = value.parse()?,
                other => return Err(Error::Config(format!("unknown config key `{other}`"))),
            }
        }
        Ok(config)
    }

    pub fn validate_tolerance(&self) -> Result<()> {
        if let Some(t) = self.tol {
            if t <= 0.0 {
                return Err(Error::Config("tol must be positive".into()));
            }
        }
        Ok(())
    }
}
