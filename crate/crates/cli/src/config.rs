//! `key = value` run configuration grouped under `[case]`, `[limiter]`,
//! `[solver]` and `[output]`.

use std::path::PathBuf;
use std::str::FromStr;

use cbpdg::{LimiterMode, CASE_NAMES};

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AuditCadence {
    EveryStep,
    Final,
}

impl FromStr for AuditCadence {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "every-step" | "every_step" => Ok(AuditCadence::EveryStep),
            "final" => Ok(AuditCadence::Final),
            _ => Err("expected `every-step` or `final`".into()),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub case: Option<String>,
    /// `None` takes the case default.
    pub order: Option<usize>,
    pub nelems: Option<usize>,
    /// Element counts for `convergence`.
    pub ns: Vec<usize>,
    pub mode: LimiterMode,
    pub n_iters: usize,
    pub stabilizer: Option<bool>,
    pub cfl: Option<f64>,
    pub t_final: Option<f64>,
    pub out: PathBuf,
    pub oversample: usize,
    pub audit: AuditCadence,
    /// Write a 2D field dump every this many steps; 0 writes only the first
    /// and last states.
    pub field_every: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: None,
            order: None,
            nelems: None,
            ns: vec![],
            mode: LimiterMode::Continuous,
            n_iters: 3,
            stabilizer: None,
            cfl: None,
            t_final: None,
            out: PathBuf::from("out"),
            oversample: 100,
            audit: AuditCadence::EveryStep,
            field_every: 0,
        }
    }
}

fn bad(section: &str, key: &str, value: &str, expected: &str) -> CliError {
    CliError::Config(format!("[{section}] {key} = {value}: expected {expected}"))
}

fn int(section: &str, key: &str, value: &str) -> Result<usize, CliError> {
    let v: i64 = value.parse().map_err(|_| bad(section, key, value, "an integer"))?;
    if v < 0 {
        return Err(CliError::Config(format!("[{section}] {key} must be >= 0, got {v}")));
    }
    Ok(v as usize)
}

fn float(section: &str, key: &str, value: &str) -> Result<f64, CliError> {
    value.parse().map_err(|_| bad(section, key, value, "a number"))
}

fn boolean(section: &str, key: &str, value: &str) -> Result<bool, CliError> {
    match value {
        "true" | "on" | "yes" => Ok(true),
        "false" | "off" | "no" => Ok(false),
        _ => Err(bad(section, key, value, "true or false")),
    }
}

/// Comma- or space-separated element counts.
pub fn parse_ns(value: &str) -> Result<Vec<usize>, CliError> {
    value
        .split([',', ' '])
        .filter(|s| !s.is_empty())
        .map(|s| int("case", "ns", s))
        .collect()
}

/// Parse configuration text; later duplicate keys override earlier ones.
pub fn parse_config(text: &str) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::default();
    let mut section: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| CliError::Config(format!("line {}: malformed section header `{line}`", lineno + 1)))?
                .trim();
            if !["case", "limiter", "solver", "output"].contains(&name) {
                return Err(CliError::Config(format!("line {}: unknown section [{name}]", lineno + 1)));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected `key = value`, got `{line}`", lineno + 1)))?;
        let (key, value) = (key.trim(), value.trim());
        let sec = section
            .as_deref()
            .ok_or_else(|| CliError::Config(format!("line {}: key `{key}` appears before any section", lineno + 1)))?;
        match (sec, key) {
            ("case", "name") => cfg.case = Some(value.to_string()),
            ("case", "order") => cfg.order = Some(int(sec, key, value)?),
            ("case", "nelems") => cfg.nelems = Some(int(sec, key, value)?),
            ("case", "ns") => cfg.ns = parse_ns(value)?,
            ("limiter", "mode") => cfg.mode = value.parse().map_err(|_| bad(sec, key, value, "none, discrete or continuous"))?,
            ("limiter", "n_iters") => cfg.n_iters = int(sec, key, value)?,
            ("solver", "cfl") => cfg.cfl = Some(float(sec, key, value)?),
            ("solver", "t_final") => cfg.t_final = Some(float(sec, key, value)?),
            ("solver", "stabilizer") => cfg.stabilizer = Some(boolean(sec, key, value)?),
            ("output", "dir") => cfg.out = PathBuf::from(value),
            ("output", "oversample") => cfg.oversample = int(sec, key, value)?,
            ("output", "audit") => cfg.audit = value.parse().map_err(|e: String| bad(sec, key, value, &e[9..]))?,
            ("output", "field_every") => cfg.field_every = int(sec, key, value)?,
            _ => return Err(CliError::Config(format!("unknown key `{key}` in section [{sec}]"))),
        }
    }
    Ok(cfg)
}

impl RunConfig {
    /// Checks everything that can be checked before any compute.
    pub fn validate(&self) -> Result<(), CliError> {
        let case = self.case.as_deref().ok_or_else(|| CliError::Config("case missing".into()))?;
        if !CASE_NAMES.contains(&case) {
            return Err(CliError::Config(format!("unknown case `{case}` (known: {})", CASE_NAMES.join(", "))));
        }
        if let Some(p) = self.order {
            if !(1..=cbpdg::basis::MAX_ORDER).contains(&p) {
                return Err(CliError::Config(format!("order must be in 1..={}, got {p}", cbpdg::basis::MAX_ORDER)));
            }
        }
        if let Some(n) = self.nelems {
            if n < 2 {
                return Err(CliError::Config(format!("nelems must be >= 2, got {n}")));
            }
        }
        if let Some(n) = self.ns.iter().find(|&&n| n < 2) {
            return Err(CliError::Config(format!("ns entries must be >= 2, got {n}")));
        }
        if let Some(c) = self.cfl {
            if !(c > 0.0 && c.is_finite()) {
                return Err(CliError::Config(format!("cfl must be > 0, got {c}")));
            }
        }
        if let Some(t) = self.t_final {
            if !(t > 0.0 && t.is_finite()) {
                return Err(CliError::Config(format!("t_final must be > 0, got {t}")));
            }
        }
        if self.oversample < 2 {
            return Err(CliError::Config(format!("oversample must be >= 2, got {}", self.oversample)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limiter_section() {
        let c = parse_config("[limiter]\nmode = continuous\nn_iters = 3").unwrap();
        assert_eq!(c.mode, LimiterMode::Continuous);
        assert_eq!(c.n_iters, 3);
    }

    #[test]
    fn empty_file_needs_a_case() {
        let c = parse_config("").unwrap();
        assert_eq!(c, RunConfig::default());
        let err = c.validate().unwrap_err();
        assert!(err.to_string().contains("case missing"), "{err}");
    }

    #[test]
    fn negative_iterations_rejected() {
        let err = parse_config("[limiter]\nn_iters = -1").unwrap_err();
        assert!(err.to_string().contains("n_iters"), "{err}");
    }

    #[test]
    fn comments_and_overrides() {
        let text = "# run\n[case]\nname = leblanc # tube\norder = 2\norder = 3\n\n[output]\ndir = /tmp/x\naudit = final\n";
        let c = parse_config(text).unwrap();
        assert_eq!(c.case.as_deref(), Some("leblanc"));
        assert_eq!(c.order, Some(3));
        assert_eq!(c.out, PathBuf::from("/tmp/x"));
        assert_eq!(c.audit, AuditCadence::Final);
        c.validate().unwrap();
    }

    #[test]
    fn unknown_key_names_key_and_section() {
        let err = parse_config("[solver]\ncfl = 0.3\nflux = hll").unwrap_err().to_string();
        assert!(err.contains("flux") && err.contains("[solver]"), "{err}");
    }

    #[test]
    fn type_errors_name_the_expected_type() {
        let err = parse_config("[solver]\ncfl = fast").unwrap_err().to_string();
        assert!(err.contains("expected a number"), "{err}");
        let err = parse_config("[solver]\nstabilizer = maybe").unwrap_err().to_string();
        assert!(err.contains("true or false"), "{err}");
        let err = parse_config("[output]\naudit = sometimes").unwrap_err().to_string();
        assert!(err.contains("every-step"), "{err}");
    }

    #[test]
    fn structural_errors() {
        assert!(parse_config("name = sedov").is_err());
        assert!(parse_config("[mesh]\nn = 3").is_err());
        assert!(parse_config("[case\nname = sedov").is_err());
        assert!(parse_config("[case]\nname sedov").is_err());
    }

    #[test]
    fn element_lists() {
        assert_eq!(parse_ns("20, 40,60 80").unwrap(), vec![20, 40, 60, 80]);
        let c = parse_config("[case]\nname = euler-pulse\nns = 10, 20").unwrap();
        assert_eq!(c.ns, vec![10, 20]);
    }

    #[test]
    fn validation() {
        let mut c = RunConfig {
            case: Some("nope".into()),
            ..Default::default()
        };
        assert!(c.validate().unwrap_err().to_string().contains("advect-waveforms"));
        c.case = Some("sedov".into());
        c.cfl = Some(-1.0);
        assert!(c.validate().is_err());
        c.cfl = None;
        c.order = Some(0);
        assert!(c.validate().is_err());
    }
}
