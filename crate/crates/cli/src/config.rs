//! Config files (TOML) and the flag forms that override them.

use std::f64::consts::PI;
use std::path::Path;

use qsp_pulse::pipeline::{PipelineConfig, PulseSpec};
use qsp_pulse::reconstruct::Method;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::Failure;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Failure::Config(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
}

pub fn load_or_default<T: DeserializeOwned + Default>(path: Option<&Path>) -> Result<T, Failure> {
    path.map_or_else(|| Ok(T::default()), load)
}

pub fn load_pipeline(path: Option<&Path>, seed: Option<u64>) -> Result<PipelineConfig, Failure> {
    let path = path.ok_or_else(|| Failure::Config("this command needs --config <file.toml>".into()))?;
    let mut cfg: PipelineConfig = load(path)?;
    if let Some(s) = seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// `sin3pi`, `biharmonic`, `linear[:slope]`, `constant:value` or
/// `sinusoid:amplitude:f1,f2,...`.
pub fn parse_pulse(s: &str) -> Result<PulseSpec, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let num = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("bad number {t:?} in pulse {s:?}: {e}"));
    match parts.as_slice() {
        ["sin3pi"] => Ok(PulseSpec::Sin3pi),
        ["biharmonic"] => Ok(PulseSpec::Biharmonic),
        ["linear"] => Ok(PulseSpec::Linear { slope: 1.0 }),
        ["linear", a] => Ok(PulseSpec::Linear { slope: num(a)? }),
        ["constant", v] => Ok(PulseSpec::Constant { value: num(v)? }),
        ["sinusoid", a, fs] => Ok(PulseSpec::Sinusoid {
            amplitude: num(a)?,
            frequencies: fs.split(',').map(num).collect::<Result<_, _>>()?,
        }),
        _ => Err(format!(
            "unknown pulse {s:?}; expected sin3pi, biharmonic, linear[:slope], constant:value or sinusoid:amp:f1,f2"
        )),
    }
}

pub fn parse_method(s: &str) -> Result<Method, String> {
    serde_json::from_value(serde_json::Value::String(s.into()))
        .map_err(|_| format!("unknown method {s:?}; expected direct-midpoint, refined-midpoint or differentiating"))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DigitizeConfig {
    pub pulse: PulseSpec,
    pub duration: f64,
    pub segments: usize,
    pub omega: f64,
}

impl Default for DigitizeConfig {
    fn default() -> Self {
        DigitizeConfig { pulse: PulseSpec::Sin3pi, duration: 1.0, segments: 16, omega: 8.0 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FisherConfig {
    pub segments: usize,
    pub shots: f64,
    /// Defaults to L + 1.
    pub samples: Option<usize>,
    pub nu: f64,
    /// Phases at which to evaluate; constant phases when absent.
    pub phases: Option<Vec<f64>>,
}

impl Default for FisherConfig {
    fn default() -> Self {
        FisherConfig { segments: 16, shots: 1e4, samples: None, nu: PI / 2.0, phases: None }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BiasSweepConfig {
    pub pulse: PulseSpec,
    pub duration: f64,
    pub degrees: Vec<usize>,
    pub method: Method,
    pub apply_re: bool,
}

impl Default for BiasSweepConfig {
    fn default() -> Self {
        BiasSweepConfig {
            pulse: PulseSpec::Sin3pi,
            duration: 1.0,
            degrees: vec![8, 16, 32, 64],
            method: Method::DirectMidpoint,
            apply_re: true,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VarianceSweepConfig {
    pub pulse: PulseSpec,
    pub duration: f64,
    pub segments: usize,
    /// Absent means infinitely many shots.
    pub shots: Option<u64>,
    pub repetitions: usize,
    pub seed: u64,
}

impl Default for VarianceSweepConfig {
    fn default() -> Self {
        VarianceSweepConfig {
            pulse: PulseSpec::Biharmonic,
            duration: 1.0,
            segments: 40,
            shots: Some(10_000),
            repetitions: 50,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DfiSweepConfig {
    pub degrees: Vec<usize>,
    pub shots: f64,
    /// Samples per degree L; defaults to L + 1.
    pub samples: Option<usize>,
    pub nus: Vec<f64>,
}

impl Default for DfiSweepConfig {
    fn default() -> Self {
        let nus = (1..=40).map(|k| PI * k as f64 / 40.0).collect();
        DfiSweepConfig { degrees: vec![8, 16, 32], shots: 1.0, samples: None, nus }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pulse_names() {
        assert_eq!(parse_pulse("linear:2.5").unwrap(), PulseSpec::Linear { slope: 2.5 });
        assert_eq!(
            parse_pulse("sinusoid:1:3,4").unwrap(),
            PulseSpec::Sinusoid { amplitude: 1.0, frequencies: vec![3.0, 4.0] }
        );
        assert!(parse_pulse("square").is_err());
        assert!(parse_pulse("linear:x").is_err());
    }

    #[test]
    fn method_names() {
        assert_eq!(parse_method("refined-midpoint").unwrap(), Method::RefinedMidpoint);
        assert!(parse_method("spline").is_err());
    }

    #[test]
    fn pipeline_toml() {
        let text = r#"
            segments = 16
            seed = 4
            method = "direct-midpoint"
            [pulse]
            kind = "biharmonic"
            [noise]
            alpha = 0.9
            delta = 0.01
            shots = 10000
            [perturbation]
            eta = 0.5
            width = 0.02
        "#;
        let cfg: PipelineConfig = toml::from_str(text).unwrap();
        assert_eq!(cfg.segments, 16);
        assert_eq!(cfg.noise.shots, Some(10_000));
        assert_eq!(cfg.perturbation.unwrap().segments, 8);
    }
}
