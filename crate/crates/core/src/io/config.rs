//! Run configuration files (TOML). Every key is optional; command-line
//! flags fill or override whatever the file leaves out.

use serde::{Deserialize, Serialize};

use super::spec::{format_power_denominator, parse_grid, parse_power_denominator, parse_window};
use super::ParseError;
use crate::quantum::Scheme;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub h2: Option<f64>,
    #[serde(rename = "Th", skip_serializing_if = "Option::is_none")]
    pub t_hot: Option<f64>,
    #[serde(rename = "Tc", skip_serializing_if = "Option::is_none")]
    pub t_cold: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub substeps_min: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<Scheme>,
    /// Same syntax as `--power-denominator`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub power_denominator: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    /// `tau2` or `Tc`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub axis: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fit_window: Option<String>,
    #[serde(rename = "Tc_grid", skip_serializing_if = "Option::is_none")]
    pub tc_grid: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau2_grid: Option<String>,
}

impl FileConfig {
    /// Fields from `other` win where present.
    pub fn merged(&self, other: &FileConfig) -> FileConfig {
        macro_rules! pick {
            ($($f:ident),*) => { FileConfig { $($f: other.$f.clone().or_else(|| self.$f.clone()),)* } };
        }
        pick!(
            l,
            h1,
            h2,
            t_hot,
            t_cold,
            tau1,
            tau2,
            dt_max,
            substeps_min,
            scheme,
            power_denominator,
            epsilon,
            axis,
            grid,
            fit_window,
            tc_grid,
            tau2_grid
        )
    }

    /// Checks the embedded specification strings without resolving anything.
    pub fn check_syntax(&self) -> Result<(), ParseError> {
        if let Some(p) = &self.power_denominator {
            parse_power_denominator(p)?;
        }
        for g in [&self.grid, &self.tc_grid, &self.tau2_grid].into_iter().flatten() {
            parse_grid(g)?;
        }
        if let Some(w) = &self.fit_window {
            parse_window(w)?;
        }
        if let Some(a) = &self.axis {
            if !matches!(a.as_str(), "tau2" | "Tc") {
                return Err(ParseError::new("config", format!("unknown axis {a:?}")));
            }
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).unwrap_or_default()
    }
}

pub fn normalize_power_denominator(s: &str) -> Result<String, ParseError> {
    parse_power_denominator(s).map(|p| format_power_denominator(&p))
}

/// Parses a configuration file, rejecting unknown keys and malformed
/// grid, window or denominator strings.
pub fn parse_config(text: &str) -> Result<FileConfig, ParseError> {
    let cfg: FileConfig = toml::from_str(text).map_err(|e| ParseError::new("config", e.message().to_string()))?;
    cfg.check_syntax()?;
    Ok(cfg)
}
