use serde::{Deserialize, Serialize};
use wnv_core::analysis::ClassifyConfig;
use wnv_core::front::{InitialData, SolverConfig};
use wnv_core::{EpidemicParams, ModelMode};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ProfileFamily {
    /// `amplitude · cos(xπ/(2h0))`.
    #[default]
    Cosine,
    /// `amplitude · exp(1 - 1/(1 - (x/h0)²))`, smooth and compactly supported.
    Bump,
    /// Values on a uniform grid over `[-h0, h0]`, linearly interpolated.
    Tabulated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub h0: f64,
    #[serde(default)]
    pub profile: ProfileFamily,
    #[serde(default = "default_amplitude")]
    pub amplitude_v: f64,
    #[serde(default = "default_amplitude")]
    pub amplitude_h: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values_v: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub values_h: Vec<f64>,
}

fn default_amplitude() -> f64 {
    0.1
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Thresholds,
    Classify,
    Speed,
    UpperAudit,
    LowerAudit,
    Wavespeed,
}

fn default_analyses() -> Vec<Analysis> {
    vec![Analysis::Thresholds, Analysis::Classify, Analysis::Speed, Analysis::Wavespeed]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SpeedOptions {
    /// Trailing fraction of the horizon used for the front-speed fit.
    pub fit_fraction: f64,
}

impl Default for SpeedOptions {
    fn default() -> Self {
        Self { fit_fraction: 0.25 }
    }
}

/// One simulation with its requested analyses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub params: EpidemicParams,
    pub init: InitSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub classify: ClassifyConfig,
    #[serde(default)]
    pub speed: SpeedOptions,
    #[serde(default = "default_analyses")]
    pub analyses: Vec<Analysis>,
}

impl Scenario {
    pub fn wants(&self, a: Analysis) -> bool {
        self.analyses.contains(&a)
    }

    /// Samples the initial profiles on the solver grid.
    pub fn initial_data(&self) -> Result<InitialData, CliError> {
        let i = &self.init;
        let n = self.solver.n_xi;
        let h0 = i.h0;
        if !(h0.is_finite() && h0 > 0.0) {
            return Err(CliError::invalid("init.h0", "must be positive"));
        }
        Ok(match i.profile {
            ProfileFamily::Cosine => InitialData::cosine(h0, n, i.amplitude_v, i.amplitude_h),
            ProfileFamily::Bump => {
                let bump = |x: f64| {
                    let r = x / h0;
                    if r.abs() >= 1.0 {
                        0.0
                    } else {
                        (1.0 - 1.0 / (1.0 - r * r)).exp()
                    }
                };
                InitialData::from_profiles(h0, n, |x| i.amplitude_v * bump(x), |x| i.amplitude_h * bump(x))
            }
            ProfileFamily::Tabulated => {
                for (name, v) in [("init.values_v", &i.values_v), ("init.values_h", &i.values_h)] {
                    if v.len() < 2 {
                        return Err(CliError::invalid(name, "needs at least two values"));
                    }
                }
                InitialData::from_profiles(h0, n, |x| interpolate(&i.values_v, h0, x), |x| interpolate(&i.values_h, h0, x))
            }
        })
    }

    /// Checks every module rule without running anything.
    pub fn validate(&self) -> Result<(), CliError> {
        self.params.validate(ModelMode::Simplified)?;
        self.solver.validate()?;
        let c = &self.classify;
        for (name, v) in [
            ("classify.vanish_sup", c.vanish_sup),
            ("classify.vanish_growth", c.vanish_growth),
            ("classify.window_fraction", c.window_fraction),
            ("classify.spread_width", c.spread_width),
            ("classify.endemic_tolerance", c.endemic_tolerance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(CliError::invalid(name, "must be positive"));
            }
        }
        if !(self.speed.fit_fraction > 0.0 && self.speed.fit_fraction <= 1.0) {
            return Err(CliError::invalid("speed.fit_fraction", "must lie in (0, 1]"));
        }
        if self.init.profile != ProfileFamily::Tabulated && !(self.init.values_v.is_empty() && self.init.values_h.is_empty()) {
            return Err(CliError::invalid("init.values_v", "only used with profile = \"tabulated\""));
        }
        self.initial_data()?.validate(&self.params, self.solver.n_xi)?;
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("scenario serializes")
    }
}

/// Linear interpolation of `values` laid out uniformly on `[-h0, h0]`.
fn interpolate(values: &[f64], h0: f64, x: f64) -> f64 {
    let n = values.len();
    let s = ((x + h0) / (2.0 * h0) * (n - 1) as f64).clamp(0.0, (n - 1) as f64);
    let i = (s.floor() as usize).min(n - 2);
    let w = s - i as f64;
    values[i] * (1.0 - w) + values[i + 1] * w
}

/// 1-based line and column of a byte offset.
pub(crate) fn line_column(text: &str, offset: usize) -> (usize, usize) {
    let before = &text[..offset.min(text.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rsplit('\n').next().map_or(0, |l| l.chars().count()) + 1;
    (line, column)
}

pub(crate) fn parse_toml<T: serde::de::DeserializeOwned>(text: &str) -> Result<T, CliError> {
    toml::from_str(text).map_err(|e| {
        let (line, column) = e.span().map_or((0, 0), |s| line_column(text, s.start));
        CliError::Parse {
            line,
            column,
            message: e.message().to_string(),
        }
    })
}

/// Parses and validates a scenario.
pub fn parse_scenario(text: &str) -> Result<Scenario, CliError> {
    let scenario: Scenario = parse_toml(text)?;
    scenario.validate()?;
    Ok(scenario)
}
