//! Run configuration: dotted-key TOML with command-line overrides.

use std::path::{Path, PathBuf};

use nltva_core::model::SystemParams;
use nltva_core::regions::{dimensionless_params, SweepParameter};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AbsorberKind {
    #[default]
    Nltva,
    Ltva,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TuningMode {
    /// Tuning rules evaluated in full precision.
    #[default]
    Exact,
    /// Absorber values rounded to four decimals.
    Rounded,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SystemConfig {
    pub m1: f64,
    pub c1: f64,
    pub k1: f64,
    pub knl1: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub absorber: AbsorberKind,
    pub tuning: TuningMode,
    /// Multiplier on the tuned absorber damping.
    pub p_mu: f64,
    /// Multiplier on the tuned absorber cubic stiffness.
    pub p_beta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k2: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub knl2: Option<f64>,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            m1: 1.0,
            c1: 0.002,
            k1: 1.0,
            knl1: 1.0,
            epsilon: None,
            absorber: AbsorberKind::Nltva,
            tuning: TuningMode::Exact,
            p_mu: 1.0,
            p_beta: 1.0,
            m2: None,
            c2: None,
            k2: None,
            knl2: None,
        }
    }
}

pub fn round_decimals(v: f64, decimals: usize) -> f64 {
    if !v.is_finite() {
        return v;
    }
    format!("{v:.decimals$}").parse().unwrap_or(v)
}

impl SystemConfig {
    pub fn epsilon(&self) -> Result<f64, CliError> {
        self.epsilon
            .ok_or_else(|| CliError::Usage("system.epsilon is required".into()))
    }

    /// Dimensional parameters of the primary with its absorber.
    pub fn params(&self) -> Result<SystemParams, CliError> {
        let explicit = [self.m2, self.c2, self.k2, self.knl2];
        let p = if explicit.iter().all(Option::is_some) {
            SystemParams {
                m1: self.m1,
                c1: self.c1,
                k1: self.k1,
                knl1: self.knl1,
                m2: self.m2.unwrap_or_default(),
                c2: self.c2.unwrap_or_default(),
                k2: self.k2.unwrap_or_default(),
                knl2: self.knl2.unwrap_or_default(),
            }
        } else {
            if explicit.iter().any(Option::is_some) {
                return Err(CliError::Usage(
                    "system.m2, c2, k2 and knl2 must be given together".into(),
                ));
            }
            let eps = self.epsilon()?;
            let mut p = SystemParams::nltva(self.m1, self.c1, self.k1, self.knl1, eps)?;
            if self.tuning == TuningMode::Rounded {
                p.k2 = round_decimals(p.k2, 4);
                p.c2 = round_decimals(p.c2, 4);
                p.knl2 = round_decimals(p.knl2, 4);
            }
            p.c2 *= self.p_mu;
            p.knl2 *= self.p_beta;
            if self.absorber == AbsorberKind::Ltva {
                p.knl2 = 0.0;
            }
            p
        };
        p.validate()?;
        Ok(p)
    }

    /// Unit realization with the same `ε`, `p_mu`, `p_beta` and primary damping ratio.
    pub fn unit_params(&self) -> Result<SystemParams, CliError> {
        let mu1 = self.c1 / (2.0 * (self.k1 * self.m1).sqrt());
        Ok(dimensionless_params(
            self.epsilon()?,
            self.p_mu,
            self.p_beta,
            mu1,
        )?)
    }

    fn validate(&self) -> Result<(), CliError> {
        for (name, v) in [("m1", self.m1), ("k1", self.k1)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!("system.{name} must be positive")));
            }
        }
        for (name, v) in [
            ("c1", self.c1),
            ("knl1", self.knl1),
            ("p_beta", self.p_beta),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CliError::Usage(format!(
                    "system.{name} must be non-negative"
                )));
            }
        }
        if !(self.p_mu > 0.0 && self.p_mu.is_finite()) {
            return Err(CliError::Usage("system.p_mu must be positive".into()));
        }
        if let Some(e) = self.epsilon {
            if !(e > 0.0 && e.is_finite()) {
                return Err(CliError::Usage("system.epsilon must be positive".into()));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct TuneSettings {}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct FreqResponseSettings {
    #[serde(rename = "F")]
    pub forcing: f64,
    pub omega_min: f64,
    pub omega_max: f64,
    pub harmonics: usize,
    pub samples: usize,
    pub tolerance: f64,
    /// Search for a detached resonance curve.
    pub drc: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drc_omega_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drc_omega_max: Option<f64>,
    /// Number of frequencies in the quasiperiodic sweep, 0 to skip it.
    pub qp_points: usize,
    pub qp_omega_min: f64,
    pub qp_omega_max: f64,
}

impl Default for FreqResponseSettings {
    fn default() -> Self {
        Self {
            forcing: 0.11,
            omega_min: 0.5,
            omega_max: 2.6,
            harmonics: 5,
            samples: 128,
            tolerance: 1e-10,
            drc: true,
            drc_omega_min: None,
            drc_omega_max: None,
            qp_points: 0,
            qp_omega_min: 1.1,
            qp_omega_max: 1.4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TrackSettings {
    #[serde(rename = "F_min")]
    pub forcing_min: f64,
    #[serde(rename = "F_max")]
    pub forcing_max: f64,
    /// Forcing amplitudes scanned in order for seed bifurcations.
    pub seed_forcing: Vec<f64>,
    pub omega_min: f64,
    pub omega_max: f64,
    pub harmonics: usize,
    pub samples: usize,
    pub ns: bool,
}

impl Default for TrackSettings {
    fn default() -> Self {
        Self {
            forcing_min: 0.01,
            forcing_max: 0.3,
            seed_forcing: vec![0.1, 0.12, 0.15, 0.18, 0.2, 0.25],
            omega_min: 0.5,
            omega_max: 1.8,
            harmonics: 5,
            samples: 128,
            ns: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BasinSettings {
    #[serde(rename = "F")]
    pub forcing: f64,
    /// Frequency of the raster.
    pub omega: f64,
    pub resolution: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_min: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    /// Frequencies of the basin-ratio sweep.
    pub ratio_omegas: Vec<f64>,
    pub ratio_resolution: usize,
    /// Random initial conditions drawn with the run seed, 0 to skip.
    pub samples: usize,
    pub tolerance: f64,
    pub branch_omega_min: f64,
    pub branch_omega_max: f64,
}

impl Default for BasinSettings {
    fn default() -> Self {
        Self {
            forcing: 0.15,
            omega: 1.9,
            resolution: 201,
            x_min: None,
            x_max: None,
            v_min: None,
            v_max: None,
            ratio_omegas: Vec::new(),
            ratio_resolution: 201,
            samples: 0,
            tolerance: 1e-8,
            branch_omega_min: 0.5,
            branch_omega_max: 2.6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegionSettings {
    pub parameter: SweepParameter,
    pub values: Vec<f64>,
    pub alpha3_min: f64,
    pub alpha3_max: f64,
    pub qp: bool,
    /// Forcing amplitudes classified for the configured system.
    pub classify_forcing: Vec<f64>,
}

impl Default for RegionSettings {
    fn default() -> Self {
        Self {
            parameter: SweepParameter::Epsilon,
            values: vec![0.01, 0.02, 0.03, 0.04, 0.05],
            alpha3_min: 1e-4,
            alpha3_max: 0.1,
            qp: true,
            classify_forcing: vec![0.09, 0.15, 0.19],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Analysis {
    Tune(TuneSettings),
    FreqResponse(FreqResponseSettings),
    Track(TrackSettings),
    Basins(BasinSettings),
    Regions(RegionSettings),
}

impl Analysis {
    pub fn key(&self) -> &'static str {
        match self {
            Analysis::Tune(_) => "tune",
            Analysis::FreqResponse(_) => "freq_response",
            Analysis::Track(_) => "track",
            Analysis::Basins(_) => "basins",
            Analysis::Regions(_) => "regions",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSettings {
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads, 0 for the runtime default.
    pub threads: usize,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            out: PathBuf::from("out"),
            seed: 0,
            threads: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub run: RunSettings,
    #[serde(default)]
    pub system: SystemConfig,
    pub analysis: Analysis,
}

/// Overrides applied on top of the file, in order.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    /// `key=value` pairs with dotted keys.
    pub set: Vec<String>,
}

fn parse_value(raw: &str) -> toml::Value {
    let doc = format!("v = {raw}");
    match doc.parse::<toml::Table>() {
        Ok(mut t) => t
            .remove("v")
            .unwrap_or_else(|| toml::Value::String(raw.to_string())),
        Err(_) => toml::Value::String(raw.to_string()),
    }
}

fn insert_dotted(table: &mut toml::Table, key: &str, value: toml::Value) -> Result<(), CliError> {
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(CliError::Usage(format!("malformed key '{key}'")));
    }
    let mut cur = table;
    for part in &parts[..parts.len() - 1] {
        let entry = cur
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| {
            CliError::Usage(format!("key '{key}' descends into a non-table value"))
        })?;
    }
    cur.insert(parts[parts.len() - 1].to_string(), value);
    Ok(())
}

impl RunConfig {
    /// Parses TOML text for analysis `kind`, applying `overrides` before validation.
    pub fn from_toml(text: &str, kind: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let mut table: toml::Table = text
            .parse()
            .map_err(|e| CliError::Usage(format!("config is not valid TOML: {e}")))?;
        for item in &overrides.set {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| CliError::Usage(format!("override '{item}' is not key=value")))?;
            insert_dotted(&mut table, k.trim(), parse_value(v.trim()))?;
        }
        if let Some(out) = &overrides.out {
            insert_dotted(
                &mut table,
                "run.out",
                toml::Value::String(out.display().to_string()),
            )?;
        }
        if let Some(seed) = overrides.seed {
            let seed = i64::try_from(seed)
                .map_err(|_| CliError::Usage("seed must fit in 63 bits".into()))?;
            insert_dotted(&mut table, "run.seed", toml::Value::Integer(seed))?;
        }
        if let Some(threads) = overrides.threads {
            insert_dotted(
                &mut table,
                "run.threads",
                toml::Value::Integer(threads as i64),
            )?;
        }
        let analysis = table
            .entry("analysis".to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| CliError::Usage("'analysis' must be a table".into()))?;
        if let Some(other) = analysis.keys().find(|k| k.as_str() != kind) {
            return Err(CliError::Usage(format!(
                "config holds analysis '{other}' but the command runs '{kind}'"
            )));
        }
        analysis
            .entry(kind.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        let config: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e| CliError::Usage(format!("invalid config: {e}")))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: Option<&Path>, kind: &str, overrides: &Overrides) -> Result<Self, CliError> {
        let text = match path {
            Some(p) => std::fs::read_to_string(p)
                .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?,
            None => String::new(),
        };
        Self::from_toml(&text, kind, overrides)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Internal(format!("config echo: {e}")))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        self.system.validate()?;
        let range = |name: &str, lo: f64, hi: f64| {
            if lo > 0.0 && hi > lo && hi.is_finite() {
                Ok(())
            } else {
                Err(CliError::Usage(format!(
                    "{name} range [{lo}, {hi}] is empty or non-positive"
                )))
            }
        };
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Usage(format!("{name} must be positive")))
            }
        };
        match &self.analysis {
            Analysis::Tune(_) => {
                self.system.epsilon()?;
            }
            Analysis::FreqResponse(s) => {
                positive("F", s.forcing)?;
                range("omega", s.omega_min, s.omega_max)?;
                if s.qp_points > 0 {
                    range("qp_omega", s.qp_omega_min, s.qp_omega_max)?;
                }
                if let (Some(lo), Some(hi)) = (s.drc_omega_min, s.drc_omega_max) {
                    range("drc_omega", lo, hi)?;
                }
                self.system.params()?;
            }
            Analysis::Track(s) => {
                range("F", s.forcing_min, s.forcing_max)?;
                range("omega", s.omega_min, s.omega_max)?;
                if s.seed_forcing.is_empty() || s.seed_forcing.iter().any(|&f| !(f > 0.0)) {
                    return Err(CliError::Usage(
                        "seed_forcing must list positive amplitudes".into(),
                    ));
                }
                self.system.params()?;
            }
            Analysis::Basins(s) => {
                positive("F", s.forcing)?;
                positive("omega", s.omega)?;
                range("branch_omega", s.branch_omega_min, s.branch_omega_max)?;
                if s.resolution == 0 || s.ratio_resolution == 0 {
                    return Err(CliError::Usage("grid resolution must be positive".into()));
                }
                if s.ratio_omegas.iter().any(|&w| !(w > 0.0)) {
                    return Err(CliError::Usage("ratio_omegas must be positive".into()));
                }
                self.system.params()?;
            }
            Analysis::Regions(s) => {
                range("alpha3", s.alpha3_min, s.alpha3_max)?;
                if s.values.is_empty() || s.values.iter().any(|&v| !(v > 0.0)) {
                    return Err(CliError::Usage(
                        "sweep values must be a non-empty list of positive numbers".into(),
                    ));
                }
                self.system.unit_params()?;
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dotted_keys_and_overrides() {
        let text = "system.epsilon = 0.05\nanalysis.freq_response.F = 0.15\n";
        let ov = Overrides {
            set: vec!["analysis.freq_response.omega_max=2.4".into()],
            ..Default::default()
        };
        let c = RunConfig::from_toml(text, "freq_response", &ov).unwrap();
        match c.analysis {
            Analysis::FreqResponse(s) => {
                assert_eq!(s.forcing, 0.15);
                assert_eq!(s.omega_max, 2.4);
            }
            _ => panic!("wrong analysis"),
        }
    }

    #[test]
    fn echo_round_trips() {
        let text =
            "system.epsilon = 0.05\nsystem.p_mu = 1.1\nanalysis.basins.ratio_omegas = [1.8, 2.0]\n";
        let ov = Overrides {
            seed: Some(7),
            ..Default::default()
        };
        let c = RunConfig::from_toml(text, "basins", &ov).unwrap();
        let back =
            RunConfig::from_toml(&c.to_toml().unwrap(), "basins", &Overrides::default()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn mismatched_analysis_is_usage_error() {
        let err = RunConfig::from_toml(
            "analysis.track.F_min = 0.05\n",
            "basins",
            &Overrides::default(),
        );
        assert!(matches!(err, Err(CliError::Usage(_))));
    }

    #[test]
    fn unknown_key_is_usage_error() {
        let err = RunConfig::from_toml(
            "system.epsilon = 0.05\nsystem.k3 = 1\n",
            "tune",
            &Overrides::default(),
        );
        assert!(matches!(err, Err(CliError::Usage(_))));
    }

    #[test]
    fn rounded_tuning_matches_rounded_reference() {
        let sys = SystemConfig {
            epsilon: Some(0.05),
            tuning: TuningMode::Rounded,
            ..SystemConfig::default()
        };
        assert_eq!(sys.params().unwrap(), SystemParams::rounded_reference());
        assert_eq!(round_decimals(0.0, 4), 0.0);
    }
}
