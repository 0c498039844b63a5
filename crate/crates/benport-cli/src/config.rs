//! Run configuration: a TOML file with nested sections, every block
//! optional, merged with command-line flag overrides (flags win). Unknown
//! keys anywhere in the file are rejected.

use std::path::Path;

use anyhow::{bail, Context, Result};
use benport::cohort::{AgeMap, CohortConfig, Noise, Prevalence, ShockMagnitudes};
use benport::model::{LogWage, Preferences, Shock, Technology};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreferencesBlock {
    pub r: f64,
    pub lifespan: f64,
}

impl Default for PreferencesBlock {
    fn default() -> Self {
        Self { r: 1.0, lifespan: 1.0 }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct TechnologyBlock {
    /// Slope of the linear log-wage schedule.
    pub slope: f64,
    pub disutility_scale: f64,
}

impl Default for TechnologyBlock {
    fn default() -> Self {
        Self {
            slope: 1.0 / 0.3,
            disutility_scale: 1.0,
        }
    }
}

/// Shock parameters; which ones matter depends on `kind`.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct ShockBlock {
    pub kind: Option<String>,
    pub kappa: Option<f64>,
    pub x: Option<f64>,
    pub lambda: Option<f64>,
    pub delta: Option<f64>,
    pub d: Option<f64>,
    pub fix_schooling: bool,
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct CohortBlock {
    pub birth_years: (i64, i64),
    pub n_agents: u64,
    pub female_share: f64,
    pub prevalence: Prevalence,
    pub age_map: AgeMap,
    pub noise: Noise,
    pub shocks: ShockMagnitudes,
}

impl Default for CohortBlock {
    fn default() -> Self {
        let base = CohortConfig::default();
        Self {
            birth_years: base.birth_years,
            n_agents: base.n_agents,
            female_share: base.female_share,
            prevalence: base.prevalence,
            age_map: base.age_map,
            noise: base.noise,
            shocks: base.shocks,
        }
    }
}

impl CohortBlock {
    pub fn to_cohort_config(&self, seed: u64) -> CohortConfig {
        CohortConfig {
            birth_years: self.birth_years,
            n_agents: self.n_agents,
            seed,
            prevalence: self.prevalence,
            age_map: self.age_map,
            noise: self.noise,
            shocks: self.shocks,
            female_share: self.female_share,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct EstimateBlock {
    /// Path to the input panel CSV.
    pub panel: Option<String>,
    /// One of `event-study`, `did-immediate`, `did-total`.
    pub kind: String,
    pub treatment: String,
    pub outcome: String,
    pub age_lo: i64,
    pub age_hi: i64,
    pub pre_year: i64,
    pub post_start: i64,
    pub post_end: i64,
}

impl Default for EstimateBlock {
    fn default() -> Self {
        Self {
            panel: None,
            kind: "did-immediate".into(),
            treatment: "injured".into(),
            outcome: "exited_employment".into(),
            age_lo: 50,
            age_hi: 65,
            pre_year: 1938,
            post_start: 1946,
            post_end: 1960,
        }
    }
}

#[derive(Clone, Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepBlock {
    /// Which shock parameter to sweep; one of `kappa`, `x`, `lambda`, `delta`, `d`.
    pub param: String,
    pub lo: f64,
    pub hi: f64,
    pub n_points: usize,
}

impl Default for SweepBlock {
    fn default() -> Self {
        Self {
            param: "kappa".into(),
            lo: 1.0,
            hi: 2.0,
            n_points: 21,
        }
    }
}

/// The full resolved run configuration, echoed into every manifest.
#[derive(Clone, Debug, Default, Deserialize, Serialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub seed: u64,
    pub preferences: PreferencesBlock,
    pub technology: TechnologyBlock,
    pub shock: ShockBlock,
    pub cohort: CohortBlock,
    pub estimate: EstimateBlock,
    pub sweep: SweepBlock,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                let config: RunConfig = toml::from_str(&text)
                    .with_context(|| format!("parsing config file {}", p.display()))?;
                Ok(config)
            }
        }
    }

    pub fn preferences(&self) -> Result<Preferences> {
        Ok(Preferences::new(self.preferences.r, self.preferences.lifespan)?)
    }

    pub fn technology(&self) -> Result<Technology> {
        Ok(Technology::new(
            LogWage::Linear {
                slope: self.technology.slope,
            },
            self.technology.disutility_scale,
        )?)
    }

    /// Builds the structural shock from the shock block, if a kind is set.
    pub fn shock(&self) -> Result<Option<Shock>> {
        let Some(kind) = self.shock.kind.as_deref() else {
            return Ok(None);
        };
        let shock = match kind {
            "injury" => Shock::Injury {
                kappa: self.shock.kappa.unwrap_or(1.2),
            },
            "captivity" => Shock::Captivity {
                duration: self.shock.x.unwrap_or(0.1),
            },
            "displacement" => Shock::Displacement {
                wage_factor: self.shock.lambda.unwrap_or(1.0),
                wealth_loss: self.shock.delta.unwrap_or(0.0),
                age: self.shock.d.unwrap_or(0.0),
            },
            other => bail!("unknown shock kind '{other}' (expected injury, captivity, or displacement)"),
        };
        Ok(Some(shock))
    }
}
