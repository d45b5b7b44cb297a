//! Scenario registry backed by the bundled profile data file.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Spacing of the delay grid: tap `l` sits at `l * DELAY_UNIT_US`.
pub const DELAY_UNIT_US: f64 = 10.0;

/// Number of scenarios in the registry.
pub const SCENARIO_COUNT: usize = 6;

/// Largest tap count across the registry; sets the row count of every
/// estimated CIR and D-DPDP.
pub const MAX_TAPS: usize = 12;

const BUNDLED_PROFILES: &str = include_str!("../../data/cost207_profiles.toml");
const SUPPORTED_FORMAT_VERSION: u32 = 1;

/// One lobe of a Gaussian Doppler spectrum. `center` and `sigma` are
/// fractions of the maximum Doppler frequency; `weight` is linear.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianLobe {
    pub center: f64,
    pub sigma: f64,
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DopplerSpectrum {
    /// Classical U-shaped spectrum of isotropic scattering.
    Jakes,
    /// Weighted sum of Gaussian lobes.
    Gaussian(Vec<GaussianLobe>),
}

impl DopplerSpectrum {
    /// Fraction of the spectrum's power below `f` (in units of the maximum
    /// Doppler frequency).
    pub fn cdf(&self, f: f64) -> f64 {
        match self {
            DopplerSpectrum::Jakes => 0.5 + f.clamp(-1.0, 1.0).asin() / std::f64::consts::PI,
            DopplerSpectrum::Gaussian(lobes) => {
                let total: f64 = lobes.iter().map(|l| l.weight).sum();
                lobes
                    .iter()
                    .map(|l| {
                        let z = (f - l.center) / (l.sigma * std::f64::consts::SQRT_2);
                        l.weight * 0.5 * (1.0 + statrs::function::erf::erf(z))
                    })
                    .sum::<f64>()
                    / total
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioProfile {
    pub label: u8,
    pub name: String,
    pub description: String,
    /// Tap delays in microseconds, `10 * l`.
    pub tap_delays_us: Vec<f64>,
    pub tap_gains_db: Vec<f64>,
    pub doppler_spectra: Vec<DopplerSpectrum>,
    /// Delays from the reference tables, kept for documentation.
    pub reference_delays_us: Vec<f64>,
}

impl ScenarioProfile {
    pub fn tap_count(&self) -> usize {
        self.tap_delays_us.len()
    }

    /// Average path powers on a linear scale.
    pub fn tap_gains_linear(&self) -> Vec<f64> {
        self.tap_gains_db
            .iter()
            .map(|db| 10f64.powf(db / 10.0))
            .collect()
    }

    fn validate(&self) -> Result<()> {
        let l = self.tap_count();
        if l == 0 {
            return Err(Error::Format(format!("scenario {} has no taps", self.name)));
        }
        if self.tap_gains_db.len() != l || self.doppler_spectra.len() != l {
            return Err(Error::Format(format!(
                "scenario {}: tap arrays have different lengths",
                self.name
            )));
        }
        if self.tap_delays_us.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Format(format!(
                "scenario {}: delays not strictly increasing",
                self.name
            )));
        }
        for spectrum in &self.doppler_spectra {
            if let DopplerSpectrum::Gaussian(lobes) = spectrum {
                if lobes.is_empty() || lobes.iter().any(|l| l.sigma <= 0.0 || l.weight <= 0.0) {
                    return Err(Error::Format(format!(
                        "scenario {}: malformed gaussian spectrum",
                        self.name
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Deserialize)]
struct ProfileFile {
    format_version: u32,
    scenario: Vec<ScenarioRecord>,
}

#[derive(Deserialize)]
struct ScenarioRecord {
    label: u8,
    name: String,
    #[serde(default)]
    description: String,
    taps: Vec<TapRecord>,
}

#[derive(Deserialize)]
struct TapRecord {
    cost207_delay_us: f64,
    gain_db: f64,
    doppler: DopplerRecord,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DopplerRecord {
    Named(String),
    Gaussian { gaussian: Vec<[f64; 3]> },
}

impl TryFrom<DopplerRecord> for DopplerSpectrum {
    type Error = Error;

    fn try_from(record: DopplerRecord) -> Result<Self> {
        match record {
            DopplerRecord::Named(name) if name == "jakes" => Ok(DopplerSpectrum::Jakes),
            DopplerRecord::Named(name) => {
                Err(Error::Format(format!("unknown doppler spectrum {name:?}")))
            }
            DopplerRecord::Gaussian { gaussian } => Ok(DopplerSpectrum::Gaussian(
                gaussian
                    .into_iter()
                    .map(|[center, sigma, weight]| GaussianLobe {
                        center,
                        sigma,
                        weight,
                    })
                    .collect(),
            )),
        }
    }
}

/// Parses a profile data file. Delays are placed on the 10 us grid
/// regardless of the reference delays in the file.
pub fn parse_profiles(text: &str) -> Result<Vec<ScenarioProfile>> {
    let file: ProfileFile =
        toml::from_str(text).map_err(|e| Error::Format(format!("profile file: {e}")))?;
    if file.format_version != SUPPORTED_FORMAT_VERSION {
        return Err(Error::Format(format!(
            "profile file version {} (expected {SUPPORTED_FORMAT_VERSION})",
            file.format_version
        )));
    }
    let mut profiles = Vec::with_capacity(file.scenario.len());
    for record in file.scenario {
        let l = record.taps.len();
        let mut doppler_spectra = Vec::with_capacity(l);
        let mut tap_gains_db = Vec::with_capacity(l);
        let mut reference_delays_us = Vec::with_capacity(l);
        for tap in record.taps {
            doppler_spectra.push(DopplerSpectrum::try_from(tap.doppler)?);
            tap_gains_db.push(tap.gain_db);
            reference_delays_us.push(tap.cost207_delay_us);
        }
        let profile = ScenarioProfile {
            label: record.label,
            name: record.name,
            description: record.description,
            tap_delays_us: (0..l).map(|i| DELAY_UNIT_US * i as f64).collect(),
            tap_gains_db,
            doppler_spectra,
            reference_delays_us,
        };
        profile.validate()?;
        if profiles
            .iter()
            .any(|p: &ScenarioProfile| p.label == profile.label)
        {
            return Err(Error::Format(format!("duplicate label {}", profile.label)));
        }
        profiles.push(profile);
    }
    Ok(profiles)
}

/// All bundled scenarios, ordered by label.
pub fn registry() -> &'static [ScenarioProfile] {
    static REGISTRY: OnceLock<Vec<ScenarioProfile>> = OnceLock::new();
    REGISTRY.get_or_init(|| {
        let mut profiles =
            parse_profiles(BUNDLED_PROFILES).expect("bundled profile file is well-formed");
        profiles.sort_by_key(|p| p.label);
        profiles
    })
}

pub fn load_profile(label: u8) -> Result<ScenarioProfile> {
    registry()
        .iter()
        .find(|p| p.label == label)
        .cloned()
        .ok_or_else(|| Error::NotFound(format!("no scenario with label {label}")))
}
