//! Scenario configuration: a TOML document whose every key falls back to the
//! full-resolution low-pass setup when omitted.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::assembly::MaterialParams;
use crate::error::{Error, Result};
use crate::mesh::DuctLayout;
use crate::mma::MmaSettings;
use crate::signal::SignalSpec;
use crate::spectrum::{band_bins, Band};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub mesh: DuctLayout,
    pub materials: MaterialParams,
    pub time: TimeConfig,
    pub signal: SignalSpec,
    pub design: DesignConfig,
    pub targets: TargetConfig,
    pub optimizer: OptimizerConfig,
    pub gradcheck: GradcheckConfig,
    pub harmonic: HarmonicConfig,
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeConfig {
    pub dt: f64,
    pub steps: usize,
}

impl Default for TimeConfig {
    fn default() -> Self {
        Self { dt: 2e-5, steps: 1000 }
    }
}

impl TimeConfig {
    /// Bin spacing `1/(N·dt)`.
    pub fn df(&self) -> f64 {
        1.0 / (self.steps as f64 * self.dt)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialDesign {
    /// Array of acoustic inclusions from the cosine indicator.
    Inclusions {
        r1: f64,
        r2: f64,
        lx: f64,
        ly: f64,
        threshold: f64,
    },
    /// Every free variable at the same value (`0` gives the empty duct).
    Uniform { value: f64 },
}

impl Default for InitialDesign {
    fn default() -> Self {
        InitialDesign::Inclusions {
            r1: 7.0,
            r2: 7.0,
            lx: 0.1,
            ly: 0.1,
            threshold: 0.01,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DesignConfig {
    pub filter_radius: f64,
    pub initial: InitialDesign,
}

impl Default for DesignConfig {
    fn default() -> Self {
        Self {
            filter_radius: 8e-3,
            initial: InitialDesign::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TargetConfig {
    /// Target transmission `a` in the pass bands.
    pub pass: f64,
    /// Target transmission `b` in the stop bands.
    pub stop: f64,
    pub pass_bands: Vec<Band>,
    pub stop_bands: Vec<Band>,
}

impl Default for TargetConfig {
    fn default() -> Self {
        Self {
            pass: 1.0,
            stop: 1e-3,
            pass_bands: vec![Band::closed(1000.0, 2500.0)],
            stop_bands: vec![Band::new(2500.0, 4000.0, false, true)],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptimizerConfig {
    pub iterations: usize,
    /// Divide each constraint and its gradient by its initial value.
    pub normalize: bool,
    /// Write a design snapshot every `k` iterations (0 disables).
    pub snapshot_every: usize,
    pub mma: MmaSettings,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            iterations: 400,
            normalize: false,
            snapshot_every: 50,
            mma: MmaSettings::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GradcheckConfig {
    pub variables: usize,
    pub step: f64,
    pub seed: u64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        Self {
            variables: 20,
            step: 1e-6,
            seed: 7,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HarmonicConfig {
    /// Run the frequency-domain cross-check after optimizing.
    pub enabled: bool,
    /// Frequencies in Hz; empty means every pass- and stop-band bin.
    pub frequencies: Vec<f64>,
}

impl Default for HarmonicConfig {
    fn default() -> Self {
        Self {
            enabled: true,
            frequencies: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    pub dir: PathBuf,
    /// Baseline spectra cache; `None` disables caching.
    pub cache_dir: Option<PathBuf>,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            cache_dir: Some(PathBuf::from(".vaopt-cache")),
        }
    }
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            name: "lowpass-paper".into(),
            mesh: DuctLayout::full(),
            materials: MaterialParams::default(),
            time: TimeConfig::default(),
            signal: SignalSpec::default(),
            design: DesignConfig::default(),
            targets: TargetConfig::default(),
            optimizer: OptimizerConfig::default(),
            gradcheck: GradcheckConfig::default(),
            harmonic: HarmonicConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    /// Hex SHA-256 of the serialized configuration.
    pub fn hash(&self) -> String {
        hex(&Sha256::digest(self.to_toml().as_bytes()))
    }

    pub fn validate(&self) -> Result<()> {
        self.mesh.validate()?;
        self.materials.validate()?;
        let t = &self.time;
        if !(t.dt > 0.0 && t.dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {}", t.dt)));
        }
        if t.steps < 4 {
            return Err(Error::Config(format!("need at least 4 time steps, got {}", t.steps)));
        }
        let tg = &self.targets;
        if !(tg.pass > 0.0 && tg.pass.is_finite()) || !(tg.stop > 0.0 && tg.stop.is_finite()) {
            return Err(Error::Config(format!(
                "band targets must be positive (pass = {}, stop = {})",
                tg.pass, tg.stop
            )));
        }
        self.pass_bins()?;
        self.stop_bins()?;
        if !(self.design.filter_radius >= 0.0 && self.design.filter_radius.is_finite()) {
            return Err(Error::Config(format!(
                "filter radius must be non-negative, got {}",
                self.design.filter_radius
            )));
        }
        if let InitialDesign::Uniform { value } = self.design.initial {
            if !(0.0..=1.0).contains(&value) {
                return Err(Error::Config(format!("uniform initial design {value} outside [0, 1]")));
            }
        }
        let m = &self.optimizer.mma;
        if !(m.move_limit > 0.0) || !(m.asyinit > 0.0) || !(m.epsimin > 0.0) {
            return Err(Error::Config("MMA move limit, asyinit and epsimin must be positive".into()));
        }
        if !(self.gradcheck.step > 0.0) {
            return Err(Error::Config(format!(
                "gradient check step must be positive, got {}",
                self.gradcheck.step
            )));
        }
        if let SignalSpec::WhiteNoise { amplitude, .. } | SignalSpec::Sine { amplitude, .. } = self.signal {
            if !(amplitude > 0.0 && amplitude.is_finite()) {
                return Err(Error::Config(format!("signal amplitude must be positive, got {amplitude}")));
            }
        }
        Ok(())
    }

    pub fn pass_bins(&self) -> Result<Vec<usize>> {
        band_bins(&self.targets.pass_bands, self.time.df(), self.time.steps)
    }

    pub fn stop_bins(&self) -> Result<Vec<usize>> {
        band_bins(&self.targets.stop_bands, self.time.df(), self.time.steps)
    }
}

pub(crate) fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_default_setup() {
        let cfg = ScenarioConfig::from_toml("").unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.mesh.nx() * cfg.mesh.ny, 12500);
        assert_eq!(cfg.time.df(), 50.0);
        assert_eq!(cfg.design.filter_radius, 8e-3);
        assert_eq!(cfg.materials.youngs_modulus, 50e6);
    }

    #[test]
    fn round_trip_is_idempotent() {
        let cfg = ScenarioConfig::default();
        let once = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(once, cfg);
        assert_eq!(once.to_toml(), cfg.to_toml());
    }

    #[test]
    fn partial_sections_keep_other_defaults() {
        let cfg = ScenarioConfig::from_toml("[time]\nsteps = 200\ndt = 2e-5\n[targets]\nstop = 1e-2\n").unwrap();
        assert_eq!(cfg.time.steps, 200);
        assert_eq!(cfg.targets.stop, 1e-2);
        assert_eq!(cfg.targets.pass_bands, TargetConfig::default().pass_bands);
    }

    #[test]
    fn rejects_bad_input() {
        for (doc, needle) in [
            ("[time]\ndt = 0.0\n", "time step"),
            ("[time]\ndt = -1e-5\n", "time step"),
            ("[targets]\npass_bands = [{ lo_hz = 1025.0, hi_hz = 2500.0 }]\n", "not a multiple"),
            ("[targets]\nstop_bands = [{ lo_hz = 1000.0, hi_hz = 30000.0 }]\n", "Nyquist"),
            ("[targets]\nstop = 0.0\n", "positive"),
            ("bogus = 1\n", "unknown field"),
            ("[signal]\nseed = 3\n", "type"),
        ] {
            let err = ScenarioConfig::from_toml(doc).unwrap_err().to_string();
            assert!(err.contains(needle), "{doc:?} -> {err}");
        }
    }

    #[test]
    fn hash_tracks_content() {
        let a = ScenarioConfig::default();
        let mut b = a.clone();
        assert_eq!(a.hash(), b.hash());
        b.gradcheck.seed += 1;
        assert_ne!(a.hash(), b.hash());
        assert_eq!(a.hash().len(), 64);
    }
}
