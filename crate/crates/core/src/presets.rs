//! Built-in scenarios. Each filter type ships at full resolution
//! and as a `-coarse` desk-scale variant (30 × 15 mesh, 200 steps, 250 Hz
//! bins).

use crate::config::{InitialDesign, ScenarioConfig, TimeConfig};
use crate::error::{Error, Result};
use crate::mesh::DuctLayout;
use crate::spectrum::Band;

pub const PRESETS: &[&str] = &[
    "lowpass-paper",
    "highpass-paper",
    "bandpass-paper",
    "bandstop-paper",
    "lowpass-validation",
    "lowpass-coarse",
    "highpass-coarse",
    "bandpass-coarse",
    "bandstop-coarse",
    "lowpass-validation-coarse",
    "empty",
];

pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let (base, coarse) = match name.strip_suffix("-coarse") {
        Some(b) => (b, true),
        None => (name.strip_suffix("-paper").unwrap_or(name), false),
    };
    let mut cfg = ScenarioConfig {
        name: name.to_string(),
        ..ScenarioConfig::default()
    };
    let t = &mut cfg.targets;
    match base {
        "lowpass" => {}
        "highpass" => {
            t.pass_bands = vec![Band::closed(2500.0, 4000.0)];
            t.stop_bands = vec![Band::new(1000.0, 2500.0, true, false)];
        }
        "bandpass" => {
            t.pass_bands = vec![Band::closed(2500.0, 4000.0)];
            t.stop_bands = vec![
                Band::new(1000.0, 2500.0, true, false),
                Band::new(4000.0, 5500.0, false, true),
            ];
            cfg.optimizer.iterations = 800;
        }
        "bandstop" => {
            t.pass_bands = vec![
                Band::new(1000.0, 2500.0, true, false),
                Band::new(4000.0, 5500.0, false, true),
            ];
            t.stop_bands = vec![Band::closed(2500.0, 4000.0)];
            cfg.optimizer.iterations = 800;
        }
        "lowpass-validation" => {
            t.pass_bands = vec![Band::closed(500.0, 2000.0)];
            t.stop_bands = vec![Band::new(2000.0, 3500.0, false, true)];
            t.stop = 1e-4;
        }
        "empty" => {
            cfg.optimizer.iterations = 0;
            cfg.design.initial = InitialDesign::Uniform { value: 0.0 };
            coarsen(&mut cfg);
            return Ok(cfg);
        }
        _ => {
            return Err(Error::Config(format!(
                "unknown preset {name:?}; available: {}",
                PRESETS.join(", ")
            )))
        }
    }
    if coarse {
        coarsen(&mut cfg);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn coarsen(cfg: &mut ScenarioConfig) {
    cfg.mesh = DuctLayout::coarse();
    cfg.time = TimeConfig { dt: 2e-5, steps: 200 };
    cfg.optimizer.iterations = cfg.optimizer.iterations.min(100);
    cfg.optimizer.snapshot_every = 10;
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in PRESETS {
            let cfg = preset(name).unwrap();
            cfg.validate().unwrap();
            assert_eq!(cfg.name, *name);
        }
        assert!(preset("notch").is_err());
    }

    #[test]
    fn lowpass_full_bands() {
        let cfg = preset("lowpass-paper").unwrap();
        assert_eq!(cfg.targets.stop, 1e-3);
        assert_eq!(cfg.targets.pass, 1.0);
        let pass = cfg.pass_bins().unwrap();
        let stop = cfg.stop_bins().unwrap();
        assert_eq!((pass[0], *pass.last().unwrap()), (20, 50));
        assert_eq!((stop[0], *stop.last().unwrap()), (51, 80));
        assert_eq!(cfg.optimizer.iterations, 400);
    }

    #[test]
    fn highpass_and_validation_bands() {
        let hp = preset("highpass-paper").unwrap();
        assert_eq!(hp.targets.pass_bands, vec![Band::closed(2500.0, 4000.0)]);
        assert_eq!(hp.stop_bins().unwrap().last(), Some(&49));
        let v = preset("lowpass-validation").unwrap();
        assert_eq!(v.targets.stop, 1e-4);
        assert_eq!(v.targets.pass_bands, vec![Band::closed(500.0, 2000.0)]);
        assert_eq!(v.stop_bins().unwrap()[0], 41);
        assert_eq!(preset("bandstop-paper").unwrap().optimizer.iterations, 800);
    }

    #[test]
    fn coarse_presets_use_250_hz_bins() {
        let cfg = preset("lowpass-coarse").unwrap();
        assert_eq!(cfg.mesh.nx() * cfg.mesh.ny, 450);
        assert_eq!(cfg.time.df(), 250.0);
        assert_eq!(cfg.pass_bins().unwrap(), (4..=10).collect::<Vec<_>>());
        assert_eq!(cfg.stop_bins().unwrap(), (11..=16).collect::<Vec<_>>());
    }
}
