//! The filter design problem: design variables → level set → transient
//! response → outlet spectrum → band constraints `Φ₁`, `Φ₂`, and their
//! adjoint gradients.

use std::path::{Path, PathBuf};

use num_complex::Complex64;
use sha2::{Digest, Sha256};

use crate::adjoint::{element_derivatives, sensitivity, TraceSeed};
use crate::assembly::{Assembler, SystemMatrices};
use crate::config::{hex, InitialDesign, ScenarioConfig};
use crate::design::{init_design, Parameterization};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::newmark::{run_transient, NewmarkParams, Stepper, Transient, TransientOptions};
use crate::par::Execution;
use crate::signal::derivative;
use crate::spectrum::{
    check_excitation, constraint_value, outlet_weights, seed, transmission, windowed_spectrum,
};

/// Outlet response of the empty duct for the configured input signal.
#[derive(Debug, Clone, PartialEq)]
pub struct Baseline {
    pub trace: Vec<f64>,
    pub spectrum: Vec<Complex64>,
}

impl Baseline {
    pub fn from_trace(trace: Vec<f64>) -> Self {
        let spectrum = windowed_spectrum(&trace);
        Self { trace, spectrum }
    }
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    /// Level set on every mesh node.
    pub level_set: Vec<f64>,
    pub trace: Vec<f64>,
    pub spectrum: Vec<Complex64>,
    /// `S` on every bin.
    pub transmission: Vec<f64>,
    /// `[Φ₁, Φ₂]`.
    pub constraints: [f64; 2],
}

#[derive(Debug, Clone)]
pub struct Gradients {
    /// `dΦᵢ/ds` over the free design variables.
    pub design: [Vec<f64>; 2],
    /// `dΦᵢ/ds̄` on mesh nodes.
    pub level_set: [Vec<f64>; 2],
    /// Cut elements whose derivative fell back to a one-sided difference.
    pub one_sided: usize,
}

pub struct Problem {
    pub config: ScenarioConfig,
    pub assembler: Assembler,
    pub param: Parameterization,
    pub newmark: NewmarkParams,
    pub p_in: Vec<f64>,
    pub dp_in: Vec<f64>,
    pub weights: Vec<(usize, f64)>,
    pub baseline: Baseline,
    pub pass_bins: Vec<usize>,
    pub stop_bins: Vec<usize>,
    pub exec: Execution,
}

impl Problem {
    /// Builds the problem, taking the baseline from `config.output.cache_dir`
    /// when present and computing (and storing) it otherwise.
    pub fn new(config: ScenarioConfig, exec: Execution) -> Result<Self> {
        let cache = config.output.cache_dir.clone();
        Self::with_cache(config, exec, cache.as_deref())
    }

    pub fn with_cache(config: ScenarioConfig, exec: Execution, cache_dir: Option<&Path>) -> Result<Self> {
        config.validate()?;
        let mesh = Mesh::new(config.mesh)?;
        let param = Parameterization::new(&mesh, config.design.filter_radius)?;
        let weights = outlet_weights(&mesh);
        let assembler = Assembler::new(mesh, config.materials)?;
        let newmark = NewmarkParams::trapezoidal(config.time.dt);
        let p_in = config.signal.sample(config.time.steps, config.time.dt)?;
        let dp_in = derivative(&p_in, config.time.dt);
        let pass_bins = config.pass_bins()?;
        let stop_bins = config.stop_bins()?;
        let mut problem = Self {
            config,
            assembler,
            param,
            newmark,
            p_in,
            dp_in,
            weights,
            baseline: Baseline {
                trace: Vec::new(),
                spectrum: Vec::new(),
            },
            pass_bins,
            stop_bins,
            exec,
        };
        let cached = match cache_dir {
            Some(dir) => load_baseline(&problem.baseline_path(dir), problem.config.time.steps)?,
            None => None,
        };
        let trace = match cached {
            Some(t) => t,
            None => {
                let t = problem.simulate(&problem.param.empty_field())?;
                if let Some(dir) = cache_dir {
                    store_baseline(&problem.baseline_path(dir), &problem.baseline_key(), &t)?;
                }
                t
            }
        };
        problem.baseline = Baseline::from_trace(trace);
        let mut active = problem.pass_bins.clone();
        active.extend(&problem.stop_bins);
        check_excitation(&problem.baseline.spectrum, &active, problem.config.time.df())?;
        Ok(problem)
    }

    pub fn mesh(&self) -> &Mesh {
        &self.assembler.mesh
    }

    pub fn n_free(&self) -> usize {
        self.param.free_indices().len()
    }

    /// Identifies everything the baseline depends on.
    pub fn baseline_key(&self) -> String {
        let c = &self.config;
        format!(
            "baseline-v1|mesh:{:?}|materials:{:?}|dt:{:e}|steps:{}|signal:{}",
            c.mesh,
            c.materials,
            c.time.dt,
            c.time.steps,
            c.signal.cache_key()
        )
    }

    pub fn baseline_path(&self, dir: &Path) -> PathBuf {
        let digest = hex(&Sha256::digest(self.baseline_key().as_bytes()));
        dir.join(format!("baseline-{}.txt", &digest[..32]))
    }

    /// Free variables of the configured initial design.
    pub fn initial_design(&self) -> Vec<f64> {
        match self.config.design.initial {
            InitialDesign::Inclusions {
                r1,
                r2,
                lx,
                ly,
                threshold,
            } => self.param.pack(&init_design(&self.param, r1, r2, lx, ly, threshold)),
            InitialDesign::Uniform { value } => vec![value; self.n_free()],
        }
    }

    pub fn level_set(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.n_free() {
            return Err(Error::Dimension {
                what: "design variables",
                expected: self.n_free(),
                got: x.len(),
            });
        }
        self.param.physical_field(&self.param.unpack(x))
    }

    pub fn assemble(&self, level_set: &[f64]) -> Result<SystemMatrices> {
        self.assembler.assemble(level_set, self.exec)
    }

    /// Outlet trace for a mesh level set.
    pub fn simulate(&self, level_set: &[f64]) -> Result<Vec<f64>> {
        Ok(self.transient(level_set, &TransientOptions::default())?.1.trace)
    }

    pub fn transient(&self, level_set: &[f64], opts: &TransientOptions) -> Result<(SystemMatrices, Transient)> {
        let sys = self.assemble(level_set)?;
        let stepper = Stepper::new(&sys, self.newmark, self.exec)?;
        let run = run_transient(&stepper, &self.dp_in, &self.weights, opts)?;
        drop(stepper);
        Ok((sys, run))
    }

    fn finish(&self, level_set: Vec<f64>, trace: Vec<f64>) -> Evaluation {
        let spectrum = windowed_spectrum(&trace);
        let s = transmission(&spectrum, &self.baseline.spectrum);
        let t = &self.config.targets;
        let constraints = [
            constraint_value(&s, &self.pass_bins, t.pass),
            constraint_value(&s, &self.stop_bins, t.stop),
        ];
        Evaluation {
            level_set,
            trace,
            spectrum,
            transmission: s,
            constraints,
        }
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        let phi = self.level_set(x)?;
        self.evaluate_level_set(phi)
    }

    pub fn evaluate_level_set(&self, level_set: Vec<f64>) -> Result<Evaluation> {
        let trace = self.simulate(&level_set)?;
        Ok(self.finish(level_set, trace))
    }

    /// Constraint values and both gradients (two reverse sweeps sharing one
    /// forward history).
    pub fn evaluate_with_gradients(&self, x: &[f64]) -> Result<(Evaluation, Gradients)> {
        let phi = self.level_set(x)?;
        let opts = TransientOptions {
            store_history: true,
            check_residuals: false,
        };
        let sys = self.assemble(&phi)?;
        let stepper = Stepper::new(&sys, self.newmark, self.exec)?;
        let run = run_transient(&stepper, &self.dp_in, &self.weights, &opts)?;
        let eval = self.finish(phi, run.trace);
        let derivs = element_derivatives(&self.assembler, &eval.level_set, self.exec);
        let one_sided = derivs.iter().filter(|d| d.one_sided).count();
        let t = &self.config.targets;
        let seeds = [
            seed(&eval.spectrum, &self.baseline.spectrum, &self.pass_bins, t.pass),
            seed(&eval.spectrum, &self.baseline.spectrum, &self.stop_bins, t.stop),
        ];
        let n_nodes = self.mesh().n_nodes();
        let sweep = |g: &[f64]| {
            let s = TraceSeed {
                trace_grad: g,
                weights: &self.weights,
            };
            sensitivity(&stepper, &run.history, &derivs, s, n_nodes, self.exec)
        };
        let (g1, g2) = self.exec.join(|| sweep(&seeds[0]), || sweep(&seeds[1]));
        let (g1, g2) = (g1?, g2?);
        let design = [
            self.param.pack(&self.param.design_gradient(&g1)),
            self.param.pack(&self.param.design_gradient(&g2)),
        ];
        Ok((
            eval,
            Gradients {
                design,
                level_set: [g1, g2],
                one_sided,
            },
        ))
    }
}

fn load_baseline(path: &Path, n: usize) -> Result<Option<Vec<f64>>> {
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
        Err(e) => return Err(Error::io(path, e)),
    };
    let values: std::result::Result<Vec<f64>, _> = text
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| l.trim().parse::<f64>())
        .collect();
    match values {
        Ok(v) if v.len() == n => Ok(Some(v)),
        // unreadable or stale entries are recomputed and overwritten
        _ => Ok(None),
    }
}

fn store_baseline(path: &Path, key: &str, trace: &[f64]) -> Result<()> {
    use std::io::Write;
    let dir = path.parent().unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(dir, e))?;
    let mut body = format!("# {key}\n");
    for v in trace {
        body.push_str(&format!("{v:.16e}\n"));
    }
    tmp.write_all(body.as_bytes()).map_err(|e| Error::io(path, e))?;
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}
