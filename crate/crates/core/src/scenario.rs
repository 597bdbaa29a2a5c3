//! End-to-end drivers behind the command-line verbs. Each writes its
//! artifacts into `config.output.dir`.

use std::path::{Path, PathBuf};

use crate::config::ScenarioConfig;
use crate::design::DesignFields;
use crate::error::{Error, Result};
use crate::gradcheck::{self, GradcheckRow, GRADCHECK_HEADER};
use crate::harmonic::{harmonic_transmission, mean_abs_difference};
use crate::optimize::{run_optimization, OptimizationResult, ITERATION_HEADER};
use crate::output::{
    manifest, read_csv, signal_spectrum_rows, transmission_rows, write_csv, write_level_set_vtk, write_text,
    VtkGrid, TRANSMISSION_HEADER,
};
use crate::par::Execution;
use crate::problem::{Evaluation, Problem};

fn out(problem: &Problem, name: &str) -> PathBuf {
    problem.config.output.dir.join(name)
}

fn write_manifest(problem: &Problem, verb: &str, extra: &[(&str, String)]) -> Result<()> {
    let c = &problem.config;
    let mut entries = vec![
        ("verb", verb.to_string()),
        ("scenario", c.name.clone()),
        ("config_sha256", c.hash()),
        ("vaopt_version", env!("CARGO_PKG_VERSION").to_string()),
        ("parallel", problem.exec.is_parallel().to_string()),
        ("signal", c.signal.cache_key()),
        ("free_variables", problem.n_free().to_string()),
    ];
    entries.extend(extra.iter().cloned());
    write_text(&out(problem, "manifest.txt"), &manifest(&entries))?;
    write_text(&out(problem, "config.toml"), &c.to_toml())
}

fn write_evaluation(problem: &Problem, eval: &Evaluation, tag: &str) -> Result<()> {
    write_csv(
        &out(problem, &format!("transmission_{tag}.csv")),
        TRANSMISSION_HEADER,
        transmission_rows(problem, eval),
    )?;
    let dt = problem.config.time.dt;
    write_csv(
        &out(problem, &format!("trace_{tag}.csv")),
        &["t_s", "outlet"],
        eval.trace.iter().enumerate().map(|(n, &v)| [n as f64 * dt, v]),
    )?;
    write_level_set_vtk(
        &out(problem, &format!("level_set_{tag}.vtk")),
        problem.mesh(),
        &eval.level_set,
        &[],
    )
}

/// Design-region snapshot: variables `s` and filtered level set `s̄`.
pub fn write_design_snapshot(problem: &Problem, x: &[f64], path: &Path) -> Result<()> {
    let s = problem.param.unpack(x);
    let DesignFields { s_bar, .. } = problem.param.chain.forward(&s)?;
    let g = problem.param.grid();
    VtkGrid {
        title: "design",
        nx: g.ncx,
        ny: g.ncy,
        h: problem.param.h(),
        origin: [problem.config.mesh.nx_inlet as f64 * problem.param.h(), 0.0],
        point_fields: vec![("s", &s), ("s_bar", &s_bar)],
        cell_fields: vec![],
    }
    .write(path)
}

pub fn write_design_csv(path: &Path, x: &[f64]) -> Result<()> {
    write_csv(path, &["variable", "s"], x.iter().enumerate().map(|(i, &v)| [i as f64, v]))
}

pub fn read_design_csv(path: &Path, n: usize) -> Result<Vec<f64>> {
    let rows = read_csv(path)?;
    if rows.len() != n || rows.iter().any(|r| r.len() != 2) {
        return Err(Error::Config(format!(
            "{}: expected {n} rows of (variable, s)",
            path.display()
        )));
    }
    Ok(rows.into_iter().map(|r| r[1]).collect())
}

/// Computes (or loads) the empty-duct baseline and writes its spectrum.
pub fn baseline(config: ScenarioConfig, exec: Execution) -> Result<Problem> {
    let problem = Problem::new(config, exec)?;
    let df = problem.config.time.df();
    let b = &problem.baseline;
    write_csv(
        &out(&problem, "baseline.csv"),
        &["f_Hz", "re", "im", "SPL_dB"],
        (0..=b.spectrum.len() / 2).map(|m| {
            let z = b.spectrum[m];
            [m as f64 * df, z.re, z.im, crate::spectrum::spl(z)]
        }),
    )?;
    write_csv(
        &out(&problem, "signal_spectrum.csv"),
        &["f_Hz", "magnitude", "SPL_dB"],
        signal_spectrum_rows(&problem.p_in, df),
    )?;
    write_manifest(&problem, "baseline", &[])?;
    Ok(problem)
}

/// Forward run of the initial design (or `design` when given).
pub fn simulate(
    config: ScenarioConfig,
    exec: Execution,
    design: Option<&Path>,
    dump_matrices: bool,
) -> Result<(Problem, Evaluation)> {
    let problem = Problem::new(config, exec)?;
    let x = match design {
        Some(p) => read_design_csv(p, problem.n_free())?,
        None => problem.initial_design(),
    };
    let eval = problem.evaluate(&x)?;
    write_evaluation(&problem, &eval, "design")?;
    write_csv(
        &out(&problem, "signal_spectrum.csv"),
        &["f_Hz", "magnitude", "SPL_dB"],
        signal_spectrum_rows(&problem.p_in, problem.config.time.df()),
    )?;
    if dump_matrices {
        let sys = problem.assemble(&eval.level_set)?;
        for (name, m) in [("M", &sys.m), ("C", &sys.c), ("K", &sys.k)] {
            let path = out(&problem, &format!("matrix_{name}.txt"));
            let mut buf = Vec::new();
            m.write_triplets(&mut buf).map_err(|e| Error::io(&path, e))?;
            std::fs::write(&path, buf).map_err(|e| Error::io(&path, e))?;
        }
    }
    write_manifest(
        &problem,
        "simulate",
        &[
            ("phi1", crate::output::fmt_f64(eval.constraints[0])),
            ("phi2", crate::output::fmt_f64(eval.constraints[1])),
        ],
    )?;
    Ok((problem, eval))
}

pub fn gradcheck(config: ScenarioConfig, exec: Execution) -> Result<Vec<GradcheckRow>> {
    let problem = Problem::new(config, exec)?;
    let (x, grad, rows) = gradcheck::run(&problem)?;
    write_csv(
        &out(&problem, "gradcheck.csv"),
        GRADCHECK_HEADER,
        rows.iter().map(GradcheckRow::as_row),
    )?;
    let phi = problem.level_set(&x)?;
    write_level_set_vtk(
        &out(&problem, "sensitivity.vtk"),
        problem.mesh(),
        &phi,
        &[("dphi1_dsbar", &grad.level_set[0]), ("dphi2_dsbar", &grad.level_set[1])],
    )?;
    let worst = rows.iter().fold(0.0_f64, |a, r| a.max(r.rel_error));
    write_manifest(
        &problem,
        "gradcheck",
        &[
            ("checked", rows.len().to_string()),
            ("max_rel_error", crate::output::fmt_f64(worst)),
            ("one_sided_elements", grad.one_sided.to_string()),
        ],
    )?;
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct HarmonicReport {
    pub freqs: Vec<f64>,
    pub transient: Vec<f64>,
    pub harmonic: Vec<Option<f64>>,
    /// Mean `|S_transient − S_harm|` over the pass bins.
    pub pass_error: f64,
    /// Mean harmonic and transient `S` over the stop bins.
    pub stop_harmonic: f64,
    pub stop_transient: f64,
}

/// Harmonic transmission at the configured frequencies (default: every
/// active bin) next to the transient one.
pub fn harmonic_report(problem: &Problem, eval: &Evaluation) -> Result<HarmonicReport> {
    let df = problem.config.time.df();
    let mut bins: Vec<usize> = problem.pass_bins.iter().chain(&problem.stop_bins).copied().collect();
    bins.sort_unstable();
    bins.dedup();
    let freqs: Vec<f64> = if problem.config.harmonic.frequencies.is_empty() {
        bins.iter().map(|&m| m as f64 * df).collect()
    } else {
        problem.config.harmonic.frequencies.clone()
    };
    let harmonic = harmonic_transmission(problem, &eval.level_set, &freqs)?;
    let n = eval.transmission.len();
    let transient: Vec<f64> = freqs
        .iter()
        .map(|f| {
            let m = (f / df).round() as usize;
            if (f / df - m as f64).abs() < 1e-9 && m <= n / 2 {
                eval.transmission[m]
            } else {
                f64::NAN
            }
        })
        .collect();
    let subset = |bins: &[usize]| -> (Vec<f64>, Vec<Option<f64>>) {
        (0..freqs.len())
            .filter(|&i| !transient[i].is_nan() && bins.contains(&((freqs[i] / df).round() as usize)))
            .map(|i| (transient[i], harmonic[i]))
            .unzip()
    };
    let (pt, ph) = subset(&problem.pass_bins);
    let (st, sh) = subset(&problem.stop_bins);
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len().max(1) as f64;
    let sh: Vec<f64> = sh.into_iter().flatten().collect();
    Ok(HarmonicReport {
        pass_error: mean_abs_difference(&pt, &ph),
        stop_harmonic: mean(&sh),
        stop_transient: mean(&st),
        freqs,
        transient,
        harmonic,
    })
}

pub fn write_harmonic(problem: &Problem, report: &HarmonicReport) -> Result<()> {
    write_csv(
        &out(problem, "harmonic.csv"),
        &["f_Hz", "S_transient", "S_harmonic"],
        report
            .freqs
            .iter()
            .zip(&report.transient)
            .zip(&report.harmonic)
            .map(|((&f, &t), h)| [f, t, h.unwrap_or(f64::NAN)]),
    )
}

pub fn harmonic(config: ScenarioConfig, exec: Execution, design: Option<&Path>) -> Result<HarmonicReport> {
    let problem = Problem::new(config, exec)?;
    let x = match design {
        Some(p) => read_design_csv(p, problem.n_free())?,
        None => problem.initial_design(),
    };
    let eval = problem.evaluate(&x)?;
    let report = harmonic_report(&problem, &eval)?;
    write_harmonic(&problem, &report)?;
    write_manifest(&problem, "harmonic", &harmonic_manifest(&report))?;
    Ok(report)
}

fn harmonic_manifest(r: &HarmonicReport) -> Vec<(&'static str, String)> {
    vec![
        ("harmonic_pass_mean_abs_error", crate::output::fmt_f64(r.pass_error)),
        ("harmonic_stop_mean_S", crate::output::fmt_f64(r.stop_harmonic)),
        ("transient_stop_mean_S", crate::output::fmt_f64(r.stop_transient)),
    ]
}

pub struct ScenarioOutcome {
    pub problem: Problem,
    pub result: OptimizationResult,
    pub harmonic: Option<HarmonicReport>,
}

/// Baseline, optimization, final reports and the optional harmonic check.
pub fn run_scenario(config: ScenarioConfig, exec: Execution) -> Result<ScenarioOutcome> {
    let problem = Problem::new(config, exec)?;
    let every = problem.config.optimizer.snapshot_every;
    let iterations = problem.config.optimizer.iterations;
    let mut last_x: Vec<f64> = Vec::new();
    let observed = run_optimization(&problem, problem.initial_design(), iterations, |k, x, _| {
        last_x = x.to_vec();
        if every > 0 && k % every == 0 {
            write_design_snapshot(&problem, x, &out(&problem, &format!("snapshots/design_{k:05}.vtk")))?;
        }
        Ok(())
    });
    let result = match observed {
        Ok(r) => r,
        Err(e) => {
            if !last_x.is_empty() {
                let _ = write_design_csv(&out(&problem, "design_failed.csv"), &last_x);
                let _ = write_design_snapshot(&problem, &last_x, &out(&problem, "design_failed.vtk"));
            }
            return Err(e);
        }
    };
    write_csv(
        &out(&problem, "iterations.csv"),
        ITERATION_HEADER,
        result.history.iter().map(|r| r.as_row()),
    )?;
    write_evaluation(&problem, &result.initial, "initial")?;
    write_evaluation(&problem, &result.last, "final")?;
    write_design_csv(&out(&problem, "design_final.csv"), &result.design)?;
    write_design_snapshot(&problem, &result.design, &out(&problem, "design_final.vtk"))?;
    write_csv(
        &out(&problem, "signal_spectrum.csv"),
        &["f_Hz", "magnitude", "SPL_dB"],
        signal_spectrum_rows(&problem.p_in, problem.config.time.df()),
    )?;
    let harmonic = if problem.config.harmonic.enabled {
        let r = harmonic_report(&problem, &result.last)?;
        write_harmonic(&problem, &r)?;
        Some(r)
    } else {
        None
    };
    let mut extra = vec![
        ("iterations", iterations.to_string()),
        ("phi1_initial", crate::output::fmt_f64(result.initial.constraints[0])),
        ("phi2_initial", crate::output::fmt_f64(result.initial.constraints[1])),
        ("phi1_final", crate::output::fmt_f64(result.last.constraints[0])),
        ("phi2_final", crate::output::fmt_f64(result.last.constraints[1])),
    ];
    if let Some(r) = &harmonic {
        extra.extend(harmonic_manifest(r));
    }
    write_manifest(&problem, "optimize", &extra)?;
    Ok(ScenarioOutcome {
        problem,
        result,
        harmonic,
    })
}
