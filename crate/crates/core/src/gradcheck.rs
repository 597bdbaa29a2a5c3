//! Adjoint gradient against central differences of the full pipeline.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{Error, Result};
use crate::problem::{Gradients, Problem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GradcheckRow {
    pub variable: usize,
    /// `0` for `Φ₁`, `1` for `Φ₂`.
    pub constraint: usize,
    pub adjoint: f64,
    pub fd: f64,
    pub rel_error: f64,
}

pub const GRADCHECK_HEADER: &[&str] = &["variable", "constraint", "adjoint", "fd", "rel_error"];

impl GradcheckRow {
    pub fn as_row(&self) -> [f64; 5] {
        [
            self.variable as f64,
            (self.constraint + 1) as f64,
            self.adjoint,
            self.fd,
            self.rel_error,
        ]
    }
}

pub fn relative_error(adjoint: f64, fd: f64) -> f64 {
    let scale = adjoint.abs().max(fd.abs());
    if scale == 0.0 {
        0.0
    } else {
        (adjoint - fd).abs() / scale
    }
}

/// Point used for checks: the initial design pulled into the open box,
/// `0.05 + 0.9 s`, so central differences stay feasible.
pub fn interior_point(x: &[f64]) -> Vec<f64> {
    x.iter().map(|v| 0.05 + 0.9 * v).collect()
}

/// Picks up to `count` variables per constraint, uniformly at random among
/// those whose gradient is at least `1e-2` of that constraint's largest.
pub fn select_variables(grad: &Gradients, count: usize, seed: u64) -> Vec<(usize, usize)> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut out = Vec::new();
    for (c, g) in grad.design.iter().enumerate() {
        let gmax = g.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        if gmax == 0.0 {
            continue;
        }
        let mut cand: Vec<usize> = (0..g.len()).filter(|&i| g[i].abs() >= 1e-2 * gmax).collect();
        cand.shuffle(&mut rng);
        cand.truncate(count);
        cand.sort_unstable();
        out.extend(cand.into_iter().map(|i| (i, c)));
    }
    out
}

/// Central difference of both constraints w.r.t. variable `i`.
pub fn central_difference(problem: &Problem, x: &[f64], i: usize, step: f64) -> Result<[f64; 2]> {
    if x[i] - step < 0.0 || x[i] + step > 1.0 {
        return Err(Error::Config(format!(
            "variable {i} = {} is within {step} of a bound; central difference infeasible",
            x[i]
        )));
    }
    let mut xp = x.to_vec();
    xp[i] += step;
    let mut xm = x.to_vec();
    xm[i] -= step;
    let (fp, fm) = problem.exec.join(|| problem.evaluate(&xp), || problem.evaluate(&xm));
    let (fp, fm) = (fp?.constraints, fm?.constraints);
    Ok([(fp[0] - fm[0]) / (2.0 * step), (fp[1] - fm[1]) / (2.0 * step)])
}

/// Checks the given `(variable, constraint)` pairs, sharing one pair of
/// forward runs per variable.
pub fn check(
    problem: &Problem,
    x: &[f64],
    grad: &Gradients,
    pairs: &[(usize, usize)],
    step: f64,
) -> Result<Vec<GradcheckRow>> {
    let mut vars: Vec<usize> = pairs.iter().map(|p| p.0).collect();
    vars.sort_unstable();
    vars.dedup();
    let fds = problem
        .exec
        .map(&vars, |&i| central_difference(problem, x, i, step))
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
    Ok(pairs
        .iter()
        .map(|&(i, c)| {
            let fd = fds[vars.binary_search(&i).unwrap()][c];
            let adjoint = grad.design[c][i];
            GradcheckRow {
                variable: i,
                constraint: c,
                adjoint,
                fd,
                rel_error: relative_error(adjoint, fd),
            }
        })
        .collect())
}

/// Runs the configured check at the interior point of the initial design.
pub fn run(problem: &Problem) -> Result<(Vec<f64>, Gradients, Vec<GradcheckRow>)> {
    let x = interior_point(&problem.initial_design());
    let (_, grad) = problem.evaluate_with_gradients(&x)?;
    let gc = &problem.config.gradcheck;
    let pairs = select_variables(&grad, gc.variables, gc.seed);
    let rows = check(problem, &x, &grad, &pairs, gc.step)?;
    Ok((x, grad, rows))
}
