//! Fixed-iteration bound formulation: `min z` s.t. `Φ₁ ≤ z`, `Φ₂ ≤ z`,
//! `0 ≤ s ≤ 1`, solved with MMA.

use crate::error::Result;
use crate::mma::Mma;
use crate::problem::{Evaluation, Problem};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationRecord {
    pub iter: usize,
    /// Bound variable of the MMA subproblem (in the units passed to MMA).
    pub z: f64,
    pub phi1: f64,
    pub phi2: f64,
    pub max_change: f64,
}

pub const ITERATION_HEADER: &[&str] = &["iter", "z", "phi1", "phi2", "max_ds"];

impl IterationRecord {
    pub fn as_row(&self) -> [f64; 5] {
        [self.iter as f64, self.z, self.phi1, self.phi2, self.max_change]
    }
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub design: Vec<f64>,
    pub history: Vec<IterationRecord>,
    pub initial: Evaluation,
    pub last: Evaluation,
}

/// Runs `iterations` MMA steps from `x0`. `observe(k, x, eval)` sees every
/// evaluated iterate; the final design is evaluated once more and logged
/// with `z = NaN`.
pub fn run_optimization(
    problem: &Problem,
    x0: Vec<f64>,
    iterations: usize,
    mut observe: impl FnMut(usize, &[f64], &Evaluation) -> Result<()>,
) -> Result<OptimizationResult> {
    let n = x0.len();
    let opt = &problem.config.optimizer;
    let mut mma = Mma::new(n, 2, opt.mma);
    let (lo, hi) = (vec![0.0; n], vec![1.0; n]);
    let zero = vec![0.0; n];
    let mut x = x0;
    let mut history = Vec::with_capacity(iterations + 1);
    let mut initial = None;
    let mut scale = [1.0, 1.0];
    for k in 0..iterations {
        let (eval, grad) = problem.evaluate_with_gradients(&x)?;
        observe(k, &x, &eval)?;
        if k == 0 && opt.normalize {
            for (s, &f) in scale.iter_mut().zip(&eval.constraints) {
                if f > 0.0 {
                    *s = 1.0 / f;
                }
            }
        }
        let fval = [eval.constraints[0] * scale[0], eval.constraints[1] * scale[1]];
        let dfdx: Vec<Vec<f64>> = grad
            .design
            .iter()
            .zip(scale)
            .map(|(g, s)| g.iter().map(|v| v * s).collect())
            .collect();
        let sol = mma.update(&x, &lo, &hi, &zero, &fval, &dfdx)?;
        let max_change = x.iter().zip(&sol.x).fold(0.0_f64, |a, (p, q)| a.max((p - q).abs()));
        history.push(IterationRecord {
            iter: k,
            z: sol.z,
            phi1: eval.constraints[0],
            phi2: eval.constraints[1],
            max_change,
        });
        if initial.is_none() {
            initial = Some(eval);
        }
        x = sol.x;
    }
    let last = problem.evaluate(&x)?;
    observe(iterations, &x, &last)?;
    history.push(IterationRecord {
        iter: iterations,
        z: f64::NAN,
        phi1: last.constraints[0],
        phi2: last.constraints[1],
        max_change: 0.0,
    });
    Ok(OptimizationResult {
        design: x,
        history,
        initial: initial.unwrap_or_else(|| last.clone()),
        last,
    })
}
