//! Newmark time integration with one factorization of `K̂` shared by every
//! step. The same factorization later serves the adjoint's transpose solves.

use crate::assembly::SystemMatrices;
use crate::error::{Error, Result};
use crate::linalg::{norm, BandedLu, CsrMatrix};
use crate::par::Execution;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NewmarkParams {
    pub beta: f64,
    pub gamma: f64,
    pub dt: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
    pub a5: f64,
    pub a6: f64,
}

impl NewmarkParams {
    /// Average-acceleration (trapezoidal) member of the family.
    pub fn trapezoidal(dt: f64) -> Self {
        Self {
            beta: 0.25,
            gamma: 0.5,
            dt,
        }
    }

    pub fn coefficients(&self) -> Coefficients {
        let (b, g, dt) = (self.beta, self.gamma, self.dt);
        Coefficients {
            a1: 1.0 - g / b,
            a2: (1.0 - g / (2.0 * b)) * dt,
            a3: g / (b * dt),
            a4: 1.0 / (b * dt),
            a5: 1.0 / (2.0 * b) - 1.0,
            a6: 1.0 / (b * dt * dt),
        }
    }
}

/// `(v, v̇, v̈)` at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub v: Vec<f64>,
    pub w: Vec<f64>,
    pub a: Vec<f64>,
}

impl State {
    pub fn zeros(n: usize) -> Self {
        Self {
            v: vec![0.0; n],
            w: vec![0.0; n],
            a: vec![0.0; n],
        }
    }
}

/// Relative residuals of the three step equations.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepResiduals {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

impl StepResiduals {
    pub fn max(&self) -> f64 {
        self.r1.max(self.r2).max(self.r3)
    }
}

#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    pub sys: &'a SystemMatrices,
    pub coeffs: Coefficients,
    pub khat: CsrMatrix,
    pub lu: BandedLu,
    exec: Execution,
}

const REFINE_TOL: f64 = 1e-10;

impl<'a> Stepper<'a> {
    pub fn new(sys: &'a SystemMatrices, params: NewmarkParams, exec: Execution) -> Result<Self> {
        if !(params.dt > 0.0 && params.dt.is_finite()) {
            return Err(Error::Config(format!("time step must be positive, got {}", params.dt)));
        }
        let coeffs = params.coefficients();
        let khat = sys.effective_stiffness(coeffs.a3, coeffs.a6);
        let lu = BandedLu::factor(&khat)?;
        Ok(Self {
            sys,
            coeffs,
            khat,
            lu,
            exec,
        })
    }

    /// Zero displacement and velocity; acceleration from `M v̈⁰ = h⁰`.
    pub fn initial(&self, h0: &[f64]) -> Result<State> {
        let n = self.sys.n_dofs();
        let mut s = State::zeros(n);
        if h0.iter().any(|&x| x != 0.0) {
            s.a = solve_refined(&self.sys.m, &BandedLu::factor(&self.sys.m)?, h0);
        }
        Ok(s)
    }

    /// Right-hand side `ĥⁿ` from the previous state and the load `hⁿ`.
    pub fn effective_load(&self, prev: &State, h: &[f64]) -> Vec<f64> {
        let c = &self.coeffs;
        let xm: Vec<f64> = (0..h.len())
            .map(|i| c.a4 * prev.w[i] + c.a5 * prev.a[i] + c.a6 * prev.v[i])
            .collect();
        let xc: Vec<f64> = (0..h.len())
            .map(|i| -c.a1 * prev.w[i] - c.a2 * prev.a[i] + c.a3 * prev.v[i])
            .collect();
        let (mx, cx) = self
            .exec
            .join(|| self.sys.m.mul_vec(&xm), || self.sys.c.mul_vec(&xc));
        (0..h.len()).map(|i| h[i] + mx[i] + cx[i]).collect()
    }

    pub fn step(&self, prev: &State, h: &[f64]) -> State {
        let c = &self.coeffs;
        let rhs = self.effective_load(prev, h);
        let v = solve_refined(&self.khat, &self.lu, &rhs);
        let n = v.len();
        let mut w = vec![0.0; n];
        let mut a = vec![0.0; n];
        for i in 0..n {
            let dv = v[i] - prev.v[i];
            w[i] = c.a1 * prev.w[i] + c.a2 * prev.a[i] + c.a3 * dv;
            a[i] = -c.a4 * prev.w[i] - c.a5 * prev.a[i] + c.a6 * dv;
        }
        State { v, w, a }
    }

    /// Residuals of the step equations for a produced state.
    pub fn residuals(&self, prev: &State, next: &State, h: &[f64]) -> StepResiduals {
        let c = &self.coeffs;
        let rhs = self.effective_load(prev, h);
        let kv = self.khat.mul_vec(&next.v);
        let r1: Vec<f64> = kv.iter().zip(&rhs).map(|(a, b)| a - b).collect();
        let n = next.v.len();
        let mut r2 = vec![0.0; n];
        let mut r3 = vec![0.0; n];
        let (mut s2, mut s3) = (0.0f64, 0.0f64);
        for i in 0..n {
            let dv = next.v[i] - prev.v[i];
            let t2 = [c.a1 * prev.w[i], c.a2 * prev.a[i], c.a3 * dv];
            let t3 = [-c.a4 * prev.w[i], -c.a5 * prev.a[i], c.a6 * dv];
            r2[i] = next.w[i] - t2.iter().sum::<f64>();
            r3[i] = next.a[i] - t3.iter().sum::<f64>();
            s2 = s2.max(t2.iter().map(|x| x.abs()).sum::<f64>());
            s3 = s3.max(t3.iter().map(|x| x.abs()).sum::<f64>());
        }
        let rel = |r: &[f64], s: f64| {
            let nr = norm(r);
            if nr == 0.0 {
                0.0
            } else {
                nr / (s * (n as f64).sqrt()).max(f64::MIN_POSITIVE)
            }
        };
        let nh = norm(&rhs);
        StepResiduals {
            r1: if nh == 0.0 { norm(&r1) } else { norm(&r1) / nh },
            r2: rel(&r2, s2),
            r3: rel(&r3, s3),
        }
    }
}

/// Direct solve with one step of iterative refinement when needed.
fn solve_refined(a: &CsrMatrix, lu: &BandedLu, b: &[f64]) -> Vec<f64> {
    let mut x = lu.solve(b);
    let nb = norm(b);
    if nb == 0.0 {
        return x;
    }
    let ax = a.mul_vec(&x);
    let r: Vec<f64> = b.iter().zip(&ax).map(|(p, q)| p - q).collect();
    if norm(&r) / nb > REFINE_TOL {
        let dx = lu.solve(&r);
        x.iter_mut().zip(&dx).for_each(|(x, d)| *x += d);
    }
    x
}

#[derive(Debug, Clone, Default)]
pub struct TransientOptions {
    /// Keep every state for a later adjoint sweep.
    pub store_history: bool,
    /// Evaluate and record the step residuals.
    pub check_residuals: bool,
}

#[derive(Debug, Clone)]
pub struct Transient {
    /// Observed scalar `Σ weights · vⁿ` at every stored time level.
    pub trace: Vec<f64>,
    pub history: Vec<State>,
    pub residuals: Vec<StepResiduals>,
}

/// Integrates from rest for `dp_in.len()` time levels (`n = 0..N-1`), with
/// load `hⁿ = source · dp_in[n]`.
pub fn run_transient(
    stepper: &Stepper<'_>,
    dp_in: &[f64],
    observe: &[(usize, f64)],
    opts: &TransientOptions,
) -> Result<Transient> {
    let sys = stepper.sys;
    let measure = |s: &State| observe.iter().map(|&(d, w)| w * s.v[d]).sum::<f64>();
    let mut out = Transient {
        trace: Vec::with_capacity(dp_in.len()),
        history: Vec::new(),
        residuals: Vec::new(),
    };
    if dp_in.is_empty() {
        return Ok(out);
    }
    let mut state = stepper.initial(&sys.load(dp_in[0]))?;
    out.trace.push(measure(&state));
    for (n, &dp) in dp_in.iter().enumerate().skip(1) {
        let h = sys.load(dp);
        let next = stepper.step(&state, &h);
        if next.v.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite { step: n });
        }
        if opts.check_residuals {
            out.residuals.push(stepper.residuals(&state, &next, &h));
        }
        out.trace.push(measure(&next));
        let prev = std::mem::replace(&mut state, next);
        if opts.store_history {
            out.history.push(prev);
        }
    }
    if opts.store_history {
        out.history.push(state);
    }
    Ok(out)
}
