//! Discrete adjoint of the Newmark recurrence.
//!
//! With `Uⁿ = (vⁿ, v̇ⁿ, v̈ⁿ)` the step residuals read `Rⁿ = A Uⁿ + B Uⁿ⁻¹`,
//!
//! ```text
//!     [ K̂    0  0 ]        [ -(a₆M + a₃C)  -(a₄M − a₁C)  a₂C − a₅M ]
//! A = [ -a₃I I  0 ]    B = [  a₃I          -a₁I          -a₂I      ]
//!     [ -a₆I 0  I ]        [  a₆I           a₄I           a₅I      ]
//! ```
//!
//! and `R⁰ = (v⁰, v̇⁰, M v̈⁰ − h⁰)`. The multipliers solve
//! `AᵀΛⁿ = −∂Φ/∂Uⁿ − BᵀΛⁿ⁺¹` backwards in time; only the `v` slot of
//! `∂Φ/∂Uⁿ` is nonzero, on the outlet pressure dofs.

use crate::assembly::{element_matrices, Assembler, ElementMatrices};
use crate::cut::{classify, ElementKind, Phase};
use crate::error::{Error, Result};
use crate::linalg::BandedLu;
use crate::mesh::ELEMENT_DOFS;
use crate::newmark::{State, Stepper};
use crate::par::Execution;

const E2: usize = ELEMENT_DOFS * ELEMENT_DOFS;

/// Relative step of the element-level finite differences.
pub const FD_STEP: f64 = 1e-6;

/// `Λⁿ = (λⁿ, λ̇ⁿ, λ̈ⁿ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    pub l: Vec<f64>,
    pub ld: Vec<f64>,
    pub ldd: Vec<f64>,
}

/// `∂Φ/∂vⁿ = trace_grad[n] · weights`.
#[derive(Debug, Clone, Copy)]
pub struct TraceSeed<'a> {
    pub trace_grad: &'a [f64],
    pub weights: &'a [(usize, f64)],
}

/// Runs the reverse sweep, handing each `(n, Λⁿ)` to `visit` from
/// `n = N−1` down to `0`. Only `Λⁿ⁺¹` is kept in memory.
pub fn reverse_sweep(
    stepper: &Stepper<'_>,
    n_steps: usize,
    seed: TraceSeed<'_>,
    mut visit: impl FnMut(usize, &Multipliers),
) -> Result<()> {
    if seed.trace_grad.len() != n_steps {
        return Err(Error::Dimension {
            what: "adjoint seed length",
            expected: n_steps,
            got: seed.trace_grad.len(),
        });
    }
    if n_steps == 0 {
        return Ok(());
    }
    let sys = stepper.sys;
    let c = stepper.coeffs;
    let n = sys.n_dofs();
    let mut next: Option<Multipliers> = None;
    for step in (0..n_steps).rev() {
        // rhs = −∂Φ/∂Uⁿ − BᵀΛⁿ⁺¹
        let mut r1 = vec![0.0; n];
        let mut r2 = vec![0.0; n];
        let mut r3 = vec![0.0; n];
        for &(d, w) in seed.weights {
            r1[d] -= seed.trace_grad[step] * w;
        }
        if let Some(nx) = &next {
            let mt = sys.m.mul_vec_transpose(&nx.l);
            let ct = sys.c.mul_vec_transpose(&nx.l);
            for i in 0..n {
                let b1 = -(c.a6 * mt[i] + c.a3 * ct[i]) + c.a3 * nx.ld[i] + c.a6 * nx.ldd[i];
                let b2 = -(c.a4 * mt[i] - c.a1 * ct[i]) - c.a1 * nx.ld[i] + c.a4 * nx.ldd[i];
                let b3 = (c.a2 * ct[i] - c.a5 * mt[i]) - c.a2 * nx.ld[i] + c.a5 * nx.ldd[i];
                r1[i] -= b1;
                r2[i] -= b2;
                r3[i] -= b3;
            }
        }
        let lam = if step > 0 {
            let mut rhs = r1;
            for i in 0..n {
                rhs[i] += c.a3 * r2[i] + c.a6 * r3[i];
            }
            stepper.lu.solve_transpose_in_place(&mut rhs);
            Multipliers {
                l: rhs,
                ld: r2,
                ldd: r3,
            }
        } else {
            let ldd = if r3.iter().any(|&x| x != 0.0) {
                BandedLu::factor(&sys.m)?.solve_transpose(&r3)
            } else {
                r3
            };
            Multipliers { l: r1, ld: r2, ldd }
        };
        visit(step, &lam);
        next = Some(lam);
    }
    Ok(())
}

/// Finite-difference derivatives of one element's blocks with respect to
/// its four corner level-set values.
#[derive(Debug, Clone)]
pub struct ElementDerivative {
    pub element: usize,
    pub nodes: [usize; 4],
    pub dofs: [usize; ELEMENT_DOFS],
    pub d: [ElementMatrices; 4],
    /// Set when a perturbation would flip a corner's phase, forcing a
    /// one-sided difference.
    pub one_sided: bool,
}

/// Elements whose blocks depend on the level set: cut elements plus any
/// element with a corner within reach of the FD perturbation.
pub fn sensitive_elements(asm: &Assembler, phi: &[f64]) -> Vec<usize> {
    let delta = FD_STEP * asm.mesh.h;
    (0..asm.mesh.n_elements())
        .filter(|&e| {
            let c = asm.mesh.corner_values(e, phi);
            classify(&c) == ElementKind::Cut || c.iter().any(|v| v.abs() <= 1.5 * delta)
        })
        .collect()
}

pub fn element_derivative(asm: &Assembler, phi: &[f64], e: usize) -> ElementDerivative {
    let mesh = &asm.mesh;
    let delta = FD_STEP * mesh.h;
    let corners = mesh.corner_values(e, phi);
    let eval = |c: &[f64; 4]| element_matrices(c, &asm.materials, mesh.h);
    let mut one_sided = false;
    let d = std::array::from_fn(|j| {
        let mut plus = corners;
        let mut minus = corners;
        plus[j] += delta;
        minus[j] -= delta;
        if Phase::of(plus[j]) == Phase::of(minus[j]) {
            ElementMatrices::difference(&eval(&plus), &eval(&minus), 2.0 * delta)
        } else {
            one_sided = true;
            if Phase::of(corners[j]) == Phase::of(plus[j]) {
                ElementMatrices::difference(&eval(&plus), &eval(&corners), delta)
            } else {
                ElementMatrices::difference(&eval(&corners), &eval(&minus), delta)
            }
        }
    });
    ElementDerivative {
        element: e,
        nodes: mesh.element_nodes(e),
        dofs: mesh.element_dofs(e),
        d,
        one_sided,
    }
}

pub fn element_derivatives(asm: &Assembler, phi: &[f64], exec: Execution) -> Vec<ElementDerivative> {
    let elems = sensitive_elements(asm, phi);
    exec.map(&elems, |&e| element_derivative(asm, phi, e))
}

/// Time-summed outer products `Σ λ xᵀ` restricted to one element.
#[derive(Debug, Clone)]
struct Accumulator {
    gk: [f64; E2],
    gm: [f64; E2],
    gc: [f64; E2],
}

impl Accumulator {
    fn zero() -> Self {
        Self {
            gk: [0.0; E2],
            gm: [0.0; E2],
            gc: [0.0; E2],
        }
    }
}

/// `dΦ/ds̄` on mesh nodes for one adjoint seed.
///
/// `history` holds the forward states `n = 0..N−1`. For `n ≥ 1` the design
/// enters through `r₁ⁿ`, giving
/// `∂K vⁿ + ∂M (a₆Δv − a₄v̇ⁿ⁻¹ − a₅v̈ⁿ⁻¹) + ∂C (a₃Δv + a₁v̇ⁿ⁻¹ + a₂v̈ⁿ⁻¹)`,
/// and for `n = 0` through `∂M v̈⁰` paired with `λ̈⁰`.
pub fn sensitivity(
    stepper: &Stepper<'_>,
    history: &[State],
    derivs: &[ElementDerivative],
    seed: TraceSeed<'_>,
    n_nodes: usize,
    exec: Execution,
) -> Result<Vec<f64>> {
    let c = stepper.coeffs;
    let clamped = &stepper.sys.clamped;
    let mut acc = vec![Accumulator::zero(); derivs.len()];
    reverse_sweep(stepper, history.len(), seed, |n, lam| {
        if n == 0 {
            let a0 = &history[0].a;
            exec.for_each_mut(&mut acc, |k, g| {
                let dofs = &derivs[k].dofs;
                for (i, &di) in dofs.iter().enumerate() {
                    let li = lam.ldd[di];
                    if li == 0.0 {
                        continue;
                    }
                    for (j, &dj) in dofs.iter().enumerate() {
                        g.gm[i * ELEMENT_DOFS + j] += li * a0[dj];
                    }
                }
            });
            return;
        }
        let (cur, prev) = (&history[n], &history[n - 1]);
        exec.for_each_mut(&mut acc, |k, g| {
            let dofs = &derivs[k].dofs;
            let mut xm = [0.0; ELEMENT_DOFS];
            let mut xc = [0.0; ELEMENT_DOFS];
            let mut xk = [0.0; ELEMENT_DOFS];
            for (j, &dj) in dofs.iter().enumerate() {
                let dv = cur.v[dj] - prev.v[dj];
                xk[j] = cur.v[dj];
                xm[j] = c.a6 * dv - c.a4 * prev.w[dj] - c.a5 * prev.a[dj];
                xc[j] = c.a3 * dv + c.a1 * prev.w[dj] + c.a2 * prev.a[dj];
            }
            for (i, &di) in dofs.iter().enumerate() {
                let li = lam.l[di];
                if li == 0.0 {
                    continue;
                }
                let row = i * ELEMENT_DOFS;
                for j in 0..ELEMENT_DOFS {
                    g.gk[row + j] += li * xk[j];
                    g.gm[row + j] += li * xm[j];
                    g.gc[row + j] += li * xc[j];
                }
            }
        });
    })?;

    let per_element: Vec<[f64; 4]> = exec.map_range(derivs.len(), |k| {
        let (d, g) = (&derivs[k], &acc[k]);
        std::array::from_fn(|corner| {
            let dm = &d.d[corner];
            let mut s = 0.0;
            for (i, &di) in d.dofs.iter().enumerate() {
                if clamped[di] {
                    continue;
                }
                for (j, &dj) in d.dofs.iter().enumerate() {
                    if clamped[dj] {
                        continue;
                    }
                    let l = i * ELEMENT_DOFS + j;
                    s += dm.k[l] * g.gk[l] + dm.m[l] * g.gm[l] + dm.c[l] * g.gc[l];
                }
            }
            s
        })
    });
    let mut out = vec![0.0; n_nodes];
    for (d, contrib) in derivs.iter().zip(&per_element) {
        for (node, v) in d.nodes.iter().zip(contrib) {
            out[*node] += v;
        }
    }
    Ok(out)
}
