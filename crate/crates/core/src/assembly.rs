//! Element and global matrices for the stacked displacement/pressure system
//!
//! ```text
//! [M_uu   0  ] [ü]   [C_uu  0  ] [u̇]   [K_uu  S  ] [u]   [0]
//! [-Sᵀ  M_pp ] [p̈] + [ 0   C_pp] [ṗ] + [ 0  K_pp] [p] = [g]
//! ```
//!
//! with `S = ∫_Γ N_uᵀ n_s N_p dΓ` on the cut interface. Both physics live on
//! every node; each is scaled by the contrast `α` in the other's phase.

use serde::{Deserialize, Serialize};

use crate::cut::{element_quadrature, ElementKind, Phase};
use crate::error::{Error, Result};
use crate::linalg::{CsrMatrix, TripletBuilder};
use crate::mesh::{Mesh, ELEMENT_DOFS};
use crate::par::Execution;

const E2: usize = ELEMENT_DOFS * ELEMENT_DOFS;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MaterialParams {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub solid_density: f64,
    pub sound_speed: f64,
    pub air_density: f64,
    pub contrast: f64,
    pub damping_ratio: f64,
    pub omega1: f64,
    pub omega2: f64,
}

impl Default for MaterialParams {
    fn default() -> Self {
        use std::f64::consts::PI;
        Self {
            youngs_modulus: 50e6,
            poisson_ratio: 0.4,
            solid_density: 1000.0,
            sound_speed: 343.0,
            air_density: 1.21,
            contrast: 1e-8,
            damping_ratio: 0.1,
            omega1: 1600.0 * 2.0 * PI,
            omega2: 2200.0 * 2.0 * PI,
        }
    }
}

impl MaterialParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("youngs_modulus", self.youngs_modulus),
            ("solid_density", self.solid_density),
            ("sound_speed", self.sound_speed),
            ("air_density", self.air_density),
            ("contrast", self.contrast),
            ("omega1", self.omega1),
            ("omega2", self.omega2),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.poisson_ratio > 0.0 && self.poisson_ratio < 0.5) {
            return Err(Error::Config(format!(
                "poisson_ratio must lie in (0, 0.5), got {}",
                self.poisson_ratio
            )));
        }
        if !(self.damping_ratio >= 0.0) {
            return Err(Error::Config("damping_ratio must be >= 0".into()));
        }
        Ok(())
    }

    /// Mass-proportional Rayleigh coefficient.
    pub fn alpha_d(&self) -> f64 {
        2.0 * self.damping_ratio * self.omega1 * self.omega2 / (self.omega1 + self.omega2)
    }

    /// Stiffness-proportional Rayleigh coefficient.
    pub fn beta_d(&self) -> f64 {
        2.0 * self.damping_ratio / (self.omega1 + self.omega2)
    }

    pub fn bulk_modulus(&self) -> f64 {
        self.air_density * self.sound_speed * self.sound_speed
    }

    /// Plane-stress constants (D11, D12, D33).
    fn plane_stress(&self) -> (f64, f64, f64) {
        let (e, nu) = (self.youngs_modulus, self.poisson_ratio);
        let d11 = e / (1.0 - nu * nu);
        (d11, nu * d11, e / (2.0 * (1.0 + nu)))
    }

    fn structure_scale(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Solid => 1.0,
            Phase::Acoustic => self.contrast,
        }
    }

    fn acoustic_scale(&self, phase: Phase) -> f64 {
        match phase {
            Phase::Solid => self.contrast,
            Phase::Acoustic => 1.0,
        }
    }
}

/// Dense 12×12 element blocks, row-major, local dof `3·corner + component`.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementMatrices {
    pub m: [f64; E2],
    pub c: [f64; E2],
    pub k: [f64; E2],
}

impl ElementMatrices {
    pub fn zero() -> Self {
        Self {
            m: [0.0; E2],
            c: [0.0; E2],
            k: [0.0; E2],
        }
    }

    /// `(a - b) / scale` blockwise.
    pub fn difference(a: &Self, b: &Self, scale: f64) -> Self {
        let mut out = Self::zero();
        for i in 0..E2 {
            out.m[i] = (a.m[i] - b.m[i]) / scale;
            out.c[i] = (a.c[i] - b.c[i]) / scale;
            out.k[i] = (a.k[i] - b.k[i]) / scale;
        }
        out
    }
}

/// Bilinear shape functions and their physical gradients at `ξ`.
fn shape(xi: [f64; 2], h: f64) -> ([f64; 4], [f64; 4], [f64; 4]) {
    let [x, y] = xi;
    let n = [(1.0 - x) * (1.0 - y), x * (1.0 - y), x * y, (1.0 - x) * y];
    let dx = [-(1.0 - y) / h, (1.0 - y) / h, y / h, -y / h];
    let dy = [-(1.0 - x) / h, -x / h, x / h, (1.0 - x) / h];
    (n, dx, dy)
}

/// Integrates the element blocks for corner level-set values `phi`.
pub fn element_matrices(phi: &[f64; 4], mat: &MaterialParams, h: f64) -> ElementMatrices {
    let q = element_quadrature(phi, h);
    let (d11, d12, d33) = mat.plane_stress();
    let inv_k = 1.0 / mat.bulk_modulus();
    let inv_rho = 1.0 / mat.air_density;
    let mut muu = [0.0; E2];
    let mut kuu = [0.0; E2];
    let mut out = ElementMatrices::zero();
    let at = |i: usize, j: usize| i * ELEMENT_DOFS + j;

    for p in &q.area {
        let (n, dx, dy) = shape(p.xi, h);
        let ws = p.weight * mat.structure_scale(p.phase);
        let wa = p.weight * mat.acoustic_scale(p.phase);
        for a in 0..4 {
            for b in 0..4 {
                let (ux_a, uy_a, p_a) = (3 * a, 3 * a + 1, 3 * a + 2);
                let (ux_b, uy_b, p_b) = (3 * b, 3 * b + 1, 3 * b + 2);
                let nn = n[a] * n[b];
                muu[at(ux_a, ux_b)] += ws * mat.solid_density * nn;
                muu[at(uy_a, uy_b)] += ws * mat.solid_density * nn;
                kuu[at(ux_a, ux_b)] += ws * (d11 * dx[a] * dx[b] + d33 * dy[a] * dy[b]);
                kuu[at(ux_a, uy_b)] += ws * (d12 * dx[a] * dy[b] + d33 * dy[a] * dx[b]);
                kuu[at(uy_a, ux_b)] += ws * (d12 * dy[a] * dx[b] + d33 * dx[a] * dy[b]);
                kuu[at(uy_a, uy_b)] += ws * (d11 * dy[a] * dy[b] + d33 * dx[a] * dx[b]);
                out.m[at(p_a, p_b)] += wa * inv_k * nn;
                out.k[at(p_a, p_b)] += wa * inv_rho * (dx[a] * dx[b] + dy[a] * dy[b]);
            }
        }
    }

    for p in &q.interface {
        let (n, _, _) = shape(p.xi, h);
        for a in 0..4 {
            for b in 0..4 {
                for d in 0..2 {
                    let s = p.weight * n[a] * p.normal[d] * n[b];
                    out.k[at(3 * a + d, 3 * b + 2)] += s;
                    out.m[at(3 * b + 2, 3 * a + d)] -= s;
                }
            }
        }
    }

    let (ad, bd) = (mat.alpha_d(), mat.beta_d());
    for i in 0..E2 {
        out.m[i] += muu[i];
        out.k[i] += kuu[i];
        out.c[i] = ad * muu[i] + bd * kuu[i];
    }
    out
}

/// Assembled system with clamped rows/columns replaced by identity in `K`
/// and `M` and zero in `C`.
#[derive(Debug, Clone)]
pub struct SystemMatrices {
    pub m: CsrMatrix,
    pub c: CsrMatrix,
    pub k: CsrMatrix,
    /// Inlet source shape; the load is `source · dp_in/dt`.
    pub source: Vec<f64>,
    pub clamped: Vec<bool>,
}

impl SystemMatrices {
    pub fn n_dofs(&self) -> usize {
        self.source.len()
    }

    pub fn load(&self, dp_in: f64) -> Vec<f64> {
        self.source.iter().map(|g| g * dp_in).collect()
    }

    /// `K̂ = K + a₆M + a₃C`; the three matrices share one pattern.
    pub fn effective_stiffness(&self, a3: f64, a6: f64) -> CsrMatrix {
        combine(&[(1.0, &self.k), (a6, &self.m), (a3, &self.c)])
    }
}

/// Linear combination of matrices; fast path when all patterns coincide.
pub fn combine(terms: &[(f64, &CsrMatrix)]) -> CsrMatrix {
    let (_, first) = terms[0];
    let same = terms.iter().all(|(_, m)| {
        m.nnz() == first.nnz()
            && m.nrows() == first.nrows()
            && (0..m.nrows()).all(|i| m.row(i).map(|(j, _)| j).eq(first.row(i).map(|(j, _)| j)))
    });
    if !same {
        return CsrMatrix::linear_combination(terms);
    }
    let mut out = first.zeroed();
    for (c, m) in terms {
        for (o, v) in out.values_mut().iter_mut().zip(m.values()) {
            *o += c * v;
        }
    }
    out
}

/// Design-independent absorbing-boundary terms and the fixed sparsity
/// pattern; reused for every design evaluation.
#[derive(Debug, Clone)]
pub struct Assembler {
    pub mesh: Mesh,
    pub materials: MaterialParams,
    pattern: CsrMatrix,
    scatter: Vec<usize>,
    solid: ElementMatrices,
    acoustic: ElementMatrices,
    absorbing: Vec<(usize, f64)>,
    source: Vec<f64>,
    clamped: Vec<bool>,
}

impl Assembler {
    pub fn new(mesh: Mesh, materials: MaterialParams) -> Result<Self> {
        materials.validate()?;
        let n = mesh.n_dofs();
        let mut b = TripletBuilder::with_capacity(n, n, mesh.n_elements() * E2);
        for e in 0..mesh.n_elements() {
            let dofs = mesh.element_dofs(e);
            for &i in &dofs {
                for &j in &dofs {
                    b.push(i, j, 0.0);
                }
            }
        }
        let pattern = b.build()?;
        let mut scatter = Vec::with_capacity(mesh.n_elements() * E2);
        for e in 0..mesh.n_elements() {
            let dofs = mesh.element_dofs(e);
            for &i in &dofs {
                for &j in &dofs {
                    scatter.push(pattern.position(i, j).expect("element pair in pattern"));
                }
            }
        }

        let h = mesh.h;
        let zc = 1.0 / (materials.air_density * materials.sound_speed);
        let mut absorbing = Vec::new();
        let mut source = vec![0.0; n];
        for (edges, inlet) in [(mesh.inlet_edges(), true), (mesh.outlet_edges(), false)] {
            for [a, b] in edges {
                let (pa, pb) = (Mesh::p_dof(a), Mesh::p_dof(b));
                let diag = zc * h / 3.0;
                let off = zc * h / 6.0;
                for (i, j, v) in [(pa, pa, diag), (pb, pb, diag), (pa, pb, off), (pb, pa, off)] {
                    absorbing.push((pattern.position(i, j).expect("edge pair in pattern"), v));
                }
                if inlet {
                    source[pa] += 2.0 * zc * h / 2.0;
                    source[pb] += 2.0 * zc * h / 2.0;
                }
            }
        }

        let solid = element_matrices(&[1.0; 4], &materials, h);
        let acoustic = element_matrices(&[-1.0; 4], &materials, h);
        let clamped = mesh.clamped_dofs();
        Ok(Self {
            mesh,
            materials,
            pattern,
            scatter,
            solid,
            acoustic,
            absorbing,
            source,
            clamped,
        })
    }

    pub fn clamped(&self) -> &[bool] {
        &self.clamped
    }

    pub fn source(&self) -> &[f64] {
        &self.source
    }

    /// Element blocks, using the cached uncut matrices when possible.
    pub fn element(&self, phi: &[f64; 4]) -> std::borrow::Cow<'_, ElementMatrices> {
        use std::borrow::Cow;
        match crate::cut::classify(phi) {
            ElementKind::Solid => Cow::Borrowed(&self.solid),
            ElementKind::Acoustic => Cow::Borrowed(&self.acoustic),
            ElementKind::Cut => Cow::Owned(element_matrices(phi, &self.materials, self.mesh.h)),
        }
    }

    /// Assembles `M`, `C`, `K` for the nodal level set `phi`.
    pub fn assemble(&self, phi: &[f64], exec: Execution) -> Result<SystemMatrices> {
        if phi.len() != self.mesh.n_nodes() {
            return Err(Error::Dimension {
                what: "level-set field",
                expected: self.mesh.n_nodes(),
                got: phi.len(),
            });
        }
        let cut: Vec<Option<ElementMatrices>> = exec.map_range(self.mesh.n_elements(), |e| {
            let corners = self.mesh.corner_values(e, phi);
            match crate::cut::classify(&corners) {
                ElementKind::Cut => Some(element_matrices(&corners, &self.materials, self.mesh.h)),
                _ => None,
            }
        });
        let mut m = self.pattern.zeroed();
        let mut c = self.pattern.zeroed();
        let mut k = self.pattern.zeroed();
        for (e, local) in cut.iter().enumerate() {
            let block = match local {
                Some(b) => b,
                None => match crate::cut::classify(&self.mesh.corner_values(e, phi)) {
                    ElementKind::Solid => &self.solid,
                    _ => &self.acoustic,
                },
            };
            let pos = &self.scatter[e * E2..(e + 1) * E2];
            for (l, &g) in pos.iter().enumerate() {
                m.values_mut()[g] += block.m[l];
                c.values_mut()[g] += block.c[l];
                k.values_mut()[g] += block.k[l];
            }
        }
        for &(g, v) in &self.absorbing {
            c.values_mut()[g] += v;
        }
        apply_dirichlet(&mut m, &self.clamped, 1.0);
        apply_dirichlet(&mut c, &self.clamped, 0.0);
        apply_dirichlet(&mut k, &self.clamped, 1.0);
        Ok(SystemMatrices {
            m,
            c,
            k,
            source: self.source.clone(),
            clamped: self.clamped.clone(),
        })
    }

    /// Element dof indices, for scattering derivative contributions.
    pub fn element_dofs(&self, e: usize) -> [usize; ELEMENT_DOFS] {
        self.mesh.element_dofs(e)
    }
}

/// Zeroes clamped rows and columns and puts `diag` on their diagonal.
pub fn apply_dirichlet(a: &mut CsrMatrix, clamped: &[bool], diag: f64) {
    let rows: Vec<Vec<usize>> = (0..a.nrows())
        .map(|i| a.row(i).map(|(j, _)| j).collect())
        .collect();
    let mut pos = 0;
    let vals = a.values_mut();
    for (i, cols) in rows.iter().enumerate() {
        for &j in cols {
            if clamped[i] || clamped[j] {
                vals[pos] = if i == j { diag } else { 0.0 };
            }
            pos += 1;
        }
    }
}
