//! Structured quad mesh of the duct: inlet channel, design region, outlet
//! channel. Nodes are numbered column by column (`y` fastest) which keeps
//! the global matrix bandwidth proportional to `ny`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Degrees of freedom per node: `u_x`, `u_y`, `p`.
pub const DOFS_PER_NODE: usize = 3;
/// Degrees of freedom per Q4 element.
pub const ELEMENT_DOFS: usize = 4 * DOFS_PER_NODE;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DuctLayout {
    /// Element columns of the (non-designable) inlet channel.
    pub nx_inlet: usize,
    /// Element columns of the design region.
    pub nx_design: usize,
    /// Element columns of the (non-designable) outlet channel.
    pub nx_outlet: usize,
    /// Element rows across the duct height.
    pub ny: usize,
    /// Element edge length in metres.
    pub h: f64,
}

impl Default for DuctLayout {
    fn default() -> Self {
        Self::full()
    }
}

impl DuctLayout {
    /// Reference duct: 0.1 m inlet, 0.3 m design, 0.1 m outlet,
    /// 0.1 m high, 2 mm elements (12500 elements).
    pub fn full() -> Self {
        Self {
            nx_inlet: 50,
            nx_design: 150,
            nx_outlet: 50,
            ny: 50,
            h: 2e-3,
        }
    }

    /// Desk-scale 30 × 15 mesh keeping the 0.1 m duct height.
    pub fn coarse() -> Self {
        Self {
            nx_inlet: 5,
            nx_design: 20,
            nx_outlet: 5,
            ny: 15,
            h: 0.1 / 15.0,
        }
    }

    pub fn nx(&self) -> usize {
        self.nx_inlet + self.nx_design + self.nx_outlet
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.h > 0.0 && self.h.is_finite()) {
            return Err(Error::Config(format!("element size must be positive, got {}", self.h)));
        }
        if self.ny == 0 || self.nx_design == 0 || self.nx() == 0 {
            return Err(Error::Config("mesh needs at least one element row and design column".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub layout: DuctLayout,
    pub nx: usize,
    pub ny: usize,
    pub h: f64,
}

impl Mesh {
    pub fn new(layout: DuctLayout) -> Result<Self> {
        layout.validate()?;
        Ok(Self {
            layout,
            nx: layout.nx(),
            ny: layout.ny,
            h: layout.h,
        })
    }

    pub fn n_nodes(&self) -> usize {
        (self.nx + 1) * (self.ny + 1)
    }

    pub fn n_elements(&self) -> usize {
        self.nx * self.ny
    }

    pub fn n_dofs(&self) -> usize {
        DOFS_PER_NODE * self.n_nodes()
    }

    pub fn length(&self) -> f64 {
        self.nx as f64 * self.h
    }

    pub fn height(&self) -> f64 {
        self.ny as f64 * self.h
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        i * (self.ny + 1) + j
    }

    #[inline]
    pub fn node_ij(&self, n: usize) -> (usize, usize) {
        (n / (self.ny + 1), n % (self.ny + 1))
    }

    pub fn node_coords(&self, n: usize) -> [f64; 2] {
        let (i, j) = self.node_ij(n);
        [i as f64 * self.h, j as f64 * self.h]
    }

    #[inline]
    pub fn element(&self, i: usize, j: usize) -> usize {
        i * self.ny + j
    }

    #[inline]
    pub fn element_ij(&self, e: usize) -> (usize, usize) {
        (e / self.ny, e % self.ny)
    }

    /// Corner nodes counter-clockwise from the lower-left corner.
    pub fn element_nodes(&self, e: usize) -> [usize; 4] {
        let (i, j) = self.element_ij(e);
        [
            self.node(i, j),
            self.node(i + 1, j),
            self.node(i + 1, j + 1),
            self.node(i, j + 1),
        ]
    }

    pub fn element_dofs(&self, e: usize) -> [usize; ELEMENT_DOFS] {
        let nodes = self.element_nodes(e);
        let mut dofs = [0; ELEMENT_DOFS];
        for (a, &n) in nodes.iter().enumerate() {
            for d in 0..DOFS_PER_NODE {
                dofs[DOFS_PER_NODE * a + d] = DOFS_PER_NODE * n + d;
            }
        }
        dofs
    }

    pub fn corner_values(&self, e: usize, field: &[f64]) -> [f64; 4] {
        self.element_nodes(e).map(|n| field[n])
    }

    /// First and last node column of the design region (inclusive).
    pub fn design_node_columns(&self) -> (usize, usize) {
        let i0 = self.layout.nx_inlet;
        (i0, i0 + self.layout.nx_design)
    }

    /// Edges of the left boundary (absorbing inlet carrying the incoming wave).
    pub fn inlet_edges(&self) -> Vec<[usize; 2]> {
        (0..self.ny)
            .map(|j| [self.node(0, j), self.node(0, j + 1)])
            .collect()
    }

    /// Edges of the right boundary (absorbing outlet, also the measurement line).
    pub fn outlet_edges(&self) -> Vec<[usize; 2]> {
        (0..self.ny)
            .map(|j| [self.node(self.nx, j), self.node(self.nx, j + 1)])
            .collect()
    }

    /// Nodes whose displacement is clamped: top and bottom walls of the
    /// design region.
    pub fn clamped_nodes(&self) -> Vec<usize> {
        let (i0, i1) = self.design_node_columns();
        (i0..=i1)
            .flat_map(|i| [self.node(i, 0), self.node(i, self.ny)])
            .collect()
    }

    /// Per-dof flag for clamped displacement components.
    pub fn clamped_dofs(&self) -> Vec<bool> {
        let mut mask = vec![false; self.n_dofs()];
        for n in self.clamped_nodes() {
            mask[DOFS_PER_NODE * n] = true;
            mask[DOFS_PER_NODE * n + 1] = true;
        }
        mask
    }

    #[inline]
    pub fn ux_dof(n: usize) -> usize {
        DOFS_PER_NODE * n
    }

    #[inline]
    pub fn uy_dof(n: usize) -> usize {
        DOFS_PER_NODE * n + 1
    }

    #[inline]
    pub fn p_dof(n: usize) -> usize {
        DOFS_PER_NODE * n + 2
    }
}
