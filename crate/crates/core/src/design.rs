//! Design parameterization: mathematical variables `s ∈ [0,1]` on the
//! design-region nodes are mapped to the physical level set `s̄` by
//!
//! ```text
//! s --bounds--> s̃ --node→cell--> s̃_c --PDE filter--> s̄_c --cell→node--> s̄
//! ```
//!
//! Every stage is affine, and [`DesignChain::transpose`] applies the
//! transposed linear parts in reverse order.

use crate::error::{Error, Result};
use crate::linalg::{BandedLu, CsrMatrix, TripletBuilder};
use crate::mesh::Mesh;

/// Relative offset applied to level-set values that are exactly zero, so
/// every node is unambiguously solid or acoustic.
pub const ZERO_SNAP: f64 = 1e-10;

/// Node/cell indexing of a structured `ncx × ncy` cell grid; nodes are
/// numbered column by column like the mesh.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CellGrid {
    pub ncx: usize,
    pub ncy: usize,
}

impl CellGrid {
    pub fn new(ncx: usize, ncy: usize) -> Self {
        Self { ncx, ncy }
    }

    pub fn n_nodes(&self) -> usize {
        (self.ncx + 1) * (self.ncy + 1)
    }

    pub fn n_cells(&self) -> usize {
        self.ncx * self.ncy
    }

    #[inline]
    pub fn node(&self, i: usize, j: usize) -> usize {
        i * (self.ncy + 1) + j
    }

    #[inline]
    pub fn cell(&self, i: usize, j: usize) -> usize {
        i * self.ncy + j
    }

    fn cell_corners(&self, c: usize) -> [usize; 4] {
        let (i, j) = (c / self.ncy, c % self.ncy);
        [
            self.node(i, j),
            self.node(i + 1, j),
            self.node(i + 1, j + 1),
            self.node(i, j + 1),
        ]
    }

    /// Number of cells touching each node (4 interior, 2 edge, 1 corner).
    fn node_valence(&self) -> Vec<f64> {
        let mut count = vec![0.0; self.n_nodes()];
        for c in 0..self.n_cells() {
            for n in self.cell_corners(c) {
                count[n] += 1.0;
            }
        }
        count
    }

    /// Cell value = mean of its four corners.
    pub fn node_to_cell(&self, nodal: &[f64]) -> Vec<f64> {
        assert_eq!(nodal.len(), self.n_nodes());
        (0..self.n_cells())
            .map(|c| 0.25 * self.cell_corners(c).iter().map(|&n| nodal[n]).sum::<f64>())
            .collect()
    }

    pub fn node_to_cell_transpose(&self, cell: &[f64]) -> Vec<f64> {
        assert_eq!(cell.len(), self.n_cells());
        let mut out = vec![0.0; self.n_nodes()];
        for (c, &v) in cell.iter().enumerate() {
            for n in self.cell_corners(c) {
                out[n] += 0.25 * v;
            }
        }
        out
    }

    /// Node value = mean of the cells that touch it.
    pub fn cell_to_node(&self, cell: &[f64]) -> Vec<f64> {
        assert_eq!(cell.len(), self.n_cells());
        let count = self.node_valence();
        let mut out = vec![0.0; self.n_nodes()];
        for (c, &v) in cell.iter().enumerate() {
            for n in self.cell_corners(c) {
                out[n] += v;
            }
        }
        out.iter_mut().zip(&count).for_each(|(o, k)| *o /= k);
        out
    }

    pub fn cell_to_node_transpose(&self, nodal: &[f64]) -> Vec<f64> {
        assert_eq!(nodal.len(), self.n_nodes());
        let count = self.node_valence();
        (0..self.n_cells())
            .map(|c| {
                self.cell_corners(c)
                    .iter()
                    .map(|&n| nodal[n] / count[n])
                    .sum()
            })
            .collect()
    }
}

/// `s̃ = h (s - 1/2)`. Values outside `[0, 1]` are rejected, not clamped.
pub fn map_bounds(s: &[f64], h: f64) -> Result<Vec<f64>> {
    s.iter()
        .enumerate()
        .map(|(index, &value)| {
            if (0.0..=1.0).contains(&value) {
                Ok(h * (value - 0.5))
            } else {
                Err(Error::DesignOutOfRange { index, value })
            }
        })
        .collect()
}

pub fn map_bounds_transpose(g: &[f64], h: f64) -> Vec<f64> {
    g.iter().map(|v| h * v).collect()
}

/// Helmholtz-type smoothing `-r² ∇² x + x = b` on the cell grid,
/// finite-volume five-point stencil with zero-flux boundaries.
///
/// The operator is symmetric with unit row sums, so it preserves constants
/// and totals, and its transpose solve is the same solve.
#[derive(Debug, Clone)]
pub struct PdeFilter {
    grid: CellGrid,
    radius: f64,
    lu: Option<BandedLu>,
}

impl PdeFilter {
    pub fn new(grid: CellGrid, radius: f64, h: f64) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::Config(format!("filter radius must be >= 0, got {radius}")));
        }
        let lu = if radius == 0.0 {
            None
        } else {
            let a = Self::operator(grid, radius, h);
            Some(BandedLu::factor(&a).expect("filter operator is diagonally dominant"))
        };
        Ok(Self { grid, radius, lu })
    }

    pub fn operator(grid: CellGrid, radius: f64, h: f64) -> CsrMatrix {
        let k = (radius / h).powi(2);
        let mut b = TripletBuilder::new(grid.n_cells(), grid.n_cells());
        for i in 0..grid.ncx {
            for j in 0..grid.ncy {
                let c = grid.cell(i, j);
                let mut diag = 1.0;
                let mut neighbours = Vec::with_capacity(4);
                if i > 0 {
                    neighbours.push(grid.cell(i - 1, j));
                }
                if i + 1 < grid.ncx {
                    neighbours.push(grid.cell(i + 1, j));
                }
                if j > 0 {
                    neighbours.push(grid.cell(i, j - 1));
                }
                if j + 1 < grid.ncy {
                    neighbours.push(grid.cell(i, j + 1));
                }
                for nb in neighbours {
                    diag += k;
                    b.push(c, nb, -k);
                }
                b.push(c, c, diag);
            }
        }
        b.build().expect("indices in range")
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn apply(&self, cell: &[f64]) -> Vec<f64> {
        assert_eq!(cell.len(), self.grid.n_cells());
        match &self.lu {
            None => cell.to_vec(),
            Some(lu) => lu.solve(cell),
        }
    }

    pub fn apply_transpose(&self, cell: &[f64]) -> Vec<f64> {
        match &self.lu {
            None => cell.to_vec(),
            Some(lu) => lu.solve_transpose(cell),
        }
    }
}

/// Intermediate fields of one pass through the chain.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignFields {
    pub s_tilde: Vec<f64>,
    pub s_tilde_c: Vec<f64>,
    pub s_bar_c: Vec<f64>,
    pub s_bar: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct DesignChain {
    pub grid: CellGrid,
    pub h: f64,
    pub filter: PdeFilter,
}

impl DesignChain {
    pub fn new(grid: CellGrid, h: f64, radius: f64) -> Result<Self> {
        Ok(Self {
            grid,
            h,
            filter: PdeFilter::new(grid, radius, h)?,
        })
    }

    pub fn forward(&self, s: &[f64]) -> Result<DesignFields> {
        if s.len() != self.grid.n_nodes() {
            return Err(Error::Dimension {
                what: "design variables",
                expected: self.grid.n_nodes(),
                got: s.len(),
            });
        }
        let s_tilde = map_bounds(s, self.h)?;
        let s_tilde_c = self.grid.node_to_cell(&s_tilde);
        let s_bar_c = self.filter.apply(&s_tilde_c);
        let s_bar = self.grid.cell_to_node(&s_bar_c);
        Ok(DesignFields {
            s_tilde,
            s_tilde_c,
            s_bar_c,
            s_bar,
        })
    }

    /// Pulls `dΦ/ds̄` back to `dΦ/ds`.
    pub fn transpose(&self, d_sbar: &[f64]) -> Vec<f64> {
        let g = self.grid.cell_to_node_transpose(d_sbar);
        let g = self.filter.apply_transpose(&g);
        let g = self.grid.node_to_cell_transpose(&g);
        map_bounds_transpose(&g, self.h)
    }
}

/// Embeds the design region into the full duct mesh.
///
/// Design variables live on every node of the design region, but only the
/// interior node columns are free; the inlet/outlet-facing columns are
/// frozen at `s = 0`. Every frozen or non-design node carries the fully
/// acoustic level set `-h/2`.
#[derive(Debug, Clone)]
pub struct Parameterization {
    pub chain: DesignChain,
    first_column: usize,
    mesh_ny: usize,
    mesh_nodes: usize,
    designable: Vec<bool>,
    free: Vec<usize>,
}

impl Parameterization {
    pub fn new(mesh: &Mesh, filter_radius: f64) -> Result<Self> {
        let grid = CellGrid::new(mesh.layout.nx_design, mesh.ny);
        let chain = DesignChain::new(grid, mesh.h, filter_radius)?;
        let mut designable = vec![false; grid.n_nodes()];
        for i in 1..grid.ncx {
            for j in 0..=grid.ncy {
                designable[grid.node(i, j)] = true;
            }
        }
        let free = (0..grid.n_nodes()).filter(|&k| designable[k]).collect();
        Ok(Self {
            chain,
            first_column: mesh.layout.nx_inlet,
            mesh_ny: mesh.ny,
            mesh_nodes: mesh.n_nodes(),
            designable,
            free,
        })
    }

    pub fn grid(&self) -> CellGrid {
        self.chain.grid
    }

    pub fn h(&self) -> f64 {
        self.chain.h
    }

    pub fn n_design_nodes(&self) -> usize {
        self.chain.grid.n_nodes()
    }

    /// Indices (into the design-node vector) of the free variables.
    pub fn free_indices(&self) -> &[usize] {
        &self.free
    }

    pub fn is_designable(&self, k: usize) -> bool {
        self.designable[k]
    }

    /// Level-set value of fully acoustic (frozen) nodes.
    pub fn frozen_value(&self) -> f64 {
        -0.5 * self.chain.h
    }

    /// Mesh node index of design node `k`.
    pub fn mesh_node(&self, k: usize) -> usize {
        let g = self.chain.grid;
        let (i, j) = (k / (g.ncy + 1), k % (g.ncy + 1));
        (self.first_column + i) * (self.mesh_ny + 1) + j
    }

    /// Local design-region coordinates of design node `k`.
    pub fn local_coords(&self, k: usize) -> [f64; 2] {
        let g = self.chain.grid;
        let (i, j) = (k / (g.ncy + 1), k % (g.ncy + 1));
        [i as f64 * self.chain.h, j as f64 * self.chain.h]
    }

    /// Expands free variables into a full design-node vector (frozen = 0).
    pub fn unpack(&self, free: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.n_design_nodes()];
        for (&k, &v) in self.free.iter().zip(free) {
            s[k] = v;
        }
        s
    }

    pub fn pack(&self, s: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&k| s[k]).collect()
    }

    /// Physical level set on every mesh node, exact zeros snapped to the
    /// solid side.
    pub fn physical_field(&self, s: &[f64]) -> Result<Vec<f64>> {
        let fields = self.chain.forward(s)?;
        Ok(self.embed(&fields.s_bar))
    }

    pub fn embed(&self, s_bar_design: &[f64]) -> Vec<f64> {
        let mut full = vec![self.frozen_value(); self.mesh_nodes];
        for (k, &v) in s_bar_design.iter().enumerate() {
            if self.designable[k] {
                full[self.mesh_node(k)] = v;
            }
        }
        snap_zeros(&mut full, self.chain.h);
        full
    }

    /// Fully acoustic level set (the empty duct).
    pub fn empty_field(&self) -> Vec<f64> {
        vec![self.frozen_value(); self.mesh_nodes]
    }

    /// `dΦ/ds` on design nodes from `dΦ/ds̄` on mesh nodes; zero on frozen nodes.
    pub fn design_gradient(&self, d_sbar_mesh: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.n_design_nodes()];
        for (k, gk) in g.iter_mut().enumerate() {
            if self.designable[k] {
                *gk = d_sbar_mesh[self.mesh_node(k)];
            }
        }
        let mut out = self.chain.transpose(&g);
        for (k, o) in out.iter_mut().enumerate() {
            if !self.designable[k] {
                *o = 0.0;
            }
        }
        out
    }
}

pub fn snap_zeros(field: &mut [f64], h: f64) {
    for v in field.iter_mut() {
        if *v == 0.0 {
            *v = ZERO_SNAP * h;
        }
    }
}

/// Array-of-inclusions initial guess: `s_v = cos(r₁πx/l_x)·cos(r₂πy/l_y) + 0.1`
/// with `s = 0` where `s_v ≥ threshold` and `s = 1` elsewhere. Frozen nodes
/// stay at zero.
pub fn init_design(
    param: &Parameterization,
    r1: f64,
    r2: f64,
    lx: f64,
    ly: f64,
    threshold: f64,
) -> Vec<f64> {
    (0..param.n_design_nodes())
        .map(|k| {
            if !param.is_designable(k) {
                return 0.0;
            }
            let [x, y] = param.local_coords(k);
            let sv = indicator(x, y, r1, r2, lx, ly);
            if sv >= threshold {
                0.0
            } else {
                1.0
            }
        })
        .collect()
}

pub fn indicator(x: f64, y: f64, r1: f64, r2: f64, lx: f64, ly: f64) -> f64 {
    use std::f64::consts::PI;
    (r1 * PI * x / lx).cos() * (r2 * PI * y / ly).cos() + 0.1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::DuctLayout;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn map_bounds_examples() {
        let h = 2e-3;
        let st = map_bounds(&[0.5, 1.0, 0.0], h).unwrap();
        assert_eq!(st[0], 0.0);
        assert!((st[1] - 1e-3).abs() < 1e-18);
        assert!((st[2] + 1e-3).abs() < 1e-18);
        assert!(matches!(
            map_bounds(&[0.2, 1.5], h),
            Err(Error::DesignOutOfRange { index: 1, .. })
        ));
        assert!(map_bounds(&[-1e-12], h).is_err());
    }

    #[test]
    fn node_to_cell_examples() {
        let g = CellGrid::new(1, 1);
        // corners in node numbering (0,0),(0,1),(1,0),(1,1)
        assert_eq!(g.node_to_cell(&[0.0, 0.0, 0.0, 4.0]), vec![1.0]);
        let g = CellGrid::new(3, 2);
        assert!(g.node_to_cell(&vec![2.5; g.n_nodes()]).iter().all(|&v| v == 2.5));
        // f(x, y) = x on unit spacing: cell value equals the centroid x
        let nodal: Vec<f64> = (0..g.n_nodes()).map(|n| (n / 3) as f64).collect();
        let cells = g.node_to_cell(&nodal);
        for i in 0..3 {
            for j in 0..2 {
                assert_eq!(cells[g.cell(i, j)], i as f64 + 0.5);
            }
        }
    }

    #[test]
    fn cell_to_node_examples() {
        let g = CellGrid::new(2, 2);
        // interior node (1,1) touches cells (0,0),(0,1),(1,0),(1,1)
        let cells = vec![1.0, 2.0, 3.0, 6.0];
        let nodal = g.cell_to_node(&cells);
        assert_eq!(nodal[g.node(1, 1)], 3.0);
        assert_eq!(nodal[g.node(0, 0)], 1.0);
        assert_eq!(nodal[g.node(2, 2)], 6.0);
        assert_eq!(nodal[g.node(0, 1)], 1.5);
        assert!(g.cell_to_node(&[7.0; 4]).iter().all(|&v| v == 7.0));
    }

    #[test]
    fn filter_preserves_constants_and_identity_at_zero_radius() {
        let g = CellGrid::new(6, 5);
        let f = PdeFilter::new(g, 0.3, 0.1).unwrap();
        for v in f.apply(&vec![3.0; g.n_cells()]) {
            assert!((v - 3.0).abs() < 1e-13);
        }
        let f0 = PdeFilter::new(g, 0.0, 0.1).unwrap();
        let x: Vec<f64> = (0..g.n_cells()).map(|i| (i as f64).cos()).collect();
        assert_eq!(f0.apply(&x), x);
        assert!(PdeFilter::new(g, -1.0, 0.1).is_err());
    }

    #[test]
    fn filter_spike_is_smoothed_positive_and_conserved() {
        let g = CellGrid::new(21, 21);
        let h = 1.0;
        let f = PdeFilter::new(g, 4.0 * h, h).unwrap();
        let mut spike = vec![0.0; g.n_cells()];
        spike[g.cell(10, 10)] = 1.0;
        let out = f.apply(&spike);
        assert!(out.iter().all(|&v| v > 0.0));
        assert!((out.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(out[g.cell(10, 10)] < 0.2);
        // row sums of the operator are exactly one
        let a = PdeFilter::operator(g, 4.0 * h, h);
        for i in 0..g.n_cells() {
            let s: f64 = a.row(i).map(|(_, v)| v).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn linear_stages_are_transpose_consistent() {
        let g = CellGrid::new(7, 4);
        let x: Vec<f64> = (0..g.n_nodes()).map(|i| ((i * 7 % 11) as f64).sin()).collect();
        let y: Vec<f64> = (0..g.n_cells()).map(|i| ((i * 3 % 5) as f64).cos()).collect();
        let lhs = dot(&g.node_to_cell(&x), &y);
        let rhs = dot(&x, &g.node_to_cell_transpose(&y));
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
        let lhs = dot(&g.cell_to_node(&y), &x);
        let rhs = dot(&y, &g.cell_to_node_transpose(&x));
        assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
    }

    #[test]
    fn chain_with_zero_radius_on_3x3_grid() {
        // dΦ/ds = h · N2Cᵀ · C2Nᵀ · g when the filter is the identity
        let g = CellGrid::new(3, 3);
        let h = 0.5;
        let chain = DesignChain::new(g, h, 0.0).unwrap();
        let d: Vec<f64> = (0..g.n_nodes()).map(|i| i as f64 - 4.0).collect();
        let expect: Vec<f64> = g
            .node_to_cell_transpose(&g.cell_to_node_transpose(&d))
            .iter()
            .map(|v| h * v)
            .collect();
        assert_eq!(chain.transpose(&d), expect);
        assert!(chain.transpose(&vec![0.0; g.n_nodes()]).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn constant_design_maps_affinely_for_any_radius() {
        let g = CellGrid::new(8, 6);
        for r in [0.0, 0.05, 0.4] {
            let chain = DesignChain::new(g, 0.1, r).unwrap();
            let out = chain.forward(&vec![0.8; g.n_nodes()]).unwrap();
            for v in out.s_bar {
                assert!((v - 0.1 * 0.3).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn init_design_origin_is_acoustic() {
        assert!((indicator(0.0, 0.0, 7.0, 7.0, 0.1, 0.1) - 1.1).abs() < 1e-15);
        let mesh = Mesh::new(DuctLayout::coarse()).unwrap();
        let p = Parameterization::new(&mesh, 8e-3).unwrap();
        let s = init_design(&p, 7.0, 7.0, 0.1, 0.1, 0.01);
        assert!(s.iter().all(|&v| v == 0.0 || v == 1.0));
        assert!(s.iter().any(|&v| v == 1.0));
        for k in 0..p.n_design_nodes() {
            if !p.is_designable(k) {
                assert_eq!(s[k], 0.0);
            }
        }
    }

    #[test]
    fn embedding_freezes_channels() {
        let mesh = Mesh::new(DuctLayout::coarse()).unwrap();
        let p = Parameterization::new(&mesh, 8e-3).unwrap();
        let s = vec![1.0; p.n_design_nodes()];
        let full = p.physical_field(&s).unwrap();
        let (i0, i1) = mesh.design_node_columns();
        for n in 0..mesh.n_nodes() {
            let (i, _) = mesh.node_ij(n);
            if i <= i0 || i >= i1 {
                assert_eq!(full[n], -0.5 * mesh.h);
            }
        }
        assert!(full.iter().any(|&v| v > 0.0));
    }
}
