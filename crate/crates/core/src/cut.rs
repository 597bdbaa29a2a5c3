//! Cut-element geometry: classification of a bilinear quad by the signs of
//! its corner level-set values, marching-squares tessellation into solid and
//! acoustic sub-triangles, and the quadrature rules used on each piece.
//!
//! Everything here works in unit element coordinates `ξ ∈ [0,1]²` with
//! corners `(0,0), (1,0), (1,1), (0,1)`; weights are scaled to physical
//! area/length by the element size `h`.

/// Crossings closer than this (in edge parameter) snap onto the corner.
pub const EDGE_SNAP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    Solid,
    Acoustic,
}

impl Phase {
    pub fn of(phi: f64) -> Self {
        if phi >= 0.0 {
            Phase::Solid
        } else {
            Phase::Acoustic
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ElementKind {
    Solid,
    Acoustic,
    Cut,
}

/// Corner values in mesh order: lower-left, lower-right, upper-right, upper-left.
pub fn classify(phi: &[f64; 4]) -> ElementKind {
    let solid = phi.iter().filter(|&&v| v >= 0.0).count();
    match solid {
        4 => ElementKind::Solid,
        0 => ElementKind::Acoustic,
        _ => ElementKind::Cut,
    }
}

const CORNERS: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];

#[derive(Debug, Clone, Copy, PartialEq)]
enum Vertex {
    Corner(usize),
    /// Crossing on the edge from corner `k` to corner `k + 1`.
    Crossing(usize, [f64; 2]),
}

impl Vertex {
    fn point(&self) -> [f64; 2] {
        match *self {
            Vertex::Corner(k) => CORNERS[k],
            Vertex::Crossing(_, p) => p,
        }
    }
}

/// A piece of the interface with the normal pointing out of the solid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Chord {
    pub a: [f64; 2],
    pub b: [f64; 2],
    pub normal: [f64; 2],
}

impl Chord {
    pub fn length(&self) -> f64 {
        (self.b[0] - self.a[0]).hypot(self.b[1] - self.a[1])
    }
}

/// Counter-clockwise polygon in unit element coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    pub phase: Phase,
    pub vertices: Vec<[f64; 2]>,
}

impl Polygon {
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        let n = v.len();
        0.5 * (0..n)
            .map(|i| {
                let (p, q) = (v[i], v[(i + 1) % n]);
                p[0] * q[1] - q[0] * p[1]
            })
            .sum::<f64>()
    }

    /// Fan triangulation; the pieces produced by marching squares are convex.
    pub fn triangles(&self) -> impl Iterator<Item = [[f64; 2]; 3]> + '_ {
        let v = &self.vertices;
        (1..v.len().saturating_sub(1)).map(move |i| [v[0], v[i], v[i + 1]])
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Tessellation {
    pub polygons: Vec<Polygon>,
    pub chords: Vec<Chord>,
}

impl Tessellation {
    pub fn area(&self, phase: Phase) -> f64 {
        self.polygons
            .iter()
            .filter(|p| p.phase == phase)
            .map(Polygon::area)
            .sum()
    }
}

fn crossing(phi: &[f64; 4], k: usize) -> [f64; 2] {
    let (a, b) = (phi[k], phi[(k + 1) % 4]);
    let mut t = a / (a - b);
    if t < EDGE_SNAP {
        t = 0.0;
    } else if t > 1.0 - EDGE_SNAP {
        t = 1.0;
    }
    let (p, q) = (CORNERS[k], CORNERS[(k + 1) % 4]);
    [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]
}

/// Walks the boundary once and collects, for each phase, its corners and the
/// edge crossings in counter-clockwise order.
fn boundary_walk(phi: &[f64; 4], phase: Phase) -> Vec<Vertex> {
    let mut out = Vec::with_capacity(6);
    for k in 0..4 {
        let here = Phase::of(phi[k]);
        let next = Phase::of(phi[(k + 1) % 4]);
        if here == phase {
            out.push(Vertex::Corner(k));
        }
        if here != next {
            out.push(Vertex::Crossing(k, crossing(phi, k)));
        }
    }
    out
}

fn dedup(points: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    let mut out: Vec<[f64; 2]> = Vec::with_capacity(points.len());
    for p in points {
        if out.last() != Some(&p) {
            out.push(p);
        }
    }
    while out.len() > 1 && out.first() == out.last() {
        out.pop();
    }
    out
}

/// Splits a cut quad into convex solid and acoustic polygons plus interface
/// chords. Corners with `phi >= 0` are solid. On a saddle (diagonal corners
/// of equal sign) the bilinear centre value decides which phase stays
/// connected; a zero centre counts as solid.
pub fn tessellate(phi: &[f64; 4]) -> Tessellation {
    let mut tess = Tessellation::default();
    match classify(phi) {
        ElementKind::Solid | ElementKind::Acoustic => {
            tess.polygons.push(Polygon {
                phase: Phase::of(phi[0]),
                vertices: CORNERS.to_vec(),
            });
            return tess;
        }
        ElementKind::Cut => {}
    }
    let signs: Vec<Phase> = phi.iter().map(|&v| Phase::of(v)).collect();
    let saddle = signs[0] == signs[2] && signs[1] == signs[3] && signs[0] != signs[1];
    let centre = Phase::of(0.25 * phi.iter().sum::<f64>());
    for phase in [Phase::Solid, Phase::Acoustic] {
        let walk = boundary_walk(phi, phase);
        if saddle && phase != centre {
            // two isolated corners, each with its neighbouring crossings
            for (i, v) in walk.iter().enumerate() {
                if let Vertex::Corner(_) = v {
                    let n = walk.len();
                    let tri = vec![walk[(i + n - 1) % n].point(), v.point(), walk[(i + 1) % n].point()];
                    tess.polygons.push(Polygon {
                        phase,
                        vertices: dedup(tri),
                    });
                }
            }
        } else {
            if phase == Phase::Solid {
                let n = walk.len();
                for i in 0..n {
                    let (a, b) = (walk[i], walk[(i + 1) % n]);
                    if let (Vertex::Crossing(..), Vertex::Crossing(..)) = (a, b) {
                        let (pa, pb) = (a.point(), b.point());
                        let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
                        let len = dx.hypot(dy);
                        if len > 0.0 {
                            tess.chords.push(Chord {
                                a: pa,
                                b: pb,
                                normal: [dy / len, -dx / len],
                            });
                        }
                    }
                }
            }
            tess.polygons.push(Polygon {
                phase,
                vertices: dedup(walk.iter().map(Vertex::point).collect()),
            });
        }
    }
    if saddle && centre == Phase::Acoustic {
        // solid pieces are the isolated triangles; orient chords out of them
        for poly in tess.polygons.iter().filter(|p| p.phase == Phase::Solid) {
            let v = &poly.vertices;
            if v.len() != 3 {
                continue;
            }
            // vertices are (crossing, corner, crossing): chord runs from the
            // last back to the first to keep the triangle counter-clockwise
            let (pa, pb) = (v[2], v[0]);
            let (dx, dy) = (pb[0] - pa[0], pb[1] - pa[1]);
            let len = dx.hypot(dy);
            if len > 0.0 {
                tess.chords.push(Chord {
                    a: pa,
                    b: pb,
                    normal: [dy / len, -dx / len],
                });
            }
        }
    }
    tess
}

/// Six-point degree-4 triangle rule: barycentric points and weights summing to one.
const TRI_RULE: [([f64; 3], f64); 6] = {
    const A1: f64 = 0.445_948_490_915_964_89;
    const W1: f64 = 0.223_381_589_678_011_47;
    const A2: f64 = 0.091_576_213_509_770_743;
    const W2: f64 = 0.109_951_743_655_321_87;
    const B1: f64 = 1.0 - 2.0 * A1;
    const B2: f64 = 1.0 - 2.0 * A2;
    [
        ([A1, A1, B1], W1),
        ([A1, B1, A1], W1),
        ([B1, A1, A1], W1),
        ([A2, A2, B2], W2),
        ([A2, B2, A2], W2),
        ([B2, A2, A2], W2),
    ]
};

/// Three-point Gauss-Legendre on `[0,1]`.
const LINE_RULE: [(f64, f64); 3] = {
    const D: f64 = 0.387_298_334_620_741_7; // sqrt(3/5)/2
    [(0.5 - D, 5.0 / 18.0), (0.5, 8.0 / 18.0), (0.5 + D, 5.0 / 18.0)]
};

/// 2×2 Gauss on `[0,1]`.
const GAUSS2: [f64; 2] = [0.211_324_865_405_187_1, 0.788_675_134_594_812_9];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AreaPoint {
    pub xi: [f64; 2],
    /// Physical weight (includes `h²` and the sub-triangle area).
    pub weight: f64,
    pub phase: Phase,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfacePoint {
    pub xi: [f64; 2],
    /// Physical weight (includes `h` and the chord length).
    pub weight: f64,
    pub normal: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct ElementQuadrature {
    pub kind: ElementKind,
    pub area: Vec<AreaPoint>,
    pub interface: Vec<InterfacePoint>,
}

pub fn triangle_points(tri: &[[f64; 2]; 3], scale: f64, phase: Phase) -> impl Iterator<Item = AreaPoint> + '_ {
    let [p, q, r] = *tri;
    let area = 0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]));
    TRI_RULE.iter().map(move |&(l, w)| AreaPoint {
        xi: [
            l[0] * p[0] + l[1] * q[0] + l[2] * r[0],
            l[0] * p[1] + l[1] * q[1] + l[2] * r[1],
        ],
        weight: w * area * scale,
        phase,
    })
}

/// Quadrature for one element given its corner level-set values.
pub fn element_quadrature(phi: &[f64; 4], h: f64) -> ElementQuadrature {
    let kind = classify(phi);
    match kind {
        ElementKind::Solid | ElementKind::Acoustic => {
            let phase = Phase::of(phi[0]);
            let mut area = Vec::with_capacity(4);
            for &y in &GAUSS2 {
                for &x in &GAUSS2 {
                    area.push(AreaPoint {
                        xi: [x, y],
                        weight: 0.25 * h * h,
                        phase,
                    });
                }
            }
            ElementQuadrature {
                kind,
                area,
                interface: Vec::new(),
            }
        }
        ElementKind::Cut => {
            let tess = tessellate(phi);
            let mut area = Vec::new();
            for poly in &tess.polygons {
                for tri in poly.triangles() {
                    area.extend(triangle_points(&tri, h * h, poly.phase));
                }
            }
            let mut interface = Vec::new();
            for c in &tess.chords {
                let len = c.length();
                for &(t, w) in &LINE_RULE {
                    interface.push(InterfacePoint {
                        xi: [c.a[0] + t * (c.b[0] - c.a[0]), c.a[1] + t * (c.b[1] - c.a[1])],
                        weight: w * len * h,
                        normal: c.normal,
                    });
                }
            }
            ElementQuadrature {
                kind,
                area,
                interface,
            }
        }
    }
}
