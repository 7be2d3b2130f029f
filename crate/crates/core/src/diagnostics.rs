//! Patchings of the cells and their compensation quality, circumcenter
//! identities on triangles, and the weighted cell projector.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{circumcenter, orient2d, Mat2, Point};
use crate::mesh::{Family, PolytopalMesh};
use crate::quadrature;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum DiagnosticsError {
    #[error("invalid patching: cell {cell} {what}")]
    InvalidPatching { cell: usize, what: &'static str },
    #[error("mesh carries no usable generator metadata ({0})")]
    MetadataMissing(&'static str),
    #[error("degenerate triangle")]
    DegenerateTriangle,
    #[error("cell {cell} is not a triangle")]
    NotTriangle { cell: usize },
    #[error("moment matrix of cell {cell} is singular")]
    SingularMomentMatrix { cell: usize },
}

/// Disjoint groups of cells; `uncovered` holds the cells left out.
#[derive(Clone, Debug, PartialEq)]
pub struct Patching {
    pub patches: Vec<Vec<usize>>,
    pub uncovered: Vec<usize>,
    /// `|U_P|` per patch.
    pub areas: Vec<f64>,
}

impl Patching {
    /// Checks disjointness and cell ids; cells in no patch become uncovered.
    pub fn new(mesh: &PolytopalMesh, patches: Vec<Vec<usize>>) -> Result<Self, DiagnosticsError> {
        let mut seen = vec![false; mesh.n_cells()];
        for &k in patches.iter().flatten() {
            if k >= mesh.n_cells() {
                return Err(DiagnosticsError::InvalidPatching { cell: k, what: "does not exist" });
            }
            if core::mem::replace(&mut seen[k], true) {
                return Err(DiagnosticsError::InvalidPatching { cell: k, what: "is in two patches" });
            }
        }
        if patches.iter().any(|p| p.is_empty()) {
            return Err(DiagnosticsError::InvalidPatching { cell: 0, what: "patch is empty" });
        }
        let uncovered = (0..mesh.n_cells()).filter(|&k| !seen[k]).collect();
        let areas = patches.iter().map(|p| p.iter().map(|&k| mesh.cell(k).measure).sum()).collect();
        Ok(Patching { patches, uncovered, areas })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PatchingQuality {
    /// `max_P |Σ_{K∈P} |K| e_K| / |U_P|`, `e_K = x̄_K − x_K`.
    pub e_g: f64,
    /// Largest cardinality plus largest `h_K / (2 r_P)`, `r_P` the radius of a ball inside `U_P`.
    pub mu_estimate: f64,
    pub uncovered_area: f64,
    pub h_mesh: f64,
}

/// One patch per cell.
pub fn trivial_patching(mesh: &PolytopalMesh) -> Patching {
    Patching::new(mesh, (0..mesh.n_cells()).map(|k| vec![k]).collect()).expect("singletons are a patching")
}

/// Horizontal pairs `(i, j)`, `(i + 1, j)` with `i` even on a cartesian grid;
/// a trailing odd column is left uncovered.
pub fn pair_patching(mesh: &PolytopalMesh) -> Result<Patching, DiagnosticsError> {
    let origin = mesh.origin().ok_or(DiagnosticsError::MetadataMissing("no generator"))?;
    if origin.family != Family::Cartesian {
        return Err(DiagnosticsError::MetadataMissing("pairs need a cartesian grid"));
    }
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (k, &(i, j)) in origin.tile_of_cell.iter().enumerate() {
        if i / 2 < origin.tiles_x / 2 {
            groups.entry((j, i / 2)).or_default().push(k);
        }
    }
    Patching::new(mesh, groups.into_values().collect())
}

/// Reproductions of the initial triangulation: one patch per tile for the
/// translation family, `2 × 2` tile blocks for the symmetry family (border
/// tiles of odd counts are left uncovered).
pub fn tile_patching(mesh: &PolytopalMesh) -> Result<Patching, DiagnosticsError> {
    let origin = mesh.origin().ok_or(DiagnosticsError::MetadataMissing("no generator"))?;
    let block = match origin.family {
        Family::Translation => 1,
        Family::Symmetry => 2,
        _ => return Err(DiagnosticsError::MetadataMissing("tiles need a translation or symmetry family")),
    };
    let (bx, by) = (origin.tiles_x / block, origin.tiles_y / block);
    let mut groups: BTreeMap<(usize, usize), Vec<usize>> = BTreeMap::new();
    for (k, &(i, j)) in origin.tile_of_cell.iter().enumerate() {
        if i / block < bx && j / block < by {
            groups.entry((j / block, i / block)).or_default().push(k);
        }
    }
    Patching::new(mesh, groups.into_values().collect())
}

fn segment_distance(p: Point, a: Point, b: Point) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(ab) / ab.norm_sq()).clamp(0.0, 1.0);
    p.dist(a + ab * t)
}

/// Radius of a ball contained in the union of `cells`: best of the cell
/// centroids and the vertices interior to the union.
fn inner_radius(mesh: &PolytopalMesh, cells: &[usize]) -> f64 {
    let mut count: BTreeMap<usize, usize> = BTreeMap::new();
    for &k in cells {
        for &e in &mesh.cell(k).edge_ids {
            *count.entry(e).or_default() += 1;
        }
    }
    let boundary: Vec<[Point; 2]> = count
        .iter()
        .filter(|(_, &c)| c == 1)
        .map(|(&e, _)| {
            let ed = mesh.edge(e);
            [mesh.vertices()[ed.endpoints[0]], mesh.vertices()[ed.endpoints[1]]]
        })
        .collect();
    let boundary_vertices: Vec<usize> = count
        .iter()
        .filter(|(_, &c)| c == 1)
        .flat_map(|(&e, _)| mesh.edge(e).endpoints)
        .collect();
    let dist = |p: Point| boundary.iter().map(|s| segment_distance(p, s[0], s[1])).fold(f64::INFINITY, f64::min);
    let mut best: f64 = 0.0;
    for &k in cells {
        let c = mesh.cell(k);
        // a ball around the centroid inside the (convex) cell
        let own = mesh.faces(k).map(|f| (f.midpoint - c.centroid).dot(f.normal)).fold(f64::INFINITY, f64::min);
        best = best.max(own.max(0.0));
        for &v in &c.vertex_ids {
            if !boundary_vertices.contains(&v) {
                best = best.max(dist(mesh.vertices()[v]));
            }
        }
    }
    best
}

pub fn evaluate_patching(mesh: &PolytopalMesh, patching: &Patching) -> Result<PatchingQuality, DiagnosticsError> {
    let mut e_g: f64 = 0.0;
    let mut mu: f64 = 0.0;
    for (p, &area) in patching.patches.iter().zip(&patching.areas) {
        let mut acc = Point::ZERO;
        let mut hmax: f64 = 0.0;
        for &k in p {
            let Some(c) = mesh.cells().get(k) else {
                return Err(DiagnosticsError::InvalidPatching { cell: k, what: "does not exist" });
            };
            acc += (c.centroid - c.cell_point) * c.measure;
            hmax = hmax.max(c.diameter);
        }
        e_g = e_g.max(acc.norm() / area);
        let r = inner_radius(mesh, p);
        mu = mu.max(p.len() as f64 + hmax / (2.0 * r));
    }
    let uncovered_area = patching.uncovered.iter().map(|&k| mesh.cell(k).measure).sum();
    Ok(PatchingQuality { e_g, mu_estimate: mu, uncovered_area, h_mesh: mesh.h_mesh() })
}

/// Both sides of `|T| c_T = Σ_σ |σ| (|v₁|² + |v₂|²)/4 n_{T,σ}`; the vertices
/// may be given in either orientation.
pub fn circumcenter_identity(a: Point, b: Point, c: Point) -> Result<(Point, Point), DiagnosticsError> {
    let cc = circumcenter(a, b, c).ok_or(DiagnosticsError::DegenerateTriangle)?;
    let area = 0.5 * orient2d(a, b, c);
    let verts = if area > 0.0 { [a, b, c] } else { [a, c, b] };
    let area = area.abs();
    let mut rhs = Point::ZERO;
    for i in 0..3 {
        let (v1, v2) = (verts[i], verts[(i + 1) % 3]);
        let d = v2 - v1;
        // |σ| n = (dy, −dx) for counter-clockwise traversal
        rhs += Point::new(d.y, -d.x) * ((v1.norm_sq() + v2.norm_sq()) / 4.0);
    }
    Ok((cc * area, rhs))
}

/// Both sides of `Σ_T |T| (c_T − x̄_T) = Σ_{σ ⊂ ∂Q} |σ| (|v₁ − x̄_Q|² + |v₂ − x̄_Q|²)/4 n_{Q,σ}`
/// for a mesh made of triangles.
pub fn boundary_compensation(mesh: &PolytopalMesh) -> Result<(Point, Point), DiagnosticsError> {
    let mut lhs = Point::ZERO;
    let mut moment = Point::ZERO;
    for (k, c) in mesh.cells().iter().enumerate() {
        if c.vertex_ids.len() != 3 {
            return Err(DiagnosticsError::NotTriangle { cell: k });
        }
        let v = mesh.cell_vertices(k);
        let cc = circumcenter(v[0], v[1], v[2]).ok_or(DiagnosticsError::DegenerateTriangle)?;
        lhs += (cc - c.centroid) * c.measure;
        moment += c.centroid * c.measure;
    }
    let xq = moment * (1.0 / mesh.area());
    let mut rhs = Point::ZERO;
    for edge in mesh.edges().iter().filter(|e| !e.is_interior()) {
        let inc = edge.incidences().next().expect("boundary edge has a cell");
        let (v1, v2) = (mesh.vertices()[edge.endpoints[0]] - xq, mesh.vertices()[edge.endpoints[1]] - xq);
        rhs += inc.normal * (edge.length * (v1.norm_sq() + v2.norm_sq()) / 4.0);
    }
    Ok((lhs, rhs))
}

/// Affine weights `w_K(x) = 1 + ξ_K·(x − x̄_K)` with `∫_K w_K = |K|` and
/// `∫_K x w_K = |K| x_K`.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightedProjector {
    pub xi: Vec<Point>,
    centroids: Vec<Point>,
}

impl WeightedProjector {
    pub fn new(mesh: &PolytopalMesh) -> Result<Self, DiagnosticsError> {
        let mut xi = Vec::with_capacity(mesh.n_cells());
        for (k, c) in mesh.cells().iter().enumerate() {
            let verts = mesh.cell_vertices(k);
            let mut j = Mat2::ZERO;
            quadrature::fan(c.cell_point, &verts, |_, p, w| {
                let d = p - c.centroid;
                j += Mat2::outer(d, d) * w;
            });
            if !(j.det() > 1e-12 * j.trace() * j.trace()) {
                return Err(DiagnosticsError::SingularMomentMatrix { cell: k });
            }
            let s = j.solve((c.cell_point - c.centroid) * c.measure).ok_or(DiagnosticsError::SingularMomentMatrix { cell: k })?;
            xi.push(s);
        }
        Ok(WeightedProjector { xi, centroids: mesh.cells().iter().map(|c| c.centroid).collect() })
    }

    pub fn weight(&self, k: usize, x: Point) -> f64 {
        1.0 + self.xi[k].dot(x - self.centroids[k])
    }

    /// `(1/|K|) ∫_K φ w_K` per cell.
    pub fn apply<F: Fn(Point) -> f64>(&self, mesh: &PolytopalMesh, phi: F) -> Vec<f64> {
        (0..mesh.n_cells())
            .map(|k| {
                let c = mesh.cell(k);
                quadrature::integrate_fan(c.cell_point, &mesh.cell_vertices(k), |p| phi(p) * self.weight(k, p)) / c.measure
            })
            .collect()
    }

    /// `(∫_K w_K, ∫_K x w_K)` per cell.
    pub fn moments(&self, mesh: &PolytopalMesh) -> Vec<(f64, Point)> {
        (0..mesh.n_cells())
            .map(|k| {
                let mut m0 = 0.0;
                let mut m1 = Point::ZERO;
                quadrature::fan(mesh.cell(k).cell_point, &mesh.cell_vertices(k), |_, p, w| {
                    let ww = w * self.weight(k, p);
                    m0 += ww;
                    m1 += p * ww;
                });
                (m0, m1)
            })
            .collect()
    }

    /// `max_K ‖w_K‖_∞`, attained at a vertex since `w_K` is affine.
    pub fn sup_norm(&self, mesh: &PolytopalMesh) -> f64 {
        (0..mesh.n_cells())
            .flat_map(|k| mesh.cell_vertices(k).into_iter().map(move |v| (k, v)))
            .map(|(k, v)| self.weight(k, v).abs())
            .fold(0.0, f64::max)
    }
}
