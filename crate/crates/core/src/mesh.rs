//! Immutable 2D polytopal meshes: cells with a distinguished point `x_K`,
//! shared edges with two-sided incidence data, and validity diagnostics.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::geometry::{Mat2, Point};

/// Raw mesh description: vertex coordinates, CCW vertex lists per cell and
/// one cell point per cell.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MeshInput {
    pub vertices: Vec<Point>,
    pub cells: Vec<Vec<usize>>,
    pub cell_points: Vec<Point>,
}

/// Which generator produced a mesh, with the tile of every cell.
///
/// For cartesian grids a tile is a single cell `(i, j)`; for the reproduced
/// triangulations it is the copy of the initial triangulation the cell came
/// from; for subdivisions `(t, 0)` names the parent triangle `t`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeshOrigin {
    pub family: Family,
    pub tiles_x: usize,
    pub tiles_y: usize,
    pub tile_of_cell: Vec<(usize, usize)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Family {
    Cartesian,
    Subdivision,
    Symmetry,
    Translation,
}

impl Family {
    pub fn name(self) -> &'static str {
        match self {
            Family::Cartesian => "cartesian",
            Family::Subdivision => "subdivision",
            Family::Symmetry => "symmetry",
            Family::Translation => "translation",
        }
    }

    pub fn from_name(s: &str) -> Option<Family> {
        match s {
            "cartesian" => Some(Family::Cartesian),
            "subdivision" => Some(Family::Subdivision),
            "symmetry" => Some(Family::Symmetry),
            "translation" => Some(Family::Translation),
            _ => None,
        }
    }
}

/// Per-cell view of an edge: outward normal `n_{K,σ}` and signed distance
/// `d_{K,σ} = (x − x_K)·n_{K,σ}`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Incidence {
    pub cell: usize,
    pub normal: Point,
    pub distance: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeKind {
    Interior,
    Boundary,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Edge {
    /// Endpoints in the orientation of the first incident cell.
    pub endpoints: [usize; 2],
    pub length: f64,
    pub midpoint: Point,
    first: Incidence,
    second: Option<Incidence>,
}

impl Edge {
    pub fn kind(&self) -> EdgeKind {
        if self.second.is_some() {
            EdgeKind::Interior
        } else {
            EdgeKind::Boundary
        }
    }

    pub fn is_interior(&self) -> bool {
        self.second.is_some()
    }

    pub fn incidences(&self) -> impl Iterator<Item = &Incidence> {
        core::iter::once(&self.first).chain(self.second.iter())
    }

    pub fn cells(&self) -> (usize, Option<usize>) {
        (self.first.cell, self.second.map(|i| i.cell))
    }

    /// The incidence record of `cell`, if it touches this edge.
    pub fn incidence(&self, cell: usize) -> Option<&Incidence> {
        self.incidences().find(|i| i.cell == cell)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Cell {
    /// Vertex ids in counter-clockwise order.
    pub vertex_ids: Vec<usize>,
    /// `x_K`.
    pub cell_point: Point,
    pub measure: f64,
    pub centroid: Point,
    pub diameter: f64,
    /// `edge_ids[i]` joins `vertex_ids[i]` and `vertex_ids[i + 1]`.
    pub edge_ids: Vec<usize>,
}

/// Flattened local data for edge `local` of a cell.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Face {
    pub local: usize,
    pub edge: usize,
    pub length: f64,
    pub midpoint: Point,
    pub normal: Point,
    pub distance: f64,
    pub interior: bool,
}

impl Face {
    /// Measure of the cone with apex `x_K` and base this edge.
    pub fn cone_measure(&self) -> f64 {
        0.5 * self.length * self.distance
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PolytopalMesh {
    vertices: Vec<Point>,
    cells: Vec<Cell>,
    edges: Vec<Edge>,
    h_mesh: f64,
    origin: Option<MeshOrigin>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Entity {
    Mesh,
    Cell(usize),
    Edge(usize),
    Vertex(usize),
}

impl fmt::Display for Entity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Entity::Mesh => write!(f, "mesh"),
            Entity::Cell(k) => write!(f, "cell {k}"),
            Entity::Edge(e) => write!(f, "edge {e}"),
            Entity::Vertex(v) => write!(f, "vertex {v}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ViolationKind {
    InvalidInput,
    DegenerateCell,
    NonStarShaped,
    NonConforming,
    InvariantViolated,
}

/// One violated invariant, with the entity it concerns and its size.
#[derive(Clone, Debug, PartialEq)]
pub struct Diagnostic {
    pub kind: ViolationKind,
    pub entity: Entity,
    pub magnitude: f64,
    pub what: &'static str,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} at {}: {} ({:e})", self.kind, self.entity, self.what, self.magnitude)
    }
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MeshError {
    #[error("mesh has no cells")]
    EmptyMesh,
    #[error("invalid mesh input at {entity}: {what}")]
    InvalidInput { entity: Entity, what: &'static str },
    #[error("degenerate cell {cell}: {what}")]
    DegenerateCell { cell: usize, what: &'static str },
    #[error("cell {cell} is not strictly star-shaped w.r.t. its cell point (d = {distance:e})")]
    NonStarShaped { cell: usize, distance: f64 },
    #[error("non-conforming mesh at {entity}: {what}")]
    NonConforming { entity: Entity, what: &'static str },
    #[error("mesh invariant violated at {entity}: {what} ({magnitude:e})")]
    InvariantViolated { entity: Entity, what: &'static str, magnitude: f64 },
}

impl From<&Diagnostic> for MeshError {
    fn from(d: &Diagnostic) -> Self {
        match d.kind {
            ViolationKind::InvalidInput => MeshError::InvalidInput { entity: d.entity, what: d.what },
            ViolationKind::DegenerateCell => MeshError::DegenerateCell {
                cell: match d.entity {
                    Entity::Cell(k) => k,
                    _ => usize::MAX,
                },
                what: d.what,
            },
            ViolationKind::NonStarShaped => MeshError::NonStarShaped {
                cell: match d.entity {
                    Entity::Cell(k) => k,
                    _ => usize::MAX,
                },
                distance: d.magnitude,
            },
            ViolationKind::NonConforming => MeshError::NonConforming { entity: d.entity, what: d.what },
            ViolationKind::InvariantViolated => MeshError::InvariantViolated {
                entity: d.entity,
                what: d.what,
                magnitude: d.magnitude,
            },
        }
    }
}

/// Breakdown of the regularity factor θ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RegularityReport {
    pub theta: f64,
    /// max over interior edges of the larger ratio `d_{K,σ}/d_{L,σ}`; 0 without interior edges.
    pub interior_ratio: f64,
    /// max over cells of `max_σ h_K/d_{K,σ} + Card(edges of K)`.
    pub cell_term: f64,
    pub max_h_over_d: f64,
    pub max_edge_count: usize,
}

struct Analysis {
    mesh: Option<PolytopalMesh>,
    diagnostics: Vec<Diagnostic>,
}

fn diag(kind: ViolationKind, entity: Entity, magnitude: f64, what: &'static str) -> Diagnostic {
    Diagnostic { kind, entity, magnitude, what }
}

/// Builds a mesh, deriving all geometry and checking every invariant.
pub fn build_mesh(
    vertices: Vec<Point>,
    cells: Vec<Vec<usize>>,
    cell_points: Vec<Point>,
) -> Result<PolytopalMesh, MeshError> {
    PolytopalMesh::from_input(MeshInput { vertices, cells, cell_points })
}

/// Lists every violated invariant of a raw mesh description; empty iff
/// [`build_mesh`] would succeed.
pub fn validate(input: &MeshInput) -> Vec<Diagnostic> {
    analyze(input.clone()).diagnostics
}

impl PolytopalMesh {
    pub fn from_input(input: MeshInput) -> Result<Self, MeshError> {
        if input.cells.is_empty() {
            return Err(MeshError::EmptyMesh);
        }
        let a = analyze(input);
        if let Some(d) = a.diagnostics.first() {
            return Err(d.into());
        }
        Ok(a.mesh.expect("mesh without diagnostics"))
    }

    pub fn with_origin(mut self, origin: MeshOrigin) -> Self {
        debug_assert_eq!(origin.tile_of_cell.len(), self.cells.len());
        self.origin = Some(origin);
        self
    }

    pub fn origin(&self) -> Option<&MeshOrigin> {
        self.origin.as_ref()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn cell(&self, k: usize) -> &Cell {
        &self.cells[k]
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn n_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn n_interior_edges(&self) -> usize {
        self.edges.iter().filter(|e| e.is_interior()).count()
    }

    /// `h_D = max_K h_K`.
    pub fn h_mesh(&self) -> f64 {
        self.h_mesh
    }

    pub fn area(&self) -> f64 {
        self.cells.iter().map(|c| c.measure).sum()
    }

    pub fn cell_vertices(&self, k: usize) -> Vec<Point> {
        self.cells[k].vertex_ids.iter().map(|&v| self.vertices[v]).collect()
    }

    /// Local edges of cell `k` with its own normals and distances.
    pub fn faces(&self, k: usize) -> impl Iterator<Item = Face> + '_ {
        self.cells[k].edge_ids.iter().enumerate().map(move |(local, &e)| {
            let edge = &self.edges[e];
            let inc = edge.incidence(k).expect("cell listed on its own edge");
            Face {
                local,
                edge: e,
                length: edge.length,
                midpoint: edge.midpoint,
                normal: inc.normal,
                distance: inc.distance,
                interior: edge.is_interior(),
            }
        })
    }

    /// The raw description this mesh was built from.
    pub fn to_input(&self) -> MeshInput {
        MeshInput {
            vertices: self.vertices.clone(),
            cells: self.cells.iter().map(|c| c.vertex_ids.clone()).collect(),
            cell_points: self.cells.iter().map(|c| c.cell_point).collect(),
        }
    }

    /// Same connectivity with new cell points (geometry recomputed and rechecked).
    pub fn with_cell_points(&self, points: Vec<Point>) -> Result<Self, MeshError> {
        let mut input = self.to_input();
        input.cell_points = points;
        let mesh = PolytopalMesh::from_input(input)?;
        Ok(match &self.origin {
            Some(o) => mesh.with_origin(o.clone()),
            None => mesh,
        })
    }

    /// Regularity factor θ with its breakdown.
    pub fn regularity(&self) -> Result<RegularityReport, MeshError> {
        regularity_theta(self)
    }
}

/// Regularity factor θ of a mesh.
pub fn regularity_theta(mesh: &PolytopalMesh) -> Result<RegularityReport, MeshError> {
    if mesh.cells.is_empty() {
        return Err(MeshError::EmptyMesh);
    }
    let mut interior_ratio: f64 = 0.0;
    for e in &mesh.edges {
        if let Some(s) = e.second {
            let (a, b) = (e.first.distance, s.distance);
            interior_ratio = interior_ratio.max(a / b).max(b / a);
        }
    }
    let mut cell_term: f64 = 0.0;
    let mut max_h_over_d: f64 = 0.0;
    let mut max_edge_count = 0;
    for (k, c) in mesh.cells.iter().enumerate() {
        let hd = mesh.faces(k).map(|f| c.diameter / f.distance).fold(0.0, f64::max);
        max_h_over_d = max_h_over_d.max(hd);
        max_edge_count = max_edge_count.max(c.edge_ids.len());
        cell_term = cell_term.max(hd + c.edge_ids.len() as f64);
    }
    Ok(RegularityReport {
        theta: interior_ratio + cell_term,
        interior_ratio,
        cell_term,
        max_h_over_d,
        max_edge_count,
    })
}

fn analyze(input: MeshInput) -> Analysis {
    let mut out = Vec::new();
    let MeshInput { vertices, cells: cell_lists, cell_points } = input;

    if cell_lists.is_empty() {
        out.push(diag(ViolationKind::InvalidInput, Entity::Mesh, 0.0, "no cells"));
    }
    if cell_points.len() != cell_lists.len() {
        out.push(diag(
            ViolationKind::InvalidInput,
            Entity::Mesh,
            cell_points.len() as f64,
            "cell point count differs from cell count",
        ));
    }
    for (v, p) in vertices.iter().enumerate() {
        if !p.is_finite() {
            out.push(diag(ViolationKind::InvalidInput, Entity::Vertex(v), 0.0, "non-finite vertex"));
        }
    }
    for (k, p) in cell_points.iter().enumerate() {
        if !p.is_finite() {
            out.push(diag(ViolationKind::InvalidInput, Entity::Cell(k), 0.0, "non-finite cell point"));
        }
    }
    for (k, c) in cell_lists.iter().enumerate() {
        if let Some(&bad) = c.iter().find(|&&v| v >= vertices.len()) {
            out.push(diag(ViolationKind::InvalidInput, Entity::Cell(k), bad as f64, "vertex id out of range"));
        }
    }
    if !out.is_empty() {
        return Analysis { mesh: None, diagnostics: out };
    }

    // Per-cell shape.
    let mut cells = Vec::with_capacity(cell_lists.len());
    let mut cell_ok = vec![true; cell_lists.len()];
    for (k, ids) in cell_lists.iter().enumerate() {
        let pts: Vec<Point> = ids.iter().map(|&v| vertices[v]).collect();
        let m = ids.len();
        let mut ok = true;
        if m < 3 {
            out.push(diag(ViolationKind::DegenerateCell, Entity::Cell(k), m as f64, "fewer than 3 vertices"));
            ok = false;
        }
        let mut diameter: f64 = 0.0;
        for i in 0..m {
            for j in (i + 1)..m {
                diameter = diameter.max(pts[i].dist(pts[j]));
            }
        }
        if ok {
            'dup: for i in 0..m {
                for j in (i + 1)..m {
                    if ids[i] == ids[j] || pts[i].dist(pts[j]) <= 1e-14 * diameter {
                        out.push(diag(ViolationKind::DegenerateCell, Entity::Cell(k), 0.0, "repeated vertex"));
                        ok = false;
                        break 'dup;
                    }
                }
            }
        }
        let mut twice_area = 0.0;
        let mut moment = Point::ZERO;
        if ok {
            // Shoelace around the first vertex.
            let o = pts[0];
            for i in 1..m - 1 {
                let a = pts[i] - o;
                let b = pts[i + 1] - o;
                let c = a.cross(b);
                twice_area += c;
                moment += (a + b) * c;
            }
            if !(twice_area > 1e-14 * diameter * diameter) {
                out.push(diag(
                    ViolationKind::DegenerateCell,
                    Entity::Cell(k),
                    0.5 * twice_area,
                    "non-positive signed area (vertices must be counter-clockwise)",
                ));
                ok = false;
            }
        }
        let measure = 0.5 * twice_area;
        let centroid = if ok { pts[0] + moment * (1.0 / (3.0 * twice_area)) } else { Point::ZERO };
        cell_ok[k] = ok;
        cells.push(Cell {
            vertex_ids: ids.clone(),
            cell_point: cell_points[k],
            measure,
            centroid,
            diameter,
            edge_ids: Vec::with_capacity(m),
        });
    }
    if cell_ok.iter().any(|ok| !ok) {
        return Analysis { mesh: None, diagnostics: out };
    }

    // Edges, deduplicated by endpoint set.
    let mut edges: Vec<Edge> = Vec::new();
    let mut by_key: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    for k in 0..cells.len() {
        let m = cells[k].vertex_ids.len();
        let xk = cells[k].cell_point;
        for i in 0..m {
            let a = cells[k].vertex_ids[i];
            let b = cells[k].vertex_ids[(i + 1) % m];
            let (pa, pb) = (vertices[a], vertices[b]);
            let t = pb - pa;
            let length = t.norm();
            let normal = Point::new(t.y / length, -t.x / length);
            let midpoint = pa.midpoint(pb);
            let distance = (midpoint - xk).dot(normal);
            let inc = Incidence { cell: k, normal, distance };
            let key = (a.min(b), a.max(b));
            let e = match by_key.get(&key) {
                None => {
                    let id = edges.len();
                    by_key.insert(key, id);
                    edges.push(Edge { endpoints: [a, b], length, midpoint, first: inc, second: None });
                    id
                }
                Some(&id) => {
                    let edge = &mut edges[id];
                    if edge.second.is_some() {
                        out.push(diag(
                            ViolationKind::NonConforming,
                            Entity::Edge(id),
                            3.0,
                            "edge shared by more than two cells",
                        ));
                    } else if edge.endpoints == [a, b] {
                        out.push(diag(
                            ViolationKind::NonConforming,
                            Entity::Edge(id),
                            2.0,
                            "two cells on the same side of an edge (overlap)",
                        ));
                    } else if edge.first.cell == k {
                        out.push(diag(ViolationKind::DegenerateCell, Entity::Cell(k), 0.0, "cell traverses an edge twice"));
                    } else {
                        // exact negation of the first normal
                        edge.second = Some(Incidence { cell: k, normal: -edge.first.normal, distance: (edge.midpoint - xk).dot(-edge.first.normal) });
                    }
                    id
                }
            };
            cells[k].edge_ids.push(e);
        }
    }

    // Star-shapedness and endpoint consistency of d_{K,σ}.
    for (id, e) in edges.iter().enumerate() {
        let (pa, pb) = (vertices[e.endpoints[0]], vertices[e.endpoints[1]]);
        for inc in e.incidences() {
            let c = &cells[inc.cell];
            if !(inc.distance > 0.0) {
                out.push(diag(ViolationKind::NonStarShaped, Entity::Cell(inc.cell), inc.distance, "d_{K,sigma} <= 0"));
                continue;
            }
            let da = (pa - c.cell_point).dot(inc.normal);
            let db = (pb - c.cell_point).dot(inc.normal);
            let spread = (da - inc.distance).abs().max((db - inc.distance).abs());
            if spread > 1e-12 * c.diameter {
                out.push(diag(
                    ViolationKind::InvariantViolated,
                    Entity::Edge(id),
                    spread,
                    "d_{K,sigma} differs between edge endpoints",
                ));
            }
        }
    }

    // Hanging vertices on boundary edges reveal partially overlapping cell boundaries.
    let mut used = vec![false; vertices.len()];
    for c in &cells {
        for &v in &c.vertex_ids {
            used[v] = true;
        }
    }
    for (id, e) in edges.iter().enumerate().filter(|(_, e)| !e.is_interior()) {
        let (pa, pb) = (vertices[e.endpoints[0]], vertices[e.endpoints[1]]);
        let t = pb - pa;
        let len2 = t.norm_sq();
        let (xmin, xmax) = (pa.x.min(pb.x), pa.x.max(pb.x));
        let (ymin, ymax) = (pa.y.min(pb.y), pa.y.max(pb.y));
        let tol = 1e-12 * libm::sqrt(len2);
        for (v, p) in vertices.iter().enumerate() {
            if !used[v] || v == e.endpoints[0] || v == e.endpoints[1] {
                continue;
            }
            if p.x < xmin - tol || p.x > xmax + tol || p.y < ymin - tol || p.y > ymax + tol {
                continue;
            }
            let s = (*p - pa).dot(t) / len2;
            let off = (*p - pa).cross(t).abs() / libm::sqrt(len2);
            if off <= tol && s > 1e-12 && s < 1.0 - 1e-12 {
                out.push(diag(
                    ViolationKind::NonConforming,
                    Entity::Edge(id),
                    s,
                    "vertex lies inside a boundary edge (hanging node)",
                ));
            }
        }
    }

    let mut h_mesh: f64 = 0.0;
    let mut mesh_area = 0.0;
    let mut perimeter_scale: f64 = 0.0;
    for (k, c) in cells.iter().enumerate() {
        h_mesh = h_mesh.max(c.diameter);
        mesh_area += c.measure;
        let mut closure = Point::ZERO;
        let mut moment = Mat2::ZERO;
        let mut cones = 0.0;
        let mut perimeter = 0.0;
        for &e in &c.edge_ids {
            let edge = &edges[e];
            let Some(inc) = edge.incidence(k) else { continue };
            closure += inc.normal * edge.length;
            moment += Mat2::outer(inc.normal * edge.length, edge.midpoint - c.cell_point);
            cones += 0.5 * edge.length * inc.distance;
            perimeter += edge.length;
        }
        perimeter_scale = perimeter_scale.max(perimeter);
        if closure.norm() > 1e-12 * perimeter {
            out.push(diag(ViolationKind::InvariantViolated, Entity::Cell(k), closure.norm(), "sum |s| n_{K,s} != 0"));
        }
        let dev = (moment - Mat2::scaled_identity(c.measure)).max_abs();
        if dev > 1e-12 * c.measure.max(perimeter * c.diameter) {
            out.push(diag(ViolationKind::InvariantViolated, Entity::Cell(k), dev, "sum |s| n (x_s - x_K)^T != |K| Id"));
        }
        if (cones - c.measure).abs() > 1e-12 * c.measure.max(perimeter * c.diameter) {
            out.push(diag(ViolationKind::InvariantViolated, Entity::Cell(k), cones - c.measure, "cone measures do not sum to |K|"));
        }
    }
    // Area enclosed by the outer boundary must match the cell total.
    let mut boundary_area = 0.0;
    for e in edges.iter().filter(|e| !e.is_interior()) {
        boundary_area += 0.5 * vertices[e.endpoints[0]].cross(vertices[e.endpoints[1]]);
    }
    if (boundary_area - mesh_area).abs() > 1e-10 * mesh_area.abs().max(perimeter_scale * perimeter_scale) {
        out.push(diag(
            ViolationKind::NonConforming,
            Entity::Mesh,
            boundary_area - mesh_area,
            "cells do not tile the region bounded by the boundary edges",
        ));
    }

    let mesh = PolytopalMesh { vertices, cells, edges, h_mesh, origin: None };
    Analysis { mesh: Some(mesh), diagnostics: out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn unit_square() -> PolytopalMesh {
        build_mesh(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)],
            vec![vec![0, 1, 2, 3]],
            vec![Point::new(0.5, 0.5)],
        )
        .unwrap()
    }

    fn grid(n: usize) -> MeshInput {
        let h = 1.0 / n as f64;
        let mut vertices = Vec::new();
        for j in 0..=n {
            for i in 0..=n {
                vertices.push(Point::new(i as f64 * h, j as f64 * h));
            }
        }
        let mut cells = Vec::new();
        let mut pts = Vec::new();
        for j in 0..n {
            for i in 0..n {
                let v = j * (n + 1) + i;
                cells.push(vec![v, v + 1, v + n + 2, v + n + 1]);
                pts.push(Point::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h));
            }
        }
        MeshInput { vertices, cells, cell_points: pts }
    }

    #[test]
    fn single_square_geometry() {
        let m = unit_square();
        assert_eq!(m.n_cells(), 1);
        assert_eq!(m.edges().len(), 4);
        assert!(m.edges().iter().all(|e| e.kind() == EdgeKind::Boundary));
        for f in m.faces(0) {
            assert!((f.distance - 0.5).abs() < 1e-15);
            assert!((f.cone_measure() - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn triangle_area() {
        let m = build_mesh(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
            vec![vec![0, 1, 2]],
            vec![Point::new(1.0 / 3.0, 1.0 / 3.0)],
        )
        .unwrap();
        assert!((m.cell(0).measure - 0.5).abs() < 1e-15);
        assert!((m.cell(0).centroid.x - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn two_by_two_counts() {
        let m = PolytopalMesh::from_input(grid(2)).unwrap();
        assert_eq!(m.n_cells(), 4);
        assert_eq!(m.n_interior_edges(), 4);
        assert_eq!(m.edges().len() - m.n_interior_edges(), 8);
        for e in m.edges().iter().filter(|e| e.is_interior()) {
            let mut it = e.incidences();
            let (a, b) = (it.next().unwrap(), it.next().unwrap());
            assert_eq!(a.normal, -b.normal);
        }
    }

    #[test]
    fn theta_single_square() {
        let r = unit_square().regularity().unwrap();
        let expected = 2.0 * libm::sqrt(2.0) + 4.0;
        assert!((r.theta - expected).abs() < 1e-14);
        assert_eq!(r.interior_ratio, 0.0);
    }

    #[test]
    fn theta_uniform_grid() {
        let r = PolytopalMesh::from_input(grid(5)).unwrap().regularity().unwrap();
        assert!((r.theta - (1.0 + 2.0 * libm::sqrt(2.0) + 4.0)).abs() < 1e-12);
    }

    #[test]
    fn empty_mesh_rejected() {
        assert_eq!(build_mesh(vec![], vec![], vec![]), Err(MeshError::EmptyMesh));
    }

    #[test]
    fn validate_reports() {
        assert!(validate(&grid(2)).is_empty());

        let mut outside = grid(2);
        outside.cell_points[3] = Point::new(-0.2, 0.1);
        let d = validate(&outside);
        assert!(d.iter().any(|d| d.kind == ViolationKind::NonStarShaped && d.entity == Entity::Cell(3)));

        let mut dup = grid(2);
        dup.cells[1] = vec![1, 2, 2, 4];
        let d = validate(&dup);
        assert!(d.iter().any(|d| d.kind == ViolationKind::DegenerateCell && d.entity == Entity::Cell(1)));
    }

    #[test]
    fn clockwise_cell_rejected() {
        let err = build_mesh(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)],
            vec![vec![0, 2, 1]],
            vec![Point::new(0.25, 0.25)],
        )
        .unwrap_err();
        assert!(matches!(err, MeshError::DegenerateCell { cell: 0, .. }));
    }

    #[test]
    fn hanging_node_rejected() {
        // left: one big square; right: two half squares -> hanging vertex at (1, 0.5)
        let v = vec![
            Point::new(0.0, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, 1.0),
            Point::new(0.0, 1.0),
            Point::new(2.0, 0.0),
            Point::new(2.0, 0.5),
            Point::new(1.0, 0.5),
            Point::new(2.0, 1.0),
        ];
        let cells = vec![vec![0, 1, 2, 3], vec![1, 4, 5, 6], vec![6, 5, 7, 2]];
        let pts = vec![Point::new(0.5, 0.5), Point::new(1.5, 0.25), Point::new(1.5, 0.75)];
        let err = build_mesh(v, cells, pts).unwrap_err();
        assert!(matches!(err, MeshError::NonConforming { .. }), "{err:?}");
    }

    #[test]
    fn edge_shared_by_three_cells_rejected() {
        let v = vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.5, 1.0), Point::new(0.5, -1.0), Point::new(0.5, 2.0)];
        let cells = vec![vec![0, 1, 2], vec![1, 0, 3], vec![0, 1, 4]];
        let pts = vec![Point::new(0.5, 0.3), Point::new(0.5, -0.3), Point::new(0.5, 0.6)];
        let err = build_mesh(v, cells, pts).unwrap_err();
        assert!(matches!(err, MeshError::NonConforming { .. }));
    }
}
