//! Two-point flux approximation for `−div(a ∇u) = f` with scalar `a`.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::Point;
use crate::linalg::{CsrMatrix, SolveError, SolverKind, SpdSolver, TripletBuilder};
use crate::mesh::PolytopalMesh;
use crate::quadrature;

/// Orthogonality tolerance, in radians.
pub const ADMISSIBILITY_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum TpfaError {
    #[error("mesh is not admissible: edge {edge} has defect {defect:e}")]
    NotAdmissible { edge: usize, defect: f64 },
    #[error("coefficient is not positive in cell {cell}")]
    NonPositiveCoefficient { cell: usize },
    #[error("non-finite quadrature value in cell {cell}")]
    QuadratureFailure { cell: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    /// Angle between `x_L − x_K` and `n_{K,σ}` for every interior edge, `(edge, angle)`.
    pub interior: Vec<(usize, f64)>,
    /// How far the foot of the perpendicular from `x_K` falls outside the
    /// boundary edge, as a fraction of its length (0 when inside).
    pub boundary: Vec<(usize, f64)>,
    pub tolerance: f64,
}

impl AdmissibilityReport {
    pub fn max_defect(&self) -> f64 {
        self.interior.iter().chain(&self.boundary).map(|d| d.1).fold(0.0, f64::max)
    }

    pub fn worst(&self) -> Option<(usize, f64)> {
        self.interior
            .iter()
            .chain(&self.boundary)
            .copied()
            .fold(None, |acc: Option<(usize, f64)>, d| match acc {
                Some(a) if a.1 >= d.1 => Some(a),
                _ => Some(d),
            })
    }

    pub fn passed(&self) -> bool {
        self.max_defect() <= self.tolerance
    }
}

pub fn check_admissible(mesh: &PolytopalMesh) -> AdmissibilityReport {
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    for (e, edge) in mesh.edges().iter().enumerate() {
        let (k, l) = edge.cells();
        let first = edge.incidence(k).expect("first incidence");
        let xk = mesh.cell(k).cell_point;
        match l {
            Some(l) => {
                let t = mesh.cell(l).cell_point - xk;
                let angle = libm::atan2(t.cross(first.normal).abs(), t.dot(first.normal));
                interior.push((e, angle));
            }
            None => {
                let a = mesh.vertices()[edge.endpoints[0]];
                let b = mesh.vertices()[edge.endpoints[1]];
                let s = (xk - a).dot(b - a) / (b - a).norm_sq();
                boundary.push((e, (-s).max(s - 1.0).max(0.0)));
            }
        }
    }
    AdmissibilityReport { interior, boundary, tolerance: ADMISSIBILITY_TOL }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transmissibilities {
    /// `τ_σ` per edge.
    pub tau: Vec<f64>,
    /// Cell averages of `a`.
    pub a_k: Vec<f64>,
}

fn cell_average<F: Fn(Point) -> f64>(mesh: &PolytopalMesh, k: usize, f: &F) -> Result<(f64, f64), usize> {
    let c = mesh.cell(k);
    let verts = mesh.cell_vertices(k);
    let mut s = 0.0;
    let mut min = f64::INFINITY;
    quadrature::fan(c.cell_point, &verts, |_, p, w| {
        let v = f(p);
        min = min.min(v);
        s += w * v;
    });
    if !s.is_finite() {
        return Err(k);
    }
    Ok((s / c.measure, min))
}

pub fn transmissibilities<F: Fn(Point) -> f64>(mesh: &PolytopalMesh, a: F) -> Result<Transmissibilities, TpfaError> {
    let mut a_k = Vec::with_capacity(mesh.n_cells());
    for k in 0..mesh.n_cells() {
        let (avg, min) = cell_average(mesh, k, &a).map_err(|cell| TpfaError::QuadratureFailure { cell })?;
        if !(min > 0.0) || !(avg > 0.0) {
            return Err(TpfaError::NonPositiveCoefficient { cell: k });
        }
        a_k.push(avg);
    }
    let tau = mesh
        .edges()
        .iter()
        .map(|edge| {
            let mut inc = edge.incidences();
            let ik = inc.next().expect("edge has a cell");
            match inc.next() {
                Some(il) => {
                    let (ak, al) = (a_k[ik.cell], a_k[il.cell]);
                    edge.length * ak * al / (ak * il.distance + al * ik.distance)
                }
                None => edge.length * a_k[ik.cell] / ik.distance,
            }
        })
        .collect();
    Ok(Transmissibilities { tau, a_k })
}

#[derive(Clone, Debug)]
pub struct TpfaSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub transmissibilities: Transmissibilities,
}

/// Builds the cell-centred system; fails on non-admissible meshes.
pub fn assemble<A, F>(mesh: &PolytopalMesh, a: A, f: F) -> Result<TpfaSystem, TpfaError>
where
    A: Fn(Point) -> f64,
    F: Fn(Point) -> f64,
{
    let report = check_admissible(mesh);
    if !report.passed() {
        let (edge, defect) = report.worst().expect("non-empty report");
        return Err(TpfaError::NotAdmissible { edge, defect });
    }
    let trans = transmissibilities(mesh, a)?;
    let n = mesh.n_cells();
    let mut builder = TripletBuilder::new(n);
    for (e, edge) in mesh.edges().iter().enumerate() {
        let t = trans.tau[e];
        match edge.cells() {
            (k, Some(l)) => {
                builder.add(k, k, t);
                builder.add(l, l, t);
                builder.add(k, l, -t);
                builder.add(l, k, -t);
            }
            (k, None) => builder.add(k, k, t),
        }
    }
    let mut rhs = vec![0.0; n];
    for (k, b) in rhs.iter_mut().enumerate() {
        let c = mesh.cell(k);
        *b = cell_average(mesh, k, &f).map_err(|cell| TpfaError::QuadratureFailure { cell })?.0 * c.measure;
    }
    Ok(TpfaSystem { matrix: builder.build(), rhs, transmissibilities: trans })
}

impl TpfaSystem {
    pub fn solve(&self) -> Result<Vec<f64>, TpfaError> {
        Ok(SpdSolver::new(&self.matrix, SolverKind::Auto)?.solve(&self.rhs)?)
    }

    /// `τ_σ (u_K − u_L)` from the first cell of each edge (`u_L = 0` on the boundary).
    pub fn edge_fluxes(&self, mesh: &PolytopalMesh, u: &[f64]) -> Vec<f64> {
        mesh.edges()
            .iter()
            .zip(&self.transmissibilities.tau)
            .map(|(edge, t)| {
                let (k, l) = edge.cells();
                t * (u[k] - l.map_or(0.0, |l| u[l]))
            })
            .collect()
    }
}

/// Cell values `u_K` of the TPFA scheme.
pub fn assemble_and_solve<A, F>(mesh: &PolytopalMesh, a: A, f: F) -> Result<Vec<f64>, TpfaError>
where
    A: Fn(Point) -> f64,
    F: Fn(Point) -> f64,
{
    assemble(mesh, a, f)?.solve()
}
