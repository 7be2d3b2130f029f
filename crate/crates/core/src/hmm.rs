//! Hybrid mimetic mixed (HMM) gradient discretisation with isomorphism
//! `α·Id`: cell and interior-edge unknowns, local stiffness matrices, global
//! assembly, standard and modified source terms, and reconstructions.

use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{Mat2, Point};
use crate::linalg::{CsrMatrix, SolveError, SolverKind, SpdSolver, TripletBuilder};
use crate::mesh::PolytopalMesh;
use crate::quadrature;

const SQRT2: f64 = core::f64::consts::SQRT_2;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum HmmError {
    #[error("stabilisation parameter alpha must be positive and finite, got {0}")]
    InvalidAlpha(f64),
    #[error("diffusion tensor is not symmetric in cell {cell}")]
    NonSymmetricTensor { cell: usize },
    #[error("diffusion tensor is not uniformly elliptic in cell {cell} (eigenvalue {eigenvalue:e})")]
    NonEllipticTensor { cell: usize, eigenvalue: f64 },
    #[error("non-finite quadrature value in cell {cell}")]
    QuadratureFailure { cell: usize },
    #[error("field has {got} values, layout expects {expected}")]
    LayoutMismatch { expected: usize, got: usize },
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// Numbering of the unknowns: cells first, then interior edges in edge order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DofLayout {
    n_cells: usize,
    edge_dof: Vec<Option<usize>>,
    n_dofs: usize,
}

impl DofLayout {
    pub fn new(mesh: &PolytopalMesh) -> Self {
        let n_cells = mesh.n_cells();
        let mut next = n_cells;
        let edge_dof = mesh
            .edges()
            .iter()
            .map(|e| {
                e.is_interior().then(|| {
                    next += 1;
                    next - 1
                })
            })
            .collect();
        DofLayout { n_cells, edge_dof, n_dofs: next }
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn n_cells(&self) -> usize {
        self.n_cells
    }

    pub fn cell_dof(&self, k: usize) -> usize {
        k
    }

    /// `None` for boundary edges (pinned to zero).
    pub fn edge_dof(&self, e: usize) -> Option<usize> {
        self.edge_dof[e]
    }

    pub fn n_edges(&self) -> usize {
        self.edge_dof.len()
    }
}

/// Values of an element of `X_{D,0}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteField {
    pub layout: DofLayout,
    pub values: Vec<f64>,
}

impl DiscreteField {
    pub fn zeros(layout: DofLayout) -> Self {
        let n = layout.n_dofs();
        DiscreteField { layout, values: vec![0.0; n] }
    }

    pub fn from_values(layout: DofLayout, values: Vec<f64>) -> Result<Self, HmmError> {
        if values.len() != layout.n_dofs() {
            return Err(HmmError::LayoutMismatch { expected: layout.n_dofs(), got: values.len() });
        }
        Ok(DiscreteField { layout, values })
    }

    pub fn cell(&self, k: usize) -> f64 {
        self.values[k]
    }

    /// Edge value, zero on the boundary.
    pub fn edge(&self, e: usize) -> f64 {
        self.layout.edge_dof(e).map_or(0.0, |d| self.values[d])
    }

    pub fn cell_values(&self) -> &[f64] {
        &self.values[..self.layout.n_cells()]
    }

    fn check(&self, mesh: &PolytopalMesh) -> Result<(), HmmError> {
        if self.layout.n_cells() != mesh.n_cells() || self.layout.n_edges() != mesh.edges().len() {
            return Err(HmmError::LayoutMismatch { expected: DofLayout::new(mesh).n_dofs(), got: self.values.len() });
        }
        if self.values.len() != self.layout.n_dofs() {
            return Err(HmmError::LayoutMismatch { expected: self.layout.n_dofs(), got: self.values.len() });
        }
        Ok(())
    }

    /// `δ_σ = u_K − u_σ` for the local edges of cell `k`.
    pub fn local_jumps(&self, mesh: &PolytopalMesh, k: usize) -> Vec<f64> {
        let uk = self.cell(k);
        mesh.cell(k).edge_ids.iter().map(|&e| uk - self.edge(e)).collect()
    }
}

/// `A_K = (1/|K|) ∫_K A` for every cell, checking symmetry and ellipticity
/// at every quadrature node.
pub fn project_tensor<F: Fn(Point) -> Mat2>(mesh: &PolytopalMesh, a: F) -> Result<Vec<Mat2>, HmmError> {
    (0..mesh.n_cells())
        .map(|k| {
            let c = mesh.cell(k);
            let verts = mesh.cell_vertices(k);
            let mut acc = Mat2::ZERO;
            let mut err = None;
            quadrature::fan(c.cell_point, &verts, |_, p, w| {
                let m = a(p);
                if err.is_some() {
                    return;
                }
                if !m.is_finite() {
                    err = Some(HmmError::QuadratureFailure { cell: k });
                } else if (m.xy - m.yx).abs() > 1e-12 * m.max_abs() {
                    err = Some(HmmError::NonSymmetricTensor { cell: k });
                } else {
                    let (lo, _) = m.sym_eigenvalues();
                    if !(lo > 0.0) {
                        err = Some(HmmError::NonEllipticTensor { cell: k, eigenvalue: lo });
                    }
                }
                acc += m * w;
            });
            if let Some(e) = err {
                return Err(e);
            }
            let mut ak = acc * (1.0 / c.measure);
            // exact symmetry of the projection
            let off = 0.5 * (ak.xy + ak.yx);
            ak.xy = off;
            ak.yx = off;
            Ok(ak)
        })
        .collect()
}

/// Dense per-cell operators; `m` is the number of edges of the cell and
/// matrices are row-major `m × m`.
#[derive(Clone, Debug, PartialEq)]
pub struct LocalCellOperators {
    pub m: usize,
    pub measure: f64,
    pub tensor: Mat2,
    /// Columns of `G_K`: `(|σ|/|K|) n_{K,σ}`.
    pub g: Vec<Point>,
    /// Rows of `X_K`: `x̄_σ − x_K`.
    pub x: Vec<Point>,
    /// `R_K = I − X_K G_K`.
    pub r: Vec<f64>,
    /// Diagonal of `B_K`.
    pub b: Vec<f64>,
    /// `W_K = |K| G_Kᵀ A_K G_K + R_Kᵀ B_K R_K`.
    pub w: Vec<f64>,
}

impl LocalCellOperators {
    /// `W_K δ`: the fluxes `F_{K,σ}` for local jumps `δ`.
    pub fn apply_w(&self, delta: &[f64]) -> Vec<f64> {
        (0..self.m).map(|i| (0..self.m).map(|j| self.w[i * self.m + j] * delta[j]).sum()).collect()
    }

    pub fn energy(&self, delta: &[f64]) -> f64 {
        self.apply_w(delta).iter().zip(delta).map(|(a, b)| a * b).sum()
    }

    pub fn apply_r(&self, v: &[f64]) -> Vec<f64> {
        (0..self.m).map(|i| (0..self.m).map(|j| self.r[i * self.m + j] * v[j]).sum()).collect()
    }

    /// `G_K v`.
    pub fn apply_g(&self, v: &[f64]) -> Point {
        self.g.iter().zip(v).fold(Point::ZERO, |acc, (g, vi)| acc + *g * *vi)
    }
}

/// Builds `G_K, X_K, R_K, B_K, W_K` for cell `k`.
pub fn local_operators(mesh: &PolytopalMesh, k: usize, a_k: Mat2, alpha: f64) -> Result<LocalCellOperators, HmmError> {
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(HmmError::InvalidAlpha(alpha));
    }
    let c = mesh.cell(k);
    let faces: Vec<_> = mesh.faces(k).collect();
    let m = faces.len();
    let g: Vec<Point> = faces.iter().map(|f| f.normal * (f.length / c.measure)).collect();
    let x: Vec<Point> = faces.iter().map(|f| f.midpoint - c.cell_point).collect();
    let mut r = vec![0.0; m * m];
    for i in 0..m {
        for j in 0..m {
            r[i * m + j] = if i == j { 1.0 } else { 0.0 } - x[i].dot(g[j]);
        }
    }
    let b: Vec<f64> = faces
        .iter()
        .map(|f| alpha * alpha * f.length / f.distance * a_k.apply(f.normal).dot(f.normal))
        .collect();
    let mut w = vec![0.0; m * m];
    for i in 0..m {
        for j in i..m {
            let consistent = c.measure * g[i].dot(a_k.apply(g[j]));
            let stab: f64 = (0..m).map(|l| r[l * m + i] * b[l] * r[l * m + j]).sum();
            w[i * m + j] = consistent + stab;
            w[j * m + i] = consistent + stab;
        }
    }
    Ok(LocalCellOperators { m, measure: c.measure, tensor: a_k, g, x, r, b, w })
}

/// Assembled HMM stiffness matrix with the local operators it came from.
#[derive(Clone, Debug)]
pub struct HmmSystem {
    pub matrix: CsrMatrix,
    pub layout: DofLayout,
    pub alpha: f64,
    pub local: Vec<LocalCellOperators>,
}

/// Assembles the global matrix cell by cell (ascending cell index).
pub fn assemble(mesh: &PolytopalMesh, tensors: &[Mat2], alpha: f64) -> Result<HmmSystem, HmmError> {
    let layout = DofLayout::new(mesh);
    let local = (0..mesh.n_cells())
        .map(|k| local_operators(mesh, k, tensors[k], alpha))
        .collect::<Result<Vec<_>, _>>()?;
    let mut builder = TripletBuilder::new(layout.n_dofs());
    for (k, ops) in local.iter().enumerate() {
        let m = ops.m;
        let dofs: Vec<Option<usize>> = mesh.cell(k).edge_ids.iter().map(|&e| layout.edge_dof(e)).collect();
        let row_sums: Vec<f64> = (0..m).map(|i| ops.w[i * m..(i + 1) * m].iter().sum()).collect();
        let total: f64 = row_sums.iter().sum();
        let kd = layout.cell_dof(k);
        builder.add(kd, kd, total);
        for i in 0..m {
            let Some(di) = dofs[i] else { continue };
            builder.add(kd, di, -row_sums[i]);
            builder.add(di, kd, -row_sums[i]);
            for j in 0..m {
                if let Some(dj) = dofs[j] {
                    builder.add(di, dj, ops.w[i * m + j]);
                }
            }
        }
    }
    Ok(HmmSystem { matrix: builder.build(), layout, alpha, local })
}

/// Per-cell source integrals `∫_K f` and first moments `m_K = ∫_K f (x − x_K)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SourceMoments {
    pub integral: Vec<f64>,
    pub first_moment: Vec<Point>,
}

impl SourceMoments {
    pub fn compute<F: Fn(Point) -> f64>(mesh: &PolytopalMesh, f: F) -> Result<Self, HmmError> {
        let mut integral = Vec::with_capacity(mesh.n_cells());
        let mut first_moment = Vec::with_capacity(mesh.n_cells());
        for k in 0..mesh.n_cells() {
            let xk = mesh.cell(k).cell_point;
            let verts = mesh.cell_vertices(k);
            let mut s = 0.0;
            let mut mo = Point::ZERO;
            quadrature::fan(xk, &verts, |_, p, w| {
                let v = f(p) * w;
                s += v;
                mo += (p - xk) * v;
            });
            if !s.is_finite() || !mo.is_finite() {
                return Err(HmmError::QuadratureFailure { cell: k });
            }
            integral.push(s);
            first_moment.push(mo);
        }
        Ok(SourceMoments { integral, first_moment })
    }

    /// `(|σ|/|K|) n_{K,σ}·m_K` for local edge `face.local` of cell `k`.
    pub fn edge_term(&self, mesh: &PolytopalMesh, k: usize, length: f64, normal: Point) -> f64 {
        length / mesh.cell(k).measure * normal.dot(self.first_moment[k])
    }
}

/// Right-hand side `∫ f Π_D v`: cell rows only.
pub fn rhs_standard_from(layout: &DofLayout, moments: &SourceMoments) -> Vec<f64> {
    let mut b = vec![0.0; layout.n_dofs()];
    b[..layout.n_cells()].copy_from_slice(&moments.integral);
    b
}

/// Right-hand side `∫ f Π_D★ v`: cell rows unchanged, interior-edge rows
/// gain `Σ_K (|σ|/|K|) n_{K,σ}·m_K`.
pub fn rhs_modified_from(mesh: &PolytopalMesh, layout: &DofLayout, moments: &SourceMoments) -> Vec<f64> {
    let mut b = rhs_standard_from(layout, moments);
    for k in 0..mesh.n_cells() {
        for f in mesh.faces(k) {
            if let Some(d) = layout.edge_dof(f.edge) {
                b[d] += moments.edge_term(mesh, k, f.length, f.normal);
            }
        }
    }
    b
}

pub fn rhs_standard<F: Fn(Point) -> f64>(mesh: &PolytopalMesh, f: F) -> Result<Vec<f64>, HmmError> {
    Ok(rhs_standard_from(&DofLayout::new(mesh), &SourceMoments::compute(mesh, f)?))
}

pub fn rhs_modified<F: Fn(Point) -> f64>(mesh: &PolytopalMesh, f: F) -> Result<Vec<f64>, HmmError> {
    let layout = DofLayout::new(mesh);
    Ok(rhs_modified_from(mesh, &layout, &SourceMoments::compute(mesh, f)?))
}

impl HmmSystem {
    pub fn solver(&self, kind: SolverKind) -> Result<SpdSolver<'_>, HmmError> {
        Ok(SpdSolver::new(&self.matrix, kind)?)
    }

    /// Factorises and solves for one right-hand side.
    pub fn solve(&self, rhs: &[f64]) -> Result<DiscreteField, HmmError> {
        let x = self.solver(SolverKind::Auto)?.solve(rhs)?;
        DiscreteField::from_values(self.layout.clone(), x)
    }

    pub fn field(&self, values: Vec<f64>) -> Result<DiscreteField, HmmError> {
        DiscreteField::from_values(self.layout.clone(), values)
    }
}

/// Reconstructed functions and gradients of a discrete field.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    /// `Π_D u` on each cell.
    pub pi_d: Vec<f64>,
    /// `∇_K u` on each cell.
    pub grad_k: Vec<Point>,
    /// `∇_D u` on each cone, indexed `[cell][local edge]`.
    pub grad_d: Vec<Vec<Point>>,
    cell_points: Vec<Point>,
}

impl Reconstruction {
    /// `Π_D★ u(x) = u_K + ∇_K u·(x − x_K)` for `x` in cell `k`.
    pub fn pi_d_star(&self, k: usize, x: Point) -> f64 {
        self.pi_d[k] + self.grad_k[k].dot(x - self.cell_points[k])
    }
}

/// `∇_K v`, `R_K(v)` and the cone gradients of one cell.
#[derive(Clone, Debug, PartialEq)]
pub struct CellReconstruction {
    pub grad_k: Point,
    pub stab: Vec<f64>,
    pub cones: Vec<Point>,
}

/// Reconstruction on cell `k` from a cell value and one value per local
/// edge (boundary edges included, in `faces(k)` order).
pub fn cell_reconstruction(mesh: &PolytopalMesh, k: usize, u_k: f64, edge_values: &[f64], alpha: f64) -> CellReconstruction {
    let c = mesh.cell(k);
    let faces: Vec<_> = mesh.faces(k).collect();
    debug_assert_eq!(faces.len(), edge_values.len());
    let grad_k = faces
        .iter()
        .zip(edge_values)
        .fold(Point::ZERO, |acc, (f, v)| acc + f.normal * (f.length * v))
        * (1.0 / c.measure);
    let stab: Vec<f64> = faces
        .iter()
        .zip(edge_values)
        .map(|(f, v)| v - u_k - grad_k.dot(f.midpoint - c.cell_point))
        .collect();
    let cones = faces
        .iter()
        .zip(&stab)
        .map(|(f, r)| grad_k + f.normal * (SQRT2 / f.distance * alpha * r))
        .collect();
    CellReconstruction { grad_k, stab, cones }
}

fn cell_gradients(mesh: &PolytopalMesh, u: &DiscreteField, k: usize, alpha: f64) -> CellReconstruction {
    let values: Vec<f64> = mesh.cell(k).edge_ids.iter().map(|&e| u.edge(e)).collect();
    cell_reconstruction(mesh, k, u.cell(k), &values, alpha)
}

/// Stabilisation residuals `R_{K,σ}(u) = u_σ − u_K − ∇_K u·(x̄_σ − x_K)`.
pub fn stabilisation(mesh: &PolytopalMesh, u: &DiscreteField, k: usize) -> Vec<f64> {
    cell_gradients(mesh, u, k, 1.0).stab
}

pub fn reconstruct(u: &DiscreteField, mesh: &PolytopalMesh, alpha: f64) -> Result<Reconstruction, HmmError> {
    u.check(mesh)?;
    if !(alpha > 0.0) || !alpha.is_finite() {
        return Err(HmmError::InvalidAlpha(alpha));
    }
    let mut grad_k = Vec::with_capacity(mesh.n_cells());
    let mut grad_d = Vec::with_capacity(mesh.n_cells());
    for k in 0..mesh.n_cells() {
        let r = cell_gradients(mesh, u, k, alpha);
        grad_k.push(r.grad_k);
        grad_d.push(r.cones);
    }
    Ok(Reconstruction {
        pi_d: u.cell_values().to_vec(),
        grad_k,
        grad_d,
        cell_points: mesh.cells().iter().map(|c| c.cell_point).collect(),
    })
}

/// Interpolant `P_D φ`: `φ(x_K)` in cells, edge averages on interior edges.
pub fn interpolate<F: Fn(Point) -> f64>(phi: F, mesh: &PolytopalMesh) -> DiscreteField {
    let layout = DofLayout::new(mesh);
    let mut values = vec![0.0; layout.n_dofs()];
    for (k, c) in mesh.cells().iter().enumerate() {
        values[k] = phi(c.cell_point);
    }
    for (e, edge) in mesh.edges().iter().enumerate() {
        if let Some(d) = layout.edge_dof(e) {
            let (a, b) = (mesh.vertices()[edge.endpoints[0]], mesh.vertices()[edge.endpoints[1]]);
            let mut s = 0.0;
            quadrature::segment(a, b, |p, w| s += w * phi(p));
            values[d] = s / edge.length;
        }
    }
    DiscreteField { layout, values }
}

/// The two parts of `I_{D,α}(φ, v) = ‖Π_D★ v − φ‖ + α ‖∇_D v − ∇φ‖`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InterpolationError {
    pub function_part: f64,
    pub gradient_part: f64,
    pub alpha: f64,
}

impl InterpolationError {
    pub fn total(&self) -> f64 {
        self.function_part + self.alpha * self.gradient_part
    }
}

/// Evaluates `I_{D,α}(φ, v)` with cone quadrature; `hmm_alpha` is the
/// stabilisation parameter of `∇_D`, `weight` the factor on the gradient part.
pub fn interpolation_error<F, G>(
    phi: F,
    grad_phi: G,
    v: &DiscreteField,
    mesh: &PolytopalMesh,
    hmm_alpha: f64,
    weight: f64,
) -> Result<InterpolationError, HmmError>
where
    F: Fn(Point) -> f64,
    G: Fn(Point) -> Point,
{
    let rec = reconstruct(v, mesh, hmm_alpha)?;
    let mut fsq = 0.0;
    let mut gsq = 0.0;
    for k in 0..mesh.n_cells() {
        let verts = mesh.cell_vertices(k);
        quadrature::fan(mesh.cell(k).cell_point, &verts, |i, p, w| {
            let df = rec.pi_d_star(k, p) - phi(p);
            let dg = rec.grad_d[k][i] - grad_phi(p);
            fsq += w * df * df;
            gsq += w * dg.norm_sq();
        });
    }
    Ok(InterpolationError { function_part: libm::sqrt(fsq), gradient_part: libm::sqrt(gsq), alpha: weight })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::meshgen::{cartesian, PointPlacement};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit_square(p: Point) -> PolytopalMesh {
        crate::mesh::build_mesh(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0)],
            vec![vec![0, 1, 2, 3]],
            vec![p],
        )
        .unwrap()
    }

    /// Cone-wise `Σ_σ |D_{K,σ}| A_K ∇_D u·∇_D u`, straight from the gradient definition.
    fn cone_energy(mesh: &PolytopalMesh, u: &DiscreteField, k: usize, a: Mat2, alpha: f64) -> f64 {
        let rec = reconstruct(u, mesh, alpha).unwrap();
        mesh.faces(k).map(|f| f.cone_measure() * a.apply(rec.grad_d[k][f.local]).dot(rec.grad_d[k][f.local])).sum()
    }

    #[test]
    fn tensor_projection() {
        let m = unit_square(Point::new(0.5, 0.5));
        let id = project_tensor(&m, |_| Mat2::IDENTITY).unwrap();
        assert_eq!(id[0], Mat2::IDENTITY);
        let lin = project_tensor(&m, |p| Mat2::scaled_identity(1.0 + p.x)).unwrap();
        assert!((lin[0].xx - 1.5).abs() < 1e-15 && (lin[0].yy - 1.5).abs() < 1e-15 && lin[0].xy == 0.0);
        assert!(matches!(
            project_tensor(&m, |_| Mat2::diag(1.0, -0.5)),
            Err(HmmError::NonEllipticTensor { cell: 0, .. })
        ));
        assert!(matches!(project_tensor(&m, |_| Mat2::new(1.0, 0.3, 0.1, 1.0)), Err(HmmError::NonSymmetricTensor { .. })));
    }

    #[test]
    fn invalid_alpha() {
        let m = unit_square(Point::new(0.5, 0.5));
        assert_eq!(local_operators(&m, 0, Mat2::IDENTITY, 0.0), Err(HmmError::InvalidAlpha(0.0)));
        assert!(assemble(&m, &[Mat2::IDENTITY], -1.0).is_err());
    }

    #[test]
    fn affine_interpolant_on_square() {
        // v_K = ℓ(x_K), v_σ = ℓ(x̄_σ) with ℓ = x
        let m = unit_square(Point::new(0.5, 0.5));
        let ops = local_operators(&m, 0, Mat2::IDENTITY, 1.0).unwrap();
        let v_edges: Vec<f64> = m.faces(0).map(|f| f.midpoint.x).collect();
        let g = ops.apply_g(&v_edges);
        assert!((g.x - 1.0).abs() < 1e-15 && g.y.abs() < 1e-15);
        let delta: Vec<f64> = v_edges.iter().map(|ve| 0.5 - ve).collect();
        let rd = ops.apply_r(&delta);
        assert!(rd.iter().all(|r| r.abs() < 1e-15));
        // only the consistent part remains: |K| |∇ℓ|² = 1
        assert!((ops.energy(&delta) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_field_has_zero_energy() {
        let m = unit_square(Point::new(0.3, 0.6));
        let ops = local_operators(&m, 0, Mat2::IDENTITY, 1.0).unwrap();
        let w0 = ops.apply_w(&[0.0; 4]);
        assert!(w0.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn quadratic_form_matches_cone_oracle_on_square() {
        let m = crate::mesh::build_mesh(
            vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(1.0, 1.0), Point::new(0.0, 1.0),
                 Point::new(2.0, 0.0), Point::new(2.0, 1.0)],
            vec![vec![0, 1, 2, 3], vec![1, 4, 5, 2]],
            vec![Point::new(0.5, 0.5), Point::new(1.4, 0.55)],
        )
        .unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let layout = DofLayout::new(&m);
        for alpha in [1.0, 0.3, 2.5] {
            let ops = local_operators(&m, 0, Mat2::IDENTITY, alpha).unwrap();
            for _ in 0..20 {
                let vals: Vec<f64> = (0..layout.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let u = DiscreteField::from_values(layout.clone(), vals).unwrap();
                let delta = u.local_jumps(&m, 0);
                let lhs = ops.energy(&delta);
                let rhs = cone_energy(&m, &u, 0, Mat2::IDENTITY, alpha);
                assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1e-300), "{lhs} vs {rhs}");
            }
        }
    }

    #[test]
    fn one_cell_system() {
        let m = unit_square(Point::new(0.5, 0.5));
        let sys = assemble(&m, &[Mat2::IDENTITY], 1.0).unwrap();
        assert_eq!(sys.matrix.dim(), 1);
        // δ = (1,1,1,1) (u_K = 1, edges pinned): G δ = 0, R δ = δ, so W-sum = Σ B = 4 · (1/0.5)
        assert!((sys.matrix.get(0, 0) - 8.0).abs() < 1e-13);
    }

    #[test]
    fn two_by_one_is_spd() {
        let m = cartesian(2, 1, PointPlacement::Centroid).unwrap();
        let sys = assemble(&m, &vec![Mat2::IDENTITY; 2], 1.0).unwrap();
        assert_eq!(sys.matrix.dim(), 3);
        assert_eq!(sys.matrix.asymmetry(), 0.0);
        let d = sys.matrix.to_dense();
        // leading principal minors
        let m1 = d[0];
        let m2 = d[0] * d[4] - d[1] * d[3];
        let m3 = d[0] * (d[4] * d[8] - d[5] * d[7]) - d[1] * (d[3] * d[8] - d[5] * d[6]) + d[2] * (d[3] * d[7] - d[4] * d[6]);
        assert!(m1 > 0.0 && m2 > 0.0 && m3 > 0.0);

        let rhs = rhs_standard(&m, |_| 1.0).unwrap();
        let u = sys.solve(&rhs).unwrap();
        assert!((u.cell(0) - u.cell(1)).abs() < 1e-14);
    }

    #[test]
    fn rhs_examples() {
        let m = unit_square(Point::new(0.5, 0.5));
        assert!((rhs_standard(&m, |_| 1.0).unwrap()[0] - 1.0).abs() < 1e-15);
        assert!((rhs_standard(&m, |p| p.x).unwrap()[0] - 0.5).abs() < 1e-15);
        let bubble = |p: Point| 32.0 * (p.x * (1.0 - p.x) + p.y * (1.0 - p.y));
        assert!((rhs_standard(&m, bubble).unwrap()[0] - 32.0 / 3.0).abs() < 1e-13);
        let mo = SourceMoments::compute(&m, |p| p.x).unwrap();
        assert!((mo.first_moment[0].x - 1.0 / 12.0).abs() < 1e-15 && mo.first_moment[0].y.abs() < 1e-15);

        let g = cartesian(3, 3, PointPlacement::Centroid).unwrap();
        assert_eq!(rhs_standard(&g, |_| 1.0).unwrap(), rhs_modified(&g, |_| 1.0).unwrap().iter().map(|v| if v.abs() < 1e-15 { 0.0 } else { *v }).collect::<Vec<_>>());
        assert!(rhs_modified(&g, |_| 0.0).unwrap().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn reconstruction_identities_random() {
        let m = cartesian(2, 2, PointPlacement::CheckerboardShift(0.2)).unwrap();
        let layout = DofLayout::new(&m);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let vals: Vec<f64> = (0..layout.n_dofs()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let u = DiscreteField::from_values(layout, vals).unwrap();
        let rec = reconstruct(&u, &m, 1.0).unwrap();
        for k in 0..m.n_cells() {
            let sum = m.faces(k).fold(Point::ZERO, |a, f| a + rec.grad_d[k][f.local] * f.cone_measure());
            let target = rec.grad_k[k] * m.cell(k).measure;
            assert!((sum - target).norm() <= 1e-13 * target.norm().max(1.0));
        }
    }

    #[test]
    fn constant_field_reconstruction() {
        // the centre cell of a 3×3 grid has only interior edges
        let m = cartesian(3, 3, PointPlacement::Centroid).unwrap();
        let centre = (0..m.n_cells()).find(|&k| m.faces(k).all(|f| f.interior)).unwrap();
        let mut u = DiscreteField::zeros(DofLayout::new(&m));
        u.values.iter_mut().for_each(|v| *v = 2.0);
        let rec = reconstruct(&u, &m, 1.0).unwrap();
        assert_eq!(rec.pi_d[centre], 2.0);
        assert!(rec.grad_k[centre].norm() < 1e-14);
        for g in &rec.grad_d[centre] {
            assert!(g.norm() < 1e-14);
        }
        // a boundary cell sees the zero boundary values
        assert!(rec.grad_k[0].norm() > 1.0);
    }

    #[test]
    fn explicit_boundary_values_are_exact_for_affines() {
        let m = cartesian(2, 3, PointPlacement::UniformShift(Point::new(0.2, -0.1))).unwrap();
        let l = |p: Point| 1.5 - 2.0 * p.x + 0.25 * p.y;
        for k in 0..m.n_cells() {
            let vals: Vec<f64> = m.faces(k).map(|f| l(f.midpoint)).collect();
            let r = cell_reconstruction(&m, k, l(m.cell(k).cell_point), &vals, 0.7);
            assert!((r.grad_k - Point::new(-2.0, 0.25)).norm() < 1e-13);
            assert!(r.stab.iter().all(|s| s.abs() < 1e-14));
        }
    }

    #[test]
    fn layout_mismatch() {
        let m = cartesian(2, 2, PointPlacement::Centroid).unwrap();
        let other = cartesian(3, 3, PointPlacement::Centroid).unwrap();
        let u = DiscreteField::zeros(DofLayout::new(&other));
        assert!(matches!(reconstruct(&u, &m, 1.0), Err(HmmError::LayoutMismatch { .. })));
        assert!(DiscreteField::from_values(DofLayout::new(&m), vec![0.0; 3]).is_err());
    }

    #[test]
    fn interpolate_zero_and_affine() {
        let m = cartesian(4, 4, PointPlacement::CheckerboardShift(0.25)).unwrap();
        let z = interpolate(|_| 0.0, &m);
        assert!(z.values.iter().all(|&v| v == 0.0));
        // affine with zero boundary values is impossible on [0,1]², so check ∇_K on interior cells only
        let u = interpolate(|p| 2.0 * p.x - p.y + 0.5, &m);
        let rec = reconstruct(&u, &m, 1.0).unwrap();
        for k in 0..m.n_cells() {
            if m.faces(k).all(|f| f.interior) {
                assert!((rec.grad_k[k] - Point::new(2.0, -1.0)).norm() < 1e-13);
            }
        }
    }
}
