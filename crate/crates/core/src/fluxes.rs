//! Numerical fluxes of HMM solutions and the finite-volume identities they
//! satisfy: balance, conservativity, the modified-scheme defect and its
//! conservative correction.

use alloc::vec;
use alloc::vec::Vec;

use crate::hmm::{DiscreteField, HmmError, HmmSystem, SourceMoments};
use crate::mesh::PolytopalMesh;

/// Relative threshold used by the audits.
pub const AUDIT_TOL: f64 = 1e-10;
/// Absolute floor of the flux and source scales.
pub const SCALE_FLOOR: f64 = 1e-14;

/// `F_{K,σ}` indexed `[cell][local edge]`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxField {
    pub values: Vec<Vec<f64>>,
}

impl FluxField {
    pub fn get(&self, k: usize, local: usize) -> f64 {
        self.values[k][local]
    }

    /// `max |F_{K,σ}|`, floored.
    pub fn scale(&self) -> f64 {
        self.values.iter().flatten().fold(SCALE_FLOOR, |m, v| m.max(v.abs()))
    }

    pub fn cell_sum(&self, k: usize) -> f64 {
        self.values[k].iter().sum()
    }

    /// `F_{K,σ} + F_{L,σ}` for every interior edge, `(edge, sum)`.
    pub fn edge_sums(&self, mesh: &PolytopalMesh) -> Vec<(usize, f64)> {
        let mut sums = Vec::with_capacity(mesh.n_interior_edges());
        for (e, edge) in mesh.edges().iter().enumerate() {
            if let (k, Some(l)) = edge.cells() {
                sums.push((e, self.values[k][local_index(mesh, k, e)] + self.values[l][local_index(mesh, l, e)]));
            }
        }
        sums
    }
}

fn local_index(mesh: &PolytopalMesh, k: usize, e: usize) -> usize {
    mesh.cell(k).edge_ids.iter().position(|&x| x == e).expect("edge belongs to cell")
}

/// `(F_{K,σ})_σ = W_K (u_K − u_σ)_σ`.
pub fn cell_fluxes(u: &DiscreteField, mesh: &PolytopalMesh, system: &HmmSystem) -> Result<FluxField, HmmError> {
    if u.layout != system.layout || system.local.len() != mesh.n_cells() {
        return Err(HmmError::LayoutMismatch { expected: system.layout.n_dofs(), got: u.values.len() });
    }
    let values = system.local.iter().enumerate().map(|(k, ops)| ops.apply_w(&u.local_jumps(mesh, k))).collect();
    Ok(FluxField { values })
}

/// `(|σ|/|K|) ∫_K f n_{K,σ}·(x − x_K)` indexed `[cell][local edge]`.
pub fn moment_terms(mesh: &PolytopalMesh, moments: &SourceMoments) -> Vec<Vec<f64>> {
    (0..mesh.n_cells())
        .map(|k| mesh.faces(k).map(|f| moments.edge_term(mesh, k, f.length, f.normal)).collect())
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FluxAudit {
    /// `|Σ_σ F_{K,σ} − ∫_K f|` per cell.
    pub balance: Vec<f64>,
    /// Per interior edge, distance of `F_{K,σ} + F_{L,σ}` from its expected value.
    pub conservativity: Vec<(usize, f64)>,
    pub flux_scale: f64,
    pub source_scale: f64,
}

impl FluxAudit {
    pub fn max_balance(&self) -> f64 {
        self.balance.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_conservativity(&self) -> f64 {
        self.conservativity.iter().map(|c| c.1).fold(0.0, f64::max)
    }

    pub fn relative_balance(&self) -> f64 {
        self.max_balance() / self.source_scale.max(self.flux_scale)
    }

    pub fn relative_conservativity(&self) -> f64 {
        self.max_conservativity() / self.flux_scale
    }

    pub fn balance_ok(&self) -> bool {
        self.relative_balance() <= AUDIT_TOL
    }

    pub fn conservativity_ok(&self) -> bool {
        self.relative_conservativity() <= AUDIT_TOL
    }

    pub fn passed(&self) -> bool {
        self.balance_ok() && self.conservativity_ok()
    }
}

fn audit(flux: &FluxField, mesh: &PolytopalMesh, moments: &SourceMoments, expected_edge: impl Fn(usize) -> f64) -> FluxAudit {
    let balance = (0..mesh.n_cells()).map(|k| (flux.cell_sum(k) - moments.integral[k]).abs()).collect();
    let conservativity = flux.edge_sums(mesh).into_iter().map(|(e, s)| (e, (s - expected_edge(e)).abs())).collect();
    FluxAudit {
        balance,
        conservativity,
        flux_scale: flux.scale(),
        source_scale: moments.integral.iter().fold(SCALE_FLOOR, |m, v| m.max(v.abs())),
    }
}

/// Balance `Σ_σ F_{K,σ} = ∫_K f` and conservativity `F_{K,σ} + F_{L,σ} = 0`.
pub fn audit_standard(flux: &FluxField, mesh: &PolytopalMesh, moments: &SourceMoments) -> FluxAudit {
    audit(flux, mesh, moments, |_| 0.0)
}

/// Per interior edge, the expected `F_{K,σ} + F_{L,σ}` of a modified-HMM
/// solution: `−(|σ|/|K|) ∫_K f n_{K,σ}·(x − x_K) − (|σ|/|L|) ∫_L f n_{L,σ}·(x − x_L)`.
pub fn modified_defect(mesh: &PolytopalMesh, moments: &SourceMoments) -> Vec<f64> {
    let terms = moment_terms(mesh, moments);
    mesh.edges()
        .iter()
        .enumerate()
        .map(|(e, edge)| -edge.incidences().map(|i| terms[i.cell][local_index(mesh, i.cell, e)]).sum::<f64>())
        .collect()
}

/// Balance, and conservativity up to the source first-moment defect.
pub fn audit_modified(flux: &FluxField, mesh: &PolytopalMesh, moments: &SourceMoments) -> FluxAudit {
    let defect = modified_defect(mesh, moments);
    audit(flux, mesh, moments, |e| defect[e])
}

/// `F★_{K,σ} = F_{K,σ} + (|σ|/|K|) ∫_K f n_{K,σ}·(x − x_K)`: conservative and
/// still balanced, since `Σ_σ |σ| n_{K,σ} = 0`.
pub fn corrected_fluxes(flux: &FluxField, mesh: &PolytopalMesh, moments: &SourceMoments) -> FluxField {
    let terms = moment_terms(mesh, moments);
    let values = flux
        .values
        .iter()
        .zip(&terms)
        .map(|(f, t)| f.iter().zip(t).map(|(a, b)| a + b).collect())
        .collect();
    FluxField { values }
}

/// Residual of the linear system rebuilt from fluxes: cell rows
/// `Σ_σ F_{K,σ} − b_K`, interior-edge rows `−(F_{K,σ} + F_{L,σ}) − b_σ`.
pub fn residual_from_fluxes(flux: &FluxField, mesh: &PolytopalMesh, system: &HmmSystem, rhs: &[f64]) -> Vec<f64> {
    let layout = &system.layout;
    let mut r = vec![0.0; layout.n_dofs()];
    for k in 0..mesh.n_cells() {
        r[layout.cell_dof(k)] = flux.cell_sum(k) - rhs[layout.cell_dof(k)];
    }
    for (e, s) in flux.edge_sums(mesh) {
        let d = layout.edge_dof(e).expect("interior edge has a dof");
        r[d] = -s - rhs[d];
    }
    r
}
