//! Manufactured solutions, relative error metrics, rate regression and
//! multi-level convergence studies.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::fluxes;
use crate::geometry::{Mat2, Point};
use crate::hmm::{self, DiscreteField, HmmError, SourceMoments};
use crate::linalg::SolverKind;
use crate::mesh::PolytopalMesh;
use crate::meshgen::{self, InitialTriangulation, MeshGenError, PointPlacement};
use crate::tpfa::{self, TpfaError};

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum HarnessError {
    #[error("unknown test case `{0}`")]
    UnknownCase(String),
    #[error("reference solution vanishes, relative error undefined")]
    ZeroDenominator,
    #[error("rate regression needs at least two points, got {0}")]
    InsufficientPoints(usize),
    #[error("non-positive value in rate regression at point {0}")]
    NonPositiveValue(usize),
    #[error("solution does not match the mesh: {0}")]
    SolutionMismatch(&'static str),
    #[error(transparent)]
    Mesh(#[from] MeshGenError),
    #[error(transparent)]
    Hmm(#[from] HmmError),
    #[error(transparent)]
    Tpfa(#[from] TpfaError),
}

/// `−div(a ∇u) = f` on the unit square with `u = 0` on the boundary.
#[derive(Clone, Copy, Debug)]
pub struct TestCase {
    pub name: &'static str,
    pub u: fn(Point) -> f64,
    pub grad_u: fn(Point) -> Point,
    pub f: fn(Point) -> f64,
    /// Scalar diffusion coefficient, `A = a·Id`.
    pub a: fn(Point) -> f64,
}

impl TestCase {
    pub fn tensor(&self, p: Point) -> Mat2 {
        Mat2::scaled_identity((self.a)(p))
    }
}

fn bubble(p: Point) -> f64 {
    16.0 * p.x * (1.0 - p.x) * p.y * (1.0 - p.y)
}

fn bubble_grad(p: Point) -> Point {
    Point::new(16.0 * (1.0 - 2.0 * p.x) * p.y * (1.0 - p.y), 16.0 * p.x * (1.0 - p.x) * (1.0 - 2.0 * p.y))
}

fn bubble_source(p: Point) -> f64 {
    32.0 * (p.x * (1.0 - p.x) + p.y * (1.0 - p.y))
}

fn sine(p: Point) -> f64 {
    use core::f64::consts::PI;
    libm::sin(PI * p.x) * libm::sin(PI * p.y)
}

fn sine_grad(p: Point) -> Point {
    use core::f64::consts::PI;
    Point::new(
        PI * libm::cos(PI * p.x) * libm::sin(PI * p.y),
        PI * libm::sin(PI * p.x) * libm::cos(PI * p.y),
    )
}

fn sine_source(p: Point) -> f64 {
    2.0 * core::f64::consts::PI * core::f64::consts::PI * sine(p)
}

fn one(_: Point) -> f64 {
    1.0
}

pub const CASE_NAMES: [&str; 2] = ["paper-6", "sine"];

pub fn builtin_case(name: &str) -> Result<TestCase, HarnessError> {
    match name {
        "paper-6" | "bubble" => Ok(TestCase { name: "paper-6", u: bubble, grad_u: bubble_grad, f: bubble_source, a: one }),
        "sine" => Ok(TestCase { name: "sine", u: sine, grad_u: sine_grad, f: sine_source, a: one }),
        other => Err(HarnessError::UnknownCase(other.to_string())),
    }
}

/// `sqrt(Σ_K |K| (u_K − ū(x_K))²) / sqrt(Σ_K |K| ū(x_K)²)`.
pub fn err_u(mesh: &PolytopalMesh, cell_values: &[f64], case: &TestCase) -> Result<f64, HarnessError> {
    if cell_values.len() != mesh.n_cells() {
        return Err(HarnessError::SolutionMismatch("cell count"));
    }
    let (mut num, mut den) = (0.0, 0.0);
    for (c, &v) in mesh.cells().iter().zip(cell_values) {
        let exact = (case.u)(c.cell_point);
        num += c.measure * (v - exact) * (v - exact);
        den += c.measure * exact * exact;
    }
    if den == 0.0 {
        return Err(HarnessError::ZeroDenominator);
    }
    Ok(libm::sqrt(num / den))
}

/// Cone-wise `‖∇_D u − (∇ū)_X‖ / ‖(∇ū)_X‖` with `(∇ū)_X = ∇ū(x_K)` on `K`.
pub fn err_grad(mesh: &PolytopalMesh, u: &DiscreteField, case: &TestCase, alpha: f64) -> Result<f64, HarnessError> {
    let rec = hmm::reconstruct(u, mesh, alpha)?;
    let (mut num, mut den) = (0.0, 0.0);
    for k in 0..mesh.n_cells() {
        let g = (case.grad_u)(mesh.cell(k).cell_point);
        for f in mesh.faces(k) {
            num += f.cone_measure() * (rec.grad_d[k][f.local] - g).norm_sq();
        }
        den += mesh.cell(k).measure * g.norm_sq();
    }
    if den == 0.0 {
        return Err(HarnessError::ZeroDenominator);
    }
    Ok(libm::sqrt(num / den))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Scheme {
    Tpfa,
    Hmm,
    HmmModified,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::Tpfa => "tpfa",
            Scheme::Hmm => "hmm",
            Scheme::HmmModified => "hmm-modified",
        }
    }

    pub fn from_name(s: &str) -> Option<Scheme> {
        [Scheme::Tpfa, Scheme::Hmm, Scheme::HmmModified].into_iter().find(|x| x.name() == s)
    }
}

/// Solutions needed by the error metrics. HMM carries the standard and the
/// modified solutions, which share a matrix; either may be absent.
#[derive(Clone, Debug, PartialEq)]
pub enum SchemeSolution {
    Tpfa(Vec<f64>),
    Hmm { standard: Option<DiscreteField>, modified: Option<DiscreteField> },
}

impl SchemeSolution {
    pub fn n_dofs(&self) -> usize {
        match self {
            SchemeSolution::Tpfa(v) => v.len(),
            SchemeSolution::Hmm { standard, modified } => {
                standard.as_ref().or(modified.as_ref()).map_or(0, |u| u.values.len())
            }
        }
    }
}

/// Relative errors on one mesh. Metrics that do not apply to a scheme are NaN.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorReport {
    pub level: usize,
    pub h: f64,
    pub n_dofs: usize,
    pub err_u: f64,
    pub err_gradu: f64,
    pub err_ustar: f64,
}

pub fn errors(
    level: usize,
    mesh: &PolytopalMesh,
    solution: &SchemeSolution,
    case: &TestCase,
    alpha: f64,
) -> Result<ErrorReport, HarnessError> {
    let (eu, eg, es) = match solution {
        SchemeSolution::Tpfa(v) => (err_u(mesh, v, case)?, f64::NAN, f64::NAN),
        SchemeSolution::Hmm { standard, modified } => {
            let (eu, eg) = match standard {
                Some(u) => (err_u(mesh, u.cell_values(), case)?, err_grad(mesh, u, case, alpha)?),
                None => (f64::NAN, f64::NAN),
            };
            let es = match modified {
                Some(u) => err_u(mesh, u.cell_values(), case)?,
                None => f64::NAN,
            };
            (eu, eg, es)
        }
    };
    Ok(ErrorReport { level, h: mesh.h_mesh(), n_dofs: solution.n_dofs(), err_u: eu, err_gradu: eg, err_ustar: es })
}

/// Least-squares slope of `log err` against `log h`.
pub fn rate_regression(points: &[(f64, f64)]) -> Result<f64, HarnessError> {
    if points.len() < 2 {
        return Err(HarnessError::InsufficientPoints(points.len()));
    }
    if let Some(i) = points.iter().position(|&(h, e)| !(h > 0.0) || !(e > 0.0)) {
        return Err(HarnessError::NonPositiveValue(i));
    }
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| libm::log(p.0)).collect();
    let ys: Vec<f64> = points.iter().map(|p| libm::log(p.1)).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(HarnessError::InsufficientPoints(1));
    }
    Ok(sxy / sxx)
}

#[derive(Clone, Debug, PartialEq)]
pub struct RateReport {
    /// Least-squares slopes; NaN when the metric is not available.
    pub err_u: f64,
    pub err_gradu: f64,
    pub err_ustar: f64,
    /// Orders between consecutive levels, `[err_u, err_gradu, err_ustar]`.
    pub incremental: Vec<[f64; 3]>,
}

pub fn rates(reports: &[ErrorReport]) -> Result<RateReport, HarnessError> {
    let slope = |get: fn(&ErrorReport) -> f64| -> Result<f64, HarnessError> {
        if reports.iter().any(|r| get(r).is_nan()) {
            return Ok(f64::NAN);
        }
        rate_regression(&reports.iter().map(|r| (r.h, get(r))).collect::<Vec<_>>())
    };
    let incremental = reports
        .windows(2)
        .map(|w| {
            let lh = libm::log(w[1].h / w[0].h);
            [
                libm::log(w[1].err_u / w[0].err_u) / lh,
                libm::log(w[1].err_gradu / w[0].err_gradu) / lh,
                libm::log(w[1].err_ustar / w[0].err_ustar) / lh,
            ]
        })
        .collect();
    Ok(RateReport {
        err_u: slope(|r| r.err_u)?,
        err_gradu: slope(|r| r.err_gradu)?,
        err_ustar: slope(|r| r.err_ustar)?,
        incremental,
    })
}

/// Mesh sequence indexed by a refinement parameter `n`.
#[derive(Clone, Debug)]
pub enum MeshFamily {
    Cartesian(PointPlacement),
    Subdivision(InitialTriangulation),
    Symmetry(InitialTriangulation),
    Translation(InitialTriangulation),
}

impl MeshFamily {
    pub fn name(&self) -> &'static str {
        match self {
            MeshFamily::Cartesian(_) => "cartesian",
            MeshFamily::Subdivision(_) => "subdivision",
            MeshFamily::Symmetry(_) => "symmetry",
            MeshFamily::Translation(_) => "translation",
        }
    }

    /// The triangulation families from the built-in acute seed.
    pub fn triangulation(name: &str) -> Option<MeshFamily> {
        let seed = InitialTriangulation::acute_unit_square();
        match name {
            "subdivision" => Some(MeshFamily::Subdivision(seed)),
            "symmetry" => Some(MeshFamily::Symmetry(seed)),
            "translation" => Some(MeshFamily::Translation(seed)),
            _ => None,
        }
    }

    pub fn build(&self, n: usize) -> Result<PolytopalMesh, MeshGenError> {
        match self {
            MeshFamily::Cartesian(p) => meshgen::cartesian(n, n, *p),
            MeshFamily::Subdivision(t) => meshgen::subdivision_family(t, n),
            MeshFamily::Symmetry(t) => meshgen::symmetry_family(t, n),
            MeshFamily::Translation(t) => meshgen::translation_family(t, n),
        }
    }
}

/// Solves `case` on `mesh`. For HMM both right-hand sides are solved with
/// one factorisation.
pub fn solve(mesh: &PolytopalMesh, scheme: Scheme, case: &TestCase, alpha: f64) -> Result<SchemeSolution, HarnessError> {
    Ok(solve_with_audit(mesh, scheme, case, alpha, false)?.0)
}

/// Flux audit outcome of one level; `None` when not requested.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevelAudit {
    pub balance: f64,
    pub conservativity: f64,
    pub passed: bool,
}

fn solve_with_audit(
    mesh: &PolytopalMesh,
    scheme: Scheme,
    case: &TestCase,
    alpha: f64,
    audit: bool,
) -> Result<(SchemeSolution, Option<LevelAudit>), HarnessError> {
    match scheme {
        Scheme::Tpfa => {
            let sys = tpfa::assemble(mesh, case.a, case.f)?;
            let u = sys.solve()?;
            let report = audit.then(|| {
                let fl = sys.edge_fluxes(mesh, &u);
                let scale = fl.iter().fold(fluxes::SCALE_FLOOR, |m, v| m.max(v.abs()));
                let balance = (0..mesh.n_cells())
                    .map(|k| {
                        let s: f64 = mesh
                            .cell(k)
                            .edge_ids
                            .iter()
                            .map(|&e| if mesh.edge(e).cells().0 == k { fl[e] } else { -fl[e] })
                            .sum();
                        (s - sys.rhs[k]).abs()
                    })
                    .fold(0.0, f64::max)
                    / scale;
                LevelAudit { balance, conservativity: 0.0, passed: balance <= fluxes::AUDIT_TOL }
            });
            Ok((SchemeSolution::Tpfa(u), report))
        }
        Scheme::Hmm | Scheme::HmmModified => {
            let tensors = hmm::project_tensor(mesh, |p| case.tensor(p))?;
            let sys = hmm::assemble(mesh, &tensors, alpha)?;
            let moments = SourceMoments::compute(mesh, case.f)?;
            let solver = sys.solver(SolverKind::Auto)?;
            let standard = sys.field(solver.solve(&hmm::rhs_standard_from(&sys.layout, &moments)).map_err(HmmError::from)?)?;
            let modified = sys.field(
                solver.solve(&hmm::rhs_modified_from(mesh, &sys.layout, &moments)).map_err(HmmError::from)?,
            )?;
            let report = if audit {
                let a = fluxes::audit_standard(&fluxes::cell_fluxes(&standard, mesh, &sys)?, mesh, &moments);
                let fm = fluxes::cell_fluxes(&modified, mesh, &sys)?;
                let b = fluxes::audit_modified(&fm, mesh, &moments);
                let c = fluxes::audit_standard(&fluxes::corrected_fluxes(&fm, mesh, &moments), mesh, &moments);
                let balance = a.relative_balance().max(b.relative_balance()).max(c.relative_balance());
                let conservativity =
                    a.relative_conservativity().max(b.relative_conservativity()).max(c.relative_conservativity());
                Some(LevelAudit { balance, conservativity, passed: a.passed() && b.passed() && c.passed() })
            } else {
                None
            };
            Ok((SchemeSolution::Hmm { standard: Some(standard), modified: Some(modified) }, report))
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LevelResult {
    pub report: ErrorReport,
    pub audit: Option<LevelAudit>,
}

/// Builds, solves and measures one level.
pub fn run_level(
    family: &MeshFamily,
    scheme: Scheme,
    level: usize,
    n: usize,
    case: &TestCase,
    alpha: f64,
    audit: bool,
) -> Result<LevelResult, HarnessError> {
    let mesh = family.build(n)?;
    let (sol, audit) = solve_with_audit(&mesh, scheme, case, alpha, audit)?;
    Ok(LevelResult { report: errors(level, &mesh, &sol, case, alpha)?, audit })
}

#[derive(Clone, Debug, PartialEq)]
pub struct Study {
    pub levels: Vec<LevelResult>,
    pub rates: RateReport,
}

impl Study {
    pub fn reports(&self) -> Vec<ErrorReport> {
        self.levels.iter().map(|l| l.report).collect()
    }

    pub fn audit_failed(&self) -> bool {
        self.levels.iter().any(|l| l.audit.is_some_and(|a| !a.passed))
    }

    pub fn from_levels(levels: Vec<LevelResult>) -> Result<Study, HarnessError> {
        let reports: Vec<ErrorReport> = levels.iter().map(|l| l.report).collect();
        let rates = rates(&reports)?;
        Ok(Study { levels, rates })
    }
}

/// Sequential study over refinement parameters `ns`.
pub fn run_study(
    family: &MeshFamily,
    scheme: Scheme,
    ns: &[usize],
    case: &TestCase,
    alpha: f64,
    audit: bool,
) -> Result<Study, HarnessError> {
    let levels = ns
        .iter()
        .enumerate()
        .map(|(i, &n)| run_level(family, scheme, i, n, case, alpha, audit))
        .collect::<Result<Vec<_>, _>>()?;
    Study::from_levels(levels)
}
