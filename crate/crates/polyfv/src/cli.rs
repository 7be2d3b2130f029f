//! The `polyfv` command line.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Args, Parser, Subcommand};

use polyfv_core::diagnostics::{self, DiagnosticsError};
use polyfv_core::fluxes;
use polyfv_core::geometry::Point;
use polyfv_core::harness::{self, HarnessError, LevelResult, MeshFamily, Scheme, SchemeSolution, Study, TestCase};
use polyfv_core::hmm::{self, SourceMoments};
use polyfv_core::linalg::SolverKind;
use polyfv_core::mesh::PolytopalMesh;
use polyfv_core::meshgen::{self, InitialTriangulation, MeshGenError, PointPlacement};
use polyfv_core::tpfa;

use crate::meshfile::{self, MeshFileError};
use crate::report::{self, CsvError, SolutionFile};

pub const EXIT_OK: u8 = 0;
pub const EXIT_AUDIT_FAILED: u8 = 2;
pub const EXIT_INVALID_INPUT: u8 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    MeshFile { path: PathBuf, source: MeshFileError },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: CsvError },
    #[error(transparent)]
    MeshGen(#[from] MeshGenError),
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error(transparent)]
    Diagnostics(#[from] DiagnosticsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl From<hmm::HmmError> for CliError {
    fn from(e: hmm::HmmError) -> Self {
        CliError::Harness(e.into())
    }
}

impl From<tpfa::TpfaError> for CliError {
    fn from(e: tpfa::TpfaError) -> Self {
        CliError::Harness(e.into())
    }
}

#[derive(Parser, Debug)]
#[command(name = "polyfv", version, about = "Finite volume and HMM schemes on polygonal meshes of the unit square")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate or inspect meshes.
    #[command(subcommand)]
    Mesh(MeshCommand),
    /// Solve a test case and write the solution CSV.
    Solve(SolveArgs),
    /// Recompute the error metrics of a stored solution.
    Errors(ErrorsArgs),
    /// Flux, patching, compensation and admissibility checks.
    #[command(subcommand)]
    Check(CheckCommand),
    /// Multi-level convergence study.
    Study(StudyArgs),
}

#[derive(Subcommand, Debug)]
pub enum MeshCommand {
    Gen(GenArgs),
    /// Print size and regularity of a mesh.
    Info {
        #[arg(long)]
        mesh: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct GenArgs {
    /// cartesian, subdivision, symmetry or translation
    #[arg(long)]
    pub family: String,
    /// Cells per direction (cartesian) or refinement factor.
    #[arg(long)]
    pub n: usize,
    /// Cells in y for cartesian grids (defaults to n).
    #[arg(long)]
    pub ny: Option<usize>,
    /// centroid, circumcenter, checkerboard:<d> or uniform:<sx>,<sy> (cartesian only)
    #[arg(long, default_value = "centroid")]
    pub placement: String,
    /// Mesh file holding the initial triangulation (defaults to the built-in one).
    #[arg(long, alias = "seed")]
    pub initial: Option<PathBuf>,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct CaseArgs {
    #[arg(long)]
    pub mesh: PathBuf,
    #[arg(long, default_value = "paper-6")]
    pub case: String,
    /// HMM stabilisation parameter.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
}

#[derive(Args, Debug)]
pub struct SolveArgs {
    /// tpfa, hmm or hmm-modified
    #[arg(long)]
    pub scheme: String,
    #[command(flatten)]
    pub common: CaseArgs,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ErrorsArgs {
    #[arg(long)]
    pub scheme: String,
    #[command(flatten)]
    pub common: CaseArgs,
    #[arg(long)]
    pub solution: PathBuf,
}

#[derive(Subcommand, Debug)]
pub enum CheckCommand {
    /// Balance and conservativity of HMM fluxes.
    Fluxes {
        #[arg(long)]
        scheme: String,
        #[command(flatten)]
        common: CaseArgs,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Compensation quality of a patching.
    Patching {
        #[arg(long)]
        mesh: PathBuf,
        /// pairs, tiles or trivial
        #[arg(long, default_value = "trivial")]
        patching: String,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Circumcenter compensation identities on a triangulation.
    Compensation {
        #[arg(long)]
        mesh: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Orthogonality of cell-point segments and edges.
    Admissibility {
        #[arg(long)]
        mesh: PathBuf,
    },
}

#[derive(Args, Debug)]
pub struct StudyArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long)]
    pub scheme: String,
    /// Comma-separated refinement parameters.
    #[arg(long)]
    pub levels: Option<String>,
    #[arg(long, default_value = "paper-6")]
    pub case: String,
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Point placement for cartesian families.
    #[arg(long, default_value = "centroid")]
    pub placement: String,
    /// Run flux audits; a failure gives exit status 2.
    #[arg(long)]
    pub audit: bool,
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

pub fn parse_placement(s: &str) -> Result<PointPlacement, CliError> {
    let bad = || CliError::Usage(format!("invalid placement `{s}`"));
    let num = |t: &str| t.trim().parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(bad);
    match s.split_once(':') {
        None if s == "centroid" => Ok(PointPlacement::Centroid),
        None if s == "circumcenter" => Ok(PointPlacement::Circumcenter),
        Some(("checkerboard", d)) => Ok(PointPlacement::CheckerboardShift(num(d)?)),
        Some(("uniform", v)) => {
            let (a, b) = v.split_once(',').ok_or_else(bad)?;
            Ok(PointPlacement::UniformShift(Point::new(num(a)?, num(b)?)))
        }
        _ => Err(bad()),
    }
}

fn parse_scheme(s: &str) -> Result<Scheme, CliError> {
    Scheme::from_name(s).ok_or_else(|| CliError::Usage(format!("unknown scheme `{s}` (tpfa, hmm, hmm-modified)")))
}

fn parse_levels(s: &str) -> Result<Vec<usize>, CliError> {
    s.split(',')
        .map(|t| t.trim().parse::<usize>().ok().filter(|&n| n > 0))
        .collect::<Option<Vec<_>>>()
        .filter(|v| !v.is_empty())
        .ok_or_else(|| CliError::Usage(format!("invalid levels `{s}`")))
}

fn load_mesh(path: &Path) -> Result<PolytopalMesh, CliError> {
    meshfile::read_mesh(path).map_err(|source| CliError::MeshFile { path: path.to_path_buf(), source })
}

fn load_seed(path: Option<&Path>) -> Result<InitialTriangulation, CliError> {
    let Some(path) = path else { return Ok(InitialTriangulation::acute_unit_square()) };
    let mesh = load_mesh(path)?;
    let input = mesh.to_input();
    let triangles = input
        .cells
        .iter()
        .map(|c| <[usize; 3]>::try_from(c.as_slice()).map_err(|_| CliError::Usage("seed cells must be triangles".into())))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(InitialTriangulation { vertices: input.vertices, triangles })
}

fn family(name: &str, placement: &str, seed: Option<&Path>) -> Result<MeshFamily, CliError> {
    let seed = load_seed(seed)?;
    Ok(match name {
        "cartesian" => MeshFamily::Cartesian(parse_placement(placement)?),
        "subdivision" => MeshFamily::Subdivision(seed),
        "symmetry" => MeshFamily::Symmetry(seed),
        "translation" => MeshFamily::Translation(seed),
        other => return Err(CliError::Usage(format!("unknown family `{other}`"))),
    })
}

fn case(name: &str) -> Result<TestCase, CliError> {
    Ok(harness::builtin_case(name)?)
}

fn emit(output: Option<&Path>, text: &str) -> Result<(), CliError> {
    match output {
        Some(p) => std::fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

/// Worker count from `POLYFV_THREADS`, else the available parallelism.
pub fn thread_count() -> usize {
    std::env::var("POLYFV_THREADS")
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

/// Runs the levels of a study on up to `threads` workers; results are in level order.
pub fn run_study_parallel(
    family: &MeshFamily,
    scheme: Scheme,
    ns: &[usize],
    case: &TestCase,
    alpha: f64,
    audit: bool,
    threads: usize,
) -> Result<Study, HarnessError> {
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<Result<LevelResult, HarnessError>>>> = Mutex::new(vec![None; ns.len()]);
    std::thread::scope(|s| {
        for _ in 0..threads.clamp(1, ns.len().max(1)) {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= ns.len() {
                    break;
                }
                let r = harness::run_level(family, scheme, i, ns[i], case, alpha, audit);
                slots.lock().unwrap()[i] = Some(r);
            });
        }
    });
    let levels = slots
        .into_inner()
        .unwrap()
        .into_iter()
        .map(|r| r.expect("every level ran"))
        .collect::<Result<Vec<_>, _>>()?;
    Study::from_levels(levels)
}

fn solve_scheme(mesh: &PolytopalMesh, scheme: Scheme, case: &TestCase, alpha: f64) -> Result<SchemeSolution, CliError> {
    Ok(harness::solve(mesh, scheme, case, alpha)?)
}

fn cmd_mesh_gen(a: &GenArgs) -> Result<u8, CliError> {
    let fam = family(&a.family, &a.placement, a.initial.as_deref())?;
    let mesh = match (&fam, a.ny) {
        (MeshFamily::Cartesian(p), Some(ny)) => meshgen::cartesian(a.n, ny, *p)?,
        (_, Some(_)) => return Err(CliError::Usage("--ny only applies to cartesian grids".into())),
        _ => fam.build(a.n)?,
    };
    emit(a.output.as_deref(), &meshfile::write_mesh_string(&mesh))?;
    Ok(EXIT_OK)
}

fn cmd_mesh_info(path: &Path) -> Result<u8, CliError> {
    let mesh = load_mesh(path)?;
    let reg = mesh.regularity().map_err(|e| CliError::MeshFile { path: path.to_path_buf(), source: e.into() })?;
    let mut out = String::from("quantity,value\n");
    for (k, v) in [
        ("cells", mesh.n_cells() as f64),
        ("edges", mesh.edges().len() as f64),
        ("interior_edges", mesh.n_interior_edges() as f64),
        ("h", mesh.h_mesh()),
        ("theta", reg.theta),
        ("max_edges_per_cell", reg.max_edge_count as f64),
    ] {
        out.push_str(&format!("{k},{}\n", report::real(v)));
    }
    if let Some(o) = mesh.origin() {
        out.push_str(&format!("generator,{}\n", o.family.name()));
    }
    emit(None, &out)?;
    Ok(EXIT_OK)
}

fn cmd_solve(a: &SolveArgs) -> Result<u8, CliError> {
    let scheme = parse_scheme(&a.scheme)?;
    let mesh = load_mesh(&a.common.mesh)?;
    let case = case(&a.common.case)?;
    let text = match solve_scheme(&mesh, scheme, &case, a.common.alpha)? {
        SchemeSolution::Tpfa(u) => report::tpfa_solution_csv(&u),
        SchemeSolution::Hmm { standard, modified } => {
            let u = if scheme == Scheme::Hmm { standard } else { modified };
            report::hmm_solution_csv(&mesh, &u.expect("both HMM solutions are computed"))
        }
    };
    emit(a.output.as_deref(), &text)?;
    Ok(EXIT_OK)
}

fn cmd_errors(a: &ErrorsArgs) -> Result<u8, CliError> {
    let scheme = parse_scheme(&a.scheme)?;
    let mesh = load_mesh(&a.common.mesh)?;
    let case = case(&a.common.case)?;
    let text = std::fs::read_to_string(&a.solution)?;
    let file = report::parse_solution(&text, &mesh).map_err(|source| CliError::Csv { path: a.solution.clone(), source })?;
    let solution = match (scheme, file) {
        (Scheme::Tpfa, SolutionFile::Tpfa(u)) => SchemeSolution::Tpfa(u),
        (Scheme::Hmm, SolutionFile::Hmm(u)) => SchemeSolution::Hmm { standard: Some(u), modified: None },
        (Scheme::HmmModified, SolutionFile::Hmm(u)) => SchemeSolution::Hmm { standard: None, modified: Some(u) },
        _ => return Err(CliError::Usage("solution file does not match the scheme".into())),
    };
    let r = harness::errors(0, &mesh, &solution, &case, a.common.alpha)?;
    emit(None, &report::study_csv(&[r]))?;
    Ok(EXIT_OK)
}

fn cmd_check_fluxes(scheme: &str, common: &CaseArgs, output: Option<&Path>) -> Result<u8, CliError> {
    let scheme = parse_scheme(scheme)?;
    if scheme == Scheme::Tpfa {
        return Err(CliError::Usage("flux checks apply to hmm and hmm-modified".into()));
    }
    let mesh = load_mesh(&common.mesh)?;
    let case = case(&common.case)?;
    let tensors = hmm::project_tensor(&mesh, |p| case.tensor(p))?;
    let sys = hmm::assemble(&mesh, &tensors, common.alpha)?;
    let moments = SourceMoments::compute(&mesh, case.f)?;
    let rhs = match scheme {
        Scheme::Hmm => hmm::rhs_standard_from(&sys.layout, &moments),
        _ => hmm::rhs_modified_from(&mesh, &sys.layout, &moments),
    };
    let u = sys.field(sys.solver(SolverKind::Auto)?.solve(&rhs).map_err(hmm::HmmError::from)?)?;
    let flux = fluxes::cell_fluxes(&u, &mesh, &sys)?;

    let mut rows: Vec<(String, &str, f64)> = Vec::new();
    let mut push = |audit: &fluxes::FluxAudit, balance: &'static str, cons: &'static str| {
        rows.extend(audit.balance.iter().enumerate().map(|(k, r)| (format!("cell:{k}"), balance, *r)));
        rows.extend(audit.conservativity.iter().map(|(e, r)| (format!("edge:{e}"), cons, *r)));
    };
    let passed = if scheme == Scheme::Hmm {
        let a = fluxes::audit_standard(&flux, &mesh, &moments);
        push(&a, "balance", "conservativity");
        a.passed()
    } else {
        let a = fluxes::audit_modified(&flux, &mesh, &moments);
        push(&a, "balance", "defect");
        let c = fluxes::audit_standard(&fluxes::corrected_fluxes(&flux, &mesh, &moments), &mesh, &moments);
        push(&c, "corrected-balance", "corrected-conservativity");
        a.passed() && c.passed()
    };
    emit(output, &report::audit_csv(&rows))?;
    if !passed {
        eprintln!("flux audit failed");
        return Ok(EXIT_AUDIT_FAILED);
    }
    Ok(EXIT_OK)
}

fn cmd_check_patching(path: &Path, kind: &str, output: Option<&Path>) -> Result<u8, CliError> {
    let mesh = load_mesh(path)?;
    let patching = match kind {
        "pairs" => diagnostics::pair_patching(&mesh)?,
        "tiles" => diagnostics::tile_patching(&mesh)?,
        "trivial" => diagnostics::trivial_patching(&mesh),
        other => return Err(CliError::Usage(format!("unknown patching `{other}`"))),
    };
    let q = diagnostics::evaluate_patching(&mesh, &patching)?;
    let mut out = String::from("quantity,value\n");
    for (k, v) in [
        ("patches", patching.patches.len() as f64),
        ("uncovered_cells", patching.uncovered.len() as f64),
        ("e_g", q.e_g),
        ("e_g_over_h", q.e_g / q.h_mesh),
        ("mu_estimate", q.mu_estimate),
        ("uncovered_area", q.uncovered_area),
    ] {
        out.push_str(&format!("{k},{}\n", report::real(v)));
    }
    emit(output, &out)?;
    Ok(EXIT_OK)
}

fn cmd_check_compensation(path: &Path, output: Option<&Path>) -> Result<u8, CliError> {
    let mesh = load_mesh(path)?;
    let (lhs, rhs) = diagnostics::boundary_compensation(&mesh)?;
    // defects are relative to the size of the terms being summed
    let mut worst_triangle: f64 = 0.0;
    let mut moment = Point::ZERO;
    let mut lhs_terms = 0.0;
    for k in 0..mesh.n_cells() {
        let v = mesh.cell_vertices(k);
        let (l, r) = diagnostics::circumcenter_identity(v[0], v[1], v[2])?;
        let size: f64 = (0..3).map(|i| v[i].dist(v[(i + 1) % 3]) * (v[i].norm_sq() + v[(i + 1) % 3].norm_sq()) / 4.0).sum();
        worst_triangle = worst_triangle.max((l - r).norm() / size);
        let c = mesh.cell(k);
        moment += c.centroid * c.measure;
        lhs_terms += c.measure * (l * (1.0 / c.measure) - c.centroid).norm();
    }
    let xq = moment * (1.0 / mesh.area());
    let rhs_terms: f64 = mesh
        .edges()
        .iter()
        .filter(|e| !e.is_interior())
        .map(|e| {
            let (a, b) = (mesh.vertices()[e.endpoints[0]] - xq, mesh.vertices()[e.endpoints[1]] - xq);
            e.length * (a.norm_sq() + b.norm_sq()) / 4.0
        })
        .sum();
    let scale = lhs_terms.max(rhs_terms);
    let defect = (lhs - rhs).norm() / scale;
    let mut out = String::from("quantity,value\n");
    for (k, v) in [
        ("lhs_x", lhs.x),
        ("lhs_y", lhs.y),
        ("rhs_x", rhs.x),
        ("rhs_y", rhs.y),
        ("relative_defect", defect),
        ("max_triangle_defect", worst_triangle),
    ] {
        out.push_str(&format!("{k},{}\n", report::real(v)));
    }
    emit(output, &out)?;
    Ok(if defect < 1e-12 && worst_triangle < 1e-12 { EXIT_OK } else { EXIT_AUDIT_FAILED })
}

fn cmd_check_admissibility(path: &Path) -> Result<u8, CliError> {
    let mesh = load_mesh(path)?;
    let r = tpfa::check_admissible(&mesh);
    let mut out = String::from("quantity,value\n");
    out.push_str(&format!("max_defect,{}\n", report::real(r.max_defect())));
    out.push_str(&format!("tolerance,{}\n", report::real(r.tolerance)));
    out.push_str(&format!("passed,{}\n", r.passed()));
    emit(None, &out)?;
    Ok(if r.passed() { EXIT_OK } else { EXIT_AUDIT_FAILED })
}

fn cmd_study(a: &StudyArgs) -> Result<u8, CliError> {
    let scheme = parse_scheme(&a.scheme)?;
    let fam = family(&a.family, &a.placement, None)?;
    let ns = match &a.levels {
        Some(s) => parse_levels(s)?,
        None if a.family == "cartesian" => vec![8, 16, 32, 64],
        None => vec![2, 4, 8, 16],
    };
    let case = case(&a.case)?;
    let study = run_study_parallel(&fam, scheme, &ns, &case, a.alpha, a.audit, thread_count())?;
    emit(a.output.as_deref(), &report::study_csv(&study.reports()))?;
    eprintln!(
        "slopes: err_u {:.3}  err_gradu {:.3}  err_ustar {:.3}",
        study.rates.err_u, study.rates.err_gradu, study.rates.err_ustar
    );
    if study.audit_failed() {
        eprintln!("flux audit failed");
        return Ok(EXIT_AUDIT_FAILED);
    }
    Ok(EXIT_OK)
}

pub fn run(cli: &Cli) -> Result<u8, CliError> {
    match &cli.command {
        Command::Mesh(MeshCommand::Gen(a)) => cmd_mesh_gen(a),
        Command::Mesh(MeshCommand::Info { mesh }) => cmd_mesh_info(mesh),
        Command::Solve(a) => cmd_solve(a),
        Command::Errors(a) => cmd_errors(a),
        Command::Check(CheckCommand::Fluxes { scheme, common, output }) => cmd_check_fluxes(scheme, common, output.as_deref()),
        Command::Check(CheckCommand::Patching { mesh, patching, output }) => {
            cmd_check_patching(mesh, patching, output.as_deref())
        }
        Command::Check(CheckCommand::Compensation { mesh, output }) => cmd_check_compensation(mesh, output.as_deref()),
        Command::Check(CheckCommand::Admissibility { mesh }) => cmd_check_admissibility(mesh),
        Command::Study(a) => cmd_study(a),
    }
}

/// Parses `args` and runs; returns the process exit status.
pub fn main_with_args<I, T>(args: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_INVALID_INPUT
        }
    }
}
