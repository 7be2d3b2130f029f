//! CSV outputs: solutions, flux audits and convergence studies.
//!
//! Reals are written with 17 significant digits so that every value reads
//! back bit for bit.

use std::fmt::Write as _;

use polyfv_core::hmm::{DiscreteField, DofLayout};
use polyfv_core::harness::ErrorReport;
use polyfv_core::mesh::PolytopalMesh;

pub const HMM_SOLUTION_HEADER: &str = "kind,id,value";
pub const TPFA_SOLUTION_HEADER: &str = "cell_id,value";
pub const AUDIT_HEADER: &str = "entity,kind,residual";
pub const STUDY_HEADER: &str = "level,h,ndofs,err_u,err_gradu,err_ustar";

#[derive(Debug, thiserror::Error)]
pub enum CsvError {
    #[error("line {line}: {what}")]
    Syntax { line: usize, what: String },
}

pub fn real(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_real(tok: &str, line: usize) -> Result<f64, CsvError> {
    tok.trim().parse().map_err(|_| CsvError::Syntax { line, what: format!("cannot parse `{tok}`") })
}

fn parse_index(tok: &str, line: usize) -> Result<usize, CsvError> {
    tok.trim().parse().map_err(|_| CsvError::Syntax { line, what: format!("cannot parse index `{tok}`") })
}

/// One row per unknown: `cell,<cell id>,<value>` then `edge,<edge id>,<value>`
/// for interior edges.
pub fn hmm_solution_csv(mesh: &PolytopalMesh, u: &DiscreteField) -> String {
    let mut out = String::from(HMM_SOLUTION_HEADER);
    out.push('\n');
    for k in 0..mesh.n_cells() {
        writeln!(out, "cell,{k},{}", real(u.cell(k))).unwrap();
    }
    for e in 0..mesh.edges().len() {
        if u.layout.edge_dof(e).is_some() {
            writeln!(out, "edge,{e},{}", real(u.edge(e))).unwrap();
        }
    }
    out
}

pub fn tpfa_solution_csv(u: &[f64]) -> String {
    let mut out = String::from(TPFA_SOLUTION_HEADER);
    out.push('\n');
    for (k, v) in u.iter().enumerate() {
        writeln!(out, "{k},{}", real(*v)).unwrap();
    }
    out
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolutionFile {
    Hmm(DiscreteField),
    Tpfa(Vec<f64>),
}

fn rows(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l.trim())).filter(|(_, l)| !l.is_empty())
}

/// Reads either solution format back, checking it against `mesh`.
pub fn parse_solution(text: &str, mesh: &PolytopalMesh) -> Result<SolutionFile, CsvError> {
    let mut it = rows(text);
    let header = it.next().map(|r| r.1).unwrap_or("");
    let mismatch = |line, what: &str| CsvError::Syntax { line, what: what.to_string() };
    match header {
        HMM_SOLUTION_HEADER => {
            let layout = DofLayout::new(mesh);
            let mut values = vec![f64::NAN; layout.n_dofs()];
            let mut seen = vec![false; layout.n_dofs()];
            for (line, row) in it {
                let f: Vec<&str> = row.split(',').collect();
                if f.len() != 3 {
                    return Err(mismatch(line, "expected three fields"));
                }
                let id = parse_index(f[1], line)?;
                let dof = match f[0] {
                    "cell" if id < mesh.n_cells() => layout.cell_dof(id),
                    "edge" if id < layout.n_edges() => {
                        layout.edge_dof(id).ok_or_else(|| mismatch(line, "boundary edges carry no unknown"))?
                    }
                    "cell" | "edge" => return Err(mismatch(line, "id out of range")),
                    _ => return Err(mismatch(line, "kind must be `cell` or `edge`")),
                };
                if std::mem::replace(&mut seen[dof], true) {
                    return Err(mismatch(line, "duplicate unknown"));
                }
                values[dof] = parse_real(f[2], line)?;
            }
            if seen.iter().any(|s| !s) {
                return Err(mismatch(0, "some unknowns are missing"));
            }
            Ok(SolutionFile::Hmm(DiscreteField { layout, values }))
        }
        TPFA_SOLUTION_HEADER => {
            let mut values = vec![f64::NAN; mesh.n_cells()];
            let mut count = 0;
            for (line, row) in it {
                let (id, v) = row.split_once(',').ok_or_else(|| mismatch(line, "expected two fields"))?;
                let id = parse_index(id, line)?;
                if id >= values.len() {
                    return Err(mismatch(line, "cell id out of range"));
                }
                values[id] = parse_real(v, line)?;
                count += 1;
            }
            if count != mesh.n_cells() {
                return Err(mismatch(0, "cell count does not match the mesh"));
            }
            Ok(SolutionFile::Tpfa(values))
        }
        other => Err(mismatch(1, &format!("unknown header `{other}`"))),
    }
}

/// Rows `(entity, kind, residual)`.
pub fn audit_csv(rows: &[(String, &str, f64)]) -> String {
    let mut out = String::from(AUDIT_HEADER);
    out.push('\n');
    for (entity, kind, r) in rows {
        writeln!(out, "{entity},{kind},{}", real(*r)).unwrap();
    }
    out
}

pub fn study_csv(reports: &[ErrorReport]) -> String {
    let mut out = String::from(STUDY_HEADER);
    out.push('\n');
    for r in reports {
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.level,
            real(r.h),
            r.n_dofs,
            real(r.err_u),
            real(r.err_gradu),
            real(r.err_ustar)
        )
        .unwrap();
    }
    out
}

pub fn parse_study(text: &str) -> Result<Vec<ErrorReport>, CsvError> {
    let mut it = rows(text);
    if it.next().map(|r| r.1) != Some(STUDY_HEADER) {
        return Err(CsvError::Syntax { line: 1, what: "missing study header".into() });
    }
    it.map(|(line, row)| {
        let f: Vec<&str> = row.split(',').collect();
        if f.len() != 6 {
            return Err(CsvError::Syntax { line, what: "expected six fields".into() });
        }
        Ok(ErrorReport {
            level: parse_index(f[0], line)?,
            h: parse_real(f[1], line)?,
            n_dofs: parse_index(f[2], line)?,
            err_u: parse_real(f[3], line)?,
            err_gradu: parse_real(f[4], line)?,
            err_ustar: parse_real(f[5], line)?,
        })
    })
    .collect()
}
