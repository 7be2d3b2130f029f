//! Plain-text mesh files.
//!
//! ```text
//! polyfv-mesh v1
//! vertices 4
//! 0.0000000000000000e0 0.0000000000000000e0
//! ...
//! cells 1
//! 4 0 1 2 3
//! cellpoints 1
//! 5.0000000000000000e-1 5.0000000000000000e-1
//! generator cartesian 1 1
//! tiles 1
//! 0 0
//! end
//! ```
//!
//! `generator` and `tiles` are optional; they carry the metadata used by
//! the patching diagnostics. Blank lines and `#` comments are ignored.

use std::fmt::Write as _;
use std::path::Path;

use polyfv_core::geometry::Point;
use polyfv_core::mesh::{Family, MeshError, MeshInput, MeshOrigin, PolytopalMesh};

pub const HEADER: &str = "polyfv-mesh v1";

#[derive(Debug, thiserror::Error)]
pub enum MeshFileError {
    #[error("line {line}: {what}")]
    Syntax { line: usize, what: String },
    #[error("invalid mesh: {0}")]
    Mesh(#[from] MeshError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn fmt_f64(out: &mut String, v: f64) {
    write!(out, "{v:.16e}").unwrap();
}

pub fn write_mesh_string(mesh: &PolytopalMesh) -> String {
    let input = mesh.to_input();
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    writeln!(out, "vertices {}", input.vertices.len()).unwrap();
    for p in &input.vertices {
        fmt_f64(&mut out, p.x);
        out.push(' ');
        fmt_f64(&mut out, p.y);
        out.push('\n');
    }
    writeln!(out, "cells {}", input.cells.len()).unwrap();
    for c in &input.cells {
        write!(out, "{}", c.len()).unwrap();
        for v in c {
            write!(out, " {v}").unwrap();
        }
        out.push('\n');
    }
    writeln!(out, "cellpoints {}", input.cell_points.len()).unwrap();
    for p in &input.cell_points {
        fmt_f64(&mut out, p.x);
        out.push(' ');
        fmt_f64(&mut out, p.y);
        out.push('\n');
    }
    if let Some(o) = mesh.origin() {
        writeln!(out, "generator {} {} {}", o.family.name(), o.tiles_x, o.tiles_y).unwrap();
        writeln!(out, "tiles {}", o.tile_of_cell.len()).unwrap();
        for (i, j) in &o.tile_of_cell {
            writeln!(out, "{i} {j}").unwrap();
        }
    }
    out.push_str("end\n");
    out
}

pub fn write_mesh(path: &Path, mesh: &PolytopalMesh) -> Result<(), MeshFileError> {
    std::fs::write(path, write_mesh_string(mesh))?;
    Ok(())
}

struct Lines<'a> {
    inner: std::iter::Peekable<Box<dyn Iterator<Item = (usize, &'a str)> + 'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        let it: Box<dyn Iterator<Item = (usize, &'a str)>> = Box::new(
            text.lines()
                .enumerate()
                .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
                .filter(|(_, l)| !l.is_empty()),
        );
        Lines { inner: it.peekable(), last: 0 }
    }

    fn err(&self, what: impl Into<String>) -> MeshFileError {
        MeshFileError::Syntax { line: self.last, what: what.into() }
    }

    fn next(&mut self) -> Result<&'a str, MeshFileError> {
        match self.inner.next() {
            Some((n, l)) => {
                self.last = n;
                Ok(l)
            }
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn section(&mut self, name: &str) -> Result<usize, MeshFileError> {
        let line = self.next()?;
        let mut parts = line.split_whitespace();
        if parts.next() != Some(name) {
            return Err(self.err(format!("expected `{name} <count>`, found `{line}`")));
        }
        let n = self.number(parts.next())?;
        if parts.next().is_some() {
            return Err(self.err("trailing tokens"));
        }
        Ok(n)
    }

    fn number<T: std::str::FromStr>(&self, tok: Option<&str>) -> Result<T, MeshFileError> {
        let tok = tok.ok_or_else(|| self.err("missing value"))?;
        tok.parse().map_err(|_| self.err(format!("cannot parse `{tok}`")))
    }

    fn point(&mut self) -> Result<Point, MeshFileError> {
        let line = self.next()?;
        let mut parts = line.split_whitespace();
        let x: f64 = self.number(parts.next())?;
        let y: f64 = self.number(parts.next())?;
        if parts.next().is_some() {
            return Err(self.err("expected two coordinates"));
        }
        if !x.is_finite() || !y.is_finite() {
            return Err(self.err("non-finite coordinate"));
        }
        Ok(Point::new(x, y))
    }
}

/// Parses the file contents into the raw input and the optional generator metadata.
pub fn parse_mesh_input(text: &str) -> Result<(MeshInput, Option<MeshOrigin>), MeshFileError> {
    let mut lines = Lines::new(text);
    if lines.next()? != HEADER {
        return Err(lines.err(format!("expected header `{HEADER}`")));
    }
    let nv = lines.section("vertices")?;
    let vertices = (0..nv).map(|_| lines.point()).collect::<Result<Vec<_>, _>>()?;
    let nc = lines.section("cells")?;
    let mut cells = Vec::with_capacity(nc);
    for _ in 0..nc {
        let line = lines.next()?;
        let mut parts = line.split_whitespace();
        let m: usize = lines.number(parts.next())?;
        let ids = parts.map(|t| lines.number(Some(t))).collect::<Result<Vec<usize>, _>>()?;
        if ids.len() != m {
            return Err(lines.err(format!("cell declares {m} vertices but lists {}", ids.len())));
        }
        cells.push(ids);
    }
    let np = lines.section("cellpoints")?;
    if np != nc {
        return Err(lines.err(format!("{np} cell points for {nc} cells")));
    }
    let cell_points = (0..np).map(|_| lines.point()).collect::<Result<Vec<_>, _>>()?;

    let mut origin = None;
    let line = lines.next()?;
    let mut parts = line.split_whitespace();
    match parts.next() {
        Some("end") => {}
        Some("generator") => {
            let family = parts.next().and_then(Family::from_name).ok_or_else(|| lines.err("unknown generator family"))?;
            let tiles_x: usize = lines.number(parts.next())?;
            let tiles_y: usize = lines.number(parts.next())?;
            let nt = lines.section("tiles")?;
            if nt != nc {
                return Err(lines.err(format!("{nt} tile entries for {nc} cells")));
            }
            let mut tile_of_cell = Vec::with_capacity(nt);
            for _ in 0..nt {
                let l = lines.next()?;
                let mut p = l.split_whitespace();
                let i: usize = lines.number(p.next())?;
                let j: usize = lines.number(p.next())?;
                if i >= tiles_x || j >= tiles_y {
                    return Err(lines.err("tile index out of range"));
                }
                tile_of_cell.push((i, j));
            }
            origin = Some(MeshOrigin { family, tiles_x, tiles_y, tile_of_cell });
            if lines.next()? != "end" {
                return Err(lines.err("expected `end`"));
            }
        }
        _ => return Err(lines.err(format!("expected `generator` or `end`, found `{line}`"))),
    }
    if let Ok(extra) = lines.next() {
        return Err(lines.err(format!("content after `end`: `{extra}`")));
    }
    Ok((MeshInput { vertices, cells, cell_points }, origin))
}

pub fn parse_mesh(text: &str) -> Result<PolytopalMesh, MeshFileError> {
    let (input, origin) = parse_mesh_input(text)?;
    let mesh = PolytopalMesh::from_input(input)?;
    Ok(match origin {
        Some(o) => mesh.with_origin(o),
        None => mesh,
    })
}

pub fn read_mesh(path: &Path) -> Result<PolytopalMesh, MeshFileError> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use polyfv_core::meshgen::{cartesian, PointPlacement};

    #[test]
    fn round_trip_is_exact() {
        let m = cartesian(3, 2, PointPlacement::CheckerboardShift(0.2)).unwrap();
        let text = write_mesh_string(&m);
        let back = parse_mesh(&text).unwrap();
        assert_eq!(back.to_input(), m.to_input());
        assert_eq!(back.origin(), m.origin());
        assert_eq!(write_mesh_string(&back), text);
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let bad = "polyfv-mesh v1\nvertices 1\n0 x\n";
        match parse_mesh(bad) {
            Err(MeshFileError::Syntax { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
        assert!(parse_mesh("nope\n").is_err());
        let short = "polyfv-mesh v1\nvertices 3\n0 0\n1 0\n0 1\ncells 1\n4 0 1 2\ncellpoints 1\n0.2 0.2\nend\n";
        assert!(matches!(parse_mesh(short), Err(MeshFileError::Syntax { line: 7, .. })));
    }

    #[test]
    fn comments_and_invalid_geometry() {
        let cw = "polyfv-mesh v1\n# a clockwise triangle\nvertices 3\n0 0\n0 1\n1 0\ncells 1\n3 0 1 2\ncellpoints 1\n0.2 0.2\nend\n";
        assert!(matches!(parse_mesh(cw), Err(MeshFileError::Mesh(_))));
    }
}
