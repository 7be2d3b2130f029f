//! Mesh families: shifted cartesian grids and the three classical
//! circumcentred acute triangulations (subdivision, reproduction by
//! symmetry, reproduction by translation).

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::geometry::{circumcenter, orient2d, triangle_angles, Point};
use crate::mesh::{Family, MeshError, MeshOrigin, PolytopalMesh};

/// Acuteness margin: every angle must be below `π/2 − TOL_ANGLE`.
pub const TOL_ANGLE: f64 = 1e-9;

/// Where to put `x_K` in each cell.
#[derive(Clone, Copy, Debug)]
pub enum PointPlacement {
    Centroid,
    /// `x_K = x̄_K ± δ·(h_x, h_y)`, `+` on cells with even `i + j`.
    CheckerboardShift(f64),
    /// `x_K = x̄_K + (s_x h_x, s_y h_y)` on every cell.
    UniformShift(Point),
    /// Circumcenter of the first three vertices (exact for triangles and rectangles).
    Circumcenter,
    /// Arbitrary rule from the cell's vertices.
    Custom(fn(&[Point]) -> Point),
}

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum MeshGenError {
    #[error("shift of {0} cell widths would leave the cell (must be < 0.5)")]
    ShiftTooLarge(f64),
    #[error("degenerate (collinear) triangle")]
    DegenerateTriangle,
    #[error("triangle {triangle} has an angle of {angle} rad, not acute")]
    NotAcute { triangle: usize, angle: f64 },
    #[error("left/right or bottom/top vertex traces do not match under translation")]
    BoundaryMismatch,
    #[error("initial triangulation does not cover the unit square")]
    NotUnitSquare,
    #[error("invalid generator argument: {0}")]
    InvalidArgument(&'static str),
    #[error(transparent)]
    Mesh(#[from] MeshError),
}

/// A triangulation, typically of the unit square, used as a generator seed.
#[derive(Clone, Debug, PartialEq)]
pub struct InitialTriangulation {
    pub vertices: Vec<Point>,
    /// Counter-clockwise vertex triples.
    pub triangles: Vec<[usize; 3]>,
}

impl InitialTriangulation {
    /// Acute 26-triangle triangulation of `[0,1]²` with every side split in
    /// thirds, so it tiles by translation as well as by reflection. Interior
    /// vertices sit on a 1/128 grid. Largest angle ≈ 75.1°.
    pub fn acute_unit_square() -> Self {
        let t = 1.0 / 3.0;
        let s = 2.0 / 3.0;
        let q = |x: f64, y: f64| Point::new(x / 128.0, y / 128.0);
        let vertices = vec![
            Point::new(0.0, 0.0),
            Point::new(t, 0.0),
            Point::new(s, 0.0),
            Point::new(1.0, 0.0),
            Point::new(1.0, t),
            Point::new(1.0, s),
            Point::new(1.0, 1.0),
            Point::new(s, 1.0),
            Point::new(t, 1.0),
            Point::new(0.0, 1.0),
            Point::new(0.0, s),
            Point::new(0.0, t),
            q(29.0, 27.0),
            q(71.0, 30.0),
            q(98.0, 27.0),
            q(37.0, 63.0),
            q(89.0, 67.0),
            q(29.0, 101.0),
            q(52.0, 98.0),
            q(97.0, 102.0),
        ];
        let triangles = vec![
            [4, 5, 16], [15, 13, 16], [2, 13, 1], [4, 14, 3], [14, 2, 3], [14, 4, 16], [13, 14, 16],
            [14, 13, 2], [19, 5, 6], [7, 19, 6], [5, 19, 16], [18, 15, 16], [19, 18, 16], [18, 19, 7],
            [18, 7, 8], [10, 11, 15], [11, 12, 15], [13, 12, 1], [12, 13, 15], [1, 12, 0], [12, 11, 0],
            [17, 8, 9], [10, 17, 9], [17, 18, 8], [18, 17, 15], [17, 10, 15],
        ];
        InitialTriangulation { vertices, triangles }
    }

    /// Acute 8-triangle triangulation of `[0,1]²`. Bottom/top traces are
    /// `{0, 1/2, 1}` and left/right traces `{0, 1}`. Largest angle ≈ 85.6°.
    /// Coarse enough that the first levels of a study are pre-asymptotic.
    pub fn acute_unit_square_coarse() -> Self {
        let vertices = vec![
            Point::new(0.0, 0.0),       // 0
            Point::new(1.0, 0.0),       // 1
            Point::new(1.0, 1.0),       // 2
            Point::new(0.0, 1.0),       // 3
            Point::new(0.5, 0.0),       // 4
            Point::new(0.5, 1.0),       // 5
            Point::new(0.4375, 0.8125), // 6
            Point::new(0.5625, 0.8125), // 7
        ];
        let triangles = vec![
            [0, 4, 6],
            [0, 6, 3],
            [3, 6, 5],
            [4, 7, 6],
            [6, 7, 5],
            [4, 1, 7],
            [1, 2, 7],
            [7, 2, 5],
        ];
        InitialTriangulation { vertices, triangles }
    }

    pub fn max_angle(&self) -> f64 {
        self.triangles
            .iter()
            .flat_map(|t| triangle_angles(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]))
            .fold(0.0, f64::max)
    }

    /// Fails with `NotAcute` unless every angle is below `π/2 − TOL_ANGLE`.
    pub fn check_acute(&self) -> Result<(), MeshGenError> {
        for (i, t) in self.triangles.iter().enumerate() {
            let (a, b, c) = (self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]);
            if !(orient2d(a, b, c) > 0.0) {
                return Err(MeshGenError::DegenerateTriangle);
            }
            for ang in triangle_angles(a, b, c) {
                if !(ang < core::f64::consts::FRAC_PI_2 - TOL_ANGLE) {
                    return Err(MeshGenError::NotAcute { triangle: i, angle: ang });
                }
            }
        }
        Ok(())
    }

    fn area(&self) -> f64 {
        self.triangles
            .iter()
            .map(|t| 0.5 * orient2d(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]))
            .sum()
    }

    fn check_unit_square(&self) -> Result<(), MeshGenError> {
        let in_square = self.vertices.iter().all(|p| (-1e-12..=1.0 + 1e-12).contains(&p.x) && (-1e-12..=1.0 + 1e-12).contains(&p.y));
        if !in_square || (self.area() - 1.0).abs() > 1e-12 {
            return Err(MeshGenError::NotUnitSquare);
        }
        Ok(())
    }

    /// Builds the circumcentred mesh of this triangulation.
    pub fn to_mesh(&self) -> Result<PolytopalMesh, MeshGenError> {
        let pts = self
            .triangles
            .iter()
            .map(|t| {
                circumcenter(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]])
                    .ok_or(MeshGenError::DegenerateTriangle)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let cells = self.triangles.iter().map(|t| t.to_vec()).collect();
        Ok(crate::mesh::build_mesh(self.vertices.clone(), cells, pts)?)
    }
}

/// Circumcenter of a triangle.
pub fn triangle_circumcenter(a: Point, b: Point, c: Point) -> Result<Point, MeshGenError> {
    circumcenter(a, b, c).ok_or(MeshGenError::DegenerateTriangle)
}

/// `nx × ny` grid of `[0,1]²` with cell points placed by `placement`.
pub fn cartesian(nx: usize, ny: usize, placement: PointPlacement) -> Result<PolytopalMesh, MeshGenError> {
    if nx == 0 || ny == 0 {
        return Err(MeshGenError::InvalidArgument("grid dimensions must be positive"));
    }
    match placement {
        PointPlacement::CheckerboardShift(d) if !(d.abs() < 0.5) => return Err(MeshGenError::ShiftTooLarge(d)),
        PointPlacement::UniformShift(s) if !(s.x.abs() < 0.5 && s.y.abs() < 0.5) => {
            return Err(MeshGenError::ShiftTooLarge(s.x.abs().max(s.y.abs())))
        }
        _ => {}
    }
    let (hx, hy) = (1.0 / nx as f64, 1.0 / ny as f64);
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Point::new(i as f64 * hx, j as f64 * hy));
        }
    }
    let mut cells = Vec::with_capacity(nx * ny);
    let mut points = Vec::with_capacity(nx * ny);
    let mut tiles = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let v = j * (nx + 1) + i;
            let ids = vec![v, v + 1, v + nx + 2, v + nx + 1];
            let center = Point::new((i as f64 + 0.5) * hx, (j as f64 + 0.5) * hy);
            let p = match placement {
                PointPlacement::Centroid | PointPlacement::Circumcenter => center,
                PointPlacement::CheckerboardShift(d) => {
                    let s = if (i + j) % 2 == 0 { d } else { -d };
                    center + Point::new(s * hx, s * hy)
                }
                PointPlacement::UniformShift(s) => center + Point::new(s.x * hx, s.y * hy),
                PointPlacement::Custom(rule) => {
                    let corners: Vec<Point> = ids.iter().map(|&v| vertices[v]).collect();
                    rule(&corners)
                }
            };
            cells.push(ids);
            points.push(p);
            tiles.push((i, j));
        }
    }
    let mesh = crate::mesh::build_mesh(vertices, cells, points)?;
    Ok(mesh.with_origin(MeshOrigin { family: Family::Cartesian, tiles_x: nx, tiles_y: ny, tile_of_cell: tiles }))
}

/// Applies a placement rule to the cells of any mesh (e.g. a triangulation).
pub fn place_points(mesh: &PolytopalMesh, placement: PointPlacement) -> Result<PolytopalMesh, MeshGenError> {
    let pts = (0..mesh.n_cells())
        .map(|k| {
            let c = mesh.cell(k);
            let v = mesh.cell_vertices(k);
            Ok(match placement {
                PointPlacement::Centroid => c.centroid,
                PointPlacement::Circumcenter => triangle_circumcenter(v[0], v[1], v[2])?,
                PointPlacement::Custom(rule) => rule(&v),
                PointPlacement::CheckerboardShift(_) | PointPlacement::UniformShift(_) => {
                    return Err(MeshGenError::InvalidArgument("grid shifts only apply to cartesian meshes"))
                }
            })
        })
        .collect::<Result<Vec<_>, MeshGenError>>()?;
    Ok(mesh.with_cell_points(pts)?)
}

/// Merges coincident points (within `tol`) through a hashed grid.
struct Welder {
    tol: f64,
    buckets: BTreeMap<(i64, i64), Vec<usize>>,
    points: Vec<Point>,
}

impl Welder {
    fn new(tol: f64) -> Self {
        Welder { tol, buckets: BTreeMap::new(), points: Vec::new() }
    }

    fn key(&self, p: Point) -> (i64, i64) {
        let s = 4.0 * self.tol;
        (libm::floor(p.x / s) as i64, libm::floor(p.y / s) as i64)
    }

    fn insert(&mut self, p: Point) -> usize {
        let (kx, ky) = self.key(p);
        for dx in -1..=1 {
            for dy in -1..=1 {
                if let Some(ids) = self.buckets.get(&(kx + dx, ky + dy)) {
                    for &id in ids {
                        if self.points[id].dist(p) <= self.tol {
                            return id;
                        }
                    }
                }
            }
        }
        let id = self.points.len();
        self.points.push(p);
        self.buckets.entry((kx, ky)).or_default().push(id);
        id
    }
}

fn circumcentred(
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    origin: MeshOrigin,
) -> Result<PolytopalMesh, MeshGenError> {
    let init = InitialTriangulation { vertices, triangles };
    Ok(init.to_mesh()?.with_origin(origin))
}

/// Uniform `n²` split of every triangle of `initial`; circumcentred.
pub fn subdivision_family(initial: &InitialTriangulation, n: usize) -> Result<PolytopalMesh, MeshGenError> {
    if n == 0 {
        return Err(MeshGenError::InvalidArgument("subdivision level must be >= 1"));
    }
    initial.check_acute()?;
    let nf = n as f64;
    let mut vertices = initial.vertices.clone();
    let mut edge_points: BTreeMap<(usize, usize, usize), usize> = BTreeMap::new();
    let mut triangles = Vec::with_capacity(initial.triangles.len() * n * n);
    let mut tiles = Vec::with_capacity(initial.triangles.len() * n * n);
    for (t, tri) in initial.triangles.iter().enumerate() {
        // lattice point (i, j): weight i on tri[1], j on tri[2]
        let mut lattice = vec![usize::MAX; (n + 1) * (n + 1)];
        for j in 0..=n {
            for i in 0..=(n - j) {
                let w = [n - i - j, i, j];
                let nonzero: Vec<usize> = (0..3).filter(|&s| w[s] > 0).collect();
                let id = match nonzero.len() {
                    1 => tri[nonzero[0]],
                    2 => {
                        let (s0, s1) = (nonzero[0], nonzero[1]);
                        let (lo, hi) = if tri[s0] < tri[s1] { (s0, s1) } else { (s1, s0) };
                        let key = (tri[lo], tri[hi], w[hi]);
                        *edge_points.entry(key).or_insert_with(|| {
                            let (a, b) = (initial.vertices[tri[lo]], initial.vertices[tri[hi]]);
                            vertices.push(a + (b - a) * (w[hi] as f64 / nf));
                            vertices.len() - 1
                        })
                    }
                    _ => {
                        let (a, b, c) = (initial.vertices[tri[0]], initial.vertices[tri[1]], initial.vertices[tri[2]]);
                        vertices.push(a + (b - a) * (i as f64 / nf) + (c - a) * (j as f64 / nf));
                        vertices.len() - 1
                    }
                };
                lattice[j * (n + 1) + i] = id;
            }
        }
        let at = |i: usize, j: usize| lattice[j * (n + 1) + i];
        for j in 0..n {
            for i in 0..(n - j) {
                triangles.push([at(i, j), at(i + 1, j), at(i, j + 1)]);
                tiles.push((t, 0));
                if i + j + 2 <= n {
                    triangles.push([at(i + 1, j), at(i + 1, j + 1), at(i, j + 1)]);
                    tiles.push((t, 0));
                }
            }
        }
    }
    // one tile per seed triangle
    let origin = MeshOrigin { family: Family::Subdivision, tiles_x: initial.triangles.len(), tiles_y: 1, tile_of_cell: tiles };
    circumcentred(vertices, triangles, origin)
}

/// `n × n` copies of a unit-square triangulation, shrunk by `n`, tile
/// `(i, j)` reflected in x when `i` is odd and in y when `j` is odd.
pub fn symmetry_family(initial: &InitialTriangulation, n: usize) -> Result<PolytopalMesh, MeshGenError> {
    reproduce(initial, n, true)
}

/// `n × n` translated copies of a unit-square triangulation whose opposite
/// boundary vertex traces match.
pub fn translation_family(initial: &InitialTriangulation, n: usize) -> Result<PolytopalMesh, MeshGenError> {
    check_translation_traces(initial)?;
    reproduce(initial, n, false)
}

fn trace(initial: &InitialTriangulation, on_side: impl Fn(Point) -> bool, coord: impl Fn(Point) -> f64) -> Vec<f64> {
    let used: alloc::collections::BTreeSet<usize> = initial.triangles.iter().flatten().copied().collect();
    let mut t: Vec<f64> = used
        .into_iter()
        .map(|v| initial.vertices[v])
        .filter(|&p| on_side(p))
        .map(coord)
        .collect();
    t.sort_by(|a, b| a.partial_cmp(b).expect("finite coordinates"));
    t
}

fn traces_match(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12)
}

pub fn check_translation_traces(initial: &InitialTriangulation) -> Result<(), MeshGenError> {
    let tol = 1e-12;
    let left = trace(initial, |p| p.x.abs() <= tol, |p| p.y);
    let right = trace(initial, |p| (p.x - 1.0).abs() <= tol, |p| p.y);
    let bottom = trace(initial, |p| p.y.abs() <= tol, |p| p.x);
    let top = trace(initial, |p| (p.y - 1.0).abs() <= tol, |p| p.x);
    if traces_match(&left, &right) && traces_match(&bottom, &top) {
        Ok(())
    } else {
        Err(MeshGenError::BoundaryMismatch)
    }
}

fn reproduce(initial: &InitialTriangulation, n: usize, reflect: bool) -> Result<PolytopalMesh, MeshGenError> {
    if n == 0 {
        return Err(MeshGenError::InvalidArgument("reproduction count must be >= 1"));
    }
    initial.check_acute()?;
    initial.check_unit_square()?;
    let nf = n as f64;
    let mut welder = Welder::new(1e-12 / nf);
    let mut triangles = Vec::with_capacity(initial.triangles.len() * n * n);
    let mut tiles = Vec::with_capacity(initial.triangles.len() * n * n);
    for j in 0..n {
        for i in 0..n {
            let fx = reflect && i % 2 == 1;
            let fy = reflect && j % 2 == 1;
            let ids: Vec<usize> = initial
                .vertices
                .iter()
                .map(|p| {
                    let x = if fx { 1.0 - p.x } else { p.x };
                    let y = if fy { 1.0 - p.y } else { p.y };
                    welder.insert(Point::new((i as f64 + x) / nf, (j as f64 + y) / nf))
                })
                .collect();
            for t in &initial.triangles {
                let tri = [ids[t[0]], ids[t[1]], ids[t[2]]];
                // a single reflection reverses orientation
                if fx != fy {
                    triangles.push([tri[0], tri[2], tri[1]]);
                } else {
                    triangles.push(tri);
                }
                tiles.push((i, j));
            }
        }
    }
    let family = if reflect { Family::Symmetry } else { Family::Translation };
    let origin = MeshOrigin { family, tiles_x: n, tiles_y: n, tile_of_cell: tiles };
    circumcentred(welder.points, triangles, origin)
}
