#![allow(dead_code)]

use polyfv_core::geometry::{circumcenter, orient2d, Point};
use polyfv_core::harness::MeshFamily;
use polyfv_core::mesh::{MeshInput, PolytopalMesh};
use polyfv_core::meshgen::{cartesian, PointPlacement};
use rand::Rng;

/// Small meshes of every generator family.
pub fn family_meshes() -> Vec<(String, PolytopalMesh)> {
    let mut out = Vec::new();
    for (label, p) in [
        ("centroid", PointPlacement::Centroid),
        ("circumcenter", PointPlacement::Circumcenter),
        ("checkerboard", PointPlacement::CheckerboardShift(0.25)),
        ("uniform", PointPlacement::UniformShift(Point::new(0.25, 0.0))),
    ] {
        out.push((format!("cartesian-{label}-5x4"), cartesian(5, 4, p).unwrap()));
    }
    for name in ["subdivision", "symmetry", "translation"] {
        let fam = MeshFamily::triangulation(name).unwrap();
        for n in [1, 2] {
            out.push((format!("{name}-{n}"), fam.build(n).unwrap()));
        }
    }
    out
}

/// Cartesian grid whose cell points are moved to random spots at least a
/// fifth of a cell away from the cell boundary.
pub fn random_cell_points<R: Rng>(rng: &mut R, nx: usize, ny: usize) -> PolytopalMesh {
    let m = cartesian(nx, ny, PointPlacement::Centroid).unwrap();
    let (hx, hy) = (1.0 / nx as f64, 1.0 / ny as f64);
    let points = m
        .cells()
        .iter()
        .map(|c| c.centroid + Point::new(rng.gen_range(-0.3..0.3) * hx, rng.gen_range(-0.3..0.3) * hy))
        .collect();
    m.with_cell_points(points).unwrap()
}

/// A triangle with vertices in `[-s, s]²` whose smallest angle exceeds about 3°.
pub fn random_triangle<R: Rng>(rng: &mut R, s: f64) -> [Point; 3] {
    loop {
        let t: [Point; 3] = core::array::from_fn(|_| Point::new(rng.gen_range(-s..s), rng.gen_range(-s..s)));
        let area = orient2d(t[0], t[1], t[2]).abs() / 2.0;
        let longest = (0..3).map(|i| t[i].dist(t[(i + 1) % 3])).fold(0.0, f64::max);
        if area > 0.02 * longest * longest {
            return t;
        }
    }
}

/// Conforming triangulation of a random convex polygon, grown by random
/// point insertions and edge splits. Cell points are centroids.
pub fn random_triangulation<R: Rng>(rng: &mut R, ops: usize) -> PolytopalMesh {
    let m = rng.gen_range(3..8);
    let mut angles: Vec<f64>;
    loop {
        angles = (0..m).map(|_| rng.gen_range(0.0..core::f64::consts::TAU)).collect();
        angles.sort_by(f64::total_cmp);
        let gaps = angles.windows(2).map(|w| w[1] - w[0]).chain([angles[0] + core::f64::consts::TAU - angles[m - 1]]);
        if gaps.clone().all(|g| g > 0.3) && gaps.fold(0.0, f64::max) < 2.5 {
            break;
        }
    }
    let (ax, ay) = (rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0));
    let c = Point::new(rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
    let mut pts: Vec<Point> = angles.iter().map(|t| c + Point::new(ax * t.cos(), ay * t.sin())).collect();
    let mut tris: Vec<[usize; 3]> = (1..m - 1).map(|i| [0, i, i + 1]).collect();

    for _ in 0..ops {
        let t = rng.gen_range(0..tris.len());
        let [a, b, cc] = tris[t];
        if rng.gen_bool(0.5) {
            let mut w: [f64; 3] = core::array::from_fn(|_| rng.gen_range(0.2..1.0));
            let s: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= s);
            let p = pts[a] * w[0] + pts[b] * w[1] + pts[cc] * w[2];
            let id = pts.len();
            pts.push(p);
            tris[t] = [a, b, id];
            tris.push([b, cc, id]);
            tris.push([cc, a, id]);
        } else {
            let local = rng.gen_range(0..3);
            let tri = tris[t];
            let (a, b, cc) = (tri[local], tri[(local + 1) % 3], tri[(local + 2) % 3]);
            let s = rng.gen_range(0.3..0.7);
            let id = pts.len();
            pts.push(pts[a] + (pts[b] - pts[a]) * s);
            tris[t] = [a, id, cc];
            tris.push([id, b, cc]);
            let nb = tris.iter().position(|q| (0..3).any(|i| q[i] == b && q[(i + 1) % 3] == a));
            if let Some(n) = nb {
                let q = tris[n];
                let i = (0..3).find(|&i| q[i] == b).unwrap();
                let d = q[(i + 2) % 3];
                tris[n] = [b, id, d];
                tris.push([id, a, d]);
            }
        }
    }
    let cell_points = tris.iter().map(|t| (pts[t[0]] + pts[t[1]] + pts[t[2]]) * (1.0 / 3.0)).collect();
    let input = MeshInput { vertices: pts, cells: tris.iter().map(|t| t.to_vec()).collect(), cell_points };
    PolytopalMesh::from_input(input).expect("random triangulation is valid")
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Sum of the absolute sizes of the terms on both sides of the boundary
/// compensation identity, computed independently of the library.
pub fn compensation_scale(mesh: &PolytopalMesh) -> f64 {
    let mut moment = Point::ZERO;
    let mut lhs = 0.0;
    for (k, c) in mesh.cells().iter().enumerate() {
        let v = mesh.cell_vertices(k);
        let g = (v[0] + v[1] + v[2]) * (1.0 / 3.0);
        moment += g * c.measure;
        lhs += c.measure * (circumcenter(v[0], v[1], v[2]).unwrap() - g).norm();
    }
    let xq = moment * (1.0 / mesh.area());
    let rhs: f64 = mesh
        .edges()
        .iter()
        .filter(|e| !e.is_interior())
        .map(|e| {
            let (a, b) = (mesh.vertices()[e.endpoints[0]] - xq, mesh.vertices()[e.endpoints[1]] - xq);
            e.length * (a.norm_sq() + b.norm_sq()) / 4.0
        })
        .sum();
    lhs.max(rhs)
}
