//! Incremental 3D convex hull with coplanar facets merged into polygons.

use std::collections::BTreeSet;

use nalgebra::{Matrix3, Point3, Vector3};

use super::{GeometryError, Transform};

/// Normals closer than this (radians) belong to the same face.
const COPLANAR_ANGLE: f64 = 1e-6;
/// Points this close (meters) to a face plane lie on it.
const PLANE_TOL: f64 = 1e-7;

/// A polygonal face of a convex hull.
#[derive(Clone, Debug)]
pub struct HullFace {
    /// Unit normal pointing away from the hull.
    pub outward_normal: Vector3<f64>,
    /// Plane offset: `outward_normal · x = offset` on the face.
    pub offset: f64,
    /// Face corners, counter-clockwise when seen from outside.
    pub vertices: Vec<Point3<f64>>,
    /// Maps face coordinates (x, y in the plane, z along the outward normal) to hull coordinates.
    pub frame: Transform,
    /// Corners in face coordinates, counter-clockwise.
    pub support_polygon: Vec<[f64; 2]>,
}

impl HullFace {
    pub fn area(&self) -> f64 {
        polygon_area(&self.support_polygon)
    }

    pub fn centroid(&self) -> Point3<f64> {
        let n = self.vertices.len() as f64;
        Point3::from(self.vertices.iter().map(|p| p.coords).sum::<Vector3<f64>>() / n)
    }

    /// Projection of `p` into face coordinates (dropping the normal component).
    pub fn project(&self, p: &Point3<f64>) -> [f64; 2] {
        let local = self.frame.inverse().apply(p);
        [local.x, local.y]
    }

    /// Signed distance from `q` (face coordinates) to the nearest polygon edge,
    /// positive inside.
    pub fn inset_distance(&self, q: [f64; 2]) -> f64 {
        inset_distance(&self.support_polygon, q)
    }
}

pub(crate) fn polygon_area(poly: &[[f64; 2]]) -> f64 {
    let n = poly.len();
    let mut a = 0.0;
    for i in 0..n {
        let p = poly[i];
        let q = poly[(i + 1) % n];
        a += p[0] * q[1] - q[0] * p[1];
    }
    0.5 * a
}

pub(crate) fn inset_distance(poly: &[[f64; 2]], q: [f64; 2]) -> f64 {
    let n = poly.len();
    let mut d = f64::INFINITY;
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let e = [b[0] - a[0], b[1] - a[1]];
        let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
        if len < 1e-15 {
            continue;
        }
        // inward normal of a CCW polygon is the left normal
        let s = (e[0] * (q[1] - a[1]) - e[1] * (q[0] - a[0])) / len;
        d = d.min(s);
    }
    d
}

#[derive(Clone, Copy)]
struct Tri {
    v: [usize; 3],
    normal: Vector3<f64>,
    offset: f64,
}

impl Tri {
    fn new(pts: &[Point3<f64>], a: usize, b: usize, c: usize) -> Tri {
        let n = (pts[b] - pts[a]).cross(&(pts[c] - pts[a])).normalize();
        Tri {
            v: [a, b, c],
            normal: n,
            offset: n.dot(&pts[a].coords),
        }
    }

    fn distance(&self, p: &Point3<f64>) -> f64 {
        self.normal.dot(&p.coords) - self.offset
    }
}

fn dedup(points: &[Point3<f64>]) -> Vec<Point3<f64>> {
    let mut out: Vec<Point3<f64>> = Vec::with_capacity(points.len());
    for p in points {
        if !out.iter().any(|q| (q - p).norm() < 1e-12) {
            out.push(*p);
        }
    }
    out
}

/// Convex hull of a point set, returned as merged polygonal faces.
pub fn convex_hull(points: &[Point3<f64>]) -> Result<Vec<HullFace>, GeometryError> {
    if points.iter().any(|p| !p.coords.iter().all(|c| c.is_finite())) {
        return Err(GeometryError::DegenerateInput("non-finite coordinate"));
    }
    let pts = dedup(points);
    if pts.len() < 4 {
        return Err(GeometryError::DegenerateInput("fewer than 4 distinct points"));
    }
    let scale = pts
        .iter()
        .map(|p| (p - pts[0]).norm())
        .fold(0.0_f64, f64::max)
        .max(1e-12);
    let eps = 1e-10 * scale;

    // initial tetrahedron from extreme points
    let i0 = (0..pts.len()).min_by(|&a, &b| pts[a].x.total_cmp(&pts[b].x)).unwrap();
    let i1 = (0..pts.len())
        .max_by(|&a, &b| (pts[a] - pts[i0]).norm().total_cmp(&(pts[b] - pts[i0]).norm()))
        .unwrap();
    let dir = (pts[i1] - pts[i0]).normalize();
    let line_dist = |p: &Point3<f64>| {
        let v = p - pts[i0];
        (v - dir * v.dot(&dir)).norm()
    };
    let i2 = (0..pts.len())
        .max_by(|&a, &b| line_dist(&pts[a]).total_cmp(&line_dist(&pts[b])))
        .unwrap();
    if line_dist(&pts[i2]) < 1e-9 * scale {
        return Err(GeometryError::DegenerateInput("points are collinear"));
    }
    let base = Tri::new(&pts, i0, i1, i2);
    let i3 = (0..pts.len())
        .max_by(|&a, &b| base.distance(&pts[a]).abs().total_cmp(&base.distance(&pts[b]).abs()))
        .unwrap();
    if base.distance(&pts[i3]).abs() < 1e-9 * scale {
        return Err(GeometryError::DegenerateInput("points are coplanar"));
    }

    let interior = Point3::from((pts[i0].coords + pts[i1].coords + pts[i2].coords + pts[i3].coords) / 4.0);
    let oriented = |a: usize, b: usize, c: usize| {
        let t = Tri::new(&pts, a, b, c);
        if t.distance(&interior) > 0.0 {
            Tri::new(&pts, a, c, b)
        } else {
            t
        }
    };
    let mut faces: Vec<Tri> = vec![
        oriented(i0, i1, i2),
        oriented(i0, i1, i3),
        oriented(i0, i2, i3),
        oriented(i1, i2, i3),
    ];

    for (pi, p) in pts.iter().enumerate() {
        if [i0, i1, i2, i3].contains(&pi) {
            continue;
        }
        let visible: Vec<usize> = (0..faces.len()).filter(|&f| faces[f].distance(p) > eps).collect();
        if visible.is_empty() {
            continue;
        }
        let mut directed: BTreeSet<(usize, usize)> = BTreeSet::new();
        for &f in &visible {
            let [a, b, c] = faces[f].v;
            directed.extend([(a, b), (b, c), (c, a)]);
        }
        let horizon: Vec<(usize, usize)> = directed
            .iter()
            .filter(|(a, b)| !directed.contains(&(*b, *a)))
            .copied()
            .collect();
        let vis: BTreeSet<usize> = visible.into_iter().collect();
        faces = faces
            .into_iter()
            .enumerate()
            .filter(|(i, _)| !vis.contains(i))
            .map(|(_, f)| f)
            .collect();
        for (a, b) in horizon {
            faces.push(Tri::new(&pts, a, b, pi));
        }
    }

    Ok(merge_coplanar(&pts, &faces))
}

fn merge_coplanar(pts: &[Point3<f64>], tris: &[Tri]) -> Vec<HullFace> {
    let mut groups: Vec<(Vector3<f64>, f64)> = Vec::new();
    for t in tris {
        let known = groups
            .iter()
            .any(|(n, d)| n.angle(&t.normal) <= COPLANAR_ANGLE && (d - t.offset).abs() <= PLANE_TOL);
        if !known {
            groups.push((t.normal, t.offset));
        }
    }
    let mut faces = Vec::with_capacity(groups.len());
    for (normal, offset) in groups {
        let on_plane: Vec<Point3<f64>> = pts
            .iter()
            .filter(|p| (normal.dot(&p.coords) - offset).abs() <= PLANE_TOL)
            .copied()
            .collect();
        // in-plane basis with u x v = normal
        let helper = if normal.x.abs() < 0.9 {
            Vector3::x()
        } else {
            Vector3::y()
        };
        let u = (helper - normal * helper.dot(&normal)).normalize();
        let v = normal.cross(&u);
        let centroid = on_plane.iter().map(|p| p.coords).sum::<Vector3<f64>>() / on_plane.len() as f64;
        let origin = centroid - normal * (normal.dot(&centroid) - offset);
        let frame = Transform::from_matrix_parts(Matrix3::from_columns(&[u, v, normal]), origin);
        let inv = frame.inverse();
        let planar: Vec<([f64; 2], Point3<f64>)> = on_plane
            .iter()
            .map(|p| {
                let l = inv.apply(p);
                ([l.x, l.y], *p)
            })
            .collect();
        let ring = hull_2d(planar);
        let support_polygon: Vec<[f64; 2]> = ring.iter().map(|(q, _)| *q).collect();
        let vertices: Vec<Point3<f64>> = ring.iter().map(|(_, p)| *p).collect();
        faces.push(HullFace {
            outward_normal: normal,
            offset,
            vertices,
            frame,
            support_polygon,
        });
    }
    faces
}

/// Andrew's monotone chain; returns a counter-clockwise ring without collinear points.
fn hull_2d(mut pts: Vec<([f64; 2], Point3<f64>)>) -> Vec<([f64; 2], Point3<f64>)> {
    pts.sort_by(|a, b| a.0[0].total_cmp(&b.0[0]).then(a.0[1].total_cmp(&b.0[1])));
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<([f64; 2], Point3<f64>)> = Vec::new();
    for p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2].0, lower[lower.len() - 1].0, p.0) <= 1e-14 {
            lower.pop();
        }
        lower.push(*p);
    }
    let mut upper: Vec<([f64; 2], Point3<f64>)> = Vec::new();
    for p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2].0, upper[upper.len() - 1].0, p.0) <= 1e-14 {
            upper.pop();
        }
        upper.push(*p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}
