use serde::{Deserialize, Serialize};

use super::cone::{in_plane_normal, placed_contains};
use super::{add, dot, norm, scale, sub, Aabb, ConeSpec, Hyperplane, Point};
use crate::error::{Error, Result};

/// `origin + {Σ λ_j e_j : 0 ≤ λ_j ≤ 1}` with `N - 1` independent edges lying
/// in a hyperplane.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Parallelepiped {
    pub origin: Point,
    pub edges: Vec<Point>,
}

impl Parallelepiped {
    pub fn new(origin: Point, edges: Vec<Point>) -> Result<Self> {
        let p = Self { origin, edges };
        if !(1..=2).contains(&p.edges.len()) || p.measure() <= 1e-14 {
            return Err(Error::Argument(
                "parallelepiped needs 1 or 2 independent edges".into(),
            ));
        }
        Ok(p)
    }

    /// Relative (in-plane) measure: length or area.
    pub fn measure(&self) -> f64 {
        match self.edges.as_slice() {
            [e] => norm(e),
            [a, b] => {
                let g = dot(a, a) * dot(b, b) - dot(a, b).powi(2);
                g.max(0.0).sqrt()
            }
            _ => 0.0,
        }
    }

    pub fn translated(&self, t: &Point) -> Parallelepiped {
        Parallelepiped {
            origin: add(&self.origin, t),
            edges: self.edges.clone(),
        }
    }

    pub fn vertices(&self) -> Vec<Point> {
        match self.edges.as_slice() {
            [e] => vec![self.origin, add(&self.origin, e)],
            [a, b] => vec![
                self.origin,
                add(&self.origin, a),
                add(&self.origin, b),
                add(&add(&self.origin, a), b),
            ],
            _ => vec![self.origin],
        }
    }

    pub fn center(&self) -> Point {
        self.edges
            .iter()
            .fold(self.origin, |acc, e| add(&acc, &scale(e, 0.5)))
    }

    pub fn bbox(&self) -> Aabb {
        let vs = self.vertices();
        let mut lo = vs[0];
        let mut hi = vs[0];
        for v in &vs[1..] {
            for d in 0..3 {
                lo[d] = lo[d].min(v[d]);
                hi[d] = hi[d].max(v[d]);
            }
        }
        Aabb::new(lo, hi)
    }

    /// Distances between the pairs of opposite faces.
    fn heights(&self) -> Vec<f64> {
        match self.edges.as_slice() {
            [e] => vec![norm(e)],
            [a, b] => {
                let area = self.measure();
                vec![area / norm(b), area / norm(a)]
            }
            _ => vec![],
        }
    }

    /// Distance from the centre to the relative boundary; the threshold `ρ̄`.
    pub fn center_to_boundary(&self) -> f64 {
        self.heights()
            .into_iter()
            .fold(f64::INFINITY, |m, h| m.min(h / 2.0))
    }

    /// Edge coordinates `λ` of `q - origin` and the off-plane residual.
    fn coordinates(&self, q: &Point) -> (Vec<f64>, f64) {
        let v = sub(q, &self.origin);
        match self.edges.as_slice() {
            [e] => {
                let l = dot(&v, e) / dot(e, e);
                let res = norm(&sub(&v, &scale(e, l)));
                (vec![l], res)
            }
            [a, b] => {
                let (aa, ab, bb) = (dot(a, a), dot(a, b), dot(b, b));
                let (va, vb) = (dot(&v, a), dot(&v, b));
                let det = aa * bb - ab * ab;
                let l1 = (va * bb - vb * ab) / det;
                let l2 = (vb * aa - va * ab) / det;
                let res = norm(&sub(&v, &add(&scale(a, l1), &scale(b, l2))));
                (vec![l1, l2], res)
            }
            _ => (vec![], norm(&v)),
        }
    }

    /// Signed depth of `q` inside the parallelepiped, measured within its
    /// plane: positive in the relative interior, zero on the relative
    /// boundary, negative outside. Points off the plane get `-inf`.
    pub fn depth(&self, q: &Point) -> f64 {
        let (lam, res) = self.coordinates(q);
        if res > 1e-12 {
            return f64::NEG_INFINITY;
        }
        lam.iter()
            .zip(self.heights())
            .map(|(l, h)| (l * h).min((1.0 - l) * h))
            .fold(f64::INFINITY, f64::min)
    }

    pub fn contains(&self, q: &Point, tol: f64) -> bool {
        self.depth(q) >= -tol
    }
}

/// The parallelepiped with a vertex at `apex` inscribed in the cone placed
/// at `apex` with axis `u`. In a 2-d plane it is a rhombus whose edges make
/// angles `±α/2` with the axis (`α` the half-opening), as large as fits; in
/// a 1-d plane it is the whole cone segment.
pub(crate) fn inscribed(
    cone: &ConeSpec,
    plane: &Hyperplane,
    dim: usize,
    apex: &Point,
    u: &Point,
) -> Parallelepiped {
    if cone.plane_dim() == 1 {
        let e = scale(u, cone.axis_length() + cone.ball_radius());
        return Parallelepiped {
            origin: *apex,
            edges: vec![e],
        };
    }
    let w = in_plane_normal(u, plane, dim);
    let beta = cone.half_angle() / 2.0;
    let d1 = add(&scale(u, beta.cos()), &scale(&w, beta.sin()));
    let d2 = add(&scale(u, beta.cos()), &scale(&w, -beta.sin()));
    let diag = add(&d1, &d2);
    let fits = |s: f64| {
        [scale(&d1, s), scale(&d2, s), scale(&diag, s)]
            .iter()
            .all(|v| placed_contains(cone, &[0.0; 3], u, v))
    };
    let (mut lo, mut hi) = (0.0, cone.diameter());
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if fits(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let s = lo * (1.0 - 1e-9);
    Parallelepiped {
        origin: *apex,
        edges: vec![scale(&d1, s), scale(&d2, s)],
    }
}

/// An isometric flattening chart `Φ_x(z) = z - x` on `B_δ(x)`, with the
/// hyperplane normal moved to the last coordinate. Bi-Lipschitz constants
/// are both 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanarChart {
    pub base_point: Point,
    pub hyperplane: Hyperplane,
    pub delta: f64,
    pub l1: f64,
    pub l2: f64,
}

impl PlanarChart {
    pub fn isometric(base_point: Point, hyperplane: Hyperplane, delta: f64) -> Result<Self> {
        if !(delta > 0.0) {
            return Err(Error::Argument("chart radius must be positive".into()));
        }
        Ok(Self {
            base_point,
            hyperplane,
            delta,
            l1: 1.0,
            l2: 1.0,
        })
    }

    /// `L1 · diam C < δ / 8`.
    pub fn admits(&self, cone: &ConeSpec) -> bool {
        self.l1 <= self.l2 && self.l1 * cone.diameter() < self.delta / 8.0
    }

    pub fn apply(&self, z: &Point, dim: usize) -> Point {
        let v = sub(z, &self.base_point);
        let mut out = [0.0; 3];
        for (k, a) in self.hyperplane.in_plane_axes(dim).into_iter().enumerate() {
            out[k] = v[a];
        }
        out[dim - 1] = v[self.hyperplane.axis];
        out
    }
}
