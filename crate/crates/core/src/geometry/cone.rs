use serde::{Deserialize, Serialize};

use super::{add, dot, norm, scale, sub, CompactSet, Hyperplane, Point};
use crate::error::{Error, Result};

/// A finite closed cone `C = {λy : y ∈ B̄(c, r), 0 ≤ λ ≤ 1}` with apex at the
/// origin of a hyperplane. `ball_center` has `N - 1` coordinates, expressed
/// in the in-plane axes in increasing order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ConeRepr", into = "ConeRepr")]
pub struct ConeSpec {
    ball_center: Vec<f64>,
    ball_radius: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConeRepr {
    ball_center: Vec<f64>,
    ball_radius: f64,
}

impl TryFrom<ConeRepr> for ConeSpec {
    type Error = Error;
    fn try_from(r: ConeRepr) -> Result<Self> {
        ConeSpec::new(r.ball_center, r.ball_radius)
    }
}

impl From<ConeSpec> for ConeRepr {
    fn from(c: ConeSpec) -> Self {
        ConeRepr {
            ball_center: c.ball_center,
            ball_radius: c.ball_radius,
        }
    }
}

impl ConeSpec {
    pub fn new(ball_center: Vec<f64>, ball_radius: f64) -> Result<Self> {
        if !(1..=2).contains(&ball_center.len()) {
            return Err(Error::Argument(
                "cone must live in a hyperplane of dimension 1 or 2".into(),
            ));
        }
        let c = ball_center.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(ball_radius > 0.0 && ball_radius.is_finite()) {
            return Err(Error::Argument("cone ball radius must be positive".into()));
        }
        if !(c > ball_radius) {
            return Err(Error::Argument(
                "the cone's ball must not contain the apex (|center| > radius)".into(),
            ));
        }
        Ok(Self {
            ball_center,
            ball_radius,
        })
    }

    /// The cone of `B_r((r, ..., r))` in dimension `plane_dim`.
    pub fn diagonal(plane_dim: usize, r: f64) -> Result<Self> {
        Self::new(vec![r; plane_dim], r)
    }

    pub fn plane_dim(&self) -> usize {
        self.ball_center.len()
    }

    pub fn ball_center(&self) -> &[f64] {
        &self.ball_center
    }

    pub fn ball_radius(&self) -> f64 {
        self.ball_radius
    }

    /// Distance from the apex to the ball centre.
    pub fn axis_length(&self) -> f64 {
        self.ball_center.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn half_angle(&self) -> f64 {
        (self.ball_radius / self.axis_length()).asin()
    }

    /// Axial position of the circle where the lateral surface touches the ball.
    pub fn tangent_axial(&self) -> f64 {
        let c = self.axis_length();
        (c * c - self.ball_radius * self.ball_radius) / c
    }

    pub fn diameter(&self) -> f64 {
        (self.axis_length() + self.ball_radius).max(2.0 * self.ball_radius)
    }

    /// The cone `λC`; contained in `C` for `λ <= 1`.
    pub fn scaled(&self, factor: f64) -> ConeSpec {
        ConeSpec {
            ball_center: self.ball_center.iter().map(|v| v * factor).collect(),
            ball_radius: self.ball_radius * factor,
        }
    }

    /// Membership in local coordinates: `axial` along the axis, `lateral` the
    /// distance from the axis.
    pub fn contains_local(&self, axial: f64, lateral: f64, tol: f64) -> bool {
        let c = self.axis_length();
        let r = self.ball_radius;
        let dx = axial - c;
        if (dx * dx + lateral * lateral).sqrt() <= r + tol {
            return true;
        }
        if axial < -tol || axial > self.tangent_axial() + tol {
            return false;
        }
        lateral <= axial.max(0.0) * self.half_angle().tan() + tol
    }

    /// Angle of the canonical axis in the in-plane basis (0 for a 1-d plane
    /// with positive centre, π for negative).
    pub(crate) fn canonical_angle(&self) -> f64 {
        match self.ball_center.as_slice() {
            [x] => {
                if *x > 0.0 {
                    0.0
                } else {
                    std::f64::consts::PI
                }
            }
            [x, y] => y.atan2(*x),
            _ => unreachable!("validated in constructor"),
        }
    }
}

/// Unit in-plane axis directions used by the finite rotation search. In a
/// 2-d plane these are `angular_samples` equally spaced angles starting from
/// the canonical axis; in a 1-d plane the two orientations.
pub(crate) fn axis_directions(
    cone: &ConeSpec,
    plane: &Hyperplane,
    dim: usize,
    angular_samples: usize,
) -> Vec<Point> {
    let axes = plane.in_plane_axes(dim);
    let theta0 = cone.canonical_angle();
    match axes.as_slice() {
        [i] => {
            let s = if theta0 == 0.0 { 1.0 } else { -1.0 };
            let mut u = [0.0; 3];
            u[*i] = s;
            let mut v = [0.0; 3];
            v[*i] = -s;
            vec![u, v]
        }
        [i, j] => (0..angular_samples)
            .map(|k| {
                let th = theta0 + 2.0 * std::f64::consts::PI * k as f64 / angular_samples as f64;
                let mut u = [0.0; 3];
                u[*i] = th.cos();
                u[*j] = th.sin();
                u
            })
            .collect(),
        _ => unreachable!("plane of a 2-d or 3-d box"),
    }
}

/// The in-plane unit vector perpendicular to `u` (zero in a 1-d plane).
pub(crate) fn in_plane_normal(u: &Point, plane: &Hyperplane, dim: usize) -> Point {
    let axes = plane.in_plane_axes(dim);
    let mut w = [0.0; 3];
    if let [i, j] = axes.as_slice() {
        w[*i] = -u[*j];
        w[*j] = u[*i];
    }
    w
}

/// Sample offsets (relative to the apex, canonical frame: axial, lateral) of
/// the cone at spacing `step`.
fn local_samples(cone: &ConeSpec, step: f64) -> Vec<(f64, f64)> {
    let c = cone.axis_length();
    let r = cone.ball_radius();
    let mut out = vec![(0.0, 0.0)];
    let reach = c + r;
    let nt = (reach / step).ceil() as usize;
    if cone.plane_dim() == 1 {
        for k in 1..=nt {
            out.push(((k as f64 * step).min(reach), 0.0));
        }
        return out;
    }
    let ns = (r / step).ceil() as isize;
    for k in 0..=nt {
        let t = (k as f64 * step).min(reach);
        for l in -ns..=ns {
            let s = (l as f64 * step).clamp(-r, r);
            if cone.contains_local(t, s.abs(), 0.0) {
                out.push((t, s));
            }
        }
    }
    // ball boundary
    let nc = ((2.0 * std::f64::consts::PI * r / step).ceil() as usize).max(8);
    for k in 0..nc {
        let a = 2.0 * std::f64::consts::PI * k as f64 / nc as f64;
        out.push((c + r * a.cos(), r * a.sin()));
    }
    // lateral surface up to the tangent circle
    let ta = cone.tangent_axial();
    let tan = cone.half_angle().tan();
    let nr = (ta / step).ceil() as usize;
    for k in 1..=nr {
        let t = ta * k as f64 / nr as f64;
        out.push((t, t * tan));
        out.push((t, -t * tan));
    }
    out
}

/// Precomputed placements of a cone over all sampled axis directions.
pub(crate) struct ConeSearch {
    /// Per direction, the 3-d offsets of the cone samples from the apex.
    offsets: Vec<Vec<Point>>,
    pub(crate) tol: f64,
}

impl ConeSearch {
    pub(crate) fn new(
        cone: &ConeSpec,
        plane: &Hyperplane,
        dim: usize,
        angular_samples: usize,
        eps: f64,
    ) -> Self {
        let step = eps.min(cone.diameter() / 8.0);
        let local = local_samples(cone, step);
        let directions = axis_directions(cone, plane, dim, angular_samples);
        let offsets = directions
            .iter()
            .map(|u| {
                let w = in_plane_normal(u, plane, dim);
                local
                    .iter()
                    .map(|&(t, s)| add(&scale(u, t), &scale(&w, s)))
                    .collect()
            })
            .collect();
        ConeSearch {
            offsets,
            tol: step,
        }
    }

    /// Index of the first direction whose cone with apex `x` lies in `target`
    /// up to the search tolerance.
    pub(crate) fn fit_at(&self, x: &Point, target: &CompactSet) -> Option<usize> {
        self.offsets.iter().position(|offs| {
            offs.iter().all(|o| {
                let q = add(x, o);
                target.boxes().iter().any(|b| b.distance(&q) <= self.tol)
            })
        })
    }
}

/// Result of a cone-condition check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum ConeOutcome {
    /// Every sample admits a fitting cone at the sampling resolution.
    Holds,
    /// The first sample, in lexicographic order, without a fitting cone.
    Fails { witness: Point },
}

impl ConeOutcome {
    pub fn holds(&self) -> bool {
        matches!(self, ConeOutcome::Holds)
    }
}

pub(crate) fn validate_search(
    k: &CompactSet,
    cone: &ConeSpec,
    angular_samples: usize,
    eps: f64,
) -> Result<()> {
    if cone.plane_dim() + 1 != k.dim() {
        return Err(Error::Argument(format!(
            "a {}-d cone cannot test a set in dimension {}",
            cone.plane_dim(),
            k.dim()
        )));
    }
    if angular_samples < 8 {
        return Err(Error::Argument("angular_samples must be at least 8".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Argument("sampling spacing must be positive".into()));
    }
    Ok(())
}

/// Checks the cone condition for a coplanar set: every `eps`-sample `x` of
/// `k` must be the apex of a cone congruent to `cone`, with axis among
/// `angular_samples` rotations, contained in `k` (tested on samples of the
/// cone with tolerance `min(eps, diam C / 8)`).
pub fn cone_condition_check(
    k: &CompactSet,
    cone: &ConeSpec,
    angular_samples: usize,
    eps: f64,
) -> Result<ConeOutcome> {
    validate_search(k, cone, angular_samples, eps)?;
    if k.is_empty() {
        return Ok(ConeOutcome::Holds);
    }
    let plane = k
        .common_plane(eps * 1e-6)
        .ok_or_else(|| Error::Domain("cone condition needs a coplanar set".into()))?;
    let search = ConeSearch::new(cone, &plane, k.dim(), angular_samples, eps);
    for x in k.samples(eps) {
        if search.fit_at(&x, k).is_none() {
            return Ok(ConeOutcome::Fails { witness: x });
        }
    }
    Ok(ConeOutcome::Holds)
}

/// Exact membership of `q` in the cone with apex `apex` and unit axis `u`.
pub(crate) fn placed_contains(cone: &ConeSpec, apex: &Point, u: &Point, q: &Point) -> bool {
    let v = sub(q, apex);
    let t = dot(&v, u);
    let lat = norm(&sub(&v, &scale(u, t)));
    cone.contains_local(t, lat, 1e-12)
}
