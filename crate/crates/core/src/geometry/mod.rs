//! Compact fracture sets and the geometric conditions placed on them.
//!
//! Every set is a finite union of closed axis-aligned boxes living in an
//! ambient box `Ω`. A box that is degenerate along exactly one axis is a
//! facet, i.e. a piece of an `(N-1)`-dimensional fracture. Points are stored
//! as `[f64; 3]`; in dimension 2 the third coordinate is always zero.

mod ccond;
mod classify;
mod cone;
mod decompose;
mod family;
mod hausdorff;
mod parallelepiped;

pub use ccond::{c_condition_check, CConditionClause, CConditionOutcome, CConditionReport};
pub use classify::{classify_points, ClassifyOptions, PointClassification};
pub use cone::{cone_condition_check, ConeOutcome, ConeSpec};
pub use decompose::{gagliardo_decompose, DecompositionPiece, DecompositionResult};
pub use family::{make_family, FamilyKind};
pub use hausdorff::{directed_distance, hausdorff_distance};
pub use parallelepiped::{Parallelepiped, PlanarChart};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Point = [f64; 3];

/// Tolerance used for exact-arithmetic style membership tests on box unions.
pub(crate) const GEOM_TOL: f64 = 1e-12;

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn add(a: &Point, b: &Point) -> Point {
    [a[0] + b[0], a[1] + b[1], a[2] + b[2]]
}

pub(crate) fn scale(a: &Point, s: f64) -> Point {
    [a[0] * s, a[1] * s, a[2] * s]
}

pub(crate) fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn norm(a: &Point) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn dist(a: &Point, b: &Point) -> f64 {
    norm(&sub(a, b))
}

/// `m + 1` points from `lo` to `hi` with spacing at most `max_step`. Both
/// endpoints are reproduced exactly.
pub(crate) fn lattice_1d(lo: f64, hi: f64, max_step: f64) -> Vec<f64> {
    let len = hi - lo;
    if len <= 0.0 {
        return vec![lo];
    }
    let m = ((len / max_step) - 1e-9).ceil().max(1.0) as usize;
    (0..=m)
        .map(|i| {
            if i == m {
                hi
            } else {
                lo + len * (i as f64 / m as f64)
            }
        })
        .collect()
}

/// The ambient open box `Ω`, dimension 2 or 3.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AmbientRepr", into = "AmbientRepr")]
pub struct AmbientBox {
    dim: usize,
    lo: Point,
    hi: Point,
}

impl AmbientBox {
    pub fn new(dim: usize, lo: &[f64], hi: &[f64]) -> Result<Self> {
        if !(dim == 2 || dim == 3) {
            return Err(Error::Argument(format!("dimension must be 2 or 3, got {dim}")));
        }
        if lo.len() != dim || hi.len() != dim {
            return Err(Error::Argument(format!(
                "ambient corners must have {dim} coordinates"
            )));
        }
        let mut l = [0.0; 3];
        let mut h = [0.0; 3];
        for d in 0..dim {
            if !(lo[d].is_finite() && hi[d].is_finite() && lo[d] < hi[d]) {
                return Err(Error::Argument(format!(
                    "ambient box needs lo < hi on axis {d}"
                )));
            }
            l[d] = lo[d];
            h[d] = hi[d];
        }
        Ok(Self { dim, lo: l, hi: h })
    }

    /// The open unit cube `Q = ]0,1[^dim`.
    pub fn unit(dim: usize) -> Self {
        Self::new(dim, &vec![0.0; dim], &vec![1.0; dim]).expect("unit cube is valid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn lo(&self) -> &Point {
        &self.lo
    }

    pub fn hi(&self) -> &Point {
        &self.hi
    }

    pub fn diameter(&self) -> f64 {
        dist(&self.lo, &self.hi)
    }

    pub fn volume(&self) -> f64 {
        (0..self.dim).map(|d| self.hi[d] - self.lo[d]).product()
    }

    pub fn closure(&self) -> Aabb {
        Aabb {
            lo: self.lo,
            hi: self.hi,
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct AmbientRepr {
    dim: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

impl TryFrom<AmbientRepr> for AmbientBox {
    type Error = Error;
    fn try_from(r: AmbientRepr) -> Result<Self> {
        AmbientBox::new(r.dim, &r.lo, &r.hi)
    }
}

impl From<AmbientBox> for AmbientRepr {
    fn from(a: AmbientBox) -> Self {
        AmbientRepr {
            dim: a.dim,
            lo: a.lo[..a.dim].to_vec(),
            hi: a.hi[..a.dim].to_vec(),
        }
    }
}

/// A closed axis-aligned box `[lo, hi]`, possibly degenerate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub lo: Point,
    pub hi: Point,
}

impl Aabb {
    pub fn new(lo: Point, hi: Point) -> Self {
        Self { lo, hi }
    }

    /// Euclidean distance from `p` to the box (zero inside).
    pub fn distance(&self, p: &Point) -> f64 {
        let mut s = 0.0;
        for d in 0..3 {
            let c = p[d].clamp(self.lo[d], self.hi[d]);
            let e = p[d] - c;
            s += e * e;
        }
        s.sqrt()
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        (0..3).all(|d| p[d] >= self.lo[d] - tol && p[d] <= self.hi[d] + tol)
    }

    pub fn extent(&self, axis: usize) -> f64 {
        self.hi[axis] - self.lo[axis]
    }

    /// Axes (below `dim`) along which the box has zero extent.
    pub fn degenerate_axes(&self, dim: usize) -> Vec<usize> {
        (0..dim).filter(|&d| self.extent(d) <= 0.0).collect()
    }

    /// The normal axis if the box is a facet (degenerate along exactly one axis).
    pub fn facet_axis(&self, dim: usize) -> Option<usize> {
        match self.degenerate_axes(dim).as_slice() {
            [a] => Some(*a),
            _ => None,
        }
    }

    pub fn is_solid(&self, dim: usize) -> bool {
        self.degenerate_axes(dim).is_empty()
    }

    /// Lattice samples covering the box: every point of the box lies within
    /// `step * sqrt(k) / 2` of a sample, `k` the number of non-degenerate axes.
    pub fn lattice(&self, dim: usize, step: f64) -> Vec<Point> {
        let axes: Vec<Vec<f64>> = (0..3)
            .map(|d| {
                if d < dim {
                    lattice_1d(self.lo[d], self.hi[d], step)
                } else {
                    vec![0.0]
                }
            })
            .collect();
        let mut out = Vec::with_capacity(axes[0].len() * axes[1].len() * axes[2].len());
        for &x in &axes[0] {
            for &y in &axes[1] {
                for &z in &axes[2] {
                    out.push([x, y, z]);
                }
            }
        }
        out
    }

    /// True when the box meets the open ball `B_r(p)`.
    pub fn meets_open_ball(&self, p: &Point, r: f64) -> bool {
        self.distance(p) < r
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxRepr {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

/// A compact subset of the closed ambient box: a finite union of closed boxes.
/// The empty list is the empty set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CompactSetRepr", into = "CompactSetRepr")]
pub struct CompactSet {
    ambient: AmbientBox,
    boxes: Vec<Aabb>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CompactSetRepr {
    ambient: AmbientBox,
    boxes: Vec<BoxRepr>,
}

impl TryFrom<CompactSetRepr> for CompactSet {
    type Error = Error;
    fn try_from(r: CompactSetRepr) -> Result<Self> {
        let dim = r.ambient.dim();
        let mut set = CompactSet::empty(r.ambient);
        for b in r.boxes {
            if b.lo.len() != dim || b.hi.len() != dim {
                return Err(Error::Argument(format!(
                    "box corners must have {dim} coordinates"
                )));
            }
            let mut lo = [0.0; 3];
            let mut hi = [0.0; 3];
            lo[..dim].copy_from_slice(&b.lo);
            hi[..dim].copy_from_slice(&b.hi);
            set.push(Aabb::new(lo, hi))?;
        }
        Ok(set)
    }
}

impl From<CompactSet> for CompactSetRepr {
    fn from(s: CompactSet) -> Self {
        let dim = s.ambient.dim();
        CompactSetRepr {
            ambient: s.ambient,
            boxes: s
                .boxes
                .iter()
                .map(|b| BoxRepr {
                    lo: b.lo[..dim].to_vec(),
                    hi: b.hi[..dim].to_vec(),
                })
                .collect(),
        }
    }
}

impl CompactSet {
    pub fn empty(ambient: AmbientBox) -> Self {
        Self {
            ambient,
            boxes: Vec::new(),
        }
    }

    pub fn new(ambient: AmbientBox, boxes: Vec<Aabb>) -> Result<Self> {
        let mut set = Self::empty(ambient);
        for b in boxes {
            set.push(b)?;
        }
        Ok(set)
    }

    /// Adds a box; it must satisfy `lo <= hi` and lie in the closed ambient box.
    pub fn push(&mut self, b: Aabb) -> Result<()> {
        let dim = self.ambient.dim();
        let amb = self.ambient.closure();
        for d in 0..3 {
            if !(b.lo[d].is_finite() && b.hi[d].is_finite()) || b.lo[d] > b.hi[d] {
                return Err(Error::Argument(format!("box with lo > hi on axis {d}")));
            }
            if d >= dim && (b.lo[d] != 0.0 || b.hi[d] != 0.0) {
                return Err(Error::Argument(format!(
                    "box has a nonzero coordinate beyond dimension {dim}"
                )));
            }
        }
        if !(amb.contains(&b.lo, 1e-12) && amb.contains(&b.hi, 1e-12)) {
            return Err(Error::Domain(format!(
                "box {:?}..{:?} leaves the closed ambient box",
                &b.lo[..dim],
                &b.hi[..dim]
            )));
        }
        self.boxes.push(b);
        Ok(())
    }

    pub fn ambient(&self) -> &AmbientBox {
        &self.ambient
    }

    pub fn dim(&self) -> usize {
        self.ambient.dim()
    }

    pub fn boxes(&self) -> &[Aabb] {
        &self.boxes
    }

    pub fn is_empty(&self) -> bool {
        self.boxes.is_empty()
    }

    /// Distance from `p` to the set; `None` for the empty set.
    pub fn distance(&self, p: &Point) -> Option<f64> {
        self.boxes
            .iter()
            .map(|b| b.distance(p))
            .min_by(|a, b| a.total_cmp(b))
    }

    pub fn contains(&self, p: &Point, tol: f64) -> bool {
        self.boxes.iter().any(|b| b.contains(p, tol))
    }

    /// Lattice samples of every box, sorted lexicographically and deduplicated.
    pub fn samples(&self, step: f64) -> Vec<Point> {
        let mut pts: Vec<Point> = self
            .boxes
            .iter()
            .flat_map(|b| b.lattice(self.dim(), step))
            .collect();
        sort_lex(&mut pts);
        pts
    }

    /// The axis-aligned hyperplane containing every box, if there is one.
    /// Among several candidates (e.g. for a single segment) the lowest axis wins.
    pub fn common_plane(&self, tol: f64) -> Option<Hyperplane> {
        let first = self.boxes.first()?;
        (0..self.dim()).find_map(|axis| {
            let c = first.lo[axis];
            self.boxes
                .iter()
                .all(|b| (b.lo[axis] - c).abs() <= tol && (b.hi[axis] - c).abs() <= tol)
                .then_some(Hyperplane { axis, offset: c })
        })
    }

    /// Same set with all boxes restricted to those lying in `plane`.
    pub fn restricted_to(&self, plane: &Hyperplane, tol: f64) -> CompactSet {
        CompactSet {
            ambient: self.ambient,
            boxes: self
                .boxes
                .iter()
                .filter(|b| plane.contains_box(b, tol))
                .copied()
                .collect(),
        }
    }

    pub fn union(&self, other: &CompactSet) -> Result<CompactSet> {
        if self.ambient != other.ambient {
            return Err(Error::Domain("union of sets in different ambient boxes".into()));
        }
        let mut boxes = self.boxes.clone();
        boxes.extend_from_slice(&other.boxes);
        Ok(CompactSet {
            ambient: self.ambient,
            boxes,
        })
    }
}

pub(crate) fn sort_lex(pts: &mut Vec<Point>) {
    pts.sort_by(|a, b| {
        a[0].total_cmp(&b[0])
            .then(a[1].total_cmp(&b[1]))
            .then(a[2].total_cmp(&b[2]))
    });
    pts.dedup();
}

/// An axis-aligned hyperplane `{x : x[axis] = offset}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Hyperplane {
    pub axis: usize,
    pub offset: f64,
}

impl Hyperplane {
    pub fn contains_box(&self, b: &Aabb, tol: f64) -> bool {
        (b.lo[self.axis] - self.offset).abs() <= tol && (b.hi[self.axis] - self.offset).abs() <= tol
    }

    /// In-plane axes in increasing order.
    pub fn in_plane_axes(&self, dim: usize) -> Vec<usize> {
        (0..dim).filter(|&d| d != self.axis).collect()
    }

    /// Reflection of `p` through the plane.
    pub fn reflect(&self, p: &Point) -> Point {
        let mut q = *p;
        q[self.axis] = 2.0 * self.offset - p[self.axis];
        q
    }

    pub fn signed_distance(&self, p: &Point) -> f64 {
        p[self.axis] - self.offset
    }
}
