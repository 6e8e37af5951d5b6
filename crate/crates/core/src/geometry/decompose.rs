use std::collections::{BTreeMap, HashSet};

use serde::{Deserialize, Serialize};

use super::cone::{axis_directions, cone_condition_check, validate_search, ConeOutcome};
use super::parallelepiped::inscribed;
use super::{AmbientBox, CompactSet, ConeSpec, Hyperplane, Parallelepiped, Point, GEOM_TOL};
use crate::error::{Error, Result};

pub(crate) const DEFAULT_ANGULAR_SAMPLES: usize = 64;

/// One piece `K_i = ∪_{x ∈ A_i} (x + P_i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionPiece {
    /// `P_i`, with a vertex at the origin.
    pub parallelepiped: Parallelepiped,
    /// Index of `P_i` in the congruence family.
    pub orientation: usize,
    /// The discrete set `A_i`.
    pub anchors: Vec<Point>,
}

impl DecompositionPiece {
    pub fn contains(&self, q: &Point, tol: f64) -> bool {
        self.anchors
            .iter()
            .any(|a| self.parallelepiped.translated(a).contains(q, tol))
    }

    pub fn anchor_diameter(&self) -> f64 {
        let mut d = 0.0f64;
        for (i, a) in self.anchors.iter().enumerate() {
            for b in &self.anchors[i + 1..] {
                d = d.max(super::dist(a, b));
            }
        }
        d
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecompositionResult {
    pub pieces: Vec<DecompositionPiece>,
    /// The congruent family `P_1, ..., P_m` (one per sampled orientation).
    pub family: Vec<Parallelepiped>,
    pub rho: f64,
    pub rho_bar: f64,
    pub eps: f64,
}

impl DecompositionResult {
    pub fn contains(&self, q: &Point, tol: f64) -> bool {
        self.pieces.iter().any(|p| p.contains(q, tol))
    }
}

/// The lattice `lo + eps * Z^{N-1}` of the plane, clipped to the ambient box.
pub(crate) struct PlaneLattice {
    pub(crate) axes: Vec<usize>,
    pub(crate) origin: Point,
    pub(crate) eps: f64,
    pub(crate) counts: Vec<i64>,
}

impl PlaneLattice {
    pub(crate) fn new(ambient: &AmbientBox, plane: Hyperplane, eps: f64) -> Self {
        let axes = plane.in_plane_axes(ambient.dim());
        let mut origin = *ambient.lo();
        origin[plane.axis] = plane.offset;
        let counts = axes
            .iter()
            .map(|&a| ((ambient.hi()[a] - ambient.lo()[a]) / eps + 1e-9).floor() as i64)
            .collect();
        PlaneLattice {
            axes,
            origin,
            eps,
            counts,
        }
    }

    pub(crate) fn point(&self, idx: &[i64]) -> Point {
        let mut p = self.origin;
        for (k, &a) in self.axes.iter().enumerate() {
            p[a] += idx[k] as f64 * self.eps;
        }
        p
    }

    /// Every lattice index, lexicographic.
    pub(crate) fn indices(&self) -> Vec<Vec<i64>> {
        match self.counts.as_slice() {
            [n] => (0..=*n).map(|i| vec![i]).collect(),
            [n, m] => (0..=*n)
                .flat_map(|i| (0..=*m).map(move |j| vec![i, j]))
                .collect(),
            _ => vec![],
        }
    }

    /// Lattice indices inside the axis-aligned bounding box `[lo, hi]`.
    pub(crate) fn indices_in(&self, lo: &Point, hi: &Point) -> Vec<Vec<i64>> {
        let ranges: Vec<(i64, i64)> = self
            .axes
            .iter()
            .enumerate()
            .map(|(k, &a)| {
                let l = ((lo[a] - self.origin[a]) / self.eps - 1e-9).ceil().max(0.0) as i64;
                let h = ((hi[a] - self.origin[a]) / self.eps + 1e-9)
                    .floor()
                    .min(self.counts[k] as f64) as i64;
                (l, h)
            })
            .collect();
        match ranges.as_slice() {
            [(l, h)] => (*l..=*h).map(|i| vec![i]).collect(),
            [(l1, h1), (l2, h2)] => (*l1..=*h1)
                .flat_map(|i| (*l2..=*h2).map(move |j| vec![i, j]))
                .collect(),
            _ => vec![],
        }
    }

    /// Indices of lattice points lying in `k`.
    pub(crate) fn occupancy(&self, k: &CompactSet) -> Vec<Vec<i64>> {
        self.indices()
            .into_iter()
            .filter(|i| k.contains(&self.point(i), GEOM_TOL))
            .collect()
    }
}

/// `x + P ⊆ K` at lattice resolution: the vertices lie in `K`, and so does
/// every lattice point inside `x + P`.
pub(crate) fn fits_in(
    p: &Parallelepiped,
    k: &CompactSet,
    lattice: &PlaneLattice,
    occupied: &HashSet<Vec<i64>>,
) -> bool {
    if !p.vertices().iter().all(|v| k.contains(v, 1e-9)) {
        return false;
    }
    let bb = p.bbox();
    lattice
        .indices_in(&bb.lo, &bb.hi)
        .into_iter()
        .filter(|i| p.contains(&lattice.point(i), 1e-12))
        .all(|i| occupied.contains(&i))
}

pub(crate) fn congruent_family(
    cone: &ConeSpec,
    plane: &Hyperplane,
    dim: usize,
    angular_samples: usize,
) -> Vec<Parallelepiped> {
    axis_directions(cone, plane, dim, angular_samples)
        .iter()
        .map(|u| inscribed(cone, plane, dim, &[0.0; 3], u))
        .collect()
}

/// Splits a coplanar set satisfying the cone condition into pieces
/// `K_i = ∪_{x ∈ A_i} (x + P_i)`, with the `P_i` congruent parallelepipeds
/// inscribed in the sampled rotations of `cone` and `diam A_i <= rho`.
///
/// Work happens on the lattice of spacing `eps`: every lattice point of `K`
/// becomes an anchor, assigned to the first orientation whose translate fits
/// in `K`; anchors are then grouped per orientation into cells of diameter
/// `rho`. The union of the pieces reproduces the lattice occupancy of `K`.
pub fn gagliardo_decompose(
    k: &CompactSet,
    cone: &ConeSpec,
    rho: f64,
    eps: f64,
) -> Result<DecompositionResult> {
    validate_search(k, cone, DEFAULT_ANGULAR_SAMPLES, eps)?;
    let dim = k.dim();
    let plane = if k.is_empty() {
        Hyperplane {
            axis: dim - 1,
            offset: 0.0,
        }
    } else {
        k.common_plane(eps * 1e-6)
            .ok_or_else(|| Error::Domain("decomposition needs a coplanar set".into()))?
    };
    let family = congruent_family(cone, &plane, dim, DEFAULT_ANGULAR_SAMPLES);
    let rho_bar = family[0].center_to_boundary();
    if !(rho > 0.0) || rho >= rho_bar {
        return Err(Error::Argument(format!(
            "rho must lie in (0, {rho_bar}), got {rho}"
        )));
    }
    if k.is_empty() {
        return Ok(DecompositionResult {
            pieces: vec![],
            family,
            rho,
            rho_bar,
            eps,
        });
    }
    if let ConeOutcome::Fails { witness } =
        cone_condition_check(k, cone, DEFAULT_ANGULAR_SAMPLES, eps)?
    {
        return Err(Error::ConeCondition { witness });
    }

    let lattice = PlaneLattice::new(k.ambient(), plane, eps);
    let occ = lattice.occupancy(k);
    let occupied: HashSet<Vec<i64>> = occ.iter().cloned().collect();
    let cell = rho / ((dim - 1) as f64).sqrt();

    let mut groups: BTreeMap<(usize, Vec<i64>), Vec<Point>> = BTreeMap::new();
    for idx in &occ {
        let x = lattice.point(idx);
        let orientation = family
            .iter()
            .position(|p| fits_in(&p.translated(&x), k, &lattice, &occupied))
            .ok_or_else(|| {
                Error::Domain(format!(
                    "no parallelepiped of the family fits at {:?}",
                    &x[..dim]
                ))
            })?;
        let key: Vec<i64> = lattice
            .axes
            .iter()
            .map(|&a| ((x[a] - lattice.origin[a]) / cell).floor() as i64)
            .collect();
        groups.entry((orientation, key)).or_default().push(x);
    }
    let pieces = groups
        .into_iter()
        .map(|((orientation, _), anchors)| DecompositionPiece {
            parallelepiped: family[orientation].clone(),
            orientation,
            anchors,
        })
        .collect();
    Ok(DecompositionResult {
        pieces,
        family,
        rho,
        rho_bar,
        eps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Aabb;

    fn set(boxes: Vec<Aabb>) -> CompactSet {
        CompactSet::new(AmbientBox::unit(3), boxes).unwrap()
    }

    #[test]
    fn empty_set_has_no_pieces() {
        let c = ConeSpec::diagonal(2, 1.0 / 16.0).unwrap();
        let r = gagliardo_decompose(&set(vec![]), &c, 0.01, 1.0 / 64.0).unwrap();
        assert!(r.pieces.is_empty());
    }

    #[test]
    fn rho_above_threshold_is_rejected() {
        let c = ConeSpec::diagonal(2, 1.0 / 16.0).unwrap();
        let k = set(vec![Aabb::new([0.0, 0.0, 0.5], [0.25, 0.25, 0.5])]);
        let e = gagliardo_decompose(&k, &c, 1.0 / 16.0, 1.0 / 64.0).unwrap_err();
        assert_eq!(e.kind(), "argument");
    }

    #[test]
    fn failing_cone_condition_carries_witness() {
        let c = ConeSpec::diagonal(2, 1.0 / 16.0).unwrap();
        let k = set(vec![
            Aabb::new([0.0, 0.0, 0.5], [0.25, 0.25, 0.5]),
            Aabb::new([0.75, 0.75, 0.5], [0.75, 0.75, 0.5]),
        ]);
        match gagliardo_decompose(&k, &c, 0.005, 1.0 / 64.0).unwrap_err() {
            Error::ConeCondition { witness } => assert_eq!(witness, [0.75, 0.75, 0.5]),
            e => panic!("unexpected {e}"),
        }
    }
}
