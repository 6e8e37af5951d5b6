use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::cone::{cone_condition_check, ConeOutcome};
use super::decompose::{congruent_family, PlaneLattice, DEFAULT_ANGULAR_SAMPLES};
use super::{
    hausdorff_distance, lattice_1d, Aabb, CompactSet, ConeSpec, Hyperplane, Parallelepiped, Point,
};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassifyOptions {
    pub angular_samples: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        Self {
            angular_samples: DEFAULT_ANGULAR_SAMPLES,
        }
    }
}

/// Regular and singular lattice samples of a limit set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointClassification {
    pub resolution: f64,
    pub plane: Hyperplane,
    pub regular: Vec<Point>,
    pub singular: Vec<Point>,
}

impl PointClassification {
    pub fn is_singular(&self, p: &Point) -> bool {
        self.singular.iter().any(|q| super::dist(p, q) < 1e-9 * self.resolution)
    }

    pub fn is_regular(&self, p: &Point) -> bool {
        self.regular.iter().any(|q| super::dist(p, q) < 1e-9 * self.resolution)
    }
}

/// `{t : t + P ⊆ b}` for the parallelepiped `P` (vertex at the origin) and an
/// in-plane box `b`, or `None` when `P` does not fit.
fn erosion(b: &Aabb, p: &Parallelepiped, axes: &[usize]) -> Option<Aabb> {
    let bb = p.bbox();
    let mut lo = b.lo;
    let mut hi = b.hi;
    for &a in axes {
        lo[a] = b.lo[a] - bb.lo[a];
        hi[a] = b.hi[a] - bb.hi[a];
        if lo[a] > hi[a] + 1e-12 {
            return None;
        }
        hi[a] = hi[a].max(lo[a]);
    }
    Some(Aabb::new(lo, hi))
}

/// Splits the lattice samples of the limit `K` of a coplanar family into
/// regular and singular points.
///
/// A translate `P' = t + P_k ⊆ K` of a family parallelepiped counts as a
/// limit of parallelepipeds inside the `K_n` when, for the listed indices,
/// the smallest translation `d_n` moving `P'` into one box of `K_n`
/// satisfies `d_n <= 2 d̂(K_n, K) + eps`, and the trend `d_n ≈ α + β/n`
/// fitted on the two largest indices extrapolates to `α <= eps/2`. A sample
/// is regular when it lies in such a `P'` at in-plane depth greater than
/// `eps/2`; the remaining samples are singular.
///
/// `rho` must lie below the threshold `ρ̄` of the parallelepiped family.
pub fn classify_points(
    family: &[(usize, CompactSet)],
    limit: &CompactSet,
    cone: &ConeSpec,
    rho: f64,
    eps: f64,
    opts: &ClassifyOptions,
) -> Result<PointClassification> {
    if family.len() < 2 {
        return Err(Error::Argument(
            "classification needs at least two family members".into(),
        ));
    }
    if !family.windows(2).all(|w| w[0].0 < w[1].0) {
        return Err(Error::Argument("family indices must increase".into()));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Argument("sampling spacing must be positive".into()));
    }
    let dim = limit.dim();
    let mut all = limit.clone();
    for (_, k) in family {
        all = all.union(k)?;
    }
    if limit.is_empty() {
        return Err(Error::Domain("the limit set is empty".into()));
    }
    let plane = all
        .common_plane(eps * 1e-6)
        .ok_or_else(|| Error::Domain("family and limit must share one hyperplane".into()))?;

    for k in std::iter::once(limit).chain(family.iter().map(|(_, k)| k)) {
        if let ConeOutcome::Fails { witness } =
            cone_condition_check(k, cone, opts.angular_samples, eps)?
        {
            return Err(Error::ConeCondition { witness });
        }
    }

    let shapes = congruent_family(cone, &plane, dim, opts.angular_samples);
    let rho_bar = shapes[0].center_to_boundary();
    if !(rho > 0.0) || rho >= rho_bar {
        return Err(Error::Argument(format!(
            "rho must lie in (0, {rho_bar}), got {rho}"
        )));
    }

    let tolerances: Vec<f64> = family
        .iter()
        .map(|(_, k)| Ok(2.0 * hausdorff_distance(k, limit, eps)? + eps))
        .collect::<Result<_>>()?;
    let (n_prev, n_last) = (
        family[family.len() - 2].0 as f64,
        family[family.len() - 1].0 as f64,
    );

    let axes = plane.in_plane_axes(dim);
    let lattice = PlaneLattice::new(limit.ambient(), plane, eps);
    let samples = lattice.occupancy(limit);
    let occupied: HashSet<Vec<i64>> = samples.iter().cloned().collect();
    let mut regular: HashSet<Vec<i64>> = HashSet::new();

    for shape in &shapes {
        let member_erosions: Vec<Vec<Aabb>> = family
            .iter()
            .map(|(_, k)| {
                k.boxes()
                    .iter()
                    .filter_map(|b| erosion(b, shape, &axes))
                    .collect()
            })
            .collect();
        for b in limit.boxes() {
            let Some(t_box) = erosion(b, shape, &axes) else {
                continue;
            };
            for t in translations(&t_box, &axes, eps) {
                let d: Vec<f64> = member_erosions
                    .iter()
                    .map(|es| {
                        es.iter()
                            .map(|e| e.distance(&t))
                            .fold(f64::INFINITY, f64::min)
                    })
                    .collect();
                if d.iter().zip(&tolerances).any(|(d, tol)| d > tol) {
                    continue;
                }
                let (d_prev, d_last) = (d[d.len() - 2], d[d.len() - 1]);
                let alpha = (n_last * d_last - n_prev * d_prev) / (n_last - n_prev);
                if alpha > eps / 2.0 {
                    continue;
                }
                let placed = shape.translated(&t);
                let bb = placed.bbox();
                for idx in lattice.indices_in(&bb.lo, &bb.hi) {
                    if regular.contains(&idx) || !occupied.contains(&idx) {
                        continue;
                    }
                    if placed.depth(&lattice.point(&idx)) > eps / 2.0 {
                        regular.insert(idx);
                    }
                }
            }
        }
    }

    let (reg, sing): (Vec<_>, Vec<_>) = samples.iter().partition(|i| regular.contains(*i));
    Ok(PointClassification {
        resolution: eps,
        plane,
        regular: reg.into_iter().map(|i| lattice.point(i)).collect(),
        singular: sing.into_iter().map(|i| lattice.point(i)).collect(),
    })
}

fn translations(t_box: &Aabb, axes: &[usize], eps: f64) -> Vec<Point> {
    let per_axis: Vec<Vec<f64>> = axes
        .iter()
        .map(|&a| lattice_1d(t_box.lo[a], t_box.hi[a], eps))
        .collect();
    let mut out = Vec::new();
    match per_axis.as_slice() {
        [xs] => {
            for &x in xs {
                let mut p = t_box.lo;
                p[axes[0]] = x;
                out.push(p);
            }
        }
        [xs, ys] => {
            for &x in xs {
                for &y in ys {
                    let mut p = t_box.lo;
                    p[axes[0]] = x;
                    p[axes[1]] = y;
                    out.push(p);
                }
            }
        }
        _ => {}
    }
    out
}
