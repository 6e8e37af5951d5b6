use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::cone::{validate_search, ConeSearch};
use super::{CompactSet, ConeSpec, Point};
use crate::error::{Error, Result};

/// Angular resolution used by the C-condition cone search.
const CCOND_ANGULAR_SAMPLES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CConditionClause {
    /// `B_δ(x) ∩ K_n` is not contained in a single hyperplane.
    B,
    /// No cone congruent to `C` with apex at `x` fits in the flattened set.
    C,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum CConditionOutcome {
    HoldsUpTo { n_max: usize },
    Violation {
        n: usize,
        x: Point,
        clause: CConditionClause,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CConditionReport {
    pub outcome: CConditionOutcome,
    /// Factor applied to the cone so that `diam C < δ/8` (1 when no reduction
    /// was needed).
    pub cone_scale: f64,
    pub checked: Vec<usize>,
}

impl CConditionReport {
    pub fn holds(&self) -> bool {
        matches!(self.outcome, CConditionOutcome::HoldsUpTo { .. })
    }
}

/// Checks the C-condition with isometric charts `Φ_x(z) = z - x` on a finite
/// part of a family `(n, K_n)`.
///
/// For every `eps`-sample `x` of every member, in lexicographic order:
/// clause (b) asks that the boxes meeting `B_δ(x)` share one hyperplane (up
/// to `eps`); clause (c) asks that a cone congruent to `C` with apex `x` fits
/// in the part of `K_n` lying in that hyperplane. If `diam C >= δ/8` the cone
/// is first scaled down until the standing restriction `diam C < δ/8`
/// holds. `λC ⊆ C` for `λ <= 1`, so a set that passes with `C` also passes
/// with the scaled cone.
pub fn c_condition_check(
    family: &[(usize, CompactSet)],
    cone: &ConeSpec,
    delta: f64,
    eps: f64,
) -> Result<CConditionReport> {
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::Argument("delta must be positive".into()));
    }
    let cone_scale = if cone.diameter() < delta / 8.0 {
        1.0
    } else {
        0.99 * delta / 8.0 / cone.diameter()
    };
    let cone = cone.scaled(cone_scale);
    let mut checked = Vec::with_capacity(family.len());
    for (n, k) in family {
        validate_search(k, &cone, CCOND_ANGULAR_SAMPLES, eps)?;
        let dim = k.dim();
        if let Some(b) = k.boxes().iter().find(|b| b.facet_axis(dim).is_none()) {
            return Err(Error::Domain(format!(
                "n = {n}: box {:?}..{:?} is not a planar facet",
                &b.lo[..dim],
                &b.hi[..dim]
            )));
        }
        let mut searches: HashMap<usize, ConeSearch> = HashMap::new();
        for x in k.samples(eps) {
            let near: Vec<_> = k
                .boxes()
                .iter()
                .filter(|b| b.meets_open_ball(&x, delta))
                .copied()
                .collect();
            let local = CompactSet::new(*k.ambient(), near)?;
            let Some(plane) = local.common_plane(eps) else {
                return Ok(CConditionReport {
                    outcome: CConditionOutcome::Violation {
                        n: *n,
                        x,
                        clause: CConditionClause::B,
                    },
                    cone_scale,
                    checked,
                });
            };
            let search = searches.entry(plane.axis).or_insert_with(|| {
                ConeSearch::new(&cone, &plane, dim, CCOND_ANGULAR_SAMPLES, eps)
            });
            if search.fit_at(&x, &local).is_none() {
                return Ok(CConditionReport {
                    outcome: CConditionOutcome::Violation {
                        n: *n,
                        x,
                        clause: CConditionClause::C,
                    },
                    cone_scale,
                    checked,
                });
            }
        }
        checked.push(*n);
    }
    let n_max = family.iter().map(|(n, _)| *n).max().unwrap_or(0);
    Ok(CConditionReport {
        outcome: CConditionOutcome::HoldsUpTo { n_max },
        cone_scale,
        checked,
    })
}
