use super::CompactSet;
use crate::error::{Error, Result};

/// Sample spacing that puts every point of a `k`-dimensional box within `eps`
/// of a lattice sample.
fn covering_step(eps: f64, dim: usize) -> f64 {
    2.0 * eps / (dim as f64).sqrt()
}

/// `sup_{x in a} dist(x, b)` over `eps`-dense samples of `a`. The inner
/// distance is exact, so the result is within `eps` of the true value.
///
/// Follows the empty-set conventions of the Hausdorff metric on `K(Ω̄)`:
/// `sup ∅ = 0` and `dist(x, ∅) = diam Ω`.
pub fn directed_distance(a: &CompactSet, b: &CompactSet, eps: f64) -> Result<f64> {
    check_args(a, b, eps)?;
    if a.is_empty() {
        return Ok(0.0);
    }
    if b.is_empty() {
        return Ok(a.ambient().diameter());
    }
    let step = covering_step(eps, a.dim());
    let mut best = 0.0f64;
    for bx in a.boxes() {
        for p in bx.lattice(a.dim(), step) {
            let d = b.distance(&p).expect("b is nonempty");
            if d > best {
                best = d;
            }
        }
    }
    Ok(best)
}

fn check_args(a: &CompactSet, b: &CompactSet, eps: f64) -> Result<()> {
    if a.ambient() != b.ambient() {
        return Err(Error::Domain(
            "Hausdorff distance between sets in different ambient boxes".into(),
        ));
    }
    if !(eps > 0.0 && eps.is_finite()) {
        return Err(Error::Argument(format!("sampling spacing must be positive, got {eps}")));
    }
    Ok(())
}

/// Sampled Hausdorff distance `d̂(a, b)`, with `|d̂ - d_H(a, b)| <= eps`.
///
/// `d̂(a, a)` is exactly zero and `d̂` is exactly symmetric.
pub fn hausdorff_distance(a: &CompactSet, b: &CompactSet, eps: f64) -> Result<f64> {
    check_args(a, b, eps)?;
    match (a.is_empty(), b.is_empty()) {
        (true, true) => return Ok(0.0),
        (true, false) | (false, true) => return Ok(a.ambient().diameter()),
        _ => {}
    }
    let ab = directed_distance(a, b, eps)?;
    let ba = directed_distance(b, a, eps)?;
    Ok(ab.max(ba))
}
