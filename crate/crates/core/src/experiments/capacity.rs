use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, AmbientBox, CompactSet};
use crate::solver::{estimate_p_capacity, SolverConfig};

/// Capacity estimates of one set for one `p` over decreasing tube radii.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacitySeries {
    pub p: f64,
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub iterations: Vec<usize>,
    /// `c(r_min) / c(r_max)`; 1 for a single radius.
    pub ratio: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CapacityContrast {
    pub h: f64,
    pub series: Vec<CapacitySeries>,
    /// Ratio separating `p <= 2` from `p > 2`, if one has been calibrated.
    pub threshold: Option<f64>,
    /// Every `p <= 2` ratio lies below the threshold and every `p > 2` ratio
    /// above it, with both groups present.
    pub contrast: bool,
}

impl CapacityContrast {
    pub fn ratio(&self, p: f64) -> Option<f64> {
        self.series.iter().find(|s| s.p == p).map(|s| s.ratio)
    }
}

fn check_radii(radii: &[f64], h: f64) -> Result<()> {
    if radii.is_empty() || !radii.windows(2).all(|w| w[0] > w[1]) {
        return Err(Error::Argument(
            "radii must be a nonempty strictly decreasing list".into(),
        ));
    }
    if let Some(r) = radii.iter().find(|&&r| !(r > h)) {
        return Err(Error::Resolution(format!(
            "tube radius {r} must exceed the mesh spacing {h}"
        )));
    }
    Ok(())
}

fn series(set: &CompactSet, p: f64, radii: &[f64], h: f64, config: &SolverConfig) -> Result<CapacitySeries> {
    let mut values = Vec::with_capacity(radii.len());
    let mut iterations = Vec::with_capacity(radii.len());
    for &r in radii {
        let c = estimate_p_capacity(set, p, r, h, config)?;
        values.push(c.value);
        iterations.push(c.iterations);
    }
    let first = values[0];
    let last = values[values.len() - 1];
    let ratio = if radii.len() == 1 {
        1.0
    } else if first > 0.0 {
        last / first
    } else {
        f64::NAN
    };
    Ok(CapacitySeries {
        p,
        radii: radii.to_vec(),
        values,
        iterations,
        ratio,
    })
}

/// The vertical line `{1/2} × [0,1] × {1/2}` of the unit cube: the part of
/// the midplane that the slits of the first family leave open.
pub fn slit_line() -> CompactSet {
    CompactSet::new(
        AmbientBox::unit(3),
        vec![Aabb::new([0.5, 0.0, 0.5], [0.5, 1.0, 0.5])],
    )
    .expect("valid line")
}

/// Capacity of the slit line for each `p` over the given radii.
pub fn run_example1_capacity_contrast(
    h: f64,
    radii: &[f64],
    p_list: &[f64],
    threshold: Option<f64>,
    config: &SolverConfig,
) -> Result<CapacityContrast> {
    check_radii(radii, h)?;
    let line = slit_line();
    let series = p_list
        .iter()
        .map(|&p| series(&line, p, radii, h, config))
        .collect::<Result<Vec<_>>>()?;
    let contrast = threshold.is_some_and(|t| {
        let (low, high): (Vec<_>, Vec<_>) = series.iter().partition(|s| s.p <= 2.0);
        !low.is_empty()
            && !high.is_empty()
            && low.iter().all(|s| s.ratio < t)
            && high.iter().all(|s| s.ratio > t)
    });
    Ok(CapacityContrast {
        h,
        series,
        threshold,
        contrast,
    })
}

/// Capacity of the centre of the unit square for one `p`.
pub fn run_point_capacity(h: f64, radii: &[f64], p: f64, config: &SolverConfig) -> Result<CapacitySeries> {
    check_radii(radii, h)?;
    let point = CompactSet::new(
        AmbientBox::unit(2),
        vec![Aabb::new([0.5, 0.5, 0.0], [0.5, 0.5, 0.0])],
    )?;
    series(&point, p, radii, h, config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_radius_is_degenerate() {
        let c = run_example1_capacity_contrast(0.125, &[0.3], &[2.0, 3.0], Some(0.5), &SolverConfig::default())
            .unwrap();
        assert_eq!(c.ratio(2.0), Some(1.0));
        assert_eq!(c.ratio(3.0), Some(1.0));
        assert!(!c.contrast);
    }

    #[test]
    fn radii_are_validated() {
        let cfg = SolverConfig::default();
        let e = run_example1_capacity_contrast(0.125, &[0.2, 0.3], &[2.0], None, &cfg).unwrap_err();
        assert_eq!(e.kind(), "argument");
        let e = run_point_capacity(0.125, &[0.3, 0.1], 2.0, &cfg).unwrap_err();
        assert_eq!(e.kind(), "resolution");
    }

    #[test]
    fn point_estimates_decay() {
        let s = run_point_capacity(1.0 / 32.0, &[0.25, 0.125, 0.0625], 2.0, &SolverConfig::default()).unwrap();
        assert!(s.values.windows(2).all(|w| w[1] < w[0]));
        assert!(s.ratio < 1.0);
    }
}
