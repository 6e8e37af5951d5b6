//! Convergence studies along fracture families.
//!
//! An experiment meshes `Ω \ K_n` for each listed `n` and the limit `Ω \ K`
//! on one grid, solves the same Neumann problem on each, and compares every
//! `u_n` with the limit solution `u` (both extended by zero on the fracture).
//! The trend of the errors over `n` gives the verdict.

mod capacity;
mod report;

pub use capacity::{
    run_example1_capacity_contrast, run_point_capacity, CapacityContrast, CapacitySeries,
};
pub use report::{
    emit_report, to_json_string, write_report_csv, write_report_json, REPORT_CSV, REPORT_JSON,
    REPORT_SCHEMA,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{hausdorff_distance, make_family, Aabb, FamilyKind};
use crate::mesh::{build_cracked_mesh, build_mesh_with_voids, GridSpec};
use crate::solver::{
    difference_norm, solve_neumann, NormKind, SolveDiagnostics, SolverConfig, Source,
};

/// Named subregions of the unit cube: for the plate family `S1 = {x_1 <=
/// 1/3}` and `S2 = {x_1 >= 2/3}`; for the others `S1` and `S2` are the
/// halves below and above the midplane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    S1,
    S2,
}

impl Region {
    pub fn bounds(self, family: FamilyKind, dim: usize) -> Aabb {
        let mut lo = [0.0; 3];
        let mut hi = [0.0; 3];
        for d in 0..dim {
            hi[d] = 1.0;
        }
        match (family, self) {
            (FamilyKind::Example2, Region::S1) => hi[0] = 1.0 / 3.0,
            (FamilyKind::Example2, Region::S2) => lo[0] = 2.0 / 3.0,
            (_, Region::S1) => hi[dim - 1] = 0.5,
            (_, Region::S2) => lo[dim - 1] = 0.5,
        }
        Aabb::new(lo, hi)
    }
}

/// Right-hand side of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SourceSpec {
    /// Indicator of a named region.
    Region { name: Region },
    Constant { value: f64 },
    Indicator { lo: Vec<f64>, hi: Vec<f64>, value: f64 },
}

impl SourceSpec {
    pub fn to_source(&self, family: FamilyKind, dim: usize) -> Source {
        match self {
            SourceSpec::Region { name } => Source::indicator(&name.bounds(family, dim), dim),
            SourceSpec::Constant { value } => Source::constant(*value),
            SourceSpec::Indicator { lo, hi, value } => Source::Indicator {
                lo: lo.clone(),
                hi: hi.clone(),
                value: *value,
            },
        }
    }
}

fn default_dim() -> usize {
    3
}

fn default_threshold() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub family: FamilyKind,
    pub indices: Vec<usize>,
    pub p: f64,
    pub h: f64,
    #[serde(default = "default_dim")]
    pub dim: usize,
    pub source: SourceSpec,
    #[serde(default)]
    pub solver: SolverConfig,
    /// Ratio threshold of the decision rule.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    /// Sampling accuracy of the Hausdorff column (default `h/4`).
    #[serde(default)]
    pub hausdorff_eps: Option<f64>,
}

impl ExperimentSpec {
    pub fn new(family: FamilyKind, indices: Vec<usize>, p: f64, h: f64, source: SourceSpec) -> Self {
        Self {
            family,
            indices,
            p,
            h,
            dim: 3,
            source,
            solver: SolverConfig::with_p(p),
            threshold: 0.5,
            hausdorff_eps: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::Argument(format!("p must exceed 1, got {}", self.p)));
        }
        if self.indices.is_empty() || !self.indices.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Argument(
                "indices must be a nonempty strictly increasing list".into(),
            ));
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::Argument("threshold must lie in (0, 1)".into()));
        }
        for &n in &self.indices {
            if n < self.family.min_index() {
                return Err(Error::Argument(format!(
                    "{:?} needs n >= {}, got {n}",
                    self.family,
                    self.family.min_index()
                )));
            }
            let cells = 1.0 / (n as f64 * self.h);
            if (cells - cells.round()).abs() > 1e-9 || cells.round() < 1.0 {
                return Err(Error::Argument(format!(
                    "1/n = 1/{n} is not a multiple of h = {}",
                    self.h
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Stable,
    NonStable,
    Inconclusive,
}

/// Inputs of the decision rule, kept with the verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionRule {
    pub threshold: f64,
    pub initial: f64,
    pub last: f64,
    /// `last / initial` (1 when both vanish).
    pub ratio: f64,
    pub nonincreasing: bool,
    pub count: usize,
}

/// Stable when the errors never increase and the last is at most
/// `threshold` times the first; non-stable when the last is at least
/// `threshold` times the first over at least 4 indices; inconclusive
/// otherwise.
pub fn decide(errors: &[f64], threshold: f64) -> (Verdict, DecisionRule) {
    let initial = errors.first().copied().unwrap_or(0.0);
    let last = errors.last().copied().unwrap_or(0.0);
    let nonincreasing = errors.windows(2).all(|w| w[1] <= w[0]);
    let ratio = if initial > 0.0 {
        last / initial
    } else if last == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    let verdict = if nonincreasing && last <= threshold * initial {
        Verdict::Stable
    } else if last >= threshold * initial && errors.len() >= 4 {
        Verdict::NonStable
    } else {
        Verdict::Inconclusive
    };
    (
        verdict,
        DecisionRule {
            threshold,
            initial,
            last,
            ratio,
            nonincreasing,
            count: errors.len(),
        },
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub n: usize,
    pub hausdorff: f64,
    pub err_lp: f64,
    pub err_grad_lp: f64,
    pub iters: usize,
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitRecord {
    pub nodes: usize,
    pub elements: usize,
    pub components: usize,
    pub max_snap_displacement: f64,
    pub diagnostics: SolveDiagnostics,
    /// `‖u‖_{L^p}` of the limit solution.
    pub norm_lp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub family: FamilyKind,
    pub p: f64,
    pub h: f64,
    pub dim: usize,
    pub rows: Vec<ReportRow>,
    pub verdict: Verdict,
    pub rule: DecisionRule,
    pub limit: LimitRecord,
}

/// Worker threads for independent solves: `FSL_THREADS` if set to a
/// positive integer, else 1.
pub fn thread_budget() -> Result<usize> {
    match std::env::var("FSL_THREADS") {
        Err(_) => Ok(1),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(Error::Argument(format!(
                "FSL_THREADS must be a positive integer, got `{s}`"
            ))),
        },
    }
}

/// Runs `f` over `items` on at most `threads` scoped threads and returns the
/// results in input order.
pub(crate) fn ordered_map<T: Sync, R: Send>(
    items: &[T],
    threads: usize,
    f: impl Fn(&T) -> R + Sync,
) -> Vec<R> {
    if threads <= 1 || items.len() <= 1 {
        return items.iter().map(f).collect();
    }
    let chunk = items.len().div_ceil(threads);
    std::thread::scope(|s| {
        let handles: Vec<_> = items
            .chunks(chunk)
            .map(|c| s.spawn(|| c.iter().map(&f).collect::<Vec<R>>()))
            .collect();
        handles
            .into_iter()
            .flat_map(|h| h.join().expect("worker panicked"))
            .collect()
    })
}

pub fn run_experiment(spec: &ExperimentSpec) -> Result<ConvergenceReport> {
    spec.validate()?;
    let solver = SolverConfig {
        p: spec.p,
        ..spec.solver
    };
    solver.validate()?;
    let dim = spec.dim;
    let grid = GridSpec::unit(dim, spec.h)?;
    let source = spec.source.to_source(spec.family, dim);
    let eps = spec.hausdorff_eps.unwrap_or(spec.h / 4.0);

    let (_, limit) = make_family(spec.family, spec.indices[0], dim)?;
    let limit_mesh = build_mesh_with_voids(&grid, &limit)?;
    let u = solve_neumann(&limit_mesh, &source, &solver)?;
    let limit_record = LimitRecord {
        nodes: limit_mesh.num_nodes(),
        elements: limit_mesh.num_elements(),
        components: limit_mesh.components(),
        max_snap_displacement: limit_mesh.max_snap_displacement(),
        diagnostics: u.diagnostics.clone(),
        norm_lp: crate::solver::field_norm(&limit_mesh, u.field.values(), spec.p, NormKind::Lp),
    };

    let rows = ordered_map(&spec.indices, thread_budget()?, |&n| -> Result<ReportRow> {
        let at = Error::at(n);
        let (k_n, _) = make_family(spec.family, n, dim).map_err(at)?;
        let mesh = build_cracked_mesh(&grid, &k_n).map_err(Error::at(n))?;
        let sol = solve_neumann(&mesh, &source, &solver).map_err(Error::at(n))?;
        let err = |kind| {
            difference_norm(
                (&mesh, sol.field.values()),
                (&limit_mesh, u.field.values()),
                spec.p,
                kind,
            )
            .map_err(Error::at(n))
        };
        Ok(ReportRow {
            n,
            hausdorff: hausdorff_distance(&k_n, &limit, eps).map_err(Error::at(n))?,
            err_lp: err(NormKind::Lp)?,
            err_grad_lp: err(NormKind::GradientLp)?,
            iters: sol.diagnostics.iterations,
            residual: sol.diagnostics.residual,
        })
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    let errors: Vec<f64> = rows.iter().map(|r| r.err_lp).collect();
    let (verdict, rule) = decide(&errors, spec.threshold);
    Ok(ConvergenceReport {
        family: spec.family,
        p: spec.p,
        h: spec.h,
        dim,
        rows,
        verdict,
        rule,
        limit: limit_record,
    })
}
