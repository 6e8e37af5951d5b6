//! P1 finite elements for `-Δ_p u + |u|^{p-2} u = f` with natural boundary
//! conditions on cracked meshes, plus norms, capacities, and recovery
//! sequences.
//!
//! The mass matrix is lumped at the vertices, and the source is integrated
//! element by element at centroids before lumping, so a node on one side of
//! a crack only sees the source on its own side. With this choice `f ≡ c`
//! gives `u ≡ c^{1/(p-1)}` exactly.

mod capacity;
mod nonlinear;
mod recovery;
mod sparse;

pub use capacity::{estimate_p_capacity, CapacityEstimate};
pub use nonlinear::{LineSearch, KINK_REGULARIZATION};
pub use recovery::build_recovery_sequence;
pub use sparse::{assemble_operator, pcg, CgOutcome, SparseOperator};

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::Aabb;
use crate::mesh::CrackedMesh;
use nonlinear::{minimize, PEnergy};
use sparse::pcg_steps;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Conjugate gradients for `p = 2`, energy minimization otherwise.
    #[default]
    Auto,
    ConjugateGradient,
    Minimization,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    pub p: f64,
    /// Relative residual tolerance of the linear solver.
    pub cg_tol: f64,
    pub max_iter: usize,
    /// Relative tolerance on the energy gradient, measured in the dual norm
    /// of the lumped mass against the load.
    pub nonlinear_tol: f64,
    pub line_search: LineSearch,
    pub method: Method,
    /// Seed for randomized probes.
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            p: 2.0,
            cg_tol: 1e-10,
            max_iter: 20_000,
            nonlinear_tol: 1e-7,
            line_search: LineSearch::default(),
            method: Method::Auto,
            seed: 0,
        }
    }
}

impl SolverConfig {
    pub fn with_p(p: f64) -> Self {
        Self {
            p,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0 && self.p.is_finite()) {
            return Err(Error::Argument(format!("p must exceed 1, got {}", self.p)));
        }
        if !(self.cg_tol > 0.0 && self.nonlinear_tol > 0.0) {
            return Err(Error::Argument("tolerances must be positive".into()));
        }
        let ls = &self.line_search;
        if !(ls.armijo > 0.0 && ls.armijo < 1.0 && ls.shrink > 0.0 && ls.shrink < 1.0) {
            return Err(Error::Argument("line search constants must lie in (0, 1)".into()));
        }
        if self.method == Method::ConjugateGradient && self.p != 2.0 {
            return Err(Error::Argument("conjugate gradients need p = 2".into()));
        }
        Ok(())
    }
}

/// Right-hand side `f`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Source {
    Constant { value: f64 },
    /// `value` on the closed box `[lo, hi]`, zero elsewhere.
    Indicator { lo: Vec<f64>, hi: Vec<f64>, value: f64 },
    /// Nodal values, used directly as the lumped source.
    Nodal { values: Vec<f64> },
}

impl Source {
    pub fn constant(value: f64) -> Self {
        Source::Constant { value }
    }

    pub fn indicator(b: &Aabb, dim: usize) -> Self {
        Source::Indicator {
            lo: b.lo[..dim].to_vec(),
            hi: b.hi[..dim].to_vec(),
            value: 1.0,
        }
    }

    /// The lumped source `f̄_i = (Σ_{T ∋ i} |T|/(N+1) f(x_T)) / m_i`.
    pub(crate) fn lumped(&self, mesh: &CrackedMesh, mass: &[f64]) -> Result<Vec<f64>> {
        let dim = mesh.dim();
        match self {
            Source::Constant { value } => {
                if !value.is_finite() {
                    return Err(Error::Argument("source must be finite".into()));
                }
                Ok(vec![*value; mesh.num_nodes()])
            }
            Source::Nodal { values } => {
                if values.len() != mesh.num_nodes() || values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::Argument(format!(
                        "nodal source needs {} finite values",
                        mesh.num_nodes()
                    )));
                }
                Ok(values.clone())
            }
            Source::Indicator { lo, hi, value } => {
                if lo.len() != dim || hi.len() != dim || !value.is_finite() {
                    return Err(Error::Argument(format!(
                        "indicator box needs {dim} coordinates per corner"
                    )));
                }
                let mut b = Aabb::new([0.0; 3], [0.0; 3]);
                b.lo[..dim].copy_from_slice(lo);
                b.hi[..dim].copy_from_slice(hi);
                let share = mesh.element_volume() / (dim + 1) as f64;
                let mut load = vec![0.0; mesh.num_nodes()];
                for e in 0..mesh.num_elements() {
                    if b.contains(&mesh.centroid(e), 0.0) {
                        for &n in mesh.element(e) {
                            load[n as usize] += share * value;
                        }
                    }
                }
                Ok(load.iter().zip(mass).map(|(l, m)| l / m).collect())
            }
        }
    }
}

/// Lumped mass `m_i = Σ_{T ∋ i} |T| / (N + 1)`.
pub fn lumped_mass(mesh: &CrackedMesh) -> Vec<f64> {
    let share = mesh.element_volume() / (mesh.dim() + 1) as f64;
    let mut m = vec![0.0; mesh.num_nodes()];
    for el in mesh.elements() {
        for &n in el {
            m[n as usize] += share;
        }
    }
    m
}

/// One value per node of a mesh; copies of a duplicated node are independent.
#[derive(Debug, Clone)]
pub struct NodalField<'m> {
    mesh: &'m CrackedMesh,
    values: Vec<f64>,
}

impl<'m> NodalField<'m> {
    pub fn new(mesh: &'m CrackedMesh, values: Vec<f64>) -> Result<Self> {
        if values.len() != mesh.num_nodes() {
            return Err(Error::Argument(format!(
                "field has {} values for {} nodes",
                values.len(),
                mesh.num_nodes()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Argument("field values must be finite".into()));
        }
        Ok(Self { mesh, values })
    }

    pub fn zeros(mesh: &'m CrackedMesh) -> Self {
        Self {
            mesh,
            values: vec![0.0; mesh.num_nodes()],
        }
    }

    pub fn from_fn(mesh: &'m CrackedMesh, f: impl Fn(usize) -> f64) -> Result<Self> {
        Self::new(mesh, (0..mesh.num_nodes()).map(f).collect())
    }

    pub fn mesh(&self) -> &'m CrackedMesh {
        self.mesh
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    /// CSV with columns `node,x,y,z,value`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "node,x,y,z,value")?;
        for (i, v) in self.values.iter().enumerate() {
            let p = self.mesh.node(i);
            writeln!(w, "{i},{:.16e},{:.16e},{:.16e},{v:.16e}", p[0], p[1], p[2])?;
        }
        Ok(())
    }

    pub fn write_vtk<W: Write>(&self, w: &mut W, name: &str) -> Result<()> {
        self.mesh.write_vtk(w, &[(name, &self.values)])
    }
}

/// Parses the CSV written by [`NodalField::write_csv`] back into values.
pub fn parse_field_csv(text: &str) -> Result<Vec<f64>> {
    let mut lines = text.lines();
    if lines.next() != Some("node,x,y,z,value") {
        return Err(Error::Parse("missing field CSV header".into()));
    }
    lines
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(i, l)| {
            let cols: Vec<&str> = l.split(',').collect();
            if cols.len() != 5 || cols[0].parse::<usize>().ok() != Some(i) {
                return Err(Error::Parse(format!("bad field CSV row {}", i + 2)));
            }
            cols[4]
                .parse()
                .map_err(|e| Error::Parse(format!("row {}: {e}", i + 2)))
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveDiagnostics {
    pub method: Method,
    pub p: f64,
    pub iterations: usize,
    /// Final relative residual (linear) or relative gradient norm.
    pub residual: f64,
    /// Energy of the returned field.
    pub energy: f64,
}

#[derive(Debug, Clone)]
pub struct Solution<'m> {
    pub field: NodalField<'m>,
    pub diagnostics: SolveDiagnostics,
}

/// Discrete energy and its gradient with respect to the nodal values.
pub fn energy_and_gradient(
    mesh: &CrackedMesh,
    v: &[f64],
    f: &Source,
    p: f64,
) -> Result<(f64, Vec<f64>)> {
    if !(p > 1.0 && p.is_finite()) {
        return Err(Error::Argument(format!("p must exceed 1, got {p}")));
    }
    if v.len() != mesh.num_nodes() {
        return Err(Error::Argument("field length does not match the mesh".into()));
    }
    let mass = lumped_mass(mesh);
    let load = f.lumped(mesh, &mass)?;
    let energy = PEnergy {
        mesh,
        p,
        mass: Some(&mass),
        load: Some(&load),
        fixed: None,
    };
    let mut g = vec![0.0; v.len()];
    let e = energy.eval(v, &mut g);
    Ok((e, g))
}

/// Solves the Neumann problem `-Δ_p u + |u|^{p-2} u = f` on the mesh.
///
/// For `p = 2` the linear system (stiffness plus lumped mass) is solved by
/// Jacobi-preconditioned conjugate gradients from the lumped source.
/// Otherwise the convex energy is minimized by inexact Newton steps with
/// Armijo backtracking, starting from a rough solution of the `p = 2`
/// problem.
pub fn solve_neumann<'m>(
    mesh: &'m CrackedMesh,
    f: &Source,
    config: &SolverConfig,
) -> Result<Solution<'m>> {
    config.validate()?;
    let p = config.p;
    let mass = lumped_mass(mesh);
    let load = f.lumped(mesh, &mass)?;
    let energy = PEnergy {
        mesh,
        p,
        mass: Some(&mass),
        load: Some(&load),
        fixed: None,
    };
    let linear = match config.method {
        Method::Auto => p == 2.0,
        Method::ConjugateGradient => true,
        Method::Minimization => false,
    };
    let mut u = load.clone();
    let a = assemble_operator(mesh, true);
    let b: Vec<f64> = load.iter().zip(&mass).map(|(f, m)| f * m).collect();
    if !linear {
        // the linear solution is a cheap, smooth starting point
        pcg_steps(&a, &b, &mut u, None, 1e-6, config.max_iter)?;
    }
    let (method, iterations, residual) = if linear {
        let out = pcg(&a, &b, &mut u, None, config.cg_tol, config.max_iter)?;
        (Method::ConjugateGradient, out.iterations, out.residual)
    } else {
        let reference = load
            .iter()
            .zip(&mass)
            .map(|(f, m)| m * f * f)
            .sum::<f64>()
            .sqrt();
        let out = minimize(
            &energy,
            &mut u,
            &mass,
            reference,
            config.nonlinear_tol,
            config.max_iter,
            &config.line_search,
        )?;
        (Method::Minimization, out.iterations, out.residual)
    };
    let mut g = vec![0.0; u.len()];
    let e = energy.eval(&u, &mut g);
    Ok(Solution {
        field: NodalField::new(mesh, u)?,
        diagnostics: SolveDiagnostics {
            method,
            p,
            iterations,
            residual,
            energy: e,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NormKind {
    /// `‖v‖_{L^p(Ω)}` with vertex quadrature.
    Lp,
    /// `‖∇v‖_{L^p(Ω)}`, exact for P1 fields.
    GradientLp,
}

fn element_contribution(
    mesh: &CrackedMesh,
    e: usize,
    values: &[f64],
    other: Option<(&CrackedMesh, usize, &[f64])>,
    p: f64,
    kind: NormKind,
) -> f64 {
    let vol = mesh.element_volume();
    let el = mesh.element(e);
    let other_val = |k: usize| other.map_or(0.0, |(m, oe, ov)| ov[m.element(oe)[k] as usize]);
    match kind {
        NormKind::Lp => {
            let s: f64 = (0..el.len())
                .map(|k| (values[el[k] as usize] - other_val(k)).abs().powf(p))
                .sum();
            vol / el.len() as f64 * s
        }
        NormKind::GradientLp => {
            let g = mesh.gradients(e);
            let mut d = [0.0; 3];
            for k in 0..el.len() {
                let x = values[el[k] as usize] - other_val(k);
                for a in 0..3 {
                    d[a] += x * g[k][a];
                }
            }
            vol * (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt().powf(p)
        }
    }
}

/// `L^p` norm of a field or of its gradient over `Ω`. The crack has no
/// volume and voids contribute zero.
pub fn field_norm(mesh: &CrackedMesh, v: &[f64], p: f64, kind: NormKind) -> f64 {
    let s: f64 = (0..mesh.num_elements())
        .map(|e| element_contribution(mesh, e, v, None, p, kind))
        .sum();
    s.powf(1.0 / p)
}

/// Norm of `a - b` for fields on two meshes over the same grid. Each field
/// is extended by zero where its mesh has no element; elements are matched
/// through their grid slot, so the values compared at a vertex come from the
/// copy on the element's own side.
pub fn difference_norm(
    a: (&CrackedMesh, &[f64]),
    b: (&CrackedMesh, &[f64]),
    p: f64,
    kind: NormKind,
) -> Result<f64> {
    let (ma, va) = a;
    let (mb, vb) = b;
    if ma.grid() != mb.grid() {
        return Err(Error::Domain("fields live on different grids".into()));
    }
    if va.len() != ma.num_nodes() || vb.len() != mb.num_nodes() {
        return Err(Error::Argument("field length does not match the mesh".into()));
    }
    let slots_b = slot_index(mb);
    let mut seen = vec![false; mb.num_elements()];
    let mut s = 0.0;
    for e in 0..ma.num_elements() {
        let other = slots_b[ma.element_slot(e)];
        let other = (other != u32::MAX).then(|| {
            seen[other as usize] = true;
            (mb, other as usize, vb)
        });
        s += element_contribution(ma, e, va, other, p, kind);
    }
    for (e, seen) in seen.iter().enumerate() {
        if !seen {
            s += element_contribution(mb, e, vb, None, p, kind);
        }
    }
    Ok(s.powf(1.0 / p))
}

/// Element index per grid slot (`u32::MAX` where the mesh has none).
pub(crate) fn slot_index(mesh: &CrackedMesh) -> Vec<u32> {
    let g = mesh.grid();
    let mut idx = vec![u32::MAX; g.num_cells() * g.simplices_per_cell()];
    for e in 0..mesh.num_elements() {
        idx[mesh.element_slot(e)] = e as u32;
    }
    idx
}
