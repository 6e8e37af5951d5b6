use serde::Serialize;

use super::nonlinear::{minimize, PEnergy};
use super::{assemble_operator, field_norm, lumped_mass, pcg, NormKind, SolverConfig};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, CompactSet};
use crate::mesh::{build_cracked_mesh, CrackedMesh, GridSpec};

/// Discrete estimate of `c_p(E, Ω) = inf { ∫ |∇u|^p : u = 0 on ∂Ω, u >= 1
/// near E }` for one tube radius.
#[derive(Debug, Clone, Serialize)]
pub struct CapacityEstimate {
    pub p: f64,
    pub tube_radius: f64,
    pub h: f64,
    pub value: f64,
    /// Nodes held at 1.
    pub tube_nodes: usize,
    pub iterations: usize,
    #[serde(skip)]
    pub minimizer: Vec<f64>,
    #[serde(skip)]
    pub mesh: Option<CrackedMesh>,
}

/// Minimizes `∫ |∇u|^p` over P1 fields on the uncracked grid of spacing `h`
/// with `u = 0` at boundary nodes and `u = 1` at the interior vertices of
/// every grid cell closer than `r` to `set`. Where the tube reaches `∂Ω` the
/// boundary value wins.
///
/// The tube of a refined grid lies inside the tube of the coarse one, so on
/// nested grids the estimate does not increase under refinement.
pub fn estimate_p_capacity(
    set: &CompactSet,
    p: f64,
    r: f64,
    h: f64,
    config: &SolverConfig,
) -> Result<CapacityEstimate> {
    let config = SolverConfig { p, ..*config };
    config.validate()?;
    if !(r > h) {
        return Err(Error::Resolution(format!(
            "tube radius {r} must exceed the mesh spacing {h}"
        )));
    }
    let grid = GridSpec::new(*set.ambient(), h)?;
    let mesh = build_cracked_mesh(&grid, &CompactSet::empty(*set.ambient()))?;
    let n = mesh.num_nodes();
    let amb = set.ambient();
    let dim = mesh.dim();
    let mut in_tube = vec![false; n];
    let cells = grid.cells();
    let corners = 1usize << dim;
    for c in 0..grid.num_cells() {
        let ijk = [c % cells[0], c / cells[0] % cells[1], c / (cells[0] * cells[1])];
        let mut cell = Aabb::new([0.0; 3], [0.0; 3]);
        for d in 0..dim {
            cell.lo[d] = amb.lo()[d] + ijk[d] as f64 * h;
            cell.hi[d] = cell.lo[d] + h;
        }
        if !set.boxes().iter().any(|b| box_gap(b, &cell, dim) < r) {
            continue;
        }
        for m in 0..corners {
            let v: [usize; 3] = std::array::from_fn(|d| ijk[d] + (m >> d & 1));
            in_tube[grid.vertex_index(v)] = true;
        }
    }
    let mut fixed = vec![false; n];
    let mut u = vec![0.0; n];
    let mut tube_nodes = 0;
    for i in 0..n {
        let x = mesh.node(i);
        let on_boundary = (0..dim).any(|d| x[d] == amb.lo()[d] || x[d] == amb.hi()[d]);
        if on_boundary {
            fixed[i] = true;
        } else if in_tube[mesh.node_vertex(i)] {
            fixed[i] = true;
            u[i] = 1.0;
            tube_nodes += 1;
        }
    }
    if tube_nodes == 0 {
        return Ok(CapacityEstimate {
            p,
            tube_radius: r,
            h,
            value: 0.0,
            tube_nodes,
            iterations: 0,
            minimizer: u,
            mesh: Some(mesh),
        });
    }
    let iterations = if p == 2.0 {
        let a = assemble_operator(&mesh, false);
        let b = vec![0.0; n];
        pcg(&a, &b, &mut u, Some(&fixed), config.cg_tol, config.max_iter)?.iterations
    } else {
        let mass = lumped_mass(&mesh);
        let energy = PEnergy {
            mesh: &mesh,
            p,
            mass: None,
            load: None,
            fixed: Some(&fixed),
        };
        let mut g = vec![0.0; n];
        energy.eval(&u, &mut g);
        let reference = g
            .iter()
            .zip(&mass)
            .map(|(g, m)| g * g / m)
            .sum::<f64>()
            .sqrt();
        minimize(
            &energy,
            &mut u,
            &mass,
            reference,
            config.nonlinear_tol,
            config.max_iter,
            &config.line_search,
        )?
        .iterations
    };
    let value = field_norm(&mesh, &u, p, NormKind::GradientLp).powf(p);
    Ok(CapacityEstimate {
        p,
        tube_radius: r,
        h,
        value,
        tube_nodes,
        iterations,
        minimizer: u,
        mesh: Some(mesh),
    })
}

fn box_gap(a: &Aabb, b: &Aabb, dim: usize) -> f64 {
    (0..dim)
        .map(|d| (a.lo[d] - b.hi[d]).max(b.lo[d] - a.hi[d]).max(0.0).powi(2))
        .sum::<f64>()
        .sqrt()
}
