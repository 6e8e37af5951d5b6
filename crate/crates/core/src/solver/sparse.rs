use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::dot;
use crate::mesh::CrackedMesh;

/// A symmetric sparse matrix in compressed row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl SparseOperator {
    pub fn dim(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[r.clone()].binary_search(&(j as u32)) {
            Ok(k) => self.vals[r.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn apply(&self, x: &[f64], y: &mut [f64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[k] * x[self.cols[k] as usize];
            }
            *yi = s;
        }
    }

    pub(crate) fn clear(&mut self) {
        self.vals.iter_mut().for_each(|v| *v = 0.0);
    }

    /// Adds the local matrix `m(a, b)` of an element with nodes `el`.
    pub(crate) fn add_element(&mut self, el: &[u32], m: impl Fn(usize, usize) -> f64) {
        for (a, &ia) in el.iter().enumerate() {
            let r = self.row_ptr[ia as usize]..self.row_ptr[ia as usize + 1];
            for (b, &ib) in el.iter().enumerate() {
                let k = r.start + self.cols[r.clone()].binary_search(&ib).expect("pattern");
                self.vals[k] += m(a, b);
            }
        }
    }

    pub(crate) fn add_diagonal(&mut self, i: usize, v: f64) {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        let k = r.start + self.cols[r.clone()].binary_search(&(i as u32)).expect("pattern");
        self.vals[k] += v;
    }

    /// Largest `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                m = m.max((v - self.get(j, i)).abs());
            }
        }
        m
    }
}

/// Node-to-element incidence in compressed form.
pub(crate) fn node_elements(mesh: &CrackedMesh) -> (Vec<usize>, Vec<u32>) {
    let mut ptr = vec![0usize; mesh.num_nodes() + 1];
    for el in mesh.elements() {
        for &n in el {
            ptr[n as usize + 1] += 1;
        }
    }
    for i in 0..mesh.num_nodes() {
        ptr[i + 1] += ptr[i];
    }
    let mut fill = ptr.clone();
    let mut elems = vec![0u32; ptr[mesh.num_nodes()]];
    for (e, el) in mesh.elements().enumerate() {
        for &n in el {
            elems[fill[n as usize]] = e as u32;
            fill[n as usize] += 1;
        }
    }
    (ptr, elems)
}

/// Stiffness matrix `∫ ∇φ_i·∇φ_j`, plus the lumped mass on the diagonal when
/// `with_mass` is set. Contributions are added in element order.
pub fn assemble_operator(mesh: &CrackedMesh, with_mass: bool) -> SparseOperator {
    let mut op = pattern(mesh);
    let vol = mesh.element_volume();
    let lump = vol / (mesh.dim() + 1) as f64;
    for e in 0..mesh.num_elements() {
        let g = mesh.gradients(e);
        op.add_element(mesh.element(e), |a, b| {
            let k = vol * dot(&g[a], &g[b]);
            if with_mass && a == b {
                k + lump
            } else {
                k
            }
        });
    }
    op
}

/// The node-adjacency pattern of `mesh` with zero values.
pub(crate) fn pattern(mesh: &CrackedMesh) -> SparseOperator {
    let n = mesh.num_nodes();
    let (ptr, elems) = node_elements(mesh);
    let mut row_ptr = Vec::with_capacity(n + 1);
    row_ptr.push(0);
    let mut cols: Vec<u32> = Vec::new();
    let mut buf: Vec<u32> = Vec::new();
    for i in 0..n {
        buf.clear();
        for &e in &elems[ptr[i]..ptr[i + 1]] {
            buf.extend_from_slice(mesh.element(e as usize));
        }
        buf.sort_unstable();
        buf.dedup();
        cols.extend_from_slice(&buf);
        row_ptr.push(cols.len());
    }
    let vals = vec![0.0; cols.len()];
    SparseOperator {
        row_ptr,
        cols,
        vals,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CgOutcome {
    pub iterations: usize,
    /// `‖b - Ax‖ / ‖b‖` over the free rows.
    pub residual: f64,
}

/// Jacobi-preconditioned conjugate gradients from the initial guess in `x`.
/// Rows listed in `fixed` keep their initial value.
pub fn pcg(
    a: &SparseOperator,
    b: &[f64],
    x: &mut [f64],
    fixed: Option<&[bool]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let out = pcg_steps(a, b, x, fixed, tol, max_iter)?;
    if out.residual <= tol {
        Ok(out)
    } else {
        Err(Error::IterationLimit {
            iterations: max_iter,
            residual: out.residual,
            last: x.to_vec(),
        })
    }
}

/// Runs at most `max_iter` steps and reports where it stopped.
pub(crate) fn pcg_steps(
    a: &SparseOperator,
    b: &[f64],
    x: &mut [f64],
    fixed: Option<&[bool]>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let n = a.dim();
    let free = |i: usize| fixed.map_or(true, |f| !f[i]);
    let diag = a.diagonal();
    let mut r = vec![0.0; n];
    a.apply(x, &mut r);
    for i in 0..n {
        r[i] = if free(i) { b[i] - r[i] } else { 0.0 };
    }
    let bnorm = (0..n)
        .filter(|&i| free(i))
        .map(|i| b[i] * b[i])
        .sum::<f64>()
        .sqrt();
    let norm = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>().sqrt();
    // with a zero load (e.g. pure Dirichlet data) measure against the
    // initial residual
    let r0 = norm(&r);
    let scale = if bnorm > 0.0 {
        bnorm
    } else if r0 > 0.0 {
        r0
    } else {
        1.0
    };
    let mut res = r0 / scale;
    if res <= tol {
        return Ok(CgOutcome {
            iterations: 0,
            residual: res,
        });
    }
    let precond = |r: &[f64], z: &mut [f64]| {
        for i in 0..n {
            z[i] = if free(i) { r[i] / diag[i] } else { 0.0 };
        }
    };
    let mut z = vec![0.0; n];
    precond(&r, &mut z);
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        a.apply(&p, &mut ap);
        if let Some(f) = fixed {
            for i in 0..n {
                if f[i] {
                    ap[i] = 0.0;
                }
            }
        }
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            return Err(Error::Domain("operator is not positive definite".into()));
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        res = norm(&r) / scale;
        if res <= tol {
            return Ok(CgOutcome {
                iterations: it,
                residual: res,
            });
        }
        precond(&r, &mut z);
        let rz_new: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Ok(CgOutcome {
        iterations: max_iter,
        residual: res,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{AmbientBox, CompactSet};
    use crate::mesh::{build_cracked_mesh, GridSpec};

    #[test]
    fn stiffness_annihilates_constants() {
        let m = build_cracked_mesh(
            &GridSpec::unit(3, 0.25).unwrap(),
            &CompactSet::empty(AmbientBox::unit(3)),
        )
        .unwrap();
        let k = assemble_operator(&m, false);
        let ones = vec![1.0; m.num_nodes()];
        let mut y = vec![0.0; m.num_nodes()];
        k.apply(&ones, &mut y);
        assert!(y.iter().all(|v| v.abs() < 1e-13));
        assert!(k.asymmetry() < 1e-15);
        let km = assemble_operator(&m, true);
        km.apply(&ones, &mut y);
        assert!((y.iter().sum::<f64>() - 1.0).abs() < 1e-13);
    }

    #[test]
    fn pcg_solves_small_system() {
        let m = build_cracked_mesh(
            &GridSpec::unit(2, 0.125).unwrap(),
            &CompactSet::empty(AmbientBox::unit(2)),
        )
        .unwrap();
        let a = assemble_operator(&m, true);
        let xs: Vec<f64> = (0..a.dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut b = vec![0.0; a.dim()];
        a.apply(&xs, &mut b);
        let mut x = vec![0.0; a.dim()];
        let out = pcg(&a, &b, &mut x, None, 1e-12, 1000).unwrap();
        assert!(out.residual <= 1e-12);
        assert!(x.iter().zip(&xs).all(|(a, b)| (a - b).abs() < 1e-9));
        let e = pcg(&a, &b, &mut vec![0.0; a.dim()], None, 1e-12, 2).unwrap_err();
        assert!(e.is_non_convergence());
    }
}
