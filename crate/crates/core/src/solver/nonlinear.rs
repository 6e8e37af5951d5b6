use serde::{Deserialize, Serialize};

use super::sparse::{pattern, pcg_steps, SparseOperator};
use crate::error::{Error, Result};
use crate::geometry::{dot, Point};
use crate::mesh::CrackedMesh;

/// Regularization of `|∇v|` at kinks.
pub const KINK_REGULARIZATION: f64 = 1e-10;

/// Relative size below which energy differences are treated as round-off.
const ROUNDOFF: f64 = 1e-12;

/// Lower bound on the inner conjugate-gradient steps per direction.
const INNER_ITERATIONS: usize = 2000;

/// Backtracking parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LineSearch {
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Step reduction factor.
    pub shrink: f64,
    pub max_backtracks: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        Self {
            armijo: 1e-4,
            shrink: 0.5,
            max_backtracks: 60,
        }
    }
}

/// `Σ_T |T| ((|∇v|² + μ²)^{p/2} - μ^p)/p + Σ_i m_i (|v_i|^p/p - f̄_i v_i)`,
/// the mass and load parts being optional. `fixed` entries get a zero
/// gradient.
pub(crate) struct PEnergy<'a> {
    pub(crate) mesh: &'a CrackedMesh,
    pub(crate) p: f64,
    pub(crate) mass: Option<&'a [f64]>,
    pub(crate) load: Option<&'a [f64]>,
    pub(crate) fixed: Option<&'a [bool]>,
}

impl PEnergy<'_> {
    /// Energy and gradient.
    pub(crate) fn eval(&self, v: &[f64], grad: &mut [f64]) -> f64 {
        let p = self.p;
        let mu2 = KINK_REGULARIZATION * KINK_REGULARIZATION;
        let mu_p = KINK_REGULARIZATION.powf(p);
        let vol = self.mesh.element_volume();
        grad.iter_mut().for_each(|g| *g = 0.0);
        let mut energy = 0.0;
        for e in 0..self.mesh.num_elements() {
            let el = self.mesh.element(e);
            let gphi = self.mesh.gradients(e);
            let g = element_gradient(el, gphi, v);
            let s = dot(&g, &g) + mu2;
            let w = if p == 2.0 { 1.0 } else { s.powf(0.5 * p - 1.0) };
            energy += vol * (s * w - mu_p) / p;
            let c = vol * w;
            for (k, &n) in el.iter().enumerate() {
                grad[n as usize] += c * dot(&g, &gphi[k]);
            }
        }
        if let Some(m) = self.mass {
            for i in 0..v.len() {
                let a = v[i].abs();
                let ap = if p == 2.0 { a * a } else { a.powf(p) };
                energy += m[i] * ap / p;
                let f = self.load.map_or(0.0, |l| l[i]);
                energy -= m[i] * f * v[i];
                let dv = if p == 2.0 {
                    v[i]
                } else if a > 0.0 {
                    ap / v[i]
                } else {
                    0.0
                };
                grad[i] += m[i] * (dv - f);
            }
        }
        if let Some(fx) = self.fixed {
            for i in 0..v.len() {
                if fx[i] {
                    grad[i] = 0.0;
                }
            }
        }
        energy
    }

    /// Hessian of the energy, with `|v|^{p-2}` in the mass part replaced by
    /// `(v² + μ²)^{(p-2)/2}`.
    pub(crate) fn hessian(&self, v: &[f64], h: &mut SparseOperator, sigma: f64) {
        let p = self.p;
        let mu2 = KINK_REGULARIZATION * KINK_REGULARIZATION;
        let model2 = mu2.max(sigma * sigma);
        let vol = self.mesh.element_volume();
        h.clear();
        for e in 0..self.mesh.num_elements() {
            let el = self.mesh.element(e);
            let gphi = self.mesh.gradients(e);
            let g = element_gradient(el, gphi, v);
            let s = dot(&g, &g) + model2;
            let (w, c) = if p == 2.0 {
                (1.0, 0.0)
            } else {
                (s.powf(0.5 * p - 1.0), (p - 2.0) / s)
            };
            let gg: [f64; 4] = std::array::from_fn(|k| if k < el.len() { dot(&g, &gphi[k]) } else { 0.0 });
            h.add_element(el, |a, b| vol * w * (dot(&gphi[a], &gphi[b]) + c * gg[a] * gg[b]));
        }
        if let Some(m) = self.mass {
            for i in 0..v.len() {
                let k = if p == 2.0 {
                    1.0
                } else {
                    (p - 1.0) * (v[i] * v[i] + mu2).powf(0.5 * p - 1.0)
                };
                h.add_diagonal(i, m[i] * k);
            }
        }
    }
}

fn element_gradient(el: &[u32], gphi: &[Point], v: &[f64]) -> Point {
    let mut g = [0.0; 3];
    for (k, &n) in el.iter().enumerate() {
        let x = v[n as usize];
        g[0] += x * gphi[k][0];
        g[1] += x * gphi[k][1];
        g[2] += x * gphi[k][2];
    }
    g
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub(crate) struct MinimizeOutcome {
    pub(crate) iterations: usize,
    pub(crate) residual: f64,
    pub(crate) energy: f64,
}

/// Descent along inexact Newton directions with Armijo backtracking.
///
/// Each direction solves `H d = -g` by Jacobi-preconditioned conjugate
/// gradients to the relative accuracy `min(0.1, sqrt(res))`, where `H` is the
/// Hessian of the regularized energy. The step starts at 1 and is halved
/// until the Armijo condition holds; when energy differences fall to
/// round-off its derivative form `φ'(α) <= (1 - 2δ) |φ'(0)|` is used
/// instead (Hager-Zhang).
///
/// Stops when `sqrt(Σ g_i² / metric_i) <= tol * reference` over free entries.
pub(crate) fn minimize(
    energy: &PEnergy<'_>,
    x: &mut [f64],
    metric: &[f64],
    reference: f64,
    tol: f64,
    max_iter: usize,
    ls: &LineSearch,
) -> Result<MinimizeOutcome> {
    let n = x.len();
    let free = |i: usize| energy.fixed.map_or(true, |f| !f[i]);
    let reference = if reference > 0.0 { reference } else { 1.0 };
    let dual = |g: &[f64]| {
        (0..n)
            .filter(|&i| free(i) && metric[i] > 0.0)
            .map(|i| g[i] * g[i] / metric[i])
            .sum::<f64>()
            .sqrt()
    };
    let mut hess = pattern(energy.mesh);
    let mut g = vec![0.0; n];
    let mut e = energy.eval(x, &mut g);
    let mut res = dual(&g) / reference;
    let mut d = vec![0.0; n];
    let mut rhs = vec![0.0; n];
    let mut xt = vec![0.0; n];
    let mut gt = vec![0.0; n];
    for it in 0..=max_iter {
        if res <= tol {
            return Ok(MinimizeOutcome {
                iterations: it,
                residual: res,
                energy: e,
            });
        }
        if it == max_iter {
            break;
        }
        energy.hessian(x, &mut hess, res.min(1.0));
        for i in 0..n {
            rhs[i] = if free(i) { -g[i] } else { 0.0 };
            d[i] = 0.0;
        }
        let forcing = res.sqrt().min(0.1);
        pcg_steps(&hess, &rhs, &mut d, energy.fixed, forcing, INNER_ITERATIONS.max(n / 4))?;
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        if !(slope < 0.0) {
            break;
        }
        let flat = ROUNDOFF * e.abs().max(f64::MIN_POSITIVE);
        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=ls.max_backtracks {
            for i in 0..n {
                xt[i] = x[i] + alpha * d[i];
            }
            let ea = energy.eval(&xt, &mut gt);
            let sa: f64 = gt.iter().zip(&d).map(|(a, b)| a * b).sum();
            if ea.is_finite()
                && (ea <= e + ls.armijo * alpha * slope
                    || (ea <= e + flat && sa <= (1.0 - 2.0 * ls.armijo) * -slope))
            {
                accepted = Some(ea);
                break;
            }
            alpha *= ls.shrink;
        }
        let Some(ea) = accepted else {
            break;
        };
        x.copy_from_slice(&xt);
        std::mem::swap(&mut gt, &mut g);
        e = ea;
        res = dual(&g) / reference;
    }
    Err(Error::IterationLimit {
        iterations: max_iter,
        residual: res,
        last: x.to_vec(),
    })
}
