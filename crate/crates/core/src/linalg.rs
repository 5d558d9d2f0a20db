//! Matrix-free conjugate gradients and the graph Laplacians of a box.
//!
//! Vectors are box storage arrays (see [`LatticeBox::storage_len`]); entries outside the
//! active vertex set are kept at exactly zero so that plain dot products are correct.

use crate::lattice::LatticeBox;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgReport {
    pub iterations: usize,
    /// Final `‖b - Ax‖₂` (true residual, recomputed at exit).
    pub residual: f64,
    pub rhs_norm: f64,
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Conjugate gradients for a symmetric positive (semi)definite operator.
///
/// `project` is applied to the right-hand side, the initial residual and each search
/// direction; pass the mean-removal projection to solve on the mean-zero subspace of a
/// singular operator. Stops when `‖r‖₂ ≤ tol · ‖b‖₂`.
pub fn conjugate_gradient(
    apply: impl Fn(&[f64], &mut [f64]),
    rhs: &[f64],
    x0: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    project: Option<&dyn Fn(&mut [f64])>,
) -> Result<(Vec<f64>, CgReport)> {
    let n = rhs.len();
    let mut b = rhs.to_vec();
    if let Some(p) = project {
        p(&mut b);
    }
    let rhs_norm = dot(&b, &b).sqrt();
    let mut x = x0.map_or_else(|| vec![0.0; n], <[f64]>::to_vec);
    if let Some(p) = project {
        p(&mut x);
    }
    let mut ax = vec![0.0; n];
    apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
    if let Some(p) = project {
        p(&mut r);
    }
    let target = tol * rhs_norm;
    let mut rr = dot(&r, &r);
    if rr.sqrt() <= target || rhs_norm == 0.0 {
        return Ok((x, CgReport { iterations: 0, residual: rr.sqrt(), rhs_norm }));
    }
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    for it in 1..=max_iter {
        apply(&p, &mut ap);
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Unstable(format!("CG breakdown: pᵀAp = {pap:e} at iteration {it}")));
        }
        let alpha = rr / pap;
        axpy(alpha, &p, &mut x);
        axpy(-alpha, &ap, &mut r);
        if let Some(proj) = project {
            proj(&mut r);
        }
        let rr_new = dot(&r, &r);
        if rr_new.sqrt() <= target {
            // confirm with the true residual to guard against drift in the recurrence
            apply(&x, &mut ax);
            let mut true_r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            if let Some(proj) = project {
                proj(&mut true_r);
            }
            let res = dot(&true_r, &true_r).sqrt();
            if res <= target {
                return Ok((x, CgReport { iterations: it, residual: res, rhs_norm }));
            }
            r = true_r;
            rr = res * res;
            p.copy_from_slice(&r);
            continue;
        }
        let beta = rr_new / rr;
        rr = rr_new;
        for (pi, ri) in p.iter_mut().zip(&r) {
            *pi = ri + beta * *pi;
        }
    }
    Err(Error::NoConvergence {
        method: "conjugate gradient",
        iterations: max_iter,
        residual: rr.sqrt(),
        target,
    })
}

/// Default iteration cap: generous multiple of the `O(L)` iteration count of a Laplacian solve.
pub fn default_cg_cap(lattice: &LatticeBox) -> usize {
    200 * (lattice.radius() + 2) * lattice.dim() + 1000
}

/// `(A u)(x) = Σ_{y∼x} (u(x) - u(y))` on `Λ` with `u = 0` on `∂Λ` (Dirichlet Laplacian).
pub fn dirichlet_laplacian(lattice: &LatticeBox, u: &[f64], out: &mut [f64]) {
    let d = lattice.dim();
    let strides = lattice.strides();
    let diag = 2.0 * d as f64;
    for &x in lattice.interior() {
        let mut s = diag * u[x];
        for &st in strides {
            s -= u[x + st] + u[x - st];
        }
        out[x] = s;
    }
}

/// Weighted Dirichlet operator `Σ_{y∼x} a(x,y) (u(x) - u(y))`; `weights[x*d + axis]` is the
/// weight of the edge `{x, x + e_axis}`.
pub fn weighted_dirichlet_laplacian(lattice: &LatticeBox, weights: &[f64], u: &[f64], out: &mut [f64]) {
    let d = lattice.dim();
    let strides = lattice.strides();
    for &x in lattice.interior() {
        let ux = u[x];
        let mut s = 0.0;
        for (axis, &st) in strides.iter().enumerate() {
            let up = weights[x * d + axis];
            let down = weights[(x - st) * d + axis];
            s += up * (ux - u[x + st]) + down * (ux - u[x - st]);
        }
        out[x] = s;
    }
}

/// Neumann Laplacian of the induced subgraph on `Λ`: only edges with both ends in `Λ`.
pub fn neumann_laplacian(lattice: &LatticeBox, u: &[f64], out: &mut [f64]) {
    let strides = lattice.strides();
    for &x in lattice.interior() {
        let ux = u[x];
        let mut s = 0.0;
        for &st in strides {
            if lattice.is_interior(x + st) {
                s += ux - u[x + st];
            }
            if lattice.is_interior(x - st) {
                s += ux - u[x - st];
            }
        }
        out[x] = s;
    }
}

/// Removes the mean over `Λ` (interior entries only).
pub fn remove_interior_mean(lattice: &LatticeBox, u: &mut [f64]) {
    let mean = lattice.interior().iter().map(|&x| u[x]).sum::<f64>() / lattice.volume() as f64;
    for &x in lattice.interior() {
        u[x] -= mean;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_dirichlet_solve() {
        let b = LatticeBox::centered(1, 0).unwrap();
        let mut rhs = vec![0.0; b.storage_len()];
        rhs[b.interior()[0]] = 2.0;
        let (x, rep) =
            conjugate_gradient(|u, o| dirichlet_laplacian(&b, u, o), &rhs, None, 1e-12, 10, None).unwrap();
        assert!((x[b.interior()[0]] - 1.0).abs() < 1e-14);
        assert!(rep.iterations <= 1);
    }

    #[test]
    fn recovers_known_solution() {
        let b = LatticeBox::centered(3, 4).unwrap();
        let mut xi = vec![0.0; b.storage_len()];
        for (k, &o) in b.interior().iter().enumerate() {
            xi[o] = ((k * 37 % 11) as f64 - 5.0) / 3.0;
        }
        let mut rhs = vec![0.0; b.storage_len()];
        dirichlet_laplacian(&b, &xi, &mut rhs);
        let (x, _) = conjugate_gradient(|u, o| dirichlet_laplacian(&b, u, o), &rhs, None, 1e-13, 10_000, None)
            .unwrap();
        let err = b.interior().iter().map(|&o| (x[o] - xi[o]).abs()).fold(0.0, f64::max);
        assert!(err < 1e-10, "{err}");
    }

    #[test]
    fn cap_exceeded_is_reported() {
        let b = LatticeBox::centered(2, 6).unwrap();
        let mut rhs = vec![0.0; b.storage_len()];
        rhs[b.offset_of(&[0, 0]).unwrap()] = 1.0;
        let r = conjugate_gradient(|u, o| dirichlet_laplacian(&b, u, o), &rhs, None, 1e-14, 2, None);
        assert!(matches!(r, Err(Error::NoConvergence { .. })));
    }
}
