//! Neumann representation kernel: heights from gradients and the spatial average.
//!
//! For a box `Λ` and `x ∈ Λ`, `G` solves the mean-zero Neumann problem `L_N G = δ_x - 1/|Λ|`
//! on the induced subgraph and `f = ∇G`. Summing once over each undirected edge of `Λ`,
//! `Σ_e f(e)·∇φ(e) = φ(x) - |Λ|⁻¹ Σ_y φ(y)` for every `φ`.

use crate::lattice::{EdgeField, LatticeBox, Point, VertexField};
use crate::linalg::{conjugate_gradient, default_cg_cap, neumann_laplacian, remove_interior_mean};
use crate::observables::ScalingSeries;
use crate::stats::CompensatedSum;
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct RepresentationKernel {
    lattice: LatticeBox,
    center: Point,
    g: VertexField,
    f: EdgeField,
    /// `(base, head, f)` with endpoints as indices into `lattice.interior()`.
    terms: Vec<(usize, usize, f64)>,
    pub sup_norm: f64,
    /// Relative CG residual of the Neumann solve.
    pub residual: f64,
}

impl RepresentationKernel {
    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn center(&self) -> &[i64] {
        &self.center
    }

    /// The mean-zero Neumann Green's function `G`.
    pub fn green(&self) -> &VertexField {
        &self.g
    }

    /// `f = ∇G` on the edges with both endpoints in the box.
    pub fn f(&self) -> &EdgeField {
        &self.f
    }

    pub fn l1_norm(&self) -> f64 {
        self.terms.iter().map(|t| t.2.abs()).sum()
    }

    /// `Σ_e f(e)·∇φ(e)`; `φ` may live on any box whose closure covers this one.
    pub fn apply(&self, phi: &VertexField) -> Result<f64> {
        let offs = phi.lattice().sub_box_offsets(&self.lattice)?;
        let mut s = CompensatedSum::default();
        for &(a, b, w) in &self.terms {
            s.add(w * (phi.at(offs[b]) - phi.at(offs[a])));
        }
        Ok(s.value())
    }

    /// `|φ(x) - avg_Λ φ - Σ_e f(e)·∇φ(e)|`.
    pub fn identity_error(&self, phi: &VertexField) -> Result<f64> {
        let avg = crate::observables::spatial_average(phi, &self.lattice)?;
        Ok((phi.get(&self.center)? - avg - self.apply(phi)?).abs())
    }
}

/// Solves for the kernel of `x` in `lattice` by projected conjugate gradients.
pub fn build_kernel(lattice: &LatticeBox, x: &[i64], tol: f64) -> Result<RepresentationKernel> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    let xo = lattice.interior_offset(x)?;
    let n = lattice.volume() as f64;
    let mut rhs = vec![0.0; lattice.storage_len()];
    for &o in lattice.interior() {
        rhs[o] = -1.0 / n;
    }
    rhs[xo] += 1.0;
    let project = |u: &mut [f64]| remove_interior_mean(lattice, u);
    let (g, report) = conjugate_gradient(
        |u, out| neumann_laplacian(lattice, u, out),
        &rhs,
        None,
        tol,
        default_cg_cap(lattice),
        Some(&project),
    )?;
    let relative = if report.rhs_norm > 0.0 { report.residual / report.rhs_norm } else { 0.0 };
    let g = VertexField::from_storage(lattice, g)?;
    let index: std::collections::HashMap<usize, usize> =
        lattice.interior().iter().enumerate().map(|(k, &o)| (o, k)).collect();
    let mut f = EdgeField::zeros(lattice);
    let mut terms = Vec::new();
    let mut sup: f64 = 0.0;
    for e in lattice.inner_edges() {
        let v = g.gradient_on(e);
        f.set(e, v);
        terms.push((index[&e.base], index[&e.head(lattice)], v));
        sup = sup.max(v.abs());
    }
    Ok(RepresentationKernel { lattice: lattice.clone(), center: x.to_vec(), g, f, terms, sup_norm: sup, residual: relative })
}

/// `sup_e |f(e)|` for the centered kernel of `Λ_ℓ`, per `ℓ`, and whether the last value exceeds
/// twice the one before it.
pub fn sup_norm_study(dim: usize, radii: &[usize], tol: f64) -> Result<(ScalingSeries, bool)> {
    if radii.is_empty() {
        return Err(Error::InvalidInput("empty radius list".into()));
    }
    let mut points = Vec::with_capacity(radii.len());
    for &l in radii {
        let b = LatticeBox::centered(dim, l)?;
        let k = build_kernel(&b, &vec![0; dim], tol)?;
        points.push((l, k.sup_norm, 0.0));
    }
    let grows = points.len() >= 2 && {
        let n = points.len();
        points[n - 1].1 > 2.0 * points[n - 2].1
    };
    Ok((ScalingSeries::new(points)?, grows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_vertex_kernel_is_empty() {
        let b = LatticeBox::centered(2, 0).unwrap();
        let k = build_kernel(&b, &[0, 0], DEFAULT_TOL).unwrap();
        assert_eq!(k.sup_norm, 0.0);
        let phi = VertexField::from_fn(&b, |_| 3.0);
        assert_eq!(k.identity_error(&phi).unwrap(), 0.0);
    }

    #[test]
    fn one_dimensional_three_site_kernel() {
        let b = LatticeBox::centered(1, 1).unwrap();
        let k = build_kernel(&b, &[0], 1e-13).unwrap();
        for (p, want) in [(-1, -1.0 / 9.0), (0, 2.0 / 9.0), (1, -1.0 / 9.0)] {
            assert!((k.green().get(&[p]).unwrap() - want).abs() < 1e-13);
        }
        let left = crate::Edge { base: b.offset_of(&[-1]).unwrap(), axis: 0 };
        let right = crate::Edge { base: b.offset_of(&[0]).unwrap(), axis: 0 };
        assert!((k.f().get(left) - 1.0 / 3.0).abs() < 1e-13);
        assert!((k.f().get(right) + 1.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn identity_on_constants_and_linear_fields() {
        let b = LatticeBox::new(2, &[5, -2], 3).unwrap();
        let k = build_kernel(&b, &[6, -1], DEFAULT_TOL).unwrap();
        let c = VertexField::from_fn(&b, |_| 1.5);
        assert!(k.apply(&c).unwrap().abs() < 1e-15);
        let lin = VertexField::from_fn(&b, |p| 0.3 * p[0] as f64 - 1.1 * p[1] as f64);
        assert!(k.identity_error(&lin).unwrap() < 1e-9);
        let mean: f64 = b.interior().iter().map(|&o| k.green().at(o)).sum();
        assert!(mean.abs() < 1e-12);
    }

    #[test]
    fn centered_kernel_is_reflection_symmetric() {
        let b = LatticeBox::centered(2, 3).unwrap();
        let k = build_kernel(&b, &[0, 0], 1e-12).unwrap();
        for &o in b.interior() {
            let p = b.point_of(o);
            let g = k.green().at(o);
            for q in [vec![-p[0], p[1]], vec![p[0], -p[1]], vec![p[1], p[0]]] {
                assert!((k.green().get(&q).unwrap() - g).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn one_dimensional_sup_norm_closed_form() {
        // the path Green's function gives sup |f| = ℓ/(2ℓ+1)
        let (s, grows) = sup_norm_study(1, &[1, 2, 5, 9], 1e-12).unwrap();
        for p in s.points() {
            let l = p.scale as f64;
            assert!((p.value - l / (2.0 * l + 1.0)).abs() < 1e-9, "{p:?}");
        }
        assert!(!grows);
    }

    #[test]
    fn x_outside_box_rejected() {
        let b = LatticeBox::centered(2, 2).unwrap();
        assert!(build_kernel(&b, &[3, 0], DEFAULT_TOL).is_err());
    }
}
