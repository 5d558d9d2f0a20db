//! Exact formulas for the quadratic potential `V(t) = t²/2`.
//!
//! With `V` quadratic the Gibbs measure on a box is Gaussian with covariance `A⁻¹` and mean
//! `λA⁻¹η` (plus the harmonic extension of the boundary data), where `A` is the Dirichlet graph
//! Laplacian. Every quantity below is obtained from matrix-free CG solves against point
//! sources; `A⁻¹` is never formed.

use crate::lattice::{LatticeBox, VertexField};
use crate::linalg::{conjugate_gradient, default_cg_cap, dirichlet_laplacian, dot};
use crate::potential::Potential;
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

/// The Dirichlet Laplacian `A` of a box acting on interior fields.
#[derive(Clone, Debug)]
pub struct DirichletOperator {
    lattice: LatticeBox,
    tol: f64,
}

impl DirichletOperator {
    pub fn new(lattice: &LatticeBox) -> Self {
        Self { lattice: lattice.clone(), tol: DEFAULT_TOL }
    }

    pub fn with_tol(mut self, tol: f64) -> Self {
        self.tol = tol;
        self
    }

    pub fn lattice(&self) -> &LatticeBox {
        &self.lattice
    }

    pub fn apply(&self, u: &VertexField) -> Result<VertexField> {
        self.check(u)?;
        let mut masked = u.values().to_vec();
        for &o in self.lattice.boundary() {
            masked[o] = 0.0;
        }
        let mut out = vec![0.0; masked.len()];
        dirichlet_laplacian(&self.lattice, &masked, &mut out);
        VertexField::from_storage(&self.lattice, out)
    }

    /// `A⁻¹ rhs` using only the interior values of `rhs`.
    pub fn solve(&self, rhs: &VertexField) -> Result<VertexField> {
        self.check(rhs)?;
        let mut b = rhs.values().to_vec();
        for &o in self.lattice.boundary() {
            b[o] = 0.0;
        }
        let (x, _) = conjugate_gradient(
            |u, o| dirichlet_laplacian(&self.lattice, u, o),
            &b,
            None,
            self.tol,
            default_cg_cap(&self.lattice),
            None,
        )?;
        VertexField::from_storage(&self.lattice, x)
    }

    /// Column `A⁻¹ δ_x`.
    pub fn green_column(&self, x: &[i64]) -> Result<VertexField> {
        let off = self.lattice.interior_offset(x)?;
        let mut rhs = VertexField::zeros(&self.lattice);
        rhs.values_mut()[off] = 1.0;
        self.solve(&rhs)
    }

    /// `(A⁻¹)(x, x)`: thermal variance of `φ(x)` for the quadratic potential.
    pub fn green_diagonal(&self, x: &[i64]) -> Result<f64> {
        let col = self.green_column(x)?;
        col.get(x)
    }

    /// Mean `λ A⁻¹ η` of the zero-boundary Gaussian measure.
    pub fn mean_field(&self, eta: &VertexField, lambda: f64) -> Result<VertexField> {
        Ok(self.solve(eta)?.scaled(lambda))
    }

    /// Discrete harmonic extension of boundary data `ψ` (values on `∂Λ`), equal to `ψ` there.
    pub fn harmonic_extension(&self, psi: &VertexField) -> Result<VertexField> {
        self.check(psi)?;
        let lat = &self.lattice;
        let mut rhs = VertexField::zeros(lat);
        for &x in lat.interior() {
            let mut s = 0.0;
            for &st in lat.strides() {
                for y in [x + st, x - st] {
                    if !lat.is_interior(y) {
                        s += psi.at(y);
                    }
                }
            }
            rhs.values_mut()[x] = s;
        }
        let mut h = self.solve(&rhs)?;
        for &o in lat.boundary() {
            h.values_mut()[o] = psi.at(o);
        }
        Ok(h)
    }

    /// Mean of the Gaussian measure with boundary data `ψ`: `λA⁻¹η + harmonic extension`.
    pub fn mean_with_boundary(&self, eta: &VertexField, lambda: f64, psi: &VertexField) -> Result<VertexField> {
        let m = self.mean_field(eta, lambda)?;
        let h = self.harmonic_extension(psi)?;
        let values = m.values().iter().zip(h.values()).map(|(a, b)| a + b).collect();
        VertexField::from_storage(&self.lattice, values)
    }

    fn check(&self, f: &VertexField) -> Result<()> {
        if f.lattice() != &self.lattice {
            return Err(Error::InvalidInput(format!(
                "field on {} given to operator on {}",
                f.lattice(),
                self.lattice
            )));
        }
        Ok(())
    }
}

/// `A⁻¹ rhs` with residual `≤ tol · ‖rhs‖`.
pub fn solve_dirichlet(lattice: &LatticeBox, rhs: &VertexField, tol: f64) -> Result<VertexField> {
    DirichletOperator::new(lattice).with_tol(tol).solve(rhs)
}

/// `E[⟨φ(x)⟩²] = λ² ‖A⁻¹ δ_x‖²` for i.i.d. unit-variance disorder.
pub fn exact_height_variance_at(lattice: &LatticeBox, x: &[i64], lambda: f64, tol: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let col = DirichletOperator::new(lattice).with_tol(tol).green_column(x)?;
    Ok(lambda * lambda * dot(col.values(), col.values()))
}

/// [`exact_height_variance_at`] at the box center.
pub fn exact_height_variance(lattice: &LatticeBox, lambda: f64, tol: f64) -> Result<f64> {
    exact_height_variance_at(lattice, lattice.center(), lambda, tol)
}

/// `E[⟨φ(x)⟩⟨φ(y)⟩] = λ² ⟨A⁻¹δ_x, A⁻¹δ_y⟩`.
pub fn exact_decorrelation(lattice: &LatticeBox, x: &[i64], y: &[i64], lambda: f64, tol: f64) -> Result<f64> {
    let op = DirichletOperator::new(lattice).with_tol(tol);
    let gx = op.green_column(x)?;
    if lambda == 0.0 {
        lattice.interior_offset(y)?;
        return Ok(0.0);
    }
    let gy = if x == y { gx.clone() } else { op.green_column(y)? };
    Ok(lambda * lambda * dot(gx.values(), gy.values()))
}

/// Both sides of the covariance inequality for `f = ⟨φ(x)⟩`, `g = ⟨φ(y)⟩` as functions of `η`,
/// whose derivatives are `∂⟨φ(x)⟩/∂η(z) = λ A⁻¹(x, z)`:
/// `lhs = |E[fg]|`, `rhs = Σ_z λ² |A⁻¹(x,z)| |A⁻¹(y,z)|`.
pub fn covariance_inequality_check(lattice: &LatticeBox, x: &[i64], y: &[i64], lambda: f64) -> Result<(f64, f64)> {
    let op = DirichletOperator::new(lattice);
    let gx = op.green_column(x)?;
    let gy = op.green_column(y)?;
    let l2 = lambda * lambda;
    let lhs = (l2 * dot(gx.values(), gy.values())).abs();
    let rhs = l2
        * lattice
            .interior()
            .iter()
            .map(|&z| gx.at(z).abs() * gy.at(z).abs())
            .sum::<f64>();
    Ok((lhs, rhs))
}

/// Brascamp–Lieb bound `Var(φ(x)) ≤ (A⁻¹)(x,x) / c₋`.
pub fn brascamp_lieb_bound(lattice: &LatticeBox, x: &[i64], potential: &Potential) -> Result<f64> {
    Ok(DirichletOperator::new(lattice).green_diagonal(x)? / potential.c_minus())
}

/// Annealed second moment `E⟨φ(x)²⟩ = (A⁻¹)(x,x) + λ² ‖A⁻¹δ_x‖²`, split as
/// `(thermal, disorder)`.
pub fn annealed_second_moment(lattice: &LatticeBox, x: &[i64], lambda: f64) -> Result<(f64, f64)> {
    let col = DirichletOperator::new(lattice).green_column(x)?;
    Ok((col.get(x)?, lambda * lambda * dot(col.values(), col.values())))
}

/// `E⟨|avg_{sub} φ|²⟩` split as `(thermal, disorder)`:
/// `1ᵀA⁻¹1 / |sub|²` and `λ² ‖A⁻¹1‖² / |sub|²` with `1` the indicator of `sub`.
pub fn spatial_average_second_moment(lattice: &LatticeBox, sub: &LatticeBox, lambda: f64) -> Result<(f64, f64)> {
    if !lattice.contains_box(sub) {
        return Err(Error::OutOfDomain(format!("{sub} is not inside {lattice}")));
    }
    let mut ind = VertexField::zeros(lattice);
    for o in lattice.sub_box_offsets(sub)? {
        ind.values_mut()[o] = 1.0;
    }
    let u = DirichletOperator::new(lattice).solve(&ind)?;
    let n2 = (sub.volume() as f64).powi(2);
    Ok((dot(ind.values(), u.values()) / n2, lambda * lambda * dot(u.values(), u.values()) / n2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scalar_box() {
        let b = LatticeBox::centered(1, 0).unwrap();
        let mut rhs = VertexField::zeros(&b);
        rhs.set(&[0], 2.0).unwrap();
        assert!((solve_dirichlet(&b, &rhs, 1e-12).unwrap().get(&[0]).unwrap() - 1.0).abs() < 1e-14);
        for lambda in [0.0, 1.0, 3.0] {
            let v = exact_height_variance(&b, lambda, 1e-12).unwrap();
            assert!((v - lambda * lambda / 4.0).abs() < 1e-14);
        }
    }

    #[test]
    fn point_source_solution_is_positive() {
        let b = LatticeBox::centered(2, 4).unwrap();
        let g = DirichletOperator::new(&b).green_column(&[0, 0]).unwrap();
        assert!(b.interior().iter().all(|&o| g.at(o) > 0.0));
    }

    #[test]
    fn inverse_consistency() {
        let b = LatticeBox::centered(2, 5).unwrap();
        let op = DirichletOperator::new(&b).with_tol(1e-13);
        let xi = VertexField::from_fn(&b, |p| ((p[0] * 7 + p[1] * 3) % 5) as f64 - 2.0);
        let mut xi_int = xi.clone();
        for &o in b.boundary() {
            xi_int.values_mut()[o] = 0.0;
        }
        let rhs = op.apply(&xi_int).unwrap();
        let back = op.solve(&rhs).unwrap();
        for &o in b.interior() {
            assert!((back.at(o) - xi.at(o)).abs() < 1e-10);
        }
    }

    #[test]
    fn decorrelation_diagonal_and_zero_intensity() {
        let b = LatticeBox::centered(3, 3).unwrap();
        let x = [1, 0, -1];
        let a = exact_decorrelation(&b, &x, &x, 1.5, 1e-12).unwrap();
        let v = exact_height_variance_at(&b, &x, 1.5, 1e-12).unwrap();
        assert!((a - v).abs() < 1e-12 * v);
        assert_eq!(exact_decorrelation(&b, &x, &[0, 0, 0], 0.0, 1e-12).unwrap(), 0.0);
    }

    #[test]
    fn covariance_inequality_is_tight_for_gaussian() {
        let b = LatticeBox::centered(3, 3).unwrap();
        let (l, r) = covariance_inequality_check(&b, &[0, 0, 0], &[2, 1, 0], 0.7).unwrap();
        assert!(l <= r * (1.0 + 1e-12));
        assert!((l - r).abs() <= 1e-9 * r);
        assert_eq!(covariance_inequality_check(&b, &[0, 0, 0], &[1, 0, 0], 0.0).unwrap(), (0.0, 0.0));
    }

    #[test]
    fn brascamp_lieb_scales_with_curvature_floor() {
        let b = LatticeBox::centered(2, 3).unwrap();
        let q = brascamp_lieb_bound(&b, &[0, 0], &Potential::Quadratic).unwrap();
        let c = brascamp_lieb_bound(&b, &[0, 0], &Potential::cosine(0.5).unwrap()).unwrap();
        assert!((c - 2.0 * q).abs() < 1e-12);
        let g = DirichletOperator::new(&b).green_diagonal(&[0, 0]).unwrap();
        assert!((q - g).abs() < 1e-14);
    }

    #[test]
    fn harmonic_extension_of_constant_is_constant() {
        let b = LatticeBox::centered(2, 3).unwrap();
        let psi = VertexField::from_fn(&b, |_| 2.5);
        let h = DirichletOperator::new(&b).harmonic_extension(&psi).unwrap();
        for &o in b.interior() {
            assert!((h.at(o) - 2.5).abs() < 1e-9);
        }
    }
}
