//! Even, uniformly convex interaction potentials with certified bounds `c₋ ≤ V'' ≤ c₊`.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Grid on which user-declared curvature bounds are spot-checked.
const BOUND_CHECK_RANGE: f64 = 50.0;
const BOUND_CHECK_POINTS: usize = 20_001;
const QUADRATURE_TOL: f64 = 1e-12;

type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;

/// A user-supplied potential. `value`, `prime` and `second` must describe the same even
/// function; the declared bounds are verified on a grid at construction.
pub struct CustomPotential {
    name: String,
    value: Box<ScalarFn>,
    prime: Box<ScalarFn>,
    second: Box<ScalarFn>,
    c_minus: f64,
    c_plus: f64,
}

#[derive(Clone)]
pub enum Potential {
    /// `V(t) = t²/2`.
    Quadratic,
    /// `V(t) = t²/2 + κ cos t` with `0 ≤ κ < 1`.
    Cosine { kappa: f64 },
    Custom(Arc<CustomPotential>),
}

/// Serializable description used by experiment configs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PotentialSpec {
    Quadratic {},
    QuadraticPlusCosine { kappa: f64 },
}

impl Potential {
    pub fn cosine(kappa: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&kappa) {
            return Err(Error::InvalidInput(format!("cosine amplitude κ = {kappa} outside [0, 1)")));
        }
        Ok(Potential::Cosine { kappa })
    }

    /// Wraps user functions after checking evenness and the declared curvature bounds.
    pub fn custom(
        name: impl Into<String>,
        value: impl Fn(f64) -> f64 + Send + Sync + 'static,
        prime: impl Fn(f64) -> f64 + Send + Sync + 'static,
        second: impl Fn(f64) -> f64 + Send + Sync + 'static,
        c_minus: f64,
        c_plus: f64,
    ) -> Result<Self> {
        let name = name.into();
        if !(c_minus > 0.0 && c_minus <= c_plus && c_plus.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "{name}: declared bounds ({c_minus}, {c_plus}) are not 0 < c₋ ≤ c₊ < ∞"
            )));
        }
        for k in 0..BOUND_CHECK_POINTS {
            let t = -BOUND_CHECK_RANGE + 2.0 * BOUND_CHECK_RANGE * k as f64 / (BOUND_CHECK_POINTS - 1) as f64;
            let s = second(t);
            if !(s >= c_minus * (1.0 - 1e-12) && s <= c_plus * (1.0 + 1e-12)) {
                return Err(Error::InvalidInput(format!(
                    "{name}: V''({t}) = {s} violates declared bounds [{c_minus}, {c_plus}]"
                )));
            }
            let (v, w) = (value(t), value(-t));
            if (v - w).abs() > 1e-12 * (1.0 + v.abs()) {
                return Err(Error::InvalidInput(format!("{name}: V is not even at t = {t}")));
            }
        }
        if prime(0.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("{name}: V'(0) must vanish")));
        }
        Ok(Potential::Custom(Arc::new(CustomPotential {
            name,
            value: Box::new(value),
            prime: Box::new(prime),
            second: Box::new(second),
            c_minus,
            c_plus,
        })))
    }

    pub fn from_spec(spec: &PotentialSpec) -> Result<Self> {
        match *spec {
            PotentialSpec::Quadratic {} => Ok(Potential::Quadratic),
            PotentialSpec::QuadraticPlusCosine { kappa } => Potential::cosine(kappa),
        }
    }

    pub fn name(&self) -> String {
        match self {
            Potential::Quadratic => "quadratic".into(),
            Potential::Cosine { kappa } => format!("quadratic-plus-cosine(κ={kappa})"),
            Potential::Custom(c) => c.name.clone(),
        }
    }

    pub fn is_quadratic(&self) -> bool {
        matches!(self, Potential::Quadratic) || matches!(self, Potential::Cosine { kappa } if *kappa == 0.0)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Potential::Quadratic => 0.5 * t * t,
            Potential::Cosine { kappa } => 0.5 * t * t + kappa * t.cos(),
            Potential::Custom(c) => (c.value)(t),
        }
    }

    #[inline]
    pub fn prime(&self, t: f64) -> f64 {
        match self {
            Potential::Quadratic => t,
            Potential::Cosine { kappa } => t - kappa * t.sin(),
            Potential::Custom(c) => (c.prime)(t),
        }
    }

    #[inline]
    pub fn second(&self, t: f64) -> f64 {
        match self {
            Potential::Quadratic => 1.0,
            Potential::Cosine { kappa } => 1.0 - kappa * t.cos(),
            Potential::Custom(c) => (c.second)(t),
        }
    }

    pub fn c_minus(&self) -> f64 {
        match self {
            Potential::Quadratic => 1.0,
            Potential::Cosine { kappa } => 1.0 - kappa,
            Potential::Custom(c) => c.c_minus,
        }
    }

    pub fn c_plus(&self) -> f64 {
        match self {
            Potential::Quadratic => 1.0,
            Potential::Cosine { kappa } => 1.0 + kappa,
            Potential::Custom(c) => c.c_plus,
        }
    }

    /// `∫₀¹ V''(s·g0 + (1-s)·g1) ds`, the coefficient of the linear equation solved by the
    /// difference of two solutions. Closed form where available, adaptive quadrature otherwise.
    pub fn averaged_environment(&self, g0: f64, g1: f64) -> f64 {
        match self {
            Potential::Quadratic => 1.0,
            Potential::Cosine { kappa } => {
                // (sin g0 - sin g1)/(g0 - g1) = cos(mid)·sinc(half), stable as g0 → g1
                let mid = 0.5 * (g0 + g1);
                let half = 0.5 * (g0 - g1);
                let sinc = if half == 0.0 { 1.0 } else { half.sin() / half };
                1.0 - kappa * mid.cos() * sinc
            }
            Potential::Custom(_) => self.averaged_environment_quadrature(g0, g1),
        }
    }

    /// Quadrature route for the averaged environment, independent of any closed form.
    pub fn averaged_environment_quadrature(&self, g0: f64, g1: f64) -> f64 {
        if g0 == g1 {
            return self.second(g0);
        }
        let f = |s: f64| self.second(s * g0 + (1.0 - s) * g1);
        adaptive_simpson(&f, 0.0, 1.0, QUADRATURE_TOL, 50)
    }
}

impl fmt::Debug for Potential {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Potential({}, c₋={}, c₊={})", self.name(), self.c_minus(), self.c_plus())
    }
}

fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64, depth: u32) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            recurse(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + recurse(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, depth)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn quadratic_values() {
        let v = Potential::Quadratic;
        assert_eq!(v.eval(3.0), 4.5);
        assert_eq!(v.prime(3.0), 3.0);
        assert_eq!(v.second(3.0), 1.0);
        assert_eq!((v.c_minus(), v.c_plus()), (1.0, 1.0));
        assert_eq!(v.averaged_environment(-2.0, 17.0), 1.0);
    }

    #[test]
    fn cosine_curvature_extremes() {
        let v = Potential::cosine(0.5).unwrap();
        assert_eq!(v.second(0.0), 0.5);
        assert_eq!(v.second(0.0), v.c_minus());
        assert!((v.second(PI) - 1.5).abs() < 1e-15);
        assert_eq!(v.c_plus(), 1.5);
        assert_eq!(v.prime(0.0), 0.0);
    }

    #[test]
    fn cosine_amplitude_range() {
        assert!(Potential::cosine(1.0).is_err());
        assert!(Potential::cosine(-0.1).is_err());
        assert!(Potential::cosine(f64::NAN).is_err());
        assert!(Potential::cosine(0.0).is_ok());
    }

    #[test]
    fn averaged_environment_examples() {
        let v = Potential::cosine(0.5).unwrap();
        assert_eq!(v.averaged_environment(0.0, 0.0), 0.5);
        // antiderivative of cos: (sin 0 - sin π)/(0 - π) = 0 up to rounding of sin π
        assert!((v.averaged_environment(0.0, PI) - 1.0).abs() < 1e-15);
        assert!((v.averaged_environment_quadrature(0.0, PI) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn near_degenerate_interval_is_continuous() {
        let v = Potential::cosine(0.7).unwrap();
        let g = 1.3;
        let lim = v.averaged_environment(g, g);
        assert!((lim - (1.0 - 0.7 * g.cos())).abs() < 1e-15);
        assert!((v.averaged_environment(g, g + 1e-9) - lim).abs() < 1e-9);
    }

    #[test]
    fn custom_potential_bounds_are_checked() {
        // V(t) = t²/2 + 0.2·log cosh t has V'' = 1 + 0.2 sech² t ∈ [1, 1.2]
        let ok = Potential::custom(
            "logcosh",
            |t| 0.5 * t * t + 0.2 * t.cosh().ln(),
            |t| t + 0.2 * t.tanh(),
            |t| 1.0 + 0.2 / t.cosh().powi(2),
            1.0,
            1.2,
        );
        assert!(ok.is_ok());
        let bad = Potential::custom(
            "logcosh-wrong",
            |t| 0.5 * t * t + 0.2 * t.cosh().ln(),
            |t| t + 0.2 * t.tanh(),
            |t| 1.0 + 0.2 / t.cosh().powi(2),
            1.0,
            1.1,
        );
        assert!(bad.is_err());
        let v = ok.unwrap();
        let a = v.averaged_environment(0.3, -1.1);
        let exact = (v.prime(0.3) - v.prime(-1.1)) / (0.3 + 1.1);
        assert!((a - exact).abs() < 1e-12);
    }

    #[test]
    fn spec_roundtrip() {
        let s: PotentialSpec = toml::from_str("family = \"quadratic-plus-cosine\"\nkappa = 0.5").unwrap();
        assert_eq!(s, PotentialSpec::QuadraticPlusCosine { kappa: 0.5 });
        assert!(matches!(Potential::from_spec(&s).unwrap(), Potential::Cosine { .. }));
        assert!(toml::from_str::<PotentialSpec>("family = \"quartic\"").is_err());
    }
}
