//! Energy of a surface and the quenched ground state.
//!
//! The ground state `v` minimizes `H(φ) = Σ_{e∈E(Λ⁺)} V(∇φ(e)) - λ Σ_{x∈Λ} η(x) φ(x)` over
//! fields vanishing on `∂Λ`, equivalently solves `-Σ_{y∼x} V'(v(y) - v(x)) = λη(x)` in `Λ`.

use crate::disorder::{sample_field, DisorderLaw, SeededStream};
use crate::lattice::{LatticeBox, VertexField};
use crate::linalg::{conjugate_gradient, default_cg_cap, weighted_dirichlet_laplacian};
use crate::observables::{sup_gradient_difference, ScalingSeries};
use crate::potential::Potential;
use crate::stats::MeanAccumulator;
use crate::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-10;

#[derive(Clone, Debug)]
pub struct GroundStateSolution {
    pub v: VertexField,
    /// `sup_x |Σ_{e∋x} V'(∇v(e)) + λη(x)|`.
    pub residual: f64,
    pub iterations: usize,
    pub energy: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepOrder {
    RedBlack,
    Lexicographic,
    ReverseLexicographic,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Method {
    /// Damped Newton with CG inner solves on the weighted Laplacian Hessian.
    NewtonCg,
    /// Nonlinear Gauss–Seidel, one-dimensional Newton per site.
    GaussSeidel(SweepOrder),
    /// Gradient descent with step `1/(2d·c₊)`.
    GradientDescent,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub method: Method,
    pub tol: f64,
    /// Outer iteration cap (Newton steps or sweeps); `None` picks a size-dependent default.
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { method: Method::NewtonCg, tol: DEFAULT_TOL, max_iter: None }
    }
}

fn check_fields(lattice: &LatticeBox, eta: &VertexField) -> Result<()> {
    if eta.lattice() != lattice {
        // η may live on a larger box; callers restrict first
        return Err(Error::InvalidInput(format!("disorder on {} but box is {lattice}", eta.lattice())));
    }
    Ok(())
}

/// Energy with each undirected edge counted once. `φ` must vanish on `∂Λ`.
pub fn energy(phi: &VertexField, eta: &VertexField, lambda: f64, potential: &Potential) -> Result<f64> {
    let lattice = phi.lattice();
    check_fields(lattice, eta)?;
    let b = phi.boundary_sup();
    if b != 0.0 {
        return Err(Error::InvalidInput(format!("field is nonzero on the boundary (sup {b:e})")));
    }
    Ok(energy_unchecked(lattice, phi.values(), eta.values(), lambda, potential))
}

fn energy_unchecked(lattice: &LatticeBox, phi: &[f64], eta: &[f64], lambda: f64, potential: &Potential) -> f64 {
    let interaction: f64 = lattice
        .edges()
        .map(|e| potential.eval(phi[e.head(lattice)] - phi[e.base]))
        .sum();
    let field: f64 = lattice.interior().iter().map(|&x| eta[x] * phi[x]).sum();
    interaction - lambda * field
}

/// `Σ_{e∋x} V'(∇φ(e)) + λη(x)` on the interior; zero elsewhere. This is minus the energy
/// gradient, and the drift of the Langevin dynamics.
pub fn drift_field(lattice: &LatticeBox, phi: &[f64], eta: &[f64], lambda: f64, potential: &Potential) -> Vec<f64> {
    let mut out = vec![0.0; phi.len()];
    drift_into(lattice, phi, eta, lambda, potential, &mut out);
    out
}

pub(crate) fn drift_into(
    lattice: &LatticeBox,
    phi: &[f64],
    eta: &[f64],
    lambda: f64,
    potential: &Potential,
    out: &mut [f64],
) {
    let strides = lattice.strides();
    for &x in lattice.interior() {
        let px = phi[x];
        let mut s = lambda * eta[x];
        for &st in strides {
            s += potential.prime(phi[x + st] - px);
            s += potential.prime(phi[x - st] - px);
        }
        out[x] = s;
    }
}

fn sup_interior(lattice: &LatticeBox, r: &[f64]) -> f64 {
    lattice.interior().iter().map(|&x| r[x].abs()).fold(0.0, f64::max)
}

/// Recomputes the sup-norm residual of the ground-state equation.
pub fn residual_sup(v: &VertexField, eta: &VertexField, lambda: f64, potential: &Potential) -> Result<f64> {
    check_fields(v.lattice(), eta)?;
    let r = drift_field(v.lattice(), v.values(), eta.values(), lambda, potential);
    Ok(sup_interior(v.lattice(), &r))
}

/// Ground state with the default solver at tolerance `tol`.
pub fn solve(lattice: &LatticeBox, eta: &VertexField, lambda: f64, potential: &Potential, tol: f64) -> Result<GroundStateSolution> {
    solve_with(lattice, eta, lambda, potential, SolverOptions { tol, ..Default::default() })
}

pub fn solve_with(
    lattice: &LatticeBox,
    eta: &VertexField,
    lambda: f64,
    potential: &Potential,
    opts: SolverOptions,
) -> Result<GroundStateSolution> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {}", opts.tol)));
    }
    check_fields(lattice, eta)?;
    let (v, iterations) = match opts.method {
        Method::NewtonCg => newton_cg(lattice, eta.values(), lambda, potential, opts)?,
        Method::GaussSeidel(order) => gauss_seidel(lattice, eta.values(), lambda, potential, order, opts)?,
        Method::GradientDescent => gradient_descent(lattice, eta.values(), lambda, potential, opts)?,
    };
    let r = drift_field(lattice, &v, eta.values(), lambda, potential);
    let residual = sup_interior(lattice, &r);
    let energy = energy_unchecked(lattice, &v, eta.values(), lambda, potential);
    Ok(GroundStateSolution { v: VertexField::from_storage(lattice, v)?, residual, iterations, energy })
}

fn newton_cg(
    lattice: &LatticeBox,
    eta: &[f64],
    lambda: f64,
    potential: &Potential,
    opts: SolverOptions,
) -> Result<(Vec<f64>, usize)> {
    let n = lattice.storage_len();
    let d = lattice.dim();
    let cap = opts.max_iter.unwrap_or(200);
    let mut v = vec![0.0; n];
    let mut weights = vec![0.0; n * d];
    let mut r = drift_field(lattice, &v, eta, lambda, potential);
    let mut res = sup_interior(lattice, &r);
    let mut energy = energy_unchecked(lattice, &v, eta, lambda, potential);
    for it in 0..cap {
        if res <= opts.tol {
            return Ok((v, it));
        }
        for e in lattice.edges() {
            weights[e.base * d + e.axis] = potential.second(v[e.head(lattice)] - v[e.base]);
        }
        // forcing term: loose while far away, tight near the solution
        let inner_tol = (0.5 * res).clamp(1e-14, 1e-2);
        let (step, _) = conjugate_gradient(
            |u, o| weighted_dirichlet_laplacian(lattice, &weights, u, o),
            &r,
            None,
            inner_tol,
            default_cg_cap(lattice) * 4,
            None,
        )?;
        let mut alpha = 1.0;
        let mut trial = vec![0.0; n];
        loop {
            for &x in lattice.interior() {
                trial[x] = v[x] + alpha * step[x];
            }
            let e_trial = energy_unchecked(lattice, &trial, eta, lambda, potential);
            // energy decrease below rounding resolution: accept and let the residual decide
            let resolution = 1e-12 * (1.0 + energy.abs());
            if e_trial <= energy + resolution || alpha < 1e-6 {
                energy = e_trial;
                break;
            }
            alpha *= 0.5;
        }
        std::mem::swap(&mut v, &mut trial);
        drift_into(lattice, &v, eta, lambda, potential, &mut r);
        res = sup_interior(lattice, &r);
        if !res.is_finite() {
            return Err(Error::Unstable("Newton iterate is not finite".into()));
        }
    }
    if res <= opts.tol {
        return Ok((v, cap));
    }
    Err(Error::NoConvergence { method: "damped Newton", iterations: cap, residual: res, target: opts.tol })
}

/// Solves `Σ_y V'(v(y) - s) + λη = 0` for the single unknown `s`.
#[inline]
fn site_newton(neigh: &[f64], rhs: f64, s0: f64, potential: &Potential, floor: f64, tol: f64) -> f64 {
    let mut s = s0;
    for _ in 0..50 {
        let mut f = rhs;
        let mut slope = 0.0;
        for &u in neigh {
            f += potential.prime(u - s);
            slope += potential.second(u - s);
        }
        let step = f / slope.max(floor);
        s += step;
        if f.abs() <= 0.01 * tol || step.abs() <= 1e-16 * (1.0 + s.abs()) {
            break;
        }
    }
    s
}

fn gauss_seidel(
    lattice: &LatticeBox,
    eta: &[f64],
    lambda: f64,
    potential: &Potential,
    order: SweepOrder,
    opts: SolverOptions,
) -> Result<(Vec<f64>, usize)> {
    let n = lattice.storage_len();
    let d = lattice.dim();
    let side = (2 * lattice.radius() + 1) as f64;
    let cap = opts.max_iter.unwrap_or((40.0 * side * side) as usize + 2000);
    let floor = 2.0 * d as f64 * potential.c_minus();
    let strides = lattice.strides().to_vec();
    let sites: Vec<usize> = match order {
        SweepOrder::Lexicographic => lattice.interior().to_vec(),
        SweepOrder::ReverseLexicographic => lattice.interior().iter().rev().copied().collect(),
        SweepOrder::RedBlack => {
            let parity = |x: usize| (0..d).map(|a| lattice.local_coord(x, a)).sum::<usize>() % 2;
            let mut s: Vec<usize> = lattice.interior().iter().copied().filter(|&x| parity(x) == 0).collect();
            s.extend(lattice.interior().iter().copied().filter(|&x| parity(x) == 1));
            s
        }
    };
    let mut v = vec![0.0; n];
    let mut neigh = vec![0.0; 2 * d];
    let mut r = vec![0.0; n];
    for sweep in 0..cap {
        drift_into(lattice, &v, eta, lambda, potential, &mut r);
        let res = sup_interior(lattice, &r);
        if res <= opts.tol {
            return Ok((v, sweep));
        }
        if !res.is_finite() {
            return Err(Error::Unstable("Gauss–Seidel iterate is not finite".into()));
        }
        for &x in &sites {
            for (k, &st) in strides.iter().enumerate() {
                neigh[2 * k] = v[x + st];
                neigh[2 * k + 1] = v[x - st];
            }
            v[x] = site_newton(&neigh, lambda * eta[x], v[x], potential, floor, opts.tol);
        }
    }
    drift_into(lattice, &v, eta, lambda, potential, &mut r);
    let res = sup_interior(lattice, &r);
    Err(Error::NoConvergence { method: "nonlinear Gauss–Seidel", iterations: cap, residual: res, target: opts.tol })
}

fn gradient_descent(
    lattice: &LatticeBox,
    eta: &[f64],
    lambda: f64,
    potential: &Potential,
    opts: SolverOptions,
) -> Result<(Vec<f64>, usize)> {
    let n = lattice.storage_len();
    let side = (2 * lattice.radius() + 1) as f64;
    let cap = opts.max_iter.unwrap_or((200.0 * side * side) as usize + 5000);
    let step = 1.0 / (2.0 * lattice.dim() as f64 * potential.c_plus());
    let mut v = vec![0.0; n];
    let mut r = vec![0.0; n];
    for it in 0..cap {
        drift_into(lattice, &v, eta, lambda, potential, &mut r);
        let res = sup_interior(lattice, &r);
        if res <= opts.tol {
            return Ok((v, it));
        }
        for &x in lattice.interior() {
            v[x] += step * r[x];
        }
    }
    drift_into(lattice, &v, eta, lambda, potential, &mut r);
    let res = sup_interior(lattice, &r);
    Err(Error::NoConvergence { method: "gradient descent", iterations: cap, residual: res, target: opts.tol })
}

/// Restricts a field given on a larger box to `target` (interior and boundary).
pub fn restrict(field: &VertexField, target: &LatticeBox) -> Result<VertexField> {
    let src = field.lattice();
    let mut out = VertexField::zeros(target);
    for off in 0..target.storage_len() {
        if target.in_closure(off) {
            let p = target.point_of(off);
            let so = src
                .offset_of(&p)
                .filter(|&o| src.in_closure(o))
                .ok_or_else(|| Error::OutOfDomain(format!("{p:?} not covered by {src}")))?;
            out.values_mut()[off] = field.at(so);
        }
    }
    Ok(out)
}

/// Parameters of one dyadic ground-state comparison.
#[derive(Clone, Debug)]
pub struct DyadicParams {
    pub dim: usize,
    pub lambda: f64,
    pub potential: Potential,
    pub law: DisorderLaw,
    pub tol: f64,
    /// Outer box radius as a multiple of the inner radius (2 for the dyadic scheme).
    pub outer_factor: usize,
}

/// `sup_{e∈E(Λ_{L/2})} |∇v_{outer}(e) - ∇v_L(e)|` for one disorder seed, with the disorder
/// shared on the common sites.
pub fn dyadic_difference(params: &DyadicParams, radius: usize, seed: u64) -> Result<f64> {
    let inner = LatticeBox::centered(params.dim, radius)?;
    let outer = LatticeBox::centered(params.dim, params.outer_factor * radius)?;
    let stream = SeededStream::new(seed, "disorder");
    let eta_outer = sample_field(params.law, &outer, &stream);
    let eta_inner = restrict(&eta_outer, &inner)?;
    let v_inner = solve(&inner, &eta_inner, params.lambda, &params.potential, params.tol)?;
    let v_outer = solve(&outer, &eta_outer, params.lambda, &params.potential, params.tol)?;
    let window = LatticeBox::centered(params.dim, radius / 2)?;
    sup_gradient_difference(&v_outer.v, &v_inner.v, &window)
}

/// Disorder-averaged dyadic differences per scale, with standard errors over seeds.
pub fn dyadic_ground_state_study(params: &DyadicParams, scales: &[usize], seeds: &[u64]) -> Result<ScalingSeries> {
    if scales.len() < 2 || !scales.windows(2).all(|w| w[0] < w[1]) {
        return Err(Error::InvalidInput("need at least two strictly increasing scales".into()));
    }
    if seeds.is_empty() {
        return Err(Error::InvalidInput("need at least one seed".into()));
    }
    let mut points = Vec::with_capacity(scales.len());
    for &l in scales {
        let mut acc = MeanAccumulator::default();
        for &seed in seeds {
            let value = dyadic_difference(params, l, seed)
                .map_err(|e| Error::Cell { seed, scale: l, source: Box::new(e) })?;
            acc.push(value);
        }
        points.push((l, acc.mean(), acc.stderr()));
    }
    ScalingSeries::new(points)
}
