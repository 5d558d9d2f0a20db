//! Measured quantities: weighted norms, gradient differences, spatial averages, oscillation
//! and regularity diagnostics, Wasserstein upper bounds, power-law fits.

use serde::{Deserialize, Serialize};

use crate::disorder::{shift_field, SeededStream};
use crate::green::RepresentationKernel;
use crate::langevin::{simulate_with_key_shift, LangevinConfig, RecordOptions};
use crate::lattice::{EdgeField, LatticeBox, VertexField};
use crate::stats::{CompensatedSum, MeanAccumulator};
use crate::{Error, Result};

/// Floor applied to standard errors before weighting fits by `1/stderr²`.
pub const STDERR_FLOOR: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingPoint {
    pub scale: usize,
    pub value: f64,
    pub stderr: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    /// Decay exponent: the fit is `value ≈ prefactor · L^{-alpha}`.
    pub alpha: f64,
    pub prefactor: f64,
    pub r_squared: f64,
}

/// A statistic measured across scales, with its power-law fit when one is defined.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingSeries {
    points: Vec<ScalingPoint>,
    fit: Option<PowerLawFit>,
}

impl ScalingSeries {
    /// Builds the series from `(scale, value, stderr)` triples. The fit is absent (the series is
    /// degenerate) when some value is not positive.
    pub fn new(points: Vec<(usize, f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("empty scaling series".into()));
        }
        if !points.windows(2).all(|w| w[0].0 < w[1].0) {
            return Err(Error::InvalidInput("scales must be strictly increasing".into()));
        }
        if let Some(p) = points.iter().find(|p| !(p.2 >= 0.0) || !p.1.is_finite()) {
            return Err(Error::InvalidInput(format!("invalid point {p:?}")));
        }
        let points: Vec<ScalingPoint> =
            points.into_iter().map(|(scale, value, stderr)| ScalingPoint { scale, value, stderr }).collect();
        let fit = if points.len() >= 2 && points.iter().all(|p| p.value > 0.0) {
            Some(fit_power_law(&points)?)
        } else {
            None
        };
        Ok(Self { points, fit })
    }

    pub fn points(&self) -> &[ScalingPoint] {
        &self.points
    }

    pub fn fit(&self) -> Option<&PowerLawFit> {
        self.fit.as_ref()
    }

    pub fn is_degenerate(&self) -> bool {
        self.fit.is_none()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearFit {
    pub intercept: f64,
    pub slope: f64,
    pub r_squared: f64,
}

/// Weighted least squares `y ≈ intercept + slope·x`. `R²` is 1 for data with no spread in `y`.
pub fn weighted_linear_fit(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<LinearFit> {
    if xs.len() != ys.len() || xs.len() != ws.len() || xs.len() < 2 {
        return Err(Error::InvalidInput("need at least two weighted points".into()));
    }
    let sw: f64 = ws.iter().sum();
    let xm = xs.iter().zip(ws).map(|(x, w)| w * x).sum::<f64>() / sw;
    let ym = ys.iter().zip(ws).map(|(y, w)| w * y).sum::<f64>() / sw;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for ((x, y), w) in xs.iter().zip(ys).zip(ws) {
        sxx += w * (x - xm) * (x - xm);
        sxy += w * (x - xm) * (y - ym);
        syy += w * (y - ym) * (y - ym);
    }
    if sxx == 0.0 {
        return Err(Error::InvalidInput("all abscissae coincide".into()));
    }
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((x, y), w)| w * (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy == 0.0 { 1.0 } else { 1.0 - ss_res / syy };
    Ok(LinearFit { intercept, slope, r_squared })
}

fn fit_weights(points: &[ScalingPoint]) -> Vec<f64> {
    points.iter().map(|p| 1.0 / p.stderr.max(STDERR_FLOOR).powi(2)).collect()
}

/// Weighted log-log fit of `value ≈ C·L^{-α}` with weights `1/max(stderr, 1e-6)²`.
/// Two points give the exact interpolating power law.
pub fn fit_power_law(points: &[ScalingPoint]) -> Result<PowerLawFit> {
    if points.len() < 2 {
        return Err(Error::InvalidInput("a power-law fit needs at least two scales".into()));
    }
    if let Some(p) = points.iter().find(|p| !(p.value > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "non-positive value {} at L = {}: power law undefined",
            p.value, p.scale
        )));
    }
    let xs: Vec<f64> = points.iter().map(|p| (p.scale as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.value.ln()).collect();
    let fit = weighted_linear_fit(&xs, &ys, &fit_weights(points))?;
    Ok(PowerLawFit { alpha: -fit.slope, prefactor: fit.intercept.exp(), r_squared: fit.r_squared })
}

/// Weighted fit of `value ≈ c₀ + c₁·ln L`.
pub fn fit_log_growth(points: &[ScalingPoint]) -> Result<LinearFit> {
    let xs: Vec<f64> = points.iter().map(|p| (p.scale as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.value).collect();
    weighted_linear_fit(&xs, &ys, &fit_weights(points))
}

fn euclidean_weight(p: &[i64]) -> f64 {
    let r2: i64 = p.iter().map(|c| c * c).sum();
    (-(r2 as f64).sqrt()).exp()
}

/// `(Σ_x φ(x)² e^{-|x|})^{1/2}` over the box closure; the field is zero elsewhere.
pub fn weighted_norm(phi: &VertexField) -> f64 {
    let b = phi.lattice();
    let mut s = CompensatedSum::default();
    for o in 0..b.storage_len() {
        if b.in_closure(o) && phi.at(o) != 0.0 {
            s.add(phi.at(o).powi(2) * euclidean_weight(&b.point_of(o)));
        }
    }
    s.value().sqrt()
}

/// Edge version of [`weighted_norm`], weighting `e = {x, x + e_i}` by `e^{-|x|}`.
pub fn weighted_edge_norm(chi: &EdgeField) -> f64 {
    let b = chi.lattice();
    let mut s = CompensatedSum::default();
    for e in b.edges() {
        let v = chi.get(e);
        if v != 0.0 {
            s.add(v * v * euclidean_weight(&b.point_of(e.base)));
        }
    }
    s.value().sqrt()
}

/// `|φ0 - φ1|₁²` for fields on possibly different boxes (each extended by zero).
pub fn weighted_distance_sq(phi0: &VertexField, phi1: &VertexField) -> f64 {
    let (b0, b1) = (phi0.lattice(), phi1.lattice());
    let mut s = CompensatedSum::default();
    for o in 0..b0.storage_len() {
        if b0.in_closure(o) {
            let p = b0.point_of(o);
            let d = phi0.at(o) - phi1.get_or_zero(&p);
            s.add(d * d * euclidean_weight(&p));
        }
    }
    for o in 0..b1.storage_len() {
        if b1.in_closure(o) {
            let p = b1.point_of(o);
            if !b0.offset_of(&p).is_some_and(|q| b0.in_closure(q)) {
                s.add(phi1.at(o).powi(2) * euclidean_weight(&p));
            }
        }
    }
    s.value()
}

/// Value of `χ` on the edge `{p, p + e_axis}`, zero when the edge is not an edge of the box.
fn edge_value_at(chi: &EdgeField, p: &[i64], axis: usize) -> f64 {
    let b = chi.lattice();
    let Some(base) = b.offset_of(p) else { return 0.0 };
    let head = match b.neighbor(base, axis, true) {
        Some(h) => h,
        None => return 0.0,
    };
    let inside = b.in_closure(base) && b.in_closure(head) && (b.is_interior(base) || b.is_interior(head));
    if inside {
        chi.get(crate::Edge { base, axis })
    } else {
        0.0
    }
}

/// `|χ0 - χ1|₁²` for edge fields on possibly different boxes.
pub fn weighted_edge_distance_sq(chi0: &EdgeField, chi1: &EdgeField) -> f64 {
    let mut s = CompensatedSum::default();
    let mut seen = std::collections::HashSet::new();
    for (a, b) in [(chi0, chi1), (chi1, chi0)] {
        for e in a.lattice().edges() {
            let p = a.lattice().point_of(e.base);
            if !seen.insert((p.clone(), e.axis)) {
                continue;
            }
            let d = a.get(e) - edge_value_at(b, &p, e.axis);
            s.add(d * d * euclidean_weight(&p));
        }
    }
    s.value()
}

/// Mean over paired samples of `|φ0 - φ1|₁²` with its standard error: an upper bound for the
/// squared Wasserstein distance realized by the sampled coupling.
pub fn empirical_wasserstein_upper(pairs: &[(VertexField, VertexField)]) -> Result<(f64, f64)> {
    if pairs.len() < 2 {
        return Err(Error::InvalidInput("need at least two paired samples".into()));
    }
    let acc: MeanAccumulator = pairs.iter().map(|(a, b)| weighted_distance_sq(a, b)).collect();
    Ok((acc.mean(), acc.stderr()))
}

/// Gradient version of [`empirical_wasserstein_upper`].
pub fn empirical_wasserstein_upper_gradient(pairs: &[(EdgeField, EdgeField)]) -> Result<(f64, f64)> {
    if pairs.len() < 2 {
        return Err(Error::InvalidInput("need at least two paired samples".into()));
    }
    let acc: MeanAccumulator = pairs.iter().map(|(a, b)| weighted_edge_distance_sq(a, b)).collect();
    Ok((acc.mean(), acc.stderr()))
}

/// `max_{e∈E(window)} |∇φ0(e) - ∇φ1(e)|` over edges with both ends in the window, addressed by
/// absolute coordinates.
pub fn sup_gradient_difference(phi0: &VertexField, phi1: &VertexField, window: &LatticeBox) -> Result<f64> {
    let m0 = phi0.lattice().sub_box_offsets(window)?;
    let m1 = phi1.lattice().sub_box_offsets(window)?;
    let idx: std::collections::HashMap<usize, usize> =
        window.interior().iter().enumerate().map(|(k, &o)| (o, k)).collect();
    let mut sup: f64 = 0.0;
    for e in window.inner_edges() {
        let (a, b) = (idx[&e.base], idx[&e.head(window)]);
        let g0 = phi0.at(m0[b]) - phi0.at(m0[a]);
        let g1 = phi1.at(m1[b]) - phi1.at(m1[a]);
        sup = sup.max((g0 - g1).abs());
    }
    Ok(sup)
}

/// Arithmetic mean of `φ` over the vertices of `sub`.
pub fn spatial_average(phi: &VertexField, sub: &LatticeBox) -> Result<f64> {
    let offs = phi.lattice().sub_box_offsets(sub)?;
    if offs.is_empty() {
        return Err(Error::InvalidInput("empty averaging box".into()));
    }
    let mut s = CompensatedSum::default();
    for o in &offs {
        s.add(phi.at(*o));
    }
    Ok(s.value() / offs.len() as f64)
}

/// The split `φ0(x) - φ1(x) = Σ_e f(e)·∇(φ0 - φ1)(e) + (avg φ0 - avg φ1)` on the kernel box.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct HeightSplit {
    /// `Σ_e f(e)·(∇φ0 - ∇φ1)(e)`.
    pub gradient_term: f64,
    /// `Σ_e |f(e)| · sup_e |∇φ0 - ∇φ1|`, the bound used for the gradient term.
    pub gradient_bound: f64,
    pub average0: f64,
    pub average1: f64,
    /// Largest violation of the reconstruction identity over both fields.
    pub identity_error: f64,
}

pub fn height_reconstruction_error(
    phi0: &VertexField,
    phi1: &VertexField,
    kernel: &RepresentationKernel,
) -> Result<HeightSplit> {
    let b = kernel.lattice();
    let s0 = kernel.apply(phi0)?;
    let s1 = kernel.apply(phi1)?;
    let average0 = spatial_average(phi0, b)?;
    let average1 = spatial_average(phi1, b)?;
    let x = kernel.center();
    let e0 = (phi0.get(x)? - average0 - s0).abs();
    let e1 = (phi1.get(x)? - average1 - s1).abs();
    let sup = sup_gradient_difference(phi0, phi1, b)?;
    Ok(HeightSplit {
        gradient_term: s0 - s1,
        gradient_bound: kernel.l1_norm() * sup,
        average0,
        average1,
        identity_error: e0.max(e1),
    })
}

/// `sup - inf` of `u` over the frames `from..=to` and the vertices of `window`.
pub fn oscillation(frames: &[VertexField], from: usize, to: usize, window: &LatticeBox) -> Result<f64> {
    if from > to || to >= frames.len() {
        return Err(Error::InvalidInput(format!("empty time window {from}..={to} of {} frames", frames.len())));
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for frame in &frames[from..=to] {
        for o in frame.lattice().sub_box_offsets(window)? {
            lo = lo.min(frame.at(o));
            hi = hi.max(frame.at(o));
        }
    }
    Ok(hi - lo)
}

/// Empirical constants of the parabolic regularity estimates for a coupled difference field.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RegularityDiagnostics {
    /// `sup w²` over `[T/2, T] × Λ_{L/2}` over the space-time mean of `w²` on `[0, T] × Λ_L`.
    pub mean_value_ratio: Option<f64>,
    /// `(ℓ, osc over [t, t+4ℓ²]×Λ_{2ℓ} / osc over [t+3ℓ², t+4ℓ²]×Λ_ℓ)` for dyadic `ℓ`.
    pub oscillation_ratios: Vec<(usize, Option<f64>)>,
    /// `sup_{E(Λ_{L/2})} |∇w(T)|` over `(L^{-(d+2)} ∫ Σ_{Λ_L} w²)^{1/2}`.
    pub holder_ratio: Option<f64>,
    pub degenerate: bool,
}

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den > 0.0).then(|| num / den)
}

/// Frames of `w` on `Λ_L⁺` at `times` (uniform spacing, starting at 0).
pub fn regularity_diagnostics(frames: &[VertexField], times: &[f64], radius: usize) -> Result<RegularityDiagnostics> {
    if radius < 4 {
        return Err(Error::InvalidInput(format!("L = {radius} leaves no dyadic level ℓ ≥ 2")));
    }
    if frames.len() < 2 || frames.len() != times.len() {
        return Err(Error::InvalidInput("need at least two frames with matching times".into()));
    }
    let dim = frames[0].lattice().dim();
    let full = LatticeBox::centered(dim, radius)?;
    let half = LatticeBox::centered(dim, radius / 2)?;
    let dt = times[1] - times[0];
    let total = *times.last().expect("nonempty");
    let frame_at = |t: f64| -> usize {
        let k = times.partition_point(|&s| s < t - 1e-9 * dt.max(1.0));
        k.min(times.len() - 1)
    };

    let mut integral = CompensatedSum::default();
    for f in &frames[1..] {
        for o in f.lattice().sub_box_offsets(&full)? {
            integral.add(f.at(o).powi(2) * dt);
        }
    }
    let integral = integral.value();
    let cylinder_mean = integral / (total * full.volume() as f64);

    let mut late_sup: f64 = 0.0;
    for f in &frames[frame_at(total / 2.0)..] {
        for o in f.lattice().sub_box_offsets(&half)? {
            late_sup = late_sup.max(f.at(o).powi(2));
        }
    }
    let mean_value_ratio = ratio(late_sup, cylinder_mean);

    let mut oscillation_ratios = Vec::new();
    let mut l = 2usize;
    while 2 * l <= radius && (4 * l * l) as f64 <= total + 1e-9 {
        let t0 = total - (4 * l * l) as f64;
        let outer = oscillation(frames, frame_at(t0), frames.len() - 1, &LatticeBox::centered(dim, 2 * l)?)?;
        let inner = oscillation(
            frames,
            frame_at(t0 + (3 * l * l) as f64),
            frames.len() - 1,
            &LatticeBox::centered(dim, l)?,
        )?;
        oscillation_ratios.push((l, ratio(outer, inner)));
        l *= 2;
    }

    let last = frames.last().expect("nonempty");
    let zero = VertexField::zeros(last.lattice());
    let grad = sup_gradient_difference(last, &zero, &half)?;
    let rhs = (integral / (radius as f64).powi(dim as i32 + 2)).sqrt();
    let holder_ratio = ratio(grad, rhs);
    let degenerate = integral == 0.0;
    Ok(RegularityDiagnostics { mean_value_ratio, oscillation_ratios, holder_ratio, degenerate })
}

/// Runs the dynamics on `Λ` and on `y + Λ` with the shifted disorder and shifted noise keys and
/// returns `sup |φ(x) - φ'(x + y)|` over all sites and sample times.
pub fn shift_covariance_check(
    lattice: &LatticeBox,
    y: &[i64],
    eta: &VertexField,
    cfg: &LangevinConfig,
    seed: u64,
) -> Result<f64> {
    if y.len() != lattice.dim() {
        return Err(Error::InvalidInput("shift has the wrong dimension".into()));
    }
    let center: Vec<i64> = lattice.center().iter().zip(y).map(|(c, s)| c + s).collect();
    let shifted = LatticeBox::new(lattice.dim(), &center, lattice.radius())?;
    let eta = if eta.lattice() == lattice { eta.clone() } else { crate::ground_state::restrict(eta, lattice)? };
    let eta_shifted = shift_field(&eta, y)?;
    let mut cfg_shifted = cfg.clone();
    if let Some(psi) = &cfg.boundary {
        cfg_shifted.boundary = Some(shift_field(psi, y)?);
    }
    let stream = SeededStream::new(seed, "noise");
    let rec = RecordOptions { probes: Vec::new(), snapshots: true };
    let a = simulate_with_key_shift(lattice, &eta, cfg, &stream, &rec, None, None)?;
    let b = simulate_with_key_shift(&shifted, &eta_shifted, &cfg_shifted, &stream, &rec, Some(y), None)?;
    let mut sup: f64 = 0.0;
    for (fa, fb) in a.snapshots.iter().chain([&a.final_state]).zip(b.snapshots.iter().chain([&b.final_state])) {
        for (va, vb) in fa.values().iter().zip(fb.values()) {
            let d = (va - vb).abs();
            if d.is_nan() {
                return Ok(f64::NAN);
            }
            sup = sup.max(d);
        }
    }
    Ok(sup)
}

/// Accumulates `(⟨φ(x)⟩, ⟨φ(x)²⟩)` per disorder sample for the decomposition
/// `E⟨φ²⟩ = E[Var_μ φ] + E[⟨φ⟩²]`.
#[derive(Clone, Copy, Debug, Default)]
pub struct VarianceDecomposition {
    n: usize,
    second: CompensatedSum,
    thermal_variance: CompensatedSum,
    mean_sq: CompensatedSum,
}

impl VarianceDecomposition {
    pub fn push(&mut self, thermal_mean: f64, thermal_second_moment: f64) {
        self.n += 1;
        let m2 = thermal_mean * thermal_mean;
        self.second.add(thermal_second_moment);
        self.mean_sq.add(m2);
        self.thermal_variance.add(thermal_second_moment - m2);
    }

    pub fn count(&self) -> usize {
        self.n
    }

    /// `E⟨φ²⟩`.
    pub fn annealed_second_moment(&self) -> f64 {
        self.second.value() / self.n as f64
    }

    /// `E[Var_μ φ]`.
    pub fn mean_thermal_variance(&self) -> f64 {
        self.thermal_variance.value() / self.n as f64
    }

    /// `E[⟨φ⟩²]`.
    pub fn disorder_second_moment(&self) -> f64 {
        self.mean_sq.value() / self.n as f64
    }

    /// `|E⟨φ²⟩ - E[Var] - E[⟨φ⟩²]|` relative to `E⟨φ²⟩`.
    pub fn identity_defect(&self) -> f64 {
        let total = self.annealed_second_moment();
        let d = (total - self.mean_thermal_variance() - self.disorder_second_moment()).abs();
        if total == 0.0 {
            d
        } else {
            d / total.abs()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn delta(b: &LatticeBox, p: &[i64]) -> VertexField {
        let mut f = VertexField::zeros(b);
        f.set(p, 1.0).unwrap();
        f
    }

    #[test]
    fn weighted_norm_examples() {
        let b = LatticeBox::centered(2, 3).unwrap();
        assert!((weighted_norm(&delta(&b, &[0, 0])) - 1.0).abs() < 1e-15);
        assert!((weighted_norm(&delta(&b, &[2, 0])) - (-1.0f64).exp()).abs() < 1e-15);
        let far = LatticeBox::new(1, &[60], 5).unwrap();
        let f = VertexField::from_fn(&far, |_| 1.0);
        assert!(weighted_norm(&f) < 1e-8);
    }

    #[test]
    fn gradient_difference_examples() {
        let b = LatticeBox::centered(1, 1).unwrap();
        let mut phi1 = VertexField::zeros(&b);
        phi1.set(&[0], 1.0).unwrap();
        let phi0 = VertexField::zeros(&b);
        assert_eq!(sup_gradient_difference(&phi0, &phi1, &b).unwrap(), 1.0);
        assert_eq!(sup_gradient_difference(&phi1, &phi1, &b).unwrap(), 0.0);
        let shifted = VertexField::from_fn(&b, |p| phi1.get(p).unwrap() + 4.0);
        assert_eq!(sup_gradient_difference(&phi1, &shifted, &b).unwrap(), 0.0);
        let big = LatticeBox::centered(1, 3).unwrap();
        assert!(sup_gradient_difference(&phi0, &phi1, &big).is_err());
    }

    #[test]
    fn spatial_average_examples() {
        let b = LatticeBox::centered(1, 1).unwrap();
        assert!((spatial_average(&delta(&b, &[0]), &b).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let c = LatticeBox::centered(2, 4).unwrap();
        let odd = VertexField::from_fn(&c, |p| (p[0] * 3 + p[1]) as f64);
        assert_eq!(spatial_average(&odd, &LatticeBox::centered(2, 2).unwrap()).unwrap(), 0.0);
    }

    #[test]
    fn power_law_examples() {
        let pts: Vec<_> = [2usize, 4, 8, 16]
            .iter()
            .map(|&l| ScalingPoint { scale: l, value: 7.0 * (l as f64).powf(-0.5), stderr: 0.0 })
            .collect();
        let fit = fit_power_law(&pts).unwrap();
        assert!((fit.alpha - 0.5).abs() < 1e-12 && (fit.prefactor - 7.0).abs() < 1e-12);
        let flat: Vec<_> = pts.iter().map(|p| ScalingPoint { value: 3.0, ..*p }).collect();
        let fit = fit_power_law(&flat).unwrap();
        assert!(fit.alpha.abs() < 1e-12);
        let mut bad = pts.clone();
        bad[1].value = 0.0;
        assert!(fit_power_law(&bad).is_err());
    }

    #[test]
    fn series_validation() {
        assert!(ScalingSeries::new(vec![(4, 1.0, 0.1), (4, 0.5, 0.1)]).is_err());
        assert!(ScalingSeries::new(vec![(4, 1.0, -0.1), (8, 0.5, 0.1)]).is_err());
        let s = ScalingSeries::new(vec![(2, 0.0, 0.0), (4, 0.0, 0.0)]).unwrap();
        assert!(s.is_degenerate());
    }

    #[test]
    fn oscillation_examples() {
        let b = LatticeBox::centered(1, 1).unwrap();
        let frames: Vec<VertexField> = (0..5).map(|t| delta(&b, &[0]).scaled(t as f64)).collect();
        let single = LatticeBox::centered(1, 0).unwrap();
        assert_eq!(oscillation(&frames, 1, 4, &single).unwrap(), 3.0);
        let constant: Vec<VertexField> = (0..3).map(|_| VertexField::from_fn(&b, |_| 2.0)).collect();
        assert_eq!(oscillation(&constant, 0, 2, &b).unwrap(), 0.0);
        assert!(oscillation(&frames, 3, 2, &b).is_err());
    }

    #[test]
    fn zero_difference_is_degenerate() {
        let b = LatticeBox::centered(2, 4).unwrap();
        let frames = vec![VertexField::zeros(&b); 17];
        let times: Vec<f64> = (0..17).map(|k| k as f64).collect();
        let r = regularity_diagnostics(&frames, &times, 4).unwrap();
        assert!(r.degenerate && r.holder_ratio.is_none() && r.mean_value_ratio.is_none());
        assert!(regularity_diagnostics(&frames, &times, 2).is_err());
    }

    #[test]
    fn wasserstein_examples() {
        let b = LatticeBox::centered(2, 2).unwrap();
        let f = VertexField::from_fn(&b, |p| p[0] as f64);
        let same = vec![(f.clone(), f.clone()); 3];
        assert_eq!(empirical_wasserstein_upper(&same).unwrap(), (0.0, 0.0));
        let g = VertexField::from_fn(&b, |p| f.get(p).unwrap() + if p.iter().all(|&c| c == 0) { 1.0 } else { 0.0 });
        let (m, _) = empirical_wasserstein_upper(&[(f.clone(), g.clone()), (g, f)]).unwrap();
        assert!((m - 1.0).abs() < 1e-15);
    }

    #[test]
    fn decomposition_is_exact() {
        let mut acc = VarianceDecomposition::default();
        for k in 0..50 {
            let m = (k as f64 * 0.37).sin();
            acc.push(m, m * m + 0.5 + 0.01 * k as f64);
        }
        assert!(acc.identity_defect() < 1e-12);
    }
}
