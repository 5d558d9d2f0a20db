//! Langevin dynamics on a box, the shared-noise coupling of two boxes, and the DLR
//! resampling check.
//!
//! The continuous dynamics is
//! `dφ(x) = [Σ_{e∋x} V'(∇φ(e)) + λη(x)] dt + √2 dB(x)` in `Λ`, `φ = ψ` on `∂Λ`,
//! discretized by the explicit update of [`step`]. Increments are keyed by absolute
//! coordinate and step index (see [`crate::disorder`]), so two boxes driven by the same
//! stream share their noise wherever they overlap.
//!
//! Two increment schedules are available. [`Integrator::EulerMaruyama`] draws an independent
//! standard normal per site and step. [`Integrator::LeimkuhlerMatthews`] (the default) uses
//! `ξ_n = (ζ_n + ζ_{n+1})/2` from consecutive keyed draws. Sums of these increments over many
//! steps have the Brownian variance, and the stationary covariance of the quadratic model is
//! reproduced exactly instead of with an `O(dt)` bias.

use std::f64::consts::SQRT_2;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use wide::f64x4;

use crate::disorder::SeededStream;
use crate::ground_state::restrict;
use crate::lattice::{Edge, LatticeBox, Point, VertexField};
use crate::potential::Potential;
use crate::stats::{batch_means, MeanAccumulator, DEFAULT_BATCHES};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Integrator {
    EulerMaruyama,
    #[default]
    LeimkuhlerMatthews,
}

#[derive(Clone, Debug)]
pub struct LangevinConfig {
    pub dt: f64,
    pub total_time: f64,
    pub burn_in: f64,
    /// Record every `stride` steps after burn-in.
    pub stride: usize,
    pub lambda: f64,
    pub potential: Potential,
    /// Boundary values `ψ` on `∂Λ`; zero when absent.
    pub boundary: Option<VertexField>,
    pub integrator: Integrator,
}

impl LangevinConfig {
    pub fn new(dt: f64, total_time: f64, burn_in: f64, lambda: f64, potential: Potential) -> Self {
        Self {
            dt,
            total_time,
            burn_in,
            stride: 1,
            lambda,
            potential,
            boundary: None,
            integrator: Integrator::default(),
        }
    }

    /// Largest admissible step, `1/(4d·c₊)`.
    pub fn max_dt(dim: usize, potential: &Potential) -> f64 {
        1.0 / (4.0 * dim as f64 * potential.c_plus())
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        let bound = Self::max_dt(dim, &self.potential);
        if !(self.dt > 0.0 && self.dt <= bound * (1.0 + 1e-12)) {
            return Err(Error::Config(format!(
                "dt = {} violates the stability bound 0 < dt ≤ 1/(4d·c₊) = {bound}",
                self.dt
            )));
        }
        if !(self.burn_in >= 0.0 && self.burn_in < self.total_time) {
            return Err(Error::Config(format!(
                "burn-in {} must lie in [0, total time {})",
                self.burn_in, self.total_time
            )));
        }
        if self.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        Ok(())
    }

    pub fn steps(&self) -> u64 {
        (self.total_time / self.dt).round() as u64
    }

    pub fn burn_in_steps(&self) -> u64 {
        (self.burn_in / self.dt).round() as u64
    }
}

/// One explicit update `φ'(x) = φ(x) + dt·[Σ_{e∋x} V'(∇φ(e)) + λη(x)] + √2·ΔB(x)` in `Λ`,
/// `φ' = ψ` on `∂Λ`. `increments` are the Brownian increments `ΔB` (variance `dt`), stored
/// like a vertex field.
pub fn step(phi: &VertexField, eta: &VertexField, cfg: &LangevinConfig, increments: &VertexField) -> Result<VertexField> {
    let lattice = phi.lattice();
    cfg.validate(lattice.dim())?;
    if eta.lattice() != lattice || increments.lattice() != lattice {
        return Err(Error::InvalidInput("field, disorder and increments must share one box".into()));
    }
    let mut drift = vec![0.0; lattice.storage_len()];
    Drift::new(lattice, &cfg.potential).eval(phi.values(), eta.values(), cfg.lambda, &mut drift);
    let mut out = phi.clone();
    let vals = out.values_mut();
    for &x in lattice.interior() {
        vals[x] = phi.at(x) + cfg.dt * drift[x] + SQRT_2 * increments.at(x);
    }
    if let Some(psi) = &cfg.boundary {
        for &o in lattice.boundary() {
            vals[o] = psi.at(o);
        }
    } else {
        for &o in lattice.boundary() {
            vals[o] = 0.0;
        }
    }
    Ok(out)
}

/// Drift evaluation over the interior rows of a box (runs along the last axis), with each
/// edge flux computed once.
#[derive(Clone, Debug)]
pub(crate) struct Drift {
    strides: Vec<usize>,
    row_len: usize,
    /// Row start offsets and, per row, the axes whose lower neighbour row lies on `∂Λ`.
    rows: Vec<(usize, Vec<usize>)>,
    kind: PrimeKind,
    buf: Vec<f64>,
}

#[derive(Clone, Debug)]
enum PrimeKind {
    Linear,
    Cosine(f64),
    Custom(Potential),
}

impl PrimeKind {
    /// Replaces every `t` in `buf` by `V'(t)`. The cosine branch is vectorized; it pads the
    /// tail so every entry goes through the same arithmetic.
    #[inline]
    fn apply(&self, buf: &mut [f64]) {
        match self {
            PrimeKind::Linear => {}
            PrimeKind::Cosine(kappa) => {
                let k = f64x4::splat(*kappa);
                let mut chunks = buf.chunks_exact_mut(4);
                for c in &mut chunks {
                    let t = f64x4::new([c[0], c[1], c[2], c[3]]);
                    c.copy_from_slice(&(t - k * t.sin()).to_array());
                }
                let rest = chunks.into_remainder();
                if !rest.is_empty() {
                    let mut pad = [0.0; 4];
                    pad[..rest.len()].copy_from_slice(rest);
                    let t = f64x4::new(pad);
                    let out = (t - k * t.sin()).to_array();
                    rest.copy_from_slice(&out[..rest.len()]);
                }
            }
            PrimeKind::Custom(v) => {
                for t in buf.iter_mut() {
                    *t = v.prime(*t);
                }
            }
        }
    }
}

impl Drift {
    pub(crate) fn new(lattice: &LatticeBox, potential: &Potential) -> Self {
        let d = lattice.dim();
        let row_len = 2 * lattice.radius() + 1;
        let rows = lattice
            .interior()
            .chunks(row_len)
            .map(|r| {
                let s = r[0];
                let lower = (0..d - 1).filter(|&a| lattice.local_coord(s, a) == 1).collect();
                (s, lower)
            })
            .collect();
        let kind = match potential {
            Potential::Quadratic => PrimeKind::Linear,
            Potential::Cosine { kappa } => PrimeKind::Cosine(*kappa),
            Potential::Custom(_) => PrimeKind::Custom(potential.clone()),
        };
        Self { strides: lattice.strides().to_vec(), row_len, rows, kind, buf: vec![0.0; row_len] }
    }

    /// `acc(x) = Σ_{e∋x} V'(∇φ(e)) + λη(x)` on the interior; other entries of `acc` are scratch.
    pub(crate) fn eval(&mut self, phi: &[f64], eta: &[f64], lambda: f64, acc: &mut [f64]) {
        let n = self.row_len;
        let buf = &mut self.buf;
        for (s, _) in &self.rows {
            for i in *s..s + n {
                acc[i] = lambda * eta[i];
            }
        }
        let last = self.strides.len() - 1;
        for (s, lower) in &self.rows {
            let s = *s;
            for &st in &self.strides {
                for i in 0..n {
                    buf[i] = phi[s + st + i] - phi[s + i];
                }
                self.kind.apply(buf);
                for i in 0..n {
                    acc[s + i] += buf[i];
                }
                for i in 0..n {
                    acc[s + st + i] -= buf[i];
                }
            }
            for &axis in lower {
                let st = self.strides[axis];
                for i in 0..n {
                    buf[i] = phi[s - st + i] - phi[s + i];
                }
                self.kind.apply(buf);
                for i in 0..n {
                    acc[s + i] += buf[i];
                }
            }
            let st = self.strides[last];
            let mut one = [phi[s - st] - phi[s]];
            self.kind.apply(&mut one);
            acc[s] += one[0];
        }
    }
}

/// Coordinate keys for every interior site, optionally with the coordinates shifted by
/// `-key_shift` (the keys of `y + Λ` under `τ_y`).
fn site_keys(lattice: &LatticeBox, stream: &SeededStream, key_shift: Option<&[i64]>) -> Vec<u64> {
    let mut keys = vec![0u64; lattice.storage_len()];
    for &x in lattice.interior() {
        let mut p = lattice.point_of(x);
        if let Some(s) = key_shift {
            for (c, sh) in p.iter_mut().zip(s) {
                *c -= sh;
            }
        }
        keys[x] = stream.site_key(&p);
    }
    keys
}

/// A single Markov chain: state, scratch buffers and keyed noise.
pub(crate) struct Chain {
    lattice: LatticeBox,
    drift: Drift,
    phi: Vec<f64>,
    acc: Vec<f64>,
    eta: Vec<f64>,
    keys: Vec<u64>,
    prev_noise: Vec<f64>,
    lambda: f64,
    dt: f64,
    integrator: Integrator,
    step_index: u64,
}

impl Chain {
    pub(crate) fn new(
        lattice: &LatticeBox,
        eta: &VertexField,
        cfg: &LangevinConfig,
        stream: &SeededStream,
        key_shift: Option<&[i64]>,
    ) -> Result<Self> {
        cfg.validate(lattice.dim())?;
        let eta = if eta.lattice() == lattice { eta.clone() } else { restrict(eta, lattice)? };
        let mut phi = vec![0.0; lattice.storage_len()];
        if let Some(psi) = &cfg.boundary {
            if psi.lattice() != lattice {
                return Err(Error::InvalidInput(format!("boundary data on {} for box {lattice}", psi.lattice())));
            }
            for &o in lattice.boundary() {
                phi[o] = psi.at(o);
            }
        }
        let mut chain = Self {
            lattice: lattice.clone(),
            drift: Drift::new(lattice, &cfg.potential),
            acc: vec![0.0; lattice.storage_len()],
            eta: eta.into_values(),
            keys: Vec::new(),
            prev_noise: vec![0.0; lattice.storage_len()],
            phi,
            lambda: cfg.lambda,
            dt: cfg.dt,
            integrator: cfg.integrator,
            step_index: 0,
        };
        chain.rekey(stream, key_shift);
        Ok(chain)
    }

    /// Switches the noise stream and restarts the draw index at 0.
    pub(crate) fn rekey(&mut self, stream: &SeededStream, key_shift: Option<&[i64]>) {
        self.keys = site_keys(&self.lattice, stream, key_shift);
        self.step_index = 0;
        if self.integrator == Integrator::LeimkuhlerMatthews {
            for &x in self.lattice.interior() {
                self.prev_noise[x] = SeededStream::gaussian(self.keys[x], 0);
            }
        }
    }

    pub(crate) fn set_interior(&mut self, values: &[f64]) {
        for &x in self.lattice.interior() {
            self.phi[x] = values[x];
        }
    }

    pub(crate) fn state(&self) -> &[f64] {
        &self.phi
    }

    pub(crate) fn advance(&mut self) {
        let Chain { lattice, drift, phi, acc, eta, keys, prev_noise, .. } = self;
        drift.eval(phi, eta, self.lambda, acc);
        let dt = self.dt;
        let sqrt_dt = dt.sqrt();
        let n = self.step_index;
        match self.integrator {
            Integrator::EulerMaruyama => {
                for &x in lattice.interior() {
                    let xi = SeededStream::gaussian(keys[x], n);
                    phi[x] = phi[x] + dt * acc[x] + SQRT_2 * (sqrt_dt * xi);
                }
            }
            Integrator::LeimkuhlerMatthews => {
                for &x in lattice.interior() {
                    let next = SeededStream::gaussian(keys[x], n + 1);
                    let xi = (prev_noise[x] + next) * 0.5;
                    prev_noise[x] = next;
                    phi[x] = phi[x] + dt * acc[x] + SQRT_2 * (sqrt_dt * xi);
                }
            }
        }
        self.step_index += 1;
    }

    pub(crate) fn check_finite(&self) -> Result<()> {
        if self.lattice.interior().iter().all(|&x| self.phi[x].is_finite()) {
            Ok(())
        } else {
            Err(Error::Unstable(format!("non-finite height after {} steps on {}", self.step_index, self.lattice)))
        }
    }

    pub(crate) fn field(&self) -> VertexField {
        VertexField::from_storage(&self.lattice, self.phi.clone()).expect("chain storage matches its box")
    }
}

/// What [`simulate`] records besides the per-site accumulators.
#[derive(Clone, Debug, Default)]
pub struct RecordOptions {
    /// Sites whose heights are recorded at every sample.
    pub probes: Vec<Point>,
    /// Keep a full copy of the field at every sample.
    pub snapshots: bool,
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub lattice: LatticeBox,
    /// Sample times (after burn-in, every `stride` steps).
    pub times: Vec<f64>,
    /// `probe_series[k][j]`: height at probe `k`, sample `j`.
    pub probe_series: Vec<Vec<f64>>,
    pub snapshots: Vec<VertexField>,
    /// Per-site sums over samples of `φ` and `φ²`.
    pub site_sum: Vec<f64>,
    pub site_sum_sq: Vec<f64>,
    pub samples: usize,
    pub final_state: VertexField,
}

impl Trajectory {
    /// Time-averaged `φ(x)`.
    pub fn mean_at(&self, p: &[i64]) -> Result<f64> {
        let o = self.lattice.closure_offset(p)?;
        Ok(self.site_sum[o] / self.samples as f64)
    }

    /// Time-averaged `φ(x)²`.
    pub fn second_moment_at(&self, p: &[i64]) -> Result<f64> {
        let o = self.lattice.closure_offset(p)?;
        Ok(self.site_sum_sq[o] / self.samples as f64)
    }

    /// Batch-means estimate and standard error of the time-averaged height at probe `k`.
    pub fn probe_mean(&self, k: usize) -> (f64, f64) {
        batch_means(&self.probe_series[k], DEFAULT_BATCHES)
    }

    /// Batch-means estimate and standard error of the thermal variance at probe `k`.
    pub fn probe_variance(&self, k: usize) -> (f64, f64) {
        crate::stats::batch_variance(&self.probe_series[k], DEFAULT_BATCHES)
    }
}

/// Runs the dynamics from `φ ≡ 0` (and `ψ` on the boundary) for `total_time`.
pub fn simulate(
    lattice: &LatticeBox,
    eta: &VertexField,
    cfg: &LangevinConfig,
    stream: &SeededStream,
    record: &RecordOptions,
) -> Result<Trajectory> {
    simulate_with_key_shift(lattice, eta, cfg, stream, record, None, None)
}

/// [`simulate`] with noise keys taken at `x - key_shift` and an optional initial interior
/// state.
pub fn simulate_with_key_shift(
    lattice: &LatticeBox,
    eta: &VertexField,
    cfg: &LangevinConfig,
    stream: &SeededStream,
    record: &RecordOptions,
    key_shift: Option<&[i64]>,
    initial: Option<&VertexField>,
) -> Result<Trajectory> {
    let mut chain = Chain::new(lattice, eta, cfg, stream, key_shift)?;
    if let Some(init) = initial {
        if init.lattice() != lattice {
            return Err(Error::InvalidInput("initial state lives on another box".into()));
        }
        chain.set_interior(init.values());
    }
    let probes: Vec<usize> = record.probes.iter().map(|p| lattice.closure_offset(p)).collect::<Result<_>>()?;
    let steps = cfg.steps();
    let burn = cfg.burn_in_steps();
    let stride = cfg.stride as u64;
    let n = lattice.storage_len();
    let mut traj = Trajectory {
        lattice: lattice.clone(),
        times: Vec::new(),
        probe_series: vec![Vec::new(); probes.len()],
        snapshots: Vec::new(),
        site_sum: vec![0.0; n],
        site_sum_sq: vec![0.0; n],
        samples: 0,
        final_state: VertexField::zeros(lattice),
    };
    for k in 1..=steps {
        chain.advance();
        if k % 1024 == 0 {
            chain.check_finite()?;
        }
        if k > burn && (k - burn) % stride == 0 {
            let phi = chain.state();
            for &x in lattice.interior() {
                traj.site_sum[x] += phi[x];
                traj.site_sum_sq[x] += phi[x] * phi[x];
            }
            for (series, &o) in traj.probe_series.iter_mut().zip(&probes) {
                series.push(phi[o]);
            }
            if record.snapshots {
                traj.snapshots.push(chain.field());
            }
            traj.times.push(k as f64 * cfg.dt);
            traj.samples += 1;
        }
    }
    chain.check_finite()?;
    traj.final_state = chain.field();
    Ok(traj)
}

/// Parameters of a shared-noise coupling run.
#[derive(Clone, Debug)]
pub struct CouplingConfig {
    /// `burn_in` is the independent pre-equilibration time of each marginal; the coupled phase
    /// lasts `total_time - burn_in`.
    pub dynamics: LangevinConfig,
    /// Radius `L` of the comparison box `Λ_L ⊆ Λ0 ∩ Λ1`.
    pub comparison_radius: usize,
    /// Record the realized environment on `E(Λ_L)` every this many coupled steps.
    pub environment_stride: usize,
    /// Keep `w = φ0 - φ1` on `Λ_L⁺` every this many coupled steps.
    pub difference_stride: Option<usize>,
    /// Drive both pre-equilibrations with one stream instead of two independent ones.
    pub shared_preparation: bool,
}

/// Realized environment statistics over all recorded `(t, e)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EnvironmentRange {
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

#[derive(Clone, Debug)]
pub struct CoupledOutcome {
    pub phi0: VertexField,
    pub phi1: VertexField,
    /// `sup_{e∈E(Λ_{L/2})} |∇φ0(e) - ∇φ1(e)|` at the final time.
    pub sup_gradient_difference: f64,
    pub environment: EnvironmentRange,
    /// `w(t, ·)` on `Λ_L⁺` with its coupled-phase times.
    pub difference_times: Vec<f64>,
    pub difference: Vec<VertexField>,
    /// `sup` over the overlap interior of `|w|` at the end of the coupled phase.
    pub final_sup_difference: f64,
}

fn intersect(b0: &LatticeBox, b1: &LatticeBox) -> Option<(Point, Point)> {
    let d = b0.dim();
    let mut lo = vec![0; d];
    let mut hi = vec![0; d];
    for i in 0..d {
        lo[i] = (b0.center()[i] - b0.radius() as i64).max(b1.center()[i] - b1.radius() as i64);
        hi[i] = (b0.center()[i] + b0.radius() as i64).min(b1.center()[i] + b1.radius() as i64);
        if lo[i] > hi[i] {
            return None;
        }
    }
    Some((lo, hi))
}

/// Couples the dynamics on `box0` and `box1` through shared noise.
///
/// Each marginal starts from `φ ≡ 0` and is pre-equilibrated for `burn_in` with its own
/// stream (purposes `pre0`, `pre1`); then both evolve with the `noise` stream, whose
/// increments coincide at every shared coordinate and step.
pub fn coupled_simulate(
    box0: &LatticeBox,
    box1: &LatticeBox,
    eta: &VertexField,
    cfg: &CouplingConfig,
    stream: &SeededStream,
) -> Result<CoupledOutcome> {
    let dyn_cfg = &cfg.dynamics;
    if box0.dim() != box1.dim() || intersect(box0, box1).is_none() {
        return Err(Error::InvalidInput(format!("{box0} and {box1} have no interior overlap")));
    }
    let compare = LatticeBox::centered(box0.dim(), cfg.comparison_radius)?;
    if !box0.contains_box(&compare) || !box1.contains_box(&compare) {
        return Err(Error::InvalidInput(format!("comparison box {compare} is not inside both boxes")));
    }
    let (pre0, pre1) = if cfg.shared_preparation { ("pre", "pre") } else { ("pre0", "pre1") };
    let mut c0 = Chain::new(box0, eta, dyn_cfg, &stream.with_purpose(pre0), None)?;
    let mut c1 = Chain::new(box1, eta, dyn_cfg, &stream.with_purpose(pre1), None)?;
    for _ in 0..dyn_cfg.burn_in_steps() {
        c0.advance();
        c1.advance();
    }
    c0.check_finite()?;
    c1.check_finite()?;
    let shared = stream.with_purpose("noise");
    c0.rekey(&shared, None);
    c1.rekey(&shared, None);

    let map0 = box0.sub_box_offsets_closure(&compare)?;
    let map1 = box1.sub_box_offsets_closure(&compare)?;
    let env_edges: Vec<Edge> = compare.inner_edges().collect();
    let mut env = EnvironmentRange { min: f64::INFINITY, max: f64::NEG_INFINITY, count: 0 };
    let record_env = |c0: &Chain, c1: &Chain, env: &mut EnvironmentRange| {
        for e in &env_edges {
            let h = e.head(&compare);
            let g0 = c0.phi[map0[h]] - c0.phi[map0[e.base]];
            let g1 = c1.phi[map1[h]] - c1.phi[map1[e.base]];
            let a = dyn_cfg.potential.averaged_environment(g0, g1);
            env.min = env.min.min(a);
            env.max = env.max.max(a);
            env.count += 1;
        }
    };
    let snapshot = |c0: &Chain, c1: &Chain| -> VertexField {
        let mut w = VertexField::zeros(&compare);
        for off in 0..compare.storage_len() {
            if compare.in_closure(off) {
                w.values_mut()[off] = c0.phi[map0[off]] - c1.phi[map1[off]];
            }
        }
        w
    };

    let coupled_steps = dyn_cfg.steps() - dyn_cfg.burn_in_steps();
    let mut difference = Vec::new();
    let mut difference_times = Vec::new();
    if let Some(s) = cfg.difference_stride {
        if s == 0 {
            return Err(Error::Config("difference stride must be at least 1".into()));
        }
        difference.push(snapshot(&c0, &c1));
        difference_times.push(0.0);
    }
    let env_stride = cfg.environment_stride.max(1) as u64;
    record_env(&c0, &c1, &mut env);
    for k in 1..=coupled_steps {
        c0.advance();
        c1.advance();
        if k % env_stride == 0 {
            record_env(&c0, &c1, &mut env);
        }
        if let Some(s) = cfg.difference_stride {
            if k % s as u64 == 0 {
                difference.push(snapshot(&c0, &c1));
                difference_times.push(k as f64 * dyn_cfg.dt);
            }
        }
        if k % 1024 == 0 {
            c0.check_finite()?;
            c1.check_finite()?;
        }
    }
    c0.check_finite()?;
    c1.check_finite()?;
    let phi0 = c0.field();
    let phi1 = c1.field();
    let window = LatticeBox::centered(box0.dim(), cfg.comparison_radius / 2)?;
    let sup = crate::observables::sup_gradient_difference(&phi0, &phi1, &window)?;
    let (lo, hi) = intersect(box0, box1).expect("checked above");
    let mut final_sup: f64 = 0.0;
    for &o in box0.interior() {
        let p = box0.point_of(o);
        if p.iter().zip(lo.iter().zip(&hi)).all(|(c, (l, h))| c >= l && c <= h) {
            final_sup = final_sup.max((phi0.at(o) - phi1.get(&p)?).abs());
        }
    }
    Ok(CoupledOutcome {
        phi0,
        phi1,
        sup_gradient_difference: sup,
        environment: env,
        difference_times,
        difference,
        final_sup_difference: final_sup,
    })
}

/// A function of finitely many heights.
#[derive(Clone)]
pub struct LocalObservable {
    pub name: String,
    pub support: Vec<Point>,
    eval: Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>,
}

impl LocalObservable {
    pub fn new(name: impl Into<String>, support: Vec<Point>, eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), support, eval: Arc::new(eval) }
    }

    pub fn height(p: &[i64]) -> Self {
        Self::new(format!("phi{p:?}"), vec![p.to_vec()], |v| v[0])
    }

    pub fn constant(c: f64) -> Self {
        Self::new(format!("const({c})"), Vec::new(), move |_| c)
    }

    fn offsets(&self, lattice: &LatticeBox) -> Result<Vec<usize>> {
        self.support.iter().map(|p| lattice.closure_offset(p)).collect()
    }

    fn apply(&self, phi: &[f64], offsets: &[usize], buf: &mut Vec<f64>) -> f64 {
        buf.clear();
        buf.extend(offsets.iter().map(|&o| phi[o]));
        (self.eval)(buf)
    }
}

impl std::fmt::Debug for LocalObservable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "LocalObservable({}, support {:?})", self.name, self.support)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DlrEstimate {
    pub direct: f64,
    pub direct_stderr: f64,
    pub resampled: f64,
    pub resampled_stderr: f64,
    pub pooled_stderr: f64,
}

impl DlrEstimate {
    pub fn discrepancy_in_stderrs(&self) -> f64 {
        let diff = (self.direct - self.resampled).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.pooled_stderr
        }
    }
}

/// Resampling schedule of the inner chains.
#[derive(Clone, Debug)]
pub struct DlrOptions {
    /// Number of big-box snapshots used as boundary data.
    pub snapshots: usize,
    /// Burn-in and averaging time of each inner chain.
    pub inner_burn_in: f64,
    pub inner_time: f64,
}

/// Estimates `⟨f⟩` directly from the big-box chain and by re-running the inner box with
/// boundary values frozen from big-box samples.
pub fn dlr_resample_check(
    big: &LatticeBox,
    inner: &LatticeBox,
    eta: &VertexField,
    cfg: &LangevinConfig,
    observable: &LocalObservable,
    stream: &SeededStream,
    opts: &DlrOptions,
) -> Result<DlrEstimate> {
    if !big.contains_closure_of(inner) {
        return Err(Error::InvalidInput(format!("closure of {inner} is not inside {big}")));
    }
    if let Some(p) = observable.support.iter().find(|p| !inner.contains_point(p)) {
        return Err(Error::OutOfDomain(format!("observable support {p:?} exceeds {inner}")));
    }
    if opts.snapshots < 2 {
        return Err(Error::InvalidInput("need at least two snapshots".into()));
    }
    let big_offsets = observable.offsets(big)?;
    let inner_offsets = observable.offsets(inner)?;
    let mut buf = Vec::new();

    // (a) direct estimate from the big chain, with snapshots spread over the sampling window
    let mut chain = Chain::new(big, eta, cfg, &stream.with_purpose("dlr-big"), None)?;
    let steps = cfg.steps();
    let burn = cfg.burn_in_steps();
    let sample_steps = (steps - burn) / cfg.stride as u64;
    let snap_every = (sample_steps / opts.snapshots as u64).max(1) * cfg.stride as u64;
    let mut series = Vec::new();
    let mut snaps = Vec::new();
    for k in 1..=steps {
        chain.advance();
        if k > burn && (k - burn) % cfg.stride as u64 == 0 {
            series.push(observable.apply(chain.state(), &big_offsets, &mut buf));
        }
        if k > burn && (k - burn) % snap_every == 0 && snaps.len() < opts.snapshots {
            snaps.push(chain.field());
        }
    }
    chain.check_finite()?;
    let (direct, direct_stderr) = batch_means(&series, DEFAULT_BATCHES);

    // (b) inner chains with frozen boundary values
    let eta_inner = restrict(eta, inner)?;
    let mut per_snapshot = MeanAccumulator::default();
    for (k, snap) in snaps.iter().enumerate() {
        let psi = restrict(snap, inner)?;
        let mut inner_cfg = cfg.clone();
        inner_cfg.boundary = Some(psi.clone());
        inner_cfg.burn_in = opts.inner_burn_in;
        inner_cfg.total_time = opts.inner_burn_in + opts.inner_time;
        let mut c = Chain::new(inner, &eta_inner, &inner_cfg, &stream.with_purpose(format!("dlr-inner-{k}")), None)?;
        c.set_interior(psi.values());
        let (n_steps, n_burn) = (inner_cfg.steps(), inner_cfg.burn_in_steps());
        let mut sum = 0.0;
        let mut count = 0usize;
        for j in 1..=n_steps {
            c.advance();
            if j > n_burn && (j - n_burn) % cfg.stride as u64 == 0 {
                sum += observable.apply(c.state(), &inner_offsets, &mut buf);
                count += 1;
            }
        }
        c.check_finite()?;
        per_snapshot.push(sum / count as f64);
    }
    let resampled = per_snapshot.mean();
    let resampled_stderr = per_snapshot.stderr();
    Ok(DlrEstimate {
        direct,
        direct_stderr,
        resampled,
        resampled_stderr,
        pooled_stderr: (direct_stderr * direct_stderr + resampled_stderr * resampled_stderr).sqrt(),
    })
}
