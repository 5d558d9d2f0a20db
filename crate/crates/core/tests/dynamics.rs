//! Statistical and structural tests of the Langevin sampler against the Gaussian oracle.

use rfsurf::disorder::{sample_field, DisorderLaw, SeededStream};
use rfsurf::gaussian_oracle::DirichletOperator;
use rfsurf::langevin::{simulate, Integrator, LangevinConfig, RecordOptions};
use rfsurf::stats::batch_means;
use rfsurf::{LatticeBox, Potential, VertexField};

/// Per-sample `Σ_x φ(x)²` for a zero-mean run, with its batch-means mean and standard error.
fn trace_estimate(b: &LatticeBox, cfg: &LangevinConfig, seed: u64) -> (f64, f64) {
    let probes: Vec<_> = b.interior().iter().map(|&o| b.point_of(o)).collect();
    let n = probes.len();
    let rec = RecordOptions { probes, snapshots: false };
    let eta = VertexField::zeros(b);
    let traj = simulate(b, &eta, cfg, &SeededStream::new(seed, "noise"), &rec).unwrap();
    let series: Vec<f64> = (0..traj.samples).map(|j| (0..n).map(|k| traj.probe_series[k][j].powi(2)).sum()).collect();
    batch_means(&series, 20)
}

/// Inverse of a small symmetric positive matrix by Gauss–Jordan elimination.
fn invert(mut m: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
    let n = m.len();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(i == j)).collect()).collect();
    for c in 0..n {
        let p = m[c][c];
        for j in 0..n {
            m[c][j] /= p;
            inv[c][j] /= p;
        }
        for r in 0..n {
            if r != c {
                let f = m[r][c];
                for j in 0..n {
                    m[r][j] -= f * m[c][j];
                    inv[r][j] -= f * inv[c][j];
                }
            }
        }
    }
    inv
}

#[test]
fn integrators_have_their_predicted_stationary_variance() {
    // path of 7 sites: A = tridiag(-1, 2, -1); Euler–Maruyama targets (A - dt·A²/2)⁻¹
    let b = LatticeBox::centered(1, 3).unwrap();
    let n: usize = 7;
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 2.0 } else if i.abs_diff(j) == 1 { -1.0 } else { 0.0 }).collect())
        .collect();
    let dt = LangevinConfig::max_dt(1, &Potential::Quadratic);
    let a2: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| (0..n).map(|k| a[i][k] * a[k][j]).sum()).collect()).collect();
    let em_matrix: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| a[i][j] - 0.5 * dt * a2[i][j]).collect()).collect();
    let exact: f64 = (0..n).map(|i| invert(a.clone())[i][i]).sum();
    let biased: f64 = (0..n).map(|i| invert(em_matrix.clone())[i][i]).sum();
    assert!((exact - 10.5).abs() < 1e-12);

    let mut cfg = LangevinConfig::new(dt, 40000.0, 100.0, 0.0, Potential::Quadratic);
    let (lm, lm_se) = trace_estimate(&b, &cfg, 3);
    cfg.integrator = Integrator::EulerMaruyama;
    let (em, em_se) = trace_estimate(&b, &cfg, 3);
    assert!((lm - exact).abs() <= 4.0 * lm_se, "LM trace {lm} ± {lm_se}, exact {exact}");
    assert!((em - biased).abs() <= 4.0 * em_se, "EM trace {em} ± {em_se}, predicted {biased}");
    assert!((em - exact).abs() > 4.0 * em_se, "EM bias not resolved: {em} ± {em_se} vs {exact}");
}

#[test]
fn boundary_data_shift_the_mean_by_the_harmonic_extension() {
    let b = LatticeBox::centered(2, 2).unwrap();
    let psi = VertexField::from_fn(&b, |p| if b.contains_point(p) { 0.0 } else { 0.5 * p[0] as f64 + 1.0 });
    let eta = sample_field(DisorderLaw::Rademacher, &b, &SeededStream::new(9, "disorder"));
    let mut cfg = LangevinConfig::new(LangevinConfig::max_dt(2, &Potential::Quadratic), 3000.0, 50.0, 1.0, Potential::Quadratic);
    cfg.boundary = Some(psi.clone());
    let probes = vec![vec![0, 0], vec![1, -1], vec![-2, 2]];
    let rec = RecordOptions { probes: probes.clone(), snapshots: false };
    let traj = simulate(&b, &eta, &cfg, &SeededStream::new(9, "noise"), &rec).unwrap();
    let mean = DirichletOperator::new(&b).with_tol(1e-13).mean_with_boundary(&eta, 1.0, &psi).unwrap();
    for (k, p) in probes.iter().enumerate() {
        let (m, se) = traj.probe_mean(k);
        let exact = mean.get(p).unwrap();
        assert!((m - exact).abs() <= 4.0 * se, "{p:?}: {m} ± {se} vs {exact}");
    }
    for &y in b.boundary() {
        assert_eq!(traj.final_state.values()[y], psi.values()[y]);
    }
}

#[test]
fn strong_field_time_average_tracks_the_ground_state() {
    let b = LatticeBox::centered(2, 3).unwrap();
    let v = Potential::cosine(0.5).unwrap();
    let eta = sample_field(DisorderLaw::Rademacher, &b, &SeededStream::new(4, "disorder"));
    let lambda = 20.0;
    let gs = rfsurf::ground_state::solve(&b, &eta, lambda, &v, 1e-10).unwrap();
    let cfg = LangevinConfig::new(LangevinConfig::max_dt(2, &v), 200.0, 20.0, lambda, v);
    let rec = RecordOptions { probes: vec![vec![0, 0]], snapshots: false };
    let traj = simulate(&b, &eta, &cfg, &SeededStream::new(4, "noise"), &rec).unwrap();
    let (m, _) = traj.probe_mean(0);
    let g = gs.v.get(&[0, 0]).unwrap();
    assert!((m - g).abs() < 0.1 * g.abs().max(1.0), "time average {m} vs ground state {g}");
}
