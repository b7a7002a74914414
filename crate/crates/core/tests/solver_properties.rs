//! Run-level properties of the time stepper and the recursion lemma.

#![allow(clippy::needless_range_loop)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use nslab_core::constitutive::{ConstitutiveSet, ScalarLaw};
use nslab_core::degiorgi::{recursion_lemma, RecursionParams};
use nslab_core::discretization::{Grid, ScalarField, VectorField};
use nslab_core::solver::{simulate, step_momentum, FluidState, Forcing, RegularizationParams, TimeConfig};

const PI: f64 = std::f64::consts::PI;

#[test]
fn single_viscous_mode_decays_at_the_analytic_rate() {
    let g = Grid::new_1d(128, 1.0).unwrap();
    let mut cs = ConstitutiveSet::general_split();
    let mu = 0.05;
    cs.mu = ScalarLaw::constant(mu);
    cs.lambda = ScalarLaw::constant(0.0);
    let params = RegularizationParams {
        epsilon: 0.0,
        eta: 0.01,
        delta: 0.0,
        beta: 5.0,
    };
    let rho = 1.3;
    let (dt, steps) = (1e-4, 200);
    for k in [1.0, 2.0, 3.0] {
        let mut s = FluidState::uniform(g, rho, 1.0);
        s.u = VectorField::from_fn(g, |x, _| [1e-3 * (k * PI * x).sin(), 0.0]);
        let u0 = s.u.comps[0].clone();
        let zero_flux = vec![vec![0.0; g.nx() + 1]];
        for _ in 0..steps {
            s.u = step_momentum(&s, &s.rho, &zero_flux, &cs, &params, dt).unwrap().u;
        }
        let num: f64 = s.u.comps[0].iter().zip(&u0).map(|(a, b)| a * b).sum();
        let den: f64 = u0.iter().map(|b| b * b).sum();
        let observed = -(num / den).ln() / (steps as f64 * dt);
        let expected = (2.0 * mu + params.eta) * (k * PI).powi(2) / rho;
        assert!(
            (observed / expected - 1.0).abs() < 0.02,
            "mode {k}: rate {observed} vs {expected}"
        );
    }
}

#[test]
fn mirror_symmetric_state_stays_symmetric() {
    let g = Grid::new_1d(96, 1.0).unwrap();
    let n = g.len();
    let mut s = FluidState::uniform(g, 1.0, 1.0);
    s.rho = ScalarField::from_fn(g, |x, _| {
        1.0 + 0.4 * (-((x - 0.5) / 0.15).powi(2)).exp() + 0.1 * (2.0 * PI * x).cos()
    });
    s.theta = ScalarField::from_fn(g, |x, _| 1.0 + 0.3 * (4.0 * PI * x).cos());
    s.u = VectorField::from_fn(g, |x, _| {
        [0.4 * (2.0 * PI * x).sin() * (-((x - 0.5) / 0.3).powi(2)).exp(), 0.0]
    });
    // force exact mirror images cellwise
    for i in 0..n / 2 {
        s.rho.data[n - 1 - i] = s.rho.data[i];
        s.theta.data[n - 1 - i] = s.theta.data[i];
        s.u.comps[0][n - 1 - i] = -s.u.comps[0][i];
    }
    let time = TimeConfig {
        horizon: 0.2,
        dt: 1e-3,
        snapshot_every: 50,
        ..TimeConfig::default()
    };
    let traj = simulate(
        s,
        &ConstitutiveSet::general_split(),
        RegularizationParams::default(),
        time,
        Forcing::default(),
    )
    .unwrap();
    let end = traj.last();
    let mut asym: f64 = 0.0;
    for i in 0..n / 2 {
        let j = n - 1 - i;
        asym = asym
            .max((end.rho.data[i] - end.rho.data[j]).abs())
            .max((end.theta.data[i] - end.theta.data[j]).abs())
            .max((end.u.comps[0][i] + end.u.comps[0][j]).abs());
    }
    assert!(asym <= 1e-12, "mirror asymmetry {asym:e}");
}

/// Smooth 1D state: mild temperature and density bumps at rest.
fn smooth_state(g: Grid, amp: f64) -> FluidState {
    let mut s = FluidState::uniform(g, 1.0, 1.0);
    s.rho = ScalarField::from_fn(g, |x, _| 1.0 + amp * (PI * x).cos());
    s.theta = ScalarField::from_fn(g, |x, _| 1.0 + amp * (2.0 * PI * x).cos());
    s.u = VectorField::from_fn(g, |x, _| [amp * (PI * x).sin(), 0.0]);
    s
}

fn run_smooth(g: Grid, dt: f64, horizon: f64, amp: f64) -> FluidState {
    let time = TimeConfig {
        horizon,
        dt,
        snapshot_every: usize::MAX,
        ..TimeConfig::default()
    };
    let traj = simulate(
        smooth_state(g, amp),
        &ConstitutiveSet::general_split(),
        RegularizationParams::default(),
        time,
        Forcing::default(),
    )
    .unwrap();
    traj.last().clone()
}

fn fields(s: &FluidState) -> [Vec<f64>; 3] {
    [s.rho.data.clone(), s.u.comps[0].clone(), s.theta.data.clone()]
}

fn max_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0, |m, (x, y)| m.max((x - y).abs()))
}

#[test]
fn time_step_self_convergence_is_first_order() {
    let g = Grid::new_1d(64, 1.0).unwrap();
    let runs: Vec<[Vec<f64>; 3]> = [4e-3, 2e-3, 1e-3]
        .iter()
        .map(|&dt| fields(&run_smooth(g, dt, 0.2, 0.2)))
        .collect();
    for c in 0..3 {
        let e1 = max_diff(&runs[0][c], &runs[1][c]);
        let e2 = max_diff(&runs[1][c], &runs[2][c]);
        let order = (e1 / e2).log2();
        assert!(order >= 1.0 - 0.05, "field {c}: dt order {order} ({e1:e}, {e2:e})");
    }
}

/// Average pairs of fine cells onto the coarse grid.
fn restrict(fine: &[f64]) -> Vec<f64> {
    fine.chunks(2).map(|p| 0.5 * (p[0] + p[1])).collect()
}

#[test]
fn grid_self_convergence_for_smooth_data() {
    let (dt, horizon, amp) = (2e-4, 0.05, 0.01);
    let runs: Vec<[Vec<f64>; 3]> = [32usize, 64, 128]
        .iter()
        .map(|&n| fields(&run_smooth(Grid::new_1d(n, 1.0).unwrap(), dt, horizon, amp)))
        .collect();
    for c in 0..3 {
        let e1 = max_diff(&runs[0][c], &restrict(&runs[1][c]));
        let e2 = max_diff(&runs[1][c], &restrict(&runs[2][c]));
        let order = (e1 / e2).log2();
        assert!(order >= 1.5, "field {c}: dx order {order} ({e1:e}, {e2:e})");
    }
}

#[test]
fn recursion_convergence_is_monotone_in_k() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let k_max = 40;
    for _ in 0..50 {
        let c: f64 = rng.gen_range(0.5..3.0);
        let beta1 = rng.gen_range(1.1..2.5);
        let base = RecursionParams {
            c,
            a: rng.gen_range(1.0..5.0),
            beta1,
            beta2: beta1 + rng.gen_range(0.0..1.5),
            k: 1.0,
        };
        let u0 = rng.gen_range(1e-2..c.min(1.0));
        let converges = |k: f64| {
            recursion_lemma(u0, RecursionParams { k, ..base }, k_max)
                .unwrap()
                .converged
        };
        let (mut lo, mut hi) = (1e-6, 1e12);
        assert!(!converges(lo) && converges(hi));
        for _ in 0..200 {
            let mid = (lo * hi).sqrt();
            if converges(mid) {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        for i in 0..=40 {
            let k = hi * 10f64.powf(i as f64 * 0.3);
            assert!(converges(k), "K = {k} diverges above the threshold {hi}");
        }
        let (k0, _) = base.sufficient_k(u0);
        assert!(converges(k0 * 1.000_001), "analytic K₀ = {k0} does not converge");
    }
}
