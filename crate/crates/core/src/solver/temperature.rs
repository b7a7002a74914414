//! Temperature update in conservative form for `(δ+ϱ)ϑ`.
//!
//! Advection and viscous heating are explicit. Kirchhoff diffusion, the
//! `δϑ³` sink and the compressive part of the pressure work are implicit; the
//! system is solved by Newton's method in `w = K(ϑ)`, whose Jacobian
//! `diag(A'(ϑ)/κ(ϑ)) − dt Δ_N` is symmetric positive definite.

use crate::constitutive::ConstitutiveSet;
use crate::discretization::linsolve::{DiffusionSystem, SolveOptions};
use crate::discretization::{div, stress_power, Bc, ScalarField, VectorField};
use crate::error::{Error, Result};

use super::continuity::{transport_divergence, NEG_TOL};
use super::{FluidState, RegularizationParams};

pub const NEWTON_TOL: f64 = 1e-10;
pub const NEWTON_MAX_ITER: usize = 60;

#[derive(Debug, Clone)]
pub struct TemperatureOutput {
    pub theta: ScalarField,
    /// Cellwise `S:∇u^{n+1}` used as the heating source.
    pub stress_power: Vec<f64>,
    pub newton_iterations: usize,
    pub clamps: usize,
}

/// Derivative of the Kirchhoff transform, extended by `κ(0)` below zero.
fn kappa_ext(cs: &ConstitutiveSet, theta: f64) -> f64 {
    cs.kappa.eval(theta.max(0.0))
}

#[allow(clippy::too_many_arguments)]
pub fn step_temperature(
    state: &FluidState,
    rho_new: &ScalarField,
    u_new: &VectorField,
    flux: &[Vec<f64>],
    cs: &ConstitutiveSet,
    params: &RegularizationParams,
    dt: f64,
    heat_source: f64,
) -> Result<TemperatureOutput> {
    let g = state.theta.grid;
    let n = g.len();
    let delta = params.delta;
    let th_old = &state.theta.data;
    let mu: Vec<f64> = th_old.iter().map(|&t| cs.mu.eval(t.max(0.0))).collect();
    let lam: Vec<f64> = th_old.iter().map(|&t| cs.lambda.eval(t.max(0.0))).collect();
    let heating = stress_power(u_new, &mu, &lam).data;
    let divu = div(u_new).data;
    let adv = transport_divergence(flux, th_old, &g);

    let a: Vec<f64> = rho_new.data.iter().map(|&r| delta + r).collect();
    let q: Vec<f64> = (0..n)
        .map(|k| cs.thermal_coefficient(rho_new.data[k].max(0.0)) * divu[k])
        .collect();
    let qp: Vec<f64> = q.iter().map(|&v| v.max(0.0)).collect();
    let rhs: Vec<f64> = (0..n)
        .map(|k| {
            (delta + state.rho.data[k]) * th_old[k] - dt * adv[k]
                + dt * (1.0 - delta) * heating[k]
                + dt * (-q[k]).max(0.0) * th_old[k]
                + dt * heat_source
        })
        .collect();
    let scale = rhs.iter().fold(1.0f64, |m, v| m.max(v.abs()));

    let lap = DiffusionSystem::isotropic(g, vec![0.0; n], 1.0, Bc::Neumann)?;
    let residual = |w: &[f64], th: &[f64]| -> Vec<f64> {
        let lw = lap.apply(w);
        (0..n)
            .map(|k| {
                let t = th[k];
                a[k] * t + dt * delta * t * t * t + dt * qp[k] * t + dt * lw[k] - rhs[k]
            })
            .collect()
    };
    let inv = |w: &[f64]| -> Vec<f64> { w.iter().map(|&v| cs.kirchhoff_inverse(v)).collect() };
    let max_abs = |v: &[f64]| v.iter().fold(0.0f64, |m, x| m.max(x.abs()));

    let mut w: Vec<f64> = th_old.iter().map(|&t| cs.kirchhoff(t)).collect();
    let mut th = th_old.clone();
    let mut r = residual(&w, &th);
    let mut rn = max_abs(&r);
    let mut iters = 0;
    while rn > NEWTON_TOL * scale {
        if iters >= NEWTON_MAX_ITER {
            let cell = (0..n).max_by(|&i, &j| r[i].abs().total_cmp(&r[j].abs())).unwrap_or(0);
            return Err(Error::Newton { cell, residual: rn });
        }
        iters += 1;
        let jd: Vec<f64> = (0..n)
            .map(|k| {
                let t = th[k];
                (a[k] + 3.0 * dt * delta * t * t + dt * qp[k]) / kappa_ext(cs, t)
            })
            .collect();
        let jac = DiffusionSystem::isotropic(g, jd, dt, Bc::Neumann)?;
        let neg: Vec<f64> = r.iter().map(|v| -v).collect();
        let (s, _) = jac.solve(&neg, SolveOptions::default())?;
        let mut step = 1.0;
        loop {
            let w_try: Vec<f64> = w.iter().zip(&s).map(|(a, b)| a + step * b).collect();
            let th_try = inv(&w_try);
            let r_try = residual(&w_try, &th_try);
            let rn_try = max_abs(&r_try);
            if rn_try <= (1.0 - 1e-4 * step) * rn || step < 1e-6 || !rn_try.is_finite() {
                if !rn_try.is_finite() {
                    let cell = (0..n).find(|&k| !r_try[k].is_finite()).unwrap_or(0);
                    return Err(Error::Newton {
                        cell,
                        residual: f64::INFINITY,
                    });
                }
                w = w_try;
                th = th_try;
                r = r_try;
                rn = rn_try;
                break;
            }
            step *= 0.5;
        }
    }
    let mut clamps = 0;
    for (k, t) in th.iter_mut().enumerate() {
        if *t < -NEG_TOL {
            return Err(Error::Negativity {
                field: "temperature",
                cell: k,
                value: *t,
                diagnostic: "explicit advection or pressure work too large; reduce dt".into(),
            });
        }
        if *t < 0.0 {
            *t = 0.0;
            clamps += 1;
        }
    }
    Ok(TemperatureOutput {
        theta: ScalarField { grid: g, data: th },
        stress_power: heating,
        newton_iterations: iters,
        clamps,
    })
}
