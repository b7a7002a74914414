//! Renormalized temperature inequality tested against a finite bank of
//! separable test functions `φ(t,x) = ψ(t) χ(x)`.

use serde::{Deserialize, Serialize};

use super::InequalityReport;
use crate::constitutive::RenormalizerH;
use crate::discretization::ops::centered_diff;
use crate::discretization::{div, stress_power, Bc, Grid};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};
use crate::solver::Trajectory;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TemporalProfile {
    /// `1 − s`
    Linear,
    /// `(1 − s)²`
    Quadratic,
    /// `s (1 − s)`
    Bubble,
}

/// `φ = ψ(t/T) · χ_m(x)` with `χ_m = 1 + cos(mπx/L_x)` in 1D and
/// `1 + cos(mπx/L_x) cos(mπy/L_y)` in 2D.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestFunction {
    pub profile: TemporalProfile,
    pub mode: u32,
}

impl TestFunction {
    pub fn label(&self) -> String {
        let p = match self.profile {
            TemporalProfile::Linear => "linear",
            TemporalProfile::Quadratic => "quadratic",
            TemporalProfile::Bubble => "bubble",
        };
        format!("{p}-m{}", self.mode)
    }

    /// `(ψ, ∂_tψ)` at time `t` on `[0, T]`.
    pub fn psi(&self, t: f64, horizon: f64) -> (f64, f64) {
        let s = t / horizon;
        match self.profile {
            TemporalProfile::Linear => (1.0 - s, -1.0 / horizon),
            TemporalProfile::Quadratic => ((1.0 - s).powi(2), -2.0 * (1.0 - s) / horizon),
            TemporalProfile::Bubble => (s * (1.0 - s), (1.0 - 2.0 * s) / horizon),
        }
    }

    /// `(χ, ∇χ, Δχ)` at a point.
    pub fn chi(&self, x: f64, y: f64, g: &Grid) -> (f64, [f64; 2], f64) {
        let m = self.mode as f64 * std::f64::consts::PI;
        let kx = m / g.extent[0];
        if g.dim == 1 {
            let c = (kx * x).cos();
            return (1.0 + c, [-kx * (kx * x).sin(), 0.0], -kx * kx * c);
        }
        let ky = m / g.extent[1];
        let (cx, sx) = ((kx * x).cos(), (kx * x).sin());
        let (cy, sy) = ((ky * y).cos(), (ky * y).sin());
        (
            1.0 + cx * cy,
            [-kx * sx * cy, -ky * cx * sy],
            -(kx * kx + ky * ky) * cx * cy,
        )
    }
}

/// The default bank: three temporal profiles times modes `m = 0..3`.
pub fn test_bank() -> Vec<TestFunction> {
    let mut v = Vec::with_capacity(12);
    for profile in [
        TemporalProfile::Linear,
        TemporalProfile::Quadratic,
        TemporalProfile::Bubble,
    ] {
        for mode in 0..4 {
            v.push(TestFunction { profile, mode });
        }
    }
    v
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RenormCheckOptions {
    /// Tolerance is `c_tol · (dt/T) · Σ|terms|`.
    pub c_tol: f64,
}

impl Default for RenormCheckOptions {
    fn default() -> Self {
        RenormCheckOptions { c_tol: 10.0 }
    }
}

/// Cellwise quantities of one snapshot that do not depend on `φ`.
struct SnapshotFields {
    t: f64,
    weight_big_h: Vec<f64>,
    rho_big_h_u: Vec<Vec<f64>>,
    k_h: Vec<f64>,
    cubic_h: Vec<f64>,
    stress_h: Vec<f64>,
    hp_kappa_grad2: Vec<f64>,
    pressure_work: Vec<f64>,
    grad_rho: Vec<Vec<f64>>,
    g_field: Vec<f64>,
    grad_g: Vec<Vec<f64>>,
}

fn snapshot_fields(traj: &Trajectory, idx: usize, h: &RenormalizerH) -> SnapshotFields {
    let s = &traj.snapshots[idx];
    let cs = &traj.cs;
    let p = &traj.params;
    let g = s.grid();
    let n = g.len();
    let th = &s.theta.data;
    let rho = &s.rho.data;
    let mu: Vec<f64> = th.iter().map(|&t| cs.mu.eval(t)).collect();
    let lam: Vec<f64> = th.iter().map(|&t| cs.lambda.eval(t)).collect();
    let sp = stress_power(&s.u, &mu, &lam).data;
    let dv = div(&s.u).data;
    let grad_th: Vec<Vec<f64>> = (0..g.dim).map(|a| centered_diff(th, &g, a, Bc::Neumann)).collect();
    let grad_rho: Vec<Vec<f64>> = (0..g.dim).map(|a| centered_diff(rho, &g, a, Bc::Neumann)).collect();
    let mut big_h = vec![0.0; n];
    let mut hv = vec![0.0; n];
    let mut hp = vec![0.0; n];
    let mut k_h = vec![0.0; n];
    for k in 0..n {
        let t = th[k];
        let (h0, h1, _) = h.derivs(t);
        hv[k] = h0;
        hp[k] = h1;
        big_h[k] = h.big_h(t);
        k_h[k] = h.k_h(&cs.kappa, t);
    }
    let g_field: Vec<f64> = (0..n).map(|k| big_h[k] - th[k] * hv[k]).collect();
    let grad_g: Vec<Vec<f64>> = (0..g.dim)
        .map(|a| centered_diff(&g_field, &g, a, Bc::Neumann))
        .collect();
    SnapshotFields {
        t: s.t,
        weight_big_h: (0..n).map(|k| (p.delta + rho[k]) * big_h[k]).collect(),
        rho_big_h_u: (0..g.dim)
            .map(|a| (0..n).map(|k| rho[k] * big_h[k] * s.u.comps[a][k]).collect())
            .collect(),
        k_h,
        cubic_h: (0..n).map(|k| p.delta * th[k].powi(3) * hv[k]).collect(),
        stress_h: (0..n).map(|k| (p.delta - 1.0) * sp[k] * hv[k]).collect(),
        hp_kappa_grad2: (0..n)
            .map(|k| {
                let g2: f64 = grad_th.iter().map(|c| c[k] * c[k]).sum();
                hp[k] * cs.kappa.eval(th[k]) * g2
            })
            .collect(),
        pressure_work: (0..n)
            .map(|k| hv[k] * th[k] * cs.thermal_coefficient(rho[k]) * dv[k])
            .collect(),
        grad_rho,
        g_field,
        grad_g,
    }
}

/// Number of separately integrated terms.
const TERMS: usize = 8;

/// Spatial integrals of the eight space-time terms at one snapshot:
/// LHS `[(δ+ϱ)H ∂_tφ, ϱHu·∇φ, K_hΔφ, −δϑ³hφ]`, RHS
/// `[(δ−1)S:∇u hφ, h'κ|∇ϑ|²φ, hϑp_ϑ div u φ, ε∇ϱ·∇((H−ϑh)φ)]`.
fn spatial_terms(f: &SnapshotFields, phi: &TestFunction, g: &Grid, horizon: f64, epsilon: f64) -> [f64; TERMS] {
    let (psi, dpsi) = phi.psi(f.t, horizon);
    let mut acc = [0.0; TERMS];
    for k in 0..g.len() {
        let c = g.center(k);
        let (chi, gchi, lchi) = phi.chi(c[0], c[1], g);
        let ph = psi * chi;
        let gph = [psi * gchi[0], psi * gchi[1]];
        let mut adv = 0.0;
        let mut eps_term = 0.0;
        for a in 0..g.dim {
            adv += f.rho_big_h_u[a][k] * gph[a];
            eps_term += f.grad_rho[a][k] * (f.grad_g[a][k] * ph + f.g_field[k] * gph[a]);
        }
        acc[0] += f.weight_big_h[k] * dpsi * chi;
        acc[1] += adv;
        acc[2] += f.k_h[k] * psi * lchi;
        acc[3] -= f.cubic_h[k] * ph;
        acc[4] += f.stress_h[k] * ph;
        acc[5] += f.hp_kappa_grad2[k] * ph;
        acc[6] += f.pressure_work[k] * ph;
        acc[7] += epsilon * eps_term;
    }
    let vol = g.cell_volume();
    acc.map(|v| v * vol)
}

/// Evaluate the renormalized inequality for every test function in `bank`.
pub fn renorm_residual_bank(
    traj: &Trajectory,
    h: &RenormalizerH,
    bank: &[TestFunction],
    opts: RenormCheckOptions,
) -> Result<Vec<InequalityReport>> {
    if !h.structurally_admissible() {
        return Err(Error::Hypothesis(format!(
            "renormalizer {} is not admissible: {}",
            h.spec.label(),
            h.violation.unwrap_or("unknown condition")
        )));
    }
    if traj.snapshots.len() < 2 {
        return Err(Error::InvalidInput("trajectory needs at least two snapshots".into()));
    }
    let g = traj.grid();
    let horizon = traj.last().t;
    let idx: Vec<usize> = (0..traj.snapshots.len()).collect();
    let fields = exec::map_slice(&idx, Execution::Parallel, |&i| snapshot_fields(traj, i, h));
    let eps = traj.params.epsilon;
    let s0 = &fields[0];
    let reports = bank
        .iter()
        .map(|phi| {
            let per_snap: Vec<[f64; TERMS]> = fields.iter().map(|f| spatial_terms(f, phi, &g, horizon, eps)).collect();
            let mut integ = [0.0; TERMS];
            for w in 0..per_snap.len() - 1 {
                let dt = fields[w + 1].t - fields[w].t;
                for j in 0..TERMS {
                    integ[j] += 0.5 * dt * (per_snap[w][j] + per_snap[w + 1][j]);
                }
            }
            // −∫(δ+ϱ₀)H(ϑ₀)φ(0)
            let (psi0, _) = phi.psi(0.0, horizon);
            let init: f64 = (0..g.len())
                .map(|k| {
                    let c = g.center(k);
                    s0.weight_big_h[k] * psi0 * phi.chi(c[0], c[1], &g).0
                })
                .sum::<f64>()
                * g.cell_volume();
            let lhs = integ[0] + integ[1] + integ[2] + integ[3];
            let rhs = integ[4] + integ[5] + integ[6] + integ[7] - init;
            let scale: f64 = integ.iter().map(|v| v.abs()).sum::<f64>() + init.abs();
            let tol = opts.c_tol * (traj.dt / horizon) * scale;
            InequalityReport::new(
                &format!("renormalized temperature [{}; {}]", h.spec.label(), phi.label()),
                vec![horizon],
                vec![lhs - rhs],
                vec![tol],
            )
        })
        .collect();
    Ok(reports)
}

pub fn renorm_temperature_residual(
    traj: &Trajectory,
    h: &RenormalizerH,
    phi: &TestFunction,
    opts: RenormCheckOptions,
) -> Result<InequalityReport> {
    Ok(renorm_residual_bank(traj, h, std::slice::from_ref(phi), opts)?.remove(0))
}
