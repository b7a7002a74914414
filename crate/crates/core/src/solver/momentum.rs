//! Linearly implicit momentum update.
//!
//! Advection, pressure, the `ε∇u∇ϱ` correction and (in 2D) the viscous cross
//! derivatives are explicit; `ηΔu` and the diagonal viscous blocks
//! `∂_c((2μ+λ)∂_c u_c) + Σ_{j≠c} ∂_j(μ ∂_j u_c)` are implicit with
//! viscosities frozen at `ϑⁿ`.

use crate::constitutive::ConstitutiveSet;
use crate::discretization::linsolve::{DiffusionSystem, SolveOptions};
use crate::discretization::ops::{centered_diff, face_cells, face_count};
use crate::discretization::{Bc, Grid, ScalarField, VectorField};
use crate::error::Result;

use super::continuity::transport_divergence;
use super::{FluidState, RegularizationParams};

/// Density floor in the momentum mass matrix.
pub const RHO_FLOOR: f64 = 1e-10;

/// Arithmetic face average; boundary faces take the adjacent cell value.
pub fn face_average(values: &[f64], g: &Grid, axis: usize) -> Vec<f64> {
    (0..face_count(g, axis))
        .map(|f| match face_cells(g, axis, f) {
            (Some(lo), Some(hi)) => 0.5 * (values[lo] + values[hi]),
            (Some(c), None) | (None, Some(c)) => values[c],
            (None, None) => 0.0,
        })
        .collect()
}

/// Total pressure `p(ϱ, ϑ) + δϱ^β`.
pub fn total_pressure(rho: &[f64], theta: &[f64], cs: &ConstitutiveSet, params: &RegularizationParams) -> Vec<f64> {
    rho.iter()
        .zip(theta)
        .map(|(&r, &t)| {
            let r = r.max(0.0);
            cs.p(r, t.max(0.0)) + params.delta * r.powf(params.beta)
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct MomentumOutput {
    pub u: VectorField,
    pub cg_iterations: usize,
}

/// Advance `u` given the new density `rho_new` and the mass flux of the
/// continuity step.
pub fn step_momentum(
    state: &FluidState,
    rho_new: &ScalarField,
    flux: &[Vec<f64>],
    cs: &ConstitutiveSet,
    params: &RegularizationParams,
    dt: f64,
) -> Result<MomentumOutput> {
    let g = state.rho.grid;
    g.check_same(&rho_new.grid)?;
    let n = g.len();
    let mu: Vec<f64> = state.theta.data.iter().map(|&t| cs.mu.eval(t.max(0.0))).collect();
    let lam: Vec<f64> = state.theta.data.iter().map(|&t| cs.lambda.eval(t.max(0.0))).collect();
    let pres = total_pressure(&rho_new.data, &state.theta.data, cs, params);
    let grad_rho: Vec<Vec<f64>> = (0..g.dim)
        .map(|a| centered_diff(&rho_new.data, &g, a, Bc::Neumann))
        .collect();
    let diag: Vec<f64> = rho_new.data.iter().map(|&r| r.max(RHO_FLOOR)).collect();
    let two_mu_lam: Vec<f64> = mu.iter().zip(&lam).map(|(m, l)| 2.0 * m + l).collect();

    let mut comps = Vec::with_capacity(g.dim);
    let mut cg_iterations = 0;
    for c in 0..g.dim {
        let uc = &state.u.comps[c];
        let adv = transport_divergence(flux, uc, &g);
        let gp = centered_diff(&pres, &g, c, Bc::Neumann);
        let mut rhs: Vec<f64> = (0..n)
            .map(|k| state.rho.data[k] * uc[k] - dt * adv[k] - dt * gp[k])
            .collect();
        if params.epsilon > 0.0 {
            for (j, gr) in grad_rho.iter().enumerate() {
                let du = centered_diff(uc, &g, j, Bc::Dirichlet);
                for k in 0..n {
                    rhs[k] -= dt * params.epsilon * du[k] * gr[k];
                }
            }
        }
        if g.dim == 2 {
            let other = &state.u.comps[1 - c];
            // ∂_o(μ ∂_c v) + ∂_c(λ ∂_o v) with o the other axis
            let o = 1 - c;
            let d_c_other = centered_diff(other, &g, c, Bc::Dirichlet);
            let d_o_other = centered_diff(other, &g, o, Bc::Dirichlet);
            let a: Vec<f64> = (0..n).map(|k| mu[k] * d_c_other[k]).collect();
            let b: Vec<f64> = (0..n).map(|k| lam[k] * d_o_other[k]).collect();
            let ta = centered_diff(&a, &g, o, Bc::Dirichlet);
            let tb = centered_diff(&b, &g, c, Bc::Dirichlet);
            for k in 0..n {
                rhs[k] += dt * (ta[k] + tb[k]);
            }
        }
        let face_coef: Vec<Vec<f64>> = (0..g.dim)
            .map(|a| {
                let base = if a == c { &two_mu_lam } else { &mu };
                face_average(base, &g, a)
                    .into_iter()
                    .map(|v| dt * (v.max(0.0) + params.eta))
                    .collect()
            })
            .collect();
        let sys = DiffusionSystem::new(g, diag.clone(), face_coef, Bc::Dirichlet)?;
        let (x, stats) = sys.solve(&rhs, SolveOptions::default())?;
        cg_iterations += stats.iterations;
        comps.push(x);
    }
    Ok(MomentumOutput {
        u: VectorField { grid: g, comps },
        cg_iterations,
    })
}

/// `Σ_c ⟨u_c, −Δ_D u_c⟩`, the discrete `∫|∇u|²` matching the implicit
/// Dirichlet Laplacian.
pub fn dirichlet_energy(u: &VectorField) -> f64 {
    let g = u.grid;
    let sys = DiffusionSystem::isotropic(g, vec![0.0; g.len()], 1.0, Bc::Dirichlet).expect("consistent shapes");
    u.comps
        .iter()
        .map(|c| c.iter().zip(sys.apply(c)).map(|(a, b)| a * b).sum::<f64>())
        .sum::<f64>()
        * g.cell_volume()
}
