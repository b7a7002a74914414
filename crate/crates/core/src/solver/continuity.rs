//! Density update: upwind flux-form advection followed by implicit
//! Neumann diffusion `(I − ε dt Δ) ϱ^{n+1} = ϱ*`.

use crate::discretization::linsolve::{DiffusionSystem, SolveOptions};
use crate::discretization::ops::{face_cells, face_count, face_div};
use crate::discretization::{Bc, Grid, ScalarField, VectorField};
use crate::error::{Error, Result};

use super::FluidState;

/// Values in `[−NEG_TOL, 0)` are clamped to zero; anything lower aborts.
pub const NEG_TOL: f64 = 1e-12;

/// Face-normal velocity: mean of the adjacent cells, zero on the boundary.
pub fn face_velocity(u: &VectorField, axis: usize) -> Vec<f64> {
    let g = u.grid;
    let comp = &u.comps[axis];
    (0..face_count(&g, axis))
        .map(|f| match face_cells(&g, axis, f) {
            (Some(lo), Some(hi)) => 0.5 * (comp[lo] + comp[hi]),
            _ => 0.0,
        })
        .collect()
}

/// Upwind mass flux `ϱ_up u_f` per axis.
pub fn mass_flux(rho: &ScalarField, u: &VectorField) -> Vec<Vec<f64>> {
    let g = rho.grid;
    (0..g.dim)
        .map(|a| {
            face_velocity(u, a)
                .iter()
                .enumerate()
                .map(|(f, &uf)| upwind(&g, a, f, uf, &rho.data) * uf)
                .collect()
        })
        .collect()
}

#[inline]
fn upwind(g: &Grid, axis: usize, face: usize, dir: f64, q: &[f64]) -> f64 {
    match face_cells(g, axis, face) {
        (Some(lo), Some(hi)) => {
            if dir >= 0.0 {
                q[lo]
            } else {
                q[hi]
            }
        }
        (Some(c), None) | (None, Some(c)) => q[c],
        (None, None) => 0.0,
    }
}

/// `div(F q_up)` for a cell quantity `q` carried by the mass flux `F`.
pub fn transport_divergence(flux: &[Vec<f64>], q: &[f64], g: &Grid) -> Vec<f64> {
    let mut out = vec![0.0; g.len()];
    for (a, fa) in flux.iter().enumerate() {
        let carried: Vec<f64> = fa
            .iter()
            .enumerate()
            .map(|(f, &flx)| flx * upwind(g, a, f, flx, q))
            .collect();
        out.iter_mut().zip(face_div(&carried, g, a)).for_each(|(o, d)| *o += d);
    }
    out
}

#[derive(Debug, Clone)]
pub struct ContinuityOutput {
    pub rho: ScalarField,
    /// Mass flux per axis used for the advective part.
    pub flux: Vec<Vec<f64>>,
    pub clamps: usize,
}

/// Courant number `dt · max|u_f| / h`.
pub fn courant(u: &VectorField, dt: f64) -> f64 {
    (0..u.grid.dim)
        .map(|a| {
            let h = u.grid.spacing(a);
            face_velocity(u, a).iter().fold(0.0f64, |m, v| m.max(v.abs())) * dt / h
        })
        .fold(0.0, f64::max)
}

pub fn step_continuity(state: &FluidState, epsilon: f64, dt: f64) -> Result<ContinuityOutput> {
    if !(dt > 0.0) {
        return Err(Error::InvalidInput(format!("dt must be positive, got {dt}")));
    }
    let g = state.rho.grid;
    let flux = mass_flux(&state.rho, &state.u);
    let one = vec![1.0; g.len()];
    let mut star = vec![0.0; g.len()];
    for a in 0..g.dim {
        let d = face_div(&flux[a], &g, a);
        star.iter_mut().zip(d).for_each(|(s, d)| *s -= dt * d);
    }
    star.iter_mut().zip(&state.rho.data).for_each(|(s, r)| *s += r);
    let mut clamps = 0;
    for (k, v) in star.iter_mut().enumerate() {
        if *v < -NEG_TOL {
            return Err(Error::Negativity {
                field: "density",
                cell: k,
                value: *v,
                diagnostic: format!(
                    "Courant number {:.3} at dt = {dt:.3e}; reduce dt",
                    courant(&state.u, dt)
                ),
            });
        }
        if *v < 0.0 {
            *v = 0.0;
            clamps += 1;
        }
    }
    let rho = if epsilon > 0.0 {
        let sys = DiffusionSystem::isotropic(g, one, epsilon * dt, Bc::Neumann)?;
        sys.solve(&star, SolveOptions::default())?.0
    } else {
        star
    };
    Ok(ContinuityOutput {
        rho: ScalarField { grid: g, data: rho },
        flux,
        clamps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::discretization::integrate;

    #[test]
    fn constant_density_at_rest_is_fixed() {
        let g = Grid::new_1d(32, 1.0).unwrap();
        let mut s = FluidState::uniform(g, 2.0, 1.0);
        for _ in 0..10 {
            s.rho = step_continuity(&s, 0.1, 0.01).unwrap().rho;
        }
        assert!(s.rho.data.iter().all(|&r| (r - 2.0).abs() < 1e-14));
    }

    #[test]
    fn advection_conserves_mass() {
        let g = Grid::new_2d(16, 12, 1.0, 1.0).unwrap();
        let mut s = FluidState::uniform(g, 1.0, 1.0);
        s.rho = ScalarField::from_fn(g, |x, y| {
            1.0 + 0.5 * (-(x - 0.5).powi(2) * 20.0 - (y - 0.4).powi(2) * 30.0).exp()
        });
        s.u = VectorField::from_fn(g, |x, y| [(3.0 * x).sin() * y * (1.0 - y), 0.3 * (x - 0.5)]);
        let m0 = integrate(&s.rho);
        for _ in 0..50 {
            s.rho = step_continuity(&s, 0.01, 0.005).unwrap().rho;
        }
        assert!(((integrate(&s.rho) - m0) / m0).abs() < 1e-12);
    }
}
