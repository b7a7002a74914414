//! Time stepping of the regularized system by Lie splitting:
//! continuity, then momentum, then temperature.

pub mod continuity;
pub mod momentum;
pub mod temperature;

use serde::{Deserialize, Serialize};

use crate::constitutive::ConstitutiveSet;
use crate::diagnostics::energy::{energy_components, EnergyLedger, LedgerRow};
use crate::discretization::ops::centered_diff;
use crate::discretization::{integrate, Bc, Grid, ScalarField, VectorField};
use crate::error::{invalid, Error, Result};
use crate::initdata::RegularizedData;

pub use continuity::step_continuity;
pub use momentum::step_momentum;
pub use temperature::step_temperature;

/// The regularization knobs `ε`, `η`, `δ` and the artificial-pressure exponent `β`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizationParams {
    pub epsilon: f64,
    pub eta: f64,
    pub delta: f64,
    pub beta: f64,
}

impl Default for RegularizationParams {
    fn default() -> Self {
        RegularizationParams {
            epsilon: 0.01,
            eta: 0.01,
            delta: 0.01,
            beta: 5.0,
        }
    }
}

impl RegularizationParams {
    pub fn validate(&self, cs: &ConstitutiveSet) -> Result<()> {
        if !(self.epsilon >= 0.0 && self.eta >= 0.0) {
            return Err(invalid("ε and η must be nonnegative"));
        }
        if !(0.0..1.0).contains(&self.delta) {
            return Err(invalid(format!("δ must lie in [0, 1), got {}", self.delta)));
        }
        let bound = 4f64.max(cs.constants.gamma);
        if !(self.beta > bound) {
            return Err(Error::Hypothesis(format!(
                "β > max{{4, γ}} fails: β = {}, γ = {}",
                self.beta, cs.constants.gamma
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FluidState {
    pub t: f64,
    pub rho: ScalarField,
    pub u: VectorField,
    pub theta: ScalarField,
}

impl FluidState {
    pub fn uniform(grid: Grid, rho: f64, theta: f64) -> Self {
        FluidState {
            t: 0.0,
            rho: ScalarField::constant(grid, rho),
            u: VectorField::zeros(grid),
            theta: ScalarField::constant(grid, theta),
        }
    }

    pub fn from_regularized(reg: &RegularizedData) -> Self {
        FluidState {
            t: 0.0,
            rho: reg.rho.clone(),
            u: reg.velocity(),
            theta: reg.theta.clone(),
        }
    }

    pub fn grid(&self) -> Grid {
        self.rho.grid
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.rho.grid;
        g.check_same(&self.u.grid)?;
        g.check_same(&self.theta.grid)?;
        if !(self.rho.all_finite() && self.u.all_finite() && self.theta.all_finite()) {
            return Err(invalid("state contains non-finite values"));
        }
        if self.rho.min() < 0.0 || self.theta.min() < 0.0 {
            return Err(invalid("density and temperature must be nonnegative"));
        }
        Ok(())
    }

    pub fn mass(&self) -> f64 {
        integrate(&self.rho)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DtPolicy {
    /// `dt = T / round(T / dt)`; CFL violations are logged and counted.
    #[default]
    Fixed,
    /// `dt = min(dt, CFL bound)`, last step shortened to land on `T`.
    Adaptive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeConfig {
    pub horizon: f64,
    pub dt: f64,
    pub policy: DtPolicy,
    pub snapshot_every: usize,
    /// Advective CFL number.
    pub cfl: f64,
}

impl Default for TimeConfig {
    fn default() -> Self {
        TimeConfig {
            horizon: 1.0,
            dt: 1e-3,
            policy: DtPolicy::Fixed,
            snapshot_every: 10,
            cfl: 0.4,
        }
    }
}

impl TimeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.horizon > 0.0 && self.dt > 0.0 && self.dt <= self.horizon) {
            return Err(invalid("need 0 < dt ≤ horizon"));
        }
        if self.snapshot_every == 0 {
            return Err(invalid("snapshot_every must be at least 1"));
        }
        if !(self.cfl > 0.0) {
            return Err(invalid("CFL number must be positive"));
        }
        Ok(())
    }

    /// Step count and step size under the fixed policy.
    pub fn fixed_steps(&self) -> (usize, f64) {
        let n = ((self.horizon / self.dt).round() as usize).max(1);
        (n, self.horizon / n as f64)
    }
}

/// Optional energy injection used as a negative control.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Forcing {
    /// Uniform heat source per unit volume and time added to the temperature equation.
    pub heat_source: f64,
}

/// Stable step bound: advective CFL with the sound speed and the density
/// diffusion drift, plus a diffusive bound for the explicit cross viscous
/// terms in 2D.
pub fn cfl_limit(state: &FluidState, cs: &ConstitutiveSet, params: &RegularizationParams, cfl: f64) -> f64 {
    let g = state.grid();
    let h = g.min_spacing();
    let grad_rho: Vec<Vec<f64>> = (0..g.dim)
        .map(|a| centered_diff(&state.rho.data, &g, a, Bc::Neumann))
        .collect();
    let mut speed: f64 = 0.0;
    let mut rho_min = f64::INFINITY;
    let mut visc: f64 = 0.0;
    for k in 0..g.len() {
        let r = state.rho.data[k];
        let t = state.theta.data[k];
        let umag = state.u.comps.iter().map(|c| c[k] * c[k]).sum::<f64>().sqrt();
        let gr = grad_rho.iter().map(|c| c[k] * c[k]).sum::<f64>().sqrt();
        let cs2 = cs.sound_speed_sq(r, t, params.delta, params.beta);
        let drift = if r > 0.0 { params.epsilon * gr / r } else { 0.0 };
        speed = speed.max(umag + cs2.sqrt() + drift);
        rho_min = rho_min.min(r);
        visc = visc.max(cs.mu.eval(t.max(0.0)) + cs.lambda.eval(t.max(0.0)).abs());
    }
    let mut bound = if speed > 0.0 { cfl * h / speed } else { f64::INFINITY };
    if g.dim == 2 && visc > 0.0 {
        bound = bound.min(0.25 * h * h * rho_min.max(momentum::RHO_FLOOR) / visc);
    }
    bound
}

/// Per-step bookkeeping.
#[derive(Debug, Clone, Copy, Default, Serialize, Deserialize)]
pub struct StepReport {
    pub dt: f64,
    pub rho_clamps: usize,
    pub theta_clamps: usize,
    pub newton_iterations: usize,
    pub cg_iterations: usize,
    /// `δ ∫ S:∇u`, `η ∫|∇u|²`, `δ ∫ϑ³` at the new state.
    pub stress_rate: f64,
    pub eta_rate: f64,
    pub cubic_rate: f64,
    pub forcing_rate: f64,
}

/// One Lie-split step of length `dt`.
pub fn step(
    state: &FluidState,
    cs: &ConstitutiveSet,
    params: &RegularizationParams,
    dt: f64,
    forcing: Forcing,
) -> Result<(FluidState, StepReport)> {
    let cont = step_continuity(state, params.epsilon, dt)?;
    let mom = step_momentum(state, &cont.rho, &cont.flux, cs, params, dt)?;
    let temp = step_temperature(
        state,
        &cont.rho,
        &mom.u,
        &cont.flux,
        cs,
        params,
        dt,
        forcing.heat_source,
    )?;
    let g = state.grid();
    let vol = g.cell_volume();
    let stress_rate = params.delta * temp.stress_power.iter().sum::<f64>() * vol;
    let eta_rate = params.eta * momentum::dirichlet_energy(&mom.u);
    let cubic_rate = params.delta * temp.theta.data.iter().map(|t| t * t * t).sum::<f64>() * vol;
    let next = FluidState {
        t: state.t + dt,
        rho: cont.rho,
        u: mom.u,
        theta: temp.theta,
    };
    Ok((
        next,
        StepReport {
            dt,
            rho_clamps: cont.clamps,
            theta_clamps: temp.clamps,
            newton_iterations: temp.newton_iterations,
            cg_iterations: mom.cg_iterations,
            stress_rate,
            eta_rate,
            cubic_rate,
            forcing_rate: forcing.heat_source * g.measure(),
        },
    ))
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct RunStats {
    pub steps: usize,
    pub rho_clamps: usize,
    pub theta_clamps: usize,
    pub cfl_violations: usize,
    pub max_newton_iterations: usize,
    pub max_cg_iterations: usize,
    pub min_theta: f64,
    pub min_rho: f64,
    pub initial_mass: f64,
    pub final_mass: f64,
}

impl RunStats {
    pub fn relative_mass_drift(&self) -> f64 {
        ((self.final_mass - self.initial_mass) / self.initial_mass).abs()
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub cs: ConstitutiveSet,
    pub params: RegularizationParams,
    pub time: TimeConfig,
    pub forcing: Forcing,
    /// Nominal step size.
    pub dt: f64,
    pub snapshots: Vec<FluidState>,
    pub ledger: EnergyLedger,
    pub stats: RunStats,
}

impl Trajectory {
    pub fn grid(&self) -> Grid {
        self.snapshots[0].grid()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    pub fn initial(&self) -> &FluidState {
        &self.snapshots[0]
    }

    pub fn last(&self) -> &FluidState {
        self.snapshots.last().expect("trajectory has an initial snapshot")
    }

    /// Minimum temperature over all snapshots.
    pub fn min_theta(&self) -> f64 {
        self.snapshots
            .iter()
            .map(|s| s.theta.min())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Run to the horizon; on failure the error is returned together with the
/// trajectory up to and including the last valid state.
pub fn simulate_partial(
    initial: FluidState,
    cs: &ConstitutiveSet,
    params: RegularizationParams,
    time: TimeConfig,
    forcing: Forcing,
) -> (Trajectory, Option<Error>) {
    let mass0 = initial.mass();
    let mut traj = Trajectory {
        cs: cs.clone(),
        params,
        time,
        forcing,
        dt: time.dt,
        snapshots: vec![initial.clone()],
        ledger: EnergyLedger::default(),
        stats: RunStats {
            min_theta: initial.theta.min(),
            min_rho: initial.rho.min(),
            initial_mass: mass0,
            final_mass: mass0,
            ..Default::default()
        },
    };
    if let Err(e) = params
        .validate(cs)
        .and_then(|_| time.validate())
        .and_then(|_| initial.validate())
    {
        return (traj, Some(e));
    }
    let comps0 = energy_components(&initial, cs, params.delta, params.beta);
    traj.ledger.push(LedgerRow::initial(comps0));

    let (n_fixed, dt_fixed) = time.fixed_steps();
    traj.dt = match time.policy {
        DtPolicy::Fixed => dt_fixed,
        DtPolicy::Adaptive => time.dt,
    };
    let mut state = initial;
    let mut k = 0usize;
    loop {
        let remaining = time.horizon - state.t;
        let done = match time.policy {
            DtPolicy::Fixed => k >= n_fixed,
            DtPolicy::Adaptive => remaining <= 1e-12 * time.horizon,
        };
        if done {
            break;
        }
        let bound = cfl_limit(&state, cs, &params, time.cfl);
        let dt = match time.policy {
            DtPolicy::Fixed => {
                if dt_fixed > bound {
                    traj.stats.cfl_violations += 1;
                    if traj.stats.cfl_violations == 1 {
                        log::warn!(
                            "dt = {dt_fixed:.3e} exceeds the stability bound {bound:.3e} at t = {:.4}",
                            state.t
                        );
                    }
                }
                dt_fixed
            }
            DtPolicy::Adaptive => time.dt.min(bound).min(remaining),
        };
        match step(&state, cs, &params, dt, forcing) {
            Ok((mut next, rep)) => {
                k += 1;
                if time.policy == DtPolicy::Fixed {
                    next.t = k as f64 * dt_fixed;
                }
                let st = &mut traj.stats;
                st.steps = k;
                st.rho_clamps += rep.rho_clamps;
                st.theta_clamps += rep.theta_clamps;
                st.max_newton_iterations = st.max_newton_iterations.max(rep.newton_iterations);
                st.max_cg_iterations = st.max_cg_iterations.max(rep.cg_iterations);
                st.min_theta = st.min_theta.min(next.theta.min());
                st.min_rho = st.min_rho.min(next.rho.min());
                st.final_mass = next.mass();
                let comps = energy_components(&next, cs, params.delta, params.beta);
                let row = traj
                    .ledger
                    .rows
                    .last()
                    .expect("initial row")
                    .advance(k, next.t, comps, &rep);
                traj.ledger.push(row);
                let last = match time.policy {
                    DtPolicy::Fixed => k == n_fixed,
                    DtPolicy::Adaptive => time.horizon - next.t <= 1e-12 * time.horizon,
                };
                if k.is_multiple_of(time.snapshot_every) || last {
                    traj.snapshots.push(next.clone());
                }
                state = next;
            }
            Err(e) => {
                if traj.last().t < state.t {
                    traj.snapshots.push(state);
                }
                return (traj, Some(e));
            }
        }
    }
    (traj, None)
}

pub fn simulate(
    initial: FluidState,
    cs: &ConstitutiveSet,
    params: RegularizationParams,
    time: TimeConfig,
    forcing: Forcing,
) -> Result<Trajectory> {
    match simulate_partial(initial, cs, params, time, forcing) {
        (traj, None) => Ok(traj),
        (_, Some(e)) => Err(e),
    }
}
