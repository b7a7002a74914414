//! Parameter families `ε → 0`, `η → 0`, `δ → 0` and the convergence
//! diagnostics computed along them.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::constitutive::ConstitutiveSet;
use crate::diagnostics::{effective_viscous_pressure, test_bank, TestFunction};
use crate::discretization::linsolve::{DiffusionSystem, SolveOptions};
use crate::discretization::{Bc, ScalarField};
use crate::error::{invalid, Result};
use crate::exec::{self, Execution};
use crate::initdata::{regularize_initial_data, InitialData, RegularizeOptions};
use crate::solver::{simulate_partial, FluidState, Forcing, RegularizationParams, TimeConfig, Trajectory};

/// Consecutive pairing differences below this multiple of the pairing scale are noise.
pub const PAIRING_NOISE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepParam {
    Epsilon,
    Eta,
    Delta,
}

impl SweepParam {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "epsilon" | "eps" | "ε" => Ok(SweepParam::Epsilon),
            "eta" | "η" => Ok(SweepParam::Eta),
            "delta" | "δ" => Ok(SweepParam::Delta),
            _ => Err(invalid(format!(
                "unknown sweep parameter '{s}' (expected epsilon, eta or delta)"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepParam::Epsilon => "epsilon",
            SweepParam::Eta => "eta",
            SweepParam::Delta => "delta",
        }
    }

    pub fn apply(&self, params: RegularizationParams, value: f64) -> RegularizationParams {
        match self {
            SweepParam::Epsilon => RegularizationParams {
                epsilon: value,
                ..params
            },
            SweepParam::Eta => RegularizationParams { eta: value, ..params },
            SweepParam::Delta => RegularizationParams { delta: value, ..params },
        }
    }
}

/// Everything held fixed across a sweep.
#[derive(Debug, Clone)]
pub struct SweepBase {
    pub init: InitialData,
    pub cs: ConstitutiveSet,
    pub params: RegularizationParams,
    pub time: TimeConfig,
    pub forcing: Forcing,
    pub regularize: RegularizeOptions,
    /// Density threshold `ω` of the low-density probe.
    pub omega: f64,
}

/// Discrete versions of the δ-uniform bounds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EstimateSurrogates {
    /// `sup_t ∫ϱ|u|²`
    pub kinetic: f64,
    /// `sup_t ∫ϱ^γ`
    pub rho_gamma: f64,
    /// `sup_t ∫(δ+ϱ)ϑ`
    pub thermal: f64,
    /// `δ ∫∫ S:∇u`
    pub stress_dissipation: f64,
    /// `δ ∫∫ ϑ³`
    pub cubic_dissipation: f64,
}

impl EstimateSurrogates {
    pub const NAMES: [&'static str; 5] = [
        "kinetic",
        "rho_gamma",
        "thermal",
        "stress_dissipation",
        "cubic_dissipation",
    ];

    pub fn values(&self) -> [f64; 5] {
        [
            self.kinetic,
            self.rho_gamma,
            self.thermal,
            self.stress_dissipation,
            self.cubic_dissipation,
        ]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub value: f64,
    pub completed: bool,
    pub error: Option<String>,
    pub steps: usize,
    pub final_time: f64,
    pub min_theta: f64,
    pub min_rho: f64,
    pub relative_mass_drift: f64,
    pub estimates: EstimateSurrogates,
    /// `∫∫ ϱ EVP φ` for each bank function.
    pub evp_pairings: Vec<f64>,
    /// `(∫∫ϑ³ on {ϱ ≥ ω}, ∫∫ϑ³ on {ϱ < ω})`
    pub integrability: (f64, f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepVerdicts {
    /// Consecutive L¹ density differences non-increasing over the last three levels.
    pub density_tail_nonincreasing: bool,
    /// Per bank function: pairing differences decreasing over the last two gaps.
    pub pairing_tail_decreasing: Vec<bool>,
    /// `(max − min)/max` of the per-level minimum temperature.
    pub min_theta_spread: f64,
    /// Per estimate: `max_j value_j / value_0`.
    pub estimate_ratios: Vec<f64>,
    /// Same for the two integrability components.
    pub integrability_ratios: (f64, f64),
    pub all_completed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub param: SweepParam,
    pub schedule: Vec<f64>,
    pub bank: Vec<String>,
    pub levels: Vec<LevelSummary>,
    /// `∫∫|ϱ_j − ϱ_{j+1}|` for consecutive completed levels.
    pub density_l1_differences: Vec<f64>,
    /// `|⟨·⟩_j − ⟨·⟩_{j+1}|` indexed `[gap][bank function]`.
    pub pairing_differences: Vec<Vec<f64>>,
    pub verdicts: SweepVerdicts,
}

impl SweepReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// One row per level.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec![
            self.param.name().to_string(),
            "completed".into(),
            "steps".into(),
            "min_theta".into(),
            "min_rho".into(),
            "mass_drift".into(),
        ];
        header.extend(EstimateSurrogates::NAMES.iter().map(|s| s.to_string()));
        header.push("theta3_dense".into());
        header.push("theta3_sparse".into());
        header.extend(self.bank.iter().map(|b| format!("evp_{b}")));
        w.write_record(&header)?;
        for l in &self.levels {
            let mut row = vec![
                format!("{:e}", l.value),
                l.completed.to_string(),
                l.steps.to_string(),
                format!("{:e}", l.min_theta),
                format!("{:e}", l.min_rho),
                format!("{:e}", l.relative_mass_drift),
            ];
            row.extend(l.estimates.values().iter().map(|v| format!("{v:e}")));
            row.push(format!("{:e}", l.integrability.0));
            row.push(format!("{:e}", l.integrability.1));
            row.extend(l.evp_pairings.iter().map(|v| format!("{v:e}")));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// `min(ϱ, k)` cellwise.
pub fn cutoff_tk(rho: &ScalarField, k: f64) -> Result<ScalarField> {
    if !(k >= 1.0) {
        return Err(invalid(format!("cutoff level must be at least 1, got {k}")));
    }
    Ok(rho.map(|r| r.min(k)))
}

/// Smooth non-increasing step: 0 for `z ≤ ω`, −1 for `z ≥ 2ω`, cubic in between.
pub fn low_density_step(z: f64, omega: f64) -> f64 {
    if z <= omega {
        0.0
    } else if z >= 2.0 * omega {
        -1.0
    } else {
        let s = (z - omega) / omega;
        -(3.0 * s * s - 2.0 * s * s * s)
    }
}

/// Zero-mean solution of `Δw = B(ϱ) − mean B(ϱ)` with homogeneous Neumann data.
pub fn low_density_weight(rho: &ScalarField, omega: f64) -> Result<ScalarField> {
    if !(omega > 0.0) {
        return Err(invalid(format!("ω must be positive, got {omega}")));
    }
    let g = rho.grid;
    let b: Vec<f64> = rho.data.iter().map(|&z| low_density_step(z, omega)).collect();
    let mean = b.iter().sum::<f64>() / b.len() as f64;
    // −Δw = −(B − mean B)
    let rhs: Vec<f64> = b.iter().map(|v| -(v - mean)).collect();
    if rhs.iter().all(|v| v.abs() < 1e-15) {
        return Ok(ScalarField::zeros(g));
    }
    let sys = DiffusionSystem::isotropic(g, vec![0.0; g.len()], 1.0, Bc::Neumann)?;
    let opts = SolveOptions {
        target: 1e-12,
        accept: 1e-10,
        ..Default::default()
    };
    let (w, _) = sys.solve_zero_mean(&rhs, opts)?;
    Ok(ScalarField { grid: g, data: w })
}

/// Cubic temperature mass split by density level, integrated over the run.
pub fn temperature_integrability_probe(traj: &Trajectory, omega: f64) -> Result<(f64, f64)> {
    if !(omega > 0.0) {
        return Err(invalid(format!("ω must be positive, got {omega}")));
    }
    let parts: Vec<(f64, f64)> = traj
        .snapshots
        .iter()
        .map(|s| {
            let vol = s.grid().cell_volume();
            let (mut dense, mut sparse) = (0.0, 0.0);
            for (r, t) in s.rho.data.iter().zip(&s.theta.data) {
                if *r >= omega {
                    dense += t.powi(3);
                } else {
                    sparse += t.powi(3);
                }
            }
            (dense * vol, sparse * vol)
        })
        .collect();
    Ok((trapezoid(traj, |i| parts[i].0), trapezoid(traj, |i| parts[i].1)))
}

/// Trapezoid rule over snapshot times.
fn trapezoid(traj: &Trajectory, f: impl Fn(usize) -> f64) -> f64 {
    let s = &traj.snapshots;
    (0..s.len().saturating_sub(1))
        .map(|i| 0.5 * (s[i + 1].t - s[i].t) * (f(i) + f(i + 1)))
        .sum()
}

pub fn estimate_surrogates(traj: &Trajectory) -> EstimateSurrogates {
    let gamma = traj.cs.constants.gamma;
    let delta = traj.params.delta;
    let mut e = EstimateSurrogates::default();
    for s in &traj.snapshots {
        let vol = s.grid().cell_volume();
        let (mut kin, mut rg, mut th) = (0.0, 0.0, 0.0);
        for k in 0..s.grid().len() {
            let r = s.rho.data[k].max(0.0);
            kin += r * s.u.comps.iter().map(|c| c[k] * c[k]).sum::<f64>();
            rg += r.powf(gamma);
            th += (delta + r) * s.theta.data[k];
        }
        e.kinetic = e.kinetic.max(kin * vol);
        e.rho_gamma = e.rho_gamma.max(rg * vol);
        e.thermal = e.thermal.max(th * vol);
    }
    if let Some(last) = traj.ledger.rows.last() {
        e.stress_dissipation = last.stress_dissipation;
        e.cubic_dissipation = last.cubic_dissipation;
    }
    e
}

/// `∫∫ ϱ EVP φ` for each bank function.
pub fn evp_pairings(traj: &Trajectory, bank: &[TestFunction]) -> Vec<f64> {
    let g = traj.grid();
    let horizon = traj.time.horizon;
    let weighted: Vec<Vec<f64>> = traj
        .snapshots
        .iter()
        .map(|s| {
            let evp = effective_viscous_pressure(s, &traj.cs, &traj.params);
            evp.data.iter().zip(&s.rho.data).map(|(p, r)| p * r).collect()
        })
        .collect();
    bank.iter()
        .map(|phi| {
            let chi: Vec<f64> = (0..g.len())
                .map(|k| {
                    let c = g.center(k);
                    phi.chi(c[0], c[1], &g).0
                })
                .collect();
            trapezoid(traj, |i| {
                let (psi, _) = phi.psi(traj.snapshots[i].t, horizon);
                psi * weighted[i].iter().zip(&chi).map(|(a, b)| a * b).sum::<f64>() * g.cell_volume()
            })
        })
        .collect()
}

/// `∫∫|ϱ_a − ϱ_b|` over the common snapshot times.
pub fn density_l1_difference(a: &Trajectory, b: &Trajectory) -> f64 {
    let n = a.snapshots.len().min(b.snapshots.len());
    let vol = a.grid().cell_volume();
    let d: Vec<f64> = (0..n)
        .map(|i| {
            a.snapshots[i]
                .rho
                .data
                .iter()
                .zip(&b.snapshots[i].rho.data)
                .map(|(x, y)| (x - y).abs())
                .sum::<f64>()
                * vol
        })
        .collect();
    (0..n.saturating_sub(1))
        .map(|i| 0.5 * (a.snapshots[i + 1].t - a.snapshots[i].t) * (d[i] + d[i + 1]))
        .sum()
}

fn run_level(base: &SweepBase, param: SweepParam, value: f64) -> (LevelSummary, Option<Trajectory>) {
    let params = param.apply(base.params, value);
    let mut summary = LevelSummary {
        value,
        completed: false,
        error: None,
        steps: 0,
        final_time: 0.0,
        min_theta: f64::NAN,
        min_rho: f64::NAN,
        relative_mass_drift: f64::NAN,
        estimates: EstimateSurrogates::default(),
        evp_pairings: Vec::new(),
        integrability: (f64::NAN, f64::NAN),
    };
    let reg = match regularize_initial_data(&base.init, params.delta, params.beta, base.regularize) {
        Ok(r) => r,
        Err(e) => {
            summary.error = Some(e.to_string());
            return (summary, None);
        }
    };
    let (traj, err) = simulate_partial(
        FluidState::from_regularized(&reg),
        &base.cs,
        params,
        base.time,
        base.forcing,
    );
    summary.completed = err.is_none();
    summary.error = err.map(|e| e.to_string());
    summary.steps = traj.stats.steps;
    summary.final_time = traj.last().t;
    summary.min_theta = traj.min_theta();
    summary.min_rho = traj.stats.min_rho;
    summary.relative_mass_drift = traj.stats.relative_mass_drift();
    summary.estimates = estimate_surrogates(&traj);
    summary.evp_pairings = evp_pairings(&traj, &test_bank());
    summary.integrability = temperature_integrability_probe(&traj, base.omega).unwrap_or((f64::NAN, f64::NAN));
    (summary, Some(traj))
}

fn ratio_to_first(values: &[f64]) -> f64 {
    let first = values[0];
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if first > 0.0 {
        max / first
    } else if max <= 0.0 {
        1.0
    } else {
        f64::INFINITY
    }
}

/// Run every level (concurrently under `Execution::Parallel`) and assemble the report.
pub fn parameter_sweep(base: &SweepBase, param: SweepParam, schedule: &[f64], exec: Execution) -> Result<SweepReport> {
    if schedule.len() < 3 {
        return Err(invalid("a sweep needs at least three levels"));
    }
    if !schedule.windows(2).all(|w| w[1] < w[0]) {
        return Err(invalid("sweep schedule must be strictly decreasing"));
    }
    if schedule.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
        return Err(invalid("sweep levels must be finite and nonnegative"));
    }
    let runs = exec::map_slice(schedule, exec, |&v| run_level(base, param, v));
    let bank = test_bank();
    let levels: Vec<LevelSummary> = runs.iter().map(|(s, _)| s.clone()).collect();
    let trajs: Vec<&Trajectory> = runs
        .iter()
        .filter_map(|(s, t)| t.as_ref().filter(|_| s.completed))
        .collect();
    let density_l1_differences: Vec<f64> = trajs.windows(2).map(|w| density_l1_difference(w[0], w[1])).collect();
    let done: Vec<&LevelSummary> = levels.iter().filter(|l| l.completed).collect();
    let pairing_differences: Vec<Vec<f64>> = done
        .windows(2)
        .map(|w| {
            w[0].evp_pairings
                .iter()
                .zip(&w[1].evp_pairings)
                .map(|(a, b)| (a - b).abs())
                .collect()
        })
        .collect();

    let density_tail_nonincreasing = match density_l1_differences.len() {
        0 | 1 => false,
        n => density_l1_differences[n - 1] <= density_l1_differences[n - 2],
    };
    let pairing_tail_decreasing = (0..bank.len())
        .map(|b| match pairing_differences.len() {
            0 | 1 => false,
            n => {
                let (d1, d2) = (pairing_differences[n - 2][b], pairing_differences[n - 1][b]);
                let scale = done.iter().map(|l| l.evp_pairings[b].abs()).fold(0.0, f64::max);
                let floor = PAIRING_NOISE * scale.max(1.0);
                d2 < d1 || (d1 <= floor && d2 <= floor)
            }
        })
        .collect();
    let min_thetas: Vec<f64> = done.iter().map(|l| l.min_theta).collect();
    let min_theta_spread = if min_thetas.is_empty() {
        f64::NAN
    } else {
        let max = min_thetas.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = min_thetas.iter().copied().fold(f64::INFINITY, f64::min);
        (max - min) / max
    };
    let estimate_ratios = if done.is_empty() {
        vec![f64::NAN; 5]
    } else {
        (0..5)
            .map(|i| ratio_to_first(&done.iter().map(|l| l.estimates.values()[i]).collect::<Vec<_>>()))
            .collect()
    };
    let integrability_ratios = if done.is_empty() {
        (f64::NAN, f64::NAN)
    } else {
        (
            ratio_to_first(&done.iter().map(|l| l.integrability.0).collect::<Vec<_>>()),
            ratio_to_first(&done.iter().map(|l| l.integrability.1).collect::<Vec<_>>()),
        )
    };
    Ok(SweepReport {
        param,
        schedule: schedule.to_vec(),
        bank: bank.iter().map(|b| b.label()).collect(),
        verdicts: SweepVerdicts {
            density_tail_nonincreasing,
            pairing_tail_decreasing,
            min_theta_spread,
            estimate_ratios,
            integrability_ratios,
            all_completed: levels.iter().all(|l| l.completed),
        },
        levels,
        density_l1_differences,
        pairing_differences,
    })
}
