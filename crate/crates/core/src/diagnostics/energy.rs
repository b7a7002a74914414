//! Total energy, the per-step energy ledger, and the discrete energy inequality.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::InequalityReport;
use crate::constitutive::ConstitutiveSet;
use crate::error::{invalid, Result};
use crate::solver::{FluidState, StepReport, Trajectory};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyComponents {
    /// `∫ ϱ|u|²/2`
    pub kinetic: f64,
    /// `∫ ϱ P_e(ϱ)`
    pub elastic: f64,
    /// `δ/(β−1) ∫ ϱ^β`
    pub artificial: f64,
    /// `∫ (δ+ϱ) ϑ`
    pub thermal: f64,
}

impl EnergyComponents {
    pub fn total(&self) -> f64 {
        self.kinetic + self.elastic + self.artificial + self.thermal
    }
}

pub fn energy_components(state: &FluidState, cs: &ConstitutiveSet, delta: f64, beta: f64) -> EnergyComponents {
    let g = state.grid();
    let vol = g.cell_volume();
    let mut e = EnergyComponents::default();
    for k in 0..g.len() {
        let r = state.rho.data[k].max(0.0);
        let u2: f64 = state.u.comps.iter().map(|c| c[k] * c[k]).sum();
        e.kinetic += 0.5 * r * u2;
        e.elastic += cs.rho_pe(r);
        e.artificial += r.powf(beta);
        e.thermal += (delta + r) * state.theta.data[k];
    }
    e.kinetic *= vol;
    e.elastic *= vol;
    e.artificial *= vol * if beta != 1.0 { delta / (beta - 1.0) } else { 0.0 };
    e.thermal *= vol;
    e
}

pub fn total_energy(state: &FluidState, cs: &ConstitutiveSet, delta: f64, beta: f64) -> f64 {
    energy_components(state, cs, delta, beta).total()
}

/// One ledger line. Dissipations and forcing work are cumulative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LedgerRow {
    pub step: usize,
    pub t: f64,
    pub dt: f64,
    pub kinetic: f64,
    pub elastic: f64,
    pub artificial: f64,
    pub thermal: f64,
    pub total: f64,
    /// `δ ∫∫ S:∇u`
    pub stress_dissipation: f64,
    /// `η ∫∫ |∇u|²`
    pub eta_dissipation: f64,
    /// `δ ∫∫ ϑ³`
    pub cubic_dissipation: f64,
    /// Energy injected by forcing.
    pub forcing_work: f64,
    /// `E(t) + dissipations(t) − E(0)`
    pub residual: f64,
}

impl LedgerRow {
    pub fn initial(c: EnergyComponents) -> Self {
        LedgerRow {
            kinetic: c.kinetic,
            elastic: c.elastic,
            artificial: c.artificial,
            thermal: c.thermal,
            total: c.total(),
            ..Default::default()
        }
    }

    /// Next row, accumulating dissipation at the right endpoint.
    pub fn advance(&self, step: usize, t: f64, c: EnergyComponents, rep: &StepReport) -> Self {
        LedgerRow {
            step,
            t,
            dt: rep.dt,
            kinetic: c.kinetic,
            elastic: c.elastic,
            artificial: c.artificial,
            thermal: c.thermal,
            total: c.total(),
            stress_dissipation: self.stress_dissipation + rep.dt * rep.stress_rate,
            eta_dissipation: self.eta_dissipation + rep.dt * rep.eta_rate,
            cubic_dissipation: self.cubic_dissipation + rep.dt * rep.cubic_rate,
            forcing_work: self.forcing_work + rep.dt * rep.forcing_rate,
            residual: 0.0,
        }
    }

    pub fn dissipation(&self) -> f64 {
        self.stress_dissipation + self.eta_dissipation + self.cubic_dissipation
    }
}

/// Energy time series, one row per time step.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct EnergyLedger {
    pub rows: Vec<LedgerRow>,
}

impl EnergyLedger {
    /// Append a row, filling in its residual against the first row.
    pub fn push(&mut self, mut row: LedgerRow) {
        let e0 = self.rows.first().map_or(row.total, |r| r.total);
        row.residual = row.total + row.dissipation() - e0;
        self.rows.push(row);
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut rd = csv::Reader::from_path(path)?;
        let rows = rd.deserialize().collect::<std::result::Result<Vec<LedgerRow>, _>>()?;
        Ok(EnergyLedger { rows })
    }

    /// Dissipation series are non-decreasing.
    pub fn dissipations_monotone(&self) -> bool {
        self.rows.windows(2).all(|w| {
            w[1].stress_dissipation >= w[0].stress_dissipation
                && w[1].eta_dissipation >= w[0].eta_dissipation
                && w[1].cubic_dissipation >= w[0].cubic_dissipation
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnergyCheckOptions {
    /// Multiple of the first-step defect rate allowed per unit time.
    pub c_tol: f64,
    /// First-step defect from a calibration run; `None` uses this run's.
    pub calibration: Option<f64>,
}

impl Default for EnergyCheckOptions {
    fn default() -> Self {
        EnergyCheckOptions {
            c_tol: 10.0,
            calibration: None,
        }
    }
}

/// First-step residual of a ledger.
pub fn first_step_defect(ledger: &EnergyLedger) -> Option<f64> {
    ledger.rows.get(1).map(|r| r.residual)
}

/// Check `E(t) + dissipations(t) − E(0) ≤ c_tol · |d₁| · t/dt` at every step,
/// where `d₁` is the first-step defect. The per-step defect is floored at
/// `1e-14 · E(0)`.
pub fn energy_inequality_check(traj: &Trajectory, opts: EnergyCheckOptions) -> Result<InequalityReport> {
    check_ledger(&traj.ledger, traj.dt, opts)
}

pub fn check_ledger(ledger: &EnergyLedger, dt: f64, opts: EnergyCheckOptions) -> Result<InequalityReport> {
    if ledger.rows.len() < 2 {
        return Err(invalid("energy ledger needs at least one step"));
    }
    let e0 = ledger.rows[0].total;
    let d1 = opts
        .calibration
        .or_else(|| first_step_defect(ledger))
        .unwrap_or(0.0)
        .abs()
        .max(1e-14 * e0.abs());
    let times: Vec<f64> = ledger.rows.iter().map(|r| r.t).collect();
    let residuals: Vec<f64> = ledger.rows.iter().map(|r| r.residual).collect();
    let tolerances: Vec<f64> = times.iter().map(|t| opts.c_tol * d1 * t / dt).collect();
    Ok(InequalityReport::new("energy inequality", times, residuals, tolerances))
}
