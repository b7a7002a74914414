//! Orchestration of configured runs and the on-disk artifacts they produce.
//!
//! An output directory may contain:
//! - `ledger.csv`: one [`LedgerRow`](crate::diagnostics::LedgerRow) per step.
//! - `report.json`: a [`RunReport`].
//! - `snapshots.csv` (`index,file,t`) and `snapshot_NNNNN.bin` files with components `[ϱ, u…, ϑ]`.
//! - `degiorgi.csv` and `degiorgi_report.json`: a [`DeGiorgiReport`].
//! - `sweep.csv` and `sweep_report.json`: a [`SweepReport`].

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::constitutive::{make_renormalizer, HypothesisReport};
use crate::continuation::{parameter_sweep, SweepReport};
use crate::degiorgi::{verify_recursion, DeGiorgiReport};
use crate::diagnostics::{
    energy_inequality_check, poincare_batch, renorm_residual_bank, test_bank, EnergyLedger, InequalityReport,
    PoincareBatch,
};
use crate::discretization::io::FieldSnapshot;
use crate::error::{Error, Result};
use crate::exec::Execution;
use crate::initdata::regularize_initial_data;
use crate::solver::{simulate_partial, FluidState, RunStats, Trajectory};

pub const LEDGER_FILE: &str = "ledger.csv";
pub const REPORT_FILE: &str = "report.json";
pub const SNAPSHOT_INDEX_FILE: &str = "snapshots.csv";
pub const DEGIORGI_CSV: &str = "degiorgi.csv";
pub const DEGIORGI_REPORT: &str = "degiorgi_report.json";
pub const SWEEP_CSV: &str = "sweep.csv";
pub const SWEEP_REPORT: &str = "sweep_report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenormSummary {
    pub renormalizer: String,
    pub admissible: bool,
    pub reports: Vec<InequalityReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub completed: bool,
    pub error: Option<String>,
    pub final_time: f64,
    pub stats: RunStats,
    pub hypotheses: HypothesisReport,
    pub energy: Option<InequalityReport>,
    pub renorm: Vec<RenormSummary>,
    pub poincare: Option<PoincareBatch>,
}

impl RunReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    /// All enabled checks passed and the run reached the horizon.
    pub fn passed(&self) -> bool {
        self.completed
            && self.energy.as_ref().is_none_or(|e| e.passed)
            && self
                .renorm
                .iter()
                .all(|r| r.error.is_none() && r.reports.iter().all(|x| x.passed))
    }
}

/// Integrate the configured problem; on failure the partial trajectory is kept.
pub fn run_trajectory(cfg: &RunConfig) -> Result<(Trajectory, Option<Error>)> {
    cfg.validated()?;
    let init = cfg.build_initial()?;
    let p = cfg.regularization;
    let reg = regularize_initial_data(&init, p.delta, p.beta, cfg.regularize)?;
    Ok(simulate_partial(
        FluidState::from_regularized(&reg),
        &cfg.constitutive(),
        p,
        cfg.time,
        cfg.forcing,
    ))
}

/// Evaluate the enabled diagnostics on a trajectory.
pub fn diagnose(cfg: &RunConfig, traj: &Trajectory, error: Option<&Error>) -> Result<RunReport> {
    let d = &cfg.diagnostics;
    let energy = if d.energy && traj.ledger.rows.len() >= 2 {
        Some(energy_inequality_check(traj, d.energy_check)?)
    } else {
        None
    };
    let renorm = if d.renorm && traj.snapshots.len() >= 2 {
        d.renormalizers
            .iter()
            .map(|spec| {
                let h = make_renormalizer(spec.build());
                let res = renorm_residual_bank(traj, &h, &test_bank(), d.renorm_check);
                RenormSummary {
                    renormalizer: h.spec.label(),
                    admissible: h.admissible,
                    error: res.as_ref().err().map(|e| e.to_string()),
                    reports: res.unwrap_or_default(),
                }
            })
            .collect()
    } else {
        Vec::new()
    };
    let poincare = if d.poincare_samples > 0 {
        Some(poincare_batch(
            &traj.grid(),
            &d.poincare,
            d.poincare_samples,
            cfg.seed,
            Execution::Parallel,
        )?)
    } else {
        None
    };
    Ok(RunReport {
        seed: cfg.seed,
        completed: error.is_none(),
        error: error.map(|e| e.to_string()),
        final_time: traj.last().t,
        stats: traj.stats.clone(),
        hypotheses: cfg.hypotheses(),
        energy,
        renorm,
        poincare,
    })
}

pub fn snapshot_of(state: &FluidState) -> Result<FieldSnapshot> {
    let mut comps = vec![state.rho.data.clone()];
    comps.extend(state.u.comps.iter().cloned());
    comps.push(state.theta.data.clone());
    FieldSnapshot::new(state.grid(), comps)
}

/// Write the ledger and, optionally, every snapshot with an index file.
pub fn write_trajectory(dir: &Path, traj: &Trajectory, snapshots: bool) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    traj.ledger.write_csv(&dir.join(LEDGER_FILE))?;
    if snapshots {
        let mut w = csv::Writer::from_path(dir.join(SNAPSHOT_INDEX_FILE))?;
        w.write_record(["index", "file", "t"])?;
        for (i, s) in traj.snapshots.iter().enumerate() {
            let name = format!("snapshot_{i:05}.bin");
            snapshot_of(s)?.write(&dir.join(&name))?;
            w.write_record([i.to_string(), name, format!("{:e}", s.t)])?;
        }
        w.flush()?;
    }
    Ok(())
}

/// Files listed in a snapshot index, with their times.
pub fn read_snapshot_index(dir: &Path) -> Result<Vec<(PathBuf, f64)>> {
    let mut rd = csv::Reader::from_path(dir.join(SNAPSHOT_INDEX_FILE))?;
    rd.records()
        .map(|r| {
            let r = r?;
            let t: f64 = r
                .get(2)
                .and_then(|v| v.parse().ok())
                .ok_or_else(|| Error::Format("bad snapshot index row".into()))?;
            Ok((dir.join(r.get(1).unwrap_or_default()), t))
        })
        .collect()
}

/// Outputs of a `simulate` run.
pub struct SimulationOutcome {
    pub trajectory: Trajectory,
    pub report: RunReport,
    pub error: Option<Error>,
}

/// Run, diagnose and write `ledger.csv`, `report.json` and snapshots.
/// Artifacts are written even when the run fails part-way.
pub fn simulate_to_dir(cfg: &RunConfig, dir: &Path) -> Result<SimulationOutcome> {
    let (traj, err) = run_trajectory(cfg)?;
    write_trajectory(dir, &traj, cfg.output.snapshots)?;
    let report = diagnose(cfg, &traj, err.as_ref())?;
    report.write_json(&dir.join(REPORT_FILE))?;
    Ok(SimulationOutcome {
        trajectory: traj,
        report,
        error: err,
    })
}

/// Run and write the De Giorgi level analysis next to the trajectory artifacts.
pub fn degiorgi_to_dir(cfg: &RunConfig, dir: &Path) -> Result<(DeGiorgiReport, Option<Error>)> {
    let (traj, err) = run_trajectory(cfg)?;
    write_trajectory(dir, &traj, false)?;
    let mut dg = cfg.degiorgi;
    if dg.theta_lower.is_none() {
        dg.theta_lower = cfg.initial.theta_lower;
    }
    let rep = verify_recursion(&traj, &dg, Execution::Parallel)?;
    rep.write_csv(&dir.join(DEGIORGI_CSV))?;
    rep.write_json(&dir.join(DEGIORGI_REPORT))?;
    Ok((rep, err))
}

pub fn sweep_to_dir(cfg: &RunConfig, dir: &Path) -> Result<SweepReport> {
    cfg.validated()?;
    std::fs::create_dir_all(dir)?;
    let rep = parameter_sweep(
        &cfg.sweep_base()?,
        cfg.sweep.param,
        &cfg.sweep.levels,
        Execution::Parallel,
    )?;
    rep.write_json(&dir.join(SWEEP_REPORT))?;
    rep.write_csv(&dir.join(SWEEP_CSV))?;
    Ok(rep)
}

/// Everything found in an output directory.
#[derive(Debug, Default)]
pub struct LoadedArtifacts {
    pub ledger: Option<EnergyLedger>,
    pub report: Option<RunReport>,
    pub snapshots: Vec<(FieldSnapshot, f64)>,
    pub degiorgi: Option<DeGiorgiReport>,
    pub sweep: Option<SweepReport>,
}

pub fn load_artifacts(dir: &Path) -> Result<LoadedArtifacts> {
    if !dir.is_dir() {
        return Err(Error::InvalidInput(format!("{} is not a directory", dir.display())));
    }
    let exists = |f: &str| dir.join(f).is_file();
    let mut out = LoadedArtifacts::default();
    if exists(LEDGER_FILE) {
        out.ledger = Some(EnergyLedger::read_csv(&dir.join(LEDGER_FILE))?);
    }
    if exists(REPORT_FILE) {
        out.report = Some(RunReport::read_json(&dir.join(REPORT_FILE))?);
    }
    if exists(SNAPSHOT_INDEX_FILE) {
        for (path, t) in read_snapshot_index(dir)? {
            out.snapshots.push((FieldSnapshot::read(&path)?, t));
        }
    }
    if exists(DEGIORGI_REPORT) {
        out.degiorgi = Some(DeGiorgiReport::read_json(&dir.join(DEGIORGI_REPORT))?);
    }
    if exists(SWEEP_REPORT) {
        out.sweep = Some(SweepReport::read_json(&dir.join(SWEEP_REPORT))?);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> RunConfig {
        RunConfig::parse(
            "seed = 3\n[grid]\ncells = [32]\n[time]\nhorizon = 0.05\ndt = 0.005\nsnapshot_every = 2\n\
             [initial]\npreset = \"gaussian-bump\"\nvelocity_amp = 0.3\n[diagnostics]\npoincare_samples = 8\n",
        )
        .unwrap()
    }

    #[test]
    fn artifacts_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config();
        let out = simulate_to_dir(&cfg, dir.path()).unwrap();
        assert!(out.error.is_none());
        let loaded = load_artifacts(dir.path()).unwrap();
        let ledger = loaded.ledger.unwrap();
        assert_eq!(ledger.rows.len(), out.trajectory.ledger.rows.len());
        for (a, b) in ledger.rows.iter().zip(&out.trajectory.ledger.rows) {
            assert_eq!(a, b);
        }
        assert_eq!(loaded.snapshots.len(), out.trajectory.snapshots.len());
        let (snap, t) = &loaded.snapshots[1];
        assert_eq!(*t, out.trajectory.snapshots[1].t);
        assert_eq!(snap.components[0], out.trajectory.snapshots[1].rho.data);
        let rep = loaded.report.unwrap();
        assert_eq!(rep.seed, 3);
        assert!(rep.poincare.is_some());
    }
}
