//! De Giorgi level-set machinery for temperature lower bounds: level
//! sequences, logarithmic truncations, level energies, the nonlinear
//! recursion lemma and certificates `ϑ ≥ e^{−M} − ω`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::discretization::ops::centered_diff;
use crate::discretization::{sym_gradient, Bc, ScalarField};
use crate::error::{invalid, Result};
use crate::exec::{self, Execution};
use crate::solver::Trajectory;

/// Threshold below which a recursion iterate counts as converged.
pub const RECURSION_ZERO: f64 = 1e-12;
/// Iterates above this are treated as divergent.
const RECURSION_OVERFLOW: f64 = 1e300;

/// Start times `T_k` of the level energies.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LevelSchedule {
    /// `T_k = 0` for all `k`.
    #[default]
    Zero,
    /// `T_k = T₁ (1 − 2^{−k})`.
    Geometric { t1: f64 },
}

impl LevelSchedule {
    pub fn start(&self, k: usize) -> f64 {
        match *self {
            LevelSchedule::Zero => 0.0,
            LevelSchedule::Geometric { t1 } => t1 * (1.0 - 0.5f64.powi(k as i32)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DeGiorgiConfig {
    /// Level depth `M`.
    pub m: f64,
    /// Temperature shift `ω`.
    pub omega: f64,
    pub k_max: usize,
    pub schedule: LevelSchedule,
    pub alpha: f64,
    /// Interpolation exponent, distinct from the artificial-pressure `β`.
    pub beta_interp: f64,
    /// `U_{k_max}` at or below this issues a certificate.
    pub certify_threshold: f64,
    /// Lower bound `ϑ̲` of the initial temperature; `None` uses the observed minimum.
    pub theta_lower: Option<f64>,
}

impl Default for DeGiorgiConfig {
    fn default() -> Self {
        DeGiorgiConfig {
            m: 10.0,
            omega: 1e-6,
            k_max: 30,
            schedule: LevelSchedule::Zero,
            alpha: 2.0,
            beta_interp: 0.5,
            certify_threshold: 1e-10,
            theta_lower: None,
        }
    }
}

impl DeGiorgiConfig {
    /// `σ = min((α + β)/2, α)`.
    pub fn sigma(&self) -> f64 {
        (0.5 * (self.alpha + self.beta_interp)).min(self.alpha)
    }

    /// Hölder exponent `p = 2/(α − β)`.
    pub fn holder_p(&self) -> f64 {
        2.0 / (self.alpha - self.beta_interp)
    }

    /// Hölder exponent `q = 6/(α + 5β)`.
    pub fn holder_q(&self) -> f64 {
        6.0 / (self.alpha + 5.0 * self.beta_interp)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.m > 0.0 && self.m.is_finite()) {
            return Err(invalid(format!("M must be positive, got {}", self.m)));
        }
        if !(self.omega >= 0.0) {
            return Err(invalid(format!("ω must be nonnegative, got {}", self.omega)));
        }
        if self.k_max < 1 {
            return Err(invalid("k_max must be at least 1"));
        }
        if !(self.alpha > 1.0) {
            return Err(invalid(format!("α must exceed 1, got {}", self.alpha)));
        }
        if !(self.beta_interp > 0.0 && self.beta_interp < 1.0) {
            return Err(invalid(format!(
                "β_interp must lie in (0, 1), got {}",
                self.beta_interp
            )));
        }
        if !(self.sigma() > 1.0) {
            return Err(invalid(format!("σ = {} must exceed 1", self.sigma())));
        }
        if let LevelSchedule::Geometric { t1 } = self.schedule {
            if !(t1 >= 0.0) {
                return Err(invalid("T₁ must be nonnegative"));
            }
        }
        Ok(())
    }
}

/// `C_k = e^{−M(1 − 2^{−k})}` for `k = 0..=k_max`.
pub fn level_sequence(m: f64, k_max: usize) -> Result<Vec<f64>> {
    if !(m > 0.0 && m.is_finite()) {
        return Err(invalid(format!("M must be positive, got {m}")));
    }
    Ok((0..=k_max)
        .map(|k| (-m * (1.0 - 0.5f64.powi(k as i32))).exp())
        .collect())
}

/// `ln(C_{k−1}/C_k) = M 2^{−k}`, evaluated without cancellation.
pub fn level_gap(m: f64, k: usize) -> f64 {
    m * 0.5f64.powi(k as i32)
}

/// Truncation `φ = [ln(C_k/(ϑ+ω))]₊` with its companion fields.
#[derive(Debug, Clone, PartialEq)]
pub struct Truncation {
    pub phi: ScalarField,
    /// `1_{ϑ+ω ≤ C_k}`
    pub indicator: ScalarField,
    /// `1_{level}/(ϑ+ω)`, the weight of the viscous term.
    pub viscous_weight: ScalarField,
    /// `1_{level}/(ϑ+ω)²`, the weight of the conductive term.
    pub conductive_weight: ScalarField,
}

pub fn truncation_phi(theta: &ScalarField, c_k: f64, omega: f64) -> Result<Truncation> {
    if !(c_k > 0.0) || !(omega >= 0.0) {
        return Err(invalid(format!("need C_k > 0 and ω ≥ 0, got C_k = {c_k}, ω = {omega}")));
    }
    let n = theta.data.len();
    let mut phi = vec![0.0; n];
    let mut ind = vec![0.0; n];
    let mut vw = vec![0.0; n];
    let mut cw = vec![0.0; n];
    for (k, &t) in theta.data.iter().enumerate() {
        let s = t + omega;
        if s <= 0.0 {
            return Err(invalid(format!("ϑ + ω = {s} ≤ 0 at cell {k}: truncation is infinite")));
        }
        if s <= c_k {
            phi[k] = (c_k / s).ln();
            ind[k] = 1.0;
            vw[k] = 1.0 / s;
            cw[k] = 1.0 / (s * s);
        }
    }
    let g = theta.grid;
    Ok(Truncation {
        phi: ScalarField { grid: g, data: phi },
        indicator: ScalarField { grid: g, data: ind },
        viscous_weight: ScalarField { grid: g, data: vw },
        conductive_weight: ScalarField { grid: g, data: cw },
    })
}

/// Per-snapshot pieces of `U_{k,ω}`: the truncated mass and the dissipation density.
fn level_snapshot_terms(traj: &Trajectory, idx: usize, c_k: f64, omega: f64) -> Result<(f64, f64)> {
    let s = &traj.snapshots[idx];
    let g = s.grid();
    let cs = &traj.cs;
    let delta = traj.params.delta;
    let tr = truncation_phi(&s.theta, c_k, omega)?;
    if tr.indicator.data.iter().all(|&v| v == 0.0) {
        return Ok((0.0, 0.0));
    }
    let d = sym_gradient(&s.u);
    let dd = d.frob_sq().data;
    let grad_th: Vec<Vec<f64>> = (0..g.dim)
        .map(|a| centered_diff(&s.theta.data, &g, a, Bc::Neumann))
        .collect();
    let mut mass = 0.0;
    let mut diss = 0.0;
    for k in 0..g.len() {
        if tr.indicator.data[k] == 0.0 {
            continue;
        }
        let t = s.theta.data[k].max(0.0);
        mass += (delta + s.rho.data[k]) * tr.phi.data[k];
        let g2: f64 = grad_th.iter().map(|c| c[k] * c[k]).sum();
        diss += (1.0 - delta) * cs.nu(t) * tr.viscous_weight.data[k] * dd[k]
            + cs.kappa.eval(t) * tr.conductive_weight.data[k] * g2;
    }
    let vol = g.cell_volume();
    Ok((mass * vol, diss * vol))
}

/// `U_{k,ω} = sup_{t ≥ T_k} ∫(δ+ϱ)φ + ∫_{T_k}^T ∫ [(1−δ)ν/(ϑ+ω)|D(u)|² + κ/(ϑ+ω)²|∇ϑ|²] 1_{level}`,
/// with the supremum over snapshot times and the time integral by trapezoid.
pub fn level_energy_u(traj: &Trajectory, k: usize, config: &DeGiorgiConfig) -> Result<f64> {
    let c_k = level_sequence(config.m, k)?[k];
    let t_k = config.schedule.start(k);
    let idx: Vec<usize> = (0..traj.snapshots.len())
        .filter(|&i| traj.snapshots[i].t >= t_k - 1e-12)
        .collect();
    if idx.is_empty() {
        return Err(invalid(format!("no snapshot at or after T_k = {t_k}")));
    }
    let terms = idx
        .iter()
        .map(|&i| level_snapshot_terms(traj, i, c_k, config.omega))
        .collect::<Result<Vec<_>>>()?;
    let sup = terms.iter().map(|t| t.0).fold(0.0, f64::max);
    let mut integral = 0.0;
    for w in 0..idx.len().saturating_sub(1) {
        let dt = traj.snapshots[idx[w + 1]].t - traj.snapshots[idx[w]].t;
        integral += 0.5 * dt * (terms[w].1 + terms[w + 1].1);
    }
    Ok(sup + integral)
}

/// Iterates of `U_k = C (A^k/K)(U_{k−1}^{β₁} + U_{k−1}^{β₂})`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecursionOutcome {
    pub sequence: Vec<f64>,
    /// `U_{k_max} ≤ 1e-12`.
    pub converged: bool,
    /// Any `K > K₀` gives `U_k ≤ U₀ r^k`.
    pub k0: f64,
    /// Geometric rate `r` of the sufficient bound.
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionParams {
    pub c: f64,
    pub a: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub k: f64,
}

impl RecursionParams {
    pub fn validate(&self, u0: f64) -> Result<()> {
        if !(self.a >= 1.0) {
            return Err(invalid(format!("A ≥ 1 required, got {}", self.a)));
        }
        if !(self.beta1 > 1.0 && self.beta2 >= self.beta1 && self.beta2.is_finite()) {
            return Err(invalid(format!(
                "exponents need 1 < β₁ ≤ β₂, got β₁ = {}, β₂ = {}",
                self.beta1, self.beta2
            )));
        }
        if !(self.c > 0.0 && self.k > 0.0) {
            return Err(invalid("C and K must be positive"));
        }
        if !(u0 >= 0.0 && u0 <= self.c) {
            return Err(invalid(format!("0 ≤ U₀ ≤ C required, got U₀ = {u0}, C = {}", self.c)));
        }
        Ok(())
    }

    /// Sufficient constant from the ansatz `U_k ≤ U₀ r^k` with
    /// `r = min(1/2, A^{−1/(β₁−1)})`:
    /// `K₀ = C (1 + U₀^{β₂−β₁}) U₀^{β₁−1} r^{−β₁}`.
    pub fn sufficient_k(&self, u0: f64) -> (f64, f64) {
        let r = 0.5f64.min(self.a.powf(-1.0 / (self.beta1 - 1.0)));
        let k0 = self.c * (1.0 + u0.powf(self.beta2 - self.beta1)) * u0.powf(self.beta1 - 1.0) * r.powf(-self.beta1);
        (k0, r)
    }
}

pub fn recursion_lemma(u0: f64, p: RecursionParams, k_max: usize) -> Result<RecursionOutcome> {
    p.validate(u0)?;
    let mut seq = Vec::with_capacity(k_max + 1);
    seq.push(u0);
    let mut u = u0;
    for k in 1..=k_max {
        u = p.c * (p.a.powi(k as i32) / p.k) * (u.powf(p.beta1) + u.powf(p.beta2));
        if !(u <= RECURSION_OVERFLOW) {
            u = f64::INFINITY;
            seq.push(u);
            break;
        }
        seq.push(u);
    }
    let (k0, rate) = p.sufficient_k(u0);
    let converged = seq.len() == k_max + 1 && u <= RECURSION_ZERO;
    Ok(RecursionOutcome {
        sequence: seq,
        converged,
        k0,
        rate,
    })
}

/// Least-squares fit of `ln U_k = ln C − α ln M + k α ln 2 + σ ln U_{k−1}` on `k ≥ 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecursionFit {
    pub c: f64,
    pub alpha: f64,
    pub sigma: f64,
    pub rms_residual: f64,
    pub points: usize,
}

fn solve3(a: [[f64; 3]; 3], b: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: [[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(a);
    let scale = a.iter().flatten().fold(0.0f64, |m, v| m.max(v.abs())).powi(3);
    if d.abs() <= 1e-12 * scale {
        return None;
    }
    let mut x = [0.0; 3];
    for (c, xc) in x.iter_mut().enumerate() {
        let mut m = a;
        for r in 0..3 {
            m[r][c] = b[r];
        }
        *xc = det(m) / d;
    }
    Some(x)
}

pub fn fit_recursion(u: &[f64], m: f64) -> Option<RecursionFit> {
    let ln2 = std::f64::consts::LN_2;
    let rows: Vec<([f64; 3], f64)> = (2..u.len())
        .filter(|&k| u[k] > 0.0 && u[k - 1] > 0.0)
        .map(|k| ([1.0, k as f64 * ln2, u[k - 1].ln()], u[k].ln()))
        .collect();
    if rows.len() < 3 {
        return None;
    }
    let mut ata = [[0.0; 3]; 3];
    let mut atb = [0.0; 3];
    for (x, y) in &rows {
        for i in 0..3 {
            atb[i] += x[i] * y;
            for j in 0..3 {
                ata[i][j] += x[i] * x[j];
            }
        }
    }
    let [a0, alpha, sigma] = solve3(ata, atb)?;
    let rms = (rows
        .iter()
        .map(|(x, y)| (a0 + alpha * x[1] + sigma * x[2] - y).powi(2))
        .sum::<f64>()
        / rows.len() as f64)
        .sqrt();
    Some(RecursionFit {
        c: (a0 + alpha * m.ln()).exp(),
        alpha,
        sigma,
        rms_residual: rms,
        points: rows.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CertificateKind {
    /// Levels decay and the initial truncation vanishes.
    Rigorous,
    /// Levels decay but `e^{−M/2} ≥ ϑ̲`, so the initial term is not controlled.
    Empirical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    /// `ϑ ≥ e^{−M} − ω`.
    pub bound: f64,
    pub kind: CertificateKind,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeGiorgiReport {
    pub config: DeGiorgiConfig,
    pub sigma: f64,
    pub holder_p: f64,
    pub holder_q: f64,
    pub c_levels: Vec<f64>,
    pub u_levels: Vec<f64>,
    pub fit: Option<RecursionFit>,
    pub monotone: bool,
    /// `U_{k_max} ≤ certify_threshold`.
    pub decayed: bool,
    /// `φ_{1,ω}(ϑ₀) ≡ 0`.
    pub initial_term_vanishes: bool,
    pub theta_lower: f64,
    pub observed_min_theta: f64,
    pub certificate: Option<Certificate>,
    pub warnings: Vec<String>,
}

impl DeGiorgiReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["k", "C_k", "U_k"])?;
        for (k, (c, u)) in self.c_levels.iter().zip(&self.u_levels).enumerate() {
            w.write_record([k.to_string(), format!("{c:e}"), format!("{u:e}")])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read_json(path: &Path) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}

/// Level energies for `k = 0..=k_max`, fitted recursion and certificate.
pub fn verify_recursion(traj: &Trajectory, config: &DeGiorgiConfig, exec: Execution) -> Result<DeGiorgiReport> {
    config.validate()?;
    let c_levels = level_sequence(config.m, config.k_max)?;
    let u_levels = exec::map_indices(config.k_max + 1, exec, |k| level_energy_u(traj, k, config))
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
    let monotone = u_levels.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12) + 1e-300);
    let last = *u_levels.last().expect("k_max ≥ 1");
    let decayed = last <= config.certify_threshold;
    let theta0 = &traj.initial().theta;
    let theta_lower = config.theta_lower.unwrap_or_else(|| theta0.min());
    let initial_term_vanishes = truncation_phi(theta0, c_levels[1], config.omega)?
        .phi
        .data
        .iter()
        .all(|&v| v == 0.0);
    let mut warnings = Vec::new();
    let rigorous_m = (-config.m / 2.0).exp() < theta_lower;
    if !rigorous_m {
        warnings.push(format!(
            "e^(-M/2) = {:.4e} is not below the initial lower bound {theta_lower:.4e}; the initial truncation term is uncontrolled and the certificate is empirical",
            (-config.m / 2.0).exp()
        ));
    }
    if !monotone {
        warnings.push("level energies are not non-increasing in k".into());
    }
    let certificate = decayed.then(|| Certificate {
        bound: (-config.m).exp() - config.omega,
        kind: if rigorous_m && initial_term_vanishes {
            CertificateKind::Rigorous
        } else {
            CertificateKind::Empirical
        },
    });
    Ok(DeGiorgiReport {
        config: *config,
        sigma: config.sigma(),
        holder_p: config.holder_p(),
        holder_q: config.holder_q(),
        fit: fit_recursion(&u_levels, config.m),
        c_levels,
        u_levels,
        monotone,
        decayed,
        initial_term_vanishes,
        theta_lower,
        observed_min_theta: traj.min_theta(),
        certificate,
        warnings,
    })
}

/// Smallest `M` in `candidates` (scanned in increasing order) whose report
/// issues a certificate, together with that report.
pub fn minimal_certifying_m(
    traj: &Trajectory,
    config: &DeGiorgiConfig,
    candidates: &[f64],
    exec: Execution,
) -> Result<Option<(f64, DeGiorgiReport)>> {
    let mut ms = candidates.to_vec();
    ms.sort_by(f64::total_cmp);
    for m in ms {
        let rep = verify_recursion(traj, &DeGiorgiConfig { m, ..*config }, exec)?;
        if rep.certificate.is_some() {
            return Ok(Some((m, rep)));
        }
    }
    Ok(None)
}
