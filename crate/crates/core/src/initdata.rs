//! Initial data, its δ-regularization, and the regularized initial energy.

use serde::{Deserialize, Serialize};

use crate::constitutive::ConstitutiveSet;
use crate::discretization::io::FieldSnapshot;
use crate::discretization::{Grid, ScalarField, VectorField};
use crate::error::{invalid, Error, Result};

/// Relative slack in the momentum selector `ϱ_{0,δ} ≥ ϱ₀`, absorbing the
/// rounding of the normalized mollifier on constant data.
pub const SELECTOR_SLACK: f64 = 1e-12;

/// Reference δ at which the mollifier has its nominal radius.
pub const DELTA_REF: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct InitialData {
    pub rho0: ScalarField,
    pub m0: VectorField,
    pub theta0: ScalarField,
    pub rho_lower: f64,
    pub theta_lower: f64,
    /// Upper temperature clamp; defaults to `1.01 · max ϑ₀`.
    pub theta_upper: Option<f64>,
}

impl InitialData {
    pub fn new(
        rho0: ScalarField,
        m0: VectorField,
        theta0: ScalarField,
        theta_lower: f64,
        theta_upper: Option<f64>,
    ) -> Result<Self> {
        rho0.grid.check_same(&theta0.grid)?;
        rho0.grid.check_same(&m0.grid)?;
        if !(rho0.all_finite() && theta0.all_finite() && m0.all_finite()) {
            return Err(invalid("initial data must be finite"));
        }
        let rho_lower = rho0.min();
        if !(rho_lower > 0.0) {
            return Err(invalid(format!(
                "ϱ₀ must be bounded below by a positive constant, min {rho_lower}"
            )));
        }
        if !(theta_lower > 0.0) || theta0.min() < theta_lower {
            return Err(invalid(format!(
                "ϑ₀ must satisfy ϑ₀ ≥ ϑ̲ > 0 (ϑ̲ = {theta_lower}, min ϑ₀ = {})",
                theta0.min()
            )));
        }
        if let Some(up) = theta_upper {
            if !(up >= theta_lower) {
                return Err(invalid("ϑ̄ must be at least ϑ̲"));
            }
        }
        Ok(InitialData {
            rho0,
            m0,
            theta0,
            rho_lower,
            theta_lower,
            theta_upper,
        })
    }

    /// Components `[ϱ, m_x, (m_y,) ϑ]`.
    pub fn from_snapshot(s: &FieldSnapshot, theta_lower: Option<f64>, theta_upper: Option<f64>) -> Result<Self> {
        let g = s.grid;
        if s.components.len() != g.dim + 2 {
            return Err(Error::Format(format!(
                "initial-data snapshot needs {} components, found {}",
                g.dim + 2,
                s.components.len()
            )));
        }
        let rho = ScalarField::from_vec(g, s.components[0].clone())?;
        let m = VectorField::from_components(g, s.components[1..=g.dim].to_vec())?;
        let theta = ScalarField::from_vec(g, s.components[g.dim + 1].clone())?;
        let lower = theta_lower.unwrap_or_else(|| theta.min());
        Self::new(rho, m, theta, lower, theta_upper)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Profile {
    #[default]
    Constant,
    GaussianBump,
    TwoBump,
}

/// Preset initial data with amplitude parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct InitialSpec {
    pub preset: Profile,
    pub rho_base: f64,
    pub rho_amp: f64,
    pub theta_base: f64,
    pub theta_amp: f64,
    pub velocity_amp: f64,
    /// Bump width as a fraction of the domain extent.
    pub width: f64,
    /// `ϑ̲`; defaults to `min ϑ₀`.
    pub theta_lower: Option<f64>,
    pub theta_upper: Option<f64>,
    /// Mollifier radius in cells at `δ = 0.1`.
    pub radius_cells: f64,
    /// Load `[ϱ, m, ϑ]` from a snapshot file instead of the preset.
    pub file: Option<String>,
}

impl Default for InitialSpec {
    fn default() -> Self {
        InitialSpec {
            preset: Profile::Constant,
            rho_base: 1.0,
            rho_amp: 0.0,
            theta_base: 1.0,
            theta_amp: 0.0,
            velocity_amp: 0.0,
            width: 0.1,
            theta_lower: None,
            theta_upper: None,
            radius_cells: 2.0,
            file: None,
        }
    }
}

impl InitialSpec {
    pub fn build(&self, grid: Grid) -> Result<InitialData> {
        if let Some(path) = &self.file {
            let s = FieldSnapshot::read(std::path::Path::new(path))?;
            grid.check_same(&s.grid)?;
            return InitialData::from_snapshot(&s, self.theta_lower, self.theta_upper);
        }
        if !(self.width > 0.0) {
            return Err(invalid("bump width must be positive"));
        }
        let (lx, ly) = (grid.extent[0], grid.extent[1]);
        let two_d = grid.dim == 2;
        let w = self.width * lx;
        let gauss = |x: f64, y: f64, cx: f64, cy: f64| {
            let dy = if two_d { y - cy } else { 0.0 };
            (-((x - cx).powi(2) + dy * dy) / (2.0 * w * w)).exp()
        };
        let (cx, cy) = (0.5 * lx, 0.5 * ly);
        let (c1, c2) = (0.3 * lx, 0.7 * lx);
        let shape = |x: f64, y: f64| match self.preset {
            Profile::Constant => 0.0,
            Profile::GaussianBump => gauss(x, y, cx, cy),
            Profile::TwoBump => gauss(x, y, c1, cy) + gauss(x, y, c2, cy),
        };
        let rho = ScalarField::from_fn(grid, |x, y| self.rho_base + self.rho_amp * shape(x, y));
        let theta = ScalarField::from_fn(grid, |x, y| self.theta_base + self.theta_amp * shape(x, y));
        let a = self.velocity_amp;
        let vel = VectorField::from_fn(grid, |x, y| match self.preset {
            Profile::Constant => [0.0, 0.0],
            Profile::GaussianBump if two_d => {
                let g = gauss(x, y, cx, cy);
                [-a * g * (y - cy) / w, a * g * (x - cx) / w]
            }
            Profile::GaussianBump => [a * gauss(x, y, cx, cy), 0.0],
            Profile::TwoBump => [a * (gauss(x, y, c1, cy) - gauss(x, y, c2, cy)), 0.0],
        });
        let mut m = vel;
        for c in m.comps.iter_mut() {
            c.iter_mut().zip(&rho.data).for_each(|(v, r)| *v *= r);
        }
        let lower = self.theta_lower.unwrap_or_else(|| theta.min());
        InitialData::new(rho, m, theta, lower, self.theta_upper)
    }
}

/// Normalized discrete Gaussian smoothing with `σ = radius/2` cells,
/// truncated at `3σ`, with mirror reflection at the boundary.
pub fn mollify(f: &ScalarField, radius_cells: f64) -> ScalarField {
    let sigma = 0.5 * radius_cells;
    if !(sigma > 0.0) {
        return f.clone();
    }
    let reach = (3.0 * sigma).ceil() as isize;
    let weights: Vec<f64> = (-reach..=reach)
        .map(|o| (-(o as f64).powi(2) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    let g = f.grid;
    let mut data = f.data.clone();
    for axis in 0..g.dim {
        let n = g.cells[axis] as isize;
        let reflect = |p: isize| -> usize {
            let mut q = p;
            loop {
                if q < 0 {
                    q = -q - 1;
                } else if q >= n {
                    q = 2 * n - q - 1;
                } else {
                    return q as usize;
                }
            }
        };
        let src = data.clone();
        for (k, out) in data.iter_mut().enumerate() {
            let (i, j) = g.coords(k);
            let pos = if axis == 0 { i } else { j } as isize;
            *out = weights
                .iter()
                .enumerate()
                .map(|(w_idx, w)| {
                    let q = reflect(pos + w_idx as isize - reach);
                    let idx = if axis == 0 { g.index(q, j) } else { g.index(i, q) };
                    w * src[idx]
                })
                .sum();
        }
    }
    ScalarField { grid: g, data }
}

/// Copy the inward neighbour into each boundary cell, axis by axis, so the
/// discrete normal difference vanishes.
pub fn neumann_sweep(f: &mut ScalarField) {
    let g = f.grid;
    let (nx, ny) = (g.nx(), g.ny());
    for j in 0..ny {
        f.data[g.index(0, j)] = f.data[g.index(1, j)];
        f.data[g.index(nx - 1, j)] = f.data[g.index(nx - 2, j)];
    }
    if g.dim == 2 {
        for i in 0..nx {
            f.data[g.index(i, 0)] = f.data[g.index(i, 1)];
            f.data[g.index(i, ny - 1)] = f.data[g.index(i, ny - 2)];
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RegularizeOptions {
    /// Mollifier radius in cells at `δ = DELTA_REF`; it scales with `√(δ/DELTA_REF)` below.
    pub radius_cells: f64,
}

impl Default for RegularizeOptions {
    fn default() -> Self {
        RegularizeOptions { radius_cells: 2.0 }
    }
}

impl RegularizeOptions {
    pub fn radius_at(&self, delta: f64) -> f64 {
        self.radius_cells * (delta / DELTA_REF).sqrt().min(1.0)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedData {
    pub rho: ScalarField,
    pub m: VectorField,
    pub theta: ScalarField,
    pub rho_bounds: (f64, f64),
    pub theta_bounds: (f64, f64),
    pub radius_cells: f64,
}

impl RegularizedData {
    /// `u = m / ϱ`.
    pub fn velocity(&self) -> VectorField {
        let mut u = self.m.clone();
        for c in u.comps.iter_mut() {
            c.iter_mut().zip(&self.rho.data).for_each(|(v, r)| *v /= r);
        }
        u
    }

    /// Measure of `{ϱ_{0,δ} < ϱ₀}`.
    pub fn deficit_measure(&self, init: &InitialData) -> f64 {
        let cnt = self
            .rho
            .data
            .iter()
            .zip(&init.rho0.data)
            .filter(|(r, r0)| **r < **r0 * (1.0 - SELECTOR_SLACK))
            .count();
        cnt as f64 * self.rho.grid.cell_volume()
    }
}

/// Mollify, clamp to `[δ, δ^{−1/(2β)}]` and `[ϑ̲, ϑ̄]`, impose discrete
/// Neumann compatibility, and select the momentum where `ϱ_{0,δ} ≥ ϱ₀`.
pub fn regularize_initial_data(
    init: &InitialData,
    delta: f64,
    beta: f64,
    opts: RegularizeOptions,
) -> Result<RegularizedData> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(invalid(format!("δ must lie in (0, 1), got {delta}")));
    }
    if !(beta > 0.0) {
        return Err(invalid(format!("β must be positive, got {beta}")));
    }
    let rho_hi = delta.powf(-1.0 / (2.0 * beta));
    if delta >= rho_hi {
        return Err(invalid(format!("empty density clamp range [{delta}, {rho_hi}]")));
    }
    let radius = opts.radius_at(delta);
    let mut rho = mollify(&init.rho0, radius).map(|v| v.clamp(delta, rho_hi));
    neumann_sweep(&mut rho);
    let th_lo = init.theta_lower;
    let th_hi = init.theta_upper.unwrap_or(1.01 * init.theta0.max()).max(th_lo);
    let mut theta = mollify(&init.theta0, radius).map(|v| v.clamp(th_lo, th_hi));
    neumann_sweep(&mut theta);
    let mut m = init.m0.clone();
    for c in m.comps.iter_mut() {
        for (k, v) in c.iter_mut().enumerate() {
            if rho.data[k] < init.rho0.data[k] * (1.0 - SELECTOR_SLACK) {
                *v = 0.0;
            }
        }
    }
    Ok(RegularizedData {
        rho,
        m,
        theta,
        rho_bounds: (delta, rho_hi),
        theta_bounds: (th_lo, th_hi),
        radius_cells: radius,
    })
}

/// `E_δ(0) = ∫ |m|²/(2ϱ) + ϱP_e(ϱ) + δ/(β−1) ϱ^β + ϱϑ`.
pub fn initial_energy(reg: &RegularizedData, cs: &ConstitutiveSet, delta: f64, beta: f64) -> Result<f64> {
    let g = reg.rho.grid;
    let mut sum = 0.0;
    for k in 0..g.len() {
        let r = reg.rho.data[k];
        let m2: f64 = reg.m.comps.iter().map(|c| c[k] * c[k]).sum();
        let kin = if m2 == 0.0 { 0.0 } else { m2 / (2.0 * r) };
        sum += kin + cs.rho_pe(r) + delta / (beta - 1.0) * r.powf(beta) + r * reg.theta.data[k];
    }
    let e = sum * g.cell_volume();
    if !e.is_finite() {
        return Err(invalid("initial energy is not finite"));
    }
    Ok(e)
}
