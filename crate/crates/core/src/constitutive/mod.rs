//! Material laws (pressure, viscosities, heat conductivity), their primitives,
//! and validators for every structural hypothesis imposed on them.
//!
//! All types here are immutable after construction and safe to share across
//! worker threads.

mod hypotheses;
mod law;
mod renorm;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature;

pub use hypotheses::{validate_hypotheses, HypothesisCheck, HypothesisReport, SampleGrid};
pub use law::{fd_step, ScalarFn, ScalarLaw};
pub use renorm::{make_renormalizer, ConditionVerdict, HSpec, RenormalizerH};

/// Densities below this are never fed to `P_e`.
pub const RHO_FLOOR_PE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PressureKind {
    /// `p = p_e(ϱ) + ϑ p_ϑ(ϱ)`
    GeneralSplit,
    /// `p = p_e(ϱ) + R ϱ ϑ`
    LinearInDensity,
}

/// Constants appearing in the growth and coercivity hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HypothesisConstants {
    pub gamma: f64,
    pub a1: f64,
    pub a2: f64,
    pub b: f64,
    pub c: f64,
    pub kappa_lo: f64,
    pub kappa_hi: f64,
    pub c_nu: f64,
}

#[derive(Debug, Clone)]
pub struct ConstitutiveSet {
    pub pressure_kind: PressureKind,
    pub p_e: ScalarLaw,
    pub p_theta: ScalarLaw,
    pub r_gas: f64,
    pub mu: ScalarLaw,
    pub lambda: ScalarLaw,
    /// Lower envelope of `2μ + 3λ`; `None` means the envelope is `2μ + 3λ` itself.
    pub nu: Option<ScalarLaw>,
    pub kappa: ScalarLaw,
    pub constants: HypothesisConstants,
}

impl ConstitutiveSet {
    /// `p_e = ϱ²`, `p_ϑ = ϱ^{1/2}`, degenerate `μ = 0.1 ϑ`, `λ = 0`,
    /// `κ = 0.1 (1 + ϑ²)`, `γ = 2`.
    pub fn general_split() -> Self {
        ConstitutiveSet {
            pressure_kind: PressureKind::GeneralSplit,
            p_e: ScalarLaw::power(1.0, 2.0),
            p_theta: ScalarLaw::power(1.0, 0.5),
            r_gas: 1.0,
            mu: ScalarLaw::affine(0.0, 0.1),
            lambda: ScalarLaw::constant(0.0),
            nu: None,
            kappa: ScalarLaw::Polynomial(vec![0.1, 0.0, 0.1]),
            constants: HypothesisConstants {
                gamma: 2.0,
                a1: 2.0,
                a2: 1.0,
                b: 1.0,
                c: 1.0,
                kappa_lo: 0.1,
                kappa_hi: 0.1,
                c_nu: 0.2,
            },
        }
    }

    /// `p_e = ϱ⁴`, `R = 1`, `μ = 0.1 + ϑ`, `λ = 0`, `κ = 1 + ϑ²`, `γ = 4`.
    pub fn ideal_like() -> Self {
        ConstitutiveSet {
            pressure_kind: PressureKind::LinearInDensity,
            p_e: ScalarLaw::power(1.0, 4.0),
            p_theta: ScalarLaw::constant(0.0),
            r_gas: 1.0,
            mu: ScalarLaw::affine(0.1, 1.0),
            lambda: ScalarLaw::constant(0.0),
            nu: None,
            kappa: ScalarLaw::Polynomial(vec![1.0, 0.0, 1.0]),
            constants: HypothesisConstants {
                gamma: 4.0,
                a1: 4.0,
                a2: 1.0,
                b: 1.0,
                c: 1.0,
                kappa_lo: 1.0,
                kappa_hi: 1.0,
                c_nu: 0.2,
            },
        }
    }

    /// Thermal pressure coefficient: `p_ϑ(ϱ)` or `R ϱ`.
    #[inline]
    pub fn thermal_coefficient(&self, rho: f64) -> f64 {
        match self.pressure_kind {
            PressureKind::GeneralSplit => self.p_theta.eval(rho),
            PressureKind::LinearInDensity => self.r_gas * rho,
        }
    }

    #[inline]
    fn thermal_coefficient_deriv(&self, rho: f64) -> f64 {
        match self.pressure_kind {
            PressureKind::GeneralSplit => self.p_theta.deriv(rho),
            PressureKind::LinearInDensity => self.r_gas,
        }
    }

    /// Unchecked pressure for hot loops; inputs are assumed nonnegative.
    #[inline]
    pub fn p(&self, rho: f64, theta: f64) -> f64 {
        self.p_e.eval(rho) + theta * self.thermal_coefficient(rho)
    }

    pub fn pressure(&self, rho: f64, theta: f64) -> Result<f64> {
        if !(rho >= 0.0) || !(theta >= 0.0) {
            return Err(invalid(format!(
                "pressure requires ϱ ≥ 0 and ϑ ≥ 0, got ϱ={rho}, ϑ={theta}"
            )));
        }
        Ok(self.p(rho, theta))
    }

    #[inline]
    pub fn nu(&self, theta: f64) -> f64 {
        match &self.nu {
            Some(nu) => nu.eval(theta),
            None => 2.0 * self.mu.eval(theta) + 3.0 * self.lambda.eval(theta),
        }
    }

    /// `K(ϑ) = ∫_0^ϑ κ`.
    pub fn kappa_primitive(&self, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) {
            return Err(invalid(format!("K(ϑ) requires ϑ ≥ 0, got {theta}")));
        }
        self.kappa.primitive(theta)
    }

    /// `K` extended linearly with slope `κ(0)` to negative arguments.
    pub fn kirchhoff(&self, theta: f64) -> f64 {
        if theta < 0.0 {
            return self.kappa.eval(0.0) * theta;
        }
        match self.kappa.primitive_exact(theta) {
            Some(v) => v,
            None => self.kappa.primitive(theta).unwrap_or(f64::NAN),
        }
    }

    /// Inverse of [`Self::kirchhoff`].
    pub fn kirchhoff_inverse(&self, w: f64) -> f64 {
        let k0 = self.kappa.eval(0.0);
        if w <= 0.0 {
            return w / k0;
        }
        // bracket: K(ϑ) ≥ κ̲ (ϑ + ϑ³/3) ≥ κ(0)·ϑ·(min ratio) is not assumed; expand
        let mut lo = 0.0;
        let mut hi = (w / k0).max(1e-12);
        while self.kirchhoff(hi) < w {
            lo = hi;
            hi *= 2.0;
            if !hi.is_finite() {
                return f64::NAN;
            }
        }
        // w > 0 and K(0) = 0 ⇒ root in (lo, hi]
        let mut x = hi.min((w / k0).max(lo));
        for _ in 0..100 {
            let fx = self.kirchhoff(x) - w;
            if fx > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            let step = fx / self.kappa.eval(x);
            let mut next = x - step;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            if (next - x).abs() <= 1e-15 * (1.0 + x.abs()) {
                return next;
            }
            x = next;
        }
        x
    }

    /// `P_e(ϱ) = ∫_1^ϱ p_e(z)/z² dz`, for `ϱ ≥ 1e-8`.
    pub fn elastic_potential(&self, rho: f64) -> Result<f64> {
        if !(rho >= RHO_FLOOR_PE) {
            return Err(invalid(format!(
                "P_e is only evaluated for ϱ ≥ {RHO_FLOOR_PE:e}, got {rho}"
            )));
        }
        match elastic_potential_exact(&self.p_e, rho) {
            Some(v) => Ok(v),
            None => quadrature::integrate(|z| self.p_e.eval(z) / (z * z), 1.0, rho, 1e-12),
        }
    }

    /// `ϱ P_e(ϱ)`, the quantity entering the energy.
    ///
    /// Below the floor it is interpolated linearly to its limit 0 at ϱ = 0 when
    /// `p_e(z)/z` is integrable near 0, and clamped at the floor otherwise.
    pub fn rho_pe(&self, rho: f64) -> f64 {
        if rho >= RHO_FLOOR_PE {
            return rho * self.elastic_potential(rho).unwrap_or(f64::NAN);
        }
        let at_floor = RHO_FLOOR_PE * self.elastic_potential(RHO_FLOOR_PE).unwrap_or(f64::NAN);
        let p0 = self.p_e.eval(0.0);
        let slope0 = self.p_e.eval(RHO_FLOOR_PE) / RHO_FLOOR_PE;
        if p0 == 0.0 && slope0.is_finite() {
            at_floor * (rho.max(0.0) / RHO_FLOOR_PE)
        } else {
            log::warn!("ϱ P_e(ϱ) clamped at ϱ_floor: p_e(z)/z not integrable near 0");
            at_floor
        }
    }

    /// Squared adiabatic sound speed including the artificial pressure.
    pub fn sound_speed_sq(&self, rho: f64, theta: f64, delta: f64, beta: f64) -> f64 {
        let r = rho.max(1e-10);
        let pt = self.thermal_coefficient(rho);
        let dp = self.p_e.deriv(rho).max(0.0)
            + theta * self.thermal_coefficient_deriv(rho).max(0.0)
            + delta * beta * r.powf(beta - 1.0);
        let thermal = theta * pt * pt / (r * (delta + r));
        (dp + thermal).max(0.0)
    }
}

fn elastic_potential_exact(p_e: &ScalarLaw, rho: f64) -> Option<f64> {
    // ∫_1^ϱ c z^{e-2} dz
    let power_term = |c: f64, e: f64| -> f64 {
        if (e - 1.0).abs() < 1e-15 {
            c * rho.ln()
        } else {
            c * (rho.powf(e - 1.0) - 1.0) / (e - 1.0)
        }
    };
    match p_e {
        ScalarLaw::Polynomial(coeffs) => Some(
            coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| if c == 0.0 { 0.0 } else { power_term(c, k as f64) })
                .sum(),
        ),
        ScalarLaw::Power { coeff, exponent } => Some(power_term(*coeff, *exponent)),
        ScalarLaw::Sum(terms) => terms.iter().map(|t| elastic_potential_exact(t, rho)).sum(),
        ScalarLaw::Custom { .. } => None,
    }
}

/// `p_e = p_m − p_b` with `p_m` non-decreasing and `p_b ≥ 0` compactly supported,
/// tabulated on a uniform density grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PeDecomposition {
    pub rho: Vec<f64>,
    pub p_m: Vec<f64>,
    pub p_b: Vec<f64>,
    /// `supp p_b ⊆ [0, support_bound]`.
    pub support_bound: f64,
}

impl PeDecomposition {
    pub fn max_reconstruction_error(&self, p_e: &ScalarLaw) -> f64 {
        self.rho
            .iter()
            .zip(self.p_m.iter().zip(&self.p_b))
            .map(|(&r, (&m, &b))| (m - b - p_e.eval(r)).abs())
            .fold(0.0, f64::max)
    }
}

/// Running-maximum monotonization of `p_e` on `[0, rho_max]` with `n` samples.
pub fn pe_decomposition(cs: &ConstitutiveSet, rho_max: f64, n: usize) -> Result<PeDecomposition> {
    if !(rho_max > 0.0) || n < 2 {
        return Err(invalid("pe_decomposition needs rho_max > 0 and n ≥ 2"));
    }
    let rho: Vec<f64> = (0..n).map(|i| rho_max * i as f64 / (n - 1) as f64).collect();
    let p_e: Vec<f64> = rho.iter().map(|&r| cs.p_e.eval(r)).collect();
    let mut p_m = Vec::with_capacity(n);
    let mut running = f64::NEG_INFINITY;
    for &v in &p_e {
        running = running.max(v);
        p_m.push(running);
    }
    let p_b: Vec<f64> = p_m.iter().zip(&p_e).map(|(m, e)| m - e).collect();
    if p_b.iter().any(|v| !v.is_finite()) {
        return Err(Error::Decomposition("non-finite p_b".into()));
    }
    let last_positive = p_b.iter().rposition(|&v| v > 0.0);
    let support_bound = match last_positive {
        None => 0.0,
        Some(i) if i + 1 >= n => {
            return Err(Error::Decomposition(format!(
                "p_b does not vanish on the sampled range [0, {rho_max}]"
            )))
        }
        Some(i) => rho[i + 1],
    };
    Ok(PeDecomposition {
        rho,
        p_m,
        p_b,
        support_bound,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn linear_rho2() -> ConstitutiveSet {
        ConstitutiveSet {
            p_e: ScalarLaw::power(1.0, 2.0),
            pressure_kind: PressureKind::LinearInDensity,
            r_gas: 1.0,
            ..ConstitutiveSet::ideal_like()
        }
    }

    #[test]
    fn pressure_examples() {
        let cs = linear_rho2();
        assert_eq!(cs.pressure(2.0, 3.0).unwrap(), 10.0);
        assert_eq!(cs.pressure(0.0, 7.0).unwrap(), 0.0);
        let gs = ConstitutiveSet {
            p_theta: ScalarLaw::power(1.0, 0.5),
            ..ConstitutiveSet::general_split()
        };
        assert_eq!(gs.pressure(4.0, 1.0).unwrap(), 18.0);
        assert_eq!(gs.pressure(0.0, 2.5).unwrap(), 0.0);
        assert!(gs.pressure(-1.0, 1.0).is_err());
        assert!(gs.pressure(1.0, -1e-3).is_err());
    }

    #[test]
    fn kappa_primitive_examples() {
        let mut cs = ConstitutiveSet::ideal_like();
        assert!((cs.kappa_primitive(2.0).unwrap() - 14.0 / 3.0).abs() < 1e-14);
        assert_eq!(cs.kappa_primitive(0.0).unwrap(), 0.0);
        cs.kappa = ScalarLaw::Polynomial(vec![2.0, 0.0, 2.0]);
        assert!((cs.kappa_primitive(1.0).unwrap() - 8.0 / 3.0).abs() < 1e-14);
        assert!(cs.kappa_primitive(-1.0).is_err());
    }

    #[test]
    fn kappa_primitive_quadrature_path() {
        let mut cs = ConstitutiveSet::ideal_like();
        cs.kappa = ScalarLaw::custom("1+z^2", |z| 1.0 + z * z);
        let k = cs.kappa_primitive(2.0).unwrap();
        assert!(((k - 14.0 / 3.0) / (14.0 / 3.0)).abs() < 1e-10);
    }

    #[test]
    fn kirchhoff_inverse_roundtrip() {
        let cs = ConstitutiveSet::general_split();
        for &t in &[0.0, 1e-8, 0.3, 1.0, 7.5, 120.0] {
            let w = cs.kirchhoff(t);
            assert!((cs.kirchhoff_inverse(w) - t).abs() <= 1e-12 * (1.0 + t));
        }
        assert!((cs.kirchhoff_inverse(-0.01) + 0.1).abs() < 1e-14);
    }

    #[test]
    fn elastic_potential_examples() {
        let cs = linear_rho2();
        assert!((cs.elastic_potential(2.0).unwrap() - 1.0).abs() < 1e-14);
        assert_eq!(cs.elastic_potential(1.0).unwrap(), 0.0);
        assert!((cs.elastic_potential(0.5).unwrap() + 0.5).abs() < 1e-14);
        assert!(cs.elastic_potential(0.0).is_err());
    }

    #[test]
    fn rho_pe_extends_to_zero() {
        let cs = linear_rho2();
        assert_eq!(cs.rho_pe(0.0), 0.0);
        assert!(cs.rho_pe(1e-9).abs() < 1e-8);
    }

    #[test]
    fn monotone_pe_needs_no_correction() {
        let cs = ConstitutiveSet::general_split();
        let d = pe_decomposition(&cs, 10.0, 1001).unwrap();
        assert!(d.p_b.iter().all(|&b| b == 0.0));
        assert_eq!(d.support_bound, 0.0);
        assert_eq!(d.p_m, d.rho.iter().map(|r| r * r).collect::<Vec<_>>());
    }

    #[test]
    fn oscillating_pe_decomposition() {
        let mut cs = ConstitutiveSet::general_split();
        cs.p_e = ScalarLaw::custom("r^2 - sin(pi r) 1{r<=1}", |r| {
            r * r
                - if r <= 1.0 {
                    (std::f64::consts::PI * r).sin()
                } else {
                    0.0
                }
        });
        let d = pe_decomposition(&cs, 4.0, 4001).unwrap();
        assert!(d.max_reconstruction_error(&cs.p_e) <= 1e-12);
        assert!(d.p_m.windows(2).all(|w| w[1] >= w[0]));
        assert!(d.p_b.iter().all(|&b| b >= 0.0));
        assert!(d.support_bound > 0.0 && d.support_bound <= 1.0);
        // scan: nothing beyond the reported bound
        for (r, b) in d.rho.iter().zip(&d.p_b) {
            if *r > d.support_bound {
                assert_eq!(*b, 0.0);
            }
        }
    }

    #[test]
    fn unbounded_correction_is_reported() {
        let mut cs = ConstitutiveSet::general_split();
        cs.p_e = ScalarLaw::custom("-r", |r| -r);
        assert!(matches!(pe_decomposition(&cs, 2.0, 100), Err(Error::Decomposition(_))));
    }
}
