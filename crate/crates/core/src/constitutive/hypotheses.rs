use serde::{Deserialize, Serialize};

use super::{ConstitutiveSet, PressureKind};

/// Sampling used by the hypothesis checks.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct SampleGrid {
    pub theta_max: f64,
    pub rho_max: f64,
    pub points: usize,
}

impl Default for SampleGrid {
    fn default() -> Self {
        SampleGrid {
            theta_max: 100.0,
            rho_max: 100.0,
            points: 512,
        }
    }
}

impl SampleGrid {
    /// `0` plus log-spaced points on `[1e-6·max, max]`.
    pub fn log_points(max: f64, n: usize) -> Vec<f64> {
        let m = n.max(3) - 1;
        let (lo, hi) = ((1e-6 * max).ln(), max.ln());
        std::iter::once(0.0)
            .chain((0..m).map(|i| (lo + (hi - lo) * i as f64 / (m - 1) as f64).exp()))
            .collect()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub name: String,
    pub passed: bool,
    /// Sample point of the first failure.
    pub witness: Option<f64>,
    pub detail: String,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct HypothesisReport {
    pub checks: Vec<HypothesisCheck>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &HypothesisCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    fn push(&mut self, name: &str, witness: Option<f64>, detail: impl Into<String>) {
        self.checks.push(HypothesisCheck {
            name: name.to_string(),
            passed: witness.is_none(),
            witness,
            detail: detail.into(),
        });
    }

    fn push_flag(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(HypothesisCheck {
            name: name.to_string(),
            passed,
            witness: None,
            detail: detail.into(),
        });
    }
}

const REL: f64 = 1e-9;

fn first_failure(grid: &[f64], pred: impl Fn(f64) -> bool) -> Option<f64> {
    grid.iter().copied().find(|&z| !pred(z))
}

/// Estimated Lipschitz constant and whether slopes stay bounded toward the
/// top of the sampled range.
fn lipschitz_probe(grid: &[f64], f: impl Fn(f64) -> f64) -> (f64, bool) {
    let slopes: Vec<f64> = grid
        .windows(2)
        .map(|w| ((f(w[1]) - f(w[0])) / (w[1] - w[0])).abs())
        .collect();
    let cut = slopes.len() * 9 / 10;
    let lower = slopes[..cut].iter().copied().fold(0.0, f64::max);
    let upper = slopes[cut..].iter().copied().fold(0.0, f64::max);
    let all = lower.max(upper);
    (all, all.is_finite() && upper <= 1.5 * lower.max(1e-300) + 1e-12)
}

/// Check every structural hypothesis on the material laws and the
/// artificial-pressure exponent, with a witness point for each failure.
pub fn validate_hypotheses(cs: &ConstitutiveSet, beta: f64, grid: SampleGrid) -> HypothesisReport {
    let k = cs.constants;
    let th = SampleGrid::log_points(grid.theta_max, grid.points);
    let th_pos: Vec<f64> = th.iter().copied().filter(|&t| t > 0.0).collect();
    let rh = SampleGrid::log_points(grid.rho_max, grid.points);
    let rh_pos: Vec<f64> = rh.iter().copied().filter(|&r| r > 0.0).collect();
    let mut rep = HypothesisReport::default();

    // viscosities
    rep.push(
        "μ(ϑ) ≥ 0",
        first_failure(&th, |t| cs.mu.eval(t) >= 0.0),
        "shear viscosity nonnegative",
    );
    rep.push(
        "λ(ϑ) + 2μ(ϑ)/3 ≥ 0",
        first_failure(&th, |t| {
            let m = cs.mu.eval(t);
            cs.lambda.eval(t) + 2.0 / 3.0 * m >= -REL * m.abs()
        }),
        "bulk viscosity bound",
    );
    let mono = th
        .windows(2)
        .find(|w| cs.mu.eval(w[1]) <= cs.mu.eval(w[0]))
        .map(|w| w[1]);
    rep.push("μ strictly increasing", mono, "sampled strict monotonicity");
    let (lmu, ok_mu) = lipschitz_probe(&th, |t| cs.mu.eval(t));
    rep.push_flag(
        "μ globally Lipschitz",
        ok_mu,
        format!("estimated Lipschitz constant {lmu:.4e}"),
    );
    let (llam, ok_lam) = lipschitz_probe(&th, |t| cs.lambda.eval(t));
    rep.push_flag(
        "λ globally Lipschitz",
        ok_lam,
        format!("estimated Lipschitz constant {llam:.4e}"),
    );
    rep.push(
        "2μ + 3λ ≥ ν > 0",
        first_failure(&th_pos, |t| {
            let nu = cs.nu(t);
            let env = 2.0 * cs.mu.eval(t) + 3.0 * cs.lambda.eval(t);
            nu > 0.0 && env >= nu - REL * nu.abs()
        }),
        "ν positive and below 2μ+3λ for ϑ > 0",
    );
    rep.push(
        "ν(ϑ) ≥ C_ν ϑ for ϑ ≤ 1",
        first_failure(&th, |t| t > 1.0 || cs.nu(t) >= k.c_nu * t * (1.0 - REL)),
        format!("C_ν = {}", k.c_nu),
    );
    rep.push(
        "κ̲(1+ϑ²) ≤ κ(ϑ) ≤ κ̄(1+ϑ²)",
        first_failure(&th, |t| {
            let kap = cs.kappa.eval(t);
            let q = 1.0 + t * t;
            kap >= k.kappa_lo * q * (1.0 - REL) && kap <= k.kappa_hi * q * (1.0 + REL)
        }),
        format!("κ̲ = {}, κ̄ = {}", k.kappa_lo, k.kappa_hi),
    );

    // elastic pressure
    rep.push(
        "p_e(0) = 0",
        if cs.p_e.eval(0.0).abs() <= 1e-14 {
            None
        } else {
            Some(0.0)
        },
        "",
    );
    rep.push(
        "p_e'(ϱ) ≥ a₁ϱ^{γ−1} − b",
        first_failure(&rh_pos, |r| {
            let lower = k.a1 * r.powf(k.gamma - 1.0) - k.b;
            cs.p_e.deriv(r) >= lower - REL * lower.abs()
        }),
        format!("a₁ = {}, b = {}, γ = {}", k.a1, k.b, k.gamma),
    );
    rep.push(
        "p_e(ϱ) ≤ a₂ϱ^γ + b",
        first_failure(&rh, |r| {
            let upper = k.a2 * r.powf(k.gamma) + k.b;
            cs.p_e.eval(r) <= upper * (1.0 + REL)
        }),
        format!("a₂ = {}", k.a2),
    );

    match cs.pressure_kind {
        PressureKind::GeneralSplit => {
            rep.push(
                "p_ϑ(0) = 0",
                if cs.p_theta.eval(0.0).abs() <= 1e-14 {
                    None
                } else {
                    Some(0.0)
                },
                "",
            );
            rep.push(
                "p_ϑ'(ϱ) ≥ 0",
                first_failure(&rh_pos, |r| cs.p_theta.deriv(r) >= -REL),
                "",
            );
            rep.push(
                "p_ϑ(ϱ) ≤ c(1 + ϱ^{γ/3})",
                first_failure(&rh, |r| {
                    cs.p_theta.eval(r) <= k.c * (1.0 + r.powf(k.gamma / 3.0)) * (1.0 + REL)
                }),
                format!("c = {}", k.c),
            );
            rep.push_flag(
                "γ > 3/2 (general split pressure)",
                k.gamma > 1.5,
                format!("γ = {}", k.gamma),
            );
        }
        PressureKind::LinearInDensity => {
            rep.push_flag("R > 0", cs.r_gas > 0.0, format!("R = {}", cs.r_gas));
            rep.push_flag(
                "γ > 3 (pressure linear in density)",
                k.gamma > 3.0,
                format!("γ = {}", k.gamma),
            );
        }
    }

    rep.push_flag(
        "β > max{4, γ}",
        beta > 4f64.max(k.gamma),
        format!("β = {beta}, γ = {}", k.gamma),
    );
    rep.push_flag(
        "positive hypothesis constants",
        [k.a1, k.a2, k.b, k.c, k.kappa_lo, k.kappa_hi, k.c_nu]
            .iter()
            .all(|&v| v > 0.0),
        "",
    );
    rep
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::constitutive::ScalarLaw;

    fn failed(rep: &HypothesisReport) -> Vec<String> {
        rep.failures().map(|c| c.name.clone()).collect()
    }

    #[test]
    fn presets_pass() {
        let rep = validate_hypotheses(&ConstitutiveSet::general_split(), 5.0, SampleGrid::default());
        assert!(rep.all_passed(), "{:?}", failed(&rep));
        let rep = validate_hypotheses(&ConstitutiveSet::ideal_like(), 5.0, SampleGrid::default());
        assert!(rep.all_passed(), "{:?}", failed(&rep));
    }

    #[test]
    fn beta_must_exceed_four_and_gamma() {
        let rep = validate_hypotheses(&ConstitutiveSet::general_split(), 4.0, SampleGrid::default());
        assert_eq!(failed(&rep), vec!["β > max{4, γ}".to_string()]);
    }

    #[test]
    fn general_split_needs_gamma_above_three_halves() {
        let mut cs = ConstitutiveSet::general_split();
        cs.constants.gamma = 1.4;
        cs.p_e = ScalarLaw::power(1.0, 1.4);
        cs.constants.a1 = 1.4;
        let rep = validate_hypotheses(&cs, 5.0, SampleGrid::default());
        assert!(failed(&rep).contains(&"γ > 3/2 (general split pressure)".to_string()));
    }

    #[test]
    fn decreasing_mu_is_rejected() {
        let mut cs = ConstitutiveSet::general_split();
        cs.mu = ScalarLaw::affine(1.0, -0.1);
        let rep = validate_hypotheses(
            &cs,
            5.0,
            SampleGrid {
                theta_max: 1.0,
                ..Default::default()
            },
        );
        let c = rep.checks.iter().find(|c| c.name == "μ strictly increasing").unwrap();
        assert!(!c.passed);
        assert!(c.witness.is_some());
    }

    #[test]
    fn quadratic_mu_is_not_lipschitz() {
        let mut cs = ConstitutiveSet::general_split();
        cs.mu = ScalarLaw::Polynomial(vec![0.0, 0.1, 1.0]);
        let rep = validate_hypotheses(&cs, 5.0, SampleGrid::default());
        assert!(failed(&rep).contains(&"μ globally Lipschitz".to_string()));
    }

    #[test]
    fn kappa_growth_violation_has_witness() {
        let mut cs = ConstitutiveSet::general_split();
        cs.kappa = ScalarLaw::Polynomial(vec![0.1, 0.0, 0.0, 0.1]);
        let rep = validate_hypotheses(&cs, 5.0, SampleGrid::default());
        let c = rep.checks.iter().find(|c| c.name.starts_with("κ̲(1+ϑ²)")).unwrap();
        assert!(!c.passed && c.witness.is_some());
    }

    #[test]
    fn linear_in_density_needs_gamma_above_three() {
        let mut cs = ConstitutiveSet::ideal_like();
        cs.p_e = ScalarLaw::power(1.0, 2.0);
        cs.constants.gamma = 2.0;
        cs.constants.a1 = 2.0;
        let rep = validate_hypotheses(&cs, 5.0, SampleGrid::default());
        assert_eq!(failed(&rep), vec!["γ > 3 (pressure linear in density)".to_string()]);
    }
}
