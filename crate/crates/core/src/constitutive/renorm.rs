//! Renormalizing weights `h` for the temperature inequality and their
//! admissibility: `h` non-increasing, `0 < h(0) < ∞`, `h → 0`, and
//! `h'' h ≥ 2 (h')²` (equivalently `1/h` concave).

use std::fmt;

use serde::Serialize;

use super::law::{fd_step, ScalarFn, ScalarLaw};
use crate::quadrature;

/// Built-in families and user-supplied weights.
#[derive(Clone)]
pub enum HSpec {
    /// `1/(z+ω) · 1{z+ω ≤ C}`; the primitive uses a C¹ cutoff of width `1e-3·C`.
    TruncatedLog {
        omega: f64,
        cutoff: f64,
    },
    /// `ξ/(ξ+z)`.
    Xi {
        xi: f64,
    },
    /// `(1+z)^{-l}`.
    InversePower {
        l: f64,
    },
    /// `h ≡ value`.
    Constant {
        value: f64,
    },
    Custom {
        name: String,
        f: ScalarFn,
    },
    /// Piecewise-linear table, constant beyond the last node.
    Table {
        z: Vec<f64>,
        h: Vec<f64>,
    },
}

impl fmt::Debug for HSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            HSpec::TruncatedLog { omega, cutoff } => {
                write!(f, "TruncatedLog(ω={omega}, C={cutoff})")
            }
            HSpec::Xi { xi } => write!(f, "Xi({xi})"),
            HSpec::InversePower { l } => write!(f, "InversePower({l})"),
            HSpec::Constant { value } => write!(f, "Constant({value})"),
            HSpec::Custom { name, .. } => write!(f, "Custom({name})"),
            HSpec::Table { z, .. } => write!(f, "Table({} nodes)", z.len()),
        }
    }
}

impl HSpec {
    pub fn custom<F>(name: &str, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        HSpec::Custom {
            name: name.to_string(),
            f: std::sync::Arc::new(f),
        }
    }

    pub fn label(&self) -> String {
        format!("{self:?}")
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionVerdict {
    pub condition: &'static str,
    pub passed: bool,
    pub witness: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RenormalizerH {
    pub spec: HSpec,
    pub admissible: bool,
    /// Name of the first violated condition.
    pub violation: Option<&'static str>,
    pub verdicts: Vec<ConditionVerdict>,
    /// Range of `h''h − 2(h')²` over the sample grid.
    pub margin_min: f64,
    pub margin_max_abs: f64,
}

const COND_H0: &str = "0 < h(0) < ∞";
const COND_MONO: &str = "h non-increasing";
const COND_DECAY: &str = "h(z) → 0 as z → ∞";
const COND_CONVEX: &str = "h''h ≥ 2(h')²";

/// `0` followed by 511 log-spaced points on `[1e-6, 1e3]`.
pub fn renorm_sample_grid() -> Vec<f64> {
    let n = 511;
    let (lo, hi) = (1e-6f64.ln(), 1e3f64.ln());
    std::iter::once(0.0)
        .chain((0..n).map(|i| (lo + (hi - lo) * i as f64 / (n - 1) as f64).exp()))
        .collect()
}

fn smoothstep_down(t: f64) -> (f64, f64, f64) {
    // S(t) = 1 − 3t² + 2t³ on [0,1]; returns (S, S', S'')
    if t <= 0.0 {
        (1.0, 0.0, 0.0)
    } else if t >= 1.0 {
        (0.0, 0.0, 0.0)
    } else {
        (
            1.0 - 3.0 * t * t + 2.0 * t * t * t,
            -6.0 * t + 6.0 * t * t,
            -6.0 + 12.0 * t,
        )
    }
}

impl RenormalizerH {
    /// `(h, h', h'')` at `z`.
    pub fn derivs(&self, z: f64) -> (f64, f64, f64) {
        match &self.spec {
            HSpec::TruncatedLog { omega, cutoff } => {
                let y = z + omega;
                let w = 1e-3 * cutoff;
                let t = (y - (cutoff - 0.5 * w)) / w;
                let (s, ds, d2s) = smoothstep_down(t);
                let (g, dg, d2g) = (1.0 / y, -1.0 / (y * y), 2.0 / (y * y * y));
                (
                    g * s,
                    dg * s + g * ds / w,
                    d2g * s + 2.0 * dg * ds / w + g * d2s / (w * w),
                )
            }
            HSpec::Xi { xi } => {
                let y = xi + z;
                (xi / y, -xi / (y * y), 2.0 * xi / (y * y * y))
            }
            HSpec::InversePower { l } => {
                let y = 1.0 + z;
                (y.powf(-l), -l * y.powf(-l - 1.0), l * (l + 1.0) * y.powf(-l - 2.0))
            }
            HSpec::Constant { value } => (*value, 0.0, 0.0),
            HSpec::Custom { .. } | HSpec::Table { .. } => {
                let h = fd_step(z);
                let (fm, f0, fp) = (self.h(z - h), self.h(z), self.h(z + h));
                (f0, (fp - fm) / (2.0 * h), (fp - 2.0 * f0 + fm) / (h * h))
            }
        }
    }

    pub fn h(&self, z: f64) -> f64 {
        match &self.spec {
            HSpec::Custom { f, .. } => f(z),
            HSpec::Table { z: zs, h } => table_eval(zs, h, z),
            _ => self.derivs(z).0,
        }
    }

    /// Exact level-set indicator for the truncated family; `true` otherwise.
    pub fn indicator(&self, z: f64) -> bool {
        match &self.spec {
            HSpec::TruncatedLog { omega, cutoff } => z + omega <= *cutoff,
            _ => true,
        }
    }

    /// `H(ϑ) = ∫_0^ϑ h`.
    pub fn big_h(&self, theta: f64) -> f64 {
        match &self.spec {
            HSpec::Xi { xi } => xi * (theta / xi).ln_1p(),
            HSpec::InversePower { l } => {
                if (l - 1.0).abs() < 1e-15 {
                    theta.ln_1p()
                } else {
                    ((1.0 + theta).powf(1.0 - l) - 1.0) / (1.0 - l)
                }
            }
            HSpec::Constant { value } => value * theta,
            HSpec::TruncatedLog { omega, cutoff } => {
                let w = 1e-3 * cutoff;
                let start = cutoff - 0.5 * w;
                if omega >= &start {
                    return quadrature::integrate(|z| self.h(z), 0.0, theta, 1e-12).unwrap_or(f64::NAN);
                }
                let y = theta + omega;
                if y <= start {
                    (y / omega).ln()
                } else {
                    let head = (start / omega).ln();
                    let upper = theta.min(cutoff + 0.5 * w - omega);
                    head + quadrature::integrate(|z| self.h(z), start - omega, upper, 1e-12).unwrap_or(f64::NAN)
                }
            }
            HSpec::Custom { .. } | HSpec::Table { .. } => {
                quadrature::integrate(|z| self.h(z), 0.0, theta, 1e-12).unwrap_or(f64::NAN)
            }
        }
    }

    /// `K_h(ϑ) = ∫_0^ϑ κ h`.
    pub fn k_h(&self, kappa: &ScalarLaw, theta: f64) -> f64 {
        if let HSpec::Constant { value } = self.spec {
            return value * kappa.primitive(theta).unwrap_or(f64::NAN);
        }
        quadrature::integrate(|z| kappa.eval(z) * self.h(z), 0.0, theta, 1e-11).unwrap_or(f64::NAN)
    }

    /// Conditions needed for the renormalized inequality itself: finite
    /// positive `h(0)`, monotonicity and the convexity condition. Decay at
    /// infinity is not required for the inequality to hold.
    pub fn structurally_admissible(&self) -> bool {
        self.verdicts
            .iter()
            .filter(|v| v.condition != COND_DECAY)
            .all(|v| v.passed)
    }
}

fn table_eval(zs: &[f64], hs: &[f64], z: f64) -> f64 {
    if z <= zs[0] {
        return hs[0];
    }
    if z >= zs[zs.len() - 1] {
        return hs[hs.len() - 1];
    }
    let i = zs.partition_point(|&x| x <= z) - 1;
    let t = (z - zs[i]) / (zs[i + 1] - zs[i]);
    hs[i] + t * (hs[i + 1] - hs[i])
}

/// Build `h` and check every admissibility condition on a log-spaced grid.
/// Inadmissible weights are returned with `admissible = false` and the
/// first violated condition named.
pub fn make_renormalizer(spec: HSpec) -> RenormalizerH {
    let mut r = RenormalizerH {
        spec,
        admissible: true,
        violation: None,
        verdicts: Vec::new(),
        margin_min: f64::INFINITY,
        margin_max_abs: 0.0,
    };
    let mut grid = renorm_sample_grid();
    if let HSpec::TruncatedLog { omega, cutoff } = r.spec {
        // resolve the cutoff transition
        let w = 1e-3 * cutoff;
        for i in 0..=16 {
            let z = cutoff - 0.5 * w + w * i as f64 / 16.0 - omega;
            if z >= 0.0 {
                grid.push(z);
            }
        }
        grid.sort_by(f64::total_cmp);
    }

    let h0 = r.h(0.0);
    r.verdicts.push(ConditionVerdict {
        condition: COND_H0,
        passed: h0 > 0.0 && h0.is_finite(),
        witness: Some(0.0),
    });

    let hv: Vec<f64> = grid.iter().map(|&z| r.h(z)).collect();
    let mono_fail = (1..grid.len()).find(|&i| hv[i] > hv[i - 1] + 1e-12 * hv[i - 1].abs());
    r.verdicts.push(ConditionVerdict {
        condition: COND_MONO,
        passed: mono_fail.is_none(),
        witness: mono_fail.map(|i| grid[i]),
    });

    let decays = match &r.spec {
        HSpec::InversePower { l } => *l > 0.0,
        HSpec::Xi { .. } | HSpec::TruncatedLog { .. } => true,
        HSpec::Constant { value } => *value == 0.0,
        HSpec::Custom { .. } | HSpec::Table { .. } => {
            let (h6, h12) = (r.h(1e6), r.h(1e12));
            h12 <= 0.5 * h0 && (h12 < h6 || h12 == 0.0)
        }
    };
    r.verdicts.push(ConditionVerdict {
        condition: COND_DECAY,
        passed: decays,
        witness: if decays { None } else { Some(1e12) },
    });

    let mut convex_fail = None;
    for &z in &grid {
        let (h, dh, d2h) = r.derivs(z);
        let margin = d2h * h - 2.0 * dh * dh;
        r.margin_min = r.margin_min.min(margin);
        r.margin_max_abs = r.margin_max_abs.max(margin.abs());
        let tol = 1e-9 * (2.0 * dh * dh).max(1.0);
        if convex_fail.is_none() && margin < -tol {
            convex_fail = Some(z);
        }
    }
    r.verdicts.push(ConditionVerdict {
        condition: COND_CONVEX,
        passed: convex_fail.is_none(),
        witness: convex_fail,
    });

    if let Some(v) = r.verdicts.iter().find(|v| !v.passed) {
        r.admissible = false;
        r.violation = Some(v.condition);
    }
    r
}
