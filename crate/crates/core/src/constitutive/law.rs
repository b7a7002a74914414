use std::fmt;
use std::sync::Arc;

use crate::quadrature;

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A scalar material law `z -> f(z)` on `z >= 0`.
#[derive(Clone)]
pub enum ScalarLaw {
    /// `c[0] + c[1] z + c[2] z^2 + ...`
    Polynomial(Vec<f64>),
    /// `coeff * z^exponent`
    Power { coeff: f64, exponent: f64 },
    /// Sum of laws.
    Sum(Vec<ScalarLaw>),
    /// User closure with optional analytic derivative.
    Custom {
        name: String,
        f: ScalarFn,
        df: Option<ScalarFn>,
    },
}

impl fmt::Debug for ScalarLaw {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ScalarLaw::Polynomial(c) => write!(fm, "Polynomial({c:?})"),
            ScalarLaw::Power { coeff, exponent } => write!(fm, "Power({coeff} z^{exponent})"),
            ScalarLaw::Sum(terms) => fm.debug_list().entries(terms).finish(),
            ScalarLaw::Custom { name, .. } => write!(fm, "Custom({name})"),
        }
    }
}

/// Central finite-difference step `1e-5 (1 + |z|)`.
pub fn fd_step(z: f64) -> f64 {
    1e-5 * (1.0 + z.abs())
}

impl ScalarLaw {
    pub fn constant(c: f64) -> Self {
        ScalarLaw::Polynomial(vec![c])
    }

    pub fn affine(c0: f64, c1: f64) -> Self {
        ScalarLaw::Polynomial(vec![c0, c1])
    }

    pub fn power(coeff: f64, exponent: f64) -> Self {
        ScalarLaw::Power { coeff, exponent }
    }

    pub fn custom<F>(name: &str, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        ScalarLaw::Custom {
            name: name.to_string(),
            f: Arc::new(f),
            df: None,
        }
    }

    pub fn eval(&self, z: f64) -> f64 {
        match self {
            ScalarLaw::Polynomial(c) => c.iter().rev().fold(0.0, |acc, &ck| acc * z + ck),
            ScalarLaw::Power { coeff, exponent } => {
                if z <= 0.0 {
                    if *exponent == 0.0 {
                        *coeff
                    } else {
                        0.0
                    }
                } else {
                    coeff * z.powf(*exponent)
                }
            }
            ScalarLaw::Sum(terms) => terms.iter().map(|t| t.eval(z)).sum(),
            ScalarLaw::Custom { f, .. } => f(z),
        }
    }

    /// Derivative; analytic where available, central differences otherwise.
    pub fn deriv(&self, z: f64) -> f64 {
        match self {
            ScalarLaw::Polynomial(c) => c
                .iter()
                .enumerate()
                .skip(1)
                .rev()
                .fold(0.0, |acc, (k, &ck)| acc * z + k as f64 * ck),
            ScalarLaw::Power { coeff, exponent } => {
                if *exponent == 0.0 {
                    0.0
                } else if z <= 0.0 {
                    if *exponent > 1.0 {
                        0.0
                    } else if *exponent == 1.0 {
                        *coeff
                    } else {
                        f64::INFINITY
                    }
                } else {
                    coeff * exponent * z.powf(exponent - 1.0)
                }
            }
            ScalarLaw::Sum(terms) => terms.iter().map(|t| t.deriv(z)).sum(),
            ScalarLaw::Custom { f, df, .. } => match df {
                Some(d) => d(z),
                None => {
                    let h = fd_step(z);
                    (f(z + h) - f(z - h)) / (2.0 * h)
                }
            },
        }
    }

    pub fn is_polynomial(&self) -> bool {
        match self {
            ScalarLaw::Polynomial(_) => true,
            ScalarLaw::Power { exponent, .. } => exponent.fract() == 0.0 && *exponent >= 0.0,
            ScalarLaw::Sum(t) => t.iter().all(|x| x.is_polynomial()),
            ScalarLaw::Custom { .. } => false,
        }
    }

    /// Exact `∫_0^x f` when the law is polynomial.
    pub fn primitive_exact(&self, x: f64) -> Option<f64> {
        match self {
            ScalarLaw::Polynomial(c) => Some(
                c.iter()
                    .enumerate()
                    .rev()
                    .fold(0.0, |acc, (k, &ck)| acc * x + ck / (k as f64 + 1.0))
                    * x,
            ),
            ScalarLaw::Power { coeff, exponent } if *exponent > -1.0 => {
                if x <= 0.0 {
                    Some(0.0)
                } else {
                    Some(coeff * x.powf(exponent + 1.0) / (exponent + 1.0))
                }
            }
            ScalarLaw::Sum(terms) => terms.iter().map(|t| t.primitive_exact(x)).sum(),
            _ => None,
        }
    }

    /// `∫_0^x f`, exact for polynomial and power laws, adaptive quadrature otherwise.
    pub fn primitive(&self, x: f64) -> crate::Result<f64> {
        match self.primitive_exact(x) {
            Some(v) => Ok(v),
            None => quadrature::integrate(|z| self.eval(z), 0.0, x, 1e-12),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_eval_and_derivative() {
        let p = ScalarLaw::Polynomial(vec![1.0, 0.0, 1.0]);
        assert_eq!(p.eval(2.0), 5.0);
        assert_eq!(p.deriv(2.0), 4.0);
        assert!((p.primitive(2.0).unwrap() - 14.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn power_law_at_zero() {
        let p = ScalarLaw::power(1.0, 0.5);
        assert_eq!(p.eval(0.0), 0.0);
        assert!(p.deriv(0.0).is_infinite());
        assert_eq!(ScalarLaw::power(2.0, 2.0).deriv(0.0), 0.0);
    }

    #[test]
    fn custom_uses_finite_differences() {
        let c = ScalarLaw::custom("sin", f64::sin);
        assert!((c.deriv(0.3) - 0.3f64.cos()).abs() < 1e-8);
        assert!((c.primitive(1.0).unwrap() - (1.0 - 1f64.cos())).abs() < 1e-12);
    }
}
