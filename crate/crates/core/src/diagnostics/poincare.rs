//! Weighted Poincaré inequality `‖v‖_{H¹} ≤ C(M₁, M₂)(‖∇v‖_{L²} + ∫ϱ|v|)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::discretization::ops::face_grad;
use crate::discretization::{Bc, Grid, ScalarField};
use crate::error::{Error, Result};
use crate::exec::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareHypotheses {
    /// Lower bound on `∫ϱ`.
    pub m1: f64,
    /// Upper bound on `∫ϱ^γ`.
    pub m2: f64,
    pub gamma: f64,
}

impl PoincareHypotheses {
    pub fn check(&self, rho: &ScalarField) -> Result<()> {
        if !(self.gamma > 1.2) {
            return Err(Error::Hypothesis(format!("γ > 6/5 required, got {}", self.gamma)));
        }
        if rho.min() < 0.0 {
            return Err(Error::Hypothesis("ϱ must be nonnegative".into()));
        }
        let vol = rho.grid.cell_volume();
        let mass: f64 = rho.data.iter().sum::<f64>() * vol;
        let pg: f64 = rho.data.iter().map(|r| r.powf(self.gamma)).sum::<f64>() * vol;
        if !(mass >= self.m1 && self.m1 > 0.0) {
            return Err(Error::Hypothesis(format!("∫ϱ = {mass} below M₁ = {}", self.m1)));
        }
        if pg > self.m2 {
            return Err(Error::Hypothesis(format!("∫ϱ^γ = {pg} above M₂ = {}", self.m2)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PoincareSample {
    /// `(‖v‖² + ‖∇v‖²)^{1/2}`
    pub lhs: f64,
    /// `‖∇v‖ + ∫ϱ|v|`
    pub rhs_raw: f64,
    pub ratio: f64,
}

/// Evaluate both sides for a field given by its components (one for a
/// scalar, `dim` for a vector). Gradients are compact face differences with
/// reflecting boundaries.
pub fn weighted_poincare_check(rho: &ScalarField, v: &[&[f64]], hyp: &PoincareHypotheses) -> Result<PoincareSample> {
    hyp.check(rho)?;
    let g = rho.grid;
    if v.is_empty() || v.iter().any(|c| c.len() != g.len()) {
        return Err(Error::GridMismatch("Poincaré field shape".into()));
    }
    let vol = g.cell_volume();
    let mut l2 = 0.0;
    let mut grad2 = 0.0;
    for comp in v {
        l2 += comp.iter().map(|x| x * x).sum::<f64>() * vol;
        let f = ScalarField {
            grid: g,
            data: comp.to_vec(),
        };
        for a in 0..g.dim {
            grad2 += face_grad(&f, Bc::Neumann, a).iter().map(|x| x * x).sum::<f64>() * vol;
        }
    }
    let weighted: f64 = (0..g.len())
        .map(|k| rho.data[k] * v.iter().map(|c| c[k] * c[k]).sum::<f64>().sqrt())
        .sum::<f64>()
        * vol;
    let lhs = (l2 + grad2).sqrt();
    let rhs_raw = grad2.sqrt() + weighted;
    Ok(PoincareSample {
        lhs,
        rhs_raw,
        ratio: lhs / rhs_raw,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoincareBatch {
    pub samples: usize,
    pub sup_ratio: f64,
    pub mean_ratio: f64,
}

fn random_modes(rng: &mut ChaCha8Rng, g: &Grid, modes: usize, decay: f64) -> Vec<f64> {
    let terms: Vec<(f64, f64, f64, f64, f64)> = (0..modes)
        .map(|_| {
            let kx = rng.gen_range(0..=4) as f64;
            let ky = if g.dim == 2 { rng.gen_range(0..=4) as f64 } else { 0.0 };
            let amp = rng.gen_range(-1.0..1.0) / (1.0 + kx + ky).powf(decay);
            (
                amp,
                kx,
                ky,
                rng.gen_range(0.0..std::f64::consts::TAU),
                rng.gen_range(0.0..std::f64::consts::TAU),
            )
        })
        .collect();
    (0..g.len())
        .map(|k| {
            let c = g.center(k);
            terms
                .iter()
                .map(|&(a, kx, ky, px, py)| {
                    let fx = (std::f64::consts::PI * kx * c[0] / g.extent[0] + px).cos();
                    let fy = if g.dim == 2 {
                        (std::f64::consts::PI * ky * c[1] / g.extent[1] + py).cos()
                    } else {
                        1.0
                    };
                    a * fx * fy
                })
                .sum()
        })
        .collect()
}

/// Draw one admissible `(ϱ, v)` pair: `ϱ` a normalized log-normal field with
/// mass `M₁(1+s²)`, `s` uniform in `[0, 1)`, and `v` a constant offset plus
/// random low modes scaled log-uniformly in `[1e-2, 1]`. Near-constant `v` at
/// mass close to `M₁` is the extremal regime, so it is sampled often.
pub fn sample_pair(g: &Grid, hyp: &PoincareHypotheses, seed: u64) -> (ScalarField, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let vol = g.cell_volume();
    loop {
        let spread = rng.gen_range(0.0..2.0);
        let raw: Vec<f64> = random_modes(&mut rng, g, 4, 0.5)
            .iter()
            .map(|x| (spread * x).exp())
            .collect();
        let mass: f64 = (1.0 + rng.gen_range(0.0f64..1.0).powi(2)) * hyp.m1;
        let s = mass / (raw.iter().sum::<f64>() * vol);
        let rho = ScalarField {
            grid: *g,
            data: raw.iter().map(|x| x * s).collect(),
        };
        if hyp.check(&rho).is_ok() {
            let offset = rng.gen_range(-1.0..1.0);
            let scale = 10f64.powf(rng.gen_range(-2.0..0.0));
            let v: Vec<f64> = random_modes(&mut rng, g, 6, 1.0)
                .iter()
                .map(|x| offset + scale * x)
                .collect();
            return (rho, v);
        }
    }
}

/// Sup and mean of the ratio over `samples` independent draws; sample `i`
/// uses seed `seed + i`, so results do not depend on scheduling.
pub fn poincare_batch(
    g: &Grid,
    hyp: &PoincareHypotheses,
    samples: usize,
    seed: u64,
    exec: Execution,
) -> Result<PoincareBatch> {
    let ratios = exec::map_indices(samples, exec, |i| -> Result<f64> {
        let (rho, v) = sample_pair(g, hyp, seed.wrapping_add(i as u64));
        Ok(weighted_poincare_check(&rho, &[&v], hyp)?.ratio)
    });
    let ratios = ratios.into_iter().collect::<Result<Vec<f64>>>()?;
    let sup_ratio = ratios.iter().copied().fold(0.0, f64::max);
    let mean_ratio = ratios.iter().sum::<f64>() / samples.max(1) as f64;
    Ok(PoincareBatch {
        samples,
        sup_ratio,
        mean_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_field_ratio() {
        let g = Grid::new_1d(32, 2.0).unwrap();
        let rho = ScalarField::constant(g, 0.5);
        let v = vec![3.0; 32];
        let hyp = PoincareHypotheses {
            m1: 1.0,
            m2: 10.0,
            gamma: 2.0,
        };
        let s = weighted_poincare_check(&rho, &[&v], &hyp).unwrap();
        assert!((s.lhs - 3.0 * 2f64.sqrt()).abs() < 1e-12);
        assert!((s.rhs_raw - 3.0).abs() < 1e-12);
        assert!((s.ratio - 2f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn hypotheses_are_enforced() {
        let g = Grid::new_1d(32, 1.0).unwrap();
        let hyp = PoincareHypotheses {
            m1: 1.0,
            m2: 10.0,
            gamma: 2.0,
        };
        let v = vec![1.0; 32];
        assert!(weighted_poincare_check(&ScalarField::constant(g, 0.5), &[&v], &hyp).is_err());
        assert!(weighted_poincare_check(&ScalarField::constant(g, 5.0), &[&v], &hyp).is_err());
        let bad = PoincareHypotheses { gamma: 1.1, ..hyp };
        assert!(weighted_poincare_check(&ScalarField::constant(g, 1.0), &[&v], &bad).is_err());
    }
}
