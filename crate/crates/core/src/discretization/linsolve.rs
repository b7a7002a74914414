//! Symmetric positive definite diffusion systems
//! `a_i x_i + Σ_faces k_f (x_i − x_nb) / h²`.
//!
//! 1D systems are tridiagonal and solved directly; 2D systems use
//! Jacobi-preconditioned conjugate gradients.

use super::ops::{face_cells, face_count, Bc};
use super::Grid;
use crate::error::{invalid, Error, Result};
use crate::exec;

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Relative residual at which iteration stops.
    pub target: f64,
    /// Relative residual above which a stalled solve is an error.
    pub accept: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            target: 1e-14,
            accept: 1e-10,
            max_iter: 20_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

#[derive(Debug, Clone)]
pub struct DiffusionSystem {
    pub grid: Grid,
    pub diag: Vec<f64>,
    /// Face coefficients per axis, indexed like `ops::face_grad`.
    pub face_coef: Vec<Vec<f64>>,
    pub bc: Bc,
}

impl DiffusionSystem {
    pub fn new(grid: Grid, diag: Vec<f64>, face_coef: Vec<Vec<f64>>, bc: Bc) -> Result<Self> {
        if diag.len() != grid.len() || face_coef.len() != grid.dim {
            return Err(Error::GridMismatch("diffusion system shape".into()));
        }
        for (a, k) in face_coef.iter().enumerate() {
            if k.len() != face_count(&grid, a) {
                return Err(Error::GridMismatch(format!("face coefficients on axis {a}")));
            }
            if k.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
                return Err(invalid("face coefficients must be finite and nonnegative"));
            }
        }
        if diag.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(invalid("diagonal must be finite and nonnegative"));
        }
        Ok(DiffusionSystem {
            grid,
            diag,
            face_coef,
            bc,
        })
    }

    /// Constant face coefficient `k` on every axis.
    pub fn isotropic(grid: Grid, diag: Vec<f64>, k: f64, bc: Bc) -> Result<Self> {
        let face_coef = (0..grid.dim).map(|a| vec![k; face_count(&grid, a)]).collect();
        Self::new(grid, diag, face_coef, bc)
    }

    fn boundary_factor(&self) -> f64 {
        match self.bc {
            Bc::Neumann => 0.0,
            Bc::Dirichlet => 2.0,
        }
    }

    /// Matrix diagonal.
    pub fn diagonal(&self) -> Vec<f64> {
        let g = &self.grid;
        let bf = self.boundary_factor();
        let mut d = self.diag.clone();
        for a in 0..g.dim {
            let inv_h2 = 1.0 / g.spacing(a).powi(2);
            for (f, &k) in self.face_coef[a].iter().enumerate() {
                match face_cells(g, a, f) {
                    (Some(lo), Some(hi)) => {
                        d[lo] += k * inv_h2;
                        d[hi] += k * inv_h2;
                    }
                    (Some(c), None) | (None, Some(c)) => d[c] += bf * k * inv_h2,
                    (None, None) => {}
                }
            }
        }
        d
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let g = &self.grid;
        let bf = self.boundary_factor();
        exec::map_cells(g.len(), |c| {
            let (i, j) = g.coords(c);
            let mut s = self.diag[c] * x[c];
            for a in 0..g.dim {
                let inv_h2 = 1.0 / g.spacing(a).powi(2);
                let (pos, n, stride) = if a == 0 { (i, g.nx(), 1) } else { (j, g.ny(), g.nx()) };
                let lo = super::ops::low_face(g, a, i, j);
                let hi = super::ops::high_face(g, a, i, j);
                let (klo, khi) = (self.face_coef[a][lo], self.face_coef[a][hi]);
                s += if pos > 0 {
                    klo * (x[c] - x[c - stride])
                } else {
                    bf * klo * x[c]
                } * inv_h2;
                s += if pos + 1 < n {
                    khi * (x[c] - x[c + stride])
                } else {
                    bf * khi * x[c]
                } * inv_h2;
            }
            s
        })
    }

    pub fn solve(&self, rhs: &[f64], opts: SolveOptions) -> Result<(Vec<f64>, SolveStats)> {
        if rhs.len() != self.grid.len() {
            return Err(Error::GridMismatch("right-hand side length".into()));
        }
        if self.grid.dim == 1 {
            self.solve_tridiagonal(rhs)
        } else {
            self.solve_cg(rhs, opts, false)
        }
    }

    /// Solve the singular pure-Neumann problem (`diag ≡ 0`) for the
    /// zero-mean solution; the right-hand side is projected to zero mean.
    pub fn solve_zero_mean(&self, rhs: &[f64], opts: SolveOptions) -> Result<(Vec<f64>, SolveStats)> {
        if self.bc != Bc::Neumann || self.diag.iter().any(|&d| d != 0.0) {
            return Err(invalid("zero-mean solve needs a pure Neumann operator"));
        }
        self.solve_cg(rhs, opts, true)
    }

    fn solve_tridiagonal(&self, rhs: &[f64]) -> Result<(Vec<f64>, SolveStats)> {
        let n = rhs.len();
        let inv_h2 = 1.0 / self.grid.spacing(0).powi(2);
        let k = &self.face_coef[0];
        let d = self.diagonal();
        // off-diagonal between cells i−1 and i is −k[i]/h²
        let off = |i: usize| -k[i] * inv_h2;
        let mut cp = vec![0.0; n];
        let mut dp = vec![0.0; n];
        let mut denom = d[0];
        if denom <= 0.0 {
            return Err(Error::LinearSolve {
                iterations: 0,
                residual: f64::NAN,
            });
        }
        cp[0] = if n > 1 { off(1) / denom } else { 0.0 };
        dp[0] = rhs[0] / denom;
        for i in 1..n {
            denom = d[i] - off(i) * cp[i - 1];
            if denom <= 0.0 || !denom.is_finite() {
                return Err(Error::LinearSolve {
                    iterations: i,
                    residual: f64::NAN,
                });
            }
            cp[i] = if i + 1 < n { off(i + 1) / denom } else { 0.0 };
            dp[i] = (rhs[i] - off(i) * dp[i - 1]) / denom;
        }
        let mut x = dp;
        for i in (0..n - 1).rev() {
            x[i] -= cp[i] * x[i + 1];
        }
        let residual = self.relative_residual(&x, rhs);
        Ok((
            x,
            SolveStats {
                iterations: 1,
                residual,
            },
        ))
    }

    fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.apply(x);
        let bn = norm(b);
        let rn = norm(&ax.iter().zip(b).map(|(p, q)| q - p).collect::<Vec<_>>());
        if bn == 0.0 {
            rn
        } else {
            rn / bn
        }
    }

    fn solve_cg(&self, rhs: &[f64], opts: SolveOptions, project: bool) -> Result<(Vec<f64>, SolveStats)> {
        let n = rhs.len();
        let mut b = rhs.to_vec();
        if project {
            remove_mean(&mut b);
        }
        let bn = norm(&b);
        if bn == 0.0 {
            return Ok((vec![0.0; n], SolveStats::default()));
        }
        let diag = self.diagonal();
        let inv_d: Vec<f64> = diag.iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect();
        let mut x = vec![0.0; n];
        let mut r = b.clone();
        let mut z: Vec<f64> = r.iter().zip(&inv_d).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut rel = 1.0;
        let mut it = 0;
        while it < opts.max_iter {
            it += 1;
            let ap = self.apply(&p);
            let pap = dot(&p, &ap);
            if pap <= 0.0 || !pap.is_finite() {
                break;
            }
            let alpha = rz / pap;
            for k in 0..n {
                x[k] += alpha * p[k];
                r[k] -= alpha * ap[k];
            }
            if project {
                remove_mean(&mut r);
            }
            rel = norm(&r) / bn;
            if rel <= opts.target {
                break;
            }
            for k in 0..n {
                z[k] = r[k] * inv_d[k];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for k in 0..n {
                p[k] = z[k] + beta * p[k];
            }
        }
        if project {
            remove_mean(&mut x);
        }
        let true_rel = {
            let ax = self.apply(&x);
            let mut res: Vec<f64> = ax.iter().zip(&b).map(|(p, q)| q - p).collect();
            if project {
                remove_mean(&mut res);
            }
            norm(&res) / bn
        };
        let residual = true_rel.max(rel.min(true_rel));
        if !(residual <= opts.accept) {
            return Err(Error::LinearSolve {
                iterations: it,
                residual,
            });
        }
        Ok((
            x,
            SolveStats {
                iterations: it,
                residual,
            },
        ))
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn remove_mean(v: &mut [f64]) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    v.iter_mut().for_each(|x| *x -= m);
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{DMatrix, DVector};

    fn dense(sys: &DiffusionSystem) -> DMatrix<f64> {
        let n = sys.grid.len();
        let mut m = DMatrix::zeros(n, n);
        for c in 0..n {
            let mut e = vec![0.0; n];
            e[c] = 1.0;
            let col = sys.apply(&e);
            for r in 0..n {
                m[(r, c)] = col[r];
            }
        }
        m
    }

    fn check(sys: &DiffusionSystem) {
        let n = sys.grid.len();
        let b: Vec<f64> = (0..n).map(|i| ((i * 7 % 11) as f64 - 5.0) / 3.0).collect();
        let (x, _) = sys.solve(&b, SolveOptions::default()).unwrap();
        let m = dense(sys);
        assert!((m.clone() - m.transpose()).abs().max() < 1e-9);
        let oracle = m.lu().solve(&DVector::from_vec(b)).unwrap();
        let err = x
            .iter()
            .zip(oracle.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(err < 1e-10, "err {err}");
    }

    #[test]
    fn matches_dense_solve() {
        let g1 = Grid::new_1d(16, 1.0).unwrap();
        let g2 = Grid::new_2d(9, 8, 1.0, 0.7).unwrap();
        for bc in [Bc::Neumann, Bc::Dirichlet] {
            for g in [g1, g2] {
                let diag: Vec<f64> = (0..g.len()).map(|i| 1.0 + 0.1 * (i % 3) as f64).collect();
                let face_coef = (0..g.dim)
                    .map(|a| (0..face_count(&g, a)).map(|f| 0.01 * (1 + f % 5) as f64).collect())
                    .collect();
                check(&DiffusionSystem::new(g, diag, face_coef, bc).unwrap());
            }
        }
    }

    #[test]
    fn zero_mean_neumann_solve() {
        let g = Grid::new_2d(10, 12, 1.0, 1.0).unwrap();
        let sys = DiffusionSystem::isotropic(g, vec![0.0; g.len()], 1.0, Bc::Neumann).unwrap();
        let b: Vec<f64> = (0..g.len()).map(|i| (i as f64 * 0.37).sin()).collect();
        let (x, stats) = sys.solve_zero_mean(&b, SolveOptions::default()).unwrap();
        assert!(stats.residual < 1e-10);
        assert!(x.iter().sum::<f64>().abs() < 1e-10);
    }
}
