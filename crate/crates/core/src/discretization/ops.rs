//! Second-order centred difference operators.
//!
//! Boundary values come from ghost cells: reflection (`f₋₁ = f₀`) for
//! Neumann data, antireflection (`f₋₁ = −f₀`) for Dirichlet data. With these
//! ghosts the collocated pair (`grad` with Neumann, `div` with Dirichlet)
//! satisfies summation by parts exactly, and the compact Laplacian is the
//! composition of the face-staggered pair `face_div ∘ face_grad`.

use super::{Grid, ScalarField, SymTensorField, VectorField};
use crate::error::Result;
use crate::exec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Bc {
    Neumann,
    Dirichlet,
}

impl Bc {
    #[inline]
    fn ghost(self, boundary_value: f64) -> f64 {
        match self {
            Bc::Neumann => boundary_value,
            Bc::Dirichlet => -boundary_value,
        }
    }
}

/// Value of the neighbour of cell `k` along `axis` (offset ±1), ghost-filled.
#[inline]
pub(crate) fn neighbor(f: &[f64], g: &Grid, k: usize, axis: usize, forward: bool, bc: Bc) -> f64 {
    let (i, j) = g.coords(k);
    let (pos, n, stride) = if axis == 0 { (i, g.nx(), 1) } else { (j, g.ny(), g.nx()) };
    if forward {
        if pos + 1 < n {
            f[k + stride]
        } else {
            bc.ghost(f[k])
        }
    } else if pos > 0 {
        f[k - stride]
    } else {
        bc.ghost(f[k])
    }
}

/// Centred derivative along `axis` of raw cell data.
pub(crate) fn centered_diff(f: &[f64], g: &Grid, axis: usize, bc: Bc) -> Vec<f64> {
    let inv = 0.5 / g.spacing(axis);
    exec::map_cells(g.len(), |k| {
        (neighbor(f, g, k, axis, true, bc) - neighbor(f, g, k, axis, false, bc)) * inv
    })
}

/// Centred gradient with the given ghost rule.
pub fn grad_bc(f: &ScalarField, bc: Bc) -> VectorField {
    let comps = (0..f.grid.dim)
        .map(|a| centered_diff(&f.data, &f.grid, a, bc))
        .collect();
    VectorField { grid: f.grid, comps }
}

/// Centred gradient of a scalar with Neumann (reflection) ghosts.
pub fn grad(f: &ScalarField) -> VectorField {
    grad_bc(f, Bc::Neumann)
}

/// Centred divergence of a vector field with zero trace (antireflection ghosts).
pub fn div(v: &VectorField) -> ScalarField {
    let g = v.grid;
    let mut out = vec![0.0; g.len()];
    for a in 0..g.dim {
        let d = centered_diff(&v.comps[a], &g, a, Bc::Dirichlet);
        out.iter_mut().zip(d).for_each(|(o, x)| *o += x);
    }
    ScalarField { grid: g, data: out }
}

/// Number of faces normal to `axis`.
pub fn face_count(g: &Grid, axis: usize) -> usize {
    if axis == 0 {
        (g.nx() + 1) * g.ny()
    } else {
        g.nx() * (g.ny() + 1)
    }
}

/// Index of the face on the low side of cell `(i, j)` along `axis`.
#[inline]
pub(crate) fn low_face(g: &Grid, axis: usize, i: usize, j: usize) -> usize {
    if axis == 0 {
        j * (g.nx() + 1) + i
    } else {
        j * g.nx() + i
    }
}

/// Index of the face on the high side of cell `(i, j)` along `axis`.
#[inline]
pub(crate) fn high_face(g: &Grid, axis: usize, i: usize, j: usize) -> usize {
    if axis == 0 {
        j * (g.nx() + 1) + i + 1
    } else {
        (j + 1) * g.nx() + i
    }
}

/// Cells on either side of face `f` normal to `axis`; `None` marks a ghost.
#[inline]
pub(crate) fn face_cells(g: &Grid, axis: usize, f: usize) -> (Option<usize>, Option<usize>) {
    let (nx, ny) = (g.nx(), g.ny());
    if axis == 0 {
        let (i, j) = (f % (nx + 1), f / (nx + 1));
        let lo = (i > 0).then(|| g.index(i - 1, j));
        let hi = (i < nx).then(|| g.index(i, j));
        (lo, hi)
    } else {
        let (i, j) = (f % nx, f / nx);
        let lo = (j > 0).then(|| g.index(i, j - 1));
        let hi = (j < ny).then(|| g.index(i, j));
        (lo, hi)
    }
}

/// Compact difference `(f_hi − f_lo)/h` on faces normal to `axis`.
pub fn face_grad(f: &ScalarField, bc: Bc, axis: usize) -> Vec<f64> {
    let g = f.grid;
    let h = g.spacing(axis);
    (0..face_count(&g, axis))
        .map(|face| match face_cells(&g, axis, face) {
            (Some(lo), Some(hi)) => (f.data[hi] - f.data[lo]) / h,
            (None, Some(hi)) => (f.data[hi] - bc.ghost(f.data[hi])) / h,
            (Some(lo), None) => (bc.ghost(f.data[lo]) - f.data[lo]) / h,
            (None, None) => unreachable!(),
        })
        .collect()
}

/// Face-to-cell difference along `axis`.
pub fn face_div(faces: &[f64], g: &Grid, axis: usize) -> Vec<f64> {
    let h = g.spacing(axis);
    (0..g.len())
        .map(|k| {
            let (i, j) = g.coords(k);
            (faces[high_face(g, axis, i, j)] - faces[low_face(g, axis, i, j)]) / h
        })
        .collect()
}

/// Compact five-point (three-point in 1D) Laplacian.
pub fn laplacian(f: &ScalarField, bc: Bc) -> ScalarField {
    let g = f.grid;
    let mut out = vec![0.0; g.len()];
    for a in 0..g.dim {
        let d = face_div(&face_grad(f, bc, a), &g, a);
        out.iter_mut().zip(d).for_each(|(o, x)| *o += x);
    }
    ScalarField { grid: g, data: out }
}

pub fn integrate(f: &ScalarField) -> f64 {
    f.data.iter().sum::<f64>() * f.grid.cell_volume()
}

pub fn inner(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.grid.check_same(&g.grid)?;
    Ok(f.data.iter().zip(&g.data).map(|(a, b)| a * b).sum::<f64>() * f.grid.cell_volume())
}

pub fn inner_vec(v: &VectorField, w: &VectorField) -> Result<f64> {
    v.grid.check_same(&w.grid)?;
    let s: f64 = v
        .comps
        .iter()
        .zip(&w.comps)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>())
        .sum();
    Ok(s * v.grid.cell_volume())
}

/// `D(u) = (∇u + ∇ᵀu)/2` with antireflection ghosts for `u`.
pub fn sym_gradient(u: &VectorField) -> SymTensorField {
    let g = u.grid;
    let dux_dx = centered_diff(&u.comps[0], &g, 0, Bc::Dirichlet);
    if g.dim == 1 {
        return SymTensorField {
            grid: g,
            xx: dux_dx,
            xy: Vec::new(),
            yy: Vec::new(),
        };
    }
    let dux_dy = centered_diff(&u.comps[0], &g, 1, Bc::Dirichlet);
    let duy_dx = centered_diff(&u.comps[1], &g, 0, Bc::Dirichlet);
    let duy_dy = centered_diff(&u.comps[1], &g, 1, Bc::Dirichlet);
    let xy = dux_dy.iter().zip(&duy_dx).map(|(a, b)| 0.5 * (a + b)).collect();
    SymTensorField {
        grid: g,
        xx: dux_dx,
        xy,
        yy: duy_dy,
    }
}

/// Cellwise viscous stress power `S:∇u = 2μ|D(u)|² + λ (div u)²`.
pub fn stress_power(u: &VectorField, mu: &[f64], lambda: &[f64]) -> ScalarField {
    let d = sym_gradient(u);
    let dd = d.frob_sq();
    let tr = d.trace();
    let data = (0..u.grid.len())
        .map(|k| 2.0 * mu[k] * dd.data[k] + lambda[k] * tr.data[k] * tr.data[k])
        .collect();
    ScalarField { grid: u.grid, data }
}
