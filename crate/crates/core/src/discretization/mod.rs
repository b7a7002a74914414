//! Cell-centred grids on intervals and rectangles, value-semantic fields, and
//! the discrete operators built on them.

pub mod io;
pub mod linsolve;
pub mod ops;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

pub use ops::{
    div, face_div, face_grad, grad, grad_bc, inner, inner_vec, integrate, laplacian, stress_power, sym_gradient, Bc,
};

/// Minimum cells per axis.
pub const MIN_CELLS: usize = 8;

/// Uniform cell-centred grid on `[0, Lx]` or `[0, Lx] × [0, Ly]`.
///
/// Cells are stored row-major: index `j * nx + i` with `i` along x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub cells: [usize; 2],
    pub extent: [f64; 2],
}

impl Grid {
    pub fn new_1d(cells: usize, length: f64) -> Result<Self> {
        Self::new(1, [cells, 1], [length, 1.0])
    }

    pub fn new_2d(nx: usize, ny: usize, lx: f64, ly: f64) -> Result<Self> {
        Self::new(2, [nx, ny], [lx, ly])
    }

    pub fn new(dim: usize, cells: [usize; 2], extent: [f64; 2]) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(invalid(format!("dimension must be 1 or 2, got {dim}")));
        }
        for a in 0..dim {
            if cells[a] < MIN_CELLS {
                return Err(invalid(format!(
                    "need at least {MIN_CELLS} cells per axis, got {}",
                    cells[a]
                )));
            }
            if !(extent[a] > 0.0 && extent[a].is_finite()) {
                return Err(invalid(format!("extent must be positive, got {}", extent[a])));
            }
        }
        let (cells, extent) = if dim == 1 {
            ([cells[0], 1], [extent[0], 1.0])
        } else {
            (cells, extent)
        };
        Ok(Grid { dim, cells, extent })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.cells[0] * self.cells[1]
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn nx(&self) -> usize {
        self.cells[0]
    }

    #[inline]
    pub fn ny(&self) -> usize {
        self.cells[1]
    }

    #[inline]
    pub fn spacing(&self, axis: usize) -> f64 {
        self.extent[axis] / self.cells[axis] as f64
    }

    pub fn min_spacing(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).fold(f64::INFINITY, f64::min)
    }

    /// Cell volume (length in 1D, area in 2D).
    #[inline]
    pub fn cell_volume(&self) -> f64 {
        (0..self.dim).map(|a| self.spacing(a)).product()
    }

    /// Domain measure `|Ω|`.
    pub fn measure(&self) -> f64 {
        (0..self.dim).map(|a| self.extent[a]).product()
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.cells[0] + i
    }

    #[inline]
    pub fn coords(&self, idx: usize) -> (usize, usize) {
        (idx % self.cells[0], idx / self.cells[0])
    }

    /// Cell centre.
    pub fn center(&self, idx: usize) -> [f64; 2] {
        let (i, j) = self.coords(idx);
        let x = (i as f64 + 0.5) * self.spacing(0);
        let y = if self.dim == 2 {
            (j as f64 + 0.5) * self.spacing(1)
        } else {
            0.0
        };
        [x, y]
    }

    pub fn check_same(&self, other: &Grid) -> Result<()> {
        if self == other {
            Ok(())
        } else {
            Err(Error::GridMismatch(format!("{self:?} vs {other:?}")))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    pub grid: Grid,
    pub data: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    pub fn constant(grid: Grid, c: f64) -> Self {
        ScalarField {
            grid,
            data: vec![c; grid.len()],
        }
    }

    pub fn from_vec(grid: Grid, data: Vec<f64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for {} cells",
                data.len(),
                grid.len()
            )));
        }
        Ok(ScalarField { grid, data })
    }

    /// Sample `f(x, y)` at cell centres.
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Self {
        let data = (0..grid.len())
            .map(|k| {
                let c = grid.center(k);
                f(c[0], c[1])
            })
            .collect();
        ScalarField { grid, data }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        ScalarField {
            grid: self.grid,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn zip_map(&self, other: &ScalarField, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.check_same(&other.grid)?;
        Ok(ScalarField {
            grid: self.grid,
            data: self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect(),
        })
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn max_abs_diff(&self, other: &ScalarField) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// One component per spatial dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub grid: Grid,
    pub comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn zeros(grid: Grid) -> Self {
        VectorField {
            grid,
            comps: vec![vec![0.0; grid.len()]; grid.dim],
        }
    }

    pub fn from_components(grid: Grid, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != grid.dim || comps.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch("vector component shape".into()));
        }
        Ok(VectorField { grid, comps })
    }

    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> [f64; 2]) -> Self {
        let mut v = Self::zeros(grid);
        for k in 0..grid.len() {
            let c = grid.center(k);
            let val = f(c[0], c[1]);
            for (a, comp) in v.comps.iter_mut().enumerate() {
                comp[k] = val[a];
            }
        }
        v
    }

    pub fn component(&self, axis: usize) -> ScalarField {
        ScalarField {
            grid: self.grid,
            data: self.comps[axis].clone(),
        }
    }

    /// Pointwise `|v|²`.
    pub fn norm_sq(&self) -> ScalarField {
        let data = (0..self.grid.len())
            .map(|k| self.comps.iter().map(|c| c[k] * c[k]).sum())
            .collect();
        ScalarField { grid: self.grid, data }
    }

    pub fn max_abs(&self) -> f64 {
        self.comps
            .iter()
            .flat_map(|c| c.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.comps.iter().all(|c| c.iter().all(|v| v.is_finite()))
    }
}

/// Symmetric 2×2 (or 1×1) tensor per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTensorField {
    pub grid: Grid,
    pub xx: Vec<f64>,
    pub xy: Vec<f64>,
    pub yy: Vec<f64>,
}

impl SymTensorField {
    pub fn trace(&self) -> ScalarField {
        let data = if self.grid.dim == 1 {
            self.xx.clone()
        } else {
            self.xx.iter().zip(&self.yy).map(|(a, b)| a + b).collect()
        };
        ScalarField { grid: self.grid, data }
    }

    /// Frobenius norm squared `D:D`.
    pub fn frob_sq(&self) -> ScalarField {
        let data = if self.grid.dim == 1 {
            self.xx.iter().map(|a| a * a).collect()
        } else {
            (0..self.grid.len())
                .map(|k| self.xx[k].powi(2) + 2.0 * self.xy[k].powi(2) + self.yy[k].powi(2))
                .collect()
        };
        ScalarField { grid: self.grid, data }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_validation() {
        assert!(Grid::new_1d(7, 1.0).is_err());
        assert!(Grid::new_1d(8, 0.0).is_err());
        assert!(Grid::new(3, [8, 8], [1.0, 1.0]).is_err());
        let g = Grid::new_2d(8, 10, 2.0, 1.0).unwrap();
        assert_eq!(g.len(), 80);
        assert!((g.cell_volume() - 0.25 * 0.1).abs() < 1e-15);
        assert_eq!(g.coords(g.index(3, 7)), (3, 7));
    }

    #[test]
    fn binary_ops_check_grids() {
        let a = ScalarField::zeros(Grid::new_1d(8, 1.0).unwrap());
        let b = ScalarField::zeros(Grid::new_1d(9, 1.0).unwrap());
        assert!(matches!(a.zip_map(&b, |x, y| x + y), Err(Error::GridMismatch(_))));
    }
}
