//! Field snapshot files.
//!
//! Binary layout (little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 8 | magic `NSFIELD1` |
//! | 4 | `u32` dimension |
//! | 4 | `u32` component count |
//! | 8·dim | `u64` cells per axis |
//! | 8·dim | `f64` spacing per axis |
//! | 8·n·comps | `f64` payload, component-major, each component row-major |

use std::io::{Read, Write};
use std::path::Path;

use super::Grid;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"NSFIELD1";

/// A named set of cell fields on one grid.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldSnapshot {
    pub grid: Grid,
    pub components: Vec<Vec<f64>>,
}

impl FieldSnapshot {
    pub fn new(grid: Grid, components: Vec<Vec<f64>>) -> Result<Self> {
        if components.is_empty() || components.iter().any(|c| c.len() != grid.len()) {
            return Err(Error::GridMismatch("snapshot component shape".into()));
        }
        Ok(FieldSnapshot { grid, components })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let g = &self.grid;
        let mut out = Vec::with_capacity(32 + 8 * g.len() * self.components.len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(g.dim as u32).to_le_bytes());
        out.extend_from_slice(&(self.components.len() as u32).to_le_bytes());
        for a in 0..g.dim {
            out.extend_from_slice(&(g.cells[a] as u64).to_le_bytes());
        }
        for a in 0..g.dim {
            out.extend_from_slice(&g.spacing(a).to_le_bytes());
        }
        for c in &self.components {
            for v in c {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut cur = bytes;
        let mut take = |n: usize| -> Result<&[u8]> {
            if cur.len() < n {
                return Err(Error::Format("truncated snapshot".into()));
            }
            let (h, t) = cur.split_at(n);
            cur = t;
            Ok(h)
        };
        if take(8)? != MAGIC {
            return Err(Error::Format("bad magic".into()));
        }
        let u32_at = |b: &[u8]| u32::from_le_bytes(b.try_into().unwrap()) as usize;
        let dim = u32_at(take(4)?);
        let ncomp = u32_at(take(4)?);
        if !(dim == 1 || dim == 2) || ncomp == 0 {
            return Err(Error::Format(format!("bad header: dim {dim}, components {ncomp}")));
        }
        let mut cells = [1usize; 2];
        for c in cells.iter_mut().take(dim) {
            *c = u64::from_le_bytes(take(8)?.try_into().unwrap()) as usize;
        }
        let mut extent = [1.0f64; 2];
        for a in 0..dim {
            let h = f64::from_le_bytes(take(8)?.try_into().unwrap());
            extent[a] = h * cells[a] as f64;
        }
        let grid = Grid::new(dim, cells, extent).map_err(|e| Error::Format(e.to_string()))?;
        let n = grid.len();
        let mut components = Vec::with_capacity(ncomp);
        for _ in 0..ncomp {
            let raw = take(8 * n)?;
            components.push(
                raw.chunks_exact(8)
                    .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
                    .collect(),
            );
        }
        if !cur.is_empty() {
            return Err(Error::Format("trailing bytes".into()));
        }
        Ok(FieldSnapshot { grid, components })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(&self.to_bytes())?;
        Ok(())
    }

    pub fn read(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_bytes(&buf)
    }

    /// CSV with cell-centre coordinates followed by one column per component.
    pub fn write_csv(&self, path: &Path, names: &[&str]) -> Result<()> {
        if names.len() != self.components.len() {
            return Err(Error::InvalidInput("one name per component".into()));
        }
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["x".to_string()];
        if self.grid.dim == 2 {
            header.push("y".into());
        }
        header.extend(names.iter().map(|s| s.to_string()));
        w.write_record(&header)?;
        for k in 0..self.grid.len() {
            let c = self.grid.center(k);
            let mut row = vec![c[0].to_string()];
            if self.grid.dim == 2 {
                row.push(c[1].to_string());
            }
            row.extend(self.components.iter().map(|comp| comp[k].to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binary_round_trip() {
        let g = Grid::new_2d(8, 9, 1.0, 2.0).unwrap();
        let s = FieldSnapshot::new(
            g,
            vec![(0..g.len()).map(|i| i as f64 * 0.1).collect(), vec![-1.5; g.len()]],
        )
        .unwrap();
        let back = FieldSnapshot::from_bytes(&s.to_bytes()).unwrap();
        assert_eq!(back.components, s.components);
        assert_eq!(back.grid.cells, g.cells);
        assert!((back.grid.extent[1] - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_garbage() {
        assert!(FieldSnapshot::from_bytes(b"NOTAFILE").is_err());
        let g = Grid::new_1d(8, 1.0).unwrap();
        let mut b = FieldSnapshot::new(g, vec![vec![0.0; 8]]).unwrap().to_bytes();
        b.pop();
        assert!(FieldSnapshot::from_bytes(&b).is_err());
    }
}
