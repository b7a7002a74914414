//! Data-parallel helpers.
//!
//! With the `parallel` feature (default) the helpers dispatch to rayon; without
//! it every helper runs the same closure sequentially. Only element-wise maps
//! are parallelized. Floating-point reductions are always summed sequentially
//! so results are bit-identical regardless of thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Cell count below which cellwise kernels stay sequential.
pub const PAR_THRESHOLD: usize = 16_384;

/// Runtime choice of execution strategy for batch workloads.
///
/// `Parallel` silently degrades to sequential when the crate is built without
/// the `parallel` feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Execution::Parallel
    }
}

/// Evaluate `f(i)` for `i in 0..n`, preserving order.
pub fn map_indices<R, F>(n: usize, exec: Execution, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Map over a slice, preserving order.
pub fn map_slice<T, R, F>(items: &[T], exec: Execution, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if exec.is_parallel() {
            return items.par_iter().map(f).collect();
        }
    }
    let _ = exec;
    items.iter().map(f).collect()
}

/// Cellwise kernel: parallel only for large grids.
pub fn map_cells<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    let exec = if n >= PAR_THRESHOLD {
        Execution::Parallel
    } else {
        Execution::Sequential
    };
    map_indices(n, exec, f)
}

/// In-place cellwise update, parallel only for large slices.
pub fn for_each_cell_mut<F>(values: &mut [f64], f: F)
where
    F: Fn(usize, &mut f64) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if values.len() >= PAR_THRESHOLD {
            values.par_iter_mut().enumerate().for_each(|(i, v)| f(i, v));
            return;
        }
    }
    values.iter_mut().enumerate().for_each(|(i, v)| f(i, v));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parallel_and_sequential_maps_agree() {
        let a = map_indices(1000, Execution::Sequential, |i| (i as f64).sin());
        let b = map_indices(1000, Execution::Parallel, |i| (i as f64).sin());
        assert_eq!(a, b);
    }

    #[test]
    fn map_cells_preserves_order() {
        let v = map_cells(PAR_THRESHOLD + 5, |i| i as f64);
        assert!(v.iter().enumerate().all(|(i, x)| *x == i as f64));
    }
}
