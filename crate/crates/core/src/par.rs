//! Data-parallel helpers with a sequential fallback.
//!
//! With the `parallel` feature, [`Exec::Parallel`] dispatches to rayon;
//! without it every call runs sequentially. Work is always split at row
//! granularity and reductions combine per-row partials in index order, so
//! results are bit-identical whatever the thread count.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Exec {
    Sequential,
    #[default]
    Parallel,
}

impl Exec {
    pub fn is_parallel(self) -> bool {
        cfg!(feature = "parallel") && self == Exec::Parallel
    }
}

pub fn parallel_available() -> bool {
    cfg!(feature = "parallel")
}

/// Runs `f(row_index, row)` over consecutive `row_len` chunks of `data`.
pub fn for_each_row<T, F>(exec: Exec, data: &mut [T], row_len: usize, f: F)
where
    T: Send,
    F: Fn(usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        data.par_chunks_mut(row_len)
            .enumerate()
            .for_each(|(j, row)| f(j, row));
        return;
    }
    let _ = exec;
    data.chunks_mut(row_len)
        .enumerate()
        .for_each(|(j, row)| f(j, row));
}

/// Like [`for_each_row`], with per-worker scratch built by `init`.
pub fn for_each_row_with<T, S, I, F>(exec: Exec, data: &mut [T], row_len: usize, init: I, f: F)
where
    T: Send,
    I: Fn() -> S + Sync + Send,
    F: Fn(&mut S, usize, &mut [T]) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        data.par_chunks_mut(row_len)
            .enumerate()
            .for_each_init(&init, |s, (j, row)| f(s, j, row));
        return;
    }
    let _ = exec;
    let mut scratch = init();
    data.chunks_mut(row_len)
        .enumerate()
        .for_each(|(j, row)| f(&mut scratch, j, row));
}

/// Maps `f` over `0..n`, preserving order.
pub fn map_range<U, F>(exec: Exec, n: usize, f: F) -> Vec<U>
where
    U: Send,
    F: Fn(usize) -> U + Sync + Send,
{
    #[cfg(feature = "parallel")]
    if exec.is_parallel() {
        return (0..n).into_par_iter().map(f).collect();
    }
    let _ = exec;
    (0..n).map(f).collect()
}

/// Deterministic sum: per-row partials are added in row order.
pub fn sum_rows<T, F>(exec: Exec, data: &[T], row_len: usize, f: F) -> f64
where
    T: Sync,
    F: Fn(usize, &[T]) -> f64 + Sync + Send,
{
    if data.is_empty() {
        return 0.0;
    }
    let rows = data.len().div_ceil(row_len);
    let partials = map_range(exec, rows, |j| {
        let start = j * row_len;
        let end = (start + row_len).min(data.len());
        f(j, &data[start..end])
    });
    partials.into_iter().sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequential_and_parallel_sums_are_bit_identical() {
        let data: Vec<f64> = (0..10_000).map(|i| (i as f64 * 0.37).sin() * 1e-3).collect();
        let s = sum_rows(Exec::Sequential, &data, 97, |_, r| r.iter().sum());
        let p = sum_rows(Exec::Parallel, &data, 97, |_, r| r.iter().sum());
        assert_eq!(s.to_bits(), p.to_bits());
    }

    #[test]
    fn rows_see_their_index() {
        let mut data = vec![0usize; 12];
        for_each_row(Exec::Parallel, &mut data, 4, |j, row| row.fill(j));
        assert_eq!(data, vec![0, 0, 0, 0, 1, 1, 1, 1, 2, 2, 2, 2]);
    }
}
