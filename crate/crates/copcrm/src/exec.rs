//! Deterministic execution helpers.
//!
//! Work is expressed as an indexed map so the parallel and sequential paths
//! produce the same `Vec` in the same order, and reductions always use the
//! canonical pairwise tree below. Results are therefore bit-identical no
//! matter how many rayon workers run (or whether the `parallel` feature is
//! enabled at all).

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Map `f` over `0..n`, collecting in index order.
pub fn map_indexed<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Single-threaded twin of [`map_indexed`], kept public as the reference
/// path for benchmarks and determinism checks.
pub fn map_indexed_serial<T, F>(n: usize, f: F) -> Vec<T>
where
    F: Fn(usize) -> T,
{
    (0..n).map(f).collect()
}

/// Fallible indexed map; the first error (by index) wins deterministically.
pub fn try_map_indexed<T, E, F>(n: usize, f: F) -> Result<Vec<T>, E>
where
    T: Send,
    E: Send,
    F: Fn(usize) -> Result<T, E> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        let results: Vec<Result<T, E>> = (0..n).into_par_iter().map(f).collect();
        results.into_iter().collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Pairwise (tree) summation: a fixed association order that is independent
/// of how the terms were produced.
pub fn pairwise_sum(terms: &[f64]) -> f64 {
    if terms.len() <= 32 {
        return terms.iter().sum();
    }
    let mid = terms.len() / 2;
    pairwise_sum(&terms[..mid]) + pairwise_sum(&terms[mid..])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pairwise_sum_matches_exact_on_integers() {
        let v: Vec<f64> = (0..1001).map(|i| i as f64).collect();
        assert_eq!(pairwise_sum(&v), 500_500.0);
    }

    #[test]
    fn parallel_and_serial_maps_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.1).sin() / (i as f64 + 1.0);
        let a = map_indexed(10_000, f);
        let b = map_indexed_serial(10_000, f);
        assert_eq!(a, b);
        assert_eq!(
            pairwise_sum(&a).to_bits(),
            pairwise_sum(&b).to_bits()
        );
    }
}
