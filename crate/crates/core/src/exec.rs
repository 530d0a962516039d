//! Execution strategy for embarrassingly parallel loops.
//!
//! The Monte Carlo and parameter-sweep kernels map an index range through a
//! pure function and reduce the results in index order. Mapping is
//! data-parallel when the `parallel` feature is enabled (the default) and a
//! plain sequential loop otherwise — or when the caller explicitly requests
//! sequential execution, which the benchmark suite uses to compare the two.
//!
//! Because reduction always happens sequentially over the *ordered* map
//! results, the two modes produce bit-identical output.

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Maps `0..n` through `f`, collecting results in index order.
///
/// With the `parallel` feature (and `sequential == false`) the map runs on
/// the rayon thread pool; otherwise it runs on the calling thread. Either
/// way the returned vector is ordered by index, so any subsequent fold is
/// deterministic.
pub fn map_indexed<T, F>(n: usize, sequential: bool, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        if !sequential {
            return (0..n).into_par_iter().map(f).collect();
        }
    }
    let _ = sequential;
    (0..n).map(f).collect()
}

/// Compensated (Neumaier) summation of an ordered slice.
///
/// Used for all Monte Carlo reductions so that accumulation error does not
/// depend on hardware summation order and stays near one ulp of the true sum.
pub fn neumaier_sum(values: &[f64]) -> f64 {
    let mut sum = 0.0;
    let mut comp = 0.0;
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn test_map_indexed_preserves_order() {
        let out = map_indexed(1000, false, |i| i * i);
        for (i, v) in out.iter().enumerate() {
            assert_eq!(*v, i * i);
        }
    }

    #[test]
    fn test_parallel_and_sequential_agree_bitwise() {
        let f = |i: usize| ((i as f64) * 0.37).sin() / (1.0 + i as f64);
        let par: Vec<f64> = map_indexed(10_000, false, f);
        let seq: Vec<f64> = map_indexed(10_000, true, f);
        assert_eq!(par, seq);
        assert_eq!(neumaier_sum(&par).to_bits(), neumaier_sum(&seq).to_bits());
    }

    #[test]
    fn test_neumaier_handles_cancellation() {
        // 1 + 1e100 - 1e100 = 1 exactly under compensation.
        assert_eq!(neumaier_sum(&[1.0, 1e100, -1e100]), 1.0);
        let many: Vec<f64> = (0..100_000).map(|_| 0.1).collect();
        assert!((neumaier_sum(&many) - 10_000.0).abs() < 1e-9);
    }
}
