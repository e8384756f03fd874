//! Fixture fields shared by the benchmarks.

use polycycle_core::PolyField3;

/// `(x, -y, -2z)`: six hyperbolic divisor points.
pub fn diagonal() -> PolyField3 {
    PolyField3::linear_i([[1, 0, 0], [0, -1, 0], [0, 0, -2]])
}

/// Focus in the xy-plane with a strongly attracting z-axis.
pub fn equator() -> PolyField3 {
    PolyField3::linear_i([[-1, -1, 0], [1, -1, 0], [0, 0, -3]])
}

/// Digraph with `n` vertices on a ring plus every chord `i -> i + 2`.
pub fn ring_with_chords(n: usize) -> Vec<(usize, usize)> {
    (0..n).flat_map(|i| [(i, (i + 1) % n), (i, (i + 2) % n)]).collect()
}
