//! Fixed-rule quadrature.

use crate::num::{from_usize, lit, Real};

/// Composite Simpson rule on `n` points (`n` odd, at least 3; even `n` is
/// bumped by one).
pub fn simpson<F: Real, G: Fn(F) -> F>(g: G, a: F, b: F, n: usize) -> F {
    let n = if n < 3 {
        3
    } else if n.is_multiple_of(2) {
        n + 1
    } else {
        n
    };
    let intervals = n - 1;
    let h = (b - a) / from_usize(intervals);
    let mut acc = g(a) + g(b);
    for i in 1..intervals {
        let w: F = if i % 2 == 1 { lit(4.0) } else { lit(2.0) };
        acc = acc + w * g(a + h * from_usize(i));
    }
    acc * h / lit(3.0)
}

/// Composite Simpson rule on uniformly spaced samples (odd count).
pub fn simpson_samples<F: Real>(values: &[F], dx: F) -> F {
    let n = values.len();
    assert!(
        n >= 3 && n % 2 == 1,
        "Simpson needs an odd sample count >= 3"
    );
    let mut acc = values[0] + values[n - 1];
    for (i, v) in values.iter().enumerate().take(n - 1).skip(1) {
        let w: F = if i % 2 == 1 { lit(4.0) } else { lit(2.0) };
        acc = acc + w * *v;
    }
    acc * dx / lit(3.0)
}

const GL5_NODES: [f64; 5] = [
    -0.906_179_845_938_664_0,
    -0.538_469_310_105_683_1,
    0.0,
    0.538_469_310_105_683_1,
    0.906_179_845_938_664_0,
];
const GL5_WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189_1,
    0.478_628_670_499_366_5,
    128.0 / 225.0,
    0.478_628_670_499_366_5,
    0.236_926_885_056_189_1,
];

/// Five-point Gauss–Legendre rule on `[a, b]` (exact for degree 9).
pub fn gauss_legendre5<F: Real, G: Fn(F) -> F>(g: G, a: F, b: F) -> F {
    let half = (b - a) * lit(0.5);
    let mid = (a + b) * lit(0.5);
    GL5_NODES
        .iter()
        .zip(GL5_WEIGHTS.iter())
        .map(|(&x, &w)| lit::<F>(w) * g(mid + half * lit(x)))
        .sum::<F>()
        * half
}
