//! One-dimensional quadrature helpers.

/// `n` equally spaced points covering `[a, b]` inclusive. Requires `n >= 2`.
pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    assert!(n >= 2, "linspace needs at least 2 points");
    let step = (b - a) / (n - 1) as f64;
    (0..n)
        .map(|i| if i == n - 1 { b } else { a + step * i as f64 })
        .collect()
}

/// Trapezoid rule over already-evaluated samples on a uniform grid.
pub fn trapezoid_uniform(values: &[f64], step: f64) -> f64 {
    assert!(values.len() >= 2);
    let inner: f64 = values[1..values.len() - 1].iter().sum();
    step * (0.5 * values[0] + inner + 0.5 * values[values.len() - 1])
}

/// Trapezoid rule for `f` on `[a, b]` with `n` grid points.
pub fn trapezoid<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let ts = linspace(a, b, n);
    let vals: Vec<f64> = ts.iter().map(|&t| f(t)).collect();
    trapezoid_uniform(&vals, (b - a) / (n - 1) as f64)
}

/// Composite Simpson rule for `f` on `[a, b]` with `n` subintervals
/// (`n` is rounded up to the next even number).
pub fn simpson<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, n: usize) -> f64 {
    let n = if n % 2 == 0 { n.max(2) } else { n + 1 };
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * i as f64);
    }
    acc * h / 3.0
}
