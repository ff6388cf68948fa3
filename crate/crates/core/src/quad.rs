//! Composite Gauss-Legendre quadrature for the few places where a primitive
//! has no closed form (custom nonlinearities, localized weights).

use crate::scalar::Real;

const NODES: [f64; 5] = [
    -0.906_179_845_938_664,
    -0.538_469_310_105_683,
    0.0,
    0.538_469_310_105_683,
    0.906_179_845_938_664,
];
const WEIGHTS: [f64; 5] = [
    0.236_926_885_056_189,
    0.478_628_670_499_366,
    0.568_888_888_888_889,
    0.478_628_670_499_366,
    0.236_926_885_056_189,
];

/// Integrates `f` over `[a, b]` with `panels` five-point Gauss-Legendre panels.
/// Oriented: returns the negative of the integral over `[b, a]` when `b < a`.
pub fn integrate<T: Real, F: Fn(T) -> T>(f: F, a: T, b: T, panels: usize) -> T {
    if a == b {
        return T::zero();
    }
    let panels = panels.max(1);
    let width = (b - a) / T::from_usize_lossy(panels);
    let half = width * T::lit(0.5);
    let mut acc = T::zero();
    for p in 0..panels {
        let mid = a + width * (T::from_usize_lossy(p) + T::lit(0.5));
        for (node, weight) in NODES.iter().zip(WEIGHTS.iter()) {
            acc = acc + T::lit(*weight) * f(mid + half * T::lit(*node));
        }
    }
    acc * half
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_degree_nine() {
        let v: f64 = integrate(|x: f64| x.powi(9) + 3.0 * x.powi(4), 0.0, 2.0, 1);
        let exact = 2f64.powi(10) / 10.0 + 3.0 * 2f64.powi(5) / 5.0;
        assert!((v - exact).abs() < 1e-10);
    }

    #[test]
    fn orientation() {
        let a: f64 = integrate(|x: f64| x.cos(), 0.0, 1.0, 4);
        let b: f64 = integrate(|x: f64| x.cos(), 1.0, 0.0, 4);
        assert!((a + b).abs() < 1e-14);
        assert!((a - 1f64.sin()).abs() < 1e-12);
    }
}
