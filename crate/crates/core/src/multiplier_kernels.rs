//! Bumps, dyadic partitions in symbol space and discrete kernel norms.

use num_complex::Complex;
use rayon::prelude::*;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::TorusGrid;

/// Quintic smoothstep, evaluated from the nearer end so both tails stay accurate.
fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    let poly = |s: f64| s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
    if t <= 0.5 {
        poly(t)
    } else {
        1.0 - poly(1.0 - t)
    }
}

/// Plateau `K`: 1 on `|z| ≤ 1`, 0 on `|z| ≥ 2`, quintic in between (C²).
pub fn plateau(z: f64) -> f64 {
    // S(2 - |z|) = 1 - S(|z| - 1), written to keep the tail near |z| = 2 accurate
    smoothstep(2.0 - z.abs())
}

/// `ψ₀ = K`, supported in `|z| ≤ 2`.
pub fn psi0(z: f64) -> f64 {
    plateau(z)
}

/// `ψ₁(z) = K(z) - K(2z)`, supported in `1/2 ≤ |z| ≤ 2`.
pub fn psi1(z: f64) -> f64 {
    plateau(z) - plateau(2.0 * z)
}

/// `ψ̃(z) = ψ₁(z) / z`, zero off the annulus.
pub fn psi_tilde(z: f64) -> f64 {
    if z.abs() < 0.5 {
        0.0
    } else {
        psi1(z) / z
    }
}

/// A radial bump centred at `center`: `ψ₀(|z - c|/ρ)` or, for an annulus, `ψ₁`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub center: f64,
    pub radius: f64,
    pub annulus: bool,
}

impl BumpSpec {
    pub fn ball(radius: f64) -> Self {
        Self { center: 0.0, radius, annulus: false }
    }

    pub fn annulus(radius: f64) -> Self {
        Self { center: 0.0, radius, annulus: true }
    }

    pub fn eval(&self, z: f64) -> f64 {
        let s = (z - self.center).abs() / self.radius;
        if self.annulus {
            psi1(s)
        } else {
            psi0(s)
        }
    }

    /// Radial evaluation on the complex plane.
    pub fn eval_complex(&self, z: Complex<f64>) -> f64 {
        let s = (z - Complex::new(self.center, 0.0)).norm() / self.radius;
        if self.annulus {
            psi1(s)
        } else {
            psi0(s)
        }
    }

    /// `|z| - c` beyond which the bump vanishes.
    pub fn support_radius(&self) -> f64 {
        2.0 * self.radius
    }
}

/// Weights `ψ₀(2|L|/δ)` (level 0) and `ψ₁(|L|/(δK))` for `K = 1, 2, 4, …`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymbolPartition {
    pub delta: f64,
    /// `0` followed by the dyadic `K`.
    pub levels: Vec<u64>,
}

impl SymbolPartition {
    /// Smallest dyadic ladder with `δ·K_max ≥ max_abs_symbol`.
    pub fn for_range(delta: f64, max_abs_symbol: f64) -> Result<Self> {
        if !(delta > 0.0) || !max_abs_symbol.is_finite() {
            return Err(Error::Config(format!("symbol partition needs delta > 0, got {delta}")));
        }
        let mut levels = vec![0u64, 1];
        let mut k = 1u64;
        while (k as f64) * delta < max_abs_symbol {
            k *= 2;
            levels.push(k);
        }
        Ok(Self { delta, levels })
    }

    pub fn weight(&self, level: u64, abs_symbol: f64) -> f64 {
        if level == 0 {
            psi0(2.0 * abs_symbol / self.delta)
        } else {
            psi1(abs_symbol / (self.delta * level as f64))
        }
    }

    pub fn weights(&self, abs_symbol: f64) -> Vec<f64> {
        self.levels.iter().map(|&k| self.weight(k, abs_symbol)).collect()
    }
}

/// Splits `g`, given on the transform domain together with `|L|` at every
/// entry, into the level components of [`SymbolPartition`].
pub fn dyadic_symbol_split(
    g: &[Complex<f64>],
    abs_symbol: &[f64],
    delta: f64,
) -> Result<(SymbolPartition, Vec<Vec<Complex<f64>>>)> {
    if g.len() != abs_symbol.len() {
        return Err(Error::GridMismatch(format!("{} values for {} symbol entries", g.len(), abs_symbol.len())));
    }
    let max = abs_symbol.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let partition = SymbolPartition::for_range(delta, max)?;
    let components = partition
        .levels
        .par_iter()
        .map(|&k| g.iter().zip(abs_symbol).map(|(v, &l)| v * partition.weight(k, l)).collect())
        .collect();
    Ok((partition, components))
}

/// `Σ_x |k(x)|` with `k = N^{-d} Σ_n m(n) e^{in·x}`; `m` in FFT order.
pub fn kernel_l1_norm(grid: &TorusGrid, multiplier: &[Complex<f64>]) -> Result<f64> {
    if multiplier.len() != grid.len() {
        return Err(Error::GridMismatch(format!("{} multiplier values on a {}-point grid", multiplier.len(), grid.len())));
    }
    let mut data = multiplier.to_vec();
    crate::field::spectral::fft_in_place(grid, &mut data, FftDirection::Inverse);
    let scale = 1.0 / grid.len() as f64;
    Ok(data.iter().map(|c| c.norm() * scale).sum())
}

/// [`kernel_l1_norm`] of a real multiplier given as a function of the lattice point.
pub fn kernel_l1_norm_of(grid: &TorusGrid, m: impl Fn([i64; 2]) -> f64) -> Result<f64> {
    let p = grid.points_per_dim();
    let values: Vec<Complex<f64>> = (0..grid.len())
        .map(|i| {
            let [ix, iy] = grid.multi_index(i);
            let n = [crate::field::spectral::signed_frequency(ix, p), if grid.dim() == 2 {
                crate::field::spectral::signed_frequency(iy, p)
            } else {
                0
            }];
            Complex::new(m(n), 0.0)
        })
        .collect();
    kernel_l1_norm(grid, &values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn bumps_are_bounded_and_supported() {
        for i in 0..=4000 {
            let z = -3.0 + 6.0 * i as f64 / 4000.0;
            let (a, b) = (psi0(z), psi1(z));
            assert!((0.0..=1.0).contains(&a) && (0.0..=1.0).contains(&b));
            if z.abs() >= 2.0 {
                assert_eq!(a, 0.0);
                assert_eq!(b, 0.0);
            }
            if z.abs() <= 0.5 {
                assert_eq!(b, 0.0);
            }
            assert!(psi_tilde(z).is_finite());
        }
        assert_eq!(BumpSpec::ball(1.0).eval_complex(Complex::new(0.6, 0.8)), 1.0);
    }

    #[test]
    fn seams_are_c2() {
        // one-sided second differences at support edges
        let e = 1e-7;
        for seam in [0.5, 1.0, 2.0] {
            for f in [psi0 as fn(f64) -> f64, psi1] {
                let left = (f(seam) - 2.0 * f(seam - e) + f(seam - 2.0 * e)) / (e * e);
                let right = (f(seam + 2.0 * e) - 2.0 * f(seam + e) + f(seam)) / (e * e);
                assert!((left - right).abs() < 1e-4, "{seam}: {left} vs {right}");
            }
        }
    }

    #[test]
    fn partition_of_unity_on_lattice() {
        let p = SymbolPartition::for_range(0.3, 500.0).unwrap();
        assert!(*p.levels.last().unwrap() as f64 * 0.3 >= 500.0);
        for i in 0..20_000 {
            let l = 500.0 * i as f64 / 20_000.0;
            let s: f64 = p.weights(l).iter().sum();
            assert!((s - 1.0).abs() < 1e-12, "{l}: {s}");
        }
    }

    #[test]
    fn split_examples() {
        let g: Vec<Complex<f64>> = (0..64).map(|i| Complex::new((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let small: Vec<f64> = (0..64).map(|i| 0.5 * (i as f64 / 64.0)).collect();
        let (_, comps) = dyadic_symbol_split(&g, &small, 1.0).unwrap();
        assert_eq!(comps[0], g);
        assert!(comps[1..].iter().all(|c| c.iter().all(|v| v.norm() == 0.0)));

        let wide: Vec<f64> = (0..64).map(|i| (i as f64 * 0.37).powi(2)).collect();
        let (part, comps) = dyadic_symbol_split(&g, &wide, 0.2).unwrap();
        for (i, v) in g.iter().enumerate() {
            let sum: Complex<f64> = comps.iter().map(|c| c[i]).sum();
            assert!((sum - v).norm() < 1e-10);
        }
        for (level, comp) in part.levels.iter().zip(&comps).skip(1) {
            for (c, &l) in comp.iter().zip(&wide) {
                if c.norm() > 0.0 {
                    let k = *level as f64 * 0.2;
                    assert!(l >= k / 2.0 && l <= 2.0 * k);
                }
            }
        }
        // at most two overlapping weights w, 1 - w: Σ w² ∈ [1/2, 1]
        let lower = (0..=1000)
            .map(|i| {
                let s = smoothstep(i as f64 / 1000.0);
                s * s + (1.0 - s) * (1.0 - s)
            })
            .fold(1.0f64, f64::min);
        assert!((lower - 0.5).abs() < 1e-12);
        let total: f64 = comps.iter().flatten().map(|c| c.norm_sqr()).sum();
        let base: f64 = g.iter().map(|c| c.norm_sqr()).sum();
        assert!(total >= lower * base - 1e-12 && total <= base + 1e-12);
    }

    #[test]
    fn kernel_norm_examples() {
        let grid = TorusGrid::line(256);
        assert!((kernel_l1_norm_of(&grid, |_| 1.0).unwrap() - 1.0).abs() < 1e-12);
        let shift: Vec<Complex<f64>> = (0..256)
            .map(|j| {
                let n = crate::field::spectral::signed_frequency(j, 256) as f64;
                Complex::from_polar(1.0, n * 3.0 * std::f64::consts::TAU / 256.0)
            })
            .collect();
        assert!((kernel_l1_norm(&grid, &shift).unwrap() - 1.0).abs() < 1e-9);
        let a = kernel_l1_norm_of(&grid, |n| psi0((n[0] * n[0]) as f64 / 100.0)).unwrap();
        let b = kernel_l1_norm_of(&grid, |n| psi0((n[0] * n[0]) as f64 / 400.0)).unwrap();
        assert!((a / b - 1.0).abs() < 0.1, "{a} vs {b}");
        let sq = TorusGrid::square(32);
        assert!((kernel_l1_norm_of(&sq, |_| 1.0).unwrap() - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn kernel_norm_submultiplicative(r1 in 0.5f64..40.0, r2 in 0.5f64..40.0, c in -10.0f64..10.0) {
            let grid = TorusGrid::line(128);
            let m1 = |n: [i64; 2]| psi0(n[0] as f64 / r1);
            let m2 = |n: [i64; 2]| psi1((n[0] as f64 - c) / r2);
            let a = kernel_l1_norm_of(&grid, m1).unwrap();
            let b = kernel_l1_norm_of(&grid, m2).unwrap();
            let ab = kernel_l1_norm_of(&grid, |n| m1(n) * m2(n)).unwrap();
            prop_assert!(ab <= a * b + 1e-8);
        }
    }
}
