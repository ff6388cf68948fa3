//! Kinetic view of a solution: `f = 1_{u>ξ}`, `χ_u`, histograms of the
//! kinetic measure and its large-`ξ` decay.

mod cutoff;
mod histogram;

pub use cutoff::{chain_rule_defect, CutoffFamily, Poly};
pub use histogram::{
    accumulate_entropy_defect, accumulate_parabolic_dissipation, initial_tail_profile, measure_decay_profile,
    tail_domination, write_decay_csv, DecayProfile, KineticAccumulator, KineticMeasureHistogram, MeasureComponent,
    TailCheck,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::model::Localization;
use crate::scalar::Real;

/// Uniform cells on `[xi_min, xi_max]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiGrid {
    pub xi_min: f64,
    pub xi_max: f64,
    pub cells: usize,
}

impl XiGrid {
    pub fn new(xi_min: f64, xi_max: f64, cells: usize) -> Result<Self> {
        if !(xi_min < xi_max) || !xi_min.is_finite() || !xi_max.is_finite() || cells == 0 {
            return Err(Error::Config(format!("invalid xi grid [{xi_min}, {xi_max}] with {cells} cells")));
        }
        Ok(Self { xi_min, xi_max, cells })
    }

    /// Covers `[lo, hi]` with at least two spare cells on each side.
    pub fn covering(lo: f64, hi: f64, cells: usize) -> Result<Self> {
        if cells < 5 {
            return Err(Error::Config(format!("{cells} xi cells cannot cover a range with margin")));
        }
        let (lo, hi) = if hi > lo { (lo, hi) } else { (lo - 0.5, hi + 0.5) };
        let width = (hi - lo) / (cells - 4) as f64;
        Self::new(lo - 2.0 * width, hi + 2.0 * width, cells)
    }

    /// Symmetric grid `[-2^{ℓ+1}, 2^{ℓ+1}]` with the smallest `ℓ ≥ 0` such
    /// that `2^{ℓ+1} ≥ 4·envelope`.
    pub fn dyadic_for_envelope(envelope: f64, cells: usize) -> Result<(Self, u32)> {
        let target = (4.0 * envelope.abs()).max(2.0);
        let ell_max = (target.log2().ceil() as u32).saturating_sub(1);
        let r = 2f64.powi(ell_max as i32 + 1);
        Ok((Self::new(-r, r, cells)?, ell_max))
    }

    pub fn spacing(&self) -> f64 {
        (self.xi_max - self.xi_min) / self.cells as f64
    }

    pub fn center(&self, j: usize) -> f64 {
        self.xi_min + (j as f64 + 0.5) * self.spacing()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.cells).map(|j| self.center(j)).collect()
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.cells).map(|j| self.xi_min + j as f64 * self.spacing()).collect()
    }

    /// Cell containing `xi` (nearest centre), `None` outside the grid.
    pub fn cell_of(&self, xi: f64) -> Option<usize> {
        if !(xi >= self.xi_min && xi <= self.xi_max) {
            return None;
        }
        Some((((xi - self.xi_min) / self.spacing()) as usize).min(self.cells - 1))
    }

    /// Index range of cells whose centres lie in `[lo, hi]`.
    pub(crate) fn centers_within(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let h = self.spacing();
        let first = ((lo - self.xi_min) / h - 0.5).ceil().max(0.0) as usize;
        let last = (((hi - self.xi_min) / h - 0.5).floor() + 1.0).clamp(0.0, self.cells as f64) as usize;
        first.min(last)..last
    }

    pub fn check_covers(&self, lo: f64, hi: f64) -> Result<()> {
        if lo < self.xi_min || hi > self.xi_max {
            return Err(Error::RangeNotCovered { lo, hi, xi_min: self.xi_min, xi_max: self.xi_max });
        }
        Ok(())
    }
}

/// Values on `x-cells × ξ-cells`, row-major with `ξ` fastest.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseArray {
    pub xi: XiGrid,
    pub points: usize,
    pub data: Vec<i8>,
}

impl PhaseArray {
    pub fn get(&self, x: usize, j: usize) -> i8 {
        self.data[x * self.xi.cells + j]
    }

    pub fn column(&self, x: usize) -> &[i8] {
        &self.data[x * self.xi.cells..(x + 1) * self.xi.cells]
    }

    /// `Σ_j v(x, ξ_j) Δξ` per `x`.
    pub fn xi_integral(&self) -> Vec<f64> {
        let d = self.xi.spacing();
        (0..self.points).map(|x| self.column(x).iter().map(|&v| v as f64).sum::<f64>() * d).collect()
    }
}

fn phase_array<T: Real>(u: &Field<T>, xi: &XiGrid, value: impl Fn(f64, f64) -> i8) -> Result<PhaseArray> {
    let (lo, hi) = u.min_max();
    xi.check_covers(lo.to_f64_lossy(), hi.to_f64_lossy())?;
    let centers = xi.centers();
    let mut data = Vec::with_capacity(u.len() * xi.cells);
    for &v in u.values() {
        let v = v.to_f64_lossy();
        data.extend(centers.iter().map(|&c| value(v, c)));
    }
    Ok(PhaseArray { xi: *xi, points: u.len(), data })
}

/// `f(x, ξ) = 1_{u(x) > ξ}` at the ξ-cell centres.
pub fn kinetic_function<T: Real>(u: &Field<T>, xi: &XiGrid) -> Result<PhaseArray> {
    phase_array(u, xi, |v, c| i8::from(v > c))
}

/// `χ_u(ξ) = 1_{u > ξ} - 1_{0 > ξ}` at the ξ-cell centres.
pub fn chi_function<T: Real>(u: &Field<T>, xi: &XiGrid) -> Result<PhaseArray> {
    phase_array(u, xi, |v, c| i8::from(v > c) - i8::from(0.0 > c))
}

/// Layer-cake reconstruction `Σ_j f Δξ + ξ_min`, equal to `u` within `Δξ`.
pub fn reconstruct_from_kinetic(f: &PhaseArray) -> Vec<f64> {
    f.xi_integral().into_iter().map(|s| s + f.xi.xi_min).collect()
}

/// `∫ χ_u(ξ) η(ξ) dξ` by the midpoint rule on the ξ-grid.
pub fn localized_average<T: Real>(u: &Field<T>, xi: &XiGrid, localization: &Localization<f64>) -> Result<Vec<f64>> {
    let chi = chi_function(u, xi)?;
    let weights: Vec<f64> = xi.centers().iter().map(|&c| localization.eta(c)).collect();
    let d = xi.spacing();
    Ok((0..chi.points)
        .map(|x| chi.column(x).iter().zip(&weights).map(|(&c, &w)| c as f64 * w).sum::<f64>() * d)
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TorusGrid;
    use proptest::prelude::*;

    fn field(values: Vec<f64>) -> Field<f64> {
        let n = values.len();
        Field::new(TorusGrid::line(n), values).unwrap()
    }

    #[test]
    fn kinetic_function_of_zero() {
        let xi = XiGrid::new(-2.0, 2.0, 40).unwrap();
        let f = kinetic_function(&field(vec![0.0; 8]), &xi).unwrap();
        for x in 0..8 {
            for j in 0..40 {
                assert_eq!(f.get(x, j), i8::from(xi.center(j) < 0.0));
            }
        }
    }

    #[test]
    fn chi_examples() {
        let xi = XiGrid::new(-3.0, 3.0, 600).unwrap();
        let u = field(vec![2.0, -1.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0]);
        let chi = chi_function(&u, &xi).unwrap();
        for j in 0..600 {
            let c = xi.center(j);
            assert_eq!(chi.get(0, j), i8::from(c > 0.0 && c < 2.0));
            assert_eq!(chi.get(1, j), -i8::from(c > -1.0 && c < 0.0));
        }
        let integral = chi.xi_integral();
        assert!((integral[0] - 2.0).abs() <= xi.spacing());
        assert!((integral[1] + 1.0).abs() <= xi.spacing());
    }

    #[test]
    fn range_must_be_covered() {
        let xi = XiGrid::new(-1.0, 1.0, 16).unwrap();
        assert!(matches!(kinetic_function(&field(vec![1.5; 8]), &xi), Err(Error::RangeNotCovered { .. })));
    }

    #[test]
    fn covering_grid_has_margin() {
        let g = XiGrid::covering(-0.3, 1.7, 64).unwrap();
        let h = g.spacing();
        assert!(g.xi_min <= -0.3 - 2.0 * h + 1e-12 && g.xi_max >= 1.7 + 2.0 * h - 1e-12);
        let (d, ell) = XiGrid::dyadic_for_envelope(3.0, 256).unwrap();
        assert_eq!(ell, 3);
        assert_eq!(d.xi_max, 16.0);
    }

    #[test]
    fn localized_average_matches_eta_bar() {
        let xi = XiGrid::new(-4.0, 4.0, 4000).unwrap();
        let u = Field::from_fn(TorusGrid::line(32), |x: [f64; 2]| 2.5 * x[0].sin());
        for loc in [Localization::window(-3.5, 3.5), Localization::bump(0.3, 1.5), Localization::identity()] {
            let avg = localized_average(&u, &xi, &loc).unwrap();
            for (a, &v) in avg.iter().zip(u.values()) {
                let oracle = loc.eta_bar(v);
                assert!((a - oracle).abs() <= 2.0 * xi.spacing(), "{a} vs {oracle}");
            }
        }
    }

    proptest! {
        #[test]
        fn layer_cake_and_monotonicity(values in proptest::collection::vec(-3.0f64..3.0, 8)) {
            let xi = XiGrid::covering(-3.0, 3.0, 211).unwrap();
            let u = field(values.clone());
            let f = kinetic_function(&u, &xi).unwrap();
            let rec = reconstruct_from_kinetic(&f);
            for x in 0..8 {
                prop_assert!((rec[x] - values[x]).abs() <= xi.spacing());
                prop_assert!(f.column(x).windows(2).all(|w| w[1] <= w[0]));
            }
            let chi = chi_function(&u, &xi).unwrap();
            for (x, s) in chi.xi_integral().into_iter().enumerate() {
                prop_assert!((s - values[x]).abs() <= xi.spacing());
                prop_assert!(chi.column(x).iter().all(|&c| c == 0 || (c as f64) * values[x] > 0.0));
            }
        }
    }
}
