//! Periodic grids on the torus `[0, 2π)^N`, grid functions, discrete norms
//! and the normalized Fourier transform.
//!
//! Grid values sit at the nodes `x_j = j·h`, `h = 2π / points`. Every
//! integral is the Riemann sum `Σ v_j h^N`, which coincides with the
//! quadrature underlying the transform, so Plancherel holds exactly up to
//! rounding. In two dimensions the storage is row-major with `x` fastest:
//! `index = iy * points + ix`.

mod io;
pub(crate) mod spectral;

pub use io::{read_binary, read_binary_from, write_binary, write_binary_to, write_csv, FIELD_MAGIC, FIELD_VERSION};
pub use spectral::{forward_transform, inverse_transform, SpectralField};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{two_pi, Real};

/// Uniform periodic grid on `T^N`, `N ∈ {1, 2}`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TorusGrid {
    dim: usize,
    points: usize,
}

impl TorusGrid {
    pub const MIN_POINTS: usize = 8;

    pub fn new(dim: usize, points_per_dim: usize) -> Result<Self> {
        if !(dim == 1 || dim == 2) {
            return Err(Error::InvalidGrid(format!("dimension {dim} not in {{1, 2}}")));
        }
        if points_per_dim < Self::MIN_POINTS || !points_per_dim.is_power_of_two() {
            return Err(Error::InvalidGrid(format!(
                "points per dimension {points_per_dim} must be a power of two >= {}",
                Self::MIN_POINTS
            )));
        }
        Ok(Self { dim, points: points_per_dim })
    }

    /// One-dimensional grid; panics on an invalid size.
    pub fn line(points: usize) -> Self {
        Self::new(1, points).expect("valid 1-D grid")
    }

    pub fn square(points: usize) -> Self {
        Self::new(2, points).expect("valid 2-D grid")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_dim(&self) -> usize {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing<T: Real>(&self) -> T {
        two_pi::<T>() / T::from_usize_lossy(self.points)
    }

    /// Volume element `h^N` of the Riemann sums.
    pub fn cell_volume<T: Real>(&self) -> T {
        self.spacing::<T>().powi(self.dim as i32)
    }

    /// Lebesgue measure `(2π)^N` of the torus.
    pub fn volume<T: Real>(&self) -> T {
        two_pi::<T>().powi(self.dim as i32)
    }

    /// Multi-index `[ix, iy]` of a flat index (`iy = 0` in 1-D).
    #[inline]
    pub fn multi_index(&self, index: usize) -> [usize; 2] {
        if self.dim == 1 {
            [index, 0]
        } else {
            [index % self.points, index / self.points]
        }
    }

    #[inline]
    pub fn flat_index(&self, ix: usize, iy: usize) -> usize {
        iy * self.points + ix
    }

    /// Node coordinates of a flat index; the second entry is zero in 1-D.
    pub fn coords<T: Real>(&self, index: usize) -> [T; 2] {
        let h = self.spacing::<T>();
        let [ix, iy] = self.multi_index(index);
        [h * T::from_usize_lossy(ix), h * T::from_usize_lossy(iy)]
    }

    /// Flat index of the periodic neighbour `offset` cells away along `axis`.
    #[inline]
    pub fn neighbor(&self, index: usize, axis: usize, offset: isize) -> usize {
        let n = self.points as isize;
        let [ix, iy] = self.multi_index(index);
        match axis {
            0 => {
                let j = (ix as isize + offset).rem_euclid(n) as usize;
                if self.dim == 1 {
                    j
                } else {
                    self.flat_index(j, iy)
                }
            }
            _ => {
                let j = (iy as isize + offset).rem_euclid(n) as usize;
                self.flat_index(ix, j)
            }
        }
    }
}

/// A real grid function on `T^N`.
#[derive(Clone, Debug, PartialEq)]
pub struct Field<T> {
    grid: TorusGrid,
    values: Vec<T>,
}

/// Norm exponent sentinel for the maximum norm.
pub fn infinity<T: Real>() -> T {
    T::infinity()
}

impl<T: Real> Field<T> {
    pub fn new(grid: TorusGrid, values: Vec<T>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        if let Some(index) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: 0, index });
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_raw(grid: TorusGrid, values: Vec<T>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, values: vec![T::zero(); grid.len()] }
    }

    pub fn constant(grid: TorusGrid, c: T) -> Self {
        Self { grid, values: vec![c; grid.len()] }
    }

    /// Samples `f` at the grid nodes; `f` receives `[x, y]` (`y = 0` in 1-D).
    pub fn from_fn(grid: TorusGrid, f: impl Fn([T; 2]) -> T) -> Self {
        let values = (0..grid.len()).map(|i| f(grid.coords(i))).collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [T] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<T> {
        self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self { grid: self.grid, values: self.values.iter().map(|&v| f(v)).collect() }
    }

    pub fn zip_map(&self, other: &Self, f: impl Fn(T, T) -> T) -> Result<Self> {
        self.check_grid(other)?;
        let values = self.values.iter().zip(&other.values).map(|(&a, &b)| f(a, b)).collect();
        Ok(Self { grid: self.grid, values })
    }

    pub fn check_grid(&self, other: &Self) -> Result<()> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn min_max(&self) -> (T, T) {
        self.values.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    pub fn max_abs(&self) -> T {
        self.values.iter().fold(T::zero(), |m, v| m.max(v.abs()))
    }

    /// Discrete mass `Σ u h^N`.
    pub fn mass(&self) -> T {
        self.values.iter().copied().sum::<T>() * self.grid.cell_volume::<T>()
    }

    /// Riemann-sum `L^p(T^N)` norm; `p = +∞` gives the maximum norm.
    pub fn lp_norm(&self, p: T) -> Result<T> {
        if p.is_nan() || p < T::one() {
            return Err(Error::InvalidExponent(p.to_f64_lossy()));
        }
        if p.is_infinite() {
            return Ok(self.max_abs());
        }
        let vol = self.grid.cell_volume::<T>();
        if p == T::one() {
            return Ok(self.values.iter().map(|v| v.abs()).sum::<T>() * vol);
        }
        if p == T::lit(2.0) {
            return Ok((self.values.iter().map(|v| *v * *v).sum::<T>() * vol).sqrt());
        }
        let sum: T = self.values.iter().map(|v| v.abs().powf(p)).sum();
        Ok((sum * vol).powf(p.recip()))
    }

    pub fn l1_norm(&self) -> T {
        self.lp_norm(T::one()).expect("p = 1 valid")
    }

    pub fn l2_norm(&self) -> T {
        self.lp_norm(T::lit(2.0)).expect("p = 2 valid")
    }

    /// `‖(self − other)^+‖_{L¹}`.
    pub fn positive_part_l1(&self, other: &Self) -> Result<T> {
        self.check_grid(other)?;
        let sum: T = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(&a, &b)| (a - b).max(T::zero()))
            .sum();
        Ok(sum * self.grid.cell_volume::<T>())
    }

    /// Central-difference gradient component along `axis`.
    pub fn central_difference(&self, axis: usize) -> Self {
        let h2 = self.grid.spacing::<T>() * T::lit(2.0);
        let values = (0..self.len())
            .map(|i| {
                let right = self.values[self.grid.neighbor(i, axis, 1)];
                let left = self.values[self.grid.neighbor(i, axis, -1)];
                (right - left) / h2
            })
            .collect();
        Self { grid: self.grid, values }
    }
}

/// Free-function form of [`Field::lp_norm`].
pub fn lp_norm<T: Real>(f: &Field<T>, p: T) -> Result<T> {
    f.lp_norm(p)
}

/// Free-function form of [`Field::positive_part_l1`].
pub fn positive_part_l1<T: Real>(f: &Field<T>, g: &Field<T>) -> Result<T> {
    f.positive_part_l1(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn grid_validation() {
        assert!(TorusGrid::new(1, 4).is_err());
        assert!(TorusGrid::new(1, 12).is_err());
        assert!(TorusGrid::new(3, 16).is_err());
        let g = TorusGrid::new(2, 16).unwrap();
        assert_eq!(g.len(), 256);
        let h: f64 = g.spacing();
        assert!((h * 16.0 - 2.0 * PI).abs() <= f64::EPSILON * 8.0);
    }

    #[test]
    fn neighbors_wrap() {
        let g = TorusGrid::square(8);
        let i = g.flat_index(0, 7);
        assert_eq!(g.neighbor(i, 0, -1), g.flat_index(7, 7));
        assert_eq!(g.neighbor(i, 1, 1), g.flat_index(0, 0));
        let l = TorusGrid::line(8);
        assert_eq!(l.neighbor(7, 0, 1), 0);
    }

    #[test]
    fn rejects_non_finite_and_wrong_length() {
        let g = TorusGrid::line(8);
        assert!(matches!(Field::new(g, vec![0.0; 7]), Err(Error::GridMismatch(_))));
        let mut v = vec![0.0; 8];
        v[3] = f64::NAN;
        assert!(matches!(Field::new(g, v), Err(Error::NonFinite { index: 3, .. })));
    }

    #[test]
    fn lp_norm_examples() {
        let g = TorusGrid::line(64);
        let one = Field::constant(g, 1.0);
        assert!((one.lp_norm(1.0).unwrap() - 2.0 * PI).abs() < 1e-12);
        let c = Field::constant(g, -3.0);
        for p in [1.0, 2.0, 3.5] {
            let expected = 3.0 * (2.0 * PI).powf(1.0 / p);
            assert!((c.lp_norm(p).unwrap() - expected).abs() < 1e-11);
        }
        assert_eq!(c.lp_norm(infinity()).unwrap(), 3.0);
        assert!(matches!(c.lp_norm(0.5), Err(Error::InvalidExponent(_))));
        let c2 = Field::constant(TorusGrid::square(8), 2.0);
        assert!((c2.lp_norm(2.0).unwrap() - 2.0 * 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn lp_norm_of_sine_matches_fine_quadrature() {
        // ∫ sin² = π; cross-check with a much finer midpoint sum
        let fine: f64 = {
            let n = 1 << 16;
            let h = 2.0 * PI / n as f64;
            (0..n).map(|j| ((j as f64 + 0.5) * h).sin().powi(2) * h).sum::<f64>().sqrt()
        };
        assert!((fine - PI.sqrt()).abs() < 1e-10);
        let s = Field::from_fn(TorusGrid::line(32), |x: [f64; 2]| x[0].sin());
        assert!((s.lp_norm(2.0).unwrap() - fine).abs() < 1e-12);
    }

    #[test]
    fn positive_part_examples() {
        let g = TorusGrid::line(256);
        let f = Field::from_fn(g, |x: [f64; 2]| x[0].sin());
        assert_eq!(f.positive_part_l1(&f).unwrap(), 0.0);
        let two = Field::constant(g, 2.0);
        let one = Field::constant(g, 1.0);
        assert!((two.positive_part_l1(&one).unwrap() - 2.0 * PI).abs() < 1e-12);
        // oracle: ∫ sin⁺ over one period is 2; midpoint-rule error O(h²) for this kinked integrand
        let zero = Field::zeros(g);
        assert!((f.positive_part_l1(&zero).unwrap() - 2.0).abs() < 1e-3);
        let other = Field::zeros(TorusGrid::line(128));
        assert!(matches!(f.positive_part_l1(&other), Err(Error::GridMismatch(_))));
    }

    #[test]
    fn normalized_norms_nondecreasing_in_p() {
        let g = TorusGrid::line(64);
        let f = Field::from_fn(g, |x: [f64; 2]| x[0].sin() + 0.3 * (3.0 * x[0]).cos() + 0.1);
        let vol = 2.0 * PI;
        let normalized: Vec<f64> = [1.0, 2.0, 4.0]
            .iter()
            .map(|&p| f.lp_norm(p).unwrap() / vol.powf(1.0 / p))
            .collect();
        assert!(normalized[0] <= normalized[1] && normalized[1] <= normalized[2]);
    }
}
