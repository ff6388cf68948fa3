use num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};

use super::{Field, TorusGrid};
use crate::error::{Error, Result};
use crate::scalar::{two_pi, Real};

/// Fourier coefficients `F_x v(n) = (2π)^{-N/2} ∫ v(x) e^{-in·x} dx` on the
/// lattice resolved by a grid, stored in FFT order (index `j` carries the
/// signed frequency `j` for `j < points/2` and `j - points` otherwise).
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField<T> {
    grid: TorusGrid,
    coefficients: Vec<Complex<T>>,
}

/// Signed frequency carried by FFT-order index `j` on `points` samples.
#[inline]
pub fn signed_frequency(j: usize, points: usize) -> i64 {
    if j < points / 2 {
        j as i64
    } else {
        j as i64 - points as i64
    }
}

impl<T: Real> SpectralField<T> {
    pub fn zeros(grid: TorusGrid) -> Self {
        Self { grid, coefficients: vec![Complex::new(T::zero(), T::zero()); grid.len()] }
    }

    pub fn from_coefficients(grid: TorusGrid, coefficients: Vec<Complex<T>>) -> Result<Self> {
        if coefficients.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} coefficients for a grid of {} points",
                coefficients.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, coefficients })
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.grid
    }

    pub fn coefficients(&self) -> &[Complex<T>] {
        &self.coefficients
    }

    pub fn coefficients_mut(&mut self) -> &mut [Complex<T>] {
        &mut self.coefficients
    }

    /// Signed lattice frequency `[n1, n2]` of a flat index (`n2 = 0` in 1-D).
    pub fn frequency(&self, index: usize) -> [i64; 2] {
        let p = self.grid.points_per_dim();
        let [a, b] = self.grid.multi_index(index);
        [signed_frequency(a, p), if self.grid.dim() == 1 { 0 } else { signed_frequency(b, p) }]
    }

    /// Euclidean length `|n|` of the frequency at a flat index.
    pub fn frequency_norm(&self, index: usize) -> T {
        let [a, b] = self.frequency(index);
        T::lit(((a * a + b * b) as f64).sqrt())
    }

    /// Flat index of a signed frequency (taken modulo the grid).
    pub fn index_of(&self, n: [i64; 2]) -> usize {
        let p = self.grid.points_per_dim() as i64;
        let a = n[0].rem_euclid(p) as usize;
        if self.grid.dim() == 1 {
            a
        } else {
            self.grid.flat_index(a, n[1].rem_euclid(p) as usize)
        }
    }

    pub fn get(&self, n: [i64; 2]) -> Complex<T> {
        self.coefficients[self.index_of(n)]
    }

    pub fn set(&mut self, n: [i64; 2], value: Complex<T>) {
        let i = self.index_of(n);
        self.coefficients[i] = value;
    }

    /// Largest `|c(-n) - conj(c(n))|` relative to `max(1, max |c|)`.
    pub fn hermitian_defect(&self) -> T {
        let scale = self.coefficients.iter().fold(T::one(), |m, c| m.max(c.norm()));
        let mut defect = T::zero();
        for i in 0..self.coefficients.len() {
            let [a, b] = self.frequency(i);
            let j = self.index_of([-a, -b]);
            defect = defect.max((self.coefficients[j] - self.coefficients[i].conj()).norm());
        }
        defect / scale
    }

    /// `Σ |c(n)|²`, the spectral side of Plancherel.
    pub fn energy(&self) -> T {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Multiplies every coefficient by `m(n)`, evaluated at the signed frequency.
    pub fn apply_multiplier(&mut self, m: impl Fn([i64; 2]) -> T) {
        for i in 0..self.coefficients.len() {
            let n = self.frequency(i);
            self.coefficients[i] = self.coefficients[i] * m(n);
        }
    }
}

pub(crate) fn fft_in_place<T: Real>(grid: &TorusGrid, data: &mut [Complex<T>], direction: FftDirection) {
    let p = grid.points_per_dim();
    let mut planner = FftPlanner::<T>::new();
    let fft = planner.plan_fft(p, direction);
    // rows (x fastest)
    for row in data.chunks_mut(p) {
        fft.process(row);
    }
    if grid.dim() == 2 {
        let mut column = vec![Complex::new(T::zero(), T::zero()); p];
        for ix in 0..p {
            for iy in 0..p {
                column[iy] = data[iy * p + ix];
            }
            fft.process(&mut column);
            for iy in 0..p {
                data[iy * p + ix] = column[iy];
            }
        }
    }
}

fn normalization<T: Real>(grid: &TorusGrid) -> T {
    grid.cell_volume::<T>() / two_pi::<T>().powf(T::lit(grid.dim() as f64 * 0.5))
}

/// Normalized forward transform of a real field.
pub fn forward_transform<T: Real>(f: &Field<T>) -> SpectralField<T> {
    let grid = *f.grid();
    let mut data: Vec<Complex<T>> = f.values().iter().map(|&v| Complex::new(v, T::zero())).collect();
    fft_in_place(&grid, &mut data, FftDirection::Forward);
    let scale = normalization::<T>(&grid);
    for c in &mut data {
        *c = *c * scale;
    }
    SpectralField { grid, coefficients: data }
}

/// Inverse of [`forward_transform`]; `(2π)^{-N/2} Σ_n w(n) e^{in·x}`.
pub fn inverse_transform<T: Real>(g: &SpectralField<T>) -> Result<Field<T>> {
    let tol = T::lit(1e-8).max(T::epsilon() * T::lit(256.0));
    let defect = g.hermitian_defect();
    if defect > tol {
        return Err(Error::SymmetryViolation { defect: defect.to_f64_lossy() });
    }
    let grid = g.grid;
    let mut data = g.coefficients.clone();
    fft_in_place(&grid, &mut data, FftDirection::Inverse);
    let scale = two_pi::<T>().powf(T::lit(grid.dim() as f64 * -0.5));
    let values = data.iter().map(|c| c.re * scale).collect();
    Ok(Field::from_raw(grid, values))
}

impl<T: Real> Field<T> {
    pub fn to_spectral(&self) -> SpectralField<T> {
        forward_transform(self)
    }
}
