use num_complex::Complex;
use rustfft::{FftDirection, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::spectral::{fft_in_place, signed_frequency};
use crate::field::TorusGrid;
use crate::kinetic::XiGrid;
use crate::model::{symbol_eval, ModelSpec};
use crate::multiplier_kernels::{kernel_l1_norm_of, BumpSpec};

/// Taper applied in time before the time transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TimeWindow {
    Rectangular,
    Hann,
}

impl TimeWindow {
    fn weight(self, i: usize, n: usize) -> f64 {
        match self {
            Self::Rectangular => 1.0,
            Self::Hann => (std::f64::consts::PI * (i as f64 + 0.5) / n as f64).sin().powi(2),
        }
    }
}

/// Samples of `f(t, x, ξ)` at `t_i = i·horizon/time_points`, grid points and ξ-cell centres.
///
/// Layout: `data[(t * grid.len() + x) * xi.cells + j]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpaceTimeXiArray {
    pub grid: TorusGrid,
    pub time_points: usize,
    pub horizon: f64,
    pub xi: XiGrid,
    pub data: Vec<f64>,
}

impl SpaceTimeXiArray {
    pub fn zeros(grid: TorusGrid, time_points: usize, horizon: f64, xi: XiGrid) -> Result<Self> {
        if time_points == 0 || !(horizon > 0.0) {
            return Err(Error::Config(format!("time window of {time_points} points over {horizon}")));
        }
        Ok(Self { grid, time_points, horizon, xi, data: vec![0.0; time_points * grid.len() * xi.cells] })
    }

    pub fn index(&self, t: usize, x: usize, j: usize) -> usize {
        (t * self.grid.len() + x) * self.xi.cells + j
    }

    pub fn time_step(&self) -> f64 {
        self.horizon / self.time_points as f64
    }

    /// `‖f‖_{L²_{t,x,ξ}}`.
    pub fn l2_norm(&self) -> f64 {
        let w = self.time_step() * self.grid.cell_volume::<f64>() * self.xi.spacing();
        (self.data.iter().map(|v| v * v).sum::<f64>() * w).sqrt()
    }

    /// `L²_{t,x}` norm of a `(t, x)` array on the same window.
    pub fn space_time_l2(&self, g: &[f64]) -> f64 {
        let w = self.time_step() * self.grid.cell_volume::<f64>();
        (g.iter().map(|v| v * v).sum::<f64>() * w).sqrt()
    }

    fn time_frequency(&self, k: usize) -> f64 {
        std::f64::consts::TAU * signed_frequency(k, self.time_points) as f64 / self.horizon
    }

    fn lattice_point(&self, x: usize) -> [i64; 2] {
        let p = self.grid.points_per_dim();
        let [ix, iy] = self.grid.multi_index(x);
        [signed_frequency(ix, p), if self.grid.dim() == 2 { signed_frequency(iy, p) } else { 0 }]
    }
}

fn multiplier_value(spec: &ModelSpec<f64>, psi: &BumpSpec, delta: f64, u: f64, n: [i64; 2], xi: f64) -> f64 {
    psi.eval(symbol_eval(spec, u, n, xi).norm() / delta)
}

fn time_transform(data: &mut [Complex<f64>], time_points: usize, stride: usize, direction: FftDirection) {
    let fft = FftPlanner::<f64>::new().plan_fft(time_points, direction);
    let mut line = vec![Complex::new(0.0, 0.0); time_points];
    for x in 0..stride {
        for t in 0..time_points {
            line[t] = data[t * stride + x];
        }
        fft.process(&mut line);
        for t in 0..time_points {
            data[t * stride + x] = line[t];
        }
    }
}

/// `Σ_ξ F⁻¹_{t,x}[ψ(|L(u, n, ξ)|/δ) F_{t,x}(w f)(·, ·, ξ)] Δξ` with `w` the time window.
///
/// Returns a `(t, x)` array, `t * grid.len() + x`. The real part is kept; the imaginary
/// residue comes only from the unpaired Nyquist frequencies.
pub fn averaged_multiplier_apply(
    f: &SpaceTimeXiArray,
    psi: &BumpSpec,
    spec: &ModelSpec<f64>,
    delta: f64,
    window: TimeWindow,
) -> Result<Vec<f64>> {
    if !(delta > 0.0) {
        return Err(Error::Config(format!("multiplier scale δ = {delta}")));
    }
    let np = f.grid.len();
    let nt = f.time_points;
    let dxi = f.xi.spacing();
    let centers = f.xi.centers();
    let mut acc = vec![Complex::new(0.0, 0.0); nt * np];
    let mut slice = vec![Complex::new(0.0, 0.0); nt * np];
    for (j, &xi) in centers.iter().enumerate() {
        for t in 0..nt {
            let w = window.weight(t, nt);
            for x in 0..np {
                slice[t * np + x] = Complex::new(w * f.data[f.index(t, x, j)], 0.0);
            }
        }
        for row in slice.chunks_mut(np) {
            fft_in_place(&f.grid, row, FftDirection::Forward);
        }
        time_transform(&mut slice, nt, np, FftDirection::Forward);
        for k in 0..nt {
            let u = f.time_frequency(k);
            for x in 0..np {
                let m = multiplier_value(spec, psi, delta, u, f.lattice_point(x), xi);
                acc[k * np + x] += slice[k * np + x] * (m * dxi);
            }
        }
    }
    time_transform(&mut acc, nt, np, FftDirection::Inverse);
    for row in acc.chunks_mut(np) {
        fft_in_place(&f.grid, row, FftDirection::Inverse);
    }
    let scale = 1.0 / (nt * np) as f64;
    Ok(acc.iter().map(|c| c.re * scale).collect())
}

/// `sup_{u,n} Δξ·#{ξ_j : ψ(|L(u, n, ξ_j)|/δ) ≠ 0}` over the frequencies seen by
/// [`averaged_multiplier_apply`] on the window of `f`.
pub fn multiplier_omega_sup(f: &SpaceTimeXiArray, psi: &BumpSpec, spec: &ModelSpec<f64>, delta: f64) -> f64 {
    let centers = f.xi.centers();
    let mut best = 0usize;
    for k in 0..f.time_points {
        let u = f.time_frequency(k);
        for x in 0..f.grid.len() {
            let n = f.lattice_point(x);
            let count = centers.iter().filter(|&&xi| multiplier_value(spec, psi, delta, u, n, xi) != 0.0).count();
            best = best.max(count);
        }
    }
    best as f64 * f.xi.spacing()
}

/// Kernel `L¹` norms of `ψ(|L(0, n, ξ)|/δ)`, rows by `δ`, columns by `ξ`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TruncationTable {
    pub deltas: Vec<f64>,
    pub xis: Vec<f64>,
    pub norms: Vec<Vec<f64>>,
    pub min: f64,
    pub max: f64,
    pub ratio: f64,
    /// `ratio < 10`.
    pub pass: bool,
}

pub fn truncation_property_probe(
    spec: &ModelSpec<f64>,
    psi: &BumpSpec,
    grid: &TorusGrid,
    deltas: &[f64],
    xis: &[f64],
) -> Result<TruncationTable> {
    if deltas.is_empty() || xis.is_empty() || deltas.iter().any(|d| !(*d > 0.0)) {
        return Err(Error::Config("truncation probe needs positive δ values and ξ samples".into()));
    }
    let norms = deltas
        .iter()
        .map(|&d| {
            xis.iter()
                .map(|&xi| kernel_l1_norm_of(grid, |n| multiplier_value(spec, psi, d, 0.0, n, xi)))
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let flat = norms.iter().flatten();
    let min = flat.clone().copied().fold(f64::INFINITY, f64::min);
    let max = flat.copied().fold(0.0, f64::max);
    let ratio = max / min;
    Ok(TruncationTable { deltas: deltas.to_vec(), xis: xis.to_vec(), norms, min, max, ratio, pass: ratio < 10.0 })
}
