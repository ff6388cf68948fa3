//! Truncated cylindrical Wiener process and the coefficient families
//! `g_k(x, ξ) = α_k c_k(x) s_k(ξ)` acting on it.

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::scalar::Real;

/// Shape of `c_k(x) s_k(ξ)`. In two dimensions `c_k` acts on the first coordinate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    /// `g_k = α_k`.
    Additive,
    /// `g_k = α_k cos(kx) / max(1, k) · tanh(ξ)`.
    MultiplicativeDefault,
    /// `g_k = α_k sin(kx) ξ`. Breaks the derivative bound for `k ≥ 2`.
    SinLinear,
}

impl NoiseFamily {
    /// Constant `C` in `|g_k(x,0)| + |∂_x g_k| + |∂_ξ g_k| ≤ C α_k`.
    ///
    /// For the default family the sum is `|sin|·|tanh| + |cos|·sech²/k`, at
    /// most `√(tanh² + sech⁴) ≤ 1` by Cauchy–Schwarz.
    pub fn bound_constant(self) -> f64 {
        1.0
    }
}

/// `K` modes with weights `α_k > 0`; `K = 0` is the deterministic equation.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseModel<T> {
    family: NoiseFamily,
    alpha: Vec<T>,
}

impl<T: Real> NoiseModel<T> {
    pub fn new(family: NoiseFamily, alpha: Vec<T>) -> Result<Self> {
        if let Some(k) = alpha.iter().position(|a| !(a.is_finite() && *a > T::zero())) {
            return Err(Error::InvalidModel(format!("alpha[{k}] = {} must be positive and finite", alpha[k])));
        }
        Ok(Self { family, alpha })
    }

    pub fn deterministic() -> Self {
        Self { family: NoiseFamily::Additive, alpha: Vec::new() }
    }

    pub fn additive(alpha: Vec<T>) -> Result<Self> {
        Self::new(NoiseFamily::Additive, alpha)
    }

    pub fn multiplicative_default(alpha: Vec<T>) -> Result<Self> {
        Self::new(NoiseFamily::MultiplicativeDefault, alpha)
    }

    pub fn family(&self) -> NoiseFamily {
        self.family
    }

    pub fn modes(&self) -> usize {
        self.alpha.len()
    }

    pub fn is_deterministic(&self) -> bool {
        self.alpha.is_empty()
    }

    pub fn alpha(&self) -> &[T] {
        &self.alpha
    }

    /// `D = Σ α_k²`.
    pub fn amplitude(&self) -> T {
        self.alpha.iter().map(|&a| a * a).sum()
    }

    pub fn bound_constant(&self) -> T {
        T::lit(self.family.bound_constant())
    }

    /// `g_k(x, ξ)` for the 1-based mode `k`.
    pub fn coefficient(&self, k: usize, x: T, xi: T) -> T {
        let alpha = self.alpha[k - 1];
        let kf = T::from_usize_lossy(k);
        match self.family {
            NoiseFamily::Additive => alpha,
            NoiseFamily::MultiplicativeDefault => alpha * (kf * x).cos() / kf.max(T::one()) * xi.tanh(),
            NoiseFamily::SinLinear => alpha * (kf * x).sin() * xi,
        }
    }

    /// `G²(x, ξ) = Σ_k g_k²`.
    pub fn g_squared(&self, x: T, xi: T) -> T {
        (1..=self.modes()).map(|k| self.coefficient(k, x, xi).powi(2)).sum()
    }
}

/// Generator of Brownian increments keyed by `(seed, step, mode)`.
///
/// A path built with [`WienerPath::coarsen`] sums consecutive fine
/// increments, so runs at `dt` and `r·dt` see the same Brownian motion.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct WienerPath {
    seed: u64,
    dt: f64,
    modes: usize,
    horizon: usize,
    substeps: usize,
}

impl WienerPath {
    pub fn new(seed: u64, dt: f64, modes: usize, horizon: usize) -> Result<Self> {
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::Config(format!("Wiener path time step {dt} must be positive")));
        }
        Ok(Self { seed, dt, modes, horizon, substeps: 1 })
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn modes(&self) -> usize {
        self.modes
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Same Brownian motion sampled every `factor` steps.
    pub fn coarsen(&self, factor: usize) -> Result<Self> {
        if factor == 0 || self.horizon % factor != 0 {
            return Err(Error::StepCount { ratio: self.horizon as f64 / factor as f64 });
        }
        Ok(Self {
            seed: self.seed,
            dt: self.dt * factor as f64,
            modes: self.modes,
            horizon: self.horizon / factor,
            substeps: self.substeps * factor,
        })
    }

    /// `true` if both paths derive from one fine Brownian motion.
    pub fn is_coupled_with(&self, other: &Self) -> bool {
        self.seed == other.seed
            && self.modes == other.modes
            && (self.dt / self.substeps as f64 - other.dt / other.substeps as f64).abs() <= 1e-12 * self.dt
    }

    /// `ΔB_k` for steps `step → step + 1`, one entry per mode.
    pub fn sample_increments(&self, step: usize) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.modes];
        self.fill_increments(step, &mut out)?;
        Ok(out)
    }

    pub fn fill_increments(&self, step: usize, out: &mut [f64]) -> Result<()> {
        if step >= self.horizon {
            return Err(Error::HorizonExceeded { step, horizon: self.horizon });
        }
        let scale = (self.dt / self.substeps as f64).sqrt();
        for (mode, slot) in out.iter_mut().enumerate().take(self.modes) {
            let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
            rng.set_stream(mode as u64);
            let first = (step * self.substeps) as u128;
            rng.set_word_pos(first * 4);
            let mut acc = 0.0;
            for _ in 0..self.substeps {
                acc += standard_normal(&mut rng);
            }
            *slot = acc * scale;
        }
        Ok(())
    }
}

/// Box–Muller from two consecutive 64-bit words.
pub(crate) fn standard_normal(rng: &mut ChaCha8Rng) -> f64 {
    const SCALE: f64 = 1.0 / (1u64 << 53) as f64;
    let u1 = ((rng.next_u64() >> 11) + 1) as f64 * SCALE;
    let u2 = (rng.next_u64() >> 11) as f64 * SCALE;
    (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos()
}

/// Euler–Maruyama noise contribution `Σ_k g_k(x, u(x)) ΔB_k`.
pub fn apply_noise<T: Real>(u: &Field<T>, model: &NoiseModel<T>, increments: &[T]) -> Result<Field<T>> {
    let mut out = Field::zeros(*u.grid());
    add_noise(u, model, increments, out.values_mut())?;
    Ok(out)
}

/// Accumulates the noise contribution into `target`.
pub(crate) fn add_noise<T: Real>(u: &Field<T>, model: &NoiseModel<T>, increments: &[T], target: &mut [T]) -> Result<()> {
    if increments.len() != model.modes() {
        return Err(Error::GridMismatch(format!(
            "{} increments for {} noise modes",
            increments.len(),
            model.modes()
        )));
    }
    let grid = u.grid();
    let h = grid.spacing::<T>();
    let n = grid.points_per_dim();
    for (k, &db) in increments.iter().enumerate() {
        if db == T::zero() {
            continue;
        }
        for (i, (t, &v)) in target.iter_mut().zip(u.values()).enumerate() {
            let x = h * T::from_usize_lossy(i % n);
            *t = *t + model.coefficient(k + 1, x, v) * db;
        }
    }
    Ok(())
}

/// Sampled maxima of the coefficient bounds for one mode.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeBound {
    pub mode: usize,
    pub max_value_at_zero: f64,
    pub max_dx: f64,
    pub max_dxi: f64,
    /// `max (|g(x,0)| + |∂_x g| + |∂_ξ g|) / (C α_k)`.
    pub ratio: f64,
    /// Worst `(x, ξ)` for `ratio`.
    pub worst: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub bound_constant: f64,
    pub modes: Vec<ModeBound>,
    /// `max G² / (2D(1 + ξ²))`.
    pub growth_ratio: f64,
    /// Offending `(k, x, ξ)`.
    pub violations: Vec<(usize, f64, f64)>,
    pub pass: bool,
}

const BOUND_TOLERANCE: f64 = 1e-6;

/// Checks the coefficient bounds by central finite differences on the
/// `x`-nodes times a uniform ξ-grid over `xi_range`.
pub fn verify_bounds(model: &NoiseModel<f64>, x_grid: &[f64], xi_range: (f64, f64), xi_samples: usize) -> Result<BoundReport> {
    let xi_samples = xi_samples.max(2);
    let xis: Vec<f64> = (0..xi_samples)
        .map(|i| xi_range.0 + (xi_range.1 - xi_range.0) * i as f64 / (xi_samples - 1) as f64)
        .collect();
    let c = model.bound_constant();
    let fd = 1e-5;
    let mut modes = Vec::with_capacity(model.modes());
    let mut violations = Vec::new();
    for k in 1..=model.modes() {
        let alpha = model.alpha()[k - 1];
        let g = |x: f64, xi: f64| model.coefficient(k, x, xi);
        let mut mb = ModeBound { mode: k, max_value_at_zero: 0.0, max_dx: 0.0, max_dxi: 0.0, ratio: 0.0, worst: (0.0, 0.0) };
        for &x in x_grid {
            let g0 = g(x, 0.0).abs();
            mb.max_value_at_zero = mb.max_value_at_zero.max(g0);
            for &xi in &xis {
                let dx = ((g(x + fd, xi) - g(x - fd, xi)) / (2.0 * fd)).abs();
                let dxi = ((g(x, xi + fd) - g(x, xi - fd)) / (2.0 * fd)).abs();
                mb.max_dx = mb.max_dx.max(dx);
                mb.max_dxi = mb.max_dxi.max(dxi);
                let r = (g0 + dx + dxi) / (c * alpha);
                if r > mb.ratio {
                    mb.ratio = r;
                    mb.worst = (x, xi);
                }
                if r > 1.0 + BOUND_TOLERANCE {
                    violations.push((k, x, xi));
                }
            }
        }
        modes.push(mb);
    }
    let d = model.amplitude();
    let mut growth_ratio: f64 = 0.0;
    if d > 0.0 {
        for &x in x_grid {
            for &xi in &xis {
                let r = model.g_squared(x, xi) / (2.0 * d * (1.0 + xi * xi));
                growth_ratio = growth_ratio.max(r);
                if r > 1.0 + BOUND_TOLERANCE {
                    violations.push((0, x, xi));
                }
            }
        }
    }
    let pass = violations.is_empty();
    let report = BoundReport { bound_constant: c, modes, growth_ratio, violations, pass };
    if pass {
        Ok(report)
    } else {
        let (mode, x, xi) = report.violations[0];
        Err(Error::BoundViolation { count: report.violations.len(), mode, x, xi, report: Box::new(report) })
    }
}
