//! Nonlinearities of the equation, their regularized and truncated versions,
//! the kinetic symbol and the non-degeneracy analyzer.
//!
//! The flux is `B(ξ) = ξ^k / k` with `b = B′ = ξ^{k-1}`, the diffusion is
//! `A(ξ) = |ξ|^{m-1}` with square root `σ = |ξ|^{(m-1)/2}`. In two dimensions
//! the same scalar flux acts along both axes and `A` is `A(ξ)·Id`.
//! Either law can be switched off or replaced by a user callable.

mod localization;
mod nondegeneracy;

pub use localization::{Eta, Localization, ThetaWeight};
pub use nondegeneracy::{
    closed_form_exponents, fit_exponents, fit_power_law, omega_measure, predicted_regularity, symbol_eval,
    symbol_xi_derivative_sup, write_fit_csv, FitSummary, NondegeneracyFit, OmegaSample, OmegaSampling,
    RegularityPrediction,
};

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::quad;
use crate::scalar::Real;

/// A user-supplied scalar nonlinearity.
pub type ScalarFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

#[derive(Clone)]
pub enum FluxLaw<T> {
    Off,
    /// `B(ξ) = ξ^k / k`, `k ≥ 2`.
    Power { exponent: u32 },
    /// `b = B′` given directly; `B` and the upwind split are integrated numerically.
    Custom(ScalarFn<T>),
}

#[derive(Clone)]
pub enum DiffusionLaw<T> {
    Off,
    /// `A(ξ) = |ξ|^{m-1}`, `m > 2`.
    Power { exponent: T },
    /// `σ` given directly; `A = σ²`.
    Custom(ScalarFn<T>),
}

impl<T: fmt::Debug> fmt::Debug for FluxLaw<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FluxLaw::Off => write!(f, "Off"),
            FluxLaw::Power { exponent } => write!(f, "Power {{ exponent: {exponent} }}"),
            FluxLaw::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

impl<T: fmt::Debug> fmt::Debug for DiffusionLaw<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            DiffusionLaw::Off => write!(f, "Off"),
            DiffusionLaw::Power { exponent } => write!(f, "Power {{ exponent: {exponent:?} }}"),
            DiffusionLaw::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// Closed-form (or user supplied) nonlinearities plus the approximation
/// parameters: viscosity `κ` (`A → (√κ + σ)²`) and truncation `τ` (coefficients
/// frozen outside `|ξ| ≤ 1/τ`; `τ = 0` disables truncation).
#[derive(Clone, Debug)]
pub struct ModelSpec<T> {
    pub flux: FluxLaw<T>,
    pub diffusion: DiffusionLaw<T>,
    pub viscosity: T,
    pub truncation: T,
}

const CUSTOM_PANELS: usize = 64;

impl<T: Real> ModelSpec<T> {
    /// Linear transport-free, diffusion-free model (`b = 0`, `A = 0`).
    pub fn inert() -> Self {
        Self { flux: FluxLaw::Off, diffusion: DiffusionLaw::Off, viscosity: T::zero(), truncation: T::zero() }
    }

    /// Burgers-type flux `ξ^k / k` without diffusion.
    pub fn hyperbolic(k: u32) -> Self {
        Self { flux: FluxLaw::Power { exponent: k }, ..Self::inert() }
    }

    /// Convection with porous-media diffusion `A = |ξ|^{m-1}`.
    pub fn porous_medium(k: u32, m: T) -> Self {
        Self { flux: FluxLaw::Power { exponent: k }, diffusion: DiffusionLaw::Power { exponent: m }, ..Self::inert() }
    }

    /// Pure heat equation `A ≡ κ`.
    pub fn heat(kappa: T) -> Self {
        Self { viscosity: kappa, ..Self::inert() }
    }

    pub fn with_flux(mut self, flux: FluxLaw<T>) -> Self {
        self.flux = flux;
        self
    }

    pub fn with_diffusion(mut self, diffusion: DiffusionLaw<T>) -> Self {
        self.diffusion = diffusion;
        self
    }

    pub fn with_viscosity(mut self, kappa: T) -> Self {
        self.viscosity = kappa;
        self
    }

    pub fn with_truncation(mut self, tau: T) -> Self {
        self.truncation = tau;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let FluxLaw::Power { exponent } = self.flux {
            if exponent < 2 {
                return Err(Error::InvalidModel(format!("flux exponent k = {exponent} < 2")));
            }
        }
        if let DiffusionLaw::Power { exponent } = self.diffusion {
            if !(exponent > T::lit(2.0)) || !exponent.is_finite() {
                return Err(Error::InvalidModel(format!("diffusion exponent m = {exponent} must exceed 2")));
            }
        }
        if !(self.viscosity >= T::zero()) || !self.viscosity.is_finite() {
            return Err(Error::InvalidModel(format!("viscosity {} must be >= 0", self.viscosity)));
        }
        if !(self.truncation >= T::zero()) || !self.truncation.is_finite() {
            return Err(Error::InvalidModel(format!("truncation {} must be >= 0", self.truncation)));
        }
        Ok(())
    }

    pub fn has_flux(&self) -> bool {
        !matches!(self.flux, FluxLaw::Off)
    }

    /// True when `A^{κ,τ}` is not identically zero.
    pub fn has_diffusion(&self) -> bool {
        self.viscosity > T::zero() || !matches!(self.diffusion, DiffusionLaw::Off)
    }

    /// `1/τ`, or `+∞` without truncation.
    pub fn truncation_radius(&self) -> T {
        if self.truncation > T::zero() {
            self.truncation.recip()
        } else {
            T::infinity()
        }
    }

    fn clamp(&self, xi: T) -> T {
        let r = self.truncation_radius();
        if xi.abs() <= r {
            xi
        } else {
            xi.signum() * r
        }
    }

    // ---- flux --------------------------------------------------------

    /// `b(ξ) = B′(ξ)`.
    pub fn b(&self, xi: T) -> T {
        match &self.flux {
            FluxLaw::Off => T::zero(),
            FluxLaw::Power { exponent } => xi.powi(*exponent as i32 - 1),
            FluxLaw::Custom(f) => f(xi),
        }
    }

    /// `b′(ξ)`.
    pub fn b_prime(&self, xi: T) -> T {
        match &self.flux {
            FluxLaw::Off => T::zero(),
            FluxLaw::Power { exponent } => {
                let k = *exponent as i32;
                T::lit((k - 1) as f64) * xi.powi(k - 2)
            }
            FluxLaw::Custom(f) => {
                let h = T::lit(1e-6) * (T::one() + xi.abs());
                (f(xi + h) - f(xi - h)) / (h + h)
            }
        }
    }

    /// `B(ξ)` with `B(0) = 0`.
    pub fn flux(&self, xi: T) -> T {
        match &self.flux {
            FluxLaw::Off => T::zero(),
            FluxLaw::Power { exponent } => xi.powi(*exponent as i32) / T::lit(*exponent as f64),
            FluxLaw::Custom(f) => quad::integrate(|s| f(s), T::zero(), xi, CUSTOM_PANELS),
        }
    }

    /// `(b^τ)′(ξ)`: `b′` frozen at `sgn(ξ)/τ` outside the truncation radius.
    pub fn truncated_flux_derivative(&self, xi: T) -> T {
        self.b_prime(self.clamp(xi))
    }

    /// `b^τ(ξ)`: equals `b` inside `|ξ| ≤ 1/τ`, continued linearly outside.
    pub fn b_tau(&self, xi: T) -> T {
        let c = self.clamp(xi);
        if c == xi {
            self.b(xi)
        } else {
            self.b(c) + self.b_prime(c) * (xi - c)
        }
    }

    /// `B^τ(ξ) = ∫_0^ξ b^τ`.
    pub fn flux_tau(&self, xi: T) -> T {
        let c = self.clamp(xi);
        if c == xi {
            self.flux(xi)
        } else {
            let d = xi - c;
            self.flux(c) + self.b(c) * d + T::lit(0.5) * self.b_prime(c) * d * d
        }
    }

    /// Upwind split `(∫_0^ξ (b^τ)^+, ∫_0^ξ (b^τ)^-)` used by the Engquist-Osher flux.
    pub fn flux_tau_split(&self, xi: T) -> (T, T) {
        match &self.flux {
            FluxLaw::Off => (T::zero(), T::zero()),
            FluxLaw::Power { exponent } => {
                if exponent % 2 == 0 {
                    // b^τ has the sign of ξ
                    (self.flux_tau(xi.max(T::zero())), self.flux_tau(xi.min(T::zero())))
                } else {
                    // b^τ ≥ 0 everywhere
                    (self.flux_tau(xi), T::zero())
                }
            }
            FluxLaw::Custom(_) => {
                let plus = quad::integrate(|s| self.b_tau(s).max(T::zero()), T::zero(), xi, CUSTOM_PANELS);
                let minus = quad::integrate(|s| self.b_tau(s).min(T::zero()), T::zero(), xi, CUSTOM_PANELS);
                (plus, minus)
            }
        }
    }

    /// `sup |b^τ|` over `[lo, hi]`.
    pub fn max_abs_b_tau(&self, lo: T, hi: T) -> T {
        self.sup_over(lo, hi, |xi| self.b_tau(xi).abs())
    }

    fn sup_over(&self, lo: T, hi: T, f: impl Fn(T) -> T) -> T {
        let mut m = f(lo).max(f(hi));
        if lo < T::zero() && hi > T::zero() {
            m = m.max(f(T::zero()));
        }
        let custom = matches!(self.flux, FluxLaw::Custom(_)) || matches!(self.diffusion, DiffusionLaw::Custom(_));
        if custom && hi > lo {
            let samples = 256;
            for i in 1..samples {
                let xi = lo + (hi - lo) * T::from_usize_lossy(i) / T::from_usize_lossy(samples);
                m = m.max(f(xi));
            }
        }
        m
    }

    // ---- diffusion ---------------------------------------------------

    /// `σ(ξ) = A(ξ)^{1/2}` of the unregularized model.
    pub fn sigma(&self, xi: T) -> T {
        match &self.diffusion {
            DiffusionLaw::Off => T::zero(),
            DiffusionLaw::Power { exponent } => xi.abs().powf((*exponent - T::one()) * T::lit(0.5)),
            DiffusionLaw::Custom(f) => f(xi),
        }
    }

    /// Scalar diffusion `A(ξ)` of the unregularized model.
    pub fn a(&self, xi: T) -> T {
        match &self.diffusion {
            DiffusionLaw::Power { exponent } => xi.abs().powf(*exponent - T::one()),
            _ => {
                let s = self.sigma(xi);
                s * s
            }
        }
    }

    /// `A′(ξ)` (central difference for custom laws).
    pub fn a_prime(&self, xi: T) -> T {
        match &self.diffusion {
            DiffusionLaw::Off => T::zero(),
            DiffusionLaw::Power { exponent } => {
                let e = *exponent - T::one();
                e * xi.abs().powf(e - T::one()) * xi.signum()
            }
            DiffusionLaw::Custom(_) => {
                let h = T::lit(1e-6) * (T::one() + xi.abs());
                (self.a(xi + h) - self.a(xi - h)) / (h + h)
            }
        }
    }

    /// `σ^{κ,τ}(ξ) = √κ + σ(ξ)` for `|ξ| ≤ 1/τ`, `√κ + σ(sgn(ξ)/τ)` outside.
    pub fn regularized_sigma(&self, xi: T) -> T {
        self.viscosity.sqrt() + self.sigma(self.clamp(xi))
    }

    /// `A^{κ,τ} = (σ^{κ,τ})²`.
    pub fn regularized_a(&self, xi: T) -> T {
        let s = self.regularized_sigma(xi);
        s * s
    }

    /// `sup A^{κ,τ}` over `[lo, hi]`.
    pub fn max_regularized_a(&self, lo: T, hi: T) -> T {
        self.sup_over(lo, hi, |xi| self.regularized_a(xi))
    }

    /// `Φ(ξ) = ∫_0^ξ A^{κ,τ}`; the diffusion term is `ΔΦ(u)`.
    pub fn diffusion_potential(&self, xi: T) -> T {
        let c = self.clamp(xi);
        let inner = |x: T| -> T {
            match &self.diffusion {
                DiffusionLaw::Off => self.viscosity * x,
                DiffusionLaw::Power { exponent } => {
                    let q = (*exponent - T::one()) * T::lit(0.5);
                    let ax = x.abs();
                    let kappa = self.viscosity;
                    let two = T::lit(2.0);
                    x.signum()
                        * (kappa * ax
                            + two * kappa.sqrt() * ax.powf(q + T::one()) / (q + T::one())
                            + ax.powf(two * q + T::one()) / (two * q + T::one()))
                }
                DiffusionLaw::Custom(_) => {
                    quad::integrate(|s| self.regularized_a(s), T::zero(), x, CUSTOM_PANELS)
                }
            }
        };
        if c == xi {
            inner(xi)
        } else {
            inner(c) + self.regularized_a(c) * (xi - c)
        }
    }

    /// `∫_0^ξ σ^{κ,τ}`, whose gradient carries the parabolic dissipation.
    pub fn sigma_primitive(&self, xi: T) -> T {
        let c = self.clamp(xi);
        let inner = |x: T| -> T {
            match &self.diffusion {
                DiffusionLaw::Off => self.viscosity.sqrt() * x,
                DiffusionLaw::Power { exponent } => {
                    let q = (*exponent - T::one()) * T::lit(0.5);
                    let ax = x.abs();
                    x.signum() * (self.viscosity.sqrt() * ax + ax.powf(q + T::one()) / (q + T::one()))
                }
                DiffusionLaw::Custom(_) => {
                    quad::integrate(|s| self.regularized_sigma(s), T::zero(), x, CUSTOM_PANELS)
                }
            }
        };
        if c == xi {
            inner(xi)
        } else {
            inner(c) + self.regularized_sigma(c) * (xi - c)
        }
    }
}

/// Free-function form of [`ModelSpec::truncated_flux_derivative`] with an explicit `τ`.
pub fn truncated_flux_derivative<T: Real>(spec: &ModelSpec<T>, tau: T, xi: T) -> T {
    spec.clone().with_truncation(tau).truncated_flux_derivative(xi)
}

/// Free-function form of [`ModelSpec::regularized_sigma`] with explicit `κ, τ`.
pub fn regularized_sigma<T: Real>(spec: &ModelSpec<T>, kappa: T, tau: T, xi: T) -> T {
    spec.clone().with_viscosity(kappa).with_truncation(tau).regularized_sigma(xi)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn validation() {
        assert!(ModelSpec::<f64>::hyperbolic(1).validate().is_err());
        assert!(ModelSpec::porous_medium(2, 2.0f64).validate().is_err());
        assert!(ModelSpec::porous_medium(2, 3.0f64).validate().is_ok());
        assert!(ModelSpec::<f64>::hyperbolic(2).with_viscosity(-1.0).validate().is_err());
        assert!(ModelSpec::<f64>::hyperbolic(2).with_truncation(f64::NAN).validate().is_err());
    }

    #[test]
    fn regularized_sigma_examples() {
        let m = ModelSpec::porous_medium(2, 3.0f64);
        assert_eq!(regularized_sigma(&m, 0.0, 0.0, 2.0), 2.0);
        // clamp at 1/τ = 2: 0.2 + σ(2)
        assert!((regularized_sigma(&m, 0.04, 0.5, 4.0) - 2.2).abs() < 1e-12);
        assert!((regularized_sigma(&m, 0.04, 0.5, -4.0) - 2.2).abs() < 1e-12);
        // seam continuity at ξ = 1/τ
        let at = regularized_sigma(&m, 0.04, 0.5, 2.0);
        let above = regularized_sigma(&m, 0.04, 0.5, 2.0 + 1e-12);
        let below = regularized_sigma(&m, 0.04, 0.5, 2.0 - 1e-12);
        assert!((at - above).abs() < 1e-10 && (at - below).abs() < 1e-10);
    }

    #[test]
    fn truncated_flux_derivative_examples() {
        let m = ModelSpec::<f64>::hyperbolic(3);
        assert_eq!(truncated_flux_derivative(&m, 0.0, 10.0), 20.0);
        assert_eq!(truncated_flux_derivative(&m, 0.25, 10.0), 8.0);
        for k in [2u32, 3, 4, 5] {
            let m = ModelSpec::<f64>::hyperbolic(k).with_truncation(0.25);
            for xi in [0.5, 3.0, 7.0, 100.0] {
                let clamped = if xi > 4.0 { 4.0 } else { xi };
                assert_eq!(m.truncated_flux_derivative(-xi), m.b_prime(-clamped));
            }
        }
    }

    /// `∫_0^ξ f`, split at the kinks `±r` of the truncated laws.
    fn split_integral(f: impl Fn(f64) -> f64, xi: f64, r: f64) -> f64 {
        let mut nodes = vec![0.0];
        for k in [-r, r] {
            if k.is_finite() && k * xi > 0.0 && k.abs() < xi.abs() {
                nodes.push(k);
            }
        }
        nodes.push(xi);
        nodes.windows(2).map(|w| quad::integrate(&f, w[0], w[1], 100)).sum()
    }

    #[test]
    fn truncated_flux_is_primitive_of_truncated_b_with_quadratic_growth() {
        for k in [2u32, 3, 4] {
            let m = ModelSpec::<f64>::hyperbolic(k).with_truncation(0.5);
            for &xi in &[-7.0, -2.5, -0.3, 0.0, 1.7, 2.0, 6.0] {
                let q = split_integral(|s| m.b_tau(s), xi, m.truncation_radius());
                assert!((q - m.flux_tau(xi)).abs() < 1e-9, "k={k}, xi={xi}");
                let (p, n) = m.flux_tau_split(xi);
                assert!((p + n - m.flux_tau(xi)).abs() < 1e-12);
                assert!(p * xi >= 0.0 && n * xi <= 0.0);
            }
            // sub-quadratic growth: |B^τ(ξ)| ≤ C (1 + ξ²)
            let c = (m.flux_tau(1e3).abs() / (1.0 + 1e6)).max(m.flux_tau(-1e3).abs() / (1.0 + 1e6));
            let c2 = (m.flux_tau(1e6).abs() / (1.0 + 1e12)).max(m.flux_tau(-1e6).abs() / (1.0 + 1e12));
            assert!(c2 <= c * 1.01);
        }
    }

    #[test]
    fn potential_and_sigma_primitive_match_quadrature() {
        let specs = [
            ModelSpec::porous_medium(2, 3.0f64).with_viscosity(0.1).with_truncation(0.4),
            ModelSpec::porous_medium(2, 4.5f64).with_viscosity(0.0),
            ModelSpec::heat(0.7),
        ];
        for m in &specs {
            for &xi in &[-4.0, -1.3, 0.0, 0.7, 2.5, 3.9] {
                let r = m.truncation_radius();
                let phi = split_integral(|s| m.regularized_a(s), xi, r);
                assert!((phi - m.diffusion_potential(xi)).abs() < 1e-8, "{m:?} {xi}");
                let sig = split_integral(|s| m.regularized_sigma(s), xi, r);
                assert!((sig - m.sigma_primitive(xi)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn custom_laws() {
        let m = ModelSpec::<f64>::inert()
            .with_flux(FluxLaw::Custom(Arc::new(|x: f64| x.sin())))
            .with_diffusion(DiffusionLaw::Custom(Arc::new(|x: f64| x.abs().sqrt())));
        assert!((m.flux(1.0) - (1.0 - 1f64.cos())).abs() < 1e-10);
        assert!((m.b_prime(0.3) - 0.3f64.cos()).abs() < 1e-8);
        // oriented integrals over [0, -4]: sin is positive only on [-4, -π]
        let (p, n) = m.flux_tau_split(-4.0);
        assert!(p < 0.0 && n > 0.0);
        assert!((p + n - m.flux(-4.0)).abs() < 1e-3);
        assert!((m.a(2.0) - 2.0).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn sigma_squares_to_a(m in 2.05f64..6.0, xi in -5.0f64..5.0) {
            let spec = ModelSpec::porous_medium(2, m);
            let s = spec.sigma(xi);
            prop_assert!((s * s - spec.a(xi)).abs() <= 1e-12 * (1.0 + spec.a(xi)));
        }

        #[test]
        fn regularized_sigma_floor(kappa in 0.0f64..2.0, tau in 0.0f64..2.0, xi in -20.0f64..20.0) {
            let spec = ModelSpec::porous_medium(2, 3.0).with_viscosity(kappa).with_truncation(tau);
            let s = spec.regularized_sigma(xi);
            prop_assert!(s >= kappa.sqrt());
            if tau == 0.0 || xi.abs() <= 1.0 / tau {
                prop_assert!((s - (kappa.sqrt() + spec.sigma(xi))).abs() <= 1e-12 * (1.0 + s));
            }
        }

        #[test]
        fn sigma_locally_lipschitz(m in 3.0f64..5.0, x in -3.0f64..3.0, y in -3.0f64..3.0) {
            // |σ′| = ((m-1)/2)|ξ|^{(m-3)/2} is maximal at |ξ| = R for m ≥ 3
            let spec = ModelSpec::porous_medium(2, m);
            let r: f64 = 3.0;
            let lip = (m - 1.0) / 2.0 * r.powf((m - 3.0) / 2.0);
            prop_assert!((spec.sigma(x) - spec.sigma(y)).abs() <= lip * (x - y).abs() + 1e-12);
        }
    }
}
