use crate::quad;
use crate::scalar::Real;

/// The localization `η` in velocity space.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Eta<T> {
    /// `η ≡ 1`.
    Identity,
    /// Indicator of `[min, max]`; used where only the support matters.
    Window { min: T, max: T },
    /// `(1 - ((ξ - c)/r)²)³` clamped at zero: C², compactly supported.
    Bump { center: T, radius: T },
}

/// The weight `ϑ`: `1 + |ξ|^p` for a given order, or `ϑ ≡ 1`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ThetaWeight<T> {
    pub order: Option<T>,
}

impl<T: Real> ThetaWeight<T> {
    pub fn unit() -> Self {
        Self { order: None }
    }

    pub fn polynomial(order: T) -> Self {
        Self { order: Some(order) }
    }

    pub fn eval(&self, xi: T) -> T {
        match self.order {
            None => T::one(),
            Some(p) => T::one() + xi.abs().powf(p),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Localization<T> {
    pub eta: Eta<T>,
    pub theta: ThetaWeight<T>,
}

impl<T: Real> Localization<T> {
    pub fn identity() -> Self {
        Self { eta: Eta::Identity, theta: ThetaWeight::unit() }
    }

    pub fn window(min: T, max: T) -> Self {
        Self { eta: Eta::Window { min, max }, theta: ThetaWeight::unit() }
    }

    pub fn bump(center: T, radius: T) -> Self {
        Self { eta: Eta::Bump { center, radius }, theta: ThetaWeight::unit() }
    }

    pub fn with_theta(mut self, theta: ThetaWeight<T>) -> Self {
        self.theta = theta;
        self
    }

    /// Compact support of `η`, if any.
    pub fn support(&self) -> Option<(T, T)> {
        match self.eta {
            Eta::Identity => None,
            Eta::Window { min, max } => Some((min, max)),
            Eta::Bump { center, radius } => Some((center - radius, center + radius)),
        }
    }

    pub fn eta(&self, xi: T) -> T {
        match self.eta {
            Eta::Identity => T::one(),
            Eta::Window { min, max } => {
                if xi >= min && xi <= max {
                    T::one()
                } else {
                    T::zero()
                }
            }
            Eta::Bump { center, radius } => {
                let z = (xi - center) / radius;
                let w = (T::one() - z * z).max(T::zero());
                w * w * w
            }
        }
    }

    /// `η′`; the window is treated as locally constant.
    pub fn eta_prime(&self, xi: T) -> T {
        match self.eta {
            Eta::Identity | Eta::Window { .. } => T::zero(),
            Eta::Bump { center, radius } => {
                let z = (xi - center) / radius;
                if z.abs() >= T::one() {
                    return T::zero();
                }
                let w = T::one() - z * z;
                T::lit(-6.0) * z * w * w / radius
            }
        }
    }

    /// `η̄(u) = ∫_0^u η`.
    pub fn eta_bar(&self, u: T) -> T {
        match self.eta {
            Eta::Identity => u,
            Eta::Window { min, max } => u.max(min).min(max) - T::zero().max(min).min(max),
            Eta::Bump { center, radius } => {
                // antiderivative of (1 - z²)³ = 1 - 3z² + 3z⁴ - z⁶
                let prim = |xi: T| -> T {
                    let z = ((xi - center) / radius).max(-T::one()).min(T::one());
                    let z2 = z * z;
                    radius * z * (T::one() - z2 + T::lit(0.6) * z2 * z2 - z2 * z2 * z2 / T::lit(7.0))
                };
                prim(u) - prim(T::zero())
            }
        }
    }

    /// `Θ_η(ξ) = ∫_0^ξ (s² + 1) ϑ²(s) (η(s) + |η′(s)|) ds`.
    pub fn theta_eta(&self, xi: T) -> T {
        let integrand = |s: T| {
            let w = self.theta.eval(s);
            (s * s + T::one()) * w * w * (self.eta(s) + self.eta_prime(s).abs())
        };
        quad::integrate(integrand, T::zero(), xi, 32)
    }

    /// `ϑ (η + |η′|)`, the weight against which the kinetic measure enters the regularity bound.
    pub fn measure_weight(&self, xi: T) -> T {
        self.theta.eval(xi) * (self.eta(xi) + self.eta_prime(xi).abs())
    }
}
