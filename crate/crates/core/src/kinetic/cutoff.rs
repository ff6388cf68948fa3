use serde::{Deserialize, Serialize};

use crate::field::Field;
use crate::scalar::Real;

/// Cutoffs and mollifiers used by the kinetic estimates.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "parameter", rename_all = "kebab-case")]
pub enum CutoffFamily {
    /// `K(ξ / 2^ℓ)`: 1 on `|ξ| ≤ 2^ℓ`, 0 on `|ξ| ≥ 2^{ℓ+1}`, quintic in between.
    KEll(i32),
    /// `1_{[-k, k]}`.
    ThetaK(f64),
    /// `Θ_k` with `Θ_k″ = θ_k`, `Θ_k(0) = Θ_k′(0) = 0`.
    BigThetaK(f64),
    /// `ψ(ξ/δ)/δ` with `ψ(z) = 35/32 (1 - z²)³` on `[-1, 1]`.
    PsiDelta(f64),
    /// `ρ(x/ε)/ε` with `ρ(z) = 15/16 (1 - z²)²` on `[-1, 1]`.
    RhoEps(f64),
}

fn smoothstep(t: f64) -> f64 {
    let t = t.clamp(0.0, 1.0);
    t * t * t * (10.0 - 15.0 * t + 6.0 * t * t)
}

impl CutoffFamily {
    pub fn eval(&self, xi: f64) -> f64 {
        match *self {
            CutoffFamily::KEll(ell) => 1.0 - smoothstep(xi.abs() / 2f64.powi(ell) - 1.0),
            CutoffFamily::ThetaK(k) => f64::from(u8::from(xi.abs() <= k)),
            CutoffFamily::BigThetaK(k) => {
                let a = xi.abs();
                if a <= k {
                    0.5 * xi * xi
                } else {
                    k * a - 0.5 * k * k
                }
            }
            CutoffFamily::PsiDelta(d) => {
                let z = xi / d;
                if z.abs() < 1.0 {
                    35.0 / 32.0 * (1.0 - z * z).powi(3) / d
                } else {
                    0.0
                }
            }
            CutoffFamily::RhoEps(e) => {
                let z = xi / e;
                if z.abs() < 1.0 {
                    15.0 / 16.0 * (1.0 - z * z).powi(2) / e
                } else {
                    0.0
                }
            }
        }
    }

    /// Closed-form derivative.
    pub fn derivative(&self, xi: f64) -> f64 {
        match *self {
            CutoffFamily::KEll(ell) => {
                let s = 2f64.powi(ell);
                let t = xi.abs() / s - 1.0;
                if !(0.0..=1.0).contains(&t) {
                    return 0.0;
                }
                -30.0 * t * t * (1.0 - t) * (1.0 - t) / s * xi.signum()
            }
            CutoffFamily::ThetaK(_) => 0.0,
            CutoffFamily::BigThetaK(k) => xi.clamp(-k, k),
            CutoffFamily::PsiDelta(d) => {
                let z = xi / d;
                if z.abs() < 1.0 {
                    -35.0 / 32.0 * 6.0 * z * (1.0 - z * z).powi(2) / (d * d)
                } else {
                    0.0
                }
            }
            CutoffFamily::RhoEps(e) => {
                let z = xi / e;
                if z.abs() < 1.0 {
                    -15.0 / 16.0 * 4.0 * z * (1.0 - z * z) / (e * e)
                } else {
                    0.0
                }
            }
        }
    }
}

/// Dense polynomial `Σ c_i ξ^i`.
#[derive(Clone, Debug, PartialEq)]
pub struct Poly(pub Vec<f64>);

impl Poly {
    pub fn eval(&self, x: f64) -> f64 {
        self.0.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn mul(&self, other: &Poly) -> Poly {
        if self.0.is_empty() || other.0.is_empty() {
            return Poly(Vec::new());
        }
        let mut out = vec![0.0; self.0.len() + other.0.len() - 1];
        for (i, a) in self.0.iter().enumerate() {
            for (j, b) in other.0.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Poly(out)
    }

    /// Antiderivative vanishing at 0.
    pub fn antiderivative(&self) -> Poly {
        let mut out = vec![0.0];
        out.extend(self.0.iter().enumerate().map(|(i, c)| c / (i + 1) as f64));
        Poly(out)
    }
}

/// `max_x |D_h ∫_0^u φ₁φ₂σ - φ₁(u) D_h ∫_0^u φ₂σ|` with the central difference
/// `D_h` along `axis`, for polynomial `φ₁` and `φ₂σ`.
pub fn chain_rule_defect<T: Real>(u: &Field<T>, phi1: &Poly, phi2_sigma: &Poly, axis: usize) -> f64 {
    let outer = phi1.mul(phi2_sigma).antiderivative();
    let inner = phi2_sigma.antiderivative();
    let grid = u.grid();
    let h = grid.spacing::<f64>();
    let v: Vec<f64> = u.values().iter().map(|x| x.to_f64_lossy()).collect();
    (0..v.len())
        .map(|i| {
            let r = v[grid.neighbor(i, axis, 1)];
            let l = v[grid.neighbor(i, axis, -1)];
            let lhs = (outer.eval(r) - outer.eval(l)) / (2.0 * h);
            let rhs = phi1.eval(v[i]) * (inner.eval(r) - inner.eval(l)) / (2.0 * h);
            (lhs - rhs).abs()
        })
        .fold(0.0, f64::max)
}
