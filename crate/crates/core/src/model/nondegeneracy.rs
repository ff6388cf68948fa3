//! The kinetic symbol `L(iu, in, ξ) = i(u + b(ξ)·n) + nᵀA(ξ)n` and a
//! brute-force estimate of the non-degeneracy exponents `(α, β)` in
//! `ω(J; δ) ≲ (δ / J^β)^α`.

use std::io::Write;

use num_complex::Complex;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DiffusionLaw, Localization, ModelSpec};
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Evaluates the symbol for a lattice frequency `n` (second entry ignored in 1-D).
///
/// The scalar flux acts along every axis, so `b(ξ)·n = b(ξ)(n₁ + n₂)`.
pub fn symbol_eval<T: Real>(spec: &ModelSpec<T>, u: T, n: [i64; 2], xi: T) -> Complex<T> {
    let sum = T::lit((n[0] + n[1]) as f64);
    let norm2 = T::lit((n[0] * n[0] + n[1] * n[1]) as f64);
    Complex::new(norm2 * spec.a(xi), u + spec.b(xi) * sum)
}

/// Sampling resolution of the brute-force sublevel-set measure.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaSampling {
    pub dim: usize,
    /// Spacing of the midpoint ξ-grid over `supp η`.
    pub xi_spacing: f64,
    /// Uniform u-samples over `[-U, U]`.
    pub u_samples: usize,
    /// Extra u-samples `u = -b(ξ*)·n` at this many ξ* in the support.
    pub star_samples: usize,
}

impl Default for OmegaSampling {
    fn default() -> Self {
        Self { dim: 1, xi_spacing: 1e-4, u_samples: 65, star_samples: 9 }
    }
}

/// Lattice points with `J/2 ≤ |n| ≤ 2J`.
pub(crate) fn frequency_shell(dim: usize, j: usize) -> Vec<[i64; 2]> {
    let lo = j as f64 / 2.0;
    let hi = 2.0 * j as f64;
    let r = hi.floor() as i64;
    let mut out = Vec::new();
    if dim == 1 {
        for n in -r..=r {
            let a = n.abs() as f64;
            if a >= lo && a <= hi {
                out.push([n, 0]);
            }
        }
    } else {
        for n1 in -r..=r {
            for n2 in -r..=r {
                let a = ((n1 * n1 + n2 * n2) as f64).sqrt();
                if a >= lo && a <= hi {
                    out.push([n1, n2]);
                }
            }
        }
    }
    out
}

fn xi_midpoints<T: Real>(lo: T, hi: T, spacing: f64) -> (Vec<T>, T) {
    let len = (hi - lo).to_f64_lossy();
    let cells = ((len / spacing).ceil() as usize).max(1);
    let width = (hi - lo) / T::from_usize_lossy(cells);
    let centers = (0..cells).map(|i| lo + width * (T::from_usize_lossy(i) + T::lit(0.5))).collect();
    (centers, width)
}

/// `ω^η_L(J; δ)`: supremum over sampled `u` and the shell `|n| ∼ J` of the
/// measure of `{ξ ∈ supp η : |L(iu, in, ξ)| ≤ δ}`.
pub fn omega_measure<T: Real>(
    spec: &ModelSpec<T>,
    localization: &Localization<T>,
    j: usize,
    delta: T,
    sampling: &OmegaSampling,
) -> Result<T> {
    let (lo, hi) = localization
        .support()
        .ok_or_else(|| Error::InvalidModel("sublevel measure needs a compactly supported localization".into()))?;
    if !(delta > T::zero()) {
        return Err(Error::InvalidModel(format!("delta = {delta} must be positive")));
    }
    let shell = if j == 0 { Vec::new() } else { frequency_shell(sampling.dim, j) };
    if shell.is_empty() {
        return Err(Error::EmptyFrequencyShell { lo: j as f64 / 2.0, hi: 2.0 * j as f64 });
    }
    let (centers, width) = xi_midpoints(lo, hi, sampling.xi_spacing);
    let b_vals: Vec<T> = centers.iter().map(|&x| spec.b(x)).collect();
    let a_vals: Vec<T> = centers.iter().map(|&x| spec.a(x)).collect();
    let max_b = b_vals.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    let u_range = T::lit(2.0 * (sampling.dim as f64).sqrt() * j as f64) * max_b;
    let stars: Vec<T> = (0..sampling.star_samples)
        .map(|i| lo + (hi - lo) * (T::from_usize_lossy(i) + T::lit(0.5)) / T::from_usize_lossy(sampling.star_samples))
        .collect();
    let delta2 = delta * delta;
    let mut best = T::zero();
    let mut bn = vec![T::zero(); centers.len()];
    let mut an = vec![T::zero(); centers.len()];
    for n in &shell {
        let sum = T::lit((n[0] + n[1]) as f64);
        let norm2 = T::lit((n[0] * n[0] + n[1] * n[1]) as f64);
        for i in 0..centers.len() {
            bn[i] = b_vals[i] * sum;
            an[i] = a_vals[i] * norm2;
        }
        let uniform = (0..sampling.u_samples).map(|i| {
            if sampling.u_samples == 1 {
                T::zero()
            } else {
                -u_range + (u_range + u_range) * T::from_usize_lossy(i) / T::from_usize_lossy(sampling.u_samples - 1)
            }
        });
        let moving = stars.iter().map(|&s| -spec.b(s) * sum);
        for u in uniform.chain(moving) {
            let count = bn
                .iter()
                .zip(&an)
                .filter(|(&bv, &av)| {
                    let im = u + bv;
                    av * av + im * im <= delta2
                })
                .count();
            best = best.max(T::from_usize_lossy(count) * width);
        }
    }
    Ok(best)
}

/// `sup_{|n|∼J, ξ ∈ supp η} |∂_ξ L| / ϑ(ξ)`, sampled on the ξ-grid.
///
/// The check is only as good as the grid; pathological custom callables
/// can hide spikes between samples.
pub fn symbol_xi_derivative_sup<T: Real>(
    spec: &ModelSpec<T>,
    localization: &Localization<T>,
    j: usize,
    sampling: &OmegaSampling,
) -> Result<T> {
    let (lo, hi) = localization
        .support()
        .ok_or_else(|| Error::InvalidModel("derivative bound needs a compactly supported localization".into()))?;
    let shell = frequency_shell(sampling.dim, j.max(1));
    let (centers, _) = xi_midpoints(lo, hi, sampling.xi_spacing.max(1e-3));
    let mut best = T::zero();
    for n in &shell {
        let sum = T::lit((n[0] + n[1]) as f64);
        let norm2 = T::lit((n[0] * n[0] + n[1] * n[1]) as f64);
        for &x in &centers {
            let d = Complex::new(norm2 * spec.a_prime(x), spec.b_prime(x) * sum).norm();
            best = best.max(d / localization.theta.eval(x));
        }
    }
    Ok(best)
}

/// Exponents `(α, β)` from the closed-form power laws.
pub fn closed_form_exponents<T: Real>(k: u32, m: Option<T>) -> Result<(T, T)> {
    if k < 2 {
        return Err(Error::InvalidModel(format!("flux exponent k = {k} < 2")));
    }
    match m {
        Some(m) if !(m > T::lit(2.0)) => Err(Error::InvalidModel(format!("diffusion exponent m = {m} must exceed 2"))),
        Some(m) => Ok(((m - T::one()).recip(), T::lit(2.0))),
        None => Ok((T::lit(1.0 / (k - 1) as f64), T::one())),
    }
}

/// Regularity predicted by the averaging argument for given `(α, β)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityPrediction<T> {
    /// `α²β / (6(1 + 2α))`, an open upper bound on the attainable `s`.
    pub s_bound: T,
    /// `α / (4 + α)`.
    pub theta: T,
    /// The `r` with `1/r = (1 - θ)/2 + θ`; admissible `r` lie strictly below.
    pub r_bound: T,
}

pub fn predicted_regularity<T: Real>(alpha: T, beta: T) -> RegularityPrediction<T> {
    let two = T::lit(2.0);
    let s_bound = alpha * alpha * beta / (T::lit(6.0) * (T::one() + two * alpha));
    let theta = alpha / (T::lit(4.0) + alpha);
    let r_bound = ((T::one() - theta) / two + theta).recip();
    RegularityPrediction { s_bound, theta, r_bound }
}

/// One cell of the `(J, δ)` table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmegaSample<T> {
    pub j: usize,
    pub delta: T,
    pub omega: T,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NondegeneracyFit<T> {
    /// Fitted `α`, capped at 1.
    pub alpha: T,
    pub raw_alpha: T,
    pub beta: T,
    /// Largest absolute residual of the log-log regression.
    pub fit_residual: T,
    /// 95% of the open bound `α²β/(6(1+2α))`.
    pub predicted_s: T,
    /// 95% of the exponent `r` at which `1/r = (1-θ)/2 + θ`.
    pub predicted_r: T,
}

/// JSON summary written next to the `(J, δ, ω)` table.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitSummary {
    pub alpha: f64,
    pub beta: f64,
    pub residual: f64,
    pub s_bound: f64,
    pub r_bound: f64,
}

impl<T: Real> NondegeneracyFit<T> {
    pub fn summary(&self) -> FitSummary {
        let p = predicted_regularity(self.alpha, self.beta);
        FitSummary {
            alpha: self.alpha.to_f64_lossy(),
            beta: self.beta.to_f64_lossy(),
            residual: self.fit_residual.to_f64_lossy(),
            s_bound: p.s_bound.to_f64_lossy(),
            r_bound: p.r_bound.to_f64_lossy(),
        }
    }
}

/// Least squares `log ω = α log δ - αβ log J + c` over a table.
pub fn fit_power_law<T: Real>(samples: &[OmegaSample<T>]) -> Result<NondegeneracyFit<T>> {
    if samples.len() < 3 {
        return Err(Error::DegenerateFit(format!("{} samples, need at least 3", samples.len())));
    }
    let mut rows = Vec::with_capacity(samples.len());
    for s in samples {
        if !(s.omega > T::zero()) || !(s.delta > T::zero()) || s.j == 0 {
            return Err(Error::DegenerateFit(format!("non-positive entry at J = {}, delta = {}", s.j, s.delta)));
        }
        rows.push(([s.delta.ln(), T::from_usize_lossy(s.j).ln(), T::one()], s.omega.ln()));
    }
    let mut ata = [[T::zero(); 3]; 3];
    let mut atb = [T::zero(); 3];
    for (x, y) in &rows {
        for r in 0..3 {
            for c in 0..3 {
                ata[r][c] = ata[r][c] + x[r] * x[c];
            }
            atb[r] = atb[r] + x[r] * *y;
        }
    }
    let coef = solve3(ata, atb).ok_or_else(|| Error::DegenerateFit("rank-deficient design (vary both J and delta)".into()))?;
    let residual = rows
        .iter()
        .map(|(x, y)| (x[0] * coef[0] + x[1] * coef[1] + x[2] * coef[2] - *y).abs())
        .fold(T::zero(), T::max);
    let raw_alpha = coef[0];
    if !(raw_alpha > T::zero()) {
        return Err(Error::DegenerateFit(format!("fitted alpha = {raw_alpha} is not positive")));
    }
    let beta = -coef[1] / raw_alpha;
    let alpha = raw_alpha.min(T::one());
    let p = predicted_regularity(alpha, beta);
    let scale = T::lit(0.95);
    Ok(NondegeneracyFit {
        alpha,
        raw_alpha,
        beta,
        fit_residual: residual,
        predicted_s: p.s_bound * scale,
        predicted_r: p.r_bound * scale,
    })
}

fn solve3<T: Real>(mut a: [[T; 3]; 3], mut b: [T; 3]) -> Option<[T; 3]> {
    let scale = a.iter().flatten().fold(T::zero(), |m, v| m.max(v.abs()));
    if scale == T::zero() {
        return None;
    }
    for col in 0..3 {
        let pivot = (col..3).max_by(|&i, &j| a[i][col].abs().partial_cmp(&a[j][col].abs()).unwrap())?;
        if a[pivot][col].abs() <= scale * T::lit(1e-12) {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..3 {
            let f = a[row][col] / a[col][col];
            for c in col..3 {
                a[row][c] = a[row][c] - f * a[col][c];
            }
            b[row] = b[row] - f * b[col];
        }
    }
    let mut x = [T::zero(); 3];
    for row in (0..3).rev() {
        let mut acc = b[row];
        for c in row + 1..3 {
            acc = acc - a[row][c] * x[c];
        }
        x[row] = acc / a[row][row];
    }
    Some(x)
}

/// Measures `ω` on the full `J × δ` grid and fits `(α, β)`.
pub fn fit_exponents<T: Real>(
    spec: &ModelSpec<T>,
    localization: &Localization<T>,
    j_list: &[usize],
    delta_list: &[T],
    sampling: &OmegaSampling,
) -> Result<(NondegeneracyFit<T>, Vec<OmegaSample<T>>)> {
    if j_list.len() < 3 || delta_list.len() < 3 {
        return Err(Error::DegenerateFit("need at least three J and three delta values".into()));
    }
    let cells: Vec<(usize, T)> = j_list.iter().flat_map(|&j| delta_list.iter().map(move |&d| (j, d))).collect();
    let samples = cells
        .par_iter()
        .map(|&(j, delta)| omega_measure(spec, localization, j, delta, sampling).map(|omega| OmegaSample { j, delta, omega }))
        .collect::<Result<Vec<_>>>()?;
    let fit = fit_power_law(&samples)?;
    Ok((fit, samples))
}

/// CSV table `J,delta,omega`.
pub fn write_fit_csv<T: Real, W: Write>(samples: &[OmegaSample<T>], mut w: W) -> Result<()> {
    writeln!(w, "J,delta,omega")?;
    for s in samples {
        writeln!(w, "{},{:.16e},{:.16e}", s.j, s.delta.to_f64_lossy(), s.omega.to_f64_lossy())?;
    }
    Ok(())
}

impl<T: Real> ModelSpec<T> {
    /// `(α, β)` from the power laws, if both laws are closed-form.
    pub fn closed_form_exponents(&self) -> Result<(T, T)> {
        let k = match self.flux {
            super::FluxLaw::Power { exponent } => exponent,
            _ => return Err(Error::InvalidModel("closed-form exponents need a power-law flux".into())),
        };
        let m = match self.diffusion {
            DiffusionLaw::Off => None,
            DiffusionLaw::Power { exponent } => Some(exponent),
            DiffusionLaw::Custom(_) => return Err(Error::InvalidModel("custom diffusion has no closed form".into())),
        };
        closed_form_exponents(k, m)
    }
}
