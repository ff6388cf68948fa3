use crate::field::{forward_transform, inverse_transform, Field};
use crate::scalar::Real;

/// `u₀^κ`: Fejér low-pass at cutoff `⌈4/κ⌉` per axis, then clamp to `[-1/κ, 1/κ]`.
///
/// The Fejér kernel is non-negative, so the filter preserves bounds and does
/// not increase total variation. `κ ≤ 0` returns the input unchanged.
pub fn smooth_initial_datum<T: Real>(u0: &Field<T>, kappa: T) -> Field<T> {
    if !(kappa > T::zero()) {
        return u0.clone();
    }
    let cutoff = (T::lit(4.0) / kappa).ceil() + T::one();
    let mut spec = forward_transform(u0);
    spec.apply_multiplier(|n| {
        n.iter().fold(T::one(), |w, &k| w * (T::one() - T::lit(k.unsigned_abs() as f64) / cutoff).max(T::zero()))
    });
    let bound = kappa.recip();
    match inverse_transform(&spec) {
        Ok(f) => f.map(|v| v.max(-bound).min(bound)),
        // a symmetric real filter keeps the spectrum Hermitian
        Err(_) => unreachable!("Fejér filter broke Hermitian symmetry"),
    }
}
