use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::Field;
use crate::scalar::Real;
use crate::solver::Trajectory;

/// Per-member series with their sample mean and standard error.
///
/// Reductions run in member order, so results do not depend on how the
/// members were scheduled.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleResult {
    pub member_count: usize,
    pub members: Vec<Vec<f64>>,
    pub mean: Vec<f64>,
    /// `sample std / √M`.
    pub stderr: Vec<f64>,
}

impl EnsembleResult {
    pub fn from_members(members: Vec<Vec<f64>>) -> Result<Self> {
        let m = members.len();
        if m == 0 {
            return Err(Error::Config("empty ensemble".into()));
        }
        let len = members[0].len();
        if members.iter().any(|s| s.len() != len) {
            return Err(Error::GridMismatch("ensemble members have series of different lengths".into()));
        }
        let mut mean = vec![0.0; len];
        for s in &members {
            for (a, v) in mean.iter_mut().zip(s) {
                *a += v;
            }
        }
        mean.iter_mut().for_each(|a| *a /= m as f64);
        let mut stderr = vec![0.0; len];
        if m > 1 {
            for s in &members {
                for ((e, v), mu) in stderr.iter_mut().zip(s).zip(&mean) {
                    *e += (v - mu).powi(2);
                }
            }
            stderr.iter_mut().for_each(|e| *e = (*e / (m as f64 - 1.0)).sqrt() / (m as f64).sqrt());
        }
        Ok(Self { member_count: m, members, mean, stderr })
    }

    pub fn from_scalars(values: Vec<f64>) -> Result<Self> {
        Self::from_members(values.into_iter().map(|v| vec![v]).collect())
    }

    pub fn last_mean(&self) -> f64 {
        self.mean.last().copied().unwrap_or(0.0)
    }

    pub fn last_stderr(&self) -> f64 {
        self.stderr.last().copied().unwrap_or(0.0)
    }
}

/// `‖(u₁(t) - u₂(t))⁺‖₁` at every recorded time of two coupled runs.
pub fn contraction_gap<T: Real>(u1: &Trajectory<T>, u2: &Trajectory<T>) -> Result<Vec<T>> {
    if u1.seed != u2.seed {
        return Err(Error::CouplingMismatch(u1.seed, u2.seed));
    }
    if u1.times != u2.times {
        return Err(Error::GridMismatch("trajectories recorded at different times".into()));
    }
    if u1.states.len() != u1.times.len() || u2.states.len() != u2.times.len() {
        return Err(Error::InsufficientResolution("contraction gap needs recorded states".into()));
    }
    u1.states.iter().zip(&u2.states).map(|(a, b)| a.positive_part_l1(b)).collect()
}

/// Ensemble estimate of `E sup_t ‖u(t)‖_p^{pq}` against `1 + E‖u₀‖_p^{pq}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LpMomentReport {
    pub p: f64,
    pub q: f64,
    pub moment: f64,
    pub moment_stderr: f64,
    pub initial_moment: f64,
    pub ratio: f64,
}

/// Uses the running suprema tracked by the solver; `p` must be 2 or the
/// trajectories' configured exponent.
pub fn lp_moment_check<T: Real>(trajectories: &[Trajectory<T>], initial: &[Field<T>], p: f64, q: f64) -> Result<LpMomentReport> {
    if !(p >= 1.0) || !(q >= 1.0) {
        return Err(Error::InvalidExponent(p.min(q)));
    }
    if trajectories.is_empty() || trajectories.len() != initial.len() {
        return Err(Error::Config("one initial datum per trajectory is required".into()));
    }
    let pq = p * q;
    let sups = trajectories
        .iter()
        .map(|t| {
            if p == 2.0 {
                Ok(t.sup_l2.to_f64_lossy())
            } else if (t.lp_exponent.to_f64_lossy() - p).abs() < 1e-12 {
                Ok(t.sup_lp.to_f64_lossy())
            } else {
                Err(Error::InvalidExponent(p))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    let moments = EnsembleResult::from_scalars(sups.iter().map(|s| s.powf(pq)).collect())?;
    let init = initial
        .iter()
        .map(|f| Ok(f.lp_norm(T::lit(p))?.to_f64_lossy().powf(pq)))
        .collect::<Result<Vec<f64>>>()?;
    let initial_moment = init.iter().sum::<f64>() / init.len() as f64;
    let moment = moments.mean[0];
    Ok(LpMomentReport { p, q, moment, moment_stderr: moments.stderr[0], initial_moment, ratio: moment / (1.0 + initial_moment) })
}

/// `max ratio / min ratio ≤ factor` across a dt-refinement.
pub fn lp_moment_stability(reports: &[LpMomentReport], factor: f64) -> bool {
    let (lo, hi) = reports
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(lo, hi), r| (lo.min(r.ratio), hi.max(r.ratio)));
    if hi == 0.0 {
        return true;
    }
    lo > 0.0 && hi / lo <= factor
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::TorusGrid;
    use crate::model::ModelSpec;
    use crate::noise::NoiseModel;
    use crate::solver::{Solver, SolverConfig};

    #[test]
    fn ensemble_statistics() {
        let e = EnsembleResult::from_members(vec![vec![1.0, 2.0], vec![3.0, 2.0], vec![5.0, 2.0]]).unwrap();
        assert_eq!(e.mean, vec![3.0, 2.0]);
        assert!((e.stderr[0] - 2.0 / 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(e.stderr[1], 0.0);
        assert!(EnsembleResult::from_members(vec![vec![1.0], vec![]]).is_err());
    }

    fn solver(n: usize, noise: NoiseModel<f64>) -> Solver<f64> {
        let mut c = SolverConfig::new(ModelSpec::hyperbolic(2).with_viscosity(0.01), noise, TorusGrid::line(n), 1.0, 0.3);
        c.dt = c.fitted_dt(-2.5, 2.5, 0.8);
        c.keep_states = true;
        Solver::new(c).unwrap()
    }

    #[test]
    fn gap_examples() {
        let s = solver(64, NoiseModel::deterministic());
        let u = Field::from_fn(TorusGrid::line(64), |x: [f64; 2]| x[0].sin());
        let v = Field::from_fn(TorusGrid::line(64), |x: [f64; 2]| 0.8 * x[0].sin() - 0.3);
        let a = s.solve(&u, 0).unwrap();
        let b = s.solve(&v, 0).unwrap();
        assert!(contraction_gap(&a, &a).unwrap().iter().all(|&g| g == 0.0));
        let g = contraction_gap(&a, &b).unwrap();
        assert!(g.windows(2).all(|w| w[1] <= w[0] + 1e-14), "{g:?}");
        let h = contraction_gap(&b, &a).unwrap();
        for (i, (x, y)) in g.iter().zip(&h).enumerate() {
            let l1 = a.states[i].zip_map(&b.states[i], |p, q| p - q).unwrap().l1_norm();
            assert!((x + y - l1).abs() <= 1e-13 * l1.max(1.0));
        }
        let c = s.solve(&v, 1).unwrap();
        assert!(matches!(contraction_gap(&a, &c), Err(Error::CouplingMismatch(0, 1))));
    }

    #[test]
    fn zero_moment_ratio() {
        let s = solver(32, NoiseModel::deterministic());
        let z = Field::<f64>::zeros(TorusGrid::line(32));
        let t = s.solve(&z, 0).unwrap();
        let r = lp_moment_check(&[t], &[z], 2.0, 2.0).unwrap();
        assert_eq!(r.ratio, 0.0);
        assert!(lp_moment_stability(&[r.clone(), r], 2.0));
    }
}
