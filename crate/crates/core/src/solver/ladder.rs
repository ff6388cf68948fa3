use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{smooth_initial_datum, Solver, SolverConfig};
use crate::error::{Error, Result};
use crate::field::Field;
use crate::scalar::Real;

/// Ensemble `L¹_{t,x}` distances between consecutive rungs of a viscosity ladder.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CauchyReport {
    pub kappas: Vec<f64>,
    /// `E‖u^{κ_i} - u^{κ_{i+1}}‖_{L¹_{t,x}}`.
    pub differences: Vec<f64>,
    pub stderr: Vec<f64>,
    /// Consecutive differences nonincreasing within 10% slack.
    pub pass: bool,
}

const SLACK: f64 = 1.1;

/// Runs every `κ` with shared seeds and measures consecutive distances.
///
/// All rungs use `config.dt`, which must be admissible for the largest `κ`.
/// With `smooth_data` each rung starts from `u₀^κ`.
pub fn vanishing_viscosity_ladder<T: Real>(
    config: &SolverConfig<T>,
    u0: &Field<T>,
    seeds: &[u64],
    kappas: &[T],
    smooth_data: bool,
) -> Result<CauchyReport> {
    if kappas.len() < 2 || kappas.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(Error::Config("viscosity ladder needs a strictly decreasing list of at least two values".into()));
    }
    if seeds.is_empty() {
        return Err(Error::Config("viscosity ladder needs at least one seed".into()));
    }
    let solvers = kappas
        .iter()
        .map(|&k| {
            let mut c = config.clone();
            c.model = c.model.with_viscosity(k);
            c.keep_states = true;
            Solver::new(c)
        })
        .collect::<Result<Vec<_>>>()?;
    let per_member: Vec<Vec<f64>> = seeds
        .par_iter()
        .enumerate()
        .map(|(member, &seed)| {
            member_distances(&solvers, kappas, u0, seed, smooth_data)
                .map_err(|e| Error::Member { member, seed, source: Box::new(e) })
        })
        .collect::<Result<_>>()?;
    let m = per_member.len() as f64;
    let rungs = kappas.len() - 1;
    let mut differences = vec![0.0; rungs];
    let mut stderr = vec![0.0; rungs];
    for i in 0..rungs {
        let mean = per_member.iter().map(|d| d[i]).sum::<f64>() / m;
        let var = if per_member.len() > 1 {
            per_member.iter().map(|d| (d[i] - mean).powi(2)).sum::<f64>() / (m - 1.0)
        } else {
            0.0
        };
        differences[i] = mean;
        stderr[i] = (var / m).sqrt();
    }
    let pass = differences.windows(2).all(|w| w[1] <= SLACK * w[0] + 1e-12);
    Ok(CauchyReport { kappas: kappas.iter().map(|k| k.to_f64_lossy()).collect(), differences, stderr, pass })
}

fn member_distances<T: Real>(
    solvers: &[Solver<T>],
    kappas: &[T],
    u0: &Field<T>,
    seed: u64,
    smooth_data: bool,

) -> Result<Vec<f64>> {
    let runs = solvers
        .iter()
        .zip(kappas)
        .map(|(s, &k)| {
            let start = if smooth_data { smooth_initial_datum(u0, k) } else { u0.clone() };
            s.solve(&start, seed)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = Vec::with_capacity(runs.len() - 1);
    for pair in runs.windows(2) {
        let (a, b) = (&pair[0], &pair[1]);
        let count = a.states.len().min(b.states.len());
        let dist = (0..count)
            .map(|i| Ok(a.states[i].zip_map(&b.states[i], |x, y| (x - y).abs())?.mass()))
            .collect::<Result<Vec<T>>>()?;
        let mut total = T::zero();
        for i in 1..count {
            total = total + T::lit(0.5) * (dist[i] + dist[i - 1]) * (a.times[i] - a.times[i - 1]);
        }
        out.push(total.to_f64_lossy());
    }
    Ok(out)
}
