use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{forward_transform, inverse_transform, Field, TorusGrid};
use crate::model::{Localization, RegularityPrediction};
use crate::multiplier_kernels::plateau;
use crate::scalar::Real;
use crate::solver::Trajectory;

/// Largest regularity exponent the block-decay fit reports.
pub const FIT_CAP: f64 = 2.0;

/// Weight of lattice frequency magnitude `norm` in block `level` (0 is the low block).
pub fn littlewood_paley_weight(level: u64, norm: f64) -> f64 {
    if level == 0 {
        plateau(2.0 * norm)
    } else {
        let j = level as f64;
        plateau(norm / j) - plateau(2.0 * norm / j)
    }
}

fn block_levels(grid: &TorusGrid) -> Vec<u64> {
    let half = (grid.points_per_dim() / 2) as f64;
    let max_norm = half * (grid.dim() as f64).sqrt();
    let mut levels = vec![0u64];
    let mut j = 1u64;
    loop {
        levels.push(j);
        if j as f64 >= max_norm {
            break;
        }
        j *= 2;
    }
    levels
}

#[derive(Clone, Debug, PartialEq)]
pub struct LittlewoodPaleyBlock<T> {
    /// `0` for the low block, otherwise the dyadic `J`.
    pub level: u64,
    pub field: Field<T>,
}

/// Splits `f` into `u_0` and dyadic blocks `u_J`, `J = 1, 2, 4, …`, summing to `f`.
pub fn littlewood_paley_blocks<T: Real>(f: &Field<T>) -> Result<Vec<LittlewoodPaleyBlock<T>>> {
    let spec = forward_transform(f);
    block_levels(f.grid())
        .into_iter()
        .map(|level| {
            let mut s = spec.clone();
            s.apply_multiplier(|n| {
                let norm = ((n[0] * n[0] + n[1] * n[1]) as f64).sqrt();
                T::lit(littlewood_paley_weight(level, norm))
            });
            Ok(LittlewoodPaleyBlock { level, field: inverse_transform(&s)? })
        })
        .collect()
}

fn torus_distance(a: usize, b: usize, points: usize, h: f64) -> f64 {
    let d = a.abs_diff(b);
    d.min(points - d) as f64 * h
}

/// Discrete Gagliardo seminorm `Σ_{x≠y} |f(x) - f(y)|^r / d(x,y)^{N+sr} Δx²`, returned
/// as the sum itself (the `r`-th power of the seminorm).
pub fn fractional_sobolev_seminorm<T: Real>(f: &Field<T>, s: f64, r: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::InvalidExponent(s));
    }
    if !(r >= 1.0) {
        return Err(Error::InvalidExponent(r));
    }
    let grid = f.grid();
    let p = grid.points_per_dim();
    let h = grid.spacing::<f64>();
    let vol = grid.cell_volume::<f64>();
    let power = grid.dim() as f64 + s * r;
    let v: Vec<f64> = f.values().iter().map(|x| x.to_f64_lossy()).collect();
    let mut total = 0.0;
    for i in 0..v.len() {
        let [ix, iy] = grid.multi_index(i);
        let mut row = 0.0;
        for k in 0..v.len() {
            if k == i {
                continue;
            }
            let [kx, ky] = grid.multi_index(k);
            let dx = torus_distance(ix, kx, p, h);
            let dy = torus_distance(iy, ky, p, h);
            let d = (dx * dx + dy * dy).sqrt();
            row += (v[i] - v[k]).abs().powf(r) / d.powf(power);
        }
        total += row;
    }
    Ok(total * vol * vol)
}

/// Block-decay evidence for the regularity of `η̄(u)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularityReport {
    pub levels: Vec<u64>,
    /// Ensemble mean of `‖(η̄(u))_J‖_{L^r_{t,x}}` per level.
    pub block_norms: Vec<f64>,
    pub block_stderr: Vec<f64>,
    /// Levels entering the log-log fit.
    pub fit_levels: Vec<u64>,
    /// Log-log slope, or `-FIT_CAP` when a fitted block is at roundoff level.
    pub slope: f64,
    /// `min(-slope, FIT_CAP)`.
    pub s_emp: f64,
    pub r: f64,
    pub predicted_s: f64,
    /// Ensemble mean of `∫∫ Θ_η(|u|) dx dt`.
    pub theta_functional: f64,
    pub pass: bool,
}

/// Time weights of the trapezoid rule over the recorded times.
pub(crate) fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let mut w = vec![0.0; times.len()];
    for i in 1..times.len() {
        let half = 0.5 * (times[i] - times[i - 1]);
        w[i - 1] += half;
        w[i] += half;
    }
    w
}

fn member_block_norms<T: Real>(traj: &Trajectory<T>, loc: &Localization<f64>, r: f64) -> Result<(Vec<u64>, Vec<f64>, f64)> {
    if traj.states.len() < 2 || traj.states.len() != traj.times.len() {
        return Err(Error::InsufficientResolution("regularity fit needs at least two recorded states".into()));
    }
    let times: Vec<f64> = traj.times.iter().map(|t| t.to_f64_lossy()).collect();
    let weights = trapezoid_weights(&times);
    let grid = *traj.states[0].grid();
    let vol = grid.cell_volume::<f64>();
    let mut sums: Vec<f64> = Vec::new();
    let mut levels = Vec::new();
    let mut theta = 0.0;
    for (state, w) in traj.states.iter().zip(&weights) {
        let eta_bar = Field::from_raw(grid, state.values().iter().map(|v| loc.eta_bar(v.to_f64_lossy())).collect());
        theta += w * vol * state.values().iter().map(|v| loc.theta_eta(v.to_f64_lossy().abs())).sum::<f64>();
        let blocks = littlewood_paley_blocks(&eta_bar)?;
        if sums.is_empty() {
            sums = vec![0.0; blocks.len()];
            levels = blocks.iter().map(|b| b.level).collect();
        }
        for (acc, b) in sums.iter_mut().zip(&blocks) {
            *acc += w * vol * b.field.values().iter().map(|v| v.abs().powf(r)).sum::<f64>();
        }
    }
    Ok((levels, sums.into_iter().map(|s| s.powf(1.0 / r)).collect(), theta))
}

/// Fits `log E‖(η̄(u))_J‖_{L^r_{t,x}}` against `log J` over the interior dyadic levels
/// (dropping `J = 1` and the top level) and reports `s_emp = -slope`.
///
/// The integrability `r` is taken just below the predicted `r_bound` (at `1 + 0.9 (r_bound - 1)`).
pub fn regularity_exponent_fit<T: Real>(
    ensemble: &[Trajectory<T>],
    localization: &Localization<f64>,
    prediction: &RegularityPrediction<f64>,
) -> Result<RegularityReport> {
    if ensemble.is_empty() {
        return Err(Error::Config("empty ensemble".into()));
    }
    let r = 1.0 + 0.9 * (prediction.r_bound - 1.0);
    let members = ensemble
        .iter()
        .map(|t| member_block_norms(t, localization, r))
        .collect::<Result<Vec<_>>>()?;
    let levels = members[0].0.clone();
    if members.iter().any(|m| m.0 != levels) {
        return Err(Error::GridMismatch("ensemble members on different grids".into()));
    }
    let stats = super::EnsembleResult::from_members(members.iter().map(|m| m.1.clone()).collect())?;
    let theta_functional = members.iter().map(|m| m.2).sum::<f64>() / members.len() as f64;
    // levels: 0, 1, 2, …, top; keep 2..top exclusive
    let fit: Vec<usize> = (2..levels.len().saturating_sub(1)).collect();
    if fit.len() < 4 {
        return Err(Error::InsufficientResolution(format!("{} interior dyadic levels, need 4", fit.len())));
    }
    // a block at roundoff level means the spectrum ended inside the fit range
    let floor = 1e-12 * stats.mean.iter().copied().fold(0.0, f64::max);
    let saturated = fit.iter().any(|&i| stats.mean[i] <= floor);
    let slope = if saturated {
        -FIT_CAP
    } else {
        let xs: Vec<f64> = fit.iter().map(|&i| (levels[i] as f64).ln()).collect();
        let ys: Vec<f64> = fit.iter().map(|&i| stats.mean[i].ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
        sxy / sxx
    };
    let s_emp = (-slope).min(FIT_CAP);
    let predicted_s = prediction.s_bound;
    Ok(RegularityReport {
        fit_levels: fit.iter().map(|&i| levels[i]).collect(),
        levels,
        block_norms: stats.mean,
        block_stderr: stats.stderr,
        slope,
        s_emp,
        r,
        predicted_s,
        theta_functional,
        pass: s_emp >= 0.9 * predicted_s,
    })
}

/// `J,block_norm,stderr` rows.
pub fn write_block_csv<W: Write>(report: &RegularityReport, mut w: W) -> Result<()> {
    writeln!(w, "J,block_norm,stderr")?;
    for ((j, m), e) in report.levels.iter().zip(&report.block_norms).zip(&report.block_stderr) {
        writeln!(w, "{j},{m:.16e},{e:.16e}")?;
    }
    Ok(())
}
