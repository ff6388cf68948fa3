use std::io::Write;

use serde::{Deserialize, Serialize};

use super::XiGrid;
use crate::error::{Error, Result};
use crate::field::{Field, TorusGrid};
use crate::scalar::Real;
use crate::solver::{FluxScheme, Solver, StepContext, StepObserver, Trajectory};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureComponent {
    Parabolic,
    EntropyDefect,
    /// `½ G²(x, u) δ_{u=ξ}`, subtracted from `m` in the signed view.
    ItoCorrection,
    Combined,
}

impl MeasureComponent {
    fn tag(self) -> &'static str {
        match self {
            MeasureComponent::Parabolic => "parabolic",
            MeasureComponent::EntropyDefect => "entropy-defect",
            MeasureComponent::ItoCorrection => "ito-correction",
            MeasureComponent::Combined => "combined",
        }
    }
}

/// Non-negative mass per `(time bin, x cell, ξ cell)`.
#[derive(Clone, Debug, PartialEq)]
pub struct KineticMeasureHistogram {
    pub xi: XiGrid,
    pub component: MeasureComponent,
    pub t_end: f64,
    pub time_bins: usize,
    /// Spatial points are grouped into this many contiguous x cells.
    pub x_cells: usize,
    pub points: usize,
    pub mass: Vec<f64>,
    /// Positive residual discarded by clipping (entropy defect only).
    pub clipped: f64,
}

impl KineticMeasureHistogram {
    pub fn new(xi: XiGrid, component: MeasureComponent, grid: &TorusGrid, t_end: f64, time_bins: usize, x_cells: usize) -> Result<Self> {
        if time_bins == 0 || x_cells == 0 || x_cells > grid.len() || !(t_end > 0.0) {
            return Err(Error::Config(format!(
                "histogram needs positive t_end, time bins and 1..={} x cells",
                grid.len()
            )));
        }
        Ok(Self {
            xi,
            component,
            t_end,
            time_bins,
            x_cells,
            points: grid.len(),
            mass: vec![0.0; time_bins * x_cells * xi.cells],
            clipped: 0.0,
        })
    }

    fn time_bin(&self, t: f64) -> usize {
        ((t / self.t_end * self.time_bins as f64).floor().max(0.0) as usize).min(self.time_bins - 1)
    }

    fn slot(&self, t_bin: usize, point: usize, xi_cell: usize) -> usize {
        let x_cell = point * self.x_cells / self.points;
        (t_bin * self.x_cells + x_cell) * self.xi.cells + xi_cell
    }

    pub fn get(&self, t_bin: usize, x_cell: usize, xi_cell: usize) -> f64 {
        self.mass[(t_bin * self.x_cells + x_cell) * self.xi.cells + xi_cell]
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Mass per ξ cell, summed over time and space.
    pub fn xi_marginal(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.xi.cells];
        for chunk in self.mass.chunks(self.xi.cells) {
            for (o, m) in out.iter_mut().zip(chunk) {
                *o += m;
            }
        }
        out
    }

    /// Mass in cells whose centre satisfies `lo ≤ |ξ| < hi`.
    pub fn mass_in_abs_range(&self, lo: f64, hi: f64) -> f64 {
        self.xi_marginal()
            .iter()
            .enumerate()
            .filter(|(j, _)| {
                let a = self.xi.center(*j).abs();
                a >= lo && a < hi
            })
            .map(|(_, m)| m)
            .sum()
    }

    /// `m([0,T] × T^N × [-k, k])`.
    pub fn truncated_mass(&self, k: f64) -> f64 {
        self.mass_in_abs_range(0.0, k + 1e-12 * k.max(1.0))
    }

    pub fn merge(&mut self, other: &Self) -> Result<()> {
        if self.mass.len() != other.mass.len() || self.xi != other.xi {
            return Err(Error::GridMismatch("histograms with different layouts".into()));
        }
        for (a, b) in self.mass.iter_mut().zip(&other.mass) {
            *a += b;
        }
        self.clipped += other.clipped;
        Ok(())
    }

    pub fn scale(&mut self, factor: f64) {
        self.mass.iter_mut().for_each(|m| *m *= factor);
        self.clipped *= factor;
    }

    /// Signed cellwise difference `self - other`.
    pub fn signed_difference(&self, other: &Self) -> Result<Vec<f64>> {
        if self.mass.len() != other.mass.len() {
            return Err(Error::GridMismatch("histograms with different layouts".into()));
        }
        Ok(self.mass.iter().zip(&other.mass).map(|(a, b)| a - b).collect())
    }

    /// Fraction of the positive residual lost to clipping.
    pub fn clipped_fraction(&self) -> f64 {
        let total = self.total() + self.clipped;
        if total > 0.0 {
            self.clipped / total
        } else {
            0.0
        }
    }

    /// CSV `t_bin,x_cell,xi_cell,mass,component`; zero cells are omitted.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_bin,x_cell,xi_cell,mass,component")?;
        for t in 0..self.time_bins {
            for x in 0..self.x_cells {
                for j in 0..self.xi.cells {
                    let m = self.get(t, x, j);
                    if m != 0.0 {
                        writeln!(w, "{t},{x},{j},{m:.16e},{}", self.component.tag())?;
                    }
                }
            }
        }
        Ok(())
    }

    fn deposit(&mut self, t_bin: usize, point: usize, value: f64, mass: f64) -> Result<()> {
        let cell = self.xi.cell_of(value).ok_or(Error::RangeNotCovered {
            lo: value,
            hi: value,
            xi_min: self.xi.xi_min,
            xi_max: self.xi.xi_max,
        })?;
        let s = self.slot(t_bin, point, cell);
        self.mass[s] += mass;
        Ok(())
    }
}

/// `|∇_h Σ(u)|² hᴺ dt` into the ξ cell of `u(x)`; central differences.
fn deposit_parabolic<T: Real>(hist: &mut KineticMeasureHistogram, solver: &Solver<T>, u: &Field<T>, t_mid: f64, dt: f64) -> Result<()> {
    let model = solver.model();
    if !model.has_diffusion() {
        return Ok(());
    }
    let grid = solver.grid();
    let h = grid.spacing::<f64>();
    let vol = grid.cell_volume::<f64>();
    let s: Vec<f64> = u.values().iter().map(|&v| model.sigma_primitive(v).to_f64_lossy()).collect();
    let bin = hist.time_bin(t_mid);
    for i in 0..s.len() {
        let mut g2 = 0.0;
        for axis in 0..grid.dim() {
            let d = (s[grid.neighbor(i, axis, 1)] - s[grid.neighbor(i, axis, -1)]) / (2.0 * h);
            g2 += d * d;
        }
        if g2 > 0.0 {
            hist.deposit(bin, i, u.values()[i].to_f64_lossy(), g2 * vol * dt)?;
        }
    }
    Ok(())
}

/// Clipped residual of the semi-entropy balance for `(u - c)⁺` across the
/// convection substep, at every ξ-cell centre `c`.
fn deposit_entropy<T: Real>(
    hist: &mut KineticMeasureHistogram,
    solver: &Solver<T>,
    before: &Field<T>,
    after: &Field<T>,
    t_mid: f64,
    dt: f64,
) -> Result<()> {
    let model = solver.model();
    if !model.has_flux() {
        return Ok(());
    }
    let grid = *solver.grid();
    let dim = grid.dim();
    let h = grid.spacing::<f64>();
    let lambda = dt / h;
    let scale = grid.cell_volume::<f64>() * hist.xi.spacing();
    let bin = hist.time_bin(t_mid);
    let u: Vec<f64> = before.values().iter().map(|v| v.to_f64_lossy()).collect();
    let w: Vec<f64> = after.values().iter().map(|v| v.to_f64_lossy()).collect();
    let (lo, hi) = before.min_max();
    let (lo, hi) = (lo.to_f64_lossy(), hi.to_f64_lossy());
    hist.xi.check_covers(lo, hi)?;

    let scheme = solver.config().flux_scheme;
    let speed = model.max_abs_b_tau(T::lit(lo), T::lit(hi)).to_f64_lossy();
    let split = |x: f64| {
        let (p, m) = model.flux_tau_split(T::lit(x));
        (p.to_f64_lossy(), m.to_f64_lossy())
    };
    let full = |x: f64| model.flux_tau(T::lit(x)).to_f64_lossy();
    let cell_split: Vec<(f64, f64)> = u.iter().map(|&x| split(x)).collect();
    let cell_full: Vec<f64> = match scheme {
        FluxScheme::LaxFriedrichs => u.iter().map(|&x| full(x)).collect(),
        FluxScheme::EngquistOsher => Vec::new(),
    };
    let centers = hist.xi.centers();
    let level_split: Vec<(f64, f64)> = centers.iter().map(|&c| split(c)).collect();
    let level_full: Vec<f64> = match scheme {
        FluxScheme::LaxFriedrichs => centers.iter().map(|&c| full(c)).collect(),
        FluxScheme::EngquistOsher => Vec::new(),
    };
    // entropy flux Q_c(a, b) through the face between cells a | b
    let q = |a: usize, b: usize, j: usize| -> f64 {
        let c = centers[j];
        match scheme {
            FluxScheme::EngquistOsher => {
                let pa = if u[a] > c { cell_split[a].0 } else { level_split[j].0 };
                let mb = if u[b] > c { cell_split[b].1 } else { level_split[j].1 };
                pa - level_split[j].0 + mb - level_split[j].1
            }
            FluxScheme::LaxFriedrichs => {
                let (xa, fa) = if u[a] > c { (u[a], cell_full[a]) } else { (c, level_full[j]) };
                let (xb, fb) = if u[b] > c { (u[b], cell_full[b]) } else { (c, level_full[j]) };
                0.5 * (fa + fb) - 0.5 * speed * (xb - xa) - level_full[j]
            }
        }
    };
    for i in 0..u.len() {
        let mut smin = u[i].min(w[i]);
        let mut smax = u[i].max(w[i]);
        let mut nb = [[0usize; 2]; 2];
        for axis in 0..dim {
            let l = grid.neighbor(i, axis, -1);
            let r = grid.neighbor(i, axis, 1);
            nb[axis] = [l, r];
            smin = smin.min(u[l]).min(u[r]);
            smax = smax.max(u[l]).max(u[r]);
        }
        for j in hist.xi.centers_within(smin, smax) {
            let c = centers[j];
            let mut r = (w[i] - c).max(0.0) - (u[i] - c).max(0.0);
            for [l, rr] in nb.iter().take(dim) {
                r += lambda * (q(i, *rr, j) - q(*l, i, j));
            }
            if r < 0.0 {
                let s = hist.slot(bin, i, j);
                hist.mass[s] += -r * scale;
            } else {
                hist.clipped += r * scale;
            }
        }
    }
    Ok(())
}

/// Step observer filling the parabolic, entropy-defect and Itô histograms.
#[derive(Clone, Debug)]
pub struct KineticAccumulator {
    pub parabolic: KineticMeasureHistogram,
    pub entropy: KineticMeasureHistogram,
    pub ito: KineticMeasureHistogram,
}

impl KineticAccumulator {
    pub fn new(xi: XiGrid, grid: &TorusGrid, t_end: f64, time_bins: usize, x_cells: usize) -> Result<Self> {
        let make = |c| KineticMeasureHistogram::new(xi, c, grid, t_end, time_bins, x_cells);
        Ok(Self {
            parabolic: make(MeasureComponent::Parabolic)?,
            entropy: make(MeasureComponent::EntropyDefect)?,
            ito: make(MeasureComponent::ItoCorrection)?,
        })
    }

    /// `m = n_parabolic + n_entropy`.
    pub fn combined(&self) -> KineticMeasureHistogram {
        let mut m = self.parabolic.clone();
        m.component = MeasureComponent::Combined;
        for (a, b) in m.mass.iter_mut().zip(&self.entropy.mass) {
            *a += b;
        }
        m.clipped = self.entropy.clipped;
        m
    }

    /// Signed view `q = m - ½G² δ_{u=ξ}`, cellwise.
    pub fn signed_view(&self) -> Vec<f64> {
        let m = self.combined();
        m.mass.iter().zip(&self.ito.mass).map(|(a, b)| a - b).collect()
    }
}

impl<T: Real> StepObserver<T> for KineticAccumulator {
    fn observe(&mut self, solver: &Solver<T>, ctx: &StepContext<'_, T>) -> Result<()> {
        let dt = ctx.dt.to_f64_lossy();
        let t_mid = ctx.time.to_f64_lossy() - 0.5 * dt;
        deposit_entropy(&mut self.entropy, solver, ctx.before, ctx.convected, t_mid, dt)?;
        deposit_parabolic(&mut self.parabolic, solver, ctx.diffused, t_mid, dt)?;
        let noise = &solver.config().noise;
        if !noise.is_deterministic() {
            let grid = solver.grid();
            let bin = self.ito.time_bin(t_mid);
            let vol = grid.cell_volume::<f64>();
            for (i, &v) in ctx.diffused.values().iter().enumerate() {
                let x = grid.coords::<T>(i)[0];
                let g2 = noise.g_squared(x, v).to_f64_lossy();
                self.ito.deposit(bin, i, v.to_f64_lossy(), 0.5 * g2 * vol * dt)?;
            }
        }
        Ok(())
    }
}

fn consecutive_states<T: Real>(traj: &Trajectory<T>) -> Result<()> {
    if traj.states.len() < 2 || traj.states.len() != traj.times.len() {
        return Err(Error::InsufficientResolution("trajectory was recorded without snapshots".into()));
    }
    Ok(())
}

/// Parabolic dissipation measure from recorded snapshots.
pub fn accumulate_parabolic_dissipation<T: Real>(
    traj: &Trajectory<T>,
    solver: &Solver<T>,
    xi: &XiGrid,
    time_bins: usize,
) -> Result<KineticMeasureHistogram> {
    consecutive_states(traj)?;
    let t_end = traj.final_time().to_f64_lossy();
    let grid = solver.grid();
    let mut hist = KineticMeasureHistogram::new(*xi, MeasureComponent::Parabolic, grid, t_end, time_bins, grid.len())?;
    for k in 1..traj.states.len() {
        let (t0, t1) = (traj.times[k - 1].to_f64_lossy(), traj.times[k].to_f64_lossy());
        deposit_parabolic(&mut hist, solver, &traj.states[k], 0.5 * (t0 + t1), t1 - t0)?;
    }
    Ok(hist)
}

/// Entropy-defect measure; needs a snapshot after every step.
pub fn accumulate_entropy_defect<T: Real>(
    traj: &Trajectory<T>,
    solver: &Solver<T>,
    xi: &XiGrid,
    time_bins: usize,
) -> Result<KineticMeasureHistogram> {
    consecutive_states(traj)?;
    let dt = solver.config().dt;
    let dt64 = dt.to_f64_lossy();
    let t_end = traj.final_time().to_f64_lossy();
    let grid = solver.grid();
    let mut hist = KineticMeasureHistogram::new(*xi, MeasureComponent::EntropyDefect, grid, t_end, time_bins, grid.len())?;
    for k in 1..traj.states.len() {
        let gap = (traj.times[k] - traj.times[k - 1]).to_f64_lossy();
        if (gap - dt64).abs() > 1e-9 * dt64 {
            return Err(Error::InsufficientResolution(format!("snapshot spacing {gap} differs from dt {dt64}")));
        }
        let convected = solver.convection_substep(&traj.states[k - 1], dt)?;
        let t_mid = traj.times[k - 1].to_f64_lossy() + 0.5 * dt64;
        deposit_entropy(&mut hist, solver, &traj.states[k - 1], &convected, t_mid, dt64)?;
    }
    Ok(hist)
}

/// `2^{-ℓ} m(A_{2^ℓ})` per level; level 0 also holds the core `|ξ| < 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayProfile {
    pub levels: Vec<u32>,
    pub scaled_mass: Vec<f64>,
    /// Nonincreasing over the top three levels and the last level below 1%
    /// of level 0.
    pub pass: bool,
}

pub fn measure_decay_profile(m: &KineticMeasureHistogram, levels: &[u32]) -> Result<DecayProfile> {
    let top = levels.iter().copied().max().unwrap_or(0);
    let reach = 2f64.powi(top as i32 + 1);
    if m.xi.xi_max < reach || m.xi.xi_min > -reach {
        return Err(Error::RangeNotCovered { lo: -reach, hi: reach, xi_min: m.xi.xi_min, xi_max: m.xi.xi_max });
    }
    let marginal = m.xi_marginal();
    let scaled_mass: Vec<f64> = levels
        .iter()
        .map(|&ell| {
            let lo = if ell == 0 { 0.0 } else { 2f64.powi(ell as i32) };
            let hi = 2f64.powi(ell as i32 + 1);
            let mass: f64 = marginal
                .iter()
                .enumerate()
                .filter(|(j, _)| {
                    let a = m.xi.center(*j).abs();
                    a >= lo && a < hi
                })
                .map(|(_, v)| v)
                .sum();
            mass / 2f64.powi(ell as i32)
        })
        .collect();
    let k = scaled_mass.len();
    let tail_monotone = scaled_mass[k.saturating_sub(3)..].windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let small = k > 0 && scaled_mass[k - 1] < 0.01 * scaled_mass[0];
    Ok(DecayProfile { levels: levels.to_vec(), scaled_mass, pass: tail_monotone && small })
}

/// `E‖(u₀ - 2^ℓ)⁺‖₁ + E‖(u₀ + 2^ℓ)⁻‖₁` per level over an ensemble of data.
pub fn initial_tail_profile<T: Real>(u0: &[Field<T>], levels: &[u32]) -> Vec<f64> {
    levels
        .iter()
        .map(|&ell| {
            let r = 2f64.powi(ell as i32);
            let total: f64 = u0
                .iter()
                .map(|f| {
                    let vol = f.grid().cell_volume::<f64>();
                    f.values().iter().map(|v| ((v.to_f64_lossy().abs() - r).max(0.0)) * vol).sum::<f64>()
                })
                .sum();
            total / u0.len().max(1) as f64
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailCheck {
    /// Constant fitted on the first `fit_levels` entries.
    pub constant: f64,
    pub envelope: Vec<f64>,
    pub pass: bool,
}

/// Fits `C` on the leading levels so that `profile ≤ C (tail + αˡ)` there,
/// then checks the bound on the remaining levels.
pub fn tail_domination(profile: &[f64], tails: &[f64], alpha: f64, fit_levels: usize) -> TailCheck {
    let shape: Vec<f64> = tails.iter().enumerate().map(|(l, t)| t + alpha.powi(l as i32)).collect();
    let constant = profile
        .iter()
        .zip(&shape)
        .take(fit_levels.max(1))
        .map(|(p, s)| p / s)
        .fold(0.0, f64::max);
    let envelope: Vec<f64> = shape.iter().map(|s| constant * s).collect();
    let pass = profile.iter().zip(&envelope).all(|(p, e)| *p <= e * (1.0 + 1e-9));
    TailCheck { constant, envelope, pass }
}

/// CSV `ell,scaled_mass`.
pub fn write_decay_csv<W: Write>(profile: &DecayProfile, mut w: W) -> Result<()> {
    writeln!(w, "ell,scaled_mass")?;
    for (l, m) in profile.levels.iter().zip(&profile.scaled_mass) {
        writeln!(w, "{l},{m:.16e}")?;
    }
    Ok(())
}
