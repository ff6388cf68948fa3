//! Operator-split time stepping: monotone finite-volume convection, degenerate
//! diffusion in potential form, Euler–Maruyama noise.
//!
//! One step is Lie splitting in the fixed order convection → diffusion →
//! noise, the noise coefficients being evaluated at the post-diffusion state.

mod ladder;
mod smoothing;
mod trajectory;

pub use ladder::{vanishing_viscosity_ladder, CauchyReport};
pub use smoothing::smooth_initial_datum;
pub use trajectory::{write_norms_csv, NormRecord, Trajectory};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Field, TorusGrid};
use crate::model::ModelSpec;
use crate::noise::{self, NoiseModel, WienerPath};
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffusionScheme {
    Explicit,
    /// Backward Euler with the coefficients frozen at the previous step.
    SemiImplicit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FluxScheme {
    EngquistOsher,
    /// Global Lax–Friedrichs; more diffusive, kept as a cross-check.
    LaxFriedrichs,
}

#[derive(Clone, Debug)]
pub struct SolverConfig<T> {
    pub model: ModelSpec<T>,
    pub noise: NoiseModel<T>,
    pub grid: TorusGrid,
    pub dt: T,
    pub t_end: T,
    pub cfl_safety: T,
    pub diffusion_scheme: DiffusionScheme,
    pub flux_scheme: FluxScheme,
    /// Norms and states are recorded every this many steps (and at the end).
    pub record_every: usize,
    /// Exponent of the extra `Lᵖ` norm in the norm series.
    pub lp_exponent: T,
    pub keep_states: bool,
}

impl<T: Real> SolverConfig<T> {
    pub fn new(model: ModelSpec<T>, noise: NoiseModel<T>, grid: TorusGrid, dt: T, t_end: T) -> Self {
        Self {
            model,
            noise,
            grid,
            dt,
            t_end,
            cfl_safety: T::lit(0.9),
            diffusion_scheme: DiffusionScheme::Explicit,
            flux_scheme: FluxScheme::EngquistOsher,
            record_every: 1,
            lp_exponent: T::lit(4.0),
            keep_states: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        if !(self.dt > T::zero()) || !self.dt.is_finite() {
            return Err(Error::Config(format!("dt = {} must be positive", self.dt)));
        }
        if !(self.t_end >= T::zero()) {
            return Err(Error::Config(format!("t_end = {} must be non-negative", self.t_end)));
        }
        if !(self.cfl_safety > T::zero() && self.cfl_safety < T::one()) {
            return Err(Error::Config(format!("cfl_safety = {} must lie in (0, 1)", self.cfl_safety)));
        }
        if self.record_every == 0 {
            return Err(Error::Config("record_every must be at least 1".into()));
        }
        self.step_count().map(|_| ())
    }

    /// `t_end / dt`, refused unless it is an integer.
    pub fn step_count(&self) -> Result<usize> {
        let ratio = (self.t_end / self.dt).to_f64_lossy();
        let rounded = ratio.round();
        if (ratio - rounded).abs() > 1e-9 * rounded.max(1.0) {
            return Err(Error::StepCount { ratio });
        }
        Ok(rounded as usize)
    }

    /// Largest convective step admissible for solution values in `[lo, hi]`.
    pub fn convective_dt_limit(&self, lo: T, hi: T) -> T {
        if !self.model.has_flux() {
            return T::infinity();
        }
        let speed = self.model.max_abs_b_tau(lo, hi);
        if speed == T::zero() {
            return T::infinity();
        }
        let dim = T::from_usize_lossy(self.grid.dim());
        self.cfl_safety * self.grid.spacing::<T>() / (dim * speed)
    }

    /// Largest explicit diffusive step admissible for values in `[lo, hi]`.
    pub fn diffusive_dt_limit(&self, lo: T, hi: T) -> T {
        if !self.model.has_diffusion() || self.diffusion_scheme == DiffusionScheme::SemiImplicit {
            return T::infinity();
        }
        let a = self.model.max_regularized_a(lo, hi);
        if a == T::zero() {
            return T::infinity();
        }
        let h = self.grid.spacing::<T>();
        let dim = T::from_usize_lossy(self.grid.dim());
        self.cfl_safety * h * h / (T::lit(2.0) * dim * a)
    }

    /// Admissible step for values in `[lo, hi]`.
    pub fn dt_limit(&self, lo: T, hi: T) -> T {
        self.convective_dt_limit(lo, hi).min(self.diffusive_dt_limit(lo, hi))
    }

    /// Largest `t_end / n` not exceeding `fraction · dt_limit(lo, hi)`.
    pub fn fitted_dt(&self, lo: T, hi: T, fraction: T) -> T {
        let limit = self.dt_limit(lo, hi) * fraction;
        if !limit.is_finite() || self.t_end == T::zero() {
            return if self.t_end > T::zero() { self.t_end } else { T::one() };
        }
        let steps = (self.t_end / limit).ceil().max(T::one());
        self.t_end / steps
    }
}

/// Per-step intermediate states, handed to a [`StepObserver`].
pub struct StepContext<'a, T> {
    pub step: usize,
    /// Time at the end of the step.
    pub time: T,
    pub dt: T,
    pub before: &'a Field<T>,
    pub convected: &'a Field<T>,
    pub diffused: &'a Field<T>,
    pub after: &'a Field<T>,
}

/// Hook invoked after every step, e.g. to accumulate kinetic measures.
pub trait StepObserver<T> {
    fn observe(&mut self, solver: &Solver<T>, ctx: &StepContext<'_, T>) -> Result<()>;
}

impl<T> StepObserver<T> for () {
    fn observe(&mut self, _: &Solver<T>, _: &StepContext<'_, T>) -> Result<()> {
        Ok(())
    }
}

/// A validated configuration with precomputed periodic neighbour tables.
#[derive(Clone, Debug)]
pub struct Solver<T> {
    config: SolverConfig<T>,
    right: [Vec<usize>; 2],
    left: [Vec<usize>; 2],
}

impl<T: Real> Solver<T> {
    pub fn new(config: SolverConfig<T>) -> Result<Self> {
        config.validate()?;
        let grid = config.grid;
        let table = |axis: usize, off: isize| -> Vec<usize> {
            if axis < grid.dim() {
                (0..grid.len()).map(|i| grid.neighbor(i, axis, off)).collect()
            } else {
                Vec::new()
            }
        };
        let right = [table(0, 1), table(1, 1)];
        let left = [table(0, -1), table(1, -1)];
        Ok(Self { config, right, left })
    }

    pub fn config(&self) -> &SolverConfig<T> {
        &self.config
    }

    pub fn model(&self) -> &ModelSpec<T> {
        &self.config.model
    }

    pub fn grid(&self) -> &TorusGrid {
        &self.config.grid
    }

    /// Right neighbour along `axis` (periodic).
    pub fn right_neighbor(&self, axis: usize, index: usize) -> usize {
        self.right[axis][index]
    }

    fn ratio(&self, dt: T) -> T {
        dt / self.config.grid.spacing::<T>()
    }

    /// Conservative monotone update for `div B^τ(u)`.
    pub fn convection_substep(&self, u: &Field<T>, dt: T) -> Result<Field<T>> {
        self.check(u)?;
        let model = &self.config.model;
        if !model.has_flux() {
            return Ok(u.clone());
        }
        let (lo, hi) = u.min_max();
        let admissible = self.config.convective_dt_limit(lo, hi);
        if dt > admissible {
            return Err(Error::CflViolation {
                stage: "convection",
                dt: dt.to_f64_lossy(),
                admissible: admissible.to_f64_lossy(),
            });
        }
        let lambda = self.ratio(dt);
        let values = u.values();
        let n = values.len();
        let mut face = vec![T::zero(); n];
        let mut out = values.to_vec();
        match self.config.flux_scheme {
            FluxScheme::EngquistOsher => {
                let split: Vec<(T, T)> = values.iter().map(|&v| model.flux_tau_split(v)).collect();
                for axis in 0..self.config.grid.dim() {
                    let right = &self.right[axis];
                    for i in 0..n {
                        face[i] = split[i].0 + split[right[i]].1;
                    }
                    self.apply_face_difference(&face, axis, lambda, &mut out);
                }
            }
            FluxScheme::LaxFriedrichs => {
                let flux: Vec<T> = values.iter().map(|&v| model.flux_tau(v)).collect();
                let speed = model.max_abs_b_tau(lo, hi);
                let half = T::lit(0.5);
                for axis in 0..self.config.grid.dim() {
                    let right = &self.right[axis];
                    for i in 0..n {
                        let r = right[i];
                        face[i] = half * (flux[i] + flux[r]) - half * speed * (values[r] - values[i]);
                    }
                    self.apply_face_difference(&face, axis, lambda, &mut out);
                }
            }
        }
        Ok(Field::from_raw(*u.grid(), out))
    }

    /// `out_i -= λ (F_{i+1/2} - F_{i-1/2})`.
    fn apply_face_difference(&self, face: &[T], axis: usize, lambda: T, out: &mut [T]) {
        let left = &self.left[axis];
        for (i, o) in out.iter_mut().enumerate() {
            *o = *o - lambda * (face[i] - face[left[i]]);
        }
    }

    /// Conservative update for `ΔΦ(u)` with `Φ′ = A^{κ,τ}`.
    ///
    /// The face flux `(Φ(u_r) - Φ(u_l)) / h` uses the chord average of
    /// `A^{κ,τ}` between the two cell values.
    pub fn diffusion_substep(&self, u: &Field<T>, dt: T) -> Result<Field<T>> {
        self.check(u)?;
        let model = &self.config.model;
        if !model.has_diffusion() {
            return Ok(u.clone());
        }
        match self.config.diffusion_scheme {
            DiffusionScheme::Explicit => {
                let (lo, hi) = u.min_max();
                let admissible = self.config.diffusive_dt_limit(lo, hi);
                if dt > admissible {
                    return Err(Error::CflViolation {
                        stage: "diffusion",
                        dt: dt.to_f64_lossy(),
                        admissible: admissible.to_f64_lossy(),
                    });
                }
                let h = self.config.grid.spacing::<T>();
                let lambda = dt / (h * h);
                let phi: Vec<T> = u.values().iter().map(|&v| model.diffusion_potential(v)).collect();
                let mut out = u.values().to_vec();
                let two = T::lit(2.0);
                for axis in 0..self.config.grid.dim() {
                    let (right, left) = (&self.right[axis], &self.left[axis]);
                    for (i, o) in out.iter_mut().enumerate() {
                        *o = *o + lambda * (phi[right[i]] - two * phi[i] + phi[left[i]]);
                    }
                }
                Ok(Field::from_raw(*u.grid(), out))
            }
            DiffusionScheme::SemiImplicit => self.semi_implicit_diffusion(u, dt),
        }
    }

    fn semi_implicit_diffusion(&self, u: &Field<T>, dt: T) -> Result<Field<T>> {
        let model = &self.config.model;
        let h = self.config.grid.spacing::<T>();
        let lambda = dt / (h * h);
        let values = u.values();
        let n = values.len();
        let dim = self.config.grid.dim();
        let phi: Vec<T> = values.iter().map(|&v| model.diffusion_potential(v)).collect();
        let close = T::lit(1e-7);
        let mut coef: [Vec<T>; 2] = [vec![T::zero(); n], vec![T::zero(); n]];
        for axis in 0..dim {
            for i in 0..n {
                let r = self.right[axis][i];
                let du = values[r] - values[i];
                coef[axis][i] = if du.abs() > close * (T::one() + values[i].abs()) {
                    (phi[r] - phi[i]) / du
                } else {
                    model.regularized_a(T::lit(0.5) * (values[i] + values[r]))
                };
            }
        }
        let diag: Vec<T> = (0..n)
            .map(|i| {
                let mut d = T::one();
                for axis in 0..dim {
                    d = d + lambda * (coef[axis][i] + coef[axis][self.left[axis][i]]);
                }
                d
            })
            .collect();
        let apply = |x: &[T], y: &mut [T]| {
            for i in 0..n {
                let mut acc = x[i];
                for axis in 0..dim {
                    let r = self.right[axis][i];
                    let l = self.left[axis][i];
                    acc = acc + lambda * (coef[axis][i] * (x[i] - x[r]) + coef[axis][l] * (x[i] - x[l]));
                }
                y[i] = acc;
            }
        };
        let solution = conjugate_gradient(apply, &diag, values)?;
        Ok(Field::from_raw(*u.grid(), solution))
    }

    /// One full step `u(t_n) → u(t_{n+1})` driven by `path`.
    pub fn step(&self, u: &Field<T>, path: &WienerPath, step_index: usize) -> Result<Field<T>> {
        let mut increments = vec![0.0; path.modes()];
        self.check_path(path)?;
        path.fill_increments(step_index, &mut increments)?;
        let (_, _, out) = self.advance(u, &increments, step_index)?;
        Ok(out)
    }

    /// Deterministic part plus noise for the given increments; returns the
    /// convected, diffused and final states.
    pub fn advance(&self, u: &Field<T>, increments: &[f64], step_index: usize) -> Result<(Field<T>, Field<T>, Field<T>)> {
        let dt = self.config.dt;
        let convected = self.convection_substep(u, dt)?;
        let diffused = self.diffusion_substep(&convected, dt)?;
        let mut out = diffused.clone();
        if !self.config.noise.is_deterministic() {
            let inc: Vec<T> = increments.iter().map(|&d| T::lit(d)).collect();
            noise::add_noise(&diffused, &self.config.noise, &inc, out.values_mut())?;
        }
        if let Some(index) = out.values().iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite { step: step_index, index });
        }
        Ok((convected, diffused, out))
    }

    fn check(&self, u: &Field<T>) -> Result<()> {
        if *u.grid() != self.config.grid {
            return Err(Error::GridMismatch(format!("field on {:?}, solver on {:?}", u.grid(), self.config.grid)));
        }
        Ok(())
    }

    fn check_path(&self, path: &WienerPath) -> Result<()> {
        if path.modes() != self.config.noise.modes() {
            return Err(Error::Config(format!(
                "Wiener path has {} modes, noise model {}",
                path.modes(),
                self.config.noise.modes()
            )));
        }
        let dt = self.config.dt.to_f64_lossy();
        if (path.dt() - dt).abs() > 1e-12 * dt {
            return Err(Error::Config(format!("Wiener path dt {} differs from solver dt {dt}", path.dt())));
        }
        Ok(())
    }

    /// The Wiener path a seed induces for this configuration.
    pub fn path_for_seed(&self, seed: u64) -> Result<WienerPath> {
        WienerPath::new(seed, self.config.dt.to_f64_lossy(), self.config.noise.modes(), self.config.step_count()?)
    }

    pub fn solve(&self, u0: &Field<T>, seed: u64) -> Result<Trajectory<T>> {
        let path = self.path_for_seed(seed)?;
        self.solve_with_path(u0, &path, &mut ())
    }

    /// Runs to `t_end` with an explicit path and a per-step observer.
    pub fn solve_with_path(&self, u0: &Field<T>, path: &WienerPath, observer: &mut impl StepObserver<T>) -> Result<Trajectory<T>> {
        self.check(u0)?;
        self.check_path(path)?;
        let steps = self.config.step_count()?;
        if path.horizon() < steps {
            return Err(Error::HorizonExceeded { step: steps, horizon: path.horizon() });
        }
        let dt = self.config.dt;
        let mut traj = Trajectory::new(self.config.lp_exponent, u0)?;
        traj.seed = path.seed();
        let mut dissipation = T::zero();
        traj.record(T::zero(), u0, dissipation, self.config.keep_states)?;
        let mut u = u0.clone();
        let mut increments = vec![0.0; path.modes()];
        for step in 0..steps {
            path.fill_increments(step, &mut increments)?;
            let (convected, diffused, next) = self.advance(&u, &increments, step)?;
            let time = dt * T::from_usize_lossy(step + 1);
            dissipation = dissipation + self.parabolic_dissipation(&diffused) * dt;
            observer.observe(
                self,
                &StepContext { step, time, dt, before: &u, convected: &convected, diffused: &diffused, after: &next },
            )?;
            u = next;
            traj.track_sup(&u)?;
            if (step + 1) % self.config.record_every == 0 || step + 1 == steps {
                traj.record(time, &u, dissipation, self.config.keep_states)?;
            }
        }
        traj.final_state = u;
        Ok(traj)
    }

    /// `Σ_i |∇_h Σ(u)|² hᴺ` with `Σ′ = σ^{κ,τ}` (forward differences).
    pub fn parabolic_dissipation(&self, u: &Field<T>) -> T {
        let model = &self.config.model;
        if !model.has_diffusion() {
            return T::zero();
        }
        let s: Vec<T> = u.values().iter().map(|&v| model.sigma_primitive(v)).collect();
        let h = self.config.grid.spacing::<T>();
        let mut total = T::zero();
        for axis in 0..self.config.grid.dim() {
            for i in 0..s.len() {
                let d = s[self.right[axis][i]] - s[i];
                total = total + d * d;
            }
        }
        total * self.config.grid.cell_volume::<T>() / (h * h)
    }
}

/// Jacobi-preconditioned conjugate gradients for an SPD operator.
fn conjugate_gradient<T: Real>(apply: impl Fn(&[T], &mut [T]), diag: &[T], b: &[T]) -> Result<Vec<T>> {
    let n = b.len();
    let dot = |x: &[T], y: &[T]| -> T { x.iter().zip(y).map(|(&a, &b)| a * b).sum() };
    let norm_b = dot(b, b).sqrt();
    let tol = T::lit(1e-13).max(T::epsilon() * T::lit(100.0)) * norm_b.max(T::tiny());
    let mut x = b.to_vec();
    let mut ax = vec![T::zero(); n];
    apply(&x, &mut ax);
    let mut r: Vec<T> = b.iter().zip(&ax).map(|(&bi, &a)| bi - a).collect();
    let mut z: Vec<T> = r.iter().zip(diag).map(|(&ri, &d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let max_iter = 4 * n + 200;
    let mut residual = dot(&r, &r).sqrt();
    for it in 0..max_iter {
        if residual <= tol {
            return Ok(x);
        }
        apply(&p, &mut ax);
        let pap = dot(&p, &ax);
        if !(pap > T::zero()) {
            return Err(Error::LinearSolveFailure { iterations: it, residual: residual.to_f64_lossy() });
        }
        let step = rz / pap;
        for i in 0..n {
            x[i] = x[i] + step * p[i];
            r[i] = r[i] - step * ax[i];
            z[i] = r[i] / diag[i];
        }
        let rz_next = dot(&r, &z);
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
        residual = dot(&r, &r).sqrt();
    }
    if residual <= tol {
        Ok(x)
    } else {
        Err(Error::LinearSolveFailure { iterations: max_iter, residual: residual.to_f64_lossy() })
    }
}

#[cfg(test)]
mod tests;
