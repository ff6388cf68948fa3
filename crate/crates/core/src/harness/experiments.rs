use std::f64::consts::PI;
use std::io::Write;

use rand_chacha::ChaCha8Rng;
use rand_core::SeedableRng;

use super::config::{FitBlock, InitialDatum, ModelBlock, NoiseBlock, ResolvedConfig, SolverBlock};
use super::{ensemble, Check, Outputs};
use crate::analysis::{
    averaged_multiplier_apply, contraction_gap, littlewood_paley_blocks, lp_moment_check, lp_moment_stability,
    multiplier_omega_sup, regularity_exponent_fit, truncation_property_probe, write_block_csv, EnsembleResult,
    SpaceTimeXiArray, TimeWindow,
};
use crate::error::{Error, Result};
use crate::field::{forward_transform, write_binary, Field};
use crate::kinetic::{
    chain_rule_defect, initial_tail_profile, kinetic_function, measure_decay_profile, reconstruct_from_kinetic,
    tail_domination, write_decay_csv, KineticAccumulator, Poly, XiGrid,
};
use crate::model::{fit_exponents, FitSummary, predicted_regularity, write_fit_csv, Localization, OmegaSampling};
use crate::multiplier_kernels::BumpSpec;
use crate::noise::{standard_normal, NoiseFamily, WienerPath};
use crate::quad;
use crate::solver::{vanishing_viscosity_ladder, write_norms_csv, DiffusionScheme, Solver, SolverConfig};

type Runner = fn(&ResolvedConfig, &mut Outputs) -> Result<Vec<Check>>;

pub(super) struct Entry {
    pub name: &'static str,
    pub doc: &'static str,
    pub canonical: fn() -> ResolvedConfig,
    pub run: Runner,
}

pub(super) static REGISTRY: &[Entry] = &[
    Entry {
        name: "heat-exact",
        doc: "pure heat flow of cos x against the exact decaying mode",
        canonical: heat_exact_config,
        run: heat_exact,
    },
    Entry {
        name: "burgers-shock",
        doc: "Riemann problem for Burgers: Rankine-Hugoniot shock speed and discrete entropy inequalities",
        canonical: burgers_shock_config,
        run: burgers_shock,
    },
    Entry {
        name: "comparison-deterministic",
        doc: "ordered data stay ordered at every step over a grid of viscosities and truncations",
        canonical: comparison_config,
        run: comparison_deterministic,
    },
    Entry {
        name: "contraction",
        doc: "ensemble mean of the positive-part L1 gap between two solutions never grows",
        canonical: contraction_config,
        run: contraction,
    },
    Entry {
        name: "contraction-coupled",
        doc: "coupled noisy pairs: gap at T within 3 stderr plus a dt-consistent discretization term",
        canonical: contraction_coupled_config,
        run: contraction_coupled,
    },
    Entry {
        name: "lp-moments",
        doc: "E sup_t |u|_2^4 relative to 1 + E|u0|_2^4 across dt refinement, plus a Gaussian closed form",
        canonical: lp_moments_config,
        run: lp_moments,
    },
    Entry {
        name: "measure-decay",
        doc: "dyadic xi-shell profile of the kinetic measure and its domination by initial tails",
        canonical: measure_decay_config,
        run: measure_decay,
    },
    Entry {
        name: "vanishing-viscosity-cauchy",
        doc: "consecutive L1 distances along a halving viscosity ladder are nonincreasing",
        canonical: cauchy_config,
        run: vanishing_viscosity_cauchy,
    },
    Entry {
        name: "nondegeneracy-fit",
        doc: "brute-force (alpha, beta) fit of the sublevel-set measure against the closed forms",
        canonical: nondegeneracy_config,
        run: nondegeneracy_fit,
    },
    Entry {
        name: "regularity-burgers",
        doc: "Littlewood-Paley block decay of noisy Burgers from rough data versus the predicted exponent",
        canonical: regularity_burgers_config,
        run: regularity,
    },
    Entry {
        name: "regularity-porous",
        doc: "Littlewood-Paley block decay for porous-media diffusion versus the predicted exponent",
        canonical: regularity_porous_config,
        run: regularity,
    },
    Entry {
        name: "multiplier-uniformity",
        doc: "kernel L1 norms of the symbol cutoffs across delta and xi, and the L2 averaging bound",
        canonical: multiplier_config,
        run: multiplier_uniformity,
    },
    Entry {
        name: "invariants",
        doc: "mass conservation, Plancherel, block reconstruction, layer cake and chain rule",
        canonical: invariants_config,
        run: invariants,
    },
];

pub(super) fn lookup(name: &str) -> Result<&'static Entry> {
    REGISTRY
        .iter()
        .find(|e| e.name == name)
        .ok_or_else(|| Error::Config(format!("unknown experiment `{name}` (see `kspde list`)")))
}

fn flux(k: u32) -> ModelBlock {
    ModelBlock { flux_exponent: Some(k), diffusion_exponent: None, viscosity: 0.0, truncation: 0.0 }
}

fn porous(k: u32, m: f64) -> ModelBlock {
    ModelBlock { diffusion_exponent: Some(m), ..flux(k) }
}

fn default_noise() -> NoiseBlock {
    NoiseBlock { family: NoiseFamily::MultiplicativeDefault, alpha: vec![0.5, 0.25, 0.125, 0.0625] }
}

fn sine(amplitude: f64, shift: f64, offset: f64) -> InitialDatum {
    InitialDatum::Sine { amplitude, shift, offset }
}

fn base(name: &str, members: usize, model: ModelBlock, noise: NoiseBlock, solver: SolverBlock, initial: Vec<InitialDatum>) -> ResolvedConfig {
    ResolvedConfig { experiment: name.into(), members, seed: 0, model, noise, solver, initial, fit: None }
}

fn f64_csv_row<W: Write>(w: &mut W, values: &[f64]) -> Result<()> {
    let row: Vec<String> = values.iter().map(|v| format!("{v:.16e}")).collect();
    writeln!(w, "{}", row.join(","))?;
    Ok(())
}

// ---------------------------------------------------------------- heat-exact

fn heat_exact_config() -> ResolvedConfig {
    let model = ModelBlock { flux_exponent: None, diffusion_exponent: None, viscosity: 1.0, truncation: 0.0 };
    base(
        "heat-exact",
        1,
        model,
        NoiseBlock::deterministic(),
        SolverBlock::line(128, 0.5),
        vec![InitialDatum::Cosine { amplitude: 1.0, frequency: 1.0 }],
    )
}

fn heat_exact(config: &ResolvedConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let (amplitude, frequency) = match config.initial[0] {
        InitialDatum::Cosine { amplitude, frequency } => (amplitude, frequency),
        _ => return Err(Error::Config("heat-exact needs a cosine initial datum".into())),
    };
    let m = &config.model;
    if m.flux_exponent.is_some() || m.diffusion_exponent.is_some() || !config.noise.alpha.is_empty() {
        return Err(Error::Config("heat-exact needs flux, diffusion and noise switched off".into()));
    }
    let solver = Solver::new(config.solver_config()?)?;
    let u0 = config.datum(0, config.seed)?;
    let traj = solver.solve(&u0, config.seed)?;
    let t = traj.final_time();
    let decay = (-m.viscosity * frequency * frequency * t).exp();
    let exact = Field::from_fn(*u0.grid(), |x: [f64; 2]| amplitude * decay * (frequency * x[0]).cos());
    let err = traj.final_state.zip_map(&exact, |a, b| a - b)?.l2_norm();
    write_norms_csv(&traj, out.create("norms.csv")?)?;
    write_binary(&traj.final_state, out.path("final.kspd"))?;
    Ok(vec![Check::at_most("l2-error", err, 1e-3, 0.0)])
}

// ---------------------------------------------------------------- burgers-shock

fn burgers_shock_config() -> ResolvedConfig {
    base(
        "burgers-shock",
        1,
        flux(2),
        NoiseBlock::deterministic(),
        SolverBlock::line(512, 1.0),
        vec![InitialDatum::Step { left: 1.0, right: 0.0 }],
    )
}

fn burgers_shock(config: &ResolvedConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let (left, right) = match config.initial[0] {
        InitialDatum::Step { left, right } if left > right => (left, right),
        _ => return Err(Error::Config("burgers-shock needs a step datum with left > right".into())),
    };
    let cfg = config.solver_config()?;
    let solver = Solver::new(cfg)?;
    let grid = *solver.grid();
    let h = grid.spacing::<f64>();
    let t_end = solver.config().t_end;
    let model = solver.model();
    let speed = (model.flux(left) - model.flux(right)) / (left - right);
    let u0 = config.datum(0, config.seed)?;
    let xi = XiGrid::covering(right, left, 256)?;
    let mut acc = KineticAccumulator::new(xi, &grid, t_end, 1, grid.points_per_dim())?;
    let path = solver.path_for_seed(config.seed)?;
    let traj = solver.solve_with_path(&u0, &path, &mut acc)?;

    // the discrete jump sits between the cells at π - h and π
    let predicted = (PI - 0.5 * h + speed * t_end).rem_euclid(2.0 * PI);
    let mid = 0.5 * (left + right);
    let u = traj.final_state.values();
    let n = u.len();
    let torus = |a: f64, b: f64| {
        let d = (a - b).abs();
        d.min(2.0 * PI - d)
    };
    let position = (0..n)
        .filter(|&i| u[i] >= mid && u[(i + 1) % n] < mid)
        .map(|i| (i as f64 + (u[i] - mid) / (u[i] - u[(i + 1) % n])) * h)
        .min_by(|a, b| torus(*a, predicted).total_cmp(&torus(*b, predicted)))
        .ok_or_else(|| Error::Config("no shock found in the final state".into()))?;
    let violation = acc.entropy.clipped / t_end;

    write_binary(&traj.final_state, out.path("final.kspd"))?;
    write_norms_csv(&traj, out.create("norms.csv")?)?;
    acc.entropy.write_csv(out.create("entropy_defect.csv")?)?;
    Ok(vec![
        Check::at_most("shock-position-error", torus(position, predicted), 2.0 * h, 0.0),
        Check::at_most("entropy-violation-rate", violation, h, 0.0),
    ])
}

// ---------------------------------------------------------------- comparison

const COMPARISON_VISCOSITIES: [f64; 3] = [0.0, 0.05, 0.2];
const COMPARISON_TRUNCATIONS: [f64; 3] = [0.0, 0.5, 1.0];

fn comparison_config() -> ResolvedConfig {
    base(
        "comparison-deterministic",
        1,
        porous(2, 3.0),
        NoiseBlock::deterministic(),
        SolverBlock::line(128, 0.5),
        vec![sine(1.0, 0.0, 0.2), sine(0.8, 0.3, -0.4)],
    )
}

/// Runs the viscosity × truncation grid; the model block's own `viscosity` and
/// `truncation` are replaced by the grid values.
fn comparison_deterministic(config: &ResolvedConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let upper = config.datum(0, config.seed)?;
    let lower = config.datum(1, config.seed)?;
    if upper.zip_map(&lower, |a, b| a - b)?.values().iter().any(|&d| d < 0.0) {
        return Err(Error::Config("comparison needs initial data ordered as initial[0] >= initial[1]".into()));
    }
    let mut w = out.create("order_violation.csv")?;
    writeln!(w, "viscosity,truncation,max_violation")?;
    let mut worst: f64 = 0.0;
    for &kappa in &COMPARISON_VISCOSITIES {
        for &tau in &COMPARISON_TRUNCATIONS {
            let model = ModelBlock { viscosity: kappa, truncation: tau, ..config.model.clone() };
            let mut cfg = config.solver.build(model.build()?, config.noise.build()?)?;
            cfg.keep_states = true;
            cfg.record_every = 1;
            let solver = Solver::new(cfg)?;
            let a = solver.solve(&upper, config.seed)?;
            let b = solver.solve(&lower, config.seed)?;
            let mut violation: f64 = 0.0;
            for (x, y) in a.states.iter().zip(&b.states) {
                for (p, q) in x.values().iter().zip(y.values()) {
                    violation = violation.max(q - p);
                }
            }
            f64_csv_row(&mut w, &[kappa, tau, violation])?;
            worst = worst.max(violation);
        }
    }
    w.flush()?;
    Ok(vec![Check::at_most("max-order-violation", worst, 0.0, 0.0)])
}

// ---------------------------------------------------------------- contraction

fn contraction_config() -> ResolvedConfig {
    base(
        "contraction",
        8,
        porous(2, 3.0),
        NoiseBlock::deterministic(),
        SolverBlock::line(128, 0.5),
        vec![sine(1.0, 0.0, 0.2), sine(0.8, 0.3, 0.0)],
    )
}

/// Relative roundoff allowance on the gap for schemes that contract exactly.
const ROUNDOFF: f64 = 1e-12;

fn gap_series(config: &ResolvedConfig, cfg: &SolverConfig<f64>) -> Result<(Vec<f64>, EnsembleResult)> {
    let solver = Solver::new(cfg.clone())?;
    let series = ensemble(&config.member_seeds(), |_, seed| {
        let a = solver.solve(&config.datum(0, seed)?, seed)?;
        let b = solver.solve(&config.datum(1, seed)?, seed)?;
        Ok((a.times.clone(), contraction_gap(&a, &b)?))
    })?;
    let times = series[0].0.clone();
    let stats = EnsembleResult::from_members(series.into_iter().map(|s| s.1).collect())?;
    Ok((times, stats))
}

fn write_gap_csv(out: &mut Outputs, times: &[f64], stats: &EnsembleResult) -> Result<()> {
    let mut w = out.create("gap.csv")?;
    writeln!(w, "t,mean_gap,stderr")?;
    for i in 0..times.len() {
        f64_csv_row(&mut w, &[times[i], stats.mean[i], stats.stderr[i]])?;
    }
    w.flush()?;
    Ok(())
}

fn contraction(config: &ResolvedConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let mut cfg = config.solver_config()?;
    cfg.keep_states = true;
    let (times, stats) = gap_series(config, &cfg)?;
    write_gap_csv(out, &times, &stats)?;
    let g0 = stats.mean[0];
    let growth = stats.mean.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max);
    let tolerance = 3.0 * stats.last_stderr() + ROUNDOFF * g0;
    Ok(vec![Check::at_most("max-mean-gap-growth", growth, tolerance, stats.last_stderr())])
}

fn contraction_coupled_config() -> ResolvedConfig {
    ResolvedConfig { experiment: "contraction-coupled".into(), members: 32, noise: default_noise(), ..contraction_config() }
}

/// Runs at `dt`, `dt/2` and `dt/4` on one Brownian motion. The discretization
/// term is `C_dt = |E gap_dt(T) - E gap_{dt/2}(T)|`, and it must halve with `dt`.
fn contraction_coupled(config: &ResolvedConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let coarse = config.solver_config()?;
    let steps = coarse.step_count()?;
    let levels: Vec<SolverConfig<f64>> = [1usize, 2, 4]
        .iter()
        .map(|&r| {
            let mut c = coarse.clone();
            c.dt = coarse.dt / r as f64;
            c.keep_states = true;
            c.record_every = if r == 1 { 1 } else { steps * r };
            Ok(c)
        })
        .collect::<Result<_>>()?;
    let solvers = levels.iter().cloned().map(Solver::new).collect::<Result<Vec<_>>>()?;
    let modes = coarse.noise.modes();
    let fine_dt = levels[2].dt;
    let members = ensemble(&config.member_seeds(), |_, seed| {
        let fine = WienerPath::new(seed, fine_dt, modes, steps * 4)?;
        let u0 = config.datum(0, seed)?;
        let v0 = config.datum(1, seed)?;
        let mut finals = Vec::with_capacity(3);
        let mut series = Vec::new();
        for (solver, factor) in solvers.iter().zip([4usize, 2, 1]) {
            let path = fine.coarsen(factor)?;
            let a = solver.solve_with_path(&u0, &path, &mut ())?;
            let b = solver.solve_with_path(&v0, &path, &mut ())?;
            let gap = contraction_gap(&a, &b)?;
            if factor == 4 {
                series = gap.clone();
            }
            finals.push(*gap.last().expect("at least one record"));
        }
        Ok((series, finals))
    })?;
    let times: Vec<f64> = (0..=steps).map(|i| coarse.dt * i as f64).collect();
    let series = EnsembleResult::from_members(members.iter().map(|m| m.0.clone()).collect())?;
    write_gap_csv(out, &times, &series)?;
    let finals = EnsembleResult::from_members(members.iter().map(|m| m.1.clone()).collect())?;
    let c_coarse = (finals.mean[0] - finals.mean[1]).abs();
    let c_fine = (finals.mean[1] - finals.mean[2]).abs();
    let ratio = c_coarse / c_fine;
    let gap0 = series.mean[0];
    let bound = gap0 + 3.0 * finals.stderr[0] + c_coarse;
    let mut w = out.create("dt_consistency.csv")?;
    writeln!(w, "dt,mean_gap_T,stderr")?;
    for (i, c) in levels.iter().enumerate() {
        f64_csv_row(&mut w, &[c.dt, finals.mean[i], finals.stderr[i]])?;
    }
    w.flush()?;
    Ok(vec![
        Check::at_most("mean-gap-at-T", finals.mean[0], bound, finals.stderr[0]),
        Check::flag("c-dt-halving-ratio", (1.4..=2.6).contains(&ratio), ratio, 2.0),
    ])
}

// ---------------------------------------------------------------- lp-moments

fn lp_moments_config() -> ResolvedConfig {
    let model = ModelBlock { flux_exponent: None, diffusion_exponent: Some(3.0), viscosity: 0.0, truncation: 0.0 };
    let mut solver = SolverBlock::line(128, PI / 2.0);
    solver.diffusion_scheme = DiffusionScheme::SemiImplicit;
    base("lp-moments", 64, model, default_noise(), solver, vec![sine(1.0, 0.0, 0.0)])
}

/// `E (sup_{[0,1]} |B|)^p` for a standard Brownian motion, from the series
/// `P(sup |B| < a) = (4/π) Σ_k (-1)^k/(2k+1) exp(-(2k+1)²π²/(8a²))`.
pub(crate) fn brownian_sup_moment(p: f64) -> f64 {
    let below = |a: f64| -> f64 {
        if a <= 0.0 {
            return 0.0;
        }
        let mut s = 0.0;
        for k in 0..400 {
            let o = (2 * k + 1) as f64;
            let term = (-o * o * PI * PI / (8.0 * a * a)).exp() / o;
            s += if k % 2 == 0 { term } else { -term };
            if term < 1e-18 {
                break;
            }
        }
        4.0 / PI * s
    };
    quad::integrate(|a: f64| p * a.powf(p - 1.0) * (1.0 - below(a)).max(0.0), 0.0, 12.0, 600)
}

const LP_DT_FACTORS: [usize; 3] = [4, 2, 1];

/// The step is `factor · h` for each factor; `t_end` must be a multiple of `4h`.
fn lp_moments(config: &ResolvedConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let base_cfg = config.solver_config()?;
    let h = base_cfg.grid.spacing::<f64>();
    let mut fine_cfg = base_cfg.clone();
    fine_cfg.dt = h;
    let steps = fine_cfg.step_count()?;
    let modes = base_cfg.noise.modes();
    let seeds = config.member_seeds();
    let u0s: Vec<Field<f64>> = seeds.iter().map(|&s| config.datum(0, s)).collect::<Result<_>>()?;

    let mut reports = Vec::new();
    let mut w = out.create("moments.csv")?;
    writeln!(w, "dt,moment,stderr,initial_moment,ratio")?;
    for &factor in &LP_DT_FACTORS {
        let mut c = base_cfg.clone();
        c.dt = h * factor as f64;
        c.validate()?;
        let solver = Solver::new(c.clone())?;
        let trajs = ensemble(&seeds, |member, seed| {
            let path = WienerPath::new(seed, h, modes, steps)?.coarsen(factor)?;
            solver.solve_with_path(&u0s[member], &path, &mut ())
        })?;
        let r = lp_moment_check(&trajs, &u0s, 2.0, 2.0)?;
        f64_csv_row(&mut w, &[c.dt, r.moment, r.moment_stderr, r.initial_moment, r.ratio])?;
        reports.push(r);
    }
    w.flush()?;
    let ratios: Vec<f64> = reports.iter().map(|r| r.ratio).collect();
    let spread = ratios.iter().copied().fold(0.0, f64::max) / ratios.iter().copied().fold(f64::INFINITY, f64::min);

    // additive noise without flux or diffusion: u = u₀ + W with Var W(t) = D t
    let additive = NoiseBlock { family: NoiseFamily::Additive, alpha: config.noise.alpha.clone() };
    let c = SolverBlock { dt: Some(h), ..config.solver.clone() }.build(crate::model::ModelSpec::inert(), additive.build()?)?;
    let solver = Solver::new(c.clone())?;
    let u0 = &u0s[0];
    if u0.mass().abs() > 1e-12 * u0.l1_norm().max(1.0) {
        return Err(Error::Config("the Gaussian closed form needs a mean-zero initial datum".into()));
    }
    let sups = ensemble(&seeds, |_, seed| Ok(solver.solve(u0, seed)?.sup_l2.powi(4)))?;
    let est = EnsembleResult::from_scalars(sups)?;
    let a = u0.l2_norm().powi(2);
    let dt_total = c.noise.amplitude() * c.t_end;
    let oracle =
        a * a + 4.0 * PI * a * dt_total * brownian_sup_moment(2.0) + 4.0 * PI * PI * dt_total * dt_total * brownian_sup_moment(4.0);
    let rel = (est.mean[0] / oracle - 1.0).abs();
    Ok(vec![
        Check::flag("ratio-spread-across-dt", lp_moment_stability(&reports, 2.0), spread, 2.0),
        Check::at_most("additive-oracle-relative-error", rel, 0.25, est.stderr[0] / oracle),
    ])
}

// ---------------------------------------------------------------- measure-decay

fn measure_decay_config() -> ResolvedConfig {
    base("measure-decay", 8, porous(2, 3.0), default_noise(), SolverBlock::line(128, 0.5), vec![sine(0.9, 0.0, 0.0)])
}

/// Geometric rate of the `αⁿ` term of the tail envelope.
const TAIL_RATE: f64 = 0.5;

fn measure_decay(config: &ResolvedConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let cfg = config.solver_config()?;
    let solver = Solver::new(cfg.clone())?;
    let seeds = config.member_seeds();
    let u0s: Vec<Field<f64>> = seeds.iter().map(|&s| config.datum(0, s)).collect::<Result<_>>()?;
    let envelope = u0s.iter().map(|u| u.max_abs()).fold(0.0, f64::max);
    let (xi, ell_max) = XiGrid::dyadic_for_envelope(4.0 * envelope, 512)?;
    let grid = cfg.grid;
    let hists = ensemble(&seeds, |member, seed| {
        let mut acc = KineticAccumulator::new(xi, &grid, cfg.t_end, 4, 16)?;
        let path = solver.path_for_seed(seed)?;
        solver.solve_with_path(&u0s[member], &path, &mut acc)?;
        Ok(acc.combined())
    })?;
    let mut mean = hists[0].clone();
    for h in &hists[1..] {
        mean.merge(h)?;
    }
    mean.scale(1.0 / hists.len() as f64);
    let levels: Vec<u32> = (0..=ell_max).collect();
    let profile = measure_decay_profile(&mean, &levels)?;
    let tails = initial_tail_profile(&u0s, &levels);
    let tail = tail_domination(&profile.scaled_mass, &tails, TAIL_RATE, 1);
    mean.write_csv(out.create("measure.csv")?)?;
    write_decay_csv(&profile, out.create("decay.csv")?)?;
    let worst_excess = profile
        .scaled_mass
        .iter()
        .zip(&tail.envelope)
        .map(|(p, e)| if *e > 0.0 { p / e } else if *p > 0.0 { f64::MAX } else { 0.0 })
        .fold(0.0, f64::max);
    let k = profile.scaled_mass.len();
    let last_ratio = profile.scaled_mass[k - 1] / profile.scaled_mass[0];
    Ok(vec![
        Check::flag("decay-profile", profile.pass, last_ratio, 0.01),
        Check::flag("tail-domination", tail.pass, worst_excess, 1.0 + 1e-9),
        Check::at_most("clipped-fraction", mean.clipped_fraction(), 0.05, 0.0),
    ])
}

// ---------------------------------------------------------------- vanishing viscosity

fn cauchy_config() -> ResolvedConfig {
    let model = ModelBlock { viscosity: 0.2, ..flux(2) };
    let noise = NoiseBlock { family: NoiseFamily::MultiplicativeDefault, alpha: vec![0.1, 0.05] };
    base("vanishing-viscosity-cauchy", 16, model, noise, SolverBlock::line(128, 0.5), vec![sine(1.0, 0.0, 0.0)])
}

/// Ladder `κ, κ/2, κ/4, κ/8` from the model's viscosity, on the step admissible for `κ`.
fn vanishing_viscosity_cauchy(config: &ResolvedConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let kappa = config.model.viscosity;
    if !(kappa > 0.0) {
        return Err(Error::Config("the viscosity ladder starts from a positive model viscosity".into()));
    }
    let cfg = config.solver_config()?;
    let kappas: Vec<f64> = (0..4).map(|i| kappa / 2f64.powi(i)).collect();
    let u0 = config.datum(0, config.seed)?;
    let report = vanishing_viscosity_ladder(&cfg, &u0, &config.member_seeds(), &kappas, true)?;
    let mut w = out.create("cauchy.csv")?;
    writeln!(w, "kappa,next_kappa,l1_difference,stderr")?;
    for i in 0..report.differences.len() {
        f64_csv_row(&mut w, &[kappas[i], kappas[i + 1], report.differences[i], report.stderr[i]])?;
    }
    w.flush()?;
    let worst = report.differences.windows(2).map(|d| d[1] / d[0]).fold(0.0, f64::max);
    let stderr = report.stderr.iter().copied().fold(0.0, f64::max);
    Ok(vec![Check { name: "max-consecutive-ratio".into(), pass: report.pass, measured: worst, bound: 1.1, stderr }])
}

// ---------------------------------------------------------------- nondegeneracy

fn nondegeneracy_config() -> ResolvedConfig {
    base(
        "nondegeneracy-fit",
        1,
        porous(2, 3.0),
        NoiseBlock::deterministic(),
        SolverBlock::line(64, 1.0),
        vec![InitialDatum::Constant { value: 0.0 }],
    )
}

/// Fits `(α, β)` for one model and writes `<stem>.csv` and `<stem>.json`.
pub(super) fn fit_model(model: &ModelBlock, fit: &FitBlock, out: &mut Outputs, stem: &str) -> Result<(FitSummary, (f64, f64))> {
    let spec = model.build()?;
    let loc = Localization::window(fit.window[0], fit.window[1]);
    let (result, samples) = fit_exponents(&spec, &loc, &fit.j_list, &fit.delta_list, &OmegaSampling::default())?;
    write_fit_csv(&samples, out.create(&format!("{stem}.csv"))?)?;
    let summary = result.summary();
    out.json(&format!("{stem}.json"), &summary)?;
    Ok((summary, spec.closed_form_exponents()?))
}

fn relative_error(measured: f64, expected: f64) -> f64 {
    (measured / expected - 1.0).abs()
}

/// Fits the configured model and its diffusion-free counterpart.
fn nondegeneracy_fit(config: &ResolvedConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let mut cases = Vec::new();
    if config.model.diffusion_exponent.is_some() {
        let pure = ModelBlock { diffusion_exponent: None, viscosity: 0.0, truncation: 0.0, ..config.model.clone() };
        cases.push(("pure-flux", pure, None));
    }
    cases.push(("model", config.model.clone(), config.fit.clone()));
    let mut checks = Vec::new();
    for (stem, model, fit) in cases {
        let fit = fit.unwrap_or_else(|| FitBlock::default_for(&model));
        let (summary, (alpha, beta)) = fit_model(&model, &fit, out, &format!("fit_{stem}"))?;
        let ea = relative_error(summary.alpha, alpha);
        let eb = relative_error(summary.beta, beta);
        checks.push(Check::at_most(format!("{stem}-alpha-relative-error"), ea, 0.15, 0.0));
        checks.push(Check::at_most(format!("{stem}-beta-relative-error"), eb, 0.15, 0.0));
    }
    Ok(checks)
}

// ---------------------------------------------------------------- regularity

fn rough_datum() -> InitialDatum {
    InitialDatum::WhiteNoise { amplitude: 1.0, clip: 1.0 }
}

fn regularity_burgers_config() -> ResolvedConfig {
    let solver = SolverBlock { record_every: 4, ..SolverBlock::line(256, 4.0) };
    base("regularity-burgers", 16, flux(2), default_noise(), solver, vec![rough_datum()])
}

fn regularity_porous_config() -> ResolvedConfig {
    let solver = SolverBlock { record_every: 16, ..SolverBlock::line(256, 1.0) };
    base("regularity-porous", 16, porous(2, 3.0), default_noise(), solver, vec![rough_datum()])
}

/// Block-decay fit of `η̄(u)` with `η ≡ 1`; with diffusion present the weighted
/// kinetic-measure mass is reported alongside.
fn regularity(config: &ResolvedConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let mut cfg = config.solver_config()?;
    cfg.keep_states = true;
    let solver = Solver::new(cfg.clone())?;
    let loc = Localization::identity();
    let with_measure = config.model.diffusion_exponent.is_some();
    let xi = XiGrid::new(-4.0, 4.0, 128)?;
    let grid = cfg.grid;
    let runs = ensemble(&config.member_seeds(), |_, seed| {
        let u0 = config.datum(0, seed)?;
        let path = solver.path_for_seed(seed)?;
        if with_measure {
            let mut acc = KineticAccumulator::new(xi, &grid, cfg.t_end, 1, 16)?;
            let traj = solver.solve_with_path(&u0, &path, &mut acc)?;
            let m = acc.combined();
            let marginal = m.xi_marginal();
            let weighted: f64 = marginal.iter().enumerate().map(|(j, v)| v * loc.measure_weight(xi.center(j))).sum();
            Ok((traj, weighted))
        } else {
            Ok((solver.solve_with_path(&u0, &path, &mut ())?, 0.0))
        }
    })?;
    let measure = EnsembleResult::from_scalars(runs.iter().map(|r| r.1).collect())?;
    let trajs: Vec<_> = runs.into_iter().map(|r| r.0).collect();
    let model = config.model.build()?;
    let (alpha, beta) = model.closed_form_exponents()?;
    let prediction = predicted_regularity(alpha, beta);
    let report = regularity_exponent_fit(&trajs, &loc, &prediction)?;
    write_block_csv(&report, out.create("blocks.csv")?)?;
    out.json("regularity.json", &report)?;
    let mut checks = vec![Check::at_least("s-emp", report.s_emp, 0.9 * report.predicted_s, 0.0)];
    if with_measure {
        // finite iff at most the largest double
        checks.push(Check::at_most("theta-functional-finite", report.theta_functional, f64::MAX, 0.0));
        checks.push(Check::at_most("weighted-measure-mass-finite", measure.mean[0], f64::MAX, measure.stderr[0]));
    }
    Ok(checks)
}

// ---------------------------------------------------------------- multiplier

const PROBE_DELTAS: [f64; 5] = [1e-2, 1e-1, 1.0, 1e1, 1e2];
const PROBE_XIS: [f64; 9] = [-1.0, -0.5, -0.25, -0.1, 0.0, 0.1, 0.25, 0.5, 1.0];
const AVERAGING_DELTAS: [f64; 3] = [0.5, 2.0, 8.0];

fn multiplier_config() -> ResolvedConfig {
    base(
        "multiplier-uniformity",
        20,
        porous(2, 3.0),
        NoiseBlock::deterministic(),
        SolverBlock::line(256, 1.0),
        vec![InitialDatum::Constant { value: 0.0 }],
    )
}

/// Kernel table on the solver grid; the averaging bound uses one random
/// `(t, x, ξ)` array per member.
fn multiplier_uniformity(config: &ResolvedConfig, out: &mut Outputs) -> Result<Vec<Check>> {
    let spec = config.model.build()?;
    let psi = BumpSpec::ball(1.0);
    let table = truncation_property_probe(&spec, &psi, &config.solver.grid()?, &PROBE_DELTAS, &PROBE_XIS)?;
    let mut w = out.create("kernel_norms.csv")?;
    writeln!(w, "delta,xi,kernel_l1")?;
    for (i, d) in table.deltas.iter().enumerate() {
        for (j, x) in table.xis.iter().enumerate() {
            f64_csv_row(&mut w, &[*d, *x, table.norms[i][j]])?;
        }
    }
    w.flush()?;
    let ratios = ensemble(&config.member_seeds(), |_, seed| {
        let mut f = SpaceTimeXiArray::zeros(crate::field::TorusGrid::line(16), 8, 1.0, XiGrid::new(-1.5, 1.5, 12)?)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        f.data.iter_mut().for_each(|v| *v = standard_normal(&mut rng));
        AVERAGING_DELTAS
            .iter()
            .map(|&d| {
                let g = averaged_multiplier_apply(&f, &psi, &spec, d, TimeWindow::Hann)?;
                let omega = multiplier_omega_sup(&f, &psi, &spec, d);
                Ok(f.space_time_l2(&g) / (omega.sqrt() * f.l2_norm()))
            })
            .collect::<Result<Vec<f64>>>()
    })?;
    let worst = ratios.iter().flatten().copied().fold(0.0, f64::max);
    Ok(vec![
        Check::flag("kernel-norm-ratio", table.pass, table.ratio, 10.0),
        Check::at_most("l2-averaging-bound-ratio", worst, 1.0 + 1e-12, 0.0),
    ])
}

// ---------------------------------------------------------------- invariants

fn invariants_config() -> ResolvedConfig {
    base(
        "invariants",
        1,
        porous(2, 3.0),
        NoiseBlock::deterministic(),
        SolverBlock::line(128, 0.25),
        vec![sine(1.0, 0.0, 0.2)],
    )
}

fn invariants(config: &ResolvedConfig, _out: &mut Outputs) -> Result<Vec<Check>> {
    let mut cfg = config.solver_config()?;
    cfg.keep_states = true;
    cfg.record_every = 1;
    let solver = Solver::new(cfg)?;
    let u0 = config.datum(0, config.seed)?;
    let traj = solver.solve(&u0, config.seed)?;
    let scale = u0.l1_norm().max(f64::MIN_POSITIVE);
    let drift = traj.states.windows(2).map(|w| (w[1].mass() - w[0].mass()).abs()).fold(0.0, f64::max) / scale;

    let u = &traj.final_state;
    let l2 = u.l2_norm().powi(2);
    let plancherel = (forward_transform(u).energy() - l2).abs() / l2;

    let blocks = littlewood_paley_blocks(u)?;
    let mut sum = Field::zeros(*u.grid());
    for b in &blocks {
        sum = sum.zip_map(&b.field, |a, c| a + c)?;
    }
    let reconstruction = sum.zip_map(u, |a, c| a - c)?.max_abs();

    let (lo, hi) = u.min_max();
    let xi = XiGrid::covering(lo, hi, 200)?;
    let layer = reconstruct_from_kinetic(&kinetic_function(u, &xi)?);
    let layer_err = layer.iter().zip(u.values()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let phi1 = Poly(vec![1.0, 0.5, -0.25]);
    let phi2_sigma = Poly(vec![0.3, 0.0, 1.0, -0.2]);
    let points = config.solver.points;
    let coarse = chain_rule_defect(&config.initial[0].sample(crate::field::TorusGrid::new(config.solver.dim, points)?, config.seed), &phi1, &phi2_sigma, 0);
    let fine = chain_rule_defect(
        &config.initial[0].sample(crate::field::TorusGrid::new(config.solver.dim, 2 * points)?, config.seed),
        &phi1,
        &phi2_sigma,
        0,
    );
    let chain_ratio = if coarse == 0.0 { 0.0 } else { fine / coarse };

    Ok(vec![
        Check::at_most("mass-drift-per-step", drift, 1e-12, 0.0),
        Check::at_most("plancherel-relative-error", plancherel, 1e-12, 0.0),
        Check::at_most("littlewood-paley-reconstruction", reconstruction, 1e-10, 0.0),
        Check::at_most("layer-cake-error", layer_err, xi.spacing(), 0.0),
        Check::at_most("chain-rule-refinement-ratio", chain_ratio, 0.55, 0.0),
    ])
}
