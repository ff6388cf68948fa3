use std::f64::consts::{PI, TAU};

use proptest::prelude::*;

use super::*;
use crate::model::ModelSpec;
use crate::noise::{NoiseFamily, NoiseModel};

fn cfg(model: ModelSpec<f64>, points: usize, dt: f64, t_end: f64) -> SolverConfig<f64> {
    SolverConfig::new(model, NoiseModel::deterministic(), TorusGrid::line(points), dt, t_end)
}

fn riemann(points: usize, left: f64, right: f64) -> Field<f64> {
    Field::from_fn(TorusGrid::line(points), |x: [f64; 2]| if x[0] < PI { left } else { right })
}

#[test]
fn constants_are_fixed_points() {
    let model = ModelSpec::porous_medium(2, 3.0).with_viscosity(0.1);
    let s = Solver::new(cfg(model, 64, 1e-3, 1e-3)).unwrap();
    let c = Field::constant(TorusGrid::line(64), 0.7f64);
    assert_eq!(s.convection_substep(&c, 1e-3).unwrap(), c);
    assert_eq!(s.diffusion_substep(&c, 1e-3).unwrap(), c);
    let inert = Solver::new(cfg(ModelSpec::inert(), 64, 0.1, 1.0)).unwrap();
    let u = Field::from_fn(TorusGrid::line(64), |x: [f64; 2]| x[0].sin());
    let t = inert.solve(&u, 1).unwrap();
    assert_eq!(t.final_state, u);
}

/// Position of the downward 0.5-crossing nearest to `guess`.
fn shock_position(u: &Field<f64>, guess: f64) -> f64 {
    let n = u.len();
    let h = TAU / n as f64;
    let v = u.values();
    let mut best = f64::NAN;
    for i in 0..n {
        let j = (i + 1) % n;
        if v[i] >= 0.5 && v[j] < 0.5 {
            let x = (i as f64 + (v[i] - 0.5) / (v[i] - v[j])) * h;
            if best.is_nan() || (x - guess).abs() < (best - guess).abs() {
                best = x;
            }
        }
    }
    best
}

#[test]
fn burgers_shock_moves_at_rankine_hugoniot_speed() {
    let n = 256;
    let h = TAU / n as f64;
    let dt = 0.5 * h;
    let t_end = dt * (1.0 / dt).round();
    let s = Solver::new(cfg(ModelSpec::hyperbolic(2), n, dt, t_end)).unwrap();
    let traj = s.solve(&riemann(n, 1.0, 0.0), 0).unwrap();
    // s = (B(1) - B(0)) / (1 - 0) = 1/2, initial jump between the cells straddling π
    let oracle = (PI - h / 2.0) + 0.5 * t_end;
    let x = shock_position(&traj.final_state, oracle);
    assert!((x - oracle).abs() < 2.0 * h, "{x} vs {oracle}");
}

/// Crandall–Majda numerical entropy flux for `|u - c|` built from the EO flux.
fn entropy_residuals(s: &Solver<f64>, before: &Field<f64>, after: &Field<f64>, dt: f64, c: f64) -> Vec<f64> {
    let m = s.model();
    let f = |a: f64, b: f64| {
        let (p, _) = m.flux_tau_split(a);
        let (_, q) = m.flux_tau_split(b);
        p + q
    };
    let u = before.values();
    let n = u.len();
    let lambda = dt / before.grid().spacing::<f64>();
    let q: Vec<f64> = (0..n)
        .map(|i| {
            let r = (i + 1) % n;
            f(u[i].max(c), u[r].max(c)) - f(u[i].min(c), u[r].min(c))
        })
        .collect();
    (0..n)
        .map(|i| {
            let l = (i + n - 1) % n;
            (after.values()[i] - c).abs() - (u[i] - c).abs() + lambda * (q[i] - q[l])
        })
        .collect()
}

#[test]
fn rarefaction_is_monotone_and_entropy_admissible() {
    let n = 256;
    let h = TAU / n as f64;
    let dt = 0.4 * h;
    let s = Solver::new(cfg(ModelSpec::hyperbolic(2), n, dt, dt * 100.0)).unwrap();
    let mut u = riemann(n, -1.0, 1.0);
    for step in 0..100 {
        let next = s.advance(&u, &[], step).unwrap().2;
        for c in [-0.5, 0.0, 0.5] {
            let worst = entropy_residuals(&s, &u, &next, dt, c).into_iter().fold(f64::MIN, f64::max);
            assert!(worst <= 1e-13, "entropy production {worst} at c = {c}");
        }
        u = next;
    }
    // fan centred at π: values increase from -1 to 1 across [π - t, π + t]
    let t = dt * 100.0;
    let v = u.values();
    let lo = ((PI - t) / h) as usize + 2;
    let hi = ((PI + t) / h) as usize - 2;
    assert!(v[lo..hi].windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn explicit_heat_step_matches_fourier_decay() {
    let n = 128;
    let h = TAU / n as f64;
    let dt = 0.4 * h * h;
    let s = Solver::new(cfg(ModelSpec::heat(1.0), n, dt, dt)).unwrap();
    let u = Field::from_fn(TorusGrid::line(n), |x: [f64; 2]| x[0].cos());
    let out = s.diffusion_substep(&u, dt).unwrap();
    for (j, &v) in out.values().iter().enumerate() {
        let exact = (-dt).exp() * (j as f64 * h).cos();
        assert!((v - exact).abs() <= dt * dt + dt * h * h);
    }
}

#[test]
fn porous_medium_bump_spreads_with_exact_mass() {
    let n = 128;
    let grid = TorusGrid::line(n);
    let u0 = Field::from_fn(grid, |x: [f64; 2]| (1.0 - ((x[0] - PI) / 0.5).powi(2)).max(0.0));
    let model = ModelSpec::inert().with_diffusion(crate::model::DiffusionLaw::Power { exponent: 3.0 });
    let mut c = cfg(model, n, 1.0, 0.2);
    let dt = c.fitted_dt(0.0, 1.0, 0.9);
    c.dt = dt;
    let s = Solver::new(c).unwrap();
    let traj = s.solve(&u0, 0).unwrap();
    let support = |f: &Field<f64>| f.values().iter().filter(|&&v| v > 1e-10).count();
    assert!(support(&traj.final_state) > support(&u0));
    assert!(traj.final_state.max_abs() < u0.max_abs());
    assert!((traj.final_state.mass() - u0.mass()).abs() < 1e-12);
}

#[test]
fn additive_noise_is_exact() {
    let n = 32;
    let noise = NoiseModel::additive(vec![0.3]).unwrap();
    let dt = 0.01;
    let c = SolverConfig::new(ModelSpec::inert(), noise, TorusGrid::line(n), dt, 0.5);
    let s = Solver::new(c).unwrap();
    let u0 = Field::from_fn(TorusGrid::line(n), |x: [f64; 2]| x[0].sin());
    let path = s.path_for_seed(11).unwrap();
    let traj = s.solve_with_path(&u0, &path, &mut ()).unwrap();
    let b: f64 = (0..50).map(|i| path.sample_increments(i).unwrap()[0]).sum();
    for (a, z) in traj.final_state.values().iter().zip(u0.values()) {
        assert!((a - z - 0.3 * b).abs() < 1e-13);
    }
}

#[test]
fn full_model_is_deterministic() {
    let noise = NoiseModel::multiplicative_default(vec![0.5, 0.25]).unwrap();
    let model = ModelSpec::porous_medium(2, 3.0).with_viscosity(0.05);
    let mut c = SolverConfig::new(model, noise, TorusGrid::line(64), 1.0, 0.2);
    c.dt = c.fitted_dt(-3.0, 3.0, 0.8);
    c.keep_states = true;
    let s = Solver::new(c).unwrap();
    let u0 = Field::from_fn(TorusGrid::line(64), |x: [f64; 2]| x[0].sin() + 0.5);
    let a = s.solve(&u0, 99).unwrap();
    let b = s.solve(&u0, 99).unwrap();
    assert_eq!(a.states, b.states);
    assert_eq!(a.norms, b.norms);
    let other = s.solve(&u0, 100).unwrap();
    assert_ne!(a.final_state, other.final_state);
}

#[test]
fn zero_data_zero_noise_stays_zero() {
    let c = cfg(ModelSpec::porous_medium(3, 4.0), 32, 0.01, 0.1);
    let s = Solver::new(c).unwrap();
    let z = Field::<f64>::zeros(TorusGrid::line(32));
    let t = s.solve(&z, 0).unwrap();
    assert!(t.final_state.values().iter().all(|&v| v == 0.0));
    assert!(t.norms.iter().all(|r| r.l1 == 0.0));
}

#[test]
fn heat_solution_matches_exact() {
    let n = 128;
    let h = TAU / n as f64;
    let mut c = cfg(ModelSpec::heat(1.0), n, 1.0, 0.5);
    c.dt = 0.5 / (0.5 / (0.4 * h * h)).ceil();
    let s = Solver::new(c).unwrap();
    let u0 = Field::from_fn(TorusGrid::line(n), |x: [f64; 2]| x[0].cos());
    let t = s.solve(&u0, 0).unwrap();
    let exact = u0.map(|v| (-0.5f64).exp() * v);
    let err = t.final_state.zip_map(&exact, |a, b| a - b).unwrap().l2_norm();
    assert!(err < 1e-3, "{err}");
}

/// Characteristics solution of Burgers from `sin x`: `u = sin(x - t u)`, by Newton.
fn characteristics(x: f64, t: f64) -> f64 {
    let mut u = x.sin();
    for _ in 0..100 {
        let g = u - (x - t * u).sin();
        let dg = 1.0 + t * (x - t * u).cos();
        u -= g / dg;
    }
    u
}

#[test]
fn burgers_pre_shock_matches_characteristics() {
    let n = 8192;
    let h = TAU / n as f64;
    let mut c = cfg(ModelSpec::hyperbolic(2), n, 1.0, 0.5);
    c.dt = 0.5 / (0.5 / (0.5 * h)).ceil();
    let s = Solver::new(c).unwrap();
    let u0 = Field::from_fn(TorusGrid::line(n), |x: [f64; 2]| x[0].sin());
    let t = s.solve(&u0, 0).unwrap();
    let exact = Field::from_fn(TorusGrid::line(n), |x: [f64; 2]| characteristics(x[0], 0.5));
    let err = t.final_state.zip_map(&exact, |a, b| a - b).unwrap().l1_norm();
    assert!(err < 1e-3, "{err}");
}

#[test]
fn refusals() {
    let n = 64;
    let u = Field::from_fn(TorusGrid::line(n), |x: [f64; 2]| 3.0 * x[0].sin());
    let s = Solver::new(cfg(ModelSpec::hyperbolic(2), n, 0.5, 1.0)).unwrap();
    assert!(matches!(s.convection_substep(&u, 0.5), Err(Error::CflViolation { stage: "convection", .. })));
    let d = Solver::new(cfg(ModelSpec::heat(1.0), n, 0.5, 1.0)).unwrap();
    assert!(matches!(d.diffusion_substep(&u, 0.5), Err(Error::CflViolation { stage: "diffusion", .. })));
    assert!(matches!(Solver::new(cfg(ModelSpec::heat(1.0), n, 0.3, 1.0)), Err(Error::StepCount { .. })));
    let other = Field::<f64>::zeros(TorusGrid::line(32));
    assert!(matches!(s.convection_substep(&other, 0.01), Err(Error::GridMismatch(_))));
}

#[test]
fn semi_implicit_heat_agrees_with_explicit() {
    let n = 64;
    let h = TAU / n as f64;
    let dt = 0.2 * h * h;
    let u = Field::from_fn(TorusGrid::line(n), |x: [f64; 2]| x[0].cos() + 0.3 * (3.0 * x[0]).sin());
    let mut c = cfg(ModelSpec::heat(1.0), n, dt, dt);
    let e = Solver::new(c.clone()).unwrap().diffusion_substep(&u, dt).unwrap();
    c.diffusion_scheme = DiffusionScheme::SemiImplicit;
    let i = Solver::new(c).unwrap().diffusion_substep(&u, dt).unwrap();
    let gap = e.zip_map(&i, |a, b| a - b).unwrap().max_abs();
    assert!(gap < 10.0 * dt * dt * 10.0, "{gap}");
    assert!((e.mass() - i.mass()).abs() < 1e-12);
}

#[test]
fn semi_implicit_takes_large_steps_on_porous_media() {
    let n = 64;
    let model = ModelSpec::porous_medium(2, 3.0).with_viscosity(0.01);
    let mut c = cfg(model, n, 0.01, 0.1);
    c.diffusion_scheme = DiffusionScheme::SemiImplicit;
    let s = Solver::new(c).unwrap();
    let u0 = Field::from_fn(TorusGrid::line(n), |x: [f64; 2]| 1.0 + 0.5 * x[0].sin());
    let t = s.solve(&u0, 0).unwrap();
    assert!((t.final_state.mass() - u0.mass()).abs() < 1e-9);
    let (lo, hi) = t.final_state.min_max();
    assert!(lo >= 0.5 - 1e-9 && hi <= 1.5 + 1e-9);
}

#[test]
fn lax_friedrichs_is_conservative_and_bounded() {
    let n = 128;
    let h = TAU / n as f64;
    let mut c = cfg(ModelSpec::hyperbolic(2), n, 0.5 * h, 0.5 * h * 40.0);
    c.flux_scheme = FluxScheme::LaxFriedrichs;
    let s = Solver::new(c).unwrap();
    let u0 = riemann(n, 1.0, 0.0);
    let t = s.solve(&u0, 0).unwrap();
    let (lo, hi) = t.final_state.min_max();
    assert!(lo >= -1e-15 && hi <= 1.0 + 1e-15);
    assert!((t.final_state.mass() - u0.mass()).abs() < 1e-12);
}

#[test]
fn two_dimensional_step_is_conservative() {
    let grid = TorusGrid::square(16);
    let model = ModelSpec::porous_medium(2, 3.0).with_viscosity(0.1);
    let mut c = SolverConfig::new(model, NoiseModel::deterministic(), grid, 1.0, 0.05);
    c.dt = c.fitted_dt(-2.0, 2.0, 0.9);
    let s = Solver::new(c).unwrap();
    let u0 = Field::from_fn(grid, |x: [f64; 2]| x[0].sin() * x[1].cos() + 0.2);
    let t = s.solve(&u0, 0).unwrap();
    assert!((t.final_state.mass() - u0.mass()).abs() < 1e-12);
    assert!(t.final_state.max_abs() <= u0.max_abs() + 1e-12);
}

#[test]
fn smoothing_examples() {
    let grid = TorusGrid::line(256);
    let smooth = Field::from_fn(grid, |x: [f64; 2]| x[0].cos());
    let s = smooth_initial_datum(&smooth, 1e-10);
    assert!(s.zip_map(&smooth, |a, b| a - b).unwrap().max_abs() < 1e-8);

    let step = riemann(256, 1.0, 0.0);
    let m = smooth_initial_datum(&step, 0.1);
    let tv = |f: &Field<f64>| {
        let v = f.values();
        (0..v.len()).map(|i| (v[(i + 1) % v.len()] - v[i]).abs()).sum::<f64>()
    };
    // reference mollification: the step has total variation 2, a positive kernel cannot exceed it
    assert!(tv(&m) <= tv(&step) + 1e-12);
    let diff = m.zip_map(&step, |a, b| a - b).unwrap().l1_norm();
    assert!(diff <= 0.2 * step.l1_norm(), "{diff}");

    let big = Field::constant(grid, 100.0f64);
    let c = smooth_initial_datum(&big, 0.1);
    assert!(c.values().iter().all(|&v| (v - 10.0).abs() < 1e-12));
}

#[test]
fn smoothing_converges_in_l1() {
    let step = riemann(512, 1.0, -0.5);
    let errs: Vec<f64> = [0.4, 0.1, 0.025]
        .iter()
        .map(|&k| smooth_initial_datum(&step, k).zip_map(&step, |a, b| a - b).unwrap().l1_norm())
        .collect();
    assert!(errs[0] > errs[1] && errs[1] > errs[2]);
}

#[test]
fn ladder_on_spatially_constant_data_is_flat() {
    let noise = NoiseModel::additive(vec![0.5]).unwrap();
    let mut c = SolverConfig::new(ModelSpec::hyperbolic(2), noise, TorusGrid::line(32), 0.01, 0.2);
    c.record_every = 5;
    let u0 = Field::constant(TorusGrid::line(32), 0.3f64);
    let r = vanishing_viscosity_ladder(&c, &u0, &[1, 2, 3], &[0.2, 0.1, 0.05], false).unwrap();
    assert!(r.differences.iter().all(|&d| d == 0.0));
    assert!(r.pass);
    assert!(vanishing_viscosity_ladder(&c, &u0, &[1], &[0.1, 0.2], false).is_err());
}

#[test]
fn parabolic_dissipation_of_heat_matches_energy_identity() {
    // d/dt ½‖u‖² = -∫|∇u|² for the heat equation with κ = 1
    let n = 128;
    let h = TAU / n as f64;
    let mut c = cfg(ModelSpec::heat(1.0), n, 1.0, 0.25);
    c.dt = 0.25 / (0.25 / (0.2 * h * h)).ceil();
    let s = Solver::new(c).unwrap();
    let u0 = Field::from_fn(TorusGrid::line(n), |x: [f64; 2]| x[0].cos());
    let t = s.solve(&u0, 0).unwrap();
    let lost = 0.5 * (u0.l2_norm().powi(2) - t.final_state.l2_norm().powi(2));
    let diss = *t.dissipation.last().unwrap();
    assert!((lost - diss).abs() < 1e-2 * lost, "{lost} vs {diss}");
}

fn bounded_profile(n: usize, coeffs: &[f64], shift: f64) -> Field<f64> {
    Field::from_fn(TorusGrid::line(n), |x: [f64; 2]| {
        shift + coeffs.iter().enumerate().map(|(k, c)| c * ((k + 1) as f64 * x[0]).sin()).sum::<f64>()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn mass_conserved_and_order_preserved(
        coeffs in proptest::collection::vec(-0.6f64..0.6, 3),
        gap in 0.01f64..0.5,
        kappa in prop_oneof![Just(0.0), 0.01f64..0.2],
        tau in prop_oneof![Just(0.0), 0.2f64..1.0],
        m in 2.5f64..4.0,
        k in 2u32..4,
    ) {
        let n = 64;
        let model = ModelSpec::porous_medium(k, m).with_viscosity(kappa).with_truncation(tau);
        let mut c = cfg(model, n, 1.0, 0.05);
        c.dt = c.fitted_dt(-3.0, 3.0, 0.9);
        let s = Solver::new(c).unwrap();
        let mut u = bounded_profile(n, &coeffs, 0.0);
        let mut v = bounded_profile(n, &coeffs, gap);
        let bound = u.max_abs().max(v.max_abs());
        for step in 0..s.config().step_count().unwrap() {
            let nu = s.advance(&u, &[], step).unwrap().2;
            let nv = s.advance(&v, &[], step).unwrap().2;
            prop_assert!((nu.mass() - u.mass()).abs() <= 1e-12 * (1.0 + u.l1_norm()));
            prop_assert!(nu.values().iter().zip(nv.values()).all(|(a, b)| a <= b));
            prop_assert!(nu.max_abs() <= bound + 1e-12);
            u = nu;
            v = nv;
        }
    }
}

#[test]
fn noisy_comparison_violations_are_small() {
    let n = 64;
    let noise = NoiseModel::new(NoiseFamily::MultiplicativeDefault, vec![0.6, 0.3]).unwrap();
    let mut c = SolverConfig::new(ModelSpec::hyperbolic(2).with_viscosity(0.02), noise, TorusGrid::line(n), 1.0, 0.5);
    let violation = |dt_frac: f64, c: &mut SolverConfig<f64>| {
        c.dt = c.fitted_dt(-3.0, 3.0, dt_frac);
        let s = Solver::new(c.clone()).unwrap();
        let path = s.path_for_seed(5).unwrap();
        let u = s.solve_with_path(&bounded_profile(n, &[0.5], 0.0), &path, &mut ()).unwrap();
        let v = s.solve_with_path(&bounded_profile(n, &[0.5], 0.05), &path, &mut ()).unwrap();
        let excess = u.final_state.zip_map(&v.final_state, |a, b| (a - b).max(0.0)).unwrap().l1_norm();
        (excess, c.dt)
    };
    let (e, dt) = violation(0.5, &mut c);
    assert!(e <= 10.0 * dt, "{e} vs dt {dt}");
}
