use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::field::Field;
use crate::scalar::Real;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormRecord<T> {
    pub t: T,
    pub l1: T,
    pub l2: T,
    pub lp: T,
    pub mass: T,
}

/// Recorded output of one run.
#[derive(Clone, Debug)]
pub struct Trajectory<T> {
    /// Seed of the driving Wiener path.
    pub seed: u64,
    pub lp_exponent: T,
    pub times: Vec<T>,
    /// Snapshots at `times`, empty unless states are kept.
    pub states: Vec<Field<T>>,
    pub norms: Vec<NormRecord<T>>,
    /// Cumulative parabolic dissipation `∫_0^t Σ|∇Σ(u)|²` at `times`.
    pub dissipation: Vec<T>,
    /// `max_n ‖u(t_n)‖₂` over every step, not just recorded ones.
    pub sup_l2: T,
    pub sup_lp: T,
    pub final_state: Field<T>,
}

impl<T: Real> Trajectory<T> {
    pub(crate) fn new(lp_exponent: T, u0: &Field<T>) -> Result<Self> {
        Ok(Self {
            seed: 0,
            lp_exponent,
            times: Vec::new(),
            states: Vec::new(),
            norms: Vec::new(),
            dissipation: Vec::new(),
            sup_l2: u0.l2_norm(),
            sup_lp: u0.lp_norm(lp_exponent)?,
            final_state: u0.clone(),
        })
    }

    pub(crate) fn track_sup(&mut self, u: &Field<T>) -> Result<()> {
        self.sup_l2 = self.sup_l2.max(u.l2_norm());
        self.sup_lp = self.sup_lp.max(u.lp_norm(self.lp_exponent)?);
        Ok(())
    }

    pub(crate) fn record(&mut self, t: T, u: &Field<T>, dissipation: T, keep: bool) -> Result<()> {
        self.times.push(t);
        self.norms.push(NormRecord { t, l1: u.l1_norm(), l2: u.l2_norm(), lp: u.lp_norm(self.lp_exponent)?, mass: u.mass() });
        self.dissipation.push(dissipation);
        if keep {
            self.states.push(u.clone());
        }
        Ok(())
    }

    pub fn final_time(&self) -> T {
        self.times.last().copied().unwrap_or_else(T::zero)
    }
}

/// Norm series as CSV `t,L1,L2,Lp,mass`.
pub fn write_norms_csv<T: Real, W: Write>(traj: &Trajectory<T>, mut w: W) -> Result<()> {
    writeln!(w, "t,L1,L2,Lp,mass")?;
    for r in &traj.norms {
        writeln!(
            w,
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
            r.t.to_f64_lossy(),
            r.l1.to_f64_lossy(),
            r.l2.to_f64_lossy(),
            r.lp.to_f64_lossy(),
            r.mass.to_f64_lossy()
        )?;
    }
    Ok(())
}
