//! Estimators turning trajectories and ensembles into the quantities the
//! well-posedness and regularity results bound.

mod ensemble;
mod multiplier;
mod regularity;

pub use ensemble::{contraction_gap, lp_moment_check, lp_moment_stability, EnsembleResult, LpMomentReport};
pub use multiplier::{
    averaged_multiplier_apply, multiplier_omega_sup, truncation_property_probe, SpaceTimeXiArray, TimeWindow,
    TruncationTable,
};
pub use regularity::{
    fractional_sobolev_seminorm, littlewood_paley_blocks, littlewood_paley_weight, regularity_exponent_fit,
    write_block_csv, LittlewoodPaleyBlock, RegularityReport,
};
