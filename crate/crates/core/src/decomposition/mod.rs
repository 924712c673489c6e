//! The partition of unity ã, its Fourier-series decomposition and the
//! identities used to reduce the flag multiplier to model operators.
pub mod coefficients;
pub mod identities;
pub mod partition;
pub mod split;
pub mod taylor;
pub mod windows;

pub use coefficients::{
    core_reconstruction, decay_survey, fourier_coefficients, fourier_coefficients_with, representative_cells,
    CoefficientMode, CoefficientSlice, CoreReconstruction, DecayFit, DecaySurvey, DEFAULT_SAMPLES,
};
pub use identities::{
    identity_suite, indicator_bump, l1_bump, verify_calc1, verify_calc2, verify_calc3, IdentityReport, IdentitySuite,
};
pub use partition::{build_partition, DiagonalSample, PartitionReport, C0_EXPECTED, PARTITION_MIHLIN_BUDGET};
pub use split::{
    m3_mihlin_sweep, reconstruction_sweep, separation_ratio, split_product, M3Mihlin, SplitConfig, SplitError,
    SplitSymbols,
};
pub use taylor::{taylor_split, taylor_two_scale, TaylorRegion, TaylorSplit, TwoScale};
pub use windows::{smoothstep, WindowSystem, DEFAULT_ENLARGEMENT};
