//! Restricted-weak-type experiments, exceptional sets and polytope geometry.

pub mod exceptional;
pub mod lp;
pub mod polytope;
pub mod rwt;
pub mod sets;

pub use exceptional::{exceptional_set, major_subset, ExceptionalSet};
pub use polytope::{near_vertex, polytope_membership, ExponentTuple, Membership, Polytope, Vertex};
pub use rwt::{
    dilation_sweep, k0_sweep, rwt_experiment, with_thread_cap, Experiment, ExperimentReport, FormKind, RwtConfig,
    SweepReport, TrialRecord,
};
pub use sets::MeasurableSet;
