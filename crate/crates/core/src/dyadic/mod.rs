//! Dyadic intervals, adapted bump families and the discrete model operators.

mod family;
mod interval;
mod model;

pub use family::{
    adaptedness, ladder, make_family, make_family_unchecked, Adaptedness, BumpFamily, Flavor, MotherShape,
};
pub use interval::{inv_length, DyadicInterval, RatInterval};
pub use model::{
    apply_model, apply_t1, apply_t1_k0, apply_t2, apply_t2_k0, check_k0_partition, index_pairs, inner_paraproduct,
    lambda1_coefficients, model_form, CoefficientFamily, InnerParaproductReport, Lambda1Coefficients, ModelConfig,
    ModelKind, ModelOp, PartitionCheck, SimRule, INNER_IDENTITY_TOL,
};
