//! Analytic models of message coverage in a peer-to-peer population under
//! independent on/off churn, with messages exchanged instantly among online peers.
//!
//! All models are generic over the floating point type ([`Scalar`]); the
//! `*64` / `*32` aliases below fix it.

// NaN must fail parameter checks, hence the negated comparisons
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod engset;
pub mod error;
mod intervals;
pub mod kbuffer;
pub mod numerics;
pub mod scalar;
pub mod unit;

pub use engset::{
    equilibrium, single_message_coverage, ChurnParams, CoverageTrajectoryPoint, EngsetEquilibrium, Form, OnlineGrowth,
    SourceState,
};
pub use error::{ModelError, Result};
pub use intervals::LastSplit;
pub use kbuffer::{
    coverage_1k, coverage_l_ik, coverage_l_ik_split, fractions_k, min_k_for_coverage, multisource_class_weight,
    multisource_coverage, total_coverage_k, KFractions, LastSide, StreamModel,
};
pub use numerics::Tolerance;
pub use scalar::Scalar;
pub use unit::{
    base_coverage, category_coverage, category_fractions, coverage_rate, coverage_rate_double_limit,
    coverage_rate_limit, last_offline_closed_form, last_offline_split, last_online_closed_form, last_online_split,
    total_coverage, Category, CategoryFractions, CoverageReport, StreamParams,
};

pub type ChurnParams64 = ChurnParams<f64>;
pub type ChurnParams32 = ChurnParams<f32>;
pub type StreamParams64 = StreamParams<f64>;
pub type StreamParams32 = StreamParams<f32>;
pub type EngsetEquilibrium64 = EngsetEquilibrium<f64>;
pub type EngsetEquilibrium32 = EngsetEquilibrium<f32>;
pub type CategoryFractions64 = CategoryFractions<f64>;
pub type CategoryFractions32 = CategoryFractions<f32>;
pub type KFractions64 = KFractions<f64>;
pub type KFractions32 = KFractions<f32>;
pub type CoverageReport64 = CoverageReport<f64>;
pub type CoverageReport32 = CoverageReport<f32>;
pub type Tolerance64 = Tolerance<f64>;
pub type Tolerance32 = Tolerance<f32>;
