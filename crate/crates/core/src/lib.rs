//! Antenna selection for large downlink arrays: switching-fabric design,
//! connectivity maps, Rayleigh channels, power-based and CSI-based antenna
//! selection, ergodic sum rates, order-statistic capacity approximations,
//! power consumption, and the sweep driver that ties them together.
//!
//! Numerical code is generic over [`scalar::Real`] (`f32`, `f64`); fabric
//! loss tables are generic over [`scalar::LossScalar`], which also admits the
//! exact rational [`Exact`]. The aliases below fix the usual choices.

// `!(x > 0.0)` is used on purpose so NaN inputs are rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod channel;
pub mod connectivity;
pub mod energy;
pub mod experiments;
pub mod fabric;
pub mod linalg;
pub mod rates;
pub mod scalar;
pub mod selection;

pub use scalar::{Exact, LossScalar, Real};

pub type ChannelF64 = channel::ChannelMatrix<f64>;
pub type ChannelF32 = channel::ChannelMatrix<f32>;
pub type CovarianceF64 = channel::CovarianceSqrt<f64>;
pub type MatrixF64 = linalg::CMatrix<f64>;
pub type PowerAllocationF64 = selection::PowerAllocation<f64>;
pub type OrderStatisticsF64 = analysis::OrderStatistics<f64>;

/// Fabric tables with exact rational losses.
pub type FabricDesignExact = fabric::FabricDesign<Exact>;
pub type SwitchCatalogExact = fabric::SwitchCatalog<Exact>;
pub type FabricDesignF64 = fabric::FabricDesign<f64>;
pub type SwitchCatalogF64 = fabric::SwitchCatalog<f64>;
