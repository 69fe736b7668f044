//! Monotonization of gridded point estimates and confidence bands.
//!
//! The core operators ([`rearrange`], [`isotonic`], [`bands`]) act on
//! [`GriddedFunction`]s and are generic over the [`Scalar`] type; `f64` and
//! `f32` aliases are provided below. The [`estimators`] and [`montecarlo`]
//! modules work in `f64` and supply the nonparametric fits and the simulation
//! harness used to exercise the operators.

pub mod bands;
pub mod cli;
pub mod csvio;
pub mod error;
pub mod estimators;
pub mod grid;
pub mod isotonic;
pub mod montecarlo;
pub mod rearrange;
pub mod scalar;

pub use bands::{
    assemble_band, covers, critical_value_max_t, lp_length, monotonize_band, Band, BandRecipe,
    CriticalValue, Monotonizer,
};
pub use error::{Error, Result};
pub use grid::{lp_distance, Axis, GriddedFunction, LpIndex};
pub use isotonic::{blend, isotonic_maxmin_oracle, isotonize_average, isotonize_pi, pava, WeightedSeq};
pub use rearrange::{
    eta_p, rearrange_1d, rearrange_average, rearrange_axis, rearrange_pi,
    rearrange_quantile_oracle, Direction, Ordering, OrderingSet,
};
pub use scalar::Scalar;

pub type Axis64 = Axis<f64>;
pub type GriddedFunction64 = GriddedFunction<f64>;
pub type Band64 = Band<f64>;
pub type BandRecipe64 = BandRecipe<f64>;
pub type WeightedSeq64 = WeightedSeq<f64>;

pub type Axis32 = Axis<f32>;
pub type GriddedFunction32 = GriddedFunction<f32>;
pub type Band32 = Band<f32>;
pub type WeightedSeq32 = WeightedSeq<f32>;
