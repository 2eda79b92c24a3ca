//! Nash-equilibrium power allocation for uplink CDMA over
//! frequency-selective fading, from finite realizations to the
//! large-system limit.
//!
//! Numerical code is generic over [`scalar::Real`] (`f32` or `f64`); the
//! aliases below fix `f64`.

pub mod allocation;
pub mod asymptotics;
pub mod channel;
pub mod error;
pub mod game;
pub mod harness;
pub mod numerics;
pub mod receivers;
pub mod rng;
pub mod scalar;

pub use allocation::{DecodingOrder, EnergyDirection, FilterKind};
pub use error::{Error, Result};
pub use scalar::Real;

pub type Profile = asymptotics::ChannelProfile<f64>;
pub type Beta = asymptotics::BetaFunction<f64>;
pub type Channel = channel::MultipathChannel<f64>;
pub type Realization = channel::SystemRealization<f64>;
pub type Utility = game::UtilityFunction<f64>;
pub type Target = game::EquilibriumTarget<f64>;
pub type Allocation = allocation::PowerAllocation<f64>;

pub type Profile32 = asymptotics::ChannelProfile<f32>;
pub type Channel32 = channel::MultipathChannel<f32>;
pub type Realization32 = channel::SystemRealization<f32>;
