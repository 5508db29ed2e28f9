//! Airspeed-safe guidance for unpowered fixed-wing flight in steady wind.
//!
//! The crate is organised bottom-up:
//!
//! - [`airframe`]: point-mass drag polar and the airspeed vector field.
//! - [`windframe`]: wind-triangle coupling between air- and ground-referenced
//!   flight path angles.
//! - [`viability`]: contingent cones, boundary tangency checks and the viable
//!   flight path angle interval of an airspeed envelope.
//! - [`guidance`]: maneuver horizons, the time-averaged tangency estimate and
//!   the constrained flight path angle optimizer.
//! - [`primitives`]: batch synthesis, lookup and persistence of certified
//!   maneuver primitives.
//! - [`sim`], [`planner`], [`analysis`]: point-mass gliding simulation,
//!   primitive-sequence planning and airspeed invariance statistics.
//! - [`config`]: JSON run configuration shared by the command-line tool.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod airframe;
pub mod analysis;
pub mod config;
pub mod guidance;
pub mod numeric;
pub mod planner;
pub mod primitives;
pub mod sim;
pub mod units;
pub mod viability;
pub mod windframe;

pub use airframe::{AircraftParams, FlightCondition};
pub use analysis::{analyze, InvarianceReport};
pub use guidance::{GuidanceSolution, HorizonParams, Maneuver, OptimizerParams, SurrogateParams};
pub use primitives::{ManeuverGrid, Primitive, PrimitiveTable};
pub use sim::{SimState, Trajectory};
pub use viability::{AirspeedEnvelope, ConeInterval, GammaInterval};
pub use windframe::{AirState, GroundState, WindVector};
