//! Point-mass aerodynamic model of an unpowered fixed-wing aircraft.
//!
//! Thrust is identically zero. Lift balances the weight component normal to
//! the flight path in a coordinated turn, drag follows a quadratic polar, and
//! the airspeed rate is the along-path force balance divided by mass.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::{bisect, Bisection};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AirframeError {
    #[error("invalid aircraft parameter {name} = {value}")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("invalid flight condition: {0}")]
    InvalidCondition(String),
    #[error("no equilibrium glide angle at airspeed {airspeed_ms} m/s")]
    NoEquilibrium { airspeed_ms: f64 },
}

/// Mass, geometry and drag polar of the airframe.
///
/// The JSON form uses the keys `mass_kg, wing_area_m2, cd0, induced_k, rho, g`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AircraftParams {
    pub mass_kg: f64,
    pub wing_area_m2: f64,
    pub cd0: f64,
    #[serde(rename = "induced_k")]
    pub induced_factor_k: f64,
    #[serde(rename = "rho")]
    pub air_density_kgm3: f64,
    #[serde(rename = "g")]
    pub gravity_ms2: f64,
}

impl Default for AircraftParams {
    /// Representative light single-engine values (Cessna 182 class).
    fn default() -> Self {
        Self {
            mass_kg: 1406.0,
            wing_area_m2: 16.17,
            cd0: 0.027,
            induced_factor_k: 0.054,
            air_density_kgm3: 1.225,
            gravity_ms2: 9.81,
        }
    }
}

impl AircraftParams {
    pub fn new(
        mass_kg: f64,
        wing_area_m2: f64,
        cd0: f64,
        induced_factor_k: f64,
        air_density_kgm3: f64,
        gravity_ms2: f64,
    ) -> Result<Self, AirframeError> {
        let p = Self {
            mass_kg,
            wing_area_m2,
            cd0,
            induced_factor_k,
            air_density_kgm3,
            gravity_ms2,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), AirframeError> {
        let positive = [
            ("mass_kg", self.mass_kg),
            ("wing_area_m2", self.wing_area_m2),
            ("rho", self.air_density_kgm3),
            ("g", self.gravity_ms2),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                return Err(AirframeError::InvalidParameter { name, value });
            }
        }
        for (name, value) in [("cd0", self.cd0), ("induced_k", self.induced_factor_k)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(AirframeError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    pub fn weight_n(&self) -> f64 {
        self.mass_kg * self.gravity_ms2
    }

    /// Speed at which parasite and induced drag are equal in straight,
    /// level flight.
    pub fn min_drag_speed_ms(&self) -> f64 {
        let w = self.weight_n();
        let rs = self.air_density_kgm3 * self.wing_area_m2;
        (4.0 * self.induced_factor_k * w * w / (rs * rs * self.cd0)).powf(0.25)
    }
}

/// Instantaneous air-relative flight condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlightCondition {
    pub airspeed_ms: f64,
    pub gamma_air_rad: f64,
    pub bank_rad: f64,
}

impl FlightCondition {
    pub fn new(airspeed_ms: f64, gamma_air_rad: f64, bank_rad: f64) -> Result<Self, AirframeError> {
        let c = Self {
            airspeed_ms,
            gamma_air_rad,
            bank_rad,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<(), AirframeError> {
        if !(self.airspeed_ms > 0.0 && self.airspeed_ms.is_finite()) {
            return Err(AirframeError::InvalidCondition(format!(
                "airspeed {} m/s must be positive",
                self.airspeed_ms
            )));
        }
        if !(self.bank_rad.abs() < FRAC_PI_2) {
            return Err(AirframeError::InvalidCondition(format!(
                "bank {} rad outside (-pi/2, pi/2)",
                self.bank_rad
            )));
        }
        if !(self.gamma_air_rad.abs() <= FRAC_PI_2) {
            return Err(AirframeError::InvalidCondition(format!(
                "flight path angle {} rad outside [-pi/2, pi/2]",
                self.gamma_air_rad
            )));
        }
        Ok(())
    }
}

/// Lift coefficient required for a coordinated turn, `2W cos γa / (ρ S va² cos μ)`.
pub fn lift_coefficient(p: &AircraftParams, c: &FlightCondition) -> f64 {
    let v = c.airspeed_ms;
    2.0 * p.weight_n() * c.gamma_air_rad.cos() / (p.air_density_kgm3 * p.wing_area_m2 * v * v * c.bank_rad.cos())
}

/// Parasite and induced drag components, in newtons.
pub fn drag_components_n(p: &AircraftParams, c: &FlightCondition) -> (f64, f64) {
    let v2 = c.airspeed_ms * c.airspeed_ms;
    let rs = p.air_density_kgm3 * p.wing_area_m2;
    let w = p.weight_n();
    let load = c.gamma_air_rad.cos() / c.bank_rad.cos();
    let parasite = 0.5 * rs * p.cd0 * v2;
    let induced = 2.0 * p.induced_factor_k * w * w / (rs * v2) * load * load;
    (parasite, induced)
}

pub fn drag_n(p: &AircraftParams, c: &FlightCondition) -> f64 {
    let (parasite, induced) = drag_components_n(p, c);
    parasite + induced
}

/// Airspeed acceleration `-D/m - g sin γa`, the vector field of every
/// viability check.
pub fn airspeed_rate(p: &AircraftParams, c: &FlightCondition) -> f64 {
    -drag_n(p, c) / p.mass_kg - p.gravity_ms2 * c.gamma_air_rad.sin()
}

/// Air-relative flight path angle at which the airspeed rate vanishes.
///
/// Bisection on `(-π/2, 0]`; the rate is strictly increasing as the path
/// steepens on that bracket, so the root is unique when it exists.
pub fn equilibrium_glide_angle(p: &AircraftParams, airspeed_ms: f64, bank_rad: f64) -> Result<f64, AirframeError> {
    FlightCondition::new(airspeed_ms, 0.0, bank_rad)?;
    let rate = |gamma: f64| {
        airspeed_rate(
            p,
            &FlightCondition {
                airspeed_ms,
                gamma_air_rad: gamma,
                bank_rad,
            },
        )
    };
    let lo = -FRAC_PI_2 + 1e-9;
    match bisect(rate, lo, 0.0, 1e-15, 1e-12, 400) {
        Bisection::Root(gamma) => Ok(gamma),
        Bisection::NoSignChange => Err(AirframeError::NoEquilibrium { airspeed_ms }),
    }
}
