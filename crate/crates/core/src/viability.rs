//! Viability of a compact airspeed envelope under the unpowered airspeed
//! dynamics.
//!
//! The envelope `[v_min, v_max]` is forward invariant for a fixed air-relative
//! flight path angle exactly when the airspeed rate points inward at both
//! boundaries. Rearranging the boundary inequalities gives an interval of
//! flight path angles whose endpoints are the equilibrium glide angles at
//! `v_max` (lower) and `v_min` (upper).

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::airframe::{airspeed_rate, drag_n, AircraftParams, FlightCondition};
use crate::numeric::{bisect, Bisection};
use crate::units::knots_to_ms;
use crate::windframe::{air_state_along_course, gamma_air_to_ground, WindError, WindVector};

/// Absolute tolerance for deciding that an airspeed sits on an envelope bound.
pub const BOUNDARY_TOL_MS: f64 = 1e-9;

const FIXED_POINT_TOL_RAD: f64 = 1e-10;
const FIXED_POINT_MAX_ITER: usize = 100;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ViabilityError {
    #[error("invalid airspeed envelope [{0}, {1}] m/s")]
    InvalidEnvelope(f64, f64),
    #[error("airspeed {airspeed_ms} m/s outside envelope [{v_min_ms}, {v_max_ms}] m/s")]
    OutsideEnvelope {
        airspeed_ms: f64,
        v_min_ms: f64,
        v_max_ms: f64,
    },
    #[error("viable flight path angle interval is empty (lower {lower_rad} rad > upper {upper_rad} rad)")]
    EmptyInterval { lower_rad: f64, upper_rad: f64 },
    #[error("drag-to-weight ratio {0} exceeds one at airspeed bound")]
    AsinDomain(f64),
    #[error(transparent)]
    Wind(#[from] WindError),
}

/// Admissible airspeed set `[v_min, v_max]`, in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AirspeedEnvelope {
    pub v_min_ms: f64,
    pub v_max_ms: f64,
}

impl AirspeedEnvelope {
    pub fn new(v_min_ms: f64, v_max_ms: f64) -> Result<Self, ViabilityError> {
        if !(v_min_ms > 0.0 && v_min_ms < v_max_ms && v_max_ms.is_finite()) {
            return Err(ViabilityError::InvalidEnvelope(v_min_ms, v_max_ms));
        }
        Ok(Self { v_min_ms, v_max_ms })
    }

    pub fn from_knots(v_min_kts: f64, v_max_kts: f64) -> Result<Self, ViabilityError> {
        Self::new(knots_to_ms(v_min_kts), knots_to_ms(v_max_kts))
    }

    pub fn contains(&self, airspeed_ms: f64) -> bool {
        airspeed_ms >= self.v_min_ms && airspeed_ms <= self.v_max_ms
    }
}

/// Closed interval of admissible airspeed rates; bounds may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConeInterval {
    pub lower: f64,
    pub upper: f64,
}

impl ConeInterval {
    pub const FULL: ConeInterval = ConeInterval {
        lower: f64::NEG_INFINITY,
        upper: f64::INFINITY,
    };

    pub fn contains(&self, rate: f64) -> bool {
        rate >= self.lower && rate <= self.upper
    }
}

/// Interval of flight path angles, or an explicitly empty set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GammaInterval {
    pub lo_rad: f64,
    pub hi_rad: f64,
    #[serde(default)]
    pub empty: bool,
}

impl GammaInterval {
    /// Returns an empty interval when `lo_rad > hi_rad`.
    pub fn new(lo_rad: f64, hi_rad: f64) -> Self {
        Self {
            lo_rad,
            hi_rad,
            empty: !(lo_rad <= hi_rad),
        }
    }

    pub fn from_degrees(lo_deg: f64, hi_deg: f64) -> Self {
        Self::new(lo_deg.to_radians(), hi_deg.to_radians())
    }

    pub fn is_empty(&self) -> bool {
        self.empty
    }

    pub fn contains(&self, gamma_rad: f64) -> bool {
        !self.empty && gamma_rad >= self.lo_rad && gamma_rad <= self.hi_rad
    }

    pub fn width(&self) -> f64 {
        if self.empty {
            0.0
        } else {
            self.hi_rad - self.lo_rad
        }
    }

    pub fn intersect(&self, other: &GammaInterval) -> GammaInterval {
        if self.empty || other.empty {
            return GammaInterval { empty: true, ..*self };
        }
        GammaInterval::new(self.lo_rad.max(other.lo_rad), self.hi_rad.min(other.hi_rad))
    }
}

/// Contingent cone of the envelope at `airspeed_ms`.
pub fn contingent_cone(env: &AirspeedEnvelope, airspeed_ms: f64) -> Result<ConeInterval, ViabilityError> {
    let outside = || ViabilityError::OutsideEnvelope {
        airspeed_ms,
        v_min_ms: env.v_min_ms,
        v_max_ms: env.v_max_ms,
    };
    if !(airspeed_ms >= env.v_min_ms - BOUNDARY_TOL_MS && airspeed_ms <= env.v_max_ms + BOUNDARY_TOL_MS) {
        return Err(outside());
    }
    if (airspeed_ms - env.v_min_ms).abs() <= BOUNDARY_TOL_MS {
        Ok(ConeInterval {
            lower: 0.0,
            upper: f64::INFINITY,
        })
    } else if (airspeed_ms - env.v_max_ms).abs() <= BOUNDARY_TOL_MS {
        Ok(ConeInterval {
            lower: f64::NEG_INFINITY,
            upper: 0.0,
        })
    } else {
        Ok(ConeInterval::FULL)
    }
}

fn rate_at(p: &AircraftParams, airspeed_ms: f64, gamma_air_rad: f64, bank_rad: f64) -> f64 {
    airspeed_rate(
        p,
        &FlightCondition {
            airspeed_ms,
            gamma_air_rad,
            bank_rad,
        },
    )
}

/// True when the airspeed rate points into the envelope at both bounds.
pub fn nagumo_boundary_ok(p: &AircraftParams, env: &AirspeedEnvelope, gamma_air_rad: f64, bank_rad: f64) -> bool {
    rate_at(p, env.v_max_ms, gamma_air_rad, bank_rad) <= 0.0 && rate_at(p, env.v_min_ms, gamma_air_rad, bank_rad) >= 0.0
}

fn drag_to_weight(p: &AircraftParams, airspeed_ms: f64, gamma_air_rad: f64, bank_rad: f64) -> f64 {
    drag_n(
        p,
        &FlightCondition {
            airspeed_ms,
            gamma_air_rad,
            bank_rad,
        },
    ) / p.weight_n()
}

/// Solves `γ = asin(-D(v, γ)/W)` by fixed-point iteration.
///
/// Plain iteration first; the step is halved once successive corrections
/// change sign without shrinking. Falls back to bisection when the iteration
/// does not settle.
pub fn glide_bound_fixed_point(p: &AircraftParams, airspeed_ms: f64, bank_rad: f64) -> Result<f64, ViabilityError> {
    let mut gamma = 0.0;
    let mut damping = 1.0;
    let mut last_step = 0.0f64;
    for _ in 0..FIXED_POINT_MAX_ITER {
        let ratio = drag_to_weight(p, airspeed_ms, gamma, bank_rad);
        if ratio > 1.0 {
            return Err(ViabilityError::AsinDomain(ratio));
        }
        let step = (-ratio).asin() - gamma;
        if step.abs() <= FIXED_POINT_TOL_RAD {
            return Ok(gamma + step);
        }
        if last_step != 0.0 && step.signum() != last_step.signum() && step.abs() >= last_step.abs() {
            damping = 0.5;
        }
        gamma += damping * step;
        last_step = step;
    }
    glide_bound_bisection(p, airspeed_ms, bank_rad)
}

/// Root of `sin γ + D(v, γ)/W` on `[-π/2, 0]`.
pub fn glide_bound_bisection(p: &AircraftParams, airspeed_ms: f64, bank_rad: f64) -> Result<f64, ViabilityError> {
    let g = |gamma: f64| gamma.sin() + drag_to_weight(p, airspeed_ms, gamma, bank_rad);
    match bisect(g, -FRAC_PI_2, 0.0, 1e-14, 0.0, 200) {
        Bisection::Root(gamma) => Ok(gamma),
        Bisection::NoSignChange => Err(ViabilityError::AsinDomain(drag_to_weight(
            p,
            airspeed_ms,
            0.0,
            bank_rad,
        ))),
    }
}

/// Interval of air-relative flight path angles satisfying both boundary
/// tangency conditions.
pub fn viable_gamma_air_interval(
    p: &AircraftParams,
    env: &AirspeedEnvelope,
    bank_rad: f64,
) -> Result<GammaInterval, ViabilityError> {
    let lower = glide_bound_fixed_point(p, env.v_max_ms, bank_rad)?;
    let upper = glide_bound_fixed_point(p, env.v_min_ms, bank_rad)?;
    if lower > upper {
        return Err(ViabilityError::EmptyInterval {
            lower_rad: lower,
            upper_rad: upper,
        });
    }
    Ok(GammaInterval::new(lower, upper))
}

/// Projection of the viable air-relative interval to ground-referenced flight
/// path angles for flight along `course_rad` at `airspeed_ms`.
pub fn viable_gamma_ground_interval(
    p: &AircraftParams,
    env: &AirspeedEnvelope,
    bank_rad: f64,
    airspeed_ms: f64,
    course_rad: f64,
    w: &WindVector,
) -> Result<GammaInterval, ViabilityError> {
    let air = viable_gamma_air_interval(p, env, bank_rad)?;
    let project = |gamma_air: f64| -> Result<f64, ViabilityError> {
        let state = air_state_along_course(gamma_air, airspeed_ms, course_rad, w)?;
        Ok(gamma_air_to_ground(gamma_air, &state, w)?)
    };
    Ok(GammaInterval::new(project(air.lo_rad)?, project(air.hi_rad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airframe::equilibrium_glide_angle;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn default_env() -> AirspeedEnvelope {
        AirspeedEnvelope::from_knots(80.0, 100.0).unwrap()
    }

    #[test]
    fn envelope_validation() {
        assert!(AirspeedEnvelope::new(50.0, 40.0).is_err());
        assert!(AirspeedEnvelope::new(0.0, 40.0).is_err());
        assert!(AirspeedEnvelope::new(40.0, 40.0).is_err());
        assert!(AirspeedEnvelope::new(40.0, f64::INFINITY).is_err());
    }

    #[test]
    fn cone_cases() {
        let env = default_env();
        assert_eq!(contingent_cone(&env, knots_to_ms(90.0)).unwrap(), ConeInterval::FULL);
        let at_min = contingent_cone(&env, env.v_min_ms).unwrap();
        assert_eq!((at_min.lower, at_min.upper), (0.0, f64::INFINITY));
        let at_max = contingent_cone(&env, env.v_max_ms).unwrap();
        assert_eq!((at_max.lower, at_max.upper), (f64::NEG_INFINITY, 0.0));
        // within tolerance of the bound still counts as the bound
        let near = contingent_cone(&env, env.v_min_ms + 5e-10).unwrap();
        assert_eq!(near.lower, 0.0);
        assert!(matches!(
            contingent_cone(&env, env.v_max_ms + 1e-6),
            Err(ViabilityError::OutsideEnvelope { .. })
        ));
    }

    #[test]
    fn nagumo_examples() {
        let p = AircraftParams::default();
        let env = default_env();
        // level flight decelerates at both bounds
        assert!(rate_at(&p, env.v_min_ms, 0.0, 0.0) < 0.0);
        assert!(rate_at(&p, env.v_max_ms, 0.0, 0.0) < 0.0);
        assert!(!nagumo_boundary_ok(&p, &env, 0.0, 0.0));
        // vertical dive accelerates at both bounds
        assert!(rate_at(&p, env.v_max_ms, -FRAC_PI_2, 0.0) > 0.0);
        assert!(!nagumo_boundary_ok(&p, &env, -FRAC_PI_2, 0.0));
        let interval = viable_gamma_air_interval(&p, &env, 0.0).unwrap();
        let mid = 0.5 * (interval.lo_rad + interval.hi_rad);
        assert!(nagumo_boundary_ok(&p, &env, mid, 0.0));
    }

    #[test]
    fn zero_drag_interval_is_level() {
        let p = AircraftParams {
            cd0: 0.0,
            induced_factor_k: 0.0,
            ..Default::default()
        };
        let i = viable_gamma_air_interval(&p, &default_env(), 0.0).unwrap();
        assert_eq!((i.lo_rad, i.hi_rad), (0.0, 0.0));
    }

    #[test]
    fn default_interval() {
        let p = AircraftParams::default();
        let i = viable_gamma_air_interval(&p, &default_env(), 0.0).unwrap();
        // bounds are the equilibrium glide angles at v_max and v_min
        let lo_oracle = equilibrium_glide_angle(&p, default_env().v_max_ms, 0.0).unwrap();
        let hi_oracle = equilibrium_glide_angle(&p, default_env().v_min_ms, 0.0).unwrap();
        assert!((i.lo_rad - lo_oracle).abs() < 1e-9);
        assert!((i.hi_rad - hi_oracle).abs() < 1e-9);
        assert!(
            (i.lo_rad.to_degrees() - -4.56).abs() < 0.01,
            "{}",
            i.lo_rad.to_degrees()
        );
        assert!(
            (i.hi_rad.to_degrees() - -4.41).abs() < 0.01,
            "{}",
            i.hi_rad.to_degrees()
        );
        let feasible = GammaInterval::from_degrees(-10.0, 0.0);
        assert!(feasible.contains(i.lo_rad) && feasible.contains(i.hi_rad));
    }

    #[test]
    fn back_side_envelope_is_empty() {
        // both bounds below the minimum drag speed: drag falls with speed
        let p = AircraftParams::default();
        let vmd = p.min_drag_speed_ms();
        let env = AirspeedEnvelope::new(0.6 * vmd, 0.8 * vmd).unwrap();
        assert!(matches!(
            viable_gamma_air_interval(&p, &env, 0.0),
            Err(ViabilityError::EmptyInterval { .. })
        ));
    }

    #[test]
    fn drag_heavier_than_weight() {
        let p = AircraftParams {
            cd0: 2.0,
            ..Default::default()
        };
        assert!(matches!(
            viable_gamma_air_interval(&p, &default_env(), 0.0),
            Err(ViabilityError::AsinDomain(_))
        ));
    }

    #[test]
    fn ground_interval_calm_matches_air() {
        let p = AircraftParams::default();
        let env = default_env();
        let air = viable_gamma_air_interval(&p, &env, 0.0).unwrap();
        let ground = viable_gamma_ground_interval(&p, &env, 0.0, knots_to_ms(90.0), 0.4, &WindVector::CALM).unwrap();
        assert!((ground.lo_rad - air.lo_rad).abs() < 1e-15);
        assert!((ground.hi_rad - air.hi_rad).abs() < 1e-15);
    }

    #[test]
    fn headwind_steepens_ground_interval() {
        let p = AircraftParams::default();
        let env = default_env();
        let va = knots_to_ms(90.0);
        let air = viable_gamma_air_interval(&p, &env, 0.0).unwrap();
        let head = WindVector::from_speed_direction(10.0, 0.0);
        let ground = viable_gamma_ground_interval(&p, &env, 0.0, va, 0.0, &head).unwrap();
        // oracle: same climb rate over the smaller ground speed
        let oracle = |gamma_a: f64| {
            let climb = va * gamma_a.sin();
            (climb / (va * gamma_a.cos() - 10.0).hypot(climb)).asin()
        };
        assert!((ground.lo_rad - oracle(air.lo_rad)).abs() < 1e-12);
        assert!((ground.hi_rad - oracle(air.hi_rad)).abs() < 1e-12);
        assert!(ground.lo_rad < air.lo_rad && ground.hi_rad < air.hi_rad);
        assert!(ground.width() > air.width());
    }

    #[test]
    fn interval_set_operations() {
        let a = GammaInterval::new(-0.2, 0.0);
        let b = GammaInterval::new(-0.1, 0.3);
        let c = a.intersect(&b);
        assert_eq!((c.lo_rad, c.hi_rad, c.empty), (-0.1, 0.0, false));
        let d = a.intersect(&GammaInterval::new(0.1, 0.2));
        assert!(d.is_empty());
        assert!(!d.contains(0.0));
    }

    proptest! {
        #[test]
        fn inward_flow_inside_interval(frac in 0.001f64..0.999, bank in -0.25f64..0.25) {
            let p = AircraftParams::default();
            let env = default_env();
            let i = viable_gamma_air_interval(&p, &env, bank).unwrap();
            let gamma = i.lo_rad + frac * (i.hi_rad - i.lo_rad);
            prop_assert!(rate_at(&p, env.v_min_ms, gamma, bank) > 0.0);
            prop_assert!(rate_at(&p, env.v_max_ms, gamma, bank) < 0.0);
        }

        #[test]
        fn cone_and_nagumo_agree(gamma in -0.3f64..0.05, bank in -0.4f64..0.4) {
            let p = AircraftParams::default();
            let env = default_env();
            let in_cone = |v: f64| contingent_cone(&env, v).unwrap().contains(rate_at(&p, v, gamma, bank));
            prop_assert_eq!(nagumo_boundary_ok(&p, &env, gamma, bank), in_cone(env.v_min_ms) && in_cone(env.v_max_ms));
        }

        #[test]
        fn ground_endpoints_ordered(speed in 0.0f64..20.0, from in -PI..PI, course in -PI..PI) {
            let p = AircraftParams::default();
            let env = default_env();
            let w = WindVector::from_speed_direction(speed, from);
            let g = viable_gamma_ground_interval(&p, &env, 0.0, knots_to_ms(90.0), course, &w).unwrap();
            prop_assert!(g.lo_rad <= g.hi_rad);
        }
    }
}
