//! Steady-wind coupling between air-relative and ground-referenced motion.
//!
//! Vectors are north-east-down. Flight path angles are positive nose-up, so
//! the vertical velocity component is `-v sin γ`. Courses, headings and wind
//! directions are measured clockwise from north; wind directions are the
//! meteorological "from" bearing, so a wind from `0` is a headwind for a
//! northbound aircraft.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Velocities below this magnitude have no defined direction.
pub const DEGENERATE_SPEED_MS: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WindError {
    #[error("ground velocity magnitude {0} m/s is degenerate")]
    DegenerateVelocity(f64),
    #[error("no wind triangle solution: {0}")]
    NoSolution(String),
    #[error("wind triangle has two admissible ground speeds ({0} and {1} m/s)")]
    AmbiguousSolution(f64, f64),
    #[error("wind must be horizontal (down component {0} m/s)")]
    NonHorizontalWind(f64),
}

/// Steady inertial wind velocity, in m/s.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct WindVector {
    pub north_ms: f64,
    pub east_ms: f64,
    pub down_ms: f64,
}

impl WindVector {
    pub const CALM: WindVector = WindVector {
        north_ms: 0.0,
        east_ms: 0.0,
        down_ms: 0.0,
    };

    /// General wind vector. Only the horizontal constructor is accepted by
    /// the guidance and simulation paths.
    pub fn new(north_ms: f64, east_ms: f64, down_ms: f64) -> Self {
        Self {
            north_ms,
            east_ms,
            down_ms,
        }
    }

    pub fn horizontal(north_ms: f64, east_ms: f64) -> Self {
        Self::new(north_ms, east_ms, 0.0)
    }

    /// Wind of `speed_ms` blowing from bearing `from_rad`.
    pub fn from_speed_direction(speed_ms: f64, from_rad: f64) -> Self {
        if speed_ms == 0.0 {
            // keep calm wind free of signed zeros so it is bit-identical for
            // every direction
            return Self::CALM;
        }
        Self::horizontal(-speed_ms * from_rad.cos(), -speed_ms * from_rad.sin())
    }

    pub fn speed_ms(&self) -> f64 {
        (self.north_ms * self.north_ms + self.east_ms * self.east_ms + self.down_ms * self.down_ms).sqrt()
    }

    pub fn horizontal_speed_ms(&self) -> f64 {
        self.north_ms.hypot(self.east_ms)
    }

    /// Bearing the wind blows from, in `[-π, π]`. Zero for calm wind.
    pub fn from_direction_rad(&self) -> f64 {
        if self.horizontal_speed_ms() == 0.0 {
            0.0
        } else {
            (-self.east_ms).atan2(-self.north_ms)
        }
    }

    pub fn is_horizontal(&self) -> bool {
        self.down_ms == 0.0
    }

    /// The same wind expressed relative to a vehicle on `course_rad`, i.e.
    /// rotated so that the course becomes north.
    pub fn relative_to_course(&self, course_rad: f64) -> Self {
        let (s, c) = course_rad.sin_cos();
        Self {
            north_ms: self.north_ms * c + self.east_ms * s,
            east_ms: -self.north_ms * s + self.east_ms * c,
            down_ms: self.down_ms,
        }
    }

    pub fn as_ned(&self) -> [f64; 3] {
        [self.north_ms, self.east_ms, self.down_ms]
    }

    fn require_horizontal(&self) -> Result<(), WindError> {
        if self.is_horizontal() {
            Ok(())
        } else {
            Err(WindError::NonHorizontalWind(self.down_ms))
        }
    }
}

/// Ground-referenced motion: course, flight path angle and ground speed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundState {
    pub course_rad: f64,
    pub gamma_ground_rad: f64,
    pub groundspeed_ms: f64,
}

/// Air-relative motion: heading, flight path angle and airspeed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AirState {
    pub heading_rad: f64,
    pub gamma_air_rad: f64,
    pub airspeed_ms: f64,
}

impl AirState {
    pub fn velocity_ned(&self) -> [f64; 3] {
        velocity_ned(self.airspeed_ms, self.heading_rad, self.gamma_air_rad)
    }
}

fn velocity_ned(speed: f64, bearing: f64, gamma: f64) -> [f64; 3] {
    let (sg, cg) = gamma.sin_cos();
    let (sb, cb) = bearing.sin_cos();
    [speed * cg * cb, speed * cg * sb, -speed * sg]
}

fn norm(v: [f64; 3]) -> f64 {
    (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt()
}

/// Inertial velocity `va + vw`.
pub fn compose_ground_velocity(a: &AirState, w: &WindVector) -> [f64; 3] {
    let va = a.velocity_ned();
    let vw = w.as_ned();
    [va[0] + vw[0], va[1] + vw[1], va[2] + vw[2]]
}

/// Maps an air-relative flight path angle to the ground-referenced one for
/// the air velocity direction in `a`.
///
/// The climb component of the ground velocity is `va sin γa - w_down`, which
/// follows from composing the NED vectors.
pub fn gamma_air_to_ground(gamma_air_rad: f64, a: &AirState, w: &WindVector) -> Result<f64, WindError> {
    let air = AirState { gamma_air_rad, ..*a };
    let vg = compose_ground_velocity(&air, w);
    let speed = norm(vg);
    if !(speed > DEGENERATE_SPEED_MS) {
        return Err(WindError::DegenerateVelocity(speed));
    }
    let climb = a.airspeed_ms * gamma_air_rad.sin() - w.down_ms;
    Ok((climb / speed).clamp(-1.0, 1.0).asin())
}

/// Solution of the wind triangle for a ground-referenced command.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TriangleSolution {
    pub gamma_air_rad: f64,
    pub groundspeed_ms: f64,
    pub heading_rad: f64,
}

impl TriangleSolution {
    pub fn air_state(&self, airspeed_ms: f64) -> AirState {
        AirState {
            heading_rad: self.heading_rad,
            gamma_air_rad: self.gamma_air_rad,
            airspeed_ms,
        }
    }
}

/// Residuals of the two governing equations of the wind triangle:
/// vertical balance `va sin γa - vg sin γg` and the horizontal law of cosines.
pub fn triangle_residuals(
    gamma_ground_rad: f64,
    airspeed_ms: f64,
    course_rad: f64,
    w: &WindVector,
    sol: &TriangleSolution,
) -> (f64, f64) {
    let vg = sol.groundspeed_ms;
    let vertical = airspeed_ms * sol.gamma_air_rad.sin() - vg * gamma_ground_rad.sin();
    let vw = w.horizontal_speed_ms();
    let ground_h = vg * gamma_ground_rad.cos();
    // cos(χ - χw) with χw the direction the wind blows toward
    let along = if vw > 0.0 {
        (w.north_ms * course_rad.cos() + w.east_ms * course_rad.sin()) / vw
    } else {
        0.0
    };
    let air_h = airspeed_ms * sol.gamma_air_rad.cos();
    let horizontal = air_h * air_h - (ground_h * ground_h - 2.0 * ground_h * vw * along + vw * vw);
    (vertical, horizontal)
}

/// Recovers the air-relative state that realises ground-referenced flight
/// path angle `gamma_ground_rad` along `course_rad` at the given airspeed.
///
/// With horizontal wind the airspeed constraint reduces to a quadratic in
/// ground speed, `vg² - 2 vg cos γg w∥ + |w|² - va² = 0`. For `va > |w|` the
/// product of its roots is negative, so exactly one root is admissible.
pub fn gamma_ground_to_air(
    gamma_ground_rad: f64,
    airspeed_ms: f64,
    course_rad: f64,
    w: &WindVector,
) -> Result<TriangleSolution, WindError> {
    w.require_horizontal()?;
    if !(airspeed_ms > 0.0) {
        return Err(WindError::NoSolution(format!("airspeed {airspeed_ms} m/s")));
    }
    let (s_chi, c_chi) = course_rad.sin_cos();
    let (s_g, c_g) = gamma_ground_rad.sin_cos();
    let w_along = w.north_ms * c_chi + w.east_ms * s_chi;
    let w2 = w.north_ms * w.north_ms + w.east_ms * w.east_ms;
    let b = c_g * w_along;
    let c = w2 - airspeed_ms * airspeed_ms;
    let disc = b * b - c;
    if disc < 0.0 {
        return Err(WindError::NoSolution(format!(
            "crosswind exceeds airspeed {airspeed_ms} m/s on course {course_rad} rad"
        )));
    }
    let root = disc.sqrt();
    // larger root, written to avoid cancellation when b < 0
    let mut vg = if b >= 0.0 { b + root } else { -c / (root - b) };
    if c > 0.0 {
        let other = c / vg;
        if other > 0.0 && vg > 0.0 {
            return Err(WindError::AmbiguousSolution(other.min(vg), other.max(vg)));
        }
    }
    if !(vg > DEGENERATE_SPEED_MS) {
        return Err(WindError::NoSolution(format!(
            "wind prevents progress along course {course_rad} rad"
        )));
    }
    // one Newton step tightens the residual to round-off
    let residual = vg * vg - 2.0 * b * vg + c;
    let slope = 2.0 * (vg - b);
    if slope != 0.0 {
        vg -= residual / slope;
    }

    let climb = vg * s_g;
    let gamma_air_rad = (climb / airspeed_ms).clamp(-1.0, 1.0).asin();
    let ground_h = vg * c_g;
    let air_n = ground_h * c_chi - w.north_ms;
    let air_e = ground_h * s_chi - w.east_ms;
    Ok(TriangleSolution {
        gamma_air_rad,
        groundspeed_ms: vg,
        heading_rad: air_e.atan2(air_n),
    })
}

/// Air heading that keeps the ground track on `course_rad` at the given
/// air-relative flight path angle and airspeed.
pub fn air_state_along_course(
    gamma_air_rad: f64,
    airspeed_ms: f64,
    course_rad: f64,
    w: &WindVector,
) -> Result<AirState, WindError> {
    w.require_horizontal()?;
    let air_h = airspeed_ms * gamma_air_rad.cos();
    let (s_chi, c_chi) = course_rad.sin_cos();
    let w_cross = -w.north_ms * s_chi + w.east_ms * c_chi;
    let w_along = w.north_ms * c_chi + w.east_ms * s_chi;
    if !(air_h > w_cross.abs()) {
        return Err(WindError::NoSolution(format!(
            "crosswind {w_cross} m/s exceeds horizontal airspeed {air_h} m/s"
        )));
    }
    let crab = (-w_cross / air_h).asin();
    if air_h * crab.cos() + w_along <= 0.0 {
        return Err(WindError::NoSolution(format!(
            "headwind {w_along} m/s prevents progress along course"
        )));
    }
    Ok(AirState {
        heading_rad: course_rad + crab,
        gamma_air_rad,
        airspeed_ms,
    })
}
