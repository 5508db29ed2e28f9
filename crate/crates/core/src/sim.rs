//! Point-mass gliding simulation under steady wind.
//!
//! The aircraft holds a constant ground-referenced flight path angle command
//! and a constant course rate over each segment. At every integrator stage the
//! wind triangle recovers the air-relative flight path angle, which drives
//! the airspeed rate; position follows the ground velocity along the course.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::airframe::{airspeed_rate, AircraftParams, FlightCondition};
use crate::units::{knots_to_ms, ms_to_knots};
use crate::windframe::{gamma_ground_to_air, WindError, WindVector};

/// Default integration step, in seconds.
pub const DEFAULT_DT_S: f64 = 0.01;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("wind triangle failure at t = {t_s} s: {source}")]
    WindTriangleFailure { t_s: f64, source: WindError },
    #[error("non-finite or non-positive state at t = {0} s")]
    NonFiniteState(f64),
    #[error("airspeed decayed to zero at t = {0} s")]
    AirspeedCollapse(f64),
    #[error("invalid step size {0} s")]
    InvalidStep(f64),
    #[error("trajectory i/o: {0}")]
    Io(String),
}

/// One sample of the simulated aircraft.
///
/// `gamma_g_cmd_rad`, `bank_rad` and `turn_rate_rad_s` are the command active
/// while integrating *from* this sample; `gamma_air_rad` is the air-relative
/// flight path angle that command induces at this sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    pub t_s: f64,
    pub north_m: f64,
    pub east_m: f64,
    pub alt_m: f64,
    pub airspeed_ms: f64,
    pub course_rad: f64,
    pub gamma_g_cmd_rad: f64,
    pub gamma_air_rad: f64,
    pub bank_rad: f64,
    pub turn_rate_rad_s: f64,
}

impl SimState {
    /// Wings-level state with no active command.
    pub fn at_rest(north_m: f64, east_m: f64, alt_m: f64, airspeed_ms: f64, course_rad: f64) -> Self {
        Self {
            t_s: 0.0,
            north_m,
            east_m,
            alt_m,
            airspeed_ms,
            course_rad,
            gamma_g_cmd_rad: 0.0,
            gamma_air_rad: 0.0,
            bank_rad: 0.0,
            turn_rate_rad_s: 0.0,
        }
    }

    pub fn with_command(mut self, cmd: &Command) -> Self {
        self.gamma_g_cmd_rad = cmd.gamma_g_rad;
        self.bank_rad = cmd.bank_rad;
        self.turn_rate_rad_s = cmd.turn_rate_rad_s;
        self
    }

    fn is_valid(&self) -> bool {
        [
            self.t_s,
            self.north_m,
            self.east_m,
            self.alt_m,
            self.course_rad,
            self.gamma_air_rad,
        ]
        .iter()
        .all(|x| x.is_finite())
            && self.airspeed_ms > 0.0
            && self.airspeed_ms.is_finite()
    }
}

/// Constant guidance command held over a segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Command {
    pub gamma_g_rad: f64,
    pub turn_rate_rad_s: f64,
    pub bank_rad: f64,
    pub duration_s: f64,
}

/// Provenance attached to a trajectory.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryMeta {
    pub fingerprint: Option<String>,
    /// Course changes of the executed primitives, in degrees.
    pub primitive_dchi_deg: Vec<f64>,
    pub seed: Option<u64>,
}

/// Ordered simulation samples with strictly increasing time.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub states: Vec<SimState>,
    pub meta: TrajectoryMeta,
}

impl Trajectory {
    pub fn single(state: SimState) -> Self {
        Self {
            states: vec![state],
            meta: TrajectoryMeta::default(),
        }
    }

    pub fn first(&self) -> Option<&SimState> {
        self.states.first()
    }

    pub fn last(&self) -> Option<&SimState> {
        self.states.last()
    }

    pub fn duration_s(&self) -> f64 {
        match (self.states.first(), self.states.last()) {
            (Some(a), Some(b)) => b.t_s - a.t_s,
            _ => 0.0,
        }
    }

    /// Appends `other`, dropping its first sample when it duplicates our last.
    pub fn extend_continuous(&mut self, other: Trajectory) {
        let mut iter = other.states.into_iter().peekable();
        if let (Some(last), Some(first)) = (self.states.last(), iter.peek()) {
            if first.t_s <= last.t_s {
                iter.next();
            }
        }
        self.states.extend(iter);
        self.meta.primitive_dchi_deg.extend(other.meta.primitive_dchi_deg);
    }
}

// integrated components: north, east, altitude, airspeed
type Vector = [f64; 4];

struct Stage {
    deriv: Vector,
    gamma_air_rad: f64,
}

fn check_airspeed(airspeed: f64, t_s: f64) -> Result<(), SimError> {
    if !airspeed.is_finite() {
        Err(SimError::NonFiniteState(t_s))
    } else if airspeed <= 0.0 {
        Err(SimError::AirspeedCollapse(t_s))
    } else {
        Ok(())
    }
}

fn derivative(
    p: &AircraftParams,
    w: &WindVector,
    cmd: &Command,
    course_rad: f64,
    y: &Vector,
    t_s: f64,
) -> Result<Stage, SimError> {
    let airspeed = y[3];
    check_airspeed(airspeed, t_s)?;
    let tri = gamma_ground_to_air(cmd.gamma_g_rad, airspeed, course_rad, w)
        .map_err(|source| SimError::WindTriangleFailure { t_s, source })?;
    let (s_g, c_g) = cmd.gamma_g_rad.sin_cos();
    let (s_c, c_c) = course_rad.sin_cos();
    let vg = tri.groundspeed_ms;
    let rate = airspeed_rate(
        p,
        &FlightCondition {
            airspeed_ms: airspeed,
            gamma_air_rad: tri.gamma_air_rad,
            bank_rad: cmd.bank_rad,
        },
    );
    Ok(Stage {
        deriv: [vg * c_g * c_c, vg * c_g * s_c, vg * s_g, rate],
        gamma_air_rad: tri.gamma_air_rad,
    })
}

fn axpy(y: &Vector, h: f64, k: &Vector) -> Vector {
    [y[0] + h * k[0], y[1] + h * k[1], y[2] + h * k[2], y[3] + h * k[3]]
}

/// Induced air-relative flight path angle for the command held in `state`.
pub fn induced_gamma_air(w: &WindVector, state: &SimState) -> Result<f64, SimError> {
    gamma_ground_to_air(state.gamma_g_cmd_rad, state.airspeed_ms, state.course_rad, w)
        .map(|t| t.gamma_air_rad)
        .map_err(|source| SimError::WindTriangleFailure { t_s: state.t_s, source })
}

/// Advances `state` by `dt` with the classical fourth-order Runge-Kutta
/// scheme, holding the command stored in `state`. The course is advanced
/// exactly as `rate * dt`.
pub fn step(p: &AircraftParams, w: &WindVector, state: &SimState, dt: f64) -> Result<SimState, SimError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::InvalidStep(dt));
    }
    let cmd = Command {
        gamma_g_rad: state.gamma_g_cmd_rad,
        turn_rate_rad_s: state.turn_rate_rad_s,
        bank_rad: state.bank_rad,
        duration_s: dt,
    };
    step_segment(p, w, state, &cmd, state.course_rad, 0.0, dt)
}

/// One RK4 step where the course at elapsed segment time `s` is
/// `course0 + rate * s`.
fn step_segment(
    p: &AircraftParams,
    w: &WindVector,
    state: &SimState,
    cmd: &Command,
    course0: f64,
    elapsed: f64,
    dt: f64,
) -> Result<SimState, SimError> {
    let y = [state.north_m, state.east_m, state.alt_m, state.airspeed_ms];
    let t = state.t_s;
    let course = |s: f64| course0 + cmd.turn_rate_rad_s * s;
    let k1 = derivative(p, w, cmd, course(elapsed), &y, t)?.deriv;
    let k2 = derivative(p, w, cmd, course(elapsed + 0.5 * dt), &axpy(&y, 0.5 * dt, &k1), t)?.deriv;
    let k3 = derivative(p, w, cmd, course(elapsed + 0.5 * dt), &axpy(&y, 0.5 * dt, &k2), t)?.deriv;
    let k4 = derivative(p, w, cmd, course(elapsed + dt), &axpy(&y, dt, &k3), t)?.deriv;
    let mut next = [0.0; 4];
    for i in 0..4 {
        next[i] = y[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    let mut out = SimState {
        t_s: t + dt,
        north_m: next[0],
        east_m: next[1],
        alt_m: next[2],
        airspeed_ms: next[3],
        course_rad: course(elapsed + dt),
        gamma_g_cmd_rad: cmd.gamma_g_rad,
        gamma_air_rad: 0.0,
        bank_rad: cmd.bank_rad,
        turn_rate_rad_s: cmd.turn_rate_rad_s,
    };
    check_airspeed(out.airspeed_ms, out.t_s)?;
    out.gamma_air_rad = derivative(p, w, cmd, out.course_rad, &next, out.t_s)?.gamma_air_rad;
    if !out.is_valid() {
        return Err(SimError::NonFiniteState(out.t_s));
    }
    Ok(out)
}

/// Integrates a constant command for `cmd.duration_s` seconds starting from
/// `start`. The first sample is `start` with the command applied; the last
/// lands exactly on `start.t_s + duration` with course advanced by exactly
/// `rate * duration`.
pub fn run_command(
    p: &AircraftParams,
    w: &WindVector,
    start: &SimState,
    cmd: &Command,
    dt: f64,
) -> Result<Trajectory, SimError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(SimError::InvalidStep(dt));
    }
    let mut first = start.with_command(cmd);
    first.gamma_air_rad = induced_gamma_air(w, &first)?;
    let duration = cmd.duration_s.max(0.0);
    let ratio = duration / dt;
    let nearest = ratio.round();
    let (full_steps, remainder) = if (ratio - nearest).abs() < 1e-9 * ratio.max(1.0) {
        (nearest as usize, 0.0)
    } else {
        let n = ratio.floor();
        (n as usize, duration - n * dt)
    };
    let mut states = Vec::with_capacity(full_steps + 2);
    states.push(first);
    let t0 = first.t_s;
    let course0 = first.course_rad;
    let mut current = first;
    for k in 0..full_steps {
        let elapsed = k as f64 * dt;
        let h = if remainder == 0.0 && k + 1 == full_steps {
            // land exactly on the segment end
            duration - elapsed
        } else {
            dt
        };
        let mut next = step_segment(p, w, &current, cmd, course0, elapsed, h)?;
        next.t_s = t0 + elapsed + h;
        states.push(next);
        current = next;
    }
    if remainder > 0.0 {
        let elapsed = full_steps as f64 * dt;
        let mut next = step_segment(p, w, &current, cmd, course0, elapsed, duration - elapsed)?;
        next.t_s = t0 + duration;
        states.push(next);
    }
    Ok(Trajectory {
        states,
        meta: TrajectoryMeta::default(),
    })
}

/// CSV column header of exported trajectories.
pub const CSV_HEADER: [&str; 9] = [
    "t_s",
    "north_m",
    "east_m",
    "alt_m",
    "airspeed_kts",
    "gamma_g_deg",
    "gamma_a_deg",
    "course_deg",
    "bank_deg",
];

/// Writes the trajectory as CSV in knots and degrees.
pub fn write_csv<W: Write>(traj: &Trajectory, out: W) -> Result<(), SimError> {
    let mut writer = csv::Writer::from_writer(out);
    let io = |e: csv::Error| SimError::Io(e.to_string());
    writer.write_record(CSV_HEADER).map_err(io)?;
    for s in &traj.states {
        let row = [
            s.t_s,
            s.north_m,
            s.east_m,
            s.alt_m,
            ms_to_knots(s.airspeed_ms),
            s.gamma_g_cmd_rad.to_degrees(),
            s.gamma_air_rad.to_degrees(),
            s.course_rad.to_degrees(),
            s.bank_rad.to_degrees(),
        ];
        writer.write_record(row.iter().map(|x| x.to_string())).map_err(io)?;
    }
    writer.flush().map_err(|e| SimError::Io(e.to_string()))
}

/// Reads a trajectory CSV written by [`write_csv`]. Turn rates are not
/// exported and come back as zero.
pub fn read_csv<R: Read>(input: R) -> Result<Trajectory, SimError> {
    let mut reader = csv::Reader::from_reader(input);
    let headers = reader.headers().map_err(|e| SimError::Io(e.to_string()))?.clone();
    let mut index = [0usize; 9];
    for (slot, name) in index.iter_mut().zip(CSV_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| SimError::Io(format!("missing column {name}")))?;
    }
    let mut states = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| SimError::Io(e.to_string()))?;
        let mut v = [0.0; 9];
        for (value, &col) in v.iter_mut().zip(&index) {
            let field = record.get(col).unwrap_or("");
            *value = field
                .trim()
                .parse()
                .map_err(|_| SimError::Io(format!("bad number {field:?}")))?;
        }
        states.push(SimState {
            t_s: v[0],
            north_m: v[1],
            east_m: v[2],
            alt_m: v[3],
            airspeed_ms: knots_to_ms(v[4]),
            gamma_g_cmd_rad: v[5].to_radians(),
            gamma_air_rad: v[6].to_radians(),
            course_rad: v[7].to_radians(),
            bank_rad: v[8].to_radians(),
            turn_rate_rad_s: 0.0,
        });
    }
    Ok(Trajectory {
        states,
        meta: TrajectoryMeta::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airframe::equilibrium_glide_angle;

    fn level(v: f64) -> SimState {
        SimState::at_rest(0.0, 0.0, 3000.0, v, 0.0)
    }

    #[test]
    fn equilibrium_holds_airspeed() {
        let p = AircraftParams::default();
        let v = knots_to_ms(90.0);
        let gamma = equilibrium_glide_angle(&p, v, 0.0).unwrap();
        let cmd = Command {
            gamma_g_rad: gamma,
            turn_rate_rad_s: 0.0,
            bank_rad: 0.0,
            duration_s: 60.0,
        };
        let traj = run_command(&p, &WindVector::CALM, &level(v), &cmd, DEFAULT_DT_S).unwrap();
        for s in &traj.states {
            assert!((s.airspeed_ms - v).abs() < 1e-6);
        }
        assert_eq!(traj.states.len(), 6001);
        assert_eq!(traj.last().unwrap().t_s, 60.0);
    }

    #[test]
    fn calm_descent_rate_matches_air_relative() {
        let p = AircraftParams::default();
        let start = level(45.0).with_command(&Command {
            gamma_g_rad: -0.1,
            turn_rate_rad_s: 0.0,
            bank_rad: 0.0,
            duration_s: 0.0,
        });
        let deriv = derivative(
            &p,
            &WindVector::CALM,
            &Command {
                gamma_g_rad: -0.1,
                turn_rate_rad_s: 0.0,
                bank_rad: 0.0,
                duration_s: 1.0,
            },
            0.0,
            &[0.0, 0.0, 3000.0, 45.0],
            0.0,
        )
        .unwrap();
        let gamma_a = induced_gamma_air(&WindVector::CALM, &start).unwrap();
        assert!((deriv.deriv[2] - 45.0 * gamma_a.sin()).abs() < 1e-12);
        assert!((deriv.deriv[2] - 45.0 * (-0.1f64).sin()).abs() < 1e-12);
    }

    #[test]
    fn partial_final_step_lands_on_duration() {
        let p = AircraftParams::default();
        let cmd = Command {
            gamma_g_rad: -0.08,
            turn_rate_rad_s: 0.05,
            bank_rad: 0.2,
            duration_s: 1.234,
        };
        let traj = run_command(&p, &WindVector::CALM, &level(46.0), &cmd, 0.1).unwrap();
        let last = traj.last().unwrap();
        assert_eq!(last.t_s, 1.234);
        assert!((last.course_rad - 0.05 * 1.234).abs() < 1e-15);
        assert!(traj.states.windows(2).all(|w| w[1].t_s > w[0].t_s));
    }

    #[test]
    fn rk4_order_on_turn() {
        // Richardson check: the final-state error should shrink ~16x per halving
        let p = AircraftParams::default();
        let w = WindVector::from_speed_direction(7.0, 0.3);
        let cmd = Command {
            gamma_g_rad: (-6.0f64).to_radians(),
            turn_rate_rad_s: 3f64.to_radians(),
            bank_rad: 0.24,
            duration_s: 30.0,
        };
        let start = level(knots_to_ms(90.0));
        let final_speed = |dt: f64| {
            run_command(&p, &w, &start, &cmd, dt)
                .unwrap()
                .last()
                .unwrap()
                .airspeed_ms
        };
        let (a, b, c) = (final_speed(1.0), final_speed(0.5), final_speed(0.25));
        let ratio = (a - b) / (b - c);
        assert!(ratio > 12.0 && ratio < 20.0, "ratio {ratio}");
    }

    #[test]
    fn rejects_bad_step() {
        let p = AircraftParams::default();
        assert!(matches!(
            step(&p, &WindVector::CALM, &level(40.0), 0.0),
            Err(SimError::InvalidStep(_))
        ));
    }

    #[test]
    fn wind_triangle_failure_surfaces() {
        let p = AircraftParams::default();
        let storm = WindVector::from_speed_direction(80.0, 0.0);
        assert!(matches!(
            step(&p, &storm, &level(40.0), 0.01),
            Err(SimError::WindTriangleFailure { .. })
        ));
    }

    #[test]
    fn csv_round_trip() {
        let p = AircraftParams::default();
        let cmd = Command {
            gamma_g_rad: -0.07,
            turn_rate_rad_s: 0.05,
            bank_rad: 0.2,
            duration_s: 0.5,
        };
        let traj = run_command(&p, &WindVector::CALM, &level(46.0), &cmd, 0.1).unwrap();
        let mut buf = Vec::new();
        write_csv(&traj, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("t_s,north_m,east_m,alt_m,airspeed_kts,gamma_g_deg,gamma_a_deg,course_deg,bank_deg\n"));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.states.len(), traj.states.len());
        for (a, b) in back.states.iter().zip(&traj.states) {
            assert!((a.airspeed_ms - b.airspeed_ms).abs() < 1e-12);
            assert_eq!(a.alt_m, b.alt_m);
        }
    }
}
