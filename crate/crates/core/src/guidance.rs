//! Viability-constrained selection of a constant ground-referenced flight
//! path angle for a turn maneuver in steady wind.
//!
//! Pointwise tangency is replaced by a time-averaged estimate: the maneuver is
//! simulated from each envelope bound, the airspeed history is resampled onto
//! a uniform grid, smoothed by a centred moving average, differentiated by
//! central differences and averaged. The command minimises the integrated
//! squared airspeed rate along the nominal trajectory while the averaged rate
//! is non-negative from `v_min` and non-positive from `v_max`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::airframe::{airspeed_rate, AircraftParams, FlightCondition};
use crate::numeric::golden_section;
use crate::sim::{run_command, Command, SimError, SimState, Trajectory};
use crate::units::knots_to_ms;
use crate::viability::{AirspeedEnvelope, GammaInterval};
use crate::windframe::WindVector;

#[derive(Debug, Error)]
pub enum GuidanceError {
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("invalid guidance parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("no feasible flight path angle in [{:.4}, {:.4}] deg (best tangency {:.3e} / {:.3e} m/s^2)",
        .0.box_lo_rad.to_degrees(), .0.box_hi_rad.to_degrees(), .0.best.tangency_min, .0.best.tangency_max)]
    Infeasible(Box<InfeasibleReport>),
}

/// Course change under a steady wind, flown at a reference airspeed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Maneuver {
    pub delta_course_rad: f64,
    pub wind: WindVector,
    pub ref_airspeed_ms: f64,
    pub initial_course_rad: f64,
}

impl Maneuver {
    pub fn new(delta_course_rad: f64, wind: WindVector) -> Self {
        Self {
            delta_course_rad,
            wind,
            ref_airspeed_ms: knots_to_ms(90.0),
            initial_course_rad: 0.0,
        }
    }

    pub fn validate(&self) -> Result<(), GuidanceError> {
        if !(self.delta_course_rad.abs() <= std::f64::consts::TAU) {
            return Err(GuidanceError::InvalidParams(format!(
                "course change {} rad exceeds 2π",
                self.delta_course_rad
            )));
        }
        if !(self.ref_airspeed_ms > 0.0) {
            return Err(GuidanceError::InvalidParams(
                "reference airspeed must be positive".into(),
            ));
        }
        if !self.wind.is_horizontal() {
            return Err(GuidanceError::InvalidParams("wind must be horizontal".into()));
        }
        Ok(())
    }
}

/// Turn rate and the straight-segment duration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HorizonParams {
    pub turn_rate_rad_s: f64,
    /// Duration of a maneuver without course change.
    pub tau_s: f64,
    /// Optional upper bound on turn durations; unbounded when `None`.
    #[serde(default)]
    pub cap_s: Option<f64>,
}

impl Default for HorizonParams {
    fn default() -> Self {
        Self {
            turn_rate_rad_s: 3f64.to_radians(),
            tau_s: 10.0,
            cap_s: None,
        }
    }
}

/// Resampling and smoothing of the averaged-tangency estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurrogateParams {
    /// Uniform resampling step.
    pub dt_s: f64,
    /// Moving-average half width, in samples.
    pub half_window: usize,
    /// Integration step of the simulations behind the estimate.
    pub sim_dt_s: f64,
}

impl Default for SurrogateParams {
    fn default() -> Self {
        Self {
            dt_s: 0.05,
            half_window: 5,
            sim_dt_s: 0.05,
        }
    }
}

/// Search settings of [`optimize_guidance`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerParams {
    pub gamma_box: GammaInterval,
    pub grid_points: usize,
    pub margin_lo: f64,
    pub margin_hi: f64,
    pub refine_tol_rad: f64,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            gamma_box: GammaInterval::from_degrees(-10.0, 0.0),
            grid_points: 41,
            margin_lo: 0.0,
            margin_hi: 0.0,
            refine_tol_rad: 1e-7,
        }
    }
}

/// Optimal command and its certificate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GuidanceSolution {
    pub gamma_g_star_rad: f64,
    pub cost: f64,
    pub tangency_min: f64,
    pub tangency_max: f64,
    pub converged: bool,
}

/// Diagnostics for a maneuver with no feasible command.
#[derive(Debug, Clone, PartialEq)]
pub struct InfeasibleReport {
    pub box_lo_rad: f64,
    pub box_hi_rad: f64,
    /// Least-violating candidate, with `converged == false`.
    pub best: GuidanceSolution,
}

/// Maneuver duration: `|Δχ| / χ̇` for a turn (optionally capped) and `τ` for
/// a straight segment.
pub fn horizon_s(m: &Maneuver, h: &HorizonParams) -> f64 {
    if m.delta_course_rad == 0.0 {
        return h.tau_s;
    }
    let turn = m.delta_course_rad.abs() / h.turn_rate_rad_s;
    match h.cap_s {
        Some(cap) => turn.min(cap),
        None => turn,
    }
}

/// Coordinated bank angle for a turn at `turn_rate_rad_s` flown at the
/// reference airspeed.
pub fn coordinated_bank_rad(p: &AircraftParams, ref_airspeed_ms: f64, turn_rate_rad_s: f64) -> f64 {
    (ref_airspeed_ms * turn_rate_rad_s / p.gravity_ms2).atan()
}

/// Constant command realising the maneuver with flight path angle `gamma_g_rad`.
pub fn maneuver_command(p: &AircraftParams, m: &Maneuver, h: &HorizonParams, gamma_g_rad: f64) -> Command {
    let duration_s = horizon_s(m, h);
    let turn_rate_rad_s = if m.delta_course_rad == 0.0 {
        0.0
    } else {
        m.delta_course_rad / duration_s
    };
    Command {
        gamma_g_rad,
        turn_rate_rad_s,
        bank_rad: coordinated_bank_rad(p, m.ref_airspeed_ms, turn_rate_rad_s),
        duration_s,
    }
}

/// Simulates the maneuver from airspeed `v0_ms` holding `gamma_g_rad`.
pub fn simulate_maneuver(
    p: &AircraftParams,
    m: &Maneuver,
    h: &HorizonParams,
    sim_dt_s: f64,
    gamma_g_rad: f64,
    v0_ms: f64,
) -> Result<Trajectory, GuidanceError> {
    let start = SimState::at_rest(0.0, 0.0, 0.0, v0_ms, m.initial_course_rad);
    let cmd = maneuver_command(p, m, h, gamma_g_rad);
    Ok(run_command(p, &m.wind, &start, &cmd, sim_dt_s)?)
}

/// Linear interpolation of `(t, v)` samples onto `τ_k = k Δt`, measured from
/// the first sample, for every `τ_k` inside the sampled span.
pub fn resample_uniform(samples: &[(f64, f64)], dt_s: f64) -> Result<Vec<(f64, f64)>, GuidanceError> {
    if samples.len() < 2 {
        return Err(GuidanceError::InsufficientSamples {
            needed: 2,
            got: samples.len(),
        });
    }
    if !(dt_s > 0.0) {
        return Err(GuidanceError::InvalidParams(format!("resampling step {dt_s}")));
    }
    if samples.windows(2).any(|w| !(w[1].0 > w[0].0)) {
        return Err(GuidanceError::InvalidParams(
            "sample times must be strictly increasing".into(),
        ));
    }
    let t0 = samples[0].0;
    let span = samples[samples.len() - 1].0 - t0;
    let count = (span / dt_s + 1e-9).floor() as usize;
    let mut out = Vec::with_capacity(count + 1);
    let mut seg = 0;
    for k in 0..=count {
        let tau = k as f64 * dt_s;
        let t = t0 + tau;
        while seg + 2 < samples.len() && samples[seg + 1].0 < t {
            seg += 1;
        }
        let (ta, va) = samples[seg];
        let (tb, vb) = samples[seg + 1];
        let value = if t <= ta {
            va
        } else if t >= tb {
            vb
        } else {
            va + (vb - va) * (t - ta) / (tb - ta)
        };
        out.push((tau, value));
    }
    Ok(out)
}

/// Centred moving average of half width `half_window`. Near the ends the
/// window shrinks symmetrically to fit, so the first and last values are kept.
pub fn moving_average(values: &[f64], half_window: usize) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|k| {
            let half = half_window.min(k).min(n - 1 - k);
            let window = &values[k - half..=k + half];
            window.iter().sum::<f64>() / window.len() as f64
        })
        .collect()
}

/// Central differences in the interior, one-sided first-order differences at
/// both ends.
pub fn central_difference(values: &[f64], dt_s: f64) -> Result<Vec<f64>, GuidanceError> {
    let n = values.len();
    if n < 3 {
        return Err(GuidanceError::InsufficientSamples { needed: 3, got: n });
    }
    let mut out = Vec::with_capacity(n);
    out.push((values[1] - values[0]) / dt_s);
    for k in 1..n - 1 {
        out.push((values[k + 1] - values[k - 1]) / (2.0 * dt_s));
    }
    out.push((values[n - 1] - values[n - 2]) / dt_s);
    Ok(out)
}

/// Averaged airspeed rate of a sampled airspeed history: resample, smooth,
/// differentiate and average the first `K` derivatives of the `K + 1` grid
/// values.
pub fn averaged_rate(samples: &[(f64, f64)], s: &SurrogateParams) -> Result<f64, GuidanceError> {
    let grid = resample_uniform(samples, s.dt_s)?;
    let values: Vec<f64> = grid.iter().map(|&(_, v)| v).collect();
    let smooth = moving_average(&values, s.half_window);
    let rates = central_difference(&smooth, s.dt_s)?;
    let k = rates.len() - 1;
    Ok(rates[..k].iter().sum::<f64>() / k as f64)
}

fn airspeed_samples(traj: &Trajectory) -> Vec<(f64, f64)> {
    traj.states.iter().map(|s| (s.t_s, s.airspeed_ms)).collect()
}

/// Time-averaged tangency estimate from initial airspeed `v0_ms`.
pub fn averaged_tangency(
    p: &AircraftParams,
    m: &Maneuver,
    h: &HorizonParams,
    s: &SurrogateParams,
    gamma_g_rad: f64,
    v0_ms: f64,
) -> Result<f64, GuidanceError> {
    let traj = simulate_maneuver(p, m, h, s.sim_dt_s, gamma_g_rad, v0_ms)?;
    averaged_rate(&airspeed_samples(&traj), s)
}

/// Exact airspeed rate at a simulated sample.
pub fn sample_rate(p: &AircraftParams, state: &SimState) -> f64 {
    airspeed_rate(
        p,
        &FlightCondition {
            airspeed_ms: state.airspeed_ms,
            gamma_air_rad: state.gamma_air_rad,
            bank_rad: state.bank_rad,
        },
    )
}

/// Integrated squared airspeed rate along the nominal trajectory (started at
/// the reference airspeed), by the trapezoidal rule over integration samples.
pub fn guidance_cost(
    p: &AircraftParams,
    m: &Maneuver,
    h: &HorizonParams,
    s: &SurrogateParams,
    gamma_g_rad: f64,
) -> Result<f64, GuidanceError> {
    let traj = simulate_maneuver(p, m, h, s.sim_dt_s, gamma_g_rad, m.ref_airspeed_ms)?;
    Ok(trapezoid_squared_rate(p, &traj))
}

/// Trapezoidal integral of the squared airspeed rate over a trajectory.
pub fn trapezoid_squared_rate(p: &AircraftParams, traj: &Trajectory) -> f64 {
    let sq: Vec<(f64, f64)> = traj
        .states
        .iter()
        .map(|st| (st.t_s, sample_rate(p, st).powi(2)))
        .collect();
    sq.windows(2).map(|w| 0.5 * (w[1].0 - w[0].0) * (w[0].1 + w[1].1)).sum()
}

/// Evaluates the surrogate constraints and cost of a single candidate.
#[derive(Debug, Clone, Copy)]
struct Candidate {
    gamma: f64,
    f_min: f64,
    f_max: f64,
    cost: Option<f64>,
}

struct Problem<'a> {
    p: &'a AircraftParams,
    env: &'a AirspeedEnvelope,
    m: &'a Maneuver,
    h: &'a HorizonParams,
    s: &'a SurrogateParams,
    opt: &'a OptimizerParams,
}

impl Problem<'_> {
    fn lower_slack(&self, f_min: f64) -> f64 {
        f_min - self.opt.margin_lo
    }

    fn upper_slack(&self, f_max: f64) -> f64 {
        -self.opt.margin_hi - f_max
    }

    fn tangency_from(&self, gamma: f64, v0_ms: f64) -> Result<f64, GuidanceError> {
        collapse_as(
            averaged_tangency(self.p, self.m, self.h, self.s, gamma, v0_ms),
            f64::NEG_INFINITY,
        )
    }

    fn evaluate(&self, gamma: f64) -> Result<Candidate, GuidanceError> {
        let f_min = self.tangency_from(gamma, self.env.v_min_ms)?;
        let f_max = self.tangency_from(gamma, self.env.v_max_ms)?;
        let cost = if self.feasible(f_min, f_max) {
            let cost = collapse_as(guidance_cost(self.p, self.m, self.h, self.s, gamma), f64::INFINITY)?;
            cost.is_finite().then_some(cost)
        } else {
            None
        };
        Ok(Candidate {
            gamma,
            f_min,
            f_max,
            cost,
        })
    }

    fn feasible(&self, f_min: f64, f_max: f64) -> bool {
        self.lower_slack(f_min) >= 0.0 && self.upper_slack(f_max) >= 0.0
    }

    fn violation(&self, c: &Candidate) -> f64 {
        (-self.lower_slack(c.f_min)).max(0.0) + (-self.upper_slack(c.f_max)).max(0.0)
    }

    /// Golden-section refinement of the cost over `[lo, hi]`, with infeasible
    /// points treated as infinitely expensive.
    fn refine(&self, lo: f64, hi: f64, best: &mut Candidate) -> Result<(), GuidanceError> {
        if !(hi > lo) {
            return Ok(());
        }
        let mut track = *best;
        for gamma in [lo, hi] {
            let c = self.evaluate(gamma)?;
            if c.cost.is_some() && c.cost < track.cost {
                track = c;
            }
        }
        let mut failure = None;
        golden_section(
            |gamma| match self.evaluate(gamma) {
                Ok(c) => match c.cost {
                    Some(cost) => {
                        if cost < track.cost.unwrap_or(f64::INFINITY) {
                            track = c;
                        }
                        cost
                    }
                    None => f64::INFINITY,
                },
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::INFINITY
                }
            },
            lo,
            hi,
            self.opt.refine_tol_rad,
            200,
        );
        if let Some(e) = failure {
            return Err(e);
        }
        *best = track;
        Ok(())
    }

    /// Edge of the set where `holds` is true, between a violating and a
    /// satisfying angle, returned on the satisfying side.
    fn edge<F>(&self, violating: f64, satisfying: f64, mut holds: F) -> Result<f64, GuidanceError>
    where
        F: FnMut(f64) -> Result<bool, GuidanceError>,
    {
        let (mut bad, mut good) = (violating, satisfying);
        while (good - bad).abs() > 0.1 * self.opt.refine_tol_rad {
            let mid = 0.5 * (bad + good);
            if mid == bad || mid == good {
                break;
            }
            if holds(mid)? {
                good = mid;
            } else {
                bad = mid;
            }
        }
        Ok(good)
    }

    fn lower_holds(&self, gamma: f64) -> Result<bool, GuidanceError> {
        Ok(self.lower_slack(self.tangency_from(gamma, self.env.v_min_ms)?) >= 0.0)
    }

    fn upper_holds(&self, gamma: f64) -> Result<bool, GuidanceError> {
        Ok(self.upper_slack(self.tangency_from(gamma, self.env.v_max_ms)?) >= 0.0)
    }

    fn feasible_at(&self, gamma: f64) -> Result<bool, GuidanceError> {
        Ok(self.evaluate(gamma)?.cost.is_some())
    }
}

/// The wind triangle only fails once the airspeed has decayed below the
/// crosswind, so such a run, like one whose airspeed reaches zero, stands in
/// for an unbounded loss of airspeed.
fn collapse_as(r: Result<f64, GuidanceError>, value: f64) -> Result<f64, GuidanceError> {
    match r {
        Err(GuidanceError::Sim(SimError::WindTriangleFailure { .. } | SimError::AirspeedCollapse(_))) => Ok(value),
        other => other,
    }
}

fn to_solution(c: &Candidate, converged: bool) -> GuidanceSolution {
    GuidanceSolution {
        gamma_g_star_rad: c.gamma,
        cost: c.cost.unwrap_or(f64::INFINITY),
        tangency_min: c.f_min,
        tangency_max: c.f_max,
        converged,
    }
}

/// Selects the constant ground-referenced flight path angle in the search box
/// that minimises [`guidance_cost`] subject to the averaged tangency
/// constraints at both envelope bounds.
///
/// A uniform grid over the box locates the best feasible candidate, which a
/// golden-section search then refines within one grid spacing. The feasible
/// set can be narrower than the grid spacing; when no grid point is feasible
/// the two constraint boundaries are located by bisection between the grid
/// points that bracket them and the refinement runs between those.
pub fn optimize_guidance(
    p: &AircraftParams,
    env: &AirspeedEnvelope,
    m: &Maneuver,
    h: &HorizonParams,
    s: &SurrogateParams,
    opt: &OptimizerParams,
) -> Result<GuidanceSolution, GuidanceError> {
    m.validate()?;
    let gbox = opt.gamma_box;
    if gbox.is_empty() {
        return Err(GuidanceError::InvalidParams("empty flight path angle box".into()));
    }
    if opt.grid_points < 2 {
        return Err(GuidanceError::InvalidParams("need at least two grid points".into()));
    }
    let problem = Problem { p, env, m, h, s, opt };
    let n = opt.grid_points;
    let spacing = (gbox.hi_rad - gbox.lo_rad) / (n - 1) as f64;
    let grid: Vec<Candidate> = (0..n)
        .map(|i| {
            let gamma = if i + 1 == n {
                gbox.hi_rad
            } else {
                gbox.lo_rad + i as f64 * spacing
            };
            problem.evaluate(gamma)
        })
        .collect::<Result<_, _>>()?;

    let best_feasible = (0..n)
        .filter(|&i| grid[i].cost.is_some())
        .min_by(|&a, &b| grid[a].cost.partial_cmp(&grid[b].cost).unwrap());

    let (mut best, lo, hi) = match best_feasible {
        Some(i) => {
            // shrink the bracket to the feasible part so the refinement never
            // has to search across infeasible angles
            let lo = match i.checked_sub(1).map(|j| &grid[j]) {
                None => grid[i].gamma,
                Some(prev) if prev.cost.is_some() => prev.gamma,
                Some(prev) => problem.edge(prev.gamma, grid[i].gamma, |g| problem.feasible_at(g))?,
            };
            let hi = match grid.get(i + 1) {
                None => grid[i].gamma,
                Some(next) if next.cost.is_some() => next.gamma,
                Some(next) => problem.edge(next.gamma, grid[i].gamma, |g| problem.feasible_at(g))?,
            };
            (grid[i], lo, hi)
        }
        None => {
            // the upper-bound constraint holds for shallow-enough angles ...
            let upper_edge = grid
                .windows(2)
                .find(|w| problem.upper_slack(w[0].f_max) < 0.0 && problem.upper_slack(w[1].f_max) >= 0.0);
            // ... the lower-bound one for steep-enough angles
            let lower_edge = grid
                .windows(2)
                .find(|w| problem.lower_slack(w[0].f_min) >= 0.0 && problem.lower_slack(w[1].f_min) < 0.0);
            let least_violating = grid
                .iter()
                .min_by(|a, b| problem.violation(a).partial_cmp(&problem.violation(b)).unwrap())
                .copied()
                .expect("grid is non-empty");
            let infeasible = || {
                GuidanceError::Infeasible(Box::new(InfeasibleReport {
                    box_lo_rad: gbox.lo_rad,
                    box_hi_rad: gbox.hi_rad,
                    best: to_solution(&least_violating, false),
                }))
            };
            let (Some(ue), Some(le)) = (upper_edge, lower_edge) else {
                return Err(infeasible());
            };
            let a = problem.edge(ue[0].gamma, ue[1].gamma, |g| problem.upper_holds(g))?;
            let b = problem.edge(le[1].gamma, le[0].gamma, |g| problem.lower_holds(g))?;
            if a > b {
                return Err(infeasible());
            }
            let mut seed: Option<Candidate> = None;
            for gamma in [a, b, 0.5 * (a + b)] {
                let c = problem.evaluate(gamma)?;
                if c.cost.is_some() && seed.is_none_or(|s| c.cost < s.cost) {
                    seed = Some(c);
                }
            }
            match seed {
                Some(c) => (c, a, b),
                None => return Err(infeasible()),
            }
        }
    };
    problem.refine(lo, hi, &mut best)?;
    Ok(to_solution(&best, true))
}

/// Nominal trajectory of a command, started at the reference airspeed.
pub fn nominal_trajectory(
    p: &AircraftParams,
    m: &Maneuver,
    h: &HorizonParams,
    s: &SurrogateParams,
    gamma_g_rad: f64,
) -> Result<Trajectory, GuidanceError> {
    simulate_maneuver(p, m, h, s.sim_dt_s, gamma_g_rad, m.ref_airspeed_ms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::airframe::equilibrium_glide_angle;
    use proptest::prelude::*;

    fn calm_straight() -> Maneuver {
        Maneuver::new(0.0, WindVector::CALM)
    }

    #[test]
    fn horizon_follows_turn_rate() {
        let h = HorizonParams::default();
        let quarter = Maneuver::new(90f64.to_radians(), WindVector::CALM);
        assert!((horizon_s(&quarter, &h) - 30.0).abs() < 1e-12);
        let left = Maneuver::new(-45f64.to_radians(), WindVector::CALM);
        assert!((horizon_s(&left, &h) - 15.0).abs() < 1e-12);
        assert_eq!(horizon_s(&calm_straight(), &h), 10.0);
        let capped = HorizonParams { cap_s: Some(20.0), ..h };
        assert_eq!(horizon_s(&quarter, &capped), 20.0);
    }

    #[test]
    fn command_banks_into_the_turn() {
        let p = AircraftParams::default();
        let h = HorizonParams::default();
        let right = maneuver_command(&p, &Maneuver::new(0.5, WindVector::CALM), &h, -0.05);
        let left = maneuver_command(&p, &Maneuver::new(-0.5, WindVector::CALM), &h, -0.05);
        assert!(right.bank_rad > 0.0 && right.turn_rate_rad_s > 0.0);
        assert_eq!(left.bank_rad, -right.bank_rad);
        // standard rate at 90 kt
        assert!((right.bank_rad.to_degrees() - 13.880917).abs() < 1e-6);
        let straight = maneuver_command(&p, &calm_straight(), &h, -0.05);
        assert_eq!((straight.bank_rad, straight.turn_rate_rad_s), (0.0, 0.0));
    }

    #[test]
    fn zero_window_average_is_identity() {
        let v = [1.0, -2.5, 3.25, 7.0, 0.125];
        assert_eq!(moving_average(&v, 0), v.to_vec());
    }

    #[test]
    fn moving_average_keeps_ends_and_linear_trends() {
        let v: Vec<f64> = (0..20).map(|k| 3.0 + 0.5 * k as f64).collect();
        let smooth = moving_average(&v, 4);
        assert_eq!(smooth[0], v[0]);
        assert_eq!(smooth[19], v[19]);
        for (a, b) in smooth.iter().zip(&v) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn central_difference_is_exact_on_quadratics() {
        let dt = 0.1;
        let v: Vec<f64> = (0..12)
            .map(|k| {
                let t = k as f64 * dt;
                2.0 - 3.0 * t + 1.5 * t * t
            })
            .collect();
        let d = central_difference(&v, dt).unwrap();
        for (k, dk) in d.iter().enumerate().take(11).skip(1) {
            let t = k as f64 * dt;
            assert!((dk - (-3.0 + 3.0 * t)).abs() < 1e-12);
        }
        assert!(matches!(
            central_difference(&v[..2], dt),
            Err(GuidanceError::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn resampling_is_exact_at_nodes() {
        let samples: Vec<(f64, f64)> = (0..11).map(|k| (0.05 * k as f64, (k as f64).sin())).collect();
        let grid = resample_uniform(&samples, 0.05).unwrap();
        assert_eq!(grid.len(), 11);
        for ((_, a), (_, b)) in grid.iter().zip(&samples) {
            assert!((a - b).abs() < 1e-12);
        }
        let coarse = resample_uniform(&samples, 0.1).unwrap();
        assert_eq!(coarse.len(), 6);
        assert!((coarse[3].1 - samples[6].1).abs() < 1e-12);
        let midway = resample_uniform(&[(0.0, 1.0), (1.0, 3.0)], 0.25).unwrap();
        assert_eq!(
            midway.iter().map(|x| x.1).collect::<Vec<_>>(),
            vec![1.0, 1.5, 2.0, 2.5, 3.0]
        );
    }

    #[test]
    fn averaged_rate_of_a_ramp_is_its_slope() {
        let samples: Vec<(f64, f64)> = (0..=200)
            .map(|k| (0.01 * k as f64, 40.0 + 0.3 * 0.01 * k as f64))
            .collect();
        let rate = averaged_rate(&samples, &SurrogateParams::default()).unwrap();
        assert!((rate - 0.3).abs() < 1e-9);
    }

    #[test]
    fn equilibrium_start_has_no_average_rate() {
        let p = AircraftParams::default();
        let v = knots_to_ms(90.0);
        let gamma = equilibrium_glide_angle(&p, v, 0.0).unwrap();
        let f = averaged_tangency(
            &p,
            &calm_straight(),
            &HorizonParams::default(),
            &SurrogateParams::default(),
            gamma,
            v,
        )
        .unwrap();
        assert!(f.abs() < 1e-9, "{f}");
    }

    #[test]
    fn optimizer_finds_equilibrium_when_reference_speed_is_viable() {
        let p = AircraftParams::default();
        // v_min above the minimum-drag speed keeps 90 kt on the stable side
        let env = AirspeedEnvelope::from_knots(87.0, 100.0).unwrap();
        let sol = optimize_guidance(
            &p,
            &env,
            &calm_straight(),
            &HorizonParams::default(),
            &SurrogateParams::default(),
            &OptimizerParams::default(),
        )
        .unwrap();
        let eq = equilibrium_glide_angle(&p, knots_to_ms(90.0), 0.0).unwrap();
        assert!(
            (sol.gamma_g_star_rad - eq).abs() < 1e-4,
            "{} vs {}",
            sol.gamma_g_star_rad,
            eq
        );
        assert!(sol.cost < 1e-8, "{}", sol.cost);
        assert!(sol.tangency_min >= 0.0 && sol.tangency_max <= 0.0);
        assert!(sol.converged);
    }

    #[test]
    fn narrow_feasible_set_between_grid_points_is_found() {
        let p = AircraftParams::default();
        let env = AirspeedEnvelope::from_knots(80.0, 100.0).unwrap();
        // a 2-degree grid step is far wider than the feasible set
        let opt = OptimizerParams {
            grid_points: 6,
            ..Default::default()
        };
        let sol = optimize_guidance(
            &p,
            &env,
            &calm_straight(),
            &HorizonParams::default(),
            &SurrogateParams::default(),
            &opt,
        )
        .unwrap();
        assert!(sol.tangency_min >= 0.0 && sol.tangency_max <= 0.0);
        assert!((sol.gamma_g_star_rad.to_degrees() + 4.41).abs() < 0.02);
    }

    #[test]
    fn inverted_requirements_are_infeasible() {
        let p = AircraftParams::default();
        let env = AirspeedEnvelope::from_knots(80.0, 100.0).unwrap();
        let opt = OptimizerParams {
            margin_lo: 0.05,
            margin_hi: 0.05,
            ..Default::default()
        };
        let err = optimize_guidance(
            &p,
            &env,
            &calm_straight(),
            &HorizonParams::default(),
            &SurrogateParams::default(),
            &opt,
        )
        .unwrap_err();
        match err {
            GuidanceError::Infeasible(report) => assert!(!report.best.converged),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn invalid_maneuvers_are_rejected() {
        let p = AircraftParams::default();
        let env = AirspeedEnvelope::from_knots(80.0, 100.0).unwrap();
        let m = Maneuver::new(0.0, WindVector::new(1.0, 0.0, 0.5));
        let r = optimize_guidance(
            &p,
            &env,
            &m,
            &HorizonParams::default(),
            &SurrogateParams::default(),
            &OptimizerParams::default(),
        );
        assert!(matches!(r, Err(GuidanceError::InvalidParams(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn steeper_paths_accelerate_more(g in -0.15f64..-0.02, dg in 0.001f64..0.05, dchi in -1.5f64..1.5) {
            let p = AircraftParams::default();
            let m = Maneuver::new(dchi, WindVector::from_speed_direction(4.0, 1.0));
            let (h, s) = (HorizonParams::default(), SurrogateParams::default());
            let v0 = knots_to_ms(90.0);
            let shallow = averaged_tangency(&p, &m, &h, &s, g, v0).unwrap();
            let steep = averaged_tangency(&p, &m, &h, &s, g - dg, v0).unwrap();
            prop_assert!(steep > shallow);
        }

        #[test]
        fn moving_average_preserves_constants(c in -100.0f64..100.0, n in 1usize..40, l in 0usize..10) {
            let v = vec![c; n];
            for x in moving_average(&v, l) {
                prop_assert!((x - c).abs() <= 1e-12 * c.abs().max(1.0));
            }
        }
    }
}
