//! Execution of primitive sequences and best-first planning over a primitive
//! table.
//!
//! Each primitive is flown with its certified flight path angle held constant
//! while the course turns at a constant rate for the primitive's horizon. The
//! table cell is chosen from the wind direction relative to the course at the
//! start of the primitive.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashSet};

use rand::Rng;
use thiserror::Error;

use crate::airframe::AircraftParams;
use crate::guidance::coordinated_bank_rad;
use crate::primitives::{Primitive, PrimitiveTable, TableError};
use crate::sim::{run_command, Command, SimError, SimState, Trajectory};
use crate::units::wrap_pi;
use crate::windframe::WindVector;

#[derive(Debug, Error)]
pub enum PlanError {
    #[error("primitive {index} of the sequence is unavailable: {source}")]
    SequenceInfeasible { index: usize, source: TableError },
    #[error("no feasible primitive reaches the goal ({expansions} expansions)")]
    NoPath { expansions: usize },
    #[error("invalid plan problem: {0}")]
    InvalidProblem(String),
    #[error(transparent)]
    Sim(#[from] SimError),
}

/// The constant command that flies `prim`.
pub fn primitive_command(p: &AircraftParams, prim: &Primitive) -> Command {
    let dchi = prim.maneuver.delta_course_rad;
    let turn_rate_rad_s = if dchi == 0.0 { 0.0 } else { dchi / prim.horizon_s };
    Command {
        gamma_g_rad: prim.gamma_g_star_rad,
        turn_rate_rad_s,
        bank_rad: coordinated_bank_rad(p, prim.maneuver.ref_airspeed_ms, turn_rate_rad_s),
        duration_s: prim.horizon_s,
    }
}

/// Flies one primitive from `start` in the ambient wind `w`.
pub fn run_primitive(
    p: &AircraftParams,
    w: &WindVector,
    start: &SimState,
    prim: &Primitive,
    dt: f64,
) -> Result<Trajectory, SimError> {
    let mut traj = run_command(p, w, start, &primitive_command(p, prim), dt)?;
    traj.meta.primitive_dchi_deg = vec![prim.maneuver.delta_course_rad.to_degrees()];
    Ok(traj)
}

/// Flies primitives back to back. An empty sequence yields `start` alone.
pub fn run_sequence(
    p: &AircraftParams,
    w: &WindVector,
    start: &SimState,
    prims: &[Primitive],
    dt: f64,
) -> Result<Trajectory, SimError> {
    let mut traj = Trajectory::single(*start);
    for prim in prims {
        let current = *traj.last().expect("trajectory is non-empty");
        let segment = run_primitive(p, w, &current, prim, dt)?;
        traj.extend_continuous(segment);
    }
    Ok(traj)
}

/// Resolves a list of course changes against the table, each at the course
/// reached by the preceding ones, and flies them.
pub fn run_course_changes(
    p: &AircraftParams,
    table: &PrimitiveTable,
    w: &WindVector,
    start: &SimState,
    delta_courses_rad: &[f64],
    dt: f64,
) -> Result<(Vec<Primitive>, Trajectory), PlanError> {
    let mut traj = Trajectory::single(*start);
    let mut prims = Vec::with_capacity(delta_courses_rad.len());
    for (index, &dchi) in delta_courses_rad.iter().enumerate() {
        let current = *traj.last().expect("trajectory is non-empty");
        let prim = table
            .lookup_on_course(dchi, w, current.course_rad)
            .map_err(|source| PlanError::SequenceInfeasible { index, source })?;
        traj.extend_continuous(run_primitive(p, w, &current, &prim, dt)?);
        prims.push(prim);
    }
    traj.meta.fingerprint = Some(table.fingerprint().to_owned());
    Ok((prims, traj))
}

/// Relative wind directions from which certified primitives can be chained
/// indefinitely in a given ambient wind.
///
/// A feasible primitive may end with the wind in a direction for which no
/// primitive is feasible. The live set is the largest set of direction cells
/// in which every cell has a feasible primitive that ends in the set again.
#[derive(Debug, Clone, PartialEq)]
pub struct LiveDirections {
    live: Vec<bool>,
}

impl LiveDirections {
    pub fn new(table: &PrimitiveTable, ambient_wind: &WindVector) -> Self {
        let grid = table.grid();
        let speed = ambient_wind.horizontal_speed_ms();
        let successors: Vec<Vec<usize>> = grid
            .wind_direction_deg
            .iter()
            .map(|d| {
                let rel = WindVector::from_speed_direction(speed, d.to_radians());
                grid.delta_course_deg
                    .iter()
                    .map(|dchi| dchi.to_radians())
                    .filter(|&dchi| table.lookup(dchi, &rel).is_ok())
                    .map(|dchi| table.wind_cell(&rel.relative_to_course(dchi)).1)
                    .collect()
            })
            .collect();
        let mut live = vec![true; successors.len()];
        loop {
            let mut changed = false;
            for k in 0..live.len() {
                if live[k] && !successors[k].iter().any(|&n| live[n]) {
                    live[k] = false;
                    changed = true;
                }
            }
            if !changed {
                break;
            }
        }
        Self { live }
    }

    pub fn is_live(&self, table: &PrimitiveTable, ambient_wind: &WindVector, course_rad: f64) -> bool {
        self.live[table.wind_cell(&ambient_wind.relative_to_course(course_rad)).1]
    }

    pub fn live_count(&self) -> usize {
        self.live.iter().filter(|&&l| l).count()
    }

    /// Feasible primitives on `course_rad` that end on a live course.
    pub fn options(&self, table: &PrimitiveTable, ambient_wind: &WindVector, course_rad: f64) -> Vec<Primitive> {
        table
            .feasible_on_course(ambient_wind, course_rad)
            .into_iter()
            .filter(|prim| self.is_live(table, ambient_wind, course_rad + prim.maneuver.delta_course_rad))
            .collect()
    }
}

/// Flies uniformly drawn feasible primitives until at least `min_duration_s`
/// has been simulated (or `max_primitives` is reached, when given). Only
/// primitives that end on a live course are drawn (see [`LiveDirections`]).
#[allow(clippy::too_many_arguments)]
pub fn random_sequence<R: Rng>(
    p: &AircraftParams,
    table: &PrimitiveTable,
    w: &WindVector,
    start: &SimState,
    min_duration_s: f64,
    max_primitives: Option<usize>,
    dt: f64,
    rng: &mut R,
) -> Result<(Vec<Primitive>, Trajectory), PlanError> {
    let live = LiveDirections::new(table, w);
    let mut traj = Trajectory::single(*start);
    let mut prims = Vec::new();
    while traj.duration_s() < min_duration_s && max_primitives.is_none_or(|n| prims.len() < n) {
        let current = *traj.last().expect("trajectory is non-empty");
        let options = live.options(table, w, current.course_rad);
        if options.is_empty() {
            return Err(PlanError::SequenceInfeasible {
                index: prims.len(),
                source: TableError::NoMatch(f64::NAN),
            });
        }
        let prim = options[rng.gen_range(0..options.len())];
        traj.extend_continuous(run_primitive(p, w, &current, &prim, dt)?);
        prims.push(prim);
    }
    traj.meta.fingerprint = Some(table.fingerprint().to_owned());
    Ok((prims, traj))
}

/// Planning query.
#[derive(Debug, Clone)]
pub struct PlanProblem<'a> {
    pub start: SimState,
    pub goal_north_m: f64,
    pub goal_east_m: f64,
    pub goal_radius_m: f64,
    pub wind: WindVector,
    pub table: &'a PrimitiveTable,
    /// Branches that descend below this altitude are abandoned.
    pub altitude_floor_m: f64,
    pub max_expansions: usize,
    /// Side of the square position cells used for duplicate detection.
    pub cell_m: f64,
    pub dt: f64,
}

impl<'a> PlanProblem<'a> {
    pub fn new(
        table: &'a PrimitiveTable,
        start: SimState,
        goal_north_m: f64,
        goal_east_m: f64,
        goal_radius_m: f64,
        wind: WindVector,
    ) -> Self {
        Self {
            start,
            goal_north_m,
            goal_east_m,
            goal_radius_m,
            wind,
            table,
            altitude_floor_m: 0.0,
            max_expansions: 20_000,
            cell_m: 50.0,
            dt: crate::sim::DEFAULT_DT_S,
        }
    }

    fn goal_distance(&self, s: &SimState) -> f64 {
        (s.north_m - self.goal_north_m).hypot(s.east_m - self.goal_east_m)
    }
}

/// A plan and its simulated trajectory.
#[derive(Debug, Clone)]
pub struct Plan {
    pub primitives: Vec<Primitive>,
    pub trajectory: Trajectory,
    pub expansions: usize,
}

struct Node {
    state: SimState,
    parent: Option<usize>,
    prim: Option<Primitive>,
}

#[derive(PartialEq)]
struct Open {
    f: f64,
    g: f64,
    node: usize,
}

impl Eq for Open {}

impl Ord for Open {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on f, then prefer deeper nodes, then earlier insertion
        other
            .f
            .total_cmp(&self.f)
            .then(self.g.total_cmp(&other.g))
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Best-first (A*) search over primitive sequences.
///
/// Successor states are simulated exactly, so the returned trajectory is the
/// one the search evaluated. Edge cost is primitive duration; the heuristic
/// is the distance to the goal divided by the fastest possible ground speed,
/// `v_max + |w|`, which never overestimates. States are merged by position
/// cell and by course on the lattice of the table's course changes. Only
/// primitives ending on a live course are expanded, so every plan can be
/// continued (see [`LiveDirections`]).
pub fn plan(p: &AircraftParams, problem: &PlanProblem) -> Result<Plan, PlanError> {
    if !(problem.goal_radius_m > 0.0) {
        return Err(PlanError::InvalidProblem("goal radius must be positive".into()));
    }
    if !(problem.cell_m > 0.0) {
        return Err(PlanError::InvalidProblem("cell size must be positive".into()));
    }
    let table = problem.table;
    let v_best = table.header.envelope.v_max_ms + problem.wind.horizontal_speed_ms();
    let heuristic = |s: &SimState| problem.goal_distance(s) / v_best;
    let lattice = course_lattice_step(table);
    let key = |s: &SimState| {
        let course = (wrap_pi(s.course_rad) / lattice).round() as i64;
        (
            (s.north_m / problem.cell_m).round() as i64,
            (s.east_m / problem.cell_m).round() as i64,
            course.rem_euclid((std::f64::consts::TAU / lattice).round().max(1.0) as i64),
        )
    };

    let mut nodes = vec![Node {
        state: problem.start,
        parent: None,
        prim: None,
    }];
    let mut open = BinaryHeap::new();
    open.push(Open {
        f: heuristic(&problem.start),
        g: 0.0,
        node: 0,
    });
    let mut closed = HashSet::new();
    let mut expansions = 0;
    let live = LiveDirections::new(table, &problem.wind);

    while let Some(Open { g, node, .. }) = open.pop() {
        let state = nodes[node].state;
        if problem.goal_distance(&state) <= problem.goal_radius_m {
            return Ok(reconstruct(p, problem, &nodes, node, expansions)?);
        }
        if !closed.insert(key(&state)) {
            continue;
        }
        if expansions >= problem.max_expansions {
            break;
        }
        expansions += 1;
        for prim in live.options(table, &problem.wind, state.course_rad) {
            let seg = match run_primitive(p, &problem.wind, &state, &prim, problem.dt) {
                Ok(seg) => seg,
                Err(SimError::WindTriangleFailure { .. } | SimError::AirspeedCollapse(_)) => continue,
                Err(e) => return Err(e.into()),
            };
            let next = *seg.last().expect("segment is non-empty");
            if next.alt_m < problem.altitude_floor_m || closed.contains(&key(&next)) {
                continue;
            }
            let g_next = g + prim.horizon_s;
            nodes.push(Node {
                state: next,
                parent: Some(node),
                prim: Some(prim),
            });
            open.push(Open {
                f: g_next + heuristic(&next),
                g: g_next,
                node: nodes.len() - 1,
            });
        }
    }
    Err(PlanError::NoPath { expansions })
}

fn course_lattice_step(table: &PrimitiveTable) -> f64 {
    let mut nonzero: Vec<f64> = table
        .grid()
        .delta_course_deg
        .iter()
        .map(|d| d.abs())
        .filter(|&d| d > 0.0)
        .collect();
    nonzero.sort_by(f64::total_cmp);
    nonzero.first().copied().unwrap_or(360.0).to_radians()
}

fn reconstruct(
    p: &AircraftParams,
    problem: &PlanProblem,
    nodes: &[Node],
    goal: usize,
    expansions: usize,
) -> Result<Plan, SimError> {
    let mut prims = Vec::new();
    let mut cursor = Some(goal);
    while let Some(i) = cursor {
        if let Some(prim) = nodes[i].prim {
            prims.push(prim);
        }
        cursor = nodes[i].parent;
    }
    prims.reverse();
    let mut trajectory = run_sequence(p, &problem.wind, &problem.start, &prims, problem.dt)?;
    trajectory.meta.fingerprint = Some(problem.table.fingerprint().to_owned());
    Ok(Plan {
        primitives: prims,
        trajectory,
        expansions,
    })
}
