//! Batch synthesis, lookup and persistence of certified maneuver primitives.
//!
//! A primitive pairs a course change under a steady wind with the flight path
//! angle certified for it. Tables are synthesized over a rectangular grid of
//! course changes, wind speeds and wind directions. Wind directions are
//! relative to an initial course of zero, so a table serves every course.
//!
//! Records are kept in the units of the table file (degrees and knots) so that
//! loading and saving a table reproduces it byte for byte.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::airframe::AircraftParams;
use crate::guidance::{
    averaged_tangency, horizon_s, nominal_trajectory, optimize_guidance, trapezoid_squared_rate, GuidanceError,
    HorizonParams, Maneuver, OptimizerParams, SurrogateParams,
};
use crate::units::{angular_distance, knots_to_ms, ms_to_knots};
use crate::viability::AirspeedEnvelope;
use crate::windframe::WindVector;

pub const SCHEMA_VERSION: u32 = 1;

/// Tolerance, in degrees, for matching a queried course change to the grid.
const DCHI_MATCH_TOL_DEG: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum TableError {
    #[error("invalid maneuver grid: {0}")]
    InvalidGrid(String),
    #[error("no course change of {0} deg in the table")]
    NoMatch(f64),
    #[error("cell (dchi {dchi_deg} deg, wind {wind_kts} kt from {wind_dir_deg} deg) is infeasible")]
    CellInfeasible {
        dchi_deg: f64,
        wind_kts: f64,
        wind_dir_deg: f64,
    },
    #[error("table schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("table invariant violated: {0}")]
    InvariantViolation(String),
    #[error("table I/O: {0}")]
    Io(String),
}

/// Rectangular grid of maneuver cases.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManeuverGrid {
    pub delta_course_deg: Vec<f64>,
    pub wind_speed_kts: Vec<f64>,
    /// Bearing the wind blows from, relative to the initial course.
    pub wind_direction_deg: Vec<f64>,
    pub ref_airspeed_kts: f64,
}

fn stepped(start: f64, step: f64, count: usize) -> Vec<f64> {
    (0..count).map(|i| start + i as f64 * step).collect()
}

impl Default for ManeuverGrid {
    /// 13 course changes × 9 wind speeds × 24 wind directions.
    fn default() -> Self {
        Self {
            delta_course_deg: stepped(-90.0, 15.0, 13),
            wind_speed_kts: stepped(0.0, 15.6 / 8.0, 9),
            wind_direction_deg: stepped(-180.0, 15.0, 24),
            ref_airspeed_kts: 90.0,
        }
    }
}

impl ManeuverGrid {
    /// Reduced grid for quick runs: 13 course changes × 3 wind speeds × 8
    /// wind directions.
    pub fn ci() -> Self {
        Self {
            delta_course_deg: stepped(-90.0, 15.0, 13),
            wind_speed_kts: stepped(0.0, 7.8, 3),
            wind_direction_deg: stepped(-180.0, 45.0, 8),
            ref_airspeed_kts: 90.0,
        }
    }

    pub fn validate(&self) -> Result<(), TableError> {
        let lists = [
            ("delta_course_deg", &self.delta_course_deg),
            ("wind_speed_kts", &self.wind_speed_kts),
            ("wind_direction_deg", &self.wind_direction_deg),
        ];
        for (name, list) in lists {
            if list.is_empty() {
                return Err(TableError::InvalidGrid(format!("{name} is empty")));
            }
            if list.iter().any(|x| !x.is_finite()) {
                return Err(TableError::InvalidGrid(format!("{name} has non-finite entries")));
            }
            for (i, a) in list.iter().enumerate() {
                if list[i + 1..].contains(a) {
                    return Err(TableError::InvalidGrid(format!("{name} repeats {a}")));
                }
            }
        }
        if self.wind_speed_kts.iter().any(|&w| w < 0.0) {
            return Err(TableError::InvalidGrid("negative wind speed".into()));
        }
        if self.delta_course_deg.iter().any(|d| d.abs() > 360.0) {
            return Err(TableError::InvalidGrid("course change beyond a full turn".into()));
        }
        if !(self.ref_airspeed_kts > 0.0) {
            return Err(TableError::InvalidGrid("reference airspeed must be positive".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.delta_course_deg.len() * self.wind_speed_kts.len() * self.wind_direction_deg.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cell indices in storage order: course change outer, wind speed middle,
    /// wind direction inner.
    pub fn cell(&self, index: usize) -> (usize, usize, usize) {
        let nd = self.wind_direction_deg.len();
        let ns = self.wind_speed_kts.len();
        (index / (ns * nd), (index / nd) % ns, index % nd)
    }

    pub fn index(&self, i_dchi: usize, i_speed: usize, i_dir: usize) -> usize {
        (i_dchi * self.wind_speed_kts.len() + i_speed) * self.wind_direction_deg.len() + i_dir
    }

    /// The maneuver of a cell, with the wind relative to an initial course of
    /// zero.
    pub fn maneuver(&self, index: usize) -> Maneuver {
        let (i, j, k) = self.cell(index);
        Maneuver {
            delta_course_rad: self.delta_course_deg[i].to_radians(),
            wind: WindVector::from_speed_direction(
                knots_to_ms(self.wind_speed_kts[j]),
                self.wind_direction_deg[k].to_radians(),
            ),
            ref_airspeed_ms: knots_to_ms(self.ref_airspeed_kts),
            initial_course_rad: 0.0,
        }
    }
}

/// A certified maneuver primitive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Primitive {
    pub maneuver: Maneuver,
    pub gamma_g_star_rad: f64,
    pub horizon_s: f64,
    pub cost: f64,
    pub tangency_min: f64,
    pub tangency_max: f64,
    pub altitude_drop_m: f64,
    /// North and east displacement of the nominal trajectory.
    pub ground_displacement_m: [f64; 2],
}

/// One table record, in file units. Solution fields are absent for
/// infeasible cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableEntry {
    pub dchi_deg: f64,
    pub wind_kts: f64,
    pub wind_dir_deg: f64,
    pub gamma_g_deg: Option<f64>,
    pub horizon_s: f64,
    pub cost: Option<f64>,
    pub f_tilde_vmin: f64,
    pub f_tilde_vmax: f64,
    pub feasible: bool,
    pub altitude_drop_m: Option<f64>,
    pub displacement_north_m: Option<f64>,
    pub displacement_east_m: Option<f64>,
}

/// Everything a table depends on besides the grid results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableHeader {
    pub schema_version: u32,
    pub aircraft: AircraftParams,
    pub envelope: AirspeedEnvelope,
    pub grid: ManeuverGrid,
    pub horizon: HorizonParams,
    pub surrogate: SurrogateParams,
    pub optimizer: OptimizerParams,
}

impl TableHeader {
    /// SHA-256 of the canonical JSON form of the header.
    pub fn fingerprint(&self) -> String {
        let canonical = serde_json::to_vec(self).expect("header serializes");
        hex::encode(Sha256::digest(canonical))
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct TableFile {
    #[serde(flatten)]
    header: TableHeader,
    fingerprint: String,
    entries: Vec<TableEntry>,
}

/// Synthesized primitives, one entry per grid cell in storage order.
#[derive(Debug, Clone, PartialEq)]
pub struct PrimitiveTable {
    pub header: TableHeader,
    pub entries: Vec<TableEntry>,
    fingerprint: String,
}

impl PrimitiveTable {
    pub fn new(header: TableHeader, entries: Vec<TableEntry>) -> Result<Self, TableError> {
        let fingerprint = header.fingerprint();
        let table = Self {
            header,
            entries,
            fingerprint,
        };
        table.validate()?;
        Ok(table)
    }

    pub fn grid(&self) -> &ManeuverGrid {
        &self.header.grid
    }

    pub fn fingerprint(&self) -> &str {
        &self.fingerprint
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn feasible_count(&self) -> usize {
        self.entries.iter().filter(|e| e.feasible).count()
    }

    fn validate(&self) -> Result<(), TableError> {
        let grid = &self.header.grid;
        grid.validate()?;
        if self.entries.len() != grid.len() {
            return Err(TableError::InvariantViolation(format!(
                "{} entries for a grid of {} cells",
                self.entries.len(),
                grid.len()
            )));
        }
        let opt = &self.header.optimizer;
        for (index, e) in self.entries.iter().enumerate() {
            let (i, j, k) = grid.cell(index);
            if e.dchi_deg != grid.delta_course_deg[i]
                || e.wind_kts != grid.wind_speed_kts[j]
                || e.wind_dir_deg != grid.wind_direction_deg[k]
            {
                return Err(TableError::InvariantViolation(format!(
                    "entry {index} is out of grid order"
                )));
            }
            if !e.feasible {
                continue;
            }
            let complete = e.gamma_g_deg.is_some()
                && e.cost.is_some()
                && e.altitude_drop_m.is_some()
                && e.displacement_north_m.is_some()
                && e.displacement_east_m.is_some();
            if !complete {
                return Err(TableError::InvariantViolation(format!(
                    "feasible entry {index} lacks a solution"
                )));
            }
            if e.f_tilde_vmin < opt.margin_lo || e.f_tilde_vmax > -opt.margin_hi {
                return Err(TableError::InvariantViolation(format!(
                    "entry {index} is marked feasible but fails its tangency conditions"
                )));
            }
        }
        Ok(())
    }

    /// Converts a stored record to a primitive.
    pub fn primitive(&self, index: usize) -> Result<Primitive, TableError> {
        let e = &self.entries[index];
        if !e.feasible {
            return Err(TableError::CellInfeasible {
                dchi_deg: e.dchi_deg,
                wind_kts: e.wind_kts,
                wind_dir_deg: e.wind_dir_deg,
            });
        }
        let missing = || TableError::InvariantViolation(format!("feasible entry {index} lacks a solution"));
        Ok(Primitive {
            maneuver: self.header.grid.maneuver(index),
            gamma_g_star_rad: e.gamma_g_deg.ok_or_else(missing)?.to_radians(),
            horizon_s: e.horizon_s,
            cost: e.cost.ok_or_else(missing)?,
            tangency_min: e.f_tilde_vmin,
            tangency_max: e.f_tilde_vmax,
            altitude_drop_m: e.altitude_drop_m.ok_or_else(missing)?,
            ground_displacement_m: [
                e.displacement_north_m.ok_or_else(missing)?,
                e.displacement_east_m.ok_or_else(missing)?,
            ],
        })
    }

    /// Index of the cell matching a query: exact course change, nearest wind
    /// speed (ties toward the lower speed) and circularly nearest direction
    /// (ties toward the smaller angle). `wind` is relative to the course.
    pub fn nearest_cell(&self, delta_course_rad: f64, wind: &WindVector) -> Result<usize, TableError> {
        let grid = &self.header.grid;
        let dchi_deg = delta_course_rad.to_degrees();
        let i = grid
            .delta_course_deg
            .iter()
            .position(|&d| (d - dchi_deg).abs() <= DCHI_MATCH_TOL_DEG)
            .ok_or(TableError::NoMatch(dchi_deg))?;
        let (j, k) = self.wind_cell(wind);
        Ok(grid.index(i, j, k))
    }

    /// Speed and direction indices of the grid cell nearest to `wind`.
    pub fn wind_cell(&self, wind: &WindVector) -> (usize, usize) {
        let grid = &self.header.grid;
        let speed_kts = ms_to_knots(wind.horizontal_speed_ms());
        let j = nearest_by(&grid.wind_speed_kts, |s| (s - speed_kts).abs());
        let from = wind.from_direction_rad();
        let k = nearest_by(&grid.wind_direction_deg, |d| angular_distance(d.to_radians(), from));
        (j, k)
    }

    /// Primitive of the nearest cell. See [`PrimitiveTable::nearest_cell`].
    pub fn lookup(&self, delta_course_rad: f64, wind: &WindVector) -> Result<Primitive, TableError> {
        self.primitive(self.nearest_cell(delta_course_rad, wind)?)
    }

    /// Lookup for a vehicle on `course_rad` in an ambient (earth-frame) wind.
    pub fn lookup_on_course(
        &self,
        delta_course_rad: f64,
        ambient_wind: &WindVector,
        course_rad: f64,
    ) -> Result<Primitive, TableError> {
        self.lookup(delta_course_rad, &ambient_wind.relative_to_course(course_rad))
    }

    /// All feasible primitives for a vehicle on `course_rad`, in course-change
    /// order.
    pub fn feasible_on_course(&self, ambient_wind: &WindVector, course_rad: f64) -> Vec<Primitive> {
        self.header
            .grid
            .delta_course_deg
            .iter()
            .filter_map(|d| self.lookup_on_course(d.to_radians(), ambient_wind, course_rad).ok())
            .collect()
    }

    pub fn to_json(&self) -> Result<String, TableError> {
        let file = TableFile {
            header: self.header.clone(),
            fingerprint: self.fingerprint.clone(),
            entries: self.entries.clone(),
        };
        serde_json::to_string_pretty(&file).map_err(|e| TableError::Io(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self, TableError> {
        let file: TableFile = serde_json::from_str(text).map_err(|e| TableError::SchemaMismatch(e.to_string()))?;
        if file.header.schema_version != SCHEMA_VERSION {
            return Err(TableError::SchemaMismatch(format!(
                "schema version {} (expected {SCHEMA_VERSION})",
                file.header.schema_version
            )));
        }
        let table = Self::new(file.header, file.entries)?;
        if table.fingerprint != file.fingerprint {
            return Err(TableError::SchemaMismatch(format!(
                "fingerprint {} does not match the recorded configuration ({})",
                file.fingerprint, table.fingerprint
            )));
        }
        Ok(table)
    }

    pub fn save(&self, path: &Path) -> Result<(), TableError> {
        let mut text = self.to_json()?;
        text.push('\n');
        fs::write(path, text).map_err(|e| TableError::Io(format!("{}: {e}", path.display())))
    }

    pub fn load(path: &Path) -> Result<Self, TableError> {
        let text = fs::read_to_string(path).map_err(|e| TableError::Io(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }
}

/// First index minimising `dist`; values are visited in ascending order so
/// that ties resolve toward the smaller value.
fn nearest_by<F: Fn(f64) -> f64>(values: &[f64], dist: F) -> usize {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut best = order[0];
    for &i in &order[1..] {
        if dist(values[i]) < dist(values[best]) {
            best = i;
        }
    }
    best
}

/// Solves one grid cell.
pub fn synthesize_cell(
    p: &AircraftParams,
    env: &AirspeedEnvelope,
    grid: &ManeuverGrid,
    h: &HorizonParams,
    s: &SurrogateParams,
    opt: &OptimizerParams,
    index: usize,
) -> Result<TableEntry, GuidanceError> {
    let (i, j, k) = grid.cell(index);
    let m = grid.maneuver(index);
    let mut entry = TableEntry {
        dchi_deg: grid.delta_course_deg[i],
        wind_kts: grid.wind_speed_kts[j],
        wind_dir_deg: grid.wind_direction_deg[k],
        gamma_g_deg: None,
        horizon_s: horizon_s(&m, h),
        cost: None,
        f_tilde_vmin: f64::NAN,
        f_tilde_vmax: f64::NAN,
        feasible: false,
        altitude_drop_m: None,
        displacement_north_m: None,
        displacement_east_m: None,
    };
    match optimize_guidance(p, env, &m, h, s, opt) {
        Ok(sol) => {
            // certify the angle exactly as it will be read back from the file
            let gamma_deg = sol.gamma_g_star_rad.to_degrees();
            let gamma = gamma_deg.to_radians();
            entry.f_tilde_vmin = averaged_tangency(p, &m, h, s, gamma, env.v_min_ms)?;
            entry.f_tilde_vmax = averaged_tangency(p, &m, h, s, gamma, env.v_max_ms)?;
            if entry.f_tilde_vmin < opt.margin_lo || entry.f_tilde_vmax > -opt.margin_hi {
                return Ok(entry);
            }
            let nominal = nominal_trajectory(p, &m, h, s, gamma)?;
            let (start, end) = (nominal.states[0], *nominal.last().expect("non-empty trajectory"));
            entry.gamma_g_deg = Some(gamma_deg);
            entry.cost = Some(trapezoid_squared_rate(p, &nominal));
            entry.feasible = true;
            entry.altitude_drop_m = Some(start.alt_m - end.alt_m);
            entry.displacement_north_m = Some(end.north_m - start.north_m);
            entry.displacement_east_m = Some(end.east_m - start.east_m);
        }
        Err(GuidanceError::Infeasible(report)) => {
            entry.f_tilde_vmin = finite_or(report.best.tangency_min, f64::MIN);
            entry.f_tilde_vmax = finite_or(report.best.tangency_max, f64::MAX);
        }
        Err(e) => return Err(e),
    }
    Ok(entry)
}

fn finite_or(x: f64, fallback: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        fallback
    }
}

/// Synthesizes one entry per grid cell as an order-preserving parallel map on
/// the current rayon pool. Infeasible cells are recorded, not dropped.
pub fn synthesize_table(
    p: &AircraftParams,
    env: &AirspeedEnvelope,
    grid: &ManeuverGrid,
    h: &HorizonParams,
    s: &SurrogateParams,
    opt: &OptimizerParams,
) -> Result<PrimitiveTable, TableError> {
    grid.validate()?;
    let entries: Vec<TableEntry> = (0..grid.len())
        .into_par_iter()
        .map(|index| synthesize_cell(p, env, grid, h, s, opt, index))
        .collect::<Result<_, _>>()
        .map_err(|e| TableError::InvariantViolation(format!("synthesis failed: {e}")))?;
    let header = TableHeader {
        schema_version: SCHEMA_VERSION,
        aircraft: *p,
        envelope: *env,
        grid: grid.clone(),
        horizon: *h,
        surrogate: *s,
        optimizer: *opt,
    };
    PrimitiveTable::new(header, entries)
}
