//! End-to-end use of the library: synthesize a small table, persist and
//! reload it, fly sequences and analyse the exported trajectories.

use std::sync::OnceLock;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use glidesafe::analysis::analyze;
use glidesafe::guidance::{HorizonParams, OptimizerParams, SurrogateParams};
use glidesafe::planner::{random_sequence, run_course_changes, LiveDirections};
use glidesafe::primitives::{synthesize_table, ManeuverGrid, PrimitiveTable};
use glidesafe::sim::{read_csv, write_csv, SimState};
use glidesafe::units::knots_to_ms;
use glidesafe::{AircraftParams, AirspeedEnvelope, WindVector};

fn envelope() -> AirspeedEnvelope {
    AirspeedEnvelope::from_knots(80.0, 100.0).unwrap()
}

fn table() -> &'static PrimitiveTable {
    static TABLE: OnceLock<PrimitiveTable> = OnceLock::new();
    TABLE.get_or_init(|| {
        let grid = ManeuverGrid {
            delta_course_deg: vec![-90.0, -45.0, 0.0, 45.0, 90.0],
            wind_speed_kts: vec![0.0, 10.0],
            wind_direction_deg: (0..8).map(|k| k as f64 * 45.0).collect(),
            ref_airspeed_kts: 90.0,
        };
        synthesize_table(
            &AircraftParams::default(),
            &envelope(),
            &grid,
            &HorizonParams::default(),
            &SurrogateParams::default(),
            &OptimizerParams::default(),
        )
        .unwrap()
    })
}

#[test]
fn saved_table_reloads_identically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.json");
    table().save(&path).unwrap();
    let loaded = PrimitiveTable::load(&path).unwrap();
    assert_eq!(&loaded, table());
    assert_eq!(loaded.fingerprint(), table().fingerprint());
    let again = dir.path().join("again.json");
    loaded.save(&again).unwrap();
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn edited_table_fails_to_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("table.json");
    table().save(&path).unwrap();
    let text = std::fs::read_to_string(&path)
        .unwrap()
        .replacen("\"cd0\": 0.027", "\"cd0\": 0.028", 1);
    std::fs::write(&path, text).unwrap();
    assert!(PrimitiveTable::load(&path).is_err());
}

#[test]
fn calm_air_has_every_cell_feasible() {
    let t = table();
    let calm: Vec<_> = t.entries.iter().filter(|e| e.wind_kts == 0.0).collect();
    assert_eq!(calm.len(), 40);
    assert!(calm.iter().all(|e| e.feasible));
}

#[test]
fn flown_sequence_survives_csv_export_and_stays_certified() {
    let p = AircraftParams::default();
    let w = WindVector::from_speed_direction(knots_to_ms(10.0), 0.0);
    let start = SimState::at_rest(0.0, 0.0, 1500.0, knots_to_ms(90.0), 180f64.to_radians());
    let dchi: Vec<f64> = [45.0, 45.0, -90.0, 0.0, 90.0]
        .iter()
        .map(|d: &f64| d.to_radians())
        .collect();
    let (_, traj) = run_course_changes(&p, table(), &w, &start, &dchi, 0.01).unwrap();

    let mut buf = Vec::new();
    write_csv(&traj, &mut buf).unwrap();
    let back = read_csv(buf.as_slice()).unwrap();
    assert_eq!(back.states.len(), traj.states.len());
    for (a, b) in traj.states.iter().zip(&back.states) {
        assert!((a.airspeed_ms - b.airspeed_ms).abs() < 1e-12);
        assert!((a.alt_m - b.alt_m).abs() < 1e-9);
    }
    let report = analyze(&[back], &envelope()).unwrap();
    assert!(report.certified(), "{report:?}");
    assert_eq!(report.sample_count as usize, traj.states.len());
}

#[test]
fn live_directions_never_strand_a_random_walk() {
    let p = AircraftParams::default();
    let w = WindVector::from_speed_direction(knots_to_ms(10.0), 0.0);
    let live = LiveDirections::new(table(), &w);
    assert!(live.live_count() > 0);
    let start = SimState::at_rest(0.0, 0.0, 3000.0, knots_to_ms(90.0), 180f64.to_radians());
    assert!(live.is_live(table(), &w, start.course_rad));
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let (prims, traj) = random_sequence(&p, table(), &w, &start, 300.0, None, 0.05, &mut rng).unwrap();
    assert!(traj.duration_s() >= 300.0);
    assert_eq!(traj.meta.primitive_dchi_deg.len(), prims.len());
    assert!(analyze(&[traj], &envelope()).unwrap().certified());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lookups_are_invariant_under_joint_rotation(
        course_deg in 0.0..360.0f64,
        from_deg in 0.0..360.0f64,
        turn_deg in 0.0..360.0f64,
        dchi_index in 0usize..5,
    ) {
        let dchi = table().grid().delta_course_deg[dchi_index].to_radians();
        let speed = knots_to_ms(10.0);
        let a = table().lookup_on_course(
            dchi,
            &WindVector::from_speed_direction(speed, from_deg.to_radians()),
            course_deg.to_radians(),
        );
        let b = table().lookup_on_course(
            dchi,
            &WindVector::from_speed_direction(speed, (from_deg + turn_deg).to_radians()),
            (course_deg + turn_deg).to_radians(),
        );
        prop_assert_eq!(a.ok(), b.ok());
    }
}
