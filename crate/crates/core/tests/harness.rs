use lie_cbf::dynamics::{State, Wrench};
use lie_cbf::harness::{
    build_scenario_landing, build_scenario_slit, csv_header, preset, read_csv, read_summary, run, summary_text, write_csv,
    write_summary, CsvSink, LogRecord, Scenario, ScenarioConfig, PRESETS,
};
use lie_cbf::lie::{Pose, Rotation, Twist};

fn records(config: &ScenarioConfig) -> (Scenario, Vec<LogRecord>, lie_cbf::harness::RunSummary) {
    let scenario = Scenario::from_config(config).unwrap();
    let mut log = Vec::new();
    let summary = run(&scenario, &mut log).unwrap();
    (scenario, log, summary)
}

fn logged_state(r: &LogRecord) -> State<f64> {
    State::new(
        Pose::new(Rotation::from_matrix(r.rotation).unwrap(), r.position),
        Twist::new(r.omega, r.velocity),
    )
}

fn short(mut c: ScenarioConfig, duration: f64) -> ScenarioConfig {
    c.duration = duration;
    c
}

#[test]
fn header_matches_declared_layout() {
    let scenario = Scenario::from_config(&build_scenario_slit(150.0).unwrap()).unwrap();
    let header = csv_header(&scenario.cbfs).join(",");
    let mut expected: Vec<String> = ["t", "px", "py", "pz"].iter().map(|s| s.to_string()).collect();
    for i in 1..=3 {
        for j in 1..=3 {
            expected.push(format!("r{i}{j}"));
        }
    }
    expected.extend(["wx", "wy", "wz", "vx", "vy", "vz"].iter().map(|s| s.to_string()));
    expected.extend((1..=6).map(|i| format!("ud{i}")));
    expected.extend((1..=6).map(|i| format!("u{i}")));
    expected.extend(["h_slit1", "H_slit1", "act_slit1", "h_slit2", "H_slit2", "act_slit2", "E"].iter().map(|s| s.to_string()));
    assert_eq!(header, expected.join(","));

    let landing = Scenario::from_config(&build_scenario_landing(1.0).unwrap()).unwrap();
    assert!(csv_header(&landing.cbfs).join(",").ends_with("u6,Edir_pad,Hdir_pad,act_pad,E"));
}

#[test]
fn zero_duration_gives_empty_log_and_trivial_summary() {
    let (_, log, summary) = records(&short(build_scenario_slit(150.0).unwrap(), 0.0));
    assert!(log.is_empty());
    assert_eq!(summary.steps, 0);
    assert!(summary.min_big_h.iter().all(|(_, v)| v.is_nan()));
    assert!(summary.max_correction.is_nan());
    assert_eq!(summary.infeasible_steps, 0);
}

#[test]
fn summary_minima_equal_csv_column_minima() {
    let dir = tempfile::tempdir().unwrap();
    let config = short(build_scenario_slit(150.0).unwrap(), 6.0);
    let (scenario, log, summary) = records(&config);
    let csv = dir.path().join("slit.csv");
    let sum = dir.path().join("slit.summary");
    write_csv(&csv, &scenario.cbfs, &log).unwrap();
    write_summary(&sum, &summary).unwrap();

    let table = read_csv(&csv).unwrap();
    assert_eq!(table.rows.len(), log.len());
    let fields = read_summary(&sum).unwrap();
    let field = |k: &str| fields.iter().find(|(key, _)| key == k).unwrap().1.parse::<f64>().unwrap();
    for label in ["slit1", "slit2"] {
        let min_col = |name: &str| table.column(name).unwrap().into_iter().fold(f64::INFINITY, f64::min);
        assert_eq!(field(&format!("min_H_{label}")), min_col(&format!("H_{label}")));
        assert_eq!(field(&format!("min_h_{label}")), min_col(&format!("h_{label}")));
    }
    let corrections: Vec<f64> = log.iter().map(|r| r.correction_norm).collect();
    assert_eq!(field("max_correction"), corrections.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
}

#[test]
fn landing_summary_tracks_directional_energy_column() {
    let dir = tempfile::tempdir().unwrap();
    let (scenario, log, summary) = records(&build_scenario_landing(2.0).unwrap());
    let csv = dir.path().join("landing.csv");
    write_csv(&csv, &scenario.cbfs, &log).unwrap();
    let table = read_csv(&csv).unwrap();
    let max = table.column("Edir_pad").unwrap().into_iter().fold(f64::NEG_INFINITY, f64::max);
    assert_eq!(summary.max_edir, max);
    assert!(summary.stopped_at.is_some(), "touchdown should end the landing run early");
    let last = log.last().unwrap();
    assert!(last.position.z < 0.01);
}

#[test]
fn csv_is_byte_stable() {
    let config = short(build_scenario_landing(0.5).unwrap(), 3.0);
    let scenario = Scenario::from_config(&config).unwrap();
    let bytes = || {
        let mut sink = CsvSink::new(Vec::new(), "memory", &scenario.cbfs).unwrap();
        run(&scenario, &mut sink).unwrap();
        sink.finish().unwrap()
    };
    let a = bytes();
    assert_eq!(a, bytes());
    assert_eq!(a.iter().filter(|&&b| b == b'\n').count(), 3001);
}

#[test]
fn logged_values_round_trip_through_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let (scenario, log, _) = records(&short(build_scenario_slit(50.0).unwrap(), 0.5));
    let csv = dir.path().join("s.csv");
    write_csv(&csv, &scenario.cbfs, &log).unwrap();
    let table = read_csv(&csv).unwrap();
    for (row, r) in table.rows.iter().zip(&log) {
        assert_eq!(row[0], r.t);
        assert_eq!(&row[1..4], r.position.as_slice());
        assert_eq!(row[19..25].to_vec(), r.u_des.iter().cloned().collect::<Vec<_>>());
        assert_eq!(*row.last().unwrap(), r.energy);
    }
}

#[test]
fn energy_change_matches_input_power() {
    // The reference is only C¹, so the nominal input jumps at waypoint times;
    // intervals ending on a waypoint are skipped.
    for config in [build_scenario_landing(1.0).unwrap(), short(build_scenario_slit(150.0).unwrap(), 5.0)] {
        let (_, log, _) = records(&config);
        let dt = config.dt;
        let knots: Vec<f64> = config.waypoints.iter().map(|w| w.time).collect();
        let power = |r: &LogRecord| r.omega.dot(&r.u_star.fixed_rows::<3>(0)) + r.velocity.dot(&r.u_star.fixed_rows::<3>(3));
        let mut worst = 0.0f64;
        let mut checked = 0;
        for pair in log.windows(2) {
            if knots.iter().any(|&k| k > pair[0].t + 1e-9 && k <= pair[1].t + 1e-9) {
                continue;
            }
            let rate = (pair[1].energy - pair[0].energy) / dt;
            let mean = 0.5 * (power(&pair[0]) + power(&pair[1]));
            worst = worst.max((rate - mean).abs() / (1.0 + mean.abs()));
            checked += 1;
        }
        assert!(checked + 4 >= log.len());
        assert!(worst < 50.0 * dt, "worst relative mismatch {worst}");
    }
}

#[test]
fn filter_is_idle_when_constraints_hold_strictly() {
    for config in [build_scenario_landing(1.0).unwrap(), short(build_scenario_slit(150.0).unwrap(), 8.0)] {
        let (scenario, log, _) = records(&config);
        let mut strict = 0;
        for r in &log {
            let s = logged_state(r);
            let holds = scenario.cbfs.iter().all(|c| {
                let con = c.constraint(&s, &scenario.inertia);
                con.a.dot(&r.u_des) < con.b
            });
            if holds {
                strict += 1;
                assert_eq!(r.correction_norm, 0.0, "t = {}", r.t);
                assert_eq!(r.u_star, r.u_des);
            }
        }
        assert!(strict > 100);
    }
}

#[test]
fn safe_set_containment_along_slit_runs() {
    for alpha_e in [50.0, 150.0] {
        let (_, log, _) = records(&build_scenario_slit(alpha_e).unwrap());
        for r in &log {
            for c in &r.cbfs {
                if c.big_h >= 0.0 {
                    assert!(c.h.unwrap() >= 0.0, "t = {}", r.t);
                }
            }
        }
    }
}

#[test]
fn larger_energy_weight_does_not_reduce_clearance() {
    // Clearance is the smallest kinematic barrier value over both slits.
    let clearance = |alpha_e: f64| {
        let (_, _, summary) = records(&build_scenario_slit(alpha_e).unwrap());
        summary.min_h.iter().map(|(_, v)| *v).fold(f64::INFINITY, f64::min)
    };
    let low = clearance(50.0);
    let high = clearance(150.0);
    assert!(low >= -1e-6 && high >= low, "{low} vs {high}");
}

#[test]
fn presets_parse_to_the_builders_and_round_trip() {
    assert_eq!(preset("slit").unwrap(), build_scenario_slit(150.0).unwrap());
    assert_eq!(preset("landing").unwrap(), build_scenario_landing(1.0).unwrap());
    for (name, _) in PRESETS {
        let c = preset(name).unwrap();
        let again = ScenarioConfig::parse(&c.to_text()).unwrap();
        assert_eq!(again, c);
        assert_eq!(again.digest(), c.digest());
    }
    assert!(preset("unknown").is_err());
}

#[test]
fn unfiltered_run_applies_the_nominal_input() {
    let mut config = short(build_scenario_landing(1.0).unwrap(), 2.0);
    config.filter_enabled = false;
    let (_, log, summary) = records(&config);
    assert!(log.iter().all(|r| r.u_star == r.u_des && r.correction_norm == 0.0));
    assert_eq!(summary.max_correction, 0.0);
    assert!(summary_text(&summary).contains("max_Edir = "));
}

#[test]
fn run_stops_on_infeasibility_under_abort_policy() {
    let mut config = build_scenario_slit(150.0).unwrap();
    config.initial.position = lie_cbf::lie::Vec3::new(2.8, 1.0, 1.6);
    config.initial.rotation = lie_cbf::lie::Vec3::zeros();
    let scenario = Scenario::from_config(&config).unwrap();
    let err = run(&scenario, &mut Vec::new()).unwrap_err();
    assert!(matches!(err, lie_cbf::Error::Infeasible { .. }));

    config.on_infeasible = lie_cbf::harness::InfeasibilityPolicy::Continue;
    config.duration = 0.05;
    let (_, log, summary) = records(&config);
    assert!(log[0].infeasible);
    assert!(summary.infeasible_steps >= 1);
    // The least-violating input is still a finite wrench.
    assert!(Wrench::from_vector(&log[0].u_star).to_vector().iter().all(|x| x.is_finite()));
}
