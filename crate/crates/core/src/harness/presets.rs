//! The two shipped scenarios.

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use super::config::{
    DirectionalConfig, InfeasibilityPolicy, InitialConfig, ScenarioConfig, ScenarioKind, SlitConfig, Touchdown, WaypointConfig,
};
use crate::error::{Error, Result};
use crate::lie::{Rotation, Vec3, Vec6};

/// Preset name and its configuration text.
pub const PRESETS: [(&str, &str); 2] = [
    ("slit", include_str!("../../../../presets/slit.cfg")),
    ("landing", include_str!("../../../../presets/landing.cfg")),
];

/// Landing class-K coefficients swept by default.
pub const LANDING_ALPHAS: [f64; 4] = [0.5, 1.0, 2.0, 5.0];

/// Energy weights swept by default for the slit scenario.
pub const SLIT_ALPHA_ES: [f64; 2] = [50.0, 150.0];

fn disk_common(kind: ScenarioKind, alpha_e: f64, alpha: f64) -> ScenarioConfig {
    ScenarioConfig {
        kind,
        duration: 15.0,
        dt: 1e-3,
        radius: 3.0,
        mass: 3.0,
        body_normal: Vec3::z(),
        k1: Vec3::repeat(20.0),
        k2: Vec3::repeat(8.0),
        kd: Vec6::new(0.8, 0.8, 0.8, 8.0, 8.0, 8.0),
        alpha_e,
        alpha,
        slits: Vec::new(),
        directional: None,
        waypoints: Vec::new(),
        initial: InitialConfig {
            position: Vec3::zeros(),
            rotation: Vec3::zeros(),
            omega: Vec3::zeros(),
            velocity: Vec3::zeros(),
        },
        filter_enabled: true,
        on_infeasible: InfeasibilityPolicy::Abort,
        touchdown: None,
        output_name: String::new(),
    }
}

/// Two slits on a straight path along `−y`. The reference carries the disk
/// edge-on toward each opening: its normal matches the first slit's normal
/// until the reference clears that slit, then turns about `y` to match the
/// second.
///
/// The gates are wide compared with the slit spacing, so between the slits
/// no attitude keeps both kinematic barriers positive. The safety filter
/// therefore stops the disk before the first opening and it creeps toward
/// the boundary of the safe set for the rest of the run.
pub fn build_scenario_slit(alpha_e: f64) -> Result<ScenarioConfig> {
    if !(alpha_e > 0.0 && alpha_e.is_finite()) {
        return Err(Error::param("cbf.alpha_e", "must be positive"));
    }
    let mut c = disk_common(ScenarioKind::SlitTraversal, alpha_e, 1.0);
    let slit = |label: &str, center: Vec3<f64>, normal: Vec3<f64>| SlitConfig {
        label: label.to_string(),
        center,
        normal,
        width: 0.3,
        margin: crate::barrier::DEFAULT_MARGIN,
        beta: 25.0,
        sigma: 12.0,
        offset: Vec3::new(0.0, 0.5, 0.0),
        ceiling: None,
    };
    c.slits = vec![
        slit("slit1", Vec3::new(2.8, 1.0, 1.6), Vec3::x()),
        slit("slit2", Vec3::new(2.8, -2.0, 1.6), Rotation::about_y(FRAC_PI_4).apply(&Vec3::x())),
    ];
    let face_first = Vec3::new(0.0, FRAC_PI_2, 0.0);
    let face_second = Vec3::new(0.0, 3.0 * FRAC_PI_4, 0.0);
    let along = |t: f64| Vec3::new(2.8, 6.0 - 0.8 * t, 1.6);
    c.waypoints = [(0.0, face_first), (6.25, face_first), (10.0, face_second), (15.0, face_second)]
        .into_iter()
        .map(|(t, rotation)| WaypointConfig {
            time: t,
            position: along(t),
            rotation,
        })
        .collect();
    c.initial.position = along(0.0);
    c.initial.rotation = face_first;
    c.output_name = "slit".to_string();
    Ok(c)
}

/// Descent from a tilted hover to the origin with the normal-direction
/// kinetic energy limited by a directional barrier.
pub fn build_scenario_landing(alpha: f64) -> Result<ScenarioConfig> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::param("cbf.alpha", "must be positive"));
    }
    let mut c = disk_common(ScenarioKind::DirectionalLanding, 150.0, alpha);
    let start = Vec3::new(15.0, 0.0, 10.0);
    c.directional = Some(DirectionalConfig {
        label: "pad".to_string(),
        translation: Some(Vec3::x().cross(&Vec3::y())),
        rotation: None,
        e_max: 1.5,
    });
    c.waypoints = [(0.0, start), (6.0, start * 0.1), (8.0, Vec3::zeros()), (15.0, Vec3::zeros())]
        .into_iter()
        .map(|(t, position)| WaypointConfig {
            time: t,
            position,
            rotation: Vec3::zeros(),
        })
        .collect();
    c.initial.position = start;
    c.initial.rotation = Vec3::new(FRAC_PI_2, 0.0, 0.0);
    c.touchdown = Some(Touchdown {
        height: 0.01,
        energy: 1e-3,
    });
    c.output_name = "landing".to_string();
    Ok(c)
}

/// Parses a compiled-in preset by name.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let (_, text) = PRESETS
        .iter()
        .find(|(n, _)| *n == name)
        .ok_or_else(|| Error::param("preset", format!("unknown preset `{name}`")))?;
    ScenarioConfig::parse(text)
}
