//! Scenario configuration and its text format.
//!
//! One `key = value` pair per line, `#` starts a comment, vectors are comma
//! lists. Keys are fixed except the slit label in `slit.<label>.<field>`;
//! `reference.waypoint` may repeat and is the only repeatable key.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lie::{Vec3, Vec6};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ScenarioKind {
    SlitTraversal,
    DirectionalLanding,
    Custom,
}

impl ScenarioKind {
    pub fn name(self) -> &'static str {
        match self {
            ScenarioKind::SlitTraversal => "slit-traversal",
            ScenarioKind::DirectionalLanding => "directional-landing",
            ScenarioKind::Custom => "custom",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        [Self::SlitTraversal, Self::DirectionalLanding, Self::Custom]
            .into_iter()
            .find(|k| k.name() == s)
    }
}

/// What the closed loop does when the filter QP has no solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InfeasibilityPolicy {
    /// Stop the run with [`Error::Infeasible`].
    Abort,
    /// Apply the least-violating wrench, count the step and keep going.
    Continue,
}

impl InfeasibilityPolicy {
    pub fn name(self) -> &'static str {
        match self {
            InfeasibilityPolicy::Abort => "abort",
            InfeasibilityPolicy::Continue => "continue",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlitConfig {
    pub label: String,
    pub center: Vec3<f64>,
    pub normal: Vec3<f64>,
    pub width: f64,
    pub margin: f64,
    pub beta: f64,
    pub sigma: f64,
    pub offset: Vec3<f64>,
    /// Far-field barrier value; `alpha_e / 2` when absent.
    pub ceiling: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DirectionalConfig {
    pub label: String,
    pub translation: Option<Vec3<f64>>,
    pub rotation: Option<Vec3<f64>>,
    pub e_max: f64,
}

/// Timed reference waypoint; attitude given as a rotation vector [rad].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaypointConfig {
    pub time: f64,
    pub position: Vec3<f64>,
    pub rotation: Vec3<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitialConfig {
    pub position: Vec3<f64>,
    /// Rotation vector [rad].
    pub rotation: Vec3<f64>,
    pub omega: Vec3<f64>,
    pub velocity: Vec3<f64>,
}

/// Early stop once `p_z < height` and the directional energy is below `energy`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Touchdown {
    pub height: f64,
    pub energy: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub kind: ScenarioKind,
    pub duration: f64,
    pub dt: f64,
    pub radius: f64,
    pub mass: f64,
    /// Disk normal in body coordinates.
    pub body_normal: Vec3<f64>,
    pub k1: Vec3<f64>,
    pub k2: Vec3<f64>,
    pub kd: Vec6<f64>,
    pub alpha_e: f64,
    pub alpha: f64,
    pub slits: Vec<SlitConfig>,
    pub directional: Option<DirectionalConfig>,
    pub waypoints: Vec<WaypointConfig>,
    pub initial: InitialConfig,
    pub filter_enabled: bool,
    pub on_infeasible: InfeasibilityPolicy,
    pub touchdown: Option<Touchdown>,
    /// Base name of the CSV and summary files.
    pub output_name: String,
}

fn cfg_err(line: usize, key: &str, reason: impl Into<String>) -> Error {
    Error::Config {
        line,
        key: key.to_string(),
        reason: reason.into(),
    }
}

fn is_label(s: &str) -> bool {
    !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-')
}

fn fmt_vec(v: &[f64]) -> String {
    v.iter().map(|x| format!("{x}")).collect::<Vec<_>>().join(",")
}

fn parse_list(s: &str, n: usize) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", parts.len()));
    }
    parts
        .iter()
        .map(|p| match p.parse::<f64>() {
            Ok(x) if x.is_finite() => Ok(x),
            _ => Err(format!("`{p}` is not a finite number")),
        })
        .collect()
}

fn parse_scalar(s: &str) -> std::result::Result<f64, String> {
    parse_list(s, 1).map(|v| v[0])
}

fn parse_vec3(s: &str) -> std::result::Result<Vec3<f64>, String> {
    parse_list(s, 3).map(|v| Vec3::new(v[0], v[1], v[2]))
}

fn parse_bool(s: &str) -> std::result::Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, got `{s}`")),
    }
}

fn parse_optional_vec3(s: &str) -> std::result::Result<Option<Vec3<f64>>, String> {
    if s == "none" {
        Ok(None)
    } else {
        parse_vec3(s).map(Some)
    }
}

#[derive(Default)]
struct SlitDraft {
    label: String,
    line: usize,
    center: Option<Vec3<f64>>,
    normal: Option<Vec3<f64>>,
    width: Option<f64>,
    margin: Option<f64>,
    beta: Option<f64>,
    sigma: Option<f64>,
    offset: Option<Vec3<f64>>,
    ceiling: Option<f64>,
}

#[derive(Default)]
struct Draft {
    kind: Option<ScenarioKind>,
    duration: Option<f64>,
    dt: Option<f64>,
    radius: Option<f64>,
    mass: Option<f64>,
    body_normal: Option<Vec3<f64>>,
    k1: Option<Vec3<f64>>,
    k2: Option<Vec3<f64>>,
    kd: Option<Vec6<f64>>,
    alpha_e: Option<f64>,
    alpha: Option<f64>,
    slits: Vec<SlitDraft>,
    dir_label: Option<String>,
    dir_translation: Option<Option<Vec3<f64>>>,
    dir_rotation: Option<Option<Vec3<f64>>>,
    dir_e_max: Option<f64>,
    waypoints: Vec<WaypointConfig>,
    init_position: Option<Vec3<f64>>,
    init_rotation: Option<Vec3<f64>>,
    init_omega: Option<Vec3<f64>>,
    init_velocity: Option<Vec3<f64>>,
    filter_enabled: Option<bool>,
    on_infeasible: Option<InfeasibilityPolicy>,
    touchdown_height: Option<f64>,
    touchdown_energy: Option<f64>,
    output_name: Option<String>,
}

fn ctx<V>(r: std::result::Result<V, String>, line: usize, key: &str) -> Result<V> {
    r.map_err(|e| cfg_err(line, key, e))
}

fn set<V>(slot: &mut Option<V>, value: V, line: usize, key: &str) -> Result<()> {
    if slot.is_some() {
        return Err(cfg_err(line, key, "duplicate key"));
    }
    *slot = Some(value);
    Ok(())
}

impl Draft {
    fn apply(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        match key {
            "scenario" => {
                let k = ScenarioKind::parse(value)
                    .ok_or_else(|| cfg_err(line, key, format!("unknown scenario `{value}`")))?;
                set(&mut self.kind, k, line, key)
            }
            "duration" => set(&mut self.duration, ctx(parse_scalar(value), line, key)?, line, key),
            "dt" => set(&mut self.dt, ctx(parse_scalar(value), line, key)?, line, key),
            "body.radius" => set(&mut self.radius, ctx(parse_scalar(value), line, key)?, line, key),
            "body.mass" => set(&mut self.mass, ctx(parse_scalar(value), line, key)?, line, key),
            "body.normal" => set(&mut self.body_normal, ctx(parse_vec3(value), line, key)?, line, key),
            "gains.k1" => set(&mut self.k1, ctx(parse_vec3(value), line, key)?, line, key),
            "gains.k2" => set(&mut self.k2, ctx(parse_vec3(value), line, key)?, line, key),
            "gains.kd" => {
                let v = ctx(parse_list(value, 6), line, key)?;
                set(&mut self.kd, Vec6::from_column_slice(&v), line, key)
            }
            "cbf.alpha_e" => set(&mut self.alpha_e, ctx(parse_scalar(value), line, key)?, line, key),
            "cbf.alpha" => set(&mut self.alpha, ctx(parse_scalar(value), line, key)?, line, key),
            "directional.label" => {
                if !is_label(value) {
                    return Err(cfg_err(line, key, "labels use letters, digits, `_` and `-`"));
                }
                set(&mut self.dir_label, value.to_string(), line, key)
            }
            "directional.translation" => set(&mut self.dir_translation, ctx(parse_optional_vec3(value), line, key)?, line, key),
            "directional.rotation" => set(&mut self.dir_rotation, ctx(parse_optional_vec3(value), line, key)?, line, key),
            "directional.e_max" => set(&mut self.dir_e_max, ctx(parse_scalar(value), line, key)?, line, key),
            "reference.waypoint" => {
                let v = ctx(parse_list(value, 7), line, key)?;
                self.waypoints.push(WaypointConfig {
                    time: v[0],
                    position: Vec3::new(v[1], v[2], v[3]),
                    rotation: Vec3::new(v[4], v[5], v[6]),
                });
                Ok(())
            }
            "initial.position" => set(&mut self.init_position, ctx(parse_vec3(value), line, key)?, line, key),
            "initial.rotation" => set(&mut self.init_rotation, ctx(parse_vec3(value), line, key)?, line, key),
            "initial.omega" => set(&mut self.init_omega, ctx(parse_vec3(value), line, key)?, line, key),
            "initial.velocity" => set(&mut self.init_velocity, ctx(parse_vec3(value), line, key)?, line, key),
            "filter.enabled" => set(&mut self.filter_enabled, ctx(parse_bool(value), line, key)?, line, key),
            "filter.on_infeasible" => {
                let p = match value {
                    "abort" => InfeasibilityPolicy::Abort,
                    "continue" => InfeasibilityPolicy::Continue,
                    _ => return Err(cfg_err(line, key, "expected `abort` or `continue`")),
                };
                set(&mut self.on_infeasible, p, line, key)
            }
            "stop.touchdown_height" => set(&mut self.touchdown_height, ctx(parse_scalar(value), line, key)?, line, key),
            "stop.touchdown_energy" => set(&mut self.touchdown_energy, ctx(parse_scalar(value), line, key)?, line, key),
            "output.name" => {
                if !is_label(value) {
                    return Err(cfg_err(line, key, "names use letters, digits, `_` and `-`"));
                }
                set(&mut self.output_name, value.to_string(), line, key)
            }
            _ => self.apply_slit(line, key, value),
        }
    }

    fn apply_slit(&mut self, line: usize, key: &str, value: &str) -> Result<()> {
        let parts: Vec<&str> = key.split('.').collect();
        if parts.len() != 3 || parts[0] != "slit" {
            return Err(cfg_err(line, key, "unknown key"));
        }
        let (label, field) = (parts[1], parts[2]);
        if !is_label(label) {
            return Err(cfg_err(line, key, "labels use letters, digits, `_` and `-`"));
        }
        let idx = match self.slits.iter().position(|s| s.label == label) {
            Some(i) => i,
            None => {
                self.slits.push(SlitDraft {
                    label: label.to_string(),
                    line,
                    ..Default::default()
                });
                self.slits.len() - 1
            }
        };
        let s = &mut self.slits[idx];
        match field {
            "center" => set(&mut s.center, ctx(parse_vec3(value), line, key)?, line, key),
            "normal" => set(&mut s.normal, ctx(parse_vec3(value), line, key)?, line, key),
            "width" => set(&mut s.width, ctx(parse_scalar(value), line, key)?, line, key),
            "margin" => set(&mut s.margin, ctx(parse_scalar(value), line, key)?, line, key),
            "beta" => set(&mut s.beta, ctx(parse_scalar(value), line, key)?, line, key),
            "sigma" => set(&mut s.sigma, ctx(parse_scalar(value), line, key)?, line, key),
            "offset" => set(&mut s.offset, ctx(parse_vec3(value), line, key)?, line, key),
            "ceiling" => set(&mut s.ceiling, ctx(parse_scalar(value), line, key)?, line, key),
            _ => Err(cfg_err(line, key, "unknown key")),
        }
    }

    fn finish(self, last_line: usize) -> Result<ScenarioConfig> {
        fn need<V>(v: Option<V>, key: &str, line: usize) -> Result<V> {
            v.ok_or_else(|| cfg_err(line, key, "missing required key"))
        }
        let end = last_line;
        let mut slits = Vec::new();
        for s in self.slits {
            let k = |f: &str| format!("slit.{}.{f}", s.label);
            slits.push(SlitConfig {
                center: need(s.center, &k("center"), s.line)?,
                normal: need(s.normal, &k("normal"), s.line)?,
                width: need(s.width, &k("width"), s.line)?,
                margin: s.margin.unwrap_or(crate::barrier::DEFAULT_MARGIN),
                beta: need(s.beta, &k("beta"), s.line)?,
                sigma: need(s.sigma, &k("sigma"), s.line)?,
                offset: s.offset.unwrap_or_else(Vec3::zeros),
                ceiling: s.ceiling,
                label: s.label,
            });
        }
        let any_dir = self.dir_label.is_some()
            || self.dir_translation.is_some()
            || self.dir_rotation.is_some()
            || self.dir_e_max.is_some();
        let directional = if any_dir {
            Some(DirectionalConfig {
                label: self.dir_label.unwrap_or_else(|| "dir".to_string()),
                translation: self.dir_translation.flatten(),
                rotation: self.dir_rotation.flatten(),
                e_max: need(self.dir_e_max, "directional.e_max", end)?,
            })
        } else {
            None
        };
        let touchdown = match (self.touchdown_height, self.touchdown_energy) {
            (None, None) => None,
            (Some(height), Some(energy)) => Some(Touchdown { height, energy }),
            (Some(_), None) => return Err(cfg_err(end, "stop.touchdown_energy", "missing required key")),
            (None, Some(_)) => return Err(cfg_err(end, "stop.touchdown_height", "missing required key")),
        };
        let config = ScenarioConfig {
            kind: self.kind.unwrap_or(ScenarioKind::Custom),
            duration: need(self.duration, "duration", end)?,
            dt: need(self.dt, "dt", end)?,
            radius: need(self.radius, "body.radius", end)?,
            mass: need(self.mass, "body.mass", end)?,
            body_normal: self.body_normal.unwrap_or_else(Vec3::z),
            k1: need(self.k1, "gains.k1", end)?,
            k2: need(self.k2, "gains.k2", end)?,
            kd: need(self.kd, "gains.kd", end)?,
            alpha_e: need(self.alpha_e, "cbf.alpha_e", end)?,
            alpha: need(self.alpha, "cbf.alpha", end)?,
            slits,
            directional,
            waypoints: self.waypoints,
            initial: InitialConfig {
                position: need(self.init_position, "initial.position", end)?,
                rotation: self.init_rotation.unwrap_or_else(Vec3::zeros),
                omega: self.init_omega.unwrap_or_else(Vec3::zeros),
                velocity: self.init_velocity.unwrap_or_else(Vec3::zeros),
            },
            filter_enabled: self.filter_enabled.unwrap_or(true),
            on_infeasible: self.on_infeasible.unwrap_or(InfeasibilityPolicy::Abort),
            touchdown,
            output_name: self.output_name.unwrap_or_else(|| "run".to_string()),
        };
        Ok(config)
    }
}

impl ScenarioConfig {
    /// Parses and validates configuration text.
    pub fn parse(text: &str) -> Result<Self> {
        let mut draft = Draft::default();
        let mut last = 0;
        let mut lines_of: Vec<(String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            last = line;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return Err(cfg_err(line, content, "expected `key = value`"));
            };
            let (key, value) = (key.trim(), value.trim());
            draft.apply(line, key, value)?;
            lines_of.push((key.to_string(), line));
        }
        let config = draft.finish(last)?;
        config.validate().map_err(|e| match e {
            Error::InvalidParameter { name, reason } => {
                let line = lines_of
                    .iter()
                    .find(|(k, _)| *k == name || k.starts_with(&format!("{name}.")))
                    .map_or(last, |(_, l)| *l);
                cfg_err(line, &name, reason)
            }
            other => other,
        })?;
        Ok(config)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Checks value ranges; errors name the offending key.
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, x: f64| {
            if x > 0.0 && x.is_finite() {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be positive, got {x}")))
            }
        };
        let unit = |name: &str, v: &Vec3<f64>| {
            if (v.norm() - 1.0).abs() <= 1e-12 {
                Ok(())
            } else {
                Err(Error::param(name, "must be a unit vector"))
            }
        };
        if !(self.duration >= 0.0 && self.duration.is_finite()) {
            return Err(Error::param("duration", format!("must be nonnegative, got {}", self.duration)));
        }
        positive("dt", self.dt)?;
        positive("body.radius", self.radius)?;
        positive("body.mass", self.mass)?;
        unit("body.normal", &self.body_normal)?;
        for (name, v) in [("gains.k1", self.k1.as_slice()), ("gains.k2", self.k2.as_slice()), ("gains.kd", self.kd.as_slice())] {
            if !v.iter().all(|&x| x > 0.0) {
                return Err(Error::param(name, "diagonal gains must be positive"));
            }
        }
        positive("cbf.alpha_e", self.alpha_e)?;
        positive("cbf.alpha", self.alpha)?;
        let mut labels = HashSet::new();
        for s in &self.slits {
            let k = |f: &str| format!("slit.{}.{f}", s.label);
            unit(&k("normal"), &s.normal)?;
            positive(&k("width"), s.width)?;
            positive(&k("beta"), s.beta)?;
            positive(&k("sigma"), s.sigma)?;
            if !(s.margin >= 0.0) {
                return Err(Error::param(k("margin"), "must be nonnegative"));
            }
            if let Some(c) = s.ceiling {
                positive(&k("ceiling"), c)?;
            }
            if !labels.insert(s.label.as_str()) {
                return Err(Error::param(k("center"), "duplicate label"));
            }
        }
        if let Some(d) = &self.directional {
            if d.translation.is_none() && d.rotation.is_none() {
                return Err(Error::param("directional.translation", "at least one direction must be given"));
            }
            if let Some(n) = &d.translation {
                unit("directional.translation", n)?;
            }
            if let Some(n) = &d.rotation {
                unit("directional.rotation", n)?;
            }
            positive("directional.e_max", d.e_max)?;
            if !labels.insert(d.label.as_str()) {
                return Err(Error::param("directional.label", "duplicate label"));
            }
        }
        if self.waypoints.is_empty() {
            return Err(Error::param("reference.waypoint", "at least one waypoint is required"));
        }
        for pair in self.waypoints.windows(2) {
            if !(pair[1].time > pair[0].time) {
                return Err(Error::param("reference.waypoint", "times must be strictly increasing"));
            }
        }
        if let Some(t) = &self.touchdown {
            if self.directional.is_none() {
                return Err(Error::param("stop.touchdown_energy", "requires a directional barrier"));
            }
            positive("stop.touchdown_height", t.height)?;
            positive("stop.touchdown_energy", t.energy)?;
        }
        Ok(())
    }

    /// Canonical text: every key in a fixed order with shortest round-trip
    /// floats. Parsing it returns an equal config.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("scenario", self.kind.name().into());
        kv("duration", format!("{}", self.duration));
        kv("dt", format!("{}", self.dt));
        kv("body.radius", format!("{}", self.radius));
        kv("body.mass", format!("{}", self.mass));
        kv("body.normal", fmt_vec(self.body_normal.as_slice()));
        kv("gains.k1", fmt_vec(self.k1.as_slice()));
        kv("gains.k2", fmt_vec(self.k2.as_slice()));
        kv("gains.kd", fmt_vec(self.kd.as_slice()));
        kv("cbf.alpha_e", format!("{}", self.alpha_e));
        kv("cbf.alpha", format!("{}", self.alpha));
        for sl in &self.slits {
            let k = |f: &str| format!("slit.{}.{f}", sl.label);
            kv(&k("center"), fmt_vec(sl.center.as_slice()));
            kv(&k("normal"), fmt_vec(sl.normal.as_slice()));
            kv(&k("width"), format!("{}", sl.width));
            kv(&k("margin"), format!("{}", sl.margin));
            kv(&k("beta"), format!("{}", sl.beta));
            kv(&k("sigma"), format!("{}", sl.sigma));
            kv(&k("offset"), fmt_vec(sl.offset.as_slice()));
            if let Some(c) = sl.ceiling {
                kv(&k("ceiling"), format!("{c}"));
            }
        }
        if let Some(d) = &self.directional {
            let opt = |v: &Option<Vec3<f64>>| v.map_or("none".to_string(), |n| fmt_vec(n.as_slice()));
            kv("directional.label", d.label.clone());
            kv("directional.translation", opt(&d.translation));
            kv("directional.rotation", opt(&d.rotation));
            kv("directional.e_max", format!("{}", d.e_max));
        }
        for w in &self.waypoints {
            let mut v = vec![w.time];
            v.extend_from_slice(w.position.as_slice());
            v.extend_from_slice(w.rotation.as_slice());
            kv("reference.waypoint", fmt_vec(&v));
        }
        kv("initial.position", fmt_vec(self.initial.position.as_slice()));
        kv("initial.rotation", fmt_vec(self.initial.rotation.as_slice()));
        kv("initial.omega", fmt_vec(self.initial.omega.as_slice()));
        kv("initial.velocity", fmt_vec(self.initial.velocity.as_slice()));
        kv("filter.enabled", format!("{}", self.filter_enabled));
        kv("filter.on_infeasible", self.on_infeasible.name().into());
        if let Some(t) = &self.touchdown {
            kv("stop.touchdown_height", format!("{}", t.height));
            kv("stop.touchdown_energy", format!("{}", t.energy));
        }
        kv("output.name", self.output_name.clone());
        s
    }

    /// SHA-256 of [`to_text`](Self::to_text), hex encoded.
    pub fn digest(&self) -> String {
        hex::encode(Sha256::digest(self.to_text().as_bytes()))
    }

    /// Far-field value of a slit barrier.
    pub fn ceiling_of(&self, slit: &SlitConfig) -> f64 {
        slit.ceiling.unwrap_or(self.alpha_e * 0.5)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "\
duration = 1
dt = 0.01
body.radius = 1
body.mass = 2
gains.k1 = 1,1,1
gains.k2 = 1,1,1
gains.kd = 1,1,1,1,1,1
cbf.alpha_e = 10
cbf.alpha = 1
reference.waypoint = 0, 0,0,0, 0,0,0
initial.position = 0,0,0
";

    #[test]
    fn minimal_config_uses_defaults() {
        let c = ScenarioConfig::parse(MINIMAL).unwrap();
        assert_eq!(c.kind, ScenarioKind::Custom);
        assert!(c.filter_enabled);
        assert_eq!(c.on_infeasible, InfeasibilityPolicy::Abort);
        assert_eq!(c.body_normal, Vec3::z());
        assert!(c.slits.is_empty() && c.directional.is_none());
    }

    #[test]
    fn canonical_text_round_trips() {
        let text = format!(
            "{MINIMAL}slit.a.center = 1,2,3\nslit.a.normal = 0,1,0\nslit.a.width = 0.3\nslit.a.beta = 25\nslit.a.sigma = 12\n\
             directional.translation = 0,0,1\ndirectional.e_max = 1.5\nstop.touchdown_height = 0.01\nstop.touchdown_energy = 0.001\n"
        );
        let c = ScenarioConfig::parse(&text).unwrap();
        let again = ScenarioConfig::parse(&c.to_text()).unwrap();
        assert_eq!(c, again);
        assert_eq!(c.to_text(), again.to_text());
        assert_eq!(c.digest(), again.digest());
        assert_eq!(c.digest().len(), 64);
    }

    #[test]
    fn comments_and_blank_lines() {
        let text = format!("# header\n\n{MINIMAL}   # trailing\n");
        assert!(ScenarioConfig::parse(&text).is_ok());
    }

    fn error_of(text: &str) -> (usize, String, String) {
        match ScenarioConfig::parse(text).unwrap_err() {
            Error::Config { line, key, reason } => (line, key, reason),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_reports_line() {
        let (line, key, _) = error_of(&format!("{MINIMAL}bogus.key = 3\n"));
        assert_eq!((line, key.as_str()), (12, "bogus.key"));
        let (_, key, _) = error_of(&format!("{MINIMAL}slit.a.colour = 3\n"));
        assert_eq!(key, "slit.a.colour");
    }

    #[test]
    fn bad_values_report_key_and_line() {
        let text = MINIMAL.replace("dt = 0.01", "dt = -1");
        let (line, key, _) = error_of(&text);
        assert_eq!((line, key.as_str()), (2, "dt"));
        let (line, key, _) = error_of(&MINIMAL.replace("body.mass = 2", "body.mass = two"));
        assert_eq!((line, key.as_str()), (4, "body.mass"));
        let (_, key, _) = error_of(&MINIMAL.replace("gains.k1 = 1,1,1", "gains.k1 = 1,1"));
        assert_eq!(key, "gains.k1");
        let (_, key, _) = error_of(&format!("{MINIMAL}dt = 0.1\n"));
        assert_eq!(key, "dt");
    }

    #[test]
    fn missing_keys_are_rejected() {
        let (_, key, reason) = error_of(&MINIMAL.replace("cbf.alpha = 1\n", ""));
        assert_eq!(key, "cbf.alpha");
        assert!(reason.contains("missing"));
        let (_, key, _) = error_of(&format!("{MINIMAL}slit.s.center = 0,0,0\n"));
        assert_eq!(key, "slit.s.normal");
        let (_, key, _) = error_of(&format!("{MINIMAL}stop.touchdown_height = 0.1\n"));
        assert_eq!(key, "stop.touchdown_energy");
    }

    #[test]
    fn non_finite_and_unit_checks() {
        let (_, key, _) = error_of(&MINIMAL.replace("dt = 0.01", "dt = NaN"));
        assert_eq!(key, "dt");
        let (_, key, _) = error_of(&format!(
            "{MINIMAL}slit.s.center = 0,0,0\nslit.s.normal = 1,1,0\nslit.s.width = 1\nslit.s.beta = 1\nslit.s.sigma = 1\n"
        ));
        assert_eq!(key, "slit.s.normal");
    }

    #[test]
    fn waypoints_must_increase() {
        let text = format!("{MINIMAL}reference.waypoint = 0, 1,1,1, 0,0,0\n");
        let (_, key, _) = error_of(&text);
        assert_eq!(key, "reference.waypoint");
    }

    #[test]
    fn zero_duration_is_allowed() {
        let c = ScenarioConfig::parse(&MINIMAL.replace("duration = 1", "duration = 0")).unwrap();
        assert_eq!(c.duration, 0.0);
    }
}
