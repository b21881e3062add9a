//! Fixed-step closed loop: reference, nominal control, safety filter,
//! integration, logging.

use std::time::Instant;

use super::config::{InfeasibilityPolicy, ScenarioConfig};
use crate::barrier::{Cbf, ClassK, DirectionalEnergyCbf, EnergyAugmentedCbf, Gate, KinematicBarrier, SlitSpec};
use crate::control::{control, Gains};
use crate::dynamics::{kinetic_energy, step_stiff_with, InertiaTensor, State, Wrench};
use crate::error::Result;
use crate::filter::{filter, filter_relaxed, unfiltered, FilterOutput};
use crate::lie::{exp_so3, Mat3, Pose, Twist, Vec3, Vec6};
use crate::trajectory::{ReferenceTrajectory, Waypoint};

/// A validated configuration turned into simulation objects.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub inertia: InertiaTensor<f64>,
    pub gains: Gains<f64>,
    pub cbfs: Vec<Cbf<f64>>,
    pub trajectory: ReferenceTrajectory<f64>,
    pub initial: State<f64>,
}

impl Scenario {
    pub fn from_config(config: &ScenarioConfig) -> Result<Self> {
        config.validate()?;
        let inertia = InertiaTensor::disk(config.radius, config.mass)?;
        let gains = Gains::diagonal(config.k1, config.k2, config.kd)?;
        let class_k = ClassK::linear(config.alpha)?;
        let mut cbfs = Vec::new();
        for s in &config.slits {
            let spec = SlitSpec::centered(
                s.center,
                s.normal,
                s.width,
                config.radius,
                config.body_normal,
                s.margin,
                s.beta,
                Gate {
                    sigma: s.sigma,
                    offset: s.offset,
                    ceiling: config.ceiling_of(s),
                },
            )?;
            cbfs.push(Cbf::EnergyAugmented(EnergyAugmentedCbf::new(
                s.label.clone(),
                KinematicBarrier::Slit(spec),
                config.alpha_e,
                class_k,
            )?));
        }
        if let Some(d) = &config.directional {
            cbfs.push(Cbf::Directional(DirectionalEnergyCbf::new(
                d.label.clone(),
                d.translation,
                d.rotation,
                d.e_max,
                class_k,
            )?));
        }
        let trajectory = ReferenceTrajectory::new(
            config
                .waypoints
                .iter()
                .map(|w| Waypoint::new(w.time, w.position, exp_so3(&w.rotation)))
                .collect(),
        )?;
        let initial = State::new(
            Pose::new(exp_so3(&config.initial.rotation), config.initial.position),
            Twist::new(config.initial.omega, config.initial.velocity),
        );
        Ok(Self {
            config: config.clone(),
            inertia,
            gains,
            cbfs,
            trajectory,
            initial,
        })
    }

    /// Number of fixed steps in the horizon.
    pub fn steps(&self) -> usize {
        (self.config.duration / self.config.dt).round() as usize
    }

    /// Nominal wrench at time `t`, the filter output, and the desired position.
    pub fn evaluate(&self, t: f64, state: &State<f64>) -> Result<(Wrench<f64>, FilterOutput<f64>, Vec3<f64>)> {
        let reference = self.trajectory.sample(t);
        let u_des = control(state, &reference, &self.gains, &self.inertia);
        let out = if !self.config.filter_enabled {
            unfiltered(state, &u_des, &self.cbfs, &self.inertia)
        } else {
            match self.config.on_infeasible {
                InfeasibilityPolicy::Abort => filter(state, &u_des, &self.cbfs, &self.inertia)?,
                InfeasibilityPolicy::Continue => filter_relaxed(state, &u_des, &self.cbfs, &self.inertia)?,
            }
        };
        Ok((u_des, out, reference.pose_d.position))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CbfKind {
    EnergyAugmented,
    Directional,
}

impl CbfKind {
    pub fn of(cbf: &Cbf<f64>) -> Self {
        match cbf {
            Cbf::EnergyAugmented(_) => CbfKind::EnergyAugmented,
            Cbf::Directional(_) => CbfKind::Directional,
        }
    }
}

/// Barrier values at one logged step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CbfSample {
    pub kind: CbfKind,
    /// Kinematic barrier `h` (energy-augmented only).
    pub h: Option<f64>,
    /// `H` or `H_dir`.
    pub big_h: f64,
    /// Directional energy (directional only).
    pub e_dir: Option<f64>,
    pub active: bool,
}

/// One row of the run log, taken at the start of each step.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub t: f64,
    pub position: Vec3<f64>,
    pub rotation: Mat3<f64>,
    pub omega: Vec3<f64>,
    pub velocity: Vec3<f64>,
    pub u_des: Vec6<f64>,
    pub u_star: Vec6<f64>,
    pub cbfs: Vec<CbfSample>,
    /// Total kinetic energy.
    pub energy: f64,
    /// Desired position (not written to the CSV).
    pub position_desired: Vec3<f64>,
    pub correction_norm: f64,
    pub infeasible: bool,
    /// Integrator sub-steps used to advance from this record to the next.
    pub substeps: usize,
}

/// Receives every log record as it is produced.
pub trait LogSink {
    fn record(&mut self, record: &LogRecord) -> Result<()>;
}

impl LogSink for Vec<LogRecord> {
    fn record(&mut self, record: &LogRecord) -> Result<()> {
        self.push(record.clone());
        Ok(())
    }
}

/// Sink that drops every record.
#[derive(Debug, Default, Clone, Copy)]
pub struct Discard;

impl LogSink for Discard {
    fn record(&mut self, _: &LogRecord) -> Result<()> {
        Ok(())
    }
}

/// Aggregates over a run. Extrema over an empty log are `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub digest: String,
    pub steps: usize,
    /// Time of the touchdown stop, if it triggered.
    pub stopped_at: Option<f64>,
    /// `min h` per energy-augmented barrier, by label.
    pub min_h: Vec<(String, f64)>,
    /// `min H` (or `min H_dir`) per barrier, by label.
    pub min_big_h: Vec<(String, f64)>,
    pub max_edir: f64,
    pub max_correction: f64,
    pub rms_pos_err: f64,
    pub infeasible_steps: usize,
    pub substeps: usize,
    pub wall_ms: f64,
}

/// Running extrema, shared with the verification code so that summaries
/// can be recomputed from a log.
#[derive(Debug, Clone)]
pub struct SummaryBuilder {
    labels: Vec<(String, CbfKind)>,
    min_h: Vec<f64>,
    min_big_h: Vec<f64>,
    max_edir: f64,
    max_correction: f64,
    sq_err: f64,
    steps: usize,
    infeasible_steps: usize,
    substeps: usize,
}

fn nan_min(a: f64, b: f64) -> f64 {
    if a.is_nan() || b < a {
        b
    } else {
        a
    }
}

fn nan_max(a: f64, b: f64) -> f64 {
    if a.is_nan() || b > a {
        b
    } else {
        a
    }
}

impl SummaryBuilder {
    pub fn new(labels: Vec<(String, CbfKind)>) -> Self {
        let n = labels.len();
        Self {
            labels,
            min_h: vec![f64::NAN; n],
            min_big_h: vec![f64::NAN; n],
            max_edir: f64::NAN,
            max_correction: f64::NAN,
            sq_err: 0.0,
            steps: 0,
            infeasible_steps: 0,
            substeps: 0,
        }
    }

    pub fn push(&mut self, r: &LogRecord) {
        for (i, s) in r.cbfs.iter().enumerate() {
            if let Some(h) = s.h {
                self.min_h[i] = nan_min(self.min_h[i], h);
            }
            self.min_big_h[i] = nan_min(self.min_big_h[i], s.big_h);
            if let Some(e) = s.e_dir {
                self.max_edir = nan_max(self.max_edir, e);
            }
        }
        self.max_correction = nan_max(self.max_correction, r.correction_norm);
        self.sq_err += (r.position - r.position_desired).norm_squared();
        self.steps += 1;
        self.infeasible_steps += usize::from(r.infeasible);
        self.substeps += r.substeps;
    }

    pub fn finish(self, digest: String, stopped_at: Option<f64>, wall_ms: f64) -> RunSummary {
        let mut min_h = Vec::new();
        let mut min_big_h = Vec::new();
        for (i, (label, kind)) in self.labels.into_iter().enumerate() {
            if kind == CbfKind::EnergyAugmented {
                min_h.push((label.clone(), self.min_h[i]));
            }
            min_big_h.push((label, self.min_big_h[i]));
        }
        RunSummary {
            digest,
            steps: self.steps,
            stopped_at,
            min_h,
            min_big_h,
            max_edir: self.max_edir,
            max_correction: self.max_correction,
            rms_pos_err: if self.steps == 0 {
                f64::NAN
            } else {
                (self.sq_err / self.steps as f64).sqrt()
            },
            infeasible_steps: self.infeasible_steps,
            substeps: self.substeps,
            wall_ms,
        }
    }
}

fn record(t: f64, state: &State<f64>, u_des: &Wrench<f64>, out: &FilterOutput<f64>, p_d: Vec3<f64>, scenario: &Scenario) -> LogRecord {
    LogRecord {
        t,
        position: state.pose.position,
        rotation: *state.pose.rotation.matrix(),
        omega: state.twist.omega,
        velocity: state.twist.linear,
        u_des: u_des.to_vector(),
        u_star: out.u_star.to_vector(),
        cbfs: out
            .diagnostics
            .iter()
            .zip(&scenario.cbfs)
            .map(|(d, cbf)| {
                let kind = CbfKind::of(cbf);
                CbfSample {
                    kind,
                    h: d.constraint.h,
                    big_h: d.constraint.big_h,
                    e_dir: (kind == CbfKind::Directional).then_some(d.constraint.energy),
                    active: d.active,
                }
            })
            .collect(),
        energy: kinetic_energy(&state.twist, &scenario.inertia),
        position_desired: p_d,
        correction_norm: out.correction_norm,
        infeasible: out.infeasible.is_some(),
        substeps: 0,
    }
}

/// Local error tolerance of the adaptive sub-steps.
pub const SUBSTEP_TOL: f64 = 1e-8;

/// Smallest sub-step, as a fraction of the logging step.
const MIN_SUBSTEP_FRACTION: f64 = 1.0 / 16_777_216.0;

impl Scenario {
    fn substep(&self, t: f64, state: &State<f64>, h: f64) -> Result<(State<f64>, f64, bool)> {
        let mut infeasible = false;
        let (next, err) = step_stiff_with(state, &self.inertia, h, |offset, x| {
            let (_, out, _) = self.evaluate(t + offset, x)?;
            infeasible |= out.infeasible.is_some();
            Ok(out.u_star)
        })?;
        Ok((next, err, infeasible))
    }

    /// Advances the closed loop by one logging step `dt`.
    ///
    /// Near the boundary of an energy-augmented safe set the filtered
    /// feedback becomes stiff, so the interval is covered by linearly
    /// implicit sub-steps with error control. `h` carries the suggested
    /// sub-step between calls. Returns the new state, whether any
    /// evaluation needed the relaxed filter, and the number of sub-steps.
    pub fn advance(&self, t: f64, state: &State<f64>, h: &mut f64) -> Result<(State<f64>, bool, usize)> {
        let dt = self.config.dt;
        let h_min = dt * MIN_SUBSTEP_FRACTION;
        let mut x = *state;
        let mut elapsed = 0.0;
        let mut infeasible = false;
        let mut substeps = 0;
        loop {
            let remaining = dt - elapsed;
            if remaining <= dt * 1e-12 {
                break;
            }
            let step = h.min(remaining).max(h_min.min(remaining));
            let (next, estimate, flagged) = self.substep(t + elapsed, &x, step)?;
            let err = estimate / SUBSTEP_TOL;
            let factor = if err > 0.0 { 0.9 * err.powf(-0.25) } else { 2.0 };
            if err <= 1.0 || step <= h_min {
                x = next;
                elapsed += step;
                substeps += 1;
                infeasible |= flagged;
                *h = (step * factor.clamp(0.2, 2.0)).min(dt);
            } else {
                *h = step * factor.clamp(0.1, 0.5);
            }
        }
        Ok((x, infeasible, substeps))
    }
}

/// Runs the closed loop, streaming one record per step into `sink`.
///
/// Every integrator stage re-evaluates the controller and the filter at the
/// stage state, so the applied wrench is a continuous feedback law rather
/// than a zero-order hold. Logged inputs are the values at the start of the
/// step.
pub fn run(scenario: &Scenario, sink: &mut dyn LogSink) -> Result<RunSummary> {
    let started = Instant::now();
    let cfg = &scenario.config;
    let dt = cfg.dt;
    let labels = scenario.cbfs.iter().map(|c| (c.label().to_string(), CbfKind::of(c))).collect();
    let mut summary = SummaryBuilder::new(labels);
    let mut state = scenario.initial;
    let mut stopped_at = None;
    let mut h = dt;

    for k in 0..scenario.steps() {
        let t = k as f64 * dt;
        let (u_des, out, p_d) = scenario.evaluate(t, &state)?;
        let mut rec = record(t, &state, &u_des, &out, p_d, scenario);
        let (next, infeasible, substeps) = scenario.advance(t, &state, &mut h)?;
        rec.infeasible |= infeasible;
        rec.substeps = substeps;
        sink.record(&rec)?;
        summary.push(&rec);

        if let Some(td) = &cfg.touchdown {
            let e_n = rec.cbfs.iter().find_map(|s| s.e_dir).unwrap_or(f64::INFINITY);
            if rec.position.z < td.height && e_n < td.energy {
                stopped_at = Some(t);
                break;
            }
        }
        state = next;
    }
    let wall_ms = started.elapsed().as_secs_f64() * 1e3;
    Ok(summary.finish(cfg.digest(), stopped_at, wall_ms))
}

/// Builds the scenario and runs it.
pub fn run_config(config: &ScenarioConfig, sink: &mut dyn LogSink) -> Result<RunSummary> {
    run(&Scenario::from_config(config)?, sink)
}
