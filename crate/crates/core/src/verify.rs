//! Self-checks run by `lie-cbf verify`.
//!
//! Each check draws its own seeded samples, compares the library against an
//! independent computation and reports a single [`CheckOutcome`].

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::barrier::{projection_matrix, projection_rate, Cbf, ClassK, DirectionalEnergyCbf};
use crate::dynamics::{acceleration, kinetic_energy, step, step_with, InertiaTensor, State, Wrench};
use crate::harness::{
    build_scenario_landing, build_scenario_slit, run, CsvSink, LogRecord, Scenario, LANDING_ALPHAS, SLIT_ALPHA_ES,
};
use crate::lie::{coadjoint, exp_se3, exp_so3, Pose, Twist, Vec3, Vec6};
use crate::qp::{solve, HalfSpace};

/// Result of one check.
#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {}: {}", self.name, self.detail)
    }
}

/// Runtime budget for one scenario run.
pub const RUN_BUDGET_SECONDS: f64 = 10.0;

fn uniform(rng: &mut ChaCha8Rng, scale: f64) -> Vec3<f64> {
    Vec3::new(
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
        rng.gen_range(-scale..scale),
    )
}

fn random_state(rng: &mut ChaCha8Rng, center: Vec3<f64>, spread: f64, speed: f64) -> State<f64> {
    State::new(
        Pose::new(exp_so3(&uniform(rng, 3.2)), center + uniform(rng, spread)),
        Twist::new(uniform(rng, speed * 0.5), uniform(rng, speed)),
    )
}

fn slit_scenario() -> Scenario {
    Scenario::from_config(&build_scenario_slit(150.0).expect("preset")).expect("preset")
}

/// `H ≥ 0 ⇒ h ≥ 0` for every slit barrier on random states.
pub fn set_inclusion(samples: usize, seed: u64) -> CheckOutcome {
    let scenario = slit_scenario();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inside = 0usize;
    let mut counterexamples = 0usize;
    for _ in 0..samples {
        let speed = 10f64.powf(rng.gen_range(-3.0..0.5));
        let s = random_state(&mut rng, Vec3::new(2.8, -0.5, 1.6), 4.0, speed);
        for cbf in &scenario.cbfs {
            if let Cbf::EnergyAugmented(c) = cbf {
                if c.value(&s, &scenario.inertia) >= 0.0 {
                    inside += 1;
                    if c.barrier.value(&s.pose) < 0.0 {
                        counterexamples += 1;
                    }
                }
            }
        }
    }
    CheckOutcome::new(
        "set inclusion",
        counterexamples == 0,
        format!("{counterexamples} counterexamples among {inside} safe samples"),
    )
}

fn value_of(cbf: &Cbf<f64>, s: &State<f64>, inertia: &InertiaTensor<f64>) -> f64 {
    cbf.constraint(s, inertia).big_h
}

/// Analytic `Ḣ = drift − aᵀu` against a central difference along the flow.
pub fn drift_oracle(samples: usize, seed: u64) -> CheckOutcome {
    let slit = slit_scenario();
    let landing = Scenario::from_config(&build_scenario_landing(1.0).expect("preset")).expect("preset");
    let both = Cbf::Directional(
        DirectionalEnergyCbf::new(
            "both",
            Some(Vec3::new(0.6, 0.0, 0.8)),
            Some(Vec3::new(0.0, 1.0, 0.0)),
            2.0,
            ClassK::linear(1.5).expect("positive"),
        )
        .expect("unit directions"),
    );
    let mut cbfs: Vec<Cbf<f64>> = slit.cbfs.clone();
    cbfs.extend(landing.cbfs.iter().cloned());
    cbfs.push(both);
    let inertia = slit.inertia;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let mut failures = 0usize;
    let dt = 1e-6;
    for _ in 0..samples {
        let s = random_state(&mut rng, Vec3::new(2.8, -0.5, 1.6), 3.0, 2.0);
        let u = Wrench::new(uniform(&mut rng, 5.0), uniform(&mut rng, 5.0));
        let xi_dot = acceleration(&s, &u, &inertia);
        let flow = |t: f64| {
            State::new(
                s.pose.compose(&exp_se3(&s.twist.scaled(t))),
                Twist::from_vector(&(s.twist.to_vector() + xi_dot * t)),
            )
        };
        let (ahead, behind) = (flow(dt), flow(-dt));
        for cbf in &cbfs {
            let analytic = cbf.constraint(&s, &inertia).barrier_rate(&u.to_vector());
            let fd = (value_of(cbf, &ahead, &inertia) - value_of(cbf, &behind, &inertia)) / (2.0 * dt);
            let tol = 1e-5f64.max(1e-3 * analytic.abs());
            let err = (fd - analytic).abs();
            worst = worst.max(err / tol);
            if err > tol {
                failures += 1;
            }
        }
    }

    let mut p_worst = 0.0f64;
    let dirs = [Vec3::new(0.0, 0.0, 1.0), Vec3::new(0.6, 0.0, 0.8)];
    let pcbf = DirectionalEnergyCbf::new("p", Some(dirs[0]), Some(dirs[1]), 1.0, ClassK::linear(1.0).expect("positive"))
        .expect("unit directions");
    for _ in 0..samples {
        let s = random_state(&mut rng, Vec3::zeros(), 1.0, 2.0);
        let p = projection_matrix(&pcbf, &s.pose);
        let analytic = projection_rate(&p, &s.twist.omega);
        let at = |t: f64| projection_matrix(&pcbf, &s.pose.compose(&exp_se3(&s.twist.scaled(t))));
        let fd = (at(dt) - at(-dt)) / (2.0 * dt);
        p_worst = p_worst.max((fd - analytic).amax());
    }
    let p_ok = p_worst <= 1e-6;
    CheckOutcome::new(
        "drift oracle",
        failures == 0 && p_ok,
        format!(
            "{failures} barrier-rate mismatches over {} comparisons (worst error/tol {worst:.3e}); max |Ṗ − (PΩ − ΩP)| {p_worst:.3e}",
            samples * cbfs.len()
        ),
    )
}

/// Active-set QP against sampled feasible points and its KKT residuals.
pub fn qp_optimality(instances: usize, seed: u64) -> CheckOutcome {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut beaten = 0usize;
    let mut worst_kkt = 0.0f64;
    let mut errors = 0usize;
    for _ in 0..instances {
        let u_des = Vec6::from_fn(|_, _| rng.gen_range(-5.0..5.0));
        let anchor = Vec6::from_fn(|_, _| rng.gen_range(-5.0..5.0));
        let m = rng.gen_range(1..=3);
        let constraints: Vec<HalfSpace<f64, 6>> = (0..m)
            .map(|_| {
                let a = Vec6::from_fn(|_, _| rng.gen_range(-2.0..2.0));
                HalfSpace::new(a, a.dot(&anchor) + rng.gen_range(0.0..1.0))
            })
            .collect();
        let sol = match solve(&u_des, &constraints) {
            Ok(s) => s,
            Err(_) => {
                errors += 1;
                continue;
            }
        };
        let k = sol.kkt;
        worst_kkt = worst_kkt.max(k.stationarity).max(k.primal).max(k.dual).max(k.complementarity);
        let best = (sol.u_star - u_des).norm();
        for j in 0..200 {
            let scale = 10f64.powi(-(j % 6));
            let candidate = sol.u_star + Vec6::from_fn(|_, _| rng.gen_range(-scale..scale));
            if constraints.iter().all(|c| c.a.dot(&candidate) <= c.b) && (candidate - u_des).norm() < best - 1e-9 {
                beaten += 1;
            }
        }
        if constraints.iter().all(|c| c.a.dot(&anchor) <= c.b) && (anchor - u_des).norm() < best - 1e-9 {
            beaten += 1;
        }
    }
    CheckOutcome::new(
        "QP optimality",
        beaten == 0 && errors == 0 && worst_kkt < 1e-10,
        format!("{beaten} better feasible samples, {errors} solver errors, worst KKT residual {worst_kkt:.3e}"),
    )
}

/// Free motion conserves energy and the coadjoint term does no work.
pub fn conservation(steps: usize, seed: u64) -> CheckOutcome {
    let inertia = InertiaTensor::disk(3.0, 3.0).expect("positive");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst_drift = 0.0f64;
    for _ in 0..3 {
        let mut s = random_state(&mut rng, Vec3::zeros(), 1.0, 1.0);
        let e0 = kinetic_energy(&s.twist, &inertia);
        for _ in 0..steps {
            s = step(&s, &Wrench::zero(), &inertia, 1e-3).expect("finite");
        }
        worst_drift = worst_drift.max(((kinetic_energy(&s.twist, &inertia) - e0) / e0).abs());
    }
    let mut worst_power = 0.0f64;
    for _ in 0..1000 {
        let xi = Twist::new(uniform(&mut rng, 3.0), uniform(&mut rng, 3.0));
        let power = xi.to_vector().dot(&(coadjoint(&xi) * inertia.apply(&xi.to_vector())));
        worst_power = worst_power.max(power.abs());
    }
    CheckOutcome::new(
        "conservation",
        worst_drift <= 1e-9 && worst_power <= 1e-12,
        format!("relative energy drift {worst_drift:.3e} over {steps} steps; max |ξᵀad*𝕀ξ| {worst_power:.3e}"),
    )
}

fn forced(t: f64) -> Wrench<f64> {
    Wrench::new(
        Vec3::new(t.sin(), 0.5 * (2.0 * t).cos(), 0.3 * t),
        Vec3::new((0.7 * t).cos(), -0.4, 0.2 * t * t),
    )
}

fn integrate_forced(x0: &State<f64>, inertia: &InertiaTensor<f64>, horizon: f64, n: usize) -> State<f64> {
    let dt = horizon / n as f64;
    let mut x = *x0;
    for k in 0..n {
        let t0 = k as f64 * dt;
        x = step_with(&x, inertia, dt, |tau, _| Ok(forced(t0 + tau))).expect("finite");
    }
    x
}

fn state_distance(a: &State<f64>, b: &State<f64>) -> f64 {
    let dr = (a.pose.rotation.matrix() - b.pose.rotation.matrix()).amax();
    let dp = (a.pose.position - b.pose.position).amax();
    let dxi = (a.twist.to_vector() - b.twist.to_vector()).amax();
    dr.max(dp).max(dxi)
}

/// Observed order of [`step`] from three step sizes.
pub fn observed_order() -> f64 {
    let inertia = InertiaTensor::disk(3.0, 3.0).expect("positive");
    let x0 = State::new(
        Pose::new(exp_so3(&Vec3::new(0.3, -0.2, 0.5)), Vec3::new(1.0, 0.0, -1.0)),
        Twist::new(Vec3::new(0.8, -0.5, 1.1), Vec3::new(0.5, 1.0, -0.3)),
    );
    let coarse = integrate_forced(&x0, &inertia, 2.0, 20);
    let mid = integrate_forced(&x0, &inertia, 2.0, 40);
    let fine = integrate_forced(&x0, &inertia, 2.0, 80);
    (state_distance(&coarse, &mid) / state_distance(&mid, &fine)).log2()
}

pub fn integrator_order() -> CheckOutcome {
    let order = observed_order();
    CheckOutcome::new("integrator order", order >= 3.5, format!("observed order {order:.3}"))
}

fn run_records(scenario: &Scenario) -> (crate::Result<()>, Vec<LogRecord>, f64) {
    let started = Instant::now();
    let mut records = Vec::new();
    let result = run(scenario, &mut records).map(|_| ());
    (result, records, started.elapsed().as_secs_f64())
}

/// Both slit barriers stay nonnegative in the shipped slit scenario.
pub fn slit_safety() -> CheckOutcome {
    let mut passed = true;
    let mut notes = Vec::new();
    for alpha_e in SLIT_ALPHA_ES {
        let scenario = Scenario::from_config(&build_scenario_slit(alpha_e).expect("preset")).expect("preset");
        let (result, records, seconds) = run_records(&scenario);
        let min_h = records.iter().flat_map(|r| r.cbfs.iter().filter_map(|c| c.h)).fold(f64::INFINITY, f64::min);
        let min_big_h = records.iter().flat_map(|r| r.cbfs.iter().map(|c| c.big_h)).fold(f64::INFINITY, f64::min);
        let ok = result.is_ok() && min_h >= -1e-6 && min_big_h >= -1e-6 && seconds < RUN_BUDGET_SECONDS;
        passed &= ok;
        notes.push(format!("alpha_e={alpha_e}: min h {min_h:.3e}, min H {min_big_h:.3e}, {seconds:.2} s"));
    }
    CheckOutcome::new("slit safety", passed, notes.join("; "))
}

/// Directional energy stays under its bound when filtered and exceeds it otherwise.
pub fn landing_energy() -> CheckOutcome {
    let mut passed = true;
    let mut notes = Vec::new();
    let max_edir = |records: &[LogRecord]| {
        records.iter().flat_map(|r| r.cbfs.iter().filter_map(|c| c.e_dir)).fold(f64::NEG_INFINITY, f64::max)
    };
    for alpha in LANDING_ALPHAS {
        let config = build_scenario_landing(alpha).expect("preset");
        let bound = config.directional.as_ref().map(|d| d.e_max).unwrap_or(f64::NAN);
        let scenario = Scenario::from_config(&config).expect("preset");
        let (result, records, seconds) = run_records(&scenario);
        let peak = max_edir(&records);
        let ok = result.is_ok() && peak <= bound + 1e-3 && seconds < RUN_BUDGET_SECONDS;
        passed &= ok;
        notes.push(format!("alpha={alpha}: max E_n {peak:.5}, {seconds:.2} s"));
    }
    let mut config = build_scenario_landing(1.0).expect("preset");
    config.filter_enabled = false;
    let bound = config.directional.as_ref().map(|d| d.e_max).unwrap_or(f64::NAN);
    let (result, records, seconds) = run_records(&Scenario::from_config(&config).expect("preset"));
    let peak = max_edir(&records);
    passed &= result.is_ok() && peak > bound && seconds < RUN_BUDGET_SECONDS;
    notes.push(format!("unfiltered: max E_n {peak:.5}, {seconds:.2} s"));
    CheckOutcome::new("landing energy bound", passed, notes.join("; "))
}

fn csv_bytes(scenario: &Scenario) -> crate::Result<Vec<u8>> {
    let mut sink = CsvSink::new(Vec::new(), "memory", &scenario.cbfs)?;
    run(scenario, &mut sink)?;
    sink.finish()
}

/// Two runs of the same configuration give identical CSV bytes.
pub fn determinism() -> CheckOutcome {
    let config = build_scenario_slit(150.0).expect("preset");
    let scenario = Scenario::from_config(&config).expect("preset");
    match (csv_bytes(&scenario), csv_bytes(&scenario)) {
        (Ok(a), Ok(b)) => CheckOutcome::new(
            "determinism",
            a == b,
            format!("{} and {} bytes, {}", a.len(), b.len(), if a == b { "identical" } else { "different" }),
        ),
        (Err(e), _) | (_, Err(e)) => CheckOutcome::new("determinism", false, format!("run failed: {e}")),
    }
}

/// Every check with its default sample count.
pub fn run_all() -> Vec<CheckOutcome> {
    vec![
        slit_safety(),
        landing_energy(),
        set_inclusion(10_000, 1),
        drift_oracle(1_000, 2),
        qp_optimality(1_000, 3),
        conservation(10_000, 4),
        integrator_order(),
        determinism(),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quick_checks_pass() {
        for outcome in [
            set_inclusion(500, 7),
            drift_oracle(50, 8),
            qp_optimality(50, 9),
            conservation(1_000, 10),
            integrator_order(),
        ] {
            assert!(outcome.passed, "{outcome}");
        }
    }

    #[test]
    fn outcome_formats_with_tag() {
        let ok = CheckOutcome::new("a", true, "fine".into());
        let bad = CheckOutcome::new("b", false, "broken".into());
        assert_eq!(ok.to_string(), "PASS a: fine");
        assert_eq!(bad.to_string(), "FAIL b: broken");
    }
}
