//! Reference trajectories built from timed waypoints.
//!
//! Position uses piecewise cubic Hermite interpolation with monotone
//! (Fritsch–Carlson) tangents, which reproduces straight constant-speed
//! paths exactly and does not overshoot at hold waypoints. Attitude moves
//! along the geodesic between consecutive waypoints with a quintic
//! smoothstep time law, so the angular velocity and its derivative vanish
//! at every knot.

use crate::control::ReferencePoint;
use crate::error::{Error, Result};
use crate::lie::{exp_so3, log_so3, stack, Pose, Rotation, Twist, Vec3};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Waypoint<T: Real> {
    pub time: T,
    pub position: Vec3<T>,
    pub rotation: Rotation<T>,
}

impl<T: Real> Waypoint<T> {
    pub fn new(time: T, position: Vec3<T>, rotation: Rotation<T>) -> Self {
        Self {
            time,
            position,
            rotation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceTrajectory<T: Real> {
    waypoints: Vec<Waypoint<T>>,
    tangents: Vec<Vec3<T>>,
    rot_steps: Vec<Vec3<T>>,
}

fn pchip_tangent<T: Real>(h0: T, h1: T, s0: T, s1: T) -> T {
    if s0 * s1 <= T::zero() {
        return T::zero();
    }
    let w1 = T::lit(2.0) * h1 + h0;
    let w2 = h1 + T::lit(2.0) * h0;
    (w1 + w2) / (w1 / s0 + w2 / s1)
}

impl<T: Real> ReferenceTrajectory<T> {
    pub fn new(waypoints: Vec<Waypoint<T>>) -> Result<Self> {
        if waypoints.is_empty() {
            return Err(Error::Trajectory("at least one waypoint is required".into()));
        }
        for pair in waypoints.windows(2) {
            if !(pair[1].time > pair[0].time) {
                return Err(Error::Trajectory("waypoint times must be strictly increasing".into()));
            }
        }
        let n = waypoints.len();
        let secants: Vec<Vec3<T>> = waypoints
            .windows(2)
            .map(|w| (w[1].position - w[0].position) / (w[1].time - w[0].time))
            .collect();
        let mut tangents = vec![Vec3::zeros(); n];
        if n > 1 {
            tangents[0] = secants[0];
            tangents[n - 1] = secants[n - 2];
            for i in 1..n - 1 {
                let h0 = waypoints[i].time - waypoints[i - 1].time;
                let h1 = waypoints[i + 1].time - waypoints[i].time;
                for k in 0..3 {
                    tangents[i][k] = pchip_tangent(h0, h1, secants[i - 1][k], secants[i][k]);
                }
            }
        }
        let rot_steps = waypoints
            .windows(2)
            .map(|w| log_so3(&w[0].rotation.transpose().compose(&w[1].rotation)))
            .collect();
        let traj = Self {
            waypoints,
            tangents,
            rot_steps,
        };
        traj.self_check()?;
        Ok(traj)
    }

    /// A reference that holds one pose forever.
    pub fn constant(pose: Pose<T>) -> Self {
        Self {
            waypoints: vec![Waypoint::new(T::zero(), pose.position, pose.rotation)],
            tangents: vec![Vec3::zeros()],
            rot_steps: Vec::new(),
        }
    }

    pub fn waypoints(&self) -> &[Waypoint<T>] {
        &self.waypoints
    }

    pub fn start_time(&self) -> T {
        self.waypoints[0].time
    }

    pub fn end_time(&self) -> T {
        self.waypoints[self.waypoints.len() - 1].time
    }

    /// Reference at time `t`, clamped to the waypoint horizon.
    ///
    /// Outside the horizon the end pose is held with the twist of the
    /// clamped endpoint set to zero.
    pub fn sample(&self, t: T) -> ReferencePoint<T> {
        let n = self.waypoints.len();
        if n == 1 || t < self.start_time() {
            let w = &self.waypoints[0];
            return ReferencePoint::stationary(Pose::new(w.rotation, w.position));
        }
        if t >= self.end_time() {
            let w = &self.waypoints[n - 1];
            return ReferencePoint::stationary(Pose::new(w.rotation, w.position));
        }
        let seg = match self.waypoints.iter().rposition(|w| w.time <= t) {
            Some(i) => i.min(n - 2),
            None => 0,
        };
        self.eval_segment(seg, t - self.waypoints[seg].time)
    }

    fn eval_segment(&self, seg: usize, tau: T) -> ReferencePoint<T> {
        let a = &self.waypoints[seg];
        let b = &self.waypoints[seg + 1];
        let h = b.time - a.time;
        let s = tau / h;
        let (s2, s3) = (s * s, s * s * s);
        let c = |x: f64| T::lit(x);

        // Hermite basis and its first two derivatives in s.
        let basis = [
            c(2.0) * s3 - c(3.0) * s2 + T::one(),
            s3 - c(2.0) * s2 + s,
            c(-2.0) * s3 + c(3.0) * s2,
            s3 - s2,
        ];
        let d1 = [
            c(6.0) * s2 - c(6.0) * s,
            c(3.0) * s2 - c(4.0) * s + T::one(),
            c(-6.0) * s2 + c(6.0) * s,
            c(3.0) * s2 - c(2.0) * s,
        ];
        let d2 = [
            c(12.0) * s - c(6.0),
            c(6.0) * s - c(4.0),
            c(-12.0) * s + c(6.0),
            c(6.0) * s - c(2.0),
        ];
        let (ma, mb) = (self.tangents[seg] * h, self.tangents[seg + 1] * h);
        let combine = |w: &[T; 4]| a.position * w[0] + ma * w[1] + b.position * w[2] + mb * w[3];
        let p = combine(&basis);
        let p_dot = combine(&d1) / h;
        let p_ddot = combine(&d2) / (h * h);

        // Quintic smoothstep σ(s) = 10s³ − 15s⁴ + 6s⁵.
        let s4 = s2 * s2;
        let s5 = s4 * s;
        let sigma = c(10.0) * s3 - c(15.0) * s4 + c(6.0) * s5;
        let sigma_d = (c(30.0) * s2 - c(60.0) * s3 + c(30.0) * s4) / h;
        let sigma_dd = (c(60.0) * s - c(180.0) * s2 + c(120.0) * s3) / (h * h);
        let phi = self.rot_steps[seg];
        let rotation = a.rotation.compose(&exp_so3(&(phi * sigma)));

        let rt = rotation.transpose();
        let omega = phi * sigma_d;
        let omega_dot = phi * sigma_dd;
        let v = rt.apply(&p_dot);
        // d/dt (R_dᵀ ṗ_d) = −ω_d × v_d + R_dᵀ p̈_d
        let v_dot = -omega.cross(&v) + rt.apply(&p_ddot);

        ReferencePoint {
            pose_d: Pose::new(rotation, p),
            twist_d: Twist::new(omega, v),
            twist_d_dot: stack(&omega_dot, &v_dot),
        }
    }

    /// Compares the analytic twist against central differences of the pose
    /// at every segment midpoint.
    fn self_check(&self) -> Result<()> {
        let h = T::lit(1e-5);
        for (i, pair) in self.waypoints.windows(2).enumerate() {
            let t = (pair[0].time + pair[1].time) * T::lit(0.5);
            let mid = self.sample(t);
            let (lo, hi) = (self.sample(t - h), self.sample(t + h));
            let dr = (hi.pose_d.rotation.matrix() - lo.pose_d.rotation.matrix()) / (h + h);
            let omega_fd = crate::lie::vee3(&(mid.pose_d.rotation.matrix().transpose() * dr));
            let v_fd = mid.pose_d.rotation.transpose().apply(&((hi.pose_d.position - lo.pose_d.position) / (h + h)));
            let err = (omega_fd - mid.twist_d.omega).norm() + (v_fd - mid.twist_d.linear).norm();
            let scale = T::one() + mid.twist_d.to_vector().norm();
            if !(err <= T::lit(1e-4) * scale) {
                return Err(Error::Trajectory(format!(
                    "segment {i}: analytic twist disagrees with pose derivative"
                )));
            }
        }
        Ok(())
    }
}
