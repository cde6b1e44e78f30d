//! Trap and condensate trajectories for the direct, inverse-engineered and
//! compensating-force protocols, and the classical centre-of-mass response
//! `q_c'' + omega0^2 (q_c - q0) = f` of a condensate in a moving trap.
//!
//! Everything here is unit-agnostic: pass distances, times and frequencies
//! in any consistent set of units.

use crate::trajectory::{Piece, Sample, Trajectory, DEFAULT_SAMPLES};
use crate::{Error, Result};

/// Default number of integration steps over `[0, t_f]`.
pub const DEFAULT_STEPS: usize = 4096;

fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("{name} must be > 0, got {v}")))
    }
}

/// Trapezoidal-velocity trap motion: the velocity ramps linearly over the
/// first quarter of the distance, stays at `v_m` over the middle half and
/// ramps back down over the last quarter.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DirectProtocol {
    d: f64,
    t_f: f64,
}

impl DirectProtocol {
    pub fn new(d: f64, t_f: f64) -> Result<Self> {
        check_positive("d", d)?;
        check_positive("t_f", t_f)?;
        Ok(Self { d, t_f })
    }

    pub fn distance(&self) -> f64 {
        self.d
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    /// Peak trap velocity, `3 d / (2 t_f)`.
    pub fn v_m(&self) -> f64 {
        1.5 * self.d / self.t_f
    }

    pub fn trap_trajectory(&self) -> Trajectory {
        direct_trap_trajectory(self)
    }
}

pub fn direct_trap_trajectory(p: &DirectProtocol) -> Trajectory {
    let (d, t_f, v) = (p.d, p.t_f, p.v_m());
    let t1 = d / (2.0 * v);
    let t2 = d / v;
    let pieces = vec![
        Piece::new(0.0, t1, vec![0.0, 0.0, v * v / d]),
        Piece::about(t1, t2, 0.0, &[-d / 4.0, v]),
        Piece::about(t2, t_f, t_f, &[d, 0.0, v / (2.0 * (t2 - t_f))]),
    ];
    Trajectory::piecewise(pieces, DEFAULT_SAMPLES).expect("direct protocol pieces are contiguous")
}

/// `q_c(t_f) - q0(t_f)` and `q_c'(t_f) - q0'(t_f)` after a protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Excursion {
    pub delta_q: f64,
    pub delta_v: f64,
}

/// Closed-form final displacement and velocity of the condensate relative to
/// the trap after the direct protocol.
pub fn direct_final_excursion(d: f64, t_f: f64, omega0: f64) -> Excursion {
    let phi = omega0 * t_f / 3.0;
    let wt2 = omega0 * omega0 * t_f * t_f;
    Excursion {
        delta_q: 9.0 * d * (1.0 - 2.0 * phi.cos()) * phi.sin().powi(2) / wt2,
        delta_v: 9.0 * d / (2.0 * omega0 * t_f * t_f)
            * (phi.sin() + (2.0 * phi).sin() - (3.0 * phi).sin()),
    }
}

/// Final times `3 (2N + 1) pi / omega0` at which the direct protocol leaves
/// no excitation.
pub fn direct_resonant_time(n: u32, omega0: f64) -> f64 {
    3.0 * (2 * n + 1) as f64 * std::f64::consts::PI / omega0
}

/// Drive of the classical response: trap path plus an optional external
/// acceleration (`F / m`).
#[derive(Debug, Clone, Copy)]
pub struct Drive<'a> {
    pub trap: &'a Trajectory,
    pub acceleration: Option<&'a Trajectory>,
}

impl<'a> Drive<'a> {
    pub fn trap(trap: &'a Trajectory) -> Self {
        Self { trap, acceleration: None }
    }

    pub fn with_acceleration(trap: &'a Trajectory, acceleration: &'a Trajectory) -> Self {
        Self { trap, acceleration: Some(acceleration) }
    }

    fn t_f(&self) -> f64 {
        self.trap.t_f()
    }

    /// Integration intervals: union of the segment boundaries of both paths.
    fn intervals(&self) -> Result<Vec<Interval>> {
        let mut cuts = self.trap.breakpoints();
        if let Some(a) = self.acceleration {
            if a.t_f() != self.trap.t_f() {
                return Err(Error::InvalidParameter(
                    "forcing and trap trajectories have different durations".into(),
                ));
            }
            cuts.extend(a.breakpoints());
        }
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        Ok(cuts
            .windows(2)
            .map(|w| {
                let mid = 0.5 * (w[0] + w[1]);
                Interval {
                    start: w[0],
                    end: w[1],
                    trap_segment: segment_at(self.trap, mid),
                    accel_segment: self.acceleration.map(|a| segment_at(a, mid)),
                }
            })
            .collect())
    }
}

#[derive(Debug, Clone, Copy)]
struct Interval {
    start: f64,
    end: f64,
    trap_segment: usize,
    accel_segment: Option<usize>,
}

fn segment_at(t: &Trajectory, time: f64) -> usize {
    (0..t.segment_count())
        .find(|&i| {
            let (s, e) = t.segment_bounds(i);
            s <= time && time <= e
        })
        .unwrap_or(0)
}

impl Interval {
    /// Effective drive `q0 + f / omega0^2` and its derivative inside the
    /// interval (one-sided at the ends).
    fn drive(&self, drive: &Drive<'_>, t: f64, w2: f64) -> (f64, f64) {
        let s = drive.trap.eval_segment(self.trap_segment, t);
        let (mut q, mut qd) = (s.q, s.q_dot);
        if let (Some(a), Some(i)) = (drive.acceleration, self.accel_segment) {
            let f = a.eval_segment(i, t);
            q += f.q / w2;
            qd += f.q_dot / w2;
        }
        (q, qd)
    }
}

/// Classical response to a trap path, starting from rest at the origin.
pub fn classical_response(q0: &Trajectory, omega0: f64) -> Result<Trajectory> {
    classical_response_rk4(Drive::trap(q0), omega0, DEFAULT_STEPS)
}

/// Fixed-step RK4 integration of `q'' = -omega0^2 (q - q0) + f` from rest.
/// Steps are aligned with the segment boundaries of the drive so that
/// discontinuities never fall inside a step.
pub fn classical_response_rk4(drive: Drive<'_>, omega0: f64, steps: usize) -> Result<Trajectory> {
    check_positive("omega0", omega0)?;
    let t_f = drive.t_f();
    check_positive("t_f", t_f)?;
    let w2 = omega0 * omega0;
    let h_target = t_f / steps.max(1) as f64;
    let mut samples = Vec::with_capacity(steps + 8);
    let (mut x, mut v) = (0.0f64, 0.0f64);
    for (idx, iv) in drive.intervals()?.iter().enumerate() {
        let n = ((iv.end - iv.start) / h_target).ceil().max(1.0) as usize;
        let h = (iv.end - iv.start) / n as f64;
        let accel = |t: f64, x: f64| {
            let (d, _) = iv.drive(&drive, t, w2);
            -w2 * (x - d)
        };
        if idx == 0 {
            samples.push(Sample { t: 0.0, q: x, q_dot: v, q_ddot: accel(0.0, x) });
        }
        for j in 0..n {
            let t = iv.start + j as f64 * h;
            let k1x = v;
            let k1v = accel(t, x);
            let k2x = v + 0.5 * h * k1v;
            let k2v = accel(t + 0.5 * h, x + 0.5 * h * k1x);
            let k3x = v + 0.5 * h * k2v;
            let k3v = accel(t + 0.5 * h, x + 0.5 * h * k2x);
            let k4x = v + h * k3v;
            let k4v = accel(t + h, x + h * k3x);
            x += h / 6.0 * (k1x + 2.0 * k2x + 2.0 * k3x + k4x);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            let t_next = if j + 1 == n { iv.end } else { iv.start + (j + 1) as f64 * h };
            samples.push(Sample { t: t_next, q: x, q_dot: v, q_ddot: accel(t_next, x) });
        }
    }
    Trajectory::from_samples(samples)
}

/// Convolution form of the response,
/// `q_c(t) = omega0 int_0^t D(s) sin(omega0 (t - s)) ds` with
/// `D = q0 + f / omega0^2`, on the same step grid as the RK4 integrator.
/// Each panel uses the trapezoid rule with the Euler–Maclaurin end
/// correction.
pub fn classical_response_duhamel(drive: Drive<'_>, omega0: f64, steps: usize) -> Result<Trajectory> {
    check_positive("omega0", omega0)?;
    let t_f = drive.t_f();
    check_positive("t_f", t_f)?;
    let w = omega0;
    let w2 = w * w;
    let h_target = t_f / steps.max(1) as f64;
    // C = int D cos(w s), S = int D sin(w s)
    let (mut c_int, mut s_int) = (0.0f64, 0.0f64);
    let mut samples = Vec::with_capacity(steps + 8);
    let integrands = |d: f64, dd: f64, t: f64| {
        let (sn, cs) = (w * t).sin_cos();
        // (f_c, f_c', f_s, f_s')
        (d * cs, dd * cs - w * d * sn, d * sn, dd * sn + w * d * cs)
    };
    let state = |t: f64, c: f64, s: f64, d: f64| {
        let (sn, cs) = (w * t).sin_cos();
        let q = w * (sn * c - cs * s);
        Sample { t, q, q_dot: w2 * (cs * c + sn * s), q_ddot: w2 * (d - q) }
    };
    for (idx, iv) in drive.intervals()?.iter().enumerate() {
        let n = ((iv.end - iv.start) / h_target).ceil().max(1.0) as usize;
        let h = (iv.end - iv.start) / n as f64;
        if idx == 0 {
            let (d0, _) = iv.drive(&drive, 0.0, w2);
            samples.push(state(0.0, 0.0, 0.0, d0));
        }
        let mut t_a = iv.start;
        let (da, dda) = iv.drive(&drive, t_a, w2);
        let mut fa = integrands(da, dda, t_a);
        for j in 0..n {
            let t_b = if j + 1 == n { iv.end } else { iv.start + (j + 1) as f64 * h };
            let hb = t_b - t_a;
            let (db, ddb) = iv.drive(&drive, t_b, w2);
            let fb = integrands(db, ddb, t_b);
            c_int += 0.5 * hb * (fa.0 + fb.0) - hb * hb / 12.0 * (fb.1 - fa.1);
            s_int += 0.5 * hb * (fa.2 + fb.2) - hb * hb / 12.0 * (fb.3 - fa.3);
            samples.push(state(t_b, c_int, s_int, db));
            t_a = t_b;
            fa = fb;
        }
    }
    Trajectory::from_samples(samples)
}

/// Inverse-engineered protocol: the condensate follows the minimal-degree
/// polynomial with `q_c, q_c', q_c''` equal to `(0, 0, 0)` at `t = 0` and
/// `(d, 0, 0)` at `t_f`, and the trap follows `q0 = q_c + q_c'' / omega0^2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolynomialProtocol {
    d: f64,
    t_f: f64,
    omega0: f64,
}

/// `q_c(s) / d` on `s = t / t_f`: `10 s^3 - 15 s^4 + 6 s^5`.
pub const QUINTIC: [f64; 6] = [0.0, 0.0, 0.0, 10.0, -15.0, 6.0];

impl PolynomialProtocol {
    pub fn new(d: f64, t_f: f64, omega0: f64) -> Result<Self> {
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::InvalidParameter(format!("d must be >= 0, got {d}")));
        }
        check_positive("t_f", t_f)?;
        check_positive("omega0", omega0)?;
        Ok(Self { d, t_f, omega0 })
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn distance(&self) -> f64 {
        self.d
    }

    /// Coefficients of `q_c` in powers of `t`.
    fn condensate_coeffs(&self) -> [f64; 6] {
        let mut c = [0.0; 6];
        for (k, q) in QUINTIC.iter().enumerate() {
            c[k] = self.d * q / self.t_f.powi(k as i32);
        }
        c
    }

    pub fn condensate(&self) -> Trajectory {
        let c = self.condensate_coeffs();
        Trajectory::piecewise(vec![Piece::new(0.0, self.t_f, c.to_vec())], DEFAULT_SAMPLES)
            .expect("single piece")
    }

    pub fn trap(&self) -> Trajectory {
        let c = self.condensate_coeffs();
        let w2 = self.omega0 * self.omega0;
        let mut q0 = c;
        for k in 2..6 {
            q0[k - 2] += (k * (k - 1)) as f64 * c[k] / w2;
        }
        Trajectory::piecewise(vec![Piece::new(0.0, self.t_f, q0.to_vec())], DEFAULT_SAMPLES)
            .expect("single piece")
    }
}

/// Returns `(q_c, q0)` for the inverse-engineered polynomial protocol.
pub fn polynomial_inverse(d: f64, t_f: f64, omega0: f64) -> Result<(Trajectory, Trajectory)> {
    let p = PolynomialProtocol::new(d, t_f, omega0)?;
    Ok((p.condensate(), p.trap()))
}

/// Extremes of the trap path of the polynomial protocol.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalCheck {
    pub min_q0: f64,
    pub max_q0: f64,
    pub stays_inside: bool,
}

fn poly(c: &[f64], s: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, &v| acc * s + v)
}

pub fn polynomial_interval_check(d: f64, t_f: f64, omega0: f64) -> Result<IntervalCheck> {
    PolynomialProtocol::new(d, t_f, omega0)?;
    let tau2 = (omega0 * t_f).powi(2);
    // q0 / d = p(s) + p''(s) / tau^2 and its s-derivative.
    let shape = [0.0, 60.0 / tau2, -180.0 / tau2, 10.0 + 120.0 / tau2, -15.0, 6.0];
    let slope = [60.0 / tau2, -360.0 / tau2, 30.0 + 360.0 / tau2, -60.0, 30.0];
    let mut candidates = vec![0.0, 1.0];
    const CELLS: usize = 2048;
    for i in 0..CELLS {
        let (mut a, mut b) = (i as f64 / CELLS as f64, (i + 1) as f64 / CELLS as f64);
        let (mut fa, fb) = (poly(&slope, a), poly(&slope, b));
        if fa == 0.0 {
            candidates.push(a);
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        for _ in 0..80 {
            let m = 0.5 * (a + b);
            let fm = poly(&slope, m);
            if fm.signum() == fa.signum() {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        candidates.push(0.5 * (a + b));
    }
    let values: Vec<f64> = candidates.iter().map(|&s| d * poly(&shape, s)).collect();
    let min_q0 = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max_q0 = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let slack = 1e-12 * d;
    Ok(IntervalCheck {
        min_q0,
        max_q0,
        stays_inside: min_q0 >= -slack && max_q0 <= d + slack,
    })
}

/// Shortest `t_f` for which the polynomial protocol keeps the trap inside
/// `[0, d]`, found by bisection on [`polynomial_interval_check`].
pub fn polynomial_time_bound(omega0: f64) -> Result<f64> {
    check_positive("omega0", omega0)?;
    let inside = |tau: f64| {
        polynomial_interval_check(1.0, tau / omega0, omega0)
            .map(|c| c.stays_inside)
            .unwrap_or(false)
    };
    let (mut lo, mut hi) = (0.5f64, 20.0f64);
    debug_assert!(!inside(lo) && inside(hi));
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        if inside(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi / omega0)
}

/// End conditions imposed on the compensating-force trap path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CompensationOrder {
    /// Position, velocity and acceleration fixed at both ends.
    #[default]
    Quintic,
    /// Position and velocity only.
    Cubic,
}

/// Trap path for transport in an arbitrary trap shape, with the external
/// force `F = m q0''` cancelling the inertial force in the trap frame.
#[derive(Debug, Clone, PartialEq)]
pub struct CompensatingProtocol {
    d: f64,
    t_f: f64,
    mass: f64,
    order: CompensationOrder,
    trap: Trajectory,
}

impl CompensatingProtocol {
    pub fn new(d: f64, t_f: f64, mass: f64, order: CompensationOrder) -> Result<Self> {
        check_positive("t_f", t_f)?;
        check_positive("mass", mass)?;
        if !(d.is_finite() && d >= 0.0) {
            return Err(Error::InvalidParameter(format!("d must be >= 0, got {d}")));
        }
        let shape: &[f64] = match order {
            CompensationOrder::Quintic => &QUINTIC,
            CompensationOrder::Cubic => &[0.0, 0.0, 3.0, -2.0],
        };
        let coeffs = shape
            .iter()
            .enumerate()
            .map(|(k, c)| d * c / t_f.powi(k as i32))
            .collect();
        let trap = Trajectory::piecewise(vec![Piece::new(0.0, t_f, coeffs)], DEFAULT_SAMPLES)?;
        Ok(Self { d, t_f, mass, order, trap })
    }

    pub fn trap(&self) -> &Trajectory {
        &self.trap
    }

    pub fn order(&self) -> CompensationOrder {
        self.order
    }

    /// `F(t) = m q0''(t)`.
    pub fn force(&self, t: f64) -> f64 {
        self.mass * self.trap.at(t).q_ddot
    }

    /// External acceleration `F / m` as a trajectory (its `q` is `q0''`).
    pub fn acceleration(&self) -> Trajectory {
        let pieces = self
            .trap
            .pieces()
            .expect("polynomial trap")
            .iter()
            .map(|p| {
                let c = p.coeffs();
                let coeffs = (2..c.len()).map(|k| (k * (k - 1)) as f64 * c[k]).collect::<Vec<_>>();
                Piece::new(p.start(), p.end(), if coeffs.is_empty() { vec![0.0] } else { coeffs })
            })
            .collect();
        Trajectory::piecewise(pieces, DEFAULT_SAMPLES).expect("same pieces as the trap")
    }

    /// `max_t |q0''(t)|` in closed form.
    pub fn max_acceleration(&self) -> f64 {
        let scale = self.d / (self.t_f * self.t_f);
        match self.order {
            CompensationOrder::Quintic => 10.0 / 3f64.sqrt() * scale,
            CompensationOrder::Cubic => 6.0 * scale,
        }
    }
}

/// Default (quintic) compensating-force protocol.
pub fn compensating_force(d: f64, t_f: f64, mass: f64) -> Result<CompensatingProtocol> {
    CompensatingProtocol::new(d, t_f, mass, CompensationOrder::Quintic)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    const W: f64 = 2.0 * PI * 50.0;
    const D: f64 = 1.6e-3;

    #[test]
    fn direct_trajectory_landmarks() {
        let p = DirectProtocol::new(D, 0.02).unwrap();
        let q = p.trap_trajectory();
        assert_eq!(q.at(0.0).q, 0.0);
        assert!((q.at(0.02 / 3.0).q - D / 4.0).abs() < 1e-15);
        assert!((q.at(2.0 * 0.02 / 3.0).q - 0.75 * D).abs() < 1e-15);
        assert!((q.at(0.02).q - D).abs() < 1e-15);
        assert!((q.at(0.01).q_dot - p.v_m()).abs() < 1e-12);
        assert!((p.v_m() * 0.02 - 1.5 * D).abs() < 1e-15);
        // velocity is continuous at the ramp corners
        for b in &q.breakpoints()[1..3] {
            let i = segment_at(&q, b - 1e-9);
            let l = q.eval_segment(i, *b);
            let r = q.eval_segment(i + 1, *b);
            assert!((l.q - r.q).abs() < 1e-15 && (l.q_dot - r.q_dot).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_and_constant_drive() {
        let zero = Trajectory::piecewise(vec![Piece::constant(0.0, 1.0, 0.0)], 16).unwrap();
        let r = classical_response(&zero, 3.0).unwrap();
        assert!(r.samples().iter().all(|s| s.q == 0.0 && s.q_dot == 0.0));

        let constant = Trajectory::piecewise(vec![Piece::constant(0.0, 2.0, 0.7)], 16).unwrap();
        for r in [
            classical_response(&constant, 3.0).unwrap(),
            classical_response_duhamel(Drive::trap(&constant), 3.0, DEFAULT_STEPS).unwrap(),
        ] {
            for s in r.samples() {
                assert!((s.q - 0.7 * (1.0 - (3.0 * s.t).cos())).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn excursion_vanishes_at_resonant_times() {
        for n in 0..3 {
            let e = direct_final_excursion(D, direct_resonant_time(n, W), W);
            assert!(e.delta_q.abs() < 1e-18 && e.delta_v.abs() < 1e-15, "{e:?}");
        }
        assert!((direct_resonant_time(0, W) - 0.03).abs() < 1e-15);
    }

    #[test]
    fn excursion_at_20ms() {
        // Independent adaptive integration (scipy solve_ivp, rtol 1e-12):
        // q_c(t_f) - d = 5.471343916686e-4 m.
        let e = direct_final_excursion(D, 0.02, W);
        assert!((e.delta_q - 5.471_343_916_686e-4).abs() < 1e-12);
        assert!(e.delta_v.abs() < 1e-15);
    }

    #[test]
    fn direct_resonant_response_stops_at_d() {
        let q0 = DirectProtocol::new(D, 0.03).unwrap().trap_trajectory();
        let r = classical_response(&q0, W).unwrap();
        let end = r.at(0.03);
        assert!((end.q - D).abs() < 1e-8 * D);
        assert!(end.q_dot.abs() < 1e-8 * D * W);
    }

    #[test]
    fn polynomial_boundary_conditions() {
        let (qc, q0) = polynomial_inverse(D, 0.02, W).unwrap();
        let (s0, s1) = (qc.at(0.0), qc.at(0.02));
        assert!(s0.q.abs() < 1e-10 * D && s0.q_dot.abs() < 1e-10 * D / 0.02);
        assert!(s0.q_ddot.abs() < 1e-10 * D / 4e-4);
        assert!((s1.q - D).abs() < 1e-10 * D && s1.q_dot.abs() < 1e-10 * D / 0.02);
        assert!(s1.q_ddot.abs() < 1e-10 * D / 4e-4);
        assert!((qc.at(0.01).q - D / 2.0).abs() < 1e-15);
        assert!(q0.at(0.0).q.abs() < 1e-15 && (q0.at(0.02).q - D).abs() < 1e-15);
        // q0 - q_c is antisymmetric about t_f / 2
        for t in [0.001, 0.004, 0.0077] {
            let a = q0.at(t).q - qc.at(t).q;
            let b = q0.at(0.02 - t).q - qc.at(0.02 - t).q;
            assert!((a + b).abs() < 1e-15);
        }
    }

    #[test]
    fn polynomial_trap_range() {
        assert!(polynomial_interval_check(D, 0.02, W).unwrap().stays_inside);
        let short = polynomial_interval_check(D, 2.4 / W, W).unwrap();
        assert!(!short.stays_inside);
        assert!(short.min_q0 < 0.0 && short.max_q0 > D);
    }

    #[test]
    fn compensating_acceleration() {
        let p = compensating_force(D, 0.02, 1.0).unwrap();
        assert!((p.max_acceleration() - 23.094).abs() < 1e-3);
        let sampled = p.trap().samples().iter().map(|s| s.q_ddot.abs()).fold(0.0, f64::max);
        assert!((sampled - p.max_acceleration()).abs() < 1e-4 * p.max_acceleration());
        let longer = compensating_force(D, 0.04, 1.0).unwrap();
        assert!((longer.max_acceleration() * 4.0 - p.max_acceleration()).abs() < 1e-12);
        let cubic = CompensatingProtocol::new(D, 0.02, 1.0, CompensationOrder::Cubic).unwrap();
        assert!((cubic.max_acceleration() - 24.0).abs() < 1e-12);
        let end = cubic.trap().at(0.02);
        assert!((end.q - D).abs() < 1e-15 && end.q_dot.abs() < 1e-12);
        assert!((p.force(0.0)).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(DirectProtocol::new(D, 0.0).is_err());
        assert!(DirectProtocol::new(0.0, 1.0).is_err());
        assert!(polynomial_inverse(D, -1.0, W).is_err());
        let q0 = Trajectory::stationary(0.0);
        assert!(classical_response(&q0, W).is_err());
    }
}
