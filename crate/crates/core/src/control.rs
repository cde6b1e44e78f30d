//! Closed-form minimum-time (bang-bang) transport protocols.
//!
//! With state `x1 = q_c`, `x2 = q_c'` and control `u = q_c - q0` the
//! centre-of-mass equation becomes `x1' = x2`, `x2' = -omega0^2 u`. Two
//! constraint families are solved here: a bound `|u| <= delta` on the
//! condensate–trap separation, and a bound `q_lo <= q0 <= q_hi` on the trap
//! position. Both solutions switch once.

use crate::design::classical_response;
use crate::trajectory::{Piece, Trajectory, DEFAULT_SAMPLES};
use crate::{Error, Result};

/// Minimum-time protocol with `|q_c - q0| <= delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct DisplacementBounded {
    pub d: f64,
    pub delta: f64,
    pub omega0: f64,
    pub t_1: f64,
    pub t_f: f64,
    q0: Trajectory,
}

impl DisplacementBounded {
    pub fn trap(&self) -> &Trajectory {
        &self.q0
    }

    /// `u(t)`: `-delta` before the switch, `+delta` after, zero at the ends.
    pub fn control(&self, t: f64) -> f64 {
        if t <= 0.0 || t >= self.t_f {
            0.0
        } else if t < self.t_1 {
            -self.delta
        } else {
            self.delta
        }
    }

    pub fn verify(&self) -> Result<BoundaryResidual> {
        verify_boundary(&self.q0, self.d, self.omega0)
    }
}

pub fn solve_displacement_bounded(d: f64, delta: f64, omega0: f64) -> Result<DisplacementBounded> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter(format!("delta must be > 0, got {delta}")));
    }
    if !(d.is_finite() && d >= 0.0) {
        return Err(Error::InvalidParameter(format!("d must be >= 0, got {d}")));
    }
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(Error::InvalidParameter(format!("omega0 must be > 0, got {omega0}")));
    }
    if d == 0.0 {
        return Ok(DisplacementBounded {
            d,
            delta,
            omega0,
            t_1: 0.0,
            t_f: 0.0,
            q0: Trajectory::stationary(0.0),
        });
    }
    let t_f = 2.0 * (d / delta).sqrt() / omega0;
    let t_1 = 0.5 * t_f;
    let w2 = omega0 * omega0;
    let pieces = vec![
        // (1 + w² t² / 2) delta
        Piece::new(0.0, t_1, vec![delta, 0.0, 0.5 * w2 * delta]),
        // d - (w² (t - t_f)² / 2 + 1) delta
        Piece::about(t_1, t_f, t_f, &[d - delta, 0.0, -0.5 * w2 * delta]),
    ];
    let q0 = Trajectory::piecewise(pieces, DEFAULT_SAMPLES)?.with_endpoint_values(0.0, d);
    Ok(DisplacementBounded { d, delta, omega0, t_1, t_f, q0 })
}

/// Minimum-time protocol with `q_lo <= q0 <= q_hi`: the trap sits at `q_hi`
/// until `t_1`, then at `q_lo` until `t_f`, jumping to `d` at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct RangeBounded {
    pub d: f64,
    pub q_lo: f64,
    pub q_hi: f64,
    pub omega0: f64,
    pub t_1: f64,
    pub t_f: f64,
    q0: Trajectory,
}

impl RangeBounded {
    pub fn trap(&self) -> &Trajectory {
        &self.q0
    }

    pub fn verify(&self) -> Result<BoundaryResidual> {
        verify_boundary(&self.q0, self.d, self.omega0)
    }
}

fn arccos_checked(arg: f64, what: &str) -> Result<f64> {
    if !arg.is_finite() || !(-1.0..=1.0).contains(&arg) {
        return Err(Error::Infeasible(format!(
            "{what}: arccos argument {arg} outside [-1, 1]"
        )));
    }
    Ok(arg.acos())
}

pub fn solve_range_bounded(d: f64, q_lo: f64, q_hi: f64, omega0: f64) -> Result<RangeBounded> {
    if !(omega0.is_finite() && omega0 > 0.0) {
        return Err(Error::InvalidParameter(format!("omega0 must be > 0, got {omega0}")));
    }
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidParameter(format!("d must be > 0, got {d}")));
    }
    if !(q_lo < q_hi) {
        return Err(Error::Infeasible(format!("q_lo = {q_lo} must lie below q_hi = {q_hi}")));
    }
    if !(q_hi > 0.0) {
        return Err(Error::Infeasible(format!("q_hi = {q_hi} must be > 0")));
    }
    if !(d - q_lo > 0.0) {
        return Err(Error::Infeasible(format!("q_lo = {q_lo} must lie below d = {d}")));
    }
    let span = q_lo - q_hi;
    let a = q_lo * d - 0.5 * d * d;
    let wt1 = arccos_checked(1.0 - a / (q_hi * span), "first switching time (q_hi bound)")?;
    let wt2 = arccos_checked((a - q_lo * span) / ((d - q_lo) * span), "final time (q_lo bound)")?;
    let t_1 = wt1 / omega0;
    let t_f = (wt1 + wt2) / omega0;
    if !(t_1 > 0.0 && t_f > t_1) {
        return Err(Error::Infeasible(format!(
            "degenerate switching times t_1 = {t_1}, t_f = {t_f}"
        )));
    }
    // Closed-form check that the arccos branches reach (d, 0) from rest.
    let x1 = q_hi * (1.0 - wt1.cos());
    let v1 = q_hi * wt1.sin();
    let (s, c) = wt2.sin_cos();
    let x_end = q_lo + (x1 - q_lo) * c + v1 * s;
    let v_end = -(x1 - q_lo) * s + v1 * c;
    let scale = d.abs().max(q_hi.abs()).max(q_lo.abs());
    if (x_end - d).abs() > 1e-9 * scale || v_end.abs() > 1e-9 * scale {
        return Err(Error::Infeasible(format!(
            "bounds [{q_lo}, {q_hi}] admit no single-switch transport to {d}"
        )));
    }
    let pieces = vec![Piece::constant(0.0, t_1, q_hi), Piece::constant(t_1, t_f, q_lo)];
    let q0 = Trajectory::piecewise(pieces, DEFAULT_SAMPLES)?.with_endpoint_values(0.0, d);
    Ok(RangeBounded { d, q_lo, q_hi, omega0, t_1, t_f, q0 })
}

/// Boundary-state residuals of a protocol under ODE integration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundaryResidual {
    pub x1_start: f64,
    pub x2_start: f64,
    pub x1_end: f64,
    pub x2_end: f64,
}

impl BoundaryResidual {
    /// Largest position residual and velocity residual divided by `omega0`.
    pub fn max(&self, omega0: f64) -> f64 {
        [self.x1_start, self.x2_start / omega0, self.x1_end, self.x2_end / omega0]
            .into_iter()
            .map(f64::abs)
            .fold(0.0, f64::max)
    }
}

/// Integrates the centre-of-mass equation along `q0` from rest and compares
/// the state at both ends with `(0, 0)` and `(d, 0)`.
pub fn verify_boundary(q0: &Trajectory, d: f64, omega0: f64) -> Result<BoundaryResidual> {
    if q0.t_f() == 0.0 {
        return Ok(BoundaryResidual {
            x1_start: 0.0,
            x2_start: 0.0,
            x1_end: q0.start_position() - d,
            x2_end: 0.0,
        });
    }
    let response = classical_response(q0, omega0)?;
    let (start, end) = (response.at(0.0), response.at(q0.t_f()));
    Ok(BoundaryResidual {
        x1_start: start.q,
        x2_start: start.q_dot,
        x1_end: end.q - d,
        x2_end: end.q_dot,
    })
}
