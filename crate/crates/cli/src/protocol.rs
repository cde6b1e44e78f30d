//! Protocol construction from the configuration, in SI units and in the
//! propagator's oscillator units.

use transport_core::control::{solve_displacement_bounded, solve_range_bounded};
use transport_core::design::{
    classical_response_rk4, CompensatingProtocol, CompensationOrder, DirectProtocol, Drive,
    PolynomialProtocol, DEFAULT_STEPS,
};
use transport_core::dynamics::TransportProblem;
use transport_core::{Trajectory, TrapConfig};

use crate::config::{Order, ProtocolConfig};
use crate::report::CliError;

/// A designed protocol in SI units.
#[derive(Debug, Clone)]
pub struct Built {
    pub kind: &'static str,
    pub trap: Trajectory,
    /// External acceleration `F / m` in m/s², stored in the `q` field.
    pub acceleration: Option<Trajectory>,
    /// Noiseless condensate centre of mass.
    pub condensate: Trajectory,
    pub t_f: f64,
    /// Switch time of the bang-bang protocols.
    pub t_1: Option<f64>,
}

pub fn build(p: &ProtocolConfig, omega0: f64, mass: f64) -> Result<Built, CliError> {
    let (trap, acceleration, t_1) = match *p {
        ProtocolConfig::Direct { distance, t_f } => (DirectProtocol::new(distance, t_f)?.trap_trajectory(), None, None),
        ProtocolConfig::Polynomial { distance, t_f } => (PolynomialProtocol::new(distance, t_f, omega0)?.trap(), None, None),
        ProtocolConfig::Compensating { distance, t_f, order } => {
            let order = match order {
                Order::Quintic => CompensationOrder::Quintic,
                Order::Cubic => CompensationOrder::Cubic,
            };
            let c = CompensatingProtocol::new(distance, t_f, mass, order)?;
            (c.trap().clone(), Some(c.acceleration()), None)
        }
        ProtocolConfig::BangbangDisplacement { distance, delta } => {
            let s = solve_displacement_bounded(distance, delta, omega0)?;
            (s.trap().clone(), None, Some(s.t_1))
        }
        ProtocolConfig::BangbangRange { distance, q_lo, q_hi } => {
            let s = solve_range_bounded(distance, q_lo, q_hi, omega0)?;
            (s.trap().clone(), None, Some(s.t_1))
        }
    };
    let drive = match &acceleration {
        Some(a) => Drive::with_acceleration(&trap, a),
        None => Drive::trap(&trap),
    };
    let condensate = classical_response_rk4(drive, omega0, DEFAULT_STEPS)?;
    Ok(Built { kind: p.kind(), t_f: trap.t_f(), trap, acceleration, condensate, t_1 })
}

impl Built {
    /// Propagation problem in oscillator units.
    pub fn problem(&self, cfg: &TrapConfig, quartic: f64) -> TransportProblem {
        let w = cfg.omega0();
        let a0 = cfg.oscillator_length();
        let mut problem = TransportProblem::from_si(cfg, &self.trap).with_quartic(quartic);
        if let Some(a) = &self.acceleration {
            problem = problem.with_acceleration(a.scaled(w, 1.0 / (a0 * w * w)));
        }
        problem
    }

    /// `max_t |q_c - q0|` over the condensate samples and the trap's
    /// one-sided limits at its breakpoints.
    pub fn max_displacement(&self) -> f64 {
        let mut m = 0.0f64;
        for s in self.condensate.samples() {
            m = m.max((s.q - self.trap.branch_at(s.t).q).abs());
        }
        for i in 0..self.trap.segment_count() {
            let (a, b) = self.trap.segment_bounds(i);
            for t in [a, b] {
                m = m.max((self.condensate.at(t).q - self.trap.eval_segment(i, t).q).abs());
            }
        }
        m
    }

    pub fn max_trap_acceleration(&self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..self.trap.segment_count() {
            let (a, b) = self.trap.segment_bounds(i);
            for j in 0..=256 {
                let t = a + (b - a) * j as f64 / 256.0;
                m = m.max(self.trap.eval_segment(i, t).q_ddot.abs());
            }
        }
        m
    }

    /// `|q_c(t_f) - q0(t_f)|` and `|q_c'(t_f)| / omega0`, both in m.
    pub fn end_residual(&self, omega0: f64) -> (f64, f64) {
        let end = self.condensate.at(self.t_f);
        ((end.q - self.trap.end_position()).abs(), end.q_dot.abs() / omega0)
    }
}
