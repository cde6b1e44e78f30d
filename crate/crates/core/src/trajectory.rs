//! Time-parametrised paths `q(t)` on `[0, t_f]`.
//!
//! A [`Trajectory`] is either piecewise polynomial (every designed protocol
//! is) or a list of samples interpolated with cubic Hermite polynomials
//! (integrated responses). Piecewise trajectories may carry distinguished
//! values at `t = 0` and `t = t_f` that differ from the limits of the
//! adjacent pieces; those model instantaneous trap jumps at the ends.

use crate::{Error, Result};

/// One point of a trajectory with its first two derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub q: f64,
    pub q_dot: f64,
    pub q_ddot: f64,
}

/// Polynomial `q(t) = sum_k c_k (t - start)^k` valid on `[start, end]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Piece {
    start: f64,
    end: f64,
    coeffs: Vec<f64>,
}

impl Piece {
    pub fn new(start: f64, end: f64, coeffs: Vec<f64>) -> Self {
        Self { start, end, coeffs }
    }

    /// Piece given by coefficients of a polynomial in `(t - origin)`.
    pub fn about(start: f64, end: f64, origin: f64, coeffs: &[f64]) -> Self {
        Self::new(start, end, taylor_shift(coeffs, start - origin))
    }

    pub fn constant(start: f64, end: f64, value: f64) -> Self {
        Self::new(start, end, vec![value])
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    pub fn end(&self) -> f64 {
        self.end
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn eval(&self, t: f64) -> Sample {
        let u = t - self.start;
        Sample {
            t,
            q: deriv_eval(&self.coeffs, u, 0),
            q_dot: deriv_eval(&self.coeffs, u, 1),
            q_ddot: deriv_eval(&self.coeffs, u, 2),
        }
    }

    fn scaled(&self, time: f64, length: f64) -> Self {
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| c * length / time.powi(k as i32))
            .collect();
        Self::new(self.start * time, self.end * time, coeffs)
    }
}

/// Value of the `order`-th derivative of `sum c_k u^k`.
fn deriv_eval(coeffs: &[f64], u: f64, order: usize) -> f64 {
    let mut acc = 0.0;
    for k in (order..coeffs.len()).rev() {
        let mut f = 1.0;
        for m in 0..order {
            f *= (k - m) as f64;
        }
        acc = acc * u + f * coeffs[k];
    }
    acc
}

/// Coefficients of `p(u + h)` as a polynomial in `u`.
fn taylor_shift(coeffs: &[f64], h: f64) -> Vec<f64> {
    let mut c = coeffs.to_vec();
    let n = c.len();
    for i in 0..n {
        for k in (i..n.saturating_sub(1)).rev() {
            c[k] += h * c[k + 1];
        }
    }
    c
}

#[derive(Debug, Clone, PartialEq)]
enum Rule {
    Piecewise(Vec<Piece>),
    Hermite,
}

/// A path on `[0, t_f]` with stored samples and an evaluation rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    t_f: f64,
    samples: Vec<Sample>,
    rule: Rule,
    start_value: Option<f64>,
    end_value: Option<f64>,
}

/// Default number of stored samples for piecewise trajectories.
pub const DEFAULT_SAMPLES: usize = 1024;

impl Trajectory {
    /// Contiguous pieces covering `[0, t_f]`.
    pub fn piecewise(pieces: Vec<Piece>, n_samples: usize) -> Result<Self> {
        let first = pieces
            .first()
            .ok_or_else(|| Error::InvalidParameter("trajectory needs at least one piece".into()))?;
        if first.start != 0.0 {
            return Err(Error::InvalidParameter("first piece must start at t = 0".into()));
        }
        for w in pieces.windows(2) {
            if w[0].end != w[1].start {
                return Err(Error::InvalidParameter(format!(
                    "pieces are not contiguous at t = {}",
                    w[0].end
                )));
            }
        }
        for p in &pieces {
            if !(p.end >= p.start) || !p.end.is_finite() || p.coeffs.is_empty() {
                return Err(Error::InvalidParameter("malformed piece".into()));
            }
        }
        let t_f = pieces.last().map(|p| p.end).unwrap_or(0.0);
        if t_f > 0.0 && pieces.iter().any(|p| p.end == p.start) {
            return Err(Error::InvalidParameter("zero-length piece".into()));
        }
        let mut traj = Self {
            t_f,
            samples: Vec::new(),
            rule: Rule::Piecewise(pieces),
            start_value: None,
            end_value: None,
        };
        traj.resample(n_samples.max(1));
        Ok(traj)
    }

    /// A trajectory that stays at `q` and lasts zero time.
    pub fn stationary(q: f64) -> Self {
        Self::piecewise(vec![Piece::constant(0.0, 0.0, q)], 1).expect("valid piece")
    }

    /// Sampled trajectory, interpolated with cubic Hermite polynomials.
    pub fn from_samples(samples: Vec<Sample>) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParameter("need at least two samples".into()));
        }
        if samples[0].t != 0.0 {
            return Err(Error::InvalidParameter("samples must start at t = 0".into()));
        }
        if samples.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return Err(Error::InvalidParameter("sample times must be strictly increasing".into()));
        }
        Ok(Self {
            t_f: samples.last().unwrap().t,
            samples,
            rule: Rule::Hermite,
            start_value: None,
            end_value: None,
        })
    }

    /// Distinguished positions at `t = 0` and `t = t_f`, overriding the
    /// limits of the adjacent pieces.
    pub fn with_endpoint_values(mut self, start: f64, end: f64) -> Self {
        self.start_value = Some(start);
        self.end_value = Some(end);
        let n = self.samples.len().saturating_sub(1).max(1);
        if matches!(self.rule, Rule::Piecewise(_)) {
            self.resample(n);
        }
        self
    }

    fn resample(&mut self, n: usize) {
        if self.t_f == 0.0 {
            self.samples = vec![self.at(0.0)];
            return;
        }
        let t_f = self.t_f;
        self.samples = (0..=n)
            .map(|j| if j == n { t_f } else { t_f * j as f64 / n as f64 })
            .map(|t| self.at(t))
            .collect();
    }

    pub fn t_f(&self) -> f64 {
        self.t_f
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn is_analytic(&self) -> bool {
        matches!(self.rule, Rule::Piecewise(_))
    }

    pub fn pieces(&self) -> Option<&[Piece]> {
        match &self.rule {
            Rule::Piecewise(p) => Some(p),
            Rule::Hermite => None,
        }
    }

    pub fn endpoint_values(&self) -> (Option<f64>, Option<f64>) {
        (self.start_value, self.end_value)
    }

    /// Position at rest before the protocol starts.
    pub fn start_position(&self) -> f64 {
        self.at(0.0).q
    }

    /// Position at rest after the protocol ends.
    pub fn end_position(&self) -> f64 {
        self.at(self.t_f).q
    }

    /// Value at `t`, clamped to `[0, t_f]`. At the ends the distinguished
    /// boundary position is returned when one is set.
    pub fn at(&self, t: f64) -> Sample {
        let t = t.clamp(0.0, self.t_f);
        let mut s = self.branch_at(t);
        if t == 0.0 {
            if let Some(v) = self.start_value {
                s.q = v;
            }
        }
        if t == self.t_f {
            if let Some(v) = self.end_value {
                s.q = v;
            }
        }
        s
    }

    /// Value of the open-interval branch containing `t` (right-continuous at
    /// interior breakpoints, left limit at `t_f`).
    pub fn branch_at(&self, t: f64) -> Sample {
        let t = t.clamp(0.0, self.t_f);
        match &self.rule {
            Rule::Piecewise(pieces) => {
                let idx = pieces.partition_point(|p| p.start <= t).saturating_sub(1);
                pieces[idx].eval(t)
            }
            Rule::Hermite => self.hermite(t),
        }
    }

    /// Number of smooth segments.
    pub fn segment_count(&self) -> usize {
        match &self.rule {
            Rule::Piecewise(p) => p.len(),
            Rule::Hermite => 1,
        }
    }

    /// Time span of segment `i`.
    pub fn segment_bounds(&self, i: usize) -> (f64, f64) {
        match &self.rule {
            Rule::Piecewise(p) => (p[i].start, p[i].end),
            Rule::Hermite => (0.0, self.t_f),
        }
    }

    /// Evaluates segment `i` at `t`, including its one-sided limits at the
    /// segment ends.
    pub fn eval_segment(&self, i: usize, t: f64) -> Sample {
        match &self.rule {
            Rule::Piecewise(p) => p[i].eval(t),
            Rule::Hermite => self.hermite(t),
        }
    }

    /// Segment boundaries, `0 = b_0 < b_1 < ... = t_f`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut b = vec![0.0];
        for i in 0..self.segment_count() {
            b.push(self.segment_bounds(i).1);
        }
        b.dedup();
        b
    }

    fn hermite(&self, t: f64) -> Sample {
        let s = &self.samples;
        let i = s.partition_point(|p| p.t <= t).saturating_sub(1);
        if s[i].t == t || i + 1 >= s.len() {
            return s[i];
        }
        let (a, b) = (s[i], s[i + 1]);
        let h = b.t - a.t;
        let u = (t - a.t) / h;
        let h00 = (1.0 + 2.0 * u) * (1.0 - u) * (1.0 - u);
        let h10 = u * (1.0 - u) * (1.0 - u);
        let h01 = u * u * (3.0 - 2.0 * u);
        let h11 = u * u * (u - 1.0);
        Sample {
            t,
            q: h00 * a.q + h10 * h * a.q_dot + h01 * b.q + h11 * h * b.q_dot,
            q_dot: h00 * a.q_dot + h10 * h * a.q_ddot + h01 * b.q_dot + h11 * h * b.q_ddot,
            q_ddot: (1.0 - u) * a.q_ddot + u * b.q_ddot,
        }
    }

    /// Rescales time by `time` and positions by `length`.
    pub fn scaled(&self, time: f64, length: f64) -> Self {
        let rule = match &self.rule {
            Rule::Piecewise(p) => Rule::Piecewise(p.iter().map(|p| p.scaled(time, length)).collect()),
            Rule::Hermite => Rule::Hermite,
        };
        let samples = self
            .samples
            .iter()
            .map(|s| Sample {
                t: s.t * time,
                q: s.q * length,
                q_dot: s.q_dot * length / time,
                q_ddot: s.q_ddot * length / (time * time),
            })
            .collect();
        let mut out = Self {
            t_f: self.t_f * time,
            samples,
            rule,
            start_value: self.start_value.map(|v| v * length),
            end_value: self.end_value.map(|v| v * length),
        };
        if out.is_analytic() {
            let n = out.samples.len().saturating_sub(1).max(1);
            out.resample(n);
        }
        out
    }

    /// `a * x + b * y` for two piecewise trajectories of equal duration.
    pub fn combine(a: f64, x: &Trajectory, b: f64, y: &Trajectory) -> Result<Trajectory> {
        let (Some(px), Some(py)) = (x.pieces(), y.pieces()) else {
            return Err(Error::InvalidParameter("combine needs piecewise trajectories".into()));
        };
        if x.t_f != y.t_f {
            return Err(Error::InvalidParameter("combine needs equal durations".into()));
        }
        let mut cuts: Vec<f64> = x.breakpoints().into_iter().chain(y.breakpoints()).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let lookup = |pieces: &[Piece], t: f64| {
            let i = pieces.partition_point(|p| p.start <= t).saturating_sub(1);
            pieces[i].clone()
        };
        let mut pieces = Vec::new();
        for w in cuts.windows(2) {
            let (s, e) = (w[0], w[1]);
            let cx = taylor_shift(&lookup(px, s).coeffs, s - lookup(px, s).start);
            let cy = taylor_shift(&lookup(py, s).coeffs, s - lookup(py, s).start);
            let n = cx.len().max(cy.len());
            let coeffs = (0..n)
                .map(|k| a * cx.get(k).copied().unwrap_or(0.0) + b * cy.get(k).copied().unwrap_or(0.0))
                .collect();
            pieces.push(Piece::new(s, e, coeffs));
        }
        let mut out = Trajectory::piecewise(pieces, x.samples.len().saturating_sub(1).max(1))?;
        let combine_end = |vx: Option<f64>, vy: Option<f64>, tx: f64, ty: f64| match (vx, vy) {
            (None, None) => None,
            _ => Some(a * vx.unwrap_or(tx) + b * vy.unwrap_or(ty)),
        };
        let start = combine_end(x.start_value, y.start_value, x.branch_at(0.0).q, y.branch_at(0.0).q);
        let end = combine_end(x.end_value, y.end_value, x.branch_at(x.t_f).q, y.branch_at(y.t_f).q);
        if let (Some(s), Some(e)) = (start, end) {
            out = out.with_endpoint_values(s, e);
        } else if start.is_some() || end.is_some() {
            out = out.with_endpoint_values(
                start.unwrap_or_else(|| a * x.branch_at(0.0).q + b * y.branch_at(0.0).q),
                end.unwrap_or_else(|| a * x.branch_at(x.t_f).q + b * y.branch_at(y.t_f).q),
            );
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn piece_derivatives() {
        // q = 1 + 2u + 3u² + 4u³ about t = 1
        let p = Piece::new(1.0, 3.0, vec![1.0, 2.0, 3.0, 4.0]);
        let s = p.eval(2.0);
        assert_eq!(s.q, 10.0);
        assert_eq!(s.q_dot, 2.0 + 6.0 + 12.0);
        assert_eq!(s.q_ddot, 6.0 + 24.0);
    }

    #[test]
    fn taylor_shift_matches_direct_evaluation() {
        let p = Piece::about(2.0, 5.0, 0.5, &[0.3, -1.0, 0.25, 2.0, -0.1]);
        let direct = |t: f64| {
            let u: f64 = t - 0.5;
            0.3 - u + 0.25 * u * u + 2.0 * u.powi(3) - 0.1 * u.powi(4)
        };
        for t in [2.0, 2.7, 4.1, 5.0] {
            assert!((p.eval(t).q - direct(t)).abs() < 1e-12);
        }
    }

    #[test]
    fn samples_are_reproduced_exactly() {
        let t = Trajectory::piecewise(
            vec![
                Piece::new(0.0, 1.0, vec![0.0, 0.0, 1.0]),
                Piece::new(1.0, 2.5, vec![1.0, 2.0]),
            ],
            37,
        )
        .unwrap();
        for s in t.samples() {
            assert_eq!(t.at(s.t), *s);
        }
        let h = Trajectory::from_samples(t.samples().to_vec()).unwrap();
        for s in h.samples() {
            assert_eq!(h.at(s.t), *s);
        }
        assert!(t.samples().windows(2).all(|w| w[1].t > w[0].t));
        assert_eq!(t.samples().last().unwrap().t, 2.5);
    }

    #[test]
    fn hermite_is_exact_for_cubics() {
        let f = |t: f64| Sample {
            t,
            q: t * t * t - t,
            q_dot: 3.0 * t * t - 1.0,
            q_ddot: 6.0 * t,
        };
        let h = Trajectory::from_samples((0..=10).map(|j| f(j as f64 * 0.3)).collect()).unwrap();
        for t in [0.05, 0.77, 1.4, 2.99] {
            assert!((h.at(t).q - f(t).q).abs() < 1e-12);
            assert!((h.at(t).q_ddot - f(t).q_ddot).abs() < 1e-12);
        }
    }

    #[test]
    fn endpoint_values_override_branches() {
        let t = Trajectory::piecewise(vec![Piece::constant(0.0, 2.0, 5.0)], 4)
            .unwrap()
            .with_endpoint_values(0.0, 7.0);
        assert_eq!(t.at(0.0).q, 0.0);
        assert_eq!(t.at(1.0).q, 5.0);
        assert_eq!(t.at(2.0).q, 7.0);
        assert_eq!(t.branch_at(2.0).q, 5.0);
        assert_eq!(t.samples()[0].q, 0.0);
    }

    #[test]
    fn scaling_and_combination() {
        let a = Trajectory::piecewise(vec![Piece::new(0.0, 2.0, vec![0.0, 1.0, 0.5])], 8).unwrap();
        let s = a.scaled(3.0, 10.0);
        assert_eq!(s.t_f(), 6.0);
        assert!((s.at(3.0).q - 10.0 * a.at(1.0).q).abs() < 1e-12);
        assert!((s.at(3.0).q_dot - 10.0 / 3.0 * a.at(1.0).q_dot).abs() < 1e-12);
        let b = Trajectory::piecewise(
            vec![Piece::constant(0.0, 0.5, 1.0), Piece::constant(0.5, 2.0, -1.0)],
            8,
        )
        .unwrap();
        let c = Trajectory::combine(2.0, &a, -3.0, &b).unwrap();
        assert_eq!(c.breakpoints(), vec![0.0, 0.5, 2.0]);
        for t in [0.1, 0.7, 1.9] {
            assert!((c.at(t).q - (2.0 * a.at(t).q - 3.0 * b.at(t).q)).abs() < 1e-12);
        }
    }
}
