//! Split-step Fourier propagation of the time-dependent Gross–Pitaevskii
//! equation in a moving harmonic trap, in oscillator units.
//!
//! The default frame follows the trap: with
//! `psi(q, t) = exp(i (q0' q + theta)) phi(q - q0, t)` the field `phi` obeys
//!
//! ```text
//! i phi_t = [-1/2 d²/dx² + x²/2 + kappa x⁴ + a(t) x + g |phi|²] phi,
//! a(t) = q0''(t) - f(t) - lambda zeta(t),
//! ```
//!
//! where `f` is an external acceleration and `lambda zeta` a trap-centre
//! jitter. Where `q0` or `q0'` jump (bang-bang switches, the polynomial
//! protocol's end velocities, the start and stop of the transport) `phi` is
//! re-expressed in the new frame by an exact spectral shift and a momentum
//! kick. The grid only has to hold the condensate plus its largest excursion
//! from the trap centre, and it is sized from the classical response.
//!
//! The harmonic part of the motion is a rigid translation in phase space, so
//! at any time the condensate's momentum content sits in a window of fixed
//! width around the classical momentum. Modes outside that window are removed
//! at every kinetic step. Without this, grid modes with `k² h / 2` beyond `pi`
//! are parametrically amplified by the nonlinear phase (the split-step
//! instability), and the step size would have to shrink with the square of
//! the grid's largest wavenumber.
//!
//! [`Frame::Lab`] propagates `psi` itself on a grid covering the whole path.

use std::f64::consts::PI;

use num_complex::Complex64;

use crate::design::{classical_response_rk4, Drive, DEFAULT_STEPS};
use crate::grid::{neumaier_sum, Grid1D, WaveFunction};
use crate::groundstate::{energy_decomposition_with, StationaryState};
use crate::spectral::{interpolate, Spectral};
use crate::trajectory::Trajectory;
use crate::units::TrapConfig;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Frame {
    #[default]
    CoMoving,
    Lab,
}

/// Piecewise-constant trap-centre jitter `lambda zeta(t)`, with `zeta`
/// constant on cells of length `dt` starting at `t = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseDrive {
    pub lambda: f64,
    pub dt: f64,
    pub samples: Vec<f64>,
}

impl NoiseDrive {
    pub fn duration(&self) -> f64 {
        self.dt * self.samples.len() as f64
    }

    /// Mean of `zeta` over `[t0, t1]`, exact for the piecewise-constant path.
    pub fn mean(&self, t0: f64, t1: f64) -> f64 {
        let (a, b) = (t0 / self.dt, t1 / self.dt);
        let first = a.floor().max(0.0) as usize;
        let last = (b.ceil() as usize).min(self.samples.len());
        let mut acc = 0.0;
        for j in first..last {
            let lo = (j as f64).max(a);
            let hi = ((j + 1) as f64).min(b);
            if hi > lo {
                acc += self.samples[j] * (hi - lo);
            }
        }
        acc / (b - a)
    }

    /// `(beta, beta')` at the end of every cell for `beta'' = -beta + zeta`
    /// from rest, propagated exactly across each cell.
    pub fn response(&self) -> Vec<(f64, f64)> {
        let (s, c) = self.dt.sin_cos();
        let (mut b, mut v) = (0.0f64, 0.0f64);
        self.samples
            .iter()
            .map(|&z| {
                let u = b - z;
                (b, v) = (u * c + v * s + z, -u * s + v * c);
                (b, v)
            })
            .collect()
    }
}

/// Drive of a propagation, in oscillator units.
#[derive(Debug, Clone, PartialEq)]
pub struct TransportProblem {
    pub trap: Trajectory,
    /// External acceleration `F / m`, stored in the `q` field.
    pub acceleration: Option<Trajectory>,
    pub noise: Option<NoiseDrive>,
    pub coupling: f64,
    /// Anharmonic trap correction `kappa x⁴` around the trap centre.
    pub quartic: f64,
}

impl TransportProblem {
    pub fn new(trap: Trajectory, coupling: f64) -> Self {
        Self { trap, acceleration: None, noise: None, coupling, quartic: 0.0 }
    }

    /// Converts an SI trap path to oscillator units.
    pub fn from_si(cfg: &TrapConfig, trap: &Trajectory) -> Self {
        Self::new(trap.scaled(cfg.omega0(), 1.0 / cfg.oscillator_length()), cfg.coupling())
    }

    pub fn with_acceleration(mut self, acceleration: Trajectory) -> Self {
        self.acceleration = Some(acceleration);
        self
    }

    pub fn with_noise(mut self, noise: NoiseDrive) -> Self {
        self.noise = Some(noise);
        self
    }

    pub fn with_quartic(mut self, quartic: f64) -> Self {
        self.quartic = quartic;
        self
    }

    pub fn t_f(&self) -> f64 {
        self.trap.t_f()
    }

    /// Noiseless centre-of-mass path of a condensate starting at rest at the
    /// origin.
    pub fn classical_path(&self) -> Result<Trajectory> {
        if self.t_f() == 0.0 {
            return Ok(Trajectory::stationary(self.trap.start_position()));
        }
        let drive = match &self.acceleration {
            Some(a) => Drive::with_acceleration(&self.trap, a),
            None => Drive::trap(&self.trap),
        };
        classical_response_rk4(drive, 1.0, DEFAULT_STEPS)
    }

    fn external(&self, t: f64) -> f64 {
        self.acceleration.as_ref().map_or(0.0, |a| a.branch_at(t).q)
    }

    fn breakpoints(&self) -> Vec<f64> {
        let mut b = self.trap.breakpoints();
        if let Some(a) = &self.acceleration {
            b.extend(a.breakpoints());
        }
        if let Some(n) = &self.noise {
            let t_f = self.t_f();
            b.extend((1..n.samples.len()).map(|j| j as f64 * n.dt).take_while(|&t| t < t_f));
        }
        b.sort_by(f64::total_cmp);
        b.dedup();
        b
    }

    fn validate(&self) -> Result<()> {
        if self.trap.start_position() != 0.0 {
            return Err(Error::InvalidParameter("trap path must start at the origin".into()));
        }
        if !(self.coupling >= 0.0 && self.quartic >= 0.0) {
            return Err(Error::InvalidParameter("coupling and quartic term must be >= 0".into()));
        }
        if let Some(a) = &self.acceleration {
            if a.t_f() != self.t_f() {
                return Err(Error::InvalidParameter(
                    "forcing and trap trajectories have different durations".into(),
                ));
            }
        }
        if let Some(n) = &self.noise {
            if !(n.dt > 0.0) {
                return Err(Error::InvalidParameter("noise cell length must be > 0".into()));
            }
            if n.duration() < self.t_f() * (1.0 - 1e-12) {
                return Err(Error::Coverage(format!(
                    "noise realization covers {} of {}",
                    n.duration(),
                    self.t_f()
                )));
            }
        }
        Ok(())
    }
}

/// How the propagation grid is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GridSpec {
    /// Sized from the classical response and the initial state.
    Auto,
    /// Automatic extent with a fixed number of points.
    Points(usize),
    Fixed(Grid1D),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    /// Target time step in units of `1 / omega0`; each smooth segment is cut
    /// into equal steps no longer than this.
    pub dt: f64,
    /// Record a snapshot every this many steps (0 records only the ends).
    pub snapshot_stride: usize,
    pub frame: Frame,
    pub grid: GridSpec,
    /// Largest tolerated density, relative to the peak, within one `a0` of
    /// the grid border or in the edge band of the momentum window.
    pub escape_threshold: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            dt: 2e-3,
            snapshot_stride: 0,
            frame: Frame::CoMoving,
            grid: GridSpec::Auto,
            escape_threshold: 1e-6,
        }
    }
}

impl PropagationOptions {
    /// Same options with the time step divided by `factor`.
    pub fn refined(&self, factor: f64) -> Self {
        Self { dt: self.dt / factor, ..*self }
    }
}

#[derive(Debug, Clone)]
pub struct Snapshot {
    pub t: f64,
    /// State in the frame moving with `frame_offset` and `frame_velocity`.
    pub psi: WaveFunction,
    pub frame_offset: f64,
    pub frame_velocity: f64,
}

#[derive(Debug, Clone)]
pub struct PropagationResult {
    pub frame: Frame,
    pub snapshots: Vec<Snapshot>,
    /// State at `t_f`, at rest in the final trap (lab frame: in lab coordinates).
    pub final_state: WaveFunction,
    pub final_fidelity: f64,
    /// In units of hbar omega0.
    pub excitation_energy: f64,
    /// `(t, <q>)` in lab coordinates.
    pub com_track: Vec<(f64, f64)>,
    pub norm_drift: f64,
    pub steps: usize,
}

impl PropagationResult {
    pub fn grid(&self) -> &Grid1D {
        self.final_state.grid()
    }

    /// Largest `|<q>(t) - q_c(t)|` against a reference path.
    pub fn max_com_deviation(&self, path: &Trajectory) -> f64 {
        self.com_track
            .iter()
            .map(|&(t, q)| (q - path.at(t).q).abs())
            .fold(0.0, f64::max)
    }
}

/// `|<a|b>|`, clamped to `[0, 1]`.
pub fn fidelity(a: &WaveFunction, b: &WaveFunction) -> Result<f64> {
    Ok(a.inner(b)?.norm().min(1.0))
}

/// Gross–Pitaevskii energy of `psi` in the trap centred at `center`.
pub fn gp_energy(psi: &WaveFunction, coupling: f64, quartic: f64, center: f64) -> f64 {
    let g = *psi.grid();
    let local = Grid1D::new(g.x_min() - center, g.x_max() - center, g.len()).expect("shifted grid");
    let moved = WaveFunction::new(local, psi.amplitudes().to_vec()).expect("same length");
    energy_decomposition_with(&moved, coupling, quartic).total()
}

/// Energy of `psi` in the trap at `trap_center` above the ground state.
pub fn excitation_energy(psi: &WaveFunction, ground: &StationaryState, trap_center: f64) -> f64 {
    gp_energy(psi, ground.coupling(), ground.quartic(), trap_center) - ground.energies().total()
}

/// Propagates the ground state along the problem's protocol.
pub fn propagate(
    problem: &TransportProblem,
    ground: &StationaryState,
    opts: &PropagationOptions,
) -> Result<PropagationResult> {
    propagate_from(problem, ground, ground.chi(), opts)
}

/// Same as [`propagate`] from an arbitrary initial profile, given relative to
/// the trap centre at `t = 0` (on any grid).
pub fn propagate_from(
    problem: &TransportProblem,
    ground: &StationaryState,
    initial: &WaveFunction,
    opts: &PropagationOptions,
) -> Result<PropagationResult> {
    problem.validate()?;
    if !(opts.dt > 0.0 && opts.dt < 0.05) {
        return Err(Error::InvalidParameter(format!(
            "time step must lie in (0, 0.05) / omega0, got {}",
            opts.dt
        )));
    }
    if (problem.coupling - ground.coupling()).abs() > 1e-12 * problem.coupling.max(1.0)
        || problem.quartic != ground.quartic()
    {
        return Err(Error::InvalidParameter(
            "reference state was computed for a different trap or coupling".into(),
        ));
    }
    let initial = initial.normalize()?;
    let path = problem.classical_path()?;
    let grid = match opts.grid {
        GridSpec::Fixed(g) => g,
        GridSpec::Auto => auto_grid(problem, &path, &initial, opts.frame, None)?,
        GridSpec::Points(n) => auto_grid(problem, &path, &initial, opts.frame, Some(n))?,
    };
    let profile = Profile::of(&initial);
    let window = MomentumWindow::new(problem, &profile);
    Propagator::new(problem, ground, grid, window, opts).run(&initial, &path)
}

/// Grid choice for a problem: `(x_min, x_max)` from the largest excursions
/// and the state support, spacing from the largest relative momentum.
pub fn auto_grid(
    problem: &TransportProblem,
    path: &Trajectory,
    initial: &WaveFunction,
    frame: Frame,
    points: Option<usize>,
) -> Result<Grid1D> {
    const MARGIN: f64 = 8.0;
    let profile = Profile::of(initial);
    let window = MomentumWindow::new(problem, &profile);
    let noise_x = noise_extent(problem).0;
    let swing = window.swing_amplitude();

    let (mut d_lo, mut d_hi, mut v_max) = (0.0f64, 0.0f64, 0.0f64);
    let t_f = problem.t_f();
    if t_f > 0.0 {
        let cuts = problem.breakpoints();
        for w in cuts.windows(2) {
            let seg = segment_of(&problem.trap, 0.5 * (w[0] + w[1]));
            const M: usize = 512;
            for j in 0..=M {
                let t = w[0] + (w[1] - w[0]) * j as f64 / M as f64;
                let c = path.at(t);
                let (dq, dv) = match frame {
                    Frame::CoMoving => {
                        let s = problem.trap.eval_segment(seg, t);
                        (c.q - s.q, c.q_dot - s.q_dot)
                    }
                    Frame::Lab => (c.q, c.q_dot),
                };
                d_lo = d_lo.min(dq);
                d_hi = d_hi.max(dq);
                v_max = v_max.max(dv.abs());
            }
        }
        if frame == Frame::Lab {
            d_hi = d_hi.max(problem.trap.end_position());
        }
    }
    let x_min = d_lo - swing - noise_x + profile.lo - MARGIN;
    let x_max = d_hi + swing + noise_x + profile.hi + MARGIN;
    let k_need = 1.05 * (v_max + swing + window.k_out);
    let n_points = match points {
        Some(n) => n,
        None => {
            let dx = PI / k_need;
            ((x_max - x_min) / dx).ceil().max(256.0) as usize
        }
    }
    .next_power_of_two();
    Grid1D::new(x_min, x_max, n_points)
}

/// Relative level below which density and spectrum tails are ignored.
const TAIL: f64 = 1e-9;

/// Support and momentum content of an initial state.
#[derive(Debug, Clone, Copy)]
struct Profile {
    /// Support relative to the mean position.
    lo: f64,
    hi: f64,
    mean: f64,
    momentum: f64,
    /// Half-width of the spectrum around its mean.
    k_ext: f64,
}

impl Profile {
    fn of(psi: &WaveFunction) -> Self {
        let g = *psi.grid();
        let density = psi.density();
        let peak = density.iter().cloned().fold(0.0, f64::max);
        let mean = psi.mean_position();
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for (j, &d) in density.iter().enumerate() {
            if d > TAIL * TAIL * peak {
                lo = lo.min(g.x(j) - mean);
                hi = hi.max(g.x(j) - mean);
            }
        }
        let spectral = Spectral::new(g);
        let spec = spectral.spectrum(psi);
        let weight = g.dx() / g.len() as f64;
        let momentum = neumaier_sum(spec.iter().zip(spectral.wavenumbers()).map(|(v, k)| k * v.norm_sqr())) * weight;
        let k_ext = spectral.spectral_extent(psi, TAIL) + momentum.abs();
        Self { lo, hi, mean, momentum, k_ext }
    }
}

/// Largest `|lambda beta|` and `|lambda beta'|` of the problem's noise.
fn noise_extent(problem: &TransportProblem) -> (f64, f64) {
    let (mut x, mut k) = (0.0f64, 0.0f64);
    if let Some(nd) = &problem.noise {
        let kick = nd.samples.iter().fold(0.0f64, |m, z| m.max(z.abs())) * nd.dt;
        for (b, v) in nd.response() {
            x = x.max((nd.lambda * b).abs());
            k = k.max((nd.lambda * v).abs());
        }
        k += nd.lambda * kick;
    }
    (x, k)
}

/// Band of wavenumbers kept at each step: untouched within `k_in` of the
/// expected momentum, cosine roll-off to zero at `k_out`.
#[derive(Debug, Clone, Copy)]
struct MomentumWindow {
    /// Initial offset and momentum relative to rest at the trap centre.
    x0: f64,
    p0: f64,
    k_in: f64,
    k_out: f64,
}

impl MomentumWindow {
    fn new(problem: &TransportProblem, profile: &Profile) -> Self {
        let noise_k = noise_extent(problem).1;
        let mut k_in = 1.2 * profile.k_ext + noise_k + 2.0;
        if problem.quartic != 0.0 {
            // No exact centre-of-mass motion: allow the full free swing.
            k_in += profile.mean.hypot(profile.momentum);
        }
        let k_out = k_in + (0.25 * k_in).max(8.0);
        Self { x0: profile.mean, p0: profile.momentum, k_in, k_out }
    }

    fn swing_amplitude(&self) -> f64 {
        self.x0.hypot(self.p0)
    }

    /// Expected momentum at `t` for a condensate whose classical momentum
    /// (in the current frame) is `classical`.
    fn center(&self, classical: f64, t: f64) -> f64 {
        let (s, c) = t.sin_cos();
        classical + self.p0 * c - self.x0 * s
    }

    /// Longest step keeping every retained mode's kinetic phase below
    /// `pi / 2` per step.
    fn step_limit(&self) -> f64 {
        PI / (self.k_out * self.k_out)
    }

    fn factor(&self, distance: f64) -> f64 {
        if distance <= self.k_in {
            1.0
        } else if distance >= self.k_out {
            0.0
        } else {
            let u = (distance - self.k_in) / (self.k_out - self.k_in);
            (0.5 * PI * u).cos().powi(2)
        }
    }
}

fn segment_of(t: &Trajectory, time: f64) -> usize {
    (0..t.segment_count())
        .find(|&i| {
            let (s, e) = t.segment_bounds(i);
            s <= time && time <= e
        })
        .unwrap_or(0)
}

struct Propagator<'a> {
    problem: &'a TransportProblem,
    ground: &'a StationaryState,
    grid: Grid1D,
    spectral: Spectral,
    opts: &'a PropagationOptions,
    xs: Vec<f64>,
    scratch: Vec<Complex64>,
    kinetic: Vec<Complex64>,
    trap_phase: Vec<Complex64>,
    kinetic_h: f64,
    window: MomentumWindow,
    norm_drift: f64,
    com: Vec<(f64, f64)>,
    snapshots: Vec<Snapshot>,
    steps: usize,
}

/// Frame of the co-moving representation: trap offset and velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
struct FrameState {
    offset: f64,
    velocity: f64,
}

impl<'a> Propagator<'a> {
    fn new(
        problem: &'a TransportProblem,
        ground: &'a StationaryState,
        grid: Grid1D,
        window: MomentumWindow,
        opts: &'a PropagationOptions,
    ) -> Self {
        let spectral = Spectral::new(grid);
        let scratch = spectral.scratch();
        Self {
            problem,
            ground,
            grid,
            xs: grid.points().collect(),
            spectral,
            opts,
            scratch,
            kinetic: Vec::new(),
            trap_phase: Vec::new(),
            kinetic_h: f64::NAN,
            window,
            norm_drift: 0.0,
            com: Vec::new(),
            snapshots: Vec::new(),
            steps: 0,
        }
    }

    fn run(mut self, initial: &WaveFunction, path: &Trajectory) -> Result<PropagationResult> {
        let frame = self.opts.frame;
        let problem = self.problem;
        let start = problem.trap.start_position();
        let end = problem.trap.end_position();
        let origin = if frame == Frame::Lab { start } else { 0.0 };
        let mut psi = interpolate(initial, self.grid, origin);
        self.check_boundary(&psi, 0.0)?;
        let rest_start = FrameState { offset: start, velocity: 0.0 };
        let mut current = rest_start;
        self.snapshot(0.0, &psi, current, frame);

        let t_f = problem.t_f();
        let cuts = if t_f > 0.0 { problem.breakpoints() } else { vec![0.0] };
        for w in cuts.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let seg = segment_of(&problem.trap, 0.5 * (t0 + t1));
            if frame == Frame::CoMoving {
                let s = problem.trap.eval_segment(seg, t0);
                let next = FrameState { offset: s.q, velocity: s.q_dot };
                psi = self.change_frame(psi, current, next);
                current = next;
            }
            let classical = |t: f64| {
                let v = path.at(t).q_dot;
                match frame {
                    Frame::CoMoving => v - problem.trap.eval_segment(seg, t).q_dot,
                    Frame::Lab => v,
                }
            };
            let reach = (0..=64)
                .map(|j| {
                    let t = t0 + (t1 - t0) * j as f64 / 64.0;
                    self.window.center(classical(t), t).abs()
                })
                .fold(0.0, f64::max)
                + self.window.k_in;
            if reach > self.grid.k_max() {
                return Err(Error::Unresolved { t: t0, k_needed: reach, k_max: self.grid.k_max() });
            }
            let h_max = self.opts.dt.min(self.window.step_limit());
            let n = ((t1 - t0) / h_max * (1.0 - 1e-12)).ceil().max(1.0) as usize;
            let h = (t1 - t0) / n as f64;
            for j in 0..n {
                let ta = t0 + j as f64 * h;
                let tb = if j + 1 == n { t1 } else { t0 + (j + 1) as f64 * h };
                let tm = 0.5 * (ta + tb);
                let noise = problem.noise.as_ref().map_or(0.0, |nd| nd.lambda * nd.mean(ta, tb));
                let potential = match frame {
                    Frame::CoMoving => {
                        let a = problem.trap.eval_segment(seg, tm).q_ddot - problem.external(tm) - noise;
                        Potential::CoMoving { linear: a }
                    }
                    Frame::Lab => Potential::Lab {
                        center: problem.trap.eval_segment(seg, tm).q + noise,
                        force: problem.external(tm),
                    },
                };
                let offset = match frame {
                    Frame::CoMoving => problem.trap.eval_segment(seg, ta).q,
                    Frame::Lab => 0.0,
                };
                let center = self.window.center(classical(tm), tm);
                self.step(&mut psi, h, potential, center, ta, offset)?;
                if self.opts.snapshot_stride > 0 && self.steps.is_multiple_of(self.opts.snapshot_stride) {
                    if frame == Frame::CoMoving {
                        let s = problem.trap.eval_segment(seg, tb);
                        current = FrameState { offset: s.q, velocity: s.q_dot };
                    }
                    self.snapshot(tb, &psi, current, frame);
                }
                if self.steps.is_multiple_of(16) {
                    self.check_boundary(&psi, tb)?;
                }
            }
            if frame == Frame::CoMoving {
                let s = problem.trap.eval_segment(seg, t1);
                current = FrameState { offset: s.q, velocity: s.q_dot };
            }
        }
        if frame == Frame::CoMoving {
            let rest_end = FrameState { offset: end, velocity: 0.0 };
            psi = self.change_frame(psi, current, rest_end);
            current = rest_end;
        }
        self.check_boundary(&psi, t_f)?;
        let (norm, mean) = moments(&psi, &self.xs);
        self.track_norm(norm)?;
        let com = match frame {
            Frame::CoMoving => end + mean,
            Frame::Lab => mean,
        };
        self.com.push((t_f, com));
        if self.snapshots.last().is_none_or(|s| s.t != t_f) {
            self.snapshot(t_f, &psi, current, frame);
        }

        let center = if frame == Frame::Lab { end } else { 0.0 };
        let reference = interpolate(self.ground.chi(), self.grid, center);
        let final_fidelity = fidelity(&reference, &psi)?;
        let excitation_energy = excitation_energy(&psi, self.ground, center);
        Ok(PropagationResult {
            frame,
            snapshots: self.snapshots,
            final_state: psi,
            final_fidelity,
            excitation_energy,
            com_track: self.com,
            norm_drift: self.norm_drift,
            steps: self.steps,
        })
    }

    fn snapshot(&mut self, t: f64, psi: &WaveFunction, f: FrameState, frame: Frame) {
        let (frame_offset, frame_velocity) = match frame {
            Frame::CoMoving => (f.offset, f.velocity),
            Frame::Lab => (0.0, 0.0),
        };
        self.snapshots.push(Snapshot { t, psi: psi.clone(), frame_offset, frame_velocity });
    }

    /// `phi_new(x) = exp(-i dv x) phi_old(x + da)`.
    fn change_frame(&mut self, psi: WaveFunction, from: FrameState, to: FrameState) -> WaveFunction {
        let da = to.offset - from.offset;
        let dv = to.velocity - from.velocity;
        let mut out = if da != 0.0 { self.spectral.shift(&psi, da) } else { psi };
        if dv != 0.0 {
            out.boost(-dv);
        }
        out
    }

    fn phases_for(&mut self, h: f64) {
        if self.kinetic_h != h {
            self.kinetic = self
                .spectral
                .wavenumbers()
                .iter()
                .map(|k| Complex64::from_polar(1.0, -0.5 * k * k * h))
                .collect();
            let kappa = self.problem.quartic;
            self.trap_phase = self
                .xs
                .iter()
                .map(|&x| Complex64::from_polar(1.0, -(0.5 * x * x + kappa * x.powi(4)) * 0.5 * h))
                .collect();
            self.kinetic_h = h;
        }
    }

    /// `exp(-i (V(x) + g |psi|²) h / 2)` applied in place; returns the norm and
    /// first moment of the incoming state.
    fn potential_half_step(&self, amps: &mut [Complex64], h: f64, pot: Potential) -> (f64, f64) {
        const CHUNK: usize = 256;
        let g = self.problem.coupling;
        let kappa = self.problem.quartic;
        let half = 0.5 * h;
        let (mut norm, mut first) = (0.0f64, 0.0f64);
        let linear = match pot {
            Potential::CoMoving { linear } => Some(linear),
            Potential::Lab { center, force } if kappa == 0.0 => Some(-center - force),
            Potential::Lab { .. } => None,
        };
        let dx = self.grid.dx();
        for (c, chunk) in amps.chunks_mut(CHUNK).enumerate() {
            let j0 = c * CHUNK;
            let xs = &self.xs[j0..j0 + chunk.len()];
            match linear {
                Some(b) => {
                    let mut z = Complex64::from_polar(1.0, -b * xs[0] * half);
                    let w = Complex64::from_polar(1.0, -b * dx * half);
                    for ((a, &x), p) in chunk.iter_mut().zip(xs).zip(&self.trap_phase[j0..]) {
                        let rho = a.norm_sqr();
                        norm += rho;
                        first += rho * x;
                        *a *= p * z;
                        let nl = g * rho * half;
                        if nl > 1e-17 {
                            *a *= Complex64::from_polar(1.0, -nl);
                        }
                        z *= w;
                    }
                }
                None => {
                    let Potential::Lab { center, force } = pot else { unreachable!() };
                    for (a, &x) in chunk.iter_mut().zip(xs) {
                        let rho = a.norm_sqr();
                        norm += rho;
                        first += rho * x;
                        let y = x - center;
                        let v = 0.5 * y * y + kappa * y.powi(4) - force * x;
                        *a *= Complex64::from_polar(1.0, -(v + g * rho) * half);
                    }
                }
            }
        }
        (norm * dx, first)
    }

    fn step(
        &mut self,
        psi: &mut WaveFunction,
        h: f64,
        pot: Potential,
        center: f64,
        t: f64,
        offset: f64,
    ) -> Result<()> {
        self.phases_for(h);
        let amps = psi.amplitudes_mut();
        let (norm, first) = self.potential_half_step(amps, h, pot);
        let mean = first * self.grid.dx() / norm;
        self.track_norm(norm)?;
        if !mean.is_finite() {
            return Err(Error::Unstable { step: self.steps });
        }
        self.com.push((t, offset + mean));
        self.spectral.forward(amps, &mut self.scratch);
        let check = self.steps.is_multiple_of(16);
        let (mut peak, mut edge) = (0.0f64, 0.0f64);
        let ks = self.spectral.wavenumbers();
        for ((a, p), &k) in amps.iter_mut().zip(&self.kinetic).zip(ks) {
            let d = (k - center).abs();
            if check {
                let rho = a.norm_sqr();
                peak = peak.max(rho);
                if d > self.window.k_in {
                    edge = edge.max(rho);
                }
            }
            if d <= self.window.k_in {
                *a *= p;
            } else {
                *a *= p * self.window.factor(d);
            }
        }
        if check && edge > self.opts.escape_threshold * peak {
            return Err(Error::MomentumEscape { t, ratio: edge / peak });
        }
        self.spectral.inverse(amps, &mut self.scratch);
        self.potential_half_step(amps, h, pot);
        self.steps += 1;
        Ok(())
    }

    fn track_norm(&mut self, norm: f64) -> Result<()> {
        if !norm.is_finite() {
            return Err(Error::Unstable { step: self.steps });
        }
        self.norm_drift = self.norm_drift.max((norm - 1.0).abs());
        Ok(())
    }

    fn check_boundary(&self, psi: &WaveFunction, t: f64) -> Result<()> {
        let a = psi.amplitudes();
        let n = a.len();
        // Points within one oscillator length of either border.
        let band = ((1.0 / self.grid.dx()).ceil() as usize).clamp(4, n / 8);
        let peak = a.iter().map(|v| v.norm_sqr()).fold(0.0, f64::max);
        if !peak.is_finite() {
            return Err(Error::Unstable { step: self.steps });
        }
        let edge = a[..band]
            .iter()
            .chain(&a[n - band..])
            .map(|v| v.norm_sqr())
            .fold(0.0, f64::max);
        let ratio = edge / peak;
        if ratio > self.opts.escape_threshold {
            return Err(Error::FrameEscape { t, ratio });
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
enum Potential {
    CoMoving { linear: f64 },
    Lab { center: f64, force: f64 },
}

fn moments(psi: &WaveFunction, xs: &[f64]) -> (f64, f64) {
    let dx = psi.grid().dx();
    let norm = neumaier_sum(psi.amplitudes().iter().map(|a| a.norm_sqr()));
    let first = neumaier_sum(psi.amplitudes().iter().zip(xs).map(|(a, x)| a.norm_sqr() * x));
    (norm * dx, first / norm)
}

/// Analytic transport mode: the stationary profile riding on a classical
/// path with the accompanying phase
/// `-mu t + q_c' q - int_0^t [(q_c'^2 - q_c^2) / 2 + q0^2 / 2] dt'`.
#[derive(Debug, Clone)]
pub struct TransportMode {
    chi: StationaryState,
    q_c: Trajectory,
    q0: Trajectory,
}

/// Representation in which a mode state is returned.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ModeFrame {
    Lab,
    /// Frame moving with the given offset and velocity (as in [`Snapshot`]).
    CoMoving { offset: f64, velocity: f64 },
}

impl TransportMode {
    pub fn new(chi: StationaryState, q_c: Trajectory, q0: Trajectory) -> Result<Self> {
        if q_c.t_f() != q0.t_f() {
            return Err(Error::InvalidParameter("paths have different durations".into()));
        }
        Ok(Self { chi, q_c, q0 })
    }

    /// Mode following the classical response of the problem's trap path.
    pub fn for_problem(chi: StationaryState, problem: &TransportProblem) -> Result<Self> {
        let q_c = problem.classical_path()?;
        Self::new(chi, q_c, problem.trap.clone())
    }

    pub fn chi(&self) -> &StationaryState {
        &self.chi
    }

    pub fn path(&self) -> &Trajectory {
        &self.q_c
    }

    /// `int_0^t [(q_c'^2 - q_c^2) / 2 + q0^2 / 2] dt'` by Gauss–Legendre
    /// quadrature on the smooth segments of `q0`.
    pub fn action(&self, t: f64) -> f64 {
        const NODES: [f64; 5] = [
            -0.906_179_845_938_664,
            -0.538_469_310_105_683_1,
            0.0,
            0.538_469_310_105_683_1,
            0.906_179_845_938_664,
        ];
        const WEIGHTS: [f64; 5] = [
            0.236_926_885_056_189_08,
            0.478_628_670_499_366_47,
            0.568_888_888_888_888_9,
            0.478_628_670_499_366_47,
            0.236_926_885_056_189_08,
        ];
        let t = t.clamp(0.0, self.q_c.t_f());
        let mut cuts = self.q0.breakpoints();
        cuts.retain(|&c| c < t);
        cuts.push(t);
        let mut acc = 0.0;
        for w in cuts.windows(2) {
            let seg = segment_of(&self.q0, 0.5 * (w[0] + w[1]));
            let panels = (((w[1] - w[0]) / 0.05).ceil() as usize).max(1);
            let h = (w[1] - w[0]) / panels as f64;
            for p in 0..panels {
                let mid = w[0] + (p as f64 + 0.5) * h;
                for (x, wt) in NODES.iter().zip(WEIGHTS) {
                    let s = mid + 0.5 * h * x;
                    let c = self.q_c.at(s);
                    let q0 = self.q0.eval_segment(seg, s).q;
                    acc += 0.5 * h * wt * 0.5 * (c.q_dot * c.q_dot - c.q * c.q + q0 * q0);
                }
            }
        }
        acc
    }

    /// Mode wave function at time `t` on `grid`.
    pub fn state(&self, t: f64, grid: Grid1D, frame: ModeFrame) -> WaveFunction {
        let c = self.q_c.at(t);
        let phase = -self.chi.mu() * t - self.action(t);
        let (offset, velocity) = match frame {
            ModeFrame::Lab => (0.0, 0.0),
            ModeFrame::CoMoving { offset, velocity } => (offset, velocity),
        };
        // phi(x) = exp(-i v (x + a)) psi(x + a)
        let mut out = interpolate(self.chi.chi(), grid, c.q - offset);
        for (a, x) in out.amplitudes_mut().iter_mut().zip(grid.points()) {
            let q = x + offset;
            *a *= Complex64::from_polar(1.0, (c.q_dot - velocity) * q + phase);
        }
        out
    }
}

/// Mode state at `t` in the lab frame.
pub fn transport_mode_state(mode: &TransportMode, t: f64, grid: Grid1D) -> WaveFunction {
    mode.state(t, grid, ModeFrame::Lab)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::PolynomialProtocol;
    use crate::groundstate::{default_grid_for, solve_ground_state_with};

    fn ground(g: f64) -> StationaryState {
        solve_ground_state_with(g, &default_grid_for(g), &Default::default()).unwrap()
    }

    #[test]
    fn fidelity_properties() {
        let g = Grid1D::symmetric(20.0, 512).unwrap();
        let a = WaveFunction::gaussian(g, 0.0);
        assert!((fidelity(&a, &a).unwrap() - 1.0).abs() < 1e-14);
        let mut b = a.clone();
        b.scale(Complex64::from_polar(1.0, 1.234));
        assert!((fidelity(&a, &b).unwrap() - 1.0).abs() < 1e-14);
        for delta in [0.3, 1.0, 2.5] {
            let c = WaveFunction::gaussian(g, delta);
            let f = fidelity(&a, &c).unwrap();
            assert!((f - (-delta * delta / 4.0f64).exp()).abs() < 1e-8);
            assert_eq!(f, fidelity(&c, &a).unwrap());
        }
        let other = WaveFunction::gaussian(Grid1D::symmetric(10.0, 512).unwrap(), 0.0);
        assert!(matches!(fidelity(&a, &other), Err(Error::GridMismatch)));
    }

    #[test]
    fn displaced_state_energy() {
        let s = ground(0.0);
        assert!(excitation_energy(s.chi(), &s, 0.0).abs() < 1e-8);
        let g = Grid1D::symmetric(25.0, 1024).unwrap();
        for dq in [0.5, 2.0, 4.0] {
            let psi = interpolate(s.chi(), g, dq);
            let e = excitation_energy(&psi, &s, 0.0);
            assert!((e / (0.5 * dq * dq) - 1.0).abs() < 1e-6, "{e}");
        }
    }

    #[test]
    fn stationary_trap_keeps_ground_state() {
        let s = ground(104.0);
        let problem = TransportProblem::new(Trajectory::stationary(0.0), s.coupling());
        let r = propagate(&problem, &s, &Default::default()).unwrap();
        assert!((r.final_fidelity - 1.0).abs() < 1e-8);
        assert_eq!(r.steps, 0);
    }

    #[test]
    fn resting_trap_over_time() {
        let s = ground(104.0);
        let trap = Trajectory::piecewise(vec![crate::trajectory::Piece::constant(0.0, 3.0, 0.0)], 16).unwrap();
        let problem = TransportProblem::new(trap, s.coupling());
        let r = propagate(&problem, &s, &Default::default()).unwrap();
        assert!((r.final_fidelity - 1.0).abs() < 1e-8, "{}", r.final_fidelity);
        assert!(r.com_track.iter().all(|&(_, q)| q.abs() < 1e-10));
        assert!(r.norm_drift < 1e-9);
    }

    #[test]
    fn short_polynomial_transport() {
        // d = 5 a0 over two trap periods.
        let s = ground(20.0);
        let p = PolynomialProtocol::new(5.0, 4.0 * PI, 1.0).unwrap();
        let problem = TransportProblem::new(p.trap(), s.coupling());
        let opts = PropagationOptions { snapshot_stride: 200, ..Default::default() };
        let r = propagate(&problem, &s, &opts).unwrap();
        assert!(r.final_fidelity > 0.9999, "{}", r.final_fidelity);
        assert!(r.excitation_energy.abs() < 1e-6);
        let path = problem.classical_path().unwrap();
        assert!(r.max_com_deviation(&path) < 5e-3);
        let mode = TransportMode::for_problem(s.clone(), &problem).unwrap();
        for snap in &r.snapshots {
            let m = mode.state(
                snap.t,
                *snap.psi.grid(),
                ModeFrame::CoMoving { offset: snap.frame_offset, velocity: snap.frame_velocity },
            );
            assert!(fidelity(&m, &snap.psi).unwrap() > 0.9999, "t = {}", snap.t);
        }
    }

    #[test]
    fn lab_frame_agrees_with_moving_frame() {
        let s = ground(20.0);
        let p = PolynomialProtocol::new(5.0, 1.5 * PI, 1.0).unwrap();
        let problem = TransportProblem::new(p.trap(), s.coupling());
        let a = propagate(&problem, &s, &Default::default()).unwrap();
        let b = propagate(&problem, &s, &PropagationOptions { frame: Frame::Lab, ..Default::default() }).unwrap();
        assert!((a.final_fidelity - b.final_fidelity).abs() < 1e-7);
        let path = problem.classical_path().unwrap();
        assert!(b.max_com_deviation(&path) < 5e-3);
    }

    #[test]
    fn noise_response_is_exact_for_constant_input() {
        let nd = NoiseDrive { lambda: 1.0, dt: 0.01, samples: vec![1.0; 625] };
        let (b, v) = *nd.response().last().unwrap();
        let t: f64 = 6.25;
        assert!((b - (1.0 - t.cos())).abs() < 1e-12);
        assert!((v - t.sin()).abs() < 1e-12);
        assert!((nd.mean(0.005, 0.015) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bad_inputs() {
        let s = ground(0.0);
        let problem = TransportProblem::new(Trajectory::stationary(0.0), 0.0);
        let opts = PropagationOptions { dt: 0.1, ..Default::default() };
        assert!(matches!(propagate(&problem, &s, &opts), Err(Error::InvalidParameter(_))));
        let wrong = TransportProblem::new(Trajectory::stationary(0.0), 5.0);
        assert!(matches!(propagate(&wrong, &s, &Default::default()), Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn escape_is_reported() {
        let s = ground(0.0);
        let p = PolynomialProtocol::new(50.0, PI, 1.0).unwrap();
        let problem = TransportProblem::new(p.trap(), 0.0);
        let opts = PropagationOptions {
            grid: GridSpec::Fixed(Grid1D::symmetric(6.0, 4096).unwrap()),
            ..Default::default()
        };
        assert!(matches!(propagate(&problem, &s, &opts), Err(Error::FrameEscape { .. })));
        let coarse = PropagationOptions { grid: GridSpec::Fixed(Grid1D::symmetric(6.0, 256).unwrap()), ..opts };
        assert!(matches!(propagate(&problem, &s, &coarse), Err(Error::Unresolved { .. })));
    }

    #[test]
    fn fine_grid_strong_coupling_stays_stationary() {
        // k_max² dt / 2 is about 26 here; unfiltered split-step blows up.
        let s = ground(417.0);
        let trap = Trajectory::piecewise(vec![crate::trajectory::Piece::constant(0.0, 2.0 * PI, 0.0)], 16).unwrap();
        let problem = TransportProblem::new(trap, s.coupling());
        let opts = PropagationOptions {
            grid: GridSpec::Fixed(Grid1D::symmetric(40.0, 4096).unwrap()),
            ..Default::default()
        };
        let r = propagate(&problem, &s, &opts).unwrap();
        assert!(r.final_fidelity > 1.0 - 1e-8, "{}", r.final_fidelity);
        assert!(r.excitation_energy.abs() < 1e-7);
        assert!(r.norm_drift < 1e-9);
    }
}
