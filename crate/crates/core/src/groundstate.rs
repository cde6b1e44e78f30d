//! Ground state of the stationary 1D Gross–Pitaevskii equation
//! `[-1/2 d²/dx² + x²/2 + kappa x⁴ + g |chi|²] chi = mu chi`
//! in oscillator units.
//!
//! The solver first relaxes with second-order split-step imaginary-time
//! evolution (ramping the step down as the residual stagnates), then polishes
//! with a kinetically preconditioned gradient iteration whose fixed point is
//! the exact discrete eigenproblem. Convergence is judged on the residual
//! `||(H - mu) chi||`, not on the energy.

use num_complex::Complex64;

use crate::grid::{neumaier_sum, Grid1D, WaveFunction};
use crate::spectral::Spectral;
use crate::units::TrapConfig;
use crate::{Error, Result};

/// Chemical potential in the Thomas–Fermi limit, `(3 g / 4)^{2/3} / 2^{1/3}`.
pub fn thomas_fermi_mu(coupling: f64) -> f64 {
    (0.75 * coupling).powf(2.0 / 3.0) * 0.5f64.powf(1.0 / 3.0)
}

/// Thomas–Fermi radius `sqrt(2 mu_TF)`, zero without interactions.
pub fn thomas_fermi_radius(coupling: f64) -> f64 {
    if coupling > 0.0 {
        (2.0 * thomas_fermi_mu(coupling)).sqrt()
    } else {
        0.0
    }
}

/// 1024 points on `[-(12 + R_TF), 12 + R_TF)`.
pub fn default_grid(cfg: &TrapConfig) -> Grid1D {
    default_grid_for(cfg.coupling())
}

pub fn default_grid_for(coupling: f64) -> Grid1D {
    Grid1D::symmetric(12.0 + thomas_fermi_radius(coupling), 1024).expect("valid grid")
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundStateOptions {
    /// Target residual `||(H - mu) chi||`, in units of hbar omega0.
    pub tol: f64,
    pub max_iterations: usize,
    pub initial_step: f64,
    /// Smallest imaginary-time step before switching to the polishing stage.
    pub min_step: f64,
    /// Steps between residual evaluations.
    pub check_every: usize,
    /// Quartic trap correction `kappa x⁴`.
    pub quartic: f64,
    pub record_energy: bool,
}

impl Default for GroundStateOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iterations: 200_000,
            initial_step: 0.05,
            min_step: 1e-3,
            check_every: 25,
            quartic: 0.0,
            record_energy: false,
        }
    }
}

/// Energy contributions per particle, in units of hbar omega0.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Energies {
    pub kinetic: f64,
    pub potential: f64,
    /// `(g / 2) int |chi|⁴`.
    pub interaction: f64,
}

impl Energies {
    pub fn total(&self) -> f64 {
        self.kinetic + self.potential + self.interaction
    }

    /// `K + P + 2 I`, equal to `mu` for a stationary state.
    pub fn chemical_potential(&self) -> f64 {
        self.kinetic + self.potential + 2.0 * self.interaction
    }

    /// `2 K - 2 P + I`, zero for the harmonic ground state in 1D.
    pub fn virial(&self) -> f64 {
        2.0 * self.kinetic - 2.0 * self.potential + self.interaction
    }
}

#[derive(Debug, Clone)]
pub struct StationaryState {
    chi: WaveFunction,
    mu: f64,
    energies: Energies,
    coupling: f64,
    quartic: f64,
    residual: f64,
    iterations: usize,
    energy_trace: Vec<f64>,
}

impl StationaryState {
    pub fn chi(&self) -> &WaveFunction {
        &self.chi
    }

    pub fn grid(&self) -> &Grid1D {
        self.chi.grid()
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn mu_si(&self, cfg: &TrapConfig) -> f64 {
        self.mu * cfg.energy_unit()
    }

    pub fn energies(&self) -> Energies {
        self.energies
    }

    pub fn coupling(&self) -> f64 {
        self.coupling
    }

    pub fn quartic(&self) -> f64 {
        self.quartic
    }

    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn iterations(&self) -> usize {
        self.iterations
    }

    /// Total energy after every relaxation step, when recorded.
    pub fn energy_trace(&self) -> &[f64] {
        &self.energy_trace
    }

    /// Half-width of the region where `|chi| > rel * max |chi|`.
    pub fn extent(&self, rel: f64) -> f64 {
        let peak = self.chi.amplitudes().iter().map(|a| a.norm()).fold(0.0, f64::max);
        let g = self.chi.grid();
        self.chi
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > rel * peak)
            .map(|(j, _)| g.x(j).abs())
            .fold(0.0, f64::max)
    }

    /// Rebuilds a stationary state from a stored profile (e.g. a file dump),
    /// recomputing its energies and residual.
    pub fn from_profile(chi: WaveFunction, coupling: f64, quartic: f64) -> Result<Self> {
        let chi = chi.normalize()?;
        let spectral = Spectral::new(*chi.grid());
        let energies = energies_on(&spectral, &chi, coupling, quartic);
        let (mu, residual) = residual_on(&spectral, &chi, coupling, quartic);
        Ok(Self {
            chi,
            mu,
            energies,
            coupling,
            quartic,
            residual,
            iterations: 0,
            energy_trace: Vec::new(),
        })
    }
}

fn trap_potential(x: f64, quartic: f64) -> f64 {
    0.5 * x * x + quartic * x.powi(4)
}

fn energies_on(spectral: &Spectral, psi: &WaveFunction, coupling: f64, quartic: f64) -> Energies {
    let g = psi.grid();
    let dx = g.dx();
    let kinetic = spectral.kinetic_energy(psi);
    let potential = neumaier_sum(
        psi.amplitudes()
            .iter()
            .enumerate()
            .map(|(j, a)| trap_potential(g.x(j), quartic) * a.norm_sqr()),
    ) * dx;
    let interaction =
        0.5 * coupling * neumaier_sum(psi.amplitudes().iter().map(|a| a.norm_sqr().powi(2))) * dx;
    Energies { kinetic, potential, interaction }
}

/// `H psi` for the stationary Hamiltonian.
fn apply_h(spectral: &Spectral, psi: &WaveFunction, coupling: f64, quartic: f64) -> Vec<Complex64> {
    let g = psi.grid();
    let mut h = spectral.kinetic_apply(psi);
    for (j, (hv, a)) in h.iter_mut().zip(psi.amplitudes()).enumerate() {
        *hv += (trap_potential(g.x(j), quartic) + coupling * a.norm_sqr()) * a;
    }
    h
}

/// `(mu, ||(H - mu) psi||)` for a normalized state.
fn residual_on(spectral: &Spectral, psi: &WaveFunction, coupling: f64, quartic: f64) -> (f64, f64) {
    let h = apply_h(spectral, psi, coupling, quartic);
    let dx = psi.grid().dx();
    let mu = neumaier_sum(psi.amplitudes().iter().zip(&h).map(|(a, hv)| (a.conj() * hv).re)) * dx;
    let r = neumaier_sum(psi.amplitudes().iter().zip(&h).map(|(a, hv)| (hv - mu * a).norm_sqr())) * dx;
    (mu, r.sqrt())
}

/// Energy decomposition of a normalized state in the (unshifted) trap.
pub fn energy_decomposition(chi: &WaveFunction, coupling: f64) -> Energies {
    energies_on(&Spectral::new(*chi.grid()), chi, coupling, 0.0)
}

/// Same as [`energy_decomposition`] with a quartic trap correction.
pub fn energy_decomposition_with(chi: &WaveFunction, coupling: f64, quartic: f64) -> Energies {
    energies_on(&Spectral::new(*chi.grid()), chi, coupling, quartic)
}

/// Ground state for a physical configuration at residual tolerance `tol`.
pub fn solve_ground_state(cfg: &TrapConfig, grid: &Grid1D, tol: f64) -> Result<StationaryState> {
    solve_ground_state_with(cfg.coupling(), grid, &GroundStateOptions { tol, ..Default::default() })
}

pub fn solve_ground_state_with(
    coupling: f64,
    grid: &Grid1D,
    opts: &GroundStateOptions,
) -> Result<StationaryState> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tol must be > 0, got {}", opts.tol)));
    }
    if !(coupling >= 0.0 && coupling.is_finite()) {
        return Err(Error::InvalidParameter(format!("coupling must be >= 0, got {coupling}")));
    }
    if !(opts.quartic >= 0.0) {
        return Err(Error::InvalidParameter("quartic coefficient must be >= 0".into()));
    }
    let spectral = Spectral::new(*grid);
    let k2: Vec<f64> = spectral.wavenumbers().iter().map(|k| 0.5 * k * k).collect();
    let xs: Vec<f64> = grid.points().collect();
    let trap: Vec<f64> = xs.iter().map(|&x| trap_potential(x, opts.quartic)).collect();
    let mut scratch = spectral.scratch();

    // Initial guess: Gaussian with the Thomas–Fermi width when that is wider.
    let r_tf = thomas_fermi_radius(coupling);
    let sigma = (r_tf / 2.0).max(1.0);
    let mut psi = WaveFunction::from_real_fn(*grid, |x| (-(x * x) / (2.0 * sigma * sigma)).exp()).normalize()?;

    let mut trace = Vec::new();
    let mut iterations = 0usize;
    let mut step = opts.initial_step;
    let (mut mu, mut residual) = residual_on(&spectral, &psi, coupling, opts.quartic);
    let mut last_check = residual;

    // Stage 1: split-step imaginary-time relaxation. A step that raises the
    // energy is undone and retried with half the step.
    let mut kinetic = k2.iter().map(|k| (-k * step).exp()).collect::<Vec<_>>();
    let mut energy = energies_on(&spectral, &psi, coupling, opts.quartic).total();
    'relax: while residual > opts.tol && iterations < opts.max_iterations {
        for _ in 0..opts.check_every {
            let mut next = psi.clone();
            let amps = next.amplitudes_mut();
            for (j, a) in amps.iter_mut().enumerate() {
                *a *= (-(trap[j] + coupling * a.norm_sqr()) * 0.5 * step).exp();
            }
            spectral.forward(amps, &mut scratch);
            for (a, f) in amps.iter_mut().zip(&kinetic) {
                *a *= f;
            }
            spectral.inverse(amps, &mut scratch);
            for (j, a) in amps.iter_mut().enumerate() {
                *a *= (-(trap[j] + coupling * a.norm_sqr()) * 0.5 * step).exp();
            }
            let next = next.normalize()?;
            iterations += 1;
            let e = energies_on(&spectral, &next, coupling, opts.quartic).total();
            if e > energy {
                if step <= opts.min_step {
                    break 'relax;
                }
                step = (step * 0.5).max(opts.min_step);
                kinetic = k2.iter().map(|k| (-k * step).exp()).collect();
                continue;
            }
            psi = next;
            energy = e;
            if opts.record_energy {
                trace.push(e);
            }
        }
        (mu, residual) = residual_on(&spectral, &psi, coupling, opts.quartic);
        if !residual.is_finite() {
            return Err(Error::NotConverged { iterations, residual });
        }
        if residual > 0.9 * last_check {
            if step <= opts.min_step {
                break;
            }
            step = (step * 0.5).max(opts.min_step);
            kinetic = k2.iter().map(|k| (-k * step).exp()).collect();
        }
        last_check = residual;
    }

    // Stage 2: preconditioned nonlinear conjugate gradient on the unit sphere.
    let shift = mu.max(1.0);
    let precond: Vec<f64> = k2.iter().map(|k| shift / (shift + k)).collect();
    let dx = grid.dx();
    let dot = |a: &[Complex64], b: &[Complex64]| neumaier_sum(a.iter().zip(b).map(|(u, v)| (u.conj() * v).re)) * dx;
    let mut h = apply_h(&spectral, &psi, coupling, opts.quartic);
    let mut grad: Vec<Complex64> = h.iter().zip(psi.amplitudes()).map(|(hv, a)| hv - mu * a).collect();
    let mut prev: Option<(Vec<Complex64>, Vec<Complex64>, f64)> = None;
    let mut alpha = 1e-2;
    let mut best = residual;
    let mut since_best = 0usize;
    while residual > opts.tol && iterations < opts.max_iterations {
        let mut z = grad.clone();
        spectral.forward(&mut z, &mut scratch);
        for (v, w) in z.iter_mut().zip(&precond) {
            *v *= w;
        }
        spectral.inverse(&mut z, &mut scratch);
        let c = dot(psi.amplitudes(), &z);
        for (v, a) in z.iter_mut().zip(psi.amplitudes()) {
            *v -= c * a;
        }
        let zg = dot(&z, &grad);
        let mut dir: Vec<Complex64> = match &prev {
            // Polak–Ribière with automatic restart.
            Some((dir_old, g_old, zg_old)) => {
                let beta = ((zg - dot(&z, g_old)) / zg_old).max(0.0);
                z.iter().zip(dir_old).map(|(zv, pv)| -zv + beta * pv).collect()
            }
            None => z.iter().map(|v| -v).collect(),
        };
        let c = dot(psi.amplitudes(), &dir);
        for (v, a) in dir.iter_mut().zip(psi.amplitudes()) {
            *v -= c * a;
        }
        if dot(&grad, &dir) >= 0.0 {
            dir = z.iter().map(|v| -v).collect();
        }
        let norm = dot(&dir, &dir).sqrt();
        if !(norm > 0.0) {
            break;
        }
        let u: Vec<Complex64> = dir.iter().map(|v| v / norm).collect();
        let on_curve = |a: f64| -> (WaveFunction, Vec<Complex64>) {
            let (s, c) = a.sin_cos();
            let amps = psi.amplitudes().iter().zip(&u).map(|(p, q)| c * p + s * q).collect();
            let tangent = psi.amplitudes().iter().zip(&u).map(|(p, q)| -s * p + c * q).collect();
            (WaveFunction::new(*grid, amps).expect("same grid"), tangent)
        };
        // dE/da = 2 Re <H psi(a), psi'(a)>
        let slope0 = 2.0 * dot(&h, &u);
        let (trial, tangent) = on_curve(alpha);
        let slope_t = 2.0 * dot(&apply_h(&spectral, &trial, coupling, opts.quartic), &tangent);
        let step = if slope_t > slope0 {
            (alpha * slope0 / (slope0 - slope_t)).min(4.0 * alpha)
        } else {
            4.0 * alpha
        };
        let (cand, _) = on_curve(step);
        let cand = cand.normalize()?;
        iterations += 1;
        let e = energies_on(&spectral, &cand, coupling, opts.quartic).total();
        if e > energy + 1e-12 * energy.abs().max(1.0) {
            // Restart along the preconditioned gradient with a smaller trial step.
            prev = None;
            alpha *= 0.25;
            if alpha < 1e-14 {
                break;
            }
            continue;
        }
        alpha = step.max(1e-8);
        psi = cand;
        energy = e.min(energy);
        if opts.record_energy {
            trace.push(e);
        }
        h = apply_h(&spectral, &psi, coupling, opts.quartic);
        mu = dot(psi.amplitudes(), &h);
        let new_grad: Vec<Complex64> = h.iter().zip(psi.amplitudes()).map(|(hv, a)| hv - mu * a).collect();
        residual = dot(&new_grad, &new_grad).sqrt();
        if !residual.is_finite() {
            return Err(Error::NotConverged { iterations, residual });
        }
        prev = Some((dir, std::mem::replace(&mut grad, new_grad), zg));
        if residual < 0.999 * best {
            best = residual;
            since_best = 0;
        } else {
            since_best += 1;
            if since_best > 500 {
                break;
            }
        }
    }
    if !(residual <= opts.tol) {
        return Err(Error::NotConverged { iterations, residual });
    }

    // Imaginary-time relaxation of a positive guess keeps chi real and positive.
    for a in psi.amplitudes_mut() {
        *a = Complex64::new(a.norm(), 0.0);
    }
    let psi = psi.normalize()?;
    let peak = psi.amplitudes().iter().map(|a| a.re).fold(0.0, f64::max);
    let n = grid.len();
    let edge = [0, 1, n - 2, n - 1]
        .iter()
        .map(|&j| psi.amplitudes()[j].re)
        .fold(0.0, f64::max);
    const EDGE_LIMIT: f64 = 1e-8;
    if edge > EDGE_LIMIT * peak {
        return Err(Error::GridTooSmall { ratio: edge / peak, limit: EDGE_LIMIT });
    }
    let energies = energies_on(&spectral, &psi, coupling, opts.quartic);
    let (mu, residual) = residual_on(&spectral, &psi, coupling, opts.quartic);
    Ok(StationaryState {
        chi: psi,
        mu,
        energies,
        coupling,
        quartic: opts.quartic,
        residual,
        iterations,
        energy_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_ground_state() {
        let s = solve_ground_state_with(0.0, &default_grid_for(0.0), &Default::default()).unwrap();
        assert!((s.mu() - 0.5).abs() < 1e-8, "mu = {}", s.mu());
        let e = s.energies();
        assert!((e.kinetic - 0.25).abs() < 1e-8 && (e.potential - 0.25).abs() < 1e-8);
        let exact = WaveFunction::gaussian(*s.grid(), 0.0);
        let overlap = s.chi().inner(&exact).unwrap().norm();
        assert!((overlap - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_energy_integrals() {
        // chi = (pi s²)^{-1/4} exp(-x²/(2 s²)): K = 1/(4 s²), P = s²/4,
        // I = (g/2) / (s sqrt(2 pi)).
        let grid = Grid1D::symmetric(30.0, 2048).unwrap();
        for (s, g) in [(0.6, 0.0), (1.7, 3.0), (2.5, 10.0)] {
            let chi = WaveFunction::from_real_fn(grid, |x| {
                (std::f64::consts::PI * s * s).powf(-0.25) * (-(x * x) / (2.0 * s * s)).exp()
            });
            let e = energy_decomposition(&chi, g);
            assert!((e.kinetic - 0.25 / (s * s)).abs() < 1e-8);
            assert!((e.potential - 0.25 * s * s).abs() < 1e-8);
            let i = 0.5 * g / (s * (2.0 * std::f64::consts::PI).sqrt());
            assert!((e.interaction - i).abs() < 1e-8);
        }
    }

    #[test]
    fn tiny_grid_is_rejected() {
        let grid = Grid1D::symmetric(2.0, 64).unwrap();
        let r = solve_ground_state_with(0.0, &grid, &Default::default());
        assert!(matches!(r, Err(Error::GridTooSmall { .. })), "{r:?}");
    }

    #[test]
    fn iteration_budget() {
        let opts = GroundStateOptions { max_iterations: 10, ..Default::default() };
        let r = solve_ground_state_with(50.0, &default_grid_for(50.0), &opts);
        assert!(matches!(r, Err(Error::NotConverged { .. })));
    }

    fn rb(g1_over_hbar: f64) -> TrapConfig {
        TrapConfig::rb87(2.0 * std::f64::consts::PI * 50.0, g1_over_hbar, 1.6e-3).unwrap()
    }

    #[test]
    fn thomas_fermi_limit() {
        let cfg = rb(0.2);
        let s = solve_ground_state(&cfg, &default_grid(&cfg), 1e-9).unwrap();
        let mu_tf = thomas_fermi_mu(cfg.coupling());
        assert!((s.mu() / mu_tf - 1.0).abs() < 0.02, "mu = {}, TF = {mu_tf}", s.mu());
        let e = s.energies();
        assert!(e.kinetic / e.total() < 0.05);
    }

    #[test]
    fn identities_for_all_couplings() {
        for g in [0.0, 0.05, 0.1, 0.2] {
            let cfg = rb(g);
            let s = solve_ground_state(&cfg, &default_grid(&cfg), 1e-9).unwrap();
            let e = s.energies();
            assert!((s.chi().norm_squared() - 1.0).abs() < 1e-10);
            assert!((s.mu() - e.chemical_potential()).abs() < 1e-6, "g = {g}");
            assert!(e.virial().abs() < 1e-5, "g = {g}: virial {}", e.virial());
            assert!(s.residual() < 1e-9);
            let a = s.chi().amplitudes();
            let n = a.len();
            // x_j and x_{n-j} are mirror images on a symmetric grid.
            for j in 1..n / 2 {
                assert!((a[j].re - a[n - j].re).abs() < 1e-8);
                assert!(a[j].re >= 0.0 && a[j].im == 0.0);
            }
        }
    }

    #[test]
    fn resolution_doubling() {
        let g = rb(0.1).coupling();
        let coarse = default_grid_for(g);
        let fine = Grid1D::new(coarse.x_min(), coarse.x_max(), 2 * coarse.len()).unwrap();
        let a = solve_ground_state_with(g, &coarse, &Default::default()).unwrap();
        let b = solve_ground_state_with(g, &fine, &Default::default()).unwrap();
        assert!((a.mu() - b.mu()).abs() < 1e-8);
    }

    #[test]
    fn energy_is_monotone_during_relaxation() {
        for g in [1.0, 104.0, 417.0] {
            let opts = GroundStateOptions { record_energy: true, ..Default::default() };
            let s = solve_ground_state_with(g, &default_grid_for(g), &opts).unwrap();
            let trace = s.energy_trace();
            assert!(trace.len() > 10);
            for w in trace.windows(2) {
                assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0), "g = {g}: {} -> {}", w[0], w[1]);
            }
        }
    }

    #[test]
    fn quartic_correction_raises_mu() {
        let opts = GroundStateOptions { quartic: 0.01, ..Default::default() };
        let s = solve_ground_state_with(10.0, &default_grid_for(10.0), &opts).unwrap();
        let plain = solve_ground_state_with(10.0, &default_grid_for(10.0), &Default::default()).unwrap();
        assert!(s.mu() > plain.mu());
        assert!(s.residual() < 1e-9);
    }
}
