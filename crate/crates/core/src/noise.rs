//! White trap-position noise: seeded realizations, the response integrals
//! `beta`, `beta'`, the semi-analytic fidelity of a jittered transport and its
//! Monte Carlo average.
//!
//! Time is scaled, `tau = omega0 t`, and `zeta` is unit-intensity white
//! noise in that variable, discretised as independent Gaussians of variance
//! `1 / dt` held constant on cells of length `dt`. The jitter amplitude
//! `lambda` is a length. Inside this module lengths are in units of `a0`.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::dynamics::{propagate, NoiseDrive, PropagationOptions, TransportProblem};
use crate::grid::{neumaier_sum, Grid1D, WaveFunction};
use crate::groundstate::StationaryState;
use crate::par::{map_indices, Execution};
use crate::spectral::{interpolate, Spectral};
use crate::units::TrapConfig;
use crate::{Error, Result};

/// Default cell length in scaled time.
pub const DEFAULT_DT: f64 = 1e-2;

/// Default number of realizations per average.
pub const DEFAULT_REALIZATIONS: usize = 2000;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRealization {
    pub seed: u64,
    pub dt_scaled: f64,
    pub samples: Vec<f64>,
}

impl NoiseRealization {
    pub fn duration(&self) -> f64 {
        self.dt_scaled * self.samples.len() as f64
    }

    /// Trap-centre jitter `lambda zeta` for the propagator (`lambda` in `a0`).
    pub fn drive(&self, lambda: f64) -> NoiseDrive {
        NoiseDrive { lambda, dt: self.dt_scaled, samples: self.samples.clone() }
    }
}

/// Seed of realization `index` under `master`: SplitMix64 of the pair, so
/// realizations are independent of evaluation order.
pub fn realization_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Noise covering `[0, omega0 t_f]` in scaled time.
pub fn sample_noise(seed: u64, t_f: f64, omega0: f64, dt_scaled: f64) -> Result<NoiseRealization> {
    sample_noise_scaled(seed, omega0 * t_f, dt_scaled)
}

/// Noise covering `[0, duration]` in scaled time. The sample stream depends
/// only on the seed, so a shorter realization is a prefix of a longer one.
pub fn sample_noise_scaled(seed: u64, duration: f64, dt_scaled: f64) -> Result<NoiseRealization> {
    if !(dt_scaled > 0.0 && dt_scaled.is_finite()) {
        return Err(Error::InvalidParameter(format!("dt_scaled must be > 0, got {dt_scaled}")));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(Error::InvalidParameter(format!("duration must be >= 0, got {duration}")));
    }
    let cells = (duration / dt_scaled * (1.0 - 1e-12)).ceil() as usize;
    Ok(sample_cells(seed, cells, dt_scaled))
}

/// Exactly `cells` cells of length `dt_scaled`.
pub fn sample_cells(seed: u64, cells: usize, dt_scaled: f64) -> NoiseRealization {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let scale = 1.0 / dt_scaled.sqrt();
    let samples = (0..cells).map(|_| scale * rng.sample::<f64, _>(StandardNormal)).collect();
    NoiseRealization { seed, dt_scaled, samples }
}

/// `beta = int_0^T zeta(tau) sin(T - tau) dtau` and the cosine integral
/// `beta' = int_0^T zeta(tau) cos(T - tau) dtau`, both dimensionless.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaPair {
    pub beta: f64,
    pub beta_dot: f64,
    /// Final scaled time `T = omega0 t_F`.
    pub t_final: f64,
}

/// Both integrals with the exact integral of the kernel over every cell.
pub fn beta_integrals(zeta: &NoiseRealization, t_final: f64) -> Result<BetaPair> {
    if zeta.duration() < t_final * (1.0 - 1e-12) {
        return Err(Error::Coverage(format!(
            "realization covers scaled time {} but {} is needed",
            zeta.duration(),
            t_final
        )));
    }
    let dt = zeta.dt_scaled;
    let mut sin_terms = Vec::with_capacity(zeta.samples.len());
    let mut cos_terms = Vec::with_capacity(zeta.samples.len());
    for (j, &z) in zeta.samples.iter().enumerate() {
        let a = j as f64 * dt;
        if a >= t_final {
            break;
        }
        let b = ((j + 1) as f64 * dt).min(t_final);
        let (sa, ca) = (t_final - a).sin_cos();
        let (sb, cb) = (t_final - b).sin_cos();
        sin_terms.push(z * (cb - ca));
        cos_terms.push(z * (sa - sb));
    }
    Ok(BetaPair {
        beta: neumaier_sum(sin_terms),
        beta_dot: neumaier_sum(cos_terms),
        t_final,
    })
}

/// Overlap `|int exp(i k x) chi(x + s) chi(x) dx|` for a fixed profile.
#[derive(Debug, Clone)]
pub struct OverlapEvaluator {
    chi: WaveFunction,
    spectral: Spectral,
    spectrum: Vec<Complex64>,
    reach: f64,
    k_limit: f64,
    extent: f64,
    k_extent: f64,
}

impl OverlapEvaluator {
    pub fn new(chi: &StationaryState) -> Self {
        let src = chi.chi();
        let g = *src.grid();
        let extent = chi.extent(1e-12);
        let k_extent = Spectral::new(g).spectral_extent(src, 1e-12);
        // Pad to twice the width with the same spacing.
        let pad = (g.len() / 2) as f64 * g.dx();
        let grid = Grid1D::new(g.x_min() - pad, g.x_max() + pad, 2 * g.len()).expect("padded grid");
        let chi = interpolate(src, grid, 0.0);
        let spectral = Spectral::new(grid);
        let spectrum = spectral.spectrum(&chi);
        let reach = 0.5 * grid.length() - extent;
        let k_limit = 2.0 * std::f64::consts::PI / grid.dx() - 2.0 * k_extent;
        Self { chi, spectral, spectrum, reach, k_limit, extent, k_extent }
    }

    pub fn overlap(&self, shift: f64, kick: f64) -> f64 {
        if shift == 0.0 && kick == 0.0 {
            return 1.0;
        }
        if shift.abs() > self.reach || kick.abs() > self.k_limit {
            return self.overlap_wide(shift, kick);
        }
        let mut data = self.spectrum.clone();
        for (v, &k) in data.iter_mut().zip(self.spectral.wavenumbers()) {
            *v *= Complex64::from_polar(1.0, k * shift);
        }
        let mut scratch = self.spectral.scratch();
        self.spectral.inverse(&mut data, &mut scratch);
        let g = self.chi.grid();
        let terms = data.iter().zip(self.chi.amplitudes()).enumerate().map(|(j, (s, c))| {
            Complex64::from_polar(1.0, kick * g.x(j)) * s * c.conj()
        });
        let (mut re, mut im) = (Vec::with_capacity(g.len()), Vec::with_capacity(g.len()));
        for t in terms {
            re.push(t.re);
            im.push(t.im);
        }
        let dx = g.dx();
        (Complex64::new(neumaier_sum(re), neumaier_sum(im)) * dx).norm().min(1.0)
    }

    /// Same overlap on a grid sized for the requested shift and kick.
    fn overlap_wide(&self, shift: f64, kick: f64) -> f64 {
        let half = self.extent + 0.5 * shift.abs() + 4.0;
        let dx = (std::f64::consts::PI / (kick.abs() + 2.0 * self.k_extent)).min(self.chi.grid().dx());
        let n = ((2.0 * half / dx).ceil() as usize).next_power_of_two();
        let grid = Grid1D::symmetric(half, n).expect("overlap grid");
        // Centre the two copies symmetrically: chi(y + s/2) chi(y - s/2).
        let a = interpolate(&self.chi, grid, -0.5 * shift);
        let b = interpolate(&self.chi, grid, 0.5 * shift);
        let (mut re, mut im) = (Vec::with_capacity(n), Vec::with_capacity(n));
        for (j, (u, v)) in a.amplitudes().iter().zip(b.amplitudes()).enumerate() {
            let t = Complex64::from_polar(1.0, kick * grid.x(j)) * u * v.conj();
            re.push(t.re);
            im.push(t.im);
        }
        (Complex64::new(neumaier_sum(re), neumaier_sum(im)) * grid.dx()).norm().min(1.0)
    }
}

/// `F = |int exp(i lambda beta' x) chi(x + lambda beta) chi(x) dx|`, with
/// `lambda` in `a0`.
pub fn semianalytic_fidelity(chi: &StationaryState, pair: &BetaPair, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(1.0);
    }
    Ok(OverlapEvaluator::new(chi).overlap(lambda * pair.beta, lambda * pair.beta_dot))
}

/// One averaged point of a noise sweep, in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FidelityRecord {
    /// Jitter amplitude in m.
    pub lambda: f64,
    /// In m/s.
    pub g1_over_hbar: f64,
    /// In s.
    pub t_f: f64,
    pub mean_fidelity: f64,
    pub std_error: f64,
    pub n: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseOptions {
    pub n: usize,
    pub master_seed: u64,
    pub dt_scaled: f64,
    pub execution: Execution,
}

impl Default for NoiseOptions {
    fn default() -> Self {
        Self {
            n: DEFAULT_REALIZATIONS,
            master_seed: 0,
            dt_scaled: DEFAULT_DT,
            execution: Execution::default(),
        }
    }
}

/// `beta` pairs of realizations `0..n` under the master seed.
pub fn beta_ensemble(t_final: f64, opts: &NoiseOptions) -> Result<Vec<BetaPair>> {
    if opts.n == 0 {
        return Err(Error::InvalidParameter("need at least one realization".into()));
    }
    sample_noise_scaled(0, t_final, opts.dt_scaled)?;
    map_indices(opts.execution, opts.n, |i| {
        let seed = realization_seed(opts.master_seed, i as u64);
        let zeta = sample_noise_scaled(seed, t_final, opts.dt_scaled)?;
        beta_integrals(&zeta, t_final)
    })
    .into_iter()
    .collect()
}

/// Mean and standard error of the fidelity over an ensemble; the reduction
/// runs in index order.
pub fn average_over(
    chi: &StationaryState,
    pairs: &[BetaPair],
    lambda: f64,
    execution: Execution,
) -> Result<(f64, f64)> {
    if !(lambda >= 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidParameter(format!("lambda must be >= 0, got {lambda}")));
    }
    if pairs.is_empty() {
        return Err(Error::InvalidParameter("empty ensemble".into()));
    }
    if lambda == 0.0 {
        return Ok((1.0, 0.0));
    }
    let eval = OverlapEvaluator::new(chi);
    let values = map_indices(execution, pairs.len(), |i| {
        eval.overlap(lambda * pairs[i].beta, lambda * pairs[i].beta_dot)
    });
    Ok(mean_and_error(&values))
}

fn mean_and_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = neumaier_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = neumaier_sum(values.iter().map(|v| (v - mean) * (v - mean))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo average of the fidelity for jitter `lambda` (m) at final
/// time `t_f` (s).
pub fn average_fidelity(
    cfg: &TrapConfig,
    chi: &StationaryState,
    t_f: f64,
    lambda: f64,
    opts: &NoiseOptions,
) -> Result<FidelityRecord> {
    if !(t_f >= 0.0) {
        return Err(Error::InvalidParameter(format!("t_f must be >= 0, got {t_f}")));
    }
    let pairs = beta_ensemble(cfg.omega0() * t_f, opts)?;
    let (mean_fidelity, std_error) =
        average_over(chi, &pairs, lambda / cfg.oscillator_length(), opts.execution)?;
    Ok(FidelityRecord {
        lambda,
        g1_over_hbar: cfg.g1_over_hbar(),
        t_f,
        mean_fidelity,
        std_error,
        n: opts.n,
        seed: opts.master_seed,
    })
}

/// Semi-analytic and fully propagated fidelity for one realization covering
/// `[0, t_f]`. The propagator steps are aligned with the noise cells.
pub fn noisy_propagation_crosscheck(
    problem: &TransportProblem,
    ground: &StationaryState,
    zeta: &NoiseRealization,
    lambda: f64,
    opts: &PropagationOptions,
) -> Result<(f64, f64)> {
    let pair = beta_integrals(zeta, problem.t_f())?;
    let semi = semianalytic_fidelity(ground, &pair, lambda)?;
    let noisy = problem.clone().with_noise(zeta.drive(lambda));
    let full = propagate(&noisy, ground, opts)?.final_fidelity;
    Ok((semi, full))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groundstate::{default_grid_for, solve_ground_state_with};
    use std::f64::consts::PI;

    #[test]
    fn seeded_noise_is_reproducible() {
        let a = sample_noise_scaled(42, 5.0, 0.01).unwrap();
        let b = sample_noise_scaled(42, 5.0, 0.01).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.samples.len(), 500);
        let c = sample_noise_scaled(43, 5.0, 0.01).unwrap();
        assert_ne!(a.samples, c.samples);
        let short = sample_noise_scaled(42, 2.0, 0.01).unwrap();
        assert_eq!(short.samples[..], a.samples[..200]);
    }

    #[test]
    fn seeds_are_distinct() {
        let mut seeds: Vec<u64> = (0..10_000).map(|i| realization_seed(7, i)).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 10_000);
    }

    #[test]
    fn constant_and_zero_input() {
        let t = 2.0 * PI * 0.83;
        let ones = NoiseRealization { seed: 0, dt_scaled: 0.01, samples: vec![1.0; 600] };
        let p = beta_integrals(&ones, t).unwrap();
        assert!((p.beta - (1.0 - t.cos())).abs() < 1e-12);
        assert!((p.beta_dot - t.sin()).abs() < 1e-12);
        let zeros = NoiseRealization { seed: 0, dt_scaled: 0.01, samples: vec![0.0; 600] };
        let p = beta_integrals(&zeros, t).unwrap();
        assert_eq!((p.beta, p.beta_dot), (0.0, 0.0));
        assert!(matches!(beta_integrals(&ones, 10.0), Err(Error::Coverage(_))));
    }

    #[test]
    fn integrals_match_exact_cell_propagation() {
        let zeta = sample_noise_scaled(3, 2.0 * PI, 0.01).unwrap();
        let p = beta_integrals(&zeta, zeta.duration()).unwrap();
        let (b, v) = *zeta.drive(1.0).response().last().unwrap();
        assert!((p.beta - b).abs() < 1e-10 && (p.beta_dot - v).abs() < 1e-10);
    }

    fn ground(g: f64) -> StationaryState {
        solve_ground_state_with(g, &default_grid_for(g), &Default::default()).unwrap()
    }

    #[test]
    fn gaussian_overlap() {
        let s = ground(0.0);
        for (shift, kick) in [(0.5, 0.0), (1.3, 0.0), (0.7, 0.9), (9.0, 0.0), (0.0, 30.0)] {
            let pair = BetaPair { beta: shift, beta_dot: kick, t_final: 1.0 };
            let f = semianalytic_fidelity(&s, &pair, 1.0).unwrap();
            let exact = (-(shift * shift + kick * kick) / 4.0f64).exp();
            assert!((f - exact).abs() < 1e-8, "{shift} {kick}: {f} vs {exact}");
        }
        let pair = BetaPair { beta: 1.0, beta_dot: 1.0, t_final: 1.0 };
        assert_eq!(semianalytic_fidelity(&s, &pair, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn wide_and_native_paths_agree() {
        let s = ground(104.0);
        let eval = OverlapEvaluator::new(&s);
        for (shift, kick) in [(1.0, 0.5), (3.0, -2.0)] {
            let a = eval.overlap(shift, kick);
            let b = eval.overlap_wide(shift, kick);
            assert!((a - b).abs() < 1e-10, "{a} {b}");
        }
    }

    #[test]
    fn average_is_deterministic_and_order_free() {
        let s = ground(50.0);
        let opts = NoiseOptions { n: 64, master_seed: 11, ..Default::default() };
        let pairs = beta_ensemble(2.0 * PI, &opts).unwrap();
        let seq = average_over(&s, &pairs, 0.2, Execution::Sequential).unwrap();
        let par = average_over(&s, &pairs, 0.2, Execution::Parallel).unwrap();
        assert_eq!(seq.0.to_bits(), par.0.to_bits());
        assert_eq!(seq.1.to_bits(), par.1.to_bits());
        assert_eq!(average_over(&s, &pairs, 0.0, Execution::Sequential).unwrap(), (1.0, 0.0));
        assert!(seq.0 < 1.0 && seq.1 > 0.0);
    }

    #[test]
    fn mean_and_error_small_cases() {
        assert_eq!(mean_and_error(&[0.5]), (0.5, 0.0));
        let (m, e) = mean_and_error(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((e - 1.0).abs() < 1e-15);
    }
}
