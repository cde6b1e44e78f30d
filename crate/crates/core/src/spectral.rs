//! FFT plumbing for periodic grids: wave numbers, spectral shifts,
//! derivatives and band-limited interpolation between grids.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::grid::{neumaier_sum, Grid1D, WaveFunction};

/// FFT plans and wave numbers for one grid.
#[derive(Clone)]
pub struct Spectral {
    grid: Grid1D,
    k: Vec<f64>,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).finish()
    }
}

/// Wave numbers in FFT order for `n` points spaced `dx`.
pub fn wavenumbers(n: usize, dx: f64) -> Vec<f64> {
    let dk = 2.0 * std::f64::consts::PI / (n as f64 * dx);
    (0..n)
        .map(|j| {
            let m = if j < n / 2 { j as f64 } else { j as f64 - n as f64 };
            m * dk
        })
        .collect()
}

impl Spectral {
    pub fn new(grid: Grid1D) -> Self {
        let mut planner = FftPlanner::new();
        let n = grid.len();
        Self {
            grid,
            k: wavenumbers(n, grid.dx()),
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    pub fn scratch(&self) -> Vec<Complex64> {
        let len = self
            .fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len());
        vec![Complex64::new(0.0, 0.0); len]
    }

    /// Unnormalized forward transform in place.
    pub fn forward(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.fwd.process_with_scratch(data, scratch);
    }

    /// Inverse transform in place, including the `1/n` factor.
    pub fn inverse(&self, data: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inv.process_with_scratch(data, scratch);
        let s = 1.0 / data.len() as f64;
        for v in data.iter_mut() {
            *v *= s;
        }
    }

    fn check(&self, psi: &WaveFunction) {
        assert_eq!(psi.grid(), &self.grid, "wave function lives on a different grid");
    }

    /// `x -> psi(x + s)`, exact for band-limited periodic fields.
    pub fn shift(&self, psi: &WaveFunction, s: f64) -> WaveFunction {
        self.check(psi);
        let mut out = psi.clone();
        if s == 0.0 {
            return out;
        }
        let mut scratch = self.scratch();
        let data = out.amplitudes_mut();
        self.forward(data, &mut scratch);
        for (v, &k) in data.iter_mut().zip(&self.k) {
            *v *= Complex64::from_polar(1.0, k * s);
        }
        self.inverse(data, &mut scratch);
        out
    }

    /// Spectrum of `psi` (unnormalized FFT).
    pub fn spectrum(&self, psi: &WaveFunction) -> Vec<Complex64> {
        self.check(psi);
        let mut data = psi.amplitudes().to_vec();
        let mut scratch = self.scratch();
        self.forward(&mut data, &mut scratch);
        data
    }

    /// `-(1/2) psi''` evaluated spectrally.
    pub fn kinetic_apply(&self, psi: &WaveFunction) -> Vec<Complex64> {
        let mut data = self.spectrum(psi);
        for (v, &k) in data.iter_mut().zip(&self.k) {
            *v *= 0.5 * k * k;
        }
        let mut scratch = self.scratch();
        self.inverse(&mut data, &mut scratch);
        data
    }

    /// `(1/2) int |psi'|^2 dx` via Parseval.
    pub fn kinetic_energy(&self, psi: &WaveFunction) -> f64 {
        let spec = self.spectrum(psi);
        let n = self.grid.len() as f64;
        let dx = self.grid.dx();
        0.5 * dx / n * neumaier_sum(spec.iter().zip(&self.k).map(|(v, k)| k * k * v.norm_sqr()))
    }

    /// Smallest `|k|` beyond which every spectral amplitude is below `rel`
    /// times the largest one.
    pub fn spectral_extent(&self, psi: &WaveFunction, rel: f64) -> f64 {
        let spec = self.spectrum(psi);
        let peak = spec.iter().map(|v| v.norm()).fold(0.0, f64::max);
        spec.iter()
            .zip(&self.k)
            .filter(|(v, _)| v.norm() > rel * peak)
            .map(|(_, k)| k.abs())
            .fold(0.0, f64::max)
    }
}

/// Band-limited interpolation of `src` onto `dst`: the result is
/// `src(x - offset)` for every `x` of `dst` that falls inside the source
/// period, and zero elsewhere. `src` must have decayed at its borders.
pub fn interpolate(src: &WaveFunction, dst: Grid1D, offset: f64) -> WaveFunction {
    let sg = *src.grid();
    let n = sg.len();
    let spectral = Spectral::new(sg);
    let spec = spectral.spectrum(src);
    let dk = 2.0 * std::f64::consts::PI / sg.length();
    let half = n / 2;
    let inv_n = 1.0 / n as f64;
    WaveFunction::from_fn(dst, |x| {
        let y = x - offset;
        if y < sg.x_min() || y >= sg.x_max() {
            return Complex64::new(0.0, 0.0);
        }
        let u = y - sg.x_min();
        let w = Complex64::from_polar(1.0, dk * u);
        let mut sum = spec[0];
        let mut p = w;
        let mut q = w.conj();
        for m in 1..half {
            sum += spec[m] * p + spec[n - m] * q;
            p *= w;
            q *= w.conj();
        }
        if n >= 2 {
            sum += spec[half] * (dk * half as f64 * u).cos();
        }
        sum * inv_n
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shift_moves_gaussian() {
        let g = Grid1D::symmetric(20.0, 512).unwrap();
        let s = Spectral::new(g);
        let psi = WaveFunction::gaussian(g, 0.0);
        let shifted = s.shift(&psi, -3.25);
        let expected = WaveFunction::gaussian(g, 3.25);
        for (a, b) in shifted.amplitudes().iter().zip(expected.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_kinetic_energy() {
        let g = Grid1D::symmetric(15.0, 512).unwrap();
        let s = Spectral::new(g);
        let psi = WaveFunction::gaussian(g, 0.0);
        assert!((s.kinetic_energy(&psi) - 0.25).abs() < 1e-12);
        let t = s.kinetic_apply(&psi);
        // -(1/2) d²/dx² of the ground state is (1/2 - x²/2) psi.
        for (j, v) in t.iter().enumerate() {
            let x = g.x(j);
            let expected = (0.5 - 0.5 * x * x) * psi.amplitudes()[j].re;
            assert!((v.re - expected).abs() < 1e-10);
        }
    }

    #[test]
    fn interpolation_onto_finer_offset_grid() {
        let src = WaveFunction::gaussian(Grid1D::symmetric(12.0, 128).unwrap(), 0.0);
        let dst = Grid1D::new(-30.0, 50.0, 4096).unwrap();
        let out = interpolate(&src, dst, 7.3);
        let expected = WaveFunction::gaussian(dst, 7.3);
        for (a, b) in out.amplitudes().iter().zip(expected.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }
}
