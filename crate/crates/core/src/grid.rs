//! Uniform periodic grid and complex fields on it.

use num_complex::Complex64;

use crate::{Error, Result};

/// Uniform grid `x_j = x_min + j dx`, `j = 0..n_points`, periodic with period
/// `x_max - x_min` (the point `x_max` itself is not stored).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n_points: usize,
    dx: f64,
}

impl Grid1D {
    pub fn new(x_min: f64, x_max: f64, n_points: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite() && x_max > x_min) {
            return Err(Error::InvalidParameter(format!(
                "grid needs x_max > x_min, got [{x_min}, {x_max}]"
            )));
        }
        if n_points < 2 || !n_points.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= 2, got {n_points}"
            )));
        }
        // n is a power of two, so dx * n reproduces the length exactly.
        let dx = (x_max - x_min) / n_points as f64;
        Ok(Self { x_min, x_max, n_points, dx })
    }

    /// Grid on `[-half_width, half_width)`.
    pub fn symmetric(half_width: f64, n_points: usize) -> Result<Self> {
        Self::new(-half_width, half_width, n_points)
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n_points
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn length(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn x(&self, j: usize) -> f64 {
        self.x_min + j as f64 * self.dx
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n_points).map(|j| self.x(j))
    }

    /// Largest wave number representable on the grid, `pi / dx`.
    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI / self.dx
    }
}

/// Compensated (Neumaier) summation.
pub(crate) fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0f64;
    let mut c = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            c += (sum - t) + v;
        } else {
            c += (v - t) + sum;
        }
        sum = t;
    }
    sum + c
}

/// Complex field sampled on a [`Grid1D`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    grid: Grid1D,
    amplitudes: Vec<Complex64>,
}

/// Norms closer to one than this are treated as already normalized, which
/// makes `normalize` idempotent bit for bit.
const NORM_SLACK: f64 = 1e-13;

impl WaveFunction {
    pub fn new(grid: Grid1D, amplitudes: Vec<Complex64>) -> Result<Self> {
        if amplitudes.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} amplitudes for a grid of {} points",
                amplitudes.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, amplitudes })
    }

    pub fn from_fn(grid: Grid1D, f: impl Fn(f64) -> Complex64) -> Self {
        let amplitudes = grid.points().map(f).collect();
        Self { grid, amplitudes }
    }

    pub fn from_real_fn(grid: Grid1D, f: impl Fn(f64) -> f64) -> Self {
        Self::from_fn(grid, |x| Complex64::new(f(x), 0.0))
    }

    /// Normalized harmonic-oscillator ground state `pi^{-1/4} exp(-(x-center)^2 / 2)`.
    pub fn gaussian(grid: Grid1D, center: f64) -> Self {
        let c = std::f64::consts::PI.powf(-0.25);
        Self::from_real_fn(grid, |x| c * (-(x - center).powi(2) / 2.0).exp())
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amplitudes
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amplitudes
    }

    /// Discrete norm `sum |psi_j|^2 dx`.
    pub fn norm_squared(&self) -> f64 {
        neumaier_sum(self.amplitudes.iter().map(|a| a.norm_sqr())) * self.grid.dx()
    }

    pub fn normalize(&self) -> Result<Self> {
        let n2 = self.norm_squared();
        if !(n2.is_finite() && n2 > 0.0) {
            return Err(Error::Degenerate(format!("cannot normalize a state of norm {n2}")));
        }
        if (n2 - 1.0).abs() <= NORM_SLACK {
            return Ok(self.clone());
        }
        let scale = 1.0 / n2.sqrt();
        Ok(Self {
            grid: self.grid,
            amplitudes: self.amplitudes.iter().map(|a| a * scale).collect(),
        })
    }

    /// `<self|other> = sum conj(self_j) other_j dx`.
    pub fn inner(&self, other: &WaveFunction) -> Result<Complex64> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let mut re = Vec::with_capacity(self.amplitudes.len());
        let mut im = Vec::with_capacity(self.amplitudes.len());
        for (a, b) in self.amplitudes.iter().zip(&other.amplitudes) {
            let p = a.conj() * b;
            re.push(p.re);
            im.push(p.im);
        }
        let dx = self.grid.dx();
        Ok(Complex64::new(neumaier_sum(re) * dx, neumaier_sum(im) * dx))
    }

    pub fn density(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|a| a.norm_sqr()).collect()
    }

    /// `<x>` for a normalized state.
    pub fn mean_position(&self) -> f64 {
        let dx = self.grid.dx();
        neumaier_sum(
            self.amplitudes
                .iter()
                .enumerate()
                .map(|(j, a)| self.grid.x(j) * a.norm_sqr()),
        ) * dx
    }

    pub fn scale(&mut self, factor: Complex64) {
        for a in &mut self.amplitudes {
            *a *= factor;
        }
    }

    /// Multiplies by `exp(i k x)`.
    pub fn boost(&mut self, k: f64) {
        if k == 0.0 {
            return;
        }
        let grid = self.grid;
        for (j, a) in self.amplitudes.iter_mut().enumerate() {
            *a *= Complex64::from_polar(1.0, k * grid.x(j));
        }
    }

    pub fn is_finite(&self) -> bool {
        self.amplitudes.iter().all(|a| a.re.is_finite() && a.im.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_spacing_is_exact() {
        let g = Grid1D::new(-3.7, 11.3, 1 << 12).unwrap();
        assert_eq!(g.dx() * g.len() as f64, g.x_max() - g.x_min());
        assert!(Grid1D::new(0.0, 1.0, 1000).is_err());
        assert!(Grid1D::new(0.0, 1.0, 1).is_err());
        assert!(Grid1D::new(1.0, 1.0, 8).is_err());
    }

    #[test]
    fn normalize_constant() {
        let g = Grid1D::new(0.0, 5.0, 64).unwrap();
        let psi = WaveFunction::new(g, vec![Complex64::new(3.0, 0.0); 64]).unwrap();
        let n = psi.normalize().unwrap();
        let expected = 1.0 / (64.0 * g.dx()).sqrt();
        for a in n.amplitudes() {
            assert!((a.re - expected).abs() < 1e-14);
            assert_eq!(a.im, 0.0);
        }
    }

    #[test]
    fn normalized_gaussian_unchanged() {
        let g = Grid1D::symmetric(12.0, 1024).unwrap();
        let psi = WaveFunction::gaussian(g, 0.3);
        let n = psi.normalize().unwrap();
        for (a, b) in psi.amplitudes().iter().zip(n.amplitudes()) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn phase_factor_does_not_change_modulus() {
        let g = Grid1D::symmetric(10.0, 256).unwrap();
        let psi = WaveFunction::from_real_fn(g, |x| (-(x - 1.0).powi(2)).exp() * 2.0);
        let mut scaled = psi.clone();
        scaled.scale(Complex64::new(0.0, 7.0));
        let a = psi.normalize().unwrap();
        let b = scaled.normalize().unwrap();
        for (x, y) in a.amplitudes().iter().zip(b.amplitudes()) {
            assert!((x.norm() - y.norm()).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_state_is_degenerate() {
        let g = Grid1D::symmetric(1.0, 8).unwrap();
        let psi = WaveFunction::new(g, vec![Complex64::new(0.0, 0.0); 8]).unwrap();
        assert!(matches!(psi.normalize(), Err(Error::Degenerate(_))));
    }

    #[test]
    fn inner_product_needs_same_grid() {
        let a = WaveFunction::gaussian(Grid1D::symmetric(8.0, 128).unwrap(), 0.0);
        let b = WaveFunction::gaussian(Grid1D::symmetric(8.0, 256).unwrap(), 0.0);
        assert_eq!(a.inner(&b), Err(Error::GridMismatch));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn normalize_is_idempotent(
                amps in proptest::collection::vec((-5.0f64..5.0, -5.0f64..5.0), 64),
                lo in -10.0f64..0.0,
                width in 0.5f64..20.0,
            ) {
                prop_assume!(amps.iter().any(|(r, i)| r.abs() + i.abs() > 1e-3));
                let g = Grid1D::new(lo, lo + width, 64).unwrap();
                let psi = WaveFunction::new(g, amps.iter().map(|&(r, i)| Complex64::new(r, i)).collect()).unwrap();
                let once = psi.normalize().unwrap();
                let twice = once.normalize().unwrap();
                prop_assert_eq!(&once, &twice);
                prop_assert!((once.norm_squared() - 1.0).abs() < 1e-10);
            }
        }
    }
}
