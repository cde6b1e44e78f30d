//! Physical parameters and the conversion to harmonic-oscillator units.

use std::fmt;
use std::str::FromStr;

use crate::{Error, Result};

/// Reduced Planck constant (CODATA 2018, exact), J·s.
pub const HBAR: f64 = 1.054_571_817e-34;

/// Mass of a ⁸⁷Rb atom, kg.
pub const RB87_MASS: f64 = 1.443_160_60e-25;

/// Physical parameters of a transport experiment.
///
/// `g1` is the 1D mean-field coupling in J·m. Use [`TrapConfig::with_g1_over_hbar`]
/// to pass it as `g1 / hbar` in m/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrapConfig {
    mass: f64,
    omega0: f64,
    g1: f64,
    d: f64,
    hbar: f64,
    oscillator_length: f64,
}

impl TrapConfig {
    pub fn new(mass: f64, omega0: f64, g1: f64, d: f64) -> Result<Self> {
        Self::with_hbar(mass, omega0, g1, d, HBAR)
    }

    /// Same as [`TrapConfig::new`] with an explicit value of ħ.
    pub fn with_hbar(mass: f64, omega0: f64, g1: f64, d: f64, hbar: f64) -> Result<Self> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        let non_negative = |v: f64| v.is_finite() && v >= 0.0;
        if !positive(mass) {
            return Err(Error::InvalidParameter(format!("mass must be > 0, got {mass}")));
        }
        if !positive(omega0) {
            return Err(Error::InvalidParameter(format!("omega0 must be > 0, got {omega0}")));
        }
        if !positive(hbar) {
            return Err(Error::InvalidParameter(format!("hbar must be > 0, got {hbar}")));
        }
        if !non_negative(g1) {
            return Err(Error::InvalidParameter(format!("g1 must be >= 0, got {g1}")));
        }
        if !non_negative(d) {
            return Err(Error::InvalidParameter(format!("distance must be >= 0, got {d}")));
        }
        Ok(Self {
            mass,
            omega0,
            g1,
            d,
            hbar,
            oscillator_length: (hbar / (mass * omega0)).sqrt(),
        })
    }

    /// Coupling given as `g1 / hbar` in m/s.
    pub fn with_g1_over_hbar(mass: f64, omega0: f64, g1_over_hbar: f64, d: f64) -> Result<Self> {
        Self::new(mass, omega0, g1_over_hbar * HBAR, d)
    }

    /// ⁸⁷Rb in a trap of frequency `omega0`.
    pub fn rb87(omega0: f64, g1_over_hbar: f64, d: f64) -> Result<Self> {
        Self::with_g1_over_hbar(RB87_MASS, omega0, g1_over_hbar, d)
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn g1(&self) -> f64 {
        self.g1
    }

    pub fn g1_over_hbar(&self) -> f64 {
        self.g1 / self.hbar
    }

    pub fn distance(&self) -> f64 {
        self.d
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    /// `a0 = sqrt(hbar / (m omega0))`.
    pub fn oscillator_length(&self) -> f64 {
        self.oscillator_length
    }

    /// Coupling in oscillator units, `g1 / (hbar omega0 a0)`.
    pub fn coupling(&self) -> f64 {
        self.g1 / (self.hbar * self.omega0 * self.oscillator_length)
    }

    pub fn energy_unit(&self) -> f64 {
        self.hbar * self.omega0
    }

    pub fn with_coupling_over_hbar(&self, g1_over_hbar: f64) -> Result<Self> {
        Self::with_hbar(self.mass, self.omega0, g1_over_hbar * self.hbar, self.d, self.hbar)
    }

    pub fn with_distance(&self, d: f64) -> Result<Self> {
        Self::with_hbar(self.mass, self.omega0, self.g1, d, self.hbar)
    }

    /// Scale factor `s` such that `value_si = s * value_dimensionless`.
    pub fn unit_scale(&self, unit: Unit) -> f64 {
        let a0 = self.oscillator_length;
        let w = self.omega0;
        match unit {
            Unit::Length => a0,
            Unit::Time => 1.0 / w,
            Unit::Energy => self.hbar * w,
            Unit::Velocity => a0 * w,
            Unit::Acceleration => a0 * w * w,
            Unit::AngularFrequency => w,
            Unit::Force => self.mass * a0 * w * w,
            Unit::Coupling => self.hbar * w * a0,
            Unit::CouplingOverHbar => w * a0,
        }
    }

    pub fn to_dimensionless(&self, value: f64, unit: Unit) -> f64 {
        value / self.unit_scale(unit)
    }

    pub fn from_dimensionless(&self, value: f64, unit: Unit) -> f64 {
        value * self.unit_scale(unit)
    }

    /// Converts a value tagged with a unit string such as `"m"` or `"m/s^2"`.
    pub fn to_dimensionless_tagged(&self, value: f64, tag: &str) -> Result<f64> {
        Ok(self.to_dimensionless(value, tag.parse()?))
    }

    pub fn from_dimensionless_tagged(&self, value: f64, tag: &str) -> Result<f64> {
        Ok(self.from_dimensionless(value, tag.parse()?))
    }
}

/// Physical quantity kinds that have an oscillator-unit counterpart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Unit {
    Length,
    Time,
    Energy,
    Velocity,
    Acceleration,
    AngularFrequency,
    Force,
    /// g1 in J·m.
    Coupling,
    /// g1/ħ in m/s.
    CouplingOverHbar,
}

impl Unit {
    pub const ALL: [Unit; 9] = [
        Unit::Length,
        Unit::Time,
        Unit::Energy,
        Unit::Velocity,
        Unit::Acceleration,
        Unit::AngularFrequency,
        Unit::Force,
        Unit::Coupling,
        Unit::CouplingOverHbar,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Unit::Length => "m",
            Unit::Time => "s",
            Unit::Energy => "J",
            Unit::Velocity => "m/s",
            Unit::Acceleration => "m/s^2",
            Unit::AngularFrequency => "rad/s",
            Unit::Force => "N",
            Unit::Coupling => "J*m",
            Unit::CouplingOverHbar => "g1/hbar[m/s]",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Unit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Unit::ALL
            .into_iter()
            .find(|u| u.tag() == s)
            .ok_or_else(|| Error::UnknownUnit(s.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn rb() -> TrapConfig {
        TrapConfig::rb87(2.0 * PI * 50.0, 0.05, 1.6e-3).unwrap()
    }

    #[test]
    fn natural_units_are_one() {
        let cfg = rb();
        let a0 = cfg.oscillator_length();
        assert!((cfg.to_dimensionless(a0, Unit::Length) - 1.0).abs() < 1e-15);
        assert!((cfg.to_dimensionless(1.0 / cfg.omega0(), Unit::Time) - 1.0).abs() < 1e-15);
        assert!((cfg.to_dimensionless(cfg.energy_unit(), Unit::Energy) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rubidium_oscillator_length() {
        // sqrt(1.054571817e-34 / (1.44316060e-25 * 2π·50)), evaluated independently.
        let cfg = rb();
        let expected = 1.525_126_306_795e-6;
        assert!((cfg.oscillator_length() / expected - 1.0).abs() < 1e-11);
        let direct = (HBAR / (RB87_MASS * cfg.omega0())).sqrt();
        assert!((cfg.oscillator_length() / direct - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coupling_in_oscillator_units() {
        let cfg = rb();
        // 0.05 / (2π·50 · a0)
        assert!((cfg.coupling() - 104.355_253_976_5).abs() < 1e-6);
        assert!((cfg.to_dimensionless(0.05, Unit::CouplingOverHbar) - cfg.coupling()).abs() < 1e-9);
    }

    #[test]
    fn unknown_tag_is_rejected() {
        let cfg = rb();
        assert_eq!(
            cfg.to_dimensionless_tagged(1.0, "furlong"),
            Err(Error::UnknownUnit("furlong".into()))
        );
        assert!(cfg.to_dimensionless_tagged(1.0, "m/s^2").is_ok());
    }

    #[test]
    fn invalid_configs() {
        assert!(TrapConfig::new(0.0, 1.0, 0.0, 1.0).is_err());
        assert!(TrapConfig::new(1.0, -1.0, 0.0, 1.0).is_err());
        assert!(TrapConfig::new(1.0, 1.0, -1.0, 1.0).is_err());
        assert!(TrapConfig::new(1.0, 1.0, 0.0, -1.0).is_err());
        assert!(TrapConfig::new(1.0, 1.0, 0.0, 0.0).is_ok());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn unit_round_trip(value in -1e6f64..1e6, idx in 0usize..9, hz in 1.0f64..1e3) {
                let cfg = TrapConfig::rb87(2.0 * PI * hz, 0.1, 1e-3).unwrap();
                let unit = Unit::ALL[idx];
                let back = cfg.from_dimensionless(cfg.to_dimensionless(value, unit), unit);
                prop_assert!((back - value).abs() <= 1e-12 * value.abs().max(f64::MIN_POSITIVE));
                let tagged: Unit = unit.tag().parse().unwrap();
                prop_assert_eq!(tagged, unit);
            }
        }
    }
}
