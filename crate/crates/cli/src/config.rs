//! Experiment configuration: a TOML document with a fixed schema. Unknown
//! keys anywhere are rejected.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use transport_core::units::RB87_MASS;
use transport_core::TrapConfig;

use crate::report::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub trap: TrapSection,
    pub protocol: ProtocolConfig,
    #[serde(default)]
    pub numerics: Numerics,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise: Option<NoiseSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrapSection {
    /// omega0 / 2 pi in Hz.
    #[serde(default = "default_frequency")]
    pub frequency_hz: f64,
    #[serde(default = "default_mass")]
    pub mass_kg: f64,
    /// g1 / hbar in m/s.
    #[serde(default = "default_coupling")]
    pub g1_over_hbar: f64,
    /// Quartic correction `kappa x⁴` in units of `hbar omega0 / a0⁴`.
    #[serde(default)]
    pub quartic: f64,
}

fn default_frequency() -> f64 {
    50.0
}

fn default_mass() -> f64 {
    RB87_MASS
}

fn default_coupling() -> f64 {
    0.05
}

impl Default for TrapSection {
    fn default() -> Self {
        Self {
            frequency_hz: default_frequency(),
            mass_kg: default_mass(),
            g1_over_hbar: default_coupling(),
            quartic: 0.0,
        }
    }
}

/// Lengths in m, times in s.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolConfig {
    Direct {
        distance: f64,
        t_f: f64,
    },
    Polynomial {
        distance: f64,
        t_f: f64,
    },
    Compensating {
        distance: f64,
        t_f: f64,
        #[serde(default)]
        order: Order,
    },
    BangbangDisplacement {
        distance: f64,
        delta: f64,
    },
    BangbangRange {
        distance: f64,
        q_lo: f64,
        q_hi: f64,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Order {
    #[default]
    Quintic,
    Cubic,
}

impl ProtocolConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            Self::Direct { .. } => "direct",
            Self::Polynomial { .. } => "polynomial",
            Self::Compensating { .. } => "compensating",
            Self::BangbangDisplacement { .. } => "bangbang_displacement",
            Self::BangbangRange { .. } => "bangbang_range",
        }
    }

    pub fn distance(&self) -> f64 {
        match *self {
            Self::Direct { distance, .. }
            | Self::Polynomial { distance, .. }
            | Self::Compensating { distance, .. }
            | Self::BangbangDisplacement { distance, .. }
            | Self::BangbangRange { distance, .. } => distance,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FrameName {
    #[default]
    Comoving,
    Lab,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Numerics {
    /// Propagation time step in s; default `2e-3 / omega0`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Propagation grid size; default sized from the protocol.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid_points: Option<usize>,
    #[serde(default)]
    pub snapshot_stride: usize,
    #[serde(default)]
    pub frame: FrameName,
    #[serde(default = "default_tolerance")]
    pub ground_state_tolerance: f64,
    /// Rows per smooth segment in the trajectory file.
    #[serde(default = "default_samples")]
    pub design_samples: usize,
}

fn default_tolerance() -> f64 {
    1e-9
}

fn default_samples() -> usize {
    1001
}

impl Default for Numerics {
    fn default() -> Self {
        Self {
            dt: None,
            grid_points: None,
            snapshot_stride: 0,
            frame: FrameName::Comoving,
            ground_state_tolerance: default_tolerance(),
            design_samples: default_samples(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSection {
    /// Jitter amplitudes in m.
    pub lambdas: Vec<f64>,
    /// Couplings g1 / hbar in m/s; default the trap's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g1_over_hbar: Option<Vec<f64>>,
    /// Final times in s; default the protocol's.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_f: Option<Vec<f64>>,
    #[serde(default = "default_realizations")]
    pub realizations: usize,
    #[serde(default)]
    pub seed: u64,
    /// Noise cell length in units of `1 / omega0`.
    #[serde(default = "default_noise_dt")]
    pub dt_scaled: f64,
}

fn default_realizations() -> usize {
    transport_core::noise::DEFAULT_REALIZATIONS
}

fn default_noise_dt() -> f64 {
    transport_core::noise::DEFAULT_DT
}

/// Command-line values that replace configuration entries.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub dt: Option<f64>,
    pub grid_points: Option<usize>,
}

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "BEC_TRANSPORT_OUT";

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn apply(&mut self, o: &Overrides) -> Result<(), CliError> {
        if let Some(out) = &o.out {
            self.output_dir = Some(out.clone());
        }
        if let Some(seed) = o.seed {
            if let Some(n) = &mut self.noise {
                n.seed = seed;
            }
        }
        if let Some(dt) = o.dt {
            self.numerics.dt = Some(dt);
        }
        if let Some(n) = o.grid_points {
            self.numerics.grid_points = Some(n);
        }
        self.validate()
    }

    /// Output directory: configuration (or `--out`), then the environment
    /// variable, then `./out`.
    pub fn output_dir(&self) -> PathBuf {
        self.output_dir
            .clone()
            .or_else(|| std::env::var_os(OUT_ENV).map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("out"))
    }

    pub fn omega0(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.trap.frequency_hz
    }

    pub fn trap_config(&self) -> Result<TrapConfig, CliError> {
        self.trap_config_for(self.trap.g1_over_hbar)
    }

    pub fn trap_config_for(&self, g1_over_hbar: f64) -> Result<TrapConfig, CliError> {
        TrapConfig::with_g1_over_hbar(self.trap.mass_kg, self.omega0(), g1_over_hbar, self.protocol.distance())
            .map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Config(msg));
        let positive = |name: &str, v: f64| -> Result<(), CliError> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(CliError::Config(format!("{name} must be a positive number, got {v}")))
            }
        };
        positive("trap.frequency_hz", self.trap.frequency_hz)?;
        positive("trap.mass_kg", self.trap.mass_kg)?;
        if !(self.trap.g1_over_hbar >= 0.0 && self.trap.g1_over_hbar.is_finite()) {
            return bad(format!("trap.g1_over_hbar must be >= 0, got {}", self.trap.g1_over_hbar));
        }
        if !(self.trap.quartic >= 0.0 && self.trap.quartic.is_finite()) {
            return bad(format!("trap.quartic must be >= 0, got {}", self.trap.quartic));
        }
        positive("protocol.distance", self.protocol.distance())?;
        match &self.protocol {
            ProtocolConfig::Direct { t_f, .. }
            | ProtocolConfig::Polynomial { t_f, .. }
            | ProtocolConfig::Compensating { t_f, .. } => positive("protocol.t_f", *t_f)?,
            ProtocolConfig::BangbangDisplacement { delta, .. } => positive("protocol.delta", *delta)?,
            ProtocolConfig::BangbangRange { q_lo, q_hi, .. } => {
                if !(q_lo.is_finite() && q_hi.is_finite() && q_lo < q_hi) {
                    return bad(format!("protocol needs q_lo < q_hi, got {q_lo} and {q_hi}"));
                }
            }
        }
        if let Some(dt) = self.numerics.dt {
            positive("numerics.dt", dt)?;
            if dt * self.omega0() >= 0.05 {
                return bad(format!("numerics.dt must be below 0.05 / omega0 = {} s", 0.05 / self.omega0()));
            }
        }
        if let Some(n) = self.numerics.grid_points {
            if n < 16 {
                return bad(format!("numerics.grid_points must be at least 16, got {n}"));
            }
        }
        positive("numerics.ground_state_tolerance", self.numerics.ground_state_tolerance)?;
        if self.numerics.design_samples < 2 {
            return bad("numerics.design_samples must be at least 2".into());
        }
        if let Some(n) = &self.noise {
            if n.lambdas.is_empty() {
                return bad("noise.lambdas must not be empty".into());
            }
            if let Some(l) = n.lambdas.iter().find(|l| !(**l >= 0.0 && l.is_finite())) {
                return bad(format!("noise.lambdas must be >= 0, got {l}"));
            }
            if let Some(gs) = &n.g1_over_hbar {
                if gs.is_empty() || gs.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
                    return bad("noise.g1_over_hbar must be a non-empty list of values >= 0".into());
                }
            }
            if let Some(ts) = &n.t_f {
                if ts.is_empty() || ts.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
                    return bad("noise.t_f must be a non-empty list of positive times".into());
                }
            }
            if n.realizations == 0 {
                return bad("noise.realizations must be at least 1".into());
            }
            positive("noise.dt_scaled", n.dt_scaled)?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[protocol]
kind = "polynomial"
distance = 1.6e-3
t_f = 0.02
"#;

    #[test]
    fn defaults_fill_in() {
        let c = ExperimentConfig::from_toml(MINIMAL).unwrap();
        assert_eq!(c.trap, TrapSection::default());
        assert_eq!(c.numerics, Numerics::default());
        assert_eq!(c.protocol.kind(), "polynomial");
        assert!(c.noise.is_none());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        for extra in [
            "\n[trap]\nfrequncy_hz = 50\n",
            "\n[numerics]\ndt_s = 1e-6\n",
            "\nextra = 1\n",
        ] {
            let text = format!("{MINIMAL}{extra}");
            assert!(matches!(ExperimentConfig::from_toml(&text), Err(CliError::Config(_))), "{extra}");
        }
        let wrong_field = "[protocol]\nkind = \"direct\"\ndistance = 1e-3\nt_f = 0.02\ndelta = 1e-4\n";
        assert!(matches!(ExperimentConfig::from_toml(wrong_field), Err(CliError::Config(_))));
        let wrong_kind = "[protocol]\nkind = \"teleport\"\ndistance = 1e-3\n";
        assert!(matches!(ExperimentConfig::from_toml(wrong_kind), Err(CliError::Config(_))));
    }

    #[test]
    fn out_of_range_values_are_rejected() {
        let neg = MINIMAL.replace("t_f = 0.02", "t_f = -0.02");
        assert!(ExperimentConfig::from_toml(&neg).is_err());
        let big_dt = format!("{MINIMAL}\n[numerics]\ndt = 1e-3\n");
        assert!(ExperimentConfig::from_toml(&big_dt).is_err());
        let range = "[protocol]\nkind = \"bangbang_range\"\ndistance = 1e-3\nq_lo = 1e-3\nq_hi = 0.0\n";
        assert!(ExperimentConfig::from_toml(range).is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let text = format!("{MINIMAL}\n[noise]\nlambdas = [0.0, 1e-8]\nseed = 7\n");
        let c = ExperimentConfig::from_toml(&text).unwrap();
        let back = ExperimentConfig::from_toml(&c.to_toml()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn overrides_apply() {
        let text = format!("{MINIMAL}\n[noise]\nlambdas = [0.0]\n");
        let mut c = ExperimentConfig::from_toml(&text).unwrap();
        c.apply(&Overrides { out: Some("x".into()), seed: Some(9), dt: Some(1e-6), grid_points: Some(1024) })
            .unwrap();
        assert_eq!(c.output_dir(), PathBuf::from("x"));
        assert_eq!(c.noise.as_ref().unwrap().seed, 9);
        assert_eq!(c.numerics.dt, Some(1e-6));
        assert_eq!(c.numerics.grid_points, Some(1024));
        assert!(c.apply(&Overrides { dt: Some(1.0), ..Default::default() }).is_err());
    }
}
