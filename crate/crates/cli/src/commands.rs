//! The four subcommands.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::time::Instant;

use serde_json::Value;
use transport_core::dynamics::{propagate, Frame, GridSpec, PropagationOptions, PropagationResult};
use transport_core::groundstate::{default_grid, solve_ground_state_with, GroundStateOptions, StationaryState};
use transport_core::io::{write_ground_state, write_propagation_summary, write_snapshots, write_sweep, Table};
use transport_core::noise::{average_over, beta_ensemble, FidelityRecord, NoiseOptions};
use transport_core::par::Execution;
use transport_core::TrapConfig;

use crate::config::{ExperimentConfig, FrameName};
use crate::protocol::{build, Built};
use crate::report::{normalize_numbers, num, object, sha256_hex, write_json, CliError};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Effective configuration of a run and where its files go.
pub struct Run {
    pub cfg: ExperimentConfig,
    pub out: PathBuf,
    pub digest: String,
    started: Instant,
    files: Vec<String>,
}

impl Run {
    /// Creates the output directory and records the configuration actually
    /// used as `config.used.toml`; the digest is over that file. The output
    /// directory itself is left out so reruns elsewhere share a digest.
    pub fn start(mut cfg: ExperimentConfig) -> Result<Self, CliError> {
        let out = cfg.output_dir();
        cfg.output_dir = None;
        std::fs::create_dir_all(&out).map_err(|e| CliError::Io(format!("{}: {e}", out.display())))?;
        let text = cfg.to_toml();
        let path = out.join("config.used.toml");
        std::fs::write(&path, &text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        Ok(Self {
            digest: format!("sha256:{}", sha256_hex(text.as_bytes())),
            cfg,
            out,
            started: Instant::now(),
            files: vec!["config.used.toml".into()],
        })
    }

    fn create(&mut self, name: &str) -> Result<BufWriter<File>, CliError> {
        let path = self.out.join(name);
        self.files.push(name.into());
        File::create(&path)
            .map(BufWriter::new)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }

    fn finish(&mut self, name: &str, w: BufWriter<File>) -> Result<(), CliError> {
        w.into_inner()
            .map_err(|e| CliError::Io(format!("{name}: {e}")))?
            .sync_all()
            .map_err(|e| CliError::Io(format!("{name}: {e}")))
    }

    fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut BufWriter<File>) -> transport_core::Result<()>,
    ) -> Result<(), CliError> {
        let mut w = self.create(name)?;
        f(&mut w)?;
        w.flush()?;
        self.finish(name, w)
    }

    /// Common summary fields followed by `fields`, written as `name`.
    fn summary(&mut self, command: &str, name: &str, fields: Vec<(&str, Value)>) -> Result<Value, CliError> {
        self.files.push(name.into());
        let config = normalize_numbers(serde_json::to_value(&self.cfg).expect("configuration serializes"));
        let mut entries = vec![
            ("tool", Value::from("bec-transport")),
            ("tool_version", Value::from(VERSION)),
            ("command", Value::from(command)),
            ("config", config),
            ("config_digest", Value::from(self.digest.clone())),
        ];
        entries.extend(fields);
        entries.push(("wall_time_s", num(self.started.elapsed().as_secs_f64())));
        entries.push(("files", Value::from(self.files.clone())));
        let v = object(entries);
        write_json(&self.out.join(name), &v)?;
        Ok(v)
    }
}

fn built(cfg: &ExperimentConfig) -> Result<Built, CliError> {
    build(&cfg.protocol, cfg.omega0(), cfg.trap.mass_kg)
}

/// Left and right limits differ in position or velocity by more than this
/// fraction of the distance.
const JUMP_TOL: f64 = 1e-12;

/// Times where the trap position or velocity is discontinuous, including the
/// start from rest at the origin and the stop at rest at the destination.
fn jumps(b: &Built, omega0: f64) -> Vec<f64> {
    let trap = &b.trap;
    let d = trap.end_position().abs().max(f64::MIN_POSITIVE);
    let differs = |(q1, v1): (f64, f64), (q2, v2): (f64, f64)| {
        (q1 - q2).abs() > JUMP_TOL * d || (v1 - v2).abs() / omega0 > JUMP_TOL * d
    };
    let mut out = Vec::new();
    let n = trap.segment_count();
    let first = trap.eval_segment(0, 0.0);
    if differs((0.0, 0.0), (first.q, first.q_dot)) {
        out.push(0.0);
    }
    for i in 1..n {
        let t = trap.segment_bounds(i).0;
        let (l, r) = (trap.eval_segment(i - 1, t), trap.eval_segment(i, t));
        if differs((l.q, l.q_dot), (r.q, r.q_dot)) {
            out.push(t);
        }
    }
    let last = trap.eval_segment(n - 1, b.t_f);
    if differs((last.q, last.q_dot), (trap.end_position(), 0.0)) {
        out.push(b.t_f);
    }
    out
}

/// Writes `trajectory.dat` (t, q0, q0', q0'', q_c, q_c', q_c - q0, segment)
/// and `design.json`.
pub fn design(run: &mut Run) -> Result<Value, CliError> {
    let omega0 = run.cfg.omega0();
    let b = built(&run.cfg)?;
    let jump_times = jumps(&b, omega0);
    let mut table = Table::new(&["t", "q0", "q0_dot", "q0_ddot", "q_c", "q_c_dot", "displacement", "segment"])
        .with_meta("protocol", b.kind)
        .with_meta("t_f", num(b.t_f));
    if let Some(t1) = b.t_1 {
        table = table.with_meta("t_1", num(t1));
    }
    for &t in &jump_times {
        table = table.with_meta("jump", num(t));
    }
    let m = run.cfg.numerics.design_samples;
    for i in 0..b.trap.segment_count() {
        let (a, e) = b.trap.segment_bounds(i);
        for j in 0..m {
            let t = if j + 1 == m { e } else { a + (e - a) * j as f64 / (m - 1) as f64 };
            let s = b.trap.eval_segment(i, t);
            let c = b.condensate.at(t);
            table.push(vec![t, s.q, s.q_dot, s.q_ddot, c.q, c.q_dot, c.q - s.q, i as f64]);
        }
    }
    run.write_with("trajectory.dat", |w| table.write(w))?;
    let (res_q, res_v) = b.end_residual(omega0);
    let mut fields = vec![
        ("protocol", Value::from(b.kind)),
        ("t_f", num(b.t_f)),
        ("t_1", b.t_1.map_or(Value::Null, num)),
        ("max_displacement", num(b.max_displacement())),
        ("max_trap_acceleration", num(b.max_trap_acceleration())),
        ("end_position_residual", num(res_q)),
        ("end_velocity_residual", num(res_v)),
        ("jumps", Value::Array(jump_times.iter().map(|&t| num(t)).collect())),
    ];
    if let Some(a) = &b.acceleration {
        let peak = a.samples().iter().fold(0.0f64, |m, s| m.max(s.q.abs()));
        fields.push(("max_compensating_acceleration", num(peak)));
    }
    run.summary("design", "design.json", fields)
}

fn ground_state(cfg: &ExperimentConfig, trap: &TrapConfig) -> Result<StationaryState, CliError> {
    let opts = GroundStateOptions {
        tol: cfg.numerics.ground_state_tolerance,
        quartic: cfg.trap.quartic,
        ..Default::default()
    };
    Ok(solve_ground_state_with(trap.coupling(), &default_grid(trap), &opts)?)
}

fn propagation_options(cfg: &ExperimentConfig) -> PropagationOptions {
    let defaults = PropagationOptions::default();
    PropagationOptions {
        dt: cfg.numerics.dt.map_or(defaults.dt, |dt| dt * cfg.omega0()),
        snapshot_stride: cfg.numerics.snapshot_stride,
        frame: match cfg.numerics.frame {
            FrameName::Comoving => Frame::CoMoving,
            FrameName::Lab => Frame::Lab,
        },
        grid: cfg.numerics.grid_points.map_or(GridSpec::Auto, GridSpec::Points),
        ..defaults
    }
}

/// Ground state, propagation and metrics. Writes `ground_state.dat`,
/// `propagation.txt`, `com.dat`, `snapshots.dat` (when a snapshot stride is
/// set) and `summary.json`.
pub fn verify(run: &mut Run) -> Result<Value, CliError> {
    let cfg = run.cfg.clone();
    let trap = cfg.trap_config()?;
    let b = built(&cfg)?;
    let ground = ground_state(&cfg, &trap)?;
    run.write_with("ground_state.dat", |w| write_ground_state(w, &ground, &trap))?;
    let problem = b.problem(&trap, cfg.trap.quartic);
    let opts = propagation_options(&cfg);
    let r: PropagationResult = propagate(&problem, &ground, &opts)?;
    run.write_with("propagation.txt", |w| write_propagation_summary(w, &r, &trap))?;

    let a0 = trap.oscillator_length();
    let t0 = 1.0 / trap.omega0();
    let mut com = Table::new(&["t", "com", "q_c", "q0"]);
    for &(t, q) in &r.com_track {
        let ts = t * t0;
        com.push(vec![ts, q * a0, b.condensate.at(ts).q, b.trap.branch_at(ts).q]);
    }
    run.write_with("com.dat", |w| com.write(w))?;
    if cfg.numerics.snapshot_stride > 0 {
        run.write_with("snapshots.dat", |w| write_snapshots(w, &r.snapshots, &trap))?;
    }

    let classical = problem.classical_path()?;
    let fields = vec![
        ("protocol", Value::from(b.kind)),
        ("t_f", num(b.t_f)),
        ("final_fidelity", num(r.final_fidelity)),
        ("excitation_energy", num(r.excitation_energy * trap.energy_unit())),
        ("excitation_energy_over_hbar_omega0", num(r.excitation_energy)),
        ("max_displacement", num(b.max_displacement())),
        ("max_com_deviation", num(r.max_com_deviation(&classical) * a0)),
        ("norm_drift", num(r.norm_drift)),
        ("mu_over_hbar_omega0", num(ground.mu())),
        ("grid_points", Value::from(r.grid().len())),
        ("grid_spacing", num(r.grid().dx() * a0)),
        ("steps", Value::from(r.steps)),
    ];
    run.summary("verify", "summary.json", fields)
}

/// Monte Carlo fidelity for every (coupling, final time, lambda); writes
/// `sweep.dat` and `sweep.json`.
pub fn noise_sweep(run: &mut Run, execution: Execution) -> Result<Value, CliError> {
    let cfg = run.cfg.clone();
    let noise = cfg
        .noise
        .clone()
        .ok_or_else(|| CliError::Config("noise-sweep needs a [noise] section".into()))?;
    let couplings = noise.g1_over_hbar.clone().unwrap_or_else(|| vec![cfg.trap.g1_over_hbar]);
    let times = match &noise.t_f {
        Some(t) => t.clone(),
        None => vec![built(&cfg)?.t_f],
    };
    let opts = NoiseOptions {
        n: noise.realizations,
        master_seed: noise.seed,
        dt_scaled: noise.dt_scaled,
        execution,
    };
    let ensembles = times
        .iter()
        .map(|&t| beta_ensemble(cfg.omega0() * t, &opts))
        .collect::<Result<Vec<_>, _>>()?;
    let mut records = Vec::new();
    for &g in &couplings {
        let trap = cfg.trap_config_for(g)?;
        let ground = ground_state(&cfg, &trap)?;
        let a0 = trap.oscillator_length();
        for (&t_f, pairs) in times.iter().zip(&ensembles) {
            for &lambda in &noise.lambdas {
                let (mean_fidelity, std_error) = average_over(&ground, pairs, lambda / a0, execution)?;
                records.push(FidelityRecord {
                    lambda,
                    g1_over_hbar: g,
                    t_f,
                    mean_fidelity,
                    std_error,
                    n: opts.n,
                    seed: opts.master_seed,
                });
            }
        }
    }
    run.write_with("sweep.dat", |w| write_sweep(w, &records))?;
    let fields = vec![
        ("records", Value::from(records.len())),
        ("realizations", Value::from(opts.n)),
        ("seed", Value::from(opts.master_seed)),
    ];
    run.summary("noise-sweep", "sweep.json", fields)
}

/// One quick check: name, pass flag, detail.
pub type Check = (&'static str, bool, String);

/// Fast internal consistency checks against closed-form results.
pub fn selftest() -> Vec<Check> {
    use std::f64::consts::PI;
    use transport_core::control::solve_displacement_bounded;
    use transport_core::design::{compensating_force, PolynomialProtocol};
    use transport_core::dynamics::{fidelity, TransportProblem};
    use transport_core::groundstate::{default_grid_for, solve_ground_state};
    use transport_core::noise::average_fidelity;
    use transport_core::{Grid1D, WaveFunction};

    let mut out: Vec<Check> = Vec::new();
    let w = 2.0 * PI * 50.0;
    let d = 1.6e-3;
    let mut check = |name: &'static str, f: &dyn Fn() -> Result<(bool, String), CliError>| {
        let (ok, detail) = f().unwrap_or_else(|e| (false, e.to_string()));
        out.push((name, ok, detail));
    };

    check("harmonic ground state mu = 1/2", &|| {
        let s = solve_ground_state_with(0.0, &default_grid_for(0.0), &Default::default())?;
        let err = (s.mu() - 0.5).abs();
        Ok((err < 1e-8, format!("|mu - 1/2| = {err:.3e}")))
    });
    check("polynomial protocol end conditions", &|| {
        let p = PolynomialProtocol::new(d, 0.02, w)?;
        let c = transport_core::design::classical_response(&p.trap(), w)?;
        let end = c.at(0.02);
        let err = (end.q - d).abs().max(end.q_dot.abs() / w);
        Ok((err < 1e-8 * d, format!("end residual {err:.3e} m")))
    });
    check("bang-bang time for delta = 0.162 mm", &|| {
        let s = solve_displacement_bounded(d, 0.162e-3, w)?;
        let rel = (s.t_f / 0.02 - 1.0).abs();
        Ok((rel < 5e-3 && s.t_1 == s.t_f / 2.0, format!("t_f = {:.6e} s", s.t_f)))
    });
    check("displaced Gaussian overlap", &|| {
        let g = Grid1D::symmetric(20.0, 1024)?;
        let a = WaveFunction::gaussian(g, 0.0);
        let b = WaveFunction::gaussian(g, 1.0);
        let f = fidelity(&a, &b)?;
        let err = (f - (-0.25f64).exp()).abs();
        Ok((err < 1e-12, format!("error {err:.3e}")))
    });
    check("compensating transport fidelity", &|| {
        let cfg = TrapConfig::rb87(w, 0.05, d)?;
        let s = solve_ground_state(&cfg, &default_grid(&cfg), 1e-9)?;
        let c = compensating_force(d, 0.02, cfg.mass())?;
        let a0 = cfg.oscillator_length();
        let problem = TransportProblem::from_si(&cfg, c.trap()).with_acceleration(c.acceleration().scaled(w, 1.0 / (a0 * w * w)));
        let r = propagate(&problem, &s, &Default::default())?;
        Ok((r.final_fidelity > 0.999 && r.norm_drift < 1e-9, format!("F = {:.12}", r.final_fidelity)))
    });
    check("noise average is deterministic", &|| {
        let cfg = TrapConfig::rb87(w, 0.05, d)?;
        let s = solve_ground_state(&cfg, &default_grid(&cfg), 1e-9)?;
        let lambda = 0.05 * cfg.oscillator_length();
        let seq = NoiseOptions { n: 200, master_seed: 3, execution: Execution::Sequential, ..Default::default() };
        let par = NoiseOptions { execution: Execution::Parallel, ..seq };
        let a = average_fidelity(&cfg, &s, 0.02, lambda, &seq)?;
        let b = average_fidelity(&cfg, &s, 0.02, lambda, &par)?;
        Ok((a == b, format!("mean {:.12}", a.mean_fidelity)))
    });
    out
}
