//! Plain-text result files.
//!
//! Every file is whitespace-separated columnar text. Lines starting with `#`
//! are comments; `# key = value` comment lines carry metadata and the line
//! `# columns: a b c` names the columns. Numbers are written with 17
//! significant digits so that reading a file back reproduces the values
//! bit for bit. Key-value summaries are written as `key = value` lines.
//!
//! Dumps are in SI units: positions in m, times in s, wave functions in
//! m^(-1/2).

use std::io::{BufRead, Write};

use num_complex::Complex64;

use crate::dynamics::{PropagationResult, Snapshot};
use crate::grid::{Grid1D, WaveFunction};
use crate::groundstate::StationaryState;
use crate::noise::FidelityRecord;
use crate::units::TrapConfig;
use crate::{Error, Result};

/// `x` with 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn io_err(e: std::io::Error) -> Error {
    Error::Io(e.to_string())
}

fn parse_number(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>().map_err(|_| Error::Format(format!("line {line}: `{s}` is not a number")))
}

/// Named columns of floating-point data with metadata.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new<S: AsRef<str>>(columns: &[S]) -> Self {
        Self { meta: Vec::new(), columns: columns.iter().map(|c| c.as_ref().to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_meta(mut self, key: &str, value: impl ToString) -> Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }

    pub fn write(&self, w: &mut impl Write) -> Result<()> {
        for (k, v) in &self.meta {
            writeln!(w, "# {k} = {v}").map_err(io_err)?;
        }
        writeln!(w, "# columns: {}", self.columns.join(" ")).map_err(io_err)?;
        let mut line = String::new();
        for row in &self.rows {
            line.clear();
            for (j, v) in row.iter().enumerate() {
                if j > 0 {
                    line.push(' ');
                }
                line.push_str(&format_number(*v));
            }
            writeln!(w, "{line}").map_err(io_err)?;
        }
        Ok(())
    }

    pub fn read(r: impl BufRead) -> Result<Self> {
        let mut t = Table::default();
        let mut have_columns = false;
        for (i, line) in r.lines().enumerate() {
            let line = line.map_err(io_err)?;
            let n = i + 1;
            let trimmed = line.trim();
            if trimmed.is_empty() {
                continue;
            }
            if let Some(c) = trimmed.strip_prefix('#') {
                let c = c.trim();
                if let Some(cols) = c.strip_prefix("columns:") {
                    t.columns = cols.split_whitespace().map(str::to_string).collect();
                    have_columns = true;
                } else if let Some((k, v)) = c.split_once('=') {
                    t.meta.push((k.trim().to_string(), v.trim().to_string()));
                }
                continue;
            }
            if !have_columns {
                return Err(Error::Format(format!("line {n}: data before the column header")));
            }
            let row = trimmed.split_whitespace().map(|s| parse_number(s, n)).collect::<Result<Vec<_>>>()?;
            if row.len() != t.columns.len() {
                return Err(Error::Format(format!(
                    "line {n}: {} values for {} columns",
                    row.len(),
                    t.columns.len()
                )));
            }
            t.rows.push(row);
        }
        if !have_columns {
            return Err(Error::Format("missing `# columns:` header".into()));
        }
        Ok(t)
    }
}

/// `key = value` lines.
pub fn write_summary(w: &mut impl Write, entries: &[(&str, f64)]) -> Result<()> {
    for (k, v) in entries {
        writeln!(w, "{k} = {}", format_number(*v)).map_err(io_err)?;
    }
    Ok(())
}

pub fn read_summary(r: impl BufRead) -> Result<Vec<(String, f64)>> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let (k, v) = trimmed
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected `key = value`", i + 1)))?;
        out.push((k.trim().to_string(), parse_number(v.trim(), i + 1)?));
    }
    Ok(out)
}

/// Stationary profile as `q  re_chi  im_chi`, with the chemical potential
/// and coupling as metadata.
pub fn write_ground_state(w: &mut impl Write, state: &StationaryState, cfg: &TrapConfig) -> Result<()> {
    let a0 = cfg.oscillator_length();
    let amp = a0.sqrt().recip();
    let chi = state.chi();
    let mut t = Table::new(&["q", "re_chi", "im_chi"])
        .with_meta("mu_over_hbar_omega0", format_number(state.mu()))
        .with_meta("mu_si", format_number(state.mu_si(cfg)))
        .with_meta("g1_over_hbar", format_number(cfg.g1_over_hbar()))
        .with_meta("quartic", format_number(state.quartic()))
        .with_meta("residual", format_number(state.residual()));
    for (j, c) in chi.amplitudes().iter().enumerate() {
        t.push(vec![chi.grid().x(j) * a0, c.re * amp, c.im * amp]);
    }
    t.write(w)
}

/// Reads a ground-state dump back into oscillator units. The coupling is
/// taken from `cfg` and must match the file.
pub fn read_ground_state(r: impl BufRead, cfg: &TrapConfig) -> Result<StationaryState> {
    let t = Table::read(r)?;
    let (q, re, im) = match (t.column("q"), t.column("re_chi"), t.column("im_chi")) {
        (Some(q), Some(re), Some(im)) => (q, re, im),
        _ => return Err(Error::Format("expected columns q re_chi im_chi".into())),
    };
    if let Some(g) = t.meta_value("g1_over_hbar") {
        let g: f64 = parse_number(g, 0)?;
        if (g - cfg.g1_over_hbar()).abs() > 1e-12 * g.abs().max(1e-300) {
            return Err(Error::InvalidParameter(format!(
                "dump was computed for g1/hbar = {g}, configuration has {}",
                cfg.g1_over_hbar()
            )));
        }
    }
    let quartic = match t.meta_value("quartic") {
        Some(v) => parse_number(v, 0)?,
        None => 0.0,
    };
    if q.len() < 2 {
        return Err(Error::Format("need at least two grid points".into()));
    }
    let a0 = cfg.oscillator_length();
    let amp = a0.sqrt();
    let n = q.len();
    let (x0, x1) = (q[0] / a0, q[n - 1] / a0);
    let dx = (x1 - x0) / (n - 1) as f64;
    let grid = Grid1D::new(x0, x1 + dx, n)?;
    let amps = re.iter().zip(&im).map(|(a, b)| Complex64::new(a * amp, b * amp)).collect();
    StationaryState::from_profile(WaveFunction::new(grid, amps)?, cfg.coupling(), quartic)
}

/// Snapshots as `t  q  re_psi  im_psi` in lab coordinates. The stored
/// trap-frame field is moved to the lab by its frame offset and velocity;
/// the global phase is dropped.
pub fn write_snapshots(w: &mut impl Write, snapshots: &[Snapshot], cfg: &TrapConfig) -> Result<()> {
    let a0 = cfg.oscillator_length();
    let t0 = cfg.omega0().recip();
    let amp = a0.sqrt().recip();
    let mut t = Table::new(&["t", "q", "re_psi", "im_psi"]);
    for s in snapshots {
        let g = s.psi.grid();
        for (j, c) in s.psi.amplitudes().iter().enumerate() {
            let q = g.x(j) + s.frame_offset;
            let v = c * Complex64::from_polar(1.0, s.frame_velocity * q);
            t.push(vec![s.t * t0, q * a0, v.re * amp, v.im * amp]);
        }
    }
    t.write(w)
}

/// `final_fidelity`, `excitation_energy` (J), `excitation_energy_over_hbar_omega0`
/// and `norm_drift` of a propagation.
pub fn write_propagation_summary(w: &mut impl Write, r: &PropagationResult, cfg: &TrapConfig) -> Result<()> {
    write_summary(
        w,
        &[
            ("final_fidelity", r.final_fidelity),
            ("excitation_energy", r.excitation_energy * cfg.energy_unit()),
            ("excitation_energy_over_hbar_omega0", r.excitation_energy),
            ("norm_drift", r.norm_drift),
        ],
    )
}

pub const SWEEP_COLUMNS: [&str; 7] = ["lambda", "g1_over_hbar", "t_f", "mean_fidelity", "std_error", "n", "seed"];

/// One row per record; `n` and `seed` are written as integers.
pub fn write_sweep(w: &mut impl Write, records: &[FidelityRecord]) -> Result<()> {
    writeln!(w, "# columns: {}", SWEEP_COLUMNS.join(" ")).map_err(io_err)?;
    for r in records {
        writeln!(
            w,
            "{} {} {} {} {} {} {}",
            format_number(r.lambda),
            format_number(r.g1_over_hbar),
            format_number(r.t_f),
            format_number(r.mean_fidelity),
            format_number(r.std_error),
            r.n,
            r.seed
        )
        .map_err(io_err)?;
    }
    Ok(())
}

pub fn read_sweep(r: impl BufRead) -> Result<Vec<FidelityRecord>> {
    let mut out = Vec::new();
    let mut header = false;
    for (i, line) in r.lines().enumerate() {
        let line = line.map_err(io_err)?;
        let n = i + 1;
        let trimmed = line.trim();
        if let Some(c) = trimmed.strip_prefix('#') {
            if let Some(cols) = c.trim().strip_prefix("columns:") {
                if cols.split_whitespace().ne(SWEEP_COLUMNS) {
                    return Err(Error::Format(format!("line {n}: unexpected sweep columns")));
                }
                header = true;
            }
            continue;
        }
        if trimmed.is_empty() {
            continue;
        }
        if !header {
            return Err(Error::Format(format!("line {n}: data before the column header")));
        }
        let f: Vec<&str> = trimmed.split_whitespace().collect();
        if f.len() != SWEEP_COLUMNS.len() {
            return Err(Error::Format(format!("line {n}: expected {} fields", SWEEP_COLUMNS.len())));
        }
        let int = |s: &str| s.parse::<u64>().map_err(|_| Error::Format(format!("line {n}: `{s}` is not an integer")));
        out.push(FidelityRecord {
            lambda: parse_number(f[0], n)?,
            g1_over_hbar: parse_number(f[1], n)?,
            t_f: parse_number(f[2], n)?,
            mean_fidelity: parse_number(f[3], n)?,
            std_error: parse_number(f[4], n)?,
            n: int(f[5])? as usize,
            seed: int(f[6])?,
        });
    }
    if !header {
        return Err(Error::Format("missing `# columns:` header".into()));
    }
    Ok(out)
}
