//! Scan orchestration: energy over a θ grid, torque by differencing that
//! grid, convergence ladders, and the delimited-text tables they produce.
//!
//! A torque scan never calls the five-point stencil per angle. The scan grid
//! is uniform, so central differences across neighbouring grid rows give
//! τ(θᵢ) from energies that are needed anyway, five times cheaper than
//! independent stencils and with the same step as a dedicated evaluation
//! whenever the grid step equals the configured torque step.

use std::fmt::Write as _;

use crate::energy::{energy_per_area, EnergyResult};
use crate::quadrature::QuadratureSpec;
use crate::rcwa::GratingGeometry;

/// One scan angle: the energy evaluation, or the reason it failed.
#[derive(Debug)]
pub struct ScanRow {
    pub theta_deg: f64,
    pub outcome: Result<EnergyResult, String>,
    /// Wall-clock seconds spent on this angle.
    pub seconds: f64,
}

/// Evaluate the energy on every angle of `grid_deg`, sequentially (each
/// evaluation already saturates the worker pool). A failed angle is recorded
/// and skipped, never fatal: the rest of a long scan survives one bad node.
pub fn energy_scan(
    geom: &GratingGeometry,
    gap: f64,
    quad: &QuadratureSpec,
    grid_deg: &[f64],
    mut progress: impl FnMut(&ScanRow),
) -> Vec<ScanRow> {
    grid_deg
        .iter()
        .map(|&theta_deg| {
            let start = std::time::Instant::now();
            let outcome = energy_per_area(theta_deg.to_radians(), geom, gap, quad)
                .map_err(|e| e.to_string());
            let row = ScanRow {
                theta_deg,
                outcome,
                seconds: start.elapsed().as_secs_f64(),
            };
            progress(&row);
            row
        })
        .collect()
}

/// Torque at interior grid angles by central differences of the scanned
/// energies. `step_rad` is the grid step. Angles whose neighbours failed are
/// skipped. The stencil error compares the two- and four-point derivatives
/// and needs two healthy neighbours on each side.
#[derive(Debug, Clone, Copy)]
pub struct TorqueRow {
    pub theta_deg: f64,
    pub energy: f64,
    pub torque: f64,
    pub stencil_error: Option<f64>,
}

pub fn torque_from_grid(rows: &[ScanRow], step_rad: f64) -> Vec<TorqueRow> {
    let energy = |i: usize| -> Option<f64> {
        rows.get(i).and_then(|r| r.outcome.as_ref().ok()).map(|e| e.energy)
    };
    (1..rows.len().saturating_sub(1))
        .filter_map(|i| {
            let (em, e0, ep) = (energy(i - 1)?, energy(i)?, energy(i + 1)?);
            let torque = (em - ep) / (2.0 * step_rad);
            let stencil_error = match (i.checked_sub(2).and_then(energy), energy(i + 2)) {
                (Some(emm), Some(epp)) => {
                    let wide = (8.0 * (em - ep) - (emm - epp)) / (12.0 * step_rad);
                    Some((wide - torque).abs())
                }
                _ => None,
            };
            Some(TorqueRow {
                theta_deg: rows[i].theta_deg,
                energy: e0,
                torque,
                stencil_error,
            })
        })
        .collect()
}

/// Peak of |τ| over a torque table.
pub fn torque_peak(rows: &[TorqueRow]) -> Option<&TorqueRow> {
    rows.iter()
        .max_by(|a, b| a.torque.abs().total_cmp(&b.torque.abs()))
}

/// One rung of a convergence ladder: the energy at some resolution setting,
/// with the relative step from the previous rung.
#[derive(Debug, Clone, Copy)]
pub struct LadderRow {
    pub setting: usize,
    pub energy: f64,
    /// |E − E_prev| / |E|; `None` on the first rung.
    pub delta: Option<f64>,
}

/// Energies over `settings`, each produced by `configure` patching the base
/// spec, all at one angle. Used for the order, frequency-node and cell-node
/// ladders of the convergence report.
pub fn ladder(
    geom: &GratingGeometry,
    gap: f64,
    theta_deg: f64,
    settings: &[usize],
    configure: impl Fn(usize) -> QuadratureSpec,
) -> Result<Vec<LadderRow>, String> {
    let mut out = Vec::with_capacity(settings.len());
    let mut prev: Option<f64> = None;
    for &setting in settings {
        let quad = configure(setting);
        let e = energy_per_area(theta_deg.to_radians(), geom, gap, &quad)
            .map_err(|e| e.to_string())?
            .energy;
        out.push(LadderRow {
            setting,
            energy: e,
            delta: prev.map(|p| ((e - p) / e).abs()),
        });
        prev = Some(e);
    }
    Ok(out)
}

/// Delimited-text table with a `#` provenance header.
///
/// The header names the producing tool, the SHA-256 of the config file, and
/// the full resolved configuration, so any table on disk can be traced to
/// the exact inputs that made it. No timestamps: identical inputs must give
/// byte-identical files.
pub struct TableWriter {
    buf: String,
}

impl TableWriter {
    pub fn new(tool: &str, config_sha256: &str, resolved_config: &str) -> Self {
        let mut buf = String::new();
        let _ = writeln!(buf, "# {} {}", tool, env!("CARGO_PKG_VERSION"));
        let _ = writeln!(buf, "# config sha256: {config_sha256}");
        let _ = writeln!(buf, "# resolved configuration:");
        for line in resolved_config.lines() {
            let _ = writeln!(buf, "#   {line}");
        }
        TableWriter { buf }
    }

    pub fn comment(&mut self, text: &str) {
        for line in text.lines() {
            let _ = writeln!(self.buf, "# {line}");
        }
    }

    /// Column header: a `#`-prefixed, tab-separated name row.
    pub fn columns(&mut self, names: &[&str]) {
        let _ = writeln!(self.buf, "# {}", names.join("\t"));
    }

    pub fn row(&mut self, cells: &[String]) {
        let _ = writeln!(self.buf, "{}", cells.join("\t"));
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

/// Fixed-width scientific formatting used across all tables: 16 significant
/// digits, so reading a table back loses nothing.
pub fn sci(v: f64) -> String {
    format!("{v:.15e}")
}
