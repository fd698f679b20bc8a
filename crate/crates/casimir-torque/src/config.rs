//! Run configuration: one TOML file describing the gratings, the scan, the
//! quadrature, and the torsion balance.
//!
//! Every dimensional key carries its unit in the name (`period_nm`,
//! `temperature_k`), so a config file reads unambiguously and a value pasted
//! from a lab notebook cannot silently change scale. Parsing rejects unknown
//! keys: a typo fails loudly instead of falling back to a default.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::balance::BalanceParams;
use crate::materials::DielectricModel;
use crate::quadrature::QuadratureSpec;
use crate::rcwa::GratingGeometry;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: String,
        #[source]
        source: Box<toml::de::Error>,
    },
    #[error("invalid configuration: {msg}")]
    Invalid { msg: String },
}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError::Invalid { msg: msg.into() }
}

/// Grating profile. Exactly one of `fill_factor` and `ridge_width_nm` must
/// be present; storing both would let them disagree.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometryConfig {
    pub period_nm: f64,
    pub depth_nm: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fill_factor: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ridge_width_nm: Option<f64>,
}

impl GeometryConfig {
    fn ridge_width_nm(&self) -> Result<f64, ConfigError> {
        match (self.fill_factor, self.ridge_width_nm) {
            (Some(f), None) => Ok(f * self.period_nm),
            (None, Some(w)) => Ok(w),
            (Some(_), Some(_)) => Err(invalid(
                "geometry: give either fill_factor or ridge_width_nm, not both",
            )),
            (None, None) => Err(invalid(
                "geometry: one of fill_factor or ridge_width_nm is required",
            )),
        }
    }

    pub fn to_geometry(&self, material: DielectricModel) -> Result<GratingGeometry, ConfigError> {
        let geom = GratingGeometry {
            period: self.period_nm * 1e-9,
            depth: self.depth_nm * 1e-9,
            ridge_width: self.ridge_width_nm()? * 1e-9,
            substrate: material,
            ridge: None,
            groove: None,
        };
        geom.validate().map_err(|e| invalid(format!("geometry: {e}")))?;
        Ok(geom)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GapConfig {
    /// Vacuum gap between the corrugation tops, nm.
    pub separation_nm: f64,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanConfig {
    pub theta_start_deg: f64,
    pub theta_stop_deg: f64,
    pub theta_step_deg: f64,
}

impl ScanConfig {
    /// The scan grid in degrees: start, start + step, … up to and including
    /// the stop angle when it lands on the grid (half-step tolerance).
    pub fn angles_deg(&self) -> Vec<f64> {
        let count = ((self.theta_stop_deg - self.theta_start_deg) / self.theta_step_deg
            + 0.5)
            .floor() as usize;
        (0..=count)
            .map(|i| self.theta_start_deg + i as f64 * self.theta_step_deg)
            .collect()
    }

    fn validate(&self) -> Result<(), ConfigError> {
        for (v, name) in [
            (self.theta_start_deg, "theta_start_deg"),
            (self.theta_stop_deg, "theta_stop_deg"),
            (self.theta_step_deg, "theta_step_deg"),
        ] {
            if !v.is_finite() {
                return Err(invalid(format!("scan: {name} must be finite, got {v}")));
            }
        }
        if self.theta_step_deg <= 0.0 {
            return Err(invalid(format!(
                "scan: theta_step_deg must be positive, got {}",
                self.theta_step_deg
            )));
        }
        if self.theta_stop_deg < self.theta_start_deg {
            return Err(invalid(format!(
                "scan: theta_stop_deg {} is below theta_start_deg {}",
                self.theta_stop_deg, self.theta_start_deg
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct QuadratureConfig {
    /// Diffraction-order cutoff N; orders run over [−N, N] on both axes.
    pub orders: usize,
    pub xi_nodes: usize,
    pub k_nodes_per_axis: usize,
    /// Central-difference step of the torque, degrees.
    pub torque_step_deg: f64,
    /// Smallest rotation angle from either end of (0°, 180°) the mixed
    /// basis is trusted at, degrees.
    pub theta_min_deg: f64,
    /// κ·gap cutoff of the uncoupled completion of the order sum outside
    /// the truncation box; 0 disables the completion.
    pub tail_decay_cut: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        let spec = QuadratureSpec::default();
        QuadratureConfig {
            orders: spec.orders,
            xi_nodes: spec.n_xi,
            k_nodes_per_axis: spec.n_k,
            torque_step_deg: spec.delta_theta.to_degrees(),
            theta_min_deg: spec.theta_min.to_degrees(),
            tail_decay_cut: spec.tail_decay_cut,
        }
    }
}

impl QuadratureConfig {
    pub fn to_spec(&self) -> QuadratureSpec {
        QuadratureSpec {
            n_xi: self.xi_nodes,
            n_k: self.k_nodes_per_axis,
            orders: self.orders,
            delta_theta: self.torque_step_deg.to_radians(),
            theta_min: self.theta_min_deg.to_radians(),
            tail_decay_cut: self.tail_decay_cut,
            ..QuadratureSpec::default()
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.orders == 0 || self.xi_nodes == 0 || self.k_nodes_per_axis == 0 {
            return Err(invalid("quadrature: orders and node counts must be positive"));
        }
        if !(self.torque_step_deg > 0.0 && self.torque_step_deg.is_finite()) {
            return Err(invalid(format!(
                "quadrature: torque_step_deg must be positive, got {}",
                self.torque_step_deg
            )));
        }
        if !(self.theta_min_deg > 0.0 && self.theta_min_deg < 90.0) {
            return Err(invalid(format!(
                "quadrature: theta_min_deg must lie in (0, 90), got {}",
                self.theta_min_deg
            )));
        }
        if !(self.tail_decay_cut >= 0.0 && self.tail_decay_cut.is_finite()) {
            return Err(invalid(format!(
                "quadrature: tail_decay_cut must be nonnegative, got {}",
                self.tail_decay_cut
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlateConfig {
    /// Corrugated plate area, mm².
    pub area_mm2: f64,
}

impl Default for PlateConfig {
    fn default() -> Self {
        PlateConfig { area_mm2: 1.0 }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BalanceConfig {
    pub mass_g: f64,
    pub radius_mm: f64,
    pub thread_length_cm: f64,
    pub offset_a_mm: f64,
    pub offset_b_um: f64,
    pub temperature_k: f64,
    /// Rotational damping, N·m·s; omitted means critically damped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub damping_n_m_s: Option<f64>,
    pub gravity_m_per_s2: f64,
}

impl Default for BalanceConfig {
    fn default() -> Self {
        BalanceConfig {
            mass_g: 0.5,
            radius_mm: 5.0,
            thread_length_cm: 20.0,
            offset_a_mm: 1.0,
            offset_b_um: 60.0,
            temperature_k: 300.0,
            damping_n_m_s: None,
            gravity_m_per_s2: 9.81,
        }
    }
}

impl BalanceConfig {
    pub fn to_params(&self) -> Result<BalanceParams, ConfigError> {
        let mut p = BalanceParams {
            mass: self.mass_g * 1e-3,
            radius: self.radius_mm * 1e-3,
            thread_length: self.thread_length_cm * 1e-2,
            offset_a: self.offset_a_mm * 1e-3,
            offset_b: self.offset_b_um * 1e-6,
            temperature: self.temperature_k,
            damping: 1.0,
            gravity: self.gravity_m_per_s2,
        };
        p.damping = match self.damping_n_m_s {
            Some(d) => d,
            None => crate::balance::critical_damping(&p),
        };
        p.validate().map_err(|e| invalid(format!("balance: {e}")))?;
        Ok(p)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunSection {
    /// Seed of every stochastic step (Langevin trace).
    pub seed: u64,
    /// Worker threads; 0 uses all cores.
    pub workers: usize,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seed: 1, workers: 0 }
    }
}

/// Everything a run needs, as parsed from one TOML file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub geometry: GeometryConfig,
    /// Grating material: ridge and substrate; grooves are vacuum.
    pub material: DielectricModel,
    pub gap: GapConfig,
    pub scan: ScanConfig,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub plate: PlateConfig,
    #[serde(default)]
    pub balance: BalanceConfig,
    #[serde(default)]
    pub run: RunSection,
}

impl RunConfig {
    /// Parse and validate `path`; returns the config together with the
    /// SHA-256 of the raw file bytes, which output headers embed so a table
    /// can always be traced to the exact file that produced it.
    pub fn load(path: &Path) -> Result<(RunConfig, String), ConfigError> {
        let raw = std::fs::read(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        let text = String::from_utf8_lossy(&raw);
        let config: RunConfig = toml::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.display().to_string(),
            source: Box::new(source),
        })?;
        config.validate()?;
        let mut hasher = Sha256::new();
        hasher.update(&raw);
        let digest = hasher.finalize();
        let mut hex = String::with_capacity(64);
        for byte in digest {
            let _ = write!(hex, "{byte:02x}");
        }
        Ok((config, hex))
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.material
            .validate()
            .map_err(|e| invalid(format!("material: {e}")))?;
        self.geometry.to_geometry(self.material)?;
        if !(self.gap.separation_nm > 0.0 && self.gap.separation_nm.is_finite()) {
            return Err(invalid(format!(
                "gap: separation_nm must be positive, got {}",
                self.gap.separation_nm
            )));
        }
        self.scan.validate()?;
        self.quadrature.validate()?;
        if !(self.plate.area_mm2 > 0.0 && self.plate.area_mm2.is_finite()) {
            return Err(invalid(format!(
                "plate: area_mm2 must be positive, got {}",
                self.plate.area_mm2
            )));
        }
        self.balance.to_params()?;
        let lo = self.quadrature.theta_min_deg;
        let hi = 180.0 - lo;
        if self.scan.theta_start_deg < lo || self.scan.theta_stop_deg > hi {
            return Err(invalid(format!(
                "scan: grid [{}, {}]° leaves the supported range [{lo}, {hi}]°",
                self.scan.theta_start_deg, self.scan.theta_stop_deg
            )));
        }
        Ok(())
    }

    pub fn geometry(&self) -> GratingGeometry {
        // validate() has already proven this cannot fail.
        self.geometry
            .to_geometry(self.material)
            .expect("geometry was validated at load time")
    }

    pub fn gap_m(&self) -> f64 {
        self.gap.separation_nm * 1e-9
    }

    pub fn plate_area_m2(&self) -> f64 {
        self.plate.area_mm2 * 1e-6
    }

    pub fn quadrature_spec(&self) -> QuadratureSpec {
        self.quadrature.to_spec()
    }

    pub fn balance_params(&self) -> BalanceParams {
        self.balance
            .to_params()
            .expect("balance was validated at load time")
    }

    /// The resolved configuration as TOML, defaults filled in.
    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("run config serializes")
    }
}
