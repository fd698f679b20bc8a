//! Rigorous coupled-wave reflection of a lamellar grating at imaginary
//! frequency, in conical incidence.
//!
//! The grating is a one-dimensional rectangular corrugation: period d along
//! x, lines along y, ridge of width w and depth a on a homogeneous
//! substrate. A conically incident wave (nonzero wavevector component along
//! the lines) couples both polarizations, so the reflection operator acts on
//! interleaved (order, polarization) channels.
//!
//! On the imaginary frequency axis there are no propagating orders and no
//! anomalies: every mode decays, every matrix is real, and the layer
//! matching below uses only decaying exponentials, so arbitrary depths are
//! safe.

mod polarization;
mod profile;
mod solver;

use std::io::Write;

use ndarray::Array2;
use ndarray_linalg::EigVals;
use thiserror::Error;

use crate::materials::{self, DielectricModel};

pub use profile::profile_fourier_coefficients;
pub(crate) use polarization::ChannelFrame;

/// Slack allowed on the spectral radius of a reflection matrix before it is
/// declared non-passive.
pub(crate) const TOL_PASSIVITY: f64 = 1e-8;

#[derive(Debug, Error)]
pub enum RcwaError {
    #[error("invalid grating geometry: {msg}")]
    Geometry { msg: String },
    #[error("invalid incidence: {msg}")]
    Incidence { msg: String },
    #[error("corrugated perfect conductors are not supported; only a flat conductor or a conductor substrate under a dielectric corrugation")]
    CorrugatedConductor,
    #[error("modal eigenproblem failed: {detail}")]
    ModalEigenvalue { detail: String },
    #[error("singular linear system during {stage}")]
    SingularMatching { stage: &'static str },
    #[error("reflection matrix spectral radius {radius} exceeds 1 (tolerance {TOL_PASSIVITY:e}); passivity violated")]
    Passivity { radius: f64 },
}

/// One-dimensional lamellar grating: ridge centered at x = 0, lines along y.
///
/// `ridge` defaults to the substrate material and `groove` to vacuum, which
/// covers the common case of a corrugation etched into the substrate.
/// Lateral offsets are not represented: for a single grating they are a
/// gauge choice, and the energy between two rotated gratings does not depend
/// on them.
#[derive(Clone, Debug)]
pub struct GratingGeometry {
    /// Period d (m).
    pub period: f64,
    /// Corrugation depth a (m); zero means a flat interface.
    pub depth: f64,
    /// Ridge width w (m), 0 ≤ w ≤ d.
    pub ridge_width: f64,
    pub substrate: DielectricModel,
    /// Ridge material; `None` uses the substrate.
    pub ridge: Option<DielectricModel>,
    /// Groove material; `None` means vacuum.
    pub groove: Option<DielectricModel>,
}

impl GratingGeometry {
    /// Corrugation etched into `material`: ridges of the substrate material,
    /// vacuum grooves.
    pub fn etched(period: f64, depth: f64, fill_factor: f64, material: DielectricModel) -> Self {
        GratingGeometry {
            period,
            depth,
            ridge_width: fill_factor * period,
            substrate: material,
            ridge: None,
            groove: None,
        }
    }

    pub fn fill_factor(&self) -> f64 {
        self.ridge_width / self.period
    }

    pub fn validate(&self) -> Result<(), RcwaError> {
        if !(self.period > 0.0 && self.period.is_finite()) {
            return Err(RcwaError::Geometry {
                msg: format!("period must be positive and finite, got {}", self.period),
            });
        }
        if !(self.depth >= 0.0 && self.depth.is_finite()) {
            return Err(RcwaError::Geometry {
                msg: format!("depth must be nonnegative and finite, got {}", self.depth),
            });
        }
        if !(self.ridge_width >= 0.0 && self.ridge_width <= self.period) {
            return Err(RcwaError::Geometry {
                msg: format!(
                    "ridge width must lie in [0, period], got {} with period {}",
                    self.ridge_width, self.period
                ),
            });
        }
        self.substrate
            .validate()
            .map_err(|e| RcwaError::Geometry { msg: e.to_string() })?;
        for m in [&self.ridge, &self.groove].into_iter().flatten() {
            m.validate()
                .map_err(|e| RcwaError::Geometry { msg: e.to_string() })?;
        }
        if self.depth > 0.0
            && (self.ridge_material().is_perfect_conductor()
                || self.groove_material().is_perfect_conductor())
        {
            return Err(RcwaError::CorrugatedConductor);
        }
        Ok(())
    }

    pub fn ridge_material(&self) -> &DielectricModel {
        self.ridge.as_ref().unwrap_or(&self.substrate)
    }

    pub fn groove_material(&self) -> &DielectricModel {
        self.groove.as_ref().unwrap_or(&materials::VACUUM)
    }

    pub(crate) fn ridge_epsilon(&self, xi: f64) -> Result<f64, RcwaError> {
        dielectric_value(self.ridge_material(), xi)
    }

    pub(crate) fn groove_epsilon(&self, xi: f64) -> Result<f64, RcwaError> {
        dielectric_value(self.groove_material(), xi)
    }

    /// True when the corrugated region is homogeneous at this frequency, so
    /// plane waves are exact modes and no eigensolve is needed.
    fn layer_is_uniform(&self, xi: f64) -> Result<Option<f64>, RcwaError> {
        if self.depth == 0.0 {
            return Ok(Some(1.0));
        }
        let f = self.fill_factor();
        if f >= 1.0 {
            return Ok(Some(self.ridge_epsilon(xi)?));
        }
        if f <= 0.0 {
            return Ok(Some(self.groove_epsilon(xi)?));
        }
        let er = self.ridge_epsilon(xi)?;
        let eg = self.groove_epsilon(xi)?;
        Ok((er == eg).then_some(er))
    }
}

fn dielectric_value(model: &DielectricModel, xi: f64) -> Result<f64, RcwaError> {
    materials::epsilon_imag(*model, xi).map_err(|e| RcwaError::Geometry { msg: e.to_string() })
}

/// Incidence data for one reflection solve: imaginary frequency, in-plane
/// wavevector components across and along the grating lines, and the order
/// truncation (orders n with |n| ≤ `orders` are kept).
#[derive(Clone, Copy, Debug)]
pub struct ConicalIncidence {
    /// Imaginary frequency ξ (rad/m), strictly positive.
    pub xi: f64,
    /// Wavevector component across the lines (m⁻¹); diffraction shifts it.
    pub k_across: f64,
    /// Wavevector component along the lines (m⁻¹); conserved.
    pub k_along: f64,
    /// Order truncation N₁ ≥ 0.
    pub orders: usize,
}

impl ConicalIncidence {
    pub fn validate(&self) -> Result<(), RcwaError> {
        if !(self.xi > 0.0 && self.xi.is_finite()) {
            return Err(RcwaError::Incidence {
                msg: format!("imaginary frequency must be positive and finite, got {}", self.xi),
            });
        }
        if !self.k_across.is_finite() || !self.k_along.is_finite() {
            return Err(RcwaError::Incidence {
                msg: "wavevector components must be finite".into(),
            });
        }
        Ok(())
    }

    /// Channel count: 2(2N₁+1).
    pub fn dim(&self) -> usize {
        2 * (2 * self.orders + 1)
    }
}

/// Wave polarization label of a channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Polarization {
    /// Transverse electric: E along ẑ × k̂.
    E,
    /// Transverse magnetic: H along ẑ × k̂.
    H,
}

impl Polarization {
    pub fn index(self) -> usize {
        match self {
            Polarization::E => 0,
            Polarization::H => 1,
        }
    }

    pub fn label(self) -> char {
        match self {
            Polarization::E => 'e',
            Polarization::H => 'h',
        }
    }
}

/// Reflection matrix of one grating in the (order, polarization) channel
/// basis, rows and columns ordered (n, σ) with σ innermost.
///
/// Entry [(n, σ), (n', σ')] is the amplitude of outgoing channel (n, σ) per
/// unit incoming (n', σ'). Everything is real at imaginary frequency.
#[derive(Clone, Debug)]
pub struct Reflection1D {
    pub orders: usize,
    pub matrix: Array2<f64>,
}

impl Reflection1D {
    pub fn dim(&self) -> usize {
        2 * (2 * self.orders + 1)
    }

    pub fn channel_index(&self, n: i64, pol: Polarization) -> usize {
        let shifted = n + self.orders as i64;
        assert!(
            (0..=(2 * self.orders as i64)).contains(&shifted),
            "order {n} outside truncation ±{}",
            self.orders
        );
        2 * shifted as usize + pol.index()
    }

    pub fn entry(&self, n: i64, pol: Polarization, n_in: i64, pol_in: Polarization) -> f64 {
        self.matrix[[self.channel_index(n, pol), self.channel_index(n_in, pol_in)]]
    }

    /// Channel labels in row/column order.
    pub fn channels(&self) -> impl Iterator<Item = (i64, Polarization)> + '_ {
        let n1 = self.orders as i64;
        (-n1..=n1).flat_map(|n| [(n, Polarization::E), (n, Polarization::H)])
    }

    /// The central sub-matrix over orders [−keep, keep]. Lets a solve run
    /// at higher internal resolution than the order window a coupled basis
    /// retains.
    pub fn restricted(&self, keep: usize) -> Reflection1D {
        assert!(
            keep <= self.orders,
            "cannot keep ±{keep} orders from a ±{} solve",
            self.orders
        );
        let off = 2 * (self.orders - keep);
        let dim = 2 * (2 * keep + 1);
        let matrix = self
            .matrix
            .slice(ndarray::s![off..off + dim, off..off + dim])
            .to_owned();
        Reflection1D { orders: keep, matrix }
    }

    /// Largest eigenvalue magnitude.
    pub fn spectral_radius(&self) -> f64 {
        spectral_radius(&self.matrix)
    }
}

pub(crate) fn spectral_radius(m: &Array2<f64>) -> f64 {
    m.eigvals()
        .map(|vals| vals.iter().map(|z| z.norm()).fold(0.0, f64::max))
        .unwrap_or(f64::INFINITY)
}

/// Reflection matrix of the grating for the given conical incidence.
///
/// The corrugated layer is solved modally (or in closed form when it is
/// homogeneous at this frequency), matched to the substrate and to vacuum
/// with only decaying exponentials, and converted to per-channel (e, h)
/// amplitudes. The result is checked for passivity before being returned.
pub fn reflection_1d(
    geom: &GratingGeometry,
    inc: &ConicalIncidence,
) -> Result<Reflection1D, RcwaError> {
    geom.validate()?;
    inc.validate()?;

    let n1 = inc.orders as i64;
    let g = 2.0 * std::f64::consts::PI / geom.period;
    let kx: Vec<f64> = (-n1..=n1).map(|j| inc.k_across + j as f64 * g).collect();
    let ky = inc.k_along;
    let xi = inc.xi;

    let substrate_eps = if geom.substrate.is_perfect_conductor() {
        None
    } else {
        Some(dielectric_value(&geom.substrate, xi)?)
    };

    // A homogeneous layer decouples the orders and each order splits into two
    // scalar sectors; everything else needs the modal eigensolve and dense
    // matching on tangential components, converted channel by channel.
    let matrix = match geom.layer_is_uniform(xi)? {
        Some(eps) => solver::uniform_reflection_eh(eps, geom.depth, substrate_eps, xi, &kx, ky),
        None => {
            let layer = solver::corrugated_modes(geom, xi, &kx, ky)?;
            let substrate = match substrate_eps {
                None => solver::Substrate::Conductor,
                Some(eps_s) => {
                    solver::Substrate::Dielectric(solver::uniform_modes(eps_s, xi, &kx, ky).v)
                }
            };
            let v0 = solver::uniform_modes(1.0, xi, &kx, ky).v;
            let r_tang = solver::tangential_reflection(&layer, geom.depth, &substrate, &v0)?;
            let frames: Vec<ChannelFrame> =
                kx.iter().map(|&k| ChannelFrame::new(xi, k, ky)).collect();
            polarization::tangential_to_eh(xi, &frames, &r_tang)
        }
    };

    let radius = spectral_radius(&matrix);
    if radius > 1.0 + TOL_PASSIVITY {
        return Err(RcwaError::Passivity { radius });
    }

    Ok(Reflection1D {
        orders: inc.orders,
        matrix,
    })
}

/// Write a reflection matrix as a tab-separated table with channel labels,
/// for eyeballing operator structure.
pub fn write_reflection_table<W: Write>(r: &Reflection1D, out: &mut W) -> std::io::Result<()> {
    write!(out, "# channel")?;
    for (n, pol) in r.channels() {
        write!(out, "\t({n},{})", pol.label())?;
    }
    writeln!(out)?;
    for (row, (n, pol)) in r.channels().enumerate() {
        write!(out, "({n},{})", pol.label())?;
        for col in 0..r.dim() {
            write!(out, "\t{:+.16e}", r.matrix[[row, col]])?;
        }
        writeln!(out)?;
    }
    Ok(())
}
