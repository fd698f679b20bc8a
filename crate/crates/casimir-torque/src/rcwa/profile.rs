//! Fourier data of lamellar permittivity profiles.
//!
//! A lamellar layer is piecewise constant in x with period d: one ridge of
//! width w centered at x = 0, the rest groove. All Fourier coefficients of
//! such a profile (and of its reciprocal, needed for the inverse-rule
//! factorization) have closed forms; the Toeplitz matrices built from them
//! are what the modal solver actually consumes.

use ndarray::Array2;

use super::{GratingGeometry, RcwaError};

/// Fourier coefficient c_j of the permittivity profile at imaginary
/// frequency `xi`, with the ridge centered at x = 0 so every c_j is real.
///
/// With `reciprocal` the profile 1/ε(x) is expanded instead; that series
/// feeds the inverse-rule factorization of the normal field component.
pub fn profile_fourier_coefficients(
    geom: &GratingGeometry,
    xi: f64,
    j: i64,
    reciprocal: bool,
) -> Result<f64, RcwaError> {
    geom.validate()?;
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(RcwaError::Incidence {
            msg: format!("imaginary frequency must be positive and finite, got {xi}"),
        });
    }
    let eps_r = geom.ridge_epsilon(xi)?;
    let eps_g = geom.groove_epsilon(xi)?;
    let map = |e: f64| if reciprocal { 1.0 / e } else { e };
    let f = geom.fill_factor();
    if j == 0 {
        return Ok(f * map(eps_r) + (1.0 - f) * map(eps_g));
    }
    // Centered ridge: c_j = (ε_r - ε_g) sin(πjf)/(πj), purely real and even in j.
    let pj = std::f64::consts::PI * j as f64;
    Ok((map(eps_r) - map(eps_g)) * (pj * f).sin() / pj)
}

/// Toeplitz matrix T[r, c] = c_{r-c} over `size` diffraction orders.
///
/// Needs coefficients up to |j| = size - 1; symmetric because the centered
/// profile is even.
pub(crate) fn toeplitz(
    geom: &GratingGeometry,
    xi: f64,
    size: usize,
    reciprocal: bool,
) -> Result<Array2<f64>, RcwaError> {
    let mut coeff = vec![0.0; size];
    for (j, c) in coeff.iter_mut().enumerate() {
        *c = profile_fourier_coefficients(geom, xi, j as i64, reciprocal)?;
    }
    let mut t = Array2::zeros((size, size));
    for r in 0..size {
        for c in 0..size {
            t[[r, c]] = coeff[(r as i64 - c as i64).unsigned_abs() as usize];
        }
    }
    Ok(t)
}
