//! Modal decomposition of a lamellar layer and stable interface matching.
//!
//! Everything is real: on the imaginary frequency axis the curl equations
//! close over real fields once E_z and H_z absorb a factor i, and every
//! propagation constant q is a positive decay rate. Vectors of tangential
//! components are stored as [all x-components; all y-components], one entry
//! per diffraction order.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Cholesky, Diag, Eigh, Inverse, SolveTriangular, UPLO};

use super::{GratingGeometry, RcwaError};
use crate::rcwa::profile::toeplitz;

/// Modal basis of one layer: tangential field profiles and decay rates.
///
/// Columns of `w` are the tangential electric profiles of the modes, columns
/// of `v` the matching magnetic profiles (in Z0 units), and a mode varies as
/// e^{±q z} along the normal. All q > 0.
pub(crate) struct ModalBasis {
    pub w: Array2<f64>,
    pub v: Array2<f64>,
    pub q: Array1<f64>,
}

/// First-order system for the tangential fields: e' = F h, h' = G e.
///
/// Both matrices are returned scaled by ξ, which keeps their entries on the
/// k² scale without changing the products eventually formed from them.
fn build_fg_scaled(
    geom: &GratingGeometry,
    xi: f64,
    kx: &[f64],
    ky: f64,
) -> Result<(Array2<f64>, Array2<f64>), RcwaError> {
    let b = kx.len();
    let e = toeplitz(geom, xi, b, false)?;
    let einv = e.inv().map_err(|_| RcwaError::SingularMatching {
        stage: "permittivity Toeplitz inverse",
    })?;
    // Li's inverse rule: the x (normal-to-lamellae) component uses the
    // inverse of the reciprocal-profile Toeplitz matrix, not E itself.
    let ainv = toeplitz(geom, xi, b, true)?
        .inv()
        .map_err(|_| RcwaError::SingularMatching {
            stage: "reciprocal Toeplitz inverse",
        })?;

    let xi2 = xi * xi;
    let scale_rows = |m: &Array2<f64>| {
        let mut out = m.clone();
        for (r, mut row) in out.rows_mut().into_iter().enumerate() {
            row.mapv_inplace(|v| v * kx[r]);
        }
        out
    };
    let scale_cols = |m: &Array2<f64>| {
        let mut out = m.clone();
        for (c, mut col) in out.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| v * kx[c]);
        }
        out
    };

    let kx_einv = scale_rows(&einv);
    let kx_einv_kx = scale_cols(&kx_einv);

    let mut f = Array2::zeros((2 * b, 2 * b));
    let mut g = Array2::zeros((2 * b, 2 * b));
    for r in 0..b {
        for c in 0..b {
            let id = if r == c { 1.0 } else { 0.0 };
            f[[r, c]] = ky * kx_einv[[r, c]];
            f[[r, b + c]] = -(xi2 * id + kx_einv_kx[[r, c]]);
            f[[b + r, c]] = xi2 * id + ky * ky * einv[[r, c]];
            f[[b + r, b + c]] = -ky * kx_einv[[c, r]]; // (E⁻¹Kx)[r,c] = (KxE⁻¹)ᵀ since E⁻¹ is symmetric

            g[[r, c]] = -ky * if r == c { kx[r] } else { 0.0 };
            g[[r, b + c]] = xi2 * e[[r, c]] + if r == c { kx[r] * kx[r] } else { 0.0 };
            g[[b + r, c]] = -(xi2 * ainv[[r, c]] + ky * ky * id);
            g[[b + r, b + c]] = ky * if r == c { kx[r] } else { 0.0 };
        }
    }
    Ok((f, g))
}

/// Modal basis of a homogeneous layer with permittivity `eps`.
///
/// Plane waves per order are exact modes: w = I, q_n = √(ξ²ε + k_n²), and the
/// admittance has a closed 2x2 form per order.
pub(crate) fn uniform_modes(eps: f64, xi: f64, kx: &[f64], ky: f64) -> ModalBasis {
    let b = kx.len();
    let mut w = Array2::zeros((2 * b, 2 * b));
    let mut v = Array2::zeros((2 * b, 2 * b));
    let mut q = Array1::zeros(2 * b);
    for j in 0..b {
        let kj = kx[j];
        let qj = (xi * xi * eps + kj * kj + ky * ky).sqrt();
        w[[j, j]] = 1.0;
        w[[b + j, b + j]] = 1.0;
        q[j] = qj;
        q[b + j] = qj;
        let s = 1.0 / (xi * qj);
        // Admittance of an x-polarized and a y-polarized plane-wave mode.
        v[[j, j]] = -ky * kj * s;
        v[[b + j, j]] = -(xi * xi * eps + ky * ky) * s;
        v[[j, b + j]] = (xi * xi * eps + kj * kj) * s;
        v[[b + j, b + j]] = ky * kj * s;
    }
    ModalBasis { w, v, q }
}

/// Modal basis of a corrugated layer.
///
/// The groove direction enters the 2b×2b system FG only as a spectral
/// shift: FG is block triangular, its eigenvalues are (ξq)² with
/// q² = μ + ky², and the μ come from two b×b problems that know nothing
/// about ky. Modes polarized along the grooves solve the symmetric
/// problem (ξ²E + Kx²) y = μ y; the cross-polarized family solves the
/// symmetric-definite pencil (ξ²I + KxE⁻¹Kx) u = μ A u, which carries
/// Li's inverse rule through the reciprocal-profile Toeplitz matrix A.
/// Everything reduces to symmetric eigensolves, so the spectrum is real
/// and positive by construction instead of by tolerance; the general
/// coupled eigenproblem is avoided because near-crossings between the
/// two families make its eigenvectors arbitrarily ill-conditioned, which
/// at metallic contrast is a matter of when, not if.
pub(crate) fn corrugated_modes(
    geom: &GratingGeometry,
    xi: f64,
    kx: &[f64],
    ky: f64,
) -> Result<ModalBasis, RcwaError> {
    let b = kx.len();
    let e = toeplitz(geom, xi, b, false)?;
    let einv = e.inv().map_err(|_| RcwaError::SingularMatching {
        stage: "permittivity Toeplitz inverse",
    })?;
    let a = toeplitz(geom, xi, b, true)?;
    let xi2 = xi * xi;
    let ky2 = ky * ky;

    // Along-groove family: Q = ξ²E + Kx², symmetric positive definite.
    let mut q_op = e * xi2;
    for j in 0..b {
        q_op[[j, j]] += kx[j] * kx[j];
    }
    let (mu_te, y) = q_op.eigh(UPLO::Lower).map_err(|_| RcwaError::SingularMatching {
        stage: "groove-polarized eigensolver",
    })?;

    // Cross family: P u = μ A u reduced by the Cholesky factor of A to an
    // ordinary symmetric problem; u = L⁻ᵀ s keeps the pencil eigenvectors.
    let mut p = Array2::zeros((b, b));
    for r in 0..b {
        for c in 0..b {
            p[[r, c]] = kx[r] * einv[[r, c]] * kx[c];
        }
        p[[r, r]] += xi2;
    }
    let l = a.cholesky(UPLO::Lower).map_err(|_| RcwaError::SingularMatching {
        stage: "reciprocal Toeplitz factorization",
    })?;
    let half = l
        .solve_triangular(UPLO::Lower, Diag::NonUnit, &p)
        .map_err(|_| RcwaError::SingularMatching {
            stage: "pencil reduction",
        })?;
    let half_t = half.t().to_owned();
    let reduced = l
        .solve_triangular(UPLO::Lower, Diag::NonUnit, &half_t)
        .map_err(|_| RcwaError::SingularMatching {
            stage: "pencil reduction",
        })?;
    let reduced = (&reduced + &reduced.t()) * 0.5;
    let (mu_tm, s) = reduced
        .eigh(UPLO::Lower)
        .map_err(|_| RcwaError::SingularMatching {
            stage: "cross-polarized eigensolver",
        })?;
    let lt = l.t().to_owned();
    let u = lt
        .solve_triangular(UPLO::Upper, Diag::NonUnit, &s)
        .map_err(|_| RcwaError::SingularMatching {
            stage: "pencil back-substitution",
        })?;

    // Tangential profiles in the stored convention v = G w/(ξq),
    // w = F v/(ξq), written out against the explicit F and G blocks so no
    // resolvent or inverse of F ever appears. Cross modes are the pair
    //   w = (P u, ky E⁻¹Kx u)/(ξq),  v = (0, −u),
    // groove modes the pair
    //   w = (0, y),  v = (Q y, ky Kx y)/(ξq),
    // each column rescaled to a unit e-profile.
    let dim = 2 * b;
    let mut w = Array2::zeros((dim, dim));
    let mut v = Array2::zeros((dim, dim));
    let mut q = Array1::zeros(dim);

    let pu = p.dot(&u);
    let mut kx_u = u.clone();
    for (r, mut row) in kx_u.rows_mut().into_iter().enumerate() {
        row.mapv_inplace(|t| t * kx[r]);
    }
    let einv_kx_u = einv.dot(&kx_u);
    for j in 0..b {
        let rate2 = mu_tm[j] + ky2;
        if !(rate2 > 0.0 && rate2.is_finite()) {
            return Err(RcwaError::ModalEigenvalue {
                detail: format!("cross-polarized rate² {rate2:.3e} is not positive"),
            });
        }
        let qj = rate2.sqrt();
        let scale = 1.0 / (xi * qj);
        let mut norm = 0.0;
        for r in 0..b {
            let top = pu[[r, j]] * scale;
            let bot = ky * einv_kx_u[[r, j]] * scale;
            w[[r, j]] = top;
            w[[b + r, j]] = bot;
            norm += top * top + bot * bot;
        }
        let norm = norm.sqrt();
        for r in 0..b {
            w[[r, j]] /= norm;
            w[[b + r, j]] /= norm;
            v[[b + r, j]] = -u[[r, j]] / norm;
        }
        q[j] = qj;
    }

    let qy = q_op.dot(&y);
    for j in 0..b {
        let rate2 = mu_te[j] + ky2;
        if !(rate2 > 0.0 && rate2.is_finite()) {
            return Err(RcwaError::ModalEigenvalue {
                detail: format!("groove-polarized rate² {rate2:.3e} is not positive"),
            });
        }
        let qj = rate2.sqrt();
        let scale = 1.0 / (xi * qj);
        let col = b + j;
        for r in 0..b {
            w[[b + r, col]] = y[[r, j]];
            v[[r, col]] = qy[[r, j]] * scale;
            v[[b + r, col]] = ky * kx[r] * y[[r, j]] * scale;
        }
        q[col] = qj;
    }

    Ok(ModalBasis { w, v, q })
}

/// What sits under the corrugated layer.
pub(crate) enum Substrate {
    Conductor,
    /// Tangential admittance matrix of a homogeneous dielectric half-space.
    Dielectric(Array2<f64>),
}

/// Reflection of a homogeneous layer on a homogeneous substrate, directly in
/// the (order, polarization) channel basis.
///
/// Per order the matching decouples into two scalar sectors in the channel's
/// own frame, which is the general interface algebra specialized: no matrix
/// work, and cross-polarization entries are zero by construction. This also
/// covers depth 0 (a bare interface) and a vacuum standoff (fill factor 0).
pub(crate) fn uniform_reflection_eh(
    eps_layer: f64,
    depth: f64,
    substrate_eps: Option<f64>,
    xi: f64,
    kx: &[f64],
    ky: f64,
) -> Array2<f64> {
    let b = kx.len();
    let mut r = Array2::zeros((2 * b, 2 * b));
    for (j, &kj) in kx.iter().enumerate() {
        let k2 = kj * kj + ky * ky;
        let q0 = (xi * xi + k2).sqrt();
        let ql = (xi * xi * eps_layer + k2).sqrt();
        let x2 = (-2.0 * ql * depth).exp();
        // Bottom-interface gain per sector; a conductor pins both to -1.
        let (gb_e, gb_h) = match substrate_eps {
            None => (-1.0, -1.0),
            Some(eps_s) => {
                let qs = (xi * xi * eps_s + k2).sqrt();
                (
                    (ql - qs) / (ql + qs),
                    (eps_layer * qs - eps_s * ql) / (eps_layer * qs + eps_s * ql),
                )
            }
        };
        let r_e = (q0 * (1.0 + x2 * gb_e) - ql * (1.0 - x2 * gb_e))
            / (q0 * (1.0 + x2 * gb_e) + ql * (1.0 - x2 * gb_e));
        let r_h = (q0 * eps_layer * (1.0 - x2 * gb_h) - ql * (1.0 + x2 * gb_h))
            / (q0 * eps_layer * (1.0 - x2 * gb_h) + ql * (1.0 + x2 * gb_h));
        r[[2 * j, 2 * j]] = r_e;
        r[[2 * j + 1, 2 * j + 1]] = r_h;
    }
    r
}

/// Reflection matrix on tangential electric components for one corrugated
/// layer of thickness `depth` on a substrate, probed from vacuum above.
///
/// The layer amplitudes are referenced to their own decay ends, so only
/// e^{-q·depth} ever appears: matching stays well-posed at any depth.
pub(crate) fn tangential_reflection(
    layer: &ModalBasis,
    depth: f64,
    substrate: &Substrate,
    v0: &Array2<f64>,
) -> Result<Array2<f64>, RcwaError> {
    let dim = layer.q.len();
    let x: Array1<f64> = layer.q.mapv(|q| (-q * depth).exp());

    // Bottom interface: down-going layer amplitudes reflect into up-going
    // ones with gain G_b; a conductor pins the tangential field to zero.
    let g_b = match substrate {
        Substrate::Conductor => Array2::from_diag_elem(dim, -1.0),
        Substrate::Dielectric(vs) => {
            let vsw = vs.dot(&layer.w);
            let sum = &layer.v + &vsw;
            let diff = &layer.v - &vsw;
            sum.inv()
                .map_err(|_| RcwaError::SingularMatching {
                    stage: "substrate interface",
                })?
                .dot(&diff)
        }
    };

    let mut xgx = g_b;
    for ((i, j), v) in xgx.indexed_iter_mut() {
        *v *= x[i] * x[j];
    }
    let mut plus = xgx.clone();
    let mut minus = -xgx;
    for i in 0..dim {
        plus[[i, i]] += 1.0;
        minus[[i, i]] += 1.0;
    }
    let p = layer.w.dot(&plus);
    let s = layer.v.dot(&minus);

    let t = (v0.dot(&p) + &s)
        .inv()
        .map_err(|_| RcwaError::SingularMatching {
            stage: "top interface",
        })?;
    let mut r = 2.0 * p.dot(&t).dot(v0);
    for i in 0..dim {
        r[[i, i]] -= 1.0;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::DielectricModel;
    use approx::assert_abs_diff_eq;

    fn grating(fill: f64, eps: f64) -> GratingGeometry {
        GratingGeometry {
            period: 400e-9,
            depth: 150e-9,
            ridge_width: fill * 400e-9,
            substrate: DielectricModel::Constant { epsilon: eps },
            ridge: None,
            groove: None,
        }
    }

    fn order_offsets(kx0: f64, period: f64, n: i64) -> Vec<f64> {
        let g = 2.0 * std::f64::consts::PI / period;
        (-n..=n).map(|j| kx0 + j as f64 * g).collect()
    }

    #[test]
    fn uniform_profile_reproduces_plane_wave_rates() {
        let geom = grating(1.0, 4.0);
        let kx = order_offsets(3e6, geom.period, 2);
        let xi = 2e6;
        let ky = 1e6;
        let modes = corrugated_modes(&geom, xi, &kx, ky).unwrap();
        let mut expected: Vec<f64> = kx
            .iter()
            .flat_map(|&k| {
                let q = (xi * xi * 4.0 + k * k + ky * ky).sqrt();
                [q, q]
            })
            .collect();
        expected.sort_by(f64::total_cmp);
        let mut got = modes.q.to_vec();
        got.sort_by(f64::total_cmp);
        for (a, b) in got.iter().zip(&expected) {
            assert_abs_diff_eq!(a / b, 1.0, epsilon = 1e-10);
        }
    }

    #[test]
    fn admittance_satisfies_first_order_system() {
        // For any mode column, e' = F h must hold: q w = F v.
        let geom = grating(0.5, 9.0);
        let kx = order_offsets(0.0, geom.period, 3);
        let xi = 4e6;
        let ky = 2.5e6;
        let modes = corrugated_modes(&geom, xi, &kx, ky).unwrap();
        let (f, _) = build_fg_scaled(&geom, xi, &kx, ky).unwrap();
        let fv = f.dot(&modes.v) / xi;
        for j in 0..modes.q.len() {
            for i in 0..modes.q.len() {
                assert_abs_diff_eq!(
                    fv[[i, j]],
                    modes.q[j] * modes.w[[i, j]],
                    epsilon = 1e-4 * modes.q[j].abs().max(1.0)
                );
            }
        }
    }

    #[test]
    fn vacuum_layer_on_vacuum_substrate_reflects_nothing() {
        let kx = order_offsets(1e6, 400e-9, 2);
        let xi = 3e6;
        let ky = 0.7e6;
        let layer = uniform_modes(1.0, xi, &kx, ky);
        let v0 = uniform_modes(1.0, xi, &kx, ky).v;
        let r = tangential_reflection(&layer, 250e-9, &Substrate::Dielectric(v0.clone()), &v0)
            .unwrap();
        for v in r.iter() {
            assert_abs_diff_eq!(*v, 0.0, epsilon = 1e-13);
        }
    }

    #[test]
    fn conductor_under_zero_depth_flips_tangential_field() {
        let kx = order_offsets(2e6, 400e-9, 1);
        let xi = 1.5e6;
        let ky = 0.4e6;
        let layer = uniform_modes(1.0, xi, &kx, ky);
        let v0 = uniform_modes(1.0, xi, &kx, ky).v;
        let r = tangential_reflection(&layer, 0.0, &Substrate::Conductor, &v0).unwrap();
        for ((i, j), v) in r.indexed_iter() {
            let expect = if i == j { -1.0 } else { 0.0 };
            assert_abs_diff_eq!(*v, expect, epsilon = 1e-13);
        }
    }
}
