//! Conversion between tangential field components and e/h wave amplitudes.
//!
//! Each diffraction order is a plane-wave channel with in-plane wavevector
//! (kx_n, ky). Its e (transverse electric) amplitude is the electric field
//! along s = ẑ × k̂, its h (transverse magnetic) amplitude the magnetic field
//! along the same axis. Both are defined by the channel's own incidence
//! plane, so they do not change when either grating is rotated about the
//! normal: reflection entries in this basis can be compared across plates
//! directly.

use ndarray::Array2;

/// Per-channel geometry: unit in-plane direction, transverse direction, and
/// the vacuum decay rate.
#[derive(Clone, Copy, Debug)]
pub(crate) struct ChannelFrame {
    pub k_hat: [f64; 2],
    pub s_hat: [f64; 2],
    pub kappa: f64,
}

impl ChannelFrame {
    /// Frame of the channel with in-plane components (kx, ky) at frequency xi.
    ///
    /// At zero in-plane wavevector the incidence plane is undefined; the
    /// convention k̂ = x̂ is fixed globally so both plates agree on it.
    pub fn new(xi: f64, kx: f64, ky: f64) -> Self {
        let kpar = kx.hypot(ky);
        let kappa = (xi * xi + kpar * kpar).sqrt();
        if kpar <= 16.0 * f64::EPSILON * kappa {
            ChannelFrame {
                k_hat: [1.0, 0.0],
                s_hat: [0.0, 1.0],
                kappa,
            }
        } else {
            ChannelFrame {
                k_hat: [kx / kpar, ky / kpar],
                s_hat: [-ky / kpar, kx / kpar],
                kappa,
            }
        }
    }
}

/// Matrix taking per-channel (e, h) amplitudes to tangential electric
/// components, [all x; all y] layout, channel columns ordered (n, σ) with σ
/// innermost.
///
/// `sign` is +1 for down-going (incident) waves and -1 for up-going
/// (reflected) ones; only the h column senses the direction.
pub(crate) fn amplitude_to_tangential(
    xi: f64,
    frames: &[ChannelFrame],
    sign: f64,
) -> Array2<f64> {
    let b = frames.len();
    let mut m = Array2::zeros((2 * b, 2 * b));
    for (j, fr) in frames.iter().enumerate() {
        let col_e = 2 * j;
        let col_h = 2 * j + 1;
        m[[j, col_e]] = fr.s_hat[0];
        m[[b + j, col_e]] = fr.s_hat[1];
        let amp = -sign * fr.kappa / xi;
        m[[j, col_h]] = amp * fr.k_hat[0];
        m[[b + j, col_h]] = amp * fr.k_hat[1];
    }
    m
}

/// Convert a reflection matrix on tangential electric components into the
/// per-channel (e, h) amplitude basis: R = B₋⁻¹ R_tang B₊.
///
/// The up-going basis inverts channel by channel in closed form (its 2x2
/// block has determinant -κ/ξ, never zero), so no factorization is needed.
pub(crate) fn tangential_to_eh(xi: f64, frames: &[ChannelFrame], r_tang: &Array2<f64>) -> Array2<f64> {
    let b = frames.len();
    let b_in = amplitude_to_tangential(xi, frames, 1.0);
    let rhs = r_tang.dot(&b_in);
    let mut r = Array2::zeros((2 * b, 2 * b));
    for (j, fr) in frames.iter().enumerate() {
        // Rows j (x) and b+j (y) of rhs hold the reflected tangential field;
        // invert [ŝ | (κ/ξ)k̂] on that channel to read off (e, h) amplitudes.
        let c = fr.kappa / xi;
        let det = -c;
        for col in 0..2 * b {
            let tx = rhs[[j, col]];
            let ty = rhs[[b + j, col]];
            r[[2 * j, col]] = (c * fr.k_hat[1] * tx - c * fr.k_hat[0] * ty) / det;
            r[[2 * j + 1, col]] = (-fr.s_hat[1] * tx + fr.s_hat[0] * ty) / det;
        }
    }
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn frame_is_orthonormal_and_right_handed() {
        let fr = ChannelFrame::new(2e6, 3e6, -1.2e6);
        let dot = fr.k_hat[0] * fr.s_hat[0] + fr.k_hat[1] * fr.s_hat[1];
        assert_abs_diff_eq!(dot, 0.0, epsilon = 1e-15);
        // s = ẑ × k̂ means the pair (k̂, ŝ) has the orientation of (x̂, ŷ).
        let cross = fr.k_hat[0] * fr.s_hat[1] - fr.k_hat[1] * fr.s_hat[0];
        assert_abs_diff_eq!(cross, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn zero_wavevector_falls_back_to_x_axis() {
        let fr = ChannelFrame::new(1e6, 0.0, 0.0);
        assert_eq!(fr.k_hat, [1.0, 0.0]);
        assert_eq!(fr.s_hat, [0.0, 1.0]);
        assert_abs_diff_eq!(fr.kappa, 1e6, epsilon = 1e-6);
    }

    #[test]
    fn conversion_round_trips_identity() {
        // R_tang = -I (conductor) must become diag(-1, +1) per channel.
        let xi = 1.7e6;
        let frames: Vec<ChannelFrame> = [(2e6, 0.5e6), (0.0, 0.0), (-3e6, 0.5e6)]
            .iter()
            .map(|&(kx, ky)| ChannelFrame::new(xi, kx, ky))
            .collect();
        let dim = 2 * frames.len();
        let r_tang = Array2::from_diag_elem(dim, -1.0);
        let r = tangential_to_eh(xi, &frames, &r_tang);
        for ((i, j), v) in r.indexed_iter() {
            let expect = if i == j {
                if i % 2 == 0 {
                    -1.0
                } else {
                    1.0
                }
            } else {
                0.0
            };
            assert_abs_diff_eq!(*v, expect, epsilon = 1e-13);
        }
    }
}
