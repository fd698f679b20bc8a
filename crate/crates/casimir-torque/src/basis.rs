//! Mixed diffraction basis for a pair of crossed gratings.
//!
//! One grating diffracts along x̂, the other along ê′ = (cosθ, sinθ). Acting
//! together on a Bloch vector k they generate the oblique reciprocal lattice
//! k + g(n ê_x + m ê′) with g = 2π/d, so scattering between the plates is
//! described on channels |n, m, σ⟩ with n, m ∈ [−N, N] and σ ∈ {e, h}: a
//! basis of dimension 2(2N + 1)².
//!
//! Each grating only couples its own order: the first conserves m, the
//! rotated one conserves n. Both reflection operators are therefore
//! assembled from 1-D conical-mount solves ([`crate::rcwa`]), one per
//! conserved order, embedded into the mixed basis. The polarization labels
//! are attached to each channel's own transverse wavevector, not to either
//! grating, which is what lets the two assembled operators share a basis.
//!
//! Channel ordering is lexicographic in (n, m, σ) with σ innermost, fixed so
//! that matrix dumps are reproducible byte for byte.

use std::io::Write;

use ndarray::Array2;

use crate::rcwa::{
    reflection_1d, ConicalIncidence, GratingGeometry, Polarization, RcwaError, Reflection1D,
};

/// Failure modes of basis construction and operator assembly.
#[derive(Debug, thiserror::Error)]
pub enum BasisError {
    /// Parameters outside the meaningful domain (period, angle, gap, ...).
    #[error("invalid basis parameter: {msg}")]
    Domain { msg: String },
    /// A channel label outside the truncation box.
    #[error("diffraction orders ({n}, {m}) outside [-{orders}, {orders}]")]
    OrderRange { n: i64, m: i64, orders: usize },
    /// A 1-D reflection solve failed; `order` is the conserved index of the
    /// offending block.
    #[error("reflection of the {which} grating failed at conserved order {order}")]
    Block {
        which: &'static str,
        order: i64,
        #[source]
        source: RcwaError,
    },
}

/// The truncated channel set |n, m, σ⟩ at one Bloch vector.
///
/// Carries everything needed to label channels and evaluate their
/// wavevectors: truncation N, common period d, rotation angle θ between the
/// grating axes, and the Bloch vector k inside the first cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelBasis {
    /// Highest diffraction order N on each axis.
    pub orders: usize,
    /// Common grating period, m.
    pub period: f64,
    /// Angle between the grating axes, rad, strictly inside (0, π).
    pub theta: f64,
    /// Bloch wavevector (k_x, k_y), rad·m⁻¹.
    pub bloch: [f64; 2],
}

impl ChannelBasis {
    pub fn new(
        orders: usize,
        period: f64,
        theta: f64,
        bloch: [f64; 2],
    ) -> Result<Self, BasisError> {
        if !(period.is_finite() && period > 0.0) {
            return Err(BasisError::Domain {
                msg: format!("period must be positive, got {period}"),
            });
        }
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(BasisError::Domain {
                msg: format!("rotation angle must lie strictly inside (0, pi), got {theta}"),
            });
        }
        if !(bloch[0].is_finite() && bloch[1].is_finite()) {
            return Err(BasisError::Domain {
                msg: "Bloch vector must be finite".to_string(),
            });
        }
        Ok(ChannelBasis {
            orders,
            period,
            theta,
            bloch,
        })
    }

    /// Number of channels, 2(2N + 1)².
    pub fn dim(&self) -> usize {
        let per_axis = 2 * self.orders + 1;
        2 * per_axis * per_axis
    }

    /// Position of |n, m, σ⟩ in the fixed lexicographic ordering.
    pub fn index(&self, n: i64, m: i64, pol: Polarization) -> usize {
        let nmax = self.orders as i64;
        debug_assert!(n.abs() <= nmax && m.abs() <= nmax);
        let per_axis = 2 * self.orders + 1;
        (((n + nmax) as usize * per_axis) + (m + nmax) as usize) * 2 + pol.index()
    }

    /// Channel labels in index order.
    pub fn channels(&self) -> impl Iterator<Item = (i64, i64, Polarization)> {
        let nmax = self.orders as i64;
        (-nmax..=nmax).flat_map(move |n| {
            (-nmax..=nmax).flat_map(move |m| {
                [Polarization::E, Polarization::H]
                    .into_iter()
                    .map(move |p| (n, m, p))
            })
        })
    }

    /// Transverse wavevector of channel (n, m): k + g(n ê_x + m ê′).
    pub fn wavevector(&self, n: i64, m: i64) -> Result<[f64; 2], BasisError> {
        let nmax = self.orders as i64;
        if n.abs() > nmax || m.abs() > nmax {
            return Err(BasisError::OrderRange {
                n,
                m,
                orders: self.orders,
            });
        }
        Ok(self.wavevector_unchecked(n, m))
    }

    fn wavevector_unchecked(&self, n: i64, m: i64) -> [f64; 2] {
        let g = 2.0 * std::f64::consts::PI / self.period;
        [
            self.bloch[0] + g * (n as f64 + m as f64 * self.theta.cos()),
            self.bloch[1] + g * m as f64 * self.theta.sin(),
        ]
    }

    /// Decay rate κ = √(ξ² + |k_nm|²) of channel (n, m) at frequency ξ.
    pub fn kappa(&self, xi: f64, n: i64, m: i64) -> Result<f64, BasisError> {
        let k = self.wavevector(n, m)?;
        Ok((xi * xi + k[0] * k[0] + k[1] * k[1]).sqrt())
    }
}

/// One primitive cell of the combined reciprocal lattice.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BrillouinCell {
    /// Common grating period, m.
    pub period: f64,
    /// Angle between the grating axes, rad, strictly inside (0, π).
    pub theta: f64,
}

impl BrillouinCell {
    pub fn new(period: f64, theta: f64) -> Result<Self, BasisError> {
        if !(period.is_finite() && period > 0.0) {
            return Err(BasisError::Domain {
                msg: format!("period must be positive, got {period}"),
            });
        }
        if !(theta > 0.0 && theta < std::f64::consts::PI) {
            return Err(BasisError::Domain {
                msg: format!("rotation angle must lie strictly inside (0, pi), got {theta}"),
            });
        }
        Ok(BrillouinCell { period, theta })
    }

    /// First primitive reciprocal vector, g ê_x.
    pub fn b1(&self) -> [f64; 2] {
        [2.0 * std::f64::consts::PI / self.period, 0.0]
    }

    /// Second primitive reciprocal vector, g ê′.
    pub fn b2(&self) -> [f64; 2] {
        let g = 2.0 * std::f64::consts::PI / self.period;
        [g * self.theta.cos(), g * self.theta.sin()]
    }

    /// Cell area |b₁ × b₂| = (4π²/d²) sinθ, rad²·m⁻².
    pub fn area(&self) -> f64 {
        let g = 2.0 * std::f64::consts::PI / self.period;
        g * g * self.theta.sin()
    }

    /// Quadrature nodes and weights over the primitive parallelogram centred
    /// at the origin. Weights include the cell Jacobian, so they sum to the
    /// cell area.
    ///
    /// The underlying fractional rule splits the cell into four triangles
    /// with apex at the zone centre, where the integrand's conical point
    /// lives; see [`crate::quadrature::cell_rule`].
    pub fn nodes(&self, per_axis: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
        let (pts, wts) = crate::quadrature::cell_rule(per_axis);
        let b1 = self.b1();
        let b2 = self.b2();
        let area = self.area();
        let nodes = pts
            .iter()
            .map(|[s, t]| [s * b1[0] + t * b2[0], s * b1[1] + t * b2[1]])
            .collect();
        let weights = wts.iter().map(|w| w * area).collect();
        (nodes, weights)
    }

    /// Whether k lies in the Wigner–Seitz cell: no other reciprocal-lattice
    /// point is strictly closer than the origin. Points on the boundary
    /// count as inside.
    ///
    /// Kept for cross-validation of the parallelogram cell; integration uses
    /// [`Self::nodes`]. The candidate shell is widened as the lattice gets
    /// skew so the nearest lattice points are always covered.
    pub fn in_wigner_seitz(&self, k: [f64; 2]) -> bool {
        let b1 = self.b1();
        let b2 = self.b2();
        let reach = (1.0 / self.theta.sin()).ceil() as i64 + 2;
        let kk = k[0] * k[0] + k[1] * k[1];
        for i in -reach..=reach {
            for j in -reach..=reach {
                if i == 0 && j == 0 {
                    continue;
                }
                let gx = i as f64 * b1[0] + j as f64 * b2[0];
                let gy = i as f64 * b1[1] + j as f64 * b2[1];
                let dx = k[0] - gx;
                let dy = k[1] - gy;
                if dx * dx + dy * dy < kk {
                    return false;
                }
            }
        }
        true
    }
}

/// What an assembled operator represents.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OperatorKind {
    /// Reflection of the grating diffracting along x̂; conserves m.
    FirstReflection,
    /// Reflection of the rotated grating; conserves n.
    SecondReflection,
    /// One-way translation across the gap; diagonal.
    Translation,
    /// Product R₁ 𝒯 R₂ 𝒯 of one round trip.
    RoundTrip,
}

impl OperatorKind {
    pub fn label(&self) -> &'static str {
        match self {
            OperatorKind::FirstReflection => "R1",
            OperatorKind::SecondReflection => "R2",
            OperatorKind::Translation => "T",
            OperatorKind::RoundTrip => "round-trip",
        }
    }
}

/// A dense real operator over a [`ChannelBasis`].
#[derive(Debug, Clone)]
pub struct ScatterMatrix {
    pub basis: ChannelBasis,
    pub kind: OperatorKind,
    pub matrix: Array2<f64>,
}

impl ScatterMatrix {
    /// Entry ⟨n, m, σ | O | n′, m′, σ′⟩.
    pub fn entry(
        &self,
        n: i64,
        m: i64,
        pol: Polarization,
        n2: i64,
        m2: i64,
        pol2: Polarization,
    ) -> f64 {
        self.matrix[[self.basis.index(n, m, pol), self.basis.index(n2, m2, pol2)]]
    }

    /// Tab-separated dump with (n, m, σ) channel headers.
    pub fn write_table<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        writeln!(out, "# operator: {}", self.kind.label())?;
        write!(out, "# channel")?;
        for (n, m, p) in self.basis.channels() {
            write!(out, "\t({n},{m},{})", p.label())?;
        }
        writeln!(out)?;
        for (row, (n, m, p)) in self.basis.channels().enumerate() {
            write!(out, "({n},{m},{})", p.label())?;
            for col in 0..self.basis.dim() {
                write!(out, "\t{:+.16e}", self.matrix[[row, col]])?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

/// Diagonal one-way translation across a gap of width `gap`: entries
/// e^{−κ_nm·gap}, the same for both polarizations of a channel.
pub fn translation_diagonal(
    basis: &ChannelBasis,
    xi: f64,
    gap: f64,
) -> Result<ScatterMatrix, BasisError> {
    if !(xi.is_finite() && xi > 0.0) {
        return Err(BasisError::Domain {
            msg: format!("frequency must be positive, got {xi}"),
        });
    }
    if !(gap.is_finite() && gap >= 0.0) {
        return Err(BasisError::Domain {
            msg: format!("gap must be non-negative, got {gap}"),
        });
    }
    let mut matrix = Array2::zeros((basis.dim(), basis.dim()));
    let nmax = basis.orders as i64;
    for n in -nmax..=nmax {
        for m in -nmax..=nmax {
            let k = basis.wavevector_unchecked(n, m);
            let kappa = (xi * xi + k[0] * k[0] + k[1] * k[1]).sqrt();
            let value = (-kappa * gap).exp();
            for pol in [Polarization::E, Polarization::H] {
                let i = basis.index(n, m, pol);
                matrix[[i, i]] = value;
            }
        }
    }
    Ok(ScatterMatrix {
        basis: *basis,
        kind: OperatorKind::Translation,
        matrix,
    })
}

/// The 1-D reflection blocks of the first grating, one per conserved order
/// m. Block m sees the Bloch vector shifted by m g ê′, decomposed in the
/// grating's own frame (which is the global one).
///
/// Each block is solved with `solve_orders` internal Fourier orders (raised
/// to the box cutoff when below it) and restricted to the [−N, N] window
/// the basis keeps, so basis truncation and solver resolution move
/// independently.
pub(crate) fn reflection_blocks_1(
    basis: &ChannelBasis,
    geom: &GratingGeometry,
    xi: f64,
    solve_orders: usize,
) -> Result<Vec<Reflection1D>, BasisError> {
    let nmax = basis.orders as i64;
    let g = 2.0 * std::f64::consts::PI / basis.period;
    let (cos_t, sin_t) = (basis.theta.cos(), basis.theta.sin());
    (-nmax..=nmax)
        .map(|m| {
            let inc = ConicalIncidence {
                xi,
                k_across: basis.bloch[0] + m as f64 * g * cos_t,
                k_along: basis.bloch[1] + m as f64 * g * sin_t,
                orders: solve_orders.max(basis.orders),
            };
            reflection_1d(geom, &inc)
                .map(|r| r.restricted(basis.orders))
                .map_err(|source| BasisError::Block { which: "first", order: m, source })
        })
        .collect()
}

/// The 1-D reflection blocks of the rotated grating, one per conserved order
/// n. Block n sees the Bloch vector shifted by n g ê_x, decomposed in the
/// rotated frame (ê′, ŷ′): across-lines component along ê′, along-lines
/// component along ŷ′ = −sinθ ê_x + cosθ ê_y.
///
/// The solver works in that frame throughout; because the polarization
/// labels are tied to each channel's own wavevector and survive rotations,
/// its (e, h) entries drop into the common basis unchanged.
pub(crate) fn reflection_blocks_2(
    basis: &ChannelBasis,
    geom: &GratingGeometry,
    xi: f64,
    solve_orders: usize,
) -> Result<Vec<Reflection1D>, BasisError> {
    let nmax = basis.orders as i64;
    let g = 2.0 * std::f64::consts::PI / basis.period;
    let (cos_t, sin_t) = (basis.theta.cos(), basis.theta.sin());
    (-nmax..=nmax)
        .map(|n| {
            let base = [basis.bloch[0] + n as f64 * g, basis.bloch[1]];
            let inc = ConicalIncidence {
                xi,
                k_across: base[0] * cos_t + base[1] * sin_t,
                k_along: -base[0] * sin_t + base[1] * cos_t,
                orders: solve_orders.max(basis.orders),
            };
            reflection_1d(geom, &inc)
                .map(|r| r.restricted(basis.orders))
                .map_err(|source| BasisError::Block { which: "second", order: n, source })
        })
        .collect()
}

/// Reflection operator of the first grating on the mixed basis. Entries
/// vanish unless m = m′; each (m, m) block is one conical-mount solve with
/// `solve_orders` internal orders.
pub fn assemble_reflection_1(
    basis: &ChannelBasis,
    geom: &GratingGeometry,
    xi: f64,
    solve_orders: usize,
) -> Result<ScatterMatrix, BasisError> {
    let blocks = reflection_blocks_1(basis, geom, xi, solve_orders)?;
    let per_axis = 2 * basis.orders + 1;
    let mut matrix = Array2::zeros((basis.dim(), basis.dim()));
    for (mi, block) in blocks.iter().enumerate() {
        for ni in 0..per_axis {
            for si in 0..2 {
                let row = (ni * per_axis + mi) * 2 + si;
                let brow = ni * 2 + si;
                for nj in 0..per_axis {
                    for sj in 0..2 {
                        matrix[[row, (nj * per_axis + mi) * 2 + sj]] =
                            block.matrix[[brow, nj * 2 + sj]];
                    }
                }
            }
        }
    }
    Ok(ScatterMatrix {
        basis: *basis,
        kind: OperatorKind::FirstReflection,
        matrix,
    })
}

/// Reflection operator of the rotated grating on the mixed basis. Entries
/// vanish unless n = n′; each (n, n) block is one conical-mount solve in the
/// rotated frame with `solve_orders` internal orders.
pub fn assemble_reflection_2(
    basis: &ChannelBasis,
    geom: &GratingGeometry,
    xi: f64,
    solve_orders: usize,
) -> Result<ScatterMatrix, BasisError> {
    let blocks = reflection_blocks_2(basis, geom, xi, solve_orders)?;
    let per_axis = 2 * basis.orders + 1;
    let mut matrix = Array2::zeros((basis.dim(), basis.dim()));
    for (ni, block) in blocks.iter().enumerate() {
        for mi in 0..per_axis {
            for si in 0..2 {
                let row = (ni * per_axis + mi) * 2 + si;
                let brow = mi * 2 + si;
                for mj in 0..per_axis {
                    for sj in 0..2 {
                        matrix[[row, (ni * per_axis + mj) * 2 + sj]] =
                            block.matrix[[brow, mj * 2 + sj]];
                    }
                }
            }
        }
    }
    Ok(ScatterMatrix {
        basis: *basis,
        kind: OperatorKind::SecondReflection,
        matrix,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::materials::{self, DielectricModel};
    use approx::{assert_abs_diff_eq, assert_relative_eq};
    use rand::{Rng, SeedableRng};

    const GOLD: DielectricModel = DielectricModel::Drude {
        plasma_rad_per_m: 4.56e7,
        relaxation_rad_per_m: 1.77e5,
    };

    fn g_of(d: f64) -> f64 {
        2.0 * std::f64::consts::PI / d
    }

    #[test]
    fn dimension_and_index_enumerate_every_channel() {
        for orders in 0..5 {
            let basis =
                ChannelBasis::new(orders, 400e-9, 1.0, [1e6, -2e6]).unwrap();
            let per_axis = 2 * orders + 1;
            assert_eq!(basis.dim(), 2 * per_axis * per_axis);
            for (count, (n, m, p)) in basis.channels().enumerate() {
                assert_eq!(basis.index(n, m, p), count);
            }
            assert_eq!(basis.channels().count(), basis.dim());
        }
    }

    #[test]
    fn wavevector_is_the_affine_lattice_map() {
        let d = 400e-9;
        let g = g_of(d);

        let k = [0.3e7, -0.1e7];
        let basis = ChannelBasis::new(2, d, 1.2, k).unwrap();
        assert_eq!(basis.wavevector(0, 0).unwrap(), k);

        // Perpendicular gratings turn the lattice square.
        let basis = ChannelBasis::new(1, d, std::f64::consts::FRAC_PI_2, [0.0, 0.0]).unwrap();
        let kv = basis.wavevector(1, 1).unwrap();
        assert_abs_diff_eq!(kv[0], g, epsilon = 1e-9 * g);
        assert_abs_diff_eq!(kv[1], g, epsilon = 1e-9 * g);

        // Oblique case against explicit trigonometry.
        let theta = 30.0_f64.to_radians();
        let basis = ChannelBasis::new(2, d, theta, [0.1 * g, 0.2 * g]).unwrap();
        let kv = basis.wavevector(2, -1).unwrap();
        assert_abs_diff_eq!(
            kv[0],
            0.1 * g + g * (2.0 - 3.0_f64.sqrt() / 2.0),
            epsilon = 1e-12 * g
        );
        assert_abs_diff_eq!(kv[1], 0.2 * g - 0.5 * g, epsilon = 1e-12 * g);
    }

    #[test]
    fn wavevector_rejects_out_of_range_orders() {
        let basis = ChannelBasis::new(2, 400e-9, 1.0, [0.0, 0.0]).unwrap();
        assert!(matches!(
            basis.wavevector(3, 0),
            Err(BasisError::OrderRange { .. })
        ));
        assert!(matches!(
            basis.wavevector(0, -3),
            Err(BasisError::OrderRange { .. })
        ));
    }

    #[test]
    fn construction_rejects_degenerate_parameters() {
        assert!(ChannelBasis::new(1, 0.0, 1.0, [0.0, 0.0]).is_err());
        assert!(ChannelBasis::new(1, 400e-9, 0.0, [0.0, 0.0]).is_err());
        assert!(ChannelBasis::new(1, 400e-9, std::f64::consts::PI, [0.0, 0.0]).is_err());
        assert!(BrillouinCell::new(400e-9, -0.2).is_err());
    }

    #[test]
    fn translation_is_identity_at_zero_gap() {
        let basis = ChannelBasis::new(2, 400e-9, 1.0, [1e6, 2e6]).unwrap();
        let t = translation_diagonal(&basis, 5e6, 0.0).unwrap();
        for i in 0..basis.dim() {
            for j in 0..basis.dim() {
                let expect = if i == j { 1.0 } else { 0.0 };
                assert_eq!(t.matrix[[i, j]], expect);
            }
        }
    }

    #[test]
    fn translation_entries_recompute_from_scalars() {
        let d = 400e-9;
        let xi = 1e7;
        let gap = 100e-9;

        // Zone centre: κ = ξ for the (0, 0) channel.
        let basis = ChannelBasis::new(1, d, 0.7, [0.0, 0.0]).unwrap();
        let t = translation_diagonal(&basis, xi, gap).unwrap();
        assert_abs_diff_eq!(
            t.entry(0, 0, Polarization::E, 0, 0, Polarization::E),
            (-xi * gap).exp(),
            epsilon = 1e-15
        );

        // An m = 0 channel never feels the rotation angle.
        for theta in [0.3, 1.0, 2.5] {
            let basis = ChannelBasis::new(1, d, theta, [1e6, 0.0]).unwrap();
            let t = translation_diagonal(&basis, xi, gap).unwrap();
            let kx = 1e6 + g_of(d);
            let kappa = (xi * xi + kx * kx).sqrt();
            let got = t.entry(1, 0, Polarization::H, 1, 0, Polarization::H);
            assert_abs_diff_eq!(got, (-kappa * gap).exp(), epsilon = 1e-15);
        }
    }

    #[test]
    fn translation_decays_outward_and_ignores_polarization() {
        let basis = ChannelBasis::new(3, 400e-9, 1.1, [0.0, 0.0]).unwrap();
        let t = translation_diagonal(&basis, 4e6, 120e-9).unwrap();
        for (n, m, p) in basis.channels() {
            let v = t.entry(n, m, p, n, m, p);
            assert!(v > 0.0 && v < 1.0, "entry ({n},{m}) = {v} outside (0,1)");
            assert_eq!(v, t.entry(n, m, Polarization::E, n, m, Polarization::E));
        }
        // From the zone centre the decay rate grows along every lattice ray.
        for (dn, dm) in [(1i64, 0i64), (0, 1), (1, 1), (1, -1)] {
            let mut prev = t.entry(0, 0, Polarization::E, 0, 0, Polarization::E);
            for step in 1..=3 {
                let v = t.entry(
                    step * dn,
                    step * dm,
                    Polarization::E,
                    step * dn,
                    step * dm,
                    Polarization::E,
                );
                assert!(v < prev, "ray ({dn},{dm}) not decreasing at step {step}");
                prev = v;
            }
        }
    }

    #[test]
    fn reflection_operators_conserve_their_grating_order() {
        // N = 1 gives the 18-channel basis; check the complementary
        // conservation laws entry by entry.
        let geom = GratingGeometry::etched(400e-9, 150e-9, 0.4, GOLD);
        let basis =
            ChannelBasis::new(1, 400e-9, 60.0_f64.to_radians(), [0.31e7, 0.12e7]).unwrap();
        let r1 = assemble_reflection_1(&basis, &geom, 5e6, 8).unwrap();
        let r2 = assemble_reflection_2(&basis, &geom, 5e6, 8).unwrap();
        assert_eq!(r1.matrix.nrows(), 18);
        assert_eq!(r2.matrix.nrows(), 18);

        for (n, m, p) in basis.channels() {
            for (n2, m2, p2) in basis.channels() {
                if m != m2 {
                    assert!(
                        r1.entry(n, m, p, n2, m2, p2).abs() < 1e-14,
                        "R1 couples m = {m} to m' = {m2}"
                    );
                }
                if n != n2 {
                    assert!(
                        r2.entry(n, m, p, n2, m2, p2).abs() < 1e-14,
                        "R2 couples n = {n} to n' = {n2}"
                    );
                }
            }
        }
        // Within the allowed pattern the operators are substantial.
        assert!(r1.entry(0, 0, Polarization::H, 0, 0, Polarization::H).abs() > 0.05);
        assert!(r2.entry(0, 0, Polarization::H, 0, 0, Polarization::H).abs() > 0.05);
    }

    #[test]
    fn vacuum_gratings_reflect_nothing() {
        let geom = GratingGeometry::etched(400e-9, 150e-9, 0.4, materials::VACUUM);
        let basis = ChannelBasis::new(1, 400e-9, 1.0, [0.2e7, 0.1e7]).unwrap();
        let r1 = assemble_reflection_1(&basis, &geom, 5e6, 8).unwrap();
        let r2 = assemble_reflection_2(&basis, &geom, 5e6, 8).unwrap();
        assert!(r1.matrix.iter().all(|&v| v == 0.0));
        assert!(r2.matrix.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn flat_plates_reduce_to_diagonal_fresnel() {
        // Depth 0 removes all diffraction: both operators must be diagonal
        // with the plane-interface rates of each channel's own wavevector.
        let xi = 5e6;
        let geom = GratingGeometry::etched(400e-9, 0.0, 0.5, GOLD);
        let basis =
            ChannelBasis::new(1, 400e-9, 50.0_f64.to_radians(), [0.17e7, -0.23e7]).unwrap();
        let r1 = assemble_reflection_1(&basis, &geom, xi, 8).unwrap();
        let r2 = assemble_reflection_2(&basis, &geom, xi, 8).unwrap();

        for (n, m, p) in basis.channels() {
            let k = basis.wavevector(n, m).unwrap();
            let (re, rh) = crate::lifshitz::fresnel_imag(GOLD, xi, k[0].hypot(k[1])).unwrap();
            let expect = match p {
                Polarization::E => re,
                Polarization::H => rh,
            };
            for matrix in [&r1, &r2] {
                assert_abs_diff_eq!(matrix.entry(n, m, p, n, m, p), expect, epsilon = 1e-12);
            }
            for (n2, m2, p2) in basis.channels() {
                if (n, m, p) != (n2, m2, p2) {
                    assert!(r1.entry(n, m, p, n2, m2, p2).abs() < 1e-14);
                    assert!(r2.entry(n, m, p, n2, m2, p2).abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn rotated_copy_matches_axis_swapped_original() {
        // At θ = 90° and zone centre the second grating is the first one
        // with the coordinate axes exchanged. Swapping x and y permutes the
        // channel labels (n, m) → (m, n) and, because the swap is improper,
        // flips the sign of every e amplitude while fixing h.
        let geom = GratingGeometry::etched(400e-9, 180e-9, 0.5, GOLD);
        let basis =
            ChannelBasis::new(2, 400e-9, std::f64::consts::FRAC_PI_2, [0.0, 0.0]).unwrap();
        let r1 = assemble_reflection_1(&basis, &geom, 5e6, 8).unwrap();
        let r2 = assemble_reflection_2(&basis, &geom, 5e6, 8).unwrap();
        let sign = |p: Polarization| match p {
            Polarization::E => -1.0,
            Polarization::H => 1.0,
        };
        for (n, m, p) in basis.channels() {
            for (n2, m2, p2) in basis.channels() {
                let swapped = sign(p) * sign(p2) * r1.entry(m, n, p, m2, n2, p2);
                assert_abs_diff_eq!(r2.entry(n, m, p, n2, m2, p2), swapped, epsilon = 1e-10);
            }
        }
    }

    #[test]
    fn cell_area_is_sine_weighted() {
        let d = 400e-9;
        let g = g_of(d);
        let square = BrillouinCell::new(d, std::f64::consts::FRAC_PI_2).unwrap();
        assert_relative_eq!(square.area(), g * g, max_relative = 1e-15);
        let oblique = BrillouinCell::new(d, 30.0_f64.to_radians()).unwrap();
        assert_relative_eq!(oblique.area(), 0.5 * g * g, max_relative = 1e-15);
    }

    #[test]
    fn quadrature_weights_integrate_unity_to_the_area() {
        for theta_deg in [5.0_f64, 30.0, 90.0] {
            let cell = BrillouinCell::new(400e-9, theta_deg.to_radians()).unwrap();
            let (_, weights) = cell.nodes(12);
            let total: f64 = weights.iter().sum();
            assert!(
                ((total - cell.area()) / cell.area()).abs() < 1e-12,
                "area mismatch at theta = {theta_deg}"
            );
        }
    }

    #[test]
    fn wigner_seitz_predicate_on_the_square_lattice() {
        let d = 400e-9;
        let g = g_of(d);
        let cell = BrillouinCell::new(d, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(cell.in_wigner_seitz([0.0, 0.0]));
        assert!(cell.in_wigner_seitz([0.49 * g, 0.0]));
        assert!(cell.in_wigner_seitz([0.3 * g, 0.3 * g]));
        assert!(!cell.in_wigner_seitz([0.51 * g, 0.0]));
        assert!(!cell.in_wigner_seitz([0.0, -0.51 * g]));
        assert!(!cell.in_wigner_seitz([0.7 * g, 0.7 * g]));
    }

    #[test]
    fn wigner_seitz_tiles_the_plane_once() {
        // For points drawn inside the parallelogram cell, exactly one
        // lattice translate lands in the Wigner–Seitz cell: both cells are
        // fundamental domains of the same lattice.
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for theta_deg in [5.0, 60.0, 90.0, 175.0] {
            let cell = BrillouinCell::new(400e-9, (theta_deg as f64).to_radians()).unwrap();
            let b1 = cell.b1();
            let b2 = cell.b2();
            let reach = (1.0 / cell.theta.sin()).ceil() as i64 + 2;
            for _ in 0..200 {
                let s = rng.gen_range(-0.5..0.5);
                let t = rng.gen_range(-0.5..0.5);
                let k = [s * b1[0] + t * b2[0], s * b1[1] + t * b2[1]];
                let mut hits = 0;
                for i in -reach..=reach {
                    for j in -reach..=reach {
                        let kt = [
                            k[0] + i as f64 * b1[0] + j as f64 * b2[0],
                            k[1] + i as f64 * b1[1] + j as f64 * b2[1],
                        ];
                        if cell.in_wigner_seitz(kt) {
                            hits += 1;
                        }
                    }
                }
                assert_eq!(hits, 1, "theta = {theta_deg}, point ({s}, {t})");
            }
        }
    }

    #[test]
    fn table_dump_names_channels() {
        let basis = ChannelBasis::new(1, 400e-9, 1.0, [0.0, 0.0]).unwrap();
        let t = translation_diagonal(&basis, 5e6, 100e-9).unwrap();
        let mut buffer = Vec::new();
        t.write_table(&mut buffer).unwrap();
        let text = String::from_utf8(buffer).unwrap();
        assert!(text.starts_with("# operator: T\n"));
        assert!(text.contains("(-1,-1,e)"));
        assert!(text.contains("(1,1,h)"));
        assert_eq!(text.lines().count(), 2 + 18);
    }
}
