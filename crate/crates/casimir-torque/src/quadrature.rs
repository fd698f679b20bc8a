//! Quadrature rules used by the energy integrals.
//!
//! Two building blocks: classical Gauss–Legendre nodes on [−1, 1], and a
//! rational stretching that turns them into a rule for smooth, exponentially
//! decaying integrands on (0, ∞),
//!
//! ```text
//! ξ(t) = ξ₀ (1 + t) / (1 − t),   dξ = 2ξ₀ / (1 − t)² dt ,
//! ```
//!
//! which clusters nodes around the decay scale ξ₀ and never places one at the
//! endpoint 0. The two-dimensional Brillouin-cell rule is the tensor product
//! of two [−1, 1] rules pushed through the affine map of the cell (see
//! [`crate::basis`]).

use serde::{Deserialize, Serialize};

/// Resolution and finite-difference parameters of an energy evaluation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    /// Number of imaginary-frequency nodes.
    pub n_xi: usize,
    /// Cell nodes per reciprocal axis; the tensor rule uses `n_k²` points.
    pub n_k: usize,
    /// Diffraction-order cutoff: orders n, m run over [−N, N].
    pub orders: usize,
    /// Central-difference step for the torque, radians.
    pub delta_theta: f64,
    /// Smallest rotation angle (from either end of (0, π)) the grating basis
    /// is trusted at, radians.
    pub theta_min: f64,
    /// Within this angular distance of `theta_min` (on either side of the
    /// domain) the per-axis cell node count is doubled: the cell is strongly
    /// elongated there and the integrand carries more structure per axis.
    pub k_doubling_margin: f64,
    /// Decay scale ξ₀ of the frequency rule, rad·m⁻¹. `None` picks 1/(2·gap)
    /// at the point of use, matching the e^{−2ξ·gap} falloff of the
    /// integrand.
    #[serde(default)]
    pub xi_scale: Option<f64>,
    /// Internal Fourier resolution of each one-dimensional conical solve.
    /// Independent of [`Self::orders`]: the box cutoff decides which
    /// channels the coupled basis keeps, while this decides how well each
    /// grating's own diffraction problem is resolved. Tying them together
    /// would let solver truncation drift masquerade as box convergence.
    /// `None` means max([`SOLVE_ORDER_FLOOR`], `orders`); an explicit value
    /// is raised to `orders` when smaller, since a solve can never return
    /// fewer orders than the basis keeps.
    #[serde(default)]
    pub solve_orders: Option<usize>,
    /// Dimensionless κ·gap cutoff for the uncoupled-channel completion of
    /// the diffraction sum outside the order box; 0 disables the completion.
    #[serde(default = "default_tail_cut")]
    pub tail_decay_cut: f64,
}

fn default_tail_cut() -> f64 {
    8.0
}

/// Fewest internal orders any conical solve runs with, regardless of the
/// box cutoff.
pub const SOLVE_ORDER_FLOOR: usize = 8;

impl Default for QuadratureSpec {
    fn default() -> Self {
        QuadratureSpec {
            n_xi: 40,
            n_k: 12,
            orders: 4,
            delta_theta: 0.5_f64.to_radians(),
            theta_min: 5.0_f64.to_radians(),
            k_doubling_margin: 5.0_f64.to_radians(),
            xi_scale: None,
            solve_orders: None,
            tail_decay_cut: default_tail_cut(),
        }
    }
}

impl QuadratureSpec {
    /// Default spec with the node counts replaced; the usual way tests and
    /// oracles pin their resolution.
    pub fn with_counts(n_xi: usize, n_k: usize) -> Self {
        QuadratureSpec {
            n_xi,
            n_k,
            ..Self::default()
        }
    }

    /// Frequency nodes and weights for a gap of `gap` metres: the rational
    /// rule with scale [`Self::xi_scale`], defaulting to 1/(2·gap).
    pub fn xi_rule(&self, gap: f64) -> (Vec<f64>, Vec<f64>) {
        let scale = self.xi_scale.unwrap_or(0.5 / gap);
        semi_infinite_rule(self.n_xi, scale)
    }

    /// Effective internal order count of one conical solve; see
    /// [`Self::solve_orders`].
    pub fn solver_orders(&self) -> usize {
        self.solve_orders.unwrap_or(SOLVE_ORDER_FLOOR).max(self.orders)
    }

    /// Per-axis cell node count at rotation angle `theta` (radians): `n_k`,
    /// doubled when `theta` is within [`k_doubling_margin`] of the domain
    /// floor on either side.
    pub fn n_k_at(&self, theta: f64) -> usize {
        let edge = self.theta_min + self.k_doubling_margin;
        if theta < edge || theta > std::f64::consts::PI - edge {
            2 * self.n_k
        } else {
            self.n_k
        }
    }
}

/// Gauss–Legendre nodes and weights on [−1, 1], ascending.
///
/// Newton iteration on the Legendre polynomial recurrence; accurate to a few
/// ulp for any practical order.
pub fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1, "quadrature order must be at least 1");
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let m = n.div_ceil(2);
    for i in 0..m {
        // Tricomi-style initial guess for the i-th root from the top.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_and_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() <= 1e-15 * x.abs().max(1.0) {
                let (p2, d2) = legendre_and_derivative(n, x);
                dp = d2;
                x -= p2 / d2;
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
        nodes[i] = -x;
        weights[i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = 0.0;
        let (_, d) = legendre_and_derivative(n, 0.0);
        weights[n / 2] = 2.0 / (d * d);
    }
    (nodes, weights)
}

fn legendre_and_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Gauss rule on (0, ∞) for integrands decaying on the scale `scale`:
/// nodes and weights of the rational map applied to an `n`-point
/// Gauss–Legendre rule. All nodes are strictly positive and ascending.
pub fn semi_infinite_rule(n: usize, scale: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(scale > 0.0, "decay scale must be positive");
    let (t, wt) = gauss_legendre(n);
    let mut x = Vec::with_capacity(n);
    let mut w = Vec::with_capacity(n);
    for (ti, wi) in t.iter().zip(&wt) {
        let u = 1.0 - ti;
        x.push(scale * (1.0 + ti) / u);
        w.push(wi * 2.0 * scale / (u * u));
    }
    (x, w)
}

/// Quadrature rule over one reciprocal-lattice cell in fractional
/// coordinates: points (s, t) ∈ [−1/2, 1/2]² with weights summing to one, so
/// that mapping through k = s b₁ + t b₂ and multiplying by the cell area
/// integrates over the cell.
///
/// The rule splits the cell into four triangles sharing an apex at the
/// origin and integrates each in (radius, edge) coordinates, where the
/// radial Jacobian factor absorbs the conical point that
/// κ = √(ξ² + |k|²) develops at the cell centre as ξ → 0. A plain tensor
/// Gauss rule stalls near the bottom of the frequency integral because of
/// that cone; this one converges at full rate for every frequency node.
///
/// `n` is the per-axis budget: the rule returns n² points (four triangles
/// of ⌈n/2⌉² each). Requires n ≥ 2.
pub fn cell_rule(n: usize) -> (Vec<[f64; 2]>, Vec<f64>) {
    assert!(n >= 2, "cell rule needs at least a 2-point budget per axis");
    let half = n.div_ceil(2);
    let (tu, wu) = gauss_legendre(half);
    let (tv, wv) = gauss_legendre(half);
    let mut pts = Vec::with_capacity(4 * half * half);
    let mut wts = Vec::with_capacity(4 * half * half);
    for (ui, wui) in tu.iter().zip(&wu) {
        // Radial coordinate on [0, 1].
        let u = 0.5 * (ui + 1.0);
        for (vi, wvi) in tv.iter().zip(&wv) {
            // Triangle with outer edge s = 1/2: (s, t) = (u/2, u v/2),
            // ds dt = (u/4) du dv, plus the du = dx/2 rescaling.
            let w = wui * wvi * u / 8.0;
            let a = 0.5 * u;
            let b = 0.5 * u * vi;
            pts.push([a, b]);
            wts.push(w);
            pts.push([-a, -b]);
            wts.push(w);
            pts.push([-b, a]);
            wts.push(w);
            pts.push([b, -a]);
            wts.push(w);
        }
    }
    (pts, wts)
}

/// Affine rescaling of a [−1, 1] rule to [a, b].
pub fn scaled_to_interval(nodes: &[f64], weights: &[f64], a: f64, b: f64) -> (Vec<f64>, Vec<f64>) {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (b + a);
    (
        nodes.iter().map(|t| mid + half * t).collect(),
        weights.iter().map(|w| w * half).collect(),
    )
}
