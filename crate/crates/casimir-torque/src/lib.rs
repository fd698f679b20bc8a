//! Casimir energy and torque between rotated lamellar gratings.
//!
//! Two identical one-dimensional rectangular gratings face each other across a
//! vacuum gap and are rotated by an angle θ about the gap normal. The crate
//! evaluates the zero-temperature Casimir interaction with a scattering
//! (log-determinant) formulation on the imaginary frequency axis,
//!
//! ```text
//! E(θ)/A = (ħc / 8π³) ∫₀^∞ dξ ∬_cell d²k  ln det[ 1 − R₁ 𝒯 R₂ 𝒯 ]
//! ```
//!
//! where R₁ and R₂ are the reflection operators of the two gratings in a mixed
//! diffraction basis, 𝒯 is the one-way translation across the gap, and the k
//! integral runs over one primitive cell of the combined reciprocal lattice.
//! The torque per unit area follows by differentiating in θ. A companion
//! module models the torsion balance proposed to detect that torque and
//! simulates its thermal angle noise.
//!
//! Reflection matrices are produced by a rigorous coupled-wave (Fourier modal)
//! solver specialised to the imaginary axis, where every propagation constant
//! is real and the computation involves only decaying exponentials.
//!
//! A rendered guide with worked examples lives in `book/`; its code snippets
//! are compiled as doctests through the hidden module at the bottom of this
//! file, so the guide cannot drift from the API.

pub mod balance;
pub mod basis;
pub mod energy;
pub mod lifshitz;
pub mod materials;
pub mod psd;
pub mod quadrature;
pub mod rcwa;

/// Reduced Planck constant, J·s.
pub const HBAR: f64 = 1.054571817e-34;
/// Speed of light in vacuum, m·s⁻¹.
pub const C_LIGHT: f64 = 299792458.0;
/// Boltzmann constant, J·K⁻¹.
pub const K_BOLTZMANN: f64 = 1.380649e-23;
/// ħc, J·m.
pub const HBAR_C: f64 = HBAR * C_LIGHT;

// Book chapters compiled as doctests (`cargo test --doc`). Each chapter's
// fenced Rust blocks must build and run against the current API.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/materials.md")]
    mod materials {}
    #[doc = include_str!("../../../book/src/gratings.md")]
    mod gratings {}
    #[doc = include_str!("../../../book/src/rotated-basis.md")]
    mod rotated_basis {}
    #[doc = include_str!("../../../book/src/energy.md")]
    mod energy {}
    #[doc = include_str!("../../../book/src/torque.md")]
    mod torque {}
    #[doc = include_str!("../../../book/src/balance.md")]
    mod balance {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
