//! Dielectric response on the imaginary frequency axis.
//!
//! Frequencies are expressed as spatial frequencies ξ = ω/c in rad·m⁻¹, so a
//! material is described by ε(iξ) directly. For any causal passive medium
//! ε(iξ) is real, ≥ 1, and monotonically decreasing in ξ, which keeps the
//! whole scattering computation in real arithmetic.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Dielectric model of a half-space or a grating fill medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DielectricModel {
    /// Ideal mirror. Handled structurally by the scattering code; it has no
    /// finite permittivity and [`epsilon_imag`] rejects it.
    PerfectConductor,
    /// Non-dispersive dielectric with ε ≥ 1.
    Constant { epsilon: f64 },
    /// Drude metal, ε(iξ) = 1 + ω_p² / (ξ(ξ + γ_p)), with ω_p and γ_p given
    /// as spatial frequencies in rad·m⁻¹.
    Drude {
        plasma_rad_per_m: f64,
        relaxation_rad_per_m: f64,
    },
}

/// Vacuum counts as `Constant { epsilon: 1.0 }`.
pub const VACUUM: DielectricModel = DielectricModel::Constant { epsilon: 1.0 };

#[derive(Debug, Error, PartialEq)]
pub enum MaterialError {
    #[error("imaginary frequency must be positive, got {0}")]
    NonPositiveFrequency(f64),
    #[error("perfect conductor has no finite permittivity")]
    PerfectConductor,
    #[error("constant permittivity must be >= 1, got {0}")]
    EpsilonBelowOne(f64),
    #[error("Drude plasma frequency must be positive, got {0}")]
    NonPositivePlasma(f64),
    #[error("Drude relaxation rate must be >= 0, got {0}")]
    NegativeRelaxation(f64),
}

impl DielectricModel {
    /// Validates the model parameters.
    pub fn validate(&self) -> Result<(), MaterialError> {
        match *self {
            DielectricModel::PerfectConductor => Ok(()),
            DielectricModel::Constant { epsilon } => {
                if epsilon >= 1.0 && epsilon.is_finite() {
                    Ok(())
                } else {
                    Err(MaterialError::EpsilonBelowOne(epsilon))
                }
            }
            DielectricModel::Drude {
                plasma_rad_per_m,
                relaxation_rad_per_m,
            } => {
                if !(plasma_rad_per_m > 0.0 && plasma_rad_per_m.is_finite()) {
                    Err(MaterialError::NonPositivePlasma(plasma_rad_per_m))
                } else if !(relaxation_rad_per_m >= 0.0 && relaxation_rad_per_m.is_finite()) {
                    Err(MaterialError::NegativeRelaxation(relaxation_rad_per_m))
                } else {
                    Ok(())
                }
            }
        }
    }

    /// True for the ideal-mirror variant.
    pub fn is_perfect_conductor(&self) -> bool {
        matches!(self, DielectricModel::PerfectConductor)
    }
}

/// Permittivity ε(iξ) at imaginary spatial frequency ξ > 0 (rad·m⁻¹).
///
/// Fails for ξ ≤ 0 and for [`DielectricModel::PerfectConductor`], which must
/// be treated structurally by the caller rather than through a large finite ε.
pub fn epsilon_imag(model: DielectricModel, xi: f64) -> Result<f64, MaterialError> {
    model.validate()?;
    if !(xi > 0.0) {
        return Err(MaterialError::NonPositiveFrequency(xi));
    }
    match model {
        DielectricModel::PerfectConductor => Err(MaterialError::PerfectConductor),
        DielectricModel::Constant { epsilon } => Ok(epsilon),
        DielectricModel::Drude {
            plasma_rad_per_m: wp,
            relaxation_rad_per_m: gp,
        } => Ok(1.0 + wp * wp / (xi * (xi + gp))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn constant_model_returns_epsilon() {
        let eps = epsilon_imag(DielectricModel::Constant { epsilon: 4.0 }, 1.0e6).unwrap();
        assert_relative_eq!(eps, 4.0);
    }

    #[test]
    fn drude_at_plasma_frequency_without_relaxation_gives_two() {
        let gold_like = DielectricModel::Drude {
            plasma_rad_per_m: 4.56e7,
            relaxation_rad_per_m: 0.0,
        };
        let eps = epsilon_imag(gold_like, 4.56e7).unwrap();
        assert_relative_eq!(eps, 2.0, max_relative = 1e-14);
    }

    #[test]
    fn drude_gold_regression_pin() {
        // Closed-form evaluation at xi = 1e7 rad/m, frozen once:
        // 1 + (4.56e7)^2 / (1e7 * (1e7 + 1.77e5)) = 21.43195440699617
        let gold = DielectricModel::Drude {
            plasma_rad_per_m: 4.56e7,
            relaxation_rad_per_m: 1.77e5,
        };
        let eps = epsilon_imag(gold, 1.0e7).unwrap();
        let pinned = 1.0 + 4.56e7_f64.powi(2) / (1.0e7 * (1.0e7 + 1.77e5));
        assert_relative_eq!(eps, pinned, max_relative = 1e-15);
        assert_relative_eq!(eps, 21.43195440699617, max_relative = 1e-12);
    }

    #[test]
    fn drude_tends_to_vacuum_at_high_frequency() {
        let gold = DielectricModel::Drude {
            plasma_rad_per_m: 4.56e7,
            relaxation_rad_per_m: 1.77e5,
        };
        let xi = 1.0e3 * 4.56e7;
        let eps = epsilon_imag(gold, xi).unwrap();
        assert!(eps - 1.0 < 1.0e-6, "eps - 1 = {}", eps - 1.0);
    }

    #[test]
    fn rejects_nonpositive_frequency_and_perfect_conductor() {
        let gold = DielectricModel::Drude {
            plasma_rad_per_m: 4.56e7,
            relaxation_rad_per_m: 1.77e5,
        };
        assert!(matches!(
            epsilon_imag(gold, 0.0),
            Err(MaterialError::NonPositiveFrequency(_))
        ));
        assert!(matches!(
            epsilon_imag(gold, -1.0),
            Err(MaterialError::NonPositiveFrequency(_))
        ));
        assert_eq!(
            epsilon_imag(DielectricModel::PerfectConductor, 1.0e6),
            Err(MaterialError::PerfectConductor)
        );
    }

    #[test]
    fn rejects_invalid_parameters() {
        assert!(epsilon_imag(DielectricModel::Constant { epsilon: 0.5 }, 1.0).is_err());
        let bad = DielectricModel::Drude {
            plasma_rad_per_m: -1.0,
            relaxation_rad_per_m: 0.0,
        };
        assert!(epsilon_imag(bad, 1.0).is_err());
    }

    #[test]
    fn drude_is_monotone_decreasing() {
        let gold = DielectricModel::Drude {
            plasma_rad_per_m: 4.56e7,
            relaxation_rad_per_m: 1.77e5,
        };
        let mut last = f64::INFINITY;
        for decade in 0..14 {
            let xi = 1.0e3 * 10f64.powi(decade);
            let eps = epsilon_imag(gold, xi).unwrap();
            assert!(eps >= 1.0);
            assert!(eps < last);
            last = eps;
        }
    }
}
