//! Tripod torsion balance: mode structure, thermal noise floor, and a
//! time-domain Langevin simulation of the deflection readout.
//!
//! The suspended plate hangs from three threads anchored at offsets `a_s`
//! and `b_s` from the symmetry axis on the two attachment planes. That
//! geometry makes the rotation mode much softer than the pendulum mode,
//! which is the whole point of the instrument: a weak static torque shows
//! up as a large twist angle while every translational disturbance stays
//! parked at a far higher frequency.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use thiserror::Error;

use crate::K_BOLTZMANN;

#[derive(Debug, Error)]
pub enum BalanceError {
    #[error("invalid balance parameter: {msg}")]
    Domain { msg: String },
    #[error("time step {dt:.3e} s exceeds the resolution bound {limit:.3e} s")]
    UnstableStep { dt: f64, limit: f64 },
}

fn domain(msg: impl Into<String>) -> BalanceError {
    BalanceError::Domain { msg: msg.into() }
}

/// Physical parameters of the balance, all in SI units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BalanceParams {
    /// Mass of the suspended cylindrical plate (kg).
    pub mass: f64,
    /// Radius of the plate (m).
    pub radius: f64,
    /// Length of the suspension threads (m).
    pub thread_length: f64,
    /// Thread anchor offset on the upper attachment plane (m).
    pub offset_a: f64,
    /// Thread anchor offset on the lower attachment plane (m).
    pub offset_b: f64,
    /// Environmental temperature (K).
    pub temperature: f64,
    /// Rotational damping coefficient (N·m·s). Cold damping enters the
    /// model only through this value.
    pub damping: f64,
    /// Gravitational acceleration (m·s⁻²).
    pub gravity: f64,
}

impl BalanceParams {
    /// The tripod described in the feasibility study: a 0.5 g, 5 mm plate
    /// on 20 cm threads with 1 mm / 60 µm anchor offsets, at room
    /// temperature, actively damped to the critical value.
    pub fn reference() -> Self {
        let mut p = Self {
            mass: 0.5e-3,
            radius: 5.0e-3,
            thread_length: 0.2,
            offset_a: 1.0e-3,
            offset_b: 60.0e-6,
            temperature: 300.0,
            damping: 0.0,
            gravity: 9.81,
        };
        p.damping = critical_damping(&p);
        p
    }

    pub fn validate(&self) -> Result<(), BalanceError> {
        let fields = [
            (self.mass, "mass"),
            (self.radius, "radius"),
            (self.thread_length, "thread length"),
            (self.offset_a, "offset a"),
            (self.offset_b, "offset b"),
            (self.temperature, "temperature"),
            (self.damping, "damping"),
            (self.gravity, "gravity"),
        ];
        for (value, name) in fields {
            if !(value > 0.0 && value.is_finite()) {
                return Err(domain(format!("{name} must be positive, got {value:.3e}")));
            }
        }
        Ok(())
    }
}

/// Mode frequencies and stiffnesses derived from the suspension geometry.
#[derive(Debug, Clone, Copy)]
pub struct Mechanics {
    /// Moment of inertia of the plate about its axis, Mρ²/2 (kg·m²).
    pub inertia: f64,
    /// Pendulum (translation) mode angular frequency √(g/ℓ) (rad·s⁻¹).
    pub pendulum_frequency: f64,
    /// Rotation mode angular frequency ω_t·√(2 a_s b_s)/ρ (rad·s⁻¹).
    pub rotation_frequency: f64,
    /// Effective torsion constant κ = I ω_r² (N·m·rad⁻¹).
    pub torsion_constant: f64,
    /// Pendulum stiffness k = M ω_t² (N·m⁻¹).
    pub pendulum_stiffness: f64,
}

impl Mechanics {
    /// ω_t/ω_r = ρ/√(2 a_s b_s): how far the stiff modes sit above the
    /// soft rotation mode.
    pub fn frequency_ratio(&self) -> f64 {
        self.pendulum_frequency / self.rotation_frequency
    }

    /// The design target keeps the pendulum mode at least a decade above
    /// the rotation mode; anything less and the single-mode model here
    /// stops being trustworthy.
    pub fn is_well_decoupled(&self) -> bool {
        self.frequency_ratio() >= 10.0
    }
}

/// Mode frequencies and stiffnesses of the suspension.
///
/// Small anchor offsets buy a soft rotation mode: ω_r²/ω_t² = 2 a_s b_s/ρ².
pub fn derived_mechanics(p: &BalanceParams) -> Result<Mechanics, BalanceError> {
    p.validate()?;
    let inertia = 0.5 * p.mass * p.radius * p.radius;
    let pendulum_frequency = (p.gravity / p.thread_length).sqrt();
    let rotation_frequency =
        pendulum_frequency * (2.0 * p.offset_a * p.offset_b).sqrt() / p.radius;
    Ok(Mechanics {
        inertia,
        pendulum_frequency,
        rotation_frequency,
        torsion_constant: inertia * rotation_frequency * rotation_frequency,
        pendulum_stiffness: p.mass * pendulum_frequency * pendulum_frequency,
    })
}

/// Damping at which the rotation mode just stops ringing, γ = 2 I ω_r.
pub fn critical_damping(p: &BalanceParams) -> f64 {
    let inertia = 0.5 * p.mass * p.radius * p.radius;
    let rotation_frequency =
        (p.gravity / p.thread_length).sqrt() * (2.0 * p.offset_a * p.offset_b).sqrt() / p.radius;
    2.0 * inertia * rotation_frequency
}

/// Thermal angle spectrum S_θ(ω) = 2 k_B T γ / ((κ − Iω²)² + γ²ω²).
///
/// This is the symmetric density in angular frequency: ⟨θ²⟩ = ∫ S_θ dω/2π
/// over the whole line. The one-sided density against frequency in hertz,
/// the convention spectrum analyzers report, is G(f) = 2 S_θ(2πf).
pub fn noise_spectrum(p: &BalanceParams, omega: f64) -> Result<f64, BalanceError> {
    let mech = derived_mechanics(p)?;
    if !(omega >= 0.0) {
        return Err(domain(format!("frequency must be nonnegative, got {omega:.3e}")));
    }
    let detune = mech.torsion_constant - mech.inertia * omega * omega;
    Ok(2.0 * K_BOLTZMANN * p.temperature * p.damping
        / (detune * detune + p.damping * p.damping * omega * omega))
}

/// Thermal torque floor √(2 k_B T γ) in N·m·Hz⁻¹ᐟ², valid well below ω_r.
///
/// Equal to κ·√(S_θ(0)) exactly: the smallest slow torque that clears the
/// thermal angle noise in a one-hertz bandwidth.
pub fn min_detectable_torque(p: &BalanceParams) -> Result<f64, BalanceError> {
    p.validate()?;
    Ok((2.0 * K_BOLTZMANN * p.temperature * p.damping).sqrt())
}

/// Torque floor with the damping pinned at its critical value, √(4 k_B T I ω_r).
///
/// The operating point of an actively cooled balance; the configured
/// `damping` field is ignored.
pub fn min_detectable_torque_critical(p: &BalanceParams) -> Result<f64, BalanceError> {
    let mech = derived_mechanics(p)?;
    Ok((4.0 * K_BOLTZMANN * p.temperature * mech.inertia * mech.rotation_frequency).sqrt())
}

/// Static twist under a constant torque, θ = τ/κ.
pub fn static_deflection(p: &BalanceParams, torque: f64) -> Result<f64, BalanceError> {
    let mech = derived_mechanics(p)?;
    if !torque.is_finite() {
        return Err(domain(format!("torque must be finite, got {torque:.3e}")));
    }
    Ok(torque / mech.torsion_constant)
}

/// Sampled deflection history from [`simulate_langevin`].
#[derive(Debug, Clone)]
pub struct LangevinTrace {
    /// Sampling interval (s).
    pub dt: f64,
    /// Twist angle at t = 0, dt, 2·dt, … (rad).
    pub theta: Vec<f64>,
}

impl LangevinTrace {
    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        let dt = self.dt;
        (0..self.theta.len()).map(move |i| i as f64 * dt)
    }

    /// Sample variance about the sample mean.
    pub fn sample_variance(&self) -> f64 {
        let n = self.theta.len() as f64;
        let mean = self.theta.iter().sum::<f64>() / n;
        self.theta.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / n
    }
}

/// Upper bound on samples per trace; above this the request is almost
/// certainly a units mistake, not an experiment.
const MAX_TRACE_SAMPLES: usize = 200_000_000;

/// Integrate I θ̈ + γ θ̇ + κ θ = τ_applied(t) + τ_thermal over `duration`.
///
/// The thermal torque is white with two-sided density 2 k_B T γ, the
/// strength fluctuation–dissipation pairs with the damping, so the trace
/// reproduces both the noise spectrum and equipartition ⟨θ²⟩ = k_B T/κ.
///
/// The update is the exact solution of the linear system over each step:
/// the one-step map e^{Ah} of the damped oscillator plus a Gaussian
/// increment with the exact covariance P − e^{Ah}P e^{Aᵀh}, where P is the
/// stationary covariance diag(k_BT/κ, k_BT/I). No timestep can make that
/// recursion blow up; the `dt` bound rejected here is a sampling
/// resolution contract (the applied torque is held constant across a step
/// at its midpoint value, and callers expect the fast scale resolved),
/// not a stability limit.
///
/// The initial state is drawn from the undriven thermal ensemble, so a
/// torque switched on at t = 0 is watched from cold start exactly like a
/// real measurement, and a τ = 0 run is stationary from the first sample.
/// Traces are deterministic per seed.
pub fn simulate_langevin(
    p: &BalanceParams,
    applied_torque: impl Fn(f64) -> f64,
    duration: f64,
    dt: f64,
    seed: u64,
) -> Result<LangevinTrace, BalanceError> {
    let mech = derived_mechanics(p)?;
    if !(duration > 0.0 && duration.is_finite()) {
        return Err(domain(format!("duration must be positive, got {duration:.3e}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(domain(format!("time step must be positive, got {dt:.3e}")));
    }
    let fast_rate = mech.rotation_frequency.max(p.damping / mech.inertia);
    let limit = 0.05 / fast_rate;
    if dt >= limit {
        return Err(BalanceError::UnstableStep { dt, limit });
    }
    let steps = (duration / dt).ceil() as usize;
    if steps + 1 > MAX_TRACE_SAMPLES {
        return Err(domain(format!(
            "trace of {} samples exceeds the {} sample cap",
            steps + 1,
            MAX_TRACE_SAMPLES
        )));
    }

    let omega0 = mech.rotation_frequency;
    let lambda = 0.5 * p.damping / mech.inertia;

    // One-step propagator of (θ, θ̇): Φ = e^{Ah} in closed form. The same
    // two coefficients c = cos(ω_d h) and s = sin(ω_d h)/ω_d cover every
    // damping regime once the trig pair is swapped for cosh/sinh past
    // critical.
    let h = dt;
    let disc = lambda * lambda - omega0 * omega0;
    let (c, s) = if disc < 0.0 {
        let wd = (-disc).sqrt();
        let x = wd * h;
        (x.cos(), h * sinc(x))
    } else {
        let mu = disc.sqrt();
        let x = mu * h;
        (x.cosh(), h * sinhc(x))
    };
    let decay = (-lambda * h).exp();
    let phi = [
        [decay * (c + lambda * s), decay * s],
        [decay * (-omega0 * omega0 * s), decay * (c - lambda * s)],
    ];

    // Stationary covariance P = diag(k_BT/κ, k_BT/I); the per-step noise
    // covariance is Q = P − ΦPΦᵀ, exact for the linear system.
    let p_theta = K_BOLTZMANN * p.temperature / mech.torsion_constant;
    let p_vel = K_BOLTZMANN * p.temperature / mech.inertia;
    let q11 = p_theta - (phi[0][0] * phi[0][0] * p_theta + phi[0][1] * phi[0][1] * p_vel);
    let q12 = -(phi[0][0] * phi[1][0] * p_theta + phi[0][1] * phi[1][1] * p_vel);
    let q22 = p_vel - (phi[1][0] * phi[1][0] * p_theta + phi[1][1] * phi[1][1] * p_vel);
    // Cholesky of the 2×2 Q; clamps absorb roundoff at tiny steps.
    let l11 = q11.max(0.0).sqrt();
    let l21 = if l11 > 0.0 { q12 / l11 } else { 0.0 };
    let l22 = (q22 - l21 * l21).max(0.0).sqrt();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw = |rng: &mut ChaCha8Rng| -> f64 { StandardNormal.sample(rng) };

    let mut theta = p_theta.sqrt() * draw(&mut rng);
    let mut vel = p_vel.sqrt() * draw(&mut rng);
    let mut trace = Vec::with_capacity(steps + 1);
    trace.push(theta);

    for i in 0..steps {
        let t_mid = (i as f64 + 0.5) * h;
        let rest = applied_torque(t_mid) / mech.torsion_constant;
        let (dth, dvel) = (theta - rest, vel);
        let z1 = draw(&mut rng);
        let z2 = draw(&mut rng);
        theta = rest + phi[0][0] * dth + phi[0][1] * dvel + l11 * z1;
        vel = phi[1][0] * dth + phi[1][1] * dvel + l21 * z1 + l22 * z2;
        trace.push(theta);
    }

    Ok(LangevinTrace { dt, theta: trace })
}

/// sin(x)/x without the 0/0 hole.
fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sin() / x
    }
}

/// sinh(x)/x without the 0/0 hole.
fn sinhc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else {
        x.sinh() / x
    }
}
