//! Closed-form model of the driven cavity interrupted by dispersive kicks.
//!
//! A drive pulse of length `tau` displaces the field (in the frame rotating
//! at the cavity frequency) by
//!
//! ```text
//! alpha(tau) = (e^{-i delta tau} - 1) f / delta
//! ```
//!
//! and contributes a global phase `phi(tau) = (sin(delta tau) - delta tau) f^2 / delta^2`.
//! A measurement window of length `tau_m` rotates the field by `∓xi_m`,
//! `xi_m = chi tau_m`, depending on the atomic level. After `N` cycles each
//! branch is again a coherent state whose label is a geometric sum of the
//! kicked displacements.
//!
//! All frequencies are angular (rad/s), all times in seconds.

use num_complex::Complex64;
use std::f64::consts::TAU;
use thiserror::Error;

use crate::phase_sum::{dirichlet_ratio, fold_angle, is_resonant, phase_sum};

/// `|delta tau|` below this switches `alpha` and `phi` to their series limits.
pub const SMALL_DETUNING_THRESHOLD: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("dispersive shift chi is zero; there is no measurement to be critical")]
    NoMeasurement,
    #[error("resonance index k must be at least 1")]
    InvalidResonanceIndex,
}

fn require(name: &'static str, value: f64, ok: bool, reason: &'static str) -> Result<(), AnalyticError> {
    if ok && value.is_finite() {
        Ok(())
    } else {
        Err(AnalyticError::InvalidParameter { name, value, reason })
    }
}

/// Physical constants of the cavity, drive and dispersive atom.
///
/// The drive frequency is stored implicitly as `omega + delta` so that the
/// detuning is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CavityParams {
    omega: f64,
    delta: f64,
    f: f64,
    chi: f64,
}

impl CavityParams {
    pub fn new(omega: f64, delta: f64, f: f64, chi: f64) -> Result<Self, AnalyticError> {
        require("omega", omega, true, "must be finite")?;
        require("delta", delta, true, "must be finite")?;
        require("f", f, f >= 0.0, "drive strength must be non-negative")?;
        require("chi", chi, true, "must be finite")?;
        Ok(Self { omega, delta, f, chi })
    }

    /// chi = 1e4, delta = 0.5, f = 400 (rad/s), omega = 0.
    pub fn reference() -> Self {
        Self {
            omega: 0.0,
            delta: 0.5,
            f: 400.0,
            chi: 1.0e4,
        }
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    /// Drive frequency `omega + delta`.
    pub fn omega_f(&self) -> f64 {
        self.omega + self.delta
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn f(&self) -> f64 {
        self.f
    }

    /// Dispersive shift `g^2 / Delta`.
    pub fn chi(&self) -> f64 {
        self.chi
    }

    /// Kick angle `xi_m = chi tau_m`.
    pub fn xi(&self, tau_m: f64) -> f64 {
        self.chi * tau_m
    }

    pub fn with_omega(self, omega: f64) -> Self {
        Self { omega, ..self }
    }

    pub fn with_delta(self, delta: f64) -> Self {
        Self { delta, ..self }
    }

    pub fn with_f(self, f: f64) -> Self {
        Self { f, ..self }
    }

    pub fn with_chi(self, chi: f64) -> Self {
        Self { chi, ..self }
    }
}

/// Bang-bang timing: `N` repetitions of (drive for `tau`, measure for `tau_m`).
///
/// `N = 0` is allowed and denotes the empty sequence.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PulseSchedule {
    tau: f64,
    tau_m: f64,
    n_cycles: u64,
}

impl PulseSchedule {
    pub fn new(tau: f64, tau_m: f64, n_cycles: u64) -> Result<Self, AnalyticError> {
        require("tau", tau, tau > 0.0, "pulse duration must be positive")?;
        require(
            "tau_m",
            tau_m,
            tau_m >= 0.0,
            "measurement duration must be non-negative",
        )?;
        Ok(Self { tau, tau_m, n_cycles })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn tau_m(&self) -> f64 {
        self.tau_m
    }

    pub fn n_cycles(&self) -> u64 {
        self.n_cycles
    }

    /// Total drive time `t = N tau`.
    pub fn t_total(&self) -> f64 {
        self.n_cycles as f64 * self.tau
    }

    pub fn with_cycles(self, n_cycles: u64) -> Self {
        Self { n_cycles, ..self }
    }

    pub fn with_tau_m(self, tau_m: f64) -> Result<Self, AnalyticError> {
        Self::new(self.tau, tau_m, self.n_cycles)
    }
}

/// Coherent labels and phases of the two atomic branches after `N` cycles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchRecord {
    pub alpha_plus: Complex64,
    pub alpha_minus: Complex64,
    pub theta_plus: f64,
    pub theta_minus: f64,
    /// `N phi(tau)`.
    pub phi_common: f64,
    pub xi_m: f64,
}

impl BranchRecord {
    /// Mean photon number, shared by both branches.
    pub fn mean_photon(&self) -> f64 {
        self.alpha_plus.norm_sqr()
    }

    /// Total branch phases `N phi(tau) + theta_±`.
    pub fn branch_phases(&self) -> (f64, f64) {
        (self.phi_common + self.theta_plus, self.phi_common + self.theta_minus)
    }
}

/// `alpha(tau) = (e^{-i delta tau} - 1) f / delta`, written as
/// `-2i f sin(delta tau / 2) e^{-i delta tau / 2} / delta` to avoid cancellation.
pub fn displacement_alpha(params: &CavityParams, tau: f64) -> Complex64 {
    debug_assert!(tau >= 0.0);
    let f = params.f;
    let x = params.delta * tau;
    if x.abs() < SMALL_DETUNING_THRESHOLD {
        // -i f tau (1 - i x / 2)
        return Complex64::new(0.0, -f * tau) * Complex64::new(1.0, -x / 2.0);
    }
    let half = x / 2.0;
    Complex64::new(0.0, -2.0 * f * half.sin() / params.delta) * Complex64::from_polar(1.0, -half)
}

/// `sin x - x`, by its Taylor series where direct evaluation cancels.
fn sin_minus_identity(x: f64) -> f64 {
    if x.abs() >= 0.5 {
        return x.sin() - x;
    }
    let x2 = x * x;
    let mut term = -x * x2 / 6.0;
    let mut sum = term;
    let mut k = 3.0;
    loop {
        term *= -x2 / ((2.0 * k - 2.0) * (2.0 * k - 1.0));
        if term.abs() <= f64::EPSILON * sum.abs() {
            break;
        }
        sum += term;
        k += 1.0;
    }
    sum
}

/// `phi(tau) = (sin(delta tau) - delta tau) f^2 / delta^2`.
pub fn phase_phi(params: &CavityParams, tau: f64) -> f64 {
    debug_assert!(tau >= 0.0);
    let f2 = params.f * params.f;
    let x = params.delta * tau;
    if x.abs() < SMALL_DETUNING_THRESHOLD {
        return -f2 * params.delta * tau.powi(3) / 6.0;
    }
    sin_minus_identity(x) * f2 / (params.delta * params.delta)
}

/// Branch labels after `N` cycles:
/// `alpha_±N = alpha(tau) Σ_{k=1}^{N} e^{∓ik xi_m}` and
/// `theta_± = ±(|alpha|^2 / 2) (N sin xi_m - sin N xi_m) / (1 - cos xi_m)`.
pub fn branch_after_n(params: &CavityParams, sched: &PulseSchedule) -> BranchRecord {
    let alpha = displacement_alpha(params, sched.tau);
    let xi = params.xi(sched.tau_m);
    let n = sched.n_cycles;
    let sum = phase_sum(xi, n);
    let theta = if is_resonant(xi) || n == 0 {
        0.0
    } else {
        let eps = fold_angle(xi);
        let nf = n as f64;
        let half_sin = (eps / 2.0).sin();
        // 1 - cos eps = 2 sin^2(eps/2)
        alpha.norm_sqr() / 2.0 * (nf * eps.sin() - (nf * eps).sin()) / (2.0 * half_sin * half_sin)
    };
    BranchRecord {
        alpha_plus: alpha * sum,
        alpha_minus: alpha * sum.conj(),
        theta_plus: theta,
        theta_minus: -theta,
        phi_common: n as f64 * phase_phi(params, sched.tau),
        xi_m: xi,
    }
}

/// `n = |alpha(tau)|^2 sin^2(N xi_m / 2) / sin^2(xi_m / 2)`; `N^2 |alpha|^2` on resonance.
pub fn mean_photon_zeno(params: &CavityParams, sched: &PulseSchedule) -> f64 {
    let a2 = displacement_alpha(params, sched.tau).norm_sqr();
    let ratio = dirichlet_ratio(params.xi(sched.tau_m), sched.n_cycles);
    a2 * ratio * ratio
}

/// Upper bound `|alpha(tau)|^2 / sin^2(xi_m / 2)` on [`mean_photon_zeno`] over
/// all `N`; `None` on resonance, where growth is unbounded.
pub fn zeno_bound(params: &CavityParams, tau: f64, tau_m: f64) -> Option<f64> {
    let xi = params.xi(tau_m);
    if is_resonant(xi) {
        return None;
    }
    let s = (fold_angle(xi) / 2.0).sin();
    Some(displacement_alpha(params, tau).norm_sqr() / (s * s))
}

/// Photon number under an uninterrupted drive of duration `N tau`.
pub fn mean_photon_free(params: &CavityParams, n_cycles: u64, tau: f64) -> f64 {
    displacement_alpha(params, n_cycles as f64 * tau).norm_sqr()
}

/// Measurement time `2 k pi / |chi|` at which the kick is the identity.
pub fn critical_tau_m(params: &CavityParams, k: u32) -> Result<f64, AnalyticError> {
    if params.chi == 0.0 {
        return Err(AnalyticError::NoMeasurement);
    }
    if k == 0 {
        return Err(AnalyticError::InvalidResonanceIndex);
    }
    Ok(k as f64 * TAU / params.chi.abs())
}

/// Probability that the field is still in vacuum, `e^{-n}`.
pub fn vacuum_survival(params: &CavityParams, sched: &PulseSchedule) -> f64 {
    (-mean_photon_zeno(params, sched)).exp()
}

/// `|⟨alpha_+N | alpha_-N⟩| = exp(-|alpha_+N - alpha_-N|^2 / 2)`.
pub fn atom_coherence(params: &CavityParams, sched: &PulseSchedule) -> f64 {
    let rec = branch_after_n(params, sched);
    (-(rec.alpha_plus - rec.alpha_minus).norm_sqr() / 2.0).exp()
}

/// Whether `xi_m` is within the resonance threshold of `2 pi Z`.
pub fn is_critical(params: &CavityParams, tau_m: f64) -> bool {
    is_resonant(params.xi(tau_m))
}
