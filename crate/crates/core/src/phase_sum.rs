//! Geometric sums of phase kicks, `Σ_{k=1}^{N} e^{−ikx}`.
//!
//! Both the cavity branch amplitudes and the off-diagonal Zeno factor reduce
//! to this Dirichlet-kernel sum. Near `x ∈ 2πZ` the closed form is 0/0, so the
//! angle is first folded into `(−π, π]` and a limit branch takes over.

use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

/// `|x mod 2π|` below this is treated as exactly resonant.
pub const RESONANCE_THRESHOLD: f64 = 1e-8;

/// `2π - TAU`: the part of `2π` lost when rounding it to `f64`.
const TAU_LO: f64 = 2.449_293_598_294_706_4e-16;

/// Folds `x` into `(−π, π]`. The winding count is removed with a two-term
/// `2π`, so many turns cost no accuracy.
pub fn fold_angle(x: f64) -> f64 {
    let m = (x / TAU).round();
    let r = (-m).mul_add(TAU, x) - m * TAU_LO;
    if r > PI {
        r - TAU
    } else if r <= -PI {
        r + TAU
    } else {
        r
    }
}

pub fn is_resonant(x: f64) -> bool {
    fold_angle(x).abs() < RESONANCE_THRESHOLD
}

/// `sin(N x/2) / sin(x/2)` evaluated on the folded angle; `N` on resonance.
pub fn dirichlet_ratio(x: f64, n: u64) -> f64 {
    let eps = fold_angle(x);
    if eps.abs() < RESONANCE_THRESHOLD {
        return n as f64;
    }
    (n as f64 * eps / 2.0).sin() / (eps / 2.0).sin()
}

/// `Σ_{k=1}^{N} e^{−ikx} = e^{−i(N+1)x/2} sin(Nx/2)/sin(x/2)`.
pub fn phase_sum(x: f64, n: u64) -> Complex64 {
    let eps = fold_angle(x);
    let phase = Complex64::from_polar(1.0, -(n as f64 + 1.0) * eps / 2.0);
    phase * dirichlet_ratio(eps, n)
}
