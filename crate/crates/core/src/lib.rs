//! Decoherence-based quantum Zeno effect in a driven cavity probed by a
//! dispersively coupled two-level atom.
//!
//! The crate has three layers:
//!
//! - [`analytic`]: closed forms for the drive displacement, the dispersive
//!   phase kicks, the branch states after `N` bang-bang cycles and the mean
//!   photon number, including the critical measurement times where the kick
//!   becomes the identity.
//! - [`propagator`]: an independent numerical oracle that integrates the
//!   driven-cavity Schrödinger equation on a truncated Fock space and applies
//!   the kicks exactly.
//! - [`zenotheorem`]: finite-dimensional checks of the general statement that
//!   frequent diagonal unitary kicks freeze transitions.
//!
//! [`sweep`] and [`cli`] turn these into CSV tables.
//!
//! ```
//! use cavity_zeno::analytic::{mean_photon_zeno, CavityParams, PulseSchedule};
//!
//! let params = CavityParams::reference();
//! let sched = PulseSchedule::new(50e-6, 5e-3, 100)?;
//! assert!(mean_photon_zeno(&params, &sched) < 0.0229);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod analytic;
pub mod cli;
pub mod phase_sum;
pub mod propagator;
pub mod statespace;
pub mod sweep;
pub mod zenotheorem;

pub use num_complex::Complex64;

// The guide's code blocks are compiled and run as doc-tests.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/fock-space.md")]
    mod fock_space {}
    #[doc = include_str!("../../../book/src/drive-and-kicks.md")]
    mod drive_and_kicks {}
    #[doc = include_str!("../../../book/src/critical-times.md")]
    mod critical_times {}
    #[doc = include_str!("../../../book/src/oracle.md")]
    mod oracle {}
    #[doc = include_str!("../../../book/src/zeno-theorem.md")]
    mod zeno_theorem {}
    #[doc = include_str!("../../../book/src/sweeps.md")]
    mod sweeps {}
}
