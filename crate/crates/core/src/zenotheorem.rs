//! Finite-dimensional checks of the operator-algebra Zeno theorem.
//!
//! A system generator `H` (d×d Hermitian) is interrupted every `tau` by a
//! diagonal unitary kick `M = diag(e^{-i h_j tau_m})`. The controlled
//! evolution `U_c = [M U(tau)]^N` factorizes as
//! `[Π_{n=1}^{N} M^n U M^{-n}] M^N`, the off-diagonal part of the summed
//! conjugated generators is `Λ_{jj'} H_{jj'}` with the Dirichlet factor
//! `Λ = Σ_n e^{-i n tau_m Δ_{jj'}}`, and for fixed `t = N tau` the evolution
//! approaches `e^{-i H_d t} M^N` as `N` grows.
//!
//! Apparatus branch generators are scalars `h_j` here, one per system level.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use std::f64::consts::TAU;
use thiserror::Error;

use crate::phase_sum::{is_resonant, phase_sum};
use crate::statespace::{hermiticity_error, unitary_propagator, CMatrix, StateSpaceError};

pub const HERMITICITY_TOLERANCE: f64 = 1e-13;
/// Branch levels closer than this count as degenerate.
pub const DEGENERACY_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TheoremError {
    #[error("system generator is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("expected {expected} branch levels for a {expected}-dimensional system, got {got}")]
    LevelCount { expected: usize, got: usize },
    #[error("branch levels {0} and {1} are degenerate")]
    Degenerate(usize, usize),
    #[error("invalid parameter: {0}")]
    Invalid(String),
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
}

/// A generator, a diagonal measurement, and the bang-bang timing.
#[derive(Debug, Clone, PartialEq)]
pub struct ZenoSystem {
    h: CMatrix,
    levels: Vec<f64>,
    tau: f64,
    tau_m: f64,
    n_cycles: u64,
}

impl ZenoSystem {
    pub fn new(h: CMatrix, levels: Vec<f64>, tau: f64, tau_m: f64, n_cycles: u64) -> Result<Self, TheoremError> {
        if h.nrows() != h.ncols() || h.nrows() == 0 {
            return Err(TheoremError::Invalid(format!(
                "generator must be square, got {}x{}",
                h.nrows(),
                h.ncols()
            )));
        }
        let herm = hermiticity_error(&h);
        if herm > HERMITICITY_TOLERANCE {
            return Err(TheoremError::NotHermitian(herm));
        }
        if levels.len() != h.nrows() {
            return Err(TheoremError::LevelCount {
                expected: h.nrows(),
                got: levels.len(),
            });
        }
        if !(tau >= 0.0 && tau_m >= 0.0 && tau.is_finite() && tau_m.is_finite()) {
            return Err(TheoremError::Invalid(format!(
                "times must be non-negative, got tau={tau}, tau_m={tau_m}"
            )));
        }
        Ok(Self {
            h,
            levels,
            tau,
            tau_m,
            n_cycles,
        })
    }

    /// Gaussian Hermitian generator `(A + A†)/2`, `A_ij ~ N(0,1) + i N(0,1)`,
    /// with standard-normal branch levels.
    pub fn random(dim: usize, seed: u64, tau: f64, tau_m: f64, n_cycles: u64) -> Result<Self, TheoremError> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = gaussian_hermitian(dim, &mut rng);
        let levels = (0..dim).map(|_| StandardNormal.sample(&mut rng)).collect();
        Self::new(h, levels, tau, tau_m, n_cycles)
    }

    /// Gaussian Hermitian generator with "clock" kicks `h_j tau_m = 2 pi j / d`:
    /// `M^d = 1` and the levels are evenly spread around the unit circle.
    pub fn random_clock(dim: usize, seed: u64, tau: f64, tau_m: f64, n_cycles: u64) -> Result<Self, TheoremError> {
        if tau_m <= 0.0 {
            return Err(TheoremError::Invalid("clock kicks need tau_m > 0".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = gaussian_hermitian(dim, &mut rng);
        let levels = (0..dim).map(|j| TAU * j as f64 / (dim as f64 * tau_m)).collect();
        Self::new(h, levels, tau, tau_m, n_cycles)
    }

    pub fn dim(&self) -> usize {
        self.h.nrows()
    }

    pub fn generator(&self) -> &CMatrix {
        &self.h
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
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

    /// Same generator and kicks, new timing.
    pub fn with_timing(&self, tau: f64, n_cycles: u64) -> Self {
        Self {
            tau,
            n_cycles,
            ..self.clone()
        }
    }

    /// `M^p = diag(e^{-i p h_j tau_m})`, `p` may be negative.
    pub fn measurement_power(&self, p: i64) -> CMatrix {
        let d = DVector::from_iterator(
            self.dim(),
            self.levels
                .iter()
                .map(|h| Complex64::from_polar(1.0, -(p as f64) * h * self.tau_m)),
        );
        CMatrix::from_diagonal(&d)
    }

    pub fn measurement(&self) -> CMatrix {
        self.measurement_power(1)
    }

    /// `U(tau) = e^{-i H tau}`.
    pub fn free_propagator(&self) -> Result<CMatrix, TheoremError> {
        Ok(unitary_propagator(&self.h, self.tau)?)
    }

    /// First pair of (numerically) equal branch levels, if any.
    pub fn degenerate_pair(&self) -> Option<(usize, usize)> {
        for j in 0..self.dim() {
            for k in j + 1..self.dim() {
                if (self.levels[j] - self.levels[k]).abs() < DEGENERACY_TOLERANCE {
                    return Some((j, k));
                }
            }
        }
        None
    }

    /// Pairs with `tau_m Δ_{jj'} ∈ 2πZ`, where kicks do not suppress the coupling.
    pub fn critical_pairs(&self) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for j in 0..self.dim() {
            for k in j + 1..self.dim() {
                if is_resonant(self.tau_m * (self.levels[j] - self.levels[k])) {
                    out.push((j, k));
                }
            }
        }
        out
    }
}

fn gaussian_hermitian(dim: usize, rng: &mut ChaCha8Rng) -> CMatrix {
    let a = CMatrix::from_fn(dim, dim, |_, _| {
        Complex64::new(StandardNormal.sample(&mut *rng), StandardNormal.sample(&mut *rng))
    });
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactorizationReport {
    pub max_elementwise_error: f64,
    pub lambda_check_error: f64,
    pub zeno_error: f64,
}

fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

/// Largest singular value.
pub fn operator_norm(a: &CMatrix) -> f64 {
    a.clone().singular_values().iter().copied().fold(0.0, f64::max)
}

/// `[M U(tau)]^N`, by repeated multiplication.
pub fn compose_uc(sys: &ZenoSystem) -> Result<CMatrix, TheoremError> {
    let step = sys.measurement() * sys.free_propagator()?;
    let mut uc = CMatrix::identity(sys.dim(), sys.dim());
    for _ in 0..sys.n_cycles {
        uc = &step * uc;
    }
    Ok(uc)
}

/// Max elementwise deviation between `[M U]^N` and `[Π_{n=1}^{N} M^n U M^{-n}] M^N`
/// (product ordered with `n = 1` leftmost).
pub fn factorization_identity(sys: &ZenoSystem) -> Result<f64, TheoremError> {
    let lhs = compose_uc(sys)?;
    let u = sys.free_propagator()?;
    let mut product = CMatrix::identity(sys.dim(), sys.dim());
    for n in 1..=sys.n_cycles as i64 {
        let un = sys.measurement_power(n) * &u * sys.measurement_power(-n);
        product *= un;
    }
    let rhs = product * sys.measurement_power(sys.n_cycles as i64);
    Ok(max_abs_diff(&lhs, &rhs))
}

/// `Λ = [sin(tau_m N Δ/2) / sin(tau_m Δ/2)] e^{-i tau_m (N+1) Δ/2}`, i.e.
/// `Σ_{n=1}^{N} e^{-i n tau_m Δ}`; the resonant limit is `N`.
pub fn lambda_factor(delta: f64, tau_m: f64, n_cycles: u64) -> Complex64 {
    phase_sum(tau_m * delta, n_cycles)
}

/// Max deviation between `Σ_n (M^n H M^{-n})_off` summed term by term and
/// `Λ_{jj'} H_{jj'}` on every off-diagonal entry.
pub fn offdiagonal_sum_check(sys: &ZenoSystem) -> Result<f64, TheoremError> {
    if let Some((j, k)) = sys.degenerate_pair() {
        return Err(TheoremError::Degenerate(j, k));
    }
    let d = sys.dim();
    let mut sum = CMatrix::zeros(d, d);
    for n in 1..=sys.n_cycles as i64 {
        sum += sys.measurement_power(n) * &sys.h * sys.measurement_power(-n);
    }
    let mut worst = 0.0_f64;
    for j in 0..d {
        for k in 0..d {
            if j == k {
                continue;
            }
            let lam = lambda_factor(sys.levels[j] - sys.levels[k], sys.tau_m, sys.n_cycles);
            worst = worst.max((sum[(j, k)] - lam * sys.h[(j, k)]).norm());
        }
    }
    Ok(worst)
}

/// Max deviation between [`lambda_factor`] and the explicit geometric sum,
/// over every pair of branch levels.
pub fn lambda_check(sys: &ZenoSystem) -> f64 {
    let mut worst = 0.0_f64;
    for j in 0..sys.dim() {
        for k in 0..sys.dim() {
            let delta = sys.levels[j] - sys.levels[k];
            let direct: Complex64 = (1..=sys.n_cycles)
                .map(|n| Complex64::from_polar(1.0, -(n as f64) * sys.tau_m * delta))
                .sum();
            worst = worst.max((lambda_factor(delta, sys.tau_m, sys.n_cycles) - direct).norm());
        }
    }
    worst
}

/// `e^{-i H_d t} M^N` with `t = N tau`.
pub fn zeno_target(sys: &ZenoSystem) -> CMatrix {
    let t = sys.n_cycles as f64 * sys.tau;
    let d = DVector::from_iterator(
        sys.dim(),
        (0..sys.dim()).map(|j| {
            Complex64::from_polar(
                1.0,
                -sys.h[(j, j)].re * t - sys.n_cycles as f64 * sys.levels[j] * sys.tau_m,
            )
        }),
    );
    CMatrix::from_diagonal(&d)
}

/// Operator norm of `U_c − e^{-i H_d t} M^N`.
pub fn zeno_error(sys: &ZenoSystem) -> Result<f64, TheoremError> {
    Ok(operator_norm(&(compose_uc(sys)? - zeno_target(sys))))
}

pub fn factorization_report(sys: &ZenoSystem) -> Result<FactorizationReport, TheoremError> {
    Ok(FactorizationReport {
        max_elementwise_error: factorization_identity(sys)?,
        lambda_check_error: lambda_check(sys),
        zeno_error: zeno_error(sys)?,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvergencePoint {
    pub n_cycles: u64,
    pub zeno_error: f64,
    /// Largest deviation on the diagonal of `U_c − e^{-i H_d t} M^N`.
    pub diagonal_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub points: Vec<ConvergencePoint>,
    /// Non-empty when some pair is kicked at a multiple of 2π; the
    /// convergence claim does not apply then.
    pub critical_pairs: Vec<(usize, usize)>,
}

impl ConvergenceReport {
    pub fn has_critical_warning(&self) -> bool {
        !self.critical_pairs.is_empty()
    }

    /// `err(N_{i+1}) / err(N_i)` for consecutive entries.
    pub fn ratios(&self) -> Vec<f64> {
        self.points
            .windows(2)
            .map(|w| w[1].zeno_error / w[0].zeno_error)
            .collect()
    }

    /// Least-squares slope of `ln err` against `ln N`.
    pub fn loglog_slope(&self) -> f64 {
        let xs: Vec<f64> = self.points.iter().map(|p| (p.n_cycles as f64).ln()).collect();
        let ys: Vec<f64> = self.points.iter().map(|p| p.zeno_error.ln()).collect();
        let n = xs.len() as f64;
        let mx = xs.iter().sum::<f64>() / n;
        let my = ys.iter().sum::<f64>() / n;
        let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
        let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
        sxy / sxx
    }

    pub fn strictly_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].zeno_error < w[0].zeno_error)
    }
}

/// Zeno error for each `N` in `n_list` at fixed total time: `tau = t_total / N`,
/// generator and kicks taken from `template`.
pub fn zeno_convergence(
    template: &ZenoSystem,
    t_total: f64,
    n_list: &[u64],
) -> Result<ConvergenceReport, TheoremError> {
    if !(t_total > 0.0 && t_total.is_finite()) {
        return Err(TheoremError::Invalid(format!(
            "total time must be positive, got {t_total}"
        )));
    }
    let mut points = Vec::with_capacity(n_list.len());
    for &n in n_list {
        if n == 0 {
            return Err(TheoremError::Invalid("N must be positive".into()));
        }
        let sys = template.with_timing(t_total / n as f64, n);
        let diff = compose_uc(&sys)? - zeno_target(&sys);
        let diagonal_error = (0..sys.dim()).map(|j| diff[(j, j)].norm()).fold(0.0, f64::max);
        points.push(ConvergencePoint {
            n_cycles: n,
            zeno_error: operator_norm(&diff),
            diagonal_error,
        });
    }
    Ok(ConvergenceReport {
        points,
        critical_pairs: template.critical_pairs(),
    })
}
