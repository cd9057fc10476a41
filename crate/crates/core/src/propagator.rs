//! Numerical oracle: direct integration of the driven-cavity Schrödinger
//! equation, interleaved with exact dispersive kicks.
//!
//! During a drive pulse each atomic block sees the field Hamiltonian
//!
//! ```text
//! H(t) = eps a†a + f (e^{-i omega_F t} a† + e^{i omega_F t} a)
//! ```
//!
//! with `eps = omega` (or `omega ± chi` when the residual dispersive shift is
//! kept). Two integrators are available: a fixed-step classical RK4 acting on
//! the sparse ladder structure, and a piecewise-exponential scheme that
//! freezes the generator at each substep midpoint and applies its exact
//! exponential. Either can run in the lab frame or in the frame rotating with
//! the drive, where the generator is time-independent.

use num_complex::Complex64;
use thiserror::Error;

use crate::analytic::{branch_after_n, AnalyticError, BranchRecord, CavityParams, PulseSchedule};
use crate::statespace::{
    coherent_state, required_dim, unitary_propagator, CMatrix, CVector, FockSpace, JointState, StateSpaceError,
};

/// Largest tolerated norm drift over one pulse.
pub const NORM_DRIFT_TOLERANCE: f64 = 1e-8;
pub const MIN_STEPS_PER_PULSE: usize = 16;
pub const DEFAULT_STEPS_PER_PULSE: usize = 1024;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PropagatorError {
    #[error("invalid integrator configuration: {0}")]
    Config(String),
    #[error(
        "norm drifted by {drift:e} over one pulse with {steps} steps; retry with at least {suggested} steps per pulse"
    )]
    Accuracy { drift: f64, steps: usize, suggested: usize },
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    FixedStepRk4,
    PiecewiseExponential,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Frame {
    Lab,
    DriveRotating,
}

/// How the drive phase reference behaves across measurement windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DrivePhase {
    /// The drive clock stops while the drive is off; pulse `n` starts at
    /// drive time `(n - 1) tau`.
    Frozen,
    /// The drive clock keeps running through measurement windows, and the
    /// field rotates freely at `omega` while the drive is off.
    WallClock,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegratorConfig {
    pub steps_per_pulse: usize,
    pub method: Method,
    pub frame: Frame,
    pub drive_phase: DrivePhase,
    /// Keep the `±chi a†a` shift on during drive pulses.
    pub dispersive_during_drive: bool,
    /// Fixed Fock dimension; sized from the photon-number bound when `None`.
    pub dim: Option<usize>,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self {
            steps_per_pulse: DEFAULT_STEPS_PER_PULSE,
            method: Method::PiecewiseExponential,
            frame: Frame::DriveRotating,
            drive_phase: DrivePhase::Frozen,
            dispersive_during_drive: false,
            dim: None,
        }
    }
}

impl IntegratorConfig {
    pub fn with_method(self, method: Method) -> Self {
        Self { method, ..self }
    }

    pub fn with_frame(self, frame: Frame) -> Self {
        Self { frame, ..self }
    }

    pub fn with_steps(self, steps_per_pulse: usize) -> Self {
        Self {
            steps_per_pulse,
            ..self
        }
    }

    pub fn with_dim(self, dim: usize) -> Self {
        Self { dim: Some(dim), ..self }
    }

    pub fn with_drive_phase(self, drive_phase: DrivePhase) -> Self {
        Self { drive_phase, ..self }
    }

    pub fn validate(&self) -> Result<(), PropagatorError> {
        if self.steps_per_pulse < MIN_STEPS_PER_PULSE {
            return Err(PropagatorError::Config(format!(
                "steps_per_pulse must be at least {MIN_STEPS_PER_PULSE}, got {}",
                self.steps_per_pulse
            )));
        }
        Ok(())
    }
}

/// Per-cycle observables of the numerical state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleRecord {
    pub cycle: u64,
    pub mean_photon: f64,
    pub vacuum_probability: f64,
    pub field_purity: f64,
    pub atom_coherence: f64,
    pub norm: f64,
}

impl CycleRecord {
    fn of(cycle: u64, state: &JointState) -> Self {
        Self {
            cycle,
            mean_photon: state.mean_photon(),
            vacuum_probability: state.vacuum_probability(),
            field_purity: state.field_purity(),
            atom_coherence: state.atom_coherence(),
            norm: state.norm(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Cycle 0 is the initial state.
    pub records: Vec<CycleRecord>,
    pub final_state: JointState,
    /// Drive-clock time at the end of the sequence.
    pub drive_time: f64,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.final_state.dim()
    }
}

/// `H psi` for `H = eps n + c a† + c* a`, using the ladder structure.
fn apply_generator(eps: f64, c: Complex64, psi: &[Complex64], out: &mut [Complex64]) {
    let d = psi.len();
    let cc = c.conj();
    for n in 0..d {
        let mut acc = psi[n] * (eps * n as f64);
        if n > 0 {
            acc += c * (n as f64).sqrt() * psi[n - 1];
        }
        if n + 1 < d {
            acc += cc * ((n + 1) as f64).sqrt() * psi[n + 1];
        }
        out[n] = acc;
    }
}

/// `psi_n *= e^{-i theta n}`.
fn rotate(psi: &mut [Complex64], theta: f64) {
    for (n, c) in psi.iter_mut().enumerate() {
        *c *= Complex64::from_polar(1.0, -theta * n as f64);
    }
}

/// Field propagation for one atomic block over a single pulse.
#[derive(Debug, Clone)]
struct BlockIntegrator {
    /// Coefficient of `a†a` in the lab frame.
    eps: f64,
    /// Dense substep propagator for the piecewise-exponential method.
    substep: Option<CMatrix>,
}

/// Precomputed single-pulse integrator, reusable across cycles.
#[derive(Debug, Clone)]
pub struct PulseIntegrator {
    dim: usize,
    tau: f64,
    f: f64,
    omega_f: f64,
    cfg: IntegratorConfig,
    blocks: [BlockIntegrator; 2],
}

impl PulseIntegrator {
    pub fn new(dim: usize, params: &CavityParams, tau: f64, cfg: &IntegratorConfig) -> Result<Self, PropagatorError> {
        cfg.validate()?;
        if !(tau >= 0.0 && tau.is_finite()) {
            return Err(PropagatorError::Config(format!(
                "pulse duration must be non-negative, got {tau}"
            )));
        }
        let fock = FockSpace::new(dim)?;
        let h = tau / cfg.steps_per_pulse as f64;
        let shift = if cfg.dispersive_during_drive { params.chi() } else { 0.0 };
        let make = |eps: f64| -> Result<BlockIntegrator, PropagatorError> {
            let substep = match cfg.method {
                Method::FixedStepRk4 => None,
                Method::PiecewiseExponential => {
                    // Lab frame: H(t_mid) = R(theta) [eps n + f X] R(theta)†, so only the
                    // bracket needs exponentiating. Drive frame: (eps - omega_F) n + f X.
                    let diag = match cfg.frame {
                        Frame::Lab => eps,
                        Frame::DriveRotating => eps - params.omega_f(),
                    };
                    let gen =
                        fock.number() * Complex64::new(diag, 0.0) + fock.quadrature() * Complex64::new(params.f(), 0.0);
                    Some(unitary_propagator(&gen, h)?)
                }
            };
            Ok(BlockIntegrator { eps, substep })
        };
        let plus = make(params.omega() + shift)?;
        let minus = if shift == 0.0 {
            plus.clone()
        } else {
            make(params.omega() - shift)?
        };
        Ok(Self {
            dim,
            tau,
            f: params.f(),
            omega_f: params.omega_f(),
            cfg: *cfg,
            blocks: [plus, minus],
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Advances `state` by one pulse starting at drive time `t_start`.
    /// No accuracy check; see [`propagate_drive`].
    pub fn apply(&self, state: &JointState, t_start: f64) -> Result<JointState, PropagatorError> {
        if state.dim() != self.dim {
            return Err(StateSpaceError::ShapeMismatch {
                expected: 2 * self.dim,
                got: 2 * state.dim(),
            }
            .into());
        }
        let mut out = state.clone();
        for (b, block) in self.blocks.iter().enumerate() {
            let psi = out.block_mut(b);
            self.evolve_block(block, psi, t_start);
        }
        Ok(out)
    }

    fn evolve_block(&self, block: &BlockIntegrator, psi: &mut [Complex64], t_start: f64) {
        let steps = self.cfg.steps_per_pulse;
        let h = self.tau / steps as f64;
        match self.cfg.frame {
            Frame::DriveRotating => {
                // psi_F = e^{+i omega_F t n} psi_lab
                rotate(psi, -self.omega_f * t_start);
                let eps = block.eps - self.omega_f;
                let c = Complex64::new(self.f, 0.0);
                match &block.substep {
                    Some(p) => {
                        let mut v = CVector::from_column_slice(psi);
                        for _ in 0..steps {
                            v = p * v;
                        }
                        psi.copy_from_slice(v.as_slice());
                    }
                    None => rk4(psi, h, steps, |_, x, y| apply_generator(eps, c, x, y), t_start),
                }
                rotate(psi, self.omega_f * (t_start + self.tau));
            }
            Frame::Lab => match &block.substep {
                Some(p) => {
                    let mut v = CVector::from_column_slice(psi);
                    for k in 0..steps {
                        let theta = self.omega_f * (t_start + (k as f64 + 0.5) * h);
                        rotate(v.as_mut_slice(), -theta);
                        v = p * v;
                        rotate(v.as_mut_slice(), theta);
                    }
                    psi.copy_from_slice(v.as_slice());
                }
                None => {
                    let (eps, f, wf) = (block.eps, self.f, self.omega_f);
                    rk4(
                        psi,
                        h,
                        steps,
                        |t, x, y| apply_generator(eps, Complex64::from_polar(f, -wf * t), x, y),
                        t_start,
                    )
                }
            },
        }
    }
}

/// Classical RK4 for `psi' = -i H(t) psi`, with `gen(t, psi, out)` writing `H(t) psi`.
fn rk4<G>(psi: &mut [Complex64], h: f64, steps: usize, gen: G, t0: f64)
where
    G: Fn(f64, &[Complex64], &mut [Complex64]),
{
    let d = psi.len();
    let mi = Complex64::new(0.0, -1.0);
    let (mut k1, mut k2, mut k3, mut k4) = (
        vec![Complex64::default(); d],
        vec![Complex64::default(); d],
        vec![Complex64::default(); d],
        vec![Complex64::default(); d],
    );
    let mut tmp = vec![Complex64::default(); d];
    for s in 0..steps {
        let t = t0 + s as f64 * h;
        gen(t, psi, &mut k1);
        for i in 0..d {
            k1[i] *= mi;
            tmp[i] = psi[i] + k1[i] * (h / 2.0);
        }
        gen(t + h / 2.0, &tmp, &mut k2);
        for i in 0..d {
            k2[i] *= mi;
            tmp[i] = psi[i] + k2[i] * (h / 2.0);
        }
        gen(t + h / 2.0, &tmp, &mut k3);
        for i in 0..d {
            k3[i] *= mi;
            tmp[i] = psi[i] + k3[i] * h;
        }
        gen(t + h, &tmp, &mut k4);
        for i in 0..d {
            k4[i] *= mi;
            psi[i] += (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
        }
    }
}

fn check_drift(before: f64, after: f64, steps: usize) -> Result<(), PropagatorError> {
    let drift = (after - before).abs();
    if drift > NORM_DRIFT_TOLERANCE {
        return Err(PropagatorError::Accuracy {
            drift,
            steps,
            suggested: 2 * steps,
        });
    }
    Ok(())
}

/// Advances `state` by a drive pulse of length `tau` starting at drive time `t_start`.
pub fn propagate_drive(
    state: &JointState,
    params: &CavityParams,
    tau: f64,
    cfg: &IntegratorConfig,
    t_start: f64,
) -> Result<JointState, PropagatorError> {
    let integrator = PulseIntegrator::new(state.dim(), params, tau, cfg)?;
    let out = integrator.apply(state, t_start)?;
    check_drift(state.norm(), out.norm(), cfg.steps_per_pulse)?;
    Ok(out)
}

/// Dispersive kick: the `|+⟩` block picks up `e^{-i xi n}`, the `|−⟩` block `e^{+i xi n}`.
pub fn apply_measurement(state: &JointState, params: &CavityParams, tau_m: f64) -> JointState {
    let xi = params.xi(tau_m);
    let mut out = state.clone();
    rotate(out.block_mut(0), xi);
    rotate(out.block_mut(1), -xi);
    out
}

/// Fock dimension for a sequence: the photon number never exceeds `(N f tau)^2`.
pub fn sequence_dim(params: &CavityParams, sched: &PulseSchedule) -> usize {
    let amp = sched.n_cycles() as f64 * params.f() * sched.tau();
    required_dim(amp * amp)
}

/// Runs `[M(tau_m) U(tau)]^N` on `(|+⟩ + |−⟩)/√2 ⊗ |0⟩`.
pub fn run_sequence(
    params: &CavityParams,
    sched: &PulseSchedule,
    cfg: &IntegratorConfig,
) -> Result<Trajectory, PropagatorError> {
    cfg.validate()?;
    let needed = sequence_dim(params, sched);
    let dim = match cfg.dim {
        Some(d) if d < needed => {
            let amp = sched.n_cycles() as f64 * params.f() * sched.tau();
            return Err(StateSpaceError::Truncation {
                mean_photons: amp * amp,
                required: needed,
                dim: d,
            }
            .into());
        }
        Some(d) => d,
        None => needed,
    };
    let integrator = PulseIntegrator::new(dim, params, sched.tau(), cfg)?;
    let mut state = JointState::initial(dim)?;
    let mut records = Vec::with_capacity(sched.n_cycles() as usize + 1);
    records.push(CycleRecord::of(0, &state));
    let mut clock = 0.0;
    for n in 1..=sched.n_cycles() {
        let next = integrator.apply(&state, clock)?;
        check_drift(state.norm(), next.norm(), cfg.steps_per_pulse)?;
        state = apply_measurement(&next, params, sched.tau_m());
        clock += sched.tau();
        if cfg.drive_phase == DrivePhase::WallClock {
            let free = params.omega() * sched.tau_m();
            rotate(state.block_mut(0), free);
            rotate(state.block_mut(1), free);
            clock += sched.tau_m();
        }
        records.push(CycleRecord::of(n, &state));
    }
    Ok(Trajectory {
        records,
        final_state: state,
        drive_time: clock,
    })
}

/// The closed-form state `Σ_± e^{i phi_±}/√2 |±⟩ ⊗ |alpha_±N e^{-i omega t}⟩`, `t = N tau`.
pub fn analytic_state(
    record: &BranchRecord,
    params: &CavityParams,
    sched: &PulseSchedule,
    dim: usize,
) -> Result<JointState, PropagatorError> {
    let rot = Complex64::from_polar(1.0, -params.omega() * sched.t_total());
    let (phase_plus, phase_minus) = record.branch_phases();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let plus = coherent_state(record.alpha_plus * rot, dim)? * Complex64::from_polar(s, phase_plus);
    let minus = coherent_state(record.alpha_minus * rot, dim)? * Complex64::from_polar(s, phase_minus);
    Ok(JointState::from_blocks(&plus, &minus)?)
}

/// `|⟨analytic psi_N | numeric psi_N⟩|^2`.
pub fn full_state_check(
    state: &JointState,
    record: &BranchRecord,
    params: &CavityParams,
    sched: &PulseSchedule,
) -> Result<f64, PropagatorError> {
    let analytic = analytic_state(record, params, sched, state.dim())?;
    Ok(analytic.fidelity(state)?)
}

/// Runs the sequence and compares the final state against the closed form.
pub fn sequence_fidelity(
    params: &CavityParams,
    sched: &PulseSchedule,
    cfg: &IntegratorConfig,
) -> Result<f64, PropagatorError> {
    let traj = run_sequence(params, sched, cfg)?;
    let record = branch_after_n(params, sched);
    full_state_check(&traj.final_state, &record, params, sched)
}
