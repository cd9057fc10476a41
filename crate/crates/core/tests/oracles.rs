mod common;

use cavity_zeno::analytic::{
    atom_coherence, branch_after_n, mean_photon_zeno, vacuum_survival, CavityParams, PulseSchedule,
};
use cavity_zeno::propagator::{run_sequence, Frame, IntegratorConfig, Method, PulseIntegrator};
use cavity_zeno::statespace::{coherent_state, unitary_propagator, JointState};
use cavity_zeno::zenotheorem::ZenoSystem;
use cavity_zeno::Complex64;
use common::{expm_taylor, max_abs, rel};

#[test]
fn eigen_exponential_matches_taylor_series() {
    for (seed, dim) in [(1_u64, 2), (2, 5), (3, 12), (4, 30)] {
        let sys = ZenoSystem::random(dim, seed, 0.1, 0.2, 1).unwrap();
        for t in [1e-3, 0.37, 2.0] {
            let eig = unitary_propagator(sys.generator(), t).unwrap();
            let taylor = expm_taylor(sys.generator(), t);
            let err = max_abs(&(eig - taylor));
            assert!(err < 1e-12, "dim {dim} t {t}: {err:e}");
        }
    }
}

// lab frame, time-dependent drive: RK4 error against the exact drive-frame
// exponential should fall 16x per step doubling
#[test]
fn rk4_is_fourth_order() {
    let p = CavityParams::new(2.0, 0.5, 1.0, 0.0).unwrap();
    let dim = 40;
    let state = JointState::initial(dim).unwrap();
    let exact_cfg = IntegratorConfig::default().with_steps(16);
    let exact = PulseIntegrator::new(dim, &p, 1.0, &exact_cfg)
        .unwrap()
        .apply(&state, 0.3)
        .unwrap();
    let mut errs = Vec::new();
    for steps in [16, 32, 64, 128] {
        let cfg = IntegratorConfig::default()
            .with_method(Method::FixedStepRk4)
            .with_frame(Frame::Lab)
            .with_steps(steps);
        let out = PulseIntegrator::new(dim, &p, 1.0, &cfg)
            .unwrap()
            .apply(&state, 0.3)
            .unwrap();
        errs.push((out.amplitudes() - exact.amplitudes()).norm());
    }
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((12.0..20.0).contains(&ratio), "{errs:?}");
    }
}

#[test]
fn frames_and_methods_agree() {
    let p = CavityParams::new(3.0e3, 40.0, 500.0, 1e4).unwrap();
    let field = coherent_state(Complex64::new(0.4, -0.3), 40).unwrap();
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let state = JointState::product(Complex64::new(s, 0.0), Complex64::new(s, 0.0), &field).unwrap();
    let base = IntegratorConfig::default().with_steps(2048);
    let reference = PulseIntegrator::new(40, &p, 1e-3, &base)
        .unwrap()
        .apply(&state, 2e-4)
        .unwrap();
    for (method, frame) in [
        (Method::FixedStepRk4, Frame::Lab),
        (Method::FixedStepRk4, Frame::DriveRotating),
        (Method::PiecewiseExponential, Frame::Lab),
    ] {
        let cfg = base.with_method(method).with_frame(frame);
        let out = PulseIntegrator::new(40, &p, 1e-3, &cfg)
            .unwrap()
            .apply(&state, 2e-4)
            .unwrap();
        let f = out.fidelity(&reference).unwrap();
        assert!(f > 1.0 - 1e-9, "{method:?} {frame:?}: {f}");
    }
}

#[test]
fn oracle_matches_all_closed_form_observables() {
    let p = CavityParams::reference();
    let s = PulseSchedule::new(50e-6, 5e-3, 40).unwrap();
    let traj = run_sequence(&p, &s, &IntegratorConfig::default().with_steps(64)).unwrap();
    for rec in &traj.records {
        let sn = s.with_cycles(rec.cycle);
        assert!((rec.mean_photon - mean_photon_zeno(&p, &sn)).abs() < 2e-6);
        assert!((rec.vacuum_probability - vacuum_survival(&p, &sn)).abs() < 2e-6);
        assert!((rec.atom_coherence - atom_coherence(&p, &sn)).abs() < 1e-6);
        assert!((rec.norm - 1.0).abs() < 1e-10);
    }
    let b = branch_after_n(&p, &s);
    assert!((traj.final_state.mean_photon() - b.mean_photon()).abs() < 2e-6);
}

#[test]
fn truncation_is_confined() {
    let p = CavityParams::reference().with_f(4000.0);
    let s = PulseSchedule::new(50e-6, 628.318_530_717_958_6e-6, 12).unwrap();
    let cfg = IntegratorConfig::default().with_steps(64);
    let small = run_sequence(&p, &s, &cfg).unwrap();
    let dim = small.dim();
    let large = run_sequence(&p, &s, &cfg.with_dim(dim * 3 / 2)).unwrap();
    let (a, b) = (small.records.last().unwrap(), large.records.last().unwrap());
    assert!(a.mean_photon > 5.0);
    assert!((a.mean_photon - b.mean_photon).abs() < 1e-8);
    assert!((a.vacuum_probability - b.vacuum_probability).abs() < 1e-8);
    assert!((a.atom_coherence - b.atom_coherence).abs() < 1e-8);
    assert!(rel(a.field_purity, b.field_purity) < 1e-8);
}
