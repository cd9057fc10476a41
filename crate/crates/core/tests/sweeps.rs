use cavity_zeno::analytic::{critical_tau_m, CavityParams};
use cavity_zeno::phase_sum::fold_angle;
use cavity_zeno::sweep::{
    argmax, fig2_curves, fig3_grid, format_float, grid_has_ridge, on_ridge, read_csv, write_csv, CompareRow, Fig2Row,
    ResultRow, SweepError, SweepGrid, RIDGE_TOLERANCE,
};
use cavity_zeno::zenotheorem::ConvergencePoint;
use proptest::prelude::*;

fn rounded(x: f64) -> f64 {
    format_float(x).parse().unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    // at fixed t, n ∝ (sin(N eps/2) / N)^2, which falls until N eps/2 reaches π
    #[test]
    fn off_critical_column_has_monotone_prefix(tau_m in 1e-6..2e-3_f64) {
        let p = CavityParams::reference();
        let eps = fold_angle(p.xi(tau_m)).abs();
        prop_assume!(eps > 0.05);
        let t = 1e-3;
        let node = (std::f64::consts::TAU / eps).floor() as u64;
        let taus: Vec<f64> = (1..=node).map(|n| t / n as f64).collect();
        let rows = fig3_grid(&p, &SweepGrid::new(taus, vec![tau_m], t).unwrap()).unwrap();
        for w in rows.windows(2) {
            prop_assert!(w[1].tau_s < w[0].tau_s);
            prop_assert!(w[1].n_mean <= w[0].n_mean * (1.0 + 1e-12), "{:?} -> {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn grid_maximum_sits_on_ridge(
        tau_lo in 2e-6..5e-5_f64,
        tau_span in 1e-5..5e-4_f64,
        m_lo in 1e-6..6e-4_f64,
        m_span in 1e-4..2e-3_f64,
        size in 4_usize..20,
    ) {
        let p = CavityParams::reference();
        let mut grid = SweepGrid::linear((tau_lo, tau_lo + tau_span), size, (m_lo, m_lo + m_span), size, 1e-3).unwrap();
        grid.snap_to_critical(&p);
        prop_assume!(grid_has_ridge(&p, &grid));
        let rows = fig3_grid(&p, &grid).unwrap();
        let top = rows[argmax(&rows).unwrap()];
        prop_assert!(on_ridge(&p, top.tau_m_s, RIDGE_TOLERANCE));
        prop_assert!(rows.iter().all(|r| (0.0..=1.0).contains(&r.n_mean_normalized)));
    }
}

#[test]
fn default_grid_is_deterministic_on_disk() {
    let p = CavityParams::reference();
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    let grid = SweepGrid::fig3_default(&p, 64).unwrap();
    write_csv(&fig3_grid(&p, &grid).unwrap(), &a).unwrap();
    write_csv(&fig3_grid(&p, &grid).unwrap(), &b).unwrap();
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(bytes, std::fs::read(&b).unwrap());
    let text = String::from_utf8(bytes).unwrap();
    assert!(!text.contains('\r'));
    assert_eq!(text.lines().count(), 64 * 64 + 1);
    assert_eq!(
        text.lines().next().unwrap(),
        "tau_s,tau_m_s,n_cycles,n_mean,n_mean_normalized,source"
    );
}

#[test]
fn csv_round_trip() {
    let p = CavityParams::reference();
    let dir = tempfile::tempdir().unwrap();

    let grid = SweepGrid::fig3_default(&p, 12).unwrap();
    let rows = fig3_grid(&p, &grid).unwrap();
    let path = dir.path().join("fig3.csv");
    write_csv(&rows, &path).unwrap();
    let back: Vec<ResultRow> = read_csv(&path).unwrap();
    assert_eq!(back.len(), rows.len());
    for (r, b) in rows.iter().zip(&back) {
        assert_eq!(b.tau_s, rounded(r.tau_s));
        assert_eq!(b.tau_m_s, rounded(r.tau_m_s));
        assert_eq!(b.n_cycles, r.n_cycles);
        assert_eq!(b.n_mean, rounded(r.n_mean));
        assert_eq!(b.n_mean_normalized, rounded(r.n_mean_normalized));
        assert_eq!(b.source, r.source);
    }
    // a second pass is exact
    let again = dir.path().join("again.csv");
    write_csv(&back, &again).unwrap();
    assert_eq!(read_csv::<ResultRow>(&again).unwrap(), back);
    assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&again).unwrap());

    let crit = critical_tau_m(&p, 1).unwrap() + 3.5e-6;
    let fig2 = fig2_curves(&p, 50e-6, 30, 5e-3, crit).unwrap();
    let path = dir.path().join("fig2.csv");
    write_csv(&fig2, &path).unwrap();
    let back: Vec<Fig2Row> = read_csv(&path).unwrap();
    for (r, b) in fig2.iter().zip(&back) {
        assert_eq!(b.n, r.n);
        assert_eq!(b.n_crit, rounded(r.n_crit));
    }

    let pts = vec![ConvergencePoint {
        n_cycles: 64,
        zeno_error: 0.25,
        diagonal_error: 0.0,
    }];
    let path = dir.path().join("theorem.csv");
    write_csv(&pts, &path).unwrap();
    assert_eq!(
        std::fs::read_to_string(&path).unwrap(),
        "N,zeno_error\n64,2.50000000000e-1\n"
    );
}

#[test]
fn read_rejects_foreign_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.csv");
    std::fs::write(&path, "N,n_free,n_zeno,n_crit\n1,0,0,0\n").unwrap();
    let err = read_csv::<CompareRow>(&path).unwrap_err();
    assert!(matches!(err, SweepError::Csv { .. }));
    assert!(err.to_string().contains("x.csv"));
}

#[test]
fn empty_rows_are_not_written() {
    let dir = tempfile::tempdir().unwrap();
    let err = write_csv::<Fig2Row>(&[], dir.path().join("e.csv")).unwrap_err();
    assert!(matches!(err, SweepError::NoRows(_)));
}
