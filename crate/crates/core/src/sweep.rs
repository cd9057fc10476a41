//! Parameter sweeps over the closed forms and the oracle, and their CSV
//! persistence.
//!
//! CSV files have a fixed header, one row per record in generation order,
//! LF line endings, integers in decimal and floats in scientific notation
//! with 12 significant digits.

use rayon::prelude::*;
use std::path::{Path, PathBuf};
use thiserror::Error;

use crate::analytic::{
    critical_tau_m, is_critical, mean_photon_free, mean_photon_zeno, AnalyticError, CavityParams, PulseSchedule,
};
use crate::phase_sum::fold_angle;
use crate::propagator::{run_sequence, IntegratorConfig, PropagatorError};
use crate::zenotheorem::ConvergencePoint;

/// Extra measurement time past `tau_m*(k=1)` for the near-critical growth curve.
pub const NEAR_CRITICAL_OFFSET: f64 = 3.5e-6;
/// Relative mismatch `|N tau - t| / t` above which a grid row is flagged.
pub const DIVISIBILITY_TOLERANCE: f64 = 1e-6;
/// Distance in radians from `2 pi Z` that still counts as the critical ridge.
pub const RIDGE_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum SweepError {
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("no rows to write to {0}")]
    NoRows(PathBuf),
    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("CSV error in {path}: {message}")]
    Csv { path: PathBuf, message: String },
    #[error(transparent)]
    Analytic(#[from] AnalyticError),
    #[error(transparent)]
    Propagator(#[from] PropagatorError),
}

/// Photon growth at cycle `n` for the three reference schedules.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Fig2Row {
    pub n: u64,
    pub n_free: f64,
    pub n_zeno: f64,
    pub n_crit: f64,
}

/// Free growth, a Zeno-regime curve and a near-critical curve for `N = 1..=n_max`.
pub fn fig2_curves(
    params: &CavityParams,
    tau: f64,
    n_max: u64,
    tau_m_zeno: f64,
    tau_m_crit: f64,
) -> Result<Vec<Fig2Row>, SweepError> {
    let zeno = PulseSchedule::new(tau, tau_m_zeno, 0)?;
    let crit = PulseSchedule::new(tau, tau_m_crit, 0)?;
    Ok((1..=n_max)
        .map(|n| Fig2Row {
            n,
            n_free: mean_photon_free(params, n, tau),
            n_zeno: mean_photon_zeno(params, &zeno.with_cycles(n)),
            n_crit: mean_photon_zeno(params, &crit.with_cycles(n)),
        })
        .collect())
}

/// `tau_m*(k=1) + 3.5 µs`.
pub fn default_near_critical_tau_m(params: &CavityParams) -> Result<f64, SweepError> {
    Ok(critical_tau_m(params, 1)? + NEAR_CRITICAL_OFFSET)
}

/// The (tau, tau_m) plane at fixed total drive time.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub tau_values: Vec<f64>,
    pub tau_m_values: Vec<f64>,
    pub t_total: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect(),
    }
}

impl SweepGrid {
    pub fn new(tau_values: Vec<f64>, tau_m_values: Vec<f64>, t_total: f64) -> Result<Self, SweepError> {
        if tau_values.is_empty() || tau_m_values.is_empty() {
            return Err(SweepError::EmptyGrid);
        }
        if !(t_total > 0.0 && t_total.is_finite()) {
            return Err(SweepError::InvalidGrid(format!(
                "t_total must be positive, got {t_total}"
            )));
        }
        if let Some(bad) = tau_values.iter().find(|&&t| !(t > 0.0 && t.is_finite())) {
            return Err(SweepGrid::invalid("tau", *bad));
        }
        if let Some(bad) = tau_m_values.iter().find(|&&t| !(t >= 0.0 && t.is_finite())) {
            return Err(SweepGrid::invalid("tau_m", *bad));
        }
        Ok(Self {
            tau_values,
            tau_m_values,
            t_total,
        })
    }

    fn invalid(name: &str, value: f64) -> SweepError {
        SweepError::InvalidGrid(format!("{name} value {value} out of range"))
    }

    /// Linear axes `tau ∈ [tau_lo, tau_hi]`, `tau_m ∈ [tau_m_lo, tau_m_hi]`.
    pub fn linear(
        tau: (f64, f64),
        n_tau: usize,
        tau_m: (f64, f64),
        n_tau_m: usize,
        t_total: f64,
    ) -> Result<Self, SweepError> {
        Self::new(
            linspace(tau.0, tau.1, n_tau),
            linspace(tau_m.0, tau_m.1, n_tau_m),
            t_total,
        )
    }

    /// `size × size`, tau in [5 µs, 250 µs], tau_m in [1 µs, 1 ms], t = 1 ms, with
    /// the column nearest each in-range critical time moved onto it.
    pub fn fig3_default(params: &CavityParams, size: usize) -> Result<Self, SweepError> {
        let mut grid = Self::linear((5e-6, 250e-6), size, (1e-6, 1e-3), size, 1e-3)?;
        grid.snap_to_critical(params);
        grid.tau_values.sort_by(|a, b| b.partial_cmp(a).expect("finite"));
        Ok(grid)
    }

    /// Replaces, for every `tau_m*(k)` inside the axis range, the nearest
    /// `tau_m` value with `tau_m*(k)` exactly.
    pub fn snap_to_critical(&mut self, params: &CavityParams) {
        let (lo, hi) = self
            .tau_m_values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| (l.min(v), h.max(v)));
        let mut k = 1;
        while let Ok(crit) = critical_tau_m(params, k) {
            if crit > hi {
                break;
            }
            if crit >= lo {
                let nearest = self
                    .tau_m_values
                    .iter()
                    .enumerate()
                    .min_by(|a, b| (a.1 - crit).abs().partial_cmp(&(b.1 - crit).abs()).expect("finite"))
                    .map(|(i, _)| i)
                    .expect("non-empty axis");
                self.tau_m_values[nearest] = crit;
            }
            k += 1;
        }
    }

    /// `N = round(t / tau)`, at least 1.
    pub fn n_cycles_for(&self, tau: f64) -> u64 {
        ((self.t_total / tau).round() as u64).max(1)
    }

    /// Pulse lengths for which `N tau` misses `t` by more than one part in 10^6.
    pub fn flagged_taus(&self) -> Vec<f64> {
        self.tau_values
            .iter()
            .copied()
            .filter(|&tau| {
                let n = self.n_cycles_for(tau) as f64;
                (n * tau - self.t_total).abs() / self.t_total > DIVISIBILITY_TOLERANCE
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Source {
    Analytic,
    Oracle,
}

impl Source {
    pub fn as_str(&self) -> &'static str {
        match self {
            Source::Analytic => "analytic",
            Source::Oracle => "oracle",
        }
    }

    fn parse(s: &str) -> Option<Self> {
        match s {
            "analytic" => Some(Source::Analytic),
            "oracle" => Some(Source::Oracle),
            _ => None,
        }
    }
}

/// One cell of the `(tau, tau_m)` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResultRow {
    pub tau_s: f64,
    pub tau_m_s: f64,
    pub n_cycles: u64,
    pub n_mean: f64,
    pub n_mean_normalized: f64,
    pub source: Source,
}

/// Mean photon number on every grid cell (tau outer, tau_m inner), normalized
/// by the grid maximum.
pub fn fig3_grid(params: &CavityParams, grid: &SweepGrid) -> Result<Vec<ResultRow>, SweepError> {
    if grid.tau_values.is_empty() || grid.tau_m_values.is_empty() {
        return Err(SweepError::EmptyGrid);
    }
    let cells: Vec<(f64, f64)> = grid
        .tau_values
        .iter()
        .flat_map(|&tau| grid.tau_m_values.iter().map(move |&tau_m| (tau, tau_m)))
        .collect();
    let mut rows = cells
        .par_iter()
        .map(|&(tau, tau_m)| {
            let n = grid.n_cycles_for(tau);
            let sched = PulseSchedule::new(tau, tau_m, n)?;
            Ok(ResultRow {
                tau_s: tau,
                tau_m_s: tau_m,
                n_cycles: n,
                n_mean: mean_photon_zeno(params, &sched),
                n_mean_normalized: 0.0,
                source: Source::Analytic,
            })
        })
        .collect::<Result<Vec<_>, AnalyticError>>()?;
    let max = rows.iter().map(|r| r.n_mean).fold(0.0, f64::max);
    if max > 0.0 {
        for r in &mut rows {
            r.n_mean_normalized = r.n_mean / max;
        }
    }
    Ok(rows)
}

/// Whether `chi tau_m` is within `tol` radians of `2 pi Z`.
pub fn on_ridge(params: &CavityParams, tau_m: f64, tol: f64) -> bool {
    fold_angle(params.xi(tau_m)).abs() <= tol
}

/// Index of the first row holding the maximum `n_mean`.
pub fn argmax(rows: &[ResultRow]) -> Option<usize> {
    rows.iter()
        .enumerate()
        .max_by(|a, b| a.1.n_mean.partial_cmp(&b.1.n_mean).expect("finite"))
        .map(|(i, _)| i)
}

/// One cycle of an analytic-vs-oracle comparison.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareRow {
    pub n: u64,
    pub n_analytic: f64,
    pub n_numeric: f64,
    pub abs_err: f64,
}

/// Runs the oracle over the schedule and tabulates the closed form next to it.
pub fn oracle_compare(
    params: &CavityParams,
    sched: &PulseSchedule,
    cfg: &IntegratorConfig,
) -> Result<Vec<CompareRow>, SweepError> {
    let traj = run_sequence(params, sched, cfg)?;
    Ok(traj
        .records
        .iter()
        .skip(1)
        .map(|rec| {
            let n_analytic = mean_photon_zeno(params, &sched.with_cycles(rec.cycle));
            CompareRow {
                n: rec.cycle,
                n_analytic,
                n_numeric: rec.mean_photon,
                abs_err: (n_analytic - rec.mean_photon).abs(),
            }
        })
        .collect())
}

pub fn max_abs_error(rows: &[CompareRow]) -> f64 {
    rows.iter().map(|r| r.abs_err).fold(0.0, f64::max)
}

/// True when the critical-time column is exactly on the grid.
pub fn grid_has_ridge(params: &CavityParams, grid: &SweepGrid) -> bool {
    grid.tau_m_values.iter().any(|&t| t > 0.0 && is_critical(params, t))
}

/// A row type with a fixed CSV schema.
pub trait CsvRecord: Sized {
    const HEADER: &'static [&'static str];
    fn to_fields(&self) -> Vec<String>;
    fn from_fields(fields: &[&str]) -> Result<Self, String>;
}

/// 12 significant digits.
pub fn format_float(x: f64) -> String {
    format!("{x:.11e}")
}

fn parse_f64(s: &str) -> Result<f64, String> {
    s.parse().map_err(|_| format!("not a number: {s:?}"))
}

fn parse_u64(s: &str) -> Result<u64, String> {
    s.parse().map_err(|_| format!("not an integer: {s:?}"))
}

impl CsvRecord for Fig2Row {
    const HEADER: &'static [&'static str] = &["N", "n_free", "n_zeno", "n_crit"];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            format_float(self.n_free),
            format_float(self.n_zeno),
            format_float(self.n_crit),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self, String> {
        Ok(Self {
            n: parse_u64(f[0])?,
            n_free: parse_f64(f[1])?,
            n_zeno: parse_f64(f[2])?,
            n_crit: parse_f64(f[3])?,
        })
    }
}

impl CsvRecord for ResultRow {
    const HEADER: &'static [&'static str] = &["tau_s", "tau_m_s", "n_cycles", "n_mean", "n_mean_normalized", "source"];

    fn to_fields(&self) -> Vec<String> {
        vec![
            format_float(self.tau_s),
            format_float(self.tau_m_s),
            self.n_cycles.to_string(),
            format_float(self.n_mean),
            format_float(self.n_mean_normalized),
            self.source.as_str().to_string(),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self, String> {
        Ok(Self {
            tau_s: parse_f64(f[0])?,
            tau_m_s: parse_f64(f[1])?,
            n_cycles: parse_u64(f[2])?,
            n_mean: parse_f64(f[3])?,
            n_mean_normalized: parse_f64(f[4])?,
            source: Source::parse(f[5]).ok_or_else(|| format!("unknown source {:?}", f[5]))?,
        })
    }
}

impl CsvRecord for CompareRow {
    const HEADER: &'static [&'static str] = &["N", "n_analytic", "n_numeric", "abs_err"];

    fn to_fields(&self) -> Vec<String> {
        vec![
            self.n.to_string(),
            format_float(self.n_analytic),
            format_float(self.n_numeric),
            format_float(self.abs_err),
        ]
    }

    fn from_fields(f: &[&str]) -> Result<Self, String> {
        Ok(Self {
            n: parse_u64(f[0])?,
            n_analytic: parse_f64(f[1])?,
            n_numeric: parse_f64(f[2])?,
            abs_err: parse_f64(f[3])?,
        })
    }
}

impl CsvRecord for ConvergencePoint {
    const HEADER: &'static [&'static str] = &["N", "zeno_error"];

    fn to_fields(&self) -> Vec<String> {
        vec![self.n_cycles.to_string(), format_float(self.zeno_error)]
    }

    fn from_fields(f: &[&str]) -> Result<Self, String> {
        let zeno_error = parse_f64(f[1])?;
        Ok(Self {
            n_cycles: parse_u64(f[0])?,
            zeno_error,
            diagonal_error: f64::NAN,
        })
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> SweepError + '_ {
    move |source| SweepError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> SweepError {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => SweepError::Io {
            path: path.to_path_buf(),
            source,
        },
        other => SweepError::Csv {
            path: path.to_path_buf(),
            message: format!("{other:?}"),
        },
    }
}

/// Renders rows to CSV text.
pub fn to_csv_string<R: CsvRecord>(rows: &[R]) -> String {
    let mut out = R::HEADER.join(",");
    out.push('\n');
    for r in rows {
        out.push_str(&r.to_fields().join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv<R: CsvRecord>(rows: &[R], path: impl AsRef<Path>) -> Result<(), SweepError> {
    let path = path.as_ref();
    if rows.is_empty() {
        return Err(SweepError::NoRows(path.to_path_buf()));
    }
    let file = std::fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(file);
    w.write_record(R::HEADER).map_err(|e| csv_err(path, e))?;
    for r in rows {
        w.write_record(r.to_fields()).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(io_err(path))?;
    Ok(())
}

/// Reads a file written by [`write_csv`], checking the header.
pub fn read_csv<R: CsvRecord>(path: impl AsRef<Path>) -> Result<Vec<R>, SweepError> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(io_err(path))?;
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
    if header.iter().collect::<Vec<_>>() != R::HEADER {
        return Err(SweepError::Csv {
            path: path.to_path_buf(),
            message: format!(
                "expected header {:?}, found {:?}",
                R::HEADER.join(","),
                header.iter().collect::<Vec<_>>().join(",")
            ),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| csv_err(path, e))?;
        let fields: Vec<&str> = rec.iter().collect();
        let row = R::from_fields(&fields).map_err(|message| SweepError::Csv {
            path: path.to_path_buf(),
            message: format!("row {}: {message}", i + 2),
        })?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::{displacement_alpha, zeno_bound};

    const TAU_REF: f64 = 5.0e-5;

    #[test]
    fn fig2_examples() {
        let p = CavityParams::reference();
        let crit = default_near_critical_tau_m(&p).unwrap();
        let rows = fig2_curves(&p, TAU_REF, 200, 5e-3, crit).unwrap();
        assert_eq!(rows.len(), 200);
        let r100 = rows[99];
        assert_eq!(r100.n, 100);
        assert!((r100.n_free - 4.0).abs() / 4.0 < 1e-3);
        assert!(rows.iter().all(|r| r.n_zeno <= 0.0229));
        assert!(r100.n_crit >= 10.0 * r100.n_zeno);
    }

    #[test]
    fn single_cell_grid() {
        let p = CavityParams::reference();
        let grid = SweepGrid::new(vec![1e-3], vec![5e-3], 1e-3).unwrap();
        let rows = fig3_grid(&p, &grid).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].n_cycles, 1);
        let a2 = displacement_alpha(&p, 1e-3).norm_sqr();
        assert!((rows[0].n_mean - a2).abs() < 1e-15);
        assert_eq!(rows[0].n_mean_normalized, 1.0);
    }

    #[test]
    fn empty_grid_is_rejected() {
        assert!(matches!(
            SweepGrid::new(vec![], vec![1e-3], 1e-3),
            Err(SweepError::EmptyGrid)
        ));
        let grid = SweepGrid {
            tau_values: vec![1e-5],
            tau_m_values: vec![],
            t_total: 1e-3,
        };
        assert!(matches!(
            fig3_grid(&CavityParams::reference(), &grid),
            Err(SweepError::EmptyGrid)
        ));
    }

    #[test]
    fn critical_column_is_nearly_tau_independent() {
        let p = CavityParams::reference();
        let crit = critical_tau_m(&p, 1).unwrap();
        let taus: Vec<f64> = [200, 100, 50, 20, 10].iter().map(|&n| 1e-3 / n as f64).collect();
        let grid = SweepGrid::new(taus, vec![crit], 1e-3).unwrap();
        let rows = fig3_grid(&p, &grid).unwrap();
        for r in &rows {
            let a2 = displacement_alpha(&p, r.tau_s).norm_sqr();
            let n = r.n_cycles as f64;
            assert!((r.n_mean - n * n * a2).abs() / r.n_mean < 1e-12);
            // (f t)^2 = 0.16
            assert!((r.n_mean - 0.16).abs() / 0.16 < 1e-6);
        }
    }

    #[test]
    fn zeno_column_vanishes_as_tau_shrinks() {
        let p = CavityParams::reference();
        let taus: Vec<f64> = [1_u64, 4, 16, 64, 256, 1024].iter().map(|&n| 1e-3 / n as f64).collect();
        let grid = SweepGrid::new(taus.clone(), vec![5e-3], 1e-3).unwrap();
        let rows = fig3_grid(&p, &grid).unwrap();
        for (r, &tau) in rows.iter().zip(&taus) {
            assert!(r.n_mean <= zeno_bound(&p, tau, 5e-3).unwrap() * (1.0 + 1e-12));
        }
        assert!(rows.last().unwrap().n_mean < 1e-5);
    }

    #[test]
    fn default_grid_snaps_critical_column() {
        let p = CavityParams::reference();
        let grid = SweepGrid::fig3_default(&p, 64).unwrap();
        assert_eq!(grid.tau_values.len(), 64);
        assert_eq!(grid.tau_m_values.len(), 64);
        assert!(grid_has_ridge(&p, &grid));
        assert_eq!(grid.tau_values[0], 250e-6);
        assert_eq!(*grid.tau_values.last().unwrap(), 5e-6);
        let exact = SweepGrid::new(vec![1e-4, 2e-4, 3e-4], vec![1e-4], 1e-3).unwrap();
        assert_eq!(exact.flagged_taus(), vec![3e-4]);
    }

    #[test]
    fn oracle_compare_zero_drive() {
        let p = CavityParams::reference().with_f(0.0);
        let s = PulseSchedule::new(TAU_REF, 5e-3, 5).unwrap();
        let rows = oracle_compare(&p, &s, &IntegratorConfig::default().with_steps(16)).unwrap();
        assert_eq!(rows.len(), 5);
        assert!(rows.iter().all(|r| r.n_analytic == 0.0 && r.n_numeric.abs() < 1e-30));
    }

    #[test]
    fn csv_headers_and_format() {
        let row = Fig2Row {
            n: 3,
            n_free: 0.0036,
            n_zeno: 1.0 / 3.0,
            n_crit: 0.0,
        };
        let text = to_csv_string(&[row]);
        assert_eq!(
            text,
            "N,n_free,n_zeno,n_crit\n3,3.60000000000e-3,3.33333333333e-1,0.00000000000e0\n"
        );
        assert_eq!(
            ResultRow::HEADER.join(","),
            "tau_s,tau_m_s,n_cycles,n_mean,n_mean_normalized,source"
        );
    }

    #[test]
    fn write_to_missing_directory_names_path() {
        let rows = [CompareRow {
            n: 1,
            n_analytic: 1.0,
            n_numeric: 1.0,
            abs_err: 0.0,
        }];
        let err = write_csv(&rows, "/nonexistent-dir/out.csv").unwrap_err();
        assert!(matches!(err, SweepError::Io { .. }));
        assert!(err.to_string().contains("/nonexistent-dir/out.csv"));
    }
}
