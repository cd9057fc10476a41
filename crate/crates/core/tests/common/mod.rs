#![allow(dead_code)]

use cavity_zeno::statespace::CMatrix;
use cavity_zeno::Complex64;

/// `Σ_{k=1}^{N} e^{-ikx}` term by term. `k x` is split into its rounded value
/// and the exact rounding error so that large angles lose no accuracy.
pub fn brute_phase_sum(x: f64, n: u64) -> Complex64 {
    let mut acc = Complex64::new(0.0, 0.0);
    for k in 1..=n {
        let kf = k as f64;
        let p = kf * x;
        let e = kf.mul_add(x, -p);
        acc += Complex64::from_polar(1.0, -p) * Complex64::new(1.0, -e);
    }
    acc
}

/// `exp(-i H t)` by Taylor series with scaling and squaring.
pub fn expm_taylor(h: &CMatrix, t: f64) -> CMatrix {
    let d = h.nrows();
    let a = h * Complex64::new(0.0, -t);
    let norm1 = (0..d)
        .map(|j| (0..d).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max);
    let mut s = 0;
    while norm1 / 2f64.powi(s) > 0.25 {
        s += 1;
    }
    let a = a / Complex64::new(2f64.powi(s), 0.0);
    let mut sum = CMatrix::identity(d, d);
    let mut term = CMatrix::identity(d, d);
    for k in 1..40 {
        term = &term * &a / Complex64::new(k as f64, 0.0);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

pub fn max_abs(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}
