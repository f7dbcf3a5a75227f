//! Small numeric helpers shared across modules and tests.

use crate::CMat;

/// Kahan-compensated accumulator; keeps long Monte Carlo sums accurate and
/// independent of harmless reassociation.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    carry: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let y = x - self.carry;
        let t = self.sum + y;
        self.carry = (t - self.sum) - y;
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum
    }
}

/// Frobenius norm of a complex matrix.
pub fn frobenius_norm(m: &CMat) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `||a - b||_F / ||b||_F`.
pub fn rel_frobenius_error(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "shape mismatch");
    let denom = frobenius_norm(b);
    if denom == 0.0 {
        return frobenius_norm(a);
    }
    frobenius_norm(&(a - b)) / denom
}

/// Sample mean and standard error of a slice.
pub fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mut acc = KahanSum::default();
    for &x in xs {
        acc.add(x);
    }
    let mean = acc.value() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let mut var = KahanSum::default();
    for &x in xs {
        var.add((x - mean) * (x - mean));
    }
    let std = (var.value() / (n as f64 - 1.0)).sqrt();
    (mean, std / (n as f64).sqrt())
}
