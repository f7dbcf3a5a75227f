//! Lloyd-Max scalar quantizers for unit-variance Gaussian inputs.
//!
//! A [`ScalarQuantizer`] carries the optimal codebook and thresholds for a
//! standard real Gaussian, its exact distortion factor `gamma` (the MSE for a
//! unit-variance input), and the Bussgang gain `alpha = 1 - gamma`. Complex
//! samples are quantized elementwise on the real and imaginary parts, with a
//! per-entry scale that matches the codebook to the input RMS.

use rand::Rng;
use statrs::function::erf::erfc;
use thiserror::Error;

use crate::C64;

const SQRT_2PI: f64 = 2.506_628_274_631_000_5;

/// Standard normal density.
fn phi(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    (-0.5 * x * x).exp() / SQRT_2PI
}

/// Standard normal CDF via the complementary error function.
fn cap_phi(x: f64) -> f64 {
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    if x == f64::INFINITY {
        return 1.0;
    }
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// Gaussian probability mass of `[a, b]`, evaluated without cancellation in
/// the tails (both `erfc` arguments kept on the small side).
fn cell_mass(a: f64, b: f64) -> f64 {
    let s2 = std::f64::consts::SQRT_2;
    if a >= 0.0 {
        0.5 * (erfc(a / s2) - erfc(b / s2))
    } else if b <= 0.0 {
        0.5 * (erfc(-b / s2) - erfc(-a / s2))
    } else {
        cap_phi(b) - cap_phi(a)
    }
}

/// `x * phi(x)` with the tail convention `±inf * 0 = 0`.
fn x_phi(x: f64) -> f64 {
    if x.is_infinite() {
        return 0.0;
    }
    x * phi(x)
}

/// Gaussian moments over a cell `[a, b]`: probability mass, first moment, and
/// second moment.
fn cell_moments(a: f64, b: f64) -> (f64, f64, f64) {
    let mass = cell_mass(a, b);
    let m1 = phi(a) - phi(b);
    let m2 = mass - (x_phi(b) - x_phi(a));
    (mass, m1, m2)
}

/// Inverse standard normal CDF (Acklam's rational approximation, refined with
/// one Newton step). Only used to seed the Lloyd-Max iteration.
fn inv_cap_phi(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    const A: [f64; 6] = [
        -3.969683028665376e+01,
        2.209460984245205e+02,
        -2.759285104469687e+02,
        1.383577518672690e+02,
        -3.066479806614716e+01,
        2.506628277459239e+00,
    ];
    const B: [f64; 5] = [
        -5.447609879822406e+01,
        1.615858368580409e+02,
        -1.556989798598866e+02,
        6.680131188771972e+01,
        -1.328068155288572e+01,
    ];
    const C: [f64; 6] = [
        -7.784894002430293e-03,
        -3.223964580411365e-01,
        -2.400758277161838e+00,
        -2.549732539343734e+00,
        4.374664141464968e+00,
        2.938163982698783e+00,
    ];
    const D: [f64; 4] = [
        7.784695709041462e-03,
        3.224671290700398e-01,
        2.445134137142996e+00,
        3.754408661907416e+00,
    ];
    let p_low = 0.02425;
    let x = if p < p_low {
        let q = (-2.0 * p.ln()).sqrt();
        (((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    } else if p <= 1.0 - p_low {
        let q = p - 0.5;
        let r = q * q;
        (((((A[0] * r + A[1]) * r + A[2]) * r + A[3]) * r + A[4]) * r + A[5]) * q
            / (((((B[0] * r + B[1]) * r + B[2]) * r + B[3]) * r + B[4]) * r + 1.0)
    } else {
        let q = (-2.0 * (1.0 - p).ln()).sqrt();
        -(((((C[0] * q + C[1]) * q + C[2]) * q + C[3]) * q + C[4]) * q + C[5])
            / ((((D[0] * q + D[1]) * q + D[2]) * q + D[3]) * q + 1.0)
    };
    // One Newton refinement on Phi(x) = p.
    let e = cap_phi(x) - p;
    x - e / phi(x)
}

#[derive(Debug, Error)]
pub enum QuantizerError {
    #[error("resolution must be between 1 and 12 bits, got {0}")]
    BadResolution(u32),
    #[error(
        "Lloyd-Max did not converge within {iterations} iterations (last movement {residual:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        residual: f64,
        /// Codebook of the last iterate.
        levels: Vec<f64>,
    },
    #[error("quantizer scales must be strictly positive and finite")]
    BadScale,
    #[error("quantizer input must be finite")]
    NonFiniteInput,
}

/// A Lloyd-Max scalar quantizer for a standard real Gaussian.
#[derive(Debug, Clone)]
pub struct ScalarQuantizer {
    bits: u32,
    /// Output levels, ascending, symmetric about zero. Length `2^bits`.
    levels: Vec<f64>,
    /// Interior decision thresholds (midpoints of adjacent levels), ascending.
    /// Length `2^bits - 1`; the outermost thresholds are at infinity.
    thresholds: Vec<f64>,
    /// Exact MSE for a unit-variance Gaussian input.
    gamma: f64,
    /// Bussgang gain, `1 - gamma`.
    alpha: f64,
}

impl ScalarQuantizer {
    /// Design the MMSE quantizer for `bits` of resolution with the default
    /// tolerance `1e-10` and iteration cap `10^4`.
    pub fn design(bits: u32) -> Result<Self, QuantizerError> {
        lloyd_max(bits, 1e-10, 10_000)
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn levels(&self) -> &[f64] {
        &self.levels
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    /// Distortion factor: MSE for a unit-variance Gaussian input.
    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// Bussgang gain `1 - gamma`.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Quantize one real sample with a unit-matched codebook.
    ///
    /// Values exactly on a threshold resolve to the upper cell.
    pub fn quantize_real(&self, x: f64) -> f64 {
        let idx = self.thresholds.partition_point(|&t| t <= x);
        self.levels[idx]
    }

    /// Quantize one complex sample, scaling the codebook by `scale` in each
    /// real dimension: `Q_s(u) = scale * Q(u / scale)`.
    pub fn quantize_complex(&self, x: C64, scale: f64) -> C64 {
        C64::new(
            scale * self.quantize_real(x.re / scale),
            scale * self.quantize_real(x.im / scale),
        )
    }
}

/// Cell boundaries of level `i` under nearest-neighbor thresholds.
fn cell_bounds(levels: &[f64], i: usize) -> (f64, f64) {
    let n = levels.len();
    let a = if i == 0 {
        f64::NEG_INFINITY
    } else {
        0.5 * (levels[i - 1] + levels[i])
    };
    let b = if i == n - 1 {
        f64::INFINITY
    } else {
        0.5 * (levels[i] + levels[i + 1])
    };
    (a, b)
}

/// Largest distance between each level and the centroid of its cell; the
/// codebook movement of one Lloyd sweep and the convergence measure.
fn centroid_residual(levels: &[f64]) -> f64 {
    let mut res = 0.0f64;
    for i in 0..levels.len() {
        let (a, b) = cell_bounds(levels, i);
        let (mass, m1, _) = cell_moments(a, b);
        res = res.max((m1 / mass - levels[i]).abs());
    }
    res
}

/// One centroid/nearest-neighbor alternation; returns the codebook movement.
fn lloyd_sweep(levels: &mut [f64]) -> f64 {
    let snapshot = levels.to_vec();
    let mut residual = 0.0f64;
    for i in 0..levels.len() {
        let (a, b) = cell_bounds(&snapshot, i);
        let (mass, m1, _) = cell_moments(a, b);
        debug_assert!(mass > 0.0, "empty quantizer cell");
        let c = m1 / mass;
        residual = residual.max((c - levels[i]).abs());
        levels[i] = c;
    }
    residual
}

/// Newton direction for the centroid fixed point `c_i = centroid_i(c)`. The
/// Jacobian is tridiagonal because each cell only touches its neighbors
/// through the midpoint thresholds. Returns the step and the current
/// residual.
fn newton_direction(levels: &[f64]) -> (Vec<f64>, f64) {
    let n = levels.len();
    let finite = |x: f64| if x.is_infinite() { 0.0 } else { x };
    let mut sub = vec![0.0; n];
    let mut diag = vec![0.0; n];
    let mut sup = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut res = 0.0f64;
    for i in 0..n {
        let (a, b) = cell_bounds(levels, i);
        let (mass, m1, _) = cell_moments(a, b);
        let g = m1 / mass;
        f[i] = levels[i] - g;
        res = res.max(f[i].abs());
        let dga = phi(a) * (g - finite(a)) / mass;
        let dgb = phi(b) * (finite(b) - g) / mass;
        if i > 0 {
            sub[i] = -0.5 * dga;
        }
        diag[i] = 1.0 - 0.5 * (dga + dgb);
        if i < n - 1 {
            sup[i] = -0.5 * dgb;
        }
    }
    // Thomas solve of the tridiagonal system (I - dG) dx = f.
    let mut cp = vec![0.0; n];
    let mut dp = vec![0.0; n];
    cp[0] = sup[0] / diag[0];
    dp[0] = f[0] / diag[0];
    for i in 1..n {
        let denom = diag[i] - sub[i] * cp[i - 1];
        cp[i] = sup[i] / denom;
        dp[i] = (f[i] - sub[i] * dp[i - 1]) / denom;
    }
    let mut dx = vec![0.0; n];
    dx[n - 1] = dp[n - 1];
    for i in (0..n - 1).rev() {
        dx[i] = dp[i] - cp[i] * dx[i + 1];
    }
    (dx, res)
}

/// Design a Lloyd-Max quantizer for a standard Gaussian: alternate centroid
/// and nearest-neighbor updates until the largest codebook movement drops
/// below `tol`.
///
/// The codebook is seeded at the Gaussian quantiles `(2i+1)/(2 * 2^bits)`.
/// Plain Lloyd sweeps stall far above `tol` for fine codebooks (the
/// contraction rate degrades with the level count), so after a few warm-up
/// sweeps the same fixed point is driven to tolerance by Newton steps on the
/// centroid conditions. The distortion factor is the exact quantizer MSE from
/// closed-form Gaussian integrals over each cell.
pub fn lloyd_max(bits: u32, tol: f64, max_iter: usize) -> Result<ScalarQuantizer, QuantizerError> {
    if bits == 0 || bits > 12 {
        return Err(QuantizerError::BadResolution(bits));
    }
    let n = 1usize << bits;
    let mut levels: Vec<f64> = (0..n)
        .map(|i| inv_cap_phi((2 * i + 1) as f64 / (2 * n) as f64))
        .collect();
    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut iterations = 0;
    let warmup = max_iter.min(16);
    while iterations < warmup && !converged {
        iterations += 1;
        residual = lloyd_sweep(&mut levels);
        converged = residual < tol;
    }
    while iterations < max_iter && !converged {
        iterations += 1;
        let (dx, before) = newton_direction(&levels);
        let mut accepted = false;
        let mut damp = 1.0;
        for _ in 0..6 {
            let cand: Vec<f64> = levels.iter().zip(dx.iter()).map(|(l, d)| l - damp * d).collect();
            let ordered = cand.windows(2).all(|w| w[0] < w[1]);
            if ordered && cand.iter().all(|v| v.is_finite()) {
                let post = centroid_residual(&cand);
                if post < before {
                    levels = cand;
                    residual = post;
                    accepted = true;
                    break;
                }
            }
            damp *= 0.5;
        }
        if !accepted {
            residual = lloyd_sweep(&mut levels);
        }
        converged = residual < tol;
    }
    if !converged {
        return Err(QuantizerError::NonConvergence {
            iterations,
            residual,
            levels,
        });
    }
    // Exact symmetry: average the codebook with its mirror image.
    for i in 0..n / 2 {
        let v = 0.5 * (levels[n - 1 - i] - levels[i]);
        levels[n - 1 - i] = v;
        levels[i] = -v;
    }
    let mut thresholds = vec![0.0; n - 1];
    for i in 0..n - 1 {
        thresholds[i] = 0.5 * (levels[i] + levels[i + 1]);
    }
    let mut gamma = 0.0;
    for i in 0..n {
        let lo = if i == 0 { f64::NEG_INFINITY } else { thresholds[i - 1] };
        let hi = if i == n - 1 { f64::INFINITY } else { thresholds[i] };
        let (mass, m1, m2) = cell_moments(lo, hi);
        let c = levels[i];
        gamma += m2 - 2.0 * c * m1 + c * c * mass;
    }
    Ok(ScalarQuantizer {
        bits,
        levels,
        thresholds,
        gamma,
        alpha: 1.0 - gamma,
    })
}

/// Exponential fit of the distortion factor, `2^(-1.74 b + 0.28)`.
pub fn gamma_fit(bits: u32) -> f64 {
    2f64.powf(-1.74 * bits as f64 + 0.28)
}

/// Distortion factor for `bits` of resolution under the configured model.
pub fn distortion_factor(
    bits: u32,
    model: crate::config::GammaModel,
) -> Result<f64, QuantizerError> {
    match model {
        crate::config::GammaModel::LloydMax => ScalarQuantizer::design(bits).map(|q| q.gamma()),
        crate::config::GammaModel::Fit => {
            if bits == 0 || bits > 12 {
                return Err(QuantizerError::BadResolution(bits));
            }
            Ok(gamma_fit(bits))
        }
    }
}

/// Quantize a complex vector elementwise, entry `j` using `scales[j]` as the
/// RMS of each real dimension.
pub fn quantize(
    x: &[C64],
    q: &ScalarQuantizer,
    scales: &[f64],
) -> Result<Vec<C64>, QuantizerError> {
    assert_eq!(x.len(), scales.len(), "one scale per entry");
    if scales.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
        return Err(QuantizerError::BadScale);
    }
    if x.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(QuantizerError::NonFiniteInput);
    }
    Ok(x.iter()
        .zip(scales.iter())
        .map(|(&v, &s)| q.quantize_complex(v, s))
        .collect())
}

/// Empirical Bussgang gain `E[Q(y) y] / E[y^2]` over unit-variance Gaussian
/// draws; an oracle for `alpha = 1 - gamma`.
pub fn bussgang_alpha_empirical<R: Rng + ?Sized>(
    q: &ScalarQuantizer,
    n_samples: usize,
    rng: &mut R,
) -> f64 {
    assert!(n_samples >= 10_000, "too few samples for a stable estimate");
    let mut num = crate::util::KahanSum::default();
    let mut den = crate::util::KahanSum::default();
    for _ in 0..n_samples {
        let y = crate::rng::standard_normal(rng);
        num.add(q.quantize_real(y) * y);
        den.add(y * y);
    }
    num.value() / den.value()
}
