//! Sum-rate maximizing hybrid combiner design.
//!
//! The spectral-efficiency objective is reformulated with two layers of
//! auxiliary variables (a Lagrangian-style SINDR variable `t` and a quadratic
//! -transform variable `q`), after which each block has a closed-form or
//! tractable update:
//!
//! * `t`, `q`: closed forms ([`update_aux_t`], [`update_aux_q`]);
//! * analog combiner: projected gradient ascent on the constant-modulus set
//!   with Armijo backtracking ([`pga_analog`]);
//! * digital combiners: per-subcarrier closed form
//!   ([`digital_closed_form`]).
//!
//! [`design_hybrid`] runs the block-coordinate loop from an
//! eigenvector-phase analog initializer and an MMSE digital initializer; the
//! reformulated objective never decreases across block updates, so the
//! spectral-efficiency trace it returns is non-decreasing.
//! [`design_fully_digital_mmse`] is the unconstrained baseline receiver.

use thiserror::Error;

use crate::analysis::{
    self, effective_noise_cov, is_constant_modulus, sindr, spectral_efficiency, EffectiveNoise,
    HybridCombiner,
};
use crate::channel::ChannelRealization;
use crate::config::Scenario;
use crate::{C64, CMat, RMat, RVec};

#[derive(Debug, Error)]
pub enum OptimizerError {
    #[error("auxiliary update hit a zero denominator (zero combiner with singular noise)")]
    DegenerateAux,
    #[error("per-subcarrier regularized Gram matrix is not positive definite")]
    SingularSystem,
    #[error(transparent)]
    Analysis(#[from] analysis::AnalysisError),
}

/// Coefficients of the effective-noise terms that depend on the analog
/// combiner: `qd = gamma / ((1-gamma) beta)` scales the per-chain channel
/// energy, `awgn = 1 / (rho (1-gamma))` scales `U^H U`.
#[derive(Debug, Clone, Copy)]
pub struct EffectiveNoiseWeights {
    pub qd: f64,
    pub awgn: f64,
}

impl EffectiveNoiseWeights {
    pub fn new(gamma: f64, beta: f64, rho: f64) -> Self {
        assert!((0.0..1.0).contains(&gamma), "distortion factor in [0,1)");
        assert!(beta >= 1.0 && rho > 0.0);
        Self {
            qd: gamma / ((1.0 - gamma) * beta),
            awgn: 1.0 / (rho * (1.0 - gamma)),
        }
    }
}

/// Auxiliary variables of the fractional-programming reformulation.
///
/// After [`update_aux_t`]/[`update_aux_q`], `t` equals the current SINDR and
/// the reformulated objective touches the true spectral efficiency.
#[derive(Debug, Clone)]
pub struct FpAuxState {
    /// `I x K`, nonnegative.
    pub t: RMat,
    /// `I x K`.
    pub q: CMat,
}

/// Parameters of the projected gradient ascent solver.
#[derive(Debug, Clone, Copy)]
pub struct PgaParams {
    /// Armijo slope fraction, in `(0, 0.5)`.
    pub armijo_slope: f64,
    /// Backtracking shrink factor, in `(0, 1)`.
    pub backtrack_shrink: f64,
    /// Stop once the objective gain of an accepted step drops to
    /// `tol * max(1, |g|)`.
    pub tol: f64,
    pub max_iters: usize,
    pub max_backtracks: usize,
    /// Start each line search near the previously accepted step instead of
    /// at one. Identical acceptance rule and monotonicity; an order of
    /// magnitude fewer objective evaluations once steps are small.
    pub warm_start_backtracking: bool,
}

impl Default for PgaParams {
    fn default() -> Self {
        Self {
            armijo_slope: 0.1,
            backtrack_shrink: 0.5,
            tol: 1e-4,
            max_iters: 200,
            max_backtracks: 50,
            warm_start_backtracking: false,
        }
    }
}

/// Average channel Gram matrix over the data band,
/// `(1/K) sum_{k<K} H[k] H[k]^H` (`M x M`, Hermitian PSD).
pub fn channel_gram_avg(ch: &ChannelRealization, data_subcarriers: usize) -> CMat {
    let m = ch.antennas();
    let mut gram = CMat::zeros(m, m);
    let w = C64::from(1.0 / data_subcarriers as f64);
    for k in 0..data_subcarriers {
        gram.gemm(w, ch.at(k), &ch.at(k).adjoint(), C64::from(1.0));
    }
    gram
}

/// Effective noise computed from a precomputed channel Gram average; equal to
/// [`effective_noise_cov`] because the per-chain energy `H_e` is the diagonal
/// of `U^H (avg Gram) U`.
pub fn effective_noise_from_gram(
    gram: &CMat,
    analog: &CMat,
    weights: &EffectiveNoiseWeights,
) -> EffectiveNoise {
    let nrf = analog.ncols();
    let p = gram * analog;
    let mut channel_diag = RVec::zeros(nrf);
    for j in 0..nrf {
        channel_diag[j] = analog.column(j).dotc(&p.column(j)).re;
    }
    let mut cov = analog.ad_mul(analog) * C64::from(weights.awgn);
    for j in 0..nrf {
        cov[(j, j)] += C64::from(weights.qd * channel_diag[j]);
    }
    EffectiveNoise { cov, channel_diag }
}

/// Optimal `t`: the SINDR of the current combiners under the current
/// effective noise (identical to [`analysis::sindr`]).
pub fn update_aux_t(ch: &ChannelRealization, analog: &CMat, digital: &[CMat], c_e: &CMat) -> RMat {
    sindr(ch, analog, digital, c_e)
}

/// Optimal `q` given `t`:
/// `q_i[k] = sqrt(t+1) u^H B h_i / (sum_j |u^H B h_j|^2 + u^H C_e u)`.
pub fn update_aux_q(
    ch: &ChannelRealization,
    analog: &CMat,
    digital: &[CMat],
    c_e: &CMat,
    t: &RMat,
) -> Result<CMat, OptimizerError> {
    let beff = analysis::effective_channels(ch, analog, digital.len());
    aux_q_with_effective(&beff, digital, c_e, t)
}

/// [`update_aux_q`] from precomputed effective channels.
pub fn aux_q_with_effective(
    beff: &[CMat],
    digital: &[CMat],
    c_e: &CMat,
    t: &RMat,
) -> Result<CMat, OptimizerError> {
    let k_data = digital.len();
    let users = t.nrows();
    let mut q = CMat::zeros(users, k_data);
    for k in 0..k_data {
        let b = &beff[k];
        let u_k = &digital[k];
        for i in 0..users {
            let u = u_k.column(i);
            let mut denom = analysis::quad_form(c_e, &u);
            for j in 0..users {
                denom += u.dotc(&b.column(j)).norm_sqr();
            }
            if denom <= 0.0 {
                return Err(OptimizerError::DegenerateAux);
            }
            let num = u.dotc(&b.column(i)) * (t[(i, k)] + 1.0).sqrt();
            q[(i, k)] = num / denom;
        }
    }
    Ok(q)
}

/// The reformulated objective
/// `f_q = G/(K ln 2) + (1/K) sum log2(1+t) - (1/(K ln 2)) sum t`, with `G`
/// evaluated directly from its definition (signal, interference, and
/// effective-noise quadratic forms).
pub fn objective_fq(
    ch: &ChannelRealization,
    analog: &CMat,
    digital: &[CMat],
    aux: &FpAuxState,
    c_e: &CMat,
) -> f64 {
    let users = ch.users();
    let k_data = digital.len();
    let mut g = 0.0;
    for k in 0..k_data {
        let b = analog.ad_mul(ch.at(k));
        let u_k = &digital[k];
        for i in 0..users {
            let u = u_k.column(i);
            let q = aux.q[(i, k)];
            let t = aux.t[(i, k)];
            let mut quad = analysis::quad_form(c_e, &u);
            for j in 0..users {
                quad += u.dotc(&b.column(j)).norm_sqr();
            }
            let cross = (q.conj() * u.dotc(&b.column(i))).re;
            g += 2.0 * (t + 1.0).sqrt() * cross - q.norm_sqr() * quad;
        }
    }
    let k = k_data as f64;
    let ln2 = std::f64::consts::LN_2;
    let mut rate_terms = 0.0;
    let mut linear_terms = 0.0;
    for v in aux.t.iter() {
        rate_terms += (1.0 + v).log2();
        linear_terms += v;
    }
    g / (k * ln2) + rate_terms / k - linear_terms / (k * ln2)
}

/// Precomputed matrices of the analog-combiner objective `g(U)`:
/// the cross term `X`, the per-subcarrier digital Grams `Z[k]` with their sum
/// and diagonal sum, and the average channel Gram. The per-subcarrier channel
/// factors stay in the borrowed [`ChannelRealization`]; products against the
/// rank-`I` `Y[k] = H[k] H[k]^H` are applied in factored form.
pub struct FpWorkset<'a> {
    channel: &'a ChannelRealization,
    h_under: CMat,
    x: CMat,
    z: Vec<CMat>,
    z_sum: CMat,
    z_diag_sum: RVec,
}

impl<'a> FpWorkset<'a> {
    pub fn x(&self) -> &CMat {
        &self.x
    }

    pub fn z(&self, k: usize) -> &CMat {
        &self.z[k]
    }

    pub fn gram_avg(&self) -> &CMat {
        &self.h_under
    }

    /// Materialized `Y[k] = H[k] H[k]^H` (test and inspection helper; the
    /// solver itself never forms it).
    pub fn y(&self, k: usize) -> CMat {
        self.channel.at(k) * self.channel.at(k).adjoint()
    }
}

/// Assemble the workset for the analog step from the current digital
/// combiners and auxiliary state. `gram_avg` is the average channel Gram from
/// [`channel_gram_avg`] (recomputing it here would dominate the outer loop).
pub fn build_workset<'a>(
    ch: &'a ChannelRealization,
    digital: &[CMat],
    aux: &FpAuxState,
    gram_avg: CMat,
) -> FpWorkset<'a> {
    let m = ch.antennas();
    let users = ch.users();
    let nrf = digital[0].nrows();
    let k_data = digital.len();
    let mut x = CMat::zeros(m, nrf);
    let mut z = Vec::with_capacity(k_data);
    let mut z_sum = CMat::zeros(nrf, nrf);
    let mut z_diag_sum = RVec::zeros(nrf);
    for k in 0..k_data {
        let u_k = &digital[k];
        let mut z_k = CMat::zeros(nrf, nrf);
        for i in 0..users {
            let u = u_k.column(i);
            let q = aux.q[(i, k)];
            let coef = C64::from((aux.t[(i, k)] + 1.0).sqrt()) * q.conj();
            x.gerc(coef, &ch.at(k).column(i), &u, C64::from(1.0));
            z_k.gerc(C64::from(q.norm_sqr()), &u, &u, C64::from(1.0));
        }
        for j in 0..nrf {
            z_diag_sum[j] += z_k[(j, j)].re;
        }
        z_sum += &z_k;
        z.push(z_k);
    }
    FpWorkset {
        channel: ch,
        h_under: gram_avg,
        x,
        z,
        z_sum,
        z_diag_sum,
    }
}

/// The analog-combiner objective
/// `g(U) = 2 Re tr(X U^H) - sum_k tr(Z[k] U^H Y[k] U)
///       - qd * sum_k tr(diag(Z[k]) U^H Gram U) - awgn * sum_k tr(Z[k] U^H U)`.
pub fn eval_g(analog: &CMat, ws: &FpWorkset, w: &EffectiveNoiseWeights) -> f64 {
    let nrf = analog.ncols();
    // 2 Re tr(X U^H) = 2 Re sum X .* conj(U)
    let mut cross = 0.0;
    for (x, u) in ws.x.iter().zip(analog.iter()) {
        cross += x.re * u.re + x.im * u.im;
    }
    let mut quad = 0.0;
    for (k, z_k) in ws.z.iter().enumerate() {
        // tr(Z B B^H) with B = U^H H[k]
        let b = analog.ad_mul(ws.channel.at(k));
        for i in 0..b.ncols() {
            let col = b.column(i);
            quad += analysis::quad_form(z_k, &col);
        }
    }
    // qd term: diagonal of U^H Gram U weighted by the summed Z diagonals
    let p = &ws.h_under * analog;
    let mut qd_term = 0.0;
    for j in 0..nrf {
        qd_term += ws.z_diag_sum[j] * analog.column(j).dotc(&p.column(j)).re;
    }
    // awgn term: tr(Z_sum U^H U)
    let gram = analog.ad_mul(analog);
    let mut awgn_term = 0.0;
    for j in 0..nrf {
        for l in 0..nrf {
            let prod = ws.z_sum[(l, j)] * gram[(j, l)];
            awgn_term += prod.re;
        }
    }
    2.0 * cross - quad - w.qd * qd_term - w.awgn * awgn_term
}

/// Gradient of [`eval_g`] with respect to the conjugate of the analog
/// combiner (scaled by two, the ascent convention):
/// `2X - 2 awgn U Z_sum - 2 qd Gram U diag(Z_sum) - 2 sum_k Y[k] U Z[k]`.
pub fn gradient_g(analog: &CMat, ws: &FpWorkset, w: &EffectiveNoiseWeights) -> CMat {
    let mut grad = ws.x.clone() * C64::from(2.0);
    grad.gemm(
        C64::from(-2.0 * w.awgn),
        analog,
        &ws.z_sum,
        C64::from(1.0),
    );
    // -2 qd * Gram U diag(sum_k Z[k])
    let mut p = &ws.h_under * analog;
    for j in 0..p.ncols() {
        let mut col = p.column_mut(j);
        col *= C64::from(-2.0 * w.qd * ws.z_diag_sum[j]);
    }
    grad += &p;
    // -2 sum_k H[k] (B[k]^H Z[k]) with B[k]^H = H[k]^H U
    for (k, z_k) in ws.z.iter().enumerate() {
        let bh = ws.channel.at(k).ad_mul(analog); // I x Nrf
        let t = &bh * z_k; // I x Nrf
        grad.gemm(C64::from(-2.0), ws.channel.at(k), &t, C64::from(1.0));
    }
    grad
}

/// Entrywise projection onto the constant-modulus set: keep the phase, fix
/// the magnitude to `1/sqrt(M)`. Zero entries project to `1/sqrt(M)`.
pub fn project_constant_modulus(a: &CMat) -> CMat {
    let scale = 1.0 / (a.nrows() as f64).sqrt();
    a.map(|z| {
        let r = z.norm();
        if r > 0.0 {
            z * C64::from(scale / r)
        } else {
            C64::from(scale)
        }
    })
}

/// Norm of the objective gradient projected onto the phase tangent space of
/// the constant-modulus set (the component a phase-only update can follow).
pub fn phase_tangent_gradient_norm(analog: &CMat, grad: &CMat) -> f64 {
    analog
        .iter()
        .zip(grad.iter())
        .map(|(u, g)| {
            let t = (u.conj() * g).im;
            t * t
        })
        .sum::<f64>()
        .sqrt()
}

/// Outcome of one projected-gradient-ascent run.
#[derive(Debug, Clone)]
pub struct PgaOutcome {
    pub analog: CMat,
    pub iterations: usize,
    /// Backtracking could not find an ascent step at the final iterate.
    pub stalled: bool,
    /// Last accepted step size.
    pub last_step: f64,
    /// Objective value at the returned combiner.
    pub objective: f64,
}

/// Maximize `g` over constant-modulus analog combiners by projected gradient
/// ascent: normalized-gradient steps, Armijo backtracking from step one, and
/// entrywise phase projection. The accepted objective sequence never
/// decreases; the run stops when an accepted gain falls to
/// `tol * max(1, |g|)`, the iteration cap is hit, or backtracking exhausts
/// (`stalled`, still returning the best iterate).
pub fn pga_analog(
    analog0: &CMat,
    ws: &FpWorkset,
    w: &EffectiveNoiseWeights,
    params: &PgaParams,
) -> PgaOutcome {
    debug_assert!(is_constant_modulus(analog0, 1e-9));
    let mut analog = analog0.clone();
    let mut g = eval_g(&analog, ws, w);
    let mut stalled = false;
    let mut last_step: f64 = 0.0;
    let mut iterations = 0;
    while iterations < params.max_iters {
        iterations += 1;
        let mut grad = gradient_g(&analog, ws, w);
        let norm = grad.norm();
        if !(norm > 0.0) {
            break;
        }
        grad /= C64::from(norm);
        let mut step = if params.warm_start_backtracking && last_step > 0.0 {
            (last_step * 8.0).min(1.0)
        } else {
            1.0
        };
        let mut accepted = None;
        for _ in 0..params.max_backtracks {
            let cand = project_constant_modulus(&(&analog + &grad * C64::from(step)));
            let g_cand = eval_g(&cand, ws, w);
            // Armijo: the normalized gradient has unit Frobenius norm.
            if g_cand > g + params.armijo_slope * step {
                accepted = Some((cand, g_cand));
                break;
            }
            step *= params.backtrack_shrink;
        }
        let Some((cand, g_cand)) = accepted else {
            stalled = true;
            break;
        };
        let gain = g_cand - g;
        analog = cand;
        g = g_cand;
        last_step = step;
        if gain <= params.tol * g.abs().max(1.0) {
            break;
        }
    }
    PgaOutcome {
        analog,
        iterations,
        stalled,
        last_step,
        objective: g,
    }
}

/// Closed-form optimal digital combiners for fixed analog combiner and
/// auxiliary variables:
/// `u_i[k] = xi (B B^H + C_e)^{-1} B e_i` with
/// `xi = conj(q) sqrt(t+1) / |q|^2`. A vanishing `q` (possible only for a
/// dead user/subcarrier) is floored at 1e-12 in magnitude.
pub fn digital_closed_form(
    ch: &ChannelRealization,
    analog: &CMat,
    aux: &FpAuxState,
    c_e: &CMat,
) -> Result<Vec<CMat>, OptimizerError> {
    let beff = analysis::effective_channels(ch, analog, aux.t.ncols());
    digital_with_effective(&beff, aux, c_e)
}

/// [`digital_closed_form`] from precomputed effective channels.
pub fn digital_with_effective(
    beff: &[CMat],
    aux: &FpAuxState,
    c_e: &CMat,
) -> Result<Vec<CMat>, OptimizerError> {
    let k_data = aux.t.ncols();
    let users = aux.t.nrows();
    let nrf = c_e.nrows();
    let mut out = Vec::with_capacity(k_data);
    for k in 0..k_data {
        let b = &beff[k];
        let a = b * b.adjoint() + c_e;
        let chol = nalgebra::Cholesky::new(a).ok_or(OptimizerError::SingularSystem)?;
        let mut u_k = CMat::zeros(nrf, users);
        for i in 0..users {
            let q = aux.q[(i, k)];
            let q_mag = q.norm().max(1e-12);
            if q.norm() < 1e-12 {
                log::debug!("flooring vanished auxiliary q at user {i}, subcarrier {k}");
            }
            let xi = q.conj() * (aux.t[(i, k)] + 1.0).sqrt() / (q_mag * q_mag);
            let mut col = chol.solve(&b.column(i).clone_owned());
            col *= xi;
            u_k.set_column(i, &col);
        }
        out.push(u_k);
    }
    Ok(out)
}

/// Analog initializer: entrywise phases of the leading eigenvectors of the
/// average channel Gram, scaled to constant modulus. The eigenvector phase
/// convention (first significant entry real-positive) makes the output a
/// deterministic function of the channel.
pub fn init_analog_svd(ch: &ChannelRealization, scenario: &Scenario) -> CMat {
    init_analog_from_gram(
        &channel_gram_avg(ch, scenario.data_subcarriers()),
        scenario.rf_chains(),
    )
}

/// [`init_analog_svd`] from a precomputed Gram average.
pub fn init_analog_from_gram(gram: &CMat, rf_chains: usize) -> CMat {
    let m = gram.nrows();
    let eig = nalgebra::SymmetricEigen::new(gram.clone());
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .partial_cmp(&eig.eigenvalues[a])
            .expect("finite eigenvalues")
    });
    let scale = 1.0 / (m as f64).sqrt();
    let mut analog = CMat::zeros(m, rf_chains);
    for (col, &idx) in order.iter().take(rf_chains).enumerate() {
        let v = eig.eigenvectors.column(idx);
        // fix the eigenvector's arbitrary global phase
        let anchor = v
            .iter()
            .find(|z| z.norm() > 1e-9 * v.norm())
            .copied()
            .unwrap_or_else(|| C64::from(1.0));
        let rotation = anchor.conj() / anchor.norm();
        for row in 0..m {
            let z = v[row] * rotation;
            let r = z.norm();
            analog[(row, col)] = if r > 0.0 {
                z * C64::from(scale / r)
            } else {
                C64::from(scale)
            };
        }
    }
    analog
}

/// MMSE digital initializer:
/// `u_i[k] = alpha sqrt(p) J[k]^{-1} B e_i`,
/// `J[k] = alpha^2 p (B B^H + C_e)`.
pub fn init_digital_mmse(
    ch: &ChannelRealization,
    analog: &CMat,
    gamma: f64,
    scenario: &Scenario,
) -> Result<Vec<CMat>, OptimizerError> {
    let noise = effective_noise_cov(
        ch,
        analog,
        gamma,
        scenario.osr() as f64,
        scenario.snr_linear(),
        scenario.data_subcarriers(),
    )?;
    init_digital_mmse_with_noise(ch, analog, gamma, scenario.symbol_power(), &noise.cov, scenario.data_subcarriers())
}

fn init_digital_mmse_with_noise(
    ch: &ChannelRealization,
    analog: &CMat,
    gamma: f64,
    power: f64,
    c_e: &CMat,
    k_data: usize,
) -> Result<Vec<CMat>, OptimizerError> {
    let alpha = 1.0 - gamma;
    let users = ch.users();
    let nrf = analog.ncols();
    let mut out = Vec::with_capacity(k_data);
    for k in 0..k_data {
        let b = analog.ad_mul(ch.at(k));
        let j = (&b * b.adjoint() + c_e) * C64::from(alpha * alpha * power);
        let chol = nalgebra::Cholesky::new(j).ok_or(OptimizerError::SingularSystem)?;
        let mut u_k = CMat::zeros(nrf, users);
        let w = C64::from(alpha * power.sqrt());
        for i in 0..users {
            let mut col = chol.solve(&b.column(i).clone_owned());
            col *= w;
            u_k.set_column(i, &col);
        }
        out.push(u_k);
    }
    Ok(out)
}

/// Per-outer-iteration record of [`design_hybrid`].
#[derive(Debug, Clone)]
pub struct OuterIteration {
    /// Spectral efficiency at the refreshed auxiliary variables (equals the
    /// reformulated objective there).
    pub rate: f64,
    /// Objective after the analog update; `NaN` unless
    /// [`DesignOptions::record_objectives`] is set.
    pub fq_after_analog: f64,
    /// Objective after the digital update; `NaN` unless
    /// [`DesignOptions::record_objectives`] is set.
    pub fq_after_digital: f64,
    pub pga_iterations: usize,
    pub pga_stalled: bool,
    pub pga_last_step: f64,
}

/// Options of the block-coordinate designer.
///
/// The default profile runs the outer loop long enough to approach the
/// scheme's fixed point at the large-array operating points (the coupled
/// iteration contracts slowly when SINDRs are high) and warm-starts the
/// analog line search. [`DesignOptions::quick`] is a budget profile for
/// exploratory runs.
#[derive(Debug, Clone, Copy)]
pub struct DesignOptions {
    pub pga: PgaParams,
    /// Stop when the relative per-iteration rate gain falls below this.
    pub outer_tol: f64,
    pub max_outer: usize,
    /// Evaluate the reformulated objective after the analog and digital
    /// blocks of every iteration (for monotonicity checks); costs two extra
    /// objective evaluations per iteration.
    pub record_objectives: bool,
}

impl Default for DesignOptions {
    fn default() -> Self {
        Self {
            pga: PgaParams {
                tol: 1e-5,
                max_iters: 20,
                warm_start_backtracking: true,
                ..PgaParams::default()
            },
            outer_tol: 1e-6,
            max_outer: 600,
            record_objectives: false,
        }
    }
}

impl DesignOptions {
    /// Loose profile: coarse outer tolerance, cold-started line search.
    pub fn quick() -> Self {
        Self {
            pga: PgaParams::default(),
            outer_tol: 1e-3,
            max_outer: 50,
            record_objectives: false,
        }
    }
}

/// Result of a hybrid design run.
#[derive(Debug, Clone)]
pub struct DesignOutcome {
    pub combiner: HybridCombiner,
    /// Final spectral efficiency (bit/s/Hz).
    pub rate: f64,
    /// Final per-user per-subcarrier SINDR.
    pub zeta: RMat,
    /// One record per outer iteration; the rate entries are non-decreasing.
    pub trace: Vec<OuterIteration>,
    pub converged: bool,
}

impl DesignOutcome {
    /// Spectral-efficiency trace: per-iteration rates plus the final rate.
    pub fn rate_trace(&self) -> Vec<f64> {
        let mut t: Vec<f64> = self.trace.iter().map(|r| r.rate).collect();
        t.push(self.rate);
        t
    }
}

/// Joint analog/digital design maximizing spectral efficiency for one
/// channel realization.
///
/// Initialization: eigenvector-phase analog combiner and MMSE digital
/// combiner. Each outer iteration refreshes `t` and `q` in closed form, runs
/// the analog projected gradient ascent, refreshes the effective noise for
/// the new analog combiner, and applies the closed-form digital update. Every
/// block update is non-decreasing in the reformulated objective, so the rate
/// trace is non-decreasing and the final rate dominates the initializer's.
pub fn design_hybrid(
    ch: &ChannelRealization,
    scenario: &Scenario,
    gamma: f64,
    opts: &DesignOptions,
) -> Result<DesignOutcome, OptimizerError> {
    let weights = EffectiveNoiseWeights::new(gamma, scenario.osr() as f64, scenario.snr_linear());
    let k_data = scenario.data_subcarriers();
    let gram = channel_gram_avg(ch, k_data);
    let mut analog = init_analog_from_gram(&gram, scenario.rf_chains());
    let mut noise = effective_noise_from_gram(&gram, &analog, &weights);
    let mut digital = init_digital_mmse_with_noise(
        ch,
        &analog,
        gamma,
        scenario.symbol_power(),
        &noise.cov,
        k_data,
    )?;
    let mut trace = Vec::new();
    let mut rate_prev: Option<f64> = None;
    let mut converged = false;
    while trace.len() < opts.max_outer {
        let t = update_aux_t(ch, &analog, &digital, &noise.cov);
        let rate = spectral_efficiency(&t);
        if let Some(prev) = rate_prev {
            if (rate - prev).abs() <= opts.outer_tol * rate.abs().max(1e-12) {
                converged = true;
                break;
            }
        }
        rate_prev = Some(rate);
        let q = update_aux_q(ch, &analog, &digital, &noise.cov, &t)?;
        let aux = FpAuxState { t, q };
        let ws = build_workset(ch, &digital, &aux, gram.clone());
        let pga = pga_analog(&analog, &ws, &weights, &opts.pga);
        analog = pga.analog;
        noise = effective_noise_from_gram(&gram, &analog, &weights);
        let fq_after_analog = if opts.record_objectives {
            objective_fq(ch, &analog, &digital, &aux, &noise.cov)
        } else {
            f64::NAN
        };
        digital = digital_closed_form(ch, &analog, &aux, &noise.cov)?;
        let fq_after_digital = if opts.record_objectives {
            objective_fq(ch, &analog, &digital, &aux, &noise.cov)
        } else {
            f64::NAN
        };
        trace.push(OuterIteration {
            rate,
            fq_after_analog,
            fq_after_digital,
            pga_iterations: pga.iterations,
            pga_stalled: pga.stalled,
            pga_last_step: pga.last_step,
        });
    }
    let zeta = sindr(ch, &analog, &digital, &noise.cov);
    let rate = spectral_efficiency(&zeta);
    Ok(DesignOutcome {
        combiner: HybridCombiner::new(analog, digital)?,
        rate,
        zeta,
        trace,
        converged,
    })
}

/// The unconstrained baseline: an MMSE receiver with one RF chain per
/// antenna (identity analog stage), evaluated with the same
/// quantization-aware analysis.
#[derive(Debug, Clone)]
pub struct DigitalDesign {
    /// Per-subcarrier `M x I` combiners.
    pub digital: Vec<CMat>,
    pub zeta: RMat,
    pub rate: f64,
}

pub fn design_fully_digital_mmse(
    ch: &ChannelRealization,
    scenario: &Scenario,
    gamma: f64,
) -> Result<DigitalDesign, OptimizerError> {
    let m = ch.antennas();
    let identity = CMat::identity(m, m);
    let noise = effective_noise_cov(
        ch,
        &identity,
        gamma,
        scenario.osr() as f64,
        scenario.snr_linear(),
        scenario.data_subcarriers(),
    )?;
    let digital = init_digital_mmse_with_noise(
        ch,
        &identity,
        gamma,
        scenario.symbol_power(),
        &noise.cov,
        scenario.data_subcarriers(),
    )?;
    let zeta = sindr(ch, &identity, &digital, &noise.cov);
    let rate = spectral_efficiency(&zeta);
    Ok(DigitalDesign {
        digital,
        zeta,
        rate,
    })
}
