//! The code-versus-jammer zero-sum game.
//!
//! A code sends message `m` as the state `rho_m` and decodes with the POVM
//! `{D_m}`. Against a jammer state `sigma` on `E^n` its average error is
//! `1 - (1/M) sum_m tr(D_m N(rho_m (x) sigma))`, an affine function of `sigma`.
//! The error operator `T` with `error = tr(T sigma)` makes the jammer's best
//! response exact: `lambda_max(T)` and its top eigenvector. The code's best
//! response is found heuristically by see-saw, so in [`double_oracle`] the
//! code-side value is a certified upper bound on the game value while the
//! jammer-side value is only as good as the see-saw oracle.
//!
//! All functions here take the block channel (already `n`-folded) except
//! [`double_oracle`] and [`classical_game_value`], which take the single-use
//! channel and `n`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{ClassicalTable, QuantumChannel};
use crate::config;
use crate::error::{Error, Result};
use crate::json;
use crate::linalg::{self, c, CMat, CVec, C64};
use crate::lp;
use crate::qstate::{self, DensityMatrix, PureState};
use crate::random::{self, SeededRng};

/// Pre-shared pure state on `K' (x) K`; the encoder holds `K'`, the decoder `K`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Assistance {
    pub resource: PureState,
    pub d_k: usize,
}

impl Assistance {
    pub fn new(resource: PureState, d_k: usize) -> Result<Self> {
        if d_k == 0 || !resource.dim().is_multiple_of(d_k) {
            return Err(Error::InvalidShape(format!(
                "resource of dimension {} does not split with d_K = {d_k}",
                resource.dim()
            )));
        }
        Ok(Self { resource, d_k })
    }

    /// `|Phi> = (1/sqrt d) sum_i |ii>` on `K' (x) K`.
    pub fn maximally_entangled(d_k: usize) -> Self {
        Self { resource: qstate::maximally_entangled(d_k), d_k }
    }

    /// Reduced state of the resource on the decoder's share `K`.
    pub fn decoder_marginal(&self) -> CMat {
        let d_kp = self.resource.dim() / self.d_k;
        let full = linalg::projector(self.resource.amplitudes());
        linalg::partial_trace_op(&full, &[d_kp, self.d_k], &[1])
    }
}

/// Message code: encoder states and a decoding POVM. With assistance the
/// encoder states live on `A^n (x) K` with `K`-marginal fixed by the resource,
/// and the POVM acts on `B^n (x) K`.
#[derive(Debug, Clone, PartialEq)]
pub struct Code {
    encoder_states: Vec<DensityMatrix>,
    decoder_povm: Vec<CMat>,
    assistance: Option<Assistance>,
}

fn validate_povm(povm: &[CMat]) -> Result<()> {
    let tol = config::get().povm_tol;
    let d = povm.first().map_or(0, |m| m.nrows());
    let mut total = -linalg::identity(d);
    for (m, e) in povm.iter().enumerate() {
        if e.nrows() != d || e.ncols() != d {
            return Err(Error::InvalidPovm(format!("element {m} has the wrong shape")));
        }
        let herm = linalg::hermitian_deviation(e);
        if herm > tol {
            return Err(Error::InvalidPovm(format!("element {m} not Hermitian (deviation {herm:e})")));
        }
        let min = linalg::eigvalsh(e)[0];
        if min < -tol {
            return Err(Error::InvalidPovm(format!("element {m} has eigenvalue {min:e}")));
        }
        total += e;
    }
    let dev = linalg::max_abs(&total);
    if dev > tol {
        return Err(Error::InvalidPovm(format!("elements sum to identity only within {dev:e}")));
    }
    Ok(())
}

impl Code {
    pub fn new(encoder_states: Vec<DensityMatrix>, decoder_povm: Vec<CMat>) -> Result<Self> {
        Self::build(encoder_states, decoder_povm, None)
    }

    /// Entanglement-assisted code; every encoder state must have the
    /// resource's `K`-marginal.
    pub fn with_assistance(
        encoder_states: Vec<DensityMatrix>,
        decoder_povm: Vec<CMat>,
        assistance: Assistance,
    ) -> Result<Self> {
        Self::build(encoder_states, decoder_povm, Some(assistance))
    }

    fn build(encoder_states: Vec<DensityMatrix>, decoder_povm: Vec<CMat>, assistance: Option<Assistance>) -> Result<Self> {
        let m = encoder_states.len();
        if m < 2 {
            return Err(Error::InvalidArgument(format!("a code needs at least 2 messages, got {m}")));
        }
        if decoder_povm.len() != m {
            return Err(Error::InvalidPovm(format!("{} POVM elements for {m} messages", decoder_povm.len())));
        }
        let d_in = encoder_states[0].dim();
        if let Some(bad) = encoder_states.iter().find(|s| s.dim() != d_in) {
            return Err(Error::DimensionMismatch { expected: d_in, got: bad.dim() });
        }
        validate_povm(&decoder_povm)?;
        if let Some(a) = &assistance {
            if !d_in.is_multiple_of(a.d_k) || !decoder_povm[0].nrows().is_multiple_of(a.d_k) {
                return Err(Error::InvalidShape("code dimensions do not contain the K factor".into()));
            }
            let target = a.decoder_marginal();
            for s in &encoder_states {
                let marginal = linalg::partial_trace_op(s.matrix(), &[d_in / a.d_k, a.d_k], &[1]);
                let dev = linalg::max_abs(&(marginal - &target));
                if dev > config::get().trace_tol.max(1e-9) {
                    return Err(Error::InvalidArgument(format!(
                        "encoder state changes the decoder's share of the resource (deviation {dev:e})"
                    )));
                }
            }
        }
        Ok(Self { encoder_states, decoder_povm, assistance })
    }

    pub fn messages(&self) -> usize {
        self.encoder_states.len()
    }

    pub fn encoder_states(&self) -> &[DensityMatrix] {
        &self.encoder_states
    }

    pub fn decoder_povm(&self) -> &[CMat] {
        &self.decoder_povm
    }

    pub fn assistance(&self) -> Option<&Assistance> {
        self.assistance.as_ref()
    }

    fn d_k(&self) -> usize {
        self.assistance.as_ref().map_or(1, |a| a.d_k)
    }

    fn check_against(&self, chan: &QuantumChannel) -> Result<()> {
        let d_k = self.d_k();
        let want_in = chan.d_in_a() * d_k;
        if self.encoder_states[0].dim() != want_in {
            return Err(Error::DimensionMismatch { expected: want_in, got: self.encoder_states[0].dim() });
        }
        let want_out = chan.d_out() * d_k;
        if self.decoder_povm[0].nrows() != want_out {
            return Err(Error::DimensionMismatch { expected: want_out, got: self.decoder_povm[0].nrows() });
        }
        Ok(())
    }
}

impl Serialize for Code {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Repr<'a> {
            messages: usize,
            encoder_states: &'a [DensityMatrix],
            decoder_povm: Vec<json::MatrixJson>,
            #[serde(skip_serializing_if = "Option::is_none")]
            assistance: Option<&'a Assistance>,
        }
        Repr {
            messages: self.messages(),
            encoder_states: &self.encoder_states,
            decoder_povm: self.decoder_povm.iter().map(json::matrix_to_json).collect(),
            assistance: self.assistance.as_ref(),
        }
        .serialize(s)
    }
}

/// Output states `(N(. (x) X) (x) id_K)(rho_m)` for an operator `X` on `E^n`.
fn outputs_for(code_states: &[CMat], chan: &QuantumChannel, x: &CMat, d_k: usize) -> Vec<CMat> {
    let fixed = QuantumChannel::from_choi_unchecked(chan.d_in_a(), 1, chan.d_out(), chan.fix_jammer_op(x));
    code_states.iter().map(|s| fixed.apply_on_first(s, d_k)).collect()
}

fn success_of(outputs: &[CMat], povm: &[CMat]) -> C64 {
    let m = outputs.len() as f64;
    outputs
        .iter()
        .zip(povm)
        .map(|(o, d)| linalg::trace_product(d, o))
        .sum::<C64>()
        / c(m, 0.0)
}

/// The linear extension `X -> tr(X) - success(X)` of the error to all operators on `E^n`.
fn error_linear(code: &Code, chan: &QuantumChannel, x: &CMat) -> C64 {
    let states: Vec<CMat> = code.encoder_states.iter().map(|s| s.matrix().clone()).collect();
    let outs = outputs_for(&states, chan, x, code.d_k());
    linalg::trace(x) - success_of(&outs, &code.decoder_povm)
}

/// Average error of `code` against the jammer state `sigma`.
pub fn error_probability(code: &Code, chan: &QuantumChannel, sigma: &DensityMatrix) -> Result<f64> {
    code.check_against(chan)?;
    if sigma.dim() != chan.d_in_e() {
        return Err(Error::DimensionMismatch { expected: chan.d_in_e(), got: sigma.dim() });
    }
    Ok(error_linear(code, chan, sigma.matrix()).re)
}

/// Hermitian `T` on `E^n` with `error_probability(code, chan, sigma) = tr(T sigma)`.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorOperator {
    #[serde(serialize_with = "json::serialize_matrix")]
    pub matrix: CMat,
    pub code_ref: Option<String>,
}

impl ErrorOperator {
    pub fn value(&self, sigma: &DensityMatrix) -> f64 {
        linalg::real_pairing(&self.matrix, sigma.matrix())
    }
}

/// Reconstructs the Hermitian `T` with `L(X) = tr(T X)` from evaluations of a
/// linear functional on symmetrized matrix units.
fn reconstruct_hermitian<F: Fn(&CMat) -> C64>(d: usize, functional: F) -> CMat {
    let unit = |k: usize, l: usize, z: C64| {
        let mut m = CMat::zeros(d, d);
        m[(k, l)] = z;
        m
    };
    let mut t = CMat::zeros(d, d);
    for k in 0..d {
        t[(k, k)] = c(functional(&unit(k, k, c(1.0, 0.0))).re, 0.0);
        for l in k + 1..d {
            let sym = unit(k, l, c(1.0, 0.0)) + unit(l, k, c(1.0, 0.0));
            let anti = unit(k, l, c(0.0, 1.0)) + unit(l, k, c(0.0, -1.0));
            let a = functional(&sym).re;
            let b = functional(&anti).re;
            // a = 2 Re T_lk, b = -2 Im T_lk
            t[(l, k)] = c(a / 2.0, -b / 2.0);
            t[(k, l)] = t[(l, k)].conj();
        }
    }
    t
}

/// Largest deviation of `tr(T sigma)` from `direct(sigma)` on seeded random states.
fn reconstruction_residual<F: Fn(&CMat) -> f64>(t: &CMat, direct: F) -> f64 {
    let d = t.nrows();
    let mut rng = random::seeded(0x5eed);
    (0..8)
        .map(|_| {
            let s = random::ginibre_state(d, d, &mut rng);
            (linalg::real_pairing(t, &s) - direct(&s)).abs()
        })
        .fold(0.0, f64::max)
}

/// Error operator assembled from evaluations on a Hermitian basis and checked
/// against direct evaluation.
pub fn error_operator(code: &Code, chan: &QuantumChannel) -> Result<ErrorOperator> {
    code.check_against(chan)?;
    let t = reconstruct_hermitian(chan.d_in_e(), |x| error_linear(code, chan, x));
    let residual = reconstruction_residual(&t, |s| error_linear(code, chan, s).re);
    if residual > 1e-9 {
        return Err(Error::Reconstruction(residual));
    }
    Ok(ErrorOperator { matrix: t, code_ref: None })
}

/// Worst-case error over all jammer states and a pure state attaining it.
pub fn worst_case_error(code: &Code, chan: &QuantumChannel) -> Result<(f64, DensityMatrix)> {
    let t = error_operator(code, chan)?;
    let (top, v) = linalg::top_eigvec(&t.matrix);
    Ok((top, DensityMatrix::from_pure(&PureState::from_raw(v))))
}

/// Square-root measurement; the kernel of `sum_m rho_m` is shared evenly.
fn pretty_good_measurement(outputs: &[CMat]) -> Vec<CMat> {
    let d = outputs[0].nrows();
    let m = outputs.len();
    let total: CMat = outputs.iter().fold(CMat::zeros(d, d), |a, b| a + b);
    let (inv, rest) = support_inverse_sqrt(&total);
    outputs
        .iter()
        .map(|o| linalg::hermitize(&(&inv * o * &inv + &rest / c(m as f64, 0.0))))
        .collect()
}

/// `(Lambda^{-1/2} on the support, I - support projector)`.
fn support_inverse_sqrt(lambda: &CMat) -> (CMat, CMat) {
    let (values, vectors) = linalg::eigh(lambda);
    let top = values.last().copied().unwrap_or(0.0).max(0.0);
    let thr = 1e-12 * top.max(1e-300);
    let inv: Vec<f64> = values.iter().map(|&v| if v > thr { 1.0 / v.sqrt() } else { 0.0 }).collect();
    let kernel: Vec<f64> = values.iter().map(|&v| if v > thr { 0.0 } else { 1.0 }).collect();
    (linalg::from_eigen(&inv, &vectors), linalg::from_eigen(&kernel, &vectors))
}

fn success_real(outputs: &[CMat], povm: &[CMat]) -> f64 {
    success_of(outputs, povm).re
}

/// Decoder for equiprobable output states: pretty-good measurement refined by
/// the iteration `D_m <- L^{-1/2} rho_m D_m rho_m L^{-1/2}` with
/// `L = sum_m rho_m D_m rho_m`, keeping only improving steps (at most 200).
/// For two messages the Helstrom measurement is also tried.
pub fn best_decoder(outputs: &[CMat]) -> Result<Vec<CMat>> {
    let m = outputs.len();
    if m < 2 {
        return Err(Error::InvalidArgument("need at least two output states".into()));
    }
    let d = outputs[0].nrows();
    if outputs.iter().any(|o| o.nrows() != d || o.ncols() != d) {
        return Err(Error::InvalidShape("output states must share one dimension".into()));
    }
    let mut best = pretty_good_measurement(outputs);
    let mut best_success = success_real(outputs, &best);
    if m == 2 {
        let p = linalg::positive_projector(&(&outputs[0] - &outputs[1]), 0.0);
        let helstrom = vec![p.clone(), linalg::identity(d) - p];
        let s = success_real(outputs, &helstrom);
        if s > best_success {
            best = helstrom;
            best_success = s;
        }
    }
    for _ in 0..200 {
        let sandwiches: Vec<CMat> = outputs.iter().zip(&best).map(|(o, e)| o * e * o).collect();
        let lambda = sandwiches.iter().fold(CMat::zeros(d, d), |a, b| a + b);
        let (inv, rest) = support_inverse_sqrt(&linalg::hermitize(&lambda));
        let next: Vec<CMat> = sandwiches
            .iter()
            .map(|s| linalg::hermitize(&(&inv * s * &inv + &rest / c(m as f64, 0.0))))
            .collect();
        let s = success_real(outputs, &next);
        if s <= best_success + 1e-15 {
            break;
        }
        best = next;
        best_success = s;
    }
    Ok(best)
}

/// Polar factor `G (G^dag G)^{-1/2}` via SVD.
fn polar(g: &CMat) -> CMat {
    let svd = g.clone().svd(true, true);
    let u = svd.u.expect("requested");
    let v_t = svd.v_t.expect("requested");
    u * v_t
}

/// Maximizes `tr(O tau)` over states `tau` on `A (x) K` whose `K`-marginal is
/// `omega`, by the monotone polar iteration on a Stinespring isometry.
fn best_assisted_state(obs: &CMat, d_a: usize, omega: &CMat, rng: &mut SeededRng) -> CMat {
    let d_k = omega.nrows();
    let clip = config::get().eig_clip;
    let root = linalg::sqrt_psd(omega, clip);
    let lift = linalg::kron(&linalg::identity(d_a), &root);
    let tilde = linalg::hermitize(&(&lift * obs * &lift));
    let r = d_a * d_k;
    // stacked Kraus operators: rows (k, a), columns K'
    let mut v = random::isometry(r * d_a, d_k, rng);
    let state_of = |v: &CMat| -> CMat {
        let mut w = CMat::zeros(d_a * d_k, d_a * d_k);
        for k in 0..r {
            let vec = CVec::from_fn(d_a * d_k, |idx, _| v[(k * d_a + idx / d_k, idx % d_k)]);
            w += linalg::projector(&vec);
        }
        linalg::hermitize(&(&lift * w * &lift))
    };
    let objective = |v: &CMat| linalg::real_pairing(obs, &state_of(v));
    let mut value = objective(&v);
    for _ in 0..500 {
        let mut g = CMat::zeros(r * d_a, d_k);
        for k in 0..r {
            let vec = CVec::from_fn(d_a * d_k, |idx, _| v[(k * d_a + idx / d_k, idx % d_k)]);
            let image = &tilde * vec;
            for idx in 0..d_a * d_k {
                g[(k * d_a + idx / d_k, idx % d_k)] = image[idx];
            }
        }
        let next = polar(&g);
        let next_value = objective(&next);
        if next_value <= value + 1e-13 {
            if next_value > value {
                v = next;
            }
            break;
        }
        v = next;
        value = next_value;
    }
    state_of(&v)
}

/// Encoder states maximizing success for a fixed decoder and jammer state.
/// Unassisted: the top eigenvector of `N_sigma^dag(D_m)`. Assisted: the best
/// state on `A (x) K` with the resource's `K`-marginal.
pub fn best_encoder(
    decoder_povm: &[CMat],
    chan: &QuantumChannel,
    sigma: &DensityMatrix,
    assistance: Option<&Assistance>,
) -> Result<Vec<DensityMatrix>> {
    if sigma.dim() != chan.d_in_e() {
        return Err(Error::DimensionMismatch { expected: chan.d_in_e(), got: sigma.dim() });
    }
    let d_k = assistance.map_or(1, |a| a.d_k);
    let want = chan.d_out() * d_k;
    if let Some(bad) = decoder_povm.iter().find(|d| d.nrows() != want) {
        return Err(Error::DimensionMismatch { expected: want, got: bad.nrows() });
    }
    let fixed = chan.fix_jammer(sigma)?;
    let mut rng = random::seeded(0xe1c0de);
    Ok(decoder_povm
        .iter()
        .map(|d| {
            let obs = linalg::hermitize(&fixed.adjoint_on_first(d, d_k));
            match assistance {
                None => DensityMatrix::from_pure(&PureState::from_raw(linalg::top_eigvec(&obs).1)),
                Some(a) => DensityMatrix::from_raw(best_assisted_state(&obs, chan.d_in_a(), &a.decoder_marginal(), &mut rng)),
            }
        })
        .collect())
}

/// Controls for [`see_saw_code`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SeeSawOptions {
    pub restarts: usize,
    /// Stop a restart once a round improves success by less than this.
    pub tol: f64,
    pub max_rounds: usize,
    pub seed: u64,
}

impl Default for SeeSawOptions {
    fn default() -> Self {
        Self { restarts: 8, tol: 1e-12, max_rounds: 200, seed: 0 }
    }
}

fn random_encoders(m: usize, d_a: usize, assistance: Option<&Assistance>, rng: &mut SeededRng) -> Vec<DensityMatrix> {
    (0..m)
        .map(|_| match assistance {
            None => DensityMatrix::from_pure(&PureState::from_raw(random::haar_vector(d_a, rng))),
            Some(a) => {
                let obs = random::hermitian(d_a * a.d_k, rng);
                let obs = &obs * obs.adjoint();
                DensityMatrix::from_raw(best_assisted_state(&obs, d_a, &a.decoder_marginal(), rng))
            }
        })
        .collect()
}

/// Alternating decoder/encoder improvement for a fixed jammer state, best of
/// `restarts` Haar-random starts. Restarts run in parallel, each with its own
/// generator derived from `seed`; ties go to the lowest restart index.
pub fn see_saw_code(
    chan: &QuantumChannel,
    sigma: &DensityMatrix,
    m: usize,
    opts: &SeeSawOptions,
    assistance: Option<&Assistance>,
) -> Result<Code> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 messages, got {m}")));
    }
    if sigma.dim() != chan.d_in_e() {
        return Err(Error::DimensionMismatch { expected: chan.d_in_e(), got: sigma.dim() });
    }
    let d_k = assistance.map_or(1, |a| a.d_k);
    let mut master = random::seeded(opts.seed);
    let seeds: Vec<u64> = (0..opts.restarts.max(1)).map(|_| master.random()).collect();
    let fixed = chan.fix_jammer(sigma)?;
    let run = |seed: u64| -> Result<(f64, Vec<DensityMatrix>, Vec<CMat>)> {
        let mut rng = random::seeded(seed);
        let mut enc = random_encoders(m, chan.d_in_a(), assistance, &mut rng);
        let mut best: Option<(f64, Vec<DensityMatrix>, Vec<CMat>)> = None;
        let mut prev = f64::NEG_INFINITY;
        for _ in 0..opts.max_rounds.max(1) {
            let outs: Vec<CMat> = enc.iter().map(|s| fixed.apply_on_first(s.matrix(), d_k)).collect();
            let dec = best_decoder(&outs)?;
            let succ = success_real(&outs, &dec);
            if best.as_ref().is_none_or(|b| succ > b.0) {
                best = Some((succ, enc.clone(), dec.clone()));
            }
            if succ - prev < opts.tol {
                break;
            }
            prev = succ;
            enc = best_encoder(&dec, chan, sigma, assistance)?;
        }
        Ok(best.expect("at least one round"))
    };
    let results: Vec<(f64, Vec<DensityMatrix>, Vec<CMat>)> =
        seeds.into_par_iter().map(run).collect::<Result<Vec<_>>>()?;
    let mut best_idx = 0;
    for (i, r) in results.iter().enumerate() {
        if r.0 > results[best_idx].0 + 1e-14 {
            best_idx = i;
        }
    }
    let (_, enc, dec) = results.into_iter().nth(best_idx).expect("non-empty");
    Ok(Code { encoder_states: enc, decoder_povm: dec, assistance: assistance.cloned() })
}

/// One double-oracle round.
#[derive(Debug, Clone, Serialize)]
pub struct RoundTrace {
    pub round: usize,
    /// `lambda_max` of the pool code mixture's error operator.
    pub inf_sup: f64,
    /// Best error of any known code against the round's jammer mixture.
    pub sup_inf: f64,
    pub gap: f64,
    /// Value of the restricted matrix game on the current pools.
    pub pool_value: f64,
    pub code_pool_size: usize,
    pub jammer_pool_size: usize,
}

/// Outcome of solving the code-versus-jammer game.
#[derive(Debug, Clone, Serialize)]
pub struct GameResult {
    /// Value reported for the game: the code side `inf_sup_value`.
    pub value: f64,
    /// Worst-case error guaranteed by `code_mixture` (code side).
    pub inf_sup_value: f64,
    /// Error forced by `jammer_mixture` on every known code (jammer side).
    pub sup_inf_value: f64,
    /// `inf_sup_value - sup_inf_value`.
    pub gap: f64,
    /// Weights over `code_pool`.
    pub code_mixture: Vec<f64>,
    /// Weights over `jammer_pool`.
    pub jammer_mixture: Vec<f64>,
    pub code_pool: Vec<Code>,
    pub jammer_pool: Vec<DensityMatrix>,
    /// Error operators of `code_pool` (same order).
    #[serde(skip)]
    pub error_operators: Vec<CMat>,
    pub rounds: Vec<RoundTrace>,
    pub converged: bool,
}

impl GameResult {
    /// The jammer mixture as a single state on `E^n`.
    pub fn mixed_jammer(&self) -> DensityMatrix {
        let d = self.jammer_pool[0].dim();
        let mut m = CMat::zeros(d, d);
        for (w, s) in self.jammer_mixture.iter().zip(&self.jammer_pool) {
            m += s.matrix() * c(*w, 0.0);
        }
        DensityMatrix::from_raw(m)
    }
}

/// Controls for [`double_oracle_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DoubleOracleOptions {
    pub tol: f64,
    pub max_rounds: usize,
    pub see_saw: SeeSawOptions,
    /// Dimension of a maximally entangled resource for assisted codes.
    pub assistance_dim: Option<usize>,
}

impl Default for DoubleOracleOptions {
    fn default() -> Self {
        Self { tol: 1e-3, max_rounds: 20, see_saw: SeeSawOptions::default(), assistance_dim: None }
    }
}

/// [`double_oracle_with`] for unassisted codes with default see-saw settings.
pub fn double_oracle(chan: &QuantumChannel, m: usize, n: usize, tol: f64, max_rounds: usize) -> Result<GameResult> {
    double_oracle_with(chan, m, n, &DoubleOracleOptions { tol, max_rounds, ..DoubleOracleOptions::default() })
}

/// Double-oracle solution of the game on `n` uses. Each round solves the
/// matrix game on the current pools, adds the exact jammer best response to
/// the code mixture and a see-saw code against the jammer mixture.
pub fn double_oracle_with(chan: &QuantumChannel, m: usize, n: usize, opts: &DoubleOracleOptions) -> Result<GameResult> {
    if m < 2 {
        return Err(Error::InvalidArgument(format!("need at least 2 messages, got {m}")));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 || opts.max_rounds == 0 {
        return Err(Error::InvalidArgument("tol and max_rounds must be positive".into()));
    }
    let block = chan.n_fold(n)?;
    let assistance = match opts.assistance_dim {
        Some(d) => {
            let cap = block.d_in_a();
            if d == 0 || d > cap {
                return Err(Error::CapExceeded(format!("assistance dimension {d} outside 1..={cap}")));
            }
            Some(Assistance::maximally_entangled(d))
        }
        None => None,
    };
    let d_e = block.d_in_e();
    let mut see_saw = opts.see_saw;

    let mut jammers = vec![DensityMatrix::maximally_mixed(d_e)];
    let first = see_saw_code(&block, &jammers[0], m, &see_saw, assistance.as_ref())?;
    let mut ops = vec![error_operator(&first, &block)?.matrix];
    let mut codes = vec![first];
    let mut rounds = Vec::new();
    let mut jammer_mixtures: Vec<CMat> = Vec::new();
    let mut best_code_side: Option<(f64, Vec<f64>)> = None;

    for round in 1..=opts.max_rounds {
        let payoff: Vec<Vec<f64>> = ops
            .iter()
            .map(|t| jammers.iter().map(|s| linalg::real_pairing(t, s.matrix())).collect())
            .collect();
        let sol = lp::solve_zero_sum(&payoff)?;

        let mut t_bar = CMat::zeros(d_e, d_e);
        for (w, t) in sol.row_mixture.iter().zip(&ops) {
            t_bar += t * c(*w, 0.0);
        }
        let (lambda, v) = linalg::top_eigvec(&linalg::hermitize(&t_bar));
        if best_code_side.as_ref().is_none_or(|b| lambda < b.0) {
            best_code_side = Some((lambda, sol.row_mixture.clone()));
        }

        let mut sigma_bar = CMat::zeros(d_e, d_e);
        for (w, s) in sol.col_mixture.iter().zip(&jammers) {
            sigma_bar += s.matrix() * c(*w, 0.0);
        }
        let sigma_bar = DensityMatrix::from_raw(sigma_bar);
        see_saw.seed = opts.see_saw.seed.wrapping_add(round as u64);
        let code = see_saw_code(&block, &sigma_bar, m, &see_saw, assistance.as_ref())?;
        let t_new = error_operator(&code, &block)?.matrix;
        jammer_mixtures.push(sigma_bar.matrix().clone());

        codes.push(code);
        ops.push(t_new);
        jammers.push(DensityMatrix::from_pure(&PureState::from_raw(v)));

        let sup_inf = ops
            .iter()
            .map(|t| linalg::real_pairing(t, sigma_bar.matrix()))
            .fold(f64::INFINITY, f64::min);
        let inf_sup = best_code_side.as_ref().expect("set").0;
        rounds.push(RoundTrace {
            round,
            inf_sup: lambda,
            sup_inf,
            gap: lambda - sup_inf,
            pool_value: sol.inf_sup,
            code_pool_size: codes.len() - 1,
            jammer_pool_size: jammers.len() - 1,
        });
        let best_sup_inf = rounds.iter().map(|r| r.sup_inf).fold(f64::NEG_INFINITY, f64::max);
        if inf_sup - best_sup_inf <= opts.tol {
            break;
        }
    }

    // Re-evaluate every round's jammer mixture against the final code pool so
    // both sides refer to the same set of known codes.
    for (trace, sigma) in rounds.iter_mut().zip(&jammer_mixtures) {
        trace.sup_inf = ops.iter().map(|t| linalg::real_pairing(t, sigma)).fold(f64::INFINITY, f64::min);
        trace.gap = trace.inf_sup - trace.sup_inf;
    }
    let (best_round, sup_inf_value) = rounds
        .iter()
        .enumerate()
        .map(|(i, r)| (i, r.sup_inf))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    let (inf_sup_value, mut code_mixture) = best_code_side.expect("at least one round");
    code_mixture.resize(codes.len(), 0.0);

    // jammer mixture of the best round, expressed over the final jammer pool
    let payoff_round = {
        let pool = best_round + 1;
        let payoff: Vec<Vec<f64>> = ops[..pool]
            .iter()
            .map(|t| jammers[..pool].iter().map(|s| linalg::real_pairing(t, s.matrix())).collect())
            .collect();
        lp::solve_zero_sum(&payoff)?
    };
    let mut jammer_mixture = payoff_round.col_mixture;
    jammer_mixture.resize(jammers.len(), 0.0);

    let gap = inf_sup_value - sup_inf_value;
    Ok(GameResult {
        value: inf_sup_value,
        inf_sup_value,
        sup_inf_value,
        gap,
        code_mixture,
        jammer_mixture,
        code_pool: codes,
        jammer_pool: jammers,
        error_operators: ops,
        rounds,
        converged: gap <= opts.tol,
    })
}

/// Deterministic classical code: `encoder[m]` is a word in `X^n`, `decoder[y]`
/// the message guessed for the word `y` in `Y^n` (words as flat indices).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeterministicCode {
    pub encoder: Vec<usize>,
    pub decoder: Vec<usize>,
}

/// `n`-letter product table `W^n(y^n | x^n, e^n)` as `w[x][e][y]`.
fn product_table(table: &ClassicalTable, n: usize) -> (usize, usize, usize, Vec<Vec<Vec<f64>>>) {
    let (nx, ne, ny) = (table.nx().pow(n as u32), table.ne().pow(n as u32), table.ny().pow(n as u32));
    let dims = |base: usize| vec![base; n];
    let mut w = vec![vec![vec![0.0; ny]; ne]; nx];
    for (x, wx) in w.iter_mut().enumerate() {
        let xd = linalg::digits(x, &dims(table.nx()));
        for (e, wxe) in wx.iter_mut().enumerate() {
            let ed = linalg::digits(e, &dims(table.ne()));
            for (y, p) in wxe.iter_mut().enumerate() {
                let yd = linalg::digits(y, &dims(table.ny()));
                *p = (0..n).map(|k| table.prob(yd[k], xd[k], ed[k])).product();
            }
        }
    }
    (nx, ne, ny, w)
}

fn classical_error(code: &DeterministicCode, w: &[Vec<Vec<f64>>], e: usize) -> f64 {
    let m = code.encoder.len();
    let success: f64 = code
        .decoder
        .iter()
        .enumerate()
        .map(|(y, &guess)| w[code.encoder[guess]][e][y])
        .sum();
    1.0 - success / m as f64
}

/// Exact best deterministic code against a jammer distribution `q` on `E^n`:
/// every encoder with its maximum-likelihood decoder.
fn classical_best_response(w: &[Vec<Vec<f64>>], q: &[f64], m: usize) -> (DeterministicCode, f64) {
    let (nx, ny) = (w.len(), w[0][0].len());
    let mixed: Vec<Vec<f64>> = (0..nx)
        .map(|x| (0..ny).map(|y| q.iter().enumerate().map(|(e, qe)| qe * w[x][e][y]).sum()).collect())
        .collect();
    let mut best: Option<(DeterministicCode, f64)> = None;
    let total = nx.pow(m as u32);
    for idx in 0..total {
        let encoder = linalg::digits(idx, &vec![nx; m]);
        let mut success = 0.0;
        let mut decoder = vec![0; ny];
        for (y, slot) in decoder.iter_mut().enumerate() {
            let (mut arg, mut top) = (0, f64::NEG_INFINITY);
            for (msg, &x) in encoder.iter().enumerate() {
                if mixed[x][y] > top + 1e-15 {
                    top = mixed[x][y];
                    arg = msg;
                }
            }
            *slot = arg;
            success += top;
        }
        let err = 1.0 - success / m as f64;
        if best.as_ref().is_none_or(|b| err < b.1 - 1e-15) {
            best = Some((DeterministicCode { encoder, decoder }, err));
        }
    }
    best.expect("at least one encoder")
}

fn deterministic_to_code(code: &DeterministicCode, nx: usize) -> Code {
    let encoder_states = code.encoder.iter().map(|&x| DensityMatrix::basis(nx, x)).collect();
    let m = code.encoder.len();
    let decoder_povm = (0..m)
        .map(|msg| {
            let diag: Vec<f64> = code.decoder.iter().map(|&g| if g == msg { 1.0 } else { 0.0 }).collect();
            linalg::diag(&diag)
        })
        .collect();
    Code { encoder_states, decoder_povm, assistance: None }
}

/// Largest number of deterministic codes enumerated explicitly.
const ENUMERATION_LIMIT: usize = 4096;

/// Exact value of the classical game over shared-randomness codes. Small
/// instances enumerate every deterministic code; larger ones add exact best
/// responses to the restricted game until no code improves on its value.
pub fn classical_game_value(table: &ClassicalTable, m: usize, n: usize) -> Result<GameResult> {
    if table.nx() > 4 || table.ny() > 4 || table.ne() > 4 || n > 2 || m > 4 {
        return Err(Error::CapExceeded(format!(
            "|X|={} |Y|={} |E|={} n={n} M={m}; caps are 4, 4, 4, 2, 4",
            table.nx(),
            table.ny(),
            table.ne()
        )));
    }
    if m < 2 || n == 0 {
        return Err(Error::InvalidArgument("need M >= 2 and n >= 1".into()));
    }
    let (nx, ne, ny, w) = product_table(table, n);
    let encoders = nx.checked_pow(m as u32);
    let decoders = m.checked_pow(ny as u32);
    let count = encoders.zip(decoders).and_then(|(a, b)| a.checked_mul(b));

    let mut codes: Vec<DeterministicCode> = Vec::new();
    if let Some(count) = count.filter(|&c| c <= ENUMERATION_LIMIT) {
        for idx in 0..count {
            let (ei, di) = (idx / decoders.expect("checked"), idx % decoders.expect("checked"));
            codes.push(DeterministicCode {
                encoder: linalg::digits(ei, &vec![nx; m]),
                decoder: linalg::digits(di, &vec![m; ny]),
            });
        }
    } else {
        codes.push(classical_best_response(&w, &vec![1.0 / ne as f64; ne], m).0);
    }

    let mut rounds = Vec::new();
    let (sol, sup_inf) = loop {
        let payoff: Vec<Vec<f64>> = codes.iter().map(|code| (0..ne).map(|e| classical_error(code, &w, e)).collect()).collect();
        let sol = lp::solve_zero_sum(&payoff)?;
        let (response, err) = classical_best_response(&w, &sol.col_mixture, m);
        let exact_sup_inf = err.min(sol.sup_inf);
        rounds.push(RoundTrace {
            round: rounds.len() + 1,
            inf_sup: sol.inf_sup,
            sup_inf: exact_sup_inf,
            gap: sol.inf_sup - exact_sup_inf,
            pool_value: sol.inf_sup,
            code_pool_size: codes.len(),
            jammer_pool_size: ne,
        });
        if err >= sol.sup_inf - 1e-12 || codes.contains(&response) {
            break (sol, exact_sup_inf);
        }
        codes.push(response);
    };

    let support: Vec<usize> = (0..codes.len()).filter(|&i| sol.row_mixture[i] > 1e-14).collect();
    let total: f64 = support.iter().map(|&i| sol.row_mixture[i]).sum();
    let code_mixture = support.iter().map(|&i| sol.row_mixture[i] / total).collect();
    let code_pool: Vec<Code> = support.iter().map(|&i| deterministic_to_code(&codes[i], nx)).collect();
    let jammer_pool = (0..ne).map(|e| DensityMatrix::basis(ne, e)).collect();
    let block = table.to_quantum().n_fold(n)?;
    let error_operators = code_pool
        .iter()
        .map(|code| error_operator(code, &block).map(|t| t.matrix))
        .collect::<Result<Vec<_>>>()?;
    let gap = sol.inf_sup - sup_inf;
    Ok(GameResult {
        value: sol.inf_sup,
        inf_sup_value: sol.inf_sup,
        sup_inf_value: sup_inf,
        gap,
        code_mixture,
        jammer_mixture: sol.col_mixture,
        code_pool,
        jammer_pool,
        error_operators,
        rounds,
        converged: gap.abs() <= 1e-8,
    })
}

/// Code that transmits quantum information: channels `R -> A^n` and `B^n -> R`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuantumCode {
    pub encoder: QuantumChannel,
    pub decoder: QuantumChannel,
}

impl QuantumCode {
    pub fn new(encoder: QuantumChannel, decoder: QuantumChannel) -> Result<Self> {
        if encoder.d_in_e() != 1 || decoder.d_in_e() != 1 {
            return Err(Error::InvalidShape("encoder and decoder take no jammer input".into()));
        }
        if decoder.d_out() != encoder.d_in_a() {
            return Err(Error::DimensionMismatch { expected: encoder.d_in_a(), got: decoder.d_out() });
        }
        Ok(Self { encoder, decoder })
    }

    fn check_against(&self, chan: &QuantumChannel) -> Result<()> {
        if self.encoder.d_out() != chan.d_in_a() {
            return Err(Error::DimensionMismatch { expected: chan.d_in_a(), got: self.encoder.d_out() });
        }
        if self.decoder.d_in_a() != chan.d_out() {
            return Err(Error::DimensionMismatch { expected: chan.d_out(), got: self.decoder.d_in_a() });
        }
        Ok(())
    }
}

fn fidelity_linear(code: &QuantumCode, chan: &QuantumChannel, x: &CMat) -> C64 {
    let d_r = code.encoder.d_in_a();
    let phi = qstate::maximally_entangled(d_r);
    let start = linalg::projector(phi.amplitudes());
    let fixed = QuantumChannel::from_choi_unchecked(chan.d_in_a(), 1, chan.d_out(), chan.fix_jammer_op(x));
    let encoded = code.encoder.apply_on_second(&start, d_r);
    let sent = fixed.apply_on_second(&encoded, d_r);
    let decoded = code.decoder.apply_on_second(&sent, d_r);
    let v = phi.amplitudes();
    (v.adjoint() * decoded * v)[(0, 0)]
}

/// `<Phi| (D o N_sigma o E (x) id)(Phi) |Phi>` for the maximally entangled `Phi` on `R`.
pub fn entanglement_fidelity(code: &QuantumCode, chan: &QuantumChannel, sigma: &DensityMatrix) -> Result<f64> {
    code.check_against(chan)?;
    if sigma.dim() != chan.d_in_e() {
        return Err(Error::DimensionMismatch { expected: chan.d_in_e(), got: sigma.dim() });
    }
    Ok(fidelity_linear(code, chan, sigma.matrix()).re)
}

/// Hermitian `F` on `E^n` with `entanglement_fidelity = tr(F sigma)`.
pub fn fidelity_operator(code: &QuantumCode, chan: &QuantumChannel) -> Result<CMat> {
    code.check_against(chan)?;
    let f = reconstruct_hermitian(chan.d_in_e(), |x| fidelity_linear(code, chan, x));
    let residual = reconstruction_residual(&f, |s| fidelity_linear(code, chan, s).re);
    if residual > 1e-9 {
        return Err(Error::Reconstruction(residual));
    }
    Ok(f)
}
