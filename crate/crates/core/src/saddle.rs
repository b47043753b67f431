//! Saddle-point solvers for capacity expressions of jammed channels.
//!
//! - [`solve_ea_saddle`]: `max_rho min_sigma I(A':B)` evaluated on
//!   `(id (x) N_sigma)(|rho><rho|)` with `|rho>` the canonical purification.
//! - [`solve_cq_sr`]: `min_sigma max_p I(X:B)` for a classical-quantum channel.
//! - [`regularized_qq_sr`]: `(1/n) min_sigma max_{ensembles} I(X:B^n)` over
//!   `n` uses with a jammer acting on `E^n`.
//!
//! All solvers run entropic mirror steps on the density-matrix simplex
//! (`rho ∝ exp(accumulated gradients)`) and report a duality-gap certificate.
//! Each certificate bound comes from a one-sided solve finished with a
//! Frank-Wolfe bound: for a concave `g`, `max g <= g(rho) + lambda_max(grad) - tr(grad rho)`.

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::channels::{CQChannelTable, QuantumChannel};
use crate::config;
use crate::entropy::relative_entropy_op;
use crate::error::{Error, Result};
use crate::linalg::{self, c, CMat, CVec, LN2};
use crate::qstate::{DensityMatrix, PureState};
use crate::random;

/// Result of a concave-convex saddle solve.
#[derive(Debug, Clone, Serialize)]
pub struct SaddleResult {
    /// Payoff at `(rho_star, sigma_star)`.
    pub value: f64,
    pub rho_star: DensityMatrix,
    pub sigma_star: DensityMatrix,
    /// `upper_bound - lower_bound`.
    pub gap: f64,
    /// Certified `max_rho min_sigma` lower bound (from `rho_star`).
    pub lower_bound: f64,
    /// Certified `min_sigma max_rho` upper bound (from `sigma_star`).
    pub upper_bound: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Result of the classical-quantum shared-randomness capacity solve.
#[derive(Debug, Clone, Serialize)]
pub struct CQCapacityResult {
    pub value: f64,
    pub p_star: Vec<f64>,
    pub sigma_star: DensityMatrix,
    pub gap: f64,
    pub lower_bound: f64,
    pub upper_bound: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Signal ensemble of pure input states.
#[derive(Debug, Clone, Serialize)]
pub struct Ensemble {
    pub probabilities: Vec<f64>,
    pub states: Vec<PureState>,
}

/// Result of the finite-`n` regularized quantum-quantum evaluation. All
/// values are per channel use.
#[derive(Debug, Clone, Serialize)]
pub struct QqResult {
    pub n: usize,
    /// Best found `max_ensemble I(X:B^n) / n` at `sigma_star`.
    pub value: f64,
    /// Certified `min_sigma I(X:B^n) / n` for the reported ensemble.
    pub lower_bound: f64,
    pub gap: f64,
    pub sigma_star: DensityMatrix,
    pub ensemble: Ensemble,
    pub iterations: usize,
    pub converged: bool,
}

/// Step-size and iteration controls for the mirror-step solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SaddleOptions {
    pub tol: f64,
    pub max_iter: usize,
    /// `c` in the step size `c / sqrt(k)`.
    pub step_scale: f64,
    /// Iteration cap of each one-sided certificate solve.
    pub inner_max_iter: usize,
}

impl Default for SaddleOptions {
    fn default() -> Self {
        Self { tol: 1e-4, max_iter: 5000, step_scale: 1.0, inner_max_iter: 3000 }
    }
}

impl SaddleOptions {
    fn validate(&self) -> Result<()> {
        if self.tol.is_nan() || self.tol <= 0.0 {
            return Err(Error::InvalidArgument(format!("tolerance must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Entropy in bits and its gradient `-log2 X - I/ln 2` on the support.
fn entropy_with_gradient(m: &CMat) -> (f64, CMat) {
    let clip = config::get().eig_clip;
    let (values, vectors) = linalg::eigh(m);
    let mut s = 0.0;
    let grad: Vec<f64> = values
        .iter()
        .map(|&x| {
            if x > clip {
                s -= x * x.log2();
                -x.log2() - 1.0 / LN2
            } else {
                0.0
            }
        })
        .collect();
    (s, linalg::hermitize(&linalg::from_eigen(&grad, &vectors)))
}

fn log_for_warm_start(m: &CMat) -> CMat {
    linalg::mat_fn(m, |x| x.max(1e-300).ln())
}

/// Payoff of the entanglement-assisted game together with both gradients.
#[derive(Debug, Clone)]
pub struct EaEvaluation {
    pub value: f64,
    /// Gradient in `rho` (Hermitian, on `A`).
    pub grad_rho: CMat,
    /// Gradient in `sigma` (Hermitian, on `E`).
    pub grad_sigma: CMat,
}

fn ea_evaluate(chan: &QuantumChannel, rho: &CMat, sigma: &CMat) -> EaEvaluation {
    let (d_a, d_b) = (chan.d_in_a(), chan.d_out());
    let clip = config::get().eig_clip;
    let j_sigma = linalg::hermitize(&chan.fix_jammer_op(sigma));
    let fixed = QuantumChannel::from_choi_unchecked(d_a, 1, d_b, j_sigma.clone());

    let (s_rho, g_rho) = entropy_with_gradient(rho);
    let rho_t = rho.transpose();
    let out_b = linalg::hermitize(&fixed.apply_op(&rho_t));
    let (s_b, g_b) = entropy_with_gradient(&out_b);

    let root = linalg::kron(&linalg::sqrt_psd(rho, clip), &linalg::identity(d_b));
    let omega = linalg::hermitize(&(&root * &j_sigma * &root));
    let (s_omega, g_omega) = entropy_with_gradient(&omega);

    // S(omega) = S(Y) with Y = J^{1/2} (rho (x) I) J^{1/2}, which is linear in rho.
    let j_half = linalg::sqrt_psd(&j_sigma, clip);
    let y = linalg::hermitize(&(&j_half * linalg::kron(rho, &linalg::identity(d_b)) * &j_half));
    let (_, g_y) = entropy_with_gradient(&y);
    let pulled = linalg::partial_trace_op(&(&j_half * g_y * &j_half), &[d_a, d_b], &[0]);
    let grad_rho = linalg::hermitize(&(g_rho + fixed.adjoint_op(&g_b).transpose() - pulled));

    let k = &root * g_omega * &root;
    let grad_sigma = linalg::hermitize(&(chan.jammer_adjoint(&rho_t, &g_b) - chan.fix_jammer_op_adjoint(&k)));

    EaEvaluation { value: s_rho + s_b - s_omega, grad_rho, grad_sigma }
}

fn check_ea_dims(chan: &QuantumChannel, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != chan.d_in_a() {
        return Err(Error::DimensionMismatch { expected: chan.d_in_a(), got: rho.dim() });
    }
    if sigma.dim() != chan.d_in_e() {
        return Err(Error::DimensionMismatch { expected: chan.d_in_e(), got: sigma.dim() });
    }
    Ok(())
}

/// `I(A':B)` of `(id (x) N(. (x) sigma))(|rho><rho|)` in bits.
pub fn payoff_ea(chan: &QuantumChannel, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_ea_dims(chan, rho, sigma)?;
    Ok(ea_evaluate(chan, rho.matrix(), sigma.matrix()).value)
}

/// [`payoff_ea`] with its gradients in both slots.
pub fn payoff_ea_gradients(chan: &QuantumChannel, rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<EaEvaluation> {
    check_ea_dims(chan, rho, sigma)?;
    Ok(ea_evaluate(chan, rho.matrix(), sigma.matrix()))
}

/// Outcome of a one-sided concave maximization.
#[derive(Debug, Clone)]
pub(crate) struct Ascent {
    pub state: CMat,
    pub value: f64,
    /// Frank-Wolfe upper bound on the maximum.
    pub bound: f64,
}

fn frank_wolfe_gap(grad: &CMat, state: &CMat) -> f64 {
    let top = *linalg::eigvalsh(grad).last().expect("non-empty");
    (top - linalg::real_pairing(grad, state)).max(0.0)
}

/// Maximizes a concave function over density matrices by entropic mirror
/// ascent with an adaptive step, stopping once the Frank-Wolfe gap is `<= tol`.
pub(crate) fn mirror_ascent<F>(init_log: CMat, mut oracle: F, tol: f64, max_iter: usize) -> Ascent
where
    F: FnMut(&CMat) -> (f64, CMat),
{
    let mut log = init_log;
    let mut state = linalg::normalized_exp(&log);
    let (mut value, mut grad) = oracle(&state);
    let mut step = 1.0;
    for _ in 0..max_iter {
        if frank_wolfe_gap(&grad, &state) <= tol {
            break;
        }
        let mut accepted = false;
        while step > 1e-12 {
            let trial_log = &log + &grad * c(step, 0.0);
            let trial = linalg::normalized_exp(&trial_log);
            let (v, g) = oracle(&trial);
            if v >= value {
                log = trial_log;
                state = trial;
                value = v;
                grad = g;
                step = (step * 2.0).min(1e8);
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
    }
    let bound = value + frank_wolfe_gap(&grad, &state);
    Ascent { state, value, bound }
}

/// Minimization counterpart of [`mirror_ascent`]; `bound` is a lower bound.
pub(crate) fn mirror_descent<F>(init_log: CMat, mut oracle: F, tol: f64, max_iter: usize) -> Ascent
where
    F: FnMut(&CMat) -> (f64, CMat),
{
    let res = mirror_ascent(
        init_log,
        |x| {
            let (v, g) = oracle(x);
            (-v, -g)
        },
        tol,
        max_iter,
    );
    Ascent { value: -res.value, bound: -res.bound, ..res }
}

/// Iterations at which certificates are computed.
fn is_checkpoint(k: usize, max_iter: usize) -> bool {
    if k == max_iter {
        return true;
    }
    let mut next = 10.0f64;
    while (next as usize) < k {
        next *= 1.5;
    }
    next as usize == k
}

/// Weighted running average of iterates.
struct Average {
    sum: CMat,
    weight: f64,
}

impl Average {
    fn new(d: usize) -> Self {
        Self { sum: CMat::zeros(d, d), weight: 0.0 }
    }

    fn add(&mut self, m: &CMat, w: f64) {
        self.sum += m * c(w, 0.0);
        self.weight += w;
    }

    fn get(&self) -> CMat {
        linalg::hermitize(&(&self.sum / c(self.weight, 0.0)))
    }
}

/// Best certified bounds seen so far.
struct Certificate {
    lower: f64,
    lower_state: CMat,
    upper: f64,
    upper_state: CMat,
}

impl Certificate {
    fn gap(&self) -> f64 {
        self.upper - self.lower
    }
}

/// Entanglement-assisted saddle value with default step controls.
pub fn solve_ea_saddle(chan: &QuantumChannel, tol: f64, max_iter: usize) -> Result<SaddleResult> {
    solve_ea_saddle_with(chan, &SaddleOptions { tol, max_iter, ..SaddleOptions::default() })
}

/// Simultaneous mirror ascent in `rho` and descent in `sigma` with weighted
/// averaging. At geometric checkpoints the averaged and last iterates (and
/// their best responses) are certified by one-sided solves.
pub fn solve_ea_saddle_with(chan: &QuantumChannel, opts: &SaddleOptions) -> Result<SaddleResult> {
    opts.validate()?;
    let (d_a, d_e) = (chan.d_in_a(), chan.d_in_e());
    let mut log_rho = CMat::zeros(d_a, d_a);
    let mut log_sigma = CMat::zeros(d_e, d_e);
    let mut avg_rho = Average::new(d_a);
    let mut avg_sigma = Average::new(d_e);
    let mut cert: Option<Certificate> = None;
    let inner_tol = opts.tol / 8.0;
    let mut iterations = 0;

    for k in 1..=opts.max_iter {
        iterations = k;
        let rho = linalg::normalized_exp(&log_rho);
        let sigma = linalg::normalized_exp(&log_sigma);
        let step = opts.step_scale / (k as f64).sqrt();
        avg_rho.add(&rho, step);
        avg_sigma.add(&sigma, step);
        let eval = ea_evaluate(chan, &rho, &sigma);
        log_rho += &eval.grad_rho * c(step, 0.0);
        log_sigma -= &eval.grad_sigma * c(step, 0.0);

        if !is_checkpoint(k, opts.max_iter) {
            continue;
        }
        let rho_last = linalg::normalized_exp(&log_rho);
        let sigma_last = linalg::normalized_exp(&log_sigma);
        let rho_cands = vec![avg_rho.get(), rho_last];
        let sigma_cands = vec![avg_sigma.get(), sigma_last];

        // lower bound: min over sigma at a fixed rho
        let lower_solve = |r: &CMat| {
            mirror_descent(
                log_sigma.clone(),
                |s| {
                    let e = ea_evaluate(chan, r, s);
                    (e.value, e.grad_sigma)
                },
                inner_tol,
                opts.inner_max_iter,
            )
        };
        // upper bound: max over rho at a fixed sigma
        let upper_solve = |s: &CMat| {
            mirror_ascent(
                log_rho.clone(),
                |r| {
                    let e = ea_evaluate(chan, r, s);
                    (e.value, e.grad_rho)
                },
                inner_tol,
                opts.inner_max_iter,
            )
        };

        let mut lowers: Vec<(CMat, Ascent)> = rho_cands.into_par_iter().map(|r| {
            let a = lower_solve(&r);
            (r, a)
        }).collect();
        let mut sigma_all = sigma_cands;
        sigma_all.extend(lowers.iter().map(|(_, a)| a.state.clone()));
        let uppers: Vec<(CMat, Ascent)> = sigma_all.into_par_iter().map(|s| {
            let a = upper_solve(&s);
            (s, a)
        }).collect();
        let responses: Vec<CMat> = uppers.iter().map(|(_, a)| a.state.clone()).collect();
        lowers.extend(responses.into_par_iter().map(|r| {
            let a = lower_solve(&r);
            (r, a)
        }).collect::<Vec<_>>());

        for (r, a) in &lowers {
            match &mut cert {
                Some(cc) if a.bound <= cc.lower => {}
                Some(cc) => {
                    cc.lower = a.bound;
                    cc.lower_state = r.clone();
                }
                None => {
                    cert = Some(Certificate {
                        lower: a.bound,
                        lower_state: r.clone(),
                        upper: f64::INFINITY,
                        upper_state: CMat::zeros(0, 0),
                    })
                }
            }
        }
        let cc = cert.as_mut().expect("set above");
        for (s, a) in &uppers {
            if a.bound < cc.upper {
                cc.upper = a.bound;
                cc.upper_state = s.clone();
            }
        }
        if cc.gap() <= opts.tol {
            break;
        }
    }

    let cc = cert.expect("the last iteration is always a checkpoint");
    let rho_star = DensityMatrix::from_raw(cc.lower_state.clone());
    let sigma_star = DensityMatrix::from_raw(cc.upper_state.clone());
    let value = ea_evaluate(chan, rho_star.matrix(), sigma_star.matrix()).value;
    let gap = cc.gap();
    Ok(SaddleResult {
        value,
        rho_star,
        sigma_star,
        gap,
        lower_bound: cc.lower,
        upper_bound: cc.upper,
        iterations,
        converged: gap <= opts.tol,
    })
}

/// `sum_x p_x S(N_x(sigma))`-type quantities for a CQ table.
struct CqModel<'a> {
    table: &'a CQChannelTable,
}

impl CqModel<'_> {
    fn outputs(&self, sigma: &CMat) -> Vec<CMat> {
        (0..self.table.alphabet_size())
            .map(|x| linalg::hermitize(&self.table.output(x, sigma)))
            .collect()
    }

    fn average(p: &[f64], outs: &[CMat]) -> CMat {
        let mut avg = CMat::zeros(outs[0].nrows(), outs[0].nrows());
        for (px, o) in p.iter().zip(outs) {
            avg += o * c(*px, 0.0);
        }
        avg
    }

    /// Holevo quantity `sum_x p_x D(omega_x || omega_bar)`.
    fn holevo(p: &[f64], outs: &[CMat]) -> f64 {
        let clip = config::get().eig_clip;
        let avg = Self::average(p, outs);
        let mixed: f64 = p.iter().zip(outs).map(|(px, o)| px * linalg::entropy_bits(o, clip)).sum();
        (linalg::entropy_bits(&avg, clip) - mixed).max(0.0)
    }

    /// Blahut-Arimoto iterations on `p` for fixed outputs. Returns the final
    /// `p`, its Holevo quantity and the bound `max_x D(omega_x || omega_bar)`.
    fn blahut_arimoto(outs: &[CMat], init: &[f64], tol: f64, max_iter: usize) -> (Vec<f64>, f64, f64) {
        let mut p = init.to_vec();
        let mut last = (0.0, f64::INFINITY);
        for _ in 0..max_iter.max(1) {
            let avg = Self::average(&p, outs);
            let div: Vec<f64> = outs.iter().map(|o| relative_entropy_op(o, &avg)).collect();
            let chi: f64 = p.iter().zip(&div).map(|(px, d)| if *px > 0.0 { px * d } else { 0.0 }).sum();
            let upper = div.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            last = (chi, upper);
            if upper - chi <= tol || !upper.is_finite() {
                break;
            }
            let top = upper;
            let mut next: Vec<f64> = p.iter().zip(&div).map(|(px, d)| px * (d - top).exp2()).collect();
            let total: f64 = next.iter().sum();
            next.iter_mut().for_each(|v| *v /= total);
            p = next;
        }
        (p, last.0.max(0.0), last.1)
    }

    /// Gradient in `sigma` of the Holevo quantity at fixed `p`.
    fn grad_sigma(&self, p: &[f64], outs: &[CMat]) -> CMat {
        let clip = config::get().eig_clip;
        let log_avg = linalg::log2_support(&Self::average(p, outs), clip);
        let d_e = self.table.d_e();
        let mut g = CMat::zeros(d_e, d_e);
        for (x, (px, o)) in p.iter().zip(outs).enumerate() {
            if *px == 0.0 {
                continue;
            }
            let obs = linalg::log2_support(o, clip) - &log_avg;
            g += self.table.channels()[x].adjoint_op(&obs) * c(*px, 0.0);
        }
        linalg::hermitize(&g)
    }

    /// Certified lower bound on `min_sigma chi(p, sigma)` and the minimizer.
    fn lower(&self, p: &[f64], init_log: CMat, tol: f64, max_iter: usize) -> Ascent {
        mirror_descent(
            init_log,
            |s| {
                let outs = self.outputs(s);
                (Self::holevo(p, &outs), self.grad_sigma(p, &outs))
            },
            tol,
            max_iter,
        )
    }
}

/// `min_sigma max_p I(X:B)` for a classical-quantum jammed channel: inner
/// Blahut-Arimoto, outer mirror descent on the jammer state.
pub fn solve_cq_sr(table: &CQChannelTable, tol: f64, max_iter: usize) -> Result<CQCapacityResult> {
    let opts = SaddleOptions { tol, max_iter, ..SaddleOptions::default() };
    opts.validate()?;
    let model = CqModel { table };
    let (nx, d_e) = (table.alphabet_size(), table.d_e());
    let inner_tol = tol / 8.0;
    let ba_iters = 20_000;
    let mut log_sigma = CMat::zeros(d_e, d_e);
    let mut p = vec![1.0 / nx as f64; nx];
    let mut avg_sigma = Average::new(d_e);
    let mut best_upper = (f64::INFINITY, CMat::zeros(0, 0), p.clone());
    let mut best_lower = (f64::NEG_INFINITY, p.clone());
    let mut iterations = 0;

    for k in 1..=max_iter {
        iterations = k;
        let sigma = linalg::normalized_exp(&log_sigma);
        let outs = model.outputs(&sigma);
        let (p_new, _, upper) = CqModel::blahut_arimoto(&outs, &p, inner_tol, ba_iters);
        p = p_new;
        if upper < best_upper.0 {
            best_upper = (upper, sigma.clone(), p.clone());
        }
        let step = opts.step_scale / (k as f64).sqrt();
        avg_sigma.add(&sigma, step);
        log_sigma -= model.grad_sigma(&p, &outs) * c(step, 0.0);

        if !is_checkpoint(k, max_iter) {
            continue;
        }
        let avg = avg_sigma.get();
        let outs = model.outputs(&avg);
        let (p_avg, _, upper) = CqModel::blahut_arimoto(&outs, &p, inner_tol, ba_iters);
        if upper < best_upper.0 {
            best_upper = (upper, avg, p_avg.clone());
        }
        for cand in [best_upper.2.clone(), p.clone(), p_avg] {
            let res = model.lower(&cand, log_sigma.clone(), inner_tol, opts.inner_max_iter);
            if res.bound > best_lower.0 {
                best_lower = (res.bound, cand.clone());
            }
            // the jammer's response to this p is itself a candidate upper point
            let outs = model.outputs(&res.state);
            let (p_resp, _, upper) = CqModel::blahut_arimoto(&outs, &cand, inner_tol, ba_iters);
            if upper < best_upper.0 {
                best_upper = (upper, res.state.clone(), p_resp);
            }
        }
        if best_upper.0 - best_lower.0 <= tol {
            break;
        }
    }

    let sigma_star = DensityMatrix::from_raw(best_upper.1.clone());
    let p_star = best_upper.2.clone();
    let value = CqModel::holevo(&p_star, &model.outputs(sigma_star.matrix()));
    let gap = best_upper.0 - best_lower.0;
    Ok(CQCapacityResult {
        value,
        p_star,
        sigma_star,
        gap,
        lower_bound: best_lower.0,
        upper_bound: best_upper.0,
        iterations,
        converged: gap <= tol,
    })
}

/// Controls for [`regularized_qq_sr_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QqOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub restarts: usize,
    pub seed: u64,
    pub step_scale: f64,
    /// See-saw rounds per inner solve.
    pub see_saw_rounds: usize,
}

impl Default for QqOptions {
    fn default() -> Self {
        Self { tol: 1e-4, max_iter: 400, restarts: 3, seed: 0, step_scale: 1.0, see_saw_rounds: 60 }
    }
}

/// Inner problem: maximize the Holevo quantity of a pure-state ensemble sent
/// through a fixed channel.
struct EnsembleSolver<'a> {
    chan: &'a QuantumChannel,
    tol: f64,
    rounds: usize,
}

impl EnsembleSolver<'_> {
    fn outputs(&self, states: &[CVec]) -> Vec<CMat> {
        states
            .iter()
            .map(|v| linalg::hermitize(&self.chan.apply_op(&linalg::projector(v))))
            .collect()
    }

    /// Alternates Blahut-Arimoto on the weights with a linearized update of
    /// each signal state; keeps the best ensemble seen.
    fn solve(&self, states: Vec<CVec>, p: Vec<f64>) -> (f64, Vec<f64>, Vec<CVec>) {
        let mut states = states;
        let mut outs = self.outputs(&states);
        let (mut p, mut chi, _) = CqModel::blahut_arimoto(&outs, &p, self.tol / 8.0, 2000);
        for _ in 0..self.rounds {
            let avg = CqModel::average(&p, &outs);
            let log_avg = linalg::log2_floor(&avg, 1e-300);
            let proposal: Vec<CVec> = outs
                .iter()
                .map(|o| {
                    let obs = linalg::hermitize(&(linalg::log2_floor(o, 1e-300) - &log_avg));
                    linalg::top_eigvec(&linalg::hermitize(&self.chan.adjoint_op(&obs))).1
                })
                .collect();
            let new_outs = self.outputs(&proposal);
            let (new_p, new_chi, _) = CqModel::blahut_arimoto(&new_outs, &p, self.tol / 8.0, 2000);
            if new_chi <= chi + 1e-12 {
                break;
            }
            states = proposal;
            outs = new_outs;
            p = new_p;
            chi = new_chi;
        }
        (chi, p, states)
    }
}

/// [`regularized_qq_sr_with`] using default iteration controls.
pub fn regularized_qq_sr(chan: &QuantumChannel, n: usize, tol: f64) -> Result<QqResult> {
    regularized_qq_sr_with(chan, n, &QqOptions { tol, ..QqOptions::default() })
}

/// `(1/n) min_{sigma on E^n} max_{ensemble on A^n} I(X:B^n)` with ensembles of
/// `d_A^{2n}` pure signal states.
pub fn regularized_qq_sr_with(chan: &QuantumChannel, n: usize, opts: &QqOptions) -> Result<QqResult> {
    if !(1..=2).contains(&n) {
        return Err(Error::InvalidArgument(format!("n must be 1 or 2, got {n}")));
    }
    SaddleOptions { tol: opts.tol, max_iter: opts.max_iter, ..SaddleOptions::default() }.validate()?;
    let block = chan.n_fold(n)?;
    let (d_a, d_e) = (block.d_in_a(), block.d_in_e());
    let size = d_a * d_a;
    let mut rng = random::seeded(opts.seed);
    let random_ensemble = |rng: &mut random::SeededRng| -> Vec<CVec> {
        (0..size).map(|_| random::haar_vector(d_a, rng)).collect()
    };
    let restart_seeds: Vec<u64> = (0..opts.restarts.max(1)).map(|_| rng.random()).collect();

    let inner = |sigma: &CMat, warm: Option<&(Vec<f64>, Vec<CVec>)>| -> (f64, Vec<f64>, Vec<CVec>) {
        let fixed = QuantumChannel::from_choi_unchecked(d_a, 1, block.d_out(), linalg::hermitize(&block.fix_jammer_op(sigma)));
        let solver = EnsembleSolver { chan: &fixed, tol: opts.tol, rounds: opts.see_saw_rounds };
        let uniform = vec![1.0 / size as f64; size];
        let mut starts: Vec<(Vec<f64>, Vec<CVec>)> = restart_seeds
            .iter()
            .map(|&s| (uniform.clone(), random_ensemble(&mut random::seeded(s))))
            .collect();
        if let Some(w) = warm {
            starts.push(w.clone());
        }
        starts
            .into_par_iter()
            .map(|(p, st)| solver.solve(st, p))
            .collect::<Vec<_>>()
            .into_iter()
            .fold((f64::NEG_INFINITY, Vec::new(), Vec::new()), |best, cand| if cand.0 > best.0 { cand } else { best })
    };

    // Holevo quantity of a fixed input ensemble as a function of sigma.
    let fixed_ensemble = |p: &[f64], states: &[CVec], sigma: &CMat| -> (f64, CMat) {
        let inputs: Vec<CMat> = states.iter().map(linalg::projector).collect();
        let outs: Vec<CMat> = inputs
            .iter()
            .map(|r| linalg::hermitize(&block.apply_op(&linalg::kron(r, sigma))))
            .collect();
        let clip = config::get().eig_clip;
        let chi = CqModel::holevo(p, &outs);
        let log_avg = linalg::log2_support(&CqModel::average(p, &outs), clip);
        let mut g = CMat::zeros(d_e, d_e);
        for ((px, r), o) in p.iter().zip(&inputs).zip(&outs) {
            if *px > 0.0 {
                let obs = linalg::log2_support(o, clip) - &log_avg;
                g += block.jammer_adjoint(r, &obs) * c(*px, 0.0);
            }
        }
        (chi, linalg::hermitize(&g))
    };

    let mut log_sigma = CMat::zeros(d_e, d_e);
    let mut warm: Option<(Vec<f64>, Vec<CVec>)> = None;
    let mut best_upper = (f64::INFINITY, CMat::zeros(0, 0), Vec::new(), Vec::new());
    let mut best_lower = f64::NEG_INFINITY;
    let mut iterations = 0;
    for k in 1..=opts.max_iter {
        iterations = k;
        let sigma = linalg::normalized_exp(&log_sigma);
        let (chi, p, states) = inner(&sigma, warm.as_ref());
        if chi < best_upper.0 {
            best_upper = (chi, sigma.clone(), p.clone(), states.clone());
        }
        let (_, grad) = fixed_ensemble(&p, &states, &sigma);
        let step = opts.step_scale / (k as f64).sqrt();
        log_sigma -= grad * c(step, 0.0);
        warm = Some((p, states));

        if !is_checkpoint(k, opts.max_iter) {
            continue;
        }
        let (_, _, p_best, states_best) = &best_upper;
        let res = mirror_descent(
            log_for_warm_start(&best_upper.1),
            |s| fixed_ensemble(p_best, states_best, s),
            opts.tol / 8.0,
            3000,
        );
        best_lower = best_lower.max(res.bound);
        let (chi, p, states) = inner(&res.state, warm.as_ref());
        if chi < best_upper.0 {
            best_upper = (chi, res.state.clone(), p, states);
        }
        if best_upper.0 - best_lower <= opts.tol {
            break;
        }
    }

    let (upper, sigma, p, states) = best_upper;
    let nf = n as f64;
    let gap = (upper - best_lower) / nf;
    Ok(QqResult {
        n,
        value: upper / nf,
        lower_bound: best_lower / nf,
        gap,
        sigma_star: DensityMatrix::from_raw(sigma),
        ensemble: Ensemble {
            probabilities: p,
            states: states.into_iter().map(PureState::from_raw).collect(),
        },
        iterations,
        converged: gap * nf <= opts.tol,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channels::fixtures;
    use crate::entropy::{binary_entropy, mutual_information};
    use crate::qstate::{canonical_purification, SystemShape};

    /// Payoff through the explicit purification and the generic mutual information.
    fn payoff_oracle(chan: &QuantumChannel, rho: &DensityMatrix, sigma: &DensityMatrix) -> f64 {
        let psi = canonical_purification(rho).density();
        let fixed = chan.fix_jammer(sigma).unwrap();
        let joint = DensityMatrix::from_raw(fixed.apply_on_second(psi.matrix(), rho.dim()));
        mutual_information(&joint, &SystemShape::bipartite(rho.dim(), chan.d_out()).unwrap()).unwrap()
    }

    fn random_state(d: usize, rng: &mut random::SeededRng) -> DensityMatrix {
        DensityMatrix::new(random::ginibre_state(d, d, rng)).unwrap()
    }

    #[test]
    fn payoff_examples() {
        let half = DensityMatrix::maximally_mixed(2);
        let id = fixtures::identity_on_a(2, 1);
        assert!((payoff_ea(&id, &half, &DensityMatrix::basis(1, 0)).unwrap() - 2.0).abs() < 1e-12);
        let swap = fixtures::jammer_swap(2);
        let mut rng = random::seeded(1);
        let v = payoff_ea(&swap, &random_state(2, &mut rng), &random_state(2, &mut rng)).unwrap();
        assert!(v.abs() < 1e-12);
        let ctrl = fixtures::controlled_identity_dephasing();
        assert!((payoff_ea(&ctrl, &half, &DensityMatrix::basis(2, 1)).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn payoff_matches_purification_oracle() {
        let mut rng = random::seeded(2);
        for _ in 0..10 {
            let kraus = random::kraus_set(2, 4, 2, &mut rng);
            let chan = QuantumChannel::from_kraus(2, 2, &kraus).unwrap();
            let rho = random_state(2, &mut rng);
            let sigma = random_state(2, &mut rng);
            let a = payoff_ea(&chan, &rho, &sigma).unwrap();
            assert!((a - payoff_oracle(&chan, &rho, &sigma)).abs() < 1e-10);
        }
    }

    #[test]
    fn payoff_rejects_bad_dims() {
        let chan = fixtures::controlled_identity_dephasing();
        let r = DensityMatrix::maximally_mixed(3);
        let s = DensityMatrix::maximally_mixed(2);
        assert!(matches!(payoff_ea(&chan, &r, &s), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(payoff_ea(&chan, &s, &r), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn concave_convex_spot_checks() {
        let mut rng = random::seeded(3);
        for _ in 0..10 {
            let kraus = random::kraus_set(2, 4, 3, &mut rng);
            let chan = QuantumChannel::from_kraus(2, 2, &kraus).unwrap();
            let (r1, r2) = (random_state(2, &mut rng), random_state(2, &mut rng));
            let (s1, s2) = (random_state(2, &mut rng), random_state(2, &mut rng));
            let f = |r: &DensityMatrix, s: &DensityMatrix| payoff_ea(&chan, r, s).unwrap();
            let rm = r1.mix(&r2, 0.3).unwrap();
            assert!(f(&rm, &s1) >= 0.3 * f(&r1, &s1) + 0.7 * f(&r2, &s1) - 1e-9);
            let sm = s1.mix(&s2, 0.6).unwrap();
            assert!(f(&r1, &sm) <= 0.6 * f(&r1, &s1) + 0.4 * f(&r1, &s2) + 1e-9);
        }
    }

    #[test]
    fn mirror_ascent_certifies_entropy_maximum() {
        let res = mirror_ascent(
            linalg::diag(&[0.0, -3.0, 1.0]),
            |x| {
                let (s, g) = entropy_with_gradient(x);
                (s, g)
            },
            1e-10,
            1000,
        );
        assert!((res.value - 3f64.log2()).abs() < 1e-9);
        assert!(res.bound >= 3f64.log2() - 1e-12);
    }

    #[test]
    fn ea_saddle_identity_and_swap() {
        let res = solve_ea_saddle(&fixtures::identity_on_a(2, 2), 1e-4, 5000).unwrap();
        assert!(res.converged, "{res:?}");
        assert!((res.value - 2.0).abs() < 1e-4);
        let res = solve_ea_saddle(&fixtures::jammer_swap(2), 1e-4, 5000).unwrap();
        assert!(res.converged && res.value.abs() < 1e-4, "{res:?}");
    }

    #[test]
    fn ea_saddle_consistency() {
        let res = solve_ea_saddle(&fixtures::controlled_identity_dephasing(), 1e-4, 5000).unwrap();
        assert!(res.converged, "{res:?}");
        assert!(res.gap >= -1e-8);
        assert!(res.value >= res.lower_bound - 1e-9 && res.value <= res.upper_bound + 1e-9);
        assert!((res.value - 1.0).abs() < 1e-3);
    }

    #[test]
    fn cq_examples() {
        let noiseless = fixtures::noiseless_bit(2).to_cq();
        let res = solve_cq_sr(&noiseless, 1e-4, 2000).unwrap();
        assert!(res.converged && (res.value - 1.0).abs() < 1e-3, "{res:?}");

        let single = crate::channels::ClassicalTable::from_fn(1, 2, 2, |_, e| if e == 0 { vec![0.9, 0.1] } else { vec![0.2, 0.8] })
            .unwrap()
            .to_cq();
        let res = solve_cq_sr(&single, 1e-4, 2000).unwrap();
        assert!(res.value.abs() < 1e-9 && res.converged);

        let bsc = fixtures::jammer_selected_bsc(&[0.05, 0.25]).to_cq();
        let res = solve_cq_sr(&bsc, 1e-4, 5000).unwrap();
        assert!((res.value - (1.0 - binary_entropy(0.25))).abs() < 1e-3, "{res:?}");
        assert!((res.p_star.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn qq_identity_qubit() {
        let res = regularized_qq_sr(&fixtures::identity_on_a(2, 1), 1, 1e-4).unwrap();
        assert!((res.value - 1.0).abs() < 1e-3, "{res:?}");
    }
}
