//! Entropies and divergences in bits: von Neumann entropy, relative entropy,
//! mutual and coherent information, `D_max`, and the hypothesis-testing
//! divergence `D_h^eps`.
//!
//! `D_h^eps(rho || sigma) = -log2 min { tr(M sigma) : 0 <= M <= I, tr(M rho) >= 1 - eps }`
//! is solved with the quantum Neyman-Pearson construction. For a threshold
//! `t > 0` the projector onto the positive part of `rho - t sigma` is an optimal
//! test for its own type-I error `g(t) = tr(P_t rho)`, and `g` is nonincreasing
//! in `t`. Bisection brackets the crossing `g(t) = 1 - eps`; the returned test
//! mixes the two bracketing projectors so that `tr(M rho) = 1 - eps` exactly.

use serde::Serialize;

use crate::config;
use crate::error::{Error, Result};
use crate::json::{self, ExtendedReal};
use crate::linalg::{self, c, CMat};
use crate::qstate::{normalize_keep, DensityMatrix, SystemShape};

/// Value of a divergence together with its optimizer and solver trace.
#[derive(Debug, Clone, Serialize)]
pub struct DivergenceResult {
    pub value: ExtendedReal,
    /// Optimal test operator, when the divergence has one.
    #[serde(serialize_with = "json::serialize_opt_matrix")]
    pub test: Option<CMat>,
    /// Neyman-Pearson threshold `t*` (absent when the value is infinite).
    pub threshold: Option<f64>,
    /// Bisection steps taken.
    pub iterations: usize,
    /// `tr(M rho)` of the returned test.
    pub type_one_success: Option<f64>,
}

/// `h(p) = -p log2 p - (1-p) log2 (1-p)`.
pub fn binary_entropy(p: f64) -> f64 {
    let term = |x: f64| if x > 0.0 { -x * x.log2() } else { 0.0 };
    term(p) + term(1.0 - p)
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    linalg::entropy_bits(rho.matrix(), config::get().eig_clip).max(0.0)
}

fn check_same_dim(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<()> {
    if rho.dim() != sigma.dim() {
        return Err(Error::DimensionMismatch { expected: rho.dim(), got: sigma.dim() });
    }
    Ok(())
}

/// Eigen-decomposition of `sigma` split into support and kernel projectors.
struct SupportSplit {
    values: Vec<f64>,
    vectors: CMat,
    threshold: f64,
}

impl SupportSplit {
    fn new(sigma: &CMat) -> Self {
        let (values, vectors) = linalg::eigh(sigma);
        let top = values.last().copied().unwrap_or(0.0).max(0.0);
        Self { values, vectors, threshold: config::get().support_rel * top }
    }

    fn kernel_projector(&self) -> CMat {
        let mask: Vec<f64> = self.values.iter().map(|&v| if v <= self.threshold { 1.0 } else { 0.0 }).collect();
        linalg::from_eigen(&mask, &self.vectors)
    }

    fn map_support<F: Fn(f64) -> f64>(&self, f: F) -> CMat {
        let mapped: Vec<f64> = self
            .values
            .iter()
            .map(|&v| if v > self.threshold { f(v) } else { 0.0 })
            .collect();
        linalg::from_eigen(&mapped, &self.vectors)
    }
}

/// Weight of `rho` outside the support of `sigma`.
fn mass_off_support(rho: &CMat, split: &SupportSplit) -> f64 {
    linalg::real_pairing(&split.kernel_projector(), rho)
}

/// `tr rho (log2 rho - log2 sigma)`, `+inf` when `supp rho` is not inside `supp sigma`.
pub fn relative_entropy(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho, sigma)?;
    Ok(relative_entropy_op(rho.matrix(), sigma.matrix()))
}

pub(crate) fn relative_entropy_op(rho: &CMat, sigma: &CMat) -> f64 {
    let cfg = config::get();
    let split = SupportSplit::new(sigma);
    if mass_off_support(rho, &split) > cfg.support_mass {
        return f64::INFINITY;
    }
    let neg_entropy = -linalg::entropy_bits(rho, cfg.eig_clip);
    let cross = linalg::real_pairing(rho, &split.map_support(f64::log2));
    neg_entropy - cross
}

fn bipartite(rho: &DensityMatrix, shape: &SystemShape) -> Result<(DensityMatrix, DensityMatrix)> {
    if shape.factors().len() != 2 {
        return Err(Error::InvalidShape(format!(
            "expected a bipartite shape, got {} factors",
            shape.factors().len()
        )));
    }
    shape.check(rho.dim())?;
    let a = crate::qstate::partial_trace(rho, shape, &normalize_keep(shape, &[0])?)?;
    let b = crate::qstate::partial_trace(rho, shape, &normalize_keep(shape, &[1])?)?;
    Ok((a, b))
}

/// `S(A) + S(B) - S(AB)`.
pub fn mutual_information(rho_ab: &DensityMatrix, shape: &SystemShape) -> Result<f64> {
    let (a, b) = bipartite(rho_ab, shape)?;
    Ok(von_neumann_entropy(&a) + von_neumann_entropy(&b) - von_neumann_entropy(rho_ab))
}

/// `S(B) - S(AB)`.
pub fn coherent_information(rho_ab: &DensityMatrix, shape: &SystemShape) -> Result<f64> {
    let (_, b) = bipartite(rho_ab, shape)?;
    Ok(von_neumann_entropy(&b) - von_neumann_entropy(rho_ab))
}

/// `log2 lambda_max(sigma^{-1/2} rho sigma^{-1/2})`, `+inf` off support.
pub fn dmax(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_same_dim(rho, sigma)?;
    let split = SupportSplit::new(sigma.matrix());
    if mass_off_support(rho.matrix(), &split) > config::get().support_mass {
        return Ok(f64::INFINITY);
    }
    let inv = split.map_support(|v| 1.0 / v.sqrt());
    let top = *linalg::eigvalsh(&(&inv * rho.matrix() * &inv)).last().expect("non-empty");
    Ok(top.log2())
}

/// Bisection state of the Neyman-Pearson threshold search.
struct NpProbe {
    t: f64,
    projector: CMat,
    rho_mass: f64,
}

fn np_probe(rho: &CMat, sigma: &CMat, t: f64) -> NpProbe {
    let diff = rho - sigma * c(t, 0.0);
    let projector = linalg::positive_projector(&diff, 0.0);
    let rho_mass = linalg::real_pairing(&projector, rho);
    NpProbe { t, projector, rho_mass }
}

/// Hypothesis-testing divergence with its optimal test.
pub fn dh(rho: &DensityMatrix, sigma: &DensityMatrix, eps: f64) -> Result<DivergenceResult> {
    check_same_dim(rho, sigma)?;
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::InvalidEpsilon(eps));
    }
    let (r, s) = (rho.matrix(), sigma.matrix());
    let target = 1.0 - eps;

    let split = SupportSplit::new(s);
    let kernel = split.kernel_projector();
    let off = linalg::real_pairing(&kernel, r);
    if off >= target {
        let test = kernel * c(target / off, 0.0);
        return Ok(DivergenceResult {
            value: ExtendedReal(f64::INFINITY),
            test: Some(test),
            threshold: None,
            iterations: 0,
            type_one_success: Some(target),
        });
    }

    // g(lo) >= target > g(hi)
    let mut lo = np_probe(r, s, 1.0);
    let mut hi = np_probe(r, s, 1.0);
    let mut iterations = 0;
    while lo.rho_mass < target {
        lo = np_probe(r, s, lo.t / 2.0);
        iterations += 1;
        if lo.t < 1e-300 {
            return Err(Error::InvalidArgument("Neyman-Pearson bracket failed at small threshold".into()));
        }
    }
    while hi.rho_mass >= target {
        hi = np_probe(r, s, hi.t * 2.0);
        iterations += 1;
        if hi.t > 1e300 {
            return Err(Error::InvalidArgument("Neyman-Pearson bracket failed at large threshold".into()));
        }
    }
    while hi.t / lo.t - 1.0 > 1e-15 && iterations < 4000 {
        let mid = (lo.t * hi.t).sqrt();
        if mid <= lo.t || mid >= hi.t {
            break;
        }
        let probe = np_probe(r, s, mid);
        iterations += 1;
        if probe.rho_mass >= target {
            lo = probe;
        } else {
            hi = probe;
        }
    }

    let spread = lo.rho_mass - hi.rho_mass;
    let w = if spread > 0.0 { ((target - hi.rho_mass) / spread).clamp(0.0, 1.0) } else { 1.0 };
    let test = linalg::hermitize(&(&hi.projector * c(1.0 - w, 0.0) + &lo.projector * c(w, 0.0)));
    let type_two = linalg::real_pairing(&test, s).max(0.0);
    let value = if type_two > 0.0 { -type_two.log2() } else { f64::INFINITY };
    Ok(DivergenceResult {
        value: ExtendedReal(value),
        type_one_success: Some(linalg::real_pairing(&test, r)),
        test: Some(test),
        threshold: Some((lo.t * hi.t).sqrt()),
        iterations,
    })
}
