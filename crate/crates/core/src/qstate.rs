//! Finite-dimensional state algebra: density matrices, composite system
//! shapes, partial traces and purifications.
//!
//! Composite indices are row-major in the order the factors are listed in a
//! [`SystemShape`]. The canonical purification of `rho` is
//! `(sqrt(rho) (x) I) sum_k |k>|k>`; its first marginal is `rho` and its second
//! marginal is the transpose `rho^T`.

use serde::{Deserialize, Serialize};

use crate::config;
use crate::error::{Error, Result};
use crate::json::{self, ComplexPair, MatrixJson};
use crate::linalg::{self, c, CMat, CVec};

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
    label: Option<String>,
}

impl DensityMatrix {
    /// Validates `mat` against the configured tolerances.
    pub fn new(mat: CMat) -> Result<Self> {
        Self::validate(&mat)?;
        Ok(Self { mat, label: None })
    }

    pub fn validate(mat: &CMat) -> Result<()> {
        let cfg = config::get();
        if mat.nrows() != mat.ncols() || mat.nrows() == 0 {
            return Err(Error::InvalidShape(format!(
                "density matrix must be square and non-empty, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        check_dim(mat.nrows())?;
        let dev = linalg::hermitian_deviation(mat);
        if dev > cfg.hermitian_tol {
            return Err(Error::NotHermitian(dev));
        }
        let tr = linalg::trace(mat);
        if (tr.re - 1.0).abs() > cfg.trace_tol || tr.im.abs() > cfg.trace_tol {
            return Err(Error::InvalidTrace(tr.re));
        }
        let min = linalg::eigvalsh(mat)[0];
        if min < -cfg.psd_tol {
            return Err(Error::NotPsd(min));
        }
        Ok(())
    }

    /// Wraps a matrix produced by an internal algorithm. The Hermitian part is
    /// kept and the trace renormalized; positivity is the caller's promise.
    pub(crate) fn from_raw(mat: CMat) -> Self {
        let h = linalg::hermitize(&mat);
        let t = linalg::trace(&h).re;
        Self { mat: h / c(t, 0.0), label: None }
    }

    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        Self::new(linalg::diag(probs))
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self { mat: linalg::identity(d) / c(d as f64, 0.0), label: None }
    }

    /// Computational basis state `|k><k|`.
    pub fn basis(d: usize, k: usize) -> Self {
        let mut m = linalg::zeros(d);
        m[(k, k)] = c(1.0, 0.0);
        Self { mat: m, label: None }
    }

    pub fn from_pure(psi: &PureState) -> Self {
        Self { mat: linalg::projector(&psi.amps), label: None }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = Some(label.into());
        self
    }

    pub fn label(&self) -> Option<&str> {
        self.label.as_deref()
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        linalg::eigvalsh(&self.mat)
    }

    /// `w * self + (1 - w) * other`.
    pub fn mix(&self, other: &DensityMatrix, w: f64) -> Result<DensityMatrix> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), got: other.dim() });
        }
        if !(0.0..=1.0).contains(&w) {
            return Err(Error::InvalidArgument(format!("mixing weight {w} outside [0,1]")));
        }
        Ok(Self::from_raw(&self.mat * c(w, 0.0) + &other.mat * c(1.0 - w, 0.0)))
    }

    pub fn transpose(&self) -> DensityMatrix {
        Self { mat: self.mat.transpose(), label: self.label.clone() }
    }
}

pub(crate) fn check_dim(dim: usize) -> Result<()> {
    let cap = config::get().max_total_dim;
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    Ok(())
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DensityJson {
    dim: usize,
    entries: MatrixJson,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<String>,
}

impl Serialize for DensityMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DensityJson {
            dim: self.dim(),
            entries: json::matrix_to_json(&self.mat),
            label: self.label.clone(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for DensityMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = DensityJson::deserialize(d)?;
        let mat = json::matrix_from_json(&raw.entries).map_err(D::Error::custom)?;
        if mat.nrows() != raw.dim {
            return Err(D::Error::custom(format!(
                "dim {} does not match {} entry rows",
                raw.dim,
                mat.nrows()
            )));
        }
        let mut rho = DensityMatrix::new(mat).map_err(D::Error::custom)?;
        rho.label = raw.label;
        Ok(rho)
    }
}

/// Local dimensions of a composite system, first factor most significant.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SystemShape {
    factors: Vec<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    names: Option<Vec<String>>,
}

impl SystemShape {
    pub fn new(factors: Vec<usize>) -> Result<Self> {
        if factors.is_empty() || factors.contains(&0) {
            return Err(Error::InvalidShape(format!("factors must be positive, got {factors:?}")));
        }
        Ok(Self { factors, names: None })
    }

    pub fn bipartite(d_a: usize, d_b: usize) -> Result<Self> {
        Self::new(vec![d_a, d_b])
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.factors.len() {
            return Err(Error::InvalidShape("one name per factor required".into()));
        }
        self.names = Some(names);
        Ok(self)
    }

    pub fn factors(&self) -> &[usize] {
        &self.factors
    }

    pub fn names(&self) -> Option<&[String]> {
        self.names.as_deref()
    }

    pub fn total(&self) -> usize {
        self.factors.iter().product()
    }

    pub fn check(&self, dim: usize) -> Result<()> {
        if self.total() != dim {
            return Err(Error::InvalidShape(format!(
                "factors {:?} multiply to {} but the matrix has dimension {}",
                self.factors,
                self.total(),
                dim
            )));
        }
        Ok(())
    }

    /// Shape of the tensor product `self (x) other`.
    pub fn compose(&self, other: &SystemShape) -> SystemShape {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        let names = match (&self.names, &other.names) {
            (Some(a), Some(b)) => Some(a.iter().chain(b).cloned().collect()),
            _ => None,
        };
        SystemShape { factors, names }
    }
}

/// Unit vector in `C^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    amps: CVec,
}

impl PureState {
    pub fn new(amps: CVec) -> Result<Self> {
        let n2 = amps.norm_squared();
        if (n2 - 1.0).abs() > config::get().unit_norm_tol {
            return Err(Error::NotNormalized(n2));
        }
        check_dim(amps.len())?;
        Ok(Self { amps })
    }

    pub(crate) fn from_raw(amps: CVec) -> Self {
        let n = amps.norm();
        Self { amps: amps / c(n, 0.0) }
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amps
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix::from_pure(self)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PureJson {
    dim: usize,
    amplitudes: Vec<ComplexPair>,
}

impl Serialize for PureState {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        PureJson { dim: self.dim(), amplitudes: json::vector_to_json(&self.amps) }.serialize(s)
    }
}

impl<'de> Deserialize<'de> for PureState {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error as _;
        let raw = PureJson::deserialize(d)?;
        if raw.amplitudes.len() != raw.dim {
            return Err(D::Error::custom("dim does not match amplitude count"));
        }
        PureState::new(json::vector_from_json(&raw.amplitudes)).map_err(D::Error::custom)
    }
}

/// Kronecker product of two states.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    check_dim(a.dim() * b.dim())?;
    Ok(DensityMatrix { mat: linalg::kron(&a.mat, &b.mat), label: None })
}

/// Reduced state on the factors listed in `keep`.
pub fn partial_trace(rho: &DensityMatrix, shape: &SystemShape, keep: &[usize]) -> Result<DensityMatrix> {
    shape.check(rho.dim())?;
    let keep = normalize_keep(shape, keep)?;
    let reduced = linalg::partial_trace_op(&rho.mat, shape.factors(), &keep);
    Ok(DensityMatrix { mat: linalg::hermitize(&reduced), label: None })
}

pub(crate) fn normalize_keep(shape: &SystemShape, keep: &[usize]) -> Result<Vec<usize>> {
    if keep.is_empty() {
        return Err(Error::InvalidShape("keep set is empty".into()));
    }
    let mut keep = keep.to_vec();
    keep.sort_unstable();
    keep.dedup();
    if let Some(&bad) = keep.iter().find(|&&k| k >= shape.factors().len()) {
        return Err(Error::InvalidShape(format!(
            "factor index {bad} out of range for {} factors",
            shape.factors().len()
        )));
    }
    Ok(keep)
}

/// `|rho> = (sqrt(rho) (x) I) sum_k |k>|k>` on `d^2` amplitudes.
pub fn canonical_purification(rho: &DensityMatrix) -> PureState {
    let d = rho.dim();
    let root = linalg::sqrt_psd(&rho.mat, config::get().eig_clip);
    let amps = CVec::from_fn(d * d, |idx, _| root[(idx / d, idx % d)]);
    PureState::from_raw(amps)
}

/// `(1/sqrt(d)) sum_i |i>|i>`.
pub fn maximally_entangled(d: usize) -> PureState {
    let amp = c(1.0 / (d as f64).sqrt(), 0.0);
    let amps = CVec::from_fn(d * d, |idx, _| if idx / d == idx % d { amp } else { c(0.0, 0.0) });
    PureState { amps }
}
