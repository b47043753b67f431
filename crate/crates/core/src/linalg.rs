//! Dense complex matrix helpers built on `nalgebra`.
//!
//! Composite systems use row-major indexing: for factors `d_0, d_1, ...` the
//! first factor is the most significant digit, which matches the Kronecker
//! product `kron(a, b)`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;

pub type C64 = Complex64;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

pub const LN2: f64 = std::f64::consts::LN_2;

#[inline]
pub fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn zeros(n: usize) -> CMat {
    CMat::zeros(n, n)
}

pub fn identity(n: usize) -> CMat {
    CMat::identity(n, n)
}

pub fn diag(values: &[f64]) -> CMat {
    let n = values.len();
    CMat::from_fn(n, n, |i, j| if i == j { c(values[i], 0.0) } else { c(0.0, 0.0) })
}

pub fn dagger(m: &CMat) -> CMat {
    m.adjoint()
}

pub fn trace(m: &CMat) -> C64 {
    m.diagonal().iter().sum()
}

/// `tr(a b)` without forming the product.
pub fn trace_product(a: &CMat, b: &CMat) -> C64 {
    let n = a.nrows();
    let mut acc = c(0.0, 0.0);
    for i in 0..n {
        for k in 0..a.ncols() {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

/// `Re tr(a b)`; the natural pairing for Hermitian arguments.
pub fn real_pairing(a: &CMat, b: &CMat) -> f64 {
    trace_product(a, b).re
}

pub fn hermitize(m: &CMat) -> CMat {
    (m + m.adjoint()) * c(0.5, 0.0)
}

pub fn hermitian_deviation(m: &CMat) -> f64 {
    let mut dev = 0.0f64;
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            dev = dev.max((m[(i, j)] - m[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn max_abs(m: &CMat) -> f64 {
    m.iter().fold(0.0f64, |acc, z| acc.max(z.norm()))
}

pub fn kron(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

pub fn kron_vec(a: &CVec, b: &CVec) -> CVec {
    a.kronecker(b)
}

/// Eigen-decomposition of the Hermitian part of `m`, eigenvalues ascending.
pub fn eigh(m: &CMat) -> (Vec<f64>, CMat) {
    let n = m.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    let eig = SymmetricEigen::new(hermitize(m));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMat::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
    (values, vectors)
}

pub fn eigvalsh(m: &CMat) -> Vec<f64> {
    eigh(m).0
}

/// Rebuilds `V diag(values) V^†`.
pub fn from_eigen(values: &[f64], vectors: &CMat) -> CMat {
    let n = values.len();
    let mut scaled = vectors.clone();
    for j in 0..n {
        let s = c(values[j], 0.0);
        for i in 0..n {
            scaled[(i, j)] *= s;
        }
    }
    &scaled * vectors.adjoint()
}

/// Applies a real function to the spectrum of a Hermitian matrix.
pub fn mat_fn<F: Fn(f64) -> f64>(m: &CMat, f: F) -> CMat {
    let (values, vectors) = eigh(m);
    let mapped: Vec<f64> = values.into_iter().map(f).collect();
    from_eigen(&mapped, &vectors)
}

/// Square root of a PSD matrix, eigenvalues below `clip` set to zero.
pub fn sqrt_psd(m: &CMat, clip: f64) -> CMat {
    mat_fn(m, |x| if x > clip { x.sqrt() } else { 0.0 })
}

/// Base-2 logarithm on the support (eigenvalues `<= clip` map to zero).
pub fn log2_support(m: &CMat, clip: f64) -> CMat {
    mat_fn(m, |x| if x > clip { x.log2() } else { 0.0 })
}

/// Base-2 logarithm with the spectrum floored at `floor`.
pub fn log2_floor(m: &CMat, floor: f64) -> CMat {
    mat_fn(m, |x| x.max(floor).log2())
}

/// Inverse square root on the support.
pub fn inv_sqrt_support(m: &CMat, clip: f64) -> CMat {
    mat_fn(m, |x| if x > clip { 1.0 / x.sqrt() } else { 0.0 })
}

/// `exp(h) / tr exp(h)` for Hermitian `h`, computed with a shifted spectrum.
pub fn normalized_exp(h: &CMat) -> CMat {
    let (values, vectors) = eigh(h);
    let top = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = values.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();
    hermitize(&from_eigen(&weights, &vectors))
}

/// Largest eigenvalue and a unit eigenvector.
pub fn top_eigvec(m: &CMat) -> (f64, CVec) {
    let (values, vectors) = eigh(m);
    let k = values.len() - 1;
    (values[k], vectors.column(k).into_owned())
}

pub fn projector(v: &CVec) -> CMat {
    v * v.adjoint()
}

/// Positive part projector: eigenvalues strictly above `threshold`.
pub fn positive_projector(m: &CMat, threshold: f64) -> CMat {
    mat_fn(m, |x| if x > threshold { 1.0 } else { 0.0 })
}

/// Base-2 von Neumann entropy `-tr X log X` of a positive matrix (not
/// necessarily normalized), using `0 log 0 = 0`.
pub fn entropy_bits(m: &CMat, clip: f64) -> f64 {
    eigvalsh(m)
        .into_iter()
        .filter(|&x| x > clip)
        .map(|x| -x * x.log2())
        .sum()
}

/// Splits a flat index into digits for the given factor dimensions.
pub fn digits(mut index: usize, dims: &[usize]) -> Vec<usize> {
    let mut out = vec![0; dims.len()];
    for k in (0..dims.len()).rev() {
        out[k] = index % dims[k];
        index /= dims[k];
    }
    out
}

pub fn compose_index(digits: &[usize], dims: &[usize]) -> usize {
    digits.iter().zip(dims).fold(0, |acc, (d, n)| acc * n + d)
}

/// Partial trace over every factor not listed in `keep` (indices sorted).
pub fn partial_trace_op(m: &CMat, dims: &[usize], keep: &[usize]) -> CMat {
    let total: usize = dims.iter().product();
    debug_assert_eq!(m.nrows(), total);
    let kept_dims: Vec<usize> = keep.iter().map(|&k| dims[k]).collect();
    let traced: Vec<usize> = (0..dims.len()).filter(|k| !keep.contains(k)).collect();
    let traced_dims: Vec<usize> = traced.iter().map(|&k| dims[k]).collect();
    let dk: usize = kept_dims.iter().product();
    let dt: usize = traced_dims.iter().product();

    // full[k][t] = flat index of the (kept, traced) digit pair
    let mut full = vec![0usize; dk * dt];
    for flat in 0..total {
        let d = digits(flat, dims);
        let kd: Vec<usize> = keep.iter().map(|&k| d[k]).collect();
        let td: Vec<usize> = traced.iter().map(|&k| d[k]).collect();
        full[compose_index(&kd, &kept_dims) * dt + compose_index(&td, &traced_dims)] = flat;
    }
    let mut out = CMat::zeros(dk, dk);
    for r in 0..dk {
        for col in 0..dk {
            let mut acc = c(0.0, 0.0);
            for t in 0..dt {
                acc += m[(full[r * dt + t], full[col * dt + t])];
            }
            out[(r, col)] = acc;
        }
    }
    out
}

/// Reorders tensor factors: output factor `k` is input factor `perm[k]`.
pub fn permute_factors(m: &CMat, dims: &[usize], perm: &[usize]) -> CMat {
    let total: usize = dims.iter().product();
    let new_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let map: Vec<usize> = (0..total)
        .map(|flat| {
            let d = digits(flat, dims);
            let nd: Vec<usize> = perm.iter().map(|&p| d[p]).collect();
            compose_index(&nd, &new_dims)
        })
        .collect();
    let mut out = CMat::zeros(total, total);
    for i in 0..total {
        for j in 0..total {
            out[(map[i], map[j])] = m[(i, j)];
        }
    }
    out
}
