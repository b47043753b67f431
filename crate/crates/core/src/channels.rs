//! Jammed channels `N: A (x) E -> B` stored as Choi matrices.
//!
//! The Choi matrix is unnormalized with factor order `(A, E, B)`:
//! `J[(i, b), (j, b')] = N(|i><j|)[b, b']` where the input index is
//! `i = a * d_E + e`. Trace preservation reads `tr_B J = I`.

use serde::{Deserialize, Serialize};

use crate::config;
use crate::error::{Error, Result};
use crate::json::{self, MatrixJson};
use crate::linalg::{self, c, CMat, C64};
use crate::qstate::{check_dim, DensityMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct QuantumChannel {
    d_a: usize,
    d_e: usize,
    d_b: usize,
    choi: CMat,
}

fn check_channel_dims(d_a: usize, d_e: usize, d_b: usize) -> Result<()> {
    if d_a == 0 || d_e == 0 || d_b == 0 {
        return Err(Error::InvalidShape(format!("channel dims must be positive, got A={d_a} E={d_e} B={d_b}")));
    }
    check_dim(d_a * d_e)?;
    check_dim(d_b)?;
    let choi_dim = d_a * d_e * d_b;
    let cap = config::get().max_choi_dim;
    if choi_dim > cap {
        return Err(Error::DimensionCap { dim: choi_dim, cap });
    }
    Ok(())
}

impl QuantumChannel {
    /// Validates a Choi matrix (Hermitian, PSD, trace preserving).
    pub fn from_choi(d_a: usize, d_e: usize, d_b: usize, choi: CMat) -> Result<Self> {
        check_channel_dims(d_a, d_e, d_b)?;
        let n = d_a * d_e * d_b;
        if choi.nrows() != n || choi.ncols() != n {
            return Err(Error::DimensionMismatch { expected: n, got: choi.nrows() });
        }
        let tol = config::get().cptp_tol;
        let herm = linalg::hermitian_deviation(&choi);
        if herm > tol {
            return Err(Error::NotCptp { what: "Choi matrix not Hermitian", deviation: herm });
        }
        let min = linalg::eigvalsh(&choi)[0];
        if min < -tol {
            return Err(Error::NotCptp { what: "Choi matrix not positive", deviation: -min });
        }
        let chan = Self { d_a, d_e, d_b, choi: linalg::hermitize(&choi) };
        let dev = chan.tp_deviation();
        if dev > tol {
            return Err(Error::NotCptp { what: "not trace preserving", deviation: dev });
        }
        Ok(chan)
    }

    /// Builds the Choi matrix from Kraus operators `d_B x (d_A d_E)`.
    pub fn from_kraus(d_a: usize, d_e: usize, kraus: &[CMat]) -> Result<Self> {
        let first = kraus
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty Kraus set".into()))?;
        let d_b = first.nrows();
        let d_in = d_a * d_e;
        check_channel_dims(d_a, d_e, d_b)?;
        for k in kraus {
            if k.nrows() != d_b || k.ncols() != d_in {
                return Err(Error::InvalidShape(format!(
                    "Kraus operator is {}x{}, expected {}x{}",
                    k.nrows(),
                    k.ncols(),
                    d_b,
                    d_in
                )));
            }
        }
        let mut completeness = -linalg::identity(d_in);
        for k in kraus {
            completeness += k.adjoint() * k;
        }
        let dev = linalg::max_abs(&completeness);
        if dev > config::get().cptp_tol {
            return Err(Error::Completeness(dev));
        }
        let n = d_in * d_b;
        let mut choi = CMat::zeros(n, n);
        for k in kraus {
            for i in 0..d_in {
                for b in 0..d_b {
                    let kbi = k[(b, i)];
                    if kbi == c(0.0, 0.0) {
                        continue;
                    }
                    for j in 0..d_in {
                        for bp in 0..d_b {
                            choi[(i * d_b + b, j * d_b + bp)] += kbi * k[(bp, j)].conj();
                        }
                    }
                }
            }
        }
        Self::from_choi(d_a, d_e, d_b, choi)
    }

    /// Wraps a Choi matrix built by an exact internal construction.
    pub(crate) fn from_choi_unchecked(d_a: usize, d_e: usize, d_b: usize, choi: CMat) -> Self {
        Self { d_a, d_e, d_b, choi }
    }

    pub fn d_in_a(&self) -> usize {
        self.d_a
    }

    pub fn d_in_e(&self) -> usize {
        self.d_e
    }

    pub fn d_out(&self) -> usize {
        self.d_b
    }

    pub fn d_in(&self) -> usize {
        self.d_a * self.d_e
    }

    pub fn choi(&self) -> &CMat {
        &self.choi
    }

    /// Max-abs deviation of `tr_B J` from the identity.
    pub fn tp_deviation(&self) -> f64 {
        let reduced = linalg::partial_trace_op(&self.choi, &[self.d_in(), self.d_b], &[0]);
        linalg::max_abs(&(reduced - linalg::identity(self.d_in())))
    }

    #[inline]
    fn j(&self, i: usize, b: usize, j: usize, bp: usize) -> C64 {
        self.choi[(i * self.d_b + b, j * self.d_b + bp)]
    }

    /// Linear action on an arbitrary operator on `A (x) E`.
    pub fn apply_op(&self, x: &CMat) -> CMat {
        let (d_in, d_b) = (self.d_in(), self.d_b);
        let mut out = CMat::zeros(d_b, d_b);
        for i in 0..d_in {
            for j in 0..d_in {
                let xij = x[(i, j)];
                if xij == c(0.0, 0.0) {
                    continue;
                }
                for b in 0..d_b {
                    for bp in 0..d_b {
                        out[(b, bp)] += xij * self.j(i, b, j, bp);
                    }
                }
            }
        }
        out
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        if rho.dim() != self.d_in() {
            return Err(Error::DimensionMismatch { expected: self.d_in(), got: rho.dim() });
        }
        Ok(DensityMatrix::from_raw(self.apply_op(rho.matrix())))
    }

    /// Heisenberg-picture map `O -> N^dag(O)` on arbitrary operators.
    pub fn adjoint_op(&self, obs: &CMat) -> CMat {
        let (d_in, d_b) = (self.d_in(), self.d_b);
        let mut out = CMat::zeros(d_in, d_in);
        for i in 0..d_in {
            for j in 0..d_in {
                let mut acc = c(0.0, 0.0);
                for b in 0..d_b {
                    for bp in 0..d_b {
                        acc += obs[(bp, b)] * self.j(i, b, j, bp);
                    }
                }
                out[(j, i)] = acc;
            }
        }
        out
    }

    pub fn apply_adjoint(&self, obs: &CMat) -> Result<CMat> {
        if obs.nrows() != self.d_b || obs.ncols() != self.d_b {
            return Err(Error::DimensionMismatch { expected: self.d_b, got: obs.nrows() });
        }
        let dev = linalg::hermitian_deviation(obs);
        if dev > config::get().hermitian_tol {
            return Err(Error::NotHermitian(dev));
        }
        Ok(linalg::hermitize(&self.adjoint_op(obs)))
    }

    /// Choi matrix of `rho_A -> N(rho_A (x) X)` for any operator `X` on `E`.
    pub fn fix_jammer_op(&self, x: &CMat) -> CMat {
        let (d_a, d_e, d_b) = (self.d_a, self.d_e, self.d_b);
        let n = d_a * d_b;
        let mut out = CMat::zeros(n, n);
        for a in 0..d_a {
            for ap in 0..d_a {
                for e in 0..d_e {
                    for ep in 0..d_e {
                        let s = x[(e, ep)];
                        if s == c(0.0, 0.0) {
                            continue;
                        }
                        let (i, j) = (a * d_e + e, ap * d_e + ep);
                        for b in 0..d_b {
                            for bp in 0..d_b {
                                out[(a * d_b + b, ap * d_b + bp)] += s * self.j(i, b, j, bp);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Adjoint of `X -> fix_jammer_op(X)`: the operator `G` on `E` with
    /// `tr(K J_X) = tr(G X)` for all `X`, where `K` acts on `A (x) B`.
    pub fn fix_jammer_op_adjoint(&self, k: &CMat) -> CMat {
        let (d_a, d_e, d_b) = (self.d_a, self.d_e, self.d_b);
        let mut out = CMat::zeros(d_e, d_e);
        for e in 0..d_e {
            for ep in 0..d_e {
                let mut acc = c(0.0, 0.0);
                for a in 0..d_a {
                    for ap in 0..d_a {
                        let (i, j) = (a * d_e + e, ap * d_e + ep);
                        for b in 0..d_b {
                            for bp in 0..d_b {
                                acc += k[(ap * d_b + bp, a * d_b + b)] * self.j(i, b, j, bp);
                            }
                        }
                    }
                }
                out[(ep, e)] = acc;
            }
        }
        out
    }

    /// The operator `G` on `E` with `tr(obs N(rho_a (x) X)) = tr(G X)` for all `X`.
    pub fn jammer_adjoint(&self, rho_a: &CMat, obs: &CMat) -> CMat {
        let full = self.adjoint_op(obs);
        let weighted = linalg::kron(rho_a, &linalg::identity(self.d_e)) * full;
        linalg::partial_trace_op(&weighted, &[self.d_a, self.d_e], &[1])
    }

    /// The induced channel `A -> B` when the jammer inputs `sigma`.
    pub fn fix_jammer(&self, sigma: &DensityMatrix) -> Result<QuantumChannel> {
        if sigma.dim() != self.d_e {
            return Err(Error::DimensionMismatch { expected: self.d_e, got: sigma.dim() });
        }
        let choi = linalg::hermitize(&self.fix_jammer_op(sigma.matrix()));
        Ok(Self::from_choi_unchecked(self.d_a, 1, self.d_b, choi))
    }

    /// `(id_R (x) N)(X)` for `X` on `R (x) (A E)`; output on `R (x) B`.
    pub fn apply_on_second(&self, x: &CMat, d_r: usize) -> CMat {
        let (d_in, d_b) = (self.d_in(), self.d_b);
        let mut out = CMat::zeros(d_r * d_b, d_r * d_b);
        for r in 0..d_r {
            for rp in 0..d_r {
                for i in 0..d_in {
                    for j in 0..d_in {
                        let xv = x[(r * d_in + i, rp * d_in + j)];
                        if xv == c(0.0, 0.0) {
                            continue;
                        }
                        for b in 0..d_b {
                            for bp in 0..d_b {
                                out[(r * d_b + b, rp * d_b + bp)] += xv * self.j(i, b, j, bp);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// `(N (x) id_K)(X)` for `X` on `(A E) (x) K`; output on `B (x) K`.
    pub fn apply_on_first(&self, x: &CMat, d_k: usize) -> CMat {
        let (d_in, d_b) = (self.d_in(), self.d_b);
        let mut out = CMat::zeros(d_b * d_k, d_b * d_k);
        for i in 0..d_in {
            for j in 0..d_in {
                for k in 0..d_k {
                    for kp in 0..d_k {
                        let xv = x[(i * d_k + k, j * d_k + kp)];
                        if xv == c(0.0, 0.0) {
                            continue;
                        }
                        for b in 0..d_b {
                            for bp in 0..d_b {
                                out[(b * d_k + k, bp * d_k + kp)] += xv * self.j(i, b, j, bp);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Adjoint of [`apply_on_first`](Self::apply_on_first): `O` on `B (x) K`
    /// to an operator on `(A E) (x) K`.
    pub fn adjoint_on_first(&self, obs: &CMat, d_k: usize) -> CMat {
        let (d_in, d_b) = (self.d_in(), self.d_b);
        let mut out = CMat::zeros(d_in * d_k, d_in * d_k);
        for i in 0..d_in {
            for j in 0..d_in {
                for b in 0..d_b {
                    for bp in 0..d_b {
                        let jv = self.j(i, b, j, bp);
                        if jv == c(0.0, 0.0) {
                            continue;
                        }
                        for k in 0..d_k {
                            for kp in 0..d_k {
                                out[(j * d_k + kp, i * d_k + k)] += obs[(bp * d_k + kp, b * d_k + k)] * jv;
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// `N^{(x) n}` with inputs ordered `(A_1..A_n, E_1..E_n)` and outputs
    /// `(B_1..B_n)`.
    pub fn n_fold(&self, n: usize) -> Result<QuantumChannel> {
        if n == 0 {
            return Err(Error::InvalidArgument("n must be positive".into()));
        }
        let (d_a, d_e, d_b) = (self.d_a.pow(n as u32), self.d_e.pow(n as u32), self.d_b.pow(n as u32));
        check_channel_dims(d_a, d_e, d_b)?;
        if n == 1 {
            return Ok(self.clone());
        }
        let mut choi = self.choi.clone();
        for _ in 1..n {
            choi = linalg::kron(&choi, &self.choi);
        }
        let dims: Vec<usize> = (0..n).flat_map(|_| [self.d_a, self.d_e, self.d_b]).collect();
        let perm: Vec<usize> = (0..3)
            .flat_map(|slot| (0..n).map(move |k| 3 * k + slot))
            .collect();
        let choi = linalg::permute_factors(&choi, &dims, &perm);
        Ok(Self::from_choi_unchecked(d_a, d_e, d_b, choi))
    }

    /// Swaps the roles of `A` and `E`: the result takes the jammer input first.
    pub fn swap_inputs(&self) -> QuantumChannel {
        let dims = [self.d_a, self.d_e, self.d_b];
        let choi = linalg::permute_factors(&self.choi, &dims, &[1, 0, 2]);
        Self::from_choi_unchecked(self.d_e, self.d_a, self.d_b, choi)
    }
}

/// Classical jammed channel `W(y | x, e)` stored as `W[y][x][e]`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassicalTable {
    nx: usize,
    ne: usize,
    ny: usize,
    w: Vec<Vec<Vec<f64>>>,
}

impl ClassicalTable {
    pub fn new(w: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let ny = w.len();
        let nx = w.first().map_or(0, Vec::len);
        let ne = w.first().and_then(|r| r.first()).map_or(0, Vec::len);
        if ny == 0 || nx == 0 || ne == 0 {
            return Err(Error::InvalidShape("classical table must be non-empty".into()));
        }
        if w.iter().any(|r| r.len() != nx || r.iter().any(|col| col.len() != ne)) {
            return Err(Error::InvalidShape("classical table must be rectangular W[y][x][e]".into()));
        }
        for x in 0..nx {
            for e in 0..ne {
                let mut sum = 0.0;
                for row in &w {
                    let p = row[x][e];
                    if !(p.is_finite() && (-1e-12..=1.0 + 1e-12).contains(&p)) {
                        return Err(Error::InvalidTable { x, e, sum: p });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidTable { x, e, sum });
                }
            }
        }
        Ok(Self { nx, ne, ny, w })
    }

    /// Builds a table from `f(x, e) -> distribution over y`.
    #[allow(clippy::needless_range_loop)] // w is indexed [y][x][e]
    pub fn from_fn<F: Fn(usize, usize) -> Vec<f64>>(nx: usize, ne: usize, ny: usize, f: F) -> Result<Self> {
        let mut w = vec![vec![vec![0.0; ne]; nx]; ny];
        for x in 0..nx {
            for e in 0..ne {
                let dist = f(x, e);
                if dist.len() != ny {
                    return Err(Error::InvalidShape(format!("distribution for (x={x}, e={e}) has wrong length")));
                }
                for (y, p) in dist.into_iter().enumerate() {
                    w[y][x][e] = p;
                }
            }
        }
        Self::new(w)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ne(&self) -> usize {
        self.ne
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn prob(&self, y: usize, x: usize, e: usize) -> f64 {
        self.w[y][x][e]
    }

    pub fn table(&self) -> &[Vec<Vec<f64>>] {
        &self.w
    }

    /// Diagonal Choi embedding.
    pub fn to_quantum(&self) -> QuantumChannel {
        let n = self.nx * self.ne * self.ny;
        let mut choi = CMat::zeros(n, n);
        for x in 0..self.nx {
            for e in 0..self.ne {
                for y in 0..self.ny {
                    let idx = (x * self.ne + e) * self.ny + y;
                    choi[(idx, idx)] = c(self.w[y][x][e], 0.0);
                }
            }
        }
        QuantumChannel::from_choi_unchecked(self.nx, self.ne, self.ny, choi)
    }

    pub fn to_cq(&self) -> CQChannelTable {
        CQChannelTable::from_channel(&self.to_quantum())
    }

    /// `y`-by-`x` transition matrix for a mixed jammer distribution `q` on `E`.
    pub fn transition_matrix(&self, q: &[f64]) -> Vec<Vec<f64>> {
        (0..self.ny)
            .map(|y| {
                (0..self.nx)
                    .map(|x| (0..self.ne).map(|e| q[e] * self.w[y][x][e]).sum())
                    .collect()
            })
            .collect()
    }
}

/// Per-symbol channels `N_x: E -> B` of a classical-quantum jammed channel.
#[derive(Debug, Clone, PartialEq)]
pub struct CQChannelTable {
    channels: Vec<QuantumChannel>,
}

impl CQChannelTable {
    pub fn new(channels: Vec<QuantumChannel>) -> Result<Self> {
        let first = channels
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty CQ channel table".into()))?;
        let (d_e, d_b) = (first.d_e, first.d_b);
        for ch in &channels {
            if ch.d_a != 1 {
                return Err(Error::InvalidShape("per-symbol channels must have d_A = 1".into()));
            }
            if ch.d_e != d_e || ch.d_b != d_b {
                return Err(Error::InvalidShape("per-symbol channels must share d_E and d_B".into()));
            }
        }
        Ok(Self { channels })
    }

    /// Reads the `A` input of `chan` as classical: `N_x(s) = N(|x><x| (x) s)`.
    pub fn from_channel(chan: &QuantumChannel) -> Self {
        let (d_e, d_b) = (chan.d_e, chan.d_b);
        let n = d_e * d_b;
        let channels = (0..chan.d_a)
            .map(|x| {
                let choi = CMat::from_fn(n, n, |r, col| {
                    let (e, b) = (r / d_b, r % d_b);
                    let (ep, bp) = (col / d_b, col % d_b);
                    chan.j(x * d_e + e, b, x * d_e + ep, bp)
                });
                QuantumChannel::from_choi_unchecked(1, d_e, d_b, choi)
            })
            .collect();
        Self { channels }
    }

    pub fn alphabet_size(&self) -> usize {
        self.channels.len()
    }

    pub fn d_e(&self) -> usize {
        self.channels[0].d_e
    }

    pub fn d_b(&self) -> usize {
        self.channels[0].d_b
    }

    pub fn channels(&self) -> &[QuantumChannel] {
        &self.channels
    }

    /// Output state `N_x(X)` for an operator `X` on `E`.
    pub fn output(&self, x: usize, sigma: &CMat) -> CMat {
        self.channels[x].apply_op(sigma)
    }

    /// The channel `A -> B` that measures `A` in the computational basis.
    pub fn to_quantum(&self) -> QuantumChannel {
        let (nx, d_e, d_b) = (self.alphabet_size(), self.d_e(), self.d_b());
        let block = d_e * d_b;
        let mut choi = CMat::zeros(nx * block, nx * block);
        for (x, ch) in self.channels.iter().enumerate() {
            choi.view_mut((x * block, x * block), (block, block)).copy_from(&ch.choi);
        }
        QuantumChannel::from_choi_unchecked(nx, d_e, d_b, choi)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelDims {
    #[serde(rename = "A")]
    pub a: usize,
    #[serde(rename = "E")]
    pub e: usize,
    #[serde(rename = "B")]
    pub b: usize,
}

/// On-disk channel description; `kind` selects the payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ChannelJson {
    Kraus { dims: ChannelDims, kraus: Vec<MatrixJson> },
    Choi { dims: ChannelDims, choi: MatrixJson },
    Classical {
        dims: ChannelDims,
        #[serde(rename = "W")]
        w: Vec<Vec<Vec<f64>>>,
    },
}

/// A validated channel as loaded from JSON.
#[derive(Debug, Clone, PartialEq)]
pub enum LoadedChannel {
    Quantum(QuantumChannel),
    Classical(ClassicalTable),
}

impl LoadedChannel {
    pub fn quantum(&self) -> QuantumChannel {
        match self {
            LoadedChannel::Quantum(q) => q.clone(),
            LoadedChannel::Classical(t) => t.to_quantum(),
        }
    }
}

impl ChannelJson {
    pub fn validate(self) -> Result<LoadedChannel> {
        match self {
            ChannelJson::Kraus { dims, kraus } => {
                let ops = kraus.iter().map(json::matrix_from_json).collect::<Result<Vec<_>>>()?;
                let chan = QuantumChannel::from_kraus(dims.a, dims.e, &ops)?;
                if chan.d_b != dims.b {
                    return Err(Error::DimensionMismatch { expected: dims.b, got: chan.d_b });
                }
                Ok(LoadedChannel::Quantum(chan))
            }
            ChannelJson::Choi { dims, choi } => {
                let m = json::matrix_from_json(&choi)?;
                Ok(LoadedChannel::Quantum(QuantumChannel::from_choi(dims.a, dims.e, dims.b, m)?))
            }
            ChannelJson::Classical { dims, w } => {
                let table = ClassicalTable::new(w)?;
                if (table.nx, table.ne, table.ny) != (dims.a, dims.e, dims.b) {
                    return Err(Error::InvalidShape(format!(
                        "W has shape |Y|={} |X|={} |E|={} but dims say A={} E={} B={}",
                        table.ny, table.nx, table.ne, dims.a, dims.e, dims.b
                    )));
                }
                Ok(LoadedChannel::Classical(table))
            }
        }
    }

    pub fn from_channel(chan: &QuantumChannel) -> Self {
        ChannelJson::Choi {
            dims: ChannelDims { a: chan.d_a, e: chan.d_e, b: chan.d_b },
            choi: json::matrix_to_json(&chan.choi),
        }
    }

    pub fn from_table(table: &ClassicalTable) -> Self {
        ChannelJson::Classical {
            dims: ChannelDims { a: table.nx, e: table.ne, b: table.ny },
            w: table.w.clone(),
        }
    }
}

/// Reference channels used in examples and tests.
pub mod fixtures {
    use super::*;

    /// `N(rho (x) sigma) = rho`, Kraus `I_A (x) <e|`.
    pub fn identity_on_a(d_a: usize, d_e: usize) -> QuantumChannel {
        let kraus: Vec<CMat> = (0..d_e)
            .map(|e| {
                let mut bra = CMat::zeros(1, d_e);
                bra[(0, e)] = c(1.0, 0.0);
                linalg::kron(&linalg::identity(d_a), &bra)
            })
            .collect();
        QuantumChannel::from_kraus(d_a, d_e, &kraus).expect("identity channel is CPTP")
    }

    /// `N(rho (x) sigma) = sigma`, Kraus `<a|_A (x) I_E`.
    pub fn jammer_swap(d: usize) -> QuantumChannel {
        let kraus: Vec<CMat> = (0..d)
            .map(|a| {
                let mut bra = CMat::zeros(1, d);
                bra[(0, a)] = c(1.0, 0.0);
                linalg::kron(&bra, &linalg::identity(d))
            })
            .collect();
        QuantumChannel::from_kraus(d, d, &kraus).expect("swap channel is CPTP")
    }

    /// Qubit channel: jammer `|0>` leaves the input untouched, jammer `|1>`
    /// dephases it completely.
    pub fn controlled_identity_dephasing() -> QuantumChannel {
        let ket = |k: usize| {
            let mut v = CMat::zeros(1, 2);
            v[(0, k)] = c(1.0, 0.0);
            v
        };
        let mut kraus = vec![linalg::kron(&linalg::identity(2), &ket(0))];
        for k in 0..2 {
            let mut p = CMat::zeros(2, 2);
            p[(k, k)] = c(1.0, 0.0);
            kraus.push(linalg::kron(&p, &ket(1)));
        }
        QuantumChannel::from_kraus(2, 2, &kraus).expect("controlled channel is CPTP")
    }

    /// Qubit dephasing `rho -> (1-p) rho + p Z rho Z` with a trivial jammer.
    pub fn dephasing(p: f64) -> QuantumChannel {
        let k0 = linalg::identity(2) * c((1.0 - p).sqrt(), 0.0);
        let k1 = linalg::diag(&[1.0, -1.0]) * c(p.sqrt(), 0.0);
        QuantumChannel::from_kraus(2, 1, &[k0, k1]).expect("dephasing is CPTP")
    }

    /// `rho -> I/d` with a trivial jammer.
    pub fn completely_depolarizing(d: usize) -> QuantumChannel {
        let choi = linalg::identity(d * d) / c(d as f64, 0.0);
        QuantumChannel::from_choi_unchecked(d, 1, d, choi)
    }

    /// Binary symmetric channel whose crossover probability is `p[e]`.
    pub fn jammer_selected_bsc(p: &[f64]) -> ClassicalTable {
        ClassicalTable::from_fn(2, p.len(), 2, |x, e| {
            if x == 0 {
                vec![1.0 - p[e], p[e]]
            } else {
                vec![p[e], 1.0 - p[e]]
            }
        })
        .expect("BSC table is stochastic")
    }

    /// `y = x XOR e` on bits.
    pub fn jammer_flipped_identity() -> ClassicalTable {
        ClassicalTable::from_fn(2, 2, 2, |x, e| {
            let mut d = vec![0.0; 2];
            d[x ^ e] = 1.0;
            d
        })
        .expect("deterministic table")
    }

    /// Noiseless bit with a jammer that has no effect.
    pub fn noiseless_bit(ne: usize) -> ClassicalTable {
        ClassicalTable::from_fn(2, ne, 2, |x, _| {
            let mut d = vec![0.0; 2];
            d[x] = 1.0;
            d
        })
        .expect("deterministic table")
    }
}

#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::qstate::tensor;
    use crate::random;

    fn kraus_apply(kraus: &[CMat], rho: &CMat) -> CMat {
        kraus.iter().map(|k| k * rho * k.adjoint()).fold(CMat::zeros(kraus[0].nrows(), kraus[0].nrows()), |a, b| a + b)
    }

    fn random_state(d: usize, rng: &mut random::SeededRng) -> DensityMatrix {
        DensityMatrix::new(random::ginibre_state(d, d, rng)).unwrap()
    }

    #[test]
    fn identity_kraus_gives_unnormalized_max_entangled_choi() {
        let chan = QuantumChannel::from_kraus(2, 1, &[linalg::identity(2)]).unwrap();
        let mut want = CMat::zeros(4, 4);
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            want[(i, j)] = c(1.0, 0.0);
        }
        assert_eq!(chan.choi(), &want);
    }

    #[test]
    fn jammer_swap_is_trace_preserving_and_outputs_sigma() {
        let chan = jammer_swap(2);
        assert!(chan.tp_deviation() < 1e-14);
        let mut rng = random::seeded(1);
        let rho = random_state(2, &mut rng);
        let sigma = random_state(2, &mut rng);
        let out = chan.apply(&tensor(&rho, &sigma).unwrap()).unwrap();
        assert!(linalg::max_abs(&(out.matrix() - sigma.matrix())) < 1e-14);
        let fixed = chan.fix_jammer(&sigma).unwrap().apply(&rho).unwrap();
        assert!(linalg::max_abs(&(fixed.matrix() - sigma.matrix())) < 1e-14);
    }

    #[test]
    fn dephasing_choi_standard_form() {
        let p = 0.3;
        let chan = dephasing(p);
        let mut want = CMat::zeros(4, 4);
        want[(0, 0)] = c(1.0, 0.0);
        want[(3, 3)] = c(1.0, 0.0);
        want[(0, 3)] = c(1.0 - 2.0 * p, 0.0);
        want[(3, 0)] = c(1.0 - 2.0 * p, 0.0);
        assert!(linalg::max_abs(&(chan.choi() - want)) < 1e-15);
    }

    #[test]
    fn controlled_channel_branches() {
        let chan = controlled_identity_dephasing();
        let fixed = chan.fix_jammer(&DensityMatrix::basis(2, 1)).unwrap();
        assert!(linalg::max_abs(&(fixed.choi() - dephasing(0.5).choi())) < 1e-15);
        let fixed = chan.fix_jammer(&DensityMatrix::basis(2, 0)).unwrap();
        assert!(linalg::max_abs(&(fixed.choi() - identity_on_a(2, 1).choi())) < 1e-15);
    }

    #[test]
    fn completeness_violation_reports_deviation() {
        let k = linalg::identity(2) * c(0.9, 0.0);
        match QuantumChannel::from_kraus(2, 1, &[k]) {
            Err(Error::Completeness(dev)) => assert!((dev - 0.19).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn non_tp_choi_rejected() {
        let choi = linalg::identity(4);
        assert!(matches!(QuantumChannel::from_choi(2, 1, 2, choi), Err(Error::NotCptp { .. })));
    }

    #[test]
    fn apply_examples() {
        let mut rng = random::seeded(2);
        let rho = random_state(2, &mut rng);
        let out = identity_on_a(2, 1).apply(&rho).unwrap();
        assert!(linalg::max_abs(&(out.matrix() - rho.matrix())) < 1e-15);

        let mut m = linalg::diag(&[0.5, 0.5]);
        m[(0, 1)] = c(0.4, 0.0);
        m[(1, 0)] = c(0.4, 0.0);
        let out = dephasing(0.5).apply(&DensityMatrix::new(m).unwrap()).unwrap();
        assert!(linalg::max_abs(&(out.matrix() - linalg::diag(&[0.5, 0.5]))) < 1e-15);
    }

    #[test]
    fn apply_matches_kraus_oracle() {
        let mut rng = random::seeded(3);
        for _ in 0..10 {
            let kraus = random::kraus_set(2, 4, 3, &mut rng);
            let chan = QuantumChannel::from_kraus(2, 2, &kraus).unwrap();
            let rho = random_state(4, &mut rng);
            let got = chan.apply(&rho).unwrap();
            let want = kraus_apply(&kraus, rho.matrix());
            assert!(linalg::max_abs(&(got.matrix() - want)) < 1e-13);
            assert!((linalg::trace(got.matrix()).re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn adjoint_properties() {
        let mut rng = random::seeded(4);
        let obs = random::hermitian(2, &mut rng);
        let adj = identity_on_a(2, 1).apply_adjoint(&obs).unwrap();
        assert!(linalg::max_abs(&(adj - &obs)) < 1e-15);
        for _ in 0..10 {
            let kraus = random::kraus_set(3, 4, 2, &mut rng);
            let chan = QuantumChannel::from_kraus(2, 2, &kraus).unwrap();
            let unit = chan.apply_adjoint(&linalg::identity(3)).unwrap();
            assert!(linalg::max_abs(&(unit - linalg::identity(4))) < 1e-10);
            let obs = random::hermitian(3, &mut rng);
            let rho = random_state(4, &mut rng);
            let lhs = linalg::trace_product(&obs, chan.apply(&rho).unwrap().matrix());
            let rhs = linalg::trace_product(&chan.apply_adjoint(&obs).unwrap(), rho.matrix());
            assert!((lhs - rhs).norm() < 1e-11);
        }
    }

    #[test]
    fn adjoint_rejects_wrong_dim() {
        assert!(matches!(
            identity_on_a(2, 1).apply_adjoint(&linalg::identity(3)),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn fix_jammer_is_affine() {
        let mut rng = random::seeded(5);
        let kraus = random::kraus_set(2, 4, 3, &mut rng);
        let chan = QuantumChannel::from_kraus(2, 2, &kraus).unwrap();
        let s1 = random_state(2, &mut rng);
        let s2 = random_state(2, &mut rng);
        let mid = s1.mix(&s2, 0.5).unwrap();
        let lhs = chan.fix_jammer(&mid).unwrap();
        let rhs = (chan.fix_jammer(&s1).unwrap().choi() + chan.fix_jammer(&s2).unwrap().choi()) * c(0.5, 0.0);
        assert!(linalg::max_abs(&(lhs.choi() - rhs)) < 1e-12);
        assert!(matches!(chan.fix_jammer(&random_state(3, &mut rng)), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn fix_jammer_agrees_with_product_input() {
        let mut rng = random::seeded(6);
        let kraus = random::kraus_set(3, 4, 2, &mut rng);
        let chan = QuantumChannel::from_kraus(2, 2, &kraus).unwrap();
        let rho = random_state(2, &mut rng);
        let sigma = random_state(2, &mut rng);
        let a = chan.fix_jammer(&sigma).unwrap().apply(&rho).unwrap();
        let b = chan.apply(&tensor(&rho, &sigma).unwrap()).unwrap();
        assert!(linalg::max_abs(&(a.matrix() - b.matrix())) < 1e-13);
    }

    #[test]
    fn n_fold_examples() {
        let chan = controlled_identity_dephasing();
        assert_eq!(chan.n_fold(1).unwrap(), chan);
        let id2 = identity_on_a(2, 1).n_fold(2).unwrap();
        assert!(linalg::max_abs(&(id2.choi() - identity_on_a(4, 1).choi())) < 1e-15);

        let mut rng = random::seeded(7);
        let kraus = random::kraus_set(2, 4, 2, &mut rng);
        let chan = QuantumChannel::from_kraus(2, 2, &kraus).unwrap();
        let sigma = random_state(2, &mut rng);
        let lhs = chan.n_fold(2).unwrap().fix_jammer(&tensor(&sigma, &sigma).unwrap()).unwrap();
        let single = chan.fix_jammer(&sigma).unwrap();
        let rhs = single.n_fold(2).unwrap();
        assert!(linalg::max_abs(&(lhs.choi() - rhs.choi())) < 1e-11);
        assert!(lhs.tp_deviation() < 1e-12);
    }

    #[test]
    fn n_fold_acts_as_tensor_power_on_products() {
        let mut rng = random::seeded(8);
        let kraus = random::kraus_set(2, 4, 2, &mut rng);
        let chan = QuantumChannel::from_kraus(2, 2, &kraus).unwrap();
        let (r1, r2, s1, s2) = (
            random_state(2, &mut rng),
            random_state(2, &mut rng),
            random_state(2, &mut rng),
            random_state(2, &mut rng),
        );
        let joint = tensor(&tensor(&r1, &r2).unwrap(), &tensor(&s1, &s2).unwrap()).unwrap();
        let got = chan.n_fold(2).unwrap().apply(&joint).unwrap();
        let o1 = chan.apply(&tensor(&r1, &s1).unwrap()).unwrap();
        let o2 = chan.apply(&tensor(&r2, &s2).unwrap()).unwrap();
        let want = tensor(&o1, &o2).unwrap();
        assert!(linalg::max_abs(&(got.matrix() - want.matrix())) < 1e-13);
    }

    #[test]
    fn n_fold_respects_cap() {
        let chan = identity_on_a(4, 4);
        assert!(matches!(chan.n_fold(3), Err(Error::DimensionCap { .. })));
    }

    #[test]
    fn classical_embeddings() {
        let id = ClassicalTable::from_fn(2, 1, 2, |x, _| if x == 0 { vec![1.0, 0.0] } else { vec![0.0, 1.0] }).unwrap();
        let q = id.to_quantum();
        let fixed = q.fix_jammer(&DensityMatrix::basis(1, 0)).unwrap();
        assert!(linalg::max_abs(&(fixed.apply(&DensityMatrix::basis(2, 1)).unwrap().matrix() - DensityMatrix::basis(2, 1).matrix())) < 1e-15);

        let table = jammer_selected_bsc(&[0.05, 0.25]);
        let chan = table.to_quantum();
        assert!(chan.tp_deviation() < 1e-15);
        let q = 0.3;
        let fixed = chan.fix_jammer(&DensityMatrix::from_diagonal(&[q, 1.0 - q]).unwrap()).unwrap();
        let p = 0.05 * q + 0.25 * (1.0 - q);
        let out = fixed.apply(&DensityMatrix::basis(2, 0)).unwrap();
        assert!((out.matrix()[(0, 0)].re - (1.0 - p)).abs() < 1e-15);
        assert!((out.matrix()[(1, 1)].re - p).abs() < 1e-15);
    }

    #[test]
    fn invalid_table_cites_pair() {
        let mut w = jammer_flipped_identity().table().to_vec();
        w[0][1][0] = 0.9;
        w[1][1][0] = 0.0;
        match ClassicalTable::new(w) {
            Err(Error::InvalidTable { x: 1, e: 0, sum }) => assert!((sum - 0.9).abs() < 1e-12),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn cq_table_round_trip() {
        let chan = controlled_identity_dephasing().swap_inputs();
        let cq = CQChannelTable::from_channel(&chan);
        assert_eq!(cq.alphabet_size(), 2);
        let back = cq.to_quantum();
        let diag_in = tensor(&DensityMatrix::from_diagonal(&[0.3, 0.7]).unwrap(), &DensityMatrix::maximally_mixed(2)).unwrap();
        let a = back.apply(&diag_in).unwrap();
        let b = chan.apply(&diag_in).unwrap();
        assert!(linalg::max_abs(&(a.matrix() - b.matrix())) < 1e-14);
    }

    #[test]
    fn ancilla_actions_match_kron_oracle() {
        let mut rng = random::seeded(9);
        let kraus = random::kraus_set(3, 2, 2, &mut rng);
        let chan = QuantumChannel::from_kraus(2, 1, &kraus).unwrap();
        let x = random::ginibre_state(4, 4, &mut rng);
        let second: Vec<CMat> = kraus.iter().map(|k| linalg::kron(&linalg::identity(2), k)).collect();
        let first: Vec<CMat> = kraus.iter().map(|k| linalg::kron(k, &linalg::identity(2))).collect();
        assert!(linalg::max_abs(&(chan.apply_on_second(&x, 2) - kraus_apply(&second, &x))) < 1e-13);
        assert!(linalg::max_abs(&(chan.apply_on_first(&x, 2) - kraus_apply(&first, &x))) < 1e-13);
        let obs = random::hermitian(6, &mut rng);
        let lhs = linalg::trace_product(&obs, &chan.apply_on_first(&x, 2));
        let rhs = linalg::trace_product(&chan.adjoint_on_first(&obs, 2), &x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn jammer_slot_adjoints() {
        let mut rng = random::seeded(10);
        let kraus = random::kraus_set(3, 4, 2, &mut rng);
        let chan = QuantumChannel::from_kraus(2, 2, &kraus).unwrap();
        let x = random::hermitian(2, &mut rng);
        let k = random::hermitian(6, &mut rng);
        let lhs = linalg::trace_product(&k, &chan.fix_jammer_op(&x));
        let rhs = linalg::trace_product(&chan.fix_jammer_op_adjoint(&k), &x);
        assert!((lhs - rhs).norm() < 1e-12);

        let rho = random::ginibre_state(2, 2, &mut rng);
        let obs = random::hermitian(3, &mut rng);
        let lhs = linalg::trace_product(&obs, &chan.apply_op(&linalg::kron(&rho, &x)));
        let rhs = linalg::trace_product(&chan.jammer_adjoint(&rho, &obs), &x);
        assert!((lhs - rhs).norm() < 1e-12);
    }

    #[test]
    fn json_kinds() {
        let text = r#"{"kind":"classical","dims":{"A":2,"E":2,"B":2},"W":[[[1,0],[0,1]],[[0,1],[1,0]]]}"#;
        let loaded: ChannelJson = serde_json::from_str(text).unwrap();
        assert_eq!(loaded.validate().unwrap(), LoadedChannel::Classical(jammer_flipped_identity()));

        let chan = jammer_swap(2);
        let text = serde_json::to_string(&ChannelJson::from_channel(&chan)).unwrap();
        let back: ChannelJson = serde_json::from_str(&text).unwrap();
        assert_eq!(back.validate().unwrap(), LoadedChannel::Quantum(chan));

        let bad = r#"{"kind":"choi","dims":{"A":1,"E":1,"B":1},"choi":[[[1,0]]],"bogus":3}"#;
        assert!(serde_json::from_str::<ChannelJson>(bad).is_err());
    }
}
