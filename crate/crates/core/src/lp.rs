//! Dense simplex solver for finite zero-sum games.
//!
//! The payoff matrix `P[i][j]` is a loss for the row player (who minimizes)
//! and a gain for the column player (who maximizes). Each player's optimal
//! mixture is found from its own linear program
//! `max 1^T z  s.t.  B z <= 1, z >= 0` with a positively shifted `B`, so the
//! two reported values come from independent solves. Pivoting uses Bland's
//! rule (lowest index enters, lowest basis index leaves on ties), which makes
//! the result deterministic.

use serde::Serialize;

use crate::error::{Error, Result};

const PIVOT_TOL: f64 = 1e-12;

/// Optimal mixtures of a zero-sum matrix game.
#[derive(Debug, Clone, Serialize)]
pub struct GameSolution {
    /// Row (minimizer) mixture.
    pub row_mixture: Vec<f64>,
    /// Column (maximizer) mixture.
    pub col_mixture: Vec<f64>,
    /// `max_j (x^T P)_j` for the row mixture `x`: what the minimizer guarantees.
    pub inf_sup: f64,
    /// `min_i (P y)_i` for the column mixture `y`: what the maximizer guarantees.
    pub sup_inf: f64,
}

impl GameSolution {
    pub fn gap(&self) -> f64 {
        self.inf_sup - self.sup_inf
    }
}

/// Solves `max 1^T z` subject to `B z <= 1`, `z >= 0` for entrywise positive
/// `B`. Returns the optimal `z`.
fn max_sum_packing(b: &[Vec<f64>]) -> Result<Vec<f64>> {
    let m = b.len();
    let n = b.first().map_or(0, Vec::len);
    if m == 0 || n == 0 {
        return Err(Error::Lp("empty"));
    }
    let width = n + m + 1;
    // rows 0..m: constraints, row m: objective (reduced costs, negated form)
    let mut t = vec![vec![0.0; width]; m + 1];
    for i in 0..m {
        t[i][..n].copy_from_slice(&b[i]);
        t[i][n + i] = 1.0;
        t[i][width - 1] = 1.0;
    }
    t[m][..n].fill(-1.0);
    let mut basis: Vec<usize> = (n..n + m).collect();

    let max_pivots = 50 * (n + m) + 1000;
    for _ in 0..max_pivots {
        let Some(enter) = (0..n + m).find(|&j| t[m][j] < -PIVOT_TOL) else {
            let mut z = vec![0.0; n];
            for (i, &var) in basis.iter().enumerate() {
                if var < n {
                    z[var] = t[i][width - 1];
                }
            }
            return Ok(z);
        };
        let mut leave: Option<usize> = None;
        let mut best_ratio = f64::INFINITY;
        for i in 0..m {
            let a = t[i][enter];
            if a > PIVOT_TOL {
                let ratio = t[i][width - 1] / a;
                let better = ratio < best_ratio - 1e-14
                    || (ratio <= best_ratio + 1e-14 && leave.is_some_and(|l| basis[i] < basis[l]));
                if leave.is_none() || better {
                    best_ratio = ratio;
                    leave = Some(i);
                }
            }
        }
        let Some(row) = leave else {
            return Err(Error::Lp("unbounded"));
        };
        let pivot = t[row][enter];
        for v in t[row].iter_mut() {
            *v /= pivot;
        }
        let pivot_row = t[row].clone();
        for (i, r) in t.iter_mut().enumerate() {
            if i == row {
                continue;
            }
            let factor = r[enter];
            if factor != 0.0 {
                for (v, p) in r.iter_mut().zip(&pivot_row) {
                    *v -= factor * p;
                }
            }
        }
        basis[row] = enter;
    }
    Err(Error::Lp("cycling (pivot limit reached)"))
}

/// Mixture minimizing `max_i (B y)_i` over column mixtures `y`.
fn column_minimax(b: &[Vec<f64>]) -> Result<Vec<f64>> {
    let min = b.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - min;
    let shifted: Vec<Vec<f64>> = b.iter().map(|r| r.iter().map(|v| v + shift).collect()).collect();
    let z = max_sum_packing(&shifted)?;
    let total: f64 = z.iter().sum();
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Lp("degenerate"));
    }
    Ok(z.iter().map(|v| (v / total).max(0.0)).collect())
}

/// Solves the game `min_x max_y x^T P y` in both orientations.
pub fn solve_zero_sum(payoff: &[Vec<f64>]) -> Result<GameSolution> {
    let m = payoff.len();
    let n = payoff.first().map_or(0, Vec::len);
    if m == 0 || n == 0 || payoff.iter().any(|r| r.len() != n) {
        return Err(Error::Lp("malformed payoff matrix"));
    }
    if payoff.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Lp("given non-finite payoffs"));
    }
    // Row player: columns of P^T are rows of P.
    let transposed: Vec<Vec<f64>> = (0..n).map(|j| (0..m).map(|i| payoff[i][j]).collect()).collect();
    let x = column_minimax(&transposed)?;
    // Column player maximizes min_i (P y)_i, i.e. minimizes max_i (-P y)_i.
    let negated: Vec<Vec<f64>> = payoff.iter().map(|r| r.iter().map(|v| -v).collect()).collect();
    let y = column_minimax(&negated)?;

    let inf_sup = (0..n)
        .map(|j| (0..m).map(|i| x[i] * payoff[i][j]).sum::<f64>())
        .fold(f64::NEG_INFINITY, f64::max);
    let sup_inf = (0..m)
        .map(|i| (0..n).map(|j| payoff[i][j] * y[j]).sum::<f64>())
        .fold(f64::INFINITY, f64::min);
    Ok(GameSolution { row_mixture: x, col_mixture: y, inf_sup, sup_inf })
}
