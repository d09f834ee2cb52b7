//! Value of a finite zero-sum matrix game by the simplex method.
//!
//! The row player mixes over rows to minimize, the column player mixes over
//! columns to maximize. After shifting every entry to be positive the row
//! player's problem is `max 1ᵀp s.t. Aᵀp ≤ 1, p ≥ 0`, whose optimum is the
//! reciprocal of the shifted game value. Bland's rule rules out cycling.

const PIVOT_EPS: f64 = 1e-12;

/// `min_{λ ∈ Δ(rows)} max_{j} Σ_i λ_i a[i][j]`.
pub(crate) fn matrix_game_value(a: &[Vec<f64>]) -> f64 {
    assert!(!a.is_empty() && !a[0].is_empty(), "matrix game needs a nonempty payoff matrix");
    // LP variables are the original rows, constraints the original columns.
    let (cols, rows) = (a.len(), a[0].len());

    let lo = a.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let shift = 1.0 - lo;

    // Tableau: `rows` constraint rows over `cols + rows` variables plus rhs.
    let width = cols + rows + 1;
    let mut tab = vec![vec![0.0; width]; rows];
    for (i, row) in tab.iter_mut().enumerate() {
        for j in 0..cols {
            row[j] = a[j][i] + shift;
        }
        row[cols + i] = 1.0;
        row[width - 1] = 1.0;
    }
    // Reduced costs for maximizing Σ w_j.
    let mut obj = vec![0.0; width];
    obj[..cols].fill(1.0);
    let mut basis: Vec<usize> = (cols..cols + rows).collect();

    while let Some(enter) = (0..width - 1).find(|&j| obj[j] > PIVOT_EPS) {
        let mut leave: Option<usize> = None;
        for i in 0..rows {
            let coef = tab[i][enter];
            if coef <= PIVOT_EPS {
                continue;
            }
            let ratio = tab[i][width - 1] / coef;
            leave = match leave {
                None => Some(i),
                Some(l) => {
                    let best = tab[l][width - 1] / tab[l][enter];
                    if ratio < best - PIVOT_EPS || (ratio <= best + PIVOT_EPS && basis[i] < basis[l]) {
                        Some(i)
                    } else {
                        Some(l)
                    }
                }
            };
        }
        // Bounded: every column has positive entries, so a leaving row exists.
        let leave = leave.expect("shifted game LP is bounded");

        let pivot = tab[leave][enter];
        for x in tab[leave].iter_mut() {
            *x /= pivot;
        }
        let pivot_row = tab[leave].clone();
        for (i, row) in tab.iter_mut().enumerate() {
            if i != leave && row[enter] != 0.0 {
                let f = row[enter];
                for (x, p) in row.iter_mut().zip(&pivot_row) {
                    *x -= f * p;
                }
            }
        }
        let f = obj[enter];
        for (x, p) in obj.iter_mut().zip(&pivot_row) {
            *x -= f * p;
        }
        basis[leave] = enter;
    }

    let opt: f64 = basis
        .iter()
        .enumerate()
        .filter(|(_, &b)| b < cols)
        .map(|(i, _)| tab[i][width - 1])
        .sum();
    1.0 / opt - shift
}
