//! Homodyne statistics of the signal `X` quadrature in the Hermite-function
//! representation, with the idler traced out.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::TwoModeState;

pub const DEFAULT_GRID_POINTS: usize = 2048;

/// Orthonormal Hermite functions `h_0(x) .. h_{n-1}(x)` by the three-term
/// recurrence.
pub fn hermite_functions(n: usize, x: f64) -> Vec<f64> {
    let mut h = Vec::with_capacity(n);
    if n == 0 {
        return h;
    }
    h.push(std::f64::consts::PI.powf(-0.25) * (-0.5 * x * x).exp());
    if n > 1 {
        h.push(std::f64::consts::SQRT_2 * x * h[0]);
    }
    for k in 1..n.saturating_sub(1) {
        let kf = k as f64;
        let next = (2.0 / (kf + 1.0)).sqrt() * x * h[k] - (kf / (kf + 1.0)).sqrt() * h[k - 1];
        h.push(next);
    }
    h
}

/// Half-width of the default quadrature grid, `sqrt(2 N_s) + 4`.
pub fn grid_half_width(signal_levels: usize) -> f64 {
    (2.0 * signal_levels as f64).sqrt() + 4.0
}

/// Uniform grid of `points` values over `[-L, L]` with `L` from
/// [`grid_half_width`].
pub fn default_grid(signal_levels: usize) -> Vec<f64> {
    linspace(
        -grid_half_width(signal_levels),
        grid_half_width(signal_levels),
        DEFAULT_GRID_POINTS,
    )
}

pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => vec![],
        1 => vec![lo],
        _ => {
            let h = (hi - lo) / (points - 1) as f64;
            (0..points).map(|i| lo + h * i as f64).collect()
        }
    }
}

/// Signal wavefunction in the `X` representation, one value per idler level.
fn wavefunction_rows(state: &TwoModeState, x: f64) -> Vec<C64> {
    let (ns, ni) = state.dims();
    let h = hermite_functions(ns, x);
    let amps = state.amps();
    let mut rows = vec![C64::new(0.0, 0.0); ni];
    for (n, hn) in h.iter().enumerate() {
        if *hn == 0.0 {
            continue;
        }
        for (m, row) in rows.iter_mut().enumerate() {
            *row += amps[[n, m]] * *hn;
        }
    }
    rows
}

/// `p(x) = sum_m |sum_n amps[n][m] h_n(x)|^2`.
pub fn signal_quadrature_pdf(state: &TwoModeState, grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&x| {
            wavefunction_rows(state, x)
                .iter()
                .map(|z| z.norm_sqr())
                .sum()
        })
        .collect()
}

pub fn trapezoid(values: &[f64], grid: &[f64]) -> f64 {
    grid.windows(2)
        .zip(values.windows(2))
        .map(|(x, y)| 0.5 * (x[1] - x[0]) * (y[0] + y[1]))
        .sum()
}

/// Composite Simpson weights on a uniform grid with an even number of
/// intervals.
fn simpson_weights(points: usize, h: f64) -> Vec<f64> {
    debug_assert!(points >= 3 && points % 2 == 1);
    (0..points)
        .map(|i| {
            let w = if i == 0 || i == points - 1 {
                1.0
            } else if i % 2 == 1 {
                4.0
            } else {
                2.0
            };
            w * h / 3.0
        })
        .collect()
}

/// Acceptance window `x > threshold`, clipped to the grid half-width and
/// sampled with 2049 points for composite Simpson.
fn window_grid(signal_levels: usize, threshold: f64) -> Option<(Vec<f64>, Vec<f64>)> {
    let half = grid_half_width(signal_levels);
    let lo = threshold.max(-half);
    if lo >= half {
        return None;
    }
    let points = DEFAULT_GRID_POINTS + 1;
    let grid = linspace(lo, half, points);
    let weights = simpson_weights(points, (half - lo) / (points - 1) as f64);
    Some((grid, weights))
}

/// Probability that the homodyne reading exceeds `threshold`.
pub fn homodyne_accept_prob(state: &TwoModeState, threshold: f64) -> Result<f64> {
    let gram = windowed_gram(&[state], threshold)?;
    Ok(gram[[0, 0]].re.max(0.0))
}

/// Matrix of windowed overlaps
/// `G[j][k] = ∫_{x > threshold} sum_m conj(psi_j(x, m)) psi_k(x, m) dx`.
/// A superposition `sum_k c_k psi_k` is accepted with probability `c† G c`.
pub fn windowed_gram(states: &[&TwoModeState], threshold: f64) -> Result<Array2<C64>> {
    let first = states
        .first()
        .ok_or_else(|| Error::InvalidParameter("no states for windowed overlap".into()))?;
    for s in states {
        if s.dims() != first.dims() {
            return Err(Error::DimensionMismatch {
                left: first.dims(),
                right: s.dims(),
            });
        }
    }
    if threshold.is_nan() {
        return Err(Error::NonFinite("homodyne threshold"));
    }
    let k = states.len();
    let mut gram = Array2::<C64>::zeros((k, k));
    let Some((grid, weights)) = window_grid(first.dims().0, threshold) else {
        return Ok(gram);
    };
    for (x, w) in grid.iter().zip(&weights) {
        let rows: Vec<Vec<C64>> = states.iter().map(|s| wavefunction_rows(s, *x)).collect();
        for j in 0..k {
            for l in j..k {
                let v: C64 = rows[j]
                    .iter()
                    .zip(&rows[l])
                    .map(|(a, b)| a.conj() * b)
                    .sum();
                gram[[j, l]] += v * *w;
            }
        }
    }
    for j in 0..k {
        for l in 0..j {
            gram[[j, l]] = gram[[l, j]].conj();
        }
    }
    Ok(gram)
}
