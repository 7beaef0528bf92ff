//! Brute-force reference for the two-mode squeeze: dense matrix exponential
//! of the generator `r(ab - a†b†)`.
//!
//! The generator only couples `|n, m>` to `|n±1, m±1>`, so it is block
//! diagonal in `n - m`. Each block is built densely and exponentiated by
//! scaling and squaring. The working space is padded beyond the state's box;
//! on the bare box the truncated generator reflects amplitude off the last
//! level, which is an artefact of the oracle and not of the physics.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::TwoModeState;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OracleConfig {
    /// Largest per-mode dimension the oracle accepts.
    pub limit: usize,
    /// Extra levels per mode in the working space.
    pub padding: usize,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig {
            limit: 16,
            padding: 32,
        }
    }
}

pub fn squeeze_oracle(state: &TwoModeState, r: f64) -> Result<TwoModeState> {
    squeeze_oracle_with(state, r, OracleConfig::default())
}

pub fn squeeze_oracle_with(
    state: &TwoModeState,
    r: f64,
    config: OracleConfig,
) -> Result<TwoModeState> {
    let (ns, ni) = state.dims();
    if ns > config.limit || ni > config.limit {
        return Err(Error::OracleTooLarge {
            dims: (ns, ni),
            limit: config.limit,
        });
    }
    if !r.is_finite() {
        return Err(Error::NonFinite("squeeze parameter"));
    }
    let (ws, wi) = (ns + config.padding, ni + config.padding);
    let mut out = Array2::<C64>::zeros((ns, ni));

    // chain for fixed d = n - m: (n, m) = (k + d⁺, k + d⁻)
    for d in -(wi as isize - 1)..=(ws as isize - 1) {
        let (n0, m0) = if d >= 0 {
            (d as usize, 0)
        } else {
            (0, (-d) as usize)
        };
        let len = (ws - n0).min(wi - m0);
        let input: Vec<C64> = (0..len)
            .map(|k| {
                let (n, m) = (n0 + k, m0 + k);
                if n < ns && m < ni {
                    state.amps()[[n, m]]
                } else {
                    C64::new(0.0, 0.0)
                }
            })
            .collect();
        if input.iter().all(|z| z.norm_sqr() == 0.0) {
            continue;
        }
        let gen = chain_generator(n0, m0, len, r);
        let prop = dense_expm(&gen);
        for k in 0..len {
            let (n, m) = (n0 + k, m0 + k);
            if n >= ns || m >= ni {
                break;
            }
            let mut acc = C64::new(0.0, 0.0);
            for (j, z) in input.iter().enumerate() {
                acc += *z * prop[[k, j]];
            }
            out[[n, m]] = acc;
        }
    }
    let kept: f64 = out.iter().map(|z| z.norm_sqr()).sum();
    let lost = (state.norm_sqr() - kept).max(0.0);
    let tail = (state.tail_bound().sqrt() + lost.sqrt()).powi(2);
    TwoModeState::new(out, tail)
}

/// Dense generator block for the chain starting at `(n0, m0)`.
pub fn chain_generator(n0: usize, m0: usize, len: usize, r: f64) -> Array2<f64> {
    let mut gen = Array2::zeros((len, len));
    for k in 0..len.saturating_sub(1) {
        // <k| ab |k+1> and <k+1| a†b† |k>
        let c = (((n0 + k + 1) * (m0 + k + 1)) as f64).sqrt();
        gen[[k, k + 1]] = r * c;
        gen[[k + 1, k]] = -r * c;
    }
    gen
}

/// Full dense generator `r(ab - a†b†)` on a `dims` box, flattened row-major
/// over `(n, m)`.
pub fn dense_generator(dims: (usize, usize), r: f64) -> Array2<f64> {
    let (ns, ni) = dims;
    let idx = |n: usize, m: usize| n * ni + m;
    let mut gen = Array2::zeros((ns * ni, ns * ni));
    for n in 0..ns - 1 {
        for m in 0..ni - 1 {
            let c = (((n + 1) * (m + 1)) as f64).sqrt();
            gen[[idx(n, m), idx(n + 1, m + 1)]] = r * c;
            gen[[idx(n + 1, m + 1), idx(n, m)]] = -r * c;
        }
    }
    gen
}

fn one_norm(a: &Array2<f64>) -> f64 {
    (0..a.ncols())
        .map(|j| a.column(j).iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// Scaling and squaring with a Taylor core: scale until the 1-norm is at most
/// 1/2, sum 20 terms, square back.
pub fn dense_expm(a: &Array2<f64>) -> Array2<f64> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "dense_expm needs a square matrix");
    let norm = one_norm(a);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = a / 2f64.powi(squarings);
    let mut result = Array2::<f64>::eye(n);
    let mut term = Array2::<f64>::eye(n);
    for k in 1..=20 {
        term = term.dot(&scaled) / k as f64;
        result += &term;
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}
