//! Post-selected signal variance: the linear input/output prediction versus
//! the exact Schrödinger-picture state.
//!
//! Both paths use photon post-selection only (all four analyzer branches, no
//! homodyne window). Exact variances are reported in the `(a + a†)/√2`
//! convention; the naive formula is evaluated as printed.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{
    apply_inverse_two_mode_squeeze, apply_quadrature, apply_signal_phase, overlap,
    quadrature_moment, Mode, Quadrature, QuadratureSpec,
};
use crate::pipeline::{prepare_cat, Branches, ExperimentConfig};

const SIGNAL_X: QuadratureSpec = QuadratureSpec {
    mode: Mode::Signal,
    which: Quadrature::X,
};

/// Naive-ratio floor and exact-ratio ceiling for flagging a disagreement.
pub const NAIVE_RATIO_GATE: f64 = 2.5;
pub const EXACT_RATIO_GATE: f64 = 1.15;

/// Default `phi` for the variance audit; `sin²(2 phi) = 1`.
pub const AUDIT_PHI: f64 = FRAC_PI_4;

/// Unamplified post-selected second moment
/// `sin²(2 phi) |alpha0|² / (1 + 2 cos² theta)`.
pub fn printed_unamplified_moment(phi: f64, alpha0_mag: f64, theta: f64) -> f64 {
    (2.0 * phi).sin().powi(2) * alpha0_mag * alpha0_mag / (1.0 + 2.0 * theta.cos().powi(2))
}

/// `g² <x_W²> + (g² - 1)`.
pub fn naive_postselected_variance(config: &ExperimentConfig, theta: f64) -> f64 {
    let g2 = config.gain.g().powi(2);
    g2 * printed_unamplified_moment(config.phi, config.alpha0.norm(), theta) + (g2 - 1.0)
}

/// Variance of signal `X` in the normalised photon-post-selected state.
pub fn exact_postselected_variance(config: &ExperimentConfig, theta: f64) -> Result<f64> {
    let branches = Branches::build(config)?;
    exact_variance_from(&branches, theta)
}

fn exact_variance_from(branches: &Branches, theta: f64) -> Result<f64> {
    let state = branches.four_branch_state(theta)?;
    if state.norm_sqr() <= 0.0 {
        return Err(Error::ZeroNorm);
    }
    let m1 = quadrature_moment(&state, SIGNAL_X, 1, true)?;
    let m2 = quadrature_moment(&state, SIGNAL_X, 2, true)?;
    Ok((m2 - m1 * m1).max(0.0))
}

/// Unnormalised first moment of signal `X`, computed (a) on the evolved
/// post-selected state and (b) as `<psi0| S† T† X T S |psi0>` with the
/// adjoint operators applied to `X|psi_F>` and the product taken against the
/// initial cat.
pub fn first_moment_agreement(config: &ExperimentConfig, theta: f64) -> Result<(f64, f64)> {
    let psi0 = prepare_cat(config)?;
    let psi_f = Branches::build(config)?.four_branch_state(theta)?;
    let direct = quadrature_moment(&psi_f, SIGNAL_X, 1, false)?;

    let x_psi = apply_quadrature(&psi_f, SIGNAL_X);
    // T† = (e^{-i theta} U(-phi) + U(phi)) / 2
    let t_dag = apply_signal_phase(&x_psi, -config.phi)
        .scaled(C64::from_polar(0.5, -theta))
        .add_scaled(C64::new(0.5, 0.0), &apply_signal_phase(&x_psi, config.phi))?;
    let s_dag = apply_inverse_two_mode_squeeze(&t_dag, config.gain, f64::INFINITY)?;
    let via_adjoint = overlap(&psi0, &s_dag)?;
    Ok((direct, via_adjoint.re))
}

#[derive(Debug, Clone, PartialEq)]
pub struct VarianceComparison {
    pub theta_samples: Vec<f64>,
    pub naive_variance: Vec<f64>,
    pub exact_variance: Vec<f64>,
    pub naive_modulation_ratio: f64,
    pub exact_modulation_ratio: f64,
    /// Naive ratio ≥ 2.5 while the exact ratio ≤ 1.15.
    pub disagreement: bool,
}

/// `max/min`, with a flat zero series counted as unmodulated.
pub fn modulation_ratio(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    if max <= min {
        1.0
    } else if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

pub fn discrepancy_report(
    config: &ExperimentConfig,
    theta_grid: &[f64],
) -> Result<VarianceComparison> {
    if theta_grid.len() < 2 {
        return Err(Error::InvalidParameter(
            "theta grid needs at least 2 points".into(),
        ));
    }
    let branches = Branches::build(config)?;
    let naive: Vec<f64> = theta_grid
        .iter()
        .map(|&t| naive_postselected_variance(config, t))
        .collect();
    let exact = theta_grid
        .iter()
        .map(|&t| exact_variance_from(&branches, t))
        .collect::<Result<Vec<f64>>>()?;
    let naive_ratio = modulation_ratio(&naive);
    let exact_ratio = modulation_ratio(&exact);
    Ok(VarianceComparison {
        theta_samples: theta_grid.to_vec(),
        naive_variance: naive,
        exact_variance: exact,
        naive_modulation_ratio: naive_ratio,
        exact_modulation_ratio: exact_ratio,
        disagreement: naive_ratio >= NAIVE_RATIO_GATE && exact_ratio <= EXACT_RATIO_GATE,
    })
}
