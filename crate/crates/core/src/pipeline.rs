//! The cat-state interferometer: preparation by a conditional phase shift,
//! amplification, a second conditional phase shift with analyzer phase
//! `theta`, and post-selection.
//!
//! A branch is labelled by the sign of the preparation phase and the sign of
//! the analyzer phase. Branch `(prep, analyzer)` is
//! `U(analyzer·phi) S |e^{i prep·phi} alpha0> |0>`. The preparation stage
//! contributes `1/√2` per branch and the analyzer `1/2`, with `e^{i theta}`
//! on every analyzer-`+` branch. Probabilities are squared norms of these
//! unnormalised amplitudes.

use std::f64::consts::{FRAC_1_SQRT_2, FRAC_PI_2, PI};

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fock::{
    apply_signal_phase, apply_two_mode_squeeze_with, coherent_vector, overlap, product_state,
    vacuum_vector, GainParam, TwoModeState, DEFAULT_TAIL_THRESHOLD,
};
use crate::homodyne::{homodyne_accept_prob, windowed_gram};
use crate::qfunc::visibility_closed_form;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PostSelectMode {
    /// Keep only the two branches whose phase shifts cancel.
    BranchDrop,
    /// Keep all four branches and accept homodyne readings `x > threshold`.
    HomodyneWindow { threshold: f64 },
}

impl PostSelectMode {
    pub fn name(&self) -> &'static str {
        match self {
            PostSelectMode::BranchDrop => "branch_drop",
            PostSelectMode::HomodyneWindow { .. } => "homodyne_window",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn value(self) -> f64 {
        match self {
            Sign::Plus => 1.0,
            Sign::Minus => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub alpha0: C64,
    /// Conditional phase of each single-photon interferometer.
    pub phi: f64,
    /// Analyzer phase.
    pub theta: f64,
    pub gain: GainParam,
    /// Fock levels kept for (signal, idler).
    pub dims: (usize, usize),
    pub postselect_mode: PostSelectMode,
    /// Renormalise post-selected output states.
    pub normalize_outputs: bool,
    /// Ceiling on truncated mass per amplifier pass.
    pub tail_threshold: f64,
}

impl ExperimentConfig {
    /// `phi = π/2`, `theta = 0`, branch-drop post-selection, default dims.
    pub fn new(alpha0: C64, gain: GainParam) -> Self {
        ExperimentConfig {
            alpha0,
            phi: FRAC_PI_2,
            theta: 0.0,
            gain,
            dims: default_dims(alpha0.norm(), gain),
            postselect_mode: PostSelectMode::BranchDrop,
            normalize_outputs: false,
            tail_threshold: DEFAULT_TAIL_THRESHOLD,
        }
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_theta(mut self, theta: f64) -> Self {
        self.theta = theta;
        self
    }

    pub fn with_dims(mut self, dims: (usize, usize)) -> Self {
        self.dims = dims;
        self
    }

    pub fn with_mode(mut self, mode: PostSelectMode) -> Self {
        self.postselect_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.alpha0.re, self.alpha0.im, self.phi, self.theta]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::NonFinite("experiment config"));
        }
        if self.dims.0 < 1 || self.dims.1 < 1 {
            return Err(Error::InvalidParameter("dims must be positive".into()));
        }
        if let PostSelectMode::HomodyneWindow { threshold } = self.postselect_mode {
            if threshold.is_nan() {
                return Err(Error::NonFinite("homodyne threshold"));
            }
        }
        Ok(())
    }

    /// `|<e^{i phi} alpha0 | e^{-i phi} alpha0>| = exp(-2 sin^2(phi) |alpha0|^2)`.
    pub fn branch_overlap(&self) -> f64 {
        (-2.0 * self.phi.sin().powi(2) * self.alpha0.norm_sqr()).exp()
    }

    fn prep_amplitude(&self, prep: Sign) -> C64 {
        self.alpha0 * C64::from_polar(1.0, prep.value() * self.phi)
    }
}

/// Per-mode truncation `ceil(|g alpha0|^2 + 8 |g alpha0| + margin)`. The
/// margin is 20 levels, widened to `ln(1e-10) / ln(tanh^2 r)` when the
/// amplifier's thermal tail needs more room.
pub fn default_dims(alpha0_mag: f64, gain: GainParam) -> (usize, usize) {
    let a = gain.g() * alpha0_mag;
    let t2 = gain.tanh_r().powi(2);
    let thermal = if t2 > 0.0 {
        1e-10f64.ln() / t2.ln()
    } else {
        0.0
    };
    let n = (a * a + 8.0 * a + thermal.max(20.0)).ceil() as usize;
    (n, n)
}

/// `(|e^{i phi} alpha0> + |e^{-i phi} alpha0>) |0> / √2`, without
/// renormalisation.
pub fn prepare_cat(config: &ExperimentConfig) -> Result<TwoModeState> {
    config.validate()?;
    let overlap = config.branch_overlap();
    if overlap >= 1e-6 {
        log::warn!(
            "cat components overlap ({overlap:.3e}); branch-drop post-selection is approximate"
        );
    }
    let idler = vacuum_vector(config.dims.1);
    let plus = product_state(
        &coherent_vector(config.prep_amplitude(Sign::Plus), config.dims.0)?,
        &idler,
    )?;
    let minus = product_state(
        &coherent_vector(config.prep_amplitude(Sign::Minus), config.dims.0)?,
        &idler,
    )?;
    let w = C64::new(FRAC_1_SQRT_2, 0.0);
    TwoModeState::superpose(&[(w, &plus), (w, &minus)])
}

/// One normalised branch after the amplifier and analyzer phase. Weights and
/// `theta` are left to the caller.
pub fn run_branch(config: &ExperimentConfig, prep: Sign, analyzer: Sign) -> Result<TwoModeState> {
    config.validate()?;
    let input = product_state(
        &coherent_vector(config.prep_amplitude(prep), config.dims.0)?,
        &vacuum_vector(config.dims.1),
    )?;
    let amplified = apply_two_mode_squeeze_with(&input, config.gain, config.tail_threshold)?;
    Ok(apply_signal_phase(
        &amplified,
        analyzer.value() * config.phi,
    ))
}

/// The four post-analyzer branches. They do not depend on `theta`, so sweeps
/// build them once.
#[derive(Debug, Clone)]
pub struct Branches {
    /// prep +, analyzer +
    pub pp: TwoModeState,
    /// prep +, analyzer - (phases cancel)
    pub pm: TwoModeState,
    /// prep -, analyzer + (phases cancel)
    pub mp: TwoModeState,
    /// prep -, analyzer -
    pub mm: TwoModeState,
}

impl Branches {
    pub fn build(config: &ExperimentConfig) -> Result<Self> {
        Ok(Branches {
            pp: run_branch(config, Sign::Plus, Sign::Plus)?,
            pm: run_branch(config, Sign::Plus, Sign::Minus)?,
            mp: run_branch(config, Sign::Minus, Sign::Plus)?,
            mm: run_branch(config, Sign::Minus, Sign::Minus)?,
        })
    }

    /// Amplitude weights `[pp, pm, mp, mm]` of the photon-post-selected state.
    pub fn weights(theta: f64) -> [C64; 4] {
        let w = 1.0 / (2.0 * std::f64::consts::SQRT_2);
        let e = C64::from_polar(w, theta);
        [e, C64::new(w, 0.0), e, C64::new(w, 0.0)]
    }

    pub fn as_array(&self) -> [&TwoModeState; 4] {
        [&self.pp, &self.pm, &self.mp, &self.mm]
    }

    /// `(e^{i theta} B++ + B+- + e^{i theta} B-+ + B--) / (2√2)`.
    pub fn four_branch_state(&self, theta: f64) -> Result<TwoModeState> {
        let w = Self::weights(theta);
        let s = self.as_array();
        TwoModeState::superpose(&[(w[0], s[0]), (w[1], s[1]), (w[2], s[2]), (w[3], s[3])])
    }

    /// `(B+- + e^{i theta} B-+) / (2√2)`.
    pub fn accepted_state(&self, theta: f64) -> Result<TwoModeState> {
        let w = Self::weights(theta);
        TwoModeState::superpose(&[(w[1], &self.pm), (w[2], &self.mp)])
    }

    /// `||B+- + e^{i theta} B-+||^2 / 8`.
    pub fn accepted_probability(&self, theta: f64) -> Result<f64> {
        Ok(self.accepted_state(theta)?.norm_sqr())
    }

    pub fn accepted_overlap(&self) -> Result<C64> {
        overlap(&self.pm, &self.mp)
    }
}

/// Accepted-branch probability for the configured `theta`.
pub fn accepted_probability(config: &ExperimentConfig) -> Result<f64> {
    if config.postselect_mode != PostSelectMode::BranchDrop {
        return Err(Error::ModeMismatch {
            expected: "branch_drop",
        });
    }
    let b1 = run_branch(config, Sign::Plus, Sign::Minus)?;
    let b2 = run_branch(config, Sign::Minus, Sign::Plus)?;
    let sum = b1.add_scaled(C64::from_polar(1.0, config.theta), &b2)?;
    Ok(sum.norm_sqr() / 8.0)
}

/// Homodyne-window acceptance probability of the full four-branch state.
/// Assumes `alpha0` real positive so accepted branches sit at positive `x`.
pub fn homodyne_probability(config: &ExperimentConfig) -> Result<f64> {
    let PostSelectMode::HomodyneWindow { threshold } = config.postselect_mode else {
        return Err(Error::ModeMismatch {
            expected: "homodyne_window",
        });
    };
    let state = Branches::build(config)?.four_branch_state(config.theta)?;
    homodyne_accept_prob(&state, threshold)
}

/// Post-selected output state at the configured `theta`, renormalised when
/// `normalize_outputs` is set.
pub fn postselected_state(config: &ExperimentConfig) -> Result<TwoModeState> {
    let branches = Branches::build(config)?;
    let state = match config.postselect_mode {
        PostSelectMode::BranchDrop => branches.accepted_state(config.theta)?,
        PostSelectMode::HomodyneWindow { .. } => branches.four_branch_state(config.theta)?,
    };
    if config.normalize_outputs {
        let n = state.norm_sqr();
        if n <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(state.scaled(C64::new(1.0 / n.sqrt(), 0.0)))
    } else {
        Ok(state)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibilityResult {
    pub samples: Vec<(f64, f64)>,
    pub p_max: f64,
    pub p_min: f64,
    pub visibility: f64,
    /// Closed-form value for `phi = π/2`.
    pub reference_visibility: f64,
    pub mode: PostSelectMode,
}

pub const MIN_SWEEP_POINTS: usize = 32;

/// Evaluates the post-selection probability over `theta_grid`, then refines
/// both extrema by golden-section search inside the bracketing grid cells.
pub fn visibility_sweep(config: &ExperimentConfig, theta_grid: &[f64]) -> Result<VisibilityResult> {
    if theta_grid.len() < MIN_SWEEP_POINTS {
        return Err(Error::InvalidParameter(format!(
            "theta grid needs at least {MIN_SWEEP_POINTS} points, got {}",
            theta_grid.len()
        )));
    }
    if theta_grid.iter().any(|t| !t.is_finite()) {
        return Err(Error::NonFinite("theta grid"));
    }
    let branches = Branches::build(config)?;
    let prob: Box<dyn Fn(f64) -> f64> = match config.postselect_mode {
        PostSelectMode::BranchDrop => {
            let ov = branches.accepted_overlap()?;
            let (n1, n2) = (branches.pm.norm_sqr(), branches.mp.norm_sqr());
            Box::new(move |theta| {
                let cross = 2.0 * (C64::from_polar(1.0, theta) * ov).re;
                ((n1 + n2 + cross) / 8.0).max(0.0)
            })
        }
        PostSelectMode::HomodyneWindow { threshold } => {
            let gram = windowed_gram(&branches.as_array(), threshold)?;
            Box::new(move |theta| {
                let w = Branches::weights(theta);
                let mut p = C64::new(0.0, 0.0);
                for j in 0..4 {
                    for k in 0..4 {
                        p += w[j].conj() * gram[[j, k]] * w[k];
                    }
                }
                p.re.max(0.0)
            })
        }
    };

    let samples: Vec<(f64, f64)> = theta_grid.iter().map(|&t| (t, prob(t))).collect();
    let mut sorted = samples.clone();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    let spacing = (sorted.last().unwrap().0 - sorted[0].0) / (sorted.len() - 1) as f64;

    let bracket = |i: usize| -> (f64, f64) {
        let lo = if i > 0 {
            sorted[i - 1].0
        } else {
            sorted[0].0 - spacing
        };
        let hi = if i + 1 < sorted.len() {
            sorted[i + 1].0
        } else {
            sorted[i].0 + spacing
        };
        (lo, hi)
    };
    let imax = (0..sorted.len())
        .max_by(|&a, &b| sorted[a].1.total_cmp(&sorted[b].1))
        .unwrap();
    let imin = (0..sorted.len())
        .min_by(|&a, &b| sorted[a].1.total_cmp(&sorted[b].1))
        .unwrap();
    let (lo, hi) = bracket(imax);
    let p_max = prob(golden_section(|t| -prob(t), lo, hi, 1e-6)).max(sorted[imax].1);
    let (lo, hi) = bracket(imin);
    let p_min = prob(golden_section(&prob, lo, hi, 1e-6)).min(sorted[imin].1);

    let visibility = if p_max + p_min > 0.0 {
        ((p_max - p_min) / (p_max + p_min)).clamp(0.0, 1.0)
    } else {
        0.0
    };
    Ok(VisibilityResult {
        samples,
        p_max,
        p_min,
        visibility,
        reference_visibility: visibility_closed_form(config.gain.g(), config.alpha0.norm())?,
        mode: config.postselect_mode,
    })
}

/// Minimiser of a unimodal `f` on `[lo, hi]` to width `tol`.
pub fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - inv_phi * (hi - lo);
    let mut d = lo + inv_phi * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    while (hi - lo).abs() > tol {
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - inv_phi * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + inv_phi * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

/// `n` evenly spaced angles on `[0, 2π)`.
pub fn uniform_theta_grid(n: usize) -> Vec<f64> {
    (0..n).map(|i| 2.0 * PI * i as f64 / n as f64).collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WhichPathReport {
    /// `sqrt(g^2 - 1) |alpha0|`
    pub idler_displacement: f64,
    /// `|<b1|b2>|` between the two accepted branches.
    pub branch_overlap: f64,
}

pub fn idler_which_path_report(config: &ExperimentConfig) -> Result<WhichPathReport> {
    let b1 = run_branch(config, Sign::Plus, Sign::Minus)?;
    let b2 = run_branch(config, Sign::Minus, Sign::Plus)?;
    Ok(WhichPathReport {
        idler_displacement: config.gain.sinh_r() * config.alpha0.norm(),
        branch_overlap: overlap(&b1, &b2)?.norm(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{Mode, TwoModeState};

    fn config(g: f64, alpha0: f64) -> ExperimentConfig {
        ExperimentConfig::new(C64::new(alpha0, 0.0), GainParam::from_gain(g).unwrap())
    }

    fn coherent(alpha: C64, dims: (usize, usize)) -> TwoModeState {
        product_state(
            &coherent_vector(alpha, dims.0).unwrap(),
            &vacuum_vector(dims.1),
        )
        .unwrap()
    }

    fn max_diff(a: &TwoModeState, b: &TwoModeState) -> f64 {
        a.amps()
            .iter()
            .zip(b.amps().iter())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    #[test]
    fn default_dims_rule() {
        let g = GainParam::from_gain(1.25).unwrap();
        assert_eq!(default_dims(2.0, g), (49, 49));
        assert_eq!(
            default_dims(1.0, GainParam::from_gain(1.5).unwrap()),
            (54, 54)
        );
        assert_eq!(default_dims(0.0, GainParam::unity()), (20, 20));
    }

    #[test]
    fn degenerate_cat_doubles_norm() {
        let cfg = config(1.0, 1.5).with_phi(0.0);
        let cat = prepare_cat(&cfg).unwrap();
        let single = coherent(C64::new(1.5, 0.0), cfg.dims);
        let expected = single.scaled(C64::new(std::f64::consts::SQRT_2, 0.0));
        assert!(max_diff(&cat, &expected) < 1e-14);
        assert!((cat.norm_sqr() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn cat_norm_and_photons() {
        let cat = prepare_cat(&config(1.0, 2.0)).unwrap();
        // <2i|-2i> = e^{-8}; the cross term also shifts <n> by -4 e^{-8}
        let e8 = (-8.0f64).exp();
        assert!((cat.norm_sqr() - (1.0 + e8)).abs() < 1e-10);
        assert!((cat.norm_sqr() - 1.0).abs() < 1e-3);
        assert!((cat.mean_photon(Mode::Signal) - (4.0 - 4.0 * e8)).abs() < 1e-10);
        assert!((cat.mean_photon(Mode::Signal) - 4.0).abs() < 2e-3);
    }

    #[test]
    fn unit_gain_branches() {
        let cfg = config(1.0, 1.7).with_phi(0.9);
        let pm = run_branch(&cfg, Sign::Plus, Sign::Minus).unwrap();
        assert!(max_diff(&pm, &coherent(cfg.alpha0, cfg.dims)) < 1e-10);
        let pp = run_branch(&cfg, Sign::Plus, Sign::Plus).unwrap();
        let rotated = coherent(cfg.alpha0 * C64::from_polar(1.0, 2.0 * cfg.phi), cfg.dims);
        assert!(max_diff(&pp, &rotated) < 1e-10);
    }

    #[test]
    fn zero_phi_branches_coincide() {
        let cfg = config(1.2, 1.0).with_phi(0.0);
        let b1 = run_branch(&cfg, Sign::Plus, Sign::Minus).unwrap();
        let b2 = run_branch(&cfg, Sign::Minus, Sign::Plus).unwrap();
        assert!((overlap(&b1, &b2).unwrap().norm() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn unit_gain_probability_law() {
        for (theta, expected) in [(0.0, 0.5), (FRAC_PI_2, 0.25), (PI, 0.0)] {
            let p = accepted_probability(&config(1.0, 2.0).with_theta(theta)).unwrap();
            assert!((p - expected).abs() < 1e-9, "theta {theta}: {p}");
        }
    }

    #[test]
    fn complementary_angles_sum_is_constant() {
        let cfg = config(1.1, 1.5);
        let sums: Vec<f64> = [0.0, 0.4, 1.3, 2.2]
            .iter()
            .map(|&t| {
                accepted_probability(&cfg.clone().with_theta(t)).unwrap()
                    + accepted_probability(&cfg.clone().with_theta(t + PI)).unwrap()
            })
            .collect();
        for s in &sums {
            assert!((s - sums[0]).abs() < 1e-12);
        }
    }

    #[test]
    fn two_point_visibility_matches_overlap() {
        let cfg = config(1.1, 2.0);
        let p0 = accepted_probability(&cfg.clone().with_theta(0.0)).unwrap();
        let p1 = accepted_probability(&cfg.clone().with_theta(PI)).unwrap();
        let v = (p0 - p1) / (p0 + p1);
        assert!((v - 0.2157).abs() < 1e-3, "{v}");
    }

    #[test]
    fn wrong_mode_is_rejected() {
        let cfg = config(1.0, 1.0).with_mode(PostSelectMode::HomodyneWindow { threshold: 0.0 });
        assert!(matches!(
            accepted_probability(&cfg),
            Err(Error::ModeMismatch { .. })
        ));
        assert!(matches!(
            homodyne_probability(&config(1.0, 1.0)),
            Err(Error::ModeMismatch { .. })
        ));
    }

    #[test]
    fn homodyne_window_unit_gain() {
        let cfg = config(1.0, 3.0).with_mode(PostSelectMode::HomodyneWindow { threshold: 0.0 });
        let p0 = homodyne_probability(&cfg.clone().with_theta(0.0)).unwrap();
        let p1 = homodyne_probability(&cfg.clone().with_theta(PI)).unwrap();
        assert!((p0 - 0.5).abs() < 1e-3, "{p0}");
        assert!(p1.abs() < 1e-3, "{p1}");
    }

    #[test]
    fn wide_open_window_keeps_everything() {
        let open = config(1.0, 3.0).with_mode(PostSelectMode::HomodyneWindow { threshold: -1e6 });
        for theta in [0.0, 1.0, PI] {
            let p = homodyne_probability(&open.clone().with_theta(theta)).unwrap();
            let full = Branches::build(&open)
                .unwrap()
                .four_branch_state(theta)
                .unwrap()
                .norm_sqr();
            assert!((p - full).abs() < 1e-6);
            // accepted pair at +alpha0 and rejected pair at -alpha0 each carry
            // |1 + e^{i theta}|^2 / 8
            let expected = 2.0 * (2.0 + 2.0 * theta.cos()) / 8.0;
            assert!((p - expected).abs() < 1e-6);
        }
    }

    #[test]
    fn sweep_at_unit_gain_is_fully_visible() {
        let r = visibility_sweep(&config(1.0, 1.0), &uniform_theta_grid(64)).unwrap();
        assert!((r.visibility - 1.0).abs() < 1e-6);
        assert_eq!(r.reference_visibility, 1.0);
        assert_eq!(r.samples.len(), 64);
        assert!(r.p_max >= r.p_min && r.p_min >= 0.0);
    }

    #[test]
    fn sweep_matches_closed_form() {
        let r = visibility_sweep(&config(1.5, 1.0), &uniform_theta_grid(64)).unwrap();
        assert!((r.visibility - 0.13987).abs() < 1e-3);
        assert!((r.reference_visibility - 0.13987).abs() < 1e-5);
    }

    #[test]
    fn sweep_small_gain_limit() {
        let r = visibility_sweep(&config(1.01, 2.0), &uniform_theta_grid(64)).unwrap();
        assert!((r.visibility - 0.8237).abs() < 1e-3, "{}", r.visibility);
        let limit = (-4.0f64 * 0.01 * 4.0).exp();
        assert!((limit - 0.8521).abs() < 1e-4);
    }

    #[test]
    fn sweep_needs_enough_points() {
        assert!(visibility_sweep(&config(1.0, 1.0), &uniform_theta_grid(16)).is_err());
    }

    #[test]
    fn which_path_report() {
        let r = idler_which_path_report(&config(1.0, 1.0)).unwrap();
        assert_eq!(r.idler_displacement, 0.0);
        assert!((r.branch_overlap - 1.0).abs() < 1e-10);

        let cfg = config(1.25, 2.0);
        let r = idler_which_path_report(&cfg).unwrap();
        assert!((r.idler_displacement - 1.5).abs() < 1e-12);
        let v = visibility_sweep(&cfg, &uniform_theta_grid(64)).unwrap();
        assert!((r.branch_overlap - v.visibility).abs() < 1e-8);
    }

    #[test]
    fn golden_section_finds_minimum() {
        let x = golden_section(|t| (t - 0.3).powi(2), -1.0, 2.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-8);
    }
}
