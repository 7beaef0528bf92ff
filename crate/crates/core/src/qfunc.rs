//! Closed-form Husimi Q-function of the interferometer.
//!
//! Each density-matrix component `|B_j><B_k|` contributes a complex Gaussian
//! in the signal (`alpha`) and idler (`beta`) phase-space variables. Coherent
//! projections of a branch `U(chi) S |gamma, 0>` have the normally ordered
//! form
//!
//! ```text
//! <alpha, beta| U(chi) S |gamma, 0> = (1/g) exp(-|alpha|²/2 - |beta|²/2 - |gamma|²/2
//!                                              - t e^{i chi} alpha* beta*
//!                                              + e^{i chi} alpha* gamma / g)
//! ```
//!
//! with `t = sqrt(g² - 1)/g`, so the product `f_j conj(f_k)` is again a
//! Gaussian and its phase-space integral is exact.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fock::{apply_two_mode_squeeze, coherent_vector, GainParam, TwoModeState};
use crate::pipeline::ExperimentConfig;

/// Imaginary residue tolerated when summing a Hermitian set of terms.
pub const IMAGINARY_TOLERANCE: f64 = 1e-12;

/// `prefactor * exp(E(alpha, beta))` with
/// `E = c_aa|a|² + c_bb|b|² + u a* + u' a + w b* + w' b + m a*b* + m' ab + c0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianQTerm {
    pub prefactor: C64,
    pub c_aa: C64,
    pub c_bb: C64,
    /// coefficient of `alpha*`
    pub u: C64,
    /// coefficient of `alpha`
    pub u_prime: C64,
    /// coefficient of `beta*`
    pub w: C64,
    /// coefficient of `beta`
    pub w_prime: C64,
    /// coefficient of `alpha* beta*`
    pub m: C64,
    /// coefficient of `alpha beta`
    pub m_prime: C64,
    pub c0: C64,
}

impl GaussianQTerm {
    pub fn exponent(&self, alpha: C64, beta: C64) -> C64 {
        self.c_aa * alpha.norm_sqr()
            + self.c_bb * beta.norm_sqr()
            + self.u * alpha.conj()
            + self.u_prime * alpha
            + self.w * beta.conj()
            + self.w_prime * beta
            + self.m * alpha.conj() * beta.conj()
            + self.m_prime * alpha * beta
            + self.c0
    }

    pub fn eval(&self, alpha: C64, beta: C64) -> C64 {
        self.prefactor * self.exponent(alpha, beta).exp()
    }

    /// `∫ d²alpha d²beta` of the term, integrating `beta` then `alpha` with
    /// `∫ d²z exp(-λ|z|² + a z* + b z) = (π/λ) exp(ab/λ)`.
    pub fn integrate(&self) -> Result<C64> {
        let mm = self.m * self.m_prime;
        if mm.norm() >= 1.0 {
            return Err(Error::DivergentTerm(mm.norm()));
        }
        let lam_b = -self.c_bb;
        if lam_b.re <= 0.0 {
            return Err(Error::DivergentTerm(mm.norm()));
        }
        // after beta: exp((w + m a*)(w' + m' a) / lam_b)
        let lam_a = -self.c_aa - mm / lam_b;
        if lam_a.re <= 0.0 {
            return Err(Error::DivergentTerm(mm.norm()));
        }
        let a = self.u + self.w_prime * self.m / lam_b;
        let b = self.u_prime + self.w * self.m_prime / lam_b;
        let exponent = self.c0 + self.w * self.w_prime / lam_b + a * b / lam_a;
        Ok(self.prefactor * PI * PI / (lam_a * lam_b) * exponent.exp())
    }

    /// Real 4x4 matrix `A` and vector `l` with `Re E = vᵀ A v + lᵀ v + const`,
    /// `v = (Re a, Im a, Re b, Im b)`.
    fn real_quadratic(&self) -> ([[f64; 4]; 4], [f64; 4]) {
        // Re(K a b) with K = m' + conj(m)
        let k = self.m_prime + self.m.conj();
        let (kr, ki) = (k.re, k.im);
        let a = self.c_aa.re;
        let b = self.c_bb.re;
        let mat = [
            [a, 0.0, kr / 2.0, -ki / 2.0],
            [0.0, a, -ki / 2.0, -kr / 2.0],
            [kr / 2.0, -ki / 2.0, b, 0.0],
            [-ki / 2.0, -kr / 2.0, 0.0, b],
        ];
        let lin = [
            self.u.re + self.u_prime.re,
            self.u.im - self.u_prime.im,
            self.w.re + self.w_prime.re,
            self.w.im - self.w_prime.im,
        ];
        (mat, lin)
    }

    /// Integration box around the peak of `|term|`: centre at the stationary
    /// point of `Re E`, half-width `6 / sqrt(smallest curvature)` on every
    /// real axis.
    pub fn default_box(&self, points: usize) -> QuadratureBox {
        let (mat, lin) = self.real_quadratic();
        // grad = 2 A v + l = 0
        let mut sys = [[0.0; 5]; 4];
        for i in 0..4 {
            for j in 0..4 {
                sys[i][j] = 2.0 * mat[i][j];
            }
            sys[i][4] = -lin[i];
        }
        let v = solve4(sys);
        let a = -self.c_aa.re;
        let b = -self.c_bb.re;
        let k = (self.m_prime + self.m.conj()).norm() / 2.0;
        let curvature = 0.5 * (a + b) - (0.25 * (a - b).powi(2) + k * k).sqrt();
        QuadratureBox {
            center: v,
            half_width: 6.0 / curvature.max(1e-3).sqrt(),
            points,
        }
    }

    /// Tensor-product trapezoid over the box. Only the bilinear factor is
    /// evaluated per (alpha, beta) pair.
    pub fn integrate_numeric(&self, bx: &QuadratureBox) -> C64 {
        let axis = |c: f64| -> Vec<f64> {
            let h = 2.0 * bx.half_width / (bx.points - 1) as f64;
            (0..bx.points)
                .map(|i| c - bx.half_width + h * i as f64)
                .collect()
        };
        let weights: Vec<f64> = {
            let h = 2.0 * bx.half_width / (bx.points - 1) as f64;
            (0..bx.points)
                .map(|i| {
                    if i == 0 || i == bx.points - 1 {
                        0.5 * h
                    } else {
                        h
                    }
                })
                .collect()
        };
        let plane = |cx: f64, cy: f64| -> Vec<(C64, f64)> {
            let xs = axis(cx);
            let ys = axis(cy);
            let mut pts = Vec::with_capacity(xs.len() * ys.len());
            for (i, x) in xs.iter().enumerate() {
                for (j, y) in ys.iter().enumerate() {
                    pts.push((C64::new(*x, *y), weights[i] * weights[j]));
                }
            }
            pts
        };
        let alphas = plane(bx.center[0], bx.center[1]);
        let betas = plane(bx.center[2], bx.center[3]);
        let alpha_part: Vec<C64> = alphas
            .iter()
            .map(|(a, wt)| {
                (self.c_aa * a.norm_sqr() + self.u * a.conj() + self.u_prime * a + self.c0).exp()
                    * *wt
            })
            .collect();
        let beta_part: Vec<C64> = betas
            .iter()
            .map(|(b, wt)| {
                (self.c_bb * b.norm_sqr() + self.w * b.conj() + self.w_prime * b).exp() * *wt
            })
            .collect();
        let rows: Vec<C64> = alphas
            .par_iter()
            .zip(alpha_part.par_iter())
            .map(|((a, _), pa)| {
                let mut acc = C64::new(0.0, 0.0);
                for ((b, _), pb) in betas.iter().zip(&beta_part) {
                    let bil = self.m * a.conj() * b.conj() + self.m_prime * a * b;
                    acc += bil.exp() * pb;
                }
                acc * pa
            })
            .collect();
        self.prefactor * rows.iter().sum::<C64>()
    }
}

/// Hypercube `center ± half_width` in `(Re a, Im a, Re b, Im b)`, sampled
/// with `points` nodes per axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureBox {
    pub center: [f64; 4],
    pub half_width: f64,
    pub points: usize,
}

pub const DEFAULT_QUADRATURE_POINTS: usize = 61;

fn solve4(mut m: [[f64; 5]; 4]) -> [f64; 4] {
    for col in 0..4 {
        let pivot = (col..4)
            .max_by(|&a, &b| m[a][col].abs().total_cmp(&m[b][col].abs()))
            .unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        if p.abs() < 1e-300 {
            continue;
        }
        for row in 0..4 {
            if row != col {
                let f = m[row][col] / p;
                let pivot = m[col];
                for (v, pv) in m[row].iter_mut().zip(pivot).skip(col) {
                    *v -= f * pv;
                }
            }
        }
    }
    let mut x = [0.0; 4];
    for i in 0..4 {
        x[i] = if m[i][i].abs() < 1e-300 {
            0.0
        } else {
            m[i][4] / m[i][i]
        };
    }
    x
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QStage {
    /// After the amplifier, before the analyzer.
    PostAmplifier,
    /// After the analyzer, keeping only the two accepted branches.
    PostAnalyzer,
}

/// Terms labelled by (ket branch, bra branch): `[++, +-, -+, --]`.
#[derive(Debug, Clone, PartialEq)]
pub struct QTermSet {
    pub terms: [GaussianQTerm; 4],
}

impl QTermSet {
    pub const LABELS: [&'static str; 4] = ["++", "+-", "-+", "--"];
}

/// One branch `weight * U(chi) S |gamma, 0>`.
#[derive(Debug, Clone, Copy)]
struct BranchSpec {
    weight: C64,
    gamma: C64,
    chi: f64,
}

fn cross_term(j: &BranchSpec, k: &BranchSpec, gain: GainParam) -> GaussianQTerm {
    let g = gain.g();
    let t = gain.tanh_r();
    let ej = C64::from_polar(1.0, j.chi);
    let ek = C64::from_polar(1.0, -k.chi);
    let one = C64::new(1.0, 0.0);
    GaussianQTerm {
        prefactor: j.weight * k.weight.conj() / (PI * PI * g * g),
        c_aa: -one,
        c_bb: -one,
        u: ej * j.gamma / g,
        u_prime: ek * k.gamma.conj() / g,
        w: C64::new(0.0, 0.0),
        w_prime: C64::new(0.0, 0.0),
        m: -t * ej,
        m_prime: -t * ek,
        c0: C64::new(-0.5 * (j.gamma.norm_sqr() + k.gamma.norm_sqr()), 0.0),
    }
}

pub fn build_q_terms(config: &ExperimentConfig, stage: QStage) -> QTermSet {
    let plus = config.alpha0 * C64::from_polar(1.0, config.phi);
    let minus = config.alpha0 * C64::from_polar(1.0, -config.phi);
    let branches = match stage {
        QStage::PostAmplifier => {
            let w = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
            [
                BranchSpec {
                    weight: w,
                    gamma: plus,
                    chi: 0.0,
                },
                BranchSpec {
                    weight: w,
                    gamma: minus,
                    chi: 0.0,
                },
            ]
        }
        QStage::PostAnalyzer => {
            let w = 1.0 / (2.0 * std::f64::consts::SQRT_2);
            [
                BranchSpec {
                    weight: C64::new(w, 0.0),
                    gamma: plus,
                    chi: -config.phi,
                },
                BranchSpec {
                    weight: C64::from_polar(w, config.theta),
                    gamma: minus,
                    chi: config.phi,
                },
            ]
        }
    };
    let [p, m] = branches;
    QTermSet {
        terms: [
            cross_term(&p, &p, config.gain),
            cross_term(&p, &m, config.gain),
            cross_term(&m, &p, config.gain),
            cross_term(&m, &m, config.gain),
        ],
    }
}

/// `Q(alpha, beta)`; errors if the four terms fail to sum to a real number.
pub fn q_value(terms: &QTermSet, alpha: C64, beta: C64) -> Result<f64> {
    let total: C64 = terms.terms.iter().map(|t| t.eval(alpha, beta)).sum();
    if total.im.abs() > IMAGINARY_TOLERANCE {
        return Err(Error::ImaginaryResidue(total.im.abs()));
    }
    Ok(total.re)
}

/// Post-selection probability `∫ Q d²alpha d²beta` in closed form.
pub fn integrate_probability(terms: &QTermSet) -> Result<f64> {
    let mut total = C64::new(0.0, 0.0);
    for t in &terms.terms {
        total += t.integrate()?;
    }
    if total.im.abs() > IMAGINARY_TOLERANCE {
        return Err(Error::ImaginaryResidue(total.im.abs()));
    }
    Ok(total.re.max(0.0))
}

/// `exp(-2|alpha0|²(g²-1)/(2g²-1)) / (2g²-1)`, valid for `phi = π/2`.
pub fn visibility_closed_form(g: f64, alpha0_mag: f64) -> Result<f64> {
    if !g.is_finite() || g < 1.0 {
        return Err(Error::InvalidGain(g));
    }
    if !alpha0_mag.is_finite() || alpha0_mag < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "|alpha0| must be finite and ≥ 0, got {alpha0_mag}"
        )));
    }
    let gm1 = (g - 1.0) * (g + 1.0);
    let d = 2.0 * g * g - 1.0;
    Ok((-2.0 * alpha0_mag * alpha0_mag * gm1 / d).exp() / d)
}

/// Idler-traced signal Q-function
/// `(1/π) sum_m |sum_n conj(<n|alpha>) amps[n][m]|²`.
pub fn marginal_q(state: &TwoModeState, alpha: C64) -> Result<f64> {
    let (ns, ni) = state.dims();
    let coh = coherent_vector(alpha, ns)?;
    let amps = state.amps();
    let mut total = 0.0;
    for m in 0..ni {
        let proj: C64 = (0..ns).map(|n| coh.amps[n].conj() * amps[[n, m]]).sum();
        total += proj.norm_sqr();
    }
    Ok(total / PI)
}

/// Maximum relative deviation from `Q_out(alpha) = Q_in(alpha/g)/g²` over
/// `grid`, with the input state amplified by `gain`.
pub fn amplifier_scaling_check(
    state_in: &TwoModeState,
    gain: GainParam,
    grid: &[C64],
) -> Result<f64> {
    if state_in.idler_excited_mass() > 1e-12 {
        return Err(Error::InvalidParameter(
            "scaling law needs the idler in vacuum".into(),
        ));
    }
    let state_out = apply_two_mode_squeeze(state_in, gain)?;
    let g = gain.g();
    let mut outs = Vec::with_capacity(grid.len());
    let mut preds = Vec::with_capacity(grid.len());
    let mut peak: f64 = 0.0;
    for &alpha in grid {
        let q_in = marginal_q(state_in, alpha / g)?;
        peak = peak.max(q_in);
        preds.push(q_in / (g * g));
        outs.push(marginal_q(&state_out, alpha)?);
    }
    Ok(outs
        .iter()
        .zip(&preds)
        .map(|(o, p)| (o - p).abs() / (peak * 1e-6).max(*p))
        .fold(0.0, f64::max))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fock::{product_state, vacuum_vector};
    use std::f64::consts::FRAC_PI_2;

    fn config(g: f64, alpha0: f64) -> ExperimentConfig {
        ExperimentConfig::new(C64::new(alpha0, 0.0), GainParam::from_gain(g).unwrap())
    }

    #[test]
    fn coherent_term_peak() {
        let cfg = config(1.0, 2.0);
        let set = build_q_terms(&cfg, QStage::PostAmplifier);
        let peak = set.terms[0].eval(C64::from_polar(2.0, FRAC_PI_2), C64::new(0.0, 0.0));
        assert!((peak.re - 1.0 / (2.0 * PI * PI)).abs() < 1e-14);
        assert!(peak.im.abs() < 1e-15);
    }

    #[test]
    fn unit_gain_has_no_coupling() {
        let set = build_q_terms(&config(1.0, 1.3), QStage::PostAnalyzer);
        for t in &set.terms {
            assert_eq!(t.m.norm(), 0.0);
            assert_eq!(t.m_prime.norm(), 0.0);
        }
    }

    #[test]
    fn theta_periodicity() {
        let a = build_q_terms(&config(1.2, 1.0).with_theta(0.0), QStage::PostAnalyzer);
        let b = build_q_terms(&config(1.2, 1.0).with_theta(2.0 * PI), QStage::PostAnalyzer);
        assert!((a.terms[1].prefactor - b.terms[1].prefactor).norm() < 1e-15);
    }

    #[test]
    fn amplifier_terms_integrable() {
        let set = build_q_terms(&config(1.5, 1.0), QStage::PostAnalyzer);
        let t2 = (1.5f64 * 1.5 - 1.0) / (1.5 * 1.5);
        for t in &set.terms {
            assert!(((t.m * t.m_prime).norm() - t2).abs() < 1e-14);
            assert_eq!(t.c_aa, C64::new(-1.0, 0.0));
        }
    }

    #[test]
    fn cross_terms_are_conjugate() {
        let set = build_q_terms(&config(1.25, 1.2).with_theta(0.7), QStage::PostAnalyzer);
        for (a, b) in [(0.3, -0.2), (1.4, 0.9), (-0.5, 2.0)] {
            let alpha = C64::new(a, b);
            let beta = C64::new(b, -a);
            let x = set.terms[1].eval(alpha, beta);
            let y = set.terms[2].eval(alpha, beta);
            assert!((x - y.conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn single_term_integrates_to_weight() {
        let set = build_q_terms(&config(1.0, 2.0), QStage::PostAmplifier);
        let p = set.terms[0].integrate().unwrap();
        assert!((p.re - 0.5).abs() < 1e-14 && p.im.abs() < 1e-15);
    }

    #[test]
    fn unit_gain_probability() {
        let p =
            integrate_probability(&build_q_terms(&config(1.0, 2.0), QStage::PostAnalyzer)).unwrap();
        assert!((p - 0.5).abs() < 1e-6);
    }

    #[test]
    fn integrated_visibility_is_closed_form() {
        let cfg = config(1.5, 1.0);
        let p0 = integrate_probability(&build_q_terms(
            &cfg.clone().with_theta(0.0),
            QStage::PostAnalyzer,
        ))
        .unwrap();
        let p1 = integrate_probability(&build_q_terms(
            &cfg.clone().with_theta(PI),
            QStage::PostAnalyzer,
        ))
        .unwrap();
        let v = (p0 - p1) / (p0 + p1);
        assert!((v - 0.13987).abs() < 1e-5);
        assert!((v - visibility_closed_form(1.5, 1.0).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn divergent_term_rejected() {
        let mut t = build_q_terms(&config(1.2, 1.0), QStage::PostAmplifier).terms[0];
        t.m = C64::new(1.0, 0.0);
        t.m_prime = C64::new(-1.0, 0.0);
        assert!(matches!(t.integrate(), Err(Error::DivergentTerm(_))));
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(visibility_closed_form(1.0, 3.0).unwrap(), 1.0);
        assert!((visibility_closed_form(1.5, 1.0).unwrap() - 0.13987).abs() < 1e-5);
        assert!((visibility_closed_form(1.1, 2.0).unwrap() - 0.21572).abs() < 1e-5);
        assert!(visibility_closed_form(0.9, 1.0).is_err());
    }

    #[test]
    fn marginal_q_of_coherent_state() {
        let a0 = C64::new(1.0, 0.5);
        let s = product_state(&coherent_vector(a0, 40).unwrap(), &vacuum_vector(3)).unwrap();
        assert!((marginal_q(&s, a0).unwrap() - 1.0 / PI).abs() < 1e-12);
        let far = a0 + C64::new(0.0, 2.0);
        assert!((marginal_q(&s, far).unwrap() - (-4.0f64).exp() / PI).abs() < 1e-12);

        // ∫ Q d²alpha = 1 on a trapezoid grid, |alpha - alpha0| ≤ 6
        let n = 121;
        let h = 12.0 / (n - 1) as f64;
        let mut total = 0.0;
        for i in 0..n {
            for j in 0..n {
                let alpha = a0 + C64::new(-6.0 + h * i as f64, -6.0 + h * j as f64);
                let wi = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
                let wj = if j == 0 || j == n - 1 { 0.5 } else { 1.0 };
                total += wi * wj * h * h * marginal_q(&s, alpha).unwrap();
            }
        }
        assert!((total - 1.0).abs() < 1e-4);
    }

    #[test]
    fn scaling_check_unit_gain() {
        let s = product_state(
            &coherent_vector(C64::new(1.0, 0.0), 30).unwrap(),
            &vacuum_vector(30),
        )
        .unwrap();
        let grid: Vec<C64> = (0..21)
            .map(|i| C64::new(-2.0 + 0.25 * i as f64, 0.1))
            .collect();
        assert!(amplifier_scaling_check(&s, GainParam::unity(), &grid).unwrap() < 1e-10);
    }

    #[test]
    fn scaling_check_rejects_excited_idler() {
        let s = product_state(
            &vacuum_vector(8),
            &coherent_vector(C64::new(0.5, 0.0), 8).unwrap(),
        )
        .unwrap();
        assert!(amplifier_scaling_check(&s, GainParam::unity(), &[C64::new(0.0, 0.0)]).is_err());
    }
}
