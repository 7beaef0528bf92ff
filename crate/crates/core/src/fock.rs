//! Truncated two-mode Fock space: states, the experiment's exact operators,
//! and quadrature moments.
//!
//! Mode `a` is the signal, mode `b` the idler. Amplitudes are stored as
//! `amps[[n, m]] = <n_signal, m_idler | psi>`.

use ndarray::{Array2, Axis};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Default ceiling on accumulated truncation mass before an amplifier pass
/// reports overflow.
pub const DEFAULT_TAIL_THRESHOLD: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct TwoModeState {
    amps: Array2<C64>,
    tail_bound: f64,
}

impl TwoModeState {
    pub fn new(amps: Array2<C64>, tail_bound: f64) -> Result<Self> {
        if amps.nrows() == 0 || amps.ncols() == 0 {
            return Err(Error::InvalidParameter(
                "state dims must be positive".into(),
            ));
        }
        if amps.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite("state amplitudes"));
        }
        if !tail_bound.is_finite() || tail_bound < 0.0 {
            return Err(Error::NonFinite("tail bound"));
        }
        Ok(TwoModeState { amps, tail_bound })
    }

    pub fn vacuum(dims: (usize, usize)) -> Self {
        let mut amps = Array2::zeros(dims);
        amps[[0, 0]] = C64::new(1.0, 0.0);
        TwoModeState {
            amps,
            tail_bound: 0.0,
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        self.amps.dim()
    }

    pub fn amps(&self) -> &Array2<C64> {
        &self.amps
    }

    /// Upper bound on probability mass lost to truncation so far.
    pub fn tail_bound(&self) -> f64 {
        self.tail_bound
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn scaled(&self, c: C64) -> Self {
        TwoModeState {
            amps: self.amps.mapv(|z| z * c),
            tail_bound: c.norm_sqr() * self.tail_bound,
        }
    }

    /// `self + c * other`. The tail bound follows the triangle inequality on
    /// the discarded components.
    pub fn add_scaled(&self, c: C64, other: &TwoModeState) -> Result<Self> {
        check_dims(self, other)?;
        let amps = &self.amps + &other.amps.mapv(|z| z * c);
        let tail = (self.tail_bound.sqrt() + c.norm() * other.tail_bound.sqrt()).powi(2);
        Ok(TwoModeState {
            amps,
            tail_bound: tail,
        })
    }

    /// Linear combination `sum_j coeffs[j] * states[j]`.
    pub fn superpose(terms: &[(C64, &TwoModeState)]) -> Result<Self> {
        let (c0, s0) = terms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empty superposition".into()))?;
        let mut acc = s0.scaled(*c0);
        for (c, s) in &terms[1..] {
            acc = acc.add_scaled(*c, s)?;
        }
        Ok(acc)
    }

    pub fn mean_photon(&self, mode: Mode) -> f64 {
        self.amps
            .indexed_iter()
            .map(|((n, m), z)| {
                let k = match mode {
                    Mode::Signal => n,
                    Mode::Idler => m,
                };
                k as f64 * z.norm_sqr()
            })
            .sum()
    }

    /// Probability mass with the idler outside its vacuum.
    pub fn idler_excited_mass(&self) -> f64 {
        self.amps
            .indexed_iter()
            .filter(|((_, m), _)| *m > 0)
            .map(|(_, z)| z.norm_sqr())
            .sum()
    }
}

fn check_dims(a: &TwoModeState, b: &TwoModeState) -> Result<()> {
    if a.dims() != b.dims() {
        return Err(Error::DimensionMismatch {
            left: a.dims(),
            right: b.dims(),
        });
    }
    Ok(())
}

/// Amplifier gain `g = cosh r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainParam {
    g: f64,
    r: f64,
    sinh_r: f64,
}

impl GainParam {
    pub fn from_gain(g: f64) -> Result<Self> {
        if !g.is_finite() || g < 1.0 {
            return Err(Error::InvalidGain(g));
        }
        // (g-1)(g+1) keeps precision for g close to 1
        let sinh_r = ((g - 1.0) * (g + 1.0)).sqrt();
        Ok(GainParam {
            g,
            r: sinh_r.asinh(),
            sinh_r,
        })
    }

    pub fn from_squeeze(r: f64) -> Result<Self> {
        if !r.is_finite() || r < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "squeeze parameter must be finite and ≥ 0, got {r}"
            )));
        }
        Ok(GainParam {
            g: r.cosh(),
            r,
            sinh_r: r.sinh(),
        })
    }

    pub fn unity() -> Self {
        GainParam {
            g: 1.0,
            r: 0.0,
            sinh_r: 0.0,
        }
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn r(&self) -> f64 {
        self.r
    }

    /// `sqrt(g^2 - 1)`.
    pub fn sinh_r(&self) -> f64 {
        self.sinh_r
    }

    /// `sqrt(g^2 - 1) / g`.
    pub fn tanh_r(&self) -> f64 {
        self.sinh_r / self.g
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Signal,
    Idler,
}

/// `X = (a + a†)/√2`, `P = (a - a†)/(√2 i)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quadrature {
    X,
    P,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QuadratureSpec {
    pub mode: Mode,
    pub which: Quadrature,
}

impl QuadratureSpec {
    pub fn new(mode: Mode, which: Quadrature) -> Self {
        QuadratureSpec { mode, which }
    }
}

/// Truncated coherent-state amplitudes together with the Poisson mass beyond
/// the last kept level.
#[derive(Debug, Clone, PartialEq)]
pub struct CoherentVector {
    pub amps: Vec<C64>,
    pub tail: f64,
}

pub fn coherent_vector(alpha: C64, n: usize) -> Result<CoherentVector> {
    if !alpha.re.is_finite() || !alpha.im.is_finite() {
        return Err(Error::NonFinite("coherent amplitude"));
    }
    if n == 0 {
        return Err(Error::InvalidParameter(
            "coherent vector length must be ≥ 1".into(),
        ));
    }
    let mean = alpha.norm_sqr();
    let mut amps = Vec::with_capacity(n);
    let mut c = C64::new((-0.5 * mean).exp(), 0.0);
    amps.push(c);
    for k in 1..n {
        c = c * alpha / (k as f64).sqrt();
        amps.push(c);
    }
    Ok(CoherentVector {
        tail: poisson_tail(mean, n, &amps),
        amps,
    })
}

/// Mass of levels `k >= n`. Summed forward past the Poisson mode so tiny tails
/// are not lost to cancellation.
fn poisson_tail(mean: f64, n: usize, kept: &[C64]) -> f64 {
    if (n as f64) > mean + 1.0 {
        let mut p = kept[n - 1].norm_sqr() * mean / n as f64;
        let mut sum = 0.0;
        let mut k = n;
        while p > 0.0 && p > 1e-18 * sum && k < n + 100_000 {
            sum += p;
            k += 1;
            p *= mean / k as f64;
        }
        sum
    } else {
        let kept_mass: f64 = kept.iter().map(|z| z.norm_sqr()).sum();
        (1.0 - kept_mass).max(0.0)
    }
}

pub fn product_state(signal: &CoherentVector, idler: &CoherentVector) -> Result<TwoModeState> {
    let (ns, ni) = (signal.amps.len(), idler.amps.len());
    let amps = Array2::from_shape_fn((ns, ni), |(n, m)| signal.amps[n] * idler.amps[m]);
    TwoModeState::new(amps, signal.tail + idler.tail)
}

/// Vacuum vector of length `n` in the same shape as [`coherent_vector`].
pub fn vacuum_vector(n: usize) -> CoherentVector {
    let mut amps = vec![C64::new(0.0, 0.0); n.max(1)];
    amps[0] = C64::new(1.0, 0.0);
    CoherentVector { amps, tail: 0.0 }
}

/// Number state `|k>` truncated to `n` levels.
pub fn number_vector(k: usize, n: usize) -> Result<CoherentVector> {
    if k >= n {
        return Err(Error::InvalidParameter(format!(
            "level {k} outside {n} levels"
        )));
    }
    let mut amps = vec![C64::new(0.0, 0.0); n];
    amps[k] = C64::new(1.0, 0.0);
    Ok(CoherentVector { amps, tail: 0.0 })
}

/// `exp(i * phase * n_signal)`.
pub fn apply_signal_phase(state: &TwoModeState, phase: f64) -> TwoModeState {
    let mut amps = state.amps.clone();
    for (n, mut row) in amps.axis_iter_mut(Axis(0)).enumerate() {
        let rot = C64::from_polar(1.0, phase * n as f64);
        row.mapv_inplace(|z| z * rot);
    }
    TwoModeState {
        amps,
        tail_bound: state.tail_bound,
    }
}

/// Two-mode squeeze `S(r) = exp(r(ab - a†b†))` via the normally ordered
/// factorisation `(1/g) exp(-t a†b†) g^{-(n_a+n_b)} exp(t ab)`, `t = tanh r`.
pub fn apply_two_mode_squeeze(state: &TwoModeState, gain: GainParam) -> Result<TwoModeState> {
    apply_two_mode_squeeze_with(state, gain, DEFAULT_TAIL_THRESHOLD)
}

pub fn apply_two_mode_squeeze_with(
    state: &TwoModeState,
    gain: GainParam,
    threshold: f64,
) -> Result<TwoModeState> {
    let t = gain.tanh_r();
    apply_factored_squeeze(state, gain.g(), -t, t, threshold)
}

/// `S(-r)`, obtained by negating both off-diagonal coefficients.
pub fn apply_inverse_two_mode_squeeze(
    state: &TwoModeState,
    gain: GainParam,
    threshold: f64,
) -> Result<TwoModeState> {
    let t = gain.tanh_r();
    apply_factored_squeeze(state, gain.g(), t, -t, threshold)
}

/// Applies `(1/g) exp(raising a†b†) g^{-(n_a+n_b)} exp(lowering ab)` right to
/// left. The lowering series terminates on the finite box; the raising series
/// drops whatever crosses the boundary and that mass joins the tail bound.
pub fn apply_factored_squeeze(
    state: &TwoModeState,
    g: f64,
    raising: f64,
    lowering: f64,
    threshold: f64,
) -> Result<TwoModeState> {
    if !g.is_finite() || g < 1.0 {
        return Err(Error::InvalidGain(g));
    }
    if !raising.is_finite() || !lowering.is_finite() {
        return Err(Error::NonFinite("squeeze coefficients"));
    }
    let (ns, ni) = state.dims();
    let depth = ns.min(ni);

    // exp(lowering * ab)
    let mut acc = state.amps.clone();
    if lowering != 0.0 {
        let mut term = state.amps.clone();
        for k in 1..depth {
            let mut next = Array2::zeros((ns, ni));
            for n in 0..ns - 1 {
                for m in 0..ni - 1 {
                    let src = term[[n + 1, m + 1]];
                    if src != C64::new(0.0, 0.0) {
                        next[[n, m]] = src * (((n + 1) * (m + 1)) as f64).sqrt();
                    }
                }
            }
            next.mapv_inplace(|z| z * (lowering / k as f64));
            acc += &next;
            term = next;
        }
    }

    // (1/g) g^{-(n+m)}
    let inv_g = 1.0 / g;
    let row_scale: Vec<f64> = (0..ns).map(|n| inv_g.powi(n as i32)).collect();
    let col_scale: Vec<f64> = (0..ni).map(|m| inv_g.powi(m as i32)).collect();
    for ((n, m), z) in acc.indexed_iter_mut() {
        *z *= inv_g * row_scale[n] * col_scale[m];
    }

    // exp(raising * a†b†), truncated at the boundary
    if raising != 0.0 {
        let mut term = acc.clone();
        for k in 1..depth {
            let mut next = Array2::zeros((ns, ni));
            for n in 1..ns {
                for m in 1..ni {
                    let src = term[[n - 1, m - 1]];
                    if src != C64::new(0.0, 0.0) {
                        next[[n, m]] = src * ((n * m) as f64).sqrt();
                    }
                }
            }
            next.mapv_inplace(|z| z * (raising / k as f64));
            acc += &next;
            term = next;
        }
    }

    // The box result is the exact image restricted to the box, so the
    // discarded mass is the norm deficit.
    let lost = (state.norm_sqr() - acc.iter().map(|z| z.norm_sqr()).sum::<f64>()).max(0.0);
    let tail = (state.tail_bound.sqrt() + lost.sqrt()).powi(2);
    if tail > threshold {
        return Err(Error::TruncationOverflow { tail, threshold });
    }
    TwoModeState::new(acc, tail)
}

/// `sum conj(a) b`.
pub fn overlap(a: &TwoModeState, b: &TwoModeState) -> Result<C64> {
    check_dims(a, b)?;
    Ok(a.amps
        .iter()
        .zip(b.amps.iter())
        .map(|(x, y)| x.conj() * y)
        .sum())
}

/// `<psi| a |psi>` and `<psi| a^2 |psi>` for the chosen mode.
fn ladder_expectations(state: &TwoModeState, mode: Mode) -> (C64, C64) {
    let amps = match mode {
        Mode::Signal => state.amps.view(),
        Mode::Idler => state.amps.t(),
    };
    let (n_max, m_max) = amps.dim();
    let mut a1 = C64::new(0.0, 0.0);
    let mut a2 = C64::new(0.0, 0.0);
    for n in 1..n_max {
        let s1 = (n as f64).sqrt();
        let s2 = ((n * (n - 1)) as f64).sqrt();
        for m in 0..m_max {
            let z = amps[[n, m]];
            a1 += amps[[n - 1, m]].conj() * z * s1;
            if n >= 2 {
                a2 += amps[[n - 2, m]].conj() * z * s2;
            }
        }
    }
    (a1, a2)
}

/// First or second moment of a quadrature. With `normalize` the moment is
/// divided by the squared norm (post-selected states are sub-normalised).
pub fn quadrature_moment(
    state: &TwoModeState,
    spec: QuadratureSpec,
    order: u8,
    normalize: bool,
) -> Result<f64> {
    let norm = state.norm_sqr();
    let (a1, a2) = ladder_expectations(state, spec.mode);
    let raw = match (order, spec.which) {
        (1, Quadrature::X) => std::f64::consts::SQRT_2 * a1.re,
        (1, Quadrature::P) => std::f64::consts::SQRT_2 * a1.im,
        (2, Quadrature::X) => a2.re + state.mean_photon(spec.mode) + 0.5 * norm,
        (2, Quadrature::P) => -a2.re + state.mean_photon(spec.mode) + 0.5 * norm,
        _ => {
            return Err(Error::InvalidParameter(format!(
                "moment order must be 1 or 2, got {order}"
            )))
        }
    };
    if normalize {
        if norm <= 0.0 {
            return Err(Error::ZeroNorm);
        }
        Ok(raw / norm)
    } else {
        Ok(raw)
    }
}

/// `X` (or `P`) applied to the state on the truncated box. The component
/// pushed past the last level by `a†` is dropped.
pub fn apply_quadrature(state: &TwoModeState, spec: QuadratureSpec) -> TwoModeState {
    let (ns, ni) = state.dims();
    let mut out = Array2::<C64>::zeros((ns, ni));
    let (lower_coeff, raise_coeff) = match spec.which {
        Quadrature::X => (C64::new(1.0, 0.0), C64::new(1.0, 0.0)),
        Quadrature::P => (C64::new(0.0, -1.0), C64::new(0.0, 1.0)),
    };
    let scale = std::f64::consts::FRAC_1_SQRT_2;
    for ((n, m), z) in state.amps.indexed_iter() {
        let k = match spec.mode {
            Mode::Signal => n,
            Mode::Idler => m,
        };
        let (dn, dm) = match spec.mode {
            Mode::Signal => (1, 0),
            Mode::Idler => (0, 1),
        };
        if k >= 1 {
            out[[n - dn, m - dm]] += lower_coeff * z * (k as f64).sqrt() * scale;
        }
        if n + dn < ns && m + dm < ni {
            out[[n + dn, m + dm]] += raise_coeff * z * ((k + 1) as f64).sqrt() * scale;
        }
    }
    TwoModeState {
        amps: out,
        tail_bound: state.tail_bound,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn coherent_product(alpha: C64, dims: (usize, usize)) -> TwoModeState {
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
    fn coherent_vacuum_is_unit_vector() {
        let v = coherent_vector(c(0.0, 0.0), 10).unwrap();
        assert_eq!(v.amps[0], c(1.0, 0.0));
        assert!(v.amps[1..].iter().all(|z| z.norm() == 0.0));
        assert_eq!(v.tail, 0.0);
    }

    #[test]
    fn coherent_normalization_and_tiny_tail() {
        let v = coherent_vector(c(1.0, 0.0), 30).unwrap();
        let s: f64 = v.amps.iter().map(|z| z.norm_sqr()).sum();
        assert!((s - 1.0).abs() < 1e-12);
        assert!(v.tail < 1e-28 && v.tail > 0.0);
    }

    #[test]
    fn coherent_overlap_with_vacuum() {
        let a = coherent_vector(c(0.0, 0.0), 30).unwrap();
        let b = coherent_vector(c(1.0, 0.0), 30).unwrap();
        let ov: C64 = a.amps.iter().zip(&b.amps).map(|(x, y)| x.conj() * y).sum();
        assert!((ov.re - (-0.5f64).exp()).abs() < 1e-12);
        assert!((ov.re - 0.60653).abs() < 1e-5);
    }

    #[test]
    fn coherent_rejects_non_finite() {
        assert!(coherent_vector(c(f64::NAN, 0.0), 4).is_err());
        assert!(coherent_vector(c(f64::INFINITY, 0.0), 4).is_err());
    }

    #[test]
    fn product_of_vacua() {
        let s = product_state(&vacuum_vector(5), &vacuum_vector(4)).unwrap();
        assert_eq!(s.amps()[[0, 0]], c(1.0, 0.0));
        assert!((s.norm_sqr() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn product_norm_and_mean_photon() {
        let sig = coherent_vector(c(2.0, 0.0), 40).unwrap();
        let s = product_state(&sig, &vacuum_vector(4)).unwrap();
        assert!((s.norm_sqr() - (1.0 - s.tail_bound())).abs() < 1e-14);
        assert!((s.mean_photon(Mode::Signal) - 4.0).abs() < 1e-8);
    }

    #[test]
    fn phase_rotation_matches_rotated_coherent() {
        let alpha0 = c(1.3, -0.4);
        let phi = 0.7;
        let s = coherent_product(alpha0, (30, 3));
        let rotated = apply_signal_phase(&s, phi);
        let direct = coherent_product(alpha0 * C64::from_polar(1.0, phi), (30, 3));
        assert!(max_diff(&rotated, &direct) < 1e-10);
        assert!(max_diff(&apply_signal_phase(&s, 0.0), &s) == 0.0);
        assert!(max_diff(&apply_signal_phase(&s, 2.0 * std::f64::consts::PI), &s) < 1e-12);
    }

    #[test]
    fn unit_gain_squeeze_is_identity() {
        let s = coherent_product(c(1.0, 0.5), (20, 20));
        let out = apply_two_mode_squeeze(&s, GainParam::unity()).unwrap();
        assert!(max_diff(&out, &s) < 1e-15);
    }

    #[test]
    fn squeezed_vacuum_diagonal_amplitudes() {
        let r: f64 = 0.3;
        let out = apply_two_mode_squeeze(
            &TwoModeState::vacuum((30, 30)),
            GainParam::from_squeeze(r).unwrap(),
        )
        .unwrap();
        for n in 0..30 {
            let expected = (-r.tanh()).powi(n as i32) / r.cosh();
            assert!((out.amps()[[n, n]].re - expected).abs() < 1e-12);
        }
        assert!((out.amps()[[0, 0]].re - 0.95663).abs() < 1e-5);
        assert!((out.amps()[[1, 1]].re + 0.27868).abs() < 1e-5);
        // nothing off the diagonal
        assert!(out.amps()[[1, 0]].norm() == 0.0 && out.amps()[[2, 1]].norm() == 0.0);
    }

    #[test]
    fn squeezed_vacuum_signal_photons() {
        let r: f64 = 0.5;
        let out = apply_two_mode_squeeze(
            &TwoModeState::vacuum((30, 30)),
            GainParam::from_squeeze(r).unwrap(),
        )
        .unwrap();
        assert!((out.mean_photon(Mode::Signal) - r.sinh().powi(2)).abs() < 1e-6);
        assert!((out.mean_photon(Mode::Signal) - 0.27154).abs() < 1e-5);
    }

    #[test]
    fn squeeze_overflow_is_reported() {
        let gain = GainParam::from_gain(3.0).unwrap();
        let err = apply_two_mode_squeeze(&TwoModeState::vacuum((6, 6)), gain).unwrap_err();
        assert!(matches!(err, Error::TruncationOverflow { .. }));
    }

    #[test]
    fn gain_param_consistency() {
        for g in [1.0, 1.0 + 1e-9, 1.01, 1.1, 1.25, 1.5, 3.0] {
            let p = GainParam::from_gain(g).unwrap();
            assert!((p.r().cosh() - g).abs() <= 4.0 * f64::EPSILON * g);
            assert!((p.r().sinh() - (g * g - 1.0).sqrt()).abs() <= 1e-12);
        }
        assert!(GainParam::from_gain(0.5).is_err());
        assert!(GainParam::from_gain(f64::NAN).is_err());
        let p = GainParam::from_squeeze(0.5).unwrap();
        assert!((p.g() - 0.5f64.cosh()).abs() < 1e-15);
    }

    #[test]
    fn overlap_of_opposite_coherent_states() {
        let a = coherent_product(c(1.0, 0.0), (40, 2));
        let b = coherent_product(c(-1.0, 0.0), (40, 2));
        let ov = overlap(&a, &b).unwrap();
        assert!((ov.re - (-2.0f64).exp()).abs() < 1e-8);
        assert!(ov.im.abs() < 1e-12);
        let sn = overlap(&a, &a).unwrap();
        assert!((sn.re - a.norm_sqr()).abs() < 1e-15 && sn.im == 0.0);
        assert!(overlap(&a, &TwoModeState::vacuum((4, 4))).is_err());
    }

    #[test]
    fn vacuum_quadrature_variance() {
        let v = TwoModeState::vacuum((10, 10));
        for mode in [Mode::Signal, Mode::Idler] {
            for q in [Quadrature::X, Quadrature::P] {
                let m2 = quadrature_moment(&v, QuadratureSpec::new(mode, q), 2, false).unwrap();
                assert!((m2 - 0.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn coherent_quadrature_mean() {
        let s = coherent_product(c(2.0, 0.0), (40, 2));
        let x = quadrature_moment(
            &s,
            QuadratureSpec::new(Mode::Signal, Quadrature::X),
            1,
            true,
        )
        .unwrap();
        assert!((x - 2.0 * std::f64::consts::SQRT_2).abs() < 1e-10);
    }

    #[test]
    fn amplified_idler_mean() {
        let gain = GainParam::from_gain(1.25).unwrap();
        let s = coherent_product(c(2.0, 0.0), (47, 47));
        let out = apply_two_mode_squeeze(&s, gain).unwrap();
        let q = quadrature_moment(
            &out,
            QuadratureSpec::new(Mode::Idler, Quadrature::X),
            1,
            true,
        )
        .unwrap();
        assert!((q + 0.75 * 2.0 * std::f64::consts::SQRT_2).abs() < 1e-4);
        assert!((q + 2.1213).abs() < 1e-4);
    }

    #[test]
    fn zero_norm_moment_is_error() {
        let z = TwoModeState::new(Array2::zeros((3, 3)), 0.0).unwrap();
        let spec = QuadratureSpec::new(Mode::Signal, Quadrature::X);
        assert_eq!(quadrature_moment(&z, spec, 2, true), Err(Error::ZeroNorm));
        assert!(quadrature_moment(&z, spec, 3, false).is_err());
    }

    #[test]
    fn applied_quadrature_reproduces_moments() {
        let s = coherent_product(c(0.8, -0.6), (30, 4));
        for which in [Quadrature::X, Quadrature::P] {
            let spec = QuadratureSpec::new(Mode::Signal, which);
            let xs = apply_quadrature(&s, spec);
            let via_op = overlap(&s, &xs).unwrap();
            let direct = quadrature_moment(&s, spec, 1, false).unwrap();
            assert!((via_op.re - direct).abs() < 1e-12);
            assert!(via_op.im.abs() < 1e-12);
        }
    }

    #[test]
    fn new_rejects_nan() {
        let mut a = Array2::zeros((2, 2));
        a[[1, 1]] = c(f64::NAN, 0.0);
        assert!(TwoModeState::new(a, 0.0).is_err());
    }
}
