//! Named numerical checks tying the engines together. Each check measures
//! one or more quantities against fixed bounds and a wall-clock budget.

use std::f64::consts::{FRAC_PI_2, PI, SQRT_2};
use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64 as C64;

use crate::audit::{discrepancy_report, AUDIT_PHI, EXACT_RATIO_GATE, NAIVE_RATIO_GATE};
use crate::error::{Error, Result};
use crate::fock::{
    apply_factored_squeeze, apply_two_mode_squeeze, apply_two_mode_squeeze_with, coherent_vector,
    number_vector, product_state, quadrature_moment, vacuum_vector, GainParam, Mode, Quadrature,
    QuadratureSpec, TwoModeState,
};
use crate::oracle::squeeze_oracle;
use crate::pipeline::{
    prepare_cat, uniform_theta_grid, visibility_sweep, Branches, ExperimentConfig, PostSelectMode,
};
use crate::qfunc::{
    amplifier_scaling_check, build_q_terms, integrate_probability, visibility_closed_form, QStage,
    DEFAULT_QUADRATURE_POINTS,
};

pub const CHECK_NAMES: [&str; 9] = [
    "eq5", "eq23", "oracle", "tmsv", "eq26", "eq3", "eq33", "engines", "modes",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Bound {
    /// `value < limit`
    Below(f64),
    /// `value <= limit`
    AtMost(f64),
    /// `value >= limit`
    AtLeast(f64),
    /// `|value - target| <= tol`
    Near { target: f64, tol: f64 },
}

impl Bound {
    pub fn holds(&self, value: f64) -> bool {
        match *self {
            Bound::Below(l) => value < l,
            Bound::AtMost(l) => value <= l,
            Bound::AtLeast(l) => value >= l,
            Bound::Near { target, tol } => (value - target).abs() <= tol,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bound::Below(l) => write!(f, "< {l:e}"),
            Bound::AtMost(l) => write!(f, "<= {l}"),
            Bound::AtLeast(l) => write!(f, ">= {l}"),
            Bound::Near { target, tol } => write!(f, "{target} ± {tol}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Measurement {
    pub label: String,
    pub value: f64,
    pub bound: Bound,
}

impl Measurement {
    pub fn new(label: impl Into<String>, value: f64, bound: Bound) -> Self {
        Measurement {
            label: label.into(),
            value,
            bound,
        }
    }

    pub fn passed(&self) -> bool {
        self.bound.holds(self.value)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub measurements: Vec<Measurement>,
    pub elapsed: Duration,
    pub budget: Duration,
    /// Set when the check could not be evaluated.
    pub error: Option<String>,
}

impl CheckOutcome {
    pub fn passed(&self) -> bool {
        self.error.is_none()
            && !self.measurements.is_empty()
            && self.measurements.iter().all(Measurement::passed)
            && self.elapsed <= self.budget
    }
}

/// Squeeze implementation under test by [`check_oracle_with`].
pub type SqueezeFn = fn(&TwoModeState, GainParam) -> Result<TwoModeState>;

fn unbounded_squeeze(state: &TwoModeState, gain: GainParam) -> Result<TwoModeState> {
    apply_two_mode_squeeze_with(state, gain, f64::INFINITY)
}

fn timed(
    name: &'static str,
    budget_s: u64,
    f: impl FnOnce() -> Result<Vec<Measurement>>,
) -> CheckOutcome {
    let start = Instant::now();
    let result = f();
    let elapsed = start.elapsed();
    let (measurements, error) = match result {
        Ok(m) => (m, None),
        Err(e) => (vec![], Some(e.to_string())),
    };
    CheckOutcome {
        name,
        measurements,
        elapsed,
        budget: Duration::from_secs(budget_s),
        error,
    }
}

/// Runs the named check.
pub fn run_check(name: &str) -> Result<CheckOutcome> {
    Ok(match name {
        "eq5" => timed("eq5", 5, check_unit_gain_fringe),
        "eq23" => timed("eq23", 60, check_visibility),
        "oracle" => check_oracle_with(unbounded_squeeze),
        "tmsv" => timed("tmsv", 5, check_squeezed_vacuum),
        "eq26" => timed("eq26", 30, check_scaling_law),
        "eq3" => timed("eq3", 5, check_mean_field),
        "eq33" => timed("eq33", 120, check_variance_audit),
        "engines" => timed("engines", 60, check_engines),
        "modes" => timed("modes", 60, check_modes),
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown check '{other}', expected one of {}",
                CHECK_NAMES.join(", ")
            )))
        }
    })
}

/// Runs every check, or only those listed in `only`, in the order of
/// [`CHECK_NAMES`].
pub fn run_checks(only: Option<&[String]>) -> Result<Vec<CheckOutcome>> {
    match only {
        None => CHECK_NAMES.iter().map(|n| run_check(n)).collect(),
        Some(names) => {
            for n in names {
                if !CHECK_NAMES.contains(&n.as_str()) {
                    return run_check(n).map(|c| vec![c]);
                }
            }
            CHECK_NAMES
                .iter()
                .filter(|n| names.iter().any(|m| m == *n))
                .map(|n| run_check(n))
                .collect()
        }
    }
}

fn gain(g: f64) -> Result<GainParam> {
    GainParam::from_gain(g)
}

fn check_unit_gain_fringe() -> Result<Vec<Measurement>> {
    let cfg = ExperimentConfig::new(C64::new(2.0, 0.0), GainParam::unity()).with_phi(FRAC_PI_2);
    let branches = Branches::build(&cfg)?;
    let mut worst: f64 = 0.0;
    for theta in uniform_theta_grid(64) {
        let p = branches.accepted_probability(theta)?;
        worst = worst.max((p - 0.5 * (theta / 2.0).cos().powi(2)).abs());
    }
    Ok(vec![Measurement::new(
        "max |P - cos²(θ/2)/2|",
        worst,
        Bound::Below(1e-6),
    )])
}

fn check_visibility() -> Result<Vec<Measurement>> {
    let mut out = vec![
        Measurement::new(
            "closed form v(1.5, 1)",
            visibility_closed_form(1.5, 1.0)?,
            Bound::Near {
                target: 0.13987,
                tol: 5e-6,
            },
        ),
        Measurement::new(
            "closed form v(1.1, 2)",
            visibility_closed_form(1.1, 2.0)?,
            Bound::Near {
                target: 0.21572,
                tol: 5e-6,
            },
        ),
    ];
    let grid = uniform_theta_grid(64);
    for (g, a) in [(1.1, 1.0), (1.25, 1.0), (1.5, 1.0), (1.1, 2.0), (1.25, 2.0)] {
        let cfg = ExperimentConfig::new(C64::new(a, 0.0), gain(g)?);
        let r = visibility_sweep(&cfg, &grid)?;
        out.push(Measurement::new(
            format!("|v - v_ref| at g={g}, |α0|={a}"),
            (r.visibility - r.reference_visibility).abs(),
            Bound::Below(1e-3),
        ));
        out.push(Measurement::new(
            format!("dims at g={g}, |α0|={a}"),
            cfg.dims.0.max(cfg.dims.1) as f64,
            Bound::AtMost(60.0),
        ));
    }
    Ok(out)
}

/// Factored squeeze versus the dense exponential on a 12×12 box. The
/// `squeeze` argument lets a test inject a faulty implementation.
pub fn check_oracle_with(squeeze: SqueezeFn) -> CheckOutcome {
    timed("oracle", 10, || {
        let n = 12;
        let inputs = [
            ("vacuum", TwoModeState::vacuum((n, n))),
            (
                "coherent(0.5)",
                product_state(&coherent_vector(C64::new(0.5, 0.0), n)?, &vacuum_vector(n))?,
            ),
            (
                "|1,0>",
                product_state(&number_vector(1, n)?, &vacuum_vector(n))?,
            ),
        ];
        let mut out = Vec::new();
        for r in [0.1, 0.3, 0.5] {
            let g = GainParam::from_squeeze(r)?;
            let mut worst: f64 = 0.0;
            for (_, s) in &inputs {
                let a = squeeze(s, g)?;
                let b = squeeze_oracle(s, r)?;
                let d = a
                    .amps()
                    .iter()
                    .zip(b.amps().iter())
                    .map(|(x, y)| (x - y).norm())
                    .fold(0.0, f64::max);
                worst = worst.max(d);
            }
            out.push(Measurement::new(
                format!("max amplitude error at r={r}"),
                worst,
                Bound::Below(1e-8),
            ));
        }
        Ok(out)
    })
}

/// The oracle check run against a squeeze whose raising coefficient has the
/// wrong sign.
pub fn check_oracle_mutated() -> CheckOutcome {
    fn wrong_sign(state: &TwoModeState, gain: GainParam) -> Result<TwoModeState> {
        let t = gain.tanh_r();
        apply_factored_squeeze(state, gain.g(), t, t, f64::INFINITY)
    }
    check_oracle_with(wrong_sign)
}

fn check_squeezed_vacuum() -> Result<Vec<Measurement>> {
    let g = GainParam::from_squeeze(0.5)?;
    let s = apply_two_mode_squeeze(&TwoModeState::vacuum((40, 40)), g)?;
    let n_err = (s.mean_photon(Mode::Signal) - g.sinh_r().powi(2)).abs();

    let g = GainParam::from_squeeze(0.3)?;
    let s = apply_two_mode_squeeze(&TwoModeState::vacuum((30, 30)), g)?;
    let mut worst: f64 = 0.0;
    for ((n, m), z) in s.amps().indexed_iter() {
        let expected = if n == m {
            (-g.tanh_r()).powi(n as i32) / g.g()
        } else {
            0.0
        };
        worst = worst.max((z - C64::new(expected, 0.0)).norm());
    }
    Ok(vec![
        Measurement::new("|<n_s> - sinh²r| at r=0.5", n_err, Bound::Below(1e-6)),
        Measurement::new(
            "max diagonal amplitude error at r=0.3",
            worst,
            Bound::Below(1e-8),
        ),
    ])
}

fn check_scaling_law() -> Result<Vec<Measurement>> {
    let g = gain(1.25)?;
    let axis: Vec<f64> = (0..21).map(|i| -4.0 + 0.4 * i as f64).collect();
    let grid: Vec<C64> = axis
        .iter()
        .flat_map(|&re| axis.iter().map(move |&im| C64::new(re, im)))
        .collect();
    let dims = crate::pipeline::default_dims(1.0, g);
    let coherent = product_state(
        &coherent_vector(C64::new(1.0, 0.0), dims.0)?,
        &vacuum_vector(dims.1),
    )?;
    let cat = prepare_cat(&ExperimentConfig::new(C64::new(1.0, 0.0), g).with_phi(FRAC_PI_2))?;
    Ok(vec![
        Measurement::new(
            "max relative error, coherent input",
            amplifier_scaling_check(&coherent, g, &grid)?,
            Bound::Below(1e-4),
        ),
        Measurement::new(
            "max relative error, cat input",
            amplifier_scaling_check(&cat, g, &grid)?,
            Bound::Below(1e-4),
        ),
    ])
}

fn check_mean_field() -> Result<Vec<Measurement>> {
    let g = gain(1.25)?;
    let alpha0 = C64::new(2.0, 0.0);
    let dims = crate::pipeline::default_dims(alpha0.norm(), g);
    let input = product_state(&coherent_vector(alpha0, dims.0)?, &vacuum_vector(dims.1))?;
    let out = apply_two_mode_squeeze(&input, g)?;
    let q = quadrature_moment(
        &out,
        QuadratureSpec::new(Mode::Idler, Quadrature::X),
        1,
        true,
    )?;
    let x = quadrature_moment(
        &out,
        QuadratureSpec::new(Mode::Signal, Quadrature::X),
        1,
        true,
    )?;
    let q_pred = -g.sinh_r() * SQRT_2 * alpha0.re;
    let x_pred = g.g() * SQRT_2 * alpha0.re;
    Ok(vec![
        Measurement::new(
            "idler <q>",
            q,
            Bound::Near {
                target: q_pred,
                tol: 1e-4,
            },
        ),
        Measurement::new(
            "idler <q> reference",
            q,
            Bound::Near {
                target: -2.1213,
                tol: 1e-4,
            },
        ),
        Measurement::new(
            "signal <x>",
            x,
            Bound::Near {
                target: x_pred,
                tol: 1e-4,
            },
        ),
    ])
}

fn check_variance_audit() -> Result<Vec<Measurement>> {
    let grid = uniform_theta_grid(32);
    let cfg = ExperimentConfig::new(C64::new(0.0, 4.0), gain(1.1)?).with_phi(AUDIT_PHI);
    let amplified = discrepancy_report(&cfg, &grid)?;
    let cfg = ExperimentConfig::new(C64::new(0.0, 5.0), GainParam::unity())
        .with_phi(AUDIT_PHI)
        .with_dims((80, 8));
    let unit = discrepancy_report(&cfg, &grid)?;
    Ok(vec![
        Measurement::new(
            "naive ratio, g=1.1, α0=4i",
            amplified.naive_modulation_ratio,
            Bound::AtLeast(NAIVE_RATIO_GATE),
        ),
        Measurement::new(
            "exact ratio, g=1.1, α0=4i",
            amplified.exact_modulation_ratio,
            Bound::AtMost(EXACT_RATIO_GATE),
        ),
        Measurement::new(
            "naive ratio, g=1, α0=5i",
            unit.naive_modulation_ratio,
            Bound::Near {
                target: 3.0,
                tol: 0.3,
            },
        ),
        Measurement::new(
            "exact ratio, g=1, α0=5i",
            unit.exact_modulation_ratio,
            Bound::Near {
                target: 3.0,
                tol: 0.3,
            },
        ),
    ])
}

fn check_engines() -> Result<Vec<Measurement>> {
    let base = ExperimentConfig::new(C64::new(1.0, 0.0), gain(1.25)?).with_phi(FRAC_PI_2);
    let branches = Branches::build(&base)?;
    let mut worst: f64 = 0.0;
    for i in 0..9 {
        let theta = 2.0 * PI * i as f64 / 9.0;
        let closed = integrate_probability(&build_q_terms(
            &base.clone().with_theta(theta),
            QStage::PostAnalyzer,
        ))?;
        worst = worst.max((closed - branches.accepted_probability(theta)?).abs());
    }
    let terms = build_q_terms(&base.clone().with_theta(1.0), QStage::PostAnalyzer);
    let mut quad_worst: f64 = 0.0;
    for t in &terms.terms {
        let closed = t.integrate()?;
        let numeric = t.integrate_numeric(&t.default_box(DEFAULT_QUADRATURE_POINTS));
        quad_worst = quad_worst.max((closed - numeric).norm());
    }
    Ok(vec![
        Measurement::new("max |P_Q - P_Fock| over 9 θ", worst, Bound::Below(1e-6)),
        Measurement::new(
            "max |closed - quadrature| per term",
            quad_worst,
            Bound::Below(1e-6),
        ),
    ])
}

fn check_modes() -> Result<Vec<Measurement>> {
    let grid = uniform_theta_grid(64);
    let mut out = Vec::new();
    for g in [1.0, 1.1] {
        let cfg = ExperimentConfig::new(C64::new(3.0, 0.0), gain(g)?).with_phi(FRAC_PI_2);
        let drop = visibility_sweep(&cfg, &grid)?;
        let window = visibility_sweep(
            &cfg.clone()
                .with_mode(PostSelectMode::HomodyneWindow { threshold: 0.0 }),
            &grid,
        )?;
        out.push(Measurement::new(
            format!("|v_homodyne - v_drop| at g={g}"),
            (window.visibility - drop.visibility).abs(),
            Bound::Below(1e-2),
        ));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bounds() {
        assert!(Bound::Below(1.0).holds(0.5));
        assert!(!Bound::Below(1.0).holds(1.0));
        assert!(Bound::AtMost(1.0).holds(1.0));
        assert!(Bound::AtLeast(2.5).holds(2.5));
        assert!(Bound::Near {
            target: 3.0,
            tol: 0.3
        }
        .holds(2.75));
        assert!(!Bound::Near {
            target: 3.0,
            tol: 0.3
        }
        .holds(3.31));
        assert!(!Bound::Below(1.0).holds(f64::NAN));
    }

    #[test]
    fn unknown_check_is_rejected() {
        assert!(run_check("nope").is_err());
        assert!(run_checks(Some(&["eq5".into(), "nope".into()])).is_err());
    }

    #[test]
    fn only_filter_keeps_order() {
        let r = run_checks(Some(&["tmsv".into(), "eq5".into()])).unwrap();
        let names: Vec<_> = r.iter().map(|c| c.name).collect();
        assert_eq!(names, ["eq5", "tmsv"]);
        assert!(r.iter().all(CheckOutcome::passed));
    }

    #[test]
    fn oracle_catches_sign_error() {
        assert!(run_check("oracle").unwrap().passed());
        let bad = check_oracle_mutated();
        assert!(!bad.passed());
    }

    #[test]
    fn failed_evaluation_does_not_pass() {
        let c = timed("x", 1, || Err(Error::ZeroNorm));
        assert!(!c.passed());
        assert!(c.error.is_some());
    }
}
