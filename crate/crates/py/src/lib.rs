//! Python bindings for the cat-state amplifier simulator.

use std::f64::consts::FRAC_PI_2;

use catamp::pipeline::uniform_theta_grid;
use catamp::{GainParam, PostSelectMode};
use num_complex::Complex64 as C64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

fn py_err(e: catamp::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn gain(g: f64) -> PyResult<GainParam> {
    GainParam::from_gain(g).map_err(py_err)
}

fn parse_mode(mode: &str) -> PyResult<catamp::Mode> {
    match mode {
        "signal" => Ok(catamp::Mode::Signal),
        "idler" => Ok(catamp::Mode::Idler),
        other => Err(PyValueError::new_err(format!(
            "mode must be 'signal' or 'idler', got '{other}'"
        ))),
    }
}

fn parse_stage(stage: &str) -> PyResult<catamp::QStage> {
    match stage {
        "post_amplifier" => Ok(catamp::QStage::PostAmplifier),
        "post_analyzer" => Ok(catamp::QStage::PostAnalyzer),
        other => Err(PyValueError::new_err(format!(
            "stage must be 'post_amplifier' or 'post_analyzer', got '{other}'"
        ))),
    }
}

/// Truncated two-mode (signal, idler) state.
#[pyclass(name = "TwoModeState", module = "catamp_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyTwoModeState {
    inner: catamp::TwoModeState,
}

#[pymethods]
impl PyTwoModeState {
    #[staticmethod]
    fn vacuum(dims: (usize, usize)) -> Self {
        PyTwoModeState {
            inner: catamp::TwoModeState::vacuum(dims),
        }
    }

    /// `|alpha> (x) |beta>` truncated to `dims`.
    #[staticmethod]
    #[pyo3(signature = (alpha, dims, beta = C64::new(0.0, 0.0)))]
    fn coherent(alpha: C64, dims: (usize, usize), beta: C64) -> PyResult<Self> {
        let s = catamp::fock::coherent_vector(alpha, dims.0).map_err(py_err)?;
        let i = catamp::fock::coherent_vector(beta, dims.1).map_err(py_err)?;
        Ok(PyTwoModeState {
            inner: catamp::fock::product_state(&s, &i).map_err(py_err)?,
        })
    }

    #[getter]
    fn dims(&self) -> (usize, usize) {
        self.inner.dims()
    }

    #[getter]
    fn tail_bound(&self) -> f64 {
        self.inner.tail_bound()
    }

    fn norm_sqr(&self) -> f64 {
        self.inner.norm_sqr()
    }

    #[pyo3(signature = (mode = "signal"))]
    fn mean_photon(&self, mode: &str) -> PyResult<f64> {
        Ok(self.inner.mean_photon(parse_mode(mode)?))
    }

    /// Amplitudes as nested lists, indexed `[signal][idler]`.
    fn amplitudes(&self) -> Vec<Vec<C64>> {
        self.inner
            .amps()
            .rows()
            .into_iter()
            .map(|r| r.to_vec())
            .collect()
    }

    fn overlap(&self, other: &PyTwoModeState) -> PyResult<C64> {
        catamp::fock::overlap(&self.inner, &other.inner).map_err(py_err)
    }

    fn apply_signal_phase(&self, phase: f64) -> Self {
        PyTwoModeState {
            inner: catamp::fock::apply_signal_phase(&self.inner, phase),
        }
    }

    /// Two-mode squeeze with amplitude gain `g`.
    fn squeeze(&self, g: f64) -> PyResult<Self> {
        Ok(PyTwoModeState {
            inner: catamp::fock::apply_two_mode_squeeze(&self.inner, gain(g)?).map_err(py_err)?,
        })
    }

    /// `<X>` (order 1) or `<X^2>` (order 2) of a quadrature.
    #[pyo3(signature = (order, mode = "signal", which = "x", normalize = true))]
    fn quadrature_moment(
        &self,
        order: u8,
        mode: &str,
        which: &str,
        normalize: bool,
    ) -> PyResult<f64> {
        let which = match which {
            "x" => catamp::Quadrature::X,
            "p" => catamp::Quadrature::P,
            other => {
                return Err(PyValueError::new_err(format!(
                    "which must be 'x' or 'p', got '{other}'"
                )))
            }
        };
        let spec = catamp::QuadratureSpec::new(parse_mode(mode)?, which);
        catamp::fock::quadrature_moment(&self.inner, spec, order, normalize).map_err(py_err)
    }

    /// Idler-traced signal Q-function at `alpha`.
    fn marginal_q(&self, alpha: C64) -> PyResult<f64> {
        catamp::qfunc::marginal_q(&self.inner, alpha).map_err(py_err)
    }

    fn __repr__(&self) -> String {
        let (ns, ni) = self.inner.dims();
        format!(
            "TwoModeState(dims=({ns}, {ni}), norm_sqr={:.6})",
            self.inner.norm_sqr()
        )
    }
}

/// Parameters of the cat interferometer.
#[pyclass(name = "ExperimentConfig", module = "catamp_py", skip_from_py_object)]
#[derive(Clone)]
pub struct PyExperimentConfig {
    inner: catamp::ExperimentConfig,
}

#[pymethods]
impl PyExperimentConfig {
    #[new]
    #[pyo3(signature = (alpha0, g, phi = FRAC_PI_2, theta = 0.0, dims = None, mode = "branch_drop", threshold = 0.0))]
    fn new(
        alpha0: C64,
        g: f64,
        phi: f64,
        theta: f64,
        dims: Option<(usize, usize)>,
        mode: &str,
        threshold: f64,
    ) -> PyResult<Self> {
        let mode = match mode {
            "branch_drop" => PostSelectMode::BranchDrop,
            "homodyne_window" => PostSelectMode::HomodyneWindow { threshold },
            other => {
                return Err(PyValueError::new_err(format!(
                    "mode must be 'branch_drop' or 'homodyne_window', got '{other}'"
                )))
            }
        };
        let mut inner = catamp::ExperimentConfig::new(alpha0, gain(g)?)
            .with_phi(phi)
            .with_theta(theta)
            .with_mode(mode);
        if let Some(d) = dims {
            inner = inner.with_dims(d);
        }
        inner.validate().map_err(py_err)?;
        Ok(PyExperimentConfig { inner })
    }

    #[getter]
    fn alpha0(&self) -> C64 {
        self.inner.alpha0
    }

    #[getter]
    fn g(&self) -> f64 {
        self.inner.gain.g()
    }

    #[getter]
    fn phi(&self) -> f64 {
        self.inner.phi
    }

    #[getter]
    fn theta(&self) -> f64 {
        self.inner.theta
    }

    #[getter]
    fn dims(&self) -> (usize, usize) {
        self.inner.dims
    }

    #[getter]
    fn mode(&self) -> &'static str {
        self.inner.postselect_mode.name()
    }

    fn with_theta(&self, theta: f64) -> Self {
        PyExperimentConfig {
            inner: self.inner.clone().with_theta(theta),
        }
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "ExperimentConfig(alpha0={}, g={}, phi={}, theta={}, dims={:?}, mode='{}')",
            c.alpha0,
            c.gain.g(),
            c.phi,
            c.theta,
            c.dims,
            c.postselect_mode.name()
        )
    }
}

/// Unnormalised cat `(|e^{i phi} alpha0> + |e^{-i phi} alpha0>) |0> / √2`.
#[pyfunction]
fn prepare_cat(config: &PyExperimentConfig) -> PyResult<PyTwoModeState> {
    Ok(PyTwoModeState {
        inner: catamp::pipeline::prepare_cat(&config.inner).map_err(py_err)?,
    })
}

/// Post-selected state at the configured analyzer phase.
#[pyfunction]
fn postselected_state(config: &PyExperimentConfig) -> PyResult<PyTwoModeState> {
    Ok(PyTwoModeState {
        inner: catamp::pipeline::postselected_state(&config.inner).map_err(py_err)?,
    })
}

/// Post-selection probability at the configured analyzer phase.
#[pyfunction]
fn accepted_probability(config: &PyExperimentConfig) -> PyResult<f64> {
    match config.inner.postselect_mode {
        PostSelectMode::BranchDrop => catamp::pipeline::accepted_probability(&config.inner),
        PostSelectMode::HomodyneWindow { .. } => {
            catamp::pipeline::homodyne_probability(&config.inner)
        }
    }
    .map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (config, theta_steps = 64))]
fn visibility_sweep<'py>(
    py: Python<'py>,
    config: &PyExperimentConfig,
    theta_steps: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let r = catamp::pipeline::visibility_sweep(&config.inner, &uniform_theta_grid(theta_steps))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("theta", r.samples.iter().map(|s| s.0).collect::<Vec<_>>())?;
    d.set_item(
        "probability",
        r.samples.iter().map(|s| s.1).collect::<Vec<_>>(),
    )?;
    d.set_item("p_max", r.p_max)?;
    d.set_item("p_min", r.p_min)?;
    d.set_item("visibility", r.visibility)?;
    d.set_item("reference_visibility", r.reference_visibility)?;
    d.set_item("mode", r.mode.name())?;
    Ok(d)
}

/// Closed-form fringe visibility for `phi = π/2`.
#[pyfunction]
fn visibility_closed_form(g: f64, alpha0_mag: f64) -> PyResult<f64> {
    catamp::qfunc::visibility_closed_form(g, alpha0_mag).map_err(py_err)
}

/// Post-selection probability from the closed-form Q-function integral.
#[pyfunction]
#[pyo3(signature = (config, stage = "post_analyzer"))]
fn q_probability(config: &PyExperimentConfig, stage: &str) -> PyResult<f64> {
    let terms = catamp::qfunc::build_q_terms(&config.inner, parse_stage(stage)?);
    catamp::qfunc::integrate_probability(&terms).map_err(py_err)
}

/// Two-mode Q-function `Q(alpha, beta)`.
#[pyfunction]
#[pyo3(signature = (config, alpha, beta, stage = "post_analyzer"))]
fn q_value(config: &PyExperimentConfig, alpha: C64, beta: C64, stage: &str) -> PyResult<f64> {
    let terms = catamp::qfunc::build_q_terms(&config.inner, parse_stage(stage)?);
    catamp::qfunc::q_value(&terms, alpha, beta).map_err(py_err)
}

#[pyfunction]
#[pyo3(signature = (config, theta_steps = 32))]
fn variance_report<'py>(
    py: Python<'py>,
    config: &PyExperimentConfig,
    theta_steps: usize,
) -> PyResult<Bound<'py, PyDict>> {
    let r = catamp::audit::discrepancy_report(&config.inner, &uniform_theta_grid(theta_steps))
        .map_err(py_err)?;
    let d = PyDict::new(py);
    d.set_item("theta", r.theta_samples)?;
    d.set_item("naive_variance", r.naive_variance)?;
    d.set_item("exact_variance", r.exact_variance)?;
    d.set_item("naive_modulation_ratio", r.naive_modulation_ratio)?;
    d.set_item("exact_modulation_ratio", r.exact_modulation_ratio)?;
    d.set_item("disagreement", r.disagreement)?;
    Ok(d)
}

/// Dense-exponential reference for the two-mode squeeze (dims ≤ 16).
#[pyfunction]
fn squeeze_oracle(state: &PyTwoModeState, r: f64) -> PyResult<PyTwoModeState> {
    Ok(PyTwoModeState {
        inner: catamp::oracle::squeeze_oracle(&state.inner, r).map_err(py_err)?,
    })
}

/// Runs the validation checks; returns `{name: passed}`.
#[pyfunction]
#[pyo3(signature = (only = None))]
fn run_checks<'py>(py: Python<'py>, only: Option<Vec<String>>) -> PyResult<Bound<'py, PyDict>> {
    let outcomes = catamp::validation::run_checks(only.as_deref()).map_err(py_err)?;
    let d = PyDict::new(py);
    for c in outcomes {
        d.set_item(c.name, c.passed())?;
    }
    Ok(d)
}

#[pymodule]
fn catamp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyTwoModeState>()?;
    m.add_class::<PyExperimentConfig>()?;
    m.add_function(wrap_pyfunction!(prepare_cat, m)?)?;
    m.add_function(wrap_pyfunction!(postselected_state, m)?)?;
    m.add_function(wrap_pyfunction!(accepted_probability, m)?)?;
    m.add_function(wrap_pyfunction!(visibility_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(visibility_closed_form, m)?)?;
    m.add_function(wrap_pyfunction!(q_probability, m)?)?;
    m.add_function(wrap_pyfunction!(q_value, m)?)?;
    m.add_function(wrap_pyfunction!(variance_report, m)?)?;
    m.add_function(wrap_pyfunction!(squeeze_oracle, m)?)?;
    m.add_function(wrap_pyfunction!(run_checks, m)?)?;
    Ok(())
}
