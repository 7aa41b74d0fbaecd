//! Python bindings for the three-bit dephasing-correction simulator.

use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use qec3_core::analytics::{self, DecayCurve, DecayModel, Provenance};
use qec3_core::diffusion::{self, DiffusionScheme, GradientDiffusionSpec};
use qec3_core::noise::{DephasingAxis, NoiseChannel};
use qec3_core::protocol::{self, AncillaPreparation, DataState, PipelineConfig};

fn value_error(e: qec3_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn parse_axis(axis: &str) -> PyResult<DephasingAxis> {
    match axis {
        "x" => Ok(DephasingAxis::X),
        "z" => Ok(DephasingAxis::Z),
        other => Err(PyValueError::new_err(format!(
            "axis must be 'x' or 'z', got '{other}'"
        ))),
    }
}

fn parse_model(model: &str) -> PyResult<DecayModel> {
    match model {
        "correlated" | "totally-correlated" => Ok(DecayModel::TotallyCorrelated),
        "uncorrelated" => Ok(DecayModel::Uncorrelated),
        other => Err(PyValueError::new_err(format!(
            "model must be 'correlated' or 'uncorrelated', got '{other}'"
        ))),
    }
}

/// Symmetric positive-semidefinite matrix of phase-diffusion rates.
#[pyclass(frozen, from_py_object, name = "CovarianceMatrix")]
#[derive(Clone)]
struct PyCovariance(qec3_core::CovarianceMatrix);

#[pymethods]
impl PyCovariance {
    #[new]
    fn new(rows: [[f64; 3]; 3]) -> PyResult<Self> {
        qec3_core::CovarianceMatrix::from_rows(rows)
            .map(Self)
            .map_err(value_error)
    }

    #[staticmethod]
    fn uncorrelated(tau: f64) -> PyResult<Self> {
        qec3_core::CovarianceMatrix::uncorrelated(tau)
            .map(Self)
            .map_err(value_error)
    }

    #[staticmethod]
    fn totally_correlated(tau: f64) -> PyResult<Self> {
        qec3_core::CovarianceMatrix::totally_correlated(tau)
            .map(Self)
            .map_err(value_error)
    }

    fn rows(&self) -> [[f64; 3]; 3] {
        self.0.rows()
    }

    fn eigenvalues(&self) -> [f64; 3] {
        self.0.eigenvalues()
    }

    fn __repr__(&self) -> String {
        format!("CovarianceMatrix({:?})", self.0.rows())
    }
}

#[pyclass(frozen, from_py_object, name = "BlochVector")]
#[derive(Clone, Copy)]
struct PyBloch(qec3_core::BlochVector);

#[pymethods]
impl PyBloch {
    #[new]
    fn new(x: f64, y: f64, z: f64) -> PyResult<Self> {
        qec3_core::BlochVector::new(x, y, z)
            .map(Self)
            .map_err(value_error)
    }

    #[getter]
    fn x(&self) -> f64 {
        self.0.x
    }

    #[getter]
    fn y(&self) -> f64 {
        self.0.y
    }

    #[getter]
    fn z(&self) -> f64 {
        self.0.z
    }

    fn __repr__(&self) -> String {
        format!("BlochVector({}, {}, {})", self.0.x, self.0.y, self.0.z)
    }
}

/// Corrected decay Θ(t) of the data spin's transverse components.
#[pyfunction]
fn theta(cov: &PyCovariance, t: f64) -> f64 {
    analytics::theta_general(&cov.0, t)
}

#[pyfunction]
fn uncorrected_decay(cov: &PyCovariance, t: f64) -> f64 {
    analytics::uncorrected_decay(&cov.0, t)
}

/// `(first, second, third, third_alternative)` derivatives at t = 0.
#[pyfunction]
fn theta_derivatives(cov: &PyCovariance) -> (f64, f64, f64, f64) {
    let d = analytics::theta_derivatives_at_zero(&cov.0);
    (d.first, d.second, d.third, d.third_alternative)
}

fn pipeline(
    cov: &PyCovariance,
    bloch: &PyBloch,
    axis: &str,
    correction: bool,
) -> PyResult<PipelineConfig> {
    Ok(PipelineConfig::new(
        DataState::Bloch(bloch.0),
        NoiseChannel::analytic(cov.0, parse_axis(axis)?),
    )
    .with_correction(correction))
}

/// Returns the output Bloch vector and the measured Θ (None without y/z input).
#[pyfunction]
#[pyo3(signature = (cov, t, bloch, axis = "x", correction = true))]
fn run_pipeline(
    cov: &PyCovariance,
    t: f64,
    bloch: &PyBloch,
    axis: &str,
    correction: bool,
) -> PyResult<(PyBloch, Option<f64>)> {
    let r =
        protocol::run_pipeline(&pipeline(cov, bloch, axis, correction)?, t).map_err(value_error)?;
    Ok((PyBloch(r.bloch_out), r.theta_measured))
}

/// Monte Carlo pipeline: output Bloch vector, Θ and its standard error.
#[pyfunction]
#[pyo3(signature = (cov, t, bloch, samples, seed, axis = "x", correction = true))]
#[allow(clippy::too_many_arguments)]
fn run_pipeline_mc(
    py: Python<'_>,
    cov: &PyCovariance,
    t: f64,
    bloch: &PyBloch,
    samples: u64,
    seed: u64,
    axis: &str,
    correction: bool,
) -> PyResult<(PyBloch, Option<f64>, Option<f64>)> {
    let config = pipeline(cov, bloch, axis, correction)?;
    let r = py
        .detach(|| protocol::run_pipeline_mc(&config, t, samples, seed))
        .map_err(value_error)?;
    Ok((
        PyBloch(r.result.bloch_out),
        r.result.theta_measured,
        r.theta_std_error,
    ))
}

/// Θ with ancillae prepared in the mixture `(μ++, μ+−, μ−+, μ−−)`.
#[pyfunction]
fn mixed_ancilla_theta(weights: [f64; 4], cov: &PyCovariance, t: f64) -> PyResult<f64> {
    let mix = protocol::AncillaMixture::from_weights(weights).map_err(value_error)?;
    Ok(protocol::mixed_ancilla_theta(&mix, &cov.0, t))
}

#[pyfunction]
fn mixed_ancilla_rate(weights: [f64; 4], cov: &PyCovariance) -> PyResult<f64> {
    let mix = protocol::AncillaMixture::from_weights(weights).map_err(value_error)?;
    Ok(protocol::mixed_ancilla_rate_at_zero(&mix, &cov.0))
}

/// Mixed-ancilla pipeline run through the full gate sequence.
#[pyfunction]
#[pyo3(signature = (weights, cov, t, bloch, axis = "x"))]
fn run_mixed_pipeline(
    weights: [f64; 4],
    cov: &PyCovariance,
    t: f64,
    bloch: &PyBloch,
    axis: &str,
) -> PyResult<(PyBloch, Option<f64>)> {
    let mix = protocol::AncillaMixture::from_weights(weights).map_err(value_error)?;
    let config = pipeline(cov, bloch, axis, true)?.with_ancillae(AncillaPreparation::Mixture(mix));
    let r = protocol::run_pipeline(&config, t).map_err(value_error)?;
    Ok((PyBloch(r.bloch_out), r.theta_measured))
}

/// Grid search of ancilla mixtures whose initial slope vanishes under every
/// given covariance.
#[pyfunction]
fn nogo<'py>(py: Python<'py>, covs: Vec<PyCovariance>, step: f64) -> PyResult<Bound<'py, PyDict>> {
    let covs: Vec<_> = covs.into_iter().map(|c| c.0).collect();
    let cert = protocol::mixed_ancilla_nogo_joint(&covs, step).map_err(value_error)?;
    let out = PyDict::new(py);
    out.set_item("points", cert.points)?;
    out.set_item(
        "zeros",
        cert.zeros.iter().map(|z| z.weights()).collect::<Vec<_>>(),
    )?;
    out.set_item("vertex_rates", cert.vertex_rates.clone())?;
    out.set_item("ground_unique", cert.ground_is_unique_zero())?;
    out.set_item("min_margin", cert.min_margin_off_ground)?;
    out.set_item("max_margin", cert.max_margin_off_ground)?;
    Ok(out)
}

/// Log-linear fit: `(rate, intercept, correlation)`.
#[pyfunction]
fn fit(times: Vec<f64>, values: Vec<f64>) -> PyResult<(f64, f64, f64)> {
    let curve = DecayCurve::new(times, values, Provenance::Measured).map_err(value_error)?;
    let r = analytics::fit_exponential_rate(&curve).map_err(value_error)?;
    Ok((r.rate, r.intercept, r.correlation_coefficient))
}

/// Corrected decay predicted from a single-spin rate.
#[pyfunction]
fn predict(rate: f64, model: &str, times: Vec<f64>) -> PyResult<Vec<f64>> {
    let curve = analytics::predict_corrected_curve(rate, parse_model(model)?, &times)
        .map_err(value_error)?;
    Ok(curve.values().to_vec())
}

/// Echo attenuation of an `n`-quantum coherence after gradient winding.
#[pyfunction]
#[pyo3(signature = (wavenumber, diffusion_coefficient, diffusion_time, coherence_order, correlated = true))]
fn attenuation_factor(
    wavenumber: f64,
    diffusion_coefficient: f64,
    diffusion_time: f64,
    coherence_order: i32,
    correlated: bool,
) -> PyResult<f64> {
    let scheme = if correlated {
        DiffusionScheme::TotallyCorrelated
    } else {
        DiffusionScheme::Uncorrelated
    };
    let spec =
        GradientDiffusionSpec::new(wavenumber, diffusion_coefficient, diffusion_time, scheme)
            .map_err(value_error)?;
    Ok(diffusion::attenuation_factor(&spec, coherence_order))
}

#[pyfunction]
#[pyo3(signature = (wavenumber, diffusion_coefficient, correlated = true))]
fn diffusion_covariance(
    wavenumber: f64,
    diffusion_coefficient: f64,
    correlated: bool,
) -> PyResult<PyCovariance> {
    let scheme = if correlated {
        DiffusionScheme::TotallyCorrelated
    } else {
        DiffusionScheme::Uncorrelated
    };
    let spec = GradientDiffusionSpec::new(wavenumber, diffusion_coefficient, 0.0, scheme)
        .map_err(value_error)?;
    diffusion::spec_to_covariance(&spec)
        .map(PyCovariance)
        .map_err(value_error)
}

#[pymodule]
fn qec3(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCovariance>()?;
    m.add_class::<PyBloch>()?;
    m.add_function(wrap_pyfunction!(theta, m)?)?;
    m.add_function(wrap_pyfunction!(uncorrected_decay, m)?)?;
    m.add_function(wrap_pyfunction!(theta_derivatives, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(run_pipeline_mc, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_ancilla_theta, m)?)?;
    m.add_function(wrap_pyfunction!(mixed_ancilla_rate, m)?)?;
    m.add_function(wrap_pyfunction!(run_mixed_pipeline, m)?)?;
    m.add_function(wrap_pyfunction!(nogo, m)?)?;
    m.add_function(wrap_pyfunction!(fit, m)?)?;
    m.add_function(wrap_pyfunction!(predict, m)?)?;
    m.add_function(wrap_pyfunction!(attenuation_factor, m)?)?;
    m.add_function(wrap_pyfunction!(diffusion_covariance, m)?)?;
    Ok(())
}
