use std::collections::BTreeMap;

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyBool, PyDict, PyList};

use ::flexkrylov::experiments::{emit_report, run_experiment_with, ExperimentConfig, History};
use ::flexkrylov::FlexError;

fn to_py_err(e: FlexError) -> PyErr {
    match e {
        FlexError::InvalidInput(msg) => PyValueError::new_err(msg),
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

/// `(κ-1)/(κ+1)`, the per-step reduction bound for a cone of condition `κ`.
#[pyfunction]
fn spectral_bound(kappa_max: f64) -> PyResult<f64> {
    ::flexkrylov::cone::spectral_bound(kappa_max).map_err(to_py_err)
}

fn history_dict<'py>(py: Python<'py>, h: &History) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("method", &h.method)?;
    d.set_item("variant", &h.variant)?;
    d.set_item("preconditioner", &h.preconditioner)?;
    d.set_item("error_a_norms", &h.error_a_norms)?;
    d.set_item("reduction_factors", h.reduction_factors())?;
    d.set_item("inner_iterations", &h.inner_iterations)?;
    d.set_item("bound_factor", h.bound_factor)?;
    d.set_item("mean_reduction", h.mean_reduction())?;
    d.set_item("failure", &h.failure)?;
    let audits = PyDict::new(py);
    for a in &h.audits {
        audits.set_item(a.name, (a.value, a.threshold, a.passed()))?;
    }
    d.set_item("audits", audits)?;
    Ok(d)
}

/// Runs `experiment` ("fig1", "fig2", "fig3" or "custom"). Keyword arguments
/// use the configuration-file keys (`n`, `kappa_max`, `eta`, `iters`, ...);
/// when `out` is given together with `csv`, `svg` or `audit`, the files are
/// written there. Returns one dict per history.
#[pyfunction]
#[pyo3(signature = (experiment, audit_traces=false, **overrides))]
fn run_experiment<'py>(
    py: Python<'py>,
    experiment: &str,
    audit_traces: bool,
    overrides: Option<&Bound<'py, PyDict>>,
) -> PyResult<Bound<'py, PyList>> {
    let mut map = BTreeMap::new();
    map.insert("experiment".to_string(), experiment.to_string());
    if let Some(kw) = overrides {
        for (k, v) in kw.iter() {
            let key: String = k.extract::<String>()?.replace('-', "_");
            let value = if let Ok(b) = v.cast::<PyBool>() {
                b.is_true().to_string()
            } else if let Ok(list) = v.cast::<PyList>() {
                let parts: Vec<String> = list.iter().map(|x| x.str().map(|s| s.to_string())).collect::<PyResult<_>>()?;
                parts.join(",")
            } else {
                v.str()?.to_string()
            };
            map.insert(key, value);
        }
    }
    let config = ExperimentConfig::from_map(&map).map_err(to_py_err)?;
    let audit = audit_traces || config.emit.audit;
    let report = py.detach(|| run_experiment_with(&config, audit)).map_err(to_py_err)?;
    if let Some(dir) = &config.out_dir {
        if config.emit.any() {
            emit_report(&report, config.emit, dir).map_err(to_py_err)?;
        }
    }
    let out = PyList::empty(py);
    for h in &report.histories {
        out.append(history_dict(py, h)?)?;
    }
    Ok(out)
}

#[pymodule]
fn flexkrylov(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(spectral_bound, m)?)?;
    m.add_function(wrap_pyfunction!(run_experiment, m)?)?;
    Ok(())
}
