//! Python bindings. Indices are 0-based on the Python side.

use pyo3::exceptions::{PyIOError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use latentnn::estimator::{self, EstimatorConfig, Fallback, Provenance, Target, Variant};
use latentnn::evalbound::{self, BoundParams, Scope};
use latentnn::obsdata::{self, DenseMatrix, MatrixFormat};
use latentnn::simstats;
use latentnn::synthgen::{self, LatentModelSpec};
use latentnn::tensorize::{self, FlatteningPlan, PartitionMode};
use latentnn::Error;

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyIOError::new_err(io.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

fn dense_rows(m: &DenseMatrix) -> Vec<Vec<f64>> {
    (0..m.nrows()).map(|u| m.row(u).to_vec()).collect()
}

fn dense_from_rows(rows: Vec<Vec<f64>>) -> PyResult<DenseMatrix> {
    let nrows = rows.len();
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(PyValueError::new_err("rows must have equal length"));
    }
    DenseMatrix::from_vec(nrows, ncols, rows.concat()).map_err(to_py)
}

/// Partially observed real matrix.
#[pyclass(name = "ObservationMatrix", module = "latentnn", frozen, from_py_object)]
#[derive(Clone)]
struct PyObservationMatrix {
    inner: obsdata::ObservationMatrix,
}

#[pymethods]
impl PyObservationMatrix {
    #[new]
    #[pyo3(signature = (m, n, entries=Vec::new()))]
    fn new(m: usize, n: usize, entries: Vec<(usize, usize, f64)>) -> PyResult<Self> {
        let inner = obsdata::ObservationMatrix::new(m, n, entries).map_err(to_py)?;
        Ok(PyObservationMatrix { inner })
    }

    /// Loads `triplet-csv`, `movielens-dat` or `dense-csv` from a file.
    #[staticmethod]
    #[pyo3(signature = (path, format="triplet-csv"))]
    fn load(path: &str, format: &str) -> PyResult<Self> {
        let format: MatrixFormat = format.parse().map_err(to_py)?;
        let file = std::fs::File::open(path).map_err(|e| to_py(e.into()))?;
        let inner = obsdata::load_observations(std::io::BufReader::new(file), format).map_err(to_py)?;
        Ok(PyObservationMatrix { inner })
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.nrows(), self.inner.ncols())
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn get(&self, u: usize, i: usize) -> Option<f64> {
        if u < self.inner.nrows() && i < self.inner.ncols() {
            self.inner.get(u, i)
        } else {
            None
        }
    }

    fn entries(&self) -> Vec<(usize, usize, f64)> {
        self.inner.entries().collect()
    }

    fn transpose(&self) -> Self {
        PyObservationMatrix {
            inner: self.inner.transpose(),
        }
    }

    fn __repr__(&self) -> String {
        format!(
            "ObservationMatrix({}x{}, {} observed)",
            self.inner.nrows(),
            self.inner.ncols(),
            self.inner.len()
        )
    }
}

/// Completed matrix with per-cell provenance.
#[pyclass(name = "EstimateMatrix", module = "latentnn", frozen)]
struct PyEstimateMatrix {
    inner: estimator::EstimateMatrix,
}

#[pymethods]
impl PyEstimateMatrix {
    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.nrows(), self.inner.ncols())
    }

    fn get(&self, u: usize, i: usize) -> PyResult<f64> {
        self.check(u, i)?;
        Ok(self.inner.get(u, i))
    }

    /// One of `estimated`, `fallback`, `observed-passthrough`.
    fn provenance(&self, u: usize, i: usize) -> PyResult<&'static str> {
        self.check(u, i)?;
        Ok(provenance_name(self.inner.provenance(u, i)))
    }

    fn values(&self) -> Vec<Vec<f64>> {
        dense_rows(self.inner.values())
    }
}

impl PyEstimateMatrix {
    fn check(&self, u: usize, i: usize) -> PyResult<()> {
        if u >= self.inner.nrows() || i >= self.inner.ncols() {
            return Err(PyValueError::new_err(format!("cell ({u}, {i}) out of range")));
        }
        Ok(())
    }
}

fn provenance_name(p: Provenance) -> &'static str {
    match p {
        Provenance::Estimated => "estimated",
        Provenance::Fallback => "fallback",
        Provenance::ObservedPassthrough => "observed-passthrough",
    }
}

fn config(
    variant: &str,
    k: usize,
    beta: usize,
    beta_high: Option<usize>,
    lam: f64,
    include_self: bool,
    fallback: &str,
) -> PyResult<EstimatorConfig> {
    let cfg = EstimatorConfig {
        variant: variant.parse::<Variant>().map_err(to_py)?,
        k,
        beta_low: beta,
        beta_high,
        lambda: lam,
        include_self,
        fallback: fallback.parse::<Fallback>().map_err(to_py)?,
    };
    cfg.validate().map_err(to_py)?;
    Ok(cfg)
}

/// Completes every missing cell (or every cell with `target="all-entries"`).
#[pyfunction]
#[pyo3(signature = (obs, variant="user-user", k=1, beta=2, beta_high=None, lam=0.0, include_self=false, fallback="zero", target="missing-only"))]
#[allow(clippy::too_many_arguments)]
fn complete(
    py: Python<'_>,
    obs: &PyObservationMatrix,
    variant: &str,
    k: usize,
    beta: usize,
    beta_high: Option<usize>,
    lam: f64,
    include_self: bool,
    fallback: &str,
    target: &str,
) -> PyResult<PyEstimateMatrix> {
    let cfg = config(variant, k, beta, beta_high, lam, include_self, fallback)?;
    let target: Target = target.parse().map_err(to_py)?;
    let inner = py
        .detach(|| estimator::complete_matrix(&obs.inner, &cfg, target))
        .map_err(to_py)?;
    Ok(PyEstimateMatrix { inner })
}

/// Single-cell estimate; returns `(value, provenance)`.
#[pyfunction]
#[pyo3(signature = (obs, u, i, variant="user-user", k=1, beta=2, beta_high=None, lam=0.0, include_self=false, fallback="zero"))]
#[allow(clippy::too_many_arguments)]
fn estimate(
    obs: &PyObservationMatrix,
    u: usize,
    i: usize,
    variant: &str,
    k: usize,
    beta: usize,
    beta_high: Option<usize>,
    lam: f64,
    include_self: bool,
    fallback: &str,
) -> PyResult<(f64, &'static str)> {
    let cfg = config(variant, k, beta, beta_high, lam, include_self, fallback)?;
    let (value, prov) = match cfg.variant {
        Variant::UserItemGaussian => {
            let e = estimator::weighted_estimate(&obs.inner, u, i, &cfg).map_err(to_py)?;
            (e.value, e.provenance)
        }
        _ => {
            let e = estimator::knn_estimate(&obs.inner, u, i, &cfg).map_err(to_py)?;
            (e.value, e.provenance)
        }
    };
    Ok((value, provenance_name(prov)))
}

/// `Z(u,j) + Z(v,i) - Z(v,j)`.
#[pyfunction]
fn basic_estimate(obs: &PyObservationMatrix, v: usize, j: usize, u: usize, i: usize) -> PyResult<f64> {
    estimator::basic_estimate(&obs.inner, v, j, u, i).map_err(to_py)
}

/// `(overlap, mean_diff, sample_var)`; `sample_var` is `None` below two
/// shared columns.
#[pyfunction]
fn pair_stats(obs: &PyObservationMatrix, u: usize, v: usize) -> PyResult<(usize, f64, Option<f64>)> {
    let s = simstats::pair_stats(&obs.inner, u, v, simstats::no_exclusion).map_err(to_py)?;
    Ok((s.overlap, s.mean_diff, s.sample_var))
}

/// Samples a matrix instance from a JSON spec; returns `(observed, truth)`.
#[pyfunction]
fn synth(py: Python<'_>, spec_json: &str) -> PyResult<(PyObservationMatrix, Vec<Vec<f64>>)> {
    let spec: LatentModelSpec = serde_json::from_str(spec_json).map_err(|e| to_py(e.into()))?;
    let inst = py.detach(|| synthgen::sample_instance(&spec)).map_err(to_py)?;
    let observed = inst.observed_matrix().map_err(to_py)?;
    let truth = inst.truth_matrix().map_err(to_py)?;
    Ok((PyObservationMatrix { inner: observed }, dense_rows(&truth)))
}

#[pyfunction]
fn mse(estimate: Vec<Vec<f64>>, truth: Vec<Vec<f64>>) -> PyResult<f64> {
    let (est, truth) = (dense_from_rows(estimate)?, dense_from_rows(truth)?);
    evalbound::mse(&est, &truth, Scope::All).map_err(to_py)
}

/// Matrix MSE bound with uniform-cube defaults; keyword overrides for
/// `beta`, `k` and `zeta`.
#[pyfunction]
#[pyo3(signature = (m, n, p, lipschitz=1.0, d=1, b_e=0.0, beta=None, k=None, zeta=None))]
#[allow(clippy::too_many_arguments)]
fn matrix_mse_bound<'py>(
    py: Python<'py>,
    m: usize,
    n: usize,
    p: f64,
    lipschitz: f64,
    d: usize,
    b_e: f64,
    beta: Option<f64>,
    k: Option<f64>,
    zeta: Option<f64>,
) -> PyResult<Bound<'py, PyDict>> {
    let mut params = BoundParams::uniform_cube(m, n, p, lipschitz, d, b_e);
    params.beta = beta.unwrap_or(params.beta);
    params.k = k.unwrap_or(params.k);
    params.zeta = zeta.unwrap_or(params.zeta);
    let r = evalbound::matrix_mse_bound(&params).map_err(to_py)?;
    let out = PyDict::new(py);
    for (key, value) in [
        ("F1", r.f1),
        ("F2", r.f2),
        ("F3", r.f3),
        ("c1", r.c1),
        ("c2", r.c2),
        ("B0", r.b0),
        ("mse_bound", r.mse_bound),
    ] {
        out.set_item(key, value)?;
    }
    out.set_item("validity", r.validity.into_iter().collect::<Vec<_>>())?;
    Ok(out)
}

/// Matrix position of a tensor coordinate under the flattening whose rows
/// are `row_modes`.
#[pyfunction]
fn flatten_index(shape: Vec<usize>, row_modes: Vec<usize>, coords: Vec<usize>) -> PyResult<(usize, usize)> {
    let plan = FlatteningPlan::from_row_modes(shape, &row_modes).map_err(to_py)?;
    tensorize::flatten_index(&coords, &plan).map_err(to_py)
}

/// `(row_modes, col_modes)` of the optimal bipartition; `mode` is `user` or `item`.
#[pyfunction]
#[pyo3(signature = (shape, mode="user"))]
fn optimal_partition(shape: Vec<usize>, mode: &str) -> PyResult<(Vec<usize>, Vec<usize>)> {
    let mode = match mode {
        "user" => PartitionMode::User,
        "item" => PartitionMode::Item,
        other => return Err(PyValueError::new_err(format!("unknown mode `{other}`"))),
    };
    let plan = tensorize::optimal_partition(&shape, mode).map_err(to_py)?;
    Ok((plan.row_modes().to_vec(), plan.col_modes().to_vec()))
}

#[pymodule]
#[pyo3(name = "latentnn")]
fn latentnn_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyObservationMatrix>()?;
    m.add_class::<PyEstimateMatrix>()?;
    m.add_function(wrap_pyfunction!(complete, m)?)?;
    m.add_function(wrap_pyfunction!(estimate, m)?)?;
    m.add_function(wrap_pyfunction!(basic_estimate, m)?)?;
    m.add_function(wrap_pyfunction!(pair_stats, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    m.add_function(wrap_pyfunction!(mse, m)?)?;
    m.add_function(wrap_pyfunction!(matrix_mse_bound, m)?)?;
    m.add_function(wrap_pyfunction!(flatten_index, m)?)?;
    m.add_function(wrap_pyfunction!(optimal_partition, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}
