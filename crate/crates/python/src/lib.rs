//! Python bindings. Heavy calls release the interpreter lock while they run.

use std::path::PathBuf;

use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use deltacon_core::affinity::SolverConfig;
use deltacon_core::cluster::{pairwise_similarity, ward_cluster};
use deltacon_core::deltacon::{DeltaConOptions, SimilarityResult, Variant};
use deltacon_core::properties::Comparator;
use deltacon_core::temporal::{control_limits, similarity_timeline};
use deltacon_core::{generate_named, load_edge_list, Error, Method};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(e) => PyOSError::new_err(e.to_string()),
        e @ Error::NotConverged { .. } => PyRuntimeError::new_err(e.to_string()),
        e => PyValueError::new_err(e.to_string()),
    }
}

/// Undirected weighted graph on nodes `0..n`.
#[pyclass(frozen, module = "deltacon", skip_from_py_object)]
struct Graph {
    inner: deltacon_core::Graph,
}

#[pymethods]
impl Graph {
    /// `edges` holds `(u, v)` or `(u, v, weight)` tuples.
    #[new]
    fn new(n: usize, edges: Vec<Bound<'_, PyAny>>) -> PyResult<Self> {
        let mut triples = Vec::with_capacity(edges.len());
        for e in edges {
            let t = if let Ok((u, v, w)) = e.extract::<(usize, usize, f64)>() {
                (u, v, w)
            } else {
                let (u, v) = e
                    .extract::<(usize, usize)>()
                    .map_err(|_| PyValueError::new_err("edges must be (u, v) or (u, v, weight)"))?;
                (u, v, 1.0)
            };
            triples.push(t);
        }
        let inner = deltacon_core::Graph::new(n, triples).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[staticmethod]
    #[pyo3(signature = (path, nodes=None, one_based=false))]
    fn load(path: PathBuf, nodes: Option<usize>, one_based: bool) -> PyResult<Self> {
        let inner = load_edge_list(path, nodes, one_based).map_err(to_py)?;
        Ok(Self { inner })
    }

    /// Named topology such as `"K10"`, `"mB10"` or `"w5WhB20"`.
    #[staticmethod]
    #[pyo3(signature = (name, seed=0))]
    fn synthetic(name: &str, seed: u64) -> PyResult<Self> {
        let inner = generate_named(name, seed).map_err(to_py)?;
        Ok(Self { inner })
    }

    #[getter]
    fn node_count(&self) -> usize {
        self.inner.node_count()
    }

    #[getter]
    fn edge_count(&self) -> usize {
        self.inner.edge_count()
    }

    fn edges(&self) -> Vec<(usize, usize, f64)> {
        self.inner
            .edges()
            .iter()
            .map(|e| (e.u, e.v, e.weight))
            .collect()
    }

    fn degree(&self, u: usize) -> PyResult<f64> {
        if u >= self.inner.node_count() {
            return Err(PyValueError::new_err(format!("node {u} out of range")));
        }
        Ok(self.inner.degree(u))
    }

    fn __len__(&self) -> usize {
        self.inner.node_count()
    }

    fn __repr__(&self) -> String {
        format!(
            "Graph(nodes={}, edges={})",
            self.inner.node_count(),
            self.inner.edge_count()
        )
    }
}

fn options(epsilon: Option<f64>, tol: f64, max_iter: usize) -> DeltaConOptions {
    DeltaConOptions {
        epsilon,
        solver: SolverConfig {
            tol,
            max_iter,
            ..SolverConfig::default()
        },
    }
}

fn parse_method(name: &str) -> PyResult<Method> {
    name.parse().map_err(to_py)
}

fn variant(method: Method, g: usize, seeds: u64) -> PyResult<Variant> {
    match method {
        Method::Dc0 => Ok(Variant::Exact),
        Method::Dc => Ok(Variant::grouped(g, 0..seeds)),
        m => Err(PyValueError::new_err(format!(
            "only dc0 and dc work on collections, got {}",
            m.cli_name()
        ))),
    }
}

fn record<'py>(py: Python<'py>, r: &SimilarityResult) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("method", r.method.tag())?;
    d.set_item("distance", r.distance)?;
    d.set_item("similarity", r.similarity)?;
    d.set_item("epsilon", r.epsilon)?;
    d.set_item("g", r.g)?;
    d.set_item("seed", r.seed)?;
    d.set_item("runtime_ms", r.runtime_ms)?;
    if let Some(seeds) = &r.seeds {
        d.set_item("seeds", seeds.clone())?;
    }
    if let Some(std) = r.similarity_std {
        d.set_item("similarity_std", std)?;
    }
    Ok(d)
}

/// Compares two graphs and returns the result record as a dict.
///
/// `method` is one of dc0, dc, veo, ged, lambda-adj, lambda-lap, lambda-nl.
/// `dc` averages over partition seeds `0..seeds`.
#[pyfunction]
#[pyo3(signature = (g1, g2, method="dc0", g=5, seeds=1, epsilon=None, tol=1e-9, max_iter=1000))]
#[allow(clippy::too_many_arguments)]
fn compare<'py>(
    py: Python<'py>,
    g1: &Graph,
    g2: &Graph,
    method: &str,
    g: usize,
    seeds: u64,
    epsilon: Option<f64>,
    tol: f64,
    max_iter: usize,
) -> PyResult<Bound<'py, PyDict>> {
    if seeds == 0 || g == 0 {
        return Err(PyValueError::new_err("g and seeds must be at least 1"));
    }
    let cmp = Comparator {
        method: parse_method(method)?,
        groups: g,
        seeds: (0..seeds).collect(),
        options: options(epsilon, tol, max_iter),
    };
    let (a, b) = (&g1.inner, &g2.inner);
    let r = py.detach(|| cmp.compare(a, b)).map_err(to_py)?;
    record(py, &r)
}

/// Symmetric similarity matrix of a collection, one epsilon for all graphs.
#[pyfunction]
#[pyo3(signature = (graphs, method="dc", g=5, seeds=1))]
fn similarity_matrix(
    py: Python<'_>,
    graphs: Vec<PyRef<'_, Graph>>,
    method: &str,
    g: usize,
    seeds: u64,
) -> PyResult<Vec<Vec<f64>>> {
    let v = variant(parse_method(method)?, g, seeds)?;
    let gs: Vec<_> = graphs.iter().map(|x| x.inner.clone()).collect();
    py.detach(|| pairwise_similarity(&gs, &v, &DeltaConOptions::default()))
        .map_err(to_py)
}

/// Ward clustering of a similarity matrix, cut into `k` flat clusters.
#[pyfunction]
fn ward_labels(similarity: Vec<Vec<f64>>, k: usize) -> PyResult<Vec<usize>> {
    ward_cluster(&similarity)
        .and_then(|d| d.cut(k))
        .map_err(to_py)
}

/// Similarity of each snapshot to the next.
#[pyfunction]
#[pyo3(signature = (snapshots, method="dc0", g=5, seeds=1))]
fn timeline(
    py: Python<'_>,
    snapshots: Vec<PyRef<'_, Graph>>,
    method: &str,
    g: usize,
    seeds: u64,
) -> PyResult<Vec<f64>> {
    let v = variant(parse_method(method)?, g, seeds)?;
    let gs: Vec<_> = snapshots.iter().map(|x| x.inner.clone()).collect();
    py.detach(|| similarity_timeline(&gs, &v, &DeltaConOptions::default()))
        .map_err(to_py)
}

/// Moving-range control chart over a score series.
#[pyfunction]
fn anomalies<'py>(py: Python<'py>, scores: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let r = control_limits(&scores).map_err(to_py)?;
    let d = PyDict::new(py);
    d.set_item("median", r.median)?;
    d.set_item("sigma_hat", r.sigma_hat)?;
    d.set_item("lower", r.lower_limit)?;
    d.set_item("upper", r.upper_limit)?;
    d.set_item("flagged", r.flagged)?;
    d.set_item("above_upper", r.above_upper)?;
    Ok(d)
}

#[pymodule]
fn deltacon(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Graph>()?;
    m.add_function(wrap_pyfunction!(compare, m)?)?;
    m.add_function(wrap_pyfunction!(similarity_matrix, m)?)?;
    m.add_function(wrap_pyfunction!(ward_labels, m)?)?;
    m.add_function(wrap_pyfunction!(timeline, m)?)?;
    m.add_function(wrap_pyfunction!(anomalies, m)?)?;
    Ok(())
}
