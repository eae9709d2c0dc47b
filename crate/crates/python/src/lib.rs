//! Python bindings for `penum`.

use pyo3::exceptions::{PyOSError, PyOverflowError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use penum::curvature::{self, Model};
use penum::deconv::DeconvProblem;
use penum::lift::{build_super_graph, PatchCover};
use penum::trws::{run, Algorithm, SolverOptions};

fn to_py(e: penum::Error) -> PyErr {
    match e {
        penum::Error::Infeasible(_) => PyRuntimeError::new_err(e.to_string()),
        penum::Error::Capacity { .. } => PyOverflowError::new_err(e.to_string()),
        penum::Error::Io(_) => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A high-order energy over discrete variables.
#[pyclass(name = "FactorGraph")]
struct PyFactorGraph(penum::FactorGraph);

#[pymethods]
impl PyFactorGraph {
    #[new]
    fn new(label_counts: Vec<usize>) -> PyResult<Self> {
        penum::FactorGraph::new(label_counts).map(Self).map_err(to_py)
    }

    #[getter]
    fn num_vars(&self) -> usize {
        self.0.num_vars()
    }

    /// Adds a factor; `table` is indexed with the first scope variable most significant.
    fn add_factor(&mut self, scope: Vec<usize>, table: Vec<f64>) -> PyResult<usize> {
        self.0.add_factor(scope, table).map_err(to_py)
    }

    fn add_unary(&mut self, var: usize, costs: Vec<f64>) -> PyResult<usize> {
        self.0.add_unary(var, costs).map_err(to_py)
    }

    fn add_pairwise(&mut self, a: usize, b: usize, table: Vec<f64>) -> PyResult<usize> {
        self.0.add_pairwise(a, b, table).map_err(to_py)
    }

    fn evaluate(&self, x: Vec<usize>) -> PyResult<f64> {
        self.0.evaluate(&x).map_err(to_py)
    }

    fn brute_force_min(&self) -> PyResult<(Vec<usize>, f64)> {
        self.0.brute_force_min().map(|(x, e)| (x.0, e)).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("FactorGraph(num_vars={}, factors={})", self.0.num_vars(), self.0.factors().len())
    }
}

/// A lifted pairwise problem over overlapping patches.
#[pyclass(name = "SuperGraph")]
struct PySuperGraph(penum::SuperGraph);

#[pymethods]
impl PySuperGraph {
    /// Lifts `graph` onto sliding `side × side` patches of a `width × height` grid.
    #[staticmethod]
    fn from_grid(graph: &PyFactorGraph, width: usize, height: usize, side: usize) -> PyResult<Self> {
        let cover = PatchCover::sliding_grid(width, height, side).map_err(to_py)?;
        build_super_graph(&graph.0, &cover).map(Self).map_err(to_py)
    }

    /// Lifts `graph` onto an explicit list of sorted patches.
    #[staticmethod]
    fn from_patches(graph: &PyFactorGraph, patches: Vec<Vec<usize>>) -> PyResult<Self> {
        let cover = PatchCover::new(patches).map_err(to_py)?;
        build_super_graph(&graph.0, &cover).map(Self).map_err(to_py)
    }

    #[getter]
    fn num_nodes(&self) -> usize {
        self.0.nodes().len()
    }

    #[getter]
    fn num_edges(&self) -> usize {
        self.0.edges().len()
    }

    fn label_counts(&self) -> Vec<usize> {
        self.0.nodes().iter().map(|n| n.label_count()).collect()
    }

    #[pyo3(signature = (max_iters = 10_000, algorithm = "trws"))]
    fn solve(&self, max_iters: usize, algorithm: &str) -> PyResult<PySolveResult> {
        solve(&self.0, max_iters, algorithm)
    }

    fn __repr__(&self) -> String {
        format!("SuperGraph(nodes={}, edges={})", self.0.nodes().len(), self.0.edges().len())
    }
}

#[pyclass(name = "SolveResult", get_all)]
struct PySolveResult {
    labeling: Vec<usize>,
    super_labeling: Vec<usize>,
    consistent: bool,
    energy: f64,
    lower_bound: Option<f64>,
    relative_gap: Option<f64>,
    iterations: usize,
    /// `(iteration, lower_bound, energy, elapsed_ms)` per iteration.
    trace: Vec<(usize, Option<f64>, f64, f64)>,
}

#[pymethods]
impl PySolveResult {
    fn __repr__(&self) -> String {
        let opt = |v: Option<f64>| v.map_or_else(|| "None".to_string(), |v| v.to_string());
        format!(
            "SolveResult(energy={}, lower_bound={}, relative_gap={}, iterations={}, consistent={})",
            self.energy,
            opt(self.lower_bound),
            opt(self.relative_gap),
            self.iterations,
            if self.consistent { "True" } else { "False" }
        )
    }
}

fn solve(sg: &penum::SuperGraph, max_iters: usize, algorithm: &str) -> PyResult<PySolveResult> {
    let algorithm = match algorithm {
        "trws" => Algorithm::Trws,
        "lbp" => Algorithm::Lbp,
        other => return Err(PyValueError::new_err(format!("unknown algorithm {other:?}"))),
    };
    let opts = SolverOptions {
        max_iters,
        algorithm,
        ..Default::default()
    };
    let r = run(sg, &opts).map_err(to_py)?;
    Ok(PySolveResult {
        labeling: r.base.0,
        super_labeling: r.labeling.0,
        consistent: r.consistent,
        energy: r.energy,
        lower_bound: r.lower_bound,
        relative_gap: r.relative_gap,
        iterations: r.iterations,
        trace: r
            .trace
            .iter()
            .map(|t| (t.iteration, t.lower_bound, t.energy, t.elapsed_ms))
            .collect(),
    })
}

/// Patch cost table for "2x2", "3x3" or "5x5" as `(bitmask, cost)` pairs.
#[pyfunction]
#[pyo3(signature = (model, seed = 0, window_side = None))]
fn patch_costs(model: &str, seed: u64, window_side: Option<usize>) -> PyResult<Vec<(u32, f64)>> {
    let model: Model = model.parse().map_err(to_py)?;
    let t = curvature::model_costs(model, seed, window_side).map_err(to_py)?;
    Ok(t.allowed().iter().copied().zip(t.costs().iter().copied()).collect())
}

/// Curvature-regularised segmentation of row-major samples in `[0, 1]`.
#[pyfunction]
#[pyo3(signature = (samples, width, height, lam, model = "2x2", seed = 0, mu_bg = 0.0, mu_fg = 1.0, max_iters = 10_000))]
#[allow(clippy::too_many_arguments)]
fn segment(
    samples: Vec<f64>,
    width: usize,
    height: usize,
    lam: f64,
    model: &str,
    seed: u64,
    mu_bg: f64,
    mu_fg: f64,
    max_iters: usize,
) -> PyResult<PySolveResult> {
    let model: Model = model.parse().map_err(to_py)?;
    if samples.len() != width * height {
        return Err(PyValueError::new_err("samples do not match width * height"));
    }
    let table = curvature::model_costs(model, seed, None).map_err(to_py)?;
    let data = curvature::data_term_from_image(&samples, mu_bg, mu_fg);
    let inst = curvature::build_segmentation_instance(width, height, data, lam, table).map_err(to_py)?;
    solve(inst.graph(), max_iters, "trws")
}

/// Binary deconvolution of a 3×3 mean-blurred image.
#[pyfunction]
#[pyo3(signature = (observed, width, height, max_iters = 10_000))]
fn deconvolve(observed: Vec<f64>, width: usize, height: usize, max_iters: usize) -> PyResult<PySolveResult> {
    let p = DeconvProblem::new(width, height, observed).map_err(to_py)?;
    solve(&p.super_graph().map_err(to_py)?, max_iters, "trws")
}

/// Centred disc as row-major samples.
#[pyfunction]
fn circle(size: usize, radius: f64) -> PyResult<Vec<f64>> {
    penum::synth::circle(size, radius).map(|i| i.samples).map_err(to_py)
}

/// Two noisy elliptic blobs as row-major samples.
#[pyfunction]
#[pyo3(signature = (size, seed = 0, noise = 0.0))]
fn two_blob(size: usize, seed: u64, noise: f64) -> PyResult<Vec<f64>> {
    penum::synth::two_blob(size, seed, noise).map(|i| i.samples).map_err(to_py)
}

#[pymodule]
fn penum_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyFactorGraph>()?;
    m.add_class::<PySuperGraph>()?;
    m.add_class::<PySolveResult>()?;
    m.add_function(wrap_pyfunction!(patch_costs, m)?)?;
    m.add_function(wrap_pyfunction!(segment, m)?)?;
    m.add_function(wrap_pyfunction!(deconvolve, m)?)?;
    m.add_function(wrap_pyfunction!(circle, m)?)?;
    m.add_function(wrap_pyfunction!(two_blob, m)?)?;
    m.add("INF", f64::INFINITY)?;
    Ok(())
}
