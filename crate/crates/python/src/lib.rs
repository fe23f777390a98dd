//! Python bindings: scenario presets, channel drops, per-drop allocation,
//! sweeps and the building blocks (loading, assignment, partition, modulo).

use std::path::PathBuf;

use num_complex::Complex64;
use pyo3::exceptions::{PyOSError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use sdma_thp::assignment::{solve_assignment as solve, CostMatrix};
use sdma_thp::baselines::ArchitectureId;
use sdma_thp::channel::{self, Preset};
use sdma_thp::cli::{parse_architectures, render_csv};
use sdma_thp::sim::{self, SweepAxis, SweepOptions};
use sdma_thp::{loading, partition, precoding, Error};

fn to_py(e: Error) -> PyErr {
    match e {
        Error::ChannelFileIo { .. } | Error::Output { .. } => PyOSError::new_err(e.to_string()),
        Error::InvalidConfig(_)
        | Error::UnknownPreset(_)
        | Error::ConfigFile(_)
        | Error::IndivisibleGroups { .. }
        | Error::DimensionMismatch { .. }
        | Error::ChannelFileFormat { .. }
        | Error::NonFiniteEntry { .. } => PyValueError::new_err(e.to_string()),
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn parse_arch(name: &str) -> PyResult<ArchitectureId> {
    name.parse().map_err(to_py)
}

#[pyclass(name = "ScenarioConfig", module = "sdma_thp_py", from_py_object)]
#[derive(Clone)]
struct PyScenario {
    inner: channel::ScenarioConfig,
}

#[pymethods]
impl PyScenario {
    /// Built-in preset `S1`, `S2` or `S3`.
    #[staticmethod]
    fn preset(name: &str) -> PyResult<Self> {
        let p: Preset = name.parse().map_err(to_py)?;
        Ok(Self {
            inner: channel::scenario_preset(p),
        })
    }

    /// Scenario from TOML text.
    #[staticmethod]
    fn from_toml(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: sdma_thp::cli::parse_config_text(text).map_err(to_py)?,
        })
    }

    fn with_rho(&self, rho: f64) -> Self {
        Self {
            inner: self.inner.clone().with_rho(rho),
        }
    }

    #[pyo3(signature = (users, rho = channel::DEFAULT_RHO))]
    fn with_users(&self, users: usize, rho: f64) -> Self {
        Self {
            inner: self.inner.clone().with_users(users, rho),
        }
    }

    fn with_seed(&self, seed: u64) -> Self {
        let mut inner = self.inner.clone();
        inner.rng_seed = seed;
        Self { inner }
    }

    fn validate(&self) -> PyResult<()> {
        self.inner.validate().map_err(to_py)
    }

    #[getter]
    fn num_subcarriers(&self) -> usize {
        self.inner.num_subcarriers
    }
    #[getter]
    fn num_users(&self) -> usize {
        self.inner.num_users
    }
    #[getter]
    fn tx_antennas(&self) -> usize {
        self.inner.tx_antennas
    }
    #[getter]
    fn rx_antennas(&self) -> usize {
        self.inner.rx_antennas
    }
    #[getter]
    fn streams_per_user(&self) -> usize {
        self.inner.streams_per_user
    }
    #[getter]
    fn group_count(&self) -> usize {
        self.inner.group_count
    }
    #[getter]
    fn quotas(&self) -> Vec<usize> {
        self.inner.quotas.clone()
    }
    #[getter]
    fn mse_budgets(&self) -> Vec<f64> {
        self.inner.mse_budgets.clone()
    }
    #[getter]
    fn noise_variance(&self) -> f64 {
        self.inner.noise_variance
    }
    #[getter]
    fn constellation_size(&self) -> u32 {
        self.inner.constellation_size
    }
    #[getter]
    fn symbol_variance(&self) -> f64 {
        self.inner.symbol_variance()
    }
    #[getter]
    fn rng_seed(&self) -> u64 {
        self.inner.rng_seed
    }

    fn __repr__(&self) -> String {
        let c = &self.inner;
        format!(
            "ScenarioConfig(N={}, K={}, {}x{}, L={}, Q={}, seed={})",
            c.num_subcarriers, c.num_users, c.tx_antennas, c.rx_antennas, c.streams_per_user, c.group_count, c.rng_seed
        )
    }
}

#[pyclass(name = "ChannelSet", module = "sdma_thp_py", from_py_object)]
#[derive(Clone)]
struct PyChannels {
    inner: channel::ChannelSet,
}

#[pymethods]
impl PyChannels {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        Ok(Self {
            inner: channel::load_channels(&path).map_err(to_py)?,
        })
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        Ok(Self {
            inner: channel::parse_channels(text).map_err(to_py)?,
        })
    }

    fn write(&self, path: PathBuf) -> PyResult<()> {
        channel::write_channels(&self.inner, &path).map_err(to_py)
    }

    fn render(&self) -> String {
        channel::render_channels(&self.inner)
    }

    /// Channel of user `k` on subcarrier `n` as nested lists (rows).
    fn h(&self, n: usize, k: usize) -> PyResult<Vec<Vec<Complex64>>> {
        if n >= self.inner.num_subcarriers() || k >= self.inner.num_users() {
            return Err(PyValueError::new_err("subcarrier or user index out of range"));
        }
        let m = self.inner.h(n, k);
        Ok((0..m.nrows()).map(|r| m.row(r).iter().copied().collect()).collect())
    }

    fn qualities(&self) -> Vec<f64> {
        partition::all_qualities(&self.inner)
    }

    #[getter]
    fn num_subcarriers(&self) -> usize {
        self.inner.num_subcarriers()
    }
    #[getter]
    fn num_users(&self) -> usize {
        self.inner.num_users()
    }
    #[getter]
    fn drop_id(&self) -> u64 {
        self.inner.drop_id
    }
}

#[pyclass(name = "DropResult", module = "sdma_thp_py")]
struct PyDrop {
    inner: sim::DropResult,
}

#[pymethods]
impl PyDrop {
    #[getter]
    fn architecture(&self) -> String {
        self.inner.architecture.to_string()
    }
    #[getter]
    fn feasible(&self) -> bool {
        self.inner.feasible
    }
    #[getter]
    fn total_power(&self) -> f64 {
        self.inner.total_power
    }
    #[getter]
    fn power_db(&self) -> f64 {
        self.inner.power_db
    }
    #[getter]
    fn user_mse(&self) -> Vec<f64> {
        self.inner.user_mse.clone()
    }
    #[getter]
    fn user_subcarriers(&self) -> Vec<Vec<usize>> {
        self.inner.user_subcarriers.clone()
    }
    #[getter]
    fn groups(&self) -> Vec<Vec<usize>> {
        self.inner.partition.groups.clone()
    }

    fn __repr__(&self) -> String {
        format!(
            "DropResult({}, feasible={}, power_db={:.4})",
            self.inner.architecture, self.inner.feasible, self.inner.power_db
        )
    }
}

#[pyfunction]
fn generate_drop(config: &PyScenario, drop_index: u64) -> PyResult<PyChannels> {
    config.inner.validate().map_err(to_py)?;
    Ok(PyChannels {
        inner: channel::generate_drop(&config.inner, drop_index),
    })
}

#[pyfunction]
#[pyo3(signature = (config, channels, architecture = "ThpTxLinRx"))]
fn run_drop(py: Python<'_>, config: &PyScenario, channels: &PyChannels, architecture: &str) -> PyResult<PyDrop> {
    let arch = parse_arch(architecture)?;
    let (c, ch) = (config.inner.clone(), channels.inner.clone());
    let inner = py.detach(move || sim::run_drop(&c, &ch, arch)).map_err(to_py)?;
    Ok(PyDrop { inner })
}

/// Empirical and analytic per-user sum-MSE of the proposed chain.
#[pyfunction]
fn link_level_verify(
    config: &PyScenario,
    channels: &PyChannels,
    drop: &PyDrop,
    num_symbols: usize,
    seed: u64,
) -> PyResult<(Vec<f64>, Vec<f64>)> {
    let rep = sim::link_level_verify(&config.inner, &channels.inner, &drop.inner, num_symbols, seed).map_err(to_py)?;
    Ok((rep.empirical, rep.analytic))
}

type SweepRow = (f64, String, f64, f64, usize, f64);

/// Sweep over `rho` (list) or `users` (list). Returns `(rows, csv_text)`
/// with rows `(axis, architecture, mean_power_db, stderr_db, drops, infeasible_rate)`.
#[pyfunction]
#[pyo3(signature = (config, rho = None, users = None, drops = 10, seed = 1, workers = 1, architectures = "all"))]
#[allow(clippy::too_many_arguments)]
fn run_sweep(
    py: Python<'_>,
    config: &PyScenario,
    rho: Option<Vec<f64>>,
    users: Option<Vec<usize>>,
    drops: usize,
    seed: u64,
    workers: usize,
    architectures: &str,
) -> PyResult<(Vec<SweepRow>, String)> {
    let archs = parse_architectures(architectures).map_err(to_py)?;
    let (axis, rho_k) = match (rho, users) {
        (r, Some(u)) => {
            let r = r.unwrap_or_default();
            if r.len() > 1 {
                return Err(PyValueError::new_err("a users sweep takes a single rho"));
            }
            (SweepAxis::Users(u), r.first().copied().unwrap_or(channel::DEFAULT_RHO))
        }
        (Some(r), None) => (SweepAxis::Rho(r), channel::DEFAULT_RHO),
        (None, None) => (SweepAxis::Rho(vec![channel::DEFAULT_RHO]), channel::DEFAULT_RHO),
    };
    let options = SweepOptions {
        drops,
        seed,
        workers,
        architectures: archs,
        rho: rho_k,
    };
    let base = config.inner.clone();
    let result = py
        .detach(move || sim::run_sweep(&base, &axis, &options))
        .map_err(to_py)?;
    let rows = result
        .points
        .iter()
        .flat_map(|p| {
            p.stats.iter().map(|s| {
                (
                    p.axis_value,
                    s.architecture.to_string(),
                    s.mean_power_db,
                    s.stderr_db,
                    s.drops,
                    s.infeasible_rate,
                )
            })
        })
        .collect();
    Ok((rows, render_csv(&result)))
}

/// Minimum-power loading: returns `(lambda_u, nu, cost)`.
#[pyfunction]
fn power_loading(gains: Vec<f64>, budget: f64, quota: usize, noise_variance: f64) -> PyResult<(Vec<f64>, f64, f64)> {
    let p = loading::power_loading(&gains, budget, quota, noise_variance)
        .ok_or_else(|| PyValueError::new_err("gains must be positive and finite"))?;
    Ok((p.lambda_u, p.nu, p.cost))
}

/// Min-cost assignment. `costs[n][j]` is `None` for unusable pairs.
/// Returns `(owner per subcarrier, total cost)`.
#[pyfunction]
fn solve_assignment(costs: Vec<Vec<Option<f64>>>, quotas: Vec<usize>) -> PyResult<(Vec<Option<usize>>, f64)> {
    let cm = CostMatrix::new(costs, quotas).map_err(to_py)?;
    let a = solve(&cm).map_err(to_py)?;
    let owners = (0..cm.subcarriers()).map(|n| a.owner(n)).collect();
    Ok((owners, a.total_cost))
}

#[pyfunction]
fn partition_worst_first(quality: Vec<f64>, groups: usize) -> PyResult<Vec<Vec<usize>>> {
    Ok(partition::partition_worst_first(&quality, groups)
        .map_err(to_py)?
        .groups)
}

#[pyfunction]
fn modulo(x: Complex64, order: u32) -> Complex64 {
    precoding::modulo(x, order).0
}

#[pymodule]
fn sdma_thp_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyScenario>()?;
    m.add_class::<PyChannels>()?;
    m.add_class::<PyDrop>()?;
    m.add_function(wrap_pyfunction!(generate_drop, m)?)?;
    m.add_function(wrap_pyfunction!(run_drop, m)?)?;
    m.add_function(wrap_pyfunction!(link_level_verify, m)?)?;
    m.add_function(wrap_pyfunction!(run_sweep, m)?)?;
    m.add_function(wrap_pyfunction!(power_loading, m)?)?;
    m.add_function(wrap_pyfunction!(solve_assignment, m)?)?;
    m.add_function(wrap_pyfunction!(partition_worst_first, m)?)?;
    m.add_function(wrap_pyfunction!(modulo, m)?)?;
    m.add(
        "ARCHITECTURES",
        ArchitectureId::ALL.iter().map(|a| a.name()).collect::<Vec<_>>(),
    )?;
    Ok(())
}
