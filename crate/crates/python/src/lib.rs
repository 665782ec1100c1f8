use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyFloat, PyInt, PyList, PyTuple};

use monofdr::cli_io::{analyze_values, AnalysisConfig, ConfigError, SimulateConfig};
use monofdr::decision::{self, DecisionReport};
use monofdr::isotonic::{self, Direction};
use monofdr::simulation::{self, ScenarioSpec};
use monofdr::{stats_numerics, Dof, FdrError, TailSide};

fn matrix_from_rows(rows: &[Vec<f64>]) -> Option<DMatrix<f64>> {
    let n = rows.len();
    if rows.iter().any(|r| r.len() != n) {
        return None;
    }
    Some(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
}

fn value_err(e: FdrError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn config_err(e: ConfigError) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn run_err(e: anyhow::Error) -> PyErr {
    match e.downcast::<ConfigError>() {
        Ok(c) => config_err(c),
        Err(e) => match e.downcast::<FdrError>() {
            Ok(f) => value_err(f),
            Err(e) => PyRuntimeError::new_err(format!("{e:#}")),
        },
    }
}

fn direction(s: &str) -> PyResult<Direction> {
    match s {
        "increasing" | "nondecreasing" => Ok(Direction::NonDecreasing),
        "decreasing" | "nonincreasing" => Ok(Direction::NonIncreasing),
        other => Err(PyValueError::new_err(format!(
            "direction must be 'increasing' or 'decreasing', got '{other}'"
        ))),
    }
}

fn side(s: &str) -> PyResult<TailSide> {
    match s {
        "right" => Ok(TailSide::Right),
        "left" => Ok(TailSide::Left),
        other => Err(PyValueError::new_err(format!("side must be 'right' or 'left', got '{other}'"))),
    }
}

/// Python values to the `key = value` text syntax: sequences become `a,b`.
fn setting_text(v: &Bound<'_, PyAny>) -> PyResult<String> {
    if v.is_none() {
        return Ok("none".into());
    }
    if v.is_instance_of::<PyList>() || v.is_instance_of::<PyTuple>() {
        let parts: Vec<String> = v
            .try_iter()?
            .map(|x| x.and_then(|x| setting_text(&x)))
            .collect::<PyResult<_>>()?;
        return Ok(parts.join(","));
    }
    if let Ok(b) = v.extract::<bool>() {
        return Ok(b.to_string());
    }
    if v.is_instance_of::<PyInt>() {
        return Ok(v.str()?.to_string());
    }
    if v.is_instance_of::<PyFloat>() {
        return Ok(format!("{:?}", v.extract::<f64>()?));
    }
    Ok(v.str()?.to_string())
}

#[pyclass(name = "Histogram", module = "monofdr", frozen)]
struct PyHistogram {
    inner: monofdr::Histogram,
}

#[pymethods]
impl PyHistogram {
    #[new]
    fn new(stats: Vec<f64>, width: f64, range: (f64, f64)) -> PyResult<Self> {
        let inner = monofdr::Histogram::build(&stats, width, range).map_err(value_err)?;
        Ok(Self { inner })
    }

    #[getter]
    fn centers(&self) -> Vec<f64> {
        self.inner.centers().to_vec()
    }

    #[getter]
    fn counts(&self) -> Vec<u64> {
        self.inner.counts().to_vec()
    }

    #[getter]
    fn width(&self) -> f64 {
        self.inner.width()
    }

    #[getter]
    fn total(&self) -> u64 {
        self.inner.total()
    }

    #[getter]
    fn range(&self) -> (f64, f64) {
        self.inner.range()
    }

    fn bin_of(&self, t: f64) -> Option<usize> {
        self.inner.bin_of(t)
    }

    fn assign_bins(&self, stats: Vec<f64>) -> PyResult<Vec<Option<usize>>> {
        self.inner.assign_bins(&stats).map_err(value_err)
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let (lo, hi) = self.inner.range();
        format!("Histogram(bins={}, range=({lo}, {hi}), total={})", self.inner.len(), self.inner.total())
    }
}

#[pyclass(name = "DecisionReport", module = "monofdr", frozen, get_all)]
struct PyDecisionReport {
    rejected: Vec<bool>,
    u: usize,
    rule: String,
    alpha: f64,
    values: Vec<f64>,
}

impl From<DecisionReport> for PyDecisionReport {
    fn from(r: DecisionReport) -> Self {
        Self {
            rejected: r.rejected,
            u: r.u,
            rule: r.rule.to_string(),
            alpha: r.alpha,
            values: r.per_hypothesis_stat,
        }
    }
}

#[pymethods]
impl PyDecisionReport {
    fn __repr__(&self) -> String {
        format!("DecisionReport(rule='{}', alpha={}, u={})", self.rule, self.alpha, self.u)
    }
}

/// Binned estimates plus per-hypothesis decisions.
#[pyclass(name = "Analysis", module = "monofdr", frozen, get_all)]
struct PyAnalysis {
    centers: Vec<f64>,
    counts: Vec<u64>,
    fitted_null: Vec<f64>,
    fdr_raw: Vec<f64>,
    fdr_iso: Vec<f64>,
    tail_fdr_raw: Vec<f64>,
    tail_fdr_iso: Vec<f64>,
    se_log_fdr: Vec<f64>,
    p0_hat: f64,
    eta: Vec<f64>,
    warnings: Vec<String>,
    statistics: Vec<f64>,
    hypothesis_fdr_iso: Vec<f64>,
    hypothesis_tail_fdr_iso: Vec<f64>,
    alphas: Vec<f64>,
    rejected_local: Vec<Vec<bool>>,
    rejected_tail: Vec<Vec<bool>>,
}

#[pymethods]
impl PyAnalysis {
    /// `{alpha: (local, tail)}` rejection counts from the monotone estimates.
    fn rejection_counts<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        let d = PyDict::new(py);
        for (i, a) in self.alphas.iter().enumerate() {
            let local = self.rejected_local[i].iter().filter(|b| **b).count();
            let tail = self.rejected_tail[i].iter().filter(|b| **b).count();
            d.set_item(a, (local, tail))?;
        }
        Ok(d)
    }

    fn __repr__(&self) -> String {
        format!("Analysis(bins={}, p0_hat={:.4})", self.centers.len(), self.p0_hat)
    }
}

#[pyclass(name = "StudySummary", module = "monofdr", frozen, get_all)]
struct PyStudySummary {
    scenario: String,
    grid: Vec<f64>,
    mean_fdr_raw: Vec<f64>,
    mean_fdr_iso: Vec<f64>,
    band_lo_raw: Vec<f64>,
    band_hi_raw: Vec<f64>,
    band_lo_iso: Vec<f64>,
    band_hi_iso: Vec<f64>,
    mean_tail_fdr_raw: Vec<f64>,
    mean_tail_fdr_iso: Vec<f64>,
    oracle_fdr: Vec<f64>,
    oracle_tail_fdr: Vec<f64>,
    succeeded: usize,
    nonmonotone_raw_tail: usize,
    nonmonotone_raw_tail_supported: usize,
    mean_p0_hat: f64,
    alphas: Vec<f64>,
    mean_fdp: Vec<f64>,
    mean_fnp: Vec<f64>,
}

#[pymethods]
impl PyStudySummary {
    fn __repr__(&self) -> String {
        format!("StudySummary(scenario='{}', succeeded={})", self.scenario, self.succeeded)
    }
}

#[pyfunction]
#[pyo3(signature = (t, df))]
fn z_transform(t: f64, df: f64) -> PyResult<f64> {
    Ok(stats_numerics::z_transform(t, Dof::new(df).map_err(value_err)?))
}

/// Returns `(z_values, clamped_count)`.
#[pyfunction]
#[pyo3(signature = (ts, df, clamp_z = stats_numerics::DEFAULT_CLAMP_Z))]
fn z_transform_all(ts: Vec<f64>, df: f64, clamp_z: f64) -> PyResult<(Vec<f64>, usize)> {
    let b = stats_numerics::z_transform_all(&ts, Dof::new(df).map_err(value_err)?, clamp_z).map_err(value_err)?;
    Ok((b.values, b.clamped))
}

#[pyfunction]
fn normal_quantile(p: f64) -> PyResult<f64> {
    stats_numerics::normal_quantile(p).map_err(value_err)
}

#[pyfunction]
fn student_t_cdf(t: f64, df: f64) -> PyResult<f64> {
    Ok(stats_numerics::student_t_cdf(t, Dof::new(df).map_err(value_err)?))
}

#[pyfunction]
#[pyo3(signature = (targets, weights, direction = "increasing"))]
fn pava(targets: Vec<f64>, weights: Vec<f64>, direction: &str) -> PyResult<Vec<f64>> {
    isotonic::pava(&targets, &weights, self::direction(direction)?).map_err(value_err)
}

/// `matrix` is a square list of rows.
#[pyfunction]
#[pyo3(signature = (targets, matrix, direction = "increasing"))]
fn qp_isotonic(targets: Vec<f64>, matrix: Vec<Vec<f64>>, direction: &str) -> PyResult<Vec<f64>> {
    let m = matrix_from_rows(&matrix).ok_or_else(|| PyValueError::new_err("matrix must be square"))?;
    isotonic::qp_isotonic(&targets, &m, self::direction(direction)?).map_err(value_err)
}

#[pyfunction]
fn adaptive_reject_local(values: Vec<f64>, alpha: f64) -> PyResult<PyDecisionReport> {
    decision::adaptive_reject_local(&values, alpha).map(Into::into).map_err(value_err)
}

#[pyfunction]
fn adaptive_reject_tail(values: Vec<f64>, alpha: f64) -> PyResult<PyDecisionReport> {
    decision::adaptive_reject_tail(&values, alpha).map(Into::into).map_err(value_err)
}

fn scenario(name: &str, p0: f64) -> PyResult<ScenarioSpec> {
    let spec = ScenarioSpec::preset(name)
        .ok_or_else(|| PyValueError::new_err(format!("unknown scenario '{name}' (normal, chisq)")))?;
    Ok(ScenarioSpec { p0, ..spec })
}

#[pyfunction]
#[pyo3(signature = (scenario, t, p0 = 0.9))]
fn oracle_fdr(scenario: &str, t: f64, p0: f64) -> PyResult<f64> {
    simulation::oracle_fdr(&self::scenario(scenario, p0)?, t).map_err(value_err)
}

#[pyfunction]
#[pyo3(signature = (scenario, t, p0 = 0.9, side = "right"))]
fn oracle_tail_fdr(scenario: &str, t: f64, p0: f64, side: &str) -> PyResult<f64> {
    simulation::oracle_tail_fdr(&self::scenario(scenario, p0)?, t, self::side(side)?).map_err(value_err)
}

/// Draws one replication: `(statistics, non_null_flags)`.
#[pyfunction]
#[pyo3(signature = (scenario, n, seed, rep = 0, p0 = 0.9))]
fn sample_scenario(scenario: &str, n: usize, seed: u64, rep: u64, p0: f64) -> PyResult<(Vec<f64>, Vec<bool>)> {
    let spec = ScenarioSpec {
        n,
        base_seed: seed,
        ..self::scenario(scenario, p0)?
    };
    spec.validate().map_err(value_err)?;
    Ok(simulation::sample_scenario(&spec, rep))
}

/// Runs the full pipeline. Keyword settings use the config-file keys, e.g.
/// `range=(-6, 6)`, `null_region=(-1.2, 1.2)`, `alpha=[0.05, 0.1]`, `df=36`.
#[pyfunction]
#[pyo3(signature = (stats, **settings))]
fn analyze(py: Python<'_>, stats: Vec<f64>, settings: Option<&Bound<'_, PyDict>>) -> PyResult<PyAnalysis> {
    let mut cfg = AnalysisConfig::default();
    if let Some(s) = settings {
        for (k, v) in s.iter() {
            let key: String = k.extract()?;
            cfg.set(&key, &setting_text(&v)?).map_err(config_err)?;
        }
    }
    let a = py.detach(|| analyze_values(&stats, &cfg)).map_err(run_err)?;
    let out = &a.out;
    Ok(PyAnalysis {
        centers: out.hist.centers().to_vec(),
        counts: out.hist.counts().to_vec(),
        fitted_null: out.fit.fitted.clone(),
        fdr_raw: out.estimates.log_fdr.iter().map(|v| v.exp()).collect(),
        fdr_iso: out.mono.fdr_iso(),
        tail_fdr_raw: a.bin_tail_fdr_raw(),
        tail_fdr_iso: out.mono.tail_fdr_iso(),
        se_log_fdr: out.estimates.std_errors_fdr(),
        p0_hat: out.fit.p0_hat,
        eta: out.fit.eta().to_vec(),
        warnings: out.fit.warnings.iter().chain(&out.mono.warnings).cloned().collect(),
        statistics: a.stats.clone(),
        hypothesis_fdr_iso: a.fdr_iso.clone(),
        hypothesis_tail_fdr_iso: a.tail_fdr_iso.clone(),
        alphas: a.decisions.iter().map(|d| d.alpha).collect(),
        rejected_local: a.decisions.iter().map(|d| d.local_iso.rejected.clone()).collect(),
        rejected_tail: a.decisions.iter().map(|d| d.tail_iso.rejected.clone()).collect(),
    })
}

/// Runs the seeded study. Keyword settings use the scenario-file keys, e.g.
/// `reps=20`, `n=5000`, `seed=1`, `parallel=True`.
#[pyfunction]
#[pyo3(signature = (preset = "normal-sec4", **settings))]
fn run_study(py: Python<'_>, preset: &str, settings: Option<&Bound<'_, PyDict>>) -> PyResult<PyStudySummary> {
    let mut cfg = SimulateConfig::from_preset(preset).map_err(config_err)?;
    if let Some(s) = settings {
        for (k, v) in s.iter() {
            let key: String = k.extract()?;
            cfg.set(&key, &setting_text(&v)?).map_err(config_err)?;
        }
    }
    let s = py
        .detach(|| simulation::run_study(&cfg.spec, &cfg.study))
        .map_err(value_err)?;
    Ok(PyStudySummary {
        scenario: s.spec.kind.to_string(),
        grid: s.grid,
        mean_fdr_raw: s.mean_fdr_raw,
        mean_fdr_iso: s.mean_fdr_iso,
        band_lo_raw: s.band_lo_raw,
        band_hi_raw: s.band_hi_raw,
        band_lo_iso: s.band_lo_iso,
        band_hi_iso: s.band_hi_iso,
        mean_tail_fdr_raw: s.mean_tail_fdr_raw,
        mean_tail_fdr_iso: s.mean_tail_fdr_iso,
        oracle_fdr: s.oracle_fdr,
        oracle_tail_fdr: s.oracle_tail_fdr,
        succeeded: s.succeeded,
        nonmonotone_raw_tail: s.nonmonotone_raw_tail_count,
        nonmonotone_raw_tail_supported: s.nonmonotone_raw_tail_supported_count,
        mean_p0_hat: s.mean_p0_hat,
        alphas: s.local_iso.iter().map(|e| e.alpha).collect(),
        mean_fdp: s.local_iso.iter().map(|e| e.mean_fdp).collect(),
        mean_fnp: s.local_iso.iter().map(|e| e.mean_fnp).collect(),
    })
}

#[pymodule(name = "monofdr")]
fn monofdr_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyHistogram>()?;
    m.add_class::<PyDecisionReport>()?;
    m.add_class::<PyAnalysis>()?;
    m.add_class::<PyStudySummary>()?;
    m.add_function(wrap_pyfunction!(z_transform, m)?)?;
    m.add_function(wrap_pyfunction!(z_transform_all, m)?)?;
    m.add_function(wrap_pyfunction!(normal_quantile, m)?)?;
    m.add_function(wrap_pyfunction!(student_t_cdf, m)?)?;
    m.add_function(wrap_pyfunction!(pava, m)?)?;
    m.add_function(wrap_pyfunction!(qp_isotonic, m)?)?;
    m.add_function(wrap_pyfunction!(adaptive_reject_local, m)?)?;
    m.add_function(wrap_pyfunction!(adaptive_reject_tail, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_fdr, m)?)?;
    m.add_function(wrap_pyfunction!(oracle_tail_fdr, m)?)?;
    m.add_function(wrap_pyfunction!(sample_scenario, m)?)?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(run_study, m)?)?;
    Ok(())
}
