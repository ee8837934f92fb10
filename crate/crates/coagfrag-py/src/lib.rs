//! Python bindings for the coagfrag crate.

use coagfrag::bernstein_evolution::{evolve, BernsteinField, ImexConfig};
use coagfrag::continuum_profile::{self, ContinuumProfile};
use coagfrag::disc2cont;
use coagfrag::dynamics_d::{run_to_equilibrium, DtControl, SimulationConfigD};
use coagfrag::equilibrium_d::{self, EquilibriumD};
use coagfrag::measures::SizeDistribution;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: coagfrag::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Unique solution U ∈ [−1/2, 1) of U/(1−U)³ = s.
#[pyfunction]
fn u_star(s: f64) -> PyResult<f64> {
    continuum_profile::u_star(s).map_err(err)
}

/// Fuss–Catalan generating function B₃ (real branch, z ≤ 4/27).
#[pyfunction]
fn b3(z: f64) -> PyResult<f64> {
    continuum_profile::b3(z).map_err(err)
}

#[pyfunction]
fn mu_from_nu(nu0: f64) -> PyResult<f64> {
    equilibrium_d::mu_from_nu(nu0).map_err(err)
}

#[pyfunction]
fn nu_from_mu(mu: f64) -> PyResult<f64> {
    equilibrium_d::nu_from_mu(mu).map_err(err)
}

/// h = μ_h(1−ν_h)³/ν_h.
#[pyfunction]
fn h_from(nu_h: f64, mu_h: f64) -> PyResult<f64> {
    disc2cont::h_from(nu_h, mu_h).map_err(err)
}

/// The universal continuum profile f★ and its rescaling γ★ = f★·e^{4x/27}.
#[pyclass(name = "ContinuumProfile")]
struct PyContinuumProfile(ContinuumProfile);

#[pymethods]
impl PyContinuumProfile {
    #[new]
    #[pyo3(signature = (series_terms=150, x_switch=30.0))]
    fn new(series_terms: usize, x_switch: f64) -> PyResult<Self> {
        ContinuumProfile::new(series_terms, x_switch).map(Self).map_err(err)
    }

    fn f_star(&self, x: f64) -> PyResult<f64> {
        self.0.f_star(x).map_err(err)
    }

    fn gamma_star(&self, x: f64) -> PyResult<f64> {
        self.0.gamma_star(x).map_err(err)
    }

    /// ∫ e^{−sx} f★ dx (= 1 − U★(s)).
    fn laplace(&self, s: f64) -> PyResult<f64> {
        self.0.laplace_of_fstar(s).map_err(err)
    }

    /// ∫ x^k f★ dx for k = 0, 1, 2.
    fn moment(&self, k: u32) -> PyResult<f64> {
        self.0.moment_of_fstar(k).map_err(err)
    }
}

/// Model D equilibrium from the ν₀ recursion.
#[pyclass(name = "Equilibrium")]
struct PyEquilibrium(EquilibriumD);

#[pymethods]
impl PyEquilibrium {
    #[new]
    fn new(nu0: f64, n: usize) -> PyResult<Self> {
        equilibrium_d::equilibrium_recursion(nu0, n).map(Self).map_err(err)
    }

    #[getter]
    fn nu0(&self) -> f64 {
        self.0.nu0
    }

    #[getter]
    fn mu(&self) -> f64 {
        self.0.mu
    }

    #[getter]
    fn lambda_cutoff(&self) -> f64 {
        self.0.lambda
    }

    #[getter]
    fn f(&self) -> Vec<f64> {
        self.0.f.clone()
    }

    #[getter]
    fn gamma(&self) -> Vec<f64> {
        self.0.gamma.clone()
    }

    fn tail_asymptotic_ratio(&self, i: usize) -> PyResult<f64> {
        self.0.tail_asymptotic_ratio(i).map_err(err)
    }
}

/// Discrete size distribution f_1..f_N.
#[pyclass(name = "SizeDistribution", from_py_object)]
#[derive(Clone)]
struct PySizeDistribution(SizeDistribution);

#[pymethods]
impl PySizeDistribution {
    #[new]
    fn new(entries: Vec<f64>) -> PyResult<Self> {
        SizeDistribution::new(entries).map(Self).map_err(err)
    }

    #[staticmethod]
    fn monodisperse(n: usize, f1: f64) -> PyResult<Self> {
        SizeDistribution::monodisperse(n, f1).map(Self).map_err(err)
    }

    #[staticmethod]
    fn power_law(n: usize, exponent: f64) -> PyResult<Self> {
        SizeDistribution::power_law(n, exponent).map(Self).map_err(err)
    }

    #[getter]
    fn entries(&self) -> Vec<f64> {
        self.0.entries().to_vec()
    }

    #[getter]
    fn lost_mass(&self) -> f64 {
        self.0.lost_mass()
    }

    fn moment(&self, k: u32) -> f64 {
        self.0.moment(k)
    }

    /// Bernstein transform Σ(1−e^{−s·i·h})f_i at each s.
    #[pyo3(signature = (s_values, bin_width=1.0))]
    fn bernstein(&self, s_values: Vec<f64>, bin_width: f64) -> Vec<f64> {
        self.0.bernstein_of(&s_values, bin_width)
    }
}

/// Integrate truncated Model D from `init` to t_end; returns a dict of traces.
#[pyfunction]
#[pyo3(signature = (init, t_end, dt=None, record_every=1.0))]
fn simulate(
    py: Python<'_>,
    init: PySizeDistribution,
    t_end: f64,
    dt: Option<f64>,
    record_every: f64,
) -> PyResult<Py<PyAny>> {
    let m0 = init.0.moment(0);
    let cfg = SimulationConfigD {
        truncation_n: init.0.truncation_n(),
        t_end,
        dt_init: dt.unwrap_or_else(|| SimulationConfigD::default_dt(m0)),
        dt_control: DtControl::Fixed,
        record_every,
        ghosts: false,
    };
    let (report, final_state) = run_to_equilibrium(&init.0, &cfg).map_err(err)?;
    let d = pyo3::types::PyDict::new(py);
    d.set_item("t", report.times)?;
    d.set_item("m0", report.moments.iter().map(|m| m.m0).collect::<Vec<_>>())?;
    d.set_item("m1", report.moments.iter().map(|m| m.m1).collect::<Vec<_>>())?;
    d.set_item("m2", report.moments.iter().map(|m| m.m2).collect::<Vec<_>>())?;
    d.set_item("dist", report.distance_to_equilibrium)?;
    d.set_item("f1", report.f1_trace)?;
    d.set_item("lost_mass", report.lost_mass_trace)?;
    d.set_item("final", PySizeDistribution(final_state).into_pyobject(py)?)?;
    Ok(d.into())
}

/// IMEX evolution of U on a log grid; returns (s_grid, final values, diagnostics).
#[pyfunction]
#[pyo3(signature = (s_grid, u0, t_end, dt=0.01, h=0.0, m0=1.0))]
fn evolve_transform(
    py: Python<'_>,
    s_grid: Vec<f64>,
    u0: Vec<f64>,
    t_end: f64,
    dt: f64,
    h: f64,
    m0: f64,
) -> PyResult<Py<PyAny>> {
    let field = BernsteinField::new(s_grid.clone(), u0, m0).map_err(err)?;
    let cfg = ImexConfig { dt, t_end, record_every: t_end.max(dt) };
    let snaps = evolve(&field, &cfg, h).map_err(err)?;
    let last = snaps.last().expect("at least the initial snapshot");
    let d = pyo3::types::PyDict::new(py);
    d.set_item("s", s_grid)?;
    d.set_item("U", last.field.values().to_vec())?;
    d.set_item("t", last.diagnostics.t)?;
    d.set_item("m0", last.diagnostics.m0)?;
    d.set_item("mu_est", last.diagnostics.mu_est)?;
    d.set_item("sup_dist_to_equilibrium", last.diagnostics.sup_dist_to_equilibrium)?;
    Ok(d.into())
}

#[pymodule]
fn coagfrag_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_function(wrap_pyfunction!(u_star, m)?)?;
    m.add_function(wrap_pyfunction!(b3, m)?)?;
    m.add_function(wrap_pyfunction!(mu_from_nu, m)?)?;
    m.add_function(wrap_pyfunction!(nu_from_mu, m)?)?;
    m.add_function(wrap_pyfunction!(h_from, m)?)?;
    m.add_function(wrap_pyfunction!(simulate, m)?)?;
    m.add_function(wrap_pyfunction!(evolve_transform, m)?)?;
    m.add_class::<PyContinuumProfile>()?;
    m.add_class::<PyEquilibrium>()?;
    m.add_class::<PySizeDistribution>()?;
    Ok(())
}
