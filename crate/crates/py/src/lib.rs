//! Python bindings: models, biased Gibbs states, the sum rule and the
//! spectral checks. Reports come back as plain dicts.

use nesslab_core::dynamics::{lr_scan as core_lr_scan, EvolutionContext};
use nesslab_core::linalg::C64;
use nesslab_core::models::{
    build_fermion_model, build_xx_model, build_xxz_model, canonical_current, check_conservation, energy_density,
    lr_velocity, ChargeSpec, CurrentGeometry, Interaction,
};
use nesslab_core::operator::{ChainConfig, LocalOperator};
use nesslab_core::spectral::{
    momentum_derivative_check, singularity_diagnostic, sum_rule_check, Correlation,
    SpectralFunction as CoreSpectral, WindowFunction, WindowKind,
};
use nesslab_core::steady_state::{build_biased_gibbs, verify_ness, BiasOperator, BiasSpec, StationaryState};
use nesslab_core::ErrorKind;
use pyo3::create_exception;
use pyo3::exceptions::{PyException, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

create_exception!(nesslab, NesslabError, PyException);

fn err(e: nesslab_core::Error) -> PyErr {
    match e.kind() {
        ErrorKind::Config => PyValueError::new_err(e.to_string()),
        _ => NesslabError::new_err(e.to_string()),
    }
}

fn to_py<'py, T: serde::Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| NesslabError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

fn operator_dict<'py>(py: Python<'py>, op: &LocalOperator) -> PyResult<Bound<'py, PyDict>> {
    let c = op.coeffs();
    let rows: Vec<Vec<C64>> = (0..c.nrows()).map(|i| (0..c.ncols()).map(|j| c[(i, j)]).collect()).collect();
    let d = PyDict::new(py);
    d.set_item("support", op.support().to_vec())?;
    d.set_item("site_dim", op.site_dim())?;
    d.set_item("matrix", rows)?;
    Ok(d)
}

fn window(kind: &str, half_width: f64) -> PyResult<WindowFunction> {
    let kind = match kind {
        "hann" => WindowKind::Hann,
        "truncated_gaussian" => WindowKind::TruncatedGaussian,
        other => return Err(PyValueError::new_err(format!("unknown window kind {other:?}"))),
    };
    WindowFunction::new(kind, half_width).map_err(err)
}

/// Translation-invariant interaction with its local charge.
#[pyclass(name = "Model", frozen)]
struct Model {
    phi: Interaction,
    spec: ChargeSpec,
    label: String,
}

#[pymethods]
impl Model {
    #[staticmethod]
    fn xx() -> PyResult<Self> {
        let (phi, spec) = build_xx_model().map_err(err)?;
        Ok(Self { phi, spec, label: "xx".into() })
    }

    #[staticmethod]
    fn xxz(lambda_aniso: f64) -> PyResult<Self> {
        let (phi, spec) = build_xxz_model(lambda_aniso).map_err(err)?;
        Ok(Self { phi, spec, label: format!("xxz(lambda_aniso={lambda_aniso})") })
    }

    #[staticmethod]
    fn fermion(t_hop: f64, v: Vec<f64>) -> PyResult<Self> {
        let (phi, spec) = build_fermion_model(t_hop, &v).map_err(err)?;
        Ok(Self { phi, spec, label: format!("fermion(t_hop={t_hop}, v={v:?})") })
    }

    #[getter]
    fn range(&self) -> usize {
        self.phi.range()
    }

    #[getter]
    fn site_dim(&self) -> usize {
        self.phi.site_dim()
    }

    #[getter]
    fn lr_velocity(&self) -> PyResult<f64> {
        lr_velocity(&self.phi).map_err(err)
    }

    #[getter]
    fn empirical_velocity(&self) -> PyResult<f64> {
        nesslab_core::dynamics::empirical_velocity(&self.phi).map_err(err)
    }

    /// Largest `||[N_W, H_W]||` over windows on a periodic chain.
    fn conservation_residual(&self, n_sites: usize) -> PyResult<f64> {
        let chain = ChainConfig::periodic(n_sites, self.phi.site_dim()).map_err(err)?;
        check_conservation(&self.phi, &self.spec, &chain).map_err(err)
    }

    /// The canonical current `j_0` as `{support, site_dim, matrix}`.
    fn current<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        operator_dict(py, &canonical_current(&self.phi, &self.spec).map_err(err)?)
    }

    fn energy_density<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
        operator_dict(py, &energy_density(&self.phi).map_err(err)?)
    }

    fn __repr__(&self) -> String {
        format!("Model.{}", self.label)
    }
}

/// Spectral atoms of the charge-energy correlation.
#[pyclass(name = "SpectralFunction", frozen)]
struct SpectralFunction {
    inner: CoreSpectral,
}

#[pymethods]
impl SpectralFunction {
    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.n_sites
    }

    #[getter]
    fn completeness_residual(&self) -> f64 {
        self.inner.completeness_residual
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// `(dk_index, dk_value, de, weight)` for every atom.
    fn entries(&self) -> Vec<(usize, f64, f64, C64)> {
        self.inner.entries.iter().map(|e| (e.dk_index, e.dk_value, e.de, e.weight)).collect()
    }

    fn correlation(&self, z: i64, t: f64) -> C64 {
        self.inner.correlation(z, t)
    }

    fn rho(&self, z: i64, t: f64) -> C64 {
        self.inner.rho(z, t)
    }

    fn singularity<'py>(&self, py: Python<'py>, eps: Vec<f64>) -> PyResult<Bound<'py, PyAny>> {
        to_py(py, &singularity_diagnostic(&self.inner, &eps))
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(|e| NesslabError::new_err(e.to_string()))?;
        String::from_utf8(buf).map_err(|e| NesslabError::new_err(e.to_string()))
    }
}

/// Biased Gibbs state `exp(-beta (H - lambda B))` on a periodic chain.
#[pyclass(name = "State", frozen)]
struct State {
    inner: StationaryState,
    phi: Interaction,
    spec: ChargeSpec,
}

impl State {
    fn geometry(&self, l: usize, m: usize) -> PyResult<CurrentGeometry> {
        let g = CurrentGeometry::new(l, m, self.phi.range()).map_err(err)?;
        g.check_chain(self.inner.chain()).map_err(err)?;
        Ok(g)
    }
}

#[pymethods]
impl State {
    #[new]
    #[pyo3(signature = (model, n_sites, beta, lam, conserved_op = "total_current"))]
    fn new(model: &Model, n_sites: usize, beta: f64, lam: f64, conserved_op: &str) -> PyResult<Self> {
        let op = match conserved_op {
            "total_current" => BiasOperator::TotalCurrent,
            "total_charge" => BiasOperator::TotalCharge,
            other => return Err(PyValueError::new_err(format!("unknown conserved_op {other:?}"))),
        };
        let bias = BiasSpec::new(beta, lam, op).map_err(err)?;
        let chain = ChainConfig::periodic(n_sites, model.phi.site_dim()).map_err(err)?;
        let inner = build_biased_gibbs(&model.phi, &model.spec, &bias, &chain).map_err(err)?;
        Ok(Self { inner, phi: model.phi.clone(), spec: model.spec.clone() })
    }

    #[getter]
    fn n_sites(&self) -> usize {
        self.inner.chain().n_sites()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.basis().dim()
    }

    /// Stationarity, translation, current and symmetry report.
    fn verify<'py>(&self, py: Python<'py>, l: usize, m: usize) -> PyResult<Bound<'py, PyAny>> {
        let g = self.geometry(l, m)?;
        to_py(py, &verify_ness(&self.inner, &self.phi, &self.spec, &g, None).map_err(err)?)
    }

    /// `C_{M,L}(t)`.
    fn correlation(&self, l: usize, m: usize, t: f64) -> PyResult<f64> {
        let g = self.geometry(l, m)?;
        Correlation::new(&self.inner, &self.phi, &self.spec, &g).map_err(err)?.eval(t).map_err(err)
    }

    #[pyo3(signature = (l, m, t_half, window_kind = "hann"))]
    fn sum_rule<'py>(&self, py: Python<'py>, l: usize, m: usize, t_half: f64, window_kind: &str) -> PyResult<Bound<'py, PyAny>> {
        let g = self.geometry(l, m)?;
        let w = window(window_kind, t_half)?;
        to_py(py, &sum_rule_check(&self.inner, &self.phi, &self.spec, &g, &w).map_err(err)?)
    }

    /// Spectral atoms of `<i n^_0 tau_z alpha_t(h^_0)>`.
    fn spectral_function(&self) -> PyResult<SpectralFunction> {
        let h = energy_density(&self.phi).map_err(err)?;
        let inner = CoreSpectral::build(&self.inner, &self.spec.at(0), &h).map_err(err)?;
        Ok(SpectralFunction { inner })
    }

    #[pyo3(signature = (sf, l, m, t_half, window_kind = "hann"))]
    fn momentum_derivative_check<'py>(
        &self,
        py: Python<'py>,
        sf: &SpectralFunction,
        l: usize,
        m: usize,
        t_half: f64,
        window_kind: &str,
    ) -> PyResult<Bound<'py, PyAny>> {
        let g = self.geometry(l, m)?;
        let w = window(window_kind, t_half)?;
        let rep = momentum_derivative_check(&self.inner, &sf.inner, &w, &self.phi, &self.spec, &g).map_err(err)?;
        to_py(py, &rep)
    }
}

/// Lieb-Robinson scan of the local charge density against itself.
#[pyfunction]
fn lr_scan<'py>(py: Python<'py>, model: &Model, n_sites: usize, x_values: Vec<i64>, t_values: Vec<f64>) -> PyResult<Bound<'py, PyDict>> {
    let chain = ChainConfig::periodic(n_sites, model.phi.site_dim()).map_err(err)?;
    let ctx = EvolutionContext::from_interaction(&model.phi, &chain).map_err(err)?;
    let a = model.spec.at(0);
    let scan = core_lr_scan(&ctx, &model.phi, &a, &a, &x_values, &t_values, None).map_err(err)?;
    let rows: Vec<(i64, f64, f64, f64, bool)> =
        scan.rows.iter().map(|r| (r.x, r.t, r.empirical, r.bound, r.excluded)).collect();
    let d = PyDict::new(py);
    d.set_item("velocity", scan.velocity)?;
    d.set_item("empirical_velocity", scan.empirical_velocity)?;
    d.set_item("violations", scan.violations())?;
    d.set_item("rows", rows)?;
    Ok(d)
}

#[pymodule]
fn nesslab(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("NesslabError", m.py().get_type::<NesslabError>())?;
    m.add_class::<Model>()?;
    m.add_class::<State>()?;
    m.add_class::<SpectralFunction>()?;
    m.add_function(wrap_pyfunction!(lr_scan, m)?)?;
    Ok(())
}
