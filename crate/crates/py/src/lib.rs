//! Python bindings for `toral_nodal`.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use toral_nodal::derandom::{self, MomentSpec};
use toral_nodal::eigen::{build_coefficients, CoefficientSpec};
use toral_nodal::experiment::{self, ExperimentConfig};
use toral_nodal::gaussian::{self, Convention};
use toral_nodal::lattice::{self, SearchBudget};
use toral_nodal::measure::{self, ProkhorovOptions};
use toral_nodal::nodal::{self, CensusOptions, Domain};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

#[pyfunction]
fn is_sum_of_two_squares(energy: u64) -> bool {
    lattice::is_sum_of_two_squares(energy)
}

/// Lattice points `(x, y)` with `x² + y² = E`, lexicographically sorted.
#[pyfunction]
fn lattice_points(energy: u64) -> Vec<(i64, i64)> {
    lattice::lattice_points(energy).points().to_vec()
}

#[pyfunction]
fn minimally_vanishing_count(energy: u64, length: usize) -> PyResult<u64> {
    lattice::minimally_vanishing_count(energy, length, SearchBudget::default()).map_err(runtime_err)
}

#[pyclass(name = "SpectralMeasure", frozen, from_py_object)]
#[derive(Clone)]
struct PySpectralMeasure(measure::SpectralMeasure);

#[pymethods]
impl PySpectralMeasure {
    /// `cilleruelo`, `tilted`, `uniform`, `pair:<angle>` or `atomized:<pairs>`.
    #[staticmethod]
    fn named(name: &str) -> PyResult<Self> {
        measure::SpectralMeasure::named(name).map(Self).map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        measure::SpectralMeasure::from_json(text).map(Self).map_err(value_err)
    }

    /// `(angle, mass)` pairs with angles in (−1/2, 1/2].
    #[staticmethod]
    #[pyo3(signature = (atoms, uniform_mass = 0.0))]
    fn from_atoms(atoms: Vec<(f64, f64)>, uniform_mass: f64) -> PyResult<Self> {
        let atoms = atoms.into_iter().map(|(angle, mass)| measure::Atom { angle, mass }).collect();
        measure::SpectralMeasure::new(atoms, uniform_mass).map(Self).map_err(value_err)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn atoms(&self) -> Vec<(f64, f64)> {
        self.0.atoms().iter().map(|a| (a.angle, a.mass)).collect()
    }

    #[getter]
    fn uniform_mass(&self) -> f64 {
        self.0.uniform_mass()
    }

    /// `(re, im)` of `μ̂(n)`.
    fn fourier_coefficient(&self, n: i64) -> (f64, f64) {
        let c = self.0.fourier_coefficient(n);
        (c.re, c.im)
    }

    #[pyo3(signature = (other, atomization = 4096))]
    fn prokhorov_distance(&self, other: &Self, atomization: usize) -> PyResult<f64> {
        let opts = ProkhorovOptions { atomization: Some(atomization) };
        measure::prokhorov_distance(&self.0, &other.0, opts).map_err(value_err)
    }

    /// Kept arcs `(k, mass, midpoint)` after binning into `2K` arcs.
    fn bin(&self, arcs: usize, delta: f64) -> PyResult<Vec<(i64, f64, f64)>> {
        let b = measure::bin_measure(&self.0, arcs, delta).map_err(value_err)?;
        Ok(b.kept().iter().map(|k| (k.index, k.mass, k.midpoint)).collect())
    }

    /// Monte Carlo `c_NS` over the square `(−R, R)²`: `(estimate, stderr)`.
    fn estimate_cns(&self, radius: f64, trials: usize, seed: u64) -> PyResult<(f64, f64)> {
        let est = gaussian::estimate_cns(&self.0, "py", radius, trials, seed, Convention::Square).map_err(runtime_err)?;
        Ok((est.estimate, est.stderr))
    }

    /// Expected zeros per unit length along a line in direction `v`.
    #[pyo3(signature = (v, wavenumber = 1.0))]
    fn kac_rice_intensity(&self, v: (f64, f64), wavenumber: f64) -> f64 {
        gaussian::kac_rice_line_intensity(&self.0, [v.0, v.1], wavenumber)
    }

    fn __repr__(&self) -> String {
        format!("SpectralMeasure({} atoms, uniform_mass={})", self.0.atoms().len(), self.0.uniform_mass())
    }
}

/// Toral eigenfunction `f(x) = Σ a_ξ e(⟨ξ,x⟩)` on the circle `|ξ|² = E`.
#[pyclass(name = "Eigenfunction", frozen)]
struct PyEigenfunction(toral_nodal::eigen::CoefficientVector);

#[pymethods]
impl PyEigenfunction {
    /// `coeffs` is `equal` or `random:<seed>`.
    #[new]
    #[pyo3(signature = (energy, coeffs = "equal"))]
    fn new(energy: u64, coeffs: &str) -> PyResult<Self> {
        let spec = CoefficientSpec::parse(coeffs).ok_or_else(|| value_err(format!("bad coefficient spec '{coeffs}'")))?;
        if matches!(spec, CoefficientSpec::Explicit(_)) {
            return Err(value_err("use from_coefficients for explicit coefficients"));
        }
        build_coefficients(&lattice::lattice_points(energy), &spec).map(Self).map_err(value_err)
    }

    /// Explicit `((x, y), (re, im))` entries; must be Hermitian and normalized.
    #[staticmethod]
    fn from_coefficients(energy: u64, entries: Vec<((i64, i64), (f64, f64))>) -> PyResult<Self> {
        let entries = entries
            .into_iter()
            .map(|(p, (re, im))| (p, toral_nodal::Complex64::new(re, im)))
            .collect();
        build_coefficients(&lattice::lattice_points(energy), &CoefficientSpec::Explicit(entries))
            .map(Self)
            .map_err(value_err)
    }

    #[getter]
    fn energy(&self) -> u64 {
        self.0.energy()
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    fn coefficients(&self) -> Vec<((i64, i64), (f64, f64))> {
        self.0
            .points()
            .points()
            .iter()
            .zip(self.0.entries())
            .map(|(&p, c)| (p, (c.re, c.im)))
            .collect()
    }

    /// `(f(x), ∂₁f(x), ∂₂f(x))`.
    fn evaluate(&self, x: (f64, f64)) -> (f64, f64, f64) {
        let (v, g) = self.0.evaluate([x.0, x.1]);
        (v, g[0], g[1])
    }

    fn spectral_measure(&self) -> PySpectralMeasure {
        PySpectralMeasure(self.0.spectral_measure())
    }

    /// Nodal domains on the torus, refined until two resolutions agree.
    #[pyo3(signature = (resolution = None))]
    fn count_nodal_domains(&self, resolution: Option<usize>) -> PyResult<usize> {
        let field = self.0.torus_field();
        let n = resolution.unwrap_or_else(|| nodal::auto_resolution(&field, Domain::Torus));
        nodal::count_nodal_domains(&field, Domain::Torus, CensusOptions::new(n))
            .map(|s| s.count())
            .map_err(runtime_err)
    }

    /// `(max gap, arg-max spec)` over moment specs with total order below `bound`.
    fn moment_gap(&self, arcs: usize, delta: f64, bound: u32) -> PyResult<(f64, String)> {
        let bin = measure::bin_measure(&self.0.spectral_measure(), arcs, delta).map_err(value_err)?;
        let sweep = derandom::moment_gap_sweep(&self.0, &bin, bound, false).map_err(runtime_err)?;
        let arg = sweep.argmax().map_or_else(String::new, |c| c.spec.to_string());
        Ok((sweep.max_gap(), arg))
    }

    /// Exact quasi-moment `(re, im)` of `Π b_k^{r_k} b̄_k^{s_k}`; spec is `k:r:s;...`.
    fn bk_moment(&self, arcs: usize, delta: f64, spec: &str) -> PyResult<(f64, f64)> {
        let bin = measure::bin_measure(&self.0.spectral_measure(), arcs, delta).map_err(value_err)?;
        let spec = MomentSpec::parse(spec).map_err(value_err)?;
        let m = derandom::bk_moment_exact(&self.0, &bin, &spec).map_err(runtime_err)?;
        Ok((m.value.re, m.value.im))
    }

    /// Jacobian determinant of `x ↦ (Re b_k, Im b_k)` at `x`.
    fn bk_jacobian_det(&self, arcs: usize, delta: f64, k: i64, x: (f64, f64)) -> PyResult<f64> {
        let bin = measure::bin_measure(&self.0.spectral_measure(), arcs, delta).map_err(value_err)?;
        derandom::bk_jacobian_det(&self.0, &bin, k, [x.0, x.1]).map_err(value_err)
    }
}

#[pyfunction]
fn gaussian_joint_moment(spec: &str) -> PyResult<f64> {
    Ok(derandom::gaussian_joint_moment(&MomentSpec::parse(spec).map_err(value_err)?))
}

/// Runs a `key=value` comparison config and returns the CSV table.
#[pyfunction]
fn run_comparison(config: &str) -> PyResult<String> {
    let cfg = ExperimentConfig::parse(config).map_err(value_err)?;
    let rows = experiment::run_comparison(&cfg).map_err(runtime_err)?;
    Ok(experiment::comparison_csv(&rows))
}

#[pymodule(name = "toral_nodal")]
fn toral_nodal_module(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySpectralMeasure>()?;
    m.add_class::<PyEigenfunction>()?;
    m.add_function(wrap_pyfunction!(is_sum_of_two_squares, m)?)?;
    m.add_function(wrap_pyfunction!(lattice_points, m)?)?;
    m.add_function(wrap_pyfunction!(minimally_vanishing_count, m)?)?;
    m.add_function(wrap_pyfunction!(gaussian_joint_moment, m)?)?;
    m.add_function(wrap_pyfunction!(run_comparison, m)?)?;
    Ok(())
}
