//! Python bindings: a `State` class around the validated density matrix plus
//! module-level functions for the closed forms, feasibility conditions, chain
//! folding, resource accounting, and the noise-robustness catalog. Structured
//! reports come back as plain dicts, measurement ensembles as lists of dicts.

use num_complex::Complex64;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};
use serde::Serialize;

use repeater_core::linalg::{kron, CMat, DensityMatrix};
use repeater_core::protocols::{self, NodeMeasurement, OutcomeEnsemble};
use repeater_core::robustness::{self, RobustnessCase};
use repeater_core::scenario::ChainScenario;
use repeater_core::{measures, resources, states};

// ---------------------------------------------------------------------------
// Conversions
// ---------------------------------------------------------------------------

fn err(e: repeater_core::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// Convert any serializable report into nested Python dicts/lists/scalars.
fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<PyObject> {
    let json = serde_json::to_value(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    json_to_py(py, &json)
}

fn json_to_py(py: Python<'_>, value: &serde_json::Value) -> PyResult<PyObject> {
    use serde_json::Value;
    Ok(match value {
        Value::Null => py.None(),
        Value::Bool(b) => b.into_py(py),
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                i.into_py(py)
            } else if let Some(u) = n.as_u64() {
                u.into_py(py)
            } else {
                n.as_f64().unwrap_or(f64::NAN).into_py(py)
            }
        }
        Value::String(s) => s.into_py(py),
        Value::Array(items) => {
            let list = PyList::empty_bound(py);
            for item in items {
                list.append(json_to_py(py, item)?)?;
            }
            list.into_py(py)
        }
        Value::Object(map) => {
            let dict = PyDict::new_bound(py);
            for (key, item) in map {
                dict.set_item(key, json_to_py(py, item)?)?;
            }
            dict.into_py(py)
        }
    })
}

/// A possibly absent state as a Python object (None when absent).
fn state_to_py(py: Python<'_>, state: &Option<DensityMatrix>) -> PyObject {
    match state {
        Some(inner) => State {
            inner: inner.clone(),
        }
        .into_py(py),
        None => py.None(),
    }
}

/// Measurement outcomes as a list of {label, probability, state} dicts.
fn ensemble_to_py(py: Python<'_>, ensemble: &OutcomeEnsemble) -> PyResult<PyObject> {
    let list = PyList::empty_bound(py);
    for outcome in &ensemble.outcomes {
        let dict = PyDict::new_bound(py);
        dict.set_item("label", outcome.label)?;
        dict.set_item("probability", outcome.probability)?;
        dict.set_item("state", state_to_py(py, &outcome.state))?;
        list.append(dict)?;
    }
    Ok(list.into())
}

// ---------------------------------------------------------------------------
// State class
// ---------------------------------------------------------------------------

/// A validated multi-qubit density matrix.
#[pyclass]
#[derive(Clone)]
pub struct State {
    inner: DensityMatrix,
}

#[pymethods]
impl State {
    /// Mixture p |01><01| + (1-p) |z(delta)><z(delta)| with
    /// z(delta) = sqrt(delta)|00> + sqrt(1-delta)|11>.
    #[staticmethod]
    fn family(p: f64, delta: f64) -> PyResult<Self> {
        Ok(State {
            inner: states::family_state(p, delta).map_err(err)?,
        })
    }

    /// Pure pair sqrt(alpha)|00> + sqrt(1-alpha)|11>; weights below 1/2 are
    /// mirrored into [1/2, 1].
    #[staticmethod]
    fn nmes(alpha: f64) -> PyResult<Self> {
        Ok(State {
            inner: states::nmes(alpha).map_err(err)?,
        })
    }

    /// Werner state with the given singlet fidelity.
    #[staticmethod]
    fn werner(fidelity: f64) -> PyResult<Self> {
        Ok(State {
            inner: states::werner(fidelity).map_err(err)?,
        })
    }

    /// The four Bell projectors, indexed 0..3.
    #[staticmethod]
    fn bell(index: usize) -> PyResult<Self> {
        Ok(State {
            inner: states::bell(index).map_err(err)?,
        })
    }

    /// Odd-parity pair sqrt(omega)|01> + sqrt(1-omega)|10> after amplitude
    /// damping with loss p on its second qubit.
    #[staticmethod]
    fn photon_loss(p: f64, omega: f64) -> PyResult<Self> {
        Ok(State {
            inner: states::photon_loss_state(p, omega).map_err(err)?,
        })
    }

    /// Validate a row-major complex matrix as a density matrix.
    #[staticmethod]
    fn from_matrix(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
        let dim = rows.len();
        if rows.iter().any(|row| row.len() != dim) {
            return Err(PyValueError::new_err("matrix is not square"));
        }
        Ok(State {
            inner: DensityMatrix::new(CMat::from_rows(&rows)).map_err(err)?,
        })
    }

    /// Tensor product, placing `self` on the most significant qubits.
    fn tensor(&self, other: &State) -> PyResult<Self> {
        Ok(State {
            inner: DensityMatrix::new(kron(self.inner.mat(), other.inner.mat())).map_err(err)?,
        })
    }

    /// Convex mix with white noise: (1-q) rho + q I/d.
    fn white_noise(&self, q: f64) -> PyResult<Self> {
        Ok(State {
            inner: states::white_noise_mix(&self.inner, q).map_err(err)?,
        })
    }

    /// Convex mix with the vacuum projector: (1-q) rho + q |0..0><0..0|.
    fn photon_loss_mix(&self, q: f64) -> PyResult<Self> {
        Ok(State {
            inner: states::photon_loss_mix(&self.inner, q).map_err(err)?,
        })
    }

    /// Row-major matrix entries as Python complex numbers.
    fn matrix(&self) -> Vec<Vec<Complex64>> {
        let dim = self.inner.dim();
        let data = self.inner.mat().data();
        (0..dim)
            .map(|i| data[i * dim..(i + 1) * dim].to_vec())
            .collect()
    }

    #[getter]
    fn n_qubits(&self) -> usize {
        self.inner.n_qubits()
    }

    #[getter]
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues()
    }

    fn concurrence(&self) -> PyResult<f64> {
        measures::concurrence(&self.inner).map_err(err)
    }

    fn negativity(&self) -> PyResult<f64> {
        measures::negativity(&self.inner).map_err(err)
    }

    /// Fully entangled fraction (best overlap with a maximally entangled
    /// state under local unitaries).
    fn fef(&self) -> PyResult<f64> {
        measures::fef(&self.inner).map_err(err)
    }

    /// Concurrence upper bound (1 + C)/2 on the filtered overlap.
    fn ofef_upper(&self) -> PyResult<f64> {
        measures::ofef_upper(&self.inner).map_err(err)
    }

    /// All scalar measures in one dict.
    fn measures(&self, py: Python<'_>) -> PyResult<PyObject> {
        to_py(py, &measures::measure_report(&self.inner).map_err(err)?)
    }

    /// Monte Carlo lower estimate of the fully entangled fraction.
    fn sampled_fef(&self, samples: usize, seed: u64) -> PyResult<f64> {
        measures::sampled_fef(&self.inner, samples, seed).map_err(err)
    }

    /// Monte Carlo average teleportation fidelity over random input states.
    fn teleport_fidelity_mc(&self, samples: usize, seed: u64) -> PyResult<f64> {
        measures::teleport_avg_fidelity_mc(&self.inner, samples, seed).map_err(err)
    }

    fn trace_distance(&self, other: &State) -> f64 {
        repeater_core::linalg::trace_distance(&self.inner, &other.inner)
    }

    /// Measure qubits (first, first+1) in the tilted entangled basis.
    fn measure_pvm(&self, py: Python<'_>, first: usize, beta: f64) -> PyResult<PyObject> {
        let measurement = NodeMeasurement::from(protocols::pvm_basis(beta).map_err(err)?);
        let ensemble =
            protocols::measure_node(&self.inner, (first, first + 1), &measurement).map_err(err)?;
        ensemble_to_py(py, &ensemble)
    }

    /// Measure qubits (first, first+1) with the bit-flip-noisy Bell POVM.
    fn measure_noisy_bell(&self, py: Python<'_>, first: usize, eta: f64) -> PyResult<PyObject> {
        let measurement = NodeMeasurement::from(protocols::noisy_bell_povm(eta).map_err(err)?);
        let ensemble =
            protocols::measure_node(&self.inner, (first, first + 1), &measurement).map_err(err)?;
        ensemble_to_py(py, &ensemble)
    }

    fn __repr__(&self) -> String {
        format!("State(n_qubits={}, dim={})", self.inner.n_qubits(), self.inner.dim())
    }
}

// ---------------------------------------------------------------------------
// Closed-form measures
// ---------------------------------------------------------------------------

/// Concurrence 2 sqrt(d(1-d)) (1-p) of the canonical mixture.
#[pyfunction]
fn concurrence_family(p: f64, delta: f64) -> f64 {
    measures::concurrence_family(p, delta)
}

/// Concurrence 2 sqrt(a(1-a)) of the pure pair.
#[pyfunction]
fn concurrence_nmes(alpha: f64) -> f64 {
    measures::concurrence_nmes(alpha)
}

/// Best post-filter fidelity of the canonical mixture.
#[pyfunction]
fn ofef_family(p: f64, delta: f64) -> PyResult<f64> {
    measures::ofef_family(p, delta).map_err(err)
}

/// Average teleportation fidelity (2F + 1)/3 implied by an entangled
/// fraction F.
#[pyfunction]
fn otf_from_fef(fef: f64) -> f64 {
    measures::otf_from_fef(fef)
}

/// Binary entropy of the pure pair's marginal, in bits.
#[pyfunction]
fn entropy_of_pair(alpha: f64) -> PyResult<f64> {
    measures::von_neumann_entropy_marginal(alpha).map_err(err)
}

// ---------------------------------------------------------------------------
// Single-node protocol
// ---------------------------------------------------------------------------

/// Largest resource weight alpha the swap can compensate at (p, delta).
#[pyfunction]
fn max_feasible_alpha(p: f64, delta: f64) -> f64 {
    protocols::max_feasible_alpha(p, delta)
}

/// Largest measurement tilt beta compatible with (p, delta, alpha).
#[pyfunction]
fn max_feasible_beta(p: f64, delta: f64, alpha: f64) -> f64 {
    protocols::max_feasible_beta(p, delta, alpha)
}

/// Full feasibility report of the single-node swap as a dict.
#[pyfunction]
fn feasibility_single_node(
    py: Python<'_>,
    p: f64,
    delta: f64,
    alpha: f64,
    beta: f64,
) -> PyResult<PyObject> {
    to_py(
        py,
        &protocols::feasibility_single_node(p, delta, alpha, beta).map_err(err)?,
    )
}

/// Probability-weighted best post-filter fidelity over the four outcomes.
#[pyfunction]
fn average_ofef_single_node(p: f64, delta: f64, alpha: f64, beta: f64) -> PyResult<f64> {
    protocols::average_ofef_single_node(p, delta, alpha, beta).map_err(err)
}

/// The four post-measurement outcomes of the single-node swap, each with its
/// probability, effective family parameters, and end-pair state.
#[pyfunction]
fn single_node_outcomes(
    py: Python<'_>,
    p: f64,
    delta: f64,
    alpha: f64,
    beta: f64,
) -> PyResult<PyObject> {
    let ensemble = protocols::post_states_closed_form(p, delta, alpha, beta).map_err(err)?;
    let list = PyList::empty_bound(py);
    for outcome in &ensemble.outcomes {
        let dict = PyDict::new_bound(py);
        dict.set_item("label", outcome.label)?;
        dict.set_item("probability", outcome.probability)?;
        let params = outcome
            .state
            .as_ref()
            .and_then(|state| protocols::family_params_extract(state).ok());
        dict.set_item("p_eff", params.as_ref().map(|fp| fp.p_eff))?;
        dict.set_item("delta_eff", params.as_ref().map(|fp| fp.delta_eff))?;
        dict.set_item("state", state_to_py(py, &outcome.state))?;
        list.append(dict)?;
    }
    Ok(list.into())
}

/// All sixteen outcomes of the sequential two-node swap as dicts with keys
/// first, second, probability, state.
#[pyfunction]
fn two_node_cascade(
    py: Python<'_>,
    p: f64,
    delta: f64,
    alpha_l: f64,
    alpha_r: f64,
) -> PyResult<PyObject> {
    let outcomes = protocols::two_node_cascade(p, delta, alpha_l, alpha_r).map_err(err)?;
    let list = PyList::empty_bound(py);
    for outcome in &outcomes {
        let dict = PyDict::new_bound(py);
        dict.set_item("first", outcome.first)?;
        dict.set_item("second", outcome.second)?;
        dict.set_item("probability", outcome.probability)?;
        dict.set_item("state", state_to_py(py, &outcome.state))?;
        list.append(dict)?;
    }
    Ok(list.into())
}

/// Whether two pure pairs around one noisy link keep the link's best
/// fidelity reachable.
#[pyfunction]
fn two_node_feasibility(p: f64, delta: f64, alpha_l: f64, alpha_r: f64) -> PyResult<bool> {
    protocols::two_node_feasibility(p, delta, alpha_l, alpha_r).map_err(err)
}

/// Feasible alpha window (lower, upper) when both neighbours of the noisy
/// link carry the same weight.
#[pyfunction]
fn two_noisy_window(delta: f64, alpha: f64) -> PyResult<(f64, f64)> {
    protocols::two_noisy_window(delta, alpha).map_err(err)
}

// ---------------------------------------------------------------------------
// Chain folding
// ---------------------------------------------------------------------------

/// Swap two pure pairs into one effective pair's Schmidt weight.
#[pyfunction]
fn rpbes_combine(alpha1: f64, alpha2: f64) -> PyResult<f64> {
    protocols::rpbes_combine(alpha1, alpha2).map_err(err)
}

/// Fold a run of pure pairs into one effective Schmidt weight.
#[pyfunction]
fn fold_alphas(alphas: Vec<f64>) -> PyResult<f64> {
    protocols::fold_alphas(&alphas).map_err(err)
}

/// Fold a chain configuration (same JSON schema as the CLI) down to two
/// effective pairs around its noisy link.
#[pyfunction]
fn reduce_chain(py: Python<'_>, config_json: &str) -> PyResult<PyObject> {
    let scenario: ChainScenario =
        serde_json::from_str(config_json).map_err(|e| PyValueError::new_err(e.to_string()))?;
    to_py(py, &protocols::reduce_chain_mid_noise(&scenario).map_err(err)?)
}

// ---------------------------------------------------------------------------
// Resource accounting
// ---------------------------------------------------------------------------

/// Saving n(1 - C) of n segments running at concurrence C.
#[pyfunction]
fn saved_resource(n: usize, c: f64) -> PyResult<f64> {
    resources::saved_resource(n, c).map_err(err)
}

/// Closed-form cap on the saving of n segments at the feasibility threshold.
#[pyfunction]
fn saved_resource_bound(n: usize, p: f64, delta: f64) -> PyResult<f64> {
    resources::saved_resource_bound(n, p, delta).map_err(err)
}

/// n -> infinity limit of the saving cap, in nats.
#[pyfunction]
fn saved_resource_limit(p: f64, delta: f64) -> PyResult<f64> {
    resources::saved_resource_limit(p, delta).map_err(err)
}

/// Threshold saving when the noisy link sits at position m of n+1 segments.
#[pyfunction]
fn saved_resource_at_position(n: usize, m: usize, p: f64, delta: f64) -> PyResult<f64> {
    resources::saved_resource_at_position(n, m, p, delta).map_err(err)
}

/// Hashing-protocol yield of a Werner state and whether it is positive.
#[pyfunction]
fn hashing_rate(fidelity: f64) -> PyResult<(f64, bool)> {
    resources::hashing_rate(fidelity).map_err(err)
}

/// Werner copies (fidelity F) needed to distill n threshold segments.
#[pyfunction]
fn copies_required(n: usize, p: f64, fidelity: f64) -> PyResult<f64> {
    resources::copies_required(n, p, fidelity).map_err(err)
}

/// Full resource summary at the feasibility threshold as a dict.
#[pyfunction]
fn resource_report(py: Python<'_>, n: usize, p: f64, delta: f64, fidelity: f64) -> PyResult<PyObject> {
    to_py(
        py,
        &resources::resource_report(n, p, delta, fidelity).map_err(err)?,
    )
}

// ---------------------------------------------------------------------------
// Noise robustness
// ---------------------------------------------------------------------------

/// Noiseless protocol fidelity (p+1)^2/(8p) of the balanced branch.
#[pyfunction]
fn baseline_balanced(p: f64) -> f64 {
    robustness::baseline_balanced(p)
}

/// Noiseless protocol fidelity (2p+3)(3p+2)/(50p) at delta = 3/5.
#[pyfunction]
fn baseline_tilted(p: f64) -> f64 {
    robustness::baseline_tilted(p)
}

/// Evaluate one robustness scenario at one noise point. `case` is one of
/// white, photon_loss, povm_white, povm_loss, me_vs_nme_white,
/// me_vs_nme_loss; the povm cases pin p and read `eta`.
#[pyfunction]
#[pyo3(signature = (case, p, q = 0.0, eta = None))]
fn robustness_point(
    py: Python<'_>,
    case: &str,
    p: f64,
    q: f64,
    eta: Option<f64>,
) -> PyResult<PyObject> {
    let case = RobustnessCase::parse(case).map_err(err)?;
    to_py(py, &robustness::robustness_point(case, p, q, eta).map_err(err)?)
}

/// Percentage fidelity drop of the white-noise scenario over a (p, q) grid;
/// defaults to the reference grid.
#[pyfunction]
#[pyo3(signature = (ps = None, qs = None))]
fn table1(ps: Option<Vec<f64>>, qs: Option<Vec<f64>>) -> PyResult<Vec<Vec<f64>>> {
    let ps = ps.unwrap_or_else(|| robustness::TABLE1_P.to_vec());
    let qs = qs.unwrap_or_else(|| robustness::TABLE1_Q.to_vec());
    robustness::table1(&ps, &qs).map_err(err)
}

// ---------------------------------------------------------------------------
// Module
// ---------------------------------------------------------------------------

#[pymodule]
fn repeater_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<State>()?;
    m.add_function(wrap_pyfunction!(concurrence_family, m)?)?;
    m.add_function(wrap_pyfunction!(concurrence_nmes, m)?)?;
    m.add_function(wrap_pyfunction!(ofef_family, m)?)?;
    m.add_function(wrap_pyfunction!(otf_from_fef, m)?)?;
    m.add_function(wrap_pyfunction!(entropy_of_pair, m)?)?;
    m.add_function(wrap_pyfunction!(max_feasible_alpha, m)?)?;
    m.add_function(wrap_pyfunction!(max_feasible_beta, m)?)?;
    m.add_function(wrap_pyfunction!(feasibility_single_node, m)?)?;
    m.add_function(wrap_pyfunction!(average_ofef_single_node, m)?)?;
    m.add_function(wrap_pyfunction!(single_node_outcomes, m)?)?;
    m.add_function(wrap_pyfunction!(two_node_cascade, m)?)?;
    m.add_function(wrap_pyfunction!(two_node_feasibility, m)?)?;
    m.add_function(wrap_pyfunction!(two_noisy_window, m)?)?;
    m.add_function(wrap_pyfunction!(rpbes_combine, m)?)?;
    m.add_function(wrap_pyfunction!(fold_alphas, m)?)?;
    m.add_function(wrap_pyfunction!(reduce_chain, m)?)?;
    m.add_function(wrap_pyfunction!(saved_resource, m)?)?;
    m.add_function(wrap_pyfunction!(saved_resource_bound, m)?)?;
    m.add_function(wrap_pyfunction!(saved_resource_limit, m)?)?;
    m.add_function(wrap_pyfunction!(saved_resource_at_position, m)?)?;
    m.add_function(wrap_pyfunction!(hashing_rate, m)?)?;
    m.add_function(wrap_pyfunction!(copies_required, m)?)?;
    m.add_function(wrap_pyfunction!(resource_report, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_balanced, m)?)?;
    m.add_function(wrap_pyfunction!(baseline_tilted, m)?)?;
    m.add_function(wrap_pyfunction!(robustness_point, m)?)?;
    m.add_function(wrap_pyfunction!(table1, m)?)?;
    Ok(())
}
