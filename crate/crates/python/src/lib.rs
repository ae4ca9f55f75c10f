//! Python bindings for the `vnsim` core: states, questions, evolution,
//! reduction, the Zeno recipes, Hardy checks and config-driven runs.

use pyo3::prelude::*;

#[pymodule]
mod vnsim_py {
    use num_complex::Complex64;
    use pyo3::exceptions::{PyKeyError, PyValueError};
    use pyo3::prelude::*;
    use pyo3::types::PyDict;

    use vnsim::dynamics::{self, PointerBasis};
    use vnsim::hardy::{self, HardyInstance, Right};
    use vnsim::harness::{self, RunConfig};
    use vnsim::qcore::{self, CMatrix, CVector, MatrixJson, SubsystemLayout};
    use vnsim::reduction;
    use vnsim::zeno::{self, ZenoSchedule};

    fn err(e: vnsim::Error) -> PyErr {
        match e {
            vnsim::Error::UnknownTask(_) | vnsim::Error::MissingField(_) => PyKeyError::new_err(e.to_string()),
            _ => PyValueError::new_err(e.to_string()),
        }
    }

    fn matrix(rows: Vec<Vec<Complex64>>) -> PyResult<CMatrix> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return Err(PyValueError::new_err("expected a non-empty square matrix"));
        }
        Ok(CMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    fn rows(m: &CMatrix) -> Vec<Vec<Complex64>> {
        (0..m.nrows()).map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect()).collect()
    }

    fn pure(amplitudes: Vec<Complex64>) -> PyResult<qcore::PureState> {
        qcore::PureState::normalized(CVector::from_vec(amplitudes)).map_err(err)
    }

    #[pyclass(name = "DensityMatrix", from_py_object)]
    #[derive(Clone)]
    struct PyDensityMatrix(qcore::DensityMatrix);

    #[pymethods]
    impl PyDensityMatrix {
        /// Validated density matrix from a square list of complex rows.
        #[new]
        fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
            qcore::DensityMatrix::new(matrix(rows)?).map(Self).map_err(err)
        }

        /// |ψ⟩⟨ψ| for the normalized amplitude list.
        #[staticmethod]
        fn pure(amplitudes: Vec<Complex64>) -> PyResult<Self> {
            Ok(Self(qcore::DensityMatrix::from_pure(&pure(amplitudes)?)))
        }

        #[staticmethod]
        fn basis(dim: usize, index: usize) -> PyResult<Self> {
            if index >= dim {
                return Err(PyValueError::new_err("basis index out of range"));
            }
            Ok(Self(qcore::DensityMatrix::from_pure(&qcore::PureState::basis(dim, index))))
        }

        #[staticmethod]
        fn maximally_mixed(dim: usize) -> Self {
            Self(qcore::DensityMatrix::maximally_mixed(dim))
        }

        #[staticmethod]
        fn from_json(text: &str) -> PyResult<Self> {
            let m: MatrixJson = serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
            qcore::DensityMatrix::try_from(m).map(Self).map_err(err)
        }

        fn to_json(&self) -> String {
            serde_json::to_string(&MatrixJson::from(self.0.entries())).expect("matrix serializes")
        }

        #[getter]
        fn dim(&self) -> usize {
            self.0.dim()
        }

        fn trace(&self) -> f64 {
            self.0.trace()
        }

        fn purity(&self) -> f64 {
            self.0.purity()
        }

        fn diagonal(&self) -> Vec<f64> {
            self.0.diagonal()
        }

        fn eigenvalues(&self) -> Vec<f64> {
            self.0.eigenvalues()
        }

        fn entries(&self) -> Vec<Vec<Complex64>> {
            rows(self.0.entries())
        }

        fn tensor(&self, other: &Self) -> Self {
            Self(self.0.tensor(&other.0))
        }

        /// Reduced state on factor `keep` of `layout`.
        fn partial_trace(&self, layout: Vec<usize>, keep: usize) -> PyResult<Self> {
            let layout = SubsystemLayout::new(layout).map_err(err)?;
            qcore::partial_trace(&self.0, &layout, keep).map(Self).map_err(err)
        }

        fn __repr__(&self) -> String {
            format!("DensityMatrix(dim={}, purity={:.6})", self.0.dim(), self.0.purity())
        }
    }

    #[pyclass(name = "Projector", from_py_object)]
    #[derive(Clone)]
    struct PyProjector(qcore::Projector);

    #[pymethods]
    impl PyProjector {
        #[new]
        #[pyo3(signature = (rows, label = "P"))]
        fn new(rows: Vec<Vec<Complex64>>, label: &str) -> PyResult<Self> {
            qcore::Projector::new(matrix(rows)?, label).map(Self).map_err(err)
        }

        /// |v⟩⟨v| for the normalized vector.
        #[staticmethod]
        #[pyo3(signature = (amplitudes, label = "P"))]
        fn from_vector(amplitudes: Vec<Complex64>, label: &str) -> PyResult<Self> {
            Ok(Self(qcore::Projector::from_state(&pure(amplitudes)?, label)))
        }

        #[staticmethod]
        fn identity(dim: usize) -> Self {
            Self(qcore::Projector::identity(dim))
        }

        #[getter]
        fn dim(&self) -> usize {
            self.0.dim()
        }

        #[getter]
        fn label(&self) -> String {
            self.0.label().to_string()
        }

        fn rank(&self) -> usize {
            self.0.rank()
        }

        fn complement(&self) -> Self {
            Self(self.0.complement())
        }

        fn lift(&self, layout: Vec<usize>, factor: usize) -> PyResult<Self> {
            let layout = SubsystemLayout::new(layout).map_err(err)?;
            self.0.lift(&layout, factor).map(Self).map_err(err)
        }

        fn entries(&self) -> Vec<Vec<Complex64>> {
            rows(self.0.entries())
        }

        fn __repr__(&self) -> String {
            format!("Projector(label={:?}, dim={}, rank={})", self.0.label(), self.0.dim(), self.0.rank())
        }
    }

    #[pyclass(name = "Hamiltonian", from_py_object)]
    #[derive(Clone)]
    struct PyHamiltonian(dynamics::Hamiltonian);

    #[pymethods]
    impl PyHamiltonian {
        #[new]
        fn new(rows: Vec<Vec<Complex64>>) -> PyResult<Self> {
            dynamics::Hamiltonian::new(matrix(rows)?).map(Self).map_err(err)
        }

        /// `pauli-x`, `pauli-z` or `rabi(<omega>)`.
        #[staticmethod]
        fn preset(name: &str) -> PyResult<Self> {
            dynamics::Hamiltonian::from_preset(name).map(Self).map_err(err)
        }

        #[staticmethod]
        fn zero(dim: usize) -> Self {
            Self(dynamics::Hamiltonian::zero(dim))
        }

        #[getter]
        fn dim(&self) -> usize {
            self.0.dim()
        }

        fn lift(&self, layout: Vec<usize>, factor: usize) -> PyResult<Self> {
            let layout = SubsystemLayout::new(layout).map_err(err)?;
            self.0.lift(&layout, factor).map(Self).map_err(err)
        }

        fn energies(&self) -> Vec<f64> {
            self.0.spectrum().energies().to_vec()
        }
    }

    #[pyfunction]
    fn evolve(s: &PyDensityMatrix, h: &PyHamiltonian, dt: f64) -> PyResult<PyDensityMatrix> {
        dynamics::evolve(&s.0, &h.0, dt).map(PyDensityMatrix).map_err(err)
    }

    #[pyfunction]
    fn propagator(h: &PyHamiltonian, dt: f64) -> PyResult<Vec<Vec<Complex64>>> {
        dynamics::propagator(&h.0, dt).map(|u| rows(&u)).map_err(err)
    }

    /// Dephases in the pointer basis given by `projectors` (must resolve the identity).
    #[pyfunction]
    fn dephase(s: &PyDensityMatrix, projectors: Vec<PyProjector>, strength: f64) -> PyResult<PyDensityMatrix> {
        let basis = PointerBasis::new(projectors.into_iter().map(|p| p.0).collect()).map_err(err)?;
        dynamics::dephase(&s.0, &basis, strength).map(PyDensityMatrix).map_err(err)
    }

    #[pyfunction]
    fn yes_probability(s: &PyDensityMatrix, p: &PyProjector) -> PyResult<f64> {
        reduction::yes_probability(&s.0, &p.0).map_err(err)
    }

    #[pyfunction]
    fn reduce_yes(s: &PyDensityMatrix, p: &PyProjector) -> PyResult<PyDensityMatrix> {
        reduction::reduce_yes(&s.0, &p.0).map(PyDensityMatrix).map_err(err)
    }

    #[pyfunction]
    fn reduce_no(s: &PyDensityMatrix, p: &PyProjector) -> PyResult<PyDensityMatrix> {
        reduction::reduce_no(&s.0, &p.0).map(PyDensityMatrix).map_err(err)
    }

    /// Samples an answer; returns (outcome "Y"/"N", Yes probability, post-event state).
    #[pyfunction]
    #[pyo3(signature = (s, p, seed, t = 0.0))]
    fn pose_question(s: &PyDensityMatrix, p: &PyProjector, seed: u64, t: f64) -> PyResult<(String, f64, PyDensityMatrix)> {
        let mut rng = reduction::NatureRng::new(reduction::RngSeed(seed));
        let (event, next) = reduction::pose_question(&s.0, &p.0, &mut rng, t).map_err(err)?;
        let outcome = if event.outcome.is_yes() { "Y" } else { "N" };
        Ok((outcome.to_string(), event.probability, PyDensityMatrix(next)))
    }

    /// All-Yes probability of n equally spaced repetitions of `p` over `total_time`.
    #[pyfunction]
    fn zeno_survival(s0: &PyDensityMatrix, h: &PyHamiltonian, p: &PyProjector, total_time: f64, n: usize) -> PyResult<f64> {
        let sched = ZenoSchedule::constant(total_time, n, p.0.clone()).map_err(err)?;
        zeno::run_zeno(&s0.0, &h.0, &sched)
            .map(|r| r.survival_probability)
            .map_err(err)
    }

    /// Drags |0⟩ to |1⟩ with n questions; returns (survival, fidelity).
    #[pyfunction]
    #[pyo3(signature = (n, total_time = 1.0, h = None))]
    fn zeno_drag(n: usize, total_time: f64, h: Option<PyHamiltonian>) -> PyResult<(f64, f64)> {
        let from = qcore::PureState::basis(2, 0);
        let to = qcore::PureState::basis(2, 1);
        let h = h.map_or_else(|| dynamics::Hamiltonian::zero(2), |h| h.0);
        let s0 = qcore::DensityMatrix::from_pure(&from);
        let r = zeno::run_zeno_drag(&s0, &h, &from, &to, n, total_time).map_err(err)?;
        Ok((r.result.survival_probability, r.fidelity))
    }

    fn instance(name: &str) -> PyResult<HardyInstance> {
        match name {
            "canonical" => Ok(HardyInstance::canonical()),
            "product" => Ok(HardyInstance::product_z()),
            "optimized" => hardy::optimize_hardy(200).map(|o| o.instance).map_err(err),
            other => Err(PyValueError::new_err(format!("unknown instance `{other}`"))),
        }
    }

    /// Prediction report of a named instance as a dict.
    #[pyfunction]
    #[pyo3(signature = (name = "canonical"))]
    fn hardy_verify<'py>(py: Python<'py>, name: &str) -> PyResult<Bound<'py, PyDict>> {
        let r = instance(name)?.verify_predictions();
        let d = PyDict::new(py);
        d.set_item("p1_violation", r.p1_violation)?;
        d.set_item("p2_violation", r.p2_violation)?;
        d.set_item("p3_violation", r.p3_violation)?;
        d.set_item("p4_value", r.p4_value)?;
        Ok(d)
    }

    /// Hardy family member θ; returns the four report values.
    #[pyfunction]
    fn hardy_family(theta: f64) -> PyResult<(f64, f64, f64, f64)> {
        let r = HardyInstance::family(theta).map_err(err)?.verify_predictions();
        Ok((r.p1_violation, r.p2_violation, r.p3_violation, r.p4_value))
    }

    /// (consistent assignments, consistent assignments realizing L1- and R1+).
    #[pyfunction]
    #[pyo3(signature = (name = "canonical"))]
    fn hardy_lhv(name: &str) -> PyResult<(usize, usize)> {
        let r = hardy::lhv_enumerate(&instance(name)?);
        Ok((r.consistent, r.consistent_with_p4))
    }

    /// Verdict label for A(R1) or A(R2).
    #[pyfunction]
    #[pyo3(signature = (which, name = "canonical"))]
    fn hardy_assert(which: &str, name: &str) -> PyResult<String> {
        let which: Right = which.parse().map_err(err)?;
        hardy::check_assertion(&instance(name)?, which)
            .map(|v| v.label().to_string())
            .map_err(err)
    }

    /// (θ, p4) found within `budget` objective evaluations.
    #[pyfunction]
    #[pyo3(signature = (budget = 200))]
    fn optimize_hardy(budget: usize) -> PyResult<(f64, f64)> {
        hardy::optimize_hardy(budget).map(|o| (o.theta, o.p4_value)).map_err(err)
    }

    /// Runs a JSON run configuration; returns (summary, stdout artifact or None).
    #[pyfunction]
    #[pyo3(signature = (config, seed = None))]
    fn run(config: &str, seed: Option<u64>) -> PyResult<(String, Option<String>)> {
        let config = RunConfig::from_json(config).map_err(err)?;
        let outcome = match seed {
            Some(s) => harness::run_with_seed(&config, reduction::RngSeed(s)),
            None => harness::run(&config),
        }
        .map_err(err)?;
        Ok((outcome.summary, outcome.stdout))
    }
}
