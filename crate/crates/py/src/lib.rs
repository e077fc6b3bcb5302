//! Python bindings. Structured results cross the boundary as plain dicts
//! and lists built from the same JSON the server and CLI emit.

use std::path::PathBuf;
use std::sync::{Arc, Mutex};

use pyo3::exceptions::{PyKeyError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyString;
use serde::Serialize;
use translucent_core::graph::{corpus_graph, DEFAULT_THRESHOLD};
use translucent_core::metrics::{analyze as analyze_log, AnalyzeOptions};
use translucent_core::sync::NullSink;
use translucent_core::translucence::attention_distribution;
use translucent_core::wire::{ServerMessage, PROTOCOL_VERSION};
use translucent_core::{
    extract_mentions, shade_function, Condition, EntityRegistry, ExtractorConfig, Operation, Role,
    SessionCore, SessionHeader, SessionLog, Submitted, VisualizationState,
};

fn value_error(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn to_py<T: Serialize>(py: Python<'_>, value: &T) -> PyResult<Py<PyAny>> {
    let text = serde_json::to_string(value).map_err(value_error)?;
    Ok(py.import("json")?.call_method1("loads", (text,))?.unbind())
}

/// Accepts either a JSON string or any object `json.dumps` understands.
fn from_py<T: serde::de::DeserializeOwned>(py: Python<'_>, obj: &Bound<'_, PyAny>) -> PyResult<T> {
    let text: String = if obj.is_instance_of::<PyString>() {
        obj.extract()?
    } else {
        py.import("json")?
            .call_method1("dumps", (obj,))?
            .extract()?
    };
    serde_json::from_str(&text).map_err(value_error)
}

fn parse_role(role: &str) -> PyResult<Role> {
    role.parse().map_err(value_error)
}

#[pyclass(name = "Corpus", frozen)]
struct PyCorpus {
    inner: Arc<translucent_core::Corpus>,
}

#[pymethods]
impl PyCorpus {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        let corpus = translucent_core::Corpus::load(&path).map_err(value_error)?;
        Ok(Self {
            inner: Arc::new(corpus),
        })
    }

    #[getter]
    fn corpus_id(&self) -> String {
        self.inner.id().to_string()
    }

    #[getter]
    fn solution(&self) -> String {
        self.inner.solution().to_string()
    }

    /// Document ids, optionally only those visible to `role`.
    #[pyo3(signature = (role=None))]
    fn document_ids(&self, role: Option<&str>) -> PyResult<Vec<String>> {
        let docs = match role {
            Some(r) => self.inner.documents_for_role(parse_role(r)?),
            None => self.inner.documents().iter().collect(),
        };
        Ok(docs.into_iter().map(|d| d.doc_id.clone()).collect())
    }

    fn document(&self, py: Python<'_>, doc_id: &str) -> PyResult<Py<PyAny>> {
        let doc = self
            .inner
            .document(doc_id)
            .ok_or_else(|| PyKeyError::new_err(doc_id.to_string()))?;
        to_py(py, doc)
    }

    fn clue_coverage(&self, texts: Vec<String>) -> Vec<String> {
        self.inner.clue_coverage(&texts).into_iter().collect()
    }

    /// Mentions of gazetteer people in `text`.
    #[pyo3(signature = (text, detect_new_names=true, resolve_partial_names=true))]
    fn extract_mentions(
        &self,
        py: Python<'_>,
        text: &str,
        detect_new_names: bool,
        resolve_partial_names: bool,
    ) -> PyResult<Py<PyAny>> {
        let registry = EntityRegistry::from_gazetteer(self.inner.gazetteer());
        let config = ExtractorConfig {
            detect_new_names,
            resolve_partial_names,
        };
        to_py(py, &extract_mentions(text, &registry, config))
    }

    #[pyo3(signature = (threshold=DEFAULT_THRESHOLD))]
    fn connection_graph(&self, py: Python<'_>, threshold: f64) -> PyResult<Py<PyAny>> {
        to_py(
            py,
            &corpus_graph(&self.inner, threshold).map_err(value_error)?,
        )
    }
}

/// An in-memory session: the same sequencing and validation as the server,
/// without persistence or connections.
#[pyclass(name = "Session")]
struct PySession {
    core: Mutex<SessionCore>,
}

#[pymethods]
impl PySession {
    #[new]
    #[pyo3(signature = (corpus, session_id, condition="translucence"))]
    fn new(corpus: &PyCorpus, session_id: &str, condition: &str) -> PyResult<Self> {
        let condition: Condition = condition.parse().map_err(value_error)?;
        let header = SessionHeader::new(session_id, corpus.inner.id(), condition);
        let core = SessionCore::new(header, corpus.inner.clone(), Box::new(NullSink))
            .map_err(value_error)?;
        Ok(Self {
            core: Mutex::new(core),
        })
    }

    /// Submits one operation and returns the message the server would send
    /// back: `accept`, `reject` or `duplicate`.
    fn submit(&mut self, py: Python<'_>, op: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
        let op: Operation = from_py(py, op)?;
        let reply = match self
            .core
            .get_mut()
            .unwrap()
            .submit(op)
            .map_err(value_error)?
        {
            Submitted::Accepted(a) => ServerMessage::from(a),
            Submitted::Rejected(r) => ServerMessage::Reject {
                op_id: r.op_id,
                reason: r.reason,
            },
            Submitted::Duplicate { op_id, verdict } => ServerMessage::Duplicate { op_id, verdict },
        };
        to_py(py, &reply)
    }

    #[getter]
    fn seq(&self) -> u64 {
        self.core.lock().unwrap().applied_seq()
    }

    #[getter]
    fn hash(&self) -> String {
        self.core.lock().unwrap().state().hash()
    }

    fn snapshot(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.core.lock().unwrap().snapshot())
    }

    fn visualization(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(py, &self.core.lock().unwrap().visualization())
    }

    /// Attention spread over named avatars; `None` in standard sessions.
    fn attention(&self, py: Python<'_>) -> PyResult<Py<PyAny>> {
        to_py(
            py,
            &self
                .core
                .lock()
                .unwrap()
                .visualization()
                .map(attention_distribution),
        )
    }

    /// The session log as JSON lines, header first.
    fn export_log(&self) -> String {
        self.core.lock().unwrap().log().to_text()
    }
}

#[pyfunction]
#[pyo3(signature = (total, cap=10))]
fn shade(total: u32, cap: u32) -> PyResult<f64> {
    shade_function(total, cap).map_err(value_error)
}

#[pyfunction]
fn attention(py: Python<'_>, visualization: &Bound<'_, PyAny>) -> PyResult<Py<PyAny>> {
    let viz: VisualizationState = from_py(py, visualization)?;
    to_py(py, &attention_distribution(&viz))
}

/// Replays an exported log against `corpus`; returns the report and, when
/// asked, the per-operation trajectory.
#[pyfunction]
#[pyo3(signature = (log_text, corpus, trajectory=false, sample_every=1))]
fn replay(
    py: Python<'_>,
    log_text: &str,
    corpus: &PyCorpus,
    trajectory: bool,
    sample_every: u64,
) -> PyResult<Py<PyAny>> {
    if sample_every == 0 {
        return Err(PyValueError::new_err("sample_every must be at least 1"));
    }
    let log = SessionLog::parse(log_text).map_err(value_error)?;
    let analysis = analyze_log(
        &log,
        &corpus.inner,
        AnalyzeOptions {
            trajectory,
            sample_every,
        },
    )
    .map_err(value_error)?;
    let out = serde_json::json!({
        "report": analysis.report,
        "trajectory": analysis.trajectory,
    });
    to_py(py, &out)
}

#[pymodule]
fn translucent(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCorpus>()?;
    m.add_class::<PySession>()?;
    m.add_function(wrap_pyfunction!(shade, m)?)?;
    m.add_function(wrap_pyfunction!(attention, m)?)?;
    m.add_function(wrap_pyfunction!(replay, m)?)?;
    m.add("PROTOCOL_VERSION", PROTOCOL_VERSION)?;
    Ok(())
}
