//! C interface to `tds_qaoa`.
//!
//! Objects cross the boundary as opaque handles created by `tds_*_new`-style
//! functions and released with the matching `tds_*_free`. Every fallible call
//! returns a [`TdsStatus`]; on failure a message for the calling thread is
//! available from [`tds_last_error_message`]. Results are written through out
//! pointers, which are left untouched on failure.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tds_qaoa::harness::{run_on_instance, Instance, PenaltySpec, RunConfig, RunResult, DEFAULT_SHOTS};
use tds_qaoa::{compile_tdp_qubo, qubit_counts, qubit_upper_bound, Error, Graph, QuboModel};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TdsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    /// The graph has an isolated vertex, so no total dominating set exists.
    Infeasible = 3,
    Parse = 4,
    Resource = 5,
    BufferTooSmall = 6,
    Internal = 7,
}

/// Opaque graph handle.
pub struct TdsGraph {
    inner: Graph,
}

/// Opaque compiled QUBO handle.
pub struct TdsQubo {
    inner: QuboModel,
}

/// Opaque handle to the outcome of one optimize-and-measure run.
pub struct TdsRunResult {
    inner: RunResult,
    z_star: CString,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TdsQubitCounts {
    pub q_tdp: usize,
    pub q_dp: usize,
    pub gap: usize,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdsRunConfig {
    pub layers: u32,
    /// Absolute penalty. Zero or negative selects the default of 1.5 per vertex.
    pub penalty: f64,
    pub max_iterations: u32,
    pub shots: u64,
    pub seed: u64,
    pub exact_metrics: bool,
    pub gamma_scale: f64,
    pub beta_scale: f64,
    pub init_jitter: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TdsRunMetrics {
    pub correct_probability: f64,
    pub optimal_probability: f64,
    pub z_star_probability: f64,
    pub final_cost: f64,
    pub z_star_is_tds: bool,
    pub z_star_is_minimal_tds: bool,
    pub evaluations: usize,
    pub n_qubits: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_last_error(msg: &str) {
    let msg = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = msg);
}

fn status_of(err: &Error) -> TdsStatus {
    match err {
        Error::Infeasible { .. } => TdsStatus::Infeasible,
        Error::Parse { .. } => TdsStatus::Parse,
        Error::Resource(_) => TdsStatus::Resource,
        Error::VertexOutOfRange { .. } | Error::SelfLoop(_) | Error::DuplicateEdge(..) | Error::Domain(_) => {
            TdsStatus::InvalidArgument
        }
        Error::Io(_) | Error::Csv(_) | Error::Json(_) => TdsStatus::Internal,
    }
}

/// Runs `f`, turning errors and panics into a status code.
fn guard(f: impl FnOnce() -> Result<(), (TdsStatus, String)>) -> TdsStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TdsStatus::Ok,
        Ok(Err((status, msg))) => {
            set_last_error(&msg);
            status
        }
        Err(_) => {
            set_last_error("internal panic");
            TdsStatus::Internal
        }
    }
}

fn lib_err(err: Error) -> (TdsStatus, String) {
    (status_of(&err), err.to_string())
}

fn null(name: &str) -> (TdsStatus, String) {
    (TdsStatus::NullPointer, format!("{name} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, name: &str) -> Result<&'a T, (TdsStatus, String)> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn write_out<T>(out: *mut T, value: T) -> Result<(), (TdsStatus, String)> {
    if out.is_null() {
        return Err(null("out"));
    }
    out.write(value);
    Ok(())
}

/// Message describing the last failure on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn tds_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Static description of a status code.
#[no_mangle]
pub extern "C" fn tds_status_string(status: TdsStatus) -> *const c_char {
    let s: &'static CStr = match status {
        TdsStatus::Ok => c"ok",
        TdsStatus::NullPointer => c"null pointer",
        TdsStatus::InvalidArgument => c"invalid argument",
        TdsStatus::Infeasible => c"infeasible instance",
        TdsStatus::Parse => c"parse error",
        TdsStatus::Resource => c"resource limit",
        TdsStatus::BufferTooSmall => c"buffer too small",
        TdsStatus::Internal => c"internal error",
    };
    s.as_ptr()
}

/// The built-in 6-vertex instance.
///
/// # Safety
/// `out` must be a valid pointer to writable storage for one handle.
#[no_mangle]
pub unsafe extern "C" fn tds_graph_example(out: *mut *mut TdsGraph) -> TdsStatus {
    guard(|| {
        let g = Box::new(TdsGraph {
            inner: Graph::six_vertex_example(),
        });
        write_out(out, Box::into_raw(g))
    })
}

/// Builds a graph from `n_edges` pairs stored flat in `edges` (`u0 v0 u1 v1 ...`).
///
/// # Safety
/// `edges` must point to `2 * n_edges` readable values (it may be null when
/// `n_edges` is 0); `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tds_graph_new(
    n_vertices: usize,
    edges: *const u32,
    n_edges: usize,
    out: *mut *mut TdsGraph,
) -> TdsStatus {
    guard(|| {
        let flat: &[u32] = if n_edges == 0 {
            &[]
        } else if edges.is_null() {
            return Err(null("edges"));
        } else {
            std::slice::from_raw_parts(edges, 2 * n_edges)
        };
        let pairs = flat.chunks_exact(2).map(|c| (c[0] as usize, c[1] as usize));
        let g = Graph::new(n_vertices, pairs).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(TdsGraph { inner: g })))
    })
}

/// Parses the text graph format (`n m` header, then `m` lines `u v`).
///
/// # Safety
/// `text` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tds_graph_parse(text: *const c_char, out: *mut *mut TdsGraph) -> TdsStatus {
    guard(|| {
        if text.is_null() {
            return Err(null("text"));
        }
        let text = CStr::from_ptr(text)
            .to_str()
            .map_err(|_| (TdsStatus::Parse, "graph text is not UTF-8".to_string()))?;
        let g = tds_qaoa::io::parse_graph(text).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(TdsGraph { inner: g })))
    })
}

/// # Safety
/// `graph` must be null or a handle from this library that is not used again.
#[no_mangle]
pub unsafe extern "C" fn tds_graph_free(graph: *mut TdsGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Vertex count, or 0 for a null handle.
///
/// # Safety
/// `graph` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tds_graph_n_vertices(graph: *const TdsGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.n_vertices())
}

/// Whether `vertices[0..len]` is a total dominating set.
///
/// # Safety
/// `graph` must be live, `vertices` must hold `len` values (or be null when
/// `len` is 0), `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tds_graph_is_total_dominating_set(
    graph: *const TdsGraph,
    vertices: *const usize,
    len: usize,
    out: *mut bool,
) -> TdsStatus {
    guard(|| {
        let g = as_ref(graph, "graph")?;
        let set: &[usize] = if len == 0 {
            &[]
        } else if vertices.is_null() {
            return Err(null("vertices"));
        } else {
            std::slice::from_raw_parts(vertices, len)
        };
        let ok = g.inner.is_total_dominating_set(set).map_err(lib_err)?;
        write_out(out, ok)
    })
}

/// Size of a minimum total dominating set, by exhaustive search.
///
/// # Safety
/// `graph` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tds_graph_min_tds_size(graph: *const TdsGraph, out: *mut usize) -> TdsStatus {
    guard(|| {
        let g = as_ref(graph, "graph")?;
        let min = g.inner.minimum_tds_bruteforce().map_err(lib_err)?;
        write_out(out, min.size)
    })
}

/// # Safety
/// `graph` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tds_qubit_counts(graph: *const TdsGraph, out: *mut TdsQubitCounts) -> TdsStatus {
    guard(|| {
        let g = as_ref(graph, "graph")?;
        let c = qubit_counts(&g.inner);
        write_out(
            out,
            TdsQubitCounts {
                q_tdp: c.q_tdp,
                q_dp: c.q_dp,
                gap: c.gap,
            },
        )
    })
}

/// Upper bound on the total-domination qubit count; requires minimum degree 2.
///
/// # Safety
/// `graph` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tds_qubit_upper_bound(graph: *const TdsGraph, out: *mut f64) -> TdsStatus {
    guard(|| {
        let g = as_ref(graph, "graph")?;
        write_out(out, qubit_upper_bound(&g.inner).map_err(lib_err)?)
    })
}

/// # Safety
/// `graph` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tds_qubo_compile(graph: *const TdsGraph, penalty: f64, out: *mut *mut TdsQubo) -> TdsStatus {
    guard(|| {
        let g = as_ref(graph, "graph")?;
        let model = compile_tdp_qubo(&g.inner, penalty).map_err(lib_err)?;
        write_out(out, Box::into_raw(Box::new(TdsQubo { inner: model })))
    })
}

/// # Safety
/// `model` must be null or a handle from this library that is not used again.
#[no_mangle]
pub unsafe extern "C" fn tds_qubo_free(model: *mut TdsQubo) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Variable count (vertices then slack bits), or 0 for a null handle.
///
/// # Safety
/// `model` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tds_qubo_n_vars(model: *const TdsQubo) -> usize {
    model.as_ref().map_or(0, |m| m.inner.n_vars)
}

/// QUBO value of the assignment `bits[0..len]` (nonzero means 1).
///
/// # Safety
/// `model` must be live, `bits` must hold `len` bytes, `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tds_qubo_evaluate(
    model: *const TdsQubo,
    bits: *const u8,
    len: usize,
    out: *mut f64,
) -> TdsStatus {
    guard(|| {
        let m = as_ref(model, "model")?;
        if bits.is_null() && len > 0 {
            return Err(null("bits"));
        }
        let x: Vec<bool> = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(bits, len).iter().map(|&b| b != 0).collect()
        };
        write_out(out, m.inner.evaluate(&x).map_err(lib_err)?)
    })
}

/// Defaults: 5 layers, default penalty, 500 evaluations, 100000 shots, seed
/// 0, exact metrics, ramp scales 1.0, jitter 0.1.
#[no_mangle]
pub extern "C" fn tds_run_config_default() -> TdsRunConfig {
    let d = RunConfig::default();
    TdsRunConfig {
        layers: d.layers as u32,
        penalty: 0.0,
        max_iterations: d.max_iterations as u32,
        shots: DEFAULT_SHOTS,
        seed: d.seed,
        exact_metrics: d.exact_metrics,
        gamma_scale: d.gamma_scale,
        beta_scale: d.beta_scale,
        init_jitter: d.init_jitter,
    }
}

/// Compiles, optimizes and measures one configuration on `graph`.
///
/// # Safety
/// `graph` and `config` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tds_run(
    graph: *const TdsGraph,
    config: *const TdsRunConfig,
    out: *mut *mut TdsRunResult,
) -> TdsStatus {
    guard(|| {
        let g = as_ref(graph, "graph")?;
        let c = as_ref(config, "config")?;
        let run_config = RunConfig {
            graph_source: "ffi".to_string(),
            layers: c.layers as usize,
            penalty: (c.penalty > 0.0).then_some(PenaltySpec::Absolute(c.penalty)),
            max_iterations: c.max_iterations as usize,
            shots: c.shots,
            seed: c.seed,
            exact_metrics: c.exact_metrics,
            gamma_scale: c.gamma_scale,
            beta_scale: c.beta_scale,
            init_jitter: c.init_jitter,
            ..RunConfig::default()
        };
        let instance = Instance::new(g.inner.clone()).map_err(lib_err)?;
        let outcome = run_on_instance(&instance, &run_config).map_err(lib_err)?;
        let z_star = CString::new(outcome.result.z_star.clone()).map_err(|e| (TdsStatus::Internal, e.to_string()))?;
        let result = TdsRunResult {
            inner: outcome.result,
            z_star,
        };
        write_out(out, Box::into_raw(Box::new(result)))
    })
}

/// # Safety
/// `result` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn tds_run_result_metrics(result: *const TdsRunResult, out: *mut TdsRunMetrics) -> TdsStatus {
    guard(|| {
        let r = &as_ref(result, "result")?.inner;
        write_out(
            out,
            TdsRunMetrics {
                correct_probability: r.correct_probability,
                optimal_probability: r.optimal_probability,
                z_star_probability: r.z_star_probability,
                final_cost: r.final_cost,
                z_star_is_tds: r.z_star_is_tds,
                z_star_is_minimal_tds: r.z_star_is_minimal_tds,
                evaluations: r.trace.evaluations,
                n_qubits: r.n_qubits,
            },
        )
    })
}

/// Most probable vertex bitstring (leftmost character is vertex 0), owned by
/// the result handle and valid until it is freed.
///
/// # Safety
/// `result` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn tds_run_result_z_star(result: *const TdsRunResult) -> *const c_char {
    result.as_ref().map_or(ptr::null(), |r| r.z_star.as_ptr())
}

/// Copies the optimized angles into `gammas` and `betas`, each of capacity
/// `capacity`. `layers_out` receives the layer count even when the buffers
/// are too small.
///
/// # Safety
/// `result` must be live; `gammas` and `betas` must hold `capacity` values;
/// `layers_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tds_run_result_angles(
    result: *const TdsRunResult,
    gammas: *mut f64,
    betas: *mut f64,
    capacity: usize,
    layers_out: *mut usize,
) -> TdsStatus {
    guard(|| {
        let s = &as_ref(result, "result")?.inner.optimized_schedule;
        write_out(layers_out, s.layers())?;
        if capacity < s.layers() {
            return Err((
                TdsStatus::BufferTooSmall,
                format!("need room for {} angles, got {capacity}", s.layers()),
            ));
        }
        if gammas.is_null() || betas.is_null() {
            return Err(null("angle buffer"));
        }
        ptr::copy_nonoverlapping(s.gammas().as_ptr(), gammas, s.layers());
        ptr::copy_nonoverlapping(s.betas().as_ptr(), betas, s.layers());
        Ok(())
    })
}

/// # Safety
/// `result` must be null or a handle from this library that is not used again.
#[no_mangle]
pub unsafe extern "C" fn tds_run_result_free(result: *mut TdsRunResult) {
    if !result.is_null() {
        drop(Box::from_raw(result));
    }
}
