//! C ABI for soncluster.
//!
//! Objects cross the boundary as opaque handles created by `son_*_new`/`son_*_build`
//! functions and released by the matching `son_*_free`. Every function returns a
//! [`SonStatus`]; on failure [`son_last_error`] describes the error for the calling
//! thread. Matrices are column-major `p x n` with one column per observation.
//! Panics are caught at the boundary and reported as [`SonStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use soncluster::generate::{generate, GeneratorSpec};
use soncluster::graph::{GraphMethod, GraphSpec, WeightKind};
use soncluster::path::{compute_path, gamma_max, ClusterPath, PathMode, PathOptions};
use soncluster::selection::{adjusted_rand_index, ebic_select, EbicOptions};
use soncluster::{DataMatrix, Error, SolverMethod, WeightGraph};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SonStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidData = 3,
    Shape = 4,
    Numerical = 5,
    Parse = 6,
    Io = 7,
    BufferTooSmall = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SonMethod {
    Ama = 0,
    AmaAccelerated = 1,
    Admm = 2,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SonPathMode {
    Exact = 0,
    Strict = 1,
    Carp = 2,
}

/// Solver settings passed by value.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SonSolverOptions {
    pub method: SonMethod,
    /// Duality-gap and residual tolerance.
    pub tolerance: f64,
    pub max_iterations: usize,
    /// Relative fusion threshold on centroid distances.
    pub fusion_tolerance: f64,
    pub path_mode: SonPathMode,
}

/// Observations, with the generating labels when produced by [`son_generate`].
pub struct SonData {
    data: DataMatrix,
    labels: Option<Vec<usize>>,
}

pub struct SonGraph {
    graph: WeightGraph,
}

pub struct SonPath {
    path: ClusterPath,
    x: DMatrix<f64>,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(SonStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidArgument(_) => SonStatus::InvalidArgument,
            Error::InvalidData(_) | Error::MmViolation { .. } | Error::NonMonotoneFusion { .. } => {
                SonStatus::InvalidData
            }
            Error::Shape(_) => SonStatus::Shape,
            Error::DualInfeasible { .. }
            | Error::NumericalFailure { .. }
            | Error::Factorization { .. }
            | Error::PathTruncated { .. } => SonStatus::Numerical,
            Error::Parse { .. } => SonStatus::Parse,
            Error::Io(_) | Error::Json(_) => SonStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

type FfiResult<T = ()> = Result<T, Failure>;

fn set_last_error(msg: Option<String>) {
    let c = msg.map(|m| CString::new(m.replace('\0', " ")).expect("NUL bytes replaced"));
    LAST_ERROR.with(|slot| *slot.borrow_mut() = c);
}

fn guard(f: impl FnOnce() -> FfiResult) -> SonStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_last_error(None);
            SonStatus::Ok
        }
        Ok(Err(Failure(status, msg))) => {
            set_last_error(Some(msg));
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_last_error(Some(format!("panic: {msg}")));
            SonStatus::Panic
        }
    }
}

fn null(what: &str) -> Failure {
    Failure(SonStatus::NullPointer, format!("{what} is null"))
}

unsafe fn as_ref<'a, T>(p: *const T, what: &str) -> FfiResult<&'a T> {
    p.as_ref().ok_or_else(|| null(what))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure(SonStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn slice_arg<'a, T>(p: *const T, len: usize, what: &str) -> FfiResult<&'a [T]> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn out_slice<'a, T>(p: *mut T, capacity: usize, needed: usize, what: &str) -> FfiResult<&'a mut [T]> {
    if capacity < needed {
        return Err(Failure(
            SonStatus::BufferTooSmall,
            format!("{what} holds {capacity} entries, {needed} needed"),
        ));
    }
    if needed == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, needed))
}

unsafe fn write_out<T>(p: *mut T, value: T, what: &str) -> FfiResult {
    if p.is_null() {
        return Err(null(what));
    }
    p.write(value);
    Ok(())
}

fn solver_config(o: &SonSolverOptions) -> soncluster::SolverConfig {
    let method = match o.method {
        SonMethod::Ama => SolverMethod::Ama,
        SonMethod::AmaAccelerated => SolverMethod::AmaAccelerated,
        SonMethod::Admm => SolverMethod::Admm,
    };
    soncluster::SolverConfig::new(method)
        .with_tolerance(o.tolerance)
        .with_max_iterations(o.max_iterations)
}

fn path_options(o: &SonSolverOptions) -> PathOptions {
    PathOptions {
        mode: match o.path_mode {
            SonPathMode::Exact => PathMode::Exact,
            SonPathMode::Strict => PathMode::Strict,
            SonPathMode::Carp => PathMode::Carp,
        },
        solver: solver_config(o),
        fusion_tolerance: o.fusion_tolerance,
    }
}

/// Message for the last failed call on this thread, or NULL after a successful one.
/// The pointer stays valid until the next `son_*` call on the same thread.
#[no_mangle]
pub extern "C" fn son_last_error() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn son_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn son_solver_options_default() -> SonSolverOptions {
    let d = PathOptions::default();
    SonSolverOptions {
        method: SonMethod::Ama,
        tolerance: d.solver.gap_tolerance,
        max_iterations: d.solver.max_iterations,
        fusion_tolerance: d.fusion_tolerance,
        path_mode: SonPathMode::Exact,
    }
}

/// Copies a `p x n` column-major matrix. `mask` may be NULL (all observed);
/// otherwise a nonzero byte marks an observed entry.
///
/// # Safety
/// `values` must point to `p * n` doubles and `mask`, when not NULL, to `p * n` bytes.
#[no_mangle]
pub unsafe extern "C" fn son_data_new(
    values: *const f64,
    mask: *const u8,
    p: usize,
    n: usize,
    out: *mut *mut SonData,
) -> SonStatus {
    guard(|| {
        let len = p
            .checked_mul(n)
            .ok_or_else(|| Failure(SonStatus::InvalidArgument, "p * n overflows".into()))?;
        let v = slice_arg(values, len, "values")?;
        let m = if mask.is_null() {
            None
        } else {
            let m = slice_arg(mask, len, "mask")?;
            Some(DMatrix::from_iterator(p, n, m.iter().map(|&b| b != 0)))
        };
        let data = DataMatrix::with_mask(DMatrix::from_column_slice(p, n, v), m)?;
        let handle = Box::into_raw(Box::new(SonData { data, labels: None }));
        write_out(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// Synthetic data from a generator string such as `"half_moons:n1=20,n2=20"`.
///
/// # Safety
/// `spec` must be a NUL-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn son_generate(spec: *const c_char, seed: u64, out: *mut *mut SonData) -> SonStatus {
    guard(|| {
        let spec: GeneratorSpec = str_arg(spec, "spec")?.parse()?;
        let g = generate(&spec, seed)?;
        let handle = Box::into_raw(Box::new(SonData {
            data: g.data,
            labels: Some(g.labels),
        }));
        write_out(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// # Safety
/// `data` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn son_data_free(data: *mut SonData) {
    if !data.is_null() {
        drop(Box::from_raw(data));
    }
}

/// # Safety
/// `data` must be a live handle; `p` and `n` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn son_data_shape(data: *const SonData, p: *mut usize, n: *mut usize) -> SonStatus {
    guard(|| {
        let d = as_ref(data, "data")?;
        write_out(p, d.data.dim(), "p")?;
        write_out(n, d.data.len(), "n")
    })
}

/// Copies the `p * n` values (column-major) into `out`.
///
/// # Safety
/// `data` must be a live handle and `out` point to `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn son_data_values(data: *const SonData, out: *mut f64, capacity: usize) -> SonStatus {
    guard(|| {
        let d = as_ref(data, "data")?;
        let v = d.data.values();
        out_slice(out, capacity, v.len(), "out")?.copy_from_slice(v.as_slice());
        Ok(())
    })
}

/// Copies the `n` generating labels. Fails for data not made by [`son_generate`].
///
/// # Safety
/// `data` must be a live handle and `out` point to `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn son_data_labels(data: *const SonData, out: *mut usize, capacity: usize) -> SonStatus {
    guard(|| {
        let d = as_ref(data, "data")?;
        let labels = d
            .labels
            .as_ref()
            .ok_or_else(|| Failure(SonStatus::InvalidArgument, "data has no generating labels".into()))?;
        out_slice(out, capacity, labels.len(), "out")?.copy_from_slice(labels);
        Ok(())
    })
}

/// Builds a weight graph, e.g. method `"mst+knn:3"` with weights `"gaussian"`.
///
/// # Safety
/// `data` must be a live handle, `method` and `weights` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn son_graph_build(
    data: *const SonData,
    method: *const c_char,
    weights: *const c_char,
    out: *mut *mut SonGraph,
) -> SonStatus {
    guard(|| {
        let d = as_ref(data, "data")?;
        let method: GraphMethod = str_arg(method, "method")?.parse()?;
        let weights: WeightKind = str_arg(weights, "weights")?.parse()?;
        let complete = match d.data.mask() {
            Some(_) => DataMatrix::new(d.data.mean_imputed())?,
            None => d.data.clone(),
        };
        let built = GraphSpec::new(method, weights).build(&complete)?;
        let handle = Box::into_raw(Box::new(SonGraph { graph: built.graph }));
        write_out(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// # Safety
/// `graph` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn son_graph_free(graph: *mut SonGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// # Safety
/// `graph` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn son_graph_num_edges(graph: *const SonGraph, out: *mut usize) -> SonStatus {
    guard(|| write_out(out, as_ref(graph, "graph")?.graph.num_edges(), "out"))
}

/// Copies edge endpoints (`i < j`) and weights; each buffer holds `capacity` entries.
///
/// # Safety
/// `graph` must be a live handle and each buffer point to `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn son_graph_edges(
    graph: *const SonGraph,
    i: *mut usize,
    j: *mut usize,
    w: *mut f64,
    capacity: usize,
) -> SonStatus {
    guard(|| {
        let edges = as_ref(graph, "graph")?.graph.edges();
        let (i, j, w) = (
            out_slice(i, capacity, edges.len(), "i")?,
            out_slice(j, capacity, edges.len(), "j")?,
            out_slice(w, capacity, edges.len(), "w")?,
        );
        for (k, e) in edges.iter().enumerate() {
            i[k] = e.i;
            j[k] = e.j;
            w[k] = e.w;
        }
        Ok(())
    })
}

/// Smallest `gamma` (within a factor 2) fusing every connected component.
///
/// # Safety
/// `data` and `graph` must be live handles, `options` and `out` valid pointers.
#[no_mangle]
pub unsafe extern "C" fn son_gamma_max(
    data: *const SonData,
    graph: *const SonGraph,
    options: *const SonSolverOptions,
    out: *mut f64,
) -> SonStatus {
    guard(|| {
        let d = as_ref(data, "data")?;
        let g = as_ref(graph, "graph")?;
        let o = as_ref(options, "options")?;
        let problem = soncluster::ClusteringProblem::new(d.data.clone(), g.graph.clone(), 0.0)?;
        write_out(out, gamma_max(&problem, &path_options(o))?.value, "out")
    })
}

/// Solves at one `gamma`, writing the `p * n` centroids into `u`.
///
/// # Safety
/// Handles must be live; `u` must point to `capacity` doubles; `iterations` may be NULL.
#[no_mangle]
pub unsafe extern "C" fn son_solve(
    data: *const SonData,
    graph: *const SonGraph,
    gamma: f64,
    options: *const SonSolverOptions,
    u: *mut f64,
    capacity: usize,
    iterations: *mut usize,
) -> SonStatus {
    guard(|| {
        let d = as_ref(data, "data")?;
        let g = as_ref(graph, "graph")?;
        let o = as_ref(options, "options")?;
        let problem = soncluster::ClusteringProblem::new(d.data.clone(), g.graph.clone(), gamma)?;
        let state = soncluster::solver::solve(&problem, &solver_config(o), None)?;
        out_slice(u, capacity, state.u.len(), "u")?.copy_from_slice(state.u.as_slice());
        if !iterations.is_null() {
            iterations.write(state.iterations);
        }
        Ok(())
    })
}

/// Solution path over `count` strictly increasing `gammas`.
///
/// # Safety
/// Handles must be live, `gammas` must point to `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn son_path_compute(
    data: *const SonData,
    graph: *const SonGraph,
    gammas: *const f64,
    count: usize,
    options: *const SonSolverOptions,
    out: *mut *mut SonPath,
) -> SonStatus {
    guard(|| {
        let d = as_ref(data, "data")?;
        let g = as_ref(graph, "graph")?;
        let o = as_ref(options, "options")?;
        let grid = slice_arg(gammas, count, "gammas")?;
        let problem = soncluster::ClusteringProblem::new(d.data.clone(), g.graph.clone(), 0.0)?;
        let path = compute_path(&problem, grid, &path_options(o))?.complete()?;
        let handle = Box::into_raw(Box::new(SonPath {
            path,
            x: d.data.values().clone(),
        }));
        write_out(out, handle, "out").inspect_err(|_| drop(Box::from_raw(handle)))
    })
}

/// # Safety
/// `path` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn son_path_free(path: *mut SonPath) {
    if !path.is_null() {
        drop(Box::from_raw(path));
    }
}

/// # Safety
/// `path` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn son_path_len(path: *const SonPath, out: *mut usize) -> SonStatus {
    guard(|| write_out(out, as_ref(path, "path")?.path.len(), "out"))
}

unsafe fn snapshot<'a>(path: *const SonPath, index: usize) -> FfiResult<&'a soncluster::path::Snapshot> {
    let p = as_ref(path, "path")?;
    p.path.snapshots.get(index).ok_or_else(|| {
        Failure(
            SonStatus::InvalidArgument,
            format!("snapshot {index} out of range (path has {})", p.path.len()),
        )
    })
}

/// `gamma` and cluster count of snapshot `index`; either output may be NULL.
///
/// # Safety
/// `path` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn son_path_snapshot(
    path: *const SonPath,
    index: usize,
    gamma: *mut f64,
    clusters: *mut usize,
) -> SonStatus {
    guard(|| {
        let s = snapshot(path, index)?;
        if !gamma.is_null() {
            gamma.write(s.gamma);
        }
        if !clusters.is_null() {
            clusters.write(s.num_clusters());
        }
        Ok(())
    })
}

/// Cluster label of each of the `n` observations at snapshot `index`.
///
/// # Safety
/// `path` must be a live handle and `out` point to `capacity` entries.
#[no_mangle]
pub unsafe extern "C" fn son_path_labels(
    path: *const SonPath,
    index: usize,
    out: *mut usize,
    capacity: usize,
) -> SonStatus {
    guard(|| {
        let labels = snapshot(path, index)?.partition.labels();
        out_slice(out, capacity, labels.len(), "out")?.copy_from_slice(labels);
        Ok(())
    })
}

/// Centroids (`p * n`, column-major) at snapshot `index`.
///
/// # Safety
/// `path` must be a live handle and `out` point to `capacity` doubles.
#[no_mangle]
pub unsafe extern "C" fn son_path_centroids(
    path: *const SonPath,
    index: usize,
    out: *mut f64,
    capacity: usize,
) -> SonStatus {
    guard(|| {
        let u = &snapshot(path, index)?.u;
        out_slice(out, capacity, u.len(), "out")?.copy_from_slice(u.as_slice());
        Ok(())
    })
}

/// Dendrogram of the path in Newick format; release with [`son_string_free`].
///
/// # Safety
/// `path` must be a live handle and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn son_path_newick(path: *const SonPath, out: *mut *mut c_char) -> SonStatus {
    guard(|| {
        let p = as_ref(path, "path")?;
        let text = p.path.dendrogram()?.to_newick(None);
        let c = CString::new(text).map_err(|_| Failure(SonStatus::InvalidData, "NUL in Newick text".into()))?;
        let raw = c.into_raw();
        write_out(out, raw, "out").inspect_err(|_| drop(CString::from_raw(raw)))
    })
}

/// Index of the snapshot chosen by eBIC with exponent `zeta`.
///
/// # Safety
/// `path` must be a live handle and `chosen` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn son_path_select_ebic(path: *const SonPath, zeta: f64, chosen: *mut usize) -> SonStatus {
    guard(|| {
        let p = as_ref(path, "path")?;
        let options = EbicOptions {
            zeta,
            ..EbicOptions::default()
        };
        write_out(chosen, ebic_select(&p.path, &p.x, &options)?.chosen_index, "chosen")
    })
}

/// # Safety
/// `s` must be NULL or a string returned by this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn son_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Adjusted Rand index between two labelings of `len` items.
///
/// # Safety
/// `a` and `b` must point to `len` entries and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn son_adjusted_rand_index(
    a: *const usize,
    b: *const usize,
    len: usize,
    out: *mut f64,
) -> SonStatus {
    guard(|| {
        let a = slice_arg(a, len, "a")?;
        let b = slice_arg(b, len, "b")?;
        write_out(out, adjusted_rand_index(a, b)?, "out")
    })
}
