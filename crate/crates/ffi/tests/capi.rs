use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use soncluster_ffi::*;

fn last_error() -> String {
    let p = son_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn generate_graph_path_roundtrip() {
    unsafe {
        let spec = CString::new("half_moons:n1=8,n2=8,noise=0.05").unwrap();
        let mut data: *mut SonData = ptr::null_mut();
        assert_eq!(son_generate(spec.as_ptr(), 3, &mut data), SonStatus::Ok);
        assert!(son_last_error().is_null());

        let (mut p, mut n) = (0usize, 0usize);
        assert_eq!(son_data_shape(data, &mut p, &mut n), SonStatus::Ok);
        assert_eq!((p, n), (2, 16));
        let mut truth = vec![0usize; n];
        assert_eq!(son_data_labels(data, truth.as_mut_ptr(), n), SonStatus::Ok);

        let method = CString::new("mst+knn:3").unwrap();
        let weights = CString::new("gaussian").unwrap();
        let mut graph: *mut SonGraph = ptr::null_mut();
        assert_eq!(
            son_graph_build(data, method.as_ptr(), weights.as_ptr(), &mut graph),
            SonStatus::Ok
        );
        let mut m = 0usize;
        assert_eq!(son_graph_num_edges(graph, &mut m), SonStatus::Ok);
        assert!(m >= n - 1);
        let (mut ei, mut ej, mut ew) = (vec![0usize; m], vec![0usize; m], vec![0f64; m]);
        assert_eq!(
            son_graph_edges(graph, ei.as_mut_ptr(), ej.as_mut_ptr(), ew.as_mut_ptr(), m),
            SonStatus::Ok
        );
        assert!(ei.iter().zip(&ej).all(|(i, j)| i < j));
        assert!(ew.iter().all(|&w| w > 0.0 && w <= 1.0));

        let options = son_solver_options_default();
        let mut gmax = 0.0;
        assert_eq!(son_gamma_max(data, graph, &options, &mut gmax), SonStatus::Ok);
        assert!(gmax > 0.0);

        let gammas: Vec<f64> = (0..12).map(|k| gmax * 2f64.powi(k - 11)).collect();
        let mut path: *mut SonPath = ptr::null_mut();
        assert_eq!(
            son_path_compute(data, graph, gammas.as_ptr(), gammas.len(), &options, &mut path),
            SonStatus::Ok
        );
        let mut len = 0usize;
        assert_eq!(son_path_len(path, &mut len), SonStatus::Ok);
        assert_eq!(len, gammas.len());
        let mut k_last = 0usize;
        let mut g_last = 0.0;
        assert_eq!(
            son_path_snapshot(path, len - 1, &mut g_last, &mut k_last),
            SonStatus::Ok
        );
        assert_eq!((g_last, k_last), (gmax, 1));
        let mut labels = vec![9usize; n];
        assert_eq!(son_path_labels(path, 0, labels.as_mut_ptr(), n), SonStatus::Ok);
        let mut u = vec![0.0; p * n];
        assert_eq!(son_path_centroids(path, 0, u.as_mut_ptr(), u.len()), SonStatus::Ok);

        let mut chosen = usize::MAX;
        assert_eq!(son_path_select_ebic(path, 0.5, &mut chosen), SonStatus::Ok);
        assert!(chosen < len);

        let mut newick: *mut std::ffi::c_char = ptr::null_mut();
        assert_eq!(son_path_newick(path, &mut newick), SonStatus::Ok);
        let text = CStr::from_ptr(newick).to_str().unwrap().to_owned();
        son_string_free(newick);
        assert!(text.ends_with(';'));

        son_path_free(path);
        son_graph_free(graph);
        son_data_free(data);
    }
}

#[test]
fn solve_matches_data_at_zero_gamma() {
    unsafe {
        let x = [0.0, 1.0, 4.0, 2.0, 7.0, 7.5];
        let mut data: *mut SonData = ptr::null_mut();
        assert_eq!(son_data_new(x.as_ptr(), ptr::null(), 2, 3, &mut data), SonStatus::Ok);
        let full = CString::new("full").unwrap();
        let uniform = CString::new("uniform").unwrap();
        let mut graph: *mut SonGraph = ptr::null_mut();
        assert_eq!(
            son_graph_build(data, full.as_ptr(), uniform.as_ptr(), &mut graph),
            SonStatus::Ok
        );
        let mut options = son_solver_options_default();
        options.method = SonMethod::Admm;
        options.tolerance = 1e-12;
        let mut u = [f64::NAN; 6];
        let mut iterations = 0usize;
        assert_eq!(
            son_solve(data, graph, 0.0, &options, u.as_mut_ptr(), 6, &mut iterations),
            SonStatus::Ok
        );
        for (a, b) in u.iter().zip(&x) {
            assert!((a - b).abs() < 1e-10);
        }
        son_graph_free(graph);
        son_data_free(data);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut data: *mut SonData = ptr::null_mut();
        assert_eq!(
            son_data_new(ptr::null(), ptr::null(), 2, 2, &mut data),
            SonStatus::NullPointer
        );
        assert!(data.is_null());
        assert!(last_error().contains("values"));

        let bad = CString::new("nope").unwrap();
        assert_eq!(son_generate(bad.as_ptr(), 0, &mut data), SonStatus::InvalidArgument);
        assert!(last_error().contains("nope"));

        let x = [1.0, f64::NAN];
        assert_eq!(
            son_data_new(x.as_ptr(), ptr::null(), 1, 2, &mut data),
            SonStatus::InvalidData
        );

        let x = [1.0, 2.0, 3.0];
        assert_eq!(son_data_new(x.as_ptr(), ptr::null(), 1, 3, &mut data), SonStatus::Ok);
        let mut small = [0.0; 2];
        assert_eq!(son_data_values(data, small.as_mut_ptr(), 2), SonStatus::BufferTooSmall);
        let mut labels = [0usize; 3];
        assert_eq!(
            son_data_labels(data, labels.as_mut_ptr(), 3),
            SonStatus::InvalidArgument
        );
        son_data_free(data);

        let mut ari = 0.0;
        assert_eq!(
            son_adjusted_rand_index(labels.as_ptr(), labels.as_ptr(), 2, &mut ari),
            SonStatus::Ok
        );
        assert_eq!(ari, 1.0);
        son_data_free(ptr::null_mut());
    }
}

#[test]
fn masked_data_keeps_mask() {
    unsafe {
        let x = [0.0, 0.0, 1.0, 9.0, 5.0, 5.0];
        let mask = [1u8, 1, 1, 0, 1, 1];
        let mut data: *mut SonData = ptr::null_mut();
        assert_eq!(son_data_new(x.as_ptr(), mask.as_ptr(), 2, 3, &mut data), SonStatus::Ok);
        let mut back = [0.0; 6];
        assert_eq!(son_data_values(data, back.as_mut_ptr(), 6), SonStatus::Ok);
        assert_eq!(back, x);
        son_data_free(data);
    }
}

#[test]
fn header_is_current_and_parses_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/soncluster.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "son_last_error",
        "son_data_new",
        "son_generate",
        "son_graph_build",
        "son_path_compute",
        "son_path_newick",
        "son_string_free",
        "son_adjusted_rand_index",
        "typedef struct SonPath SonPath;",
    ] {
        assert!(text.contains(name), "header lacks {name}");
    }
    let Ok(out) = Command::new("cc")
        .args(["-fsyntax-only", "-x", "c"])
        .arg(&header)
        .output()
    else {
        eprintln!("no C compiler on PATH; skipping syntax check");
        return;
    };
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn version_is_static() {
    let v = unsafe { CStr::from_ptr(son_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
