use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use elemsketch_ffi::*;

fn dense(rows: usize, cols: usize, data: &[f64]) -> *mut EsMatrix {
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { es_matrix_dense_new(rows, cols, data.as_ptr(), &mut m) }, EsStatus::Ok);
    m
}

fn last_error() -> String {
    let p = es_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn dense_round_trip_and_shape() {
    let data = [1.0, 0.0, 2.0, 0.0, 3.0, 4.0];
    let m = dense(2, 3, &data);
    let (mut r, mut c, mut nnz) = (0, 0, 0);
    assert_eq!(unsafe { es_matrix_shape(m, &mut r, &mut c, &mut nnz) }, EsStatus::Ok);
    assert_eq!((r, c, nnz), (2, 3, 4));
    let mut buf = [0.0; 6];
    assert_eq!(unsafe { es_matrix_to_dense(m, buf.as_mut_ptr(), 6) }, EsStatus::Ok);
    assert_eq!(buf, data);
    assert_eq!(unsafe { es_matrix_to_dense(m, buf.as_mut_ptr(), 5) }, EsStatus::BufferTooSmall);
    unsafe { es_matrix_free(m) };
}

#[test]
fn sparse_constructor_rejects_duplicates() {
    let (ri, ci, v) = ([0usize, 0], [1usize, 1], [1.0, 2.0]);
    let mut m = ptr::null_mut();
    let st = unsafe { es_matrix_sparse_new(2, 2, 2, ri.as_ptr(), ci.as_ptr(), v.as_ptr(), &mut m) };
    assert_eq!(st, EsStatus::InvalidParameter);
    assert!(m.is_null());
    assert!(last_error().contains("duplicate"));
}

#[test]
fn null_and_parameter_errors() {
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { es_matrix_center(ptr::null(), &mut out) }, EsStatus::NullPointer);
    let m = dense(1, 2, &[1.0, 2.0]);
    let mut alpha = 0.0;
    assert_eq!(unsafe { es_optimize_alpha(m, -1.0, &mut alpha, ptr::null_mut()) }, EsStatus::InvalidParameter);
    assert!(last_error().contains("eps"));
    assert_eq!(unsafe { es_sketch_hybrid(m, 2.0, 10, 0, &mut out) }, EsStatus::InvalidParameter);
    assert_eq!(unsafe { es_optimize_alpha(m, 0.5, &mut alpha, ptr::null_mut()) }, EsStatus::Ok);
    assert!(es_last_error_message().is_null());
    unsafe { es_matrix_free(m) };
    unsafe { es_matrix_free(ptr::null_mut()) };
}

#[test]
fn hand_traced_values() {
    // diag(3, 4): hybrid at alpha = 1 has p = (3/7, 4/7).
    let m = dense(2, 2, &[3.0, 0.0, 0.0, 4.0]);
    let mut sk = ptr::null_mut();
    assert_eq!(unsafe { es_sketch_hybrid(m, 1.0, 1000, 7, &mut sk) }, EsStatus::Ok);
    let mut buf = [0.0; 4];
    unsafe { es_matrix_to_dense(sk, buf.as_mut_ptr(), 4) };
    // Every hit adds 7/1000 to either diagonal cell, so the diagonal sums to 7.
    assert!((buf[0] + buf[3] - 7.0).abs() < 1e-9);
    assert_eq!((buf[1], buf[2]), (0.0, 0.0));

    let mut t = ptr::null_mut();
    let mut delta = 0.0;
    assert_eq!(unsafe { es_sketch_threshold(m, 0.5, &mut delta, &mut t) }, EsStatus::Ok);
    assert_eq!(delta, 3.0);

    let zero = dense(2, 2, &[3.0, 0.0, 0.0, 0.0]);
    let (mut op, mut gram) = (0.0, 0.0);
    assert_eq!(unsafe { es_spectral_deviation(m, zero, &mut op, &mut gram) }, EsStatus::Ok);
    assert!((op - 4.0).abs() < 1e-9 && (gram - 16.0).abs() < 1e-9);

    let mut v = [0.0; 2];
    assert_eq!(unsafe { es_sparse_pca(m, EsSpcaMethod::BruteForce, 1, 1, 0, v.as_mut_ptr(), 2) }, EsStatus::Ok);
    assert_eq!(v[0], 0.0);
    assert!((v[1].abs() - 1.0).abs() < 1e-12);
    let mut f = 0.0;
    assert_eq!(unsafe { es_variance(m, v.as_ptr(), 1, &mut f) }, EsStatus::Ok);
    assert!((f - 16.0).abs() < 1e-9);
    unsafe {
        es_matrix_free(m);
        es_matrix_free(sk);
        es_matrix_free(t);
        es_matrix_free(zero);
    }
}

#[test]
fn load_from_file() {
    let dir = std::env::temp_dir().join(format!("es-ffi-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("a.mtx");
    std::fs::write(&path, "%%MatrixMarket matrix coordinate real general\n2 2 2\n1 1 3\n2 2 4\n").unwrap();
    let c = CString::new(path.to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(unsafe { es_matrix_load(c.as_ptr(), &mut m) }, EsStatus::Ok);
    let mut nnz = 0;
    unsafe { es_matrix_shape(m, ptr::null_mut(), ptr::null_mut(), &mut nnz) };
    assert_eq!(nnz, 2);
    unsafe { es_matrix_free(m) };
    let missing = CString::new(dir.join("nope.mtx").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { es_matrix_load(missing.as_ptr(), &mut m) }, EsStatus::Io);
    std::fs::remove_dir_all(dir).ok();
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/elemsketch.h")).unwrap();
    let src = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/src/lib.rs")).unwrap();
    let exports: Vec<&str> = src
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 15);
    for name in exports {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    assert!(header.contains("typedef struct EsMatrix EsMatrix;"));
}

/// Compiles and runs a C program against the header and static library.
#[test]
fn c_program_links_and_runs() {
    let deps = std::env::current_exe().unwrap().parent().unwrap().to_path_buf();
    let profile_dir = deps.parent().unwrap();
    let lib = profile_dir.join("libelemsketch_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: no C compiler or static library at {}", lib.display());
        return;
    }
    let dir = std::env::temp_dir().join(format!("es-ffi-c-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let src = dir.join("main.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include "elemsketch.h"
int main(void) {
    double data[4] = {3.0, 0.0, 0.0, 4.0};
    EsMatrix *m = NULL;
    if (es_matrix_dense_new(2, 2, data, &m) != ES_STATUS_OK) return 1;
    double alpha = 0.0;
    if (es_optimize_alpha(m, 0.5, &alpha, NULL) != ES_STATUS_OK) return 2;
    EsMatrix *bad = NULL;
    if (es_matrix_dense_new(0, 2, data, &bad) == ES_STATUS_OK) return 3;
    if (es_last_error_message() == NULL) return 4;
    double v[2];
    if (es_sparse_pca(m, ES_SPCA_METHOD_ITER_SPARSE, 1, 1, 0, v, 2) != ES_STATUS_OK) return 5;
    printf("%s %.6f %.1f\n", es_version(), alpha, v[1] * v[1]);
    es_matrix_free(m);
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.join("main");
    let include: PathBuf = [env!("CARGO_MANIFEST_DIR"), "include"].iter().collect();
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm"])
        .arg("-o")
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C compile failed");
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "C program exited with {:?}", out.status.code());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.trim_end().ends_with("1.0"), "{stdout}");
    std::fs::remove_dir_all(dir).ok();
}
