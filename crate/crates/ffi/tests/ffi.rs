use std::ffi::{CStr, CString};
use std::ptr;

use memsa_ffi::*;

fn last_error() -> String {
    let p = ms_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn generate(recipe: &str, seed: u64) -> *mut MsMatrix {
    let r = CString::new(recipe).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { ms_matrix_generate(r.as_ptr(), seed, &mut m) },
        MsStatus::Ok
    );
    m
}

#[test]
fn train_diag_ls_to_zero_loss() {
    let m = generate("diag-ls 20", 3);
    let (mut n, mut d, mut nnz) = (0, 0, 0);
    assert_eq!(
        unsafe { ms_matrix_shape(m, &mut n, &mut d, &mut nnz) },
        MsStatus::Ok
    );
    assert_eq!((n, d, nnz), (20, 20, 20));

    let mut cfg = ms_train_config_default();
    cfg.step = 0.125;
    cfg.decay = 1.0;
    cfg.max_epochs = 200;
    cfg.access = MsAccess::RowWise as i32;
    cfg.seed = 9;
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { ms_train(m, &cfg, &mut r) }, MsStatus::Ok);
    let epochs = unsafe { ms_result_epochs(r) };
    assert_eq!(epochs, 201);
    let (mut first, mut last) = (0.0, 0.0);
    unsafe {
        assert_eq!(ms_result_loss(r, 0, &mut first), MsStatus::Ok);
        assert_eq!(ms_result_loss(r, epochs - 1, &mut last), MsStatus::Ok);
    }
    assert!(first > 0.0 && last < 1e-8 * first, "{first} -> {last}");

    let mut buf = vec![0.0; 20];
    let mut written = 0;
    assert_eq!(
        unsafe { ms_result_model(r, buf.as_mut_ptr(), buf.len(), &mut written) },
        MsStatus::Ok
    );
    assert_eq!(written, 20);
    let mut eval = f64::NAN;
    assert_eq!(unsafe { ms_result_eval(r, m, &mut eval) }, MsStatus::Ok);
    assert!((eval - last).abs() <= 1e-12);

    assert_eq!(
        unsafe { ms_result_loss(r, epochs, &mut last) },
        MsStatus::InvalidArgument
    );
    assert!(last_error().contains("out of range"));
    assert_eq!(
        unsafe { ms_result_model(r, buf.as_mut_ptr(), 3, &mut written) },
        MsStatus::InvalidArgument
    );
    unsafe {
        ms_result_free(r);
        ms_matrix_free(m);
    }
}

#[test]
fn triplets_and_choose_access() {
    // Dense 4x2 block: long rows relative to columns.
    let rows = [0usize, 0, 1, 1, 2, 2, 3, 3];
    let cols = [0usize, 1, 0, 1, 0, 1, 0, 1];
    let vals = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0];
    let labels = [1.0, -1.0, 1.0, -1.0];
    let mut m = ptr::null_mut();
    let st = unsafe {
        ms_matrix_from_triplets(
            4,
            2,
            rows.as_ptr(),
            cols.as_ptr(),
            vals.as_ptr(),
            8,
            labels.as_ptr(),
            &mut m,
        )
    };
    assert_eq!(st, MsStatus::Ok);
    let mut a = MsAccess::Auto;
    assert_eq!(
        unsafe { ms_choose_access(m, MsTask::Svm as i32, 0.0, &mut a) },
        MsStatus::Ok
    );
    // Σnᵢ + α·Σnᵢ = 88 against Σnᵢ² + α·d = 36.
    assert_eq!(a, MsAccess::ColWise);
    assert_eq!(
        unsafe { ms_choose_access(m, 99, 0.0, &mut a) },
        MsStatus::InvalidArgument
    );
    unsafe { ms_matrix_free(m) };
}

#[test]
fn errors_are_reported_not_panicked() {
    let mut m = ptr::null_mut();
    let missing = CString::new("/nonexistent/file.svm").unwrap();
    assert_eq!(
        unsafe { ms_matrix_load(missing.as_ptr(), &mut m) },
        MsStatus::Io
    );
    assert!(m.is_null());
    assert!(last_error().contains("/nonexistent/file.svm"));

    assert_eq!(
        unsafe { ms_matrix_load(ptr::null(), &mut m) },
        MsStatus::NullPointer
    );

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.svm");
    std::fs::write(&bad, "1 1:1.0\n1 x:2\n").unwrap();
    let bad = CString::new(bad.to_str().unwrap()).unwrap();
    assert_eq!(
        unsafe { ms_matrix_load(bad.as_ptr(), &mut m) },
        MsStatus::Parse
    );
    assert!(last_error().contains("line 2"), "{}", last_error());

    let m = generate("diag-ls 4", 1);
    let mut cfg = ms_train_config_default();
    cfg.step = 1e6;
    cfg.access = MsAccess::RowWise as i32;
    cfg.decay = 1.0;
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { ms_train(m, &cfg, &mut r) }, MsStatus::Numerical);
    assert!(r.is_null());
    cfg.step = 0.1;
    cfg.model_rep = 7;
    assert_eq!(
        unsafe { ms_train(m, &cfg, &mut r) },
        MsStatus::InvalidArgument
    );
    cfg.model_rep = MsModelRep::Auto as i32;
    cfg.task = MsTask::Qp as i32;
    assert_eq!(
        unsafe { ms_train(m, &cfg, &mut r) },
        MsStatus::InvalidArgument
    );
    unsafe {
        ms_matrix_free(m);
        ms_matrix_free(ptr::null_mut());
        ms_result_free(ptr::null_mut());
        ms_graph_free(ptr::null_mut());
    }
}

#[test]
fn graph_task_from_edges() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.edges");
    std::fs::write(&p, "0 1\n1 2\n2 3\n3 4\n4 0\n").unwrap();
    let p = CString::new(p.to_str().unwrap()).unwrap();
    let mut m = ptr::null_mut();
    assert_eq!(
        unsafe { ms_matrix_from_edges(p.as_ptr(), MsTask::Qp as i32, 0.4, 5, &mut m) },
        MsStatus::Ok
    );
    let mut a = MsAccess::Auto;
    assert_eq!(
        unsafe { ms_choose_access(m, MsTask::Qp as i32, 10.0, &mut a) },
        MsStatus::Ok
    );
    assert_eq!(a, MsAccess::ColToRow);
    let mut cfg = ms_train_config_default();
    cfg.task = MsTask::Qp as i32;
    cfg.step = 1.0;
    cfg.max_epochs = 30;
    let mut r = ptr::null_mut();
    assert_eq!(unsafe { ms_train(m, &cfg, &mut r) }, MsStatus::Ok);
    let mut loss = f64::NAN;
    let last = unsafe { ms_result_epochs(r) } - 1;
    assert_eq!(unsafe { ms_result_loss(r, last, &mut loss) }, MsStatus::Ok);
    assert!(loss.is_finite() && loss >= 0.0);
    // The task must match how the matrix was built.
    cfg.task = MsTask::Ls as i32;
    let mut r2 = ptr::null_mut();
    assert_eq!(
        unsafe { ms_train(m, &cfg, &mut r2) },
        MsStatus::InvalidArgument
    );
    unsafe {
        ms_result_free(r);
        ms_matrix_free(m);
    }
}

#[test]
fn gibbs_marginals_match_enumeration() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("chain.fg");
    // Two binary variables that prefer to agree.
    std::fs::write(&p, "2 1\nfactor 2 0 1 4 1 0 0 1\n").unwrap();
    let p = CString::new(p.to_str().unwrap()).unwrap();
    let mut g = ptr::null_mut();
    assert_eq!(
        unsafe { ms_graph_load(p.as_ptr(), &mut g) },
        MsStatus::Ok,
        "{}",
        last_error()
    );
    let len = unsafe { ms_graph_marginal_len(g) };
    assert_eq!(len, 4);
    let cfg = MsGibbsConfig {
        replication: MsModelRep::PerMachine as i32,
        nodes: 1,
        cores_per_node: 1,
        sweeps: 40_000,
        burn_in: 500,
        seed: 11,
    };
    let mut marg = vec![0.0; len];
    let mut sps = 0.0;
    assert_eq!(
        unsafe { ms_gibbs_run(g, &cfg, marg.as_mut_ptr(), len, &mut sps) },
        MsStatus::Ok
    );
    // By symmetry every marginal is 1/2.
    for p in &marg {
        assert!((p - 0.5).abs() < 0.02, "{marg:?}");
    }
    assert!(sps > 0.0);
    assert_eq!(
        unsafe { ms_gibbs_run(g, &cfg, marg.as_mut_ptr(), 2, ptr::null_mut()) },
        MsStatus::InvalidArgument
    );
    unsafe { ms_graph_free(g) };
}

#[test]
fn header_declares_every_export() {
    let h =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/memsa.h")).unwrap();
    for f in [
        "ms_last_error",
        "ms_matrix_load",
        "ms_matrix_generate",
        "ms_matrix_from_triplets",
        "ms_matrix_from_edges",
        "ms_matrix_shape",
        "ms_matrix_free",
        "ms_choose_access",
        "ms_train_config_default",
        "ms_train",
        "ms_result_epochs",
        "ms_result_loss",
        "ms_result_model",
        "ms_result_eval",
        "ms_result_free",
        "ms_graph_load",
        "ms_graph_marginal_len",
        "ms_gibbs_run",
        "ms_graph_free",
    ] {
        assert!(h.contains(&format!("{f}(")), "header lacks {f}");
    }
    assert!(h.contains("typedef struct MsMatrix MsMatrix;"));
}

/// Compile a C program against the generated header and the static library.
/// Skipped when no C compiler is installed.
#[test]
fn c_program_links_and_runs() {
    use std::process::Command;
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(cc.status.success());
    let manifest = std::path::Path::new(env!("CARGO_MANIFEST_DIR"));
    // Test binaries live in <target>/<profile>/deps.
    let profile_dir = std::env::current_exe()
        .unwrap()
        .parent()
        .unwrap()
        .parent()
        .unwrap()
        .to_path_buf();
    let lib = profile_dir.join("libmemsa_ffi.a");
    if !lib.exists() {
        eprintln!("{} not built; skipping", lib.display());
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let out = Command::new("cc")
        .arg(manifest.join("tests/c/smoke.c"))
        .arg("-I")
        .arg(manifest.join("include"))
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}", run.status.code());
    assert_eq!(String::from_utf8_lossy(&run.stdout), "ok 101\n");
}
