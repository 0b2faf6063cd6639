use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use rplab_ffi::*;

fn last_error() -> String {
    let p = rplab_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

#[test]
fn version_matches_the_crate() {
    let v = unsafe { CStr::from_ptr(rplab_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn kernel_lifecycle_and_integrals() {
    unsafe {
        let mut k = ptr::null_mut();
        assert_eq!(rplab_kernel_nearest_neighbor(3, &mut k), RplabStatus::Ok);
        let (mut t, mut finite) = (0.0, false);
        assert_eq!(rplab_transience_integral(k, &mut t, &mut finite), RplabStatus::Ok);
        assert!(finite);
        assert!((t - 1.516386).abs() < 1e-5);
        let mut i_d = 0.0;
        assert_eq!(rplab_mean_field_error_integral(k, &mut i_d), RplabStatus::Ok);
        assert!((i_d - (t - 1.0)).abs() < 1e-8);

        let mut j = ptr::null_mut();
        assert_eq!(rplab_couplings_new(k, 4, &mut j), RplabStatus::Ok);
        assert_eq!(rplab_couplings_volume(j), 64);
        let mut buf = vec![0.0; 64];
        assert_eq!(rplab_couplings_values(j, buf.as_mut_ptr(), 64), RplabStatus::Ok);
        assert!((buf.iter().sum::<f64>() - 1.0).abs() < 1e-15);
        assert_eq!(
            rplab_couplings_values(j, buf.as_mut_ptr(), 10),
            RplabStatus::InvalidArgument
        );
        let mut g = 0.0;
        assert_eq!(rplab_greens_diagonal(j, &mut g), RplabStatus::Ok);
        assert!(g > 1.0 && g < t);
        rplab_couplings_free(j);
        rplab_kernel_free(k);
    }
}

#[test]
fn recurrent_walks_report_divergence() {
    unsafe {
        let mut k = ptr::null_mut();
        assert_eq!(rplab_kernel_nearest_neighbor(2, &mut k), RplabStatus::Ok);
        let (mut t, mut finite) = (0.0, true);
        assert_eq!(rplab_transience_integral(k, &mut t, &mut finite), RplabStatus::Ok);
        assert!(!finite && t.is_nan());
        let mut i_d = 0.0;
        assert_eq!(rplab_mean_field_error_integral(k, &mut i_d), RplabStatus::Divergent);
        rplab_kernel_free(k);
    }
}

#[test]
fn errors_map_to_status_codes() {
    unsafe {
        let mut k = ptr::null_mut();
        assert_eq!(rplab_kernel_yukawa(3, -1.0, &mut k), RplabStatus::InvalidArgument);
        assert!(k.is_null());
        assert!(last_error().contains("mu"), "{}", last_error());
        assert_eq!(rplab_kernel_power_law(0, 1.5, &mut k), RplabStatus::InvalidArgument);
        assert_eq!(
            rplab_kernel_nearest_neighbor(3, ptr::null_mut()),
            RplabStatus::NullPointer
        );
        assert!(last_error().contains("out"));

        assert_eq!(rplab_kernel_nearest_neighbor(2, &mut k), RplabStatus::Ok);
        let mut j = ptr::null_mut();
        assert_eq!(rplab_couplings_new(k, 5, &mut j), RplabStatus::InvalidArgument);
        assert!(j.is_null());
        rplab_kernel_free(k);

        rplab_kernel_free(ptr::null_mut());
        rplab_couplings_free(ptr::null_mut());
        rplab_string_free(ptr::null_mut());
        assert_eq!(rplab_couplings_volume(ptr::null()), 0);
    }
}

#[test]
fn chessboard_entry_points() {
    unsafe {
        let (mut ok, mut margin) = (false, 0.0);
        assert_eq!(
            rplab_peierls_certificate(100.0, 100.0, 12.0, &mut ok, &mut margin),
            RplabStatus::Ok
        );
        assert!(ok && margin > 0.2);
        assert_eq!(
            rplab_peierls_certificate(1.0, 1.0, 12.0, &mut ok, &mut margin),
            RplabStatus::Ok
        );
        assert!(!ok);
        assert_eq!(
            rplab_peierls_certificate(-1.0, 1.0, 12.0, &mut ok, &mut margin),
            RplabStatus::InvalidArgument
        );

        let mut s = ptr::null_mut();
        assert_eq!(
            rplab_peierls_certificate_json(100.0, 100.0, 12.0, &mut s),
            RplabStatus::Ok
        );
        let doc: serde_json::Value = serde_json::from_str(CStr::from_ptr(s).to_str().unwrap()).unwrap();
        assert_eq!(doc["verdict"], "PASS");
        rplab_string_free(s);

        let (mut a, mut b) = (0.0, 0.0);
        assert_eq!(rplab_duality_pt(100.0, 1.0, &mut a), RplabStatus::Ok);
        assert_eq!(rplab_duality_pt(1.0, 100.0, &mut b), RplabStatus::Ok);
        assert_eq!(a + b, 1.0);
    }
}

#[test]
fn cli_runs_in_process() {
    let args: Vec<CString> = ["rplab", "--quiet", "oracle", "--name", "watson"]
        .iter()
        .map(|s| CString::new(*s).unwrap())
        .collect();
    let ptrs: Vec<_> = args.iter().map(|a| a.as_ptr()).collect();
    assert_eq!(unsafe { rplab_cli_run(ptrs.len(), ptrs.as_ptr()) }, 0);
    let bad: Vec<_> = [c"rplab".as_ptr(), c"nonsense".as_ptr()].to_vec();
    assert_eq!(unsafe { rplab_cli_run(bad.len(), bad.as_ptr()) }, 1);
    assert_eq!(unsafe { rplab_cli_run(1, ptr::null()) }, 1);
}

#[test]
fn header_declares_every_entry_point_and_compiles() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let header = std::fs::read_to_string(dir.join("include/rplab.h")).expect("header generated by build.rs");
    for name in [
        "rplab_version",
        "rplab_last_error",
        "rplab_kernel_nearest_neighbor",
        "rplab_kernel_yukawa",
        "rplab_kernel_power_law",
        "rplab_kernel_free",
        "rplab_transience_integral",
        "rplab_mean_field_error_integral",
        "rplab_couplings_new",
        "rplab_couplings_free",
        "rplab_couplings_volume",
        "rplab_couplings_values",
        "rplab_greens_diagonal",
        "rplab_peierls_certificate",
        "rplab_peierls_certificate_json",
        "rplab_string_free",
        "rplab_duality_pt",
        "rplab_cli_run",
    ] {
        assert!(header.contains(&format!("{name}(")), "{name} missing from header");
    }
    // Syntax-check a small C client when a compiler is available.
    let cc = std::env::var("CC").unwrap_or_else(|_| "cc".into());
    let status = Command::new(&cc)
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(dir.join("include"))
        .arg(dir.join("tests/smoke.c"))
        .status();
    match status {
        Ok(s) => assert!(s.success(), "C client failed to compile against the header"),
        Err(_) => eprintln!("no C compiler found; skipped header compile check"),
    }
}
