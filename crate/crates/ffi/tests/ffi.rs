use std::ffi::{CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use qsl_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(qsl_last_error_message()) }
        .to_string_lossy()
        .into_owned()
}

const SMALL: &str = r#"{"t_final": 0.004, "eps_list": [0.12], "interface": {"kind": "circle", "r0": 0.5, "delta": 0.15}}"#;

#[test]
fn scalar_functions() {
    let mut x = 0.0;
    unsafe {
        assert_eq!(qsl_surface_tension(3.0, 9.0, 1.0, &mut x), QslStatus::Ok);
        assert!((x - 3f64.sqrt()).abs() < 1e-12);
        assert_eq!(qsl_quasi_distance(1.5, 3.0, 9.0, 1.0, &mut x), QslStatus::Ok);
        assert!((x - 0.5 * 3f64.sqrt()).abs() < 1e-12);
        // Nematic equilibrium s = 3 along e3: (−1, 0, 0, −1, 0) has F = 0.
        let q = [-1.0, 0.0, 0.0, -1.0, 0.0];
        assert_eq!(qsl_bulk_energy(q.as_ptr(), 3.0, 9.0, 1.0, &mut x), QslStatus::Ok);
        assert!(x.abs() < 1e-12);
        assert_eq!(qsl_surface_tension(3.0, 8.0, 1.0, &mut x), QslStatus::Config);
        assert!(!last_error().is_empty());
        assert_eq!(qsl_surface_tension(3.0, 9.0, 1.0, ptr::null_mut()), QslStatus::NullPointer);
        assert_eq!(qsl_bulk_energy(ptr::null(), 3.0, 9.0, 1.0, &mut x), QslStatus::NullPointer);
    }
}

#[test]
fn simulation_lifecycle() {
    let cfg = CString::new(SMALL).unwrap();
    let mut sim = ptr::null_mut();
    unsafe {
        assert_eq!(qsl_sim_new(cfg.as_ptr(), 0.12, &mut sim), QslStatus::Ok, "{}", last_error());
        assert!(!sim.is_null());
        let (mut nx, mut ny) = (0, 0);
        assert_eq!(qsl_sim_grid(sim, &mut nx, &mut ny), QslStatus::Ok);
        assert_eq!((nx, ny), (67, 67));
        let mut d0 = QslDiagnostics::default();
        assert_eq!(qsl_sim_diagnostics(sim, &mut d0), QslStatus::Ok);
        assert_eq!(d0.t, 0.0);
        assert!(d0.e > 0.0 && d0.e_vol >= 0.0);

        let mut taken = 0;
        assert_eq!(qsl_sim_step(sim, 1_000_000, &mut taken), QslStatus::Ok);
        let (mut step, mut total) = (0, 0);
        assert_eq!(qsl_sim_progress(sim, &mut step, &mut total), QslStatus::Ok);
        assert_eq!((taken, step), (total, total));
        assert!((qsl_sim_time(sim) - 0.004).abs() < 1e-12);
        assert_eq!(qsl_sim_step(sim, 5, &mut taken), QslStatus::Ok);
        assert_eq!(taken, 0);

        let mut d1 = QslDiagnostics::default();
        assert_eq!(qsl_sim_diagnostics(sim, &mut d1), QslStatus::Ok);
        assert!(d1.gl_energy < d0.gl_energy);
        assert!(d1.r_measured.is_finite());

        let mut buf = vec![0.0; 5 * nx * ny];
        assert_eq!(qsl_sim_q_field(sim, buf.as_mut_ptr(), buf.len() - 1), QslStatus::BufferTooSmall);
        assert_eq!(qsl_sim_q_field(sim, buf.as_mut_ptr(), buf.len()), QslStatus::Ok);
        // The center cell is nematic with director e3.
        let c = 5 * ((ny / 2) * nx + nx / 2);
        assert!((buf[c] + 1.0).abs() < 1e-2 && (buf[c + 3] + 1.0).abs() < 1e-2, "{:?}", &buf[c..c + 5]);
        qsl_sim_free(sim);
        qsl_sim_free(ptr::null_mut());
        assert!(qsl_sim_time(ptr::null()).is_nan());
    }
}

#[test]
fn bad_configs_report_config_errors() {
    let mut sim = ptr::null_mut();
    let cases = [
        r#"{"interface": {"kind": "circle", "r0": 0.8, "delta": 0.1}}"#,
        r#"{"no_such_field": 1}"#,
        "not json",
    ];
    for c in cases {
        let c = CString::new(c).unwrap();
        unsafe {
            assert_eq!(qsl_sim_new(c.as_ptr(), 0.05, &mut sim), QslStatus::Config);
        }
        assert!(sim.is_null());
        assert!(!last_error().is_empty());
    }
    unsafe {
        assert_eq!(qsl_sim_new(ptr::null(), 0.05, ptr::null_mut()), QslStatus::NullPointer);
        assert_eq!(qsl_sim_new(ptr::null(), 0.2, &mut sim), QslStatus::Config);
    }
}

#[test]
fn header_declares_the_interface_and_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/qsl.h");
    let text = std::fs::read_to_string(&header).unwrap();
    for name in [
        "qsl_sim_new",
        "qsl_sim_step",
        "qsl_sim_diagnostics",
        "qsl_sim_free",
        "qsl_surface_tension",
        "qsl_last_error_message",
        "QSL_STATUS_INVARIANT",
        "typedef struct QslSimulation QslSimulation",
    ] {
        assert!(text.contains(name), "{name} missing from header");
    }
    if let Ok(out) = Command::new("cc").args(["-fsyntax-only", "-xc", "-std=c99"]).arg(&header).output() {
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
}
