use std::ffi::{c_char, CStr, CString};
use std::path::Path;
use std::process::Command;
use std::ptr;

use bsflow_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as c_char; 512];
    unsafe { bsflow_last_error(buf.as_mut_ptr(), buf.len()) };
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn relax(scheme: BsflowScheme) -> *mut BsflowSim {
    let name = CString::new("relax2d").unwrap();
    let mut sim = ptr::null_mut();
    assert_eq!(unsafe { bsflow_sim_from_preset(name.as_ptr(), scheme, &mut sim) }, BsflowStatus::Ok);
    assert!(!sim.is_null());
    sim
}

#[test]
fn preset_lifecycle() {
    let sim = relax(BsflowScheme::Bgn);
    unsafe {
        assert_eq!(bsflow_sim_step(sim, 3), BsflowStatus::Ok);
        let (mut t, mut m) = (0.0, 0);
        assert_eq!(bsflow_sim_time(sim, &mut t, &mut m), BsflowStatus::Ok);
        assert_eq!(m, 3);
        assert!((t - 3e-3).abs() < 1e-15);

        let mut d = BsflowDiagnostics::default();
        assert_eq!(bsflow_sim_diagnostics(sim, &mut d), BsflowStatus::Ok);
        assert_eq!(d.step, 3);
        assert!(d.area > 0.0);

        let mut n = 0;
        assert_eq!(bsflow_sim_vertices(sim, ptr::null_mut(), 0, &mut n), BsflowStatus::Ok);
        assert_eq!(n, 64);
        let mut xy = vec![0.0; n];
        assert_eq!(bsflow_sim_vertices(sim, xy.as_mut_ptr(), n, &mut n), BsflowStatus::Ok);
        assert!(xy.iter().all(|v| v.is_finite() && v.abs() < 1.0));

        let mut psi = vec![0.0; 32];
        assert_eq!(bsflow_sim_psi(sim, psi.as_mut_ptr(), 32, ptr::null_mut()), BsflowStatus::Ok);
        // tangential vertex motion redistributes psi slightly
        assert!(psi.iter().all(|&p| (p - 1.0).abs() < 1e-2), "{psi:?}");

        let mut len = 0;
        assert_eq!(bsflow_sim_summary_json(sim, ptr::null_mut(), 0, &mut len), BsflowStatus::Ok);
        let mut buf = vec![0 as c_char; len + 1];
        assert_eq!(bsflow_sim_summary_json(sim, buf.as_mut_ptr(), buf.len(), &mut len), BsflowStatus::Ok);
        let json = CStr::from_ptr(buf.as_ptr()).to_str().unwrap();
        assert!(json.contains("\"steps\":3"));
        bsflow_sim_free(sim);
    }
}

#[test]
fn json_config_matches_preset() {
    let c = bsflow::config::preset("relax2d").unwrap();
    let json = CString::new(c.to_json().unwrap()).unwrap();
    let mut a = ptr::null_mut();
    unsafe {
        assert_eq!(bsflow_sim_from_json(json.as_ptr(), &mut a), BsflowStatus::Ok);
        let b = relax(BsflowScheme::Bgn);
        bsflow_sim_step(a, 2);
        bsflow_sim_step(b, 2);
        let (mut va, mut vb) = (vec![0.0; 64], vec![0.0; 64]);
        bsflow_sim_vertices(a, va.as_mut_ptr(), 64, ptr::null_mut());
        bsflow_sim_vertices(b, vb.as_mut_ptr(), 64, ptr::null_mut());
        assert_eq!(va, vb);
        bsflow_sim_free(a);
        bsflow_sim_free(b);
    }
}

#[test]
fn errors_are_reported() {
    unsafe {
        let mut sim = ptr::null_mut();
        let bad = CString::new("no-such-preset").unwrap();
        assert_eq!(bsflow_sim_from_preset(bad.as_ptr(), BsflowScheme::Gd, &mut sim), BsflowStatus::Config);
        assert!(sim.is_null());
        assert!(last_error().contains("unknown preset"));

        assert_eq!(bsflow_sim_from_preset(ptr::null(), BsflowScheme::Gd, &mut sim), BsflowStatus::NullPointer);
        assert_eq!(bsflow_sim_step(ptr::null_mut(), 1), BsflowStatus::NullPointer);

        let junk = CString::new("{ not json").unwrap();
        assert_eq!(bsflow_sim_from_json(junk.as_ptr(), &mut sim), BsflowStatus::Config);

        let mut c = bsflow::config::preset("relax2d").unwrap();
        c.disc.tau = -1.0;
        let neg = CString::new(c.to_json().unwrap()).unwrap();
        assert_eq!(bsflow_sim_from_json(neg.as_ptr(), &mut sim), BsflowStatus::InvalidArgument);

        let sim = relax(BsflowScheme::Gd);
        let mut small = [0.0; 4];
        let mut n = 0;
        assert_eq!(bsflow_sim_rho_gamma(sim, small.as_mut_ptr(), 4, &mut n), BsflowStatus::BufferTooSmall);
        assert_eq!(n, 32);
        bsflow_sim_free(sim);
        bsflow_sim_free(ptr::null_mut());
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(bsflow_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}

#[test]
fn header_compiles_as_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/bsflow.h");
    let src = std::env::temp_dir().join(format!("bsflow_header_{}.c", std::process::id()));
    std::fs::write(
        &src,
        format!(
            "#include \"{}\"\nint main(void) {{ BsflowSim *s = 0; BsflowStatus st = bsflow_sim_step(s, 1); return st == BSFLOW_STATUS_NULL_POINTER ? 0 : 1; }}\n",
            header.display()
        ),
    )
    .unwrap();
    let Ok(out) = Command::new("cc").args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only"]).arg(&src).output() else {
        eprintln!("no C compiler found; skipping header check");
        return;
    };
    let _ = std::fs::remove_file(&src);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
