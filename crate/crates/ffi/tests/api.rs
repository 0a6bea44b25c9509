use std::ffi::{c_char, CString};
use std::ptr;

use vqs_ffi::*;

fn last_error() -> String {
    unsafe {
        let n = vqs_last_error_message(ptr::null_mut(), 0);
        let mut buf = vec![0u8; n + 1];
        vqs_last_error_message(buf.as_mut_ptr().cast::<c_char>(), buf.len());
        String::from_utf8(buf[..n].to_vec()).unwrap()
    }
}

fn preset(name: &str) -> *mut VqsConfig {
    let name = CString::new(name).unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { vqs_config_preset(name.as_ptr(), &mut cfg) }, VqsStatus::Ok);
    assert!(!cfg.is_null());
    cfg
}

#[test]
fn box_energy_matches_closed_form() {
    let mut e = 0.0;
    assert_eq!(unsafe { vqs_box_energy(1, 1.0, 1.0, 1.0, &mut e) }, VqsStatus::Ok);
    assert!((e - std::f64::consts::PI.powi(2) / 2.0).abs() < 1e-12);
    assert_eq!(unsafe { vqs_box_energy(0, 1.0, 1.0, 1.0, &mut e) }, VqsStatus::Domain);
    assert!(last_error().contains("domain"), "{}", last_error());
    assert_eq!(unsafe { vqs_box_energy(1, -1.0, 1.0, 1.0, &mut e) }, VqsStatus::Config);
}

#[test]
fn null_pointers_are_reported() {
    let mut e = 0.0;
    unsafe {
        assert_eq!(vqs_box_energy(1, 1.0, 1.0, 1.0, ptr::null_mut()), VqsStatus::NullPointer);
        assert!(last_error().contains("out"));
        assert_eq!(vqs_oracle_energies(ptr::null(), &mut e, &mut e), VqsStatus::NullPointer);
        let mut cfg = ptr::null_mut();
        assert_eq!(vqs_config_preset(ptr::null(), &mut cfg), VqsStatus::NullPointer);
        vqs_config_free(ptr::null_mut());
        vqs_report_free(ptr::null_mut());
    }
}

#[test]
fn success_clears_last_error() {
    let mut e = 0.0;
    unsafe {
        vqs_box_energy(0, 1.0, 1.0, 1.0, &mut e);
        assert!(!last_error().is_empty());
        vqs_box_energy(1, 1.0, 1.0, 1.0, &mut e);
    }
    assert!(last_error().is_empty());
}

#[test]
fn error_message_truncates_and_terminates() {
    let mut e = 0.0;
    unsafe { vqs_box_energy(0, 1.0, 1.0, 1.0, &mut e) };
    let full = last_error();
    let mut buf = [0x7fu8; 6];
    let n = unsafe { vqs_last_error_message(buf.as_mut_ptr().cast::<c_char>(), buf.len()) };
    assert_eq!(n, full.len());
    assert_eq!(&buf[..5], &full.as_bytes()[..5]);
    assert_eq!(buf[5], 0);
}

#[test]
fn malformed_config_is_a_config_error() {
    let text = CString::new("[system]\na = 1.0\nalpha = = 3\n").unwrap();
    let mut cfg = ptr::null_mut();
    assert_eq!(unsafe { vqs_config_parse(text.as_ptr(), &mut cfg) }, VqsStatus::Config);
    assert!(cfg.is_null());
    assert!(last_error().contains("line 3"), "{}", last_error());

    let name = CString::new("perturbed_z").unwrap();
    assert_eq!(unsafe { vqs_config_preset(name.as_ptr(), &mut cfg) }, VqsStatus::Config);
}

#[test]
fn size_override_is_validated() {
    let cfg = preset("unperturbed");
    unsafe {
        assert_eq!(vqs_config_set_sizes(cfg, 100, 50), VqsStatus::Config);
        assert_eq!(vqs_config_set_sizes(cfg, 1, 64), VqsStatus::Ok);
        let (mut basis, mut grid) = (0.0, 0.0);
        assert_eq!(vqs_oracle_energies(cfg, &mut basis, &mut grid), VqsStatus::Ok);
        assert_eq!(basis, std::f64::consts::PI.powi(2) / 2.0);
        assert!((grid - basis).abs() < 1e-5);
        vqs_config_free(cfg);
    }
}

#[test]
fn oracle_energies_for_tilted_well() {
    let cfg = preset("perturbed_a");
    let (mut basis, mut grid) = (0.0, 0.0);
    assert_eq!(unsafe { vqs_oracle_energies(cfg, &mut basis, &mut grid) }, VqsStatus::Ok);
    assert!((basis - 8.79507).abs() < 1e-4, "{basis}");
    assert!((basis - grid).abs() < 1e-4, "{basis} vs {grid}");
    unsafe { vqs_config_free(cfg) };
}

#[test]
fn short_training_run_round_trip() {
    let text = CString::new("[basis]\nN = 10\n[quadrature]\nG = 128\n[train]\nmax_iters = 3\n").unwrap();
    let mut cfg = ptr::null_mut();
    let mut report = ptr::null_mut();
    unsafe {
        assert_eq!(vqs_config_parse(text.as_ptr(), &mut cfg), VqsStatus::Ok);
        assert_eq!(vqs_config_set_seed(cfg, 7), VqsStatus::Ok);
        assert_eq!(vqs_train(cfg, &mut report), VqsStatus::Ok);

        let (mut fe, mut oe, mut ov, mut it, mut conv) = (0.0, 0.0, 0.0, 0usize, true);
        assert_eq!(
            vqs_report_summary(report, &mut fe, &mut oe, &mut ov, &mut it, &mut conv),
            VqsStatus::Ok
        );
        assert_eq!(it, 3);
        assert!(!conv);
        assert!(fe >= oe - 1e-9);
        assert!((0.0..=1.0 + 1e-12).contains(&ov));
        assert_eq!(
            vqs_report_summary(report, ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut(), ptr::null_mut()),
            VqsStatus::Ok
        );

        let mut needed = 0;
        assert_eq!(vqs_report_coefficients(report, ptr::null_mut(), 0, &mut needed), VqsStatus::Ok);
        assert_eq!(needed, 10);
        let mut small = [0.0; 4];
        assert_eq!(
            vqs_report_coefficients(report, small.as_mut_ptr(), small.len(), ptr::null_mut()),
            VqsStatus::BufferTooSmall
        );
        let mut c = vec![0.0; needed];
        assert_eq!(vqs_report_coefficients(report, c.as_mut_ptr(), c.len(), ptr::null_mut()), VqsStatus::Ok);
        let norm: f64 = c.iter().map(|v| v * v).sum();
        assert!((norm - 1.0).abs() < 1e-12);

        let mut trace = vec![0.0; 3];
        assert_eq!(
            vqs_report_energy_trace(report, trace.as_mut_ptr(), trace.len(), &mut needed),
            VqsStatus::Ok
        );
        assert_eq!(needed, 3);
        assert!(trace.iter().all(|&e| e >= oe - 1e-9));

        vqs_report_free(report);
        vqs_config_free(cfg);
    }
}

#[test]
fn config_file_load() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("well.cfg");
    std::fs::write(&path, "[system]\na = 2.0\n[basis]\nN = 1\n[quadrature]\nG = 64\n").unwrap();
    let cpath = CString::new(path.to_str().unwrap()).unwrap();
    let mut cfg = ptr::null_mut();
    unsafe {
        assert_eq!(vqs_config_load(cpath.as_ptr(), &mut cfg), VqsStatus::Ok);
        let (mut basis, mut grid) = (0.0, 0.0);
        assert_eq!(vqs_oracle_energies(cfg, &mut basis, &mut grid), VqsStatus::Ok);
        assert!((basis - std::f64::consts::PI.powi(2) / 8.0).abs() < 1e-12);
        vqs_config_free(cfg);
    }
    let missing = CString::new(dir.path().join("absent.cfg").to_str().unwrap()).unwrap();
    assert_eq!(unsafe { vqs_config_load(missing.as_ptr(), &mut cfg) }, VqsStatus::Config);
}
