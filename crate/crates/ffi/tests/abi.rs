use std::ffi::CStr;
use std::ptr;

use annulus_extremal_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(ax_last_error_message()) }.to_string_lossy().into_owned()
}

#[test]
fn classical_bound_through_handles() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(ax_metric_constant(&mut m), AxStatus::Ok);
        let mut r_max = 0.0;
        assert_eq!(ax_nitsche_bound(m, 1.0, 1.0, 1.25, &mut r_max), AxStatus::Ok);
        assert!((r_max - 2.0).abs() < 1e-10);
        let (mut a0, mut s) = (0.0, 0.0);
        assert_eq!(ax_alpha0(m, 1.0, 1.0, 2.0, &mut a0, &mut s), AxStatus::Ok);
        assert_eq!((a0, s), (-1.0, 1.0));
        ax_metric_free(m);
    }
}

#[test]
fn identity_solution_and_profile_copy() {
    let mut m = ptr::null_mut();
    let mut sol = ptr::null_mut();
    unsafe {
        assert_eq!(ax_metric_power(1.0, &mut m), AxStatus::Ok);
        assert_eq!(ax_solve(m, 2.0, 1.0, 5.0, 5.0, 64, &mut sol), AxStatus::Ok);
        assert!((ax_solution_alpha(sol) - 3.0).abs() < 1e-9);
        let e = 10.0 * std::f64::consts::PI * 5f64.ln();
        assert!((ax_solution_energy(sol) - e).abs() < 1e-9);
        assert_eq!(ax_solution_critical(sol), 0);
        let n = ax_solution_len(sol);
        assert_eq!(n, 64);

        let mut len = 0;
        let mut small = [0.0; 4];
        let st = ax_solution_copy_profile(sol, small.as_mut_ptr(), small.as_mut_ptr(), small.as_mut_ptr(), 4, &mut len);
        assert_eq!(st, AxStatus::BufferTooSmall);
        assert_eq!(len, 64);

        let (mut t, mut h, mut d) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
        assert_eq!(ax_solution_copy_profile(sol, t.as_mut_ptr(), h.as_mut_ptr(), d.as_mut_ptr(), n, &mut len), AxStatus::Ok);
        for i in 0..n {
            assert!((t[i] - h[i]).abs() < 1e-10);
            assert!((d[i] - 1.0).abs() < 1e-10);
        }
        ax_solution_free(sol);
        ax_metric_free(m);
    }
}

#[test]
fn infeasible_status_and_message() {
    let mut m = ptr::null_mut();
    let mut sol = ptr::null_mut();
    unsafe {
        ax_metric_constant(&mut m);
        assert_eq!(ax_solve(m, 1.0, 1.0, 3.0, 1.25, 64, &mut sol), AxStatus::Infeasible);
        assert!(sol.is_null());
        assert!(last_error().contains("infeasible"), "{}", last_error());
        ax_metric_free(m);
    }
}

#[test]
fn bad_inputs() {
    let mut m = ptr::null_mut();
    unsafe {
        assert_eq!(ax_metric_parse(c"power:x".as_ptr(), &mut m), AxStatus::InvalidArgument);
        assert_eq!(ax_metric_parse(c"power:2".as_ptr(), &mut m), AxStatus::Ok);
        let mut out = 0.0;
        assert_eq!(ax_nitsche_bound(m, -1.0, 1.0, 2.0, &mut out), AxStatus::InvalidArgument);
        assert_eq!(ax_nitsche_bound(ptr::null(), 1.0, 1.0, 2.0, &mut out), AxStatus::NullPointer);
        assert_eq!(ax_nitsche_bound(m, 1.0, 1.0, 2.0, ptr::null_mut()), AxStatus::NullPointer);
        ax_metric_free(m);

        let s = [1.0, 2.0, 1.5, 3.0];
        let rho = [1.0; 4];
        assert_eq!(ax_metric_tabulated(s.as_ptr(), rho.as_ptr(), 4, &mut m), AxStatus::InvalidArgument);
        assert!(ax_solution_alpha(ptr::null()).is_nan());
        ax_metric_free(ptr::null_mut());
        ax_solution_free(ptr::null_mut());
    }
}

#[test]
fn tabulated_matches_power() {
    let s: Vec<f64> = (0..33).map(|i| 1.0 + i as f64 / 32.0).collect();
    let rho: Vec<f64> = s.iter().map(|x| x.powi(-2)).collect();
    let (mut tab, mut pow) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        assert_eq!(ax_metric_tabulated(s.as_ptr(), rho.as_ptr(), s.len(), &mut tab), AxStatus::Ok);
        ax_metric_power(2.0, &mut pow);
        let (mut x, mut y) = (0.0, 0.0);
        ax_nitsche_bound(tab, 1.0, 1.0, 2.0, &mut x);
        ax_nitsche_bound(pow, 1.0, 1.0, 2.0, &mut y);
        assert!((x - y).abs() < 1e-9 * y, "{x} {y}");
        ax_metric_free(tab);
        ax_metric_free(pow);
    }
}

#[test]
fn verify_through_handle() {
    let mut m = ptr::null_mut();
    let mut sol = ptr::null_mut();
    unsafe {
        ax_metric_power(2.0, &mut m);
        assert_eq!(ax_solve(m, 1.0, 1.0, 1.9, 1.25, 512, &mut sol), AxStatus::Ok);
        let (mut passed, mut el, mut gap) = (0, 0.0, 0.0);
        assert_eq!(ax_solution_verify(sol, &mut passed, &mut el, &mut gap), AxStatus::Ok);
        assert_eq!(passed, 1);
        assert!(el <= 1e-5 && gap <= 1e-5);
        ax_solution_free(sol);
        ax_metric_free(m);
    }
}

#[test]
fn version_string() {
    let v = unsafe { CStr::from_ptr(ax_version()) }.to_str().unwrap();
    assert_eq!(v, env!("CARGO_PKG_VERSION"));
}
