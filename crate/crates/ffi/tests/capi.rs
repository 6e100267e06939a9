use std::ffi::CStr;
use std::f64::consts::PI;
use std::ptr;

use btrelax_ffi::*;

fn grid(dim: usize, n: usize) -> *mut BtrGrid {
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { btr_grid_new(dim, n, &mut g) }, BtrStatus::Ok);
    g
}

fn params(eps: f64, k: &[f64]) -> *mut BtrParams {
    let mut p = ptr::null_mut();
    assert_eq!(unsafe { btr_params_new(eps, -1.0, k.as_ptr(), k.len(), &mut p) }, BtrStatus::Ok);
    p
}

fn last_error() -> String {
    let p = btr_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn cosine_state(g: *const BtrGrid, n: usize) -> *mut BtrState {
    let x = |j: usize| 2.0 * PI * j as f64 / n as f64;
    let mut rho: Vec<f64> = (0..n).map(|j| 1.0 + 0.3 * x(j).cos()).collect();
    rho.extend((0..n).map(|j| 0.5 - 0.1 * (2.0 * x(j)).sin()));
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { btr_state_new(g, 2, 0.0, rho.as_ptr(), ptr::null(), &mut s) }, BtrStatus::Ok);
    s
}

fn mass(s: *const BtrState, species: usize, n: usize) -> f64 {
    let mut buf = vec![0.0; n];
    assert_eq!(unsafe { btr_state_density(s, species, buf.as_mut_ptr(), n) }, BtrStatus::Ok);
    buf.iter().sum::<f64>() * 2.0 * PI / n as f64
}

#[test]
fn lifecycle_and_accessors() {
    let g = grid(2, 8);
    assert_eq!(unsafe { btr_grid_len(g) }, 64);
    let p = params(0.1, &[1.0]);
    let rho = vec![2.0; 64];
    let u: Vec<f64> = (0..128).map(|j| j as f64).collect();
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { btr_state_new(g, 1, 0.25, rho.as_ptr(), u.as_ptr(), &mut s) }, BtrStatus::Ok);
    assert_eq!(unsafe { btr_state_time(s) }, 0.25);
    let mut buf = vec![0.0; 64];
    assert_eq!(unsafe { btr_state_velocity(s, 0, 1, buf.as_mut_ptr(), 64) }, BtrStatus::Ok);
    assert_eq!(buf, u[64..]);
    assert_eq!(unsafe { btr_state_density(s, 0, buf.as_mut_ptr(), 64) }, BtrStatus::Ok);
    assert_eq!(buf, rho);
    unsafe {
        btr_state_free(s);
        btr_params_free(p);
        btr_grid_free(g);
        btr_state_free(ptr::null_mut());
        btr_params_free(ptr::null_mut());
        btr_grid_free(ptr::null_mut());
    }
}

#[test]
fn null_and_invalid_arguments() {
    assert_eq!(unsafe { btr_grid_new(1, 8, ptr::null_mut()) }, BtrStatus::NullPointer);
    let mut g = ptr::null_mut();
    assert_eq!(unsafe { btr_grid_new(4, 8, &mut g) }, BtrStatus::InvalidArgument);
    assert!(g.is_null());
    assert!(!last_error().is_empty());

    let mut p = ptr::null_mut();
    let k = [1.0];
    assert_eq!(unsafe { btr_params_new(-1.0, -1.0, k.as_ptr(), 1, &mut p) }, BtrStatus::InvalidArgument);
    assert!(last_error().contains("eps"), "{}", last_error());
    assert_eq!(unsafe { btr_params_new(0.1, -1.0, ptr::null(), 1, &mut p) }, BtrStatus::NullPointer);

    let g = grid(1, 16);
    let p = params(0.1, &[1.0]);
    let s = cosine_state(g, 16);
    let mut e = 0.0;
    assert_eq!(unsafe { btr_energy(ptr::null(), p, &mut e) }, BtrStatus::NullPointer);
    assert_eq!(unsafe { btr_energy(s, p, ptr::null_mut()) }, BtrStatus::NullPointer);
    let mut buf = vec![0.0; 8];
    assert_eq!(unsafe { btr_state_density(s, 0, buf.as_mut_ptr(), 8) }, BtrStatus::InvalidArgument);
    assert_eq!(unsafe { btr_state_density(s, 5, buf.as_mut_ptr(), 16) }, BtrStatus::InvalidArgument);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { btr_nsk_step(s, p, 1e-3, 3, &mut out) }, BtrStatus::InvalidArgument);
    assert!(last_error().contains("scheme"));
    assert!(unsafe { btr_state_time(ptr::null()) }.is_nan());
    unsafe {
        btr_state_free(s);
        btr_params_free(p);
        btr_grid_free(g);
    }
}

#[test]
fn negative_density_is_numerical() {
    let g = grid(1, 8);
    let p = params(0.1, &[1.0]);
    let rho = [1.0, 1.0, -0.5, 1.0, 1.0, 1.0, 1.0, 1.0];
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { btr_state_new(g, 1, 0.0, rho.as_ptr(), ptr::null(), &mut s) }, BtrStatus::Ok);
    let mut h = 0.0;
    assert_eq!(unsafe { btr_entropy(s, p, &mut h) }, BtrStatus::Numerical);
    unsafe {
        btr_state_free(s);
        btr_params_free(p);
        btr_grid_free(g);
    }
}

#[test]
fn constant_state_functionals() {
    // ρ ≡ (1, 1) on [0, 2π): E = ½∫4 = 4π, H = Σ∫(0 − 1)/k_i = −2π(1 + 1/2).
    let g = grid(1, 32);
    let p = params(0.1, &[1.0, 2.0]);
    let rho = vec![1.0; 64];
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { btr_state_new(g, 2, 0.0, rho.as_ptr(), ptr::null(), &mut s) }, BtrStatus::Ok);
    let (mut e, mut h) = (0.0, 0.0);
    assert_eq!(unsafe { btr_energy(s, p, &mut e) }, BtrStatus::Ok);
    assert_eq!(unsafe { btr_entropy(s, p, &mut h) }, BtrStatus::Ok);
    assert!((e - 4.0 * PI).abs() < 1e-12, "{e}");
    assert!((h + 3.0 * PI).abs() < 1e-12, "{h}");
    let mut d = BtrDiagnostics::default();
    assert_eq!(unsafe { btr_diagnostics(s, p, &mut d) }, BtrStatus::Ok);
    assert!((d.energy - e).abs() < 1e-14);
    assert!((d.mass_total - 4.0 * PI).abs() < 1e-12);
    assert!(d.d_relax.abs() < 1e-14 && d.d_grad.abs() < 1e-14);
    unsafe {
        btr_state_free(s);
        btr_params_free(p);
        btr_grid_free(g);
    }
}

#[test]
fn steps_conserve_mass() {
    let n = 64;
    let g = grid(1, n);
    let p = params(0.1, &[1.0, 2.0]);
    let s0 = cosine_state(g, n);
    let m0 = [mass(s0, 0, n), mass(s0, 1, n)];
    for scheme in [1, 2] {
        let mut s1 = ptr::null_mut();
        assert_eq!(unsafe { btr_nsk_step(s0, p, 1e-3, scheme, &mut s1) }, BtrStatus::Ok);
        assert!((unsafe { btr_state_time(s1) } - 1e-3).abs() < 1e-15);
        for (i, m) in m0.iter().enumerate() {
            assert!((mass(s1, i, n) - m).abs() < 1e-12);
        }
        unsafe { btr_state_free(s1) };
    }
    let mut s1 = ptr::null_mut();
    assert_eq!(unsafe { btr_bt_step(s0, p, 1e-3, &mut s1) }, BtrStatus::Ok);
    for (i, m) in m0.iter().enumerate() {
        assert!((mass(s1, i, n) - m).abs() < 1e-12);
    }
    unsafe { btr_state_free(s1) };

    let a = [2.0, 0.5, 0.5, 1.0];
    assert_eq!(unsafe { btr_params_set_matrix(p, a.as_ptr()) }, BtrStatus::Ok);
    let mut s2 = ptr::null_mut();
    assert_eq!(unsafe { btr_bt_step(s0, p, 1e-3, &mut s2) }, BtrStatus::Ok);
    for (i, m) in m0.iter().enumerate() {
        assert!((mass(s2, i, n) - m).abs() < 1e-12);
    }
    let asym = [2.0, 0.5, 0.1, 1.0];
    assert_eq!(unsafe { btr_params_set_matrix(p, asym.as_ptr()) }, BtrStatus::InvalidArgument);
    unsafe {
        btr_state_free(s2);
        btr_state_free(s0);
        btr_params_free(p);
        btr_grid_free(g);
    }
}

#[test]
fn oversized_step_is_numerical() {
    let n = 32;
    let g = grid(1, n);
    let p = params(0.1, &[1.0]);
    let rho = vec![1.0; n];
    let u = vec![100.0; n];
    let mut s = ptr::null_mut();
    assert_eq!(unsafe { btr_state_new(g, 1, 0.0, rho.as_ptr(), u.as_ptr(), &mut s) }, BtrStatus::Ok);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { btr_nsk_step(s, p, 0.1, 1, &mut out) }, BtrStatus::Numerical);
    assert!(out.is_null());
    unsafe {
        btr_state_free(s);
        btr_params_free(p);
        btr_grid_free(g);
    }
}
