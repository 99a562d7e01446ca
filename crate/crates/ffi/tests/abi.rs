use std::ffi::{CStr, CString};
use std::ptr;

use salem_lab_ffi::*;

fn field(spec: &str) -> *mut SalemField {
    let spec = CString::new(spec).unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { salem_field_new(spec.as_ptr(), &mut f) }, SalemStatus::Ok);
    f
}

fn last_error() -> String {
    let p = salem_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_str().unwrap().to_owned()
}

fn codes(set: *const SalemPointSet) -> Vec<u64> {
    let mut len = 0;
    unsafe {
        assert_eq!(salem_pointset_codes(set, ptr::null_mut(), 0, &mut len), SalemStatus::Ok);
        let mut buf = vec![0; len];
        assert_eq!(salem_pointset_codes(set, buf.as_mut_ptr(), len, &mut len), SalemStatus::Ok);
        buf
    }
}

#[test]
fn field_errors_are_reported() {
    let spec = CString::new("6").unwrap();
    let mut f = ptr::null_mut();
    assert_eq!(unsafe { salem_field_new(spec.as_ptr(), &mut f) }, SalemStatus::InvalidField);
    assert!(f.is_null());
    assert!(last_error().starts_with("NonPrime"));
    assert_eq!(unsafe { salem_field_new(ptr::null(), &mut f) }, SalemStatus::NullPointer);

    let f = field("3^2");
    let mut q = 0;
    assert_eq!(unsafe { salem_field_order(f, &mut q) }, SalemStatus::Ok);
    assert_eq!(q, 9);
    assert!(salem_last_error_message().is_null());
    unsafe { salem_field_free(f) };
}

#[test]
fn energy_norms_and_incidences() {
    let f = field("5");
    let mut set = ptr::null_mut();
    // (0,0), (1,0), (0,1), (1,0) again
    let raw = [0u64, 1, 5, 1];
    unsafe {
        assert_eq!(salem_pointset_new(f, 2, raw.as_ptr(), raw.len(), &mut set), SalemStatus::Ok);
        let mut len = 0;
        salem_pointset_len(set, &mut len);
        assert_eq!(len, 3);
        let mut lambda = 0;
        assert_eq!(salem_additive_energy(set, 2, &mut lambda), SalemStatus::Ok);
        assert_eq!(lambda, 15);
        let mut norm = 0.0;
        assert_eq!(salem_lu_norm(set, 3, &mut norm), SalemStatus::InvalidArgument);
        assert!(last_error().starts_with("InvalidMoment"));
        assert_eq!(salem_lu_norm(set, 4, &mut norm), SalemStatus::Ok);
        let mut sup = 0.0;
        assert_eq!(salem_lu_norm(set, 0, &mut sup), SalemStatus::Ok);
        assert!(norm > 0.0 && sup >= norm - 1e-12);

        // unit circle about the origin, and a radius-0 sphere at (1,0)
        let centers = [0u64, 1];
        let radii = [1u32, 0];
        let mut count = 0;
        assert_eq!(salem_incidences(set, centers.as_ptr(), radii.as_ptr(), 2, &mut count), SalemStatus::Ok);
        assert_eq!(count, 3);
        let bad = [25u64];
        assert_eq!(salem_incidences(set, bad.as_ptr(), radii.as_ptr(), 1, &mut count), SalemStatus::InvalidArgument);
        salem_pointset_free(set);
        salem_field_free(f);
    }
}

#[test]
fn constructions() {
    let f = field("5");
    let mut w = ptr::null_mut();
    let mut parabola = ptr::null_mut();
    let mut subset = ptr::null_mut();
    unsafe {
        assert_eq!(salem_isotropic_subspace(f, 4, &mut w), SalemStatus::Ok);
        assert_eq!(codes(w).len(), 25);
        assert_eq!(salem_sidon_parabola(f, 2, &mut parabola), SalemStatus::Ok);
        let mut lambda = 0;
        salem_additive_energy(parabola, 2, &mut lambda);
        assert_eq!(lambda, 2 * 25 - 5);
        assert_eq!(salem_salem_subset(f, 4, 1, 2, 11, &mut subset), SalemStatus::Ok);
        let sub = codes(subset);
        assert!(sub.iter().all(|c| codes(w).contains(c)));
        let mut again = ptr::null_mut();
        salem_salem_subset(f, 4, 1, 2, 11, &mut again);
        assert_eq!(codes(again), sub);
        assert_eq!(salem_salem_subset(f, 4, 1, 5, 11, &mut again), SalemStatus::InvalidArgument);
        assert_eq!(salem_isotropic_subspace(f, 3, &mut again), SalemStatus::Unsupported);
        for h in [w, parabola, subset, again] {
            salem_pointset_free(h);
        }
        salem_field_free(f);
    }
}

#[test]
fn sweep_round_trip() {
    let cfg = CString::new(r#"{"fields": ["5"], "dims": [2], "sValues": ["1/2"]}"#).unwrap();
    let mut out = ptr::null_mut();
    unsafe {
        assert_eq!(salem_sweep_json(cfg.as_ptr(), &mut out), SalemStatus::Ok);
        let text = CStr::from_ptr(out).to_str().unwrap().to_owned();
        salem_string_free(out);
        let rows = salem_lab::report::parse_json(&text).unwrap();
        assert_eq!(rows.len(), 1);
        let bad = CString::new("{").unwrap();
        assert_eq!(salem_sweep_json(bad.as_ptr(), &mut out), SalemStatus::Parse);
    }
}
