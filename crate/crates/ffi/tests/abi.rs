use std::ffi::CStr;
use std::ptr;

use spike_sr_ffi::*;

fn last_error() -> String {
    unsafe { CStr::from_ptr(sr_last_error_message()) }.to_string_lossy().into_owned()
}

unsafe fn spike(nodes: &[f64], re: &[f64], im: &[f64]) -> *mut SrSpike {
    let mut s = ptr::null_mut();
    assert_eq!(sr_spike_new(nodes.as_ptr(), re.as_ptr(), im.as_ptr(), nodes.len(), &mut s), SrStatus::Ok);
    s
}

#[test]
fn noiseless_round_trip() {
    unsafe {
        let x = [-0.3, -0.2975, 0.4];
        let s = spike(&x, &[1.0, -0.8, 0.5], &[0.2, 0.3, -1.0]);
        assert_eq!(sr_spike_len(s), 3);
        let mut o = ptr::null_mut();
        assert_eq!(sr_oracle_new(s, 400.0, 0.0, SrNoise::None, 1, &mut o), SrStatus::Ok);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(sr_oracle_eval(o, 0.0, &mut re, &mut im), SrStatus::Ok);
        assert!((re - 0.7).abs() < 1e-14 && (im + 0.5).abs() < 1e-14);

        let mut r = ptr::null_mut();
        assert_eq!(sr_decimated_sr(o, 3, 2, SrMethod::Edp, &mut r), SrStatus::Ok);
        assert_eq!(sr_recovery_len(r), 3);
        assert!(sr_recovery_rho(r) > 1);
        assert!(sr_recovery_shift(r) >= 2);
        let mut nodes = [0.0; 3];
        assert_eq!(sr_recovery_nodes(r, nodes.as_mut_ptr(), 3), SrStatus::Ok);
        for (a, b) in nodes.iter().zip(&x) {
            assert!(sr_wrap_dist(*a, *b) < 1e-8, "{nodes:?}");
        }
        let (mut are, mut aim) = ([0.0; 3], [0.0; 3]);
        assert_eq!(sr_recovery_amps(r, are.as_mut_ptr(), aim.as_mut_ptr(), 3), SrStatus::Ok);
        assert!((are[2] - 0.5).abs() < 1e-6 && (aim[2] + 1.0).abs() < 1e-6);
        let mut small = [0.0; 2];
        assert_eq!(sr_recovery_nodes(r, small.as_mut_ptr(), 2), SrStatus::BufferTooSmall);
        assert!(last_error().contains("too small"));

        sr_recovery_free(r);
        sr_oracle_free(o);
        sr_spike_free(s);
    }
}

#[test]
fn errors_map_to_codes() {
    unsafe {
        let mut s = ptr::null_mut();
        let x = [0.1, 0.1];
        let z = [1.0, 1.0];
        assert_eq!(sr_spike_new(x.as_ptr(), z.as_ptr(), z.as_ptr(), 2, &mut s), SrStatus::InvalidSpike);
        assert!(s.is_null());
        assert!(!last_error().is_empty());
        assert_eq!(sr_spike_new(ptr::null(), z.as_ptr(), z.as_ptr(), 2, &mut s), SrStatus::NullPointer);

        let s = spike(&[0.2], &[1.0], &[0.0]);
        let mut o = ptr::null_mut();
        assert_eq!(sr_oracle_new(s, 10.0, 0.0, SrNoise::None, 0, &mut o), SrStatus::Ok);
        let (mut re, mut im) = (0.0, 0.0);
        assert_eq!(sr_oracle_eval(o, 11.0, &mut re, &mut im), SrStatus::OutOfBand);
        assert_eq!(sr_oracle_eval(ptr::null(), 1.0, &mut re, &mut im), SrStatus::NullPointer);
        sr_oracle_free(o);
        sr_spike_free(s);
        sr_spike_free(ptr::null_mut());
    }
}

#[test]
fn shift_and_toeplitz_spectrum() {
    unsafe {
        let mut t = 0;
        assert_eq!(sr_coprime_shift(6, 100.0, 2, &mut t), SrStatus::Ok);
        assert_eq!(t, 5);
        assert_eq!(sr_coprime_shift(6, 10.0, 2, &mut t), SrStatus::ShiftInfeasible);

        let s = spike(&[-0.5, 0.5], &[2.0, 1.0], &[0.0, 0.0]);
        let mut o = ptr::null_mut();
        assert_eq!(sr_oracle_new(s, 50.0, 0.0, SrNoise::None, 0, &mut o), SrStatus::Ok);
        let mut sv = [0.0; 2];
        assert_eq!(sr_toeplitz_singular_values(o, 3, 2, sv.as_mut_ptr(), 2), SrStatus::Ok);
        assert!(sv[0] >= sv[1] && sv[1] > 0.0);
        let mut one = [0.0; 1];
        assert_eq!(sr_toeplitz_singular_values(o, 3, 2, one.as_mut_ptr(), 1), SrStatus::BufferTooSmall);
        sr_oracle_free(o);
        sr_spike_free(s);
    }
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/spike_sr.h")).unwrap();
    for sym in [
        "typedef struct SrSpike SrSpike;",
        "typedef struct SrOracle SrOracle;",
        "typedef struct SrRecovery SrRecovery;",
        "SR_STATUS_OK = 0",
        "sr_last_error_message",
        "sr_spike_new",
        "sr_spike_free",
        "sr_oracle_new",
        "sr_oracle_eval",
        "sr_oracle_free",
        "sr_decimated_sr",
        "sr_recovery_nodes",
        "sr_recovery_amps",
        "sr_recovery_free",
        "sr_wrap_dist",
        "sr_coprime_shift",
        "sr_toeplitz_singular_values",
    ] {
        assert!(h.contains(sym), "header lacks {sym}");
    }
}
