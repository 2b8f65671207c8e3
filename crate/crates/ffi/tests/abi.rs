use std::ffi::{CStr, CString};
use std::ptr;

use defocus::synth::{synthesize, SynthSpec};
use defocus_ffi::*;

fn last_error() -> String {
    let p = defocus_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn image(h: usize, w: usize, data: &[f64]) -> *mut DefocusImage {
    let mut out = ptr::null_mut();
    assert_eq!(
        unsafe { defocus_image_new(h, w, data.as_ptr(), &mut out) },
        DefocusStatus::Ok
    );
    out
}

#[test]
fn image_round_trip_and_size() {
    let img = image(2, 3, &[0.0, 0.1, 0.2, 0.3, 0.4, 0.5]);
    let (mut h, mut w) = (0, 0);
    assert_eq!(unsafe { defocus_image_size(img, &mut h, &mut w) }, DefocusStatus::Ok);
    assert_eq!((h, w), (2, 3));
    assert!(defocus_last_error().is_null());
    unsafe { defocus_image_free(img) };
    unsafe { defocus_image_free(ptr::null_mut()) };
}

#[test]
fn errors_map_to_status_codes() {
    let mut out = ptr::null_mut();
    let bad = [0.5, 2.0];
    assert_eq!(
        unsafe { defocus_image_new(1, 2, bad.as_ptr(), &mut out) },
        DefocusStatus::Domain
    );
    assert!(out.is_null());
    assert!(!last_error().is_empty());

    assert_eq!(
        unsafe { defocus_image_new(1, 2, ptr::null(), &mut out) },
        DefocusStatus::NullPointer
    );
    assert!(last_error().contains("data"));

    let path = CString::new("/nonexistent/defocus.pgm").unwrap();
    assert_eq!(
        unsafe { defocus_image_load(path.as_ptr(), &mut out) },
        DefocusStatus::Io
    );
    assert!(last_error().contains("defocus.pgm"));

    let img = image(1, 1, &[0.5]);
    let cfg = CString::new("[nope]\n").unwrap();
    let mut map = ptr::null_mut();
    assert_eq!(
        unsafe { defocus_blur_map(img, cfg.as_ptr(), &mut map) },
        DefocusStatus::Parse
    );
    assert!(last_error().contains("line 1"));
    unsafe { defocus_image_free(img) };
}

#[test]
fn segmentation_matches_the_library() {
    let f = synthesize(&SynthSpec::default()).unwrap();
    let img = image(f.image.height(), f.image.width(), f.image.data());
    let mut mask = ptr::null_mut();
    assert_eq!(
        unsafe { defocus_segment(img, ptr::null(), &mut mask) },
        DefocusStatus::Ok
    );

    let (mut data, mut h, mut w) = (ptr::null(), 0, 0);
    assert_eq!(
        unsafe { defocus_mask_data(mask, &mut data, &mut h, &mut w) },
        DefocusStatus::Ok
    );
    let bits = unsafe { std::slice::from_raw_parts(data, h * w) };
    let direct = defocus::segment(&f.image, &Default::default()).unwrap();
    assert_eq!(bits, direct.bits());

    let gt_bits = f.mask().bits().to_vec();
    let mut gt = ptr::null_mut();
    assert_eq!(
        unsafe { defocus_mask_new(h, w, gt_bits.as_ptr(), &mut gt) },
        DefocusStatus::Ok
    );
    let (mut p, mut r) = (0.0, 0.0);
    assert_eq!(
        unsafe { defocus_precision_recall(mask, gt, &mut p, &mut r) },
        DefocusStatus::Ok
    );
    assert_eq!((p, r), defocus::eval::precision_recall(&direct, &f.mask()).unwrap());
    assert!(defocus_f_alpha(p, r, 0.3) > 0.7);

    let mut map = ptr::null_mut();
    assert_eq!(
        unsafe { defocus_blur_map(img, ptr::null(), &mut map) },
        DefocusStatus::Ok
    );
    let (mut values, mut len) = (ptr::null(), 0);
    assert_eq!(
        unsafe { defocus_blur_map_data(map, &mut values, &mut len) },
        DefocusStatus::Ok
    );
    assert_eq!(len, 64 * 64);
    let values = unsafe { std::slice::from_raw_parts(values, len) };
    assert!(values.iter().all(|v| (0.0..=1.0).contains(v)));

    unsafe {
        defocus_blur_map_free(map);
        defocus_mask_free(gt);
        defocus_mask_free(mask);
        defocus_image_free(img);
    }
}

#[test]
fn shape_mismatch_is_reported() {
    let (a, b) = ([1u8; 4], [1u8; 6]);
    let (mut m1, mut m2) = (ptr::null_mut(), ptr::null_mut());
    unsafe {
        defocus_mask_new(2, 2, a.as_ptr(), &mut m1);
        defocus_mask_new(2, 3, b.as_ptr(), &mut m2);
    }
    let (mut p, mut r) = (0.0, 0.0);
    assert_eq!(
        unsafe { defocus_precision_recall(m1, m2, &mut p, &mut r) },
        DefocusStatus::Shape
    );
    unsafe {
        defocus_mask_free(m1);
        defocus_mask_free(m2);
    }
}

#[test]
fn edas_over_arrays() {
    // cost criterion in the middle column
    let scores = [3.0, 10.0, 0.5, 4.0, 8.0, 0.9, 2.0, 12.0, 0.2];
    let kinds = [0u8, 1, 0];
    let weights = [0.5, 0.3, 0.2];
    let mut ranks = [0u32; 3];
    let mut as_score = [0.0; 3];
    for canonical in [0, 1] {
        let status = unsafe {
            defocus_edas_rank(
                scores.as_ptr(),
                3,
                3,
                kinds.as_ptr(),
                weights.as_ptr(),
                ptr::null(),
                canonical,
                as_score.as_mut_ptr(),
                ranks.as_mut_ptr(),
            )
        };
        assert_eq!(status, DefocusStatus::Ok);
        let orientation = if canonical == 0 {
            defocus::edas::Orientation::Shortfall
        } else {
            defocus::edas::Orientation::Canonical
        };
        let m = defocus::edas::DecisionMatrix::from_csv(
            "alternative,a:benefit,b:cost,c:benefit\nweights,0.5,0.3,0.2\nx,3,10,0.5\ny,4,8,0.9\nz,2,12,0.2\n",
        )
        .unwrap();
        let r = defocus::edas::rank(&m, orientation).unwrap();
        assert_eq!(ranks.map(|k| k as usize).to_vec(), r.rank);
        assert_eq!(as_score.to_vec(), r.as_score);
    }
    let status = unsafe {
        defocus_edas_rank(
            scores.as_ptr(),
            0,
            3,
            ptr::null(),
            ptr::null(),
            ptr::null(),
            0,
            ptr::null_mut(),
            ranks.as_mut_ptr(),
        )
    };
    assert_eq!(status, DefocusStatus::InvalidArgument);
}

#[test]
fn version_is_the_crate_version() {
    let v = unsafe { CStr::from_ptr(defocus_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}
