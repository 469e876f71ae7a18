mod common;

use gsep::grid::{apply_mask, Grid, Image, Part, StripMask};
use gsep::io::{decode_raw, encode_pgm, encode_raw, read_raw, write_raw, FLAG_PROFILE};
use gsep::{Complex64, Error};
use std::path::Path;

#[test]
fn grid_sizes() {
    assert!(Grid::new(8).is_err());
    assert!(Grid::new(48).is_err());
    for (n, jm, side) in [(16, 2, 1.0), (32, 2, 2.0), (64, 3, 1.0), (256, 4, 1.0), (512, 4, 2.0)] {
        let g = Grid::new(n).unwrap();
        assert_eq!(g.len(), n * n);
        assert_eq!(g.j_max(), jm, "n = {n}");
        assert_eq!(g.side(), side);
        // The finest corona fits: 2^{2 j_max - 1} <= n / 2.
        assert!(1usize << (2 * jm - 1) <= n / 2);
    }
}

#[test]
fn frequency_lattice_covers_half_open_square() {
    let g = Grid::new(16).unwrap();
    let ks: Vec<i64> = (0..16).map(|i| g.freq(i)).collect();
    assert_eq!(*ks.iter().min().unwrap(), -8);
    assert_eq!(*ks.iter().max().unwrap(), 7);
    for k in -8..8 {
        assert_eq!(g.freq(g.slot(k)), k);
    }
}

#[test]
fn constant_image_has_dc_only_spectrum() {
    let g = Grid::new(16).unwrap();
    let img = Image::from_fn(g, |_, _| Complex64::new(1.0, 0.0));
    let spec = img.spectrum();
    assert!((spec.at_freq(0, 0) - Complex64::new(16.0, 0.0)).norm() < 1e-12);
    let rest: f64 = spec.data().iter().skip(1).map(|z| z.norm()).sum();
    assert!(rest < 1e-12);
}

#[test]
fn spectrum_is_unitary_and_invertible() {
    let g = Grid::new(64).unwrap();
    let f = common::random_image(g, 3);
    let spec = f.spectrum();
    assert!((spec.norm() - f.norm()).abs() <= 1e-12 * f.norm());
    assert!(spec.image().rel_err(&f) < 1e-12);
}

#[test]
fn pure_tone_lands_on_one_frequency() {
    let g = Grid::new(32).unwrap();
    let img = common::from_spectrum(g, |k1, k2| if (k1, k2) == (3, -5) { Complex64::new(2.0, 0.0) } else { Complex64::default() });
    let back = img.spectrum();
    assert!((back.at_freq(3, -5).re - 2.0).abs() < 1e-12);
    // e^{2 pi i k.x / n} / n times 2.
    let z = img.at(1, 2);
    let arg = 2.0 * std::f64::consts::PI * (3.0 - 10.0) / 32.0;
    assert!((z - Complex64::from_polar(2.0 / 32.0, arg)).norm() < 1e-12);
}

#[test]
fn zero_width_mask_removes_the_centre_row() {
    let g = Grid::new(16).unwrap();
    let f = common::random_image(g, 4);
    let m = StripMask::new(g, 0.0).unwrap();
    assert_eq!(m.missing_row_count(), 1);
    let k = apply_mask(&m, &f, Part::Known).unwrap();
    for r in 0..16 {
        for c in 0..16 {
            let expect = if r == 8 { Complex64::default() } else { f.at(r, c) };
            assert_eq!(k.at(r, c), expect);
        }
    }
}

#[test]
fn wide_mask_hides_everything() {
    let g = Grid::new(16).unwrap();
    let f = common::random_image(g, 5);
    let m = StripMask::new(g, 8.0).unwrap();
    assert_eq!(m.apply(&f, Part::Missing).unwrap(), f);
    assert_eq!(m.apply(&f, Part::Known).unwrap().norm(), 0.0);
}

#[test]
fn projections_split_orthogonally() {
    let g = Grid::new(32).unwrap();
    let f = common::random_image(g, 6);
    let m = StripMask::new(g, 3.0).unwrap();
    assert_eq!(m.missing_row_count(), 7);
    let k = m.apply(&f, Part::Known).unwrap();
    let mm = m.apply(&f, Part::Missing).unwrap();
    assert!((k.norm_sqr() + mm.norm_sqr() - f.norm_sqr()).abs() <= 1e-12 * f.norm_sqr());
    assert_eq!(k.add(&mm), f);
    assert_eq!(m.apply(&k, Part::Known).unwrap(), k);
    assert_eq!(m.apply(&mm, Part::Missing).unwrap(), mm);
    assert_eq!(m.apply(&k, Part::Missing).unwrap().norm(), 0.0);
}

#[test]
fn mask_rejects_bad_input() {
    let g = Grid::new(16).unwrap();
    assert!(StripMask::new(g, -1.0).is_err());
    assert!(StripMask::new(g, f64::NAN).is_err());
    assert!(StripMask::with_center(g, 1.0, 16).is_err());
    let other = Grid::new(32).unwrap();
    let err = StripMask::new(g, 1.0).unwrap().apply(&Image::zeros(other), Part::Known);
    assert!(matches!(err, Err(Error::GridMismatch(16, 32))));
    assert!(StripMask::empty(g).is_empty());
}

#[test]
fn strip_wraps_periodically() {
    let g = Grid::new(16).unwrap();
    let m = StripMask::with_center(g, 1.0, 0).unwrap();
    let rows: Vec<usize> = (0..16).filter(|&r| m.is_missing(r)).collect();
    assert_eq!(rows, vec![0, 1, 15]);
}

#[test]
fn raw_round_trip_and_header() {
    let g = Grid::new(16).unwrap();
    let f = common::random_image(g, 7);
    let bytes = encode_raw(&f, FLAG_PROFILE);
    assert_eq!(&bytes[..4], b"GSEP");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 16);
    assert_eq!(bytes.len(), 16 + 16 * 256);
    let (back, flags) = decode_raw(&bytes, Path::new("x.raw")).unwrap();
    assert_eq!(back, f);
    assert_eq!(flags, FLAG_PROFILE);

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("sub").join("f.raw");
    write_raw(&p, &f).unwrap();
    assert_eq!(read_raw(&p).unwrap(), f);
}

#[test]
fn raw_rejects_corruption() {
    let g = Grid::new(16).unwrap();
    let bytes = encode_raw(&Image::zeros(g), 0);
    let p = Path::new("bad.raw");
    assert!(matches!(decode_raw(&bytes[..10], p), Err(Error::Format { .. })));
    assert!(matches!(decode_raw(&bytes[..bytes.len() - 8], p), Err(Error::Format { .. })));
    let mut wrong = bytes.clone();
    wrong[0] = b'X';
    assert!(decode_raw(&wrong, p).is_err());
    let mut side = bytes;
    side[4] = 17;
    assert!(decode_raw(&side, p).is_err());
}

#[test]
fn pgm_is_min_max_scaled() {
    let g = Grid::new(16).unwrap();
    let f = Image::from_fn(g, |r, _| Complex64::new(r as f64, 5.0));
    let pgm = encode_pgm(&f);
    let header = b"P5\n16 16\n255\n";
    assert_eq!(&pgm[..header.len()], header);
    let body = &pgm[header.len()..];
    assert_eq!(body.len(), 256);
    assert_eq!(body[0], 0);
    assert_eq!(body[255], 255);
}
