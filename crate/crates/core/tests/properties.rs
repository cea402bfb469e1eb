use proptest::prelude::*;

use proxylight::fusion::{build_mask, Mode, TranslationParams, Translator};
use proxylight::image::{decode_image, encode_image, resize, EncodeFormat, Raster};
use proxylight::metrics::{f_measure, GrayMap};
use proxylight::spectrum::{dft2, idft2, naive_dft2};

fn raster(max_side: usize) -> impl Strategy<Value = Raster> {
    (1..=max_side, 1..=max_side, prop_oneof![Just(1usize), Just(3usize)]).prop_flat_map(|(h, w, c)| {
        prop::collection::vec(0.0..=1.0f64, h * w * c).prop_map(move |data| Raster::new(h, w, c, data).unwrap())
    })
}

fn params() -> impl Strategy<Value = TranslationParams> {
    (0.0..0.5f64, 0.01..0.49f64, 1.0..8.0f64, 0usize..4).prop_map(|(l, du, g, m)| {
        let mode = [Mode::Ours, Mode::Fda, Mode::AblationRect, Mode::AblationLowpass][m];
        TranslationParams::new(l, (l + du).min(0.99), g, mode).unwrap()
    })
}

fn wrapped_phase_diff(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(2.0 * std::f64::consts::PI);
    d.min(2.0 * std::f64::consts::PI - d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn round_trip_recovers_the_image(img in raster(24)) {
        let back = idft2(&dft2(&img));
        prop_assert!(back.max_imag_residual <= 1e-9);
        for (a, b) in back.data.iter().zip(img.data()) {
            prop_assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn spectrum_of_real_input_is_hermitian(img in raster(16)) {
        for ch in dft2(&img).channels() {
            let (h, w) = (ch.height() as isize, ch.width() as isize);
            for m in -(h / 2)..h - h / 2 {
                for n in -(w / 2)..w - w / 2 {
                    let (i, j) = (ch.index_of(m, n), ch.index_of(-m, -n));
                    let (a, b) = (ch.amplitude()[i], ch.amplitude()[j]);
                    prop_assert!((a - b).abs() <= 1e-9 * (1.0 + a));
                    if a > 1e-9 {
                        prop_assert!(wrapped_phase_diff(ch.phase()[i], -ch.phase()[j]) <= 1e-9 * (1.0 + 1.0 / a));
                    }
                }
            }
        }
    }

    #[test]
    fn parseval_holds(img in raster(20)) {
        let n = (img.height() * img.width()) as f64;
        for (c, ch) in dft2(&img).channels().iter().enumerate() {
            let spatial: f64 = img.plane(c).iter().map(|v| v * v).sum();
            prop_assert!((ch.energy() / n - spatial).abs() <= 1e-9 * (1.0 + spatial));
        }
    }

    #[test]
    fn fast_transform_matches_naive(img in raster(16)) {
        let fast = dft2(&img);
        let slow = naive_dft2(&img).unwrap();
        for (f, s) in fast.channels().iter().zip(slow.channels()) {
            for i in 0..f.amplitude().len() {
                prop_assert!((f.complex(i) - s.complex(i)).norm() <= 1e-9 * (1.0 + s.amplitude()[i]));
            }
        }
    }

    #[test]
    fn mask_is_a_symmetric_weight_on_the_band(h in 1usize..80, w in 1usize..80, p in params()) {
        let mask = build_mask::<f64>(h, w, &p);
        let lambda_l = p.effective_lambda_l();
        let inside = |lambda: f64, m: isize, n: isize| {
            lambda > 0.0 && (m.unsigned_abs() as f64) <= lambda * h as f64 / 2.0 && (n.unsigned_abs() as f64) <= lambda * w as f64 / 2.0
        };
        let (hh, hw) = ((h / 2) as isize, (w / 2) as isize);
        let mut any_band = false;
        for m in -hh..h as isize - hh {
            for n in -hw..w as isize - hw {
                let a = mask.at(m, n);
                prop_assert!((0.0..=1.0).contains(&a));
                let band = inside(p.lambda_u(), m, n) && !inside(lambda_l, m, n);
                any_band |= band;
                if !band {
                    prop_assert_eq!(a, 0.0);
                }
                if -m >= -hh && -m < h as isize - hh && -n >= -hw && -n < w as isize - hw {
                    prop_assert_eq!(a, mask.at(-m, -n));
                }
            }
        }
        prop_assert_eq!(mask.is_degenerate(), !any_band);
    }

    #[test]
    fn translation_is_deterministic(well in raster(20), low in raster(20), p in params()) {
        let t = Translator::<f64>::new();
        let a = t.translate(&well, &low, &p).unwrap();
        let b = Translator::<f64>::new().translate(&well, &low, &p).unwrap();
        prop_assert_eq!(a.image.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        b.image.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    }

    #[test]
    fn raising_gamma_never_brightens(well in raster(20), low in raster(20), p in params(), extra in 0.1..4.0f64) {
        let t = Translator::<f64>::new();
        let lo = t.translate(&well, &low, &p).unwrap().image;
        let hi = t.translate(&well, &low, &p.with_gamma(p.gamma() + extra).unwrap()).unwrap().image;
        for (a, b) in hi.data().iter().zip(lo.data()) {
            prop_assert!(*a <= *b);
        }
    }

    #[test]
    fn output_stays_in_unit_range(well in raster(20), low in raster(20), p in params()) {
        let out = Translator::<f64>::new().translate(&well, &low, &p).unwrap();
        prop_assert_eq!(out.image.dims(), well.dims());
        prop_assert_eq!(out.image.channels(), well.channels());
        prop_assert!(out.image.data().iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn resize_preserves_constant_images(h in 1usize..40, w in 1usize..40, th in 1usize..40, tw in 1usize..40, v in 0.0..=1.0f64) {
        let img = Raster::filled(h, w, 3, v).unwrap();
        let out = resize(&img, th, tw).unwrap();
        prop_assert_eq!(out.dims(), (th, tw));
        prop_assert!(out.data().iter().all(|x| (x - v).abs() <= 1e-12));
    }

    #[test]
    fn png_round_trips_quantized_values(
        (h, w, c, bytes) in (1usize..12, 1usize..12, prop_oneof![Just(1usize), Just(3usize)])
            .prop_flat_map(|(h, w, c)| (Just(h), Just(w), Just(c), prop::collection::vec(any::<u8>(), h * w * c)))
    ) {
        let data: Vec<f64> = bytes.iter().map(|b| *b as f64 / 255.0).collect();
        let img = Raster::new(h, w, c, data).unwrap();
        let back: Raster = decode_image(&encode_image(&img, EncodeFormat::Png).unwrap()).unwrap();
        prop_assert_eq!(back, img);
    }

    #[test]
    fn f_measure_is_a_unit_score(
        (pred, gt) in (1usize..10, 1usize..10).prop_flat_map(|(h, w)| (
            prop::collection::vec(0.0..=1.0f64, h * w).prop_map(move |v| GrayMap::new(h, w, v).unwrap()),
            prop::collection::vec(prop::bool::ANY, h * w)
                .prop_map(move |v| GrayMap::new(h, w, v.into_iter().map(|b| if b { 1.0 } else { 0.0 }).collect()).unwrap()),
        ))
    ) {
        let f = f_measure(&pred, &gt, 0.3).unwrap();
        for v in [f.value, f.precision, f.recall] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert_eq!(f.recall_undefined, gt.values().iter().all(|v| *v == 0.0));
    }

    #[test]
    fn dropping_a_binary_hit_lowers_recall(bits in prop::collection::vec(prop::bool::ANY, 2..40), pick in any::<prop::sample::Index>()) {
        let n = bits.len();
        let gt = GrayMap::new(1, n, vec![1.0; n]).unwrap();
        let hits: Vec<usize> = (0..n).filter(|i| bits[*i]).collect();
        prop_assume!(!hits.is_empty());
        let to_map = |b: &[bool]| GrayMap::new(1, n, b.iter().map(|x| if *x { 1.0 } else { 0.0 }).collect()).unwrap();
        let before = f_measure(&to_map(&bits), &gt, 0.3).unwrap();
        let mut dropped = bits.clone();
        dropped[hits[pick.index(hits.len())]] = false;
        let after = f_measure(&to_map(&dropped), &gt, 0.3).unwrap();
        prop_assert!(after.recall < before.recall);
    }
}
