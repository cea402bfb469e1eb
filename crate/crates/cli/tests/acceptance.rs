//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any failed.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use proxylight::dataset::{sample_exemplar, MANIFEST_FILE};
use proxylight::image::synth::{synth_low_light, synth_scene};
use proxylight::image::{write_image, Raster};
use proxylight::metrics::{weighted_f, DepthMap, GrayMap};
use proxylight::{
    build_mask, depth_metrics, dft2, f_measure, idft2, mae, naive_dft2, ringing_energy, synth_step_image, translate,
    EncodeFormat, Mode, RasterImage, TranslationParams,
};

type Check = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_image(h: usize, w: usize, c: usize, rng: &mut ChaCha8Rng) -> RasterImage {
    Raster::from_fn(h, w, c, |_, _, _| rng.gen()).unwrap()
}

fn params(l: f64, u: f64, g: f64, mode: Mode) -> TranslationParams {
    TranslationParams::new(l, u, g, mode).unwrap()
}

fn within_time(start: Instant, limit: Duration) -> Result<Duration, String> {
    let elapsed = start.elapsed();
    ensure(elapsed < limit, || format!("took {elapsed:.2?}, limit {limit:?}"))?;
    Ok(elapsed)
}

/// dft2 against the brute-force transform, and round trip.
fn ac1_spectral_oracle() -> Check {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let sizes = [(7, 5), (8, 8), (16, 16), (15, 16)];
    let (mut worst_bin, mut worst_pixel) = (0.0f64, 0.0f64);
    for k in 0..200 {
        let (h, w) = sizes[k % sizes.len()];
        let img = random_image(h, w, 1, &mut rng);
        let fast = dft2(&img);
        let slow = naive_dft2(&img).map_err(|e| e.to_string())?;
        for (f, s) in fast.channels().iter().zip(slow.channels()) {
            for i in 0..h * w {
                worst_bin = worst_bin.max((f.complex(i) - s.complex(i)).norm());
                worst_bin = worst_bin.max((f.amplitude()[i] - s.amplitude()[i]).abs());
            }
        }
        let back = idft2(&fast);
        for (a, b) in back.data.iter().zip(img.data()) {
            worst_pixel = worst_pixel.max((a - b).abs());
        }
    }
    ensure(worst_bin <= 1e-8, || format!("bin error {worst_bin:e} > 1e-8"))?;
    ensure(worst_pixel <= 1e-9, || format!("round-trip error {worst_pixel:e} > 1e-9"))?;
    let t = within_time(start, Duration::from_secs(10))?;
    Ok(format!("max bin err {worst_bin:.2e}, max round-trip err {worst_pixel:.2e}, {t:.2?}"))
}

fn ac2_parseval() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let img = random_image(12, 12, 1, &mut rng);
        let pixel: f64 = img.data().iter().map(|v| v * v).sum();
        let spectral = dft2(&img).channels()[0].energy() / 144.0;
        worst = worst.max(((pixel - spectral) / pixel).abs());
    }
    ensure(worst <= 1e-8, || format!("relative error {worst:e} > 1e-8"))?;
    Ok(format!("max relative error {worst:.2e}"))
}

fn ac3_mask() -> Check {
    let start = Instant::now();
    let (h, w) = (480usize, 640usize);
    let mask = build_mask::<f64>(h, w, &params(0.01, 0.1, 3.5, Mode::Ours));
    // Region extents written out independently: λ·H/2 and λ·W/2.
    let (upper_m, upper_n) = (24.0, 32.0);
    let (lower_m, lower_n) = (2.4, 3.2);
    let mut band_bins = 0usize;
    for row in 0..h {
        for col in 0..w {
            let (m, n) = (row as isize - 240, col as isize - 320);
            let (am, an) = (m.abs() as f64, n.abs() as f64);
            let in_u = am <= upper_m && an <= upper_n;
            let in_l = am <= lower_m && an <= lower_n;
            let a = mask.alpha()[row * w + col];
            ensure((0.0..=1.0).contains(&a), || format!("alpha({m},{n}) = {a} outside [0,1]"))?;
            if !in_u || in_l {
                ensure(a == 0.0, || format!("alpha({m},{n}) = {a}, expected 0 outside the band"))?;
            } else {
                band_bins += 1;
            }
            if in_u && (am == upper_m || an == upper_n) {
                ensure(a <= 1e-12, || format!("boundary alpha({m},{n}) = {a:e}"))?;
            }
            if row > 0 && col > 0 {
                let mirrored = mask.at(-m, -n);
                ensure(a == mirrored, || format!("alpha({m},{n}) = {a} but alpha({},{}) = {mirrored}", -m, -n))?;
            }
        }
    }
    for (m, n) in [(3, 0), (0, 4), (-3, 0), (0, -4), (3, 4)] {
        ensure(mask.at(m, n) > 0.0, || format!("alpha({m},{n}) should be positive"))?;
    }
    ensure(!mask.is_degenerate(), || "band unexpectedly empty".into())?;
    let t = within_time(start, Duration::from_secs(1))?;
    Ok(format!("{band_bins} band bins checked, {t:.2?}"))
}

fn max_abs_diff(a: &RasterImage, b: &RasterImage) -> f64 {
    a.data().iter().zip(b.data()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn ac4_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let unit = params(0.01, 0.1, 1.0, Mode::Ours);
    let mut worst = 0.0f64;
    let mut images: Vec<RasterImage> = (0..20).map(|_| random_image(48, 64, 3, &mut rng)).collect();
    images.extend((0..5).map(|s| synth_scene(120, 160, 100 + s).unwrap()));
    for img in &images {
        let out = translate(img, img, &unit).map_err(|e| e.to_string())?;
        worst = worst.max(max_abs_diff(&out.image, img));
    }
    let dark: RasterImage = synth_low_light(9, 7, 0.05, 3).unwrap();
    for s in 0..5 {
        let img: RasterImage = random_image(9, 7, 3, &mut rng);
        let out = translate(&img, &dark, &unit).map_err(|e| e.to_string())?;
        ensure(out.degenerate_band, || "expected an empty band at 9x7".into())?;
        worst = worst.max(max_abs_diff(&out.image, &img));
        let natural: RasterImage = synth_scene(8, 8, 200 + s).unwrap();
        let out = translate(&natural, &dark, &unit).map_err(|e| e.to_string())?;
        ensure(out.degenerate_band, || "expected an empty band at 8x8".into())?;
        worst = worst.max(max_abs_diff(&out.image, &natural));
    }
    ensure(worst <= 1e-6, || format!("max deviation {worst:e} > 1e-6"))?;
    Ok(format!("max deviation {worst:.2e} over 35 images"))
}

fn ac5_gamma_order() -> Check {
    let dark: RasterImage = synth_low_light(120, 160, 0.05, 55).unwrap();
    let gammas = [1.0, 2.5, 3.5, 6.0];
    for s in 0..10 {
        let img: RasterImage = synth_scene(120, 160, 500 + s).unwrap();
        let means: Vec<f64> = gammas
            .iter()
            .map(|g| translate(&img, &dark, &params(0.01, 0.1, *g, Mode::Ours)).map(|p| p.image.mean()))
            .collect::<Result<_, _>>()
            .map_err(|e| e.to_string())?;
        ensure(means.windows(2).all(|w| w[1] < w[0]), || {
            format!("image {s}: means {means:?} not strictly decreasing")
        })?;
    }
    Ok("10/10 images strictly darker as gamma rises through 1, 2.5, 3.5, 6".into())
}

fn ac6_ringing() -> Check {
    let start = Instant::now();
    let step: RasterImage = synth_step_image(256, 256, 3, 128, 0.2, 0.8).unwrap();
    let gamma = 2.5;
    let reference = step.powf(gamma);
    let ours = params(0.01, 0.1, gamma, Mode::Ours);
    let rect = ours.with_mode(Mode::AblationRect);
    let mut wins = 0;
    let mut detail = Vec::new();
    for trial in 0..10 {
        let dark: RasterImage = synth_low_light(256, 256, 0.05, 900 + trial).unwrap();
        let e_rect = ringing_energy(&translate(&step, &dark, &rect).map_err(|e| e.to_string())?.image, &reference)
            .map_err(|e| e.to_string())?;
        let e_ours = ringing_energy(&translate(&step, &dark, &ours).map_err(|e| e.to_string())?.image, &reference)
            .map_err(|e| e.to_string())?;
        if e_rect > e_ours {
            wins += 1;
        }
        detail.push(format!("{:.1}", e_rect / e_ours.max(f64::MIN_POSITIVE)));
    }
    ensure(wins >= 9, || format!("rect > ours in only {wins}/10 trials (ratios {detail:?})"))?;
    let t = within_time(start, Duration::from_secs(30))?;
    Ok(format!("rect > ours in {wins}/10 trials, energy ratios [{}], {t:.2?}", detail.join(", ")))
}

fn ac7_darkening() -> Check {
    let p = TranslationParams::default();
    let mut worst_ratio = 0.0f64;
    for s in 0..20 {
        let img: RasterImage = synth_scene(96, 128, 700 + s).unwrap();
        let dark: RasterImage = synth_low_light(80, 100, 0.04 + 0.002 * s as f64, 800 + s).unwrap();
        ensure(dark.mean() < 0.1, || format!("exemplar {s} mean {} not below 0.1", dark.mean()))?;
        let out = translate(&img, &dark, &p).map_err(|e| e.to_string())?;
        ensure(out.image.mean() < img.mean(), || {
            format!("image {s}: proxy mean {} >= {}", out.image.mean(), img.mean())
        })?;
        worst_ratio = worst_ratio.max(out.image.mean() / img.mean());
    }
    Ok(format!("20/20 proxies darker; largest proxy/well mean ratio {worst_ratio:.3}"))
}

fn hash_dir(dir: &Path) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let digest = Sha256::digest(std::fs::read(&path).unwrap());
        out.insert(path.file_name().unwrap().to_string_lossy().into_owned(), format!("{digest:x}"));
    }
    out
}

fn cli(args: &[&str]) -> i32 {
    let mut argv = vec!["proxylight"];
    argv.extend_from_slice(args);
    proxylight_cli::run(argv, &mut std::io::sink())
}

fn make_dataset(root: &Path, count: usize, distinct: usize, h: usize, w: usize) -> (PathBuf, PathBuf) {
    let well = root.join("well");
    let pool = root.join("pool");
    std::fs::create_dir_all(&well).unwrap();
    std::fs::create_dir_all(&pool).unwrap();
    let sources: Vec<Vec<u8>> = (0..distinct)
        .map(|s| {
            proxylight::encode_image(&synth_scene::<f64>(h, w, 1000 + s as u64).unwrap(), EncodeFormat::Png).unwrap()
        })
        .collect();
    for i in 0..count {
        std::fs::write(well.join(format!("img_{i:04}.png")), &sources[i % distinct]).unwrap();
    }
    for k in 0..5 {
        let dark: RasterImage = synth_low_light(h / 2 + 7 * k, w / 2 + 3 * k, 0.05, 2000 + k as u64).unwrap();
        write_image(&dark, pool.join(format!("low_{k}.png")), EncodeFormat::Png).unwrap();
    }
    (well, pool)
}

fn ac8_determinism() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (well, pool) = make_dataset(tmp.path(), 16, 16, 60, 80);
    let run = |name: &str, workers: &str| -> Result<BTreeMap<String, String>, String> {
        let out = tmp.path().join(name);
        let code = cli(&[
            "generate",
            "--well-dir",
            well.to_str().unwrap(),
            "--pool-dir",
            pool.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--seed",
            "7",
            "--workers",
            workers,
        ]);
        ensure(code == 0, || format!("generate exited with {code}"))?;
        ensure(out.join(MANIFEST_FILE).is_file(), || "manifest missing".into())?;
        Ok(hash_dir(&out))
    };
    let a = run("a", "1")?;
    let b = run("b", "1")?;
    let c = run("c", "8")?;
    ensure(a.len() == 17, || format!("expected 16 proxies plus a manifest, found {} files", a.len()))?;
    ensure(a == b, || "repeat run with --workers 1 differs".into())?;
    ensure(a == c, || "--workers 8 differs from --workers 1".into())?;
    Ok(format!("{} files hash-identical across 3 runs (workers 1, 1, 8)", a.len()))
}

fn ac9_uniform_sampling() -> Check {
    let mut counts = [0usize; 5];
    for i in 0..10_000 {
        counts[sample_exemplar(5, 20240601, i)] += 1;
    }
    let freqs: Vec<f64> = counts.iter().map(|c| *c as f64 / 10_000.0).collect();
    ensure(freqs.iter().all(|f| (f - 0.2).abs() <= 0.03), || format!("frequencies {freqs:?} outside 20% ± 3%"))?;
    Ok(format!("frequencies {freqs:?}"))
}

fn ac10_metrics() -> Check {
    let map = |v: &[f64]| GrayMap::new(1, v.len(), v.to_vec()).unwrap();
    let depth = |v: &[f64]| DepthMap::new(1, v.len(), v.to_vec()).unwrap();
    let e = |e: proxylight::Error| e.to_string();

    let a = map(&[0.1, 0.6, 0.3, 0.9]);
    ensure(mae(&a, &a).map_err(e)? == 0.0, || "mae(x, x) != 0".into())?;
    ensure(mae(&map(&[1.0; 4]), &map(&[0.0; 4])).map_err(e)? == 1.0, || "mae(1, 0) != 1".into())?;
    let m = mae(&map(&[0.2, 0.8]), &map(&[0.0, 1.0])).map_err(e)?;
    ensure((m - 0.2).abs() <= 1e-9, || format!("mae example {m} != 0.2"))?;

    let gt = map(&[1.0, 0.0, 0.0, 1.0, 0.0]);
    ensure(f_measure(&gt, &gt, 0.3).map_err(e)?.value == 1.0, || "F(gt, gt) != 1".into())?;
    ensure(f_measure(&map(&[0.0; 5]), &gt, 0.3).map_err(e)?.value == 0.0, || "F(0, gt) != 0".into())?;
    let f = f_measure(&map(&[1.0, 1.0]), &map(&[1.0, 0.0]), 0.3).map_err(e)?;
    let expected = 1.3 * 0.5 / (0.15 + 1.0);
    ensure(f.precision == 0.5 && f.recall == 1.0, || format!("P/R = {}/{}", f.precision, f.recall))?;
    ensure((f.value - expected).abs() <= 1e-9, || format!("F = {} != {expected}", f.value))?;
    ensure((weighted_f(0.5, 1.0, 0.3) - expected).abs() <= 1e-9, || "weighted_f mismatch".into())?;

    let g = depth(&[0.5, 0.25, 3.0]);
    let d = depth_metrics(&g, &g).map_err(e)?;
    ensure((d.delta1, d.delta2, d.delta3, d.rel, d.rmse) == (1.0, 1.0, 1.0, 0.0, 0.0), || format!("{d:?}"))?;
    let d = depth_metrics(&depth(&[0.625, 0.3125, 1.25]), &depth(&[0.5, 0.25, 1.0])).map_err(e)?;
    ensure((d.delta1, d.delta2, d.delta3) == (0.0, 1.0, 1.0), || format!("ratio 1.25 deltas {d:?}"))?;
    ensure((d.rel - 0.25).abs() <= 1e-9, || format!("REL {} != 0.25", d.rel))?;
    let d = depth_metrics(&depth(&[2.0; 4]), &depth(&[1.0; 4])).map_err(e)?;
    ensure((d.rmse - 1.0).abs() <= 1e-9 && (d.rel - 1.0).abs() <= 1e-9 && d.delta3 == 0.0, || format!("{d:?}"))?;
    Ok("all MAE, F-measure and depth examples reproduced".into())
}

fn ac11_throughput() -> Check {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let (well, pool) = make_dataset(tmp.path(), 100, 10, 480, 640);
    let timed = |workers: &str| -> Result<Duration, String> {
        let out = tmp.path().join(format!("out_{workers}"));
        let start = Instant::now();
        let code = cli(&[
            "generate",
            "--well-dir",
            well.to_str().unwrap(),
            "--pool-dir",
            pool.to_str().unwrap(),
            "--out-dir",
            out.to_str().unwrap(),
            "--workers",
            workers,
        ]);
        let elapsed = start.elapsed();
        ensure(code == 0, || format!("generate exited with {code}"))?;
        let written = std::fs::read_dir(&out).map_err(|e| e.to_string())?.count();
        ensure(written == 101, || format!("{written} files written, expected 100 proxies plus a manifest"))?;
        Ok(elapsed)
    };
    let four = timed("4")?;
    ensure(four < Duration::from_secs(60), || format!("100 proxies with 4 workers took {four:.2?} (limit 60 s)"))?;
    let one = timed("1")?;
    let speedup = one.as_secs_f64() / four.as_secs_f64();
    let cores = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
    ensure(speedup >= 2.5, || {
        format!("speedup {speedup:.2}x from 1 to 4 workers (need 2.5x; 1 worker {one:.2?}, 4 workers {four:.2?}, {cores} CPU(s) available)")
    })?;
    Ok(format!("4 workers {four:.2?}, 1 worker {one:.2?}, speedup {speedup:.2}x on {cores} CPU(s)"))
}

fn main() {
    let criteria: [Criterion; 11] = [
        ("AC1", "spectral oracle equivalence", ac1_spectral_oracle),
        ("AC2", "Parseval identity", ac2_parseval),
        ("AC3", "mask correctness 480x640", ac3_mask),
        ("AC4", "identity family", ac4_identity),
        ("AC5", "gamma monotonicity", ac5_gamma_order),
        ("AC6", "ringing suppression", ac6_ringing),
        ("AC7", "darkening toward exemplar", ac7_darkening),
        ("AC8", "batch determinism across worker counts", ac8_determinism),
        ("AC9", "exemplar sampling uniformity", ac9_uniform_sampling),
        ("AC10", "metrics self-consistency", ac10_metrics),
        ("AC11", "batch throughput and scaling", ac11_throughput),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (id, name, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| id.eq_ignore_ascii_case(f)) {
            continue;
        }
        match std::panic::catch_unwind(check) {
            Ok(Ok(detail)) => println!("[PASS] {id} {name}: {detail}"),
            Ok(Err(reason)) => {
                failed += 1;
                println!("[FAIL] {id} {name}: {reason}");
            }
            Err(_) => {
                failed += 1;
                println!("[FAIL] {id} {name}: panicked");
            }
        }
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all acceptance criteria passed");
}
