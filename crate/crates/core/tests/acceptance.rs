//! Acceptance criteria. Each test prints exactly one `PASS`, `FAIL` or `SKIP`
//! line to stderr and fails when its criterion fails.
//!
//! Dataset-gated criteria read their inputs from the environment:
//!
//! - `PAPYRION_DIBCO2019`: directory holding `B/images` and `B/gt`
//! - `PAPYRION_GRK`: directory of papyrus images named `<writer>_<n>.<ext>`

use std::collections::{BTreeMap, HashSet};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use papyrion::analysis::{pearson, Correlation};
use papyrion::augment::{
    compose_augmented, inpaint_telea, reproduce_entry, run_augmentation, synthesize_texture, AugmentConfig, AugmentJob, FragmentOverlay,
    MaskSource,
};
use papyrion::binarize::{
    grid_search, otsu_threshold, Binarizer, Gatos, GatosConstants, GridSpec, LocalMethod, LocalThreshParams, LocalThreshold, Objective, Otsu,
    Registry, Su,
};
use papyrion::corpus::{file_checksum, ingest_images, ingest_pairs, parse_writer_label};
use papyrion::features::{assign_clusters, describe_image, kmeans_fit, vlad_encode, Codebook, DescriptorSet, KmeansParams, Keypoint, VladOptions};
use papyrion::imgcore::io::{read_binary, read_raster, write_raster};
use papyrion::imgcore::{skeletonize, to_grayscale};
use papyrion::metrics::{self, BinMetricsReport};
use papyrion::writer::{nn_classify_eval, retrieval_eval, sample_reference_sets, Embedding, EmbeddingIndex, ReferenceCombination, WriterScore};
use papyrion::{BinaryImage, RasterImage};

type Check = Result<(), String>;

fn line(status: &str, name: &str, detail: &str) {
    let mut err = std::io::stderr().lock();
    let _ = writeln!(err, "{status} {name}: {detail}");
}

/// Criteria run one at a time so each is timed without competing for cores.
static SERIAL: Mutex<()> = Mutex::new(());

/// Runs one criterion under a time limit, prints its verdict and fails the test on FAIL.
fn criterion(name: &str, limit: Duration, body: impl FnOnce() -> Check) {
    let _guard = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let timing = format!("{:.2}s (limit {}s)", elapsed.as_secs_f64(), limit.as_secs());
    let outcome = outcome.and_then(|()| if elapsed <= limit { Ok(()) } else { Err(format!("too slow: {timing}")) });
    match outcome {
        Ok(()) => line("PASS", name, &timing),
        Err(e) => {
            line("FAIL", name, &format!("{e} [{timing}]"));
            panic!("{name}: {e}");
        }
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_binary(r: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> BinaryImage {
    let mask = (0..w * h).map(|_| r.gen_bool(density)).collect();
    BinaryImage::from_mask(w, h, mask).unwrap()
}

fn random_gray(r: &mut ChaCha8Rng, w: usize, h: usize) -> RasterImage {
    // smooth background, dark strokes and noise, so windows see both flat and busy regions
    let phase: f64 = r.gen_range(0.0..6.28);
    let noise: Vec<i32> = (0..w * h).map(|_| r.gen_range(-25..=25)).collect();
    let period = r.gen_range(5..12);
    RasterImage::from_gray_fn(w, h, |x, y| {
        let bg = 170.0 + 40.0 * ((x as f64 / 9.0 + phase).sin() * (y as f64 / 13.0).cos());
        let stroke = (x + 2 * y) % period < 2;
        let v = if stroke { 60.0 } else { bg } + noise[y * w + x] as f64;
        v.clamp(0.0, 255.0) as u8
    })
    .unwrap()
}

fn window_bounds(c: usize, side: usize, len: usize) -> std::ops::Range<usize> {
    let half = side / 2;
    c.saturating_sub(half)..(c + half + 1).min(len)
}

// ---------------------------------------------------------------------------
// metric oracles

fn ratio_percent(p: f64, r: f64) -> f64 {
    100.0 * 2.0 * p * r / (p + r)
}

fn oracle_fm(pred: &BinaryImage, gt: &BinaryImage) -> f64 {
    let (w, h) = gt.dims();
    let (mut tp, mut fp, mut fneg) = (0u64, 0u64, 0u64);
    for y in 0..h {
        for x in 0..w {
            match (pred.is_ink(x, y), gt.is_ink(x, y)) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fneg += 1,
                _ => {}
            }
        }
    }
    if tp == 0 && fp == 0 && fneg == 0 {
        return 100.0;
    }
    if tp == 0 {
        return 0.0;
    }
    ratio_percent(tp as f64 / (tp + fp) as f64, tp as f64 / (tp + fneg) as f64)
}

fn oracle_pfm(pred: &BinaryImage, gt: &BinaryImage) -> f64 {
    let skel = skeletonize(gt);
    let (w, h) = gt.dims();
    let (mut tp, mut predicted, mut skel_total, mut skel_hit) = (0u64, 0u64, 0u64, 0u64);
    for y in 0..h {
        for x in 0..w {
            let p = pred.is_ink(x, y);
            predicted += p as u64;
            tp += (p && gt.is_ink(x, y)) as u64;
            skel_total += skel.is_ink(x, y) as u64;
            skel_hit += (p && skel.is_ink(x, y)) as u64;
        }
    }
    if predicted == 0 && skel_total == 0 {
        return 100.0;
    }
    if tp == 0 || skel_hit == 0 {
        return 0.0;
    }
    ratio_percent(tp as f64 / predicted as f64, skel_hit as f64 / skel_total as f64)
}

fn oracle_psnr(pred: &BinaryImage, gt: &BinaryImage) -> f64 {
    let (w, h) = gt.dims();
    let mut diff = 0usize;
    for y in 0..h {
        for x in 0..w {
            diff += (pred.is_ink(x, y) != gt.is_ink(x, y)) as usize;
        }
    }
    if diff == 0 {
        return f64::INFINITY;
    }
    let mse = diff as f64 / (w * h) as f64;
    10.0 * (1.0 / mse).log10()
}

fn oracle_drd(pred: &BinaryImage, gt: &BinaryImage) -> Option<f64> {
    let mut wm = [[0f64; 5]; 5];
    for (j, row) in wm.iter_mut().enumerate() {
        for (i, v) in row.iter_mut().enumerate() {
            let (di, dj) = (i as f64 - 2.0, j as f64 - 2.0);
            if di != 0.0 || dj != 0.0 {
                *v = 1.0 / (di * di + dj * dj).sqrt();
            }
        }
    }
    let total: f64 = wm.iter().flatten().sum();
    wm.iter_mut().flatten().for_each(|v| *v /= total);

    let (w, h) = gt.dims();
    let g = |x: isize, y: isize| x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h && gt.is_ink(x as usize, y as usize);
    let mut sum = 0.0;
    let mut flips = 0;
    for y in 0..h {
        for x in 0..w {
            let p = pred.is_ink(x, y);
            if p == gt.is_ink(x, y) {
                continue;
            }
            flips += 1;
            for (j, row) in wm.iter().enumerate() {
                for (i, wt) in row.iter().enumerate() {
                    let gv = g(x as isize + i as isize - 2, y as isize + j as isize - 2);
                    sum += (gv as i32 - p as i32).abs() as f64 * wt;
                }
            }
        }
    }
    let mut nubn = 0;
    for by in (0..h).step_by(8) {
        for bx in (0..w).step_by(8) {
            let cells: Vec<bool> = (by..(by + 8).min(h)).flat_map(|y| (bx..(bx + 8).min(w)).map(move |x| (x, y))).map(|(x, y)| gt.is_ink(x, y)).collect();
            if cells.iter().any(|&c| c) && cells.iter().any(|&c| !c) {
                nubn += 1;
            }
        }
    }
    match (flips, nubn) {
        (0, _) => Some(0.0),
        (_, 0) => None,
        _ => Some(sum / nubn as f64),
    }
}

#[test]
fn metric_oracle_suite() {
    criterion("metric oracle suite", Duration::from_secs(10), || {
        let mut r = rng(11);
        for case in 0..200 {
            let density = r.gen_range(0.05..0.6);
            let gt = random_binary(&mut r, 64, 64, density);
            let flip = r.gen_range(0.0..0.3);
            let noise = random_binary(&mut r, 64, 64, flip);
            let pred = BinaryImage::from_fn(64, 64, |x, y| gt.is_ink(x, y) != noise.is_ink(x, y));

            let fm = metrics::f_measure(&metrics::confusion(&pred, &gt).map_err(|e| e.to_string())?);
            ensure(fm == oracle_fm(&pred, &gt), || format!("case {case}: FM {fm} vs {}", oracle_fm(&pred, &gt)))?;
            let pfm = metrics::pseudo_f_measure(&pred, &gt).map_err(|e| e.to_string())?;
            ensure(pfm == oracle_pfm(&pred, &gt), || format!("case {case}: pFM {pfm} vs {}", oracle_pfm(&pred, &gt)))?;
            let psnr = metrics::psnr(&pred, &gt).map_err(|e| e.to_string())?;
            let want = oracle_psnr(&pred, &gt);
            ensure(psnr == want || (psnr - want).abs() <= 1e-12, || format!("case {case}: PSNR {psnr} vs {want}"))?;
            let drd = metrics::drd(&pred, &gt).map_err(|e| e.to_string())?;
            let want = oracle_drd(&pred, &gt).ok_or("oracle: degenerate ground truth")?;
            ensure((drd - want).abs() <= 1e-9, || format!("case {case}: DRD {drd} vs {want}"))?;
            let all = metrics::evaluate(&pred, &gt).map_err(|e| e.to_string())?;
            ensure(all == BinMetricsReport { fm, pfm, psnr, drd }, || format!("case {case}: evaluate disagrees with the single metrics"))?;
        }

        let gt = BinaryImage::from_fn(10, 10, |x, y| (3..7).contains(&x) && (2..8).contains(&y));
        let mut pred = gt.clone();
        pred.set(5, 5, false);
        let psnr = metrics::psnr(&pred, &gt).map_err(|e| e.to_string())?;
        ensure(psnr == 20.0, || format!("single flip PSNR {psnr}"))?;

        // block (0,0) uniform background, block (1,0) mixed: NUBN = 1
        let gt = BinaryImage::from_fn(16, 8, |x, y| x >= 12 && y >= 4);
        let mut pred = gt.clone();
        pred.set(3, 3, true);
        let k = metrics::drd_pixel(&pred, &gt, 3, 3);
        ensure(k == 1.0, || format!("uniform-neighbourhood DRD_k {k}"))?;
        let drd = metrics::drd(&pred, &gt).map_err(|e| e.to_string())?;
        ensure(drd == 1.0, || format!("single uniform flip DRD {drd}"))
    });
}

// ---------------------------------------------------------------------------
// binarizer oracles

/// Exhaustive scan with exact integer arithmetic. The between-class variance
/// for class 0 = {v < t} is (s0*N - S*n0)^2 / (N^2 * n0 * n1).
fn oracle_otsu(hist: &[u64; 256]) -> Option<u8> {
    let n: u128 = hist.iter().map(|&c| c as u128).sum();
    let s: u128 = hist.iter().enumerate().map(|(v, &c)| v as u128 * c as u128).sum();
    let mut best: Option<(u128, u128, u8)> = None;
    for t in 1..256usize {
        let n0: u128 = hist[..t].iter().map(|&c| c as u128).sum();
        let s0: u128 = hist[..t].iter().enumerate().map(|(v, &c)| v as u128 * c as u128).sum();
        if n0 == 0 || n0 == n {
            continue;
        }
        let diff = (s0 * n).abs_diff(s * n0);
        let num = diff * diff;
        let den = n0 * (n - n0);
        if num == 0 {
            continue;
        }
        if best.map_or(true, |(bn, bd, _)| num * bd > bn * den) {
            best = Some((num, den, t as u8));
        }
    }
    best.map(|b| b.2)
}

fn hist_of(values: impl Iterator<Item = u8>) -> [u64; 256] {
    let mut h = [0u64; 256];
    values.for_each(|v| h[v as usize] += 1);
    h
}

fn window_sums(img: &RasterImage, x: usize, y: usize, side: usize) -> (u64, u64, u64) {
    let (w, h) = img.dims();
    let (mut n, mut s, mut ss) = (0u64, 0u64, 0u64);
    for yy in window_bounds(y, side, h) {
        for xx in window_bounds(x, side, w) {
            let v = img.get(xx, yy) as u64;
            n += 1;
            s += v;
            ss += v * v;
        }
    }
    (n, s, ss)
}

fn oracle_local(img: &RasterImage, method: LocalMethod, side: usize, k: f64, big_r: f64) -> BinaryImage {
    BinaryImage::from_fn(img.width(), img.height(), |x, y| {
        let (n, s, ss) = window_sums(img, x, y, side);
        let i = img.get(x, y) as f64;
        let nf = n as f64;
        let m = s as f64 / nf;
        let t = match method {
            LocalMethod::Sauvola => {
                let sd = (ss as f64 / nf - m * m).max(0.0).sqrt();
                m * (1.0 + k * (sd / big_r - 1.0))
            }
            LocalMethod::Nick => m + k * ((ss as f64 - m * m) / nf).sqrt(),
            LocalMethod::Trsingh => {
                let delta = (i - m) / 255.0;
                m * (1.0 + k * (delta / (1.0 - delta) - 1.0))
            }
        };
        i <= t
    })
}

fn oracle_su(img: &RasterImage, side: usize, min_n: usize) -> BinaryImage {
    let (w, h) = img.dims();
    let mut quant = vec![0u8; w * h];
    for y in 0..h {
        for x in 0..w {
            let (mut lo, mut hi) = (255f64, 0f64);
            for yy in window_bounds(y, 3, h) {
                for xx in window_bounds(x, 3, w) {
                    let v = img.get(xx, yy) as f64;
                    lo = lo.min(v);
                    hi = hi.max(v);
                }
            }
            let c = (hi - lo) / (hi + lo + 1e-8);
            quant[y * w + x] = (c * 255.0).round().clamp(0.0, 255.0) as u8;
        }
    }
    let hc: Vec<bool> = match oracle_otsu(&hist_of(quant.iter().copied())) {
        Some(t) => quant.iter().map(|&q| q >= t).collect(),
        None => vec![false; w * h],
    };
    BinaryImage::from_fn(w, h, |x, y| {
        let (mut n, mut s, mut ss) = (0u64, 0u64, 0u64);
        for yy in window_bounds(y, side, h) {
            for xx in window_bounds(x, side, w) {
                if hc[yy * w + xx] {
                    let v = img.get(xx, yy) as u64;
                    n += 1;
                    s += v;
                    ss += v * v;
                }
            }
        }
        if n == 0 || n < min_n as u64 {
            return false;
        }
        let nf = n as f64;
        let mean = s as f64 / nf;
        let sd = (ss as f64 / nf - mean * mean).max(0.0).sqrt();
        img.get(x, y) as f64 <= mean + sd / 2.0
    })
}

fn oracle_gatos(img: &RasterImage, side: usize, glyph: usize, c: GatosConstants) -> Option<BinaryImage> {
    let (w, h) = img.dims();
    // stage 1: 3x3 mean, rounded half up
    let filtered = RasterImage::from_gray_fn(w, h, |x, y| {
        let (n, s, _) = window_sums(img, x, y, 3);
        ((2 * s + n) / (2 * n)) as u8
    })
    .unwrap();
    // stage 2: rough Sauvola
    let rough = oracle_local(&filtered, LocalMethod::Sauvola, side, 0.2, 128.0);
    let ink = rough.ink_count();
    if ink == 0 {
        return Some(BinaryImage::new(w, h));
    }
    if ink == w * h {
        return None;
    }
    // stage 3: background surface
    let (mut bg_n, mut bg_s) = (0u64, 0u64);
    for y in 0..h {
        for x in 0..w {
            if !rough.is_ink(x, y) {
                bg_n += 1;
                bg_s += filtered.get(x, y) as u64;
            }
        }
    }
    let global = bg_s as f64 / bg_n as f64;
    let gside = 2 * glyph + 1;
    let mut surface = vec![0f64; w * h];
    for y in 0..h {
        for x in 0..w {
            surface[y * w + x] = if !rough.is_ink(x, y) {
                filtered.get(x, y) as f64
            } else {
                let (mut n, mut s) = (0u64, 0u64);
                for yy in window_bounds(y, gside, h) {
                    for xx in window_bounds(x, gside, w) {
                        if !rough.is_ink(xx, yy) {
                            n += 1;
                            s += filtered.get(xx, yy) as u64;
                        }
                    }
                }
                if n == 0 {
                    global
                } else {
                    s as f64 / n as f64
                }
            };
        }
    }
    // stage 4: adaptive distance
    let mut gap = 0.0;
    for y in 0..h {
        for x in 0..w {
            if rough.is_ink(x, y) {
                gap += surface[y * w + x] - filtered.get(x, y) as f64;
            }
        }
    }
    let delta = gap / ink as f64;
    let b = global;
    Some(BinaryImage::from_fn(w, h, |x, y| {
        let bg = surface[y * w + x];
        let sig = (1.0 - c.p2) / (1.0 + (-4.0 * bg / (b * (1.0 - c.p1)) + 2.0 * (1.0 + c.p1) / (1.0 - c.p1)).exp());
        let d = c.q * delta * (sig + c.p2);
        bg - filtered.get(x, y) as f64 > d
    }))
}

fn nontrivial(b: &BinaryImage, what: &str) -> Check {
    let n = b.ink_count();
    ensure(n > 0 && n < b.mask().len(), || format!("{what}: degenerate output with {n} ink pixels"))
}

fn first_difference(a: &BinaryImage, b: &BinaryImage) -> Option<(usize, usize)> {
    let w = a.width();
    a.mask().iter().zip(b.mask()).position(|(p, q)| p != q).map(|i| (i % w, i / w))
}

#[test]
fn binarizer_oracle_suite() {
    criterion("binarizer oracle suite", Duration::from_secs(60), || {
        let mut r = rng(23);
        for case in 0..100 {
            let mut hist = [0u64; 256];
            let occupied = r.gen_range(1..=256);
            for _ in 0..occupied {
                hist[r.gen_range(0..256)] = r.gen_range(1..=200);
            }
            let got = otsu_threshold(&hist);
            let want = oracle_otsu(&hist);
            ensure(got == want, || format!("histogram {case}: Otsu {got:?} vs exhaustive {want:?}"))?;
        }
        let img = random_gray(&mut r, 64, 64);
        let t = oracle_otsu(&hist_of(img.data().iter().copied())).ok_or("random image has a single level")?;
        let b = Otsu.binarize(&img, &LocalThreshParams::default()).map_err(|e| e.to_string())?;
        ensure(b == BinaryImage::from_fn(64, 64, |x, y| img.get(x, y) < t), || "Otsu ink set is not {v < T}".into())?;

        for case in 0..20 {
            let img = random_gray(&mut r, 64, 64);
            let side = 2 * r.gen_range(1..=20) + 1;
            for m in [LocalMethod::Sauvola, LocalMethod::Nick, LocalMethod::Trsingh] {
                let p = LocalThreshParams::with_window(side);
                let got = LocalThreshold(m).binarize(&img, &p).map_err(|e| e.to_string())?;
                let want = oracle_local(&img, m, side, m.default_k(), 128.0);
                ensure(got == want, || format!("image {case} {m:?} window {side}: first difference at {:?}", first_difference(&got, &want)))?;
                nontrivial(&got, &format!("image {case} {m:?}"))?;
            }
        }

        let square = RasterImage::from_gray_fn(48, 48, |x, y| if (14..34).contains(&x) && (14..34).contains(&y) { 0 } else { 255 }).unwrap();
        let mut su_cases = vec![(square, 9, 5)];
        for _ in 0..5 {
            su_cases.push((random_gray(&mut r, 64, 64), 2 * r.gen_range(2..10) + 1, r.gen_range(1..40)));
        }
        for (case, (img, side, min_n)) in su_cases.iter().enumerate() {
            let p = LocalThreshParams { window: *side, min_n: *min_n, ..Default::default() };
            let got = Su.binarize(img, &p).map_err(|e| e.to_string())?;
            let want = oracle_su(img, *side, *min_n);
            ensure(got == want, || format!("Su case {case}: first difference at {:?}", first_difference(&got, &want)))?;
            nontrivial(&got, &format!("Su case {case}"))?;
        }

        let gradient = RasterImage::from_gray_fn(64, 64, |x, y| {
            if (y % 16 == 7 || y % 16 == 8) && (6..58).contains(&x) {
                45
            } else {
                (140 + x + y / 2) as u8
            }
        })
        .unwrap();
        let mut gatos_cases = vec![(gradient, 15, 10)];
        for _ in 0..3 {
            gatos_cases.push((random_gray(&mut r, 64, 64), 2 * r.gen_range(3..12) + 1, r.gen_range(3..15)));
        }
        for (case, (img, side, glyph)) in gatos_cases.iter().enumerate() {
            let p = LocalThreshParams { window: *side, glyph: *glyph, ..Default::default() };
            let got = Gatos.binarize(img, &p).map_err(|e| e.to_string())?;
            let want = oracle_gatos(img, *side, *glyph, GatosConstants::default()).ok_or("oracle: image entirely rough ink")?;
            ensure(got == want, || format!("Gatos case {case}: first difference at {:?}", first_difference(&got, &want)))?;
            nontrivial(&got, &format!("Gatos case {case}"))?;
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// grid search

fn degraded_pair(seed: u64, w: usize, h: usize) -> (RasterImage, BinaryImage) {
    let mut r = rng(seed);
    let spacing = r.gen_range(14..20);
    let thickness = r.gen_range(2..4);
    let gt = BinaryImage::from_fn(w, h, |x, y| {
        let line = y % spacing;
        line >= 4 && line < 4 + thickness && (8..w - 8).contains(&x) && (x / 7 + y / spacing) % 4 != 0
    });
    let stain_x = r.gen_range(0..w) as f64;
    let stain_y = r.gen_range(0..h) as f64;
    let noise: Vec<i32> = (0..w * h).map(|_| r.gen_range(-20..=20)).collect();
    let gray = RasterImage::from_gray_fn(w, h, |x, y| {
        let d = ((x as f64 - stain_x).powi(2) + (y as f64 - stain_y).powi(2)).sqrt();
        let bg = 200.0 - 70.0 * (-d / 30.0).exp() - 0.2 * x as f64;
        let v = if gt.is_ink(x, y) { bg - 90.0 } else { bg } + noise[y * w + x] as f64;
        v.clamp(0.0, 255.0) as u8
    })
    .unwrap();
    (gray, gt)
}

#[test]
fn grid_search_consistency() {
    criterion("grid-search consistency", Duration::from_secs(300), || {
        let pairs: Vec<_> = (0..3).map(|i| degraded_pair(100 + i, 128, 128)).collect();
        let registry = Registry::builtin();
        let spec = GridSpec::default_search(registry.names().iter().map(|s| s.to_string()).collect());
        let expected_cells = BTreeMap::from([("otsu", 1), ("sauvola", 12), ("nick", 12), ("trsingh", 12), ("su", 144), ("gatos", 120)]);
        for objective in [Objective::Fm, Objective::Drd] {
            let result = grid_search(&pairs, &spec, objective, &registry, &LocalThreshParams::default()).map_err(|e| e.to_string())?;
            for (method, cells) in &expected_cells {
                let rows: Vec<_> = result.table.iter().filter(|c| c.method == *method).collect();
                ensure(rows.len() == *cells, || format!("{method}: {} table rows, expected {cells}", rows.len()))?;
                let best: Vec<_> = result.best.iter().filter(|c| c.method == *method).collect();
                ensure(best.len() == 1, || format!("{method}: {} optima", best.len()))?;
                let best = best[0];
                ensure(rows.iter().any(|c| *c == best), || format!("{method}: optimum is not a table row"))?;
                for c in &rows {
                    ensure(!objective.is_better(c.score, best.score), || format!("{method} {:?}: cell {:?} beats optimum {:?}", objective, c, best))?;
                    let earlier = (c.window, c.second) < (best.window, best.second);
                    ensure(!(earlier && c.score == best.score), || format!("{method}: tie not broken towards {:?}", c))?;
                }
            }
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// augmentation

fn random_rgb(r: &mut ChaCha8Rng, w: usize, h: usize) -> RasterImage {
    RasterImage::new(w, h, 3, (0..w * h * 3).map(|_| r.gen()).collect()).unwrap()
}

fn synthetic_papyrus(path: &Path, seed: u64) {
    let mut r = rng(seed);
    let (cx, cy) = (r.gen_range(35.0..45.0), r.gen_range(28.0..36.0));
    let img = RasterImage::new(
        80,
        64,
        3,
        (0..64)
            .flat_map(|y| (0..80).map(move |x| (x, y)))
            .flat_map(|(x, y)| {
                let dx = (x as f64 - cx) / 30.0;
                let dy = (y as f64 - cy) / 22.0;
                if dx * dx + dy * dy > 1.0 {
                    [235u8, 232, 228]
                } else if y % 9 < 2 && x % 11 < 8 {
                    [40, 30, 25]
                } else {
                    [150 + (x % 7) as u8, 110 + (y % 5) as u8, 70]
                }
            })
            .collect(),
    )
    .unwrap();
    write_raster(path, &img).unwrap();
}

#[test]
fn augmentation_suite() {
    criterion("augmentation suite", Duration::from_secs(30), || {
        let mut r = rng(37);
        for case in 0..20 {
            let img = random_rgb(&mut r, 48, 40);
            let raw = BinaryImage::from_fn(48, 40, |x, y| ((x * 7 + y * 3 + case) % 23) < 2 && x > 2 && y > 2);
            let dilated = raw.dilate8();
            let out = inpaint_telea(&img, &dilated, 5).map_err(|e| e.to_string())?;
            let texture = synthesize_texture(&img, MaskSource::External(&raw), 5).map_err(|e| e.to_string())?;
            ensure(out == texture, || format!("case {case}: texture differs from inpainting the dilated mask"))?;
            for y in 0..40 {
                for x in 0..48 {
                    if !dilated.is_ink(x, y) && out.pixel(x, y) != img.pixel(x, y) {
                        return Err(format!("case {case}: pixel ({x},{y}) outside the mask changed"));
                    }
                }
            }
        }

        for v in [0u8, 1, 77, 128, 254, 255] {
            let img = RasterImage::filled(15, 15, 3, v).unwrap();
            let mut mask = BinaryImage::new(15, 15);
            mask.set(r.gen_range(3..12), r.gen_range(3..12), true);
            let out = inpaint_telea(&img, &mask, 5).map_err(|e| e.to_string())?;
            ensure(out == img, || format!("single hole in constant {v} not filled exactly"))?;
        }

        let plane = |x: usize| 40.0 + 4.5 * x as f64;
        let img = RasterImage::new(40, 24, 3, (0..24).flat_map(|_| (0..40).flat_map(|x| [plane(x).round() as u8; 3])).collect()).unwrap();
        let hole = BinaryImage::from_fn(40, 24, |x, y| (18..23).contains(&x) && (10..15).contains(&y));
        let out = inpaint_telea(&img, &hole, 5).map_err(|e| e.to_string())?;
        for y in 10..15 {
            for x in 18..23 {
                let got = out.pixel(x, y)[0] as f64;
                ensure((got - plane(x)).abs() <= 2.0, || format!("gradient hole ({x},{y}): {got} vs {}", plane(x)))?;
            }
        }

        let src = random_rgb(&mut r, 100, 100);
        let tex = random_rgb(&mut r, 100, 100);
        let overlay = FragmentOverlay::new(RasterImage::filled(100, 100, 4, 0).unwrap()).map_err(|e| e.to_string())?;
        let out = compose_augmented(&src, &tex, &overlay, &AugmentConfig::default());
        for (i, ((o, s), t)) in out.data().iter().zip(src.data()).zip(tex.data()).enumerate() {
            // 0.7 t + 0.3 s rounded half away from zero, in tenths
            let want = ((7 * *t as u32 + 3 * *s as u32 + 5) / 10) as u8;
            ensure(*o == want, || format!("compose byte {i}: {o} vs {want}"))?;
        }

        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        let (sources, papyri) = (dir.path().join("sources"), dir.path().join("papyri"));
        std::fs::create_dir_all(&sources).unwrap();
        std::fs::create_dir_all(&papyri).unwrap();
        let mut src_paths = Vec::new();
        for i in 0..4 {
            let p = sources.join(format!("doc{i}.png"));
            write_raster(&p, &random_rgb(&mut r, 60 + 10 * i, 50)).unwrap();
            src_paths.push(p);
        }
        let pap_paths: Vec<PathBuf> = (0..3)
            .map(|i| {
                let p = papyri.join(format!("pap{i}.png"));
                synthetic_papyrus(&p, 500 + i);
                p
            })
            .collect();
        let sauvola = LocalThreshold(LocalMethod::Sauvola);
        let job = |out: &str| AugmentJob {
            sources: src_paths.clone(),
            papyri: pap_paths.clone(),
            masks: None,
            out_dir: dir.path().join(out),
            cfg: AugmentConfig { seed: 99, ..Default::default() },
            mask_binarizer: &sauvola,
            mask_params: LocalThreshParams::with_window(15),
        };
        let first = run_augmentation(&job("a")).map_err(|e| e.to_string())?;
        let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
        let second = pool.install(|| run_augmentation(&job("b"))).map_err(|e| e.to_string())?;
        ensure(first.entries == second.entries, || "manifests differ between runs".into())?;
        for e in &first.entries {
            let a = file_checksum(&dir.path().join("a").join(&e.output)).map_err(|e| e.to_string())?;
            let b = file_checksum(&dir.path().join("b").join(&e.output)).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("{}: checksum {a} vs {b}", e.output))?;
            let again = reproduce_entry(e, &job("a")).map_err(|e| e.to_string())?;
            let path = dir.path().join("c").join(&e.output);
            std::fs::create_dir_all(path.parent().unwrap()).unwrap();
            write_raster(&path, &again).map_err(|e| e.to_string())?;
            let c = file_checksum(&path).map_err(|e| e.to_string())?;
            ensure(a == c, || format!("{}: regenerated checksum {c} vs {a}", e.output))?;
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// features and VLAD

fn random_set(r: &mut ChaCha8Rng, n: usize, d: usize) -> DescriptorSet {
    let values = (0..n * d).map(|_| r.gen_range(0.0f32..1.0)).collect();
    let kps = (0..n).map(|i| Keypoint { x: i as u32, y: 0 }).collect();
    DescriptorSet::new("img", d, values, kps).unwrap()
}

fn shuffled(set: &DescriptorSet, r: &mut ChaCha8Rng) -> DescriptorSet {
    let mut order: Vec<usize> = (0..set.len()).collect();
    order.shuffle(r);
    let values = order.iter().flat_map(|&i| set.row(i).to_vec()).collect();
    let kps = order.iter().map(|&i| set.keypoints[i]).collect();
    DescriptorSet::new(set.image_id.clone(), set.d, values, kps).unwrap()
}

fn naive_argmin(x: &[f32], centroids: &[Vec<f64>]) -> usize {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let mut dist = 0.0;
        for (a, b) in x.iter().zip(c) {
            dist += (*a as f64 - b) * (*a as f64 - b);
        }
        if dist < best.1 {
            best = (j, dist);
        }
    }
    best.0
}

#[test]
fn feature_vlad_suite() {
    criterion("feature/VLAD suite", Duration::from_secs(60), || {
        let mut r = rng(41);
        let params = KmeansParams::default();
        let set = random_set(&mut r, 400, 16);
        let cb = kmeans_fit(&set.values, 16, 8, 5, &params).map_err(|e| e.to_string())?;
        for opts in [VladOptions { intra_norm: false }, VladOptions { intra_norm: true }] {
            let base = vlad_encode(&set, &cb, opts).map_err(|e| e.to_string())?;
            ensure(!base.degenerate, || "random set flagged degenerate".into())?;
            for s in 0..100 {
                let v = vlad_encode(&shuffled(&set, &mut r), &cb, opts).map_err(|e| e.to_string())?;
                let same = v.values.iter().zip(&base.values).all(|(a, b)| a.to_bits() == b.to_bits());
                ensure(same, || format!("shuffle {s} ({opts:?}) changed the encoding"))?;
            }
        }

        let rows: Vec<Vec<f64>> = (0..5).map(|j| (0..16).map(|i| ((i + 3 * j) % 7) as f64 / 8.0).collect()).collect();
        let centred = Codebook::from_centroids(rows.clone()).map_err(|e| e.to_string())?;
        let on_centroids = DescriptorSet::new(
            "flat",
            16,
            rows.iter().flatten().map(|&v| v as f32).collect(),
            (0..5).map(|i| Keypoint { x: i, y: 0 }).collect(),
        )
        .map_err(|e| e.to_string())?;
        let v = vlad_encode(&on_centroids, &centred, VladOptions::default()).map_err(|e| e.to_string())?;
        ensure(v.degenerate && v.values.iter().all(|&z| z == 0.0), || "zero-residual set not flagged degenerate".into())?;

        for case in 0..10 {
            let n = r.gen_range(50..400);
            let d = r.gen_range(2..24);
            let k = r.gen_range(2..12);
            let data: Vec<f32> = (0..n * d).map(|_| r.gen_range(-5.0f32..5.0)).collect();
            let cb = kmeans_fit(&data, d, k, case, &params).map_err(|e| e.to_string())?;
            let h = &cb.inertia_history;
            ensure(!h.is_empty(), || format!("dataset {case}: empty inertia history"))?;
            for (i, w) in h.windows(2).enumerate() {
                ensure(w[1] <= w[0], || format!("dataset {case}: inertia rose at iteration {}: {} -> {}", i + 1, w[0], w[1]))?;
            }

            let mut centroids = cb.centroids.clone();
            centroids.push(centroids[0].clone());
            let dup = Codebook::from_centroids(centroids.clone()).map_err(|e| e.to_string())?;
            let got = assign_clusters(&data, d, &dup).map_err(|e| e.to_string())?;
            for (i, x) in data.chunks_exact(d).enumerate() {
                let want = naive_argmin(x, &centroids);
                ensure(got[i] == want, || format!("dataset {case} row {i}: cluster {} vs naive {want}", got[i]))?;
            }
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// writer evaluation

fn random_index(r: &mut ChaCha8Rng, writers: usize, per_writer: usize, d: usize) -> EmbeddingIndex {
    let mut entries = Vec::new();
    for w in 0..writers {
        let centre: Vec<f64> = (0..d).map(|_| r.gen_range(-1.0..1.0)).collect();
        for i in 0..per_writer {
            let values = centre.iter().map(|c| c + r.gen_range(-1.2..1.2)).collect();
            entries.push(Embedding { image_id: format!("w{w:02}_{i}"), writer: format!("w{w:02}"), values });
        }
    }
    entries.shuffle(r);
    EmbeddingIndex::new(entries).unwrap()
}

fn oracle_cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb)
}

/// (mAP, top1, top5, top10) in percent, by explicit ranking and precision-at-k.
fn oracle_retrieval(entries: &[Embedding]) -> (f64, f64, f64, f64) {
    let n = entries.len();
    let (mut ap_sum, mut tops) = (0.0, [0usize; 3]);
    for q in 0..n {
        let mut others: Vec<(f64, &str, bool)> = (0..n)
            .filter(|&j| j != q)
            .map(|j| (oracle_cosine(&entries[q].values, &entries[j].values), entries[j].image_id.as_str(), entries[j].writer == entries[q].writer))
            .collect();
        others.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(b.1)));
        let relevant = others.iter().filter(|o| o.2).count();
        let mut ap = 0.0;
        for k in 1..=others.len() {
            if others[k - 1].2 {
                let hits = others[..k].iter().filter(|o| o.2).count();
                ap += hits as f64 / k as f64;
            }
        }
        ap_sum += ap / relevant as f64;
        let first = others.iter().position(|o| o.2).unwrap() + 1;
        for (t, k) in tops.iter_mut().zip([1, 5, 10]) {
            *t += (first <= k) as usize;
        }
    }
    let pct = |c: usize| 100.0 * c as f64 / n as f64;
    (100.0 * ap_sum / n as f64, pct(tops[0]), pct(tops[1]), pct(tops[2]))
}

#[test]
fn writer_eval_suite() {
    criterion("writer-eval suite", Duration::from_secs(30), || {
        let mut r = rng(53);
        for case in 0..50 {
            let idx = random_index(&mut r, 10, 5, 12);
            let rep = retrieval_eval(&idx).map_err(|e| e.to_string())?;
            let (map, t1, t5, t10) = oracle_retrieval(idx.entries());
            ensure((rep.map - map).abs() <= 1e-12, || format!("index {case}: mAP {} vs {map}", rep.map))?;
            ensure((rep.top1, rep.top5, rep.top10) == (t1, t5, t10), || format!("index {case}: top-k {:?}", (rep.top1, rep.top5, rep.top10)))?;
        }

        let idx = random_index(&mut r, 10, 5, 12);
        let combos = sample_reference_sets(&idx, 2, 500, 7).map_err(|e| e.to_string())?;
        let distinct: HashSet<&ReferenceCombination> = combos.iter().collect();
        ensure(combos.len() == 500 && distinct.len() == 500, || format!("{} combinations, {} distinct", combos.len(), distinct.len()))?;
        let again = sample_reference_sets(&idx, 2, 500, 7).map_err(|e| e.to_string())?;
        ensure(combos == again, || "same seed gave different combinations".into())?;
        let other = sample_reference_sets(&idx, 2, 500, 8).map_err(|e| e.to_string())?;
        ensure(combos != other, || "different seeds gave identical combinations".into())?;

        let retrieval = retrieval_eval(&idx).map_err(|e| e.to_string())?;
        let class_max = nn_classify_eval(&idx, &combos, WriterScore::Max).map_err(|e| e.to_string())?;
        let class_mean = nn_classify_eval(&idx, &combos, WriterScore::Mean).map_err(|e| e.to_string())?;
        for scale in [1e-3, 0.37, 3.0, 1234.5] {
            let scaled: Vec<Embedding> = idx
                .entries()
                .iter()
                .enumerate()
                .map(|(i, e)| Embedding { values: e.values.iter().map(|v| v * scale * (1.0 + i as f64 / 7.0)).collect(), ..e.clone() })
                .collect();
            let sidx = EmbeddingIndex::new(scaled).map_err(|e| e.to_string())?;
            ensure(retrieval_eval(&sidx).map_err(|e| e.to_string())? == retrieval, || format!("scale {scale}: retrieval report changed"))?;
            ensure(nn_classify_eval(&sidx, &combos, WriterScore::Max).map_err(|e| e.to_string())? == class_max, || format!("scale {scale}: max classification changed"))?;
            ensure(nn_classify_eval(&sidx, &combos, WriterScore::Mean).map_err(|e| e.to_string())? == class_mean, || format!("scale {scale}: mean classification changed"))?;
        }

        toy_classification()
    });
}

/// Three writers with two images each and one reference per writer: all eight
/// reference choices are enumerated by hand and scored against the report.
fn toy_classification() -> Check {
    let raw = [
        ("a1", "a", [1.0, 0.0, 0.0]),
        ("a2", "a", [0.6, 0.7, 0.1]),
        ("b1", "b", [0.0, 1.0, 0.0]),
        ("b2", "b", [0.1, 0.5, 0.8]),
        ("c1", "c", [0.0, 0.0, 1.0]),
        ("c2", "c", [0.9, 0.1, 0.2]),
    ];
    let entries: Vec<Embedding> = raw.iter().map(|(id, w, v)| Embedding { image_id: id.to_string(), writer: w.to_string(), values: v.to_vec() }).collect();
    let idx = EmbeddingIndex::new(entries.clone()).map_err(|e| e.to_string())?;
    let combos = sample_reference_sets(&idx, 1, 8, 0).map_err(|e| e.to_string())?;
    let distinct: HashSet<&ReferenceCombination> = combos.iter().collect();
    ensure(distinct.len() == 8, || format!("expected the 8 possible reference sets, got {}", distinct.len()))?;
    let report = nn_classify_eval(&idx, &combos, WriterScore::Max).map_err(|e| e.to_string())?;

    let by_id: BTreeMap<&str, &Embedding> = entries.iter().map(|e| (e.image_id.as_str(), e)).collect();
    let mut accs = Vec::new();
    for combo in &combos {
        let refs: Vec<(&str, &Embedding)> = combo.refs.iter().map(|(w, ids)| (w.as_str(), by_id[ids[0].as_str()])).collect();
        let ref_ids: HashSet<&str> = refs.iter().map(|(_, e)| e.image_id.as_str()).collect();
        let probes: Vec<&Embedding> = entries.iter().filter(|e| !ref_ids.contains(e.image_id.as_str())).collect();
        let correct = probes
            .iter()
            .filter(|p| {
                let best = refs
                    .iter()
                    .map(|(w, e)| (*w, oracle_cosine(&p.values, &e.values)))
                    .fold(("", f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
                best.0 == p.writer
            })
            .count();
        accs.push(100.0 * correct as f64 / probes.len() as f64);
    }
    let got: Vec<f64> = report.per_combination.iter().map(|p| p.0).collect();
    ensure(got == accs, || format!("per-combination top-1 {got:?} vs enumeration {accs:?}"))?;
    ensure(report.per_combination.iter().all(|p| p.1 == 100.0), || "top-5 over three writers must be 100".into())?;
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let std = (accs.iter().map(|a| (a - mean) * (a - mean)).sum::<f64>() / accs.len() as f64).sqrt();
    ensure(report.top1_mean == mean && report.top1_std == std, || format!("top-1 {} ± {} vs {mean} ± {std}", report.top1_mean, report.top1_std))
}

// ---------------------------------------------------------------------------
// correlation

fn oracle_r(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx) * (x - mx);
        syy += (y - my) * (y - my);
    }
    sxy / (sxx * syy).sqrt()
}

/// Two-sided null p-value of r by integrating the density of r, which is
/// proportional to (1 - rho^2)^((n-4)/2). With rho = sin(theta) the integrand
/// becomes cos(theta)^(n-3), smooth on [0, pi/2].
fn oracle_p(r: f64, n: usize) -> f64 {
    let f = |t: f64| t.cos().powi(n as i32 - 3);
    let simpson = |a: f64, b: f64| {
        let steps = 20_000;
        let h = (b - a) / steps as f64;
        let mut s = f(a) + f(b);
        for i in 1..steps {
            s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    };
    let half = std::f64::consts::FRAC_PI_2;
    simpson(r.abs().asin(), half) / simpson(0.0, half)
}

#[test]
fn correlation_suite() {
    criterion("correlation suite", Duration::from_secs(5), || {
        for (slope, icpt) in [(2.0, 3.0), (-7.0, 100.0), (0.5, -1.0), (-1.0, 0.0), (13.0, 1e6)] {
            let xs: Vec<f64> = (0..12).map(|i| (i * i % 17) as f64).collect();
            let ys: Vec<f64> = xs.iter().map(|x| slope * x + icpt).collect();
            let c = pearson(&xs, &ys).map_err(|e| e.to_string())?;
            let want = if slope > 0.0 { 1.0 } else { -1.0 };
            ensure(c.r == want, || format!("slope {slope}: r = {}", c.r))?;
            ensure(c.p == 0.0, || format!("slope {slope}: p = {}", c.p))?;
        }

        let mut r = rng(67);
        for case in 0..50 {
            let n = r.gen_range(3..40);
            let xs: Vec<f64> = (0..n).map(|_| r.gen_range(0.0..100.0)).collect();
            let mix = r.gen_range(-1.0..1.0);
            let ys: Vec<f64> = xs.iter().map(|x| mix * x + r.gen_range(0.0..60.0)).collect();
            let Correlation { r: got_r, p: got_p, n: got_n } = pearson(&xs, &ys).map_err(|e| e.to_string())?;
            let want_r = oracle_r(&xs, &ys);
            let want_p = oracle_p(want_r, n);
            ensure(got_n == n, || format!("series {case}: n {got_n}"))?;
            ensure((got_r - want_r).abs() <= 1e-12, || format!("series {case} (n={n}): r {got_r} vs {want_r}"))?;
            ensure((got_p - want_p).abs() <= 1e-6, || format!("series {case} (n={n}, r={want_r}): p {got_p} vs {want_p}"))?;
        }
        Ok(())
    });
}

// ---------------------------------------------------------------------------
// dataset-gated

fn dataset_dir(var: &str, name: &str) -> Option<PathBuf> {
    match std::env::var_os(var) {
        Some(v) if !v.is_empty() => Some(PathBuf::from(v)),
        _ => {
            line("SKIP", name, &format!("{var} not set"));
            None
        }
    }
}

fn mean_metrics(pairs: &[(RasterImage, BinaryImage)], method: &dyn Binarizer, params: &LocalThreshParams) -> Result<BinMetricsReport, String> {
    let reports = pairs
        .iter()
        .map(|(gray, gt)| metrics::evaluate(&method.binarize(gray, params)?, gt))
        .collect::<papyrion::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    metrics::mean_report(&reports).ok_or_else(|| "no pairs".into())
}

fn within(label: &str, got: f64, want: f64, tol: f64, notes: &mut Vec<String>) {
    notes.push(format!("{label} {got:.2} (ref {want}±{tol})"));
    if (got - want).abs() > tol {
        notes.push(format!("DEVIATION {label}: {got:.3} is {:.3} from {want}", got - want));
    }
}

#[test]
fn dibco2019_set_b_table() {
    let name = "DIBCO 2019 Set B binarization scores";
    let Some(root) = dataset_dir("PAPYRION_DIBCO2019", name) else { return };
    criterion(name, Duration::from_secs(3600), || {
        let (manifest, _) = ingest_pairs(&root.join("B/images"), &root.join("B/gt"), "dibco2019", "B").map_err(|e| e.to_string())?;
        let pairs = manifest
            .rows
            .iter()
            .map(|row| Ok((to_grayscale(&read_raster(&row.image)?), read_binary(row.gt.as_ref().expect("paired"))?)))
            .collect::<papyrion::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;
        ensure(!pairs.is_empty(), || "no image/gt pairs".into())?;

        let mut notes = Vec::new();
        let otsu = mean_metrics(&pairs, &Otsu, &LocalThreshParams::default())?;
        within("otsu FM", otsu.fm, 23.3, 0.5, &mut notes);
        within("otsu PSNR", otsu.psnr, 2.8, 0.1, &mut notes);
        within("otsu DRD", otsu.drd, 209.3, 5.0, &mut notes);
        let sauvola = mean_metrics(&pairs, &LocalThreshold(LocalMethod::Sauvola), &LocalThreshParams::with_window(37))?;
        within("sauvola(37) FM", sauvola.fm, 57.3, 1.0, &mut notes);
        let gatos = mean_metrics(&pairs, &Gatos, &LocalThreshParams { window: 37, glyph: 110, ..Default::default() })?;
        within("gatos(37,110) FM", gatos.fm, 62.8, 1.5, &mut notes);

        let summary = notes.join("; ");
        ensure(!summary.contains("DEVIATION"), || summary.clone())?;
        line("INFO", name, &summary);
        Ok(())
    });
}

/// Retrieval mAP for one binarization method over a labelled image set.
fn grk_map(images: &[(String, String, RasterImage)], method: &dyn Binarizer, params: &LocalThreshParams) -> Result<f64, String> {
    let sets = images
        .iter()
        .map(|(id, _, gray)| describe_image(id, gray, &method.binarize(gray, params)?, 0.05))
        .collect::<papyrion::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let stacked: Vec<f32> = sets.iter().flat_map(|s| s.values.iter().copied()).collect();
    let cb = kmeans_fit(&stacked, sets[0].d, 128, 0, &KmeansParams::default()).map_err(|e| e.to_string())?;
    let embeddings = sets
        .iter()
        .zip(images)
        .map(|(s, (id, writer, _))| Ok(Embedding { image_id: id.clone(), writer: writer.clone(), values: vlad_encode(s, &cb, VladOptions::default())?.values }))
        .collect::<papyrion::Result<Vec<_>>>()
        .map_err(|e| e.to_string())?;
    let idx = EmbeddingIndex::new(embeddings).map_err(|e| e.to_string())?;
    Ok(retrieval_eval(&idx).map_err(|e| e.to_string())?.map)
}

#[test]
fn grk_papyri_method_ordering() {
    let name = "GRK-Papyri retrieval ordering";
    let Some(root) = dataset_dir("PAPYRION_GRK", name) else { return };
    criterion(name, Duration::from_secs(4 * 3600), || {
        let manifest = ingest_images(&root, "grk").map_err(|e| e.to_string())?;
        let images = manifest
            .rows
            .iter()
            .map(|row| {
                let (writer, _) = parse_writer_label(&row.image.to_string_lossy());
                Ok((row.stem.clone(), writer, to_grayscale(&read_raster(&row.image)?)))
            })
            .collect::<papyrion::Result<Vec<_>>>()
            .map_err(|e| e.to_string())?;

        let methods: [(&str, Box<dyn Binarizer>, LocalThreshParams); 6] = [
            ("trsingh", Box::new(LocalThreshold(LocalMethod::Trsingh)), LocalThreshParams::with_window(47)),
            ("gatos", Box::new(Gatos), LocalThreshParams { window: 37, glyph: 110, ..Default::default() }),
            ("nick", Box::new(LocalThreshold(LocalMethod::Nick)), LocalThreshParams::with_window(47)),
            ("sauvola", Box::new(LocalThreshold(LocalMethod::Sauvola)), LocalThreshParams::with_window(37)),
            ("su", Box::new(Su), LocalThreshParams { window: 37, min_n: 147, ..Default::default() }),
            ("otsu", Box::new(Otsu), LocalThreshParams::default()),
        ];
        let mut maps = BTreeMap::new();
        for (m, b, p) in &methods {
            maps.insert(*m, grk_map(&images, b.as_ref(), p)?);
        }
        let summary = maps.iter().map(|(m, v)| format!("{m} {v:.2}")).collect::<Vec<_>>().join(", ");
        let weakest_strong = ["trsingh", "gatos", "nick", "sauvola"].iter().map(|m| maps[m]).fold(f64::INFINITY, f64::min);
        let strongest_weak = maps["su"].max(maps["otsu"]);
        ensure(weakest_strong > strongest_weak, || format!("ordering violated: {summary}"))?;
        line("INFO", name, &summary);
        Ok(())
    });
}
