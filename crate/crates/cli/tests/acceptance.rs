//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Wall-clock budgets count toward the verdict.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tumorsim::compose::{draw_plan, generate_sample, sample_rng, GeneratorConfig, Preset};
use tumorsim::loss::{total_loss, Decomposition, LossTarget, LossWeights};
use tumorsim::metrics::{confusion, dice, hd95, sensitivity, specificity};
use tumorsim::oracle::{confusion_exhaustive, hausdorff_all_pairs, voxelize_ray_parity};
use tumorsim::phantom::phantom;
use tumorsim::shape::{icosphere, perturb_mesh, place_mesh, voxelize, NoiseParams, Quaternion};
use tumorsim::solver::{gradient_check, SolverConfig};
use tumorsim::texture::{
    elastic_deform, gaussian_blur, linear_transform, make_displacement, transform_pipeline, DisplacementField,
    TextureParams,
};
use tumorsim::volume::{mean_intensity, BinaryMask, Grid, Volume};
use tumorsim_cli::commands::{cmd_decompose, load_target, DecomposeOptions};
use tumorsim_cli::config::Mode;
use tumorsim_cli::io::read_volume;
use tumorsim_cli::manifest::{Manifest, SampleFile};

type Check = fn(&Path) -> Result<String, String>;

fn ensure(ok: bool, detail: String) -> Result<String, String> {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Distance in representable f32 steps.
fn ulps(a: f32, b: f32) -> u64 {
    let key = |v: f32| {
        let bits = v.to_bits() as i64;
        if bits < 0 {
            i32::MIN as i64 - bits
        } else {
            bits
        }
    };
    (key(a) - key(b)).unsigned_abs()
}

fn generated_set(tmp: &Path, size: usize, per_preset: usize, seed: u64) -> Vec<PathBuf> {
    let pool = common::pool(tmp, 4, size, seed);
    let mut dirs = Vec::new();
    for preset in [Preset::Brain, Preset::Liver] {
        let out = tmp.join(format!("{preset:?}_{size}_{seed}"));
        let m = common::generate(&pool, &out, preset, per_preset, seed, 0);
        dirs.extend(m.samples.iter().map(|e| out.join(&e.dir)));
    }
    dirs
}

/// The 100-sample set shared by the composition and ground-truth checks.
/// Built inside the first check, so its time counts there.
static SHARED: OnceLock<(tempfile::TempDir, Vec<PathBuf>)> = OnceLock::new();

fn shared_set() -> &'static [PathBuf] {
    let (_, dirs) = SHARED.get_or_init(|| {
        let tmp = tempfile::tempdir().expect("temp dir");
        let dirs = generated_set(tmp.path(), 32, 50, 100);
        (tmp, dirs)
    });
    dirs
}

fn composition_identity(_: &Path) -> Result<String, String> {
    let dirs = shared_set();
    let (mut worst, mut outside_bad, mut inside) = (0u64, 0usize, 0usize);
    for dir in dirs {
        let rd = |n: &str| read_volume(&dir.join(format!("{n}.nii.gz"))).unwrap();
        let (x, x_n, s, m) = (rd("x"), rd("x_n"), rd("s"), rd("m"));
        let alpha = SampleFile::load(dir).unwrap().alpha;
        for i in 0..x.len() {
            let (xv, nv, sv, mv) = (x.data()[i], x_n.data()[i], s.data()[i], m.data()[i] as f64);
            if mv == 0.0 {
                outside_bad += (xv.to_bits() != nv.to_bits()) as usize;
            } else {
                inside += 1;
                let am = alpha * mv;
                let want = ((1.0 - am) * nv as f64 + am * sv as f64) as f32;
                worst = worst.max(ulps(want, xv));
            }
        }
    }
    ensure(
        dirs.len() == 100 && inside > 0 && worst <= 1 && outside_bad == 0,
        format!(
            "{} samples, {inside} tumor voxels, max {worst} ulp (tol 1), outside-mask mismatches {outside_bad} (tol 0)",
            dirs.len()
        ),
    )
}

fn ground_truth_minimum(_: &Path) -> Result<String, String> {
    let dirs = shared_set();
    let mut worst = 0f64;
    for dir in dirs {
        let t = load_target(dir).unwrap();
        let d = Decomposition::new(
            t.dims,
            t.x_n.clone().unwrap(),
            t.s.clone().unwrap(),
            t.m.clone().unwrap(),
        )
        .unwrap();
        worst = worst.max(total_loss(&d, &t, &LossWeights::default()).unwrap().total);
    }
    ensure(
        worst <= 1e-6,
        format!("{} samples, max total {worst:.3e} (tol 1e-6)", dirs.len()),
    )
}

fn gradient_correctness(_: &Path) -> Result<String, String> {
    let pool: Vec<Volume> = (0..3).map(|i| phantom([4; 3], [1.0; 3], 40 + i).unwrap()).collect();
    let (mut worst, mut checked, mut screened) = (0f64, 0usize, 0usize);
    for inst in 0..20u64 {
        let cfg = if inst % 2 == 0 { GeneratorConfig::liver() } else { GeneratorConfig::brain() };
        let sample = generate_sample(&pool, None, &cfg, &mut sample_rng(77, inst)).unwrap();
        let t = LossTarget::from_sample(&sample);
        let mut rng = ChaCha8Rng::seed_from_u64(1000 + inst);
        let mut jitter = |v: &[f64]| v.iter().map(|x| x + rng.random_range(-0.5..0.5)).collect::<Vec<_>>();
        let x_hat = jitter(&t.x);
        let s_hat = jitter(&t.x);
        let m_hat = (0..t.x.len()).map(|_| rng.random_range(0.05..0.95)).collect();
        let p = Decomposition::new(t.dims, x_hat, s_hat, m_hat).unwrap();
        let c = gradient_check(&t, &p, &LossWeights::default(), 1e-5, p.len(), inst).unwrap();
        worst = worst.max(c.max_rel_error);
        checked += c.checked;
        screened += c.screened;
    }
    ensure(
        worst <= 1e-4 && checked > 0,
        format!("20 instances, {checked} coordinates checked, {screened} screened, max rel {worst:.3e} (tol 1e-4)"),
    )
}

fn solver_recovery(tmp: &Path) -> Result<String, String> {
    let pool = common::pool(tmp, 4, 16, 300);
    let mut worst_total = 0f64;
    let mut worst_dice = 1f64;
    let mut worst_iters = 0usize;
    let mut cases = 0;
    for preset in [Preset::Brain, Preset::Liver] {
        let gen = tmp.join(format!("solve_{preset:?}"));
        common::generate(&pool, &gen, preset, 5, 300, 0);
        let out = tmp.join(format!("solved_{preset:?}"));
        let outcomes = cmd_decompose(&DecomposeOptions {
            input: gen.clone(),
            out: out.clone(),
            mode: Mode::Supervised,
            solver: SolverConfig::default(),
            workers: 0,
        })
        .map_err(|e| e.to_string())?;
        for o in outcomes {
            // Dice recounted from the written files.
            let mask = read_volume(&out.join(&o.case).join("mask.nii.gz")).unwrap();
            let m = read_volume(&gen.join(&o.case).join("m.nii.gz")).unwrap();
            let (mut both, mut total) = (0usize, 0usize);
            for (a, b) in mask.data().iter().zip(m.data()) {
                both += (*a == 1.0 && *b == 1.0) as usize;
                total += (*a == 1.0) as usize + (*b == 1.0) as usize;
            }
            let d = if total == 0 { 1.0 } else { 2.0 * both as f64 / total as f64 };
            worst_dice = worst_dice.min(d);
            worst_total = worst_total.max(o.report.total);
            worst_iters = worst_iters.max(o.iterations);
            cases += 1;
        }
    }
    ensure(
        cases == 10 && worst_total <= 1e-3 && worst_dice >= 0.99 && worst_iters <= 5000,
        format!(
            "{cases} samples, max total {worst_total:.3e} (tol 1e-3), min dice {worst_dice:.4} (tol 0.99), max iterations {worst_iters} (limit 5000)"
        ),
    )
}

fn voxelizer_equivalence(_: &Path) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(5050);
    let (mut differing, mut voxels) = (0usize, 0usize);
    for _ in 0..50 {
        let dims: [usize; 3] = std::array::from_fn(|_| rng.random_range(8..=32));
        let spacing: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.75..1.5));
        let grid = Grid::new(dims, spacing).unwrap();
        let noise = NoiseParams {
            seed: rng.random(),
            amplitude: rng.random_range(0.0..0.4),
            ..NoiseParams::default()
        };
        let unit = perturb_mesh(&icosphere(rng.random_range(0..=3)).unwrap(), &noise).unwrap();
        let center: [f64; 3] = std::array::from_fn(|k| rng.random_range(0.0..dims[k] as f64 * spacing[k]));
        let scale: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.75..1.33));
        let radius = rng.random_range(2.0..10.0);
        let mesh = place_mesh(&unit, center, radius, scale, Quaternion::random(&mut rng)).unwrap();
        let fast = voxelize(&mesh, &grid).unwrap();
        let slow = voxelize_ray_parity(&mesh, &grid);
        differing += fast.data().iter().zip(slow.data()).filter(|(a, b)| a != b).count();
        voxels += slow.count();
    }
    ensure(
        differing == 0 && voxels > 0,
        format!("50 shapes, {voxels} oracle voxels, {differing} differing (tol 0)"),
    )
}

fn random_mask(rng: &mut ChaCha8Rng, dims: [usize; 3]) -> BinaryMask {
    let density = match rng.random_range(0..5) {
        0 => 0.0,
        1 => 1.0,
        _ => rng.random_range(0.05..0.6),
    };
    let n = dims.iter().product();
    BinaryMask::new(dims, (0..n).map(|_| rng.random_bool(density) as u8).collect()).unwrap()
}

fn metric_oracles(_: &Path) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(6060);
    let mut mismatches = Vec::new();
    for case in 0..100 {
        let dims: [usize; 3] = std::array::from_fn(|_| rng.random_range(1..=12));
        let spacing: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.5..2.0));
        let (a, b) = (random_mask(&mut rng, dims), random_mask(&mut rng, dims));
        let c = confusion(&a, &b).unwrap();
        let (tp, fp, tn, fn_) = confusion_exhaustive(&a, &b);
        if (c.tp, c.fp, c.tn, c.fn_) != (tp, fp, tn, fn_) {
            mismatches.push(format!("case {case}: confusion"));
        }
        let want_dice = if tp + fp + fn_ == 0 {
            1.0
        } else {
            (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
        };
        let want_sens = (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64);
        let want_spec = (tn + fp > 0).then(|| tn as f64 / (tn + fp) as f64);
        if dice(&c) != want_dice || sensitivity(&c) != want_sens || specificity(&c) != want_spec {
            mismatches.push(format!("case {case}: ratios"));
        }
        if hd95(&a, &b, spacing).unwrap() != hausdorff_all_pairs(&a, &b, spacing, 95) {
            mismatches.push(format!("case {case}: hd95"));
        }
    }
    let pred = BinaryMask::new([8, 1, 1], vec![1, 1, 1, 1, 0, 0, 0, 0]).unwrap();
    let gt = BinaryMask::new([8, 1, 1], vec![0, 0, 1, 1, 1, 1, 0, 0]).unwrap();
    let c = confusion(&pred, &gt).unwrap();
    let hand_dice = (c.tp, c.fp, c.fn_) == (2, 2, 2) && dice(&c) == 0.5;
    let p = BinaryMask::new([8, 1, 1], vec![0, 1, 0, 0, 0, 0, 0, 0]).unwrap();
    let g = BinaryMask::new([8, 1, 1], vec![0, 0, 0, 0, 1, 0, 0, 0]).unwrap();
    let hand_hd = hd95(&p, &g, [1.0; 3]).unwrap() == Some(3.0);
    ensure(
        mismatches.is_empty() && hand_dice && hand_hd,
        format!(
            "100 pairs, {} mismatches (tol 0), hand dice 0.5 {}, hand hd95 3.0 {}{}",
            mismatches.len(),
            if hand_dice { "ok" } else { "wrong" },
            if hand_hd { "ok" } else { "wrong" },
            if mismatches.is_empty() { String::new() } else { format!(": {}", mismatches.join(", ")) }
        ),
    )
}

fn transform_laws(_: &Path) -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(7070);
    let dims = [16; 3];
    let noisy = |rng: &mut ChaCha8Rng, lo: f32, hi: f32| {
        Volume::new(dims, [1.0; 3], (0..4096).map(|_| rng.random_range(lo..hi)).collect()).unwrap()
    };
    let mut notes = Vec::new();
    let mut ok = true;

    // Linear transform fixes the mean of the stored output.
    let mut worst_mean = 0f64;
    for trial in 0..20 {
        let src = noisy(&mut rng, 0.1, 4.0);
        let rf = noisy(&mut rng, 0.1, 4.0);
        let r = rng.random_range(0.125..3.0);
        let region = (trial % 2 == 1).then(|| BinaryMask::from_fn(dims, |[x, y, _]| x > 3 && y < 12).unwrap());
        let out = linear_transform(&src, &rf, r, region.as_ref()).unwrap();
        let want = r * mean_intensity(&rf, region.as_ref()).unwrap();
        let got = mean_intensity(&out, region.as_ref()).unwrap();
        worst_mean = worst_mean.max((got - want).abs() / want.abs());
    }
    ok &= worst_mean <= 1e-9;
    notes.push(format!("linear mean rel {worst_mean:.2e} (tol 1e-9)"));

    // Blur of constants.
    let mut worst_blur = 0f64;
    for _ in 0..10 {
        let c = rng.random_range(-3.0f32..3.0);
        let v = Volume::filled(dims, [rng.random_range(0.5..2.0), 1.0, rng.random_range(0.5..2.0)], c).unwrap();
        let b = gaussian_blur(&v, rng.random_range(0.3..3.0)).unwrap();
        for &x in b.data() {
            worst_blur = worst_blur.max((x as f64 - c as f64).abs());
        }
    }
    ok &= worst_blur <= 1e-6;
    notes.push(format!("constant blur dev {worst_blur:.2e} (tol 1e-6)"));

    // Identities, bitwise.
    let v = noisy(&mut rng, -2.0, 2.0);
    let bits = |a: &Volume| a.data().iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    let warp_id = bits(&elastic_deform(&v, &DisplacementField::zeros(dims).unwrap()).unwrap()) == bits(&v);
    let blur_id = bits(&gaussian_blur(&v, 0.0).unwrap()) == bits(&v);
    ok &= warp_id && blur_id;
    notes.push(format!("zero warp identity {warp_id}, sigma-0 identity {blur_id}"));

    // Order: running the stages one at a time on one stream equals the full pipeline,
    // and equals explicit warp, blur and linear calls with the same draws.
    let params = TextureParams::default();
    let only = |e: bool, b: bool, l: bool| TextureParams {
        enable_elastic: e,
        enable_blur: b,
        enable_linear: l,
        ..params
    };
    let src = noisy(&mut rng, 0.5, 2.0);
    let rf = noisy(&mut rng, 0.5, 2.0);
    let mut order_ok = true;
    for seed in 0..5 {
        let (full, _) = transform_pipeline(&src, &rf, &params, None, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        let mut r1 = ChaCha8Rng::seed_from_u64(seed);
        let (a, _) = transform_pipeline(&src, &rf, &only(true, false, false), None, &mut r1).unwrap();
        let (b, _) = transform_pipeline(&a, &rf, &only(false, true, false), None, &mut r1).unwrap();
        let (c, _) = transform_pipeline(&b, &rf, &only(false, false, true), None, &mut r1).unwrap();
        let mut r2 = ChaCha8Rng::seed_from_u64(seed);
        let field = make_displacement(&params.elastic, dims, &mut r2).unwrap();
        let warped = elastic_deform(&src, &field).unwrap();
        let sigma = r2.random_range(params.blur_sigma_mm.0..params.blur_sigma_mm.1);
        let blurred = gaussian_blur(&warped, sigma).unwrap();
        let ratio = params.sample_ratio(&mut r2);
        let manual = linear_transform(&blurred, &rf, ratio, None).unwrap();
        // Swapping warp and blur must change the result, or the check proves nothing.
        let swapped = elastic_deform(&gaussian_blur(&src, sigma).unwrap(), &field).unwrap();
        let swapped = linear_transform(&swapped, &rf, ratio, None).unwrap();
        order_ok &= bits(&full) == bits(&c) && bits(&full) == bits(&manual) && bits(&full) != bits(&swapped);
    }
    ok &= order_ok;
    notes.push(format!("warp, blur, linear order {}", if order_ok { "ok" } else { "broken" }));
    ensure(ok, notes.join(", "))
}

fn mesh_combinatorics(_: &Path) -> Result<String, String> {
    let mut rows = Vec::new();
    let mut ok = true;
    for level in 0..=4u32 {
        let m = icosphere(level).unwrap();
        let p = 4usize.pow(level);
        let good = m.vertex_count() == 10 * p + 2 && m.face_count() == 20 * p && m.euler_characteristic() == 2;
        ok &= good;
        rows.push(format!("L{level} V={} F={}", m.vertex_count(), m.face_count()));
    }
    ensure(ok, rows.join(", ") + ", euler 2")
}

fn determinism(tmp: &Path) -> Result<String, String> {
    let pool = common::pool(tmp, 4, 32, 900);
    let a = common::generate(&pool, &tmp.join("w1"), Preset::Liver, 8, 900, 1);
    let b = common::generate(&pool, &tmp.join("w4"), Preset::Liver, 8, 900, 4);
    let (da, db) = (common::digests(&a), common::digests(&b));
    let same_manifest = std::fs::read(tmp.join("w1/manifest.json")).unwrap()
        == std::fs::read(tmp.join("w4/manifest.json")).unwrap();
    let reread = Manifest::load(&tmp.join("w4")).unwrap().check(&tmp.join("w4")).is_empty();
    ensure(
        da.len() == 32 && da == db && same_manifest && reread,
        format!("8 samples, {} files, digests equal for workers 1 and 4: {}", da.len(), da == db),
    )
}

fn preset_fidelity(_: &Path) -> Result<String, String> {
    let pool: Vec<Volume> = (0..3).map(|i| phantom([8; 3], [1.0; 3], 60 + i).unwrap()).collect();
    let mut notes = Vec::new();
    let mut ok = true;
    for (cfg, k_range, r_range) in [
        (GeneratorConfig::liver(), (1usize, 15usize), (0.125, 0.5)),
        (GeneratorConfig::brain(), (1, 1), (1.0, 3.0)),
    ] {
        ok &= cfg.tumor_count == k_range && cfg.texture.ratio_range == r_range;
        let (mut kmin, mut kmax) = (usize::MAX, 0);
        let (mut rmin, mut rmax) = (f64::INFINITY, f64::NEG_INFINITY);
        let mut seen = |k: usize, rs: &mut dyn Iterator<Item = f64>| {
            kmin = kmin.min(k);
            kmax = kmax.max(k);
            for r in rs {
                rmin = rmin.min(r);
                rmax = rmax.max(r);
            }
        };
        // 1000 draws on the per-sample streams: K, then one ratio per tumor.
        for i in 0..1000u64 {
            let mut rng = sample_rng(61, i);
            let plan = draw_plan(&cfg, pool.len(), &mut rng).unwrap();
            let ratios: Vec<f64> = (0..plan.tumor_count).map(|_| cfg.texture.sample_ratio(&mut rng)).collect();
            seen(plan.tumor_count, &mut ratios.into_iter());
        }
        // Full samples: the recorded values obey the same laws.
        let mut bad = 0;
        for i in 0..100u64 {
            let s = generate_sample(&pool, None, &cfg, &mut sample_rng(62, i)).unwrap();
            let k = s.record.tumors.len();
            bad += (k != s.record.plan.tumor_count) as usize;
            seen(k, &mut s.record.tumors.iter().map(|t| t.texture.ratio.unwrap()));
        }
        let good = bad == 0 && kmin >= k_range.0 && kmax <= k_range.1 && rmin > r_range.0 && rmax < r_range.1;
        ok &= good;
        notes.push(format!(
            "{:?}: K in [{kmin}, {kmax}] (allowed {{{}..{}}}), r in [{rmin:.6}, {rmax:.6}] (allowed open ({}, {}))",
            cfg.preset, k_range.0, k_range.1, r_range.0, r_range.1
        ));
    }
    ensure(ok, format!("1000 draws and 100 recorded samples each; {}", notes.join("; ")))
}

fn main() {
    let criteria: [(&str, u64, Check); 10] = [
        ("composition identity", 30, composition_identity),
        ("ground-truth minimum", 10, ground_truth_minimum),
        ("gradient correctness", 60, gradient_correctness),
        ("solver recovery", 300, solver_recovery),
        ("voxelizer equivalence", 120, voxelizer_equivalence),
        ("metric oracles", 60, metric_oracles),
        ("transform laws", 30, transform_laws),
        ("mesh combinatorics", 5, mesh_combinatorics),
        ("determinism", 60, determinism),
        ("preset fidelity", 30, preset_fidelity),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut failed = 0;
    for (name, budget, check) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let tmp = tempfile::tempdir().expect("temp dir");
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(|| check(tmp.path())))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        let took = start.elapsed();
        let in_time = took <= Duration::from_secs(budget);
        let (pass, detail) = match result {
            Ok(d) => (in_time, d),
            Err(d) => (false, d),
        };
        failed += !pass as usize;
        println!(
            "{} {name}: {detail}; {:.1}s (budget {budget}s{})",
            if pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            if in_time { "" } else { ", exceeded" }
        );
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
