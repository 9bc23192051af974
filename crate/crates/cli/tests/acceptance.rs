//! Acceptance checks, one line per criterion. Run with
//! `cargo test -p spectral-curriculum-cli --test acceptance`.

use std::collections::{BTreeSet, HashMap};
use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use image::GrayImage;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use spectral_curriculum::augment::magnitude_at;
use spectral_curriculum::curriculum::{
    efficienttrain_schedule, relative_cost, relative_cost_of_stages, MagnitudeRule, Stage, TransformSpec,
};
use spectral_curriculum::resample::{
    alias_set, alpha, downsample, leakage_report, probe_dependencies, rational_leakage_report, KernelName, KernelSpec,
};
use spectral_curriculum::search::{greedy_search_with, OracleSpec, SearchConfig};
use spectral_curriculum::spectral::{
    crop_spectrum, dft2, embed_spectrum, high_pass_filter, idft2, low_frequency_crop, low_pass_filter,
    recover_low_spectrum, CropParams,
};
use spectral_curriculum::Image;

type Check = Result<String, String>;
type Criterion = (&'static str, Duration, fn() -> Check);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_image(rng: &mut StdRng, h: usize, w: usize) -> Image {
    Image::new(1, h, w, (0..h * w).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Centered double-sum DFT, as (re, im) pairs in row-major bin order.
fn brute_dft(image: &Image) -> Vec<(f64, f64)> {
    let (h, w) = (image.height() as i64, image.width() as i64);
    let mut out = Vec::with_capacity((h * w) as usize);
    for u in -h / 2..h / 2 {
        for v in -w / 2..w / 2 {
            let (mut re, mut im) = (0.0, 0.0);
            for x in -h / 2..h / 2 {
                for y in -w / 2..w / 2 {
                    let px = image.get(0, (x + h / 2) as usize, (y + w / 2) as usize);
                    let phase = -2.0 * PI * ((u * x) as f64 / h as f64 + (v * y) as f64 / w as f64);
                    re += px * phase.cos();
                    im += px * phase.sin();
                }
            }
            out.push((re, im));
        }
    }
    out
}

fn dft_correctness() -> Check {
    let mut rng = StdRng::seed_from_u64(1);
    let mut worst: f64 = 0.0;
    let mut shapes = 0;
    for h in (2..=16).step_by(2) {
        for w in (2..=16).step_by(2) {
            let img = random_image(&mut rng, h, w);
            let fast = dft2(&img).map_err(|e| e.to_string())?;
            for (c, (re, im)) in fast.coeffs().iter().zip(brute_dft(&img)) {
                worst = worst.max((c.re - re).hypot(c.im - im));
            }
            shapes += 1;
        }
    }
    ensure(worst <= 1e-8, || format!("FFT vs double sum max error {worst:e}"))?;
    let mut roundtrip: f64 = 0.0;
    for _ in 0..1000 {
        let img = random_image(&mut rng, 32, 32);
        let back = idft2(&dft2(&img).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        roundtrip = roundtrip.max(img.max_abs_diff(&back));
    }
    ensure(roundtrip <= 1e-9, || format!("roundtrip max error {roundtrip:e}"))?;
    Ok(format!(
        "{shapes} shapes, max FFT error {worst:.1e}; 1000 roundtrips, max error {roundtrip:.1e}"
    ))
}

fn crop_is_band_limited() -> Check {
    let (n, b) = (16i64, 8usize);
    let mut worst: f64 = 0.0;
    let mut probes = 0;
    for u in -n / 2..n / 2 {
        for v in -n / 2..n / 2 {
            if u.abs() < b as i64 / 2 && v.abs() < b as i64 / 2 {
                continue;
            }
            for phase in [0.0, PI / 2.0] {
                let probe = Image::from_fn(16, 16, |r, c| {
                    let (x, y) = (r as f64 - 8.0, c as f64 - 8.0);
                    (2.0 * PI * (u as f64 * x + v as f64 * y) / 16.0 + phase).cos()
                })
                .unwrap();
                let out = low_frequency_crop(&probe, b).map_err(|e| e.to_string())?;
                let mean = out.mean(0);
                worst = worst.max(out.data().iter().map(|p| (p - mean).powi(2)).sum());
                probes += 1;
            }
        }
    }
    ensure(worst <= 1e-12, || format!("out-of-band probe non-DC energy {worst:e}"))?;

    let mut rng = StdRng::seed_from_u64(2);
    let mut recovery: f64 = 0.0;
    for _ in 0..50 {
        let img = random_image(&mut rng, 16, 16);
        let cropped = low_frequency_crop(&img, b).map_err(|e| e.to_string())?;
        let recovered = recover_low_spectrum(&cropped, 16, 16).map_err(|e| e.to_string())?;
        let full = dft2(&img).map_err(|e| e.to_string())?;
        let kept = embed_spectrum(&crop_spectrum(&full, CropParams::square(b).unwrap()).unwrap(), 16, 16).unwrap();
        for u in -3i64..4 {
            for v in -3i64..4 {
                let want = kept.at(u, v) * (256.0 / 64.0);
                recovery = recovery.max((recovered.at(u, v) - want).norm());
            }
        }
    }
    ensure(recovery <= 1e-9, || format!("recovery error {recovery:e}"))?;
    Ok(format!(
        "{probes} probes, max non-DC energy {worst:.1e}; recovery error {recovery:.1e}"
    ))
}

fn downsampling_aliases() -> Check {
    let mut sets = 0;
    for h in (2..=32usize).step_by(2) {
        for w in (2..=32usize).step_by(2) {
            for k in [1usize, 2, 4] {
                if h % k != 0 || w % k != 0 || (h / k) % 2 != 0 || (w / k) % 2 != 0 {
                    continue;
                }
                let (hi, wi, ki) = (h as i64, w as i64, k as i64);
                for u in -hi / ki / 2..hi / ki / 2 {
                    for v in -wi / ki / 2..wi / ki / 2 {
                        let expected: BTreeSet<_> = (-ki..=ki)
                            .flat_map(|a| (-ki..=ki).map(move |b| (u + a * hi / ki, v + b * wi / ki)))
                            .filter(|(p, q)| (-hi / 2..hi / 2).contains(p) && (-wi / 2..wi / 2).contains(q))
                            .collect();
                        let got = alias_set(u, v, h, w, k).map_err(|e| e.to_string())?;
                        ensure(got == expected, || {
                            format!("alias set mismatch at {h}x{w} k={k} ({u},{v})")
                        })?;
                        sets += 1;
                    }
                }
            }
        }
    }

    let mut worst: f64 = 0.0;
    for name in [KernelName::Nearest, KernelName::Mean, KernelName::Bilinear] {
        let kernel = KernelSpec::new(name, 2).unwrap();
        let probed = probe_dependencies(16, 16, |img| downsample(img, &kernel)).map_err(|e| e.to_string())?;
        for u in -4i64..4 {
            for v in -4i64..4 {
                for up in -8i64..8 {
                    for vp in -8i64..8 {
                        let a = alpha(u, v, up, vp, &kernel, 16, 16).map_err(|e| e.to_string())?;
                        worst = worst.max((a - probed.get(u, v, up, vp)).norm());
                    }
                }
            }
        }
    }
    ensure(worst <= 1e-9, || {
        format!("analytic vs probed alpha differ by {worst:e}")
    })?;

    let bilinear = leakage_report(&KernelSpec::new(KernelName::Bilinear, 2).unwrap(), 32, 32)
        .map_err(|e| e.to_string())?
        .total_out_band_fraction;
    ensure(bilinear > 0.01, || format!("bilinear leakage {bilinear}"))?;
    let rational = rational_leakage_report(2, &KernelSpec::new(KernelName::Mean, 3).unwrap(), 12, 12)
        .map_err(|e| e.to_string())?
        .total_out_band_fraction;
    ensure(rational > 1e-6, || format!("up2/down3 leakage {rational}"))?;
    Ok(format!(
        "{sets} alias sets; alpha error {worst:.1e}; bilinear leakage {bilinear:.4}; up2/down3 leakage {rational:.4}"
    ))
}

fn filter_algebra() -> Check {
    let mut rng = StdRng::seed_from_u64(3);
    let mut partition: f64 = 0.0;
    let mut mean_err: f64 = 0.0;
    for _ in 0..50 {
        let img = random_image(&mut rng, 16, 24);
        for r in [0.0, 1.5, 3.0, 7.2, 20.0] {
            let lo = low_pass_filter(&img, r).map_err(|e| e.to_string())?;
            let hi = high_pass_filter(&img, r).map_err(|e| e.to_string())?;
            partition = partition.max(lo.add(&hi).unwrap().max_abs_diff(&img));
        }
        let dc = low_pass_filter(&img, 0.0).map_err(|e| e.to_string())?;
        let m = img.mean(0);
        mean_err = mean_err.max(dc.data().iter().map(|p| (p - m).abs()).fold(0.0, f64::max));
        let mut last = 0.0;
        for step in 0..=30 {
            let e = low_pass_filter(&img, step as f64 * 0.5)
                .map_err(|e| e.to_string())?
                .energy();
            ensure(e + 1e-12 >= last, || {
                format!("energy fell from {last} to {e} at r={}", step as f64 * 0.5)
            })?;
            last = e;
        }
    }
    ensure(partition <= 1e-9, || {
        format!("low + high differs from input by {partition:e}")
    })?;
    ensure(mean_err <= 1e-9, || {
        format!("r=0 differs from channel mean by {mean_err:e}")
    })?;
    Ok(format!(
        "partition error {partition:.1e}; r=0 mean error {mean_err:.1e}; energy monotone"
    ))
}

fn table2_costs() -> Check {
    let bandwidths = [96u32, 128, 160, 192];
    // rows: crop until epoch 300, 225, 150, 75 of 300
    let printed = [
        (300u32, [0.18, 0.31, 0.49, 0.72]),
        (225, [0.38, 0.48, 0.62, 0.79]),
        (150, [0.59, 0.66, 0.75, 0.86]),
        (75, [0.79, 0.83, 0.87, 0.93]),
    ];
    let mut worst: f64 = 0.0;
    for (switch, row) in printed {
        for (b, want) in bandwidths.iter().zip(row) {
            let mut stages = vec![Stage::new(1, switch, TransformSpec::Crop { bandwidth: *b })];
            if switch < 300 {
                stages.push(Stage::new(switch + 1, 300, TransformSpec::Crop { bandwidth: 224 }));
            }
            let got = relative_cost_of_stages(&stages, 300, 224).cost;
            worst = worst.max((got - want).abs());
            ensure((got - want).abs() <= 0.03, || {
                format!("B={b} switch={switch}: {got:.3} vs {want}")
            })?;
        }
    }
    Ok(format!("16 cells, max deviation {worst:.4}"))
}

fn table5_schedule() -> Check {
    let et = efficienttrain_schedule(300).map_err(|e| e.to_string())?;
    let want = [(1, 180, 160), (181, 240, 192), (241, 300, 224)];
    let got: Vec<_> = et
        .stages()
        .iter()
        .map(|s| match s.transform {
            TransformSpec::Crop { bandwidth } => Ok((s.start, s.end, bandwidth)),
            ref other => Err(format!("unexpected stage transform {other:?}")),
        })
        .collect::<Result<_, _>>()?;
    ensure(got == want, || format!("stages {got:?}"))?;
    ensure(et.magnitude_rule() == MagnitudeRule::Linear { m0: 9.0 }, || {
        "magnitude rule".into()
    })?;
    let speedup = relative_cost(&et).speedup;
    let (lo, hi) = (1.53, 1.59);
    let gap = (lo - speedup).max(speedup - hi).max(0.0);
    ensure(gap <= 0.05, || {
        format!("speedup {speedup:.4} is {gap:.4} outside [{lo}, {hi}]")
    })?;
    let farthest = (speedup - lo).abs().max((speedup - hi).abs());
    Ok(format!(
        "stages {got:?}; speedup {speedup:.4}, {gap:.4} from [{lo}, {hi}], farthest entry {farthest:.4} away"
    ))
}

/// Algorithm semantics without early exit: keep the smallest feasible candidate per step.
fn reference_search(n: usize, candidates: &[u32], a0: f64, acc: &dyn Fn(&[u32]) -> f64) -> Vec<u32> {
    let mut solved = vec![*candidates.last().unwrap(); n];
    for i in (1..n).rev() {
        let best = candidates
            .iter()
            .copied()
            .filter(|&c| {
                let mut v = solved.clone();
                v[..i].fill(c);
                acc(&v) >= a0
            })
            .min();
        if let Some(b) = best {
            solved[i - 1] = b;
        }
    }
    solved
}

fn every_vector(n: usize, candidates: &[u32]) -> Vec<Vec<u32>> {
    (0..n).fold(vec![Vec::new()], |acc, _| {
        acc.into_iter()
            .flat_map(|p| {
                candidates.iter().map(move |&c| {
                    let mut v = p.clone();
                    v.push(c);
                    v
                })
            })
            .collect()
    })
}

fn greedy_search_equivalence() -> Check {
    let mut rng = StdRng::seed_from_u64(4);
    let grid = [64u32, 96, 128, 160, 192];
    let mut total_calls = 0;
    for trial in 0..100 {
        let n = rng.random_range(1..=4usize);
        let mut candidates: Vec<u32> = grid.to_vec();
        let keep = rng.random_range(0..=4usize);
        while candidates.len() > keep {
            candidates.remove(rng.random_range(0..candidates.len()));
        }
        candidates.push(224);

        let steps: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                candidates
                    .iter()
                    .scan(0.0, |g, _| {
                        *g += rng.random_range(0.0..0.02);
                        Some(*g)
                    })
                    .collect()
            })
            .collect();
        let coupling: f64 = rng.random_range(0.0..0.01);
        let pos = |b: u32| candidates.iter().position(|&c| c == b).unwrap();
        let table: HashMap<Vec<u32>, f64> = every_vector(n, &candidates)
            .into_iter()
            .map(|v| {
                let add: f64 = v.iter().enumerate().map(|(i, &b)| steps[i][pos(b)]).sum();
                let floor = v.iter().map(|&b| pos(b)).min().unwrap() as f64;
                let a = 0.7 + add + coupling * floor;
                (v, a)
            })
            .collect();
        let a0 = table[&vec![224; n]] - rng.random_range(0.0..0.03);

        let config = SearchConfig {
            total_epochs: 12 * n as u32,
            stages: n,
            candidates: candidates.clone(),
            baseline_accuracy: a0,
            oracle: OracleSpec::table(Vec::new()),
            cache_path: None,
            speculative: trial % 2 == 1,
        };
        let queried = std::sync::Mutex::new(Vec::new());
        let oracle = |b: &[u32]| {
            queried.lock().unwrap().push(b.to_vec());
            table[b]
        };
        let out = greedy_search_with(&config, &oracle).map_err(|e| format!("trial {trial}: {e}"))?;
        let expected = reference_search(n, &candidates, a0, &|v| table[v]);
        ensure(out.bandwidths == expected, || {
            format!("trial {trial}: greedy {:?} vs reference {expected:?}", out.bandwidths)
        })?;
        if out.feasible() && n > 1 {
            ensure(table[&out.bandwidths] >= a0, || {
                format!("trial {trial}: result infeasible")
            })?;
        }
        for e in &out.trace {
            if e.bandwidths[0] < out.bandwidths[e.step - 1] {
                ensure(!e.feasible, || {
                    format!("trial {trial}: smaller feasible candidate at step {}", e.step)
                })?;
            }
        }
        let mut queried = queried.into_inner().unwrap();
        let calls = queried.len();
        ensure(calls <= (n - 1) * candidates.len(), || {
            format!("trial {trial}: {calls} calls over budget")
        })?;
        queried.sort();
        queried.dedup();
        ensure(queried.len() == calls, || {
            format!("trial {trial}: duplicate oracle query")
        })?;
        total_calls += calls;
    }
    Ok(format!(
        "100 random monotone oracles, {total_calls} oracle calls in total"
    ))
}

fn transform_determinism() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let schedule = dir.path().join("et300.json");
    fs::write(
        &schedule,
        efficienttrain_schedule(300).unwrap().to_json_pretty().unwrap(),
    )
    .unwrap();
    let mut rng = StdRng::seed_from_u64(5);
    let mut inputs = Vec::new();
    for i in 0..50 {
        let path = dir.path().join(format!("img{i:02}.png"));
        let salt: u32 = rng.random_range(0..1000);
        GrayImage::from_fn(224, 224, |x, y| {
            image::Luma([((x * (3 + salt % 7) + y * 5 + (x * y) % (salt + 1)) % 256) as u8])
        })
        .save(&path)
        .unwrap();
        inputs.push(path);
    }

    let run = |workers: u32, out: &Path| -> Result<(), String> {
        let status = Command::new(env!("CARGO_BIN_EXE_specur"))
            .args([
                "transform",
                "--schedule",
                schedule.to_str().unwrap(),
                "--epoch",
                "200",
                "--seed",
                "7",
            ])
            .args(["--workers", &workers.to_string(), "--out", out.to_str().unwrap()])
            .args(&inputs)
            .output()
            .map_err(|e| e.to_string())?;
        ensure(status.status.success(), || {
            String::from_utf8_lossy(&status.stderr).into_owned()
        })
    };
    let outputs: Vec<_> = [1u32, 4, 8]
        .iter()
        .map(|&w| {
            let out = dir.path().join(format!("w{w}"));
            run(w, &out).map(|_| out)
        })
        .collect::<Result<_, _>>()?;
    for i in 0..50 {
        for ext in ["etns", "json"] {
            let name = format!("img{i:02}.{ext}");
            let first = fs::read(outputs[0].join(&name)).map_err(|e| format!("{name}: {e}"))?;
            for other in &outputs[1..] {
                let bytes = fs::read(other.join(&name)).map_err(|e| format!("{name}: {e}"))?;
                ensure(bytes == first, || format!("{name} differs in {}", other.display()))?;
            }
        }
    }
    Ok("50 images, outputs byte-identical for 1, 4 and 8 workers".into())
}

fn magnitude_linearity() -> Check {
    let want = [(0u32, 0.0), (150, 4.5), (300, 9.0)];
    for (t, m) in want {
        let got = magnitude_at(t, 300, 9.0).map_err(|e| e.to_string())?;
        ensure(got == m, || format!("m({t}) = {got}, expected {m}"))?;
    }
    let et = efficienttrain_schedule(300).unwrap();
    let (_, mid) = et.lookup(150).map_err(|e| e.to_string())?;
    ensure(mid == 4.5, || format!("schedule lookup at 150 gives {mid}"))?;
    Ok("m(0) = 0, m(150) = 4.5, m(300) = 9".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("DFT correctness", Duration::from_secs(10), dft_correctness),
        (
            "low-frequency crop is band-limited and invertible",
            Duration::from_secs(5),
            crop_is_band_limited,
        ),
        (
            "down-sampling alias structure and leakage",
            Duration::from_secs(30),
            downsampling_aliases,
        ),
        ("filter algebra", Duration::from_secs(5), filter_algebra),
        (
            "relative cost grid (16 cells, +-0.03)",
            Duration::from_secs(1),
            table2_costs,
        ),
        (
            "default curriculum stages and speedup",
            Duration::from_secs(1),
            table5_schedule,
        ),
        (
            "greedy search equals reference re-execution",
            Duration::from_secs(10),
            greedy_search_equivalence,
        ),
        (
            "transform determinism across worker counts",
            Duration::from_secs(30),
            transform_determinism,
        ),
        ("magnitude ramp values", Duration::from_secs(1), magnitude_linearity),
    ];
    let mut failures = 0;
    for (name, budget, check) in criteria {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let (ok, detail) = match result {
            Ok(d) if elapsed <= budget => (true, d),
            Ok(d) => (false, format!("{d}; over the {budget:?} budget")),
            Err(e) => (false, e),
        };
        if !ok {
            failures += 1;
        }
        println!(
            "{} {name}: {detail} [{:.2}s]",
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64()
        );
    }
    println!("{} of 9 criteria passed", 9 - failures);
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
