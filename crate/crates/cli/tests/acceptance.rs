//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::collections::{HashMap, HashSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector, Point3, Rotation3, Unit, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sizecover_core::cover::*;
use sizecover_core::shape::*;
use sizecover_core::stats::*;
use sizecover_pipeline::report::RunReport;
use sizecover_pipeline::synth::{deform, head_modes, head_template, spec_for, SynthKind};

type Outcome = Result<String, String>;
type Criterion<'a> = (&'static str, Box<dyn Fn() -> Outcome + 'a>);

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn random_points(rng: &mut impl Rng, n: usize, d: usize) -> Vec<ParamPoint> {
    (0..n).map(|i| ParamPoint::new(i as u64, (0..d).map(|_| rng.random::<f64>()).collect())).collect()
}

/// Per-dimension spread of the point cloud.
fn extent(points: &[ParamPoint]) -> Vec<f64> {
    (0..points[0].dim())
        .map(|j| {
            let (lo, hi) = points
                .iter()
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.coords[j]), hi.max(p.coords[j])));
            (hi - lo).max(1e-3)
        })
        .collect()
}

fn oracle_bounds() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1001);
    let (mut worst_greedy, mut worst_shift) = (0.0f64, 0.0f64);
    let instances = 200;
    for i in 0..instances {
        let n = rng.random_range(2..=12);
        let pts = random_points(&mut rng, n, 2);
        let frac = rng.random_range(0.2..=0.4);
        let sides: Vec<f64> = extent(&pts).iter().map(|e| frac * e).collect();
        let opt = exact_min_cover(&candidate_boxes_combinatorial(&pts, &sides).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?
            .k() as f64;
        let greedy = greedy_cover_all(&candidate_boxes_centered(&pts, &sides).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        let shift = shifting_cover_2d(&pts, &sides, 2).map_err(|e| e.to_string())?;
        let bound = 4.0 * ((n as f64).ln() + 1.0);
        check(greedy.uncovered_ids.is_empty() && shift.uncovered_ids.is_empty(), || format!("instance {i} not covered"))?;
        let (g, s) = (greedy.k() as f64 / opt, shift.k() as f64 / opt);
        check(g <= bound, || format!("instance {i}: greedy ratio {g} > {bound}"))?;
        check((1.0..=2.25).contains(&s), || format!("instance {i}: shifting ratio {s}"))?;
        worst_greedy = worst_greedy.max(g);
        worst_shift = worst_shift.max(s);
    }
    let elapsed = start.elapsed();
    check(elapsed < Duration::from_secs(300), || format!("took {elapsed:?}"))?;
    Ok(format!(
        "{instances} instances, max greedy/opt {worst_greedy:.3}, max shifting/opt {worst_shift:.3}, {:.1}s",
        elapsed.as_secs_f64()
    ))
}

fn max_coverage() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1002);
    let factor = 1.0 - (-1.0f64).exp();
    let mut worst = f64::INFINITY;
    let mut partial = 0;
    let instances = 200;
    for i in 0..instances {
        let n = rng.random_range(2..=12);
        let k = rng.random_range(1..=3);
        let pts = random_points(&mut rng, n, 2);
        let frac = rng.random_range(0.05..=0.3);
        let sides: Vec<f64> = extent(&pts).iter().map(|e| frac * e).collect();
        let c = candidate_boxes_centered(&pts, &sides).map_err(|e| e.to_string())?;
        let g = greedy_cover_k(&c, k).map_err(|e| e.to_string())?.covered_ids.len() as f64;
        let o = exact_max_coverage(&c, k).map_err(|e| e.to_string())?.covered_ids.len() as f64;
        check(g >= factor * o && g <= o, || format!("instance {i}: greedy {g}, optimum {o}"))?;
        worst = worst.min(g / o);
        partial += (o < n as f64) as usize;
    }
    Ok(format!(
        "{instances} instances ({partial} where k boxes cannot cover all), min greedy/opt coverage {worst:.3} (bound {factor:.3})"
    ))
}

fn mask_of(points: &[ParamPoint], center: &[f64], sides: &[f64]) -> u32 {
    points
        .iter()
        .enumerate()
        .filter(|(_, p)| p.coords.iter().zip(center).zip(sides).all(|((x, c), s)| (x - c).abs() <= s / 2.0))
        .fold(0, |m, (i, _)| m | 1 << i)
}

/// Fewest masks whose union is `full`, by breadth-first search over unions.
fn bfs_min_cover(masks: &[u32], full: u32) -> usize {
    let distinct: HashSet<u32> = masks.iter().copied().filter(|&m| m != 0).collect();
    let mut seen: HashMap<u32, usize> = HashMap::from([(0, 0)]);
    let mut frontier = vec![0u32];
    let mut depth = 0;
    while !seen.contains_key(&full) {
        depth += 1;
        let mut next = Vec::new();
        for &u in &frontier {
            for &m in &distinct {
                if let std::collections::hash_map::Entry::Vacant(e) = seen.entry(u | m) {
                    e.insert(depth);
                    next.push(u | m);
                }
            }
        }
        frontier = next;
    }
    seen[&full]
}

fn two_d_lemma() -> Outcome {
    let mut summary = Vec::new();
    let mut counterexamples = 0;
    for d in 1..=3usize {
        let mut worst = 0;
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(3000 + 100 * d as u64 + seed);
            let n = rng.random_range(2..=10);
            let pts = random_points(&mut rng, n, d);
            let sides: Vec<f64> = (0..d).map(|_| rng.random_range(0.2..0.6)).collect();
            let comb = candidate_boxes_combinatorial(&pts, &sides).map_err(|e| e.to_string())?;
            for b in 0..comb.len() {
                let target = comb.covered_by(b).iter().fold(0u32, |m, &p| m | 1 << p);
                if target == 0 {
                    continue;
                }
                let masks: Vec<u32> = pts.iter().map(|p| mask_of(&pts, &p.coords, &sides) & target).collect();
                let need = bfs_min_cover(&masks, target);
                worst = worst.max(need);
                if need > 2 * d {
                    counterexamples += 1;
                }
            }
        }
        summary.push(format!("d={d} max {worst}/{}", 2 * d));
    }
    check(counterexamples == 0, || format!("{counterexamples} counterexamples ({})", summary.join(", ")))?;
    Ok(format!("150 instances, 0 counterexamples ({})", summary.join(", ")))
}

fn chain_topology(v: usize, landmarks: Vec<usize>) -> Arc<Topology> {
    let faces = (0..v - 2).map(|i| [0, i + 1, i + 2]).collect();
    Arc::new(Topology::new(v, faces, landmarks).unwrap())
}

fn random_mesh(rng: &mut impl Rng, id: u64, topo: &Arc<Topology>) -> ParameterizedMesh {
    let vertices = (0..topo.vertex_count())
        .map(|_| Point3::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    ParameterizedMesh::new(id, vertices, Arc::clone(topo)).unwrap()
}

fn random_motion(rng: &mut impl Rng) -> RigidTransform {
    let axis = Unit::new_normalize(Vector3::new(
        rng.random::<f64>() - 0.5,
        rng.random::<f64>() - 0.5,
        rng.random::<f64>() - 0.5,
    ));
    RigidTransform {
        rotation: *Rotation3::from_axis_angle(&axis, rng.random_range(-3.0..3.0)).matrix(),
        translation: Vector3::new(rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)),
    }
}

fn gpa_suite() -> Outcome {
    let topo = chain_topology(10, vec![]);
    let mut rng = ChaCha8Rng::seed_from_u64(4000);
    let shape = random_mesh(&mut rng, 0, &topo);
    let same = vec![shape.clone(); 4];
    check(procrustes_mean(&same).map_err(|e| e.to_string())? == shape.centered(), || "identical inputs moved".into())?;

    let copies: Vec<_> = (0..5).map(|i| random_motion(&mut rng).apply_mesh(&shape).with_id(i)).collect();
    let mean = procrustes_mean(&copies).map_err(|e| e.to_string())?;
    let collapse = copies.iter().map(|c| rigid_align(c, &mean).unwrap().residual).fold(0.0, f64::max);
    check(collapse < 1e-8, || format!("collapse residual {collapse}"))?;

    let mut max_iter = 0;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(4100 + seed);
        let base = random_mesh(&mut rng, 0, &topo);
        let corpus: Vec<_> = (0..5)
            .map(|i| {
                let noisy = base.with_vertices(
                    base.vertices()
                        .iter()
                        .map(|v| {
                            v + Vector3::new(
                                rng.random_range(-0.1..0.1),
                                rng.random_range(-0.1..0.1),
                                rng.random_range(-0.1..0.1),
                            )
                        })
                        .collect(),
                );
                random_motion(&mut rng).apply_mesh(&noisy).with_id(i)
            })
            .collect();
        let fit = procrustes_fit(&corpus, &ProcrustesOptions::default()).map_err(|e| e.to_string())?;
        check(fit.converged && fit.iterations <= 100, || format!("corpus {seed}: {} iterations", fit.iterations))?;
        for w in fit.objective_history.windows(2) {
            check(w[1] <= w[0] * (1.0 + 1e-12), || format!("corpus {seed}: objective rose {} -> {}", w[0], w[1]))?;
        }
        max_iter = max_iter.max(fit.iterations);
    }
    Ok(format!("fixed point exact, collapse residual {collapse:.1e}, 50 corpora monotone, max {max_iter} iterations"))
}

fn shape_space_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5000);
    let topo = chain_topology(12, vec![0, 1, 2, 3]);
    let corpus: Vec<_> = (0..10).map(|i| random_mesh(&mut rng, i, &topo)).collect();
    let basis = pca_fit(&corpus, 1.0).map_err(|e| e.to_string())?;
    let mut pca_err = 0.0f64;
    for m in &corpus {
        let w = pca_project(&basis, m).map_err(|e| e.to_string())?;
        let back = pca_reconstruct(&basis, &w).map_err(|e| e.to_string())?.to_flat();
        let want = m.centered().to_flat();
        pca_err = pca_err.max((back - &want).norm() / want.norm());
    }
    check(pca_err < 1e-8, || format!("PCA round trip {pca_err:e}"))?;

    // noiseless affine weights w = F·[p; 1]
    let f = DMatrix::from_fn(4, 4, |_, _| rng.random_range(-2.0..2.0));
    let points: Vec<ParamPoint> =
        (0..20).map(|i| ParamPoint::new(i, (0..3).map(|_| rng.random_range(0.1..0.3)).collect())).collect();
    let weights: Vec<DVector<f64>> = points
        .iter()
        .map(|p| &f * DVector::from_iterator(4, p.coords.iter().copied().chain([1.0])))
        .collect();
    let fmap = feature_fit(&points, &weights, FeatureMode::Affine).map_err(|e| e.to_string())?;
    let fit_err = (fmap.matrix() - &f).amax() / f.amax();
    check(fit_err < 1e-8, || format!("feature map recovery {fit_err:e}"))?;

    // head proxy: landmark distances are affine in the mode weights
    let t = head_template();
    let modes = head_modes(&t);
    let spec = spec_for(SynthKind::Head);
    let train: Vec<ParameterizedMesh> = (0..40)
        .map(|i| {
            let w = ParamPoint::new(i, (0..5).map(|_| rng.random_range(-0.01..0.01)).collect());
            deform(&t, &modes, &w).unwrap()
        })
        .collect();
    let pts: Vec<ParamPoint> = train.iter().map(|m| measure(m, &spec).unwrap()).collect();
    let basis = pca_fit(&train, 1.0).map_err(|e| e.to_string())?;
    let ws: Vec<DVector<f64>> = train.iter().map(|m| pca_project(&basis, m).unwrap()).collect();
    let fmap = feature_fit(&pts, &ws, FeatureMode::Affine).map_err(|e| e.to_string())?;
    let mut synth_err = 0.0f64;
    for i in 0..50 {
        let p = ParamPoint::new(
            i,
            pts[i as usize % pts.len()].coords.iter().map(|c| c + rng.random_range(-0.015..0.015)).collect(),
        );
        let m = measure(&synthesize(&basis, &fmap, &p).map_err(|e| e.to_string())?, &spec).unwrap();
        for (a, b) in m.coords.iter().zip(&p.coords) {
            synth_err = synth_err.max((a - b).abs());
        }
    }
    check(synth_err < 1e-4, || format!("synthesis measurement error {synth_err:e} m"))?;
    Ok(format!("PCA {pca_err:.1e}, feature map {fit_err:.1e}, synthesis {synth_err:.1e} m"))
}

fn statistics_suite() -> Outcome {
    let pts = vec![
        ParamPoint::new(0, vec![0.0, 1.0]),
        ParamPoint::new(1, vec![3.0, 1.0]),
        ParamPoint::new(2, vec![0.0, 4.0]),
    ];
    let g = gaussian_fit(&pts).map_err(|e| e.to_string())?;
    // mean (1, 2); deviations (-1,-1), (2,-1), (-1,2) give [[6,-3],[-3,6]] / 3
    check(
        g.mean().as_slice() == [1.0, 2.0] && g.covariance() == &DMatrix::from_row_slice(2, 2, &[2.0, -1.0, -1.0, 2.0]),
        || format!("3-point MLE {:?} {:?}", g.mean(), g.covariance()),
    )?;

    let model = GaussianModel::new(
        DVector::from_vec(vec![0.15, 0.19, 0.21]),
        DMatrix::from_row_slice(3, 3, &[4e-5, 2e-5, 1e-5, 2e-5, 5e-5, 1.5e-5, 1e-5, 1.5e-5, 6e-5]),
    )
    .unwrap();
    let fit = gaussian_fit(&gaussian_sample(&model, 100_000, 6000).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    let rel = fit
        .mean()
        .iter()
        .zip(model.mean().iter())
        .chain(fit.covariance().iter().zip(model.covariance().iter()))
        .map(|(a, b)| (a - b).abs() / b.abs())
        .fold(0.0, f64::max);
    check(rel < 0.02, || format!("sample fit relative error {rel}"))?;

    let mut radius_err = 0.0f64;
    for (c, seed) in [(0.5, 1), (1.0, 2), (2.0, 3), (3.5, 4)] {
        for p in level_set_sample(&model, c, 200, seed).map_err(|e| e.to_string())? {
            let r = model.mahalanobis(&DVector::from_vec(p.coords)).unwrap().sqrt();
            radius_err = radius_err.max((r - c).abs());
        }
    }
    check(radius_err < 1e-8, || format!("level-set radius error {radius_err:e}"))?;
    Ok(format!("3-point MLE exact, 1e5-sample max rel. error {:.2}%, level-set error {radius_err:.1e}", 100.0 * rel))
}

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_sizecover")
}

fn run(args: &[&str]) -> Result<String, String> {
    let out = Command::new(bin()).args(args).output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("sizecover {} failed: {}", args.join(" "), String::from_utf8_lossy(&out.stderr)));
    }
    Ok(String::from_utf8_lossy(&out.stdout).into_owned())
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn synthetic_heads(work: &Path) -> Outcome {
    let start = Instant::now();
    let data = work.join("heads");
    run(&["synth", "--n", "1500", "--holdout", "500", "--seed", "2024", "--out", p(&data)])?;
    let common = |out: &Path| {
        vec![
            "--corpus".to_string(),
            p(&data.join("train/manifest.json")).to_string(),
            "--measurements".into(),
            p(&data.join("spec.json")).into(),
            "--test".into(),
            p(&data.join("test/manifest.json")).into(),
            "--extrapolate-sparse".into(),
            "--out".into(),
            p(out).into(),
        ]
    };
    let all_dir = work.join("heads_all");
    let mut args = vec!["cover-all".to_string()];
    args.extend(common(&all_dir));
    run(&args.iter().map(String::as_str).collect::<Vec<_>>())?;
    let k_dir = work.join("heads_k3");
    let mut args = vec!["cover-k".to_string(), "--k".into(), "3".into()];
    args.extend(common(&k_dir));
    run(&args.iter().map(String::as_str).collect::<Vec<_>>())?;
    let elapsed = start.elapsed();

    let all = RunReport::load(&all_dir.join("report.json")).map_err(|e| e.to_string())?;
    let k3 = RunReport::load(&k_dir.join("report.json")).map_err(|e| e.to_string())?;
    let full = all.holdout.as_ref().ok_or("no held-out result")?.coverage;
    let three = k3.holdout.as_ref().ok_or("no held-out result")?.coverage;
    let detail = format!(
        "cover-all {} boxes, held-out {:.1}%; cover-k 3 held-out {:.1}% ({:.1}% of full); {:.1}s",
        all.boxes.len(),
        100.0 * full,
        100.0 * three,
        100.0 * three / full,
        elapsed.as_secs_f64()
    );
    check(all.dim() == 3 && full >= 0.95 && three >= 0.8 * full, || detail.clone())?;
    check(elapsed < Duration::from_secs(120), || detail.clone())?;
    Ok(detail)
}

fn epsilon_consistency(work: &Path) -> Outcome {
    let data = work.join("faces");
    run(&["synth", "--n", "50", "--kind", "face", "--seed", "81", "--out", p(&data)])?;
    let out = work.join("faces_shift");
    run(&[
        "shift",
        "--l",
        "2",
        "--corpus",
        p(&data.join("train/manifest.json")),
        "--measurements",
        p(&data.join("spec.json")),
        "--extrapolate-sparse",
        "--out",
        p(&out),
    ])?;
    let report = RunReport::load(&out.join("report.json")).map_err(|e| e.to_string())?;
    let eps = report.parameters.epsilon.ok_or("no epsilon in report")?;
    let formula = (1.0f64 + 1.0 / 2.0).powi(2) - 1.0;
    check(eps == 1.25 && eps == formula && report.tolerances == [0.0267, 0.0019], || {
        format!("epsilon {eps}, tolerances {:?}", report.tolerances)
    })?;
    Ok(format!("l=2, d=2 report epsilon {eps}"))
}

fn tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in fs::read_dir(&d).unwrap() {
            let path = e.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push((path.strip_prefix(dir).unwrap().to_path_buf(), fs::read(&path).unwrap()));
            }
        }
    }
    out.sort();
    out
}

fn determinism(work: &Path) -> Outcome {
    let data = work.join("det_data");
    run(&["synth", "--n", "120", "--holdout", "40", "--kind", "face", "--seed", "5", "--out", p(&data)])?;
    let train = data.join("train/manifest.json");
    let test = data.join("test/manifest.json");
    let spec = data.join("spec.json");
    let cover_args = |sub: &[&str], out: &Path| -> Vec<String> {
        let mut a: Vec<String> = sub.iter().map(|s| s.to_string()).collect();
        for s in [
            "--corpus",
            p(&train),
            "--measurements",
            p(&spec),
            "--test",
            p(&test),
            "--extrapolate-sparse",
            "--seed",
            "3",
            "--out",
            p(out),
        ] {
            a.push(s.to_string());
        }
        a
    };
    type Job<'a> = (&'a str, Box<dyn Fn(&Path) -> Vec<String> + 'a>);
    let jobs: Vec<Job> = vec![
        ("synth", Box::new(|o: &Path| {
            ["synth", "--n", "30", "--holdout", "10", "--seed", "9", "--out", p(o)].map(String::from).to_vec()
        })),
        ("cover-all", Box::new(|o: &Path| cover_args(&["cover-all"], o))),
        ("cover-k", Box::new(|o: &Path| cover_args(&["cover-k", "--k", "3"], o))),
        ("shift", Box::new(|o: &Path| cover_args(&["shift", "--l", "2"], o))),
        ("extrapolate --count", Box::new(|o: &Path| {
            ["extrapolate", "--corpus", p(&train), "--measurements", p(&spec), "--count", "15", "--seed", "4", "--out", p(o)]
                .map(String::from)
                .to_vec()
        })),
        ("extrapolate --level", Box::new(|o: &Path| {
            ["extrapolate", "--corpus", p(&train), "--measurements", p(&spec), "--level", "2.0", "--seed", "4", "--out", p(o)]
                .map(String::from)
                .to_vec()
        })),
    ];
    let mut names = Vec::new();
    for (name, job) in &jobs {
        let slug = name.replace([' ', '-'], "_");
        let (a, b) = (work.join(format!("det_{slug}_a")), work.join(format!("det_{slug}_b")));
        let out_a = run(&job(&a).iter().map(String::as_str).collect::<Vec<_>>())?;
        let out_b = run(&job(&b).iter().map(String::as_str).collect::<Vec<_>>())?;
        let (ta, tb) = (tree(&a), tree(&b));
        check(!ta.is_empty() && ta == tb, || format!("{name}: outputs differ"))?;
        check(out_a.replace(p(&a), "") == out_b.replace(p(&b), ""), || format!("{name}: stdout differs"))?;
        names.push(*name);
    }
    let report = work.join("det_cover_all_a/report.json");
    let (ea, eb) = (work.join("det_eval_a"), work.join("det_eval_b"));
    let eval = |o: &Path| {
        run(&["evaluate", "--report", p(&report), "--test", p(&test), "--measurements", p(&spec), "--out", p(o)])
    };
    let (sa, sb) = (eval(&ea)?, eval(&eb)?);
    check(sa == sb && tree(&ea) == tree(&eb), || "evaluate: outputs differ".into())?;
    names.push("evaluate");
    Ok(format!("byte-identical reruns: {}", names.join(", ")))
}

fn main() {
    let work = tempfile::tempdir().expect("temporary directory");
    let criteria: Vec<Criterion> = vec![
        ("oracle-bound suite", Box::new(oracle_bounds)),
        ("max-coverage suite", Box::new(max_coverage)),
        ("2d-covering lemma", Box::new(two_d_lemma)),
        ("GPA suite", Box::new(gpa_suite)),
        ("shape-space suite", Box::new(shape_space_suite)),
        ("statistics suite", Box::new(statistics_suite)),
        ("synthetic head-proxy protocol", Box::new(|| synthetic_heads(work.path()))),
        ("epsilon consistency", Box::new(|| epsilon_consistency(work.path()))),
        ("determinism", Box::new(|| determinism(work.path()))),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(f))
            .unwrap_or_else(|_| Err("panicked".to_string()));
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
