//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion.

use std::f64::consts::PI;
use std::path::Path;
use std::time::Instant;

use penum::curvature::*;
use penum::deconv::DeconvProblem;
use penum::energy::FactorGraph;
use penum::image::GridImage;
use penum::lift::{build_super_graph, select_consistency_edges, verify_edge_sufficiency, ConsistencyEdge, PatchCover};
use penum::synth::{add_gaussian_noise, blur_mean3, circle, random_binary, two_blob, two_blob_mask};
use penum::trws::{precompute_group_order, run, run_pairwise, send_message_grouped, send_message_naive, Direction, SolveResult, SolverOptions};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TIGHT_GAP: f64 = 1e-9;
const ENERGY_TOL: f64 = 1e-9;
const GAP_TARGET: f64 = 1e-6;
const WINDOW_TOL: f64 = 1e-8;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn monotone(r: &SolveResult) -> bool {
    r.trace.windows(2).all(|w| {
        let (a, b) = (w[0].lower_bound.unwrap(), w[1].lower_bound.unwrap());
        b >= a - 1e-9 * a.abs().max(1.0)
    })
}

fn segmentation(img: &GridImage, lambda: f64, table: PatchCostTable) -> SegmentationInstance {
    let data = data_term_from_image(&img.samples, 0.0, 1.0);
    build_segmentation_instance(img.width, img.height, data, lambda, table).unwrap()
}

fn oracle_equivalence() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let (mut total, mut tight, mut mismatches) = (0, 0, 0);
    let mut check = |r: SolveResult, g: &FactorGraph| {
        let (_, best) = g.brute_force_min().unwrap();
        total += 1;
        if r.relative_gap.unwrap() < TIGHT_GAP {
            tight += 1;
            if (r.energy - best).abs() > ENERGY_TOL {
                mismatches += 1;
            }
        }
    };
    for lambda in [0.0, 0.1, 1.0] {
        for _ in 0..20 {
            let data = (0..16).map(|_| [rng.random_range(0.0..1.0), rng.random_range(0.0..1.0)]).collect();
            let inst = build_segmentation_instance(4, 4, data, lambda, two_by_two_costs()).unwrap();
            let r = run(inst.graph(), &SolverOptions::default()).unwrap();
            check(r, &inst.to_factor_graph().unwrap());
        }
    }
    for seed in 0..20 {
        let mut y = blur_mean3(&random_binary(4, 4, seed));
        add_gaussian_noise(&mut y, 0.1, seed).unwrap();
        let p = DeconvProblem::from_image(&y).unwrap();
        let r = run(&p.super_graph().unwrap(), &SolverOptions::default()).unwrap();
        check(r, &p.to_factor_graph().unwrap());
    }
    let secs = start.elapsed().as_secs_f64();
    outcome(
        mismatches == 0 && tight > 0 && secs < 10.0,
        format!("{total} instances, {tight} with gap < {TIGHT_GAP:e}, {mismatches} energy mismatches, {secs:.2} s (limit 10 s)"),
    )
}

fn tight_bound() -> Outcome {
    let start = Instant::now();
    let img = two_blob(64, 1, 0.3).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for lambda in [0.01, 0.1, 1.0] {
        let inst = segmentation(&img, lambda, two_by_two_costs());
        let r = run(inst.graph(), &SolverOptions::default()).unwrap();
        let gap = r.relative_gap.unwrap();
        pass &= r.consistent && gap < GAP_TARGET && monotone(&r);
        parts.push(format!("λ={lambda}: gap {gap:.1e} in {} it", r.iterations));
        if lambda == 1.0 {
            let p = run_pairwise(&inst.to_pairwise_graph().unwrap(), &SolverOptions::default()).unwrap();
            let pg = p.relative_gap.unwrap();
            pass &= pg >= 10.0 * gap.max(1e-12);
            parts.push(format!("pairwise λ=1: gap {pg:.3e}"));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 60.0;
    outcome(pass, format!("{}; {secs:.2} s (limit 60 s)", parts.join(", ")))
}

fn deconvolution_gap() -> Outcome {
    let start = Instant::now();
    let truth = two_blob_mask(30, 3).unwrap();
    let mut y = blur_mean3(&truth);
    add_gaussian_noise(&mut y, 0.1, 17).unwrap();
    let p = DeconvProblem::from_image(&y).unwrap();
    let r = run(&p.super_graph().unwrap(), &SolverOptions::default()).unwrap();
    let gap = r.relative_gap.unwrap();
    let ours = p.energy(&r.base);
    let reference = p.energy(&truth.to_labels(0.5));
    let secs = start.elapsed().as_secs_f64();
    outcome(
        r.consistent && gap < GAP_TARGET && ours <= reference && secs < 60.0,
        format!("gap {gap:.1e}, data cost {ours:.6} vs ground truth {reference:.6}, {secs:.2} s (limit 60 s)"),
    )
}

fn direction_bias() -> Outcome {
    let start = Instant::now();
    let img = circle(81, 30.0).unwrap();
    let hist = |table| {
        let r = run(segmentation(&img, 20.0, table).graph(), &SolverOptions::default()).unwrap();
        let mask: Vec<bool> = r.base.iter().map(|&l| l == 1).collect();
        boundary_direction_histogram(81, 81, &mask)
    };
    let h2 = hist(two_by_two_costs());
    let h3 = hist(model_costs(Model::ThreeByThree, 0, None).unwrap());
    let off = 1.0 - h3.quarter_pi_fraction();
    let secs = start.elapsed().as_secs_f64();
    outcome(
        !h2.is_empty() && !h3.is_empty() && h2.axis_fraction() >= 0.95 && off < 0.05 && secs < 120.0,
        format!(
            "2x2 axis-aligned {:.1}% (need ≥95%), 3x3 off-π/4 {:.1}% (need <5%), {secs:.2} s (limit 120 s)",
            100.0 * h2.axis_fraction(),
            100.0 * off
        ),
    )
}

fn patch_cost_system() -> Outcome {
    let windows = model_windows(Model::ThreeByThree, None).unwrap();
    let table = model_costs(Model::ThreeByThree, 0, None).unwrap();
    let worst = windows
        .iter()
        .map(|w| (w.patch_states(3).iter().map(|&s| table.cost(s).unwrap()).sum::<f64>() - w.curvature).abs())
        .fold(0.0, f64::max);
    let nonneg = table.costs().iter().all(|&c| c >= 0.0);
    let straight_zero = windows
        .iter()
        .filter(|w| w.curvature == 0.0)
        .flat_map(|w| w.patch_states(3))
        .all(|s| table.cost(s) == Some(0.0));
    let corner = Window::from_rows(&["11111", "11111", "11000", "11100", "11110"], 3.0 * PI / 4.0).unwrap();
    let corner_sum: f64 = corner.patch_states(3).iter().map(|&s| table.cost(s).unwrap()).sum();
    let corner_err = (corner_sum - 3.0 * PI / 4.0).abs();
    outcome(
        table.len() == 122 && worst <= WINDOW_TOL && nonneg && straight_zero && corner_err <= WINDOW_TOL,
        format!(
            "{} labels, max window residual {worst:.1e}, nonnegative {nonneg}, straight labels zero {straight_zero}, 3π/4 corner residual {corner_err:.1e}",
            table.len()
        ),
    )
}

fn message_kernel() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut mismatches, mut over_budget) = (0, 0);
    for _ in 0..10_000 {
        let groups = rng.random_range(1..10usize);
        let la = rng.random_range(1..40usize);
        let lb = rng.random_range(1..40usize);
        let mut ga: Vec<u32> = (0..la).map(|_| rng.random_range(0..groups as u32)).collect();
        let mut gb: Vec<u32> = (0..lb).map(|_| rng.random_range(0..groups as u32)).collect();
        let used: std::collections::BTreeSet<u32> = ga.iter().chain(&gb).copied().collect();
        for g in ga.iter_mut().chain(gb.iter_mut()) {
            *g = used.range(..*g).count() as u32;
        }
        let edge = ConsistencyEdge { a: 0, b: 1, overlap: vec![0], groups_a: ga, groups_b: gb, group_count: used.len() };
        let dir = if rng.random_bool(0.5) { Direction::AtoB } else { Direction::BtoA };
        let layout = precompute_group_order(&edge);
        let h: Vec<f64> = (0..layout.source_len(dir))
            .map(|_| if rng.random_bool(0.2) { f64::INFINITY } else { rng.random_range(-5.0..5.0) })
            .collect();
        let mut fast = vec![0.0; layout.target_len(dir)];
        let mut slow = fast.clone();
        let ops = send_message_grouped(&layout, dir, &h, &mut fast);
        send_message_naive(&edge, dir, &h, &mut slow);
        if fast.iter().zip(&slow).any(|(a, b)| a.to_bits() != b.to_bits()) {
            mismatches += 1;
        }
        if ops > 4 * (la + lb) {
            over_budget += 1;
        }
    }
    outcome(
        mismatches == 0 && over_budget == 0,
        format!("10000 draws, {mismatches} mismatches, {over_budget} over 4·(|La|+|Lb|) operations"),
    )
}

fn structural_invariants() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let mut failures = Vec::new();

    // Lifting preserves energy.
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let mut g = FactorGraph::binary(16);
        for i in 0..16 {
            g.add_unary(i, vec![rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)]).unwrap();
        }
        for r in 0..3 {
            for c in 0..3 {
                let i = r * 4 + c;
                let t = (0..16).map(|_| rng.random_range(-1.0..1.0)).collect();
                g.add_factor(vec![i, i + 1, i + 4, i + 5], t).unwrap();
            }
        }
        let sg = build_super_graph(&g, &PatchCover::sliding_grid(4, 4, 2).unwrap()).unwrap();
        for _ in 0..50 {
            let x: Vec<usize> = (0..16).map(|_| rng.random_range(0..2)).collect();
            let e = sg.super_energy(&sg.lift(&x).unwrap());
            worst = worst.max((e - g.evaluate(&x).unwrap()).abs());
        }
    }
    if worst > 1e-9 {
        failures.push(format!("lift error {worst:e}"));
    }

    // Edge sufficiency of the 4-connected lattice.
    let cover = PatchCover::sliding_grid(6, 5, 2).unwrap();
    if !verify_edge_sufficiency(&cover, &select_consistency_edges(&cover)) {
        failures.push("4-connected cover not sufficient".into());
    }

    // Monotone bounds.
    for seed in 0..3 {
        let img = two_blob(24, seed, 0.4).unwrap();
        let r = run(segmentation(&img, 0.5, two_by_two_costs()).graph(), &SolverOptions::default()).unwrap();
        if !monotone(&r) {
            failures.push(format!("bound decreased (seed {seed})"));
        }
    }

    // Unary weights per pixel.
    for (w, h) in [(5, 4), (9, 9)] {
        let inst = build_segmentation_instance(w, h, vec![[0.0, 1.0]; w * h], 0.0, two_by_two_costs()).unwrap();
        let total: f64 = inst.graph().nodes().iter().map(|n| *n.unary.last().unwrap()).sum();
        if (total - (w * h) as f64).abs() > 1e-9 {
            failures.push(format!("unary total {total} on {w}x{h}"));
        }
    }

    // Image round trips.
    for seed in 0..20 {
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let img = GridImage::new(16, 16, (0..256).map(|_| f64::from(r.random_range(0..=255u16)) / 255.0).collect()).unwrap();
        let p5 = GridImage::decode(&img.encode_pgm(255, false), Path::new("p5")).unwrap();
        let p2 = GridImage::decode(&img.encode_pgm(255, true), Path::new("p2")).unwrap();
        let bin = random_binary(13, 7, seed);
        let p4 = GridImage::decode(&bin.encode_pbm(false), Path::new("p4")).unwrap();
        if p5 != img || p2 != img || p4 != bin {
            failures.push(format!("image round trip (seed {seed})"));
        }
    }

    let secs = start.elapsed().as_secs_f64();
    if secs >= 120.0 {
        failures.push(format!("took {secs:.1} s"));
    }
    let detail = if failures.is_empty() {
        format!("lift error {worst:.1e}, edge sufficiency, monotone bounds, unary totals, image round trips; {secs:.2} s (limit 120 s)")
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("oracle equivalence", oracle_equivalence),
        ("tight bound", tight_bound),
        ("deconvolution gap", deconvolution_gap),
        ("direction bias", direction_bias),
        ("patch cost system", patch_cost_system),
        ("message kernel", message_kernel),
        ("structural invariants", structural_invariants),
    ];
    let mut failed = 0;
    for (k, (name, f)) in criteria.iter().enumerate() {
        let o = f();
        println!("acceptance {} {name}: {} ({})", k + 1, if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
