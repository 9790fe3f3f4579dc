//! Dataset tooling against fixtures from an independent reference
//! generator (`fixtures/rng_reference.py`) and brute-force oracles.

use std::collections::HashSet;

use proptest::prelude::*;
use servokit::camera::PixelPoint;
use servokit::datapipe::{
    augment, evaluate, kfold_partition, reorder_canonical, split_train_val, AugmentOp, DatapipeError,
    LabeledImage, Units,
};
use servokit::rng::ShiftRng;
use servokit::vision::{CornerQuad, RasterImage};
use sha2::{Digest, Sha256};

const FIXTURES: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures");

fn fixture(name: &str) -> String {
    std::fs::read_to_string(format!("{FIXTURES}/{name}")).unwrap()
}

fn ids(prefix: &str, n: usize, width: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}_{i:0width$}")).collect()
}

fn fold_csv(plan: &servokit::datapipe::FoldPlan) -> Vec<u8> {
    let mut out = Vec::new();
    plan.write_csv(&mut out).unwrap();
    out
}

#[test]
fn generator_matches_reference_stream() {
    let expected: Vec<u64> = fixture("rng_seed42.txt").lines().map(|l| l.parse().unwrap()).collect();
    let mut rng = ShiftRng::new(42);
    let got: Vec<u64> = (0..expected.len()).map(|_| rng.next_u64()).collect();
    assert_eq!(got, expected);
}

#[test]
fn small_fold_plan_matches_reference() {
    let plan = kfold_partition(&ids("img", 20, 2), 7, 42).unwrap();
    assert_eq!(String::from_utf8(fold_csv(&plan)).unwrap(), fixture("kfold_n20_k7_seed42.csv"));
}

#[test]
fn large_fold_plan_matches_reference_digest() {
    let plan = kfold_partition(&ids("img", 1600, 4), 7, 42).unwrap();
    let digest: String = Sha256::digest(fold_csv(&plan))
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect();
    assert_eq!(digest, fixture("kfold_n1600_k7_seed42.sha256").trim());
}

#[test]
fn fold_sizes_for_sixteen_hundred() {
    let plan = kfold_partition(&ids("img", 1600, 4), 7, 42).unwrap();
    let mut sizes = plan.fold_sizes();
    sizes.sort_unstable();
    assert_eq!(sizes, vec![228, 228, 228, 229, 229, 229, 229]);
}

#[test]
fn rounds_cover_twenty_items_exactly_once() {
    let all = ids("img", 20, 2);
    let plan = kfold_partition(&all, 7, 42).unwrap();
    let rounds = plan.rounds();
    assert_eq!(rounds.len(), 7);
    let mut seen = HashSet::new();
    for round in &rounds {
        let test: HashSet<_> = round.test.iter().collect();
        let train: HashSet<_> = round.train.iter().collect();
        assert!(test.is_disjoint(&train));
        assert_eq!(test.len() + train.len(), 20);
        for id in &round.test {
            assert!(seen.insert(id.clone()), "{id} tested twice");
        }
    }
    assert_eq!(seen, all.into_iter().collect());
}

#[test]
fn kfold_rejects_too_many_folds() {
    assert!(kfold_partition(&ids("a", 5, 1), 7, 1).is_err());
    assert!(kfold_partition(&ids("a", 5, 1), 1, 1).is_err());
}

#[test]
fn split_sizes_and_seeds() {
    let all = ids("img", 1600, 4);
    let (train, val) = split_train_val(&all, 0.1, 42).unwrap();
    assert_eq!((train.len(), val.len()), (1440, 160));
    let union: HashSet<_> = train.iter().chain(&val).collect();
    assert_eq!(union.len(), 1600);
    assert_eq!(split_train_val(&all, 0.1, 42).unwrap(), (train.clone(), val.clone()));
    let small = ids("s", 10, 1);
    assert_ne!(split_train_val(&small, 0.3, 1).unwrap(), split_train_val(&small, 0.3, 2).unwrap());
    let (t, v) = split_train_val(&small, 0.9, 7).unwrap();
    assert_eq!((t.len(), v.len()), (1, 9));
    assert!(matches!(split_train_val(&[], 0.1, 1), Err(DatapipeError::Empty)));
}

/// Score of a point for each role; larger is more TL/TR/BR/BL-like.
fn role_score(role: usize, p: &PixelPoint) -> f64 {
    match role {
        0 => -(p.u + p.v),
        1 => p.u - p.v,
        2 => p.u + p.v,
        _ => p.v - p.u,
    }
}

fn permutations() -> Vec<[usize; 4]> {
    let mut out = Vec::new();
    for a in 0..4 {
        for b in 0..4 {
            for c in 0..4 {
                for d in 0..4 {
                    let p = [a, b, c, d];
                    if (0..4).all(|i| p.contains(&i)) {
                        out.push(p);
                    }
                }
            }
        }
    }
    out
}

/// Role assignment with the smallest total cost over all 24 orderings.
fn brute_force_order(points: &[PixelPoint; 4]) -> [PixelPoint; 4] {
    let perms = permutations();
    assert_eq!(perms.len(), 24);
    let best = perms
        .into_iter()
        .min_by(|a, b| {
            let cost = |p: &[usize; 4]| -(0..4).map(|r| role_score(r, &points[p[r]])).sum::<f64>();
            cost(a).total_cmp(&cost(b))
        })
        .unwrap();
    best.map(|i| points[i])
}

fn rotated_square(center: (f64, f64), half: f64, degrees: f64) -> [PixelPoint; 4] {
    let (s, c) = degrees.to_radians().sin_cos();
    [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)].map(|(x, y)| {
        PixelPoint::new(center.0 + half * (c * x - s * y), center.1 + half * (s * x + c * y))
    })
}

#[test]
fn ordering_matches_brute_force() {
    let scrambled = [(50.0, 30.0), (10.0, 10.0), (10.0, 30.0), (50.0, 10.0)].map(|(u, v)| PixelPoint::new(u, v));
    let q = reorder_canonical(&scrambled).unwrap();
    let expected = [(10.0, 10.0), (50.0, 10.0), (50.0, 30.0), (10.0, 30.0)].map(|(u, v)| PixelPoint::new(u, v));
    assert_eq!(q.points(), &expected);

    let square = rotated_square((100.0, 100.0), 40.0, 44.0);
    for perm in permutations() {
        let shuffled = perm.map(|i| square[i]);
        let q = reorder_canonical(&shuffled).unwrap();
        assert_eq!(q.points(), &brute_force_order(&shuffled));
    }
}

proptest! {
    #[test]
    fn ordering_agrees_with_oracle_on_rotated_squares(
        cx in 50.0..500.0f64, cy in 50.0..400.0f64, half in 5.0..40.0f64, deg in -44.0..44.0f64,
        perm in Just(permutations()).prop_flat_map(|p| (0..24usize).prop_map(move |i| p[i])),
    ) {
        let square = rotated_square((cx, cy), half, deg);
        let shuffled = perm.map(|i| square[i]);
        let q = reorder_canonical(&shuffled).unwrap();
        prop_assert_eq!(q.points(), &brute_force_order(&shuffled));
        // Bottom-right corner is the largest u + v.
        let br = square.iter().map(|p| p.u + p.v).fold(f64::NEG_INFINITY, f64::max);
        prop_assert_eq!(q.br().u + q.br().v, br);
    }

    #[test]
    fn flips_are_involutions(w in 1usize..24, h in 1usize..24, seed in any::<u64>()) {
        let img = random_image(w, h, seed);
        prop_assert_eq!(img.hflip().hflip(), img.clone());
        prop_assert_eq!(img.vflip().vflip(), img.clone());
        prop_assert_eq!(img.rot180(), img.hflip().vflip());
    }
}

fn random_image(w: usize, h: usize, seed: u64) -> RasterImage {
    let mut rng = ShiftRng::new(seed);
    let data = (0..w * h).map(|_| rng.below(256) as u8).collect();
    RasterImage::new(w, h, 1, data).unwrap()
}

fn labeled(points: [(f64, f64); 4]) -> LabeledImage {
    let q = reorder_canonical(&points.map(|(u, v)| PixelPoint::new(u, v))).unwrap();
    LabeledImage::new("x.pgm", q, Units::Pixels)
}

#[test]
fn label_flips_compose_and_invert() {
    let img = random_image(64, 48, 3);
    let item = labeled([(10.0, 8.0), (50.5, 12.0), (48.0, 40.25), (12.0, 36.0)]);
    let (hi, hl) = augment(&img, &item, AugmentOp::HFlip).unwrap();
    let (hhi, hhl) = augment(&hi, &hl, AugmentOp::HFlip).unwrap();
    assert_eq!(hhi, img);
    assert_eq!(hhl.corners, item.corners);
    let (vi, vl) = augment(&hi, &hl, AugmentOp::VFlip).unwrap();
    let (ri, rl) = augment(&img, &item, AugmentOp::Rot180).unwrap();
    assert_eq!(vi, ri);
    assert_eq!(vl.corners, rl.corners);
    for op in AugmentOp::ALL {
        let (_, out) = augment(&img, &item, op).unwrap();
        assert_eq!(reorder_canonical(out.corners.points()).unwrap(), out.corners);
    }
    let normalized = LabeledImage::new("x.pgm", item.corners, Units::Normalized);
    assert!(matches!(augment(&img, &normalized, AugmentOp::HFlip), Err(DatapipeError::Units { .. })));
}

fn norm_label(id: &str, raw: [(f64, f64); 4]) -> LabeledImage {
    LabeledImage::new(id, CornerQuad::new(raw.map(|(u, v)| PixelPoint::new(u, v))), Units::Normalized)
}

#[test]
fn hand_computed_mae() {
    let truth = vec![norm_label("a", [(0.1, 0.1), (0.9, 0.1), (0.9, 0.9), (0.1, 0.9)])];
    let exact = evaluate(&truth, &truth).unwrap();
    assert_eq!(exact.per_corner, [0.0; 4]);
    assert_eq!(exact.overall, 0.0);

    let pred = vec![norm_label("a", [(0.11, 0.13), (0.9, 0.1), (0.9, 0.9), (0.1, 0.9)])];
    let r = evaluate(&pred, &truth).unwrap();
    assert!((r.per_corner[0] - 0.02).abs() < 1e-15);
    assert_eq!(&r.per_corner[1..], &[0.0; 3]);
    assert!((r.overall - 0.005).abs() < 1e-15);
    assert_eq!(r.worst_corner, 1);

    let two_truth = vec![
        norm_label("a", [(0.1, 0.1), (0.9, 0.1), (0.9, 0.9), (0.1, 0.9)]),
        norm_label("b", [(0.2, 0.2), (0.8, 0.2), (0.8, 0.8), (0.2, 0.8)]),
    ];
    let two_pred = vec![
        norm_label("b", [(0.2, 0.2), (0.8, 0.2), (0.85, 0.75), (0.2, 0.8)]),
        norm_label("a", [(0.1, 0.1), (0.9, 0.1), (0.93, 0.9), (0.1, 0.9)]),
    ];
    let r = evaluate(&two_pred, &two_truth).unwrap();
    // Corner 3: image a (0.03 + 0) / 2, image b (0.05 + 0.05) / 2, mean 0.0325.
    assert!((r.per_corner[2] - 0.0325).abs() < 1e-15);
    assert_eq!(r.overall, r.per_corner.iter().sum::<f64>() / 4.0);
    assert_eq!(r.worst_corner, 3);
}

#[test]
fn eval_rejects_mismatches() {
    let a = vec![norm_label("a", [(0.1, 0.1), (0.9, 0.1), (0.9, 0.9), (0.1, 0.9)])];
    let b = vec![norm_label("b", [(0.1, 0.1), (0.9, 0.1), (0.9, 0.9), (0.1, 0.9)])];
    assert!(matches!(evaluate(&a, &b), Err(DatapipeError::IdMismatch(_))));
    let px = vec![LabeledImage::new("a", a[0].corners, Units::Pixels)];
    assert!(matches!(evaluate(&px, &a), Err(DatapipeError::Units { .. })));
}
