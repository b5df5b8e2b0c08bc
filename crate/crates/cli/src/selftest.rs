//! In-binary property suite: round-trips, IoU against the Monte-Carlo
//! oracle, gradient checks, AP against the brute-force evaluator, encoder
//! and augmentation contracts. Fast enough to run on every checkout.

use rand::Rng;
use semfuse::augment::{
    build_gt_database, flip_scene_x, global_rotate, global_scale, per_box_augment, sample_gt,
    AugmentConfig, Scene,
};
use semfuse::encoders::{
    anchor_residual_decode, anchor_residual_encode, bin_decode_center, bin_encode_center,
    pillarize, voxelize, GridConfig,
};
use semfuse::eval::{evaluate_benchmark, Difficulty, EvalConfig, Interpolation, Metric};
use semfuse::fusion::softmax4;
use semfuse::geometry::{bev_iou, cart_to_cyl, cyl_to_cart, iou_3d, Box3D};
use semfuse::kitti_io::{
    object_to_box, parse_fused, parse_object_labels, parse_semantic_labels, parse_velodyne,
    write_detections, write_fused, write_semantic_labels, write_velodyne, Calibration,
    SemanticLabel, SemanticLabelMap,
};
use semfuse::losses::{
    direction_loss, focal_loss, lovasz_softmax, smooth_l1, total_seg_loss,
    weighted_cross_entropy, ProbVector,
};
use semfuse::seed::frame_rng;
use semfuse::KittiClass;
use semfuse_testkit::{brute, fdiff, mc, synth};
use std::time::Instant;

/// Test-fixture hooks: a check can be pointed at a replacement
/// implementation to prove the harness reports failures.
#[derive(Default, Clone, Copy)]
pub struct Overrides {
    pub bev_iou: Option<fn(&Box3D, &Box3D) -> f64>,
}

pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub millis: u128,
}

type Check = (&'static str, fn(&Overrides) -> Result<String, String>);

fn check_velodyne_round_trip(_: &Overrides) -> Result<String, String> {
    let mut rng = frame_rng(1, "selftest/velodyne");
    for _ in 0..100 {
        let cloud = synth::random_cloud(rng.random_range(0..500), &mut rng);
        let bytes = write_velodyne(&cloud);
        let back = parse_velodyne(&bytes).map_err(|e| e.to_string())?;
        if back.cloud != cloud {
            return Err("round trip altered points".to_string());
        }
    }
    Ok("100 random clouds bit-exact".to_string())
}

fn check_label_bijection(_: &Overrides) -> Result<String, String> {
    let mut rng = frame_rng(1, "selftest/labels");
    let words: Vec<u32> = (0..10_000).map(|_| rng.random()).collect();
    let bytes: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
    let parsed = parse_semantic_labels(&bytes).map_err(|e| e.to_string())?;
    if write_semantic_labels(&parsed) != bytes {
        return Err("word split is not a bijection".to_string());
    }
    let map = SemanticLabelMap {
        entries: vec![SemanticLabel { semantic_id: 10, instance_id: 1 }],
    };
    if write_semantic_labels(&map) != 0x0001_000Au32.to_le_bytes() {
        return Err("bit layout mismatch".to_string());
    }
    Ok("10k random words bijective".to_string())
}

fn check_fused_round_trip(_: &Overrides) -> Result<String, String> {
    let mut rng = frame_rng(1, "selftest/fused");
    for _ in 0..50 {
        let fpc = synth::random_fused_frame(rng.random_range(0..400), &mut rng);
        let bytes = write_fused(&fpc).map_err(|e| e.to_string())?;
        if parse_fused(&bytes).map_err(|e| e.to_string())? != fpc {
            return Err("round trip altered features".to_string());
        }
    }
    Ok("50 random fused clouds bit-exact".to_string())
}

fn check_detection_round_trip(_: &Overrides) -> Result<String, String> {
    let mut rng = frame_rng(1, "selftest/dets");
    let calib = Calibration::nominal();
    let mut max_err = 0.0f64;
    for _ in 0..200 {
        let b = synth::random_box(&mut rng).with_score(rng.random_range(0.0..1.0));
        let text = write_detections(&[b], &calib).map_err(|e| e.to_string())?;
        let objs = parse_object_labels(&text).map_err(|e| e.to_string())?;
        let back = object_to_box(&objs[0], &calib).ok_or("detection lost its box")?;
        for k in 0..3 {
            max_err = max_err.max((back.center[k] - b.center[k]).abs());
            max_err = max_err.max((back.size[k] - b.size[k]).abs());
        }
        let dyaw = (back.yaw - b.yaw).abs();
        max_err = max_err.max(dyaw.min(2.0 * std::f64::consts::PI - dyaw));
    }
    if max_err >= 1e-4 {
        return Err(format!("round-trip error {max_err:.2e} >= 1e-4"));
    }
    Ok(format!("200 boxes, max error {max_err:.2e}"))
}

fn check_cylindrical_round_trip(_: &Overrides) -> Result<String, String> {
    let mut rng = frame_rng(1, "selftest/cyl");
    let mut max_rel = 0.0f64;
    for _ in 0..10_000 {
        let p: [f64; 3] = [
            rng.random_range(-90.0..90.0),
            rng.random_range(-90.0..90.0),
            rng.random_range(-5.0..5.0),
        ];
        let rho = p[0].hypot(p[1]);
        if rho < 1e-9 {
            continue;
        }
        let q = cyl_to_cart(cart_to_cyl(p));
        for k in 0..3 {
            max_rel = max_rel.max((q[k] - p[k]).abs() / rho.max(p[k].abs()));
        }
    }
    if max_rel >= 1e-6 {
        return Err(format!("relative error {max_rel:.2e} >= 1e-6"));
    }
    Ok(format!("10k points, max rel error {max_rel:.2e}"))
}

fn check_bev_iou_oracle(overrides: &Overrides) -> Result<String, String> {
    let implementation = overrides.bev_iou.unwrap_or(|a, b| bev_iou(a, b));
    let mut rng = frame_rng(1, "selftest/bev");
    let mut max_err = 0.0f64;
    for _ in 0..40 {
        let (a, b) = synth::random_box_pair(&mut rng);
        let estimate = mc::mc_bev_iou(&a, &b, 200_000, &mut rng);
        max_err = max_err.max((implementation(&a, &b) - estimate).abs());
    }
    // The rotated-square case has a closed form: IoU = 1/sqrt(2).
    let sq = Box3D::new([0.0; 3], [1.0, 1.0, 1.0], 0.0, KittiClass::Car);
    let sq45 = Box3D::new(
        [0.0; 3],
        [1.0, 1.0, 1.0],
        std::f64::consts::FRAC_PI_4,
        KittiClass::Car,
    );
    let analytic = (implementation(&sq, &sq45) - 1.0 / 2.0f64.sqrt()).abs();
    max_err = max_err.max(analytic);
    if max_err >= 1e-2 {
        return Err(format!("max |impl - oracle| = {max_err:.3e} >= 1e-2"));
    }
    Ok(format!("40 pairs + analytic case, max err {max_err:.2e}"))
}

fn check_iou3d_oracle(_: &Overrides) -> Result<String, String> {
    let mut rng = frame_rng(1, "selftest/iou3d");
    let mut max_err = 0.0f64;
    for _ in 0..40 {
        let (a, b) = synth::random_box_pair(&mut rng);
        let estimate = mc::mc_iou_3d(&a, &b, 200_000, &mut rng);
        max_err = max_err.max((iou_3d(&a, &b) - estimate).abs());
    }
    if max_err >= 1e-2 {
        return Err(format!("max |impl - oracle| = {max_err:.3e} >= 1e-2"));
    }
    Ok(format!("40 pairs, max err {max_err:.2e}"))
}

fn check_gradients(_: &Overrides) -> Result<String, String> {
    let mut rng = frame_rng(1, "selftest/grad");
    let mut max_rel = 0.0f64;
    let h = 1e-5;
    for _ in 0..200 {
        let p = rng.random_range(0.05..0.95);
        let alpha = rng.random_range(0.1..1.0);
        let gamma = rng.random_range(0.0..3.0);
        let analytic = focal_loss(p, alpha, gamma).map_err(|e| e.to_string())?.grad.unwrap()[0];
        let numeric = fdiff::central_diff(
            |x| focal_loss(x, alpha, gamma).unwrap().value,
            p,
            h,
        );
        max_rel = max_rel.max(fdiff::rel_err(analytic, numeric));

        let r: f64 = rng.random_range(-3.0..3.0);
        let beta: f64 = rng.random_range(0.5..2.0);
        if (r.abs() - beta).abs() > 1e-3 {
            let analytic = smooth_l1(r, beta).grad.unwrap()[0];
            let numeric = fdiff::central_diff(|x| smooth_l1(x, beta).value, r, h);
            max_rel = max_rel.max(fdiff::rel_err(analytic, numeric));
        }

        let logits = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
        let bit = rng.random_bool(0.5);
        let dir = direction_loss(logits, bit);
        let grad = dir.grad.unwrap();
        for k in 0..2 {
            let numeric = fdiff::central_diff(
                |x| {
                    let mut l = logits;
                    l[k] = x;
                    direction_loss(l, bit).value
                },
                logits[k],
                h,
            );
            max_rel = max_rel.max(fdiff::rel_err(grad[k], numeric));
        }
    }
    if max_rel >= 1e-4 {
        return Err(format!("max rel gradient error {max_rel:.3e} >= 1e-4"));
    }

    // Reduction identity and a weighted-CE + lovasz composite probe.
    for i in 1..50 {
        let p = i as f64 / 50.0;
        let focal = focal_loss(p, 1.0, 0.0).map_err(|e| e.to_string())?.value;
        if (focal - (-p.ln())).abs() > 1e-12 {
            return Err("focal(gamma=0) != cross-entropy".to_string());
        }
    }
    let probs: Vec<ProbVector> = (0..6)
        .map(|_| {
            let raw = softmax4(std::array::from_fn(|_| rng.random_range(-2.0f32..2.0)));
            ProbVector::new_unchecked(raw.iter().map(|&v| v as f64).collect())
        })
        .collect();
    let labels: Vec<usize> = (0..6).map(|_| rng.random_range(0..4)).collect();
    let weights = [1.0, 2.0, 1.5, 0.5];
    let composite = total_seg_loss(&probs, &labels, &weights).map_err(|e| e.to_string())?;
    let lovasz = lovasz_softmax(&probs, &labels).map_err(|e| e.to_string())?;
    let mut wce = 0.0;
    for (row, &label) in probs.iter().zip(&labels) {
        wce += weighted_cross_entropy(row, label, &weights)
            .map_err(|e| e.to_string())?
            .value
            / probs.len() as f64;
    }
    if (composite.value - (lovasz.value + wce)).abs() > 1e-12 {
        return Err("total loss != wce mean + lovasz".to_string());
    }
    Ok(format!("200 draws/loss, max rel err {max_rel:.2e}"))
}

fn check_ap_oracle(_: &Overrides) -> Result<String, String> {
    let mut rng = frame_rng(1, "selftest/ap");
    let cfg = EvalConfig::default();
    for case in 0..30 {
        let (det_frames, gt_frames) = synth::random_eval_scenario(12, 6, &mut rng);
        let report =
            evaluate_benchmark(&det_frames, &gt_frames, &cfg).map_err(|e| e.to_string())?;
        let oracle = brute::brute_evaluate(
            &det_frames,
            &gt_frames,
            cfg.iou_thresholds,
            Interpolation::R40,
        );
        for (ci, class) in [KittiClass::Car, KittiClass::Pedestrian, KittiClass::Cyclist]
            .into_iter()
            .enumerate()
        {
            for (bi, bucket) in Difficulty::BUCKETS.into_iter().enumerate() {
                for (mi, metric) in Metric::ALL.into_iter().enumerate() {
                    let ours = report.ap(class, bucket, metric).unwrap();
                    let theirs = oracle[&(ci, bi, mi)];
                    if ours != theirs {
                        return Err(format!(
                            "case {case}: {class:?}/{bucket:?}/{metric:?}: {ours} != oracle {theirs}"
                        ));
                    }
                }
            }
        }
    }
    Ok("30 scenarios exactly equal".to_string())
}

fn check_encoder_invariants(_: &Overrides) -> Result<String, String> {
    let mut rng = frame_rng(1, "selftest/enc");
    let cfg = GridConfig {
        max_pillars: 600,
        max_points_per_pillar: 12,
        max_voxels: 900,
        ..GridConfig::default()
    };
    for _ in 0..20 {
        let fpc = synth::random_fused_frame(rng.random_range(0..3000), &mut rng);
        let pt = pillarize(&fpc, &cfg).map_err(|e| e.to_string())?;
        if pt.retained_points() + pt.dropped_points() != fpc.len() {
            return Err("pillar point accounting broken".to_string());
        }
        for p in 0..pt.num_pillars() {
            for n in pt.counts[p] as usize..pt.max_points {
                for d in 0..pt.feature_dim {
                    if pt.at(d, p, n) != 0.0 {
                        return Err("pillar padding not zero".to_string());
                    }
                }
            }
        }
        let again = pillarize(&fpc, &cfg).map_err(|e| e.to_string())?;
        if again != pt {
            return Err("pillarize not deterministic".to_string());
        }

        let vg = voxelize(&fpc, &cfg).map_err(|e| e.to_string())?;
        if vg.retained_points() + vg.dropped_points() != fpc.len() {
            return Err("voxel point accounting broken".to_string());
        }
    }

    let mut max_bin = 0.0f64;
    let mut max_anchor = 0.0f64;
    for _ in 0..500 {
        let point = (rng.random_range(0.0..60.0), rng.random_range(-3.0..3.0));
        let target = (
            point.0 + rng.random_range(-3.0..3.0),
            point.1 + rng.random_range(-3.0..3.0),
        );
        let enc = bin_encode_center(point, target, 3.0, 0.5).map_err(|e| e.to_string())?;
        let dec = bin_decode_center(point, &enc, 3.0, 0.5);
        max_bin = max_bin.max((dec.0 - target.0).abs().max((dec.1 - target.1).abs()));

        let anchor = synth::random_box(&mut rng);
        let gt = Box3D::new(
            [
                anchor.center[0] + rng.random_range(-0.5..0.5),
                anchor.center[1] + rng.random_range(-0.5..0.5),
                anchor.center[2] + rng.random_range(-0.5..0.5),
            ],
            [
                anchor.size[0] * rng.random_range(0.8..1.2),
                anchor.size[1] * rng.random_range(0.8..1.2),
                anchor.size[2] * rng.random_range(0.8..1.2),
            ],
            anchor.yaw + rng.random_range(-1.2..1.2),
            anchor.class,
        );
        let res = anchor_residual_encode(&gt, &anchor).map_err(|e| e.to_string())?;
        let dec = anchor_residual_decode(&res, &anchor).map_err(|e| e.to_string())?;
        for k in 0..3 {
            max_anchor = max_anchor.max((dec.center[k] - gt.center[k]).abs());
            max_anchor = max_anchor.max((dec.size[k] - gt.size[k]).abs());
        }
        max_anchor = max_anchor.max((dec.yaw - gt.yaw).abs());
    }
    if max_bin >= 1e-9 {
        return Err(format!("bin decode error {max_bin:.2e} >= 1e-9"));
    }
    if max_anchor >= 1e-6 {
        return Err(format!("anchor decode error {max_anchor:.2e} >= 1e-6"));
    }
    Ok(format!(
        "20 frames + 500 codec draws, bin {max_bin:.1e}, anchor {max_anchor:.1e}"
    ))
}

fn check_augmentation_contracts(_: &Overrides) -> Result<String, String> {
    let mut rng = frame_rng(1, "selftest/aug");
    let cfg = AugmentConfig::default();
    for _ in 0..20 {
        let fpc = synth::random_fused_frame(400, &mut rng);
        let boxes: Vec<Box3D> = (0..4).map(|_| synth::random_box(&mut rng)).collect();
        let db = build_gt_database([("db", &fpc, boxes.as_slice())]);
        let mut scene = Scene::from_fused(&fpc, boxes);
        let sems_before: Vec<[f32; 4]> = scene.points.iter().map(|p| p.sem).collect();

        sample_gt(&db, &mut scene, &cfg, &mut rng);
        let norms: Vec<f64> = scene.points.iter().map(|p| p.pos[0].hypot(p.pos[1])).collect();
        global_rotate(&mut scene, &cfg, &mut rng);
        for (p, n) in scene.points.iter().zip(&norms) {
            if (p.pos[0].hypot(p.pos[1]) - n).abs() > 1e-6 {
                return Err("rotation changed a distance to origin".to_string());
            }
        }
        let volumes: Vec<f64> = scene.boxes.iter().map(Box3D::volume).collect();
        let factor = global_scale(&mut scene, &cfg, &mut rng);
        for (b, v) in scene.boxes.iter().zip(&volumes) {
            if (b.volume() - v * factor.powi(3)).abs() > 1e-9 * v.max(1.0) {
                return Err("scaling broke the volume contract".to_string());
            }
        }
        let snapshot = scene.clone();
        flip_scene_x(&mut scene);
        flip_scene_x(&mut scene);
        if scene != snapshot {
            return Err("flip is not an involution".to_string());
        }
        per_box_augment(&mut scene, &cfg, &mut rng);
        for (p, sem) in scene.points.iter().zip(&sems_before) {
            if p.sem != *sem {
                return Err("semantic columns modified".to_string());
            }
        }
    }
    Ok("20 scenes honored all contracts".to_string())
}

const CHECKS: &[Check] = &[
    ("velodyne round trip", check_velodyne_round_trip),
    ("semantic label bijection", check_label_bijection),
    ("fused cloud round trip", check_fused_round_trip),
    ("detection text round trip", check_detection_round_trip),
    ("cylindrical round trip", check_cylindrical_round_trip),
    ("BEV IoU vs Monte-Carlo", check_bev_iou_oracle),
    ("3D IoU vs Monte-Carlo", check_iou3d_oracle),
    ("loss gradients vs finite differences", check_gradients),
    ("AP vs brute-force evaluator", check_ap_oracle),
    ("encoder invariants", check_encoder_invariants),
    ("augmentation contracts", check_augmentation_contracts),
];

/// Run every check, optionally with fixture overrides.
pub fn run(overrides: &Overrides) -> Vec<CheckResult> {
    CHECKS
        .iter()
        .map(|(name, check)| {
            let start = Instant::now();
            let outcome = check(overrides);
            let millis = start.elapsed().as_millis();
            match outcome {
                Ok(detail) => CheckResult {
                    name,
                    passed: true,
                    detail,
                    millis,
                },
                Err(detail) => CheckResult {
                    name,
                    passed: false,
                    detail,
                    millis,
                },
            }
        })
        .collect()
}

pub fn render_table(results: &[CheckResult]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<40} {:>6} {:>8}  detail\n",
        "check", "status", "time"
    ));
    for r in results {
        out.push_str(&format!(
            "{:<40} {:>6} {:>6}ms  {}\n",
            r.name,
            if r.passed { "pass" } else { "FAIL" },
            r.millis,
            r.detail
        ));
    }
    let failed = results.iter().filter(|r| !r.passed).count();
    out.push_str(&format!(
        "{} checks, {} failed\n",
        results.len(),
        failed
    ));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn injected_iou_bug_is_reported() {
        // A broken overlap that always claims half overlap.
        fn broken(_: &Box3D, _: &Box3D) -> f64 {
            0.5
        }
        let results = run(&Overrides {
            bev_iou: Some(broken),
        });
        let iou_check = results
            .iter()
            .find(|r| r.name == "BEV IoU vs Monte-Carlo")
            .unwrap();
        assert!(!iou_check.passed);
        assert!(render_table(&results).contains("FAIL"));
    }
}
