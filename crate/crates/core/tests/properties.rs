//! Property tests over the format round-trips and geometric invariants.

use proptest::prelude::*;
use semfuse::fusion::{
    concat_score_feature, concat_sem_feature, strip_semantics, ClassMap, ClassScoreMap,
};
use semfuse::geometry::{bev_iou, cart_to_cyl, cyl_to_cart, iou_3d, Box3D};
use semfuse::kitti_io::{
    parse_fused, parse_semantic_labels, parse_velodyne, write_fused, write_semantic_labels,
    write_velodyne, Point, PointCloud, SemanticLabel, SemanticLabelMap,
};
use semfuse::KittiClass;

fn point_strategy() -> impl Strategy<Value = Point> {
    (
        -120.0f32..120.0,
        -120.0f32..120.0,
        -10.0f32..10.0,
        0.0f32..=1.0,
    )
        .prop_map(|(x, y, z, r)| Point { x, y, z, r })
}

fn cloud_strategy() -> impl Strategy<Value = PointCloud> {
    proptest::collection::vec(point_strategy(), 0..200)
        .prop_map(|points| PointCloud { points })
}

fn box_strategy() -> impl Strategy<Value = Box3D> {
    (
        -30.0f64..30.0,
        -30.0f64..30.0,
        -3.0f64..3.0,
        0.3f64..3.0,
        0.3f64..3.0,
        0.3f64..5.0,
        -std::f64::consts::PI..std::f64::consts::PI,
    )
        .prop_map(|(x, y, z, w, h, l, yaw)| {
            Box3D::new([x, y, z], [w, h, l], yaw, KittiClass::Car)
        })
}

proptest! {
    #[test]
    fn velodyne_round_trip(cloud in cloud_strategy()) {
        let parsed = parse_velodyne(&write_velodyne(&cloud)).unwrap();
        prop_assert_eq!(parsed.cloud, cloud);
        prop_assert_eq!(parsed.clamped_reflectance, 0);
    }

    #[test]
    fn label_words_bijective(words in proptest::collection::vec(any::<u32>(), 0..200)) {
        let bytes: Vec<u8> = words.iter().flat_map(|w| w.to_le_bytes()).collect();
        let parsed = parse_semantic_labels(&bytes).unwrap();
        prop_assert_eq!(write_semantic_labels(&parsed), bytes);
    }

    #[test]
    fn fusion_strip_is_identity(
        cloud in cloud_strategy(),
        ids in proptest::collection::vec(any::<u16>(), 0..200),
    ) {
        let n = cloud.len().min(ids.len());
        let cloud = PointCloud { points: cloud.points[..n].to_vec() };
        let labels = SemanticLabelMap {
            entries: ids[..n]
                .iter()
                .map(|&semantic_id| SemanticLabel { semantic_id, instance_id: 0 })
                .collect(),
        };
        let map = ClassMap::semantic_kitti_default();
        let fused = concat_sem_feature(&labels, &cloud, &map).unwrap();
        // Geometry is untouched byte-for-byte and every block is one-hot.
        prop_assert_eq!(strip_semantics(&fused), cloud);
        for p in &fused.points {
            let ones = p.sem.iter().filter(|&&v| v == 1.0).count();
            let zeros = p.sem.iter().filter(|&&v| v == 0.0).count();
            prop_assert_eq!((ones, zeros), (1, 3));
        }
        let bytes = write_fused(&fused).unwrap();
        prop_assert_eq!(parse_fused(&bytes).unwrap(), fused);
    }

    #[test]
    fn score_blocks_are_distributions(
        cloud in cloud_strategy(),
        raw in proptest::collection::vec([-30.0f32..30.0, -30.0f32..30.0, -30.0f32..30.0, -30.0f32..30.0], 0..200),
    ) {
        let n = cloud.len().min(raw.len());
        let cloud = PointCloud { points: cloud.points[..n].to_vec() };
        let scores = ClassScoreMap { scores: raw[..n].to_vec() };
        let fused = concat_score_feature(&scores, &cloud).unwrap();
        for p in &fused.points {
            let sum: f32 = p.sem.iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-5);
            prop_assert!(p.sem.iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn cylindrical_round_trip(x in -100.0f64..100.0, y in -100.0f64..100.0, z in -5.0f64..5.0) {
        let rho = x.hypot(y);
        prop_assume!(rho > 1e-9);
        let p = [x, y, z];
        let q = cyl_to_cart(cart_to_cyl(p));
        for k in 0..3 {
            prop_assert!((q[k] - p[k]).abs() <= 1e-6 * rho.max(p[k].abs()));
        }
    }

    #[test]
    fn iou_bounded_and_symmetric(a in box_strategy(), b in box_strategy()) {
        for f in [bev_iou, iou_3d] {
            let ab = f(&a, &b);
            prop_assert!((0.0..=1.0).contains(&ab));
            prop_assert!((ab - f(&b, &a)).abs() < 1e-12);
        }
        prop_assert!((bev_iou(&a, &a) - 1.0).abs() < 1e-9);
        prop_assert!((iou_3d(&a, &a) - 1.0).abs() < 1e-9);
    }
}
