//! Ground-truth database sampling and scene augmentation.
//!
//! A database of cropped objects is built once from the training corpus;
//! augmentation then pastes random objects into scenes and applies global
//! flip / rotate / scale plus per-box perturbations. Any step that would
//! make two boxes overlap is reverted, so augmented ground truth stays
//! pairwise collision-free in BEV.
//!
//! Scenes carry f64 coordinates so rigid-motion contracts hold to tight
//! tolerances; conversion back to the f32 file format happens once at the
//! end. Semantic feature columns ride along untouched.

use crate::fusion::{FusedPoint, FusedPointCloud, KittiClass};
use crate::geometry::{bev_iou, normalize_angle, point_in_box, Box3D};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// A scene point in f64, with reflectance and the semantic block carried
/// bit-for-bit from the fused cloud.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenePoint {
    pub pos: [f64; 3],
    pub r: f32,
    pub sem: [f32; 4],
}

impl ScenePoint {
    pub fn from_fused(p: &FusedPoint) -> Self {
        Self {
            pos: [p.x as f64, p.y as f64, p.z as f64],
            r: p.r,
            sem: p.sem,
        }
    }

    pub fn to_fused(self) -> FusedPoint {
        FusedPoint {
            x: self.pos[0] as f32,
            y: self.pos[1] as f32,
            z: self.pos[2] as f32,
            r: self.r,
            sem: self.sem,
        }
    }
}

/// A frame under augmentation: points plus its ground-truth boxes.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Scene {
    pub points: Vec<ScenePoint>,
    pub boxes: Vec<Box3D>,
}

impl Scene {
    pub fn from_fused(fpc: &FusedPointCloud, boxes: Vec<Box3D>) -> Self {
        Self {
            points: fpc.points.iter().map(ScenePoint::from_fused).collect(),
            boxes,
        }
    }

    pub fn to_fused(&self) -> FusedPointCloud {
        FusedPointCloud {
            points: self.points.iter().map(|p| p.to_fused()).collect(),
        }
    }
}

/// Augmentation knobs. Defaults: global rotation in [-pi/4, pi/4], scale in
/// [0.95, 1.05], flip probability 1/2; per-box rotation in [-pi/9, pi/9]
/// with 0.25 m translation noise per axis.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct AugmentConfig {
    pub rotation_range: (f64, f64),
    pub scale_range: (f64, f64),
    pub flip_probability: f64,
    /// Target object counts per class, indexed by
    /// [unlabeled, car, pedestrian, cyclist].
    pub sample_counts: [usize; 4],
    pub per_box_rotation_range: (f64, f64),
    pub per_box_translation_std: f64,
    pub seed: u64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        let quarter_pi = std::f64::consts::FRAC_PI_4;
        let ninth_pi = std::f64::consts::PI / 9.0;
        Self {
            rotation_range: (-quarter_pi, quarter_pi),
            scale_range: (0.95, 1.05),
            flip_probability: 0.5,
            sample_counts: [0, 15, 8, 8],
            per_box_rotation_range: (-ninth_pi, ninth_pi),
            per_box_translation_std: 0.25,
            seed: 0,
        }
    }
}

impl AugmentConfig {
    pub fn from_toml(text: &str) -> Result<Self, AugmentError> {
        let cfg: Self =
            toml::from_str(text).map_err(|e| AugmentError::InvalidConfig(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("AugmentConfig serializes")
    }

    pub fn validate(&self) -> Result<(), AugmentError> {
        for (name, (lo, hi)) in [
            ("rotation_range", self.rotation_range),
            ("scale_range", self.scale_range),
            ("per_box_rotation_range", self.per_box_rotation_range),
        ] {
            if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
                return Err(AugmentError::InvalidConfig(format!(
                    "{name} must be a well-ordered finite interval, got ({lo}, {hi})"
                )));
            }
        }
        if self.scale_range.0 <= 0.0 {
            return Err(AugmentError::InvalidConfig(
                "scale factors must be positive".to_string(),
            ));
        }
        if !(0.0..=1.0).contains(&self.flip_probability) {
            return Err(AugmentError::InvalidConfig(format!(
                "flip probability {} outside [0, 1]",
                self.flip_probability
            )));
        }
        if !(self.per_box_translation_std.is_finite() && self.per_box_translation_std >= 0.0) {
            return Err(AugmentError::InvalidConfig(
                "translation std must be non-negative".to_string(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum AugmentError {
    #[error("invalid augment config: {0}")]
    InvalidConfig(String),
}

/// One cropped object: its box, the in-box points, and the frame it came
/// from.
#[derive(Debug, Clone, PartialEq)]
pub struct GtEntry {
    pub frame_id: String,
    pub box3d: Box3D,
    pub points: FusedPointCloud,
}

/// Per-class collections of cropped ground-truth objects.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct GtDatabase {
    entries: [Vec<GtEntry>; 4],
}

impl GtDatabase {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, entry: GtEntry) {
        self.entries[entry.box3d.class.index()].push(entry);
    }

    pub fn class_entries(&self, class: KittiClass) -> &[GtEntry] {
        &self.entries[class.index()]
    }

    pub fn len(&self) -> usize {
        self.entries.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Crop every labeled box of every frame into a database entry. Boxes with
/// no interior points are retained with zero points.
pub fn build_gt_database<'a>(
    frames: impl IntoIterator<Item = (&'a str, &'a FusedPointCloud, &'a [Box3D])>,
) -> GtDatabase {
    let mut db = GtDatabase::new();
    for (frame_id, fpc, boxes) in frames {
        for b in boxes {
            let points = FusedPointCloud {
                points: fpc
                    .points
                    .iter()
                    .filter(|p| point_in_box([p.x as f64, p.y as f64, p.z as f64], b, 0.0))
                    .copied()
                    .collect(),
            };
            db.push(GtEntry {
                frame_id: frame_id.to_string(),
                box3d: *b,
                points,
            });
        }
    }
    db
}

/// Outcome counters for one sampling pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SampleStats {
    pub placed: usize,
    pub rejected: usize,
}

/// Paste random database objects into the scene until each class reaches its
/// configured count. A candidate whose box overlaps any existing or
/// previously placed box in BEV (IoU > 0) is rejected and counted.
pub fn sample_gt(
    db: &GtDatabase,
    scene: &mut Scene,
    cfg: &AugmentConfig,
    rng: &mut impl Rng,
) -> SampleStats {
    let mut stats = SampleStats::default();
    for class in KittiClass::ALL {
        let have = scene.boxes.iter().filter(|b| b.class == class).count();
        let want = cfg.sample_counts[class.index()].saturating_sub(have);
        if want == 0 {
            continue;
        }
        let pool = db.class_entries(class);
        if pool.is_empty() {
            continue;
        }
        let mut order: Vec<usize> = (0..pool.len()).collect();
        order.shuffle(rng);
        let mut placed = 0usize;
        for idx in order {
            if placed == want {
                break;
            }
            let candidate = &pool[idx];
            let collides = scene
                .boxes
                .iter()
                .any(|b| bev_iou(b, &candidate.box3d) > 0.0);
            if collides {
                stats.rejected += 1;
                continue;
            }
            scene.boxes.push(candidate.box3d);
            scene
                .points
                .extend(candidate.points.points.iter().map(ScenePoint::from_fused));
            placed += 1;
        }
        stats.placed += placed;
    }
    stats
}

/// Mirror the scene about the x-z plane: y negates for points and box
/// centers, yaw negates. An involution.
pub fn flip_scene_x(scene: &mut Scene) {
    for p in &mut scene.points {
        p.pos[1] = -p.pos[1];
    }
    for b in &mut scene.boxes {
        b.center[1] = -b.center[1];
        b.yaw = normalize_angle(-b.yaw);
    }
}

/// Flip with the configured probability. Returns whether the flip fired.
pub fn global_flip_x(scene: &mut Scene, cfg: &AugmentConfig, rng: &mut impl Rng) -> bool {
    let fire = rng.random_bool(cfg.flip_probability);
    if fire {
        flip_scene_x(scene);
    }
    fire
}

/// Rotate the whole scene by `angle` about the z-axis through the origin.
pub fn rotate_scene(scene: &mut Scene, angle: f64) {
    if angle == 0.0 {
        return;
    }
    let (sin, cos) = angle.sin_cos();
    for p in &mut scene.points {
        let [x, y, z] = p.pos;
        p.pos = [cos * x - sin * y, sin * x + cos * y, z];
    }
    for b in &mut scene.boxes {
        let [x, y, z] = b.center;
        b.center = [cos * x - sin * y, sin * x + cos * y, z];
        b.yaw = normalize_angle(b.yaw + angle);
    }
}

/// Rotate by an angle drawn from the configured range. Returns the angle.
pub fn global_rotate(scene: &mut Scene, cfg: &AugmentConfig, rng: &mut impl Rng) -> f64 {
    let (lo, hi) = cfg.rotation_range;
    let angle = if lo == hi { lo } else { rng.random_range(lo..=hi) };
    rotate_scene(scene, angle);
    angle
}

/// Scale point coordinates and box centers/sizes by `factor`; yaw,
/// reflectance, and semantic features are untouched.
pub fn scale_scene(scene: &mut Scene, factor: f64) {
    assert!(factor > 0.0, "scale factor must be positive");
    for p in &mut scene.points {
        for v in &mut p.pos {
            *v *= factor;
        }
    }
    for b in &mut scene.boxes {
        for v in &mut b.center {
            *v *= factor;
        }
        for v in &mut b.size {
            *v *= factor;
        }
    }
}

/// Scale by a factor drawn from the configured range. Returns the factor.
pub fn global_scale(scene: &mut Scene, cfg: &AugmentConfig, rng: &mut impl Rng) -> f64 {
    let (lo, hi) = cfg.scale_range;
    let factor = if lo == hi { lo } else { rng.random_range(lo..=hi) };
    scale_scene(scene, factor);
    factor
}

/// Outcome counters for one per-box pass.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PerBoxStats {
    pub perturbed: usize,
    pub reverted: usize,
}

/// Independently perturb each box (rotation about its own center plus
/// translation noise) and rigidly co-transform its interior points. A
/// perturbation that would collide with any other box is reverted.
///
/// Points are claimed by the first box containing them, so overlapping input
/// boxes never move a point twice.
pub fn per_box_augment(scene: &mut Scene, cfg: &AugmentConfig, rng: &mut impl Rng) -> PerBoxStats {
    let normal = (cfg.per_box_translation_std > 0.0)
        .then(|| Normal::new(0.0, cfg.per_box_translation_std).expect("validated std"));
    let mut stats = PerBoxStats::default();

    // Assign each point to at most one box up front.
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); scene.boxes.len()];
    for (pi, p) in scene.points.iter().enumerate() {
        for (bi, b) in scene.boxes.iter().enumerate() {
            if point_in_box(p.pos, b, 0.0) {
                members[bi].push(pi);
                break;
            }
        }
    }

    for bi in 0..scene.boxes.len() {
        let (lo, hi) = cfg.per_box_rotation_range;
        let dyaw = if lo == hi { lo } else { rng.random_range(lo..=hi) };
        let shift = match &normal {
            Some(n) => [n.sample(rng), n.sample(rng), n.sample(rng)],
            None => [0.0; 3],
        };
        let original = scene.boxes[bi];
        let moved = Box3D::new(
            [
                original.center[0] + shift[0],
                original.center[1] + shift[1],
                original.center[2] + shift[2],
            ],
            original.size,
            original.yaw + dyaw,
            original.class,
        );
        let collides = scene
            .boxes
            .iter()
            .enumerate()
            .any(|(bj, other)| bj != bi && bev_iou(&moved, other) > 0.0);
        if collides {
            stats.reverted += 1;
            continue;
        }
        // An identity perturbation must leave bytes untouched.
        if dyaw != 0.0 || shift != [0.0; 3] {
            let (sin, cos) = dyaw.sin_cos();
            for &pi in &members[bi] {
                let p = &mut scene.points[pi];
                let dx = p.pos[0] - original.center[0];
                let dy = p.pos[1] - original.center[1];
                p.pos = [
                    original.center[0] + cos * dx - sin * dy + shift[0],
                    original.center[1] + sin * dx + cos * dy + shift[1],
                    p.pos[2] + shift[2],
                ];
            }
            scene.boxes[bi] = moved;
        }
        stats.perturbed += 1;
    }
    stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::canonical_point;
    use crate::seed::frame_rng;

    fn car(center: [f64; 3]) -> Box3D {
        Box3D::new(center, [1.6, 1.5, 3.9], 0.3, KittiClass::Car)
    }

    fn scene_with_points(boxes: Vec<Box3D>, points: Vec<[f64; 3]>) -> Scene {
        Scene {
            points: points
                .into_iter()
                .map(|pos| ScenePoint {
                    pos,
                    r: 0.5,
                    sem: [0.0, 1.0, 0.0, 0.0],
                })
                .collect(),
            boxes,
        }
    }

    #[test]
    fn database_crops_in_box_points() {
        let b = car([5.0, 0.0, 0.0]);
        let fpc = FusedPointCloud {
            points: (0..100)
                .map(|i| {
                    let t = i as f32 / 100.0;
                    FusedPoint {
                        // Half land inside the box, half far away.
                        x: if i % 2 == 0 { 5.0 + t * 0.5 } else { 50.0 },
                        y: t * 0.25,
                        z: t * 0.3,
                        r: 0.5,
                        sem: [0.0, 1.0, 0.0, 0.0],
                    }
                })
                .collect(),
        };
        let db = build_gt_database([("f0", &fpc, std::slice::from_ref(&b))]);
        assert_eq!(db.class_entries(KittiClass::Car).len(), 1);
        let entry = &db.class_entries(KittiClass::Car)[0];
        assert_eq!(entry.points.len(), 50);
        for p in &entry.points.points {
            let c = canonical_point([p.x as f64, p.y as f64, p.z as f64], &entry.box3d);
            assert!(c[0].abs() <= entry.box3d.size[2] * 0.5 + 1e-6);
            assert!(c[1].abs() <= entry.box3d.size[0] * 0.5 + 1e-6);
            assert!(c[2].abs() <= entry.box3d.size[1] * 0.5 + 1e-6);
        }
    }

    #[test]
    fn database_keeps_empty_boxes() {
        let fpc = FusedPointCloud { points: vec![] };
        let b = car([5.0, 0.0, 0.0]);
        let db = build_gt_database([("f0", &fpc, std::slice::from_ref(&b))]);
        assert_eq!(db.class_entries(KittiClass::Car)[0].points.len(), 0);
    }

    #[test]
    fn sampling_places_far_apart_and_rejects_overlap() {
        let mut db = GtDatabase::new();
        for (i, x) in [10.0, 30.0].into_iter().enumerate() {
            db.push(GtEntry {
                frame_id: format!("f{i}"),
                box3d: car([x, 0.0, 0.0]),
                points: FusedPointCloud {
                    points: vec![FusedPoint {
                        x: x as f32,
                        y: 0.0,
                        z: 0.0,
                        r: 0.5,
                        sem: [0.0, 1.0, 0.0, 0.0],
                    }],
                },
            });
        }
        let cfg = AugmentConfig {
            sample_counts: [0, 2, 0, 0],
            ..AugmentConfig::default()
        };
        let mut scene = Scene::default();
        let stats = sample_gt(&db, &mut scene, &cfg, &mut frame_rng(0, "s"));
        assert_eq!(stats.placed, 2);
        assert_eq!(scene.boxes.len(), 2);
        assert_eq!(scene.points.len(), 2);

        // A candidate equal to an existing box collides (IoU = 1 > 0).
        let mut scene = Scene {
            points: vec![],
            boxes: vec![car([10.0, 0.0, 0.0]), car([30.0, 0.0, 0.0])],
        };
        let stats = sample_gt(&db, &mut scene, &cfg, &mut frame_rng(0, "s"));
        assert_eq!(stats.placed, 0);
        assert_eq!(scene.boxes.len(), 2);
    }

    #[test]
    fn sampled_scenes_stay_collision_free() {
        let mut db = GtDatabase::new();
        let mut rng = frame_rng(9, "db");
        for i in 0..60 {
            let x = rng.random_range(5.0..60.0);
            let y = rng.random_range(-20.0..20.0);
            db.push(GtEntry {
                frame_id: format!("f{i}"),
                box3d: car([x, y, 0.0]),
                points: FusedPointCloud { points: vec![] },
            });
        }
        let cfg = AugmentConfig {
            sample_counts: [0, 20, 0, 0],
            ..AugmentConfig::default()
        };
        for run in 0..100 {
            let mut scene = Scene::default();
            sample_gt(&db, &mut scene, &cfg, &mut frame_rng(run, "scene"));
            for i in 0..scene.boxes.len() {
                for j in i + 1..scene.boxes.len() {
                    assert_eq!(bev_iou(&scene.boxes[i], &scene.boxes[j]), 0.0);
                }
            }
        }
    }

    #[test]
    fn flip_mirrors_and_is_involution() {
        let mut scene = scene_with_points(
            vec![Box3D::new([2.0, 3.0, 0.0], [1.0, 1.0, 2.0], std::f64::consts::FRAC_PI_4, KittiClass::Car)],
            vec![[1.0, 2.0, 3.0]],
        );
        let original = scene.clone();
        flip_scene_x(&mut scene);
        assert_eq!(scene.points[0].pos, [1.0, -2.0, 3.0]);
        assert!((scene.boxes[0].yaw + std::f64::consts::FRAC_PI_4).abs() < 1e-15);
        flip_scene_x(&mut scene);
        assert_eq!(scene, original);
    }

    #[test]
    fn rotation_preserves_origin_distance() {
        let mut rng = frame_rng(3, "rot");
        let mut scene = scene_with_points(
            vec![car([8.0, -2.0, 0.0])],
            (0..500)
                .map(|_| {
                    [
                        rng.random_range(-50.0..50.0),
                        rng.random_range(-50.0..50.0),
                        rng.random_range(-3.0..3.0),
                    ]
                })
                .collect(),
        );
        let norms: Vec<f64> = scene.points.iter().map(|p| p.pos[0].hypot(p.pos[1])).collect();
        let angle = global_rotate(&mut scene, &AugmentConfig::default(), &mut rng);
        assert!(angle.abs() <= std::f64::consts::FRAC_PI_4);
        for (p, n) in scene.points.iter().zip(&norms) {
            assert!((p.pos[0].hypot(p.pos[1]) - n).abs() < 1e-6);
        }

        let mut scene2 = scene.clone();
        rotate_scene(&mut scene2, 0.0);
        assert_eq!(scene2, scene);

        let mut axis = scene_with_points(vec![], vec![[1.0, 0.0, 0.0]]);
        rotate_scene(&mut axis, std::f64::consts::FRAC_PI_2);
        assert!((axis.points[0].pos[0]).abs() < 1e-15);
        assert!((axis.points[0].pos[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn scaling_scales_volumes_cubically() {
        let mut scene = scene_with_points(
            vec![Box3D::new([1.0, 1.0, 0.0], [1.0, 1.0, 1.0], 0.2, KittiClass::Car)],
            vec![[1.0, 2.0, 3.0]],
        );
        let sem_before = scene.points[0].sem;
        scale_scene(&mut scene, 1.05);
        assert!((scene.boxes[0].volume() - 1.157625).abs() < 1e-9);
        assert_eq!(scene.boxes[0].yaw, 0.2);
        assert_eq!(scene.points[0].sem, sem_before);
        assert_eq!(scene.points[0].r, 0.5);

        let mut identity = scene.clone();
        scale_scene(&mut identity, 1.0);
        assert_eq!(identity, scene);
    }

    #[test]
    fn per_box_lone_box_never_reverted() {
        let mut scene = scene_with_points(vec![car([10.0, 0.0, 0.0])], vec![[10.0, 0.0, 0.0]]);
        let stats = per_box_augment(&mut scene, &AugmentConfig::default(), &mut frame_rng(1, "pb"));
        assert_eq!(stats, PerBoxStats { perturbed: 1, reverted: 0 });
    }

    #[test]
    fn per_box_abutting_boxes_revert_on_collision() {
        // Two boxes sharing a face; almost any perturbation collides.
        let a = Box3D::new([0.0, 0.0, 0.0], [2.0, 1.0, 2.0], 0.0, KittiClass::Car);
        let b = Box3D::new([2.0, 0.0, 0.0], [2.0, 1.0, 2.0], 0.0, KittiClass::Car);
        let cfg = AugmentConfig::default();
        let mut any_revert = false;
        for run in 0..50 {
            let mut scene = scene_with_points(vec![a, b], vec![]);
            let stats = per_box_augment(&mut scene, &cfg, &mut frame_rng(run, "abut"));
            any_revert |= stats.reverted > 0;
            for i in 0..scene.boxes.len() {
                for j in i + 1..scene.boxes.len() {
                    assert_eq!(bev_iou(&scene.boxes[i], &scene.boxes[j]), 0.0);
                }
            }
        }
        assert!(any_revert);
    }

    #[test]
    fn per_box_rigidity_preserves_canonical_offsets() {
        let b = car([10.0, 5.0, 0.0]);
        let mut rng = frame_rng(8, "rigid");
        // Sample interior points in the box's canonical frame so every one
        // participates in the rigid co-transform.
        let points: Vec<[f64; 3]> = (0..200)
            .map(|_| {
                let c = [
                    rng.random_range(-1.9..1.9),
                    rng.random_range(-0.7..0.7),
                    rng.random_range(-0.7..0.7),
                ];
                crate::geometry::canonical_point_inverse(c, &b)
            })
            .collect();
        let mut scene = scene_with_points(vec![b], points);
        let before: Vec<[f64; 3]> = scene
            .points
            .iter()
            .map(|p| canonical_point(p.pos, &scene.boxes[0]))
            .collect();
        let stats = per_box_augment(&mut scene, &AugmentConfig::default(), &mut rng);
        assert_eq!(stats.perturbed, 1);
        for (p, offsets) in scene.points.iter().zip(&before) {
            let after = canonical_point(p.pos, &scene.boxes[0]);
            for k in 0..3 {
                assert!(
                    (after[k] - offsets[k]).abs() < 1e-9,
                    "{after:?} vs {offsets:?}"
                );
            }
        }
    }

    #[test]
    fn fixed_seed_bit_identical() {
        let mut db = GtDatabase::new();
        db.push(GtEntry {
            frame_id: "f".into(),
            box3d: car([20.0, 5.0, 0.0]),
            points: FusedPointCloud {
                points: vec![FusedPoint {
                    x: 20.0,
                    y: 5.0,
                    z: 0.0,
                    r: 0.25,
                    sem: [0.0, 1.0, 0.0, 0.0],
                }],
            },
        });
        let cfg = AugmentConfig {
            sample_counts: [0, 1, 0, 0],
            ..AugmentConfig::default()
        };
        let run = |seed: u64| {
            let mut scene = scene_with_points(vec![car([5.0, -5.0, 0.0])], vec![[5.0, -5.0, 0.0]]);
            let mut rng = frame_rng(seed, "000001");
            sample_gt(&db, &mut scene, &cfg, &mut rng);
            global_flip_x(&mut scene, &cfg, &mut rng);
            global_rotate(&mut scene, &cfg, &mut rng);
            global_scale(&mut scene, &cfg, &mut rng);
            per_box_augment(&mut scene, &cfg, &mut rng);
            scene.to_fused()
        };
        let a = run(7);
        let b = run(7);
        assert_eq!(a, b);
        // Byte-level equality, not just approximate.
        assert_eq!(
            crate::kitti_io::write_fused(&a).unwrap(),
            crate::kitti_io::write_fused(&b).unwrap()
        );
    }

    #[test]
    fn config_validation() {
        let bad = AugmentConfig {
            flip_probability: 1.5,
            ..AugmentConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = AugmentConfig {
            scale_range: (1.1, 0.9),
            ..AugmentConfig::default()
        };
        assert!(bad.validate().is_err());
        let cfg = AugmentConfig::default();
        let parsed = AugmentConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(parsed, cfg);
    }
}
