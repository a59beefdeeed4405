//! Ground-truth-complete synthetic scenes.
//!
//! Every generator produces exact projections, per-view ground-truth depths,
//! identity correspondences over tracked point ids and per-point body
//! labels, so solver output can be audited against a known answer at desk
//! scale. Scenes cover the full prior range: a rigid scene, independently
//! moving rigid bodies (optionally sharing one rigid instant), an
//! isometrically bending sheet, and random low-rank shape bases.

use nalgebra::{Rotation3, Vector3};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use crate::correspondence::CorrespondenceMap;
use crate::error::{Error, Result};
use crate::geometry::{
    default_intrinsics, CameraIntrinsics, ViewObservation,
};
use crate::priors::{random_low_rank_structure, LowRankStructure};

/// Scene family tag.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scenario {
    Rigid,
    Multibody,
    Isometric,
    Lowrank,
}

/// Ground-truth depth range used by all generators; comfortably inside the
/// default decoding bounds so the squashing stays well-conditioned at the
/// solution.
pub const GT_DEPTH_RANGE: (f64, f64) = (1.0, 9.0);

/// A generated scene: views, exact depths, correspondences for consecutive
/// pairs, and per-point motion labels (0 = static background).
#[derive(Debug, Clone)]
pub struct SyntheticScene {
    pub views: Vec<ViewObservation>,
    pub gt_depths: Vec<Vec<f64>>,
    pub corrs: Vec<CorrespondenceMap>,
    pub motion_labels: Vec<u32>,
    pub scenario: Scenario,
    pub rigid_instant_pairs: Vec<(usize, usize)>,
    pub d_min: f64,
    pub d_max: f64,
}

impl SyntheticScene {
    pub fn n_points(&self) -> usize {
        self.motion_labels.len()
    }

    pub fn n_views(&self) -> usize {
        self.views.len()
    }

    /// 3D point of view `k`, index `i`, reconstructed from stored rays and
    /// ground-truth depth.
    pub fn point(&self, k: usize, i: usize) -> Vector3<f64> {
        self.views[k].rays[i] * self.gt_depths[k][i]
    }

    /// Verify internal consistency: depth bounds, lengths, identity of the
    /// correspondence maps, and intra-body distance preservation across all
    /// views (plus full preservation at rigid instants).
    pub fn audit(&self) -> Result<()> {
        let n = self.n_points();
        for (k, view) in self.views.iter().enumerate() {
            if view.len() != n || self.gt_depths[k].len() != n {
                return Err(Error::Dimension(format!("view {k} size mismatch")));
            }
            if let Some(&d) = self.gt_depths[k]
                .iter()
                .find(|&&d| !(self.d_min < d && d < self.d_max))
            {
                return Err(Error::Domain(format!(
                    "ground-truth depth {d} outside ({}, {})",
                    self.d_min, self.d_max
                )));
            }
        }
        for (p, corr) in self.corrs.iter().enumerate() {
            for i in 0..n {
                if corr.target_of(i) != Some(i) {
                    return Err(Error::Input(format!(
                        "pair {p}: expected identity correspondence at point {i}"
                    )));
                }
            }
        }
        // Intra-body distances must be constant across every view pair;
        // the isometric sheet deforms as a whole, so the rigidity check
        // does not apply there.
        if self.scenario != Scenario::Isometric {
            let drift = self.max_intra_body_drift();
            if drift > 1e-9 {
                return Err(Error::Domain(format!(
                    "intra-body distance drift {drift} exceeds 1e-9"
                )));
            }
        }
        for &(k, l) in &self.rigid_instant_pairs {
            let drift = self.max_pairwise_drift(k, l);
            if drift > 1e-9 {
                return Err(Error::Domain(format!(
                    "rigid instant ({k},{l}) violated: drift {drift}"
                )));
            }
        }
        Ok(())
    }

    /// Largest |d_ij^k - d_ij^l| over same-body point pairs and all view
    /// pairs.
    pub fn max_intra_body_drift(&self) -> f64 {
        let n = self.n_points();
        let mut worst = 0.0f64;
        for k in 0..self.n_views() {
            for l in (k + 1)..self.n_views() {
                for i in 0..n {
                    for j in (i + 1)..n {
                        if self.motion_labels[i] != self.motion_labels[j] {
                            continue;
                        }
                        let dk = (self.point(k, i) - self.point(k, j)).norm();
                        let dl = (self.point(l, i) - self.point(l, j)).norm();
                        worst = worst.max((dk - dl).abs());
                    }
                }
            }
        }
        worst
    }

    /// Largest |d_ij^k - d_ij^l| over all point pairs for one view pair.
    pub fn max_pairwise_drift(&self, k: usize, l: usize) -> f64 {
        let n = self.n_points();
        let mut worst = 0.0f64;
        for i in 0..n {
            for j in (i + 1)..n {
                let dk = (self.point(k, i) - self.point(k, j)).norm();
                let dl = (self.point(l, i) - self.point(l, j)).norm();
                worst = worst.max((dk - dl).abs());
            }
        }
        worst
    }

    /// Perturb every stored pixel with Gaussian noise of the given standard
    /// deviation (rays are recomputed, depths stay). This emulates noisy
    /// external correspondences; the scene will no longer pass `audit`.
    pub fn add_pixel_noise(&mut self, sigma_px: f64, seed: u64) -> Result<()> {
        use rand_distr::{Distribution, Normal};
        let normal = Normal::new(0.0, sigma_px)
            .map_err(|e| Error::Config(format!("bad noise sigma: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for view in &mut self.views {
            let intr = view.intrinsics;
            let noisy: Vec<(f64, f64)> = view
                .pixels()
                .iter()
                .map(|&(x, y)| (x + normal.sample(&mut rng), y + normal.sample(&mut rng)))
                .collect();
            view.rays = noisy.iter().map(|&(x, y)| intr.ray(x, y)).collect();
        }
        Ok(())
    }
}

/// Pixel margin points must keep from the image border, as a fraction of
/// each dimension.
const FRUSTUM_MARGIN: f64 = 0.12;
/// Depth margin inside [`GT_DEPTH_RANGE`] that moved points must respect.
const DEPTH_MARGIN: f64 = 0.05;
const MAX_POINT_RETRIES: usize = 200;

struct TrajectorySpec {
    /// World-to-camera transform per view.
    cameras: Vec<(Rotation3<f64>, Vector3<f64>)>,
    /// Per-body world translation at each view.
    body_offsets: Vec<Vec<Vector3<f64>>>,
}

/// Project a camera-frame point; `None` when it violates the frustum or
/// depth margins.
fn checked_projection(
    intr: &CameraIntrinsics,
    p: &Vector3<f64>,
) -> Option<((f64, f64), f64)> {
    let (lo, hi) = GT_DEPTH_RANGE;
    if !(p.z > lo + DEPTH_MARGIN && p.z < hi - DEPTH_MARGIN) {
        return None;
    }
    let px = intr.fx * p.x / p.z + intr.cx;
    let py = intr.fy * p.y / p.z + intr.cy;
    let (mx, my) = (
        FRUSTUM_MARGIN * intr.width as f64,
        FRUSTUM_MARGIN * intr.height as f64,
    );
    if px < mx || px > intr.width as f64 - mx || py < my || py > intr.height as f64 - my {
        return None;
    }
    Some(((px, py), p.z))
}

/// Generate points body by body, rejecting any draw that leaves the frustum
/// or depth range in some view, then assemble exact views and identity
/// correspondences.
fn assemble_scene(
    intr: CameraIntrinsics,
    spec: &TrajectorySpec,
    points_per_body: &[usize],
    scenario: Scenario,
    rigid_instant_pairs: Vec<(usize, usize)>,
    rng: &mut ChaCha8Rng,
) -> Result<SyntheticScene> {
    let m = spec.cameras.len();
    let n: usize = points_per_body.iter().sum();
    let mut world = Vec::with_capacity(n);
    let mut motion_labels = Vec::with_capacity(n);

    for (body, &count) in points_per_body.iter().enumerate() {
        for _ in 0..count {
            let mut placed = false;
            'retry: for _ in 0..MAX_POINT_RETRIES {
                let (lo, hi) = GT_DEPTH_RANGE;
                let px = rng.gen_range(0.2 * intr.width as f64..0.8 * intr.width as f64);
                let py = rng.gen_range(0.2 * intr.height as f64..0.8 * intr.height as f64);
                let depth = rng.gen_range(lo + 2.0..hi - 2.0);
                let base = intr.ray(px, py) * depth;
                for k in 0..m {
                    let (rot, t) = &spec.cameras[k];
                    let moved = rot * (base + spec.body_offsets[body][k]) + t;
                    if checked_projection(&intr, &moved).is_none() {
                        continue 'retry;
                    }
                }
                world.push(base);
                motion_labels.push(body as u32);
                placed = true;
                break;
            }
            if !placed {
                return Err(Error::Input(format!(
                    "could not place a point of body {body} inside all {m} frustums after \
                     {MAX_POINT_RETRIES} retries; reduce motion magnitudes"
                )));
            }
        }
    }

    let mut views = Vec::with_capacity(m);
    let mut gt_depths = Vec::with_capacity(m);
    for k in 0..m {
        let (rot, t) = &spec.cameras[k];
        let mut pixels = Vec::with_capacity(n);
        let mut depths = Vec::with_capacity(n);
        for (i, base) in world.iter().enumerate() {
            let body = motion_labels[i] as usize;
            let moved = rot * (base + spec.body_offsets[body][k]) + t;
            let ((px, py), z) = checked_projection(&intr, &moved)
                .expect("placement already validated every view");
            pixels.push((px, py));
            depths.push(z);
        }
        views.push(ViewObservation::from_pixels(
            intr,
            &pixels,
            (0..n as u64).collect(),
        )?);
        gt_depths.push(depths);
    }

    let corrs = (0..m - 1).map(|_| CorrespondenceMap::identity(n)).collect();
    Ok(SyntheticScene {
        views,
        gt_depths,
        corrs,
        motion_labels,
        scenario,
        rigid_instant_pairs,
        d_min: 0.1,
        d_max: 10.0,
    })
}

/// Camera poses orbiting the nominal scene centroid, one fresh random-axis
/// rotation step per view. Orbiting yields real parallax (consecutive
/// baselines a sizable fraction of the scene depth) while keeping points in
/// frame, and varying the step axis breaks the per-ray mirror ambiguity
/// that a single-axis track leaves nearly unresolved.
fn random_camera_track(m: usize, rng: &mut ChaCha8Rng) -> Vec<(Rotation3<f64>, Vector3<f64>)> {
    let center = Vector3::new(0.0, 0.0, 5.0);
    let mut pose = Rotation3::identity();
    (0..m)
        .map(|k| {
            if k == 0 {
                (Rotation3::identity(), Vector3::zeros())
            } else {
                let axis = nalgebra::Unit::new_normalize(Vector3::new(
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-1.0..1.0),
                    rng.gen_range(-0.3..0.3),
                ));
                let angle =
                    rng.gen_range(0.25..0.35) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
                pose = Rotation3::from_axis_angle(&axis, angle) * pose;
                let jitter = Vector3::new(
                    rng.gen_range(-0.08..0.08),
                    rng.gen_range(-0.08..0.08),
                    rng.gen_range(-0.05..0.05),
                );
                // x' = pose * (x - center) + center + jitter
                let t = center - pose * center + jitter;
                (pose, t)
            }
        })
        .collect()
}

/// One static point set observed by a rigidly moving camera: every pairwise
/// 3D distance is preserved across all views.
pub fn make_rigid_scene(
    n_points: usize,
    m_views: usize,
    intrinsics: CameraIntrinsics,
    seed: u64,
) -> Result<SyntheticScene> {
    if n_points < 4 {
        return Err(Error::Input(format!("need at least 4 points, got {n_points}")));
    }
    if m_views < 2 {
        return Err(Error::Input(format!("need at least 2 views, got {m_views}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let spec = TrajectorySpec {
        cameras: random_camera_track(m_views, &mut rng),
        body_offsets: vec![vec![Vector3::zeros(); m_views]],
    };
    assemble_scene(
        intrinsics,
        &spec,
        &[n_points],
        Scenario::Rigid,
        Vec::new(),
        &mut rng,
    )
}

/// Independently translating rigid bodies over a static background body 0.
/// When `rigid_instant = (k, l)` is given, every body freezes between views
/// `k` and `l`, so that one pair is globally rigid.
pub fn make_multibody_scene(
    bodies: usize,
    points_per_body: usize,
    m_views: usize,
    rigid_instant: Option<(usize, usize)>,
    seed: u64,
) -> Result<SyntheticScene> {
    make_multibody_scene_with_sizes(
        &vec![points_per_body; bodies],
        m_views,
        rigid_instant,
        seed,
    )
}

/// [`make_multibody_scene`] with an explicit point count per body; body 0
/// (typically the largest) is the static background.
pub fn make_multibody_scene_with_sizes(
    body_sizes: &[usize],
    m_views: usize,
    rigid_instant: Option<(usize, usize)>,
    seed: u64,
) -> Result<SyntheticScene> {
    let bodies = body_sizes.len();
    if bodies < 2 {
        return Err(Error::Input(format!("need at least 2 bodies, got {bodies}")));
    }
    if let Some(&small) = body_sizes.iter().find(|&&s| s < 2) {
        return Err(Error::Input(format!(
            "need at least 2 points per body, got {small}"
        )));
    }
    if m_views < 2 {
        return Err(Error::Input(format!("need at least 2 views, got {m_views}")));
    }
    if let Some((k, l)) = rigid_instant {
        if k >= l || l >= m_views {
            return Err(Error::Input(format!(
                "rigid instant ({k},{l}) not an increasing in-range view pair"
            )));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cameras = random_camera_track(m_views, &mut rng);

    // Steps inside the rigid instant's span are frozen for every body.
    let frozen = |step: usize| -> bool {
        rigid_instant.is_some_and(|(k, l)| step >= k && step < l)
    };
    // Body 0 is the static background; moving bodies translate with a fresh
    // random direction each step, so no single distorted geometry can absorb
    // the motion consistently across all pairs.
    let body_offsets: Vec<Vec<Vector3<f64>>> = (0..bodies)
        .map(|b| {
            let mut offsets = Vec::with_capacity(m_views);
            let mut acc = Vector3::zeros();
            offsets.push(acc);
            for step in 0..m_views - 1 {
                if b > 0 && !frozen(step) {
                    let dir = Vector3::new(
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-1.0..1.0),
                        rng.gen_range(-0.4..0.4),
                    )
                    .normalize();
                    acc += dir * rng.gen_range(0.25..0.40);
                }
                offsets.push(acc);
            }
            offsets
        })
        .collect();

    let spec = TrajectorySpec {
        cameras,
        body_offsets,
    };
    assemble_scene(
        default_intrinsics(),
        &spec,
        body_sizes,
        Scenario::Multibody,
        rigid_instant.into_iter().collect(),
        &mut rng,
    )
}

/// Number of grid rows and columns of an isometric sheet scene.
#[derive(Debug, Clone, Copy)]
pub struct GridSize {
    pub rows: usize,
    pub cols: usize,
}

/// Physical sheet width in scene units (the grid's long side spans this).
const SHEET_WIDTH: f64 = 2.0;
/// Sheet standoff along the optical axis.
const SHEET_DEPTH: f64 = 4.5;
/// Tilt of the sheet plane about the camera x-axis, so depth varies
/// substantially across the sheet.
const SHEET_TILT: f64 = 0.6;

/// A planar grid isometrically rolled onto cylinders of per-view varying
/// curvature. `bend_amplitude` is the total bend angle (radians) reached at
/// the last view; view `k` bends by `bend_amplitude * k / (m - 1)`.
/// Geodesic (arc-length) distances along the sheet are exactly preserved;
/// Euclidean distances between nearby grid points are preserved up to the
/// chord-versus-arc error, while distant pairs change between bent views.
pub fn make_isometric_scene(
    grid: GridSize,
    m_views: usize,
    bend_amplitude: f64,
    seed: u64,
) -> Result<SyntheticScene> {
    if grid.rows < 3 || grid.cols < 3 {
        return Err(Error::Input(format!(
            "grid must be at least 3x3, got {}x{}",
            grid.rows, grid.cols
        )));
    }
    if m_views < 2 {
        return Err(Error::Input(format!("need at least 2 views, got {m_views}")));
    }
    if !(0.0..std::f64::consts::TAU).contains(&bend_amplitude) {
        return Err(Error::Config(format!(
            "bend amplitude {bend_amplitude} outside [0, 2*pi): the sheet would self-intersect"
        )));
    }
    let _ = seed; // generation is fully deterministic; kept for interface parity

    let intr = default_intrinsics();
    let h = SHEET_WIDTH / (grid.cols - 1) as f64;
    let half_s = SHEET_WIDTH / 2.0;
    let half_t = h * (grid.rows - 1) as f64 / 2.0;
    let tilt = Rotation3::from_euler_angles(SHEET_TILT, 0.0, 0.0);

    let n = grid.rows * grid.cols;
    let mut views = Vec::with_capacity(m_views);
    let mut gt_depths = Vec::with_capacity(m_views);
    for k in 0..m_views {
        let theta = bend_amplitude * k as f64 / (m_views - 1) as f64;
        let kappa = theta / SHEET_WIDTH;
        let mut pixels = Vec::with_capacity(n);
        let mut depths = Vec::with_capacity(n);
        for r in 0..grid.rows {
            for c in 0..grid.cols {
                let s = c as f64 * h - half_s;
                let t = r as f64 * h - half_t;
                // Arc-length preserving roll around a cylinder of curvature
                // kappa; the flat limit is exact.
                let sheet = if kappa.abs() < 1e-12 {
                    Vector3::new(s, t, 0.0)
                } else {
                    Vector3::new(
                        (kappa * s).sin() / kappa,
                        t,
                        (1.0 - (kappa * s).cos()) / kappa,
                    )
                };
                let p = tilt * sheet + Vector3::new(0.0, 0.0, SHEET_DEPTH);
                let ((px, py), z) = checked_projection(&intr, &p).ok_or_else(|| {
                    Error::Config(format!(
                        "bent sheet leaves the frustum or depth range at view {k}; \
                         reduce the bend amplitude"
                    ))
                })?;
                pixels.push((px, py));
                depths.push(z);
            }
        }
        views.push(ViewObservation::from_pixels(
            intr,
            &pixels,
            (0..n as u64).collect(),
        )?);
        gt_depths.push(depths);
    }

    let corrs = (0..m_views - 1)
        .map(|_| CorrespondenceMap::identity(n))
        .collect();
    Ok(SyntheticScene {
        views,
        gt_depths,
        corrs,
        // The sheet deforms as a whole; there is no static background body.
        motion_labels: vec![1; n],
        scenario: Scenario::Isometric,
        rigid_instant_pairs: Vec::new(),
        d_min: 0.1,
        d_max: 10.0,
    })
}

/// Random shape basis and per-view projections; generic position with
/// probability 1.
pub fn make_lowrank_scene(b: usize, n: usize, m: usize, seed: u64) -> Result<LowRankStructure> {
    if n <= b + 3 {
        return Err(Error::Input(format!(
            "need more than b + 3 = {} points, got {n}",
            b + 3
        )));
    }
    if m < 2 {
        return Err(Error::Input(format!("need at least 2 views, got {m}")));
    }
    random_low_rank_structure(b, n, m, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::priors::{rank_check, DEFAULT_RANK_TOLERANCE};

    #[test]
    fn rigid_scene_passes_audit_and_preserves_distances() {
        let scene = make_rigid_scene(25, 4, default_intrinsics(), 3).unwrap();
        scene.audit().unwrap();
        for k in 0..4 {
            for l in (k + 1)..4 {
                assert!(scene.max_pairwise_drift(k, l) < 1e-9);
            }
        }
        assert!(scene.motion_labels.iter().all(|&b| b == 0));
    }

    #[test]
    fn rigid_scene_is_deterministic_per_seed() {
        let a = make_rigid_scene(10, 3, default_intrinsics(), 11).unwrap();
        let b = make_rigid_scene(10, 3, default_intrinsics(), 11).unwrap();
        for k in 0..3 {
            assert_eq!(a.gt_depths[k], b.gt_depths[k]);
            for (ra, rb) in a.views[k].rays.iter().zip(&b.views[k].rays) {
                assert_eq!(ra, rb);
            }
        }
        let c = make_rigid_scene(10, 3, default_intrinsics(), 12).unwrap();
        assert_ne!(a.gt_depths[0], c.gt_depths[0]);
    }

    #[test]
    fn rigid_scene_rejects_tiny_inputs() {
        assert!(make_rigid_scene(3, 3, default_intrinsics(), 0).is_err());
        assert!(make_rigid_scene(10, 1, default_intrinsics(), 0).is_err());
    }

    #[test]
    fn multibody_without_motion_is_rigid() {
        // Two bodies whose velocities are zeroed by freezing every step.
        let scene = make_multibody_scene(2, 8, 3, Some((0, 2)), 5).unwrap();
        scene.audit().unwrap();
        for k in 0..3 {
            for l in (k + 1)..3 {
                assert!(scene.max_pairwise_drift(k, l) < 1e-9);
            }
        }
    }

    #[test]
    fn multibody_relative_motion_changes_inter_body_distances() {
        let scene = make_multibody_scene(2, 10, 4, None, 9).unwrap();
        scene.audit().unwrap();
        // Intra-body distances constant, inter-body distances move by much
        // more than the audit bound.
        let mut max_inter_drift = 0.0f64;
        let n = scene.n_points();
        for k in 0..scene.n_views() {
            for l in (k + 1)..scene.n_views() {
                for i in 0..n {
                    for j in (i + 1)..n {
                        if scene.motion_labels[i] == scene.motion_labels[j] {
                            continue;
                        }
                        let dk = (scene.point(k, i) - scene.point(k, j)).norm();
                        let dl = (scene.point(l, i) - scene.point(l, j)).norm();
                        max_inter_drift = max_inter_drift.max((dk - dl).abs());
                    }
                }
            }
        }
        assert!(
            max_inter_drift > 1e-8 * 10.0,
            "inter-body drift {max_inter_drift} too small"
        );
        assert!(max_inter_drift > 0.01);
    }

    #[test]
    fn rigid_instant_pair_has_zero_edm_difference() {
        let scene = make_multibody_scene(2, 10, 4, Some((0, 1)), 13).unwrap();
        scene.audit().unwrap();
        assert!(scene.max_pairwise_drift(0, 1) < 1e-9);
        // Later pairs are not rigid.
        assert!(scene.max_pairwise_drift(1, 2) > 0.01);
    }

    #[test]
    fn isometric_flat_sheet_is_rigid() {
        let scene = make_isometric_scene(
            GridSize { rows: 5, cols: 7 },
            3,
            0.0,
            0,
        )
        .unwrap();
        scene.audit().unwrap();
        for k in 0..3 {
            for l in (k + 1)..3 {
                assert!(scene.max_pairwise_drift(k, l) < 1e-9);
            }
        }
    }

    #[test]
    fn isometric_sheet_preserves_local_but_not_global_distances() {
        let grid = GridSize { rows: 8, cols: 12 };
        let bend = 1.2;
        let scene = make_isometric_scene(grid, 4, bend, 0).unwrap();
        let h = SHEET_WIDTH / (grid.cols - 1) as f64;
        let kappa_max = bend / SHEET_WIDTH;
        assert!(kappa_max * h <= 0.3, "test assumes kappa*h <= 0.3");

        // 4-neighbor Euclidean distances change by less than 1% between any
        // two views (chord-versus-arc bound).
        let idx = |r: usize, c: usize| r * grid.cols + c;
        for k in 0..scene.n_views() {
            for r in 0..grid.rows {
                for c in 0..grid.cols {
                    if c + 1 < grid.cols {
                        let d = (scene.point(k, idx(r, c)) - scene.point(k, idx(r, c + 1))).norm();
                        assert!(
                            (d - h).abs() / h < 0.01,
                            "view {k}: horizontal neighbor distance {d} vs {h}"
                        );
                    }
                    if r + 1 < grid.rows {
                        let d = (scene.point(k, idx(r, c)) - scene.point(k, idx(r + 1, c))).norm();
                        assert!((d - h).abs() / h < 0.01);
                    }
                }
            }
        }

        // Distances between far corners change across bent views.
        let far_0 = (scene.point(0, idx(0, 0))
            - scene.point(0, idx(grid.rows - 1, grid.cols - 1)))
        .norm();
        let far_last = (scene.point(3, idx(0, 0))
            - scene.point(3, idx(grid.rows - 1, grid.cols - 1)))
        .norm();
        assert!(
            (far_0 - far_last).abs() > 0.01,
            "far corner distance did not change: {far_0} vs {far_last}"
        );
        scene.audit().unwrap();
    }

    #[test]
    fn isometric_rejects_bad_amplitude() {
        let grid = GridSize { rows: 4, cols: 4 };
        assert!(make_isometric_scene(grid, 3, std::f64::consts::TAU, 0).is_err());
        assert!(make_isometric_scene(grid, 3, -0.1, 0).is_err());
    }

    #[test]
    fn lowrank_scene_satisfies_rank_bounds() {
        for seed in 0..20 {
            let s = make_lowrank_scene(1, 10, 3, seed).unwrap();
            let report = rank_check(&s, DEFAULT_RANK_TOLERANCE).unwrap();
            assert!(report.all_within_bounds, "seed {seed}");
        }
        assert!(make_lowrank_scene(1, 4, 3, 0).is_err());
        assert!(make_lowrank_scene(1, 10, 1, 0).is_err());
    }

    #[test]
    fn lowrank_single_basis_views_are_scalings() {
        let s = make_lowrank_scene(1, 8, 3, 4).unwrap();
        let clouds = crate::priors::build_low_rank_views(&s).unwrap();
        // With b = 1 every view's coordinates are outer products m_k b^T:
        // each view's x/y/z rows are proportional to the same basis row.
        for cloud in &clouds {
            let xs: Vec<f64> = cloud.coords.iter().map(|p| p.x).collect();
            let ys: Vec<f64> = cloud.coords.iter().map(|p| p.y).collect();
            // Cross-ratios match: x_i * y_j == x_j * y_i.
            for i in 0..8 {
                for j in 0..8 {
                    let lhs = xs[i] * ys[j];
                    let rhs = xs[j] * ys[i];
                    assert!((lhs - rhs).abs() <= 1e-9 * lhs.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn pixel_noise_breaks_exactness() {
        let mut scene = make_rigid_scene(10, 3, default_intrinsics(), 6).unwrap();
        let before = scene.views[1].rays[0];
        scene.add_pixel_noise(0.5, 7).unwrap();
        let after = scene.views[1].rays[0];
        assert_ne!(before, after);
    }

    #[test]
    fn gt_depths_equal_third_coordinates() {
        let scene = make_rigid_scene(12, 3, default_intrinsics(), 14).unwrap();
        for k in 0..3 {
            for i in 0..12 {
                // Rays have z = 1, so the reconstructed third coordinate is
                // the depth itself.
                assert_eq!(scene.point(k, i).z, scene.gt_depths[k][i]);
            }
        }
    }
}
