//! Cameras, rays, depth fields, back-projection and Euclidean distance
//! matrices.
//!
//! A scene view is a pinhole camera plus one homogeneous ray per tracked
//! point. Depths are optimized through an unconstrained parametrization:
//! a logistic squashing of the raw value is mapped to inverse depth, so the
//! decoded depth always stays strictly inside `(d_min, d_max)`. 3D structure
//! is `x_i = depth_i * ray_i`, and pairwise geometry is summarized by the
//! matrix of squared point-to-point distances.

use nalgebra::{DMatrix, Vector3};

use crate::error::{Error, Result};

/// Default cap on the side length of a densely materialized distance matrix.
/// Larger point sets must go through [`edge_distances`].
pub const DEFAULT_DENSE_CAP: usize = 2000;

/// Pinhole camera intrinsics in pixels.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CameraIntrinsics {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraIntrinsics {
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let k = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
        };
        k.validate()?;
        Ok(k)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(Error::Config(format!(
                "focal lengths must be positive, got fx={} fy={}",
                self.fx, self.fy
            )));
        }
        if !(0.0 <= self.cx && self.cx < self.width as f64) {
            return Err(Error::Config(format!(
                "principal point cx={} outside [0,{})",
                self.cx, self.width
            )));
        }
        if !(0.0 <= self.cy && self.cy < self.height as f64) {
            return Err(Error::Config(format!(
                "principal point cy={} outside [0,{})",
                self.cy, self.height
            )));
        }
        Ok(())
    }

    /// Homogeneous ray through pixel `(px, py)`: `((px-cx)/fx, (py-cy)/fy, 1)`.
    pub fn ray(&self, px: f64, py: f64) -> Vector3<f64> {
        Vector3::new((px - self.cx) / self.fx, (py - self.cy) / self.fy, 1.0)
    }

    /// Pixel under which a unit-depth ray projects; inverse of [`Self::ray`].
    pub fn pixel_of_ray(&self, ray: &Vector3<f64>) -> (f64, f64) {
        (ray.x * self.fx + self.cx, ray.y * self.fy + self.cy)
    }
}

/// VolumeDeform-like default camera: 640x480, fx = fy = 500, centered
/// principal point.
pub fn default_intrinsics() -> CameraIntrinsics {
    CameraIntrinsics {
        fx: 500.0,
        fy: 500.0,
        cx: 320.0,
        cy: 240.0,
        width: 640,
        height: 480,
    }
}

/// One view of the scene: intrinsics plus a homogeneous ray and a stable id
/// per tracked point.
#[derive(Debug, Clone)]
pub struct ViewObservation {
    pub intrinsics: CameraIntrinsics,
    pub rays: Vec<Vector3<f64>>,
    pub point_ids: Vec<u64>,
}

impl ViewObservation {
    pub fn new(
        intrinsics: CameraIntrinsics,
        rays: Vec<Vector3<f64>>,
        point_ids: Vec<u64>,
    ) -> Result<Self> {
        let view = Self {
            intrinsics,
            rays,
            point_ids,
        };
        view.validate()?;
        Ok(view)
    }

    /// Build a view from pixel positions; rays are computed from the
    /// intrinsics.
    pub fn from_pixels(
        intrinsics: CameraIntrinsics,
        pixels: &[(f64, f64)],
        point_ids: Vec<u64>,
    ) -> Result<Self> {
        let rays = pixels
            .iter()
            .map(|&(px, py)| intrinsics.ray(px, py))
            .collect();
        Self::new(intrinsics, rays, point_ids)
    }

    pub fn validate(&self) -> Result<()> {
        self.intrinsics.validate()?;
        if self.rays.len() != self.point_ids.len() {
            return Err(Error::Dimension(format!(
                "{} rays vs {} point ids",
                self.rays.len(),
                self.point_ids.len()
            )));
        }
        if self.rays.iter().any(|r| r.z != 1.0) {
            return Err(Error::Domain(
                "every homogeneous ray must have third component exactly 1".into(),
            ));
        }
        let mut ids: Vec<u64> = self.point_ids.clone();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Domain("duplicate point id within a view".into()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rays.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rays.is_empty()
    }

    /// Pixel positions of all tracked points.
    pub fn pixels(&self) -> Vec<(f64, f64)> {
        self.rays
            .iter()
            .map(|r| self.intrinsics.pixel_of_ray(r))
            .collect()
    }
}

/// Per-point depths of one view, stored as unconstrained raw values.
///
/// The decoded depth is `1 / (a * sigmoid(raw) + b)` with
/// `a = 1/d_min - 1/d_max` and `b = 1/d_max`: the squashed raw value is the
/// scaled inverse depth, so decoding is monotone decreasing in the raw value
/// and ranges over `(d_min, d_max)`.
#[derive(Debug, Clone)]
pub struct DepthField {
    pub raw: Vec<f64>,
    pub d_min: f64,
    pub d_max: f64,
}

impl DepthField {
    pub fn new(raw: Vec<f64>, d_min: f64, d_max: f64) -> Result<Self> {
        check_depth_bounds(d_min, d_max)?;
        Ok(Self { raw, d_min, d_max })
    }

    /// All raw values zero: every point decodes to the mid-range depth.
    pub fn zeros(n: usize, d_min: f64, d_max: f64) -> Result<Self> {
        Self::new(vec![0.0; n], d_min, d_max)
    }

    /// Invert the decoding so that `decode()` reproduces `depths` exactly.
    /// Every target depth must lie strictly inside `(d_min, d_max)`.
    pub fn from_depths(depths: &[f64], d_min: f64, d_max: f64) -> Result<Self> {
        check_depth_bounds(d_min, d_max)?;
        let a = 1.0 / d_min - 1.0 / d_max;
        let b = 1.0 / d_max;
        let raw = depths
            .iter()
            .map(|&depth| {
                if !(d_min < depth && depth < d_max) {
                    return Err(Error::Domain(format!(
                        "depth {depth} outside open interval ({d_min}, {d_max})"
                    )));
                }
                let s = (1.0 / depth - b) / a;
                Ok(logit(s))
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Self { raw, d_min, d_max })
    }

    pub fn len(&self) -> usize {
        self.raw.len()
    }

    pub fn is_empty(&self) -> bool {
        self.raw.is_empty()
    }

    /// Decode all raw values to depths in `(d_min, d_max)`.
    pub fn decode(&self) -> Vec<f64> {
        self.raw.iter().map(|&r| self.decode_one(r)).collect()
    }

    /// Decode a single raw value with this field's bounds.
    ///
    /// Deep in the squashing tails the inverse depth would round onto a
    /// bound exactly; it is clamped a relative hair inside so the decoded
    /// depth stays strictly between `d_min` and `d_max` for any raw value.
    pub fn decode_one(&self, raw: f64) -> f64 {
        let (a, b) = self.inverse_depth_coeffs();
        let (lo, hi) = self.inverse_depth_clamp();
        let inv = (a * sigmoid(raw) + b).clamp(lo, hi);
        1.0 / inv
    }

    /// Derivative of the decoded depth with respect to the raw value:
    /// `-a * s * (1 - s) * depth^2` with `s = sigmoid(raw)`; zero where the
    /// tail clamp is active.
    pub fn decode_derivative(&self, raw: f64) -> f64 {
        let (a, b) = self.inverse_depth_coeffs();
        let (lo, hi) = self.inverse_depth_clamp();
        let s = sigmoid(raw);
        let inv = a * s + b;
        if inv <= lo || inv >= hi {
            return 0.0;
        }
        let depth = 1.0 / inv;
        -a * s * (1.0 - s) * depth * depth
    }

    fn inverse_depth_coeffs(&self) -> (f64, f64) {
        (1.0 / self.d_min - 1.0 / self.d_max, 1.0 / self.d_max)
    }

    fn inverse_depth_clamp(&self) -> (f64, f64) {
        let (a, b) = self.inverse_depth_coeffs();
        (b * (1.0 + DEPTH_TAIL_CLAMP), (a + b) * (1.0 - DEPTH_TAIL_CLAMP))
    }
}

/// Relative margin keeping decoded depths off the exact bounds.
const DEPTH_TAIL_CLAMP: f64 = 1e-12;

fn check_depth_bounds(d_min: f64, d_max: f64) -> Result<()> {
    if !(d_min > 0.0) {
        return Err(Error::Config(format!("d_min must be positive, got {d_min}")));
    }
    if !(d_max > d_min) {
        return Err(Error::Config(format!(
            "d_max must exceed d_min, got d_min={d_min} d_max={d_max}"
        )));
    }
    Ok(())
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn logit(p: f64) -> f64 {
    (p / (1.0 - p)).ln()
}

/// Decode a depth field to positive per-point depths.
pub fn decode_depth(field: &DepthField) -> Result<Vec<f64>> {
    check_depth_bounds(field.d_min, field.d_max)?;
    Ok(field.decode())
}

/// 3D points in the camera frame of the producing view.
#[derive(Debug, Clone)]
pub struct PointCloud {
    pub coords: Vec<Vector3<f64>>,
    pub point_ids: Vec<u64>,
}

impl PointCloud {
    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    /// Scale every coordinate by `s`.
    pub fn scaled(&self, s: f64) -> PointCloud {
        PointCloud {
            coords: self.coords.iter().map(|c| c * s).collect(),
            point_ids: self.point_ids.clone(),
        }
    }
}

/// Lift a view to 3D: `coords[i] = depths[i] * rays[i]`.
pub fn back_project(view: &ViewObservation, depths: &[f64]) -> Result<PointCloud> {
    if depths.len() != view.rays.len() {
        return Err(Error::Dimension(format!(
            "{} depths vs {} rays",
            depths.len(),
            view.rays.len()
        )));
    }
    if let Some(&bad) = depths.iter().find(|&&d| !(d > 0.0)) {
        return Err(Error::Domain(format!("nonpositive depth {bad}")));
    }
    Ok(PointCloud {
        coords: view
            .rays
            .iter()
            .zip(depths)
            .map(|(ray, &depth)| ray * depth)
            .collect(),
        point_ids: view.point_ids.clone(),
    })
}

/// Symmetric matrix of squared pairwise distances.
#[derive(Debug, Clone)]
pub struct Edm {
    entries: DMatrix<f64>,
}

impl Edm {
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[(i, j)]
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.entries
    }
}

/// Squared distance between two points in the Gram form
/// `g_ii + g_jj - 2 g_ij`, clamped at zero.
///
/// Both the dense matrix construction and the per-edge vector form go
/// through this one function, and the expression is symmetric under operand
/// swap (IEEE addition and multiplication commute), so the two paths are
/// bitwise identical for either edge orientation.
#[inline]
pub(crate) fn gram_squared_distance(a: &Vector3<f64>, b: &Vector3<f64>) -> f64 {
    ((a.dot(a) + b.dot(b)) - 2.0 * a.dot(b)).max(0.0)
}

/// Build the squared-distance matrix of a cloud through the Gram identity
/// `E = diag(G) 1^T - 2 G + 1 diag(G)^T` with `G = X^T X`, evaluated
/// entrywise.
///
/// The strict upper triangle is mirrored onto the lower one and the diagonal
/// is zeroed, so the result is exactly symmetric with an exactly zero
/// diagonal.
pub fn compute_edm(cloud: &PointCloud) -> Result<Edm> {
    compute_edm_with_cap(cloud, DEFAULT_DENSE_CAP)
}

/// [`compute_edm`] with an explicit size cap.
pub fn compute_edm_with_cap(cloud: &PointCloud, cap: usize) -> Result<Edm> {
    let n = cloud.len();
    if n == 0 {
        return Err(Error::Input("empty point cloud".into()));
    }
    if n > cap {
        return Err(Error::Input(format!(
            "dense distance matrix for {n} points exceeds cap {cap}; use edge_distances"
        )));
    }
    let mut entries = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let value = gram_squared_distance(&cloud.coords[i], &cloud.coords[j]);
            entries[(i, j)] = value;
            entries[(j, i)] = value;
        }
    }
    Ok(Edm { entries })
}

/// Entrywise difference of two equally sized distance matrices.
pub fn edm_difference(e_k: &Edm, e_l: &Edm) -> Result<DMatrix<f64>> {
    if e_k.dim() != e_l.dim() {
        return Err(Error::Dimension(format!(
            "distance matrices of size {} vs {}",
            e_k.dim(),
            e_l.dim()
        )));
    }
    Ok(e_k.as_matrix() - e_l.as_matrix())
}

/// Squared distances for selected point pairs, in edge order; the vector form
/// of [`compute_edm`] restricted to `edges`.
pub fn edge_distances(cloud: &PointCloud, edges: &[(usize, usize)]) -> Result<Vec<f64>> {
    let n = cloud.len();
    edges
        .iter()
        .map(|&(i, j)| {
            if i >= n || j >= n {
                return Err(Error::Lookup(format!(
                    "edge ({i},{j}) out of range for {n} points"
                )));
            }
            Ok(gram_squared_distance(&cloud.coords[i], &cloud.coords[j]))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn random_cloud(rng: &mut impl Rng, n: usize) -> PointCloud {
        PointCloud {
            coords: (0..n)
                .map(|_| {
                    Vector3::new(
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(-2.0..2.0),
                        rng.gen_range(0.5..8.0),
                    )
                })
                .collect(),
            point_ids: (0..n as u64).collect(),
        }
    }

    #[test]
    fn decode_depth_at_zero_raw() {
        let field = DepthField::new(vec![0.0], 0.1, 10.0).unwrap();
        let depths = decode_depth(&field).unwrap();
        // 1 / (0.5*(1/0.1 - 1/10) + 1/10) = 1/5.05
        assert!((depths[0] - 1.0 / 5.05).abs() < 1e-15);
        assert!((depths[0] - 0.19802).abs() < 1e-5);
    }

    #[test]
    fn decode_depth_limits() {
        let field = DepthField::new(vec![-50.0, 50.0], 0.1, 10.0).unwrap();
        let depths = decode_depth(&field).unwrap();
        // Decoding is monotone decreasing in the raw value: the map squashes
        // the raw value onto scaled *inverse* depth, so raw -> -inf gives
        // d_max and raw -> +inf gives d_min.
        assert!((depths[0] - 10.0).abs() < 1e-9);
        assert!((depths[1] - 0.1).abs() < 1e-9);
        assert!(depths[0] > depths[1]);
    }

    #[test]
    fn decode_depth_matches_scalar_oracle() {
        // Independent scalar evaluation of the same map.
        let raw = 1.2_f64;
        let (d_min, d_max) = (0.1, 10.0);
        let s = 1.0 / (1.0 + (-raw).exp());
        let expected = 1.0 / (s * (1.0 / d_min - 1.0 / d_max) + 1.0 / d_max);
        let field = DepthField::new(vec![raw], d_min, d_max).unwrap();
        let got = decode_depth(&field).unwrap()[0];
        assert!((got - expected).abs() <= 1e-15 * expected.abs());
    }

    #[test]
    fn decode_depth_strictly_inside_bounds() {
        let raws: Vec<f64> = (-50..=50).map(f64::from).collect();
        let field = DepthField::new(raws, 0.1, 10.0).unwrap();
        for depth in field.decode() {
            assert!(0.1 < depth && depth < 10.0);
        }
    }

    #[test]
    fn decode_depth_monotone_decreasing() {
        let field = DepthField::new(vec![], 0.5, 20.0).unwrap();
        let mut prev = f64::INFINITY;
        for raw in (-40..=40).map(|i| i as f64 * 0.5) {
            let depth = field.decode_one(raw);
            assert!(depth < prev);
            prev = depth;
        }
    }

    #[test]
    fn depth_bounds_rejected() {
        assert!(DepthField::new(vec![0.0], 1.0, 1.0).is_err());
        assert!(DepthField::new(vec![0.0], 10.0, 0.1).is_err());
        assert!(DepthField::new(vec![0.0], 0.0, 1.0).is_err());
    }

    #[test]
    fn from_depths_round_trips() {
        let targets = vec![0.11, 1.0, 3.5, 9.9];
        let field = DepthField::from_depths(&targets, 0.1, 10.0).unwrap();
        for (decoded, target) in field.decode().iter().zip(&targets) {
            assert!((decoded - target).abs() <= 1e-12 * target);
        }
        assert!(DepthField::from_depths(&[0.1], 0.1, 10.0).is_err());
    }

    #[test]
    fn back_project_scalar_multiply() {
        let k = default_intrinsics();
        let view = ViewObservation::new(k, vec![Vector3::new(0.5, -0.25, 1.0)], vec![7]).unwrap();
        let cloud = back_project(&view, &[2.0]).unwrap();
        assert_eq!(cloud.coords[0], Vector3::new(1.0, -0.5, 2.0));
        assert_eq!(cloud.point_ids, vec![7]);
    }

    #[test]
    fn back_project_principal_point() {
        let k = default_intrinsics();
        let view = ViewObservation::from_pixels(k, &[(320.0, 240.0)], vec![0]).unwrap();
        assert_eq!(view.rays[0], Vector3::new(0.0, 0.0, 1.0));
        let cloud = back_project(&view, &[3.0]).unwrap();
        assert_eq!(cloud.coords[0], Vector3::new(0.0, 0.0, 3.0));
    }

    #[test]
    fn back_project_matches_componentwise_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let k = default_intrinsics();
        let pixels: Vec<(f64, f64)> = (0..5)
            .map(|_| (rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0)))
            .collect();
        let depths: Vec<f64> = (0..5).map(|_| rng.gen_range(0.5..9.0)).collect();
        let view = ViewObservation::from_pixels(k, &pixels, (0..5).collect()).unwrap();
        let cloud = back_project(&view, &depths).unwrap();
        for i in 0..5 {
            for c in 0..3 {
                let expected = depths[i] * view.rays[i][c];
                assert_eq!(cloud.coords[i][c], expected);
            }
        }
    }

    #[test]
    fn back_project_error_paths() {
        let k = default_intrinsics();
        let view = ViewObservation::from_pixels(k, &[(1.0, 1.0), (2.0, 2.0)], vec![0, 1]).unwrap();
        assert!(matches!(
            back_project(&view, &[1.0]),
            Err(Error::Dimension(_))
        ));
        assert!(matches!(
            back_project(&view, &[1.0, -0.5]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn reprojection_recovers_rays() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let k = default_intrinsics();
        let pixels: Vec<(f64, f64)> = (0..20)
            .map(|_| (rng.gen_range(0.0..640.0), rng.gen_range(0.0..480.0)))
            .collect();
        let depths: Vec<f64> = (0..20).map(|_| rng.gen_range(0.5..9.0)).collect();
        let view = ViewObservation::from_pixels(k, &pixels, (0..20).collect()).unwrap();
        let cloud = back_project(&view, &depths).unwrap();
        for (coord, ray) in cloud.coords.iter().zip(&view.rays) {
            let reprojected = coord / coord.z;
            assert!((reprojected - ray).norm() <= 1e-12 * ray.norm());
        }
    }

    #[test]
    fn edm_hand_computed() {
        let cloud = PointCloud {
            coords: vec![
                Vector3::new(0.0, 0.0, 0.0),
                Vector3::new(1.0, 0.0, 0.0),
                Vector3::new(0.0, 2.0, 0.0),
            ],
            point_ids: vec![0, 1, 2],
        };
        let edm = compute_edm(&cloud).unwrap();
        let expected = [[0.0, 1.0, 4.0], [1.0, 0.0, 5.0], [4.0, 5.0, 0.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!((edm.entry(i, j) - expected[i][j]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn edm_single_point() {
        let cloud = PointCloud {
            coords: vec![Vector3::new(1.0, 2.0, 3.0)],
            point_ids: vec![0],
        };
        let edm = compute_edm(&cloud).unwrap();
        assert_eq!(edm.dim(), 1);
        assert_eq!(edm.entry(0, 0), 0.0);
    }

    #[test]
    fn edm_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let cloud = random_cloud(&mut rng, 20);
        let edm = compute_edm(&cloud).unwrap();
        for i in 0..20 {
            for j in 0..20 {
                let direct = (cloud.coords[i] - cloud.coords[j]).norm_squared();
                let tol = 1e-12 * direct.max(1.0);
                assert!(
                    (edm.entry(i, j) - direct).abs() <= tol,
                    "entry ({i},{j}): {} vs {}",
                    edm.entry(i, j),
                    direct
                );
            }
        }
    }

    #[test]
    fn edm_symmetric_zero_diagonal_nonnegative() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for n in [1, 2, 7, 33] {
            let cloud = random_cloud(&mut rng, n);
            let edm = compute_edm(&cloud).unwrap();
            for i in 0..n {
                assert_eq!(edm.entry(i, i), 0.0);
                for j in 0..n {
                    assert_eq!(edm.entry(i, j), edm.entry(j, i));
                    assert!(edm.entry(i, j) >= 0.0);
                }
            }
        }
    }

    #[test]
    fn edm_scales_quadratically() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let cloud = random_cloud(&mut rng, 15);
        let edm = compute_edm(&cloud).unwrap();
        for s in [0.1, 2.0, 42.0] {
            let scaled = compute_edm(&cloud.scaled(s)).unwrap();
            for i in 0..15 {
                for j in 0..15 {
                    let expected = s * s * edm.entry(i, j);
                    assert!((scaled.entry(i, j) - expected).abs() <= 1e-10 * expected.max(1e-30));
                }
            }
        }
    }

    #[test]
    fn edm_rejects_empty_and_oversize() {
        let empty = PointCloud {
            coords: vec![],
            point_ids: vec![],
        };
        assert!(compute_edm(&empty).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let cloud = random_cloud(&mut rng, 5);
        assert!(compute_edm_with_cap(&cloud, 4).is_err());
    }

    #[test]
    fn edm_difference_identical_and_hand_case() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let cloud = random_cloud(&mut rng, 8);
        let e = compute_edm(&cloud).unwrap();
        let diff = edm_difference(&e, &e).unwrap();
        assert!(diff.iter().all(|&v| v == 0.0));

        let a = Edm {
            entries: DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]),
        };
        let b = Edm {
            entries: DMatrix::from_row_slice(2, 2, &[0.0, 4.0, 4.0, 0.0]),
        };
        let d = edm_difference(&a, &b).unwrap();
        assert_eq!(d[(0, 1)], -3.0);
        assert_eq!(d[(1, 0)], -3.0);
        assert_eq!(d[(0, 0)], 0.0);
    }

    #[test]
    fn edm_difference_elementwise_oracle_and_mismatch() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let c1 = random_cloud(&mut rng, 10);
        let c2 = random_cloud(&mut rng, 10);
        let (e1, e2) = (compute_edm(&c1).unwrap(), compute_edm(&c2).unwrap());
        let diff = edm_difference(&e1, &e2).unwrap();
        for i in 0..10 {
            for j in 0..10 {
                assert_eq!(diff[(i, j)], e1.entry(i, j) - e2.entry(i, j));
            }
        }
        let small = compute_edm(&random_cloud(&mut rng, 4)).unwrap();
        assert!(edm_difference(&e1, &small).is_err());
    }

    #[test]
    fn edge_distances_basics() {
        let cloud = PointCloud {
            coords: vec![Vector3::new(0.0, 0.0, 0.0), Vector3::new(1.0, 0.0, 0.0)],
            point_ids: vec![0, 1],
        };
        assert_eq!(edge_distances(&cloud, &[(0, 1)]).unwrap(), vec![1.0]);
        assert!(edge_distances(&cloud, &[]).unwrap().is_empty());
        assert!(matches!(
            edge_distances(&cloud, &[(0, 2)]),
            Err(Error::Lookup(_))
        ));
    }

    #[test]
    fn edge_distances_match_dense_edm_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let cloud = random_cloud(&mut rng, 30);
        let edm = compute_edm(&cloud).unwrap();
        let mut edges: Vec<(usize, usize)> = (0..100)
            .map(|_| (rng.gen_range(0..30), rng.gen_range(0..30)))
            .collect();
        edges.push((4, 4));
        let dists = edge_distances(&cloud, &edges).unwrap();
        for (&(i, j), &d) in edges.iter().zip(&dists) {
            if i == j {
                assert_eq!(d, 0.0);
            } else {
                assert_eq!(d, edm.entry(i, j), "edge ({i},{j})");
            }
        }
    }

    #[test]
    fn view_validation_errors() {
        let k = default_intrinsics();
        assert!(ViewObservation::new(k, vec![Vector3::new(0.0, 0.0, 2.0)], vec![0]).is_err());
        assert!(
            ViewObservation::new(
                k,
                vec![Vector3::new(0.0, 0.0, 1.0), Vector3::new(0.1, 0.0, 1.0)],
                vec![4, 4]
            )
            .is_err()
        );
        assert!(CameraIntrinsics::new(-1.0, 500.0, 320.0, 240.0, 640, 480).is_err());
        assert!(CameraIntrinsics::new(500.0, 500.0, 700.0, 240.0, 640, 480).is_err());
    }
}
