//! Rigidity weight structures for each reconstruction prior, and numerical
//! rank validation for low-rank shape bases.
//!
//! All priors are expressed as weights on pairwise distance-preservation
//! residuals: the rigid prior weighs every pair with 1, the isometric prior
//! keeps only 2D neighborhoods, scene-motion knowledge enters as per-edge
//! score overrides, and the low-rank prior constrains the ranks of
//! distance-matrix differences rather than individual weights.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

/// Where a weight assignment came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WeightKind {
    Rigid,
    Isometric,
    Arap,
    Override,
}

/// Per-edge rigidity weights in `[0, 1]` over a set of sampled point pairs.
#[derive(Debug, Clone)]
pub struct WeightAssignment {
    pub edges: Vec<(usize, usize)>,
    pub weights: Vec<f64>,
    pub source: WeightKind,
}

impl WeightAssignment {
    pub fn new(edges: Vec<(usize, usize)>, weights: Vec<f64>, source: WeightKind) -> Result<Self> {
        let wa = Self {
            edges,
            weights,
            source,
        };
        wa.validate()?;
        Ok(wa)
    }

    pub fn validate(&self) -> Result<()> {
        if self.edges.len() != self.weights.len() {
            return Err(Error::Dimension(format!(
                "{} edges vs {} weights",
                self.edges.len(),
                self.weights.len()
            )));
        }
        if let Some(&w) = self.weights.iter().find(|&&w| !(0.0..=1.0).contains(&w)) {
            return Err(Error::Domain(format!("weight {w} outside [0,1]")));
        }
        let mut seen = std::collections::HashSet::with_capacity(self.edges.len());
        for &(i, j) in &self.edges {
            let key = if i <= j { (i, j) } else { (j, i) };
            if !seen.insert(key) {
                return Err(Error::Domain(format!("duplicate unordered pair ({i},{j})")));
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn weight_sum(&self) -> f64 {
        self.weights.iter().sum()
    }
}

/// All-ones weights: the fully rigid configuration.
pub fn rigid_weights(edges: &[(usize, usize)]) -> WeightAssignment {
    WeightAssignment {
        edges: edges.to_vec(),
        weights: vec![1.0; edges.len()],
        source: WeightKind::Rigid,
    }
}

/// Binary neighborhood weights: 1 where the edge's 2D endpoints are within
/// radius `r` pixels of each other, 0 otherwise.
pub fn isometric_weights(
    points2d: &[(f64, f64)],
    r: f64,
    edges: &[(usize, usize)],
) -> Result<WeightAssignment> {
    if !(r > 0.0) {
        return Err(Error::Config(format!("neighborhood radius must be positive, got {r}")));
    }
    let n = points2d.len();
    let weights = edges
        .iter()
        .map(|&(i, j)| {
            if i >= n || j >= n {
                return Err(Error::Lookup(format!(
                    "edge ({i},{j}) out of range for {n} 2D points"
                )));
            }
            let dx = points2d[i].0 - points2d[j].0;
            let dy = points2d[i].1 - points2d[j].1;
            Ok(if (dx * dx + dy * dy).sqrt() <= r { 1.0 } else { 0.0 })
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(WeightAssignment {
        edges: edges.to_vec(),
        weights,
        source: WeightKind::Isometric,
    })
}

/// Replace the scores of selected edges; edges are matched as unordered
/// pairs and must exist in `base`.
pub fn apply_score_overrides(
    base: &WeightAssignment,
    overrides: &[((usize, usize), f64)],
) -> Result<WeightAssignment> {
    let mut index = std::collections::HashMap::with_capacity(base.edges.len());
    for (pos, &(i, j)) in base.edges.iter().enumerate() {
        let key = if i <= j { (i, j) } else { (j, i) };
        index.insert(key, pos);
    }
    let mut weights = base.weights.clone();
    for &((i, j), score) in overrides {
        if !(0.0..=1.0).contains(&score) {
            return Err(Error::Domain(format!("override score {score} outside [0,1]")));
        }
        let key = if i <= j { (i, j) } else { (j, i) };
        let pos = index
            .get(&key)
            .ok_or_else(|| Error::Lookup(format!("edge ({i},{j}) not present in base assignment")))?;
        weights[*pos] = score;
    }
    Ok(WeightAssignment {
        edges: base.edges.clone(),
        weights,
        source: WeightKind::Override,
    })
}

/// A family of 3D structures sharing one shape basis: view `k`'s points are
/// the columns of `projections[k] * basis`.
#[derive(Debug, Clone)]
pub struct LowRankStructure {
    /// `b x n` shape basis.
    pub basis: DMatrix<f64>,
    /// One `3 x b` projection per view.
    pub projections: Vec<DMatrix<f64>>,
}

impl LowRankStructure {
    pub fn new(basis: DMatrix<f64>, projections: Vec<DMatrix<f64>>) -> Result<Self> {
        let s = Self { basis, projections };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let b = self.basis.nrows();
        if b < 1 {
            return Err(Error::Config("basis count must be at least 1".into()));
        }
        for (k, m) in self.projections.iter().enumerate() {
            if m.nrows() != 3 || m.ncols() != b {
                return Err(Error::Dimension(format!(
                    "projection {k} is {}x{}, expected 3x{b}",
                    m.nrows(),
                    m.ncols()
                )));
            }
        }
        Ok(())
    }

    /// Basis count `b`.
    pub fn basis_count(&self) -> usize {
        self.basis.nrows()
    }

    /// Point count `n`.
    pub fn point_count(&self) -> usize {
        self.basis.ncols()
    }

    /// View count `m`.
    pub fn view_count(&self) -> usize {
        self.projections.len()
    }
}

/// Materialize every view's point cloud as `projections[k] * basis`.
pub fn build_low_rank_views(structure: &LowRankStructure) -> Result<Vec<PointCloud>> {
    structure.validate()?;
    let n = structure.point_count();
    Ok(structure
        .projections
        .iter()
        .map(|m| {
            let x = m * &structure.basis;
            PointCloud {
                coords: (0..n)
                    .map(|c| nalgebra::Vector3::new(x[(0, c)], x[(1, c)], x[(2, c)]))
                    .collect(),
                point_ids: (0..n as u64).collect(),
            }
        })
        .collect())
}

/// Outcome of validating the distance-matrix rank bounds on a low-rank
/// structure.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RankReport {
    /// Numerical rank of each pairwise difference, keyed by the view pair.
    pub per_pair_ranks: Vec<((usize, usize), usize)>,
    /// Numerical rank of all pairwise differences stacked vertically.
    pub stacked_rank: usize,
    /// `min(8, b + 2)`.
    pub per_pair_bound: usize,
    /// `(b + 1)(b + 2) / 2`.
    pub stacked_bound: usize,
    /// Relative singular-value threshold used for the numerical rank.
    pub tolerance: f64,
    pub all_within_bounds: bool,
    /// Set when all points of some view coincide; ranks are still reported.
    pub degenerate: bool,
}

/// Default relative singular-value threshold for numerical rank decisions.
pub const DEFAULT_RANK_TOLERANCE: f64 = 1e-8;

fn numerical_rank(m: &DMatrix<f64>, tolerance: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let max = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if max == 0.0 {
        return 0;
    }
    svd.singular_values
        .iter()
        .filter(|&&s| s > tolerance * max)
        .count()
}

/// Check the rank bounds of all pairwise distance-matrix differences and of
/// their vertical stack for a low-rank structure.
///
/// With `b` basis shapes, every pairwise difference must have rank at most
/// `min(8, b + 2)` and the stack at most `(b + 1)(b + 2) / 2`. Per-pair
/// decompositions run in parallel; the report order is fixed.
pub fn rank_check(structure: &LowRankStructure, tolerance: f64) -> Result<RankReport> {
    structure.validate()?;
    let m = structure.view_count();
    let n = structure.point_count();
    let b = structure.basis_count();
    if m < 2 {
        return Err(Error::Input(format!("need at least 2 views, got {m}")));
    }
    if n <= b + 3 {
        return Err(Error::Input(format!(
            "need more than b + 3 = {} points for nontrivial bounds, got {n}",
            b + 3
        )));
    }
    if !(tolerance > 0.0) {
        return Err(Error::Config(format!("rank tolerance must be positive, got {tolerance}")));
    }

    let clouds = build_low_rank_views(structure)?;
    let degenerate = clouds.iter().any(|c| {
        let first = c.coords[0];
        c.coords.iter().all(|p| (p - first).norm() < 1e-14)
    });
    let edms: Vec<DMatrix<f64>> = clouds
        .iter()
        .map(|c| crate::geometry::compute_edm_with_cap(c, usize::MAX).map(|e| e.into_matrix()))
        .collect::<Result<_>>()?;

    let pairs: Vec<(usize, usize)> = (0..m)
        .flat_map(|k| ((k + 1)..m).map(move |l| (k, l)))
        .collect();
    let diffs: Vec<DMatrix<f64>> = pairs.iter().map(|&(k, l)| &edms[k] - &edms[l]).collect();

    let per_pair_ranks: Vec<((usize, usize), usize)> = pairs
        .par_iter()
        .zip(diffs.par_iter())
        .map(|(&pair, diff)| (pair, numerical_rank(diff, tolerance)))
        .collect();

    let mut stacked = DMatrix::<f64>::zeros(pairs.len() * n, n);
    for (idx, diff) in diffs.iter().enumerate() {
        stacked.view_mut((idx * n, 0), (n, n)).copy_from(diff);
    }
    let stacked_rank = numerical_rank(&stacked, tolerance);

    let per_pair_bound = 8.min(b + 2);
    let stacked_bound = (b + 1) * (b + 2) / 2;
    let all_within_bounds = per_pair_ranks.iter().all(|&(_, r)| r <= per_pair_bound)
        && stacked_rank <= stacked_bound;

    Ok(RankReport {
        per_pair_ranks,
        stacked_rank,
        per_pair_bound,
        stacked_bound,
        tolerance,
        all_within_bounds,
        degenerate,
    })
}

/// Random low-rank structure with standard-normal entries; generic position
/// with probability 1.
pub fn random_low_rank_structure(
    b: usize,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<LowRankStructure> {
    use rand::prelude::*;
    use rand_distr::StandardNormal;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let basis = DMatrix::from_fn(b, n, |_, _| rng.sample::<f64, _>(StandardNormal));
    let projections = (0..m)
        .map(|_| DMatrix::from_fn(3, b, |_, _| rng.sample::<f64, _>(StandardNormal)))
        .collect();
    LowRankStructure::new(basis, projections)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rigid_weights_are_all_ones() {
        let edges = vec![(0, 1), (1, 2), (0, 2)];
        let wa = rigid_weights(&edges);
        assert_eq!(wa.weights, vec![1.0, 1.0, 1.0]);
        assert_eq!(wa.source, WeightKind::Rigid);

        let empty = rigid_weights(&[]);
        assert!(empty.is_empty());
    }

    #[test]
    fn rigid_weights_large_sample() {
        let edges: Vec<(usize, usize)> = (0..100_000).map(|t| (t, t + 100_000)).collect();
        let wa = rigid_weights(&edges);
        assert_eq!(wa.len(), 100_000);
        assert!(wa.weights.iter().all(|&w| w == 1.0));
    }

    #[test]
    fn isometric_weights_radius_boundary() {
        let points = vec![(0.0, 0.0), (3.0, 4.0)];
        let edges = vec![(0, 1)];
        let on = isometric_weights(&points, 5.0, &edges).unwrap();
        assert_eq!(on.weights, vec![1.0]);
        let off = isometric_weights(&points, 4.9, &edges).unwrap();
        assert_eq!(off.weights, vec![0.0]);
        assert!(isometric_weights(&points, 0.0, &edges).is_err());
    }

    #[test]
    fn isometric_weights_match_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let points: Vec<(f64, f64)> = (0..50)
            .map(|_| (rng.gen_range(0.0..100.0), rng.gen_range(0.0..100.0)))
            .collect();
        let edges: Vec<(usize, usize)> = (0..50)
            .flat_map(|i| ((i + 1)..50).map(move |j| (i, j)))
            .collect();
        let wa = isometric_weights(&points, 10.0, &edges).unwrap();
        for (&(i, j), &w) in wa.edges.iter().zip(&wa.weights) {
            let d = ((points[i].0 - points[j].0).powi(2) + (points[i].1 - points[j].1).powi(2))
                .sqrt();
            let expected = if d <= 10.0 { 1.0 } else { 0.0 };
            assert_eq!(w, expected, "edge ({i},{j}) distance {d}");
        }
    }

    #[test]
    fn isometric_weights_symmetric_in_edge_order() {
        let points = vec![(0.0, 0.0), (1.0, 1.0), (9.0, 9.0)];
        let fwd = isometric_weights(&points, 2.0, &[(0, 1), (1, 2)]).unwrap();
        let rev = isometric_weights(&points, 2.0, &[(1, 0), (2, 1)]).unwrap();
        assert_eq!(fwd.weights, rev.weights);
    }

    #[test]
    fn overrides_change_only_listed_edges() {
        let edges = vec![(0, 1), (1, 2), (2, 3)];
        let base = rigid_weights(&edges);
        let out = apply_score_overrides(&base, &[((0, 1), 0.2)]).unwrap();
        assert_eq!(out.weights, vec![0.2, 1.0, 1.0]);
        assert_eq!(out.source, WeightKind::Override);

        // Unordered matching: (1, 0) hits the same edge.
        let swapped = apply_score_overrides(&base, &[((1, 0), 0.3)]).unwrap();
        assert_eq!(swapped.weights, vec![0.3, 1.0, 1.0]);
    }

    #[test]
    fn empty_overrides_are_identity() {
        let edges = vec![(0, 1), (1, 2)];
        let base = rigid_weights(&edges);
        let out = apply_score_overrides(&base, &[]).unwrap();
        assert_eq!(out.weights, base.weights);
        assert_eq!(out.edges, base.edges);
    }

    #[test]
    fn overrides_error_paths() {
        let base = rigid_weights(&[(0, 1)]);
        assert!(matches!(
            apply_score_overrides(&base, &[((5, 6), 0.5)]),
            Err(Error::Lookup(_))
        ));
        assert!(matches!(
            apply_score_overrides(&base, &[((0, 1), 1.5)]),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn overrides_diff_count_matches() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let edges: Vec<(usize, usize)> = (0..100).map(|t| (t, t + 100)).collect();
        let base = rigid_weights(&edges);
        let mut chosen: Vec<usize> = (0..100).collect();
        chosen.shuffle(&mut rng);
        let overrides: Vec<((usize, usize), f64)> = chosen[..10]
            .iter()
            .map(|&pos| (edges[pos], rng.gen_range(0.0..0.99)))
            .collect();
        let out = apply_score_overrides(&base, &overrides).unwrap();
        let changed = out
            .weights
            .iter()
            .zip(&base.weights)
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(changed, 10);
    }

    #[test]
    fn low_rank_views_basic_cases() {
        // b = 1, basis = row of ones, projection = (0, 0, 1)^T.
        let structure = LowRankStructure::new(
            DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 1.0]),
            vec![DMatrix::from_row_slice(3, 1, &[0.0, 0.0, 1.0])],
        )
        .unwrap();
        let clouds = build_low_rank_views(&structure).unwrap();
        for p in &clouds[0].coords {
            assert_eq!(*p, nalgebra::Vector3::new(0.0, 0.0, 1.0));
        }

        let zero = LowRankStructure::new(
            DMatrix::from_row_slice(1, 3, &[1.0, 2.0, 3.0]),
            vec![DMatrix::zeros(3, 1)],
        )
        .unwrap();
        let clouds = build_low_rank_views(&zero).unwrap();
        assert!(clouds[0].coords.iter().all(|p| p.norm() == 0.0));
    }

    #[test]
    fn low_rank_views_match_triple_loop() {
        let structure = random_low_rank_structure(2, 10, 4, 99).unwrap();
        let clouds = build_low_rank_views(&structure).unwrap();
        for (k, cloud) in clouds.iter().enumerate() {
            for i in 0..10 {
                for row in 0..3 {
                    let mut acc = 0.0;
                    for c in 0..2 {
                        acc += structure.projections[k][(row, c)] * structure.basis[(c, i)];
                    }
                    assert!((cloud.coords[i][row] - acc).abs() <= 1e-12 * acc.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn rank_check_respects_bounds_b1() {
        let structure = random_low_rank_structure(1, 10, 3, 7).unwrap();
        let report = rank_check(&structure, DEFAULT_RANK_TOLERANCE).unwrap();
        assert_eq!(report.per_pair_bound, 3);
        assert_eq!(report.stacked_bound, 3);
        for &(_, r) in &report.per_pair_ranks {
            assert!(r <= 3);
        }
        assert!(report.stacked_rank <= 3);
        assert!(report.all_within_bounds);
    }

    #[test]
    fn rank_check_identical_projections_give_rank_zero() {
        let mut structure = random_low_rank_structure(2, 12, 2, 21).unwrap();
        structure.projections[1] = structure.projections[0].clone();
        let report = rank_check(&structure, DEFAULT_RANK_TOLERANCE).unwrap();
        assert_eq!(report.per_pair_ranks[0].1, 0);
        assert_eq!(report.stacked_rank, 0);
    }

    #[test]
    fn rank_check_monte_carlo_b2() {
        for seed in 0..100 {
            let structure = random_low_rank_structure(2, 15, 5, seed).unwrap();
            let report = rank_check(&structure, DEFAULT_RANK_TOLERANCE).unwrap();
            for &(pair, r) in &report.per_pair_ranks {
                assert!(r <= 4, "seed {seed} pair {pair:?} rank {r}");
            }
            assert!(report.stacked_rank <= 6, "seed {seed} stacked {}", report.stacked_rank);
        }
    }

    #[test]
    fn rank_check_saturates_at_eight() {
        // b large: the per-pair bound stays at 8.
        let structure = random_low_rank_structure(7, 24, 3, 3).unwrap();
        let report = rank_check(&structure, DEFAULT_RANK_TOLERANCE).unwrap();
        assert_eq!(report.per_pair_bound, 8);
        for &(_, r) in &report.per_pair_ranks {
            assert!(r <= 8);
        }
    }

    #[test]
    fn rank_check_flags_degenerate_structure() {
        // All points coincide: basis columns identical.
        let basis = DMatrix::from_fn(1, 8, |_, _| 1.0);
        let projections = vec![
            DMatrix::from_row_slice(3, 1, &[0.1, 0.2, 0.3]),
            DMatrix::from_row_slice(3, 1, &[0.4, 0.5, 0.6]),
        ];
        let structure = LowRankStructure::new(basis, projections).unwrap();
        let report = rank_check(&structure, DEFAULT_RANK_TOLERANCE).unwrap();
        assert!(report.degenerate);
        // Ranks are still reported (coincident points -> zero distance
        // matrices -> rank 0).
        assert_eq!(report.stacked_rank, 0);
    }

    #[test]
    fn rank_check_input_validation() {
        let structure = random_low_rank_structure(2, 15, 1, 0).unwrap();
        assert!(rank_check(&structure, DEFAULT_RANK_TOLERANCE).is_err());
        let too_few = random_low_rank_structure(2, 5, 3, 0).unwrap();
        assert!(rank_check(&too_few, DEFAULT_RANK_TOLERANCE).is_err());
    }

    #[test]
    fn rigid_weights_are_override_fixed_point() {
        let edges = vec![(0, 1), (2, 3), (4, 5)];
        let base = rigid_weights(&edges);
        let out = apply_score_overrides(&base, &[]).unwrap();
        assert_eq!(out.weights, base.weights);
    }
}
