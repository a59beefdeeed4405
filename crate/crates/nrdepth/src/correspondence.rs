//! Point correspondences between a pair of views.
//!
//! Correspondences are always input data here (tracked points or an external
//! optical-flow field), never estimated.

use crate::error::{Error, Result};
use crate::geometry::CameraIntrinsics;
use crate::io::flo::Flow;

/// Maps point indices of view `k` to point indices of view `l`; entries
/// without a valid correspondence are `None`.
#[derive(Debug, Clone)]
pub struct CorrespondenceMap {
    target: Vec<Option<usize>>,
}

impl CorrespondenceMap {
    pub fn new(target: Vec<Option<usize>>) -> Self {
        Self { target }
    }

    /// Every point maps to the point with the same index (complete tracks).
    pub fn identity(n: usize) -> Self {
        Self {
            target: (0..n).map(Some).collect(),
        }
    }

    /// Resolve correspondences by matching point ids between two views.
    pub fn from_point_ids(ids_k: &[u64], ids_l: &[u64]) -> Self {
        let lookup: std::collections::HashMap<u64, usize> = ids_l
            .iter()
            .enumerate()
            .map(|(idx, &id)| (id, idx))
            .collect();
        Self {
            target: ids_k.iter().map(|id| lookup.get(id).copied()).collect(),
        }
    }

    /// Dense correspondences from an optical-flow field: pixel `(x, y)` of
    /// view `k` maps to `(x + u, y + v)` in view `l`, rounded to the nearest
    /// pixel. Targets outside the image or carried by non-finite flow are
    /// invalid. Point index = row-major pixel index.
    pub fn from_flow(flow: &Flow, intrinsics: &CameraIntrinsics) -> Result<Self> {
        if flow.width != intrinsics.width as usize || flow.height != intrinsics.height as usize {
            return Err(Error::Dimension(format!(
                "flow {}x{} vs image {}x{}",
                flow.width, flow.height, intrinsics.width, intrinsics.height
            )));
        }
        let (w, h) = (flow.width, flow.height);
        let mut target = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let [u, v] = flow.uv[y * w + x];
                if !u.is_finite() || !v.is_finite() {
                    target.push(None);
                    continue;
                }
                let tx = (x as f64 + u as f64).round();
                let ty = (y as f64 + v as f64).round();
                if tx < 0.0 || ty < 0.0 || tx >= w as f64 || ty >= h as f64 {
                    target.push(None);
                } else {
                    target.push(Some(ty as usize * w + tx as usize));
                }
            }
        }
        Ok(Self { target })
    }

    pub fn len(&self) -> usize {
        self.target.len()
    }

    pub fn is_empty(&self) -> bool {
        self.target.is_empty()
    }

    /// Target index in view `l` for point `i` of view `k`, if valid.
    pub fn target_of(&self, i: usize) -> Option<usize> {
        self.target.get(i).copied().flatten()
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.target_of(i).is_some()
    }

    /// Indices of all points with a valid correspondence, in index order.
    pub fn valid_indices(&self) -> Vec<usize> {
        self.target
            .iter()
            .enumerate()
            .filter_map(|(i, t)| t.map(|_| i))
            .collect()
    }

    pub fn n_valid(&self) -> usize {
        self.target.iter().filter(|t| t.is_some()).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_maps_every_point() {
        let corr = CorrespondenceMap::identity(4);
        assert_eq!(corr.len(), 4);
        for i in 0..4 {
            assert_eq!(corr.target_of(i), Some(i));
        }
        assert_eq!(corr.valid_indices(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn point_id_matching() {
        let corr = CorrespondenceMap::from_point_ids(&[10, 11, 12], &[12, 10]);
        assert_eq!(corr.target_of(0), Some(1));
        assert_eq!(corr.target_of(1), None);
        assert_eq!(corr.target_of(2), Some(0));
        assert_eq!(corr.n_valid(), 2);
    }

    #[test]
    fn flow_correspondences_respect_bounds() {
        let intr = CameraIntrinsics::new(1.0, 1.0, 0.0, 0.0, 3, 2).unwrap();
        // 3x2 flow: shift everything one pixel right.
        let flow = Flow {
            width: 3,
            height: 2,
            uv: vec![[1.0, 0.0]; 6],
        };
        let corr = CorrespondenceMap::from_flow(&flow, &intr).unwrap();
        assert_eq!(corr.target_of(0), Some(1));
        assert_eq!(corr.target_of(1), Some(2));
        assert_eq!(corr.target_of(2), None); // off the right edge
        assert_eq!(corr.target_of(3), Some(4));
    }
}
