//! Sparse point-track CSV files and the on-disk scene bundle.
//!
//! A scene bundle is a directory holding `tracks.csv` with the schema
//! `view_id,point_id,px,py,gt_depth,body_id` (the last two columns optional)
//! plus `meta.json` with intrinsics and scene-level metadata.

use std::path::Path;

use crate::correspondence::CorrespondenceMap;
use crate::error::{Error, Result};
use crate::geometry::{CameraIntrinsics, ViewObservation};
use crate::synth::{Scenario, SyntheticScene};

/// Scene-level metadata stored as `meta.json`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneMeta {
    pub scenario: Scenario,
    pub intrinsics: CameraIntrinsics,
    pub n_views: usize,
    pub n_points: usize,
    pub d_min: f64,
    pub d_max: f64,
    #[serde(default)]
    pub rigid_instant_pairs: Vec<(usize, usize)>,
}

/// A scene loaded from disk. Ground truth and labels are present only when
/// the tracks carried them; correspondences are rebuilt by matching point
/// ids across consecutive views.
#[derive(Debug, Clone)]
pub struct SceneBundle {
    pub views: Vec<ViewObservation>,
    pub gt_depths: Option<Vec<Vec<f64>>>,
    pub motion_labels: Option<Vec<u32>>,
    pub corrs: Vec<CorrespondenceMap>,
    pub meta: SceneMeta,
}

/// Serialize a synthetic scene into `dir/tracks.csv` + `dir/meta.json`.
pub fn write_bundle(dir: impl AsRef<Path>, scene: &SyntheticScene) -> Result<()> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;

    let mut csv = String::from("view_id,point_id,px,py,gt_depth,body_id\n");
    for (k, view) in scene.views.iter().enumerate() {
        let pixels = view.pixels();
        for (i, &id) in view.point_ids.iter().enumerate() {
            csv.push_str(&format!(
                "{k},{id},{},{},{},{}\n",
                pixels[i].0, pixels[i].1, scene.gt_depths[k][i], scene.motion_labels[i]
            ));
        }
    }
    super::write_atomic(&dir.join("tracks.csv"), csv.as_bytes())?;

    let meta = SceneMeta {
        scenario: scene.scenario,
        intrinsics: scene.views[0].intrinsics,
        n_views: scene.n_views(),
        n_points: scene.n_points(),
        d_min: scene.d_min,
        d_max: scene.d_max,
        rigid_instant_pairs: scene.rigid_instant_pairs.clone(),
    };
    super::write_atomic(
        &dir.join("meta.json"),
        serde_json::to_string_pretty(&meta)?.as_bytes(),
    )?;
    Ok(())
}

struct TrackRow {
    view_id: usize,
    point_id: u64,
    px: f64,
    py: f64,
    gt_depth: Option<f64>,
    body_id: Option<u32>,
}

fn parse_row(line: &str, lineno: usize, path: &Path) -> Result<TrackRow> {
    let err = |message: String| Error::Format {
        path: path.to_path_buf(),
        offset: lineno as u64,
        message,
    };
    let fields: Vec<&str> = line.split(',').map(str::trim).collect();
    if fields.len() < 4 || fields.len() > 6 {
        return Err(err(format!(
            "line {lineno}: expected 4 to 6 columns, got {}",
            fields.len()
        )));
    }
    fn parse_opt(s: &str) -> Option<&str> {
        if s.is_empty() {
            None
        } else {
            Some(s)
        }
    }
    Ok(TrackRow {
        view_id: fields[0]
            .parse()
            .map_err(|e| err(format!("line {lineno}: bad view_id: {e}")))?,
        point_id: fields[1]
            .parse()
            .map_err(|e| err(format!("line {lineno}: bad point_id: {e}")))?,
        px: fields[2]
            .parse()
            .map_err(|e| err(format!("line {lineno}: bad px: {e}")))?,
        py: fields[3]
            .parse()
            .map_err(|e| err(format!("line {lineno}: bad py: {e}")))?,
        gt_depth: fields
            .get(4)
            .copied()
            .and_then(parse_opt)
            .map(|s| s.parse().map_err(|e| err(format!("line {lineno}: bad gt_depth: {e}"))))
            .transpose()?,
        body_id: fields
            .get(5)
            .copied()
            .and_then(parse_opt)
            .map(|s| s.parse().map_err(|e| err(format!("line {lineno}: bad body_id: {e}"))))
            .transpose()?,
    })
}

/// Load a scene bundle directory.
pub fn read_bundle(dir: impl AsRef<Path>) -> Result<SceneBundle> {
    let dir = dir.as_ref();
    let meta: SceneMeta = serde_json::from_str(&std::fs::read_to_string(dir.join("meta.json"))?)?;
    meta.intrinsics.validate()?;

    let csv_path = dir.join("tracks.csv");
    let text = std::fs::read_to_string(&csv_path)?;
    let mut rows: Vec<TrackRow> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 && line.starts_with("view_id") {
            continue; // header
        }
        if line.trim().is_empty() {
            continue;
        }
        rows.push(parse_row(line, lineno + 1, &csv_path)?);
    }
    if rows.is_empty() {
        return Err(Error::Input(format!("{csv_path:?} holds no track rows")));
    }

    let n_views = rows.iter().map(|r| r.view_id).max().unwrap() + 1;
    if n_views != meta.n_views {
        return Err(Error::Input(format!(
            "tracks cover {n_views} views but meta declares {}",
            meta.n_views
        )));
    }

    let mut per_view: Vec<Vec<&TrackRow>> = vec![Vec::new(); n_views];
    for row in &rows {
        per_view[row.view_id].push(row);
    }

    let mut views = Vec::with_capacity(n_views);
    let mut gt_depths: Vec<Vec<f64>> = Vec::with_capacity(n_views);
    let mut have_gt = true;
    for (k, view_rows) in per_view.iter().enumerate() {
        if view_rows.is_empty() {
            return Err(Error::Input(format!("view {k} has no tracked points")));
        }
        let mut sorted: Vec<&&TrackRow> = view_rows.iter().collect();
        sorted.sort_by_key(|r| r.point_id);
        let pixels: Vec<(f64, f64)> = sorted.iter().map(|r| (r.px, r.py)).collect();
        let ids: Vec<u64> = sorted.iter().map(|r| r.point_id).collect();
        views.push(ViewObservation::from_pixels(meta.intrinsics, &pixels, ids)?);
        let depths: Vec<Option<f64>> = sorted.iter().map(|r| r.gt_depth).collect();
        if depths.iter().any(|d| d.is_none()) {
            have_gt = false;
        }
        gt_depths.push(depths.into_iter().flatten().collect());
    }

    // Motion labels keyed by point id, from the first view that lists them.
    let motion_labels = {
        let first = &per_view[0];
        let mut sorted: Vec<&&TrackRow> = first.iter().collect();
        sorted.sort_by_key(|r| r.point_id);
        let labels: Vec<Option<u32>> = sorted.iter().map(|r| r.body_id).collect();
        if labels.iter().all(|l| l.is_some()) {
            Some(labels.into_iter().flatten().collect())
        } else {
            None
        }
    };

    let corrs = (0..n_views - 1)
        .map(|k| CorrespondenceMap::from_point_ids(&views[k].point_ids, &views[k + 1].point_ids))
        .collect();

    Ok(SceneBundle {
        views,
        gt_depths: have_gt.then_some(gt_depths),
        motion_labels,
        corrs,
        meta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::default_intrinsics;
    use crate::synth::make_rigid_scene;

    #[test]
    fn bundle_roundtrip_preserves_scene() {
        let scene = make_rigid_scene(12, 3, default_intrinsics(), 21).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_bundle(dir.path(), &scene).unwrap();
        let bundle = read_bundle(dir.path()).unwrap();
        assert_eq!(bundle.views.len(), 3);
        assert_eq!(bundle.meta.n_points, 12);
        let gt = bundle.gt_depths.unwrap();
        for k in 0..3 {
            for i in 0..12 {
                assert!((gt[k][i] - scene.gt_depths[k][i]).abs() <= 1e-12 * scene.gt_depths[k][i]);
                assert!((bundle.views[k].rays[i] - scene.views[k].rays[i]).norm() < 1e-12);
            }
        }
        assert_eq!(bundle.motion_labels.unwrap(), scene.motion_labels);
        for corr in &bundle.corrs {
            for i in 0..12 {
                assert_eq!(corr.target_of(i), Some(i));
            }
        }
    }

    #[test]
    fn rows_without_gt_load_as_unlabeled() {
        let dir = tempfile::tempdir().unwrap();
        let meta = SceneMeta {
            scenario: Scenario::Rigid,
            intrinsics: default_intrinsics(),
            n_views: 2,
            n_points: 2,
            d_min: 0.1,
            d_max: 10.0,
            rigid_instant_pairs: vec![],
        };
        std::fs::write(
            dir.path().join("meta.json"),
            serde_json::to_string(&meta).unwrap(),
        )
        .unwrap();
        std::fs::write(
            dir.path().join("tracks.csv"),
            "view_id,point_id,px,py\n0,0,10,10\n0,1,20,20\n1,0,11,11\n1,1,21,21\n",
        )
        .unwrap();
        let bundle = read_bundle(dir.path()).unwrap();
        assert!(bundle.gt_depths.is_none());
        assert!(bundle.motion_labels.is_none());
        assert_eq!(bundle.views[0].len(), 2);
    }

    #[test]
    fn malformed_rows_are_format_errors() {
        let dir = tempfile::tempdir().unwrap();
        let meta = SceneMeta {
            scenario: Scenario::Rigid,
            intrinsics: default_intrinsics(),
            n_views: 1,
            n_points: 1,
            d_min: 0.1,
            d_max: 10.0,
            rigid_instant_pairs: vec![],
        };
        std::fs::write(
            dir.path().join("meta.json"),
            serde_json::to_string(&meta).unwrap(),
        )
        .unwrap();
        std::fs::write(dir.path().join("tracks.csv"), "0,0,ten,10\n").unwrap();
        assert!(matches!(
            read_bundle(dir.path()),
            Err(Error::Format { .. })
        ));
    }
}
