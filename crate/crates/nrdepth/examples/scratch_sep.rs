// Scratch diagnostic: intra- vs inter-body residual statistics at a solved
// state, plus embedding-gradient magnitudes.
use nrdepth::geometry::DepthField;
use nrdepth::io::pfm::read_pfm;
use nrdepth::io::tracks::read_bundle;
use nrdepth::priors::rigid_weights;
use nrdepth::solver::{compute_loss, SolverConfig, WeightSource};

fn main() {
    let bundle = read_bundle("/tmp/cal/mb").unwrap();
    let labels = bundle.motion_labels.as_ref().unwrap();
    let n = bundle.views[0].len();
    let mut cfg = SolverConfig::default();
    cfg.keep_residuals = true;

    let fields: Vec<DepthField> = (0..bundle.views.len())
        .map(|k| {
            let img = read_pfm(format!("/tmp/cal/mbs/depth_view_{k:03}.pfm")).unwrap();
            let d: Vec<f64> = img.data.iter().map(|&v| v as f64).collect();
            DepthField::from_depths(&d, cfg.d_min, cfg.d_max).unwrap()
        })
        .collect();

    let edges: Vec<(usize, usize)> =
        (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let wa = rigid_weights(&edges);

    for p in 0..bundle.views.len() - 1 {
        let b = compute_loss(
            &fields[p],
            &fields[p + 1],
            &bundle.views[p],
            &bundle.views[p + 1],
            &bundle.corrs[p],
            &WeightSource::Fixed(&wa),
            &cfg,
        )
        .unwrap();
        let res = b.residuals.as_ref().unwrap();
        let (mut intra, mut inter) = (Vec::new(), Vec::new());
        for (t, &(i, j)) in edges.iter().enumerate() {
            if labels[i] == labels[j] {
                intra.push(res[t].abs());
            } else {
                inter.push(res[t].abs());
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!(
            "pair {p}: mean|r| intra {:.3e}  inter {:.3e}  ratio {:.2}",
            mean(&intra),
            mean(&inter),
            mean(&inter) / mean(&intra)
        );
    }

    // Same statistics at ground-truth depths.
    println!("-- at ground truth --");
    let gt = bundle.gt_depths.as_ref().unwrap();
    let gt_fields: Vec<DepthField> = gt
        .iter()
        .map(|g| DepthField::from_depths(g, cfg.d_min, cfg.d_max).unwrap())
        .collect();
    for p in 0..bundle.views.len() - 1 {
        let b = compute_loss(
            &gt_fields[p],
            &gt_fields[p + 1],
            &bundle.views[p],
            &bundle.views[p + 1],
            &bundle.corrs[p],
            &WeightSource::Fixed(&wa),
            &cfg,
        )
        .unwrap();
        let res = b.residuals.as_ref().unwrap();
        let (mut intra, mut inter) = (Vec::new(), Vec::new());
        for (t, &(i, j)) in edges.iter().enumerate() {
            if labels[i] == labels[j] {
                intra.push(res[t].abs());
            } else {
                inter.push(res[t].abs());
            }
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        println!(
            "pair {p}: mean|r| intra {:.3e}  inter {:.3e}  ratio {:.2}",
            mean(&intra),
            mean(&inter),
            mean(&inter) / mean(&intra)
        );
    }
}
