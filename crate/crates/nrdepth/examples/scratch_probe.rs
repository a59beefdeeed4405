// Scratch diagnostic: loss along the line from a solved state to ground truth.
use nrdepth::geometry::DepthField;
use nrdepth::io::pfm::read_pfm;
use nrdepth::io::tracks::read_bundle;
use nrdepth::priors::rigid_weights;
use nrdepth::solver::{compute_loss, SolverConfig, WeightSource};

fn main() {
    let bundle = read_bundle("/tmp/cal/rigid").unwrap();
    let gt = bundle.gt_depths.as_ref().unwrap();
    let n = bundle.views[0].len();
    let cfg = SolverConfig::default();

    // Solved raws from the PFM outputs.
    let solved: Vec<DepthField> = (0..bundle.views.len())
        .map(|k| {
            let img = read_pfm(format!("/tmp/cal/s2/depth_view_{k:03}.pfm")).unwrap();
            let depths: Vec<f64> = img.data.iter().map(|&v| v as f64).collect();
            DepthField::from_depths(&depths, cfg.d_min, cfg.d_max).unwrap()
        })
        .collect();
    // Ground truth raws, scaled to the solved median so the line stays in range.
    let gt_fields: Vec<DepthField> = (0..bundle.views.len())
        .map(|k| {
            let med_s = median(&solved[k].decode());
            let med_g = median(&gt[k]);
            let min_g = gt[k].iter().cloned().fold(f64::INFINITY, f64::min);
            let mut s = med_s / med_g;
            if min_g * s < 0.12 {
                s = 0.12 / min_g;
            }
            let scaled: Vec<f64> = gt[k].iter().map(|d| d * s).collect();
            DepthField::from_depths(&scaled, cfg.d_min, cfg.d_max).unwrap()
        })
        .collect();

    let edges: Vec<(usize, usize)> = (0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j))).collect();
    let wa = rigid_weights(&edges);

    println!("t (0=solved, 1=gt-at-solved-scale)  total data term over pairs");
    for step in 0..=10 {
        let t = step as f64 / 10.0;
        let mut total = 0.0;
        for p in 0..bundle.views.len() - 1 {
            let mix = |k: usize| -> DepthField {
                let raw: Vec<f64> = solved[k]
                    .raw
                    .iter()
                    .zip(&gt_fields[k].raw)
                    .map(|(&a, &b)| a + t * (b - a))
                    .collect();
                DepthField::new(raw, cfg.d_min, cfg.d_max).unwrap()
            };
            let b = compute_loss(
                &mix(p),
                &mix(p + 1),
                &bundle.views[p],
                &bundle.views[p + 1],
                &bundle.corrs[p],
                &WeightSource::Fixed(&wa),
                &cfg,
            )
            .unwrap();
            total += b.data_term;
        }
        println!("t={t:.1}  {total:.6e}");
    }
}

fn median(v: &[f64]) -> f64 {
    let mut s = v.to_vec();
    s.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = s.len();
    if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) }
}
