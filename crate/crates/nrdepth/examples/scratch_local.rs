// Scratch diagnostic: local contraction of the optimizer around ground truth.
use nrdepth::geometry::DepthField;
use nrdepth::io::tracks::read_bundle;
use nrdepth::priors::rigid_weights;
use nrdepth::solver::{loss_and_gradient, sample_edges, Adam, SolverConfig, WeightSource};
use rand::prelude::*;

fn main() {
    let noise: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(0.02);
    let bundle = read_bundle("/tmp/cal/r42").unwrap();
    let gt = bundle.gt_depths.as_ref().unwrap();
    let cfg = SolverConfig::default();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);

    // Init at ground truth (scaled to 0.4 to mimic solver scale) + noise.
    let mut fields: Vec<DepthField> = gt
        .iter()
        .map(|g| {
            let scaled: Vec<f64> = g.iter().map(|d| d * 0.4).collect();
            let mut f = DepthField::from_depths(&scaled, cfg.d_min, cfg.d_max).unwrap();
            for r in f.raw.iter_mut() {
                *r += rng.gen_range(-noise..noise);
            }
            f
        })
        .collect();
    let mut adams: Vec<Adam> = fields
        .iter()
        .map(|f| Adam::new(f.len(), 0.9, 0.999, 1e-8))
        .collect();

    let n_pairs = bundle.views.len() - 1;
    let epochs = 600;
    for epoch in 0..epochs {
        let lr = 0.3 * 0.1f64.powi((epoch / 200) as i32);
        let mut mean_data = 0.0;
        for p in 0..n_pairs {
            let sample = sample_edges(&bundle.views[p], &bundle.corrs[p], cfg.sample_size, 77).unwrap();
            let wa = rigid_weights(&sample.edges);
            let (b, g) = loss_and_gradient(
                &fields[p],
                &fields[p + 1],
                &bundle.views[p],
                &bundle.views[p + 1],
                &bundle.corrs[p],
                &WeightSource::Fixed(&wa),
                &cfg,
                false,
            )
            .unwrap();
            mean_data += b.data_term / n_pairs as f64;
            let (left, right) = fields.split_at_mut(p + 1);
            adams[p].step(&mut left[p].raw, &g.depth_k, lr);
            adams[p + 1].step(&mut right[0].raw, &g.depth_l, lr);
        }
        if epoch % 100 == 0 || epoch == epochs - 1 {
            // AbsRel of view 0 after median scaling
            let pred = fields[0].decode();
            let mut sp = pred.clone();
            sp.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mut sg = gt[0].clone();
            sg.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let s = sg[sg.len() / 2] / sp[sp.len() / 2];
            let abs_rel: f64 = pred
                .iter()
                .zip(&gt[0])
                .map(|(&p, &g)| (p * s - g).abs() / g)
                .sum::<f64>()
                / pred.len() as f64;
            println!("epoch {epoch:4}  data {mean_data:.3e}  abs_rel(view0) {abs_rel:.5}");
        }
    }
}
