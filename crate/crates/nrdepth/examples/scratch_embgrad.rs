// Scratch diagnostic: stage-1 gradient field statistics for the arap prior.
use nrdepth::embedding::EmbeddingField;
use nrdepth::geometry::DepthField;
use nrdepth::io::tracks::read_bundle;
use nrdepth::solver::{loss_and_gradient, sample_edges, Adam, SolverConfig, WeightSource};
use rand::prelude::*;

fn main() {
    let bundle = read_bundle("/tmp/cal/mb").unwrap();
    let labels = bundle.motion_labels.as_ref().unwrap();
    let mut cfg = SolverConfig::default();
    cfg.beta_reg = 0.0;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);

    let n_views = bundle.views.len();
    let mut depths: Vec<DepthField> = bundle
        .views
        .iter()
        .map(|v| DepthField::zeros(v.len(), cfg.d_min, cfg.d_max).unwrap())
        .collect();
    let mut embeds: Vec<EmbeddingField> = (0..n_views - 1)
        .map(|p| {
            let n = bundle.views[p].len();
            let raw: Vec<f64> = (0..n * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
            EmbeddingField::new(raw, 3, (p, p + 1)).unwrap()
        })
        .collect();
    let mut d_adams: Vec<Adam> = depths
        .iter()
        .map(|f| Adam::new(f.len(), 0.9, 0.999, cfg.adam_epsilon))
        .collect();
    let mut e_adams: Vec<Adam> = embeds
        .iter()
        .map(|f| Adam::new(f.raw.len(), 0.9, 0.999, cfg.adam_epsilon))
        .collect();

    let mut prev_decoded: Vec<f64> = embeds[1].decode();
    for epoch in 0..300 {
        let lr = 0.3 * 0.7f64.powi((epoch / 30) as i32);
        for p in 0..n_views - 1 {
            let sample =
                sample_edges(&bundle.views[p], &bundle.corrs[p], cfg.sample_size, 55 + epoch as u64).unwrap();
            let src = WeightSource::Embedded {
                field: &embeds[p],
                edges: &sample.edges,
                tau: None,
            };
            let (b, g) = loss_and_gradient(
                &depths[p],
                &depths[p + 1],
                &bundle.views[p],
                &bundle.views[p + 1],
                &bundle.corrs[p],
                &src,
                &cfg,
                true,
            )
            .unwrap();
            let ge = g.embedding.clone().unwrap();

            if p == 1 && epoch % 40 == 0 {
                let inf = |v: &[f64]| v.iter().fold(0.0f64, |a, &x| a.max(x.abs()));
                let rms = |v: &[f64]| {
                    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
                };
                // Per-edge dL/dw sign statistics by class.
                let mut cfg2 = cfg.clone(); cfg2.beta_reg = 0.0;
                cfg2.keep_residuals = true;
                let b2 = nrdepth::solver::compute_loss(
                    &depths[p],
                    &depths[p + 1],
                    &bundle.views[p],
                    &bundle.views[p + 1],
                    &bundle.corrs[p],
                    &src,
                    &cfg2,
                )
                .unwrap();
                let res = b2.residuals.as_ref().unwrap();
                let mean_r = b2.numerator / b2.weight_sum;
                let (mut hi_intra, mut hi_inter, mut n_intra, mut n_inter) = (0, 0, 0, 0);
                for (t, &(i, j)) in sample.edges.iter().enumerate() {
                    let above = res[t].abs() > mean_r;
                    if labels[i] == labels[j] {
                        n_intra += 1;
                        if above {
                            hi_intra += 1;
                        }
                    } else {
                        n_inter += 1;
                        if above {
                            hi_inter += 1;
                        }
                    }
                }
                println!(
                    "ep {epoch:3} pair1: data {:.2e} |g_d|rms {:.2e} |g_e|rms {:.2e} |g_e|max {:.2e} \
                     above-mean%: intra {:.0}% inter {:.0}%",
                    b.data_term,
                    rms(&g.depth_k),
                    rms(&ge),
                    inf(&ge),
                    100.0 * hi_intra as f64 / n_intra as f64,
                    100.0 * hi_inter as f64 / n_inter as f64,
                );
            }

            let (l, r) = depths.split_at_mut(p + 1);
            d_adams[p].step(&mut l[p].raw, &g.depth_k, lr);
            d_adams[p + 1].step(&mut r[0].raw, &g.depth_l, lr);
            e_adams[p].step(&mut embeds[p].raw, &ge, lr);
        }
        if epoch % 30 == 0 {
            let now = embeds[1].decode();
            let moved: f64 = now.iter().zip(&prev_decoded).map(|(a, b)| (a - b).abs()).sum::<f64>()
                / now.len() as f64;
            // cluster stats
            let f = &embeds[1];
            let mut spreads = Vec::new();
            for body in [0u32, 1u32] {
                let pts: Vec<Vec<f64>> = (0..f.n_points())
                    .filter(|&i| labels[i] == body).map(|i| f.vector(i)).collect();
                let dim = f.dim;
                let centroid: Vec<f64> = (0..dim)
                    .map(|c| pts.iter().map(|p| p[c]).sum::<f64>() / pts.len() as f64).collect();
                let spread = (pts.iter().map(|p| p.iter().zip(&centroid).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()).sum::<f64>() / pts.len() as f64).sqrt();
                spreads.push(spread);
            }
            println!("ep {epoch:3} lr {lr:.3}: mean|dm|/30ep {moved:.4}  spreads {:.3} {:.3}", spreads[0], spreads[1]);
            prev_decoded = now;
        }
    }

    let _ = &mut prev_decoded;
    // Final weight separation on pair 1.
    let p = 1;
    let sample = sample_edges(&bundle.views[p], &bundle.corrs[p], cfg.sample_size, 999).unwrap();
    let wa = nrdepth::embedding::weights_for_edges(&embeds[p], &sample.edges).unwrap();
    let (mut intra, mut inter) = (Vec::new(), Vec::new());
    for (&(i, j), &w) in wa.edges.iter().zip(&wa.weights) {
        if labels[i] == labels[j] {
            intra.push(w);
        } else {
            inter.push(w);
        }
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    println!(
        "final pair1 weights: intra {:.3} inter {:.3} ratio {:.2}",
        mean(&intra),
        mean(&inter),
        mean(&intra) / mean(&inter)
    );
}
