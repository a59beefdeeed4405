// Scratch calibration: two-body separation with a majority static body.
use nrdepth::solver::{run_two_stage, Prior, SolverConfig};
use nrdepth::synth::make_multibody_scene_with_sizes;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let bg: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(90);
    let fg: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(30);
    let v: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(3);
    let seed: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(7);

    let scene = make_multibody_scene_with_sizes(&[bg, fg], 5, Some((0, 1)), seed).unwrap();
    scene.audit().unwrap();
    let stage1: usize = std::env::var("S1").ok().and_then(|s| s.parse().ok()).unwrap_or(300);
    let every: usize = std::env::var("EVERY").ok().and_then(|s| s.parse().ok()).unwrap_or(30);
    let cfg = SolverConfig {
        stage1_epochs: stage1,
        stage2_epochs: 300,
        lr_decay_every: every,
        beta_reg: std::env::var("BETA").ok().and_then(|s| s.parse().ok()).unwrap_or(0.0),
        reg_sign: if std::env::var("PENALIZE").is_ok() { nrdepth::solver::RegSign::Penalize } else { nrdepth::solver::RegSign::Reward },
        stage1_tau_offset: std::env::var("S1TAU").is_ok(),
        embedding_dim: v,
        seed: 1,
        ..Default::default()
    };
    let result = run_two_stage(&scene.views, &scene.corrs, &cfg, Prior::Arap).unwrap();

    // Depth quality, view 0.
    let pred = result.depth_fields[0].decode();
    let gt = &scene.gt_depths[0];
    let med = |v: &[f64]| {
        let mut s = v.to_vec();
        s.sort_by(|a, b| a.partial_cmp(b).unwrap());
        s[s.len() / 2]
    };
    let s = med(gt) / med(&pred);
    let abs_rel: f64 = pred
        .iter()
        .zip(gt)
        .map(|(&p, &g)| (p * s - g).abs() / g)
        .sum::<f64>()
        / pred.len() as f64;

    // Weight separation pooled over pairs.
    let labels = &scene.motion_labels;
    let (mut intra, mut inter) = (Vec::new(), Vec::new());
    for wa in &result.final_weights {
        for (&(i, j), &w) in wa.edges.iter().zip(&wa.weights) {
            if labels[i] == labels[j] {
                intra.push(w);
            } else {
                inter.push(w);
            }
        }
    }
    let mean = |v: &Vec<f64>| v.iter().sum::<f64>() / v.len() as f64;
    let (mi, mt) = (mean(&intra), mean(&inter));
    let lo = intra.iter().chain(&inter).cloned().fold(f64::INFINITY, f64::min);
    let hi = intra.iter().chain(&inter).cloned().fold(0.0f64, f64::max);
    let mid = 0.5 * (lo + hi);
    let tp = intra.iter().filter(|&&w| w > mid).count();
    let fn_ = intra.len() - tp;
    let fp = inter.iter().filter(|&&w| w > mid).count();
    let iou = tp as f64 / (tp + fn_ + fp) as f64;
    println!(
        "bg={bg} fg={fg} v={v} seed={seed}: abs_rel(v0) {abs_rel:.4}  intra {mi:.3} inter {mt:.3} ratio {:.2}  IoU {iou:.3}",
        mi / mt
    );

    // Embedding geometry of pair 1 (a moving pair), per body.
    if let Some(fields) = &result.embedding_fields {
        let f = &fields[1];
        for body in [0u32, 1u32] {
            let pts: Vec<Vec<f64>> = (0..f.n_points())
                .filter(|&i| labels[i] == body)
                .map(|i| f.vector(i))
                .collect();
            let dim = f.dim;
            let centroid: Vec<f64> = (0..dim)
                .map(|c| pts.iter().map(|p| p[c]).sum::<f64>() / pts.len() as f64)
                .collect();
            let spread = (pts
                .iter()
                .map(|p| {
                    p.iter()
                        .zip(&centroid)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                })
                .sum::<f64>()
                / pts.len() as f64)
                .sqrt();
            println!(
                "  pair1 body {body}: centroid {:?} rms-spread {spread:.3}",
                centroid.iter().map(|c| (c * 1000.0).round() / 1000.0).collect::<Vec<_>>()
            );
        }
    }
}
