//! Subcommand driver behind the `nrdepth` binary.
//!
//! Six subcommands: `synth` writes a scene bundle, `solve` runs the
//! two-stage optimization, `eval` scores predicted depths, `segment`
//! produces motion masks from saved embeddings, `rankcheck` validates the
//! low-rank rank bounds, and `gradcheck` runs the finite-difference suite.
//! Every subcommand accepts `--config <json>` plus overriding flags; errors
//! exit with a category-specific status code.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::{PriorName, RunConfig};
use crate::embedding::{
    segment_motion, static_embedding, static_embedding_sequence, EmbeddingField, PixelLayout,
};
use crate::error::{Error, Result};
use crate::eval::{depth_metrics, median_scale, seg_metrics, DepthMetrics};
use crate::geometry::default_intrinsics;
use crate::io::pfm::{read_pfm, write_pfm, FloatImage};
use crate::io::pgm::{rasterize_labels, write_pgm};
use crate::io::tracks::{read_bundle, write_bundle, SceneBundle};
use crate::io::write_atomic;
use crate::priors::rank_check;
use crate::solver::{gradient_check, run_two_stage, Prior, RegSign, SolveResult};
use crate::synth::{
    make_isometric_scene, make_multibody_scene, make_rigid_scene, make_lowrank_scene, GridSize,
    Scenario,
};

#[derive(Parser)]
#[command(
    name = "nrdepth",
    version,
    about = "Non-rigid monocular depth from dense correspondences via distance-matrix optimization"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic scene bundle (tracks.csv + meta.json).
    Synth(SynthArgs),
    /// Recover per-view depths (and embeddings) from a scene bundle.
    Solve(SolveArgs),
    /// Score predicted depths against a bundle's ground truth.
    Eval(EvalArgs),
    /// Produce motion segmentation masks from saved embeddings.
    Segment(SegmentArgs),
    /// Validate the distance-matrix rank bounds on a random low-rank scene.
    Rankcheck(RankcheckArgs),
    /// Compare analytic gradients against central finite differences.
    Gradcheck(GradcheckArgs),
}

/// Flags shared by the data-processing subcommands; every flag overrides the
/// corresponding config-file field.
#[derive(Args, Debug, Default)]
struct CommonArgs {
    /// JSON configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Prior: rigid, isometric or arap.
    #[arg(long)]
    prior: Option<String>,
    /// Stage-2 weight offset.
    #[arg(long)]
    tau: Option<f64>,
    /// Weight-norm regularization coefficient.
    #[arg(long)]
    beta: Option<f64>,
    /// Regularization sign: +1 penalizes, -1 rewards weight mass.
    #[arg(long, allow_hyphen_values = true)]
    reg_sign: Option<String>,
    /// Edges sampled per pair and epoch.
    #[arg(long)]
    sample_size: Option<usize>,
    /// Segmentation distance threshold.
    #[arg(long)]
    threshold: Option<f64>,
    /// Exclude ground truth at or beyond this depth from evaluation.
    #[arg(long)]
    depth_cap: Option<f64>,
    /// Fixed iteration order (the solver is deterministic regardless).
    #[arg(long)]
    deterministic: bool,
}

impl CommonArgs {
    fn load(&self) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::from_json_file(path)?,
            None => RunConfig::default(),
        };
        if let Some(seed) = self.seed {
            cfg.solver.seed = seed;
        }
        if let Some(out) = &self.out {
            cfg.out_dir = Some(out.clone());
        }
        if let Some(prior) = &self.prior {
            cfg.prior = prior.parse()?;
        }
        if let Some(tau) = self.tau {
            cfg.solver.tau = tau;
        }
        if let Some(beta) = self.beta {
            cfg.solver.beta_reg = beta;
        }
        if let Some(sign) = &self.reg_sign {
            cfg.solver.reg_sign = match sign.as_str() {
                "+1" | "1" => RegSign::Penalize,
                "-1" => RegSign::Reward,
                other => {
                    return Err(Error::Config(format!(
                        "reg-sign must be +1 or -1, got {other:?}"
                    )))
                }
            };
        }
        if let Some(n) = self.sample_size {
            cfg.solver.sample_size = n;
        }
        if let Some(t) = self.threshold {
            cfg.segmentation_threshold = t;
        }
        if let Some(c) = self.depth_cap {
            cfg.depth_cap = Some(c);
        }
        if self.deterministic {
            cfg.solver.deterministic = true;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// rigid, multibody or isometric.
    #[arg(long)]
    scenario: Option<String>,
    #[arg(long)]
    n_points: Option<usize>,
    #[arg(long)]
    n_views: Option<usize>,
    #[arg(long)]
    bodies: Option<usize>,
    #[arg(long)]
    points_per_body: Option<usize>,
    #[arg(long)]
    rows: Option<usize>,
    #[arg(long)]
    cols: Option<usize>,
    #[arg(long)]
    bend_amplitude: Option<f64>,
    /// Gaussian pixel noise added to the exact tracks.
    #[arg(long)]
    noise_sigma: Option<f64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Scene bundle directory (tracks.csv + meta.json).
    #[arg(long)]
    scene: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Directory holding solve outputs (depth_view_*.pfm).
    #[arg(long)]
    pred: PathBuf,
}

#[derive(Args, Debug)]
struct SegmentArgs {
    #[command(flatten)]
    common: CommonArgs,
    #[arg(long)]
    scene: Option<PathBuf>,
    /// Directory holding solve outputs (embeddings_pair_*.csv).
    #[arg(long)]
    pred: PathBuf,
    /// Border band width in pixels for the static embedding.
    #[arg(long)]
    border_width: Option<f64>,
    /// Compute the static embedding per pair instead of sequence-wide.
    #[arg(long)]
    per_pair_static: bool,
}

#[derive(Args, Debug)]
struct RankcheckArgs {
    /// Shape basis count.
    #[arg(long, default_value_t = 1)]
    b: usize,
    #[arg(long, default_value_t = 3)]
    views: usize,
    #[arg(long, default_value_t = 10)]
    points: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative singular-value threshold.
    #[arg(long, default_value_t = crate::priors::DEFAULT_RANK_TOLERANCE)]
    tolerance: f64,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct GradcheckArgs {
    /// Number of random configurations.
    #[arg(long, default_value_t = 200)]
    configs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Write the JSON report here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

/// Parse `argv` (including the program name) and run the subcommand.
/// Returns the process exit status: 0 on success, 2 on usage errors, and a
/// category-specific code for runtime errors.
pub fn run_subcommand<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return 2;
        }
    };
    crate::init_thread_pool();
    let result = match cli.command {
        Command::Synth(args) => cmd_synth(args),
        Command::Solve(args) => cmd_solve(args),
        Command::Eval(args) => cmd_eval(args),
        Command::Segment(args) => cmd_segment(args),
        Command::Rankcheck(args) => cmd_rankcheck(args),
        Command::Gradcheck(args) => cmd_gradcheck(args),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

fn require_out(cfg: &RunConfig) -> Result<PathBuf> {
    cfg.out_dir
        .clone()
        .ok_or_else(|| Error::Config("an output directory is required (--out)".into()))
}

fn require_scene(flag: &Option<PathBuf>, cfg: &RunConfig) -> Result<PathBuf> {
    let dir = flag
        .clone()
        .or_else(|| cfg.scene_dir.clone())
        .ok_or_else(|| Error::Config("a scene directory is required (--scene)".into()))?;
    if !dir.join("meta.json").is_file() {
        return Err(Error::Input(format!("{dir:?} is not a scene bundle (no meta.json)")));
    }
    Ok(dir)
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let mut cfg = args.common.load()?;
    if let Some(s) = &args.scenario {
        cfg.synth.scenario = match s.as_str() {
            "rigid" => Scenario::Rigid,
            "multibody" => Scenario::Multibody,
            "isometric" => Scenario::Isometric,
            other => {
                return Err(Error::Config(format!(
                    "unknown scenario {other:?}; expected rigid, multibody or isometric"
                )))
            }
        };
    }
    macro_rules! take {
        ($flag:expr, $field:expr) => {
            if let Some(v) = $flag {
                $field = v;
            }
        };
    }
    take!(args.n_points, cfg.synth.n_points);
    take!(args.n_views, cfg.synth.n_views);
    take!(args.bodies, cfg.synth.bodies);
    take!(args.points_per_body, cfg.synth.points_per_body);
    take!(args.rows, cfg.synth.rows);
    take!(args.cols, cfg.synth.cols);
    take!(args.bend_amplitude, cfg.synth.bend_amplitude);
    take!(args.noise_sigma, cfg.synth.noise_sigma);
    cfg.validate()?;
    let out = require_out(&cfg)?;

    let seed = cfg.solver.seed;
    let mut scene = match cfg.synth.scenario {
        Scenario::Rigid => {
            make_rigid_scene(cfg.synth.n_points, cfg.synth.n_views, default_intrinsics(), seed)?
        }
        Scenario::Multibody => make_multibody_scene(
            cfg.synth.bodies,
            cfg.synth.points_per_body,
            cfg.synth.n_views,
            cfg.synth.rigid_instant,
            seed,
        )?,
        Scenario::Isometric => make_isometric_scene(
            GridSize {
                rows: cfg.synth.rows,
                cols: cfg.synth.cols,
            },
            cfg.synth.n_views,
            cfg.synth.bend_amplitude,
            seed,
        )?,
        Scenario::Lowrank => {
            return Err(Error::Config(
                "low-rank structures are exercised by the rankcheck subcommand".into(),
            ))
        }
    };
    if cfg.synth.noise_sigma > 0.0 {
        scene.add_pixel_noise(cfg.synth.noise_sigma, seed ^ 0x6e6f6973)?;
    } else {
        scene.audit()?;
    }
    write_bundle(&out, &scene)?;
    println!(
        "wrote {:?}: {} views, {} points ({:?})",
        out,
        scene.n_views(),
        scene.n_points(),
        scene.scenario
    );
    Ok(())
}

fn solve_prior(cfg: &RunConfig) -> Prior {
    match cfg.prior {
        PriorName::Rigid => Prior::Rigid,
        PriorName::Isometric => Prior::Isometric {
            radius_px: cfg.isometric_radius_px,
        },
        PriorName::Arap => Prior::Arap,
    }
}

/// Write every solve artifact into `out`.
fn write_solve_outputs(out: &Path, cfg: &RunConfig, result: &SolveResult) -> Result<()> {
    for (k, field) in result.depth_fields.iter().enumerate() {
        let depths: Vec<f32> = field.decode().iter().map(|&d| d as f32).collect();
        let image = FloatImage::new(depths.len(), 1, depths)?;
        write_pfm(out.join(format!("depth_view_{k:03}.pfm")), &image)?;
    }
    for (p, wa) in result.final_weights.iter().enumerate() {
        let mut csv = String::from("i,j,weight\n");
        for (&(i, j), w) in wa.edges.iter().zip(&wa.weights) {
            csv.push_str(&format!("{i},{j},{w}\n"));
        }
        write_atomic(&out.join(format!("weights_pair_{p:03}.csv")), csv.as_bytes())?;
    }
    if let Some(fields) = &result.embedding_fields {
        for (p, field) in fields.iter().enumerate() {
            let mut csv = String::from("point_id");
            for c in 0..field.dim {
                csv.push_str(&format!(",c{c}"));
            }
            csv.push('\n');
            for i in 0..field.n_points() {
                csv.push_str(&i.to_string());
                for component in field.vector(i) {
                    csv.push_str(&format!(",{component}"));
                }
                csv.push('\n');
            }
            write_atomic(&out.join(format!("embeddings_pair_{p:03}.csv")), csv.as_bytes())?;
        }
    }
    let mut log_bytes = Vec::new();
    result.log.write_csv(&mut log_bytes)?;
    write_atomic(&out.join("training_log.csv"), &log_bytes)?;
    write_atomic(
        &out.join("run_config.json"),
        serde_json::to_string_pretty(cfg)?.as_bytes(),
    )?;
    Ok(())
}

fn cmd_solve(args: SolveArgs) -> Result<()> {
    let cfg = args.common.load()?;
    let scene_dir = require_scene(&args.scene, &cfg)?;
    let out = require_out(&cfg)?;
    let bundle = read_bundle(&scene_dir)?;
    let result = run_two_stage(&bundle.views, &bundle.corrs, &cfg.solver, solve_prior(&cfg))?;
    write_solve_outputs(&out, &cfg, &result)?;
    let last_epoch = result.log.epoch_means(2);
    println!(
        "solved {} views; final stage-2 mean data term {:.3e}; outputs in {:?}",
        result.depth_fields.len(),
        last_epoch.last().copied().unwrap_or(f64::NAN),
        out
    );
    Ok(())
}

fn metrics_csv_row(tag: &str, m: &DepthMetrics) -> String {
    format!(
        "{tag},{},{},{},{},{},{},{},{}\n",
        m.abs_rel, m.sq_rel, m.rmse, m.rmse_log, m.delta1, m.delta2, m.delta3, m.n_evaluated
    )
}

/// Per-view depth metrics plus an aggregate row of per-view means.
pub fn evaluate_bundle(
    bundle: &SceneBundle,
    pred_dir: &Path,
    cap: Option<f64>,
) -> Result<(Vec<DepthMetrics>, DepthMetrics)> {
    let gt = bundle
        .gt_depths
        .as_ref()
        .ok_or_else(|| Error::Input("scene bundle carries no ground-truth depths".into()))?;
    let mut per_view = Vec::with_capacity(bundle.views.len());
    for k in 0..bundle.views.len() {
        let image = read_pfm(pred_dir.join(format!("depth_view_{k:03}.pfm")))?;
        if image.data.len() != gt[k].len() {
            return Err(Error::Dimension(format!(
                "view {k}: {} predictions vs {} ground-truth depths",
                image.data.len(),
                gt[k].len()
            )));
        }
        let pred: Vec<f64> = image.data.iter().map(|&v| v as f64).collect();
        let (scaled, _) = median_scale(&pred, &gt[k])?;
        per_view.push(depth_metrics(&scaled, &gt[k], cap)?);
    }
    let n = per_view.len() as f64;
    let mean = DepthMetrics {
        abs_rel: per_view.iter().map(|m| m.abs_rel).sum::<f64>() / n,
        sq_rel: per_view.iter().map(|m| m.sq_rel).sum::<f64>() / n,
        rmse: per_view.iter().map(|m| m.rmse).sum::<f64>() / n,
        rmse_log: per_view.iter().map(|m| m.rmse_log).sum::<f64>() / n,
        delta1: per_view.iter().map(|m| m.delta1).sum::<f64>() / n,
        delta2: per_view.iter().map(|m| m.delta2).sum::<f64>() / n,
        delta3: per_view.iter().map(|m| m.delta3).sum::<f64>() / n,
        n_evaluated: per_view.iter().map(|m| m.n_evaluated).sum(),
        depth_cap: cap,
    };
    Ok((per_view, mean))
}

fn cmd_eval(args: EvalArgs) -> Result<()> {
    let cfg = args.common.load()?;
    let scene_dir = require_scene(&args.scene, &cfg)?;
    let out = require_out(&cfg)?;
    let bundle = read_bundle(&scene_dir)?;
    let (per_view, mean) = evaluate_bundle(&bundle, &args.pred, cfg.depth_cap)?;

    let mut csv =
        String::from("view,abs_rel,sq_rel,rmse,rmse_log,delta1,delta2,delta3,n_evaluated\n");
    for (k, m) in per_view.iter().enumerate() {
        csv.push_str(&metrics_csv_row(&k.to_string(), m));
    }
    csv.push_str(&metrics_csv_row("mean", &mean));
    write_atomic(&out.join("metrics.csv"), csv.as_bytes())?;
    println!(
        "abs_rel {:.4}  delta1 {:.4}  over {} views -> {:?}",
        mean.abs_rel,
        mean.delta1,
        per_view.len(),
        out.join("metrics.csv")
    );
    Ok(())
}

/// Load the per-pair embedding CSVs written by `solve`.
fn read_embeddings(pred_dir: &Path, n_pairs: usize) -> Result<Vec<EmbeddingField>> {
    let mut fields = Vec::with_capacity(n_pairs);
    for p in 0..n_pairs {
        let path = pred_dir.join(format!("embeddings_pair_{p:03}.csv"));
        if !path.is_file() {
            return Err(Error::Input(format!(
                "{path:?} not found; segment needs a solve run with the arap prior"
            )));
        }
        let text = std::fs::read_to_string(&path)?;
        let mut vectors: Vec<Vec<f64>> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            if lineno == 0 || line.trim().is_empty() {
                continue;
            }
            let fields_: Vec<&str> = line.split(',').collect();
            let v: Vec<f64> = fields_[1..]
                .iter()
                .map(|s| {
                    s.parse().map_err(|e| Error::Format {
                        path: path.clone(),
                        offset: lineno as u64,
                        message: format!("bad embedding component: {e}"),
                    })
                })
                .collect::<Result<_>>()?;
            vectors.push(v);
        }
        let dim = vectors.first().map(|v| v.len()).unwrap_or(0);
        if dim == 0 {
            return Err(Error::Input(format!("{path:?} holds no embeddings")));
        }
        fields.push(EmbeddingField::from_vectors(&vectors, dim, (p, p + 1))?);
    }
    Ok(fields)
}

fn cmd_segment(args: SegmentArgs) -> Result<()> {
    let mut cfg = args.common.load()?;
    if let Some(bw) = args.border_width {
        cfg.border_width = bw;
    }
    if args.per_pair_static {
        cfg.per_pair_static = true;
    }
    cfg.validate()?;
    let scene_dir = require_scene(&args.scene, &cfg)?;
    let out = require_out(&cfg)?;
    let bundle = read_bundle(&scene_dir)?;
    let n_pairs = bundle.views.len() - 1;
    let fields = read_embeddings(&args.pred, n_pairs)?;

    let layouts: Vec<PixelLayout> = bundle
        .views
        .iter()
        .map(|v| PixelLayout {
            positions: v.pixels(),
            width: v.intrinsics.width,
            height: v.intrinsics.height,
        })
        .collect();

    // Static background embedding: sequence-wide border median by default.
    let sequence_static = if cfg.per_pair_static {
        None
    } else {
        let pairs: Vec<(&EmbeddingField, &PixelLayout)> = fields
            .iter()
            .enumerate()
            .map(|(p, f)| (f, &layouts[p]))
            .collect();
        Some(static_embedding_sequence(&pairs, cfg.border_width)?)
    };

    let gt_dynamic: Option<Vec<bool>> = bundle
        .motion_labels
        .as_ref()
        .map(|labels| labels.iter().map(|&b| b != 0).collect());

    let mut csv = String::from("pair,accuracy,iou,tp,fp,fn,tn,n_dynamic\n");
    let mut mean_acc = 0.0;
    let mut mean_iou = 0.0;
    for (p, field) in fields.iter().enumerate() {
        let static_vec = match &sequence_static {
            Some(v) => v.clone(),
            None => static_embedding(field, cfg.border_width, &layouts[p])?,
        };
        let mask = segment_motion(field, &static_vec, cfg.segmentation_threshold)?;
        let raster = rasterize_labels(
            &mask.labels,
            &layouts[p].positions,
            layouts[p].width as usize,
            layouts[p].height as usize,
        )?;
        write_pgm(out.join(format!("mask_pair_{p:03}.pgm")), &raster)?;

        if let Some(gt) = &gt_dynamic {
            let m = seg_metrics(&mask.labels, gt)?;
            mean_acc += m.accuracy;
            mean_iou += m.iou;
            csv.push_str(&format!(
                "{p},{},{},{},{},{},{},{}\n",
                m.accuracy,
                m.iou,
                m.tp,
                m.fp,
                m.fn_,
                m.tn,
                mask.n_dynamic()
            ));
        } else {
            csv.push_str(&format!("{p},,,,,,,{}\n", mask.n_dynamic()));
        }
    }
    if gt_dynamic.is_some() && !fields.is_empty() {
        let n = fields.len() as f64;
        csv.push_str(&format!("mean,{},{},,,,,\n", mean_acc / n, mean_iou / n));
    }
    write_atomic(&out.join("seg_metrics.csv"), csv.as_bytes())?;
    println!("wrote {} masks -> {:?}", fields.len(), out);
    Ok(())
}

fn cmd_rankcheck(args: RankcheckArgs) -> Result<()> {
    let structure = make_lowrank_scene(args.b, args.points, args.views, args.seed)?;
    let report = rank_check(&structure, args.tolerance)?;
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    if let Some(out) = &args.out {
        write_atomic(out, json.as_bytes())?;
    }
    if !report.all_within_bounds {
        return Err(Error::Domain(format!(
            "rank bounds violated: per-pair bound {}, stacked bound {}, report {:?}",
            report.per_pair_bound, report.stacked_bound, report.per_pair_ranks
        )));
    }
    Ok(())
}

fn cmd_gradcheck(args: GradcheckArgs) -> Result<()> {
    let report = gradient_check(args.configs, args.seed)?;
    let json = serde_json::to_string_pretty(&report)?;
    println!("{json}");
    if let Some(out) = &args.out {
        write_atomic(out, json.as_bytes())?;
    }
    if report.failures > 0 {
        return Err(Error::Domain(format!(
            "{} of {} gradient components exceeded the tolerance (max relative error {:.3e})",
            report.failures, report.components_checked, report.max_relative_error
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> i32 {
        run_subcommand(std::iter::once("nrdepth").chain(args.iter().copied()))
    }

    #[test]
    fn unknown_subcommand_is_usage_error() {
        assert_eq!(run(&["no-such-command"]), 2);
    }

    #[test]
    fn unreadable_config_is_config_error() {
        let code = run(&["synth", "--config", "/no/such/config.json", "--out", "/tmp/x"]);
        assert_eq!(code, 5); // io error while reading the config
    }

    #[test]
    fn invalid_config_value_is_rejected_before_work() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("bad.json");
        std::fs::write(&cfg, r#"{ "solver": { "tau": 2.0 } }"#).unwrap();
        let code = run(&[
            "synth",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            dir.path().join("out").to_str().unwrap(),
        ]);
        assert_eq!(code, 3);
        assert!(!dir.path().join("out").exists());
    }

    #[test]
    fn rankcheck_runs_clean() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("report.json");
        let code = run(&[
            "rankcheck",
            "--b",
            "1",
            "--views",
            "3",
            "--points",
            "10",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let report: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(out).unwrap()).unwrap();
        assert_eq!(report["all_within_bounds"], true);
        assert_eq!(report["per_pair_bound"], 3);
    }

    #[test]
    fn synth_writes_a_loadable_bundle() {
        let dir = tempfile::tempdir().unwrap();
        let out = dir.path().join("scene");
        let code = run(&[
            "synth",
            "--scenario",
            "rigid",
            "--n-points",
            "12",
            "--n-views",
            "3",
            "--seed",
            "5",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
        let bundle = read_bundle(&out).unwrap();
        assert_eq!(bundle.views.len(), 3);
        assert_eq!(bundle.meta.n_points, 12);
    }
}
