//! Two-stage optimization over a sequence of views.
//!
//! Consecutive views form the trained pairs. Stage 1 optimizes depth and
//! motion embeddings jointly; stage 2 freezes the embeddings, resets the
//! depth variables and schedule, applies the tau offset to the weights and
//! optimizes depth alone. Edges are resampled every epoch from a seed
//! derived from the configured seed, the epoch and the pair, so runs are
//! reproducible.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use super::adam::Adam;
use super::loss::{loss_and_gradient, LossBreakdown, WeightSource};
use super::{sample_edges, SolverConfig};
use crate::correspondence::CorrespondenceMap;
use crate::embedding::EmbeddingField;
use crate::error::{Error, Result};
use crate::geometry::{DepthField, ViewObservation};
use crate::priors::{isometric_weights, rigid_weights, WeightAssignment};

/// Which rigidity prior drives the weights.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Prior {
    /// Every sampled edge gets weight 1.
    Rigid,
    /// Binary weights from 2D pixel neighborhoods of the given radius.
    Isometric { radius_px: f64 },
    /// Weights learned through per-pair motion embeddings.
    Arap,
}

/// One log row: the loss terms of one pair visit.
#[derive(Debug, Clone)]
pub struct LogRecord {
    pub stage: u8,
    pub epoch: usize,
    pub pair: (usize, usize),
    pub data_term: f64,
    pub reg_term: f64,
    pub total: f64,
    pub lr: f64,
}

/// Per-epoch training log across all pairs.
#[derive(Debug, Clone, Default)]
pub struct TrainingLog {
    pub records: Vec<LogRecord>,
}

impl TrainingLog {
    /// Mean data term per epoch of one stage, in epoch order.
    pub fn epoch_means(&self, stage: u8) -> Vec<f64> {
        let mut sums: Vec<(f64, usize)> = Vec::new();
        for r in self.records.iter().filter(|r| r.stage == stage) {
            if r.epoch >= sums.len() {
                sums.resize(r.epoch + 1, (0.0, 0));
            }
            sums[r.epoch].0 += r.data_term;
            sums[r.epoch].1 += 1;
        }
        sums.iter()
            .map(|&(s, c)| if c > 0 { s / c as f64 } else { 0.0 })
            .collect()
    }

    pub fn write_csv<W: std::io::Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "stage,epoch,pair_k,pair_l,data_term,reg_term,total,lr")?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{}",
                r.stage, r.epoch, r.pair.0, r.pair.1, r.data_term, r.reg_term, r.total, r.lr
            )?;
        }
        Ok(())
    }
}

/// Everything the two-stage run produces.
#[derive(Debug, Clone)]
pub struct SolveResult {
    pub depth_fields: Vec<DepthField>,
    /// One field per consecutive pair under the arap prior, `None` otherwise.
    pub embedding_fields: Option<Vec<EmbeddingField>>,
    /// Stage-2 weights of the final epoch's edge sample, one per pair.
    pub final_weights: Vec<WeightAssignment>,
    pub log: TrainingLog,
}

/// Seed for the edge sample of (stage, epoch, pair).
fn edge_seed(base: u64, stage: u8, epoch: usize, pair: usize) -> u64 {
    // splitmix64 over a packed key
    let mut z = base
        .wrapping_add(0x9e3779b97f4a7c15u64.wrapping_mul(1 + pair as u64))
        .wrapping_add((epoch as u64) << 20)
        .wrapping_add((stage as u64) << 60);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

struct PairState {
    pair: (usize, usize),
    corr: CorrespondenceMap,
    embedding: Option<EmbeddingField>,
    embedding_adam: Option<Adam>,
}

fn weights_for_pair(
    prior: Prior,
    state: &PairState,
    view_k: &ViewObservation,
    edges: &[(usize, usize)],
) -> Result<Option<WeightAssignment>> {
    match prior {
        Prior::Rigid => Ok(Some(rigid_weights(edges))),
        Prior::Isometric { radius_px } => {
            Ok(Some(isometric_weights(&view_k.pixels(), radius_px, edges)?))
        }
        Prior::Arap => {
            // Weights come straight from the embedding field inside the
            // loss, where they stay differentiable.
            let _ = state;
            Ok(None)
        }
    }
}

/// Run the full two-stage optimization and return per-view depth fields,
/// per-pair embedding fields (arap prior only), the final stage-2 weights
/// and the training log.
pub fn run_two_stage(
    views: &[ViewObservation],
    corrs: &[CorrespondenceMap],
    cfg: &SolverConfig,
    prior: Prior,
) -> Result<SolveResult> {
    cfg.validate()?;
    if views.len() < 2 {
        return Err(Error::Input(format!(
            "need at least 2 views, got {}",
            views.len()
        )));
    }
    if corrs.len() != views.len() - 1 {
        return Err(Error::Dimension(format!(
            "{} correspondence maps for {} consecutive pairs",
            corrs.len(),
            views.len() - 1
        )));
    }
    for (p, corr) in corrs.iter().enumerate() {
        if corr.n_valid() < 2 {
            return Err(Error::Input(format!(
                "pair ({p},{}) has fewer than 2 valid correspondences",
                p + 1
            )));
        }
    }
    if let Prior::Isometric { radius_px } = prior {
        if !(radius_px > 0.0) {
            return Err(Error::Config(format!(
                "isometric radius must be positive, got {radius_px}"
            )));
        }
    }

    let n_pairs = views.len() - 1;
    let mut depth_fields: Vec<DepthField> = views
        .iter()
        .map(|v| DepthField::zeros(v.len(), cfg.d_min, cfg.d_max))
        .collect::<Result<_>>()?;
    let mut depth_adams: Vec<Adam> = views
        .iter()
        .map(|v| Adam::new(v.len(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon))
        .collect();

    let mut pair_states: Vec<PairState> = (0..n_pairs)
        .map(|p| -> Result<PairState> {
            let embedding = if prior == Prior::Arap {
                // Wide seeded noise: an exactly uniform field is a
                // stationary point of the similarity subgradient, and a
                // narrow blob gives the attract/repel field no geometry to
                // work with until clusters nucleate.
                let mut rng = ChaCha8Rng::seed_from_u64(edge_seed(cfg.seed, 0, 0, p) ^ 0xe5b3);
                let n = views[p].len();
                let raw = (0..n * cfg.embedding_dim)
                    .map(|_| rng.gen_range(-1.0..1.0))
                    .collect();
                Some(EmbeddingField::new(raw, cfg.embedding_dim, (p, p + 1))?)
            } else {
                None
            };
            let embedding_adam = embedding.as_ref().map(|e| {
                Adam::new(e.raw.len(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon)
            });
            Ok(PairState {
                pair: (p, p + 1),
                corr: corrs[p].clone(),
                embedding,
                embedding_adam,
            })
        })
        .collect::<Result<_>>()?;

    let mut log = TrainingLog::default();

    // Stage 1: joint depth + embedding training, no tau offset.
    for epoch in 0..cfg.stage1_epochs {
        let lr = cfg.lr_at_epoch(epoch);
        for p in 0..n_pairs {
            let (k, l) = pair_states[p].pair;
            let sample = sample_edges(
                &views[k],
                &pair_states[p].corr,
                cfg.sample_size,
                edge_seed(cfg.seed, 1, epoch, p),
            )?;
            let fixed = weights_for_pair(prior, &pair_states[p], &views[k], &sample.edges)?;
            let source = match &fixed {
                Some(wa) => WeightSource::Fixed(wa),
                None => WeightSource::Embedded {
                    field: pair_states[p].embedding.as_ref().unwrap(),
                    edges: &sample.edges,
                    tau: cfg.stage1_tau_offset.then_some(cfg.tau),
                },
            };
            let (breakdown, grad) = loss_and_gradient(
                &depth_fields[k],
                &depth_fields[l],
                &views[k],
                &views[l],
                &pair_states[p].corr,
                &source,
                cfg,
                prior == Prior::Arap,
            )?;
            check_finite(&breakdown, 1, epoch, (k, l))?;
            log.records.push(LogRecord {
                stage: 1,
                epoch,
                pair: (k, l),
                data_term: breakdown.data_term,
                reg_term: breakdown.weight_reg_term,
                total: breakdown.total,
                lr,
            });
            depth_adams[k].step(&mut depth_fields[k].raw, &grad.depth_k, lr);
            depth_adams[l].step(&mut depth_fields[l].raw, &grad.depth_l, lr);
            if let Some(emb_grad) = &grad.embedding {
                let state = &mut pair_states[p];
                state
                    .embedding_adam
                    .as_mut()
                    .unwrap()
                    .step(&mut state.embedding.as_mut().unwrap().raw, emb_grad, lr);
            }
        }
    }

    // Stage 2: embeddings frozen, depth re-initialized, fresh optimizer and
    // schedule, tau offset on the learned weights.
    for (field, adam) in depth_fields.iter_mut().zip(depth_adams.iter_mut()) {
        field.raw.iter_mut().for_each(|r| *r = 0.0);
        *adam = Adam::new(field.len(), cfg.adam_beta1, cfg.adam_beta2, cfg.adam_epsilon);
    }

    let mut final_weights: Vec<Option<WeightAssignment>> = vec![None; n_pairs];
    for epoch in 0..cfg.stage2_epochs {
        let lr = cfg.lr_at_epoch(epoch);
        for p in 0..n_pairs {
            let (k, l) = pair_states[p].pair;
            let sample = sample_edges(
                &views[k],
                &pair_states[p].corr,
                cfg.sample_size,
                edge_seed(cfg.seed, 2, epoch, p),
            )?;
            let fixed = weights_for_pair(prior, &pair_states[p], &views[k], &sample.edges)?;
            let source = match &fixed {
                Some(wa) => WeightSource::Fixed(wa),
                None => WeightSource::Embedded {
                    field: pair_states[p].embedding.as_ref().unwrap(),
                    edges: &sample.edges,
                    tau: Some(cfg.tau),
                },
            };
            let (breakdown, grad) = loss_and_gradient(
                &depth_fields[k],
                &depth_fields[l],
                &views[k],
                &views[l],
                &pair_states[p].corr,
                &source,
                cfg,
                false,
            )?;
            check_finite(&breakdown, 2, epoch, (k, l))?;
            log.records.push(LogRecord {
                stage: 2,
                epoch,
                pair: (k, l),
                data_term: breakdown.data_term,
                reg_term: breakdown.weight_reg_term,
                total: breakdown.total,
                lr,
            });
            depth_adams[k].step(&mut depth_fields[k].raw, &grad.depth_k, lr);
            depth_adams[l].step(&mut depth_fields[l].raw, &grad.depth_l, lr);

            if epoch + 1 == cfg.stage2_epochs {
                final_weights[p] = Some(match &fixed {
                    Some(wa) => wa.clone(),
                    None => {
                        let raw = crate::embedding::weights_for_edges(
                            pair_states[p].embedding.as_ref().unwrap(),
                            &sample.edges,
                        )?;
                        crate::embedding::apply_tau_offset(&raw, cfg.tau)?
                    }
                });
            }
        }
    }

    // With zero stage-2 epochs, still report the weights the solver would
    // have used, on a deterministic final sample.
    for p in 0..n_pairs {
        if final_weights[p].is_none() {
            let (k, _) = pair_states[p].pair;
            let sample = sample_edges(
                &views[k],
                &pair_states[p].corr,
                cfg.sample_size,
                edge_seed(cfg.seed, 2, 0, p),
            )?;
            final_weights[p] = Some(
                match weights_for_pair(prior, &pair_states[p], &views[k], &sample.edges)? {
                    Some(wa) => wa,
                    None => {
                        let raw = crate::embedding::weights_for_edges(
                            pair_states[p].embedding.as_ref().unwrap(),
                            &sample.edges,
                        )?;
                        crate::embedding::apply_tau_offset(&raw, cfg.tau)?
                    }
                },
            );
        }
    }

    let embedding_fields = if prior == Prior::Arap {
        Some(
            pair_states
                .iter()
                .map(|s| s.embedding.clone().unwrap())
                .collect(),
        )
    } else {
        None
    };

    Ok(SolveResult {
        depth_fields,
        embedding_fields,
        final_weights: final_weights.into_iter().map(Option::unwrap).collect(),
        log,
    })
}

fn check_finite(b: &LossBreakdown, stage: u8, epoch: usize, pair: (usize, usize)) -> Result<()> {
    if !b.total.is_finite() {
        return Err(Error::NonFinite(format!(
            "loss became non-finite at stage {stage}, epoch {epoch}, pair {pair:?}: \
             data={} reg={}",
            b.data_term, b.weight_reg_term
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::make_rigid_scene;

    #[test]
    fn rigid_prior_never_allocates_embeddings() {
        let scene = make_rigid_scene(12, 3, crate::geometry::default_intrinsics(), 5).unwrap();
        let cfg = SolverConfig {
            stage1_epochs: 2,
            stage2_epochs: 2,
            sample_size: 50,
            ..Default::default()
        };
        let result = run_two_stage(&scene.views, &scene.corrs, &cfg, Prior::Rigid).unwrap();
        assert!(result.embedding_fields.is_none());
        assert_eq!(result.depth_fields.len(), 3);
        assert_eq!(result.final_weights.len(), 2);
        assert!(result.final_weights[0].weights.iter().all(|&w| w == 1.0));
        // 2 epochs * 2 pairs per stage
        assert_eq!(result.log.records.len(), 8);
    }

    #[test]
    fn deterministic_runs_are_bit_identical() {
        let scene = make_rigid_scene(10, 3, crate::geometry::default_intrinsics(), 8).unwrap();
        let cfg = SolverConfig {
            stage1_epochs: 3,
            stage2_epochs: 3,
            sample_size: 30,
            deterministic: true,
            ..Default::default()
        };
        let r1 = run_two_stage(&scene.views, &scene.corrs, &cfg, Prior::Arap).unwrap();
        let r2 = run_two_stage(&scene.views, &scene.corrs, &cfg, Prior::Arap).unwrap();
        for (a, b) in r1.depth_fields.iter().zip(&r2.depth_fields) {
            assert_eq!(a.raw, b.raw);
        }
        for (a, b) in r1.log.records.iter().zip(&r2.log.records) {
            assert_eq!(a.total.to_bits(), b.total.to_bits());
        }
        let (e1, e2) = (r1.embedding_fields.unwrap(), r2.embedding_fields.unwrap());
        for (a, b) in e1.iter().zip(&e2) {
            assert_eq!(a.raw, b.raw);
        }
    }

    #[test]
    fn too_few_views_or_corrs_rejected() {
        let scene = make_rigid_scene(8, 2, crate::geometry::default_intrinsics(), 2).unwrap();
        let cfg = SolverConfig::default();
        assert!(run_two_stage(&scene.views[..1], &[], &cfg, Prior::Rigid).is_err());
        assert!(run_two_stage(&scene.views, &[], &cfg, Prior::Rigid).is_err());
    }
}
