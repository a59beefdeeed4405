//! The weighted distance-preservation loss and its exact gradients.

use nalgebra::Vector3;

use super::{AlphaMode, SolverConfig};
use crate::correspondence::CorrespondenceMap;
use crate::embedding::EmbeddingField;
use crate::error::{Error, Result};
use crate::geometry::{back_project, DepthField, ViewObservation};
use crate::priors::WeightAssignment;

/// Where the per-edge weights of a loss evaluation come from.
#[derive(Debug, Clone, Copy)]
pub enum WeightSource<'a> {
    /// Prescribed weights; the assignment's edges are the sampled edges.
    Fixed(&'a WeightAssignment),
    /// Weights derived from motion embeddings via `1 - tanh(distance)`,
    /// optionally rescaled by the tau offset. Differentiable with respect to
    /// the embedding raw values.
    Embedded {
        field: &'a EmbeddingField,
        edges: &'a [(usize, usize)],
        tau: Option<f64>,
    },
}

impl<'a> WeightSource<'a> {
    pub fn edges(&self) -> &'a [(usize, usize)] {
        match self {
            WeightSource::Fixed(wa) => &wa.edges,
            WeightSource::Embedded { edges, .. } => edges,
        }
    }
}

/// All the terms of one loss evaluation.
#[derive(Debug, Clone)]
pub struct LossBreakdown {
    /// `data_term + weight_reg_term`.
    pub total: f64,
    /// Weighted mean absolute distance-preservation residual, `N / (alpha * W)`.
    pub data_term: f64,
    /// Signed regularization contribution, `reg_sign * beta * mean(w)`.
    pub weight_reg_term: f64,
    /// `N = sum_t w_t |e~_t^k - e~_t^l|`.
    pub numerator: f64,
    /// `alpha * sum_t w_t`.
    pub denominator: f64,
    /// `sum_t w_t`.
    pub weight_sum: f64,
    pub alpha: f64,
    /// Per-edge signed residuals `e~_t^k - e~_t^l`, kept on request.
    pub residuals: Option<Vec<f64>>,
}

/// Gradients of the total loss with respect to the unconstrained raw
/// variables.
#[derive(Debug, Clone)]
pub struct LossGradient {
    /// One entry per point of view `k`.
    pub depth_k: Vec<f64>,
    /// One entry per point of view `l`.
    pub depth_l: Vec<f64>,
    /// Point-major `n_k * dim` entries, present when embeddings were
    /// differentiated.
    pub embedding: Option<Vec<f64>>,
}

struct Forward {
    edges_k: Vec<(usize, usize)>,
    edges_l: Vec<(usize, usize)>,
    coords_k: Vec<Vector3<f64>>,
    coords_l: Vec<Vector3<f64>>,
    e_k: Vec<f64>,
    e_l: Vec<f64>,
    sum_k: f64,
    sum_l: f64,
    weights: Vec<f64>,
    /// Pre-offset weights and decoded embeddings, kept when the weights came
    /// from an embedding field.
    embedded: Option<EmbeddedForward>,
    breakdown: LossBreakdown,
}

struct EmbeddedForward {
    decoded: Vec<f64>,
    dim: usize,
    tau: Option<f64>,
}

/// Map each edge of view `k` onto the corresponding point pair of view `l`.
fn resolve_edges_l(
    corr: &CorrespondenceMap,
    edges: &[(usize, usize)],
) -> Result<Vec<(usize, usize)>> {
    edges
        .iter()
        .map(|&(i, j)| {
            let ti = corr
                .target_of(i)
                .ok_or_else(|| Error::Input(format!("point {i} has no correspondence")))?;
            let tj = corr
                .target_of(j)
                .ok_or_else(|| Error::Input(format!("point {j} has no correspondence")))?;
            Ok((ti, tj))
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn forward(
    depth_k: &DepthField,
    depth_l: &DepthField,
    view_k: &ViewObservation,
    view_l: &ViewObservation,
    corr: &CorrespondenceMap,
    weights: &WeightSource,
    cfg: &SolverConfig,
) -> Result<Forward> {
    if depth_k.len() != view_k.len() {
        return Err(Error::Dimension(format!(
            "{} depths vs {} points in view k",
            depth_k.len(),
            view_k.len()
        )));
    }
    if depth_l.len() != view_l.len() {
        return Err(Error::Dimension(format!(
            "{} depths vs {} points in view l",
            depth_l.len(),
            view_l.len()
        )));
    }
    if corr.len() != view_k.len() {
        return Err(Error::Dimension(format!(
            "{} correspondences vs {} points in view k",
            corr.len(),
            view_k.len()
        )));
    }
    let edges_k = weights.edges().to_vec();
    if edges_k.is_empty() {
        return Err(Error::Input("no edges to evaluate".into()));
    }
    let n_k = view_k.len();
    if let Some(&(i, j)) = edges_k.iter().find(|&&(i, j)| i >= n_k || j >= n_k) {
        return Err(Error::Lookup(format!(
            "edge ({i},{j}) out of range for {n_k} points"
        )));
    }
    let edges_l = resolve_edges_l(corr, &edges_k)?;
    let n_l = view_l.len();
    if let Some(&(i, j)) = edges_l.iter().find(|&&(i, j)| i >= n_l || j >= n_l) {
        return Err(Error::Lookup(format!(
            "correspondence target ({i},{j}) out of range for {n_l} points"
        )));
    }

    let cloud_k = back_project(view_k, &depth_k.decode())?;
    let cloud_l = back_project(view_l, &depth_l.decode())?;
    let e_k = crate::geometry::edge_distances(&cloud_k, &edges_k)?;
    let e_l = crate::geometry::edge_distances(&cloud_l, &edges_l)?;
    let sum_k: f64 = e_k.iter().sum();
    let sum_l: f64 = e_l.iter().sum();
    if !(sum_k > 0.0) || !(sum_l > 0.0) {
        return Err(Error::Degenerate(
            "all sampled squared distances are zero in one view".into(),
        ));
    }

    let (w, embedded) = match weights {
        WeightSource::Fixed(wa) => {
            if wa.weights.len() != edges_k.len() {
                return Err(Error::Dimension(format!(
                    "{} weights vs {} edges",
                    wa.weights.len(),
                    edges_k.len()
                )));
            }
            (wa.weights.clone(), None)
        }
        WeightSource::Embedded { field, tau, .. } => {
            if field.n_points() != n_k {
                return Err(Error::Dimension(format!(
                    "{} embeddings vs {n_k} points in view k",
                    field.n_points()
                )));
            }
            if let Some(tau) = tau {
                if !(0.0..1.0).contains(tau) {
                    return Err(Error::Domain(format!("tau {tau} outside [0,1)")));
                }
            }
            let decoded = field.decode();
            let dim = field.dim;
            let w = edges_k
                .iter()
                .map(|&(i, j)| {
                    let mi = &decoded[i * dim..(i + 1) * dim];
                    let mj = &decoded[j * dim..(j + 1) * dim];
                    let d = mi
                        .iter()
                        .zip(mj)
                        .map(|(a, b)| (a - b) * (a - b))
                        .sum::<f64>()
                        .sqrt();
                    let w0 = 1.0 - d.tanh();
                    match tau {
                        Some(tau) => ((w0 + tau) / (1.0 + tau)).clamp(0.0, 1.0),
                        None => w0,
                    }
                })
                .collect();
            (
                w,
                Some(EmbeddedForward {
                    decoded,
                    dim,
                    tau: *tau,
                }),
            )
        }
    };

    let weight_sum: f64 = w.iter().sum();
    if !(weight_sum > 0.0) {
        return Err(Error::Degenerate("all edge weights are zero".into()));
    }

    let t = edges_k.len() as f64;
    let alpha = match cfg.alpha_mode {
        AlphaMode::PostNormalization => {
            e_k.iter().map(|v| v / sum_k).sum::<f64>() + e_l.iter().map(|v| v / sum_l).sum::<f64>()
        }
        AlphaMode::PreNormalization => sum_k + sum_l,
    };

    let mut numerator = 0.0;
    let mut residuals = cfg.keep_residuals.then(|| Vec::with_capacity(edges_k.len()));
    for ((&ek, &el), &wt) in e_k.iter().zip(&e_l).zip(&w) {
        let r = ek / sum_k - el / sum_l;
        numerator += wt * r.abs();
        if let Some(res) = residuals.as_mut() {
            res.push(r);
        }
    }

    let data_term = numerator / (alpha * weight_sum);
    let weight_reg_term = cfg.reg_sign.value() * cfg.beta_reg * (weight_sum / t);
    let breakdown = LossBreakdown {
        total: data_term + weight_reg_term,
        data_term,
        weight_reg_term,
        numerator,
        denominator: alpha * weight_sum,
        weight_sum,
        alpha,
        residuals,
    };

    Ok(Forward {
        edges_k,
        edges_l,
        coords_k: cloud_k.coords,
        coords_l: cloud_l.coords,
        e_k,
        e_l,
        sum_k,
        sum_l,
        weights: w,
        embedded,
        breakdown,
    })
}

/// Evaluate the loss for one view pair.
pub fn compute_loss(
    depth_k: &DepthField,
    depth_l: &DepthField,
    view_k: &ViewObservation,
    view_l: &ViewObservation,
    corr: &CorrespondenceMap,
    weights: &WeightSource,
    cfg: &SolverConfig,
) -> Result<LossBreakdown> {
    Ok(forward(depth_k, depth_l, view_k, view_l, corr, weights, cfg)?.breakdown)
}

/// Per-view depth gradient accumulation for one side of the residual.
///
/// Returns the gradient of the total loss with respect to that view's
/// decoded depths. `residual_sign` is `+1` for view `k` and `-1` for view
/// `l`; `pre_norm` adds the gradient path through an unnormalized `alpha`.
#[allow(clippy::too_many_arguments)]
fn depth_gradient_side(
    n_points: usize,
    edges: &[(usize, usize)],
    coords: &[Vector3<f64>],
    rays: &[Vector3<f64>],
    e: &[f64],
    sum_e: f64,
    weights: &[f64],
    signs: &[f64],
    residual_sign: f64,
    alpha: f64,
    weight_sum: f64,
    numerator: f64,
    pre_norm: bool,
) -> Vec<f64> {
    let mut p1 = vec![0.0; n_points];
    let mut p2 = vec![0.0; n_points];
    let mut q = 0.0;
    for (t, &(i, j)) in edges.iter().enumerate() {
        let diff = coords[i] - coords[j];
        let de_di = 2.0 * diff.dot(&rays[i]);
        let de_dj = -2.0 * diff.dot(&rays[j]);
        let ws = weights[t] * signs[t];
        p1[i] += ws * de_di;
        p1[j] += ws * de_dj;
        p2[i] += de_di;
        p2[j] += de_dj;
        q += ws * e[t];
    }
    let inv_aw = 1.0 / (alpha * weight_sum);
    let alpha_coeff = if pre_norm {
        numerator / (alpha * alpha * weight_sum)
    } else {
        0.0
    };
    (0..n_points)
        .map(|p| {
            let dn = p1[p] / sum_e - q * p2[p] / (sum_e * sum_e);
            residual_sign * dn * inv_aw - alpha_coeff * p2[p]
        })
        .collect()
}

/// Evaluate the loss and its exact gradients with respect to the depth raw
/// values of both views and, when `differentiate_embeddings` is set and the
/// weights come from an embedding field, the embedding raw values.
///
/// Subgradient conventions: the absolute value at a zero residual and the
/// embedding-distance direction at coincident embeddings both use 0.
#[allow(clippy::too_many_arguments)]
pub fn loss_and_gradient(
    depth_k: &DepthField,
    depth_l: &DepthField,
    view_k: &ViewObservation,
    view_l: &ViewObservation,
    corr: &CorrespondenceMap,
    weights: &WeightSource,
    cfg: &SolverConfig,
    differentiate_embeddings: bool,
) -> Result<(LossBreakdown, LossGradient)> {
    let fwd = forward(depth_k, depth_l, view_k, view_l, corr, weights, cfg)?;
    let b = &fwd.breakdown;
    let pre_norm = cfg.alpha_mode == AlphaMode::PreNormalization;

    // Residual signs, shared by both sides.
    let signs: Vec<f64> = fwd
        .e_k
        .iter()
        .zip(&fwd.e_l)
        .map(|(&ek, &el)| {
            let r = ek / fwd.sum_k - el / fwd.sum_l;
            if r > 0.0 {
                1.0
            } else if r < 0.0 {
                -1.0
            } else {
                0.0
            }
        })
        .collect();

    let grad_depth_k = depth_gradient_side(
        view_k.len(),
        &fwd.edges_k,
        &fwd.coords_k,
        &view_k.rays,
        &fwd.e_k,
        fwd.sum_k,
        &fwd.weights,
        &signs,
        1.0,
        b.alpha,
        b.weight_sum,
        b.numerator,
        pre_norm,
    );
    let grad_depth_l = depth_gradient_side(
        view_l.len(),
        &fwd.edges_l,
        &fwd.coords_l,
        &view_l.rays,
        &fwd.e_l,
        fwd.sum_l,
        &fwd.weights,
        &signs,
        -1.0,
        b.alpha,
        b.weight_sum,
        b.numerator,
        pre_norm,
    );

    // Chain through the raw-to-depth decoding.
    let depth_k_raw: Vec<f64> = grad_depth_k
        .iter()
        .zip(&depth_k.raw)
        .map(|(&g, &raw)| g * depth_k.decode_derivative(raw))
        .collect();
    let depth_l_raw: Vec<f64> = grad_depth_l
        .iter()
        .zip(&depth_l.raw)
        .map(|(&g, &raw)| g * depth_l.decode_derivative(raw))
        .collect();

    let embedding = if differentiate_embeddings {
        fwd.embedded.as_ref().map(|emb| {
            embedding_gradient(&fwd, emb, cfg)
        })
    } else {
        None
    };

    Ok((
        fwd.breakdown,
        LossGradient {
            depth_k: depth_k_raw,
            depth_l: depth_l_raw,
            embedding,
        },
    ))
}

fn embedding_gradient(fwd: &Forward, emb: &EmbeddedForward, cfg: &SolverConfig) -> Vec<f64> {
    let b = &fwd.breakdown;
    let t_count = fwd.edges_k.len() as f64;
    let dim = emb.dim;
    let mut grad_m = vec![0.0; emb.decoded.len()];
    let tau_chain = match emb.tau {
        Some(tau) => 1.0 / (1.0 + tau),
        None => 1.0,
    };
    for (t, &(i, j)) in fwd.edges_k.iter().enumerate() {
        let ek = fwd.e_k[t] / fwd.sum_k;
        let el = fwd.e_l[t] / fwd.sum_l;
        let r = (ek - el).abs();
        // d total / d w_t
        let dl_dw = r / (b.alpha * b.weight_sum) - b.numerator / (b.alpha * b.weight_sum * b.weight_sum)
            + cfg.reg_sign.value() * cfg.beta_reg / t_count;

        let mi = &emb.decoded[i * dim..(i + 1) * dim];
        let mj = &emb.decoded[j * dim..(j + 1) * dim];
        let d = mi
            .iter()
            .zip(mj)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt();
        if d == 0.0 {
            continue; // coincident embeddings: zero subgradient
        }
        let th = d.tanh();
        // tau clamp is inactive strictly inside [floor, 1); at w0 == 1 the
        // distance is 0 and we never reach this point.
        let chain = if emb.tau.is_some() && (1.0 - th + emb.tau.unwrap()) / (1.0 + emb.tau.unwrap()) >= 1.0 {
            0.0
        } else {
            tau_chain
        };
        let dw_dd = -(1.0 - th * th); // d(1 - tanh d)/dd
        let coeff = dl_dw * chain * dw_dd / d;
        for c in 0..dim {
            let delta = mi[c] - mj[c];
            grad_m[i * dim + c] += coeff * delta;
            grad_m[j * dim + c] -= coeff * delta;
        }
    }
    // Chain through the componentwise logistic decoding.
    grad_m
        .iter()
        .enumerate()
        .map(|(idx, &g)| {
            let m = emb.decoded[idx];
            g * m * (1.0 - m)
        })
        .collect()
}
