//! Per-point motion embeddings for a view pair.
//!
//! Each tracked point of view `k` carries a bounded v-dimensional embedding
//! describing the motion it undergoes towards view `l`. The distance between
//! two embeddings maps to a rigidity weight through `1 - tanh(distance)`:
//! identical motions give weight 1, distant motions give weights near 0 but
//! never exactly 0. Embeddings double as an unsupervised motion segmentation
//! signal: points far from the static background embedding (the channel-wise
//! median over image-border points) are labeled dynamic.

use crate::error::{Error, Result};
use crate::geometry::sigmoid;
use crate::priors::{WeightAssignment, WeightKind};

/// Bounded per-point motion embeddings for the view pair `(k, l)`, stored as
/// unconstrained raw values and decoded componentwise through the logistic
/// function into `[0, 1]`.
#[derive(Debug, Clone)]
pub struct EmbeddingField {
    /// Flattened `n_points * dim` raw values, point-major.
    pub raw: Vec<f64>,
    /// Embedding dimension `v`.
    pub dim: usize,
    /// The `(k, l)` view pair this field describes.
    pub view_pair: (usize, usize),
}

impl EmbeddingField {
    pub fn new(raw: Vec<f64>, dim: usize, view_pair: (usize, usize)) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Config("embedding dimension must be at least 1".into()));
        }
        if raw.len() % dim != 0 {
            return Err(Error::Dimension(format!(
                "{} raw values not divisible by dimension {dim}",
                raw.len()
            )));
        }
        Ok(Self {
            raw,
            dim,
            view_pair,
        })
    }

    /// All raw values zero: every point embeds at the centre `(0.5, ...)`.
    pub fn zeros(n_points: usize, dim: usize, view_pair: (usize, usize)) -> Result<Self> {
        Self::new(vec![0.0; n_points * dim], dim, view_pair)
    }

    /// Invert the decoding so that `vector(i)` reproduces `vectors[i]`;
    /// every component must lie strictly inside `(0, 1)`.
    pub fn from_vectors(
        vectors: &[Vec<f64>],
        dim: usize,
        view_pair: (usize, usize),
    ) -> Result<Self> {
        let mut raw = Vec::with_capacity(vectors.len() * dim);
        for v in vectors {
            if v.len() != dim {
                return Err(Error::Dimension(format!(
                    "embedding of length {} vs dimension {dim}",
                    v.len()
                )));
            }
            for &c in v {
                if !(0.0 < c && c < 1.0) {
                    return Err(Error::Domain(format!(
                        "embedding component {c} outside open interval (0,1)"
                    )));
                }
                raw.push(crate::geometry::logit(c));
            }
        }
        Self::new(raw, dim, view_pair)
    }

    pub fn n_points(&self) -> usize {
        self.raw.len() / self.dim
    }

    /// Decoded embedding of point `i`.
    pub fn vector(&self, i: usize) -> Vec<f64> {
        self.raw[i * self.dim..(i + 1) * self.dim]
            .iter()
            .map(|&r| sigmoid(r))
            .collect()
    }

    /// Decode the whole field, point-major.
    pub fn decode(&self) -> Vec<f64> {
        self.raw.iter().map(|&r| sigmoid(r)).collect()
    }
}

/// Euclidean distance between two equally sized vectors.
fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Motion similarity of two embeddings: `1 - tanh(||m_i - m_j||)`.
///
/// Equals 1 exactly when the embeddings coincide, stays strictly positive,
/// and is symmetric in its arguments.
pub fn similarity_weight(m_i: &[f64], m_j: &[f64]) -> Result<f64> {
    if m_i.len() != m_j.len() {
        return Err(Error::Dimension(format!(
            "embeddings of length {} vs {}",
            m_i.len(),
            m_j.len()
        )));
    }
    Ok(1.0 - distance(m_i, m_j).tanh())
}

/// Similarity weights for every sampled edge of an embedding field.
///
/// Only the sampled edges are stored; unsampled pairs carry no weight at
/// all, which is where the sparsity of the weight structure comes from.
pub fn weights_for_edges(
    field: &EmbeddingField,
    edges: &[(usize, usize)],
) -> Result<WeightAssignment> {
    let n = field.n_points();
    let decoded = field.decode();
    let dim = field.dim;
    let weights = edges
        .iter()
        .map(|&(i, j)| {
            if i >= n || j >= n {
                return Err(Error::Lookup(format!(
                    "edge ({i},{j}) out of range for {n} embeddings"
                )));
            }
            similarity_weight(
                &decoded[i * dim..(i + 1) * dim],
                &decoded[j * dim..(j + 1) * dim],
            )
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(WeightAssignment {
        edges: edges.to_vec(),
        weights,
        source: WeightKind::Arap,
    })
}

/// Rescale weights through `(w + tau) / (1 + tau)` and clamp to `[0, 1]`,
/// enforcing the strictly positive rigidity floor `tau / (1 + tau)`.
pub fn apply_tau_offset(weights: &WeightAssignment, tau: f64) -> Result<WeightAssignment> {
    if !(0.0..1.0).contains(&tau) {
        return Err(Error::Domain(format!("tau {tau} outside [0,1)")));
    }
    Ok(WeightAssignment {
        edges: weights.edges.clone(),
        weights: weights
            .weights
            .iter()
            .map(|&w| ((w + tau) / (1.0 + tau)).clamp(0.0, 1.0))
            .collect(),
        source: weights.source,
    })
}

/// Maps tracked points to pixel positions on a known image raster.
#[derive(Debug, Clone)]
pub struct PixelLayout {
    pub positions: Vec<(f64, f64)>,
    pub width: u32,
    pub height: u32,
}

impl PixelLayout {
    /// Indices of points whose pixel lies within `border_width` of any image
    /// edge.
    pub fn border_indices(&self, border_width: f64) -> Vec<usize> {
        let (w, h) = (self.width as f64, self.height as f64);
        self.positions
            .iter()
            .enumerate()
            .filter_map(|(i, &(x, y))| {
                let on_border =
                    x < border_width || y < border_width || x >= w - border_width || y >= h - border_width;
                on_border.then_some(i)
            })
            .collect()
    }
}

/// Median of a slice; an even count averages the two middle values.
pub(crate) fn median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("non-finite value in median"));
    let n = sorted.len();
    Some(if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    })
}

/// Channel-wise median embedding over all border points of one field.
pub fn static_embedding(
    field: &EmbeddingField,
    border_width: f64,
    layout: &PixelLayout,
) -> Result<Vec<f64>> {
    static_embedding_sequence(&[(field, layout)], border_width)
}

/// Channel-wise median embedding over the border points of a whole sequence
/// of view pairs; this is the default mode for segmentation.
pub fn static_embedding_sequence(
    fields: &[(&EmbeddingField, &PixelLayout)],
    border_width: f64,
) -> Result<Vec<f64>> {
    let dim = fields
        .first()
        .map(|(f, _)| f.dim)
        .ok_or_else(|| Error::Input("no embedding fields given".into()))?;
    let mut per_channel: Vec<Vec<f64>> = vec![Vec::new(); dim];
    for (field, layout) in fields {
        if field.dim != dim {
            return Err(Error::Dimension(format!(
                "mixed embedding dimensions {} and {dim}",
                field.dim
            )));
        }
        if layout.positions.len() != field.n_points() {
            return Err(Error::Dimension(format!(
                "{} layout positions vs {} embeddings",
                layout.positions.len(),
                field.n_points()
            )));
        }
        for i in layout.border_indices(border_width) {
            let v = field.vector(i);
            for (c, &component) in v.iter().enumerate() {
                per_channel[c].push(component);
            }
        }
    }
    per_channel
        .iter()
        .map(|channel| {
            median(channel).ok_or_else(|| {
                Error::Config(format!(
                    "no border points within border width {border_width}"
                ))
            })
        })
        .collect()
}

/// Per-point dynamic/static labels from embedding distances to the static
/// background embedding.
#[derive(Debug, Clone)]
pub struct SegmentationMask {
    /// `true` marks a dynamic point.
    pub labels: Vec<bool>,
    pub threshold: f64,
    pub static_embedding: Vec<f64>,
}

impl SegmentationMask {
    pub fn n_dynamic(&self) -> usize {
        self.labels.iter().filter(|&&l| l).count()
    }
}

/// Label every point dynamic whose embedding is farther than `threshold`
/// from the static embedding.
pub fn segment_motion(
    field: &EmbeddingField,
    static_vec: &[f64],
    threshold: f64,
) -> Result<SegmentationMask> {
    if !(threshold > 0.0) {
        return Err(Error::Config(format!("threshold must be positive, got {threshold}")));
    }
    if static_vec.len() != field.dim {
        return Err(Error::Dimension(format!(
            "static embedding of length {} vs dimension {}",
            static_vec.len(),
            field.dim
        )));
    }
    let labels = (0..field.n_points())
        .map(|i| distance(&field.vector(i), static_vec) > threshold)
        .collect();
    Ok(SegmentationMask {
        labels,
        threshold,
        static_embedding: static_vec.to_vec(),
    })
}
