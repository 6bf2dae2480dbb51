//! Triplet scoring functions.
//!
//! All decoders produce a raw score that is squashed by the logistic
//! function, so they share one binary cross-entropy objective.
//!
//! - DistMult: `Σ_k h_s[k] · r[k] · h_d[k]`
//! - TransE: `γ - ‖h_s + r - h_d‖₂`
//! - HolE: `rᵀ (h_s ⋆ h_d)` with circular correlation
//!   `(a ⋆ b)[k] = Σ_i a[i] · b[(i + k) mod d]`

use ndarray::{Array2, ArrayView1};

use super::{DecoderKind, GaeParams, Triplet};
use crate::optim::logistic;

pub fn raw_score(kind: DecoderKind, margin: f64, src: ArrayView1<f64>, rel: ArrayView1<f64>, dst: ArrayView1<f64>) -> f64 {
    let d = src.len();
    match kind {
        // grouping src·dst first keeps the score bitwise symmetric
        DecoderKind::DistMult => (0..d).map(|k| rel[k] * (src[k] * dst[k])).sum(),
        DecoderKind::TransE => {
            let sq: f64 = (0..d).map(|k| (src[k] + rel[k] - dst[k]).powi(2)).sum();
            margin - sq.sqrt()
        }
        DecoderKind::HolE => (0..d)
            .map(|k| rel[k] * (0..d).map(|i| src[i] * dst[(i + k) % d]).sum::<f64>())
            .sum(),
    }
}

/// Accumulates `scale · ∂raw/∂(src, rel, dst)` into the three output slices.
#[allow(clippy::too_many_arguments)]
pub fn raw_score_backward(
    kind: DecoderKind,
    src: ArrayView1<f64>,
    rel: ArrayView1<f64>,
    dst: ArrayView1<f64>,
    scale: f64,
    g_src: &mut [f64],
    g_rel: &mut [f64],
    g_dst: &mut [f64],
) {
    let d = src.len();
    match kind {
        DecoderKind::DistMult => {
            for k in 0..d {
                g_src[k] += scale * rel[k] * dst[k];
                g_rel[k] += scale * src[k] * dst[k];
                g_dst[k] += scale * src[k] * rel[k];
            }
        }
        DecoderKind::TransE => {
            let diff: Vec<f64> = (0..d).map(|k| src[k] + rel[k] - dst[k]).collect();
            let norm = diff.iter().map(|v| v * v).sum::<f64>().sqrt();
            if norm == 0.0 {
                return;
            }
            for k in 0..d {
                let g = scale * diff[k] / norm;
                g_src[k] -= g;
                g_rel[k] -= g;
                g_dst[k] += g;
            }
        }
        DecoderKind::HolE => {
            for k in 0..d {
                let mut corr = 0.0;
                for i in 0..d {
                    let j = (i + k) % d;
                    corr += src[i] * dst[j];
                    g_src[i] += scale * rel[k] * dst[j];
                    g_dst[j] += scale * rel[k] * src[i];
                }
                g_rel[k] += scale * corr;
            }
        }
    }
}

/// Probability that `t` is a true triplet, given encoded node features `h`.
pub fn score_triplet(params: &GaeParams, h: &Array2<f64>, t: &Triplet) -> f64 {
    logistic(raw_score(
        params.decoder,
        params.margin,
        h.row(t.src),
        params.relations.row(t.rel.index()),
        h.row(t.dst),
    ))
}
