//! Brute-force references for the detectors and their scalar kernels.
//!
//! [`quadrature`] integrates every scalar moment numerically; [`exact`]
//! enumerates activity patterns for small unquantized systems and provides a
//! sampled reference for quantized ones.

pub mod exact;
pub mod quadrature;

pub use exact::{exact_llr_unquantized, exact_posterior_unquantized, sampled_llr_quantized, ExactPosterior};
pub use quadrature::{
    integrate, quadrature_coord_llr, quadrature_denoise, quadrature_interval_mass, quadrature_truncated_moments,
    QuadOptions,
};

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let mid = 0.5 * (i + j) as f64;
        for &k in &order[i..=j] {
            ranks[k] = mid;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman rank correlation with mid-ranks for ties; `NaN` if either side is constant.
pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len(), "spearman inputs differ in length");
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let (mut cov, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    cov / (va * vb).sqrt()
}

/// Area under the ROC curve of `scores` for binary `labels` (Mann–Whitney
/// form, ties count ½); `NaN` without both classes.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> f64 {
    assert_eq!(scores.len(), labels.len(), "roc_auc inputs differ in length");
    let r = ranks(scores);
    let pos = labels.iter().filter(|l| **l).count() as f64;
    let neg = labels.len() as f64 - pos;
    let rank_sum: f64 = r.iter().zip(labels).filter(|(_, l)| **l).map(|(r, _)| r + 1.0).sum();
    (rank_sum - pos * (pos + 1.0) / 2.0) / (pos * neg)
}
