//! Scale-free topology classifier.
//!
//! The degree distribution comes from one global sort of the arc list by
//! source plus a boundary-aware run count; local histograms are merged with an
//! elementwise-sum reduction. A discrete power law is then fitted with the
//! Clauset-style maximum-likelihood exponent over a scanned x_min, the
//! goodness of fit is the Kolmogorov-Smirnov distance between the empirical
//! tail CDF and the zeta-normalized model CDF, and the graph counts as
//! scale-free iff that distance is below the threshold tau. The fit runs
//! sequentially and identically on every rank; only the histogram is
//! distributed.

use std::collections::BTreeMap;

use crate::buckets::resolve_runs;
use crate::graph::EdgeList;
use crate::psort::samplesort;
use crate::team::{ScanOperator, TeamContext};

/// Degree -> vertex count. Degrees count arc multiplicity: parallel edges and
/// self-loops each contribute.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DegreeHistogram {
    pub counts: BTreeMap<u64, u64>,
}

impl DegreeHistogram {
    pub fn vertex_total(&self) -> u64 {
        self.counts.values().sum()
    }

    pub fn max_degree(&self) -> u64 {
        self.counts.keys().next_back().copied().unwrap_or(0)
    }

    /// Sum of degree * count; equals the global arc count (2m).
    pub fn arc_total(&self) -> u64 {
        self.counts.iter().map(|(d, c)| d * c).sum()
    }
}

/// Sorts arcs by source and counts run lengths, resolving runs that span
/// rank boundaries; every rank ends with the identical global histogram.
pub fn degree_histogram(ctx: &mut TeamContext, edges: &EdgeList) -> DegreeHistogram {
    let srcs: Vec<u64> = edges.arcs.iter().map(|e| e.src.0).collect();
    let sorted = samplesort(ctx, srcs, |v| *v);
    let runs = resolve_runs(ctx, &sorted, |v| *v, |_| 1u64, |a, b| a + b);
    let mut local: BTreeMap<u64, u64> = BTreeMap::new();
    for run in &runs {
        if run.owns_start {
            *local.entry(run.agg).or_insert(0) += 1;
        }
    }
    let merge = ScanOperator::new(BTreeMap::new(), |a: &BTreeMap<u64, u64>, b: &BTreeMap<u64, u64>| {
        let mut out = a.clone();
        for (&d, &c) in b {
            *out.entry(d).or_insert(0) += c;
        }
        out
    });
    DegreeHistogram {
        counts: ctx.all_reduce(local, &merge),
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerLawFit {
    pub alpha: f64,
    pub x_min: u64,
    /// sup over x >= x_min of |empirical CDF - model CDF| on the tail.
    pub ks_stat: f64,
    pub tail_size: u64,
}

/// Scale-free iff the fit's K-S statistic is strictly below tau.
pub fn classify_scale_free(fit: &PowerLawFit, tau: f64) -> bool {
    fit.ks_stat < tau
}

/// Hurwitz zeta sum_{k>=0} (a+k)^-s for s > 1, by direct summation with
/// Euler-Maclaurin tail correction; absolute error well below 1e-10 over the
/// exponents the fit produces.
pub fn hurwitz_zeta(s: f64, a: f64) -> f64 {
    debug_assert!(s > 1.0 && a >= 0.5);
    const CUTOFF: u32 = 64;
    let mut sum = 0.0;
    for k in 0..CUTOFF {
        sum += (a + k as f64).powf(-s);
    }
    let n = a + CUTOFF as f64;
    sum += n.powf(1.0 - s) / (s - 1.0);
    sum += n.powf(-s) / 2.0;
    sum += s * n.powf(-s - 1.0) / 12.0;
    sum -= s * (s + 1.0) * (s + 2.0) * n.powf(-s - 3.0) / 720.0;
    sum += s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * n.powf(-s - 5.0) / 30240.0;
    sum
}

// Keep at least this many tail samples when scanning x_min candidates.
const MIN_TAIL_SAMPLES: u64 = 50;
// Candidate x_min values stop at this quantile of the distinct degrees.
const X_MIN_QUANTILE: f64 = 0.95;

/// K-S distance between the empirical tail CDF and the discrete power-law
/// model CDF, evaluated at every integer in [x_min, max_degree]. The model
/// keeps mass above max_degree, so a spike distribution scores poorly.
fn ks_distance(tail: &[(u64, u64)], n_tail: u64, alpha: f64, x_min: u64) -> f64 {
    let zeta_xmin = hurwitz_zeta(alpha, x_min as f64);
    let max_degree = tail.last().unwrap().0;
    let mut zeta_x = zeta_xmin;
    let mut cumulative = 0u64;
    let mut next = 0usize;
    let mut ks: f64 = 0.0;
    for x in x_min..=max_degree {
        if next < tail.len() && tail[next].0 == x {
            cumulative += tail[next].1;
            next += 1;
        }
        zeta_x -= (x as f64).powf(-alpha); // now zeta(alpha, x+1)
        let empirical = cumulative as f64 / n_tail as f64;
        let model = 1.0 - zeta_x / zeta_xmin;
        ks = ks.max((empirical - model).abs());
    }
    ks
}

/// Fits alpha for one x_min with the discrete MLE approximation
/// alpha = 1 + N / sum count(x) * ln(x / (x_min - 1/2)).
fn fit_at(tail: &[(u64, u64)], x_min: u64) -> Option<PowerLawFit> {
    let n_tail: u64 = tail.iter().map(|&(_, c)| c).sum();
    if n_tail == 0 {
        return None;
    }
    let shift = x_min as f64 - 0.5;
    let denom: f64 = tail
        .iter()
        .map(|&(x, c)| c as f64 * (x as f64 / shift).ln())
        .sum();
    if denom.is_nan() || denom <= 0.0 {
        return None;
    }
    let alpha = 1.0 + n_tail as f64 / denom;
    if !alpha.is_finite() || alpha <= 1.0 {
        return None;
    }
    Some(PowerLawFit {
        alpha,
        x_min,
        ks_stat: ks_distance(tail, n_tail, alpha, x_min),
        tail_size: n_tail,
    })
}

/// Clauset-style fit: scan x_min over the distinct degrees (capped at the
/// 95th percentile, keeping at least 50 tail samples), take the discrete MLE
/// exponent at each, and return the fit minimizing the K-S statistic.
///
/// A histogram with a single distinct degree is degenerate; by convention it
/// returns ks_stat = 1.0 (worst fit), so constant-degree graphs are never
/// classified scale-free.
pub fn fit_power_law(hist: &DegreeHistogram) -> PowerLawFit {
    let degrees: Vec<(u64, u64)> = hist
        .counts
        .iter()
        .filter(|&(&d, _)| d >= 1)
        .map(|(&d, &c)| (d, c))
        .collect();
    let degenerate = PowerLawFit {
        alpha: f64::INFINITY,
        x_min: degrees.first().map(|&(d, _)| d).unwrap_or(0),
        ks_stat: 1.0,
        tail_size: degrees.iter().map(|&(_, c)| c).sum(),
    };
    if degrees.len() <= 1 {
        return degenerate;
    }

    let cap_index = (X_MIN_QUANTILE * (degrees.len() - 1) as f64).floor() as usize;
    let total: u64 = degrees.iter().map(|&(_, c)| c).sum();
    let mut best: Option<PowerLawFit> = None;
    let mut seen_before = 0u64;
    for (i, &(x_min, _)) in degrees.iter().enumerate() {
        let tail_size = total - seen_before;
        seen_before += degrees[i].1;
        if i > cap_index {
            break;
        }
        if tail_size < MIN_TAIL_SAMPLES && best.is_some() {
            break;
        }
        if let Some(fit) = fit_at(&degrees[i..], x_min) {
            if best.as_ref().is_none_or(|b| fit.ks_stat < b.ks_stat) {
                best = Some(fit);
            }
        }
    }
    best.unwrap_or(degenerate)
}
