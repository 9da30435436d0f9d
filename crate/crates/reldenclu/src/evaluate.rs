//! Recovery metrics, significance testing and report formatting.
//!
//! Biclusters are compared to planted truths through binary membership
//! matrices, to external class labels through best-polarity agreement,
//! and to each other across methods via a paired t test whose tail
//! probability is computed here from scratch.

use serde::Serialize;

use crate::model::{membership_matrix, Bicluster, Error, MembershipMatrix};

/// Fraction of cells on which two same-shaped membership matrices agree.
///
/// # Errors
///
/// Fails if the shapes differ.
pub fn accuracy(a: &MembershipMatrix, b: &MembershipMatrix) -> Result<f64, Error> {
    let agree = a.agreement(b)?;
    Ok(agree as f64 / (a.n_rows() * a.n_cols()) as f64)
}

/// Index and score of the bicluster closest to a truth.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BestMatch {
    pub index: usize,
    pub accuracy: f64,
}

/// Finds the bicluster with the highest membership accuracy against a
/// truth; ties keep the earliest.
///
/// # Errors
///
/// Fails on an empty list or indices outside the stated shape.
pub fn best_match(
    list: &[Bicluster],
    truth: &Bicluster,
    n_rows: usize,
    n_cols: usize,
) -> Result<BestMatch, Error> {
    if list.is_empty() {
        return Err(Error::EmptyBiclusterList);
    }
    let truth_m = membership_matrix(truth, n_rows, n_cols)?;
    let mut best = BestMatch {
        index: 0,
        accuracy: f64::NEG_INFINITY,
    };
    for (i, b) in list.iter().enumerate() {
        let score = accuracy(&membership_matrix(b, n_rows, n_cols)?, &truth_m)?;
        if score > best.accuracy {
            best = BestMatch {
                index: i,
                accuracy: score,
            };
        }
    }
    Ok(best)
}

/// Agreement between a binary membership vector and binary class
/// labels under the better of the two polarities: with `a` agreements
/// out of `n`, returns `max(a, n - a) / n`.
///
/// # Errors
///
/// Fails on mismatched lengths or empty input.
pub fn class_match_accuracy(membership: &[bool], labels: &[bool]) -> Result<f64, Error> {
    if membership.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} membership flags vs {} labels",
            membership.len(),
            labels.len()
        )));
    }
    if membership.is_empty() {
        return Err(Error::TooFewValues { found: 0 });
    }
    let agree = membership
        .iter()
        .zip(labels)
        .filter(|(m, l)| m == l)
        .count();
    let n = membership.len();
    Ok(agree.max(n - agree) as f64 / n as f64)
}

/// Precision, recall and their geometric mean for one class; a metric
/// is absent when its denominator is zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub gscore: Option<f64>,
}

/// Two-class evaluation of a membership vector against labels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct TwoClassReport {
    /// Whether the membership polarity was flipped to maximise agreement.
    pub flipped: bool,
    pub match_accuracy: f64,
    /// Metrics for predicting the labelled class.
    pub in_class: ClassMetrics,
    /// Metrics for predicting the complement class.
    pub out_class: ClassMetrics,
}

/// Scores a membership vector against binary labels, first choosing
/// the polarity that maximises agreement (ties keep the original).
///
/// # Errors
///
/// Same conditions as [`class_match_accuracy`].
pub fn precision_recall_gscore(
    membership: &[bool],
    labels: &[bool],
) -> Result<TwoClassReport, Error> {
    let match_accuracy = class_match_accuracy(membership, labels)?;
    let n = membership.len();
    let agree = membership
        .iter()
        .zip(labels)
        .filter(|(m, l)| m == l)
        .count();
    let flipped = n - agree > agree;

    let (mut tp, mut fp, mut fn_, mut tn) = (0usize, 0usize, 0usize, 0usize);
    for (&m, &l) in membership.iter().zip(labels) {
        match (m != flipped, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    fn metrics(tp: usize, fp: usize, fn_: usize) -> ClassMetrics {
        let precision = (tp + fp > 0).then(|| tp as f64 / (tp + fp) as f64);
        let recall = (tp + fn_ > 0).then(|| tp as f64 / (tp + fn_) as f64);
        let gscore = match (precision, recall) {
            (Some(p), Some(r)) => Some((p * r).sqrt()),
            _ => None,
        };
        ClassMetrics {
            precision,
            recall,
            gscore,
        }
    }
    Ok(TwoClassReport {
        flipped,
        match_accuracy,
        in_class: metrics(tp, fp, fn_),
        out_class: metrics(tn, fn_, fp),
    })
}

/// Natural log of the gamma function (Lanczos approximation, g = 7).
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 8] = [
        676.5203681218851,
        -1259.1392167224028,
        771.3234287776531,
        -176.6150291621406,
        12.507343278686905,
        -0.13857109526572012,
        9.984369578019572e-6,
        1.5056327351493116e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = 0.9999999999998099;
    for (i, &c) in COEFFS.iter().enumerate() {
        acc += c / (x + i as f64 + 1.0);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// Continued fraction for the regularized incomplete beta (Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 3e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=300 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularized incomplete beta function `I_x(a, b)`.
fn inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = a * x.ln() + b * (1.0 - x).ln() + ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b);
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Right-tail probability `P(T > t)` of the Student t distribution
/// with `dof` degrees of freedom; `dof` must be at least 1.
pub fn t_tail(t: f64, dof: usize) -> f64 {
    debug_assert!(dof >= 1);
    if t.is_nan() {
        return f64::NAN;
    }
    if t < 0.0 {
        return 1.0 - t_tail(-t, dof);
    }
    if t.is_infinite() {
        return 0.0;
    }
    let v = dof as f64;
    let x = v / (v + t * t);
    0.5 * inc_beta(v / 2.0, 0.5, x)
}

/// Result of a paired t test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PairedTTest {
    pub t: f64,
    /// Right-tail probability of observing a larger statistic.
    pub p: f64,
    pub dof: usize,
}

/// Paired t test on two equally long runs of scores, testing whether
/// `a` exceeds `b` on average.
///
/// # Errors
///
/// Fails on mismatched or too-short inputs, and with
/// [`Error::ZeroVariance`] when all differences are identical.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<PairedTTest, Error> {
    if a.len() != b.len() || a.len() < 2 {
        return Err(Error::BadSamplePair);
    }
    let n = a.len() as f64;
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let mean = diffs.iter().sum::<f64>() / n;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1.0);
    if var == 0.0 {
        return Err(Error::ZeroVariance);
    }
    let t = mean / (var / n).sqrt();
    let dof = a.len() - 1;
    Ok(PairedTTest {
        t,
        p: t_tail(t, dof),
        dof,
    })
}

/// Best match between biclusters and the items above an indicator
/// percentile.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PercentileMatch {
    pub index: usize,
    pub accuracy: f64,
    pub threshold: f64,
}

/// Thresholds an indicator at the nearest-rank percentile (members are
/// the items strictly above it) and finds the bicluster whose row set
/// best matches that membership.
///
/// # Errors
///
/// Fails on an empty list, an empty indicator, a percentile outside
/// `(0, 100]`, or observation indices beyond the indicator length.
pub fn percentile_match(
    list: &[Bicluster],
    indicator: &[f64],
    percentile: f64,
) -> Result<PercentileMatch, Error> {
    if !(percentile > 0.0 && percentile <= 100.0) {
        return Err(Error::InvalidParameter {
            name: "percentile",
            reason: format!("{percentile} not in (0, 100]"),
        });
    }
    if indicator.is_empty() {
        return Err(Error::TooFewValues { found: 0 });
    }
    if list.is_empty() {
        return Err(Error::EmptyBiclusterList);
    }
    let n = indicator.len();
    let mut sorted = indicator.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let rank = ((percentile / 100.0 * n as f64).ceil() as usize).max(1);
    let threshold = sorted[rank - 1];
    let members: Vec<bool> = indicator.iter().map(|&v| v > threshold).collect();

    let mut best: Option<PercentileMatch> = None;
    for (i, b) in list.iter().enumerate() {
        let mut membership = vec![false; n];
        for &r in &b.observations {
            if r >= n {
                return Err(Error::IndexOutOfRange {
                    what: format!("observation {r} with {n} indicator values"),
                });
            }
            membership[r] = true;
        }
        let score = class_match_accuracy(&membership, &members)?;
        if best.is_none_or(|b| score > b.accuracy) {
            best = Some(PercentileMatch {
                index: i,
                accuracy: score,
                threshold,
            });
        }
    }
    Ok(best.expect("list checked non-empty"))
}

/// Binary observations-by-biclusters matrix: cell `(r, k)` is 1 when
/// row `r` belongs to bicluster `k`.
///
/// # Errors
///
/// Fails when an observation index is out of range.
pub fn export_membership_features(
    list: &[Bicluster],
    n_rows: usize,
) -> Result<Vec<Vec<u8>>, Error> {
    let mut out = vec![vec![0u8; list.len()]; n_rows];
    for (k, b) in list.iter().enumerate() {
        for &r in &b.observations {
            if r >= n_rows {
                return Err(Error::IndexOutOfRange {
                    what: format!("observation {r} in a matrix with {n_rows} rows"),
                });
            }
            out[r][k] = 1;
        }
    }
    Ok(out)
}

/// Mean and sample standard deviation; the deviation of fewer than two
/// values is zero.
pub fn mean_and_deviation(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Aggregated recovery scores for one dataset family.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FamilySummary {
    pub family: String,
    pub runs: usize,
    pub mean: f64,
    pub deviation: f64,
}

impl FamilySummary {
    pub fn from_scores(family: &str, scores: &[f64]) -> Self {
        let (mean, deviation) = mean_and_deviation(scores);
        FamilySummary {
            family: family.to_string(),
            runs: scores.len(),
            mean,
            deviation,
        }
    }
}

/// Renders summaries as an aligned text table.
pub fn summary_table(rows: &[FamilySummary]) -> String {
    let width = rows
        .iter()
        .map(|r| r.family.len())
        .chain(std::iter::once("family".len()))
        .max()
        .unwrap_or(6);
    let mut out = format!(
        "{:<width$}  {:>4}  {:>8}  {:>9}\n",
        "family", "runs", "mean", "deviation"
    );
    out.push_str(&format!("{}\n", "-".repeat(width + 27)));
    for r in rows {
        out.push_str(&format!(
            "{:<width$}  {:>4}  {:>8.4}  {:>9.4}\n",
            r.family, r.runs, r.mean, r.deviation
        ));
    }
    out
}
