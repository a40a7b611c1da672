//! Classification metrics and reference classifiers for judging embeddings.
//!
//! The embedding claims to expose latent classes; these helpers quantify
//! that. `multinomial_separability` fits a softmax regression on two
//! summary features and reports training accuracy (how linearly separable
//! the classes are in the embedded plane), `knn_predict` and
//! `adjacency_vote` are the non-parametric baselines, and `assortativity`
//! measures how much the raw topology already gives away.

use crate::error::{Error, Result};

/// Stable class id assignment in first-appearance order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelIndex {
    levels: Vec<String>,
}

impl LabelIndex {
    /// Index labels, returning the mapping and one id per input label.
    pub fn build<S: AsRef<str>>(labels: &[S]) -> (LabelIndex, Vec<usize>) {
        let mut levels: Vec<String> = Vec::new();
        let ids = labels
            .iter()
            .map(|l| {
                let l = l.as_ref();
                match levels.iter().position(|x| x == l) {
                    Some(i) => i,
                    None => {
                        levels.push(l.to_string());
                        levels.len() - 1
                    }
                }
            })
            .collect();
        (LabelIndex { levels }, ids)
    }

    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn name(&self, id: usize) -> &str {
        &self.levels[id]
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.levels.iter().position(|x| x == name)
    }
}

/// How to combine true positives into an F1 denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum F1Variant {
    /// Harmonic mean of precision and recall: `2 TP / (2 TP + FP + FN)`.
    Standard,
    /// `2 TP / (TP + FP + FN)`; can exceed one. Kept for comparing against
    /// older reported numbers that used this form.
    Unhalved,
}

/// Row = true class, column = predicted class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConfusionMatrix {
    counts: Vec<u64>,
    classes: usize,
}

impl ConfusionMatrix {
    pub fn new(classes: usize) -> ConfusionMatrix {
        ConfusionMatrix { counts: vec![0; classes * classes], classes }
    }

    /// Two-class matrix with class 1 as the positive class.
    pub fn binary(tp: u64, tn: u64, fp: u64, fn_: u64) -> ConfusionMatrix {
        let mut m = ConfusionMatrix::new(2);
        m.counts[0] = tn;
        m.counts[1] = fp;
        m.counts[2] = fn_;
        m.counts[3] = tp;
        m
    }

    pub fn from_pairs(truth: &[usize], predicted: &[usize], classes: usize) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::InvalidParameter(format!(
                "{} true labels vs {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let mut m = ConfusionMatrix::new(classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            m.record(t, p);
        }
        Ok(m)
    }

    pub fn record(&mut self, truth: usize, predicted: usize) {
        assert!(truth < self.classes && predicted < self.classes);
        self.counts[truth * self.classes + predicted] += 1;
    }

    pub fn count(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth * self.classes + predicted]
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    fn row_sum(&self, c: usize) -> u64 {
        (0..self.classes).map(|p| self.count(c, p)).sum()
    }

    fn col_sum(&self, c: usize) -> u64 {
        (0..self.classes).map(|t| self.count(t, c)).sum()
    }

    pub fn metrics(&self) -> Metrics {
        self.metrics_with(F1Variant::Standard)
    }

    /// Undefined quantities (empty matrix, no support, chance agreement of
    /// one) come back as `None` rather than NaN.
    pub fn metrics_with(&self, f1: F1Variant) -> Metrics {
        let total = self.total();
        let accuracy = (total > 0).then(|| {
            let correct: u64 = (0..self.classes).map(|c| self.count(c, c)).sum();
            correct as f64 / total as f64
        });

        let recalls: Vec<f64> = (0..self.classes)
            .filter(|&c| self.row_sum(c) > 0)
            .map(|c| self.count(c, c) as f64 / self.row_sum(c) as f64)
            .collect();
        let balanced_accuracy =
            (!recalls.is_empty()).then(|| recalls.iter().sum::<f64>() / recalls.len() as f64);

        let f1_of = |positive: usize| -> Option<f64> {
            let tp = self.count(positive, positive);
            let fp = self.col_sum(positive) - tp;
            let fn_ = self.row_sum(positive) - tp;
            let denom = match f1 {
                F1Variant::Standard => 2 * tp + fp + fn_,
                F1Variant::Unhalved => tp + fp + fn_,
            };
            (denom > 0).then(|| 2.0 * tp as f64 / denom as f64)
        };
        let f1 = if self.classes == 2 {
            f1_of(1)
        } else {
            let scores: Vec<f64> = (0..self.classes).filter_map(f1_of).collect();
            (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64)
        };

        let kappa = accuracy.and_then(|p_o| {
            let t = total as f64;
            let p_e: f64 = (0..self.classes)
                .map(|c| (self.row_sum(c) as f64 / t) * (self.col_sum(c) as f64 / t))
                .sum();
            (p_e < 1.0).then(|| (p_o - p_e) / (1.0 - p_e))
        });

        Metrics { accuracy, balanced_accuracy, f1, kappa }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Metrics {
    pub accuracy: Option<f64>,
    /// Mean per-class recall over classes that actually occur.
    pub balanced_accuracy: Option<f64>,
    /// Binary: F1 of class 1. Multi-class: macro average.
    pub f1: Option<f64>,
    /// Cohen's kappa.
    pub kappa: Option<f64>,
}

fn check_points<T>(points: &[T], labels: &[usize]) -> Result<usize> {
    if points.is_empty() {
        return Err(Error::EmptyInput("points"));
    }
    if points.len() != labels.len() {
        return Err(Error::InvalidParameter(format!(
            "{} points vs {} labels",
            points.len(),
            labels.len()
        )));
    }
    let classes = labels.iter().max().unwrap() + 1;
    if classes < 2 {
        return Err(Error::SingleClass);
    }
    Ok(classes)
}

/// Training accuracy of a softmax regression on two features.
///
/// Features are standardized, a bias is added, and full-batch gradient
/// descent (rate 1/2) runs until the gradient norm drops below 1e-6 or
/// 10^4 epochs pass. Argmax ties go to the smallest class id, so two
/// coincident points of different classes can contribute at most one hit.
/// The fitted optimum is affine-equivariant, so any nondegenerate affine
/// remap of the plane leaves the returned accuracy essentially unchanged.
pub fn multinomial_separability(points: &[[f64; 2]], labels: &[usize]) -> Result<f64> {
    let classes = check_points(points, labels)?;
    let n = points.len();

    let mut features = vec![[1.0f64; 3]; n];
    for j in 0..2 {
        let mean = points.iter().map(|p| p[j]).sum::<f64>() / n as f64;
        let var = points.iter().map(|p| (p[j] - mean).powi(2)).sum::<f64>() / n as f64;
        let sd = var.sqrt();
        for (f, p) in features.iter_mut().zip(points) {
            f[j + 1] = if sd > 0.0 { (p[j] - mean) / sd } else { 0.0 };
        }
    }

    let mut weights = vec![[0.0f64; 3]; classes];
    let mut probs = vec![0.0f64; classes];
    for _ in 0..10_000 {
        let mut grad = vec![[0.0f64; 3]; classes];
        for (x, &y) in features.iter().zip(labels) {
            softmax_into(&weights, x, &mut probs);
            for (c, p) in probs.iter().enumerate() {
                let err = p - if c == y { 1.0 } else { 0.0 };
                for j in 0..3 {
                    grad[c][j] += err * x[j] / n as f64;
                }
            }
        }
        let norm: f64 =
            grad.iter().flatten().map(|g| g * g).sum::<f64>().sqrt();
        if norm < 1e-6 {
            break;
        }
        for (w, g) in weights.iter_mut().zip(&grad) {
            for j in 0..3 {
                w[j] -= 0.5 * g[j];
            }
        }
    }

    let correct = features
        .iter()
        .zip(labels)
        .filter(|(x, &y)| argmax_class(&weights, x) == y)
        .count();
    Ok(correct as f64 / n as f64)
}

fn softmax_into(weights: &[[f64; 3]], x: &[f64; 3], out: &mut [f64]) {
    let mut max = f64::NEG_INFINITY;
    for (o, w) in out.iter_mut().zip(weights) {
        *o = w[0] * x[0] + w[1] * x[1] + w[2] * x[2];
        max = max.max(*o);
    }
    let mut sum = 0.0;
    for o in out.iter_mut() {
        *o = (*o - max).exp();
        sum += *o;
    }
    for o in out.iter_mut() {
        *o /= sum;
    }
}

fn argmax_class(weights: &[[f64; 3]], x: &[f64; 3]) -> usize {
    let mut best = 0usize;
    let mut best_logit = f64::NEG_INFINITY;
    for (c, w) in weights.iter().enumerate() {
        let logit = w[0] * x[0] + w[1] * x[1] + w[2] * x[2];
        if logit > best_logit {
            best_logit = logit;
            best = c;
        }
    }
    best
}

/// Leave-one-out k-nearest-neighbour predictions (Euclidean, brute force).
///
/// Neighbour order breaks distance ties by index; vote ties go to the class
/// with the nearest tied-class neighbour, then to the smallest class id.
pub fn knn_predict(points: &[Vec<f64>], labels: &[usize], k: usize) -> Result<Vec<usize>> {
    check_points(points, labels)?;
    let n = points.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidParameter(format!(
            "k = {k} with {n} points (need 1 <= k < n)"
        )));
    }
    let dim = points[0].len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidParameter("points of mixed dimension".into()));
    }

    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut near: Vec<(f64, usize)> = (0..n)
            .filter(|&j| j != i)
            .map(|j| {
                let d2: f64 = points[i]
                    .iter()
                    .zip(&points[j])
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                (d2, j)
            })
            .collect();
        near.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        near.truncate(k);

        let mut votes = std::collections::BTreeMap::new();
        for &(_, j) in &near {
            *votes.entry(labels[j]).or_insert(0usize) += 1;
        }
        let top = *votes.values().max().unwrap();
        let winner = votes
            .iter()
            .filter(|(_, &v)| v == top)
            .map(|(&class, _)| {
                let nearest = near
                    .iter()
                    .find(|&&(_, j)| labels[j] == class)
                    .expect("class has a voter");
                (nearest.0, class)
            })
            .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)))
            .map(|(_, class)| class)
            .unwrap();
        out.push(winner);
    }
    Ok(out)
}

/// Majority vote over each node's labelled neighbours; `None` where no
/// neighbour is labelled. Vote ties go to the smallest class id.
pub fn adjacency_vote(
    nodes: usize,
    edges: &[(u32, u32)],
    known: &[Option<usize>],
) -> Vec<Option<usize>> {
    assert_eq!(known.len(), nodes);
    let mut neighbour_votes: Vec<std::collections::BTreeMap<usize, usize>> =
        vec![std::collections::BTreeMap::new(); nodes];
    for &(u, v) in edges {
        if let Some(l) = known[v as usize] {
            *neighbour_votes[u as usize].entry(l).or_insert(0) += 1;
        }
        if let Some(l) = known[u as usize] {
            *neighbour_votes[v as usize].entry(l).or_insert(0) += 1;
        }
    }
    neighbour_votes
        .into_iter()
        .map(|votes| {
            let top = votes.values().copied().max()?;
            votes.into_iter().find(|&(_, v)| v == top).map(|(c, _)| c)
        })
        .collect()
}

/// Discrete assortativity of a labelling over an edge list: +1 when edges
/// only join like classes, 0 when mixing matches the label frequencies at
/// the edge ends, negative when unlike classes attract.
pub fn assortativity(edges: &[(u32, u32)], labels: &[usize]) -> Result<f64> {
    if edges.is_empty() {
        return Err(Error::EmptyInput("edges"));
    }
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut ends = vec![0u64; classes * classes];
    for &(u, v) in edges {
        let (a, b) = (labels[u as usize], labels[v as usize]);
        ends[a * classes + b] += 1;
        ends[b * classes + a] += 1;
    }
    let total = (2 * edges.len()) as f64;
    let trace: f64 =
        (0..classes).map(|c| ends[c * classes + c] as f64 / total).sum();
    let squares: f64 = (0..classes)
        .map(|c| {
            let margin: u64 = (0..classes).map(|d| ends[c * classes + d]).sum();
            (margin as f64 / total).powi(2)
        })
        .sum();
    if squares >= 1.0 {
        return Err(Error::SingleClass);
    }
    Ok((trace - squares) / (1.0 - squares))
}
