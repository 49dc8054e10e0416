//! Zero-shot classification by nearest prototype in the attribute space.

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::model::TrainedModel;

/// Distance used for prototype matching. Cosine distance is
/// `1 - cosine similarity`; a zero vector is treated as maximally distant.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistanceMetric {
    Cosine,
    Euclidean,
}

/// Class prototypes living in the attribute space, one column per class.
#[derive(Debug, Clone)]
pub struct PrototypeSet {
    labels: Vec<String>,
    prototypes: DenseMatrix,
}

impl PrototypeSet {
    /// Labels must be unique and match the prototype column count.
    pub fn new(labels: Vec<String>, prototypes: DenseMatrix) -> Result<Self> {
        if labels.is_empty() || prototypes.cols() == 0 {
            return Err(Error::EmptyPrototypes);
        }
        if labels.len() != prototypes.cols() {
            return Err(Error::LengthMismatch {
                op: "prototype labels",
                left: labels.len(),
                right: prototypes.cols(),
            });
        }
        for (i, label) in labels.iter().enumerate() {
            if labels[..i].contains(label) {
                return Err(Error::InvalidArgument {
                    op: "prototype labels",
                    message: format!("duplicate label `{label}`"),
                });
            }
        }
        Ok(Self { labels, prototypes })
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn prototypes(&self) -> &DenseMatrix {
        &self.prototypes
    }

    pub fn class_count(&self) -> usize {
        self.labels.len()
    }

    fn has_zero_column(&self) -> Option<usize> {
        (0..self.prototypes.cols())
            .find(|&j| (0..self.prototypes.rows()).all(|i| self.prototypes[(i, j)] == 0.0))
    }
}

fn cosine_distance(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        return 1.0;
    }
    1.0 - dot / (na * nb)
}

fn euclidean_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Encodes each test column into the attribute space and assigns the label
/// of the nearest prototype; ties resolve to the lowest prototype index.
pub fn classify(
    model: &TrainedModel,
    x_new: &DenseMatrix,
    protos: &PrototypeSet,
    metric: DistanceMetric,
) -> Result<Vec<String>> {
    if protos.prototypes.rows() != model.attribute_dim() {
        return Err(Error::ShapeMismatch {
            op: "classify",
            left: (model.attribute_dim(), model.behavior_dim()),
            right: protos.prototypes.shape(),
        });
    }
    if metric == DistanceMetric::Cosine {
        if let Some(j) = protos.has_zero_column() {
            return Err(Error::InvalidArgument {
                op: "classify",
                message: format!(
                    "prototype column {j} is all-zero; cosine distance is undefined"
                ),
            });
        }
    }
    let encoded = model.encode(x_new)?;
    let proto_cols: Vec<Vec<f64>> = (0..protos.prototypes.cols())
        .map(|j| protos.prototypes.column(j))
        .collect();

    let mut out = Vec::with_capacity(encoded.cols());
    for col in 0..encoded.cols() {
        let point = encoded.column(col);
        let mut best = 0;
        let mut best_dist = f64::INFINITY;
        for (j, proto) in proto_cols.iter().enumerate() {
            let dist = match metric {
                DistanceMetric::Cosine => cosine_distance(&point, proto),
                DistanceMetric::Euclidean => euclidean_distance(&point, proto),
            };
            if dist < best_dist {
                best_dist = dist;
                best = j;
            }
        }
        out.push(protos.labels[best].clone());
    }
    Ok(out)
}

/// Fraction of positions where the two label sequences agree.
pub fn accuracy<T: PartialEq>(predicted: &[T], truth: &[T]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::LengthMismatch {
            op: "accuracy",
            left: predicted.len(),
            right: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(Error::InvalidArgument {
            op: "accuracy",
            message: "need at least one prediction".to_string(),
        });
    }
    let hits = predicted
        .iter()
        .zip(truth)
        .filter(|(p, t)| p == t)
        .count();
    Ok(hits as f64 / predicted.len() as f64)
}
