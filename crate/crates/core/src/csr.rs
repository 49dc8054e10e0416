//! Cold-start recommendation and ranking metrics.
//!
//! Cold users have attributes but no behavior history. Their item scores
//! come from decoding attributes back into the behavior space and squashing
//! through the logistic function; ranking the result gives top-k lists that
//! feed precision@k, recall@k and truncated mean average precision.

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::data::InteractionDataset;
use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;
use crate::model::{train, ModelConfig, Normalization, TrainedModel};

/// Ranked items for one user, best first. Scores are logistic-mapped and
/// non-increasing along the order; score ties are ordered by ascending item
/// index.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedList {
    /// Column index of the user within the evaluated batch.
    pub user_id: usize,
    pub item_indices: Vec<usize>,
    pub scores: Vec<f64>,
}

/// Held-out true interactions of one user.
#[derive(Debug, Clone)]
pub struct RelevanceSet {
    pub user_id: usize,
    pub relevant_items: HashSet<usize>,
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Scores every item for each attribute column and returns the `top_k`
/// highest-scoring items per user. The logistic map is monotone, so the
/// ordering is exactly the ordering of raw decoded scores.
pub fn recommend(
    model: &TrainedModel,
    s_new: &DenseMatrix,
    top_k: usize,
) -> Result<Vec<RankedList>> {
    let d = model.behavior_dim();
    if top_k == 0 {
        return Err(Error::InvalidArgument {
            op: "recommend",
            message: "top_k must be at least 1".to_string(),
        });
    }
    if top_k > d {
        return Err(Error::InvalidArgument {
            op: "recommend",
            message: format!("top_k {top_k} exceeds the item catalog size {d}"),
        });
    }
    let decoded = model.decode(s_new)?;
    let mut out = Vec::with_capacity(decoded.cols());
    for user in 0..decoded.cols() {
        let mut order: Vec<usize> = (0..d).collect();
        order.sort_by(|&a, &b| {
            decoded[(b, user)]
                .total_cmp(&decoded[(a, user)])
                .then(a.cmp(&b))
        });
        order.truncate(top_k);
        let scores = order.iter().map(|&i| sigmoid(decoded[(i, user)])).collect();
        out.push(RankedList {
            user_id: user,
            item_indices: order,
            scores,
        });
    }
    Ok(out)
}

fn hits_in_top_k(ranked: &RankedList, rel: &RelevanceSet, k: usize) -> usize {
    ranked.item_indices[..k]
        .iter()
        .filter(|i| rel.relevant_items.contains(i))
        .count()
}

/// `|top-k intersect relevant| / k`.
pub fn precision_at_k(ranked: &RankedList, rel: &RelevanceSet, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument {
            op: "precision_at_k",
            message: "k must be at least 1".to_string(),
        });
    }
    if ranked.item_indices.len() < k {
        return Err(Error::LengthMismatch {
            op: "precision_at_k",
            left: ranked.item_indices.len(),
            right: k,
        });
    }
    Ok(hits_in_top_k(ranked, rel, k) as f64 / k as f64)
}

/// `|top-k intersect relevant| / |relevant|`.
pub fn recall_at_k(ranked: &RankedList, rel: &RelevanceSet, k: usize) -> Result<f64> {
    if k == 0 {
        return Err(Error::InvalidArgument {
            op: "recall_at_k",
            message: "k must be at least 1".to_string(),
        });
    }
    if ranked.item_indices.len() < k {
        return Err(Error::LengthMismatch {
            op: "recall_at_k",
            left: ranked.item_indices.len(),
            right: k,
        });
    }
    if rel.relevant_items.is_empty() {
        return Err(Error::EmptyRelevance { user: rel.user_id });
    }
    Ok(hits_in_top_k(ranked, rel, k) as f64 / rel.relevant_items.len() as f64)
}

/// Result of a truncated mean-average-precision computation.
#[derive(Debug, Clone, PartialEq)]
pub struct MapResult {
    pub value: f64,
    /// Users that entered the mean.
    pub included_users: usize,
    /// Users dropped for having no relevant items.
    pub excluded_users: usize,
}

/// Mean over users of average precision truncated at rank `n`. Per user,
/// `AP@n = (sum over relevant hits at rank i <= n of precision@i) /
/// min(|relevant|, n)`. Users with empty relevance are excluded and
/// counted.
pub fn map_at_n(rankeds: &[RankedList], rels: &[RelevanceSet], n: usize) -> Result<MapResult> {
    if rankeds.len() != rels.len() {
        return Err(Error::LengthMismatch {
            op: "map_at_n",
            left: rankeds.len(),
            right: rels.len(),
        });
    }
    if n == 0 {
        return Err(Error::InvalidArgument {
            op: "map_at_n",
            message: "n must be at least 1".to_string(),
        });
    }
    let mut total = 0.0;
    let mut included = 0usize;
    let mut excluded = 0usize;
    for (ranked, rel) in rankeds.iter().zip(rels) {
        if rel.relevant_items.is_empty() {
            excluded += 1;
            continue;
        }
        let depth = n.min(ranked.item_indices.len());
        let mut hits = 0usize;
        let mut ap = 0.0;
        for (pos, item) in ranked.item_indices[..depth].iter().enumerate() {
            if rel.relevant_items.contains(item) {
                hits += 1;
                ap += hits as f64 / (pos + 1) as f64;
            }
        }
        ap /= rel.relevant_items.len().min(n) as f64;
        total += ap;
        included += 1;
    }
    if included == 0 {
        return Err(Error::NoIncludableUsers);
    }
    Ok(MapResult {
        value: total / included as f64,
        included_users: included,
        excluded_users: excluded,
    })
}

fn select_columns(m: &DenseMatrix, cols: &[usize]) -> DenseMatrix {
    let mut out = DenseMatrix::zeros(m.rows(), cols.len());
    for (dst, &src) in cols.iter().enumerate() {
        for i in 0..m.rows() {
            out[(i, dst)] = m[(i, src)];
        }
    }
    out
}

fn subset_dataset(ds: &InteractionDataset, cols: &[usize]) -> InteractionDataset {
    InteractionDataset {
        x: select_columns(&ds.x, cols),
        s: select_columns(&ds.s, cols),
        user_ids: cols.iter().map(|&j| ds.user_ids[j].clone()).collect(),
        item_ids: ds.item_ids.clone(),
        attribute_ids: ds.attribute_ids.clone(),
    }
}

/// User-level split into warm (training) and cold (test) users. Exactly
/// `floor(test_fraction * n)` users go to the test side, chosen uniformly
/// by the seeded generator; enumerating seeds produces independent folds.
pub fn cold_split(
    dataset: &InteractionDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(InteractionDataset, InteractionDataset)> {
    let n = dataset.num_users();
    if !(test_fraction.is_finite() && 0.0 < test_fraction && test_fraction < 1.0) {
        return Err(Error::InvalidArgument {
            op: "cold_split",
            message: format!("test_fraction must lie in (0, 1), got {test_fraction}"),
        });
    }
    if n < 2 {
        return Err(Error::DegenerateSplit {
            users: n,
            test_users: 0,
        });
    }
    let n_test = (test_fraction * n as f64).floor() as usize;
    if n_test == 0 || n_test >= n {
        return Err(Error::DegenerateSplit {
            users: n,
            test_users: n_test,
        });
    }

    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n_test {
        let j = rng.random_range(i..n);
        order.swap(i, j);
    }
    let mut test_cols: Vec<usize> = order[..n_test].to_vec();
    let mut train_cols: Vec<usize> = order[n_test..].to_vec();
    test_cols.sort_unstable();
    train_cols.sort_unstable();

    Ok((
        subset_dataset(dataset, &train_cols),
        subset_dataset(dataset, &test_cols),
    ))
}

/// Relevance sets for a held-out dataset: the non-zero behavior entries of
/// each user column.
pub fn relevance_from_behavior(ds: &InteractionDataset) -> Vec<RelevanceSet> {
    (0..ds.num_users())
        .map(|j| {
            let relevant_items = (0..ds.num_items())
                .filter(|&i| ds.x[(i, j)] != 0.0)
                .collect();
            RelevanceSet {
                user_id: j,
                relevant_items,
            }
        })
        .collect()
}

/// Candidate values for the tunable hyperparameters; the cross product is
/// searched exhaustively.
#[derive(Debug, Clone)]
pub struct ParamGrid {
    pub lambdas: Vec<f64>,
    pub betas: Vec<f64>,
    pub ranks: Vec<usize>,
}

impl ParamGrid {
    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty() || self.betas.is_empty() || self.ranks.is_empty()
    }
}

/// Winning configuration and its validation score.
#[derive(Debug, Clone)]
pub struct GridSearchOutcome {
    pub config: ModelConfig,
    pub validation_map: f64,
}

/// Exhaustive grid search scored by mAP@100 on a held-out validation slice
/// of `train_set`.
///
/// One ninth of the provided users are held cold for validation, so a 90%
/// training set is effectively split 80/10 of the original corpus. Values
/// are tried in ascending order and only a strictly better score replaces
/// the incumbent, which breaks ties toward the lexicographically smallest
/// `(lambda, beta, rank)`.
pub fn grid_search(
    train_set: &InteractionDataset,
    grid: &ParamGrid,
    base: &ModelConfig,
    normalization: Normalization,
    folds_seed: u64,
) -> Result<GridSearchOutcome> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let (fit_set, val_set) = cold_split(train_set, 1.0 / 9.0, folds_seed)?;
    let val_relevance = relevance_from_behavior(&val_set);

    let mut lambdas = grid.lambdas.clone();
    let mut betas = grid.betas.clone();
    let mut ranks = grid.ranks.clone();
    lambdas.sort_by(f64::total_cmp);
    betas.sort_by(f64::total_cmp);
    ranks.sort_unstable();

    let mut best: Option<GridSearchOutcome> = None;
    for &lambda in &lambdas {
        for &beta in &betas {
            for &rank_r in &ranks {
                let config = ModelConfig {
                    lambda,
                    beta,
                    rank_r,
                    ..base.clone()
                };
                let model = train(&fit_set.x, &fit_set.s, &config, normalization)?;
                let top = model.behavior_dim().min(100);
                let rankings = recommend(&model, &val_set.s, top)?;
                let score = match map_at_n(&rankings, &val_relevance, 100) {
                    Ok(r) => r.value,
                    Err(Error::NoIncludableUsers) => 0.0,
                    Err(e) => return Err(e),
                };
                let better = match &best {
                    None => true,
                    Some(b) => score > b.validation_map,
                };
                if better {
                    best = Some(GridSearchOutcome {
                        config,
                        validation_map: score,
                    });
                }
            }
        }
    }
    Ok(best.expect("grid checked non-empty"))
}
