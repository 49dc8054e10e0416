use std::collections::HashSet;
use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use llae::csr::{map_at_n, precision_at_k, recall_at_k, recommend, RelevanceSet};
use llae::data::{load_dense_csv, load_model, load_sparse_triples, ValueMode};

use super::{open_sink, parse_usize_list, CliError};

#[derive(Args, Debug)]
pub struct EvalCsrArgs {
    /// Trained model file
    #[arg(long)]
    pub model: PathBuf,
    /// Cold-user attributes as headerless CSV: one row per attribute (in
    /// training order), one column per user
    #[arg(long)]
    pub test_attributes: PathBuf,
    /// Held-out interactions as triples `item_index<TAB>user_index<TAB>value`
    /// with integer indices: items into the model catalog, users into the
    /// attribute columns
    #[arg(long)]
    pub test_relevance: PathBuf,
    /// Cutoffs for precision@k and recall@k
    #[arg(long, default_value = "1,5,10,20")]
    pub k_list: String,
    /// Truncation depth for mean average precision
    #[arg(long, default_value_t = 100)]
    pub map_n: usize,
    /// Optional CSV sink with metric,k,value rows
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

/// Parses the relevance triples into one set per attribute column.
fn load_relevance(
    args: &EvalCsrArgs,
    items: usize,
    users: usize,
) -> Result<Vec<RelevanceSet>, CliError> {
    let triples = load_sparse_triples(&args.test_relevance, ValueMode::Binary)?;
    let mut sets: Vec<HashSet<usize>> = vec![HashSet::new(); users];
    for t in &triples.entries {
        if t.value == 0.0 {
            continue;
        }
        let item: usize = triples.row_ids[t.row].parse().map_err(|_| {
            CliError::Usage(format!(
                "--test-relevance: item id `{}` is not an index",
                triples.row_ids[t.row]
            ))
        })?;
        let user: usize = triples.col_ids[t.col].parse().map_err(|_| {
            CliError::Usage(format!(
                "--test-relevance: user id `{}` is not an index",
                triples.col_ids[t.col]
            ))
        })?;
        if item >= items {
            return Err(CliError::Usage(format!(
                "--test-relevance: item index {item} outside the catalog of {items}"
            )));
        }
        if user >= users {
            return Err(CliError::Usage(format!(
                "--test-relevance: user index {user} outside the {users} attribute columns"
            )));
        }
        sets[user].insert(item);
    }
    Ok(sets
        .into_iter()
        .enumerate()
        .map(|(user_id, relevant_items)| RelevanceSet {
            user_id,
            relevant_items,
        })
        .collect())
}

pub fn run(args: EvalCsrArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let attributes = load_dense_csv(&args.test_attributes)?;
    let d = model.behavior_dim();
    let users = attributes.cols();

    let k_list = parse_usize_list(&args.k_list, "--k-list")?;
    for &k in &k_list {
        if k == 0 || k > d {
            return Err(CliError::Usage(format!(
                "--k-list: k = {k} outside the catalog of {d} items"
            )));
        }
    }
    if args.map_n == 0 {
        return Err(CliError::Usage("--map-n must be at least 1".to_string()));
    }

    let relevance = load_relevance(&args, d, users)?;
    let rankings = recommend(&model, &attributes, d)?;

    let included: Vec<usize> = (0..users)
        .filter(|&u| !relevance[u].relevant_items.is_empty())
        .collect();
    let excluded = users - included.len();
    println!(
        "users: {} evaluated, {excluded} excluded (no relevant items)",
        included.len()
    );

    let mut rows: Vec<(usize, f64, f64)> = Vec::new();
    for &k in &k_list {
        let mut p_sum = 0.0;
        let mut r_sum = 0.0;
        for &u in &included {
            p_sum += precision_at_k(&rankings[u], &relevance[u], k)?;
            r_sum += recall_at_k(&rankings[u], &relevance[u], k)?;
        }
        let count = included.len().max(1) as f64;
        rows.push((k, p_sum / count, r_sum / count));
    }
    let map = map_at_n(&rankings, &relevance, args.map_n)?;

    println!("k\tprecision@k\trecall@k");
    for (k, p, r) in &rows {
        println!("{k}\t{p:.6}\t{r:.6}");
    }
    println!("mAP@{}: {:.6}", args.map_n, map.value);

    if let Some(csv_path) = &args.csv {
        let mut csv = open_sink(Some(csv_path))?;
        writeln!(csv, "metric,k,value")?;
        for (k, p, r) in &rows {
            writeln!(csv, "precision,{k},{p:.6}")?;
            writeln!(csv, "recall,{k},{r:.6}")?;
        }
        writeln!(csv, "map,{},{:.6}", args.map_n, map.value)?;
    }
    Ok(())
}
