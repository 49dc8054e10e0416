use std::io::Write;
use std::path::PathBuf;

use clap::Args;

use llae::csr::recommend;
use llae::data::{load_dense_csv, load_model};

use super::{open_sink, read_lines, CliError};

#[derive(Args, Debug)]
pub struct RecommendArgs {
    /// Trained model file
    #[arg(long)]
    pub model: PathBuf,
    /// New-user attributes as headerless CSV: one row per attribute (in
    /// training order), one column per user
    #[arg(long)]
    pub attributes: PathBuf,
    /// Items to recommend per user
    #[arg(long)]
    pub top_k: usize,
    /// Output path; stdout when omitted
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// User ids, one per attribute column (defaults to column indices)
    #[arg(long)]
    pub user_ids: Option<PathBuf>,
    /// Item id vocabulary, one per catalog index (defaults to indices)
    #[arg(long)]
    pub items: Option<PathBuf>,
}

pub fn run(args: RecommendArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let attributes = load_dense_csv(&args.attributes)?;
    let d = model.behavior_dim();
    if args.top_k == 0 || args.top_k > d {
        return Err(CliError::Usage(format!(
            "--top-k {} outside the catalog of {d} items",
            args.top_k
        )));
    }

    let users = attributes.cols();
    let user_ids = match &args.user_ids {
        Some(path) => {
            let ids = read_lines(path)?;
            if ids.len() != users {
                return Err(CliError::Usage(format!(
                    "--user-ids has {} ids for {users} attribute columns",
                    ids.len()
                )));
            }
            ids
        }
        None => (0..users).map(|i| i.to_string()).collect(),
    };
    let item_ids = match &args.items {
        Some(path) => {
            let ids = read_lines(path)?;
            if ids.len() != d {
                return Err(CliError::Usage(format!(
                    "--items has {} ids for a catalog of {d} items",
                    ids.len()
                )));
            }
            Some(ids)
        }
        None => None,
    };

    let rankings = recommend(&model, &attributes, args.top_k)?;
    let mut sink = open_sink(args.out.as_deref())?;
    for list in &rankings {
        for (item, score) in list.item_indices.iter().zip(&list.scores) {
            let item_label = match &item_ids {
                Some(ids) => ids[*item].clone(),
                None => item.to_string(),
            };
            writeln!(sink, "{}\t{item_label}\t{score:.6}", user_ids[list.user_id])?;
        }
    }
    sink.flush()?;
    Ok(())
}
