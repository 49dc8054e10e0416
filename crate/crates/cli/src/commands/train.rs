use std::fs::File;
use std::io::Write;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, ValueEnum};

use llae::csr::{grid_search, ParamGrid};
use llae::data::{assemble, load_sparse_triples, save_model, ValueMode};
use llae::{train, ModelConfig, Normalization};

use super::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormalizeFlag {
    None,
    L2,
}

impl From<NormalizeFlag> for Normalization {
    fn from(flag: NormalizeFlag) -> Self {
        match flag {
            NormalizeFlag::None => Normalization::None,
            NormalizeFlag::L2 => Normalization::L2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ValueModeFlag {
    Binary,
    Count,
}

impl From<ValueModeFlag> for ValueMode {
    fn from(flag: ValueModeFlag) -> Self {
        match flag {
            ValueModeFlag::Binary => ValueMode::Binary,
            ValueModeFlag::Count => ValueMode::Count,
        }
    }
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Behavior triples: item_id<TAB>user_id<TAB>value
    #[arg(long)]
    pub behavior: PathBuf,
    /// Attribute triples: attribute_id<TAB>user_id<TAB>value
    #[arg(long)]
    pub attributes: PathBuf,
    /// Output model file
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    pub beta: f64,
    /// Target rank of the encoder (leading spectral directions left
    /// unpenalized)
    #[arg(long, default_value_t = 0)]
    pub rank: usize,
    /// Fraction of behavior entries zeroed before training
    #[arg(long, default_value_t = 0.1)]
    pub corruption: f64,
    #[arg(long, default_value_t = 50)]
    pub max_iters: usize,
    /// Relative objective-change tolerance for convergence
    #[arg(long, default_value_t = 1e-5)]
    pub tol: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = NormalizeFlag::None)]
    pub normalize: NormalizeFlag,
    /// How behavior values densify: binary (clamp to 1, OR duplicates) or
    /// count (sum duplicates)
    #[arg(long, value_enum, default_value_t = ValueModeFlag::Binary)]
    pub behavior_mode: ValueModeFlag,
    /// How attribute values densify; count keeps real-valued side
    /// information intact
    #[arg(long, value_enum, default_value_t = ValueModeFlag::Count)]
    pub attribute_mode: ValueModeFlag,
    /// Cross-validated grid search, e.g. "lambda=0.1,1;beta=0,1;rank=0,2";
    /// the winning configuration is reported and used for the final fit
    #[arg(long)]
    pub grid: Option<String>,
    /// Optional CSV sink for the per-iteration objective values
    #[arg(long)]
    pub csv: Option<PathBuf>,
    /// Optional prefix for id vocabularies (<prefix>.users.txt,
    /// <prefix>.items.txt, <prefix>.attributes.txt), for mapping the
    /// model's indices back to ids
    #[arg(long)]
    pub vocab_out: Option<PathBuf>,
}

fn parse_grid(text: &str) -> Result<ParamGrid, CliError> {
    let mut lambdas = None;
    let mut betas = None;
    let mut ranks = None;
    for part in text.split(';') {
        let (key, values) = part.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("--grid: `{part}` is not key=v1,v2,..."))
        })?;
        match key.trim() {
            "lambda" => lambdas = Some(parse_f64_list(values, "lambda")?),
            "beta" => betas = Some(parse_f64_list(values, "beta")?),
            "rank" => {
                ranks = Some(super::parse_usize_list(values, "--grid rank")?);
            }
            other => {
                return Err(CliError::Usage(format!(
                    "--grid: unknown key `{other}` (expected lambda, beta, rank)"
                )))
            }
        }
    }
    match (lambdas, betas, ranks) {
        (Some(lambdas), Some(betas), Some(ranks)) => Ok(ParamGrid {
            lambdas,
            betas,
            ranks,
        }),
        _ => Err(CliError::Usage(
            "--grid: must set all of lambda, beta and rank".to_string(),
        )),
    }
}

fn parse_f64_list(text: &str, key: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|part| {
            part.trim().parse().map_err(|_| {
                CliError::Usage(format!("--grid {key}: `{part}` is not a number"))
            })
        })
        .collect()
}

pub fn run(args: TrainArgs) -> Result<(), CliError> {
    let started = Instant::now();
    let behavior = load_sparse_triples(&args.behavior, ValueMode::from(args.behavior_mode))?;
    let attributes = load_sparse_triples(&args.attributes, ValueMode::from(args.attribute_mode))?;
    let (dataset, report) = assemble(&behavior, &attributes)?;
    let d = dataset.num_items();
    let k = dataset.num_attributes();
    let n = dataset.num_users();
    println!("loaded behavior: {d} items, {n} users");
    println!("loaded attributes: {k} attributes");
    if report.behavior_only_users > 0 || report.attribute_only_users > 0 {
        println!(
            "warnings: {} users without attributes, {} users without behavior",
            report.behavior_only_users, report.attribute_only_users
        );
    }
    if report.duplicates_collapsed > 0 {
        println!("warnings: {} duplicate triples collapsed", report.duplicates_collapsed);
    }

    let mut config = ModelConfig {
        lambda: args.lambda,
        beta: args.beta,
        rank_r: args.rank,
        corruption_rate: args.corruption,
        max_iters: args.max_iters,
        rel_tol: args.tol,
        seed: args.seed,
    };
    let normalization = Normalization::from(args.normalize);

    if let Some(grid_text) = &args.grid {
        let grid = parse_grid(grid_text)?;
        let points = grid.lambdas.len() * grid.betas.len() * grid.ranks.len();
        println!("grid search over {points} configurations");
        let outcome = grid_search(&dataset, &grid, &config, normalization, args.seed)?;
        println!(
            "selected: lambda={} beta={} rank={} (validation mAP@100 = {:.4})",
            outcome.config.lambda,
            outcome.config.beta,
            outcome.config.rank_r,
            outcome.validation_map
        );
        config = outcome.config;
    }

    let corrupted = (config.corruption_rate * (d * n) as f64).floor() as usize;
    println!(
        "corruption: {corrupted} entries corrupted (rate {})",
        config.corruption_rate
    );

    let model = train(&dataset.x, &dataset.s, &config, normalization)?;
    for (i, value) in model.objective_trace.iter().enumerate() {
        println!("iter {}: objective {:.9e}", i + 1, value);
    }
    let iters = model.objective_trace.len();
    if iters < config.max_iters {
        println!("converged in {iters} iterations");
    } else {
        println!("stopped at max-iters {iters}");
    }
    println!("training time: {:.3} s", started.elapsed().as_secs_f64());

    if let Some(csv_path) = &args.csv {
        let mut csv = File::create(csv_path)?;
        writeln!(csv, "iter,objective")?;
        for (i, value) in model.objective_trace.iter().enumerate() {
            writeln!(csv, "{},{:.17e}", i + 1, value)?;
        }
    }
    if let Some(prefix) = &args.vocab_out {
        write_vocab(prefix, "users", &dataset.user_ids)?;
        write_vocab(prefix, "items", &dataset.item_ids)?;
        write_vocab(prefix, "attributes", &dataset.attribute_ids)?;
    }

    save_model(&model, &args.out)?;
    println!("model written to {}", args.out.display());
    Ok(())
}

fn write_vocab(prefix: &std::path::Path, kind: &str, ids: &[String]) -> Result<(), CliError> {
    let mut path = prefix.as_os_str().to_owned();
    path.push(format!(".{kind}.txt"));
    let mut file = File::create(PathBuf::from(path))?;
    for id in ids {
        writeln!(file, "{id}")?;
    }
    Ok(())
}
