use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;

use clap::{Args, ValueEnum};

use llae::data::{load_dense_csv, load_model};
use llae::zsl::{accuracy, classify, DistanceMetric, PrototypeSet};

use super::{open_sink, read_lines, CliError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MetricFlag {
    Cosine,
    Euclidean,
}

#[derive(Args, Debug)]
pub struct EvalZslArgs {
    /// Trained model file
    #[arg(long)]
    pub model: PathBuf,
    /// Test features as headerless CSV, one row per behavior dimension,
    /// one column per sample
    #[arg(long)]
    pub test_features: PathBuf,
    /// Class prototypes as headerless CSV, one row per attribute, one
    /// column per class
    #[arg(long)]
    pub prototypes: PathBuf,
    /// True labels, one per test column
    #[arg(long)]
    pub truth: PathBuf,
    /// Prototype class labels, one per prototype column (defaults to
    /// column indices "0", "1", ...)
    #[arg(long)]
    pub proto_labels: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = MetricFlag::Cosine)]
    pub metric: MetricFlag,
    /// Optional CSV sink: class,correct,total rows plus an overall row
    #[arg(long)]
    pub csv: Option<PathBuf>,
}

pub fn run(args: EvalZslArgs) -> Result<(), CliError> {
    let model = load_model(&args.model)?;
    let features = load_dense_csv(&args.test_features)?;
    let prototypes = load_dense_csv(&args.prototypes)?;
    let truth = read_lines(&args.truth)?;

    let labels = match &args.proto_labels {
        Some(path) => {
            let labels = read_lines(path)?;
            if labels.len() != prototypes.cols() {
                return Err(CliError::Usage(format!(
                    "--proto-labels has {} labels for {} prototype columns",
                    labels.len(),
                    prototypes.cols()
                )));
            }
            labels
        }
        None => (0..prototypes.cols()).map(|i| i.to_string()).collect(),
    };
    if truth.len() != features.cols() {
        return Err(CliError::Usage(format!(
            "--truth has {} labels for {} test columns",
            truth.len(),
            features.cols()
        )));
    }

    let protos = PrototypeSet::new(labels, prototypes)?;
    let metric = match args.metric {
        MetricFlag::Cosine => DistanceMetric::Cosine,
        MetricFlag::Euclidean => DistanceMetric::Euclidean,
    };
    let predicted = classify(&model, &features, &protos, metric)?;
    let overall = accuracy(&predicted, &truth)?;

    // Per-class tallies keyed by the true label.
    let mut per_class: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (pred, want) in predicted.iter().zip(&truth) {
        let entry = per_class.entry(want.as_str()).or_insert((0, 0));
        entry.1 += 1;
        if pred == want {
            entry.0 += 1;
        }
    }

    let hits: usize = per_class.values().map(|(c, _)| c).sum();
    println!("accuracy: {overall:.4} ({hits}/{})", truth.len());
    for (label, (correct, total)) in &per_class {
        println!("class {label}: {correct}/{total}");
    }

    if let Some(csv_path) = &args.csv {
        let mut csv = open_sink(Some(csv_path))?;
        writeln!(csv, "class,correct,total")?;
        for (label, (correct, total)) in &per_class {
            writeln!(csv, "{label},{correct},{total}")?;
        }
        writeln!(csv, "__overall__,{hits},{}", truth.len())?;
    }
    Ok(())
}
