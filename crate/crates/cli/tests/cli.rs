//! Functional tests of the `llae` binary: reports, exit codes, file
//! formats, and parity with the library.

mod common;

use std::fs;

use common::*;
use llae::csr::recommend;
use llae::data::{load_model, save_model};
use llae::{DenseMatrix, ModelConfig, Normalization, TrainedModel};
use rand::Rng;

fn tiny_dataset(dir: &std::path::Path, seed: u64) -> (std::path::PathBuf, std::path::PathBuf) {
    let mut r = rng(seed);
    let d = 10;
    let n = 10;
    let k = 4;
    let mut x = DenseMatrix::zeros(d, n);
    for j in 0..n {
        for _ in 0..3 {
            let i = r.random_range(0..d);
            x[(i, j)] = 1.0;
        }
    }
    let mut s = DenseMatrix::zeros(k, n);
    for j in 0..n {
        for i in 0..k {
            s[(i, j)] = r.random_range(0.0..1.0);
        }
    }
    let behavior = dir.join("behavior.tsv");
    let attrs = dir.join("attrs.tsv");
    write_behavior_triples(&behavior, &x);
    write_attribute_triples(&attrs, &s);
    (behavior, attrs)
}

#[test]
fn train_smoke_writes_model_and_reports_objective() {
    let dir = tempfile::tempdir().unwrap();
    let (behavior, attrs) = tiny_dataset(dir.path(), 1);
    let out = run_llae(
        &[
            "train",
            "--behavior",
            behavior.to_str().unwrap(),
            "--attributes",
            attrs.to_str().unwrap(),
            "--out",
            "model.llae",
            "--seed",
            "5",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("model.llae").exists());
    let text = stdout_of(&out);
    assert!(text.lines().any(|l| l.starts_with("iter 1: objective")));
    assert!(text.contains("training time:"));
    load_model(&dir.path().join("model.llae")).unwrap();
}

#[test]
fn train_reports_corruption_count() {
    // 10x10 behavior at rate 0.1 must corrupt exactly 10 entries.
    let dir = tempfile::tempdir().unwrap();
    let (behavior, attrs) = tiny_dataset(dir.path(), 2);
    let out = run_llae(
        &[
            "train",
            "--behavior",
            behavior.to_str().unwrap(),
            "--attributes",
            attrs.to_str().unwrap(),
            "--out",
            "model.llae",
            "--corruption",
            "0.1",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(stdout_of(&out).contains("10 entries corrupted"));
}

#[test]
fn train_rerun_with_same_seed_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let (behavior, attrs) = tiny_dataset(dir.path(), 3);
    for name in ["a.llae", "b.llae"] {
        let out = run_llae(
            &[
                "train",
                "--behavior",
                behavior.to_str().unwrap(),
                "--attributes",
                attrs.to_str().unwrap(),
                "--out",
                name,
                "--seed",
                "17",
                "--beta",
                "0.5",
                "--rank",
                "2",
            ],
            dir.path(),
        );
        assert!(out.status.success());
    }
    let a = fs::read(dir.path().join("a.llae")).unwrap();
    let b = fs::read(dir.path().join("b.llae")).unwrap();
    assert_eq!(a, b);
}

#[test]
fn train_grid_reports_selected_config() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(4);
    // Enough users that the 1/9 validation slice is non-degenerate.
    let d = 8;
    let n = 30;
    let k = 3;
    let mut x = DenseMatrix::zeros(d, n);
    for j in 0..n {
        for _ in 0..3 {
            x[(r.random_range(0..d), j)] = 1.0;
        }
    }
    let s = DenseMatrix::new(
        k,
        n,
        (0..k * n).map(|_| r.random_range(0.0..1.0)).collect(),
    )
    .unwrap();
    let behavior = dir.path().join("behavior.tsv");
    let attrs = dir.path().join("attrs.tsv");
    write_behavior_triples(&behavior, &x);
    write_attribute_triples(&attrs, &s);
    let out = run_llae(
        &[
            "train",
            "--behavior",
            behavior.to_str().unwrap(),
            "--attributes",
            attrs.to_str().unwrap(),
            "--out",
            "model.llae",
            "--grid",
            "lambda=0.5,2;beta=0;rank=0",
            "--corruption",
            "0",
            "--max-iters",
            "3",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    assert!(text.contains("grid search over 2 configurations"));
    assert!(text.contains("selected: lambda="));
}

#[test]
fn attribute_values_are_not_clamped_by_default() {
    // Real-valued side information must survive ingestion; only the
    // behavior file defaults to binary clamping.
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("behavior.tsv"),
        "i0\tu0\t1\ni1\tu1\t1\ni0\tu2\t1\ni1\tu3\t1\n",
    )
    .unwrap();
    // u0/u2 lean attribute a0, u1/u3 lean a1, with graded strengths.
    std::fs::write(
        dir.path().join("attrs.tsv"),
        "a0\tu0\t0.9\na1\tu0\t0.1\na0\tu1\t0.1\na1\tu1\t0.9\n\
         a0\tu2\t0.8\na1\tu2\t0.2\na0\tu3\t0.2\na1\tu3\t0.8\n",
    )
    .unwrap();
    let out = run_llae(
        &[
            "train",
            "--behavior",
            "behavior.tsv",
            "--attributes",
            "attrs.tsv",
            "--out",
            "model.llae",
            "--lambda",
            "5",
            "--corruption",
            "0",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let model = load_model(&dir.path().join("model.llae")).unwrap();
    // With graded attributes intact, an a0-heavy user must prefer item 0
    // and an a1-heavy user item 1. Binary clamping would make the two
    // attribute columns identical and the scores degenerate.
    let attrs = DenseMatrix::new(2, 2, vec![0.9, 0.1, 0.1, 0.9]).unwrap();
    let lists = recommend(&model, &attrs, 1).unwrap();
    assert_eq!(lists[0].item_indices[0], 0);
    assert_eq!(lists[1].item_indices[0], 1);
}

#[test]
fn missing_input_file_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_llae(
        &[
            "train",
            "--behavior",
            "nope.tsv",
            "--attributes",
            "nope.tsv",
            "--out",
            "model.llae",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn bad_flags_are_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = run_llae(&["train", "--no-such-flag"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

fn save_identity_model(dir: &std::path::Path, k: usize) -> std::path::PathBuf {
    let model = TrainedModel {
        w: DenseMatrix::identity(k),
        config: ModelConfig::default(),
        objective_trace: vec![1.0],
        column_normalization: Normalization::None,
    };
    let path = dir.join("identity.llae");
    save_model(&model, &path).unwrap();
    path
}

#[test]
fn eval_zsl_perfect_synthetic_scores_one() {
    let dir = tempfile::tempdir().unwrap();
    let k = 4;
    let model_path = save_identity_model(dir.path(), k);
    // Prototypes are the identity basis; test features are the prototypes.
    let protos = DenseMatrix::identity(k);
    write_csv(&dir.path().join("protos.csv"), &protos);
    write_csv(&dir.path().join("features.csv"), &protos);
    fs::write(dir.path().join("truth.txt"), "0\n1\n2\n3\n").unwrap();
    let out = run_llae(
        &[
            "eval-zsl",
            "--model",
            model_path.to_str().unwrap(),
            "--test-features",
            "features.csv",
            "--prototypes",
            "protos.csv",
            "--truth",
            "truth.txt",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    assert!(text.contains("accuracy: 1.0000"), "{text}");
    assert!(text.contains("class 0: 1/1"));
}

#[test]
fn eval_zsl_shuffled_truth_scores_near_chance() {
    let dir = tempfile::tempdir().unwrap();
    let k = 4;
    let per_class = 15;
    let model_path = save_identity_model(dir.path(), k);
    let protos = DenseMatrix::identity(k);
    write_csv(&dir.path().join("protos.csv"), &protos);

    // Balanced features, one basis direction per class.
    let m = k * per_class;
    let mut features = DenseMatrix::zeros(k, m);
    let mut labels: Vec<usize> = Vec::new();
    for c in 0..k {
        for s in 0..per_class {
            features[(c, c * per_class + s)] = 1.0;
            labels.push(c);
            let _ = s;
        }
    }
    write_csv(&dir.path().join("features.csv"), &features);

    let mut accs = Vec::new();
    for seed in 0..6u64 {
        let mut r = rng(900 + seed);
        let mut shuffled = labels.clone();
        for i in 0..shuffled.len() {
            let j = r.random_range(i..shuffled.len());
            shuffled.swap(i, j);
        }
        let truth: String = shuffled
            .iter()
            .map(|c| format!("{c}\n"))
            .collect();
        fs::write(dir.path().join("truth.txt"), truth).unwrap();
        let out = run_llae(
            &[
                "eval-zsl",
                "--model",
                model_path.to_str().unwrap(),
                "--test-features",
                "features.csv",
                "--prototypes",
                "protos.csv",
                "--truth",
                "truth.txt",
            ],
            dir.path(),
        );
        assert!(out.status.success());
        let text = stdout_of(&out);
        let acc: f64 = text
            .lines()
            .find(|l| l.starts_with("accuracy:"))
            .and_then(|l| l.split_whitespace().nth(1))
            .unwrap()
            .parse()
            .unwrap();
        accs.push(acc);
    }
    let mean = accs.iter().sum::<f64>() / accs.len() as f64;
    let chance = 1.0 / k as f64;
    assert!(
        (mean - chance).abs() < 0.12,
        "mean accuracy {mean} far from chance {chance}"
    );
}

#[test]
fn eval_zsl_missing_model_distinct_from_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write_csv(&dir.path().join("m.csv"), &DenseMatrix::identity(2));
    fs::write(dir.path().join("truth.txt"), "0\n1\n").unwrap();
    let out = run_llae(
        &[
            "eval-zsl",
            "--model",
            "missing.llae",
            "--test-features",
            "m.csv",
            "--prototypes",
            "m.csv",
            "--truth",
            "truth.txt",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn eval_csr_single_user_hand_computed() {
    let dir = tempfile::tempdir().unwrap();
    // Decoded scores for the single user: W's = (3, 2, 1, 0)' -> ranking
    // 0, 1, 2, 3. Relevant: {0, 2}.
    let w = DenseMatrix::new(1, 4, vec![3.0, 2.0, 1.0, 0.0]).unwrap();
    let model = TrainedModel {
        w,
        config: ModelConfig::default(),
        objective_trace: vec![],
        column_normalization: Normalization::None,
    };
    let model_path = dir.path().join("m.llae");
    save_model(&model, &model_path).unwrap();
    write_csv(
        &dir.path().join("attrs.csv"),
        &DenseMatrix::new(1, 1, vec![1.0]).unwrap(),
    );
    fs::write(dir.path().join("rel.tsv"), "0\t0\t1\n2\t0\t1\n").unwrap();
    let out = run_llae(
        &[
            "eval-csr",
            "--model",
            model_path.to_str().unwrap(),
            "--test-attributes",
            "attrs.csv",
            "--test-relevance",
            "rel.tsv",
            "--k-list",
            "1,2,3",
            "--map-n",
            "4",
            "--csv",
            "metrics.csv",
        ],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = stdout_of(&out);
    // precision@1 = 1, p@2 = 1/2, p@3 = 2/3; recall = 1/2, 1/2, 1.
    assert!(text.contains("1\t1.000000\t0.500000"), "{text}");
    assert!(text.contains("2\t0.500000\t0.500000"), "{text}");
    assert!(text.contains("3\t0.666667\t1.000000"), "{text}");
    // AP@4 = (1/1 + 2/3) / 2.
    assert!(text.contains("mAP@4: 0.833333"), "{text}");

    // The CSV sink agrees with the table field by field.
    let csv = fs::read_to_string(dir.path().join("metrics.csv")).unwrap();
    for (metric, k, value) in [
        ("precision", "1", "1.000000"),
        ("precision", "2", "0.500000"),
        ("precision", "3", "0.666667"),
        ("recall", "1", "0.500000"),
        ("recall", "3", "1.000000"),
        ("map", "4", "0.833333"),
    ] {
        assert!(csv.contains(&format!("{metric},{k},{value}")), "{csv}");
    }
}

#[test]
fn eval_csr_reports_excluded_users() {
    let dir = tempfile::tempdir().unwrap();
    let w = DenseMatrix::new(1, 3, vec![1.0, 2.0, 3.0]).unwrap();
    let model = TrainedModel {
        w,
        config: ModelConfig::default(),
        objective_trace: vec![],
        column_normalization: Normalization::None,
    };
    let model_path = dir.path().join("m.llae");
    save_model(&model, &model_path).unwrap();
    // Two users, only the first has relevance.
    write_csv(
        &dir.path().join("attrs.csv"),
        &DenseMatrix::new(1, 2, vec![1.0, -1.0]).unwrap(),
    );
    fs::write(dir.path().join("rel.tsv"), "2\t0\t1\n").unwrap();
    let out = run_llae(
        &[
            "eval-csr",
            "--model",
            model_path.to_str().unwrap(),
            "--test-attributes",
            "attrs.csv",
            "--test-relevance",
            "rel.tsv",
            "--k-list",
            "1",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    assert!(stdout_of(&out).contains("1 evaluated, 1 excluded"));
}

#[test]
fn recommend_top_one_emits_one_line_per_user() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(7);
    let w = uniform_matrix(&mut r, 3, 8);
    let model = TrainedModel {
        w,
        config: ModelConfig::default(),
        objective_trace: vec![],
        column_normalization: Normalization::None,
    };
    let model_path = dir.path().join("m.llae");
    save_model(&model, &model_path).unwrap();
    let attrs = uniform_matrix(&mut r, 3, 5);
    write_csv(&dir.path().join("attrs.csv"), &attrs);
    let out = run_llae(
        &[
            "recommend",
            "--model",
            model_path.to_str().unwrap(),
            "--attributes",
            "attrs.csv",
            "--top-k",
            "1",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    assert_eq!(stdout_of(&out).lines().count(), 5);
}

#[test]
fn recommend_scores_non_increasing_and_matches_library() {
    let dir = tempfile::tempdir().unwrap();
    let mut r = rng(8);
    let w = uniform_matrix(&mut r, 4, 10);
    let model = TrainedModel {
        w: w.clone(),
        config: ModelConfig::default(),
        objective_trace: vec![],
        column_normalization: Normalization::None,
    };
    let model_path = dir.path().join("m.llae");
    save_model(&model, &model_path).unwrap();
    let attrs = uniform_matrix(&mut r, 4, 3);
    write_csv(&dir.path().join("attrs.csv"), &attrs);
    let out = run_llae(
        &[
            "recommend",
            "--model",
            model_path.to_str().unwrap(),
            "--attributes",
            "attrs.csv",
            "--top-k",
            "6",
            "--out",
            "recs.tsv",
        ],
        dir.path(),
    );
    assert!(out.status.success());
    let text = fs::read_to_string(dir.path().join("recs.tsv")).unwrap();

    let expected = recommend(&model, &attrs, 6).unwrap();
    let mut lines = text.lines();
    for list in &expected {
        let mut prev = f64::INFINITY;
        for (item, score) in list.item_indices.iter().zip(&list.scores) {
            let line = lines.next().expect("line per recommendation");
            let fields: Vec<&str> = line.split('\t').collect();
            assert_eq!(fields[0], list.user_id.to_string());
            assert_eq!(fields[1], item.to_string());
            assert_eq!(fields[2], format!("{score:.6}"));
            let printed: f64 = fields[2].parse().unwrap();
            assert!(printed <= prev);
            prev = printed;
        }
    }
    assert!(lines.next().is_none());
}

#[test]
fn recommend_rejects_oversized_top_k() {
    let dir = tempfile::tempdir().unwrap();
    let model = TrainedModel {
        w: DenseMatrix::identity(3),
        config: ModelConfig::default(),
        objective_trace: vec![],
        column_normalization: Normalization::None,
    };
    let model_path = dir.path().join("m.llae");
    save_model(&model, &model_path).unwrap();
    write_csv(&dir.path().join("attrs.csv"), &DenseMatrix::identity(3));
    let out = run_llae(
        &[
            "recommend",
            "--model",
            model_path.to_str().unwrap(),
            "--attributes",
            "attrs.csv",
            "--top-k",
            "9",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(2));
}
