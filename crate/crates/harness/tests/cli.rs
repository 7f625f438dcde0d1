use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use psosvm::data::{dump_csv, synthetic_separable, Dataset};

fn psosvm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_psosvm"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synthetic_csv(dir: &Path) -> PathBuf {
    let ds: Dataset<f64> = synthetic_separable(60, 0.1, 8);
    let path = dir.join("synthetic.csv");
    dump_csv(&ds, &path).unwrap();
    path
}

fn small<'a>(data: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec![
        "--data",
        data,
        "--label-col",
        "label",
        "--positive-label",
        "+1",
        "--particles",
        "9",
        "--iters",
        "2",
    ];
    v.extend_from_slice(extra);
    v
}

#[test]
fn compare_prints_table_and_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_csv(dir.path());
    let out_dir = dir.path().join("out");
    let mut args = vec!["compare"];
    args.extend(small(
        data.to_str().unwrap(),
        &[
            "--out",
            out_dir.to_str().unwrap(),
            "--fitness-mode",
            "combined_accuracy",
            "--seed",
            "3",
        ],
    ));
    let out = psosvm(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = stdout(&out);
    assert!(
        text.contains("traditional") && text.contains("modified"),
        "{text}"
    );
    let json = std::fs::read_to_string(out_dir.join("report.json")).unwrap();
    assert!(json.contains("\"combined_accuracy\""));
    assert!(json.contains("\"seed\": 3"));
}

#[test]
fn optimize_runs_one_mode() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_csv(dir.path());
    let mut args = vec!["optimize", "--mode", "traditional"];
    args.extend(small(data.to_str().unwrap(), &[]));
    let out = psosvm(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(stdout(&out).contains("traditional"));
    assert!(!stdout(&out).contains("modified"));

    let mut args = vec!["optimize", "--mode", "both"];
    args.extend(small(data.to_str().unwrap(), &[]));
    assert_eq!(code(&psosvm(&args)), 2);
}

#[test]
fn exit_codes_follow_error_kind() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_csv(dir.path());
    let missing = psosvm(&[
        "compare",
        "--data",
        "/no/such.csv",
        "--label-col",
        "label",
        "--positive-label",
        "+1",
    ]);
    assert_eq!(code(&missing), 3, "{}", stderr(&missing));
    assert!(stderr(&missing).contains("/no/such.csv"));

    let no_label = psosvm(&["compare", "--data", data.to_str().unwrap()]);
    assert_eq!(code(&no_label), 2);
    assert!(stderr(&no_label).contains("--label-col"));

    let mut args = vec!["compare"];
    args.extend(small(data.to_str().unwrap(), &["--regen-percent", "150"]));
    assert_eq!(code(&psosvm(&args)), 2);

    let bad_mode = psosvm(&["optimize", "--mode", "sideways"]);
    assert_eq!(code(&bad_mode), 2);

    let bad_config = dir.path().join("bad.toml");
    std::fs::write(&bad_config, "[data]\npath = 3\n").unwrap();
    assert_eq!(
        code(&psosvm(&[
            "compare",
            "--config",
            bad_config.to_str().unwrap()
        ])),
        2
    );
}

#[test]
fn config_file_drives_a_run() {
    let dir = tempfile::tempdir().unwrap();
    synthetic_csv(dir.path());
    let config = dir.path().join("exp.toml");
    std::fs::write(
        &config,
        r#"
mode = "modified"
out = "results"

[data]
path = "synthetic.csv"
label_column = "label"
positive_label = "+1"

[split]
train_count = 40
seed = 5

[swarm]
particles = 6
max_iters = 1
"#,
    )
    .unwrap();
    let out = psosvm(&["optimize", "--config", config.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let json = std::fs::read_to_string(dir.path().join("results/report.json")).unwrap();
    assert!(json.contains("\"train_total\": 40"), "{json}");
    assert!(json.contains("\"fitness_evaluations\": 12"), "{json}");
}

#[test]
fn dump_trace_writes_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_csv(dir.path());
    let mut args = vec!["dump-trace"];
    args.extend(small(data.to_str().unwrap(), &[]));
    assert_eq!(code(&psosvm(&args)), 2, "needs --out");

    let out_dir = dir.path().join("trace");
    args.extend(["--out", out_dir.to_str().unwrap()]);
    let out = psosvm(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let trace = std::fs::read_to_string(out_dir.join("trace.csv")).unwrap();
    assert!(trace.starts_with("iteration,particle,kind,x1,x2,c,fitness,regenerated"));
    assert_eq!(trace.lines().count(), 1 + 9 * 3);
    assert!(out_dir.join("plots/iter_000_type_1.csv").is_file());
    assert!(out_dir.join("plots/final_best.csv").is_file());
}

#[test]
fn train_then_predict_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let data = synthetic_csv(dir.path());
    let model = dir.path().join("model.txt");
    let out = psosvm(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--label-col",
        "label",
        "--positive-label",
        "+1",
        "--kernel",
        "2",
        "--x1",
        "0.5",
        "--c",
        "10",
        "--out",
        model.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(
        stdout(&out).contains("test errors 0 of 15"),
        "{}",
        stdout(&out)
    );
    assert!(std::fs::read_to_string(&model)
        .unwrap()
        .starts_with("psosvm-model 1"));

    let preds = dir.path().join("preds.csv");
    let out = psosvm(&[
        "predict",
        "--model",
        model.to_str().unwrap(),
        "--data",
        data.to_str().unwrap(),
        "--label-col",
        "label",
        "--out",
        preds.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let predicted: Vec<String> = std::fs::read_to_string(&preds)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap().to_string())
        .collect();
    let truth: Vec<String> = std::fs::read_to_string(&data)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| {
            l.rsplit(',')
                .next()
                .unwrap()
                .trim_start_matches('+')
                .to_string()
        })
        .collect();
    assert_eq!(predicted, truth);

    let bad = psosvm(&[
        "train",
        "--data",
        data.to_str().unwrap(),
        "--label-col",
        "label",
        "--positive-label",
        "+1",
        "--kernel",
        "9",
        "--c",
        "1",
    ]);
    assert_eq!(code(&bad), 2);
}
