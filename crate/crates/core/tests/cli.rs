mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use cxr_labeler::table;
use tempfile::TempDir;

use common::demo_dir;

const HEADER: &str = "report_id,No Finding,Enlarged Cardiomediastinum,Cardiomegaly,Lung Lesion,Lung Opacity,Edema,Consolidation,Pneumonia,Atelectasis,Pneumothorax,Pleural Effusion,Pleural Other,Fracture,Support Devices";

fn cxr_label(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cxr-label"))
        .args(args)
        .env_remove(cxr_labeler::cli::RULES_DIR_ENV)
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn label_demo(dir: &TempDir) -> PathBuf {
    let out = dir.path().join("labels.csv");
    let demo = demo_dir();
    let o = cxr_label(&[
        "label",
        "--reports",
        s(&demo.join("reports.csv")),
        "--rules",
        s(&demo.join("rules")),
        "--phrases",
        s(&demo.join("phrases")),
        "--surface-only",
        "--output",
        s(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn labels_demo_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(label_demo(&dir)).unwrap();
    assert_eq!(
        text,
        format!("{HEADER}\ndemo-1,1.0,,,,,0.0,,,,0.0,0.0,,,\ndemo-2,,,,,,,-1.0,,-1.0,,,,,\n")
    );
}

#[test]
fn rules_directory_from_environment() {
    let demo = demo_dir();
    let o = Command::new(env!("CARGO_BIN_EXE_cxr-label"))
        .args(["label", "--reports", s(&demo.join("reports.csv"))])
        .env(cxr_labeler::cli::RULES_DIR_ENV, &demo)
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().contains("demo-2,,,,,,,-1.0,,-1.0,"));
}

#[test]
fn self_evaluation_is_perfect() {
    let dir = tempfile::tempdir().unwrap();
    let labels = label_demo(&dir);
    let metrics = dir.path().join("metrics.csv");
    let o = cxr_label(&["evaluate", "--pred", s(&labels), "--gold", s(&labels), "--output", s(&metrics)]);
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("Mention F1") && table.contains("Negation F1") && table.contains("Uncertain F1"));
    let edema = table.lines().find(|l| l.starts_with("Edema")).unwrap();
    assert_eq!(edema.split_whitespace().collect::<Vec<_>>(), ["Edema", "1.000", "1.000", "N/A"]);

    let mut rdr = csv::Reader::from_path(&metrics).unwrap();
    assert_eq!(rdr.headers().unwrap().iter().collect::<Vec<_>>(), ["task", "category", "tp", "fp", "fn", "f1"]);
    for rec in rdr.records() {
        let rec = rec.unwrap();
        assert!(rec[5] == *"1" || rec[5] == *"1.0" || rec[5] == *"N/A", "{rec:?}");
    }
}

#[test]
fn evaluate_single_task() {
    let dir = tempfile::tempdir().unwrap();
    let labels = label_demo(&dir);
    let o = cxr_label(&["evaluate", "--pred", s(&labels), "--gold", s(&labels), "--task", "negation"]);
    assert!(o.status.success());
    let table = String::from_utf8(o.stdout).unwrap();
    assert!(table.contains("Negation F1") && !table.contains("Mention F1"));
}

#[test]
fn evaluate_probabilities() {
    let dir = tempfile::tempdir().unwrap();
    let gold = dir.path().join("gold.csv");
    let probs = dir.path().join("probs.csv");
    let blanks = ",".repeat(12);
    std::fs::write(&gold, format!("{HEADER}\na,1.0,{blanks}\nb,0.0,{blanks}\nc,-1.0,{blanks}\n")).unwrap();
    std::fs::write(&probs, format!("{HEADER}\na,0.8,{blanks}\nb,0.3,{blanks}\nc,0.5,{blanks}\n")).unwrap();
    let out = dir.path().join("scores.csv");
    let o = cxr_label(&["evaluate", "--probs", s(&probs), "--gold", s(&gold), "--output", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    let no_finding = text.lines().find(|l| l.starts_with("No Finding")).unwrap();
    let cells: Vec<&str> = no_finding.split(',').collect();
    assert_eq!(&cells[..4], ["No Finding", "1", "1", "1"]);
    assert!((cells[4].parse::<f64>().unwrap() - (0.04 + 0.09) / 2.0).abs() < 1e-12);
}

#[test]
fn ones_policy_rewrites_uncertain_cells() {
    let dir = tempfile::tempdir().unwrap();
    let labels = label_demo(&dir);
    let targets = dir.path().join("targets.csv");
    let o = cxr_label(&["transform", "--labels", s(&labels), "--policy", "ones", "--output", s(&targets)]);
    assert!(o.status.success());
    assert_eq!(
        std::fs::read_to_string(&targets).unwrap(),
        format!("{HEADER}\ndemo-1,1.0,,,,,0.0,,,,0.0,0.0,,,\ndemo-2,,,,,,,1.0,,1.0,,,,,\n")
    );
    let mask = std::fs::read_to_string(dir.path().join("targets.mask.csv")).unwrap();
    assert_eq!(mask, format!("{HEADER}\ndemo-1,1,0,0,0,0,1,0,0,0,1,1,0,0,0\ndemo-2,0,0,0,0,0,0,1,0,1,0,0,0,0,0\n"));
}

#[test]
fn ignore_and_multiclass_policies() {
    let dir = tempfile::tempdir().unwrap();
    let labels = label_demo(&dir);
    let o = cxr_label(&["transform", "--labels", s(&labels), "--policy", "ignore"]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout).unwrap().ends_with("demo-2,,,,,,,,,,,,,,\n"));
    let o = cxr_label(&["transform", "--labels", s(&labels), "--policy", "multiclass"]);
    assert!(String::from_utf8(o.stdout).unwrap().ends_with("demo-1,1,,,,,0,,,,0,0,,,\ndemo-2,,,,,,,2,,2,,,,,\n"));
}

#[test]
fn self_trained_policy_uses_predictions_at_uncertain_cells() {
    let dir = tempfile::tempdir().unwrap();
    let labels = label_demo(&dir);
    let preds = dir.path().join("preds.csv");
    let row = |id: &str| format!("{id},{}", vec!["0.25"; 14].join(","));
    std::fs::write(&preds, format!("{HEADER}\n{}\n{}\n", row("demo-2"), row("demo-1"))).unwrap();
    let o = cxr_label(&["transform", "--labels", s(&labels), "--policy", "self-trained", "--preds", s(&preds)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8(o.stdout).unwrap().ends_with("demo-2,,,,,,,0.25,,0.25,,,,,\n"));

    std::fs::write(&preds, format!("{HEADER}\n{}\n", row("demo-1"))).unwrap();
    let o = cxr_label(&["transform", "--labels", s(&labels), "--policy", "self-trained", "--preds", s(&preds)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("demo-2"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(cxr_label(&[]).status.code(), Some(1));
    assert_eq!(cxr_label(&["label"]).status.code(), Some(1));
    assert_eq!(cxr_label(&["transform", "--labels", "x.csv", "--policy", "sometimes"]).status.code(), Some(1));
    assert_eq!(cxr_label(&["evaluate", "--pred", "/no/such.csv", "--gold", "/no/such.csv"]).status.code(), Some(1));
    assert_eq!(cxr_label(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_two_with_context() {
    let dir = tempfile::tempdir().unwrap();
    let labels = label_demo(&dir);
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, format!("{HEADER}\ndemo-1,maybe,,,,,,,,,,,,,\ndemo-2,,,,,,,,,,,,,,\n")).unwrap();
    let o = cxr_label(&["evaluate", "--pred", s(&labels), "--gold", s(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("line 2") && err.contains("demo-1"), "{err}");

    let other = dir.path().join("other.csv");
    std::fs::write(&other, format!("{HEADER}\ndemo-1,,,,,,,,,,,,,,\ndemo-3,,,,,,,,,,,,,,\n")).unwrap();
    let o = cxr_label(&["evaluate", "--pred", s(&labels), "--gold", s(&other)]);
    assert_eq!(o.status.code(), Some(2));

    let rules = dir.path().join("rules");
    std::fs::create_dir(&rules).unwrap();
    std::fs::write(rules.join("negation.rules"), "surface: no\n").unwrap();
    let demo = demo_dir();
    let o = cxr_label(&[
        "label",
        "--reports",
        s(&demo.join("reports.csv")),
        "--rules",
        s(&rules),
        "--phrases",
        s(&demo.join("phrases")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("negation.rules:1"));
}

#[test]
fn output_parses_as_a_labels_table() {
    let dir = tempfile::tempdir().unwrap();
    let rows = table::read_label_rows(std::fs::File::open(label_demo(&dir)).unwrap()).unwrap();
    assert_eq!(rows.len(), 2);
}
