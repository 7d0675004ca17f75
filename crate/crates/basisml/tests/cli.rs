use std::path::PathBuf;
use std::process::{Command, Output};

use basisml::formula::Metrics;
use basisml::translate::TranslationReport;
use serde::Deserialize;

fn testdata(name: &str) -> String {
    let mut path = PathBuf::from(env!("CARGO_MANIFEST_DIR"));
    path.push("testdata");
    path.push(name);
    path.display().to_string()
}

fn run(args: &[&str]) -> Output {
    run_with_env(args, &[])
}

fn run_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut command = Command::new(env!("CARGO_BIN_EXE_basisml"));
    command.args(args).env_remove("BASISML_BUDGET");
    for (key, value) in env {
        command.env(key, value);
    }
    command.output().expect("binary runs")
}

fn stdout(output: &Output) -> String {
    String::from_utf8(output.stdout.clone()).expect("utf-8 stdout")
}

fn stderr(output: &Output) -> String {
    String::from_utf8(output.stderr.clone()).expect("utf-8 stderr")
}

fn json(output: &Output) -> serde_json::Value {
    serde_json::from_str(stdout(output).trim()).expect("stdout is JSON")
}

#[derive(Deserialize)]
struct TranslateOutput {
    formula: String,
    report: TranslationReport,
}

#[derive(Deserialize)]
struct BalanceOutput {
    formula: String,
    input: Metrics,
    output: Metrics,
}

#[test]
fn basis_classifies_the_builtin_extended_basis() {
    let output = run(&["basis", "--name", "extdm"]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let report = json(&output);
    assert_eq!(report["basis"], "extdm");
    assert_eq!(report["complete"], true);
    let iff = report["functions"]
        .as_array()
        .unwrap()
        .iter()
        .find(|f| f["name"] == "iff")
        .expect("iff listed");
    assert_eq!(iff["locally_monotone"], false);
    assert_eq!(iff["affine"], true);
    assert_eq!(iff["table"], "1001");
}

#[test]
fn basis_reads_files_and_keeps_file_order() {
    let output = run(&["basis", "--file", &testdata("andxor.txt")]);
    assert_eq!(output.status.code(), Some(0));
    let report = json(&output);
    assert_eq!(report["basis"], "andxor");
    assert_eq!(report["complete"], true);
    let names: Vec<&str> = report["functions"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f["name"].as_str().unwrap())
        .collect();
    assert_eq!(names, ["and", "xor", "top", "bot"]);
    let xor = &report["functions"][1];
    assert_eq!(xor["locally_monotone"], false);
    assert_eq!(xor["affine"], true);
}

#[test]
fn basis_text_format_is_line_per_function() {
    let output = run(&["basis", "--name", "dm", "--format", "text"]);
    assert_eq!(output.status.code(), Some(0));
    let text = stdout(&output);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("basis: dm"));
    assert_eq!(lines.next(), Some("complete: true"));
    assert_eq!(
        lines.next(),
        Some("function not: arity=1 table=10 locally_monotone=true affine=true")
    );
}

#[test]
fn translate_into_and_xor_verifies_over_k() {
    let output = run(&[
        "translate",
        "--from",
        "extdm",
        "--to",
        &testdata("andxor.txt"),
        "--formula",
        "iff(p1, p2)",
        "--verify",
        "K",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let parsed: TranslateOutput = serde_json::from_str(stdout(&output).trim()).unwrap();
    assert_eq!(parsed.formula, "xor(p1, xor(p2, top))");
    assert_eq!(parsed.report.verified, Some(true));
    assert_eq!(parsed.report.frame_class.as_deref(), Some("K"));
    assert_eq!(parsed.report.source_basis, "extdm");
    assert_eq!(parsed.report.target_basis, "andxor");
}

#[test]
fn translate_reports_the_hypothesis_violation_for_iff_into_nand() {
    let output = run(&[
        "translate",
        "--from",
        "extdm",
        "--to",
        &testdata("nand.txt"),
        "--formula",
        "iff(p1, p2)",
        "--verify",
        "K",
    ]);
    assert_eq!(output.status.code(), Some(1));
    let report = json(&output);
    assert_eq!(report["error"], "HypothesisViolated");
    assert!(report["message"].as_str().unwrap().contains("nand"));
}

#[test]
fn translate_synthesizes_constants_over_the_reserved_variable() {
    let output = run(&[
        "translate",
        "--from",
        "dm",
        "--to",
        &testdata("sheffer.txt"),
        "--formula",
        "not(p1)",
        "--verify",
        "T",
    ]);
    assert_eq!(output.status.code(), Some(0), "{}", stderr(&output));
    let parsed: TranslateOutput = serde_json::from_str(stdout(&output).trim()).unwrap();
    assert_eq!(parsed.formula, "nand(nand(z, nand(z, z)), p1)");
    assert!(parsed.report.introduced_z);
    assert_eq!(parsed.report.verified, Some(true));

    let with_constants = run(&[
        "translate",
        "--from",
        "dm",
        "--to",
        &testdata("nand.txt"),
        "--formula",
        "not(p1)",
    ]);
    assert_eq!(with_constants.status.code(), Some(0));
    let parsed: TranslateOutput = serde_json::from_str(stdout(&with_constants).trim()).unwrap();
    assert_eq!(parsed.formula, "nand(top, p1)");
    assert!(!parsed.report.introduced_z);
}

#[test]
fn balance_expands_the_biimplication() {
    let output = run(&["balance", "--formula", "iff(p0, p1)", "--to-dm"]);
    assert_eq!(output.status.code(), Some(0));
    let parsed: BalanceOutput = serde_json::from_str(stdout(&output).trim()).unwrap();
    assert_eq!(parsed.formula, "or(and(p0, p1), and(not(p0), not(p1)))");
    assert_eq!(parsed.input.norm, 2);
    assert_eq!(parsed.output.depth, 3);
}

#[test]
fn balance_rejects_foreign_connectives() {
    let output = run(&["balance", "--formula", "imp(p0, p1)"]);
    assert_eq!(output.status.code(), Some(1));
    assert_eq!(json(&output)["error"], "UnknownFunction");
}

#[test]
fn equiv_reports_both_verdicts_with_exit_zero() {
    let yes = run(&["equiv", "--left", "or(x, not(x))", "--right", "top", "--class", "K"]);
    assert_eq!(yes.status.code(), Some(0));
    assert_eq!(json(&yes)["equivalent"], true);

    let no = run(&["equiv", "--left", "dia(dia(x))", "--right", "dia(x)", "--class", "T"]);
    assert_eq!(no.status.code(), Some(0));
    assert_eq!(json(&no)["equivalent"], false);

    let s5 = run(&["equiv", "--left", "dia(dia(x))", "--right", "dia(x)", "--class", "S5"]);
    assert_eq!(s5.status.code(), Some(0));
    assert_eq!(json(&s5)["equivalent"], true);
}

#[test]
fn lowerbound_confirms_the_diamond_floor() {
    let output = run(&["lowerbound", "--n", "0", "--max-diamonds", "0", "--max-size", "9"]);
    assert_eq!(output.status.code(), Some(0));
    let report = json(&output);
    assert_eq!(report["target"], "and(p0, dia(not(p0)))");
    assert_eq!(report["frame_class"], "T");
    assert!(report["found"].is_null());

    let text = run(&[
        "lowerbound",
        "--n",
        "0",
        "--max-diamonds",
        "0",
        "--max-size",
        "9",
        "--format",
        "text",
    ]);
    assert!(stdout(&text).contains("verdict: none found"));
}

#[test]
fn lowerbound_finds_the_target_when_the_floor_is_met() {
    let output = run(&["lowerbound", "--n", "0", "--max-diamonds", "1", "--max-size", "9"]);
    assert_eq!(output.status.code(), Some(0));
    let report = json(&output);
    assert_eq!(report["found"], "and(dia(not(p0)), p0)");
}

#[test]
fn check_model_reproduces_the_fixture_verdicts() {
    let holds = run(&[
        "check-model",
        "--model",
        &testdata("s0.txt"),
        "--formula",
        "and(p0, dia(not(p0)))",
        "--world",
        "0",
    ]);
    assert_eq!(holds.status.code(), Some(0));
    let report = json(&holds);
    assert_eq!(report["holds"], true);
    assert_eq!(report["frame_class"], "T");
    assert_eq!(report["worlds"], 3);

    let initial = run(&[
        "check-model",
        "--model",
        &testdata("s0.txt"),
        "--formula",
        "and(p0, dia(not(p0)))",
    ]);
    assert_eq!(initial.status.code(), Some(0));
    let report = json(&initial);
    assert_eq!(report["world"], 2);
    assert_eq!(report["holds"], false);
}

#[test]
fn check_model_rejects_out_of_range_worlds() {
    let output = run(&[
        "check-model",
        "--model",
        &testdata("s0.txt"),
        "--formula",
        "p0",
        "--world",
        "99",
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert_eq!(json(&output)["error"], "WorldOutOfRange");
}

#[test]
fn usage_errors_exit_two() {
    let both = run(&["basis", "--name", "dm", "--file", &testdata("nand.txt")]);
    assert_eq!(both.status.code(), Some(2));

    let neither = run(&["translate", "--from", "dm", "--to", "extdm"]);
    assert_eq!(neither.status.code(), Some(2));
    assert!(stderr(&neither).contains("--formula"));

    let missing = run(&["basis", "--file", "no-such-file.txt"]);
    assert_eq!(missing.status.code(), Some(2));

    let unknown = run(&["basis", "--name", "post"]);
    assert_eq!(unknown.status.code(), Some(2));

    let zero = run(&["basis", "--name", "dm", "--budget", "0"]);
    assert_eq!(zero.status.code(), Some(2));

    let subcommand = run(&["nosuch"]);
    assert_eq!(subcommand.status.code(), Some(2));
}

#[test]
fn budget_flag_overrides_the_environment() {
    let deep = [
        "equiv",
        "--left",
        "and(dia(and(p0, dia(and(p1, dia(p2))))), dia(not(p0)))",
        "--right",
        "bot",
        "--class",
        "K",
    ];
    let starved = run_with_env(&deep, &[("BASISML_BUDGET", "2")]);
    assert_eq!(starved.status.code(), Some(1));
    assert_eq!(json(&starved)["error"], "BudgetExceeded");

    let mut rescued_args: Vec<&str> = deep.to_vec();
    rescued_args.extend(["--budget", "1000000"]);
    let rescued = run_with_env(&rescued_args, &[("BASISML_BUDGET", "2")]);
    assert_eq!(rescued.status.code(), Some(0));
    assert_eq!(json(&rescued)["equivalent"], false);

    let bad = run_with_env(&["basis", "--name", "dm"], &[("BASISML_BUDGET", "abc")]);
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn reports_are_byte_identical_across_runs() {
    let args = [
        "translate",
        "--from",
        "extdm",
        "--to",
        "extdm",
        "--formula",
        "dia(iff(p1, p2))",
        "--verify",
        "S5",
    ];
    let first = run(&args);
    let second = run(&args);
    assert_eq!(first.status.code(), Some(0));
    assert_eq!(stdout(&first), stdout(&second));
}

#[test]
fn text_errors_go_to_stderr() {
    let output = run(&[
        "translate",
        "--from",
        "extdm",
        "--to",
        &testdata("nand.txt"),
        "--formula",
        "iff(p1, p2)",
        "--format",
        "text",
    ]);
    assert_eq!(output.status.code(), Some(1));
    assert_eq!(stdout(&output), "");
    assert!(stderr(&output).contains("HypothesisViolated"));
}
