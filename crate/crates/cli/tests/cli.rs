use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn demo(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../demo").join(name)
}

fn openpop(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_openpop"));
    cmd.args(args).env_remove("OPENPOP_THREADS");
    if let Some(t) = threads {
        cmd.env("OPENPOP_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn conjugate_demo_interval_matches_the_closed_form() {
    let cfg = demo("conjugate.json");
    let r = json(&openpop(&["quantity", "--config", cfg.to_str().unwrap(), "--quantity", "mean", "--level", "0.95"], None));

    // Rebuild the demo data independently of the CLI.
    let f = openpop_core::FamilySpec::normal();
    let data = f.sample(&f.params(&[2.0, 1.0]).unwrap(), 50, 0).unwrap();
    let prec = data.len() as f64 + 0.01;
    let m = data.values().iter().sum::<f64>() / prec;
    let half = 1.959_963_984_540_054 / prec.sqrt();
    let s = &r["quantity"]["mixture"];
    assert!((s["lower"].as_f64().unwrap() - (m - half)).abs() < 1e-3);
    assert!((s["upper"].as_f64().unwrap() - (m + half)).abs() < 1e-3);
    assert_eq!(r["schema"], 1);
    assert_eq!(r["seed"], 0);
    assert_eq!(r["data"]["fingerprint"], data.fingerprint().to_hex());
    assert_eq!(r["config_fingerprint"].as_str().unwrap().len(), 64);
    let fam = &r["families"][0];
    for key in ["prior", "log_predictive", "weight"] {
        assert!(fam[key].is_number(), "{key}");
    }
}

#[test]
fn floats_are_printed_with_full_precision() {
    let cfg = demo("conjugate.json");
    let out = openpop(&["fit", "-c", cfg.to_str().unwrap()], None);
    let text = String::from_utf8(out.stdout).unwrap();
    for tok in text.split(|c: char| !(c.is_ascii_alphanumeric() || c == '.' || c == '-' || c == '+')) {
        if tok.contains('.') && tok.contains('e') && tok.parse::<f64>().is_ok() {
            let mantissa = tok.trim_start_matches('-').split('e').next().unwrap();
            assert!(mantissa.len() >= 13, "{tok}");
        }
    }
    assert!(text.contains("\"sigma\": 1.0000000000000000e0"));
}

#[test]
fn repeated_runs_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = demo("skewed.json");
    let mut reports = Vec::new();
    for threads in [None, Some("1"), Some("8"), Some("1")] {
        let csv = dir.path().join("density.csv");
        let out = openpop(
            &["quantity", "-c", cfg.to_str().unwrap(), "--csv", csv.to_str().unwrap()],
            threads,
        );
        assert!(out.status.success());
        reports.push((out.stdout, std::fs::read(&csv).unwrap()));
    }
    assert!(reports.windows(2).all(|w| w[0] == w[1]));
}

#[test]
fn prior_weights_not_summing_to_one_exit_with_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(demo("skewed.json")).unwrap().replace("\"prior_weight\": 0.5,\n      \"prior\": {\n        \"shape\"", "\"prior_weight\": 0.4,\n      \"prior\": {\n        \"shape\"");
    assert!(text.contains("0.4"));
    let cfg = write_config(dir.path(), "c.json", &text);
    let out = openpop(&["weights", "-c", &cfg], None);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("c.json:10: model:") && err.contains("sum to 0.9"), "{err}");
}

#[test]
fn config_mistakes_exit_two_and_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let base = std::fs::read_to_string(demo("conjugate.json")).unwrap();

    let cfg = write_config(dir.path(), "a.json", &base.replace("\"family\": \"normal\",\n      \"prior_weight\"", "\"family\": \"cauchy\",\n      \"prior_weight\""));
    let out = openpop(&["fit", "-c", &cfg], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("a.json:12: model[0].family: unknown family id `cauchy`"));

    let cfg = write_config(dir.path(), "b.json", &base.replace("\"sd\": 10.0", "\"sd\": 10.0,"));
    let out = openpop(&["fit", "-c", &cfg], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("b.json:15:"), "{}", String::from_utf8_lossy(&out.stderr));

    let cfg = write_config(dir.path(), "c.json", &base.replace("\"sd\": 10.0", "\"sd\": 0.0"));
    let out = openpop(&["fit", "-c", &cfg], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model[0].prior: improper or invalid prior"));

    let out = openpop(&["quantity", "-c", demo("conjugate.json").to_str().unwrap(), "-q", "quantile:1.5"], None);
    assert_eq!(out.status.code(), Some(2));

    let out = openpop(&["fit", "-c", demo("conjugate.json").to_str().unwrap()], Some("many"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn impossible_data_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(demo("uniform.json")).unwrap().replace("\"data\": [0.9999999]", "\"data\": [1.5]");
    let cfg = write_config(dir.path(), "u.json", &text);
    let out = openpop(&["pvalue", "-c", &cfg], None);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("uniform_loc"));
}

#[test]
fn missing_seed_warns_except_in_simulate() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(demo("conjugate.json")).unwrap().replace("  \"seed\": 0,\n", "");
    let cfg = write_config(dir.path(), "c.json", &text);
    let r = json(&openpop(&["fit", "-c", &cfg], None));
    assert_eq!(r["seed"], 0);
    assert!(r["warnings"][0].as_str().unwrap().contains("seed"));

    let text = std::fs::read_to_string(demo("coverage.json")).unwrap().replace("  \"seed\": 2,\n", "");
    let cfg = write_config(dir.path(), "s.json", &text);
    let out = openpop(&["simulate", "-c", &cfg], None);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed"));
}

#[test]
fn uniform_demo_reports_the_counterexample() {
    let r = json(&openpop(&["pvalue", "-c", demo("uniform.json").to_str().unwrap()], None));
    let d = &r["diagnostics"];
    let lambda = d["pvalue"][0]["lambda"].as_f64().unwrap();
    assert!(lambda < 1e-6 && (lambda - 1e-7).abs() < 1e-12);
    assert_eq!(d["uniform_demo"]["null_density"].as_f64(), Some(0.5));
    assert_eq!(d["uniform_demo"]["density_is_max"], true);
    assert!(d["uniform_demo"]["max_likelihood_ratio"].as_f64().unwrap() <= 1.0);
}

#[test]
fn elicited_weights_follow_the_prior_ratio_rule() {
    let r = json(&openpop(&["weights", "-c", demo("skewed.json").to_str().unwrap(), "--source", "elicited"], None));
    assert_eq!(r["weights"]["provenance"], "elicited");
    for f in r["families"].as_array().unwrap() {
        assert_eq!(f["weight"], f["prior"]);
        assert!(f["log_predictive"].is_number());
    }
}

#[test]
fn sensitivity_suggests_a_stanza_only_when_the_model_should_grow() {
    let cfg = demo("skewed.json");
    let tail = json(&openpop(&["sensitivity", "-c", cfg.to_str().unwrap()], None));
    let s = &tail["diagnostics"]["sensitivity"];
    assert_eq!(s["verdict"], "enlarge_model");
    let entry = &s["suggested_stanza"]["model_entry"];
    assert_eq!(entry["family"], "gamma");
    assert_eq!(entry["id"], "gamma_mean_variance");
    assert_eq!(entry["parametrization"], "mean_variance");

    let mean = json(&openpop(&["sensitivity", "-c", cfg.to_str().unwrap(), "--quantity", "mean"], None));
    let s = &mean["diagnostics"]["sensitivity"];
    assert_eq!(s["verdict"], "adequate");
    assert!(s.get("suggested_stanza").is_none());
    assert!(s["ks"].as_f64().unwrap() < tail["diagnostics"]["sensitivity"]["ks"].as_f64().unwrap());
}

#[test]
fn simulate_writes_a_summary_and_a_replicate_table() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(demo("coverage.json")).unwrap().replace("\"reps\": 20", "\"reps\": 3");
    let cfg = write_config(dir.path(), "s.json", &text);
    let csv = dir.path().join("reps.csv");
    let r = json(&openpop(&["simulate", "-c", &cfg, "--csv", csv.to_str().unwrap()], None));
    let sim = &r["simulate"];
    assert_eq!(sim["experiment"], "coverage");
    assert_eq!(sim["reps"], 3);
    assert!(sim.get("records").is_none());
    assert!(sim["note"].as_str().unwrap().contains("used twice"));
    assert!(r["families"][0]["weight"].is_null());
    let table = std::fs::read_to_string(csv).unwrap();
    let mut lines = table.lines();
    assert_eq!(
        lines.next().unwrap(),
        "rep,seed,degenerate,covered,interval_lo,interval_hi,covered_normal,covered_student_t,weight_normal,weight_student_t"
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn help_and_unknown_subcommands() {
    assert_eq!(openpop(&["--help"], None).status.code(), Some(0));
    assert_eq!(openpop(&["frobnicate"], None).status.code(), Some(2));
    assert_eq!(openpop(&["fit"], None).status.code(), Some(2));
}
