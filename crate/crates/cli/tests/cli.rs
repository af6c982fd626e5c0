use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use mclds::ScenarioConfig;

const SMALL: &str = "num_cells = 12\nnum_channels = 10\nseed = 4\nhorizon = 40\n\n[metrics]\nwarmup_superframes = 5\n";

fn mclds(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mclds"))
        .args(args)
        .current_dir(dir)
        .env("MCLDS_WORKERS", "2")
        .output()
        .unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn run_writes_matrices_with_na_and_lists() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.toml"), SMALL).unwrap();
    let o = mclds(&["run", "--config", "s.toml", "--out", "out"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let matrix = fs::read_to_string(tmp.path().join("out/matrix_p_md_mc-lds.csv")).unwrap();
    assert!(matrix.starts_with(",CH1,CH2,"));
    assert_eq!(matrix.lines().count(), 13);
    assert!(matrix.contains("NA"));
    let lists = fs::read_to_string(tmp.path().join("out/lists.csv")).unwrap();
    assert!(lists.starts_with("cell,OCL,DCL,BCL,PCL,CCL\nWRAN1,"));
    let trace = fs::read_to_string(tmp.path().join("out/trace.csv")).unwrap();
    assert!(trace.starts_with("frame,t,cell,channel,kind,rule,D,Z,R,statistic\n"));
}

#[test]
fn rerun_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.toml"), SMALL).unwrap();
    for out in ["a", "b"] {
        let o = mclds(&["run", "--config", "s.toml", "--out", out], tmp.path());
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let mut names: Vec<_> = fs::read_dir(tmp.path().join("a")).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert!(names.len() > 20);
    for n in names {
        let a = fs::read(tmp.path().join("a").join(&n)).unwrap();
        let b = fs::read(tmp.path().join("b").join(&n)).unwrap();
        assert!(a == b, "{n:?} differs");
    }
}

#[test]
fn seed_override_changes_results() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.toml"), SMALL).unwrap();
    mclds(&["run", "--config", "s.toml", "--out", "a"], tmp.path());
    let o = mclds(&["run", "--config", "s.toml", "--out", "b", "--seed", "99"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let a = fs::read_to_string(tmp.path().join("a/trace.csv")).unwrap();
    let b = fs::read_to_string(tmp.path().join("b/trace.csv")).unwrap();
    assert_ne!(a, b);
    assert!(fs::read_to_string(tmp.path().join("b/metadata.toml")).unwrap().contains("seed = 99"));
}

#[test]
fn rules_flag_limits_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.toml"), SMALL).unwrap();
    let o = mclds(&["run", "--config", "s.toml", "--out", "o", "--rules", "MC-LDS,OR"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(tmp.path().join("o/matrix_nwcf_or.csv").exists());
    assert!(!tmp.path().join("o/matrix_nwcf_and.csv").exists());
    let bad = mclds(&["run", "--config", "s.toml", "--rules", "MAJORITY"], tmp.path());
    assert_eq!(bad.status.code(), Some(1));
}

#[test]
fn invalid_config_exits_one_with_reason() {
    let tmp = tempfile::tempdir().unwrap();
    let text = "num_cells = 2\nnum_channels = 3\nseed = 1\n\n[fusion]\ngamma = 2.0\nzeta = 1.0\n";
    fs::write(tmp.path().join("bad.toml"), text).unwrap();
    let o = mclds(&["validate", "--config", "bad.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("γ < ζ"), "{}", stderr(&o));

    fs::write(tmp.path().join("typo.toml"), "num_cells = 2\nnum_channels = 3\nseed = 1\nhorizn = 4\n").unwrap();
    let o = mclds(&["run", "--config", "typo.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("horizn"), "{}", stderr(&o));
}

#[test]
fn unwritable_output_exits_two_naming_the_path() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.toml"), SMALL).unwrap();
    fs::write(tmp.path().join("blocker"), "").unwrap();
    let o = mclds(&["run", "--config", "s.toml", "--out", "blocker/out"], tmp.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("blocker"), "{}", stderr(&o));
}

#[test]
fn validate_prints_a_loadable_resolved_config() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.toml"), "num_cells = 3\nnum_channels = 4\nseed = 2\n").unwrap();
    let o = mclds(&["validate", "--config", "s.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(0));
    let dumped = String::from_utf8(o.stdout).unwrap();
    assert!(dumped.contains("[fusion]") && dumped.contains("detection_threshold"));
    let reparsed = ScenarioConfig::from_toml_str(&dumped).unwrap();
    assert_eq!(reparsed, ScenarioConfig::load(&tmp.path().join("s.toml")).unwrap());
}

#[test]
fn sweep_writes_one_file_per_metric_and_rule() {
    let tmp = tempfile::tempdir().unwrap();
    let text = format!(
        "{}\n[sweep]\nvariable = \"tx_snr_db\"\nvalues = [-30.0, 90.0]\nseeds_per_point = 3\nrules = [\"MC-LDS\", \"AND\", \"OR\", \"VOTING\"]\n",
        SMALL.replace("horizon = 40", "horizon = 15")
    );
    fs::write(tmp.path().join("s.toml"), text).unwrap();
    let o = mclds(&["sweep", "--config", "s.toml", "--out", "sw"], tmp.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csvs: Vec<_> = fs::read_dir(tmp.path().join("sw"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".csv") && n != "failures.csv")
        .collect();
    assert_eq!(csvs.len(), 20);
    let nwcf = fs::read_to_string(tmp.path().join("sw/nwcf_or.csv")).unwrap();
    let mut lines = nwcf.lines();
    assert_eq!(lines.next(), Some("tx_snr_db,mean,std,n"));
    assert!(lines.next().unwrap().starts_with("-30,"));
    assert!(lines.next().unwrap().ends_with(",3"));
}

#[test]
fn sweep_without_section_is_a_validation_failure() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("s.toml"), SMALL).unwrap();
    let o = mclds(&["sweep", "--config", "s.toml"], tmp.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("[sweep]"));
}
