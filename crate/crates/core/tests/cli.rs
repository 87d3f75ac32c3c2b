use std::path::{Path, PathBuf};
use std::process::Command;

use ric_select::cli::run_command;
use ric_select::criteria::CriterionKind;
use ric_select::report::{from_json, payload_json, Payload, ReportDocument, SCHEMA};
use ric_select::{sample_dgp, CorrelationSpec, DesignSource, TrueModelSpec};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("ric-select").chain(args.iter().copied());
    let code = run_command(argv, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

fn report(args: &[&str]) -> ReportDocument {
    let (code, out, err) = run(args);
    assert_eq!(code, 0, "stderr: {err}");
    from_json(&out).unwrap()
}

fn write_dataset(dir: &Path, name: &str, n: usize, seed: u64) -> PathBuf {
    let truth = TrueModelSpec {
        beta0: vec![2.0, 0.0, -1.5],
        sigma0_sq: 1.0,
        correlation: CorrelationSpec::ar1(0.3),
        design: DesignSource::Gaussian { p: 3, intercept: false, seed: 9 },
    };
    let data = sample_dgp(&truth, n, seed, 0).unwrap();
    let mut text = String::from("a,resp,b,c\n");
    for i in 0..n {
        let x = data.x().row(i);
        text.push_str(&format!("{},{},{},{}\n", x[0], data.y()[i], x[1], x[2]));
    }
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn fit_reports_every_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_dataset(dir.path(), "d.csv", 40, 1);
    let doc = report(&["fit", "--data", path.to_str().unwrap(), "--response", "resp", "--active", "a,3", "--family", "ar1"]);
    assert_eq!(doc.schema, SCHEMA);
    assert_eq!(doc.input_digest.len(), 64);
    let Payload::Fit(f) = &doc.payload else { panic!("wrong payload") };
    assert_eq!(f.columns, ["a", "b", "c"]);
    assert_eq!(f.fit.model.indices(), &[0, 2]);
    assert_eq!(f.criteria.len(), 6);
    assert!(f.criteria.iter().all(|c| c.value.is_some()));
    assert_eq!(f.fit.theta_hat.len(), 1);
}

#[test]
fn select_with_forced_intercept() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_dataset(dir.path(), "d.csv", 60, 2);
    let doc = report(&[
        "select", "--data", path.to_str().unwrap(), "--response", "resp", "--criteria", "ric,ricc,bic", "--force-intercept",
    ]);
    let Payload::Selection(r) = &doc.payload else { panic!("wrong payload") };
    assert_eq!(r.columns[0], "(intercept)");
    assert_eq!(r.rows.len(), 8);
    assert!(r.rows.iter().all(|row| row.model.contains(0)));
    let kinds: Vec<_> = r.winners.iter().map(|w| w.kind).collect();
    assert_eq!(kinds, [CriterionKind::Ric, CriterionKind::Ricc, CriterionKind::Bic]);
    assert_eq!(r.winner(CriterionKind::Bic).unwrap().model.indices(), &[0, 1, 3]);
}

#[test]
fn pretty_output_is_a_table() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_dataset(dir.path(), "d.csv", 30, 3);
    let (code, out, _) = run(&["select", "--data", path.to_str().unwrap(), "--response", "resp", "--pretty"]);
    assert_eq!(code, 0);
    assert!(out.contains("RIC_STAR") && out.contains("{1,3}"), "{out}");
}

#[test]
fn digest_follows_input_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_dataset(dir.path(), "a.csv", 30, 4);
    let b = write_dataset(dir.path(), "b.csv", 30, 4);
    let c = write_dataset(dir.path(), "c.csv", 30, 5);
    let digest = |p: &Path| report(&["fit", "--data", p.to_str().unwrap(), "--response", "resp"]).input_digest;
    assert_eq!(digest(&a), digest(&b));
    assert_ne!(digest(&a), digest(&c));
}

#[test]
fn select_payload_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_dataset(dir.path(), "d.csv", 50, 6);
    let args = ["select", "--data", path.to_str().unwrap(), "--response", "resp", "--family", "exchangeable"];
    let one = payload_json(&report(&args)).unwrap();
    let two = payload_json(&report(&args)).unwrap();
    assert_eq!(one, two);
}

#[test]
fn verify_reports_identities() {
    let doc = report(&["verify", "--n", "20", "--k", "2", "--reps", "2000", "--seed", "7", "--workers", "2"]);
    let Payload::Identities(s) = &doc.payload else { panic!("wrong payload") };
    assert_eq!(s.identities.len(), 2);
    assert_eq!(s.distributions.len(), 2);
    assert_eq!(s.identities[0].target, 20.25);
    let other = report(&["verify", "--n", "20", "--k", "2", "--reps", "2000", "--seed", "8"]);
    assert_ne!(doc.input_digest, other.input_digest);
}

#[test]
fn simulate_reads_a_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("exp.json");
    std::fs::write(
        &path,
        r#"{"truth": {"beta0": [1, 0, 2], "sigma0_sq": 1, "correlation": {"family": "identity"},
            "design": {"kind": "gaussian", "p": 3, "seed": 1}},
            "n_values": [25, 50], "replications": 50, "criteria": ["AIC", "BIC"], "seed": 3}"#,
    )
    .unwrap();
    let doc = report(&["simulate", "--config", path.to_str().unwrap(), "--workers", "2"]);
    let Payload::Experiment(s) = &doc.payload else { panic!("wrong payload") };
    assert_eq!(s.rates.len(), 4);
    let reseeded = report(&["simulate", "--config", path.to_str().unwrap(), "--seed", "4"]);
    assert_eq!(doc.input_digest, reseeded.input_digest);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_dataset(dir.path(), "d.csv", 30, 7);
    let good = good.to_str().unwrap();

    assert_eq!(run(&["--help"]).0, 0);
    assert_eq!(run(&[]).0, 1);
    assert_eq!(run(&["frobnicate"]).0, 1);
    assert_eq!(run(&["fit", "--data", good]).0, 1);
    assert_eq!(run(&["select", "--data", good, "--response", "resp", "--criteria", "xic"]).0, 1);
    assert_eq!(run(&["select", "--data", good, "--response", "resp", "--family", "toeplitz"]).0, 1);
    assert_eq!(run(&["verify", "--n", "20", "--k", "2", "--reps", "0"]).0, 1);
    assert_eq!(run(&["verify", "--n", "4", "--k", "2"]).0, 1);

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "resp,x1\n1,NaN\n2,3\n3,4\n").unwrap();
    let (code, _, err) = run(&["fit", "--data", bad.to_str().unwrap(), "--response", "resp"]);
    assert_eq!(code, 2);
    assert!(err.contains("row 2") && err.contains("x1"), "{err}");
    assert_eq!(run(&["fit", "--data", good, "--response", "nope"]).0, 2);
    assert_eq!(run(&["fit", "--data", "/nonexistent/file.csv", "--response", "resp"]).0, 2);

    let span = dir.path().join("span.csv");
    std::fs::write(&span, "resp,x1\n1,1\n2,2\n3,3\n4,4\n5,5\n").unwrap();
    assert_eq!(run(&["fit", "--data", span.to_str().unwrap(), "--response", "resp"]).0, 2);
}

#[test]
fn binary_honours_thread_variable() {
    let dir = tempfile::tempdir().unwrap();
    let path = write_dataset(dir.path(), "d.csv", 40, 8);
    let bin = env!("CARGO_BIN_EXE_ric-select");
    let args = ["select", "--data", path.to_str().unwrap(), "--response", "resp", "--family", "ar1"];
    let payload = |threads: &str| {
        let out = Command::new(bin).args(args).env("RIC_SELECT_THREADS", threads).output().unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        payload_json(&from_json(std::str::from_utf8(&out.stdout).unwrap()).unwrap()).unwrap()
    };
    assert_eq!(payload("1"), payload("8"));
    let out = Command::new(bin).args(args).env("RIC_SELECT_THREADS", "zero").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = Command::new(bin).args(["fit", "--data", "/nonexistent.csv", "--response", "y"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}
