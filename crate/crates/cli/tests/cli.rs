//! End-to-end runs of the `hyprec` binary on synthetic data.

mod common;

use std::fs;

use common::{hyprec, ok, s, Synth};
use hyprec::eval::EvalReport;

#[test]
fn usage_errors_exit_with_1() {
    assert_eq!(hyprec(&[]).status.code(), Some(1));
    assert_eq!(hyprec(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(hyprec(&["split", "--dim", "many"]).status.code(), Some(1));
    assert_eq!(hyprec(&["split", "--set", "colour=red"]).status.code(), Some(1));
    assert_eq!(hyprec(&["train", "--lr", "-1"]).status.code(), Some(1));
    assert_eq!(hyprec(&["estimate-curvature", "--raw-delta", "--relative-delta"]).status.code(), Some(1));
    assert_eq!(hyprec(&["--help"]).status.code(), Some(0));
}

#[test]
fn data_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.dat");
    assert_eq!(hyprec(&["split", "--data", s(&missing)]).status.code(), Some(2));
    let bad = dir.path().join("bad.dat");
    fs::write(&bad, "1::2::5::9\nthis is not a rating\n").unwrap();
    let o = hyprec(&["split", "--data", s(&bad), "--out", s(dir.path())]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains(":2:"), "line number reported");
}

#[test]
fn config_file_flags_and_env_seed_compose() {
    let dir = tempfile::tempdir().unwrap();
    let data = Synth::default().write(dir.path());
    let conf = dir.path().join("run.conf");
    fs::write(&conf, format!("data = {}\nn_negatives = 20\nseed = 5\n", s(&data))).unwrap();
    let split = dir.path().join("split");
    ok(&["split", "--config", s(&conf), "--split-dir", s(&split), "--n-negatives", "30"]);
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(split.join("split.json")).unwrap()).unwrap();
    let prov = &meta["provenance"];
    assert_eq!(prov["config"]["n_negatives"], "30");
    assert_eq!(prov["seed"], 5);
    assert_eq!(prov["config_hash"].as_str().unwrap().len(), 64);
    let neg = fs::read_to_string(split.join("negatives.tsv")).unwrap();
    assert_eq!(neg.lines().next().unwrap().split('\t').count(), 31);

    let split2 = dir.path().join("split2");
    let o = std::process::Command::new(env!("CARGO_BIN_EXE_hyprec"))
        .args(["split", "--data", s(&data), "--split-dir", s(&split2)])
        .env("HYPREC_SEED", "77")
        .output()
        .unwrap();
    assert!(o.status.success());
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(split2.join("split.json")).unwrap()).unwrap();
    assert_eq!(meta["provenance"]["seed"], 77);
}

fn weak_split(dir: &std::path::Path) -> std::path::PathBuf {
    let data = Synth::default().write(dir);
    let split = dir.join("split");
    ok(&["split", "--data", s(&data), "--split-dir", s(&split), "--n-negatives", "50", "--seed", "3"]);
    split
}

#[test]
fn zero_epochs_writes_the_initialization() {
    let dir = tempfile::tempdir().unwrap();
    let split = weak_split(dir.path());
    let out = dir.path().join("run");
    ok(&["train", "--split-dir", s(&split), "--out", s(&out), "--epochs", "0", "--dim", "8"]);
    assert_eq!(fs::read_to_string(out.join("epochs.csv")).unwrap(), "epoch,train_loss,val_ndcg\n");
    let ck = hyprec::models::load_checkpoint(&out.join("best.ckpt")).unwrap();
    assert_eq!(ck.model.dim(), 8);
    assert_eq!(ck.extra["epoch"], 0);
}

#[test]
fn interrupted_training_resumes_bit_identically() {
    let dir = tempfile::tempdir().unwrap();
    let split = weak_split(dir.path());
    for model in ["hae-m", "hvae"] {
        // both runs share an output directory so their provenance is equal
        let (full, part) = (dir.path().join(format!("{model}-full")), dir.path().join(format!("{model}-run")));
        let common = ["--split-dir", s(&split), "--model", model, "--epochs", "4", "--dim", "8", "--lr", "0.01", "--batch-size", "64"];
        let with_out = |out: &std::path::Path, extra: &[&str]| {
            let mut a = vec!["train"];
            a.extend_from_slice(&common);
            a.extend_from_slice(&["--out", s(out)]);
            a.extend_from_slice(extra);
            a.iter().map(|x| x.to_string()).collect::<Vec<_>>()
        };
        let run = |args: Vec<String>| ok(&args.iter().map(String::as_str).collect::<Vec<_>>());
        run(with_out(&part, &[]));
        fs::rename(&part, &full).unwrap();
        run(with_out(&part, &["--stop-after", "2"]));
        assert_eq!(fs::read_to_string(part.join("epochs.csv")).unwrap().lines().count(), 3);
        run(with_out(&part, &["--resume"]));
        for f in ["last.ckpt", "best.ckpt", "epochs.csv"] {
            assert_eq!(fs::read(full.join(f)).unwrap(), fs::read(part.join(f)).unwrap(), "{model}: {f}");
        }
        // a changed configuration refuses to resume
        let mut changed = with_out(&part, &["--resume"]);
        changed.extend(["--lr".to_string(), "0.02".to_string()]);
        let o = hyprec(&changed.iter().map(String::as_str).collect::<Vec<_>>());
        assert_eq!(o.status.code(), Some(1));
    }
}

#[test]
fn curvature_estimates_are_reproducible_and_record_the_mode() {
    let dir = tempfile::tempdir().unwrap();
    let data = Synth::default().write(dir.path());
    let run = |name: &str, extra: &[&str]| {
        let out = dir.path().join(name);
        let mut a = vec!["estimate-curvature", "--data", s(&data), "--svd-rank", "16", "--delta-sample", "60", "--delta-trials", "3", "--output", s(&out)];
        a.extend_from_slice(extra);
        ok(&a);
        fs::read(&out).unwrap()
    };
    let a = run("a.json", &[]);
    assert_eq!(a, run("b.json", &[]));
    let raw = run("raw.json", &["--raw-delta"]);
    assert_ne!(a, raw);
    let v: serde_json::Value = serde_json::from_slice(&raw).unwrap();
    assert_eq!(v["delta_mode"], "raw");
    assert_eq!(v["provenance"]["config"]["delta_mode"], "raw");
    let rel: serde_json::Value = serde_json::from_slice(&a).unwrap();
    let (d, c) = (rel["delta_rel"].as_f64().unwrap(), rel["c"].as_f64().unwrap());
    assert!((c - (0.144 / d).powi(2)).abs() < 1e-12 * c);
    assert_eq!(rel["delta_trials"].as_array().unwrap().len(), 3);
}

#[test]
fn tuning_is_seeded() {
    let dir = tempfile::tempdir().unwrap();
    let split = weak_split(dir.path());
    let space = dir.path().join("space.txt");
    fs::write(&space, "lr = loguniform(1e-3, 1e-1)\ndim = choice(4, 8)\n").unwrap();
    let run = |name: &str, trials: &str| {
        let out = dir.path().join(name);
        ok(&["tune", "--split-dir", s(&split), "--model", "ae", "--trials", trials, "--epochs", "2", "--search-space", s(&space), "--out", s(&out), "--seed", "11"]);
        fs::read_to_string(out.join("trials.csv")).unwrap()
    };
    let one = run("one", "1");
    assert_eq!(one.lines().count(), 2);
    assert!(one.starts_with("trial,seed,lr,dim,status,final_val_ndcg"));
    let a = run("a", "3");
    assert_eq!(a, run("b", "3"));
    assert_eq!(a.lines().nth(1), one.lines().nth(1));
    let best = fs::read_to_string(dir.path().join("a/best.conf")).unwrap();
    assert!(best.contains("model=ae"));
}

#[test]
fn evaluation_reports_embed_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let split = weak_split(dir.path());
    let run = dir.path().join("run");
    ok(&["train", "--split-dir", s(&split), "--out", s(&run), "--model", "puresvd", "--puresvd-rank", "8", "--seed", "4"]);
    let ev = dir.path().join("eval");
    let o = ok(&["evaluate", "--split-dir", s(&split), "--checkpoint", s(&run.join("best.ckpt")), "--out", s(&ev), "--cutoffs", "1,5,10"]);
    assert!(String::from_utf8_lossy(&o.stdout).contains("HR@10"));
    let r: EvalReport = serde_json::from_str(&fs::read_to_string(ev.join("report.json")).unwrap()).unwrap();
    assert_eq!(r.get("HR", 1), r.get("NDCG", 1));
    assert_eq!(r.seed, Some(4));
    assert_eq!(r.provenance["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(r.provenance["training"]["config"]["model"], "puresvd");
    assert_eq!(r.provenance["split"]["seed"], 3);
    let csv = fs::read_to_string(ev.join("report.csv")).unwrap();
    assert!(csv.starts_with("model,protocol,group,n_users,seed,HR@1,NDCG@1"));

    let pop = dir.path().join("pop");
    ok(&["evaluate", "--split-dir", s(&split), "--baseline", "popularity", "--out", s(&pop)]);
    let summary = dir.path().join("summary");
    ok(&["report", s(&ev), s(&pop.join("report.json")), "--output", s(&summary)]);
    let merged = fs::read_to_string(summary.join("summary.csv")).unwrap();
    assert_eq!(merged.lines().count(), 3);

    // a checkpoint for a different catalog is a data error
    let other = tempfile::tempdir().unwrap();
    let data = Synth { items: 90, ..Synth::default() }.write(other.path());
    let split2 = other.path().join("split");
    ok(&["split", "--data", s(&data), "--split-dir", s(&split2)]);
    let o = hyprec(&["evaluate", "--split-dir", s(&split2), "--checkpoint", s(&run.join("best.ckpt")), "--out", s(&ev)]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn divergence_exits_with_3_and_keeps_the_log() {
    let dir = tempfile::tempdir().unwrap();
    let split = weak_split(dir.path());
    let out = dir.path().join("run");
    let o = hyprec(&["train", "--split-dir", s(&split), "--out", s(&out), "--model", "ae", "--lr", "1e300", "--clip-norm", "0", "--epochs", "5", "--dim", "4"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(fs::read_to_string(out.join("epochs.csv")).unwrap().starts_with("epoch,"));
}

#[test]
fn strong_protocol_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data = Synth::default().write(dir.path());
    let split = dir.path().join("split");
    ok(&["split", "--data", s(&data), "--split-dir", s(&split), "--protocol", "strong", "--val-users", "30", "--test-users", "30"]);
    let run = dir.path().join("run");
    ok(&["train", "--split-dir", s(&split), "--out", s(&run), "--model", "hvae", "--epochs", "3", "--dim", "8", "--lr", "0.01", "--batch-size", "64"]);
    let log = fs::read_to_string(run.join("epochs.csv")).unwrap();
    assert_eq!(log.lines().count(), 4);
    assert!(log.lines().skip(1).all(|l| !l.ends_with(',')), "validation NDCG recorded");
    let ev = dir.path().join("eval");
    ok(&["evaluate", "--split-dir", s(&split), "--checkpoint", s(&run.join("best.ckpt")), "--out", s(&ev)]);
    let r: EvalReport = serde_json::from_str(&fs::read_to_string(ev.join("report.json")).unwrap()).unwrap();
    assert!(r.get("Recall", 50).is_some() && r.get("NDCG", 100).is_some());
    assert_eq!(r.n_users, 30);
}

#[test]
fn validation_ndcg_rises_steadily_on_toy_data() {
    let dir = tempfile::tempdir().unwrap();
    let split = weak_split(dir.path());
    let out = dir.path().join("run");
    ok(&[
        "train", "--split-dir", s(&split), "--out", s(&out), "--epochs", "50", "--dim", "16", "--lr", "0.003",
        "--batch-size", "64", "--seed", "1",
    ]);
    let log = fs::read_to_string(out.join("epochs.csv")).unwrap();
    let v: Vec<f64> = log.lines().skip(1).map(|l| l.rsplit(',').next().unwrap().parse().unwrap()).collect();
    assert_eq!(v.len(), 50);
    // Mini-batch noise allows small dips; a real regression shows up as a sustained drop.
    let burn_in = 5;
    for (e, w) in v.windows(2).enumerate().skip(burn_in) {
        assert!(w[1] >= w[0] - 0.01, "epoch {}: {} -> {}", e + 2, w[0], w[1]);
    }
    assert!(v[49] > 2.0 * v[0], "{} -> {}", v[0], v[49]);
    let pop = dir.path().join("pop");
    ok(&["evaluate", "--split-dir", s(&split), "--baseline", "popularity", "--group", "val", "--out", s(&pop)]);
    let r: EvalReport = serde_json::from_str(&fs::read_to_string(pop.join("report.json")).unwrap()).unwrap();
    let pop_ndcg = r.get("NDCG", 10).unwrap();
    assert!(v[49] > pop_ndcg, "trained {} vs popularity {pop_ndcg}", v[49]);
}
