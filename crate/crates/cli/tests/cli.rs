use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn gcar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_gcar"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("run gcar")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const QUICK: [&str; 4] = ["--burn-in", "200", "--iter", "400"];

fn simulate(dir: &Path, scenario: &str, seed: &str) {
    let o = gcar(&["simulate", "--scenario", scenario, "--seed", seed, "--out", p(dir)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

fn fit(extra: &[&str]) -> Output {
    let mut args = vec!["fit"];
    args.extend_from_slice(extra);
    args.extend_from_slice(&QUICK);
    gcar(&args)
}

#[test]
fn simulate_writes_four_files_and_manifest_reproducibly() {
    let t = tempfile::tempdir().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    simulate(&a, "pathway", "42");
    simulate(&b, "pathway", "42");
    let mut names: Vec<String> = fs::read_dir(&a)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .collect();
    names.sort();
    assert_eq!(
        names,
        ["edges_adjacency.tsv", "edges_pathway.tsv", "manifest.csv", "statistics.csv", "truth.csv"]
    );
    for n in &names {
        assert_eq!(fs::read(a.join(n)).unwrap(), fs::read(b.join(n)).unwrap(), "{n} differs");
    }
}

#[test]
fn cascade_manifest_records_remainder_rule() {
    let t = tempfile::tempdir().unwrap();
    simulate(t.path(), "cascade", "3");
    let m = fs::read_to_string(t.path().join("manifest.csv")).unwrap();
    assert!(m.contains("remainder_rule,sum"));
    let o = gcar(&["simulate", "--scenario", "cascade", "--remainder-mean", "--out", p(&t.path().join("m"))]);
    assert!(o.status.success());
    let m = fs::read_to_string(t.path().join("m/manifest.csv")).unwrap();
    assert!(m.contains("remainder_rule,mean"));
}

#[test]
fn isolated_nodes_with_zero_d_exit_two_with_hint() {
    let t = tempfile::tempdir().unwrap();
    simulate(t.path(), "pathway", "1");
    let stats = t.path().join("statistics.csv");
    let edges = t.path().join("edges_pathway.tsv");
    let o = fit(&["--stats", p(&stats), "--edges", p(&edges), "--out", p(&t.path().join("f"))]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("set --d 1 or supply edges"));
    // nothing written
    assert!(!t.path().join("f").exists());
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(gcar(&["fit", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(gcar(&["simulate", "--scenario", "nope"]).status.code(), Some(1));
    let o = gcar(&["fit", "--stats", "/definitely/missing.csv"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(gcar(&["--help"]).status.success());
}

#[test]
fn help_documents_every_fit_flag() {
    let o = gcar(&["fit", "--help"]);
    let h = String::from_utf8_lossy(&o.stdout);
    for flag in [
        "--stats", "--edges", "--variant", "--alpha", "--d", "--drop-isolated", "--p-update", "--chains",
        "--burn-in", "--iter", "--thin", "--seed", "--slice-width", "--slice-max-doublings", "--langevin-step",
        "--metropolis-mix", "--storage", "--threshold", "--level", "--moran-reps", "--emit-raw-draws", "--out",
        "--config",
    ] {
        assert!(h.contains(flag), "missing {flag}");
    }
}

#[test]
fn sb_fit_needs_no_edges_and_reports_fit_measures() {
    let t = tempfile::tempdir().unwrap();
    simulate(t.path(), "microarray", "2");
    let out = t.path().join("sb");
    let o = fit(&["--variant", "sb", "--stats", p(&t.path().join("statistics.csv")), "--out", p(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(r.starts_with("# variant=sb\n"));
    assert!(r.contains("id,p_incl,mu_mean,mu_sd,ci_low,ci_high,selected\n"));
    let d = fs::read_to_string(out.join("diagnostics.csv")).unwrap();
    assert!(d.contains("waic,model,") && d.contains("rmspe,model,"));
    assert!(d.contains("psrf,tau2,"));
}

#[test]
fn fit_diagnose_report_score_pipeline() {
    let t = tempfile::tempdir().unwrap();
    simulate(t.path(), "pathway", "5");
    let out = t.path().join("fit");
    let edges = t.path().join("edges_pathway.tsv");
    let o = fit(&[
        "--stats",
        p(&t.path().join("statistics.csv")),
        "--edges",
        p(&edges),
        "--d",
        "1",
        "--emit-raw-draws",
        "--moran-reps",
        "200",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for c in 1..=3 {
        let raw = fs::read_to_string(out.join(format!("draws_chain{c}.csv"))).unwrap();
        assert!(raw.starts_with("iter,param,value\n0,sigma2,"));
        assert!(raw.contains(",gamma[g0001],"));
    }

    let o = gcar(&["diagnose", "--store", p(&out.join("store.gcar")), "--edges", p(&edges), "--moran-reps", "200", "--out", p(&t.path().join("diag"))]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let d = fs::read_to_string(t.path().join("diag/diagnostics.csv")).unwrap();
    for target in ["psrf,sigma2,", "psrf,eta,", "psrf,rho,", "psrf,p,", "moran_ppd_pvalue,y,"] {
        assert!(d.contains(target), "missing {target}");
    }
    assert_eq!(d.lines().filter(|l| l.starts_with("psrf,mu[")).count(), 5);

    let o = gcar(&["report", "--store", p(&out.join("store.gcar")), "--threshold", "0.5", "--out", p(&t.path().join("rep"))]);
    assert!(o.status.success());
    assert!(fs::read_to_string(t.path().join("rep/report.csv")).unwrap().contains("# threshold=0.5\n"));

    let o = gcar(&["score", "--report", p(&out.join("report.csv")), "--truth", p(&t.path().join("truth.csv")), "--out", p(&t.path().join("score"))]);
    assert!(o.status.success());
    let s = fs::read_to_string(t.path().join("score/score.csv")).unwrap();
    for k in ["fnp,", "fdp,", "mcp,", "auc,"] {
        assert!(s.contains(k));
    }
    assert!(fs::read_to_string(t.path().join("score/roc.csv")).unwrap().starts_with("threshold,fpr,tpr\n"));
}

#[test]
fn score_perfect_and_mismatched_reports() {
    let t = tempfile::tempdir().unwrap();
    let report = "# variant=gcar\n# threshold=0.95\n# alpha=1\n# d=1\n# seed=1\n\
                  id,p_incl,mu_mean,mu_sd,ci_low,ci_high,selected\n\
                  a,1,2,0.1,1.8,2.2,1\nb,0,0,0.1,-0.2,0.2,0\nc,0,0,0.1,-0.2,0.2,0\n";
    fs::write(t.path().join("r.csv"), report).unwrap();
    fs::write(t.path().join("t.csv"), "id,truth\na,1\nb,0\nc,0\n").unwrap();
    let o = gcar(&["score", "--report", p(&t.path().join("r.csv")), "--truth", p(&t.path().join("t.csv")), "--out", p(t.path())]);
    let s = String::from_utf8_lossy(&o.stdout);
    assert!(s.contains("fnp,0\n") && s.contains("fdp,0\n") && s.contains("mcp,0\n") && s.contains("auc,1\n"), "{s}");

    fs::write(t.path().join("t2.csv"), "id,truth\na,1\nb,0\n").unwrap();
    let o = gcar(&["score", "--report", p(&t.path().join("r.csv")), "--truth", p(&t.path().join("t2.csv")), "--out", p(t.path())]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_file_sets_defaults_and_flags_win() {
    let t = tempfile::tempdir().unwrap();
    simulate(t.path(), "microarray", "4");
    let cfg = t.path().join("run.cfg");
    fs::write(&cfg, "# quick run\nvariant = sb\nseed = 9\nthreshold = 0.5\nburn_in = 100\niter = 200\n").unwrap();
    let out = t.path().join("fit");
    let o = gcar(&[
        "fit",
        "--config",
        p(&cfg),
        "--stats",
        p(&t.path().join("statistics.csv")),
        "--threshold",
        "0.9",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(r.contains("# variant=sb\n"));
    assert!(r.contains("# seed=9\n"));
    assert!(r.contains("# threshold=0.9\n"));
}

#[test]
fn simulate_fit_score_is_byte_identical() {
    let run = |dir: &Path| {
        simulate(dir, "ising", "8");
        let o = fit(&[
            "--stats",
            p(&dir.join("statistics.csv")),
            "--edges",
            p(&dir.join("edges_lattice.tsv")),
            "--moran-reps",
            "100",
            "--out",
            p(&dir.join("fit")),
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let o = gcar(&["score", "--report", p(&dir.join("fit/report.csv")), "--truth", p(&dir.join("truth.csv")), "--out", p(&dir.join("score"))]);
        assert!(o.status.success());
    };
    let t = tempfile::tempdir().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    run(&a);
    run(&b);
    for f in ["fit/store.gcar", "fit/report.csv", "fit/diagnostics.csv", "fit/moran_ppd.csv", "score/score.csv", "score/roc.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
}

#[test]
fn thread_cap_does_not_change_results() {
    let t = tempfile::tempdir().unwrap();
    simulate(t.path(), "microarray", "6");
    let stats = t.path().join("statistics.csv");
    let mut reports = Vec::new();
    for threads in ["1", "3"] {
        let out = t.path().join(format!("t{threads}"));
        let o = Command::new(env!("CARGO_BIN_EXE_gcar"))
            .args(["fit", "--variant", "sb", "--stats", p(&stats), "--out", p(&out)])
            .args(QUICK)
            .env("GCAR_THREADS", threads)
            .output()
            .unwrap();
        assert!(o.status.success());
        reports.push(fs::read(out.join("report.csv")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}
