use std::fs;

use dcp_svp::harness::main_with_args;

fn run(args: &[&str]) -> i32 {
    main_with_args(std::iter::once("dcpsim").chain(args.iter().copied()))
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let out = out.to_str().unwrap();
    assert_eq!(run(&["selftest", "--out", out]), 0);
    assert_eq!(run(&["solve-dcp", "--bad-prob", "1.5", "--out", out]), 2);
    assert_eq!(
        run(&["solve-svp", "--instance", "/definitely/missing.json", "--out", out]),
        2
    );
    assert_eq!(run(&["no-such-command"]), 2);
    assert_eq!(run(&["solve-svp", "--mode", "sphere"]), 2);
    // The certificate bound is not met at the default 0.01.
    assert_eq!(run(&["prepare-state", "--out", out]), 1);
}

#[test]
fn replay_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    for (path, threads) in [(&a, "1"), (&b, "2")] {
        let code = run(&[
            "solve-dcp",
            "--N",
            "256",
            "--trials",
            "3",
            "--seed",
            "9",
            "--threads",
            threads,
            "--no-timing",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(code, 0);
    }
    let ra = fs::read(&a).unwrap();
    assert_eq!(ra, fs::read(&b).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&ra).unwrap();
    assert_eq!(report["seed"], 9);
    assert_eq!(report["config"]["N"], 256);
    assert!(report["version"].is_string());
    assert!(report["result"]["success_rate"].is_number());
}

#[test]
fn config_file_with_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"seed": 4, "N": 64, "d": 5, "bad_prob": 0.0, "trials": 2}"#).unwrap();
    let out = dir.path().join("r.json");
    let code = run(&[
        "solve-dcp",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "1",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(r["seed"], 4);
    assert_eq!(r["config"]["trials"], 1);
    assert_eq!(r["result"]["trials"][0]["d"], 5);
    assert!(r["wall_time_secs"].is_number());

    fs::write(&cfg, r#"{"N": 64, "typo_field": 1}"#).unwrap();
    assert_eq!(
        run(&[
            "solve-dcp",
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap()
        ]),
        2
    );
}

#[test]
fn gen_lattice_report_feeds_solve_svp() {
    let dir = tempfile::tempdir().unwrap();
    let inst = dir.path().join("inst.json");
    assert_eq!(
        run(&[
            "gen-lattice",
            "--n",
            "2",
            "--gap",
            "16",
            "--out",
            inst.to_str().unwrap()
        ]),
        0
    );
    let out = dir.path().join("svp.json");
    let code = run(&[
        "solve-svp",
        "--instance",
        inst.to_str().unwrap(),
        "--no-dcp",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let r: serde_json::Value = serde_json::from_slice(&fs::read(&out).unwrap()).unwrap();
    assert_eq!(r["result"]["trials"][0]["report"]["status"], "lll_only");
    assert_eq!(r["result"]["success_rate"], 1.0);
}

#[test]
fn stats_commands_pass_on_small_batteries() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let csv = dir.path().join("t.csv");
    let out = out.to_str().unwrap();
    assert_eq!(
        run(&[
            "subsetsum-stats",
            "--N",
            "256",
            "--trials",
            "200",
            "--csv",
            csv.to_str().unwrap(),
            "--out",
            out
        ]),
        0
    );
    assert!(fs::read_to_string(&csv).unwrap().starts_with("n,r,offset"));
    assert_eq!(
        run(&["matching-stats", "--N", "512", "--trials", "10", "--out", out]),
        0
    );
    assert_eq!(run(&["geometry-check", "--out", out]), 0);
}

#[test]
fn empty_battery_is_a_no_op() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    fs::write(&cfg, r#"{"moduli": [], "equivalence_instances": 0}"#).unwrap();
    let out = dir.path().join("r.json");
    let code = run(&[
        "subsetsum-stats",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
}
