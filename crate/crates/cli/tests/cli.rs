use std::path::Path;
use std::process::{Command, Output};

use blume_capel::equilibrium::{beta_c, kc2};
use blume_capel::exactchain::{default_t_max, t_mix_exact, Starts};
use blume_capel::ModelParams;
use serde_json::Value;

fn bcmix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bcmix")).args(args).output().expect("spawn bcmix")
}

fn ok(args: &[&str]) -> String {
    let o = bcmix(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    bcmix(args).status.code().expect("exit code")
}

fn meta(out: &str) -> Value {
    let first = out.lines().next().expect("nonempty output");
    serde_json::from_str(first.strip_prefix("# ").expect("metadata line")).unwrap()
}

fn trailers(out: &str) -> Vec<Value> {
    out.lines().skip(1).filter_map(|l| l.strip_prefix("# ")).map(|l| serde_json::from_str(l).unwrap()).collect()
}

fn rows(out: &str) -> Vec<Vec<String>> {
    out.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

#[test]
fn every_subcommand_writes_metadata_then_header() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("mx.csv");
    let csv = csv.to_str().unwrap();
    ok(&["--out", csv, "mix-exact", "--n", "10:40:10", "--beta", "1", "--k", "0.8"]);
    let cases: Vec<(Vec<&str>, &str)> = vec![
        (vec!["phase-diagram", "--beta", "0.5:2:0.5", "--k", "0.5,1.5"], "beta,k,phase,mixing_prediction"),
        (vec!["critical-curves", "--beta", "1:2:0.5"], "beta,kc2,k1,kc1"),
        (vec!["mix-exact", "--n", "10:40:10", "--beta", "1", "--k", "0.8"], "n,beta,k,eps,t_mix"),
        (vec!["mix-couple", "--n", "20", "--beta", "1", "--k", "0.8", "--replicas", "4"], "replica,stream_id,coalesced_at"),
        (vec!["coupling-contraction", "--beta", "1", "--k", "0.8", "--z", "0.5,1"], "z,local,aggregate,local_expands,aggregate_contracts"),
        (vec!["bottleneck", "--n", "10:40:10", "--beta", "1", "--k", "1.6"], "n,beta,k,zprime,phi,phi_star,tmix_lower"),
        (vec!["scaling-fit", "--input", csv, "--model", "poly_nlogn"], "n,value,residual"),
    ];
    for (args, header) in cases {
        let out = ok(&args);
        let m = meta(&out);
        assert_eq!(m["tool"], "bcmix");
        assert_eq!(m["experiment"], args[0]);
        assert_eq!(m["seed"], 0);
        assert_eq!(out.lines().nth(1), Some(header), "{args:?}");
    }
}

#[test]
fn reruns_are_byte_identical_across_thread_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |threads: &str, seed: &str| {
        let p = dir.path().join(format!("c{threads}_{seed}.csv"));
        let o = bcmix(&[
            "--seed", seed, "--threads", threads, "--out", p.to_str().unwrap(),
            "mix-couple", "--n", "40", "--beta", "1", "--k", "0.8", "--replicas", "32",
        ]);
        assert!(o.status.success());
        std::fs::read(p).unwrap()
    };
    let a = run("1", "5");
    assert_eq!(a, run("1", "5"));
    assert_eq!(a, run("4", "5"));
    assert_ne!(a, run("1", "6"));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "experiment = \"phase-diagram\"\nseed = 7\nbeta = [1.0, 2.0]\nk = \"0.5\"\n").unwrap();
    let cfg = cfg.to_str().unwrap();

    let out = ok(&["--config", cfg]);
    assert_eq!(meta(&out)["seed"], 7);
    assert_eq!(rows(&out), vec![vec!["1", "0.5", "single_phase", "rapid"], vec!["2", "0.5", "single_phase", "rapid"]]);

    let out = ok(&["--config", cfg, "--seed", "9", "phase-diagram", "--k", "1.5"]);
    assert_eq!(meta(&out)["seed"], 9);
    assert_eq!(meta(&out)["params"]["k"], "1.5");
    assert!(rows(&out).iter().all(|r| r[1] == "1.5" && r[2] == "two_phase"));

    assert_eq!(code(&["--config", cfg, "mix-exact"]), 2);
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        ("experiment = \"phase-diagram\"\nbeta = 1\nbogus = 3\n", ":3:"),
        ("beta = 1\nk = 1\ntol = \"x\"\n", ":3:"),
        ("beta = 1\nk = [\n", "line 2"),
    ];
    for (i, (text, needle)) in cases.iter().enumerate() {
        let p = dir.path().join(format!("bad{i}.toml"));
        std::fs::write(&p, text).unwrap();
        let o = bcmix(&["--config", p.to_str().unwrap(), "phase-diagram"]);
        assert_eq!(o.status.code(), Some(2));
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(needle), "{err}");
    }
}

#[test]
fn exit_codes() {
    assert_eq!(code(&[]), 2);
    assert_eq!(code(&["phase-diagram", "--beta", "1"]), 2);
    assert_eq!(code(&["phase-diagram", "--beta", "1:0:0.1", "--k", "1"]), 2);
    assert_eq!(code(&["phase-diagram", "--beta", "1", "--k", "0.9*k1"]), 2);
    assert_eq!(code(&["mix-exact", "--n", "3000", "--beta", "1", "--k", "0.8"]), 2);
    assert_eq!(code(&["mix-exact", "--n", "20", "--beta", "1", "--k", "1.6"]), 4);
    assert_eq!(code(&["mix-couple", "--n", "30", "--beta", "1", "--k", "1.6", "--replicas", "2", "--cap", "10"]), 4);
    assert_eq!(code(&["phase-diagram", "--beta", "1", "--k", "1"]), 0);
}

#[test]
fn ranges_expand_without_rounding_noise() {
    let out = ok(&["critical-curves", "--beta", "1.3:1.5:0.05"]);
    let betas: Vec<String> = rows(&out).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(betas, ["1.3", "1.35", "1.4", "1.45", "1.5"]);
    let out = ok(&["bottleneck", "--n", "8:64:*2", "--beta", "1", "--k", "1.6"]);
    let ns: Vec<String> = rows(&out).into_iter().map(|r| r[0].clone()).collect();
    assert_eq!(ns, ["8", "16", "32", "64"]);
}

#[test]
fn critical_curves_meet_at_the_tricritical_point() {
    let out = ok(&["critical-curves", "--beta", "1.2:1.6:0.1"]);
    for r in rows(&out) {
        let beta: f64 = r[0].parse().unwrap();
        assert_eq!(r[1].is_empty(), beta > beta_c::<f64>());
        assert_eq!(r[2].is_empty(), beta <= beta_c::<f64>());
    }
    let t = &trailers(&out)[0]["tricritical"];
    assert_eq!(t["beta"].as_f64().unwrap(), 4f64.ln());
    assert!((t["k"].as_f64().unwrap() - 1.0820212806667226).abs() < 1e-12);
    assert!((t["k"].as_f64().unwrap() - kc2(beta_c::<f64>()).unwrap()).abs() < 1e-15);
}

#[test]
fn mix_exact_matches_library_and_fits_n_log_n() {
    let out = ok(&["mix-exact", "--n", "20:160:*2", "--beta", "1", "--k", "0.8", "--eps", "0.25"]);
    for r in rows(&out) {
        let n: usize = r[0].parse().unwrap();
        let p = ModelParams::new(n, 1.0, 0.8).unwrap();
        let t = t_mix_exact(&p, 0.25, &Starts::Extreme, default_t_max(n)).unwrap();
        assert_eq!(r[4], t.to_string());
    }
    let fit = &trailers(&out)[0]["fit"];
    assert_eq!(fit["model"], "poly_nlogn");
    assert!(fit["r_squared"].as_f64().unwrap() > 0.99);
}

#[test]
fn resolved_k_is_echoed() {
    let out = ok(&["phase-diagram", "--beta", "2,3", "--k", "0.9*k1"]);
    let resolved = meta(&out)["resolved_k"].as_array().unwrap().clone();
    assert_eq!(resolved.len(), 2);
    let k2 = resolved[0]["k"].as_f64().unwrap();
    assert!((k2 - 0.9 * 1.0151125540071309).abs() < 1e-8);
    assert_eq!(resolved[0]["spec"], "0.9*k1");
    assert_ne!(resolved[1]["k"], resolved[0]["k"]);
    assert!(rows(&out).iter().all(|r| r[3] == "rapid"));
}

#[test]
fn bottleneck_rate_is_reported_with_prediction() {
    let out = ok(&["bottleneck", "--n", "20:120:20", "--beta", "1", "--k", "1.6"]);
    let t = &trailers(&out)[0];
    let r = t["fit"]["exponent_or_rate"].as_f64().unwrap();
    let pred = t["predicted"]["rate"].as_f64().unwrap();
    assert!((r - pred).abs() / pred < 0.15, "{r} vs {pred}");
}

#[test]
fn scaling_fit_reads_own_output() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("b.csv");
    ok(&["--out", csv.to_str().unwrap(), "mix-exact", "--n", "20:160:*2", "--beta", "1", "--k", "0.8", "--eps", "0.25,0.1"]);
    let args = ["scaling-fit", "--input", csv.to_str().unwrap(), "--model", "poly"];
    assert_eq!(code(&args), 2);
    let out = ok(&[&args[..], &["--select", "eps=0.25"]].concat());
    assert_eq!(rows(&out).len(), 4);
    assert!(trailers(&out)[0]["fit"]["coefficient"].as_f64().unwrap() > 0.0);
}

#[test]
fn json_rows_are_objects() {
    let out = ok(&["--json", "coupling-contraction", "--beta", "1", "--k", "0.8", "--z", "0.25:1:0.25"]);
    let lines: Vec<&str> = out.lines().filter(|l| !l.starts_with('#')).collect();
    assert_eq!(lines.len(), 4);
    for l in lines {
        let v: Value = serde_json::from_str(l).unwrap();
        assert!(v["local"].as_f64().unwrap() < 1.0);
        assert_eq!(v["aggregate_contracts"], true);
    }
}

#[test]
fn trace_is_a_coupled_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("t.csv");
    ok(&["--out", p.to_str().unwrap(), "mix-couple", "--n", "30", "--beta", "1", "--k", "0.8", "--trace", "--against", "minus"]);
    let text = std::fs::read_to_string(Path::new(&p)).unwrap();
    let r = rows(&text);
    assert_eq!(r[0], ["0", "30", "30", "-30"]);
    let last = r.last().unwrap();
    assert_eq!(last[1], "0");
    assert_eq!(last[2], last[3]);
    let t = trailers(&text)[0]["coalesced_at"].as_u64().unwrap();
    assert_eq!(last[0], t.to_string());
}
