use std::io::{BufRead, BufReader};
use std::path::PathBuf;
use std::process::{Child, Command, Output, Stdio};

use serde_json::Value;

fn hetauth() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_hetauth"));
    cmd.env_remove("HETAUTH_BACKEND");
    cmd
}

fn run(args: &[&str]) -> Output {
    hetauth().args(args).output().unwrap()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout)
        .unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn golden(name: &str, actual: &str) {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("testdata")
        .join(name);
    if std::env::var_os("HETAUTH_BLESS").is_some() {
        std::fs::create_dir_all(path.parent().unwrap()).unwrap();
        std::fs::write(&path, actual).unwrap();
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("{}: {e} (run with HETAUTH_BLESS=1)", path.display()));
    assert_eq!(actual, expected, "{name}");
}

#[test]
fn handshake_keys_agree_on_both_backends() {
    for backend in ["toy", "production"] {
        let out = run(&[
            "handshake",
            "--backend",
            backend,
            "--seed",
            "7",
            "--count",
            "2",
            "--out",
            "json",
        ]);
        assert!(out.status.success(), "{backend}: {out:?}");
        let v = json(&out);
        assert_eq!(v["established"], true);
        assert_eq!(v["sessions"].as_array().unwrap().len(), 2);
        for s in v["sessions"].as_array().unwrap() {
            assert_eq!(s["keys_agree"], true);
            assert_eq!(s["user_key"], s["sensor_key"]);
        }
    }
}

#[test]
fn handshake_text_is_stable() {
    let out = run(&["handshake", "--seed", "7", "--count", "3"]);
    assert!(out.status.success());
    golden(
        "handshake-seed7.txt",
        &String::from_utf8(out.stdout).unwrap(),
    );
}

#[test]
fn environment_selects_the_backend() {
    let out = hetauth()
        .env("HETAUTH_BACKEND", "production")
        .args(["keygen", "--out", "json"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert_eq!(json(&out)["backend"], "bls12-381");

    // The flag wins over the environment.
    let out = hetauth()
        .env("HETAUTH_BACKEND", "production")
        .args(["keygen", "--backend", "toy", "--out", "json"])
        .output()
        .unwrap();
    assert_eq!(json(&out)["backend"], "toy");
}

#[test]
fn exit_codes_are_distinct() {
    assert_eq!(run(&["keygen"]).status.code(), Some(0));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(
        run(&["keygen", "--backend", "quantum"]).status.code(),
        Some(2)
    );
    assert_eq!(run(&["attack", "nonsense"]).status.code(), Some(2));
    assert_eq!(run(&["bench", "--iterations", "0"]).status.code(), Some(2));
    assert_eq!(
        run(&["keygen", "--payload-bits", "7"]).status.code(),
        Some(3)
    );

    let port = std::net::TcpListener::bind("127.0.0.1:0")
        .unwrap()
        .local_addr()
        .unwrap()
        .port();
    let out = run(&["handshake", "--connect", &format!("127.0.0.1:{port}")]);
    assert_eq!(out.status.code(), Some(4));
    assert!(!out.stderr.is_empty());
}

#[test]
fn attack_reports_a_verdict() {
    for scenario in ["replay", "dos", "tamper", "impersonation", "anonymity"] {
        let out = run(&[
            "attack",
            scenario,
            "--seed",
            "3",
            "--report",
            "json",
            "--volume",
            "50",
            "--attempts",
            "50",
            "--sessions",
            "5",
            "--flips",
            "200",
        ]);
        assert_eq!(
            out.status.code(),
            Some(0),
            "{scenario}: {}",
            String::from_utf8_lossy(&out.stdout)
        );
        let v = json(&out);
        assert_eq!(v["scenario"], scenario);
        assert_eq!(v["seed"], 3);
        assert_eq!(v["passed"], true);
        for c in v["checks"].as_array().unwrap() {
            assert!(
                c["name"].is_string()
                    && c["passed"].is_boolean()
                    && c["informational"].is_boolean()
            );
        }
    }
    let text = run(&["attack", "replay", "--report", "text"]);
    assert!(String::from_utf8(text.stdout)
        .unwrap()
        .starts_with("scenario replay"));
}

enum Kind {
    Int,
    Num,
    Str,
    Bool,
    Counts,
    Timing,
}

fn check(v: &Value, path: &str, kind: &Kind) {
    let ok = match kind {
        Kind::Int => v.is_u64(),
        Kind::Num => v.is_number(),
        Kind::Str => v.is_string(),
        Kind::Bool => v.is_boolean(),
        Kind::Counts => {
            ["pairings", "scalar_mults", "gt_exps", "hashes", "macs"]
                .iter()
                .all(|k| v[k].is_u64())
                && v.as_object().map(|o| o.len()) == Some(5)
        }
        Kind::Timing => {
            v["samples"].is_u64()
                && ["mean_ms", "variance_ms2", "stddev_ms", "min_ms", "max_ms"]
                    .iter()
                    .all(|k| v[k].is_number())
        }
    };
    assert!(ok, "{path}: {v}");
}

/// Mirrors docs/bench-schema.md.
#[test]
fn bench_json_follows_the_schema() {
    use Kind::*;
    let out = run(&["bench", "--iterations", "3", "--seed", "5", "--out", "json"]);
    assert!(out.status.success());
    let v = json(&out);
    let top = [
        ("schema_version", Int),
        ("backend", Str),
        ("group_order", Str),
        ("security_bits", Int),
        ("seed", Int),
        ("iterations", Int),
        ("payload_bits", Int),
        ("unscoped", Counts),
        ("total", Counts),
        ("counts_stable", Bool),
        ("published_total_ms", Num),
    ];
    for (k, kind) in &top {
        check(&v[k], k, kind);
    }
    assert_eq!(v["schema_version"], 1);
    assert_eq!(v["iterations"], 3);

    for c in v["counts"].as_array().unwrap() {
        check(&c["entity"], "counts[].entity", &Str);
        check(&c["phase"], "counts[].phase", &Str);
        check(&c["counts"], "counts[].counts", &Counts);
        check(&c["notation"], "counts[].notation", &Str);
    }
    for e in ["user", "gateway", "sensor"] {
        check(&v["entity_totals"][e], e, &Counts);
    }
    let comparisons = v["comparisons"].as_array().unwrap();
    assert_eq!(comparisons.len(), 3);
    for c in comparisons {
        for k in [
            "entity",
            "basis",
            "measured_notation",
            "published_notation",
            "delta",
        ] {
            check(&c[k], k, &Str);
        }
        check(&c["measured"], "measured", &Counts);
        check(&c["matches"], "matches", &Bool);
    }
    for t in [
        "setup",
        "registration",
        "user_begin",
        "sensor_handle",
        "user_complete",
        "handshake_total",
    ] {
        check(&v["timings"][t], t, &Timing);
    }
    assert_eq!(v["timings"]["handshake_total"]["samples"], 3);
    let wire = &v["wire"];
    for k in [
        "header_bytes",
        "point_bytes",
        "scalar_bytes",
        "payload_bytes",
        "timestamp_bytes",
        "mac_bytes",
        "service_request_bytes_analytic",
        "service_request_bytes_measured",
        "mac_confirm_bytes_analytic",
        "mac_confirm_bytes_measured",
        "total_bytes",
        "total_bits",
        "published_bits",
        "compact_point_bytes",
        "compact_total_bits",
    ] {
        check(&wire[k], k, &Int);
    }
    check(
        &wire["analytic_matches_measured"],
        "analytic_matches_measured",
        &Bool,
    );
    assert_eq!(wire["analytic_matches_measured"], true);
}

struct Server(Child);

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn serve_and_connect_over_tcp() {
    let mut child = hetauth()
        .args([
            "serve",
            "--seed",
            "9",
            "--listen",
            "127.0.0.1:0",
            "--out",
            "json",
        ])
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut line = String::new();
    BufReader::new(child.stdout.take().unwrap())
        .read_line(&mut line)
        .unwrap();
    let _server = Server(child);
    let ready: Value = serde_json::from_str(&line).unwrap();
    let addr = ready["listening"].as_str().unwrap();

    let out = run(&[
        "handshake",
        "--seed",
        "9",
        "--count",
        "3",
        "--connect",
        addr,
        "--out",
        "json",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v = json(&out);
    assert_eq!(v["established"], true);
    assert_eq!(v["transport"], "tcp");
    assert_eq!(v["sessions"].as_array().unwrap().len(), 3);

    // A client provisioned differently is not a registered user.
    let out = run(&["handshake", "--seed", "10", "--connect", addr]);
    assert_eq!(out.status.code(), Some(3));
}
