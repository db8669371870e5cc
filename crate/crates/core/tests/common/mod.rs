//! Golden transcripts shared by the wire and acceptance targets.
//!
//! Set `HETAUTH_BLESS=1` to rewrite the files under `testdata/`.

#![allow(dead_code)]

use std::fs;
use std::path::PathBuf;

use hetauth::algebra::{GroupElement, ScalarField};
use hetauth::deployment::{Deployment, DeploymentConfig};
use hetauth::wire::{MessageType, WireMessage};
use hetauth::Toy;

pub const GOLDEN_SEEDS: [u64; 3] = [1, 2, 3];

pub fn testdata(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("testdata")
        .join(name)
}

fn blessing() -> bool {
    std::env::var_os("HETAUTH_BLESS").is_some_and(|v| v == "1")
}

fn label(bytes: &[u8]) -> &'static str {
    bytes
        .get(1)
        .and_then(|&b| MessageType::from_byte(b))
        .map_or("unknown", MessageType::name)
}

/// Registration of alice and sensor-1 plus two handshakes, one message per
/// line as `<phase> <type> <hex>`.
pub fn transcript(seed: u64) -> String {
    let mut d = Deployment::<Toy>::provision(seed, &DeploymentConfig::default()).unwrap();
    let mut out = format!("# toy q=1009 n=256 seed={seed}\n");
    for m in d.registration_transcript() {
        out.push_str(&format!("registration {} {}\n", label(m), hex::encode(m)));
    }
    for _ in 0..2 {
        let h = d.handshake(0, 0).unwrap();
        assert!(h.keys_agree());
        for m in [&h.request, &h.reply] {
            out.push_str(&format!("auth {} {}\n", label(m), hex::encode(m)));
        }
    }
    out
}

/// Decoded fields of the first service request for `seed`.
pub fn request_fields(seed: u64) -> String {
    let mut d = Deployment::<Toy>::provision(seed, &DeploymentConfig::default()).unwrap();
    let bytes = d.begin(0, 0).unwrap();
    let WireMessage::ServiceRequest(r) = d.codec.decode(&bytes).unwrap() else {
        panic!("not a service request");
    };
    let fields = serde_json::json!({
        "r2": hex::encode(r.r2_point.to_bytes()),
        "c": hex::encode(r.sigma.c.to_bytes()),
        "r1": hex::encode(r.sigma.r1_point.to_bytes()),
        "r_1": hex::encode(&r.sigma.r_1),
        "r_2": hex::encode(&r.sigma.r_2),
        "u": hex::encode(r.sigma.u.to_bytes()),
        "t_c": r.timestamp_ms,
    });
    serde_json::to_string_pretty(&fields).unwrap() + "\n"
}

/// Compare `actual` with the pinned file, or rewrite it when blessing.
pub fn check_golden(name: &str, actual: &str) -> Result<(), String> {
    let path = testdata(name);
    if blessing() {
        fs::write(&path, actual).map_err(|e| format!("{}: {e}", path.display()))?;
        return Ok(());
    }
    let pinned = fs::read_to_string(&path).map_err(|e| format!("{}: {e}", path.display()))?;
    if pinned == actual {
        Ok(())
    } else {
        let line = pinned
            .lines()
            .zip(actual.lines())
            .position(|(a, b)| a != b)
            .map_or(pinned.lines().count().min(actual.lines().count()), |i| i);
        Err(format!(
            "{name} differs from the pinned copy at line {}",
            line + 1
        ))
    }
}

pub fn check_all_golden() -> Result<usize, String> {
    let mut n = 0;
    for seed in GOLDEN_SEEDS {
        check_golden(&format!("transcript-seed{seed}.txt"), &transcript(seed))?;
        n += 1;
    }
    check_golden("service-request-seed1.json", &request_fields(1))?;
    Ok(n + 1)
}
