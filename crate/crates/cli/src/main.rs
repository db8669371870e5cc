//! Command-line front end: provisioning, handshakes over the simulated
//! network or TCP, attack scenarios and the benchmark.

use std::io::{self, Write};
use std::process::ExitCode;
use std::sync::{Arc, Mutex};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use hetauth::adversary::{self, AttackOptions, Scenario};
use hetauth::algebra::{GroupElement, PairingBackend};
use hetauth::bench::{run_benchmark, BenchError};
use hetauth::deployment::{
    Deployment, DeploymentConfig, DeploymentError, DEFAULT_DELTA_T_MS, DEFAULT_PAYLOAD_BITS,
};
use hetauth::protocol::{Clock, Gateway, SystemClock, User};
use hetauth::wire::{self, Client, SocketError};
use hetauth::{Bls12, ToyWide};

const EXIT_FAILED: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_PROTOCOL: u8 = 3;
const EXIT_IO: u8 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum BackendChoice {
    /// Discrete-log oracle over a 61-bit group. Not secure.
    Toy,
    /// BLS12-381.
    Production,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum OutputFormat {
    Json,
    Text,
}

#[derive(Debug, Args)]
struct Common {
    #[arg(
        long,
        value_enum,
        global = true,
        env = "HETAUTH_BACKEND",
        default_value = "toy"
    )]
    backend: BackendChoice,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    #[arg(
        long = "out",
        alias = "report",
        value_enum,
        global = true,
        default_value = "text"
    )]
    out: OutputFormat,
}

#[derive(Debug, Parser)]
#[command(
    name = "hetauth",
    version,
    about = "Anonymous PKI-to-CLC authentication and key agreement"
)]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run gateway setup and generate a user key pair.
    Keygen {
        #[arg(long, default_value = "alice")]
        id: String,
        #[arg(long, default_value_t = DEFAULT_PAYLOAD_BITS)]
        payload_bits: usize,
    },
    /// Provision a network and show what crossed the registration channel.
    Register {
        #[arg(long = "user", default_values = ["alice"])]
        users: Vec<String>,
        #[arg(long = "sensor", default_values = ["sensor-1"])]
        sensors: Vec<String>,
    },
    /// Authenticate user 0 to sensor 0.
    Handshake {
        #[arg(long, default_value_t = 1)]
        count: usize,
        /// Talk to a `serve` process provisioned with the same seed.
        #[arg(long)]
        connect: Option<String>,
    },
    /// Serve sensor 0 over TCP until killed.
    Serve {
        #[arg(long, default_value = "127.0.0.1:7878")]
        listen: String,
    },
    /// Run an attack scenario and report its verdict.
    Attack {
        scenario: Scenario,
        #[arg(long)]
        volume: Option<usize>,
        #[arg(long)]
        attempts: Option<usize>,
        #[arg(long)]
        sessions: Option<usize>,
        /// Sampled bit flips for tamper; exhaustive on toy when omitted.
        #[arg(long)]
        flips: Option<usize>,
    },
    /// Operation counts, timings and wire cost.
    Bench {
        #[arg(long, default_value_t = 100)]
        iterations: usize,
        #[arg(long, default_value_t = DEFAULT_PAYLOAD_BITS)]
        payload_bits: usize,
    },
}

#[derive(Debug)]
enum CliError {
    Protocol(String),
    Io(String),
    Usage(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Protocol(_) => EXIT_PROTOCOL,
            CliError::Io(_) => EXIT_IO,
            CliError::Usage(_) => EXIT_USAGE,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Protocol(m) | CliError::Io(m) | CliError::Usage(m) => m,
        }
    }
}

impl From<DeploymentError> for CliError {
    fn from(e: DeploymentError) -> Self {
        CliError::Protocol(e.to_string())
    }
}

impl From<SocketError> for CliError {
    fn from(e: SocketError) -> Self {
        match e {
            SocketError::Decode(_) | SocketError::Encode(_) => CliError::Protocol(e.to_string()),
            _ => CliError::Io(e.to_string()),
        }
    }
}

impl From<BenchError> for CliError {
    fn from(e: BenchError) -> Self {
        match e {
            BenchError::NoIterations => CliError::Usage(e.to_string()),
            _ => CliError::Protocol(e.to_string()),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

/// What a command produced: a document, its text rendering, and whether
/// it counts as success.
struct Outcome {
    json: Value,
    text: String,
    ok: bool,
}

impl Outcome {
    fn ok(json: Value, text: String) -> Self {
        Outcome {
            json,
            text,
            ok: true,
        }
    }
}

fn hex_point<B: PairingBackend>(p: &B::G1) -> String {
    hex::encode(p.to_bytes())
}

fn lossy(id: &[u8]) -> String {
    String::from_utf8_lossy(id).into_owned()
}

fn keygen<B: PairingBackend>(
    seed: u64,
    id: &str,
    payload_bits: usize,
) -> Result<Outcome, CliError> {
    use rand_chacha::rand_core::SeedableRng;
    let mut rng = rand_chacha::ChaCha20Rng::seed_from_u64(seed);
    let gateway = Gateway::<B>::new(payload_bits, DEFAULT_DELTA_T_MS, &mut rng)
        .map_err(|e| CliError::Protocol(e.to_string()))?;
    let params = gateway.params().clone();
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    let user = User::new(id.as_bytes(), params.clone(), clock, &mut rng)
        .map_err(|e| CliError::Protocol(e.to_string()))?;
    let p_pub = hex_point::<B>(&params.p_pub);
    let pk = hex_point::<B>(&user.keys().public);
    let json = json!({
        "backend": B::NAME,
        "seed": seed,
        "group_order": B::order(),
        "security_bits": B::SECURITY_BITS,
        "payload_bits": params.payload_bits(),
        "delta_t_ms": params.delta_t_ms,
        "p_pub": p_pub,
        "user": { "id": id, "public_key": pk },
    });
    let text = format!(
        "backend {} seed {}\nP_pub {}\nuser {} PK_p {}\n",
        B::NAME,
        seed,
        p_pub,
        id,
        pk
    );
    Ok(Outcome::ok(json, text))
}

fn register<B: PairingBackend>(
    seed: u64,
    users: &[String],
    sensors: &[String],
) -> Result<Outcome, CliError> {
    let cfg = DeploymentConfig::default()
        .with_users(users)
        .with_sensors(sensors);
    let d = Deployment::<B>::provision(seed, &cfg)?;
    let messages: Vec<Value> = d
        .registration_transcript()
        .iter()
        .map(|m| {
            let kind = wire::MessageType::from_byte(m[1]).map_or("?", |t| t.name());
            json!({ "type": kind, "bytes": m.len() })
        })
        .collect();
    let users_json: Vec<Value> = d
        .users
        .iter()
        .map(|u| {
            json!({
                "id": lossy(u.id()),
                "public_key": hex_point::<B>(&u.keys().public),
                "acd": u.credential().map(|c| hex_point::<B>(&c.acd)),
            })
        })
        .collect();
    let sensors_json: Vec<Value> = d
        .sensors
        .iter()
        .map(|s| {
            let pk = s.public_key();
            json!({
                "id": lossy(s.id()),
                "phase": s.phase().to_string(),
                "directory_entries": s.directory().len(),
                "t_point": pk.as_ref().map(|k| hex_point::<B>(&k.t_point)),
                "pk_c1": pk.as_ref().map(|k| hex_point::<B>(&k.pk_c1)),
            })
        })
        .collect();
    let mut text = format!("backend {} seed {}\n", B::NAME, seed);
    for u in &d.users {
        text.push_str(&format!("user {} {}\n", lossy(u.id()), u.phase()));
    }
    for s in &d.sensors {
        text.push_str(&format!(
            "sensor {} {} ({} directory entries)\n",
            lossy(s.id()),
            s.phase(),
            s.directory().len()
        ));
    }
    text.push_str(&format!(
        "{} registration messages, {} bytes\n",
        messages.len(),
        d.registration_transcript()
            .iter()
            .map(Vec::len)
            .sum::<usize>()
    ));
    let json = json!({
        "backend": B::NAME,
        "seed": seed,
        "users": users_json,
        "sensors": sensors_json,
        "registration_messages": messages,
    });
    Ok(Outcome::ok(json, text))
}

fn socket_deployment<B: PairingBackend>(seed: u64) -> Result<Deployment<B>, CliError> {
    let clock: Arc<dyn Clock> = Arc::new(SystemClock);
    Ok(Deployment::<B>::provision_with_clock(
        seed,
        &DeploymentConfig::default(),
        clock,
    )?)
}

fn handshake<B: PairingBackend>(
    seed: u64,
    count: usize,
    connect: Option<&str>,
) -> Result<Outcome, CliError> {
    let mut sessions = Vec::new();
    let mut all_ok = true;
    let transport = if connect.is_some() { "tcp" } else { "simnet" };
    match connect {
        None => {
            let mut d = Deployment::<B>::provision(seed, &DeploymentConfig::default())?;
            for i in 0..count {
                let h = d.handshake(0, 0)?;
                let agree = h.keys_agree();
                all_ok &= agree;
                let stop = !agree;
                sessions.push(json!({
                    "index": i,
                    "sensor_decision": match &h.sensor_decision {
                        Ok(()) => "accepted".to_string(),
                        Err(r) => format!("{r:?}"),
                    },
                    "user_key": h.user_session.as_ref().ok().map(|s| s.key.fingerprint()),
                    "sensor_key": h.sensor_session.as_ref().map(|s| s.key.fingerprint()),
                    "keys_agree": agree,
                    "request_bytes": h.request.len(),
                    "reply_bytes": h.reply.len(),
                }));
                if stop {
                    break;
                }
            }
        }
        Some(addr) => {
            let mut d = socket_deployment::<B>(seed)?;
            let mut client = Client::connect(addr, d.codec)?;
            for i in 0..count {
                let request = d.begin(0, 0)?;
                let reply = client.exchange_bytes(&request)?;
                let session = d.reply_to_user(0, 0, &reply)?;
                let failed = session.is_err();
                all_ok &= !failed;
                sessions.push(json!({
                    "index": i,
                    "user_key": session.as_ref().ok().map(|s| s.key.fingerprint()),
                    "error": session.as_ref().err().map(|e| e.to_string()),
                    "request_bytes": request.len(),
                    "reply_bytes": reply.len(),
                }));
                if failed {
                    break;
                }
            }
        }
    }
    let mut text = format!("backend {} seed {} over {}\n", B::NAME, seed, transport);
    for s in &sessions {
        text.push_str(&format!(
            "session {}: user {} sensor {}\n",
            s["index"],
            s["user_key"].as_str().unwrap_or("-"),
            s["sensor_key"]
                .as_str()
                .unwrap_or(if connect.is_some() { "(remote)" } else { "-" }),
        ));
    }
    let json = json!({
        "backend": B::NAME,
        "seed": seed,
        "transport": transport,
        "established": all_ok,
        "sessions": sessions,
    });
    if all_ok {
        Ok(Outcome::ok(json, text))
    } else {
        Err(CliError::Protocol(format!("handshake failed\n{text}")))
    }
}

fn serve<B: PairingBackend>(seed: u64, listen: &str, out: OutputFormat) -> Result<(), CliError> {
    let mut d = socket_deployment::<B>(seed)?;
    let sensor = d.sensors.remove(0);
    let id = lossy(sensor.id());
    let server = wire::serve(listen, Arc::new(Mutex::new(sensor)), d.codec)?;
    let addr = server.local_addr().to_string();
    let mut stdout = io::stdout().lock();
    match out {
        OutputFormat::Json => writeln!(
            stdout,
            "{}",
            json!({ "backend": B::NAME, "seed": seed, "sensor": id, "listening": addr })
        )?,
        OutputFormat::Text => writeln!(stdout, "sensor {id} ({}) listening on {addr}", B::NAME)?,
    }
    stdout.flush()?;
    drop(stdout);
    server.wait();
    Ok(())
}

fn attack<B: PairingBackend>(
    seed: u64,
    scenario: Scenario,
    opts: AttackOptions,
) -> Result<Outcome, CliError> {
    let verdict = adversary::run::<B>(scenario, seed, &opts)?;
    let json = serde_json::to_value(&verdict).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Outcome {
        text: verdict.to_text(),
        json,
        ok: verdict.passed,
    })
}

fn bench<B: PairingBackend>(
    seed: u64,
    iterations: usize,
    payload_bits: usize,
) -> Result<Outcome, CliError> {
    let report = run_benchmark::<B>(seed, iterations, payload_bits)?;
    let json = serde_json::to_value(&report).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(Outcome::ok(json, report.to_text()))
}

fn execute<B: PairingBackend>(common: &Common, command: &Command) -> Result<Outcome, CliError> {
    let seed = common.seed;
    match command {
        Command::Keygen { id, payload_bits } => keygen::<B>(seed, id, *payload_bits),
        Command::Register { users, sensors } => register::<B>(seed, users, sensors),
        Command::Handshake { count, connect } => handshake::<B>(seed, *count, connect.as_deref()),
        Command::Serve { listen } => {
            serve::<B>(seed, listen, common.out)?;
            Ok(Outcome::ok(Value::Null, String::new()))
        }
        Command::Attack {
            scenario,
            volume,
            attempts,
            sessions,
            flips,
        } => {
            let defaults = AttackOptions::default();
            let sampled = if B::ORACLE_DLOG { None } else { Some(1000) };
            let opts = AttackOptions {
                volume: volume.unwrap_or(defaults.volume),
                attempts: attempts.unwrap_or(defaults.attempts),
                sessions: sessions.unwrap_or(defaults.sessions),
                flips: flips.or(sampled),
            };
            attack::<B>(seed, *scenario, opts)
        }
        Command::Bench {
            iterations,
            payload_bits,
        } => bench::<B>(seed, *iterations, *payload_bits),
    }
}

fn emit(outcome: &Outcome, out: OutputFormat) -> io::Result<()> {
    let mut stdout = io::stdout().lock();
    match out {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut stdout, &outcome.json)?;
            writeln!(stdout)?;
        }
        OutputFormat::Text => stdout.write_all(outcome.text.as_bytes())?,
    }
    stdout.flush()
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(EXIT_USAGE)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match cli.common.backend {
        BackendChoice::Toy => execute::<ToyWide>(&cli.common, &cli.command),
        BackendChoice::Production => execute::<Bls12>(&cli.common, &cli.command),
    };
    match result {
        Ok(outcome) => {
            if matches!(cli.command, Command::Serve { .. }) {
                return ExitCode::SUCCESS;
            }
            if let Err(e) = emit(&outcome, cli.common.out) {
                if e.kind() != io::ErrorKind::BrokenPipe {
                    eprintln!("error: {e}");
                }
                return ExitCode::from(EXIT_IO);
            }
            if outcome.ok {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_FAILED)
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
