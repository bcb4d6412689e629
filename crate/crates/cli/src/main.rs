//! `chainstamp`: hash files locally, submit digests, check status, export and
//! verify proofs, run the service, and mine simulated blocks.
//!
//! Exit codes: 0 success or verified, 1 not verified, 2 unreadable input,
//! 3 network error, 4 rejected (by the server, or a malformed digest),
//! 5 unparseable bundle, 6 invalid chain file, 7 configuration error.

mod client;
mod exit;

use std::fs::File;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chainstamp::chain::codec::decode_records;
use chainstamp::chain::Chain;
use chainstamp::digest::sha256_reader;
use chainstamp::pipeline::Pipeline;
use chainstamp::{verify_with_bundle, Digest32, ProofBundle, Timestamp, Verdict, VerifyParams};
use chainstamp_service::api::{MinedView, ReceiptView, StampView};
use chainstamp_service::{ServiceConfig, StartupError};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::client::Client;
use crate::exit::{CliError, CliResult, Exit};

const DEFAULT_SERVER: &str = "http://127.0.0.1:8841";

#[derive(Parser)]
#[command(
    name = "chainstamp",
    version,
    about = "Trusted timestamps on a proof-of-work chain"
)]
struct Cli {
    /// Machine-readable JSON output.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ServerArg {
    #[arg(long, env = "CHAINSTAMP_SERVER", default_value = DEFAULT_SERVER)]
    server: String,
}

/// A digest given directly or computed from a local file.
#[derive(Args)]
#[group(required = true, multiple = false)]
struct Target {
    /// 64-character hex SHA-256 digest.
    digest: Option<String>,
    /// Hash this file locally; only the digest is sent.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the SHA-256 of a file, or of stdin when no path (or `-`) is given.
    Hash { path: Option<PathBuf> },
    /// Submit a digest for timestamping.
    Stamp {
        #[command(flatten)]
        target: Target,
        /// Commit immediately in its own transaction.
        #[arg(long)]
        priority: bool,
        #[command(flatten)]
        server: ServerArg,
    },
    /// Show the stamp status of a digest.
    Status {
        #[command(flatten)]
        target: Target,
        #[command(flatten)]
        server: ServerArg,
    },
    /// Download the proof bundle of a digest.
    Proof {
        #[command(flatten)]
        target: Target,
        /// Write the bundle here instead of stdout.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[command(flatten)]
        server: ServerArg,
    },
    /// Check a proof bundle against a chain file, without the service.
    Verify {
        #[arg(long)]
        bundle: PathBuf,
        #[arg(long, conflicts_with = "digest", required_unless_present = "digest")]
        file: Option<PathBuf>,
        #[arg(long)]
        digest: Option<String>,
        /// Chain file to check against. Without it the chain is downloaded
        /// from `--server`.
        #[arg(long)]
        chain: Option<PathBuf>,
        #[arg(long, env = "CHAINSTAMP_SERVER", default_value = DEFAULT_SERVER)]
        server: String,
        #[arg(long, default_value_t = chainstamp::ledger::DEFAULT_FINALITY_DEPTH)]
        finality_depth: u64,
        #[arg(long, default_value_t = 1)]
        dust_satoshi: u64,
    },
    /// Run the HTTP service and commitment scheduler.
    Serve {
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured bind address.
        #[arg(long)]
        bind: Option<String>,
    },
    /// Append blocks to the simulated chain.
    Mine {
        #[arg(long)]
        blocks: u64,
        /// Mine directly in the data directory of this config instead of
        /// asking a running server. Do not use while the server runs.
        #[arg(long)]
        config: Option<PathBuf>,
        #[command(flatten)]
        server: ServerArg,
    },
}

fn unreadable(path: &Path, e: io::Error) -> CliError {
    CliError::new(
        Exit::Unreadable,
        format!("cannot read {}: {e}", path.display()),
    )
}

fn hash_path(path: Option<&Path>) -> CliResult<Digest32> {
    match path {
        None => sha256_reader(io::stdin().lock()).map_err(|e| unreadable(Path::new("<stdin>"), e)),
        Some(p) if p == Path::new("-") => {
            sha256_reader(io::stdin().lock()).map_err(|e| unreadable(Path::new("<stdin>"), e))
        }
        Some(p) => {
            let f = File::open(p).map_err(|e| unreadable(p, e))?;
            sha256_reader(f).map_err(|e| unreadable(p, e))
        }
    }
}

fn parse_digest(s: &str) -> CliResult<Digest32> {
    s.trim()
        .parse()
        .map_err(|e| CliError::new(Exit::Rejected, format!("malformed digest {s:?}: {e}")))
}

impl Target {
    fn resolve(&self) -> CliResult<Digest32> {
        match (&self.digest, &self.file) {
            (Some(d), _) => parse_digest(d),
            (None, Some(f)) => hash_path(Some(f)),
            (None, None) => unreachable!("clap requires one"),
        }
    }
}

fn print_json(v: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn cmd_hash(path: Option<&Path>, as_json: bool) -> CliResult {
    let d = hash_path(path)?;
    if as_json {
        print_json(&json!({ "digest": d }));
    } else {
        println!("{d}");
    }
    Ok(Exit::Ok)
}

fn cmd_stamp(target: &Target, priority: bool, server: &str, as_json: bool) -> CliResult {
    let d = target.resolve()?;
    let receipt: ReceiptView =
        Client::new(server).post_json("/v1/stamps", &json!({ "hash": d, "priority": priority }))?;
    if as_json {
        print_json(&receipt);
    } else {
        println!("digest: {}", receipt.document_hash);
        println!("window_id: {}", receipt.window_id);
        println!("received_at: {}", receipt.received_at);
        println!("status: {}", receipt.status);
    }
    Ok(Exit::Ok)
}

fn cmd_status(target: &Target, server: &str, as_json: bool) -> CliResult {
    let d = target.resolve()?;
    let view: StampView = Client::new(server).get_json(&Client::stamp_path(&d))?;
    if as_json {
        print_json(&view);
        return Ok(Exit::Ok);
    }
    println!("digest: {}", view.document_hash);
    println!("status: {}", view.status);
    println!("window_id: {}", view.window_id);
    println!("confirmations: {}", view.confirmations);
    if let Some(t) = view.txid {
        println!("txid: {t}");
    }
    if let Some(a) = &view.address {
        println!("address: {}", a.as_str());
    }
    if let (Some(h), Some(t)) = (view.block_height, view.block_time) {
        println!("block: {h} at {t}");
    }
    Ok(Exit::Ok)
}

fn cmd_proof(target: &Target, output: Option<&Path>, server: &str) -> CliResult {
    let d = target.resolve()?;
    let text = Client::new(server).get_text(&format!("{}/proof", Client::stamp_path(&d)))?;
    let bundle = ProofBundle::from_json(&text)
        .map_err(|e| CliError::new(Exit::BadBundle, format!("server sent a bad bundle: {e}")))?;
    let pretty = bundle.to_json_pretty() + "\n";
    match output {
        Some(p) => std::fs::write(p, pretty).map_err(|e| {
            CliError::new(
                Exit::Unreadable,
                format!("cannot write {}: {e}", p.display()),
            )
        })?,
        None => io::stdout()
            .write_all(pretty.as_bytes())
            .map_err(|e| CliError::new(Exit::Unreadable, e.to_string()))?,
    }
    Ok(Exit::Ok)
}

fn load_chain(chain: Option<&Path>, server: &str) -> CliResult<Chain> {
    let bytes = match chain {
        Some(p) => {
            let mut buf = Vec::new();
            File::open(p)
                .and_then(|mut f| f.read_to_end(&mut buf))
                .map_err(|e| unreadable(p, e))?;
            buf
        }
        None => Client::new(server).get_bytes("/v1/chain/raw")?,
    };
    let (blocks, _) = decode_records(&bytes, false)
        .map_err(|e| CliError::new(Exit::BadChain, format!("chain file is damaged: {e}")))?;
    Chain::from_untrusted_blocks(blocks)
        .map_err(|e| CliError::new(Exit::BadChain, format!("chain file is invalid: {e}")))
}

#[allow(clippy::too_many_arguments)]
fn cmd_verify(
    bundle: &Path,
    file: Option<&Path>,
    digest: Option<&str>,
    chain: Option<&Path>,
    server: &str,
    params: VerifyParams,
    as_json: bool,
) -> CliResult {
    let text = std::fs::read_to_string(bundle).map_err(|e| unreadable(bundle, e))?;
    let bundle =
        ProofBundle::from_json(&text).map_err(|e| CliError::new(Exit::BadBundle, e.to_string()))?;
    let d = match (digest, file) {
        (Some(d), _) => parse_digest(d)?,
        (None, Some(f)) => hash_path(Some(f))?,
        (None, None) => unreachable!("clap requires one"),
    };
    let chain = load_chain(chain, server)?;
    let report = verify_with_bundle(&d, &bundle, &chain, &params);
    if as_json {
        print_json(&report);
    } else {
        println!("{}", report.render());
    }
    Ok(if report.verdict == Verdict::Verified {
        Exit::Ok
    } else {
        Exit::NotVerified
    })
}

fn load_config(path: Option<&Path>) -> CliResult<ServiceConfig> {
    ServiceConfig::load(path, std::env::vars())
        .map_err(|e| CliError::new(Exit::Config, format!("configuration: {e}")))
}

fn cmd_serve(config: Option<&Path>, bind: Option<String>) -> CliResult {
    let mut config = load_config(config)?;
    if let Some(b) = bind {
        config.bind = b;
        config
            .validate()
            .map_err(|e| CliError::new(Exit::Config, format!("configuration: {e}")))?;
    }
    tracing_subscriber::fmt().with_writer(io::stderr).init();
    let runtime =
        tokio::runtime::Runtime::new().map_err(|e| CliError::new(Exit::Config, e.to_string()))?;
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    runtime
        .block_on(chainstamp_service::serve(config, shutdown))
        .map_err(|e| match e {
            StartupError::Config(_) | StartupError::Pipeline(_) | StartupError::Bind(_) => {
                CliError::new(Exit::Config, format!("cannot start: {e}"))
            }
            _ => CliError::new(Exit::Unreadable, format!("cannot start: {e}")),
        })?;
    Ok(Exit::Ok)
}

fn cmd_mine(blocks: u64, config: Option<&Path>, server: &str, as_json: bool) -> CliResult {
    let view = match config {
        Some(path) => {
            let config = load_config(Some(path))?;
            let paths = config.storage().ok_or_else(|| {
                CliError::new(Exit::Config, "configuration is in-memory; nothing to mine")
            })?;
            let pipeline_config = config
                .pipeline()
                .map_err(|e| CliError::new(Exit::Config, e.to_string()))?;
            std::fs::create_dir_all(&config.data_dir).map_err(|e| {
                CliError::new(
                    Exit::Unreadable,
                    format!("{}: {e}", config.data_dir.display()),
                )
            })?;
            let now = Timestamp::now();
            let mut p = Pipeline::open(pipeline_config, &paths, now)
                .map_err(|e| CliError::new(Exit::Config, format!("cannot open state: {e}")))?;
            let mined = p
                .mine(blocks, now)
                .map_err(|e| CliError::new(Exit::Unreadable, e.to_string()))?;
            MinedView {
                tip_height: p.chain().tip().header.height,
                mined,
            }
        }
        None => Client::new(server).post_json("/v1/admin/mine", &json!({ "blocks": blocks }))?,
    };
    if as_json {
        print_json(&view);
    } else {
        println!(
            "mined {} blocks; tip height {}",
            view.mined.len(),
            view.tip_height
        );
    }
    Ok(Exit::Ok)
}

fn run(cli: Cli) -> CliResult {
    let as_json = cli.json;
    match cli.command {
        Command::Hash { path } => cmd_hash(path.as_deref(), as_json),
        Command::Stamp {
            target,
            priority,
            server,
        } => cmd_stamp(&target, priority, &server.server, as_json),
        Command::Status { target, server } => cmd_status(&target, &server.server, as_json),
        Command::Proof {
            target,
            output,
            server,
        } => cmd_proof(&target, output.as_deref(), &server.server),
        Command::Verify {
            bundle,
            file,
            digest,
            chain,
            server,
            finality_depth,
            dust_satoshi,
        } => cmd_verify(
            &bundle,
            file.as_deref(),
            digest.as_deref(),
            chain.as_deref(),
            &server,
            VerifyParams {
                finality_depth,
                dust_satoshi,
            },
            as_json,
        ),
        Command::Serve { config, bind } => cmd_serve(config.as_deref(), bind),
        Command::Mine {
            blocks,
            config,
            server,
        } => cmd_mine(blocks, config.as_deref(), &server.server, as_json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(exit) => ExitCode::from(exit as u8),
        Err(e) => {
            eprintln!("chainstamp: {e}");
            ExitCode::from(e.exit as u8)
        }
    }
}
