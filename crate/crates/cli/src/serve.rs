use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::Args;
use tracing_subscriber::EnvFilter;

use arcle_service::ServiceConfig;

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "ARCLE_PORT", default_value_t = 8080)]
    port: u16,
    #[arg(long, env = "ARCLE_HOST", default_value = "127.0.0.1")]
    host: String,
    #[arg(long, env = "ARCLE_DATA_ROOT")]
    data_root: Option<PathBuf>,
    /// Directory for per-session JSONL traces.
    #[arg(long, env = "ARCLE_TRACE_DIR")]
    trace_dir: Option<PathBuf>,
    /// Idle seconds before a session expires.
    #[arg(long, env = "ARCLE_SESSION_TTL", default_value_t = 1800)]
    session_ttl: u64,
    /// Allowed browser origin (any when unset).
    #[arg(long, env = "ARCLE_CORS_ORIGIN")]
    cors_origin: Option<String>,
}

pub fn run(args: ServeArgs) -> Result<ExitCode> {
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new("info")))
        .init();
    let addr: SocketAddr = format!("{}:{}", args.host, args.port)
        .parse()
        .map_err(|_| crate::common::usage(format!("bad address {}:{}", args.host, args.port)))?;
    let config = ServiceConfig {
        data_root: args.data_root,
        trace_dir: args.trace_dir,
        session_ttl: Duration::from_secs(args.session_ttl),
        cors_origin: args.cors_origin,
    };
    let runtime = tokio::runtime::Runtime::new()?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(addr).await.with_context(|| format!("binding {addr}"))?;
        arcle_service::serve(listener, config).await?;
        Ok::<_, anyhow::Error>(())
    })?;
    Ok(ExitCode::SUCCESS)
}
