use std::io::Write;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use translucent_server::service::DEFAULT_TIMER_MINUTES;
use translucent_server::{router, SessionService};

#[derive(Debug, Parser)]
#[command(
    name = "translucent-server",
    version,
    about = "Run the collaborative analysis session server"
)]
struct Args {
    /// Address to listen on; port 0 picks a free port.
    #[arg(long, env = "TRANSLUCENT_LISTEN", default_value = "127.0.0.1:8080")]
    listen: SocketAddr,
    /// A corpus directory, or a directory of corpus directories.
    #[arg(long, env = "TRANSLUCENT_CORPUS_ROOT")]
    corpus_root: PathBuf,
    /// Where session logs are kept.
    #[arg(long, env = "TRANSLUCENT_DATA_DIR")]
    data_dir: PathBuf,
    /// Advisory session length shown to clients.
    #[arg(long, env = "TRANSLUCENT_TIMER_MINUTES", default_value_t = DEFAULT_TIMER_MINUTES)]
    timer_minutes: u32,
}

#[tokio::main]
async fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(
            tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
        )
        .with_writer(std::io::stderr)
        .init();
    let args = Args::parse();
    let service = match SessionService::open(&args.corpus_root, &args.data_dir, args.timer_minutes)
    {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let listener = match tokio::net::TcpListener::bind(args.listen).await {
        Ok(l) => l,
        Err(e) => {
            eprintln!("error: cannot listen on {}: {e}", args.listen);
            return ExitCode::from(1);
        }
    };
    let addr = listener.local_addr().expect("bound socket has an address");
    println!("listening on {addr}");
    let _ = std::io::stdout().flush();
    let shutdown = async {
        let _ = tokio::signal::ctrl_c().await;
    };
    if let Err(e) = axum::serve(listener, router(service))
        .with_graceful_shutdown(shutdown)
        .await
    {
        eprintln!("error: {e}");
        return ExitCode::from(1);
    }
    ExitCode::SUCCESS
}
