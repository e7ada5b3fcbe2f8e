use clap::Parser;
use tracing_subscriber::EnvFilter;

/// UniSymNet symbolic-regression service.
#[derive(Parser)]
#[command(version)]
struct Args {
    /// Address to listen on.
    #[arg(long, default_value = "127.0.0.1:8080", env = "UNISYM_ADDR")]
    addr: String,
}

#[tokio::main]
async fn main() -> std::io::Result<()> {
    tracing_subscriber::fmt().with_env_filter(EnvFilter::from_default_env()).init();
    let args = Args::parse();
    let listener = tokio::net::TcpListener::bind(&args.addr).await?;
    tracing::info!(addr = %listener.local_addr()?, "listening");
    unisym_server::serve(listener, async {
        let _ = tokio::signal::ctrl_c().await;
    })
    .await
}
