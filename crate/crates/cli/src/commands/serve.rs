use std::net::{IpAddr, SocketAddr};
use std::path::PathBuf;

use anyhow::{anyhow, Result};
use clap::Args;
use mmc_review::ServeOptions;

use crate::io::require_inputs;

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Port to listen on
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    /// Address to bind
    #[arg(long, default_value = "127.0.0.1")]
    pub host: IpAddr,
    /// Directory holding projections.jsonl, documents.jsonl, adjudication.jsonl and the append-only logs
    #[arg(long, value_name = "DIR")]
    pub data_dir: PathBuf,
    /// Static files for the review UI, served under /
    #[arg(long, value_name = "DIR")]
    pub ui_dir: Option<PathBuf>,
    /// Origin allowed by CORS [default: any]
    #[arg(long)]
    pub cors_origin: Option<String>,
}

pub fn serve(a: ServeArgs) -> Result<()> {
    require_inputs([a.data_dir.as_path()])?;
    let addr = SocketAddr::new(a.host, a.port);
    let opts = ServeOptions { ui_dir: a.ui_dir, cors_origin: a.cors_origin };
    let rt = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    eprintln!("listening on http://{addr}");
    rt.block_on(mmc_review::serve(addr, a.data_dir, opts)).map_err(|e| anyhow!(e))
}
