//! BM25 scorer speaking the external-ranker wire protocol on stdin/stdout,
//! or on TCP connections with `--listen`.

use std::io::{self, BufReader};
use std::net::TcpListener;

use anyhow::{Context, Result};
use clap::{Parser, ValueEnum};

use anchorkit::bm25::{Bm25Params, QueryMode};
use anchorkit::ranking::stub::serve_bm25;

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Title,
    Context,
}

#[derive(Parser)]
#[command(name = "anchorkit-bm25-scorer", version)]
struct Cli {
    /// Which query field to score candidates against.
    #[arg(long, value_enum, default_value = "context")]
    mode: Mode,
    #[arg(long, default_value_t = 1.2)]
    k1: f64,
    #[arg(long, default_value_t = 0.75)]
    b: f64,
    /// Serve sessions on this address, one connection at a time.
    #[arg(long)]
    listen: Option<String>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    let mode = match cli.mode {
        Mode::Title => QueryMode::Title,
        Mode::Context => QueryMode::Context,
    };
    let params = Bm25Params { k1: cli.k1, b: cli.b };
    match cli.listen {
        None => serve_bm25(io::stdin().lock(), io::stdout().lock(), mode, params)
            .context("serving on stdin/stdout"),
        Some(addr) => {
            let listener = TcpListener::bind(&addr).with_context(|| format!("binding {addr}"))?;
            eprintln!("listening on {}", listener.local_addr()?);
            for stream in listener.incoming() {
                let stream = stream?;
                let reader = BufReader::new(stream.try_clone()?);
                if let Err(e) = serve_bm25(reader, &stream, mode, params) {
                    eprintln!("session failed: {e}");
                }
            }
            Ok(())
        }
    }
}
