use std::net::TcpListener;

use charmer_steer::server::serve;
use charmer_steer::SessionOptions;
use clap::Parser;

#[derive(Parser)]
#[command(name = "charmer-steer", about = "Steering session server (line-delimited JSON over TCP)")]
struct Args {
    #[arg(long, default_value = "127.0.0.1:7878")]
    addr: String,
    /// Largest segment end speed, as a fraction of the snake length.
    #[arg(long, default_value_t = 0.25)]
    max_speed: f64,
}

fn main() -> std::io::Result<()> {
    let args = Args::parse();
    let listener = TcpListener::bind(&args.addr)?;
    eprintln!("listening on {}", listener.local_addr()?);
    let options = SessionOptions { max_speed: args.max_speed, ..SessionOptions::default() };
    serve(listener, options)
}
