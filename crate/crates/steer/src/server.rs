//! TCP front end: one thread per connection, one line per message.

use std::io::{BufRead, BufReader, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::thread;

use crate::protocol::Connection;
use crate::session::SessionOptions;

fn serve_connection(stream: TcpStream, options: SessionOptions) -> std::io::Result<()> {
    let reader = BufReader::new(stream.try_clone()?);
    let mut writer = stream;
    let mut conn = Connection::new(options);
    for line in reader.lines() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let reply = conn.handle_line(&line);
        let mut text = serde_json::to_string(&reply).expect("message serializes");
        text.push('\n');
        writer.write_all(text.as_bytes())?;
        writer.flush()?;
    }
    Ok(())
}

/// Accepts connections forever.
pub fn serve(listener: TcpListener, options: SessionOptions) -> std::io::Result<()> {
    for stream in listener.incoming() {
        let stream = stream?;
        let options = options.clone();
        thread::spawn(move || {
            let _ = serve_connection(stream, options);
        });
    }
    Ok(())
}

/// Binds `addr` and serves on a background thread; returns the bound address.
pub fn spawn(addr: impl ToSocketAddrs, options: SessionOptions) -> std::io::Result<SocketAddr> {
    let listener = TcpListener::bind(addr)?;
    let local = listener.local_addr()?;
    thread::spawn(move || serve(listener, options));
    Ok(local)
}
