//! Steering sessions: dragged snout targets in, snake states out.

pub mod error;
pub mod protocol;
pub mod server;
pub mod session;

pub use error::{SessionError, SessionResult};
pub use protocol::{Connection, Message};
pub use session::{Export, Session, SessionOptions, State, TargetEntry};
