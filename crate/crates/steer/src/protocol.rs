//! Line-delimited JSON messages `{"type", "seq", "payload"}`.
//!
//! Requests: `init {scene}`, `target {point, timestamp}`, `reset {}`,
//! `export {}`. Replies: `state`, `export` and `error`. Reply `seq` numbers
//! count up from 1 on each connection; `payload.request` echoes the `seq` of
//! the request being answered.

use std::sync::atomic::{AtomicU64, Ordering};

use charmer_cli::scene::Scene;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{SessionError, SessionResult};
use crate::session::{Session, SessionOptions};

static NEXT_SESSION: AtomicU64 = AtomicU64::new(1);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Message {
    #[serde(rename = "type")]
    pub kind: String,
    pub seq: u64,
    #[serde(default)]
    pub payload: Value,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InitPayload {
    scene: String,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct TargetPayload {
    point: Vec<f64>,
    #[serde(default)]
    timestamp: f64,
}

/// Protocol state of one connection: at most one session, handled in
/// arrival order.
#[derive(Debug, Default)]
pub struct Connection {
    session: Option<(u64, Session)>,
    options: SessionOptions,
    seq: u64,
}

impl Connection {
    pub fn new(options: SessionOptions) -> Self {
        Self { session: None, options, seq: 0 }
    }

    pub fn session(&self) -> Option<&Session> {
        self.session.as_ref().map(|(_, s)| s)
    }

    fn reply(&mut self, kind: &str, payload: Value) -> Message {
        self.seq += 1;
        Message { kind: kind.into(), seq: self.seq, payload }
    }

    fn error(&mut self, request: Option<u64>, e: &SessionError) -> Message {
        let payload = json!({ "request": request, "kind": e.kind(), "message": e.to_string() });
        self.reply("error", payload)
    }

    /// One request line in, one reply out.
    pub fn handle_line(&mut self, line: &str) -> Message {
        match serde_json::from_str::<Message>(line) {
            Ok(m) => self.handle(m),
            Err(e) => self.error(None, &SessionError::BadMessage(e.to_string())),
        }
    }

    pub fn handle(&mut self, m: Message) -> Message {
        let request = m.seq;
        match self.dispatch(m) {
            Ok((kind, mut payload)) => {
                payload["request"] = json!(request);
                self.reply(kind, payload)
            }
            Err(e) => self.error(Some(request), &e),
        }
    }

    fn dispatch(&mut self, m: Message) -> SessionResult<(&'static str, Value)> {
        match m.kind.as_str() {
            "init" => {
                let p: InitPayload = payload(m.payload)?;
                let session = Session::new(Scene::parse(&p.scene)?, self.options.clone())?;
                let id = NEXT_SESSION.fetch_add(1, Ordering::Relaxed);
                self.session = Some((id, session));
                self.state(|s| Ok(s.state()))
            }
            "target" => {
                let p: TargetPayload = payload(m.payload)?;
                self.state(|s| s.on_target(&p.point, p.timestamp))
            }
            "reset" => self.state(|s| {
                s.reset();
                Ok(s.state())
            }),
            "export" => {
                let (id, s) = self.session.as_ref().ok_or(SessionError::NoSession)?;
                let mut v = serde_json::to_value(s.export()?).expect("export serializes");
                v["session"] = json!(id);
                Ok(("export", v))
            }
            other => Err(SessionError::BadMessage(format!("unknown message type {other:?}"))),
        }
    }

    fn state(
        &mut self,
        f: impl FnOnce(&mut Session) -> SessionResult<crate::session::State>,
    ) -> SessionResult<(&'static str, Value)> {
        let (id, s) = self.session.as_mut().ok_or(SessionError::NoSession)?;
        let state = f(s)?;
        let mut v = serde_json::to_value(state).expect("state serializes");
        v["session"] = json!(id);
        Ok(("state", v))
    }
}

fn payload<T: for<'de> Deserialize<'de>>(v: Value) -> SessionResult<T> {
    serde_json::from_value(v).map_err(|e| SessionError::BadMessage(e.to_string()))
}
