use std::path::PathBuf;
use std::sync::Arc;

use axum::extract::ws::{Message, WebSocket, WebSocketUpgrade};
use axum::extract::{Path, State};
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::get;
use axum::Router;
use futures::{SinkExt, StreamExt};
use serde_json::json;
use tokio::net::TcpListener;
use tokio::sync::{broadcast, mpsc, oneshot};
use tokio::time::{sleep_until, Duration, Instant};
use tower_http::services::ServeDir;

use super::protocol::{parse_client_message, ServerMessage, Stage};
use super::session::{RunMode, Session};
use crate::level::LevelDocument;
use crate::scenarios::{available_names, find_scenario};

enum Command {
    Message {
        text: String,
        reply: oneshot::Sender<Vec<String>>,
    },
    Snapshot(oneshot::Sender<String>),
}

/// Handle to the task that owns the session. Commands are applied one at a
/// time in arrival order; state and win messages fan out to every subscriber.
#[derive(Clone)]
pub struct Hub {
    commands: mpsc::Sender<Command>,
    events: broadcast::Sender<Arc<str>>,
}

impl Hub {
    /// Spawns the session task on the current runtime.
    pub fn start(session: Session) -> Hub {
        let (commands, rx) = mpsc::channel(256);
        let (events, _) = broadcast::channel(4096);
        tokio::spawn(run_session(session, rx, events.clone()));
        Hub { commands, events }
    }

    pub fn subscribe(&self) -> broadcast::Receiver<Arc<str>> {
        self.events.subscribe()
    }

    /// Handles one client frame; returns the replies meant only for the sender.
    pub async fn request(&self, text: String) -> Vec<String> {
        let (reply, rx) = oneshot::channel();
        if self
            .commands
            .send(Command::Message { text, reply })
            .await
            .is_err()
        {
            return Vec::new();
        }
        rx.await.unwrap_or_default()
    }

    pub async fn snapshot(&self) -> Option<String> {
        let (tx, rx) = oneshot::channel();
        self.commands.send(Command::Snapshot(tx)).await.ok()?;
        rx.await.ok()
    }
}

async fn run_session(
    mut session: Session,
    mut commands: mpsc::Receiver<Command>,
    events: broadcast::Sender<Arc<str>>,
) {
    let mut deadline: Option<Instant> = None;
    let publish = |msgs: Vec<ServerMessage>| -> Vec<String> {
        let mut direct = Vec::new();
        for m in msgs {
            if m.is_broadcast() {
                let _ = events.send(m.to_json().into());
            } else {
                direct.push(m.to_json());
            }
        }
        direct
    };
    loop {
        let tick = async {
            match deadline {
                Some(t) => sleep_until(t).await,
                None => std::future::pending().await,
            }
        };
        tokio::select! {
            cmd = commands.recv() => match cmd {
                None => break,
                Some(Command::Message { text, reply }) => {
                    let msgs = match parse_client_message(&text) {
                        Ok(m) => session.handle(m),
                        Err(e) => vec![e],
                    };
                    let _ = reply.send(publish(msgs));
                }
                Some(Command::Snapshot(tx)) => {
                    let _ = tx.send(session.state().to_json());
                }
            },
            _ = tick => {
                deadline = None;
                publish(session.tick());
            }
        }
        deadline = match session.mode() {
            RunMode::Paused => None,
            RunMode::Auto { interval_ms } => {
                deadline.or_else(|| Some(Instant::now() + Duration::from_millis(interval_ms)))
            }
        };
    }
}

/// The bridge's routes: `/ws`, `/state`, `/levels`, `/levels/{name}`, and the
/// cockpit bundle under `/` when `static_dir` is given.
pub fn router(hub: Hub, static_dir: Option<PathBuf>) -> Router {
    let app = Router::new()
        .route("/ws", get(ws_upgrade))
        .route("/state", get(get_state))
        .route("/levels", get(get_levels))
        .route("/levels/{name}", get(get_level))
        .with_state(hub);
    match static_dir {
        Some(dir) => app.fallback_service(ServeDir::new(dir)),
        None => app,
    }
}

/// Serves the bridge on `listener` until the process ends.
pub async fn serve(
    listener: TcpListener,
    session: Session,
    static_dir: Option<PathBuf>,
) -> std::io::Result<()> {
    let hub = Hub::start(session);
    axum::serve(listener, router(hub, static_dir)).await
}

fn json_response(status: StatusCode, body: String) -> Response {
    (status, [(header::CONTENT_TYPE, "application/json")], body).into_response()
}

async fn get_state(State(hub): State<Hub>) -> Response {
    match hub.snapshot().await {
        Some(body) => json_response(StatusCode::OK, body),
        None => json_response(
            StatusCode::SERVICE_UNAVAILABLE,
            json!({"error": "session is not running"}).to_string(),
        ),
    }
}

async fn get_levels() -> Response {
    match available_names() {
        Ok(names) => {
            let list: Vec<_> = names
                .iter()
                .map(|n| {
                    let description = find_scenario(n)
                        .map(|b| b.level.description)
                        .unwrap_or_default();
                    json!({"name": n, "description": description})
                })
                .collect();
            json_response(StatusCode::OK, serde_json::Value::from(list).to_string())
        }
        Err(e) => json_response(
            StatusCode::INTERNAL_SERVER_ERROR,
            json!({"error": e.to_string()}).to_string(),
        ),
    }
}

async fn get_level(Path(name): Path<String>) -> Response {
    match find_scenario(&name) {
        Ok(b) => {
            let body = json!({
                "name": b.level.name,
                "level": level_json(&b.level),
                "program": b.program_source,
                "expected": b.expected.map(|e| e.win_by_step),
            });
            json_response(StatusCode::OK, body.to_string())
        }
        Err(e) => json_response(
            StatusCode::NOT_FOUND,
            json!({"error": e.to_string()}).to_string(),
        ),
    }
}

fn level_json(doc: &LevelDocument) -> serde_json::Value {
    serde_json::to_value(doc).expect("level documents always serialize")
}

async fn ws_upgrade(ws: WebSocketUpgrade, State(hub): State<Hub>) -> Response {
    ws.on_upgrade(move |socket| client(socket, hub))
}

async fn client(socket: WebSocket, hub: Hub) {
    let (mut sink, mut stream) = socket.split();
    let mut events = hub.subscribe();
    let (out, mut outgoing) = mpsc::channel::<String>(1024);

    let writer = tokio::spawn(async move {
        while let Some(text) = outgoing.recv().await {
            if sink.send(Message::Text(text.into())).await.is_err() {
                break;
            }
        }
        let _ = sink.close().await;
    });
    let forward = out.clone();
    let forwarder = tokio::spawn(async move {
        loop {
            match events.recv().await {
                Ok(text) => {
                    if forward.send(text.to_string()).await.is_err() {
                        break;
                    }
                }
                Err(broadcast::error::RecvError::Lagged(_)) => continue,
                Err(broadcast::error::RecvError::Closed) => break,
            }
        }
    });

    while let Some(Ok(frame)) = stream.next().await {
        let replies = match frame {
            Message::Text(text) => hub.request(text.to_string()).await,
            Message::Binary(_) => vec![ServerMessage::error(
                Stage::Protocol,
                "binary frames are not supported; send JSON text",
            )
            .to_json()],
            Message::Close(_) => break,
            _ => continue,
        };
        for r in replies {
            if out.send(r).await.is_err() {
                break;
            }
        }
    }
    forwarder.abort();
    drop(out);
    let _ = writer.await;
}
