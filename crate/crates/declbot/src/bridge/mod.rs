//! The control bridge: one shared session, driven over WebSocket and polled
//! over HTTP.

mod protocol;
mod server;
mod session;

pub use protocol::{
    parse_client_message, AreaView, ClientMessage, DiagnosticDoc, EditOp, ServerMessage, Stage,
    StatePayload, CLIENT_TYPES,
};
pub use server::{router, serve, Hub};
pub use session::{RunMode, Session, MAX_STEP_COUNT};
