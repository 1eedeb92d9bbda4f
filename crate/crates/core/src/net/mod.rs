//! Center server and worker clients speaking a framed binary protocol over TCP.

mod server;
mod wire;
mod worker;

pub use server::{serve_center, CenterConfig, CenterReport, CenterServer, DEFAULT_POLL_INTERVAL};
pub use wire::{
    read_message, write_message, WireMessage, HEADER_LEN, MAGIC, MAX_PAYLOAD, PROTOCOL_VERSION, TYPE_ACK, TYPE_ERROR,
    TYPE_FETCH, TYPE_FETCH_REPLY, TYPE_PUSH_ELASTIC, TYPE_PUSH_GRAD, TYPE_SHUTDOWN,
};
pub use worker::{run_worker, RetryPolicy, WorkerConfig, WorkerReport};
