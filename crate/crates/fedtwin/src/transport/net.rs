//! Synchronous TCP round protocol.
//!
//! The server accepts a fixed roster of clients, then repeats: broadcast
//! the global parameters, await one `LocalUpdate` or `Skip` per live
//! client, aggregate, install. A dropped connection marks that client
//! skipped for the rest of the run; the round proceeds while at least one
//! update arrives. The in-process simulator shares the exact message
//! semantics, so both paths produce bit-identical parameter trajectories
//! for the same seed.

use std::collections::HashSet;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::time::Duration;

use crate::error::{Error, Result};
use crate::federation::{ClientUpdate, LocalOutcome};
use crate::numerics::ParamValues;
use crate::transport::frame::{deframe, frame, Message, DEFAULT_MAX_PAYLOAD};

/// Server-side knobs.
#[derive(Debug, Clone)]
pub struct ServeOptions {
    /// Connections to accept before the first round.
    pub expected_clients: usize,
    pub rounds: u32,
    pub max_payload: u64,
    /// Per-operation socket timeout.
    pub io_timeout: Option<Duration>,
}

impl Default for ServeOptions {
    fn default() -> Self {
        ServeOptions {
            expected_clients: 1,
            rounds: 1,
            max_payload: DEFAULT_MAX_PAYLOAD,
            io_timeout: Some(Duration::from_secs(30)),
        }
    }
}

/// Participation summary of one distributed round. The wire protocol
/// deliberately carries parameters and sample counts only, so unlike the
/// in-process round report there are no loss metrics here.
#[derive(Debug, Clone, serde::Serialize)]
pub struct WireRound {
    pub round: u32,
    /// `(client_id, m)` per update that arrived, ascending client id.
    pub participants: Vec<(u32, u64)>,
    pub skipped: Vec<(u32, String)>,
}

struct Connection {
    client_id: u32,
    stream: Option<TcpStream>,
}

/// Binds `addr` and runs the round protocol. `server_logic` is the
/// aggregation step (sample-count-weighted averaging in this artifact).
/// Returns the final global parameters and one summary per completed
/// round.
pub fn serve<F>(
    addr: &str,
    opts: &ServeOptions,
    init: ParamValues,
    server_logic: F,
) -> Result<(ParamValues, Vec<WireRound>)>
where
    F: FnMut(&[ClientUpdate]) -> Result<ParamValues>,
{
    let listener = TcpListener::bind(addr)
        .map_err(|e| Error::protocol(format!("cannot bind {addr}: {e}")))?;
    serve_on(listener, opts, init, server_logic)
}

/// [`serve`] on an already-bound listener (lets tests use an ephemeral
/// port).
pub fn serve_on<F>(
    listener: TcpListener,
    opts: &ServeOptions,
    init: ParamValues,
    mut server_logic: F,
) -> Result<(ParamValues, Vec<WireRound>)>
where
    F: FnMut(&[ClientUpdate]) -> Result<ParamValues>,
{
    if opts.expected_clients == 0 {
        return Err(Error::config("expected_clients: must be >= 1".to_string()));
    }

    let mut connections = Vec::with_capacity(opts.expected_clients);
    let mut seen = HashSet::new();
    for _ in 0..opts.expected_clients {
        let (mut stream, peer) = listener
            .accept()
            .map_err(|e| Error::protocol(format!("accept failed: {e}")))?;
        stream.set_nodelay(true).ok();
        stream.set_read_timeout(opts.io_timeout).ok();
        stream.set_write_timeout(opts.io_timeout).ok();
        match deframe(&mut stream, opts.max_payload)? {
            Message::Join { client_id } => {
                if !seen.insert(client_id) {
                    return Err(Error::protocol(format!(
                        "client {client_id} joined twice (second join from {peer})"
                    )));
                }
                connections.push(Connection {
                    client_id,
                    stream: Some(stream),
                });
            }
            other => {
                return Err(Error::protocol(format!(
                    "expected a join from {peer}, got {other:?}"
                )))
            }
        }
    }
    connections.sort_by_key(|c| c.client_id);

    let mut global = init;
    let mut reports = Vec::with_capacity(opts.rounds as usize);

    for round in 1..=opts.rounds {
        let mut skipped: Vec<(u32, String)> = Vec::new();

        for conn in connections.iter_mut() {
            let Some(stream) = conn.stream.as_mut() else {
                skipped.push((conn.client_id, "connection lost".to_string()));
                continue;
            };
            let bytes = frame(&Message::GlobalModel {
                round,
                params: global.clone(),
            })?;
            if let Err(e) = std::io::Write::write_all(stream, &bytes) {
                log::warn!("client {}: send failed ({e}), skipping", conn.client_id);
                conn.stream = None;
                skipped.push((conn.client_id, format!("connection lost: {e}")));
            }
        }

        let mut updates: Vec<ClientUpdate> = Vec::new();
        for conn in connections.iter_mut() {
            let Some(stream) = conn.stream.as_mut() else {
                continue; // already marked skipped above
            };
            match deframe(stream, opts.max_payload) {
                Ok(Message::LocalUpdate {
                    round: r,
                    client_id,
                    m,
                    params,
                }) => {
                    if r != round || client_id != conn.client_id {
                        return Err(Error::protocol(format!(
                            "client {} answered round {round} with an update tagged (round {r}, client {client_id})",
                            conn.client_id
                        )));
                    }
                    updates.push(ClientUpdate {
                        client_id,
                        round,
                        params,
                        m: m.try_into().map_err(|_| {
                            Error::protocol(format!("client {client_id}: sample count {m} overflows"))
                        })?,
                    });
                }
                Ok(Message::Skip {
                    client_id, reason, ..
                }) => {
                    skipped.push((client_id, reason));
                }
                Ok(other) => {
                    return Err(Error::protocol(format!(
                        "client {}: expected an update or skip, got {other:?}",
                        conn.client_id
                    )))
                }
                Err(e) => {
                    log::warn!("client {}: receive failed ({e}), skipping", conn.client_id);
                    conn.stream = None;
                    skipped.push((conn.client_id, format!("connection lost: {e}")));
                }
            }
        }

        if updates.is_empty() {
            shutdown_all(&mut connections);
            return Err(Error::protocol(format!(
                "round {round} aborted: no client returned an update"
            )));
        }

        global = server_logic(&updates)?;
        reports.push(WireRound {
            round,
            participants: updates.iter().map(|u| (u.client_id, u.m as u64)).collect(),
            skipped,
        });
    }

    shutdown_all(&mut connections);
    Ok((global, reports))
}

fn shutdown_all(connections: &mut [Connection]) {
    let bytes = frame(&Message::Shutdown).expect("shutdown frame is infallible");
    for conn in connections.iter_mut() {
        if let Some(stream) = conn.stream.as_mut() {
            std::io::Write::write_all(stream, &bytes).ok();
        }
        conn.stream = None;
    }
}

/// Client loop: join, then answer every broadcast with the driver's
/// outcome until the server says shutdown. The driver receives the round
/// number and the fresh global parameters.
pub fn connect<F>(
    addr: &str,
    client_id: u32,
    connect_timeout: Duration,
    max_payload: u64,
    mut driver: F,
) -> Result<()>
where
    F: FnMut(u32, &ParamValues) -> Result<LocalOutcome>,
{
    let sockets: Vec<SocketAddr> = addr
        .to_socket_addrs()
        .map_err(|e| Error::protocol(format!("cannot resolve {addr}: {e}")))?
        .collect();
    let socket = sockets
        .first()
        .ok_or_else(|| Error::protocol(format!("{addr} resolves to no addresses")))?;
    let mut stream = TcpStream::connect_timeout(socket, connect_timeout)
        .map_err(|e| Error::protocol(format!("cannot connect to {addr}: {e}")))?;
    stream.set_nodelay(true).ok();

    let join = frame(&Message::Join { client_id })?;
    std::io::Write::write_all(&mut stream, &join)
        .map_err(|e| Error::protocol(format!("sending join: {e}")))?;

    loop {
        match deframe(&mut stream, max_payload)? {
            Message::GlobalModel { round, params } => {
                let reply = match driver(round, &params)? {
                    LocalOutcome::Update { update, .. } => Message::LocalUpdate {
                        round,
                        client_id,
                        m: update.m as u64,
                        params: update.params,
                    },
                    LocalOutcome::Skipped { reason, .. } => Message::Skip {
                        round,
                        client_id,
                        reason,
                    },
                };
                let bytes = frame(&reply)?;
                std::io::Write::write_all(&mut stream, &bytes)
                    .map_err(|e| Error::protocol(format!("sending round {round} reply: {e}")))?;
            }
            Message::Shutdown => return Ok(()),
            other => {
                return Err(Error::protocol(format!(
                    "expected a global model or shutdown, got {other:?}"
                )))
            }
        }
    }
}
