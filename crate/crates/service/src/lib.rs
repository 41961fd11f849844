//! Socket host for a live [`Session`].
//!
//! Each client holds one TCP connection. A connection whose first bytes are
//! `GET ` is upgraded to WebSocket and exchanges text frames; any other
//! connection uses 4-byte big-endian length-prefixed UTF-8 JSON frames. Both
//! framings carry the same `fields-msg/1` messages.
//!
//! A single tick task owns the session. Client messages are queued and
//! applied in arrival order at the next tick boundary, then the tick runs
//! and its snapshot is fanned out to every client. Replies go only to the
//! client that sent the request, on the same ordered queue as snapshots, so
//! a client always sees its `ack` before any snapshot that reflects it.

use std::collections::BTreeMap;
use std::future::ready;
use std::io;
use std::net::SocketAddr;
use std::sync::Arc;
use std::time::Duration;

use fields_core::service::{ServerMessage, Session};
use futures_util::{Sink, SinkExt, Stream, StreamExt};
use tokio::net::{TcpListener, TcpStream, ToSocketAddrs};
use tokio::sync::mpsc;
use tokio::task::JoinHandle;
use tokio::time::{interval, Interval, MissedTickBehavior};
use tokio_tungstenite::tungstenite::Message as WsMessage;
use tokio_util::bytes::Bytes;
use tokio_util::codec::{FramedRead, FramedWrite, LengthDelimitedCodec};
use tokio_util::sync::CancellationToken;

#[derive(Debug, Clone)]
pub struct ServerOptions {
    /// Wall-clock time between ticks. `None` follows the scenario's tick
    /// rate; simulated time always advances by `1 / tick_rate` per tick.
    pub tick_interval: Option<Duration>,
    /// Outgoing messages buffered per client. Snapshots are skipped for a
    /// client whose queue is full; a full queue on a reply disconnects it.
    pub client_queue: usize,
    /// Largest accepted length-delimited frame, bytes.
    pub max_frame_len: usize,
    /// How long to wait for a client's first byte before assuming
    /// length-delimited framing. WebSocket clients speak first.
    pub sniff_timeout: Duration,
}

impl Default for ServerOptions {
    fn default() -> Self {
        ServerOptions {
            tick_interval: None,
            client_queue: 256,
            max_frame_len: 8 * 1024 * 1024,
            sniff_timeout: Duration::from_millis(100),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("failed to bind: {0}")]
    Bind(#[source] io::Error),
}

/// A running server. Dropping the handle stops it.
#[derive(Debug)]
pub struct ServerHandle {
    local_addr: SocketAddr,
    token: CancellationToken,
    tasks: Vec<JoinHandle<()>>,
}

impl ServerHandle {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Stops accepting, closes every connection and waits for the tick task.
    pub async fn shutdown(mut self) {
        self.token.cancel();
        for task in self.tasks.drain(..) {
            let _ = task.await;
        }
    }

    /// Resolves once the server stops for any reason.
    pub async fn stopped(&self) {
        self.token.cancelled().await;
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        self.token.cancel();
    }
}

type ClientId = u64;
type Outbox = mpsc::Sender<Arc<str>>;

enum Command {
    Connect { id: ClientId, outbox: Outbox },
    Message { id: ClientId, text: String },
    Reject { id: ClientId, reason: String },
    Disconnect { id: ClientId },
}

/// Binds `addr` (port 0 picks a free port) and starts serving `session`.
pub async fn serve(
    addr: impl ToSocketAddrs,
    session: Session,
    options: ServerOptions,
) -> Result<ServerHandle, ServiceError> {
    let listener = TcpListener::bind(addr).await.map_err(ServiceError::Bind)?;
    let local_addr = listener.local_addr().map_err(ServiceError::Bind)?;
    let token = CancellationToken::new();
    let (commands, queue) = mpsc::channel(1024);
    let tick = tokio::spawn(tick_loop(session, queue, options.clone(), token.clone()));
    let accept = tokio::spawn(accept_loop(listener, commands, options, token.clone()));
    tracing::info!(%local_addr, "serving");
    Ok(ServerHandle {
        local_addr,
        token,
        tasks: vec![accept, tick],
    })
}

fn tick_period(session: &Session, options: &ServerOptions) -> Duration {
    options
        .tick_interval
        .unwrap_or_else(|| Duration::from_secs_f64(1.0 / session.config().tick_rate))
}

fn ticker(period: Duration) -> Interval {
    let mut ticker = interval(period);
    ticker.set_missed_tick_behavior(MissedTickBehavior::Delay);
    ticker
}

async fn tick_loop(
    mut session: Session,
    mut queue: mpsc::Receiver<Command>,
    options: ServerOptions,
    token: CancellationToken,
) {
    let mut clients: BTreeMap<ClientId, Outbox> = BTreeMap::new();
    let mut latest: Option<Arc<str>> = None;
    let mut period = tick_period(&session, &options);
    let mut ticks = ticker(period);
    loop {
        tokio::select! {
            _ = token.cancelled() => break,
            _ = ticks.tick() => {}
        }
        while let Ok(command) = queue.try_recv() {
            match command {
                Command::Connect { id, outbox } => {
                    if let Some(snapshot) = &latest {
                        let _ = outbox.try_send(snapshot.clone());
                    }
                    clients.insert(id, outbox);
                }
                Command::Message { id, text } => {
                    let reply = session.apply_text(&text);
                    reply_to(&mut clients, id, &reply);
                }
                Command::Reject { id, reason } => {
                    reply_to(&mut clients, id, &ServerMessage::Error { id: None, reason });
                }
                Command::Disconnect { id } => {
                    clients.remove(&id);
                }
            }
        }
        let next = tick_period(&session, &options);
        if next != period {
            period = next;
            ticks = ticker(period);
        }
        if let Some(snapshot) = session.tick_and_snapshot() {
            let text: Arc<str> = snapshot.to_json().into();
            latest = Some(text.clone());
            clients.retain(|id, outbox| match outbox.try_send(text.clone()) {
                Ok(()) => true,
                Err(mpsc::error::TrySendError::Full(_)) => {
                    tracing::warn!(client = id, "client is behind, skipping a snapshot");
                    true
                }
                Err(mpsc::error::TrySendError::Closed(_)) => false,
            });
        }
    }
}

fn reply_to(clients: &mut BTreeMap<ClientId, Outbox>, id: ClientId, reply: &ServerMessage) {
    if let Some(outbox) = clients.get(&id) {
        if outbox.try_send(reply.to_json().into()).is_err() {
            tracing::warn!(client = id, "reply could not be queued, disconnecting");
            clients.remove(&id);
        }
    }
}

async fn accept_loop(
    listener: TcpListener,
    commands: mpsc::Sender<Command>,
    options: ServerOptions,
    token: CancellationToken,
) {
    let mut next_id: ClientId = 0;
    loop {
        let accepted = tokio::select! {
            _ = token.cancelled() => break,
            accepted = listener.accept() => accepted,
        };
        match accepted {
            Ok((stream, peer)) => {
                next_id += 1;
                let id = next_id;
                tracing::debug!(client = id, %peer, "connected");
                let commands = commands.clone();
                let options = options.clone();
                let token = token.clone();
                tokio::spawn(async move {
                    tokio::select! {
                        _ = token.cancelled() => {}
                        result = connection(stream, id, commands.clone(), options) => {
                            if let Err(e) = result {
                                tracing::debug!(client = id, error = %e, "connection ended");
                            }
                        }
                    }
                    let _ = commands.send(Command::Disconnect { id }).await;
                });
            }
            Err(e) => tracing::warn!(error = %e, "accept failed"),
        }
    }
}

/// A decoded frame from a client.
enum Inbound {
    Text(String),
    Invalid(String),
}

async fn connection(
    stream: TcpStream,
    id: ClientId,
    commands: mpsc::Sender<Command>,
    options: ServerOptions,
) -> io::Result<()> {
    stream.set_nodelay(true)?;
    let mut first = [0u8; 1];
    let sniffed = match tokio::time::timeout(options.sniff_timeout, stream.peek(&mut first)).await {
        Ok(Ok(0)) => return Ok(()),
        Ok(Ok(_)) => Some(first[0]),
        Ok(Err(e)) => return Err(e),
        Err(_) => None,
    };
    // A length prefix below the frame limit never starts with 'G' (0x47).
    if sniffed == Some(b'G') {
        let ws = tokio_tungstenite::accept_async(stream).await.map_err(io::Error::other)?;
        let (sink, source) = ws.split();
        let reader = source
            .take_while(|m| ready(matches!(m, Ok(m) if !m.is_close())))
            .filter_map(|m| {
                ready(match m {
                    Ok(WsMessage::Text(text)) => Some(Inbound::Text(text.as_str().to_owned())),
                    Ok(WsMessage::Binary(data)) => Some(decode_utf8(data.to_vec())),
                    _ => None,
                })
            });
        let writer = sink
            .sink_map_err(io::Error::other)
            .with(|text: Arc<str>| ready(Ok::<_, io::Error>(WsMessage::text(text.as_ref()))));
        run_client(id, reader, writer, commands, options.client_queue).await
    } else {
        let codec = LengthDelimitedCodec::builder()
            .max_frame_length(options.max_frame_len)
            .new_codec();
        let (read_half, write_half) = stream.into_split();
        let reader = FramedRead::new(read_half, codec.clone())
            .take_while(|frame| ready(frame.is_ok()))
            .filter_map(|frame| ready(frame.ok().map(|bytes| decode_utf8(bytes.to_vec()))));
        let writer = FramedWrite::new(write_half, codec)
            .with(|text: Arc<str>| ready(Ok::<_, io::Error>(Bytes::copy_from_slice(text.as_bytes()))));
        run_client(id, reader, writer, commands, options.client_queue).await
    }
}

fn decode_utf8(bytes: Vec<u8>) -> Inbound {
    match String::from_utf8(bytes) {
        Ok(text) => Inbound::Text(text),
        Err(e) => Inbound::Invalid(format!("frame is not valid UTF-8: {e}")),
    }
}

async fn run_client<R, W>(
    id: ClientId,
    reader: R,
    writer: W,
    commands: mpsc::Sender<Command>,
    queue_len: usize,
) -> io::Result<()>
where
    R: Stream<Item = Inbound>,
    W: Sink<Arc<str>, Error = io::Error>,
{
    let (outbox, mut outgoing) = mpsc::channel(queue_len.max(1));
    if commands.send(Command::Connect { id, outbox }).await.is_err() {
        return Ok(());
    }
    let send_all = async {
        let mut writer = std::pin::pin!(writer);
        while let Some(text) = outgoing.recv().await {
            writer.send(text).await?;
        }
        Ok::<_, io::Error>(())
    };
    let receive_all = async {
        let mut reader = std::pin::pin!(reader);
        while let Some(frame) = reader.next().await {
            let command = match frame {
                Inbound::Text(text) => Command::Message { id, text },
                Inbound::Invalid(reason) => Command::Reject { id, reason },
            };
            if commands.send(command).await.is_err() {
                break;
            }
        }
    };
    tokio::select! {
        result = send_all => result,
        _ = receive_all => Ok(()),
    }
}
