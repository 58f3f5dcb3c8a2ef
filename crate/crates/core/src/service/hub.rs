//! WebSocket fan-out of telemetry and fan-in of control messages.
//!
//! One thread accepts connections; each client gets its own thread. The
//! pipeline only ever pushes encoded frames into per-client queues, so a
//! slow or vanished console cannot stall it.

use std::collections::VecDeque;
use std::io::{self, ErrorKind};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, SyncSender, TrySendError};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use tungstenite::{Error as WsError, Message, WebSocket};

use super::control::parse_control;
use super::run::ControlClient;

const POLL: Duration = Duration::from_millis(20);
/// Frames a client may fall behind before it is dropped.
const CLIENT_BACKLOG: usize = 1024;

struct Shared {
    history: VecDeque<Arc<str>>,
    history_len: usize,
    clients: Vec<SyncSender<Arc<str>>>,
}

pub struct Hub {
    addr: SocketAddr,
    shared: Arc<Mutex<Shared>>,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl Hub {
    pub fn bind(addr: &str, history_len: usize, control: ControlClient) -> io::Result<Hub> {
        let listener = TcpListener::bind(addr)?;
        listener.set_nonblocking(true)?;
        let local = listener.local_addr()?;
        let shared = Arc::new(Mutex::new(Shared {
            history: VecDeque::with_capacity(history_len),
            history_len,
            clients: Vec::new(),
        }));
        let stop = Arc::new(AtomicBool::new(false));
        let accept = {
            let shared = Arc::clone(&shared);
            let stop = Arc::clone(&stop);
            thread::Builder::new()
                .name("netsound-accept".into())
                .spawn(move || accept_loop(listener, shared, stop, control))?
        };
        log::info!("console endpoint listening on ws://{local}");
        Ok(Hub {
            addr: local,
            shared,
            stop,
            accept: Some(accept),
        })
    }

    pub fn local_addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn client_count(&self) -> usize {
        self.shared.lock().expect("hub lock").clients.len()
    }

    /// Record a telemetry message and queue it for every client.
    pub fn publish(&self, text: &str) {
        let msg: Arc<str> = Arc::from(text);
        let mut s = self.shared.lock().expect("hub lock");
        if s.history.len() == s.history_len {
            s.history.pop_front();
        }
        s.history.push_back(Arc::clone(&msg));
        s.clients.retain(|tx| match tx.try_send(Arc::clone(&msg)) {
            Ok(()) => true,
            Err(TrySendError::Full(_)) => {
                log::warn!("dropping console client that fell {CLIENT_BACKLOG} frames behind");
                false
            }
            Err(TrySendError::Disconnected(_)) => false,
        });
    }

    /// Flush queued frames to clients, close them and stop accepting.
    pub fn shutdown(mut self) {
        self.stop_and_join();
    }

    fn stop_and_join(&mut self) {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

impl Drop for Hub {
    fn drop(&mut self) {
        self.stop_and_join();
    }
}

fn accept_loop(listener: TcpListener, shared: Arc<Mutex<Shared>>, stop: Arc<AtomicBool>, control: ControlClient) {
    let mut workers: Vec<JoinHandle<()>> = Vec::new();
    while !stop.load(Ordering::SeqCst) {
        match listener.accept() {
            Ok((stream, peer)) => {
                let rx = register(&shared);
                let stop = Arc::clone(&stop);
                let control = control.clone();
                let spawned = thread::Builder::new()
                    .name(format!("netsound-client-{peer}"))
                    .spawn(move || {
                        if let Err(e) = serve_client(stream, rx, &stop, &control) {
                            log::debug!("console {peer}: {e}");
                        }
                        log::info!("console {peer} disconnected");
                    });
                match spawned {
                    Ok(h) => workers.push(h),
                    Err(e) => log::warn!("cannot spawn client thread: {e}"),
                }
                workers.retain(|h| !h.is_finished());
            }
            Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(POLL),
            Err(e) => {
                log::warn!("accept failed: {e}");
                thread::sleep(POLL);
            }
        }
    }
    for h in workers {
        let _ = h.join();
    }
}

/// New client queue, pre-filled with the history so plots start populated.
fn register(shared: &Mutex<Shared>) -> Receiver<Arc<str>> {
    let mut s = shared.lock().expect("hub lock");
    let (tx, rx) = mpsc::sync_channel(s.history_len + CLIENT_BACKLOG);
    for m in &s.history {
        let _ = tx.try_send(Arc::clone(m));
    }
    s.clients.push(tx);
    rx
}

fn is_timeout(e: &WsError) -> bool {
    matches!(e, WsError::Io(io) if matches!(io.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut))
}

fn serve_client(
    stream: TcpStream,
    rx: Receiver<Arc<str>>,
    stop: &AtomicBool,
    control: &ControlClient,
) -> Result<(), WsError> {
    stream.set_nonblocking(false)?;
    let mut ws: WebSocket<TcpStream> = tungstenite::accept(stream).map_err(|e| match e {
        tungstenite::HandshakeError::Failure(e) => e,
        tungstenite::HandshakeError::Interrupted(_) => WsError::Io(ErrorKind::WouldBlock.into()),
    })?;
    ws.get_mut().set_read_timeout(Some(POLL))?;
    loop {
        let stopping = stop.load(Ordering::SeqCst);
        let mut wrote = false;
        while let Ok(frame) = rx.try_recv() {
            ws.write(Message::text(frame.as_ref()))?;
            wrote = true;
        }
        if wrote {
            ws.flush()?;
        }
        if stopping {
            let _ = ws.close(None);
            let _ = ws.flush();
            return Ok(());
        }
        match ws.read() {
            Ok(Message::Text(text)) => {
                let reply = match parse_control(&text) {
                    Ok(msg) => control.send(msg),
                    Err(reply) => reply,
                };
                ws.send(Message::text(reply.to_json()))?;
            }
            Ok(Message::Binary(_)) => {
                let reply = super::Reply::error(super::ErrorCode::BadMessage, "control messages are JSON text");
                ws.send(Message::text(reply.to_json()))?;
            }
            Ok(Message::Close(_)) => return Ok(()),
            Ok(_) => {}
            Err(e) if is_timeout(&e) => {}
            Err(WsError::ConnectionClosed | WsError::AlreadyClosed) => return Ok(()),
            Err(e) => return Err(e),
        }
    }
}
