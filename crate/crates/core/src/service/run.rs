use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, Sender};
use std::sync::Arc;
use std::thread::{self, JoinHandle};
use std::time::{Duration, Instant};

use super::config::{ServiceConfig, SourceSpec};
use super::control::{parse_control, ControlMessage, ErrorCode, Reply};
use super::hub::Hub;
use super::pipeline::Pipeline;
use super::telemetry::{encode_telemetry, TelemetryFrame, Transport};
use super::{RunSummary, ServiceError};
use crate::audio::{AudioSink, WavSink};
use crate::capture::{
    generate_scenario, open_adapter, CaptureError, Pacer, PacketRecord, PcapReader, RecordEvent, ScenarioStream,
    Speed,
};
use crate::soundscape::resolve_theme;

const POLL: Duration = Duration::from_millis(20);
const REPLY_TIMEOUT: Duration = Duration::from_secs(5);

struct ControlRequest {
    msg: ControlMessage,
    reply: Sender<Reply>,
}

/// Sends control messages to a running service and waits for the reply.
#[derive(Clone)]
pub struct ControlClient {
    tx: Sender<ControlRequest>,
}

impl ControlClient {
    pub fn send(&self, msg: ControlMessage) -> Reply {
        let (reply_tx, reply_rx) = mpsc::channel();
        if self.tx.send(ControlRequest { msg, reply: reply_tx }).is_err() {
            return Reply::error(ErrorCode::Unavailable, "service has stopped");
        }
        reply_rx
            .recv_timeout(REPLY_TIMEOUT)
            .unwrap_or_else(|_| Reply::error(ErrorCode::Unavailable, "service did not reply"))
    }

    /// Parse and send a raw JSON text message, as a console would.
    pub fn send_text(&self, text: &str) -> Reply {
        match parse_control(text) {
            Ok(msg) => self.send(msg),
            Err(reply) => reply,
        }
    }
}

/// A running service.
pub struct ServiceHandle {
    thread: JoinHandle<Result<RunSummary, ServiceError>>,
    control: ControlClient,
    stop: Arc<AtomicBool>,
    local_addr: Option<SocketAddr>,
}

impl ServiceHandle {
    pub fn control(&self) -> ControlClient {
        self.control.clone()
    }

    /// Address of the console endpoint, when listening.
    pub fn local_addr(&self) -> Option<SocketAddr> {
        self.local_addr
    }

    /// Flag that ends the run at the next packet boundary when set.
    pub fn stop_flag(&self) -> Arc<AtomicBool> {
        Arc::clone(&self.stop)
    }

    pub fn shutdown(&self) {
        self.stop.store(true, Ordering::SeqCst);
    }

    /// Wait for the run to end.
    pub fn wait(self) -> Result<RunSummary, ServiceError> {
        self.thread.join().unwrap_or_else(|_| Err(ServiceError::Protocol("pipeline thread panicked".into())))
    }
}

enum Poll {
    Event(RecordEvent),
    Pending,
    End,
}

enum Source {
    Pcap(PcapReader<BufReader<File>>),
    Scenario(ScenarioStream),
    Live(Receiver<Result<RecordEvent, CaptureError>>),
}

impl Source {
    fn open(spec: &SourceSpec) -> Result<Source, ServiceError> {
        Ok(match spec {
            SourceSpec::Pcap { path, .. } => {
                let file = File::open(path).map_err(|e| {
                    ServiceError::Source(CaptureError::Io(std::io::Error::new(
                        e.kind(),
                        format!("{}: {e}", path.display()),
                    )))
                })?;
                Source::Pcap(PcapReader::new(BufReader::new(file))?)
            }
            SourceSpec::Scenario { spec, .. } => Source::Scenario(generate_scenario(spec)?),
            SourceSpec::Live { adapter } => {
                let mut adapter = open_adapter(adapter)?;
                let (tx, rx) = mpsc::sync_channel(4096);
                thread::Builder::new().name("netsound-live".into()).spawn(move || {
                    while let Some(ev) = adapter.next_event() {
                        if tx.send(ev).is_err() {
                            break;
                        }
                    }
                })?;
                Source::Live(rx)
            }
        })
    }

    fn poll(&mut self) -> Result<Poll, CaptureError> {
        match self {
            Source::Pcap(r) => match r.next_event() {
                Some(Ok(ev)) => Ok(Poll::Event(ev)),
                Some(Err(e)) => Err(e),
                None => Ok(Poll::End),
            },
            Source::Scenario(s) => Ok(s.next().map_or(Poll::End, |p| Poll::Event(RecordEvent::Packet(p)))),
            Source::Live(rx) => match rx.recv_timeout(POLL) {
                Ok(Ok(ev)) => Ok(Poll::Event(ev)),
                Ok(Err(e)) => Err(e),
                Err(RecvTimeoutError::Timeout) => Ok(Poll::Pending),
                Err(RecvTimeoutError::Disconnected) => Ok(Poll::End),
            },
        }
    }
}

struct Outputs {
    hub: Option<Hub>,
    log: Option<BufWriter<File>>,
}

impl Outputs {
    fn publish(&mut self, frames: &[TelemetryFrame]) -> Result<(), ServiceError> {
        for f in frames {
            let text = encode_telemetry(f);
            if let Some(hub) = &self.hub {
                hub.publish(&text);
            }
            if let Some(log) = &mut self.log {
                writeln!(log, "{text}")?;
                log.flush()?;
            }
        }
        Ok(())
    }
}

/// Validate the configuration, open the source and outputs, and start the
/// pipeline on its own thread.
///
/// `extra_sinks` receive the rendered audio alongside any WAV output; a
/// configured `device` requires at least one of them.
pub fn start(config: ServiceConfig, extra_sinks: Vec<Box<dyn AudioSink>>) -> Result<ServiceHandle, ServiceError> {
    config.validate()?;
    if let Some(dev) = &config.outputs.device {
        if extra_sinks.is_empty() {
            return Err(ServiceError::Config(format!(
                "audio device {dev:?} requested but no device backend is available in this build"
            )));
        }
    }
    let source_spec = config.source()?;
    let loaded = resolve_theme(&config.theme)?;
    for w in &loaded.warnings {
        log::warn!("{w}");
    }
    let mut sinks = extra_sinks;
    if let Some(path) = &config.outputs.wav {
        sinks.push(Box::new(WavSink::create(path, &config.render).map_err(|e| {
            ServiceError::Config(format!("cannot create {}: {e}", path.display()))
        })?));
    }
    let pipeline = Pipeline::new(config.home()?, config.analysis.clone(), loaded.theme, config.render, sinks)?;
    let log = match &config.outputs.telemetry_log {
        Some(path) => Some(BufWriter::new(File::create(path).map_err(|e| {
            ServiceError::Config(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => None,
    };

    let (tx, rx) = mpsc::channel();
    let control = ControlClient { tx };
    let hub = match &config.outputs.listen {
        Some(addr) => Some(Hub::bind(addr, config.history_len, control.clone()).map_err(|source| {
            ServiceError::Bind {
                addr: addr.clone(),
                source,
            }
        })?),
        None => None,
    };
    let local_addr = hub.as_ref().map(Hub::local_addr);
    let source = Source::open(&source_spec)?;
    let speed = match source_spec {
        SourceSpec::Pcap { speed, .. } | SourceSpec::Scenario { speed, .. } => speed,
        SourceSpec::Live { .. } => Speed::Offline,
    };
    let realtime = !matches!(speed, Speed::Offline) || matches!(source_spec, SourceSpec::Live { .. });
    let stop = Arc::new(AtomicBool::new(false));
    let runner = Runner {
        pipeline,
        source,
        pacer: Pacer::new(speed),
        realtime,
        outputs: Outputs { hub, log },
        control: rx,
        stop: Arc::clone(&stop),
    };
    let thread = thread::Builder::new().name("netsound-pipeline".into()).spawn(move || runner.run())?;
    Ok(ServiceHandle {
        thread,
        control,
        stop,
        local_addr,
    })
}

struct Runner {
    pipeline: Pipeline,
    source: Source,
    pacer: Pacer,
    /// Wall-clock paced; held audio keeps flowing while paused.
    realtime: bool,
    outputs: Outputs,
    control: Receiver<ControlRequest>,
    stop: Arc<AtomicBool>,
}

impl Runner {
    fn handle(&mut self, req: ControlRequest) {
        let was = self.pipeline.transport();
        let reply = self.pipeline.control(&req.msg);
        match (was, self.pipeline.transport()) {
            (Transport::Running, Transport::Paused) => {
                log::info!("paused");
                self.pacer.pause();
            }
            (Transport::Paused, Transport::Running) => {
                log::info!("resumed");
                self.pacer.resume();
            }
            _ => {}
        }
        let _ = req.reply.send(reply);
    }

    fn drain_control(&mut self) {
        while let Ok(req) = self.control.try_recv() {
            self.handle(req);
        }
    }

    /// Block while paused, rendering the held soundscape in real time.
    fn wait_paused(&mut self) -> Result<(), ServiceError> {
        let block = self.pipeline.render_config().block_secs();
        let mut clock = Instant::now();
        while self.pipeline.transport() == Transport::Paused && !self.stop.load(Ordering::SeqCst) {
            match self.control.recv_timeout(POLL) {
                Ok(req) => self.handle(req),
                Err(RecvTimeoutError::Timeout) => {}
                Err(RecvTimeoutError::Disconnected) => thread::sleep(POLL),
            }
            if self.realtime {
                let due = (clock.elapsed().as_secs_f64() / block) as usize;
                if due > 0 {
                    self.pipeline.hold(due)?;
                    clock += Duration::from_secs_f64(due as f64 * block);
                }
            }
        }
        Ok(())
    }

    fn run(mut self) -> Result<RunSummary, ServiceError> {
        let result = self.run_source();
        let Runner {
            pipeline,
            mut outputs,
            ..
        } = self;
        let finished = pipeline.finish().and_then(|(frames, summary)| {
            outputs.publish(&frames)?;
            Ok(summary)
        });
        if let Some(hub) = outputs.hub.take() {
            hub.shutdown();
        }
        result.and(finished)
    }

    fn run_source(&mut self) -> Result<(), ServiceError> {
        let mut pending: Option<PacketRecord> = None;
        loop {
            if self.stop.load(Ordering::SeqCst) {
                log::info!("shutdown requested");
                return Ok(());
            }
            self.drain_control();
            if self.pipeline.transport() == Transport::Paused {
                self.wait_paused()?;
                continue;
            }
            let rec = match pending.take() {
                Some(r) => r,
                None => match self.source.poll() {
                    Ok(Poll::Event(RecordEvent::Packet(p))) => p,
                    Ok(Poll::Event(RecordEvent::Malformed { ts, error })) => {
                        log::debug!("skipping malformed record at {ts}: {error}");
                        self.pipeline.note_malformed();
                        continue;
                    }
                    Ok(Poll::Pending) => continue,
                    Ok(Poll::End) => return Ok(()),
                    Err(CaptureError::TruncatedRecord { needed, available }) => {
                        log::warn!("capture ends mid-record ({available} of {needed} bytes)");
                        self.pipeline.note_malformed();
                        return Ok(());
                    }
                    Err(e) => return Err(e.into()),
                },
            };
            let delay = self.pacer.delay_for(rec.ts);
            if !delay.is_zero() {
                thread::sleep(delay.min(POLL));
                pending = Some(rec);
                continue;
            }
            let frames = self.pipeline.push(rec)?;
            self.outputs.publish(&frames)?;
        }
    }
}
