//! Live mode: a TCP server that decodes FRAME messages, runs the processing
//! chain latest-wins, and returns FEEDBACK messages on the same connection.
//!
//! Per connection: a reader (owns the inbound stream and the handoff slot),
//! a worker (owns the frame processor and scheduler state), and a writer
//! that also emits a HEARTBEAT after every second of idle outbound time.
//! Scheduler state never crosses connections.

use std::io::{self, ErrorKind};
use std::net::{SocketAddr, TcpListener, TcpStream};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, RecvTimeoutError, Sender};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};
use std::time::Duration;

use log::{info, warn};
use panoptic_core::LabelSchema;
use panoptic_transport::{
    decode_frame, feedback_message, schema_message, write_message, Frame, MessageReader,
    ReadEvent, WireMessage,
};

use crate::config::PipelineConfig;
use crate::process::FrameProcessor;
use crate::slot::Slot;
use crate::timing::TimingReport;

const POLL_INTERVAL: Duration = Duration::from_millis(50);
const READ_TIMEOUT: Duration = Duration::from_millis(200);
const HEARTBEAT_IDLE: Duration = Duration::from_secs(1);

/// Handle to a running server; dropping it does not stop the server, call
/// [`LiveServer::shutdown`].
pub struct LiveServer {
    local_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept_thread: Option<JoinHandle<()>>,
    reports: Arc<Mutex<Vec<TimingReport>>>,
}

impl LiveServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Stop accepting, drain connections, and collect per-connection timing
    /// reports.
    pub fn shutdown(mut self) -> Vec<TimingReport> {
        self.stop.store(true, Ordering::SeqCst);
        if let Some(handle) = self.accept_thread.take() {
            let _ = handle.join();
        }
        let reports = self.reports.lock().expect("report lock");
        reports.clone()
    }
}

/// Bind and start serving. `schema` is announced to every client on connect.
pub fn start_live(
    addr: &str,
    schema: LabelSchema,
    config: PipelineConfig,
) -> io::Result<LiveServer> {
    config.validate().map_err(|e| io::Error::new(ErrorKind::InvalidInput, e))?;
    let listener = TcpListener::bind(addr)?;
    listener.set_nonblocking(true)?;
    let local_addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let reports = Arc::new(Mutex::new(Vec::new()));

    let accept_stop = Arc::clone(&stop);
    let accept_reports = Arc::clone(&reports);
    let accept_thread = thread::spawn(move || {
        let mut connections: Vec<JoinHandle<()>> = Vec::new();
        info!("listening on {local_addr}");
        while !accept_stop.load(Ordering::SeqCst) {
            match listener.accept() {
                Ok((stream, peer)) => {
                    info!("connection from {peer}");
                    let stop = Arc::clone(&accept_stop);
                    let reports = Arc::clone(&accept_reports);
                    let schema = schema.clone();
                    let config = config.clone();
                    connections.push(thread::spawn(move || {
                        match serve_connection(stream, schema, config, stop) {
                            Ok(report) => {
                                info!("connection {peer} closed\n{}", report.render_text());
                                reports.lock().expect("report lock").push(report);
                            }
                            Err(e) => warn!("connection {peer} failed: {e}"),
                        }
                    }));
                }
                Err(e) if e.kind() == ErrorKind::WouldBlock => thread::sleep(POLL_INTERVAL),
                Err(e) => {
                    warn!("accept failed: {e}");
                    thread::sleep(POLL_INTERVAL);
                }
            }
        }
        for handle in connections {
            let _ = handle.join();
        }
    });

    Ok(LiveServer { local_addr, stop, accept_thread: Some(accept_thread), reports })
}

fn serve_connection(
    stream: TcpStream,
    schema: LabelSchema,
    config: PipelineConfig,
    stop: Arc<AtomicBool>,
) -> io::Result<TimingReport> {
    stream.set_read_timeout(Some(READ_TIMEOUT))?;
    let writer_stream = stream.try_clone()?;
    let (tx, rx) = mpsc::channel::<WireMessage>();

    let writer = thread::spawn(move || {
        let mut out = writer_stream;
        loop {
            match rx.recv_timeout(HEARTBEAT_IDLE) {
                Ok(msg) => {
                    if write_message(&mut out, &msg).is_err() {
                        break;
                    }
                }
                Err(RecvTimeoutError::Timeout) => {
                    if write_message(&mut out, &WireMessage::heartbeat()).is_err() {
                        break;
                    }
                }
                Err(RecvTimeoutError::Disconnected) => break,
            }
        }
    });

    tx.send(schema_message(&schema)).ok();

    let slot: Arc<Slot<Frame>> = Arc::new(Slot::new());
    let stall = Duration::from_micros(config.stage_stall_us);
    let worker = {
        let slot = Arc::clone(&slot);
        let worker_tx: Sender<WireMessage> = tx.clone();
        let mut processor = FrameProcessor::new(schema, config);
        thread::spawn(move || {
            while let Some(frame) = slot.pop() {
                if !stall.is_zero() {
                    thread::sleep(stall);
                }
                match processor.process(&frame) {
                    Ok(p) => {
                        if worker_tx.send(feedback_message(&p.events)).is_err() {
                            break;
                        }
                    }
                    Err(issue) => {
                        warn!("frame {} skipped: {}", issue.frame_id, issue.message)
                    }
                }
            }
            processor.timing
        })
    };

    let mut reader = MessageReader::new(stream);
    loop {
        if stop.load(Ordering::SeqCst) {
            break;
        }
        match reader.read_event() {
            Ok(Some(ReadEvent::Message(msg))) => match msg.msg_type {
                panoptic_transport::MsgType::Frame => match decode_frame(&msg.payload) {
                    Ok(frame) => {
                        slot.push(frame);
                    }
                    Err(e) => warn!("undecodable frame payload: {e}"),
                },
                // Clients may send heartbeats; everything else is ignored.
                _ => {}
            },
            Ok(Some(ReadEvent::Corrupt(e))) => warn!("corrupt input skipped: {e}"),
            Ok(None) => break,
            Err(e) if matches!(e.kind(), ErrorKind::WouldBlock | ErrorKind::TimedOut) => continue,
            Err(e) => {
                warn!("read failed: {e}");
                break;
            }
        }
    }

    slot.close();
    let timing = worker.join().expect("worker thread");
    let dropped = slot.replaced();
    drop(tx);
    let _ = writer.join();
    Ok(timing.report(dropped))
}
