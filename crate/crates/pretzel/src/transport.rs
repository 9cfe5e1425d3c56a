//! Framed channels: an in-memory duplex pair for tests and loopback runs,
//! TCP for two-process runs, plus recording and fault-injecting wrappers.

use std::io::{BufReader, BufWriter, ErrorKind, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::mpsc::{channel, Receiver, Sender};
use std::sync::{Arc, Mutex};

use pretzel_core::channel::{Channel, Frame, Tag, TransportError, FRAME_OVERHEAD, MAX_FRAME_LEN};

/// Per-direction byte and frame counts, framing included.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ChannelStats {
    pub bytes_sent: u64,
    pub bytes_received: u64,
    pub frames_sent: u64,
    pub frames_received: u64,
}

#[derive(Debug, Default)]
struct Counters {
    bytes_sent: AtomicU64,
    bytes_received: AtomicU64,
    frames_sent: AtomicU64,
    frames_received: AtomicU64,
}

impl Counters {
    fn sent(&self, f: &Frame) {
        self.bytes_sent
            .fetch_add(f.wire_len() as u64, Ordering::Relaxed);
        self.frames_sent.fetch_add(1, Ordering::Relaxed);
    }

    fn received(&self, f: &Frame) {
        self.bytes_received
            .fetch_add(f.wire_len() as u64, Ordering::Relaxed);
        self.frames_received.fetch_add(1, Ordering::Relaxed);
    }

    fn snapshot(&self) -> ChannelStats {
        ChannelStats {
            bytes_sent: self.bytes_sent.load(Ordering::Relaxed),
            bytes_received: self.bytes_received.load(Ordering::Relaxed),
            frames_sent: self.frames_sent.load(Ordering::Relaxed),
            frames_received: self.frames_received.load(Ordering::Relaxed),
        }
    }
}

/// Cloneable read-only view of a channel's counters, usable after the
/// channel moved to another thread.
#[derive(Debug, Clone)]
pub struct StatsHandle(Arc<Counters>);

impl StatsHandle {
    pub fn get(&self) -> ChannelStats {
        self.0.snapshot()
    }
}

/// One end of an in-memory duplex channel.
#[derive(Debug)]
pub struct MemoryChannel {
    tx: Option<Sender<Frame>>,
    rx: Receiver<Frame>,
    counters: Arc<Counters>,
    poisoned: bool,
}

/// Two connected in-memory endpoints.
pub fn pair_inmemory() -> (MemoryChannel, MemoryChannel) {
    let (tx_a, rx_b) = channel();
    let (tx_b, rx_a) = channel();
    let end = |tx, rx| MemoryChannel {
        tx: Some(tx),
        rx,
        counters: Arc::default(),
        poisoned: false,
    };
    (end(tx_a, rx_a), end(tx_b, rx_b))
}

impl MemoryChannel {
    pub fn stats(&self) -> ChannelStats {
        self.counters.snapshot()
    }

    pub fn stats_handle(&self) -> StatsHandle {
        StatsHandle(self.counters.clone())
    }

    /// Drop the sending half; the peer's next receive reports `Closed`.
    pub fn close(&mut self) {
        self.tx = None;
    }

    fn poison(&mut self, e: TransportError) -> TransportError {
        self.poisoned = true;
        self.tx = None;
        e
    }
}

impl Channel for MemoryChannel {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError> {
        if self.poisoned {
            return Err(TransportError::Poisoned);
        }
        if frame.payload.len() > MAX_FRAME_LEN {
            return Err(self.poison(TransportError::Oversize(frame.payload.len())));
        }
        let tx = self.tx.as_ref().ok_or(TransportError::Closed)?;
        tx.send(frame.clone()).map_err(|_| TransportError::Closed)?;
        self.counters.sent(frame);
        Ok(())
    }

    fn recv_frame(&mut self) -> Result<Frame, TransportError> {
        if self.poisoned {
            return Err(TransportError::Poisoned);
        }
        let f = self.rx.recv().map_err(|_| TransportError::Closed)?;
        self.counters.received(&f);
        Ok(f)
    }
}

/// Framed TCP stream.
#[derive(Debug)]
pub struct TcpChannel {
    reader: BufReader<TcpStream>,
    writer: BufWriter<TcpStream>,
    counters: Arc<Counters>,
    poisoned: bool,
}

impl TcpChannel {
    pub fn new(stream: TcpStream) -> std::io::Result<Self> {
        stream.set_nodelay(true)?;
        let reader = BufReader::new(stream.try_clone()?);
        Ok(Self {
            reader,
            writer: BufWriter::new(stream),
            counters: Arc::default(),
            poisoned: false,
        })
    }

    pub fn connect<A: ToSocketAddrs>(addr: A) -> Result<Self, TransportError> {
        let s = TcpStream::connect(addr).map_err(io_err)?;
        Self::new(s).map_err(io_err)
    }

    pub fn peer_addr(&self) -> Option<SocketAddr> {
        self.writer.get_ref().peer_addr().ok()
    }

    pub fn stats(&self) -> ChannelStats {
        self.counters.snapshot()
    }

    pub fn stats_handle(&self) -> StatsHandle {
        StatsHandle(self.counters.clone())
    }

    fn poison(&mut self, e: TransportError) -> TransportError {
        self.poisoned = true;
        let _ = self.writer.get_ref().shutdown(std::net::Shutdown::Both);
        e
    }
}

fn io_err(e: std::io::Error) -> TransportError {
    TransportError::Io(e.to_string())
}

impl Channel for TcpChannel {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError> {
        if self.poisoned {
            return Err(TransportError::Poisoned);
        }
        let bytes = match frame.encode() {
            Ok(b) => b,
            Err(e) => return Err(self.poison(e)),
        };
        if let Err(e) = self
            .writer
            .write_all(&bytes)
            .and_then(|_| self.writer.flush())
        {
            let e = match e.kind() {
                ErrorKind::BrokenPipe | ErrorKind::ConnectionReset => TransportError::Closed,
                _ => io_err(e),
            };
            return Err(self.poison(e));
        }
        self.counters.sent(frame);
        Ok(())
    }

    fn recv_frame(&mut self) -> Result<Frame, TransportError> {
        if self.poisoned {
            return Err(TransportError::Poisoned);
        }
        let mut header = [0u8; FRAME_OVERHEAD];
        let mut got = 0;
        while got < FRAME_OVERHEAD {
            match self.reader.read(&mut header[got..]) {
                Ok(0) if got == 0 => return Err(self.poison(TransportError::Closed)),
                Ok(0) => return Err(self.poison(TransportError::ShortRead)),
                Ok(n) => got += n,
                Err(e) if e.kind() == ErrorKind::Interrupted => {}
                Err(e) if e.kind() == ErrorKind::ConnectionReset => {
                    return Err(self.poison(TransportError::Closed))
                }
                Err(e) => return Err(self.poison(io_err(e))),
            }
        }
        let (tag, len) = match Frame::decode_header(header) {
            Ok(h) => h,
            Err(e) => return Err(self.poison(e)),
        };
        let mut payload = vec![0u8; len];
        if let Err(e) = self.reader.read_exact(&mut payload) {
            let e = match e.kind() {
                ErrorKind::UnexpectedEof => TransportError::ShortRead,
                _ => io_err(e),
            };
            return Err(self.poison(e));
        }
        let f = Frame::new(tag, payload);
        self.counters.received(&f);
        Ok(f)
    }
}

/// Listening socket handing out framed channels.
#[derive(Debug)]
pub struct Listener {
    inner: TcpListener,
}

impl Listener {
    pub fn bind<A: ToSocketAddrs>(addr: A) -> Result<Self, TransportError> {
        Ok(Self {
            inner: TcpListener::bind(addr).map_err(io_err)?,
        })
    }

    pub fn local_addr(&self) -> Result<SocketAddr, TransportError> {
        self.inner.local_addr().map_err(io_err)
    }

    pub fn accept(&self) -> Result<TcpChannel, TransportError> {
        let (s, _) = self.inner.accept().map_err(io_err)?;
        TcpChannel::new(s).map_err(io_err)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Sent,
    Received,
}

/// Shared log of every frame that crossed a recording channel.
#[derive(Debug, Clone, Default)]
pub struct Transcript(Arc<Mutex<Vec<(Direction, Frame)>>>);

impl Transcript {
    pub fn frames(&self) -> Vec<(Direction, Frame)> {
        self.0.lock().unwrap().clone()
    }

    pub fn received(&self) -> Vec<Frame> {
        self.frames()
            .into_iter()
            .filter(|(d, _)| *d == Direction::Received)
            .map(|(_, f)| f)
            .collect()
    }

    pub fn sent(&self) -> Vec<Frame> {
        self.frames()
            .into_iter()
            .filter(|(d, _)| *d == Direction::Sent)
            .map(|(_, f)| f)
            .collect()
    }

    pub fn count(&self, dir: Direction, tag: Tag) -> usize {
        self.0
            .lock()
            .unwrap()
            .iter()
            .filter(|(d, f)| *d == dir && f.tag == tag)
            .count()
    }

    pub fn clear(&self) {
        self.0.lock().unwrap().clear();
    }
}

/// Wrapper that logs every frame.
#[derive(Debug)]
pub struct Recording<C> {
    inner: C,
    log: Transcript,
}

impl<C> Recording<C> {
    pub fn new(inner: C) -> (Self, Transcript) {
        let log = Transcript::default();
        (
            Self {
                inner,
                log: log.clone(),
            },
            log,
        )
    }

    pub fn into_inner(self) -> C {
        self.inner
    }
}

impl<C: Channel> Channel for Recording<C> {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError> {
        self.inner.send_frame(frame)?;
        self.log
            .0
            .lock()
            .unwrap()
            .push((Direction::Sent, frame.clone()));
        Ok(())
    }

    fn recv_frame(&mut self) -> Result<Frame, TransportError> {
        let f = self.inner.recv_frame()?;
        self.log
            .0
            .lock()
            .unwrap()
            .push((Direction::Received, f.clone()));
        Ok(f)
    }
}

/// Wrapper that fails the `n`-th frame operation (sends and receives
/// counted together, 0-based) and every operation after it. The wrapped
/// channel is dropped at the fault so the peer observes a closed channel.
#[derive(Debug)]
pub struct Faulty<C> {
    inner: Option<C>,
    fail_at: usize,
    ops: usize,
}

impl<C> Faulty<C> {
    pub fn new(inner: C, fail_at: usize) -> Self {
        Self {
            inner: Some(inner),
            fail_at,
            ops: 0,
        }
    }

    pub fn tripped(&self) -> bool {
        self.inner.is_none()
    }

    fn step(&mut self) -> Result<&mut C, TransportError> {
        let op = self.ops;
        self.ops += 1;
        if op >= self.fail_at {
            self.inner = None;
        }
        self.inner
            .as_mut()
            .ok_or_else(|| TransportError::Io("injected fault".into()))
    }
}

impl<C: Channel> Channel for Faulty<C> {
    fn send_frame(&mut self, frame: &Frame) -> Result<(), TransportError> {
        self.step()?.send_frame(frame)
    }

    fn recv_frame(&mut self) -> Result<Frame, TransportError> {
        self.step()?.recv_frame()
    }
}
