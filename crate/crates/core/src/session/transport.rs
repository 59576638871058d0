//! Ordered, reliable line transports.

use std::collections::VecDeque;
use std::io::{BufRead, BufReader, Write};
use std::net::{TcpStream, ToSocketAddrs};
use std::sync::mpsc::{channel, Receiver, Sender};

use crate::error::{Error, Result};

/// Carries newline-free text frames. `recv` returns `None` once the peer is
/// gone.
pub trait Transport {
    fn send(&mut self, frame: &str) -> Result<()>;
    fn recv(&mut self) -> Result<Option<String>>;
}

impl<T: Transport + ?Sized> Transport for &mut T {
    fn send(&mut self, frame: &str) -> Result<()> {
        (**self).send(frame)
    }

    fn recv(&mut self) -> Result<Option<String>> {
        (**self).recv()
    }
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn send(&mut self, frame: &str) -> Result<()> {
        (**self).send(frame)
    }

    fn recv(&mut self) -> Result<Option<String>> {
        (**self).recv()
    }
}

#[derive(Debug)]
pub struct MemoryTransport {
    tx: Sender<String>,
    rx: Receiver<String>,
}

/// Two connected in-process endpoints.
pub fn memory_pair() -> (MemoryTransport, MemoryTransport) {
    let (a_tx, b_rx) = channel();
    let (b_tx, a_rx) = channel();
    (MemoryTransport { tx: a_tx, rx: a_rx }, MemoryTransport { tx: b_tx, rx: b_rx })
}

impl Transport for MemoryTransport {
    fn send(&mut self, frame: &str) -> Result<()> {
        self.tx.send(frame.to_string()).map_err(|_| Error::Transport("peer disconnected".into()))
    }

    fn recv(&mut self) -> Result<Option<String>> {
        Ok(self.rx.recv().ok())
    }
}

#[derive(Debug)]
pub struct TcpTransport {
    reader: BufReader<TcpStream>,
    writer: TcpStream,
}

impl TcpTransport {
    pub fn new(stream: TcpStream) -> Result<Self> {
        stream.set_nodelay(true).map_err(io)?;
        let writer = stream.try_clone().map_err(io)?;
        Ok(Self { reader: BufReader::new(stream), writer })
    }

    pub fn connect<A: ToSocketAddrs>(addr: A) -> Result<Self> {
        Self::new(TcpStream::connect(addr).map_err(io)?)
    }
}

fn io(e: std::io::Error) -> Error {
    Error::Transport(e.to_string())
}

impl Transport for TcpTransport {
    fn send(&mut self, frame: &str) -> Result<()> {
        let mut buf = Vec::with_capacity(frame.len() + 1);
        buf.extend_from_slice(frame.as_bytes());
        buf.push(b'\n');
        self.writer.write_all(&buf).map_err(io)
    }

    fn recv(&mut self) -> Result<Option<String>> {
        let mut line = String::new();
        match self.reader.read_line(&mut line) {
            Ok(0) => Ok(None),
            Ok(_) => Ok(Some(line.trim_end_matches(['\r', '\n']).to_string())),
            Err(e) if e.kind() == std::io::ErrorKind::InvalidData => Ok(Some(String::from("\u{fffd}"))),
            Err(e) if e.kind() == std::io::ErrorKind::ConnectionReset => Ok(None),
            Err(e) => Err(io(e)),
        }
    }
}

/// Plays back a fixed list of frames and records what it is sent.
#[derive(Debug, Default)]
pub struct ScriptedTransport {
    pub incoming: VecDeque<String>,
    pub sent: Vec<String>,
}

impl ScriptedTransport {
    pub fn new<I: IntoIterator<Item = String>>(frames: I) -> Self {
        Self { incoming: frames.into_iter().collect(), sent: Vec::new() }
    }
}

impl Transport for ScriptedTransport {
    fn send(&mut self, frame: &str) -> Result<()> {
        self.sent.push(frame.to_string());
        Ok(())
    }

    fn recv(&mut self) -> Result<Option<String>> {
        Ok(self.incoming.pop_front())
    }
}
