//! TCP mode: a sensor service and a request/response client, one
//! [`WireMessage`] per length-prefixed frame.

use std::io;
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::{self, JoinHandle};

use thiserror::Error;

use super::{
    handle_sensor_frame, read_frame, write_frame, Codec, DecodeError, EncodeError, FrameError,
    WireMessage,
};
use crate::algebra::PairingBackend;
use crate::protocol::Sensor;

#[derive(Debug, Error)]
pub enum SocketError {
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: io::Error },
    #[error("cannot connect to {addr}: {source}")]
    Connect { addr: String, source: io::Error },
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("frame of {0} bytes exceeds the limit")]
    FrameTooLarge(usize),
    #[error("peer closed the connection")]
    Closed,
    #[error("undecodable message: {0}")]
    Decode(#[from] DecodeError),
    #[error("unencodable message: {0}")]
    Encode(#[from] EncodeError),
}

impl From<FrameError> for SocketError {
    fn from(e: FrameError) -> Self {
        match e {
            FrameError::TooLarge(n) => SocketError::FrameTooLarge(n),
            FrameError::Truncated => SocketError::Closed,
            FrameError::Io(e) => SocketError::Io(e),
        }
    }
}

/// A running sensor service. Dropping it without [`SensorServer::shutdown`]
/// leaves the accept loop running.
#[derive(Debug)]
pub struct SensorServer {
    local_addr: SocketAddr,
    stop: Arc<AtomicBool>,
    accept: Option<JoinHandle<()>>,
}

impl SensorServer {
    pub fn local_addr(&self) -> SocketAddr {
        self.local_addr
    }

    /// Stop accepting; open connections finish on their own.
    pub fn shutdown(mut self) {
        self.stop.store(true, Ordering::SeqCst);
        let _ = TcpStream::connect(self.local_addr);
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }

    /// Block until the accept loop exits.
    pub fn wait(mut self) {
        if let Some(h) = self.accept.take() {
            let _ = h.join();
        }
    }
}

/// Bind `addr` and serve `sensor`. Connections run on their own threads;
/// the mutex serializes every request into the single sensor state machine.
pub fn serve<B: PairingBackend>(
    addr: impl ToSocketAddrs + std::fmt::Display,
    sensor: Arc<Mutex<Sensor<B>>>,
    codec: Codec<B>,
) -> Result<SensorServer, SocketError> {
    let label = addr.to_string();
    let listener = TcpListener::bind(addr).map_err(|source| SocketError::Bind {
        addr: label,
        source,
    })?;
    let local_addr = listener.local_addr()?;
    let stop = Arc::new(AtomicBool::new(false));
    let stop_flag = Arc::clone(&stop);
    let accept = thread::spawn(move || {
        for conn in listener.incoming() {
            if stop_flag.load(Ordering::SeqCst) {
                break;
            }
            let Ok(stream) = conn else { continue };
            let sensor = Arc::clone(&sensor);
            thread::spawn(move || {
                let _ = serve_connection(stream, &sensor, &codec);
            });
        }
    });
    Ok(SensorServer {
        local_addr,
        stop,
        accept: Some(accept),
    })
}

fn serve_connection<B: PairingBackend>(
    mut stream: TcpStream,
    sensor: &Mutex<Sensor<B>>,
    codec: &Codec<B>,
) -> Result<(), SocketError> {
    stream.set_nodelay(true)?;
    while let Some(frame) = read_frame(&mut stream)? {
        let (reply, _) = {
            let mut guard = sensor.lock().unwrap_or_else(|p| p.into_inner());
            handle_sensor_frame(&mut guard, codec, &frame)
        };
        write_frame(&mut stream, &reply)?;
    }
    Ok(())
}

/// One connection to a sensor service.
#[derive(Debug)]
pub struct Client<B: PairingBackend> {
    stream: TcpStream,
    codec: Codec<B>,
}

impl<B: PairingBackend> Client<B> {
    pub fn connect(
        addr: impl ToSocketAddrs + std::fmt::Display,
        codec: Codec<B>,
    ) -> Result<Self, SocketError> {
        let label = addr.to_string();
        let stream = TcpStream::connect(addr).map_err(|source| SocketError::Connect {
            addr: label,
            source,
        })?;
        stream.set_nodelay(true)?;
        Ok(Client { stream, codec })
    }

    /// Send raw bytes as one frame and return the raw reply frame.
    pub fn exchange_bytes(&mut self, bytes: &[u8]) -> Result<Vec<u8>, SocketError> {
        write_frame(&mut self.stream, bytes)?;
        read_frame(&mut self.stream)?.ok_or(SocketError::Closed)
    }

    pub fn exchange(&mut self, msg: &WireMessage<B>) -> Result<WireMessage<B>, SocketError> {
        let bytes = self.codec.encode(msg)?;
        let reply = self.exchange_bytes(&bytes)?;
        Ok(self.codec.decode(&reply)?)
    }
}
