//! Serialization and transports: the codec, length-prefixed framing, an
//! in-process simulated network, and TCP.

mod codec;
mod frame;
mod simnet;
mod socket;

pub use codec::{
    Codec, DecodeError, EncodeError, MessageType, WireMessage, HEADER_LEN, REJECT_CODE,
    WIRE_VERSION,
};
pub use frame::{read_frame, write_frame, FrameError, FRAME_LEN_BYTES, MAX_FRAME_LEN};
pub use simnet::{Delivery, Fault, SimNet};
pub use socket::{serve, Client, SensorServer, SocketError};

use crate::algebra::PairingBackend;
use crate::protocol::{Rejection, Sensor};

/// Sensor-side dispatch of one encoded message. Returns the encoded reply
/// and, for service requests, the engine's decision.
///
/// Every failure, including undecodable input, answers with the same opaque
/// reject.
pub fn handle_sensor_frame<B: PairingBackend>(
    sensor: &mut Sensor<B>,
    codec: &Codec<B>,
    bytes: &[u8],
) -> (Vec<u8>, Result<(), Rejection>) {
    let decision = match codec.decode(bytes) {
        Ok(WireMessage::ServiceRequest(req)) => sensor.handle_request(&req),
        Ok(_) | Err(_) => Err(Rejection::Malformed),
    };
    let reply = match decision {
        Ok(confirm) => WireMessage::MacConfirm(confirm),
        Err(_) => WireMessage::reject(),
    };
    let encoded = codec
        .encode(&reply)
        .expect("replies have no variable-length fields");
    (encoded, decision.map(|_| ()))
}
