//! A complete network: one gateway, registered users and sensors, and the
//! simulated link between them, all derived from one seed.
//!
//! Registration messages pass through the codec as they would over the
//! trusted registration channel. Authentication messages go through
//! [`SimNet`].

use std::sync::Arc;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;
use thiserror::Error;

use crate::algebra::PairingBackend;
use crate::protocol::{
    Clock, Gateway, ManualClock, ProtocolError, Rejection, Sensor, SensorConfig,
    SensorProvisioning, Session,
};
use crate::wire::{
    handle_sensor_frame, Codec, DecodeError, Delivery, EncodeError, Fault, MessageType, SimNet,
    WireMessage,
};

/// Default payload width in bits.
pub const DEFAULT_PAYLOAD_BITS: usize = 256;
/// Default freshness window.
pub const DEFAULT_DELTA_T_MS: u64 = 5000;
/// Manual clocks start here: 2023-11-14T22:13:20Z.
pub const DEFAULT_START_MS: u64 = 1_700_000_000_000;

#[derive(Clone, Debug)]
pub struct DeploymentConfig {
    pub payload_bits: usize,
    pub delta_t_ms: u64,
    pub start_ms: u64,
    pub users: Vec<Vec<u8>>,
    pub sensors: Vec<Vec<u8>>,
    pub sensor: SensorConfig,
    pub latency_ms: u64,
    pub jitter_ms: u64,
}

impl Default for DeploymentConfig {
    fn default() -> Self {
        DeploymentConfig {
            payload_bits: DEFAULT_PAYLOAD_BITS,
            delta_t_ms: DEFAULT_DELTA_T_MS,
            start_ms: DEFAULT_START_MS,
            users: vec![b"alice".to_vec()],
            sensors: vec![b"sensor-1".to_vec()],
            sensor: SensorConfig::default(),
            latency_ms: 5,
            jitter_ms: 3,
        }
    }
}

impl DeploymentConfig {
    pub fn with_users<I: AsRef<[u8]>>(mut self, ids: impl IntoIterator<Item = I>) -> Self {
        self.users = ids.into_iter().map(|i| i.as_ref().to_vec()).collect();
        self
    }

    pub fn with_sensors<I: AsRef<[u8]>>(mut self, ids: impl IntoIterator<Item = I>) -> Self {
        self.sensors = ids.into_iter().map(|i| i.as_ref().to_vec()).collect();
        self
    }
}

#[derive(Debug, Error)]
pub enum DeploymentError {
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Decode(#[from] DecodeError),
    #[error("unexpected {0} message")]
    Unexpected(MessageType),
    #[error("no party at index {0}")]
    NoSuchParty(usize),
}

/// One sensor-side delivery and what came of it.
#[derive(Clone, Debug)]
pub struct SensorDelivery {
    pub delivery: Delivery,
    pub reply: Vec<u8>,
    pub decision: Result<(), Rejection>,
}

/// A full handshake as seen on the wire and by both parties.
#[derive(Clone, Debug)]
pub struct Handshake {
    pub request: Vec<u8>,
    pub reply: Vec<u8>,
    pub sensor_decision: Result<(), Rejection>,
    pub user_session: Result<Session, ProtocolError>,
    pub sensor_session: Option<Session>,
}

impl Handshake {
    /// Both sides established and hold the same key and `h_1`.
    pub fn keys_agree(&self) -> bool {
        match (&self.user_session, &self.sensor_session) {
            (Ok(u), Some(s)) => u.key == s.key && u.h1 == s.h1,
            _ => false,
        }
    }
}

pub struct Deployment<B: PairingBackend> {
    pub gateway: Gateway<B>,
    pub users: Vec<crate::protocol::User<B>>,
    pub sensors: Vec<Sensor<B>>,
    pub codec: Codec<B>,
    pub net: SimNet,
    clock: Arc<dyn Clock>,
    manual: Option<ManualClock>,
    rng: ChaCha20Rng,
    registration_transcript: Vec<Vec<u8>>,
}

impl<B: PairingBackend> std::fmt::Debug for Deployment<B> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Deployment")
            .field("backend", &B::NAME)
            .field("users", &self.users)
            .field("sensors", &self.sensors)
            .finish_non_exhaustive()
    }
}

impl<B: PairingBackend> Deployment<B> {
    /// Provision on a manual clock starting at `config.start_ms`.
    pub fn provision(seed: u64, config: &DeploymentConfig) -> Result<Self, DeploymentError> {
        let manual = ManualClock::new(config.start_ms);
        let clock: Arc<dyn Clock> = Arc::new(manual.clone());
        Self::build(seed, config, clock, Some(manual))
    }

    /// Provision with parties reading `clock`. The simulated network keeps
    /// its own manual clock and is only useful with [`Deployment::provision`].
    pub fn provision_with_clock(
        seed: u64,
        config: &DeploymentConfig,
        clock: Arc<dyn Clock>,
    ) -> Result<Self, DeploymentError> {
        Self::build(seed, config, clock, None)
    }

    fn build(
        seed: u64,
        config: &DeploymentConfig,
        clock: Arc<dyn Clock>,
        manual: Option<ManualClock>,
    ) -> Result<Self, DeploymentError> {
        let mut rng = ChaCha20Rng::seed_from_u64(seed);
        let gateway = Gateway::new(config.payload_bits, config.delta_t_ms, &mut rng)?;
        let codec = Codec::for_params(gateway.params());
        let net_clock = manual
            .clone()
            .unwrap_or_else(|| ManualClock::new(config.start_ms));
        let net = SimNet::new(net_clock, seed ^ 0x6e65_7473_696d)
            .with_latency(config.latency_ms, config.jitter_ms);
        let mut d = Deployment {
            gateway,
            users: Vec::new(),
            sensors: Vec::new(),
            codec,
            net,
            clock,
            manual,
            rng,
            registration_transcript: Vec::new(),
        };
        for id in &config.users {
            d.register_user(id)?;
        }
        for id in &config.sensors {
            d.register_sensor(id, config.sensor)?;
        }
        Ok(d)
    }

    pub fn params(&self) -> &crate::signcryption::SystemParams<B> {
        self.gateway.params()
    }

    pub fn clock(&self) -> &Arc<dyn Clock> {
        &self.clock
    }

    /// The shared manual clock, if provisioned with one.
    pub fn manual_clock(&self) -> Option<&ManualClock> {
        self.manual.as_ref()
    }

    pub fn rng(&mut self) -> &mut ChaCha20Rng {
        &mut self.rng
    }

    /// Every registration-channel message, encoded.
    pub fn registration_transcript(&self) -> &[Vec<u8>] {
        &self.registration_transcript
    }

    /// Encode, log and decode: the trusted registration channel.
    fn channel(&mut self, msg: WireMessage<B>) -> Result<WireMessage<B>, DeploymentError> {
        let bytes = self.codec.encode(&msg)?;
        let decoded = self.codec.decode(&bytes)?;
        self.registration_transcript.push(bytes);
        Ok(decoded)
    }

    /// Register a new user and push the updated directory to every sensor.
    pub fn register_user(&mut self, id: &[u8]) -> Result<usize, DeploymentError> {
        let params = self.gateway.params().clone();
        let mut user =
            crate::protocol::User::new(id, params, Arc::clone(&self.clock), &mut self.rng)?;
        let req = match self.channel(WireMessage::RegUserReq(user.registration_request()))? {
            WireMessage::RegUserReq(r) => r,
            other => return Err(DeploymentError::Unexpected(other.message_type())),
        };
        let cred = self.gateway.register_user(&req, &mut self.rng)?;
        let cred = match self.channel(WireMessage::RegUserResp(cred))? {
            WireMessage::RegUserResp(c) => c,
            other => return Err(DeploymentError::Unexpected(other.message_type())),
        };
        user.install_credential(cred)?;
        for s in &self.sensors {
            if let Some(pk) = s.public_key() {
                user.learn_sensor(pk);
            }
        }
        if !self.sensors.is_empty() {
            let entry = self
                .gateway
                .directory()
                .last()
                .cloned()
                .into_iter()
                .collect();
            let entries = match self.channel(WireMessage::DirectoryPush(entry))? {
                WireMessage::DirectoryPush(e) => e,
                other => return Err(DeploymentError::Unexpected(other.message_type())),
            };
            for s in &mut self.sensors {
                s.apply_directory(&entries)?;
            }
        }
        self.users.push(user);
        Ok(self.users.len() - 1)
    }

    pub fn register_sensor(
        &mut self,
        id: &[u8],
        config: SensorConfig,
    ) -> Result<usize, DeploymentError> {
        let params = self.gateway.params().clone();
        let mut sensor = Sensor::new(id, params, config, Arc::clone(&self.clock))?;
        let id = match self.channel(WireMessage::RegSensorReq { id: id.to_vec() })? {
            WireMessage::RegSensorReq { id } => id,
            other => return Err(DeploymentError::Unexpected(other.message_type())),
        };
        let prov = self.gateway.register_sensor(&id, &mut self.rng)?;
        let partial = match self.channel(WireMessage::RegSensorResp(prov.partial))? {
            WireMessage::RegSensorResp(p) => p,
            other => return Err(DeploymentError::Unexpected(other.message_type())),
        };
        let directory = match self.channel(WireMessage::DirectoryPush(prov.directory))? {
            WireMessage::DirectoryPush(e) => e,
            other => return Err(DeploymentError::Unexpected(other.message_type())),
        };
        let public = sensor.install(&SensorProvisioning { partial, directory }, &mut self.rng)?;
        for u in &mut self.users {
            u.learn_sensor(public.clone());
        }
        self.sensors.push(sensor);
        Ok(self.sensors.len() - 1)
    }

    pub fn random_payload(&mut self) -> Vec<u8> {
        let mut m = vec![0u8; self.params().payload_len()];
        self.rng.fill_bytes(&mut m);
        m
    }

    /// User `user` builds a service request for sensor `sensor`; returns
    /// its encoding.
    pub fn begin(&mut self, user: usize, sensor: usize) -> Result<Vec<u8>, DeploymentError> {
        let sensor_id = self
            .sensors
            .get(sensor)
            .ok_or(DeploymentError::NoSuchParty(sensor))?
            .id()
            .to_vec();
        let m = self.random_payload();
        let u = self
            .users
            .get_mut(user)
            .ok_or(DeploymentError::NoSuchParty(user))?;
        let req = u.begin_auth(&sensor_id, &m, &mut self.rng)?;
        Ok(self.codec.encode(&WireMessage::ServiceRequest(req))?)
    }

    /// Put `bytes` on the link to `sensor` with `fault` and let the sensor
    /// handle each resulting arrival.
    pub fn send_to_sensor(
        &mut self,
        sensor: usize,
        bytes: &[u8],
        fault: Fault,
    ) -> Result<Vec<SensorDelivery>, DeploymentError> {
        let deliveries = self.net.deliver(bytes, fault);
        self.land(sensor, deliveries)
    }

    /// Let the sensor handle deliveries released by an earlier reorder.
    pub fn flush_to_sensor(
        &mut self,
        sensor: usize,
    ) -> Result<Vec<SensorDelivery>, DeploymentError> {
        let deliveries = self.net.flush();
        self.land(sensor, deliveries)
    }

    fn land(
        &mut self,
        sensor: usize,
        deliveries: Vec<Delivery>,
    ) -> Result<Vec<SensorDelivery>, DeploymentError> {
        let codec = self.codec;
        let s = self
            .sensors
            .get_mut(sensor)
            .ok_or(DeploymentError::NoSuchParty(sensor))?;
        Ok(deliveries
            .into_iter()
            .map(|delivery| {
                self.net.arrive(&delivery);
                let (reply, decision) = handle_sensor_frame(s, &codec, &delivery.bytes);
                SensorDelivery {
                    delivery,
                    reply,
                    decision,
                }
            })
            .collect())
    }

    /// Carry a sensor reply back to `user` over the link.
    pub fn reply_to_user(
        &mut self,
        user: usize,
        sensor: usize,
        reply: &[u8],
    ) -> Result<Result<Session, ProtocolError>, DeploymentError> {
        let sensor_id = self
            .sensors
            .get(sensor)
            .ok_or(DeploymentError::NoSuchParty(sensor))?
            .id()
            .to_vec();
        for d in self.net.deliver(reply, Fault::None) {
            self.net.arrive(&d);
        }
        let msg = self.codec.decode(reply)?;
        let u = self
            .users
            .get_mut(user)
            .ok_or(DeploymentError::NoSuchParty(user))?;
        Ok(match msg {
            WireMessage::MacConfirm(c) => u.complete_auth(&sensor_id, &c),
            WireMessage::Reject { .. } => Err(u.handle_reject(&sensor_id)),
            other => return Err(DeploymentError::Unexpected(other.message_type())),
        })
    }

    /// One honest request/confirm round trip with no faults.
    pub fn handshake(&mut self, user: usize, sensor: usize) -> Result<Handshake, DeploymentError> {
        let request = self.begin(user, sensor)?;
        let mut arrivals = self.send_to_sensor(sensor, &request, Fault::None)?;
        let arrival = arrivals.remove(0);
        let user_session = self.reply_to_user(user, sensor, &arrival.reply)?;
        Ok(Handshake {
            request,
            reply: arrival.reply,
            sensor_decision: arrival.decision,
            user_session,
            sensor_session: self.sensors[sensor].session().cloned(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::algebra::toy::Toy;
    use crate::protocol::PartyPhase;

    #[test]
    fn provisioning_is_deterministic() {
        let cfg = DeploymentConfig::default();
        let a = Deployment::<Toy>::provision(5, &cfg).unwrap();
        let b = Deployment::<Toy>::provision(5, &cfg).unwrap();
        assert_eq!(a.registration_transcript(), b.registration_transcript());
        assert_eq!(a.sensors[0].public_key(), b.sensors[0].public_key());
    }

    #[test]
    fn honest_handshake_on_toy() {
        let mut d = Deployment::<Toy>::provision(7, &DeploymentConfig::default()).unwrap();
        let h = d.handshake(0, 0).unwrap();
        assert_eq!(h.sensor_decision, Ok(()));
        assert!(h.keys_agree());
        assert_eq!(d.users[0].phase(), PartyPhase::Established);
        assert_eq!(d.sensors[0].phase(), PartyPhase::Established);
    }

    #[test]
    fn late_user_reaches_existing_sensor() {
        let mut d = Deployment::<Toy>::provision(9, &DeploymentConfig::default()).unwrap();
        let bob = d.register_user(b"bob").unwrap();
        assert_eq!(d.sensors[0].directory().len(), 2);
        assert!(d.handshake(bob, 0).unwrap().keys_agree());
    }
}
