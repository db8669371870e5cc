use rand_core::{CryptoRng, RngCore};

use super::{check_identity, DirectoryEntry, ProtocolError, UserRegistration};
use crate::algebra::PairingBackend;
use crate::ops::{self, Entity, Phase};
use crate::signcryption::{
    issue_credential, issue_partial_key, setup, MasterKey, PartialKey, SystemParams, UserCredential,
};

/// What the gateway returns to a registering sensor: its partial key and the
/// current user directory.
#[derive(Debug)]
pub struct SensorProvisioning<B: PairingBackend> {
    pub partial: PartialKey<B>,
    pub directory: Vec<DirectoryEntry<B>>,
}

/// The trusted authority. Holds `s`, issues user credentials and sensor
/// partial keys, and keeps the directory of issued credentials.
#[derive(Debug)]
pub struct Gateway<B: PairingBackend> {
    params: SystemParams<B>,
    master: MasterKey<B>,
    directory: Vec<DirectoryEntry<B>>,
    sensors: Vec<Vec<u8>>,
}

impl<B: PairingBackend> Gateway<B> {
    pub fn new<R: RngCore + CryptoRng + ?Sized>(
        payload_bits: usize,
        delta_t_ms: u64,
        rng: &mut R,
    ) -> Result<Self, ProtocolError> {
        let (params, master) = ops::within(Entity::Gateway, Phase::Setup, || {
            setup::<B, R>(payload_bits, delta_t_ms, rng)
        })?;
        Ok(Gateway {
            params,
            master,
            directory: Vec::new(),
            sensors: Vec::new(),
        })
    }

    pub fn params(&self) -> &SystemParams<B> {
        &self.params
    }

    pub fn master_key(&self) -> &MasterKey<B> {
        &self.master
    }

    pub fn directory(&self) -> &[DirectoryEntry<B>] {
        &self.directory
    }

    pub fn sensors(&self) -> &[Vec<u8>] {
        &self.sensors
    }

    /// Issue `{Acd, σ1, δ}`. Every call draws a fresh `w_1`, so a user that
    /// registers twice ends up with two unrelated accounts.
    pub fn register_user<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        request: &UserRegistration<B>,
        rng: &mut R,
    ) -> Result<UserCredential<B>, ProtocolError> {
        check_identity(&request.id)?;
        let cred = ops::within(Entity::Gateway, Phase::Registration, || {
            issue_credential(
                &self.master,
                &request.id,
                &request.public,
                &self.params,
                rng,
            )
        });
        self.directory.push(DirectoryEntry {
            acd: cred.acd,
            sigma1: cred.sigma1,
            public: request.public,
            delta: cred.delta,
        });
        Ok(cred)
    }

    /// Issue `{T, d, γ}` and hand over the directory of registered users.
    pub fn register_sensor<R: RngCore + CryptoRng + ?Sized>(
        &mut self,
        id: &[u8],
        rng: &mut R,
    ) -> Result<SensorProvisioning<B>, ProtocolError> {
        check_identity(id)?;
        let partial = ops::within(Entity::Gateway, Phase::Registration, || {
            issue_partial_key(&self.master, id, &self.params, rng)
        });
        self.sensors.push(id.to_vec());
        Ok(SensorProvisioning {
            partial,
            directory: self.directory.clone(),
        })
    }
}
