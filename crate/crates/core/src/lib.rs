//! Anonymous mutual authentication and key agreement between a PKI user and
//! a certificateless sensor, brokered by a gateway, built on PKI-to-CLC
//! heterogeneous signcryption.
//!
//! Everything is generic over [`algebra::PairingBackend`]. [`Toy`] and
//! [`ToyWide`] expose discrete logs and exist for testing; [`Production`]
//! runs on BLS12-381.
//!
//! ```
//! use hetauth::{deployment::{Deployment, DeploymentConfig}, Toy};
//!
//! let mut net = Deployment::<Toy>::provision(7, &DeploymentConfig::default()).unwrap();
//! let hs = net.handshake(0, 0).unwrap();
//! assert!(hs.keys_agree());
//! ```

pub mod adversary;
pub mod algebra;
pub mod bench;
pub mod deployment;
pub mod hash;
pub mod ops;
pub mod protocol;
pub mod signcryption;
pub mod wire;

pub use algebra::bls::Bls12;
pub use algebra::toy::{Toy, ToyWide};
pub use algebra::PairingBackend;

/// The backend behind `--backend production`.
pub type Production = Bls12;

pub type Scalar<B = Production> = <B as PairingBackend>::Scalar;
pub type G1<B = Production> = <B as PairingBackend>::G1;
pub type Gt<B = Production> = <B as PairingBackend>::Gt;
