//! Crate-wide error type.
//!
//! Every failure mode the protocol distinguishes gets its own variant so the
//! server can audit the exact stage a packet died at, even though the
//! externally observable behavior (deny) is the same for most of them.

use thiserror::Error;

/// Errors produced by the gate's cryptography, ledger, codec, and transports.
#[derive(Debug, Error)]
pub enum Error {
    /// Unsupported or inconsistent configuration (key size, scenario setup).
    #[error("configuration error: {0}")]
    Config(String),

    /// A device serial ID that violates identity rules (e.g. empty).
    #[error("invalid identity: {0}")]
    InvalidIdentity(String),

    /// Authenticated decryption failed. Wrong key and tampered ciphertext are
    /// deliberately indistinguishable.
    #[error("decryption failure")]
    DecryptionFailure,

    /// Asymmetric operation failed (malformed key material, oversized input).
    #[error("asymmetric cipher error: {0}")]
    Asymmetric(String),

    /// Wire bytes carried a version byte this codec does not speak.
    #[error("unknown packet version 0x{0:02x}")]
    UnknownVersion(u8),

    /// The outer envelope would not open under the recipient private key.
    #[error("outer layer decryption failed")]
    OuterDecryption,

    /// Field framing did not parse.
    #[error("packet parse error: {0}")]
    Parse(&'static str),

    /// The inner symmetric layer would not decrypt under the claimed serial.
    #[error("inner layer decryption failed")]
    InnerDecryption,

    /// The serial ID inside the inner message contradicts the envelope claim.
    #[error("sender identity mismatch between envelope and inner message")]
    IdentityMismatch,

    /// An argument violated an operation precondition.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// A referenced device or resource does not exist.
    #[error("not found: {0}")]
    NotFound(String),

    /// A serialized ledger did not decode.
    #[error("ledger format error: {0}")]
    LedgerFormat(String),

    /// A decoded ledger failed chain verification.
    #[error("ledger integrity failure at block {first_bad_index}")]
    ChainIntegrity { first_bad_index: u64 },

    /// A node operation was invoked in a phase that does not permit it.
    #[error("state error: {0}")]
    State(String),

    /// I/O failure without address context.
    #[error(transparent)]
    Io(#[from] std::io::Error),

    /// Socket transport failure, with the address that produced it.
    #[error("transport error at {addr}: {source}")]
    Transport {
        addr: String,
        #[source]
        source: std::io::Error,
    },

    /// Simulated network misuse (unknown endpoint, duplicate link).
    #[error("simnet error: {0}")]
    SimNet(String),
}

pub type Result<T> = std::result::Result<T, Error>;
