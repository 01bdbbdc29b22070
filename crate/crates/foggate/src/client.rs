//! The client state machine.
//!
//! A client walks one path: `idle → discovered → requested → granted|denied`.
//! It hears a server hello (handshake point 1), sends an access request
//! (point 2), and verifies the server's grant or deny (point 3). Once
//! granted it may send data packets.
//!
//! Trust is anchored in the pre-provisioned server public key: it is fixed
//! at construction and every verification path uses that value. Messages
//! that fail verification are discarded without a phase change — the client
//! keeps waiting, and a local audit note records what it saw.

use rand::{CryptoRng, RngCore};

use crate::crypto::{one_way_hash, DeviceIdentity, Digest, PublicKey};
use crate::error::{Error, Result};
use crate::packet::{
    create_packet, decrypt_inner, open_hello, open_packet, verify_hello,
    verify_packet_signature, InnerMessage, MessageType,
};

/// Where the client is in the handshake.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum ClientPhase {
    Idle,
    Discovered,
    Requested,
    Granted,
    Denied,
}

/// What the client concluded about one received frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FrameOutcome {
    Accepted,
    Discarded,
}

/// Local audit note: digest of the frame bound to the outcome byte
/// (0x01 accepted, 0x00 discarded), recomputable from a capture.
#[derive(Debug, Clone)]
pub struct ClientAuditNote {
    pub frame_digest: Digest,
    pub outcome: FrameOutcome,
    pub detail: &'static str,
}

/// Digest formula for client audit notes.
pub fn client_note_digest(frame: &[u8], outcome: FrameOutcome) -> Digest {
    let mut data = Vec::with_capacity(frame.len() + 1);
    data.extend_from_slice(frame);
    data.push(match outcome {
        FrameOutcome::Accepted => 0x01,
        FrameOutcome::Discarded => 0x00,
    });
    one_way_hash(&data)
}

/// Client tunables.
#[derive(Debug, Clone)]
pub struct ClientConfig {
    /// Seconds to wait in `requested` before re-arming to `discovered`.
    pub response_timeout_secs: u64,
}

impl Default for ClientConfig {
    fn default() -> Self {
        ClientConfig {
            response_timeout_secs: 5,
        }
    }
}

/// One client device.
#[derive(Debug)]
pub struct ClientState {
    identity: DeviceIdentity,
    server_public: PublicKey,
    server_serial_id: Option<String>,
    phase: ClientPhase,
    requested_at: Option<u64>,
    config: ClientConfig,
    audit_notes: Vec<ClientAuditNote>,
}

impl ClientState {
    /// A client that still has to discover the server via hello.
    pub fn new(identity: DeviceIdentity, server_public: PublicKey, config: ClientConfig) -> Self {
        ClientState {
            identity,
            server_public,
            server_serial_id: None,
            phase: ClientPhase::Idle,
            requested_at: None,
            config,
            audit_notes: Vec::new(),
        }
    }

    /// A client pre-provisioned with the server serial as well: discovery is
    /// skipped and the client starts in `discovered`.
    pub fn with_known_server(
        identity: DeviceIdentity,
        server_public: PublicKey,
        server_serial_id: impl Into<String>,
        config: ClientConfig,
    ) -> Self {
        let mut client = ClientState::new(identity, server_public, config);
        client.server_serial_id = Some(server_serial_id.into());
        client.phase = ClientPhase::Discovered;
        client
    }

    pub fn identity(&self) -> &DeviceIdentity {
        &self.identity
    }

    pub fn phase(&self) -> ClientPhase {
        self.phase
    }

    pub fn server_serial_id(&self) -> Option<&str> {
        self.server_serial_id.as_deref()
    }

    pub fn audit_notes(&self) -> &[ClientAuditNote] {
        &self.audit_notes
    }

    /// Handshake point 1, receiving side. A verified hello moves an idle
    /// client to `discovered`; anything else is a silent non-transition.
    /// Duplicate hellos are idempotent.
    pub fn on_hello(&mut self, wire: &[u8]) {
        let (inner, signature) = match open_hello(wire) {
            Ok(parts) => parts,
            Err(_) => {
                self.note(wire, FrameOutcome::Discarded, "hello parse failed");
                return;
            }
        };
        if inner.msg_type != MessageType::ServerHello
            || !verify_hello(&inner, &signature, &self.server_public)
        {
            self.note(wire, FrameOutcome::Discarded, "hello verification failed");
            return;
        }
        if let Some(known) = &self.server_serial_id {
            if known != &inner.sender_serial_id {
                self.note(wire, FrameOutcome::Discarded, "hello serial contradicts known server");
                return;
            }
        }
        self.note(wire, FrameOutcome::Accepted, "hello verified");
        self.server_serial_id = Some(inner.sender_serial_id);
        if self.phase == ClientPhase::Idle {
            self.phase = ClientPhase::Discovered;
        }
    }

    /// Handshake point 2: emit an access request and start waiting.
    pub fn request_access<R: RngCore + CryptoRng>(
        &mut self,
        rng: &mut R,
        now: u64,
    ) -> Result<Vec<u8>> {
        if self.phase != ClientPhase::Discovered {
            return Err(Error::State(format!(
                "request_access requires discovered phase, not {:?}",
                self.phase
            )));
        }
        let msg = InnerMessage::new(
            rng,
            MessageType::AccessRequest,
            self.identity.serial_id(),
            Vec::new(),
        )?;
        let wire = create_packet(rng, &msg, self.identity.private_key(), &self.server_public)?;
        self.phase = ClientPhase::Requested;
        self.requested_at = Some(now);
        Ok(wire)
    }

    /// Handshake point 3, receiving side. Only a packet that opens with our
    /// key, claims the known server serial, decrypts, and verifies under the
    /// pre-provisioned server key can move the phase. Everything else is
    /// discarded and we keep waiting.
    pub fn on_response(&mut self, wire: &[u8]) {
        if self.phase != ClientPhase::Requested {
            self.note(wire, FrameOutcome::Discarded, "response outside requested phase");
            return;
        }
        let Some(server_serial) = self.server_serial_id.clone() else {
            self.note(wire, FrameOutcome::Discarded, "no known server serial");
            return;
        };

        let sealed = match open_packet(wire, self.identity.private_key()) {
            Ok(sealed) => sealed,
            Err(_) => {
                self.note(wire, FrameOutcome::Discarded, "outer layer failed");
                return;
            }
        };
        if sealed.sender_serial_id != server_serial {
            self.note(wire, FrameOutcome::Discarded, "sender is not the server");
            return;
        }
        let inner = match decrypt_inner(&sealed, &server_serial) {
            Ok(inner) => inner,
            Err(_) => {
                self.note(wire, FrameOutcome::Discarded, "inner layer failed");
                return;
            }
        };
        if !verify_packet_signature(&sealed, &inner, &self.server_public) {
            self.note(wire, FrameOutcome::Discarded, "signature failed");
            return;
        }
        match inner.msg_type {
            MessageType::AccessGrant => {
                self.note(wire, FrameOutcome::Accepted, "grant verified");
                self.phase = ClientPhase::Granted;
            }
            MessageType::AccessDeny => {
                self.note(wire, FrameOutcome::Accepted, "deny verified");
                self.phase = ClientPhase::Denied;
            }
            _ => {
                self.note(wire, FrameOutcome::Discarded, "unexpected response type");
            }
        }
    }

    /// Post-grant traffic. Empty payloads are legal.
    pub fn send_data<R: RngCore + CryptoRng>(
        &mut self,
        rng: &mut R,
        payload: &[u8],
    ) -> Result<Vec<u8>> {
        if self.phase != ClientPhase::Granted {
            return Err(Error::State(format!(
                "send_data requires granted phase, not {:?}",
                self.phase
            )));
        }
        let msg = InnerMessage::new(
            rng,
            MessageType::Data,
            self.identity.serial_id(),
            payload.to_vec(),
        )?;
        create_packet(rng, &msg, self.identity.private_key(), &self.server_public)
    }

    /// Re-arms a stuck request: after the response timeout the client drops
    /// back to `discovered` so it can try again. Returns true if it fired.
    pub fn poll_timeout(&mut self, now: u64) -> bool {
        if self.phase == ClientPhase::Requested {
            if let Some(at) = self.requested_at {
                if now.saturating_sub(at) >= self.config.response_timeout_secs {
                    self.phase = ClientPhase::Discovered;
                    self.requested_at = None;
                    return true;
                }
            }
        }
        false
    }

    fn note(&mut self, wire: &[u8], outcome: FrameOutcome, detail: &'static str) {
        self.audit_notes.push(ClientAuditNote {
            frame_digest: client_note_digest(wire, outcome),
            outcome,
            detail,
        });
    }
}
