//! The server state machine.
//!
//! A server advertises itself with signed hellos, then pushes every
//! arriving packet through a fixed pipeline, stopping at the first failure:
//!
//! 1. open the outer envelope with the server private key,
//! 2. look the claimed serial up in the ledger (absent or blocked → deny),
//! 3. decrypt the inner layer under the claimed serial's derived key,
//! 4. verify the signature against the ledger-registered public key,
//! 5. reject nonce tokens already seen (replay),
//! 6. act on the message type: access requests are granted, data from
//!    granted devices is accepted, anything else is denied.
//!
//! Every outcome — grant or deny — appends an audit event and a
//! transaction-record block to the ledger, so the chain is a complete
//! processing history.
//!
//! Denies at stages 1–2 are silent: no trusted key exists to encrypt a
//! response to, so the server only audits. From stage 3 on, the claimant is
//! registered and a DENY packet is sent to its registered key.

use std::collections::{HashMap, HashSet};

use rand::{CryptoRng, RngCore};

use crate::crypto::{one_way_hash, DeviceIdentity, Digest, PublicKey};
use crate::error::{Error, Result};
use crate::ledger::{DeviceStatus, Ledger};
use crate::packet::{
    create_hello, create_packet, decrypt_inner, open_packet, verify_packet_signature,
    InnerMessage, MessageType, NONCE_TOKEN_LEN,
};

/// Outcome of processing one packet.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Granted,
    Denied,
}

/// Which pipeline stage a denied packet died at.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DenyReason {
    NotRegistered,
    Blocked,
    BadSignature,
    BadInner,
    BadOuter,
    Replay,
    BadType,
}

impl std::fmt::Display for DenyReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            DenyReason::NotRegistered => "not-registered",
            DenyReason::Blocked => "blocked",
            DenyReason::BadSignature => "bad-signature",
            DenyReason::BadInner => "bad-inner",
            DenyReason::BadOuter => "bad-outer",
            DenyReason::Replay => "replay",
            DenyReason::BadType => "bad-type",
        })
    }
}

/// One line of the server's processing history.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct AuditEvent {
    pub timestamp: u64,
    /// The serial the packet claimed; empty when the envelope never opened.
    pub sender_serial_id: String,
    pub verdict: Verdict,
    /// Set iff the verdict is denied.
    pub reason: Option<DenyReason>,
    pub tx_digest: Digest,
}

/// Digest binding a processed frame to its verdict: the one-way hash of the
/// frame bytes followed by one verdict byte (0x01 granted, 0x00 denied).
/// Anyone holding a captured frame and the audit verdict can recompute it.
pub fn transaction_digest(frame: &[u8], verdict: Verdict) -> Digest {
    let mut data = Vec::with_capacity(frame.len() + 1);
    data.extend_from_slice(frame);
    data.push(match verdict {
        Verdict::Granted => 0x01,
        Verdict::Denied => 0x00,
    });
    one_way_hash(&data)
}

/// Tunables for one server instance.
#[derive(Debug, Clone)]
pub struct ServerConfig {
    /// Seconds a nonce token stays in the replay filter.
    pub replay_horizon_secs: u64,
}

impl Default for ServerConfig {
    fn default() -> Self {
        ServerConfig {
            replay_horizon_secs: 300,
        }
    }
}

/// The server: identity, trust root, session and replay state, audit log.
#[derive(Debug)]
pub struct ServerState {
    identity: DeviceIdentity,
    ledger: Ledger,
    granted_sessions: HashSet<Digest>,
    seen_nonces: HashMap<[u8; NONCE_TOKEN_LEN], u64>,
    audit_log: Vec<AuditEvent>,
    config: ServerConfig,
}

impl ServerState {
    /// Builds a server over a verified ledger. A chain that fails
    /// verification is refused outright.
    pub fn new(identity: DeviceIdentity, ledger: Ledger, config: ServerConfig) -> Result<Self> {
        let report = ledger.verify_chain();
        if !report.valid {
            return Err(Error::ChainIntegrity {
                first_bad_index: report.first_bad_index.unwrap_or(0),
            });
        }
        Ok(ServerState {
            identity,
            ledger,
            granted_sessions: HashSet::new(),
            seen_nonces: HashMap::new(),
            audit_log: Vec::new(),
            config,
        })
    }

    pub fn identity(&self) -> &DeviceIdentity {
        &self.identity
    }

    pub fn ledger(&self) -> &Ledger {
        &self.ledger
    }

    pub fn audit_log(&self) -> &[AuditEvent] {
        &self.audit_log
    }

    pub fn is_granted(&self, serial_id: &str) -> bool {
        self.granted_sessions
            .contains(&one_way_hash(serial_id.as_bytes()))
    }

    /// Registers (or re-registers) a device; operator-side administration.
    pub fn register(
        &mut self,
        serial_id: &str,
        public_key: &[u8],
        status: DeviceStatus,
        now: u64,
    ) -> Result<()> {
        self.ledger.register_device(serial_id, public_key, status, now)
    }

    /// Blocks a registered device and drops any granted session it holds.
    /// Idempotent on status: blocking a blocked device leaves it blocked.
    pub fn revoke(&mut self, serial_id: &str, now: u64) -> Result<()> {
        let entry = self
            .ledger
            .lookup(serial_id)
            .ok_or_else(|| Error::NotFound(format!("serial {serial_id} not registered")))?;
        let key = entry
            .public_key()
            .expect("lookup only returns identity entries")
            .to_vec();
        self.ledger
            .register_device(serial_id, &key, DeviceStatus::Blocked, now)?;
        self.granted_sessions
            .remove(&one_way_hash(serial_id.as_bytes()));
        Ok(())
    }

    /// Handshake point 1 of 3: the signed, unencrypted advertisement.
    /// Hellos are idempotent; replaying one is harmless by design.
    pub fn make_hello<R: RngCore + CryptoRng>(&self, rng: &mut R) -> Result<Vec<u8>> {
        let msg = InnerMessage::new(
            rng,
            MessageType::ServerHello,
            self.identity.serial_id(),
            Vec::new(),
        )?;
        create_hello(rng, &msg, self.identity.private_key())
    }

    /// Runs one packet through the pipeline. Returns response bytes when a
    /// GRANT/DENY could be addressed to a registered key, `None` otherwise.
    pub fn handle_packet<R: RngCore + CryptoRng>(
        &mut self,
        rng: &mut R,
        wire: &[u8],
        now: u64,
    ) -> Option<Vec<u8>> {
        self.prune_nonces(now);

        // Stage 1: outer envelope.
        let sealed = match open_packet(wire, self.identity.private_key()) {
            Ok(sealed) => sealed,
            Err(_) => {
                self.audit(wire, now, String::new(), Verdict::Denied, Some(DenyReason::BadOuter));
                return None;
            }
        };
        let claimed = sealed.sender_serial_id.clone();

        // Stage 2: ledger gate. Unknown or blocked claimants get no reply;
        // there is no trusted key to answer to.
        let registered_key = match self.ledger.lookup(&claimed) {
            None => {
                self.audit(wire, now, claimed, Verdict::Denied, Some(DenyReason::NotRegistered));
                return None;
            }
            Some(entry) => {
                if entry.status() != Some(DeviceStatus::Allowed) {
                    self.audit(wire, now, claimed, Verdict::Denied, Some(DenyReason::Blocked));
                    return None;
                }
                match PublicKey::decode(entry.public_key().expect("identity entry")) {
                    Ok(key) => key,
                    Err(_) => {
                        self.audit(wire, now, claimed, Verdict::Denied, Some(DenyReason::NotRegistered));
                        return None;
                    }
                }
            }
        };

        // Stage 3: inner layer under the claimed serial's key.
        let inner = match decrypt_inner(&sealed, &claimed) {
            Ok(inner) => inner,
            Err(_) => {
                return self.deny_with_response(rng, wire, now, claimed, &registered_key, DenyReason::BadInner);
            }
        };

        // Stage 4: signature against the ledger-registered key.
        if !verify_packet_signature(&sealed, &inner, &registered_key) {
            return self.deny_with_response(rng, wire, now, claimed, &registered_key, DenyReason::BadSignature);
        }

        // Stage 5: replay filter.
        if self.seen_nonces.contains_key(&inner.nonce_token) {
            return self.deny_with_response(rng, wire, now, claimed, &registered_key, DenyReason::Replay);
        }
        self.seen_nonces.insert(inner.nonce_token, now);

        // Stage 6: message type.
        match inner.msg_type {
            MessageType::AccessRequest => {
                self.granted_sessions.insert(one_way_hash(claimed.as_bytes()));
                self.audit(wire, now, claimed.clone(), Verdict::Granted, None);
                self.respond(rng, MessageType::AccessGrant, &registered_key)
            }
            MessageType::Data if self.is_granted(&claimed) => {
                // Accepted data is consumed silently; the audit trail and
                // the transaction record are the acknowledgement.
                self.audit(wire, now, claimed, Verdict::Granted, None);
                None
            }
            _ => self.deny_with_response(rng, wire, now, claimed, &registered_key, DenyReason::BadType),
        }
    }

    /// Audit log rendered as line-delimited JSON records.
    pub fn export_audit(&self) -> String {
        let mut out = String::new();
        for event in &self.audit_log {
            out.push_str(&serde_json::to_string(event).expect("audit event serializes"));
            out.push('\n');
        }
        out
    }

    fn prune_nonces(&mut self, now: u64) {
        let horizon = self.config.replay_horizon_secs;
        self.seen_nonces
            .retain(|_, inserted| now.saturating_sub(*inserted) <= horizon);
    }

    fn audit(
        &mut self,
        wire: &[u8],
        now: u64,
        sender_serial_id: String,
        verdict: Verdict,
        reason: Option<DenyReason>,
    ) {
        debug_assert_eq!(reason.is_some(), verdict == Verdict::Denied);
        let tx_digest = transaction_digest(wire, verdict);
        self.audit_log.push(AuditEvent {
            timestamp: now,
            sender_serial_id,
            verdict,
            reason,
            tx_digest,
        });
        self.ledger.record_transaction(tx_digest, now);
    }

    fn deny_with_response<R: RngCore + CryptoRng>(
        &mut self,
        rng: &mut R,
        wire: &[u8],
        now: u64,
        claimed: String,
        registered_key: &PublicKey,
        reason: DenyReason,
    ) -> Option<Vec<u8>> {
        self.audit(wire, now, claimed, Verdict::Denied, Some(reason));
        self.respond(rng, MessageType::AccessDeny, registered_key)
    }

    fn respond<R: RngCore + CryptoRng>(
        &mut self,
        rng: &mut R,
        msg_type: MessageType,
        recipient: &PublicKey,
    ) -> Option<Vec<u8>> {
        let msg = InnerMessage::new(rng, msg_type, self.identity.serial_id(), Vec::new()).ok()?;
        create_packet(rng, &msg, self.identity.private_key(), recipient).ok()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{generate_keypair, sign, KeyPair, DEFAULT_KEY_BITS};
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::sync::LazyLock;

    static SERVER_PAIR: LazyLock<KeyPair> = LazyLock::new(|| {
        generate_keypair(&mut ChaCha20Rng::seed_from_u64(0x100), DEFAULT_KEY_BITS).unwrap()
    });
    static CLIENT_PAIR: LazyLock<KeyPair> = LazyLock::new(|| {
        generate_keypair(&mut ChaCha20Rng::seed_from_u64(0x101), DEFAULT_KEY_BITS).unwrap()
    });
    static OTHER_PAIR: LazyLock<KeyPair> = LazyLock::new(|| {
        generate_keypair(&mut ChaCha20Rng::seed_from_u64(0x102), DEFAULT_KEY_BITS).unwrap()
    });

    const CLIENT_SERIAL: &str = "fg-client01";

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(77)
    }

    fn server_with_client(status: DeviceStatus) -> ServerState {
        let identity = DeviceIdentity::new("fg-server", SERVER_PAIR.clone()).unwrap();
        let mut ledger = Ledger::genesis();
        ledger
            .register_device(CLIENT_SERIAL, &CLIENT_PAIR.public.encode(), status, 0)
            .unwrap();
        ServerState::new(identity, ledger, ServerConfig::default()).unwrap()
    }

    fn request(r: &mut ChaCha20Rng) -> Vec<u8> {
        let msg = InnerMessage::new(r, MessageType::AccessRequest, CLIENT_SERIAL, Vec::new()).unwrap();
        create_packet(r, &msg, &CLIENT_PAIR.private, &SERVER_PAIR.public).unwrap()
    }

    fn opened_response(server: &ServerState, wire: &[u8]) -> MessageType {
        let sealed = open_packet(wire, &CLIENT_PAIR.private).unwrap();
        let inner = decrypt_inner(&sealed, "fg-server").unwrap();
        assert!(verify_packet_signature(&sealed, &inner, server.identity().public_key()));
        inner.msg_type
    }

    #[test]
    fn refuses_invalid_ledger() {
        let identity = DeviceIdentity::new("fg-server", SERVER_PAIR.clone()).unwrap();
        let mut ledger = Ledger::genesis();
        ledger.record_transaction(one_way_hash(b"x"), 1);
        let mut broken = ledger.clone();
        broken_blocks(&mut broken);
        assert!(matches!(
            ServerState::new(identity, broken, ServerConfig::default()),
            Err(Error::ChainIntegrity { .. })
        ));
    }

    fn broken_blocks(ledger: &mut Ledger) {
        // Mutate via serialization: flip one byte inside a block body.
        let mut bytes = ledger.to_bytes().unwrap();
        let n = bytes.len();
        bytes[n - 40] ^= 0xFF;
        if let Ok(l) = Ledger::from_bytes_unverified(&bytes) {
            *ledger = l;
        }
    }

    #[test]
    fn honest_request_is_granted() {
        let mut r = rng();
        let mut server = server_with_client(DeviceStatus::Allowed);
        let wire = request(&mut r);
        let resp = server.handle_packet(&mut r, &wire, 10).expect("grant response");
        assert_eq!(opened_response(&server, &resp), MessageType::AccessGrant);
        assert!(server.is_granted(CLIENT_SERIAL));
        let event = server.audit_log().last().unwrap();
        assert_eq!(event.verdict, Verdict::Granted);
        assert_eq!(event.reason, None);
    }

    #[test]
    fn unregistered_serial_is_silent() {
        let mut r = rng();
        let identity = DeviceIdentity::new("fg-server", SERVER_PAIR.clone()).unwrap();
        let mut server =
            ServerState::new(identity, Ledger::genesis(), ServerConfig::default()).unwrap();
        let wire = request(&mut r);
        assert!(server.handle_packet(&mut r, &wire, 10).is_none());
        let event = server.audit_log().last().unwrap();
        assert_eq!(event.reason, Some(DenyReason::NotRegistered));
        assert_eq!(event.sender_serial_id, CLIENT_SERIAL);
    }

    #[test]
    fn blocked_serial_is_silent() {
        let mut r = rng();
        let mut server = server_with_client(DeviceStatus::Blocked);
        let wire = request(&mut r);
        assert!(server.handle_packet(&mut r, &wire, 10).is_none());
        assert_eq!(
            server.audit_log().last().unwrap().reason,
            Some(DenyReason::Blocked)
        );
    }

    #[test]
    fn replayed_packet_denied_second_time() {
        let mut r = rng();
        let mut server = server_with_client(DeviceStatus::Allowed);
        let wire = request(&mut r);

        let first = server.handle_packet(&mut r, &wire, 10).unwrap();
        assert_eq!(opened_response(&server, &first), MessageType::AccessGrant);

        let second = server.handle_packet(&mut r, &wire, 11).unwrap();
        assert_eq!(opened_response(&server, &second), MessageType::AccessDeny);
        assert_eq!(
            server.audit_log().last().unwrap().reason,
            Some(DenyReason::Replay)
        );
    }

    #[test]
    fn replay_filter_forgets_past_horizon() {
        let mut r = rng();
        let mut server = server_with_client(DeviceStatus::Allowed);
        let wire = request(&mut r);
        server.handle_packet(&mut r, &wire, 10);
        // Far beyond the horizon the token is pruned; the packet is aged
        // out of the filter and the gate falls through to the type stage.
        let resp = server.handle_packet(&mut r, &wire, 10 + 301).unwrap();
        assert_eq!(opened_response(&server, &resp), MessageType::AccessGrant);
    }

    #[test]
    fn wrong_signing_key_denied_as_bad_signature() {
        let mut r = rng();
        let mut server = server_with_client(DeviceStatus::Allowed);
        let msg =
            InnerMessage::new(&mut r, MessageType::AccessRequest, CLIENT_SERIAL, Vec::new()).unwrap();
        // Adversary knows the serial (public) but signs with its own key.
        let wire = create_packet(&mut r, &msg, &OTHER_PAIR.private, &SERVER_PAIR.public).unwrap();
        let resp = server.handle_packet(&mut r, &wire, 10).unwrap();
        assert_eq!(opened_response(&server, &resp), MessageType::AccessDeny);
        assert_eq!(
            server.audit_log().last().unwrap().reason,
            Some(DenyReason::BadSignature)
        );
        assert!(!server.is_granted(CLIENT_SERIAL));
    }

    #[test]
    fn data_before_grant_is_bad_type() {
        let mut r = rng();
        let mut server = server_with_client(DeviceStatus::Allowed);
        let msg = InnerMessage::new(&mut r, MessageType::Data, CLIENT_SERIAL, b"d".to_vec()).unwrap();
        let wire = create_packet(&mut r, &msg, &CLIENT_PAIR.private, &SERVER_PAIR.public).unwrap();
        let resp = server.handle_packet(&mut r, &wire, 10).unwrap();
        assert_eq!(opened_response(&server, &resp), MessageType::AccessDeny);
        assert_eq!(
            server.audit_log().last().unwrap().reason,
            Some(DenyReason::BadType)
        );
    }

    #[test]
    fn data_after_grant_is_accepted() {
        let mut r = rng();
        let mut server = server_with_client(DeviceStatus::Allowed);
        server.handle_packet(&mut r, &request(&mut r), 10);

        let msg = InnerMessage::new(&mut r, MessageType::Data, CLIENT_SERIAL, b"d".to_vec()).unwrap();
        let wire = create_packet(&mut r, &msg, &CLIENT_PAIR.private, &SERVER_PAIR.public).unwrap();
        assert!(server.handle_packet(&mut r, &wire, 11).is_none());
        let event = server.audit_log().last().unwrap();
        assert_eq!(event.verdict, Verdict::Granted);
        assert_eq!(event.reason, None);
    }

    #[test]
    fn revoke_blocks_future_requests() {
        let mut r = rng();
        let mut server = server_with_client(DeviceStatus::Allowed);
        server.handle_packet(&mut r, &request(&mut r), 10);
        assert!(server.is_granted(CLIENT_SERIAL));

        server.revoke(CLIENT_SERIAL, 11).unwrap();
        assert!(!server.is_granted(CLIENT_SERIAL));

        assert!(server.handle_packet(&mut r, &request(&mut r), 12).is_none());
        assert_eq!(
            server.audit_log().last().unwrap().reason,
            Some(DenyReason::Blocked)
        );
    }

    #[test]
    fn revoke_unknown_serial_is_not_found() {
        let mut server = server_with_client(DeviceStatus::Allowed);
        assert!(matches!(
            server.revoke("fg-nobody", 10),
            Err(Error::NotFound(_))
        ));
    }

    #[test]
    fn revoke_is_idempotent_on_status() {
        let mut server = server_with_client(DeviceStatus::Allowed);
        server.revoke(CLIENT_SERIAL, 10).unwrap();
        server.revoke(CLIENT_SERIAL, 11).unwrap();
        assert_eq!(
            server.ledger().lookup(CLIENT_SERIAL).unwrap().status(),
            Some(DeviceStatus::Blocked)
        );
    }

    #[test]
    fn garbage_frames_audit_bad_outer() {
        let mut r = rng();
        let mut server = server_with_client(DeviceStatus::Allowed);
        assert!(server.handle_packet(&mut r, b"\x01junk", 10).is_none());
        assert!(server.handle_packet(&mut r, &[], 10).is_none());
        for event in server.audit_log() {
            assert_eq!(event.reason, Some(DenyReason::BadOuter));
            assert_eq!(event.sender_serial_id, "");
        }
    }

    #[test]
    fn unregistered_and_tampered_denies_as_not_registered() {
        // Ledger precedes signature: an unknown claimant with a garbage
        // signature still audits as not-registered.
        let mut r = rng();
        let identity = DeviceIdentity::new("fg-server", SERVER_PAIR.clone()).unwrap();
        let mut server =
            ServerState::new(identity, Ledger::genesis(), ServerConfig::default()).unwrap();
        let msg =
            InnerMessage::new(&mut r, MessageType::AccessRequest, "fg-ghost", Vec::new()).unwrap();
        let wire = create_packet(&mut r, &msg, &OTHER_PAIR.private, &SERVER_PAIR.public).unwrap();
        assert!(server.handle_packet(&mut r, &wire, 10).is_none());
        assert_eq!(
            server.audit_log().last().unwrap().reason,
            Some(DenyReason::NotRegistered)
        );
    }

    #[test]
    fn audit_and_chain_grow_in_lockstep() {
        let mut r = rng();
        let mut server = server_with_client(DeviceStatus::Allowed);
        let chain_before = server.ledger().len();

        server.handle_packet(&mut r, &request(&mut r), 10);
        server.handle_packet(&mut r, b"garbage", 11);
        let msg = InnerMessage::new(&mut r, MessageType::Data, CLIENT_SERIAL, b"x".to_vec()).unwrap();
        let wire = create_packet(&mut r, &msg, &CLIENT_PAIR.private, &SERVER_PAIR.public).unwrap();
        server.handle_packet(&mut r, &wire, 12);

        assert_eq!(server.audit_log().len(), 3);
        assert_eq!(server.ledger().len(), chain_before + 3);
        assert!(server.ledger().verify_chain().valid);
    }

    #[test]
    fn handle_packet_never_touches_identity_entries() {
        let mut r = rng();
        let mut server = server_with_client(DeviceStatus::Allowed);
        let status_before = server.ledger().lookup(CLIENT_SERIAL).unwrap().clone();
        server.handle_packet(&mut r, &request(&mut r), 10);
        server.handle_packet(&mut r, b"junk", 11);
        assert_eq!(server.ledger().lookup(CLIENT_SERIAL).unwrap(), &status_before);
    }

    #[test]
    fn tx_digest_recomputes_from_frame_and_verdict() {
        let mut r = rng();
        let mut server = server_with_client(DeviceStatus::Allowed);
        let wire = request(&mut r);
        server.handle_packet(&mut r, &wire, 10);
        let event = server.audit_log().last().unwrap();
        assert_eq!(event.tx_digest, transaction_digest(&wire, Verdict::Granted));
    }

    #[test]
    fn hello_is_verifiable_and_replay_tolerant() {
        let mut r = rng();
        let server = server_with_client(DeviceStatus::Allowed);
        let hello = server.make_hello(&mut r).unwrap();

        let (inner, sig) = crate::packet::open_hello(&hello).unwrap();
        assert_eq!(inner.msg_type, MessageType::ServerHello);
        assert!(crate::packet::verify_hello(&inner, &sig, &SERVER_PAIR.public));

        // Tampered signature rejected.
        let mut bad = hello.clone();
        let last = bad.len() - 1;
        bad[last] ^= 0x01;
        let (inner2, sig2) = crate::packet::open_hello(&bad).unwrap();
        assert!(!crate::packet::verify_hello(&inner2, &sig2, &SERVER_PAIR.public));

        // A replayed hello still verifies: advertisements are idempotent.
        let (inner3, sig3) = crate::packet::open_hello(&hello).unwrap();
        assert!(crate::packet::verify_hello(&inner3, &sig3, &SERVER_PAIR.public));
    }

    #[test]
    fn forged_hello_signature_rejected() {
        let mut r = rng();
        let msg =
            InnerMessage::new(&mut r, MessageType::ServerHello, "fg-server", Vec::new()).unwrap();
        let forged = create_hello(&mut r, &msg, &OTHER_PAIR.private).unwrap();
        let (inner, sig) = crate::packet::open_hello(&forged).unwrap();
        assert!(!crate::packet::verify_hello(&inner, &sig, &SERVER_PAIR.public));
        let _ = sign(&OTHER_PAIR.private, &one_way_hash(b"unused"));
    }
}
