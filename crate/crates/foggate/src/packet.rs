//! The three-layer packet codec.
//!
//! A packet protects one [`InnerMessage`] with three nested mechanisms:
//!
//! 1. **Inner layer** — the message is encrypted under the symmetric key
//!    derived from the sender's hashed serial ID.
//! 2. **Signature** — the sender signs the one-way hash of the inner
//!    plaintext with its private key (hash-then-sign).
//! 3. **Outer envelope** — serial ID, signature, and inner ciphertext are
//!    hybrid-encrypted to the recipient's public key.
//!
//! The sender serial travels twice on purpose: in the envelope plaintext so
//! the recipient can look up the registered key before touching the inner
//! layer, and inside the inner message so the two claims can be bound by an
//! equality check after decryption.
//!
//! Wire layout (big-endian, bit-exact):
//!
//! ```text
//! packet:   [version:1][wrapped_key_len:2][wrapped_key][env_nonce:12][env_ct_len:4][env_ct]
//! envelope: [serial_len:2][serial][sig_len:2][sig][inner_nonce:12][inner_ct_len:4][inner_ct]
//! inner:    [msg_type:1][serial_len:2][serial][nonce_token:16][payload_len:4][payload]
//! hello:    [0xff][body_len:2][body = inner encoding][sig_len:2][sig]
//! ```
//!
//! Hellos are the one unencrypted frame: server advertisements are signed
//! but readable by anyone, because clients are pre-provisioned with the
//! server public key and verify the signature rather than decrypt.

use rand::{CryptoRng, RngCore};

use crate::crypto::{
    self, derive_inner_key, one_way_hash, sign, verify, PrivateKey, PublicKey, Signature,
    NONCE_LEN,
};
use crate::error::{Error, Result};
use crate::wire::{put_bytes16, put_bytes32, Reader};

/// Version byte opening every encrypted packet.
pub const WIRE_VERSION: u8 = 0x01;
/// Version byte of the unencrypted hello variant.
pub const HELLO_VERSION: u8 = 0xFF;
/// Length of the anti-replay token carried by every inner message.
pub const NONCE_TOKEN_LEN: usize = 16;

/// What a message asks for or answers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MessageType {
    AccessRequest,
    AccessGrant,
    AccessDeny,
    ServerHello,
    Data,
}

impl MessageType {
    pub fn as_byte(self) -> u8 {
        match self {
            MessageType::AccessRequest => 0x01,
            MessageType::AccessGrant => 0x02,
            MessageType::AccessDeny => 0x03,
            MessageType::ServerHello => 0x04,
            MessageType::Data => 0x05,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0x01 => Ok(MessageType::AccessRequest),
            0x02 => Ok(MessageType::AccessGrant),
            0x03 => Ok(MessageType::AccessDeny),
            0x04 => Ok(MessageType::ServerHello),
            0x05 => Ok(MessageType::Data),
            _ => Err(Error::Parse("unknown message type")),
        }
    }
}

/// The plaintext all three layers protect.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InnerMessage {
    pub msg_type: MessageType,
    pub sender_serial_id: String,
    /// Random token the server deduplicates to reject replays.
    pub nonce_token: [u8; NONCE_TOKEN_LEN],
    pub payload: Vec<u8>,
}

impl InnerMessage {
    /// Builds a message with a fresh random nonce token.
    pub fn new<R: RngCore + CryptoRng>(
        rng: &mut R,
        msg_type: MessageType,
        sender_serial_id: impl Into<String>,
        payload: Vec<u8>,
    ) -> Result<Self> {
        let sender_serial_id = sender_serial_id.into();
        if sender_serial_id.is_empty() {
            return Err(Error::InvalidIdentity("empty sender serial ID".into()));
        }
        let mut nonce_token = [0u8; NONCE_TOKEN_LEN];
        rng.fill_bytes(&mut nonce_token);
        Ok(InnerMessage {
            msg_type,
            sender_serial_id,
            nonce_token,
            payload,
        })
    }

    /// Canonical encoding: deterministic, strict, injective.
    pub fn encode(&self) -> Result<Vec<u8>> {
        if self.sender_serial_id.is_empty() {
            return Err(Error::InvalidIdentity("empty sender serial ID".into()));
        }
        let mut buf = Vec::with_capacity(23 + self.sender_serial_id.len() + self.payload.len());
        buf.push(self.msg_type.as_byte());
        put_bytes16(&mut buf, self.sender_serial_id.as_bytes())?;
        buf.extend_from_slice(&self.nonce_token);
        put_bytes32(&mut buf, &self.payload)?;
        Ok(buf)
    }

    pub fn decode(data: &[u8]) -> Result<Self> {
        let mut r = Reader::new(data);
        let msg_type = MessageType::from_byte(r.u8("message type")?)?;
        let serial = r.bytes16("sender serial")?;
        let sender_serial_id = std::str::from_utf8(serial)
            .map_err(|_| Error::Parse("serial not UTF-8"))?
            .to_string();
        if sender_serial_id.is_empty() {
            return Err(Error::Parse("empty serial"));
        }
        let nonce_token: [u8; NONCE_TOKEN_LEN] = r.array("nonce token")?;
        let payload = r.bytes32("payload")?.to_vec();
        r.expect_end("trailing bytes after inner message")?;
        Ok(InnerMessage {
            msg_type,
            sender_serial_id,
            nonce_token,
            payload,
        })
    }
}

/// An opened outer envelope: parsed fields, nothing verified yet. The
/// signature and inner-layer checks need the ledger, so they come later.
#[derive(Debug, Clone)]
pub struct SealedPacket {
    pub sender_serial_id: String,
    pub signature: Signature,
    pub inner_nonce: [u8; NONCE_LEN],
    pub inner_ciphertext: Vec<u8>,
}

/// Builds the full three-layer wire bytes for one message.
pub fn create_packet<R: RngCore + CryptoRng>(
    rng: &mut R,
    msg: &InnerMessage,
    sender_private: &PrivateKey,
    recipient_public: &PublicKey,
) -> Result<Vec<u8>> {
    let inner_plain = msg.encode()?;

    // Layer 1: inner symmetric encryption under the hashed serial ID.
    let inner_key = derive_inner_key(&msg.sender_serial_id)?;
    let (inner_nonce, inner_ciphertext) = crypto::symmetric_encrypt(rng, &inner_key, &inner_plain);

    // Layer 2: hash-then-sign over the inner plaintext.
    let signature = sign(sender_private, &one_way_hash(&inner_plain));

    // Layer 3: envelope plaintext, hybrid-wrapped to the recipient.
    let mut envelope_plain = Vec::new();
    put_bytes16(&mut envelope_plain, msg.sender_serial_id.as_bytes())?;
    put_bytes16(&mut envelope_plain, signature.as_bytes())?;
    envelope_plain.extend_from_slice(&inner_nonce);
    put_bytes32(&mut envelope_plain, &inner_ciphertext)?;

    let envelope = crypto::hybrid_wrap(rng, recipient_public, &envelope_plain)?;

    let mut wire = Vec::with_capacity(envelope.wrapped_key.len() + envelope.ciphertext.len() + 32);
    wire.push(WIRE_VERSION);
    put_bytes16(&mut wire, &envelope.wrapped_key)?;
    wire.extend_from_slice(&envelope.nonce);
    put_bytes32(&mut wire, &envelope.ciphertext)?;
    Ok(wire)
}

/// Removes the outer layer with the recipient private key and parses the
/// envelope fields. No signature or inner checks happen here.
pub fn open_packet(wire: &[u8], recipient_private: &PrivateKey) -> Result<SealedPacket> {
    let mut r = Reader::new(wire);
    let version = r.u8("version byte")?;
    if version != WIRE_VERSION {
        return Err(Error::UnknownVersion(version));
    }
    let wrapped_key = r.bytes16("wrapped key")?.to_vec();
    let nonce: [u8; NONCE_LEN] = r.array("envelope nonce")?;
    let ciphertext = r.bytes32("envelope ciphertext")?.to_vec();
    r.expect_end("trailing bytes after envelope")?;

    let envelope = crypto::WrappedEnvelope {
        wrapped_key,
        nonce,
        ciphertext,
    };
    let envelope_plain = crypto::hybrid_unwrap(recipient_private, &envelope)
        .map_err(|_| Error::OuterDecryption)?;

    let mut r = Reader::new(&envelope_plain);
    let serial = r.bytes16("envelope serial")?;
    let sender_serial_id = std::str::from_utf8(serial)
        .map_err(|_| Error::Parse("envelope serial not UTF-8"))?
        .to_string();
    if sender_serial_id.is_empty() {
        return Err(Error::Parse("empty envelope serial"));
    }
    let signature = Signature::from_bytes(r.bytes16("signature")?.to_vec());
    let inner_nonce: [u8; NONCE_LEN] = r.array("inner nonce")?;
    let inner_ciphertext = r.bytes32("inner ciphertext")?.to_vec();
    r.expect_end("trailing bytes in envelope")?;

    Ok(SealedPacket {
        sender_serial_id,
        signature,
        inner_nonce,
        inner_ciphertext,
    })
}

/// Decrypts the inner layer under the key derived from the claimed serial
/// and binds the inner identity claim to the envelope claim.
pub fn decrypt_inner(sealed: &SealedPacket, claimed_serial_id: &str) -> Result<InnerMessage> {
    let key = derive_inner_key(claimed_serial_id)?;
    let plain = crypto::symmetric_decrypt(&key, &sealed.inner_nonce, &sealed.inner_ciphertext)
        .map_err(|_| Error::InnerDecryption)?;
    let inner = InnerMessage::decode(&plain).map_err(|_| Error::InnerDecryption)?;
    if inner.sender_serial_id != claimed_serial_id {
        return Err(Error::IdentityMismatch);
    }
    Ok(inner)
}

/// True iff the sealed signature verifies under `sender_public` over the
/// hash of the decrypted inner message. Never errors: any failure is false.
pub fn verify_packet_signature(
    sealed: &SealedPacket,
    inner: &InnerMessage,
    sender_public: &PublicKey,
) -> bool {
    match inner.encode() {
        Ok(plain) => verify(sender_public, &one_way_hash(&plain), &sealed.signature),
        Err(_) => false,
    }
}

/// Builds the unencrypted, signed hello frame (version `0xFF`).
pub fn create_hello<R: RngCore + CryptoRng>(
    rng: &mut R,
    msg: &InnerMessage,
    sender_private: &PrivateKey,
) -> Result<Vec<u8>> {
    let _ = rng; // hello needs no fresh randomness beyond the message's own token
    let body = msg.encode()?;
    let signature = sign(sender_private, &one_way_hash(&body));
    let mut wire = Vec::with_capacity(body.len() + signature.as_bytes().len() + 5);
    wire.push(HELLO_VERSION);
    put_bytes16(&mut wire, &body)?;
    put_bytes16(&mut wire, signature.as_bytes())?;
    Ok(wire)
}

/// Parses a hello frame. Signature verification is the caller's job,
/// against whatever server key it was provisioned with.
pub fn open_hello(wire: &[u8]) -> Result<(InnerMessage, Signature)> {
    let mut r = Reader::new(wire);
    let version = r.u8("hello version")?;
    if version != HELLO_VERSION {
        return Err(Error::UnknownVersion(version));
    }
    let body = r.bytes16("hello body")?;
    let signature = Signature::from_bytes(r.bytes16("hello signature")?.to_vec());
    r.expect_end("trailing bytes after hello")?;
    let inner = InnerMessage::decode(body)?;
    Ok((inner, signature))
}

/// True iff the hello body was signed by the private counterpart of `public`.
pub fn verify_hello(inner: &InnerMessage, signature: &Signature, public: &PublicKey) -> bool {
    match inner.encode() {
        Ok(body) => verify(public, &one_way_hash(&body), signature),
        Err(_) => false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crypto::{generate_keypair, KeyPair, DEFAULT_KEY_BITS};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;
    use std::sync::LazyLock;

    static SENDER: LazyLock<KeyPair> = LazyLock::new(|| {
        generate_keypair(&mut ChaCha20Rng::seed_from_u64(0x51), DEFAULT_KEY_BITS).unwrap()
    });
    static RECIPIENT: LazyLock<KeyPair> = LazyLock::new(|| {
        generate_keypair(&mut ChaCha20Rng::seed_from_u64(0x52), DEFAULT_KEY_BITS).unwrap()
    });

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(5)
    }

    fn sample_msg(r: &mut ChaCha20Rng) -> InnerMessage {
        InnerMessage::new(r, MessageType::AccessRequest, "fg-sender", b"hi".to_vec()).unwrap()
    }

    #[test]
    fn full_roundtrip() {
        let mut r = rng();
        let msg = sample_msg(&mut r);
        let wire = create_packet(&mut r, &msg, &SENDER.private, &RECIPIENT.public).unwrap();

        let sealed = open_packet(&wire, &RECIPIENT.private).unwrap();
        assert_eq!(sealed.sender_serial_id, "fg-sender");
        let inner = decrypt_inner(&sealed, &sealed.sender_serial_id.clone()).unwrap();
        assert_eq!(inner, msg);
        assert!(verify_packet_signature(&sealed, &inner, &SENDER.public));
    }

    #[test]
    fn same_message_twice_differs_on_the_wire() {
        let mut r = rng();
        let msg = sample_msg(&mut r);
        let w1 = create_packet(&mut r, &msg, &SENDER.private, &RECIPIENT.public).unwrap();
        let w2 = create_packet(&mut r, &msg, &SENDER.private, &RECIPIENT.public).unwrap();
        assert_ne!(w1, w2);
    }

    #[test]
    fn empty_serial_is_a_construction_error() {
        let mut r = rng();
        let msg = InnerMessage {
            msg_type: MessageType::AccessRequest,
            sender_serial_id: String::new(),
            nonce_token: [0; NONCE_TOKEN_LEN],
            payload: Vec::new(),
        };
        assert!(create_packet(&mut r, &msg, &SENDER.private, &RECIPIENT.public).is_err());
    }

    #[test]
    fn wrong_private_key_fails_outer() {
        let mut r = rng();
        let msg = sample_msg(&mut r);
        let wire = create_packet(&mut r, &msg, &SENDER.private, &RECIPIENT.public).unwrap();
        assert!(matches!(
            open_packet(&wire, &SENDER.private),
            Err(Error::OuterDecryption)
        ));
    }

    #[test]
    fn unknown_version_rejected() {
        let mut r = rng();
        let msg = sample_msg(&mut r);
        let mut wire = create_packet(&mut r, &msg, &SENDER.private, &RECIPIENT.public).unwrap();
        wire[0] = 0x7E;
        assert!(matches!(
            open_packet(&wire, &RECIPIENT.private),
            Err(Error::UnknownVersion(0x7E))
        ));
        assert!(matches!(
            open_packet(&[], &RECIPIENT.private),
            Err(Error::Parse(_))
        ));
    }

    #[test]
    fn every_wire_byte_flip_fails_loudly() {
        let mut r = rng();
        let msg = sample_msg(&mut r);
        let wire = create_packet(&mut r, &msg, &SENDER.private, &RECIPIENT.public).unwrap();
        for i in 0..wire.len() {
            let mut bad = wire.clone();
            bad[i] ^= 0x01;
            assert!(
                open_packet(&bad, &RECIPIENT.private).is_err(),
                "flip at wire byte {i}/{} opened silently",
                wire.len()
            );
        }
    }

    #[test]
    fn serial_splice_fails_inner_decrypt() {
        let mut r = rng();
        let msg = sample_msg(&mut r);
        let wire = create_packet(&mut r, &msg, &SENDER.private, &RECIPIENT.public).unwrap();
        let sealed = open_packet(&wire, &RECIPIENT.private).unwrap();
        // Claim a different registered identity: the derived key is wrong.
        assert!(matches!(
            decrypt_inner(&sealed, "fg-other"),
            Err(Error::InnerDecryption)
        ));
    }

    #[test]
    fn tampered_inner_ciphertext_fails() {
        let mut r = rng();
        let msg = sample_msg(&mut r);
        let wire = create_packet(&mut r, &msg, &SENDER.private, &RECIPIENT.public).unwrap();
        let mut sealed = open_packet(&wire, &RECIPIENT.private).unwrap();
        for i in 0..sealed.inner_ciphertext.len() {
            sealed.inner_ciphertext[i] ^= 0x01;
            assert!(decrypt_inner(&sealed, "fg-sender").is_err(), "flip {i} accepted");
            sealed.inner_ciphertext[i] ^= 0x01;
        }
    }

    #[test]
    fn signature_from_wrong_key_is_false() {
        let mut r = rng();
        let msg = sample_msg(&mut r);
        let wire = create_packet(&mut r, &msg, &SENDER.private, &RECIPIENT.public).unwrap();
        let mut sealed = open_packet(&wire, &RECIPIENT.private).unwrap();
        let inner = decrypt_inner(&sealed, "fg-sender").unwrap();

        // Replace the signature with one from a different key over the same digest.
        let other = &RECIPIENT.private;
        sealed.signature = sign(other, &one_way_hash(&inner.encode().unwrap()));
        assert!(!verify_packet_signature(&sealed, &inner, &SENDER.public));
    }

    #[test]
    fn hello_roundtrip_and_tamper() {
        let mut r = rng();
        let msg =
            InnerMessage::new(&mut r, MessageType::ServerHello, "fg-server", Vec::new()).unwrap();
        let wire = create_hello(&mut r, &msg, &SENDER.private).unwrap();
        let (inner, sig) = open_hello(&wire).unwrap();
        assert_eq!(inner, msg);
        assert!(verify_hello(&inner, &sig, &SENDER.public));
        assert!(!verify_hello(&inner, &sig, &RECIPIENT.public));

        // Flip one signature byte: parse still works, verification fails.
        let mut bad = wire.clone();
        let last = bad.len() - 1;
        bad[last] ^= 0x01;
        let (inner2, sig2) = open_hello(&bad).unwrap();
        assert!(!verify_hello(&inner2, &sig2, &SENDER.public));
    }

    #[test]
    fn inner_encoding_strictness() {
        let mut r = rng();
        let msg = sample_msg(&mut r);
        let mut enc = msg.encode().unwrap();
        assert_eq!(InnerMessage::decode(&enc).unwrap(), msg);
        enc.push(0x00);
        assert!(InnerMessage::decode(&enc).is_err(), "trailing byte accepted");
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(256))]

        // Canonical encoding is the identity under decode, for arbitrary
        // well-formed messages.
        #[test]
        fn inner_encode_decode_identity(
            type_byte in 1u8..=5,
            serial in "[a-z0-9-]{1,40}",
            token in proptest::array::uniform16(proptest::prelude::any::<u8>()),
            payload in proptest::collection::vec(proptest::prelude::any::<u8>(), 0..256),
        ) {
            let msg = InnerMessage {
                msg_type: MessageType::from_byte(type_byte).unwrap(),
                sender_serial_id: serial,
                nonce_token: token,
                payload,
            };
            let enc = msg.encode().unwrap();
            proptest::prop_assert_eq!(InnerMessage::decode(&enc).unwrap(), msg);
        }

        // Distinct messages encode to distinct digests (injectivity probe).
        #[test]
        fn distinct_messages_distinct_digests(
            serial_a in "[a-z]{1,8}",
            serial_b in "[a-z]{1,8}",
            pay_a in proptest::collection::vec(proptest::prelude::any::<u8>(), 0..32),
            pay_b in proptest::collection::vec(proptest::prelude::any::<u8>(), 0..32),
        ) {
            let mut r = ChaCha20Rng::seed_from_u64(11);
            let token: [u8; 16] = r.gen();
            let a = InnerMessage { msg_type: MessageType::Data, sender_serial_id: serial_a, nonce_token: token, payload: pay_a };
            let b = InnerMessage { msg_type: MessageType::Data, sender_serial_id: serial_b, nonce_token: token, payload: pay_b };
            if a != b {
                proptest::prop_assert_ne!(
                    one_way_hash(&a.encode().unwrap()),
                    one_way_hash(&b.encode().unwrap())
                );
            }
        }
    }
}
