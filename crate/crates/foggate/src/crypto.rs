//! Cryptographic primitives the access gate composes.
//!
//! Three tools, three jobs:
//!
//! * an asymmetric cipher with signatures (RSA) for the outer envelope and
//!   for binding senders to message contents,
//! * an authenticated symmetric cipher (AES-256-GCM) for the inner message
//!   layer and for the body of hybrid envelopes,
//! * a one-way hash (SHA-256) for inner-key derivation, signature digests,
//!   and ledger block linking.
//!
//! Every operation that consumes randomness takes the RNG as a parameter, so
//! simulations can run byte-for-byte reproducibly from a seed while live
//! nodes use OS entropy.
//!
//! ```
//! use foggate::crypto;
//! use rand_chacha::ChaCha20Rng;
//! use rand::SeedableRng;
//!
//! let mut rng = ChaCha20Rng::seed_from_u64(1);
//! let pair = crypto::generate_keypair(&mut rng, 2048).unwrap();
//!
//! let envelope = crypto::hybrid_wrap(&mut rng, &pair.public, b"sensor reading").unwrap();
//! let opened = crypto::hybrid_unwrap(&pair.private, &envelope).unwrap();
//! assert_eq!(opened, b"sensor reading");
//! ```

use aes_gcm::aead::Aead;
use aes_gcm::{Aes256Gcm, KeyInit, Nonce};
use rand::{CryptoRng, Rng, RngCore};
use rsa::pkcs8::{DecodePrivateKey, DecodePublicKey, EncodePrivateKey, EncodePublicKey};
use rsa::{Oaep, Pkcs1v15Sign, RsaPrivateKey, RsaPublicKey};
use sha2::{Digest as Sha2Digest, Sha256};
use std::fmt;

use crate::error::{Error, Result};

/// Width of the one-way hash output in bytes.
pub const DIGEST_LEN: usize = 32;
/// Symmetric key length (AES-256).
pub const SYMMETRIC_KEY_LEN: usize = 32;
/// AEAD nonce length (GCM standard).
pub const NONCE_LEN: usize = 12;
/// Default asymmetric key size in bits.
pub const DEFAULT_KEY_BITS: usize = 2048;
/// Asymmetric key sizes the suite accepts.
pub const SUPPORTED_KEY_BITS: &[usize] = &[2048, 3072];

/// Fixed-length one-way hash output.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Digest([u8; DIGEST_LEN]);

impl Digest {
    pub fn from_bytes(bytes: [u8; DIGEST_LEN]) -> Self {
        Digest(bytes)
    }

    /// The all-zero digest, used as the genesis block's back-link.
    pub fn zero() -> Self {
        Digest([0u8; DIGEST_LEN])
    }

    pub fn as_bytes(&self) -> &[u8; DIGEST_LEN] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        let raw = hex::decode(s).map_err(|_| Error::Parse("digest hex"))?;
        let arr: [u8; DIGEST_LEN] = raw.try_into().map_err(|_| Error::Parse("digest length"))?;
        Ok(Digest(arr))
    }
}

impl fmt::Debug for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Digest({})", &self.to_hex()[..12])
    }
}

impl fmt::Display for Digest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl serde::Serialize for Digest {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.to_hex())
    }
}

impl<'de> serde::Deserialize<'de> for Digest {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        Digest::from_hex(&s).map_err(serde::de::Error::custom)
    }
}

/// How a symmetric key came to exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KeyDerivation {
    /// Hash of a device serial ID; both ends can re-derive it.
    SerialIdHash,
    /// Fresh random key for one hybrid envelope.
    EphemeralRandom,
}

/// Fixed-length secret key for the authenticated symmetric cipher.
#[derive(Clone)]
pub struct SymmetricKey {
    bytes: [u8; SYMMETRIC_KEY_LEN],
    derivation: KeyDerivation,
}

impl SymmetricKey {
    pub fn as_bytes(&self) -> &[u8; SYMMETRIC_KEY_LEN] {
        &self.bytes
    }

    pub fn derivation(&self) -> KeyDerivation {
        self.derivation
    }
}

/// Serialized-form asymmetric public key (SPKI DER inside).
#[derive(Clone, PartialEq, Eq)]
pub struct PublicKey(RsaPublicKey);

impl PublicKey {
    /// Standard self-describing binary encoding (SPKI DER).
    pub fn encode(&self) -> Vec<u8> {
        self.0
            .to_public_key_der()
            .expect("RSA public key always encodes")
            .into_vec()
    }

    pub fn decode(der: &[u8]) -> Result<Self> {
        RsaPublicKey::from_public_key_der(der)
            .map(PublicKey)
            .map_err(|e| Error::InvalidArgument(format!("malformed public key: {e}")))
    }

    pub fn to_pem(&self) -> String {
        self.0
            .to_public_key_pem(rsa::pkcs8::LineEnding::LF)
            .expect("RSA public key always encodes")
    }

    pub fn from_pem(pem: &str) -> Result<Self> {
        RsaPublicKey::from_public_key_pem(pem)
            .map(PublicKey)
            .map_err(|e| Error::InvalidArgument(format!("malformed public key PEM: {e}")))
    }

    /// Digest of the encoded key, for logs and lookups.
    pub fn fingerprint(&self) -> Digest {
        one_way_hash(&self.encode())
    }
}

impl fmt::Debug for PublicKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "PublicKey({})", &self.fingerprint().to_hex()[..12])
    }
}

/// Asymmetric private key. Never serialized into packets or the ledger;
/// persists only to local key files.
#[derive(Clone)]
pub struct PrivateKey(RsaPrivateKey);

impl PrivateKey {
    pub fn to_pem(&self) -> String {
        self.0
            .to_pkcs8_pem(rsa::pkcs8::LineEnding::LF)
            .expect("RSA private key always encodes")
            .to_string()
    }

    pub fn from_pem(pem: &str) -> Result<Self> {
        RsaPrivateKey::from_pkcs8_pem(pem)
            .map(PrivateKey)
            .map_err(|e| Error::InvalidArgument(format!("malformed private key PEM: {e}")))
    }

    pub fn public_key(&self) -> PublicKey {
        PublicKey(RsaPublicKey::from(&self.0))
    }
}

impl fmt::Debug for PrivateKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("PrivateKey(..)")
    }
}

/// Asymmetric key pair.
#[derive(Debug, Clone)]
pub struct KeyPair {
    pub public: PublicKey,
    pub private: PrivateKey,
}

/// Asymmetric signature over a [`Digest`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Signature(Vec<u8>);

impl Signature {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Signature(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }
}

/// Output of [`hybrid_wrap`]: the payload under a fresh symmetric key, plus
/// that key encrypted to the recipient.
#[derive(Debug, Clone)]
pub struct WrappedEnvelope {
    pub wrapped_key: Vec<u8>,
    pub nonce: [u8; NONCE_LEN],
    pub ciphertext: Vec<u8>,
}

/// Device identity: the serial ID plus the key pair registered for it.
#[derive(Debug, Clone)]
pub struct DeviceIdentity {
    serial_id: String,
    keypair: KeyPair,
}

impl DeviceIdentity {
    pub fn new(serial_id: impl Into<String>, keypair: KeyPair) -> Result<Self> {
        let serial_id = serial_id.into();
        if serial_id.is_empty() {
            return Err(Error::InvalidIdentity("empty serial ID".into()));
        }
        Ok(DeviceIdentity { serial_id, keypair })
    }

    /// Fresh identity with a random serial ID and key pair.
    pub fn generate<R: RngCore + CryptoRng>(rng: &mut R, bits: usize) -> Result<Self> {
        let serial_id = generate_serial_id(rng);
        let keypair = generate_keypair(rng, bits)?;
        DeviceIdentity::new(serial_id, keypair)
    }

    pub fn serial_id(&self) -> &str {
        &self.serial_id
    }

    pub fn keypair(&self) -> &KeyPair {
        &self.keypair
    }

    pub fn public_key(&self) -> &PublicKey {
        &self.keypair.public
    }

    pub fn private_key(&self) -> &PrivateKey {
        &self.keypair.private
    }
}

/// Random device serial in the platform's `fg-` namespace.
pub fn generate_serial_id<R: RngCore + CryptoRng>(rng: &mut R) -> String {
    let mut raw = [0u8; 8];
    rng.fill_bytes(&mut raw);
    format!("fg-{}", hex::encode(raw))
}

/// Generates a fresh asymmetric key pair.
///
/// `bits` must be one of [`SUPPORTED_KEY_BITS`]; anything else is a
/// configuration error.
pub fn generate_keypair<R: RngCore + CryptoRng>(rng: &mut R, bits: usize) -> Result<KeyPair> {
    if !SUPPORTED_KEY_BITS.contains(&bits) {
        return Err(Error::Config(format!(
            "unsupported key size {bits}; expected one of {SUPPORTED_KEY_BITS:?}"
        )));
    }
    let private = RsaPrivateKey::new(rng, bits)
        .map_err(|e| Error::Asymmetric(format!("key generation failed: {e}")))?;
    let public = RsaPublicKey::from(&private);
    Ok(KeyPair {
        public: PublicKey(public),
        private: PrivateKey(private),
    })
}

/// One-way hash (SHA-256). Deterministic, 32 bytes, empty input allowed.
pub fn one_way_hash(data: &[u8]) -> Digest {
    Digest(Sha256::digest(data).into())
}

/// Derives the inner-layer symmetric key from a device serial ID: the key
/// bytes are exactly the one-way hash of the serial's UTF-8 encoding.
pub fn derive_inner_key(serial_id: &str) -> Result<SymmetricKey> {
    if serial_id.is_empty() {
        return Err(Error::InvalidIdentity("empty serial ID".into()));
    }
    Ok(SymmetricKey {
        bytes: *one_way_hash(serial_id.as_bytes()).as_bytes(),
        derivation: KeyDerivation::SerialIdHash,
    })
}

/// Authenticated symmetric encryption with a fresh random nonce.
pub fn symmetric_encrypt<R: RngCore + CryptoRng>(
    rng: &mut R,
    key: &SymmetricKey,
    plaintext: &[u8],
) -> ([u8; NONCE_LEN], Vec<u8>) {
    let cipher = Aes256Gcm::new_from_slice(&key.bytes).expect("key length fixed by type");
    let mut nonce = [0u8; NONCE_LEN];
    rng.fill_bytes(&mut nonce);
    let ciphertext = cipher
        .encrypt(Nonce::from_slice(&nonce), plaintext)
        .expect("AES-GCM encryption cannot fail on valid key");
    (nonce, ciphertext)
}

/// Inverse of [`symmetric_encrypt`]. Wrong key and tampered ciphertext both
/// yield [`Error::DecryptionFailure`]; the cause is not distinguishable.
pub fn symmetric_decrypt(key: &SymmetricKey, nonce: &[u8], ciphertext: &[u8]) -> Result<Vec<u8>> {
    if nonce.len() != NONCE_LEN {
        return Err(Error::DecryptionFailure);
    }
    let cipher = Aes256Gcm::new_from_slice(&key.bytes).expect("key length fixed by type");
    cipher
        .decrypt(Nonce::from_slice(nonce), ciphertext)
        .map_err(|_| Error::DecryptionFailure)
}

/// Encrypts a payload of any size to a recipient public key: the payload
/// goes under a fresh ephemeral symmetric key, and that key is encrypted
/// asymmetrically (RSA-OAEP) to the recipient. The asymmetric cipher alone
/// cannot carry arbitrary-length packets.
pub fn hybrid_wrap<R: RngCore + CryptoRng>(
    rng: &mut R,
    recipient_public: &PublicKey,
    payload: &[u8],
) -> Result<WrappedEnvelope> {
    let mut key_bytes = [0u8; SYMMETRIC_KEY_LEN];
    rng.fill_bytes(&mut key_bytes);
    let ephemeral = SymmetricKey {
        bytes: key_bytes,
        derivation: KeyDerivation::EphemeralRandom,
    };
    let (nonce, ciphertext) = symmetric_encrypt(rng, &ephemeral, payload);
    let wrapped_key = recipient_public
        .0
        .encrypt(rng, Oaep::new::<Sha256>(), &key_bytes)
        .map_err(|e| Error::Asymmetric(format!("key wrap failed: {e}")))?;
    Ok(WrappedEnvelope {
        wrapped_key,
        nonce,
        ciphertext,
    })
}

/// Inverse of [`hybrid_wrap`]. Any tampering of the wrapped key or the
/// ciphertext yields [`Error::DecryptionFailure`].
pub fn hybrid_unwrap(recipient_private: &PrivateKey, envelope: &WrappedEnvelope) -> Result<Vec<u8>> {
    let key_bytes = recipient_private
        .0
        .decrypt(Oaep::new::<Sha256>(), &envelope.wrapped_key)
        .map_err(|_| Error::DecryptionFailure)?;
    let key_bytes: [u8; SYMMETRIC_KEY_LEN] =
        key_bytes.try_into().map_err(|_| Error::DecryptionFailure)?;
    let ephemeral = SymmetricKey {
        bytes: key_bytes,
        derivation: KeyDerivation::EphemeralRandom,
    };
    symmetric_decrypt(&ephemeral, &envelope.nonce, &envelope.ciphertext)
}

/// Signs a digest with the private key (hash-then-sign, PKCS#1 v1.5).
pub fn sign(private_key: &PrivateKey, digest: &Digest) -> Signature {
    let sig = private_key
        .0
        .sign(Pkcs1v15Sign::new::<Sha256>(), digest.as_bytes())
        .expect("32-byte digest always fits the modulus");
    Signature(sig)
}

/// True iff `sig` was produced by the private counterpart of `public_key`
/// over exactly this digest. Malformed signature bytes verify as false.
pub fn verify(public_key: &PublicKey, digest: &Digest, sig: &Signature) -> bool {
    public_key
        .0
        .verify(Pkcs1v15Sign::new::<Sha256>(), digest.as_bytes(), &sig.0)
        .is_ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha20Rng;
    use std::sync::LazyLock;

    // Key generation is the expensive part; share pairs across tests.
    pub(crate) static PAIR_A: LazyLock<KeyPair> = LazyLock::new(|| {
        generate_keypair(&mut ChaCha20Rng::seed_from_u64(0xA), DEFAULT_KEY_BITS).unwrap()
    });
    pub(crate) static PAIR_B: LazyLock<KeyPair> = LazyLock::new(|| {
        generate_keypair(&mut ChaCha20Rng::seed_from_u64(0xB), DEFAULT_KEY_BITS).unwrap()
    });

    fn rng() -> ChaCha20Rng {
        ChaCha20Rng::seed_from_u64(99)
    }

    #[test]
    fn keypair_sign_verify_roundtrip() {
        let d = one_way_hash(b"hello");
        let sig = sign(&PAIR_A.private, &d);
        assert!(verify(&PAIR_A.public, &d, &sig));
    }

    #[test]
    fn successive_keypairs_differ() {
        let mut r = rng();
        let a = generate_keypair(&mut r, 2048).unwrap();
        let b = generate_keypair(&mut r, 2048).unwrap();
        assert_ne!(a.public.encode(), b.public.encode());
    }

    #[test]
    fn unsupported_key_size_is_config_error() {
        assert!(matches!(
            generate_keypair(&mut rng(), 1024),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn hash_is_deterministic() {
        assert_eq!(one_way_hash(b"x"), one_way_hash(b"x"));
    }

    #[test]
    fn hash_matches_published_vectors() {
        // Recomputed with an independent SHA-256 implementation before freezing.
        assert_eq!(
            one_way_hash(b"").to_hex(),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
        assert_eq!(
            one_way_hash(b"abc").to_hex(),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn distinct_inputs_distinct_digests() {
        assert_ne!(one_way_hash(b"a"), one_way_hash(b"b"));
    }

    #[test]
    fn inner_key_is_hash_of_serial() {
        let key = derive_inner_key("device-01").unwrap();
        assert_eq!(key.as_bytes(), one_way_hash(b"device-01").as_bytes());
        assert_eq!(
            hex::encode(key.as_bytes()),
            "9f8461cc4b94dee0a1cb4d097198c515d340494023d4cdfc61228ad6fb1c7ed0"
        );
        assert_eq!(key.derivation(), KeyDerivation::SerialIdHash);
    }

    #[test]
    fn inner_key_deterministic() {
        let a = derive_inner_key("dev").unwrap();
        let b = derive_inner_key("dev").unwrap();
        assert_eq!(a.as_bytes(), b.as_bytes());
    }

    #[test]
    fn empty_serial_is_invalid_identity() {
        assert!(matches!(derive_inner_key(""), Err(Error::InvalidIdentity(_))));
    }

    #[test]
    fn symmetric_roundtrip() {
        let mut r = rng();
        let key = derive_inner_key("dev").unwrap();
        let (nonce, ct) = symmetric_encrypt(&mut r, &key, b"plaintext");
        assert_ne!(ct, b"plaintext");
        assert_eq!(symmetric_decrypt(&key, &nonce, &ct).unwrap(), b"plaintext");
    }

    #[test]
    fn symmetric_nonces_are_fresh() {
        let mut r = rng();
        let key = derive_inner_key("dev").unwrap();
        let (n1, c1) = symmetric_encrypt(&mut r, &key, b"same");
        let (n2, c2) = symmetric_encrypt(&mut r, &key, b"same");
        assert_ne!(n1, n2);
        assert_ne!(c1, c2);
    }

    #[test]
    fn symmetric_wrong_key_fails() {
        let mut r = rng();
        let key = derive_inner_key("dev").unwrap();
        let other = derive_inner_key("dev2").unwrap();
        let (nonce, ct) = symmetric_encrypt(&mut r, &key, b"plaintext");
        assert!(matches!(
            symmetric_decrypt(&other, &nonce, &ct),
            Err(Error::DecryptionFailure)
        ));
    }

    #[test]
    fn symmetric_every_byte_flip_is_rejected() {
        let mut r = rng();
        let key = derive_inner_key("dev").unwrap();
        let (nonce, ct) = symmetric_encrypt(&mut r, &key, b"a fixed sample plaintext");
        for i in 0..ct.len() {
            let mut bad = ct.clone();
            bad[i] ^= 0x01;
            assert!(
                symmetric_decrypt(&key, &nonce, &bad).is_err(),
                "flip at byte {i} was not rejected"
            );
        }
    }

    #[test]
    fn hybrid_roundtrip_1kib() {
        let mut r = rng();
        let mut payload = vec![0u8; 1024];
        r.fill_bytes(&mut payload);
        let env = hybrid_wrap(&mut r, &PAIR_A.public, &payload).unwrap();
        assert_eq!(hybrid_unwrap(&PAIR_A.private, &env).unwrap(), payload);
    }

    #[test]
    fn hybrid_wrong_private_key_fails() {
        let mut r = rng();
        let env = hybrid_wrap(&mut r, &PAIR_A.public, b"secret").unwrap();
        assert!(matches!(
            hybrid_unwrap(&PAIR_B.private, &env),
            Err(Error::DecryptionFailure)
        ));
    }

    #[test]
    fn hybrid_size_sweep_up_to_1mib() {
        let mut r = rng();
        for size in [0usize, 1, 15, 16, 17, 255, 4096, 65_536, 1 << 20] {
            let mut payload = vec![0u8; size];
            r.fill_bytes(&mut payload);
            let env = hybrid_wrap(&mut r, &PAIR_A.public, &payload).unwrap();
            assert_eq!(
                hybrid_unwrap(&PAIR_A.private, &env).unwrap(),
                payload,
                "size {size} failed to round-trip"
            );
        }
    }

    #[test]
    fn hybrid_tampering_either_part_fails() {
        let mut r = rng();
        let env = hybrid_wrap(&mut r, &PAIR_A.public, b"payload").unwrap();

        let mut bad_key = env.clone();
        bad_key.wrapped_key[5] ^= 0x01;
        assert!(hybrid_unwrap(&PAIR_A.private, &bad_key).is_err());

        let mut bad_ct = env.clone();
        bad_ct.ciphertext[0] ^= 0x01;
        assert!(hybrid_unwrap(&PAIR_A.private, &bad_ct).is_err());
    }

    #[test]
    fn signature_rejects_other_digest_and_other_key() {
        let d = one_way_hash(b"message");
        let d2 = one_way_hash(b"other");
        let sig = sign(&PAIR_A.private, &d);
        assert!(!verify(&PAIR_A.public, &d2, &sig));
        assert!(!verify(&PAIR_B.public, &d, &sig));
    }

    #[test]
    fn malformed_signature_verifies_false() {
        let d = one_way_hash(b"message");
        assert!(!verify(&PAIR_A.public, &d, &Signature(b"junk".to_vec())));
        assert!(!verify(&PAIR_A.public, &d, &Signature(Vec::new())));
    }

    #[test]
    fn signature_byte_flips_verify_false() {
        let d = one_way_hash(b"message");
        let sig = sign(&PAIR_A.private, &d);
        for i in 0..sig.as_bytes().len() {
            let mut bad = sig.as_bytes().to_vec();
            bad[i] ^= 0x01;
            assert!(
                !verify(&PAIR_A.public, &d, &Signature(bad)),
                "signature flip at byte {i} verified"
            );
        }
    }

    #[test]
    fn public_key_der_roundtrip() {
        let der = PAIR_A.public.encode();
        let back = PublicKey::decode(&der).unwrap();
        assert_eq!(back, PAIR_A.public);
        assert!(PublicKey::decode(b"not a key").is_err());
    }

    #[test]
    fn device_identity_rejects_empty_serial() {
        assert!(matches!(
            DeviceIdentity::new("", PAIR_A.clone()),
            Err(Error::InvalidIdentity(_))
        ));
    }
}
