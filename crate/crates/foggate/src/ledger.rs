//! The permissioned ledger: an append-only, hash-linked chain of blocks.
//!
//! Blocks hold two kinds of entries. Identity entries register a device
//! (serial ID digest, public key, allowed/blocked status); transaction
//! records audit processed packets. There is no mining and no consensus —
//! a single trusted writer (the server) appends, everyone may read.
//!
//! Revocation works by supersession: re-registering a serial ID appends a
//! newer identity entry, and lookups always take the most recent one.
//!
//! ```
//! use foggate::ledger::{Ledger, DeviceStatus};
//! use foggate::crypto;
//! use rand_chacha::ChaCha20Rng;
//! use rand::SeedableRng;
//!
//! let mut rng = ChaCha20Rng::seed_from_u64(2);
//! let pair = crypto::generate_keypair(&mut rng, 2048).unwrap();
//!
//! let mut ledger = Ledger::genesis();
//! ledger.register_device("fg-01", &pair.public.encode(), DeviceStatus::Allowed, 100).unwrap();
//! ledger.register_device("fg-01", &pair.public.encode(), DeviceStatus::Blocked, 200).unwrap();
//!
//! // Latest entry wins: the device is now blocked.
//! let entry = ledger.lookup("fg-01").unwrap();
//! assert_eq!(entry.status().unwrap(), DeviceStatus::Blocked);
//! assert!(ledger.verify_chain().valid);
//! ```

use std::fs;
use std::path::Path;

use crate::crypto::{one_way_hash, Digest, PublicKey, DIGEST_LEN};
use crate::error::{Error, Result};
use crate::wire::{put_bytes16, put_u16, put_u32, put_u64, Reader};

/// Magic bytes opening a serialized ledger file.
pub const LEDGER_MAGIC: &[u8; 4] = b"FGL1";

const KIND_IDENTITY: u8 = 0x01;
const KIND_TRANSACTION: u8 = 0x02;
const STATUS_ALLOWED: u8 = 0x01;
const STATUS_BLOCKED: u8 = 0x02;

/// Whether a registered device may use the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DeviceStatus {
    Allowed,
    Blocked,
}

impl DeviceStatus {
    fn as_byte(self) -> u8 {
        match self {
            DeviceStatus::Allowed => STATUS_ALLOWED,
            DeviceStatus::Blocked => STATUS_BLOCKED,
        }
    }

    fn from_byte(b: u8) -> Result<Self> {
        match b {
            STATUS_ALLOWED => Ok(DeviceStatus::Allowed),
            STATUS_BLOCKED => Ok(DeviceStatus::Blocked),
            _ => Err(Error::LedgerFormat(format!("unknown status byte 0x{b:02x}"))),
        }
    }
}

/// Payload of a ledger entry. Identity entries carry key material and
/// status; transaction records carry only the transaction digest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EntryKind {
    Identity {
        serial_id_digest: Digest,
        public_key: Vec<u8>,
        status: DeviceStatus,
    },
    Transaction {
        tx_digest: Digest,
    },
}

/// One record in a block.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LedgerEntry {
    pub kind: EntryKind,
    /// Seconds since epoch (virtual clock inside simulations).
    pub timestamp: u64,
}

impl LedgerEntry {
    pub fn status(&self) -> Option<DeviceStatus> {
        match &self.kind {
            EntryKind::Identity { status, .. } => Some(*status),
            EntryKind::Transaction { .. } => None,
        }
    }

    pub fn public_key(&self) -> Option<&[u8]> {
        match &self.kind {
            EntryKind::Identity { public_key, .. } => Some(public_key),
            EntryKind::Transaction { .. } => None,
        }
    }

    pub fn tx_digest(&self) -> Option<&Digest> {
        match &self.kind {
            EntryKind::Transaction { tx_digest } => Some(tx_digest),
            EntryKind::Identity { .. } => None,
        }
    }

    fn encode_into(&self, buf: &mut Vec<u8>) -> Result<()> {
        match &self.kind {
            EntryKind::Identity {
                serial_id_digest,
                public_key,
                status,
            } => {
                buf.push(KIND_IDENTITY);
                buf.extend_from_slice(serial_id_digest.as_bytes());
                put_bytes16(buf, public_key)?;
                buf.push(status.as_byte());
            }
            EntryKind::Transaction { tx_digest } => {
                buf.push(KIND_TRANSACTION);
                buf.extend_from_slice(tx_digest.as_bytes());
            }
        }
        put_u64(buf, self.timestamp);
        Ok(())
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self> {
        let kind_byte = r.u8("entry kind").map_err(ledger_parse)?;
        let kind = match kind_byte {
            KIND_IDENTITY => {
                let digest: [u8; DIGEST_LEN] = r.array("serial digest").map_err(ledger_parse)?;
                let public_key = r.bytes16("entry public key").map_err(ledger_parse)?.to_vec();
                let status = DeviceStatus::from_byte(r.u8("entry status").map_err(ledger_parse)?)?;
                EntryKind::Identity {
                    serial_id_digest: Digest::from_bytes(digest),
                    public_key,
                    status,
                }
            }
            KIND_TRANSACTION => {
                let digest: [u8; DIGEST_LEN] = r.array("tx digest").map_err(ledger_parse)?;
                EntryKind::Transaction {
                    tx_digest: Digest::from_bytes(digest),
                }
            }
            other => {
                return Err(Error::LedgerFormat(format!(
                    "unknown entry kind byte 0x{other:02x}"
                )))
            }
        };
        let timestamp = r.u64("entry timestamp").map_err(ledger_parse)?;
        Ok(LedgerEntry { kind, timestamp })
    }
}

fn ledger_parse(e: Error) -> Error {
    match e {
        Error::Parse(what) => Error::LedgerFormat(format!("truncated or malformed field: {what}")),
        other => other,
    }
}

/// One block in the chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub index: u64,
    pub prev_hash: Digest,
    pub entries: Vec<LedgerEntry>,
    pub timestamp: u64,
    pub block_hash: Digest,
}

impl Block {
    /// Canonical encoding of the hashed fields: index, prev_hash, entries,
    /// timestamp — fixed order, big-endian, length prefixes.
    fn canonical_body(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        put_u64(&mut buf, self.index);
        buf.extend_from_slice(self.prev_hash.as_bytes());
        let count = u16::try_from(self.entries.len())
            .map_err(|_| Error::InvalidArgument("too many entries in one block".into()))?;
        put_u16(&mut buf, count);
        for entry in &self.entries {
            entry.encode_into(&mut buf)?;
        }
        put_u64(&mut buf, self.timestamp);
        Ok(buf)
    }

    fn compute_hash(&self) -> Result<Digest> {
        Ok(one_way_hash(&self.canonical_body()?))
    }

    fn new(index: u64, prev_hash: Digest, entries: Vec<LedgerEntry>, timestamp: u64) -> Result<Self> {
        let mut block = Block {
            index,
            prev_hash,
            entries,
            timestamp,
            block_hash: Digest::zero(),
        };
        block.block_hash = block.compute_hash()?;
        Ok(block)
    }
}

/// Chain integrity verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IntegrityReport {
    pub valid: bool,
    /// Lowest block index that fails hash recomputation, linking, or
    /// index contiguity.
    pub first_bad_index: Option<u64>,
}

/// The append-only chain. Existing blocks are never modified or removed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ledger {
    blocks: Vec<Block>,
}

impl Ledger {
    /// A fresh chain: one genesis block, index 0, all-zero back-link, no
    /// entries. The genesis timestamp is fixed at 0 so independently created
    /// chains are identical.
    pub fn genesis() -> Ledger {
        let genesis = Block::new(0, Digest::zero(), Vec::new(), 0)
            .expect("genesis block always encodes");
        Ledger {
            blocks: vec![genesis],
        }
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn tip(&self) -> &Block {
        self.blocks.last().expect("chain always has genesis")
    }

    /// Appends one block holding `entries`. The new block links the current
    /// tip; earlier blocks are untouched.
    pub fn append_block(&mut self, entries: Vec<LedgerEntry>, now: u64) -> Result<&Block> {
        if entries.is_empty() {
            return Err(Error::InvalidArgument("a block needs at least one entry".into()));
        }
        let tip = self.tip();
        let block = Block::new(tip.index + 1, tip.block_hash, entries, now)?;
        self.blocks.push(block);
        Ok(self.tip())
    }

    /// Registers a device identity keyed by the one-way hash of its serial
    /// ID. Re-registration is permitted; the latest entry wins, which is how
    /// revocation works.
    pub fn register_device(
        &mut self,
        serial_id: &str,
        public_key: &[u8],
        status: DeviceStatus,
        now: u64,
    ) -> Result<()> {
        if serial_id.is_empty() {
            return Err(Error::InvalidArgument("empty serial ID".into()));
        }
        // Reject malformed key material before it reaches the chain.
        PublicKey::decode(public_key)?;
        let entry = LedgerEntry {
            kind: EntryKind::Identity {
                serial_id_digest: one_way_hash(serial_id.as_bytes()),
                public_key: public_key.to_vec(),
                status,
            },
            timestamp: now,
        };
        self.append_block(vec![entry], now)?;
        Ok(())
    }

    /// Most recent identity entry for this serial ID, scanning newest block
    /// first. Absence is a value, not an error.
    pub fn lookup(&self, serial_id: &str) -> Option<&LedgerEntry> {
        if serial_id.is_empty() {
            return None;
        }
        let wanted = one_way_hash(serial_id.as_bytes());
        self.lookup_by_digest(&wanted)
    }

    /// Same as [`Ledger::lookup`] but keyed directly by the serial digest.
    pub fn lookup_by_digest(&self, wanted: &Digest) -> Option<&LedgerEntry> {
        for block in self.blocks.iter().rev() {
            for entry in block.entries.iter().rev() {
                if let EntryKind::Identity {
                    serial_id_digest, ..
                } = &entry.kind
                {
                    if serial_id_digest == wanted {
                        return Some(entry);
                    }
                }
            }
        }
        None
    }

    /// Appends one transaction-record block.
    pub fn record_transaction(&mut self, tx_digest: Digest, now: u64) {
        let entry = LedgerEntry {
            kind: EntryKind::Transaction { tx_digest },
            timestamp: now,
        };
        self.append_block(vec![entry], now)
            .expect("single-entry block always appends");
    }

    /// Recomputes every block hash and checks every back-link and index.
    pub fn verify_chain(&self) -> IntegrityReport {
        let mut prev_hash = Digest::zero();
        for (i, block) in self.blocks.iter().enumerate() {
            let bad = |_| IntegrityReport {
                valid: false,
                first_bad_index: Some(i as u64),
            };
            if block.index != i as u64 || block.prev_hash != prev_hash {
                return bad(());
            }
            match block.compute_hash() {
                Ok(h) if h == block.block_hash => {}
                _ => return bad(()),
            }
            prev_hash = block.block_hash;
        }
        IntegrityReport {
            valid: true,
            first_bad_index: None,
        }
    }

    /// Serializes to the documented `FGL1` file layout.
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let mut buf = Vec::new();
        buf.extend_from_slice(LEDGER_MAGIC);
        for block in &self.blocks {
            let mut record = block.canonical_body()?;
            record.extend_from_slice(block.block_hash.as_bytes());
            let len = u32::try_from(record.len())
                .map_err(|_| Error::InvalidArgument("oversized block".into()))?;
            put_u32(&mut buf, len);
            buf.extend_from_slice(&record);
        }
        Ok(buf)
    }

    /// Decodes the `FGL1` layout without verifying the chain.
    pub fn from_bytes_unverified(data: &[u8]) -> Result<Ledger> {
        let mut r = Reader::new(data);
        let magic: [u8; 4] = r.array("ledger magic").map_err(ledger_parse)?;
        if &magic != LEDGER_MAGIC {
            return Err(Error::LedgerFormat("bad magic bytes".into()));
        }
        let mut blocks = Vec::new();
        while r.remaining() > 0 {
            let record = r.bytes32("block record").map_err(ledger_parse)?;
            let mut br = Reader::new(record);
            let index = br.u64("block index").map_err(ledger_parse)?;
            let prev: [u8; DIGEST_LEN] = br.array("prev hash").map_err(ledger_parse)?;
            let count = br.u16("entry count").map_err(ledger_parse)?;
            let mut entries = Vec::with_capacity(count as usize);
            for _ in 0..count {
                entries.push(LedgerEntry::decode_from(&mut br)?);
            }
            let timestamp = br.u64("block timestamp").map_err(ledger_parse)?;
            let stored: [u8; DIGEST_LEN] = br.array("block hash").map_err(ledger_parse)?;
            br.expect_end("trailing bytes in block record")
                .map_err(ledger_parse)?;
            blocks.push(Block {
                index,
                prev_hash: Digest::from_bytes(prev),
                entries,
                timestamp,
                block_hash: Digest::from_bytes(stored),
            });
        }
        if blocks.is_empty() {
            return Err(Error::LedgerFormat("no blocks".into()));
        }
        Ok(Ledger { blocks })
    }

    /// Decodes and verifies; a chain that fails verification is refused.
    pub fn from_bytes(data: &[u8]) -> Result<Ledger> {
        let ledger = Ledger::from_bytes_unverified(data)?;
        let report = ledger.verify_chain();
        if !report.valid {
            return Err(Error::ChainIntegrity {
                first_bad_index: report.first_bad_index.unwrap_or(0),
            });
        }
        Ok(ledger)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    /// Loads and verifies a chain file; refuses to serve a corrupt one.
    pub fn load(path: impl AsRef<Path>) -> Result<Ledger> {
        let data = fs::read(path)?;
        Ledger::from_bytes(&data)
    }
}

impl Default for Ledger {
    fn default() -> Self {
        Ledger::genesis()
    }
}
