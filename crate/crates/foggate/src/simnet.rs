//! Message transport: a deterministic in-process network with adversary
//! hooks, and a real stream-socket transport for two-process operation.
//!
//! The simulated network is step-driven. `send` queues a frame; `step`
//! delivers everything queued, runs each frame through the link's adversary
//! hook, and advances the virtual clock by one second. With a fixed seed the
//! whole run — including every adversary decision — is byte-for-byte
//! reproducible.
//!
//! The socket transport frames messages with a 4-byte big-endian length
//! prefix. One frame is one packet; there is no fragmentation model.

use std::collections::{BTreeMap, VecDeque};
use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream, ToSocketAddrs};
use std::time::Duration;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use crate::error::{Error, Result};

/// Upper bound on a socket frame; anything larger is treated as garbage.
pub const MAX_FRAME_LEN: usize = 16 * 1024 * 1024;

/// Which direction of a link a hook applies to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HookDirection {
    Both,
    AToB,
    BToA,
}

/// Byte positions an in-flight tamper flips, and the mask it XORs in.
#[derive(Debug, Clone)]
pub struct TamperRule {
    pub positions: Vec<usize>,
    pub xor_mask: u8,
}

/// What the adversary on a link does to traffic.
#[derive(Debug, Clone)]
pub enum AdversaryMode {
    /// Frames pass untouched.
    Passthrough,
    /// Frames pass untouched and are copied into the capture log.
    Eavesdrop,
    /// Exactly the configured byte positions are altered.
    Tamper(TamperRule),
    /// Each frame is dropped with this probability (1.0 drops everything).
    Drop(f64),
    /// Each delivered frame is re-delivered this many extra times on
    /// subsequent steps.
    Replay(u32),
    /// The configured frames are injected toward the hook's direction
    /// target once, on the next step.
    Inject(Vec<Vec<u8>>),
    /// Junk frames flood the direction target: `rate` frames per step for
    /// `duration` steps.
    Flood { rate: u32, duration: u64 },
}

/// An adversary attached to a link.
#[derive(Debug, Clone)]
pub struct AdversaryHook {
    pub mode: AdversaryMode,
    pub direction: HookDirection,
}

impl AdversaryHook {
    pub fn new(mode: AdversaryMode, direction: HookDirection) -> Self {
        AdversaryHook { mode, direction }
    }

    fn applies(&self, a_to_b: bool) -> bool {
        match self.direction {
            HookDirection::Both => true,
            HookDirection::AToB => a_to_b,
            HookDirection::BToA => !a_to_b,
        }
    }
}

/// Handle to a link between two endpoints.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkId(usize);

#[derive(Debug)]
struct Link {
    a: String,
    b: String,
    hook: Option<AdversaryHook>,
    capture_log: Vec<Vec<u8>>,
    flood_started_at: Option<u64>,
    injected: bool,
}

#[derive(Debug)]
struct Pending {
    from: String,
    to: String,
    frame: Vec<u8>,
    /// Adversary-spawned frames already passed the hook once; they must not
    /// traverse it again or a replay hook would copy its own copies forever.
    exempt: bool,
}

/// The deterministic in-process network.
#[derive(Debug)]
pub struct SimNet {
    endpoints: BTreeMap<String, VecDeque<(String, Vec<u8>)>>,
    links: Vec<Link>,
    pending: VecDeque<Pending>,
    clock: u64,
    rng: ChaCha20Rng,
}

impl SimNet {
    pub fn new(seed: u64) -> Self {
        SimNet {
            endpoints: BTreeMap::new(),
            links: Vec::new(),
            pending: VecDeque::new(),
            clock: 0,
            rng: ChaCha20Rng::seed_from_u64(seed),
        }
    }

    /// Virtual time in seconds; advances by one per step.
    pub fn clock(&self) -> u64 {
        self.clock
    }

    pub fn register(&mut self, address: &str) -> Result<()> {
        if self.endpoints.contains_key(address) {
            return Err(Error::SimNet(format!("endpoint {address} already registered")));
        }
        self.endpoints.insert(address.to_string(), VecDeque::new());
        Ok(())
    }

    /// Creates a bidirectional link; all frames between the two endpoints
    /// traverse the hook. One link per endpoint pair.
    pub fn connect(&mut self, a: &str, b: &str, hook: Option<AdversaryHook>) -> Result<LinkId> {
        if !self.endpoints.contains_key(a) {
            return Err(Error::SimNet(format!("unknown endpoint {a}")));
        }
        if !self.endpoints.contains_key(b) {
            return Err(Error::SimNet(format!("unknown endpoint {b}")));
        }
        if self.find_link(a, b).is_some() {
            return Err(Error::SimNet(format!("link {a} <-> {b} already exists")));
        }
        self.links.push(Link {
            a: a.to_string(),
            b: b.to_string(),
            hook,
            capture_log: Vec::new(),
            flood_started_at: None,
            injected: false,
        });
        Ok(LinkId(self.links.len() - 1))
    }

    /// Swaps the adversary on an existing link; scenarios stage attacks by
    /// arming and disarming hooks between phases.
    pub fn set_hook(&mut self, link: LinkId, hook: Option<AdversaryHook>) {
        let l = &mut self.links[link.0];
        l.hook = hook;
        l.flood_started_at = None;
        l.injected = false;
    }

    /// Frames the adversary on this link has observed.
    pub fn capture_log(&self, link: LinkId) -> &[Vec<u8>] {
        &self.links[link.0].capture_log
    }

    /// Capture log rendered as a hex dump, one frame per line.
    pub fn export_capture_hex(&self, link: LinkId) -> String {
        let mut out = String::new();
        for (i, frame) in self.links[link.0].capture_log.iter().enumerate() {
            out.push_str(&format!("{i:06} {}\n", hex::encode(frame)));
        }
        out
    }

    pub fn send(&mut self, from: &str, to: &str, frame: &[u8]) -> Result<()> {
        if !self.endpoints.contains_key(from) {
            return Err(Error::SimNet(format!("unknown endpoint {from}")));
        }
        if !self.endpoints.contains_key(to) {
            return Err(Error::SimNet(format!("unknown endpoint {to}")));
        }
        if self.find_link(from, to).is_none() {
            return Err(Error::SimNet(format!("no link {from} <-> {to}")));
        }
        self.pending.push_back(Pending {
            from: from.to_string(),
            to: to.to_string(),
            frame: frame.to_vec(),
            exempt: false,
        });
        Ok(())
    }

    /// Pops the oldest frame in an endpoint's inbox, with its sender.
    pub fn recv(&mut self, address: &str) -> Option<(String, Vec<u8>)> {
        self.endpoints.get_mut(address)?.pop_front()
    }

    pub fn inbox_len(&self, address: &str) -> usize {
        self.endpoints.get(address).map_or(0, VecDeque::len)
    }

    /// Delivers one round: every frame queued before this call traverses its
    /// link hook and lands (or dies) now; frames the adversary spawns are
    /// queued for the next step. Advances the clock. Returns frames delivered.
    pub fn step(&mut self) -> usize {
        self.clock += 1;
        let mut delivered = 0;
        let round: Vec<Pending> = self.pending.drain(..).collect();
        let mut spawned: Vec<Pending> = Vec::new();

        for p in round {
            let link_idx = match self.find_link(&p.from, &p.to) {
                Some(i) => i,
                None => continue,
            };
            if p.exempt {
                self.deliver(&p.from, &p.to, p.frame);
                delivered += 1;
                continue;
            }
            let a_to_b = self.links[link_idx].a == p.from;
            let action = self.apply_hook(link_idx, a_to_b, &p.frame);
            match action {
                HookAction::Deliver(frame) => {
                    self.deliver(&p.from, &p.to, frame);
                    delivered += 1;
                }
                HookAction::DeliverAndReplay(frame, copies) => {
                    self.deliver(&p.from, &p.to, frame.clone());
                    delivered += 1;
                    for _ in 0..copies {
                        spawned.push(Pending {
                            from: p.from.clone(),
                            to: p.to.clone(),
                            frame: frame.clone(),
                            exempt: true,
                        });
                    }
                }
                HookAction::Drop => {}
            }
        }

        // Hooks that originate traffic on their own: injection and floods.
        for idx in 0..self.links.len() {
            let (inject_frames, flood_frames) = self.spontaneous_traffic(idx);
            let (from, to) = self.hook_target(idx);
            for frame in inject_frames.into_iter().chain(flood_frames) {
                spawned.push(Pending {
                    from: from.clone(),
                    to: to.clone(),
                    frame,
                    exempt: true,
                });
            }
        }

        self.pending.extend(spawned);
        delivered
    }

    fn find_link(&self, x: &str, y: &str) -> Option<usize> {
        self.links
            .iter()
            .position(|l| (l.a == x && l.b == y) || (l.a == y && l.b == x))
    }

    fn deliver(&mut self, from: &str, to: &str, frame: Vec<u8>) {
        if let Some(inbox) = self.endpoints.get_mut(to) {
            inbox.push_back((from.to_string(), frame));
        }
    }

    fn apply_hook(&mut self, link_idx: usize, a_to_b: bool, frame: &[u8]) -> HookAction {
        let Some(hook) = self.links[link_idx].hook.clone() else {
            return HookAction::Deliver(frame.to_vec());
        };
        if !hook.applies(a_to_b) {
            return HookAction::Deliver(frame.to_vec());
        }
        // The adversary observes everything crossing its direction.
        self.links[link_idx].capture_log.push(frame.to_vec());
        match hook.mode {
            AdversaryMode::Passthrough | AdversaryMode::Eavesdrop => {
                HookAction::Deliver(frame.to_vec())
            }
            AdversaryMode::Tamper(rule) => {
                let mut out = frame.to_vec();
                for &pos in &rule.positions {
                    if !out.is_empty() {
                        // Positions wrap at the frame length, so a rule can
                        // walk arbitrary offsets without knowing sizes ahead.
                        let idx = pos % out.len();
                        out[idx] ^= rule.xor_mask;
                    }
                }
                HookAction::Deliver(out)
            }
            AdversaryMode::Drop(rate) => {
                if self.rng.gen_bool(rate.clamp(0.0, 1.0)) {
                    HookAction::Drop
                } else {
                    HookAction::Deliver(frame.to_vec())
                }
            }
            AdversaryMode::Replay(copies) => {
                HookAction::DeliverAndReplay(frame.to_vec(), copies)
            }
            AdversaryMode::Inject(_) | AdversaryMode::Flood { .. } => {
                HookAction::Deliver(frame.to_vec())
            }
        }
    }

    /// Frames a hook originates this step without any triggering traffic.
    fn spontaneous_traffic(&mut self, idx: usize) -> (Vec<Vec<u8>>, Vec<Vec<u8>>) {
        let Some(hook) = self.links[idx].hook.clone() else {
            return (Vec::new(), Vec::new());
        };
        let mut inject = Vec::new();
        let mut flood = Vec::new();
        match hook.mode {
            AdversaryMode::Inject(frames) => {
                if !self.links[idx].injected {
                    self.links[idx].injected = true;
                    inject = frames;
                }
            }
            AdversaryMode::Flood { rate, duration } => {
                let started = *self.links[idx]
                    .flood_started_at
                    .get_or_insert(self.clock);
                if self.clock.saturating_sub(started) < duration {
                    for _ in 0..rate {
                        let len = self.rng.gen_range(48..192);
                        let mut junk = vec![0u8; len];
                        self.rng.fill_bytes(&mut junk);
                        flood.push(junk);
                    }
                }
            }
            _ => {}
        }
        (inject, flood)
    }

    /// Where a hook's self-originated traffic goes: the direction target,
    /// defaulting to endpoint `b`.
    fn hook_target(&self, idx: usize) -> (String, String) {
        let link = &self.links[idx];
        match link.hook.as_ref().map(|h| h.direction) {
            Some(HookDirection::BToA) => (link.b.clone(), link.a.clone()),
            _ => (link.a.clone(), link.b.clone()),
        }
    }
}

enum HookAction {
    Deliver(Vec<u8>),
    DeliverAndReplay(Vec<u8>, u32),
    Drop,
}

/// Binds a listening socket for length-prefixed frames.
pub fn tcp_listen(address: &str) -> Result<FrameListener> {
    let listener = TcpListener::bind(address).map_err(|source| Error::Transport {
        addr: address.to_string(),
        source,
    })?;
    Ok(FrameListener {
        inner: listener,
        addr: address.to_string(),
    })
}

/// Connects to a frame listener.
pub fn tcp_connect(address: &str) -> Result<FrameStream> {
    let stream = connect_any(address).map_err(|source| Error::Transport {
        addr: address.to_string(),
        source,
    })?;
    Ok(FrameStream {
        inner: stream,
        addr: address.to_string(),
    })
}

fn connect_any(address: &str) -> std::io::Result<TcpStream> {
    let mut last = None;
    for addr in address.to_socket_addrs()? {
        match TcpStream::connect(addr) {
            Ok(s) => return Ok(s),
            Err(e) => last = Some(e),
        }
    }
    Err(last.unwrap_or_else(|| {
        std::io::Error::new(std::io::ErrorKind::InvalidInput, "no addresses resolved")
    }))
}

/// Accepting side of the socket transport.
pub struct FrameListener {
    inner: TcpListener,
    addr: String,
}

impl FrameListener {
    pub fn accept(&self) -> Result<FrameStream> {
        let (stream, peer) = self.inner.accept().map_err(|source| Error::Transport {
            addr: self.addr.clone(),
            source,
        })?;
        Ok(FrameStream {
            inner: stream,
            addr: peer.to_string(),
        })
    }

    pub fn local_addr(&self) -> Result<String> {
        Ok(self
            .inner
            .local_addr()
            .map_err(|source| Error::Transport {
                addr: self.addr.clone(),
                source,
            })?
            .to_string())
    }
}

/// One frame-oriented stream connection.
pub struct FrameStream {
    inner: TcpStream,
    addr: String,
}

impl FrameStream {
    /// Sends one frame: 4-byte big-endian length, then the bytes.
    pub fn send_frame(&mut self, frame: &[u8]) -> Result<()> {
        let len = u32::try_from(frame.len()).map_err(|_| Error::Transport {
            addr: self.addr.clone(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidInput, "frame too large"),
        })?;
        let io = |source| Error::Transport {
            addr: self.addr.clone(),
            source,
        };
        self.inner.write_all(&len.to_be_bytes()).map_err(io)?;
        self.inner.write_all(frame).map_err(io)?;
        Ok(())
    }

    /// Blocks for the next frame. Zero-length frames are legal.
    pub fn recv_frame(&mut self) -> Result<Vec<u8>> {
        let io = |source| Error::Transport {
            addr: self.addr.clone(),
            source,
        };
        let mut len_bytes = [0u8; 4];
        self.inner.read_exact(&mut len_bytes).map_err(io)?;
        let len = u32::from_be_bytes(len_bytes) as usize;
        if len > MAX_FRAME_LEN {
            return Err(Error::Transport {
                addr: self.addr.clone(),
                source: std::io::Error::new(std::io::ErrorKind::InvalidData, "frame length insane"),
            });
        }
        let mut frame = vec![0u8; len];
        self.inner.read_exact(&mut frame).map_err(io)?;
        Ok(frame)
    }

    pub fn set_read_timeout(&mut self, timeout: Option<Duration>) -> Result<()> {
        self.inner
            .set_read_timeout(timeout)
            .map_err(|source| Error::Transport {
                addr: self.addr.clone(),
                source,
            })
    }

    pub fn peer_addr(&self) -> String {
        self.addr.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node_net(hook: Option<AdversaryHook>) -> (SimNet, LinkId) {
        let mut net = SimNet::new(1);
        net.register("a").unwrap();
        net.register("b").unwrap();
        let link = net.connect("a", "b", hook).unwrap();
        (net, link)
    }

    #[test]
    fn passthrough_delivers_identically() {
        let (mut net, _) = two_node_net(None);
        net.send("a", "b", b"frame-1").unwrap();
        assert_eq!(net.step(), 1);
        assert_eq!(net.recv("b"), Some(("a".to_string(), b"frame-1".to_vec())));
        assert_eq!(net.recv("b"), None);
    }

    #[test]
    fn per_sender_order_preserved() {
        let (mut net, _) = two_node_net(None);
        net.send("a", "b", b"one").unwrap();
        net.send("a", "b", b"two").unwrap();
        net.step();
        assert_eq!(net.recv("b").unwrap().1, b"one");
        assert_eq!(net.recv("b").unwrap().1, b"two");
    }

    #[test]
    fn eavesdrop_copies_without_altering() {
        let hook = AdversaryHook::new(AdversaryMode::Eavesdrop, HookDirection::Both);
        let (mut net, link) = two_node_net(Some(hook));
        net.send("a", "b", b"secret").unwrap();
        net.step();
        assert_eq!(net.recv("b").unwrap().1, b"secret");
        assert_eq!(net.capture_log(link), &[b"secret".to_vec()]);
    }

    #[test]
    fn drop_all_delivers_nothing() {
        let hook = AdversaryHook::new(AdversaryMode::Drop(1.0), HookDirection::Both);
        let (mut net, _) = two_node_net(Some(hook));
        net.send("a", "b", b"gone").unwrap();
        assert_eq!(net.step(), 0);
        assert_eq!(net.recv("b"), None);
    }

    #[test]
    fn tamper_alters_exactly_configured_bytes() {
        let hook = AdversaryHook::new(
            AdversaryMode::Tamper(TamperRule {
                positions: vec![0, 3],
                xor_mask: 0xFF,
            }),
            HookDirection::AToB,
        );
        let (mut net, _) = two_node_net(Some(hook));
        net.send("a", "b", &[1, 2, 3, 4, 5]).unwrap();
        net.step();
        assert_eq!(net.recv("b").unwrap().1, vec![0xFE, 2, 3, 0xFB, 5]);
    }

    #[test]
    fn replay_delivers_twice_across_two_steps() {
        let hook = AdversaryHook::new(AdversaryMode::Replay(1), HookDirection::AToB);
        let (mut net, _) = two_node_net(Some(hook));
        net.send("a", "b", b"again").unwrap();
        assert_eq!(net.step(), 1);
        assert_eq!(net.recv("b").unwrap().1, b"again");
        assert_eq!(net.recv("b"), None);
        assert!(net.step() >= 1);
        assert_eq!(net.recv("b").unwrap().1, b"again");
    }

    #[test]
    fn flood_fills_target_inbox() {
        let hook = AdversaryHook::new(
            AdversaryMode::Flood { rate: 8, duration: 2 },
            HookDirection::AToB,
        );
        let (mut net, _) = two_node_net(Some(hook));
        net.step(); // spawn round 1
        net.step(); // delivers round 1, spawns round 2
        net.step(); // delivers round 2; flood expired
        net.step();
        assert_eq!(net.inbox_len("b"), 16);
    }

    #[test]
    fn duplicate_link_and_unknown_endpoint_error() {
        let (mut net, _) = two_node_net(None);
        assert!(net.connect("a", "b", None).is_err());
        assert!(net.connect("b", "a", None).is_err());
        assert!(net.send("a", "zzz", b"x").is_err());
        assert!(net.register("a").is_err());
    }

    #[test]
    fn seeded_runs_are_reproducible() {
        let run = |seed| {
            let hook = AdversaryHook::new(
                AdversaryMode::Flood { rate: 4, duration: 3 },
                HookDirection::AToB,
            );
            let mut net = SimNet::new(seed);
            net.register("a").unwrap();
            net.register("b").unwrap();
            net.connect("a", "b", Some(hook)).unwrap();
            let mut frames = Vec::new();
            for _ in 0..5 {
                net.step();
                while let Some((_, f)) = net.recv("b") {
                    frames.push(f);
                }
            }
            frames
        };
        assert_eq!(run(42), run(42));
        assert_ne!(run(42), run(43));
    }

    #[test]
    fn loopback_roundtrip_and_empty_frame() {
        let listener = tcp_listen("127.0.0.1:0").unwrap();
        let addr = listener.local_addr().unwrap();

        let handle = std::thread::spawn(move || {
            let mut conn = listener.accept().unwrap();
            let got = conn.recv_frame().unwrap();
            conn.send_frame(&got).unwrap();
            let empty = conn.recv_frame().unwrap();
            assert!(empty.is_empty());
            conn.send_frame(b"").unwrap();
        });

        let mut stream = tcp_connect(&addr).unwrap();
        stream.send_frame(b"ping-pong").unwrap();
        assert_eq!(stream.recv_frame().unwrap(), b"ping-pong");
        stream.send_frame(b"").unwrap();
        assert_eq!(stream.recv_frame().unwrap(), b"");
        handle.join().unwrap();
    }

    #[test]
    fn connect_to_unbound_port_fails_with_address() {
        let err = tcp_connect("127.0.0.1:1").unwrap_err();
        match err {
            Error::Transport { addr, .. } => assert_eq!(addr, "127.0.0.1:1"),
            other => panic!("unexpected error {other:?}"),
        }
    }
}
