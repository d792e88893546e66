//! Master/worker distributed training over a message-passing transport.
//!
//! Workers train disjoint contiguous slices of the forest's trees (with the
//! same derived seeds a single-process run would use), then each sends one
//! message to the master carrying its serialized tree blocks. The master
//! gathers exactly one message per worker and assembles the full forest, so
//! the gather moves `P` messages and the sum of the per-worker payload
//! sizes — nothing else. Both a loopback transport (threads in one process)
//! and a TCP transport speak the same wire format and produce identical
//! forests and identical accounting.

use std::fmt;
use std::fs::File;
use std::io::{self, BufRead, BufReader, Cursor, Read, Write};
use std::net::{SocketAddr, TcpListener, TcpStream, ToSocketAddrs};
use std::ops::Range;
use std::path::Path;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::error::{Error, Result};
use crate::forest::{encode_tree_block, train_tree_range, ForestModel, FORMAT_VERSION};
use crate::sparse::Dataset;
use crate::tree::{TrainConfig, TrainedTree};

/// Wire magic for a worker's gather message.
pub const GATHER_MAGIC: [u8; 4] = *b"DXMW";

/// Bytes of wire framing around each gather payload: magic, worker rank,
/// payload length.
pub const MESSAGE_HEADER_BYTES: u64 = 4 + 4 + 8;

pub const DEFAULT_RECEIVE_TIMEOUT: Duration = Duration::from_secs(30);
pub const DEFAULT_CONNECT_RETRIES: u32 = 3;

/// Upper bound on a single TCP frame; a corrupt length field must not
/// trigger a giant allocation.
const MAX_FRAME_BYTES: usize = 1 << 33;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Role {
    Master,
    Worker,
}

/// Cluster layout: `workers` peers plus the master at rank 0. Tree
/// assignments are contiguous ranges by worker rank, so the seed mapping is
/// reproducible from the configuration alone.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterConfig {
    pub workers: usize,
    pub role: Role,
    /// 0 is the master; workers are 1..=workers.
    pub rank: usize,
    /// Address per rank (index 0 is the master). May be empty for loopback.
    pub roster: Vec<String>,
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        if self.workers == 0 {
            return Err(Error::InvalidConfig(
                "cluster needs at least 1 worker".into(),
            ));
        }
        match self.role {
            Role::Master if self.rank != 0 => Err(Error::InvalidConfig(format!(
                "master must be rank 0, got {}",
                self.rank
            ))),
            Role::Worker if self.rank == 0 || self.rank > self.workers => {
                Err(Error::InvalidConfig(format!(
                    "worker rank must be in 1..={}, got {}",
                    self.workers, self.rank
                )))
            }
            _ => Ok(()),
        }
    }

    /// Contiguous per-worker tree ranges partitioning `0..n_trees`.
    pub fn assignments(&self, n_trees: usize) -> Vec<Range<usize>> {
        contiguous_assignments(n_trees, self.workers)
    }

    /// This worker's tree range.
    pub fn worker_range(&self, n_trees: usize) -> Result<Range<usize>> {
        if self.role != Role::Worker {
            return Err(Error::InvalidConfig(
                "worker_range is only defined for workers".into(),
            ));
        }
        let range = self.assignments(n_trees)[self.rank - 1].clone();
        if range.is_empty() {
            return Err(Error::InvalidConfig(format!(
                "worker {} has no trees (forest of {} over {} workers)",
                self.rank, n_trees, self.workers
            )));
        }
        Ok(range)
    }
}

/// Balanced contiguous split of `0..n_trees` into `workers` ranges.
pub fn contiguous_assignments(n_trees: usize, workers: usize) -> Vec<Range<usize>> {
    let base = n_trees / workers;
    let remainder = n_trees % workers;
    let mut ranges = Vec::with_capacity(workers);
    let mut start = 0;
    for w in 0..workers {
        let len = base + usize::from(w < remainder);
        ranges.push(start..start + len);
        start += len;
    }
    ranges
}

/// Per-peer message accounting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PeerFlow {
    pub peer: usize,
    pub messages: u64,
    /// Gather payload bytes (tree-set blocks, excluding wire framing).
    pub payload_bytes: u64,
    /// Full message bytes including the wire header.
    pub message_bytes: u64,
}

/// Message counts, byte volumes, and phase timings for one node's part in
/// the gather.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CommStats {
    pub flows: Vec<PeerFlow>,
    pub phases: Vec<(String, f64)>,
}

impl CommStats {
    fn record(&mut self, peer: usize, payload_bytes: u64, message_bytes: u64) {
        if let Some(flow) = self.flows.iter_mut().find(|f| f.peer == peer) {
            flow.messages += 1;
            flow.payload_bytes += payload_bytes;
            flow.message_bytes += message_bytes;
        } else {
            self.flows.push(PeerFlow {
                peer,
                messages: 1,
                payload_bytes,
                message_bytes,
            });
        }
    }

    fn phase(&mut self, name: &str, started: Instant) {
        self.phases
            .push((name.to_string(), started.elapsed().as_secs_f64()));
    }

    pub fn total_messages(&self) -> u64 {
        self.flows.iter().map(|f| f.messages).sum()
    }

    pub fn total_payload_bytes(&self) -> u64 {
        self.flows.iter().map(|f| f.payload_bytes).sum()
    }

    pub fn total_message_bytes(&self) -> u64 {
        self.flows.iter().map(|f| f.message_bytes).sum()
    }

    pub fn phase_seconds(&self, name: &str) -> Option<f64> {
        self.phases.iter().find(|(n, _)| n == name).map(|&(_, s)| s)
    }
}

/// Duplex message channel: send a byte message to a peer, or block until
/// one arrives. Messages arrive intact and in per-peer order.
pub trait Transport {
    fn send(&mut self, peer: usize, message: &[u8]) -> Result<()>;
    fn receive(&mut self) -> Result<(usize, Vec<u8>)>;
}

/// In-process transport over channels; every rank gets one endpoint.
pub struct LoopbackTransport {
    rank: usize,
    senders: Vec<mpsc::Sender<(usize, Vec<u8>)>>,
    receiver: mpsc::Receiver<(usize, Vec<u8>)>,
    timeout: Duration,
}

/// Build a connected loopback network of `n_ranks` endpoints (rank 0 is the
/// master), returned in rank order.
pub fn loopback_network(n_ranks: usize) -> Vec<LoopbackTransport> {
    let mut senders = Vec::with_capacity(n_ranks);
    let mut receivers = Vec::with_capacity(n_ranks);
    for _ in 0..n_ranks {
        let (tx, rx) = mpsc::channel();
        senders.push(tx);
        receivers.push(rx);
    }
    receivers
        .into_iter()
        .enumerate()
        .map(|(rank, receiver)| LoopbackTransport {
            rank,
            senders: senders.clone(),
            receiver,
            timeout: DEFAULT_RECEIVE_TIMEOUT,
        })
        .collect()
}

impl LoopbackTransport {
    pub fn set_timeout(&mut self, timeout: Duration) {
        self.timeout = timeout;
    }
}

impl Transport for LoopbackTransport {
    fn send(&mut self, peer: usize, message: &[u8]) -> Result<()> {
        let sender = self.senders.get(peer).ok_or_else(|| Error::Transport {
            peer,
            message: "unknown peer".into(),
        })?;
        sender
            .send((self.rank, message.to_vec()))
            .map_err(|_| Error::Transport {
                peer,
                message: "peer endpoint dropped".into(),
            })
    }

    fn receive(&mut self) -> Result<(usize, Vec<u8>)> {
        match self.receiver.recv_timeout(self.timeout) {
            Ok(pair) => Ok(pair),
            Err(mpsc::RecvTimeoutError::Timeout) => Err(Error::ReceiveTimeout(self.timeout)),
            Err(mpsc::RecvTimeoutError::Disconnected) => Err(Error::Transport {
                peer: self.rank,
                message: "all senders dropped".into(),
            }),
        }
    }
}

/// TCP transport over a `rank -> host:port` roster. Each message is one
/// connection carrying a `sender_rank, length, bytes` frame.
pub struct TcpTransport {
    rank: usize,
    roster: Vec<String>,
    listener: Option<TcpListener>,
    timeout: Duration,
    connect_retries: u32,
}

impl TcpTransport {
    /// Bind the listener for this rank's roster entry (receiving side).
    pub fn bind(rank: usize, roster: Vec<String>) -> Result<Self> {
        let addr = roster.get(rank).ok_or_else(|| {
            Error::InvalidConfig(format!("roster has no entry for rank {}", rank))
        })?;
        let listener = TcpListener::bind(addr).map_err(|e| Error::Transport {
            peer: rank,
            message: format!("cannot bind {}: {}", addr, e),
        })?;
        listener.set_nonblocking(true).map_err(Error::Io)?;
        Ok(TcpTransport {
            rank,
            roster,
            listener: Some(listener),
            timeout: DEFAULT_RECEIVE_TIMEOUT,
            connect_retries: DEFAULT_CONNECT_RETRIES,
        })
    }

    /// Sending-only endpoint (workers never listen during the gather).
    pub fn connect_only(rank: usize, roster: Vec<String>) -> Self {
        TcpTransport {
            rank,
            roster,
            listener: None,
            timeout: DEFAULT_RECEIVE_TIMEOUT,
            connect_retries: DEFAULT_CONNECT_RETRIES,
        }
    }

    pub fn set_timeout(&mut self, timeout: Duration) {
        self.timeout = timeout;
    }

    /// Actual bound address, useful when binding port 0.
    pub fn local_addr(&self) -> Option<SocketAddr> {
        self.listener.as_ref().and_then(|l| l.local_addr().ok())
    }
}

impl Transport for TcpTransport {
    fn send(&mut self, peer: usize, message: &[u8]) -> Result<()> {
        let addr = self.roster.get(peer).ok_or_else(|| Error::Transport {
            peer,
            message: "peer missing from roster".into(),
        })?;
        let addrs: Vec<SocketAddr> = addr
            .to_socket_addrs()
            .map_err(|e| Error::Transport {
                peer,
                message: format!("cannot resolve {}: {}", addr, e),
            })?
            .collect();

        let mut last_err = None;
        for attempt in 0..=self.connect_retries {
            if attempt > 0 {
                std::thread::sleep(Duration::from_millis(200 * attempt as u64));
            }
            match TcpStream::connect(&addrs[..]) {
                Ok(mut stream) => {
                    let io_result = (|| -> io::Result<()> {
                        stream.set_nodelay(true)?;
                        stream.write_u32::<LittleEndian>(self.rank as u32)?;
                        stream.write_u64::<LittleEndian>(message.len() as u64)?;
                        stream.write_all(message)?;
                        stream.flush()
                    })();
                    match io_result {
                        Ok(()) => return Ok(()),
                        Err(e) => last_err = Some(format!("write failed: {}", e)),
                    }
                }
                Err(e) => last_err = Some(format!("connect to {} failed: {}", addr, e)),
            }
        }
        Err(Error::Transport {
            peer,
            message: format!(
                "{} (after {} retries)",
                last_err.unwrap_or_default(),
                self.connect_retries
            ),
        })
    }

    fn receive(&mut self) -> Result<(usize, Vec<u8>)> {
        let listener = self.listener.as_ref().ok_or_else(|| Error::Transport {
            peer: self.rank,
            message: "transport was not bound for receiving".into(),
        })?;
        let deadline = Instant::now() + self.timeout;
        let mut stream = loop {
            match listener.accept() {
                Ok((stream, _)) => break stream,
                Err(e) if e.kind() == io::ErrorKind::WouldBlock => {
                    if Instant::now() >= deadline {
                        return Err(Error::ReceiveTimeout(self.timeout));
                    }
                    std::thread::sleep(Duration::from_millis(5));
                }
                Err(e) => {
                    return Err(Error::Transport {
                        peer: self.rank,
                        message: format!("accept failed: {}", e),
                    })
                }
            }
        };
        stream.set_nonblocking(false).map_err(Error::Io)?;
        stream
            .set_read_timeout(Some(self.timeout))
            .map_err(Error::Io)?;
        let read_result = (|| -> io::Result<(usize, Vec<u8>)> {
            let sender = stream.read_u32::<LittleEndian>()? as usize;
            let len = stream.read_u64::<LittleEndian>()? as usize;
            if len > MAX_FRAME_BYTES {
                return Err(io::Error::new(
                    io::ErrorKind::InvalidData,
                    format!("frame of {} bytes exceeds the {} limit", len, MAX_FRAME_BYTES),
                ));
            }
            let mut message = vec![0u8; len];
            stream.read_exact(&mut message)?;
            Ok((sender, message))
        })();
        read_result.map_err(|e| Error::Transport {
            peer: self.rank,
            message: format!("frame read failed: {}", e),
        })
    }
}

/// Encode a worker's gather message: magic, rank, payload length, payload.
pub fn encode_worker_message(rank: usize, payload: &[u8]) -> Vec<u8> {
    let mut message = Vec::with_capacity(MESSAGE_HEADER_BYTES as usize + payload.len());
    message.extend_from_slice(&GATHER_MAGIC);
    message
        .write_u32::<LittleEndian>(rank as u32)
        .expect("vec write");
    message
        .write_u64::<LittleEndian>(payload.len() as u64)
        .expect("vec write");
    message.extend_from_slice(payload);
    message
}

/// Decode a gather message into `(worker rank, payload)`.
pub fn decode_worker_message(message: &[u8]) -> Result<(usize, &[u8])> {
    let mut cursor = Cursor::new(message);
    let mut magic = [0u8; 4];
    cursor
        .read_exact(&mut magic)
        .map_err(|_| Error::Truncated("gather message header".into()))?;
    if magic != GATHER_MAGIC {
        return Err(Error::BadMagic {
            expected: GATHER_MAGIC,
            found: magic,
        });
    }
    let rank = cursor
        .read_u32::<LittleEndian>()
        .map_err(|_| Error::Truncated("gather message rank".into()))? as usize;
    let len = cursor
        .read_u64::<LittleEndian>()
        .map_err(|_| Error::Truncated("gather message length".into()))? as usize;
    let start = cursor.position() as usize;
    let payload = &message[start..];
    if payload.len() != len {
        return Err(Error::Truncated(format!(
            "gather payload: declared {} bytes, got {}",
            len,
            payload.len()
        )));
    }
    Ok((rank, payload))
}

fn encode_tree_set(trees: &[TrainedTree], k: usize, d_x: usize, d_y: usize) -> Vec<u8> {
    let mut payload = Vec::new();
    payload
        .write_u32::<LittleEndian>(FORMAT_VERSION)
        .expect("vec write");
    payload
        .write_u32::<LittleEndian>(k as u32)
        .expect("vec write");
    payload
        .write_u64::<LittleEndian>(d_x as u64)
        .expect("vec write");
    payload
        .write_u64::<LittleEndian>(d_y as u64)
        .expect("vec write");
    payload
        .write_u32::<LittleEndian>(trees.len() as u32)
        .expect("vec write");
    for tree in trees {
        let block = encode_tree_block(tree);
        payload
            .write_u64::<LittleEndian>(block.len() as u64)
            .expect("vec write");
        payload.extend_from_slice(&block);
    }
    payload
}

struct TreeSet {
    d_x: usize,
    d_y: usize,
    trees: Vec<TrainedTree>,
}

fn decode_tree_set(payload: &[u8], expected_k: usize) -> Result<TreeSet> {
    let mut cursor = Cursor::new(payload);
    let version = cursor
        .read_u32::<LittleEndian>()
        .map_err(|_| Error::Truncated("tree-set version".into()))?;
    if version != FORMAT_VERSION {
        return Err(Error::UnsupportedVersion {
            found: version,
            supported: FORMAT_VERSION,
        });
    }
    let k = cursor
        .read_u32::<LittleEndian>()
        .map_err(|_| Error::Truncated("tree-set k".into()))? as usize;
    if k != expected_k {
        return Err(Error::Corrupt(format!(
            "worker payload trained with k = {}, master expects {}",
            k, expected_k
        )));
    }
    let d_x = cursor
        .read_u64::<LittleEndian>()
        .map_err(|_| Error::Truncated("tree-set d_x".into()))? as usize;
    let d_y = cursor
        .read_u64::<LittleEndian>()
        .map_err(|_| Error::Truncated("tree-set d_y".into()))? as usize;
    let count = cursor
        .read_u32::<LittleEndian>()
        .map_err(|_| Error::Truncated("tree-set count".into()))? as usize;
    let mut trees = Vec::with_capacity(count);
    for _ in 0..count {
        let len = cursor
            .read_u64::<LittleEndian>()
            .map_err(|_| Error::Truncated("tree block length".into()))? as usize;
        let start = cursor.position() as usize;
        let end = start + len;
        if end > payload.len() {
            return Err(Error::Truncated("tree block body".into()));
        }
        trees.push(crate::forest::decode_tree_block(
            &payload[start..end],
            k,
            d_y,
        )?);
        cursor.set_position(end as u64);
    }
    if cursor.position() != payload.len() as u64 {
        return Err(Error::Corrupt("tree-set payload has trailing bytes".into()));
    }
    Ok(TreeSet { d_x, d_y, trees })
}

/// Worker side of the gather: train the assigned tree range, encode it, and
/// send exactly one message to the master.
pub fn run_worker<T: Transport>(
    dataset: &Dataset,
    cfg: &TrainConfig,
    cluster: &ClusterConfig,
    transport: &mut T,
) -> Result<CommStats> {
    cluster.validate()?;
    let range = cluster.worker_range(cfg.n_trees)?;
    let mut stats = CommStats::default();

    let started = Instant::now();
    let trained = train_tree_range(dataset, cfg, range)?;
    let trees: Vec<TrainedTree> = trained.into_iter().map(|(tree, _)| tree).collect();
    stats.phase("train", started);

    let started = Instant::now();
    let payload = encode_tree_set(&trees, cfg.k, dataset.d_x(), dataset.d_y());
    let message = encode_worker_message(cluster.rank, &payload);
    stats.phase("encode", started);

    let started = Instant::now();
    transport.send(0, &message)?;
    stats.record(0, payload.len() as u64, message.len() as u64);
    stats.phase("send", started);
    Ok(stats)
}

/// Master side of the gather: receive exactly one message per worker,
/// validate and decode the payloads, and assemble the forest ordered by
/// tree index.
pub fn run_master<T: Transport>(
    cfg: &TrainConfig,
    cluster: &ClusterConfig,
    transport: &mut T,
) -> Result<(ForestModel, CommStats)> {
    cluster.validate()?;
    if cluster.role != Role::Master {
        return Err(Error::InvalidConfig(
            "run_master needs the master role".into(),
        ));
    }
    let expected = cluster.workers;
    let mut stats = CommStats::default();
    let mut payloads: Vec<Option<Vec<u8>>> = vec![None; expected + 1];

    let started = Instant::now();
    let mut received = 0usize;
    while received < expected {
        let (_, message) = transport.receive().map_err(|e| match e {
            Error::ReceiveTimeout(_) => {
                Error::MissingWorkers((1..=expected).filter(|&r| payloads[r].is_none()).collect())
            }
            other => other,
        })?;
        let (rank, payload) = decode_worker_message(&message)?;
        if rank == 0 || rank > expected {
            return Err(Error::Corrupt(format!(
                "gather message from out-of-range rank {}",
                rank
            )));
        }
        if payloads[rank].is_some() {
            return Err(Error::DuplicateWorker(rank));
        }
        stats.record(rank, payload.len() as u64, message.len() as u64);
        payloads[rank] = Some(payload.to_vec());
        received += 1;
    }
    stats.phase("gather", started);

    let started = Instant::now();
    let mut trees: Vec<TrainedTree> = Vec::with_capacity(cfg.n_trees);
    let mut dims: Option<(usize, usize)> = None;
    for (rank, slot) in payloads.iter_mut().enumerate().skip(1) {
        let payload = slot.take().expect("gathered above");
        let set = decode_tree_set(&payload, cfg.k)?;
        match dims {
            None => dims = Some((set.d_x, set.d_y)),
            Some(d) if d != (set.d_x, set.d_y) => {
                return Err(Error::Corrupt(format!(
                    "worker {} trained on shape {:?}, others on {:?}",
                    rank,
                    (set.d_x, set.d_y),
                    d
                )))
            }
            _ => {}
        }
        trees.extend(set.trees);
    }
    trees.sort_by_key(|t| t.tree_index);
    let indices: Vec<usize> = trees.iter().map(|t| t.tree_index).collect();
    if indices != (0..cfg.n_trees).collect::<Vec<_>>() {
        return Err(Error::Corrupt(format!(
            "assembled tree indices {:?} do not cover 0..{}",
            indices, cfg.n_trees
        )));
    }
    let (d_x, d_y) = dims.expect("at least one worker");
    let model = ForestModel {
        format_version: FORMAT_VERSION,
        config: *cfg,
        d_x,
        d_y,
        trees,
    };
    stats.phase("assemble", started);
    Ok((model, stats))
}

/// Measured gather accounting against the exact expectations: one message
/// per worker and the sum of the per-worker payload sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct CommReport {
    pub workers: usize,
    pub messages: u64,
    pub payload_bytes: u64,
    pub expected_messages: u64,
    pub expected_payload_bytes: u64,
    pub header_overhead_bytes: u64,
    pub model_bytes: u64,
    pub phases: Vec<(String, f64)>,
}

impl CommReport {
    /// Errors unless the measured counts equal the predicted ones exactly.
    pub fn validate(&self) -> std::result::Result<(), String> {
        if self.messages != self.expected_messages {
            return Err(format!(
                "gather used {} messages, expected exactly {}",
                self.messages, self.expected_messages
            ));
        }
        if self.payload_bytes != self.expected_payload_bytes {
            return Err(format!(
                "gather moved {} payload bytes, expected exactly {}",
                self.payload_bytes, self.expected_payload_bytes
            ));
        }
        Ok(())
    }
}

impl fmt::Display for CommReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "workers (P):            {}", self.workers)?;
        writeln!(
            f,
            "messages:               {} (predicted {})",
            self.messages, self.expected_messages
        )?;
        writeln!(
            f,
            "payload bytes:          {} (predicted {})",
            self.payload_bytes, self.expected_payload_bytes
        )?;
        writeln!(f, "wire header overhead:   {}", self.header_overhead_bytes)?;
        writeln!(f, "assembled model bytes:  {}", self.model_bytes)?;
        for (name, seconds) in &self.phases {
            writeln!(f, "phase {:<17} {:.3}s", format!("{}:", name), seconds)?;
        }
        Ok(())
    }
}

/// Build the gather report for a master-side `CommStats`, recomputing the
/// expected payload sizes from the assembled model and the assignment.
pub fn comm_report(stats: &CommStats, cluster: &ClusterConfig, model: &ForestModel) -> CommReport {
    let ranges = cluster.assignments(model.config.n_trees);
    let expected_payload_bytes: u64 = ranges
        .iter()
        .filter(|r| !r.is_empty())
        .map(|r| {
            encode_tree_set(
                &model.trees[r.start..r.end],
                model.config.k,
                model.d_x,
                model.d_y,
            )
            .len() as u64
        })
        .sum();
    CommReport {
        workers: cluster.workers,
        messages: stats.total_messages(),
        payload_bytes: stats.total_payload_bytes(),
        expected_messages: cluster.workers as u64,
        expected_payload_bytes,
        header_overhead_bytes: stats.total_message_bytes() - stats.total_payload_bytes(),
        model_bytes: crate::forest::model_bytes(model),
        phases: stats.phases.clone(),
    }
}

/// Parse a roster file: one `rank host:port` line per peer, `#` comments.
/// Ranks must cover 0..n contiguously.
pub fn parse_roster<P: AsRef<Path>>(path: P) -> Result<Vec<String>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::File {
        path: path.to_path_buf(),
        source,
    })?;
    let mut entries: Vec<(usize, String)> = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut fields = line.split_whitespace();
        let (rank, addr) = match (fields.next(), fields.next(), fields.next()) {
            (Some(rank), Some(addr), None) => (rank, addr),
            _ => {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("roster line must be `rank host:port`, got `{}`", line),
                })
            }
        };
        let rank: usize = rank.parse().map_err(|_| Error::Parse {
            line: i + 1,
            message: format!("rank `{}` is not a number", rank),
        })?;
        entries.push((rank, addr.to_string()));
    }
    entries.sort_by_key(|&(rank, _)| rank);
    for (expected, &(rank, _)) in entries.iter().enumerate() {
        if rank != expected {
            return Err(Error::InvalidConfig(format!(
                "roster ranks must cover 0..{} contiguously; missing rank {}",
                entries.len(),
                expected
            )));
        }
    }
    Ok(entries.into_iter().map(|(_, addr)| addr).collect())
}
