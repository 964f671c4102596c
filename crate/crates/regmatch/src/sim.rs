//! Round-synchronous message passing.
//!
//! In round `t` every unfinished node reads the messages its neighbors sent in
//! round `t - 1` (nothing in round 0), writes one message per port, and may
//! commit a final output. The round of that commit is the node's finish time.
//! Messages written in the committing round are still delivered; afterwards
//! the node is silent. Ports are numbered by sorted neighbor id.

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::graph::{Graph, NodeId};
use crate::rng::{derive_seed, stream};
use crate::Rational;

/// An opaque payload with an explicit bit length. Zero bits means "nothing sent".
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Message {
    bytes: SmallVec<[u8; 20]>,
    bits: u32,
}

impl Message {
    pub fn empty() -> Message {
        Message::default()
    }

    /// `bits` low bits of `value`, little endian.
    pub fn from_value(value: u128, bits: u32) -> Message {
        assert!(bits <= 128);
        let nbytes = bits.div_ceil(8) as usize;
        Message { bytes: SmallVec::from_slice(&value.to_le_bytes()[..nbytes]), bits }
    }

    pub fn from_bytes(bytes: &[u8], bits: u32) -> Message {
        assert!(bits as usize <= 8 * bytes.len());
        Message { bytes: SmallVec::from_slice(bytes), bits }
    }

    pub fn is_empty(&self) -> bool {
        self.bits == 0
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn bytes(&self) -> &[u8] {
        &self.bytes
    }

    /// Inverse of [`Message::from_value`].
    pub fn value(&self) -> u128 {
        let mut buf = [0u8; 16];
        let k = self.bytes.len().min(16);
        buf[..k].copy_from_slice(&self.bytes[..k]);
        let v = u128::from_le_bytes(buf);
        if self.bits >= 128 {
            v
        } else {
            v & ((1u128 << self.bits) - 1)
        }
    }
}

/// A per-node program. All state lives in `State`; the program object itself
/// holds only global parameters known to every node.
pub trait NodeProgram {
    type State;
    type Output: Clone;

    fn init(&self, node: NodeId, degree: usize, local_seed: u64) -> Self::State;

    /// `inbox[p]` came from port `p` in the previous round; `outbox[p]` starts
    /// empty. Returning `Some` commits the node's output.
    fn on_round(
        &self,
        state: &mut Self::State,
        round: usize,
        inbox: &[Message],
        outbox: &mut [Message],
    ) -> Option<Self::Output>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trace<O> {
    pub rounds_executed: usize,
    pub finish_round: Vec<Option<usize>>,
    pub outputs: Vec<Option<O>>,
    pub max_message_bits: u32,
    pub total_messages: u64,
    pub budget_exhausted: bool,
}

impl<O> Trace<O> {
    pub fn all_finished(&self) -> bool {
        self.finish_round.iter().all(Option::is_some)
    }
}

/// Reverse slot of every adjacency slot: where `v`'s message to `w` lands in
/// `w`'s inbox.
fn reverse_slots(g: &Graph) -> Vec<usize> {
    let mut first = vec![usize::MAX; g.edge_count()];
    let mut rev = vec![0; 2 * g.edge_count()];
    for v in 0..g.node_count() {
        let base = g.slot_offset(v);
        for (p, &e) in g.incident_edges(v).iter().enumerate() {
            let s = base + p;
            if first[e] == usize::MAX {
                first[e] = s;
            } else {
                rev[s] = first[e];
                rev[first[e]] = s;
            }
        }
    }
    rev
}

/// Run `p` on `g` for at most `budget` rounds (indices `0..budget`).
pub fn run_rounds<P: NodeProgram>(g: &Graph, p: &P, budget: usize, seed: u64) -> Trace<P::Output> {
    let n = g.node_count();
    let rev = reverse_slots(g);
    let mut states: Vec<P::State> =
        (0..n).map(|v| p.init(v, g.degree(v), derive_seed(seed, stream::NODE, v as u64))).collect();
    let mut inbox = vec![Message::empty(); 2 * g.edge_count()];
    let mut outbox = vec![Message::empty(); 2 * g.edge_count()];
    let mut finish_round = vec![None; n];
    let mut outputs: Vec<Option<P::Output>> = vec![None; n];
    let mut active: Vec<NodeId> = (0..n).collect();
    let mut max_bits = 0u32;
    let mut total = 0u64;
    let mut rounds = 0;

    while rounds < budget && !active.is_empty() {
        let round = rounds;
        for &v in &active {
            let (a, b) = (g.slot_offset(v), g.slot_offset(v) + g.degree(v));
            if let Some(o) = p.on_round(&mut states[v], round, &inbox[a..b], &mut outbox[a..b]) {
                finish_round[v] = Some(round);
                outputs[v] = Some(o);
            }
        }
        for &v in &active {
            let a = g.slot_offset(v);
            for s in a..a + g.degree(v) {
                inbox[s] = Message::empty();
            }
        }
        for &v in &active {
            let a = g.slot_offset(v);
            for s in a..a + g.degree(v) {
                let m = std::mem::take(&mut outbox[s]);
                if !m.is_empty() {
                    total += 1;
                    max_bits = max_bits.max(m.bits());
                    inbox[rev[s]] = m;
                }
            }
        }
        active.retain(|&v| finish_round[v].is_none());
        rounds += 1;
    }
    Trace {
        rounds_executed: rounds,
        finish_round,
        outputs,
        max_message_bits: max_bits,
        total_messages: total,
        budget_exhausted: !active.is_empty(),
    }
}

/// Mean finish round over all nodes.
pub fn node_averaged_time<O>(t: &Trace<O>) -> Result<Rational> {
    let n = t.finish_round.len();
    let unfinished = t.finish_round.iter().filter(|f| f.is_none()).count();
    if unfinished > 0 {
        return Err(Error::UnfinishedTrace { unfinished, n });
    }
    if n == 0 {
        return Ok(Rational::from_integer(0));
    }
    let sum: i128 = t.finish_round.iter().map(|f| f.unwrap() as i128).sum();
    Ok(Rational::new(sum, n as i128))
}

/// Finish at round 0 with the node's degree as output.
#[derive(Debug, Clone, Copy)]
pub struct ReportDegree;

impl NodeProgram for ReportDegree {
    type State = usize;
    type Output = usize;

    fn init(&self, _node: NodeId, degree: usize, _seed: u64) -> usize {
        degree
    }

    fn on_round(&self, s: &mut usize, _round: usize, _in: &[Message], _out: &mut [Message]) -> Option<usize> {
        Some(*s)
    }
}

/// Send the node id on every port for `rounds` rounds, then finish with the
/// ids heard in the last round.
#[derive(Debug, Clone, Copy)]
pub struct EchoId {
    pub rounds: usize,
}

impl NodeProgram for EchoId {
    type State = NodeId;
    type Output = Vec<u128>;

    fn init(&self, node: NodeId, _degree: usize, _seed: u64) -> NodeId {
        node
    }

    fn on_round(&self, id: &mut NodeId, round: usize, inbox: &[Message], outbox: &mut [Message]) -> Option<Vec<u128>> {
        if round == self.rounds {
            return Some(inbox.iter().map(Message::value).collect());
        }
        for m in outbox.iter_mut() {
            *m = Message::from_value(*id as u128, 64);
        }
        None
    }
}
