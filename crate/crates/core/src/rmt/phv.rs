//! Packet header vector: the bounded per-event metadata record that flows
//! forward through the pipeline.

use crate::seq::SeqNum;
use serde::{Deserialize, Serialize};

/// Event class selecting the fast path an event takes through the pipeline.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    /// Segment arriving from the network (data and/or ACK).
    Rx,
    /// Payload pushed by the host for transmission.
    Tx,
    /// Credit/replenish/window-update event (packet generator or host).
    Sync,
    /// Payload-free synthetic segment committing a reassembly merge.
    PseudoMerge,
    /// Payload-free synthetic segment carrying acknowledgment state.
    PseudoAck,
}

/// Header flags carried on the wire.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PhvFlags {
    /// Congestion-experienced mark applied by a queue.
    pub ecn_marked: bool,
    /// Acknowledgment fields (`ack_seq`, `wnd`) are valid.
    pub ack: bool,
    /// Receiver echo of an ECN mark back to the sender.
    pub ecn_echo: bool,
    /// SYNC sub-kind: host supplies receive-window bytes in `len`.
    pub replenish: bool,
    /// SYNC sub-kind: force a window-update acknowledgment.
    pub wnd_update: bool,
}

/// Keys of the bounded forward-only scratch map. Values are 32-bit.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[repr(u8)]
pub enum ScratchKey {
    /// Packed traversal flags ([`PathWord`]).
    PathWord,
    /// Accepted payload length after trimming.
    AcceptLen,
    /// `next_seq` snapshot after the optimistic advance.
    NextSeqSnap,
    /// Actual signed `avail` after the validate stage (bit-cast i32).
    AvailAfter,
    /// Packed out-of-order insertion state cascading across interval slots.
    OooIns,
    /// Interval 1 state after this traversal (offsets from the frontier).
    Isl1Head,
    Isl1Tail,
    /// Snapshot of a cascaded (cleared) downstream interval, absolute seqs.
    CascadeStart,
    CascadeEnd,
    /// New `snd_una` after ACK processing.
    UnaNew,
    /// Cumulative-ack advance applied by this traversal.
    UnaAdvance,
    /// Peer advertised window after ACK processing.
    PeerWnd,
    /// Sender SACK island after merge (offsets from `snd_una`).
    SackHead,
    SackTail,
    /// Byte offset of the accepted transmit range within the pushed payload.
    TxPayOff,
    /// Credit balance after the rate-control stage (bit-cast i32).
    CreditBal,
}

pub const SCRATCH_CAPACITY: usize = 16;

#[derive(Clone, Copy, Debug)]
struct ScratchEntry {
    key: ScratchKey,
    value: u32,
    written_at: u8,
}

/// Bounded key→u32 map with the RMT forward-only discipline: an entry
/// written at stage `i` is readable only at stages strictly greater than
/// `i` within the same traversal.
#[derive(Clone, Debug, Default)]
pub struct Scratch {
    entries: Vec<ScratchEntry>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScratchError {
    /// Read of an entry at or before the stage that wrote it.
    ForwardOnly { key: ScratchKey, written_at: u8, read_at: u8 },
    /// More than [`SCRATCH_CAPACITY`] distinct keys in one traversal.
    Overflow { key: ScratchKey },
}

impl Scratch {
    pub fn clear(&mut self) {
        self.entries.clear();
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub(crate) fn write(&mut self, stage: u8, key: ScratchKey, value: u32) -> Result<(), ScratchError> {
        if let Some(e) = self.entries.iter_mut().find(|e| e.key == key) {
            e.value = value;
            e.written_at = stage;
            return Ok(());
        }
        if self.entries.len() >= SCRATCH_CAPACITY {
            return Err(ScratchError::Overflow { key });
        }
        self.entries.push(ScratchEntry { key, value, written_at: stage });
        Ok(())
    }

    pub(crate) fn read(&self, stage: u8, key: ScratchKey) -> Result<Option<u32>, ScratchError> {
        match self.entries.iter().find(|e| e.key == key) {
            None => Ok(None),
            Some(e) if e.written_at < stage => Ok(Some(e.value)),
            Some(e) => Err(ScratchError::ForwardOnly { key, written_at: e.written_at, read_at: stage }),
        }
    }

    /// Unrestricted read used by post-traversal result assembly and tests.
    pub fn peek(&self, key: ScratchKey) -> Option<u32> {
        self.entries.iter().find(|e| e.key == key).map(|e| e.value)
    }
}

/// The per-event packet header vector.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Phv {
    pub kind: EventKind,
    /// Connection index on the processing pipeline.
    pub conn: u32,
    /// First sequence number covered by this event.
    pub seq: SeqNum,
    /// Payload length in bytes. For `PseudoMerge` this may exceed the MTU
    /// payload (the event carries no payload); for SYNC it carries the
    /// credit grant or replenish amount.
    pub len: u32,
    pub flags: PhvFlags,
    /// Cumulative acknowledgment (valid when `flags.ack`).
    pub ack_seq: SeqNum,
    /// Advertised receive window (valid when `flags.ack`).
    pub wnd: u32,
    /// One selective-acknowledgment block, absolute `[start, end)`.
    pub sack: Option<(SeqNum, SeqNum)>,
    /// Timestamp value / echo in microseconds (RTT measurement).
    pub tsval: u32,
    pub tsecr: u32,
    #[serde(skip)]
    pub scratch: Scratch,
}

impl Phv {
    pub fn rx_data(conn: u32, seq: SeqNum, len: u32) -> Phv {
        Phv {
            kind: EventKind::Rx,
            conn,
            seq,
            len,
            flags: PhvFlags::default(),
            ack_seq: SeqNum::ZERO,
            wnd: 0,
            sack: None,
            tsval: 0,
            tsecr: 0,
            scratch: Scratch::default(),
        }
    }

    pub fn tx(conn: u32, seq: SeqNum, len: u32) -> Phv {
        Phv { kind: EventKind::Tx, ..Phv::rx_data(conn, seq, len) }
    }

    pub fn sync_grant(conn: u32, credits: u32) -> Phv {
        Phv { kind: EventKind::Sync, len: credits, ..Phv::rx_data(conn, SeqNum::ZERO, 0) }
    }

    pub fn sync_replenish(conn: u32, bytes: u32) -> Phv {
        let mut p = Phv::sync_grant(conn, bytes);
        p.flags.replenish = true;
        p
    }

    pub fn sync_wnd_update(conn: u32) -> Phv {
        let mut p = Phv::sync_grant(conn, 0);
        p.flags.wnd_update = true;
        p
    }

    /// End of the sequence range covered by this event.
    pub fn seq_end(&self) -> SeqNum {
        self.seq.wrapping_add(self.len)
    }

    /// A pure acknowledgment carries no payload.
    pub fn is_pure_ack(&self) -> bool {
        self.kind == EventKind::Rx && self.len == 0
    }
}

/// RX-path classification shared between stages via the packed path word.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathTag {
    /// No receive-side classification (TX/SYNC traversals).
    None,
    /// In-order data (possibly trimmed) that advanced `next_seq`.
    InOrder,
    /// Entirely below `next_seq`: drop after acknowledging.
    Duplicate,
    /// Ahead of `next_seq`: interval-tracking path.
    Ooo,
    /// Pure acknowledgment, no receive-side processing.
    PureAck,
    /// Failed the definitive window check; payload must not be delivered.
    OowDropped,
}

/// Packed per-traversal flags accumulated across stages in one scratch
/// word. Each stage reads the word written upstream, sets its bits, and
/// writes it back, so downstream stages see the union.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct PathWord {
    pub tag: u32,
    pub in_window: bool,
    /// Out-of-window episode active: acknowledgments advertise window 0.
    pub zero_wnd: bool,
    /// The in-order stream reached interval 1's start this traversal.
    pub island1_closed: bool,
    /// Interval 1 still has bytes past the frontier: a merge is due.
    pub gap_closed: bool,
    pub ooo_tracked: bool,
    pub ooo_dropped: bool,
    pub fast_retx: bool,
    pub rtx_due: bool,
    pub dup_ack: bool,
    pub ack_anomaly: bool,
}

impl PathWord {
    pub fn tag(&self) -> PathTag {
        match self.tag {
            1 => PathTag::InOrder,
            2 => PathTag::Duplicate,
            3 => PathTag::Ooo,
            4 => PathTag::PureAck,
            5 => PathTag::OowDropped,
            _ => PathTag::None,
        }
    }

    pub fn set_tag(&mut self, tag: PathTag) {
        self.tag = match tag {
            PathTag::None => 0,
            PathTag::InOrder => 1,
            PathTag::Duplicate => 2,
            PathTag::Ooo => 3,
            PathTag::PureAck => 4,
            PathTag::OowDropped => 5,
        };
    }

    pub fn to_bits(self) -> u32 {
        let mut v = self.tag & 0x7;
        let mut bit = 3;
        for b in [
            self.in_window,
            self.zero_wnd,
            self.island1_closed,
            self.gap_closed,
            self.ooo_tracked,
            self.ooo_dropped,
            self.fast_retx,
            self.rtx_due,
            self.dup_ack,
            self.ack_anomaly,
        ] {
            if b {
                v |= 1 << bit;
            }
            bit += 1;
        }
        v
    }

    pub fn from_bits(v: u32) -> PathWord {
        let get = |bit: u32| v & (1 << bit) != 0;
        PathWord {
            tag: v & 0x7,
            in_window: get(3),
            zero_wnd: get(4),
            island1_closed: get(5),
            gap_closed: get(6),
            ooo_tracked: get(7),
            ooo_dropped: get(8),
            fast_retx: get(9),
            rtx_due: get(10),
            dup_ack: get(11),
            ack_anomaly: get(12),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scratch_forward_only() {
        let mut s = Scratch::default();
        s.write(3, ScratchKey::AcceptLen, 7).unwrap();
        assert_eq!(s.read(4, ScratchKey::AcceptLen).unwrap(), Some(7));
        assert!(matches!(
            s.read(3, ScratchKey::AcceptLen),
            Err(ScratchError::ForwardOnly { .. })
        ));
        assert_eq!(s.read(4, ScratchKey::TxLen).unwrap(), None);
    }

    #[test]
    fn scratch_bounded() {
        let mut s = Scratch::default();
        let keys = [
            ScratchKey::PathWord,
            ScratchKey::AcceptLen,
            ScratchKey::NextSeqSnap,
            ScratchKey::AvailAfter,
            ScratchKey::OooIns,
            ScratchKey::Isl1Head,
            ScratchKey::Isl1Tail,
            ScratchKey::CascadeStart,
            ScratchKey::CascadeEnd,
            ScratchKey::UnaNew,
            ScratchKey::UnaAdvance,
            ScratchKey::PeerWnd,
            ScratchKey::SackHead,
            ScratchKey::SackTail,
            ScratchKey::TxPayOff,
            ScratchKey::CreditBal,
        ];
        assert_eq!(keys.len(), SCRATCH_CAPACITY);
        for (i, k) in keys.iter().enumerate() {
            s.write(0, *k, i as u32).unwrap();
        }
        // Overwriting an existing key is not a new entry.
        s.write(1, ScratchKey::PathWord, 9).unwrap();
        assert_eq!(s.peek(ScratchKey::PathWord), Some(9));
    }

    #[test]
    fn path_word_round_trip() {
        let mut w = PathWord::default();
        w.set_tag(PathTag::Ooo);
        w.in_window = true;
        w.gap_closed = true;
        w.ack_anomaly = true;
        let w2 = PathWord::from_bits(w.to_bits());
        assert_eq!(w, w2);
        assert_eq!(w2.tag(), PathTag::Ooo);
    }
}
