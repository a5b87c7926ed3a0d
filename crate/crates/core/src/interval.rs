//! Out-of-order interval ("island") arithmetic.
//!
//! Islands are contiguous sequence ranges received ahead of the cumulative
//! frontier, stored as `[head, tail)` byte offsets relative to the frontier
//! so that the representation stays aligned as the window advances. A slot
//! with `tail == 0` is inactive. Two invariants keep single-pass merging
//! correct without sorting primitives:
//!
//! 1. ordering: active slots hold increasing ranges (`tail[i] >= tail[i-1]`);
//! 2. no holes: if slot `i` is inactive, so are all slots after it.
//!
//! The same per-slot steps drive both the receive-side reassembly intervals
//! and the transmit-side SACK scoreboard.

/// Outcome of the in-order maintenance step on the first interval slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FirstSlotAdvance {
    pub head: u32,
    pub tail: u32,
    /// The in-order stream reached the island start. If `tail > 0` the
    /// remaining island bytes are now contiguous with the frontier and a
    /// merge must be committed; if `tail == 0` the advance consumed the
    /// entire island.
    pub closed: bool,
}

/// Advance the first slot under an in-order acceptance of `len` bytes.
pub fn first_slot_advance(head: u32, tail: u32, len: u32) -> FirstSlotAdvance {
    let was_active = tail > 0;
    let new_head = head.saturating_sub(len);
    let new_tail = tail.saturating_sub(len);
    FirstSlotAdvance {
        head: if new_tail == 0 { 0 } else { new_head },
        tail: new_tail,
        closed: was_active && new_head == 0,
    }
}

/// Outcome of the in-order maintenance step on a downstream slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CascadeAdvance {
    pub head: u32,
    pub tail: u32,
    /// Post-maintenance range snapshotted before the slot was cleared by a
    /// cascading merge, as offsets relative to the advanced frontier.
    pub snapshot: Option<(u32, u32)>,
}

/// Advance a downstream slot. When the first slot closed this traversal,
/// the in-order segment is treated as having an effective length larger
/// than any window, which deterministically clears the slot; its surviving
/// range is snapshotted for pseudo-segment replay.
pub fn cascade_slot_advance(head: u32, tail: u32, len: u32, first_closed: bool) -> CascadeAdvance {
    let new_head = head.saturating_sub(len);
    let new_tail = tail.saturating_sub(len);
    let (new_head, new_tail) = if new_tail == 0 { (0, 0) } else { (new_head, new_tail) };
    if first_closed {
        let snapshot = if new_tail > 0 { Some((new_head, new_tail)) } else { None };
        CascadeAdvance { head: 0, tail: 0, snapshot }
    } else {
        CascadeAdvance { head: new_head, tail: new_tail, snapshot: None }
    }
}

/// Single-pass insertion state carried across interval slots.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InsertState {
    /// Not yet merged or placed; still cascading upward.
    Seeking,
    /// Merged into a lower slot whose tail is now this value; used to
    /// detect segments bridging into the next island.
    MergedTail(u32),
    /// Fell below an active island without overlapping it; with bounded
    /// slots such a segment cannot be placed without breaking ordering.
    Below,
    /// Initialized a fresh slot.
    Placed,
}

impl InsertState {
    pub fn encode(self) -> (u32, u32) {
        match self {
            InsertState::Seeking => (0, 0),
            InsertState::MergedTail(t) => (1, t),
            InsertState::Below => (2, 0),
            InsertState::Placed => (3, 0),
        }
    }

    pub fn decode(tag: u32, val: u32) -> InsertState {
        match tag {
            1 => InsertState::MergedTail(val),
            2 => InsertState::Below,
            3 => InsertState::Placed,
            _ => InsertState::Seeking,
        }
    }
}

/// Outcome of the insertion step at one slot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SlotInsert {
    pub head: u32,
    pub tail: u32,
    pub state: InsertState,
    /// Range cleared from this slot because a lower merge bridged into it;
    /// replayed via pseudo-segment to restore ordering.
    pub bridged: Option<(u32, u32)>,
}

/// Test an out-of-order segment `[so, eo)` (offsets relative to the
/// frontier, `so > 0`) against one slot. Overlapping or adjacent ranges
/// coalesce; a non-overlapping segment cascades to the next slot only while
/// it stays above every active island.
pub fn slot_insert(head: u32, tail: u32, state: InsertState, so: u32, eo: u32) -> SlotInsert {
    debug_assert!(so < eo);
    match state {
        InsertState::MergedTail(merged_tail) => {
            // A lower slot absorbed the segment. If the merged island now
            // reaches this one, snapshot and clear it for replay.
            if tail > 0 && merged_tail >= head {
                SlotInsert {
                    head: 0,
                    tail: 0,
                    state: InsertState::MergedTail(merged_tail.max(tail)),
                    bridged: Some((head, tail)),
                }
            } else {
                SlotInsert { head, tail, state, bridged: None }
            }
        }
        InsertState::Below | InsertState::Placed => SlotInsert { head, tail, state, bridged: None },
        InsertState::Seeking => {
            if tail == 0 {
                // First inactive slot: initialize. No-holes guarantees all
                // later slots are inactive; Seeking guarantees the segment
                // is above every active island, preserving ordering.
                SlotInsert { head: so, tail: eo, state: InsertState::Placed, bridged: None }
            } else if so <= tail && eo >= head {
                // Overlap or adjacency: merge.
                let h = head.min(so);
                let t = tail.max(eo);
                SlotInsert { head: h, tail: t, state: InsertState::MergedTail(t), bridged: None }
            } else if eo < head {
                SlotInsert { head, tail, state: InsertState::Below, bridged: None }
            } else {
                // Entirely above this island: keep seeking.
                SlotInsert { head, tail, state: InsertState::Seeking, bridged: None }
            }
        }
    }
}

/// Unbounded island set over absolute stream offsets: the reference
/// (fidelity-unlimited) reassembler state used by the oracle and by the
/// `max` fidelity configuration.
#[derive(Clone, Debug, Default)]
pub struct IslandSet {
    /// Disjoint, sorted, non-adjacent `[start, end)` ranges.
    islands: Vec<(u64, u64)>,
}

impl IslandSet {
    pub fn is_empty(&self) -> bool {
        self.islands.is_empty()
    }

    pub fn islands(&self) -> &[(u64, u64)] {
        &self.islands
    }

    pub fn first(&self) -> Option<(u64, u64)> {
        self.islands.first().copied()
    }

    /// Total bytes covered.
    pub fn covered(&self) -> u64 {
        self.islands.iter().map(|(s, e)| e - s).sum()
    }

    /// Insert `[start, end)`, coalescing overlaps and adjacency. Returns
    /// the number of newly covered bytes.
    pub fn insert(&mut self, start: u64, end: u64) -> u64 {
        debug_assert!(start <= end);
        if start == end {
            return 0;
        }
        let mut new_lo = start;
        let mut new_hi = end;
        let mut already = 0u64;
        let mut first = self.islands.len();
        let mut last = 0usize;
        for (i, &(s, e)) in self.islands.iter().enumerate() {
            if e < new_lo || s > new_hi {
                continue; // not even adjacent
            }
            first = first.min(i);
            last = last.max(i + 1);
            already += e.min(end).saturating_sub(s.max(start));
            new_lo = new_lo.min(s);
            new_hi = new_hi.max(e);
        }
        if first < last {
            self.islands.drain(first..last);
            self.islands.insert(first, (new_lo, new_hi));
        } else {
            let pos = self.islands.partition_point(|&(s, _)| s < new_lo);
            self.islands.insert(pos, (new_lo, new_hi));
        }
        (end - start) - already
    }

    /// Drop coverage below `frontier` (bytes consumed by an advancing
    /// cumulative frontier).
    pub fn trim_below(&mut self, frontier: u64) {
        self.islands.retain_mut(|(s, e)| {
            if *e <= frontier {
                false
            } else {
                *s = (*s).max(frontier);
                true
            }
        });
    }

    /// Bytes of `[start, end)` not yet covered.
    pub fn uncovered_in(&self, start: u64, end: u64) -> u64 {
        let mut covered = 0u64;
        for &(s, e) in &self.islands {
            covered += e.min(end).saturating_sub(s.max(start));
        }
        (end - start) - covered
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn first_slot_plain_advance() {
        // Island [2000, 3000) rel; in-order accept of 500.
        let r = first_slot_advance(2000, 3000, 500);
        assert_eq!((r.head, r.tail, r.closed), (1500, 2500, false));
    }

    #[test]
    fn first_slot_gap_close() {
        // Island [2000, 3000); accept 2000 closes the gap exactly.
        let r = first_slot_advance(2000, 3000, 2000);
        assert_eq!((r.head, r.tail, r.closed), (0, 1000, true));
    }

    #[test]
    fn first_slot_overrun() {
        // Accept runs past the island tail: slot clears, nothing to merge.
        let r = first_slot_advance(2000, 3000, 3500);
        assert_eq!((r.head, r.tail, r.closed), (0, 0, true));
    }

    #[test]
    fn first_slot_retained_after_dropped_pseudo() {
        // Head already zero (pseudo was dropped); next in-order segment
        // re-triggers the close so the merge is re-injected.
        let r = first_slot_advance(0, 1000, 300);
        assert_eq!((r.head, r.tail, r.closed), (0, 700, true));
    }

    #[test]
    fn cascade_clears_downstream() {
        let r = cascade_slot_advance(2000, 3000, 500, true);
        assert_eq!((r.head, r.tail), (0, 0));
        assert_eq!(r.snapshot, Some((1500, 2500)));
        // Fully consumed downstream island yields no snapshot.
        let r = cascade_slot_advance(100, 400, 500, true);
        assert_eq!(r.snapshot, None);
    }

    #[test]
    fn insert_initializes_first_inactive() {
        let r = slot_insert(0, 0, InsertState::Seeking, 2000, 3000);
        assert_eq!((r.head, r.tail), (2000, 3000));
        assert_eq!(r.state, InsertState::Placed);
    }

    #[test]
    fn insert_merges_overlap_and_adjacency() {
        let r = slot_insert(2000, 3000, InsertState::Seeking, 1500, 2200);
        assert_eq!((r.head, r.tail), (1500, 3000));
        // Touching ranges coalesce.
        let r = slot_insert(2000, 3000, InsertState::Seeking, 3000, 3400);
        assert_eq!((r.head, r.tail), (2000, 3400));
        let r = slot_insert(2000, 3000, InsertState::Seeking, 1000, 2000);
        assert_eq!((r.head, r.tail), (1000, 3000));
    }

    #[test]
    fn insert_below_never_places() {
        let r = slot_insert(2000, 3000, InsertState::Seeking, 500, 900);
        assert_eq!(r.state, InsertState::Below);
        let r2 = slot_insert(0, 0, r.state, 500, 900);
        assert_eq!(r2.state, InsertState::Below);
        assert_eq!((r2.head, r2.tail), (0, 0));
    }

    #[test]
    fn insert_bridge_clears_upper() {
        // Segment [1800, 4200) merged into island1 [1500, 2000)->tail 4200,
        // bridging island2 [4000, 5000): island2 snapshot-cleared.
        let merged = slot_insert(1500, 2000, InsertState::Seeking, 1800, 4200);
        assert_eq!(merged.state, InsertState::MergedTail(4200));
        let r = slot_insert(4000, 5000, merged.state, 1800, 4200);
        assert_eq!((r.head, r.tail), (0, 0));
        assert_eq!(r.bridged, Some((4000, 5000)));
    }

    #[test]
    fn island_set_coalesces() {
        let mut s = IslandSet::default();
        assert_eq!(s.insert(1000, 2000), 1000);
        assert_eq!(s.insert(3000, 4000), 1000);
        assert_eq!(s.islands(), &[(1000, 2000), (3000, 4000)]);
        // Bridge both, counting only new bytes.
        assert_eq!(s.insert(1500, 3500), 1000);
        assert_eq!(s.islands(), &[(1000, 4000)]);
        assert_eq!(s.insert(500, 1000), 500); // adjacency
        assert_eq!(s.islands(), &[(500, 4000)]);
        s.trim_below(3900);
        assert_eq!(s.islands(), &[(3900, 4000)]);
        s.trim_below(4000);
        assert!(s.is_empty());
    }
}
