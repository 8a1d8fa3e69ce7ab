//! Per-neuron firing histories, row update ages and the delayed-spike ring.
//!
//! A history word stores one bit per past step, least significant bit for
//! the most recent step. Widths of 32 and 64 bits are supported; the word is
//! always a `u64` and the unused high bits stay zero.

use crate::graph::NeuronId;

/// Number of steps a history word remembers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum HistoryBits {
    H32,
    H64,
}

impl HistoryBits {
    pub fn bits(self) -> u32 {
        match self {
            HistoryBits::H32 => 32,
            HistoryBits::H64 => 64,
        }
    }

    pub fn from_bits(bits: u32) -> Option<Self> {
        match bits {
            32 => Some(HistoryBits::H32),
            64 => Some(HistoryBits::H64),
            _ => None,
        }
    }

    #[inline]
    pub fn mask(self) -> u64 {
        low_bits(self.bits())
    }
}

impl Default for HistoryBits {
    fn default() -> Self {
        HistoryBits::H64
    }
}

/// Mask with the low `count` bits set; `count` may be 64.
#[inline]
fn low_bits(count: u32) -> u64 {
    if count >= 64 {
        u64::MAX
    } else {
        (1u64 << count) - 1
    }
}

/// Shifts the history one step into the past and records `fired` as the
/// newest bit. The oldest bit falls off.
#[inline]
pub fn push(hist: u64, fired: bool) -> u64 {
    (hist << 1) | fired as u64
}

/// Whether the neuron fired `steps_ago` steps ago.
#[inline]
pub fn bit(hist: u64, steps_ago: u32) -> bool {
    debug_assert!(steps_ago < 64);
    (hist >> steps_ago) & 1 == 1
}

/// Keeps the `age` most recent bits (positions `0..age`), clearing the rest.
#[inline]
pub fn recent_mask(hist: u64, age: u32) -> u64 {
    hist & low_bits(age)
}

/// Set-bit positions of `word`, highest first, via leading-zero counts.
#[derive(Clone, Debug)]
pub struct DescendingBits(u64);

impl Iterator for DescendingBits {
    type Item = u32;

    #[inline]
    fn next(&mut self) -> Option<u32> {
        if self.0 == 0 {
            return None;
        }
        let pos = 63 - self.0.leading_zeros();
        self.0 ^= 1u64 << pos;
        Some(pos)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = self.0.count_ones() as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for DescendingBits {}

#[inline]
pub fn descending_set_bits(word: u64) -> DescendingBits {
    DescendingBits(word)
}

/// Firing histories of the whole network.
#[derive(Clone, Debug)]
pub struct FiringHistory {
    bits: HistoryBits,
    words: Vec<u64>,
}

impl FiringHistory {
    pub fn new(num_neurons: usize, bits: HistoryBits) -> Self {
        FiringHistory { bits, words: vec![0; num_neurons] }
    }

    pub fn bits(&self) -> HistoryBits {
        self.bits
    }

    #[inline]
    pub fn word(&self, n: NeuronId) -> u64 {
        self.words[n as usize]
    }

    #[inline]
    pub fn push(&mut self, n: NeuronId, fired: bool) {
        let w = &mut self.words[n as usize];
        *w = push(*w, fired) & self.bits.mask();
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    pub fn words_mut(&mut self) -> &mut [u64] {
        &mut self.words
    }
}

/// Step at which each row of synapses was last brought up to date.
#[derive(Clone, Debug)]
pub struct AgeTable {
    last_update: Vec<i64>,
}

impl AgeTable {
    /// All rows start as if updated at step -1, so a first replay at step
    /// `now` covers steps `0..=now`.
    pub fn new(num_neurons: usize) -> Self {
        AgeTable { last_update: vec![-1; num_neurons] }
    }

    #[inline]
    pub fn last_update(&self, n: NeuronId) -> i64 {
        self.last_update[n as usize]
    }

    /// Steps since the last update, clamped to the history width.
    #[inline]
    pub fn age(&self, n: NeuronId, now: u64, bits: HistoryBits) -> u32 {
        clamp_age(now as i64 - self.last_update[n as usize], bits)
    }

    #[inline]
    pub fn touch(&mut self, n: NeuronId, now: u64) {
        self.last_update[n as usize] = now as i64;
    }

    pub fn as_slice(&self) -> &[i64] {
        &self.last_update
    }

    pub fn as_mut_slice(&mut self) -> &mut [i64] {
        &mut self.last_update
    }
}

#[inline]
pub fn clamp_age(elapsed: i64, bits: HistoryBits) -> u32 {
    elapsed.clamp(0, bits.bits() as i64) as u32
}

/// Fixed-delay spike queue: slot `t mod (delay + 1)` lists the neurons that
/// fired at step `t`, ascending.
#[derive(Clone, Debug)]
pub struct SpikeRing {
    delay: u32,
    slots: Vec<Vec<NeuronId>>,
    // Step each slot was last written for; guards reads of stale slots.
    written: Vec<Option<u64>>,
}

impl SpikeRing {
    pub fn new(delay: u32) -> Self {
        let len = delay as usize + 1;
        SpikeRing { delay, slots: vec![Vec::new(); len], written: vec![None; len] }
    }

    pub fn delay(&self) -> u32 {
        self.delay
    }

    #[inline]
    fn slot(&self, step: u64) -> usize {
        (step % (self.delay as u64 + 1)) as usize
    }

    /// Replaces the slot for `step` with `fired`, which must be ascending.
    pub fn record(&mut self, step: u64, fired: &[NeuronId]) {
        debug_assert!(fired.windows(2).all(|w| w[0] < w[1]));
        let s = self.slot(step);
        self.slots[s].clear();
        self.slots[s].extend_from_slice(fired);
        self.written[s] = Some(step);
    }

    /// Like [`record`](Self::record) but takes ownership of the list.
    pub fn record_owned(&mut self, step: u64, fired: Vec<NeuronId>) {
        let s = self.slot(step);
        self.slots[s] = fired;
        self.written[s] = Some(step);
    }

    /// Neurons whose spikes reach their targets at step `now`, i.e. those
    /// that fired at `now - delay`.
    pub fn arrivals(&self, now: u64) -> &[NeuronId] {
        if now < self.delay as u64 {
            return &[];
        }
        let origin = now - self.delay as u64;
        let s = self.slot(origin);
        match self.written[s] {
            Some(step) if step == origin => &self.slots[s],
            _ => &[],
        }
    }

    /// Neurons that fired exactly `steps_ago` steps before `now`, for
    /// `steps_ago <= delay`.
    pub fn fired_at(&self, now: u64, steps_ago: u32) -> &[NeuronId] {
        assert!(steps_ago <= self.delay);
        if now < steps_ago as u64 {
            return &[];
        }
        let origin = now - steps_ago as u64;
        let s = self.slot(origin);
        match self.written[s] {
            Some(step) if step == origin => &self.slots[s],
            _ => &[],
        }
    }
}

/// Bit-for-bit reference for [`descending_set_bits`]: scans every position.
pub fn naive_set_bits_descending(word: u64) -> Vec<u32> {
    (0..64).rev().filter(|&i| (word >> i) & 1 == 1).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn push_examples() {
        assert_eq!(push(0b011, true), 0b111);
        assert_eq!(push(0b011, false), 0b110);
        assert_eq!(push(u64::MAX, false), u64::MAX << 1);
    }

    #[test]
    fn push_respects_width() {
        let mut h = FiringHistory::new(1, HistoryBits::H32);
        h.words_mut()[0] = u32::MAX as u64;
        h.push(0, false);
        assert_eq!(h.word(0), (u32::MAX as u64) << 1 & 0xFFFF_FFFF);
    }

    #[test]
    fn bit_examples() {
        assert!(bit(0b100, 2));
        assert!(!bit(0b100, 0));
        for s in 0..64 {
            assert!(!bit(0, s));
        }
    }

    #[test]
    fn recent_mask_examples() {
        assert_eq!(recent_mask(0xFF, 3), 0b111);
        assert_eq!(recent_mask(0xDEAD, 0), 0);
        assert_eq!(recent_mask(u64::MAX, 64), u64::MAX);
        // Per-bit oracle.
        let x = 0b101010u64;
        let oracle: u64 = (0..5).filter(|&i| bit(x, i)).map(|i| 1u64 << i).sum();
        assert_eq!(oracle, 0b01010);
        assert_eq!(recent_mask(x, 5), oracle);
    }

    #[test]
    fn descending_bits_examples() {
        assert_eq!(descending_set_bits(0b10010).collect::<Vec<_>>(), vec![4, 1]);
        assert_eq!(descending_set_bits(0).count(), 0);
        assert_eq!(descending_set_bits(1 << 63).collect::<Vec<_>>(), vec![63]);
        assert_eq!(naive_set_bits_descending(0b10010), vec![4, 1]);
    }

    #[test]
    fn descending_bits_match_scan_on_many_words() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for i in 0..100_000u32 {
            // Mix dense and sparse words.
            let w: u64 = match i % 3 {
                0 => rng.gen(),
                1 => rng.gen::<u64>() & rng.gen::<u64>() & rng.gen::<u64>(),
                _ => 1u64 << rng.gen_range(0..64),
            };
            let fast: Vec<u32> = descending_set_bits(w).collect();
            assert_eq!(fast, naive_set_bits_descending(w), "word {w:#x}");
        }
    }

    #[test]
    fn ring_arrivals() {
        let mut ring = SpikeRing::new(0);
        ring.record(0, &[3, 5]);
        assert_eq!(ring.arrivals(0), &[3, 5]);

        let mut ring = SpikeRing::new(2);
        assert!(ring.arrivals(1).is_empty());
        ring.record(0, &[7]);
        ring.record(1, &[]);
        ring.record(2, &[1, 9]);
        assert_eq!(ring.arrivals(2), &[7]);
        assert!(ring.arrivals(3).is_empty());
        // A slot that was never written for that step reads as empty.
        assert!(ring.arrivals(6).is_empty());
    }

    #[test]
    fn ages_clamp() {
        let mut ages = AgeTable::new(2);
        assert_eq!(ages.age(0, 0, HistoryBits::H64), 1);
        assert_eq!(ages.age(0, 10, HistoryBits::H64), 11);
        assert_eq!(ages.age(0, 500, HistoryBits::H64), 64);
        assert_eq!(ages.age(0, 500, HistoryBits::H32), 32);
        ages.touch(1, 20);
        assert_eq!(ages.age(1, 25, HistoryBits::H64), 5);
        assert_eq!(ages.last_update(1), 20);
    }

    proptest! {
        #[test]
        fn mask_never_adds_bits(x in any::<u64>(), age in 0u32..=64) {
            let m = recent_mask(x, age);
            prop_assert!(m.count_ones() <= x.count_ones());
            prop_assert_eq!(m & !x, 0);
        }

        /// History bits and ring slots describe the same firing events.
        #[test]
        fn history_agrees_with_ring(
            delay in 0u32..8,
            fires in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 6), 1..60),
        ) {
            let n = 6usize;
            let mut hist = FiringHistory::new(n, HistoryBits::H64);
            let mut ring = SpikeRing::new(delay);
            for (step, row) in fires.iter().enumerate() {
                let step = step as u64;
                let mut fired = Vec::new();
                for (id, &f) in row.iter().enumerate() {
                    hist.push(id as NeuronId, f);
                    if f {
                        fired.push(id as NeuronId);
                    }
                }
                ring.record(step, &fired);
                for s in 0..=delay.min(step as u32) {
                    for id in 0..n as NeuronId {
                        let in_ring = ring.fired_at(step, s).contains(&id);
                        prop_assert_eq!(bit(hist.word(id), s), in_ring);
                    }
                }
                for id in 0..n as NeuronId {
                    let via_hist = step >= delay as u64 && bit(hist.word(id), delay);
                    prop_assert_eq!(ring.arrivals(step).contains(&id), via_hist);
                }
            }
        }
    }
}
