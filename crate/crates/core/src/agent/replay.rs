use rand::Rng;

use crate::environment::EnvState;

/// One stored transition.
#[derive(Debug, Clone, PartialEq)]
pub struct Experience {
    pub s: EnvState,
    /// Kept for logging only when `terminal` is set.
    pub s_next: EnvState,
    pub a: usize,
    pub r: f64,
    pub terminal: bool,
}

/// Fixed-capacity FIFO store; inserting into a full buffer evicts the oldest tuple.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Experience>,
    inserted: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay buffer capacity must be ≥ 1");
        Self { capacity, items: Vec::with_capacity(capacity.min(1 << 16)), inserted: 0 }
    }

    pub fn push(&mut self, e: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(e);
        } else {
            let slot = self.inserted % self.capacity;
            self.items[slot] = e;
        }
        self.inserted += 1;
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.items.len() == self.capacity
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    /// Total number of insertions so far.
    pub fn inserted(&self) -> usize {
        self.inserted
    }

    /// Contents from oldest to newest.
    pub fn iter_chronological(&self) -> impl Iterator<Item = &Experience> {
        let split = if self.is_full() { self.inserted % self.capacity } else { 0 };
        self.items[split..].iter().chain(&self.items[..split])
    }

    /// `n` experiences drawn uniformly with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&Experience> {
        assert!(!self.items.is_empty(), "cannot sample an empty buffer");
        (0..n).map(|_| &self.items[rng.random_range(0..self.items.len())]).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environment::HistoryEntry;
    use proptest::prelude::*;

    fn exp(a: usize) -> Experience {
        let s = EnvState::from_parts(0, [0.0; 16], vec![HistoryEntry { action: None, encoded: vec![], reward: 0.0 }]);
        Experience { s: s.clone(), s_next: s, a, r: a as f64, terminal: false }
    }

    proptest! {
        #[test]
        fn fifo_keeps_last_capacity_items(cap in 1usize..20, n in 0usize..80) {
            let mut buf = ReplayBuffer::new(cap);
            for i in 0..n {
                buf.push(exp(i));
                prop_assert!(buf.len() <= cap);
            }
            let kept: Vec<usize> = buf.iter_chronological().map(|e| e.a).collect();
            let expected: Vec<usize> = (n.saturating_sub(cap)..n).collect();
            prop_assert_eq!(kept, expected);
        }
    }

    #[test]
    fn sampling_is_seeded() {
        use rand::SeedableRng;
        let mut buf = ReplayBuffer::new(10);
        (0..10).for_each(|i| buf.push(exp(i)));
        let draw = |seed| {
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            buf.sample(5, &mut rng).iter().map(|e| e.a).collect::<Vec<_>>()
        };
        assert_eq!(draw(3), draw(3));
        assert!(buf.is_full());
    }
}
