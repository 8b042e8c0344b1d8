use std::collections::VecDeque;

use rand::Rng;

#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub state: Vec<f64>,
    pub action: usize,
    pub reward: f64,
    pub next_state: Vec<f64>,
    pub terminal: bool,
}

/// Fixed-capacity FIFO of transitions; pushing into a full buffer evicts the
/// oldest entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: VecDeque<Transition>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    pub fn push(&mut self, t: Transition) {
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(t);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn iter(&self) -> impl Iterator<Item = &Transition> {
        self.items.iter()
    }

    /// Uniform sample with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> Vec<&Transition> {
        if self.items.is_empty() {
            return Vec::new();
        }
        (0..n)
            .map(|_| &self.items[rng.random_range(0..self.items.len())])
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn t(i: usize) -> Transition {
        Transition {
            state: vec![i as f64],
            action: 0,
            reward: 0.0,
            next_state: vec![],
            terminal: false,
        }
    }

    #[test]
    fn evicts_oldest() {
        let mut buf = ReplayBuffer::new(500);
        for i in 0..501 {
            buf.push(t(i));
        }
        assert_eq!(buf.len(), 500);
        let ids: Vec<usize> = buf.iter().map(|x| x.state[0] as usize).collect();
        assert_eq!(ids, (1..501).collect::<Vec<_>>());
    }

    #[test]
    fn sample_draws_from_contents() {
        let mut buf = ReplayBuffer::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(buf.sample(3, &mut rng).is_empty());
        for i in 0..6 {
            buf.push(t(i));
        }
        let s = buf.sample(100, &mut rng);
        assert_eq!(s.len(), 100);
        assert!(s.iter().all(|x| (2.0..6.0).contains(&x.state[0])));
    }
}
