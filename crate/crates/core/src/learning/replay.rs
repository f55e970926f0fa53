use rand::Rng;

use crate::product::Experience;

/// Fixed-capacity FIFO buffer with uniform sampling.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    capacity: usize,
    items: Vec<Experience>,
    head: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "capacity must be positive");
        ReplayBuffer { capacity, items: Vec::with_capacity(capacity.min(1 << 16)), head: 0 }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    /// Append, evicting the oldest item when full.
    pub fn push(&mut self, e: Experience) {
        if self.items.len() < self.capacity {
            self.items.push(e);
        } else {
            self.items[self.head] = e;
            self.head = (self.head + 1) % self.capacity;
        }
    }

    /// Items from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &Experience> {
        self.items[self.head..].iter().chain(&self.items[..self.head])
    }

    /// One uniform draw with replacement.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> &Experience {
        &self.items[rng.random_range(0..self.items.len())]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::environments::{Action, Cell};
    use crate::product::{ProductAction, ProductState};

    fn exp(i: i32) -> Experience {
        let s = ProductState { cell: Cell::new(i, 0), b: 0 };
        Experience {
            state: s,
            action: ProductAction::Env(Action::NoOp),
            next: s,
            r_ext: 0.0,
            discount: 1.0,
            next_action: None,
        }
    }

    #[test]
    fn fifo_eviction() {
        let mut b = ReplayBuffer::new(3);
        for i in 0..5 {
            b.push(exp(i));
            assert!(b.len() <= 3);
        }
        let xs: Vec<i32> = b.iter().map(|e| e.state.cell.x).collect();
        assert_eq!(xs, vec![2, 3, 4]);
    }
}
