use std::collections::VecDeque;

use crate::attacks::AttackKind;

#[derive(Debug, Clone, PartialEq)]
pub struct ReplayItem {
    pub x: Vec<f64>,
    pub label: usize,
    pub kind: AttackKind,
}

/// Bounded FIFO of historical hard samples.
#[derive(Debug, Clone)]
pub struct ReplayBuffer {
    items: VecDeque<ReplayItem>,
    capacity: usize,
}

impl ReplayBuffer {
    pub fn new(capacity: usize) -> Self {
        Self { items: VecDeque::with_capacity(capacity), capacity }
    }

    pub fn push(&mut self, item: ReplayItem) {
        if self.capacity == 0 {
            return;
        }
        if self.items.len() == self.capacity {
            self.items.pop_front();
        }
        self.items.push_back(item);
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

    pub fn get(&self, i: usize) -> Option<&ReplayItem> {
        self.items.get(i)
    }

    pub fn iter(&self) -> impl Iterator<Item = &ReplayItem> {
        self.items.iter()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn item(label: usize) -> ReplayItem {
        ReplayItem { x: vec![label as f64], label, kind: AttackKind::Bias }
    }

    #[test]
    fn evicts_oldest_first() {
        let mut buf = ReplayBuffer::new(3);
        for i in 0..5 {
            buf.push(item(i));
            assert!(buf.len() <= 3);
        }
        let labels: Vec<usize> = buf.iter().map(|r| r.label).collect();
        assert_eq!(labels, vec![2, 3, 4]);
    }

    #[test]
    fn sentinel_leaves_after_exactly_capacity_pushes() {
        let mut buf = ReplayBuffer::new(4);
        buf.push(item(999));
        for i in 0..3 {
            buf.push(item(i));
        }
        assert_eq!(buf.get(0).unwrap().label, 999);
        buf.push(item(3));
        assert!(buf.iter().all(|r| r.label != 999));
    }
}
