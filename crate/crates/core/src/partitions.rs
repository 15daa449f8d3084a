//! Set partitions as restricted-growth strings.
//!
//! A restricted-growth string `a` of length n has `a[0] = 0` and
//! `a[i] <= 1 + max(a[..i])`; element i belongs to block `a[i]`. Iteration is
//! in lexicographic order, so the first string is the one-block partition and
//! the last is all singletons.

/// Bell number B(n), the count of set partitions of an n-element set.
///
/// Computed with the Bell triangle; exact for n <= 25 in u64.
pub fn bell_number(n: usize) -> u64 {
    let mut row = vec![1u64];
    for _ in 0..n {
        let mut next = Vec::with_capacity(row.len() + 1);
        next.push(*row.last().unwrap());
        for v in &row {
            let prev = *next.last().unwrap();
            next.push(prev + v);
        }
        row = next;
    }
    row[0]
}

/// Lexicographic iterator over restricted-growth strings of a fixed length.
#[derive(Debug, Clone)]
pub struct RestrictedGrowthStrings {
    current: Vec<usize>,
    // prefix_max[i] = max(current[..=i])
    prefix_max: Vec<usize>,
    started: bool,
    done: bool,
}

impl RestrictedGrowthStrings {
    pub fn new(len: usize) -> Self {
        Self {
            current: vec![0; len],
            prefix_max: vec![0; len],
            started: false,
            done: false,
        }
    }

    fn advance(&mut self) -> bool {
        let n = self.current.len();
        if n <= 1 {
            return false;
        }
        let mut i = n - 1;
        loop {
            if i == 0 {
                return false;
            }
            if self.current[i] <= self.prefix_max[i - 1] {
                self.current[i] += 1;
                self.prefix_max[i] = self.prefix_max[i - 1].max(self.current[i]);
                for j in (i + 1)..n {
                    self.current[j] = 0;
                    self.prefix_max[j] = self.prefix_max[i];
                }
                return true;
            }
            i -= 1;
        }
    }
}

impl Iterator for RestrictedGrowthStrings {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        if !self.started {
            self.started = true;
            return Some(self.current.clone());
        }
        if self.advance() {
            Some(self.current.clone())
        } else {
            self.done = true;
            None
        }
    }
}

/// Expand a restricted-growth string into its blocks, in block-id order.
pub fn blocks_from_rgs(rgs: &[usize]) -> Vec<Vec<usize>> {
    let count = rgs.iter().max().map_or(0, |m| m + 1);
    let mut blocks = vec![Vec::new(); count];
    for (element, &block) in rgs.iter().enumerate() {
        blocks[block].push(element);
    }
    blocks
}

/// Canonical restricted-growth string for a block assignment: blocks are
/// renumbered in order of first appearance.
pub fn canonical_rgs(assignment: &[usize]) -> Vec<usize> {
    let mut relabel = std::collections::HashMap::new();
    assignment
        .iter()
        .map(|b| {
            let next = relabel.len();
            *relabel.entry(*b).or_insert(next)
        })
        .collect()
}
