use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::space::{LabelSet, PointSpace, ToySpaceSpec};
use crate::error::{Error, Result};

/// How a tokenizer groups the masked views.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionKind {
    /// Every masked view is its own block (no tokenization).
    MaeLike,
    /// One block per class; shared points are split evenly between the two
    /// classes that own them.
    ClassWise,
    /// `l` blocks, each holding an equal share of every exclusive and every
    /// shared point set.
    CrossClass(usize),
    /// Caller-supplied blocks of global point ids.
    Explicit(Vec<Vec<usize>>),
}

impl fmt::Display for PartitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PartitionKind::MaeLike => write!(f, "mae"),
            PartitionKind::ClassWise => write!(f, "class"),
            PartitionKind::CrossClass(l) => write!(f, "cross:{l}"),
            PartitionKind::Explicit(_) => write!(f, "explicit"),
        }
    }
}

impl FromStr for PartitionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mae" => Ok(PartitionKind::MaeLike),
            "class" => Ok(PartitionKind::ClassWise),
            other => {
                let l = other
                    .strip_prefix("cross:")
                    .and_then(|v| v.parse::<usize>().ok())
                    .ok_or_else(|| {
                        Error::validation(format!(
                            "unknown partition '{other}', expected mae, class or cross:<l>"
                        ))
                    })?;
                Ok(PartitionKind::CrossClass(l))
            }
        }
    }
}

/// Per-block counts of each kind of point.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct BlockComposition {
    /// `exclusive[a]`: points of the block that belong only to class a.
    pub exclusive: Vec<usize>,
    /// Points shared by the class pair (a, b), a < b.
    pub shared: BTreeMap<(u32, u32), usize>,
}

impl BlockComposition {
    /// (n_{i,1}, n_{i,2}, n_{i,3}) in the two-class layout.
    pub fn two_class(&self) -> Option<(usize, usize, usize)> {
        if self.exclusive.len() != 2 {
            return None;
        }
        let both = self.shared.get(&(0, 1)).copied().unwrap_or(0);
        Some((self.exclusive[0], self.exclusive[1], both))
    }
}

/// Equivalence classes a tokenizer induces on the masked views.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenPartition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl TokenPartition {
    /// Validates that `blocks` are non-empty and partition `0..views`.
    pub fn from_blocks(views: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut block_of = vec![usize::MAX; views];
        for (b, block) in blocks.iter().enumerate() {
            if block.is_empty() {
                return Err(Error::validation(format!("block {b} is empty")));
            }
            for &v in block {
                if v >= views {
                    return Err(Error::validation(format!(
                        "block {b} holds view {v}, outside 0..{views}"
                    )));
                }
                if block_of[v] != usize::MAX {
                    return Err(Error::validation(format!(
                        "view {v} appears in blocks {} and {b}",
                        block_of[v]
                    )));
                }
                block_of[v] = b;
            }
        }
        if let Some(v) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::validation(format!(
                "view {v} is not covered by any block"
            )));
        }
        Ok(Self { blocks, block_of })
    }

    /// Blocks given as a per-view block id (restricted-growth string or any
    /// labeling with ids `0..max+1` all used).
    pub fn from_assignment(assignment: &[usize]) -> Result<Self> {
        let count = assignment.iter().max().map_or(0, |m| m + 1);
        let mut blocks = vec![Vec::new(); count];
        for (v, &b) in assignment.iter().enumerate() {
            blocks[b].push(v);
        }
        Self::from_blocks(assignment.len(), blocks)
    }

    pub fn singletons(views: usize) -> Self {
        Self {
            blocks: (0..views).map(|v| vec![v]).collect(),
            block_of: (0..views).collect(),
        }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn block_count(&self) -> usize {
        self.blocks.len()
    }

    pub fn view_count(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self, view: usize) -> usize {
        self.block_of[view]
    }

    pub fn compositions(&self, space: &PointSpace) -> Vec<BlockComposition> {
        let s = space.spec().num_classes;
        self.blocks
            .iter()
            .map(|block| {
                let mut comp = BlockComposition {
                    exclusive: vec![0; s],
                    shared: BTreeMap::new(),
                };
                for &p in block {
                    match space.label(p) {
                        LabelSet::Single(a) => comp.exclusive[a as usize] += 1,
                        LabelSet::Pair(a, b) => *comp.shared.entry((a, b)).or_insert(0) += 1,
                    }
                }
                comp
            })
            .collect()
    }
}

pub(crate) fn check_class_wise(spec: &ToySpaceSpec) -> Result<()> {
    let m = spec.pairwise_overlap;
    if spec.num_classes >= 2 && !m.is_multiple_of(2) {
        return Err(Error::validation(format!(
            "class-wise partition splits each shared set in half, so m must be even (got m={m})"
        )));
    }
    Ok(())
}

pub(crate) fn check_cross_class(spec: &ToySpaceSpec, l: usize) -> Result<()> {
    let exclusive = spec.exclusive_per_class();
    let m = spec.pairwise_overlap;
    if l == 0 || !exclusive.is_multiple_of(l) || !m.is_multiple_of(l) {
        return Err(Error::validation(format!(
            "cross-class partition with l={l} needs l to divide both n-(s-1)m={exclusive} and m={m}"
        )));
    }
    Ok(())
}

pub fn make_partition(space: &PointSpace, kind: &PartitionKind) -> Result<TokenPartition> {
    let spec = *space.spec();
    let s = spec.num_classes;
    match kind {
        PartitionKind::MaeLike => Ok(TokenPartition::singletons(space.len())),
        PartitionKind::ClassWise => {
            check_class_wise(&spec)?;
            let half = spec.pairwise_overlap / 2;
            let mut blocks: Vec<Vec<usize>> = (0..s).map(|c| space.exclusive(c).to_vec()).collect();
            for a in 0..s {
                for b in (a + 1)..s {
                    let shared = space.shared(a, b);
                    blocks[a].extend_from_slice(&shared[..half]);
                    blocks[b].extend_from_slice(&shared[half..]);
                }
            }
            TokenPartition::from_blocks(space.len(), blocks)
        }
        PartitionKind::CrossClass(l) => {
            let l = *l;
            check_cross_class(&spec, l)?;
            let mut blocks = vec![Vec::new(); l];
            let mut deal = |group: &[usize]| {
                let share = group.len() / l;
                for (k, &p) in group.iter().enumerate() {
                    blocks[k / share].push(p);
                }
            };
            for c in 0..s {
                if !space.exclusive(c).is_empty() {
                    deal(space.exclusive(c));
                }
            }
            for a in 0..s {
                for b in (a + 1)..s {
                    let shared = space.shared(a, b);
                    if !shared.is_empty() {
                        deal(&shared);
                    }
                }
            }
            TokenPartition::from_blocks(space.len(), blocks)
        }
        PartitionKind::Explicit(blocks) => TokenPartition::from_blocks(space.len(), blocks.clone()),
    }
}
