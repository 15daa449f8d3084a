use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Parameters of the toy point space: `num_classes` classes of
/// `points_per_class` points each, with `pairwise_overlap` points shared by
/// every pair of classes and no point shared by three.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ToySpaceSpec {
    pub num_classes: usize,
    pub points_per_class: usize,
    pub pairwise_overlap: usize,
}

impl ToySpaceSpec {
    pub fn new(
        num_classes: usize,
        points_per_class: usize,
        pairwise_overlap: usize,
    ) -> Result<Self> {
        let spec = Self {
            num_classes,
            points_per_class,
            pairwise_overlap,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn two_class(points_per_class: usize, pairwise_overlap: usize) -> Result<Self> {
        Self::new(2, points_per_class, pairwise_overlap)
    }

    pub fn validate(&self) -> Result<()> {
        let (s, n, m) = (
            self.num_classes,
            self.points_per_class,
            self.pairwise_overlap,
        );
        if s < 1 {
            return Err(Error::validation("num_classes must be at least 1"));
        }
        if n < 1 {
            return Err(Error::validation("points_per_class must be at least 1"));
        }
        if m > n {
            return Err(Error::validation(format!(
                "pairwise_overlap m={m} exceeds points_per_class n={n}"
            )));
        }
        if (s - 1) * m > n {
            return Err(Error::validation(format!(
                "each class shares m={m} points with {} others, which needs n >= {} (got n={n})",
                s - 1,
                (s - 1) * m
            )));
        }
        Ok(())
    }

    /// Overlap ratio t = m / n.
    pub fn overlap_ratio(&self) -> f64 {
        self.pairwise_overlap as f64 / self.points_per_class as f64
    }

    /// Points of a class that belong to no other class: n - (s-1) m.
    pub fn exclusive_per_class(&self) -> usize {
        self.points_per_class - (self.num_classes - 1) * self.pairwise_overlap
    }

    /// s n - m s (s-1) / 2.
    pub fn total_points(&self) -> usize {
        let s = self.num_classes;
        s * self.points_per_class - self.pairwise_overlap * s * (s - 1) / 2
    }
}

/// Class membership of one point: a single class or an unordered pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum LabelSet {
    Single(u32),
    Pair(u32, u32),
}

impl LabelSet {
    pub fn pair(a: u32, b: u32) -> Self {
        debug_assert_ne!(a, b);
        if a < b {
            LabelSet::Pair(a, b)
        } else {
            LabelSet::Pair(b, a)
        }
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        match self {
            LabelSet::Single(_) => 1,
            LabelSet::Pair(..) => 2,
        }
    }

    pub fn contains(&self, class: u32) -> bool {
        match *self {
            LabelSet::Single(a) => a == class,
            LabelSet::Pair(a, b) => a == class || b == class,
        }
    }

    pub fn classes(&self) -> impl Iterator<Item = u32> {
        let (a, b) = match *self {
            LabelSet::Single(a) => (a, None),
            LabelSet::Pair(a, b) => (a, Some(b)),
        };
        std::iter::once(a).chain(b)
    }

    /// Number of classes both sets contain.
    pub fn shared(&self, other: &LabelSet) -> usize {
        self.classes().filter(|c| other.contains(*c)).count()
    }

    pub fn is_disjoint(&self, other: &LabelSet) -> bool {
        self.shared(other) == 0
    }
}

/// The enumerated toy point space.
///
/// Global order: the exclusive points of class 0, class 1, ... followed by
/// the `m` shared points of each class pair (a, b) in lexicographic pair
/// order. Within a class, [`PointSpace::members`] lists its exclusive points
/// first and then its shared points by partner class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointSpace {
    spec: ToySpaceSpec,
    labels: Vec<LabelSet>,
    members: Vec<Vec<usize>>,
}

impl PointSpace {
    pub fn spec(&self) -> &ToySpaceSpec {
        &self.spec
    }

    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[LabelSet] {
        &self.labels
    }

    pub fn label(&self, point: usize) -> LabelSet {
        self.labels[point]
    }

    /// Global ids of the points of `class`, in within-class order.
    pub fn members(&self, class: usize) -> &[usize] {
        &self.members[class]
    }

    /// Global id of the `index`-th point of `class`.
    pub fn point_id(&self, class: usize, index: usize) -> Option<usize> {
        self.members.get(class)?.get(index).copied()
    }

    /// Global ids of the points belonging only to `class`.
    pub fn exclusive(&self, class: usize) -> &[usize] {
        &self.members[class][..self.spec.exclusive_per_class()]
    }

    /// Global ids of the points shared by classes `a` and `b`.
    pub fn shared(&self, a: usize, b: usize) -> Vec<usize> {
        let target = LabelSet::pair(a as u32, b as u32);
        self.members[a]
            .iter()
            .copied()
            .filter(|&p| self.labels[p] == target)
            .collect()
    }
}

pub fn build_point_space(spec: ToySpaceSpec) -> Result<PointSpace> {
    spec.validate()?;
    let s = spec.num_classes;
    let m = spec.pairwise_overlap;
    let exclusive = spec.exclusive_per_class();

    let mut labels = Vec::with_capacity(spec.total_points());
    let mut members: Vec<Vec<usize>> = vec![Vec::with_capacity(spec.points_per_class); s];

    for (class, list) in members.iter_mut().enumerate() {
        for _ in 0..exclusive {
            list.push(labels.len());
            labels.push(LabelSet::Single(class as u32));
        }
    }
    for a in 0..s {
        for b in (a + 1)..s {
            for _ in 0..m {
                let id = labels.len();
                labels.push(LabelSet::Pair(a as u32, b as u32));
                members[a].push(id);
                members[b].push(id);
            }
        }
    }
    // shared points of class a sorted by partner class
    for (class, list) in members.iter_mut().enumerate() {
        let c = class as u32;
        list[exclusive..].sort_by_key(|&p| {
            let other = labels[p].classes().find(|&x| x != c).unwrap_or(c);
            (other, p)
        });
    }

    debug_assert_eq!(labels.len(), spec.total_points());
    Ok(PointSpace {
        spec,
        labels,
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn space(s: usize, n: usize, m: usize) -> PointSpace {
        build_point_space(ToySpaceSpec::new(s, n, m).unwrap()).unwrap()
    }

    #[test]
    fn two_class_no_overlap() {
        let sp = space(2, 3, 0);
        assert_eq!(sp.len(), 6);
        assert!(sp.labels().iter().all(|l| l.len() == 1));
    }

    #[test]
    fn two_class_with_overlap() {
        let sp = space(2, 10, 2);
        assert_eq!(sp.len(), 18);
        assert_eq!(sp.labels().iter().filter(|l| l.len() == 2).count(), 2);
        assert_eq!(sp.members(0).len(), 10);
        assert_eq!(sp.members(1).len(), 10);
    }

    #[test]
    fn three_class_count() {
        let sp = space(3, 10, 2);
        assert_eq!(sp.len(), 24);
        for (a, b) in [(0, 1), (0, 2), (1, 2)] {
            assert_eq!(sp.shared(a, b).len(), 2);
        }
        for c in 0..3 {
            assert_eq!(sp.members(c).len(), 10);
            assert_eq!(sp.exclusive(c).len(), 6);
        }
    }

    #[test]
    fn members_are_consistent_with_labels() {
        let sp = space(4, 9, 2);
        for c in 0..4 {
            for &p in sp.members(c) {
                assert!(sp.label(p).contains(c as u32));
            }
        }
        assert_eq!(sp.point_id(1, 0), Some(sp.exclusive(1)[0]));
        assert_eq!(sp.point_id(7, 0), None);
    }

    #[test]
    fn rejects_invalid_specs() {
        let err = ToySpaceSpec::new(2, 3, 4).unwrap_err().to_string();
        assert!(err.contains("pairwise_overlap"), "{err}");
        assert!(ToySpaceSpec::new(0, 3, 0).is_err());
        assert!(ToySpaceSpec::new(2, 0, 0).is_err());
        assert!(ToySpaceSpec::new(4, 5, 2).is_err());
    }

    #[test]
    fn label_set_algebra() {
        let a = LabelSet::pair(2, 1);
        assert_eq!(a, LabelSet::Pair(1, 2));
        assert_eq!(a.shared(&LabelSet::Pair(1, 2)), 2);
        assert_eq!(a.shared(&LabelSet::Single(2)), 1);
        assert!(a.is_disjoint(&LabelSet::Single(0)));
    }
}
