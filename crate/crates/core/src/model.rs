//! Covariate universes, subsets and dictionaries.
//!
//! A [`VarSet`] is a 64-slot membership mask keyed by universe index, so a
//! universe holds at most 64 variables. A [`Dictionary`] is a deduplicated
//! family of subsets kept sorted by the integer value of the mask (index 0 is
//! the least significant bit), which makes equality a positional comparison.

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::ops::{BitAnd, BitOr, Not, Sub};

use crate::error::{Error, Result};

/// Largest number of variables a [`Universe`] may hold.
pub const MAX_VARIABLES: usize = 64;

/// Default cap on the number of entries any full enumeration may produce.
pub const DEFAULT_ENUM_CAP: usize = 1 << 20;

const KEYWORDS: [&str; 5] = ["select", "of", "and", "or", "not"];

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// The ordered set of candidate covariates.
#[derive(Debug, Clone)]
pub struct Universe {
    names: Vec<String>,
    index: HashMap<String, usize>,
    enum_cap: usize,
}

impl PartialEq for Universe {
    fn eq(&self, other: &Self) -> bool {
        self.names == other.names
    }
}

impl Eq for Universe {}

impl Universe {
    /// Builds a universe whose indices follow the order of `names`.
    ///
    /// Names must be identifiers (`[A-Za-z_][A-Za-z0-9_]*`) and may not be one
    /// of the rule keywords, so that every universe can be written in rule text.
    pub fn new<I, S>(names: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.len() > MAX_VARIABLES {
            return Err(Error::UniverseTooLarge(names.len()));
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, name) in names.iter().enumerate() {
            if !is_identifier(name) || KEYWORDS.contains(&name.as_str()) {
                return Err(Error::InvalidName(name.clone()));
            }
            if index.insert(name.clone(), i).is_some() {
                return Err(Error::DuplicateVariable(name.clone()));
            }
        }
        Ok(Universe {
            names,
            index,
            enum_cap: DEFAULT_ENUM_CAP,
        })
    }

    /// Returns a copy with a different enumeration cap.
    pub fn with_enum_cap(mut self, cap: usize) -> Self {
        self.enum_cap = cap;
        self
    }

    pub fn enum_cap(&self) -> usize {
        self.enum_cap
    }

    pub fn size(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn name(&self, index: usize) -> Option<&str> {
        self.names.get(index).map(String::as_str)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    /// The set of every variable in the universe.
    pub fn full(&self) -> VarSet {
        VarSet::full(self.size())
    }

    /// Looks up each name and returns the corresponding subset.
    pub fn set<I, S>(&self, names: I) -> Result<VarSet>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut set = VarSet::EMPTY;
        for name in names {
            let name = name.as_ref();
            let i = self.index_of(name).ok_or_else(|| Error::UnknownVariable {
                name: name.to_string(),
                span: None,
            })?;
            set = set.with(i);
        }
        Ok(set)
    }

    /// Errors unless every member of `set` indexes into this universe.
    pub fn check(&self, set: VarSet) -> Result<()> {
        match set.iter().find(|&i| i >= self.size()) {
            Some(index) => Err(Error::OutOfUniverse {
                index,
                size: self.size(),
            }),
            None => Ok(()),
        }
    }

    /// Member names of `set` in universe-index order.
    pub fn names_of(&self, set: VarSet) -> Vec<&str> {
        set.iter().filter_map(|i| self.name(i)).collect()
    }

    /// Brace form used by the text formats, e.g. `{A,B}` or `{}`.
    pub fn display_set(&self, set: VarSet) -> String {
        format!("{{{}}}", self.names_of(set).join(","))
    }

    /// Errors with [`Error::EnumerationTooLarge`] when `count` exceeds the cap.
    pub fn ensure_enumerable(&self, count: u128) -> Result<()> {
        if count > self.enum_cap as u128 {
            Err(Error::EnumerationTooLarge {
                requested: count,
                cap: self.enum_cap,
            })
        } else {
            Ok(())
        }
    }

    /// Number of subsets of the universe, `2^size`.
    pub fn powerset_len(&self) -> u128 {
        1u128 << self.size()
    }
}

/// One subset of a universe, stored as a membership mask.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct VarSet(u64);

impl VarSet {
    pub const EMPTY: VarSet = VarSet(0);

    pub const fn from_bits(bits: u64) -> Self {
        VarSet(bits)
    }

    pub const fn bits(self) -> u64 {
        self.0
    }

    /// The set `{0, .., n-1}`.
    pub fn full(n: usize) -> Self {
        if n >= 64 {
            VarSet(u64::MAX)
        } else {
            VarSet((1u64 << n) - 1)
        }
    }

    pub fn singleton(index: usize) -> Self {
        VarSet(1u64 << index)
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(indices: I) -> Self {
        indices.into_iter().fold(VarSet::EMPTY, VarSet::with)
    }

    pub fn with(self, index: usize) -> Self {
        VarSet(self.0 | (1u64 << index))
    }

    pub fn contains(self, index: usize) -> bool {
        index < 64 && self.0 & (1u64 << index) != 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn is_subset(self, other: VarSet) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn is_disjoint(self, other: VarSet) -> bool {
        self.0 & other.0 == 0
    }

    /// Member indices in increasing order.
    pub fn iter(self) -> impl Iterator<Item = usize> {
        let mut bits = self.0;
        std::iter::from_fn(move || {
            if bits == 0 {
                None
            } else {
                let i = bits.trailing_zeros() as usize;
                bits &= bits - 1;
                Some(i)
            }
        })
    }

    /// Every subset of `self`, in increasing mask order.
    pub fn subsets(self) -> impl Iterator<Item = VarSet> {
        let mask = self.0;
        let mut next = Some(0u64);
        std::iter::from_fn(move || {
            let current = next?;
            next = if current == mask {
                None
            } else {
                // Standard "next submask in increasing order" step.
                Some(((current | !mask).wrapping_add(1)) & mask)
            };
            Some(VarSet(current))
        })
    }
}

impl BitOr for VarSet {
    type Output = VarSet;
    fn bitor(self, rhs: VarSet) -> VarSet {
        VarSet(self.0 | rhs.0)
    }
}

impl BitAnd for VarSet {
    type Output = VarSet;
    fn bitand(self, rhs: VarSet) -> VarSet {
        VarSet(self.0 & rhs.0)
    }
}

impl Sub for VarSet {
    type Output = VarSet;
    fn sub(self, rhs: VarSet) -> VarSet {
        VarSet(self.0 & !rhs.0)
    }
}

/// Complement within all 64 slots; intersect with a universe's `full()` to
/// stay inside it.
impl Not for VarSet {
    type Output = VarSet;
    fn not(self) -> VarSet {
        VarSet(!self.0)
    }
}

impl fmt::Display for VarSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{{")?;
        for (n, i) in self.iter().enumerate() {
            if n > 0 {
                write!(f, ",")?;
            }
            write!(f, "#{i}")?;
        }
        write!(f, "}}")
    }
}

/// A finite family of subsets in canonical order.
///
/// The empty family (no permissible model) and `{∅}` (only the empty model)
/// are different dictionaries.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Dictionary {
    entries: Vec<VarSet>,
}

impl Dictionary {
    /// The family with no entries.
    pub fn empty() -> Self {
        Dictionary::default()
    }

    /// Sorts and deduplicates `entries`.
    pub fn new<I: IntoIterator<Item = VarSet>>(entries: I) -> Self {
        let mut entries: Vec<VarSet> = entries.into_iter().collect();
        entries.sort_unstable();
        entries.dedup();
        Dictionary { entries }
    }

    /// Wraps entries already sorted and deduplicated.
    pub(crate) fn from_sorted(entries: Vec<VarSet>) -> Self {
        debug_assert!(entries.windows(2).all(|w| w[0] < w[1]));
        Dictionary { entries }
    }

    pub fn entries(&self) -> &[VarSet] {
        &self.entries
    }

    pub fn iter(&self) -> impl Iterator<Item = VarSet> + '_ {
        self.entries.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains(&self, set: VarSet) -> bool {
        self.entries.binary_search(&set).is_ok()
    }

    pub fn union(&self, other: &Dictionary) -> Dictionary {
        let mut out = Vec::with_capacity(self.len() + other.len());
        let (mut a, mut b) = (self.entries.iter().peekable(), other.entries.iter().peekable());
        loop {
            match (a.peek(), b.peek()) {
                (Some(&&x), Some(&&y)) => {
                    if x < y {
                        out.push(x);
                        a.next();
                    } else if y < x {
                        out.push(y);
                        b.next();
                    } else {
                        out.push(x);
                        a.next();
                        b.next();
                    }
                }
                (Some(&&x), None) => {
                    out.push(x);
                    a.next();
                }
                (None, Some(&&y)) => {
                    out.push(y);
                    b.next();
                }
                (None, None) => break,
            }
        }
        Dictionary::from_sorted(out)
    }

    pub fn intersection(&self, other: &Dictionary) -> Dictionary {
        let (small, large) = if self.len() <= other.len() {
            (self, other)
        } else {
            (other, self)
        };
        Dictionary::from_sorted(small.iter().filter(|&s| large.contains(s)).collect())
    }

    pub fn difference(&self, other: &Dictionary) -> Dictionary {
        Dictionary::from_sorted(self.iter().filter(|&s| !other.contains(s)).collect())
    }

    /// `P(V) \ self`. Requires `2^|V|` to be within the universe's cap.
    pub fn complement(&self, u: &Universe) -> Result<Dictionary> {
        u.ensure_enumerable(u.powerset_len())?;
        let mut present = self.entries.iter().peekable();
        let mut out = Vec::with_capacity((u.powerset_len() as usize).saturating_sub(self.len()));
        for s in u.full().subsets() {
            if present.peek() == Some(&&s) {
                present.next();
            } else {
                out.push(s);
            }
        }
        Ok(Dictionary::from_sorted(out))
    }

    /// Keeps the entries satisfying `pred`.
    pub fn filter<F: FnMut(VarSet) -> bool>(&self, mut pred: F) -> Dictionary {
        Dictionary::from_sorted(self.iter().filter(|&s| pred(s)).collect())
    }
}

impl FromIterator<VarSet> for Dictionary {
    fn from_iter<T: IntoIterator<Item = VarSet>>(iter: T) -> Self {
        Dictionary::new(iter)
    }
}

impl<'a> IntoIterator for &'a Dictionary {
    type Item = VarSet;
    type IntoIter = std::iter::Copied<std::slice::Iter<'a, VarSet>>;
    fn into_iter(self) -> Self::IntoIter {
        self.entries.iter().copied()
    }
}

/// Allowed selection counts for a unit rule.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ConstraintSet(BTreeSet<u32>);

impl ConstraintSet {
    pub fn new<I: IntoIterator<Item = u32>>(counts: I) -> Result<Self> {
        let counts: BTreeSet<u32> = counts.into_iter().collect();
        if counts.is_empty() {
            return Err(Error::EmptyConstraint);
        }
        Ok(ConstraintSet(counts))
    }

    /// `{lo, lo+1, .., hi}`; empty (and thus an error) when `lo > hi`.
    pub fn range(lo: u32, hi: u32) -> Result<Self> {
        ConstraintSet::new(lo..=hi)
    }

    pub fn max_count(&self) -> u32 {
        *self.0.iter().next_back().expect("constraint set is non-empty")
    }

    pub fn min_count(&self) -> u32 {
        *self.0.iter().next().expect("constraint set is non-empty")
    }

    pub fn contains(&self, count: usize) -> bool {
        u32::try_from(count).is_ok_and(|c| self.0.contains(&c))
    }

    /// Counts in ascending order.
    pub fn iter(&self) -> impl Iterator<Item = u32> + '_ {
        self.0.iter().copied()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Every subset of the universe, in canonical order.
pub fn powerset(u: &Universe) -> Result<Dictionary> {
    u.ensure_enumerable(u.powerset_len())?;
    Ok(Dictionary::from_sorted(u.full().subsets().collect()))
}

/// Union of all entries; `∅` for the empty dictionary.
pub fn dictionary_support(d: &Dictionary) -> VarSet {
    d.iter().fold(VarSet::EMPTY, |acc, s| acc | s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Universe {
        Universe::new(["A", "B", "C"]).unwrap()
    }

    #[test]
    fn universe_construction() {
        let u = abc();
        assert_eq!(u.size(), 3);
        assert_eq!(u.index_of("C"), Some(2));
        let u6 = Universe::new(["A", "A2", "B1", "B2", "AB1", "AB2"]).unwrap();
        assert_eq!(u6.size(), 6);
    }

    #[test]
    fn universe_rejects_duplicates_and_bad_names() {
        assert!(matches!(
            Universe::new(["A", "A"]),
            Err(Error::DuplicateVariable(n)) if n == "A"
        ));
        assert!(matches!(Universe::new([""]), Err(Error::InvalidName(_))));
        assert!(matches!(Universe::new(["1x"]), Err(Error::InvalidName(_))));
        assert!(matches!(Universe::new(["and"]), Err(Error::InvalidName(_))));
        let many: Vec<String> = (0..65).map(|i| format!("x{i}")).collect();
        assert!(matches!(Universe::new(many), Err(Error::UniverseTooLarge(65))));
        let max: Vec<String> = (0..64).map(|i| format!("x{i}")).collect();
        assert_eq!(Universe::new(max).unwrap().full().len(), 64);
    }

    #[test]
    fn powerset_sizes() {
        assert_eq!(powerset(&abc()).unwrap().len(), 8);
        let empty = Universe::new(Vec::<String>::new()).unwrap();
        let p = powerset(&empty).unwrap();
        assert_eq!(p.entries(), &[VarSet::EMPTY]);

        let u4 = Universe::new(["A", "B", "C", "D"]).unwrap();
        let p = powerset(&u4).unwrap();
        assert_eq!(p.len(), 16);
        assert_eq!(p.entries()[0], VarSet::EMPTY);
        assert_eq!(*p.entries().last().unwrap(), u4.full());
    }

    #[test]
    fn powerset_respects_cap() {
        let u = abc().with_enum_cap(7);
        assert!(matches!(
            powerset(&u),
            Err(Error::EnumerationTooLarge { requested: 8, cap: 7 })
        ));
    }

    #[test]
    fn powerset_is_exhaustive() {
        for n in 0..=10 {
            let names: Vec<String> = (0..n).map(|i| format!("v{i}")).collect();
            let u = Universe::new(names).unwrap();
            let p = powerset(&u).unwrap();
            assert_eq!(p.len(), 1 << n);
            // Oracle: the masks 0..2^n, each present exactly once.
            for (i, s) in p.iter().enumerate() {
                assert_eq!(s.bits(), i as u64);
            }
            if n >= 1 {
                assert_eq!(dictionary_support(&p), u.full());
            }
        }
    }

    #[test]
    fn support_examples() {
        let u = abc();
        let first_rule = Dictionary::new(
            [
                vec!["A"],
                vec!["B"],
                vec!["A", "B"],
                vec!["A", "C"],
                vec!["B", "C"],
                vec!["A", "B", "C"],
            ]
            .iter()
            .map(|n| u.set(n).unwrap()),
        );
        assert_eq!(dictionary_support(&first_rule), u.full());
        assert_eq!(
            dictionary_support(&Dictionary::new([VarSet::EMPTY])),
            VarSet::EMPTY
        );
        assert_eq!(dictionary_support(&Dictionary::empty()), VarSet::EMPTY);
        let d = Dictionary::new([u.set(["A"]).unwrap(), u.set(["B", "C"]).unwrap()]);
        assert_eq!(dictionary_support(&d), u.full());
    }

    #[test]
    fn empty_family_differs_from_empty_model() {
        assert_ne!(Dictionary::empty(), Dictionary::new([VarSet::EMPTY]));
    }

    #[test]
    fn set_algebra() {
        let u = abc();
        let a = Dictionary::new([VarSet::from_bits(1), VarSet::from_bits(3), VarSet::from_bits(5)]);
        let b = Dictionary::new([VarSet::from_bits(3), VarSet::from_bits(4)]);
        assert_eq!(a.union(&b).len(), 4);
        assert_eq!(a.intersection(&b).entries(), &[VarSet::from_bits(3)]);
        assert_eq!(a.difference(&b).entries(), &[VarSet::from_bits(1), VarSet::from_bits(5)]);
        let c = a.complement(&u).unwrap();
        assert_eq!(c.len(), 5);
        assert!(c.intersection(&a).is_empty());
        assert_eq!(c.union(&a), powerset(&u).unwrap());
    }

    #[test]
    fn subsets_enumeration() {
        let s = VarSet::from_indices([1, 3]);
        let subs: Vec<u64> = s.subsets().map(VarSet::bits).collect();
        assert_eq!(subs, vec![0, 2, 8, 10]);
        assert_eq!(VarSet::EMPTY.subsets().count(), 1);
    }

    #[test]
    fn constraint_sets() {
        assert!(matches!(ConstraintSet::new([]), Err(Error::EmptyConstraint)));
        let c = ConstraintSet::new([2, 0, 2]).unwrap();
        assert_eq!(c.iter().collect::<Vec<_>>(), vec![0, 2]);
        assert_eq!(c.max_count(), 2);
        assert!(c.contains(0) && !c.contains(1));
        assert_eq!(ConstraintSet::range(0, 4).unwrap().len(), 5);
    }
}
