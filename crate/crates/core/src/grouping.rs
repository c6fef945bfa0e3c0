//! Grouping structures for penalized regression and their dictionaries.
//!
//! With latent overlapping group Lasso the selected support is a union of
//! active groups, so the dictionary of a grouping structure is its union
//! closure: every union over a subset of groups, including the empty union.
//! A grouping is congruent to a rule exactly when that closure equals the
//! rule's dictionary.

use std::collections::HashSet;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{ConstraintSet, Dictionary, Universe, VarSet};
use crate::rule::{balanced, RuleExpr};

/// Non-empty groups of variables whose union is the whole universe.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GroupingStructure {
    groups: Vec<VarSet>,
}

impl GroupingStructure {
    pub fn new(u: &Universe, groups: Vec<VarSet>) -> Result<Self> {
        let mut seen = HashSet::with_capacity(groups.len());
        let mut cover = VarSet::EMPTY;
        for (i, &g) in groups.iter().enumerate() {
            u.check(g)?;
            if g.is_empty() {
                return Err(Error::InvalidGrouping(format!("group #{i} is empty")));
            }
            if !seen.insert(g) {
                return Err(Error::InvalidGrouping(format!(
                    "group {} appears more than once",
                    u.display_set(g)
                )));
            }
            cover = cover | g;
        }
        if cover != u.full() {
            return Err(Error::InvalidGrouping(format!(
                "groups do not cover {}",
                u.display_set(u.full() - cover)
            )));
        }
        Ok(GroupingStructure { groups })
    }

    pub fn groups(&self) -> &[VarSet] {
        &self.groups
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }

    fn pairwise_disjoint(&self) -> bool {
        let mut seen = VarSet::EMPTY;
        for &g in &self.groups {
            if !g.is_disjoint(seen) {
                return false;
            }
            seen = seen | g;
        }
        true
    }
}

/// Penalization methods and their grouping requirements.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Method {
    Lasso,
    AdaptiveLasso,
    GroupLasso,
    ExclusiveGroupLasso,
    LatentOverlappingGroupLasso,
}

impl Method {
    pub const ALL: [Method; 5] = [
        Method::Lasso,
        Method::AdaptiveLasso,
        Method::GroupLasso,
        Method::ExclusiveGroupLasso,
        Method::LatentOverlappingGroupLasso,
    ];

    pub fn display_name(self) -> &'static str {
        match self {
            Method::Lasso => "Lasso",
            Method::AdaptiveLasso => "Adaptive Lasso",
            Method::GroupLasso => "Group Lasso",
            Method::ExclusiveGroupLasso => "Exclusive group Lasso",
            Method::LatentOverlappingGroupLasso => "Latent overlapping group Lasso",
        }
    }

    /// Penalty term, for reference only.
    pub fn penalty(self) -> &'static str {
        match self {
            Method::Lasso => "lambda * sum_g ||beta_g||_1",
            Method::AdaptiveLasso => "lambda * sum_g w_g ||beta_g||_1",
            Method::GroupLasso => "lambda * sum_g sqrt(|g|) ||beta_g||_2",
            Method::ExclusiveGroupLasso => "lambda * sum_g ||beta_g||_1^2",
            Method::LatentOverlappingGroupLasso => {
                "lambda * sum_g w_g ||alpha_g||_2, with sum_g alpha_g = beta"
            }
        }
    }

    /// Requirement on the groups, as text.
    pub fn group_condition(self) -> &'static str {
        match self {
            Method::Lasso | Method::AdaptiveLasso => "every group has exactly one variable",
            Method::GroupLasso | Method::ExclusiveGroupLasso => "groups are pairwise disjoint",
            Method::LatentOverlappingGroupLasso => "none",
        }
    }
}

/// Whether `g` satisfies the method's grouping requirement.
pub fn check_compatibility(m: Method, g: &GroupingStructure) -> bool {
    match m {
        Method::Lasso | Method::AdaptiveLasso => g.groups.iter().all(|s| s.len() == 1),
        Method::GroupLasso | Method::ExclusiveGroupLasso => g.pairwise_disjoint(),
        Method::LatentOverlappingGroupLasso => true,
    }
}

/// The template rule whose dictionary is the method's penalization-structure
/// dictionary.
///
/// Latent overlapping group Lasso has no template; its dictionary is
/// [`union_closure`], from which [`crate::rule::rule_from_dictionary`] builds a
/// rule.
pub fn method_rule(m: Method, u: &Universe, g: &GroupingStructure) -> Result<RuleExpr> {
    if m == Method::LatentOverlappingGroupLasso {
        return Err(Error::UseClosureInstead);
    }
    if !check_compatibility(m, g) {
        return Err(Error::IncompatibleGrouping(m.display_name()));
    }
    let n = u.size() as u32;
    match m {
        Method::Lasso | Method::AdaptiveLasso => {
            Ok(RuleExpr::unit(u.full(), ConstraintSet::range(0, n)?))
        }
        Method::GroupLasso | Method::ExclusiveGroupLasso => {
            let units = g
                .groups
                .iter()
                .map(|&grp| {
                    let size = grp.len() as u32;
                    let counts = if m == Method::GroupLasso {
                        ConstraintSet::new([0, size])?
                    } else {
                        ConstraintSet::range(1, size)?
                    };
                    Ok(RuleExpr::unit(grp, counts))
                })
                .collect::<Result<Vec<_>>>()?;
            if units.is_empty() {
                // Only the empty universe has no groups.
                return Ok(RuleExpr::unit(VarSet::EMPTY, ConstraintSet::new([0])?));
            }
            Ok(balanced(units, RuleExpr::and))
        }
        Method::LatentOverlappingGroupLasso => unreachable!(),
    }
}

/// Every union over a subset of the groups, `∅` and `V` included.
///
/// Computed as a fixpoint: starting from `{∅}`, keep adding `x ∪ g` for each
/// reached `x` and group `g` until nothing new appears.
pub fn union_closure(u: &Universe, g: &GroupingStructure) -> Result<Dictionary> {
    closure_of(u, &g.groups)
}

pub(crate) fn closure_of(u: &Universe, generators: &[VarSet]) -> Result<Dictionary> {
    let mut seen: HashSet<VarSet> = HashSet::new();
    seen.insert(VarSet::EMPTY);
    let mut work = vec![VarSet::EMPTY];
    while let Some(x) = work.pop() {
        for &gen in generators {
            let y = x | gen;
            if seen.insert(y) {
                u.ensure_enumerable(seen.len() as u128)?;
                work.push(y);
            }
        }
    }
    Ok(Dictionary::new(seen))
}

/// Outcome of comparing a rule dictionary against a structure's dictionary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CongruenceReport {
    pub congruent: bool,
    /// Entries of the rule dictionary the structure cannot produce.
    pub missing: Dictionary,
    /// Entries the structure can produce that the rule forbids.
    pub extra: Dictionary,
}

impl CongruenceReport {
    fn compare(rule: &Dictionary, structure: &Dictionary) -> Self {
        let missing = rule.difference(structure);
        let extra = structure.difference(rule);
        CongruenceReport {
            congruent: missing.is_empty() && extra.is_empty(),
            missing,
            extra,
        }
    }
}

/// Checks a grouping against a rule dictionary under latent overlapping
/// group Lasso: congruent iff the union closure equals `d`.
pub fn check_log_congruence(
    u: &Universe,
    g: &GroupingStructure,
    d: &Dictionary,
) -> Result<CongruenceReport> {
    Ok(CongruenceReport::compare(d, &union_closure(u, g)?))
}

/// Necessary-condition check for (non-latent) overlapping group Lasso.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OglReport {
    pub report: CongruenceReport,
    /// The rule dictionary with the entry `V` removed.
    pub reduced_rule: Dictionary,
    /// Complements of every union over a subset of groups.
    pub complement_family: Dictionary,
}

/// Compares `d` against the complements of the union closure of `g`.
///
/// Overlapping group Lasso zeroes whole groups, so its supports are
/// complements of unions of groups. Both families always relate to the full
/// set `V` in a fixed way (the complement of `∅` is `V`), so the entry `V` is
/// removed from both sides before comparing; the raw families are returned
/// alongside the verdict.
pub fn check_ogl_necessary(
    u: &Universe,
    g: &GroupingStructure,
    d: &Dictionary,
) -> Result<OglReport> {
    let full = u.full();
    let complement_family: Dictionary = union_closure(u, g)?
        .iter()
        .map(|s| full - s)
        .collect();
    let reduced_rule = d.filter(|s| s != full);
    let reduced_structure = complement_family.filter(|s| s != full);
    Ok(OglReport {
        report: CongruenceReport::compare(&reduced_rule, &reduced_structure),
        reduced_rule,
        complement_family,
    })
}

/// Why a dictionary cannot be the union closure of any grouping.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SynthesisFailure {
    EmptyDictionary,
    MissingEmptySet,
    MissingFullSet,
    /// Two entries whose union is not an entry.
    NotUnionClosed { left: VarSet, right: VarSet },
}

impl SynthesisFailure {
    pub fn describe(&self, u: &Universe) -> String {
        match self {
            SynthesisFailure::EmptyDictionary => "dictionary is empty".into(),
            SynthesisFailure::MissingEmptySet => "dictionary does not contain the empty set".into(),
            SynthesisFailure::MissingFullSet => {
                "dictionary does not contain the full variable set".into()
            }
            SynthesisFailure::NotUnionClosed { left, right } => format!(
                "{} ∪ {} = {} is not in the dictionary",
                u.display_set(*left),
                u.display_set(*right),
                u.display_set(*left | *right)
            ),
        }
    }
}

/// Union-irreducible entries: non-empty entries that are not the union of
/// the strictly smaller entries below them.
pub fn union_irreducibles(d: &Dictionary) -> Vec<VarSet> {
    let entries = d.entries();
    entries
        .iter()
        .enumerate()
        .filter(|(_, e)| !e.is_empty())
        .filter(|&(i, &e)| {
            // Strict subsets have smaller masks, so they precede `e`.
            let below = entries[..i]
                .iter()
                .filter(|s| s.is_subset(e))
                .fold(VarSet::EMPTY, |acc, &s| acc | s);
            below != e
        })
        .map(|(_, &e)| e)
        .collect()
}

/// Finds the minimal grouping whose union closure is `d`, if one exists.
///
/// When `d` contains `∅` and `V` and is union-closed, its union-irreducible
/// entries are the unique minimal generating set.
pub fn synthesize_log_grouping(
    u: &Universe,
    d: &Dictionary,
) -> Result<std::result::Result<GroupingStructure, SynthesisFailure>> {
    for s in d {
        u.check(s)?;
    }
    if d.is_empty() {
        return Ok(Err(SynthesisFailure::EmptyDictionary));
    }
    if !d.contains(VarSet::EMPTY) {
        return Ok(Err(SynthesisFailure::MissingEmptySet));
    }
    if !d.contains(u.full()) {
        return Ok(Err(SynthesisFailure::MissingFullSet));
    }
    let generators = union_irreducibles(d);
    // Every entry is a union of irreducibles, so `d` is union-closed iff
    // adding any irreducible to any entry stays inside `d`.
    for x in d {
        for &g in &generators {
            if !d.contains(x | g) {
                return Ok(Err(SynthesisFailure::NotUnionClosed { left: x, right: g }));
            }
        }
    }
    let grouping = GroupingStructure::new(u, generators)?;
    assert_eq!(
        &union_closure(u, &grouping)?,
        d,
        "irreducible entries must regenerate a union-closed dictionary"
    );
    Ok(Ok(grouping))
}
