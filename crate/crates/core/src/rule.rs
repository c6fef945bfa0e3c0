//! Selection rules as expression trees and their selection dictionaries.
//!
//! Unit rules `select C of F` are the leaves. The five operations map onto
//! dictionary algebra:
//!
//! | rule            | dictionary                                  |
//! |-----------------|---------------------------------------------|
//! | `not r1`        | `P(V) \ D1`                                 |
//! | `r1 and r2`     | `D1 ∩ D2`                                   |
//! | `r1 or r2`      | `D1 ∪ D2`                                   |
//! | `r1 -> r2`      | `(P(V) \ D1) ∪ (D1 ∩ D2)`                   |
//! | `r1 => r2`      | `{a ∈ D2 : a ⊆ m}` for the first-stage `m`  |
//!
//! The `=>` dictionary depends on the outcome `m` of a data-driven first
//! selection step, so evaluation takes `m` as an explicit [`StageResult`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::model::{dictionary_support, ConstraintSet, Dictionary, Universe, VarSet};

/// `select C of F`: the number of selected variables from `scope` must be
/// one of `counts`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct UnitRule {
    pub scope: VarSet,
    pub counts: ConstraintSet,
}

impl UnitRule {
    pub fn new(scope: VarSet, counts: ConstraintSet) -> Self {
        UnitRule { scope, counts }
    }

    pub fn is_coherent(&self) -> bool {
        is_coherent(self)
    }
}

/// A unit rule is coherent iff it never asks for more variables than its
/// scope holds.
pub fn is_coherent(rule: &UnitRule) -> bool {
    rule.counts.max_count() as usize <= rule.scope.len()
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RuleExpr {
    Unit(UnitRule),
    Not(Box<RuleExpr>),
    And(Box<RuleExpr>, Box<RuleExpr>),
    Or(Box<RuleExpr>, Box<RuleExpr>),
    Implies(Box<RuleExpr>, Box<RuleExpr>),
    Sequential(Box<RuleExpr>, Box<RuleExpr>),
}

impl RuleExpr {
    pub fn unit(scope: VarSet, counts: ConstraintSet) -> Self {
        RuleExpr::Unit(UnitRule::new(scope, counts))
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(child: RuleExpr) -> Self {
        RuleExpr::Not(Box::new(child))
    }

    pub fn and(left: RuleExpr, right: RuleExpr) -> Self {
        RuleExpr::And(Box::new(left), Box::new(right))
    }

    pub fn or(left: RuleExpr, right: RuleExpr) -> Self {
        RuleExpr::Or(Box::new(left), Box::new(right))
    }

    pub fn implies(left: RuleExpr, right: RuleExpr) -> Self {
        RuleExpr::Implies(Box::new(left), Box::new(right))
    }

    pub fn sequential(left: RuleExpr, right: RuleExpr) -> Self {
        RuleExpr::Sequential(Box::new(left), Box::new(right))
    }

    /// Number of `=>` nodes. They are identified by their position in a
    /// pre-order walk, starting at 0.
    pub fn sequential_count(&self) -> usize {
        match self {
            RuleExpr::Unit(_) => 0,
            RuleExpr::Not(c) => c.sequential_count(),
            RuleExpr::And(l, r) | RuleExpr::Or(l, r) | RuleExpr::Implies(l, r) => {
                l.sequential_count() + r.sequential_count()
            }
            RuleExpr::Sequential(l, r) => 1 + l.sequential_count() + r.sequential_count(),
        }
    }

    pub fn has_sequential(&self) -> bool {
        self.sequential_count() > 0
    }

    pub fn depth(&self) -> usize {
        match self {
            RuleExpr::Unit(_) => 1,
            RuleExpr::Not(c) => 1 + c.depth(),
            RuleExpr::And(l, r)
            | RuleExpr::Or(l, r)
            | RuleExpr::Implies(l, r)
            | RuleExpr::Sequential(l, r) => 1 + l.depth().max(r.depth()),
        }
    }

    /// Union of every unit scope in the tree.
    pub fn variables(&self) -> VarSet {
        match self {
            RuleExpr::Unit(u) => u.scope,
            RuleExpr::Not(c) => c.variables(),
            RuleExpr::And(l, r)
            | RuleExpr::Or(l, r)
            | RuleExpr::Implies(l, r)
            | RuleExpr::Sequential(l, r) => l.variables() | r.variables(),
        }
    }
}

/// Output `m` of the first selection step of a `=>` rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct StageResult {
    pub chosen: VarSet,
}

impl StageResult {
    pub fn new(chosen: VarSet) -> Self {
        StageResult { chosen }
    }
}

/// Stage results keyed by the pre-order index of each `=>` node.
pub type StageMap = BTreeMap<usize, StageResult>;

/// Stage results given in pre-order, one per `=>` node.
pub fn stages_in_order<I: IntoIterator<Item = VarSet>>(chosen: I) -> StageMap {
    chosen
        .into_iter()
        .enumerate()
        .map(|(i, c)| (i, StageResult::new(c)))
        .collect()
}

/// Dictionary of a unit rule: every `a ∪ b` with `a ⊆ F`, `|a| ∈ C` and
/// `b ⊆ V \ F`; empty when the rule is incoherent.
pub fn unit_dictionary(u: &Universe, rule: &UnitRule) -> Result<Dictionary> {
    u.check(rule.scope)?;
    if !rule.is_coherent() {
        return Ok(Dictionary::empty());
    }
    let scope_size = rule.scope.len() as u64;
    let picks: u128 = rule
        .counts
        .iter()
        .map(|c| binomial(scope_size, u64::from(c)))
        .sum();
    let outside = u.full() - rule.scope;
    u.ensure_enumerable(picks << outside.len())?;

    let inside: Vec<VarSet> = rule
        .scope
        .subsets()
        .filter(|a| rule.counts.contains(a.len()))
        .collect();
    let mut entries = Vec::with_capacity((picks << outside.len()) as usize);
    for b in outside.subsets() {
        entries.extend(inside.iter().map(|&a| a | b));
    }
    Ok(Dictionary::new(entries))
}

fn binomial(n: u64, k: u64) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * u128::from(n - i) / u128::from(i + 1);
    }
    acc
}

/// Dictionary-level operations other than `=>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Operation {
    Not,
    And,
    Or,
    Implies,
}

impl Operation {
    pub fn symbol(self) -> &'static str {
        match self {
            Operation::Not => "not",
            Operation::And => "and",
            Operation::Or => "or",
            Operation::Implies => "->",
        }
    }

    fn arity(self) -> usize {
        match self {
            Operation::Not => 1,
            _ => 2,
        }
    }
}

/// Applies one operation to operand dictionaries.
pub fn combine(
    op: Operation,
    u: &Universe,
    first: &Dictionary,
    second: Option<&Dictionary>,
) -> Result<Dictionary> {
    let arity_err = Error::ArityMismatch {
        op: op.symbol(),
        expected: op.arity(),
    };
    match (op, second) {
        (Operation::Not, None) => first.complement(u),
        (Operation::Not, Some(_)) => Err(arity_err),
        (_, None) => Err(arity_err),
        (Operation::And, Some(d2)) => Ok(first.intersection(d2)),
        (Operation::Or, Some(d2)) => Ok(first.union(d2)),
        (Operation::Implies, Some(d2)) => {
            Ok(first.complement(u)?.union(&first.intersection(d2)))
        }
    }
}

/// Entries of `second` contained in the first-stage selection.
pub fn sequential_restrict(second: &Dictionary, stage: StageResult) -> Dictionary {
    second.filter(|a| a.is_subset(stage.chosen))
}

/// Non-fatal observations made while evaluating a rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Diagnostic {
    /// A `=>` node whose operands can select different variables.
    SequentialSupportMismatch {
        node: usize,
        left: VarSet,
        right: VarSet,
    },
}

impl Diagnostic {
    pub fn describe(&self, u: &Universe) -> String {
        match self {
            Diagnostic::SequentialSupportMismatch { node, left, right } => format!(
                "sequential node #{node}: first stage can select {} but second stage can select {}",
                u.display_set(*left),
                u.display_set(*right)
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Evaluation {
    pub dictionary: Dictionary,
    pub diagnostics: Vec<Diagnostic>,
}

/// The unique selection dictionary of `expr`.
pub fn eval_rule(u: &Universe, expr: &RuleExpr, stages: &StageMap) -> Result<Dictionary> {
    evaluate(u, expr, stages).map(|e| e.dictionary)
}

/// Like [`eval_rule`] but also returns diagnostics.
pub fn evaluate(u: &Universe, expr: &RuleExpr, stages: &StageMap) -> Result<Evaluation> {
    let mut ev = Evaluator {
        u,
        stages,
        next_seq: 0,
        diagnostics: Vec::new(),
    };
    let dictionary = ev.eval(expr)?;
    Ok(Evaluation {
        dictionary,
        diagnostics: ev.diagnostics,
    })
}

struct Evaluator<'a> {
    u: &'a Universe,
    stages: &'a StageMap,
    next_seq: usize,
    diagnostics: Vec<Diagnostic>,
}

impl Evaluator<'_> {
    fn eval(&mut self, expr: &RuleExpr) -> Result<Dictionary> {
        match expr {
            RuleExpr::Unit(rule) => unit_dictionary(self.u, rule),
            RuleExpr::Not(c) => {
                let d = self.eval(c)?;
                combine(Operation::Not, self.u, &d, None)
            }
            RuleExpr::And(l, r) => self.binary(Operation::And, l, r),
            RuleExpr::Or(l, r) => self.binary(Operation::Or, l, r),
            RuleExpr::Implies(l, r) => self.binary(Operation::Implies, l, r),
            RuleExpr::Sequential(l, r) => {
                let node = self.next_seq;
                self.next_seq += 1;
                let stage = *self
                    .stages
                    .get(&node)
                    .ok_or(Error::MissingStageResult(node))?;
                let left = self.eval(l)?;
                if !left.contains(stage.chosen) {
                    return Err(Error::InvalidStageResult(node));
                }
                let right = self.eval(r)?;
                let (ls, rs) = (dictionary_support(&left), dictionary_support(&right));
                if ls != rs {
                    self.diagnostics.push(Diagnostic::SequentialSupportMismatch {
                        node,
                        left: ls,
                        right: rs,
                    });
                }
                Ok(sequential_restrict(&right, stage))
            }
        }
    }

    fn binary(&mut self, op: Operation, l: &RuleExpr, r: &RuleExpr) -> Result<Dictionary> {
        let left = self.eval(l)?;
        let right = self.eval(r)?;
        combine(op, self.u, &left, Some(&right))
    }
}

/// One way the first-stage selections of a rule can turn out.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StageOutcome {
    pub stages: StageMap,
    pub dictionary: Dictionary,
}

/// Dictionaries for every admissible combination of first-stage results.
///
/// For a rule without `=>` this is a single outcome with no stages. The
/// number of outcomes is bounded by the universe's enumeration cap.
pub fn stage_outcomes(u: &Universe, expr: &RuleExpr) -> Result<Vec<StageOutcome>> {
    let mut next_seq = 0;
    let raw = outcomes(u, expr, &mut next_seq)?;
    Ok(raw
        .into_iter()
        .map(|(stages, dictionary)| StageOutcome { stages, dictionary })
        .collect())
}

fn outcomes(
    u: &Universe,
    expr: &RuleExpr,
    next_seq: &mut usize,
) -> Result<Vec<(StageMap, Dictionary)>> {
    if !expr.has_sequential() {
        return Ok(vec![(StageMap::new(), eval_rule(u, expr, &StageMap::new())?)]);
    }
    match expr {
        RuleExpr::Unit(_) => unreachable!("unit rules contain no sequential nodes"),
        RuleExpr::Not(c) => outcomes(u, c, next_seq)?
            .into_iter()
            .map(|(s, d)| Ok((s, combine(Operation::Not, u, &d, None)?)))
            .collect(),
        RuleExpr::And(l, r) => product(u, Operation::And, l, r, next_seq),
        RuleExpr::Or(l, r) => product(u, Operation::Or, l, r, next_seq),
        RuleExpr::Implies(l, r) => product(u, Operation::Implies, l, r, next_seq),
        RuleExpr::Sequential(l, r) => {
            let node = *next_seq;
            *next_seq += 1;
            let lefts = outcomes(u, l, next_seq)?;
            let rights = outcomes(u, r, next_seq)?;
            let total: u128 = lefts.iter().map(|(_, d)| d.len() as u128).sum::<u128>()
                * rights.len() as u128;
            u.ensure_enumerable(total)?;
            let mut out = Vec::new();
            for (ls, ld) in &lefts {
                for m in ld {
                    for (rs, rd) in &rights {
                        let mut stages = ls.clone();
                        stages.extend(rs.iter().map(|(k, v)| (*k, *v)));
                        stages.insert(node, StageResult::new(m));
                        out.push((stages, sequential_restrict(rd, StageResult::new(m))));
                    }
                }
            }
            Ok(out)
        }
    }
}

fn product(
    u: &Universe,
    op: Operation,
    l: &RuleExpr,
    r: &RuleExpr,
    next_seq: &mut usize,
) -> Result<Vec<(StageMap, Dictionary)>> {
    let lefts = outcomes(u, l, next_seq)?;
    let rights = outcomes(u, r, next_seq)?;
    u.ensure_enumerable(lefts.len() as u128 * rights.len() as u128)?;
    let mut out = Vec::with_capacity(lefts.len() * rights.len());
    for (ls, ld) in &lefts {
        for (rs, rd) in &rights {
            let mut stages = ls.clone();
            stages.extend(rs.iter().map(|(k, v)| (*k, *v)));
            out.push((stages, combine(op, u, ld, Some(rd))?));
        }
    }
    Ok(out)
}

/// Whether two `=>`-free rules have the same dictionary.
pub fn rules_equivalent(u: &Universe, first: &RuleExpr, second: &RuleExpr) -> Result<bool> {
    if first.has_sequential() || second.has_sequential() {
        return Err(Error::UnsupportedForEquivalence);
    }
    let none = StageMap::new();
    Ok(eval_rule(u, first, &none)? == eval_rule(u, second, &none)?)
}

/// Builds a rule from unit rules, `and` and `or` whose dictionary is `d`.
///
/// Each entry `F` becomes `select {|F|} of F and select {0} of V\F`, and the
/// entries are joined with `or` in a balanced tree. The empty dictionary maps
/// to the incoherent `select {|V|+1} of V`.
pub fn rule_from_dictionary(u: &Universe, d: &Dictionary) -> Result<RuleExpr> {
    for s in d {
        u.check(s)?;
    }
    let full = u.full();
    if d.is_empty() {
        let too_many = ConstraintSet::new([u.size() as u32 + 1])?;
        return Ok(RuleExpr::unit(full, too_many));
    }
    let terms = d
        .iter()
        .map(|f| {
            Ok(RuleExpr::and(
                RuleExpr::unit(f, ConstraintSet::new([f.len() as u32])?),
                RuleExpr::unit(full - f, ConstraintSet::new([0])?),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(balanced(terms, RuleExpr::or))
}

/// Folds `items` pairwise into a tree of depth `O(log n)`.
pub(crate) fn balanced<F>(mut items: Vec<RuleExpr>, join: F) -> RuleExpr
where
    F: Fn(RuleExpr, RuleExpr) -> RuleExpr,
{
    assert!(!items.is_empty());
    while items.len() > 1 {
        let mut next = Vec::with_capacity(items.len().div_ceil(2));
        let mut it = items.into_iter();
        while let Some(a) = it.next() {
            match it.next() {
                Some(b) => next.push(join(a, b)),
                None => next.push(a),
            }
        }
        items = next;
    }
    items.pop().unwrap()
}
