//! Independent oracles and generators shared by the integration tests.
//!
//! Nothing here calls the engine's evaluation, closure or fitting code; the
//! oracles work directly from definitions on plain bitmasks.

#![allow(dead_code)]

use proptest::prelude::*;
use ruledict::{ConstraintSet, Dictionary, RuleExpr, Universe, VarSet};

pub fn universe(n: usize) -> Universe {
    Universe::new((0..n).map(|i| format!("x{i}"))).unwrap()
}

pub fn set(u: &Universe, names: &[&str]) -> VarSet {
    u.set(names.iter().copied()).unwrap()
}

pub fn dict(u: &Universe, sets: &[&[&str]]) -> Dictionary {
    sets.iter().map(|s| set(u, s)).collect()
}

/// Does subset `s` respect `expr`? A unit rule holds when the number of
/// selected variables in F lies in C, unless some count in C exceeds |F|,
/// in which case the unit is incoherent and nothing respects it.
pub fn satisfies(expr: &RuleExpr, s: u64) -> bool {
    match expr {
        RuleExpr::Unit(unit) => {
            let size = unit.scope.bits().count_ones() as usize;
            let k = (s & unit.scope.bits()).count_ones() as usize;
            unit.counts.iter().all(|c| c as usize <= size) && unit.counts.contains(k)
        }
        RuleExpr::Not(c) => !satisfies(c, s),
        RuleExpr::And(l, r) => satisfies(l, s) && satisfies(r, s),
        RuleExpr::Or(l, r) => satisfies(l, s) || satisfies(r, s),
        RuleExpr::Implies(l, r) => !satisfies(l, s) || satisfies(r, s),
        RuleExpr::Sequential(..) => panic!("oracle has no data for `=>`"),
    }
}

/// Subsets of an `n`-variable universe respecting `expr`, in increasing
/// bitmask order.
pub fn brute_dictionary(n: usize, expr: &RuleExpr) -> Vec<u64> {
    (0..1u64 << n).filter(|&s| satisfies(expr, s)).collect()
}

pub fn bits(d: &Dictionary) -> Vec<u64> {
    let mut v: Vec<u64> = d.iter().map(|s| s.bits()).collect();
    v.sort_unstable();
    v
}

/// Every union over a subset of `groups`, by enumerating all 2^I subsets.
pub fn brute_closure(groups: &[u64]) -> Vec<u64> {
    assert!(groups.len() <= 20);
    let mut out: Vec<u64> = (0..1u64 << groups.len())
        .map(|q| {
            groups
                .iter()
                .enumerate()
                .filter(|(i, _)| q >> i & 1 == 1)
                .fold(0, |acc, (_, g)| acc | g)
        })
        .collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Least-squares coefficients `[intercept, b...]` via the normal equations
/// `X'X b = X'y`, solved by Gaussian elimination with partial pivoting.
pub fn normal_equations(x: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let p = x[0].len() + 1;
    let row = |r: usize| std::iter::once(1.0).chain(x[r].iter().copied()).collect::<Vec<_>>();
    let mut a = vec![vec![0.0; p + 1]; p];
    for r in 0..y.len() {
        let xr = row(r);
        for i in 0..p {
            for j in 0..p {
                a[i][j] += xr[i] * xr[j];
            }
            a[i][p] += xr[i] * y[r];
        }
    }
    for col in 0..p {
        let pivot = (col..p)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, pivot);
        for r in 0..p {
            if r != col {
                let f = a[r][col] / a[col][col];
                for c in col..=p {
                    a[r][c] -= f * a[col][c];
                }
            }
        }
    }
    (0..p).map(|i| a[i][p] / a[i][i]).collect()
}

/// Residual sum of squares of the normal-equations fit on the given columns.
pub fn oracle_rss(x: &[Vec<f64>], y: &[f64], cols: &[usize]) -> f64 {
    let sub: Vec<Vec<f64>> = x.iter().map(|r| cols.iter().map(|&c| r[c]).collect()).collect();
    let beta = if cols.is_empty() {
        vec![y.iter().sum::<f64>() / y.len() as f64]
    } else {
        normal_equations(&sub, y)
    };
    sub.iter()
        .zip(y)
        .map(|(r, &yi)| {
            let pred = beta[0] + r.iter().zip(&beta[1..]).map(|(a, b)| a * b).sum::<f64>();
            (yi - pred).powi(2)
        })
        .sum()
}

/// A unit rule over `n` variables. Counts range up to `n + 1` so incoherent
/// units occur.
pub fn unit_strategy(n: usize) -> impl Strategy<Value = RuleExpr> {
    (
        0..1u64 << n,
        proptest::collection::btree_set(0..=n as u32 + 1, 1..=3),
    )
        .prop_map(|(scope, counts)| {
            RuleExpr::unit(VarSet::from_bits(scope), ConstraintSet::new(counts).unwrap())
        })
}

/// Rules of depth at most `depth` (a unit has depth 1) built with `not`,
/// `and`, `or` and `->`.
pub fn rule_strategy(n: usize, depth: u32) -> BoxedStrategy<RuleExpr> {
    let leaf = unit_strategy(n).boxed();
    if depth <= 1 {
        return leaf;
    }
    let sub = rule_strategy(n, depth - 1);
    prop_oneof![
        2 => leaf,
        1 => sub.clone().prop_map(RuleExpr::not),
        2 => (sub.clone(), sub.clone()).prop_map(|(a, b)| RuleExpr::and(a, b)),
        2 => (sub.clone(), sub.clone()).prop_map(|(a, b)| RuleExpr::or(a, b)),
        2 => (sub.clone(), sub).prop_map(|(a, b)| RuleExpr::implies(a, b)),
    ]
    .boxed()
}

/// Like [`rule_strategy`] but may also contain `=>`.
pub fn rule_strategy_with_seq(n: usize, depth: u32) -> BoxedStrategy<RuleExpr> {
    let leaf = unit_strategy(n).boxed();
    if depth <= 1 {
        return leaf;
    }
    let sub = rule_strategy_with_seq(n, depth - 1);
    prop_oneof![
        2 => leaf,
        1 => sub.clone().prop_map(RuleExpr::not),
        2 => (sub.clone(), sub.clone()).prop_map(|(a, b)| RuleExpr::and(a, b)),
        2 => (sub.clone(), sub.clone()).prop_map(|(a, b)| RuleExpr::or(a, b)),
        1 => (sub.clone(), sub.clone()).prop_map(|(a, b)| RuleExpr::implies(a, b)),
        1 => (sub.clone(), sub).prop_map(|(a, b)| RuleExpr::sequential(a, b)),
    ]
    .boxed()
}

/// A universe size in `1..=max_n` paired with a rule over it.
pub fn sized_rule(max_n: usize, depth: u32) -> impl Strategy<Value = (usize, RuleExpr)> {
    (1..=max_n).prop_flat_map(move |n| (Just(n), rule_strategy(n, depth)))
}

/// A grouping over `n` variables: `1..=max_groups` non-empty groups, with
/// one extra group added when needed so the groups cover the universe.
pub fn grouping_strategy(n: usize, max_groups: usize) -> impl Strategy<Value = Vec<u64>> {
    let full = (1u64 << n) - 1;
    proptest::collection::vec(1..=full, 1..=max_groups).prop_map(move |mut groups| {
        groups.sort_unstable();
        groups.dedup();
        let covered = groups.iter().fold(0, |a, g| a | g);
        if covered != full {
            groups.push(full & !covered);
        }
        groups
    })
}

/// Deterministic standard-normal draws.
pub fn normals(seed: u64, count: usize, sd: f64) -> Vec<f64> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, Normal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let dist = Normal::new(0.0, sd).unwrap();
    (0..count).map(|_| dist.sample(&mut rng)).collect()
}
