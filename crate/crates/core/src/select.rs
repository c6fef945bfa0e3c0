//! Best-subset selection restricted to a selection dictionary.
//!
//! Every entry of the dictionary is fitted by ordinary least squares with an
//! intercept and scored; nothing outside the dictionary is ever fitted.
//!
//! Information criteria use the Gaussian profile likelihood with the error
//! variance profiled out, counting it as a parameter:
//!
//! ```text
//! AIC = n ln(RSS/n) + 2 (k + 1)
//! BIC = n ln(RSS/n) + (k + 1) ln n
//! ```
//!
//! where `k = |subset| + 1` counts the intercept. Adjusted R² is negated so
//! that smaller is better for every criterion. A perfect fit (`RSS = 0`)
//! scores `-inf`.

use std::cmp::Ordering;
use std::io::Read;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{Dictionary, Universe, VarSet};

/// Relative threshold below which a column is treated as linearly dependent
/// on the columns before it.
const RANK_TOLERANCE: f64 = 1e-10;

/// Covariates (one column per universe variable) and an outcome.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    universe: Universe,
    outcome: String,
    /// Row-major `n x p` covariate values.
    values: Vec<f64>,
    y: Vec<f64>,
}

impl Dataset {
    /// Builds a dataset from row-major covariate rows.
    pub fn new(u: &Universe, outcome: &str, rows: Vec<Vec<f64>>, y: Vec<f64>) -> Result<Self> {
        if u.index_of(outcome).is_some() {
            return Err(Error::UniverseMismatch(format!(
                "outcome `{outcome}` is also a covariate"
            )));
        }
        if rows.len() != y.len() {
            return Err(Error::UniverseMismatch(format!(
                "{} covariate rows but {} outcome values",
                rows.len(),
                y.len()
            )));
        }
        if y.len() < 2 {
            return Err(Error::TooFewRows(y.len()));
        }
        let p = u.size();
        let mut values = Vec::with_capacity(rows.len() * p);
        for (r, row) in rows.into_iter().enumerate() {
            if row.len() != p {
                return Err(Error::UniverseMismatch(format!(
                    "row {} has {} values for {} variables",
                    r + 1,
                    row.len(),
                    p
                )));
            }
            for (j, v) in row.into_iter().enumerate() {
                if !v.is_finite() {
                    return Err(Error::DataParse {
                        row: r + 1,
                        column: u.names()[j].clone(),
                        value: v.to_string(),
                    });
                }
                values.push(v);
            }
        }
        if let Some(r) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::DataParse {
                row: r + 1,
                column: outcome.to_string(),
                value: y[r].to_string(),
            });
        }
        Ok(Dataset {
            universe: u.clone(),
            outcome: outcome.to_string(),
            values,
            y,
        })
    }

    pub fn universe(&self) -> &Universe {
        &self.universe
    }

    pub fn outcome_name(&self) -> &str {
        &self.outcome
    }

    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn outcome(&self) -> &[f64] {
        &self.y
    }

    pub fn value(&self, row: usize, var: usize) -> f64 {
        self.values[row * self.universe.size() + var]
    }
}

fn is_missing(cell: &str) -> bool {
    cell.is_empty()
        || ["na", "nan", "null", "none"]
            .iter()
            .any(|m| cell.eq_ignore_ascii_case(m))
}

/// Reads a CSV file with a header row. Columns not named by the universe or
/// the outcome are ignored.
pub fn load_dataset(path: impl AsRef<Path>, outcome: &str, u: &Universe) -> Result<Dataset> {
    let file = std::fs::File::open(path)?;
    read_dataset(file, outcome, u)
}

/// [`load_dataset`] over any reader. Row numbers in errors count data rows
/// from 1, excluding the header.
pub fn read_dataset<R: Read>(reader: R, outcome: &str, u: &Universe) -> Result<Dataset> {
    let mut csv = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);
    let header = csv.headers()?.clone();
    let position = |name: &str| {
        header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::SchemaMismatch(name.to_string()))
    };
    let covariate_cols = u
        .names()
        .iter()
        .map(|n| position(n))
        .collect::<Result<Vec<_>>>()?;
    let outcome_col = position(outcome)?;

    let mut rows = Vec::new();
    let mut y = Vec::new();
    for (r, record) in csv.records().enumerate() {
        let record = record?;
        let row = r + 1;
        let cell = |col: usize, name: &str| -> Result<f64> {
            let raw = record.get(col).unwrap_or("");
            if is_missing(raw) {
                return Err(Error::MissingValue {
                    row,
                    column: name.to_string(),
                });
            }
            match raw.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(Error::DataParse {
                    row,
                    column: name.to_string(),
                    value: raw.to_string(),
                }),
            }
        };
        let values = covariate_cols
            .iter()
            .zip(u.names())
            .map(|(&c, name)| cell(c, name))
            .collect::<Result<Vec<_>>>()?;
        y.push(cell(outcome_col, outcome)?);
        rows.push(values);
    }
    Dataset::new(u, outcome, rows, y)
}

/// Least-squares fit of the outcome on one subset plus an intercept.
#[derive(Debug, Clone, PartialEq)]
pub struct FitResult {
    pub subset: VarSet,
    pub intercept: f64,
    /// One coefficient per member of `subset`, in universe order.
    pub coefficients: Vec<f64>,
    pub rss: f64,
    /// Total sum of squares of the outcome about its mean.
    pub tss: f64,
    /// Number of mean parameters, `|subset| + 1`.
    pub k: usize,
    pub n: usize,
}

impl FitResult {
    /// Coefficients paired with variable indices.
    pub fn named(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.subset.iter().zip(self.coefficients.iter().copied())
    }

    pub fn predict(&self, d: &Dataset, row: usize) -> f64 {
        self.intercept
            + self
                .named()
                .map(|(j, b)| b * d.value(row, j))
                .sum::<f64>()
    }
}

/// Solves least squares on the given rows by Householder QR. Returns
/// `[intercept, coefficients...]`.
fn solve(d: &Dataset, rows: &[usize], vars: &[usize]) -> Result<Vec<f64>> {
    let n = rows.len();
    let k = vars.len() + 1;
    if k > n {
        return Err(Error::Underdetermined { params: k, rows: n });
    }
    let x = DMatrix::from_fn(n, k, |r, c| {
        if c == 0 {
            1.0
        } else {
            d.value(rows[r], vars[c - 1])
        }
    });
    let mut qty = DVector::from_iterator(n, rows.iter().map(|&r| d.y[r]));
    let deficient = || {
        let names: Vec<&str> = vars.iter().filter_map(|&j| d.universe.name(j)).collect();
        Error::RankDeficient(format!("{{{}}}", names.join(",")))
    };

    let col_norms: Vec<f64> = (0..k).map(|j| x.column(j).norm()).collect();
    let qr = x.qr();
    let r = qr.r();
    for (j, &norm) in col_norms.iter().enumerate() {
        if norm == 0.0 || r[(j, j)].abs() <= RANK_TOLERANCE * norm {
            return Err(deficient());
        }
    }
    qr.q_tr_mul(&mut qty);
    let rhs = qty.rows(0, k).into_owned();
    let beta = r.solve_upper_triangular(&rhs).ok_or_else(deficient)?;
    Ok(beta.iter().copied().collect())
}

/// Fits the outcome on `subset` with an intercept.
pub fn fit_ols(d: &Dataset, subset: VarSet) -> Result<FitResult> {
    d.universe.check(subset)?;
    let vars: Vec<usize> = subset.iter().collect();
    let rows: Vec<usize> = (0..d.n()).collect();
    let beta = solve(d, &rows, &vars)?;
    let mean = d.y.iter().sum::<f64>() / d.n() as f64;
    let tss = d.y.iter().map(|v| (v - mean).powi(2)).sum();
    let mut fit = FitResult {
        subset,
        intercept: beta[0],
        coefficients: beta[1..].to_vec(),
        rss: 0.0,
        tss,
        k: vars.len() + 1,
        n: d.n(),
    };
    fit.rss = (0..d.n())
        .map(|r| (d.y[r] - fit.predict(d, r)).powi(2))
        .sum();
    Ok(fit)
}

/// Criteria computed from a single full-data fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum InfoCriterion {
    Aic,
    Bic,
    AdjR2,
}

impl InfoCriterion {
    pub fn tag(self) -> &'static str {
        match self {
            InfoCriterion::Aic => "aic",
            InfoCriterion::Bic => "bic",
            InfoCriterion::AdjR2 => "adjr2",
        }
    }
}

/// Score of a fit; smaller is better.
pub fn score(fit: &FitResult, criterion: InfoCriterion, n: usize) -> Result<f64> {
    criterion_value(criterion, fit.rss, fit.tss, fit.k, n as f64)
}

/// The criterion formula with a real-valued sample size.
pub fn criterion_value(criterion: InfoCriterion, rss: f64, tss: f64, k: usize, n: f64) -> Result<f64> {
    if rss <= 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let k = k as f64;
    let fit_term = n * (rss / n).ln();
    Ok(match criterion {
        InfoCriterion::Aic => fit_term + 2.0 * (k + 1.0),
        InfoCriterion::Bic => fit_term + (k + 1.0) * n.ln(),
        InfoCriterion::AdjR2 => {
            if n <= k {
                return Err(Error::Underdetermined {
                    params: k as usize + 1,
                    rows: n as usize,
                });
            }
            let adj = 1.0 - (rss / (n - k)) / (tss / (n - 1.0));
            -adj
        }
    })
}

/// How candidate subsets are scored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Criterion {
    Info(InfoCriterion),
    /// Mean held-out squared error over `folds` contiguous blocks of rows.
    /// With a seed, rows are shuffled before being split.
    CrossValidation { folds: usize, seed: Option<u64> },
}

impl Criterion {
    pub const AIC: Criterion = Criterion::Info(InfoCriterion::Aic);
    pub const BIC: Criterion = Criterion::Info(InfoCriterion::Bic);
    pub const ADJ_R2: Criterion = Criterion::Info(InfoCriterion::AdjR2);

    pub fn tag(self) -> &'static str {
        match self {
            Criterion::Info(c) => c.tag(),
            Criterion::CrossValidation { .. } => "cv",
        }
    }
}

/// Row indices of each fold.
pub fn fold_partition(n: usize, folds: usize, seed: Option<u64>) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return Err(Error::InvalidFolds { folds, rows: n });
    }
    let mut order: Vec<usize> = (0..n).collect();
    if let Some(seed) = seed {
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    }
    Ok((0..folds)
        .map(|f| order[f * n / folds..(f + 1) * n / folds].to_vec())
        .collect())
}

/// Mean held-out squared error of `subset` across the folds.
pub fn cross_validated_error(d: &Dataset, subset: VarSet, folds: &[Vec<usize>]) -> Result<f64> {
    let vars: Vec<usize> = subset.iter().collect();
    let mut held_out = vec![false; d.n()];
    let mut sse = 0.0;
    let mut count = 0usize;
    for fold in folds {
        held_out.iter_mut().for_each(|h| *h = false);
        for &r in fold {
            held_out[r] = true;
        }
        let train: Vec<usize> = (0..d.n()).filter(|&r| !held_out[r]).collect();
        let beta = solve(d, &train, &vars)?;
        for &r in fold {
            let pred = beta[0]
                + vars
                    .iter()
                    .zip(&beta[1..])
                    .map(|(&j, b)| b * d.value(r, j))
                    .sum::<f64>();
            sse += (d.y[r] - pred).powi(2);
            count += 1;
        }
    }
    Ok(sse / count as f64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedModel {
    pub fit: FitResult,
    pub score: f64,
}

/// Fitted dictionary entries, best first.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedModels {
    pub criterion: Criterion,
    pub models: Vec<RankedModel>,
}

impl RankedModels {
    pub fn best(&self) -> &RankedModel {
        &self.models[0]
    }
}

fn rank_order(a: &RankedModel, b: &RankedModel) -> Ordering {
    a.score
        .total_cmp(&b.score)
        .then(a.fit.subset.len().cmp(&b.fit.subset.len()))
        .then(a.fit.subset.cmp(&b.fit.subset))
}

/// Fits and scores every entry of `dict`; nothing else is fitted.
pub fn select_best(d: &Dataset, dict: &Dictionary, criterion: Criterion) -> Result<RankedModels> {
    if dict.is_empty() {
        return Err(Error::EmptyDictionary);
    }
    let folds = match criterion {
        Criterion::CrossValidation { folds, seed } => Some(fold_partition(d.n(), folds, seed)?),
        Criterion::Info(_) => None,
    };
    let mut models = dict
        .entries()
        .par_iter()
        .map(|&subset| {
            let fit = fit_ols(d, subset)?;
            let score = match (&folds, criterion) {
                (Some(folds), _) => cross_validated_error(d, subset, folds)?,
                (None, Criterion::Info(c)) => score(&fit, c, d.n())?,
                (None, Criterion::CrossValidation { .. }) => unreachable!(),
            };
            Ok(RankedModel { fit, score })
        })
        .collect::<Result<Vec<_>>>()?;
    models.sort_by(rank_order);
    debug_assert_eq!(models.len(), dict.len());
    debug_assert!(dict.contains(models[0].fit.subset));
    Ok(RankedModels { criterion, models })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Universe {
        Universe::new(["A", "B", "C"]).unwrap()
    }

    #[test]
    fn loads_csv() {
        let u = abc();
        let csv = "A,B,C,Y\n1,2,3,4\n2,3,5,7\n3,1,1,2\n";
        let d = read_dataset(csv.as_bytes(), "Y", &u).unwrap();
        assert_eq!(d.n(), 3);
        assert_eq!(d.value(1, 2), 5.0);
        assert_eq!(d.outcome(), &[4.0, 7.0, 2.0]);
    }

    #[test]
    fn csv_errors() {
        let u = abc();
        assert!(matches!(
            read_dataset("A,B,Y\n1,2,3\n4,5,6\n".as_bytes(), "Y", &u),
            Err(Error::SchemaMismatch(c)) if c == "C"
        ));
        assert!(matches!(
            read_dataset("A,B,C,Y\n1,2,3,4\n1,NA,3,4\n".as_bytes(), "Y", &u),
            Err(Error::MissingValue { row: 2, column }) if column == "B"
        ));
        assert!(matches!(
            read_dataset("A,B,C,Y\n1,2,x,4\n1,2,3,4\n".as_bytes(), "Y", &u),
            Err(Error::DataParse { row: 1, column, .. }) if column == "C"
        ));
        assert!(matches!(
            read_dataset("A,B,C,Y\n1,2,3,4\n".as_bytes(), "Y", &u),
            Err(Error::TooFewRows(1))
        ));
        assert!(matches!(
            read_dataset("A,B,C,Y\n1,2,3,inf\n1,2,3,4\n".as_bytes(), "Y", &u),
            Err(Error::DataParse { .. })
        ));
    }

    fn dataset(u: &Universe, rows: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset {
        Dataset::new(u, "Y", rows, y).unwrap()
    }

    #[test]
    fn intercept_only_fit() {
        let u = Universe::new(["A"]).unwrap();
        let y = vec![1.0, 2.0, 6.0];
        let d = dataset(&u, vec![vec![0.0], vec![1.0], vec![5.0]], y);
        let f = fit_ols(&d, VarSet::EMPTY).unwrap();
        assert!((f.intercept - 3.0).abs() < 1e-12);
        assert!((f.rss - 14.0).abs() < 1e-12);
        assert!((f.rss - f.tss).abs() < 1e-12);
        assert_eq!(f.k, 1);
    }

    #[test]
    fn perfect_fit() {
        let u = Universe::new(["A"]).unwrap();
        let xs = [0.5, 1.5, -2.0, 3.0, 4.25];
        let d = dataset(&u, xs.iter().map(|&x| vec![x]).collect(), xs.to_vec());
        let f = fit_ols(&d, u.full()).unwrap();
        assert!(f.rss < 1e-10);
        assert!((f.coefficients[0] - 1.0).abs() < 1e-10);
        assert!(f.intercept.abs() < 1e-10);
    }

    #[test]
    fn rank_deficiency_and_underdetermined() {
        let u = Universe::new(["A", "B"]).unwrap();
        let rows = vec![vec![1.0, 2.0], vec![2.0, 4.0], vec![3.0, 6.0], vec![4.0, 8.0]];
        let d = dataset(&u, rows, vec![1.0, 2.0, 2.0, 5.0]);
        assert!(matches!(fit_ols(&d, u.full()), Err(Error::RankDeficient(_))));

        let rows = vec![vec![1.0, 0.0], vec![2.0, 1.0]];
        let d = dataset(&u, rows, vec![1.0, 3.0]);
        assert!(matches!(
            fit_ols(&d, u.full()),
            Err(Error::Underdetermined { params: 3, rows: 2 })
        ));

        let rows = vec![vec![0.0, 1.0], vec![0.0, 2.0], vec![0.0, 4.0]];
        let d = dataset(&u, rows, vec![1.0, 3.0, 2.0]);
        assert!(matches!(fit_ols(&d, u.set(["A"]).unwrap()), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn criterion_plug_ins() {
        let n = 10.0;
        let aic = criterion_value(InfoCriterion::Aic, n, 20.0, 1, n).unwrap();
        assert!((aic - 4.0).abs() < 1e-12);
        let n = std::f64::consts::E.powi(2);
        let bic = criterion_value(InfoCriterion::Bic, n, 20.0, 1, n).unwrap();
        assert!((bic - 4.0).abs() < 1e-12);
        assert_eq!(
            criterion_value(InfoCriterion::Bic, 0.0, 1.0, 2, 10.0).unwrap(),
            f64::NEG_INFINITY
        );
        // adj R2 = 1 - (rss/(n-k)) / (tss/(n-1)) = 1 - (2/8)/(9/9) = 0.75
        let adj = criterion_value(InfoCriterion::AdjR2, 2.0, 9.0, 2, 10.0).unwrap();
        assert!((adj + 0.75).abs() < 1e-12);
        assert!(criterion_value(InfoCriterion::AdjR2, 2.0, 9.0, 3, 3.0).is_err());
    }

    #[test]
    fn folds() {
        let f = fold_partition(10, 3, None).unwrap();
        assert_eq!(f, vec![vec![0, 1, 2], vec![3, 4, 5], vec![6, 7, 8, 9]]);
        let s1 = fold_partition(10, 3, Some(7)).unwrap();
        let s2 = fold_partition(10, 3, Some(7)).unwrap();
        assert_eq!(s1, s2);
        let mut all: Vec<usize> = s1.concat();
        all.sort();
        assert_eq!(all, (0..10).collect::<Vec<_>>());
        assert!(fold_partition(10, 1, None).is_err());
        assert!(fold_partition(3, 4, None).is_err());
    }

    #[test]
    fn empty_dictionary_is_an_error() {
        let u = abc();
        let rows = vec![vec![1.0, 2.0, 3.0], vec![0.0, 1.0, 1.0], vec![2.0, 2.0, 0.0]];
        let d = dataset(&u, rows, vec![1.0, 2.0, 3.0]);
        assert!(matches!(
            select_best(&d, &Dictionary::empty(), Criterion::BIC),
            Err(Error::EmptyDictionary)
        ));
        let r = select_best(&d, &Dictionary::new([VarSet::EMPTY]), Criterion::BIC).unwrap();
        assert_eq!(r.models.len(), 1);
        assert!(r.best().fit.coefficients.is_empty());
    }

    #[test]
    fn ranking_tie_break() {
        let mk = |bits: u64, score: f64| RankedModel {
            fit: FitResult {
                subset: VarSet::from_bits(bits),
                intercept: 0.0,
                coefficients: vec![],
                rss: 0.0,
                tss: 0.0,
                k: 0,
                n: 0,
            },
            score,
        };
        let mut v = vec![
            mk(0b11, f64::NEG_INFINITY),
            mk(0b100, f64::NEG_INFINITY),
            mk(0b1, 1.0),
            mk(0b10, f64::NEG_INFINITY),
        ];
        v.sort_by(rank_order);
        let order: Vec<u64> = v.iter().map(|m| m.fit.subset.bits()).collect();
        assert_eq!(order, vec![0b10, 0b100, 0b11, 0b1]);
    }
}
