//! Python bindings: universes, rules, dictionaries, grouping structures and
//! dictionary-constrained model selection.
//!
//! Sets cross the boundary as lists of variable names; dictionaries as lists
//! of such lists in canonical order.

use pyo3::create_exception;
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use ruledict::grouping::{self, CongruenceReport};
use ruledict::select::{Criterion, InfoCriterion};
use ruledict::{Dictionary, Error, StageMap, VarSet};

create_exception!(ruledict_py, RuledictError, PyValueError);

fn to_py(e: Error) -> PyErr {
    match e {
        Error::Io(io) => PyOSError::new_err(io.to_string()),
        other => RuledictError::new_err(format!("{}: {}", other.kind(), other)),
    }
}

trait IntoPyResult<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> IntoPyResult<T> for ruledict::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(to_py)
    }
}

/// Named variables a rule is written against.
#[pyclass(frozen, from_py_object, module = "ruledict_py")]
#[derive(Clone)]
struct Universe {
    inner: ruledict::Universe,
}

#[pymethods]
impl Universe {
    #[new]
    #[pyo3(signature = (names, enum_cap=None))]
    fn new(names: Vec<String>, enum_cap: Option<usize>) -> PyResult<Self> {
        let mut inner = ruledict::Universe::new(names).py()?;
        if let Some(cap) = enum_cap {
            inner = inner.with_enum_cap(cap);
        }
        Ok(Universe { inner })
    }

    #[getter]
    fn names(&self) -> Vec<String> {
        self.inner.names().to_vec()
    }

    fn powerset(&self) -> PyResult<Vec<Vec<String>>> {
        Ok(self.dict_out(&ruledict::powerset(&self.inner).py()?))
    }

    fn __len__(&self) -> usize {
        self.inner.size()
    }

    fn __repr__(&self) -> String {
        format!("Universe([{}])", self.inner.names().join(", "))
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }
}

impl Universe {
    fn set_in(&self, names: Vec<String>) -> PyResult<VarSet> {
        self.inner.set(names).py()
    }

    fn dict_in(&self, sets: Vec<Vec<String>>) -> PyResult<Dictionary> {
        sets.into_iter()
            .map(|s| self.set_in(s))
            .collect::<PyResult<Dictionary>>()
    }

    fn set_out(&self, s: VarSet) -> Vec<String> {
        self.inner.names_of(s).into_iter().map(String::from).collect()
    }

    fn dict_out(&self, d: &Dictionary) -> Vec<Vec<String>> {
        d.iter().map(|s| self.set_out(s)).collect()
    }
}

/// A selection rule bound to its universe.
#[pyclass(frozen, from_py_object, module = "ruledict_py")]
#[derive(Clone)]
struct Rule {
    universe: Universe,
    expr: ruledict::RuleExpr,
}

#[pymethods]
impl Rule {
    /// Parses rule text against `universe`.
    #[staticmethod]
    fn parse(text: &str, universe: Universe) -> PyResult<Self> {
        let expr = ruledict::parse_rule(text, &universe.inner).py()?;
        Ok(Rule { universe, expr })
    }

    /// Parses a rule file with an optional `vars:` line.
    #[staticmethod]
    #[pyo3(signature = (text, universe=None))]
    fn parse_file(text: &str, universe: Option<Universe>) -> PyResult<Self> {
        let rf = ruledict::parse_rule_file(text, universe.as_ref().map(|u| &u.inner)).py()?;
        Ok(Rule {
            universe: Universe { inner: rf.universe },
            expr: rf.rule,
        })
    }

    #[getter]
    fn universe(&self) -> Universe {
        self.universe.clone()
    }

    /// Number of `=>` nodes; each needs a stage result.
    #[getter]
    fn sequential_count(&self) -> usize {
        self.expr.sequential_count()
    }

    /// The selection dictionary. `stages` gives the first-stage result of each
    /// `=>` node in pre-order.
    #[pyo3(signature = (stages=None))]
    fn dictionary(&self, stages: Option<Vec<Vec<String>>>) -> PyResult<Vec<Vec<String>>> {
        let chosen = stages
            .unwrap_or_default()
            .into_iter()
            .map(|s| self.universe.set_in(s))
            .collect::<PyResult<Vec<_>>>()?;
        let d = ruledict::eval_rule(
            &self.universe.inner,
            &self.expr,
            &ruledict::stages_in_order(chosen),
        )
        .py()?;
        Ok(self.universe.dict_out(&d))
    }

    fn equivalent(&self, other: &Rule) -> PyResult<bool> {
        if self.universe.inner != other.universe.inner {
            return Err(to_py(Error::UniverseMismatch(
                "rules are written against different universes".into(),
            )));
        }
        ruledict::rules_equivalent(&self.universe.inner, &self.expr, &other.expr).py()
    }

    fn __str__(&self) -> String {
        ruledict::format_rule(&self.expr, &self.universe.inner)
    }

    fn __repr__(&self) -> String {
        format!("Rule({:?})", self.__str__())
    }
}

impl Rule {
    fn plain_dictionary(&self) -> PyResult<Dictionary> {
        ruledict::eval_rule(&self.universe.inner, &self.expr, &StageMap::new()).py()
    }
}

fn report_dict<'py>(
    py: Python<'py>,
    u: &Universe,
    r: &CongruenceReport,
) -> PyResult<Bound<'py, PyDict>> {
    let out = PyDict::new(py);
    out.set_item("congruent", r.congruent)?;
    out.set_item("missing", u.dict_out(&r.missing))?;
    out.set_item("extra", u.dict_out(&r.extra))?;
    Ok(out)
}

fn method_from(name: &str) -> PyResult<ruledict::Method> {
    ruledict::Method::ALL
        .into_iter()
        .find(|m| {
            let short = match m {
                ruledict::Method::Lasso => "lasso",
                ruledict::Method::AdaptiveLasso => "adaptive_lasso",
                ruledict::Method::GroupLasso => "group_lasso",
                ruledict::Method::ExclusiveGroupLasso => "exclusive_group_lasso",
                ruledict::Method::LatentOverlappingGroupLasso => "log",
            };
            name.eq_ignore_ascii_case(short) || name.eq_ignore_ascii_case(m.display_name())
        })
        .ok_or_else(|| PyValueError::new_err(format!("unknown method `{name}`")))
}

/// Groups of variables used by a penalized regression method.
#[pyclass(frozen, from_py_object, module = "ruledict_py")]
#[derive(Clone)]
struct Grouping {
    universe: Universe,
    inner: ruledict::GroupingStructure,
}

#[pymethods]
impl Grouping {
    #[new]
    fn new(universe: Universe, groups: Vec<Vec<String>>) -> PyResult<Self> {
        let sets = groups
            .into_iter()
            .map(|g| universe.set_in(g))
            .collect::<PyResult<Vec<_>>>()?;
        let inner = ruledict::GroupingStructure::new(&universe.inner, sets).py()?;
        Ok(Grouping { universe, inner })
    }

    #[getter]
    fn groups(&self) -> Vec<Vec<String>> {
        self.inner
            .groups()
            .iter()
            .map(|&g| self.universe.set_out(g))
            .collect()
    }

    /// Every union over a subset of the groups, including the empty union.
    fn union_closure(&self) -> PyResult<Vec<Vec<String>>> {
        let d = ruledict::union_closure(&self.universe.inner, &self.inner).py()?;
        Ok(self.universe.dict_out(&d))
    }

    /// Exact congruence test for latent overlapping group Lasso.
    fn check_log<'py>(&self, py: Python<'py>, rule: &Rule) -> PyResult<Bound<'py, PyDict>> {
        let d = rule.plain_dictionary()?;
        let r = ruledict::check_log_congruence(&self.universe.inner, &self.inner, &d).py()?;
        report_dict(py, &self.universe, &r)
    }

    /// Necessary-condition test for overlapping group Lasso.
    fn check_ogl<'py>(&self, py: Python<'py>, rule: &Rule) -> PyResult<Bound<'py, PyDict>> {
        let d = rule.plain_dictionary()?;
        let r = ruledict::check_ogl_necessary(&self.universe.inner, &self.inner, &d).py()?;
        let out = report_dict(py, &self.universe, &r.report)?;
        out.set_item("reduced_rule", self.universe.dict_out(&r.reduced_rule))?;
        out.set_item(
            "complement_family",
            self.universe.dict_out(&r.complement_family),
        )?;
        Ok(out)
    }

    fn compatible(&self, method: &str) -> PyResult<bool> {
        Ok(ruledict::check_compatibility(method_from(method)?, &self.inner))
    }

    /// The key rule of `method` for this grouping.
    fn method_rule(&self, method: &str) -> PyResult<Rule> {
        let expr =
            ruledict::method_rule(method_from(method)?, &self.universe.inner, &self.inner).py()?;
        Ok(Rule {
            universe: self.universe.clone(),
            expr,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __repr__(&self) -> String {
        let groups: Vec<String> = self
            .inner
            .groups()
            .iter()
            .map(|&g| self.universe.inner.display_set(g))
            .collect();
        format!("Grouping([{}])", groups.join(", "))
    }
}

/// A rule whose dictionary is exactly `dictionary`.
#[pyfunction]
fn rule_from_dictionary(universe: Universe, dictionary: Vec<Vec<String>>) -> PyResult<Rule> {
    let d = universe.dict_in(dictionary)?;
    let expr = ruledict::rule_from_dictionary(&universe.inner, &d).py()?;
    Ok(Rule { universe, expr })
}

/// The unique minimal latent overlapping group Lasso grouping whose union
/// closure is `dictionary`. Raises `RuledictError` when none exists.
#[pyfunction]
fn synthesize_log_grouping(universe: Universe, dictionary: Vec<Vec<String>>) -> PyResult<Grouping> {
    let d = universe.dict_in(dictionary)?;
    match grouping::synthesize_log_grouping(&universe.inner, &d).py()? {
        Ok(inner) => Ok(Grouping { universe, inner }),
        Err(failure) => Err(RuledictError::new_err(format!(
            "no grouping exists: {}",
            failure.describe(&universe.inner)
        ))),
    }
}

/// Fits every dictionary entry by least squares and ranks them, best first.
///
/// `rows` holds one list of covariate values per observation, in universe
/// order. Returns dicts with `subset`, `score`, `intercept` and
/// `coefficients`.
#[pyfunction]
#[pyo3(signature = (rule, rows, y, criterion="bic", folds=None, seed=None))]
fn select_best<'py>(
    py: Python<'py>,
    rule: &Rule,
    rows: Vec<Vec<f64>>,
    y: Vec<f64>,
    criterion: &str,
    folds: Option<usize>,
    seed: Option<u64>,
) -> PyResult<Vec<Bound<'py, PyDict>>> {
    let criterion = match criterion.to_ascii_lowercase().as_str() {
        "aic" => Criterion::Info(InfoCriterion::Aic),
        "bic" => Criterion::Info(InfoCriterion::Bic),
        "adjr2" => Criterion::Info(InfoCriterion::AdjR2),
        "cv" => Criterion::CrossValidation {
            folds: folds.unwrap_or(5),
            seed,
        },
        other => return Err(PyValueError::new_err(format!("unknown criterion `{other}`"))),
    };
    let u = &rule.universe;
    let dataset = ruledict::Dataset::new(&u.inner, "(outcome)", rows, y).py()?;
    let d = rule.plain_dictionary()?;
    let ranked = py
        .detach(|| ruledict::select_best(&dataset, &d, criterion))
        .py()?;
    ranked
        .models
        .iter()
        .map(|m| {
            let out = PyDict::new(py);
            out.set_item("subset", u.set_out(m.fit.subset))?;
            out.set_item("score", m.score)?;
            out.set_item("intercept", m.fit.intercept)?;
            let coefficients = PyDict::new(py);
            for (j, b) in m.fit.named() {
                coefficients.set_item(&u.inner.names()[j], b)?;
            }
            out.set_item("coefficients", coefficients)?;
            Ok(out)
        })
        .collect()
}

#[pymodule]
fn ruledict_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    m.add("RuledictError", m.py().get_type::<RuledictError>())?;
    m.add_class::<Universe>()?;
    m.add_class::<Rule>()?;
    m.add_class::<Grouping>()?;
    m.add_function(wrap_pyfunction!(rule_from_dictionary, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize_log_grouping, m)?)?;
    m.add_function(wrap_pyfunction!(select_best, m)?)?;
    Ok(())
}
