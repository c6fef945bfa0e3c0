//! Selection rules and their selection dictionaries.
//!
//! A selection rule constrains which subsets of a variable universe may form
//! a model. Rules are built from unit rules ("select a number of variables
//! from a set") with `not`, `and`, `or`, `->` and `=>`, and each rule has a
//! unique dictionary: the family of permitted subsets.
//!
//! ```
//! use ruledict::{eval_rule, parse_rule, StageMap, Universe};
//!
//! let u = Universe::new(["A", "B1", "B2"]).unwrap();
//! let rule = parse_rule("select {0,2} of {B1,B2}", &u).unwrap();
//! let d = eval_rule(&u, &rule, &StageMap::new()).unwrap();
//! assert_eq!(d.len(), 4);
//! ```

pub mod cli;
pub mod dsl;
pub mod error;
pub mod formats;
pub mod grouping;
pub mod model;
pub mod rule;
pub mod select;

pub use dsl::{format_rule, format_rule_file, parse_rule, parse_rule_file, RuleFile};
pub use error::{Error, ParseError, Result, SourceSpan};
pub use grouping::{
    check_compatibility, check_log_congruence, check_ogl_necessary, method_rule,
    synthesize_log_grouping, union_closure, CongruenceReport, GroupingStructure, Method,
    OglReport, SynthesisFailure,
};
pub use model::{powerset, ConstraintSet, Dictionary, Universe, VarSet};
pub use rule::{
    combine, eval_rule, evaluate, rule_from_dictionary, rules_equivalent, stage_outcomes,
    stages_in_order, unit_dictionary, Operation, RuleExpr, StageMap, StageResult, UnitRule,
};
pub use select::{
    fit_ols, load_dataset, read_dataset, score, select_best, Criterion, Dataset, FitResult,
    InfoCriterion, RankedModels,
};
