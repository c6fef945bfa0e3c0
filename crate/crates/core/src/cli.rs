//! The `ruledict` command line.
//!
//! Exit codes: `0` success, `1` a computed negative verdict (not congruent,
//! not equivalent, no grouping exists), `2` usage, parse or domain errors.
//! Results go to stdout as JSON (or text with `--format text`); errors go to
//! stderr as `{"error": {"kind", "message", "span", "file"}}`.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde_json::{json, Map, Value};

use crate::dsl::{format_rule, format_rule_file, parse_rule_file, parse_var_list, RuleFile};
use crate::error::{Error, Result};
use crate::formats::{
    congruence_json, congruence_text, dictionary_json, dictionary_text, ogl_json, parse_family,
    parse_set, sets_json, to_json_string,
};
use crate::grouping::{
    check_log_congruence, check_ogl_necessary, synthesize_log_grouping, GroupingStructure,
    SynthesisFailure,
};
use crate::model::{Dictionary, Universe};
use crate::rule::{
    evaluate, rule_from_dictionary, stage_outcomes, stages_in_order, RuleExpr, StageMap,
};
use crate::select::{load_dataset, select_best, Criterion, InfoCriterion, RankedModels};

/// Environment variable overriding the enumeration cap.
pub const MAX_ENUM_ENV: &str = "RULEDICT_MAX_ENUM";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandOutcome {
    pub exit_code: i32,
    pub stdout: String,
    pub stderr: String,
}

#[derive(Parser, Debug)]
#[command(name = "ruledict", version, about = "Selection rules and selection dictionaries")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    /// Latent overlapping group Lasso: exact union-closure test.
    Log,
    /// Overlapping group Lasso: necessary condition only.
    Ogl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum CriterionArg {
    Aic,
    Bic,
    Adjr2,
    Cv,
}

#[derive(clap::Args, Debug)]
struct Common {
    /// Comma-separated variable names; overrides a `vars:` line.
    #[arg(long)]
    vars: Option<String>,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Print the selection dictionary of a rule.
    Dict {
        #[arg(long)]
        rule: PathBuf,
        /// First-stage result for each `=>` node, in pre-order, e.g. `{A,B}`.
        #[arg(long = "stage")]
        stages: Vec<String>,
        /// Enumerate every combination of first-stage results.
        #[arg(long, conflicts_with = "stages")]
        all_stages: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Decide whether two rules have the same dictionary.
    Equiv {
        #[arg(long)]
        rule: PathBuf,
        #[arg(long)]
        rule2: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Check a grouping structure against a rule.
    Check {
        #[arg(long)]
        grouping: PathBuf,
        #[arg(long)]
        rule: PathBuf,
        #[arg(long, value_enum)]
        method: MethodArg,
        #[command(flatten)]
        common: Common,
    },
    /// Build a latent overlapping group Lasso grouping for a rule.
    Synthesize {
        #[arg(long, required_unless_present = "dict", conflicts_with = "dict")]
        rule: Option<PathBuf>,
        #[arg(long)]
        dict: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Fit and rank every model a rule permits.
    Select {
        #[arg(long)]
        rule: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        outcome: String,
        #[arg(long, value_enum)]
        criterion: CriterionArg,
        /// Number of cross-validation folds (only with `--criterion cv`).
        #[arg(long)]
        folds: Option<usize>,
        /// Shuffle rows before splitting into folds.
        #[arg(long)]
        seed: Option<u64>,
        #[command(flatten)]
        common: Common,
    },
    /// Reconstruct a rule from a dictionary.
    FromDict {
        #[arg(long)]
        dict: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

/// A failure together with the file it came from.
struct Failure {
    error: Error,
    file: Option<PathBuf>,
}

impl From<Error> for Failure {
    fn from(error: Error) -> Self {
        Failure { error, file: None }
    }
}

fn in_file<T>(path: &Path, r: Result<T>) -> std::result::Result<T, Failure> {
    r.map_err(|error| Failure {
        error,
        file: Some(path.to_path_buf()),
    })
}

type CliResult<T> = std::result::Result<T, Failure>;

struct Output {
    exit_code: i32,
    stdout: String,
    stderr: String,
}

impl Output {
    fn ok(stdout: String) -> Self {
        Output {
            exit_code: 0,
            stdout,
            stderr: String::new(),
        }
    }

    fn verdict(positive: bool, stdout: String) -> Self {
        Output {
            exit_code: if positive { 0 } else { 1 },
            stdout,
            stderr: String::new(),
        }
    }
}

/// Runs the CLI on `argv` (including the program name), reading the
/// enumeration cap override from the environment.
pub fn dispatch<I, S>(argv: I) -> CommandOutcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    dispatch_with_cap(argv, std::env::var(MAX_ENUM_ENV).ok().as_deref())
}

/// [`dispatch`] with an explicit enumeration-cap override.
pub fn dispatch_with_cap<I, S>(argv: I, max_enum: Option<&str>) -> CommandOutcome
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                CommandOutcome {
                    exit_code: 2,
                    stdout: String::new(),
                    stderr: text,
                }
            } else {
                CommandOutcome {
                    exit_code: 0,
                    stdout: text,
                    stderr: String::new(),
                }
            };
        }
    };
    let cap = match max_enum.map(str::trim).map(str::parse::<usize>) {
        None => None,
        Some(Ok(cap)) => Some(cap),
        Some(Err(_)) => {
            return CommandOutcome {
                exit_code: 2,
                stdout: String::new(),
                stderr: format!(
                    "error: {MAX_ENUM_ENV} must be a non-negative integer, got `{}`\n",
                    max_enum.unwrap_or_default()
                ),
            }
        }
    };
    match run(cli.command, cap) {
        Ok(out) => CommandOutcome {
            exit_code: out.exit_code,
            stdout: out.stdout,
            stderr: out.stderr,
        },
        Err(f) => CommandOutcome {
            exit_code: 2,
            stdout: String::new(),
            stderr: diagnostic(&f),
        },
    }
}

fn diagnostic(f: &Failure) -> String {
    let mut error = Map::new();
    error.insert("kind".into(), json!(f.error.kind()));
    error.insert("message".into(), json!(f.error.to_string()));
    error.insert(
        "span".into(),
        match f.error.span() {
            Some(s) => json!({ "start": s.start, "end": s.end }),
            None => Value::Null,
        },
    );
    error.insert(
        "file".into(),
        match &f.file {
            Some(p) => json!(p.display().to_string()),
            None => Value::Null,
        },
    );
    to_json_string(&json!({ "error": error }))
}

struct Ctx {
    cap: Option<usize>,
    vars: Option<Universe>,
}

impl Ctx {
    fn new(common: &Common, cap: Option<usize>) -> CliResult<Self> {
        let vars = common.vars.as_deref().map(parse_var_list).transpose()?;
        Ok(Ctx { cap, vars })
    }

    fn apply_cap(&self, u: Universe) -> Universe {
        match self.cap {
            Some(cap) => u.with_enum_cap(cap),
            None => u,
        }
    }

    fn read(path: &Path) -> CliResult<String> {
        in_file(path, std::fs::read_to_string(path).map_err(Error::from))
    }

    fn rule_file(&self, path: &Path) -> CliResult<RuleFile> {
        let text = Self::read(path)?;
        let mut rf = in_file(path, parse_rule_file(&text, self.vars.as_ref()))?;
        rf.universe = self.apply_cap(rf.universe);
        Ok(rf)
    }

    /// Family file read against `u` if given. A `vars:` line in the file
    /// must then agree with `u`.
    fn family_file(&self, path: &Path, u: Option<&Universe>) -> CliResult<(Universe, Vec<crate::model::VarSet>)> {
        let text = Self::read(path)?;
        let given = u.or(self.vars.as_ref());
        if let (Some(u), (Some(declared), _)) = (u, crate::dsl::split_preamble(&text)) {
            if declared != u.names() {
                return Err(Failure {
                    error: Error::UniverseMismatch(format!(
                        "file declares `{}` but the rule uses `{}`",
                        declared.join(", "),
                        u.names().join(", ")
                    )),
                    file: Some(path.to_path_buf()),
                });
            }
        }
        let f = in_file(path, parse_family(&text, given))?;
        Ok((self.apply_cap(f.universe), f.sets))
    }
}

fn warnings(u: &Universe, diags: &[crate::rule::Diagnostic]) -> String {
    diags
        .iter()
        .map(|d| format!("warning: {}\n", d.describe(u)))
        .collect()
}

fn run(command: Command, cap: Option<usize>) -> CliResult<Output> {
    match command {
        Command::Dict {
            rule,
            stages,
            all_stages,
            common,
        } => {
            let ctx = Ctx::new(&common, cap)?;
            let rf = ctx.rule_file(&rule)?;
            if all_stages {
                return dict_all_stages(&rf, common.format);
            }
            let chosen = stages
                .iter()
                .map(|s| parse_set(s, &rf.universe))
                .collect::<Result<Vec<_>>>()?;
            let ev = evaluate(&rf.universe, &rf.rule, &stages_in_order(chosen))?;
            let stdout = match common.format {
                Format::Json => to_json_string(&dictionary_json(&rf.universe, &ev.dictionary)),
                Format::Text => dictionary_text(&rf.universe, &ev.dictionary),
            };
            Ok(Output {
                exit_code: 0,
                stdout,
                stderr: warnings(&rf.universe, &ev.diagnostics),
            })
        }
        Command::Equiv {
            rule,
            rule2,
            common,
        } => {
            let ctx = Ctx::new(&common, cap)?;
            let first = ctx.rule_file(&rule)?;
            let second = ctx.rule_file(&rule2)?;
            if first.universe != second.universe {
                return Err(Failure {
                    error: Error::UniverseMismatch(format!(
                        "`{}` versus `{}`",
                        first.universe.names().join(", "),
                        second.universe.names().join(", ")
                    )),
                    file: Some(rule2),
                });
            }
            let u = &first.universe;
            let d1 = no_stage_dictionary(u, &first.rule)?;
            let d2 = no_stage_dictionary(u, &second.rule)?;
            let only_first = d1.difference(&d2);
            let only_second = d2.difference(&d1);
            let equivalent = only_first.is_empty() && only_second.is_empty();
            let stdout = match common.format {
                Format::Json => to_json_string(&json!({
                    "equivalent": equivalent,
                    "only_in_first": dictionary_json(u, &only_first),
                    "only_in_second": dictionary_json(u, &only_second),
                })),
                Format::Text => format!("equivalent: {equivalent}\n"),
            };
            Ok(Output::verdict(equivalent, stdout))
        }
        Command::Check {
            grouping,
            rule,
            method,
            common,
        } => {
            let ctx = Ctx::new(&common, cap)?;
            let rf = ctx.rule_file(&rule)?;
            let u = &rf.universe;
            let (_, groups) = ctx.family_file(&grouping, Some(u))?;
            let g = in_file(&grouping, GroupingStructure::new(u, groups))?;
            let d = no_stage_dictionary(u, &rf.rule)?;
            let (congruent, stdout) = match method {
                MethodArg::Log => {
                    let r = check_log_congruence(u, &g, &d)?;
                    let out = match common.format {
                        Format::Json => to_json_string(&congruence_json(u, &r)),
                        Format::Text => congruence_text(u, &r),
                    };
                    (r.congruent, out)
                }
                MethodArg::Ogl => {
                    let r = check_ogl_necessary(u, &g, &d)?;
                    let out = match common.format {
                        Format::Json => to_json_string(&ogl_json(u, &r)),
                        Format::Text => congruence_text(u, &r.report),
                    };
                    (r.report.congruent, out)
                }
            };
            Ok(Output::verdict(congruent, stdout))
        }
        Command::Synthesize { rule, dict, common } => {
            let ctx = Ctx::new(&common, cap)?;
            let (u, d) = match (rule, dict) {
                (Some(rule), _) => {
                    let rf = ctx.rule_file(&rule)?;
                    let d = no_stage_dictionary(&rf.universe, &rf.rule)?;
                    (rf.universe, d)
                }
                (None, Some(dict)) => {
                    let (u, sets) = ctx.family_file(&dict, None)?;
                    (u, Dictionary::new(sets))
                }
                (None, None) => unreachable!("clap requires one of --rule or --dict"),
            };
            match synthesize_log_grouping(&u, &d)? {
                Ok(g) => {
                    let stdout = match common.format {
                        Format::Json => to_json_string(&json!({
                            "grouping": sets_json(&u, g.groups())
                        })),
                        Format::Text => g
                            .groups()
                            .iter()
                            .map(|&s| u.display_set(s) + "\n")
                            .collect(),
                    };
                    Ok(Output::ok(stdout))
                }
                Err(failure) => {
                    let stdout = match common.format {
                        Format::Json => to_json_string(&json!({
                            "failure": failure_json(&u, &failure)
                        })),
                        Format::Text => format!("no grouping: {}\n", failure.describe(&u)),
                    };
                    Ok(Output::verdict(false, stdout))
                }
            }
        }
        Command::Select {
            rule,
            data,
            outcome,
            criterion,
            folds,
            seed,
            common,
        } => {
            let criterion = match (criterion, folds) {
                (CriterionArg::Cv, folds) => Criterion::CrossValidation {
                    folds: folds.unwrap_or(5),
                    seed,
                },
                (_, Some(_)) => return Err(usage("--folds requires --criterion cv")),
                (CriterionArg::Aic, None) => Criterion::Info(InfoCriterion::Aic),
                (CriterionArg::Bic, None) => Criterion::Info(InfoCriterion::Bic),
                (CriterionArg::Adjr2, None) => Criterion::Info(InfoCriterion::AdjR2),
            };
            if seed.is_some() && !matches!(criterion, Criterion::CrossValidation { .. }) {
                return Err(usage("--seed requires --criterion cv"));
            }
            let ctx = Ctx::new(&common, cap)?;
            let rf = ctx.rule_file(&rule)?;
            let u = &rf.universe;
            let d = no_stage_dictionary(u, &rf.rule)?;
            let dataset = in_file(&data, load_dataset(&data, &outcome, u))?;
            let ranked = select_best(&dataset, &d, criterion)?;
            let stdout = match common.format {
                Format::Json => to_json_string(&ranked_json(u, &ranked)),
                Format::Text => ranked_text(u, &ranked),
            };
            Ok(Output::ok(stdout))
        }
        Command::FromDict { dict, common } => {
            let ctx = Ctx::new(&common, cap)?;
            let (u, sets) = ctx.family_file(&dict, None)?;
            let expr = rule_from_dictionary(&u, &Dictionary::new(sets))?;
            let stdout = match common.format {
                Format::Json => to_json_string(&json!({
                    "variables": u.names(),
                    "rule": format_rule(&expr, &u),
                })),
                Format::Text => format_rule_file(&expr, &u),
            };
            Ok(Output::ok(stdout))
        }
    }
}

fn usage(message: &str) -> Failure {
    Failure {
        error: Error::Usage(message.to_string()),
        file: None,
    }
}

/// Dictionary of a rule that must not need first-stage results.
fn no_stage_dictionary(u: &Universe, expr: &RuleExpr) -> Result<Dictionary> {
    Ok(evaluate(u, expr, &StageMap::new())?.dictionary)
}

fn dict_all_stages(rf: &RuleFile, format: Format) -> CliResult<Output> {
    let u = &rf.universe;
    let outcomes = stage_outcomes(u, &rf.rule)?;
    let stdout = match format {
        Format::Json => to_json_string(&Value::Array(
            outcomes
                .iter()
                .map(|o| {
                    json!({
                        "stages": o.stages.values().map(|s| json!(u.names_of(s.chosen))).collect::<Vec<_>>(),
                        "dictionary": dictionary_json(u, &o.dictionary),
                    })
                })
                .collect(),
        )),
        Format::Text => outcomes
            .iter()
            .map(|o| {
                let stages: Vec<String> = o.stages.values().map(|s| u.display_set(s.chosen)).collect();
                format!("stages: {}\n{}", stages.join(" "), dictionary_text(u, &o.dictionary))
            })
            .collect::<Vec<_>>()
            .join("\n"),
    };
    Ok(Output::ok(stdout))
}

fn failure_json(u: &Universe, f: &SynthesisFailure) -> Value {
    let kind = match f {
        SynthesisFailure::EmptyDictionary => "EmptyDictionary",
        SynthesisFailure::MissingEmptySet => "MissingEmptySet",
        SynthesisFailure::MissingFullSet => "MissingFullSet",
        SynthesisFailure::NotUnionClosed { .. } => "NotUnionClosed",
    };
    let mut m = Map::new();
    m.insert("kind".into(), json!(kind));
    m.insert("message".into(), json!(f.describe(u)));
    if let SynthesisFailure::NotUnionClosed { left, right } = f {
        m.insert(
            "witness".into(),
            json!([u.names_of(*left), u.names_of(*right)]),
        );
    }
    Value::Object(m)
}

fn score_json(score: f64) -> Value {
    if score == f64::NEG_INFINITY {
        json!("-inf")
    } else {
        json!(score)
    }
}

/// Intercept key; not a valid variable name, so it cannot collide.
const INTERCEPT: &str = "(intercept)";

fn ranked_json(u: &Universe, r: &RankedModels) -> Value {
    Value::Array(
        r.models
            .iter()
            .map(|m| {
                let mut coefficients = Map::new();
                coefficients.insert(INTERCEPT.into(), json!(m.fit.intercept));
                for (j, b) in m.fit.named() {
                    coefficients.insert(u.names()[j].clone(), json!(b));
                }
                json!({
                    "subset": u.names_of(m.fit.subset),
                    "score": score_json(m.score),
                    "coefficients": coefficients,
                })
            })
            .collect(),
    )
}

fn ranked_text(u: &Universe, r: &RankedModels) -> String {
    let rows: Vec<(String, String, String)> = r
        .models
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let score = if m.score == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{:.6}", m.score)
            };
            ((i + 1).to_string(), score, u.display_set(m.fit.subset))
        })
        .collect();
    let w0 = rows.iter().map(|r| r.0.len()).max().unwrap_or(0).max(4);
    let w1 = rows
        .iter()
        .map(|r| r.1.len())
        .max()
        .unwrap_or(0)
        .max(r.criterion.tag().len());
    let mut out = format!("{:>w0$}  {:>w1$}  subset\n", "rank", r.criterion.tag());
    for (rank, score, subset) in rows {
        out.push_str(&format!("{rank:>w0$}  {score:>w1$}  {subset}\n"));
    }
    out
}
