//! Finite context systems and exhaustive search for noncontextual value assignments.
//!
//! A [`ContextSystem`] declares observables with finite spectra and contexts
//! (sets of jointly measurable observables) carrying a multiplicative
//! constraint. [`search`] enumerates every assignment of spectrum values to
//! the free observables and reports whether any satisfies all contexts.
//!
//! An observable that is the designated member of a `product_equals`
//! context is not enumerated: its value is computed as the product of the
//! other members, and membership of that value in its spectrum is part of
//! the context's constraint. When several `product_equals` contexts
//! designate the same observable, the first one (in context order)
//! determines it and the others are plain checks.

use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::report::{CheckResult, ProofId, VerificationReport};
use crate::tensor::{
    commutator_norm, matmul_all, spectrum, ComplexMatrix, LinalgError, DEFAULT_CLUSTER_TOL,
};

/// Default cap on the number of assignments [`search`] will enumerate.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

/// Relative tolerance for comparing products of spectrum values.
pub const VALUE_TOL: f64 = 1e-9;

pub fn values_equal(a: f64, b: f64) -> bool {
    (a - b).abs() <= VALUE_TOL * a.abs().max(b.abs()).max(1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Positive,
    Negative,
}

impl Sign {
    pub fn admits(self, x: f64) -> bool {
        match self {
            Sign::Positive => x > 0.0,
            Sign::Negative => x < 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolicObservable {
    pub id: String,
    pub spectrum: Vec<f64>,
}

impl SymbolicObservable {
    pub fn new(id: impl Into<String>, spectrum: impl Into<Vec<f64>>) -> Self {
        Self {
            id: id.into(),
            spectrum: spectrum.into(),
        }
    }

    fn admits(&self, x: f64) -> bool {
        self.spectrum.iter().any(|&v| values_equal(v, x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "arg", rename_all = "snake_case")]
pub enum Constraint {
    /// The named member equals the product of the other members.
    ProductEquals(String),
    /// The product of all members has this sign.
    ProductSign(Sign),
    /// The product of all members equals this value.
    ProductEqualsValue(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Context {
    pub members: Vec<String>,
    pub constraint: Constraint,
}

impl Context {
    pub fn new<S: Into<String>>(members: impl IntoIterator<Item = S>, constraint: Constraint) -> Self {
        Self {
            members: members.into_iter().map(Into::into).collect(),
            constraint,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SystemError {
    #[error("system declares no observables")]
    NoObservables,
    #[error("observable `{0}` declared more than once")]
    DuplicateObservable(String),
    #[error("observable `{0}` has an empty spectrum")]
    EmptySpectrum(String),
    #[error("observable `{id}` has invalid spectrum value {value} (values must be finite, nonzero and distinct)")]
    BadSpectrumValue { id: String, value: f64 },
    #[error("context {context} has no members")]
    EmptyContext { context: usize },
    #[error("context {context} references undeclared observable `{id}`")]
    UnknownMember { context: usize, id: String },
    #[error("context {context} lists `{id}` more than once")]
    DuplicateMember { context: usize, id: String },
    #[error("context {context} designates `{id}` which is not one of its members")]
    DesignatedNotMember { context: usize, id: String },
    #[error("context {context} has non-finite target value")]
    NonFiniteTarget { context: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SearchError {
    #[error("enumeration of {size} assignments exceeds the budget of {budget}")]
    BudgetExceeded { size: u128, budget: u64 },
    #[error("cyclic product_equals determination among {0:?}")]
    CyclicDetermination(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContextSystem {
    observables: Vec<SymbolicObservable>,
    contexts: Vec<Context>,
}

impl ContextSystem {
    pub fn new(
        observables: Vec<SymbolicObservable>,
        contexts: Vec<Context>,
    ) -> Result<Self, SystemError> {
        if observables.is_empty() {
            return Err(SystemError::NoObservables);
        }
        let mut ids = HashMap::new();
        for (i, o) in observables.iter().enumerate() {
            if ids.insert(o.id.as_str(), i).is_some() {
                return Err(SystemError::DuplicateObservable(o.id.clone()));
            }
            if o.spectrum.is_empty() {
                return Err(SystemError::EmptySpectrum(o.id.clone()));
            }
            for (k, &v) in o.spectrum.iter().enumerate() {
                let repeated = o.spectrum[..k].contains(&v);
                if !v.is_finite() || v == 0.0 || repeated {
                    return Err(SystemError::BadSpectrumValue {
                        id: o.id.clone(),
                        value: v,
                    });
                }
            }
        }
        for (c, ctx) in contexts.iter().enumerate() {
            if ctx.members.is_empty() {
                return Err(SystemError::EmptyContext { context: c });
            }
            for (k, m) in ctx.members.iter().enumerate() {
                if !ids.contains_key(m.as_str()) {
                    return Err(SystemError::UnknownMember {
                        context: c,
                        id: m.clone(),
                    });
                }
                if ctx.members[..k].contains(m) {
                    return Err(SystemError::DuplicateMember {
                        context: c,
                        id: m.clone(),
                    });
                }
            }
            match &ctx.constraint {
                Constraint::ProductEquals(id) if !ctx.members.contains(id) => {
                    return Err(SystemError::DesignatedNotMember {
                        context: c,
                        id: id.clone(),
                    });
                }
                Constraint::ProductEqualsValue(v) if !v.is_finite() => {
                    return Err(SystemError::NonFiniteTarget { context: c });
                }
                _ => {}
            }
        }
        Ok(Self {
            observables,
            contexts,
        })
    }

    pub fn observables(&self) -> &[SymbolicObservable] {
        &self.observables
    }

    pub fn contexts(&self) -> &[Context] {
        &self.contexts
    }

    pub fn index_of(&self, id: &str) -> Option<usize> {
        self.observables.iter().position(|o| o.id == id)
    }

    /// Copy with context `index` removed.
    pub fn without_context(&self, index: usize) -> Self {
        let mut contexts = self.contexts.clone();
        contexts.remove(index);
        Self {
            observables: self.observables.clone(),
            contexts,
        }
    }

    /// Copy with the constraint of context `index` replaced.
    pub fn with_constraint(&self, index: usize, constraint: Constraint) -> Result<Self, SystemError> {
        let mut contexts = self.contexts.clone();
        contexts[index].constraint = constraint;
        Self::new(self.observables.clone(), contexts)
    }

    /// Copy with every spectrum replaced by `{−1, +1}`.
    pub fn sign_collapsed(&self) -> Self {
        Self {
            observables: self
                .observables
                .iter()
                .map(|o| SymbolicObservable::new(o.id.clone(), vec![-1.0, 1.0]))
                .collect(),
            contexts: self.contexts.clone(),
        }
    }

    /// Copy with observables and contexts reordered (`obs_order[j]` is the old
    /// index of new observable `j`, likewise for contexts).
    pub fn permuted(&self, obs_order: &[usize], ctx_order: &[usize]) -> Self {
        Self {
            observables: obs_order.iter().map(|&i| self.observables[i].clone()).collect(),
            contexts: ctx_order.iter().map(|&i| self.contexts[i].clone()).collect(),
        }
    }

    /// Number of assignments an UNSAT search enumerates.
    pub fn enumeration_size(&self) -> Result<u128, SearchError> {
        Ok(Plan::new(self)?.size)
    }

    /// Checks a complete assignment against every spectrum and context.
    pub fn check_assignment(&self, values: &BTreeMap<String, f64>) -> Result<(), Violation> {
        for o in &self.observables {
            match values.get(&o.id) {
                None => return Err(Violation::Unassigned(o.id.clone())),
                Some(&v) if !o.admits(v) => return Err(Violation::OutOfSpectrum(o.id.clone())),
                Some(_) => {}
            }
        }
        for (c, ctx) in self.contexts.iter().enumerate() {
            let product: f64 = ctx.members.iter().map(|m| values[m]).product();
            let ok = match &ctx.constraint {
                Constraint::ProductEquals(id) => {
                    let rest: f64 = ctx
                        .members
                        .iter()
                        .filter(|m| *m != id)
                        .map(|m| values[m])
                        .product();
                    values_equal(values[id], rest)
                }
                Constraint::ProductSign(sign) => sign.admits(product),
                Constraint::ProductEqualsValue(v) => values_equal(product, *v),
            };
            if !ok {
                return Err(Violation::Context(c));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self, LoadError> {
        let doc: SystemDocument = serde_json::from_str(text).map_err(|e| LoadError::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })?;
        Self::new(doc.observables, doc.contexts).map_err(|source| {
            let line = locate_error(text, &source);
            LoadError::Invalid { line, source }
        })
    }

    pub fn to_json(&self) -> String {
        let doc = SystemDocument {
            observables: self.observables.clone(),
            contexts: self.contexts.clone(),
        };
        serde_json::to_string_pretty(&doc).expect("system documents always serialize")
    }
}

/// On-disk layout of a context system.
#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemDocument {
    observables: Vec<SymbolicObservable>,
    contexts: Vec<Context>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{}{source}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid {
        line: Option<usize>,
        source: SystemError,
    },
}

/// Best-effort line number for a validation error: the first line quoting
/// the offending id (after the `"contexts"` key for context errors).
fn locate_error(text: &str, err: &SystemError) -> Option<usize> {
    let (needle, in_contexts) = match err {
        SystemError::DuplicateObservable(id)
        | SystemError::EmptySpectrum(id)
        | SystemError::BadSpectrumValue { id, .. } => (format!("\"{id}\""), false),
        SystemError::UnknownMember { id, .. }
        | SystemError::DuplicateMember { id, .. }
        | SystemError::DesignatedNotMember { id, .. } => (format!("\"{id}\""), true),
        SystemError::NoObservables => ("\"observables\"".to_owned(), false),
        SystemError::EmptyContext { .. } | SystemError::NonFiniteTarget { .. } => {
            ("\"contexts\"".to_owned(), false)
        }
    };
    let start = if in_contexts {
        text.find("\"contexts\"").unwrap_or(0)
    } else {
        0
    };
    let offset = start + text[start..].find(&needle)?;
    Some(text[..offset].matches('\n').count() + 1)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Violation {
    Unassigned(String),
    OutOfSpectrum(String),
    Context(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchReport {
    pub satisfiable: bool,
    pub assignments_checked: u64,
    pub witness: Option<BTreeMap<String, f64>>,
    pub first_violated_context_histogram: BTreeMap<usize, u64>,
}

#[derive(Debug, Clone, Copy)]
pub struct SearchOptions {
    pub budget: u64,
}

impl Default for SearchOptions {
    fn default() -> Self {
        Self {
            budget: DEFAULT_BUDGET,
        }
    }
}

/// Free variables, determination order, and member indices resolved once per search.
struct Plan {
    free: Vec<usize>,
    /// `(observable, determining context)` in dependency order.
    determined: Vec<(usize, usize)>,
    members: Vec<Vec<usize>>,
    spectra: Vec<Vec<f64>>,
    size: u128,
}

impl Plan {
    fn new(sys: &ContextSystem) -> Result<Self, SearchError> {
        let n = sys.observables.len();
        let index: HashMap<&str, usize> = sys
            .observables
            .iter()
            .enumerate()
            .map(|(i, o)| (o.id.as_str(), i))
            .collect();
        let members: Vec<Vec<usize>> = sys
            .contexts
            .iter()
            .map(|c| c.members.iter().map(|m| index[m.as_str()]).collect())
            .collect();

        let mut determiner: Vec<Option<usize>> = vec![None; n];
        for (c, ctx) in sys.contexts.iter().enumerate() {
            if let Constraint::ProductEquals(id) = &ctx.constraint {
                let o = index[id.as_str()];
                determiner[o].get_or_insert(c);
            }
        }

        // depth-first topological order over determined observables
        #[derive(Clone, Copy, PartialEq)]
        enum Mark {
            New,
            Active,
            Done,
        }
        let mut marks = vec![Mark::New; n];
        let mut determined = Vec::new();
        fn visit(
            o: usize,
            determiner: &[Option<usize>],
            members: &[Vec<usize>],
            marks: &mut [Mark],
            out: &mut Vec<(usize, usize)>,
            stack: &mut Vec<usize>,
        ) -> Result<(), Vec<usize>> {
            let Some(c) = determiner[o] else {
                return Ok(());
            };
            match marks[o] {
                Mark::Done => return Ok(()),
                Mark::Active => {
                    let from = stack.iter().position(|&s| s == o).unwrap_or(0);
                    return Err(stack[from..].to_vec());
                }
                Mark::New => {}
            }
            marks[o] = Mark::Active;
            stack.push(o);
            for &m in &members[c] {
                if m != o {
                    visit(m, determiner, members, marks, out, stack)?;
                }
            }
            stack.pop();
            marks[o] = Mark::Done;
            out.push((o, c));
            Ok(())
        }
        for o in 0..n {
            let mut stack = Vec::new();
            visit(o, &determiner, &members, &mut marks, &mut determined, &mut stack).map_err(
                |cycle| {
                    SearchError::CyclicDetermination(
                        cycle.iter().map(|&i| sys.observables[i].id.clone()).collect(),
                    )
                },
            )?;
        }

        let free: Vec<usize> = (0..n).filter(|&o| determiner[o].is_none()).collect();
        let spectra: Vec<Vec<f64>> = sys
            .observables
            .iter()
            .map(|o| {
                let mut s = o.spectrum.clone();
                s.sort_by(f64::total_cmp);
                s
            })
            .collect();
        let size = free
            .iter()
            .map(|&o| spectra[o].len() as u128)
            .try_fold(1u128, u128::checked_mul)
            .unwrap_or(u128::MAX);
        Ok(Self {
            free,
            determined,
            members,
            spectra,
            size,
        })
    }
}

/// Index of the first context violated by `values`, if any.
fn first_violation(
    sys: &ContextSystem,
    plan: &Plan,
    values: &[f64],
    determined_by: &[Option<usize>],
) -> Option<usize> {
    for (c, ctx) in sys.contexts.iter().enumerate() {
        let members = &plan.members[c];
        let ok = match &ctx.constraint {
            Constraint::ProductEquals(_) => {
                let target = members
                    .iter()
                    .copied()
                    .find(|&m| sys.observables[m].id == *constraint_id(&ctx.constraint))
                    .expect("validated designated member");
                if determined_by[target] == Some(c) {
                    sys.observables[target].admits(values[target])
                } else {
                    let rest: f64 = members
                        .iter()
                        .filter(|&&m| m != target)
                        .map(|&m| values[m])
                        .product();
                    values_equal(values[target], rest)
                }
            }
            Constraint::ProductSign(sign) => {
                sign.admits(members.iter().map(|&m| values[m]).product())
            }
            Constraint::ProductEqualsValue(v) => {
                values_equal(members.iter().map(|&m| values[m]).product(), *v)
            }
        };
        if !ok {
            return Some(c);
        }
    }
    None
}

fn constraint_id(c: &Constraint) -> &String {
    match c {
        Constraint::ProductEquals(id) => id,
        _ => unreachable!("only called for product_equals"),
    }
}

pub fn search(sys: &ContextSystem) -> Result<SearchReport, SearchError> {
    search_with(sys, SearchOptions::default())
}

/// Exhaustive search in lexicographic order: the first declared free
/// observable is the most significant digit, spectra in ascending order.
/// The witness, when found, is therefore the lexicographically smallest.
pub fn search_with(sys: &ContextSystem, opts: SearchOptions) -> Result<SearchReport, SearchError> {
    let plan = Plan::new(sys)?;
    if plan.size > u128::from(opts.budget) {
        return Err(SearchError::BudgetExceeded {
            size: plan.size,
            budget: opts.budget,
        });
    }

    let n = sys.observables.len();
    let mut determined_by = vec![None; n];
    for &(o, c) in &plan.determined {
        determined_by[o] = Some(c);
    }

    let mut digits = vec![0usize; plan.free.len()];
    let mut values = vec![0.0; n];
    let mut histogram = BTreeMap::new();
    let mut checked = 0u64;
    loop {
        for (&o, &d) in plan.free.iter().zip(&digits) {
            values[o] = plan.spectra[o][d];
        }
        for &(o, c) in &plan.determined {
            values[o] = plan.members[c]
                .iter()
                .filter(|&&m| m != o)
                .map(|&m| values[m])
                .product();
        }
        checked += 1;
        match first_violation(sys, &plan, &values, &determined_by) {
            None => {
                let witness = sys
                    .observables
                    .iter()
                    .zip(&values)
                    .map(|(o, &v)| (o.id.clone(), v))
                    .collect();
                return Ok(SearchReport {
                    satisfiable: true,
                    assignments_checked: checked,
                    witness: Some(witness),
                    first_violated_context_histogram: histogram,
                });
            }
            Some(c) => *histogram.entry(c).or_insert(0) += 1,
        }

        // odometer, last free observable fastest
        let mut pos = digits.len();
        loop {
            if pos == 0 {
                return Ok(SearchReport {
                    satisfiable: false,
                    assignments_checked: checked,
                    witness: None,
                    first_violated_context_histogram: histogram,
                });
            }
            pos -= 1;
            digits[pos] += 1;
            if digits[pos] < plan.spectra[plan.free[pos]].len() {
                break;
            }
            digits[pos] = 0;
        }
    }
}

/// Observable ids of the six pair observables, in declaration order.
pub const PAIR_IDS: [&str; 6] = ["A12", "B12", "A34", "B34", "A56", "B56"];

/// The four product observables with their factors, in the order AAB, ABA, BAA, BBB.
pub const PRODUCT_LINES: [(&str, [&str; 3]); 4] = [
    ("A12A34B56", ["A12", "A34", "B56"]),
    ("A12B34A56", ["A12", "B34", "A56"]),
    ("B12A34A56", ["B12", "A34", "A56"]),
    ("B12B34B56", ["B12", "B34", "B56"]),
];

/// Index of the horizontal line in [`fig1_system`].
pub const HORIZONTAL_CONTEXT: usize = 4;

const PAIR_SPECTRUM: [f64; 4] = [2.0, 1.0, -1.0, -2.0];
const PRODUCT_SPECTRUM: [f64; 8] = [8.0, 4.0, 2.0, 1.0, -1.0, -2.0, -4.0, -8.0];

fn pair_observables() -> Vec<SymbolicObservable> {
    PAIR_IDS
        .iter()
        .map(|id| SymbolicObservable::new(*id, PAIR_SPECTRUM))
        .collect()
}

/// The ten-observable, five-line state-independent system.
///
/// Contexts 0..=3 join each product observable to its three factors with a
/// `product_equals` constraint (the product observable's value is the
/// product of its factors' values, which implies the positive line product
/// but is strictly stronger). Context 4 is the line of the four product
/// observables, whose product must be negative.
pub fn fig1_system() -> ContextSystem {
    let mut observables = pair_observables();
    observables.extend(
        PRODUCT_LINES
            .iter()
            .map(|(id, _)| SymbolicObservable::new(*id, PRODUCT_SPECTRUM)),
    );
    let mut contexts: Vec<Context> = PRODUCT_LINES
        .iter()
        .map(|(id, factors)| {
            Context::new(
                std::iter::once(*id).chain(factors.iter().copied()),
                Constraint::ProductEquals((*id).to_owned()),
            )
        })
        .collect();
    contexts.push(Context::new(
        PRODUCT_LINES.iter().map(|(id, _)| *id),
        Constraint::ProductSign(Sign::Negative),
    ));
    ContextSystem::new(observables, contexts).expect("built-in system is valid")
}

/// The six pair observables with the product targets (1, 1, 1, −1).
pub fn state_dependent_system() -> ContextSystem {
    let targets = [1.0, 1.0, 1.0, -1.0];
    let contexts = PRODUCT_LINES
        .iter()
        .zip(targets)
        .map(|((_, factors), t)| Context::new(factors.iter().copied(), Constraint::ProductEqualsValue(t)))
        .collect();
    ContextSystem::new(pair_observables(), contexts).expect("built-in system is valid")
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationError {
    #[error("no matrix bound to observable `{0}`")]
    MissingBinding(String),
    #[error("matrix for `{id}` is {dim}x{dim}, expected {expected}x{expected}")]
    DimensionMismatch {
        id: String,
        dim: usize,
        expected: usize,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Full ordered products of the members of every `product_equals` context,
/// keyed by context index.
pub fn line_products(
    sys: &ContextSystem,
    bindings: &HashMap<String, ComplexMatrix>,
) -> Result<Vec<(usize, ComplexMatrix)>, ValidationError> {
    let mut out = Vec::new();
    for (c, ctx) in sys.contexts.iter().enumerate() {
        if matches!(ctx.constraint, Constraint::ProductEquals(_)) {
            let factors = bound(&ctx.members, bindings)?;
            out.push((c, matmul_all(factors)?.expect("non-empty context")));
        }
    }
    Ok(out)
}

fn bound<'a>(
    ids: &[String],
    bindings: &'a HashMap<String, ComplexMatrix>,
) -> Result<Vec<&'a ComplexMatrix>, ValidationError> {
    ids.iter()
        .map(|id| {
            bindings
                .get(id)
                .ok_or_else(|| ValidationError::MissingBinding(id.clone()))
        })
        .collect()
}

/// Checks that matrices bound to the observables realize the system's
/// contexts: members commute, designated members equal the product of the
/// rest, sign contexts multiply to an operator of that sign, and all
/// `product_equals` line products coincide as one positive operator.
///
/// `product_equals_value` contexts are state-dependent relations and get
/// only the commutation check.
pub fn validate_against_matrices(
    sys: &ContextSystem,
    bindings: &HashMap<String, ComplexMatrix>,
    tol: f64,
) -> Result<VerificationReport, ValidationError> {
    let all_ids: Vec<String> = sys.observables.iter().map(|o| o.id.clone()).collect();
    let mats = bound(&all_ids, bindings)?;
    let dim = mats[0].dim();
    for (id, m) in all_ids.iter().zip(&mats) {
        if m.dim() != dim {
            return Err(ValidationError::DimensionMismatch {
                id: id.clone(),
                dim: m.dim(),
                expected: dim,
            });
        }
    }

    let mut report = VerificationReport::new(ProofId::Ks);
    for (c, ctx) in sys.contexts.iter().enumerate() {
        let members = bound(&ctx.members, bindings)?;
        let mut worst: f64 = 0.0;
        for (i, a) in members.iter().enumerate() {
            for b in &members[i + 1..] {
                worst = worst.max(commutator_norm(a, b)?);
            }
        }
        report.push(CheckResult::compare(
            format!("context {c} [{}]: members commute", ctx.members.join(", ")),
            worst,
            0.0,
            tol,
        ));

        match &ctx.constraint {
            Constraint::ProductEquals(id) => {
                let rest: Vec<String> = ctx.members.iter().filter(|m| *m != id).cloned().collect();
                let product = matmul_all(bound(&rest, bindings)?)?.expect("non-empty");
                let deviation = bindings[id].max_abs_diff(&product)?;
                report.push(CheckResult::compare(
                    format!("context {c}: {id} equals the ordered product of {}", rest.join("·")),
                    deviation,
                    0.0,
                    tol,
                ));
            }
            Constraint::ProductSign(sign) => {
                let product = matmul_all(members)?.expect("non-empty");
                let spec = spectrum(&product, DEFAULT_CLUSTER_TOL)?;
                let wrong = spec
                    .values
                    .iter()
                    .filter(|&&(v, _)| !sign.admits(v))
                    .map(|&(_, m)| m as u64)
                    .sum();
                let label = match sign {
                    Sign::Positive => "positive",
                    Sign::Negative => "negative",
                };
                report.push(CheckResult::count(
                    format!("context {c}: eigenvalues of the member product that are not {label}"),
                    wrong,
                    0,
                ));
            }
            Constraint::ProductEqualsValue(_) => {}
        }
    }

    let lines = line_products(sys, bindings)?;
    if let Some((first_idx, first)) = lines.first() {
        let mut spread: f64 = 0.0;
        for (_, m) in &lines[1..] {
            spread = spread.max(m.max_abs_diff(first)?);
        }
        report.push(CheckResult::compare(
            format!("line products of {} product_equals contexts coincide", lines.len()),
            spread,
            0.0,
            tol,
        ));
        let spec = spectrum(first, DEFAULT_CLUSTER_TOL)?;
        let non_positive = spec
            .values
            .iter()
            .filter(|&&(v, _)| v <= 0.0)
            .map(|&(_, m)| m as u64)
            .sum();
        report.push(CheckResult::count(
            format!("context {first_idx}: non-positive eigenvalues of the line product"),
            non_positive,
            0,
        ));
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(id: &str, spectrum: &[f64]) -> SymbolicObservable {
        SymbolicObservable::new(id, spectrum.to_vec())
    }

    #[test]
    fn single_observable_is_sat() {
        let sys = ContextSystem::new(vec![obs("x", &[1.0])], vec![]).unwrap();
        let r = search(&sys).unwrap();
        assert!(r.satisfiable);
        assert_eq!(r.assignments_checked, 1);
        assert_eq!(r.witness.unwrap()["x"], 1.0);
    }

    #[test]
    fn fig1_is_unsat_over_4096() {
        let sys = fig1_system();
        assert_eq!(sys.observables().len(), 10);
        assert_eq!(sys.contexts().len(), 5);
        assert_eq!(
            sys.contexts()[HORIZONTAL_CONTEXT].constraint,
            Constraint::ProductSign(Sign::Negative)
        );
        let r = search(&sys).unwrap();
        assert!(!r.satisfiable);
        assert_eq!(r.assignments_checked, 4096);
        assert!(r.witness.is_none());
        // product values never leave {±2^k}, so only the sign line can fail
        assert_eq!(r.first_violated_context_histogram, BTreeMap::from([(4, 4096)]));
    }

    #[test]
    fn fig1_without_horizontal_line_is_sat() {
        let sys = fig1_system().without_context(HORIZONTAL_CONTEXT);
        let r = search(&sys).unwrap();
        assert!(r.satisfiable);
        assert_eq!(r.assignments_checked, 1);
        let w = r.witness.unwrap();
        assert_eq!(w["A12"], -2.0);
        assert_eq!(w["A12A34B56"], -8.0);
        sys.check_assignment(&w).unwrap();
    }

    #[test]
    fn state_dependent_system_targets_and_flip() {
        let sys = state_dependent_system();
        assert_eq!(sys.contexts()[3].constraint, Constraint::ProductEqualsValue(-1.0));
        let r = search(&sys).unwrap();
        assert!(!r.satisfiable);
        assert_eq!(r.assignments_checked, 4096);

        let flipped = sys.with_constraint(3, Constraint::ProductEqualsValue(1.0)).unwrap();
        let all_ones: BTreeMap<String, f64> = PAIR_IDS.iter().map(|id| (id.to_string(), 1.0)).collect();
        flipped.check_assignment(&all_ones).unwrap();
        assert_eq!(sys.check_assignment(&all_ones), Err(Violation::Context(3)));
        let r = search(&flipped).unwrap();
        assert!(r.satisfiable);
        flipped.check_assignment(r.witness.as_ref().unwrap()).unwrap();
    }

    #[test]
    fn sign_collapse_stays_unsat() {
        let r = search(&fig1_system().sign_collapsed()).unwrap();
        assert!(!r.satisfiable);
        assert_eq!(r.assignments_checked, 64);
    }

    #[test]
    fn determined_value_outside_spectrum_violates_its_context() {
        // z = x·y but z only admits 1, while x, y ∈ {2}
        let sys = ContextSystem::new(
            vec![obs("x", &[2.0]), obs("y", &[2.0]), obs("z", &[1.0])],
            vec![Context::new(["z", "x", "y"], Constraint::ProductEquals("z".into()))],
        )
        .unwrap();
        let r = search(&sys).unwrap();
        assert!(!r.satisfiable);
        assert_eq!(r.assignments_checked, 1);
        assert_eq!(r.first_violated_context_histogram, BTreeMap::from([(0, 1)]));
    }

    #[test]
    fn chained_determination_is_resolved_in_dependency_order() {
        // w = z·x, z = x·y: z must be computed before w even though w's context comes first
        let sys = ContextSystem::new(
            vec![obs("w", &[-1.0, 1.0]), obs("x", &[-1.0, 1.0]), obs("y", &[-1.0, 1.0]), obs("z", &[-1.0, 1.0])],
            vec![
                Context::new(["w", "z", "x"], Constraint::ProductEquals("w".into())),
                Context::new(["z", "x", "y"], Constraint::ProductEquals("z".into())),
                Context::new(["w"], Constraint::ProductSign(Sign::Negative)),
            ],
        )
        .unwrap();
        assert_eq!(sys.enumeration_size().unwrap(), 4);
        let r = search(&sys).unwrap();
        // w = x·y·x = y, so y = −1 is needed
        let w = r.witness.unwrap();
        assert_eq!(w["y"], -1.0);
        assert_eq!(w["w"], -1.0);
        sys.check_assignment(&w).unwrap();
    }

    #[test]
    fn cyclic_determination_is_an_error() {
        let sys = ContextSystem::new(
            vec![obs("x", &[1.0]), obs("y", &[1.0])],
            vec![
                Context::new(["x", "y"], Constraint::ProductEquals("x".into())),
                Context::new(["y", "x"], Constraint::ProductEquals("y".into())),
            ],
        )
        .unwrap();
        assert!(matches!(search(&sys), Err(SearchError::CyclicDetermination(ids)) if ids.len() == 2));
    }

    #[test]
    fn budget_is_enforced() {
        let sys = fig1_system();
        let err = search_with(&sys, SearchOptions { budget: 4095 }).unwrap_err();
        assert_eq!(err, SearchError::BudgetExceeded { size: 4096, budget: 4095 });
        assert!(search_with(&sys, SearchOptions { budget: 4096 }).is_ok());
    }

    #[test]
    fn invalid_systems_are_rejected() {
        assert_eq!(ContextSystem::new(vec![], vec![]), Err(SystemError::NoObservables));
        assert!(matches!(
            ContextSystem::new(vec![obs("x", &[1.0, 1.0])], vec![]),
            Err(SystemError::BadSpectrumValue { .. })
        ));
        assert!(matches!(
            ContextSystem::new(vec![obs("x", &[0.0])], vec![]),
            Err(SystemError::BadSpectrumValue { .. })
        ));
        assert_eq!(
            ContextSystem::new(vec![obs("x", &[])], vec![]),
            Err(SystemError::EmptySpectrum("x".into()))
        );
        assert_eq!(
            ContextSystem::new(
                vec![obs("x", &[1.0])],
                vec![Context::new(["x", "q"], Constraint::ProductSign(Sign::Positive))]
            ),
            Err(SystemError::UnknownMember { context: 0, id: "q".into() })
        );
        assert!(matches!(
            ContextSystem::new(
                vec![obs("x", &[1.0]), obs("y", &[1.0])],
                vec![Context::new(["x"], Constraint::ProductEquals("y".into()))]
            ),
            Err(SystemError::DesignatedNotMember { .. })
        ));
        assert!(matches!(
            ContextSystem::new(
                vec![obs("x", &[1.0])],
                vec![Context::new(["x", "x"], Constraint::ProductSign(Sign::Positive))]
            ),
            Err(SystemError::DuplicateMember { .. })
        ));
    }

    #[test]
    fn json_round_trip_of_fig1() {
        let sys = fig1_system();
        let back = ContextSystem::from_json(&sys.to_json()).unwrap();
        assert_eq!(back, sys);
        assert!(sys.to_json().contains("\"type\": \"product_sign\""));
        assert!(sys.to_json().contains("\"arg\": \"negative\""));
    }

    #[test]
    fn load_errors_carry_lines() {
        let unknown_type = "{\n \"observables\": [{\"id\": \"x\", \"spectrum\": [1]}],\n \"contexts\": [{\"members\": [\"x\"], \"constraint\": {\"type\": \"sum_equals\", \"arg\": 1}}]\n}";
        match ContextSystem::from_json(unknown_type).unwrap_err() {
            LoadError::Parse { line, message, .. } => {
                assert_eq!(line, 3);
                assert!(message.contains("sum_equals"));
            }
            other => panic!("unexpected {other:?}"),
        }

        let dangling = "{\n \"observables\": [{\"id\": \"x\", \"spectrum\": [1]}],\n \"contexts\": [\n  {\"members\": [\"x\", \"ghost\"], \"constraint\": {\"type\": \"product_sign\", \"arg\": \"positive\"}}\n ]\n}";
        let err = ContextSystem::from_json(dangling).unwrap_err();
        assert_eq!(
            err,
            LoadError::Invalid {
                line: Some(4),
                source: SystemError::UnknownMember { context: 0, id: "ghost".into() }
            }
        );
        assert!(err.to_string().contains("ghost"));

        let empty = "{\"observables\": [], \"contexts\": []}";
        assert!(matches!(
            ContextSystem::from_json(empty),
            Err(LoadError::Invalid { source: SystemError::NoObservables, .. })
        ));
    }
}
