//! Truncated temporal logic formulas with quantitative (robustness) and
//! qualitative semantics over finite trajectories.
//!
//! Formulas are built over named predicates. A predicate is evaluated on a
//! single trajectory state through the [`PredicateValuation`] trait, so the
//! same evaluator works on raw value streams (tests, monitoring) and on team
//! states grounded in a scenario.

mod parse;

pub use parse::{parse_formula, parse_guard, ParseError};

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

use crate::scalar::{rho_max, Scalar};

/// How a predicate reads a trajectory state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PredicateKind {
    /// Distance-to-request-site predicate: positive when the owning agents
    /// stand on a site of the request.
    Go,
    /// Completion predicate: positive exactly when the request was finished
    /// at this step.
    Do,
    /// Free-form predicate resolved by the valuation context.
    Custom,
}

/// A named atomic predicate with its offset constant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Predicate<T> {
    pub name: String,
    pub kind: PredicateKind,
    /// Request index this predicate refers to (`Go`/`Do` only).
    pub request: Option<usize>,
    /// The positive offset constant for `Go`/`Do` predicates.
    pub constant: T,
}

#[derive(Debug, Error, PartialEq)]
pub enum PredicateError {
    #[error("predicate `{0}` must have a positive constant")]
    NonPositiveConstant(String),
    #[error("predicate `{0}` must reference a request")]
    MissingRequest(String),
}

impl<T: Scalar> Predicate<T> {
    pub fn go(name: impl Into<String>, request: usize, constant: T) -> Result<Self, PredicateError> {
        Self::new(name, PredicateKind::Go, Some(request), constant)
    }

    pub fn service_done(
        name: impl Into<String>,
        request: usize,
        constant: T,
    ) -> Result<Self, PredicateError> {
        Self::new(name, PredicateKind::Do, Some(request), constant)
    }

    /// A predicate whose value comes straight from the valuation context.
    pub fn custom(name: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            kind: PredicateKind::Custom,
            request: None,
            constant: T::zero(),
        }
    }

    pub fn new(
        name: impl Into<String>,
        kind: PredicateKind,
        request: Option<usize>,
        constant: T,
    ) -> Result<Self, PredicateError> {
        let name = name.into();
        if matches!(kind, PredicateKind::Go | PredicateKind::Do) {
            if constant <= T::zero() {
                return Err(PredicateError::NonPositiveConstant(name));
            }
            if request.is_none() {
                return Err(PredicateError::MissingRequest(name));
            }
        }
        Ok(Self { name, kind, request, constant })
    }
}

/// Resolves predicate names available to the formula parser.
#[derive(Debug, Clone, Default)]
pub struct PredicateTable<T> {
    map: BTreeMap<String, Predicate<T>>,
}

impl<T: Scalar> PredicateTable<T> {
    pub fn new() -> Self {
        Self { map: BTreeMap::new() }
    }

    pub fn insert(&mut self, pred: Predicate<T>) {
        self.map.insert(pred.name.clone(), pred);
    }

    pub fn get(&self, name: &str) -> Option<&Predicate<T>> {
        self.map.get(name)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.map.keys().map(String::as_str)
    }
}

/// Formula syntax tree.
#[derive(Debug, Clone, PartialEq)]
pub enum Formula<T> {
    True,
    Pred(Predicate<T>),
    Not(Box<Formula<T>>),
    And(Box<Formula<T>>, Box<Formula<T>>),
    Or(Box<Formula<T>>, Box<Formula<T>>),
    Imply(Box<Formula<T>>, Box<Formula<T>>),
    Next(Box<Formula<T>>),
    Eventually(Box<Formula<T>>),
    Always(Box<Formula<T>>),
    Until(Box<Formula<T>>, Box<Formula<T>>),
    Then(Box<Formula<T>>, Box<Formula<T>>),
}

impl<T> Formula<T> {
    pub fn pred(p: Predicate<T>) -> Self {
        Formula::Pred(p)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(self) -> Self {
        Formula::Not(Box::new(self))
    }

    pub fn and(self, rhs: Self) -> Self {
        Formula::And(Box::new(self), Box::new(rhs))
    }

    pub fn or(self, rhs: Self) -> Self {
        Formula::Or(Box::new(self), Box::new(rhs))
    }

    pub fn imply(self, rhs: Self) -> Self {
        Formula::Imply(Box::new(self), Box::new(rhs))
    }

    pub fn next(self) -> Self {
        Formula::Next(Box::new(self))
    }

    pub fn eventually(self) -> Self {
        Formula::Eventually(Box::new(self))
    }

    pub fn always(self) -> Self {
        Formula::Always(Box::new(self))
    }

    pub fn until(self, rhs: Self) -> Self {
        Formula::Until(Box::new(self), Box::new(rhs))
    }

    pub fn then(self, rhs: Self) -> Self {
        Formula::Then(Box::new(self), Box::new(rhs))
    }

    /// True when the formula contains no temporal operator.
    pub fn is_temporal_free(&self) -> bool {
        match self {
            Formula::True | Formula::Pred(_) => true,
            Formula::Not(f) => f.is_temporal_free(),
            Formula::And(a, b) | Formula::Or(a, b) | Formula::Imply(a, b) => {
                a.is_temporal_free() && b.is_temporal_free()
            }
            Formula::Next(_)
            | Formula::Eventually(_)
            | Formula::Always(_)
            | Formula::Until(_, _)
            | Formula::Then(_, _) => false,
        }
    }

    /// Visits every predicate leaf.
    pub fn for_each_predicate(&self, f: &mut impl FnMut(&Predicate<T>)) {
        match self {
            Formula::True => {}
            Formula::Pred(p) => f(p),
            Formula::Not(a) | Formula::Next(a) | Formula::Eventually(a) | Formula::Always(a) => {
                a.for_each_predicate(f)
            }
            Formula::And(a, b)
            | Formula::Or(a, b)
            | Formula::Imply(a, b)
            | Formula::Until(a, b)
            | Formula::Then(a, b) => {
                a.for_each_predicate(f);
                b.for_each_predicate(f);
            }
        }
    }
}

/// A temporal-free formula, usable as an automaton edge guard.
#[derive(Debug, Clone, PartialEq)]
pub struct GuardFormula<T>(Formula<T>);

#[derive(Debug, Error, PartialEq)]
#[error("temporal operator not allowed in a guard")]
pub struct TemporalInGuard;

impl<T> TryFrom<Formula<T>> for GuardFormula<T> {
    type Error = TemporalInGuard;

    fn try_from(f: Formula<T>) -> Result<Self, TemporalInGuard> {
        if f.is_temporal_free() {
            Ok(GuardFormula(f))
        } else {
            Err(TemporalInGuard)
        }
    }
}

impl<T> GuardFormula<T> {
    /// The guard that no state satisfies.
    pub fn always_false() -> Self {
        GuardFormula(Formula::True.not())
    }

    pub fn formula(&self) -> &Formula<T> {
        &self.0
    }

    pub fn into_formula(self) -> Formula<T> {
        self.0
    }

    /// Disjunction of two guards; guards are closed under `or`.
    pub fn or(self, rhs: Self) -> Self {
        GuardFormula(self.0.or(rhs.0))
    }
}

/// Evaluates predicates on one trajectory state.
pub trait PredicateValuation<T: Scalar> {
    fn predicate_value(&self, pred: &Predicate<T>) -> T;
}

/// Name-keyed predicate values; handy for scalar streams in tests and tools.
#[derive(Debug, Clone, Default)]
pub struct ValuationMap<T>(pub BTreeMap<String, T>);

impl<T: Scalar> ValuationMap<T> {
    pub fn from_pairs(pairs: &[(&str, T)]) -> Self {
        Self(pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect())
    }
}

impl<T: Scalar> PredicateValuation<T> for ValuationMap<T> {
    fn predicate_value(&self, pred: &Predicate<T>) -> T {
        *self
            .0
            .get(&pred.name)
            .unwrap_or_else(|| panic!("no value for predicate `{}`", pred.name))
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum EvalError {
    #[error("trajectory index {index} out of range (length {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("empty trajectory")]
    EmptyTrajectory,
}

/// Robustness of `phi` on the trajectory suffix starting at `t`.
///
/// Truncated semantics: `Until` requires the left operand at every step
/// before the right operand holds, `Then` at least once before. The true
/// constant and a next-step past the end evaluate to `±RHO_MAX`.
pub fn robustness<T, V>(traj: &[V], phi: &Formula<T>, t: usize) -> Result<T, EvalError>
where
    T: Scalar,
    V: PredicateValuation<T>,
{
    if traj.is_empty() {
        return Err(EvalError::EmptyTrajectory);
    }
    if t >= traj.len() {
        return Err(EvalError::IndexOutOfRange { index: t, len: traj.len() });
    }
    Ok(eval(traj, phi, t))
}

/// Qualitative satisfaction: robustness at the trajectory start is positive.
/// A robustness of exactly zero counts as non-satisfaction.
pub fn satisfies<T, V>(traj: &[V], phi: &Formula<T>) -> Result<bool, EvalError>
where
    T: Scalar,
    V: PredicateValuation<T>,
{
    Ok(robustness(traj, phi, 0)? > T::zero())
}

/// Robustness of a temporal-free guard on a single state.
pub fn eval_guard<T, V>(state: &V, guard: &GuardFormula<T>) -> T
where
    T: Scalar,
    V: PredicateValuation<T>,
{
    eval_state(state, guard.formula())
}

fn eval<T, V>(traj: &[V], phi: &Formula<T>, t: usize) -> T
where
    T: Scalar,
    V: PredicateValuation<T>,
{
    match phi {
        Formula::True => rho_max(),
        Formula::Pred(p) => traj[t].predicate_value(p),
        Formula::Not(f) => -eval(traj, f, t),
        Formula::And(a, b) => eval(traj, a, t).min(eval(traj, b, t)),
        Formula::Or(a, b) => eval(traj, a, t).max(eval(traj, b, t)),
        Formula::Imply(a, b) => (-eval(traj, a, t)).max(eval(traj, b, t)),
        Formula::Next(f) => {
            if t + 1 < traj.len() {
                eval(traj, f, t + 1)
            } else {
                -rho_max::<T>()
            }
        }
        Formula::Eventually(f) => (t..traj.len())
            .map(|u| eval(traj, f, u))
            .fold(-T::infinity(), T::max),
        Formula::Always(f) => (t..traj.len())
            .map(|u| eval(traj, f, u))
            .fold(T::infinity(), T::min),
        Formula::Until(a, b) => {
            // max over t' of min(rho(b at t'), min over t'' in [t, t') of rho(a at t''))
            let mut best = -T::infinity();
            let mut prefix_min = rho_max::<T>();
            for u in t..traj.len() {
                best = best.max(eval(traj, b, u).min(prefix_min));
                prefix_min = prefix_min.min(eval(traj, a, u));
            }
            best
        }
        Formula::Then(a, b) => {
            // as Until, but the left operand must hold at least once before:
            // the inner aggregation over [t, t') is a max.
            let mut best = -T::infinity();
            let mut prefix_max = -rho_max::<T>();
            for u in t..traj.len() {
                best = best.max(eval(traj, b, u).min(prefix_max));
                prefix_max = prefix_max.max(eval(traj, a, u));
            }
            best
        }
    }
}

fn eval_state<T, V>(state: &V, phi: &Formula<T>) -> T
where
    T: Scalar,
    V: PredicateValuation<T>,
{
    match phi {
        Formula::True => rho_max(),
        Formula::Pred(p) => state.predicate_value(p),
        Formula::Not(f) => -eval_state(state, f),
        Formula::And(a, b) => eval_state(state, a).min(eval_state(state, b)),
        Formula::Or(a, b) => eval_state(state, a).max(eval_state(state, b)),
        Formula::Imply(a, b) => (-eval_state(state, a)).max(eval_state(state, b)),
        _ => unreachable!("guards are temporal-free by construction"),
    }
}

// Precedence levels for printing: Until/Then bind loosest, then implication,
// disjunction, conjunction, and unary prefixes.
const PREC_TEMPORAL_BIN: u8 = 0;
const PREC_IMPLY: u8 = 1;
const PREC_OR: u8 = 2;
const PREC_AND: u8 = 3;
const PREC_UNARY: u8 = 4;

impl<T> Formula<T> {
    fn precedence(&self) -> u8 {
        match self {
            Formula::Until(_, _) | Formula::Then(_, _) => PREC_TEMPORAL_BIN,
            Formula::Imply(_, _) => PREC_IMPLY,
            Formula::Or(_, _) => PREC_OR,
            Formula::And(_, _) => PREC_AND,
            Formula::Not(_) | Formula::Next(_) | Formula::Eventually(_) | Formula::Always(_) => {
                PREC_UNARY
            }
            Formula::True | Formula::Pred(_) => u8::MAX,
        }
    }

    fn fmt_prec(&self, f: &mut fmt::Formatter<'_>, min_prec: u8) -> fmt::Result {
        let prec = self.precedence();
        let parens = prec < min_prec;
        if parens {
            write!(f, "(")?;
        }
        match self {
            Formula::True => write!(f, "top")?,
            Formula::Pred(p) => write!(f, "{}", p.name)?,
            Formula::Not(a) => {
                write!(f, "!")?;
                a.fmt_prec(f, PREC_UNARY)?;
            }
            Formula::Next(a) => {
                write!(f, "X ")?;
                a.fmt_prec(f, PREC_UNARY)?;
            }
            Formula::Eventually(a) => {
                write!(f, "<> ")?;
                a.fmt_prec(f, PREC_UNARY)?;
            }
            Formula::Always(a) => {
                write!(f, "[] ")?;
                a.fmt_prec(f, PREC_UNARY)?;
            }
            Formula::And(a, b) => {
                a.fmt_prec(f, PREC_AND)?;
                write!(f, " && ")?;
                b.fmt_prec(f, PREC_AND + 1)?;
            }
            Formula::Or(a, b) => {
                a.fmt_prec(f, PREC_OR)?;
                write!(f, " || ")?;
                b.fmt_prec(f, PREC_OR + 1)?;
            }
            Formula::Imply(a, b) => {
                a.fmt_prec(f, PREC_IMPLY + 1)?;
                write!(f, " -> ")?;
                b.fmt_prec(f, PREC_IMPLY)?;
            }
            Formula::Until(a, b) => {
                a.fmt_prec(f, PREC_TEMPORAL_BIN + 1)?;
                write!(f, " U ")?;
                b.fmt_prec(f, PREC_TEMPORAL_BIN)?;
            }
            Formula::Then(a, b) => {
                a.fmt_prec(f, PREC_TEMPORAL_BIN + 1)?;
                write!(f, " T ")?;
                b.fmt_prec(f, PREC_TEMPORAL_BIN)?;
            }
        }
        if parens {
            write!(f, ")")?;
        }
        Ok(())
    }
}

impl<T> fmt::Display for Formula<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.fmt_prec(f, 0)
    }
}

impl<T> fmt::Display for GuardFormula<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

#[cfg(test)]
mod tests;
