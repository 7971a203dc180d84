//! Fixed-arity terms over a declared signature, with unification,
//! subsumption and alphabetic-variant checks.
//!
//! A [`Category`] is a functor applied to exactly `arity` argument
//! [`Term`]s. Variables are plain integers scoped to whatever owns the
//! category (a rule, a lexical entry, a forest node); two categories passed
//! to [`unify`] or [`subsumes`] are always treated as independent, i.e. their
//! variables are renamed apart first.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU32, Ordering};

use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct AtomId(pub u32);

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FunctorId(pub u32);

/// Identifies a signature lineage. Signatures derived by extension (for
/// example when kleene expansion adds auxiliary functors) keep the id of the
/// signature they extend, so categories stay comparable across the two.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SigId(u32);

static NEXT_SIG: AtomicU32 = AtomicU32::new(1);

pub const DEFAULT_MAX_DEPTH: usize = 2;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TermError {
    #[error("categories belong to different signatures")]
    SignatureMismatch,
    #[error("unknown functor `{0}`")]
    UnknownFunctor(String),
    #[error("unknown atom `{0}`")]
    UnknownAtom(String),
    #[error("functor `{functor}` has arity {expected}, got {found} arguments")]
    ArityMismatch {
        functor: String,
        expected: usize,
        found: usize,
    },
    #[error("functor `{name}` redeclared with arity {found} (was {expected})")]
    ArityConflict {
        name: String,
        expected: usize,
        found: usize,
    },
    #[error("name `{0}` is declared both as an atom and as a functor")]
    NameClash(String),
    #[error("category nesting depth {depth} exceeds the maximum of {max}")]
    DepthExceeded { depth: usize, max: usize },
}

/// Declared atoms and functors.
#[derive(Clone, Debug)]
pub struct Signature {
    id: SigId,
    atoms: Vec<String>,
    atom_index: HashMap<String, AtomId>,
    functors: Vec<(String, usize)>,
    functor_index: HashMap<String, FunctorId>,
    max_depth: usize,
}

impl Default for Signature {
    fn default() -> Self {
        Signature::new(DEFAULT_MAX_DEPTH)
    }
}

impl Signature {
    pub fn new(max_depth: usize) -> Self {
        Signature {
            id: SigId(NEXT_SIG.fetch_add(1, Ordering::Relaxed)),
            atoms: Vec::new(),
            atom_index: HashMap::new(),
            functors: Vec::new(),
            functor_index: HashMap::new(),
            max_depth,
        }
    }

    /// A copy that keeps this signature's identity; used for conservative
    /// extensions that only append functors.
    pub(crate) fn extension(&self) -> Signature {
        self.clone()
    }

    pub fn id(&self) -> SigId {
        self.id
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn add_atom(&mut self, name: &str) -> Result<AtomId, TermError> {
        if self.functor_index.contains_key(name) {
            return Err(TermError::NameClash(name.to_string()));
        }
        if let Some(&id) = self.atom_index.get(name) {
            return Ok(id);
        }
        let id = AtomId(self.atoms.len() as u32);
        self.atoms.push(name.to_string());
        self.atom_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn add_functor(&mut self, name: &str, arity: usize) -> Result<FunctorId, TermError> {
        if self.atom_index.contains_key(name) {
            return Err(TermError::NameClash(name.to_string()));
        }
        if let Some(&id) = self.functor_index.get(name) {
            let expected = self.functors[id.0 as usize].1;
            if expected != arity {
                return Err(TermError::ArityConflict {
                    name: name.to_string(),
                    expected,
                    found: arity,
                });
            }
            return Ok(id);
        }
        let id = FunctorId(self.functors.len() as u32);
        self.functors.push((name.to_string(), arity));
        self.functor_index.insert(name.to_string(), id);
        Ok(id)
    }

    pub fn atom(&self, name: &str) -> Option<AtomId> {
        self.atom_index.get(name).copied()
    }

    pub fn functor(&self, name: &str) -> Option<FunctorId> {
        self.functor_index.get(name).copied()
    }

    pub fn arity(&self, f: FunctorId) -> usize {
        self.functors[f.0 as usize].1
    }

    pub fn atom_name(&self, a: AtomId) -> &str {
        &self.atoms[a.0 as usize]
    }

    pub fn functor_name(&self, f: FunctorId) -> &str {
        &self.functors[f.0 as usize].0
    }

    pub fn atom_count(&self) -> usize {
        self.atoms.len()
    }

    pub fn functor_count(&self) -> usize {
        self.functors.len()
    }

    pub fn atoms(&self) -> impl Iterator<Item = AtomId> + '_ {
        (0..self.atoms.len() as u32).map(AtomId)
    }

    pub fn functors(&self) -> impl Iterator<Item = FunctorId> + '_ {
        (0..self.functors.len() as u32).map(FunctorId)
    }
}

/// Argument value: an atom, a variable, or a nested functor application.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Term {
    Var(u32),
    Atom(AtomId),
    App(FunctorId, Vec<Term>),
}

impl Term {
    /// Nesting depth; atoms and variables have depth 0.
    pub fn depth(&self) -> usize {
        match self {
            Term::App(_, args) => 1 + args.iter().map(Term::depth).max().unwrap_or(0),
            _ => 0,
        }
    }

    /// One past the largest variable index, or 0 for ground terms.
    pub fn var_bound(&self) -> u32 {
        match self {
            Term::Var(v) => v + 1,
            Term::Atom(_) => 0,
            Term::App(_, args) => args.iter().map(Term::var_bound).max().unwrap_or(0),
        }
    }

    pub fn is_ground(&self) -> bool {
        match self {
            Term::Var(_) => false,
            Term::Atom(_) => true,
            Term::App(_, args) => args.iter().all(Term::is_ground),
        }
    }

    pub fn shifted(&self, offset: u32) -> Term {
        if offset == 0 {
            return self.clone();
        }
        match self {
            Term::Var(v) => Term::Var(v + offset),
            Term::Atom(a) => Term::Atom(*a),
            Term::App(f, args) => Term::App(*f, args.iter().map(|t| t.shifted(offset)).collect()),
        }
    }

    pub fn vars_into(&self, out: &mut Vec<u32>) {
        match self {
            Term::Var(v) => {
                if !out.contains(v) {
                    out.push(*v)
                }
            }
            Term::Atom(_) => {}
            Term::App(_, args) => args.iter().for_each(|t| t.vars_into(out)),
        }
    }

    pub(crate) fn rename(&mut self, map: &mut Renaming) {
        match self {
            Term::Var(v) => *v = map.get(*v),
            Term::Atom(_) => {}
            Term::App(_, args) => args.iter_mut().for_each(|t| t.rename(map)),
        }
    }

    fn check(&self, sig: &Signature) -> Result<(), TermError> {
        if let Term::App(f, args) = self {
            if f.0 as usize >= sig.functor_count() {
                return Err(TermError::UnknownFunctor(format!("#{}", f.0)));
            }
            let arity = sig.arity(*f);
            if arity != args.len() {
                return Err(TermError::ArityMismatch {
                    functor: sig.functor_name(*f).to_string(),
                    expected: arity,
                    found: args.len(),
                });
            }
            for a in args {
                a.check(sig)?;
            }
        } else if let Term::Atom(a) = self {
            if a.0 as usize >= sig.atom_count() {
                return Err(TermError::UnknownAtom(format!("#{}", a.0)));
            }
        }
        Ok(())
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> TermDisplay<'a> {
        TermDisplay { term: self, sig }
    }
}

/// Renames variables to `0..n` in order of first appearance.
#[derive(Default)]
pub(crate) struct Renaming {
    pairs: Vec<(u32, u32)>,
}

impl Renaming {
    pub(crate) fn new() -> Self {
        Renaming { pairs: Vec::new() }
    }

    pub(crate) fn get(&mut self, v: u32) -> u32 {
        if let Some(&(_, to)) = self.pairs.iter().find(|(from, _)| *from == v) {
            return to;
        }
        let to = self.pairs.len() as u32;
        self.pairs.push((v, to));
        to
    }

    pub(crate) fn len(&self) -> u32 {
        self.pairs.len() as u32
    }
}

/// Renames the variables of a term sequence apart-consistently to `0..n`
/// and returns `n`.
pub(crate) fn normalize_terms(terms: &mut [Term]) -> u32 {
    let mut map = Renaming::new();
    for t in terms.iter_mut() {
        t.rename(&mut map);
    }
    map.len()
}

pub struct TermDisplay<'a> {
    term: &'a Term,
    sig: &'a Signature,
}

impl fmt::Display for TermDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.term {
            Term::Var(v) => write!(f, "_{v}"),
            Term::Atom(a) => f.write_str(self.sig.atom_name(*a)),
            Term::App(func, args) => {
                f.write_str(self.sig.functor_name(*func))?;
                if !args.is_empty() {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(",")?;
                        }
                        write!(f, "{}", a.display(self.sig))?;
                    }
                    f.write_str(")")?;
                }
                Ok(())
            }
        }
    }
}

/// A well-formed functor application.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Category {
    sig: SigId,
    term: Term,
}

impl Category {
    pub fn new(sig: &Signature, functor: FunctorId, args: Vec<Term>) -> Result<Self, TermError> {
        Category::from_term(sig, Term::App(functor, args))
    }

    /// Builds a category from a functor name and arguments.
    pub fn build(sig: &Signature, functor: &str, args: Vec<Term>) -> Result<Self, TermError> {
        let f = sig
            .functor(functor)
            .ok_or_else(|| TermError::UnknownFunctor(functor.to_string()))?;
        Category::new(sig, f, args)
    }

    pub fn from_term(sig: &Signature, term: Term) -> Result<Self, TermError> {
        if !matches!(term, Term::App(..)) {
            return Err(TermError::UnknownFunctor(String::from(
                "<non-functor term>",
            )));
        }
        term.check(sig)?;
        let depth = term.depth();
        if depth > sig.max_depth() {
            return Err(TermError::DepthExceeded {
                depth,
                max: sig.max_depth(),
            });
        }
        Ok(Category {
            sig: sig.id(),
            term,
        })
    }

    pub(crate) fn from_parts(sig: SigId, term: Term) -> Self {
        debug_assert!(matches!(term, Term::App(..)));
        Category { sig, term }
    }

    pub fn sig_id(&self) -> SigId {
        self.sig
    }

    pub fn term(&self) -> &Term {
        &self.term
    }

    pub fn into_term(self) -> Term {
        self.term
    }

    pub fn functor(&self) -> FunctorId {
        match &self.term {
            Term::App(f, _) => *f,
            _ => unreachable!("category term is always an application"),
        }
    }

    pub fn args(&self) -> &[Term] {
        match &self.term {
            Term::App(_, args) => args,
            _ => unreachable!("category term is always an application"),
        }
    }

    pub fn depth(&self) -> usize {
        self.term.depth()
    }

    pub fn var_bound(&self) -> u32 {
        self.term.var_bound()
    }

    pub fn is_ground(&self) -> bool {
        self.term.is_ground()
    }

    pub fn vars(&self) -> Vec<u32> {
        let mut out = Vec::new();
        self.term.vars_into(&mut out);
        out
    }

    /// The same category with variables renumbered `0..n` by first
    /// appearance. Alphabetic variants normalize to equal values.
    pub fn normalized(&self) -> Category {
        let mut term = self.term.clone();
        let mut map = Renaming::new();
        term.rename(&mut map);
        Category {
            sig: self.sig,
            term,
        }
    }

    pub fn display<'a>(&'a self, sig: &'a Signature) -> TermDisplay<'a> {
        self.term.display(sig)
    }
}

/// Scratch binding store for one unification problem. Variables of the two
/// sides are kept apart by adding a per-side offset.
#[derive(Clone, Debug)]
pub(crate) struct Bindings {
    slots: Vec<Option<Term>>,
    occurs_check: bool,
}

impl Bindings {
    pub(crate) fn new(capacity: usize, occurs_check: bool) -> Self {
        Bindings {
            slots: vec![None; capacity],
            occurs_check,
        }
    }

    pub(crate) fn reset(&mut self, capacity: usize) {
        self.slots.clear();
        self.slots.resize(capacity, None);
    }

    fn slot(&self, v: u32) -> Option<&Term> {
        self.slots.get(v as usize).and_then(Option::as_ref)
    }

    fn set(&mut self, v: u32, t: Term) {
        let i = v as usize;
        if i >= self.slots.len() {
            self.slots.resize(i + 1, None);
        }
        self.slots[i] = Some(t);
    }

    /// Unifies `a` (variables shifted by `ao`) with `b` (shifted by `bo`).
    /// On failure the store is left in an unspecified state.
    pub(crate) fn unify(&mut self, a: &Term, ao: u32, b: &Term, bo: u32) -> bool {
        match (a, b) {
            (Term::Var(x), _) => {
                let x = x + ao;
                match self.slot(x) {
                    Some(t) => {
                        let t = t.clone();
                        self.unify(&t, 0, b, bo)
                    }
                    None => self.bind(x, b, bo),
                }
            }
            (_, Term::Var(y)) => {
                let y = y + bo;
                match self.slot(y) {
                    Some(t) => {
                        let t = t.clone();
                        self.unify(a, ao, &t, 0)
                    }
                    None => self.bind(y, a, ao),
                }
            }
            (Term::Atom(p), Term::Atom(q)) => p == q,
            (Term::App(f, xs), Term::App(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| self.unify(x, ao, y, bo))
            }
            _ => false,
        }
    }

    fn bind(&mut self, x: u32, t: &Term, off: u32) -> bool {
        if let Term::Var(y) = t {
            let y = y + off;
            if let Some(bound) = self.slot(y) {
                let bound = bound.clone();
                return self.bind(x, &bound, 0);
            }
            if y != x {
                self.set(x, Term::Var(y));
            }
            return true;
        }
        if self.occurs_check && self.occurs(x, t, off) {
            return false;
        }
        self.set(x, t.shifted(off));
        true
    }

    fn occurs(&self, x: u32, t: &Term, off: u32) -> bool {
        match t {
            Term::Var(y) => {
                let y = y + off;
                y == x || self.slot(y).is_some_and(|b| self.occurs(x, b, 0))
            }
            Term::Atom(_) => false,
            Term::App(_, args) => args.iter().any(|a| self.occurs(x, a, off)),
        }
    }

    /// Applies the bindings to `t` (shifted by `off`).
    pub(crate) fn resolve(&self, t: &Term, off: u32) -> Term {
        match t {
            Term::Var(v) => {
                let v = v + off;
                match self.slot(v) {
                    Some(b) => self.resolve(b, 0),
                    None => Term::Var(v),
                }
            }
            Term::Atom(a) => Term::Atom(*a),
            Term::App(f, args) => {
                Term::App(*f, args.iter().map(|a| self.resolve(a, off)).collect())
            }
        }
    }
}

/// One-way matching: does some substitution of `general`'s variables turn it
/// into exactly `specific` (whose variables are treated as constants)?
pub(crate) fn matches(general: &Term, specific: &Term) -> bool {
    fn go<'a>(g: &Term, s: &'a Term, map: &mut Vec<(u32, &'a Term)>) -> bool {
        match g {
            Term::Var(x) => match map.iter().find(|(v, _)| v == x) {
                Some((_, bound)) => *bound == s,
                None => {
                    map.push((*x, s));
                    true
                }
            },
            Term::Atom(a) => matches!(s, Term::Atom(b) if a == b),
            Term::App(f, xs) => match s {
                Term::App(g2, ys) => {
                    f == g2 && xs.len() == ys.len() && xs.iter().zip(ys).all(|(x, y)| go(x, y, map))
                }
                _ => false,
            },
        }
    }
    go(general, specific, &mut Vec::new())
}

/// Which input a substitution entry refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Side {
    Left,
    Right,
}

/// Images of the input variables, expressed in the result's variable space.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Substitution {
    entries: Vec<((Side, u32), Term)>,
}

impl Substitution {
    pub fn get(&self, side: Side, var: u32) -> Option<&Term> {
        self.entries
            .iter()
            .find(|((s, v), _)| *s == side && *v == var)
            .map(|(_, t)| t)
    }

    pub fn iter(&self) -> impl Iterator<Item = (Side, u32, &Term)> {
        self.entries.iter().map(|((s, v), t)| (*s, *v, t))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Unified {
    /// The most general common instance, normalized.
    pub category: Category,
    pub substitution: Substitution,
}

/// Unification with attempt/success bookkeeping. One per parse context.
#[derive(Clone, Debug)]
pub struct Unifier {
    pub attempts: u64,
    pub successes: u64,
    occurs_check: bool,
}

impl Default for Unifier {
    fn default() -> Self {
        Unifier::new()
    }
}

impl Unifier {
    pub fn new() -> Self {
        Unifier {
            attempts: 0,
            successes: 0,
            occurs_check: true,
        }
    }

    pub fn with_occurs_check(mut self, on: bool) -> Self {
        self.occurs_check = on;
        self
    }

    pub fn occurs_check(&self) -> bool {
        self.occurs_check
    }

    pub fn unify(&mut self, a: &Category, b: &Category) -> Result<Option<Unified>, TermError> {
        if a.sig != b.sig {
            return Err(TermError::SignatureMismatch);
        }
        self.attempts += 1;
        let off = a.var_bound();
        let mut binds = Bindings::new((off + b.var_bound()) as usize, self.occurs_check);
        if !binds.unify(&a.term, 0, &b.term, off) {
            return Ok(None);
        }
        self.successes += 1;
        let mut term = binds.resolve(&a.term, 0);
        let mut map = Renaming::new();
        term.rename(&mut map);
        let mut entries = Vec::new();
        for v in a.vars() {
            let mut img = binds.resolve(&Term::Var(v), 0);
            img.rename(&mut map);
            entries.push(((Side::Left, v), img));
        }
        for v in b.vars() {
            let mut img = binds.resolve(&Term::Var(v), off);
            img.rename(&mut map);
            entries.push(((Side::Right, v), img));
        }
        Ok(Some(Unified {
            category: Category { sig: a.sig, term },
            substitution: Substitution { entries },
        }))
    }
}

/// Most general unifier of two independent categories.
pub fn unify(a: &Category, b: &Category) -> Result<Option<Unified>, TermError> {
    Unifier::new().unify(a, b)
}

/// True iff some substitution applied to `general` yields an alphabetic
/// variant of `specific`.
pub fn subsumes(general: &Category, specific: &Category) -> Result<bool, TermError> {
    if general.sig != specific.sig {
        return Err(TermError::SignatureMismatch);
    }
    Ok(matches(&general.term, &specific.term))
}

/// True iff the two categories are equal up to consistent variable renaming.
pub fn is_variant(a: &Category, b: &Category) -> Result<bool, TermError> {
    if a.sig != b.sig {
        return Err(TermError::SignatureMismatch);
    }
    Ok(a.normalized().term == b.normalized().term)
}
