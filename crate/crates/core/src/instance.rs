//! Partially instantiated rules, extended one daughter at a time.

use crate::stats::ParseStats;
use crate::term::{normalize_terms, Bindings, Category, Term};

/// A tuple of terms in one normalized variable space `0..vars`, e.g. a
/// rule's mother followed by the daughters still to be found.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub(crate) struct Instance {
    pub terms: Vec<Term>,
    pub vars: u32,
}

impl Instance {
    pub fn new(mut terms: Vec<Term>) -> Instance {
        let vars = normalize_terms(&mut terms);
        Instance { terms, vars }
    }
}

/// Reusable unification workspace with the engine's counters.
pub(crate) struct Unify {
    bindings: Bindings,
    /// Copy the instance before each attempt instead of after success.
    pub eager_copy: bool,
    pub stats: ParseStats,
}

impl Unify {
    pub fn new(occurs_check: bool, eager_copy: bool) -> Unify {
        Unify {
            bindings: Bindings::new(0, occurs_check),
            eager_copy,
            stats: ParseStats::default(),
        }
    }

    /// Unifies `inst.terms[at]` with `cat`. On success returns the instance
    /// with the bindings applied, dropping position `at` when `consume`.
    pub fn extend(
        &mut self,
        inst: &Instance,
        at: usize,
        consume: bool,
        cat: &Category,
    ) -> Option<Instance> {
        self.stats.unify_attempts += 1;
        let eager;
        let inst = if self.eager_copy {
            self.stats.copies += 1;
            eager = inst.clone();
            &eager
        } else {
            inst
        };
        self.bindings.reset((inst.vars + cat.var_bound()) as usize);
        if !self
            .bindings
            .unify(&inst.terms[at], 0, cat.term(), inst.vars)
        {
            return None;
        }
        self.stats.unify_successes += 1;
        if !self.eager_copy {
            self.stats.copies += 1;
        }
        let terms = inst
            .terms
            .iter()
            .enumerate()
            .filter(|&(j, _)| !(consume && j == at))
            .map(|(_, t)| self.bindings.resolve(t, 0))
            .collect();
        Some(Instance::new(terms))
    }

    /// Unifies a shared `pattern` (variables `0..offset`) with `cat` once,
    /// leaving the bindings in place for [`Unify::apply`].
    pub fn match_shared(&mut self, pattern: &Term, offset: u32, cat: &Category) -> bool {
        self.stats.unify_attempts += 1;
        self.bindings.reset((offset + cat.var_bound()) as usize);
        let ok = self.bindings.unify(pattern, 0, cat.term(), offset);
        if ok {
            self.stats.unify_successes += 1;
        }
        ok
    }

    /// Instantiates `terms` under the bindings left by the last successful
    /// [`Unify::match_shared`].
    pub fn apply(&mut self, terms: &[Term]) -> Instance {
        self.stats.copies += 1;
        Instance::new(terms.iter().map(|t| self.bindings.resolve(t, 0)).collect())
    }
}

/// Cheap necessary condition for unifiability: same functor and no
/// top-level argument with two different atoms.
pub(crate) fn may_unify(a: &Term, b: &Term) -> bool {
    match (a, b) {
        (Term::App(f, xs), Term::App(g, ys)) => {
            f == g
                && xs
                    .iter()
                    .zip(ys)
                    .all(|(x, y)| !matches!((x, y), (Term::Atom(p), Term::Atom(q)) if p != q))
        }
        _ => true,
    }
}
