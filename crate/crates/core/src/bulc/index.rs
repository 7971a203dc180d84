//! Discrimination-tree index from a category to the rules whose first
//! daughter may unify with it.
//!
//! The tree branches on the functor and then on each top-level argument
//! (atom, nested functor, or wildcard for a variable). Rules whose first
//! daughters are alphabetic variants share a group, so one unification
//! serves them all.

use std::collections::{BTreeMap, HashMap};

use crate::grammar::{Grammar, RuleIdx};
use crate::term::{normalize_terms, AtomId, Category, FunctorId, Term};

/// Rules sharing a first daughter `pattern`, written in a variable space in
/// which the pattern's variables come first.
#[derive(Clone, Debug)]
pub struct RuleGroup {
    pub pattern: Term,
    /// Variables at or above this bound are free for the other side.
    pub offset: u32,
    pub(crate) members: Vec<GroupMember>,
}

impl RuleGroup {
    pub fn rules(&self) -> impl Iterator<Item = RuleIdx> + '_ {
        self.members.iter().map(|m| m.rule)
    }
}

#[derive(Clone, Debug)]
pub(crate) struct GroupMember {
    pub rule: RuleIdx,
    /// The mother then the daughters still to find after the first one;
    /// for a kleene first daughter, the daughter itself is kept.
    pub rest: Vec<Term>,
}

#[derive(Default, Debug, Clone)]
struct Trie {
    atoms: HashMap<AtomId, Trie>,
    functors: HashMap<FunctorId, Trie>,
    any: Option<Box<Trie>>,
    groups: Vec<usize>,
}

impl Trie {
    fn insert(&mut self, args: &[Term], group: usize) {
        let Some((first, rest)) = args.split_first() else {
            self.groups.push(group);
            return;
        };
        let child = match first {
            Term::Atom(a) => self.atoms.entry(*a).or_default(),
            Term::App(f, _) => self.functors.entry(*f).or_default(),
            Term::Var(_) => self.any.get_or_insert_with(Default::default),
        };
        child.insert(rest, group);
    }

    fn query(&self, args: &[Term], out: &mut Vec<usize>) {
        let Some((first, rest)) = args.split_first() else {
            out.extend_from_slice(&self.groups);
            return;
        };
        if let Some(any) = &self.any {
            any.query(rest, out);
        }
        match first {
            Term::Atom(a) => {
                if let Some(t) = self.atoms.get(a) {
                    t.query(rest, out);
                }
            }
            Term::App(f, _) => {
                if let Some(t) = self.functors.get(f) {
                    t.query(rest, out);
                }
            }
            Term::Var(_) => {
                self.atoms.values().for_each(|t| t.query(rest, out));
                self.functors.values().for_each(|t| t.query(rest, out));
            }
        }
    }
}

#[derive(Clone, Debug)]
pub struct RuleIndex {
    groups: Vec<RuleGroup>,
    by_functor: HashMap<FunctorId, Trie>,
}

impl RuleIndex {
    pub fn build(grammar: &Grammar) -> RuleIndex {
        let mut by_pattern: BTreeMap<Term, usize> = BTreeMap::new();
        let mut groups: Vec<RuleGroup> = Vec::new();
        for (idx, rule) in grammar.rules().iter().enumerate() {
            let kleene_first = rule.daughters[0].kleene;
            let mut terms: Vec<Term> = std::iter::once(rule.daughters[0].category.term().clone())
                .chain(std::iter::once(rule.mother.term().clone()))
                .chain(
                    rule.daughters[1..]
                        .iter()
                        .map(|d| d.category.term().clone()),
                )
                .collect();
            let vars = normalize_terms(&mut terms);
            let pattern = terms[0].clone();
            let rest = if kleene_first {
                let mut r = vec![terms[1].clone(), terms[0].clone()];
                r.extend_from_slice(&terms[2..]);
                r
            } else {
                terms[1..].to_vec()
            };
            let g = *by_pattern.entry(pattern.clone()).or_insert_with(|| {
                groups.push(RuleGroup {
                    pattern,
                    offset: 0,
                    members: Vec::new(),
                });
                groups.len() - 1
            });
            groups[g].offset = groups[g].offset.max(vars);
            groups[g].members.push(GroupMember { rule: idx, rest });
        }
        let mut by_functor: HashMap<FunctorId, Trie> = HashMap::new();
        for (g, group) in groups.iter().enumerate() {
            if let Term::App(f, args) = &group.pattern {
                by_functor.entry(*f).or_default().insert(args, g);
            }
        }
        RuleIndex { groups, by_functor }
    }

    pub fn groups(&self) -> &[RuleGroup] {
        &self.groups
    }

    pub fn group(&self, g: usize) -> &RuleGroup {
        &self.groups[g]
    }

    /// Groups whose pattern is compatible with `cat` argument by argument,
    /// in increasing order.
    pub fn candidates(&self, cat: &Category) -> Vec<usize> {
        let mut out = Vec::new();
        if let Some(t) = self.by_functor.get(&cat.functor()) {
            t.query(cat.args(), &mut out);
        }
        out.sort_unstable();
        out
    }

    /// Rules reachable through [`RuleIndex::candidates`], sorted.
    pub fn candidate_rules(&self, cat: &Category) -> Vec<RuleIdx> {
        let mut rules: Vec<RuleIdx> = self
            .candidates(cat)
            .into_iter()
            .flat_map(|g| self.groups[g].rules())
            .collect();
        rules.sort_unstable();
        rules
    }
}
