//! Bottom-up left-corner chart parser working directly on the unification
//! grammar. Completed constituents trigger the rules they can start (found
//! through a [`RuleIndex`]) and extend the active edges waiting for them.
//! Kleene daughters are handled natively: an edge at a kleene daughter can
//! take another repetition or move past it.

mod index;

use std::collections::{HashMap, VecDeque};

pub use index::{RuleGroup, RuleIndex};

use crate::engine::{check_tokens, ParseError, ParseOutcome};
use crate::forest::{DerivationLabel, NodeId, PackedForest};
use crate::grammar::{expand_kleene, Grammar, KleeneMap, RuleIdx};
use crate::instance::{may_unify, Instance, Unify};
use crate::term::{Category, FunctorId, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BulcOptions {
    /// Look rules up through the discrimination tree instead of trying
    /// every rule.
    pub rule_index: bool,
    /// Index active edges by end position and functor, with an atom
    /// pre-check, instead of trying every edge ending at a position.
    pub constituent_index: bool,
    /// Copy partial instances only after a successful unification.
    pub lazy_copy: bool,
    /// Rewrite kleene daughters into auxiliary rules first.
    pub expand_kleene: bool,
    pub occurs_check: bool,
}

impl Default for BulcOptions {
    fn default() -> Self {
        BulcOptions {
            rule_index: true,
            constituent_index: true,
            lazy_copy: true,
            expand_kleene: false,
            occurs_check: true,
        }
    }
}

#[derive(Clone, Debug)]
struct Edge {
    rule: RuleIdx,
    /// Index of the next daughter.
    dot: usize,
    /// Whether the kleene daughter at `dot` has matched at least once.
    repeated: bool,
    start: usize,
    end: usize,
    /// Mother followed by the daughters from `dot` on.
    inst: Instance,
    children: Vec<NodeId>,
}

#[derive(Clone, Debug)]
pub struct BulcParser {
    grammar: Grammar,
    kleene: KleeneMap,
    index: RuleIndex,
    options: BulcOptions,
}

struct State {
    forest: PackedForest,
    unify: Unify,
    edges: Vec<Edge>,
    by_key: HashMap<(usize, FunctorId), Vec<usize>>,
    by_end: Vec<Vec<usize>>,
    agenda: VecDeque<NodeId>,
}

impl BulcParser {
    pub fn new(grammar: &Grammar, options: BulcOptions) -> BulcParser {
        let (grammar, kleene) = if options.expand_kleene {
            expand_kleene(grammar)
        } else {
            (grammar.clone(), KleeneMap::default())
        };
        let index = RuleIndex::build(&grammar);
        BulcParser {
            grammar,
            kleene,
            index,
            options,
        }
    }

    /// The grammar whose rule indices appear in the forests produced.
    pub fn grammar(&self) -> &Grammar {
        &self.grammar
    }

    pub fn kleene(&self) -> &KleeneMap {
        &self.kleene
    }

    pub fn options(&self) -> &BulcOptions {
        &self.options
    }

    pub fn rule_index(&self) -> &RuleIndex {
        &self.index
    }

    pub fn parse(&self, tokens: &[String]) -> Result<ParseOutcome, ParseError> {
        check_tokens(&self.grammar, tokens)?;
        let n = tokens.len();
        let mut st = State {
            forest: PackedForest::new(tokens.to_vec()),
            unify: Unify::new(self.options.occurs_check, !self.options.lazy_copy),
            edges: Vec::new(),
            by_key: HashMap::new(),
            by_end: vec![Vec::new(); n + 1],
            agenda: VecDeque::new(),
        };
        for (p, token) in tokens.iter().enumerate() {
            let entries = self.grammar.lookup(token).unwrap_or_default();
            for (entry, cat) in entries.iter().enumerate() {
                let out = st
                    .forest
                    .add_node(cat, (p, p + 1), DerivationLabel::Lexical { entry }, &[])
                    .expect("lexical spans are valid");
                if out.is_new() {
                    st.agenda.push_back(out.node());
                }
            }
            while let Some(node) = st.agenda.pop_front() {
                if st.forest.resolve(node) != node {
                    continue;
                }
                self.process(&mut st, node);
            }
        }
        st.forest.set_roots(self.grammar.start());
        let mut stats = st.unify.stats;
        stats += st.forest.stats;
        stats.edges = st.edges.len() as u64;
        st.forest.stats = stats;
        Ok(ParseOutcome {
            forest: st.forest,
            stats,
            fill_ratio: None,
        })
    }

    fn process(&self, st: &mut State, node: NodeId) {
        let cat = st.forest.category(node).clone();
        let (start, end) = st.forest.node(node).span;

        // Rules whose first daughter this constituent can be.
        if self.options.rule_index {
            for g in self.index.candidates(&cat) {
                let group = self.index.group(g);
                if !st.unify.match_shared(&group.pattern, group.offset, &cat) {
                    continue;
                }
                for m in &group.members {
                    let inst = st.unify.apply(&m.rest);
                    self.start_edge(st, m.rule, inst, node, start, end);
                }
            }
        } else {
            for group in self.index.groups() {
                for m in &group.members {
                    if !st.unify.match_shared(&group.pattern, group.offset, &cat) {
                        continue;
                    }
                    let inst = st.unify.apply(&m.rest);
                    self.start_edge(st, m.rule, inst, node, start, end);
                }
            }
        }

        // Active edges waiting for this constituent.
        let waiting: Vec<usize> = if self.options.constituent_index {
            st.by_key
                .get(&(start, cat.functor()))
                .cloned()
                .unwrap_or_default()
        } else {
            st.by_end[start].clone()
        };
        for e in waiting {
            let edge = &st.edges[e];
            if self.options.constituent_index && !may_unify(&edge.inst.terms[1], cat.term()) {
                continue;
            }
            let kleene = self.grammar.rule(edge.rule).daughters[edge.dot].kleene;
            let Some(inst) = st.unify.extend(&edge.inst, 1, !kleene, &cat) else {
                continue;
            };
            let edge = &st.edges[e];
            let mut children = edge.children.clone();
            children.push(node);
            let next = Edge {
                rule: edge.rule,
                dot: if kleene { edge.dot } else { edge.dot + 1 },
                repeated: kleene,
                start: edge.start,
                end,
                inst,
                children,
            };
            self.emit(st, next);
        }
    }

    fn start_edge(
        &self,
        st: &mut State,
        rule: RuleIdx,
        inst: Instance,
        node: NodeId,
        start: usize,
        end: usize,
    ) {
        let kleene = self.grammar.rule(rule).daughters[0].kleene;
        let edge = Edge {
            rule,
            dot: if kleene { 0 } else { 1 },
            repeated: kleene,
            start,
            end,
            inst,
            children: vec![node],
        };
        self.emit(st, edge);
    }

    fn emit(&self, st: &mut State, edge: Edge) {
        let rule = self.grammar.rule(edge.rule);
        if edge.dot == rule.len() {
            let mother =
                Category::from_parts(self.grammar.signature().id(), edge.inst.terms[0].clone());
            let out = st
                .forest
                .add_node(
                    &mother,
                    (edge.start, edge.end),
                    DerivationLabel::Rule(edge.rule),
                    &edge.children,
                )
                .expect("edges tile their span");
            if out.is_new() {
                st.agenda.push_back(out.node());
            }
            return;
        }
        if edge.repeated {
            let mut terms = edge.inst.terms.clone();
            terms.remove(1);
            let past = Edge {
                dot: edge.dot + 1,
                repeated: false,
                inst: Instance::new(terms),
                children: edge.children.clone(),
                ..edge
            };
            self.emit(st, past);
        }
        let Term::App(f, _) = &edge.inst.terms[1] else {
            unreachable!("categories are functor applications")
        };
        let id = st.edges.len();
        st.by_key.entry((edge.end, *f)).or_default().push(id);
        st.by_end[edge.end].push(id);
        st.edges.push(edge);
    }
}


#[cfg(test)]
mod catalan {
    use super::*;
    use crate::engine::tokenize;
    use num_bigint::BigUint;

    #[test]
    fn binary_ambiguity_is_catalan() {
        let g = Grammar::parse("cat N/0 ; start N ; rule nn : N -> N N ; word n : N ;").unwrap();
        let p = BulcParser::new(&g, BulcOptions::default());
        for (len, expected, nodes) in [(6usize, 42u32, 21usize), (8, 429, 36), (12, 58786, 78)] {
            let toks = tokenize(&vec!["n"; len].join(" "));
            let out = p.parse(&toks).unwrap();
            assert_eq!(out.forest.count_trees(), BigUint::from(expected));
            assert_eq!(out.forest.node_count(), nodes);
        }
        let toks = tokenize("n n n n n n");
        let out = p.parse(&toks).unwrap();
        assert_eq!(
            out.forest.unpack(p.grammar(), p.kleene(), usize::MAX).len(),
            42
        );
    }
}
