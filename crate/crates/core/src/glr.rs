//! Generalized LR parser over a graph-structured stack, performing the
//! rule unifications on every reduction.
//!
//! At each position all reductions run to a fixpoint before any shift.
//! A reduction walks every path of the production's length down the stack,
//! unifying daughters right to left as it goes; partial instances for a
//! rule and a suffix of forest nodes are cached, since distinct stack paths
//! often share suffixes.

use std::collections::{HashMap, VecDeque};
use std::rc::Rc;
use std::sync::Arc;

use crate::backbone::{
    build_lalr1, Action, BackboneError, BackboneGrammar, BackboneSpec, Flavor, Lookahead,
    ParseTable, ProdId, StateId,
};
use crate::engine::{check_tokens, ParseError, ParseOutcome};
use crate::forest::{DerivationLabel, NodeId, PackedForest};
use crate::grammar::{Grammar, KleeneMap, RuleIdx};
use crate::instance::{Instance, Unify};
use crate::tabular::{lookaheads, Compiled};
use crate::term::Category;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GlrOptions {
    pub cache: bool,
    pub occurs_check: bool,
}

impl Default for GlrOptions {
    fn default() -> Self {
        GlrOptions {
            cache: true,
            occurs_check: true,
        }
    }
}

#[derive(Clone, Debug)]
struct Vertex {
    state: StateId,
    pos: usize,
    /// (target vertex, forest node), targets at earlier positions.
    edges: Vec<(usize, NodeId)>,
}

/// Shape of the stack after a parse, for checking its invariants.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GssSummary {
    /// (state, position) of every vertex, in creation order.
    pub vertices: Vec<(StateId, usize)>,
    pub edges: usize,
}

#[derive(Clone, Debug)]
pub struct GlrParser {
    compiled: Compiled,
    table: Arc<ParseTable>,
    options: GlrOptions,
}
/// (rule, id of the consumed suffix, next node).
type CacheKey = (RuleIdx, u32, NodeId);

/// Suffix id of the empty suffix.
const NO_SUFFIX: u32 = u32::MAX;

struct Run<'a> {
    forest: PackedForest,
    unify: Unify,
    vertices: Vec<Vertex>,
    at: HashMap<(StateId, usize), usize>,
    tasks: VecDeque<(usize, ProdId, usize)>,
    /// (rule, id of the consumed suffix, next node) -> (id of the extended
    /// suffix, unification result).
    cache: HashMap<CacheKey, (u32, Option<Rc<Instance>>)>,
    la: Vec<Lookahead>,
    pos: usize,
    table: &'a ParseTable,
}

impl GlrParser {
    pub fn new(
        g: &Grammar,
        spec: &BackboneSpec,
        options: GlrOptions,
    ) -> Result<GlrParser, BackboneError> {
        let compiled = Compiled::new(g, spec)?;
        let table = Arc::new(build_lalr1(&compiled.backbone));
        Ok(GlrParser {
            compiled,
            table,
            options,
        })
    }

    /// Uses a prebuilt table; parsing fails with
    /// [`ParseError::TableMismatch`] unless it was built from this grammar
    /// and backbone.
    pub fn with_table(
        g: &Grammar,
        spec: &BackboneSpec,
        table: Arc<ParseTable>,
        options: GlrOptions,
    ) -> Result<GlrParser, BackboneError> {
        Ok(GlrParser {
            compiled: Compiled::new(g, spec)?,
            table,
            options,
        })
    }

    pub fn grammar(&self) -> &Grammar {
        &self.compiled.grammar
    }

    pub fn kleene(&self) -> &KleeneMap {
        &self.compiled.kleene
    }

    pub fn backbone(&self) -> &BackboneGrammar {
        &self.compiled.backbone
    }

    pub fn table(&self) -> &ParseTable {
        &self.table
    }

    pub fn parse(&self, tokens: &[String]) -> Result<ParseOutcome, ParseError> {
        self.parse_traced(tokens).map(|(out, _)| out)
    }

    pub fn parse_traced(
        &self,
        tokens: &[String],
    ) -> Result<(ParseOutcome, GssSummary), ParseError> {
        self.compiled.check_table(&self.table, Flavor::Lalr1)?;
        check_tokens(&self.compiled.grammar, tokens)?;
        let n = tokens.len();
        let mut forest = PackedForest::new(tokens.to_vec());
        let lex = self.compiled.seed_lexical(&mut forest, tokens);
        let mut run = Run {
            forest,
            unify: Unify::new(self.options.occurs_check, false),
            vertices: vec![Vertex {
                state: 0,
                pos: 0,
                edges: Vec::new(),
            }],
            at: HashMap::from([((0, 0), 0)]),
            tasks: VecDeque::new(),
            cache: HashMap::new(),
            la: Vec::new(),
            pos: 0,
            table: &self.table,
        };
        let mut frontier = vec![0usize];
        for i in 0..=n {
            run.pos = i;
            run.la = lookaheads(&lex, i);
            for &v in &frontier {
                for e in 0..run.vertices[v].edges.len() {
                    self.queue_reductions(&mut run, v, e);
                }
            }
            while let Some((v, p, e)) = run.tasks.pop_front() {
                self.reduce(&mut run, v, p, e);
            }
            if i == n {
                break;
            }
            let mut next = Vec::new();
            let current: Vec<usize> = run
                .vertices
                .iter()
                .enumerate()
                .filter(|(_, v)| v.pos == i)
                .map(|(k, _)| k)
                .collect();
            for v in current {
                for (node, syms) in &lex[i] {
                    for &t in syms {
                        for a in self.table.actions(run.vertices[v].state, Lookahead::Sym(t)) {
                            if let Action::Shift(s) = *a {
                                let (u, fresh) = run.vertex(s, i + 1);
                                if fresh {
                                    next.push(u);
                                }
                                run.add_edge(u, v, *node);
                            }
                        }
                    }
                }
            }
            frontier = next;
        }
        let start = self.compiled.grammar.start();
        run.forest.set_roots(start);
        let mut stats = run.unify.stats;
        stats += run.forest.stats;
        stats.vertices = run.vertices.len() as u64;
        stats.edges = run.vertices.iter().map(|v| v.edges.len() as u64).sum();
        run.forest.stats = stats;
        let summary = GssSummary {
            vertices: run.vertices.iter().map(|v| (v.state, v.pos)).collect(),
            edges: stats.edges as usize,
        };
        Ok((
            ParseOutcome {
                forest: run.forest,
                stats,
                fill_ratio: None,
            },
            summary,
        ))
    }

    /// Queues every reduction licensed at vertex `v` by the current
    /// lookahead, restricted to paths through its edge `e`.
    fn queue_reductions(&self, run: &mut Run<'_>, v: usize, e: usize) {
        let state = run.vertices[v].state;
        let mut prods: Vec<ProdId> = run
            .la
            .iter()
            .flat_map(|&la| self.table.actions(state, la))
            .filter_map(|a| match a {
                Action::Reduce(p) => Some(*p),
                _ => None,
            })
            .collect();
        prods.sort_unstable();
        prods.dedup();
        for p in prods {
            run.tasks.push_back((v, p, e));
        }
    }

    fn reduce(&self, run: &mut Run<'_>, v: usize, p: ProdId, e: usize) {
        let prod = self.compiled.backbone.production(p);
        let template = &self.compiled.templates[prod.rule];
        let (target, node) = run.vertices[v].edges[e];
        let mut suffix = vec![node];
        if let (key, Some(inst)) = self.step(run, prod.rule, NO_SUFFIX, template, node) {
            self.descend(run, p, target, &mut suffix, key, &inst);
        }
    }

    fn descend(
        &self,
        run: &mut Run<'_>,
        p: ProdId,
        v: usize,
        suffix: &mut Vec<NodeId>,
        key: u32,
        inst: &Instance,
    ) {
        let prod = self.compiled.backbone.production(p);
        if suffix.len() == prod.rhs.len() {
            self.complete(run, p, v, suffix, inst);
            return;
        }
        let edges = run.vertices[v].edges.clone();
        for (target, node) in edges {
            suffix.push(node);
            if let (next_key, Some(next)) = self.step(run, prod.rule, key, inst, node) {
                self.descend(run, p, target, suffix, next_key, &next);
            }
            suffix.pop();
        }
    }

    /// Unifies the rightmost remaining daughter of `inst` with `node`.
    ///
    /// `parent` identifies the suffix of nodes consumed so far (rightmost
    /// first); the returned id identifies that suffix extended by `node`.
    /// Ids are only meaningful when the cache is on.
    fn step(
        &self,
        run: &mut Run<'_>,
        rule: RuleIdx,
        parent: u32,
        inst: &Instance,
        node: NodeId,
    ) -> (u32, Option<Rc<Instance>>) {
        let cat = run.forest.node(node).category.clone();
        if !self.options.cache {
            return (
                NO_SUFFIX,
                run.unify
                    .extend(inst, inst.terms.len() - 1, true, &cat)
                    .map(Rc::new),
            );
        }
        if let Some((id, hit)) = run.cache.get(&(rule, parent, node)) {
            run.unify.stats.cache_hits += 1;
            return (*id, hit.clone());
        }
        run.unify.stats.cache_misses += 1;
        let out = run
            .unify
            .extend(inst, inst.terms.len() - 1, true, &cat)
            .map(Rc::new);
        let id = run.cache.len() as u32;
        run.cache.insert((rule, parent, node), (id, out.clone()));
        (id, out)
    }

    fn complete(
        &self,
        run: &mut Run<'_>,
        p: ProdId,
        bottom: usize,
        suffix: &[NodeId],
        inst: &Instance,
    ) {
        let prod = self.compiled.backbone.production(p);
        let mother = Category::from_parts(
            self.compiled.grammar.signature().id(),
            inst.terms[0].clone(),
        );
        if !self.compiled.backbone.compatible(&mother, prod.lhs) {
            return;
        }
        let Some(state) = self.table.goto(run.vertices[bottom].state, prod.lhs) else {
            return;
        };
        let children: Vec<NodeId> = suffix.iter().rev().copied().collect();
        let span = (run.vertices[bottom].pos, run.pos);
        let node = run
            .forest
            .add_node(&mother, span, DerivationLabel::Rule(prod.rule), &children)
            .expect("stack paths tile their span")
            .node();
        let (u, _) = run.vertex(state, run.pos);
        if let Some(e) = run.add_edge(u, bottom, node) {
            self.queue_reductions(run, u, e);
        }
    }
}

impl Run<'_> {
    fn vertex(&mut self, state: StateId, pos: usize) -> (usize, bool) {
        if let Some(&v) = self.at.get(&(state, pos)) {
            return (v, false);
        }
        let v = self.vertices.len();
        self.vertices.push(Vertex {
            state,
            pos,
            edges: Vec::new(),
        });
        self.at.insert((state, pos), v);
        (v, true)
    }

    /// Adds an edge unless present; returns its index when new.
    fn add_edge(&mut self, from: usize, to: usize, node: NodeId) -> Option<usize> {
        debug_assert!(self.table.state_count() > self.vertices[from].state);
        let edges = &mut self.vertices[from].edges;
        if edges.contains(&(to, node)) {
            return None;
        }
        edges.push((to, node));
        Some(edges.len() - 1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::tokenize;
    use num_bigint::BigUint;
    use std::collections::HashSet;

    const AGR: &str = "
        atoms sg pl ;
        cat S/0 NP/1 VP/1 ;
        start S ;
        rule s : S -> NP(X) VP(X) ;
        word dogs : NP(pl) ; word dog : NP(sg) ;
        word bark : VP(pl) ; word barks : VP(sg) ;
    ";

    fn glr(text: &str, spec: &str, cache: bool) -> GlrParser {
        let g = Grammar::parse(text).unwrap();
        GlrParser::new(
            &g,
            &BackboneSpec::parse(spec).unwrap(),
            GlrOptions {
                cache,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn agreement_by_residue_and_by_backbone() {
        for spec in ["", "NP:0,VP:0"] {
            let p = glr(AGR, spec, true);
            let ok = p.parse(&tokenize("dogs bark")).unwrap();
            let trees = ok.forest.unpack(p.grammar(), p.kleene(), 10);
            assert_eq!(trees.len(), 1);
            assert_eq!(
                trees[0].to_bracketed(p.grammar().signature()),
                "(s S (dogs NP(pl)) (bark VP(pl)))"
            );
            let bad = p.parse(&tokenize("dogs barks")).unwrap();
            assert!(!bad.accepted());
            if spec.is_empty() {
                assert!(bad.stats.unify_attempts > bad.stats.unify_successes);
            } else {
                assert_eq!(bad.stats.unify_attempts, 0);
            }
        }
    }

    #[test]
    fn catalan_with_cache_saving() {
        let text = "cat N/0 ; start N ; rule nn : N -> N N ; word n : N ;";
        let on = glr(text, "", true);
        let off = glr(text, "", false);
        let toks = tokenize("n n n n n n n n");
        let (a, gss) = on.parse_traced(&toks).unwrap();
        let b = off.parse(&toks).unwrap();
        assert_eq!(a.forest.count_trees(), BigUint::from(429u32));
        assert_eq!(b.forest.count_trees(), BigUint::from(429u32));
        assert!(a.stats.unify_attempts < b.stats.unify_attempts);
        let distinct: HashSet<_> = gss.vertices.iter().collect();
        assert_eq!(distinct.len(), gss.vertices.len());
    }

    #[test]
    fn mismatched_table_is_rejected() {
        let other = glr(
            "cat N/0 ; start N ; rule nn : N -> N N ; word n : N ;",
            "",
            true,
        );
        let g = Grammar::parse(AGR).unwrap();
        let p = GlrParser::with_table(
            &g,
            &BackboneSpec::new(),
            Arc::new(other.table().clone()),
            GlrOptions::default(),
        )
        .unwrap();
        assert!(matches!(
            p.parse(&tokenize("dogs bark")),
            Err(ParseError::TableMismatch { .. })
        ));
    }
}
