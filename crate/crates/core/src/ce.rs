//! Compiled-Earley parser: an Earley-style chart whose items are states of
//! a table with one state per dotted production. Prediction is read off
//! the table under one word of lookahead, completion is gated by the
//! table's reduce lookaheads, and every item extension performs the rule
//! unification on-line.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::Arc;

use crate::backbone::{
    build_ce_table, Action, BackboneError, BackboneGrammar, BackboneSpec, Flavor, Lookahead,
    ParseTable, StateId, SymId,
};
use crate::engine::{check_tokens, ParseError, ParseOutcome};
use crate::forest::{AddOutcome, DerivationLabel, NodeId, PackedForest};
use crate::grammar::{Grammar, KleeneMap, RuleIdx};
use crate::instance::{Instance, Unify};
use crate::tabular::{lookaheads, Compiled};
use crate::term::Category;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CeOptions {
    pub cache: bool,
    /// Use the hash-addressed (state, start, end) index; when off, every
    /// lookup scans the whole chart.
    pub sparse_index: bool,
    pub occurs_check: bool,
}

impl Default for CeOptions {
    fn default() -> Self {
        CeOptions {
            cache: true,
            sparse_index: true,
            occurs_check: true,
        }
    }
}

#[derive(Clone, Debug)]
struct Item {
    state: StateId,
    start: usize,
    end: usize,
    /// Mother followed by the daughters still to find.
    inst: Instance,
    children: Vec<NodeId>,
}

#[derive(Clone, Debug)]
pub struct CeParser {
    compiled: Compiled,
    table: Arc<ParseTable>,
    options: CeOptions,
}

struct Chart {
    items: Vec<Item>,
    index: HashMap<(StateId, usize, usize), Vec<usize>>,
    /// Incomplete items by end position and expected symbol.
    waiting: HashMap<(usize, SymId), Vec<usize>>,
}

impl Chart {
    fn push(&mut self, item: Item, next: Option<SymId>) -> usize {
        let id = self.items.len();
        self.index
            .entry((item.state, item.start, item.end))
            .or_default()
            .push(id);
        if let Some(x) = next {
            self.waiting.entry((item.end, x)).or_default().push(id);
        }
        self.items.push(item);
        id
    }
}

struct Run {
    forest: PackedForest,
    unify: Unify,
    chart: Chart,
    cache: HashMap<(RuleIdx, Vec<NodeId>, NodeId), Option<Instance>>,
    /// Symbols each representative has been offered under.
    offered: HashMap<NodeId, Vec<SymId>>,
    completed: VecDeque<usize>,
    nodes: VecDeque<(NodeId, SymId)>,
}

impl CeParser {
    pub fn new(
        g: &Grammar,
        spec: &BackboneSpec,
        options: CeOptions,
    ) -> Result<CeParser, BackboneError> {
        let compiled = Compiled::new(g, spec)?;
        let table = Arc::new(build_ce_table(&compiled.backbone));
        Ok(CeParser {
            compiled,
            table,
            options,
        })
    }

    pub fn with_table(
        g: &Grammar,
        spec: &BackboneSpec,
        table: Arc<ParseTable>,
        options: CeOptions,
    ) -> Result<CeParser, BackboneError> {
        Ok(CeParser {
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

    /// Next symbol expected by an item in `state`, if incomplete.
    fn expected(&self, state: StateId) -> Option<SymId> {
        let (p, d) = self.table.ce_item(state)?;
        self.compiled.backbone.production(p).rhs.get(d).copied()
    }

    pub fn parse(&self, tokens: &[String]) -> Result<ParseOutcome, ParseError> {
        self.compiled.check_table(&self.table, Flavor::CeLalr1)?;
        check_tokens(&self.compiled.grammar, tokens)?;
        let n = tokens.len();
        let mut forest = PackedForest::new(tokens.to_vec());
        let lex = self.compiled.seed_lexical(&mut forest, tokens);
        let mut run = Run {
            forest,
            unify: Unify::new(self.options.occurs_check, false),
            chart: Chart {
                items: Vec::new(),
                index: HashMap::new(),
                waiting: HashMap::new(),
            },
            cache: HashMap::new(),
            offered: HashMap::new(),
            completed: VecDeque::new(),
            nodes: VecDeque::new(),
        };
        // The start item carries no instance; it only seeds predictions.
        run.chart.push(
            Item {
                state: 0,
                start: 0,
                end: 0,
                inst: Instance::new(Vec::new()),
                children: Vec::new(),
            },
            None,
        );
        let mut fresh_at: Vec<usize> = vec![0];
        for i in 0..=n {
            let la = lookaheads(&lex, i);
            // Complete to a fixpoint.
            loop {
                if let Some(it) = run.completed.pop_front() {
                    self.complete(&mut run, it, &la);
                } else if let Some((node, sym)) = run.nodes.pop_front() {
                    self.offer(&mut run, node, sym, &mut fresh_at);
                } else {
                    break;
                }
            }
            if i == n {
                break;
            }
            // Predict from every incomplete item ending here.
            let mut predicted = HashSet::new();
            for &it in &fresh_at {
                let state = run.chart.items[it].state;
                for &l in &la {
                    for a in self.table.actions(state, l) {
                        if let Action::Predict(q) = *a {
                            predicted.insert(q);
                        }
                    }
                }
            }
            let mut predicted: Vec<StateId> = predicted.into_iter().collect();
            predicted.sort_unstable();
            for q in predicted {
                if self.lookup(&run.chart, q, i, i).is_empty() {
                    let (p, _) = self
                        .table
                        .ce_item(q)
                        .expect("predictions name dotted states");
                    let rule = self.compiled.backbone.production(p).rule;
                    let item = Item {
                        state: q,
                        start: i,
                        end: i,
                        inst: self.compiled.templates[rule].clone(),
                        children: Vec::new(),
                    };
                    run.chart.push(item, self.expected(q));
                }
            }
            fresh_at.clear();
            // Scan the next word.
            for (node, syms) in &lex[i] {
                for &t in syms {
                    self.offer(&mut run, *node, t, &mut fresh_at);
                }
            }
        }
        run.forest.set_roots(self.compiled.grammar.start());
        let cells = run.chart.index.len() as f64;
        let total = self.table.state_count() as f64 * ((n + 1) * (n + 2) / 2) as f64;
        let mut stats = run.unify.stats;
        stats += run.forest.stats;
        stats.items = run.chart.items.len() as u64;
        run.forest.stats = stats;
        Ok(ParseOutcome {
            forest: run.forest,
            stats,
            fill_ratio: Some(cells / total),
        })
    }

    fn lookup(&self, chart: &Chart, state: StateId, start: usize, end: usize) -> Vec<usize> {
        if self.options.sparse_index {
            chart
                .index
                .get(&(state, start, end))
                .cloned()
                .unwrap_or_default()
        } else {
            (0..chart.items.len())
                .filter(|&k| {
                    let it = &chart.items[k];
                    (it.state, it.start, it.end) == (state, start, end)
                })
                .collect()
        }
    }

    fn waiting(&self, chart: &Chart, end: usize, sym: SymId) -> Vec<usize> {
        if self.options.sparse_index {
            chart.waiting.get(&(end, sym)).cloned().unwrap_or_default()
        } else {
            (0..chart.items.len())
                .filter(|&k| {
                    let it = &chart.items[k];
                    it.state >= 2 && it.end == end && self.expected(it.state) == Some(sym)
                })
                .collect()
        }
    }

    /// Advances the items waiting at the node's start for `sym` over it.
    fn offer(&self, run: &mut Run, node: NodeId, sym: SymId, fresh_at: &mut Vec<usize>) {
        let node = run.forest.resolve(node);
        let offered = run.offered.entry(node).or_default();
        if offered.contains(&sym) {
            return;
        }
        offered.push(sym);
        let (start, end) = run.forest.node(node).span;
        let cat = run.forest.node(node).category.clone();
        for w in self.waiting(&run.chart, start, sym) {
            let state = run.chart.items[w].state;
            let Some(next_state) = self.table.goto(state, sym) else {
                continue;
            };
            let (p, _) = self.table.ce_item(state).expect("waiting items are dotted");
            let rule = self.compiled.backbone.production(p).rule;
            let inst = if self.options.cache {
                let key = (rule, run.chart.items[w].children.clone(), node);
                match run.cache.get(&key) {
                    Some(hit) => {
                        run.unify.stats.cache_hits += 1;
                        hit.clone()
                    }
                    None => {
                        run.unify.stats.cache_misses += 1;
                        let out = run.unify.extend(&run.chart.items[w].inst, 1, true, &cat);
                        run.cache.insert(key, out.clone());
                        out
                    }
                }
            } else {
                run.unify.extend(&run.chart.items[w].inst, 1, true, &cat)
            };
            let Some(inst) = inst else { continue };
            let from = &run.chart.items[w];
            let mut children = from.children.clone();
            children.push(node);
            let item = Item {
                state: next_state,
                start: from.start,
                end,
                inst,
                children,
            };
            let expected = self.expected(next_state);
            let id = run.chart.push(item, expected);
            if expected.is_some() {
                fresh_at.push(id);
            } else {
                run.completed.push_back(id);
            }
        }
    }

    fn complete(&self, run: &mut Run, it: usize, la: &[Lookahead]) {
        let state = run.chart.items[it].state;
        let (p, _) = self
            .table
            .ce_item(state)
            .expect("completed items are dotted");
        let licensed = la
            .iter()
            .any(|&l| self.table.actions(state, l).contains(&Action::Reduce(p)));
        if !licensed {
            return;
        }
        let prod = self.compiled.backbone.production(p);
        let item = &run.chart.items[it];
        let mother = Category::from_parts(
            self.compiled.grammar.signature().id(),
            item.inst.terms[0].clone(),
        );
        if !self.compiled.backbone.compatible(&mother, prod.lhs) {
            return;
        }
        let span = (item.start, item.end);
        let children = item.children.clone();
        let out = run
            .forest
            .add_node(&mother, span, DerivationLabel::Rule(prod.rule), &children)
            .expect("items tile their span");
        if let AddOutcome::Replaced { node, .. } = out {
            let absorbed: Vec<NodeId> = run
                .forest
                .all_nodes()
                .iter()
                .filter(|n| n.packed_into == Some(node))
                .map(|n| n.id)
                .collect();
            for old in absorbed {
                for sym in run.offered.get(&old).cloned().unwrap_or_default() {
                    run.nodes.push_back((node, sym));
                }
            }
        }
        run.nodes.push_back((out.node(), prod.lhs));
    }
}
