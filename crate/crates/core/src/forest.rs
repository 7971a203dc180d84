//! Shared packed parse forest.
//!
//! Nodes are keyed by span and category. A new analysis whose category is a
//! variant of an existing node's is shared with it; one subsumed by an
//! existing node is packed into that node; one that strictly subsumes
//! existing nodes replaces them as representative and takes over their
//! derivations. Packing under subsumption can admit derivations whose own
//! category was more specific than the node's: those are flagged inexact,
//! and [`PackedForest::unpack`] re-runs the unifications along each
//! extracted tree to filter the combinations they make spurious.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::ControlFlow;
use std::rc::Rc;

use num_bigint::BigUint;
use thiserror::Error;

use crate::grammar::{Grammar, KleeneMap, RuleIdx};
use crate::stats::ParseStats;
use crate::term::{matches, Bindings, Category, FunctorId, Renaming, Signature, Term};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeId(pub u32);

impl NodeId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum DerivationLabel {
    Rule(RuleIdx),
    /// Lexical entry `entry` of the token at the node's start position.
    Lexical {
        entry: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Derivation {
    pub label: DerivationLabel,
    pub children: Vec<NodeId>,
    /// False when the derivation was packed into a strictly more general
    /// node, so trees through it need re-validation.
    pub exact: bool,
}

#[derive(Clone, Debug)]
pub struct ForestNode {
    pub id: NodeId,
    pub category: Category,
    pub span: (usize, usize),
    pub derivations: Vec<Derivation>,
    pub packed_into: Option<NodeId>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AddOutcome {
    Fresh(NodeId),
    /// Merged with an alphabetic variant.
    Shared(NodeId),
    /// Packed into an existing, more general node.
    Packed(NodeId),
    /// A fresh node that became representative of the nodes it subsumes.
    Replaced {
        node: NodeId,
        absorbed: usize,
    },
}

impl AddOutcome {
    pub fn node(self) -> NodeId {
        match self {
            AddOutcome::Fresh(n) | AddOutcome::Shared(n) | AddOutcome::Packed(n) => n,
            AddOutcome::Replaced { node, .. } => node,
        }
    }

    /// Whether the node is new and so must be offered to further rules.
    pub fn is_new(self) -> bool {
        matches!(self, AddOutcome::Fresh(_) | AddOutcome::Replaced { .. })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ForestError {
    #[error("span ({0}, {1}) is invalid for an input of length {2}")]
    BadSpan(usize, usize, usize),
    #[error("unknown child node {0}")]
    UnknownChild(u32),
    #[error("children do not tile span ({0}, {1})")]
    Tiling(usize, usize),
    #[error("lexical derivations must span exactly one token")]
    LexicalSpan,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TreeLabel {
    Rule(String),
    Word { word: String, entry: usize },
}

/// One extracted analysis. Categories are fully instantiated by the tree's
/// unifications and share one variable numbering, assigned in pre-order.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParseTree {
    pub label: TreeLabel,
    pub category: Category,
    pub children: Vec<ParseTree>,
}

impl ParseTree {
    /// Labeled bracketing: `(ruleId category (child) ...)`.
    pub fn to_bracketed(&self, sig: &Signature) -> String {
        let mut s = String::new();
        self.write(sig, &mut s);
        s
    }

    fn write(&self, sig: &Signature, out: &mut String) {
        use std::fmt::Write;
        out.push('(');
        match &self.label {
            TreeLabel::Rule(id) => out.push_str(id),
            TreeLabel::Word { word, entry } => {
                out.push_str(word);
                if *entry > 0 {
                    let _ = write!(out, "#{entry}");
                }
            }
        }
        let _ = write!(out, " {}", self.category.display(sig));
        for c in &self.children {
            out.push(' ');
            c.write(sig, out);
        }
        out.push(')');
    }

    pub fn size(&self) -> usize {
        1 + self.children.iter().map(ParseTree::size).sum::<usize>()
    }
}

#[derive(Debug)]
struct RawTree {
    label: DerivationLabel,
    start: usize,
    children: Vec<Rc<RawTree>>,
}

/// Result of [`PackedForest::unpack_detailed`].
#[derive(Clone, Debug, Default)]
pub struct Unpacking {
    pub trees: Vec<ParseTree>,
    /// Raw trees rejected by re-validation.
    pub filtered: usize,
    /// Valid trees equal to an earlier one.
    pub duplicates: usize,
    /// Whether enumeration stopped at the limit.
    pub truncated: bool,
}

#[derive(Clone, Debug)]
struct CanonDerivation {
    label: DerivationLabel,
    children: Vec<NodeId>,
    exact: bool,
}

#[derive(Clone, Debug)]
pub struct PackedForest {
    nodes: Vec<ForestNode>,
    index: HashMap<(usize, usize, FunctorId), Vec<NodeId>>,
    roots: Vec<NodeId>,
    tokens: Vec<String>,
    pub stats: ParseStats,
}

impl PackedForest {
    pub fn new(tokens: Vec<String>) -> Self {
        PackedForest {
            nodes: Vec::new(),
            index: HashMap::new(),
            roots: Vec::new(),
            tokens,
            stats: ParseStats::default(),
        }
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn node(&self, id: NodeId) -> &ForestNode {
        &self.nodes[id.index()]
    }

    /// Follows `packed_into` links to the current representative.
    pub fn resolve(&self, mut id: NodeId) -> NodeId {
        while let Some(next) = self.nodes[id.index()].packed_into {
            id = next;
        }
        id
    }

    pub fn category(&self, id: NodeId) -> &Category {
        &self.nodes[self.resolve(id).index()].category
    }

    /// All nodes ever allocated, including ones since packed away.
    pub fn all_nodes(&self) -> &[ForestNode] {
        &self.nodes
    }

    /// Current representatives.
    pub fn live_nodes(&self) -> impl Iterator<Item = &ForestNode> {
        self.nodes.iter().filter(|n| n.packed_into.is_none())
    }

    pub fn node_count(&self) -> usize {
        self.live_nodes().count()
    }

    pub fn roots(&self) -> &[NodeId] {
        &self.roots
    }

    /// Representatives on `span` with functor `f`.
    pub fn nodes_at(&self, span: (usize, usize), f: FunctorId) -> &[NodeId] {
        self.index
            .get(&(span.0, span.1, f))
            .map_or(&[], Vec::as_slice)
    }

    pub fn add_node(
        &mut self,
        category: &Category,
        span: (usize, usize),
        label: DerivationLabel,
        children: &[NodeId],
    ) -> Result<AddOutcome, ForestError> {
        let n = self.tokens.len();
        if span.0 >= span.1 || span.1 > n {
            return Err(ForestError::BadSpan(span.0, span.1, n));
        }
        let mut kids = Vec::with_capacity(children.len());
        let mut at = span.0;
        for &c in children {
            if c.index() >= self.nodes.len() {
                return Err(ForestError::UnknownChild(c.0));
            }
            let c = self.resolve(c);
            let cs = self.nodes[c.index()].span;
            if cs.0 != at {
                return Err(ForestError::Tiling(span.0, span.1));
            }
            at = cs.1;
            kids.push(c);
        }
        match label {
            DerivationLabel::Lexical { .. } => {
                if !kids.is_empty() || span.1 != span.0 + 1 {
                    return Err(ForestError::LexicalSpan);
                }
            }
            DerivationLabel::Rule(_) => {
                if kids.is_empty() || at != span.1 {
                    return Err(ForestError::Tiling(span.0, span.1));
                }
            }
        }

        let category = category.normalized();
        let key = (span.0, span.1, category.functor());
        let existing = self.index.get(&key).cloned().unwrap_or_default();
        for &e in &existing {
            let ec = &self.nodes[e.index()].category;
            if *ec == category {
                self.push_derivation(e, label, kids, true);
                return Ok(AddOutcome::Shared(e));
            }
        }
        for &e in &existing {
            if matches(self.nodes[e.index()].category.term(), category.term()) {
                self.push_derivation(e, label, kids, false);
                return Ok(AddOutcome::Packed(e));
            }
        }
        let absorbed: Vec<NodeId> = existing
            .iter()
            .copied()
            .filter(|&e| matches(category.term(), self.nodes[e.index()].category.term()))
            .collect();

        let id = NodeId(self.nodes.len() as u32);
        self.stats.nodes += 1;
        self.nodes.push(ForestNode {
            id,
            category,
            span,
            derivations: vec![Derivation {
                label,
                children: kids,
                exact: true,
            }],
            packed_into: None,
        });
        let list = self.index.entry(key).or_default();
        list.retain(|e| !absorbed.contains(e));
        list.push(id);
        if absorbed.is_empty() {
            return Ok(AddOutcome::Fresh(id));
        }
        for &old in &absorbed {
            let moved = std::mem::take(&mut self.nodes[old.index()].derivations);
            self.nodes[old.index()].packed_into = Some(id);
            for d in moved {
                self.push_derivation(id, d.label, d.children, false);
            }
        }
        self.stats.packings += absorbed.len() as u64;
        Ok(AddOutcome::Replaced {
            node: id,
            absorbed: absorbed.len(),
        })
    }

    fn push_derivation(
        &mut self,
        id: NodeId,
        label: DerivationLabel,
        children: Vec<NodeId>,
        exact: bool,
    ) {
        if !exact {
            self.stats.packings += 1;
        }
        let node = &mut self.nodes[id.index()];
        if let Some(d) = node
            .derivations
            .iter_mut()
            .find(|d| d.label == label && d.children == children)
        {
            d.exact |= exact;
            return;
        }
        node.derivations.push(Derivation {
            label,
            children,
            exact,
        });
    }

    /// Marks as roots the representatives spanning the whole input whose
    /// functor is `start`.
    pub fn set_roots(&mut self, start: FunctorId) {
        let n = self.tokens.len();
        let mut roots: Vec<NodeId> = self.nodes_at((0, n), start).to_vec();
        roots.sort();
        self.roots = roots;
        self.stats.nodes_live = self.node_count() as u64;
    }

    /// Derivations with children resolved to representatives and
    /// de-duplicated, sorted by label then children.
    fn canonical(&self) -> Vec<Vec<CanonDerivation>> {
        self.nodes
            .iter()
            .map(|node| {
                let mut out: Vec<CanonDerivation> = Vec::with_capacity(node.derivations.len());
                for d in &node.derivations {
                    let children: Vec<NodeId> =
                        d.children.iter().map(|&c| self.resolve(c)).collect();
                    if let Some(prev) = out
                        .iter_mut()
                        .find(|p| p.label == d.label && p.children == children)
                    {
                        prev.exact |= d.exact;
                    } else {
                        out.push(CanonDerivation {
                            label: d.label,
                            children,
                            exact: d.exact,
                        });
                    }
                }
                out.sort_by(|a, b| (a.label, &a.children).cmp(&(b.label, &b.children)));
                out
            })
            .collect()
    }

    /// Number of raw derivation trees reachable from the roots, without
    /// re-validation.
    pub fn count_trees(&self) -> BigUint {
        let canon = self.canonical();
        let mut memo: Vec<Option<BigUint>> = vec![None; self.nodes.len()];
        let mut total = BigUint::from(0u32);
        for &r in &self.roots {
            total += count_node(r, &canon, &mut memo);
        }
        total
    }

    /// Whether some tree reachable from the roots uses an inexact
    /// derivation, i.e. whether raw counts may include spurious trees.
    pub fn has_inexact_trees(&self) -> bool {
        let canon = self.canonical();
        let mut seen = vec![false; self.nodes.len()];
        let mut stack: Vec<NodeId> = self.roots.clone();
        while let Some(n) = stack.pop() {
            if std::mem::replace(&mut seen[n.index()], true) {
                continue;
            }
            for d in &canon[n.index()] {
                if !d.exact {
                    return true;
                }
                stack.extend(d.children.iter().copied());
            }
        }
        false
    }

    /// Exact number of valid analyses: the raw count when no inexact
    /// derivation is reachable, otherwise a full validated enumeration.
    pub fn parse_count(&self, grammar: &Grammar, kleene: &KleeneMap) -> BigUint {
        if self.has_inexact_trees() {
            BigUint::from(self.unpack(grammar, kleene, usize::MAX).len())
        } else {
            self.count_trees()
        }
    }

    pub fn unpack(&self, grammar: &Grammar, kleene: &KleeneMap, limit: usize) -> Vec<ParseTree> {
        self.unpack_detailed(grammar, kleene, limit).trees
    }

    /// Enumerates up to `limit` valid trees in deterministic order (roots by
    /// id, derivations by rule then child ids, leftmost choice varying
    /// slowest).
    pub fn unpack_detailed(
        &self,
        grammar: &Grammar,
        kleene: &KleeneMap,
        limit: usize,
    ) -> Unpacking {
        let mut result = Unpacking::default();
        if limit == 0 {
            result.truncated = !self.roots.is_empty();
            return result;
        }
        let canon = self.canonical();
        let mut seen: HashSet<ParseTree> = HashSet::new();
        for &root in &self.roots {
            let flow = self.each_tree(root, &canon, &mut |raw| {
                match validate(grammar, kleene, &self.tokens, &raw) {
                    Some(tree) => {
                        if seen.insert(tree.clone()) {
                            result.trees.push(tree);
                        } else {
                            result.duplicates += 1;
                        }
                    }
                    None => result.filtered += 1,
                }
                if result.trees.len() >= limit {
                    ControlFlow::Break(())
                } else {
                    ControlFlow::Continue(())
                }
            });
            if flow.is_break() {
                result.truncated = true;
                break;
            }
        }
        result
    }

    fn each_tree(
        &self,
        id: NodeId,
        canon: &[Vec<CanonDerivation>],
        f: &mut dyn FnMut(Rc<RawTree>) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        let start = self.nodes[id.index()].span.0;
        for d in &canon[id.index()] {
            let mut partial = Vec::with_capacity(d.children.len());
            self.each_combo(d, start, 0, &mut partial, canon, f)?;
        }
        ControlFlow::Continue(())
    }

    fn each_combo(
        &self,
        d: &CanonDerivation,
        start: usize,
        i: usize,
        partial: &mut Vec<Rc<RawTree>>,
        canon: &[Vec<CanonDerivation>],
        f: &mut dyn FnMut(Rc<RawTree>) -> ControlFlow<()>,
    ) -> ControlFlow<()> {
        if i == d.children.len() {
            return f(Rc::new(RawTree {
                label: d.label,
                start,
                children: partial.clone(),
            }));
        }
        self.each_tree(d.children[i], canon, &mut |t| {
            partial.push(t);
            let r = self.each_combo(d, start, i + 1, partial, canon, f);
            partial.pop();
            r
        })
    }
}

fn count_node(
    id: NodeId,
    canon: &[Vec<CanonDerivation>],
    memo: &mut Vec<Option<BigUint>>,
) -> BigUint {
    if let Some(v) = &memo[id.index()] {
        return v.clone();
    }
    let mut total = BigUint::from(0u32);
    for d in &canon[id.index()] {
        let mut prod = BigUint::from(1u32);
        for &c in &d.children {
            prod *= count_node(c, canon, memo);
        }
        total += prod;
    }
    memo[id.index()] = Some(total.clone());
    total
}

struct VNode {
    label: TreeLabel,
    term: Term,
    children: Vec<VNode>,
}

/// Re-runs the rule unifications along a raw tree. Returns the instantiated,
/// kleene-flattened tree, or `None` if some unification fails.
fn validate(
    grammar: &Grammar,
    kleene: &KleeneMap,
    tokens: &[String],
    raw: &RawTree,
) -> Option<ParseTree> {
    struct St<'g> {
        g: &'g Grammar,
        tokens: &'g [String],
        b: Bindings,
        next: u32,
    }
    fn go(st: &mut St<'_>, raw: &RawTree) -> Option<VNode> {
        match raw.label {
            DerivationLabel::Lexical { entry } => {
                let word = &st.tokens[raw.start];
                let cat = st.g.lookup(word)?.get(entry)?;
                let off = st.next;
                st.next += cat.var_bound();
                Some(VNode {
                    label: TreeLabel::Word {
                        word: word.clone(),
                        entry,
                    },
                    term: cat.term().shifted(off),
                    children: Vec::new(),
                })
            }
            DerivationLabel::Rule(r) => {
                let rule = st.g.rule(r);
                let off = st.next;
                st.next += rule.var_count();
                let m = rule.daughters.len();
                let n = raw.children.len();
                let (k, reps) = match rule.kleene_index() {
                    Some(k) if n >= m => (k, n + 1 - m),
                    Some(_) => return None,
                    None if n == m => (m, 0),
                    None => return None,
                };
                let mut children = Vec::with_capacity(n);
                for (j, child) in raw.children.iter().enumerate() {
                    let di = if j < k {
                        j
                    } else if j < k + reps {
                        k
                    } else {
                        j + 1 - reps
                    };
                    let v = go(st, child)?;
                    let dt = rule.daughters[di].category.term();
                    if !st.b.unify(dt, off, &v.term, 0) {
                        return None;
                    }
                    children.push(v);
                }
                Some(VNode {
                    label: TreeLabel::Rule(rule.label().to_string()),
                    term: rule.mother.term().shifted(off),
                    children,
                })
            }
        }
    }
    let mut st = St {
        g: grammar,
        tokens,
        b: Bindings::new(64, true),
        next: 0,
    };
    let root = go(&mut st, raw)?;
    let Term::App(f, _) = &root.term else {
        return None;
    };
    if *f != grammar.start() {
        return None;
    }

    let sig = grammar.signature().id();
    let mut ren = Renaming::new();
    fn build(
        v: VNode,
        b: &Bindings,
        kleene: &KleeneMap,
        ren: &mut Renaming,
        sig: crate::term::SigId,
    ) -> ParseTree {
        let mut term = b.resolve(&v.term, 0);
        term.rename(ren);
        let mut children = Vec::new();
        for c in v.children {
            let is_aux = matches!(&c.term, Term::App(f, _) if kleene.is_aux(*f));
            let built = build(c, b, kleene, ren, sig);
            if is_aux {
                children.extend(built.children);
            } else {
                children.push(built);
            }
        }
        ParseTree {
            label: v.label,
            category: Category::from_parts(sig, term),
            children,
        }
    }
    Some(build(root, &st.b, kleene, &mut ren, sig))
}

impl fmt::Display for NodeId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "n{}", self.0)
    }
}
