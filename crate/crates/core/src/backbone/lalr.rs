//! LR(0) automaton and LALR(1) lookaheads by spontaneous generation and
//! propagation.

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use super::{BackboneGrammar, Lookahead, ProdId, StateId, SymId};

/// Dotted production; productions at or past `base` are the augmented
/// start productions `S' -> s`, one per start symbol.
pub(crate) type Item = (ProdId, usize);

pub(crate) struct Cfg<'a> {
    bg: &'a BackboneGrammar,
    aug: Vec<SymId>,
}

impl<'a> Cfg<'a> {
    pub fn new(bg: &'a BackboneGrammar) -> Self {
        Cfg {
            bg,
            aug: bg.start_symbols().to_vec(),
        }
    }

    pub fn base(&self) -> usize {
        self.bg.productions().len()
    }

    pub fn rhs(&self, p: ProdId) -> &[SymId] {
        if p < self.base() {
            &self.bg.production(p).rhs
        } else {
            std::slice::from_ref(&self.aug[p - self.base()])
        }
    }

    pub fn aug_items(&self) -> Vec<Item> {
        (0..self.aug.len()).map(|i| (self.base() + i, 0)).collect()
    }

    fn next(&self, (p, d): Item) -> Option<SymId> {
        self.rhs(p).get(d).copied()
    }

    pub fn closure(&self, kernel: &[Item]) -> Vec<Item> {
        let mut set: BTreeSet<Item> = kernel.iter().copied().collect();
        let mut work: Vec<Item> = kernel.to_vec();
        let mut expanded = BTreeSet::new();
        while let Some(it) = work.pop() {
            if let Some(x) = self.next(it) {
                if expanded.insert(x) {
                    for &q in self.bg.productions_of(x) {
                        if set.insert((q, 0)) {
                            work.push((q, 0));
                        }
                    }
                }
            }
        }
        set.into_iter().collect()
    }

    /// Terminals that can begin each symbol.
    pub fn first_sets(&self) -> Vec<BTreeSet<SymId>> {
        let n = self.bg.symbol_count();
        let mut first: Vec<BTreeSet<SymId>> = (0..n)
            .map(|s| {
                if self.bg.is_terminal(s) {
                    BTreeSet::from([s])
                } else {
                    BTreeSet::new()
                }
            })
            .collect();
        loop {
            let mut changed = false;
            for p in self.bg.productions() {
                let add: Vec<SymId> = first[p.rhs[0]].iter().copied().collect();
                for t in add {
                    changed |= first[p.lhs].insert(t);
                }
            }
            if !changed {
                return first;
            }
        }
    }
}

pub(crate) struct Lr0 {
    pub kernels: Vec<Vec<Item>>,
    pub trans: Vec<BTreeMap<SymId, StateId>>,
}

/// States are numbered breadth-first from the start state, visiting
/// successor symbols in increasing order, so numbering is deterministic.
pub(crate) fn lr0(cfg: &Cfg<'_>) -> Lr0 {
    let start = cfg.aug_items();
    let mut kernels = vec![start.clone()];
    let mut index: HashMap<Vec<Item>, StateId> = HashMap::from([(start, 0)]);
    let mut trans = vec![BTreeMap::new()];
    let mut queue = VecDeque::from([0]);
    while let Some(s) = queue.pop_front() {
        let mut succ: BTreeMap<SymId, Vec<Item>> = BTreeMap::new();
        for it in cfg.closure(&kernels[s]) {
            if let Some(x) = cfg.next(it) {
                succ.entry(x).or_default().push((it.0, it.1 + 1));
            }
        }
        for (x, mut k) in succ {
            k.sort_unstable();
            let t = match index.get(&k) {
                Some(&t) => t,
                None => {
                    let t = kernels.len();
                    index.insert(k.clone(), t);
                    kernels.push(k);
                    trans.push(BTreeMap::new());
                    queue.push_back(t);
                    t
                }
            };
            trans[s].insert(x, t);
        }
    }
    Lr0 { kernels, trans }
}

/// Lookahead sets for every kernel item of every state.
pub(crate) fn lalr_lookaheads(cfg: &Cfg<'_>, lr0: &Lr0) -> Vec<Vec<BTreeSet<Lookahead>>> {
    let first = cfg.first_sets();
    let mut la: Vec<Vec<BTreeSet<Lookahead>>> = lr0
        .kernels
        .iter()
        .map(|k| vec![BTreeSet::new(); k.len()])
        .collect();
    let pos = |s: StateId, it: Item| lr0.kernels[s].binary_search(&it).expect("kernel item");
    for i in 0..la[0].len() {
        la[0][i].insert(Lookahead::Eof);
    }

    // Closure lookaheads depend only on the nonterminal after the dot, so
    // they are summarized once per nonterminal: what each reachable
    // nonterminal's items receive spontaneously, and whether the kernel
    // item's own lookahead propagates to them.
    let mut summaries: HashMap<SymId, BTreeMap<SymId, Reach>> = HashMap::new();
    let mut propagate: Vec<Vec<Vec<(StateId, usize)>>> = lr0
        .kernels
        .iter()
        .map(|k| vec![Vec::new(); k.len()])
        .collect();
    for (s, kernel) in lr0.kernels.iter().enumerate() {
        for (ki, &(p, d)) in kernel.iter().enumerate() {
            let rhs = cfg.rhs(p);
            let Some(&x) = rhs.get(d) else { continue };
            let t = lr0.trans[s][&x];
            propagate[s][ki].push((t, pos(t, (p, d + 1))));
            if !cfg.bg.is_nonterminal(x) {
                continue;
            }
            // Lookaheads the kernel item hands to the items of `x`.
            let seed: Option<&BTreeSet<SymId>> = rhs.get(d + 1).map(|&y| &first[y]);
            let summary = summaries.entry(x).or_insert_with(|| reach(cfg, &first, x));
            for (&z, r) in summary.iter() {
                let mut own: BTreeSet<SymId> = r.spontaneous.clone();
                let mut passes = false;
                if r.passes {
                    match seed {
                        Some(terms) => own.extend(terms.iter().copied()),
                        None => passes = true,
                    }
                }
                for &q in cfg.bg.productions_of(z) {
                    let y = cfg.rhs(q)[0];
                    let t = lr0.trans[s][&y];
                    let ti = pos(t, (q, 1));
                    la[t][ti].extend(own.iter().map(|&a| Lookahead::Sym(a)));
                    if passes {
                        propagate[s][ki].push((t, ti));
                    }
                }
            }
        }
    }
    for edges in propagate.iter_mut().flatten() {
        edges.sort_unstable();
        edges.dedup();
    }
    loop {
        let mut changed = false;
        for s in 0..lr0.kernels.len() {
            for ki in 0..lr0.kernels[s].len() {
                if propagate[s][ki].is_empty() {
                    continue;
                }
                let src = la[s][ki].clone();
                for &(t, ti) in &propagate[s][ki] {
                    for &a in &src {
                        changed |= la[t][ti].insert(a);
                    }
                }
            }
        }
        if !changed {
            return la;
        }
    }
}

/// Lookahead summary of one nonterminal in the closure of another.
#[derive(Clone, Debug, Default)]
struct Reach {
    /// Terminals its items receive from inside the closure.
    spontaneous: BTreeSet<SymId>,
    /// Whether the lookahead of the closure's origin reaches its items.
    passes: bool,
}

/// Every nonterminal whose items appear in the closure started by `x`,
/// with its lookahead summary.
fn reach(cfg: &Cfg<'_>, first: &[BTreeSet<SymId>], x: SymId) -> BTreeMap<SymId, Reach> {
    let mut out: BTreeMap<SymId, Reach> = BTreeMap::from([(
        x,
        Reach {
            spontaneous: BTreeSet::new(),
            passes: true,
        },
    )]);
    let mut work = vec![x];
    while let Some(y) = work.pop() {
        let from = out[&y].clone();
        for &q in cfg.bg.productions_of(y) {
            let rhs = cfg.rhs(q);
            let z = rhs[0];
            if !cfg.bg.is_nonterminal(z) {
                continue;
            }
            let fresh = !out.contains_key(&z);
            let entry = out.entry(z).or_default();
            let before = (entry.spontaneous.len(), entry.passes);
            match rhs.get(1) {
                Some(&w) => entry.spontaneous.extend(first[w].iter().copied()),
                None => {
                    entry.spontaneous.extend(from.spontaneous.iter().copied());
                    entry.passes |= from.passes;
                }
            }
            if fresh || (entry.spontaneous.len(), entry.passes) != before {
                work.push(z);
            }
        }
    }
    out
}
