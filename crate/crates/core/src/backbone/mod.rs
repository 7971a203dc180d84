//! Context-free backbone of a unification grammar and the parse tables
//! built from it.
//!
//! A backbone symbol is a functor together with the atom values at its
//! declared backbone argument positions. Variables at those positions are
//! expanded over the atoms that can reach the position (found by linking
//! positions that share a variable anywhere in the grammar), so a rule
//! projects to one production per combination of backbone values. With no
//! declared positions, symbols are bare functors and each rule gives exactly
//! one production. The remaining features are checked by unification while
//! parsing.

mod lalr;
mod table;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::grammar::{Fnv, Grammar, RuleIdx};
use crate::term::{AtomId, Category, FunctorId, Signature, Term};

pub use table::{build_ce_table, build_lalr1, Action, Flavor, Lookahead, ParseTable, TableError};

pub type SymId = usize;
pub type ProdId = usize;
pub type StateId = usize;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BackboneError {
    #[error("backbone spec: {0}")]
    Syntax(String),
    #[error("backbone spec names unknown functor `{0}`")]
    UnknownFunctor(String),
    #[error("backbone position {position} is out of range for {functor}/{arity}")]
    PositionOutOfRange {
        functor: String,
        position: usize,
        arity: usize,
    },
    #[error("backbone position {position} of {functor} can hold a complex term")]
    NonAtomic { functor: String, position: usize },
    #[error("rule `{0}` still has a kleene daughter; expand kleene rules first")]
    Kleene(String),
}

/// Declared backbone argument positions per functor name, written
/// `NP:0:1,VP:0`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BackboneSpec {
    positions: BTreeMap<String, BTreeSet<usize>>,
}

impl BackboneSpec {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, functor: &str, positions: &[usize]) -> Self {
        self.positions
            .entry(functor.to_string())
            .or_default()
            .extend(positions.iter().copied());
        self
    }

    pub fn parse(text: &str) -> Result<Self, BackboneError> {
        let mut spec = BackboneSpec::new();
        for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            let mut fields = part.split(':');
            let name = fields.next().unwrap_or_default().trim();
            if name.is_empty() {
                return Err(BackboneError::Syntax(format!(
                    "missing functor in `{part}`"
                )));
            }
            let entry = spec.positions.entry(name.to_string()).or_default();
            for f in fields {
                let p = f.trim().parse::<usize>().map_err(|_| {
                    BackboneError::Syntax(format!("bad position `{f}` in `{part}`"))
                })?;
                entry.insert(p);
            }
        }
        Ok(spec)
    }

    pub fn is_empty(&self) -> bool {
        self.positions.values().all(BTreeSet::is_empty)
    }
}

impl fmt::Display for BackboneSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (name, ps) in &self.positions {
            if ps.is_empty() {
                continue;
            }
            if !first {
                f.write_str(",")?;
            }
            first = false;
            f.write_str(name)?;
            for p in ps {
                write!(f, ":{p}")?;
            }
        }
        Ok(())
    }
}

/// A functor with the values of its backbone positions; `None` stands for a
/// position no atom can reach.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BackboneSymbol {
    pub functor: FunctorId,
    pub values: Vec<Option<AtomId>>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Production {
    pub lhs: SymId,
    pub rhs: Vec<SymId>,
    /// The unification rule whose residue is checked on reduction.
    pub rule: RuleIdx,
}

#[derive(Clone, Debug)]
pub struct BackboneGrammar {
    signature: Arc<Signature>,
    symbols: Vec<BackboneSymbol>,
    sym_index: HashMap<BackboneSymbol, SymId>,
    productions: Vec<Production>,
    by_lhs: Vec<Vec<ProdId>>,
    terminal: Vec<bool>,
    start: Vec<SymId>,
    positions: HashMap<FunctorId, Vec<usize>>,
    /// Candidate values per backbone position.
    domains: HashMap<(FunctorId, usize), Vec<Option<AtomId>>>,
    spec: BackboneSpec,
    fingerprint: u64,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn find(&mut self, x: usize) -> usize {
        let mut r = x;
        while self.parent[r] != r {
            r = self.parent[r];
        }
        let mut y = x;
        while self.parent[y] != r {
            let next = self.parent[y];
            self.parent[y] = r;
            y = next;
        }
        r
    }

    fn union(&mut self, a: usize, b: usize) {
        let (a, b) = (self.find(a), self.find(b));
        if a != b {
            self.parent[a.max(b)] = a.min(b);
        }
    }
}

pub fn extract_backbone(
    g: &Grammar,
    spec: &BackboneSpec,
) -> Result<BackboneGrammar, BackboneError> {
    let sig = g.signature();
    if let Some(r) = g.rules().iter().find(|r| r.kleene_index().is_some()) {
        return Err(BackboneError::Kleene(r.id.clone()));
    }
    let mut positions: HashMap<FunctorId, Vec<usize>> = HashMap::new();
    for (name, ps) in &spec.positions {
        let f = sig
            .functor(name)
            .ok_or_else(|| BackboneError::UnknownFunctor(name.clone()))?;
        let arity = sig.arity(f);
        if let Some(&p) = ps.iter().find(|&&p| p >= arity) {
            return Err(BackboneError::PositionOutOfRange {
                functor: name.clone(),
                position: p,
                arity,
            });
        }
        if !ps.is_empty() {
            positions.insert(f, ps.iter().copied().collect());
        }
    }

    // Link argument positions that share a variable, then collect the atoms
    // observed in each linked class.
    let mut slot_of: HashMap<(FunctorId, usize), usize> = HashMap::new();
    for f in sig.functors() {
        for i in 0..sig.arity(f) {
            let n = slot_of.len();
            slot_of.insert((f, i), n);
        }
    }
    let mut uf = UnionFind {
        parent: (0..slot_of.len()).collect(),
    };
    let mut atoms_at: Vec<BTreeSet<AtomId>> = vec![BTreeSet::new(); slot_of.len()];
    let mut complex_at: Vec<bool> = vec![false; slot_of.len()];
    fn walk(
        t: &Term,
        slot_of: &HashMap<(FunctorId, usize), usize>,
        first: &mut HashMap<u32, usize>,
        uf: &mut UnionFind,
        atoms_at: &mut [BTreeSet<AtomId>],
        complex_at: &mut [bool],
    ) {
        let Term::App(f, args) = t else { return };
        for (i, a) in args.iter().enumerate() {
            let slot = slot_of[&(*f, i)];
            match a {
                Term::Var(v) => match first.get(v) {
                    Some(&s) => uf.union(s, slot),
                    None => {
                        first.insert(*v, slot);
                    }
                },
                Term::Atom(x) => {
                    atoms_at[slot].insert(*x);
                }
                Term::App(..) => {
                    complex_at[slot] = true;
                    walk(a, slot_of, first, uf, atoms_at, complex_at);
                }
            }
        }
    }
    for r in g.rules() {
        let mut first = HashMap::new();
        for c in std::iter::once(&r.mother).chain(r.daughters.iter().map(|d| &d.category)) {
            walk(
                c.term(),
                &slot_of,
                &mut first,
                &mut uf,
                &mut atoms_at,
                &mut complex_at,
            );
        }
    }
    for c in g.lexicon().values().flatten() {
        let mut first = HashMap::new();
        walk(
            c.term(),
            &slot_of,
            &mut first,
            &mut uf,
            &mut atoms_at,
            &mut complex_at,
        );
    }
    let mut class_atoms: HashMap<usize, BTreeSet<AtomId>> = HashMap::new();
    let mut class_complex: HashMap<usize, bool> = HashMap::new();
    for slot in 0..slot_of.len() {
        let root = uf.find(slot);
        class_atoms
            .entry(root)
            .or_default()
            .extend(atoms_at[slot].iter().copied());
        *class_complex.entry(root).or_default() |= complex_at[slot];
    }
    let mut domains = HashMap::new();
    for (&f, ps) in &positions {
        for &p in ps {
            let root = uf.find(slot_of[&(f, p)]);
            if class_complex[&root] {
                return Err(BackboneError::NonAtomic {
                    functor: sig.functor_name(f).to_string(),
                    position: p,
                });
            }
            let atoms = &class_atoms[&root];
            let dom: Vec<Option<AtomId>> = if atoms.is_empty() {
                vec![None]
            } else {
                atoms.iter().map(|&a| Some(a)).collect()
            };
            domains.insert((f, p), dom);
        }
    }

    let mut bg = BackboneGrammar {
        signature: g.shared_signature(),
        symbols: Vec::new(),
        sym_index: HashMap::new(),
        productions: Vec::new(),
        by_lhs: Vec::new(),
        terminal: Vec::new(),
        start: Vec::new(),
        positions,
        domains,
        spec: spec.clone(),
        fingerprint: 0,
    };

    // Project rules and lexical entries, then number symbols in sorted order.
    let mut raw_prods: Vec<(BackboneSymbol, Vec<BackboneSymbol>, RuleIdx)> = Vec::new();
    for (idx, r) in g.rules().iter().enumerate() {
        let cats: Vec<&Category> = std::iter::once(&r.mother)
            .chain(r.daughters.iter().map(|d| &d.category))
            .collect();
        for syms in bg.project(&cats) {
            let mut it = syms.into_iter();
            let lhs = it.next().unwrap();
            raw_prods.push((lhs, it.collect(), idx));
        }
    }
    let mut lexical: BTreeSet<BackboneSymbol> = BTreeSet::new();
    for c in g.lexicon().values().flatten() {
        for syms in bg.project(&[c]) {
            lexical.extend(syms);
        }
    }
    let mut all: BTreeSet<BackboneSymbol> = lexical.clone();
    for (l, rhs, _) in &raw_prods {
        all.insert(l.clone());
        all.extend(rhs.iter().cloned());
    }
    bg.symbols = all.into_iter().collect();
    bg.sym_index = bg
        .symbols
        .iter()
        .cloned()
        .enumerate()
        .map(|(i, s)| (s, i))
        .collect();
    bg.terminal = bg.symbols.iter().map(|s| lexical.contains(s)).collect();
    bg.by_lhs = vec![Vec::new(); bg.symbols.len()];
    let mut seen = BTreeSet::new();
    for (l, rhs, rule) in raw_prods {
        let p = Production {
            lhs: bg.sym_index[&l],
            rhs: rhs.iter().map(|s| bg.sym_index[s]).collect(),
            rule,
        };
        if seen.insert((p.lhs, p.rhs.clone(), p.rule)) {
            bg.by_lhs[p.lhs].push(bg.productions.len());
            bg.productions.push(p);
        }
    }
    bg.start = (0..bg.symbols.len())
        .filter(|&s| bg.symbols[s].functor == g.start())
        .collect();

    let mut h = Fnv::new();
    h.write(&g.fingerprint().to_le_bytes());
    h.write(spec.to_string().as_bytes());
    h.write(format!("{:?}", bg.symbols).as_bytes());
    for p in &bg.productions {
        h.write(format!("{} {:?} {}", p.lhs, p.rhs, p.rule).as_bytes());
    }
    bg.fingerprint = h.finish();
    Ok(bg)
}

impl BackboneGrammar {
    /// All symbol tuples for categories sharing one variable namespace,
    /// with every variable at a backbone position taking each candidate
    /// value in turn.
    fn project(&self, cats: &[&Category]) -> Vec<Vec<BackboneSymbol>> {
        let mut vars: Vec<(u32, Vec<Option<AtomId>>)> = Vec::new();
        for c in cats {
            if let Some(ps) = self.positions.get(&c.functor()) {
                for &p in ps {
                    if let Term::Var(v) = &c.args()[p] {
                        if !vars.iter().any(|(w, _)| w == v) {
                            vars.push((*v, self.domains[&(c.functor(), p)].clone()));
                        }
                    }
                }
            }
        }
        let mut out = Vec::new();
        let mut choice = vec![0usize; vars.len()];
        loop {
            let value = |v: u32| {
                let i = vars.iter().position(|(w, _)| *w == v).unwrap();
                vars[i].1[choice[i]]
            };
            out.push(
                cats.iter()
                    .map(|c| {
                        let values = match self.positions.get(&c.functor()) {
                            Some(ps) => ps
                                .iter()
                                .map(|&p| match &c.args()[p] {
                                    Term::Atom(a) => Some(*a),
                                    Term::Var(v) => value(*v),
                                    Term::App(..) => None,
                                })
                                .collect(),
                            None => Vec::new(),
                        };
                        BackboneSymbol {
                            functor: c.functor(),
                            values,
                        }
                    })
                    .collect(),
            );
            let mut i = 0;
            loop {
                if i == vars.len() {
                    return out;
                }
                choice[i] += 1;
                if choice[i] < vars[i].1.len() {
                    break;
                }
                choice[i] = 0;
                i += 1;
            }
        }
    }

    /// Existing symbols a category can project to.
    pub fn symbols_for(&self, cat: &Category) -> Vec<SymId> {
        let mut out: Vec<SymId> = self
            .project(&[cat])
            .into_iter()
            .filter_map(|mut s| self.sym_index.get(&s.pop().unwrap()).copied())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Whether `cat` is consistent with the backbone values of `sym`.
    pub fn compatible(&self, cat: &Category, sym: SymId) -> bool {
        let s = &self.symbols[sym];
        if s.functor != cat.functor() {
            return false;
        }
        let Some(ps) = self.positions.get(&s.functor) else {
            return true;
        };
        ps.iter()
            .zip(&s.values)
            .all(|(&p, v)| match (&cat.args()[p], v) {
                (Term::Atom(a), Some(b)) => a == b,
                _ => true,
            })
    }

    pub fn symbols(&self) -> &[BackboneSymbol] {
        &self.symbols
    }

    pub fn symbol_count(&self) -> usize {
        self.symbols.len()
    }

    pub fn symbol_name(&self, s: SymId) -> String {
        let sym = &self.symbols[s];
        let mut name = self.signature.functor_name(sym.functor).to_string();
        if !sym.values.is_empty() {
            let vals: Vec<&str> = sym
                .values
                .iter()
                .map(|v| v.map_or("_", |a| self.signature.atom_name(a)))
                .collect();
            name.push('[');
            name.push_str(&vals.join(","));
            name.push(']');
        }
        name
    }

    pub fn productions(&self) -> &[Production] {
        &self.productions
    }

    pub fn production(&self, p: ProdId) -> &Production {
        &self.productions[p]
    }

    pub fn productions_of(&self, lhs: SymId) -> &[ProdId] {
        &self.by_lhs[lhs]
    }

    /// Symbols of lexical categories.
    pub fn is_terminal(&self, s: SymId) -> bool {
        self.terminal[s]
    }

    /// Symbols with at least one production.
    pub fn is_nonterminal(&self, s: SymId) -> bool {
        !self.by_lhs[s].is_empty()
    }

    pub fn start_symbols(&self) -> &[SymId] {
        &self.start
    }

    pub fn spec(&self) -> &BackboneSpec {
        &self.spec
    }

    /// Ties tables to the grammar and backbone they were built from.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    /// Terminal symbols of each token, or `None` for an unknown word.
    pub fn token_symbols(&self, g: &Grammar, token: &str) -> Option<Vec<SymId>> {
        let mut out: Vec<SymId> = g
            .lookup(token)?
            .iter()
            .flat_map(|c| self.symbols_for(c))
            .collect();
        out.sort_unstable();
        out.dedup();
        Some(out)
    }

    /// Sum over productions of (daughters + 1), plus 2: the size bound of
    /// the compiled-Earley table.
    pub fn ce_state_bound(&self) -> usize {
        self.productions
            .iter()
            .map(|p| p.rhs.len() + 1)
            .sum::<usize>()
            + 2
    }
}
