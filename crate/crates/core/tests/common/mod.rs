//! Independent reference machinery shared by the integration tests.
//!
//! The oracle parser enumerates every tree licensed by a grammar over a
//! token sequence by brute force: for each span it tries every rule against
//! every tiling of the span by smaller analyses, using its own
//! substitution-map unifier. It shares nothing with the engines beyond the
//! grammar data types and renders trees in the same bracketed notation.

#![allow(dead_code)]

pub mod props;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::PathBuf;
use std::rc::Rc;

use rand::{Rng, SeedableRng};
use ugparse::term::{Signature, Term};
use ugparse::{Grammar, ParseOutcome, Parser};

pub fn data_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

pub fn load_grammar(name: &str) -> Grammar {
    let text = std::fs::read_to_string(data_path(name)).expect("bundled grammar is readable");
    Grammar::parse(&text).expect("bundled grammar loads")
}

pub fn load_corpus(name: &str) -> Vec<Vec<String>> {
    let text = std::fs::read_to_string(data_path(name)).expect("bundled corpus is readable");
    ugparse::harness::parse_corpus(&text)
        .into_iter()
        .map(|s| s.tokens)
        .collect()
}

pub fn words(s: &str) -> Vec<String> {
    s.split_whitespace().map(str::to_string).collect()
}

// ---------------------------------------------------------------------------
// Substitution-map unification

/// Triangular substitution: variable -> term over the same variable space.
#[derive(Clone, Debug, Default)]
pub struct Subst {
    map: HashMap<u32, Term>,
}

impl Subst {
    pub fn new() -> Self {
        Subst::default()
    }

    fn walk<'a>(&'a self, mut t: &'a Term) -> &'a Term {
        while let Term::Var(v) = t {
            match self.map.get(v) {
                Some(next) => t = next,
                None => break,
            }
        }
        t
    }

    fn occurs(&self, v: u32, t: &Term) -> bool {
        match self.walk(t) {
            Term::Var(w) => *w == v,
            Term::Atom(_) => false,
            Term::App(_, args) => args.iter().any(|a| self.occurs(v, a)),
        }
    }

    /// Extends the substitution to unify `a` and `b`; on failure the
    /// substitution is left unchanged.
    pub fn unify(&mut self, a: &Term, b: &Term) -> bool {
        let saved = self.map.clone();
        let ok = self.unify_inner(a, b);
        if !ok {
            self.map = saved;
        }
        ok
    }

    fn unify_inner(&mut self, a: &Term, b: &Term) -> bool {
        let a = self.walk(a).clone();
        let b = self.walk(b).clone();
        match (&a, &b) {
            (Term::Var(x), Term::Var(y)) if x == y => true,
            (Term::Var(x), t) | (t, Term::Var(x)) => {
                if self.occurs(*x, t) {
                    return false;
                }
                self.map.insert(*x, t.clone());
                true
            }
            (Term::Atom(x), Term::Atom(y)) => x == y,
            (Term::App(f, xs), Term::App(g, ys)) => {
                f == g
                    && xs.len() == ys.len()
                    && xs.iter().zip(ys).all(|(x, y)| self.unify_inner(x, y))
            }
            _ => false,
        }
    }

    pub fn resolve(&self, t: &Term) -> Term {
        match self.walk(t) {
            Term::App(f, args) => Term::App(*f, args.iter().map(|a| self.resolve(a)).collect()),
            other => other.clone(),
        }
    }
}

/// Adds `offset` to every variable.
pub fn shift(t: &Term, offset: u32) -> Term {
    match t {
        Term::Var(v) => Term::Var(v + offset),
        Term::Atom(a) => Term::Atom(*a),
        Term::App(f, args) => Term::App(*f, args.iter().map(|a| shift(a, offset)).collect()),
    }
}

pub fn max_var(t: &Term) -> Option<u32> {
    match t {
        Term::Var(v) => Some(*v),
        Term::Atom(_) => None,
        Term::App(_, args) => args.iter().filter_map(max_var).max(),
    }
}

/// Renames variables to `0..` in order of first appearance, sharing `map`
/// across calls.
pub fn rename(t: &Term, map: &mut Vec<u32>) -> Term {
    match t {
        Term::Var(v) => {
            let i = match map.iter().position(|w| w == v) {
                Some(i) => i,
                None => {
                    map.push(*v);
                    map.len() - 1
                }
            };
            Term::Var(i as u32)
        }
        Term::Atom(a) => Term::Atom(*a),
        Term::App(f, args) => Term::App(*f, args.iter().map(|a| rename(a, map)).collect()),
    }
}

pub fn render(t: &Term, sig: &Signature) -> String {
    match t {
        Term::Var(v) => format!("_{v}"),
        Term::Atom(a) => sig.atom_name(*a).to_string(),
        Term::App(f, args) if args.is_empty() => sig.functor_name(*f).to_string(),
        Term::App(f, args) => {
            let inner: Vec<String> = args.iter().map(|a| render(a, sig)).collect();
            format!("{}({})", sig.functor_name(*f), inner.join(","))
        }
    }
}

// ---------------------------------------------------------------------------
// Exhaustive enumeration

#[derive(Debug)]
enum Label {
    Rule(usize),
    Word { word: String, entry: usize },
}

#[derive(Debug)]
struct Sub {
    label: Label,
    children: Vec<Rc<Sub>>,
    /// Mother category of the subtree alone, variables from 0.
    term: Term,
    vars: u32,
}

fn var_span(t: &Term) -> u32 {
    max_var(t).map_or(0, |v| v + 1)
}

/// Every way of covering `start..end` by constituents matching the rule's
/// daughters in order, each unified with its daughter. `pick` supplies the
/// candidate analyses for a span.
struct Tiler<'a> {
    daughters: &'a [(Term, bool)],
    end: usize,
    pick: &'a dyn Fn(usize, usize) -> Vec<Rc<Sub>>,
    out: Vec<(Vec<Rc<Sub>>, Subst, u32)>,
}

impl Tiler<'_> {
    /// `d`: current daughter; `again`: the kleene daughter `d` has matched
    /// at least once already.
    fn go(
        &mut self,
        pos: usize,
        d: usize,
        again: bool,
        kids: &mut Vec<Rc<Sub>>,
        s: &Subst,
        next: u32,
    ) {
        if d == self.daughters.len() {
            if pos == self.end {
                self.out.push((kids.clone(), s.clone(), next));
            }
            return;
        }
        let (dt, kleene) = &self.daughters[d];
        if *kleene && again {
            self.go(pos, d + 1, false, kids, s, next);
        }
        let remaining = self.daughters.len() - d - 1;
        for stop in pos + 1..=self.end {
            if self.end - stop < remaining {
                break;
            }
            for sub in (self.pick)(pos, stop) {
                let mut s2 = s.clone();
                if !s2.unify(dt, &shift(&sub.term, next)) {
                    continue;
                }
                kids.push(sub.clone());
                let n2 = next + sub.vars;
                if *kleene {
                    self.go(stop, d, true, kids, &s2, n2);
                } else {
                    self.go(stop, d + 1, false, kids, &s2, n2);
                }
                kids.pop();
            }
        }
    }
}

fn rule_daughters(g: &Grammar, r: usize) -> Vec<(Term, bool)> {
    g.rule(r)
        .daughters
        .iter()
        .map(|d| (d.category.term().clone(), d.kleene))
        .collect()
}

fn make_sub(g: &Grammar, r: usize, kids: Vec<Rc<Sub>>, s: &Subst) -> Rc<Sub> {
    let mut map = Vec::new();
    let term = rename(&s.resolve(g.rule(r).mother.term()), &mut map);
    Rc::new(Sub {
        label: Label::Rule(r),
        children: kids,
        vars: map.len() as u32,
        term,
    })
}

/// All trees rooted in the start functor over `tokens`, as bracketed
/// strings. Requires a grammar without unary cycles.
#[allow(clippy::needless_range_loop)]
pub fn oracle_trees(g: &Grammar, tokens: &[String]) -> BTreeSet<String> {
    let n = tokens.len();
    let mut chart: HashMap<(usize, usize), Vec<Rc<Sub>>> = HashMap::new();
    for len in 1..=n {
        for i in 0..=n - len {
            let j = i + len;
            let mut here: Vec<Rc<Sub>> = Vec::new();
            if len == 1 {
                if let Some(entries) = g.lookup(&tokens[i]) {
                    for (k, c) in entries.iter().enumerate() {
                        here.push(Rc::new(Sub {
                            label: Label::Word {
                                word: tokens[i].clone(),
                                entry: k,
                            },
                            children: Vec::new(),
                            term: c.term().clone(),
                            vars: var_span(c.term()),
                        }));
                    }
                }
            }
            // Two or more constituents, all from strictly shorter spans.
            for r in 0..g.rules().len() {
                let ds = rule_daughters(g, r);
                let pick = |a: usize, b: usize| -> Vec<Rc<Sub>> {
                    if b - a == len {
                        Vec::new()
                    } else {
                        chart.get(&(a, b)).cloned().unwrap_or_default()
                    }
                };
                let mut t = Tiler {
                    daughters: &ds,
                    end: j,
                    pick: &pick,
                    out: Vec::new(),
                };
                let vars = g.rule(r).var_count();
                t.go(i, 0, false, &mut Vec::new(), &Subst::new(), vars);
                for (kids, s, _) in t.out {
                    here.push(make_sub(g, r, kids, &s));
                }
            }
            // One constituent covering the whole span, in waves.
            let mut wave: Vec<Rc<Sub>> = here.clone();
            while !wave.is_empty() {
                let mut next = Vec::new();
                for r in 0..g.rules().len() {
                    let ds = rule_daughters(g, r);
                    if ds.len() != 1 {
                        continue;
                    }
                    let vars = g.rule(r).var_count();
                    for sub in &wave {
                        let mut s = Subst::new();
                        if s.unify(&ds[0].0, &shift(&sub.term, vars)) {
                            next.push(make_sub(g, r, vec![sub.clone()], &s));
                        }
                    }
                }
                here.extend(next.iter().cloned());
                wave = next;
            }
            chart.insert((i, j), here);
        }
    }
    let mut out = BTreeSet::new();
    if n == 0 {
        return out;
    }
    for root in chart.get(&(0, n)).into_iter().flatten() {
        if matches!(&root.term, Term::App(f, _) if *f == g.start()) {
            out.insert(bracket(g, root));
        }
    }
    out
}

/// Re-unifies the whole tree top-down and prints it with one pre-order
/// variable numbering.
fn bracket(g: &Grammar, root: &Sub) -> String {
    struct Node<'a> {
        sub: &'a Sub,
        term: Term,
        kids: Vec<Node<'a>>,
    }
    fn inst<'a>(g: &Grammar, sub: &'a Sub, s: &mut Subst, next: &mut u32) -> Node<'a> {
        match &sub.label {
            Label::Word { .. } => {
                let term = shift(&sub.term, *next);
                *next += sub.vars;
                Node {
                    sub,
                    term,
                    kids: Vec::new(),
                }
            }
            Label::Rule(r) => {
                let rule = g.rule(*r);
                let off = *next;
                *next += rule.var_count();
                let m = rule.daughters.len();
                let reps = sub.children.len() + 1 - m;
                let k = rule.kleene_index().unwrap_or(m);
                let mut kids = Vec::new();
                for (j, c) in sub.children.iter().enumerate() {
                    let di = if j < k {
                        j
                    } else if j < k + reps {
                        k
                    } else {
                        j + 1 - reps
                    };
                    let child = inst(g, c, s, next);
                    let dt = shift(rule.daughters[di].category.term(), off);
                    assert!(s.unify(&dt, &child.term), "oracle tree fails to re-unify");
                    kids.push(child);
                }
                Node {
                    sub,
                    term: shift(rule.mother.term(), off),
                    kids,
                }
            }
        }
    }
    fn write(g: &Grammar, n: &Node<'_>, s: &Subst, map: &mut Vec<u32>, out: &mut String) {
        out.push('(');
        match &n.sub.label {
            Label::Rule(r) => out.push_str(g.rule(*r).label()),
            Label::Word { word, entry } => {
                out.push_str(word);
                if *entry > 0 {
                    out.push_str(&format!("#{entry}"));
                }
            }
        }
        out.push(' ');
        out.push_str(&render(&rename(&s.resolve(&n.term), map), g.signature()));
        for k in &n.kids {
            out.push(' ');
            write(g, k, s, map, out);
        }
        out.push(')');
    }
    let mut s = Subst::new();
    let mut next = 0;
    let tree = inst(g, root, &mut s, &mut next);
    let mut out = String::new();
    write(g, &tree, &s, &mut Vec::new(), &mut out);
    out
}

// ---------------------------------------------------------------------------
// Engine-side helpers

/// Sorted bracketed trees of an outcome, unpacked without a practical limit.
pub fn engine_trees(p: &Parser, outcome: &ParseOutcome) -> Vec<String> {
    let sig = p.grammar().signature();
    let mut trees: Vec<String> = p
        .unpack(outcome, usize::MAX)
        .iter()
        .map(|t| t.to_bracketed(sig))
        .collect();
    trees.sort();
    trees
}

/// Catalan numbers by the convolution recurrence.
pub fn catalan(n: usize) -> num_bigint::BigUint {
    let mut c = vec![num_bigint::BigUint::from(1u32)];
    for i in 1..=n {
        let mut s = num_bigint::BigUint::from(0u32);
        for j in 0..i {
            s += &c[j] * &c[i - 1 - j];
        }
        c.push(s);
    }
    c[n].clone()
}

/// `N -> N N` with a single word `n`.
pub const COMPOUND_ONLY: &str = "
    cat N/0 ;
    start N ;
    rule nn : N -> N N ;
    word n : N ;
";

// ---------------------------------------------------------------------------
// Random grammars

pub struct RandomGrammar {
    pub text: String,
    pub words: Vec<String>,
}

/// A small random grammar with agreement-style variables, atoms, one nested
/// functor, occasional kleene daughters and lexical ambiguity. Grammars the
/// loader rejects (unary cycles) are redrawn.
pub fn random_grammar<R: Rng>(rng: &mut R) -> (Grammar, RandomGrammar) {
    loop {
        let rg = random_grammar_text(rng);
        if let Ok(g) = Grammar::parse(&rg.text) {
            return (g, rg);
        }
    }
}

fn random_grammar_text<R: Rng>(rng: &mut R) -> RandomGrammar {
    let atoms = ["a", "b", "c"];
    let names = ["S", "P", "Q", "R"];
    let arity: Vec<usize> = names.iter().map(|_| rng.gen_range(0..=2)).collect();
    let vars = ["X", "Y", "Z", "_"];
    let arg = |rng: &mut R, allow_nested: bool| -> String {
        let x: f64 = rng.gen();
        if x < 0.45 {
            vars[rng.gen_range(0..vars.len())].to_string()
        } else if allow_nested && x < 0.55 {
            let inner = if rng.gen_bool(0.5) {
                vars[rng.gen_range(0..3)].to_string()
            } else {
                atoms[rng.gen_range(0..atoms.len())].to_string()
            };
            format!("g({inner})")
        } else {
            atoms[rng.gen_range(0..atoms.len())].to_string()
        }
    };
    let cat = |rng: &mut R, f: usize| -> String {
        if arity[f] == 0 {
            return names[f].to_string();
        }
        let args: Vec<String> = (0..arity[f]).map(|_| arg(rng, true)).collect();
        format!("{}({})", names[f], args.join(", "))
    };

    let mut text = String::from("atoms a b c ;\ncat");
    for (n, a) in names.iter().zip(&arity) {
        text.push_str(&format!(" {n}/{a}"));
    }
    text.push_str(" g/1 ;\nstart S ;\n");
    let rule_count = rng.gen_range(3..=7);
    for r in 0..rule_count {
        let mother = if r == 0 {
            0
        } else {
            rng.gen_range(0..names.len())
        };
        let m = cat(rng, mother);
        let nd = rng.gen_range(1..=3);
        let kleene = if rng.gen_bool(0.2) {
            Some(rng.gen_range(0..nd))
        } else {
            None
        };
        let ds: Vec<String> = (0..nd)
            .map(|d| {
                let f = rng.gen_range(0..names.len());
                let c = cat(rng, f);
                if kleene == Some(d) {
                    format!("{c}*")
                } else {
                    c
                }
            })
            .collect();
        text.push_str(&format!("rule r{r} : {m} -> {} ;\n", ds.join(" ")));
    }
    let words: Vec<String> = ["x", "y", "z"][..rng.gen_range(2..=3)]
        .iter()
        .map(|w| w.to_string())
        .collect();
    for w in &words {
        for _ in 0..rng.gen_range(1..=2) {
            let f = rng.gen_range(0..names.len());
            text.push_str(&format!("word {w} : {} ;\n", cat(rng, f)));
        }
    }
    RandomGrammar { text, words }
}

/// Every string of length `1..=max_len` over `words`.
pub fn all_strings(words: &[String], max_len: usize) -> Vec<Vec<String>> {
    let mut out = Vec::new();
    let mut layer: Vec<Vec<String>> = vec![Vec::new()];
    for _ in 0..max_len {
        let mut next = Vec::new();
        for s in &layer {
            for w in words {
                let mut t = s.clone();
                t.push(w.clone());
                next.push(t);
            }
        }
        out.extend(next.iter().cloned());
        layer = next;
    }
    out
}

/// Multiset of trees as a count map, for diagnostics.
pub fn tally(trees: &[String]) -> BTreeMap<&str, usize> {
    let mut m = BTreeMap::new();
    for t in trees {
        *m.entry(t.as_str()).or_insert(0) += 1;
    }
    m
}

/// An order-independent description of a forest: every live node's span,
/// category and number of derivations, plus the root categories.
pub fn forest_shape(p: &Parser, outcome: &ParseOutcome) -> (Vec<String>, Vec<String>) {
    let sig = p.grammar().signature();
    let forest = &outcome.forest;
    let mut nodes: Vec<String> = forest
        .live_nodes()
        .map(|n| {
            format!(
                "{}-{} {} x{}",
                n.span.0,
                n.span.1,
                n.category.normalized().display(sig),
                n.derivations.len()
            )
        })
        .collect();
    nodes.sort();
    let mut roots: Vec<String> = forest
        .roots()
        .iter()
        .map(|&r| forest.category(r).normalized().display(sig).to_string())
        .collect();
    roots.sort();
    (nodes, roots)
}

/// The k-th member of a family of binary grammars over `A0..Ak` whose
/// production count runs from 10 (k = 2) to 200 (k = 16). Returns the
/// grammar text and its production count.
pub fn table_family(k: usize) -> (String, usize) {
    let target = 10 + (190 * (k - 2) + 7) / 14;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(k as u64);
    let mut text = String::from("cat");
    for i in 0..=k {
        text.push_str(&format!(" A{i}/0"));
    }
    text.push_str(" ;\nstart A0 ;\n");
    let mut seen = BTreeSet::new();
    while seen.len() < target {
        let (m, x, y) = (
            rng.gen_range(0..=k),
            rng.gen_range(0..=k),
            rng.gen_range(0..=k),
        );
        if seen.insert((m, x, y)) {
            text.push_str(&format!("rule r{} : A{m} -> A{x} A{y} ;\n", seen.len()));
        }
    }
    for i in 0..=k {
        text.push_str(&format!("word a{i} : A{i} ;\n"));
    }
    (text, target)
}

/// `S -> A_i`, `A_i -> T_j A_i` for every j != i, and `A_i -> T_i`, for i
/// in 1..=n: after a prefix of T's the LR(0) automaton must remember which
/// A_i are still possible, so it needs a state per subset.
pub fn subset_family(n: usize) -> String {
    let mut text = String::from("cat S/0");
    for i in 1..=n {
        text.push_str(&format!(" A{i}/0 T{i}/0"));
    }
    text.push_str(" ;\nstart S ;\n");
    for i in 1..=n {
        text.push_str(&format!(
            "rule s{i} : S -> A{i} ;\nrule last{i} : A{i} -> T{i} ;\n"
        ));
        for j in (1..=n).filter(|&j| j != i) {
            text.push_str(&format!("rule r{i}_{j} : A{i} -> T{j} A{i} ;\n"));
        }
        text.push_str(&format!("word t{i} : T{i} ;\n"));
    }
    text
}
