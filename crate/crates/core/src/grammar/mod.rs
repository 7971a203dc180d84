//! Unification grammars: rules over [`Category`] terms, a lexicon, and the
//! load-time checks every engine relies on.

mod kleene;
mod stats;
mod text;

use std::collections::{BTreeMap, HashMap};
use std::sync::Arc;

use thiserror::Error;

use crate::term::{normalize_terms, Category, FunctorId, Signature, Term, TermError};

pub use kleene::{expand_kleene, KleeneAux, KleeneMap};
pub use stats::{grammar_stats, CategoryBound, GrammarStats, CATEGORY_CEILING};
pub use text::GrammarOptions;

#[derive(Debug, Error)]
pub enum GrammarError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: {source}")]
    Term {
        line: usize,
        #[source]
        source: TermError,
    },
    #[error("rule `{0}` has no daughters (empty rules are not supported)")]
    EmptyRule(String),
    #[error("rule `{0}` has more than one kleene daughter")]
    MultipleKleene(String),
    #[error("rule id `{0}` is defined twice")]
    DuplicateRule(String),
    #[error("no start category declared")]
    MissingStart,
    #[error("rules {0:?} form a cycle of unary rules")]
    UnaryCycle(Vec<String>),
    #[error("category in `{0}` belongs to a different signature")]
    ForeignCategory(String),
}

/// Position of a rule in [`Grammar::rules`].
pub type RuleIdx = usize;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Daughter {
    pub category: Category,
    pub kleene: bool,
}

/// A phrase-structure rule. All categories of a rule share one variable
/// namespace `0..var_count`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Rule {
    pub id: String,
    pub mother: Category,
    pub daughters: Vec<Daughter>,
    /// Id of the rule this one was derived from by kleene expansion.
    pub source: Option<String>,
    var_count: u32,
    free_vars: Vec<u32>,
}

impl Rule {
    pub fn new(id: impl Into<String>, mother: Category, daughters: Vec<Daughter>) -> Rule {
        let mut r = Rule {
            id: id.into(),
            mother,
            daughters,
            source: None,
            var_count: 0,
            free_vars: Vec::new(),
        };
        r.renumber();
        r
    }

    pub(crate) fn with_source(mut self, source: &str) -> Rule {
        self.source = Some(source.to_string());
        self
    }

    /// Renumbers variables jointly and recomputes the derived fields.
    fn renumber(&mut self) {
        let sig = self.mother.sig_id();
        let mut terms: Vec<Term> = std::iter::once(self.mother.term().clone())
            .chain(self.daughters.iter().map(|d| d.category.term().clone()))
            .collect();
        self.var_count = normalize_terms(&mut terms);
        let mut it = terms.into_iter();
        self.mother = Category::from_parts(sig, it.next().unwrap());
        for (d, t) in self.daughters.iter_mut().zip(it) {
            d.category = Category::from_parts(sig, t);
        }
        let mut daughter_vars = Vec::new();
        for d in &self.daughters {
            d.category.term().vars_into(&mut daughter_vars);
        }
        self.free_vars = self
            .mother
            .vars()
            .into_iter()
            .filter(|v| !daughter_vars.contains(v))
            .collect();
    }

    /// The id reported in trees: the original rule for expansion products.
    pub fn label(&self) -> &str {
        self.source.as_deref().unwrap_or(&self.id)
    }

    pub fn var_count(&self) -> u32 {
        self.var_count
    }

    /// Mother variables that occur in no daughter. They are declared free
    /// implicitly by the text format.
    pub fn free_vars(&self) -> &[u32] {
        &self.free_vars
    }

    pub fn kleene_index(&self) -> Option<usize> {
        self.daughters.iter().position(|d| d.kleene)
    }

    pub fn len(&self) -> usize {
        self.daughters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.daughters.is_empty()
    }
}

/// A validated grammar. Immutable once built; share it behind `Arc` across
/// concurrent parses.
#[derive(Clone, Debug)]
pub struct Grammar {
    signature: Arc<Signature>,
    rules: Vec<Rule>,
    start: FunctorId,
    lexicon: BTreeMap<String, Vec<Category>>,
}

impl Grammar {
    pub fn new(
        signature: Signature,
        rules: Vec<Rule>,
        start: FunctorId,
        lexicon: BTreeMap<String, Vec<Category>>,
    ) -> Result<Grammar, GrammarError> {
        Grammar::from_shared(Arc::new(signature), rules, start, lexicon)
    }

    pub(crate) fn from_shared(
        signature: Arc<Signature>,
        rules: Vec<Rule>,
        start: FunctorId,
        lexicon: BTreeMap<String, Vec<Category>>,
    ) -> Result<Grammar, GrammarError> {
        let sig = signature.id();
        let mut seen = HashMap::new();
        for (i, r) in rules.iter().enumerate() {
            if r.daughters.is_empty() {
                return Err(GrammarError::EmptyRule(r.id.clone()));
            }
            if r.daughters.iter().filter(|d| d.kleene).count() > 1 {
                return Err(GrammarError::MultipleKleene(r.id.clone()));
            }
            if r.mother.sig_id() != sig || r.daughters.iter().any(|d| d.category.sig_id() != sig) {
                return Err(GrammarError::ForeignCategory(r.id.clone()));
            }
            if seen.insert(r.id.clone(), i).is_some() {
                return Err(GrammarError::DuplicateRule(r.id.clone()));
            }
        }
        let mut lex = BTreeMap::new();
        for (word, cats) in lexicon {
            let mut entries: Vec<Category> = Vec::new();
            for c in cats {
                if c.sig_id() != sig {
                    return Err(GrammarError::ForeignCategory(word.clone()));
                }
                let c = c.normalized();
                if !entries.contains(&c) {
                    entries.push(c);
                }
            }
            lex.insert(word, entries);
        }
        check_unary_cycles(&rules, signature.functor_count())?;
        Ok(Grammar {
            signature,
            rules,
            start,
            lexicon: lex,
        })
    }

    /// Parses the grammar text format with default options.
    pub fn parse(text: &str) -> Result<Grammar, GrammarError> {
        text::parse_grammar(text, &GrammarOptions::default())
    }

    pub fn parse_with(text: &str, options: &GrammarOptions) -> Result<Grammar, GrammarError> {
        text::parse_grammar(text, options)
    }

    pub fn signature(&self) -> &Signature {
        &self.signature
    }

    pub fn shared_signature(&self) -> Arc<Signature> {
        Arc::clone(&self.signature)
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    pub fn rule(&self, idx: RuleIdx) -> &Rule {
        &self.rules[idx]
    }

    pub fn rule_by_id(&self, id: &str) -> Option<RuleIdx> {
        self.rules.iter().position(|r| r.id == id)
    }

    pub fn start(&self) -> FunctorId {
        self.start
    }

    pub fn lexicon(&self) -> &BTreeMap<String, Vec<Category>> {
        &self.lexicon
    }

    pub fn lookup(&self, word: &str) -> Option<&[Category]> {
        self.lexicon.get(word).map(Vec::as_slice)
    }

    pub fn has_kleene(&self) -> bool {
        self.rules.iter().any(|r| r.kleene_index().is_some())
    }

    /// Every category mentioned by the grammar, rules first.
    pub fn categories(&self) -> impl Iterator<Item = &Category> {
        self.rules
            .iter()
            .flat_map(|r| std::iter::once(&r.mother).chain(r.daughters.iter().map(|d| &d.category)))
            .chain(self.lexicon.values().flatten())
    }

    /// Stable fingerprint of rules and lexicon, used to tie tables to the
    /// grammar they were built from.
    pub fn fingerprint(&self) -> u64 {
        let mut h = Fnv::new();
        for r in &self.rules {
            h.write(r.id.as_bytes());
            h.write(format!("{:?}", r.mother.term()).as_bytes());
            for d in &r.daughters {
                h.write(format!("{:?}{}", d.category.term(), d.kleene).as_bytes());
            }
        }
        for (w, cats) in &self.lexicon {
            h.write(w.as_bytes());
            for c in cats {
                h.write(format!("{:?}", c.term()).as_bytes());
            }
        }
        h.finish()
    }
}

/// FNV-1a; used only for fingerprints that must be stable across runs.
pub(crate) struct Fnv(u64);

impl Fnv {
    pub(crate) fn new() -> Self {
        Fnv(0xcbf2_9ce4_8422_2325)
    }

    pub(crate) fn write(&mut self, bytes: &[u8]) {
        for b in bytes {
            self.0 ^= *b as u64;
            self.0 = self.0.wrapping_mul(0x100_0000_01b3);
        }
        self.0 ^= 0xff;
        self.0 = self.0.wrapping_mul(0x100_0000_01b3);
    }

    pub(crate) fn finish(&self) -> u64 {
        self.0
    }
}

/// Rejects grammars whose single-daughter rules can rewrite a functor to
/// itself; such grammars have infinitely many trees over one span.
fn check_unary_cycles(rules: &[Rule], functor_count: usize) -> Result<(), GrammarError> {
    let mut edges: Vec<Vec<(usize, usize)>> = vec![Vec::new(); functor_count];
    for (i, r) in rules.iter().enumerate() {
        if r.daughters.len() == 1 {
            let from = r.mother.functor().0 as usize;
            let to = r.daughters[0].category.functor().0 as usize;
            edges[from].push((to, i));
        }
    }
    // 0 = unvisited, 1 = on stack, 2 = done
    let mut mark = vec![0u8; functor_count];
    let mut path: Vec<usize> = Vec::new();
    fn visit(
        n: usize,
        edges: &[Vec<(usize, usize)>],
        mark: &mut [u8],
        path: &mut Vec<usize>,
    ) -> Option<Vec<usize>> {
        mark[n] = 1;
        for &(m, rule) in &edges[n] {
            path.push(rule);
            if mark[m] == 1 {
                return Some(path.clone());
            }
            if mark[m] == 0 {
                if let Some(c) = visit(m, edges, mark, path) {
                    return Some(c);
                }
            }
            path.pop();
        }
        mark[n] = 2;
        None
    }
    for n in 0..functor_count {
        if mark[n] == 0 {
            if let Some(cycle) = visit(n, &edges, &mut mark, &mut path) {
                return Err(GrammarError::UnaryCycle(
                    cycle.into_iter().map(|i| rules[i].id.clone()).collect(),
                ));
            }
        }
    }
    Ok(())
}
