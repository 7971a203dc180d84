use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::Grammar;
use crate::term::{AtomId, FunctorId, Term};

/// Saturation point of the category-space bound.
pub const CATEGORY_CEILING: u64 = 1_000_000_000_000_000_000;

/// Upper bound on the number of ground categories licensed by the grammar.
///
/// Each argument position of a functor ranges over the atoms and nested
/// functors observed there anywhere in the grammar (all atoms when only
/// variables occur), nested down to the signature's depth cap. This
/// over-approximates the categories actually derivable.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CategoryBound {
    pub value: u64,
    pub saturated: bool,
}

impl fmt::Display for CategoryBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.saturated {
            write!(f, ">= {}", self.value)
        } else {
            write!(f, "{}", self.value)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GrammarStats {
    pub rule_count: usize,
    pub max_daughters: usize,
    pub category_bound: CategoryBound,
    pub kleene_rule_count: usize,
    /// Share of rules with at most two daughters.
    pub le2_daughter_fraction: f64,
}

#[derive(Default)]
struct Domain {
    atoms: BTreeSet<AtomId>,
    nested: BTreeSet<FunctorId>,
}

pub fn grammar_stats(g: &Grammar) -> GrammarStats {
    let rules = g.rules();
    let rule_count = rules.len();
    let max_daughters = rules.iter().map(|r| r.daughters.len()).max().unwrap_or(0);
    let kleene_rule_count = rules.iter().filter(|r| r.kleene_index().is_some()).count();
    let le2 = rules.iter().filter(|r| r.daughters.len() <= 2).count();
    let le2_daughter_fraction = if rule_count == 0 {
        1.0
    } else {
        le2 as f64 / rule_count as f64
    };
    GrammarStats {
        rule_count,
        max_daughters,
        category_bound: category_bound(g),
        kleene_rule_count,
        le2_daughter_fraction,
    }
}

fn category_bound(g: &Grammar) -> CategoryBound {
    let sig = g.signature();
    let mut domains: BTreeMap<(FunctorId, usize), Domain> = BTreeMap::new();
    fn observe(t: &Term, domains: &mut BTreeMap<(FunctorId, usize), Domain>) {
        if let Term::App(f, args) = t {
            for (i, a) in args.iter().enumerate() {
                let d = domains.entry((*f, i)).or_default();
                match a {
                    Term::Atom(x) => {
                        d.atoms.insert(*x);
                    }
                    Term::App(h, _) => {
                        d.nested.insert(*h);
                    }
                    Term::Var(_) => {}
                }
                observe(a, domains);
            }
        }
    }
    for c in g.categories() {
        observe(c.term(), &mut domains);
    }

    let ceiling = CATEGORY_CEILING as u128;
    let mut memo: BTreeMap<(FunctorId, usize), u128> = BTreeMap::new();
    fn count(
        f: FunctorId,
        depth: usize,
        g: &Grammar,
        domains: &BTreeMap<(FunctorId, usize), Domain>,
        memo: &mut BTreeMap<(FunctorId, usize), u128>,
        ceiling: u128,
    ) -> u128 {
        if depth == 0 {
            return 0;
        }
        if let Some(&v) = memo.get(&(f, depth)) {
            return v;
        }
        let sig = g.signature();
        let mut total: u128 = 1;
        for i in 0..sig.arity(f) {
            let mut choices: u128 = match domains.get(&(f, i)) {
                Some(d) if !d.atoms.is_empty() || !d.nested.is_empty() => d.atoms.len() as u128,
                _ => sig.atom_count() as u128,
            };
            if let Some(d) = domains.get(&(f, i)) {
                for &h in &d.nested {
                    choices =
                        (choices + count(h, depth - 1, g, domains, memo, ceiling)).min(ceiling);
                }
            }
            total = total.saturating_mul(choices).min(ceiling);
        }
        memo.insert((f, depth), total);
        total
    }
    let mut sum: u128 = 0;
    for f in sig.functors() {
        sum = (sum + count(f, sig.max_depth(), g, &domains, &mut memo, ceiling)).min(ceiling);
    }
    CategoryBound {
        value: sum as u64,
        saturated: sum >= ceiling,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::GrammarOptions;

    #[test]
    fn single_binary_rule() {
        let g = Grammar::parse("cat S/0 A/0 B/0 ; start S ; rule r : S -> A B ;").unwrap();
        let s = grammar_stats(&g);
        assert_eq!(s.rule_count, 1);
        assert_eq!(s.max_daughters, 2);
        assert_eq!(s.le2_daughter_fraction, 1.0);
        assert_eq!(s.kleene_rule_count, 0);
    }

    #[test]
    fn one_ternary_among_ten() {
        let mut text = String::from("cat S/0 A/0 ; start S ; rule t : S -> A A A ;");
        for i in 0..9 {
            text.push_str(&format!("rule b{i} : S -> A A ;"));
        }
        let s = grammar_stats(&Grammar::parse(&text).unwrap());
        assert_eq!(s.max_daughters, 3);
        assert!((s.le2_daughter_fraction - 0.9).abs() < 1e-12);
    }

    /// Enumerates every ground NP(x, y) with x, y drawn from the observed
    /// atoms and checks the bound counts exactly those.
    #[test]
    fn bound_matches_ground_enumeration() {
        let text = "atoms sg pl nom acc ; cat NP/2 ; start NP ;
            word a : NP(sg, nom) ; word b : NP(pl, acc) ;";
        let g = Grammar::parse_with(text, &GrammarOptions { max_depth: 1 }).unwrap();
        let sig = g.signature();
        let nums = ["sg", "pl"];
        let cases = ["nom", "acc"];
        let mut ground = BTreeSet::new();
        for n in nums {
            for c in cases {
                ground.insert((sig.atom(n).unwrap(), sig.atom(c).unwrap()));
            }
        }
        let s = grammar_stats(&g);
        assert_eq!(s.category_bound.value, ground.len() as u64);
        assert_eq!(s.category_bound.value, 4);
        assert!(!s.category_bound.saturated);
    }

    #[test]
    fn bound_saturates() {
        let mut text = String::from("atoms");
        for i in 0..200 {
            text.push_str(&format!(" a{i}"));
        }
        text.push_str(" ; cat F/12 ; start F ; rule r : F(A,B,C,D,E,G,H,I,J,K,L,M) -> F(A,B,C,D,E,G,H,I,J,K,L,M) F(A,B,C,D,E,G,H,I,J,K,L,M) ;");
        let s = grammar_stats(&Grammar::parse(&text).unwrap());
        assert!(s.category_bound.saturated);
        assert_eq!(s.category_bound.value, CATEGORY_CEILING);
        assert!(s.category_bound.to_string().starts_with(">="));
    }
}
