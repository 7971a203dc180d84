//! Rewriting kleene daughters into left-recursive auxiliary rules.
//!
//! `M -> a D* b` becomes `M -> a K b`, `K -> D`, `K -> K D`, where the fresh
//! functor `K` carries the variables of `D`, so every repetition is still
//! constrained by the same bindings. A kleene daughter matches one or more
//! constituents.

use std::collections::BTreeMap;
use std::sync::Arc;

use super::{Daughter, Grammar, Rule};
use crate::term::{Category, FunctorId, Term};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct KleeneAux {
    /// Id of the rule whose kleene daughter this functor replaces.
    pub rule: String,
    pub daughter: usize,
}

/// Auxiliary functors introduced by [`expand_kleene`].
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct KleeneMap {
    aux: BTreeMap<FunctorId, KleeneAux>,
}

impl KleeneMap {
    pub fn is_empty(&self) -> bool {
        self.aux.is_empty()
    }

    pub fn len(&self) -> usize {
        self.aux.len()
    }

    pub fn is_aux(&self, f: FunctorId) -> bool {
        self.aux.contains_key(&f)
    }

    pub fn get(&self, f: FunctorId) -> Option<&KleeneAux> {
        self.aux.get(&f)
    }

    pub fn iter(&self) -> impl Iterator<Item = (FunctorId, &KleeneAux)> {
        self.aux.iter().map(|(f, a)| (*f, a))
    }
}

pub fn expand_kleene(g: &Grammar) -> (Grammar, KleeneMap) {
    if !g.has_kleene() {
        return (g.clone(), KleeneMap::default());
    }
    let mut sig = g.signature().extension();
    let sig_id = sig.id();
    let mut rules = Vec::with_capacity(g.rules().len() + 2);
    let mut map = KleeneMap::default();

    for rule in g.rules() {
        let Some(k) = rule.kleene_index() else {
            rules.push(rule.clone());
            continue;
        };
        let repeated = &rule.daughters[k].category;
        let vars = repeated.vars();
        let mut name = format!("*{}", rule.id);
        while sig.functor(&name).is_some() {
            name.push('\'');
        }
        let aux = sig
            .add_functor(&name, vars.len())
            .expect("auxiliary functor names cannot clash");
        map.aux.insert(
            aux,
            KleeneAux {
                rule: rule.id.clone(),
                daughter: k,
            },
        );
        let aux_cat = Category::from_parts(
            sig_id,
            Term::App(aux, vars.iter().map(|&v| Term::Var(v)).collect()),
        );
        let plain = |c: &Category| Daughter {
            category: c.clone(),
            kleene: false,
        };

        let mut daughters: Vec<Daughter> =
            rule.daughters.iter().map(|d| plain(&d.category)).collect();
        daughters[k] = plain(&aux_cat);
        rules
            .push(Rule::new(rule.id.clone(), rule.mother.clone(), daughters).with_source(&rule.id));
        rules.push(
            Rule::new(
                format!("{}*base", rule.id),
                aux_cat.clone(),
                vec![plain(repeated)],
            )
            .with_source(&rule.id),
        );
        rules.push(
            Rule::new(
                format!("{}*step", rule.id),
                aux_cat.clone(),
                vec![plain(&aux_cat), plain(repeated)],
            )
            .with_source(&rule.id),
        );
    }

    let expanded = Grammar::from_shared(Arc::new(sig), rules, g.start(), g.lexicon().clone())
        .expect("kleene expansion preserves grammar validity");
    (expanded, map)
}

#[cfg(test)]
mod tests {
    use super::*;

    const NP: &str = "
        cat NP/0 Det/0 A/0 N/0 ;
        start NP ;
        rule np : NP -> Det A* N ;
        word the : Det ; word big : A ; word dog : N ;
    ";

    #[test]
    fn no_kleene_is_identity() {
        let g = Grammar::parse("cat S/0 A/0 ; start S ; rule r : S -> A A ; word a : A ;").unwrap();
        let (e, map) = expand_kleene(&g);
        assert!(map.is_empty());
        assert_eq!(e.rules(), g.rules());
        assert_eq!(e.fingerprint(), g.fingerprint());
    }

    #[test]
    fn expansion_shape() {
        let g = Grammar::parse(NP).unwrap();
        let (e, map) = expand_kleene(&g);
        assert_eq!(map.len(), 1);
        let sig = e.signature();
        let shown: Vec<String> = e
            .rules()
            .iter()
            .map(|r| {
                let ds: Vec<String> = r
                    .daughters
                    .iter()
                    .map(|d| d.category.display(sig).to_string())
                    .collect();
                format!("{} -> {}", r.mother.display(sig), ds.join(" "))
            })
            .collect();
        assert_eq!(shown, vec!["NP -> Det *np N", "*np -> A", "*np -> *np A"]);
        assert!(e.rules().iter().all(|r| r.label() == "np"));
        assert!(!e.has_kleene());
    }

    #[test]
    fn auxiliary_carries_repeated_variables() {
        let g = Grammar::parse(
            "atoms sg ; cat NP/1 C/1 ; start NP ; rule co : NP(X) -> NP(X) C(X)* ; word a : NP(sg) ; word b : C(Y) ;",
        )
        .unwrap();
        let (e, map) = expand_kleene(&g);
        let (aux, info) = map.iter().next().unwrap();
        assert_eq!(info.rule, "co");
        assert_eq!(info.daughter, 1);
        assert_eq!(e.signature().arity(aux), 1);
        assert_eq!(e.signature().id(), g.signature().id());
    }

    #[test]
    fn idempotent_on_expanded_grammar() {
        let g = Grammar::parse(NP).unwrap();
        let (once, _) = expand_kleene(&g);
        let (twice, map) = expand_kleene(&once);
        assert!(map.is_empty());
        assert_eq!(once.rules(), twice.rules());
    }
}
