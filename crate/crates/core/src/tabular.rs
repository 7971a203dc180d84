//! Setup shared by the table-driven engines.

use crate::backbone::{
    extract_backbone, BackboneError, BackboneGrammar, BackboneSpec, Flavor, Lookahead, ParseTable,
    SymId,
};
use crate::engine::ParseError;
use crate::forest::{DerivationLabel, NodeId, PackedForest};
use crate::grammar::{expand_kleene, Grammar, KleeneMap};
use crate::instance::Instance;

/// Kleene-expanded grammar, its backbone, and per-rule instance templates
/// `[mother, d0, d1, ...]`.
#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    pub grammar: Grammar,
    pub kleene: KleeneMap,
    pub backbone: BackboneGrammar,
    pub templates: Vec<Instance>,
}

impl Compiled {
    pub fn new(g: &Grammar, spec: &BackboneSpec) -> Result<Compiled, BackboneError> {
        let (grammar, kleene) = expand_kleene(g);
        let backbone = extract_backbone(&grammar, spec)?;
        let templates = grammar
            .rules()
            .iter()
            .map(|r| {
                Instance::new(
                    std::iter::once(r.mother.term().clone())
                        .chain(r.daughters.iter().map(|d| d.category.term().clone()))
                        .collect(),
                )
            })
            .collect();
        Ok(Compiled {
            grammar,
            kleene,
            backbone,
            templates,
        })
    }

    pub fn check_table(&self, table: &ParseTable, flavor: Flavor) -> Result<(), ParseError> {
        if table.fingerprint() != self.backbone.fingerprint() || table.flavor() != flavor {
            return Err(ParseError::TableMismatch {
                expected: self.backbone.fingerprint(),
                found: table.fingerprint(),
            });
        }
        Ok(())
    }

    /// Adds every lexical entry to the forest and returns, per position,
    /// the resulting nodes with the terminal symbols they project to.
    pub fn seed_lexical(
        &self,
        forest: &mut PackedForest,
        tokens: &[String],
    ) -> Vec<Vec<(NodeId, Vec<SymId>)>> {
        let mut out = Vec::with_capacity(tokens.len());
        for (p, token) in tokens.iter().enumerate() {
            let entries = self.grammar.lookup(token).unwrap_or_default();
            for (entry, cat) in entries.iter().enumerate() {
                forest
                    .add_node(cat, (p, p + 1), DerivationLabel::Lexical { entry }, &[])
                    .expect("lexical spans are valid");
            }
            let mut nodes: Vec<NodeId> = forest
                .live_nodes()
                .filter(|n| n.span == (p, p + 1))
                .map(|n| n.id)
                .collect();
            nodes.sort_unstable();
            out.push(
                nodes
                    .into_iter()
                    .map(|n| {
                        let syms = self
                            .backbone
                            .symbols_for(forest.category(n))
                            .into_iter()
                            .filter(|&s| self.backbone.is_terminal(s))
                            .collect();
                        (n, syms)
                    })
                    .collect(),
            );
        }
        out
    }
}

/// Lookaheads at position `pos`: the next word's terminals, or end of input.
pub(crate) fn lookaheads(lex: &[Vec<(NodeId, Vec<SymId>)>], pos: usize) -> Vec<Lookahead> {
    match lex.get(pos) {
        None => vec![Lookahead::Eof],
        Some(nodes) => {
            let mut la: Vec<Lookahead> = nodes
                .iter()
                .flat_map(|(_, syms)| syms.iter().map(|&s| Lookahead::Sym(s)))
                .collect();
            la.sort_unstable();
            la.dedup();
            la
        }
    }
}
