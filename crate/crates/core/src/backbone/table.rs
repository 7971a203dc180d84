//! Parse tables: LALR(1) for the GLR engine and the compiled-Earley table
//! with one-word lookahead for the CE engine, plus their textual dump.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write;

use thiserror::Error;

use super::lalr::{lalr_lookaheads, lr0, Cfg, Item};
use super::{BackboneGrammar, ProdId, StateId, SymId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Lookahead {
    Sym(SymId),
    Eof,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Action {
    Shift(StateId),
    Reduce(ProdId),
    Accept,
    /// Compiled-Earley prediction of the initial state of a production.
    Predict(StateId),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Flavor {
    Lalr1,
    CeLalr1,
}

impl Flavor {
    fn name(self) -> &'static str {
        match self {
            Flavor::Lalr1 => "lalr1",
            Flavor::CeLalr1 => "ce-lalr1",
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum TableError {
    #[error("table dump line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("unsupported table dump version `{0}`")]
    Version(String),
}

/// A possibly non-deterministic parse table. Conflicting actions are kept
/// together in one action set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseTable {
    flavor: Flavor,
    fingerprint: u64,
    production_count: usize,
    /// Kernel items per state; item productions at or past
    /// `production_count` are augmented start productions.
    items: Vec<Vec<Item>>,
    actions: BTreeMap<(StateId, Lookahead), Vec<Action>>,
    gotos: BTreeMap<(StateId, SymId), StateId>,
}

impl ParseTable {
    pub fn flavor(&self) -> Flavor {
        self.flavor
    }

    /// Fingerprint of the backbone grammar the table was built from.
    pub fn fingerprint(&self) -> u64 {
        self.fingerprint
    }

    pub fn state_count(&self) -> usize {
        self.items.len()
    }

    pub fn production_count(&self) -> usize {
        self.production_count
    }

    pub fn items(&self, s: StateId) -> &[(ProdId, usize)] {
        &self.items[s]
    }

    pub fn actions(&self, s: StateId, la: Lookahead) -> &[Action] {
        self.actions.get(&(s, la)).map_or(&[], Vec::as_slice)
    }

    /// Successor state on a symbol, whether shifted or reduced to.
    pub fn goto(&self, s: StateId, sym: SymId) -> Option<StateId> {
        self.gotos.get(&(s, sym)).copied()
    }

    pub fn action_sets(&self) -> impl Iterator<Item = ((StateId, Lookahead), &[Action])> {
        self.actions.iter().map(|(k, v)| (*k, v.as_slice()))
    }

    /// Number of (state, lookahead) cells with more than one shift, reduce
    /// or accept action.
    pub fn conflict_count(&self) -> usize {
        self.actions
            .values()
            .filter(|acts| {
                acts.iter()
                    .filter(|a| !matches!(a, Action::Predict(_)))
                    .count()
                    > 1
            })
            .count()
    }

    /// The dotted production of a compiled-Earley state (not the start or
    /// accept state).
    pub fn ce_item(&self, s: StateId) -> Option<(ProdId, usize)> {
        match (self.flavor, self.items.get(s)) {
            (Flavor::CeLalr1, Some(items)) if s >= 2 => items.first().copied(),
            _ => None,
        }
    }

    /// Deterministic textual form: identical tables give identical bytes.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "ptable v1");
        let _ = writeln!(out, "flavor {}", self.flavor.name());
        let _ = writeln!(out, "fingerprint {:016x}", self.fingerprint);
        let _ = writeln!(out, "productions {}", self.production_count);
        let _ = writeln!(out, "states {}", self.items.len());
        for (s, items) in self.items.iter().enumerate() {
            let _ = write!(out, "state {s}");
            for (p, d) in items {
                let _ = write!(out, " {p}.{d}");
            }
            out.push('\n');
        }
        for ((s, la), acts) in &self.actions {
            let _ = write!(out, "action {s} {}", la_name(*la));
            for a in acts {
                let _ = match a {
                    Action::Shift(t) => write!(out, " s{t}"),
                    Action::Reduce(p) => write!(out, " r{p}"),
                    Action::Accept => write!(out, " acc"),
                    Action::Predict(t) => write!(out, " p{t}"),
                };
            }
            out.push('\n');
        }
        for ((s, x), t) in &self.gotos {
            let _ = writeln!(out, "goto {s} {x} {t}");
        }
        out.push_str("end\n");
        out
    }

    pub fn load(text: &str) -> Result<ParseTable, TableError> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
        let bad = |line: usize, msg: &str| TableError::Syntax {
            line,
            msg: msg.to_string(),
        };
        match lines.next() {
            Some((_, "ptable v1")) => {}
            Some((_, other)) => return Err(TableError::Version(other.to_string())),
            None => return Err(bad(1, "empty dump")),
        }
        let mut table = ParseTable {
            flavor: Flavor::Lalr1,
            fingerprint: 0,
            production_count: 0,
            items: Vec::new(),
            actions: BTreeMap::new(),
            gotos: BTreeMap::new(),
        };
        let num = |line: usize, s: &str| {
            s.parse::<usize>()
                .map_err(|_| bad(line, "expected a number"))
        };
        let mut ended = false;
        for (line, l) in lines {
            let f: Vec<&str> = l.split_whitespace().collect();
            match f.as_slice() {
                [] => {}
                ["flavor", "lalr1"] => table.flavor = Flavor::Lalr1,
                ["flavor", "ce-lalr1"] => table.flavor = Flavor::CeLalr1,
                ["fingerprint", h] => {
                    table.fingerprint =
                        u64::from_str_radix(h, 16).map_err(|_| bad(line, "bad fingerprint"))?
                }
                ["productions", n] => table.production_count = num(line, n)?,
                ["states", n] => table.items = vec![Vec::new(); num(line, n)?],
                ["state", s, items @ ..] => {
                    let s = num(line, s)?;
                    let mut parsed = Vec::new();
                    for it in items {
                        let (p, d) = it.split_once('.').ok_or_else(|| bad(line, "bad item"))?;
                        parsed.push((num(line, p)?, num(line, d)?));
                    }
                    *table
                        .items
                        .get_mut(s)
                        .ok_or_else(|| bad(line, "state out of range"))? = parsed;
                }
                ["action", s, la, acts @ ..] => {
                    let s = num(line, s)?;
                    let la = if *la == "$" {
                        Lookahead::Eof
                    } else {
                        Lookahead::Sym(num(line, la)?)
                    };
                    let mut parsed = Vec::new();
                    for a in acts {
                        parsed.push(match *a {
                            "acc" => Action::Accept,
                            _ if a.starts_with('s') => Action::Shift(num(line, &a[1..])?),
                            _ if a.starts_with('r') => Action::Reduce(num(line, &a[1..])?),
                            _ if a.starts_with('p') => Action::Predict(num(line, &a[1..])?),
                            _ => return Err(bad(line, "bad action")),
                        });
                    }
                    table.actions.insert((s, la), parsed);
                }
                ["goto", s, x, t] => {
                    table
                        .gotos
                        .insert((num(line, s)?, num(line, x)?), num(line, t)?);
                }
                ["end"] => ended = true,
                _ => return Err(bad(line, "unrecognized line")),
            }
        }
        if !ended {
            return Err(bad(text.lines().count(), "missing `end`"));
        }
        Ok(table)
    }
}

fn la_name(la: Lookahead) -> String {
    match la {
        Lookahead::Sym(s) => s.to_string(),
        Lookahead::Eof => "$".to_string(),
    }
}

fn push_action(
    map: &mut BTreeMap<(StateId, Lookahead), Vec<Action>>,
    key: (StateId, Lookahead),
    a: Action,
) {
    let acts = map.entry(key).or_default();
    if let Err(i) = acts.binary_search(&a) {
        acts.insert(i, a);
    }
}

pub fn build_lalr1(bg: &BackboneGrammar) -> ParseTable {
    let cfg = Cfg::new(bg);
    let auto = lr0(&cfg);
    let la = lalr_lookaheads(&cfg, &auto);
    let base = cfg.base();
    let mut actions = BTreeMap::new();
    let mut gotos = BTreeMap::new();
    for (s, trans) in auto.trans.iter().enumerate() {
        for (&x, &t) in trans {
            gotos.insert((s, x), t);
            if bg.is_terminal(x) {
                push_action(&mut actions, (s, Lookahead::Sym(x)), Action::Shift(t));
            }
        }
        for (ki, &(p, d)) in auto.kernels[s].iter().enumerate() {
            if d < cfg.rhs(p).len() {
                continue;
            }
            for &a in &la[s][ki] {
                let act = if p < base {
                    Action::Reduce(p)
                } else {
                    Action::Accept
                };
                if p >= base && a != Lookahead::Eof {
                    continue;
                }
                push_action(&mut actions, (s, a), act);
            }
        }
    }
    ParseTable {
        flavor: Flavor::Lalr1,
        fingerprint: bg.fingerprint(),
        production_count: base,
        items: auto.kernels,
        actions,
        gotos,
    }
}

/// One state per dotted production plus a start and an accept state.
/// Prediction is compiled into `Predict` actions keyed by the next word's
/// terminal, and completed productions reduce under the union of their
/// LALR(1) lookaheads.
pub fn build_ce_table(bg: &BackboneGrammar) -> ParseTable {
    let cfg = Cfg::new(bg);
    let auto = lr0(&cfg);
    let la = lalr_lookaheads(&cfg, &auto);
    let first = cfg.first_sets();
    let base = cfg.base();

    let mut reduce_la: Vec<BTreeSet<_>> = vec![BTreeSet::new(); base];
    for (s, kernel) in auto.kernels.iter().enumerate() {
        for (ki, &(p, d)) in kernel.iter().enumerate() {
            if p < base && d == cfg.rhs(p).len() {
                reduce_la[p].extend(la[s][ki].iter().copied());
            }
        }
    }

    let mut offset = Vec::with_capacity(base);
    let mut items: Vec<Vec<Item>> = vec![
        cfg.aug_items(),
        cfg.aug_items().iter().map(|&(p, _)| (p, 1)).collect(),
    ];
    for p in 0..base {
        offset.push(items.len());
        for d in 0..=cfg.rhs(p).len() {
            items.push(vec![(p, d)]);
        }
    }
    let state = |p: ProdId, d: usize| offset[p] + d;

    // Productions predicted, transitively through first daughters, when
    // each symbol is expected.
    let mut predicted: BTreeMap<SymId, BTreeSet<ProdId>> = BTreeMap::new();
    let mut predict = |x: SymId| -> BTreeSet<ProdId> {
        if let Some(s) = predicted.get(&x) {
            return s.clone();
        }
        let mut set = BTreeSet::new();
        let mut work = vec![x];
        let mut seen = BTreeSet::from([x]);
        while let Some(y) = work.pop() {
            for &q in bg.productions_of(y) {
                set.insert(q);
                let z = bg.production(q).rhs[0];
                if seen.insert(z) {
                    work.push(z);
                }
            }
        }
        predicted.insert(x, set.clone());
        set
    };

    let mut actions = BTreeMap::new();
    let mut gotos = BTreeMap::new();
    let mut add_predictions = |actions: &mut BTreeMap<_, _>, from: StateId, expected: &[SymId]| {
        for &x in expected {
            for q in predict(x) {
                for &t in &first[bg.production(q).rhs[0]] {
                    push_action(
                        actions,
                        (from, Lookahead::Sym(t)),
                        Action::Predict(state(q, 0)),
                    );
                }
            }
        }
    };
    for &s in bg.start_symbols() {
        gotos.insert((0, s), 1);
        if bg.is_terminal(s) {
            push_action(&mut actions, (0, Lookahead::Sym(s)), Action::Shift(1));
        }
    }
    add_predictions(&mut actions, 0, bg.start_symbols());
    push_action(&mut actions, (1, Lookahead::Eof), Action::Accept);
    for (p, las) in reduce_la.iter().enumerate().take(base) {
        let rhs = cfg.rhs(p);
        for (d, &x) in rhs.iter().enumerate() {
            let from = state(p, d);
            gotos.insert((from, x), state(p, d + 1));
            if bg.is_terminal(x) {
                push_action(
                    &mut actions,
                    (from, Lookahead::Sym(x)),
                    Action::Shift(state(p, d + 1)),
                );
            }
            add_predictions(&mut actions, from, &[x]);
        }
        for &a in las {
            push_action(&mut actions, (state(p, rhs.len()), a), Action::Reduce(p));
        }
    }
    ParseTable {
        flavor: Flavor::CeLalr1,
        fingerprint: bg.fingerprint(),
        production_count: base,
        items,
        actions,
        gotos,
    }
}

#[cfg(test)]
mod tests {
    use super::super::{extract_backbone, BackboneSpec};
    use super::*;
    use crate::grammar::Grammar;

    fn backbone(text: &str) -> BackboneGrammar {
        extract_backbone(&Grammar::parse(text).unwrap(), &BackboneSpec::new()).unwrap()
    }

    /// Item sets for {S -> a}: I0 = {S' -> .S, S -> .a}, I1 = {S' -> S.},
    /// I2 = {S -> a.}.
    #[test]
    fn single_terminal_rule() {
        let bg = backbone("cat S/0 A/0 ; start S ; rule r : S -> A ; word a : A ;");
        let (s, a) = (0, 1);
        assert_eq!(bg.symbol_name(a), "A");
        let t = build_lalr1(&bg);
        assert_eq!(t.state_count(), 3);
        assert_eq!(t.actions(0, Lookahead::Sym(a)), &[Action::Shift(2)]);
        assert_eq!(t.goto(0, s), Some(1));
        assert_eq!(t.actions(2, Lookahead::Eof), &[Action::Reduce(0)]);
        assert_eq!(t.actions(1, Lookahead::Eof), &[Action::Accept]);
        assert_eq!(t.conflict_count(), 0);

        let ce = build_ce_table(&bg);
        assert_eq!(ce.state_count(), 4);
        assert!(ce.state_count() <= bg.ce_state_bound());
        assert_eq!(ce.actions(0, Lookahead::Sym(a)), &[Action::Predict(2)]);
        assert_eq!(ce.actions(2, Lookahead::Sym(a)), &[Action::Shift(3)]);
        assert_eq!(ce.actions(3, Lookahead::Eof), &[Action::Reduce(0)]);
        assert_eq!(ce.ce_item(3), Some((0, 1)));
    }

    /// {S -> S S, S -> a}: after `S S` the state holds both S -> S S. and
    /// S -> S . S, so lookahead `a` both shifts and reduces.
    #[test]
    fn ambiguous_grammar_keeps_conflicts() {
        let bg = backbone(
            "cat S/0 A/0 ; start S ; rule ss : S -> S S ; rule sa : S -> A ; word a : A ;",
        );
        let t = build_lalr1(&bg);
        let a = 1;
        let conflicted: Vec<&[Action]> = t
            .action_sets()
            .filter(|((_, la), acts)| *la == Lookahead::Sym(a) && acts.len() == 2)
            .map(|(_, acts)| acts)
            .collect();
        assert!(!conflicted.is_empty());
        assert!(conflicted
            .iter()
            .all(|acts| matches!(acts, [Action::Shift(_), Action::Reduce(0)])));
    }

    #[test]
    fn dump_round_trip_and_determinism() {
        let text = "cat S/0 A/0 B/0 ; start S ; rule r : S -> A B ; rule q : S -> S A ; word a : A ; word b : B ;";
        for build in [
            build_lalr1 as fn(&BackboneGrammar) -> ParseTable,
            build_ce_table,
        ] {
            let d1 = build(&backbone(text)).dump();
            let d2 = build(&backbone(text)).dump();
            assert_eq!(d1, d2);
            let loaded = ParseTable::load(&d1).unwrap();
            assert_eq!(loaded, build(&backbone(text)));
            assert_eq!(loaded.dump(), d1);
        }
        assert_eq!(
            ParseTable::load("ptable v9\n"),
            Err(TableError::Version("ptable v9".into()))
        );
        assert!(ParseTable::load("ptable v1\nbogus\nend\n").is_err());
    }
}
